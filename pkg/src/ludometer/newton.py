"""Ridge-penalized maximum likelihood for the two-player probit model with ties.

The objective is

    sum_i log P(O_i = o_i | s, t)  -  lam_eff * ||s||^2

where each match contributes through the skill difference ``u = s_first -
s_second``. Newton-Raphson runs on ``[s; t]`` with analytic derivatives, a
step-halving line search and reflection of ``t`` at zero.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg
from scipy.special import log_ndtr, ndtri

from .exceptions import ConnectivityError, DomainError, FitDivergenceError, SeparationError
from .luck import LuckReport, ell2_from_skills, luck_from_fit
from .model import INV_SQRT2, MatchSet, Population, SkillState

logger = logging.getLogger(__name__)

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

#: Multipliers turning the user-facing ``lam`` into the coefficient of ``||s||^2``.
#: "objective" penalizes exactly ``lam * ||s||^2``; "gradient" matches a
#: gradient written as ``-lam * s`` (i.e. ``lam/2``); "printed" additionally
#: drops the ``1/sqrt(2)`` chain-rule factor of the likelihood gradient.
LAMBDA_CONVENTIONS = {
    "objective": 1.0,
    "gradient": 0.5,
    "printed": 0.5 * INV_SQRT2,
}

DENSE_LIMIT = 3000


# ---------------------------------------------------------------------------
# design and graph structure


@dataclass(frozen=True)
class SparseDesign:
    """Match design: row ``i`` is ``e_first - e_second``."""

    first: np.ndarray
    second: np.ndarray
    n_cols: int

    @property
    def n_rows(self) -> int:
        return len(self.first)

    @property
    def nnz(self) -> int:
        return 2 * self.n_rows

    def to_sparse(self) -> sparse.csr_matrix:
        n = self.n_rows
        rows = np.concatenate([np.arange(n), np.arange(n)])
        cols = np.concatenate([self.first, self.second])
        vals = np.concatenate([np.ones(n), -np.ones(n)])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, self.n_cols))

    def matvec(self, s: np.ndarray) -> np.ndarray:
        return s[self.first] - s[self.second]

    def rmatvec(self, r: np.ndarray) -> np.ndarray:
        return np.bincount(self.first, r, self.n_cols) - np.bincount(self.second, r, self.n_cols)


def build_design(matches: MatchSet, pop: Population) -> SparseDesign:
    if matches.max_index >= pop.size:
        from .exceptions import IngestError

        raise IngestError(f"match refers to player index {matches.max_index} outside population of {pop.size}")
    return SparseDesign(matches.first, matches.second, pop.size)


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int):
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]


@dataclass(frozen=True)
class ConnectivityReport:
    K: int
    membership: np.ndarray
    isolated: list

    @property
    def rank_deficiency(self) -> int:
        return self.K

    def component_sizes(self) -> np.ndarray:
        return np.bincount(self.membership, minlength=self.K)

    def as_dict(self) -> dict:
        return {
            "K": self.K,
            "component_sizes": self.component_sizes().tolist(),
            "isolated": list(self.isolated),
        }


def connectivity(matches: MatchSet, pop: Population) -> ConnectivityReport:
    """Connected components of the graph joining players who have met.

    Components are labelled ``0..K-1`` in order of their smallest player index.
    Players with no matches form singleton components.
    """
    uf = UnionFind(pop.size)
    for a, b in zip(matches.first.tolist(), matches.second.tolist()):
        uf.union(a, b)
    roots = [uf.find(i) for i in range(pop.size)]
    labels: dict[int, int] = {}
    membership = np.array([labels.setdefault(r, len(labels)) for r in roots], dtype=np.int64)
    played = matches.counts(pop.size)
    isolated = [pop.labels[i] for i in np.flatnonzero(played == 0)]
    return ConnectivityReport(len(labels), membership, isolated)


def detect_separation(matches: MatchSet, pop: Population) -> list[tuple]:
    """Players whose decided games are all wins or all losses.

    A tie bounds the likelihood, so any tie clears the flag. Returns
    ``(PlayerId, "all-wins" | "all-losses")`` pairs in index order.
    """
    n = pop.size
    wins = np.bincount(matches.first[matches.outcome == 1], minlength=n) + np.bincount(
        matches.second[matches.outcome == -1], minlength=n
    )
    losses = np.bincount(matches.first[matches.outcome == -1], minlength=n) + np.bincount(
        matches.second[matches.outcome == 1], minlength=n
    )
    ties = np.bincount(matches.first[matches.outcome == 0], minlength=n) + np.bincount(
        matches.second[matches.outcome == 0], minlength=n
    )
    flagged = []
    for a in range(n):
        if ties[a] or (wins[a] == 0 and losses[a] == 0):
            continue
        if losses[a] == 0:
            flagged.append((pop.player(a), "all-wins"))
        elif wins[a] == 0:
            flagged.append((pop.player(a), "all-losses"))
    return flagged


# ---------------------------------------------------------------------------
# likelihood pieces


def _log1mexp(x):
    """``log(1 - exp(x))`` for ``x <= 0``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > -math.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def _log_phi(z):
    return -0.5 * z * z - LOG_SQRT_2PI


def _log_tie_mass(eta1, eta2):
    """``log(Phi(eta1) - Phi(eta2))`` for ``eta1 >= eta2``, evaluated in the safer tail."""
    upper = (eta1 + eta2) > 0
    a = np.where(upper, -eta2, eta1)
    b = np.where(upper, -eta1, eta2)
    la, lb = log_ndtr(a), log_ndtr(b)
    with np.errstate(invalid="ignore"):
        return la + _log1mexp(lb - la)


def _observation_terms(u, t, outcome, order=0):
    """Per-match log-likelihood and derivatives w.r.t. ``(u, t)``.

    Returns ``l`` when ``order == 0``, ``(l, gu, gt)`` for ``order == 1``
    and ``(l, gu, gt, huu, hut, htt)`` for ``order == 2``.
    """
    u = np.asarray(u, dtype=float)
    outcome = np.asarray(outcome)
    eta1 = (t - u) * INV_SQRT2
    eta2 = (-t - u) * INV_SQRT2
    l = np.empty_like(u)
    gu = np.zeros_like(u)
    gt = np.zeros_like(u)
    huu = np.zeros_like(u)
    hut = np.zeros_like(u)
    htt = np.zeros_like(u)

    win = outcome == 1
    lose = outcome == -1
    tie = outcome == 0

    if win.any():
        z = -eta1[win]
        lz = log_ndtr(z)
        l[win] = lz
        if order:
            m = np.exp(_log_phi(z) - lz)
            gu[win] = m * INV_SQRT2
            gt[win] = -m * INV_SQRT2
            c = -m * (z + m) * 0.5
            huu[win] = c
            hut[win] = -c
            htt[win] = c
    if lose.any():
        z = eta2[lose]
        lz = log_ndtr(z)
        l[lose] = lz
        if order:
            m = np.exp(_log_phi(z) - lz)
            gu[lose] = -m * INV_SQRT2
            gt[lose] = -m * INV_SQRT2
            c = -m * (z + m) * 0.5
            huu[lose] = c
            hut[lose] = c
            htt[lose] = c
    if tie.any():
        e1, e2 = eta1[tie], eta2[tie]
        ld = _log_tie_mass(e1, e2)
        l[tie] = ld
        if order:
            r1 = np.exp(_log_phi(e1) - ld)
            r2 = np.exp(_log_phi(e2) - ld)
            gu[tie] = (r2 - r1) * INV_SQRT2
            gt[tie] = (r1 + r2) * INV_SQRT2
            h11 = -e1 * r1 - r1 * r1
            h22 = e2 * r2 - r2 * r2
            h12 = r1 * r2
            huu[tie] = 0.5 * (h11 + 2.0 * h12 + h22)
            hut[tie] = 0.5 * (h22 - h11)
            htt[tie] = 0.5 * (h11 - 2.0 * h12 + h22)
    if order == 0:
        return l
    if order == 1:
        return l, gu, gt
    return l, gu, gt, huu, hut, htt


def _effective_lambda(lam: float, convention: str) -> float:
    try:
        return lam * LAMBDA_CONVENTIONS[convention]
    except KeyError:
        raise DomainError(f"unknown lambda convention {convention!r}") from None


def penalized_loglik(s, t, matches: MatchSet, lam: float, lambda_convention: str = "objective") -> float:
    """Log-likelihood of ``matches`` under ``(s, t)`` minus the ridge penalty."""
    if t < 0:
        raise DomainError(f"tie threshold must be non-negative, got {t}")
    if lam < 0:
        raise DomainError(f"lam must be non-negative, got {lam}")
    s = np.asarray(s, dtype=float)
    u = s[matches.first] - s[matches.second]
    ll = float(np.sum(_observation_terms(u, float(t), matches.outcome)))
    return ll - _effective_lambda(lam, lambda_convention) * float(s @ s)


def loglik_gradient(s, t, matches: MatchSet, lam: float, lambda_convention: str = "objective") -> np.ndarray:
    """Gradient of :func:`penalized_loglik` w.r.t. ``[s; t]`` (length A + 1)."""
    s = np.asarray(s, dtype=float)
    design = SparseDesign(matches.first, matches.second, len(s))
    _, gu, gt = _observation_terms(design.matvec(s), float(t), matches.outcome, order=1)
    g = np.empty(len(s) + 1)
    g[:-1] = design.rmatvec(gu) - 2.0 * _effective_lambda(lam, lambda_convention) * s
    g[-1] = gt.sum()
    return g


def loglik_hessian(
    s, t, matches: MatchSet, lam: float, lambda_convention: str = "objective", as_sparse: bool = False
):
    """Hessian of :func:`penalized_loglik` w.r.t. ``[s; t]``.

    The penalty acts on ``s`` only; ``t`` is unpenalized.
    """
    s = np.asarray(s, dtype=float)
    size = len(s)
    design = SparseDesign(matches.first, matches.second, size)
    _, _, _, huu, hut, htt = _observation_terms(design.matvec(s), float(t), matches.outcome, order=2)
    f, g = matches.first, matches.second
    st = design.rmatvec(hut)
    lam_eff = _effective_lambda(lam, lambda_convention)
    rows = np.concatenate([f, g, f, g, np.arange(size), np.arange(size), np.full(size, size), [size]])
    cols = np.concatenate([f, g, g, f, np.full(size, size), np.arange(size), np.arange(size), [size]])
    vals = np.concatenate([huu, huu, -huu, -huu, st, np.full(size, -2.0 * lam_eff), st, [htt.sum()]])
    hess = sparse.coo_matrix((vals, (rows, cols)), shape=(size + 1, size + 1)).tocsc()
    return hess if as_sparse else hess.toarray()


# ---------------------------------------------------------------------------
# Newton-Raphson


@dataclass
class NewtonFitResult:
    skills: SkillState
    lam: float
    converged: bool
    iterations: int
    grad_norm: float
    loglik: float
    penalized_loglik: float
    separation: list = field(default_factory=list)
    tie_free: bool = False
    connectivity: ConnectivityReport | None = None
    objective_path: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    lambda_convention: str = "objective"

    @property
    def ell2(self) -> float:
        return ell2_from_skills(self.skills.s).value

    def luck(self, **kwargs) -> LuckReport:
        return luck_from_fit(self.skills, **kwargs)


def initial_threshold(matches: MatchSet) -> float:
    """Tie threshold reproducing the empirical tie rate when all skills are equal."""
    rate = matches.n_ties / len(matches)
    if rate <= 0:
        return 0.0
    rate = min(rate, 1.0 - 1e-12)
    return math.sqrt(2.0) * float(ndtri((1.0 + rate) / 2.0))


def _newton_direction(hess, grad, use_dense, centering, warn_list):
    """Solve ``(-H) d = g`` for the ascent direction.

    ``centering`` is a list of index arrays; each adds a border row forcing the
    step to sum to zero over that block (needed when the objective is flat
    along shifts of a component).
    """
    neg = -hess
    k = len(centering)
    if k:
        n = neg.shape[0]
        border = sparse.lil_matrix((n, k))
        for j, idx in enumerate(centering):
            border[idx, j] = 1.0
        border = border.tocsc()
        system = sparse.bmat([[sparse.csc_matrix(neg), border], [border.T, None]], format="csc")
        rhs = np.concatenate([grad, np.zeros(k)])
        if use_dense:
            sol = linalg.solve(system.toarray(), rhs, assume_a="sym")
        else:
            sol = splinalg.spsolve(system, rhs)
        return sol[:n]
    if use_dense:
        dense = neg.toarray() if sparse.issparse(neg) else neg
        try:
            factor = linalg.cho_factor(dense, lower=True, check_finite=False)
            return linalg.cho_solve(factor, grad, check_finite=False)
        except linalg.LinAlgError:
            msg = "negative Hessian not positive definite; using pseudo-inverse step"
            warnings.warn(msg, RuntimeWarning, stacklevel=3)
            warn_list.append(msg)
            return np.linalg.pinv(dense, hermitian=True) @ grad
    lu = splinalg.splu(sparse.csc_matrix(neg))
    return lu.solve(grad)


def newton_fit(
    matches: MatchSet,
    pop: Population,
    lam: float = 0.3,
    init: SkillState | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    lambda_convention: str = "objective",
    max_halvings: int = 60,
) -> NewtonFitResult:
    """Maximize the penalized log-likelihood over skills and tie threshold.

    Parameters
    ----------
    matches, pop
        Observed games and the player registry.
    lam
        Ridge coefficient. ``lam == 0`` is accepted only for a connected
        comparison graph without perfectly separated players; skills are then
        constrained to sum to zero.
    init
        Starting point; defaults to zero skills and the threshold matching the
        empirical tie rate.
    tol
        Convergence threshold on the max-norm of the gradient.

    Raises
    ------
    SeparationError
        ``lam == 0`` and some player has only wins or only losses.
    ConnectivityError
        ``lam == 0`` on a disconnected comparison graph.
    FitDivergenceError
        The objective became non-finite.
    """
    if lam < 0:
        raise DomainError(f"lam must be non-negative, got {lam}")
    if len(matches) < 1:
        raise DomainError("need at least one match")
    pop.check()
    design = build_design(matches, pop)
    report = connectivity(matches, pop)
    separation = detect_separation(matches, pop)
    lam_eff = _effective_lambda(lam, lambda_convention)

    centering = []
    if lam == 0:
        if separation:
            names = ", ".join(f"{p.raw} ({kind})" for p, kind in separation[:10])
            raise SeparationError(
                "perfect data separation: the maximum likelihood estimate does not exist "
                f"for {len(separation)} player(s): {names}. Use lam > 0.",
                separation,
            )
        if report.K > 1:
            raise ConnectivityError(
                f"comparison graph has K={report.K} components; the unpenalized fit is not "
                "identified. Use lam > 0.",
                report,
            )
        centering = [np.arange(pop.size)]

    tie_free = matches.n_ties == 0
    if init is None:
        s = np.zeros(pop.size)
        t = initial_threshold(matches)
    else:
        s = np.array(init.s, dtype=float)
        if tie_free:
            t = 0.0
        else:
            t = float(init.t) if init.t > 0 else initial_threshold(matches)
    if lam == 0:
        s -= s.mean()
    n_par = pop.size + (0 if tie_free else 1)
    use_dense = n_par <= DENSE_LIMIT

    def objective(s_, t_):
        u = design.matvec(s_)
        return float(np.sum(_observation_terms(u, t_, matches.outcome))) - lam_eff * float(s_ @ s_)

    f = objective(s, t)
    if not math.isfinite(f):
        raise FitDivergenceError("objective is not finite at the starting point", {"t": t})
    path = [f]
    warn_list: list[str] = []
    converged = False
    grad_norm = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = loglik_gradient(s, t, matches, lam, lambda_convention)
        if tie_free:
            g = g[:-1]
        grad_norm = float(np.max(np.abs(g)))
        if grad_norm <= tol:
            converged = True
            it -= 1
            break
        hess = loglik_hessian(s, t, matches, lam, lambda_convention, as_sparse=True)
        if tie_free:
            hess = hess[:-1, :-1]
        step = _newton_direction(hess, g, use_dense, centering, warn_list)
        if not np.all(np.isfinite(step)):
            raise FitDivergenceError(
                "Newton step is not finite",
                {"iteration": it, "grad_norm": grad_norm, "K": report.K},
            )
        alpha = 1.0
        accepted = False
        # near the optimum the gain drops below the rounding error of f
        slack = 64.0 * np.finfo(float).eps * (abs(f) + 1.0)
        for _ in range(max_halvings):
            s_new = s + alpha * step[: pop.size]
            t_new = t if tie_free else abs(t + alpha * step[-1])
            if np.array_equal(s_new, s) and t_new == t:
                break
            f_new = objective(s_new, t_new)
            if math.isfinite(f_new) and f_new >= f - slack:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # no representable ascent left along the Newton direction
            converged = grad_norm <= tol
            if not converged:
                warn_list.append(f"line search stalled at iteration {it} with gradient max-norm {grad_norm:.3g}")
            break
        s, t, f = s_new, t_new, f_new
        path.append(f)
    else:
        g = loglik_gradient(s, t, matches, lam, lambda_convention)
        if tie_free:
            g = g[:-1]
        grad_norm = float(np.max(np.abs(g)))
        converged = grad_norm <= tol

    if not math.isfinite(f):
        raise FitDivergenceError("objective became non-finite", {"iterations": it, "K": report.K})
    if lam > 0 and separation:
        warn_list.append(f"{len(separation)} perfectly separated player(s); estimates driven by the ridge")
    skills = SkillState(s, t, "probit" if tie_free else "probit-ties")
    return NewtonFitResult(
        skills=skills,
        lam=lam,
        converged=converged,
        iterations=it,
        grad_norm=grad_norm,
        loglik=f + lam_eff * float(s @ s),
        penalized_loglik=f,
        separation=separation,
        tie_free=tie_free,
        connectivity=report,
        objective_path=path,
        warnings=warn_list,
        lambda_convention=lambda_convention,
    )


# ---------------------------------------------------------------------------
# sweeps and cross-validation


@dataclass
class SweepPoint:
    lam: float
    result: NewtonFitResult | None
    ell2: float
    L: float
    error: str | None = None


@dataclass
class LambdaSweepResult:
    points: list

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def ell2(self) -> np.ndarray:
        return np.array([p.ell2 for p in self.points])

    @property
    def luck(self) -> np.ndarray:
        return np.array([p.L for p in self.points])

    def rows(self) -> list[tuple]:
        return [(p.lam, p.ell2, p.L) for p in self.points]


def lambda_sweep(
    matches: MatchSet,
    pop: Population,
    lambdas,
    tol: float = 1e-8,
    max_iter: int = 100,
    lambda_convention: str = "objective",
    with_luck: bool = True,
) -> LambdaSweepResult:
    """Fit along an increasing grid of ridge coefficients, warm-starting each fit.

    Fits that fail are recorded with ``result=None`` and NaN metrics.
    """
    lambdas = np.asarray(lambdas, dtype=float).reshape(-1)
    if lambdas.size == 0:
        raise DomainError("empty lambda grid")
    if np.any(lambdas <= 0):
        raise DomainError("lambda grid must be positive")
    if np.any(np.diff(lambdas) <= 0):
        raise DomainError("lambda grid must be strictly increasing")
    points = []
    init = None
    for lam in lambdas:
        try:
            res = newton_fit(matches, pop, float(lam), init=init, tol=tol, max_iter=max_iter,
                             lambda_convention=lambda_convention)
        except Exception as exc:  # noqa: BLE001 - sweep keeps going by contract
            points.append(SweepPoint(float(lam), None, math.nan, math.nan, str(exc)))
            continue
        init = res.skills
        luck = res.luck().L if with_luck else math.nan
        points.append(SweepPoint(float(lam), res, res.ell2, luck))
    return LambdaSweepResult(points)


def heldout_loglik(skills: SkillState, matches: MatchSet, floor: float = 1e-300) -> np.ndarray:
    """Per-match log-probability of observed outcomes under fitted skills.

    Probabilities are floored so a tie scored by a tie-free fit stays finite.
    """
    u = skills.s[matches.first] - skills.s[matches.second]
    l = _observation_terms(u, skills.t, matches.outcome)
    return np.maximum(l, math.log(floor))


def cv_lambda(
    matches: MatchSet,
    pop: Population,
    lambdas,
    folds: int = 5,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 100,
    lambda_convention: str = "objective",
    threads: int = 1,
) -> tuple[float, dict]:
    """K-fold cross-validation of the ridge coefficient.

    Matches are assigned to folds by a seeded permutation. Players absent from
    a training fold keep skill 0 (the ridge leaves them there). Returns the
    best ``lam`` and a mapping ``lam -> mean held-out log-likelihood per match``;
    ties go to the larger ``lam``. Fold fits may run on ``threads`` threads
    without changing the result.
    """
    if folds < 2:
        raise DomainError("need at least 2 folds")
    lambdas = np.asarray(lambdas, dtype=float).reshape(-1)
    if lambdas.size == 0 or np.any(lambdas <= 0):
        raise DomainError("lambda grid must be non-empty and positive")
    n = len(matches)
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % folds
    if np.any(np.bincount(assignment, minlength=folds) == 0):
        raise DomainError(f"{folds} folds leaves a fold with zero matches")

    def score(lam, k):
        train = matches.subset(assignment != k)
        test = matches.subset(assignment == k)
        res = newton_fit(train, pop, float(lam), tol=tol, max_iter=max_iter, lambda_convention=lambda_convention)
        return float(np.mean(heldout_loglik(res.skills, test)))

    tasks = [(float(lam), k) for lam in lambdas for k in range(folds)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda task: score(*task), tasks))
    else:
        values = [score(*task) for task in tasks]
    per_fold: dict[float, list] = {}
    for (lam, _), value in zip(tasks, values):
        per_fold.setdefault(lam, []).append(value)
    scores = {lam: float(np.mean(v)) for lam, v in per_fold.items()}
    best = max(scores, key=lambda lam: (scores[lam], lam))
    return best, scores
