"""Scikit-learn style wrappers around the fitting functions.

``X`` is an (n_matches, 2) array of player labels and ``y`` the outcome of
each match from the first player's side (+1 win, 0 tie, -1 loss).
``predict_proba`` columns follow ``classes_ == [-1, 0, 1]``. Players
not seen during ``fit`` are given skill 0.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .gibbs import GibbsConfig, run_chains
from .luck import LuckReport, ell2_from_skills, luck_from_fit
from .model import SkillState, tie_outcome_probs
from .newton import newton_fit
from .validation import CLASSES, check_matches, check_outcomes, lookup


class _SkillPredictMixin:
    """Outcome prediction from ``population_``, ``skills_`` and ``threshold_``."""

    def _skill_of(self, index: np.ndarray) -> np.ndarray:
        return np.where(index >= 0, self.skills_[np.maximum(index, 0)], 0.0)

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "skills_")
        first, second = lookup(self.population_, X)
        diff = self._skill_of(first) - self._skill_of(second)
        probs = tie_outcome_probs(diff, self.threshold_)
        # kernel columns are (win, tie, lose); classes_ is (-1, 0, 1)
        return probs[:, ::-1].copy()

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def log_likelihood(self, X, y) -> float:
        """Mean log-probability of the observed outcomes."""
        probs = self.predict_proba(X)
        codes = check_outcomes(y, probs.shape[0])
        picked = probs[np.arange(len(codes)), codes + 1]
        return float(np.mean(np.log(np.maximum(picked, 1e-300))))

    def skill_table(self) -> list[tuple]:
        """``(label, skill)`` pairs in population order."""
        check_is_fitted(self, "skills_")
        return list(zip(self.population_.labels, self.skills_.tolist()))


class PenalizedProbitSkills(_SkillPredictMixin, ClassifierMixin, BaseEstimator):
    """Ridge-penalized probit skill model with a tie threshold.

    Parameters
    ----------
    lam : float, default=0.3
        Ridge coefficient on ``||s||^2``.
    tol : float, default=1e-8
        Gradient max-norm at which Newton iterations stop.
    max_iter : int, default=100
    lambda_convention : {"objective", "gradient", "printed"}, default="objective"
        How ``lam`` is scaled into the penalty; see
        :data:`ludometer.newton.LAMBDA_CONVENTIONS`.

    Attributes
    ----------
    skills_ : ndarray of shape (n_players,)
    threshold_ : float
    population_ : Population
    result_ : NewtonFitResult
    """

    def __init__(self, lam=0.3, tol=1e-8, max_iter=100, lambda_convention="objective"):
        self.lam = lam
        self.tol = tol
        self.max_iter = max_iter
        self.lambda_convention = lambda_convention

    def fit(self, X, y):
        pop, matches = check_matches(X, y)
        result = newton_fit(
            matches, pop, lam=self.lam, tol=self.tol, max_iter=self.max_iter,
            lambda_convention=self.lambda_convention,
        )
        self.population_ = pop
        self.result_ = result
        self.skills_ = result.skills.s.copy()
        self.threshold_ = result.skills.t
        self.classes_ = CLASSES.copy()
        self.n_features_in_ = 2
        return self

    @property
    def ell2_(self) -> float:
        check_is_fitted(self, "skills_")
        return ell2_from_skills(self.skills_).value

    @property
    def luck_(self) -> LuckReport:
        check_is_fitted(self, "skills_")
        return luck_from_fit(SkillState(self.skills_, self.threshold_))


class BayesianSkillVariance(_SkillPredictMixin, ClassifierMixin, BaseEstimator):
    """Hierarchical probit model fitted by Gibbs sampling.

    The headline quantities are the posterior of ``ell2 = 1 / (1 + sigma^2)``
    and of the tie threshold. ``skills_`` is the posterior mean skill vector,
    which drives ``predict_proba`` together with the posterior mean threshold.

    Parameters
    ----------
    a_sigma, b_sigma : float
        Inverse-gamma prior on the skill variance.
    a_p, b_p : float
        Beta prior on the marginal tie probability.
    burn_in, samples, thin : int
    chains : int, default=1
    random_state : int, default=0
    scheme : {"exact", "collapsed"}, default="exact"
    threads : int, default=1
        Chains run concurrently on this many threads; results do not depend on it.
    """

    def __init__(
        self,
        a_sigma=2.0,
        b_sigma=1.0,
        a_p=2.0,
        b_p=5.0,
        burn_in=100,
        samples=250,
        thin=1,
        chains=1,
        random_state=0,
        scheme="exact",
        threads=1,
    ):
        self.a_sigma = a_sigma
        self.b_sigma = b_sigma
        self.a_p = a_p
        self.b_p = b_p
        self.burn_in = burn_in
        self.samples = samples
        self.thin = thin
        self.chains = chains
        self.random_state = random_state
        self.scheme = scheme
        self.threads = threads

    def _config(self) -> GibbsConfig:
        return GibbsConfig(
            a_sigma=self.a_sigma, b_sigma=self.b_sigma, a_p=self.a_p, b_p=self.b_p,
            burn_in=self.burn_in, samples=self.samples, thin=self.thin,
            seed=int(self.random_state), scheme=self.scheme, keep_skills=True,
        )

    def fit(self, X, y):
        pop, matches = check_matches(X, y)
        traces, summary = run_chains(matches, pop, self._config(), chains=self.chains, threads=self.threads)
        self.population_ = pop
        self.traces_ = traces
        self.summary_ = summary
        self.skills_ = np.mean(np.concatenate([tr.skills for tr in traces]), axis=0)
        self.threshold_ = summary.t_mean
        self.ell2_ = summary.ell2_mean
        self.classes_ = CLASSES.copy()
        self.n_features_in_ = 2
        return self
