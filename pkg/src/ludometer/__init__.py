"""Estimate how much of a game's outcome is luck, from match records."""

from importlib import resources

from .dataio import balance_report, experience_window_filter, load_matches, write_matches
from .estimators import BayesianSkillVariance, PenalizedProbitSkills
from .exceptions import (
    ConnectivityError,
    DomainError,
    FitDivergenceError,
    IngestError,
    LudometerError,
    SamplerError,
    SeparationError,
)
from .gibbs import GibbsConfig, run_chain, run_chains
from .luck import ell2_from_sigma, ell2_from_skills, luck_from_fit, luck_from_marginals
from .model import MatchSet, Population, SkillState, probit_tie_outcome_probs
from .newton import cv_lambda, lambda_sweep, newton_fit
from .synth import SynthSpec, generate

__version__ = "0.1.0"

FIXTURES = {"nhl-synthetic": "nhl_synthetic.csv"}


def fixture_path(name: str = "nhl-synthetic") -> str:
    """Filesystem path of a bundled match file."""
    if name not in FIXTURES:
        raise DomainError(f"unknown fixture {name!r}; available: {', '.join(sorted(FIXTURES))}")
    return str(resources.files(__name__).joinpath("fixtures", FIXTURES[name]))


__all__ = [
    "BayesianSkillVariance",
    "ConnectivityError",
    "DomainError",
    "FitDivergenceError",
    "GibbsConfig",
    "IngestError",
    "LudometerError",
    "MatchSet",
    "PenalizedProbitSkills",
    "Population",
    "SamplerError",
    "SeparationError",
    "SkillState",
    "SynthSpec",
    "balance_report",
    "cv_lambda",
    "ell2_from_sigma",
    "ell2_from_skills",
    "experience_window_filter",
    "fixture_path",
    "generate",
    "lambda_sweep",
    "load_matches",
    "luck_from_fit",
    "luck_from_marginals",
    "newton_fit",
    "probit_tie_outcome_probs",
    "run_chain",
    "run_chains",
    "write_matches",
]
