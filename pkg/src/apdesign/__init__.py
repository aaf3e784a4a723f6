"""Alternating path randomized designs for comparing two matching plans."""

from .decomposition import AlternatingComponent, Kind, Label, decompose_one_to_one
from .design import DesignParams, ap_randomize, joint_probs, marginal_probs, naive_randomize
from .estimation import (
    confidence_interval,
    estimate,
    ht_estimate,
    variance_bound,
    variance_bound_estimate,
    variance_exact,
    worst_case_variance,
)
from .many_to_one import decompose_many_to_one, validate_decomposition
from .matching import DisagreementSet, Matching, Mode, OutcomeTable, ate_ground_truth, build_disagreement
from .optimize import optimize_p
from .simulation import ScenarioSpec, enumerate_oracle, normality_check, run_simulation

__version__ = "0.1.0"
