"""Horvitz-Thompson estimation under the AP design.

Outcome arguments accept either a mapping from canonical edge to value or a
plain sequence of the component's k outcomes in traversal order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .decomposition import AlternatingComponent, Kind
from .design import (
    AssignmentRealization,
    DesignParams,
    check_assignment,
    check_p,
    joint_probs,
    marginal_probs,
)
from .errors import InvalidAlpha, InvalidK, MissingOutcome

_NEAR_ONE = 1e-3


def _outcome_vector(component: AlternatingComponent, y, selected=None) -> np.ndarray:
    """Outcomes along the component; entries outside ``selected`` are zero and never looked up."""
    if isinstance(y, Mapping) or hasattr(y, "entries"):
        vals = np.zeros(component.k)
        for j, e in enumerate(component.edges):
            if selected is not None and not selected[j]:
                continue
            try:
                vals[j] = y[e]
            except KeyError:
                raise MissingOutcome(e) from None
        return vals
    vals = np.asarray(y, dtype=float)
    if vals.shape != (component.k,):
        raise ValueError(f"expected {component.k} outcomes, got shape {vals.shape}")
    if selected is not None:
        vals = np.where(np.asarray(selected, dtype=bool), vals, 0.0)
    return vals


def ht_weights(component: AlternatingComponent, p: float) -> np.ndarray:
    """Signed inverse selection probabilities: t-edges count +, c-edges count -."""
    return np.asarray(component.signs, dtype=float) / marginal_probs(component.kind, component.k, p)


def gamma_hat(component: AlternatingComponent, w: Sequence[int], y, p: float) -> float:
    w = np.asarray(w, dtype=float)
    vals = _outcome_vector(component, y, selected=w.astype(bool))
    return float(np.dot(w * vals, ht_weights(component, p)))


def gamma_true(component: AlternatingComponent, y) -> float:
    vals = _outcome_vector(component, y)
    return float(np.dot(component.signs, vals))


@dataclass
class EstimateReport:
    tau_hat: float
    gamma_hat: list[float]
    n_normalizer: float
    alpha: float | None = None
    sigma2_hat: float | None = None
    sigma2_i_hat: list[float] = field(default_factory=list)
    ci: tuple[float, float] | None = None
    kinds: list[str] = field(default_factory=list)
    lengths: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tau_hat": self.tau_hat,
            "sigma2_hat": self.sigma2_hat,
            "ci_lo": None if self.ci is None else self.ci[0],
            "ci_hi": None if self.ci is None else self.ci[1],
            "alpha": self.alpha,
            "n": self.n_normalizer,
            "per_component": [
                {
                    "index": i,
                    "k": self.lengths[i],
                    "kind": self.kinds[i],
                    "gamma_hat": g,
                    "sigma2_i_hat": self.sigma2_i_hat[i] if self.sigma2_i_hat else None,
                }
                for i, g in enumerate(self.gamma_hat)
            ],
        }


def ht_estimate(
    components: Sequence[AlternatingComponent],
    assignment: AssignmentRealization,
    y,
    n: float,
    params: DesignParams | None = None,
) -> EstimateReport:
    if n <= 0:
        raise ValueError("normalizer n must be positive")
    params = params or assignment.params
    check_assignment(components, assignment.w)
    gammas = [
        gamma_hat(comp, wi, y, params.p_for(i))
        for i, (comp, wi) in enumerate(zip(components, assignment.w))
    ]
    return EstimateReport(
        tau_hat=math.fsum(gammas) / n,
        gamma_hat=gammas,
        n_normalizer=n,
        kinds=[c.kind.value for c in components],
        lengths=[c.k for c in components],
    )


def _path_cross(vals: np.ndarray, p: float) -> float:
    """sum_{j<q} p^(q-j-1) y_j y_q in linear time."""
    acc = 0.0
    total = 0.0
    for yq in vals:
        total += yq * acc
        acc = p * acc + yq
    return total


def _last_edge_variance_coef(k: int, p: float) -> float:
    return (p * p + 2 * p - p ** (k - 1)) / (1 + p ** (k - 1))


def _last_edge_cov_coefs(k: int, p: float) -> np.ndarray:
    """Signed covariance coefficients between edge j (1..k-1) and the closing edge."""
    j = np.arange(1, k)
    ratio = (1 - (-p) ** (k - 1 - j)) * (1 - (-p) ** (j - 1)) / (1 + p ** (k - 1))
    return (-1.0) ** j * (ratio - 1)


def variance_exact(component: AlternatingComponent, y, p: float) -> float:
    """Var of the component's HT term; needs every outcome on the component."""
    p = check_p(p)
    vals = _outcome_vector(component, y)
    k = component.k
    if component.kind is Kind.PATH:
        if k == 1 and p == 1.0:
            return 0.0
        return float(np.sum(vals**2) / p + 2 * _path_cross(vals, p))
    head = vals[:-1]
    last = vals[-1]
    out = np.sum(head**2) / p + 2 * _path_cross(head, p)
    out += _last_edge_variance_coef(k, p) * last**2
    out += 2 * last * float(np.dot(_last_edge_cov_coefs(k, p), head))
    return float(out)


def _check_k(kind: Kind, k: int) -> None:
    if kind is Kind.PATH and k < 1:
        raise InvalidK(f"path length must be >= 1, got {k}")
    if kind is Kind.CYCLE and (k < 4 or k % 2):
        raise InvalidK(f"cycle length must be even and >= 4, got {k}")


def _path_worst(k: int, p: float) -> float:
    if 1 - p < _NEAR_ONE:
        m = np.arange(k - 1)
        return k / p + 2 * float(np.sum((k - 1 - m) * p**m))
    return (1 / p + 2 / (1 - p)) * k + 2 * (p**k - 1) / (1 - p) ** 2


def _cycle_closing_worst(k: int, p: float) -> float:
    if 1 - p < _NEAR_ONE:
        j = np.arange(1, k)
        pos = (p ** (j - 1) + p ** (k - 1 - j) + (-1.0) ** j * p ** (k - 2) - (-1.0) ** j * p ** (k - 1))
        return _last_edge_variance_coef(k, p) + 2 * float(np.sum(pos)) / (1 + p ** (k - 1))
    num = 4 + 2 * p - p**2 - p**3 - p ** (k - 2) * (2 + p + p**2)
    return num / ((1 - p) * (1 + p ** (k - 1)))


def worst_case_variance(kind: Kind | str, k: int, p: float, bound: float = 1.0) -> float:
    """Largest component variance over outcomes in [0, bound]; attained at y == bound."""
    kind = Kind(kind)
    _check_k(kind, k)
    p = check_p(p)
    b2 = bound * bound
    if p == 1.0:
        if kind is Kind.PATH and k == 1:
            return 0.0
        return k * k * b2
    if kind is Kind.PATH:
        return b2 * _path_worst(k, p)
    return b2 * (_path_worst(k - 1, p) + _cycle_closing_worst(k, p))


def asymptotic_variance_per_edge(p: float, bound: float = 1.0) -> float:
    return bound * bound * (1 + p) / (p * (1 - p))


def bound_coefficients(kind: Kind, k: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of the observable variance upper bound.

    Returns ``(diag, cross)`` with bound = sum diag_j y_j^2 + sum_{j<q} cross_jq y_j y_q;
    ``cross`` is strictly upper triangular and already holds the factor 2.
    Adjacent pairs, which are never observed together, are absorbed into
    the squared terms.
    """
    p = check_p(p)
    idx = np.arange(k)
    gap = idx[None, :] - idx[:, None]
    cross = np.where(gap >= 2, 2.0 * p ** np.clip(gap - 1, 0, None), 0.0)
    if kind is Kind.PATH:
        diag = np.full(k, 1 / p + 1)
        diag[1 : k - 1] += 1
        return diag, cross
    diag = np.full(k, 1 / p + 2)
    diag[-1] = _last_edge_variance_coef(k, p) + 2
    cross[:, -1] = 0.0
    # only edges 2..k-2 keep their covariance with the closing edge
    cov = _last_edge_cov_coefs(k, p)
    cross[1 : k - 2, -1] = 2 * cov[1 : k - 2]
    return diag, cross


def variance_bound(component: AlternatingComponent, y, p: float) -> float:
    """The conservative bound itself, computed from full outcomes (oracle use)."""
    if component.kind is Kind.PATH and component.k == 1 and check_p(p) == 1.0:
        return 0.0
    vals = _outcome_vector(component, y)
    diag, cross = bound_coefficients(component.kind, component.k, p)
    return float(diag @ vals**2 + vals @ cross @ vals)


def estimator_coefficients(kind: Kind, k: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Bound coefficients divided by the matching selection probabilities.

    Pairs that can never be co-selected get weight zero.
    """
    diag, cross = bound_coefficients(kind, k, p)
    if kind is Kind.PATH and k == 1 and p == 1.0:
        return np.zeros(1), np.zeros((1, 1))
    joint = joint_probs(kind, k, p)
    diag = diag / np.diag(joint)
    tiny = joint < 1e-300
    cross = np.where(tiny | (cross == 0), 0.0, cross / np.where(tiny, 1.0, joint))
    return diag, cross


def sigma2_component_hat(component: AlternatingComponent, w: Sequence[int], y, p: float) -> float:
    w = np.asarray(w, dtype=float)
    vals = _outcome_vector(component, y, selected=w.astype(bool)) * w
    diag, cross = estimator_coefficients(component.kind, component.k, check_p(p))
    return float(diag @ vals**2 + vals @ cross @ vals)


def variance_bound_estimate(
    components: Sequence[AlternatingComponent],
    assignment: AssignmentRealization,
    y,
    n: float,
    params: DesignParams | None = None,
) -> tuple[float, list[float]]:
    """Estimated variance bound of the ATE estimate, plus the per-component terms."""
    params = params or assignment.params
    check_assignment(components, assignment.w)
    per = [
        sigma2_component_hat(comp, wi, y, params.p_for(i))
        for i, (comp, wi) in enumerate(zip(components, assignment.w))
    ]
    return math.fsum(per) / (n * n), per


def confidence_interval(tau_hat: float, sigma2_hat: float, alpha: float = 0.95) -> tuple[float, float]:
    """Two-sided normal interval with coverage level ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha}")
    if sigma2_hat < 0:
        raise ValueError("variance estimate must be non-negative")
    half = stats.norm.ppf((1 + alpha) / 2) * math.sqrt(sigma2_hat)
    return tau_hat - half, tau_hat + half


def estimate(
    components: Sequence[AlternatingComponent],
    assignment: AssignmentRealization,
    y,
    n: float,
    alpha: float = 0.95,
) -> EstimateReport:
    """Point estimate, variance bound estimate and interval in one report."""
    report = ht_estimate(components, assignment, y, n)
    sigma2, per = variance_bound_estimate(components, assignment, y, n)
    report.sigma2_hat = sigma2
    report.sigma2_i_hat = per
    report.alpha = alpha
    report.ci = confidence_interval(report.tau_hat, sigma2, alpha)
    return report


def naive_estimate(picked_treatment: bool, ybar_t: float, ybar_c: float) -> float:
    return 2 * ybar_t if picked_treatment else -2 * ybar_c


def naive_variance(ybar_t: float, ybar_c: float) -> float:
    return (ybar_t + ybar_c) ** 2
