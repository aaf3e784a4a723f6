"""Monte Carlo harness, exact enumeration oracle and normality diagnostics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy import stats

from .decomposition import AlternatingComponent, Kind, decompose_one_to_one
from .design import (
    INSTANCE_STREAM,
    NAIVE_STREAM,
    OUTCOME_STREAM,
    DesignParams,
    sample_batches,
    stream,
)
from .errors import TooFewSamples, TooLarge
from .estimation import (
    _check_k,
    estimator_coefficients,
    gamma_true,
    ht_weights,
    naive_variance,
    variance_exact,
)
from .many_to_one import decompose_many_to_one
from .matching import Matching, build_disagreement

ORACLE_MAX_K = 20
MIN_NORMALITY_SAMPLES = 100
KS_CRITICAL = 1.63
SURROGATE_NOTE = "synthetic surrogate"


def enumerate_oracle(component, p, k: int | None = None) -> list[tuple[tuple[int, ...], Any]]:
    """Every feasible selection vector with its exact probability.

    ``component`` is an AlternatingComponent or a kind (then pass ``k``).
    Probabilities are products of the sequential conditional rules, so a
    ``Fraction`` p gives exact rationals. Written independently of the
    sampler on purpose.
    """
    if isinstance(component, AlternatingComponent):
        kind, k = component.kind, component.k
    else:
        kind = Kind(component)
    _check_k(kind, k)
    if k > ORACLE_MAX_K:
        raise TooLarge(f"enumeration limited to k <= {ORACLE_MAX_K}, got {k}")
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    one = Fraction(1) if isinstance(p, Fraction) else 1.0
    zero = one - one
    if kind is Kind.PATH and k == 1 and p == 1:
        return [((1,), one)]

    out = []
    free = k - 1 if kind is Kind.CYCLE else k

    def extend(w, prob):
        j = len(w)
        if j == free:
            if kind is Kind.CYCLE:
                w = w + [1 if (w[0] == 0 and w[-1] == 0) else 0]
            out.append((tuple(w), prob))
            return
        if j == 0:
            on = p / (one + p)
        elif w[-1] == 1:
            on = zero
        else:
            on = p
        if on != 0:
            extend(w + [1], prob * on)
        if on != 1:
            extend(w + [0], prob * (one - on))

    extend([], one)
    return out


def oracle_expectation(dist, f):
    """E[f(W)] under an enumerated distribution."""
    terms = [prob * f(np.asarray(w)) for w, prob in dist]
    if terms and isinstance(terms[0], Fraction):
        return sum(terms, Fraction(0))
    return math.fsum(terms)


def oracle_marginals(dist, k: int) -> list:
    return [oracle_expectation(dist, lambda w, j=j: int(w[j])) for j in range(k)]


def oracle_joint(dist, j: int, q: int):
    """P(W_j = W_q = 1), 0-based indices."""
    return oracle_expectation(dist, lambda w: int(w[j] and w[q]))


# -- scenarios ---------------------------------------------------------------


@dataclass
class Instance:
    components: list[AlternatingComponent]
    outcomes: dict
    normalizer: float
    t_edges: list = field(default_factory=list)
    c_edges: list = field(default_factory=list)


def cyclic_shift(n: int) -> tuple[Matching, Matching]:
    """Workers 1..n, jobs n+1..2n; treatment pairs k with its own job, control with the next one."""
    mt = Matching.one_to_one([(k, n + k) for k in range(1, n + 1)])
    mc = Matching.one_to_one([(k, n + (k % n) + 1) for k in range(1, n + 1)])
    return mt, mc


def random_one_to_one(
    rng: np.random.Generator, n_components: int, cycle_fraction: float = 0.5, max_length: int = 6
) -> tuple[Matching, Matching]:
    """Disjoint random alternating paths and cycles laid out on fresh agent ids."""
    t, c = [], []
    next_id = 1
    for _ in range(n_components):
        if max_length >= 4 and rng.random() < cycle_fraction:
            k = 2 * int(rng.integers(2, max_length // 2 + 1))
            verts = list(range(next_id, next_id + k)) + [next_id]
        else:
            k = int(rng.integers(1, max_length + 1))
            verts = list(range(next_id, next_id + k + 1))
        next_id += k + 1
        first_t = bool(rng.random() < 0.5)
        for j, (a, b) in enumerate(zip(verts, verts[1:])):
            (t if (j % 2 == 0) == first_t else c).append((a, b))
    return Matching.one_to_one(t), Matching.one_to_one(c)


def random_many_to_one(
    rng: np.random.Generator,
    n_suppliers: int,
    n_demands: int,
    capacity: int,
    match_rate: float = 0.85,
) -> tuple[Matching, Matching]:
    """Two independent random capacity-feasible assignments of demands to suppliers."""
    suppliers = range(1, n_suppliers + 1)
    demands = range(1, n_demands + 1)

    def plan():
        load = dict.fromkeys(suppliers, 0)
        edges = []
        for j in demands:
            if rng.random() >= match_rate:
                continue
            open_ = [s for s in suppliers if load[s] < capacity]
            if not open_:
                break
            s = open_[int(rng.integers(len(open_)))]
            load[s] += 1
            edges.append((s, j))
        return Matching.many_to_one(edges, capacity, suppliers, demands)

    return plan(), plan()


def _draw_outcomes(model: dict, edges, seed: int, base: Path | None) -> dict:
    kind = model.get("type", "ConstantB")
    bound = float(model.get("bound", 1.0))
    edges = sorted(edges)
    if kind == "ConstantB":
        return {e: bound for e in edges}
    if kind == "UniformOnZeroB":
        rng = stream(seed, OUTCOME_STREAM)
        vals = rng.uniform(0.0, bound, len(edges))
        return dict(zip(edges, (float(v) for v in vals)))
    if kind == "TableFromFile":
        from .io import read_outcomes

        path = Path(model["path"])
        if base is not None and not path.is_absolute():
            path = base / path
        return dict(read_outcomes(path).entries)
    raise ValueError(f"unknown outcome model {kind!r}")


def build_instance(spec: "ScenarioSpec") -> Instance:
    gen = dict(spec.generator)
    kind = gen.get("type")
    rng = stream(spec.seed, INSTANCE_STREAM)
    if kind == "CyclicShift":
        n = int(gen["n"])
        mt, mc = cyclic_shift(n)
        normalizer = float(n)
    elif kind == "RandomOneToOne":
        mt, mc = random_one_to_one(
            rng,
            int(gen["n"]),
            float(gen.get("cycle_fraction", 0.5)),
            int(gen.get("max_length", 6)),
        )
        normalizer = float(max(len(mt.edges), len(mc.edges), 1))
    elif kind == "RandomManyToOne":
        cap = int(gen["capacity"])
        mt, mc = random_many_to_one(rng, int(gen["suppliers"]), int(gen["demands"]), cap)
        normalizer = float(cap * int(gen["suppliers"]))
    elif kind == "FixedComponents":
        from .io import read_components

        path = Path(gen["components"])
        if spec.base_dir is not None and not path.is_absolute():
            path = spec.base_dir / path
        comps = read_components(path).components
        edges = [e for comp in comps for e in comp.edges]
        y = _draw_outcomes(spec.outcome, edges, spec.seed, spec.base_dir)
        t = [e for comp in comps for e, lab in comp.labelled_edges() if lab.value == "T"]
        c = [e for comp in comps for e, lab in comp.labelled_edges() if lab.value == "C"]
        n = float(gen.get("n", max(len(t), len(c), 1)))
        return Instance(comps, y, n, t, c)
    else:
        raise ValueError(f"unknown generator {kind!r}")
    d = build_disagreement(mt, mc)
    comps = decompose_many_to_one(d) if kind == "RandomManyToOne" else decompose_one_to_one(d)
    y = _draw_outcomes(spec.outcome, d.t_edges | d.c_edges, spec.seed, spec.base_dir)
    return Instance(comps, y, normalizer, sorted(d.t_edges), sorted(d.c_edges))


@dataclass
class ScenarioSpec:
    generator: dict
    outcome: dict = field(default_factory=lambda: {"type": "ConstantB", "bound": 1.0})
    p: float = 0.5
    p_map: dict = field(default_factory=dict)
    seed: int = 0
    replications: int = 500
    alpha: float = 0.95
    base_dir: Path | None = None

    def __post_init__(self):
        if int(self.replications) < 1:
            raise ValueError("replications must be >= 1")
        self.replications = int(self.replications)

    @property
    def params(self) -> DesignParams:
        return DesignParams(self.p, self.seed, self.p_map)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "ScenarioSpec":
        known = {"generator", "outcome", "p", "p_map", "seed", "replications", "alpha"}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown scenario keys: {sorted(extra)}")
        raw = dict(raw)
        if "p_map" in raw:
            raw["p_map"] = {int(k): float(v) for k, v in raw["p_map"].items()}
        return cls(base_dir=base_dir, **raw)

    @classmethod
    def from_file(cls, path) -> "ScenarioSpec":
        path = Path(path)
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            raw = tomllib.loads(path.read_text(encoding="utf-8"))
        else:
            raw = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_dict(raw, path.parent)


# -- diagnostics -------------------------------------------------------------


@dataclass
class NormalityResult:
    statistic: float
    threshold: float
    passed: bool
    qq: list[tuple[float, float]]


def normality_check(samples: Sequence[float]) -> NormalityResult:
    """KS distance of the standardized samples from N(0, 1)."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < MIN_NORMALITY_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_NORMALITY_SAMPLES} samples, got {n}")
    sd = x.std(ddof=1)
    z = (x - x.mean()) / sd if sd > 0 else np.zeros(n)
    stat = float(stats.kstest(z, "norm").statistic)
    thr = KS_CRITICAL / math.sqrt(n)
    zs = np.sort(z)
    normal_q = stats.norm.ppf((np.arange(1, n + 1) - 0.5) / n)
    return NormalityResult(stat, thr, stat < thr, list(zip(zs.tolist(), normal_q.tolist())))


@dataclass
class SimReport:
    replications: int
    tau: float
    mean_tau_hat: float
    bias: float
    empirical_variance: float | None
    mean_sigma2_hat: float
    true_variance: float
    ci_coverage: float
    ks_statistic: float | None
    normality_passed: bool | None
    naive_empirical_variance: float | None
    naive_true_variance: float
    n_components: int
    normalizer: float
    note: str = SURROGATE_NOTE
    tau_hat: list[float] = field(default_factory=list, repr=False)
    naive_tau_hat: list[float] = field(default_factory=list, repr=False)
    qq: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = {
            "replications": self.replications,
            "tau": self.tau,
            "mean_tau_hat": self.mean_tau_hat,
            "bias": self.bias,
            "empirical_variance": self.empirical_variance,
            "mean_sigma2_hat": self.mean_sigma2_hat,
            "true_variance": self.true_variance,
            "ci_coverage": self.ci_coverage,
            "ks_statistic": self.ks_statistic,
            "normality_passed": self.normality_passed,
            "naive_empirical_variance": self.naive_empirical_variance,
            "naive_true_variance": self.naive_true_variance,
            "n_components": self.n_components,
            "normalizer": self.normalizer,
            "note": self.note,
        }
        if self.replications == 1:
            out["tau_hat"] = self.tau_hat[0]
            out["undefined"] = ["empirical_variance", "naive_empirical_variance", "ks_statistic"]
        return out


def _component_draws(comp, w, y, p):
    """HT terms and variance-bound estimates for every row of ``w``."""
    vals = np.array([y[e] for e in comp.edges], dtype=float)
    wy = w * vals
    gam = wy @ ht_weights(comp, p)
    diag, cross = estimator_coefficients(comp.kind, comp.k, p)
    sig = (wy**2) @ diag + np.einsum("rj,jq,rq->r", wy, cross, wy)
    return gam, sig


def run_simulation(spec: ScenarioSpec, threads: int = 1) -> SimReport:
    """Repeated AP draws on one instance, compared with the exact moments.

    Component ``i`` reads its own stream and replication ``r`` is row ``r`` of
    that stream, so results do not depend on ``threads``.
    """
    inst = build_instance(spec)
    params = spec.params
    R = spec.replications
    n = inst.normalizer
    y = inst.outcomes
    batches = sample_batches(inst.components, params, R, threads)

    tau_sum = np.zeros(R)
    sig_sum = np.zeros(R)
    true_var = []
    for i, (comp, w) in enumerate(zip(inst.components, batches)):
        p = params.p_for(i)
        gam, sig = _component_draws(comp, w.astype(float), y, p)
        tau_sum += gam
        sig_sum += sig
        true_var.append(variance_exact(comp, y, p))
    tau_hat = tau_sum / n
    sigma2_hat = sig_sum / (n * n)

    tau = math.fsum(gamma_true(c, y) for c in inst.components) / n
    true_variance = math.fsum(true_var) / (n * n)
    z = stats.norm.ppf((1 + spec.alpha) / 2)
    covered = np.abs(tau_hat - tau) <= z * np.sqrt(sigma2_hat)

    ybar_t = math.fsum(y[e] for e in inst.t_edges) / n
    ybar_c = math.fsum(y[e] for e in inst.c_edges) / n
    flips = stream(spec.seed, NAIVE_STREAM).random(R) < 0.5
    naive = np.where(flips, 2 * ybar_t, -2 * ybar_c)

    ks, passed, qq = None, None, []
    if R >= MIN_NORMALITY_SAMPLES:
        res = normality_check(tau_hat)
        ks, passed, qq = res.statistic, res.passed, res.qq

    mean_tau = float(tau_hat.mean())
    return SimReport(
        replications=R,
        tau=tau,
        mean_tau_hat=mean_tau,
        bias=mean_tau - tau,
        empirical_variance=float(tau_hat.var(ddof=1)) if R > 1 else None,
        mean_sigma2_hat=float(sigma2_hat.mean()),
        true_variance=true_variance,
        ci_coverage=float(covered.mean()),
        ks_statistic=ks,
        normality_passed=passed,
        naive_empirical_variance=float(naive.var(ddof=1)) if R > 1 else None,
        naive_true_variance=naive_variance(ybar_t, ybar_c),
        n_components=len(inst.components),
        normalizer=n,
        tau_hat=tau_hat.tolist(),
        naive_tau_hat=naive.tolist(),
        qq=qq,
    )
