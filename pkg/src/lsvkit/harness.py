"""Seeded Monte Carlo experiments on the smallest singular value.

Experiment layout: trial t of a run with master seed m draws its matrix
from stream t of m, so every trial is a pure function of (m, t) and the
set of trials can be partitioned across workers arbitrarily without
changing a single value.  Degenerate draws (singular matrices, possible
with positive probability only for rademacher) are resampled from the
reserved substream r * 2**32 + t for resampling round r and counted in
singular_count, never scored.

Estimated quantities:

* upper tail   P(s_n(A) > K / sqrt(n))   expected shape ~ (C/K) log K
* lower tail   P(s_n(A) <= eps / sqrt(n))  expected shape ~ C eps
* scaling      median of sqrt(n) * s_n, stable in n
* distance     tail of dist(X_1, span of other columns), subgaussian

The exponential additive term in the tail bounds is far below Monte
Carlo resolution at the matrix sizes this harness targets, so fits drop
it; fit_tail_model recovers only the leading constant.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ensembles import Ensemble, SeedSpec, sample_matrix
from .errors import (
    EnumerationTooLarge,
    InsufficientData,
    InvalidDimension,
    NumericallyDependent,
)
from .linalg import dist_to_subspace, orthonormalize, smallest_singular_value
from .stats import wilson_interval

RESAMPLE_STRIDE = 1 << 32
_MAX_RESAMPLE_ROUNDS = 64

DIST_THRESHOLDS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)

TAIL_CSV_HEADER = ("ensemble,n,K,direction,trials,exceed_count,"
                   "p_hat,ci_low,ci_high,singular_count,master_seed")

ENUMERATION_BUDGET = 1_000_000


def fmt_g10(x: float) -> str:
    """Canonical 10-significant-digit float rendering for data files."""
    return format(float(x), ".10g")


def _resampled_trial(compute, master_seed: int, trial: int):
    """Run compute(seed) for trial, resampling degenerate draws.

    compute returns None to reject a draw.  Returns (value, rounds
    rejected).  Round r uses stream r * RESAMPLE_STRIDE + trial, so
    resampling never collides with other trials' streams.
    """
    for r in range(_MAX_RESAMPLE_ROUNDS):
        value = compute(SeedSpec(master_seed, r * RESAMPLE_STRIDE + trial))
        if value is not None:
            return value, r
    raise RuntimeError(f"trial {trial}: {_MAX_RESAMPLE_ROUNDS} degenerate draws in a row")


def _parallel_chunks(worker, trials: int, workers: int) -> list:
    """worker(t0, t1) over a fixed partition of range(trials), chunk order kept.

    Values may not depend on the partition; workers only changes how the
    identical per-trial computations are scheduled.
    """
    if workers <= 1 or trials <= 1:
        return [worker(0, trials)]
    chunk = max(1, math.ceil(trials / (workers * 4)))
    ranges = [(s, min(s + chunk, trials)) for s in range(0, trials, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(worker, s, e) for s, e in ranges]
        return [f.result() for f in futures]


def _sn_value(ensemble: Ensemble, n: int):
    def compute(seed: SeedSpec):
        s = smallest_singular_value(sample_matrix(ensemble, n, seed))
        return s if s > 0.0 else None
    return compute


def scaled_sn_samples(ensemble: Ensemble, n: int, trials: int, master_seed: int,
                      workers: int = 1) -> tuple[np.ndarray, int]:
    """sqrt(n) * s_n over trials streams; returns (values by trial, singular_count)."""
    if n < 2:
        raise InvalidDimension(f"n must be >= 2, got {n}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if trials > RESAMPLE_STRIDE:
        raise ValueError("trials must not exceed 2**32 (resample stream layout)")
    compute = _sn_value(ensemble, n)

    def worker(t0: int, t1: int):
        vals = np.empty(t1 - t0)
        sing = 0
        for t in range(t0, t1):
            v, r = _resampled_trial(compute, master_seed, t)
            vals[t - t0] = v
            sing += r
        return vals, sing

    parts = _parallel_chunks(worker, trials, workers)
    values = np.concatenate([p[0] for p in parts]) * np.sqrt(n)
    return values, sum(p[1] for p in parts)


@dataclass(frozen=True)
class TailSweepConfig:
    ensemble: Ensemble
    n_values: tuple[int, ...]
    k_values: tuple[float, ...]
    trials: int
    master_seed: int
    direction: str  # "upper" (s_n > K/sqrt(n)) or "lower" (s_n <= eps/sqrt(n))
    workers: int = 1

    def __post_init__(self):
        if self.direction not in ("upper", "lower"):
            raise ValueError(f"direction must be 'upper' or 'lower', got {self.direction!r}")
        if not self.n_values or not self.k_values:
            raise ValueError("n_values and k_values must be nonempty")
        for n in self.n_values:
            if n < 2:
                raise InvalidDimension(f"n must be >= 2, got {n}")
        for k in self.k_values:
            if k < 0:
                raise ValueError(f"thresholds must be nonnegative, got {k}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass(frozen=True)
class TailEstimate:
    ensemble: str
    n: int
    k: float
    direction: str
    trials: int
    exceed_count: int
    p_hat: float
    ci_low: float
    ci_high: float
    singular_count: int
    master_seed: int

    @property
    def in_guarantee_range(self) -> bool:
        """Upper-tail theory speaks only for K >= 2; smaller K is curve shaping."""
        return self.direction == "lower" or self.k >= 2.0


def run_tail_sweep(cfg: TailSweepConfig) -> list[TailEstimate]:
    """One pass per n; every K threshold is evaluated on the same samples.

    Shared samples make p_hat exactly monotone in the threshold, and the
    upper count at t plus the lower count at t equals trials (ties go to
    the lower tail).
    """
    out: list[TailEstimate] = []
    for n in sorted(set(cfg.n_values)):
        values, singular = scaled_sn_samples(cfg.ensemble, n, cfg.trials,
                                             cfg.master_seed, cfg.workers)
        for k in sorted(set(float(k) for k in cfg.k_values)):
            if cfg.direction == "upper":
                count = int(np.count_nonzero(values > k))
            else:
                count = int(np.count_nonzero(values <= k))
            lo, hi = wilson_interval(count, cfg.trials)
            out.append(TailEstimate(
                ensemble=cfg.ensemble.kind, n=n, k=k, direction=cfg.direction,
                trials=cfg.trials, exceed_count=count, p_hat=count / cfg.trials,
                ci_low=lo, ci_high=hi, singular_count=singular,
                master_seed=cfg.master_seed,
            ))
    return out


def write_tail_csv(estimates: list[TailEstimate], path) -> None:
    """Schema is frozen: exact header below, 10-significant-digit floats,
    rows sorted by (n, K), LF line endings."""
    rows = sorted(estimates, key=lambda e: (e.n, e.k))
    lines = [TAIL_CSV_HEADER]
    for e in rows:
        lines.append(",".join([
            e.ensemble, str(e.n), fmt_g10(e.k), e.direction, str(e.trials),
            str(e.exceed_count), fmt_g10(e.p_hat), fmt_g10(e.ci_low),
            fmt_g10(e.ci_high), str(e.singular_count), str(e.master_seed),
        ]))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ScalingRow:
    n: int
    trials: int
    median_scaled: float
    q1: float
    q3: float
    iqr: float
    singular_count: int


def median_scaling_report(ensemble: Ensemble, n_values, trials: int, master_seed: int,
                          workers: int = 1) -> list[ScalingRow]:
    """Robust per-n statistics of sqrt(n) * s_n (median and quartiles)."""
    rows = []
    for n in sorted(set(n_values)):
        values, singular = scaled_sn_samples(ensemble, n, trials, master_seed, workers)
        q1, med, q3 = (float(q) for q in np.percentile(values, [25.0, 50.0, 75.0]))
        rows.append(ScalingRow(n=n, trials=trials, median_scaled=med,
                               q1=q1, q3=q3, iqr=q3 - q1, singular_count=singular))
    return rows


@dataclass(frozen=True)
class DistanceTailReport:
    ensemble: str
    n: int
    trials: int
    master_seed: int
    samples: np.ndarray
    tail: tuple  # ((u, empirical P(dist > u)), ...) at DIST_THRESHOLDS
    singular_count: int


def distance_tail_experiment(ensemble: Ensemble, n: int, trials: int, master_seed: int,
                             workers: int = 1) -> DistanceTailReport:
    """Sample dist(X_1, span of the other columns) and report its upper tail.

    Draws whose non-distinguished columns are numerically dependent are
    resampled like singular draws in the s_n sweeps.
    """
    if n < 2:
        raise InvalidDimension(f"n must be >= 2, got {n}")
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def compute(seed: SeedSpec):
        m = sample_matrix(ensemble, n, seed)
        try:
            basis = orthonormalize(m[:, 1:])
        except NumericallyDependent:
            return None
        return dist_to_subspace(m[:, 0], basis)

    def worker(t0: int, t1: int):
        vals = np.empty(t1 - t0)
        sing = 0
        for t in range(t0, t1):
            v, r = _resampled_trial(compute, master_seed, t)
            vals[t - t0] = v
            sing += r
        return vals, sing

    parts = _parallel_chunks(worker, trials, workers)
    samples = np.concatenate([p[0] for p in parts])
    tail = tuple((u, float(np.count_nonzero(samples > u)) / trials) for u in DIST_THRESHOLDS)
    return DistanceTailReport(ensemble=ensemble.kind, n=n, trials=trials,
                              master_seed=master_seed, samples=samples, tail=tail,
                              singular_count=sum(p[1] for p in parts))


def check_markov_sum_bound(distribution, n: int, epsilon: float) -> tuple[float, float]:
    """Exact enumeration of P(mean of n i.i.d. Z <= eps) vs 2 * P(Z <= 2 eps).

    distribution is a sequence of (value, probability) pairs with
    nonnegative values summing to probability 1.  Both sides are exact
    sums over the support^n product space; the averaging argument
    guarantees lhs <= rhs, which is re-checked defensively.
    """
    pairs = list(distribution)
    if not pairs:
        raise ValueError("distribution must be nonempty")
    vals = np.array([float(v) for v, _ in pairs])
    probs = np.array([float(p) for _, p in pairs])
    if not np.all(np.isfinite(vals)) or np.any(vals < 0):
        raise ValueError("support values must be finite and nonnegative")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if len(pairs) ** n > ENUMERATION_BUDGET:
        raise EnumerationTooLarge(
            f"support^n = {len(pairs)}^{n} exceeds budget {ENUMERATION_BUDGET}")

    sums = np.zeros(1)
    weights = np.ones(1)
    for _ in range(n):
        sums = (sums[:, None] + vals[None, :]).ravel()
        weights = (weights[:, None] * probs[None, :]).ravel()
    lhs = float(weights[sums <= n * epsilon].sum())
    rhs = float(2.0 * probs[vals <= 2.0 * epsilon].sum())
    if lhs > rhs + 1e-12:
        raise RuntimeError(f"averaged-tail bound violated: lhs={lhs} rhs={rhs}")
    return lhs, rhs


@dataclass(frozen=True)
class TailFitReport:
    direction: str
    n: int
    constant: float
    thresholds: np.ndarray
    observed: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray

    def predict(self, k: float) -> float:
        if self.direction == "upper":
            return self.constant * math.log(k) / k
        return self.constant * k


def fit_tail_model(estimates: list[TailEstimate]) -> TailFitReport:
    """Least-squares constant for the expected tail shape.

    upper: p(K) ~ C log(K)/K over >= 3 distinct positive K;
    lower: p(eps) ~ C eps over >= 2 distinct positive eps.
    The additive exponential term is dropped (unobservably small here),
    so C is the only fitted parameter.
    """
    if not estimates:
        raise InsufficientData("no estimates supplied")
    directions = {e.direction for e in estimates}
    ns = {e.n for e in estimates}
    if len(directions) != 1 or len(ns) != 1:
        raise ValueError("estimates must share one direction and one n")
    direction = directions.pop()
    n = ns.pop()
    pts = sorted({e.k for e in estimates if e.k > 0})
    needed = 3 if direction == "upper" else 2
    if len(pts) < needed:
        raise InsufficientData(
            f"{direction} fit needs >= {needed} distinct positive thresholds, got {len(pts)}")
    by_k = {}
    for e in estimates:
        if e.k > 0:
            by_k.setdefault(e.k, []).append(e.p_hat)
    ks = np.array(pts)
    p = np.array([float(np.mean(by_k[k])) for k in pts])
    basis = np.log(ks) / ks if direction == "upper" else ks
    denom = float(basis @ basis)
    if denom == 0.0:
        raise InsufficientData("degenerate design (all basis values zero)")
    c = float(basis @ p) / denom
    fitted = c * basis
    return TailFitReport(direction=direction, n=n, constant=c, thresholds=ks,
                         observed=p, fitted=fitted, residuals=p - fitted)
