"""Averaged orbit metrics, almost-period scans and the point classifier.

The averaged distance between a point and its translate is estimated
along a window schedule; almost periods of three strengths (mean /
weyl / bohr) are collected by brute-force scans over a finite range of
translates.  Relative denseness is undecidable from finite data, so the
classifier only ever reports finite-scale evidence, never theorems.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BudgetTooSmall, EmptyShiftRange, MissingSamples
from .folner import (Converged, EstimatorConfig, FolnerSchedule, MeanEstimate,
                     _judge, partial_means, upper_mean)
from .points import PointGen, Track, cylinder_weights

__all__ = [
    "ScanBudget",
    "AlmostPeriodScan",
    "ClassificationReport",
    "averaged_D",
    "averaged_Dn",
    "superlevel_density",
    "almost_period_scan",
    "classify_point",
    "function_almost_periods",
]

KINDS = ("mean", "weyl", "bohr")


@dataclass(frozen=True)
class ScanBudget:
    """Truncations used by every scan; recorded verbatim in all outputs."""

    schedule: FolnerSchedule
    metric_radius: int = 16
    estimator: EstimatorConfig = EstimatorConfig()
    weyl_index: int | None = None        # window index for the uniform mean
    weyl_shift_span: int | None = None   # |s| <= span; default 4 * |B_weyl|
    bohr_horizon: int = 512

    def resolved_weyl_index(self) -> int:
        return self.weyl_index if self.weyl_index is not None else len(self.schedule)

    def resolved_weyl_span(self) -> int:
        if self.weyl_shift_span is not None:
            return self.weyl_shift_span
        _, length = self.schedule.window(self.resolved_weyl_index())
        return 4 * length

    def fingerprint(self) -> dict:
        return {
            "schedule": self.schedule.describe(),
            "metric_radius": self.metric_radius,
            "tail": self.estimator.tail,
            "convergence_tol": self.estimator.convergence_tol,
            "oscillation_threshold": self.estimator.oscillation_threshold,
            "weyl_index": self.resolved_weyl_index(),
            "weyl_shift_span": self.resolved_weyl_span(),
            "bohr_horizon": self.bohr_horizon,
        }


# ---------------------------------------------------------------------------
# averaged metrics along the orbit
# ---------------------------------------------------------------------------


def _self_mismatch(x: PointGen, t: int, s0: int, s1: int,
                   radius: int) -> np.ndarray:
    """d(s.x, (t+s).x) for s in [s0, s1)."""
    w, c = cylinder_weights(radius)
    lo, hi = s0 - radius + min(t, 0), s1 + radius + max(t, 0)
    seq = x.codes(lo, hi)
    a = s0 - radius - lo
    n = (s1 - s0) + 2 * radius
    m = (seq[a:a + n] != seq[a + t:a + t + n]).astype(float)
    return np.convolve(m, w, mode="valid") / c


def averaged_D(x: PointGen, t: int, schedule: FolnerSchedule,
               radius: int = 16,
               config: EstimatorConfig = EstimatorConfig()) -> MeanEstimate:
    """Estimate of the averaged distance between x and t.x.

    Partial n is the average of s -> d(s.x, (t+s).x) over B_n.  Values
    lie in [0, 1]; at t = 0 the track is identically zero.
    """
    lo, hi = schedule.span()
    d = _self_mismatch(x, t, lo, hi, radius)
    return partial_means(Track(lo, d), schedule, config=config)


def averaged_Dn(x: PointGen, t: int, schedule: FolnerSchedule, n: int,
                shifts: tuple[int, int], radius: int = 16) -> tuple[float, int]:
    """Uniform (shift-sup) window average of the same mismatch track.

    Returns the sup over scanned shifts of the average of
    s -> d(s.x, (t+s).x) over B_n + shift, with the achieving shift.
    """
    s_min, s_max = shifts
    if s_max < s_min:
        raise EmptyShiftRange(f"empty shift range {shifts}")
    start, length = schedule.window(n)
    lo, hi = start + s_min, start + s_max + length
    d = _self_mismatch(x, t, lo, hi, radius)
    csum = np.concatenate(([0.0], np.cumsum(d)))
    sums = csum[length:] - csum[:-length]
    idx = int(np.argmax(sums))
    return float(sums[idx] / length), s_min + idx


def superlevel_density(x: PointGen, t: int, delta: float,
                       schedule: FolnerSchedule, radius: int = 16,
                       config: EstimatorConfig = EstimatorConfig()) -> MeanEstimate:
    """Density estimate of {s : d(s.x, (t+s).x) >= delta}."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    lo, hi = schedule.span()
    d = _self_mismatch(x, t, lo, hi, radius)
    return partial_means(Track(lo, (d >= delta).astype(float)),
                         schedule, config=config)


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitProfile:
    """Per-translate distances at one budget: everything a scan needs."""

    t_values: np.ndarray
    mean_tail_max: np.ndarray
    mean_converged: np.ndarray      # bool per t
    weyl_value: np.ndarray
    bohr_value: np.ndarray
    budget: ScanBudget
    saturated: bool = True


def _profile_one(x, t, budget, lo_needed, hi_needed, kinds):
    sched = budget.schedule
    radius = budget.metric_radius
    d = _self_mismatch(x, t, lo_needed, hi_needed, radius)
    csum = np.concatenate(([0.0], np.cumsum(d)))

    def window_sum(a, b):
        return csum[b - lo_needed] - csum[a - lo_needed]

    mean_tail_max, converged, weyl, bohr = np.nan, False, np.nan, np.nan
    if "mean" in kinds:
        tail = budget.estimator.tail
        avgs = np.array([window_sum(s, s + l) / l for s, l in sched.windows])
        verdict, _ = _judge(avgs.astype(complex), float(np.max(d, initial=0.0)),
                            budget.estimator)
        mean_tail_max = float(np.max(avgs[-min(tail, len(avgs)):]))
        converged = isinstance(verdict, Converged)

    if "weyl" in kinds:
        n = budget.resolved_weyl_index()
        span = budget.resolved_weyl_span()
        start, length = sched.window(n)
        seg = d[start - span - lo_needed:start + span + length - lo_needed]
        c2 = np.concatenate(([0.0], np.cumsum(seg)))
        weyl = float(np.max(c2[length:] - c2[:-length]) / length)

    if "bohr" in kinds:
        h = budget.bohr_horizon
        bohr = float(np.max(d[-h - lo_needed:h + 1 - lo_needed]))
    return mean_tail_max, converged, weyl, bohr


def orbit_profile(x: PointGen, t_values, budget: ScanBudget,
                  threads: int = 1, kinds=KINDS) -> OrbitProfile:
    """Mean / weyl / bohr distance summaries for each translate t.

    Kinds not requested are skipped and reported as NaN columns.
    """
    t_values = np.asarray(sorted(int(t) for t in t_values), dtype=np.int64)
    kinds = tuple(kinds)
    sched = budget.schedule
    lo_s, hi_s = sched.span()
    lo_parts, hi_parts = [0], [1]
    if "mean" in kinds:
        lo_parts.append(lo_s)
        hi_parts.append(hi_s)
    if "weyl" in kinds:
        n = budget.resolved_weyl_index()
        span = budget.resolved_weyl_span()
        w_start, w_len = sched.window(n)
        lo_parts.append(w_start - span)
        hi_parts.append(w_start + span + w_len)
    if "bohr" in kinds:
        lo_parts.append(-budget.bohr_horizon)
        hi_parts.append(budget.bohr_horizon + 1)
    lo_needed, hi_needed = min(lo_parts), max(hi_parts)

    def work(t):
        return _profile_one(x, int(t), budget, lo_needed, hi_needed, kinds)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, t_values))
    else:
        rows = [work(t) for t in t_values]

    mean_tm = np.array([r[0] for r in rows])
    conv = np.array([r[1] for r in rows], dtype=bool)
    weyl = np.array([r[2] for r in rows])
    bohr = np.array([r[3] for r in rows])
    return OrbitProfile(t_values, mean_tm, conv, weyl, bohr, budget)


@dataclass(frozen=True)
class AlmostPeriodScan:
    epsilon: float
    kind: str
    scan_range: tuple[int, int]
    periods: tuple[int, ...]
    max_gap: int
    budget_fingerprint: dict
    saturated: bool = True

    def describe(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "kind": self.kind,
            "scan_range": list(self.scan_range),
            "periods": list(self.periods),
            "max_gap": self.max_gap,
            "saturated": self.saturated,
            "budget": self.budget_fingerprint,
        }


def _max_gap(periods, lo, hi) -> int:
    """Largest difference of consecutive periods; range endpoints are sentinels."""
    pts = sorted({lo, hi, *periods})
    return max(b - a for a, b in zip(pts, pts[1:])) if len(pts) > 1 else 0


def _scan_from_profile(profile: OrbitProfile, epsilon: float, kind: str,
                       scan_range: tuple[int, int]) -> AlmostPeriodScan:
    values = {"mean": profile.mean_tail_max,
              "weyl": profile.weyl_value,
              "bohr": profile.bohr_value}[kind]
    mask = values < epsilon
    periods = tuple(int(t) for t in profile.t_values[mask])
    gap = _max_gap(periods, scan_range[0], scan_range[1])
    return AlmostPeriodScan(epsilon, kind, scan_range, periods, gap,
                            profile.budget.fingerprint(), profile.saturated)


def almost_period_scan(x: PointGen, epsilon: float, kind: str,
                       scan_range: tuple[int, int], budget: ScanBudget,
                       threads: int = 1) -> AlmostPeriodScan:
    """All translates t in the range passing the kind's distance test.

    mean: the tail max of the averaged-distance partials stays under
    epsilon.  weyl: the uniform (shift-sup) window average at the
    budget's index stays under epsilon.  bohr: the pointwise sup of
    d(s.x, (t+s).x) over the horizon stays under epsilon.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    lo, hi = scan_range
    if hi < lo:
        raise ValueError("scan range is empty")
    if budget.schedule.largest_length() <= 0:
        raise BudgetTooSmall("schedule has no usable window")
    profile = orbit_profile(x, range(lo, hi + 1), budget, threads=threads,
                            kinds=(kind,))
    return _scan_from_profile(profile, epsilon, kind, scan_range)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

EVIDENCE_FOR = "evidence-for"
EVIDENCE_AGAINST = "evidence-against"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class ClassificationReport:
    scans: dict                      # kind -> {epsilon -> AlmostPeriodScan}
    verdicts: dict                   # kind -> verdict string
    raw_verdicts: dict               # before hierarchy reconciliation
    eps_grid: tuple[float, ...]
    scan_range: tuple[int, int]
    gap_threshold: float
    budget_fingerprint: dict

    def describe(self) -> dict:
        return {
            "eps_grid": list(self.eps_grid),
            "scan_range": list(self.scan_range),
            "gap_threshold": self.gap_threshold,
            "verdicts": dict(self.verdicts),
            "raw_verdicts": dict(self.raw_verdicts),
            "scans": {kind: {str(eps): scan.describe()
                             for eps, scan in per.items()}
                      for kind, per in self.scans.items()},
            "budget": self.budget_fingerprint,
        }


def _kind_verdict(per_eps: dict, kind: str, profile: OrbitProfile,
                  scan_range, gap_threshold: float) -> str:
    width = scan_range[1] - scan_range[0]
    if all(scan.max_gap <= gap_threshold * width for scan in per_eps.values()):
        return EVIDENCE_FOR
    converged_majority = bool(np.mean(profile.mean_converged) > 0.5)
    for scan in per_eps.values():
        if scan.periods == (0,) and scan.saturated:
            if kind != "mean" or converged_majority:
                return EVIDENCE_AGAINST
    return UNDECIDED


def classify_point(x: PointGen, eps_grid, budget: ScanBudget,
                   scan_range: tuple[int, int] = (-256, 256),
                   gap_threshold: float = 0.2,
                   threads: int = 1) -> ClassificationReport:
    """Finite-scale almost-periodicity evidence for all three kinds.

    One orbit profile is computed per translate and shared by every
    kind and epsilon.  Verdicts are reconciled with the seminorm
    hierarchy: evidence-for propagates downward from bohr, and
    evidence-against propagates upward from mean, so reported verdicts
    never contradict the ordering of the underlying distances.
    """
    eps_grid = tuple(sorted(float(e) for e in eps_grid))
    if not eps_grid:
        raise ValueError("epsilon grid must be nonempty")
    lo, hi = scan_range
    profile = orbit_profile(x, range(lo, hi + 1), budget, threads=threads)

    scans = {kind: {eps: _scan_from_profile(profile, eps, kind, scan_range)
                    for eps in eps_grid}
             for kind in KINDS}
    raw = {kind: _kind_verdict(scans[kind], kind, profile, scan_range,
                               gap_threshold)
           for kind in KINDS}

    verdicts = dict(raw)
    if verdicts["bohr"] == EVIDENCE_FOR:
        verdicts["weyl"] = EVIDENCE_FOR
    if verdicts["weyl"] == EVIDENCE_FOR:
        verdicts["mean"] = EVIDENCE_FOR
    if verdicts["mean"] == EVIDENCE_AGAINST:
        verdicts["weyl"] = EVIDENCE_AGAINST
    if verdicts["weyl"] == EVIDENCE_AGAINST:
        verdicts["bohr"] = EVIDENCE_AGAINST

    return ClassificationReport(scans, verdicts, raw, eps_grid,
                                tuple(scan_range), gap_threshold,
                                budget.fingerprint())


# ---------------------------------------------------------------------------
# almost periods of sampled functions
# ---------------------------------------------------------------------------


def function_almost_periods(track, epsilon: float, schedule: FolnerSchedule,
                            scan_range: tuple[int, int],
                            tail: int = 5) -> tuple[int, ...]:
    """Translates t with upper mean of |h - h(. - t)| below epsilon.

    ``track`` must cover every window shifted by every scanned t.
    Used for closure experiments on sums and products of sampled
    almost periodic functions.
    """
    lo, hi = scan_range
    s0, s1 = schedule.span()
    values = np.asarray(track.values)
    start = track.start
    a, b = s0 - start, s1 - start
    need_lo, need_hi = min(s0, s0 - hi), max(s1, s1 - lo)
    if need_lo < start:
        raise MissingSamples(need_lo)
    if need_hi > start + len(values):
        raise MissingSamples(start + len(values))
    out = []
    for t in range(lo, hi + 1):
        diff = np.abs(values[a:b] - values[a - t:b - t])
        if upper_mean(Track(s0, diff), schedule, tail=tail) < epsilon:
            out.append(t)
    return tuple(out)
