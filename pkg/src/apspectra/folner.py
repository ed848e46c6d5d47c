"""Window schedules and averaging estimators on the integers.

Everything downstream averages along a nested family of finite integer
windows.  The estimators here never return bare numbers for limits: they
return the whole trajectory of partial window averages together with a
verdict (converged / oscillating / undecided), so that finite-scale
artifacts stay distinguishable from genuine convergence.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyShiftRange, MissingSamples, NeverBelow

__all__ = [
    "FolnerSchedule",
    "Character",
    "EstimatorConfig",
    "Converged",
    "Oscillating",
    "Undecided",
    "MeanEstimate",
    "AdmissibleSeminorm",
    "StabilizationReport",
    "partial_means",
    "upper_mean",
    "uniform_mean",
    "seminorm_eval",
    "stabilization_check",
    "as_dense",
]


# ---------------------------------------------------------------------------
# schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FolnerSchedule:
    """A nested family of finite integer windows B_1, B_2, ...

    Each window is a half-open interval stored as ``(start, length)``.
    Window lengths must never decrease; every built-in kind except the
    alternating one grows strictly.  The alternating schedule swings
    between right windows ``{0..n}`` (n even) and left windows
    ``{-n..-1}`` (n odd), so consecutive lengths repeat.
    """

    kind: str
    windows: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.windows:
            raise ValueError("schedule needs at least one window")
        lengths = [length for _, length in self.windows]
        if any(length <= 0 for length in lengths):
            raise ValueError("windows must be nonempty")
        strict = self.kind != "alternating"
        for a, b in zip(lengths, lengths[1:]):
            if b < a or (strict and b == a):
                raise ValueError("window lengths must grow with n")

    @classmethod
    def intervals(cls, base: int = 100, n_max: int = 10) -> "FolnerSchedule":
        """B_n = [0, base*n)."""
        if base <= 0 or n_max <= 0:
            raise ValueError("base and n_max must be positive")
        return cls("intervals", tuple((0, base * n) for n in range(1, n_max + 1)))

    @classmethod
    def dyadic(cls, n_max: int = 16) -> "FolnerSchedule":
        """B_n = {1, ..., 2^n}."""
        if n_max <= 0:
            raise ValueError("n_max must be positive")
        return cls("dyadic", tuple((1, 2 ** n) for n in range(1, n_max + 1)))

    @classmethod
    def alternating(cls, n_max: int = 16) -> "FolnerSchedule":
        """B_n = {0..n} for even n, {-n..-1} for odd n."""
        if n_max <= 0:
            raise ValueError("n_max must be positive")
        wins = []
        for n in range(1, n_max + 1):
            if n % 2 == 0:
                wins.append((0, n + 1))
            else:
                wins.append((-n, n))
        return cls("alternating", tuple(wins))

    @classmethod
    def custom(cls, windows) -> "FolnerSchedule":
        return cls("custom", tuple((int(s), int(l)) for s, l in windows))

    def __len__(self) -> int:
        return len(self.windows)

    def window(self, n: int) -> tuple[int, int]:
        """1-based access to B_n."""
        if not 1 <= n <= len(self.windows):
            raise IndexError(f"schedule has no window index {n}")
        return self.windows[n - 1]

    def span(self) -> tuple[int, int]:
        """Smallest half-open interval containing every window."""
        lo = min(s for s, _ in self.windows)
        hi = max(s + l for s, l in self.windows)
        return lo, hi

    def largest_length(self) -> int:
        return max(l for _, l in self.windows)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "n_max": len(self.windows),
            "windows": [list(w) for w in self.windows],
        }


@dataclass(frozen=True)
class Character:
    """A character of the integers, t -> exp(2*pi*i*theta*t)."""

    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % 1.0)

    def __call__(self, t):
        return np.exp(2j * np.pi * self.theta * np.asarray(t, dtype=float))

    def conj_values(self, t0: int, t1: int) -> np.ndarray:
        """conj(xi(t)) for t in [t0, t1)."""
        t = np.arange(t0, t1, dtype=float)
        return np.exp(-2j * np.pi * self.theta * t)


# ---------------------------------------------------------------------------
# mean estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimatorConfig:
    """Knobs for turning a trajectory of partial means into a verdict.

    Tolerances are relative to the sup norm of the averaged samples.
    """

    tail: int = 5
    convergence_tol: float = 1e-3
    oscillation_threshold: float = 0.1


@dataclass(frozen=True)
class Converged:
    limit: complex
    residual: float


@dataclass(frozen=True)
class Oscillating:
    liminf: float
    limsup: float


@dataclass(frozen=True)
class Undecided:
    reason: str = ""


Verdict = Converged | Oscillating | Undecided


@dataclass(frozen=True)
class MeanEstimate:
    """Trajectory of partial window averages plus a convergence verdict."""

    partials: tuple[tuple[int, complex], ...]
    verdict: Verdict
    tail_spread: float
    tail: int
    sup_samples: float

    @property
    def values(self) -> np.ndarray:
        return np.array([a for _, a in self.partials])

    @property
    def last(self) -> complex:
        return self.partials[-1][1]

    def tail_values(self) -> np.ndarray:
        return self.values[-self.tail:]

    def tail_max(self) -> float:
        """Max modulus over the retained tail; the finite limsup proxy."""
        return float(np.max(np.abs(self.tail_values())))

    def describe(self) -> dict:
        out = {
            "partials": [[n, [complex(a).real, complex(a).imag]]
                         for n, a in self.partials],
            "tail_spread": self.tail_spread,
            "tail": self.tail,
        }
        v = self.verdict
        if isinstance(v, Converged):
            lim = complex(v.limit)
            out["verdict"] = {"kind": "converged", "limit": [lim.real, lim.imag],
                              "residual": v.residual}
        elif isinstance(v, Oscillating):
            out["verdict"] = {"kind": "oscillating", "liminf": v.liminf,
                              "limsup": v.limsup}
        else:
            out["verdict"] = {"kind": "undecided", "reason": v.reason}
        return out


def _spread(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    diff = values[:, None] - values[None, :]
    return float(np.max(np.abs(diff)))


def _judge(values: np.ndarray, sup_samples: float,
           cfg: EstimatorConfig) -> tuple[Verdict, float]:
    """Assign a verdict to a trajectory of partial means.

    Converged needs the spread over the last ``tail`` partials to fall
    under the tolerance.  Oscillating needs the spread to stay above the
    oscillation threshold for every sliding tail-window over the recent
    partials, which guards against a single outlier reading as an
    oscillation.
    """
    k = min(cfg.tail, len(values))
    tail_vals = values[-k:]
    spread = _spread(tail_vals)
    scale = max(sup_samples, 0.0)
    conv_tol = cfg.convergence_tol * scale if scale > 0 else cfg.convergence_tol
    osc_tol = cfg.oscillation_threshold * scale if scale > 0 else cfg.oscillation_threshold

    if spread < conv_tol or scale == 0.0:
        limit = complex(np.mean(tail_vals))
        return Converged(limit, spread), spread

    persistent = True
    for back in range(k):
        hi = len(values) - back
        lo = max(0, hi - k)
        if hi - lo < 2:
            break
        if _spread(values[lo:hi]) < osc_tol:
            persistent = False
            break
    if persistent and spread >= osc_tol:
        if np.max(np.abs(tail_vals.imag)) < 1e-9 * max(scale, 1.0):
            lo, hi = float(np.min(tail_vals.real)), float(np.max(tail_vals.real))
        else:
            mods = np.abs(tail_vals)
            lo, hi = float(np.min(mods)), float(np.max(mods))
        return Oscillating(lo, hi), spread

    return Undecided("tail neither settled nor persistently oscillating"), spread


# ---------------------------------------------------------------------------
# sample access
# ---------------------------------------------------------------------------


def as_dense(samples, lo: int, hi: int) -> np.ndarray:
    """Values of ``samples`` on [lo, hi) as an array.

    ``samples`` is any finite map t -> value.  Objects exposing
    ``start``/``values`` (dense tracks) take a fast path.  The first
    missing coordinate raises :class:`MissingSamples`.
    """
    if hi <= lo:
        return np.zeros(0)
    start = getattr(samples, "start", None)
    vals = getattr(samples, "values", None)
    if start is not None and isinstance(vals, np.ndarray):
        if lo < start or hi > start + len(vals):
            missing = lo if lo < start else start + len(vals)
            raise MissingSamples(int(missing))
        return vals[lo - start:hi - start]
    out = np.empty(hi - lo, dtype=complex)
    for i, t in enumerate(range(lo, hi)):
        try:
            out[i] = samples[t]
        except KeyError:
            raise MissingSamples(t) from None
    if np.max(np.abs(out.imag), initial=0.0) == 0.0:
        return out.real.copy()
    return out


def _window_averages(samples, schedule: FolnerSchedule, n_max: int,
                     transform=None) -> tuple[np.ndarray, float]:
    """Averages over B_1..B_n_max plus the sup norm of the touched samples."""
    lo = min(s for s, _ in schedule.windows[:n_max])
    hi = max(s + l for s, l in schedule.windows[:n_max])
    dense = as_dense(samples, lo, hi)
    if transform is not None:
        dense = transform(dense)
    sup = float(np.max(np.abs(dense), initial=0.0))
    csum = np.concatenate(([0.0 + 0.0j], np.cumsum(dense.astype(complex))))
    avgs = np.empty(n_max, dtype=complex)
    for i, (s, l) in enumerate(schedule.windows[:n_max]):
        a, b = s - lo, s - lo + l
        avgs[i] = (csum[b] - csum[a]) / l
    return avgs, sup


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def partial_means(samples, schedule: FolnerSchedule, n_max: int | None = None,
                  config: EstimatorConfig = EstimatorConfig()) -> MeanEstimate:
    """Partial window averages (1/|B_n|) sum_{t in B_n} samples[t]."""
    n_max = len(schedule) if n_max is None else n_max
    if not 1 <= n_max <= len(schedule):
        raise ValueError(f"n_max must lie in 1..{len(schedule)}")
    avgs, sup = _window_averages(samples, schedule, n_max)
    verdict, spread = _judge(avgs, sup, config)
    partials = tuple((n + 1, complex(avgs[n])) for n in range(n_max))
    return MeanEstimate(partials, verdict, spread, min(config.tail, n_max), sup)


def upper_mean(samples, schedule: FolnerSchedule, n_max: int | None = None,
               tail: int = 5) -> float:
    """Finite proxy for the upper mean: tail max of window averages of |h|."""
    n_max = len(schedule) if n_max is None else n_max
    avgs, _ = _window_averages(samples, schedule, n_max, transform=np.abs)
    return float(np.max(avgs[-min(tail, n_max):]).real)


def _real_dense(samples, lo: int, hi: int) -> np.ndarray:
    dense = as_dense(samples, lo, hi)
    if np.iscomplexobj(dense):
        if np.max(np.abs(dense.imag), initial=0.0) > 0.0:
            raise TypeError("uniform means are defined for real-valued samples")
        dense = dense.real
    return np.asarray(dense, dtype=float)


def uniform_mean(samples, schedule: FolnerSchedule, n: int,
                 shifts: tuple[int, int]) -> tuple[float, int]:
    """Sup over scanned shifts s of the average over B_n + s.

    ``shifts`` is the inclusive range (s_min, s_max).  Returns the sup
    and the smallest shift achieving it.
    """
    s_min, s_max = shifts
    if s_max < s_min:
        raise EmptyShiftRange(f"empty shift range {shifts}")
    start, length = schedule.window(n)
    lo = start + s_min
    hi = start + s_max + length
    dense = _real_dense(samples, lo, hi)
    csum = np.concatenate(([0.0], np.cumsum(dense)))
    sums = csum[length:] - csum[:-length]          # one per shift s_min..s_max
    idx = int(np.argmax(sums))
    return float(sums[idx] / length), s_min + idx


# ---------------------------------------------------------------------------
# admissible seminorms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibleSeminorm:
    """Shift-invariant monotone seminorm with N(1) = 1.

    kind "sup" ignores the schedule; "mean" is the upper-mean proxy of
    |h|; "weyl" takes the largest uniform mean of |h| over the last
    ``tail`` window indices, scanning shifts with |s| <= shift_budget.
    """

    kind: str
    schedule: FolnerSchedule | None = None
    shift_budget: int | None = None
    tail: int = 5

    def __post_init__(self):
        if self.kind not in ("sup", "mean", "weyl"):
            raise ValueError(f"unknown seminorm kind {self.kind!r}")
        if self.kind != "sup" and self.schedule is None:
            raise ValueError(f"{self.kind} seminorm needs a schedule")

    def resolved_shift_budget(self) -> int:
        if self.shift_budget is not None:
            return self.shift_budget
        return 4 * self.schedule.largest_length()

    def describe(self) -> dict:
        out: dict = {"kind": self.kind, "tail": self.tail}
        if self.schedule is not None:
            out["schedule"] = self.schedule.describe()
        if self.kind == "weyl":
            out["shift_budget"] = self.resolved_shift_budget()
        return out


def seminorm_eval(norm: AdmissibleSeminorm, samples) -> float:
    """Evaluate an admissible seminorm on a finite sample map."""
    if norm.kind == "sup":
        vals = getattr(samples, "values", None)
        if isinstance(vals, np.ndarray):
            return float(np.max(np.abs(vals), initial=0.0))
        return float(max((abs(v) for v in samples.values()), default=0.0))
    if norm.kind == "mean":
        return upper_mean(samples, norm.schedule, tail=norm.tail)
    # weyl: max of uniform means of |h| over the last `tail` indices
    sched = norm.schedule
    budget = norm.resolved_shift_budget()
    best = -math.inf
    shifted = _AbsView(samples)
    for n in range(max(1, len(sched) - norm.tail + 1), len(sched) + 1):
        value, _ = uniform_mean(shifted, sched, n, (-budget, budget))
        best = max(best, value)
    return best


class _AbsView:
    """Read-only |h| view over a sample map, keeping the dense fast path."""

    def __init__(self, samples):
        self._samples = samples
        start = getattr(samples, "start", None)
        vals = getattr(samples, "values", None)
        if start is not None and isinstance(vals, np.ndarray):
            self.start = start
            self.values = np.abs(vals)

    def __getitem__(self, t):
        return abs(self._samples[t])


# ---------------------------------------------------------------------------
# stabilization of uniform means
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilizationReport:
    epsilon: float
    first_n_below: int
    all_later_below: bool
    margin: float
    values: tuple[float, ...]
    slacks: tuple[float, ...]

    def describe(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "first_n_below": self.first_n_below,
            "all_later_below": self.all_later_below,
            "margin": self.margin,
            "values": list(self.values),
            "slacks": list(self.slacks),
        }


def stabilization_check(samples, schedule: FolnerSchedule, epsilon: float,
                        shift_budget: int | None = None) -> StabilizationReport:
    """Find the first window index with uniform mean of |h| below epsilon.

    Once one index passes, all later scanned indices must pass up to a
    boundary slack 2*sup|h|*(reach of the certifying window / |B_n|),
    which is the exact window-exchange error for interval windows.
    Raises :class:`NeverBelow` when no scanned index qualifies.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    budget = shift_budget if shift_budget is not None else 4 * schedule.largest_length()
    view = _AbsView(samples)
    values = []
    for n in range(1, len(schedule) + 1):
        value, _ = uniform_mean(view, schedule, n, (-budget, budget))
        values.append(value)
    lo, hi = schedule.span()
    sup_h = float(np.max(np.abs(as_dense(samples, lo - budget, hi + budget)), initial=0.0))

    first = next((n for n, v in enumerate(values, start=1) if v < epsilon), None)
    if first is None:
        raise NeverBelow(epsilon, values)

    s0, l0 = schedule.window(first)
    reach = max(abs(s0), abs(s0 + l0))
    slacks, ok, margin = [], True, math.inf
    for n in range(1, len(schedule) + 1):
        _, ln = schedule.window(n)
        slack = 2.0 * sup_h * min(1.0, reach / ln)
        slacks.append(slack)
        if n > first:
            gap = epsilon + slack - values[n - 1]
            margin = min(margin, gap)
            if gap <= 0:
                ok = False
    if margin is math.inf:
        margin = epsilon - values[first - 1]
    return StabilizationReport(epsilon, first, ok, float(margin),
                               tuple(values), tuple(slacks))
