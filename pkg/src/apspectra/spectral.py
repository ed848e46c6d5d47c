"""Fourier coefficients along orbits, frequency detection and Parseval tests.

The grid transform comes in two independently coded routes (a direct
sum and a fast transform) that are cross-checked against each other;
off-grid frequencies are recovered by persistence filtering over grids
of increasing length followed by golden-section refinement, since the
sequences of interest carry irrational frequencies that no rational
grid hits exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingSamples
from .folner import (Character, Converged, EstimatorConfig, FolnerSchedule,
                     MeanEstimate, Oscillating, _judge, partial_means)
from .points import Observable, PointGen, Track, observable_track, shift

__all__ = [
    "fourier_bohr",
    "FourierBohrGrid",
    "fourier_bohr_grid",
    "DetectedFrequency",
    "detect_frequencies",
    "ParsevalTrajectory",
    "parseval_defect",
    "EigenfunctionSample",
    "eigenfunction_sample",
    "WeylUniformity",
    "weyl_uniform_fb",
    "SpectralReport",
    "spectral_report",
]

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _windowed_character_means(track: Track, theta: float,
                              schedule: FolnerSchedule) -> np.ndarray:
    lo, hi = schedule.span()
    if lo < track.start:
        raise MissingSamples(lo)
    if hi > track.stop:
        raise MissingSamples(track.stop)
    t = np.arange(lo, hi, dtype=float)
    vals = np.asarray(track.values)[lo - track.start:hi - track.start]
    prod = vals * np.exp(-2j * np.pi * theta * t)
    csum = np.concatenate(([0.0 + 0.0j], np.cumsum(prod)))
    out = np.empty(len(schedule), dtype=complex)
    for i, (s, l) in enumerate(schedule.windows):
        out[i] = (csum[s + l - lo] - csum[s - lo]) / l
    return out


def fourier_bohr(f: Observable, x: PointGen, theta: float,
                 schedule: FolnerSchedule,
                 config: EstimatorConfig = EstimatorConfig()) -> MeanEstimate:
    """Averages of f(t.x) against conj(character theta) along the schedule."""
    lo, hi = schedule.span()
    track = observable_track(f, x, lo, hi - 1)
    return fourier_bohr_from_track(track, theta, schedule, config)


def fourier_bohr_from_track(track: Track, theta: float,
                            schedule: FolnerSchedule,
                            config: EstimatorConfig = EstimatorConfig()) -> MeanEstimate:
    """Same as :func:`fourier_bohr` for an already-sampled track."""
    avgs = _windowed_character_means(track, theta, schedule)
    sup = track.sup_norm()
    verdict, spread = _judge(avgs, sup, config)
    partials = tuple((n + 1, complex(a)) for n, a in enumerate(avgs))
    return MeanEstimate(partials, verdict, spread,
                        min(config.tail, len(avgs)), sup)


# ---------------------------------------------------------------------------
# grid transforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourierBohrGrid:
    """Coefficients c_j = (1/N) sum_t f(t.x) e(-j t / N) on the grid j/N."""

    n: int
    amplitudes: np.ndarray
    method: str
    cross_residual: float | None
    track: np.ndarray

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def sup_amplitude(self) -> float:
        return float(np.max(np.abs(self.amplitudes)))


def _grid_direct(values: np.ndarray) -> np.ndarray:
    n = len(values)
    t = np.arange(n)
    out = np.empty(n, dtype=complex)
    block = max(1, (1 << 22) // max(n, 1))
    for j0 in range(0, n, block):
        j = np.arange(j0, min(j0 + block, n))
        phases = np.exp(-2j * np.pi * np.outer(j, t) / n)
        out[j] = phases @ values / n
    return out


def fourier_bohr_grid(f: Observable, x: PointGen, n: int,
                      method: str = "fast",
                      direct_check_limit: int = 4096) -> FourierBohrGrid:
    """Grid transform over the window [0, N); two routes cross-checked.

    The fast route is an FFT; the direct route evaluates the defining
    sum.  Whenever both are computed (always for the direct method, and
    for the fast method up to ``direct_check_limit``) the residual of
    the comparison is recorded and must stay at rounding level.
    """
    if n < 2:
        raise ValueError("grid length must be at least 2")
    if method not in ("fast", "direct"):
        raise ValueError("method must be 'fast' or 'direct'")
    track = observable_track(f, x, 0, n - 1)
    values = np.asarray(track.values, dtype=complex)
    fast = np.fft.fft(values) / n
    residual = None
    if method == "direct" or n <= direct_check_limit:
        direct = _grid_direct(values)
        scale = max(float(np.max(np.abs(direct))), 1e-30)
        residual = float(np.max(np.abs(fast - direct)) / scale)
        amps = direct if method == "direct" else fast
    else:
        amps = fast
    return FourierBohrGrid(n, amps, method, residual, values)


# ---------------------------------------------------------------------------
# frequency detection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DetectedFrequency:
    theta_grid: float
    theta: float
    amplitude: complex
    grid_amplitude: float

    def describe(self) -> dict:
        return {
            "theta_grid": self.theta_grid,
            "theta": self.theta,
            "amplitude": [self.amplitude.real, self.amplitude.imag],
            "amplitude_abs": abs(self.amplitude),
            "grid_amplitude": self.grid_amplitude,
        }


def _circ_dist(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _amp_at(track: np.ndarray, theta: float) -> complex:
    t = np.arange(len(track), dtype=float)
    return complex(np.mean(track * np.exp(-2j * np.pi * theta * t)))


def _golden_refine(track: np.ndarray, lo: float, hi: float, steps: int) -> float:
    """Golden-section maximization of |mean(track * e(-theta t))| on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = abs(_amp_at(track, c)), abs(_amp_at(track, d))
    for _ in range(steps):
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = abs(_amp_at(track, d))
        else:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = abs(_amp_at(track, c))
    return (a + b) / 2.0


def _persists(grid: FourierBohrGrid, theta0: float, thr: float) -> bool:
    """Is there grid mass >= thr within one cell of theta0 on this stage?"""
    gn = grid.n
    j0 = theta0 * gn
    lo = int(np.floor(j0)) - 1
    best = 0.0
    for k in range(lo, lo + 4):
        if _circ_dist(k / gn, theta0) <= 1.0 / gn + 1e-12:
            best = max(best, abs(grid.amplitudes[k % gn]))
    return best >= thr


def detect_frequencies(grids: list[FourierBohrGrid],
                       threshold: float | None = None,
                       refine_steps: int = 48,
                       max_candidates: int = 64) -> list[DetectedFrequency]:
    """Persistent grid peaks, refined off-grid and re-estimated.

    A candidate is a local maximum of the largest grid with amplitude
    at or above the threshold (default 0.02 times the sup of the
    track).  It must be visible within one grid cell on every smaller
    stage, which suppresses leakage spikes that do not persist across
    window lengths.  Survivors are refined by golden-section search on
    a bracket of one grid cell on each side; only the strongest
    ``max_candidates`` are refined.  The returned list is sorted by
    amplitude, largest first.
    """
    if len(grids) < 2:
        raise ValueError("need at least two grid stages")
    grids = sorted(grids, key=lambda g: g.n)
    base = grids[-1]
    sup = float(np.max(np.abs(base.track), initial=0.0))
    if sup == 0.0:
        return []
    thr = 0.02 * sup if threshold is None else float(threshold)
    thr = max(thr, 1e-12 * sup)
    amps = np.abs(base.amplitudes)
    n = base.n
    is_peak = (amps >= thr) & (amps >= np.roll(amps, 1)) & (amps >= np.roll(amps, -1))
    candidates = np.nonzero(is_peak)[0]
    candidates = sorted(candidates, key=lambda j: -amps[j])[:max_candidates]

    found: list[DetectedFrequency] = []
    for j in candidates:
        theta0 = j / n
        if not all(_persists(g, theta0, thr) for g in grids[:-1]):
            continue
        theta = _golden_refine(base.track, theta0 - 1.0 / n, theta0 + 1.0 / n,
                               refine_steps) % 1.0
        amp = _amp_at(base.track, theta)
        found.append(DetectedFrequency(theta0, theta, amp, float(amps[j])))

    found.sort(key=lambda fr: -abs(fr.amplitude))
    kept: list[DetectedFrequency] = []
    for fr in found:
        if all(_circ_dist(fr.theta, other.theta) >= 1.0 / n for other in kept):
            kept.append(fr)
    return kept


# ---------------------------------------------------------------------------
# parseval defect
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParsevalTrajectory:
    thetas: tuple[float, ...]
    energy: MeanEstimate
    captured: tuple[float, ...]
    defects: tuple[float, ...]

    @property
    def final_defect(self) -> float:
        return self.defects[-1]

    def describe(self) -> dict:
        return {
            "thetas": list(self.thetas),
            "energy": self.energy.describe(),
            "captured": list(self.captured),
            "defects": list(self.defects),
        }


def parseval_defect(f: Observable, x: PointGen, thetas,
                    schedule: FolnerSchedule,
                    config: EstimatorConfig = EstimatorConfig()) -> ParsevalTrajectory:
    """Per-stage energy minus captured squared amplitudes.

    A vanishing trajectory certifies that the listed frequencies carry
    the full spectral mass of this observable along this point.
    """
    thetas = tuple(float(t) for t in thetas)
    lo, hi = schedule.span()
    track = observable_track(f, x, lo, hi - 1)
    sq = Track(track.start, np.abs(np.asarray(track.values)) ** 2)
    energy = partial_means(sq, schedule, config=config)
    captured = np.zeros(len(schedule))
    for theta in thetas:
        captured += np.abs(_windowed_character_means(track, theta, schedule)) ** 2
    defects = tuple(float(e.real - c) for (_, e), c in zip(energy.partials, captured))
    return ParsevalTrajectory(thetas, energy, tuple(float(c) for c in captured),
                              defects)


# ---------------------------------------------------------------------------
# eigenfunction samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenfunctionSample:
    theta: float
    values: tuple[complex, ...]
    flags: tuple[str, ...]          # "", "oscillating", "undecided"
    eigen_residual: float
    modulus_spread: float

    def describe(self) -> dict:
        return {
            "theta": self.theta,
            "values": [[v.real, v.imag] for v in self.values],
            "flags": list(self.flags),
            "eigen_residual": self.eigen_residual,
            "modulus_spread": self.modulus_spread,
        }


def _eigen_value(est: MeanEstimate) -> tuple[complex, str]:
    v = est.verdict
    if isinstance(v, Converged):
        return complex(v.limit), ""
    if isinstance(v, Oscillating):
        # mirror of the theorem's "0 else" branch for non-convergent averages
        return 0.0 + 0.0j, "oscillating"
    return complex(est.last), "undecided"


def eigenfunction_sample(f: Observable, theta: float, points,
                         schedule: FolnerSchedule,
                         shift_probes=(1, 2, 3, 5, 8),
                         config: EstimatorConfig = EstimatorConfig()) -> EigenfunctionSample:
    """Sampled eigenfunction values e(x) = lim A(f_x conj(xi)) per point.

    Oscillating averages are zeroed and flagged; undecided ones are
    flagged and left out of the modulus statistics.  The residual is
    the worst violation of e(t.x) = xi(t) e(x) over the probe shifts.
    """
    points = list(points)
    if not points:
        raise ValueError("need at least one sample point")
    xi = Character(theta)
    values, flags = [], []
    for p in points:
        est = fourier_bohr(f, p, theta, schedule, config)
        v, flag = _eigen_value(est)
        values.append(v)
        flags.append(flag)

    residual = 0.0
    for p, e_p, flag in zip(points, values, flags):
        if flag == "undecided":
            continue
        for t in shift_probes:
            est = fourier_bohr(f, shift(p, int(t)), theta, schedule, config)
            e_shift, flag_shift = _eigen_value(est)
            if flag_shift == "undecided":
                continue
            residual = max(residual,
                           abs(e_shift - complex(xi(int(t))) * e_p))

    mods = [abs(v) for v, flag in zip(values, flags) if flag != "undecided"]
    spread = (max(mods) - min(mods)) if mods else 0.0
    return EigenfunctionSample(float(theta) % 1.0, tuple(values), tuple(flags),
                               float(residual), float(spread))


# ---------------------------------------------------------------------------
# uniformity of shifted-window averages
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylUniformity:
    max_modulus: float
    min_modulus: float
    spread: float
    argmax_shift: int
    argmin_shift: int

    def describe(self) -> dict:
        return {"max_modulus": self.max_modulus, "min_modulus": self.min_modulus,
                "spread": self.spread, "argmax_shift": self.argmax_shift,
                "argmin_shift": self.argmin_shift}


def weyl_uniform_fb(f: Observable, x: PointGen, theta: float,
                    schedule: FolnerSchedule, n: int,
                    shifts: tuple[int, int]) -> WeylUniformity:
    """Spread of shifted-window Fourier averages; small means Weyl-uniform."""
    s_min, s_max = shifts
    if s_max < s_min:
        raise ValueError("empty shift range")
    start, length = schedule.window(n)
    lo, hi = start + s_min, start + s_max + length
    track = observable_track(f, x, lo, hi - 1)
    t = np.arange(lo, hi, dtype=float)
    prod = np.asarray(track.values) * np.exp(-2j * np.pi * theta * t)
    csum = np.concatenate(([0.0 + 0.0j], np.cumsum(prod)))
    sums = (csum[length:] - csum[:-length]) / length
    mods = np.abs(sums)
    i_max, i_min = int(np.argmax(mods)), int(np.argmin(mods))
    return WeylUniformity(float(mods[i_max]), float(mods[i_min]),
                          float(mods[i_max] - mods[i_min]),
                          s_min + i_max, s_min + i_min)


# ---------------------------------------------------------------------------
# assembled report
# ---------------------------------------------------------------------------

PURE_POINT = "evidence-pure-point"
NOT_PURE_POINT = "evidence-not-pure-point"
PURITY_UNDECIDED = "undecided"


@dataclass(frozen=True)
class SpectralReport:
    frequencies: tuple[DetectedFrequency, ...]
    trajectories: dict               # theta -> MeanEstimate
    energy: MeanEstimate
    parseval: ParsevalTrajectory
    purity: str
    grid_sizes: tuple[int, ...]
    cross_residuals: tuple[float | None, ...]
    budget_fingerprint: dict

    def describe(self) -> dict:
        return {
            "frequencies": [fr.describe() for fr in self.frequencies],
            "trajectories": {f"{theta!r}": est.describe()
                             for theta, est in self.trajectories.items()},
            "energy": self.energy.describe(),
            "parseval": self.parseval.describe(),
            "purity": self.purity,
            "grid_sizes": list(self.grid_sizes),
            "cross_residuals": list(self.cross_residuals),
            "budget": self.budget_fingerprint,
        }


def _purity_verdict(energy: MeanEstimate, defects, pure_frac: float = 0.05,
                    impure_frac: float = 0.5) -> str:
    e = float(np.real(energy.tail_max()))
    if e == 0.0:
        return PURE_POINT
    d = list(defects)
    last = d[-1]
    decreasing = len(d) >= 3 and d[-3] >= d[-2] - 1e-12 and d[-2] >= d[-1] - 1e-12
    if last < pure_frac * e and decreasing:
        return PURE_POINT
    if last > impure_frac * e and isinstance(energy.verdict, Converged):
        return NOT_PURE_POINT
    return PURITY_UNDECIDED


def spectral_report(f: Observable, x: PointGen, schedule: FolnerSchedule,
                    grid_sizes, threshold: float | None = None,
                    refine_steps: int = 48, max_frequencies: int = 32,
                    config: EstimatorConfig = EstimatorConfig()) -> SpectralReport:
    """Detect frequencies, estimate their trajectories, test Parseval."""
    grid_sizes = tuple(sorted(int(n) for n in grid_sizes))
    grids = [fourier_bohr_grid(f, x, n) for n in grid_sizes]
    freqs = detect_frequencies(grids, threshold, refine_steps)[:max_frequencies]
    lo, hi = schedule.span()
    track = observable_track(f, x, lo, hi - 1)
    trajectories = {fr.theta: fourier_bohr_from_track(track, fr.theta, schedule,
                                                      config)
                    for fr in freqs}
    parseval = parseval_defect(f, x, [fr.theta for fr in freqs], schedule,
                               config)
    purity = _purity_verdict(parseval.energy, parseval.defects)
    return SpectralReport(tuple(freqs), trajectories, parseval.energy, parseval,
                          purity, grid_sizes,
                          tuple(g.cross_residual for g in grids),
                          {"schedule": schedule.describe(),
                           "grid_sizes": list(grid_sizes),
                           "threshold": threshold,
                           "refine_steps": refine_steps})
