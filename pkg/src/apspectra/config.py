"""Experiment configuration: parsing, validation, presets, canonical form.

Configs are JSON documents.  Presets expand to explicit parameters
before anything runs, and the expanded form is what gets hashed and
echoed into every output, so artifacts are self-describing and two
runs of one config are byte-identical.
"""

from __future__ import annotations

import hashlib
import json

from .errors import ConfigError
from .folner import EstimatorConfig, FolnerSchedule
from .points import (FIBONACCI_RULES, PERIOD_DOUBLING_RULES, THUE_MORSE_RULES,
                     BernoulliPoint, BlockPoint, Observable, PeriodicPoint,
                     PointGen, StepPoint, SturmianPoint, SubstitutionPoint)

__all__ = [
    "build_point",
    "build_observable",
    "build_schedule",
    "build_estimator",
    "build_weights",
    "parse_complex",
    "canonical_json",
    "config_hash",
    "load_config",
]

_SUBSTITUTIONS = {
    "fibonacci": FIBONACCI_RULES,
    "thue-morse": THUE_MORSE_RULES,
    "period-doubling": PERIOD_DOUBLING_RULES,
}


def _require(spec: dict, key: str, field: str):
    if key not in spec:
        raise ConfigError(f"{field}.{key}", "missing")
    return spec[key]


def _number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(field, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(field, f"expected an integer, got {value!r}")
    return value


def parse_complex(value, field: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                    for v in value)):
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(field, f"expected a number or [re, im], got {value!r}")


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------


def _point_from_preset(preset: str, field: str) -> PointGen:
    head, _, rest = preset.partition(":")
    if head in _SUBSTITUTIONS:
        return SubstitutionPoint(_SUBSTITUTIONS[head], ("0", "0"), head)
    if head == "periodic":
        if not rest:
            raise ConfigError(f"{field}.pattern", "periodic preset needs a pattern")
        return PeriodicPoint(rest)
    if head == "sturmian":
        parts = rest.split(":") if rest else []
        if not parts or not parts[0]:
            raise ConfigError(f"{field}.alpha", "sturmian preset needs an alpha")
        try:
            alpha = float(parts[0])
            rho = float(parts[1]) if len(parts) > 1 else 0.0
        except ValueError as exc:
            raise ConfigError(f"{field}.alpha", str(exc)) from None
        try:
            return SturmianPoint(alpha, rho)
        except ValueError as exc:
            raise ConfigError(f"{field}.alpha", str(exc)) from None
    if head == "bernoulli":
        parts = rest.split(":") if rest else []
        if len(parts) != 2:
            raise ConfigError(f"{field}.seed",
                              "bernoulli preset is bernoulli:<p>:<seed>")
        try:
            p = float(parts[0])
        except ValueError as exc:
            raise ConfigError(f"{field}.p", str(exc)) from None
        try:
            seed = int(parts[1])
        except ValueError as exc:
            raise ConfigError(f"{field}.seed", str(exc)) from None
        try:
            return BernoulliPoint(p, seed)
        except ValueError as exc:
            raise ConfigError(f"{field}.p", str(exc)) from None
    if head == "step":
        return StepPoint()
    if head == "block":
        try:
            return BlockPoint(rest or "0")
        except ValueError as exc:
            raise ConfigError(f"{field}.fill", str(exc)) from None
    raise ConfigError(field, f"unknown point preset {preset!r}")


def build_point(spec, field: str = "point") -> PointGen:
    """A point generator from a preset string or an explicit dict."""
    if isinstance(spec, str):
        return _point_from_preset(spec, field)
    if not isinstance(spec, dict):
        raise ConfigError(field, "expected a preset string or an object")
    if "preset" in spec:
        return _point_from_preset(str(spec["preset"]), field)
    kind = _require(spec, "kind", field)
    try:
        if kind == "periodic":
            return PeriodicPoint(str(_require(spec, "pattern", field)))
        if kind == "substitution":
            rules = _require(spec, "rules", field)
            seed = spec.get("seed", ["0", "0"])
            return SubstitutionPoint({str(k): str(v) for k, v in rules.items()},
                                     (str(seed[0]), str(seed[1])),
                                     str(spec.get("name", "")))
        if kind == "sturmian":
            alpha = _number(_require(spec, "alpha", field), f"{field}.alpha")
            rho = _number(spec.get("rho", 0.0), f"{field}.rho")
            try:
                return SturmianPoint(alpha, rho)
            except ValueError as exc:
                raise ConfigError(f"{field}.alpha", str(exc)) from None
        if kind == "bernoulli":
            p = _number(_require(spec, "p", field), f"{field}.p")
            seed = _integer(_require(spec, "seed", field), f"{field}.seed")
            try:
                return BernoulliPoint(p, seed)
            except ValueError as exc:
                raise ConfigError(f"{field}.p", str(exc)) from None
        if kind == "step":
            return StepPoint()
        if kind == "block":
            return BlockPoint(str(spec.get("fill", "0")))
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(field, str(exc)) from None
    raise ConfigError(f"{field}.kind", f"unknown point kind {kind!r}")


# ---------------------------------------------------------------------------
# observables, weights
# ---------------------------------------------------------------------------


def build_observable(spec, point: PointGen, field: str = "observable") -> Observable:
    if isinstance(spec, str):
        head, _, rest = spec.partition(":")
        if head == "indicator":
            letter, _, off = rest.partition("@")
            if letter not in point.alphabet:
                raise ConfigError(f"{field}.letter",
                                  f"{letter!r} is not a letter of the point")
            return Observable.indicator(letter, point.alphabet,
                                        int(off) if off else 0)
        raise ConfigError(field, f"unknown observable preset {spec!r}")
    if not isinstance(spec, dict):
        raise ConfigError(field, "expected a preset string or an object")
    kind = _require(spec, "kind", field)
    if kind == "indicator":
        letter = str(_require(spec, "letter", field))
        if letter not in point.alphabet:
            raise ConfigError(f"{field}.letter",
                              f"{letter!r} is not a letter of the point")
        offset = _integer(spec.get("offset", 0), f"{field}.offset")
        return Observable.indicator(letter, point.alphabet, offset)
    if kind == "letter_values":
        raw = _require(spec, "map", field)
        values = {str(k): parse_complex(v, f"{field}.map.{k}")
                  for k, v in raw.items()}
        missing = set(point.alphabet) - set(values)
        if missing:
            raise ConfigError(f"{field}.map",
                              f"missing letters {sorted(missing)}")
        offset = _integer(spec.get("offset", 0), f"{field}.offset")
        return Observable.letter_values(values, offset)
    if kind == "table":
        window = tuple(_integer(v, f"{field}.window") for v in
                       _require(spec, "window", field))
        raw = _require(spec, "table", field)
        table = {str(k): parse_complex(v, f"{field}.table.{k}")
                 for k, v in raw.items()}
        try:
            return Observable(window, table, str(spec.get("name", "")))
        except ValueError as exc:
            raise ConfigError(f"{field}.table", str(exc)) from None
    raise ConfigError(f"{field}.kind", f"unknown observable kind {kind!r}")


def build_weights(spec, point: PointGen, field: str = "weights") -> dict:
    if not isinstance(spec, dict):
        raise ConfigError(field, "expected an object letter -> weight")
    weights = {str(k): parse_complex(v, f"{field}.{k}") for k, v in spec.items()}
    missing = set(point.alphabet) - set(weights)
    if missing:
        raise ConfigError(field, f"missing letters {sorted(missing)}")
    return weights


# ---------------------------------------------------------------------------
# schedules, estimator knobs
# ---------------------------------------------------------------------------


def build_schedule(spec, field: str = "schedule") -> FolnerSchedule:
    if not isinstance(spec, dict):
        raise ConfigError(field, "expected an object")
    kind = _require(spec, "kind", field)
    try:
        if kind == "intervals":
            return FolnerSchedule.intervals(
                _integer(spec.get("base", 100), f"{field}.base"),
                _integer(spec.get("n_max", 10), f"{field}.n_max"))
        if kind == "dyadic":
            return FolnerSchedule.dyadic(
                _integer(spec.get("n_max", 16), f"{field}.n_max"))
        if kind == "alternating":
            return FolnerSchedule.alternating(
                _integer(spec.get("n_max", 16), f"{field}.n_max"))
        if kind == "custom":
            return FolnerSchedule.custom(_require(spec, "windows", field))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(field, str(exc)) from None
    raise ConfigError(f"{field}.kind", f"unknown schedule kind {kind!r}")


def build_estimator(spec, field: str = "estimator") -> EstimatorConfig:
    if spec is None:
        return EstimatorConfig()
    if not isinstance(spec, dict):
        raise ConfigError(field, "expected an object")
    return EstimatorConfig(
        tail=_integer(spec.get("tail", 5), f"{field}.tail"),
        convergence_tol=_number(spec.get("convergence_tol", 1e-3),
                                f"{field}.convergence_tol"),
        oscillation_threshold=_number(spec.get("oscillation_threshold", 0.1),
                                      f"{field}.oscillation_threshold"),
    )


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def config_hash(expanded: dict) -> str:
    return hashlib.sha256(canonical_json(expanded).encode("utf-8")).hexdigest()


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config", "top level must be an object")
    return cfg
