"""Experiment configuration: JSON documents validated against a strict schema.

Configs are plain JSON (key-value with nesting): numbers parse straight to
doubles, expression strings pass verbatim to the phase parser, and unknown
keys are rejected at every level so a typo cannot silently change an
experiment.  Complex numbers are written as [re, im] pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import ConfigError
from .phasefn import (
    SequenceSource,
    explicit_source,
    file_source,
    phase_source,
    phase_source_radians,
    scaled_source,
)

KINDS = ("expsum", "scalar", "jordan-cell", "jordan-system")

_SOURCE_KEYS = {"phase", "phase_radians", "values", "file", "scaled"}


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _need(d: dict, key: str, where: str) -> Any:
    if key not in d:
        raise ConfigError(f"{where}: missing required key '{key}'")
    return d[key]


def _as_number(x: Any, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {type(x).__name__}")
    return float(x)


def _as_int(x: Any, where: str, minimum: Optional[int] = None) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {type(x).__name__}")
    if minimum is not None and x < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}")
    return x


def _as_str(x: Any, where: str) -> str:
    if not isinstance(x, str):
        raise ConfigError(f"{where}: expected a string, got {type(x).__name__}")
    return x


def _as_complex(x: Any, where: str) -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(float(x), 0.0)
    if isinstance(x, list) and len(x) == 2:
        return complex(_as_number(x[0], where), _as_number(x[1], where))
    raise ConfigError(f"{where}: expected a number or [re, im] pair")


def build_source(spec: Any, where: str) -> SequenceSource:
    """Construct a SequenceSource from its JSON form."""
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object describing a sequence source")
    _reject_unknown(spec, _SOURCE_KEYS, where)
    if len(spec) != 1:
        raise ConfigError(f"{where}: a source takes exactly one of {sorted(_SOURCE_KEYS)}")
    key, val = next(iter(spec.items()))
    if key == "phase":
        return phase_source(_as_str(val, f"{where}.phase"))
    if key == "phase_radians":
        return phase_source_radians(_as_str(val, f"{where}.phase_radians"))
    if key == "values":
        if not isinstance(val, list) or not val:
            raise ConfigError(f"{where}.values: expected a non-empty list")
        return explicit_source([_as_complex(v, f"{where}.values[{i}]") for i, v in enumerate(val)])
    if key == "file":
        return file_source(_as_str(val, f"{where}.file"))
    # scaled
    if not isinstance(val, dict):
        raise ConfigError(f"{where}.scaled: expected an object")
    _reject_unknown(val, {"inner", "power"}, f"{where}.scaled")
    inner = build_source(_need(val, "inner", f"{where}.scaled"), f"{where}.scaled.inner")
    power = _as_int(_need(val, "power", f"{where}.scaled"), f"{where}.scaled.power", 0)
    return scaled_source(inner, power)


def _check_source_shape(spec: Any, where: str) -> None:
    """Validate the JSON shape of a source without parsing expressions.

    Expression strings may still contain sweep placeholders at this point;
    they are parsed (and can fail) only when the analysis actually runs.
    """
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object describing a sequence source")
    _reject_unknown(spec, _SOURCE_KEYS, where)
    if len(spec) != 1:
        raise ConfigError(f"{where}: a source takes exactly one of {sorted(_SOURCE_KEYS)}")
    key, val = next(iter(spec.items()))
    if key in ("phase", "phase_radians", "file"):
        _as_str(val, f"{where}.{key}")
        return
    if key == "values":
        if not isinstance(val, list) or not val:
            raise ConfigError(f"{where}.values: expected a non-empty list")
        for i, v in enumerate(val):
            _as_complex(v, f"{where}.values[{i}]")
        return
    if not isinstance(val, dict):
        raise ConfigError(f"{where}.scaled: expected an object")
    _reject_unknown(val, {"inner", "power"}, f"{where}.scaled")
    _check_source_shape(_need(val, "inner", f"{where}.scaled"), f"{where}.scaled.inner")
    _as_int(_need(val, "power", f"{where}.scaled"), f"{where}.scaled.power", 0)


@dataclass(frozen=True)
class OutputSpec:
    report: Optional[str] = None
    samples: Optional[str] = None
    figure: Optional[str] = None
    aggregate: Optional[str] = None


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; `payload` holds the kind-specific part."""

    kind: str
    horizon: int
    tolerance: float
    payload: dict
    outputs: OutputSpec
    sweep: Optional[SweepSpec]
    plot: bool
    raw: dict = field(repr=False, default_factory=dict)


_TOP_KEYS = {"kind", "horizon", "tolerance", "output", "sweep", "plot"}
_KIND_KEYS = {
    "expsum": {"phase", "tail_majorant", "declared_psi", "kl_theta"},
    "scalar": {"rho", "phi", "x1", "input", "tail_majorant", "declared_psi"},
    "jordan-cell": {"phi", "order", "ytilde", "x1_first", "probe_horizon",
                    "perturb_delta", "perturb_row", "perturb_horizon"},
    "jordan-system": {"blocks", "transform"},
}
_DEFAULT_HORIZON = {"expsum": 10**6, "scalar": 10**5, "jordan-cell": 10**6,
                    "jordan-system": 10**4}


def _validate_outputs(d: Any) -> OutputSpec:
    if d is None:
        return OutputSpec()
    if not isinstance(d, dict):
        raise ConfigError("output: expected an object")
    _reject_unknown(d, {"report", "samples", "figure", "aggregate"}, "output")
    vals = {}
    for key in ("report", "samples", "figure", "aggregate"):
        if key in d:
            vals[key] = _as_str(d[key], f"output.{key}")
    return OutputSpec(**vals)


def _validate_sweep(d: Any) -> Optional[SweepSpec]:
    if d is None:
        return None
    if not isinstance(d, dict):
        raise ConfigError("sweep: expected an object")
    _reject_unknown(d, {"parameter", "values"}, "sweep")
    param = _as_str(_need(d, "parameter", "sweep"), "sweep.parameter")
    if not param.isidentifier():
        raise ConfigError("sweep.parameter: must be an identifier")
    values = _need(d, "values", "sweep")
    if not isinstance(values, list):
        raise ConfigError("sweep.values: expected a list")
    if not values:
        raise ConfigError("sweep.values: grid is empty")
    return SweepSpec(param, tuple(_as_number(v, "sweep.values") for v in values))


def _validate_payload(kind: str, doc: dict) -> dict:
    allowed = _KIND_KEYS[kind]
    payload = {k: v for k, v in doc.items() if k not in _TOP_KEYS}
    _reject_unknown(payload, allowed, kind)
    if kind == "expsum":
        _as_str(_need(payload, "phase", "expsum"), "expsum.phase")
        if "declared_psi" in payload and payload["declared_psi"] is not None:
            _as_number(payload["declared_psi"], "expsum.declared_psi")
        _validate_majorant(payload.get("tail_majorant"))
        if "kl_theta" in payload and payload["kl_theta"] is not None:
            theta = _as_number(payload["kl_theta"], "expsum.kl_theta")
            if not 0.0 < theta < 0.5:
                raise ConfigError("expsum.kl_theta: must lie in (0, 0.5)")
    elif kind == "scalar":
        rho = _as_number(_need(payload, "rho", "scalar"), "scalar.rho")
        if rho <= 0:
            raise ConfigError("scalar.rho: must be positive")
        phi = _as_number(_need(payload, "phi", "scalar"), "scalar.phi")
        if not 0.0 <= phi < 1.0:
            raise ConfigError("scalar.phi: must lie in [0, 1)")
        if "x1" in payload:
            _as_complex(payload["x1"], "scalar.x1")
        _check_source_shape(_need(payload, "input", "scalar"), "scalar.input")
        _validate_majorant(payload.get("tail_majorant"))
        if "declared_psi" in payload and payload["declared_psi"] is not None:
            _as_number(payload["declared_psi"], "scalar.declared_psi")
    elif kind == "jordan-cell":
        phi = _as_number(_need(payload, "phi", "jordan-cell"), "jordan-cell.phi")
        if not 0.0 <= phi < 1.0:
            raise ConfigError("jordan-cell.phi: must lie in [0, 1)")
        order = _as_int(_need(payload, "order", "jordan-cell"), "jordan-cell.order", 2)
        rows = _need(payload, "ytilde", "jordan-cell")
        if not isinstance(rows, list) or len(rows) != order:
            raise ConfigError("jordan-cell.ytilde: expected one source per row")
        for i, row in enumerate(rows):
            _check_source_shape(row, f"jordan-cell.ytilde[{i}]")
        if "x1_first" in payload:
            _as_complex(payload["x1_first"], "jordan-cell.x1_first")
        for key in ("probe_horizon", "perturb_horizon"):
            if key in payload:
                _as_int(payload[key], f"jordan-cell.{key}", 1)
        if "perturb_row" in payload:
            row = _as_int(payload["perturb_row"], "jordan-cell.perturb_row", 2)
            if row > order:
                raise ConfigError("jordan-cell.perturb_row: exceeds cell order")
        if "perturb_delta" in payload:
            _as_complex(payload["perturb_delta"], "jordan-cell.perturb_delta")
    else:  # jordan-system
        blocks = _need(payload, "blocks", "jordan-system")
        if not isinstance(blocks, list) or not blocks:
            raise ConfigError("jordan-system.blocks: expected a non-empty list")
        for i, blk in enumerate(blocks):
            where = f"jordan-system.blocks[{i}]"
            if not isinstance(blk, dict):
                raise ConfigError(f"{where}: expected an object")
            _reject_unknown(blk, {"rho", "phi", "order", "inputs", "x1"}, where)
            rho = _as_number(_need(blk, "rho", where), f"{where}.rho")
            if rho <= 0:
                raise ConfigError(f"{where}.rho: must be positive")
            phi = _as_number(_need(blk, "phi", where), f"{where}.phi")
            if not 0.0 <= phi < 1.0:
                raise ConfigError(f"{where}.phi: must lie in [0, 1)")
            order = _as_int(_need(blk, "order", where), f"{where}.order", 1)
            inputs = _need(blk, "inputs", where)
            if not isinstance(inputs, list) or len(inputs) != order:
                raise ConfigError(f"{where}.inputs: expected one source per row")
            for j, src in enumerate(inputs):
                _check_source_shape(src, f"{where}.inputs[{j}]")
            if "x1" in blk:
                x1 = blk["x1"]
                if not isinstance(x1, list) or len(x1) != order:
                    raise ConfigError(f"{where}.x1: expected one value per row")
                for j, v in enumerate(x1):
                    _as_complex(v, f"{where}.x1[{j}]")
        if "transform" in payload and payload["transform"] is not None:
            t = payload["transform"]
            if not isinstance(t, list) or not all(isinstance(r, list) for r in t):
                raise ConfigError("jordan-system.transform: expected a matrix (list of rows)")
            for i, row in enumerate(t):
                for j, v in enumerate(row):
                    _as_complex(v, f"jordan-system.transform[{i}][{j}]")
    return payload


def _validate_majorant(spec: Any) -> None:
    if spec is None:
        return
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        if spec < 0:
            raise ConfigError("tail_majorant: must be nonnegative")
        return
    if isinstance(spec, dict):
        _reject_unknown(spec, {"expr", "monotone_decreasing"}, "tail_majorant")
        _as_str(_need(spec, "expr", "tail_majorant"), "tail_majorant.expr")
        flag = _need(spec, "monotone_decreasing", "tail_majorant")
        if flag is not True:
            raise ConfigError("tail_majorant.monotone_decreasing: must be declared true")
        return
    raise ConfigError("tail_majorant: expected a number or {expr, monotone_decreasing}")


def validate_config(doc: Any) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected a JSON object")
    kind = _as_str(_need(doc, "kind", "top level"), "kind")
    if kind not in KINDS:
        raise ConfigError(f"kind: must be one of {', '.join(KINDS)}")
    extra = {k for k in doc if k not in _TOP_KEYS and k not in _KIND_KEYS[kind]}
    if extra:
        raise ConfigError(f"{kind}: unknown key(s) {', '.join(sorted(extra))}")
    horizon = _as_int(doc.get("horizon", _DEFAULT_HORIZON[kind]), "horizon", 1)
    tolerance = _as_number(doc.get("tolerance", 1e-8), "tolerance")
    if tolerance <= 0:
        raise ConfigError("tolerance: must be positive")
    plot = doc.get("plot", False)
    if not isinstance(plot, bool):
        raise ConfigError("plot: expected true or false")
    outputs = _validate_outputs(doc.get("output"))
    sweep = _validate_sweep(doc.get("sweep"))
    payload = _validate_payload(kind, doc)
    return ExperimentConfig(kind, horizon, tolerance, payload, outputs, sweep, plot, doc)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate_config(doc)


def substitute_parameter(doc: Any, name: str, value: float):
    """Deep-copy `doc` replacing '{name}' placeholders in strings with repr(value)."""
    token = "{" + name + "}"
    if isinstance(doc, str):
        return doc.replace(token, repr(float(value)))
    if isinstance(doc, list):
        return [substitute_parameter(v, name, value) for v in doc]
    if isinstance(doc, dict):
        return {k: substitute_parameter(v, name, value) for k, v in doc.items()}
    return doc
