"""JSON (schema v1) for functionals and behaviors.

    {"scenario": {"inputs": N, "outputs": K, "bottom": bool},
     "tensor": [flat row-major over (x, y, a, b)],
     "kind": "functional" | "behavior"}

``outputs`` counts regular outputs; with ``bottom`` the tensor carries K+1
outputs per party.  Behaviors may add an optional ``"provenance"`` field.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .model import PROVENANCES, RAW, Behavior, BellFunctional, Scenario

KINDS = ("functional", "behavior")


def scenario_to_dict(sc: Scenario) -> dict:
    return {"inputs": sc.inputs, "outputs": sc.outputs, "bottom": sc.has_bottom}


def to_dict(obj) -> dict:
    if isinstance(obj, BellFunctional):
        return {"scenario": scenario_to_dict(obj.scenario), "tensor": obj.m.ravel().tolist(), "kind": "functional"}
    if isinstance(obj, Behavior):
        return {"scenario": scenario_to_dict(obj.scenario), "tensor": obj.p.ravel().tolist(),
                "kind": "behavior", "provenance": obj.provenance}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _field(d, key, types: type, where):
    if not isinstance(d, dict) or key not in d:
        raise ValidationError(f"{where}: missing field {key!r}")
    val = d[key]
    # bool is an int subclass; only accept it where a bool is asked for
    if not isinstance(val, types) or (isinstance(val, bool) and types is not bool):
        raise ValidationError(f"{where}.{key}: expected {types.__name__}, got {type(val).__name__}")
    return val


def from_dict(d: dict, expect: str | None = None):
    kind = _field(d, "kind", str, "$")
    if kind not in KINDS:
        raise ValidationError(f"$.kind: must be one of {KINDS}, got {kind!r}")
    if expect is not None and kind != expect:
        raise ValidationError(f"$.kind: expected {expect!r}, got {kind!r}")
    sd = _field(d, "scenario", dict, "$")
    n = _field(sd, "inputs", int, "$.scenario")
    k = _field(sd, "outputs", int, "$.scenario")
    bottom = _field(sd, "bottom", bool, "$.scenario")
    sc = Scenario(n, k, bottom)
    flat = _field(d, "tensor", list, "$")
    expected = int(np.prod(sc.shape))
    if len(flat) != expected:
        raise ValidationError(f"$.tensor: length {len(flat)} but N*N*K'*K' = {expected}")
    for i, v in enumerate(flat):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError(f"$.tensor[{i}]: expected a number, got {v!r}")
    tensor = np.asarray(flat, dtype=float).reshape(sc.shape)
    if kind == "functional":
        return BellFunctional(sc, tensor)
    prov = d.get("provenance", RAW)
    if prov not in PROVENANCES:
        raise ValidationError(f"$.provenance: must be one of {PROVENANCES}, got {prov!r}")
    return Behavior(sc, tensor, prov)


def loads(text: str, expect: str | None = None):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return from_dict(d, expect)


def load(path, expect: str | None = None):
    return loads(Path(path).read_text(), expect)


def dumps(obj, **kw) -> str:
    return json.dumps(obj if isinstance(obj, dict) else to_dict(obj), sort_keys=True, **kw)


def dump(obj, path) -> None:
    Path(path).write_text(dumps(obj, indent=1) + "\n")
