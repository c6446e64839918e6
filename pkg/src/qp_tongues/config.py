"""JSON run configurations for sweeps.

A document looks like::

    {
      "policy": {"preset": "desk", "step": 0.01},
      "workers": 4,
      "sweeps": [
        {"name": "mean", "plane": "delta-delta1", "model": "slow-mean",
         "x": {"min": -1.5, "max": 1.5, "n": 51},
         "y": {"min": 0.05, "max": 3.0, "n": 51},
         "mu": 0.1, "omega_drive": 6.283185307179586}
      ]
    }

Validation failures raise :class:`ConfigError` naming the offending field
path, e.g. ``sweeps[0].x.n``.
"""

from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigError, QPTonguesError
from .models import ModelKind
from .stability import Axis, ClassifierPolicy, GridSpec, Plane

_SWEEP_KEYS = {"name", "plane", "model", "x", "y", "omega_drive", "mu", "epsilon",
               "delta_cap", "alpha", "resonance"}
_POLICY_KEYS = {f.name for f in fields(ClassifierPolicy)} | {"preset"}
_TOP_KEYS = {"policy", "sweeps", "workers", "out_dir"}


@dataclass(frozen=True)
class SweepEntry:
    name: str
    spec: GridSpec


@dataclass(frozen=True)
class RunConfig:
    policy: ClassifierPolicy
    sweeps: tuple
    workers: int = 1
    out_dir: Optional[str] = None


def _number(value, path, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return int(value) if integer else float(value)


def _unknown(keys, allowed, path):
    extra = sorted(set(keys) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def parse_policy(doc, path="policy") -> ClassifierPolicy:
    if doc is None:
        return ClassifierPolicy.desk()
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    _unknown(doc, _POLICY_KEYS, path)
    preset = doc.get("preset", "desk")
    if preset not in ("desk", "reference"):
        raise ConfigError(f"{path}.preset", f"expected 'desk' or 'reference', got {preset!r}")
    base = ClassifierPolicy.desk() if preset == "desk" else ClassifierPolicy.reference()
    values = base.to_dict()
    for key, value in doc.items():
        if key == "preset":
            continue
        if key == "bail_out" and value is None:
            values[key] = None
        else:
            values[key] = _number(value, f"{path}.{key}", integer=(key == "n_windows"))
    try:
        return ClassifierPolicy(**values)
    except QPTonguesError as exc:
        raise ConfigError(path, str(exc)) from exc


def _axis(doc, path) -> Axis:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object with min, max, n")
    _unknown(doc, {"min", "max", "n"}, path)
    for key in ("min", "max", "n"):
        if key not in doc:
            raise ConfigError(f"{path}.{key}", "missing")
    lo = _number(doc["min"], f"{path}.min")
    hi = _number(doc["max"], f"{path}.max")
    n = _number(doc["n"], f"{path}.n", integer=True)
    if n < 2:
        raise ConfigError(f"{path}.n", "must be >= 2")
    if hi < lo:
        raise ConfigError(f"{path}.max", "must not be below min")
    return Axis(lo, hi, n)


def parse_sweep(doc, path, index=0) -> SweepEntry:
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    _unknown(doc, _SWEEP_KEYS, path)
    for key in ("plane", "model", "x", "y"):
        if key not in doc:
            raise ConfigError(f"{path}.{key}", "missing")
    try:
        plane = Plane(doc["plane"])
    except ValueError:
        raise ConfigError(f"{path}.plane", f"unknown plane {doc['plane']!r}") from None
    try:
        model = ModelKind(doc["model"])
    except ValueError:
        raise ConfigError(f"{path}.model", f"unknown model {doc['model']!r}") from None
    kwargs = {"plane": plane, "model": model,
              "x": _axis(doc["x"], f"{path}.x"), "y": _axis(doc["y"], f"{path}.y")}
    for key in ("omega_drive", "mu", "epsilon", "delta_cap", "alpha"):
        if doc.get(key) is not None:
            kwargs[key] = _number(doc[key], f"{path}.{key}")
    if "resonance" in doc:
        kwargs["resonance"] = doc["resonance"]
    name = doc.get("name", f"sweep{index}")
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ConfigError(f"{path}.name", "must be a non-empty file-name-safe string")
    try:
        spec = GridSpec(**kwargs)
    except QPTonguesError as exc:
        raise ConfigError(path, str(exc)) from exc
    return SweepEntry(name, spec)


def parse_config(doc) -> RunConfig:
    """Validate a decoded JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("", "top level must be an object")
    _unknown(doc, _TOP_KEYS, "")
    policy = parse_policy(doc.get("policy"))
    sweeps = doc.get("sweeps")
    if not isinstance(sweeps, list) or not sweeps:
        raise ConfigError("sweeps", "expected a non-empty list")
    entries = tuple(parse_sweep(s, f"sweeps[{i}]", i) for i, s in enumerate(sweeps))
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise ConfigError("sweeps", "sweep names must be unique")
    workers = _number(doc.get("workers", 1), "workers", integer=True)
    if workers < 1:
        raise ConfigError("workers", "must be >= 1")
    out_dir = doc.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir", "expected a string")
    return RunConfig(policy, entries, workers, out_dir)


def _set_path(doc, dotted: str, value):
    """Assign ``value`` at ``dotted`` (``policy.step``, ``sweeps[0].x.n`` or a sweep key)."""
    tokens = re.findall(r"[^.\[\]]+|\[\d+\]", dotted)
    if not tokens:
        raise ConfigError(dotted, "empty override path")
    if tokens[0] not in _TOP_KEYS:
        # bare sweep keys apply to every sweep
        for sweep in doc.get("sweeps", []):
            _assign(sweep, tokens, value, dotted)
        return
    _assign(doc, tokens, value, dotted)


def _assign(node, tokens, value, dotted):
    for tok in tokens[:-1]:
        if tok.startswith("["):
            idx = int(tok[1:-1])
            if not isinstance(node, list) or idx >= len(node):
                raise ConfigError(dotted, "index out of range")
            node = node[idx]
        else:
            if not isinstance(node, dict):
                raise ConfigError(dotted, "cannot descend into a non-object")
            node = node.setdefault(tok, {})
    last = tokens[-1]
    if last.startswith("["):
        raise ConfigError(dotted, "cannot assign to a list element")
    node[last] = value


def apply_overrides(doc: dict, overrides) -> dict:
    """Return a copy of ``doc`` with ``KEY=VALUE`` overrides applied (values parsed as JSON)."""
    doc = copy.deepcopy(doc)
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(item, "override must look like KEY=VALUE")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_path(doc, key.strip(), value)
    return doc


def load_config(path, overrides=()) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(apply_overrides(doc, overrides))
