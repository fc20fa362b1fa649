"""JSON scenario files.

Matrices are row-major nested lists.  ``X0`` is ``n x m`` with column ``i``
holding the initial state of agent ``i``.

    {
      "name": "...", "comment": "...",            (comment optional)
      "E": [[...]], "F": [[...]], "W": [[...]], "X0": [[...]],
      "t_span": [0, T], "samples": 400,          (samples optional)
      "tolerances": {"rank": 1e-10, ...},        (optional, Tolerances fields)
      "expect": "consensus" | "swarm_stable" | "swarm_unstable"   (optional)
    }
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .matkit import DEFAULT_TOL, Tolerances

EXPECTATIONS = ("consensus", "swarm_stable", "swarm_unstable")
BUILTIN = {1: "paper-1.json", 2: "paper-2.json", 3: "paper-3.json"}
_TOL_FIELDS = {f.name for f in dataclasses.fields(Tolerances)}
_KEYS = {"name", "comment", "E", "F", "W", "X0", "t_span", "samples", "tolerances", "expect"}


class ScenarioError(ValueError):
    """Carries every validation problem found, not just the first."""

    def __init__(self, errors, source=None):
        self.errors = list(errors)
        self.source = source
        where = f"{source}: " if source else ""
        super().__init__(where + "; ".join(self.errors))


@dataclass
class Scenario:
    name: str
    E: np.ndarray
    F: np.ndarray
    W: np.ndarray
    X0: np.ndarray
    t_span: tuple
    samples: int = 400
    tolerances: dict = field(default_factory=dict)
    expect: Optional[str] = None
    comment: str = ""

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def m(self) -> int:
        return self.W.shape[0]

    @property
    def tol(self) -> Tolerances:
        return DEFAULT_TOL.override(**self.tolerances)

    def t_grid(self) -> np.ndarray:
        return np.linspace(self.t_span[0], self.t_span[1], self.samples)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "comment": self.comment,
            "E": self.E.tolist(),
            "F": self.F.tolist(),
            "W": self.W.tolist(),
            "X0": self.X0.tolist(),
            "t_span": list(self.t_span),
            "samples": self.samples,
        }
        if self.tolerances:
            out["tolerances"] = dict(self.tolerances)
        if self.expect is not None:
            out["expect"] = self.expect
        return out


def _matrix(data, key, errors):
    if key not in data:
        errors.append(f"missing key '{key}'")
        return None
    try:
        a = np.array(data[key], dtype=float)
    except (TypeError, ValueError):
        errors.append(f"'{key}' must be a rectangular array of numbers")
        return None
    if a.ndim != 2 or a.size == 0:
        errors.append(f"'{key}' must be a non-empty matrix, got shape {a.shape}")
        return None
    if not np.all(np.isfinite(a)):
        errors.append(f"'{key}' has non-finite entries")
        return None
    return a


def scenario_from_dict(data, source=None) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError(["top level must be a JSON object"], source)
    errors = [f"unknown key '{k}'" for k in sorted(set(data) - _KEYS)]
    E = _matrix(data, "E", errors)
    F = _matrix(data, "F", errors)
    W = _matrix(data, "W", errors)
    X0 = _matrix(data, "X0", errors)

    if E is not None and E.shape[0] != E.shape[1]:
        errors.append(f"E must be square, got {E.shape[0]}x{E.shape[1]}")
    if E is not None and F is not None and F.shape != E.shape:
        errors.append(f"F must match E ({E.shape[0]}x{E.shape[1]}), got {F.shape[0]}x{F.shape[1]}")
    if W is not None:
        if W.shape[0] != W.shape[1]:
            errors.append(f"W must be square, got {W.shape[0]}x{W.shape[1]}")
        for i, j in np.argwhere(W < 0):
            errors.append(f"negative weight W[{i}][{j}] = {W[i, j]:g}")
        for i in np.flatnonzero(np.diag(W) != 0) if W.shape[0] == W.shape[1] else []:
            errors.append(f"nonzero diagonal W[{i}][{i}] = {W[i, i]:g}")
    if X0 is not None and E is not None and W is not None:
        want = (E.shape[0], W.shape[0])
        if X0.shape != want:
            errors.append(f"X0 must be n x m = {want[0]}x{want[1]}, got {X0.shape[0]}x{X0.shape[1]}")

    t_span = data.get("t_span")
    if t_span is None:
        errors.append("missing key 't_span'")
    elif (
        not isinstance(t_span, list)
        or len(t_span) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in t_span)
    ):
        errors.append("'t_span' must be [0, t_end]")
    elif t_span[0] != 0 or not t_span[1] > 0:
        errors.append(f"'t_span' must be [0, t_end] with t_end > 0, got {t_span}")

    samples = data.get("samples", 400)
    if not isinstance(samples, int) or isinstance(samples, bool) or samples < 2:
        errors.append(f"'samples' must be an integer >= 2, got {samples!r}")

    tolerances = data.get("tolerances", {})
    if not isinstance(tolerances, dict):
        errors.append("'tolerances' must be an object")
        tolerances = {}
    for k, v in tolerances.items():
        if k not in _TOL_FIELDS:
            errors.append(f"unknown tolerance '{k}' (known: {', '.join(sorted(_TOL_FIELDS))})")
        elif not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            errors.append(f"tolerance '{k}' must be a positive number")

    expect = data.get("expect")
    if expect is not None and expect not in EXPECTATIONS:
        errors.append(f"'expect' must be one of {', '.join(EXPECTATIONS)}, got {expect!r}")

    name = data.get("name", "")
    if not isinstance(name, str) or not name:
        errors.append("'name' must be a non-empty string")

    if errors:
        raise ScenarioError(errors, source)
    return Scenario(
        name=name,
        E=E,
        F=F,
        W=W,
        X0=X0,
        t_span=(float(t_span[0]), float(t_span[1])),
        samples=samples,
        tolerances={k: float(v) for k, v in tolerances.items()},
        expect=expect,
        comment=str(data.get("comment", "")),
    )


def parse_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError([f"cannot read: {exc.strerror}"], str(path)) from exc
    return parse_text(text, str(path))


def parse_text(text, source=None) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"], source) from exc
    return scenario_from_dict(data, source)


def builtin_text(instance: int) -> str:
    if instance not in BUILTIN:
        raise ValueError(f"built-in instances are {sorted(BUILTIN)}, got {instance}")
    return resources.files("swarmstab.scenarios").joinpath(BUILTIN[instance]).read_text()


def load_builtin(instance: int) -> Scenario:
    return parse_text(builtin_text(instance), f"<builtin {BUILTIN.get(instance)}>")
