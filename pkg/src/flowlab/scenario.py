"""Scenario files: strict JSON descriptions of a single flow experiment.

A scenario fixes everything needed to reproduce a run::

    {
      "base": {"tau": [0.0, 1.0], "N": 64},
      "bundle": {"kind": "sum", "summands": [{"kind": "line", "degree": 1},
                                             {"kind": "line", "degree": -1}]},
      "group": {"name": "SL2"},
      "initial_metric": {"kind": "perturbed", "seed": 7, "amplitude": 0.3},
      "flow": {"cfl": 0.4, "max_steps": 4000, "epsilon_target": 1e-3},
      "outputs": {"directory": "runs/l1m1", "emit_svg": true}
    }

Unknown keys are errors, reported with the line and column where they
occur.  ``group`` may be ``null`` for plain vector-bundle runs.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from . import bundles
from .flow import FlowConfig
from .metrics import MetricField, canonical_metric, degree, load_snapshot, perturb
from .principal import center_constant, group as make_group
from .torus import TorusDomain, make_torus


class ScenarioError(ValueError):
    """A scenario that cannot be parsed; carries a 1-based line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


_TOP_KEYS = {"base", "bundle", "group", "initial_metric", "flow", "outputs"}
_BASE_KEYS = {"tau", "N"}
_GROUP_KEYS = {"name"}
_OUTPUT_KEYS = {"directory", "emit_svg"}
_FLOW_KEYS = {f.name for f in fields(FlowConfig)}
_INITIAL_KEYS = {
    "canonical": {"kind"},
    "perturbed": {"kind", "seed", "amplitude", "det_constrained"},
    "snapshot": {"kind", "path"},
}
_BUNDLE_KEYS = {
    "line": {"kind", "degree"},
    "atiyah": {"kind"},
    "sum": {"kind", "summands"},
    "dual": {"kind", "of"},
    "tensor": {"kind", "factors"},
    "end": {"kind", "of"},
    "end0": {"kind", "of"},
    "perturbed_multiplier": {"kind", "of", "epsilon"},
}


@dataclass
class Scenario:
    tau: complex = 1j
    N: int = 64
    bundle: dict = field(default_factory=lambda: {"kind": "line", "degree": 1})
    group: dict | None = None
    initial_metric: dict = field(default_factory=lambda: {"kind": "canonical"})
    flow: FlowConfig = field(default_factory=FlowConfig)
    directory: str | None = None
    emit_svg: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "base": {"tau": [self.tau.real, self.tau.imag], "N": self.N},
            "bundle": self.bundle,
            "group": self.group,
            "initial_metric": self.initial_metric,
            "flow": asdict(self.flow),
            "outputs": {"directory": self.directory, "emit_svg": self.emit_svg},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    # -- construction helpers -------------------------------------------

    def domain(self, N: int | None = None) -> TorusDomain:
        return make_torus(self.tau, self.N if N is None else N)

    def build_bundle(self) -> bundles.FactorSystem:
        return bundles.from_descriptor(self.bundle, self.tau)

    def initial(self, N: int | None = None, base_dir: Path | None = None) -> MetricField:
        """The initial metric on the scenario's grid (or on ``N`` if given)."""
        init = self.initial_metric
        if init["kind"] == "snapshot":
            path = Path(init["path"])
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            h = load_snapshot(path)
            if h.domain.N != (self.N if N is None else N) or h.domain.tau != self.tau:
                raise ScenarioError(f"snapshot {path} does not match the scenario grid")
            return h
        h = canonical_metric(self.build_bundle(), self.domain(N))
        if init["kind"] == "perturbed":
            h = perturb(h, int(init["seed"]), float(init["amplitude"]),
                        bool(init.get("det_constrained", False)))
        return h

    def einstein_constant(self, h: MetricField) -> float:
        """``lam``: from the group's centre when a group is set, else from the slope."""
        if self.group is not None:
            return center_constant(make_group(self.group["name"]), h.bundle, h.domain.N)
        return degree(h.bundle, h).einstein_constant


# ---------------------------------------------------------------- parsing

def _locate(text: str, key: str) -> tuple[int | None, int | None]:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if m is None:
        return None, None
    line = text.count("\n", 0, m.start()) + 1
    col = m.start() - (text.rfind("\n", 0, m.start()) + 1) + 1
    return line, col


def _check_keys(obj: Any, allowed: set[str], what: str, text: str) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{what} must be a JSON object")
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"unknown key {key!r} in {what}", *_locate(text, key))


def _check_bundle(desc: Any, text: str, where: str = "bundle") -> None:
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ScenarioError(f"{where} must be an object with a 'kind'")
    kind = desc["kind"]
    if kind not in _BUNDLE_KEYS:
        raise ScenarioError(f"unknown bundle kind {kind!r}", *_locate(text, "kind"))
    _check_keys(desc, _BUNDLE_KEYS[kind], f"{where} ({kind})", text)
    missing = _BUNDLE_KEYS[kind] - set(desc)
    if missing:
        raise ScenarioError(f"{where} ({kind}) is missing {sorted(missing)}")
    if kind == "sum":
        for i, d in enumerate(desc["summands"]):
            _check_bundle(d, text, f"{where}.summands[{i}]")
    elif kind == "tensor":
        if len(desc["factors"]) != 2:
            raise ScenarioError(f"{where}: tensor takes exactly two factors")
        for i, d in enumerate(desc["factors"]):
            _check_bundle(d, text, f"{where}.factors[{i}]")
    elif "of" in desc:
        _check_bundle(desc["of"], text, f"{where}.of")


def parse(text: str) -> Scenario:
    """Parse and validate scenario JSON.  Raises :class:`ScenarioError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    _check_keys(raw, _TOP_KEYS, "scenario", text)
    for key in ("base", "bundle"):
        if key not in raw:
            raise ScenarioError(f"scenario is missing {key!r}")

    base = raw["base"]
    _check_keys(base, _BASE_KEYS, "base", text)
    tau = base.get("tau", [0.0, 1.0])
    if not (isinstance(tau, list) and len(tau) == 2):
        raise ScenarioError("base.tau must be [re, im]", *_locate(text, "tau"))
    n = base.get("N", 64)
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in tau):
        raise ScenarioError("base.tau entries must be numbers", *_locate(text, "tau"))
    if not isinstance(n, int) or isinstance(n, bool):
        raise ScenarioError("base.N must be an integer", *_locate(text, "N"))
    # the geometry itself (upper half-plane, even N >= 8) is checked when the
    # domain is built, so that ``validate`` can report it as a table row

    _check_bundle(raw["bundle"], text)

    grp = raw.get("group")
    if grp is not None:
        _check_keys(grp, _GROUP_KEYS, "group", text)
        try:
            make_group(grp.get("name", "SL2"))
        except ValueError as exc:
            raise ScenarioError(str(exc), *_locate(text, "name")) from None
        grp = {"name": grp.get("name", "SL2")}

    init = raw.get("initial_metric", {"kind": "canonical"})
    if not isinstance(init, dict) or init.get("kind") not in _INITIAL_KEYS:
        raise ScenarioError("initial_metric.kind must be one of "
                            f"{sorted(_INITIAL_KEYS)}", *_locate(text, "initial_metric"))
    _check_keys(init, _INITIAL_KEYS[init["kind"]], "initial_metric", text)
    if init["kind"] == "perturbed" and not {"seed", "amplitude"} <= set(init):
        raise ScenarioError("a perturbed initial metric needs an explicit seed and amplitude",
                            *_locate(text, "initial_metric"))
    if init["kind"] == "snapshot" and "path" not in init:
        raise ScenarioError("a snapshot initial metric needs a path", *_locate(text, "initial_metric"))

    flow = raw.get("flow", {})
    _check_keys(flow, _FLOW_KEYS, "flow", text)
    try:
        config = FlowConfig(**flow)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"flow: {exc}", *_locate(text, "flow")) from None

    out = raw.get("outputs", {})
    _check_keys(out, _OUTPUT_KEYS, "outputs", text)
    return Scenario(tau=complex(float(tau[0]), float(tau[1])), N=n, bundle=raw["bundle"], group=grp,
                    initial_metric=dict(init), flow=config,
                    directory=out.get("directory"), emit_svg=bool(out.get("emit_svg", False)))


def load(path: str | Path) -> Scenario:
    return parse(Path(path).read_text())


def semantically_equal(a: Scenario, b: Scenario) -> bool:
    da, db = a.to_dict(), b.to_dict()
    return json.loads(json.dumps(da)) == json.loads(json.dumps(db))

