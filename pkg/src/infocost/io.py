"""JSON readers and writers for the package's data types.

Readers reject inputs that violate an invariant by more than ``READ_TOL``
and silently renormalize smaller drift.  :func:`dumps` writes every float
with 17 significant digits so results round-trip bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .dynamic import DynamicProblem, FlowTransform
from .errors import InvariantError
from .replication import BeliefProcess, SignalTree, Stage
from .structures import InformationStructure, MarkovKernel, SignalExperiment

READ_TOL = 1e-9


class MalformedInput(ValueError):
    """Input is not valid JSON or lacks required fields."""


def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int | None = 2, _level: int = 0) -> str:
    """Deterministic JSON text; floats carry 17 significant digits."""
    pad = "" if indent is None else "\n" + " " * (indent * (_level + 1))
    end = "" if indent is None else "\n" + " " * (indent * _level)
    sep = ", " if indent is None else "," + pad
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{" + pad + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [dumps(v, indent, _level + 1) for v in obj]
        return "[" + pad + sep.join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def load_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"{path}: {exc}") from exc


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _require(obj: dict, *keys):
    if not isinstance(obj, dict):
        raise MalformedInput("expected a JSON object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise MalformedInput(f"missing field(s): {', '.join(missing)}")


def _array(x, ndim: int, what: str) -> np.ndarray:
    try:
        a = np.array(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"{what}: not numeric") from exc
    if a.ndim != ndim:
        raise MalformedInput(f"{what}: expected a {ndim}-d array")
    return a


# ---------------------------------------------------------------------------
# structures and experiments


def structure_from_json(obj: dict) -> InformationStructure:
    _require(obj, "atoms")
    atoms = obj["atoms"]
    if not isinstance(atoms, list) or not atoms:
        raise MalformedInput("atoms must be a nonempty list")
    for a in atoms:
        _require(a, "w", "p")
    w = _array([a["w"] for a in atoms], 1, "weights")
    try:
        P = _array([a["p"] for a in atoms], 2, "posteriors")
    except ValueError as exc:
        raise MalformedInput("posteriors have mixed dimensions") from exc
    if "states" in obj and P.shape[1] != int(obj["states"]):
        raise InvariantError(f"posteriors have {P.shape[1]} entries, states = {obj['states']}")
    if np.any(w < 0):
        raise InvariantError("negative weight")
    if abs(w.sum() - 1) > READ_TOL:
        raise InvariantError(f"weights sum to {float(w.sum())!r}")
    if np.abs(P.sum(axis=1) - 1).max() > READ_TOL or P.min() < -READ_TOL:
        raise InvariantError("a posterior is not a probability vector")
    return InformationStructure(w, P)


def structure_to_json(pi: InformationStructure) -> dict:
    return {"states": pi.n_states,
            "atoms": [{"w": float(w), "p": p.tolist()} for w, p in pi]}


def experiment_from_json(obj: dict) -> SignalExperiment:
    _require(obj, "prior", "kernel")
    return SignalExperiment(_array(obj["prior"], 1, "prior"), _array(obj["kernel"], 2, "kernel"))


def experiment_to_json(e: SignalExperiment) -> dict:
    return {"prior": e.prior.tolist(), "kernel": e.kernel.tolist()}


# ---------------------------------------------------------------------------
# kernels and processes


def kernel_to_json(k: MarkovKernel) -> dict:
    return {"acquisition": k.acquisition,
            "entries": [{"source": s.tolist(), "structure": structure_to_json(st)} for s, st in k]}


def kernel_from_json(obj: dict) -> MarkovKernel:
    _require(obj, "entries")
    acq = bool(obj.get("acquisition", True))
    entries = []
    for e in obj["entries"]:
        _require(e, "source", "structure")
        entries.append((_array(e["source"], 1, "source"), structure_from_json(e["structure"])))
    return MarkovKernel(entries, acquisition=acq)


def process_to_json(p: BeliefProcess) -> dict:
    return {
        "initial": p.initial.tolist(),
        "info": {k: v for k, v in p.info.items() if isinstance(v, (int, float, str))},
        "stages": [{"acquire": kernel_to_json(s.acquire),
                    "dispose": None if s.dispose is None else kernel_to_json(s.dispose),
                    "repeat": s.repeat} for s in p.stages],
    }


def process_from_json(obj: dict) -> BeliefProcess:
    _require(obj, "initial", "stages")
    stages = []
    for s in obj["stages"]:
        _require(s, "acquire")
        dis = s.get("dispose")
        stages.append(Stage(kernel_from_json(s["acquire"]),
                            None if dis is None else kernel_from_json(dis),
                            int(s.get("repeat", 1))))
    return BeliefProcess(_array(obj["initial"], 1, "initial"), stages, obj.get("info"))


def tree_from_json(obj: dict) -> SignalTree:
    _require(obj, "prior", "layers")
    layers = []
    for layer in obj["layers"]:
        _require(layer, "kind")
        if layer["kind"] == "acquire":
            _require(layer, "likelihoods")
            layers.append(("acquire", [_array(L, 2, "likelihood") for L in layer["likelihoods"]]))
        elif layer["kind"] == "dispose":
            _require(layer, "matrix")
            layers.append(("dispose", _array(layer["matrix"], 2, "disposal matrix")))
        else:
            raise MalformedInput(f"unknown layer kind {layer['kind']!r}")
    return SignalTree(_array(obj["prior"], 1, "prior"), tuple(layers))


def tree_to_json(t: SignalTree) -> dict:
    layers = []
    for kind, data in t.layers:
        if kind == "acquire":
            layers.append({"kind": "acquire", "likelihoods": [np.asarray(L).tolist() for L in data]})
        else:
            layers.append({"kind": "dispose", "matrix": np.asarray(data).tolist()})
    return {"prior": t.prior.tolist(), "layers": layers}


# ---------------------------------------------------------------------------
# dynamic problems


def problem_from_json(obj: dict) -> DynamicProblem:
    _require(obj, "u", "m", "f", "prior")
    f = obj["f"]
    _require(f, "kind")
    default = {"linear": 1.0, "power": 2.0, "cap": 1.0}.get(f["kind"], 1.0)
    flow = FlowTransform(f["kind"], float(f.get("param", default)))
    return DynamicProblem(_array(obj["u"], 2, "u"), float(obj["m"]), flow,
                          _array(obj["prior"], 1, "prior"))


def problem_to_json(p: DynamicProblem) -> dict:
    return {"u": p.u.tolist(), "m": p.m, "f": {"kind": p.f.kind, "param": p.f.param},
            "prior": p.prior.tolist()}
