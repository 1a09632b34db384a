"""State JSON formats, canonical serialization, and result envelopes.

Formats (row-major, exact decimal floats):
  {"kind": "density",   "dims": [...], "re": [[...]], "im": [[...]]}
  {"kind": "classical", "dims": [...], "probs": nested array}
  {"kind": "cq",        "probs": [...], "conditionals": [<density>...]}
  {"kind": "separable", "probs": [...], "parties": [[<density>...], ...]}
  {"kind": "schmidt",   "amplitudes": [...]}
  {"kind": "ensemble",  "probs": [...], "targets": [<schmidt>...]}
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .states import (
    CQState,
    DensityMatrix,
    SchmidtSpectrum,
    SeparableDecomposition,
    make_schmidt,
    make_separable,
    make_state,
)

TOOL_VERSION = "0.1.0"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def content_digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def density_to_json(rho: DensityMatrix) -> dict:
    return {
        "kind": "density",
        "dims": [int(d) for d in rho.dims],
        "re": np.real(rho.mat).tolist(),
        "im": np.imag(rho.mat).tolist(),
    }


def classical_to_json(probs: np.ndarray) -> dict:
    p = np.asarray(probs, dtype=float)
    return {"kind": "classical", "dims": list(p.shape), "probs": p.tolist()}


def schmidt_to_json(s: SchmidtSpectrum) -> dict:
    return {"kind": "schmidt", "amplitudes": s.amplitudes.tolist()}


def cq_to_json(cq: CQState) -> dict:
    return {"kind": "cq", "probs": np.asarray(cq.probs, dtype=float).tolist(),
            "conditionals": [density_to_json(c) for c in cq.conditionals]}


def separable_to_json(dec: SeparableDecomposition) -> dict:
    return {"kind": "separable",
            "probs": np.asarray(dec.probs, dtype=float).tolist(),
            "parties": [[density_to_json(c) for c in party]
                        for party in dec.party_conditionals]}


def parse_state(obj: dict):
    """Kind-dispatched parse with validation."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParseError("state JSON must be an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "density":
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
            return make_state(re + 1j * im, obj["dims"])
        if kind == "classical":
            probs = np.asarray(obj["probs"], dtype=float)
            if "dims" in obj and list(probs.shape) != list(obj["dims"]):
                probs = probs.reshape(obj["dims"])
            return probs
        if kind == "cq":
            conds = tuple(parse_state(c) for c in obj["conditionals"])
            return CQState(np.asarray(obj["probs"], dtype=float), conds)
        if kind == "schmidt":
            return make_schmidt(obj["amplitudes"])
        if kind == "separable":
            parties = [[parse_state(c) for c in party] for party in obj["parties"]]
            return make_separable(obj["probs"], parties)
        if kind == "ensemble":
            return (np.asarray(obj["probs"], dtype=float),
                    [make_schmidt(t["amplitudes"]) for t in obj["targets"]])
    except KeyError as exc:
        raise ParseError(f"missing field {exc} in {kind} JSON") from exc
    raise ParseError(f"unknown state kind {kind!r}")


def to_json(value):
    if isinstance(value, DensityMatrix):
        return density_to_json(value)
    if isinstance(value, CQState):
        return cq_to_json(value)
    if isinstance(value, SchmidtSpectrum):
        return schmidt_to_json(value)
    if isinstance(value, SeparableDecomposition):
        return separable_to_json(value)
    if isinstance(value, np.ndarray):
        return to_json(value.tolist())
    if isinstance(value, (np.floating, np.integer)):
        return to_json(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {k: to_json(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_json(v) for v in value]
    if hasattr(value, "__dataclass_fields__"):
        return {k: to_json(getattr(value, k)) for k in value.__dataclass_fields__}
    return value


def load_state(path: str):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read state JSON at {path}: {exc}") from exc
    return parse_state(obj)


def save_state(path: str, value) -> None:
    with open(path, "w") as fh:
        fh.write(canonical_json(to_json(value)))
        fh.write("\n")


@dataclass
class ResultEnvelope:
    command: str
    inputs_digest: str
    result: dict
    certified: bool | str | None = None
    wall_time_ms: float | None = None
    tool_version: str = TOOL_VERSION

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "command": self.command,
            "inputsDigest": self.inputs_digest,
            "result": to_json(self.result),
            "toolVersion": self.tool_version,
        }
        if self.certified is not None:
            out["certified"] = self.certified
        if include_timing and self.wall_time_ms is not None:
            out["wallTimeMs"] = self.wall_time_ms
        return out


def emit(envelope: ResultEnvelope, fmt: str = "json", path: str | None = None,
         include_timing: bool = False) -> str:
    """Canonical JSON (or JSONL/CSV rows for tabular results); byte-stable."""
    if fmt == "json":
        text = canonical_json(envelope.to_dict(include_timing)) + "\n"
    elif fmt == "jsonl":
        rows = envelope.result.get("rows", [])
        text = "".join(canonical_json(to_json(r)) + "\n" for r in rows)
    elif fmt == "csv":
        rows = envelope.result.get("rows", [])
        if rows:
            keys = list(rows[0].keys())
            lines = [",".join(keys)]
            for r in rows:
                lines.append(",".join(_csv_cell(r.get(k)) for k in keys))
            text = "\n".join(lines) + "\n"
        else:
            text = ""
    else:
        raise ParseError(f"unknown format {fmt!r}")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
