"""JSON file formats, run records, and the flat key=value config format.

All formats are documented with examples in docs/formats.md.  JSON writing
is deterministic (fixed key order, shortest-roundtrip floats) so re-running
a command with identical inputs and configuration reproduces byte-identical
outputs on the same build.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .core import Distribution, ObservableBasis, PureState
from .imposition import chain_residual, max_probability_mismatch
from .mub_pipeline import MubSet
from .partner_search import BifurcationScan, PartnerSet, ReconstructionProblem

TOOL_NAME = "pauli-forge"
TOOL_VERSION = "0.1.0"


def _complex_rows(mat_rows: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat_rows]


def _rows_to_complex(rows, field: str) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=np.float64)
    except (TypeError, ValueError):
        raise ValueError(f"{field}: expected nested arrays of [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError(f"{field}: expected shape (rows, dim, 2), got {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def basis_to_obj(basis: ObservableBasis) -> dict:
    """Basis object: one JSON row per basis vector (columns of the matrix)."""
    return {
        "dim": basis.dim,
        "label": basis.label,
        "vectors": _complex_rows(basis.matrix.T),
    }


def basis_from_obj(obj: dict, field: str = "basis") -> ObservableBasis:
    for key in ("dim", "vectors"):
        if key not in obj:
            raise ValueError(f"{field}.{key}: missing")
    rows = _rows_to_complex(obj["vectors"], f"{field}.vectors")
    if rows.shape[0] != obj["dim"] or rows.shape[1] != obj["dim"]:
        raise ValueError(f"{field}.vectors: expected {obj['dim']} rows of length "
                         f"{obj['dim']}, got {rows.shape[0]}x{rows.shape[1]}")
    return ObservableBasis(str(obj.get("label", field)), rows.T)


def state_to_obj(state: PureState, label: str | None = None) -> dict:
    obj = {"dim": state.dim}
    if label is not None:
        obj["label"] = label
    obj["vectors"] = _complex_rows(state.amplitudes[None, :])
    return obj


def state_from_obj(obj: dict, field: str = "state") -> PureState:
    for key in ("dim", "vectors"):
        if key not in obj:
            raise ValueError(f"{field}.{key}: missing")
    rows = _rows_to_complex(obj["vectors"], f"{field}.vectors")
    if rows.shape[0] != 1 or rows.shape[1] != obj["dim"]:
        raise ValueError(f"{field}.vectors: expected a single row of length {obj['dim']}")
    try:
        return PureState.from_vector(rows[0])
    except ValueError as exc:
        raise ValueError(f"{field}.vectors: {exc}") from None


def load_bases(path) -> list[ObservableBasis]:
    """Bases file: a JSON array of basis objects (a single object also works)."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise ValueError("bases: expected a non-empty JSON array of basis objects")
    return [basis_from_obj(obj, f"bases[{i}]") for i, obj in enumerate(data)]


def save_bases(bases: list[ObservableBasis], path) -> None:
    write_json([basis_to_obj(b) for b in bases], path)


def load_state(path) -> PureState:
    with open(path) as fh:
        return state_from_obj(json.load(fh))


def save_state(state: PureState, path, label: str | None = None) -> None:
    write_json(state_to_obj(state, label), path)


def load_targets(path, dim: int, count: int) -> list[Distribution]:
    """Targets file: JSON array of `count` probability arrays of length `dim`."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError("targets: expected a JSON array of probability arrays")
    if len(data) != count:
        raise ValueError(f"targets: expected {count} distributions (one per basis), "
                         f"got {len(data)}")
    out = []
    for i, row in enumerate(data):
        arr = np.asarray(row, dtype=np.float64)
        if arr.ndim != 1 or arr.size != dim:
            raise ValueError(f"targets[{i}]: expected {dim} probabilities")
        try:
            out.append(Distribution(arr))
        except ValueError as exc:
            raise ValueError(f"targets[{i}]: {exc}") from None
    return out


def partner_set_to_obj(result: PartnerSet, problem: ReconstructionProblem) -> dict:
    chain = problem.to_chain()

    def entry(state: PureState) -> dict:
        return {
            "vector": _complex_rows(state.amplitudes[None, :])[0],
            "chain_residual": chain_residual(chain, state),
            "max_probability_mismatch": max_probability_mismatch(chain, state),
        }

    return {
        "dim": problem.dim,
        "partner_count": result.count,
        "pauli_unique": result.pauli_unique,
        "partners": [entry(p) for p in result.partners],
        "undesirables": [entry(u) for u in result.undesirables],
        "seeds_run": result.seeds_run,
        "unresolved": result.unresolved,
        "reliable": result.reliable,
    }


def mub_set_to_obj(result: MubSet) -> dict:
    return {
        "dim": result.dim,
        "count": result.count,
        "complete": result.complete,
        "max_unbias_error": result.max_unbias_error,
        "max_ortho_error": result.max_ortho_error,
        "partner_count": result.partner_count,
        "seeds_run": result.seeds_run,
        "note": result.note,
        "bases": [basis_to_obj(b) for b in result.bases],
    }


def bifurcation_to_obj(scan: BifurcationScan) -> dict:
    return {
        "dim": scan.path[0].dim,
        "points": [
            {"t": float(t), "partner_count": int(c)}
            for t, c in zip(scan.parameters, scan.partner_counts)
        ],
        "bifurcation_intervals": [[lo, hi] for lo, hi in scan.bifurcation_intervals],
    }


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunRecord:
    """Everything needed to replay a command and check it reproduced."""

    command: list[str]
    config: dict
    inputs: dict[str, str]
    outputs: list[str]
    duration_s: float
    backend: str
    threads: int
    seed: int

    def to_obj(self) -> dict:
        return {
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_s": self.duration_s,
            "backend": self.backend,
            "threads": self.threads,
            "seed": self.seed,
        }


def load_config_file(path) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment; keys match CLI flag names."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value', "
                                 f"got {raw.strip()!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip().strip('"').strip("'")
    return out
