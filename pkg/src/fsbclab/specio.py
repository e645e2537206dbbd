"""Channel spec files: JSON load/save with lossless round-trip.

Two variants are accepted.  A raw kernel spec:

    {"label": ..., "X": 2, "Y": 2, "Z": 2, "S": 2, "kernel": [[[[[...]]]]]}

where "kernel" nests as [s_prev][x][y][z][s_next], and a parametric
binary-symmetric family:

    {"label": ..., "bsbc_family": {"state_chain": [[...]], "eps1": [...], "eps12": [...]}}

Floats survive a save/load cycle exactly (shortest round-trip decimal).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .channel import BsbcFamilySpec, FsbcKernel, build_bsbc_family, validate_kernel
from .errors import FsbcError, SpecParseError, SpecValidationError


def _require(d: dict, key: str, kind, where: str):
    if key not in d:
        raise SpecValidationError(f"{where}: missing required field '{key}'")
    val = d[key]
    if kind is int and (not isinstance(val, int) or isinstance(val, bool)):
        raise SpecValidationError(f"{where}: field '{key}' must be an integer")
    if kind is list and not isinstance(val, list):
        raise SpecValidationError(f"{where}: field '{key}' must be a list")
    return val


def kernel_from_dict(doc: dict) -> FsbcKernel:
    """Build a validated kernel from a parsed spec document."""
    if not isinstance(doc, dict):
        raise SpecValidationError("channel spec must be a JSON object")
    label = doc.get("label", "fsbc")
    if "bsbc_family" in doc:
        fam = doc["bsbc_family"]
        if not isinstance(fam, dict):
            raise SpecValidationError("'bsbc_family' must be an object")
        chain = _require(fam, "state_chain", list, "bsbc_family")
        eps1 = _require(fam, "eps1", list, "bsbc_family")
        eps12 = _require(fam, "eps12", list, "bsbc_family")
        try:
            spec = BsbcFamilySpec(
                state_chain=np.asarray(chain, dtype=np.float64),
                eps1=np.asarray(eps1, dtype=np.float64),
                eps12=np.asarray(eps12, dtype=np.float64),
                label=label,
            )
        except (TypeError, ValueError) as exc:
            raise SpecValidationError(f"bsbc_family: malformed arrays ({exc})") from exc
        return build_bsbc_family(spec)
    for key in ("X", "Y", "Z", "S"):
        _require(doc, key, int, "channel spec")
    raw = _require(doc, "kernel", list, "channel spec")
    try:
        tensor = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SpecValidationError(f"field 'kernel' is not a rectangular array ({exc})") from exc
    if tensor.ndim != 5:
        raise SpecValidationError(
            f"field 'kernel' must nest 5 levels [s'][x][y][z][s], got {tensor.ndim}"
        )
    return validate_kernel(tensor, sizes=(doc["X"], doc["Y"], doc["Z"], doc["S"]), label=label)


def load_channel_spec(path: str | os.PathLike) -> FsbcKernel:
    """Load and validate a channel spec file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SpecParseError(f"cannot read spec file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecParseError(f"spec file {path} is not valid JSON: {exc}") from exc
    try:
        return kernel_from_dict(doc)
    except FsbcError:
        raise
    except Exception as exc:  # surface anything odd as a validation failure
        raise SpecValidationError(f"spec file {path}: {exc}") from exc


def kernel_to_dict(kernel: FsbcKernel) -> dict:
    return {
        "label": kernel.label,
        "X": kernel.x_size,
        "Y": kernel.y_size,
        "Z": kernel.z_size,
        "S": kernel.s_size,
        "kernel": kernel.probs.tolist(),
    }


def family_to_dict(spec: BsbcFamilySpec) -> dict:
    return {
        "label": spec.label,
        "bsbc_family": {
            "state_chain": spec.state_chain.tolist(),
            "eps1": spec.eps1.tolist(),
            "eps12": spec.eps12.tolist(),
        },
    }


def save_channel_spec(obj, path: str | os.PathLike) -> None:
    """Write a kernel or family spec as JSON (full double precision)."""
    if isinstance(obj, FsbcKernel):
        doc = kernel_to_dict(obj)
    elif isinstance(obj, BsbcFamilySpec):
        doc = family_to_dict(obj)
    else:
        raise SpecValidationError(f"cannot serialize object of type {type(obj).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
