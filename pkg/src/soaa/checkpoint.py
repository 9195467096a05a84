"""Optimizer checkpoints: a version-tagged JSON document.

Scalars are stored as JSON numbers (Python's float repr is shortest
round-trip, so 64-bit values survive exactly); moment vectors are stored
as base64 of their little-endian float64 bytes. The document carries a
config echo and the optimizer tag, both validated on restore, so a
checkpoint cannot silently resume under different hyperparameters or a
different update rule.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import asdict

import numpy as np

from .errors import CheckpointError

FORMAT = "soaa-checkpoint"
VERSION = 1


def _encode_vector(x: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(x, dtype="<f8").tobytes()).decode("ascii")


def _decode_vector(payload, n: int, where: str) -> np.ndarray:
    if not isinstance(payload, str):
        raise CheckpointError(f"{where}: expected a base64 string")
    try:
        raw = base64.b64decode(payload.encode("ascii"), validate=True)
    except (binascii.Error, UnicodeEncodeError) as e:
        raise CheckpointError(f"{where}: invalid base64 payload: {e}") from None
    if len(raw) != 8 * n:
        raise CheckpointError(f"{where}: payload is {len(raw)} bytes, expected {8 * n}")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64, copy=True)


def encode(tag: str, config, scalars: dict, groups, moment_pairs) -> bytes:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "optimizer": tag,
        "config": asdict(config),
        "scalars": scalars,
        "groups": [
            {
                "n": int(group.theta.size),
                "alpha": group.alpha,
                "weight_decay": group.weight_decay,
                "m": _encode_vector(m),
                "s": _encode_vector(s),
            }
            for group, (m, s) in zip(groups, moment_pairs)
        ],
    }
    return json.dumps(doc).encode("utf-8")


def decode(data: bytes) -> dict:
    """Parse and structurally validate a checkpoint document."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise CheckpointError(f"checkpoint is not UTF-8: {e.reason}", offset=e.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CheckpointError(f"checkpoint is not valid JSON: {e.msg}", offset=e.pos) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    for key, kind in (("optimizer", str), ("config", dict), ("scalars", dict), ("groups", list)):
        if not isinstance(doc.get(key), kind):
            raise CheckpointError(f"checkpoint field {key!r} is missing or malformed")
    return doc


def decode_into(data: bytes, tag: str, config, groups, required_scalars=("t",)):
    """Validate a checkpoint against an optimizer and return its state.

    Returns (scalars dict, [(m, s), ...] float64 vectors per group).
    """
    doc = decode(data)
    if doc["optimizer"] != tag:
        raise CheckpointError(
            f"checkpoint was written by optimizer {doc['optimizer']!r}, expected {tag!r}"
        )
    echo = doc["config"]
    mine = asdict(config)
    if set(echo) != set(mine):
        raise CheckpointError("checkpoint config echo has different fields than this optimizer")
    for name, val in mine.items():
        if echo[name] != val:
            raise CheckpointError(
                f"checkpoint config mismatch on {name!r}: checkpoint has {echo[name]!r}, "
                f"optimizer has {val!r}"
            )
    if len(doc["groups"]) != len(groups):
        raise CheckpointError(
            f"checkpoint has {len(doc['groups'])} groups, optimizer has {len(groups)}"
        )
    pairs = []
    for k, (rec, group) in enumerate(zip(doc["groups"], groups)):
        if not isinstance(rec, dict):
            raise CheckpointError(f"group {k}: malformed record")
        n = rec.get("n")
        if n != group.theta.size:
            raise CheckpointError(
                f"group {k}: checkpoint holds {n} parameters, optimizer group has {group.theta.size}"
            )
        pairs.append(
            (
                _decode_vector(rec.get("m"), n, f"group {k} field 'm'"),
                _decode_vector(rec.get("s"), n, f"group {k} field 's'"),
            )
        )
    scalars = doc["scalars"]
    for key in required_scalars:
        if key not in scalars or not isinstance(scalars[key], (int, float)):
            raise CheckpointError(f"checkpoint scalar {key!r} is missing or not a number")
    return scalars, pairs
