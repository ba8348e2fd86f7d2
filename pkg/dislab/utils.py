"""Utilities used across the dislab package."""

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

SEED_MASK = (1 << 64) - 1


def derive_seed(base_seed: int, *labels: object) -> int:
    """Derive an independent 64-bit stream seed from a base seed and labels.

    The derivation hashes the base seed together with the labels, so adding a
    new label (a new regime, a new task) never perturbs the seeds of others.

    Args:
        base_seed (int): Root seed.
        *labels (object): Stage labels and indices, e.g. ``("task", 3, 0)``.

    Returns:
        int: A seed in ``[0, 2**64)``.
    """
    key = ":".join([str(int(base_seed) & SEED_MASK), *(str(label) for label in labels)])
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(base_seed: int, *labels: object) -> np.random.Generator:
    """Create a numpy generator seeded by :func:`derive_seed`.

    Args:
        base_seed (int): Root seed.
        *labels (object): Stage labels and indices.

    Returns:
        np.random.Generator: A PCG64 generator.
    """
    return np.random.default_rng(derive_seed(base_seed, *labels))


def canonical_json(obj: Any) -> str:
    """Serialize to key-sorted, whitespace-stable JSON.

    Args:
        obj (Any): JSON-compatible object. Numpy scalars and arrays are converted.

    Returns:
        str: The canonical JSON text.
    """
    return json.dumps(obj, sort_keys=True, indent=2, default=_to_builtin) + "\n"


def stable_hash(obj: Any) -> str:
    """Content hash of a JSON-compatible object.

    Args:
        obj (Any): JSON-compatible object.

    Returns:
        str: Hex sha256 digest of the canonical JSON.
    """
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def write_bytes_atomic(path: Path, payload: bytes) -> None:
    """Write bytes to a temporary sibling and rename it into place.

    A killed process leaves at most a stray temporary file, never a
    half-written ``path``.

    Args:
        path (Path): Destination.
        payload (bytes): Content.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False
    ) as handle:
        handle.write(payload)
        handle.flush()
        os.fsync(handle.fileno())
        tmp_name = handle.name
    os.replace(tmp_name, path)


def write_json_atomic(path: Path, obj: Any) -> None:
    """Write canonical JSON atomically.

    Args:
        path (Path): Destination.
        obj (Any): JSON-compatible object.
    """
    write_bytes_atomic(path, canonical_json(obj).encode("utf-8"))


def read_json(path: Path) -> Any:
    """Read a JSON file.

    Args:
        path (Path): Source.

    Returns:
        Any: The decoded object.
    """
    with open(path, encoding="utf-8") as file:
        return json.load(file)


def _to_builtin(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    type_error_msg = f"Object of type {type(value).__name__} is not JSON serializable"
    raise TypeError(type_error_msg)
