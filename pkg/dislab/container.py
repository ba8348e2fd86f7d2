"""DTB container: a small self-describing binary format for arrays.

Layout::

    b"DTB1"                      4 bytes, magic
    header length                4 bytes, unsigned little-endian
    header                       UTF-8 JSON {"entries": [...], "manifest": {...}}
    payload                      row-major little-endian arrays, back to back

Each entry is ``{"name", "dtype", "shape", "byte_offset"}`` where ``dtype`` is
one of ``f32``, ``i32`` or ``u8`` and ``byte_offset`` counts from the start of
the payload.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from dislab.exceptions import ContainerParseError, DataError
from dislab.utils import write_bytes_atomic

MAGIC = b"DTB1"
PREAMBLE_SIZE = len(MAGIC) + 4
DTYPES: dict[str, np.dtype] = {
    "f32": np.dtype("<f4"),
    "i32": np.dtype("<i4"),
    "u8": np.dtype("u1"),
}


@dataclass
class DTBContainer:
    """Named arrays plus a JSON manifest.

    Attributes:
        arrays (dict[str, np.ndarray]): Entries in file order.
        manifest (dict): Free-form JSON metadata.
    """

    arrays: dict[str, np.ndarray] = field(default_factory=dict)
    manifest: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        """Return the array ``name``.

        Raises:
            DataError: If there is no such entry.
        """
        if name not in self.arrays:
            missing_msg = f"Container has no entry '{name}' (entries: {sorted(self.arrays)})"
            raise DataError(missing_msg)
        return self.arrays[name]


def _dtype_code(array: np.ndarray, name: str) -> str:
    if array.dtype == np.bool_ or array.dtype == np.uint8:
        return "u8"
    if np.issubdtype(array.dtype, np.integer):
        info = np.iinfo(np.int32)
        if array.size and (array.min() < info.min or array.max() > info.max):
            overflow_msg = f"Entry '{name}' does not fit in i32"
            raise DataError(overflow_msg)
        return "i32"
    if np.issubdtype(array.dtype, np.floating):
        return "f32"
    unsupported_msg = f"Entry '{name}' has unsupported dtype {array.dtype}"
    raise DataError(unsupported_msg)


def serialize(container: DTBContainer) -> bytes:
    """Encode a container to bytes.

    Raises:
        DataError: If an array dtype has no DTB code.
    """
    entries = []
    chunks = []
    offset = 0
    for name, array in container.arrays.items():
        code = _dtype_code(np.asarray(array), name)
        data = np.ascontiguousarray(array, dtype=DTYPES[code]).tobytes()
        entries.append(
            {"name": name, "dtype": code, "shape": list(np.shape(array)), "byte_offset": offset}
        )
        chunks.append(data)
        offset += len(data)
    header = json.dumps(
        {"entries": entries, "manifest": container.manifest},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    return MAGIC + struct.pack("<I", len(header)) + header + b"".join(chunks)


def _parse_error(offset: int, reason: str) -> ContainerParseError:
    return ContainerParseError(f"Invalid DTB container at byte offset {offset}: {reason}")


def parse(payload: bytes) -> DTBContainer:
    """Decode bytes produced by :func:`serialize`.

    Every entry must lie inside the payload, entries may not overlap and the
    payload may not carry trailing bytes, so truncated files are rejected
    rather than partially read.

    Raises:
        ContainerParseError: If the bytes are not a well-formed container.
    """
    if len(payload) < PREAMBLE_SIZE:
        raise _parse_error(0, f"file is {len(payload)} bytes, shorter than the preamble")
    if payload[: len(MAGIC)] != MAGIC:
        raise _parse_error(0, f"bad magic {payload[:len(MAGIC)]!r}, expected {MAGIC!r}")
    (header_len,) = struct.unpack("<I", payload[len(MAGIC) : PREAMBLE_SIZE])
    body_start = PREAMBLE_SIZE + header_len
    if body_start > len(payload):
        raise _parse_error(len(MAGIC), f"header length {header_len} exceeds file size")
    try:
        header = json.loads(payload[PREAMBLE_SIZE:body_start].decode("utf-8"))
        entries = header["entries"]
        manifest = header["manifest"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as err:
        raise _parse_error(PREAMBLE_SIZE, f"unreadable header ({err})") from err

    body = memoryview(payload)[body_start:]
    arrays: dict[str, np.ndarray] = {}
    spans = []
    for entry in entries:
        try:
            name = str(entry["name"])
            dtype = DTYPES[entry["dtype"]]
            shape = tuple(int(v) for v in entry["shape"])
            start = int(entry["byte_offset"])
        except (KeyError, TypeError, ValueError) as err:
            raise _parse_error(PREAMBLE_SIZE, f"malformed entry {entry!r}") from err
        if start < 0 or any(v < 0 for v in shape):
            raise _parse_error(PREAMBLE_SIZE, f"negative offset or shape in entry '{name}'")
        if name in arrays:
            raise _parse_error(PREAMBLE_SIZE, f"duplicate entry '{name}'")
        end = start + int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if end > len(body):
            raise _parse_error(
                body_start + len(body), f"entry '{name}' needs bytes up to {body_start + end}"
            )
        spans.append((start, end, name))
        arrays[name] = np.frombuffer(body[start:end], dtype=dtype).reshape(shape).copy()

    covered = 0
    for start, end, name in sorted(spans):
        if start < covered:
            raise _parse_error(body_start + start, f"entry '{name}' overlaps its predecessor")
        covered = max(covered, end)
    if covered != len(body):
        raise _parse_error(body_start + covered, f"{len(body) - covered} unexpected trailing bytes")
    return DTBContainer(arrays=arrays, manifest=manifest)


def save_container(path: Path, container: DTBContainer) -> Path:
    """Atomically write a container to ``path``."""
    path = Path(path)
    write_bytes_atomic(path, serialize(container))
    return path


def load_container(path: Path) -> DTBContainer:
    """Read a container from ``path``.

    Raises:
        FileNotFoundError: If the file does not exist.
        ContainerParseError: If the file is corrupt; the message names the path.
    """
    path = Path(path)
    if not path.exists():
        missing_msg = f"Container {path} does not exist."
        raise FileNotFoundError(missing_msg)
    try:
        return parse(path.read_bytes())
    except ContainerParseError as err:
        path_msg = f"{path}: {err}"
        raise ContainerParseError(path_msg) from err
