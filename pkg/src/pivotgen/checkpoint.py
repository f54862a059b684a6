"""Versioned checkpoint container for trained models.

Layout: an 8-byte magic, a little-endian uint64 header length, a JSON
header (model kind, config, vocabularies, array manifest), then the raw
array bytes in manifest order. Arrays are written sorted by name and the
header is serialized with sorted keys, so saving the same model state
twice produces byte-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"PVGCKPT1"


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    kind: str  # "tagger" or "realizer"
    config: dict
    vocabs: dict[str, list[str]]
    arrays: dict[str, np.ndarray]


def save_checkpoint(path, kind: str, config: dict, vocabs: dict, arrays: dict) -> None:
    names = sorted(arrays)
    manifest = []
    for name in names:
        arr = np.ascontiguousarray(arrays[name])
        manifest.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape)})
    header = {
        "version": 1,
        "kind": kind,
        "config": config,
        "vocabs": vocabs,
        "manifest": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for name in names:
            fh.write(np.ascontiguousarray(arrays[name]).tobytes())


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise CheckpointError(f"{path} is not a pivotgen checkpoint")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if header.get("version") != 1:
            raise CheckpointError(f"unsupported checkpoint version {header.get('version')}")
        arrays = {}
        for entry in header["manifest"]:
            dtype = np.dtype(entry["dtype"])
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * dtype.itemsize)
            arrays[entry["name"]] = np.frombuffer(buf, dtype=dtype).reshape(shape).copy()
    return Checkpoint(header["kind"], header["config"], header["vocabs"], arrays)
