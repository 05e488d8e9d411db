"""Minimal zarr v2 directory-store access for 1-D structured arrays.

Covers what the Level 5 motion arrays need: C-order one-dimensional arrays
with structured dtypes, chunked along the single axis. Supported compressors:
none, zlib, gzip, and blosc frames flagged as plain memcpy. Other blosc
codecs require the numcodecs package, which this reader deliberately avoids;
re-encode such datasets with compressor=None or zlib first.
"""
from __future__ import annotations

import gzip
import json
import math
import zlib
from pathlib import Path
from typing import Optional, Union

import numpy as np


class ZarrError(ValueError):
    pass


def _dtype_from_meta(meta) -> np.dtype:
    if isinstance(meta, str):
        return np.dtype(meta)
    fields = []
    for entry in meta:
        if len(entry) == 2:
            name, sub = entry
            fields.append((name, sub))
        else:
            name, sub, shape = entry
            fields.append((name, sub, tuple(shape)))
    return np.dtype(fields)


def _dtype_to_meta(dtype: np.dtype):
    if dtype.fields is None:
        return dtype.str
    out = []
    for name in dtype.names:
        sub, _ = dtype.fields[name]
        if sub.subdtype is None:
            out.append([name, sub.str])
        else:
            base, shape = sub.subdtype
            out.append([name, base.str, list(shape)])
    return out


def _decompress(raw: bytes, compressor: Optional[dict], nbytes: int) -> bytes:
    if compressor is None:
        return raw
    codec = compressor.get("id")
    if codec == "zlib":
        return zlib.decompress(raw)
    if codec == "gzip":
        return gzip.decompress(raw)
    if codec == "blosc":
        if len(raw) < 16:
            raise ZarrError("truncated blosc frame")
        flags = raw[2]
        if flags & 0x2:  # pure memcpy frame
            return raw[16:16 + nbytes]
        raise ZarrError("blosc-compressed chunk needs numcodecs; re-encode the "
                        "dataset with compressor=None or zlib")
    raise ZarrError(f"unsupported compressor {codec!r}")


def read_array(path: Union[str, Path]) -> np.ndarray:
    """Read a 1-D zarr v2 array from a directory store."""
    path = Path(path)
    meta_path = path / ".zarray"
    if not meta_path.exists():
        raise ZarrError(f"{path} is not a zarr array (missing .zarray)")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("zarr_format") != 2:
        raise ZarrError(f"{path}: unsupported zarr format {meta.get('zarr_format')}")
    if meta.get("order", "C") != "C":
        raise ZarrError(f"{path}: only C order is supported")
    if len(meta["shape"]) != 1:
        raise ZarrError(f"{path}: only 1-D arrays are supported")
    dtype = _dtype_from_meta(meta["dtype"])
    (n,) = meta["shape"]
    (chunk,) = meta["chunks"]
    n_chunks = max(1, math.ceil(n / chunk)) if n else 0
    parts = []
    for index in range(n_chunks):
        chunk_path = path / str(index)
        chunk_bytes = chunk * dtype.itemsize
        if chunk_path.exists():
            parts.append(_decompress(chunk_path.read_bytes(), meta.get("compressor"),
                                     chunk_bytes))
        else:
            fill = meta.get("fill_value") or 0
            parts.append(np.full(chunk, fill, dtype=dtype).tobytes())
    if not parts:
        return np.empty(0, dtype=dtype)
    buffer = b"".join(parts)
    return np.frombuffer(buffer, dtype=dtype)[:n].copy()


def write_array(path: Union[str, Path], array: np.ndarray, chunk: int = 0,
                compressor: Optional[str] = None) -> None:
    """Write a 1-D array as a zarr v2 directory store (tests and fixtures)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if array.ndim != 1:
        raise ZarrError("only 1-D arrays are supported")
    chunk = chunk or max(1, array.size)
    comp_meta = {"id": "zlib", "level": 1} if compressor == "zlib" else None
    meta = {
        "chunks": [chunk],
        "compressor": comp_meta,
        "dtype": _dtype_to_meta(array.dtype),
        "fill_value": 0,
        "filters": None,
        "order": "C",
        "shape": [int(array.size)],
        "zarr_format": 2,
    }
    (path / ".zarray").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n",
                                  encoding="utf-8")
    n_chunks = max(1, math.ceil(array.size / chunk)) if array.size else 0
    for index in range(n_chunks):
        piece = array[index * chunk:(index + 1) * chunk]
        if piece.size < chunk:
            padded = np.zeros(chunk, dtype=array.dtype)
            padded[:piece.size] = piece
            piece = padded
        raw = piece.tobytes()
        if compressor == "zlib":
            raw = zlib.compress(raw, 1)
        (path / str(index)).write_bytes(raw)


def write_group(path: Union[str, Path]) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / ".zgroup").write_text(json.dumps({"zarr_format": 2}) + "\n",
                                  encoding="utf-8")
