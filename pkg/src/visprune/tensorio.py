"""File interchange: NPY tensors in and selection documents out.

Reading accepts NPY format versions 1.0 and 2.0 restricted to C-contiguous
little-endian float32/float64 arrays; every malformed-input condition maps
to its own error type so callers can tell corrupt files from wrong content.
Writing always emits version 1.0 float64, which round-trips bit-exactly.

The JSON selection document is the canonical interchange contract:

    {
      "config":  {r, alpha, tau, cap_m, beta, eps, tie_break, weighting, gamma},
      "frames":  [{frame_index, budget, kept_indices, selection_order,
                   relevance_stats: {min, max, mean}}, ...],
      "timing_ms": float or null,
      "flops_report": {...}          # optional
    }

Unbounded cap_m/beta serialize as null.
"""

from __future__ import annotations

import ast
import json
import math
import struct
from pathlib import Path

import numpy as np

from .core import (
    DTYPE,
    DataError,
    PruneConfig,
    Selection,
    VideoFeatures,
    VispruneError,
)
from .selection import gather_kept

_MAGIC = b"\x93NUMPY"
_SUPPORTED_DESCRS = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}


class NpyFormatError(VispruneError):
    """Base class for malformed or unsupported NPY input."""


class NpyMagicError(NpyFormatError):
    """File does not start with the NPY magic string."""


class NpyVersionError(NpyFormatError):
    """NPY format version other than 1.0 or 2.0."""


class NpyHeaderError(NpyFormatError):
    """Truncated or unparseable NPY header."""


class NpyDtypeError(NpyFormatError):
    """Array dtype is not little-endian float32/float64."""


class NpyOrderError(NpyFormatError):
    """Fortran-ordered arrays are not accepted."""


class NpyShapeError(NpyFormatError):
    """Array rank is outside what the operation accepts."""


class NpyDataError(NpyFormatError):
    """Payload size does not match the header's shape."""


def read_array(path) -> np.ndarray:
    """Read one NPY file into a float64 C-contiguous array."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read()

    if len(raw) < len(_MAGIC) + 2 or raw[: len(_MAGIC)] != _MAGIC:
        raise NpyMagicError(f"{path}: not an NPY file (bad magic string)")
    major, minor = raw[6], raw[7]
    if (major, minor) not in ((1, 0), (2, 0)):
        raise NpyVersionError(f"{path}: unsupported NPY version {major}.{minor}")

    if major == 1:
        len_size, len_fmt = 2, "<H"
    else:
        len_size, len_fmt = 4, "<I"
    header_start = 8 + len_size
    if len(raw) < header_start:
        raise NpyHeaderError(f"{path}: truncated header length field")
    (header_len,) = struct.unpack(len_fmt, raw[8:header_start])
    header_end = header_start + header_len
    if len(raw) < header_end:
        raise NpyHeaderError(f"{path}: truncated header")

    try:
        header = ast.literal_eval(raw[header_start:header_end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise NpyHeaderError(f"{path}: unparseable header") from exc
    if not isinstance(header, dict) or set(header) != {
        "descr",
        "fortran_order",
        "shape",
    }:
        raise NpyHeaderError(f"{path}: header keys must be descr/fortran_order/shape")

    descr = header["descr"]
    if descr not in _SUPPORTED_DESCRS:
        raise NpyDtypeError(
            f"{path}: dtype {descr!r} not supported (need little-endian f4/f8)"
        )
    if header["fortran_order"] is not False:
        raise NpyOrderError(f"{path}: Fortran-ordered arrays are rejected")
    shape = header["shape"]
    if not (
        isinstance(shape, tuple)
        and all(isinstance(dim, int) and dim >= 0 for dim in shape)
    ):
        raise NpyHeaderError(f"{path}: malformed shape {shape!r}")

    dtype = _SUPPORTED_DESCRS[descr]
    expected = dtype.itemsize * math.prod(shape)
    payload = raw[header_end:]
    if len(payload) != expected:
        raise NpyDataError(
            f"{path}: payload holds {len(payload)} bytes, header implies {expected}"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(shape).astype(DTYPE)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: array contains non-finite values")
    return arr


def write_array(path, arr) -> None:
    """Write a float64 C-order array as NPY version 1.0."""
    arr = np.ascontiguousarray(np.asarray(arr, dtype=DTYPE))
    header = "{'descr': '<f8', 'fortran_order': False, 'shape': %s, }" % (
        str(tuple(int(d) for d in arr.shape)),
    )
    # Pad with spaces so magic + version + length + header is 64-aligned,
    # terminated by a newline, as the format prescribes.
    base = len(_MAGIC) + 2 + 2 + len(header) + 1
    header = header + " " * (-base % 64) + "\n"
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes((1, 0)))
        fh.write(struct.pack("<H", len(header)))
        fh.write(header.encode("latin1"))
        fh.write(arr.tobytes("C"))


def read_features(path) -> VideoFeatures:
    """Load token features: an L x C file is a single frame, an N x L x C
    file is a frame stack, and a directory is one rank-2 file per frame
    ordered by filename (frame lengths may differ)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.npy"))
        if not files:
            raise DataError(f"{path}: directory holds no .npy files")
        frames = []
        for f in files:
            arr = read_array(f)
            if arr.ndim != 2:
                raise NpyShapeError(f"{f}: per-frame files must be rank 2, got {arr.ndim}")
            frames.append(arr)
        return VideoFeatures(tuple(frames))
    arr = read_array(path)
    if arr.ndim not in (2, 3):
        raise NpyShapeError(f"{path}: features must be rank 2 or 3, got {arr.ndim}")
    return VideoFeatures.from_array(arr)


def read_query_embeddings(path) -> np.ndarray:
    """Load query input: rank 2 is a J x C token-embedding matrix; rank 1 is
    a single precomputed query vector used verbatim after normalization."""
    arr = read_array(path)
    if arr.ndim not in (1, 2):
        raise NpyShapeError(f"{path}: query input must be rank 1 or 2, got {arr.ndim}")
    return arr


def _null_when_unbounded(value):
    if value is None:
        return None
    if isinstance(value, float) and math.isinf(value):
        return None
    return value


def config_echo(cfg: PruneConfig, weighting: str, gamma: float) -> dict:
    return {
        "r": cfg.r,
        "alpha": cfg.alpha,
        "tau": cfg.tau,
        "cap_m": _null_when_unbounded(cfg.cap_m),
        "beta": _null_when_unbounded(cfg.beta),
        "eps": cfg.eps,
        "tie_break": cfg.tie_break,
        "weighting": weighting,
        "gamma": gamma,
    }


def selection_document(
    selections: list[Selection],
    config: dict,
    timing_ms: float | None = None,
    flops_report: dict | None = None,
    include_relevance: bool = False,
) -> dict:
    frames = []
    for i, sel in enumerate(selections):
        entry = {
            "frame_index": i,
            "budget": sel.budget,
            "kept_indices": list(sel.kept),
            "selection_order": list(sel.selection_order),
            "relevance_stats": {
                "min": float(sel.relevance.min()),
                "max": float(sel.relevance.max()),
                "mean": float(sel.relevance.mean()),
            },
        }
        if include_relevance:
            # Full per-token scores, round-trip exact through JSON; opt-in
            # because the vector dwarfs the rest of the document.
            entry["relevance"] = [float(v) for v in sel.relevance]
        frames.append(entry)
    doc = {"config": config, "frames": frames, "timing_ms": timing_ms}
    if flops_report is not None:
        doc["flops_report"] = flops_report
    return doc


def write_selection(
    selections: list[Selection],
    path,
    config: dict,
    timing_ms: float | None = None,
    flops_report: dict | None = None,
    include_relevance: bool = False,
) -> dict:
    """Serialize selections to the JSON document; returns the document."""
    doc = selection_document(
        selections, config, timing_ms, flops_report, include_relevance
    )
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def read_selection(path) -> dict:
    return json.loads(Path(path).read_text())


def write_pruned_features(
    video: VideoFeatures, selections: list[Selection], path
) -> list[Path]:
    """Write the gathered (kept) token matrices.

    Equal budgets produce one N x k x C file at `path`; ragged budgets
    produce one rank-2 file per frame named `<stem>.frameNNN.npy`.
    Returns the written paths.
    """
    path = Path(path)
    gathered = [gather_kept(f, s).data for f, s in zip(video.frames, selections)]
    budgets = {g.shape[0] for g in gathered}
    if len(budgets) == 1:
        write_array(path, np.stack(gathered))
        return [path]
    paths = []
    for i, g in enumerate(gathered):
        frame_path = path.with_name(f"{path.stem}.frame{i:03d}.npy")
        write_array(frame_path, g)
        paths.append(frame_path)
    return paths
