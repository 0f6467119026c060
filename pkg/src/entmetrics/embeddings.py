"""Sample-set data model and on-disk embedding/label formats.

An embedding set is an n x d matrix of finite reals, one row per sample.
Two serializations are supported: a compact little-endian binary format
(magic ``EMB1`` | u32 d | u64 n | n*d float32, row-major) and CSV with
full round-trip decimal precision. Labels live in a sidecar text file,
one label per line, line i matching row i.

Storage may be float32; all in-memory computation uses float64 because
log-of-small-distance terms are precision-sensitive.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sIQ")


class FormatError(ValueError):
    """Raised when a byte stream does not conform to a declared format."""


@dataclass(frozen=True)
class EmbeddingSet:
    """Immutable n x d matrix of finite reals, one sample per row."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D sample matrix, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            row, col = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(f"non-finite value at row {row}, column {col}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class LabeledSet:
    """An EmbeddingSet with one class label per row."""

    embeddings: EmbeddingSet
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != self.embeddings.n:
            raise ValueError(
                f"labels length {labels.shape[0] if labels.ndim == 1 else labels.shape} "
                f"does not match {self.embeddings.n} rows"
            )
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)


@dataclass(frozen=True)
class PairedInput:
    """A (real, generated) pair of embedding sets sharing one dimension."""

    real: EmbeddingSet
    generated: EmbeddingSet

    def __post_init__(self):
        if self.real.d != self.generated.d:
            raise ValueError(
                f"dimension mismatch: real d={self.real.d}, generated d={self.generated.d}"
            )

    @property
    def eta(self) -> float:
        """Size ratio N_G / N_R."""
        return self.generated.n / self.real.n


def decode_embeddings(stream: bytes, format: str = "binary") -> EmbeddingSet:
    """Decode a byte stream into an EmbeddingSet.

    Parameters
    ----------
    stream : bytes
        Raw file contents.
    format : {"binary", "csv"}
        Wire format. Binary is the EMB1 layout documented in the module
        docstring; CSV is one comma-separated row per sample with
        optional '#'-prefixed header lines.
    """
    if format == "binary":
        return _decode_binary(stream)
    if format == "csv":
        return _decode_csv(stream)
    raise ValueError(f"unknown format {format!r}")


def encode_embeddings(set_: EmbeddingSet, format: str = "binary") -> bytes:
    """Encode an EmbeddingSet; the bit-exact inverse of decode for binary."""
    if format == "binary":
        header = _HEADER.pack(MAGIC, set_.d, set_.n)
        return header + set_.data.astype("<f4").tobytes(order="C")
    if format == "csv":
        lines = [",".join(repr(v) for v in row) for row in set_.data.tolist()]
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {format!r}")


def _decode_binary(stream: bytes) -> EmbeddingSet:
    if len(stream) < _HEADER.size:
        raise FormatError(f"header truncated: {len(stream)} bytes < {_HEADER.size}")
    magic, d, n = _HEADER.unpack_from(stream)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if n == 0:
        raise FormatError("header declares n=0 samples")
    payload = stream[_HEADER.size:]
    expected = n * d * 4
    if len(payload) != expected:
        raise FormatError(
            f"payload holds {len(payload) // 4} floats, header declares {n * d}"
        )
    flat = np.frombuffer(payload, dtype="<f4")
    try:
        return EmbeddingSet(flat.reshape(n, d))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def _decode_csv(stream: bytes) -> EmbeddingSet:
    rows = []
    width = None
    for lineno, line in enumerate(stream.decode("utf-8").splitlines(), start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        fields = text.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise FormatError(
                f"line {lineno} has {len(fields)} fields, expected {width}"
            )
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise FormatError("no data rows")
    try:
        return EmbeddingSet(np.asarray(rows))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def attach_labels(set_: EmbeddingSet, labels: Sequence) -> LabeledSet:
    """Bind one class label to each row; never reorders rows."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != set_.n:
        raise ValueError(
            f"got {labels.shape[0] if labels.ndim == 1 else 0} labels for {set_.n} rows"
        )
    return LabeledSet(set_, labels)


def read_embeddings(path: str) -> EmbeddingSet:
    """Read an embedding file, sniffing binary (EMB1 magic) vs CSV."""
    with open(path, "rb") as fh:
        raw = fh.read()
    fmt = "binary" if raw[:4] == MAGIC else "csv"
    return decode_embeddings(raw, fmt)


def write_embeddings(path: str, set_: EmbeddingSet, format: str = "binary") -> None:
    with open(path, "wb") as fh:
        fh.write(encode_embeddings(set_, format))


def read_labels(path: str) -> np.ndarray:
    """Read a label sidecar; integer-looking labels parse as ints."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = [line.rstrip("\n") for line in fh]
    raw = [line for line in raw if line != ""]
    if not raw:
        raise FormatError("empty label file")
    try:
        return np.asarray([int(v) for v in raw])
    except ValueError:
        return np.asarray(raw)


def write_labels(path: str, labels: Sequence) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for value in np.asarray(labels).tolist():
            fh.write(f"{value}\n")
