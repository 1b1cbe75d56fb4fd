"""Seeded row-normalized Gaussian projection operators and dataset I/O.

The operator is an n' x n matrix whose rows are independent standard
normal draws scaled to unit Euclidean norm.  Rows are deliberately *not*
orthogonalized: with thousands of coordinates they are close to
orthogonal anyway, and this is the construction the distance guarantees
are stated for.  Projected coordinates are left unscaled; every distance
comparison multiplies squared distances by n/n' instead.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "Dataset",
    "ProjectionOperator",
    "build_operator",
    "project",
    "save_dataset",
    "load_dataset",
    "save_operator",
    "load_operator",
]

_MAGIC = b"JLKIT-DATASET-01"  # exactly 16 bytes: magic + version

# Domain tag for the operator's seed stream: decouples it from any other
# generator a caller may have seeded with the same integer (e.g. the
# dataset itself), which would otherwise correlate operator rows with
# data points and wreck the distance guarantees.
_OPERATOR_STREAM = 0x6F70


@dataclass
class Dataset:
    """An m x d matrix of points with per-point identifiers."""

    points: np.ndarray
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ShapeError(f"points must be a non-empty 2-D array, got shape {self.points.shape}")
        if not np.all(np.isfinite(self.points)):
            raise DomainError("dataset contains non-finite entries")
        if not self.ids:
            self.ids = [str(i) for i in range(self.points.shape[0])]
        if len(self.ids) != self.points.shape[0]:
            raise ShapeError(f"{len(self.ids)} ids for {self.points.shape[0]} points")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class ProjectionOperator:
    """Immutable n' x n row-normalized Gaussian matrix plus its provenance."""

    n: int
    n_prime: int
    seed: int
    rows: np.ndarray
    orthonormal: bool = False

    @property
    def scale(self) -> float:
        """sqrt(n/n'), the factor applied to distances (not coordinates)."""
        return float(np.sqrt(self.n / self.n_prime))

    @property
    def sq_scale(self) -> float:
        """n/n', the factor applied to squared distances."""
        return self.n / self.n_prime


def build_operator(n: int, n_prime: int, seed: int, orthonormalize: bool = False) -> ProjectionOperator:
    """Draw a seeded n' x n operator with unit-norm rows.

    Deterministic in (n, n_prime, seed).  With ``orthonormalize=True`` the
    rows are additionally orthonormalized (QR with a deterministic sign
    fix), for measuring whether the distinction matters empirically; the
    default keeps the plain normalized construction.
    """
    if not 0 < n_prime < n:
        raise ShapeError(f"need 0 < n' < n, got n'={n_prime}, n={n}")
    if seed < 0:
        raise DomainError(f"seed must be a non-negative integer, got {seed}")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_OPERATOR_STREAM,)))
    rows = rng.standard_normal((n_prime, n))
    if orthonormalize:
        q, r = np.linalg.qr(rows.T)
        rows = (q * np.sign(np.diag(r))).T
    else:
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    rows.setflags(write=False)
    return ProjectionOperator(n=n, n_prime=n_prime, seed=seed, rows=rows, orthonormal=orthonormalize)


def project(op: ProjectionOperator, data: Dataset) -> Dataset:
    """Apply x -> Mx to every point; ids are preserved, coordinates unscaled."""
    if data.dim != op.n:
        raise ShapeError(f"dataset dimension {data.dim} != operator source dimension {op.n}")
    return Dataset(points=data.points @ op.rows.T, ids=list(data.ids))


def save_dataset(data: Dataset, path: str, fmt: str = "binary") -> None:
    """Write a dataset as CSV (one point per row) or the bit-exact binary format.

    Binary layout: 16-byte magic+version, two little-endian uint64 (m, d),
    then m*d little-endian float64 values row-major.  The binary format
    does not carry ids; they reload as row indices.
    """
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<QQ", data.m, data.dim))
            fh.write(data.points.astype("<f8").tobytes(order="C"))
    elif fmt == "csv":
        np.savetxt(path, data.points, delimiter=",", fmt="%.17g")
    else:
        raise DomainError(f"unknown dataset format {fmt!r}")


def load_dataset(path: str) -> Dataset:
    """Read a dataset file, auto-detecting binary magic vs CSV (header optional)."""
    with open(path, "rb") as fh:
        head = fh.read(len(_MAGIC))
        if head == _MAGIC:
            m, d = struct.unpack("<QQ", fh.read(16))
            buf = fh.read(8 * m * d)
            if len(buf) != 8 * m * d:
                raise ShapeError(f"truncated binary dataset: expected {m}x{d} float64")
            points = np.frombuffer(buf, dtype="<f8").reshape(m, d).copy()
            return Dataset(points=points)
    with open(path) as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(tok) for tok in first.strip().split(",")]
    except ValueError:
        skip = 1
    points = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=skip)
    return Dataset(points=points)


def save_operator(op: ProjectionOperator, path: str) -> None:
    """Persist only (n, n', seed, orthonormal); the matrix is regenerated on load."""
    with open(path, "w") as fh:
        json.dump(
            {"n": op.n, "n_prime": op.n_prime, "seed": op.seed, "orthonormal": op.orthonormal},
            fh,
        )


def load_operator(path: str) -> ProjectionOperator:
    with open(path) as fh:
        meta = json.load(fh)
    return build_operator(
        n=int(meta["n"]),
        n_prime=int(meta["n_prime"]),
        seed=int(meta["seed"]),
        orthonormalize=bool(meta.get("orthonormal", False)),
    )
