"""Dense symmetric matrices, ordered eigendecompositions, and spectral norms.

Everything downstream works with `SymmetricMatrix` (an exactly symmetrized
dense array) and `Spectrum` (eigenvalues in non-increasing order plus an
orthonormal eigenvector matrix under a deterministic sign convention).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import AsymmetricInput, DimMismatch, NoConvergence, NonFinite

__all__ = [
    "SymmetricMatrix",
    "Spectrum",
    "SpectralDistance",
    "eigh",
    "op_norm",
    "fro_norm",
    "spectral_distance",
    "verify_spectrum",
    "matrix_to_json",
    "matrix_from_json",
    "load_matrix",
    "dump_matrix",
]

ORTHONORMALITY_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10
ASYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Real symmetric matrix; construction symmetrizes via (M + M^T) / 2."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise DimMismatch(f"expected a nonempty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NonFinite("matrix entries must be finite")
        a = (a + a.T) / 2.0
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __add__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        self._check_dim(other)
        return SymmetricMatrix(self.entries + other.entries)

    def __sub__(self, other: "SymmetricMatrix") -> "SymmetricMatrix":
        self._check_dim(other)
        return SymmetricMatrix(self.entries - other.entries)

    def __mul__(self, scalar: float) -> "SymmetricMatrix":
        return SymmetricMatrix(self.entries * float(scalar))

    __rmul__ = __mul__

    def _check_dim(self, other: "SymmetricMatrix") -> None:
        if self.dim != other.dim:
            raise DimMismatch(f"dimension mismatch: {self.dim} vs {other.dim}")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues in non-increasing order; column k of `eigenvectors` belongs to eigenvalue k.

    Sign convention: in every eigenvector the entry of largest absolute value
    is non-negative (first such entry on ties). Equal eigenvalues keep the
    solver's output order, which makes repeated calls bit-identical.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.eigenvalues, dtype=float)
        v = np.asarray(self.eigenvectors, dtype=float)
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]


def eigh(a: SymmetricMatrix) -> Spectrum:
    """Full eigendecomposition with deterministic ordering and signs."""
    try:
        w, v = np.linalg.eigh(a.entries)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from None
    # Stable sort keeps the solver's output order within ties.
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    lead = np.argmax(np.abs(v), axis=0)
    signs = np.where(v[lead, np.arange(v.shape[1])] < 0.0, -1.0, 1.0)
    return Spectrum(eigenvalues=w, eigenvectors=v * signs)


def _eigvalsh(entries: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(entries)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from None


def op_norm(a: SymmetricMatrix) -> float:
    """Operator (spectral) norm: the largest absolute eigenvalue."""
    return float(np.max(np.abs(_eigvalsh(a.entries))))


def fro_norm(a: SymmetricMatrix) -> float:
    """Frobenius norm of all entries."""
    return float(np.linalg.norm(a.entries))


@dataclass(frozen=True)
class SpectralDistance:
    max_eig_diff: float
    l2_eig_diff: float
    op_norm_diff: float
    fro_norm_diff: float


def spectral_distance(a: SymmetricMatrix, b: SymmetricMatrix) -> SpectralDistance:
    """Eigenvalue displacements (positional, non-increasing order) and norm distances.

    Satisfies max_eig_diff <= op_norm_diff and l2_eig_diff <= fro_norm_diff
    up to 1e-12 slack (Weyl and Hoffman-Wielandt inequalities).
    """
    a._check_dim(b)
    wa = np.sort(_eigvalsh(a.entries))[::-1]
    wb = np.sort(_eigvalsh(b.entries))[::-1]
    diff = a - b
    return SpectralDistance(
        max_eig_diff=float(np.max(np.abs(wa - wb))),
        l2_eig_diff=float(np.linalg.norm(wa - wb)),
        op_norm_diff=op_norm(diff),
        fro_norm_diff=fro_norm(diff),
    )


def verify_spectrum(a: SymmetricMatrix, s: Spectrum) -> dict:
    """Residuals of the decomposition contracts, for tests and diagnostics."""
    v = s.eigenvectors
    recon = v @ np.diag(s.eigenvalues) @ v.T
    return {
        "orthonormality": float(np.max(np.abs(v.T @ v - np.eye(s.dim)))),
        "reconstruction": float(
            np.linalg.norm(a.entries - recon) / max(1.0, np.linalg.norm(a.entries))
        ),
        "ordering": float(np.max(np.diff(s.eigenvalues), initial=-np.inf)),
    }


def matrix_to_json(a: SymmetricMatrix) -> dict:
    return {"dim": a.dim, "rows": a.entries.tolist()}


def matrix_from_json(obj: dict) -> SymmetricMatrix:
    """Parse {"dim": n, "rows": [[...], ...]}, rejecting asymmetric data."""
    try:
        dim = int(obj["dim"])
        rows = np.array(obj["rows"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise AsymmetricInput(f"malformed matrix object: {exc}") from None
    if rows.ndim != 2 or rows.shape != (dim, dim):
        raise DimMismatch(f"declared dim {dim} does not match rows of shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise NonFinite("matrix entries must be finite")
    scale = max(1.0, float(np.max(np.abs(rows))))
    if np.max(np.abs(rows - rows.T)) > ASYMMETRY_TOL * scale:
        raise AsymmetricInput("matrix rows are asymmetric beyond 1e-12 relative tolerance")
    return SymmetricMatrix(rows)


def load_matrix(path) -> SymmetricMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        return matrix_from_json(json.load(fh))


def dump_matrix(a: SymmetricMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(matrix_to_json(a), fh)
