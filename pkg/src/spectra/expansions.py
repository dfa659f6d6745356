"""First-order perturbation expansions for eigenprojections and eigenvalues.

Given a base symmetric matrix, a perturbed one, and an index set J, these
operations compute the leading expansion terms and compare them against the
exact perturbed quantities, reporting the remainder together with the
second-order bound that holds whenever the perturbation is small relative to
the relevant spectral gap. All formulas assume a non-negative base spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, GapViolation
from .linalg import Spectrum, SymmetricMatrix, eigh
from .spectral import (
    HoloFunction,
    IndexSetInfo,
    compression_gradient,
    delta_in_eigenbasis,
    eigenprojection,
)

__all__ = [
    "ExpansionReport",
    "OverlapMatrix",
    "projection_leading_term",
    "projection_expansion",
    "compression_leading_term",
    "eigenvector_overlap",
    "eigval_expansion_separated",
    "eigval_expansion_clustered",
    "separated_bound",
    "clustered_bound",
    "fixture_f1",
]


@dataclass(frozen=True)
class ExpansionReport:
    """Outcome of one expansion check.

    `condition_ratio` is the perturbation size over the governing gap;
    `condition_ok` says whether the regime's smallness threshold holds, in
    which case `remainder_norm <= bound` is guaranteed. Reports are
    produced even when the condition fails so harnesses can count failures.
    """

    regime: str
    condition_ratio: float
    condition_ok: bool
    predicted: np.ndarray | float
    actual: np.ndarray | float
    remainder_norm: float
    bound: float
    cluster_ratios: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        def _plain(x):
            return x.tolist() if isinstance(x, np.ndarray) else float(x)

        out = {
            "regime": self.regime,
            "ratio": self.condition_ratio,
            "condition_ok": self.condition_ok,
            "remainder": self.remainder_norm,
            "bound": self.bound,
            "predicted": _plain(self.predicted),
            "actual": _plain(self.actual),
        }
        if self.cluster_ratios is not None:
            out["cluster_ratios"] = list(self.cluster_ratios)
        return out


@dataclass(frozen=True)
class OverlapMatrix:
    """Inner products <psi_k, psi_hat_l> over J x J; near-orthogonal for small perturbations."""

    psi_hat: np.ndarray

    def orthogonality_defect(self) -> float:
        m = self.psi_hat @ self.psi_hat.T
        return float(np.max(np.abs(np.linalg.eigvalsh(m - np.eye(m.shape[0])))))


def _sym_op_norm(m: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh((m + m.T) / 2.0))))


def projection_leading_term(
    spec_h: Spectrum, h_hat: SymmetricMatrix, info: IndexSetInfo
) -> SymmetricMatrix:
    """First-order term of the spectral projector difference.

    In the base eigenbasis this matrix has entries delta_kl / (lambda_k -
    lambda_l) on the (J, complement) blocks and zeros elsewhere.
    """
    lam = spec_h.eigenvalues
    v = spec_h.eigenvectors
    d = delta_in_eigenbasis(spec_h, h_hat)
    inside = info.positions()
    outside = np.setdiff1d(np.arange(spec_h.dim), inside)
    coords = np.zeros_like(d)
    if outside.size:
        block = d[np.ix_(inside, outside)] / (lam[inside][:, None] - lam[outside][None, :])
        coords[np.ix_(inside, outside)] = block
        coords[np.ix_(outside, inside)] = block.T
    return SymmetricMatrix(v @ coords @ v.T)


def _check_gap_safety(hat_spec: Spectrum, info: IndexSetInfo) -> None:
    """Positional identification fails if perturbed eigenvalues cross the disk region."""
    if not np.isfinite(info.gamma_j):
        return
    radius = info.gamma_j / 2.0
    inside = info.positions()
    outside = np.setdiff1d(np.arange(hat_spec.dim), inside)
    thetas = np.asarray(info.thetas)
    if outside.size:
        dist_out = np.min(np.abs(hat_spec.eigenvalues[outside][:, None] - thetas[None, :]), axis=1)
        if np.any(dist_out < radius):
            raise GapViolation("a perturbed eigenvalue outside J entered the gap region")
    for c, theta in zip(info.cluster_positions(), info.thetas):
        if np.any(np.abs(hat_spec.eigenvalues[c] - theta) > radius):
            raise GapViolation("a perturbed eigenvalue inside J left the gap region")


def projection_expansion(
    spec_h: Spectrum, h_hat: SymmetricMatrix, info: IndexSetInfo
) -> ExpansionReport:
    """Compare the perturbed projector against projector + leading term.

    Bound: 8 K (ratio)^2 with ratio = op-norm perturbation over the outer gap,
    valid when ratio < 1/4.
    """
    d = delta_in_eigenbasis(spec_h, h_hat)
    delta_op = _sym_op_norm(d)
    ratio = delta_op / info.gamma_j if np.isfinite(info.gamma_j) else 0.0
    hat_spec = eigh(h_hat)
    if ratio >= 0.5:
        _check_gap_safety(hat_spec, info)

    predicted = eigenprojection(spec_h, info).entries + projection_leading_term(
        spec_h, h_hat, info
    ).entries
    vj = hat_spec.eigenvectors[:, info.positions()]
    actual = vj @ vj.T
    return ExpansionReport(
        regime="projection",
        condition_ratio=ratio,
        condition_ok=bool(ratio < 0.25),
        predicted=predicted,
        actual=actual,
        remainder_norm=_sym_op_norm(actual - predicted),
        bound=8.0 * info.k_clusters * ratio**2,
    )


def compression_leading_term(
    spec_h: Spectrum, h_hat: SymmetricMatrix, info: IndexSetInfo
) -> SymmetricMatrix:
    """First-order term of the canonical compression difference.

    Equals the inside block of the perturbation plus the gap-weighted cross
    terms; identical to the identity-function compression gradient. The
    remainder against the exact compression difference is bounded by
    4 K (gamma_j + 2 theta_max) ratio^2 when ratio < 1/4.
    """
    return compression_gradient(spec_h, h_hat, HoloFunction.identity(), info).total


def eigenvector_overlap(
    spec_h: Spectrum, spec_hhat: Spectrum, info: IndexSetInfo
) -> OverlapMatrix:
    """Matrix of inner products between base and perturbed eigenvectors over J."""
    if spec_h.dim != spec_hhat.dim:
        raise DimMismatch(f"dimension mismatch: {spec_h.dim} vs {spec_hhat.dim}")
    pos = info.positions()
    return OverlapMatrix(psi_hat=spec_h.eigenvectors[:, pos].T @ spec_hhat.eigenvectors[:, pos])


def separated_bound(info: IndexSetInfo, delta_op: float) -> float:
    """l2 bound for the separated regime: concatenated per-cluster block spectra."""
    total = 0.0
    for c, theta, gamma in zip(info.clusters, info.thetas, info.gamma_jj):
        if not np.isfinite(gamma):
            continue  # no spectrum outside the cluster: its block is exact
        total += len(c) * (11.0 * gamma + 32.0 * theta) ** 2 / 4.0 * (delta_op / gamma) ** 4
    return float(np.sqrt(total))


def clustered_bound(info: IndexSetInfo, delta_op: float) -> float:
    """Bound for the trace (summed eigenvalue) approximation in the clustered regime."""
    k = info.k_clusters
    gamma = info.gamma_j
    return float(
        k
        * np.sqrt(len(info.j_set))
        * (1.5 * gamma / np.sqrt(k) + 4.0 * gamma + 14.0 * info.theta_max)
        * (delta_op / gamma) ** 2
    )


def eigval_expansion_separated(
    spec_h: Spectrum, h_hat: SymmetricMatrix, info: IndexSetInfo
) -> ExpansionReport:
    """Eigenvalue displacements vs the ordered spectra of per-cluster perturbation blocks."""
    d = delta_in_eigenbasis(spec_h, h_hat)
    delta_op = _sym_op_norm(d)
    hat_spec = eigh(h_hat)
    pos = info.positions()
    actual = hat_spec.eigenvalues[pos] - spec_h.eigenvalues[pos]

    blocks = []
    for c in info.cluster_positions():
        blocks.append(np.sort(np.linalg.eigvalsh(d[np.ix_(c, c)]))[::-1])
    predicted = np.concatenate(blocks)

    ratios = tuple(delta_op / g for g in info.gamma_jj)
    ratio = max(ratios)
    return ExpansionReport(
        regime="separated",
        condition_ratio=ratio,
        condition_ok=bool(ratio < 0.25),
        predicted=predicted,
        actual=actual,
        remainder_norm=float(np.linalg.norm(actual - predicted)),
        bound=separated_bound(info, delta_op),
        cluster_ratios=ratios,
    )


def eigval_expansion_clustered(
    spec_h: Spectrum, h_hat: SymmetricMatrix, info: IndexSetInfo
) -> ExpansionReport:
    """Summed eigenvalue displacement vs the trace of the inside perturbation block."""
    d = delta_in_eigenbasis(spec_h, h_hat)
    delta_op = _sym_op_norm(d)
    hat_spec = eigh(h_hat)
    pos = info.positions()
    actual = float(np.sum(hat_spec.eigenvalues[pos] - spec_h.eigenvalues[pos]))
    predicted = float(np.sum(np.diag(d)[pos]))
    ratio = delta_op / info.gamma_j if np.isfinite(info.gamma_j) else 0.0
    return ExpansionReport(
        regime="clustered",
        condition_ratio=ratio,
        condition_ok=bool(ratio < 0.25 / np.sqrt(info.k_clusters)),
        predicted=predicted,
        actual=actual,
        remainder_norm=abs(actual - predicted),
        bound=clustered_bound(info, delta_op) if np.isfinite(info.gamma_j) else 0.0,
    )


def fixture_f1(epsilon: float = 0.5) -> tuple[SymmetricMatrix, SymmetricMatrix, tuple[int, ...]]:
    """Frozen fixture: base diag(3, 2, 2, 1), tridiagonal bump pattern, J = {2, 3}.

    Returns (base, perturbation, j_set); the perturbation is epsilon times the
    symmetric matrix with 0.1 on the (1,2), (2,3), (3,4) pairs.
    """
    base = SymmetricMatrix(np.diag([3.0, 2.0, 2.0, 1.0]))
    e0 = np.zeros((4, 4))
    for i, j in ((0, 1), (1, 2), (2, 3)):
        e0[i, j] = e0[j, i] = 0.1
    return base, SymmetricMatrix(epsilon * e0), (2, 3)
