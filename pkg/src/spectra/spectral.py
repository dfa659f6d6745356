"""Index-set structure over a spectrum and the compression calculus built on it.

An index set J selects eigenvalue positions; its clusters group equal
eigenvalues, and two kinds of spectral gaps control every expansion below:
the outer gap (inside J vs outside) and per-cluster gaps (a cluster's value
vs everything outside that cluster). `compress` evaluates an entire function
on the selected part of the spectrum; `contour_compress` reproduces it by
resolvent quadrature on circles, which is the numerical cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimMismatch,
    EmptyIndexSet,
    IndexOutOfRange,
    OverlappingDisks,
    PoleOnContour,
    ZeroGap,
)
from .linalg import Spectrum, SymmetricMatrix

__all__ = [
    "IndexSetInfo",
    "HoloFunction",
    "build_index_set",
    "index_info_from_values",
    "eigenprojection",
    "compress",
    "compression_gradient",
    "CompressionGradient",
    "contour_compress",
    "cauchy_integral",
]

DEFAULT_NODES = 256


def default_cluster_tol(eigenvalues: np.ndarray) -> float:
    """Two computed eigenvalues count as equal below this threshold."""
    top = float(np.abs(eigenvalues[0])) if len(eigenvalues) else 0.0
    return 1e-9 * max(1.0, top)


@dataclass(frozen=True)
class IndexSetInfo:
    """Index set J with cluster partition, distinct values, and spectral gaps.

    Indices are 1-based positions into a non-increasing eigenvalue sequence.
    `gamma_j` is the outer gap min_{k in J, l not in J} |lambda_k - lambda_l|
    (infinite when J covers the whole spectrum); `gamma_jj[j]` is the distance
    from cluster value theta_j to every eigenvalue outside that cluster,
    including other clusters inside J.
    """

    j_set: tuple[int, ...]
    clusters: tuple[tuple[int, ...], ...]
    thetas: tuple[float, ...]
    gamma_j: float
    gamma_jj: tuple[float, ...]

    @property
    def k_clusters(self) -> int:
        return len(self.clusters)

    @property
    def theta_max(self) -> float:
        return self.thetas[0]

    def positions(self) -> np.ndarray:
        """0-based positions of J."""
        return np.asarray(self.j_set, dtype=int) - 1

    def cluster_positions(self) -> list[np.ndarray]:
        return [np.asarray(c, dtype=int) - 1 for c in self.clusters]


def index_info_from_values(
    eigenvalues: Sequence[float], j: Sequence[int], cluster_tol: float | None = None
) -> IndexSetInfo:
    """Build an IndexSetInfo from a non-increasing eigenvalue sequence."""
    lam = np.asarray(eigenvalues, dtype=float)
    j_set = tuple(sorted(int(k) for k in j))
    if not j_set:
        raise EmptyIndexSet("index set must be nonempty")
    if len(set(j_set)) != len(j_set):
        raise IndexOutOfRange("index set contains duplicates")
    if j_set[0] < 1 or j_set[-1] > len(lam):
        raise IndexOutOfRange(f"indices must lie in 1..{len(lam)}, got {j_set}")
    tol = default_cluster_tol(lam) if cluster_tol is None else float(cluster_tol)

    inside = np.array([k - 1 for k in j_set], dtype=int)
    outside = np.setdiff1d(np.arange(len(lam)), inside)
    if outside.size:
        gamma_j = float(np.min(np.abs(lam[inside][:, None] - lam[outside][None, :])))
        if gamma_j <= tol:
            raise ZeroGap(
                f"an eigenvalue outside J lies within {tol:g} of one inside (gap {gamma_j:g})"
            )
    else:
        gamma_j = float("inf")

    # Chain consecutive inside values into clusters of equal eigenvalues.
    clusters: list[list[int]] = [[j_set[0]]]
    for k in j_set[1:]:
        if abs(lam[clusters[-1][0] - 1] - lam[k - 1]) <= tol:
            clusters[-1].append(k)
        else:
            clusters.append([k])
    thetas = tuple(float(lam[c[0] - 1]) for c in clusters)

    gamma_jj = []
    for c, theta in zip(clusters, thetas):
        others = np.setdiff1d(np.arange(len(lam)), np.array(c) - 1)
        gamma_jj.append(float(np.min(np.abs(theta - lam[others]))) if others.size else float("inf"))

    return IndexSetInfo(
        j_set=j_set,
        clusters=tuple(tuple(c) for c in clusters),
        thetas=thetas,
        gamma_j=gamma_j,
        gamma_jj=tuple(gamma_jj),
    )


def build_index_set(
    spec: Spectrum, j: Sequence[int], cluster_tol: float | None = None
) -> IndexSetInfo:
    return index_info_from_values(spec.eigenvalues, j, cluster_tol)


class HoloFunction:
    """An entire function with evaluation and derivative, usable on real or complex input.

    Restricting to entire functions keeps every contour in the calculus inside
    the domain of holomorphy, so no registry entry can violate that premise.
    """

    def __init__(self, tag: str, value: Callable, deriv: Callable):
        self.tag = tag
        self._value = value
        self._deriv = deriv

    def __call__(self, z):
        return self._value(z)

    def deriv(self, z):
        return self._deriv(z)

    def __repr__(self):
        return f"HoloFunction({self.tag})"

    @staticmethod
    def one() -> "HoloFunction":
        return HoloFunction("one", lambda z: np.ones_like(np.asarray(z)), lambda z: np.zeros_like(np.asarray(z)))

    @staticmethod
    def identity() -> "HoloFunction":
        return HoloFunction("identity", lambda z: np.asarray(z), lambda z: np.ones_like(np.asarray(z)))

    @staticmethod
    def power(p: int) -> "HoloFunction":
        if p < 0 or int(p) != p:
            raise ValueError("power exponent must be a non-negative integer")
        p = int(p)
        if p == 0:
            return HoloFunction.one()
        return HoloFunction(
            f"power({p})",
            lambda z: np.asarray(z) ** p,
            lambda z: p * np.asarray(z) ** (p - 1) if p > 1 else np.ones_like(np.asarray(z)),
        )

    @staticmethod
    def exp() -> "HoloFunction":
        return HoloFunction("exp", np.exp, np.exp)

    @staticmethod
    def polynomial(coeffs: Sequence[float]) -> "HoloFunction":
        c = np.asarray(coeffs, dtype=float)
        dc = c[1:] * np.arange(1, len(c))
        return HoloFunction(
            f"polynomial({c.tolist()})",
            lambda z: np.polynomial.polynomial.polyval(z, c),
            lambda z: np.polynomial.polynomial.polyval(z, dc) if len(dc) else np.zeros_like(np.asarray(z)),
        )

    @staticmethod
    def registry() -> list["HoloFunction"]:
        """The functions swept by equivalence tests: 1, z, z^2, exp."""
        return [HoloFunction.one(), HoloFunction.identity(), HoloFunction.power(2), HoloFunction.exp()]


def eigenprojection(spec: Spectrum, info: IndexSetInfo) -> SymmetricMatrix:
    """Orthogonal projector onto the span of the eigenvectors indexed by J."""
    vj = spec.eigenvectors[:, info.positions()]
    return SymmetricMatrix(vj @ vj.T)


def compress(spec: Spectrum, f: HoloFunction, info: IndexSetInfo) -> SymmetricMatrix:
    """Spectral calculus restricted to J: sum over k in J of f(lambda_k) psi_k psi_k^T."""
    pos = info.positions()
    vj = spec.eigenvectors[:, pos]
    weights = np.asarray(f(spec.eigenvalues[pos]), dtype=float)
    return SymmetricMatrix((vj * weights) @ vj.T)


@dataclass(frozen=True)
class CompressionGradient:
    """The three displayed sums of the first-order compression expansion.

    part1: derivative weights on within-cluster blocks.
    part2: divided differences between distinct cluster values.
    part3: cross terms between J and its complement, weighted by
           f(lambda_k) / (lambda_k - lambda_l).
    """

    part1: SymmetricMatrix
    part2: SymmetricMatrix
    part3: SymmetricMatrix

    @property
    def total(self) -> SymmetricMatrix:
        return SymmetricMatrix(self.part1.entries + self.part2.entries + self.part3.entries)


def delta_in_eigenbasis(spec: Spectrum, perturbed: SymmetricMatrix) -> np.ndarray:
    """Coordinates of (perturbed - base) in the base eigenbasis."""
    if perturbed.dim != spec.dim:
        raise DimMismatch(f"dimension mismatch: {spec.dim} vs {perturbed.dim}")
    v = spec.eigenvectors
    d = v.T @ perturbed.entries @ v - np.diag(spec.eigenvalues)
    return (d + d.T) / 2.0


def compression_gradient(
    spec_h: Spectrum, h_hat: SymmetricMatrix, f: HoloFunction, info: IndexSetInfo
) -> CompressionGradient:
    """First-order term of compress(h_hat) - compress(h), split into its three sums."""
    lam = spec_h.eigenvalues
    v = spec_h.eigenvectors
    n = spec_h.dim
    d = delta_in_eigenbasis(spec_h, h_hat)

    c1 = np.zeros((n, n))
    c2 = np.zeros((n, n))
    c3 = np.zeros((n, n))

    cluster_pos = info.cluster_positions()
    for c, theta in zip(cluster_pos, info.thetas):
        fprime = float(np.real(f.deriv(theta)))
        c1[np.ix_(c, c)] = fprime * d[np.ix_(c, c)]
    for i, (ci, ti) in enumerate(zip(cluster_pos, info.thetas)):
        for jdx, (cj, tj) in enumerate(zip(cluster_pos, info.thetas)):
            if i == jdx:
                continue
            divdiff = float(np.real((f(tj) - f(ti)) / (tj - ti)))
            c2[np.ix_(ci, cj)] = divdiff * d[np.ix_(ci, cj)]

    inside = info.positions()
    outside = np.setdiff1d(np.arange(n), inside)
    if outside.size:
        fk = np.real(np.asarray(f(lam[inside]), dtype=complex)).astype(float)
        denom = lam[inside][:, None] - lam[outside][None, :]
        block = fk[:, None] * d[np.ix_(inside, outside)] / denom
        c3[np.ix_(inside, outside)] = block
        c3[np.ix_(outside, inside)] = block.T

    return CompressionGradient(
        part1=SymmetricMatrix(v @ c1 @ v.T),
        part2=SymmetricMatrix(v @ c2 @ v.T),
        part3=SymmetricMatrix(v @ c3 @ v.T),
    )


def contour_compress(
    spec: Spectrum, f: HoloFunction, info: IndexSetInfo, nodes_per_circle: int = DEFAULT_NODES
) -> SymmetricMatrix:
    """Resolvent quadrature of the compression over one circle per cluster.

    Each circle is centered at a cluster value with radius gamma_j / 2, and the
    trapezoid rule on a circle converges geometrically in the node count. The
    resolvent is evaluated by dense complex solves so this path shares nothing
    with `compress` beyond the reconstructed matrix.
    """
    if nodes_per_circle < 32:
        raise ValueError("nodes_per_circle must be at least 32")
    if not np.isfinite(info.gamma_j):
        raise ValueError("contour quadrature needs a finite outer gap (J must not cover everything)")
    radius = info.gamma_j / 2.0
    thetas = np.asarray(info.thetas)
    for i in range(len(thetas)):
        for j in range(i + 1, len(thetas)):
            if abs(thetas[i] - thetas[j]) < 2.0 * radius * (1.0 - 1e-12):
                raise OverlappingDisks(
                    f"disks around {thetas[i]:g} and {thetas[j]:g} with radius {radius:g} intersect"
                )

    v = spec.eigenvectors
    a = v @ np.diag(spec.eigenvalues) @ v.T
    n = spec.dim
    eye = np.eye(n, dtype=complex)
    t = 2.0 * np.pi * np.arange(nodes_per_circle) / nodes_per_circle
    ring = radius * np.exp(1j * t)

    acc = np.zeros((n, n), dtype=complex)
    for theta in thetas:
        for w in ring:
            z = theta + w
            resolvent = np.linalg.solve(z * eye - a, eye)
            acc += w * complex(f(z)) * resolvent
    acc /= nodes_per_circle
    return SymmetricMatrix(np.real(acc))


def cauchy_integral(
    a: complex,
    b: complex,
    f: HoloFunction,
    center: complex = 0.0,
    radius: float = 1.0,
    nodes: int = 256,
) -> complex:
    """Trapezoid value of (1/2 pi i) * contour integral of f(z) / ((z-a)(z-b)).

    Matches the residue evaluation: f'(a) when a = b inside; the divided
    difference when both lie inside; f(a)/(a-b) when only a is inside; zero
    when both are outside.
    """
    if nodes < 64:
        raise ValueError("nodes must be at least 64")
    for pole in (a, b):
        if abs(abs(pole - center) - radius) <= 1e-12 * max(1.0, radius):
            raise PoleOnContour(f"pole {pole} lies on the quadrature circle")
    t = 2.0 * np.pi * np.arange(nodes) / nodes
    w = radius * np.exp(1j * t)
    z = center + w
    vals = np.asarray(f(z), dtype=complex)
    return complex(np.mean(w * vals / ((z - a) * (z - b))))
