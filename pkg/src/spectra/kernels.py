"""Mercer kernels with reference spectra, Gram systems, and concentration constants.

Kernels live on [0, 1] with the uniform measure. A `KernelModel` carries the
kernel function together with its top-R eigenpairs (analytic for both built-in
fixtures), so population quantities are available in closed form and empirical
ones reduce to moments of the eigenfunctions at the sample points.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BadSpectrum,
    BadTau,
    ConditionViolated,
    DegenerateKernel,
    IndexOutOfRange,
    ZeroEigenvalue,
    ZeroGap,
)
from .linalg import SymmetricMatrix, eigh
from .spectral import IndexSetInfo, index_info_from_values

__all__ = [
    "KernelModel",
    "SampleSet",
    "GramSystem",
    "BernsteinConstants",
    "NystromFunction",
    "kernel_finite_rank",
    "kernel_brownian",
    "trial_rng",
    "gram",
    "nystrom",
    "empirical_deviation",
    "empirical_gram_moments",
    "psi_deviation_matrix",
    "empirical_spectrum_psi",
    "bilinear_empirical_psi",
    "influence_matrix",
    "BilinearDeviation",
    "bilinear_projection_dev",
    "bernstein_constants",
    "constants_from_values",
    "bernstein_tail",
    "bernstein_radius",
    "bilinear_residual_bound",
    "minimal_n_for_gap",
    "gauss_legendre_01",
]

EPS_EIG = 1e-10
MAX_FINITE_RANK = 16
KAPPA_GRID = 4096


@functools.lru_cache(maxsize=8)
def gauss_legendre_01(nodes: int = 2048) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return (x + 1.0) / 2.0, w / 2.0


@dataclass(frozen=True)
class KernelModel:
    """Symmetric PSD kernel on [0,1]^2 with its leading eigenpairs under uniform measure.

    `lambdas` holds the top-R eigenvalues (non-increasing); `tail_mass` is the
    summed trace of the discarded eigenvalues and `next_eigenvalue` the first
    discarded one (both zero for finite-rank kernels). Eigenfunctions are
    returned by `phi` as rows, indexed 1..R in the public API.
    """

    kind: str
    lambdas: np.ndarray
    tail_mass: float
    next_eigenvalue: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)

    @property
    def truncation(self) -> int:
        return len(self.lambdas)

    @property
    def finite_rank(self) -> bool:
        return self.tail_mass == 0.0

    def phi(self, x: np.ndarray) -> np.ndarray:
        """Eigenfunction values, shape (R, len(x)); row k-1 is the k-th eigenfunction."""
        x = np.asarray(x, dtype=float)
        r = self.truncation
        if self.kind == "finite_rank":
            out = np.empty((r, len(x)))
            out[0] = 1.0
            for k in range(1, r):
                out[k] = np.sqrt(2.0) * np.cos(k * np.pi * x)
            return out
        out = np.empty((r, len(x)))
        for k in range(r):
            out[k] = np.sqrt(2.0) * np.sin((k + 0.5) * np.pi * x)
        return out

    def kernel(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Pairwise kernel values, shape (len(x), len(y))."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "finite_rank":
            return (self.phi(x) * self.lambdas[:, None]).T @ self.phi(y)
        return np.minimum.outer(x, y)

    def kernel_diag(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "finite_rank":
            return np.einsum("k,ki->i", self.lambdas, self.phi(x) ** 2)
        return x

    def h_norm(self, coeffs: Sequence[float]) -> float:
        """RKHS norm of sum_k a_k phi_k: sqrt of sum a_k^2 / lambda_k."""
        a = np.asarray(coeffs, dtype=float)
        if len(a) > self.truncation:
            raise IndexOutOfRange("coefficient vector exceeds the retained spectrum")
        return float(np.sqrt(np.sum(a**2 / self.lambdas[: len(a)])))

    def index_info(self, j_set: Sequence[int], cluster_tol: float | None = None) -> IndexSetInfo:
        """Index-set structure over the reference spectrum, gap-aware of the first
        discarded eigenvalue (zero for finite-rank kernels)."""
        if max(j_set) > self.truncation:
            raise IndexOutOfRange("index set exceeds the retained spectrum")
        extended = np.append(self.lambdas, self.next_eigenvalue)
        return index_info_from_values(extended, j_set, cluster_tol)

    def check_orthonormality(self, nodes: int = 2048) -> float:
        """Max quadrature deviation of the eigenfunction Gram matrix from identity."""
        x, w = gauss_legendre_01(nodes)
        p = self.phi(x)
        g = (p * w) @ p.T
        return float(np.max(np.abs(g - np.eye(self.truncation))))

    def check_eigenfunctions(self, grid: int = 512, nodes: int = 512) -> float:
        """Max sampled-sup deviation of the integral-operator eigen-equations.

        The inner integral is split at the evaluation point so kernels with a
        diagonal kink keep spectral quadrature accuracy.
        """
        xs = np.linspace(0.0, 1.0, grid)
        t, w = gauss_legendre_01(nodes)
        lam = self.lambdas
        worst = 0.0
        for x in xs:
            y = np.concatenate([x * t, x + (1.0 - x) * t])
            wts = np.concatenate([x * w, (1.0 - x) * w])
            hx = self.kernel(np.array([x]), y)[0]
            ints = self.phi(y) @ (wts * hx)
            ref = lam * self.phi(np.array([x]))[:, 0]
            worst = max(worst, float(np.max(np.abs(ints - ref))))
        return worst

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambdas": self.lambdas.tolist(),
            "R": self.truncation,
        }

    @staticmethod
    def from_dict(obj: dict) -> "KernelModel":
        kind = obj.get("kind")
        if kind == "finite_rank":
            return kernel_finite_rank(obj["lambdas"])
        if kind == "brownian":
            return kernel_brownian(int(obj.get("R", 64)))
        raise BadSpectrum(f"unknown kernel kind {kind!r}")


def kernel_finite_rank(lambdas: Sequence[float]) -> KernelModel:
    """Kernel with exactly known spectrum: constant plus cosine eigenfunctions."""
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or len(lam) == 0 or len(lam) > MAX_FINITE_RANK:
        raise BadSpectrum(f"need 1..{MAX_FINITE_RANK} eigenvalues, got {lam.shape}")
    if np.any(lam <= 0.0) or np.any(np.diff(lam) > 0.0):
        raise BadSpectrum("eigenvalues must be positive and non-increasing")
    return KernelModel(kind="finite_rank", lambdas=lam, tail_mass=0.0, next_eigenvalue=0.0)


def kernel_brownian(r_trunc: int = 64) -> KernelModel:
    """min(s, t) kernel; eigenvalues ((k - 1/2) pi)^-2 with sine eigenfunctions.

    The trace is 1/2, which gives the tail mass of the truncation exactly.
    """
    if r_trunc < 1:
        raise BadSpectrum("need at least one retained eigenvalue")
    k = np.arange(1, r_trunc + 1)
    lam = ((k - 0.5) * np.pi) ** (-2.0)
    return KernelModel(
        kind="brownian",
        lambdas=lam,
        tail_mass=float(0.5 - np.sum(lam)),
        next_eigenvalue=float(((r_trunc + 0.5) * np.pi) ** (-2.0)),
    )


def trial_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for a (seed, stream...) address."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


@dataclass(frozen=True)
class SampleSet:
    """n i.i.d. uniform draws, reproducible from (seed, trial_index)."""

    seed: int
    trial_index: int
    n: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @staticmethod
    def draw(seed: int, trial_index: int, n: int) -> "SampleSet":
        if n < 1:
            raise IndexOutOfRange("sample size must be at least 1")
        points = trial_rng(seed, trial_index).random(n)
        return SampleSet(seed=seed, trial_index=trial_index, n=n, points=points)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "trial": self.trial_index,
            "n": self.n,
            "points": self.points.tolist(),
        }

    @staticmethod
    def from_dict(obj: dict) -> "SampleSet":
        return SampleSet(
            seed=int(obj["seed"]),
            trial_index=int(obj["trial"]),
            n=int(obj["n"]),
            points=np.asarray(obj["points"], dtype=float),
        )


@dataclass(frozen=True)
class GramSystem:
    """Scaled kernel Gram matrix with eigenvalues (non-increasing) and eigenvectors
    normalized so that (1/n) sum_i phi_hat_k(i)^2 = 1."""

    gram: SymmetricMatrix
    eigenvalues: np.ndarray
    phi_hat: np.ndarray

    @property
    def n(self) -> int:
        return self.gram.dim


def gram(model: KernelModel, sample: SampleSet) -> GramSystem:
    matrix = SymmetricMatrix(model.kernel(sample.points, sample.points) / sample.n)
    spec = eigh(matrix)
    return GramSystem(
        gram=matrix,
        eigenvalues=spec.eigenvalues,
        phi_hat=spec.eigenvectors * np.sqrt(sample.n),
    )


@dataclass(frozen=True)
class NystromFunction:
    """Out-of-sample eigenfunction built from one Gram eigenvector.

    Evaluating at the sample points reproduces sqrt(eigenvalue) times the
    normalized eigenvector.
    """

    model: KernelModel
    points: np.ndarray
    weights: np.ndarray
    eigenvalue: float

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.model.kernel(x, self.points) @ self.weights

    def coefficients(self, r_trunc: int | None = None) -> np.ndarray:
        """Expansion coefficients over the reference eigenfunctions.

        Exact for finite-rank kernels; truncated at R otherwise.
        """
        r = self.model.truncation if r_trunc is None else r_trunc
        p = self.model.phi(self.points)[:r]
        return self.model.lambdas[:r] * (p @ self.weights)


def nystrom(model: KernelModel, sample: SampleSet, gsys: GramSystem, k: int) -> NystromFunction:
    if k < 1 or k > gsys.n:
        raise IndexOutOfRange(f"eigenvector index {k} out of range 1..{gsys.n}")
    lam_hat = float(gsys.eigenvalues[k - 1])
    if lam_hat <= EPS_EIG:
        raise ZeroEigenvalue(f"empirical eigenvalue {lam_hat:g} at position {k} is numerically zero")
    weights = gsys.phi_hat[:, k - 1] / (sample.n * np.sqrt(lam_hat))
    return NystromFunction(model=model, points=sample.points, weights=weights, eigenvalue=lam_hat)


def empirical_deviation(model: KernelModel, sample: SampleSet, k: int, l: int) -> float:
    """(P_n - P)(phi_k phi_l): empirical mean of the product minus its population value."""
    r = model.truncation
    if not (1 <= k <= r and 1 <= l <= r):
        raise IndexOutOfRange(f"indices must lie in 1..{r}")
    p = model.phi(sample.points)
    return float(np.mean(p[k - 1] * p[l - 1]) - (1.0 if k == l else 0.0))


def empirical_gram_moments(model: KernelModel, sample: SampleSet) -> np.ndarray:
    """R x R matrix of empirical second moments of the eigenfunctions."""
    p = model.phi(sample.points)
    return p @ p.T / sample.n


def psi_deviation_matrix(model: KernelModel, moments: np.ndarray) -> np.ndarray:
    """Coordinates of the empirical-minus-population covariance operator in the
    orthonormal eigenbasis of the reference operator: sqrt(lam_k lam_l) times
    the centered moments."""
    s = np.sqrt(model.lambdas)
    return s[:, None] * s[None, :] * (moments - np.eye(model.truncation))


def empirical_spectrum_psi(model: KernelModel, moments: np.ndarray) -> np.ndarray:
    """Nonzero Gram spectrum computed in the R x R eigenfunction coordinates.

    Exact for finite-rank kernels: the scaled moment matrix shares its nonzero
    spectrum with the n x n Gram matrix.
    """
    s = np.sqrt(model.lambdas)
    m = s[:, None] * s[None, :] * moments
    return np.sort(np.linalg.eigvalsh(m))[::-1]


def bilinear_empirical_psi(
    model: KernelModel,
    moments: np.ndarray,
    j_positions: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
) -> float:
    """Empirical projected bilinear form computed in eigenfunction coordinates.

    Equals the Gram-eigenvector evaluation for finite-rank kernels; positions
    are 0-based indices into the non-increasing empirical spectrum.
    """
    s = np.sqrt(model.lambdas)
    m = s[:, None] * s[None, :] * moments
    w, u = np.linalg.eigh(m)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    u = u[:, order]
    if np.any(w[j_positions] <= EPS_EIG):
        raise ZeroEigenvalue("an empirical eigenvalue on J is numerically zero")
    ga = moments @ (a * 1.0)
    gb = moments @ (b * 1.0)
    proj_a = (ga * s) @ u[:, j_positions] / np.sqrt(w[j_positions])
    proj_b = (gb * s) @ u[:, j_positions] / np.sqrt(w[j_positions])
    return float(np.sum(proj_a * proj_b))


def _pad(coeffs: Sequence[float], r: int) -> np.ndarray:
    a = np.asarray(coeffs, dtype=float)
    if len(a) > r:
        raise IndexOutOfRange("coefficient vector exceeds the truncation order")
    return np.pad(a, (0, r - len(a)))


def influence_weights(model: KernelModel, info: IndexSetInfo, r_trunc: int) -> np.ndarray:
    """Four-case weight matrix applied entrywise to centered moments.

    Both indices in J: weight 1. One index k in J against l outside:
    lambda_k / (lambda_k - lambda_l), symmetric in the mirrored case.
    Both outside: 0.
    """
    if r_trunc > model.truncation:
        raise IndexOutOfRange("truncation order exceeds the retained spectrum")
    if max(info.j_set) > r_trunc:
        raise IndexOutOfRange("index set exceeds the truncation order")
    lam = model.lambdas[:r_trunc]
    in_j = np.zeros(r_trunc, dtype=bool)
    in_j[info.positions()] = True
    w = np.zeros((r_trunc, r_trunc))
    w[np.ix_(in_j, in_j)] = 1.0
    for k in np.flatnonzero(in_j):
        for l in np.flatnonzero(~in_j):
            denom = lam[k] - lam[l]
            if abs(denom) == 0.0:
                raise ZeroGap(f"coincident eigenvalues at positions {k + 1} and {l + 1}")
            w[k, l] = w[l, k] = lam[k] / denom
    return w


def influence_matrix(
    model: KernelModel, sample: SampleSet, info: IndexSetInfo, r_trunc: int
) -> np.ndarray:
    """First-order random operator for projected bilinear forms, in the phi basis."""
    moments = empirical_gram_moments(model, sample)[:r_trunc, :r_trunc]
    dev = moments - np.eye(r_trunc)
    return influence_weights(model, info, r_trunc) * dev


@dataclass(frozen=True)
class BilinearDeviation:
    """Empirical, population, and first-order-predicted projected bilinear forms."""

    empirical: float
    population: float
    predicted: float

    @property
    def residual(self) -> float:
        return abs(self.empirical - self.population - self.predicted)


def bilinear_projection_dev(
    model: KernelModel,
    sample: SampleSet,
    info: IndexSetInfo,
    f_coeffs: Sequence[float],
    g_coeffs: Sequence[float],
    r_trunc: int,
    gsys: GramSystem | None = None,
) -> BilinearDeviation:
    """Projected bilinear form of f and g: empirical value through the Gram
    eigenvectors, population value, and the first-order prediction."""
    a = _pad(f_coeffs, r_trunc)
    b = _pad(g_coeffs, r_trunc)
    if gsys is None:
        gsys = gram(model, sample)
    if max(info.j_set) > gsys.n:
        raise IndexOutOfRange("index set exceeds the number of Gram eigenpairs")
    pos = info.positions()
    lam_hat = gsys.eigenvalues[pos]
    if np.any(lam_hat <= EPS_EIG):
        raise ZeroEigenvalue("an empirical eigenvalue on J is numerically zero")
    p = model.phi(sample.points)[:r_trunc]
    snf = a @ p
    sng = b @ p
    proj_f = snf @ gsys.phi_hat[:, pos] / sample.n
    proj_g = sng @ gsys.phi_hat[:, pos] / sample.n
    empirical = float(np.sum(proj_f * proj_g))
    population = float(np.sum(a[pos] * b[pos]))
    predicted = float(a @ influence_matrix(model, sample, info, r_trunc) @ b)
    return BilinearDeviation(empirical=empirical, population=population, predicted=predicted)


@dataclass(frozen=True)
class BernsteinConstants:
    """kappa = sup of the kernel diagonal; r, sigma, d as derived from it."""

    kappa: float
    r: float
    sigma: float
    d: float
    lambda_max: float


def constants_from_values(kappa: float, lambda_max: float) -> BernsteinConstants:
    if lambda_max <= 0.0:
        raise DegenerateKernel("leading eigenvalue must be positive")
    if kappa < lambda_max:
        # The diagonal sup dominates the trace, hence the leading eigenvalue.
        raise DegenerateKernel("kernel diagonal sup cannot be below the leading eigenvalue")
    return BernsteinConstants(
        kappa=float(kappa),
        r=float(kappa + lambda_max),
        sigma=float(kappa * lambda_max),
        d=float(kappa / lambda_max),
        lambda_max=float(lambda_max),
    )


def bernstein_constants(model: KernelModel, grid: int = KAPPA_GRID) -> BernsteinConstants:
    """Constants of the operator concentration inequality; kappa by grid maximization
    (exact for the fixtures, whose diagonals attain their sup on the grid)."""
    lam_max = float(model.lambdas[0]) if model.truncation else 0.0
    if lam_max <= 0.0:
        raise DegenerateKernel("kernel has no positive eigenvalue")
    kappa = float(np.max(model.kernel_diag(np.linspace(0.0, 1.0, grid))))
    return constants_from_values(kappa, lam_max)


def _tail_threshold(c: BernsteinConstants, n: int) -> float:
    return float(np.sqrt(c.sigma / n) + c.r / (3.0 * n))


def bernstein_tail(c: BernsteinConstants, n: int, t: float) -> float:
    """Upper bound on P(operator-norm deviation >= t), capped at 1."""
    threshold = _tail_threshold(c, n)
    if t < threshold:
        raise ConditionViolated(
            f"t = {t:g} is below the admissible threshold {threshold:g}"
        )
    return float(min(1.0, 4.0 * c.d * np.exp(-3.0 * n * t**2 / (6.0 * c.sigma + 2.0 * c.r * t))))


def bernstein_radius(c: BernsteinConstants, n: int, tau: float) -> float:
    """Deviation radius exceeded with probability at most tau."""
    if not (0.0 < tau < 1.0):
        raise BadTau(f"tau must lie in (0, 1), got {tau!r}")
    log_term = np.log(4.0 * c.d / tau)
    return float(np.sqrt(2.0 * c.sigma * log_term / n) + 2.0 * c.r * log_term / (3.0 * n))


def minimal_n_for_gap(c: BernsteinConstants, gamma: float, denominator: float = 4.0) -> int:
    """Smallest n with sqrt(sigma/n) + r/(3n) <= gamma / denominator."""
    if not np.isfinite(gamma):
        return 1
    target = gamma / denominator
    lo, hi = 1, 1
    while _tail_threshold(c, hi) > target:
        hi *= 2
        if hi > 10**15:
            raise ConditionViolated("no feasible sample size below 1e15")
    while lo < hi:
        mid = (lo + hi) // 2
        if _tail_threshold(c, mid) <= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def bilinear_residual_bound(
    info: IndexSetInfo, m_f: float, c: BernsteinConstants, n: int, tau: float
) -> float:
    """High-probability bound on the sup residual of projected bilinear forms:
    4 M^2 K (gamma + 2 theta_max) / gamma^2 times the squared deviation radius."""
    if _tail_threshold(c, n) > info.gamma_j / 4.0:
        raise ConditionViolated(
            f"n = {n} is too small for the gap condition",
            required_n=minimal_n_for_gap(c, info.gamma_j),
        )
    radius = bernstein_radius(c, n, tau)
    gamma = info.gamma_j
    return float(
        4.0 * m_f**2 * info.k_clusters * (gamma + 2.0 * info.theta_max) / gamma**2 * radius**2
    )
