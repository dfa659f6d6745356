"""Monte Carlo validation studies for the kernel concentration bounds and weak limits.

Every study maps a pure function over trial indices; trial t derives its RNG
stream from (seed, t), so results are reproducible bit for bit and independent
of execution order. `SPECTRA_THREADS` caps optional thread parallelism; the
aggregation is a deterministic fold in trial order either way.

Finite-rank kernels are handled in R x R eigenfunction coordinates, which
carry the exact nonzero Gram spectrum; truncated infinite-rank kernels get a
tail-mass padding on reported operator norms.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigInvalid, EmptySample, NonPsdCovariance, RankOutOfRange
from .expansions import clustered_bound, separated_bound
from .kernels import (
    KernelModel,
    SampleSet,
    bernstein_constants,
    bernstein_radius,
    bernstein_tail,
    bilinear_empirical_psi,
    bilinear_projection_dev,
    bilinear_residual_bound,
    empirical_gram_moments,
    empirical_spectrum_psi,
    gauss_legendre_01,
    gram,
    influence_weights,
    psi_deviation_matrix,
)
from .spectral import IndexSetInfo

__all__ = [
    "McConfig",
    "McReport",
    "TrialRow",
    "ks_distance",
    "estimate_index_set",
    "LimitSamples",
    "gaussian_limit_sampler",
    "bridge_samples",
    "run_eigenvalue_study",
    "run_opnorm_study",
    "run_projection_study",
    "run_limit_study",
]

WARMUP_TRIALS = 32
DEFAULT_LIMIT_DRAWS = 10_000
_WARMUP_STREAM = 7
_LIMIT_STREAM = 9


@dataclass(frozen=True)
class McConfig:
    """Study configuration; everything a trial needs is derivable from it."""

    kernel: KernelModel
    j_set: tuple[int, ...]
    n: int
    trials: int
    seed: int = 0
    tau: float = 0.1
    r_trunc: int | None = None
    f_class: tuple[tuple[float, ...], ...] = ()
    gap_tol: float | None = None
    limit_draws: int = DEFAULT_LIMIT_DRAWS

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigInvalid("trials must be at least 1")
        if self.n < 1:
            raise ConfigInvalid("n must be at least 1")
        if not (0.0 < self.tau < 1.0):
            raise ConfigInvalid("tau must lie in (0, 1)")
        if self.seed < 0:
            raise ConfigInvalid("seed must be a non-negative integer")
        if not self.j_set:
            raise ConfigInvalid("j_set must be nonempty")
        object.__setattr__(self, "j_set", tuple(int(k) for k in self.j_set))
        object.__setattr__(
            self, "f_class", tuple(tuple(float(c) for c in f) for f in self.f_class)
        )

    @property
    def truncation(self) -> int:
        return self.kernel.truncation if self.r_trunc is None else self.r_trunc

    def describe(self) -> dict:
        return {
            "kernel": self.kernel.to_dict(),
            "j_set": list(self.j_set),
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "tau": self.tau,
            "r_trunc": self.truncation,
            "f_class": [list(f) for f in self.f_class],
        }


@dataclass(frozen=True)
class TrialRow:
    trial: int
    n: int
    condition_ok: bool
    residual: float
    bound: float
    covered: bool
    opnorm_dev: float
    regime: str


CSV_COLUMNS = ("trial", "n", "condition_ok", "residual", "bound", "covered", "opnorm_dev", "regime")


@dataclass(frozen=True)
class McReport:
    study: str
    config: dict
    rows: tuple[TrialRow, ...]
    summary: dict

    def csv_lines(self) -> list[str]:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            lines.append(
                ",".join(
                    (
                        str(r.trial),
                        str(r.n),
                        "true" if r.condition_ok else "false",
                        repr(r.residual),
                        repr(r.bound),
                        "true" if r.covered else "false",
                        repr(r.opnorm_dev),
                        r.regime,
                    )
                )
            )
        return lines

    def write_csv(self, path, header_lines: Sequence[str] = ()) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("\n".join(self.csv_lines()) + "\n")


def _thread_count() -> int:
    raw = os.environ.get("SPECTRA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_trials(fn: Callable[[int], object], trials: int) -> list:
    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(trials)))
    return [fn(t) for t in range(trials)]


def _derived_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([int(seed), stream]).generate_state(1)[0])


def ks_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic: sup distance of empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise EmptySample("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / len(a)
    cdf_b = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def estimate_index_set(
    eigenvalues: Sequence[float], target: int, gap_tol: float
) -> tuple[int, ...]:
    """Group consecutive eigenvalues whose gap is at most `gap_tol`; return the
    1-based indices of the target-th cluster (clusters ordered by value)."""
    lam = np.asarray(eigenvalues, dtype=float)
    clusters: list[list[int]] = [[1]]
    for i in range(1, len(lam)):
        if lam[i - 1] - lam[i] <= gap_tol:
            clusters[-1].append(i + 1)
        else:
            clusters.append([i + 1])
    if target < 1 or target > len(clusters):
        raise RankOutOfRange(f"cluster rank {target} out of range 1..{len(clusters)}")
    return tuple(clusters[target - 1])


def _pair_covariance(model: KernelModel, pairs: list[tuple[int, int]]) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance of the products phi_k phi_l over the listed
    0-based index pairs, by Gauss-Legendre quadrature."""
    x, w = gauss_legendre_01()
    p = model.phi(x)
    prods = np.stack([p[k] * p[l] for k, l in pairs])
    mean = prods @ w
    cov = (prods * w) @ prods.T - np.outer(mean, mean)
    return mean, (cov + cov.T) / 2.0


def bridge_samples(
    model: KernelModel, pairs: list[tuple[int, int]], draws: int, rng: np.random.Generator
) -> np.ndarray:
    """Draws of the centered Gaussian field evaluated at products phi_k phi_l.

    The covariance is P(prod_i prod_j) - P(prod_i) P(prod_j); sampling goes
    through its symmetric eigendecomposition square root.
    """
    _, cov = _pair_covariance(model, pairs)
    w, u = np.linalg.eigh(cov)
    scale = max(1.0, float(np.max(np.abs(w))) if len(w) else 1.0)
    if np.min(w) < -1e-10 * scale:
        raise NonPsdCovariance(f"limit covariance has eigenvalue {np.min(w):g}")
    root = u * np.sqrt(np.clip(w, 0.0, None))
    z = rng.standard_normal((draws, len(pairs)))
    return z @ root.T


@dataclass(frozen=True)
class LimitSamples:
    """Draws from the eigenvalue weak limits: ordered per-cluster spectra
    (concatenated) and the scalar summed-deviation limit."""

    ordered_vectors: np.ndarray
    scalar_sums: np.ndarray
    scalar_variance: float


def gaussian_limit_sampler(
    model: KernelModel, info: IndexSetInfo, draws: int, seed
) -> LimitSamples:
    """Sample the limit laws of the scaled eigenvalue deviations.

    Per draw, each cluster j contributes the non-increasing spectrum of the
    symmetric Gaussian matrix theta_j * G(phi_k phi_l), k, l in the cluster;
    the scalar limit is the centered Gaussian of the summed inside functions.
    """
    rng = np.random.default_rng(seed)
    cluster_pos = info.cluster_positions()

    pairs: list[tuple[int, int]] = []
    where: dict[tuple[int, int], int] = {}
    for c in cluster_pos:
        for i, k in enumerate(c):
            for l in c[i:]:
                key = (int(k), int(l))
                if key not in where:
                    where[key] = len(pairs)
                    pairs.append(key)
    field_draws = bridge_samples(model, pairs, draws, rng)

    blocks = []
    for c, theta in zip(cluster_pos, info.thetas):
        m = len(c)
        mats = np.zeros((draws, m, m))
        for i, k in enumerate(c):
            for j, l in enumerate(c[i:], start=i):
                col = field_draws[:, where[(int(k), int(l))]]
                mats[:, i, j] = col
                mats[:, j, i] = col
        spectra = np.linalg.eigvalsh(theta * mats)[:, ::-1]
        blocks.append(spectra)
    ordered = np.concatenate(blocks, axis=1)

    x, w = gauss_legendre_01()
    p = model.phi(x)
    g = np.zeros(len(x))
    for c, theta in zip(cluster_pos, info.thetas):
        for k in c:
            g += theta * p[int(k)] ** 2
    variance = float((g**2) @ w - (g @ w) ** 2)
    scalar = rng.standard_normal(draws) * np.sqrt(max(variance, 0.0))
    return LimitSamples(ordered_vectors=ordered, scalar_sums=scalar, scalar_variance=variance)


def _opnorm_dev(model: KernelModel, moments: np.ndarray) -> float:
    """Operator norm of the empirical covariance deviation in eigenfunction
    coordinates, padded by the truncation tail mass when the kernel is not
    finite rank."""
    dev = psi_deviation_matrix(model, moments)
    value = float(np.max(np.abs(np.linalg.eigvalsh(dev))))
    return value if model.finite_rank else value + model.tail_mass


def _true_cluster_rank(model: KernelModel, j_set: tuple[int, ...]) -> int | None:
    """Rank of J among the exact-tie clusters of the reference spectrum, or None
    when J is not exactly one cluster."""
    lam = model.lambdas
    clusters: list[list[int]] = [[1]]
    for i in range(1, len(lam)):
        if abs(lam[i - 1] - lam[i]) <= 1e-12:
            clusters[-1].append(i + 1)
        else:
            clusters.append([i + 1])
    for rank, c in enumerate(clusters, start=1):
        if tuple(c) == j_set:
            return rank
    return None


def _calibrate_gap_tol(model: KernelModel, cfg: McConfig) -> float:
    """Default cluster-detection tolerance: three times the median eigenvalue
    jitter observed in a short warm-up batch at the configured sample size."""
    warm_seed = _derived_seed(cfg.seed, _WARMUP_STREAM)
    jitters = []
    for t in range(WARMUP_TRIALS):
        sample = SampleSet.draw(warm_seed, t, cfg.n)
        lam_hat = empirical_spectrum_psi(model, empirical_gram_moments(model, sample))
        jitters.append(float(np.max(np.abs(lam_hat - model.lambdas))))
    return 3.0 * float(np.median(jitters))


def run_eigenvalue_study(cfg: McConfig) -> McReport:
    """Coverage of the eigenvalue expansion bounds in both regimes, plus the
    data-driven index-set estimate when J is a single true cluster."""
    model = cfg.kernel
    info = model.index_info(cfg.j_set)
    consts = bernstein_constants(model)
    radius = bernstein_radius(consts, cfg.n, cfg.tau)
    sep_bound = separated_bound(info, radius)
    clu_bound = clustered_bound(info, radius)
    sep_gate = min(info.gamma_jj) / 4.0
    clu_gate = info.gamma_j / (4.0 * np.sqrt(info.k_clusters))

    target_rank = _true_cluster_rank(model, cfg.j_set)
    gap_tol = cfg.gap_tol
    if gap_tol is None and target_rank is not None:
        gap_tol = _calibrate_gap_tol(model, cfg)

    lam_ref = model.lambdas
    pos = info.positions()
    cluster_pos = info.cluster_positions()
    thetas = info.thetas

    def one_trial(t: int):
        sample = SampleSet.draw(cfg.seed, t, cfg.n)
        moments = empirical_gram_moments(model, sample)
        lam_hat = empirical_spectrum_psi(model, moments)
        opnorm = _opnorm_dev(model, moments)
        dev = moments - np.eye(model.truncation)

        actual = lam_hat[pos] - lam_ref[pos]
        predicted_sep = np.concatenate(
            [
                np.sort(np.linalg.eigvalsh(theta * dev[np.ix_(c, c)]))[::-1]
                for c, theta in zip(cluster_pos, thetas)
            ]
        )
        res_sep = float(np.linalg.norm(actual - predicted_sep))
        res_clu = abs(float(np.sum(actual)) - float(lam_ref[pos] @ np.diag(dev)[pos]))

        correct = None
        if target_rank is not None:
            estimate = estimate_index_set(lam_hat, target_rank, gap_tol)
            correct = estimate == cfg.j_set
        return (opnorm, res_sep, res_clu, correct, actual)

    results = _map_trials(one_trial, cfg.trials)

    rows: list[TrialRow] = []
    sep_ok_cov, clu_ok_cov = [], []
    sep_cov_correct, clu_cov_correct = [], []
    n_correct = 0
    scaled = np.empty((cfg.trials, len(pos)))
    for t, (opnorm, res_sep, res_clu, correct, actual) in enumerate(results):
        sep_ok = bool(opnorm < sep_gate)
        clu_ok = bool(opnorm < clu_gate)
        sep_covered = bool(res_sep <= sep_bound)
        clu_covered = bool(res_clu <= clu_bound)
        rows.append(TrialRow(t, cfg.n, sep_ok, res_sep, sep_bound, sep_covered, opnorm, "separated"))
        rows.append(TrialRow(t, cfg.n, clu_ok, res_clu, clu_bound, clu_covered, opnorm, "clustered"))
        if sep_ok:
            sep_ok_cov.append(sep_covered)
        if clu_ok:
            clu_ok_cov.append(clu_covered)
        if correct:
            n_correct += 1
            if sep_ok:
                sep_cov_correct.append(sep_covered)
            if clu_ok:
                clu_cov_correct.append(clu_covered)
        scaled[t] = actual * np.sqrt(cfg.n)

    def _rate(flags: list) -> float | None:
        return float(np.mean(flags)) if flags else None

    summary = {
        "radius": radius,
        "separated_bound": sep_bound,
        "clustered_bound": clu_bound,
        "coverage_separated": _rate(sep_ok_cov),
        "coverage_clustered": _rate(clu_ok_cov),
        "condition_rate_separated": float(np.mean([r.condition_ok for r in rows if r.regime == "separated"])),
        "condition_rate_clustered": float(np.mean([r.condition_ok for r in rows if r.regime == "clustered"])),
        "alpha_hat": (1.0 - n_correct / cfg.trials) if target_rank is not None else None,
        "gap_tol": gap_tol,
        "coverage_separated_given_correct": _rate(sep_cov_correct),
        "coverage_clustered_given_correct": _rate(clu_cov_correct),
        "scaled_deviation_sd": [float(s) for s in np.std(scaled, axis=0)],
        "scaled_sum_sd": float(np.std(np.sum(scaled, axis=1))),
    }
    return McReport("eigenvalue", cfg.describe(), tuple(rows), summary)


def run_opnorm_study(cfg: McConfig) -> McReport:
    """Empirical exceedance of the operator-norm deviation against the
    concentration radius and tail bound."""
    model = cfg.kernel
    consts = bernstein_constants(model)
    radius = bernstein_radius(consts, cfg.n, cfg.tau)
    threshold = float(np.sqrt(consts.sigma / cfg.n) + consts.r / (3.0 * cfg.n))
    t_grid = [1.5 * threshold, 2.5 * threshold, 3.5 * threshold]
    tails = [bernstein_tail(consts, cfg.n, t) for t in t_grid]

    def one_trial(t: int) -> float:
        sample = SampleSet.draw(cfg.seed, t, cfg.n)
        return _opnorm_dev(model, empirical_gram_moments(model, sample))

    devs = _map_trials(one_trial, cfg.trials)
    rows = tuple(
        TrialRow(t, cfg.n, True, dev, radius, bool(dev < radius), dev, "opnorm")
        for t, dev in enumerate(devs)
    )
    devs_arr = np.asarray(devs)
    summary = {
        "radius": radius,
        "exceedance_at_radius": float(np.mean(devs_arr >= radius)),
        "t_values": t_grid,
        "tail_bounds": tails,
        "exceedances_at_t": [float(np.mean(devs_arr >= t)) for t in t_grid],
        "median_dev": float(np.median(devs_arr)),
    }
    return McReport("opnorm", cfg.describe(), rows, summary)


def _limit_rng(cfg: McConfig):
    return np.random.SeedSequence([int(cfg.seed), _LIMIT_STREAM])


def run_projection_study(cfg: McConfig) -> McReport:
    """Sup residual of projected bilinear forms over the function class against
    the high-probability bound, plus the weak-limit comparison per pair."""
    if not cfg.f_class:
        raise ConfigInvalid("projection studies need a nonempty function class")
    model = cfg.kernel
    r = cfg.truncation
    info = model.index_info(cfg.j_set)
    consts = bernstein_constants(model)
    m_f = max(model.h_norm(f) for f in cfg.f_class)
    xi = bilinear_residual_bound(info, m_f, consts, cfg.n, cfg.tau)
    weights = influence_weights(model, info, r)
    coeffs = [np.pad(np.asarray(f, dtype=float), (0, r - len(f))) for f in cfg.f_class]
    pairs = [(i, j) for i in range(len(coeffs)) for j in range(len(coeffs))]
    pos = info.positions()
    gate = info.gamma_j / 4.0

    def one_trial(t: int):
        sample = SampleSet.draw(cfg.seed, t, cfg.n)
        moments = empirical_gram_moments(model, sample)
        opnorm = _opnorm_dev(model, moments)
        dev = moments[:r, :r] - np.eye(r)
        influence = weights * dev
        gsys = None if model.finite_rank else gram(model, sample)
        residuals = np.empty(len(pairs))
        scaled_devs = np.empty(len(pairs))
        for idx, (i, j) in enumerate(pairs):
            a, b = coeffs[i], coeffs[j]
            if model.finite_rank:
                empirical = bilinear_empirical_psi(model, moments, pos, a, b)
            else:
                empirical = bilinear_projection_dev(
                    model, sample, info, a, b, r, gsys=gsys
                ).empirical
            population = float(np.sum(a[pos] * b[pos]))
            predicted = float(a @ influence @ b)
            residuals[idx] = abs(empirical - population - predicted)
            scaled_devs[idx] = np.sqrt(cfg.n) * (empirical - population)
        return opnorm, float(np.max(residuals)), scaled_devs

    results = _map_trials(one_trial, cfg.trials)
    rows = []
    covered_ok = []
    scaled = np.empty((cfg.trials, len(pairs)))
    for t, (opnorm, sup_res, scaled_devs) in enumerate(results):
        cond = bool(opnorm < gate)
        cov = bool(sup_res <= xi)
        rows.append(TrialRow(t, cfg.n, cond, sup_res, xi, cov, opnorm, "projection"))
        if cond:
            covered_ok.append(cov)
        scaled[t] = scaled_devs

    # Limit law of each pair: combine the Gaussian field over index pairs with
    # the same four-case weights that define the influence operator.
    rng = np.random.default_rng(_limit_rng(cfg))
    idx_pairs = [(k, l) for k in range(r) for l in range(k, r) if weights[k, l] != 0.0]
    field = bridge_samples(model, idx_pairs, cfg.limit_draws, rng)
    ks = {}
    for idx, (i, j) in enumerate(pairs):
        a, b = coeffs[i], coeffs[j]
        combo = np.zeros(cfg.limit_draws)
        for col, (k, l) in enumerate(idx_pairs):
            c = a[k] * b[l] + (a[l] * b[k] if l != k else 0.0)
            if c != 0.0:
                combo += weights[k, l] * c * field[:, col]
        ks[f"pair_{i}_{j}"] = ks_distance(scaled[:, idx], combo)

    summary = {
        "xi": xi,
        "m_f": m_f,
        "coverage": float(np.mean(covered_ok)) if covered_ok else None,
        "median_sup_residual": float(np.median([r_.residual for r_ in rows])),
        "ks": ks,
    }
    return McReport("projection", cfg.describe(), tuple(rows), summary)


def run_limit_study(cfg: McConfig) -> McReport:
    """Empirical laws of the scaled eigenvalue deviations against their
    analytic Gaussian limits, compared by two-sample KS distance."""
    model = cfg.kernel
    info = model.index_info(cfg.j_set)
    pos = info.positions()
    lam_ref = model.lambdas

    def one_trial(t: int) -> np.ndarray:
        sample = SampleSet.draw(cfg.seed, t, cfg.n)
        lam_hat = empirical_spectrum_psi(model, empirical_gram_moments(model, sample))
        return np.sqrt(cfg.n) * (lam_hat[pos] - lam_ref[pos])

    scaled = np.stack(_map_trials(one_trial, cfg.trials))
    sums = np.sum(scaled, axis=1)
    limits = gaussian_limit_sampler(model, info, cfg.limit_draws, _limit_rng(cfg))

    ks_components = [
        ks_distance(scaled[:, i], limits.ordered_vectors[:, i]) for i in range(len(pos))
    ]
    summary = {
        "ks_sum": ks_distance(sums, limits.scalar_sums),
        "ks_components": ks_components,
        "scalar_variance": limits.scalar_variance,
        "scaled_sum_sd": float(np.std(sums)),
    }
    rows = tuple(
        TrialRow(t, cfg.n, True, float(sums[t]), float("nan"), True, float("nan"), "limit")
        for t in range(cfg.trials)
    )
    return McReport("limit", cfg.describe(), rows, summary)
