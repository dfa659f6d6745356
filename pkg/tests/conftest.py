"""Shared generators for seeded random test inputs."""

import numpy as np
import pytest

from spectra.linalg import SymmetricMatrix


def rand_symmetric(rng, dim: int, scale: float = 1.0) -> SymmetricMatrix:
    a = rng.standard_normal((dim, dim))
    return SymmetricMatrix(scale * (a + a.T) / 2.0)


def rand_orthogonal(rng, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def rand_nonneg_spectrum_matrix(rng, dim: int, top: float = 3.0) -> SymmetricMatrix:
    """Random symmetric matrix with a non-negative, well-spread spectrum."""
    q = rand_orthogonal(rng, dim)
    lam = np.sort(rng.uniform(0.0, top, size=dim))[::-1]
    return SymmetricMatrix((q * lam) @ q.T)


def scaled_perturbation(rng, dim: int, target_opnorm: float) -> SymmetricMatrix:
    delta = rand_symmetric(rng, dim)
    current = np.max(np.abs(np.linalg.eigvalsh(delta.entries)))
    return SymmetricMatrix(delta.entries * (target_opnorm / current))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
