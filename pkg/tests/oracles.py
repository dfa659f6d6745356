"""Independent oracles used to pin expected values in the tests.

Nothing here calls into the package's eigensolver paths: the 2x2 and 3x3
eigenvalue formulas are closed-form, and the quadrature helper is plain
Gauss-Legendre built from numpy's node generator.
"""

import numpy as np


def eig2x2(m) -> np.ndarray:
    """Eigenvalues of a symmetric 2x2 matrix, non-increasing, by the quadratic formula."""
    a, b, d = m[0][0], m[0][1], m[1][1]
    mean = (a + d) / 2.0
    disc = np.sqrt(((a - d) / 2.0) ** 2 + b * b)
    return np.array([mean + disc, mean - disc])


def eig3x3(m) -> np.ndarray:
    """Eigenvalues of a symmetric 3x3 matrix, non-increasing.

    Trigonometric solution of the characteristic cubic: shift by the mean,
    scale to unit sphere radius, and read the three cosines.
    """
    m = np.asarray(m, dtype=float)
    p1 = m[0, 1] ** 2 + m[0, 2] ** 2 + m[1, 2] ** 2
    if p1 == 0.0:
        return np.sort(np.diag(m))[::-1]
    q = np.trace(m) / 3.0
    p2 = np.sum((np.diag(m) - q) ** 2) + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    b = (m - q * np.eye(3)) / p
    r = np.clip(np.linalg.det(b) / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    lam1 = q + 2.0 * p * np.cos(phi)
    lam3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    lam2 = 3.0 * q - lam1 - lam3
    return np.array([lam1, lam2, lam3])


def gl01(nodes: int = 2048):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return (x + 1.0) / 2.0, w / 2.0


def integrate01(f, nodes: int = 2048) -> float:
    x, w = gl01(nodes)
    return float(f(x) @ w)


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)[0])
