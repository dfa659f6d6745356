import numpy as np
import pytest

from conftest import rand_symmetric
from spectra.errors import (
    EmptyIndexSet,
    IndexOutOfRange,
    OverlappingDisks,
    PoleOnContour,
    ZeroGap,
)
from spectra.linalg import SymmetricMatrix, eigh, fro_norm
from spectra.spectral import (
    HoloFunction,
    build_index_set,
    cauchy_integral,
    compress,
    compression_gradient,
    contour_compress,
    eigenprojection,
)

DIAG_3221 = SymmetricMatrix(np.diag([3.0, 2.0, 2.0, 1.0]))


def test_index_set_cluster_structure():
    info = build_index_set(eigh(DIAG_3221), [2, 3])
    assert info.k_clusters == 1
    assert info.thetas == (2.0,)
    assert info.gamma_j == 1.0
    assert info.gamma_jj == (1.0,)
    assert info.clusters == ((2, 3),)


def test_index_set_singleton():
    info = build_index_set(eigh(DIAG_3221), [1])
    assert info.thetas == (3.0,)
    assert info.gamma_j == 1.0


def test_index_set_zero_gap():
    with pytest.raises(ZeroGap):
        build_index_set(eigh(SymmetricMatrix(np.diag([2.0, 2.0, 2.0]))), [1, 2])


def test_index_set_validation():
    spec = eigh(DIAG_3221)
    with pytest.raises(EmptyIndexSet):
        build_index_set(spec, [])
    with pytest.raises(IndexOutOfRange):
        build_index_set(spec, [0])
    with pytest.raises(IndexOutOfRange):
        build_index_set(spec, [5])
    with pytest.raises(IndexOutOfRange):
        build_index_set(spec, [2, 2])


def test_full_index_set_has_infinite_gap():
    info = build_index_set(eigh(DIAG_3221), [1, 2, 3, 4])
    assert np.isinf(info.gamma_j)
    assert info.k_clusters == 3


def test_gap_ordering_when_minimizer_is_outside():
    # The outer gap never exceeds a cluster gap whose minimizing eigenvalue
    # lies outside J; with other clusters inside J the ordering can reverse.
    rng = np.random.default_rng(77)
    for _ in range(50):
        spec = eigh(rand_symmetric(rng, 7))
        lam = spec.eigenvalues
        info = build_index_set(spec, [2, 3, 4])
        outside = [l - 1 for l in range(1, 8) if l not in info.j_set]
        for theta, gamma_jj in zip(info.thetas, info.gamma_jj):
            if min(abs(theta - lam[o]) for o in outside) == gamma_jj:
                assert info.gamma_j <= gamma_jj + 1e-12


def test_index_set_partition_invariants():
    rng = np.random.default_rng(83)
    for _ in range(30):
        dim = int(rng.integers(3, 9))
        spec = eigh(rand_symmetric(rng, dim))
        size = int(rng.integers(1, dim))
        j = sorted(rng.choice(np.arange(1, dim + 1), size=size, replace=False).tolist())
        info = build_index_set(spec, j)
        assert np.all(np.diff(info.thetas) < 0.0)
        flat = [k for c in info.clusters for k in c]
        assert flat == list(info.j_set)
        assert all(len(c) > 0 for c in info.clusters)
        assert info.gamma_j > 0.0
        assert all(g > 0.0 for g in info.gamma_jj)


def test_eigenprojection_examples():
    spec = eigh(DIAG_3221)
    p = eigenprojection(spec, build_index_set(spec, [2, 3]))
    assert np.allclose(p.entries, np.diag([0.0, 1.0, 1.0, 0.0]), atol=1e-14)
    full = eigenprojection(spec, build_index_set(spec, [1, 2, 3, 4]))
    assert np.allclose(full.entries, np.eye(4), atol=1e-14)


def test_eigenprojection_rank_one():
    rng = np.random.default_rng(11)
    a = rand_symmetric(rng, 4)
    spec = eigh(a)
    p = eigenprojection(spec, build_index_set(spec, [1]))
    psi = spec.eigenvectors[:, 0]
    assert np.allclose(p.entries, np.outer(psi, psi), atol=1e-12)


def test_projector_laws():
    rng = np.random.default_rng(21)
    for _ in range(25):
        a = rand_symmetric(rng, 6)
        spec = eigh(a)
        info = build_index_set(spec, [2, 3])
        p = eigenprojection(spec, info).entries
        assert np.max(np.abs(p - p.T)) == 0.0
        assert np.linalg.norm(p @ p - p) <= 1e-10
        assert np.trace(p) == pytest.approx(2.0, abs=1e-10)


def test_compress_one_equals_projection():
    rng = np.random.default_rng(4)
    a = rand_symmetric(rng, 5)
    spec = eigh(a)
    info = build_index_set(spec, [1, 2])
    assert np.array_equal(
        compress(spec, HoloFunction.one(), info).entries,
        eigenprojection(spec, info).entries,
    )


def test_compress_identity_diagonal():
    spec = eigh(DIAG_3221)
    info = build_index_set(spec, [2, 3])
    c = compress(spec, HoloFunction.identity(), info)
    assert np.allclose(c.entries, np.diag([0.0, 2.0, 2.0, 0.0]), atol=1e-14)


def test_compress_power_two_brute_force():
    # Oracle: A^2 P_J computed by plain matrix products.
    rng = np.random.default_rng(11)
    a = rand_symmetric(rng, 4)
    spec = eigh(a)
    info = build_index_set(spec, [1, 2])
    c = compress(spec, HoloFunction.power(2), info)
    oracle = a.entries @ a.entries @ eigenprojection(spec, info).entries
    assert np.max(np.abs(c.entries - oracle)) <= 1e-10


def test_gradient_zero_perturbation():
    spec = eigh(DIAG_3221)
    info = build_index_set(spec, [2, 3])
    g = compression_gradient(spec, DIAG_3221, HoloFunction.exp(), info)
    for part in (g.part1, g.part2, g.part3, g.total):
        assert np.max(np.abs(part.entries)) <= 1e-14


def test_gradient_cross_term_hand_value():
    # Bump between positions 1 (outside, eigenvalue 3) and 2 (inside, eigenvalue 2):
    # the cross entry is 0.1 / (2 - 3) = -0.1.
    spec = eigh(DIAG_3221)
    info = build_index_set(spec, [2, 3])
    delta = np.zeros((4, 4))
    delta[0, 1] = delta[1, 0] = 0.1
    g = compression_gradient(spec, SymmetricMatrix(DIAG_3221.entries + delta), HoloFunction.one(), info)
    expected = np.zeros((4, 4))
    expected[0, 1] = expected[1, 0] = -0.1
    assert np.max(np.abs(g.part3.entries - expected)) <= 1e-12
    assert np.max(np.abs(g.part1.entries)) <= 1e-14
    assert np.max(np.abs(g.part2.entries)) <= 1e-14


def test_gradient_identity_inside_block():
    spec = eigh(DIAG_3221)
    info = build_index_set(spec, [2, 3])
    delta = np.zeros((4, 4))
    delta[1, 2] = delta[2, 1] = 0.05
    g = compression_gradient(spec, SymmetricMatrix(DIAG_3221.entries + delta), HoloFunction.identity(), info)
    assert np.max(np.abs(g.total.entries - delta)) <= 1e-12


def test_gradient_identity_equals_inside_compression():
    # part1 + part2 must reproduce P_J Delta P_J for the identity function.
    rng = np.random.default_rng(31)
    for _ in range(10):
        a = rand_symmetric(rng, 5)
        spec = eigh(a)
        info = build_index_set(spec, [2, 3])
        delta = rand_symmetric(rng, 5, scale=0.1)
        g = compression_gradient(spec, SymmetricMatrix(a.entries + delta.entries), HoloFunction.identity(), info)
        p = eigenprojection(spec, info).entries
        assert np.max(np.abs(g.part1.entries + g.part2.entries - p @ delta.entries @ p)) <= 1e-12


def test_gradient_linearity():
    rng = np.random.default_rng(41)
    a = rand_symmetric(rng, 5)
    spec = eigh(a)
    info = build_index_set(spec, [1, 2])
    delta = rand_symmetric(rng, 5, scale=0.2)
    g1 = compression_gradient(spec, SymmetricMatrix(a.entries + delta.entries), HoloFunction.exp(), info)
    g3 = compression_gradient(spec, SymmetricMatrix(a.entries + 3.0 * delta.entries), HoloFunction.exp(), info)
    assert np.max(np.abs(g3.total.entries - 3.0 * g1.total.entries)) <= 1e-12


def test_contour_matches_diagonal_cases():
    spec = eigh(DIAG_3221)
    info = build_index_set(spec, [2, 3])
    p = contour_compress(spec, HoloFunction.one(), info, 256)
    assert np.max(np.abs(p.entries - np.diag([0.0, 1.0, 1.0, 0.0]))) <= 1e-10
    c = contour_compress(spec, HoloFunction.identity(), info, 256)
    assert np.max(np.abs(c.entries - np.diag([0.0, 2.0, 2.0, 0.0]))) <= 1e-10


def test_contour_matches_compress_registry():
    rng = np.random.default_rng(11)
    a = rand_symmetric(rng, 4)
    spec = eigh(a)
    for j in ([1], [1, 2]):
        info = build_index_set(spec, j)
        for f in HoloFunction.registry():
            err = fro_norm(contour_compress(spec, f, info, 512) - compress(spec, f, info))
            assert err <= 1e-8, (j, f.tag, err)


def test_contour_node_convergence():
    rng = np.random.default_rng(13)
    a = rand_symmetric(rng, 4)
    spec = eigh(a)
    info = build_index_set(spec, [1])
    exact = compress(spec, HoloFunction.exp(), info)
    coarse = fro_norm(contour_compress(spec, HoloFunction.exp(), info, 32) - exact)
    fine = fro_norm(contour_compress(spec, HoloFunction.exp(), info, 128) - exact)
    assert fine < coarse * 1e-2 or fine <= 1e-12


def test_contour_overlapping_disks():
    spec = eigh(SymmetricMatrix(np.diag([3.0, 2.1, 2.0, 1.0])))
    info = build_index_set(spec, [2, 3])
    assert info.k_clusters == 2
    with pytest.raises(OverlappingDisks):
        contour_compress(spec, HoloFunction.one(), info, 64)


def test_contour_rejects_tiny_node_count():
    spec = eigh(DIAG_3221)
    info = build_index_set(spec, [1])
    with pytest.raises(ValueError):
        contour_compress(spec, HoloFunction.one(), info, 16)


def test_cauchy_residue_examples():
    f2 = HoloFunction.power(2)
    assert abs(cauchy_integral(0.0, 0.0, f2, 0.0, 1.0, 256)) <= 1e-8
    one = cauchy_integral(0.2, 0.5, HoloFunction.identity(), 0.0, 1.0, 256)
    assert abs(one - 1.0) <= 1e-8
    third = cauchy_integral(0.2, 3.0, HoloFunction.one(), 0.0, 1.0, 256)
    assert abs(third - (-0.35714285714285715)) <= 1e-8


def test_cauchy_residue_table_grid():
    f = HoloFunction.exp()
    cases = [
        (0.3, 0.3, np.exp(0.3)),                          # equal, inside: derivative
        (0.3, -0.4, (np.exp(-0.4) - np.exp(0.3)) / (-0.7)),  # both inside: divided difference
        (0.3, 2.5, np.exp(0.3) / (0.3 - 2.5)),            # a inside only
        (2.5, 0.3, np.exp(0.3) / (0.3 - 2.5)),            # b inside only
        (2.5, -3.0, 0.0),                                 # both outside
    ]
    for a, b, expected in cases:
        value = cauchy_integral(a, b, f, 0.0, 1.0, 512)
        assert abs(value - expected) <= 1e-8, (a, b)


def test_cauchy_pole_on_contour():
    with pytest.raises(PoleOnContour):
        cauchy_integral(1.0, 0.3, HoloFunction.one(), 0.0, 1.0, 128)
    with pytest.raises(ValueError):
        cauchy_integral(0.2, 0.3, HoloFunction.one(), 0.0, 1.0, 32)


def test_holo_function_values():
    z = np.array([0.5, 2.0])
    assert np.allclose(HoloFunction.power(3)(z), z**3)
    assert np.allclose(HoloFunction.power(3).deriv(z), 3 * z**2)
    poly = HoloFunction.polynomial([1.0, 0.0, 2.0])
    assert np.allclose(poly(z), 1.0 + 2.0 * z**2)
    assert np.allclose(poly.deriv(z), 4.0 * z)
    assert np.allclose(HoloFunction.one()(z), [1.0, 1.0])
    assert np.allclose(HoloFunction.one().deriv(z), [0.0, 0.0])
    with pytest.raises(ValueError):
        HoloFunction.power(-1)
