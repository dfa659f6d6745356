"""Spectral perturbation toolkit: expansions for symmetric matrices and kernel
Gram matrices at desk scale, with concentration bounds, weak-limit samplers,
and reproducible Monte Carlo studies."""

from . import errors
from .expansions import (
    ExpansionReport,
    OverlapMatrix,
    compression_leading_term,
    eigenvector_overlap,
    eigval_expansion_clustered,
    eigval_expansion_separated,
    fixture_f1,
    projection_expansion,
    projection_leading_term,
)
from .kernels import (
    BernsteinConstants,
    GramSystem,
    KernelModel,
    SampleSet,
    bernstein_constants,
    bernstein_radius,
    bernstein_tail,
    bilinear_projection_dev,
    bilinear_residual_bound,
    empirical_deviation,
    gram,
    influence_matrix,
    kernel_brownian,
    kernel_finite_rank,
    nystrom,
)
from .linalg import (
    Spectrum,
    SymmetricMatrix,
    eigh,
    fro_norm,
    op_norm,
    spectral_distance,
)
from .montecarlo import (
    McConfig,
    McReport,
    estimate_index_set,
    gaussian_limit_sampler,
    ks_distance,
    run_eigenvalue_study,
    run_limit_study,
    run_opnorm_study,
    run_projection_study,
)
from .spectral import (
    HoloFunction,
    IndexSetInfo,
    build_index_set,
    cauchy_integral,
    compress,
    compression_gradient,
    contour_compress,
    eigenprojection,
)

__version__ = "0.1.0"
