"""Sums of homogeneous fractional Sobolev spaces: functionals, decompositions and checks."""

from .decomposition import (
    Decomposition,
    PartitionMask,
    ball_extension,
    cutoff,
    decompose_ball,
    decompose_whole_space,
    energy_split,
    partition_argmin,
    truncate_uR,
)
from .envelope import MinPowerIntegrand, min_power_integral
from .extension import (
    Mollifier,
    XiKernel,
    extend_half_space,
    gradient_field,
    make_bump_mollifier,
    weighted_min_energy,
)
from .functionals import (
    CheckResult,
    DiscreteMeasure,
    PiecewiseConstant,
    gagliardo_seminorm,
    hardy_check,
    inf_convolution_phi,
    integrability_bound,
    jensen_min,
    max_functional,
    min_functional,
    sum_estimate_check,
)
from .grid import (
    Domain,
    ExponentFamily,
    Grid,
    HalfSpaceField,
    SampledFunction,
    TGrid,
    cell_quadrature_weights,
    interpolate,
)
from .reconstruction import (
    ReconstructionKernel,
    canonical_kernel,
    reconstruct,
    scale_identity_check,
    trace_estimate_check,
    validate_kernel,
)
from .verify import VerificationReport, blowup_scan, run_corpus

__version__ = "0.1.0"
