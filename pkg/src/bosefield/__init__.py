"""Boson point fields in anisotropic boxes: kernels, phases, samplers and scaling limits."""

from .geometry import (
    BC,
    BeamPoly,
    BoxGeometry,
    EmptyKernelError,
    Explicit,
    Mode,
    RangeError,
    SlabExp,
    StabilityError,
    ThermoParams,
    TruncatedKernel,
    box_from_profile,
    build_kernel,
    kernel_eval,
    limit_kernel,
)
from .kac import kac_kernel, kac_laplace
from .sampler import (
    PointConfiguration,
    Window,
    laplace_closed,
    sample_configuration,
    sample_limit_process,
)
from .scaled import LimitRFSpec, ScalingTransform, apply_scaling, limit_gf, r_kernel
from .thermo import Phase, PhaseReport, classify_phase, rho_critical

__version__ = "0.1.0"

__all__ = [
    "BC", "BeamPoly", "BoxGeometry", "EmptyKernelError", "Explicit", "Mode", "RangeError",
    "SlabExp", "StabilityError", "ThermoParams", "TruncatedKernel", "box_from_profile",
    "build_kernel", "kernel_eval", "limit_kernel", "kac_kernel", "kac_laplace",
    "PointConfiguration", "Window", "laplace_closed", "sample_configuration",
    "sample_limit_process", "LimitRFSpec", "ScalingTransform", "apply_scaling", "limit_gf",
    "r_kernel", "Phase", "PhaseReport", "classify_phase", "rho_critical",
]
