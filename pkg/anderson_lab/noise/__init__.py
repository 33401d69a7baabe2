"""Mollifier kernels and lattice samples of the Gaussian field ξ_ε."""
from .field import (
    FieldSample,
    MaxFieldStatistic,
    max_field_statistic,
    read_field_dump,
    rescaling_view,
    sample_field,
    sample_replicas,
    write_field_dump,
)
from .kernels import (
    CovarianceSpec,
    DiscreteKernel,
    KernelFamily,
    KernelMoments,
    build_kernel,
    covariance_form,
    kernel_moments,
    mesh_diagnostic,
)

__all__ = [
    "CovarianceSpec",
    "DiscreteKernel",
    "FieldSample",
    "KernelFamily",
    "KernelMoments",
    "MaxFieldStatistic",
    "build_kernel",
    "covariance_form",
    "kernel_moments",
    "max_field_statistic",
    "mesh_diagnostic",
    "read_field_dump",
    "rescaling_view",
    "sample_field",
    "sample_replicas",
    "write_field_dump",
]
