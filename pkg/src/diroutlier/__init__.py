"""
Directional outlyingness (DO) for univariate, multivariate, functional and
image data.

DO measures the distance of a point to the median relative to a robust scale
computed separately on each side of the median, so skewed data do not produce
spurious outliers in their long tail.
"""

__version__ = "0.1.0"

from .exceptions import ConfigError, DegenerateDataError, DirOutError, InputDataError
from .scales import (
    RhoConfig,
    ScalePair,
    alpha_constant,
    depth_transform,
    do_sample,
    do_univariate,
    half_scales,
    mad,
    median,
    rho_c,
    sdo_sample,
    sdo_univariate,
)
from .multivariate import (
    DirectionSet,
    cdo,
    do_grid,
    do_multivariate,
    generate_directions,
    sdo_multivariate,
)
from .functional import (
    DOMap,
    FunctionalDataset,
    FunctionalSummary,
    cfo,
    derivative_augment_1d,
    fdo,
    flag_outliers,
    fom,
    gradient_augment_2d,
    pointwise_do_map,
    summarize,
    vdo,
)

__all__ = [
    "ConfigError",
    "DegenerateDataError",
    "DirOutError",
    "InputDataError",
    "RhoConfig",
    "ScalePair",
    "alpha_constant",
    "depth_transform",
    "do_sample",
    "do_univariate",
    "half_scales",
    "mad",
    "median",
    "rho_c",
    "sdo_sample",
    "sdo_univariate",
    "DirectionSet",
    "cdo",
    "do_grid",
    "do_multivariate",
    "generate_directions",
    "sdo_multivariate",
    "DOMap",
    "FunctionalDataset",
    "FunctionalSummary",
    "cfo",
    "derivative_augment_1d",
    "fdo",
    "flag_outliers",
    "fom",
    "gradient_augment_2d",
    "pointwise_do_map",
    "summarize",
    "vdo",
]
