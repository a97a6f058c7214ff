"""Self-contained special functions: gamma family, hypergeometrics, Fox-H."""

from .foxh import (
    BivariateFoxHSpec,
    BivariateGammaTerm,
    ContourConfig,
    FoxHSpec,
    GammaTerm,
    fox_h_bivariate,
    fox_h_bivariate_many,
    fox_h_univariate,
    fox_h_univariate_many,
    meijer_g,
)
from .gammafn import (
    gamma_real,
    log_gamma_complex,
    log_gamma_real,
    reg_lower_gamma,
    reg_upper_gamma,
    upper_gamma,
)
from .hyper import hyp1f1, hyp1f1_scaled_1_32, hyp2f1

__all__ = [
    "BivariateFoxHSpec",
    "BivariateGammaTerm",
    "ContourConfig",
    "FoxHSpec",
    "GammaTerm",
    "fox_h_bivariate",
    "fox_h_bivariate_many",
    "fox_h_univariate",
    "fox_h_univariate_many",
    "meijer_g",
    "gamma_real",
    "log_gamma_complex",
    "log_gamma_real",
    "reg_lower_gamma",
    "reg_upper_gamma",
    "upper_gamma",
    "hyp1f1",
    "hyp1f1_scaled_1_32",
    "hyp2f1",
]
