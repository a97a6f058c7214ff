"""Performance modeling of IRS-assisted THz links over alpha-mu fading
with pointing errors: exact closed forms on self-implemented special
functions, Monte Carlo simulation with realistic phase-error models, and
MLP surrogates for fast prediction.
"""

__version__ = "0.1.0"

from .channel import (
    AtmosphereConfig,
    FadingParams,
    HopParams,
    LinkBudget,
    LseParams,
    PointingParams,
    e2e_snr_cdf,
    effective_snr_scale,
    lse_params,
)
from .metrics import (
    AsymptoticResult,
    HqamSpec,
    RqamSpec,
    acc,
    aser_hqam,
    aser_rqam,
    aser_rqam_asymptotic,
    coding_gain_op,
    diversity_order,
    empirical_diversity_order,
    outage_asymptotic,
    outage_probability,
)
from .montecarlo import (
    McConfig,
    McEstimate,
    PhaseModel,
    simulate_capacity,
    simulate_outage,
    simulate_ser_hqam,
    simulate_ser_rqam,
)

__all__ = [
    "__version__",
    "AtmosphereConfig",
    "FadingParams",
    "HopParams",
    "LinkBudget",
    "LseParams",
    "PointingParams",
    "e2e_snr_cdf",
    "effective_snr_scale",
    "lse_params",
    "AsymptoticResult",
    "HqamSpec",
    "RqamSpec",
    "acc",
    "aser_hqam",
    "aser_rqam",
    "aser_rqam_asymptotic",
    "coding_gain_op",
    "diversity_order",
    "empirical_diversity_order",
    "outage_asymptotic",
    "outage_probability",
    "McConfig",
    "McEstimate",
    "PhaseModel",
    "simulate_capacity",
    "simulate_outage",
    "simulate_ser_hqam",
    "simulate_ser_rqam",
]
