"""Statistics of the source -> IRS -> destination composite channel.

Each hop combines alpha-mu small-scale fading with a bounded pointing
error gain; the IRS aggregate gain B (sum over elements of the per-hop
products under perfect co-phasing) is approximated by a two-moment Gamma
fit with scale ``lam`` and shape ``tau + 1``, which turns the end-to-end
SNR CDF into a single regularised incomplete gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import ConsistencyError, DomainError
from .specfun import reg_lower_gamma

__all__ = [
    "SPEED_OF_LIGHT",
    "FadingParams",
    "PointingParams",
    "HopParams",
    "AtmosphereConfig",
    "LseParams",
    "LinkBudget",
    "path_loss_coeff",
    "absorption_coeff",
    "hop_moment",
    "product_stats",
    "lse_params",
    "effective_snr_scale",
    "e2e_snr_cdf",
]

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class FadingParams:
    """alpha-mu small-scale fading: nonlinearity, cluster count, alpha-root mean."""

    alpha: float
    mu: float
    omega: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "mu", "omega"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"FadingParams.{name} must be > 0")


@dataclass(frozen=True)
class PointingParams:
    """Beam misalignment gain on (0, s0] with concentration phi."""

    phi: float
    s0: float = 1.0

    def __post_init__(self):
        if not self.phi > 0.0:
            raise DomainError("PointingParams.phi must be > 0")
        if not 0.0 < self.s0 <= 1.0:
            raise DomainError("PointingParams.s0 must be in (0, 1]")


@dataclass(frozen=True)
class HopParams:
    """One hop of the reflected link: fading, pointing, geometry and gains."""

    fading: FadingParams
    pointing: PointingParams
    distance_m: float
    tx_gain_linear: float = 1.0
    rx_gain_linear: float = 1.0

    def __post_init__(self):
        if not self.distance_m > 0.0:
            raise DomainError("HopParams.distance_m must be > 0")
        if self.tx_gain_linear < 1.0 or self.rx_gain_linear < 1.0:
            raise DomainError("HopParams gains must be >= 1 (IRS side uses exactly 1)")


@dataclass(frozen=True)
class AtmosphereConfig:
    """Environmental state plus the pluggable molecular absorption coefficient.

    ``k_alpha_per_m`` is an input, not derived from (T, P, humidity): the
    default 0.0033/m is a representative 275-GHz value, not tied to any
    particular absorption model.  ``absorption_length_m`` multiplies it;
    use 1.0 to read k_alpha as a total (dimensionless) exponent.
    """

    temperature_k: float = 296.0
    pressure_hpa: float = 1013.25
    rel_humidity_pct: float = 50.0
    k_alpha_per_m: float = 0.0033
    absorption_length_m: float = 30.0

    def __post_init__(self):
        if self.k_alpha_per_m < 0.0 or self.absorption_length_m < 0.0:
            raise DomainError("AtmosphereConfig absorption fields must be >= 0")

    def with_length(self, length_m: float) -> "AtmosphereConfig":
        return replace(self, absorption_length_m=length_m)


@dataclass(frozen=True)
class LseParams:
    """Gamma fit of the composite IRS gain: scale lam, shape tau + 1."""

    lam: float
    tau: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise DomainError("LseParams.lam must be > 0")
        if not self.tau > -1.0:
            raise DomainError("LseParams.tau must be > -1")


@dataclass(frozen=True)
class LinkBudget:
    """Carrier, transmit power, noise variance and IRS element count."""

    freq_hz: float
    tx_power_w: float
    noise_var_w: float
    n_elements: int

    def __post_init__(self):
        if min(self.freq_hz, self.tx_power_w, self.noise_var_w) <= 0.0:
            raise DomainError("LinkBudget fields must be > 0")
        if self.n_elements < 1:
            raise DomainError("LinkBudget.n_elements must be >= 1")

    @property
    def mean_tx_snr(self) -> float:
        return self.tx_power_w / self.noise_var_w


def path_loss_coeff(hop: HopParams, freq_hz: float, eta: float = 2.0) -> float:
    """Deterministic spreading-loss amplitude of one hop.

    c * sqrt(Gt*Gr) / (4 pi f) * d^(-eta/2); eta = 2 is free space.
    """
    if freq_hz <= 0.0:
        raise DomainError("path_loss_coeff: need freq_hz > 0")
    amp = SPEED_OF_LIGHT * math.sqrt(hop.tx_gain_linear * hop.rx_gain_linear)
    return amp / (4.0 * math.pi * freq_hz) * hop.distance_m ** (-0.5 * eta)


def absorption_coeff(atm: AtmosphereConfig) -> float:
    """Molecular absorption amplitude h_a = exp(-0.5 k_alpha * L)."""
    return math.exp(-0.5 * atm.k_alpha_per_m * atm.absorption_length_m)


def hop_moment(hop: HopParams, n: int) -> float:
    """n-th raw moment of one hop's fading x pointing envelope."""
    if n < 1:
        raise DomainError("hop_moment: need n >= 1")
    f, p = hop.fading, hop.pointing
    lg = math.lgamma
    log_m = (
        math.log(p.phi)
        + n * math.log(f.omega)
        + n * math.log(p.s0)
        - (n / f.alpha) * math.log(f.mu)
        - math.log(p.phi + n)
        + lg(n / f.alpha + f.mu)
        - lg(f.mu)
    )
    return math.exp(log_m)


def product_stats(hop1: HopParams, hop2: HopParams) -> tuple[float, float]:
    """Mean and variance of the two-hop envelope product for one element."""
    m1, m2 = hop_moment(hop1, 1), hop_moment(hop2, 1)
    v1 = hop_moment(hop1, 2) - m1 * m1
    v2 = hop_moment(hop2, 2) - m2 * m2
    if v1 < -1e-15 or v2 < -1e-15:
        raise ConsistencyError(f"negative hop variance ({v1}, {v2})")
    v1, v2 = max(v1, 0.0), max(v2, 0.0)
    mean = m1 * m2
    var = v1 * v2 + v1 * m2 * m2 + m1 * m1 * v2
    return mean, var


def lse_params(hop1: HopParams, hop2: HopParams, n_elements: int) -> LseParams:
    """Two-moment Gamma fit of B = sum over i.i.d. elements of the products."""
    if n_elements < 1:
        raise DomainError("lse_params: need n_elements >= 1")
    mean, var = product_stats(hop1, hop2)
    mu_b = n_elements * mean
    var_b = n_elements * var
    if var_b <= 0.0:
        raise DomainError("lse_params: degenerate (zero-variance) composite gain")
    return LseParams(lam=var_b / mu_b, tau=mu_b * mu_b / var_b - 1.0)


def effective_snr_scale(
    budget: LinkBudget,
    hop1: HopParams,
    hop2: HopParams,
    atm: AtmosphereConfig,
    eta: float = 2.0,
) -> float:
    """Deterministic SNR scale lambda0 with lambda = lambda0 * B**2.

    Combines the mean transmit SNR with the squared deterministic
    amplitude (absorption times both hops' path loss), so that
    F_lambda(x) = F_B(sqrt(x / lambda0)).
    """
    det = (
        absorption_coeff(atm)
        * path_loss_coeff(hop1, budget.freq_hz, eta)
        * path_loss_coeff(hop2, budget.freq_hz, eta)
    )
    return budget.mean_tx_snr * det * det


def e2e_snr_cdf(lse: LseParams, lambda0: float, lam: float) -> float:
    """CDF of the end-to-end SNR under the Gamma composite-gain fit."""
    if lam < 0.0:
        raise DomainError("e2e_snr_cdf: need lam >= 0")
    if lambda0 <= 0.0:
        raise DomainError("e2e_snr_cdf: need lambda0 > 0")
    return reg_lower_gamma(lse.tau + 1.0, math.sqrt(lam / lambda0) / lse.lam)
