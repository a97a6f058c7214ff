"""Fox H-function evaluation by Mellin-Barnes contour quadrature.

The kernel convention is the standard one

    H(z) = (1/2*pi*i) int  prod_{j<=m} G(b_j + B_j s) prod_{i<=n} G(1 - a_i - A_i s)
                           ---------------------------------------------------------  z^{-s} ds
                           prod_{i>n} G(a_i + A_i s)  prod_{j>m} G(1 - b_j - B_j s)

along a vertical line separating the two pole families; it reproduces,
term for term, the explicit contour integrands that the closed-form
metrics in :mod:`irsthz.metrics` are assembled from.  The bivariate
variant nests two such contours and couples them through joint gamma
terms G(1 - a - a1*r - a2*s).

Quadrature is uniform trapezoid on the truncated vertical line: the
integrand decays exponentially (gamma-modulus decay), so trapezoid
converges geometrically in both the node spacing and the truncation.
Refinement doubles the truncation when the edge magnitude is visible and
halves the spacing otherwise, until two successive estimates agree to
``target_rel_tol``.  Conjugate symmetry in Im(s) is exploited, which also
forces an exactly real result; the zero-row imaginary part is kept as a
roundoff residue diagnostic for the bivariate case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DomainError, NumericError
from .gammafn import log_gamma_array

__all__ = [
    "GammaTerm",
    "FoxHSpec",
    "BivariateGammaTerm",
    "BivariateFoxHSpec",
    "ContourConfig",
    "fox_h_univariate",
    "fox_h_univariate_many",
    "fox_h_bivariate",
    "fox_h_bivariate_many",
    "meijer_g",
]

_MAX_EXP = 690.0  # exp() overflow guard
_MAX_GRID = 1 << 26


@dataclass(frozen=True)
class GammaTerm:
    """One (shift, scale) pair of a Fox-H definition."""

    shift: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0.0:
            raise DomainError(f"GammaTerm scale must be > 0, got {self.scale}")


@dataclass(frozen=True)
class FoxHSpec:
    """Parameter set of a univariate Fox-H instance.

    ``upper`` holds the p pairs (a_i, A_i), ``lower`` the q pairs
    (b_j, B_j); the first n upper and first m lower terms are the
    numerator groups.
    """

    m: int
    n: int
    upper: tuple[GammaTerm, ...]
    lower: tuple[GammaTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(self.upper))
        object.__setattr__(self, "lower", tuple(self.lower))
        if not (0 <= self.n <= self.p and 0 <= self.m <= self.q):
            raise DomainError(
                f"FoxHSpec needs 0 <= n <= p and 0 <= m <= q, got "
                f"m={self.m}, n={self.n}, p={self.p}, q={self.q}"
            )
        lo, hi = self.pole_strip()
        if lo >= hi:
            raise DomainError(
                f"FoxHSpec pole families not separable: strip ({lo}, {hi}) is empty"
            )

    @property
    def p(self) -> int:
        return len(self.upper)

    @property
    def q(self) -> int:
        return len(self.lower)

    def pole_strip(self) -> tuple[float, float]:
        """Open interval of admissible contour offsets (may be infinite)."""
        lo = -math.inf
        for t in self.lower[: self.m]:
            lo = max(lo, -t.shift / t.scale)
        hi = math.inf
        for t in self.upper[: self.n]:
            hi = min(hi, (1.0 - t.shift) / t.scale)
        return lo, hi

    def decay_scale(self) -> float:
        """Net gamma-modulus decay exponent D; integrand ~ exp(-pi*D*|t|/2)."""
        d = sum(t.scale for t in self.lower[: self.m])
        d += sum(t.scale for t in self.upper[: self.n])
        d -= sum(t.scale for t in self.upper[self.n :])
        d -= sum(t.scale for t in self.lower[self.m :])
        return d

    def default_offset(self) -> float:
        lo, hi = self.pole_strip()
        if math.isfinite(lo) and math.isfinite(hi):
            return 0.5 * (lo + hi)
        if math.isfinite(lo):
            return lo + 1.0
        if math.isfinite(hi):
            return hi - 1.0
        return 0.0

    def log_kernel(self, s: np.ndarray) -> np.ndarray:
        """log of the gamma-product kernel at complex points s."""
        total = np.zeros(np.shape(s), dtype=np.complex128)
        for t in self.lower[: self.m]:
            total += log_gamma_array(t.shift + t.scale * s)
        for t in self.upper[: self.n]:
            total += log_gamma_array(1.0 - t.shift - t.scale * s)
        for t in self.upper[self.n :]:
            total -= log_gamma_array(t.shift + t.scale * s)
        for t in self.lower[self.m :]:
            total -= log_gamma_array(1.0 - t.shift - t.scale * s)
        return total


@dataclass(frozen=True)
class BivariateGammaTerm:
    """Joint term (a; a1, a2) contributing G(1 - a - a1*r - a2*s)."""

    shift: float
    scale1: float
    scale2: float

    def __post_init__(self):
        if self.scale1 < 0 or self.scale2 < 0 or self.scale1 + self.scale2 <= 0:
            raise DomainError("BivariateGammaTerm scales must be nonnegative, not both 0")


@dataclass(frozen=True)
class BivariateFoxHSpec:
    """Two coupled univariate kernels plus joint numerator terms."""

    joint_upper: tuple[BivariateGammaTerm, ...]
    kernel1: FoxHSpec
    kernel2: FoxHSpec

    def __post_init__(self):
        object.__setattr__(self, "joint_upper", tuple(self.joint_upper))
        if self.kernel1.decay_scale() <= 0 or self.kernel2.decay_scale() <= 0:
            raise DomainError("BivariateFoxHSpec: inner kernels must decay on their own")

    def default_offsets(self) -> tuple[float, float]:
        """Contour pair honouring both kernels' strips and the joint poles."""
        l1, u1 = self.kernel1.pole_strip()
        l2, u2 = self.kernel2.pole_strip()
        # joint constraint: a1*c1 + a2*c2 < 1 - shift  for every joint term
        for t in self.joint_upper:
            if t.scale1 > 0:
                c2_floor = max(l2, -1.0) if math.isfinite(l2) else -1.0
                u1 = min(u1, (1.0 - t.shift - t.scale2 * c2_floor) / t.scale1)
        c1 = 0.5 * (max(l1, u1 - 2.0) + u1) if math.isfinite(l1) else u1 - 1.0
        if math.isfinite(l1) and math.isfinite(u1):
            c1 = 0.5 * (l1 + u1)
        for t in self.joint_upper:
            if t.scale2 > 0:
                u2 = min(u2, (1.0 - t.shift - t.scale1 * c1) / t.scale2)
        if math.isfinite(l2) and math.isfinite(u2):
            c2 = 0.5 * (l2 + u2)
        elif math.isfinite(l2):
            c2 = l2 + 1.0
        else:
            c2 = u2 - 1.0
        for t in self.joint_upper:
            if t.scale1 * c1 + t.scale2 * c2 >= 1.0 - t.shift:
                raise DomainError("BivariateFoxHSpec: no admissible contour pair found")
        return c1, c2


@dataclass(frozen=True)
class ContourConfig:
    """Quadrature controls for one Mellin-Barnes contour.

    ``offset`` None picks the midpoint of the admissible strip.
    ``half_extent`` None starts from the kernel decay estimate.
    """

    offset: float | None = None
    half_extent: float | None = None
    nodes: int = 257
    target_rel_tol: float = 1.0e-10
    max_refinements: int = 18

    def __post_init__(self):
        if self.nodes < 64:
            raise DomainError(f"ContourConfig.nodes must be >= 64, got {self.nodes}")
        if not 0 < self.target_rel_tol < 1e-2:
            raise DomainError("ContourConfig.target_rel_tol out of range")


def _resolve_offset(spec: FoxHSpec, cfg: ContourConfig) -> float:
    lo, hi = spec.pole_strip()
    if cfg.offset is not None:
        if not lo < cfg.offset < hi:
            raise DomainError(
                f"contour offset {cfg.offset} outside admissible strip ({lo}, {hi})"
            )
        return cfg.offset
    return spec.default_offset()


def _analyticity_width(spec: FoxHSpec, c: float) -> float:
    lo, hi = spec.pole_strip()
    d = math.inf
    if math.isfinite(lo):
        d = min(d, c - lo)
    if math.isfinite(hi):
        d = min(d, hi - c)
    return 1.0 if not math.isfinite(d) else d


def _sum_symmetric(weights: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sum exp(w) over a grid symmetric in its last axis (t=0 in the middle)."""
    npts = weights.shape[axis]
    mid = npts // 2
    w_pos = weights[..., mid + 1 :]
    center = np.exp(weights[..., mid])
    return center.real + 2.0 * np.exp(w_pos).real.sum(axis=-1)


def fox_h_univariate_many(
    spec: FoxHSpec,
    z,
    cfg: ContourConfig | None = None,
    log_scale: float = 0.0,
) -> np.ndarray:
    """Evaluate exp(-log_scale) * H(z) for an array of positive arguments.

    All z share one contour, so the gamma kernel is computed once per
    refinement level; metric sweeps exploit this heavily.
    """
    cfg = cfg or ContourConfig()
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if np.any(z <= 0.0):
        raise DomainError("fox_h_univariate: need z > 0")
    dscale = spec.decay_scale()
    if dscale <= 0.0:
        raise DomainError("fox_h_univariate: kernel does not decay on vertical contours")
    rate = 0.5 * math.pi * dscale
    c = _resolve_offset(spec, cfg)
    width = _analyticity_width(spec, c)

    ln_z = np.log(z)
    T = cfg.half_extent if cfg.half_extent is not None else max(60.0 / rate, 4.0)
    # spacing from the trapezoid strip-error estimate, then ensure cfg.nodes
    h = min(width / 5.0, 2.0 * T / (cfg.nodes - 1))

    prev = None
    last = None
    for _ in range(cfg.max_refinements):
        half_n = int(math.ceil(T / h))
        npts = 2 * half_n + 1
        if npts > _MAX_GRID:
            raise NumericError("fox_h_univariate: node budget exhausted", estimates=(prev, last))
        t = h * np.arange(-half_n, half_n + 1)
        s = c + 1j * t
        ln_k = spec.log_kernel(s)
        w = ln_k[None, :] - np.outer(ln_z, s) - log_scale
        wmax = w.real.max()
        if wmax > _MAX_EXP:
            raise NumericError(
                "fox_h_univariate: integrand overflows double range; "
                "pass a log_scale to normalise",
                peak_log=wmax + log_scale,
            )
        sums = _sum_symmetric(w)
        est = (h / (2.0 * math.pi)) * sums

        scale = np.abs(est).max() + 1e-300
        edge = np.exp(w.real[:, [0, -1]]).max()
        # remaining wings ~ edge/rate each, carried through the 1/(2 pi) factor
        tail_rel = edge / (math.pi * rate * scale)
        prev, last = last, est
        if tail_rel > 0.1 * cfg.target_rel_tol:
            T *= 2.0
            continue
        if prev is not None:
            diff = np.abs(est - prev).max()
            if diff <= cfg.target_rel_tol * scale:
                return est
        h *= 0.5
    raise NumericError(
        "fox_h_univariate: contour quadrature did not converge",
        estimates=(None if prev is None else prev.tolist(), last.tolist()),
    )


def fox_h_univariate(
    spec: FoxHSpec,
    z: float,
    cfg: ContourConfig | None = None,
    log_scale: float = 0.0,
) -> float:
    """Univariate Fox-H at a single positive argument."""
    return float(fox_h_univariate_many(spec, [z], cfg, log_scale)[0])


def _bivariate_offsets(
    spec: BivariateFoxHSpec, cfg1: ContourConfig, cfg2: ContourConfig
) -> tuple[float, float]:
    c1_auto, c2_auto = spec.default_offsets()
    c1 = cfg1.offset if cfg1.offset is not None else c1_auto
    c2 = cfg2.offset if cfg2.offset is not None else c2_auto
    l1, u1 = spec.kernel1.pole_strip()
    l2, u2 = spec.kernel2.pole_strip()
    if not (l1 < c1 < u1) or not (l2 < c2 < u2):
        raise DomainError("bivariate contour offsets outside kernel strips")
    for t in spec.joint_upper:
        if t.scale1 * c1 + t.scale2 * c2 >= 1.0 - t.shift:
            raise DomainError("bivariate contour offsets hit a joint pole family")
    return c1, c2


def fox_h_bivariate_many(
    spec: BivariateFoxHSpec,
    z1,
    z2,
    cfg1: ContourConfig | None = None,
    cfg2: ContourConfig | None = None,
    log_scale: float = 0.0,
    residue_tol: float = 1.0e-8,
) -> np.ndarray:
    """exp(-log_scale) * H(z1, z2), elementwise over broadcast arguments.

    All argument pairs share one contour pair, so the joint gamma grid
    (the dominant cost) is built once per refinement level; the ASER
    closed forms and their SNR sweeps rely on this.
    """
    cfg1 = cfg1 or ContourConfig(target_rel_tol=1e-9)
    cfg2 = cfg2 or ContourConfig(target_rel_tol=1e-9)
    z1b, z2b = np.broadcast_arrays(
        np.atleast_1d(np.asarray(z1, dtype=np.float64)),
        np.atleast_1d(np.asarray(z2, dtype=np.float64)),
    )
    z1f, z2f = z1b.ravel(), z2b.ravel()
    if np.any(z1f <= 0.0) or np.any(z2f <= 0.0):
        raise DomainError("fox_h_bivariate: need z1, z2 > 0")
    c1, c2 = _bivariate_offsets(spec, cfg1, cfg2)

    rate1 = 0.5 * math.pi * spec.kernel1.decay_scale()
    rate2 = 0.5 * math.pi * spec.kernel2.decay_scale()
    T1 = cfg1.half_extent if cfg1.half_extent is not None else max(60.0 / rate1, 4.0)
    T2 = cfg2.half_extent if cfg2.half_extent is not None else max(60.0 / rate2, 4.0)
    w1 = _analyticity_width(spec.kernel1, c1)
    w2 = _analyticity_width(spec.kernel2, c2)
    h1 = min(w1 / 5.0, 2.0 * T1 / (cfg1.nodes - 1))
    h2 = min(w2 / 5.0, 2.0 * T2 / (cfg2.nodes - 1))

    tol = max(cfg1.target_rel_tol, cfg2.target_rel_tol)
    max_ref = max(cfg1.max_refinements, cfg2.max_refinements)
    ln_z1 = np.log(z1f)
    ln_z2 = np.log(z2f)

    prev = None
    last = None
    residue = 0.0
    for _ in range(max_ref):
        n1 = int(math.ceil(T1 / h1))
        n2 = int(math.ceil(T2 / h2))
        if (n1 + 1) * (2 * n2 + 1) > _MAX_GRID:
            raise NumericError("fox_h_bivariate: grid budget exhausted", estimates=(prev, last))
        # conjugate symmetry: keep t1 >= 0 only, fold the lower half-plane
        t1 = h1 * np.arange(0, n1 + 1)
        t2 = h2 * np.arange(-n2, n2 + 1)
        r = c1 + 1j * t1
        s = c2 + 1j * t2

        grid = spec.kernel1.log_kernel(r)[:, None] + spec.kernel2.log_kernel(s)[None, :]
        for t in spec.joint_upper:
            grid += log_gamma_array(
                1.0 - t.shift - t.scale1 * r[:, None] - t.scale2 * s[None, :]
            )
        grid -= log_scale

        peak = grid.real.max()
        zpow = (np.abs(c1 * ln_z1) + np.abs(c2 * ln_z2)).max()
        if peak + zpow > _MAX_EXP:
            raise NumericError(
                "fox_h_bivariate: integrand overflows double range; "
                "pass a log_scale to normalise",
                peak_log=peak + log_scale,
            )
        core = np.exp(grid)  # (n1+1, 2*n2+1)
        phase2 = np.exp(-np.outer(ln_z2, s))  # (nz, 2*n2+1)
        prof = phase2 @ core.T  # (nz, n1+1)
        phase1 = np.exp(-np.outer(ln_z1, r))  # (nz, n1+1)
        weighted = phase1 * prof
        row0 = weighted[:, 0]
        total = row0.real + 2.0 * weighted[:, 1:].sum(axis=1).real
        # folding t1<0 adds the conjugate; the t1=0 row's imaginary part is
        # pure roundoff and doubles as the reported residue
        est = (h1 * h2 / (4.0 * math.pi**2)) * total
        scale = np.abs(est).max() + 1e-300
        residue = float(
            np.abs(row0.imag).max() * (h1 * h2 / (4.0 * math.pi**2)) / scale
        )

        edge_r = np.exp(grid.real[-1, :].max())
        edge_s = np.exp(np.maximum(grid.real[:, 0], grid.real[:, -1]).max())
        zfac = float(np.exp(zpow))
        tail_rel = (edge_r + edge_s) * zfac / (rate1 * rate2 * scale * 4.0 * math.pi**2)
        prev, last = last, est
        if tail_rel > 0.1 * tol:
            T1 *= 2.0
            T2 *= 2.0
            continue
        if prev is not None:
            diff = np.abs(est - prev).max()
            if diff <= tol * scale:
                if residue > residue_tol:
                    raise NumericError(
                        "fox_h_bivariate: imaginary residue too large",
                        residue=residue,
                    )
                return est.reshape(z1b.shape)
        h1 *= 0.5
        h2 *= 0.5
    raise NumericError(
        "fox_h_bivariate: contour quadrature did not converge",
        estimates=(None if prev is None else prev.tolist(), last.tolist()),
        residue=residue,
    )


def fox_h_bivariate(
    spec: BivariateFoxHSpec,
    z1: float,
    z2: float,
    cfg1: ContourConfig | None = None,
    cfg2: ContourConfig | None = None,
    log_scale: float = 0.0,
) -> float:
    """Bivariate Fox-H at a single argument pair."""
    return float(fox_h_bivariate_many(spec, z1, [z2], cfg1, cfg2, log_scale)[0])


def meijer_g(
    m: int,
    n: int,
    upper: Sequence[float],
    lower: Sequence[float],
    z: float,
    cfg: ContourConfig | None = None,
) -> float:
    """Meijer G-function: the unit-scale special case of Fox-H."""
    spec = FoxHSpec(
        m=m,
        n=n,
        upper=tuple(GammaTerm(a, 1.0) for a in upper),
        lower=tuple(GammaTerm(b, 1.0) for b in lower),
    )
    return fox_h_univariate(spec, z, cfg)
