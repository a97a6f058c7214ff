"""Confluent and Gauss hypergeometric series.

Only the instances the closed forms actually need have to be fast:
1F1(1; 3/2; x) with x >= 0 and 2F1 with c = 3/2 on [0, 1).  The series
for both are positive-term in those regimes, so plain summation carries
full relative accuracy.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError, NumericError

__all__ = ["hyp1f1", "hyp1f1_scaled_1_32", "hyp2f1"]

_MAX_TERMS = 200_000
_SQRT_PI_HALF = 0.5 * math.sqrt(math.pi)


def _is_nonpositive_integer(v: float, tol: float = 1e-12) -> bool:
    return v <= tol and abs(v - round(v)) < tol


def hyp1f1(a: float, b: float, x: float, rtol: float = 1e-14) -> float:
    """Kummer confluent hypergeometric 1F1(a; b; x) by direct series."""
    if _is_nonpositive_integer(b):
        raise DomainError(f"hyp1f1: b = {b} is a non-positive integer")
    term = 1.0
    total = 1.0
    for n in range(_MAX_TERMS):
        term *= (a + n) * x / ((b + n) * (n + 1))
        total += term
        if abs(term) <= rtol * abs(total) and n > 2:
            return total
    raise NumericError(
        "hyp1f1: series did not converge", a=a, b=b, x=x, last_term=term, partial=total
    )


def hyp1f1_scaled_1_32(x):
    """exp(-x) * 1F1(1; 3/2; x) for x >= 0, overflow-free for any x.

    For x <= 50 the Kummer series is summed and scaled; beyond that
    erf(sqrt x) = 1 to double precision, so the exact identity
    1F1(1;3/2;x) = (sqrt(pi)/2) e^x erf(sqrt x)/sqrt x collapses to
    (sqrt(pi)/2)/sqrt(x).  Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0.0):
        raise DomainError("hyp1f1_scaled_1_32: need x >= 0")
    out = np.empty(x.shape)

    small = x <= 50.0
    if np.any(small):
        xs = x[small]
        term = np.ones_like(xs)
        total = np.ones_like(xs)
        # ratio x/(n + 3/2) < 1 past n ~ 50; 240 terms leave a < 1e-50 tail
        for n in range(240):
            term = term * xs / (n + 1.5)
            total += term
        out[small] = total * np.exp(-xs)

    large = ~small
    if np.any(large):
        out[large] = _SQRT_PI_HALF / np.sqrt(x[large])
    return out if out.ndim else float(out)


def _signed_lgamma(x: float) -> tuple[float, float]:
    """(log|Gamma(x)|, sign) for real non-pole x; math.lgamma drops the sign."""
    if x > 0.0:
        return math.lgamma(x), 1.0
    if x == math.floor(x):
        raise DomainError(f"gamma pole at {x}")
    sign = -1.0 if (math.floor(x) % 2) else 1.0
    return math.lgamma(x), sign


def _gauss_series(a: float, b: float, c: float, x: float, rtol: float, cap: int) -> float:
    term = 1.0
    total = 1.0
    for n in range(cap):
        term *= (a + n) * (b + n) * x / ((c + n) * (n + 1))
        total += term
        if abs(term) <= rtol * abs(total) and n > 2:
            return total
    raise NumericError("hyp2f1: series did not converge", a=a, b=b, c=c, x=x, partial=total)


def hyp2f1(a: float, b: float, c: float, x: float, rtol: float = 1e-14) -> float:
    """Gauss hypergeometric 2F1(a, b; c; x) on 0 <= x < 1.

    For x > 0.75 the x -> 1-x linear transformation is applied for
    conditioning, except when c-a-b is (close to) an integer, where that
    transformation degenerates; there the direct series is used with a
    raised term cap (it still converges for x < 1, just more slowly).
    """
    if _is_nonpositive_integer(c):
        raise DomainError(f"hyp2f1: c = {c} is a non-positive integer")
    if not 0.0 <= x < 1.0:
        raise DomainError(f"hyp2f1: need 0 <= x < 1, got {x}")
    if x <= 0.75:
        return _gauss_series(a, b, c, x, rtol, 20_000)

    cab = c - a - b
    if abs(cab - round(cab)) < 0.05:
        return _gauss_series(a, b, c, x, rtol, _MAX_TERMS)

    # 2F1(a,b;c;x) in terms of 2F1(.;.;.;1-x), signed gammas throughout
    y = 1.0 - x
    lc, sc = _signed_lgamma(c)
    l1, s1 = _signed_lgamma(cab)
    l2, s2 = _signed_lgamma(c - a)
    l3, s3 = _signed_lgamma(c - b)
    l4, s4 = _signed_lgamma(-cab)
    l5, s5 = _signed_lgamma(a)
    l6, s6 = _signed_lgamma(b)
    t1 = (sc * s1 * s2 * s3) * math.exp(lc + l1 - l2 - l3) * _gauss_series(
        a, b, a + b - c + 1.0, y, rtol, 20_000
    )
    t2 = (
        y**cab
        * (sc * s4 * s5 * s6)
        * math.exp(lc + l4 - l5 - l6)
        * _gauss_series(c - a, c - b, cab + 1.0, y, rtol, 20_000)
    )
    return t1 + t2
