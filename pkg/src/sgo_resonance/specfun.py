r"""Real-order Bessel functions :math:`J_p` and :math:`I_p` with first derivatives.

Evaluation strategy
-------------------
* ascending power series for ``z <= 12`` (J) and ``z <= 15`` (I);
* Hankel large-argument expansions beyond that, truncated at the smallest
  term (always at least six correction terms);
* :math:`I_p` is carried internally in exponentially scaled form,
  :math:`e^{-z} I_p(z)`, so overflow is detected instead of saturating.

Non-integer orders are handled through a Lanczos gamma function.  Negative
orders (the singular pair :math:`J_{-p}, I_{-p}` of a sectorial zone) are only
reachable through :func:`singular_basis`.

The leading-order forms :func:`asymptotic_j` / :func:`asymptotic_i` reproduce
hand calculations and are deliberately *not* used by the precise evaluators.
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

__all__ = [
    "BesselEval",
    "gamma",
    "rgamma",
    "bessel_j",
    "bessel_i",
    "bessel_i_scaled",
    "asymptotic_j",
    "asymptotic_i",
    "asymptotic_valid",
    "singular_basis",
    "bessel_k",
    "hankel1",
    "J_SERIES_MAX",
    "I_SERIES_MAX",
]

J_SERIES_MAX = 12.0
I_SERIES_MAX = 15.0
ASYMPTOTIC_MIN_ARG = 3.9

_MAX_SERIES_TERMS = 500
_MAX_ASYMPTOTIC_TERMS = 60
_MIN_CORRECTIONS = 6

# Lanczos approximation, g = 7, n = 9 (relative error ~1e-15 on the real axis)
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


class BesselEval(NamedTuple):
    """Value and first derivative of a Bessel function at one point."""

    order: float
    z: float
    value: float
    derivative: float


def gamma(x: float) -> float:
    """Gamma function by the Lanczos approximation with reflection."""
    if x == math.floor(x) and x <= 0:
        raise ValueError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_C[0]
    t = x + _LANCZOS_G + 0.5
    for i, c in enumerate(_LANCZOS_C[1:], start=1):
        acc += c / (x + i)
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def rgamma(x: float) -> float:
    """Reciprocal gamma, zero at the non-positive integers."""
    if x == math.floor(x) and x <= 0:
        return 0.0
    return 1.0 / gamma(x)


def _check_args(p: float, z: float) -> None:
    if not (math.isfinite(p) and math.isfinite(z)):
        raise ValueError("order and argument must be finite")
    if p < 0:
        raise ValueError(f"negative order {p} is outside the regular branch; use singular_basis")
    if z < 0:
        raise ValueError(f"negative argument {z}")


def _series(p: float, z: float, sign: float) -> tuple[float, float]:
    """Ascending series of J_p (sign=-1) or I_p (sign=+1) and its z-derivative.

    Valid for any real p for which the leading gamma factor is finite; z > 0.
    """
    half = 0.5 * z
    lead = half**p * rgamma(p + 1.0)
    q = sign * half * half
    term = lead
    vals = [term]
    ders = [p * term]
    peak = abs(term)
    k = 0
    while k < _MAX_SERIES_TERMS:
        k += 1
        term *= q / (k * (k + p))
        vals.append(term)
        ders.append((2 * k + p) * term)
        peak = max(peak, abs(term))
        if k > half and abs(term) <= 1e-18 * peak:
            break
    return math.fsum(vals), math.fsum(ders) / z


@lru_cache(maxsize=256)
def _hankel_coefs(p: float) -> tuple[float, ...]:
    mu = 4.0 * p * p
    coefs = [1.0]
    for k in range(1, _MAX_ASYMPTOTIC_TERMS + 1):
        coefs.append(coefs[-1] * (mu - (2 * k - 1) ** 2) / (8.0 * k))
    return tuple(coefs)


def _truncation(terms: list[float]) -> int:
    """Number of terms kept: stop before the smallest term, keep >= 7."""
    mags = [abs(t) for t in terms]
    n = 1 + min(range(1, len(mags)), key=mags.__getitem__)
    return max(n, _MIN_CORRECTIONS + 1)


def _j_hankel(p: float, z: float) -> float:
    coefs = _hankel_coefs(p)
    terms = [c / z**k for k, c in enumerate(coefs)]
    n = _truncation(terms)
    big_p = math.fsum((-1) ** (k // 2) * terms[k] for k in range(0, n, 2))
    big_q = math.fsum((-1) ** (k // 2) * terms[k] for k in range(1, n, 2))
    chi = z - (0.5 * p + 0.25) * math.pi
    return math.sqrt(2.0 / (math.pi * z)) * (big_p * math.cos(chi) - big_q * math.sin(chi))


def _i_hankel_scaled(p: float, z: float) -> float:
    coefs = _hankel_coefs(p)
    terms = [c / z**k for k, c in enumerate(coefs)]
    n = _truncation(terms)
    return math.fsum((-1) ** k * terms[k] for k in range(n)) / math.sqrt(2.0 * math.pi * z)


def _j_seam(p: float) -> float:
    return max(J_SERIES_MAX, 1.5 * p)


def _i_seam(p: float) -> float:
    return max(I_SERIES_MAX, 1.5 * p)


def _j_value(p: float, z: float) -> float:
    if z <= _j_seam(p):
        return _series(p, z, -1.0)[0]
    return _j_hankel(p, z)


def bessel_j(p: float, z: float) -> BesselEval:
    """Bessel function of the first kind :math:`J_p(z)` and :math:`J'_p(z)`.

    Parameters
    ----------
    p : float
        Order, ``p >= 0``.
    z : float
        Argument, ``z >= 0``.

    Returns
    -------
    BesselEval
        ``value`` and ``derivative``.  The derivative is infinite at ``z = 0``
        for ``0 < p < 1``.
    """
    _check_args(p, z)
    if z == 0.0:
        value = 1.0 if p == 0 else 0.0
        if p == 0 or p > 1:
            deriv = 0.0
        elif p == 1:
            deriv = 0.5
        else:
            deriv = math.inf
        return BesselEval(p, z, value, deriv)
    if z <= _j_seam(p):
        value, deriv = _series(p, z, -1.0)
        return BesselEval(p, z, value, deriv)
    value = _j_hankel(p, z)
    # J'_p = J_{p+1}... use the lowering/raising pair to stay on the Hankel branch
    deriv = 0.5 * (_j_hankel(p - 1.0, z) - _j_hankel(p + 1.0, z))
    return BesselEval(p, z, value, deriv)


def bessel_i_scaled(p: float, z: float) -> BesselEval:
    """Exponentially scaled :math:`e^{-z} I_p(z)` and :math:`e^{-z} I'_p(z)`."""
    _check_args(p, z)
    if z == 0.0:
        value = 1.0 if p == 0 else 0.0
        if p == 0 or p > 1:
            deriv = 0.0
        elif p == 1:
            deriv = 0.5
        else:
            deriv = math.inf
        return BesselEval(p, z, value, deriv)
    if z <= _i_seam(p):
        value, deriv = _series(p, z, 1.0)
        scale = math.exp(-z)
        return BesselEval(p, z, value * scale, deriv * scale)
    value = _i_hankel_scaled(p, z)
    deriv = 0.5 * (_i_hankel_scaled(p - 1.0, z) + _i_hankel_scaled(p + 1.0, z))
    return BesselEval(p, z, value, deriv)


def bessel_i(p: float, z: float) -> BesselEval:
    """Modified Bessel function :math:`I_p(z)` and :math:`I'_p(z)`.

    Raises
    ------
    OverflowError
        If the unscaled value is not representable as a double.
    """
    scaled = bessel_i_scaled(p, z)
    if z <= _i_seam(p):
        # series branch never left the unscaled range
        factor = math.exp(z)
        return BesselEval(p, z, scaled.value * factor, scaled.derivative * factor)
    log_value = z + math.log(scaled.value)
    if log_value > 709.0:
        raise OverflowError(f"I_{p}({z}) exceeds the double range; use bessel_i_scaled")
    factor = math.exp(z)
    return BesselEval(p, z, scaled.value * factor, scaled.derivative * factor)


def asymptotic_j(p: float, z: float) -> BesselEval:
    """Leading large-argument term of :math:`J_p` and :math:`J'_p`.

    ``cos(z - p*pi/2 - pi/4) / sqrt(pi z / 2)`` and the matching ``-sin`` form.
    No validity check is made; see :func:`asymptotic_valid`.
    """
    chi = z - 0.5 * p * math.pi - 0.25 * math.pi
    root = math.sqrt(0.5 * math.pi * z)
    return BesselEval(p, z, math.cos(chi) / root, -math.sin(chi) / root)


def asymptotic_i(p: float, z: float) -> BesselEval:
    """Leading large-argument form of :math:`I_0, I'_0`: ``cosh z``, ``sinh z`` over ``sqrt(pi z/2)``.

    The order enters only through the validity predicate; at leading order
    ``I_p`` and ``I'_p`` share the same exponential.
    """
    root = math.sqrt(0.5 * math.pi * z)
    return BesselEval(p, z, math.cosh(z) / root, math.sinh(z) / root)


def asymptotic_valid(p: float, z: float) -> bool:
    """Whether the leading-order asymptotics are meaningful at ``(p, z)``.

    Requires ``z >= 3.9`` (the smallest argument treated as "large" in the
    plate calculation) and ``z > p**2`` so the first correction is below one.
    """
    return z >= ASYMPTOTIC_MIN_ARG and z > p * p


def singular_basis(p: float, z: float) -> tuple[BesselEval, BesselEval]:
    """Singular pair :math:`J_{-p}(z), I_{-p}(z)` for fractional ``0 < p < 1``.

    Sectorial-defect basis only; these solutions blow up at the origin.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("singular basis is defined for 0 < p < 1")
    if z <= 0:
        raise ValueError("singular basis needs z > 0")
    jv, jd = _series(-p, z, -1.0)
    iv, idr = _series(-p, z, 1.0)
    return BesselEval(-p, z, jv, jd), BesselEval(-p, z, iv, idr)


def bessel_k(p: float, z: float) -> BesselEval:
    """Macdonald function :math:`K_p`; named for the annular basis, not implemented."""
    raise NotImplementedError("annular (J, H, I, K) boundary system is out of scope")


def hankel1(p: float, z: float) -> BesselEval:
    """Hankel function :math:`H^{(1)}_p`; named for the annular basis, not implemented."""
    raise NotImplementedError("annular (J, H, I, K) boundary system is out of scope")
