"""Root isolation on dispersion residuals and resonance tuning.

The active zone and the complement are tuned to share one eigenfrequency
(the multiple-eigenvalue configuration that a weak bond later splits).

Internally the active-zone problem is solved in the dimensionless variable
``x = k_J * eps``.  With ``q = Q1 eps^2 / (H^2 D1)`` the second wavenumber is
``y = k_I * eps = sqrt(x^2 - q)`` and

    omega = x * y * H * sqrt(D1 / rho) / eps^2,   exp(Theta) = x / y,

so roots in ``x`` map monotonically onto roots in ``omega``.  Every root is
re-checked against :func:`~sgo_resonance.plate.dispersion_residual_active`.
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import plate
from .errors import (
    BucklingError,
    NumericalError,
    PoleDenseError,
    PoleError,
    ResonanceUnreachableError,
    RootNotFoundError,
)
from .plate import CircularGeometry, PlateSpec, ThetaParam
from .specfun import bessel_i_scaled, bessel_j

__all__ = [
    "RootBracket",
    "ResonanceReport",
    "ScanRow",
    "find_roots",
    "isolate_brackets",
    "clamped_disc_roots",
    "J0_FIRST_ZERO",
    "J1_FIRST_ZERO",
    "compression_number",
    "buckling_tension",
    "active_eigenfrequencies",
    "ground_frequency",
    "complement_eigenfrequencies",
    "tune_outer_radius",
    "tune_tension",
    "resonance_scan",
    "paper_discrepancies",
]

J0_FIRST_ZERO = 2.404825557695773
J1_FIRST_ZERO = 3.8317059702075125

RESONANT_MISMATCH = 1e-3
RADIUS_RANGE = (1e5, 1e8)
FREQUENCY_BAND_HZ = (1e-5, 1e-2)


@dataclass(frozen=True)
class RootBracket:
    """Sign-change interval ``[lo, hi]`` free of poles."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float


@dataclass
class ResonanceReport:
    """Outcome of a tuning run.  Frequencies in Hz, mismatch relative to their mean."""

    parameter: str
    value: float
    nu_eps: float
    nu_c: float
    mismatch: float
    mode_index: int
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ScanRow:
    q1: float
    nu_eps_hz: float
    nu_c_hz: float
    mismatch: float
    flagged: bool
    error: str = ""


def _safe_eval(f: Callable[[float], float], x: float) -> float:
    try:
        val = float(f(x))
    except PoleError:
        return math.nan
    return val


def isolate_brackets(
    residual: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    denominators: Callable[[float], Sequence[float]] | None = None,
    n_grid: int = 4096,
    spacing: str = "linear",
) -> tuple[list[RootBracket], list[float], float]:
    """Scan ``[lo, hi]`` and split it into pole-free sign-change brackets.

    Returns the brackets, approximate pole locations and a residual scale
    (median of ``|residual|`` on the grid).
    """
    if n_grid < 1024:
        raise ValueError("pole pre-scan needs at least 1024 grid points")
    if not hi > lo:
        raise ValueError("empty domain")
    if spacing == "log":
        if lo <= 0:
            raise ValueError("log spacing needs lo > 0")
        xs = np.geomspace(lo, hi, n_grid)
    else:
        xs = np.linspace(lo, hi, n_grid)
    fs = np.array([_safe_eval(residual, float(x)) for x in xs])
    pole_mask = ~np.isfinite(fs[:-1]) | ~np.isfinite(fs[1:])
    if denominators is not None:
        ds = np.array([np.atleast_1d(denominators(float(x))) for x in xs])
        flips = np.any(np.sign(ds[:-1]) != np.sign(ds[1:]), axis=1)
        pole_mask |= flips
    n_poles = int(np.count_nonzero(pole_mask))
    if n_poles > n_grid // 8:
        raise PoleDenseError(f"{n_poles} pole intervals on a {n_grid}-point grid")
    poles = [0.5 * (xs[i] + xs[i + 1]) for i in np.flatnonzero(pole_mask)]
    finite = np.abs(fs[np.isfinite(fs)])
    scale = float(np.median(finite)) if finite.size else 1.0
    scale = scale if scale > 0 else 1.0
    brackets = []
    for i in range(n_grid - 1):
        if pole_mask[i]:
            continue
        f0, f1 = fs[i], fs[i + 1]
        if f0 == 0.0:
            brackets.append(RootBracket(xs[i], xs[i], 0.0, 0.0))
        elif f0 * f1 < 0:
            brackets.append(RootBracket(float(xs[i]), float(xs[i + 1]), float(f0), float(f1)))
    if fs[-1] == 0.0:
        brackets.append(RootBracket(xs[-1], xs[-1], 0.0, 0.0))
    return brackets, poles, scale


def find_roots(
    residual: Callable[[float], float],
    lo: float,
    hi: float,
    max_roots: int | None = None,
    *,
    denominators: Callable[[float], Sequence[float]] | None = None,
    n_grid: int = 4096,
    spacing: str = "linear",
    rtol: float = 4 * np.finfo(float).eps,
) -> list[float]:
    """Ascending roots of ``residual`` on ``[lo, hi]``, poles excluded.

    Sign changes are located on an ``n_grid`` scan, intervals in which any
    ``denominators`` component changes sign are treated as poles, and each
    remaining bracket is refined with Brent's method.  A refined point whose
    residual is not small relative to the grid scale is a pole the
    denominators did not announce, and is dropped.

    Raises
    ------
    RootNotFoundError
        No root in the domain.
    PoleDenseError
        More than ``n_grid / 8`` pole intervals.
    """
    brackets, _, scale = isolate_brackets(
        residual, lo, hi, denominators=denominators, n_grid=n_grid, spacing=spacing
    )
    roots: list[float] = []
    for br in brackets:
        if br.lo == br.hi:
            root = br.lo
        else:
            root = brentq(residual, br.lo, br.hi, xtol=1e-300, rtol=rtol, maxiter=200)
        if abs(_safe_eval(residual, root)) > 1e-8 * scale:
            continue
        if roots and root == roots[-1]:
            continue
        roots.append(root)
        if max_roots is not None and len(roots) >= max_roots:
            break
    if not roots:
        raise RootNotFoundError(f"no sign change of the residual on [{lo}, {hi}]")
    return roots


def clamped_disc_roots(count: int) -> list[float]:
    """First ``count`` roots ``x`` of ``J0'(x)/J0(x) - I0'(x)/I0(x)`` (3.196, 6.306, ...)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    with _ROOT_LOCK:
        while len(_CLAMPED_ROOTS) < count:
            _CLAMPED_ROOTS.append(_clamped_disc_root(len(_CLAMPED_ROOTS) + 1))
        return _CLAMPED_ROOTS[:count]


_CLAMPED_ROOTS: list[float] = []
_ROOT_LOCK = threading.Lock()


def _bessel_zero(order: int, l: int) -> float:
    # McMahon's leading term is within 0.1 of the l-th zero; zeros are ~pi apart
    guess = (l + 0.5 * order - 0.25) * math.pi
    return brentq(lambda x: bessel_j(order, x).value, guess - 0.6, guess + 0.6, xtol=1e-300, rtol=4 * np.finfo(float).eps)


def _clamped_disc_root(l: int) -> float:
    # the l-th root is the only one in (j_{0,l}, j_{1,l}): J0'/J0 runs from +inf
    # just past the J0 zero down to 0 at the J1 zero, while -I0'/I0 < 0 throughout
    lo = _bessel_zero(0, l) * (1 + 1e-9)
    hi = _bessel_zero(1, l)
    return brentq(plate.clamped_quotient, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)


# --- active zone -----------------------------------------------------------


def compression_number(spec: PlateSpec, geometry: CircularGeometry) -> float:
    """Dimensionless compression ``q = Q1 eps^2 / (H^2 D1)``."""
    return spec.tension_q1 * geometry.epsilon**2 / (spec.thickness**2 * spec.D1)


def buckling_tension(spec: PlateSpec, geometry: CircularGeometry) -> float:
    """Q1 at which the axisymmetric ground mode reaches zero frequency (``J1(x) = 0``)."""
    return J1_FIRST_ZERO**2 * spec.thickness**2 * spec.D1 / geometry.epsilon**2


def _omega_scale(spec: PlateSpec, geometry: CircularGeometry) -> float:
    return spec.thickness * math.sqrt(spec.D1 / spec.density) / geometry.epsilon**2


def _x_residual(x: float, y: float) -> float:
    j = bessel_j(0, x)
    if abs(j.value) < 1e-12:
        raise PoleError(f"J0({x}) vanishes")
    i = bessel_i_scaled(0, y)
    return x * j.derivative / j.value - y * i.derivative / i.value


def active_eigenfrequencies(spec: PlateSpec, geometry: CircularGeometry, count: int = 1) -> list[tuple[int, float]]:
    """Lowest ``count`` real axisymmetric eigenfrequencies as ``(mode_index, omega)``.

    Mode indices follow the uncompressed branches; indices of modes already
    buckled by the compression (``x_l`` below ``sqrt(q)``) are skipped.
    """
    q = compression_number(spec, geometry)
    x_min = math.sqrt(q) * (1 + 1e-12) if q > 0 else 1e-3
    buckled = _count_buckled(q)

    def res(x):
        return _x_residual(x, math.sqrt(max(x * x - q, 0.0)))

    hi = x_min + math.pi * (count + 2)
    xs = find_roots(res, x_min, hi, count, denominators=lambda x: (bessel_j(0, x).value,))
    scale = _omega_scale(spec, geometry)
    out = []
    for idx, x in enumerate(xs, start=1 + buckled):
        y = math.sqrt(x * x - q)
        out.append((idx, x * y * scale))
    return out


def _count_buckled(q: float) -> int:
    if q <= 0:
        return 0
    # zeros of J1 below sqrt(q)
    n = 0
    x0 = J1_FIRST_ZERO
    while x0 < math.sqrt(q):
        n += 1
        x0 += math.pi  # J1 zeros are spaced by ~pi; refine below
        x0 = brentq(lambda t: bessel_j(1, t).value, x0 - 0.5, x0 + 0.5)
    return n


def ground_frequency(spec: PlateSpec, geometry: CircularGeometry) -> float:
    """Angular frequency of the axisymmetric ground mode of the clamped active zone.

    The ground root is always bracketed by ``(max(sqrt(q), j_{0,1}), j_{1,1})``.

    Raises
    ------
    BucklingError
        If ``Q1`` reaches the clamped buckling load.
    """
    q = compression_number(spec, geometry)
    if q >= J1_FIRST_ZERO**2:
        raise BucklingError(
            f"Q1 = {spec.tension_q1:.6g} exceeds the buckling load {buckling_tension(spec, geometry):.6g}"
        )

    def res(x):
        return _x_residual(x, math.sqrt(max(x * x - q, 0.0)))

    lo = max(math.sqrt(q), J0_FIRST_ZERO) * (1 + 1e-9)
    hi = J1_FIRST_ZERO
    if res(hi) == 0.0:  # only when q == 0 would y vanish here; guard anyway
        x = hi
    else:
        x = brentq(res, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    return x * math.sqrt(x * x - q) * _omega_scale(spec, geometry)


def complement_eigenfrequencies(spec_c: PlateSpec, a: float, count: int) -> list[float]:
    """Lowest ``count`` axisymmetric eigenfrequencies (Hz) of the clamped complement disc."""
    xs = clamped_disc_roots(count)
    scale = spec_c.thickness * math.sqrt(spec_c.D1 / spec_c.density) / a**2
    return [x * x * scale / (2 * math.pi) for x in xs]


# --- tuning ----------------------------------------------------------------


def tune_outer_radius(spec_c: PlateSpec, target_nu: float, mode_index: int = 1, paper_reference: float | None = None) -> ResonanceReport:
    """Outer radius ``a`` whose ``mode_index``-th complement mode sits at ``target_nu``.

    Raises
    ------
    ResonanceUnreachableError
        If the root radius falls outside ``[1e5, 1e8]`` m.
    """
    if not FREQUENCY_BAND_HZ[0] <= target_nu <= FREQUENCY_BAND_HZ[1]:
        raise ValueError(f"target frequency {target_nu} Hz outside the validated band {FREQUENCY_BAND_HZ}")
    if mode_index < 1:
        raise ValueError("mode index starts at 1")
    omega = 2 * math.pi * target_nu
    k = plate.complement_wavenumber(spec_c, omega)
    x_l = clamped_disc_roots(mode_index)[mode_index - 1]
    a = x_l / k
    if not RADIUS_RANGE[0] <= a <= RADIUS_RANGE[1]:
        raise ResonanceUnreachableError(f"tuned radius {a:.6g} m outside {RADIUS_RANGE}")
    nu_c = complement_eigenfrequencies(spec_c, a, mode_index)[mode_index - 1]
    details = {
        "wavenumber": k,
        "root_x": x_l,
        "a_asymptotic": math.pi * mode_index / k,
        "residual_at_root": plate.dispersion_residual_complement(spec_c, a, omega),
    }
    if paper_reference is not None:
        details["paper_reference_a"] = paper_reference
        details["paper_reference_flag"] = "not reproduced; see discrepancies"
    return ResonanceReport(
        parameter="outer_radius",
        value=a,
        nu_eps=target_nu,
        nu_c=nu_c,
        mismatch=abs(nu_c - target_nu) / target_nu,
        mode_index=mode_index,
        details=details,
    )


def tune_tension(
    spec_eps: PlateSpec,
    geometry: CircularGeometry,
    target_nu: float,
    q1_max: float = plate.DESTRUCTION_LIMIT_Q1,
) -> ResonanceReport:
    """Compression ``Q1`` that brings the active-zone ground mode down to ``target_nu``.

    At fixed frequency ``x * y`` is a constant ``c``, so the ground root is a
    one-dimensional problem in ``x`` with ``y = c / x``; then
    ``q = x^2 - (c/x)^2``.

    Raises
    ------
    ResonanceUnreachableError
        If the required compression is negative (target above the
        uncompressed ground frequency) or above ``q1_max``.
    """
    if not target_nu > 0:
        raise ValueError("target frequency must be positive")
    omega = 2 * math.pi * target_nu
    c = omega / _omega_scale(spec_eps, geometry)
    x0 = math.sqrt(c)
    classical = clamped_disc_roots(1)[0]
    if x0 >= classical:
        raise ResonanceUnreachableError("target above the uncompressed ground frequency; compression only lowers it")

    def res(x):
        return _x_residual(x, c / x)

    lo = x0 if x0 > J0_FIRST_ZERO else J0_FIRST_ZERO * (1 + 1e-9)
    x = brentq(res, lo, J1_FIRST_ZERO, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)
    y = c / x
    q = max(x * x - y * y, 0.0)
    q1 = q * spec_eps.thickness**2 * spec_eps.D1 / geometry.epsilon**2
    details = {
        "theta": math.log(x / y),
        "x_j": x,
        "x_i": y,
        "q1_max": q1_max,
        "buckling_q1": buckling_tension(spec_eps, geometry),
    }
    if q1 > q1_max:
        raise ResonanceUnreachableError(
            f"no resonance below destruction limit: needs Q1 = {q1:.6g} > {q1_max:.6g}"
        )
    tuned = spec_eps.with_tension(q1)
    nu_eps = ground_frequency(tuned, geometry) / (2 * math.pi)
    theta = ThetaParam.from_omega(tuned, omega)
    details["residual_at_root"] = plate.dispersion_residual_active(tuned, geometry, theta)
    return ResonanceReport(
        parameter="tension_q1",
        value=q1,
        nu_eps=nu_eps,
        nu_c=target_nu,
        mismatch=abs(nu_eps - target_nu) / target_nu,
        mode_index=1,
        details=details,
    )


def _scan_row(spec_eps, spec_c, geometry, q1) -> ScanRow:
    try:
        nu_eps = ground_frequency(spec_eps.with_tension(q1), geometry) / (2 * math.pi)
        x_needed = plate.complement_wavenumber(spec_c, 2 * math.pi * nu_eps) * geometry.a
        count = max(3, int(x_needed / math.pi) + 3)
        nus_c = complement_eigenfrequencies(spec_c, geometry.a, count)
        nu_c = min(nus_c, key=lambda n: abs(n - nu_eps))
    except NumericalError as exc:
        return ScanRow(q1, math.nan, math.nan, math.nan, False, f"{type(exc).__name__}: {exc}")
    mismatch = (nu_eps - nu_c) / (0.5 * (nu_eps + nu_c))
    return ScanRow(q1, nu_eps, nu_c, mismatch, abs(mismatch) < RESONANT_MISMATCH)


def resonance_scan(
    spec_eps: PlateSpec,
    spec_c: PlateSpec,
    geometry: CircularGeometry,
    q1_grid: Sequence[float],
    workers: int | None = None,
) -> list[ScanRow]:
    """Active-zone ground frequency against the nearest complement mode over a Q1 grid.

    ``mismatch`` is signed, ``(nu_eps - nu_c) / mean``; rows with
    ``|mismatch| < 1e-3`` are flagged resonant.  Failures are recorded per
    row and do not stop the scan.  Rows come back in grid order.
    """
    grid = [float(q) for q in q1_grid]
    if not grid:
        raise ValueError("empty Q1 grid")
    if workers is None or workers <= 1:
        return [_scan_row(spec_eps, spec_c, geometry, q) for q in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda q: _scan_row(spec_eps, spec_c, geometry, q), grid))


# --- reproduction of the hand calculations ----------------------------------

PAPER_SINH_THETA = 5.5
PAPER_EXP_THETA = 11.0
PAPER_J_ARGUMENT = 3.9
PAPER_I_ARGUMENT = 0.8
PAPER_OUTER_RADIUS = 5e6
PAPER_COMPLEMENT_WAVENUMBER = 0.6e-7


def paper_discrepancies(
    spec_eps: PlateSpec, spec_c: PlateSpec, geometry: CircularGeometry, nu0: float, mode_index: int = 1
) -> list[dict]:
    """The three hand-calculation inconsistencies, each with the printed and recomputed value.

    1. ``sinh(Theta)``: the printed quotient ``3e9/(12.56 * 2e-4 * 3e4 * 1.26e5)``
       evaluates to ~316, while the formula ``Q1/(2 omega H sqrt(D1 rho))``
       gives ~5.48, close to the printed 5.5.
    2. The ``I_0`` argument ``k_I eps`` with ``exp(Theta) = 11`` is ~0.35,
       not 0.8 (the ``J_0`` argument is ~3.81, printed 3.9).
    3. The outer radius from the full clamped-disc residual is ~1.3e6 m; the
       printed wavenumber 0.6e-7 would give ``pi/k`` ~ 5.2e7 m; printed 5e6 m.
    """
    omega = 2 * math.pi * nu0
    printed_quotient = spec_eps.tension_q1 / (12.56 * nu0 * spec_eps.thickness * 1.26e5)
    symbolic = ThetaParam.from_omega(spec_eps, omega)
    base = (omega**2 * spec_eps.density / (spec_eps.thickness**2 * spec_eps.D1)) ** 0.25
    eps = geometry.epsilon
    root11 = math.sqrt(PAPER_EXP_THETA)
    j_arg = base * root11 * eps
    i_arg = base / root11 * eps
    radius = tune_outer_radius(spec_c, nu0, mode_index)
    k = radius.details["wavenumber"]
    return [
        {
            "name": "sinh_theta",
            "formula": "Q1 / (2 omega H sqrt(D1 rho))",
            "paper_value": PAPER_SINH_THETA,
            "printed_expression_value": printed_quotient,
            "recomputed_value": math.sinh(symbolic.theta),
            "recomputed_exp_theta": math.exp(symbolic.theta),
            "paper_exp_theta": PAPER_EXP_THETA,
        },
        {
            "name": "i0_argument",
            "formula": "(omega^2 rho / (H^2 D1))^(1/4) exp(-Theta/2) eps, exp(Theta) = 11",
            "paper_value": PAPER_I_ARGUMENT,
            "recomputed_value": i_arg,
            "paper_j_argument": PAPER_J_ARGUMENT,
            "recomputed_j_argument": j_arg,
        },
        {
            "name": "outer_radius",
            "formula": "l-th root of J0'/J0 - I0'/I0 at k a, k = (omega^2 rho / (D1 H_c^2))^(1/4)",
            "paper_value": PAPER_OUTER_RADIUS,
            "recomputed_value": radius.value,
            "recomputed_asymptotic": math.pi * mode_index / k,
            "recomputed_wavenumber": k,
            "paper_wavenumber": PAPER_COMPLEMENT_WAVENUMBER,
            "paper_wavenumber_radius": math.pi * mode_index / PAPER_COMPLEMENT_WAVENUMBER,
            "mode_index": mode_index,
        },
    ]
