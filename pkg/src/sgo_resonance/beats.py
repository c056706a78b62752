"""Weakly coupled oscillators: spectra, normal modes, beats and energy transfer.

A one-dimensional "small" oscillator ``(m, v)`` is bonded to a
``mu``-dimensional "large" oscillator ``(M, V)`` through a real coupling
vector ``b``:

    m u'' + v u + b.U = 0,
    M U'' + V U + b u = 0.

Eigenvalues are roots of the secular function
``F(lam) = m lam - v + sum_s b_s^2 / (V_s - M_s lam)``, which is strictly
increasing between its poles ``V_s / M_s``; each pole interval holds exactly
one root.  Coincident poles are merged with summed weight and the eigenvalues
hidden by the merge are restored by deflation.

Energies follow the convention ``xi = sqrt(m) u' + i sqrt(v) u`` with
``|xi|^2 = 2 E_small``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import brentq, minimize_scalar
from scipy.signal import find_peaks

from .errors import NumericalError, PoleError

__all__ = [
    "OscillatorSystem",
    "PerturbedSpectrum",
    "CauchySolution",
    "EnergySeries",
    "ApproxSpectrum",
    "EigenvectorPair",
    "OptimalWindow",
    "AveragedEstimate",
    "TransferResult",
    "two_osc_exact_spectrum",
    "two_osc_approx_spectrum",
    "two_osc_eigenvectors",
    "secular_function",
    "perturbed_spectrum",
    "dense_spectrum",
    "solve_cauchy",
    "small_oscillator_excitation",
    "energy_series",
    "xi_characteristic",
    "xi_analytic",
    "windowed_average",
    "windowed_series",
    "envelope_contrast",
    "optimal_window",
    "window_sweep",
    "averaged_energy_estimate",
    "measure_beat_period",
    "beat_period",
    "transfer_coefficient",
    "detuned",
    "transfer_sweep",
]

POLE_MERGE_RTOL = 1e-12
ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class OscillatorSystem:
    """Small oscillator ``(m, v)`` coupled by ``b`` to large oscillators ``(M_s, V_s)``.

    Masses in kg, stiffnesses and couplings in kg s^-2.
    """

    m: float
    v: float
    M: np.ndarray
    V: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        M = np.atleast_1d(np.asarray(self.M, dtype=float)).copy()
        V = np.atleast_1d(np.asarray(self.V, dtype=float)).copy()
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).copy()
        if not (M.ndim == V.ndim == b.ndim == 1 and M.size == V.size == b.size and M.size >= 1):
            raise ValueError("masses_large, stiffnesses_large and coupling must be vectors of equal length mu >= 1")
        for name, arr in (("m", np.array([self.m])), ("v", np.array([self.v])), ("M", M), ("V", V)):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{name} must be finite and strictly positive")
        if not np.all(np.isfinite(b)):
            raise ValueError("coupling must be finite")
        for arr in (M, V, b):
            arr.flags.writeable = False
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_epsilon(cls, m, v, M, V, epsilon) -> "OscillatorSystem":
        """Build from the symmetric coupling ``epsilon`` with ``epsilon^2 = b^2 / (m M)``."""
        M = np.atleast_1d(np.asarray(M, dtype=float))
        eps = np.broadcast_to(np.asarray(epsilon, dtype=float), M.shape)
        return cls(m, v, M, V, eps * np.sqrt(m * M))

    @property
    def mu(self) -> int:
        return int(self.M.size)

    @property
    def lambda0(self) -> float:
        return self.v / self.m

    @property
    def Lambda0(self) -> np.ndarray:
        return self.V / self.M

    @property
    def epsilon(self) -> np.ndarray:
        return self.b / np.sqrt(self.m * self.M)

    def mass_matrix(self) -> np.ndarray:
        return np.diag(np.concatenate(([self.m], self.M)))

    def stiffness_matrix(self) -> np.ndarray:
        n = self.mu + 1
        K = np.zeros((n, n))
        K[0, 0] = self.v
        K[1:, 1:] = np.diag(self.V)
        K[0, 1:] = self.b
        K[1:, 0] = self.b
        return K

    def schur_margin(self) -> float:
        """``v - sum b^2 / V``; positive iff the stiffness matrix is positive definite."""
        return self.v - float(np.sum(self.b**2 / self.V))

    def to_dict(self) -> dict:
        return {
            "mass_small": self.m,
            "stiffness_small": self.v,
            "masses_large": self.M.tolist(),
            "stiffnesses_large": self.V.tolist(),
            "coupling": self.b.tolist(),
        }


# --- two-oscillator closed forms --------------------------------------------


def two_osc_exact_spectrum(lam_m: float, lam_M: float, eps: float) -> tuple[float, float]:
    """Exact eigenvalues ``(lam_plus, lam_minus)`` of ``[[lam_m, eps], [eps, lam_M]]``.

    Written as ``lam_hi + eps^2/(|delta| + h)`` to avoid cancellation when
    ``eps`` is small.
    """
    if lam_m <= 0 or lam_M <= 0:
        raise ValueError("unperturbed eigenvalues must be positive")
    delta = 0.5 * (lam_m - lam_M)
    h = math.hypot(delta, eps)
    hi, lo = max(lam_m, lam_M), min(lam_m, lam_M)
    if h == 0.0:
        return hi, lo
    shift = eps * eps / (abs(delta) + h)
    return hi + shift, lo - shift


class ApproxSpectrum(NamedTuple):
    plus: float
    minus: float
    error: float
    bound: float
    valid: bool


def two_osc_approx_spectrum(lam_m: float, lam_M: float, eps: float) -> ApproxSpectrum:
    """Second-order eigenvalues ``lam_hi + eps^2/(2 delta)``, ``lam_lo - eps^2/(2 delta)``.

    Returns the larger of the two deviations from the exact pair in
    ``error`` and the bound ``2 eps^4 / delta^3``.  ``valid`` is false
    when ``eps > delta / 3``, outside the perturbative regime.
    """
    exact = two_osc_exact_spectrum(lam_m, lam_M, eps)
    delta = 0.5 * abs(lam_m - lam_M)
    hi, lo = max(lam_m, lam_M), min(lam_m, lam_M)
    if eps == 0.0:
        return ApproxSpectrum(hi, lo, 0.0, 0.0, True)
    if delta == 0.0:
        return ApproxSpectrum(exact[0], exact[1], 0.0, math.inf, False)
    shift = eps * eps / (2 * delta)
    plus, minus = hi + shift, lo - shift
    err = max(abs(plus - exact[0]), abs(minus - exact[1]))
    return ApproxSpectrum(plus, minus, err, 2 * eps**4 / delta**3, abs(eps) <= delta / 3)


class EigenvectorPair(NamedTuple):
    """Eigenvectors on the small-oscillator branch and the large-oscillator branch."""

    perturbative: tuple[np.ndarray, np.ndarray] | None
    exact: tuple[np.ndarray, np.ndarray]
    angle_error: float


def two_osc_eigenvectors(lam_m: float, lam_M: float, eps: float) -> EigenvectorPair:
    """First-order eigenvectors ``(1, eps/2d)``, ``(-eps/2d, 1)`` and the exact pair.

    Each pair is ordered (branch through ``lam_m``, branch through ``lam_M``)
    with ``d = (lam_m - lam_M)/2``.  At ``d = 0`` only the exact pair is given.
    """
    delta = 0.5 * (lam_m - lam_M)
    theta = 0.5 * math.atan2(eps, delta)
    v_plus = np.array([math.cos(theta), math.sin(theta)])
    v_minus = np.array([-math.sin(theta), math.cos(theta)])
    small, large = (v_plus, v_minus) if delta >= 0 else (v_minus, v_plus)
    small = small * math.copysign(1.0, small[0])
    large = large * math.copysign(1.0, large[1])
    if delta == 0.0:
        return EigenvectorPair(None, (small, large), math.nan)
    r = eps / (2 * delta)
    pert = (np.array([1.0, r]), np.array([-r, 1.0]))
    angle = abs(math.atan(r) - math.atan2(small[1], small[0]))
    return EigenvectorPair(pert, (small, large), angle)


# --- multi-mode spectrum ------------------------------------------------------


def secular_function(sys: OscillatorSystem, lam: float) -> float:
    """``lam m - v + sum_s b_s^2 / (V_s - M_s lam)``.

    Raises
    ------
    PoleError
        Within ``1e-12`` (relative) of a coupled pole ``V_s / M_s``.
    """
    den = sys.V - sys.M * lam
    active = sys.b != 0
    if np.any(np.abs(den[active]) <= 1e-12 * sys.V[active]):
        raise PoleError(f"lambda = {lam!r} sits on a pole of the secular function")
    return lam * sys.m - sys.v + float(np.sum(sys.b[active] ** 2 / den[active]))


@dataclass
class PerturbedSpectrum:
    """Eigenvalues (ascending) and mass-orthonormal eigenvectors (columns of ``vectors``).

    Row 0 of ``vectors`` is the small-oscillator component ``a``; rows 1.. are
    the large-oscillator components.
    """

    system: OscillatorSystem
    eigenvalues: np.ndarray
    vectors: np.ndarray
    deflated: np.ndarray
    normalization: np.ndarray = field(init=False)

    def __post_init__(self):
        self.normalization = self.vectors[0] ** 2

    @property
    def frequencies(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    @property
    def small_components(self) -> np.ndarray:
        return self.vectors[0]

    @property
    def orthonormality_error(self) -> float:
        G = self.vectors.T @ self.system.mass_matrix() @ self.vectors
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))

    def modal_couplings(self) -> np.ndarray:
        """``b . Psi_s`` for each mode (the drive each mode exerts on the small oscillator)."""
        return self.system.b @ self.vectors[1:]

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "frequencies": self.frequencies.tolist(),
            "eigenvectors": self.vectors.T.tolist(),
            "normalizations": self.normalization.tolist(),
            "deflated": self.deflated.tolist(),
            "orthonormality_error": self.orthonormality_error,
        }


def _merge_poles(sys: OscillatorSystem) -> list[tuple[float, float, np.ndarray]]:
    """Group (pole, weight, member indices) with coincident poles merged."""
    lam = sys.Lambda0
    order = np.argsort(lam, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and abs(lam[idx] - lam[groups[-1][0]]) <= POLE_MERGE_RTOL * lam[groups[-1][0]]:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    out = []
    for g in groups:
        members = np.array(g)
        pole = float(np.mean(lam[members]))
        weight = float(np.sum(sys.b[members] ** 2 / sys.M[members]))
        out.append((pole, weight, members))
    return out


def _secular_reduced(lam: float, m: float, lam0: float, poles: np.ndarray, weights: np.ndarray) -> float:
    return m * (lam - lam0) + float(np.sum(weights / (poles - lam)))


def _near_pole(f, pole: float, gap: float, side: int) -> float:
    """A point beside ``pole`` where the reduced secular function has the sign of ``side``."""
    t = 1e-3 * gap
    floor = 4 * np.finfo(float).eps * max(abs(pole), gap)
    while True:
        x = pole + side * t
        val = f(x)
        if (val < 0) == (side > 0) or t < floor:
            return x
        t /= 16.0


def perturbed_spectrum(sys: OscillatorSystem) -> PerturbedSpectrum:
    """All ``mu + 1`` eigenpairs of the coupled system.

    Secular roots are bracketed by the (merged) poles and refined with
    Brent's method; eigenvectors are ``a (1, -(V - M lam)^-1 b)`` scaled to
    unit mass norm ``a^2 (m + sum M_s b_s^2 / (V_s - M_s lam)^2) = 1``.
    Eigenvalues hidden by coincident poles (and every uncoupled pole) are
    restored with eigenvectors orthogonal to the coupling.

    Raises
    ------
    ValueError
        If the stiffness matrix is not positive definite.
    NumericalError
        If the root count is not ``mu + 1``.
    """
    if sys.schur_margin() <= 0:
        raise ValueError("coupled stiffness is not positive definite (v <= sum b^2 / V)")
    groups = _merge_poles(sys)
    active = [(p, w, g) for p, w, g in groups if w > 0]
    poles = np.array([p for p, _, _ in active])
    weights = np.array([w for _, w, _ in active])
    m, lam0 = sys.m, sys.lambda0

    def f(x):
        return _secular_reduced(x, m, lam0, poles, weights)

    roots: list[float] = []
    if poles.size == 0:
        roots.append(lam0)
    else:
        # leftmost interval: positive definiteness puts F(0) < 0
        hi = _near_pole(f, poles[0], poles[0], -1)
        roots.append(brentq(f, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))
        for left, right in zip(poles[:-1], poles[1:]):
            gap = right - left
            lo = _near_pole(f, left, gap, +1)
            hi = _near_pole(f, right, gap, -1)
            roots.append(brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))
        lo = _near_pole(f, poles[-1], poles[-1], +1)
        span = max(poles[-1], lam0, 1.0)
        hi = poles[-1] + span
        while f(hi) <= 0:
            span *= 2
            hi = poles[-1] + span
        roots.append(brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))

    n = sys.mu + 1
    values: list[float] = []
    columns: list[np.ndarray] = []
    deflated: list[bool] = []
    for lam in roots:
        # uncoupled members carry no component, even when their pole equals lam
        X = np.divide(-sys.b, sys.V - sys.M * lam, out=np.zeros(sys.mu), where=sys.b != 0)
        norm2 = m + float(np.sum(sys.M * X**2))
        a = 1.0 / math.sqrt(norm2)
        values.append(lam)
        columns.append(np.concatenate(([a], a * X)))
        deflated.append(False)
    for pole, weight, members in groups:
        k = members.size
        if weight > 0 and k == 1:
            continue
        sqrtM = np.sqrt(sys.M[members])
        if weight > 0:
            c = sys.b[members] / sqrtM
            q, _ = np.linalg.qr(c.reshape(-1, 1), mode="complete")
            basis = q[:, 1:]
        else:
            basis = np.eye(k)
        for j in range(basis.shape[1]):
            col = np.zeros(n)
            col[1 + members] = basis[:, j] / sqrtM
            values.append(float(np.mean(sys.Lambda0[members])) if weight > 0 else float(sys.Lambda0[members[j]]))
            columns.append(col)
            deflated.append(True)
    if len(values) != n:
        raise NumericalError(f"found {len(values)} eigenvalues, expected {n}")
    order = np.argsort(values, kind="stable")
    vectors = np.column_stack([columns[i] for i in order])
    return PerturbedSpectrum(sys, np.array(values)[order], vectors, np.array(deflated)[order])


def dense_spectrum(sys: OscillatorSystem) -> tuple[np.ndarray, np.ndarray]:
    """Generalized symmetric eigensolve of ``K psi = lam diag(m, M) psi`` (LAPACK)."""
    return scipy.linalg.eigh(sys.stiffness_matrix(), sys.mass_matrix())


# --- Cauchy problem -------------------------------------------------------------


@dataclass
class CauchySolution:
    """``U(t) = sum_s A_s Psi_s cos(omega_s t + phi_s)`` with ``A_s >= 0``, ``phi_s`` in ``[0, 2 pi)``."""

    spectrum: PerturbedSpectrum
    amplitudes: np.ndarray
    phases: np.ndarray
    initial_position: np.ndarray
    initial_velocity: np.ndarray

    def state(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Positions and velocities, shape ``(mu + 1, len(t))``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        w = self.spectrum.frequencies
        arg = np.outer(w, t) + self.phases[:, None]
        Psi = self.spectrum.vectors
        pos = Psi @ (self.amplitudes[:, None] * np.cos(arg))
        vel = Psi @ (-(self.amplitudes * w)[:, None] * np.sin(arg))
        return pos, vel


def solve_cauchy(spectrum: PerturbedSpectrum, position, velocity) -> CauchySolution:
    """Modal amplitudes and phases from initial positions ``(u0, U0)`` and velocities.

    ``A cos(phi) = Psi^T diag(m, M) U(0)``, ``A omega sin(phi) = -Psi^T diag(m, M) U'(0)``.
    """
    if spectrum.orthonormality_error > ORTHONORMAL_TOL:
        raise ValueError(f"eigenvectors are not mass-orthonormal (error {spectrum.orthonormality_error:.3g})")
    n = spectrum.system.mu + 1
    x0 = np.asarray(position, dtype=float).reshape(n)
    v0 = np.asarray(velocity, dtype=float).reshape(n)
    Mass = spectrum.system.mass_matrix()
    c = spectrum.vectors.T @ Mass @ x0
    d = spectrum.vectors.T @ Mass @ v0 / spectrum.frequencies
    amp = np.hypot(c, d)
    phase = np.mod(np.arctan2(-d, c), 2 * math.pi)
    return CauchySolution(spectrum, amp, phase, x0, v0)


def small_oscillator_excitation(spectrum: PerturbedSpectrum, displacement: float = 1.0) -> CauchySolution:
    """All energy initially on the small oscillator: ``u(0) = displacement``, everything else zero."""
    n = spectrum.system.mu + 1
    x0 = np.zeros(n)
    x0[0] = displacement
    return solve_cauchy(spectrum, x0, np.zeros(n))


@dataclass
class EnergySeries:
    t: np.ndarray
    e_small: np.ndarray
    e_large: np.ndarray
    e_coupling: np.ndarray
    xi: np.ndarray

    @property
    def e_total(self) -> np.ndarray:
        return self.e_small + self.e_large + self.e_coupling


def _energy_chunk(sol: CauchySolution, t: np.ndarray):
    sys = sol.spectrum.system
    pos, vel = sol.state(t)
    u, du = pos[0], vel[0]
    e_small = 0.5 * (sys.m * du**2 + sys.v * u**2)
    e_large = 0.5 * (sys.M @ vel[1:] ** 2 + sys.V @ pos[1:] ** 2)
    e_coup = u * (sys.b @ pos[1:])
    xi = math.sqrt(sys.m) * du + 1j * math.sqrt(sys.v) * u
    return e_small, e_large, e_coup, xi


def energy_series(sol: CauchySolution, t, workers: int | None = None, chunk: int = 65536) -> EnergySeries:
    """Partial energies, coupling energy and ``xi`` sampled at ``t``.

    Long grids are split into chunks of ``chunk`` samples, evaluated
    independently and concatenated in time order.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pieces = [t[i : i + chunk] for i in range(0, t.size, chunk)] or [t]
    if workers is not None and workers > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda p: _energy_chunk(sol, p), pieces))
    else:
        parts = [_energy_chunk(sol, p) for p in pieces]
    cols = [np.concatenate([p[i] for p in parts]) for i in range(4)]
    return EnergySeries(t, *cols)


def xi_characteristic(sol: CauchySolution, t) -> tuple[np.ndarray, np.ndarray]:
    """``xi = sqrt(m) u' + i sqrt(v) u`` and ``E_small = |xi|^2 / 2``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    sys = sol.spectrum.system
    pos, vel = sol.state(t)
    xi = math.sqrt(sys.m) * vel[0] + 1j * math.sqrt(sys.v) * pos[0]
    return xi, 0.5 * np.abs(xi) ** 2


def _half_sinc(w: np.ndarray, t: np.ndarray) -> np.ndarray:
    # sin(w t / 2) / w with the w -> 0 limit t / 2
    return 0.5 * t * np.sinc(np.multiply.outer(w, t) / (2 * math.pi))


def xi_analytic(sol: CauchySolution, t) -> np.ndarray:
    """Closed-form ``xi(t) = exp(i w0 t) [xi(0) + xi_hat(t)]`` driven by the modal force.

    The small oscillator is treated as free and forced by
    ``f(t) = sum_s (b . Psi_s) A_s cos(omega_s t + phi_s)``; ``xi_hat``
    carries the resonant ``(omega_s - w0)`` and anti-resonant
    ``(omega_s + w0)`` kernels.  Restricted to ``mu <= 2``.
    """
    spectrum = sol.spectrum
    sys = spectrum.system
    if sys.mu > 2:
        raise ValueError("closed-form xi is restricted to mu <= 2")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    w0 = math.sqrt(sys.lambda0)
    xi0 = math.sqrt(sys.m) * sol.initial_velocity[0] + 1j * math.sqrt(sys.v) * sol.initial_position[0]
    drive = spectrum.modal_couplings() * sol.amplitudes
    w = spectrum.frequencies
    dif = w - w0
    tot = w + w0
    ph = sol.phases[:, None]
    res = np.exp(1j * ph) * np.exp(0.5j * np.multiply.outer(dif, t)) * _half_sinc(dif, t)
    anti = np.exp(-1j * ph) * np.exp(-0.5j * np.multiply.outer(tot, t)) * _half_sinc(tot, t)
    xi_hat = -(drive @ (res + anti)) / math.sqrt(sys.m)
    return np.exp(1j * w0 * t) * (xi0 + xi_hat)


# --- windowed averages ----------------------------------------------------------


def _cumulative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    c = np.empty_like(y, dtype=float)
    c[0] = 0.0
    np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t), out=c[1:])
    return c


def windowed_series(t, y, width: float, centers) -> np.ndarray:
    """Trapezoidal window averages ``(1/width) int_{T-width/2}^{T+width/2} y`` at each center ``T``.

    Raises
    ------
    ValueError
        Window outside the sampled range, zero width, or fewer than 16
        samples per window.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    if not width > 0:
        raise ValueError("window width must be positive")
    lo = centers - 0.5 * width
    hi = centers + 0.5 * width
    tol = 1e-9 * max(abs(t[0]), abs(t[-1]), width)
    if np.any(lo < t[0] - tol) or np.any(hi > t[-1] + tol):
        raise ValueError("window extends outside the sampled range")
    step = float(np.max(np.diff(t)))
    if width / step < 15.0 - 1e-9:
        raise ValueError(f"window holds fewer than 16 samples ({width / step + 1:.1f})")
    c = _cumulative(t, y)
    return (np.interp(np.clip(hi, t[0], t[-1]), t, c) - np.interp(np.clip(lo, t[0], t[-1]), t, c)) / width


def windowed_average(t, y, center: float, width: float) -> float:
    """Trapezoidal average of the samples ``y(t)`` over ``[center - width/2, center + width/2]``."""
    return float(windowed_series(t, y, width, [center])[0])


def envelope_contrast(values: np.ndarray) -> float:
    """``(max - min) / (max + min)`` of a non-negative series."""
    hi, lo = float(np.max(values)), float(np.min(values))
    return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0


class OptimalWindow(NamedTuple):
    width: float
    drift: float
    leakage: float
    delta_lambda: float
    delta_omega: float


def _resonant_pair(sys: OscillatorSystem) -> tuple[float, float, float, float]:
    if sys.mu != 1:
        raise ValueError("a single resonant pair (mu = 1) is required")
    lam1, lam2 = sys.lambda0, float(sys.Lambda0[0])
    return lam1, lam2, 0.5 * abs(lam1 - lam2), abs(math.sqrt(lam2) - math.sqrt(lam1))


def optimal_window(sys: OscillatorSystem) -> OptimalWindow:
    """Window balancing slow-term drift ``b^2 D/(4 m1 m2 dlam w1)`` against leakage ``1/(D dw)``.

    ``D* = sqrt(4 m1 m2 dlam w1 / (b^2 dw))``.

    Raises
    ------
    ValueError
        Zero coupling, ``mu != 1`` or exact tuning (``dw = 0``).
    """
    lam1, _, dlam, dw = _resonant_pair(sys)
    b2 = float(sys.b[0] ** 2)
    if b2 == 0.0:
        raise ValueError("optimal window is undefined without coupling")
    if dw == 0.0:
        raise ValueError("optimal window needs a nonzero detuning")
    w1 = math.sqrt(lam1)
    kappa = b2 / (4 * sys.m * sys.M[0] * dlam * w1)
    width = math.sqrt(1.0 / (kappa * dw))
    return OptimalWindow(width, kappa * width, 1.0 / (width * dw), dlam, dw)


def beat_period(spectrum: PerturbedSpectrum, sol: CauchySolution | None = None, share: float = 1e-9) -> float:
    """Longest ``2 pi / |omega_r - omega_s|`` among modes carrying energy.

    Without a solution every pair of distinct modes is considered.
    """
    w = spectrum.frequencies
    if sol is not None:
        e = (sol.amplitudes * w) ** 2
        keep = e > share * np.sum(e)
        w = w[keep]
    gaps = np.abs(np.subtract.outer(w, w))[np.triu_indices(w.size, 1)]
    gaps = gaps[gaps > 0]
    if gaps.size == 0:
        return math.inf
    return 2 * math.pi / float(np.min(gaps))


def _sample_grid(spectrum: PerturbedSpectrum, horizon: float, per_fast: int = 24, max_samples: int = 4_000_000) -> np.ndarray:
    fast = 2 * math.pi / float(np.max(spectrum.frequencies))
    n = int(math.ceil(horizon / fast * per_fast)) + 1
    if n > max_samples:
        raise NumericalError(f"horizon needs {n} samples; reduce it or the frequency ratio")
    return np.linspace(0.0, horizon, n)


def window_sweep(sys: OscillatorSystem, widths=None, n: int = 41, decades: float = 2.0, beats: float = 4.0):
    """Beat contrast of the windowed ``|xi|^2`` over window widths.

    Energy starts on the small oscillator.  By default the sweep spans
    ``decades`` decades centred on the optimal width.  Returns
    ``(widths, contrasts, optimal)``.
    """
    opt = optimal_window(sys)
    if widths is None:
        widths = opt.width * np.logspace(-decades / 2, decades / 2, n)
    widths = np.asarray(widths, dtype=float)
    spec = perturbed_spectrum(sys)
    sol = small_oscillator_excitation(spec)
    period = beat_period(spec, sol)
    wmax = float(np.max(widths))
    horizon = beats * period + wmax
    t = _sample_grid(spec, horizon)
    xi, _ = xi_characteristic(sol, t)
    y = np.abs(xi) ** 2
    contrasts = np.empty(widths.size)
    for i, w in enumerate(widths):
        centers = np.linspace(0.5 * wmax, 0.5 * wmax + beats * period, 1024)
        contrasts[i] = envelope_contrast(windowed_series(t, y, w, centers))
    return widths, contrasts, opt


class AveragedEstimate(NamedTuple):
    values: np.ndarray
    offset: float
    envelope_amplitude: float
    envelope_period: float
    valid: bool


def averaged_energy_estimate(sys: OscillatorSystem, t, sol: CauchySolution | None = None) -> AveragedEstimate:
    """Leading-order window-averaged ``|xi|^2`` of the small oscillator.

    ``|b Psi U|^2 [2 m2 dlam lam1 / b^2 + sin^2(kappa t) / kappa^2]`` with
    ``kappa = b^2 / (4 m1 m2 dlam w1)`` and ``Psi U`` taken on the mode nearest
    the small oscillator.  ``valid`` is false outside
    ``b^2 <= dlam^2 m1 m2 / 25``.
    """
    lam1, _, dlam, _ = _resonant_pair(sys)
    b2 = float(sys.b[0] ** 2)
    if b2 == 0.0 or dlam == 0.0:
        raise ValueError("estimate needs nonzero coupling and detuning")
    spec = perturbed_spectrum(sys) if sol is None else sol.spectrum
    if sol is None:
        sol = small_oscillator_excitation(spec)
    s = int(np.argmin(np.abs(spec.eigenvalues - lam1)))
    drive = float(spec.modal_couplings()[s] * sol.amplitudes[s]) ** 2
    kappa = b2 / (4 * sys.m * sys.M[0] * dlam * math.sqrt(lam1))
    offset = drive * 2 * sys.M[0] * dlam * lam1 / b2
    t = np.atleast_1d(np.asarray(t, dtype=float))
    values = offset + drive * np.sin(kappa * t) ** 2 / kappa**2
    valid = b2 <= dlam**2 * sys.m * sys.M[0] / 25
    return AveragedEstimate(values, offset, 0.5 * drive / kappa**2, math.pi / kappa, valid)


def measure_beat_period(t, e_small, smooth: float | None = None) -> float:
    """Mean spacing of the slow maxima of ``e_small``, by peak detection.

    ``smooth`` (s) is a moving-average width applied first to remove the
    fast ripple; peaks must rise above 10% of the series range.  Each peak
    is refined by a parabola through its three samples.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(e_small, dtype=float)
    dt = t[1] - t[0]
    if smooth is not None and smooth > dt:
        k = max(int(round(smooth / dt)), 1)
        y = np.convolve(y, np.ones(k) / k, mode="same")
        t, y = t[k : -k], y[k : -k]
    peaks, _ = find_peaks(y, prominence=0.1 * (np.max(y) - np.min(y)))
    if peaks.size < 2:
        raise NumericalError("fewer than two beat maxima in the series")
    peaks = peaks[(peaks > 0) & (peaks < y.size - 1)]
    y0, y1, y2 = y[peaks - 1], y[peaks], y[peaks + 1]
    denom = y0 - 2 * y1 + y2
    shift = np.where(denom != 0, 0.5 * (y0 - y2) / np.where(denom != 0, denom, 1.0), 0.0)
    times = t[peaks] + shift * dt
    return float(np.mean(np.diff(times)))


class TransferResult(NamedTuple):
    k: float
    t_max: float
    horizon: float
    beat_period: float


def transfer_coefficient(sys: OscillatorSystem, horizon: float | None = None, n_beats: float = 3.0) -> TransferResult:
    """Largest fraction of the total energy that reaches the large oscillator.

    Energy starts on the small oscillator.  The modal solution is sampled
    over ``n_beats`` beat periods (or ``horizon``), and the maximum of
    ``E_large`` is refined by bounded minimization around the best sample.
    ``k = (max E_large - E_large(0)) / E_total``.

    Raises
    ------
    ValueError
        If ``horizon`` is shorter than one beat period.
    """
    spec = perturbed_spectrum(sys)
    sol = small_oscillator_excitation(spec)
    period = beat_period(spec, sol)
    if not math.isfinite(period):
        return TransferResult(0.0, 0.0, 0.0 if horizon is None else horizon, period)
    if horizon is None:
        horizon = n_beats * period
    elif horizon < period:
        raise ValueError(f"horizon {horizon:.6g} s is shorter than one beat period; need at least {period:.6g} s")
    t = _sample_grid(spec, horizon, per_fast=16)
    e = energy_series(sol, t)
    total = float(e.e_total[0])
    i = int(np.argmax(e.e_large))
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, t.size - 1)]

    def neg(x):
        return -float(energy_series(sol, [x]).e_large[0])

    best_t, best = t[i], e.e_large[i]
    if hi > lo:
        r = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12 * max(hi, 1.0)})
        if -r.fun > best:
            best_t, best = float(r.x), -float(r.fun)
    k = (best - float(e.e_large[0])) / total
    return TransferResult(float(k), float(best_t), float(horizon), period)


def detuned(sys: OscillatorSystem, detuning: float) -> OscillatorSystem:
    """Copy of a ``mu = 1`` system with ``Omega0 = omega0 (1 + detuning)`` (large stiffness adjusted)."""
    if sys.mu != 1:
        raise ValueError("detuning is defined for mu = 1")
    V = sys.M * sys.lambda0 * (1.0 + detuning) ** 2
    return OscillatorSystem(sys.m, sys.v, sys.M, V, sys.b)


def transfer_sweep(sys: OscillatorSystem, detunings: Sequence[float], workers: int | None = None) -> list[tuple[float, float]]:
    """``(detuning, k)`` for each relative frequency detuning ``dw / omega0``, in input order."""
    def one(d):
        return float(d), transfer_coefficient(detuned(sys, float(d))).k

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, detunings))
    return [one(d) for d in detunings]
