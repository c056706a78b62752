"""Kirchhoff plate model of an active zone and its complement.

The active zone is a clamped circular plate of radius ``epsilon`` under
tangential compression ``Q1`` (per unit thickness).  Separating time and
factorising the compressed biharmonic operator gives two radial wavenumbers

    k_J = (omega^2 rho / (H^2 D1))**0.25 * exp(+Theta/2)
    k_I = (omega^2 rho / (H^2 D1))**0.25 * exp(-Theta/2)

with ``sinh(Theta) = Q1 / (2 omega H sqrt(D1 rho))``.  The mode
``J_p(k_J r)/J_p(k_J eps) - I_p(k_I r)/I_p(k_I eps)`` vanishes on the rim by
construction; the eigenfrequencies are the zeros of the Neumann residual.

All quantities are SI.  ``tension_q1`` is stored as a non-negative
compression magnitude; the operator carries the sign.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.integrate import trapezoid

from .errors import PoleError
from .specfun import bessel_i_scaled, bessel_j

__all__ = [
    "DESTRUCTION_LIMIT_Q1",
    "PlateSpec",
    "ThetaParam",
    "CircularGeometry",
    "BoundaryBond",
    "RadialMode",
    "BoundaryResiduals",
    "StabilityReport",
    "factorization_wavenumbers",
    "factorization_shifts",
    "build_mode",
    "radial_mode",
    "sectorial_mode",
    "dispersion_residual_active",
    "dispersion_residual_complement",
    "clamped_quotient",
    "boundary_residuals",
    "stability_check",
    "mode_energy",
    "hamiltonian_energy",
]

DESTRUCTION_LIMIT_Q1 = 0.3e10
_POLE_TOL = 1e-12


@dataclass(frozen=True)
class PlateSpec:
    """Physical parameters of a thin plate (SI units)."""

    young_modulus: float = 17.28e10
    poisson: float = 0.28
    density: float = 3380.0
    thickness: float = 3e4
    tension_q1: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.poisson < 1.0:
            raise ValueError("Poisson ratio must lie in (0, 1)")
        for name in ("young_modulus", "density", "thickness"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.tension_q1 >= 0:
            raise ValueError("tension_q1 is a compression magnitude and must be >= 0")

    @property
    def D1(self) -> float:
        """Rigidity per cubed thickness, E / (12 (1 - sigma^2))."""
        return self.young_modulus / (12.0 * (1.0 - self.poisson**2))

    @property
    def D(self) -> float:
        """Flexural rigidity D1 * H^3."""
        return self.D1 * self.thickness**3

    @property
    def Q(self) -> float:
        """Tangential compression Q1 * H."""
        return self.tension_q1 * self.thickness

    def with_tension(self, q1: float) -> "PlateSpec":
        return replace(self, tension_q1=q1)

    def with_thickness(self, thickness: float) -> "PlateSpec":
        return replace(self, thickness=thickness)


@dataclass(frozen=True)
class ThetaParam:
    """Auxiliary spectral parameter Theta paired with its angular frequency."""

    theta: float
    omega: float

    @classmethod
    def from_omega(cls, spec: PlateSpec, omega: float) -> "ThetaParam":
        if not omega > 0:
            raise ValueError("omega must be positive")
        s = spec.tension_q1 / (2.0 * omega * spec.thickness * math.sqrt(spec.D1 * spec.density))
        return cls(math.asinh(s), omega)

    @classmethod
    def from_theta(cls, spec: PlateSpec, theta: float) -> "ThetaParam":
        if not theta > 0:
            raise ValueError("theta must be positive")
        if spec.tension_q1 == 0:
            raise ValueError("theta does not parametrise omega without compression")
        omega = spec.tension_q1 / (2.0 * math.sinh(theta) * spec.thickness * math.sqrt(spec.D1 * spec.density))
        return cls(theta, omega)

    @classmethod
    def from_nu(cls, spec: PlateSpec, nu: float) -> "ThetaParam":
        return cls.from_omega(spec, 2.0 * math.pi * nu)

    @property
    def nu(self) -> float:
        return self.omega / (2.0 * math.pi)


@dataclass(frozen=True)
class CircularGeometry:
    """Active-zone radius ``epsilon`` and outer radius ``a`` (metres)."""

    epsilon: float
    a: float
    area: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not 0 < self.epsilon < self.a:
            raise ValueError("need 0 < epsilon < a")
        if self.area is None:
            object.__setattr__(self, "area", math.pi * self.a**2)


@dataclass(frozen=True)
class BoundaryBond:
    """Elastic bond ``beta`` on a boundary of signed curvature radius ``curvature_radius``.

    ``beta = math.inf`` selects the clamped (Neumann) convention.
    """

    beta: float
    curvature_radius: float

    def effective(self, spec: PlateSpec) -> float:
        """beta - D (1 - sigma) / r."""
        return self.beta - spec.D * (1.0 - spec.poisson) / self.curvature_radius


def factorization_wavenumbers(spec: PlateSpec, omega: float) -> tuple[float, float]:
    """Radial wavenumbers ``(k_J, k_I)`` of the two factor operators."""
    theta = ThetaParam.from_omega(spec, omega).theta
    base = (omega**2 * spec.density / (spec.thickness**2 * spec.D1)) ** 0.25
    return base * math.exp(0.5 * theta), base * math.exp(-0.5 * theta)


def factorization_shifts(spec: PlateSpec, omega: float) -> tuple[float, float]:
    """Eigenvalues of ``-Laplacian`` annihilated by each factor operator.

    ``[-sqrt(D1) H Lap - Q1/(2 sqrt(D1) H) -+ sqrt(omega^2 rho + Q1^2/(4 D1 H^2))] u = 0``
    holds for ``-Lap u = s u`` with ``s`` the returned value; the first equals
    ``k_J**2`` and the second ``-k_I**2``.
    """
    root_d1_h = math.sqrt(spec.D1) * spec.thickness
    half_q = spec.tension_q1 / (2.0 * root_d1_h)
    radical = math.sqrt(omega**2 * spec.density + half_q**2)
    return (half_q + radical) / root_d1_h, (half_q - radical) / root_d1_h


def _mode_wavenumbers(spec: PlateSpec, theta: ThetaParam) -> tuple[float, float]:
    base = (theta.omega**2 * spec.density / (spec.thickness**2 * spec.D1)) ** 0.25
    return base * math.exp(0.5 * theta.theta), base * math.exp(-0.5 * theta.theta)


@dataclass(frozen=True)
class RadialMode:
    """Clamped mode ``trig(p phi) [J_p(k_J r)/J_p(k_J eps) - I_p(k_I r)/I_p(k_I eps)]``."""

    order: float
    theta: ThetaParam
    k_j: float
    k_i: float
    epsilon: float
    j_rim: float
    i_rim: float  # exponentially scaled, e^{-k_I eps} I_p(k_I eps)
    parity: str = "cos"

    def _i_ratio(self, r: float):
        # I_p(k_I r)/I_p(k_I eps) and its r-derivative without overflow
        i = bessel_i_scaled(self.order, self.k_i * r)
        shift = math.exp(self.k_i * (r - self.epsilon)) / self.i_rim
        return i.value * shift, self.k_i * i.derivative * shift

    def radial(self, r: float) -> float:
        if not 0 <= r <= self.epsilon * (1 + 1e-12):
            raise ValueError("r must lie in [0, epsilon]")
        return bessel_j(self.order, self.k_j * r).value / self.j_rim - self._i_ratio(r)[0]

    def radial_derivative(self, r: float) -> float:
        return self.k_j * bessel_j(self.order, self.k_j * r).derivative / self.j_rim - self._i_ratio(r)[1]

    def angular(self, phi: float) -> float:
        return math.sin(self.order * phi) if self.parity == "sin" else math.cos(self.order * phi)

    def __call__(self, r: float, phi: float = 0.0) -> float:
        return self.angular(phi) * self.radial(r)

    def sample(self, r: np.ndarray) -> np.ndarray:
        return np.array([self.radial(float(x)) for x in r])


def build_mode(
    spec: PlateSpec, geometry: CircularGeometry, theta: ThetaParam, order: float = 0.0, parity: str = "cos"
) -> RadialMode:
    """Construct the clamped active-zone mode at ``theta``.

    Raises
    ------
    PoleError
        If ``J_p(k_J eps)`` is within 1e-12 of zero (normalisation singular).
    """
    if parity not in ("sin", "cos"):
        raise ValueError("parity must be 'sin' or 'cos'")
    k_j, k_i = _mode_wavenumbers(spec, theta)
    eps = geometry.epsilon
    j_rim = bessel_j(order, k_j * eps).value
    i_rim = bessel_i_scaled(order, k_i * eps).value
    if abs(j_rim) < _POLE_TOL:
        raise PoleError(f"J_{order}(k_J eps) = {j_rim:.3e}; perturb Theta")
    return RadialMode(order, theta, k_j, k_i, eps, j_rim, i_rim, parity)


def radial_mode(spec: PlateSpec, geometry: CircularGeometry, theta: ThetaParam, r: float) -> float:
    """Centrally symmetric clamped mode evaluated at radius ``r``."""
    return build_mode(spec, geometry, theta).radial(r)


def sectorial_mode(
    spec: PlateSpec,
    geometry: CircularGeometry,
    p: float,
    theta: ThetaParam,
    r: float,
    phi: float,
    parity: str = "sin",
) -> float:
    """Sectorial mode of order ``p`` on ``0 <= phi <= pi/p``; ``p = 0`` is the radial mode."""
    if p < 0:
        raise ValueError("order must be non-negative")
    if p > 0 and not 0 <= phi <= math.pi / p * (1 + 1e-12):
        raise ValueError("phi must lie in [0, pi/p]")
    return build_mode(spec, geometry, theta, p, parity)(r, phi)


def dispersion_residual_active(
    spec: PlateSpec, geometry: CircularGeometry, theta: ThetaParam, order: float = 0.0
) -> float:
    """Dimensionless Neumann residual of the clamped compressed disc.

    ``eps * [k_J J'_p(k_J eps)/J_p(k_J eps) - k_I I'_p(k_I eps)/I_p(k_I eps)]``,
    zero exactly at an eigenfrequency.  ``order > 0`` gives the sectorial
    companion.
    """
    k_j, k_i = _mode_wavenumbers(spec, theta)
    eps = geometry.epsilon
    return _neumann_quotient(order, k_j * eps, k_i * eps)


def _neumann_quotient(order: float, x: float, y: float) -> float:
    j = bessel_j(order, x)
    i = bessel_i_scaled(order, y)
    if abs(j.value) < _POLE_TOL:
        raise PoleError(f"J_{order}({x}) vanishes")
    return x * j.derivative / j.value - y * i.derivative / i.value


def clamped_quotient(x: float, order: float = 0.0) -> float:
    """``J'_p(x)/J_p(x) - I'_p(x)/I_p(x)``: the uncompressed clamped-disc dispersion function."""
    j = bessel_j(order, x)
    i = bessel_i_scaled(order, x)
    if abs(j.value) < _POLE_TOL:
        raise PoleError(f"J_{order}({x}) vanishes")
    return j.derivative / j.value - i.derivative / i.value


def complement_wavenumber(spec_c: PlateSpec, omega: float) -> float:
    """Wavenumber ``(omega^2 rho / (D1 H^2))**0.25`` of the uncompressed complement."""
    return (omega**2 * spec_c.density / (spec_c.D1 * spec_c.thickness**2)) ** 0.25


def dispersion_residual_complement(spec_c: PlateSpec, a: float, omega: float) -> float:
    """Neumann residual on the rim ``r = a`` of the uncompressed complement disc."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    if spec_c.tension_q1 != 0:
        raise ValueError("the complement is modelled without compression")
    return clamped_quotient(complement_wavenumber(spec_c, omega) * a)


class BoundaryResiduals(NamedTuple):
    dirichlet: float
    natural: float


# one-sided (backward) 5-point stencils at the last sample
_D1_STENCIL = np.array([25.0, -48.0, 36.0, -16.0, 3.0]) / 12.0
_D2_STENCIL = np.array([35.0, -104.0, 114.0, -56.0, 11.0]) / 12.0


def _rim_derivatives(r: np.ndarray, u: np.ndarray) -> tuple[float, float]:
    if len(r) < 5:
        raise ValueError("at least 5 radial samples are needed for the boundary stencil")
    h = r[-1] - r[-2]
    if not np.allclose(np.diff(r[-5:]), h, rtol=1e-9, atol=0):
        raise ValueError("boundary stencil requires uniform spacing near the rim")
    tail = u[-1:-6:-1]
    return float(_D1_STENCIL @ tail / h), float(_D2_STENCIL @ tail / h**2)


def boundary_residuals(spec: PlateSpec, bond: BoundaryBond, r, u) -> BoundaryResiduals:
    """Dirichlet and beta-natural residuals of a sampled centrally symmetric mode.

    The natural condition is ``[beta - D(1-sigma)/r] du/dn + D Lap u = 0`` on
    the rim ``r[-1]``.  Both residuals are normalised by the peak amplitude;
    the natural one additionally by the size of its two terms, so it is
    dimensionless.  With ``beta = inf`` it reduces to the Neumann residual
    ``|du/dn| * R / max|u|``.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    if r.shape != u.shape or r.ndim != 1:
        raise ValueError("r and u must be matching 1-D arrays")
    peak = float(np.max(np.abs(u)))
    if peak == 0:
        return BoundaryResiduals(0.0, 0.0)
    radius = float(r[-1])
    du, d2u = _rim_derivatives(r, u)
    dirichlet = abs(u[-1]) / peak
    if math.isinf(bond.beta):
        return BoundaryResiduals(dirichlet, abs(du) * radius / peak)
    lap = d2u + du / radius
    beta_eff = bond.effective(spec)
    scale = peak * (abs(beta_eff) / radius + spec.D / radius**2)
    return BoundaryResiduals(dirichlet, abs(beta_eff * du + spec.D * lap) / scale)


class StabilityReport(NamedTuple):
    classification: str
    bond_margin: float
    annotation: str


def stability_check(spec: PlateSpec, bond: BoundaryBond) -> StabilityReport:
    """Mikhlin's sufficient stability condition.

    Stable iff ``beta - D(1-sigma)/r >= 0`` and the middle-plane tension is
    stretching (``Q >= 0``).  Any compression (``tension_q1 > 0``) leaves the
    answer indeterminate.
    """
    margin = math.inf if math.isinf(bond.beta) else bond.effective(spec)
    stretching_q = -spec.tension_q1
    stable = margin >= 0 and stretching_q >= 0
    if spec.tension_q1 > 0:
        if spec.tension_q1 <= DESTRUCTION_LIMIT_Q1:
            note = "compressed; below destruction limit"
        else:
            note = "compressed; above destruction limit"
    elif margin < 0:
        note = "boundary bond weaker than the curvature term"
    else:
        note = ""
    return StabilityReport("stable" if stable else "indeterminate", margin, note)


def mode_energy(nu: float, amplitude: float, area: float, H: float, rho: float) -> float:
    """Energy of a single flexural mode, ``0.5 * (rho H A / 2) * (2 pi nu)^2 * amplitude^2``.

    The modal mass ``rho H A / 2`` is the mean square of a sinusoidal mode
    shape, so ``amplitude`` is the peak displacement.
    """
    for name, val in (("nu", nu), ("area", area), ("H", H), ("rho", rho)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    modal_mass = 0.5 * rho * H * area
    return 0.5 * modal_mass * (2.0 * math.pi * nu) ** 2 * amplitude**2


def hamiltonian_energy(spec: PlateSpec, bond: BoundaryBond, r, u, u_t) -> float:
    """Energy of a centrally symmetric state sampled on a uniform radial grid.

    ``0.5 * int[H rho u_t^2 + D (Lap u)^2 - Q1 H |grad u|^2] dA
    + 0.5 * int_rim [beta - D(1-sigma)/r] (du/dn)^2``.  Compression enters with
    a negative sign.  With ``beta = inf`` the rim term is dropped (clamped
    slope).  Area integrals use the trapezoidal rule with weight ``2 pi r``.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    u_t = np.asarray(u_t, dtype=float)
    if len(r) < 64:
        raise ValueError("grid too coarse: at least 64 radial points required")
    if r[0] != 0:
        raise ValueError("radial grid must start at the centre")
    if not np.allclose(np.diff(r), r[1] - r[0], rtol=1e-9):
        raise ValueError("radial grid must be uniform")
    du = np.gradient(u, r, edge_order=2)
    d2u = np.gradient(du, r, edge_order=2)
    lap = np.empty_like(u)
    lap[1:] = d2u[1:] + du[1:] / r[1:]
    lap[0] = 2.0 * d2u[0]
    density = spec.thickness * spec.density * u_t**2 + spec.D * lap**2 - spec.Q * du**2
    energy = 0.5 * trapezoid(density * 2.0 * np.pi * r, r)
    if not math.isinf(bond.beta):
        du_rim, _ = _rim_derivatives(r, u)
        energy += 0.5 * 2.0 * math.pi * r[-1] * bond.effective(spec) * du_rim**2
    return float(energy)
