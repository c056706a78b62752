"""Compressed active zone of a clamped plate: Theta, mode shape, dispersion residual.

Walks the hand calculation for a 260 km active zone under Q1 = 3e9 N/m and
shows where the recomputed numbers differ from the printed ones.
"""
import math

import numpy as np

from sgo_resonance import plate, resonance

spec = plate.PlateSpec(thickness=3e4, tension_q1=3e9)
geom = plate.CircularGeometry(epsilon=2.6e5, a=5e6)
nu0 = 2e-4

th = plate.ThetaParam.from_nu(spec, nu0)
print(f"D1 = {spec.D1:.4e} N m^-2")
print(f"sinh(Theta) = {math.sinh(th.theta):.4f}, e^Theta = {math.exp(th.theta):.3f}")

# Bessel arguments at the rim with the rounded e^Theta = 11
th11 = plate.ThetaParam(math.log(11.0), th.omega)
k_j, k_i = plate._mode_wavenumbers(spec, th11)
print(f"k_J eps = {k_j * geom.epsilon:.4f}, k_I eps = {k_i * geom.epsilon:.4f}")

res = plate.dispersion_residual_active(spec, geom, th)
print(f"dispersion residual at the printed data: {res:+.4f}")

mode = plate.build_mode(spec, geom, th)
r = np.linspace(0.0, geom.epsilon, 6)
print("radial mode  r/eps:", np.round(r / geom.epsilon, 2))
print("             u(r): ", np.round([mode.radial(x) for x in r], 4))

print("first clamped-disc roots:", np.round(resonance.clamped_disc_roots(4), 6))
