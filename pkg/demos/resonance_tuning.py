"""Tuning the active zone against its complement.

The outer radius fixes the complement frequency; the compression lowers the
active-zone frequency until both meet at nu0.
"""
import numpy as np

from sgo_resonance import plate, resonance
from sgo_resonance.errors import ResonanceUnreachableError

active = plate.PlateSpec(thickness=3e4, tension_q1=3e9)
complement = plate.PlateSpec(thickness=1e5)
geom = plate.CircularGeometry(2.6e5, 5e6)
nu0 = 2e-4

rep = resonance.tune_outer_radius(complement, nu0, paper_reference=5e6)
print(f"outer radius for nu0: a = {rep.value:.5e} m (reference 5e6 m)")
print("  ", rep.details["paper_reference_flag"])

qc = resonance.buckling_tension(active, geom)
print(f"buckling compression: Q1 = {qc:.4e} N/m")
try:
    resonance.tune_tension(active, geom, nu0)
except ResonanceUnreachableError as exc:
    print("tension tuning:", exc)
lifted = resonance.tune_tension(active, geom, nu0, q1_max=3.05e9)
print(f"  with the limit lifted: Q1 = {lifted.value:.4e} N/m")

# each row is compared with the nearest complement mode, so nu_c steps as nu_eps falls
tuned = plate.CircularGeometry(geom.epsilon, rep.value)
for row in resonance.resonance_scan(active, complement, tuned, np.linspace(2.0e9, 3.0e9, 11)):
    flag = "*" if row.flagged else " "
    print(f"  Q1 = {row.q1:.2e}  nu_eps = {row.nu_eps_hz * 1e6:8.3f}  nu_c = {row.nu_c_hz * 1e6:8.3f} uHz  mismatch = {row.mismatch:+.4f} {flag}")

for d in resonance.paper_discrepancies(active, complement, geom, nu0):
    print(f"{d['name']:>12}: printed {d['paper_value']}, recomputed {d['recomputed_value']:.4g}")
