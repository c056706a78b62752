"""A small oscillator coupled to a large one: spectrum, beats and energy transfer."""
import math

import numpy as np

from sgo_resonance import beats

sys = beats.OscillatorSystem(m=1.0, v=1.0, M=[1.0], V=[1.0], b=[0.02])
spec = beats.perturbed_spectrum(sys)
print("eigenvalues:", spec.eigenvalues)

sol = beats.small_oscillator_excitation(spec)
period = beats.beat_period(spec, sol)
t = np.linspace(0.0, 3 * period, 30_001)
e = beats.energy_series(sol, t)
print(f"beat period {period:.2f}, measured {beats.measure_beat_period(t, e.e_small):.2f}")
print(f"total energy drift {np.max(np.abs(e.e_total / e.e_total[0] - 1)):.1e}")
print(f"small-oscillator energy at half beat: {np.interp(period / 2, t, e.e_small):.4f}")

# transfer falls off as the large oscillator is detuned
for d, k in beats.transfer_sweep(sys, [0.0, 0.01, 0.02, 0.04, 0.08]):
    print(f"  detuning {d:.2f}: k = {k:.4f}")

# a starlet: three large oscillators around the small one
star = beats.OscillatorSystem(1.0, 1.0, [1.0, 1.0, 1.0], [0.95, 1.0, 1.05], [0.01, 0.01, 0.01])
print("starlet eigenvalues:", np.round(beats.perturbed_spectrum(star).eigenvalues, 6))

# the balancing window and what it does to the visible beat
detuned = beats.OscillatorSystem(1.0, 1.0, [1.0], [1.1], [0.004])
opt = beats.optimal_window(detuned)
widths, contrast, _ = beats.window_sweep(detuned, n=9)
beat = 2 * math.pi / opt.delta_omega
print(f"optimal window {opt.width:.1f} against a beat of {beat:.1f}")
for w, c in zip(widths, contrast):
    print(f"  width {w:9.1f}: contrast {c:.2e}")
