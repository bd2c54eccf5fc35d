"""
Fractional Fourier transform
============================

Oscillator evolution for time a*pi/2, with a global phase exp(i a pi/4), is a
rotation in phase space.  Order 1 is the centered DFT on low-energy signals.
"""

import numpy as np

from qhosim import GridSpec, build_hamiltonian, centered_dft_apply, frft_apply, hermite_states

h = build_hamiltonian(GridSpec(128))
rng = np.random.default_rng(0)
basis = hermite_states(h.grid, 32).astype(complex)
v = basis @ (rng.normal(size=33) + 1j * rng.normal(size=33))
v /= np.linalg.norm(v)

print("||F_1 v - F_c v|| =", np.linalg.norm(frft_apply(h, v, 1) - centered_dft_apply(v)))
print("||F_4 v - v||     =", np.linalg.norm(frft_apply(h, v, 4) - v))
a, b = 0.3, 1.45
print("additivity defect  =", np.linalg.norm(frft_apply(h, frft_apply(h, v, a), b) - frft_apply(h, v, a + b)))

# %%
# A Gaussian bump off centre travels around phase space.
x = h.grid.x
bump = np.exp(-((x - 3.0) ** 2) / 2).astype(complex)
bump /= np.linalg.norm(bump)
for order in (0.0, 0.5, 1.0, 1.5, 2.0):
    out = frft_apply(h, bump, order)
    mean = float(np.sum(x * np.abs(out) ** 2))
    print(f"a={order:3.1f}: <x> = {mean:+.3f}")
