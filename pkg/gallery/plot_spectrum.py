"""
Spectrum of the discrete oscillator
===================================

The grid Hamiltonian ((x^d)^2 + (p^d)^2)/2 reproduces n + 1/2 for the lower
half of its spectrum and then bends away.  We look at where that happens and
how fast the error at a fixed fraction n = N/2 falls with N.
"""

import numpy as np

from qhosim import GridSpec, build_hamiltonian, fit_line

# %%
# Low levels are exact to rounding; the top half is not.
h = build_hamiltonian(GridSpec(128))
w = h.eigenvalues()
for n in (0, 1, 10, 40, 64, 80, 100, 127):
    print(f"n={n:4d}  E_n={w[n]:12.6f}  |E_n - (n+1/2)|={abs(w[n] - n - 0.5):.2e}")

# %%
# Error at n = N/2 against N: a straight line on a log scale.
sizes = [32, 48, 64, 80, 96]
logs = []
for n_dim in sizes:
    n = n_dim // 2
    logs.append(np.log(abs(build_hamiltonian(GridSpec(n_dim)).eigenvalues()[n] - (n + 0.5))))
fit = fit_line(sizes, logs)
print(f"slope {fit.slope:.4f}  r2 {fit.r_squared:.5f}")

# %%
# Eigenvectors line up with sampled Hermite functions up to n ~ 3N/4, then lose them.
from qhosim import overlap_matrix

o = overlap_matrix(h, 110)
print("diagonal overlaps at n = 0, 50, 90, 100, 110:", np.round(np.diag(o)[[0, 50, 90, 100, 110]], 4))
