"""
Trotter-Suzuki error scaling
============================

A single step of the order-p formula errs by O(s^(2p+1)).  For the oscillator
the error also grows with the level n, roughly linearly at high order.
"""

import math

import numpy as np

from qhosim import GridSpec, build_hamiltonian, fit_line, plan_error, select_plan, trotter_errors
from qhosim import make_hermite_state

h = build_hamiltonian(GridSpec(64))
spans = np.array([0.02, 0.04, 0.08, 0.16])

# %%
# Order in s.
for p in (1, 2):
    errs = [trotter_errors(h, p, s, [2])[0] for s in spans]
    print(f"p={p}: errors {np.array2string(np.array(errs), precision=2)}  "
          f"slope {fit_line(np.log(spans), np.log(errs)).slope:.3f}")

# %%
# Dependence on n at p=4, s=1.
h200 = build_hamiltonian(GridSpec(200))
ns = list(range(4, 51))
errs = trotter_errors(h200, 4, 1.0, ns)
print("n-exponent at p=4:", round(fit_line(np.log(ns), np.log(errs)).slope, 3))

# %%
# Picking (p, k) for a target accuracy; M counts exponentials.
for n_dim in (64, 128, 256, 512):
    hh = build_hamiltonian(GridSpec(n_dim))
    plan = select_plan(n_dim // 2, math.pi / 2, 1e-3)
    err = plan_error(plan, hh, make_hermite_state(hh.grid, n_dim // 2).amplitudes)
    print(f"N={n_dim}: p={plan.p} k={plan.k} M={plan.exponentials} error={err:.2e}")
