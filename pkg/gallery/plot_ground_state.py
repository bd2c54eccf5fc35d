"""
Preparing the ground state from a Gaussian
==========================================

A narrow discrete Gaussian is spread by free evolution and then un-chirped.
The error falls off exponentially in the width delta until it hits the
double-precision floor around delta = 8.
"""

import numpy as np

from qhosim import GridSpec, fit_line, prepare_ground

g = GridSpec(512)
deltas = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 12.0, 16.0]
errs = []
for d in deltas:
    _, err, params = prepare_ground(g, d)
    errs.append(err)
    print(f"delta={d:5.1f}  t={params.t:.4f}  t'={params.t_prime:.4f}  error={err:.3e}")

# %%
# Fit the clean part only.
fit = fit_line(deltas[:6], np.log(errs[:6]))
print(f"ln(error) ~ {fit.slope:.3f} * delta, r2 {fit.r_squared:.4f}")

# %%
# The other sign of the p^2 exponent does not prepare anything.
print("p2_sign=-1 error:", prepare_ground(g, 12.0, p2_sign=-1)[1])
