"""
Climbing the Jaynes-Cummings ladder
===================================

Coupling the oscillator to a qubit through (x sigma_x - p sigma_y)/sqrt2 moves
|phi_n>|0> to |phi_{n+1}>|1> in time pi/(2 sqrt(n+1)).  A qubit flip after each
rung readies the next one.
"""

import numpy as np

from qhosim import GridSpec, jc_build, jc_step_defect, ladder_prepare
from qhosim import fit_line

g = GridSpec(64)
system = jc_build(g)

for n in range(5):
    _, fe, _ = ladder_prepare(g, n, system=system)
    _, ft, m = ladder_prepare(g, n, 0.05, "trotter", system=system)
    print(f"n={n}: exact {fe:.8f}   trotter {ft:.6f} ({m} steps per rung)")

# %%
# The first-order split step errs by O(s^2) on the rung pair.
spans = np.array([0.025, 0.05, 0.1, 0.2])
errs = [jc_step_defect(system, 0, s) for s in spans]
print("step defect exponent:", round(fit_line(np.log(spans), np.log(errs)).slope, 3))

# %%
# Starting from the Gaussian preparation instead of the exact ground state.
_, fid, _ = ladder_prepare(g, 3, start="prepared", delta=3.0, system=system)
print("prepared start, n=3:", fid)
