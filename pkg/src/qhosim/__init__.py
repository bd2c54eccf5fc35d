"""Simulation of the harmonic oscillator on a finite grid.

The discrete model replaces position by a diagonal grid operator and
momentum by its conjugate under the centered DFT.  Its low-energy
spectrum and eigenvectors track the continuous oscillator to exponential
accuracy, which makes Trotter product formulas, scattering amplitudes and
state preparation checkable against closed forms.
"""

__version__ = "0.1.0"

from .errors import DegreeOverflow, NumericalFailure, UsageError
from .numerics import EigenDecomposition, FitResult, centered_dft_apply, eigh, fft_unitary, fit_line
from .oscillator import (
    GridSpec,
    HermiteState,
    ModelHamiltonian,
    apply_quadratic_phase,
    build_hamiltonian,
    cv_matrix_element,
    discrete_matrix_element,
    hermite_eval,
    hermite_states,
    make_hermite_state,
    overlap_matrix,
)
from .trotter import (
    GeneratorSchedule,
    TrotterPlan,
    apply_schedule,
    build_schedule,
    exact_propagate,
    plan_error,
    run_plan,
    select_plan,
    trotter_error,
    trotter_errors,
)
from .sp2 import Sp2Poly, Sp2Vector, adjoint, defect_poly, lowest_degree
from .prep import (
    GaussianPrepParams,
    JCSystem,
    gaussian_state,
    jc_build,
    jc_exact_step,
    jc_step_defect,
    jc_trotter_step,
    ladder_prepare,
    prepare_ground,
    truncated_gaussian_prep,
)
from .scattering import (
    SpectralCoefficients,
    amplitude_unitary,
    cv_amplitude,
    discrete_amplitude,
    frft_apply,
    hadamard_test,
)
