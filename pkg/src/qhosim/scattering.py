"""Scattering amplitudes, a classical Hadamard test and the fractional FT.

Amplitudes <phi'|U(t)|phi> with |phi> = sum_n c_n |psi_n> have the closed
form sum_n conj(c'_n) c_n exp(-i (n+1/2) t) for the continuous oscillator;
the discrete model reproduces them in its low-energy subspace.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .oscillator import GridSpec, build_hamiltonian, hermite_eval, hermite_states
from .trotter import TrotterPlan, exact_propagate, run_plan

SHOT_CHUNK = 1 << 16


@dataclass(frozen=True)
class SpectralCoefficients:
    """Coefficients c_0 .. c_{N'} of a state in the Hermite basis."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise UsageError("coefficients must be a non-empty 1-d array")
        if abs(np.vdot(c, c).real - 1.0) > 1e-12:
            raise UsageError("coefficients must have unit norm")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def normalized(cls, values):
        c = np.asarray(values, dtype=complex)
        return cls(c / np.linalg.norm(c))

    @property
    def n_prime(self):
        return self.coeffs.size - 1


def cv_amplitude(c, c_prime, t):
    """sum_n conj(c'_n) c_n exp(-i (n+1/2) t)."""
    if c.n_prime != c_prime.n_prime:
        raise UsageError("coefficient vectors must have the same length")
    n = np.arange(c.coeffs.size)
    return complex(np.sum(np.conj(c_prime.coeffs) * c.coeffs * np.exp(-1j * (n + 0.5) * t)))


def discrete_state(grid, c):
    """sum_n c_n |psi_n^d>, normalized; also returns the norm before scaling."""
    psi = hermite_states(grid, c.n_prime)
    v = psi @ c.coeffs
    norm = float(np.linalg.norm(v))
    return v / norm, norm


def _evolve(hamiltonian, state, t, method):
    if isinstance(method, TrotterPlan):
        if not math.isclose(method.t, t, rel_tol=1e-12):
            raise UsageError(f"plan was built for t={method.t}, not t={t}")
        return run_plan(method, hamiltonian, state)
    if method == "exact":
        return exact_propagate(hamiltonian, t, state)
    raise UsageError(f"method must be 'exact' or a TrotterPlan, got {method!r}")


def discrete_amplitude(hamiltonian, c, c_prime, t, method="exact", final="spectral"):
    """<phi'^d| U^d(t) |phi^d> on the grid, or <j| U^d(t) |phi^d> for final=j.

    ``final`` is "spectral" or an integer grid index j in [-N/2, N/2).
    """
    grid = hamiltonian.grid
    if c.n_prime > grid.low_energy_max():
        raise UsageError(f"N' = {c.n_prime} exceeds the low-energy range of N = {grid.n_dim}")
    phi, _ = discrete_state(grid, c)
    evolved = _evolve(hamiltonian, phi, t, method)
    if final == "spectral":
        if c_prime.n_prime > grid.low_energy_max():
            raise UsageError("c_prime exceeds the low-energy range")
        target, _ = discrete_state(grid, c_prime)
        return complex(np.vdot(target, evolved))
    j = int(final)
    if not -grid.n_dim // 2 <= j < grid.n_dim // 2:
        raise UsageError(f"position index {j} is off the grid")
    return complex(evolved[j + grid.n_dim // 2])


def cv_position_amplitude(grid, c, t, j):
    """(2 pi/N)^(1/4) <x_j| U(t) |phi> for the continuous oscillator."""
    n = np.arange(c.coeffs.size)
    x = grid.x[j + grid.n_dim // 2]
    psi = np.array([hermite_eval(k, x) for k in n])
    return complex(grid.prefactor * np.sum(c.coeffs * np.exp(-1j * (n + 0.5) * t) * psi))


def householder_preparer(target):
    """Unitary W (as a pair of callables W, W^dagger) with W|0> = target.

    Index 0 stands for the reference basis state.  W is a phase times a
    Householder reflection, so both directions cost O(N).
    """
    target = np.asarray(target, dtype=complex)
    target = target / np.linalg.norm(target)
    t0 = target[0]
    phase = t0 / abs(t0) if abs(t0) > 0 else 1.0
    u = -np.conj(phase) * target
    u[0] += 1.0
    un = np.linalg.norm(u)
    if un < 1e-15:
        def reflect(v):
            return np.asarray(v, dtype=complex).copy()
    else:
        u = u / un

        def reflect(v):
            v = np.asarray(v, dtype=complex)
            return v - 2.0 * u * np.vdot(u, v)

    def forward(v):
        return phase * reflect(v)

    def backward(v):
        return np.conj(phase) * reflect(v)

    return forward, backward


def _controlled_expectations(apply_v, dim):
    """Exact <sigma_x> and <sigma_y> of the ancilla after the controlled-V circuit."""
    # ancilla-major register: first half |0>_a branch, second half |1>_a branch
    e0 = np.zeros(dim, dtype=complex)
    e0[0] = 1.0
    branch1 = np.asarray(apply_v(e0), dtype=complex)
    # after the final Hadamard the branches are (|0>|e0> + |1>|V e0>)/sqrt2, so
    # <sx> = 2 Re<a0|a1> and <sy> = 2 Im<a0|a1>; the 1/2 from the amplitudes
    # cancels the 2 and is left out to keep V = 1 exact
    overlap = np.vdot(e0, branch1)
    return overlap.real, overlap.imag


def _sample_counts(prob, shots, seed, workers):
    """Number of +1 outcomes among ``shots`` Bernoulli(prob) trials.

    Shots are cut into fixed chunks, each with its own child seed, so the
    total does not depend on how the chunks are spread over workers.
    """
    n_chunks = -(-shots // SHOT_CHUNK)
    sizes = [SHOT_CHUNK] * (n_chunks - 1) + [shots - SHOT_CHUNK * (n_chunks - 1)]
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)

    def draw(i):
        return int(np.random.default_rng(seeds[i]).binomial(sizes[i], prob))

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return sum(pool.map(draw, range(n_chunks)))
    return sum(draw(i) for i in range(n_chunks))


def hadamard_test(apply_v, dim, shots=None, seed=None, workers=1):
    """Estimate <0|V|0> from the ancilla readouts of a Hadamard test.

    With ``shots=None`` the expectations are exact.  Otherwise ``shots``
    measurements are simulated for each of the two readouts; ``seed`` is
    then required.
    """
    sx, sy = _controlled_expectations(apply_v, dim)
    if shots is None:
        return complex(sx, sy)
    if shots < 1:
        raise UsageError(f"shots must be positive, got {shots}")
    if seed is None:
        raise UsageError("a seed is required for sampled Hadamard tests")
    seq = np.random.SeedSequence(seed)
    sx_seed, sy_seed = (int(s.generate_state(1)[0]) for s in seq.spawn(2))
    est = []
    for mean, sd in ((sx, sx_seed), (sy, sy_seed)):
        prob = min(max((1.0 + mean) / 2.0, 0.0), 1.0)
        plus = _sample_counts(prob, shots, sd, workers)
        est.append(2.0 * plus / shots - 1.0)
    return complex(est[0], est[1])


def amplitude_unitary(hamiltonian, c, c_prime, t):
    """V = W'^dagger U(t) W as a callable, where W|0> = phi^d and W'|0> = phi'^d."""
    grid = hamiltonian.grid
    phi, _ = discrete_state(grid, c)
    phi_p, _ = discrete_state(grid, c_prime)
    w, _ = householder_preparer(phi)
    _, wp_dag = householder_preparer(phi_p)

    def apply_v(v):
        return wp_dag(exact_propagate(hamiltonian, t, w(v)))

    return apply_v


def frft_apply(hamiltonian, signal, a, method="exact"):
    """Fractional Fourier transform of order a: exp(i a pi/4) U(a pi/2) signal.

    Hermite states pick up exp(-i n a pi/2); a = 1 approximates F_c on
    low-energy signals.  The first argument is the oscillator Hamiltonian
    or just its grid.  ``method`` is "exact" or a TrotterPlan for
    t = a pi/2.
    """
    if isinstance(hamiltonian, GridSpec):
        hamiltonian = build_hamiltonian(hamiltonian)
    signal = hamiltonian.grid.check_state(signal)
    if a == 0:
        return signal.copy()
    t = a * math.pi / 2.0
    if isinstance(method, TrotterPlan) and t < 0:
        raise UsageError("Trotter plans need a positive order")
    return np.exp(1j * a * math.pi / 4.0) * _evolve(hamiltonian, signal, t, method)


def read_signal_csv(path, n_dim=None):
    """Read a (re, im) CSV with one row per grid point; a header row is optional."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                re_v, im_v = float(rec[0]), float(rec[1])
            except (ValueError, IndexError):
                if not rows:
                    continue  # header
                raise UsageError(f"malformed signal row {rec!r} in {path}") from None
            rows.append(complex(re_v, im_v))
    sig = np.array(rows, dtype=complex)
    if n_dim is not None and sig.size != n_dim:
        raise UsageError(f"signal has {sig.size} rows, expected {n_dim}")
    return sig


def write_signal_csv(path, signal):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("re,im\n")
        for z in np.asarray(signal, dtype=complex):
            fh.write(f"{z.real:.17g},{z.imag:.17g}\n")
