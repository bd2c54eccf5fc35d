"""State preparation: Gaussian ground states and the Jaynes-Cummings ladder.

Ground state
    A discrete Gaussian of width delta (in index units) is spread by free
    evolution exp(+i p^2 t) and then un-chirped by exp(+i x^2 t').  The
    result approaches the oscillator ground state as delta grows.

Excited states
    H_JC = (x (x) sigma_x - p (x) sigma_y)/sqrt(2) couples |phi_n>|0> to
    |phi_{n+1}>|1>.  Evolving for t_n = pi/(2 sqrt(n+1)) and flipping the
    qubit climbs one rung.  Amplitudes are stored with index 2j + q.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .numerics import centered_dft_apply, centered_dft_matrix, eigh
from .oscillator import apply_quadratic_phase, build_hamiltonian, make_hermite_state

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
# columns are the sigma_y eigenvectors for +1 and -1
SIGMA_Y_BASIS = np.array([[1, 1], [1j, -1j]], dtype=complex) / math.sqrt(2.0)
DEFAULT_LADDER_CONSTANT = 4.0


def gaussian_state(grid, delta):
    """exp(-j**2/(2 delta)) on the grid indices, normalized."""
    if not delta > 0:
        raise UsageError(f"delta must be positive, got {delta}")
    j = grid.indices.astype(float)
    amp = np.exp(-(j * j) / (2.0 * delta))
    return (amp / np.linalg.norm(amp)).astype(complex)


@dataclass(frozen=True)
class GaussianPrepParams:
    delta: float
    sigma_sq: float
    t: float
    t_prime: float
    alpha: float = 0.0

    @classmethod
    def from_grid(cls, grid, delta):
        if not delta > 0:
            raise UsageError(f"delta must be positive, got {delta}")
        sigma_sq = math.pi * delta / grid.n_dim
        if not sigma_sq < 0.5:
            raise UsageError(f"sigma^2 = pi*delta/N = {sigma_sq:.4g} must be below 1/2")
        t = math.sqrt(sigma_sq * (2.0 - 4.0 * sigma_sq)) / 2.0
        t_prime = 1.0 / (4.0 * t + 4.0 * sigma_sq ** 2 / t)
        return cls(delta, sigma_sq, t, t_prime)


def prepare_ground(grid, delta, p2_sign=+1, params=None):
    """Free evolution plus chirp applied to the Gaussian state.

    Returns ``(state, error, params)`` where ``state`` is the raw circuit
    output, ``params.alpha`` the phase of its overlap with psi_0^d and
    ``error = ||psi_0^d - exp(-i alpha) state||``.  ``p2_sign=-1`` runs the
    alternative exp(-i p^2 t) ordering for comparison.
    """
    if p2_sign not in (1, -1):
        raise UsageError("p2_sign must be +1 or -1")
    if params is None:
        params = GaussianPrepParams.from_grid(grid, delta)
    state = gaussian_state(grid, delta)
    state = apply_quadratic_phase(state, "P2", -p2_sign * params.t, grid)
    state = apply_quadratic_phase(state, "X2", -params.t_prime, grid)
    psi0 = make_hermite_state(grid, 0).amplitudes
    alpha = float(np.angle(np.vdot(psi0, state)))
    error = float(np.linalg.norm(psi0 - np.exp(-1j * alpha) * state))
    params = GaussianPrepParams(params.delta, params.sigma_sq, params.t, params.t_prime, alpha)
    return state, error, params


def truncation_index(delta, eps):
    """j_0 = ceil(sqrt(2 delta ln(1/eps)))."""
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    return math.ceil(math.sqrt(2.0 * delta * math.log(1.0 / eps)))


def truncated_gaussian_prep(grid, delta, eps):
    """Gaussian state supported on |j| <= j_0 only, renormalized."""
    j0 = truncation_index(delta, eps)
    full = gaussian_state(grid, delta)
    out = np.where(np.abs(grid.indices) <= j0, full, 0.0)
    return out / np.linalg.norm(out)


@dataclass(frozen=True, eq=False)
class JCSystem:
    """Discrete Jaynes-Cummings Hamiltonian on oscillator (x) qubit."""

    grid: object
    matrix: np.ndarray
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_dim(self):
        return self.grid.n_dim

    @property
    def eig(self):
        if "eig" not in self._cache:
            with self._lock:
                if "eig" not in self._cache:
                    self._cache["eig"] = eigh(self.matrix)
        return self._cache["eig"]

    def oscillator_eigenvectors(self):
        if "osc" not in self._cache:
            with self._lock:
                if "osc" not in self._cache:
                    self._cache["osc"] = build_hamiltonian(self.grid).eig.eigenvectors
        return self._cache["osc"]

    def product_state(self, osc, qubit):
        """|osc> (x) |qubit> for qubit in {0, 1}."""
        q = np.zeros(2, dtype=complex)
        q[qubit] = 1.0
        return np.kron(np.asarray(osc, dtype=complex), q)

    def gamma(self, n, sign=+1):
        """(|phi_n>|0> + sign |phi_{n+1}>|1>)/sqrt(2)."""
        phi = self.oscillator_eigenvectors()
        return (self.product_state(phi[:, n], 0) + sign * self.product_state(phi[:, n + 1], 1)) / math.sqrt(2.0)


def jc_build(grid):
    """Dense H_JC with p^d = F_c^-1 diag(x) F_c."""
    x = grid.x
    f = centered_dft_matrix(grid.n_dim)
    p = f.conj().T @ (x[:, None] * f)
    h = (np.kron(np.diag(x).astype(complex), SIGMA_X) - np.kron(p, SIGMA_Y)) / math.sqrt(2.0)
    return JCSystem(grid, 0.5 * (h + h.conj().T))


def rung_time(n):
    return math.pi / (2.0 * math.sqrt(n + 1))


def jc_exact_step(system, n, state, t=None):
    """exp(-i H_JC t) state with t = t_n unless given explicitly."""
    if n < 0:
        raise UsageError(f"rung index must be non-negative, got {n}")
    t = rung_time(n) if t is None else t
    state = np.asarray(state, dtype=complex)
    if t == 0:
        return state.copy()
    eig = system.eig
    v = eig.eigenvectors
    return v @ (np.exp(-1j * eig.eigenvalues * t) * (v.conj().T @ state))


def _qubit_rotate(pairs, u):
    # pairs has shape (N, 2); apply u on the qubit index
    return pairs @ u.T


def jc_trotter_step(grid, state, s):
    """W(s) = exp(-i (x sigma_x) s/sqrt2) exp(i (p sigma_y) s/sqrt2) applied to state."""
    x = grid.x
    theta = s / math.sqrt(2.0)
    v = np.asarray(state, dtype=complex).reshape(grid.n_dim, 2)
    # p (x) sigma_y part first: F_c on the oscillator, sigma_y eigenbasis on the qubit
    w = centered_dft_apply(v, axis=0)
    w = _qubit_rotate(w, SIGMA_Y_BASIS.conj().T)
    w = w * np.exp(1j * theta * np.outer(x, [1.0, -1.0]))
    w = _qubit_rotate(w, SIGMA_Y_BASIS)
    v = centered_dft_apply(w, "inverse", axis=0)
    # x (x) sigma_x part: Hadamard maps sigma_x to sigma_z
    w = _qubit_rotate(v, HADAMARD)
    w = w * np.exp(-1j * theta * np.outer(x, [1.0, -1.0]))
    v = _qubit_rotate(w, HADAMARD)
    return v.reshape(-1)


def jc_step_defect(system, n, s):
    """||(W(s) - exp(-i H_JC s)) |gamma_n^+>||."""
    g = system.gamma(n, +1)
    return float(np.linalg.norm(jc_trotter_step(system.grid, g, s) - jc_exact_step(system, n, g, t=s)))


def _flip_qubit(state):
    return state.reshape(-1, 2)[:, ::-1].reshape(-1).copy()


def ladder_steps(n_target, eps, constant=DEFAULT_LADDER_CONSTANT):
    """First-order steps per rung, m = ceil(C n_target / eps)."""
    return max(1, math.ceil(constant * n_target / eps))


def ladder_prepare(grid, n_target, eps=0.05, mode="exact", constant=DEFAULT_LADDER_CONSTANT,
                   start="eigh", delta=None, system=None):
    """Climb from the ground state to rung n_target.

    ``start="eigh"`` begins from the ground eigenvector, ``start="prepared"``
    from ``prepare_ground(grid, delta)``.  Returns ``(state, fidelity, m)``
    where fidelity is |<phi_{n_target}, 0 | state>| and m is the number of
    Trotter steps per rung (0 in exact mode).
    """
    if mode not in ("exact", "trotter"):
        raise UsageError(f"mode must be 'exact' or 'trotter', got {mode!r}")
    if not 0 <= n_target <= grid.low_energy_max():
        raise UsageError(f"n_target must lie in [0, {grid.low_energy_max()}]")
    if mode == "trotter" and not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    system = jc_build(grid) if system is None else system
    phi = system.oscillator_eigenvectors()
    if start == "eigh":
        osc = phi[:, 0]
    elif start == "prepared":
        if delta is None:
            raise UsageError("start='prepared' needs delta")
        osc, _, params = prepare_ground(grid, delta)
        osc = np.exp(-1j * params.alpha) * osc
    else:
        raise UsageError(f"start must be 'eigh' or 'prepared', got {start!r}")
    state = system.product_state(osc, 0)
    m = ladder_steps(n_target, eps, constant) if mode == "trotter" else 0
    for rung in range(n_target):
        if mode == "exact":
            state = jc_exact_step(system, rung, state)
        else:
            s = rung_time(rung) / m
            for _ in range(m):
                state = jc_trotter_step(grid, state, s)
        state = _flip_qubit(state)
    target = system.product_state(phi[:, n_target], 0)
    return state, min(1.0, float(abs(np.vdot(target, state)))), m
