"""Finite-dimensional harmonic oscillator: grid, operators and Hermite states.

The discrete position operator is diagonal on the grid ``x_j = j*sqrt(2*pi/N)``
and the discrete momentum operator is its conjugate by the centered DFT.
Everything here works on plain numpy arrays in natural grid order.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import NumericalFailure, UsageError
from .numerics import EigenDecomposition, centered_dft_apply, centered_dft_matrix, eigh

PI_M14 = math.pi ** -0.25
HB1_CONSTANT = 0.7
COMB_TAIL_TOL = 1e-15
DEFAULT_LOW_ENERGY_FRACTION = 0.5
MAX_MATRIX_ELEMENT_POWER = 8

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)


@dataclass(frozen=True)
class GridSpec:
    """Symmetric grid of N points with spacing sqrt(2*pi/N)."""

    n_dim: int

    def __post_init__(self):
        if not isinstance(self.n_dim, (int, np.integer)) or self.n_dim < 4 or self.n_dim % 2:
            raise UsageError(f"grid dimension must be an even integer >= 4, got {self.n_dim!r}")

    @property
    def spacing(self):
        return math.sqrt(2.0 * math.pi / self.n_dim)

    @property
    def indices(self):
        return np.arange(-self.n_dim // 2, self.n_dim // 2)

    @property
    def x(self):
        return self.indices * self.spacing

    @property
    def period(self):
        """Comb period T = sqrt(2*pi*N) = N * spacing."""
        return math.sqrt(2.0 * math.pi * self.n_dim)

    @property
    def prefactor(self):
        return (2.0 * math.pi / self.n_dim) ** 0.25

    def low_energy_max(self, fraction=DEFAULT_LOW_ENERGY_FRACTION):
        return int(math.floor(fraction * self.n_dim))

    def check_state(self, state):
        state = np.asarray(state, dtype=complex)
        if state.shape[0] != self.n_dim:
            raise UsageError(f"state length {state.shape[0]} does not match grid dimension {self.n_dim}")
        return state


def hermite_eval(n, x):
    """Normalized Hermite function psi_n evaluated at x (scalar or array).

    Runs the three-term recurrence on psi_k itself.  The Gaussian factor is
    carried as a separate log-scale so that large |x| and large n do not lose
    the whole result to underflow of the seed.
    """
    if n < 0:
        raise UsageError(f"Hermite index must be non-negative, got {n}")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    log_scale = -0.5 * xa * xa
    prev = np.full(xa.shape, PI_M14)
    if n == 0:
        out = prev * np.exp(log_scale)
    else:
        cur = math.sqrt(2.0) * xa * prev
        for k in range(1, n):
            nxt = math.sqrt(2.0 / (k + 1)) * xa * cur - math.sqrt(k / (k + 1)) * prev
            prev, cur = cur, nxt
            big = np.abs(cur) > _RESCALE
            if big.any():
                prev[big] /= _RESCALE
                cur[big] /= _RESCALE
                log_scale[big] += _LOG_RESCALE
        out = cur * np.exp(log_scale)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class HermiteState:
    n: int
    amplitudes: np.ndarray
    aliased: bool
    comb_cutoff: int


def comb_tail_bound(grid, n, cutoff):
    """HB1 bound on the first comb term left out of the aliased sum."""
    y = (cutoff + 0.5) * grid.period
    log_bound = math.log(HB1_CONSTANT) - 0.5 * y * y + y * math.sqrt(2.0 * n)
    return math.exp(min(log_bound, 700.0))


def make_hermite_state(grid, n, aliased=False, comb_cutoff=3):
    """Discrete Hermite state (2*pi/N)**(1/4) psi_n(x_j), optionally periodized."""
    if n < 0:
        raise UsageError(f"Hermite index must be non-negative, got {n}")
    x = grid.x
    if not aliased:
        return HermiteState(n, grid.prefactor * hermite_eval(n, x), False, 0)
    k = comb_cutoff
    while comb_tail_bound(grid, n, k) > COMB_TAIL_TOL:
        k += 1
    shifts = np.arange(-k, k + 1) * grid.period
    vals = hermite_eval(n, x[None, :] + shifts[:, None]).sum(axis=0)
    return HermiteState(n, grid.prefactor * vals, True, k)


def hermite_states(grid, n_max, aliased=False):
    """Columns psi_0^d .. psi_{n_max}^d as an (N, n_max+1) array.

    One pass of the recurrence produces every column, which is much cheaper
    than n_max separate calls.
    """
    x = grid.x
    if aliased:
        k = 3
        while comb_tail_bound(grid, n_max, k) > COMB_TAIL_TOL:
            k += 1
        pts = (x[None, :] + (np.arange(-k, k + 1) * grid.period)[:, None]).ravel()
    else:
        k = 0
        pts = x
    log_scale = -0.5 * pts * pts
    cols = np.empty((n_max + 1, pts.size))
    prev = np.full(pts.shape, PI_M14)
    cols[0] = prev * np.exp(log_scale)
    if n_max >= 1:
        cur = math.sqrt(2.0) * pts * prev
        cols[1] = cur * np.exp(log_scale)
        for m in range(1, n_max):
            nxt = math.sqrt(2.0 / (m + 1)) * pts * cur - math.sqrt(m / (m + 1)) * prev
            prev, cur = cur, nxt
            big = np.abs(cur) > _RESCALE
            if big.any():
                prev[big] /= _RESCALE
                cur[big] /= _RESCALE
                log_scale[big] += _LOG_RESCALE
            cols[m + 1] = cur * np.exp(log_scale)
    if aliased:
        cols = cols.reshape(n_max + 1, 2 * k + 1, x.size).sum(axis=1)
    return grid.prefactor * cols.T


@dataclass(frozen=True)
class DiagonalOperator:
    """Operator diagonal in the position or in the momentum basis."""

    basis: str
    values: np.ndarray

    def __post_init__(self):
        if self.basis not in ("position", "momentum"):
            raise UsageError(f"basis must be 'position' or 'momentum', got {self.basis!r}")
        if not np.all(np.isfinite(self.values)):
            raise UsageError("operator values must be finite")

    def apply(self, state):
        state = np.asarray(state, dtype=complex)
        vals = self.values.reshape((-1,) + (1,) * (state.ndim - 1))
        if self.basis == "position":
            return vals * state
        return centered_dft_apply(vals * centered_dft_apply(state), "inverse")

    def power(self, k):
        return DiagonalOperator(self.basis, self.values ** k)

    def dense(self):
        if self.basis == "position":
            return np.diag(self.values.astype(complex))
        f = centered_dft_matrix(self.values.size)
        return f.conj().T @ (self.values[:, None] * f)


def position_operator(grid):
    return DiagonalOperator("position", grid.x)


def momentum_operator(grid):
    return DiagonalOperator("momentum", grid.x)


HAMILTONIAN_KINDS = ("qho", "quartic", "custom-potential")


@dataclass(frozen=True, eq=False)
class ModelHamiltonian:
    """H = p^2/2 + V(x) on a grid, with lazily built dense form and spectrum.

    ``potential`` holds V(x_j).  The dense matrix and its eigendecomposition
    are each computed once (under a lock) and then shared read-only.
    """

    kind: str
    grid: GridSpec
    potential: np.ndarray
    eigh_method: str = "lapack"
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_dim(self):
        return self.grid.n_dim

    def _cached(self, key, build):
        if key not in self._cache:
            with self._lock:
                if key not in self._cache:
                    self._cache[key] = build()
        return self._cache[key]

    @property
    def matrix(self):
        return self._cached("matrix", self._assemble)[0]

    @property
    def symmetrization_deviation(self):
        return self._cached("matrix", self._assemble)[1]

    def _assemble(self):
        f = centered_dft_matrix(self.n_dim)
        x2 = self.grid.x ** 2
        h = 0.5 * (f.conj().T @ (x2[:, None] * f))
        h[np.diag_indices_from(h)] += self.potential
        dev = float(np.max(np.abs(h - h.conj().T)))
        scale = float(np.max(np.abs(h)))
        if dev > 1e-9 * scale:
            raise NumericalFailure(f"Hamiltonian symmetrization deviation {dev:.3e} too large")
        return 0.5 * (h + h.conj().T), dev

    @property
    def eig(self) -> EigenDecomposition:
        return self._cached("eig", lambda: eigh(self.matrix, method=self.eigh_method))

    def eigenvalues(self):
        return self.eig.eigenvalues

    def apply(self, state):
        """H applied to a state (or to columns of a matrix) in O(N log N)."""
        state = np.asarray(state, dtype=complex)
        x2 = (self.grid.x ** 2).reshape((-1,) + (1,) * (state.ndim - 1))
        v = self.potential.reshape(x2.shape)
        kinetic = centered_dft_apply(x2 * centered_dft_apply(state), "inverse")
        return 0.5 * kinetic + v * state

    def refined_eigenpair(self, n, iterations=2):
        """Eigenpair n polished by residual correction in the eigenbasis.

        The dense eigenvectors carry errors of order eps*||H||; projecting the
        fast-apply residual back through the spectrum removes most of it,
        which matters when comparing against Trotter errors near 1e-13.
        """
        eig = self.eig
        v = eig.eigenvectors
        w = eig.eigenvalues
        phi = v[:, n].copy()
        energy = float(w[n])
        gaps = w - energy
        gaps[n] = np.inf
        for _ in range(iterations):
            r = self.apply(phi) - energy * phi
            phi = phi - v @ ((v.conj().T @ r) / gaps)
            phi /= np.linalg.norm(phi)
            energy = float(np.vdot(phi, self.apply(phi)).real)
        return energy, phi


def build_hamiltonian(grid, kind="qho", potential: Optional[Callable] = None, eigh_method="lapack"):
    """Discrete model Hamiltonian of the given kind."""
    x = grid.x
    if kind == "qho":
        v = 0.5 * x ** 2
    elif kind == "quartic":
        v = 0.5 * x ** 4
    elif kind == "custom-potential":
        if potential is None:
            raise UsageError("custom-potential Hamiltonian needs a potential function")
        v = np.asarray(potential(x), dtype=float)
        if v.shape != x.shape or not np.all(np.isfinite(v)):
            raise UsageError("potential must return finite real values on the grid")
    else:
        raise UsageError(f"unknown Hamiltonian kind {kind!r}; expected one of {HAMILTONIAN_KINDS}")
    return ModelHamiltonian(kind, grid, v, eigh_method)


PHASE_GENERATORS = ("X2", "P2", "X4", "potential")


def apply_quadratic_phase(state, generator, theta, grid, potential=None):
    """exp(-i*theta*G) applied to ``state`` for a diagonal generator G.

    X2 is x**2, X4 is x**4, potential is V(x) (values on the grid) and P2 is
    p**2, applied through the centered DFT.  Extra trailing axes of ``state``
    are treated as a batch.
    """
    state = grid.check_state(state)
    if theta == 0:
        return state.copy()
    x = grid.x
    if generator in ("X2", "P2"):
        g = x ** 2
    elif generator == "X4":
        g = x ** 4
    elif generator == "potential":
        if potential is None:
            raise UsageError("potential generator needs potential values")
        g = np.asarray(potential, dtype=float)
    else:
        raise UsageError(f"unknown generator {generator!r}; expected one of {PHASE_GENERATORS}")
    phase = np.exp(-1j * theta * g).reshape((-1,) + (1,) * (state.ndim - 1))
    if generator == "P2":
        return centered_dft_apply(phase * centered_dft_apply(state), "inverse")
    return phase * state


@lru_cache(maxsize=64)
def _fock_quadratures(dim):
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    x = (a + a.T) / math.sqrt(2.0)
    p = 1j * (a.T - a) / math.sqrt(2.0)
    return x, p


def fock_quadratures(dim):
    """Truncated position and momentum matrices built from ladder operators."""
    x, p = _fock_quadratures(dim)
    return x.copy(), p.copy()


def _check_powers(l1, l2, m, n):
    if min(l1, l2, m, n) < 0:
        raise UsageError("powers and state indices must be non-negative")
    if l1 + l2 > MAX_MATRIX_ELEMENT_POWER:
        raise UsageError(f"l1 + l2 must not exceed {MAX_MATRIX_ELEMENT_POWER}")


def cv_matrix_element(l1, l2, m, n):
    """<psi_m| p^l1 x^l2 |psi_n> for the continuous oscillator.

    The truncated Fock basis of size max(m, n)+l1+l2+1 holds every level the
    operator string can reach, so the result is exact.
    """
    _check_powers(l1, l2, m, n)
    dim = max(m, n) + l1 + l2 + 1
    x, p = _fock_quadratures(dim)
    vec = np.zeros(dim, dtype=complex)
    vec[n] = 1.0
    for _ in range(l2):
        vec = x @ vec
    for _ in range(l1):
        vec = p @ vec
    return complex(vec[m])


def discrete_matrix_element(grid, l1, l2, m, n):
    """<psi_m^d| (p^d)^l1 (x^d)^l2 |psi_n^d> on the grid."""
    _check_powers(l1, l2, m, n)
    if max(m, n) > grid.n_dim // 2:
        raise UsageError("state indices must not exceed N/2")
    ket = make_hermite_state(grid, n).amplitudes.astype(complex)
    bra = make_hermite_state(grid, m).amplitudes
    vec = position_operator(grid).power(l2).apply(ket)
    vec = momentum_operator(grid).power(l1).apply(vec)
    return complex(np.vdot(bra, vec))


def overlap_matrix(hamiltonian, max_n):
    """|<phi_m^d|psi_n^d>| for m, n <= max_n."""
    grid = hamiltonian.grid
    if not 0 <= max_n < grid.n_dim:
        raise UsageError(f"max_n must lie in [0, N), got {max_n}")
    psi = hermite_states(grid, max_n)
    phi = hamiltonian.eig.eigenvectors[:, : max_n + 1]
    return np.abs(phi.conj().T @ psi)
