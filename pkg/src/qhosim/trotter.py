"""Symmetric Suzuki product formulas for split Hamiltonians p^2/2 + V(x).

U_1(s) = exp(-i s V/2) exp(-i s p^2/2) exp(-i s V/2), and for p >= 2

    U_p(s) = U_{p-1}(s_{p-1})^2 U_{p-1}(s - 4 s_{p-1}) U_{p-1}(s_{p-1})^2,
    s_{p-1} = s / (4 - 4**(1/(2p-1))),

which is accurate to O(s**(2p+1)).  A schedule is a palindromic list of
(generator, theta) pairs meaning exp(-i*theta*G); the generator tags are
the ones understood by ``apply_quadratic_phase``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .oscillator import apply_quadratic_phase, hermite_states

MAX_ORDER = 6
SPLITTINGS = {"qho": "X2", "quartic": "X4", "potential": "potential"}
# theta of the diagonal half-steps is s times this factor: x^2/2 -> s/4, x^4/2 -> s/4, V -> s/2
_HALF_STEP = {"X2": 0.25, "X4": 0.25, "potential": 0.5}


def suzuki_outer(s, p):
    """Outer span s_{p-1} used when building U_p from U_{p-1}."""
    return s / (4.0 - 4.0 ** (1.0 / (2 * p - 1)))


def raw_count(p):
    """Exponentials in U_p before merging neighbours: 3 * 5**(p-1)."""
    return 3 * 5 ** (p - 1)


def merge_steps(steps):
    """Fuse neighbouring steps that share a generator."""
    out = []
    for tag, theta in steps:
        if out and out[-1][0] == tag:
            out[-1] = (tag, out[-1][1] + theta)
        else:
            out.append((tag, theta))
    return out


def _expand(p, s, diag):
    if p == 1:
        h = _HALF_STEP[diag] * s
        return [(diag, h), ("P2", 0.5 * s), (diag, h)]
    outer = suzuki_outer(s, p)
    a = _expand(p - 1, outer, diag)
    b = _expand(p - 1, s - 4.0 * outer, diag)
    return a + a + b + a + a


@dataclass(frozen=True)
class GeneratorSchedule:
    """Merged steps of U_p(s) plus the bookkeeping of the raw expansion."""

    steps: tuple
    order: int
    span: float
    splitting: str
    raw_count: int

    @property
    def merged_count(self):
        return len(self.steps)

    def durations(self, tag):
        return sum(theta for g, theta in self.steps if g == tag)

    def repeated(self, k):
        """Steps of U_p(s)**k with the shared boundary half-steps fused."""
        if k < 1:
            raise UsageError(f"repetition count must be >= 1, got {k}")
        return merge_steps(list(self.steps) * k)


def build_schedule(p, s, splitting="qho"):
    """Schedule for U_p(s) under the given splitting."""
    if not isinstance(p, (int, np.integer)) or not 1 <= p <= MAX_ORDER:
        raise UsageError(f"order p must be an integer in [1, {MAX_ORDER}], got {p!r}")
    if splitting not in SPLITTINGS:
        raise UsageError(f"unknown splitting {splitting!r}; expected one of {sorted(SPLITTINGS)}")
    raw = _expand(p, float(s), SPLITTINGS[splitting])
    return GeneratorSchedule(tuple(merge_steps(raw)), p, float(s), splitting, len(raw))


def apply_schedule(schedule, state, grid, potential=None, repetitions=1):
    """Apply U_p(s)**repetitions to ``state`` (columns of a matrix form a batch)."""
    state = grid.check_state(state).copy()
    steps = schedule.repeated(repetitions) if repetitions != 1 else schedule.steps
    # palindromic, but apply right to left anyway so non-symmetric lists work too
    for tag, theta in reversed(steps):
        state = apply_quadratic_phase(state, tag, theta, grid, potential=potential)
    return state


def exact_propagate(hamiltonian, t, state):
    """exp(-i H t) state through the cached eigendecomposition."""
    state = hamiltonian.grid.check_state(state)
    if t == 0:
        return state.copy()
    eig = hamiltonian.eig
    v = eig.eigenvectors
    phases = np.exp(-1j * eig.eigenvalues * t)
    coeffs = v.conj().T @ state
    if state.ndim == 1:
        return v @ (phases * coeffs)
    return v @ (phases[:, None] * coeffs)


def _splitting_of(hamiltonian):
    return {"qho": "qho", "quartic": "quartic", "custom-potential": "potential"}[hamiltonian.kind]


def reference_states(hamiltonian, ns):
    """States used for Trotter error scans, with their exact evolution law.

    For the oscillator these are the discrete Hermite states (evolved with
    the exact propagator); otherwise they are refined eigenvectors, whose
    evolution is a pure phase.  Returns ``(states, energies_or_None)``.
    """
    ns = list(ns)
    if hamiltonian.kind == "qho":
        psi = hermite_states(hamiltonian.grid, max(ns))
        return psi[:, ns].astype(complex), None
    pairs = [hamiltonian.refined_eigenpair(n) for n in ns]
    energies = np.array([e for e, _ in pairs])
    return np.column_stack([v for _, v in pairs]), energies


def trotter_errors(hamiltonian, p, s, ns):
    """||(U_p(s) - U(s)) |phi_n>|| for each n in ``ns``."""
    grid = hamiltonian.grid
    limit = grid.n_dim - 1
    if any(n < 0 or n > limit for n in ns):
        raise UsageError(f"state indices must lie in [0, {limit}]")
    if s == 0:
        return np.zeros(len(ns))
    states, energies = reference_states(hamiltonian, ns)
    sched = build_schedule(p, s, _splitting_of(hamiltonian))
    approx = apply_schedule(sched, states, grid, potential=hamiltonian.potential)
    if energies is None:
        exact = exact_propagate(hamiltonian, s, states)
    else:
        exact = states * np.exp(-1j * energies * s)
    return np.linalg.norm(approx - exact, axis=0)


def trotter_error(hamiltonian, grid, p, s, n):
    """Single-state version of ``trotter_errors``."""
    if grid.n_dim != hamiltonian.grid.n_dim:
        raise UsageError("grid does not match the Hamiltonian")
    return float(trotter_errors(hamiltonian, p, s, [n])[0])


@dataclass(frozen=True)
class TrotterPlan:
    """Order p and step count k for evolving to time t = k*s."""

    p: int
    k: int
    s: float
    t: float
    n: int
    eps: float
    exponentials: int
    merged_exponentials: int

    @property
    def bound(self):
        """k (n+2) s**(2p+1), the error proxy the plan was sized against."""
        return self.k * (self.n + 2) * abs(self.s) ** (2 * self.p + 1)


def select_plan(n, t, eps, splitting="qho"):
    """Order and step count from the closed-form choice

    p = ceil(sqrt(ln((n+2) t / eps) / (2 ln 5))),
    k = ceil(t * ((n+2) t / eps)**(1/(2p))).
    """
    if not t > 0:
        raise UsageError(f"t must be positive, got {t}")
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    if n < 0:
        raise UsageError(f"n must be non-negative, got {n}")
    ratio = (n + 2) * t / eps
    p = max(1, math.ceil(math.sqrt(math.log(ratio) / (2.0 * math.log(5.0)))))
    if p > MAX_ORDER:
        raise UsageError(f"requested accuracy needs order {p} > {MAX_ORDER}")
    k = math.ceil(t * ratio ** (1.0 / (2 * p)))
    sched = build_schedule(p, t / k, splitting)
    merged = len(sched.repeated(k))
    return TrotterPlan(p, k, t / k, t, n, eps, k * sched.raw_count, merged)


def run_plan(plan, hamiltonian, state):
    """Apply the plan's U_p(s)**k to ``state``."""
    sched = build_schedule(plan.p, plan.s, _splitting_of(hamiltonian))
    return apply_schedule(sched, state, hamiltonian.grid, potential=hamiltonian.potential, repetitions=plan.k)


def plan_error(plan, hamiltonian, state):
    """||U_p(s)^k |state> - U(t) |state>||."""
    approx = run_plan(plan, hamiltonian, state)
    return float(np.linalg.norm(approx - exact_propagate(hamiltonian, plan.t, state)))
