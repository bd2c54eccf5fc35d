import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qhosim.errors import UsageError
from qhosim.numerics import fit_line
from qhosim.oscillator import GridSpec, build_hamiltonian, make_hermite_state
from qhosim.trotter import (
    apply_schedule,
    build_schedule,
    exact_propagate,
    plan_error,
    raw_count,
    select_plan,
    suzuki_outer,
    trotter_error,
    trotter_errors,
)


@pytest.fixture(scope="module")
def qho64():
    return build_hamiltonian(GridSpec(64))


def test_first_order_schedule():
    s = build_schedule(1, 1.0)
    assert s.steps == (("X2", 0.25), ("P2", 0.5), ("X2", 0.25))
    assert s.raw_count == 3


def test_second_order_counts():
    s = build_schedule(2, 1.0)
    assert s.raw_count == 15 and s.merged_count == 11
    assert suzuki_outer(1.0, 2) == pytest.approx(0.4144907717943757, abs=1e-15)


def test_durations_telescope():
    for s in (0.3, 1.0, -0.7):
        outer = suzuki_outer(s, 2)
        assert abs(4 * outer + (s - 4 * outer) - s) <= 1e-15
        sched = build_schedule(2, s)
        assert sched.durations("P2") == pytest.approx(s / 2, abs=1e-14)
        assert sched.durations("X2") == pytest.approx(s / 2, abs=1e-14)


@pytest.mark.parametrize("p", range(1, 7))
def test_counts(p):
    s = build_schedule(p, 1.0)
    assert s.raw_count == raw_count(p) == 3 * 5 ** (p - 1) <= 5**p
    assert s.merged_count == 2 * 5 ** (p - 1) + 1
    if p >= 2:
        assert s.merged_count < s.raw_count


def test_schedule_is_palindrome():
    steps = build_schedule(3, 0.9).steps
    assert all(a[0] == b[0] and math.isclose(a[1], b[1], rel_tol=1e-12) for a, b in zip(steps, steps[::-1]))


def test_quartic_schedule_uses_x4():
    s = build_schedule(1, 1.0, "quartic")
    assert s.steps == (("X4", 0.25), ("P2", 0.5), ("X4", 0.25))


def test_order_bounds():
    with pytest.raises(UsageError):
        build_schedule(7, 1.0)
    with pytest.raises(UsageError):
        build_schedule(0, 1.0)


def test_zero_span_is_identity():
    g = GridSpec(16)
    v = np.random.default_rng(0).normal(size=16) + 0j
    assert np.allclose(apply_schedule(build_schedule(1, 0.0), v, g), v, atol=1e-15)


def test_first_order_close_to_exact(qho64):
    g = GridSpec(32)
    h = build_hamiltonian(g)
    psi = make_hermite_state(g, 0).amplitudes
    approx = apply_schedule(build_schedule(1, 0.1), psi, g)
    assert np.linalg.norm(approx - exact_propagate(h, 0.1, psi)) <= 1e-3


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.floats(0.01, 2.0), st.integers(0, 2**32 - 1))
def test_forward_backward_is_identity(p, s, seed):
    g = GridSpec(32)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=32) + 1j * rng.normal(size=32)
    v /= np.linalg.norm(v)
    fwd = apply_schedule(build_schedule(p, s), v, g)
    back = apply_schedule(build_schedule(p, -s), fwd, g)
    assert np.linalg.norm(back - v) <= 1e-10
    assert abs(np.linalg.norm(fwd) - 1) <= 1e-12


def test_exact_propagate_identity_and_periodicity(qho64):
    g = qho64.grid
    psi1 = make_hermite_state(g, 1).amplitudes
    assert np.array_equal(exact_propagate(qho64, 0.0, psi1), psi1)
    assert np.linalg.norm(exact_propagate(qho64, 4 * math.pi, psi1) - psi1) <= 1e-8
    psi2 = make_hermite_state(g, 2).amplitudes
    assert np.linalg.norm(exact_propagate(qho64, 0.7, psi2) - np.exp(-2.5j * 0.7) * psi2) <= 1e-8


def test_error_zero_span(qho64):
    assert trotter_error(qho64, qho64.grid, 1, 0.0, 3) == 0.0


@pytest.mark.parametrize("p", [1, 2])
def test_order_law(qho64, p):
    ss = np.array([0.02, 0.04, 0.08, 0.16])
    errs = [trotter_error(qho64, qho64.grid, p, s, 2) for s in ss]
    assert abs(fit_line(np.log(ss), np.log(errs)).slope - (2 * p + 1)) <= 0.3


@pytest.mark.parametrize("p", [2, 4])
def test_linear_in_n(p):
    h = build_hamiltonian(GridSpec(200))
    ns = np.arange(4, 51)
    errs = trotter_errors(h, p, 1.0, ns)
    assert 0.8 <= fit_line(np.log(ns), np.log(errs)).slope <= 1.3


def test_batched_errors_match_single(qho64):
    errs = trotter_errors(qho64, 2, 0.3, [1, 4, 9])
    for n, e in zip([1, 4, 9], errs):
        assert e == pytest.approx(trotter_error(qho64, qho64.grid, 2, 0.3, n), rel=1e-12)


def test_select_plan_formula():
    plan = select_plan(200, math.pi / 2, 1e-3)
    assert plan.p == math.ceil(math.sqrt(math.log(202 * math.pi / 2 / 1e-3) / (2 * math.log(5)))) == 2
    assert plan.k == math.ceil(math.pi / 2 * (202 * math.pi / 2 / 1e-3) ** 0.25)
    assert plan.k * plan.s == pytest.approx(math.pi / 2, rel=1e-14)
    assert plan.exponentials == plan.k * 15 <= plan.k * 5**plan.p


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2000), st.floats(0.1, 20), st.floats(1e-9, 0.5), st.floats(1.0, 100.0))
def test_select_plan_monotone_in_eps(n, t, eps, factor):
    looser = min(eps * factor, 0.9)
    assert select_plan(n, t, looser).p <= select_plan(n, t, eps).p


@pytest.mark.parametrize("args", [(1, 0.0, 1e-3), (1, 1.0, 0.0), (1, 1.0, 1.5), (-1, 1.0, 1e-3)])
def test_select_plan_rejects(args):
    with pytest.raises(UsageError):
        select_plan(*args)


def test_plan_soundness_n256():
    h = build_hamiltonian(GridSpec(256))
    plan = select_plan(128, math.pi / 2, 1e-3)
    assert plan_error(plan, h, make_hermite_state(h.grid, 128).amplitudes) < 1e-3


def test_repeated_schedule_equals_k_applications(qho64):
    g = qho64.grid
    sched = build_schedule(2, 0.2)
    v = make_hermite_state(g, 3).amplitudes.astype(complex)
    once = v
    for _ in range(3):
        once = apply_schedule(sched, once, g)
    assert np.linalg.norm(apply_schedule(sched, v, g, repetitions=3) - once) <= 1e-12
    assert len(sched.repeated(3)) == 3 * sched.merged_count - 2


def test_quartic_first_order_n_squared():
    h = build_hamiltonian(GridSpec(400), "quartic")
    ns = np.arange(16, 37)
    fit = fit_line(np.log(ns), np.log(trotter_errors(h, 1, 0.01, ns)))
    assert abs(fit.slope - 2) <= 0.35
