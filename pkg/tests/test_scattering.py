import cmath
import math

import numpy as np
import pytest

from qhosim.errors import UsageError
from qhosim.numerics import centered_dft_apply
from qhosim.oscillator import GridSpec, build_hamiltonian, hermite_states
from qhosim.scattering import (
    SpectralCoefficients,
    amplitude_unitary,
    cv_amplitude,
    cv_position_amplitude,
    discrete_amplitude,
    discrete_state,
    frft_apply,
    hadamard_test,
    householder_preparer,
    read_signal_csv,
    write_signal_csv,
)
from qhosim.trotter import exact_propagate, select_plan


def spread(n_prime, seed=0):
    rng = np.random.default_rng(seed)
    return SpectralCoefficients.normalized(rng.normal(size=n_prime + 1) + 1j * rng.normal(size=n_prime + 1))


@pytest.fixture(scope="module")
def qho128():
    return build_hamiltonian(GridSpec(128))


@pytest.fixture(scope="module")
def qho64():
    return build_hamiltonian(GridSpec(64))


def test_coefficients_need_unit_norm():
    with pytest.raises(UsageError):
        SpectralCoefficients(np.array([1.0, 1.0]))
    assert SpectralCoefficients.normalized([3, 4j]).n_prime == 1


def test_cv_ground_phase():
    c = SpectralCoefficients(np.array([1.0]))
    for t in (0.0, 0.4, 2.9):
        assert cv_amplitude(c, c, t) == pytest.approx(cmath.exp(-0.5j * t), abs=1e-15)


def test_cv_normalization_at_zero_time():
    c = spread(5)
    assert cv_amplitude(c, c, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_cv_two_level_cancels():
    c = SpectralCoefficients.normalized([1, 1])
    assert abs(cv_amplitude(c, c, math.pi)) <= 1e-15


def test_cv_length_mismatch():
    with pytest.raises(UsageError):
        cv_amplitude(spread(2), spread(3), 0.1)


def test_discrete_ground(qho128):
    c = SpectralCoefficients(np.array([1.0]))
    amp = discrete_amplitude(qho128, c, c, 1.3)
    assert abs(amp - cmath.exp(-0.65j)) <= 1e-8


@pytest.mark.parametrize("t", [0.7, math.pi / 2, 3.0])
def test_discrete_matches_cv(qho128, t):
    c, cp = spread(8, 1), spread(8, 2)
    assert abs(discrete_amplitude(qho128, c, cp, t) - cv_amplitude(c, cp, t)) <= 1e-8


def test_discrete_with_plan(qho128):
    c = spread(8, 3)
    plan = select_plan(8, math.pi / 2, 1e-3)
    amp = discrete_amplitude(qho128, c, c, math.pi / 2, plan)
    assert abs(amp - cv_amplitude(c, c, math.pi / 2)) <= 1e-3


def test_plan_time_mismatch(qho128):
    c = spread(2)
    with pytest.raises(UsageError):
        discrete_amplitude(qho128, c, c, 1.0, select_plan(2, 0.5, 1e-3))


def test_discrete_low_energy_precondition():
    h = build_hamiltonian(GridSpec(16))
    with pytest.raises(UsageError):
        discrete_amplitude(h, spread(9), spread(9), 0.3)


def test_renormalization_is_tiny(qho128):
    _, norm = discrete_state(qho128.grid, spread(8))
    assert abs(norm - 1) < 1e-12


def test_error_shrinks_with_n_dim():
    c, cp = spread(8, 4), spread(8, 5)
    errs = []
    for n_dim in (18, 36, 72, 144):
        h = build_hamiltonian(GridSpec(n_dim))
        errs.append(abs(discrete_amplitude(h, c, cp, 1.1) - cv_amplitude(c, cp, 1.1)))
    for a, b in zip(errs, errs[1:]):
        assert b < a or (a < 1e-13 and b < 1e-13)
    assert errs[0] > 1e-5


def test_position_amplitude():
    h = build_hamiltonian(GridSpec(256))
    c = spread(8, 6)
    for j in (-20, -3, 0, 7, 31):
        disc = discrete_amplitude(h, c, c, 0.9, final=j)
        assert abs(disc - cv_position_amplitude(h.grid, c, 0.9, j)) <= 1e-6


def test_position_off_grid(qho64):
    c = spread(1)
    with pytest.raises(UsageError):
        discrete_amplitude(qho64, c, c, 0.1, final=32)


def test_householder_preparer_maps_reference():
    rng = np.random.default_rng(7)
    target = rng.normal(size=10) + 1j * rng.normal(size=10)
    target /= np.linalg.norm(target)
    fwd, bwd = householder_preparer(target)
    e0 = np.zeros(10, dtype=complex)
    e0[0] = 1
    assert np.allclose(fwd(e0), target, atol=1e-15)
    v = rng.normal(size=10) + 0j
    assert np.allclose(bwd(fwd(v)), v, atol=1e-14)
    assert abs(np.linalg.norm(fwd(v)) - np.linalg.norm(v)) < 1e-13


def test_hadamard_identity():
    assert hadamard_test(lambda v: v, 8) == 1.0


def test_hadamard_phase():
    assert hadamard_test(lambda v: np.exp(0.4j) * v, 8) == pytest.approx(cmath.exp(0.4j), abs=1e-15)


def test_hadamard_matches_projection(qho64):
    c, cp = spread(6, 8), spread(6, 9)
    for t in (0.3, 2.2):
        exact = hadamard_test(amplitude_unitary(qho64, c, cp, t), 64)
        assert abs(exact - discrete_amplitude(qho64, c, cp, t)) <= 1e-10


def _pinned_unitaries(h):
    rng = np.random.default_rng(11)
    diag = np.exp(1j * rng.uniform(0, 2 * np.pi, 64))
    return [
        amplitude_unitary(h, spread(4, 12), spread(4, 13), 0.8),
        lambda v: np.exp(-2.1j) * v,
        lambda v: diag * exact_propagate(h, 1.7, v),
    ]


def test_hadamard_sampled_accuracy(qho64):
    for i, v in enumerate(_pinned_unitaries(qho64)):
        exact = hadamard_test(v, 64)
        est = hadamard_test(v, 64, shots=10**6, seed=100 + i)
        assert abs(est - exact) <= 5e-3


def test_hadamard_sampling_independent_of_workers(qho64):
    v = _pinned_unitaries(qho64)[0]
    a = hadamard_test(v, 64, shots=300_000, seed=5, workers=1)
    b = hadamard_test(v, 64, shots=300_000, seed=5, workers=4)
    assert a == b


def test_hadamard_sampling_needs_seed():
    with pytest.raises(UsageError):
        hadamard_test(lambda v: v, 4, shots=10)
    with pytest.raises(UsageError):
        hadamard_test(lambda v: v, 4, shots=0, seed=1)


def _low_energy(grid, n_max, seed=0):
    rng = np.random.default_rng(seed)
    v = hermite_states(grid, n_max) @ (rng.normal(size=n_max + 1) + 1j * rng.normal(size=n_max + 1))
    return v / np.linalg.norm(v)


def test_frft_zero_is_identity(qho128):
    v = _low_energy(qho128.grid, 5)
    out = frft_apply(qho128, v, 0)
    assert np.array_equal(out, v) and out is not v


def test_frft_one_is_fourier(qho128):
    psi1 = hermite_states(qho128.grid, 1)[:, 1].astype(complex)
    assert np.linalg.norm(frft_apply(qho128, psi1, 1) - centered_dft_apply(psi1)) <= 1e-6
    v = _low_energy(qho128.grid, 32, 1)
    assert np.linalg.norm(frft_apply(qho128, v, 1) - centered_dft_apply(v)) <= 1e-6


def test_frft_period_four(qho128):
    v = _low_energy(qho128.grid, 32, 2)
    assert np.linalg.norm(frft_apply(qho128, v, 4) - v) <= 1e-8


def test_frft_additivity(qho128):
    v = _low_energy(qho128.grid, 32, 3)
    for a, b in ((0.3, 0.45), (1.2, -0.7), (2.5, 1.5)):
        lhs = frft_apply(qho128, frft_apply(qho128, v, a), b)
        assert np.linalg.norm(lhs - frft_apply(qho128, v, a + b)) <= 1e-6


def test_frft_hermite_eigenphase(qho128):
    psi = hermite_states(qho128.grid, 5)[:, 5].astype(complex)
    out = frft_apply(qho128.grid, psi, 0.5)
    assert np.linalg.norm(out - cmath.exp(-5j * 0.5 * math.pi / 2) * psi) <= 1e-8


def test_frft_with_plan(qho128):
    v = _low_energy(qho128.grid, 8, 4)
    plan = select_plan(8, math.pi / 2, 1e-6)
    assert np.linalg.norm(frft_apply(qho128, v, 1, plan) - frft_apply(qho128, v, 1)) <= 1e-5


def test_frft_dimension_check(qho128):
    with pytest.raises(UsageError):
        frft_apply(qho128, np.ones(64), 1)


def test_signal_csv_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    sig = rng.normal(size=16) + 1j * rng.normal(size=16)
    path = tmp_path / "sig.csv"
    write_signal_csv(path, sig)
    assert path.read_text().splitlines()[0] == "re,im"
    assert np.array_equal(read_signal_csv(path, 16), sig)


def test_signal_csv_without_header_and_comments(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("# a comment\n1.5,-2\n0,3e-1\n")
    assert np.array_equal(read_signal_csv(path), np.array([1.5 - 2j, 0.3j]))


def test_signal_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("re,im\n1,2\nx,y\n")
    with pytest.raises(UsageError):
        read_signal_csv(path)
    path.write_text("re,im\n1,2\n")
    with pytest.raises(UsageError):
        read_signal_csv(path, 4)
