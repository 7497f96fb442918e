import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from rodlangevin.core import (BathParams, ParameterError, RngStream, RodParams, RodState, StreamBank, WrongRegime,
                              equilibrium_initial_state, rest_initial_state)
from rodlangevin.dynamics import (GENERATORS, INERTIAL, OVERDAMPED, IntegratorConfig, euler_orientation_step,
                                  orientation_from_euler, propagate, rotate, series_block_length,
                                  step_momentum_colored, step_momentum_inertial, step_overdamped,
                                  step_rotation_inertial, unit_spectra)
from rodlangevin.noise import NoiseSeries

vec = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.asarray)


def test_generators_are_cross_products():
    u = np.array([0.3, -0.4, 0.5])
    for i in range(3):
        np.testing.assert_array_equal(GENERATORS[i] @ u, np.cross(np.eye(3)[i], u))


@given(vec, vec)
def test_rotate_matches_matrix_exponential(v, theta):
    R = expm(np.einsum("i,ijk->jk", theta, GENERATORS))
    np.testing.assert_allclose(rotate(v, theta), R @ v, atol=1e-12 * max(1.0, np.abs(v).max()))


def test_rotate_small_angle_branch_and_norm():
    v = np.array([1.0, 2.0, 2.0])
    tiny = np.array([1e-10, -2e-10, 0.0])
    np.testing.assert_allclose(rotate(v, tiny), v + np.cross(tiny, v), rtol=0, atol=1e-15)
    big = np.array([0.0, 0.0, np.pi / 2])
    np.testing.assert_allclose(rotate([1.0, 0.0, 0.0], big), [0.0, 1.0, 0.0], atol=1e-15)


def test_orientation_from_euler():
    np.testing.assert_allclose(orientation_from_euler(0.0, 1.3), [0.0, 0.0, 1.0], atol=1e-16)
    b, g = np.random.default_rng(0).uniform(0, np.pi, (2, 20))
    np.testing.assert_allclose(np.linalg.norm(orientation_from_euler(b, g), axis=-1), 1.0, rtol=1e-15)
    np.testing.assert_allclose(orientation_from_euler(np.pi / 2, np.pi / 2), [0.0, -1.0, 0.0], atol=1e-15)


def test_euler_step_agrees_with_rotation_to_first_order():
    bath = BathParams(gamma_rot=1.0)
    u = np.tile([0.0, 0.6, 0.8], (200, 1))
    dt = 1e-6
    a = euler_orientation_step(u, bath, dt, np.random.default_rng(4))
    _, b = step_overdamped(np.zeros_like(u), u, RodParams(), bath, dt, _skip_force(np.random.default_rng(4)))
    assert np.abs(a - b).max() < 1e-5
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, rtol=1e-15)


class _skip_force:
    """Discards the three force normals so the torque sees the same draws as the Euler step."""

    def __init__(self, rng):
        self.rng, self.calls = rng, 0

    def standard_normal(self, shape):
        self.calls += 1
        return np.zeros(shape) if self.calls == 1 else self.rng.standard_normal(shape)


def test_momentum_ou_step_moments():
    rod, bath = RodParams(mass=2.0), BathParams(temperature=1.5, gamma_par=1.0, gamma_perp=3.0)
    n, dt = 200_000, 0.3
    u = np.broadcast_to([0.0, 0.0, 1.0], (n, 3))
    p0 = np.broadcast_to([0.5, -1.0, 2.0], (n, 3))
    p1 = step_momentum_inertial(p0, u, rod, bath, dt, RngStream(3).generator())
    a_par, a_perp = np.exp(-1.0 * dt / 2.0), np.exp(-3.0 * dt / 2.0)
    np.testing.assert_allclose(p1.mean(0), [0.5 * a_perp, -a_perp, 2.0 * a_par], atol=0.01)
    np.testing.assert_allclose(p1.var(0), 3.0 * (1 - np.array([a_perp, a_perp, a_par]) ** 2), rtol=0.02)


def test_rotation_step_keeps_constraints():
    rod, bath = RodParams(), BathParams(gamma_rot=0.2)
    state = equilibrium_initial_state(rod, bath, np.random.default_rng(1), size=500)
    omega, u = state.omega, state.u
    rng = np.random.default_rng(2)
    for _ in range(100):
        omega, u = step_rotation_inertial(omega, u, rod, bath, 0.005, rng)
    assert np.abs(np.linalg.norm(u, axis=1) - 1).max() < 1e-14
    assert np.abs(np.einsum("ij,ij->i", omega, u)).max() < 1e-13


def test_overdamped_single_step_displacement():
    bath = BathParams(temperature=1.0, gamma_par=1.0, gamma_perp=2.0, gamma_rot=1.0)
    u = np.broadcast_to([1.0, 0.0, 0.0], (100_000, 3))
    r, _ = step_overdamped(np.zeros((100_000, 3)), u, RodParams(), bath, 0.01, RngStream(8).generator())
    assert np.mean(r[:, 0] ** 2) == pytest.approx(2 * 0.01 / 1.0, rel=0.02)
    assert np.mean(r[:, 1] ** 2) == pytest.approx(2 * 0.01 / 2.0, rel=0.02)


def test_colored_momentum_without_noise_relaxes_deterministically():
    rod = RodParams(mass=1.0)
    bath = BathParams(temperature=0.0, gamma_par=2.0, gamma_perp=1.0, cutoff=10.0, regime="quantum")
    series = NoiseSeries(0.01, np.zeros((1, 3, 8)), unit_spectra(bath))
    p = step_momentum_colored([[1.0, 1.0, 1.0]], [[0.0, 0.0, 1.0]], rod, bath, series, 0, 0.01)
    np.testing.assert_allclose(p, [[np.exp(-0.01), np.exp(-0.01), np.exp(-0.02)]], rtol=1e-15)
    with pytest.raises(WrongRegime):
        step_momentum_colored([1.0, 0, 0], [0, 0, 1.0], rod, BathParams(), series, 0, 0.01)


def test_series_block_length():
    bath = BathParams(temperature=0.0, cutoff=50.0, regime="quantum", gamma_rot=0.5)
    n = series_block_length(RodParams(), bath, 0.01, 4000)
    assert n == 8192
    assert series_block_length(RodParams(), bath, 0.01, 10) == 8192
    assert series_block_length(RodParams(), bath, 0.01, 10**7) == 2**16


def test_integrator_checks():
    rod, bath = RodParams(), BathParams()
    with pytest.raises(ParameterError):
        IntegratorConfig(INERTIAL, dt=0.05).check(rod, bath)  # I/gamma_rot = 1/12
    IntegratorConfig(INERTIAL, dt=1 / 120).check(rod, bath)
    with pytest.raises(WrongRegime):
        IntegratorConfig(OVERDAMPED).check(rod, BathParams(temperature=0, cutoff=5.0, regime="quantum"))
    with pytest.raises(ParameterError):
        IntegratorConfig("leapfrog")
    with pytest.raises(ParameterError):
        IntegratorConfig(dt=0.0)


@pytest.mark.parametrize("mode,bath", [
    (OVERDAMPED, BathParams(gamma_perp=2.0)),
    (INERTIAL, BathParams(gamma_rot=0.5)),
    (INERTIAL, BathParams(temperature=0.2, gamma_rot=0.5, cutoff=30.0, regime="quantum")),
])
def test_single_rod_equals_ensemble_row(mode, bath):
    rod = RodParams()
    cfg = IntegratorConfig(mode, dt=0.01, n_steps=120, record_stride=7)
    bank = StreamBank.from_seed(42, range(4))
    batch = propagate(rest_initial_state(bank), rod, bath, cfg, bank)
    lone_bank = StreamBank.from_seed(42, [2])
    lone = propagate(rest_initial_state(lone_bank), rod, bath, cfg, lone_bank)
    for name in ("r", "p", "u", "omega"):
        np.testing.assert_array_equal(getattr(batch, name)[:, 2], getattr(lone, name)[:, 0])
    assert batch.n_records == 120 // 7 + 1
    bank = StreamBank.from_seed(42, range(4))
    again = propagate(rest_initial_state(bank), rod, bath, cfg, bank)
    np.testing.assert_array_equal(again.r, batch.r)


def test_propagate_zero_steps_and_overdamped_records():
    rod, bath = RodParams(), BathParams()
    bank = StreamBank.from_seed(0, range(2))
    init = equilibrium_initial_state(rod, bath, bank)
    traj = propagate(init, rod, bath, IntegratorConfig(OVERDAMPED, n_steps=0), bank)
    assert traj.n_records == 1
    np.testing.assert_array_equal(traj.u[0], init.u)
    assert not traj.p.any() and not traj.omega.any()
    states = traj.states(1)
    assert isinstance(states[0], RodState) and states[0].t == 0.0
    with pytest.raises(ValueError):
        propagate(init, rod, bath, IntegratorConfig(OVERDAMPED), StreamBank.from_seed(0, range(3)))


def test_midpoint_scheme_runs_and_differs():
    rod, bath = RodParams(), BathParams(gamma_rot=0.5)
    cfg = IntegratorConfig(INERTIAL, dt=0.01, n_steps=50, record_stride=50)
    mid = IntegratorConfig(INERTIAL, dt=0.01, n_steps=50, record_stride=50, position_scheme="midpoint")
    out = [propagate(rest_initial_state(RngStream(1).generator()), rod, bath, c, RngStream(1)) for c in (cfg, mid)]
    np.testing.assert_array_equal(out[0].p, out[1].p)
    assert not np.array_equal(out[0].r, out[1].r)
