import numpy as np
import pytest

from rodlangevin.core import (BathParams, MissingCutoff, NonPositiveParameter, ParameterError, RngStream, RodParams,
                              RodState, StreamBank, WrongRegime, equilibrium_initial_state, relaxation_times,
                              rest_initial_state, validate_params)


def test_rod_inertia_and_validation():
    assert RodParams(mass=3.0, length=2.0).moment_of_inertia == pytest.approx(1.0)
    with pytest.raises(NonPositiveParameter) as err:
        RodParams(mass=0.0)
    assert err.value.field == "mass"
    with pytest.raises(NonPositiveParameter):
        RodParams(length=np.nan)


def test_bath_validation():
    assert BathParams(temperature=2.0, gamma_rot=4.0).rotational_diffusion == 0.5
    with pytest.raises(NonPositiveParameter):
        BathParams(gamma_perp=-1.0)
    with pytest.raises(NonPositiveParameter):
        BathParams(temperature=0.0)  # classical needs T > 0
    with pytest.raises(MissingCutoff):
        BathParams(regime="quantum")
    with pytest.raises(ParameterError):
        BathParams(regime="semiclassical")
    zero_t = BathParams(temperature=0.0, cutoff=10.0, regime="quantum")
    assert zero_t.kT == 0.0
    assert validate_params(RodParams(), zero_t)[1] is zero_t


def test_relaxation_times():
    times = relaxation_times(RodParams(2.0, 6.0), BathParams(gamma_par=1.0, gamma_perp=4.0, gamma_rot=3.0))
    assert times == {"par": 2.0, "perp": 0.5, "rot": 2.0}


def test_rod_state_invariants():
    s = RodState(np.zeros(3), np.zeros(3), [0.0, 0.0, 1.0], [1.0, 0.0, 0.0])
    assert s.n_rods == 1 and s.row(0) is s
    with pytest.raises(ParameterError):
        RodState(np.zeros(3), np.zeros(3), [0.0, 0.0, 1.001], np.zeros(3))
    with pytest.raises(ParameterError):
        RodState(np.zeros(3), np.zeros(3), [0.0, 0.0, 1.0], [0.0, 0.0, 0.5])
    with pytest.raises(ParameterError):
        s.replace(u=[1.0, 0.0, 0.0])  # omega no longer perpendicular


def test_streams_are_reproducible_and_independent():
    a = RngStream(7, 3).generator().standard_normal(5)
    np.testing.assert_array_equal(a, RngStream(7, 3).generator().standard_normal(5))
    assert not np.array_equal(a, RngStream(7, 4).generator().standard_normal(5))
    assert not np.array_equal(a, RngStream(8, 3).generator().standard_normal(5))


def test_stream_bank_rows_match_lone_generators():
    bank = StreamBank.from_seed(1, range(3), buffer_size=4)
    draws = [bank.standard_normal((3, 3)), bank.standard_normal((3, 7)), bank.standard_normal((3, 2, 2))]
    row = np.concatenate([d[1].ravel() for d in draws])
    np.testing.assert_array_equal(row, RngStream(1, 1).generator().standard_normal(14))
    with pytest.raises(ValueError):
        bank.standard_normal((2, 3))


def test_equilibrium_state_moments():
    rod, bath = RodParams(2.0, 3.0), BathParams(temperature=1.5)
    s = equilibrium_initial_state(rod, bath, np.random.default_rng(0), size=100_000)
    assert s.n_rods == 100_000
    np.testing.assert_allclose(s.p.var(0), 3.0, rtol=0.02)
    assert np.mean(np.sum(s.omega**2, axis=1)) == pytest.approx(2 * 1.5 / rod.moment_of_inertia, rel=0.02)
    np.testing.assert_allclose(s.u.mean(0), 0.0, atol=0.01)
    with pytest.raises(WrongRegime):
        equilibrium_initial_state(rod, BathParams(temperature=0.0, cutoff=1.0, regime="quantum"),
                                  np.random.default_rng(0))


def test_rest_state_consumes_same_draws():
    a = np.random.default_rng(5)
    b = np.random.default_rng(5)
    eq = equilibrium_initial_state(RodParams(), BathParams(), a, size=4)
    rest = rest_initial_state(b, size=4)
    np.testing.assert_array_equal(eq.u, rest.u)
    assert a.standard_normal() == b.standard_normal()
    assert not rest.p.any() and not rest.omega.any()
