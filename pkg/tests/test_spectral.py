import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critnls.nonlinearity import preset
from critnls.profile import gaussian_free_solution
from critnls.spectral import (
    Field,
    Grid,
    IntegrationError,
    Side,
    Trajectory,
    free_propagate,
    relative_error,
    solve_interval,
    step_strang,
)


@pytest.fixture
def grid1():
    return Grid(1, 256, 40.0)


def soliton_like(grid, amp=1.0):
    x = grid.x[0]
    return Field(grid, amp * np.exp(-(x**2) / 2) * np.exp(0.5j * x))


def random_field(grid, seed):
    rng = np.random.default_rng(seed)
    return Field(grid, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(3, 64, 1.0)
    with pytest.raises(ValueError):
        Grid(1, 48, 1.0)
    with pytest.raises(ValueError):
        Grid(1, 8, 1.0)
    with pytest.raises(ValueError):
        Grid(1, 64, 0.0)


def test_frequency_lattice_symmetric_apart_from_nyquist():
    g = Grid(1, 64, 10.0)
    xi = np.sort(g.xi1)
    assert xi[0] == pytest.approx(-g.nyquist)
    np.testing.assert_allclose(xi[1:], -xi[1:][::-1])


@pytest.mark.parametrize("d", [1, 2])
def test_transform_roundtrip(d):
    g = Grid(d, 64, 12.0)
    f = random_field(g, 0)
    back = f.to_frequency().to_space()
    assert relative_error(back, f) < 1e-13
    assert f.to_frequency().norm() == pytest.approx(f.norm(), rel=1e-13)


def test_gaussian_transform_is_unitary_gaussian():
    g = Grid(2, 128, 30.0)
    f = Field(g, np.exp(-g.r2 / 2))
    np.testing.assert_allclose(f.to_frequency().values, np.exp(-g.k2 / 2), atol=1e-13)


def test_free_propagate_identity_and_unitarity(grid1):
    f = random_field(grid1, 1)
    assert free_propagate(f, 0.0) is f
    assert free_propagate(f, 3.7).norm() == pytest.approx(f.norm(), rel=1e-13)
    assert relative_error(free_propagate(free_propagate(f, 2.5), -2.5), f) < 1e-13


@settings(max_examples=25, deadline=None)
@given(s=st.floats(-5, 5), t=st.floats(-5, 5), seed=st.integers(0, 100))
def test_free_propagator_group_property(s, t, seed):
    g = Grid(1, 64, 20.0)
    f = random_field(g, seed)
    lhs = free_propagate(free_propagate(f, t), s)
    assert relative_error(lhs, free_propagate(f, s + t)) < 1e-12


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("t", [0.5, 2.0, 5.0])
def test_free_propagate_gaussian_oracle(d, t):
    g = Grid(d, 1024 if d == 1 else 512, 200.0)
    u0 = Field(g, np.exp(-g.r2 / 2))
    assert relative_error(free_propagate(u0, t), gaussian_free_solution(g, t)) < 1e-8


def test_strang_with_zero_nonlinearity_is_free_step(grid1):
    u = soliton_like(grid1)
    zero = preset("gauge1").scaled(0)
    assert relative_error(step_strang(u, 0.1, zero), free_propagate(u, 0.1)) < 1e-14


def test_gauge_substep_keeps_modulus(grid1):
    from critnls.spectral import SplitStepper

    u = soliton_like(grid1, 2.0).values
    out = SplitStepper(grid1, 0.3, preset("gauge1")).nonlinear(u)
    np.testing.assert_allclose(np.abs(out), np.abs(u), rtol=1e-15)


def test_mass_conservation_gauge(grid1):
    u0 = soliton_like(grid1)
    traj = solve_interval(u0, 0.0, 10.0, 1000, preset("gauge1"), stride=1000)
    assert abs(traj[-1].norm() / u0.norm() - 1) < 1e-8


def test_solve_interval_single_step(grid1):
    u0 = soliton_like(grid1)
    nl = preset("gauge1")
    traj = solve_interval(u0, 1.0, 1.4, 1, nl)
    assert list(traj.times) == [1.0, 1.4]
    assert relative_error(traj[-1], step_strang(u0, 0.4, nl)) < 1e-14


def test_solve_interval_zero_field(grid1):
    traj = solve_interval(Field.zeros(grid1), 0.0, 1.0, 10, preset("cos3"))
    assert np.all(traj.values == 0)


def test_linear_limit_matches_one_free_propagation(grid1):
    u0 = soliton_like(grid1)
    traj = solve_interval(u0, 0.0, 3.0, 60, preset("cos3").scaled(0))
    assert relative_error(traj[-1], free_propagate(u0, 3.0)) < 1e-12


def test_reversibility_gauge(grid1):
    u0 = soliton_like(grid1)
    nl = preset("gauge1")
    fwd = solve_interval(u0, 1.0, 3.0, 200, nl, stride=200)
    back = solve_interval(fwd[-1], 3.0, 1.0, 200, nl, stride=200)
    assert relative_error(back[-1], u0) < 1e-8


def test_reversibility_general_rk4(grid1):
    u0 = soliton_like(grid1, 0.5)
    nl = preset("cos3")
    fwd = solve_interval(u0, 1.0, 2.0, 200, nl, stride=200)
    back = solve_interval(fwd[-1], 2.0, 1.0, 200, nl, stride=200)
    assert relative_error(back[-1], u0) < 1e-6


def test_stride_records_endpoints(grid1):
    traj = solve_interval(soliton_like(grid1), 0.0, 1.0, 10, preset("gauge1"), stride=3)
    np.testing.assert_allclose(traj.times, [0, 0.3, 0.6, 0.9, 1.0])


def test_backward_times_decrease(grid1):
    traj = solve_interval(soliton_like(grid1), 2.0, 1.0, 4, preset("gauge1"))
    assert np.all(np.diff(traj.times) < 0)
    assert np.all(np.diff(traj.reversed().times) > 0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_integration_failure_names_step(grid1):
    u0 = Field(grid1, np.full(grid1.shape, 1e200 + 0j))
    with pytest.raises(IntegrationError, match="step 1"):
        solve_interval(u0, 0.0, 1.0, 5, preset("cos3"))


def test_dealias_mask_removes_high_modes(grid1):
    u = soliton_like(grid1)
    out = step_strang(u, 0.1, preset("cos3"), dealias=True).to_frequency()
    hi = np.abs(out.grid.xi1) >= (2 / 3) * grid1.nyquist
    assert np.max(np.abs(out.values[hi])) < 1e-14 * np.max(np.abs(out.values))


@pytest.mark.parametrize("name", ["gauge1", "cos3"])
def test_strang_second_order(name):
    # reference at dt/8, observed order from the dt and dt/2 errors
    g = Grid(1, 256, 40.0)
    u0 = soliton_like(g)
    nl = preset(name)
    ref = solve_interval(u0, 1.0, 2.0, 320, nl, stride=320)[-1]
    e1 = relative_error(solve_interval(u0, 1.0, 2.0, 40, nl, stride=40)[-1], ref)
    e2 = relative_error(solve_interval(u0, 1.0, 2.0, 80, nl, stride=80)[-1], ref)
    assert 1.8 <= np.log2(e1 / e2) <= 2.2


def test_trajectory_rejects_nonmonotone_times(grid1):
    vals = np.zeros((3,) + grid1.shape)
    with pytest.raises(ValueError):
        Trajectory(grid1, [0.0, 2.0, 1.0], vals)


def test_field_shape_and_side_checks(grid1):
    with pytest.raises(ValueError):
        Field(grid1, np.zeros(10))
    a = Field.zeros(grid1)
    with pytest.raises(ValueError):
        a - a.to_frequency()
    assert a.to_frequency().side is Side.FREQUENCY


def test_xd_norm_dimension_dependent():
    g1 = Grid(1, 32, 4.0)
    f = Field(g1, np.full(g1.shape, 2.0 + 0j))
    assert f.xd_norm() == 2.0
    g2 = Grid(2, 32, 4.0)
    f2 = Field(g2, np.full(g2.shape, 2.0 + 0j))
    assert f2.xd_norm() == pytest.approx(2.0 * 16**0.25)
