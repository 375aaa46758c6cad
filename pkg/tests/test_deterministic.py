import numpy as np
import pytest
from scipy.integrate import solve_ivp

from oracles import logistic, richardson_implicit_euler
from rxnkit.builtins import builtin
from rxnkit.deterministic import (
    IntegratorConfig,
    NonFiniteState,
    StepLimitExceeded,
    explicit_step,
    integrate,
    simulate,
    stiff_step,
)
from rxnkit.network import KineticSystem
from rxnkit.parser import parse_network

LOGISTIC = parse_network("X -> 2 X, 1.5\n2 X -> X, 0.5")


@pytest.fixture(scope="module")
def robertson():
    return builtin("Robertson")


@pytest.mark.parametrize("method", ["stiff", "explicit"])
def test_logistic_against_closed_form(method):
    times = np.linspace(0, 6, 13)[1:]
    cfg = IntegratorConfig(method=method, rtol=1e-9, atol=1e-12, output_times=times)
    tr = simulate(LOGISTIC, c0=[0.1], t_span=(0, 6), config=cfg)
    np.testing.assert_array_equal(tr.times, times)
    np.testing.assert_allclose(tr["X"], logistic(times, 0.5, 1.5, 0.1), rtol=1e-7)


def test_robertson_against_richardson_implicit_euler(robertson):
    net, k, c0 = robertson
    ks = KineticSystem(net, k)
    ref = richardson_implicit_euler(ks.rhs, ks.jacobian, c0, 1.0, 4000)
    tr = simulate(net, k, c0, (0, 1.0), IntegratorConfig(rtol=1e-9, atol=1e-14))
    np.testing.assert_allclose(tr.final, ref, rtol=2e-5, atol=1e-10)


def test_robertson_against_scipy_radau(robertson):
    net, k, c0 = robertson
    ks = KineticSystem(net, k)
    times = [0.4, 40.0, 4e3, 4e5]
    ref = solve_ivp(lambda t, y: ks.rhs(y), (0, 4e5), c0, method="Radau", jac=lambda t, y: ks.jacobian(y),
                    rtol=1e-11, atol=1e-16, t_eval=times)
    tr = simulate(net, k, c0, (0, 4e5), IntegratorConfig(rtol=1e-8, atol=1e-14, output_times=times))
    np.testing.assert_allclose(tr.states, ref.y.T, rtol=1e-5, atol=1e-12)


def test_robertson_long_horizon_conserves(robertson):
    net, k, c0 = robertson
    times = np.logspace(-6, 11, 60)
    tr = simulate(net, k, c0, (0, 1e11), IntegratorConfig(rtol=1e-6, atol=1e-12, output_times=times))
    assert np.max(np.abs(tr.states.sum(axis=1) - 1)) <= 1e-6
    assert tr.states.min() >= -1e-10
    assert tr.final[2] > 0.999


def test_rodas3_stability_function_vanishes_at_infinity():
    lam = -1e6
    y, _ = stiff_step(np.array([1.0]), 0.0, 1.0, lambda t, y: lam * y, lambda t, y: np.array([[lam]]))
    assert abs(y[0]) < 1e-5


def _fixed_step_error(step, n):
    f = lambda t, y: 1.5 * y - 0.5 * y * y
    jac = lambda t, y: np.array([[1.5 - y[0]]])
    y = np.array([0.1])
    h = 4.0 / n
    for i in range(n):
        y = step(y, i * h, h, f, jac)
    return abs(y[0] - logistic(4.0, 0.5, 1.5, 0.1))


@pytest.mark.parametrize("step, order, ns", [
    (lambda y, t, h, f, j: stiff_step(y, t, h, f, j)[0], 3, (160, 320, 640)),
    (lambda y, t, h, f, j: explicit_step(y, t, h, f)[0], 5, (20, 40, 80)),
])
def test_observed_convergence_order(step, order, ns):
    errs = [_fixed_step_error(step, n) for n in ns]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert rates.min() >= order - 0.3


def test_embedded_error_is_lower_order():
    # local error of the embedded second-order solution scales like h^3
    f = lambda t, y: 1.5 * y - 0.5 * y * y
    jac = lambda t, y: np.array([[1.5 - y[0]]])
    e1 = abs(stiff_step(np.array([0.1]), 0, 0.02, f, jac)[1][0])
    e2 = abs(stiff_step(np.array([0.1]), 0, 0.01, f, jac)[1][0])
    assert 6 <= e1 / e2 <= 10


def test_stiff_needs_far_fewer_steps(robertson):
    net, k, c0 = robertson
    stiff = simulate(net, k, c0, (0, 100), IntegratorConfig("stiff", rtol=1e-6, atol=1e-12))
    expl = simulate(net, k, c0, (0, 100), IntegratorConfig("explicit", rtol=1e-6, atol=1e-12))
    assert expl.n_steps >= 100 * stiff.n_steps
    np.testing.assert_allclose(stiff.final, expl.final, rtol=1e-4, atol=1e-9)


def test_dense_output_mode_records_every_step():
    tr = simulate(LOGISTIC, c0=[0.1], t_span=(0, 3))
    assert len(tr) == tr.n_steps + 1 and tr.times[0] == 0 and tr.times[-1] == 3


def test_output_time_at_start_included():
    tr = simulate(LOGISTIC, c0=[0.1], t_span=(0, 1), config=IntegratorConfig(output_times=[0, 0.5, 1]))
    assert tr.times.tolist() == [0, 0.5, 1] and tr.states[0, 0] == 0.1


def test_external_species_held_constant():
    net, k, _ = builtin("Brusselator")
    tr = simulate(net, k, [1.0, 1.0], (0, 1), external={"A": 1.0})
    assert tr.species == ("X", "Y")


@pytest.mark.parametrize("kwargs, exc", [
    (dict(t_span=(1, 1)), ValueError),
    (dict(c0=[-1.0]), ValueError),
    (dict(c0=[1.0, 2.0]), ValueError),
    (dict(config=IntegratorConfig(output_times=[0.5, 0.2])), ValueError),
    (dict(config=IntegratorConfig(output_times=[2.0])), ValueError),
    (dict(c0=[np.nan]), NonFiniteState),
])
def test_invalid_input(kwargs, exc):
    args = dict(c0=[0.1], t_span=(0, 1))
    args.update(kwargs)
    with pytest.raises(exc):
        simulate(LOGISTIC, **args)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(max_steps=0)


def test_step_limit(robertson):
    net, k, c0 = robertson
    with pytest.raises(StepLimitExceeded) as info:
        simulate(net, k, c0, (0, 100), IntegratorConfig("explicit", max_steps=200))
    assert 0 < info.value.t_reached < 100


def test_blow_up_is_reported():
    net = parse_network("2 X -> 3 X, 1")
    with pytest.raises(NonFiniteState.__mro__[1]):
        simulate(net, c0=[1.0], t_span=(0, 2))


def test_integrate_needs_jacobian_for_stiff():
    with pytest.raises(ValueError):
        integrate(lambda t, y: -y, None, [1.0], (0, 1))
