import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rxnkit.builtins import builtin
from rxnkit.network import (
    Complex,
    Composition,
    KineticSystem,
    ReactionNetwork,
    ReactionStep,
    Species,
    arrhenius,
    conserved_quantities,
    mass_action_jacobian,
    mass_action_rhs,
    stoichiometry,
)
from rxnkit.parser import parse_network


def test_complex_behaves_like_multiset():
    c = Complex({"A": 2, "B": 0, "C": 1})
    assert dict(c) == {"A": 2, "C": 1}
    assert c.order == 3
    assert c == Complex([("C", 1), ("A", 2)])
    assert hash(c) == hash(Complex({"C": 1, "A": 2}))
    assert str(Complex()) == "0"
    with pytest.raises(ValueError):
        Complex({"A": -1})
    with pytest.raises(ValueError):
        Complex({"A": 1.5})


def test_step_validation():
    with pytest.raises(ValueError):
        ReactionStep({"A": 1}, {"A": 1})
    with pytest.raises(ValueError):
        ReactionStep({"A": 1}, {"B": 1}, -1.0)
    with pytest.raises(ValueError):
        ReactionStep({"A": 1}, {"B": 1}, math.inf)


def test_network_rejects_unknown_and_duplicate_species():
    with pytest.raises(ValueError):
        ReactionNetwork((Species("A"), Species("A")), ())
    with pytest.raises(ValueError):
        ReactionNetwork((Species("A"),), (ReactionStep({"A": 1}, {"B": 1}),))


def test_robertson_stoichiometry():
    net, _, _ = builtin("Robertson")
    alpha, beta, gamma = stoichiometry(net)
    np.testing.assert_array_equal(alpha, [[1, 0, 0], [0, 2, 1], [0, 0, 1]])
    np.testing.assert_array_equal(beta, [[0, 0, 1], [1, 1, 0], [0, 1, 1]])
    np.testing.assert_array_equal(gamma, beta - alpha)


def test_rhs_matches_hand_written_robertson():
    net, k, _ = builtin("Robertson")
    c = np.array([0.7, 2e-5, 0.3])
    a, b, cc = c
    expected = [-0.04 * a + 1e4 * b * cc, 0.04 * a - 3e7 * b**2 - 1e4 * b * cc, 3e7 * b**2]
    np.testing.assert_allclose(mass_action_rhs(net, k, c), expected, rtol=1e-14)


def test_zero_power_convention_and_zeroth_order_step():
    net = parse_network("0 -> A, 2.5\nA -> 0, 1")
    np.testing.assert_allclose(mass_action_rhs(net, [2.5, 1.0], [0.0]), [2.5])


def test_external_species_fold_into_rates():
    net, k, _ = builtin("Brusselator")
    ks = KineticSystem(net, k, {"A": 3.0})
    assert ks.species == ["X", "Y"]
    np.testing.assert_allclose(ks.k, [1.92 * 3, 5.76, 5.6, 4.8])
    x, y = 0.4, 1.3
    rhs = ks.rhs([x, y])
    np.testing.assert_allclose(rhs, [1.92 * 3 - 5.76 * x + 5.6 * x * x * y - 4.8 * x, 5.76 * x - 5.6 * x * x * y])
    with pytest.raises(ValueError):
        KineticSystem(net, k, {"X": 1.0})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=3, max_size=3))
def test_jacobian_matches_finite_differences(c):
    net = parse_network("A + B -> C, 1.3\n2 C -> A, 0.7\nB -> 2 B, 0.2\n3 A -> 0, 0.05")
    k = net.rates
    c = np.array(c) + 0.1
    J = mass_action_jacobian(net, k, c)
    h = 1e-6
    fd = np.column_stack([(mass_action_rhs(net, k, c + h * e) - mass_action_rhs(net, k, c - h * e)) / (2 * h)
                          for e in np.eye(3)])
    np.testing.assert_allclose(J, fd, rtol=1e-6, atol=1e-6)


def test_conserved_quantities_robertson():
    net, _, _ = builtin("Robertson")
    assert conserved_quantities(net) == [(1, 1, 1)]


def test_conserved_quantities_are_left_kernel_vectors():
    net = parse_network("A + B -> C, 1\nC -> A + B, 1\nC + D -> E, 1")
    _, _, gamma = stoichiometry(net)
    basis = conserved_quantities(net)
    assert len(basis) == 5 - np.linalg.matrix_rank(gamma)
    for v in basis:
        assert not np.any(np.array(v) @ gamma)


def test_no_conservation_with_inflow():
    net = parse_network("0 -> A, 1\nA -> B, 1")
    assert conserved_quantities(net) == []


def test_arrhenius():
    assert arrhenius(2.0, 0.0, 0.0, 300.0) == 2.0
    assert arrhenius(1.0, 1.0, 0.0, 300.0) == 300.0
    assert math.isclose(arrhenius(1.0, 0.0, 8.314462618 * 300, 300.0), math.exp(-1))
    with pytest.raises(ValueError):
        arrhenius(1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        arrhenius(-1.0, 0.0, 0.0, 300.0)


def test_composition_arithmetic():
    h2o = Composition({"H": 2, "O": 1})
    assert (h2o + h2o).atoms == {"H": 4, "O": 2}
    assert (3 * h2o).atoms == {"H": 6, "O": 3}
    with pytest.raises(ValueError):
        Composition({})


def test_with_rates_and_bad_shapes():
    net, k, c0 = builtin("Robertson")
    net2 = net.with_rates(2 * k)
    np.testing.assert_allclose(net2.rates, 2 * k)
    with pytest.raises(ValueError):
        net.with_rates([1.0])
    with pytest.raises(ValueError):
        KineticSystem(net).rhs([1.0, 2.0])
