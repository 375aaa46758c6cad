import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rxnkit.builtins import BUILTINS
from rxnkit.decomposition import load_permanganate_species
from rxnkit.formula import FormulaError, format_formula, parse_formula
from rxnkit.network import Complex, ReactionNetwork, ReactionStep, Species
from rxnkit.parser import ParseError, parse_network, parse_reaction, parse_species_file, parse_steps, serialize_network

# Charges as printed in the species table of the permanganate/oxalate study.
TABLE_CHARGES = {
    "H2C2O4": 0, "HC2O4m": -1, "Hp": 1, "C2O4m2": -2, "Mn2p": 2, "MnC2O4": 0, "MnO4m": -1, "MnO2": 0,
    "Mn3p": 3, "CO2": 0, "H2O": 0, "CO2m": -1, "MnO2_H2C2O4": 0, "MnC2O4p": 1, "MnC2O4_2m": -1,
    "MnC2O4_MnO4_H": 0, "MnC2O4_MnO3p": 1, "MnC2O4_MnO3_Hp2": 2, "H_MnO2_H2C2O4p": 1,
}


class TestFormula:
    def test_simple(self):
        c = parse_formula("H2C2O4")
        assert c.atoms == {"H": 2, "C": 2, "O": 4} and c.charge == 0

    def test_caret_charge(self):
        c = parse_formula("MnO4^-")
        assert c.atoms == {"Mn": 1, "O": 4} and c.charge == -1
        assert parse_formula("C2O4^2-").charge == -2
        assert parse_formula("Mn^3+").charge == 3

    def test_bare_sign_forms(self):
        assert parse_formula("H+").charge == 1
        assert parse_formula("OH-").atoms == {"O": 1, "H": 1}
        assert parse_formula("SO4 2-").charge == -2

    def test_complex_members_sum(self):
        c = parse_formula("[MnC2O4,MnO4^-,H^+]")
        assert c.atoms == {"Mn": 2, "C": 2, "O": 8, "H": 1} and c.charge == 0

    def test_parentheses_multiplier(self):
        assert parse_formula("[Mn(C2O4)2]^-").atoms == {"Mn": 1, "C": 4, "O": 8}
        assert parse_formula("Ca(OH)2").atoms == {"Ca": 1, "O": 2, "H": 2}

    def test_outer_marker_is_total_charge(self):
        assert parse_formula("[MnC2O4^2+,MnO3^-]^+").charge == 1
        with pytest.raises(FormulaError):
            parse_formula("[MnC2O4^2+,MnO3^-]^2+")

    @pytest.mark.parametrize("bad", ["Xx2", "H2(O", "[H2,O", "H^", "H^2", "h2", "", "H2]"])
    def test_errors(self, bad):
        with pytest.raises(FormulaError):
            parse_formula(bad)

    def test_error_position(self):
        with pytest.raises(FormulaError) as info:
            parse_formula("H2Qq")
        assert info.value.pos == 2

    def test_table_species_all_parse_with_printed_charges(self):
        species = load_permanganate_species()
        assert len(species) == 19
        assert {s.name: s.composition.charge for s in species} == TABLE_CHARGES
        elements = set().union(*(s.composition.atoms for s in species))
        assert elements == {"C", "H", "Mn", "O"}

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.sampled_from(["H2O", "MnO4^-", "H^+", "C2O4^2-", "CO2", "Mn^2+", "[MnO2,H2C2O4]"]),
                    min_size=1, max_size=4))
    def test_bracket_additivity(self, members):
        total = parse_formula(f"[{','.join(members)}]")
        parts = [parse_formula(m) for m in members]
        expect = parts[0]
        for p in parts[1:]:
            expect = expect + p
        assert total == expect

    @settings(max_examples=80, deadline=None)
    @given(st.dictionaries(st.sampled_from(["C", "H", "O", "Mn", "N", "Cl"]), st.integers(1, 12), min_size=1),
           st.integers(-4, 4))
    def test_format_round_trip(self, atoms, charge):
        from rxnkit.network import Composition

        comp = Composition(atoms, charge)
        assert parse_formula(format_formula(comp)) == comp


class TestNetworkGrammar:
    def test_single_step(self):
        net = parse_network("A -> B, 0.04")
        assert len(net.steps) == 1
        s = net.steps[0]
        assert dict(s.reactants) == {"A": 1} and dict(s.products) == {"B": 1} and s.rate == 0.04

    def test_reversible_expands_forward_first(self):
        net = parse_network("2 X <-> X, 0.33, 0.72")
        a, b = net.steps
        assert dict(a.reactants) == {"X": 2} and dict(a.products) == {"X": 1} and a.rate == 0.33
        assert dict(b.reactants) == {"X": 1} and dict(b.products) == {"X": 2} and b.rate == 0.72

    def test_empty_input(self):
        with pytest.raises(ParseError, match="no reactions"):
            parse_network("")
        with pytest.raises(ParseError, match="no reactions"):
            parse_network("# only a comment\n")

    def test_empty_complex_and_comments(self):
        net = parse_network("0 -> A, 1  # inflow\n∅ <- A, 2" .replace("∅ <- A", "A -> ∅"))
        assert net.steps[0].reactants == Complex() and net.steps[1].products == Complex()

    def test_externals_and_first_appearance_order(self):
        net = parse_network("external: A, P\nA -> X, 1\nX -> Y, 2\nY -> P, 3")
        assert net.species_names == ["A", "P", "X", "Y"]
        assert net.external_species == ["A", "P"]

    @pytest.mark.parametrize(
        "text, line, column",
        [
            ("A -> B", 1, 7),
            ("A -> B, x", 1, 9),
            ("A -> B, 1\n0 A -> B, 1", 2, 1),
            ("A -> B, 1\nA <-> B, 1", 2, 1),
            ("external: A, A\nA -> B, 1", 1, 1),
            ("A -> B, 1\nA => B, 1", 2, 1),
            ("A + -> B, 1", 1, 1),
        ],
    )
    def test_errors_carry_position(self, text, line, column):
        with pytest.raises(ParseError) as info:
            parse_network(text)
        assert info.value.line == line
        assert info.value.column >= 1
        if line == 1 and column > 1:
            assert info.value.column <= len(text.splitlines()[0]) + 1

    def test_formula_annotations(self):
        net = parse_network("H2 + Br2 -> 2 HBr, 1\nH2 = H2\nBr2 = Br2\nHBr = HBr")
        comp = {s.name: s.composition for s in net.species}
        assert comp["HBr"].atoms == {"H": 1, "Br": 1}

    def test_parse_steps_defaults_rate(self):
        net = parse_steps("A -> B\nB -> C, 2")
        assert list(net.rates) == [1.0, 2.0]

    def test_parse_reaction(self):
        r = parse_reaction("2 MnO4m + 6 Hp -> 2 Mn2p")
        assert dict(r.reactants) == {"MnO4m": 2, "Hp": 6}
        with pytest.raises(ParseError):
            parse_reaction("A + B")

    def test_species_file(self):
        sp = parse_species_file("A = H2O\nB = H^+\n")
        assert [s.name for s in sp] == ["A", "B"] and sp[1].composition.charge == 1


class TestSerialization:
    def test_robertson_lines(self):
        text = serialize_network(BUILTINS["Robertson"].network)
        body = [l for l in text.splitlines() if "->" in l]
        assert body == ["A -> B, 0.04", "2 B -> B + C, 30000000.0", "B + C -> A + C, 10000.0"]

    def test_external_header(self):
        text = serialize_network(BUILTINS["Brusselator"].network)
        assert "external: A, P" in text.splitlines()

    @pytest.mark.parametrize("name", sorted(BUILTINS))
    def test_builtins_round_trip(self, name):
        net = BUILTINS[name].network
        assert parse_network(serialize_network(net)) == net


names = st.sampled_from(["A", "B", "C", "X_1", "Y2", "Mn2p", "s"])
complexes = st.dictionaries(names, st.integers(1, 3), max_size=3)


@st.composite
def networks(draw):
    steps = []
    for _ in range(draw(st.integers(1, 6))):
        a = draw(complexes)
        b = draw(complexes)
        if a == b:
            continue
        rate = draw(st.floats(0, 1e9, allow_nan=False, allow_infinity=False))
        steps.append(ReactionStep(a, b, rate))
    if not steps:
        steps.append(ReactionStep({"A": 1}, {}, 1.0))
    used = sorted({n for s in steps for n in (*s.reactants, *s.products)} | {"A"})
    order = draw(st.permutations(used))
    ext = draw(st.sets(st.sampled_from(order)))
    species = tuple(Species(n, None, n in ext) for n in order)
    return ReactionNetwork(species, tuple(steps))


@settings(max_examples=150, deadline=None)
@given(networks())
def test_round_trip_random_networks(net):
    back = parse_network(serialize_network(net))
    assert back == net
    np.testing.assert_array_equal(back.rates, net.rates)
