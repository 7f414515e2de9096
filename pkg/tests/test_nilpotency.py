import math
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import cycles_text, perm_generators
from higmetric import catalog
from higmetric.errors import EpsilonOutOfRange, NotContractive
from higmetric.group import build_from_permutations
from higmetric.lengths import attained_values, discrete_length, hamming_length, unitary_length
from higmetric.nilpotency import corollary_check, lower_central_series, nilpotency_class, zassenhaus_check
from oracles import lower_central_orders


@pytest.fixture(scope="module")
def q8():
    return catalog.quaternion_group()


@pytest.fixture(scope="module")
def q8_exact(q8):
    return catalog.q8_exact_length(q8)


class TestLowerCentralSeries:
    def test_q8(self, q8):
        s = lower_central_series(q8)
        assert s.orders == [8, 2, 1] and not s.stabilized

    def test_abelian(self):
        assert lower_central_series(catalog.cyclic_group(9)).orders == [9, 1]

    def test_s3_stabilizes(self):
        s = lower_central_series(catalog.symmetric_group(3))
        assert s.orders == [6, 3] and s.stabilized

    @pytest.mark.parametrize("name", ["s4", "a4", "q8", "dihedral:8", "dihedral:6", "dihedral:16", "cyclic:12"])
    def test_against_oracle(self, name):
        G = catalog.build(name)
        orders, reaches_trivial = lower_central_orders(G.mul.tolist())
        s = lower_central_series(G)
        assert s.orders == orders and s.stabilized != reaches_trivial

    @settings(max_examples=30, deadline=None)
    @given(perm_generators(max_degree=5))
    def test_random_groups_against_oracle(self, data):
        degree, gens = data
        G = build_from_permutations([cycles_text(g) for g in gens], degree)
        orders, _ = lower_central_orders(G.mul.tolist())
        assert lower_central_series(G).orders == orders


class TestNilpotencyClass:
    @pytest.mark.parametrize(
        "name,nil",
        [("trivial", 0), ("q8", 2), ("s3", None), ("cyclic:5", 1), ("dihedral:4", 2), ("dihedral:8", 3),
         ("dihedral:16", 4), ("dihedral:6", None), ("a4", None)],
    )
    def test_values(self, name, nil):
        assert nilpotency_class(catalog.build(name)) == nil


class TestZassenhaus:
    def test_q8_exact_tight(self, q8_exact):
        z = zassenhaus_check(q8_exact, Fraction(1, 5))
        assert z.nil_of_G_eps == 2 and z.subgroup_order == 8
        assert z.exact and z.ok
        assert z.bound == pytest.approx(2, abs=1e-12)
        assert math.log(0.64) / math.log(0.8) == pytest.approx(2, abs=1e-12)

    def test_decimal_class_metric(self, q8):
        vals = {0: 0.0, q8.element("-1"): 0.16}
        vals.update({q8.element(x): 0.2 for x in "ijk"})
        z = zassenhaus_check(catalog.class_length(q8, vals), 0.2)
        assert z.ok and z.nil_of_G_eps == 2

    def test_q8_unitary_below_delta(self, q8):
        z = zassenhaus_check(unitary_length(q8), 0.2)
        assert z.subgroup_order == 1 and z.nil_of_G_eps == 0 and z.ok

    @pytest.mark.parametrize("eps", [0.3, "1/4", -0.1])
    def test_out_of_range(self, q8_exact, eps):
        with pytest.raises(EpsilonOutOfRange):
            zassenhaus_check(q8_exact, eps)

    def test_not_contractive(self):
        with pytest.raises(NotContractive):
            zassenhaus_check(hamming_length(6), 0.1)

    def test_exact_equality_counts(self, q8_exact):
        # (4 * 1/5)^2 = 16/25 = 4 * 4/25 sits on the boundary
        assert (4 * Fraction(1, 5)) ** 2 == 4 * Fraction(4, 25)
        assert zassenhaus_check(q8_exact, "1/5").ok

    def test_large_delta_branch(self):
        z = zassenhaus_check(discrete_length(catalog.build("s4")), 0.1)
        assert z.subgroup_order == 1 and z.ok

    def test_trivial_group(self):
        assert zassenhaus_check(discrete_length(catalog.build("trivial")), 0.1).ok

    @pytest.mark.parametrize("name", ["q8", "dihedral:4", "dihedral:8", "dihedral:16", "s4", "cyclic:16", "a4"])
    def test_holds_for_every_contractive_metric(self, name):
        G = catalog.build(name)
        for m in catalog.applicable_metrics(G):
            lf = catalog.metric(G, m)
            for v in attained_values(lf):
                if v < 0.25:
                    assert zassenhaus_check(lf, v).ok, (name, m, v)


class TestCorollary:
    def test_q8_exact(self, q8_exact):
        c = corollary_check(q8_exact)
        assert c.applicable and c.ok and c.nil == 2 and c.eta == Fraction(1, 5)
        assert c.bound == pytest.approx(2, abs=1e-12)

    def test_discrete_not_applicable(self):
        c = corollary_check(discrete_length(catalog.build("q8")))
        assert not c.applicable and c.ok

    def test_trivial_group(self):
        c = corollary_check(discrete_length(catalog.build("trivial")))
        assert c.ok and c.nil == 0
