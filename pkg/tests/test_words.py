import pytest

from branchgroups.presets import ggs_preset
from branchgroups.tree import level_vertices
from branchgroups.words import BudgetExhausted, Word

from conftest import random_word


def W(preset, text):
    return Word.from_str(preset, text)


# -- actions on vertices ---------------------------------------------------


def test_generator_actions(grig):
    a = W(grig, "a")
    assert a.apply((0,)) == (1,)
    assert a.apply((1, 0, 1)) == (0, 0, 1)
    b = W(grig, "b")
    # b = (a, c): swaps below 0 via a, recurses below 1 via c
    assert b.apply((0, 0)) == (0, 1)
    assert b.apply((1, 0)) == (1, 0)
    # b|_11 = d, which fixes the left child
    assert b.apply((1, 1, 0)) == (1, 1, 0)
    d = W(grig, "d")
    assert d.apply((0, 1, 1)) == (0, 1, 1)
    assert d.apply((1, 1, 0, 0)) == (1, 1, 0, 1)


def test_composition_convention(grig, rng):
    # (gh)(w) = g(h(w))
    for _ in range(50):
        g = random_word(grig, rng, 8)
        h = random_word(grig, rng, 8)
        for v in level_vertices(2, 4):
            assert (g * h).apply(v) == g.apply(h.apply(v))


def test_section_rule(grig, rng):
    # (gh)_v = g_{h(v)} h_v
    for _ in range(30):
        g = random_word(grig, rng, 6)
        h = random_word(grig, rng, 6)
        for v in level_vertices(2, 2):
            lhs = (g * h).section(v)
            rhs = g.section(h.apply(v)) * h.section(v)
            assert lhs.portrait(4).to_dict() == rhs.portrait(4).to_dict()


def test_known_sections(grig):
    b = W(grig, "b")
    assert str(b.section((0,))) == "a"
    assert str(b.section((1,))) == "c"
    assert str(b.section((1, 1))) == "d"
    t = W(grig, "abab")
    assert str(t.section((0,))) == "c a"
    assert str(t.section((1,))) == "a c"


def test_inverse_and_identity(grig, rng):
    for _ in range(40):
        g = random_word(grig, rng, 12)
        assert (g * g.inverse()).is_identity()
        assert (g.inverse() * g).is_identity()


def test_word_problem_known_relations(grig):
    assert W(grig, "a a").is_identity()
    assert W(grig, "b c d").is_identity()
    assert not W(grig, "a b").is_identity()
    assert not W(grig, "b").is_identity()
    assert W(grig, "abab abab abab abab abab abab abab abab "
                   "abab abab abab abab abab abab abab abab").is_identity()


# -- orders ----------------------------------------------------------------


def test_generator_orders_frozen(grig):
    for name in "abcd":
        assert W(grig, name).order() == 2


def test_product_orders_frozen(grig):
    assert W(grig, "a b").order() == 16
    assert W(grig, "a c").order() == 8
    assert W(grig, "a d").order() == 4


def test_identity_order(grig):
    assert Word.identity(grig).order() == 1


def test_order_against_power_oracle(grig, rng):
    # ord(g) is the least m with g^m trivial; cross-check by direct powering
    for _ in range(15):
        g = random_word(grig, rng, 10)
        m = g.order()
        assert (g**m).is_identity()
        for p in (2, 3, 5, 7):
            if m % p == 0:
                assert not (g ** (m // p)).is_identity()


def test_orders_are_powers_of_two(grig, rng):
    for _ in range(30):
        g = random_word(grig, rng, 20)
        m = g.order()
        assert m & (m - 1) == 0


def test_nontorsion_raises_budget():
    # GGS with all-nonzero vector of even weight on d=3: contains elements
    # of infinite order is not guaranteed, so use a known non-contracting
    # style check: tiny budget on a deep element must raise, never hang.
    p = ggs_preset(3, (1, 1))
    with pytest.raises(BudgetExhausted):
        Word.from_str(p, "a b").order(budget=3)


# -- portraits -------------------------------------------------------------


def test_portrait_matches_action(grig, rng):
    for _ in range(20):
        g = random_word(grig, rng, 10)
        port = g.portrait(5)
        for v in level_vertices(2, 5):
            assert port.walk(v) == g.apply(v)


def test_portrait_trivial_iff_identity(grig):
    assert Word.identity(grig).portrait(4).is_trivial()
    assert W(grig, "b c d").portrait(6).is_trivial()
    assert not W(grig, "d").portrait(4).is_trivial()


def test_portrait_serialization(grig):
    data = W(grig, "a").portrait(1).to_dict()
    assert data == {"depth": 1, "decorations": {"": [1, 0]}}


# -- algebra helpers -------------------------------------------------------


def test_powers(grig):
    g = W(grig, "a b")
    assert (g**0).is_identity()
    assert (g**16).is_identity()
    assert not (g**8).is_identity()
    assert ((g**-1) * g).is_identity()


def test_conjugate_by(grig):
    g = W(grig, "b")
    f = W(grig, "a")
    conj = g.conjugate_by(f)
    assert str(conj) == "a b a"
    for v in level_vertices(2, 3):
        assert conj.apply(v) == f.apply(g.apply(f.inverse().apply(v)))


def test_equality_and_hash(grig):
    assert W(grig, "b c") == W(grig, "d")
    assert hash(W(grig, "b c")) == hash(W(grig, "d"))
    assert W(grig, "a") != W(grig, "b")


def test_fixes_level(grig):
    assert W(grig, "b").fixes_level(1)
    assert not W(grig, "a").fixes_level(1)
    assert W(grig, "abab").fixes_level(1)
    assert not W(grig, "abab").fixes_level(2)


def test_mixed_preset_multiplication_rejected(grig, gs):
    with pytest.raises(ValueError):
        Word.generator(grig, "a") * Word.generator(gs, "a")


# -- GGS engine ------------------------------------------------------------


def test_gs_orders(gs):
    assert W(gs, "a").order() == 3
    assert W(gs, "b").order() == 3
    assert W(gs, "a b").order() == 9


def test_gs_actions(gs):
    a = W(gs, "a")
    assert a.apply((0,)) == (1,)
    assert a.apply((2,)) == (0,)
    b = W(gs, "b")
    assert b.apply((0, 0)) == (0, 1)
    assert b.apply((1, 0)) == (1, 2)
    assert str(b.section((2,))) == "b"


def test_gs_word_problem(gs, rng):
    for _ in range(20):
        g = random_word(gs, rng, 10)
        assert (g * g.inverse()).is_identity()
        m = g.order()
        assert m in (1, 3, 9, 27, 81)
