import itertools

import pytest

from rsol.formulas import (
    And, ForallFO, FormulaError, FOVar, Not, PredApp, Signature, TermEq, Var,
    alpha_eq, free_variables, parse,
)
from rsol.theta import (
    FormulaEnumerator, ThetaMember, all_fo, classify_prefix, dsl,
    enumerate_up_to, family_from_cli, in_prefix_class, load_family,
    prefix_family, theta_at, weak_so,
)

SIG = Signature(predicates={"P0": 1}, constants=[])
SIG2 = Signature(predicates={"P0": 1, "P1": 2}, constants=["c0"])


def test_weak_so_member_two():
    fam = weak_so(SIG, 1)
    m = theta_at(fam, 2)
    assert m.formula == parse("x0 = x1 | x0 = x2 | x0 = x3", SIG)
    assert m.slots == (FOVar(0),)
    assert m.params == (FOVar(1), FOVar(2), FOVar(3))


def test_weak_so_enumerate_up_to():
    fam = weak_so(SIG, 1)
    got = enumerate_up_to(fam, 1)
    assert [m.formula for m in got] == [parse("x0 = x1", SIG),
                                        parse("x0 = x1 | x0 = x2", SIG)]


def test_weak_so_needs_identity():
    with pytest.raises(FormulaError):
        weak_so(Signature(predicates={"P0": 1}, identity=False))


def test_weak_so_arity_two_shape():
    fam = weak_so(SIG, 2)
    m = theta_at(fam, 1)
    assert m.slots == (FOVar(0), FOVar(1))
    assert len(m.params) == 4
    assert m.formula == parse("x0 = x2 & x1 = x3 | x0 = x4 & x1 = x5", SIG)


def brute_force_smallest_single_free_var(sig):
    """Independent oracle: regenerate the size order with a fresh enumerator
    and scan for the first formula with exactly one free variable."""
    for f in FormulaEnumerator(sig):
        fo, _ = free_variables(f)
        if len(fo) == 1:
            return f
    raise AssertionError("unreachable")


def test_dsl_first_member_matches_bruteforce():
    fam = dsl(SIG)
    expected = brute_force_smallest_single_free_var(SIG)
    assert theta_at(fam, 0).formula == expected
    # frozen value: the smallest one-free-variable formula over {P0} is the atom
    assert expected == PredApp("P0", (Var(FOVar(0)),))


def test_dsl_members_have_no_parameters():
    fam = dsl(SIG)
    for m in enumerate_up_to(fam, 5):
        assert m.params == ()
        assert m.arity == 1
    keys = {m.key() for m in enumerate_up_to(fam, 5)}
    assert len(keys) == 6


def test_enumerators_injective_up_to_alpha():
    for fam in (weak_so(SIG, 1), dsl(SIG), all_fo(SIG)):
        keys = {m.key() for m in enumerate_up_to(fam, 50)}
        assert len(keys) == 51, fam.name


def test_theta_at_deterministic():
    fam = dsl(SIG)
    a = theta_at(fam, 7)
    b = theta_at(fam, 7)
    assert a is b
    fam2 = dsl(SIG)
    assert theta_at(fam2, 7).formula == a.formula


def test_all_fo_split_invariant():
    fam = all_fo(SIG2)
    for m in enumerate_up_to(fam, 40):
        fo, so = free_variables(m.formula)
        assert not so
        assert fo == set(m.slots) | set(m.params)
        assert m.arity >= 1


def test_all_fo_contains_parameter_splits():
    fam = all_fo(SIG2)
    seen_param_split = False
    for m in enumerate_up_to(fam, 80):
        if m.params:
            seen_param_split = True
            break
    assert seen_param_split


def test_all_fo_noparams():
    fam = all_fo(SIG2, parameters=False)
    for m in enumerate_up_to(fam, 30):
        assert m.params == ()


def test_arity_member_view():
    fam = all_fo(SIG2)
    m0 = fam.arity_member(2, 0)
    assert m0.arity == 2
    m1 = fam.arity_member(1, 3)
    assert m1.arity == 1
    with pytest.raises(FormulaError):
        dsl(SIG).arity_member(2, 0)


def test_weak_so_cardinality_property():
    """Member n defines, over any domain and parameters, a set of size 1..n+1."""
    fam = weak_so(SIG, 1)
    for n in range(3):
        m = theta_at(fam, n)
        for size in (1, 2, 3, 4):
            for params in itertools.product(range(size), repeat=len(m.params)):
                value = {
                    d for d in range(size)
                    if eval_equality_disjunction(m, d, params)
                }
                assert 1 <= len(value) <= n + 1


def eval_equality_disjunction(member, d, params):
    env = {member.slots[0]: d}
    env.update(dict(zip(member.params, params)))

    def ev(f):
        if isinstance(f, TermEq):
            return env[f.left.var] == env[f.right.var]
        if isinstance(f, And):
            return ev(f.left) and ev(f.right)
        # Or is stored as sugar
        return ev(f.left) or ev(f.right)

    return ev(member.formula)


def test_classify_prefix_examples():
    f = parse("exists x0 forall x1 (P0(x0) & P0(x1))", SIG)
    assert classify_prefix(f) == ("exists", 2)
    g = parse("P0(x0) & P0(x1)", SIG)
    assert classify_prefix(g) == ("both", 0)
    h = parse("forall x0 exists x1 forall x2 (P1(x0, x1) & P0(x2))", SIG2)
    assert classify_prefix(h) == ("forall", 3)


def test_classify_prefix_through_negation():
    f = parse("~forall x0 ~P0(x0)", SIG)
    assert classify_prefix(f) == ("exists", 1)


def test_prefix_family_members_stay_in_class():
    fam = prefix_family(SIG2, "exists", 1)
    for m in enumerate_up_to(fam, 15):
        assert in_prefix_class(m.formula, "exists", 1)


def test_member_invariants_enforced():
    with pytest.raises(FormulaError):
        ThetaMember(0, parse("P0(x0)", SIG), (FOVar(0), FOVar(1)), ())
    with pytest.raises(FormulaError):
        ThetaMember(0, parse("P0(x0)", SIG), (FOVar(0),), (FOVar(0),))


def test_load_family(tmp_path):
    p = tmp_path / "fam.txt"
    p.write_text("# custom\nx0 ; x1 ; x0 = x1\nx0 ; ; P0(x0)\n", encoding="utf-8")
    fam = load_family(str(p), SIG)
    assert theta_at(fam, 0).formula == parse("x0 = x1", SIG)
    assert theta_at(fam, 1).formula == parse("P0(x0)", SIG)
    # finite lists cycle so the enumerator stays total
    assert theta_at(fam, 2).formula == parse("x0 = x1", SIG)


def test_family_from_cli():
    assert family_from_cli("weak-so:2", SIG).name == "weak-so:2"
    assert family_from_cli("dsl", SIG).name == "dsl"
    assert family_from_cli("exists-n:2", SIG).name == "exists-n:2"
    with pytest.raises(FormulaError):
        family_from_cli("nope", SIG)


def test_membership_tests():
    wfam = weak_so(SIG, 1)
    m = theta_at(wfam, 1)
    assert wfam.contains(m.formula, m.slots, m.params) is True
    assert wfam.contains(parse("P0(x0)", SIG), (FOVar(0),), ()) is False
    dfam = dsl(SIG)
    assert dfam.contains(parse("~P0(x0)", SIG), (FOVar(0),), ()) is True
    assert dfam.contains(parse("x0 = x1", SIG), (FOVar(0),), (FOVar(1),)) is False
