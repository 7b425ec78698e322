import pytest
from hypothesis import given, settings, strategies as st

from rsol.formulas import (
    And, Const, ExistsFO, ExistsSO, ForallFO, ForallSO, FOVar, FormulaError,
    Func, Iff, Implies, InstAtom, Not, Or, ParseError, PredApp, Signature,
    SOApp, SOEq, SOVar, TermEq, Var, a6_instantiate, alpha_eq, alpha_key,
    format_formula, free_variables, is_sentence, normalize, parse,
    quantifier_rank, substitute_fo, substitute_fo_many, substitute_so,
    validate,
)

SIG = Signature(predicates={"P0": 1, "P1": 2}, functions={"f0": 1},
                constants=["c0", "c1"])
x0, x1, x2, x5 = FOVar(0), FOVar(1), FOVar(2), FOVar(5)
X0, X1 = SOVar(0, 1), SOVar(1, 1)


class FakeMember:
    def __init__(self, formula, slots, params):
        self.formula = formula
        self.slots = tuple(slots)
        self.params = tuple(params)


def test_signature_rejects_variable_like_names():
    with pytest.raises(FormulaError):
        Signature(predicates={"X0": 1})
    with pytest.raises(FormulaError):
        Signature(constants=["x3"])


def test_signature_folds_zero_ary_functions():
    sig = Signature(functions={"g": 0})
    assert "g" in sig.constants and not sig.functions


def test_parse_paper_style_sentence():
    f = parse("∀x ∃X ∀y (X(y) <-> x = y)", SIG)
    assert f == ForallFO(x0, ExistsSO(X0, ForallFO(
        x1, Iff(SOApp(X0, (Var(x1),)), TermEq(Var(x0), Var(x1))))))
    assert is_sentence(f)


def test_parse_atomic():
    assert parse("P0(x0)", SIG) == PredApp("P0", (Var(x0),))


def test_parse_arity_mismatch():
    with pytest.raises(ParseError):
        parse("X2(x0, x1)", SIG)  # X2 has no caret, so arity 1


def test_parse_errors():
    with pytest.raises(ParseError):
        parse("Q7(x0)", SIG)  # unknown symbol
    with pytest.raises(ParseError):
        parse("P0(x0", SIG)
    with pytest.raises(ParseError):
        parse("x0 = x1", SIG.without_identity())
    with pytest.raises(ParseError):
        parse("X0 = X1", SIG.without_identity())
    with pytest.raises(ParseError):
        parse("X0^1 = X1^2", SIG)


def test_parse_named_variables_fresh_interning():
    # explicit x1 forces the bare names around it onto other indices
    f = parse("P1(x1, y) & P0(z)", SIG)
    assert f == And(PredApp("P1", (Var(x1), Var(x0))), PredApp("P0", (Var(x2),)))


def test_parse_ascii_and_unicode_agree():
    a = parse("forall x0 ~(P0(x0) & P0(x1))", SIG)
    b = parse("∀x0 ¬(P0(x0) ∧ P0(x1))", SIG)
    assert a == b


def test_parse_functions_and_constants():
    f = parse("P0(f0(c0)) -> c1 = x4", SIG)
    assert f == Implies(PredApp("P0", (Func("f0", (Const("c0"),)),)),
                        TermEq(Const("c1"), Var(FOVar(4))))


def test_roundtrip_examples():
    for text in ["~(P0(x0) & P0(x1))",
                 "forall x0 forall x1 forall x2 P1(x0, x2)",
                 "exists X0 forall x0 (X0(x0) <-> P0(x0))",
                 "X0^2 = X1^2 | P0(c0)"]:
        f = parse(text, SIG)
        for unicode in (True, False):
            assert parse(format_formula(f, unicode=unicode), SIG) == f


def test_print_exists_both_ways():
    f = parse("exists X0 P0(c0)", SIG)
    sugar = format_formula(normalize(f), resugar=True)
    plain = format_formula(normalize(f))
    assert alpha_eq(parse(sugar, SIG), parse(plain, SIG))
    assert alpha_eq(parse(sugar, SIG), f)


def test_free_variables():
    f = ForallFO(x0, SOApp(X0, (Var(x0),)))
    assert free_variables(f) == (frozenset(), frozenset({X0}))
    assert free_variables(TermEq(Var(x0), Var(x1))) == (frozenset({x0, x1}), frozenset())
    g = ForallSO(X0, And(SOApp(X0, (Var(x0),)), SOApp(X1, (Var(x0),))))
    assert free_variables(g) == (frozenset({x0}), frozenset({X1}))


def test_is_sentence():
    assert not is_sentence(PredApp("P0", (Var(x0),)))
    assert is_sentence(ForallSO(X0, ForallFO(x0, SOApp(X0, (Var(x0),)))))


def test_substitute_fo_simple():
    assert substitute_fo(PredApp("P0", (Var(x0),)), x0, Var(x1)) == \
        PredApp("P0", (Var(x1),))


def test_substitute_fo_capture():
    f = ForallFO(x1, TermEq(Var(x0), Var(x1)))
    assert substitute_fo(f, x0, Var(x1)) == ForallFO(x2, TermEq(Var(x1), Var(x2)))


def test_substitute_fo_no_free_occurrence():
    f = ForallFO(x0, PredApp("P0", (Var(x0),)))
    assert substitute_fo(f, x0, Var(x5)) == f


def test_substitute_so():
    out, clean = substitute_so(SOApp(X0, (Var(x0),)), X0, X1)
    assert out == SOApp(X1, (Var(x0),)) and clean
    f = ForallSO(X1, SOEq(X0, X1))
    out, clean = substitute_so(f, X0, X1)
    assert out == ForallSO(SOVar(2, 1), SOEq(X1, SOVar(2, 1))) and not clean
    with pytest.raises(FormulaError):
        substitute_so(SOApp(X0, (Var(x0),)), X0, SOVar(1, 2))


def test_a6_instantiate_weak_so_shape():
    # member: x0 = x1 with slot x0 and parameter x1
    member = FakeMember(TermEq(Var(x0), Var(x1)), [x0], [x1])
    f = ForallFO(x0, SOApp(X0, (Var(x0),)))
    out = a6_instantiate(f, X0, member)
    assert out == ForallFO(x2, ForallFO(x0, TermEq(Var(x0), Var(x2))))
    assert alpha_eq(out, parse("forall y forall x (x = y)", SIG))


def test_a6_instantiate_no_parameters():
    member = FakeMember(PredApp("P0", (Var(x0),)), [x0], [])
    f = Implies(SOApp(X0, (Var(x0),)), SOApp(X0, (Var(x1),)))
    out = a6_instantiate(f, X0, member)
    assert out == Implies(PredApp("P0", (Var(x0),)), PredApp("P0", (Var(x1),)))


def test_a6_instantiate_bound_everywhere():
    member = FakeMember(TermEq(Var(x0), Var(x1)), [x0], [x1])
    f = ForallSO(X0, SOApp(X0, (Var(x0),)))
    out = a6_instantiate(f, X0, member)
    # prefix over the fresh parameter, body untouched
    assert isinstance(out, ForallFO) and out.body == f


def test_a6_instantiate_arity_mismatch():
    member = FakeMember(TermEq(Var(x0), Var(x1)), [x0], [x1])
    with pytest.raises(FormulaError):
        a6_instantiate(SOApp(SOVar(0, 2), (Var(x0), Var(x1))), SOVar(0, 2), member)


def test_a6_instantiate_rejects_so_identity_occurrence():
    member = FakeMember(TermEq(Var(x0), Var(x1)), [x0], [x1])
    with pytest.raises(FormulaError):
        a6_instantiate(SOEq(X0, X1), X0, member)


def test_a6_adds_no_free_variables():
    member = FakeMember(TermEq(Var(x0), Var(x1)), [x0], [x1])
    f = And(SOApp(X0, (Var(x0),)), SOApp(X0, (Const("c0"),)))
    out = a6_instantiate(f, X0, member)
    fo, so = free_variables(out)
    assert fo == {x0} and so == frozenset()


def test_a6_capture_inside_member():
    # member with its own quantifier must rename when slots collide
    member = FakeMember(ExistsFO(x1, PredApp("P1", (Var(x0), Var(x1)))), [x0], [])
    f = SOApp(X0, (Var(x1),))
    out = a6_instantiate(f, X0, member)
    fo, _ = free_variables(out)
    assert fo == {x1}
    assert quantifier_rank(out) == 1
    assert not alpha_eq(out, ExistsFO(x1, PredApp("P1", (Var(x1), Var(x1)))))


def test_normalize_shapes():
    f = Or(PredApp("P0", (Var(x0),)), PredApp("P0", (Var(x1),)))
    n = normalize(f)
    assert n == Not(And(Not(PredApp("P0", (Var(x0),))), Not(PredApp("P0", (Var(x1),)))))
    e = ExistsFO(x0, PredApp("P0", (Var(x0),)))
    assert normalize(e) == Not(ForallFO(x0, Not(PredApp("P0", (Var(x0),)))))


def test_alpha_equivalence_basics():
    f = ForallFO(x0, PredApp("P0", (Var(x0),)))
    g = ForallFO(x5, PredApp("P0", (Var(x5),)))
    assert alpha_eq(f, g)
    assert not alpha_eq(f, ForallFO(x0, PredApp("P0", (Var(x1),))))
    # sugar and primitive encodings are alpha-equal
    assert alpha_eq(ExistsSO(X0, SOApp(X0, (Var(x0),))),
                    Not(ForallSO(X1, Not(SOApp(X1, (Var(x0),))))))


def test_inst_atom_alpha_binds_its_variable():
    a = InstAtom(X0, SOApp(X0, (Var(x0),)))
    b = InstAtom(X1, SOApp(X1, (Var(x0),)))
    assert alpha_eq(a, b)
    assert not alpha_eq(a, InstAtom(X0, SOApp(X0, (Var(x1),))))


def test_validate_checks_identity_flag():
    f = TermEq(Var(x0), Var(x0))
    validate(f, SIG)
    with pytest.raises(FormulaError):
        validate(f, SIG.without_identity())


# --- randomized properties ---------------------------------------------------

def terms(depth):
    base = st.one_of(
        st.integers(0, 3).map(lambda i: Var(FOVar(i))),
        st.sampled_from([Const("c0"), Const("c1")]))
    if depth <= 0:
        return base
    return st.one_of(base, st.tuples(terms(depth - 1)).map(lambda a: Func("f0", a)))


def formulas(depth):
    atoms = st.one_of(
        st.tuples(terms(1)).map(lambda a: PredApp("P0", a)),
        st.tuples(terms(0), terms(0)).map(lambda a: PredApp("P1", a)),
        st.tuples(terms(1), terms(1)).map(lambda p: TermEq(*p)),
        st.tuples(st.integers(0, 2), terms(0)).map(
            lambda p: SOApp(SOVar(p[0], 1), (p[1],))),
        st.tuples(st.integers(0, 2), st.integers(0, 2)).map(
            lambda p: SOEq(SOVar(p[0], 2), SOVar(p[1], 2))),
    )
    if depth <= 0:
        return atoms
    sub = formulas(depth - 1)
    return st.one_of(
        atoms,
        sub.map(Not),
        st.tuples(sub, sub).map(lambda p: And(*p)),
        st.tuples(sub, sub).map(lambda p: Or(*p)),
        st.tuples(sub, sub).map(lambda p: Implies(*p)),
        st.tuples(sub, sub).map(lambda p: Iff(*p)),
        st.tuples(st.integers(0, 3), sub).map(lambda p: ForallFO(FOVar(p[0]), p[1])),
        st.tuples(st.integers(0, 3), sub).map(lambda p: ExistsFO(FOVar(p[0]), p[1])),
        st.tuples(st.integers(0, 2), sub).map(lambda p: ForallSO(SOVar(p[0], 1), p[1])),
        st.tuples(st.integers(0, 2), sub).map(lambda p: ExistsSO(SOVar(p[0], 1), p[1])),
    )


@settings(max_examples=120, deadline=None)
@given(formulas(3))
def test_roundtrip_random(f):
    for unicode in (True, False):
        text = format_formula(f, unicode=unicode)
        assert parse(text, SIG) == f


@settings(max_examples=120, deadline=None)
@given(formulas(3))
def test_resugar_roundtrip_random(f):
    n = normalize(f)
    text = format_formula(n, resugar=True)
    assert alpha_eq(parse(text, SIG), n)


@settings(max_examples=100, deadline=None)
@given(formulas(2), terms(1), terms(1))
def test_disjoint_substitutions_commute(f, t, s):
    va, vb = FOVar(7), FOVar(8)
    f = And(f, PredApp("P1", (Var(va), Var(vb))))
    if va in term_vars_of(t) or vb in term_vars_of(t):
        return
    if va in term_vars_of(s) or vb in term_vars_of(s):
        return
    one = substitute_fo(substitute_fo(f, va, t), vb, s)
    other = substitute_fo(substitute_fo(f, vb, s), va, t)
    both = substitute_fo_many(f, {va: t, vb: s})
    assert alpha_eq(one, other)
    assert alpha_eq(one, both)


def term_vars_of(t):
    from rsol.formulas import term_fo_vars
    return term_fo_vars(t)


@settings(max_examples=80, deadline=None)
@given(formulas(2))
def test_alpha_key_reflexive_and_normalize_idempotent(f):
    assert alpha_key(f) == alpha_key(f)
    n = normalize(f)
    assert normalize(n) == n
    assert alpha_eq(f, n)
