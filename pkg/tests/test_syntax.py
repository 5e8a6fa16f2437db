import itertools

import pytest
from hypothesis import given, settings, strategies as st

from isofree.syntax import (App, Eq, Iff, Literal, Not, Num, Or, Rel, Signature, TheoryError,
                            Var, clausify, clausify_theory, format_theory, parse_theory,
                            signature_of)

from conftest import CORPUS, eval_formula, load, theory_text


def test_single_tarski_axiom():
    th = parse_theory("(x * y) * x = x.")
    assert th.signature == Signature((("*", 2),))
    assert th.formulas == (Eq(App("*", (App("*", (Var("x"), Var("y"))), Var("x"))), Var("x")),)


def test_tautology_without_symbols_is_rejected():
    with pytest.raises(TheoryError, match="arity >= 1"):
        parse_theory("x = x.")


def test_order_relation_with_iff():
    th = parse_theory("x < y <-> 0 = -x + y.")
    sig = th.signature
    assert sig.relations == (("<", 2),)
    assert set(sig.functions) == {("-", 1), ("+", 2)}
    assert sig.pinned == frozenset({0})
    assert isinstance(th.formulas[0], Iff)


@pytest.mark.parametrize("text, expected", [
    ("-x + y = z.", App("+", (App("-", (Var("x"),)), Var("y")))),
    ("x * y + z = z.", App("+", (App("*", (Var("x"), Var("y"))), Var("z")))),
    ("x ^ y ^ z = z.", App("^", (Var("x"), App("^", (Var("y"), Var("z")))))),
    ("x' * y = y.", App("*", (App("'", (Var("x"),)), Var("y")))),
    ("x'' = x.", App("'", (App("'", (Var("x"),)),))),
    ("--x = x.", App("-", (App("-", (Var("x"),)),))),
    ("f(x, g(y)) = x.", App("f", (Var("x"), App("g", (Var("y"),))))),
])
def test_term_precedence(text, expected):
    assert parse_theory(text).formulas[0].lhs == expected


def test_connective_precedence():
    f = parse_theory("f(x) = y | x = z & y = z -> x = 0.").formulas[0]
    # & binds tighter than |, which binds tighter than ->
    assert type(f).__name__ == "Implies"
    assert isinstance(f.lhs, Or)


def test_negation_forms():
    a = parse_theory("x != y | f(x) = y.").formulas[0]
    b = parse_theory("~(x = y) | f(x) = y.").formulas[0]
    assert a == b and isinstance(a.lhs, Not)


def test_headers_fix_declaration_order():
    th = parse_theory("functions g/1, f/2.\nrelations r/1.\nf(x, x) = g(x).\nr(x) -> r(g(x)).")
    assert th.signature.functions == (("g", 1), ("f", 2))
    assert th.signature.relations == (("r", 1),)
    assert th.declared


def test_first_use_order():
    th = parse_theory("f(x, x) = g(x).")
    assert th.signature.functions == (("f", 2), ("g", 1))


def test_nullary_constant():
    th = parse_theory("c * x = x.")
    assert ("c", 0) in th.signature.functions
    assert not th.signature.pinned


@pytest.mark.parametrize("text, fragment", [
    ("f(x) = f(x, y).", "arity"),
    ("f(x) = x f(x).", None),
    ("x * y = y", "expected"),
    ("x * = y.", None),
    ("f(x, y, z, u) = x.", "arity"),
    ("x # y = y.", None),
    ("functions f/2.\nf(x) = x.", "arity"),
    ("f(x) = x. f = x.", None),
])
def test_malformed_theories(text, fragment):
    with pytest.raises(TheoryError, match=fragment):
        parse_theory(text)


def test_error_carries_position():
    with pytest.raises(TheoryError) as info:
        parse_theory("x * y = y.\nx * = y.")
    assert info.value.line == 2


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_parses_and_round_trips(name):
    th = load(name)
    again = parse_theory(format_theory(th))
    assert again.formulas == th.formulas
    assert again.signature == th.signature


def test_corpus_signatures():
    assert signature_of(load("loops")) == Signature((("*", 2),), (), frozenset({0}))
    il = signature_of(load("involutive_lattices"))
    assert set(il.functions) == {("*", 2), ("+", 2), ("-", 1)} and not il.relations
    ip = signature_of(load("ip_loops"))
    assert set(ip.functions) == {("*", 2), ("'", 1)} and ip.pinned == frozenset({0})


def test_comments_are_ignored():
    assert parse_theory(theory_text("tarski")).formulas == parse_theory(
        "(x * y) * y = (y * x) * x.\n(x * y) * x = x.\nx * (y * z) = y * (x * z).").formulas


def test_clausify_tautology():
    assert clausify(Eq(Var("x"), Var("x"))) == []


def test_clausify_iff():
    a, b = Rel("p", (Var("x"),)), Rel("q", (Var("x"),))
    clauses = clausify(Iff(a, b))
    assert {frozenset(c) for c in clauses} == {
        frozenset({Literal(a, False), Literal(b, True)}),
        frozenset({Literal(b, False), Literal(a, True)}),
    }


def test_clausify_cancellation():
    f = parse_theory("x * y = x * z -> y = z.").formulas[0]
    (clause,) = clausify(f)
    assert len(clause) == 2
    assert {lit.positive for lit in clause} == {False, True}


def _structures(signature, n):
    names = [s for s, _ in signature.symbols]
    sizes = [n ** k for _, k in signature.symbols]
    tops = [2 if signature.is_relation(s) else n for s in names]
    for combo in itertools.product(*(itertools.product(range(t), repeat=m)
                                     for t, m in zip(tops, sizes))):
        yield dict(zip(names, combo))


def _holds(formula, tables, n, names):
    return all(eval_formula(formula, dict(zip(names, env)), tables, n)
               for env in itertools.product(range(n), repeat=len(names)))


def _clause_holds(clause, tables, n):
    names = sorted({v for lit in clause for v in _vars(lit.atom)})
    for env in itertools.product(range(n), repeat=len(names)):
        env = dict(zip(names, env))
        if not any(eval_formula(lit.atom, env, tables, n) == lit.positive for lit in clause):
            return False
    return True


def _vars(f):
    if isinstance(f, Var):
        yield f.name
    elif isinstance(f, (App, Rel)):
        for a in f.args:
            yield from _vars(a)
    elif isinstance(f, Eq):
        yield from _vars(f.lhs)
        yield from _vars(f.rhs)
    elif isinstance(f, Not):
        yield from _vars(f.arg)
    elif not isinstance(f, Num):
        yield from _vars(f.lhs)
        yield from _vars(f.rhs)


SMALL_FORMULAS = [
    "x < y <-> 0 = -x + y.",
    "x * y = x * z -> y = z.",
    "~(f(x) = x) | r(x) <-> r(f(x)).",
    "(r(x) -> f(x) = 0) & (f(x) = 0 -> r(x)).",
    "f(x) != x -> ~r(x) & f(f(x)) = x.",
    "x = y | r(x) | r(y).",
]


@pytest.mark.parametrize("text", SMALL_FORMULAS)
def test_clausify_preserves_models_exhaustively(text):
    th = parse_theory(text)
    (formula,) = th.formulas
    names = sorted(set(_vars(formula)))
    clauses = clausify_theory(th)
    for n in (1, 2):
        for tables in _structures(th.signature, n):
            assert _holds(formula, tables, n, names) == all(
                _clause_holds(c, tables, n) for c in clauses)


_atoms = st.sampled_from(["r(x)", "r(y)", "x = y", "f(x) = y", "f(y) = x", "r(f(x))"])


@st.composite
def formulas(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(_atoms)
    op = draw(st.sampled_from(["&", "|", "->", "<->", "~"]))
    if op == "~":
        return f"~({draw(formulas(depth - 1))})"
    return f"({draw(formulas(depth - 1))} {op} {draw(formulas(depth - 1))})"


@settings(max_examples=60, deadline=None)
@given(formulas())
def test_clausify_equivalence_property(text):
    th = parse_theory("functions f/1.\nrelations r/1.\n" + text + ".")
    (formula,) = th.formulas
    names = ["x", "y"]
    clauses = clausify_theory(th)
    for n in (1, 2, 3):
        for tables in _structures(th.signature, n):
            assert _holds(formula, tables, n, names) == all(
                _clause_holds(c, tables, n) for c in clauses)
