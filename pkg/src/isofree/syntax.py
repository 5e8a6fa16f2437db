"""Theory input language: lexer, parser, signature inference and clausification.

A theory file is a sequence of formulas, each terminated by ``.``.  Free
variables (identifiers ``u``..``z`` with an optional digit suffix) are
implicitly universally quantified.  Bare integers are numerals denoting fixed
domain elements.

    % Tarski algebras
    (x * y) * y = (y * x) * x.
    (x * y) * x = x.
    x * (y * z) = y * (x * z).

Optional headers ``functions name/arity, ... .`` and ``relations name/arity,
... .`` fix the declaration order; otherwise symbols are ordered by first use.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

MAX_ARITY = 3

VARIABLE_RE = re.compile(r"[u-z][0-9]*\Z")


class TheoryError(Exception):
    """Raised for malformed theories; carries a source position when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


# --- terms and formulas -------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class App:
    name: str
    args: tuple["Term", ...] = ()


Term = Union[Var, Num, App]


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Iff:
    lhs: "Formula"
    rhs: "Formula"


Atom = Union[Eq, Rel]
Formula = Union[Eq, Rel, Not, And, Or, Implies, Iff]


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)


Clause = tuple[Literal, ...]


@dataclass(frozen=True)
class Signature:
    functions: tuple[tuple[str, int], ...] = ()
    relations: tuple[tuple[str, int], ...] = ()
    pinned: frozenset[int] = frozenset()

    @property
    def symbols(self) -> tuple[tuple[str, int], ...]:
        """Functions then relations, the order used by every table encoding."""
        return self.functions + self.relations

    @property
    def max_arity(self) -> int:
        return max((k for _, k in self.symbols), default=0)

    def arity(self, name: str) -> int:
        for sym, k in self.symbols:
            if sym == name:
                return k
        raise KeyError(name)

    def is_relation(self, name: str) -> bool:
        return any(sym == name for sym, _ in self.relations)

    def describe(self) -> str:
        funcs = ", ".join(f"{s}/{k}" for s, k in self.functions)
        rels = ", ".join(f"{s}/{k}" for s, k in self.relations)
        pinned = ",".join(str(d) for d in sorted(self.pinned))
        return f"functions[{funcs}] relations[{rels}] pinned[{pinned}]"


@dataclass(frozen=True)
class Theory:
    signature: Signature
    formulas: tuple[Formula, ...]
    declared: bool = field(default=False, compare=False)


# --- lexer --------------------------------------------------------------------

# Longest operators first so "<->" wins over "<" and "->" over "-".
_PUNCT = ("<->", "->", "!=", "*", "+", "^", "@", "-", "'", "<", "=", "~", "&", "|",
          "(", ")", ",", ".", "/")

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>%[^\n]*)"
    r"|(?P<num>[0-9]+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>" + "|".join(re.escape(p) for p in _PUNCT) + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TheoryError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "num":
            tokens.append(Token("num", m.group(), line, col))
        elif kind == "ident":
            tokens.append(Token("ident", m.group(), line, col))
        elif kind == "punct":
            tokens.append(Token("op", m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --- parser -------------------------------------------------------------------

# Binary operators: precedence (higher binds tighter) and right-associativity.
# Term operators build App nodes, "<" builds a Rel atom, "="/"!=" equalities,
# the rest are connectives.
_BINARY = {
    "<->": (1, False),
    "->": (2, True),
    "|": (3, False),
    "&": (4, False),
    "=": (6, False),
    "!=": (6, False),
    "<": (7, False),
    "+": (8, False),
    "*": (9, False),
    "@": (9, False),
    "^": (10, True),
}
_NOT_PREC = 5
_TERM_OPS = {"+", "*", "@", "^"}
_CONNECTIVES = {"<->": Iff, "->": Implies, "|": Or, "&": And}


@dataclass
class _Node:
    """Untyped parse tree; checked into Term/Formula after parsing."""

    op: str
    args: tuple["_Node", ...]
    token: Token
    call: bool = False  # f(x, y) style application or bare identifier


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.kind != "op" or t.text != text:
            found = t.text or "end of input"
            raise TheoryError(f"expected {text!r}, found {found!r}", t.line, t.column)
        return self.advance()

    def at(self, text: str) -> bool:
        return self.tok.kind == "op" and self.tok.text == text

    def expression(self, min_prec: int = 0) -> _Node:
        lhs = self.unary()
        while True:
            t = self.tok
            if t.kind != "op" or t.text not in _BINARY:
                return lhs
            prec, right = _BINARY[t.text]
            if prec < min_prec:
                return lhs
            self.advance()
            rhs = self.expression(prec if right else prec + 1)
            lhs = _Node(t.text, (lhs, rhs), t)
            if prec == 6 and self.at("=") or prec == 6 and self.at("!="):
                raise TheoryError("chained equality", self.tok.line, self.tok.column)

    def unary(self) -> _Node:
        t = self.tok
        if t.kind == "op" and t.text == "~":
            self.advance()
            return _Node("~", (self.expression(_NOT_PREC),), t)
        return self.prefix()

    def prefix(self) -> _Node:
        t = self.tok
        if t.kind == "op" and t.text == "-":
            self.advance()
            return _Node("-", (self.prefix(),), t)
        return self.postfix()

    def postfix(self) -> _Node:
        node = self.primary()
        while self.at("'"):
            node = _Node("'", (node,), self.advance())
        return node

    def primary(self) -> _Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return _Node("num", (), t)
        if t.kind == "ident":
            self.advance()
            if VARIABLE_RE.match(t.text):
                return _Node("var", (), t)
            args: list[_Node] = []
            if self.at("("):
                self.advance()
                if not self.at(")"):
                    args.append(self.expression())
                    while self.at(","):
                        self.advance()
                        args.append(self.expression())
                self.expect(")")
            return _Node(t.text, tuple(args), t, call=True)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expression()
            self.expect(")")
            return node
        found = t.text or "end of input"
        raise TheoryError(f"unexpected {found!r}", t.line, t.column)


class _Builder:
    """Turns untyped parse trees into typed formulas while collecting symbols."""

    def __init__(self, declared: dict[str, tuple[str, int]]):
        # name -> (kind, arity); kind is "function" or "relation"
        self.symbols: dict[str, tuple[str, int]] = dict(declared)
        self.order: list[str] = list(declared)
        self.pinned: set[int] = set()

    def note(self, name: str, kind: str, arity: int, tok: Token) -> None:
        if arity > MAX_ARITY:
            raise TheoryError(
                f"unsupported arity {arity} for {name!r} (maximum is {MAX_ARITY})",
                tok.line, tok.column)
        seen = self.symbols.get(name)
        if seen is None:
            self.symbols[name] = (kind, arity)
            self.order.append(name)
            return
        if seen[0] != kind:
            raise TheoryError(f"{name!r} used as both {seen[0]} and {kind}", tok.line, tok.column)
        if seen[1] != arity:
            raise TheoryError(
                f"arity conflict for {name!r}: {seen[1]} and {arity}", tok.line, tok.column)

    def term(self, node: _Node) -> Term:
        op, tok = node.op, node.token
        if op == "var":
            return Var(tok.text)
        if op == "num":
            value = int(tok.text)
            self.pinned.add(value)
            return Num(value)
        if node.call or op in _TERM_OPS or op in ("-", "'"):
            self.note(op, "function", len(node.args), tok)
            return App(op, tuple(self.term(a) for a in node.args))
        raise TheoryError(f"expected a term, found {op!r}", tok.line, tok.column)

    def formula(self, node: _Node) -> Formula:
        op, tok = node.op, node.token
        if op in ("=", "!="):
            eq = Eq(self.term(node.args[0]), self.term(node.args[1]))
            return eq if op == "=" else Not(eq)
        if op == "<":
            self.note("<", "relation", 2, tok)
            return Rel("<", (self.term(node.args[0]), self.term(node.args[1])))
        if op == "~":
            return Not(self.formula(node.args[0]))
        if op in _CONNECTIVES:
            return _CONNECTIVES[op](self.formula(node.args[0]), self.formula(node.args[1]))
        if node.call:
            self.note(op, "relation", len(node.args), tok)
            return Rel(op, tuple(self.term(a) for a in node.args))
        raise TheoryError(f"expected a formula, found {tok.text!r}", tok.line, tok.column)


def _parse_header(parser: _Parser, declared: dict[str, tuple[str, int]], kind: str) -> None:
    while True:
        t = parser.advance()
        if t.kind not in ("ident", "op") or t.kind == "op" and t.text in "(),./":
            raise TheoryError(f"expected a symbol name, found {t.text!r}", t.line, t.column)
        parser.expect("/")
        a = parser.advance()
        if a.kind != "num":
            raise TheoryError("expected an arity", a.line, a.column)
        arity = int(a.text)
        if arity > MAX_ARITY:
            raise TheoryError(f"unsupported arity {arity} for {t.text!r} (maximum is {MAX_ARITY})",
                              a.line, a.column)
        if kind == "relation" and arity == 0:
            raise TheoryError(f"relation {t.text!r} must have arity >= 1", a.line, a.column)
        if t.text in declared:
            raise TheoryError(f"{t.text!r} declared twice", t.line, t.column)
        declared[t.text] = (kind, arity)
        if parser.at(","):
            parser.advance()
            continue
        parser.expect(".")
        return


def _at_header(parser: _Parser) -> bool:
    t = parser.tok
    return (t.kind == "ident" and t.text in ("functions", "relations")
            and parser.tokens[parser.pos + 2].text == "/")


def parse_theory(text: str) -> Theory:
    """Parse theory source into a signature plus formula list."""
    parser = _Parser(tokenize(text))
    declared: dict[str, tuple[str, int]] = {}
    has_header = False
    while _at_header(parser):
        kind = "function" if parser.advance().text == "functions" else "relation"
        _parse_header(parser, declared, kind)
        has_header = True

    builder = _Builder(declared)
    formulas = []
    while parser.tok.kind != "eof":
        node = parser.expression()
        parser.expect(".")
        formulas.append(builder.formula(node))

    functions = tuple((s, builder.symbols[s][1]) for s in builder.order
                      if builder.symbols[s][0] == "function")
    relations = tuple((s, builder.symbols[s][1]) for s in builder.order
                      if builder.symbols[s][0] == "relation")
    sig = Signature(functions, relations, frozenset(builder.pinned))
    if sig.max_arity < 1:
        raise TheoryError("the signature needs at least one symbol of arity >= 1")
    return Theory(sig, tuple(formulas), declared=has_header)


def signature_of(theory: Theory) -> Signature:
    return theory.signature


# --- pretty printing ----------------------------------------------------------


def _term_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Num):
        return str(t.value)
    if t.name in _TERM_OPS and len(t.args) == 2:
        return f"({_term_str(t.args[0])} {t.name} {_term_str(t.args[1])})"
    if t.name == "-" and len(t.args) == 1:
        return f"-{_term_str(t.args[0])}"
    if t.name == "'" and len(t.args) == 1:
        return f"{_term_str(t.args[0])}'"
    if not t.args:
        return t.name
    return f"{t.name}({', '.join(_term_str(a) for a in t.args)})"


def format_formula(f: Formula) -> str:
    if isinstance(f, Eq):
        return f"{_term_str(f.lhs)} = {_term_str(f.rhs)}"
    if isinstance(f, Rel):
        if f.name == "<":
            return f"{_term_str(f.args[0])} < {_term_str(f.args[1])}"
        return f"{f.name}({', '.join(_term_str(a) for a in f.args)})"
    if isinstance(f, Not):
        return f"~({format_formula(f.arg)})"
    ops = {And: "&", Or: "|", Implies: "->", Iff: "<->"}
    return f"({format_formula(f.lhs)} {ops[type(f)]} {format_formula(f.rhs)})"


def format_theory(theory: Theory) -> str:
    """Render a theory that parses back to a structurally identical one."""
    sig = theory.signature
    lines = []
    if sig.functions:
        lines.append("functions " + ", ".join(f"{s}/{k}" for s, k in sig.functions) + ".")
    if sig.relations:
        lines.append("relations " + ", ".join(f"{s}/{k}" for s, k in sig.relations) + ".")
    lines.extend(format_formula(f) + "." for f in theory.formulas)
    return "\n".join(lines) + "\n"


# --- clausification -----------------------------------------------------------


def _nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form with Implies/Iff expanded; Not wraps atoms only."""
    if isinstance(f, (Eq, Rel)):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return _nnf(f.arg, not positive)
    if isinstance(f, Implies):
        return _nnf(Or(Not(f.lhs), f.rhs), positive)
    if isinstance(f, Iff):
        both = And(Implies(f.lhs, f.rhs), Implies(f.rhs, f.lhs))
        return _nnf(both, positive)
    lhs, rhs = _nnf(f.lhs, positive), _nnf(f.rhs, positive)
    if isinstance(f, And) == positive:
        return And(lhs, rhs)
    return Or(lhs, rhs)


def _cnf(f: Formula) -> list[list[Literal]]:
    if isinstance(f, Not):
        return [[Literal(f.arg, False)]]
    if isinstance(f, (Eq, Rel)):
        return [[Literal(f, True)]]
    if isinstance(f, And):
        return _cnf(f.lhs) + _cnf(f.rhs)
    left, right = _cnf(f.lhs), _cnf(f.rhs)
    return [a + b for a in left for b in right]


def _atom_key(atom: Atom) -> Atom:
    """Equalities are symmetric; orient them so t = s and s = t coincide."""
    if isinstance(atom, Eq) and repr(atom.rhs) < repr(atom.lhs):
        return Eq(atom.rhs, atom.lhs)
    return atom


def simplify_clause(lits: list[Literal]) -> Clause | None:
    """Drop duplicate and trivially false literals; None if the clause is a tautology."""
    out: dict[Atom, bool] = {}
    for lit in lits:
        atom = _atom_key(lit.atom)
        if isinstance(atom, Eq) and atom.lhs == atom.rhs:
            if lit.positive:
                return None
            continue
        if atom in out:
            if out[atom] != lit.positive:
                return None
            continue
        out[atom] = lit.positive
    return tuple(Literal(a, p) for a, p in out.items())


def clausify(formula: Formula) -> list[Clause]:
    """Equivalent CNF by NNF conversion and distribution; tautologies dropped."""
    clauses = []
    seen = set()
    for lits in _cnf(_nnf(formula)):
        clause = simplify_clause(lits)
        if clause is None:
            continue
        key = frozenset(clause)
        if key in seen:
            continue
        seen.add(key)
        clauses.append(clause)
    return clauses


def clausify_theory(theory: Theory) -> list[Clause]:
    return [c for f in theory.formulas for c in clausify(f)]


def term_variables(t: Term) -> Iterator[str]:
    if isinstance(t, Var):
        yield t.name
    elif isinstance(t, App):
        for a in t.args:
            yield from term_variables(a)


def clause_variables(clause: Clause) -> list[str]:
    names: list[str] = []
    for lit in clause:
        terms = (lit.atom.lhs, lit.atom.rhs) if isinstance(lit.atom, Eq) else lit.atom.args
        for t in terms:
            for v in term_variables(t):
                if v not in names:
                    names.append(v)
    return names
