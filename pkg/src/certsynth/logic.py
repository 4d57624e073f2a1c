"""LTL syntax, parsing, lasso semantics and specification decomposition."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .architecture import Architecture

UNARY = ("not", "next", "eventually", "globally")
BINARY = ("and", "or", "implies", "iff", "until", "release")


@dataclass(frozen=True)
class Formula:
    """LTL abstract syntax tree node.

    ``op`` is one of ``atom``, ``true``, ``false``, the unary operators in
    :data:`UNARY` or the binary operators in :data:`BINARY`.  ``release`` only
    shows up after negation normal form conversion.
    """

    op: str
    args: tuple[Formula, ...] = ()
    name: str | None = None

    def __str__(self) -> str:
        return to_text(self)


TRUE = Formula("true")
FALSE = Formula("false")


def Atom(name: str) -> Formula:
    return Formula("atom", name=name)


def Not(f: Formula) -> Formula:
    return Formula("not", (f,))


def And(a: Formula, b: Formula) -> Formula:
    return Formula("and", (a, b))


def Or(a: Formula, b: Formula) -> Formula:
    return Formula("or", (a, b))


def Implies(a: Formula, b: Formula) -> Formula:
    return Formula("implies", (a, b))


def Iff(a: Formula, b: Formula) -> Formula:
    return Formula("iff", (a, b))


def Next(f: Formula) -> Formula:
    return Formula("next", (f,))


def Until(a: Formula, b: Formula) -> Formula:
    return Formula("until", (a, b))


def Release(a: Formula, b: Formula) -> Formula:
    return Formula("release", (a, b))


def Eventually(f: Formula) -> Formula:
    return Formula("eventually", (f,))


def Globally(f: Formula) -> Formula:
    return Formula("globally", (f,))


def conjunction(fs: Sequence[Formula]) -> Formula:
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


# ---------------------------------------------------------------------------
# parsing

class LtlSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<op><->|->|&&|\|\||!|\(|\))|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
)
_KEYWORDS = {"X": "next", "F": "eventually", "G": "globally"}
_BINARY_LEVELS = [("<->", "iff", False), ("->", "implies", True),
                  ("||", "or", False), ("&&", "and", False), ("U", "until", True)]


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise LtlSyntaxError(f"unknown token {text[pos]!r}", line, pos - line_start + 1)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.group(), line, pos - line_start + 1))
        else:
            for k, ch in enumerate(m.group()):
                if ch == "\n":
                    line, line_start = line + 1, pos + k + 1
        pos = m.end()
    tokens.append(_Token("", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise LtlSyntaxError(message, tok.line, tok.column)

    def parse(self) -> Formula:
        f = self.binary(0)
        if self.peek().text:
            self.fail(f"unexpected {self.peek().text!r}")
        return f

    def binary(self, level: int) -> Formula:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        symbol, op, right_assoc = _BINARY_LEVELS[level]
        left = self.binary(level + 1)
        if right_assoc:
            if self.peek().text == symbol:
                self.take()
                return Formula(op, (left, self.binary(level)))
            return left
        while self.peek().text == symbol:
            self.take()
            left = Formula(op, (left, self.binary(level + 1)))
        return left

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.text == "!":
            self.take()
            return Not(self.unary())
        if tok.text in _KEYWORDS:
            self.take()
            return Formula(_KEYWORDS[tok.text], (self.unary(),))
        return self.primary()

    def primary(self) -> Formula:
        tok = self.take()
        if tok.text == "(":
            f = self.binary(0)
            if self.peek().text != ")":
                self.fail("expected ')'")
            self.take()
            return f
        if tok.text == "":
            self.fail("unexpected end of input", tok)
        if tok.text == "U" or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok.text):
            self.fail(f"unexpected {tok.text!r}", tok)
        if tok.text == "true":
            return TRUE
        if tok.text == "false":
            return FALSE
        return Atom(tok.text)


def parse_ltl(text: str) -> Formula:
    """Parse ASCII LTL: ``! && || -> <-> X U F G``, parentheses, identifiers."""
    return _Parser(text).parse()


_SYMBOL = {"and": "&&", "or": "||", "implies": "->", "iff": "<->", "until": "U", "release": "R"}
_PREFIX = {"not": "!", "next": "X ", "eventually": "F ", "globally": "G "}


def to_text(f: Formula) -> str:
    """Fully parenthesised text that :func:`parse_ltl` reads back."""
    match f.op:
        case "atom":
            return f.name
        case "true" | "false":
            return f.op
        case "release":
            a, b = f.args
            return f"!(!{to_text(a)} U !{to_text(b)})"
        case op if op in _PREFIX:
            return f"{_PREFIX[op]}{_wrap(f.args[0])}"
        case op:
            return f"{_wrap(f.args[0])} {_SYMBOL[op]} {_wrap(f.args[1])}"


def _wrap(f: Formula) -> str:
    text = to_text(f)
    return text if f.op in ("atom", "true", "false") else f"({text})"


def atomic_props(f: Formula) -> frozenset[str]:
    if f.op == "atom":
        return frozenset([f.name])
    out: set[str] = set()
    for a in f.args:
        out |= atomic_props(a)
    return frozenset(out)


def size(f: Formula) -> int:
    return 1 + sum(size(a) for a in f.args)


def split_conjuncts(f: Formula) -> list[Formula]:
    """Split only along the top-level chain of ``&&``."""
    if f.op == "and":
        return split_conjuncts(f.args[0]) + split_conjuncts(f.args[1])
    return [f]


# ---------------------------------------------------------------------------
# normal form


def nnf(f: Formula, negate: bool = False) -> Formula:
    """Negation normal form over atoms, negated atoms, and/or, X, U and R."""
    match f.op:
        case "true":
            return FALSE if negate else TRUE
        case "false":
            return TRUE if negate else FALSE
        case "atom":
            return Not(f) if negate else f
        case "not":
            return nnf(f.args[0], not negate)
        case "and" | "or":
            a, b = (nnf(x, negate) for x in f.args)
            flip = (f.op == "and") == negate
            return Or(a, b) if flip else And(a, b)
        case "implies":
            return nnf(Or(Not(f.args[0]), f.args[1]), negate)
        case "iff":
            a, b = f.args
            if negate:
                return nnf(Or(And(a, Not(b)), And(Not(a), b)))
            return nnf(Or(And(a, b), And(Not(a), Not(b))))
        case "next":
            return Next(nnf(f.args[0], negate))
        case "eventually":
            return nnf(Until(TRUE, f.args[0]), negate)
        case "globally":
            return nnf(Release(FALSE, f.args[0]), negate)
        case "until":
            a, b = (nnf(x, negate) for x in f.args)
            return Release(a, b) if negate else Until(a, b)
        case "release":
            a, b = (nnf(x, negate) for x in f.args)
            return Until(a, b) if negate else Release(a, b)
    raise ValueError(f"unknown operator {f.op!r}")


# ---------------------------------------------------------------------------
# semantics on ultimately periodic words


def holds_on_lasso(f: Formula, stem: Sequence[Iterable[str]], loop: Sequence[Iterable[str]]) -> bool:
    """Evaluate ``f`` on the infinite word ``stem . loop^omega`` directly."""
    if not loop:
        raise ValueError("loop must be nonempty")
    word = [frozenset(x) for x in stem] + [frozenset(x) for x in loop]
    n = len(word)
    succ = [p + 1 if p + 1 < n else len(stem) for p in range(n)]
    cache: dict[Formula, list[bool]] = {}

    def ev(g: Formula) -> list[bool]:
        if g in cache:
            return cache[g]
        match g.op:
            case "true":
                val = [True] * n
            case "false":
                val = [False] * n
            case "atom":
                val = [g.name in word[p] for p in range(n)]
            case "not":
                val = [not x for x in ev(g.args[0])]
            case "and":
                a, b = ev(g.args[0]), ev(g.args[1])
                val = [x and y for x, y in zip(a, b)]
            case "or":
                a, b = ev(g.args[0]), ev(g.args[1])
                val = [x or y for x, y in zip(a, b)]
            case "implies":
                a, b = ev(g.args[0]), ev(g.args[1])
                val = [(not x) or y for x, y in zip(a, b)]
            case "iff":
                a, b = ev(g.args[0]), ev(g.args[1])
                val = [x == y for x, y in zip(a, b)]
            case "next":
                a = ev(g.args[0])
                val = [a[succ[p]] for p in range(n)]
            case "until" | "eventually":
                a, b = (ev(g.args[0]), ev(g.args[1])) if g.op == "until" else ([True] * n, ev(g.args[0]))
                val = _least_fixpoint(a, b, succ)
            case "release" | "globally":
                # a R b == !(!a U !b)
                a, b = (ev(g.args[0]), ev(g.args[1])) if g.op == "release" else ([False] * n, ev(g.args[0]))
                val = [not x for x in _least_fixpoint([not x for x in a], [not x for x in b], succ)]
            case _:
                raise ValueError(f"unknown operator {g.op!r}")
        cache[g] = val
        return val

    return ev(f)[0]


def _least_fixpoint(a: list[bool], b: list[bool], succ: list[int]) -> list[bool]:
    val = list(b)
    changed = True
    while changed:
        changed = False
        for p in range(len(val)):
            if not val[p] and a[p] and val[succ[p]]:
                val[p] = True
                changed = True
    return val


# ---------------------------------------------------------------------------
# specifications


@dataclass(frozen=True)
class ConjunctiveSpec:
    conjuncts: tuple[Formula, ...]

    @classmethod
    def parse(cls, texts: Iterable[str]) -> ConjunctiveSpec:
        return cls(tuple(parse_ltl(t) for t in texts))

    @classmethod
    def from_formula(cls, f: Formula) -> ConjunctiveSpec:
        return cls(tuple(split_conjuncts(f)))

    def props(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for c in self.conjuncts:
            out |= atomic_props(c)
        return out

    def formula(self) -> Formula:
        return conjunction(list(self.conjuncts))

    def __len__(self) -> int:
        return len(self.conjuncts)

    def __iter__(self):
        return iter(self.conjuncts)


class UnknownAtomError(ValueError):
    pass


def check_atoms(spec: ConjunctiveSpec, arch: Architecture) -> None:
    unknown = spec.props() - arch.variables
    if unknown:
        raise UnknownAtomError(f"atoms not in the architecture: {sorted(unknown)}")


Decomposition = Mapping[str, ConjunctiveSpec]


def decompose(spec: ConjunctiveSpec, arch: Architecture) -> dict[str, ConjunctiveSpec]:
    """Assign every conjunct to the processes whose outputs it mentions.

    Conjuncts over inputs only go to every process.  Conjunct order is kept.
    """
    check_atoms(spec, arch)
    out_vars = arch.out
    result = {}
    for p in arch.processes:
        mine = []
        for c in spec.conjuncts:
            props = atomic_props(c)
            if props & p.outputs or not (props & out_vars):
                mine.append(c)
        result[p.name] = ConjunctiveSpec(tuple(mine))
    return result


def relevant_processes(dec: Decomposition, arch: Architecture) -> dict[str, frozenset[str]]:
    """Processes other than ``i`` with an output occurring in the subspecification of ``i``."""
    result = {}
    for p in arch.processes:
        props = dec[p.name].props()
        result[p.name] = frozenset(
            q.name for q in arch.processes if q.name != p.name and q.outputs & props
        )
    return result
