"""Clock-constraint ASTs, evaluation, truth-assignment semantics, and a
sound per-clock exclusivity check.

An atomic constraint compares one clock against a nonnegative rational with
`<=` or `>=`; an atom is false whenever its clock is undefined.  `=`, `<`
and `>` are derived forms.  `TRUE`/`FALSE` constants extend the grammar so
untimed automata embed with trivially-true guards.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .rat import format_rational, parse_rational
from .timed import (Clock, ClockKind, TimedString, clock_value, hist, pred,
                    stack_hist, stack_pred)


class ConstraintError(ValueError):
    """Raised on malformed constraints or guard-text parse errors."""


@dataclass(frozen=True)
class Atom:
    clock: Clock
    op: str  # "<=" or ">="
    bound: Fraction

    def __post_init__(self):
        if self.op not in ("<=", ">="):
            raise ConstraintError(f"atomic operator must be <= or >=: {self.op}")
        if self.bound < 0:
            raise ConstraintError("atomic bound must be nonnegative")

    def sort_key(self) -> tuple:
        return (*self.clock.sort_key(), self.op, self.bound)

    def __str__(self) -> str:
        return f"{self.clock} {self.op} {format_rational(self.bound)}"


@dataclass(frozen=True)
class And:
    left: "Constraint"
    right: "Constraint"


@dataclass(frozen=True)
class Or:
    left: "Constraint"
    right: "Constraint"


@dataclass(frozen=True)
class Not:
    inner: "Constraint"


@dataclass(frozen=True)
class _Const:
    value: bool


TRUE = _Const(True)
FALSE = _Const(False)

Constraint = object  # Atom | And | Or | Not | _Const


def atom(clock: Clock, op: str, bound) -> Atom:
    return Atom(clock, op, Fraction(bound))


def desugar(op: str, clock: Clock, bound) -> Constraint:
    """Expand `=`, `<`, `>` (and pass through `<=`, `>=`) into the base AST."""
    bound = Fraction(bound)
    le = Atom(clock, "<=", bound)
    ge = Atom(clock, ">=", bound)
    if op == "<=":
        return le
    if op == ">=":
        return ge
    if op == "=":
        return And(le, ge)
    if op == "<":
        return And(le, Not(ge))
    if op == ">":
        return And(ge, Not(le))
    raise ConstraintError(f"unknown comparison operator: {op}")


def evaluate(phi: Constraint, w: TimedString, i: int) -> bool:
    """Truth of a constraint on w at position i (undefined clock => atom false)."""
    return _eval(phi, lambda a: _atom_truth(a, w, i))


def _atom_truth(a: Atom, w: TimedString, i: int) -> bool:
    value = clock_value(w, i, a.clock)
    if value is None:
        return False
    return value <= a.bound if a.op == "<=" else value >= a.bound


def _eval(phi: Constraint, truth: Callable[[Atom], bool]) -> bool:
    if isinstance(phi, _Const):
        return phi.value
    if isinstance(phi, Atom):
        return truth(phi)
    if isinstance(phi, And):
        return _eval(phi.left, truth) and _eval(phi.right, truth)
    if isinstance(phi, Or):
        return _eval(phi.left, truth) or _eval(phi.right, truth)
    if isinstance(phi, Not):
        return not _eval(phi.inner, truth)
    raise ConstraintError(f"not a constraint node: {phi!r}")


def atoms(phi: Constraint) -> frozenset[Atom]:
    """The set of Atom leaves of phi."""
    found: set[Atom] = set()
    stack = [phi]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            found.add(node)
        elif isinstance(node, (And, Or)):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Not):
            stack.append(node.inner)
        elif not isinstance(node, _Const):
            raise ConstraintError(f"not a constraint node: {node!r}")
    return frozenset(found)


def eval_under(phi: Constraint, true_atoms: Iterable[Atom],
               universe: Optional[Iterable[Atom]] = None) -> bool:
    """Evaluate phi with each atom replaced by membership in `true_atoms`.

    When a universe is given, every atom of phi must belong to it; atoms
    outside `true_atoms` count as false either way.
    """
    true_set = frozenset(true_atoms)
    if universe is not None:
        uni = frozenset(universe)
        missing = atoms(phi) - uni
        if missing:
            raise ConstraintError(
                f"atoms outside the universe: {sorted(map(str, missing))}")
        if not true_set <= uni:
            raise ConstraintError("assignment is not a subset of the universe")
    return _eval(phi, lambda a: a in true_set)


def sorted_atoms(universe: Iterable[Atom]) -> tuple[Atom, ...]:
    """Canonical (clock kind, symbol, op, bound) ordering of an atom set."""
    return tuple(sorted(set(universe), key=Atom.sort_key))


def xi(universe: Iterable[Atom], members: Iterable[Atom]) -> Constraint:
    """The constraint asserting that exactly `members` out of `universe` hold."""
    uni = sorted_atoms(universe)
    true_set = frozenset(members)
    if not true_set <= frozenset(uni):
        raise ConstraintError("members must be a subset of the universe")
    result: Constraint = TRUE
    first = True
    for a in uni:
        lit: Constraint = a if a in true_set else Not(a)
        result = lit if first else And(result, lit)
        first = False
    return result


PROVABLY_EXCLUSIVE = "provably-exclusive"
POSSIBLY_OVERLAPPING = "possibly-overlapping"


def _clock_assignment_feasible(constraints: list[tuple[str, Fraction, bool]]) -> bool:
    """Whether one clock can take a value in [0, oo) or be undefined, given
    (op, bound, truth) verdicts for each of its atoms.
    """
    if all(not truth for _, _, truth in constraints):
        return True  # the clock may simply be undefined
    # Defined value v >= 0 constrained by intervals.
    lo, lo_strict = Fraction(0), False
    hi: Optional[Fraction] = None
    hi_strict = False
    for op, bound, truth in constraints:
        if op == "<=" and truth:
            if hi is None or bound < hi or (bound == hi and not hi_strict):
                hi, hi_strict = bound, False
        elif op == "<=" and not truth:  # v > bound
            if bound > lo or (bound == lo and not lo_strict):
                lo, lo_strict = bound, True
        elif op == ">=" and truth:
            if bound > lo:
                lo, lo_strict = bound, False
        else:  # ">=" false: v < bound
            if hi is None or bound < hi:
                hi, hi_strict = bound, True
    if hi is None:
        return True
    if lo < hi:
        return True
    return lo == hi and not lo_strict and not hi_strict


def assignment_feasible(universe: Sequence[Atom], true_atoms: frozenset[Atom]) -> bool:
    """Whether some relaxed valuation (each clock independent, possibly
    undefined) makes exactly `true_atoms` out of `universe` hold.
    """
    by_clock: dict[Clock, list[tuple[str, Fraction, bool]]] = {}
    for a in universe:
        by_clock.setdefault(a.clock, []).append((a.op, a.bound, a in true_atoms))
    return all(_clock_assignment_feasible(cs) for cs in by_clock.values())


def mutually_exclusive(phi: Constraint, psi: Constraint) -> str:
    """Sound exclusivity check over the relaxed per-clock model.

    PROVABLY_EXCLUSIVE implies the two constraints can never both be true at
    one position of one string; POSSIBLY_OVERLAPPING is inconclusive.
    """
    universe = sorted_atoms(atoms(phi) | atoms(psi))
    for bits in itertools.product([False, True], repeat=len(universe)):
        true_set = frozenset(a for a, b in zip(universe, bits) if b)
        if not assignment_feasible(universe, true_set):
            continue
        if eval_under(phi, true_set) and eval_under(psi, true_set):
            return POSSIBLY_OVERLAPPING
    return PROVABLY_EXCLUSIVE


# --- guard text format ------------------------------------------------------

def format_guard(phi: Constraint) -> str:
    """Render a constraint in the guard grammar (parse_guard inverse)."""
    return _format(phi, 0)


def _format(phi: Constraint, prec: int) -> str:
    if isinstance(phi, _Const):
        return "true" if phi.value else "false"
    if isinstance(phi, Atom):
        return f"{phi.clock} {phi.op} {format_rational(phi.bound)}"
    if isinstance(phi, Or):
        text = f"{_format(phi.left, 1)} or {_format(phi.right, 1)}"
        return f"({text})" if prec > 1 else text
    if isinstance(phi, And):
        text = f"{_format(phi.left, 2)} and {_format(phi.right, 2)}"
        return f"({text})" if prec > 2 else text
    if isinstance(phi, Not):
        return f"not {_format(phi.inner, 3)}"
    raise ConstraintError(f"not a constraint node: {phi!r}")


class _GuardParser:
    """Recursive descent over: or < and < not; atoms hist(a), pred(a),
    stackhist, stackpred with <= >= = < > and rational constants.
    """

    def __init__(self, text: str):
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text: str) -> list[str]:
        tokens: list[str] = []
        i = 0
        while i < len(text):
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch in "()":
                tokens.append(ch)
                i += 1
            elif text[i:i + 2] in ("<=", ">="):
                tokens.append(text[i:i + 2])
                i += 2
            elif ch in "<>=":
                tokens.append(ch)
                i += 1
            else:
                j = i
                while j < len(text) and not text[j].isspace() and text[j] not in "()<>=":
                    j += 1
                tokens.append(text[i:j])
                i = j
        return tokens

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ConstraintError("unexpected end of guard")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.take()
        if got != tok:
            raise ConstraintError(f"expected {tok!r}, got {got!r}")

    def parse(self) -> Constraint:
        phi = self.parse_or()
        if self.peek() is not None:
            raise ConstraintError(f"trailing tokens: {self.tokens[self.pos:]}")
        return phi

    def parse_or(self) -> Constraint:
        phi = self.parse_and()
        while self.peek() == "or":
            self.take()
            phi = Or(phi, self.parse_and())
        return phi

    def parse_and(self) -> Constraint:
        phi = self.parse_not()
        while self.peek() == "and":
            self.take()
            phi = And(phi, self.parse_not())
        return phi

    def parse_not(self) -> Constraint:
        if self.peek() == "not":
            self.take()
            return Not(self.parse_not())
        return self.parse_atom()

    def parse_atom(self) -> Constraint:
        tok = self.take()
        if tok == "(":
            if self.peek() == ")":
                raise ConstraintError("empty parentheses")
            phi = self.parse_or()
            self.expect(")")
            return phi
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        clock = self._parse_clock(tok)
        op = self.take()
        if op not in ("<=", ">=", "=", "<", ">"):
            raise ConstraintError(f"expected a comparison operator, got {op!r}")
        bound = parse_rational(self.take())
        return desugar(op, clock, bound)

    def _parse_clock(self, tok: str) -> Clock:
        if tok == "stackhist":
            return stack_hist()
        if tok == "stackpred":
            return stack_pred()
        for name, ctor in (("hist", hist), ("pred", pred)):
            if tok == name:
                self.expect("(")
                sym = self.take()
                self.expect(")")
                return ctor(sym)
            if tok.startswith(name + "(") and tok.endswith(")"):
                return ctor(tok[len(name) + 1:-1])
        raise ConstraintError(f"expected a clock, got {tok!r}")


def parse_guard(text: str) -> Constraint:
    return _GuardParser(text).parse()
