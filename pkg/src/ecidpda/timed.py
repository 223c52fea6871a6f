"""Timed strings over a partitioned alphabet, bracket matching, clock values.

Symbols are split into calls (left brackets), returns (right brackets) and
internals; timestamps are exact rationals and must strictly increase.
Positions are 1-based throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .rat import format_rational, parse_rational


class TimedStringError(ValueError):
    """Raised on malformed alphabets, events or timestamps."""


@dataclass(frozen=True)
class PartitionedAlphabet:
    calls: frozenset[str]
    returns: frozenset[str]
    internals: frozenset[str]

    def __init__(self, calls: Iterable[str], returns: Iterable[str],
                 internals: Iterable[str]):
        object.__setattr__(self, "calls", frozenset(calls))
        object.__setattr__(self, "returns", frozenset(returns))
        object.__setattr__(self, "internals", frozenset(internals))
        if not (self.calls or self.returns or self.internals):
            raise TimedStringError("alphabet is empty")
        if (self.calls & self.returns or self.calls & self.internals
                or self.returns & self.internals):
            raise TimedStringError("alphabet classes are not disjoint")

    @property
    def symbols(self) -> frozenset[str]:
        return self.calls | self.returns | self.internals

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.symbols

    def to_json(self) -> dict:
        return {
            "calls": sorted(self.calls),
            "returns": sorted(self.returns),
            "internals": sorted(self.internals),
        }

    @classmethod
    def from_json(cls, data: dict) -> "PartitionedAlphabet":
        return cls(data.get("calls", []), data.get("returns", []),
                   data.get("internals", []))


class ClockKind(Enum):
    SYMBOL_HISTORY = "hist"
    SYMBOL_PREDICTION = "pred"
    STACK_HISTORY = "stackhist"
    STACK_PREDICTION = "stackpred"


_KIND_ORDER = {
    ClockKind.SYMBOL_HISTORY: 0,
    ClockKind.SYMBOL_PREDICTION: 1,
    ClockKind.STACK_HISTORY: 2,
    ClockKind.STACK_PREDICTION: 3,
}


@dataclass(frozen=True)
class Clock:
    """One of the four event-clock kinds; stack clocks carry no symbol."""

    kind: ClockKind
    symbol: Optional[str] = None

    def __post_init__(self):
        needs_symbol = self.kind in (ClockKind.SYMBOL_HISTORY,
                                     ClockKind.SYMBOL_PREDICTION)
        if needs_symbol and not self.symbol:
            raise TimedStringError(f"{self.kind.value} clock needs a symbol")
        if not needs_symbol and self.symbol is not None:
            raise TimedStringError(f"{self.kind.value} clock takes no symbol")

    def sort_key(self) -> tuple:
        return (_KIND_ORDER[self.kind], self.symbol or "")

    def __str__(self) -> str:
        if self.symbol is not None:
            return f"{self.kind.value}({self.symbol})"
        return self.kind.value


def hist(symbol: str) -> Clock:
    return Clock(ClockKind.SYMBOL_HISTORY, symbol)


def pred(symbol: str) -> Clock:
    return Clock(ClockKind.SYMBOL_PREDICTION, symbol)


def stack_hist() -> Clock:
    return Clock(ClockKind.STACK_HISTORY)


def stack_pred() -> Clock:
    return Clock(ClockKind.STACK_PREDICTION)


@dataclass(frozen=True)
class TimedString:
    alphabet: PartitionedAlphabet
    events: tuple[tuple[str, Fraction], ...]

    def __init__(self, alphabet: PartitionedAlphabet,
                 events: Sequence[tuple[str, Fraction]]):
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "events",
                           tuple((sym, Fraction(t)) for sym, t in events))
        prev = None
        for pos, (sym, t) in enumerate(self.events, start=1):
            if sym not in alphabet:
                raise TimedStringError(
                    f"symbol {sym!r} at position {pos} is not in the alphabet")
            if prev is not None and t <= prev:
                raise TimedStringError(
                    f"timestamps must strictly increase at position {pos}")
            prev = t

    def __len__(self) -> int:
        return len(self.events)

    def symbol(self, i: int) -> str:
        """Symbol at 1-based position i."""
        self._check_pos(i)
        return self.events[i - 1][0]

    def time(self, i: int) -> Fraction:
        self._check_pos(i)
        return self.events[i - 1][1]

    def _check_pos(self, i: int) -> None:
        if not 1 <= i <= len(self.events):
            raise IndexError(f"position {i} out of range 1..{len(self.events)}")

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sym for sym, _ in self.events)

    def to_json(self) -> dict:
        return {
            "alphabet": self.alphabet.to_json(),
            "events": [[sym, format_rational(t)] for sym, t in self.events],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TimedString":
        alphabet = PartitionedAlphabet.from_json(data["alphabet"])
        events = [(sym, parse_rational(t)) for sym, t in data["events"]]
        return cls(alphabet, events)


@dataclass(frozen=True)
class Matching:
    """Bracket partners per 1-based position; None when unmatched."""

    partner: tuple[Optional[int], ...]

    def __getitem__(self, i: int) -> Optional[int]:
        return self.partner[i - 1]


@lru_cache(maxsize=4096)
def compute_matching(w: TimedString) -> Matching:
    """Single-scan matching: a right bracket pops the nearest unmatched left
    bracket; brackets left on the scan stack (or popping empty) are unmatched.
    """
    partner: list[Optional[int]] = [None] * len(w)
    stack: list[int] = []
    for i in range(1, len(w) + 1):
        sym = w.symbol(i)
        if sym in w.alphabet.calls:
            stack.append(i)
        elif sym in w.alphabet.returns:
            if stack:
                j = stack.pop()
                partner[j - 1] = i
                partner[i - 1] = j
    return Matching(tuple(partner))


def clock_value(w: TimedString, i: int, clock: Clock) -> Optional[Fraction]:
    """Value of an event clock at position i, or None when undefined."""
    w._check_pos(i)
    if clock.kind is ClockKind.SYMBOL_HISTORY:
        for j in range(i - 1, 0, -1):
            if w.symbol(j) == clock.symbol:
                return w.time(i) - w.time(j)
        return None
    if clock.kind is ClockKind.SYMBOL_PREDICTION:
        for j in range(i + 1, len(w) + 1):
            if w.symbol(j) == clock.symbol:
                return w.time(j) - w.time(i)
        return None
    matching = compute_matching(w)
    j = matching[i]
    if clock.kind is ClockKind.STACK_HISTORY:
        if w.symbol(i) in w.alphabet.returns and j is not None:
            return w.time(i) - w.time(j)
        return None
    # stack prediction
    if w.symbol(i) in w.alphabet.calls and j is not None:
        return w.time(j) - w.time(i)
    return None


def is_well_nested_span(w: TimedString, start: int, end: int) -> bool:
    """Whether positions start..end (inclusive) form a well-nested string."""
    depth = 0
    for i in range(start, end + 1):
        sym = w.symbol(i)
        if sym in w.alphabet.calls:
            depth += 1
        elif sym in w.alphabet.returns:
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def longest_well_nested_suffix_start(w: TimedString, i: int) -> int:
    """Least s such that positions s..i are well-nested (s = i+1 if only the
    empty suffix is). The suffix starts right after the last bracket that is
    unmatched within the prefix 1..i.
    """
    if not 0 <= i <= len(w):
        raise IndexError(f"prefix length {i} out of range 0..{len(w)}")
    open_calls: list[int] = []
    last_bad_return = 0
    for j in range(1, i + 1):
        sym = w.symbol(j)
        if sym in w.alphabet.calls:
            open_calls.append(j)
        elif sym in w.alphabet.returns:
            if open_calls:
                open_calls.pop()
            else:
                last_bad_return = j
    last_unmatched = max(last_bad_return, open_calls[-1] if open_calls else 0)
    return last_unmatched + 1


def load_timed_string(path_or_text: str, *, is_text: bool = False) -> TimedString:
    """Load a timed string from a JSON file, or from line-oriented text when
    the content does not parse as JSON.

    Line format: `symbol timestamp` per event, `#`-comments allowed, preceded
    by three directive lines `calls: ...`, `returns: ...`, `internals: ...`
    listing the alphabet.
    """
    if is_text:
        content = path_or_text
    else:
        with open(path_or_text, "r", encoding="utf-8") as fh:
            content = fh.read()
    stripped = content.lstrip()
    if stripped.startswith("{"):
        return TimedString.from_json(json.loads(content))
    classes = {"calls": [], "returns": [], "internals": []}
    events: list[tuple[str, Fraction]] = []
    for lineno, raw in enumerate(content.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split(":", 1)[0].strip()
        if head in classes and ":" in line:
            classes[head] = line.split(":", 1)[1].split()
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TimedStringError(
                f"line {lineno}: expected 'symbol timestamp', got {raw!r}")
        try:
            events.append((parts[0], parse_rational(parts[1])))
        except ValueError as exc:
            raise TimedStringError(f"line {lineno}: {exc}") from exc
    alphabet = PartitionedAlphabet(classes["calls"], classes["returns"],
                                   classes["internals"])
    return TimedString(alphabet, events)
