"""Parser and serializer for datalog-style fact files.

The accepted grammar is deliberately small: the input is data, not a program.

    file    := (fact | comment)*
    fact    := name "(" term ("," term)* ")" "."
    term    := name | quoted-string | number
    name    := [a-z][A-Za-z0-9_]*
    number  := "-"? digits ("." digits)?
    comment := "%" to end of line

Whitespace may appear between any two tokens.  Variables (uppercase or "_")
and rule syntax (":-") are rejected with a positioned error.  Predicates the
engine does not know about are kept and simply ignored downstream.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Iterator, Union

from .errors import FactSyntaxError


@dataclass(frozen=True)
class Quoted:
    """A double-quoted term, distinct from a bare atom with the same text."""

    value: str

    def __str__(self) -> str:
        return f'"{self.value}"'


Term = Union[str, int, float, Quoted]


@dataclass(frozen=True)
class Fact:
    """One ground fact.  Source position is kept for diagnostics but ignored
    by equality so that a serialize/parse round trip compares equal."""

    predicate: str
    args: tuple[Term, ...]
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        inner = ",".join(format_term(a) for a in self.args)
        return f"{self.predicate}({inner})."


def format_term(term: Term) -> str:
    """Render a term back to source text.

    Floats are rendered without an exponent so the result stays inside the
    grammar (e.g. 1e-05 becomes 0.00001)."""
    if isinstance(term, Quoted):
        return f'"{term.value}"'
    if isinstance(term, float):
        text = repr(term)
        if "e" in text or "E" in text:
            text = format(Decimal(text), "f")
        return text
    if isinstance(term, int):
        return str(term)
    return term


class FactSet:
    """Facts grouped by predicate name, preserving source order per group."""

    def __init__(self, facts: Iterable[Fact] = ()):
        self._groups: dict[str, list[Fact]] = {}
        for fact in facts:
            self.add(fact)

    def add(self, fact: Fact) -> None:
        self._groups.setdefault(fact.predicate, []).append(fact)

    def extend(self, facts: Iterable[Fact]) -> None:
        for fact in facts:
            self.add(fact)

    def merge(self, other: "FactSet") -> None:
        """Append another fact set, e.g. when several input files are given."""
        for fact in other:
            self.add(fact)

    def facts(self, predicate: str) -> tuple[Fact, ...]:
        return tuple(self._groups.get(predicate, ()))

    @property
    def predicates(self) -> tuple[str, ...]:
        return tuple(self._groups)

    def rename(self, mapping: dict[str, str]) -> "FactSet":
        """Return a copy with predicate names substituted via `mapping`."""
        renamed = FactSet()
        for fact in self:
            name = mapping.get(fact.predicate, fact.predicate)
            renamed.add(Fact(name, fact.args, fact.line, fact.column))
        return renamed

    def serialize(self) -> str:
        """Render back to fact-file text, one fact per line, grouped by
        predicate.  Re-parsing the result yields an equal FactSet."""
        return "".join(f"{fact}\n" for fact in self)

    def __iter__(self) -> Iterator[Fact]:
        for group in self._groups.values():
            yield from group

    def __len__(self) -> int:
        return sum(len(group) for group in self._groups.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FactSet):
            return NotImplemented
        return self._groups == other._groups

    def __repr__(self) -> str:
        return f"FactSet({len(self)} facts, {len(self._groups)} predicates)"


def expected_schema() -> dict[str, str]:
    """The predicate/arity catalogue the dataset assembler understands.

    `l`, `m`, `n`, `o` are the facet counts of the item, transaction, object
    and container levels; they are inferred from the first vector fact of
    each level.  item/2 and item/4 may not be mixed in one input.
    """
    return {
        "container/1": "(container)",
        "object/2": "(object, container)",
        "transaction/2": "(transaction, object)",
        "item/4": "(item, transaction, position, quantity)",
        "item/2": "(transaction, item); position = source order, quantity = 1",
        "itemUtilityVector/1+l": "(item, facet values...)",
        "transactionUtilityVector/1+m": "(transaction, facet values...)",
        "objectUtilityVector/1+n": "(object, facet values...)",
        "containerUtilityVector/1+o": "(container, facet values...)",
        "itemCategory/2": "(item, category); optional, used by coverage masks",
    }


class _Scanner:
    __slots__ = ("text", "pos", "line", "col")

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def eof(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos]

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def error(self, message: str, line: int | None = None, col: int | None = None) -> FactSyntaxError:
        return FactSyntaxError(message, self.line if line is None else line, self.col if col is None else col)

    def skip_trivia(self) -> None:
        while not self.eof():
            ch = self.peek()
            if ch in " \t\r\n":
                self.advance()
            elif ch == "%":
                while not self.eof() and self.peek() != "\n":
                    self.advance()
            else:
                return


def _is_name_char(ch: str) -> bool:
    return ch.isascii() and (ch.isalnum() or ch == "_")


def _parse_name(s: _Scanner) -> str:
    chars = [s.advance()]
    while not s.eof() and _is_name_char(s.peek()):
        chars.append(s.advance())
    return sys.intern("".join(chars))


def _parse_number(s: _Scanner) -> int | float:
    line, col = s.line, s.col
    chars = []
    if s.peek() == "-":
        chars.append(s.advance())
    if s.eof() or not s.peek().isdigit():
        raise s.error("malformed number", line, col)
    while not s.eof() and s.peek().isdigit():
        chars.append(s.advance())
    if not s.eof() and s.peek() == ".":
        chars.append(s.advance())
        if s.eof() or not s.peek().isdigit():
            raise s.error("malformed number: digits required after decimal point", line, col)
        while not s.eof() and s.peek().isdigit():
            chars.append(s.advance())
        return float("".join(chars))
    return int("".join(chars))


def _parse_quoted(s: _Scanner) -> Quoted:
    line, col = s.line, s.col
    s.advance()
    chars = []
    while True:
        if s.eof() or s.peek() == "\n":
            raise s.error("unterminated quoted term", line, col)
        ch = s.advance()
        if ch == '"':
            return Quoted("".join(chars))
        chars.append(ch)


def _parse_term(s: _Scanner) -> Term:
    ch = s.peek()
    if ch == '"':
        return _parse_quoted(s)
    if ch == "-" or ch.isdigit():
        return _parse_number(s)
    if "a" <= ch <= "z":
        return _parse_name(s)
    if ("A" <= ch <= "Z") or ch == "_":
        raise s.error("variables are not allowed in facts")
    raise s.error(f"unexpected character {ch!r}")


def _parse_fact(s: _Scanner) -> Fact:
    line, col = s.line, s.col
    ch = s.peek()
    if not ("a" <= ch <= "z"):
        if ("A" <= ch <= "Z") or ch == "_":
            raise s.error("variables are not allowed: a fact starts with a lowercase predicate name")
        raise s.error(f"unexpected character {ch!r}")
    predicate = _parse_name(s)
    s.skip_trivia()
    if s.eof():
        raise s.error("expected '(' after predicate name")
    if s.peek() == ":":
        raise s.error("rules are not allowed: input must contain facts only")
    if s.peek() != "(":
        raise s.error("expected '(' after predicate name")
    s.advance()
    args: list[Term] = []
    while True:
        s.skip_trivia()
        if s.eof():
            raise s.error("unterminated term list", line, col)
        args.append(_parse_term(s))
        s.skip_trivia()
        if s.eof():
            raise s.error("unterminated term list", line, col)
        ch = s.advance()
        if ch == ",":
            continue
        if ch == ")":
            break
        raise s.error(f"expected ',' or ')', found {ch!r}")
    s.skip_trivia()
    if s.eof() or s.peek() != ".":
        raise s.error("missing '.' after fact")
    s.advance()
    return Fact(predicate, tuple(args), line, col)


def parse_facts(text: str) -> FactSet:
    """Parse a fact file into a FactSet, or raise a positioned FactSyntaxError.

    Comments and whitespace are skipped; everything else must be a fact."""
    scanner = _Scanner(text)
    facts = FactSet()
    while True:
        scanner.skip_trivia()
        if scanner.eof():
            return facts
        facts.add(_parse_fact(scanner))
