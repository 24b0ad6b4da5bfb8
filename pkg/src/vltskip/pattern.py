"""Chord-progression queries matched with or without skips.

Query files hold blocks like::

    # I6 - ii6 - V7 - I in major
    name: semplice
    alt: 3,8,_;_  3,9,_;2  4,7,10;7  4,7,_;5

Each ``alt:`` line lists one VLT per slot. ``*`` in place of the whole
interval part matches any chord, and ``*`` in a single cell matches one
optional extra interval class. ``;_`` leaves the bass interval free; the
first slot's interval must always be ``_``.

Bass intervals of later slots are compared against the interval between the
matched chords themselves, so skipped chords do not break a bass motion.
``surface_i=True`` instead compares the intervals written on the matched
tokens.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .skipgram import NgramToken, SkipSpec, _successor_lists
from .vlt import MAX_CLASSES, UNDEFINED, Vlt, VltSequence

WILDCARD = "*"


@dataclass(frozen=True)
class Slot:
    required: tuple[int, ...] | None
    optional: int = 0
    i: int | None = None

    @property
    def any_s(self) -> bool:
        return self.required is None

    def matches_s(self, s: Sequence[int]) -> bool:
        if self.required is None:
            return True
        return set(self.required) <= set(s) and len(s) <= len(self.required) + self.optional

    def __str__(self):
        i = UNDEFINED if self.i is None else str(self.i)
        if self.required is None:
            return f"{WILDCARD};{i}"
        cells = [str(c) for c in self.required] + [WILDCARD] * self.optional
        cells += [UNDEFINED] * (MAX_CLASSES - len(cells))
        return f"{','.join(cells)};{i}"


def parse_slot(text: str) -> Slot:
    s_part, sep, i_part = text.strip().partition(";")
    i_part = i_part.strip() if sep else UNDEFINED
    if i_part == UNDEFINED:
        i = None
    elif i_part.isdigit() and 0 <= int(i_part) <= 11:
        i = int(i_part)
    else:
        raise ValueError(f"bad bass interval {i_part!r} in slot {text!r}")
    s_part = s_part.strip()
    if s_part == WILDCARD:
        return Slot(None, 0, i)
    cells = [c.strip() for c in s_part.split(",")]
    if len(cells) != MAX_CLASSES:
        raise ValueError(f"slot {text!r} needs {MAX_CLASSES} interval cells")
    required, optional = [], 0
    for cell in cells:
        if cell == WILDCARD:
            optional += 1
        elif cell == UNDEFINED:
            continue
        elif cell.isdigit() and 1 <= int(cell) <= 11:
            required.append(int(cell))
        else:
            raise ValueError(f"illegal interval class {cell!r} in slot {text!r}")
    if len(set(required)) != len(required):
        raise ValueError(f"repeated interval class in slot {text!r}")
    return Slot(tuple(sorted(required)), optional, i)


@dataclass(frozen=True)
class PatternQuery:
    name: str
    alternatives: tuple[tuple[Slot, ...], ...]

    def __post_init__(self):
        if not self.alternatives:
            raise ValueError(f"query {self.name!r} has no alternatives")
        lengths = {len(a) for a in self.alternatives}
        if len(lengths) != 1:
            raise ValueError(f"query {self.name!r} mixes alternative lengths {sorted(lengths)}")
        if self.n < 2:
            raise ValueError(f"query {self.name!r} needs at least two slots")
        if any(alt[0].i is not None for alt in self.alternatives):
            raise ValueError(f"query {self.name!r}: the first slot's bass interval must be _")

    @property
    def n(self) -> int:
        return len(self.alternatives[0])


def compile_query(name: str, alternatives: Iterable[str | Sequence[str]]) -> PatternQuery:
    """Build a query from alternative lines (or pre-split slot lists)."""
    alts = []
    for alt in alternatives:
        if isinstance(alt, str):
            alt = alt.strip().strip("[]").split()
        alts.append(tuple(parse_slot(s) for s in alt))
    return PatternQuery(name, tuple(alts))


def parse_query_file(text: str) -> list[PatternQuery]:
    queries = []
    name, alts = None, []

    def flush():
        if name is not None:
            queries.append(compile_query(name, alts))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        key = key.strip().lower()
        try:
            if key == "name" and sep:
                flush()
                name, alts = value.strip(), []
                if not name:
                    raise ValueError("empty query name")
            elif key == "alt" and sep:
                if name is None:
                    raise ValueError("alt: line before any name: line")
                alts.append(value)
            else:
                raise ValueError(f"expected 'name:' or 'alt:', got {raw.strip()!r}")
        except ValueError as exc:
            raise ValueError(f"query line {lineno}: {exc}") from None
    try:
        flush()
    except ValueError as exc:
        raise ValueError(f"query {name!r}: {exc}") from None
    if not queries:
        raise ValueError("query file defines no queries")
    return queries


def _match_alternative(seq, alt, skip, succ, bass, surface_i, found):
    n = len(alt)
    tokens = seq.tokens

    def fits(j, idx, prev):
        slot = alt[j]
        if not slot.matches_s(tokens[idx].s):
            return False
        if j == 0 or slot.i is None:
            return True
        got = tokens[idx].i if surface_i else int(bass[idx] - bass[prev]) % 12
        return got == slot.i

    def candidates(last, budget):
        if skip.mode == "variable":
            return succ[last]
        hi = last + 2 + (budget if skip.mode == "fixed" else 0)
        return range(last + 1, min(len(tokens), hi))

    def extend(prefix, budget):
        if len(prefix) == n:
            found.add(tuple(prefix))
            return
        last = prefix[-1]
        for nxt in candidates(last, budget):
            if fits(len(prefix), nxt, last):
                prefix.append(nxt)
                extend(prefix, budget - (nxt - last - 1))
                prefix.pop()

    for start in range(len(tokens) - n + 1 if skip.mode == "none" else len(tokens)):
        if fits(0, start, None):
            extend([start], skip.t if skip.mode == "fixed" else 0)


def search_piece(seq: VltSequence, query: PatternQuery, skip: SkipSpec,
                 surface_i: bool = False) -> list[NgramToken]:
    """Every admitted n-gram token matching some alternative, in index order."""
    succ = _successor_lists(seq.perf, skip.ioi) if skip.mode == "variable" else None
    bass = seq.bass_classes
    found: set[tuple[int, ...]] = set()
    for alt in query.alternatives:
        _match_alternative(seq, alt, skip, succ, bass, surface_i, found)
    return [NgramToken(tuple(seq.tokens[j] for j in idx), idx) for idx in sorted(found)]


def token_matches(seq: VltSequence, token: NgramToken, query: PatternQuery,
                  surface_i: bool = False) -> bool:
    """Re-check a returned match against the query, slot by slot."""
    bass = seq.bass_classes
    for alt in query.alternatives:
        ok = True
        for j, (slot, idx) in enumerate(zip(alt, token.indices)):
            if not slot.matches_s(seq.tokens[idx].s):
                ok = False
                break
            if j and slot.i is not None:
                got = seq.tokens[idx].i if surface_i else \
                    int(bass[idx] - bass[token.indices[j - 1]]) % 12
                if got != slot.i:
                    ok = False
                    break
        if ok:
            return True
    return False


@dataclass(frozen=True)
class PieceCount:
    skip: SkipSpec
    pieces: int
    matches: int


def corpus_piece_counts(sequences: Sequence[VltSequence], query: PatternQuery,
                        skips: Sequence[SkipSpec], surface_i: bool = False) -> list[PieceCount]:
    """Per skip level: how many pieces contain the query, and total matches."""
    rows = []
    for skip in skips:
        found = [len(search_piece(seq, query, skip, surface_i)) for seq in sequences]
        rows.append(PieceCount(skip, sum(1 for c in found if c), sum(found)))
    return rows


def vlt_slot(vlt: Vlt, first: bool = False) -> Slot:
    """A slot that matches exactly ``vlt`` (its interval dropped when ``first``)."""
    return Slot(vlt.s, 0, None if first else vlt.i)
