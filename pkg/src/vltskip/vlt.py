"""Voice-leading types: vertical interval classes above the bass plus bass motion.

A :class:`Vlt` pairs ``s``, the sorted set of at most three interval classes
(1..11) above the bass, with ``i``, the bass melodic interval class from the
previous chord (``None`` for a piece's first chord). Octave doublings of the
bass (class 0) and repeated classes are dropped, and order is ignored, so
``<4, 7, 0>`` and ``<7, 4, 0>`` both become ``4,7,_``.
"""
from __future__ import annotations

import csv
import itertools
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .corpus import ParseError
from .expansion import Slice

MAX_CLASSES = 3
CONTEXT_RADIUS = 5
UNDEFINED = "_"


def enumerate_s_domain() -> list[tuple[int, ...]]:
    """Every legal ``s``: subsets of 1..11 with at most three members."""
    return [c for size in range(MAX_CLASSES + 1)
            for c in itertools.combinations(range(1, 12), size)]


S_DOMAIN = tuple(enumerate_s_domain())
S_INDEX = {s: j for j, s in enumerate(S_DOMAIN)}
# integer code of a Vlt: s index * 13 + (i, or 12 when undefined)
I_SLOTS = 13
CODE_BITS = 12
assert len(S_DOMAIN) * I_SLOTS <= 1 << CODE_BITS


@dataclass(frozen=True)
class Vlt:
    s: tuple[int, ...]
    i: int | None = None

    def __post_init__(self):
        s = tuple(self.s)
        if len(s) > MAX_CLASSES:
            raise ValueError(f"at most {MAX_CLASSES} interval classes, got {s}")
        if any(not 1 <= c <= 11 for c in s):
            raise ValueError(f"interval classes must lie in 1..11, got {s}")
        if any(a >= b for a, b in zip(s, s[1:])):
            raise ValueError(f"interval classes must be strictly ascending, got {s}")
        if self.i is not None and not 0 <= self.i <= 11:
            raise ValueError(f"bass interval class must lie in 0..11, got {self.i}")
        object.__setattr__(self, "s", s)

    def __str__(self):
        return vlt_to_string(self)

    @property
    def code(self) -> int:
        return S_INDEX[self.s] * I_SLOTS + (I_SLOTS - 1 if self.i is None else self.i)

    @classmethod
    def from_code(cls, code: int) -> "Vlt":
        s_idx, i = divmod(int(code), I_SLOTS)
        return cls(S_DOMAIN[s_idx], None if i == I_SLOTS - 1 else i)


def format_s(s: Sequence[int]) -> str:
    cells = [str(c) for c in s] + [UNDEFINED] * (MAX_CLASSES - len(s))
    return ",".join(cells)


def vlt_to_string(vlt: Vlt) -> str:
    return f"{format_s(vlt.s)};{UNDEFINED if vlt.i is None else vlt.i}"


def parse_s(text: str) -> tuple[int, ...]:
    cells = [c.strip() for c in text.split(",")]
    if len(cells) != MAX_CLASSES:
        raise ValueError(f"expected {MAX_CLASSES} interval cells in {text!r}")
    values = []
    seen_undefined = False
    for cell in cells:
        if cell == UNDEFINED:
            seen_undefined = True
            continue
        if seen_undefined:
            raise ValueError(f"undefined cells must trail in {text!r}")
        if not cell.isdigit():
            raise ValueError(f"bad interval class {cell!r} in {text!r}")
        values.append(int(cell))
    return Vlt(tuple(values)).s


def parse_vlt(text: str) -> Vlt:
    """Inverse of :func:`vlt_to_string`; rejects non-canonical spellings."""
    s_part, sep, i_part = text.strip().partition(";")
    if not sep:
        raise ValueError(f"missing ';' in VLT {text!r}")
    i_part = i_part.strip()
    if i_part == UNDEFINED:
        i = None
    elif i_part.isdigit():
        i = int(i_part)
    else:
        raise ValueError(f"bad bass interval {i_part!r} in {text!r}")
    return Vlt(parse_s(s_part), i)


def vertical_intervals(chord) -> frozenset[int]:
    """Interval classes above the bass, without bass doublings.

    ``chord`` is a :class:`Slice` or any iterable of MIDI pitches.
    """
    pitches = chord.pitches if isinstance(chord, Slice) else set(chord)
    bass = min(pitches)
    return frozenset((p - bass) % 12 for p in pitches) - {0}


def replace_oversized(intervals: Iterable[int],
                      context: Mapping[int, Iterable[int]] | None = None,
                      piece_tally: Mapping[tuple[int, ...], int] | None = None,
                      corpus_tally: Mapping[tuple[int, ...], int] | None = None) -> tuple[int, ...]:
    """Pick a three-member subset for a chord with more than three classes.

    ``context`` maps signed slice offsets (within the +/-5 window) to the
    interval sets found there. The first subset seen nearest in context wins
    (earlier side on ties); failing that, the subset most frequent in the
    piece, then in the corpus; failing everything, the smallest subset.
    """
    members = sorted(set(intervals))
    if len(members) <= MAX_CLASSES:
        raise ValueError(f"only oversized sets need replacing, got {members}")
    candidates = list(itertools.combinations(members, MAX_CLASSES))
    wanted = set(candidates)
    if context:
        for offset in sorted(context, key=lambda d: (abs(d), d > 0)):
            if offset == 0 or abs(offset) > CONTEXT_RADIUS:
                continue
            s = tuple(sorted(context[offset]))
            if s in wanted:
                return s
    for tally in (piece_tally, corpus_tally):
        if not tally:
            continue
        best = max(candidates, key=lambda c: (tally.get(c, 0), [-x for x in c]))
        if tally.get(best, 0) > 0:
            return best
    return candidates[0]


@dataclass(frozen=True)
class VltSequence:
    piece_id: str
    tokens: tuple[Vlt, ...]
    onsets_perf: tuple[float | None, ...]
    replaced: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "onsets_perf", tuple(self.onsets_perf))
        object.__setattr__(self, "replaced", tuple(self.replaced))
        if len(self.tokens) != len(self.onsets_perf):
            raise ValueError("tokens and onsets_perf differ in length")
        if self.tokens and self.tokens[0].i is not None:
            raise ValueError("the first token's bass interval must be undefined")
        if any(t.i is None for t in self.tokens[1:]):
            raise ValueError("only the first token may have an undefined bass interval")

    def __len__(self):
        return len(self.tokens)

    @property
    def has_perf_timing(self) -> bool:
        return all(t is not None for t in self.onsets_perf)

    @cached_property
    def codes(self) -> np.ndarray:
        return np.fromiter((t.code for t in self.tokens), dtype=np.int64, count=len(self.tokens))

    @cached_property
    def entry_free_codes(self) -> np.ndarray:
        """Codes with the bass interval forced to undefined."""
        return (self.codes // I_SLOTS) * I_SLOTS + (I_SLOTS - 1)

    @cached_property
    def bass_classes(self) -> np.ndarray:
        """Bass pitch classes relative to the first chord's bass.

        Rebuilt by summing bass intervals, so any interval between two
        chords, adjacent or not, is the difference of two entries mod 12.
        """
        steps = np.array([0] + [t.i for t in self.tokens[1:]], dtype=np.int64)
        return np.cumsum(steps) % 12

    @cached_property
    def perf(self) -> np.ndarray:
        if not self.has_perf_timing:
            raise MissingTimingError(self.piece_id)
        return np.asarray(self.onsets_perf, dtype=float)


class MissingTimingError(ValueError):
    def __init__(self, piece_id):
        self.piece_id = piece_id
        super().__init__(f"piece {piece_id!r} lacks performance onsets; "
                         "variable-skip analysis refused")


def _s_tally(slices: Sequence[Slice]) -> Counter:
    tally = Counter()
    for sl in slices:
        s = vertical_intervals(sl)
        if len(s) <= MAX_CLASSES:
            tally[tuple(sorted(s))] += 1
    return tally


def encode_piece(slices: Sequence[Slice], piece_id: str = "",
                 corpus_tally: Mapping[tuple[int, ...], int] | None = None) -> VltSequence:
    if not slices:
        raise ValueError("cannot encode an empty slice list")
    raw = [vertical_intervals(sl) for sl in slices]
    plain = {j: tuple(sorted(s)) for j, s in enumerate(raw) if len(s) <= MAX_CLASSES}
    piece_tally = Counter(plain.values())
    tokens = []
    replaced = []
    prev_bass = None
    for j, (sl, s) in enumerate(zip(slices, raw)):
        if j in plain:
            s = plain[j]
        else:
            window = {d: plain[j + d] for d in range(-CONTEXT_RADIUS, CONTEXT_RADIUS + 1)
                      if d and (j + d) in plain}
            s = replace_oversized(s, window, piece_tally, corpus_tally)
            replaced.append(j)
        bass = sl.bass
        i = None if prev_bass is None else (bass - prev_bass) % 12
        tokens.append(Vlt(s, i))
        prev_bass = bass
    return VltSequence(piece_id, tuple(tokens), tuple(sl.onset_perf for sl in slices),
                       tuple(replaced))


def encode_corpus(slices_by_piece: Mapping[str, Sequence[Slice]]) -> list[VltSequence]:
    """Encode every piece, resolving oversized chords against corpus-wide counts."""
    corpus_tally = Counter()
    for slices in slices_by_piece.values():
        corpus_tally.update(_s_tally(slices))
    return [encode_piece(slices, pid, corpus_tally) for pid, slices in slices_by_piece.items()]


TOKEN_COLUMNS = ("piece_id", "index", "onset_perf", "vlt")


def write_token_csv(sequences: Iterable[VltSequence], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TOKEN_COLUMNS)
    for seq in sequences:
        for j, (tok, perf) in enumerate(zip(seq.tokens, seq.onsets_perf)):
            writer.writerow([seq.piece_id, j, "" if perf is None else repr(perf),
                             vlt_to_string(tok)])


def read_token_csv(lines: Iterable[str], source=None) -> list[VltSequence]:
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != TOKEN_COLUMNS:
        raise ParseError(f"token CSV header must be {','.join(TOKEN_COLUMNS)}", 1, source)
    rows: dict[str, list] = {}
    for row in reader:
        if not row:
            continue
        line = reader.line_num
        if len(row) != len(TOKEN_COLUMNS):
            raise ParseError(f"expected {len(TOKEN_COLUMNS)} fields, got {len(row)}", line, source)
        piece_id, index, perf, text = row
        try:
            entry = (int(index), None if perf == "" else float(perf), parse_vlt(text))
        except ValueError as exc:
            raise ParseError(str(exc), line, source) from None
        bucket = rows.setdefault(piece_id, [])
        if entry[0] != len(bucket):
            raise ParseError(f"piece {piece_id!r}: expected index {len(bucket)}, got {entry[0]}",
                             line, source)
        bucket.append(entry)
    if not rows:
        raise ParseError("no token rows", None, source)
    out = []
    for piece_id, entries in rows.items():
        try:
            out.append(VltSequence(piece_id, tuple(e[2] for e in entries),
                                   tuple(e[1] for e in entries)))
        except ValueError as exc:
            raise ParseError(f"piece {piece_id!r}: {exc}", None, source) from None
    return out
