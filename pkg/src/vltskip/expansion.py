"""Full expansion of a piece into chord slices, one per unique onset."""
from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Iterable

from .corpus import Corpus, ParseError, Piece, format_fraction, parse_fraction

SLICE_COLUMNS = ("piece_id", "onset_score", "onset_perf", "bass", "pitches")


@dataclass(frozen=True)
class Slice:
    onset_score: Fraction
    pitches: frozenset[int]
    onset_perf: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "pitches", frozenset(self.pitches))
        if not self.pitches:
            raise ValueError("a slice needs at least one sounding pitch")

    @property
    def bass(self) -> int:
        return min(self.pitches)


def slice_onsets(piece: Piece) -> list[Fraction]:
    return sorted({n.onset_score for n in piece.notes})


def full_expand(piece: Piece) -> list[Slice]:
    """Partition ``piece`` into slices at every distinct note onset.

    A note sounds in every slice whose onset falls in ``[onset, onset + duration)``.
    Slice performance times come from the notes attacked there (earliest wins)
    and are otherwise interpolated linearly in score time between the nearest
    timed slices on either side.
    """
    onsets = slice_onsets(piece)
    sounding: list[set[int]] = [set() for _ in onsets]
    perf: list[float | None] = [None] * len(onsets)
    for note in piece.notes:
        lo = bisect.bisect_left(onsets, note.onset_score)
        hi = bisect.bisect_left(onsets, note.offset_score)
        for j in range(lo, hi):
            sounding[j].add(note.pitch)
        if note.onset_perf is not None and (perf[lo] is None or note.onset_perf < perf[lo]):
            perf[lo] = note.onset_perf
    perf = _interpolate(onsets, perf)
    return [Slice(o, frozenset(p), t) for o, p, t in zip(onsets, sounding, perf)]


def _interpolate(onsets: list[Fraction], perf: list[float | None]) -> list[float | None]:
    known = [j for j, t in enumerate(perf) if t is not None]
    if len(known) == len(perf) or len(known) < 2:
        return perf
    out = list(perf)
    for a, b in zip(known, known[1:]):
        if b - a < 2:
            continue
        span = onsets[b] - onsets[a]
        for j in range(a + 1, b):
            frac = float((onsets[j] - onsets[a]) / span)
            out[j] = perf[a] + frac * (perf[b] - perf[a])
    return out


def expand_corpus(corpus: Corpus) -> dict[str, list[Slice]]:
    return {piece.piece_id: full_expand(piece) for piece in corpus}


def write_slice_csv(slices_by_piece: dict[str, list[Slice]], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SLICE_COLUMNS)
    for piece_id, slices in slices_by_piece.items():
        for s in slices:
            writer.writerow([
                piece_id, format_fraction(s.onset_score),
                "" if s.onset_perf is None else repr(s.onset_perf),
                s.bass, ".".join(str(p) for p in sorted(s.pitches)),
            ])


def read_slice_csv(lines: Iterable[str], source=None) -> dict[str, list[Slice]]:
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SLICE_COLUMNS:
        raise ParseError(f"slice CSV header must be {','.join(SLICE_COLUMNS)}", 1, source)
    out: dict[str, list[Slice]] = {}
    for row in reader:
        if not row:
            continue
        line = reader.line_num
        if len(row) != len(SLICE_COLUMNS):
            raise ParseError(f"expected {len(SLICE_COLUMNS)} fields, got {len(row)}", line, source)
        piece_id, onset, perf, bass, pitches = row
        try:
            s = Slice(parse_fraction(onset), frozenset(int(p) for p in pitches.split(".")),
                      None if perf == "" else float(perf))
        except ValueError as exc:
            raise ParseError(str(exc), line, source) from None
        if s.bass != int(bass):
            raise ParseError(f"bass column {bass} disagrees with pitches {pitches}", line, source)
        out.setdefault(piece_id, []).append(s)
    if not out:
        raise ParseError("no slice rows", None, source)
    return out
