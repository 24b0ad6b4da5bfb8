"""Note, piece and corpus types plus the readers that build them.

The canonical ingestion path is the interchange CSV (or its JSONL twin)::

    piece_id,composer,onset_score,onset_perf,duration_score,pitch,voice
    p1,Bach,0,0.0,1,60,

Score positions are exact :class:`fractions.Fraction` beats so that onsets
can be grouped by equality. A small Standard MIDI File reader covers note
extraction only.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import struct
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("piece_id", "composer", "onset_score", "onset_perf",
               "duration_score", "pitch", "voice")


class ParseError(ValueError):
    """Malformed input. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


def parse_fraction(text) -> Fraction:
    """Parse ``a/b``, an integer or a decimal literal exactly."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(str(text))
    text = str(text).strip()
    if not text:
        raise ValueError("empty rational")
    return Fraction(text)


def format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class NoteEvent:
    onset_score: Fraction
    duration_score: Fraction
    pitch: int
    onset_perf: float | None = None
    voice: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "onset_score", parse_fraction(self.onset_score))
        object.__setattr__(self, "duration_score", parse_fraction(self.duration_score))
        if self.duration_score <= 0:
            raise ValueError(f"duration_score must be > 0, got {self.duration_score}")
        if not isinstance(self.pitch, int) or isinstance(self.pitch, bool):
            raise ValueError(f"pitch must be an integer, got {self.pitch!r}")
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch {self.pitch} outside 0..127")
        if self.onset_perf is not None:
            object.__setattr__(self, "onset_perf", float(self.onset_perf))
            if not self.onset_perf >= 0:
                raise ValueError(f"onset_perf must be >= 0, got {self.onset_perf}")

    @property
    def offset_score(self) -> Fraction:
        return self.onset_score + self.duration_score


@dataclass(frozen=True)
class Piece:
    piece_id: str
    composer: str
    notes: tuple[NoteEvent, ...] = ()

    def __post_init__(self):
        if not self.piece_id:
            raise ValueError("piece_id must be non-empty")
        notes = tuple(self.notes)
        # stable: ties keep input order
        if any(a.onset_score > b.onset_score for a, b in zip(notes, notes[1:])):
            notes = tuple(sorted(notes, key=lambda n: n.onset_score))
        object.__setattr__(self, "notes", notes)

    @property
    def has_perf_timing(self) -> bool:
        return all(n.onset_perf is not None for n in self.notes)


@dataclass(frozen=True)
class Corpus:
    pieces: tuple[Piece, ...]
    name: str = "corpus"

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("a corpus needs at least one piece")
        dupes = [pid for pid, c in Counter(p.piece_id for p in pieces).items() if c > 1]
        if dupes:
            raise ValueError(f"duplicate piece_id(s): {', '.join(sorted(dupes))}")
        object.__setattr__(self, "pieces", pieces)

    def __iter__(self):
        return iter(self.pieces)

    def __len__(self):
        return len(self.pieces)

    def piece(self, piece_id: str) -> Piece:
        for p in self.pieces:
            if p.piece_id == piece_id:
                return p
        raise KeyError(piece_id)

    def strata(self) -> dict[str, str]:
        """piece_id -> composer, the stratification label."""
        return {p.piece_id: p.composer for p in self.pieces}


# ---------------------------------------------------------------------------
# interchange CSV / JSONL

def _note_from_fields(fields: dict, line: int, source) -> tuple[str, str, NoteEvent]:
    try:
        piece_id = str(fields["piece_id"]).strip()
        composer = str(fields.get("composer") or "").strip()
        onset_score = parse_fraction(fields["onset_score"])
        duration = parse_fraction(fields["duration_score"])
        perf = fields.get("onset_perf")
        perf = None if perf in (None, "") else float(perf)
        pitch_raw = fields["pitch"]
        if isinstance(pitch_raw, str):
            pitch_raw = pitch_raw.strip()
            if not pitch_raw.lstrip("-").isdigit():
                raise ValueError(f"pitch {pitch_raw!r} is not an integer")
        pitch = int(pitch_raw)
        voice = fields.get("voice")
        voice = None if voice in (None, "") else int(voice)
        if not piece_id:
            raise ValueError("empty piece_id")
        note = NoteEvent(onset_score, duration, pitch, perf, voice)
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}", line, source) from None
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ParseError(str(exc), line, source) from None
    return piece_id, composer, note


def _assemble(rows: Iterable[tuple[int, str, str, NoteEvent]], name: str, source) -> Corpus:
    order: list[str] = []
    composers: dict[str, str] = {}
    notes: dict[str, list[NoteEvent]] = {}
    for line, piece_id, composer, note in rows:
        if piece_id not in notes:
            order.append(piece_id)
            composers[piece_id] = composer
            notes[piece_id] = []
        elif composers[piece_id] != composer:
            raise ParseError(
                f"piece {piece_id!r} has conflicting composers "
                f"{composers[piece_id]!r} and {composer!r}", line, source)
        notes[piece_id].append(note)
    if not order:
        raise ParseError("no note rows", None, source)
    return Corpus(tuple(Piece(pid, composers[pid], tuple(notes[pid])) for pid in order), name)


def _text_stream(stream) -> IO[str]:
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(bytes(stream).decode("utf-8"))
    if isinstance(stream, io.TextIOBase):
        return stream
    if hasattr(stream, "read"):
        data = stream.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data)
    raise TypeError(f"cannot read notes from {type(stream).__name__}")


def parse_note_csv(stream, name="corpus", source=None) -> Corpus:
    """Read the interchange CSV from bytes or a (binary or text) stream."""
    text = _text_stream(stream)
    reader = csv.reader(text)
    header = next(reader, None)
    if header is None:
        raise ParseError("empty file", None, source)
    header = [h.strip() for h in header]
    if tuple(header) != CSV_COLUMNS:
        raise ParseError(f"header must be {','.join(CSV_COLUMNS)}, got {','.join(header)}", 1, source)

    def rows():
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise ParseError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}", line, source)
            yield (line, *_note_from_fields(dict(zip(CSV_COLUMNS, row)), line, source))

    return _assemble(rows(), name, source)


def parse_note_jsonl(stream, name="corpus", source=None) -> Corpus:
    """Read one JSON object per line with the interchange column names."""
    text = _text_stream(stream)

    def rows():
        for line, raw in enumerate(text, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line, source) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", line, source)
            yield (line, *_note_from_fields(obj, line, source))

    return _assemble(rows(), name, source)


def write_note_csv(corpus: Corpus, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for piece in corpus:
        for n in piece.notes:
            writer.writerow([
                piece.piece_id, piece.composer, format_fraction(n.onset_score),
                "" if n.onset_perf is None else repr(n.onset_perf),
                format_fraction(n.duration_score), n.pitch,
                "" if n.voice is None else n.voice,
            ])


def write_note_jsonl(corpus: Corpus, stream: IO[str]) -> None:
    for piece in corpus:
        for n in piece.notes:
            stream.write(json.dumps({
                "piece_id": piece.piece_id, "composer": piece.composer,
                "onset_score": format_fraction(n.onset_score), "onset_perf": n.onset_perf,
                "duration_score": format_fraction(n.duration_score),
                "pitch": n.pitch, "voice": n.voice,
            }) + "\n")


# ---------------------------------------------------------------------------
# Standard MIDI Files

DEFAULT_TEMPO = 500000  # microseconds per quarter, i.e. 120 BPM


def _read_varlen(data: bytes, pos: int, end: int) -> tuple[int, int]:
    value = 0
    for _ in range(4):
        if pos >= end:
            raise ParseError("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise ParseError("variable-length quantity longer than 4 bytes")


def _iter_chunks(data: bytes):
    pos = 0
    while pos < len(data):
        if pos + 8 > len(data):
            raise ParseError(f"truncated chunk header at byte {pos}")
        kind, length = struct.unpack(">4sI", data[pos:pos + 8])
        body_start = pos + 8
        if body_start + length > len(data):
            raise ParseError(f"truncated {kind.decode('latin-1')} chunk at byte {pos}")
        yield kind, body_start, body_start + length
        pos = body_start + length


_CHANNEL_DATA_BYTES = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


def _read_track(data: bytes, start: int, end: int):
    """Yield (tick, kind, payload) for note and tempo events, then the end tick."""
    tick = 0
    pos = start
    status = None
    while pos < end:
        delta, pos = _read_varlen(data, pos, end)
        tick += delta
        if pos >= end:
            raise ParseError("truncated event")
        byte = data[pos]
        if byte & 0x80:
            pos += 1
            if byte < 0xF0:
                status = byte
        elif status is None:
            raise ParseError("running status without a prior status byte")
        else:
            byte = status
        if byte == 0xFF:
            if pos >= end:
                raise ParseError("truncated meta event")
            meta_type = data[pos]
            length, pos = _read_varlen(data, pos + 1, end)
            if pos + length > end:
                raise ParseError("truncated meta event")
            payload = data[pos:pos + length]
            pos += length
            if meta_type == 0x51 and length == 3:
                yield tick, "tempo", int.from_bytes(payload, "big")
            elif meta_type == 0x2F:
                yield tick, "end", None
                return
        elif byte in (0xF0, 0xF7):
            length, pos = _read_varlen(data, pos, end)
            pos += length
        elif byte >= 0xF0:
            raise ParseError(f"unsupported system message 0x{byte:02X} in track")
        else:
            n_bytes = _CHANNEL_DATA_BYTES[byte & 0xF0]
            if pos + n_bytes > end:
                raise ParseError("truncated channel message")
            args = data[pos:pos + n_bytes]
            pos += n_bytes
            kind = byte & 0xF0
            channel = byte & 0x0F
            if kind == 0x90 and args[1] > 0:
                yield tick, "on", (channel, args[0])
            elif kind == 0x80 or kind == 0x90:
                yield tick, "off", (channel, args[0])
    if pos > end:
        raise ParseError("track overruns its chunk")
    yield tick, "end", None


class _TempoMap:
    def __init__(self, changes: list[tuple[int, int]], division: int):
        self.division = division
        changes = sorted(changes, key=lambda c: c[0])
        self.ticks = [0]
        self.tempi = [DEFAULT_TEMPO]
        self.seconds = [0.0]
        for tick, tempo in changes:
            sec = self.seconds[-1] + (tick - self.ticks[-1]) * self.tempi[-1] * 1e-6 / division
            if tick == self.ticks[-1]:
                self.tempi[-1] = tempo
            else:
                self.ticks.append(tick)
                self.tempi.append(tempo)
                self.seconds.append(sec)

    def to_seconds(self, tick: int) -> float:
        i = 0
        while i + 1 < len(self.ticks) and self.ticks[i + 1] <= tick:
            i += 1
        return self.seconds[i] + (tick - self.ticks[i]) * self.tempi[i] * 1e-6 / self.division


def parse_smf(data: bytes, piece_id="midi", composer="", source=None) -> Piece:
    """Extract notes from a type-0 or type-1 Standard MIDI File.

    Note-on with velocity 0 counts as note-off; overlapping notes on the same
    channel and key pair first-in first-out. Dangling note-ons are closed at
    the end of their track with a warning. Channel becomes ``voice``.
    """
    data = bytes(data)
    if data[:4] != b"MThd":
        raise ParseError("missing MThd header magic", None, source)
    chunks = _iter_chunks(data)
    try:
        _, hstart, hend = next(chunks)
        if hend - hstart < 6:
            raise ParseError("header chunk shorter than 6 bytes")
        fmt, ntracks, division = struct.unpack(">HHH", data[hstart:hstart + 6])
        if fmt not in (0, 1):
            raise ParseError(f"SMF format {fmt} not supported")
        if division & 0x8000:
            raise ParseError("SMPTE time division not supported")
        if division == 0:
            raise ParseError("time division of zero")
        tracks = [(s, e) for kind, s, e in chunks if kind == b"MTrk"]
        if len(tracks) < ntracks:
            raise ParseError(f"header announces {ntracks} tracks, found {len(tracks)}")
        raw_notes = []
        tempo_changes = []
        for track_no, (start, end) in enumerate(tracks):
            pending: dict[tuple[int, int], list[int]] = {}
            end_tick = 0
            for tick, kind, payload in _read_track(data, start, end):
                end_tick = tick
                if kind == "tempo":
                    tempo_changes.append((tick, payload))
                elif kind == "on":
                    pending.setdefault(payload, []).append(tick)
                elif kind == "off":
                    queue = pending.get(payload)
                    if queue:
                        on_tick = queue.pop(0)
                        raw_notes.append((on_tick, tick, payload[1], payload[0]))
            for (channel, pitch), queue in pending.items():
                for on_tick in queue:
                    logger.warning("%s: track %d: note %d on channel %d never released; "
                                   "closing at track end", source or piece_id, track_no,
                                   pitch, channel)
                    raw_notes.append((on_tick, end_tick, pitch, channel))
    except ParseError as exc:
        if exc.source is None and source is not None:
            raise ParseError(str(exc), None, source) from None
        raise
    tempo = _TempoMap(tempo_changes, division)
    notes = []
    for on_tick, off_tick, pitch, channel in sorted(raw_notes, key=lambda r: (r[0], r[3], r[2])):
        if off_tick <= on_tick:
            logger.warning("%s: dropping zero-length note %d at tick %d",
                           source or piece_id, pitch, on_tick)
            continue
        notes.append(NoteEvent(
            onset_score=Fraction(on_tick, division),
            duration_score=Fraction(off_tick - on_tick, division),
            pitch=pitch,
            onset_perf=tempo.to_seconds(on_tick),
            voice=channel,
        ))
    return Piece(piece_id, composer, tuple(notes))


# ---------------------------------------------------------------------------

def read_corpus(paths, name=None) -> Corpus:
    """Load notes from CSV, JSONL or MIDI files into one corpus."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    pieces: list[Piece] = []
    for path in map(Path, paths):
        suffix = path.suffix.lower()
        if suffix in (".mid", ".midi", ".smf"):
            pieces.append(parse_smf(path.read_bytes(), piece_id=path.stem, source=str(path)))
        elif suffix in (".jsonl", ".ndjson"):
            pieces.extend(parse_note_jsonl(path.read_bytes(), source=str(path)).pieces)
        else:
            pieces.extend(parse_note_csv(path.read_bytes(), source=str(path)).pieces)
    if name is None:
        name = Path(paths[0]).stem if len(paths) == 1 else "corpus"
    return Corpus(tuple(pieces), name)


@dataclass
class ValidationReport:
    no_perf_timing: list[str] = field(default_factory=list)
    too_short: list[str] = field(default_factory=list)
    strata_sizes: dict[str, int] = field(default_factory=dict)
    n: int | None = None

    @property
    def flagged(self) -> bool:
        return bool(self.no_perf_timing or self.too_short)

    def lines(self) -> list[str]:
        out = [f"pieces without performance timing: {len(self.no_perf_timing)}"]
        out += [f"  {pid}" for pid in self.no_perf_timing]
        if self.n is not None:
            out.append(f"pieces with fewer than {self.n} notes: {len(self.too_short)}")
            out += [f"  {pid}" for pid in self.too_short]
        out.append("strata sizes:")
        out += [f"  {c or '(none)'}: {k}" for c, k in sorted(self.strata_sizes.items())]
        return out


def validate_corpus(corpus: Corpus, n: int | None = None) -> ValidationReport:
    report = ValidationReport(n=n)
    for piece in corpus:
        if not piece.has_perf_timing:
            report.no_perf_timing.append(piece.piece_id)
        if n is not None and len(piece.notes) < n:
            report.too_short.append(piece.piece_id)
    report.strata_sizes = dict(Counter(p.composer for p in corpus))
    return report
