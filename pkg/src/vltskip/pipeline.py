"""Glue between the stages: notes -> slices -> VLT sequences, and file loading."""
from __future__ import annotations

import io
from pathlib import Path

from .corpus import CSV_COLUMNS, Corpus, ParseError, read_corpus
from .expansion import SLICE_COLUMNS, expand_corpus, read_slice_csv
from .vlt import TOKEN_COLUMNS, VltSequence, encode_corpus, read_token_csv


def encode_notes(corpus: Corpus) -> list[VltSequence]:
    return encode_corpus(expand_corpus(corpus))


def sniff(path) -> str:
    """Classify an input file as notes, slices or tokens."""
    path = Path(path)
    if path.suffix.lower() in (".mid", ".midi", ".smf", ".jsonl", ".ndjson"):
        return "notes"
    with open(path, encoding="utf-8") as fh:
        header = tuple(h.strip() for h in fh.readline().strip().split(","))
    for kind, cols in (("notes", CSV_COLUMNS), ("slices", SLICE_COLUMNS),
                       ("tokens", TOKEN_COLUMNS)):
        if header == cols:
            return kind
    raise ParseError(f"unrecognised header {','.join(header)!r}", 1, str(path))


def load_sequences(paths) -> tuple[list[VltSequence], dict[str, str]]:
    """Read VLT sequences from note, slice or token files.

    Returns the sequences and a piece_id -> composer map (empty composer when
    the input carries none).
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    sequences: list[VltSequence] = []
    strata: dict[str, str] = {}
    for path in paths:
        kind = sniff(path)
        if kind == "notes":
            corpus = read_corpus(path)
            seqs = encode_notes(corpus)
            strata.update(corpus.strata())
        else:
            text = Path(path).read_text(encoding="utf-8")
            if kind == "slices":
                seqs = encode_corpus(read_slice_csv(io.StringIO(text), source=str(path)))
            else:
                seqs = read_token_csv(io.StringIO(text), source=str(path))
            strata.update({s.piece_id: "" for s in seqs})
        sequences.extend(seqs)
    ids = [s.piece_id for s in sequences]
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate piece_id across inputs")
    return sequences, strata


def read_strata(path) -> dict[str, str]:
    """Read a ``piece_id,composer`` CSV."""
    import csv
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["piece_id", "composer"]:
        raise ParseError("strata CSV header must be piece_id,composer", 1, str(path))
    return {r[0]: r[1] for r in rows[1:] if r}
