import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ALPHABET, brute_force, make_seq
from vltskip.pattern import (Slot, compile_query, corpus_piece_counts, parse_query_file,
                             parse_slot, search_piece, token_matches, vlt_slot)
from vltskip.skipgram import SkipSpec
from vltskip.vlt import Vlt, parse_vlt

CADENCE = "3,8,_;_ 4,9,_;1 4,7,10;2 4,7,_;5"
FILLER_S = (2, 5, 9)


def with_fillers(slots, step=2):
    """Interleave one filler chord between query chords.

    Each filler moves the bass by ``step``; the following chord compensates,
    so bass motion between query chords is unchanged.
    """
    out = [parse_vlt(slots[0].replace(";_", ";0"))]
    for text in slots[1:]:
        v = parse_vlt(text)
        out.append(Vlt(FILLER_S, step))
        out.append(Vlt(v.s, (v.i - step) % 12))
    return out


# --- slots and queries -----------------------------------------------------

def test_parse_slot_forms():
    assert parse_slot("4,7,_;5") == Slot((4, 7), 0, 5)
    assert parse_slot("7,4,_;_") == Slot((4, 7), 0, None)
    assert parse_slot("*;3") == Slot(None, 0, 3)
    assert parse_slot("4,7,*;_") == Slot((4, 7), 1, None)
    assert str(parse_slot("4,7,*;_")) == "4,7,*;_"
    for bad in ("4,7,12;_", "4,7;_", "4,4,_;_", "4,7,_;12", "a,7,_;_"):
        with pytest.raises(ValueError):
            parse_slot(bad)


def test_slot_wildcards():
    opt = parse_slot("4,7,*;_")
    assert opt.matches_s((4, 7)) and opt.matches_s((4, 7, 10))
    assert not opt.matches_s((4,)) and not opt.matches_s((3, 7, 10))
    assert parse_slot("*;_").matches_s(()) and parse_slot("*;_").matches_s((1, 2, 3))
    exact = parse_slot("4,7,_;_")
    assert exact.matches_s((4, 7)) and not exact.matches_s((4, 7, 10))


def test_compile_query_checks():
    q = compile_query("cad", [CADENCE, "[" + CADENCE.replace("4,7,10;2", "4,7,_;2") + "]"])
    assert q.n == 4 and len(q.alternatives) == 2
    with pytest.raises(ValueError, match="lengths"):
        compile_query("bad", [CADENCE, "3,8,_;_ 4,9,_;1"])
    with pytest.raises(ValueError):
        compile_query("bad", ["3,8,12;_ 4,9,_;1"])
    with pytest.raises(ValueError, match="first slot"):
        compile_query("bad", ["3,8,_;4 4,9,_;1"])
    with pytest.raises(ValueError, match="two slots"):
        compile_query("bad", ["3,8,_;_"])


def test_query_file():
    text = f"""
    # two queries
    name: one
    alt: {CADENCE}
    alt: 4,9,_;_ 5,9,_;2 4,7,10;0 4,7,_;5   # trailing comment
    name: two
    alt: *;_ 4,7,_;5
    """
    qs = parse_query_file(text)
    assert [q.name for q in qs] == ["one", "two"]
    assert len(qs[0].alternatives) == 2
    with pytest.raises(ValueError, match="line 1"):
        parse_query_file("alt: 4,7,_;_ 4,7,_;5")
    with pytest.raises(ValueError):
        parse_query_file("# nothing")
    with pytest.raises(ValueError, match="line 3"):
        parse_query_file("name: x\nalt: 4,7,_;_ 4,7,_;5\nbogus line")


def test_demo_query_file_parses():
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "demos" / "cadences.query"
    qs = parse_query_file(path.read_text())
    assert {q.name for q in qs} == {"semplice", "composta"}
    assert all(q.n == 4 for q in qs)


# --- matching ----------------------------------------------------------------

def test_interpolated_cadence():
    query = compile_query("cad", [CADENCE])
    seq = make_seq(with_fillers(CADENCE.split()), piece_id="interp")
    assert search_piece(seq, query, SkipSpec.none()) == []
    hits = search_piece(seq, query, SkipSpec.fixed(3))
    assert [h.indices for h in hits] == [(0, 2, 4, 6)]
    assert search_piece(seq, query, SkipSpec.fixed(2)) == []
    # written intervals on the matched chords disagree with the query
    assert search_piece(seq, query, SkipSpec.fixed(3), surface_i=True) == []


def test_contiguous_cadence_found_everywhere():
    query = compile_query("cad", [CADENCE])
    seq = make_seq(CADENCE.split())
    for skip in (SkipSpec.none(), SkipSpec.fixed(2)):
        assert [h.indices for h in search_piece(seq, query, skip)] == [(0, 1, 2, 3)]


def test_variable_skip_matching():
    query = compile_query("cad", [CADENCE])
    seq = make_seq(with_fillers(CADENCE.split()), perf=[0.25 * j for j in range(7)])
    assert search_piece(seq, query, SkipSpec.variable(0.4)) == []
    assert [h.indices for h in search_piece(seq, query, SkipSpec.variable(0.5))] == [(0, 2, 4, 6)]


def test_transposition_invariance():
    query = compile_query("cad", [CADENCE])
    a = make_seq(with_fillers(CADENCE.split(), step=2))
    b = make_seq(with_fillers(CADENCE.split(), step=7))
    assert [h.indices for h in search_piece(a, query, SkipSpec.fixed(3))] == \
        [h.indices for h in search_piece(b, query, SkipSpec.fixed(3))]


def _naive_alt_match(seq, alt, idx):
    basses = np.cumsum([0] + [t.i for t in seq.tokens[1:]]) % 12
    for j, (slot, pos) in enumerate(zip(alt, idx)):
        if not slot.matches_s(seq.tokens[pos].s):
            return False
        if j and slot.i is not None and (basses[pos] - basses[idx[j - 1]]) % 12 != slot.i:
            return False
    return True


def _random_query(rng, n):
    alts = []
    for _ in range(rng.randint(1, 3)):
        slots = []
        for j in range(n):
            v = parse_vlt(rng.choice(ALPHABET))
            r = rng.random()
            if r < 0.15:
                text = "*"
            elif r < 0.3 and len(v.s) < 3:
                text = ",".join([str(c) for c in v.s] + ["*"] + ["_"] * (2 - len(v.s)))
            else:
                text = str(v).split(";")[0]
            i = "_" if j == 0 or rng.random() < 0.3 else str(rng.randrange(12))
            slots.append(f"{text};{i}")
        alts.append(" ".join(slots))
    return compile_query("rand", alts)


def _random_seq(rng, k, timed=True):
    toks = [rng.choice(ALPHABET) for _ in range(k)]
    toks = [Vlt(parse_vlt(t).s, rng.randrange(12)) for t in toks]
    perf = list(np.cumsum([0] + [rng.choice([0.25, 0.5, 0.75]) for _ in range(k - 1)])) if timed else None
    return make_seq(toks, perf)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4), st.integers(2, 50))
def test_contiguous_search_matches_sliding_window(seed, n, k):
    rng = random.Random(seed)
    seq, query = _random_seq(rng, k), _random_query(rng, n)
    got = [h.indices for h in search_piece(seq, query, SkipSpec.none())]
    expected = [tuple(range(s, s + n)) for s in range(k - n + 1)
                if any(_naive_alt_match(seq, alt, tuple(range(s, s + n)))
                       for alt in query.alternatives)]
    assert got == expected


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4), st.integers(2, 12),
       st.sampled_from(["fixed:1", "fixed:3", "ioi:0.5", "ioi:1.25"]))
def test_skip_search_matches_brute_force(seed, n, k, skip_text):
    rng = random.Random(seed)
    seq, query = _random_seq(rng, k), _random_query(rng, n)
    skip = SkipSpec.parse(skip_text)
    perf = list(seq.perf)
    expected = [idx for idx in brute_force(k, n, skip, perf)
                if any(_naive_alt_match(seq, alt, idx) for alt in query.alternatives)]
    hits = search_piece(seq, query, skip)
    assert [h.indices for h in hits] == expected
    assert all(token_matches(seq, h, query) for h in hits)
    assert all(h.grams == tuple(seq.tokens[j] for j in h.indices) for h in hits)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_matches_grow_with_skip(seed):
    rng = random.Random(seed)
    seq, query = _random_seq(rng, 30), _random_query(rng, 3)
    for ladder in (["none", "fixed:1", "fixed:2", "fixed:4"], ["ioi:0.25", "ioi:0.5", "ioi:1.5"]):
        sets = [{h.indices for h in search_piece(seq, query, SkipSpec.parse(s))} for s in ladder]
        assert all(a <= b for a, b in zip(sets, sets[1:]))


def test_variable_needs_timing():
    from vltskip.vlt import MissingTimingError
    seq = make_seq(CADENCE.split())
    with pytest.raises(MissingTimingError):
        search_piece(seq, compile_query("cad", [CADENCE]), SkipSpec.variable(1.0))


def test_vlt_slot():
    v = parse_vlt("4,7,10;2")
    assert vlt_slot(v) == Slot((4, 7, 10), 0, 2)
    assert vlt_slot(v, first=True).i is None


# --- corpus counts -------------------------------------------------------------

def test_piece_counts():
    rng = random.Random(1)
    query = compile_query("cad", [CADENCE])
    seqs = []
    for j in range(10):
        body = [Vlt(FILLER_S, rng.randrange(12)) for _ in range(12)]
        if j < 3:
            body[4:8] = [parse_vlt(t.replace(";_", ";0")) for t in CADENCE.split()]
        elif j < 6:
            body[2:9] = with_fillers(CADENCE.split())
        seqs.append(make_seq(body, piece_id=f"p{j}"))
    skips = [SkipSpec.none()] + [SkipSpec.fixed(t) for t in (1, 2, 3, 4)]
    rows = corpus_piece_counts(seqs, query, skips)
    assert [r.pieces for r in rows] == [3, 3, 3, 6, 6]
    assert [r.skip for r in rows] == skips
    assert all(a.matches <= b.matches for a, b in zip(rows, rows[1:]))


def test_piece_counts_absent_query():
    seqs = [make_seq([Vlt(FILLER_S, 0)] * 8, piece_id=f"p{j}") for j in range(3)]
    rows = corpus_piece_counts(seqs, compile_query("cad", [CADENCE]),
                               [SkipSpec.none(), SkipSpec.fixed(4)])
    assert [(r.pieces, r.matches) for r in rows] == [(0, 0), (0, 0)]
