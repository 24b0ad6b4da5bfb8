import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from vltskip.expansion import Slice
from vltskip.vlt import (S_DOMAIN, Vlt, encode_corpus, encode_piece, enumerate_s_domain,
                         parse_vlt, replace_oversized, vertical_intervals, vlt_to_string)


def sl(*pitches, onset=0):
    return Slice(Fraction(onset), frozenset(pitches))


def test_major_triad_orderings_reduce_alike():
    # <4,7,0> and <7,4,0>: C-E-G-C and C-G-E'-C'
    assert vertical_intervals({48, 52, 55, 60}) == {4, 7}
    assert vertical_intervals({48, 55, 64, 72}) == {4, 7}


def test_repeated_classes_collapse():
    # <4,4,10> and <4,10,10>
    assert vertical_intervals({48, 52, 64, 58}) == {4, 10}
    assert vertical_intervals({48, 52, 58, 70}) == {4, 10}
    assert vertical_intervals({48, 52, 64, 58, 70}) == {4, 10}


def test_solo_bass_has_empty_s():
    assert vertical_intervals(sl(48)) == frozenset()


def test_s_domain():
    dom = enumerate_s_domain()
    assert len(dom) == 1 + 11 + 55 + 165 == 232
    assert () in dom and (4, 7) in dom
    assert all(0 not in s for s in dom)
    assert len(set(dom)) == len(dom)


def test_string_round_trip_examples():
    assert vlt_to_string(Vlt((4, 7), 7)) == "4,7,_;7"
    assert vlt_to_string(Vlt((4, 7))) == "4,7,_;_"
    assert parse_vlt("_,_,_;0") == Vlt((), 0)
    for s in S_DOMAIN:
        for i in [None] + list(range(12)):
            v = Vlt(s, i)
            assert parse_vlt(vlt_to_string(v)) == v
            assert Vlt.from_code(v.code) == v


@pytest.mark.parametrize("bad", ["7,4,_;0", "0,4,_;0", "4,12,_;0", "4,4,_;0", "4,_,7;0",
                                 "4,7;0", "4,7,_;12", "4,7,_", "4,7,x;1"])
def test_parse_rejects(bad):
    with pytest.raises(ValueError):
        parse_vlt(bad)


def test_replace_direct_context_hit():
    assert replace_oversized({2, 5, 8, 11}, {1: (2, 5, 8)}) == (2, 5, 8)


def test_replace_lexicographic_fallback():
    assert replace_oversized({1, 4, 7, 10}) == (1, 4, 7)


def test_replace_piece_tally():
    tally = {(4, 7, 11): 9, (2, 4, 7): 3}
    assert replace_oversized({2, 4, 7, 11}, {}, tally) == (4, 7, 11)


def test_replace_nearest_context_wins_and_earlier_breaks_ties():
    ctx = {-3: (2, 4, 7), 2: (4, 7, 11), -2: (2, 7, 11)}
    assert replace_oversized({2, 4, 7, 11}, ctx) == (2, 7, 11)
    ctx = {2: (4, 7, 11), -2: (2, 4, 11)}
    assert replace_oversized({2, 4, 7, 11}, ctx) == (2, 4, 11)


def test_replace_ignores_context_beyond_five():
    assert replace_oversized({2, 4, 7, 11}, {6: (4, 7, 11)}) == (2, 4, 7)


def test_replace_corpus_tally_after_piece_tally_misses():
    assert replace_oversized({2, 4, 7, 11}, {}, {(1, 2, 3): 4}, {(2, 7, 11): 1}) == (2, 7, 11)


def test_replace_tally_ties_go_lexicographic():
    tally = {(4, 7, 11): 2, (2, 4, 11): 2}
    assert replace_oversized({2, 4, 7, 11}, {}, tally) == (2, 4, 11)


@given(st.sets(st.integers(1, 11), min_size=4, max_size=11),
       st.dictionaries(st.integers(-7, 7), st.sets(st.integers(1, 11), max_size=3), max_size=6))
def test_replace_returns_subset(intervals, ctx):
    got = replace_oversized(intervals, ctx)
    assert len(got) == 3 and set(got) <= intervals


def test_encode_example():
    seq = encode_piece([sl(48, 52, 55, 60), sl(43, 50, 55, 59, onset=1), sl(48, 52, 55, onset=2)])
    assert [t.s for t in seq.tokens] == [(4, 7), (4, 7), (4, 7)]
    assert [t.i for t in seq.tokens] == [None, 7, 5]


def test_encode_single_and_repeated():
    assert encode_piece([sl(48, 52)]).tokens == (Vlt((4,), None),)
    seq = encode_piece([sl(48, 52), sl(48, 52, onset=1)])
    assert seq.tokens[1].i == 0


def test_encode_replaces_oversized_from_context():
    slices = [sl(48, 52, 55, 58), sl(48, 52, 55, 58, 62, onset=1), sl(48, 53, 57, onset=2)]
    seq = encode_piece(slices)
    assert seq.tokens[1].s == (4, 7, 10)
    assert seq.replaced == (1,)


def test_encode_corpus_uses_corpus_tally():
    # piece b has no usable context or tally, so it borrows piece a's favourite
    a = [sl(60, 62, 66, 69), sl(60, 62, 66, 69, onset=1)]  # {2,6,9}
    b = [sl(60, 62, 66, 69, 71)]  # {2,6,9,11}
    seqs = encode_corpus({"a": a, "b": b})
    assert seqs[1].tokens[0].s == (2, 6, 9)


def test_bass_classes_reconstruct_intervals():
    seq = encode_piece([sl(48), sl(55, onset=1), sl(50, onset=2), sl(61, onset=3)])
    basses = [48, 55, 50, 61]
    for a in range(4):
        for b in range(a + 1, 4):
            assert (seq.bass_classes[b] - seq.bass_classes[a]) % 12 == (basses[b] - basses[a]) % 12


def random_slices(rng, k):
    out = []
    for j in range(k):
        bass = rng.randint(36, 60)
        upper = {bass + rng.randint(0, 30) for _ in range(rng.randint(0, 5))}
        out.append(Slice(Fraction(j), frozenset({bass} | upper)))
    return out


def test_doubling_invariance():
    rng = random.Random(0)
    for s in random_slices(rng, 200):
        base = vertical_intervals(s)
        for p in s.pitches:
            for octave in (-24, -12, 12, 24):
                q = p + octave
                if q >= s.bass and 0 <= q <= 127:
                    assert vertical_intervals(set(s.pitches) | {q}) == base


def test_transposition_covariance_small():
    rng = random.Random(1)
    slices = random_slices(rng, 100)
    up = [Slice(s.onset_score, frozenset(p + 5 for p in s.pitches)) for s in slices]
    assert encode_piece(slices, "x") == encode_piece(up, "x")


def test_every_token_has_at_most_three_classes():
    rng = random.Random(2)
    seq = encode_piece(random_slices(rng, 300))
    assert all(len(t.s) <= 3 for t in seq.tokens)
    assert Counter(len(t.s) for t in seq.tokens)[3] > 0
