"""Seeded synthetic corpora for tests, demos and benchmarks.

Chords come from a Markov chain over (interval set, bass step) states whose
transition rows follow a Zipf law. Between structural chords the generator
may insert ornamental chords that keep the bass and nudge one upper voice by
a step, imitating passing and neighbour tones. Every chord is written out as
note events, so the data run through the full expand/encode pipeline.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .corpus import Corpus, NoteEvent, Piece

STRUCTURAL_BEATS = Fraction(1, 2)
ORNAMENT_BEATS = Fraction(1, 4)


def zipf_markov_source(n_states=30, exponent=1.5, seed=0):
    """Random states and a row-stochastic Zipf transition matrix."""
    rng = np.random.default_rng(seed)
    states = set()
    while len(states) < n_states:
        size = rng.integers(2, 4)
        s = tuple(sorted(rng.choice(np.arange(1, 12), size=size, replace=False).tolist()))
        states.add((s, int(rng.integers(0, 12))))
    states = sorted(states)
    weights = 1.0 / np.arange(1, n_states + 1) ** exponent
    weights /= weights.sum()
    trans = np.empty((n_states, n_states))
    for row in range(n_states):
        trans[row, rng.permutation(n_states)] = weights
    return states, trans


def _ornament(s, rng):
    s = list(s)
    j = rng.integers(len(s))
    for _ in range(8):
        moved = s[j] + int(rng.choice([-2, -1, 1, 2]))
        if 1 <= moved <= 11 and moved not in s:
            s[j] = moved
            break
    return tuple(sorted(s))


def _chord_pitches(bass, s, rng, doubling_rate):
    pitches = {bass} | {bass + 12 + c for c in s}
    if rng.random() < doubling_rate:
        pitches.add(bass + 24)
    return pitches


def synthetic_piece(piece_id, composer, n_chords, states, trans, rng, *,
                    ornament_rate=0.3, oversized_rate=0.0, doubling_rate=0.2,
                    mean_ioi=0.25, timed=True) -> Piece:
    notes = []
    onset = Fraction(0)
    perf = 0.0
    bass = int(rng.integers(40, 52))
    state = int(rng.integers(len(states)))
    emitted = 0
    ornament_next = False
    base_s = states[state][0]
    while emitted < n_chords:
        if ornament_next:
            s, beats = _ornament(base_s, rng), ORNAMENT_BEATS
        else:
            state = int(rng.choice(len(states), p=trans[state])) if emitted else state
            base_s, step = states[state]
            if emitted:
                bass += step if bass + step <= 59 else step - 12
            s, beats = base_s, STRUCTURAL_BEATS
        if len(s) == 3 and rng.random() < oversized_rate:
            extra = [c for c in range(1, 12) if c not in s]
            s = tuple(sorted(s + (int(rng.choice(extra)),)))
        for p in sorted(_chord_pitches(bass, s, rng, doubling_rate)):
            notes.append(NoteEvent(onset, beats, p, perf if timed else None))
        emitted += 1
        onset += beats
        perf += float(mean_ioi * rng.gamma(4.0) / 4.0)
        ornament_next = not ornament_next and rng.random() < ornament_rate
    return Piece(piece_id, composer, tuple(notes))


def synthetic_corpus(n_pieces=40, chords_per_piece=500, n_composers=4, seed=0, *,
                     length_jitter=0.1, n_states=30, exponent=1.5, **piece_kw) -> Corpus:
    """A corpus of ``n_pieces`` pieces spread round-robin over composers."""
    states, trans = zipf_markov_source(n_states, exponent, seed)
    rng = np.random.default_rng([seed, 1])
    pieces = []
    for j in range(n_pieces):
        k = int(round(chords_per_piece * (1 + length_jitter * rng.uniform(-1, 1))))
        pieces.append(synthetic_piece(f"s{j:03d}", f"composer{j % n_composers}", max(k, 1),
                                      states, trans, rng, **piece_kw))
    return Corpus(tuple(pieces), f"synthetic-{seed}")


def transpose_corpus(corpus: Corpus, semitones: int) -> Corpus:
    return Corpus(tuple(
        Piece(p.piece_id, p.composer, tuple(
            NoteEvent(n.onset_score, n.duration_score, n.pitch + semitones, n.onset_perf, n.voice)
            for n in p.notes))
        for p in corpus), corpus.name)
