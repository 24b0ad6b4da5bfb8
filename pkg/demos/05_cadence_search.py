"""
Finding cadences hidden behind ornaments
========================================

Searches a synthetic corpus, into which a few cadences have been planted,
for the progressions in cadences.query. Planted cadences are decorated
with passing chords, so only skip-aware matching finds them.
"""
from pathlib import Path

import numpy as np

from vltskip import (SkipSpec, VltSequence, corpus_piece_counts, encode_notes,
                     parse_query_file, parse_vlt, synthetic_corpus)
from vltskip.vlt import Vlt

queries = parse_query_file((Path(__file__).parent / "cadences.query").read_text())
sequences = encode_notes(synthetic_corpus(n_pieces=20, chords_per_piece=200, seed=4))

# plant a major semplice cadence in pieces 0, 4, 8, ... and a minor composta
# in pieces 2, 6, 10, ..., with one passing chord between members
rng = np.random.default_rng(4)
cadences = {
    0: [parse_vlt(s) for s in ("3,8,_;0", "4,9,_;1", "4,7,10;2", "4,7,_;5")],
    2: [parse_vlt(s) for s in ("3,9,_;0", "5,8,_;2", "4,7,10;0", "3,7,_;5")],
}
planted = []
for j, seq in enumerate(sequences):
    cadence = cadences.get(j % 4)
    if cadence is None:
        planted.append(seq)
        continue
    tokens = list(seq.tokens)
    at = int(rng.integers(10, len(tokens) - 10))
    insert = [cadence[0]]
    for v in cadence[1:]:
        insert += [Vlt((2, 5, 9), 2), Vlt(v.s, (v.i - 2) % 12)]
    tokens[at:at + len(insert)] = insert
    planted.append(VltSequence(seq.piece_id, tuple(tokens), seq.onsets_perf))

skips = [SkipSpec.none()] + [SkipSpec.fixed(t) for t in (1, 2, 3, 4)] + \
    [SkipSpec.variable(x) for x in (0.5, 1.0, 1.5, 2.0)]
for query in queries:
    print(f"{query.name} ({len(query.alternatives)} alternatives)")
    for row in corpus_piece_counts(planted, query, skips):
        print(f"  {row.skip.label:8s} {row.pieces:3d} pieces {row.matches:5d} matches")
