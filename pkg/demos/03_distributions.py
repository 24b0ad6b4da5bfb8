"""
Sparsity of n-gram distributions
================================

Builds 1- to 4-gram distributions over a synthetic corpus, with and without
skips, and writes rank/cumulative-probability curves to CSV for plotting.
"""
import sys
from pathlib import Path

from vltskip import SkipSpec, build_distribution, cumulative_curve, encode_notes, synthetic_corpus

out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("curves")
out_dir.mkdir(exist_ok=True)

corpus = synthetic_corpus(n_pieces=40, chords_per_piece=500, seed=0)
sequences = encode_notes(corpus)
print(f"{len(sequences)} pieces, {sum(len(s) for s in sequences)} chords")
print()
print("  n  skip        types     tokens  singletons  top-20 mass")

for skip in (SkipSpec.none(), SkipSpec.fixed(4), SkipSpec.variable(2.0)):
    for n in (1, 2, 3, 4):
        if n == 1 and skip.mode != "none":
            continue
        dist = build_distribution(sequences, n, skip)
        curve = cumulative_curve(dist)
        singles = dist.n_types - curve.singleton_rank
        top20 = curve.points[min(19, len(curve.points) - 1)][1]
        print(f"{n:3d}  {skip.label:8s} {dist.n_types:8d} {dist.total_tokens:10d} "
              f"{singles:11d} {top20:12.3f}")
        path = out_dir / f"curve_n{n}_{skip.label.replace(':', '')}.csv"
        with open(path, "w") as fh:
            fh.write("rank,cumprob\n")
            fh.writelines(f"{r},{p!r}\n" for r, p in curve.points)

print()
print(f"curves written to {out_dir}/")
