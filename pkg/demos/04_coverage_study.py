"""
Do skips help a model cover unseen music?
=========================================

Ten-fold cross-validation on a synthetic corpus: for each held-out fold,
what share of its contiguous n-gram tokens was seen in the other nine,
when training admits skips? Neighbouring skip levels are compared with
Welch t-tests.
"""
import numpy as np

from vltskip import SkipSpec, encode_notes, make_folds, run_coverage_study, synthetic_corpus

corpus = synthetic_corpus(n_pieces=40, chords_per_piece=500, seed=0)
sequences = encode_notes(corpus)

# folds are balanced by chord count and dealt evenly per composer
folds = make_folds(corpus, n_folds=10, seed=0)
print("chords per fold:", folds.fold_chord_totals)

skips = [SkipSpec.fixed(t) for t in (1, 2, 3, 4)] + \
    [SkipSpec.variable(x) for x in (0.5, 1.0, 1.5, 2.0)]

for n in (2, 3, 4):
    study = run_coverage_study(sequences, folds, n, skips)
    print()
    print(f"{n}-grams      mean     sd        t        p   significant")
    for skip, result in study.results.items():
        row = study.comparisons.get(skip)
        line = f"  {skip.label:8s} {result.mean:7.3f} {np.std(result.per_fold, ddof=1):6.3f}"
        if row is not None:
            line += f" {row.t_stat:8.2f} {row.p_raw:8.2g}   {'yes' if row.significant else 'no'}"
        print(line)
