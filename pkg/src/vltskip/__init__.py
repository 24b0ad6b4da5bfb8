"""Voice-leading-type chord sequences and skip-gram n-gram statistics."""
from .corpus import (Corpus, NoteEvent, ParseError, Piece, ValidationReport, parse_note_csv,
                     parse_note_jsonl, parse_smf, read_corpus, validate_corpus, write_note_csv)
from .expansion import Slice, full_expand, slice_onsets
from .pattern import PatternQuery, compile_query, corpus_piece_counts, parse_query_file, search_piece
from .pipeline import encode_notes, load_sequences
from .skipgram import (Distribution, NgramToken, SkipSpec, build_distribution, contiguous_ngrams,
                       count_fixed_closed_form, fixed_skip_ngrams, index_tuples,
                       variable_skip_ngrams)
from .stats import (CoverageResult, CumulativeCurve, FoldAssignment, coverage, coverage_by_fold,
                    cumulative_curve, make_folds, planned_comparisons, run_coverage_study,
                    welch_t)
from .synth import synthetic_corpus, transpose_corpus
from .vlt import (Vlt, VltSequence, encode_corpus, encode_piece, enumerate_s_domain, parse_vlt,
                  replace_oversized, vertical_intervals, vlt_to_string)

__version__ = "0.1.0"
