"""Command-line pipeline: validate, expand, encode, ngrams, curve, coverage, search, bench.

Exit codes: 0 success, 1 usage error, 2 data error, 3 constraint failure.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import logging
import sys
import time
from pathlib import Path

from .corpus import ParseError, read_corpus, validate_corpus
from .expansion import expand_corpus, write_slice_csv
from .pattern import corpus_piece_counts, parse_query_file
from .pipeline import encode_notes, load_sequences, read_strata
from .skipgram import SkipSpec, build_distribution, index_tuples, iter_ngrams, pack_keys
from .stats import FoldSearchError, cumulative_curve, make_folds, run_coverage_study
from .vlt import MissingTimingError, write_token_csv

log = logging.getLogger("vltskip")

EXIT_USAGE, EXIT_DATA, EXIT_CONSTRAINT = 1, 2, 3


class UsageError(Exception):
    pass


class ConstraintError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _skip_arg(text):
    try:
        return SkipSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _skip_list(text):
    return [_skip_arg(part) for part in text.split(",") if part.strip()]


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


@contextlib.contextmanager
def _output(path):
    """Write to ``path`` only once everything succeeded; stdout when ``path`` is None."""
    buf = io.StringIO()
    yield buf
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        Path(path).write_text(buf.getvalue(), encoding="utf-8")


def cmd_validate(args):
    corpus = read_corpus(args.inputs)
    report = validate_corpus(corpus, args.n)
    with _output(args.output) as out:
        for line in report.lines():
            out.write(line + "\n")
    return 0


def cmd_expand(args):
    corpus = read_corpus(args.inputs)
    with _output(args.output) as out:
        write_slice_csv(expand_corpus(corpus), out)
    return 0


def cmd_encode(args):
    sequences, _ = load_sequences(args.inputs)
    replaced = sum(len(s.replaced) for s in sequences)
    log.info("encoded %d pieces, %d chords, %d oversized chords replaced",
             len(sequences), sum(len(s) for s in sequences), replaced)
    with _output(args.output) as out:
        write_token_csv(sequences, out)
    return 0


def _write_distribution(dist, out):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["type", "count"])
    for key, count in dist.ranked():
        writer.writerow([" ".join(key), count])


def cmd_ngrams(args):
    sequences, _ = load_sequences(args.inputs)
    dist = build_distribution(sequences, args.n, args.skip, threads=args.threads,
                              keep_entry=args.keep_entry_interval)
    with _output(args.output) as out:
        _write_distribution(dist, out)
    print(f"types={dist.n_types} tokens={dist.total_tokens}", file=sys.stderr)
    return 0


def _read_distribution_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["type", "count"]:
            raise ParseError("distribution CSV header must be type,count", 1, str(path))
        counts = {}
        for row in reader:
            if row:
                try:
                    counts[tuple(row[0].split(" "))] = int(row[1])
                except (IndexError, ValueError):
                    raise ParseError(f"bad row {row!r}", reader.line_num, str(path)) from None
    return counts


def cmd_curve(args):
    if len(args.inputs) == 1 and Path(args.inputs[0]).suffix == ".csv" and \
            _is_distribution(args.inputs[0]):
        counts = _read_distribution_csv(args.inputs[0])
    else:
        sequences, _ = load_sequences(args.inputs)
        counts = build_distribution(sequences, args.n, args.skip, threads=args.threads)
    curve = cumulative_curve(counts)
    with _output(args.output) as out:
        out.write("rank,cumprob\n")
        for rank, prob in curve.points:
            out.write(f"{rank},{prob!r}\n")
    print(f"types={len(curve.points)} singleton_rank={curve.singleton_rank}", file=sys.stderr)
    return 0


def _is_distribution(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.readline().strip() == "type,count"
    except (OSError, UnicodeDecodeError):
        return False


def cmd_coverage(args):
    sequences, strata = load_sequences(args.inputs)
    if args.strata:
        strata.update(read_strata(args.strata))
    try:
        folds = make_folds(sequences, args.folds, args.tolerance, args.seed, strata)
    except FoldSearchError as exc:
        raise ConstraintError(str(exc)) from None
    study = run_coverage_study(sequences, folds, args.n, args.skips, args.unit, args.alpha,
                               threads=args.threads)
    header = f"# seed={args.seed} n={args.n} unit={args.unit} folds={args.folds} " \
             f"tolerance={args.tolerance:g} alpha={args.alpha:g}\n"
    per_fold = io.StringIO()
    per_fold.write(header)
    per_fold.write("fold,skip,coverage\n")
    for skip, result in study.results.items():
        for f, value in enumerate(result.per_fold):
            per_fold.write(f"{f},{skip.label},{value!r}\n")
    comparisons = io.StringIO()
    comparisons.write(header)
    comparisons.write("skip,mean,t,p,df,criterion\n")
    for skip, result in study.results.items():
        row = study.comparisons.get(skip)
        if row is None:
            comparisons.write(f"{skip.label},{result.mean!r},,,,\n")
        else:
            comparisons.write(f"{skip.label},{result.mean!r},{row.t_stat!r},{row.p_raw!r},"
                              f"{row.df!r},{row.p_adjusted_criterion!r}\n")
    if args.output is None:
        sys.stdout.write(per_fold.getvalue() + "\n" + comparisons.getvalue())
    else:
        Path(f"{args.output}_folds.csv").write_text(per_fold.getvalue(), encoding="utf-8")
        Path(f"{args.output}_comparisons.csv").write_text(comparisons.getvalue(),
                                                          encoding="utf-8")
    return 0


def cmd_search(args):
    sequences, _ = load_sequences(args.inputs)
    try:
        queries = parse_query_file(Path(args.query).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise ParseError(str(exc), None, args.query) from None
    skips = [SkipSpec.none()] + [s for s in args.skips if s.mode != "none"]
    with _output(args.output) as out:
        out.write("query,skip,pieces,matches\n")
        for query in queries:
            for row in corpus_piece_counts(sequences, query, skips, args.surface_i):
                out.write(f"{query.name},{row.skip.label},{row.pieces},{row.matches}\n")
    return 0


def run_bench(chords=1000, n=4, t=4, ioi=2.0, mean_ioi=0.25, seed=0, repeats=3):
    """Time retrieval of every n-gram token from one synthetic sequence.

    Both the array route and the streaming generator are timed; each result
    is ``(skip, route, tokens, best_seconds, gate_seconds)``.
    """
    from .synth import synthetic_corpus
    corpus = synthetic_corpus(1, chords, 1, seed, length_jitter=0.0, mean_ioi=mean_ioi)
    seq = encode_notes(corpus)[0]

    def array_route(skip):
        return len(pack_keys(seq, index_tuples(seq, n, skip)))

    def stream_route(skip):
        return sum(1 for _ in iter_ngrams(seq, n, skip))

    results = []
    for skip, gate in ((SkipSpec.fixed(t), 1.0), (SkipSpec.variable(ioi), 30.0)):
        for route, func in (("array", array_route), ("stream", stream_route)):
            best = float("inf")
            for _ in range(repeats):
                start = time.perf_counter()
                tokens = func(skip)
                best = min(best, time.perf_counter() - start)
            results.append((skip, route, tokens, best, gate))
    return seq, results


def cmd_bench(args):
    seq, results = run_bench(args.chords, args.n, args.t, args.ioi, args.mean_ioi, args.seed,
                             args.repeats)
    span = seq.onsets_perf[-1] - seq.onsets_perf[0]
    print(f"sequence: {len(seq)} chords, mean IOI {span / (len(seq) - 1):.3f} s")
    failed = False
    for skip, route, tokens, seconds, gate in results:
        ok = seconds <= gate
        failed |= not ok
        print(f"{skip.label} {route}: {tokens} {args.n}-gram tokens in {seconds * 1000:.1f} ms "
              f"(gate {gate:g} s) {'PASS' if ok else 'FAIL'}")
    if failed:
        raise ConstraintError("benchmark exceeded a runtime gate")
    return 0


def build_parser():
    parser = _Parser(prog="vltskip", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log one line per stage")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_text, inputs=True):
        p = sub.add_parser(name, help=help_text)
        if inputs:
            p.add_argument("inputs", nargs="+", help="input files")
        p.add_argument("-o", "--output", help="output path (default stdout)")
        p.add_argument("--threads", type=_positive_int, default=None,
                       help="worker threads (default: $VLTSKIP_THREADS or all cores)")
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "report timing gaps, short pieces and strata")
    p.add_argument("--n", type=_positive_int, default=None)
    add("expand", cmd_expand, "notes -> slice CSV")
    add("encode", cmd_encode, "notes or slices -> VLT token CSV")
    for name, func, help_text in (("ngrams", cmd_ngrams, "n-gram distribution CSV"),
                                  ("curve", cmd_curve, "cumulative rank/probability CSV")):
        p = add(name, func, help_text)
        p.add_argument("--n", type=_positive_int, required=(name == "ngrams"), default=None)
        p.add_argument("--skip", type=_skip_arg, default=SkipSpec.none())
        if name == "ngrams":
            p.add_argument("--keep-entry-interval", action="store_true",
                           help="keep the first chord's bass interval in the type")
    p = add("coverage", cmd_coverage, "cross-validated coverage and planned comparisons")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--skips", type=_skip_list, default=[])
    p.add_argument("--folds", type=_positive_int, default=10)
    p.add_argument("--unit", choices=("tokens", "types"), default="tokens")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tolerance", type=float, default=0.01)
    p.add_argument("--strata", help="piece_id,composer CSV overriding input composers")
    p = add("search", cmd_search, "count pieces containing query progressions")
    p.add_argument("--query", required=True)
    p.add_argument("--skips", type=_skip_list, default=[])
    p.add_argument("--surface-i", action="store_true",
                   help="match bass intervals as written on each token")
    p = add("bench", cmd_bench, "time 4-gram retrieval on a synthetic sequence", inputs=False)
    p.add_argument("--chords", type=_positive_int, default=1000)
    p.add_argument("--n", type=_positive_int, default=4)
    p.add_argument("--t", type=_positive_int, default=4)
    p.add_argument("--ioi", type=float, default=2.0)
    p.add_argument("--mean-ioi", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=_positive_int, default=3)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "curve" and args.n is None and not (
                len(args.inputs) == 1 and args.inputs[0].endswith(".csv")
                and _is_distribution(args.inputs[0])):
            raise UsageError("curve: --n is required unless the input is a distribution CSV")
        if args.command == "coverage" and args.tolerance <= 0:
            raise UsageError("coverage: --tolerance must be positive")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConstraintError as exc:
        print(f"vltskip {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (ParseError, MissingTimingError, ValueError, OSError) as exc:
        print(f"vltskip {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
