import itertools

import pytest

from vltskip.skipgram import SkipSpec
from vltskip.vlt import Vlt, VltSequence

_acceptance = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "acceptance", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _acceptance.get(marker)
        ok = report.outcome == "passed" and (prev is None or prev[0])
        _acceptance[marker] = (ok, report.nodeid)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        report.acceptance = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), (ok, _) in sorted(_acceptance.items()):
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}")


def make_seq(tokens, perf=None, piece_id="p"):
    """Build a VltSequence from Vlt objects or canonical strings.

    The first token's bass interval is forced to undefined; later undefined
    intervals default to 0.
    """
    from vltskip.vlt import parse_vlt
    out = []
    for j, tok in enumerate(tokens):
        if isinstance(tok, str):
            tok = parse_vlt(tok)
        if j == 0:
            tok = Vlt(tok.s, None)
        elif tok.i is None:
            tok = Vlt(tok.s, 0)
        out.append(tok)
    if perf is None:
        perf = [None] * len(out)
    return VltSequence(piece_id, tuple(out), tuple(perf))


def brute_force(k, n, skip: SkipSpec, perf=None):
    """Index tuples admitted by ``skip``, straight from all combinations."""
    out = []
    for idx in itertools.combinations(range(k), n):
        gaps = [b - a - 1 for a, b in zip(idx, idx[1:])]
        if skip.mode == "none" and any(gaps):
            continue
        if skip.mode == "fixed" and sum(gaps) > skip.t:
            continue
        if skip.mode == "variable" and any(perf[b] - perf[a] > skip.ioi
                                           for a, b in zip(idx, idx[1:])):
            continue
        out.append(idx)
    return out


ALPHABET = ["4,7,_;5", "3,8,_;2", "4,9,_;1", "4,7,10;7", "3,7,_;0", "5,9,_;2"]


@pytest.fixture
def letters():
    """Six distinct VLTs named A..F."""
    from vltskip.vlt import parse_vlt
    return dict(zip("ABCDEF", (parse_vlt(t) for t in ALPHABET)))
