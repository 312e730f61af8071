import time

import pytest

from pegtrace.diameters import find_diameters
from pegtrace.generate import corpus
from pegtrace.tracer import TraceConfig, trace_all

CORPUS_SIZE = 100

# criterion number -> (passed, detail); filled by test_acceptance and printed at the end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


class TracedCorpus(list):
    seconds = 0.0


class Traced:
    def __init__(self, poly, rep, comps):
        self.poly, self.rep, self.comps = poly, rep, comps


@pytest.fixture(scope="session")
def traced_corpus():
    t = time.perf_counter()
    cfg = TraceConfig()
    out = TracedCorpus()
    for poly in corpus(CORPUS_SIZE):
        rep = find_diameters(poly)
        out.append(Traced(poly, rep, trace_all(poly, cfg, rep)))
    out.seconds = time.perf_counter() - t
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
