"""End-to-end acceptance gate.

One test per criterion group; each prints the per-criterion PASS/FAIL lines
produced by the harness and fails if any criterion in the group fails.  The
same report is available from the command line via ``flocklab accept all``.
A shared lab instance caches simulation runs across groups, so the whole
gate completes in a few minutes.
"""

import pytest

from flocklab.harness import AcceptanceLab, run_acceptance

CRITERIA = [
    "identities",
    "two-agent",
    "misalignment",
    "torus-decay",
    "singular-collision",
    "euclid-fat-tail",
    "lyapunov",
    "good-set",
    "consistency",
]


@pytest.fixture(scope="module")
def lab():
    return AcceptanceLab()


@pytest.mark.parametrize("suite", CRITERIA)
def test_acceptance(suite, lab):
    report = run_acceptance(suite, lab)
    for line in report.lines():
        print(line)
    failed = [r.line() for r in report.results if not r.passed]
    assert report.passed, "criteria failed:\n" + "\n".join(failed)
