"""Acceptance gate: every numbered verification criterion must hold.

Each criterion is computed once per session and reported as a single
pass/fail line on stdout, followed by a hard assertion.  Failures list
the offending checks with expected value, measured value, and deviation
so the report is actionable without rerunning anything.
"""
import pytest

from focksim import verify


@pytest.fixture(scope="module")
def results():
    return {r.number: r for r in verify.run()}


@pytest.mark.parametrize("number", sorted(n for n, _, _ in verify._REGISTRY))
def test_criterion(number, results, capsys):
    res = results[number]
    with capsys.disabled():
        print(verify.format_line(res))
    failing = [row for row in res.rows if not row.passed]
    detail = "; ".join(
        f"{row.name}: expected {row.expected!r}, measured {row.measured!r}, "
        f"deviation {row.deviation:.3e} (tol {row.tolerance:g}, {row.kind})"
        for row in failing
    )
    assert res.passed, f"criterion {number} failed: {detail}"
