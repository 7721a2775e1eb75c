"""Acceptance gate: every criterion at its stated tolerance, one line each."""

import pytest

from sepclt.acceptance import CHECKS, VerifyOptions, run_all


@pytest.fixture(scope="module")
def results():
    res = run_all(VerifyOptions())
    print()
    for r in res:
        print(r.line())
    return {key: r for (key, _, _), r in zip(CHECKS, res)}


@pytest.mark.parametrize("key", [k for k, _, _ in CHECKS])
def test_criterion(results, key, capsys):
    r = results[key]
    with capsys.disabled():
        print(f"\n{'PASS' if r.passed else 'FAIL'} {r.name}: {r.got}")
    assert r.passed, r.line()
