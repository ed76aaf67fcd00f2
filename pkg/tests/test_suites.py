import json
import zlib

import numpy as np
import pytest

from hypkern import suites
from hypkern.numcore import psd_check
from hypkern.suites import SUITES, SuiteResult, _Recorder, report_dict, run_suite, run_suites, suite_seed


def test_all_suites_pass_default_seed():
    results = run_suites(seed=0)
    assert [r.name for r in results] == sorted(SUITES)
    assert all(r.passed for r in results), [r.failures for r in results if not r.passed]


def test_suite_seed_independent_of_order():
    a = np.random.default_rng(suite_seed(5, "trees")).random(4)
    b = np.random.default_rng(np.random.SeedSequence([5, zlib.crc32(b"trees")])).random(4)
    assert np.array_equal(a, b)


def test_reproducible_report():
    r1 = report_dict(run_suites(["kernels", "embed"], seed=11), 11, 1e-9, timing=False)
    r2 = report_dict(run_suites(["embed", "kernels"], seed=11), 11, 1e-9, timing=False)
    assert json.dumps(r1) == json.dumps(r2)


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suites(["nope"])


def test_exception_becomes_failure(monkeypatch):
    def boom(rec, rng, size, tol):
        rec.check(True, "fine")
        raise RuntimeError("kaput")
    monkeypatch.setitem(SUITES, "boom", (boom, 3))
    r = run_suite("boom", 0)
    assert not r.passed and r.checks >= 1
    assert "kaput" in r.failures[-1]["error"]


def test_recorder_marginal_and_escalation():
    r = SuiteResult("x", 1)
    rec = _Recorder(r)
    band = np.diag([1.0, -5e-9])
    assert rec.verdict(psd_check(band), "PSD", "marginal")
    assert len(r.marginal) == 1 and r.passed
    assert not rec.verdict(psd_check(np.diag([1.0, -1e-12]), tol=1e-30), "PSD", "tight")
    assert r.escalations == 1 and r.n_failures == 1
    assert not rec.verdict(psd_check(np.diag([1.0, -1.0])), "PSD", "real failure")
    assert r.escalations == 1 and r.n_failures == 2


def test_counterexamples_are_capped():
    r = SuiteResult("x", 1)
    rec = _Recorder(r)
    for i in range(20):
        rec.check(False, "always", i=np.int64(i), v=np.arange(2))
    assert r.n_failures == 20 and len(r.failures) == suites.MAX_COUNTEREXAMPLES
    json.dumps(r.to_dict())


def test_tight_tolerance_fails_with_escalations():
    res = run_suites(["trees"], seed=0, tol=1e-30)
    assert not res[0].passed and res[0].escalations > 0
