"""Smoke test for the compiled bindings: pytest python/smoke_test.py"""
import json
import math
import random

import idstress_py as ids


def factors(n=300, d=3, seed=0):
    rng = random.Random(seed)
    return [[rng.gauss(0, 1) for _ in range(d)] for _ in range(n)]


def test_metric_names():
    assert "mcc_p" in ids.METRICS and "dci_d" in ids.METRICS


def test_scaled_permuted_copy_scores_one():
    z = factors()
    zhat = [[2.0 * r[2], -r[0], 0.5 * r[1]] for r in z]
    scores = dict(ids.evaluate(z, zhat, metrics=["mcc_p", "mcc_s"]))
    assert abs(scores["mcc_p"] - 1) < 1e-12
    assert abs(scores["mcc_s"] - 1) < 1e-12


def test_score_json_and_bad_metric():
    z = factors()
    rec = json.loads(ids.score_json(z, z, "mcc_p"))
    assert rec["metric"] == "mcc_p"
    try:
        ids.evaluate(z, z, metrics=["nope"])
    except ValueError as e:
        assert "nope" in str(e)
    else:
        raise AssertionError("unknown metric accepted")


def test_shape_mismatch_raises():
    z = factors(n=50)
    try:
        ids.evaluate(z, z[:40])
    except ValueError:
        return
    raise AssertionError("row mismatch accepted")


def test_oracles():
    assert abs(ids.null_mcc_floor(10, 100) - math.sqrt(2 * math.log(10) / 100)) < 1e-12
    assert ids.mcc_closed_form(0.999999, 1.0) > 0.999
    try:
        ids.mcc_closed_form(0.0, 0.0)
    except ValueError as e:
        assert "epsilon" in str(e)
    else:
        raise AssertionError("epsilon = 0 accepted")


def test_dataset_and_diagnose():
    cfg = json.loads(ids.preset_config("sanity"))
    cfg["grid"]["n"] = [200]
    z, zhat = ids.make_dataset(json.dumps(cfg), cell=0, seed=1)
    assert len(z) == len(zhat) == 200
    report = json.loads(ids.diagnose(z, zhat, null_seeds=2, as_json=True))
    assert any(c["id"] == "ratio" for c in report["checklist"])
    assert "ratio" in ids.diagnose(z, zhat, null_seeds=2)
