import json
import math

import numpy as np
import pytest

from hkbesov.report import Row, SuiteReport, dumps, merge_reports, rows_csv, to_jsonable


def _rep(suite="s", space="cycle:8"):
    rep = SuiteReport(suite=suite, space=space, exponents={"alpha1": 1.0})
    rep.add("a", "exact", 1.0, 2.0, True)
    rep.add("b", "bound", 3.0, 2.0, False, probe="eig1", point=0.5)
    rep.add("c", "empirical", 0.7, math.nan, True, slack=math.nan, note="fit")
    return rep


def test_default_slack_is_relative():
    rep = _rep()
    assert rep.rows[0].slack == pytest.approx(0.5)
    assert rep.rows[1].slack == pytest.approx(-0.5)


def test_failure_views():
    rep = _rep()
    assert [r.check for r in rep.failures] == ["b"]
    assert rep.exact_failures == []
    assert not rep.passed


def test_unknown_tier_rejected():
    with pytest.raises(ValueError):
        Row("x", "loose", 0, 0, 0, True)


def test_round_trip_through_json():
    rep = _rep()
    d = json.loads(dumps(rep.to_dict()))
    assert d["summary"] == {"rows": 3, "failed": 1, "exact_failed": 0}
    back = SuiteReport.from_dict(d)
    assert math.isnan(back.rows[2].rhs)
    assert back.rows[1].probe == "eig1"


def test_canonical_dump_is_deterministic():
    a = dumps({"b": np.float64(1.0), "a": [np.int64(2), np.bool_(True)], "c": math.inf})
    b = dumps({"c": math.inf, "a": [2, True], "b": 1.0})
    assert a == b
    assert '"c": "inf"' in a


def test_to_jsonable_arrays():
    assert to_jsonable(np.array([1.0, math.nan])) == [1.0, "nan"]


def test_rows_csv():
    lines = rows_csv([_rep()]).splitlines()
    assert lines[0].split(",")[:4] == ["suite", "space", "check", "tier"]
    assert len(lines) == 4
    assert lines[2].split(",")[4] == "eig1"


def test_merge():
    a, b = _rep("x").to_dict(), _rep("y", "gasket:3").to_dict()
    m = merge_reports([a, b])
    assert m["summary"] == {"suites": 2, "failed": 2, "exact_failed": 0}
    again = merge_reports([m, a])
    assert again["summary"]["suites"] == 2
    assert set(m["reports"]) == {"cycle:8/x", "gasket:3/y"}
