from __future__ import annotations

import json
import math

import jsonschema
import numpy as np
import pytest

from bergman_growth import (ApproachRegion, SweepSpec, Thresholds, VerdictPolicy, ZChoice,
                            derive_constants, lambda_witness, run_sweep)
from bergman_growth.errors import ConfigError
from bergman_growth.sweep import (CSV_COLUMNS, SweepRow, assess, read_rows, summary_schema,
                                  write_csv, write_json)

OPEN = Thresholds(log_H_Nalpha=0.0, log_R_cmp=0.0, log_H0=0.0, binding={})


@pytest.fixture(scope="module")
def eb2_setup(eb2):
    return eb2, derive_constants(lambda_witness(eb2), eb2)


@pytest.fixture(scope="module")
def small_spec():
    return SweepSpec(ApproachRegion(1.0, 2), 1e-6, 1e-3, 4,
                     (ZChoice("origin"), ZChoice("probe"), ZChoice("fraction_of_region", 0.5)))


def test_power_ladder_rho_is_constant(quad):
    c = derive_constants(lambda_witness(quad), quad)
    spec = SweepSpec(ApproachRegion(1.0, 1), 1e-4, 0.5, 6, (ZChoice("origin"),))
    rep = run_sweep(quad, c, spec, thresholds=OPEN)
    for row in rep.rows:
        assert row.rho == pytest.approx(1 / (2 * math.pi ** 2), rel=1e-7)
    assert abs(rep.summary["slope"]) < 1e-7
    assert rep.verdicts["rho_ratio"]["status"] == "pass"
    assert rep.verdicts["rho_slope"]["status"] == "pass"


def test_z_choices(eb2):
    reg = ApproachRegion(1.0, 2)
    t = 1e-4
    assert ZChoice("origin").abs_z(eb2, reg, t) == 0.0
    assert ZChoice("fraction_of_region", 0.5).abs_z(eb2, reg, t) == pytest.approx(0.005)
    assert ZChoice("fraction_of_finv", 0.5).abs_z(eb2, reg, t) == pytest.approx(0.5 * eb2.inv(math.log(t)))
    assert ZChoice("probe").abs_z(eb2, reg, t) == pytest.approx(eb2.inv(math.log(t / 2)))
    assert ZChoice.parse(0.25) == ZChoice("explicit", 0.25)
    assert ZChoice.parse("fraction_of_finv:0.3") == ZChoice("fraction_of_finv", 0.3)


@pytest.mark.parametrize("bad", ["nowhere", "fraction_of_finv:1.5", "fraction_of_region:x", -1.0, None])
def test_z_choice_errors(bad):
    with pytest.raises(ConfigError):
        ZChoice.parse(bad)


@pytest.mark.parametrize("kw", [dict(t_min=1e-3, t_max=1e-4), dict(count=3), dict(precision="quad"),
                                dict(z_policy=())])
def test_spec_validation(kw):
    args = dict(region=ApproachRegion(1.0, 1), t_min=1e-6, t_max=1e-3, count=5)
    args.update(kw)
    with pytest.raises(ConfigError):
        SweepSpec(**args)


def test_threshold_enforced(eb2_setup):
    prof, c = eb2_setup
    spec = SweepSpec(ApproachRegion(1.0, 1), 1e-6, 1e-2, 4)
    with pytest.raises(ConfigError):
        run_sweep(prof, c, spec)


@pytest.fixture(scope="module")
def small_report(eb2_setup, small_spec):
    prof, c = eb2_setup
    return run_sweep(prof, c, small_spec, seed=4)


def test_rows_sorted_and_flagged(small_report):
    rep = small_report
    keys = [(r.t, r.abs_z) for r in rep.rows]
    assert keys == sorted(keys)
    assert len(rep.rows) == 12
    for r in rep.rows:
        assert r.in_region == (r.z_kind != "probe")
        assert r.converged and r.flags == ()
    assert rep.exit_code == 0


def test_csv_bit_stable_and_parallel(eb2_setup, small_spec, small_report, tmp_path):
    prof, c = eb2_setup
    a = write_csv(small_report, tmp_path / "a.csv").read_bytes()
    b = write_csv(run_sweep(prof, c, small_spec, jobs=2), tmp_path / "b.csv").read_bytes()
    assert a == b
    rows = read_rows(tmp_path / "a.csv")
    assert tuple(rows[0]) == CSV_COLUMNS
    assert all(float(r["rho"]) > 0 for r in rows)


def test_json_validates(small_report, tmp_path):
    path = write_json(small_report, tmp_path / "s.json")
    doc = json.loads(path.read_text())
    jsonschema.validate(doc, summary_schema())
    assert doc["seed"] == 4
    assert doc["policy"]["ratio_cap"] == 10.0


def _row(t, lk, az=0.0, kind="origin", inside=True):
    le = -2 * math.log(t)
    return SweepRow(t, az, kind, lk, 1e-9, le, le + 1.0, inside, True)


def test_assess_exit_codes():
    pol = VerdictPolicy()
    good = [_row(t, -2 * math.log(t)) for t in (1e-6, 1e-5, 1e-4)]
    assert assess(good, pol)[2] == 0
    over = good + [_row(1e-3, -2 * math.log(1e-3) + 2.0)]
    _, v, code = assess(over, pol)
    assert v["upper_bound"]["status"] == "fail" and code == 1
    drift = [_row(t, -2.5 * math.log(t)) for t in (1e-6, 1e-5, 1e-4)]
    _, v, code = assess(drift, pol)
    assert v["rho_slope"]["status"] == "fail" and code == 1
    bad = good + [_row(1e-3, math.nan)]
    assert assess(bad, pol)[2] == 2


def test_assess_probe_floor():
    pol = VerdictPolicy()
    rows = [_row(t, -2 * math.log(t)) for t in (1e-6, 1e-5)]
    rows.append(_row(1e-5, -2 * math.log(1e-5) - 6.0, az=0.1, kind="probe", inside=False))
    _, v, code = assess(rows, pol)
    assert v["probe_floor"]["status"] == "fail" and code == 1
    rows[-1] = _row(1e-5, -2 * math.log(1e-5) + 6.0, az=0.1, kind="probe", inside=False)
    _, v, code = assess(rows, pol)
    assert v["probe_floor"]["status"] == "pass" and code == 0


def test_assess_skips_without_rows():
    _, v, code = assess([], VerdictPolicy())
    assert all(x["status"] == "skipped" for x in v.values())
    assert code == 0
