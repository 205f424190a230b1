import csv
import io

import numpy as np
import pytest

from robust_vlc.experiments import (AGG_FIELDS, FIGURES, SweepConfig, TrialRecord, aggregate,
                                    emit_outputs, parse_trials, run_sweep, run_trial, table1,
                                    trials_csv)


@pytest.fixture(scope="module")
def cfg(dynamic_range):
    return SweepConfig(k_values=(2, 3), b_values=(4, 8), trials=3, seed=42,
                       dynamic_range=dynamic_range)


@pytest.fixture(scope="module")
def small_sweep(cfg):
    return run_sweep(cfg, workers=1)


def test_trial_is_deterministic(cfg):
    assert run_trial(cfg, 3, 8, 1) == run_trial(cfg, 3, 8, 1)
    assert run_trial(cfg, 3, 8, 1) != run_trial(cfg, 3, 8, 2)


def test_cells_of_a_trial_share_users(cfg):
    _, a = run_trial(cfg, 2, 4, 0, keep_detail=True)
    _, b = run_trial(cfg, 3, 16, 0, keep_detail=True)
    np.testing.assert_array_equal(a.H, b.H[:2])


def test_record_fields_follow_status(small_sweep):
    for r in small_sweep.records:
        for name in ("robust", "nonrobust"):
            feasible = getattr(r, f"{name}_feasible")
            assert feasible == (getattr(r, f"{name}_status") == "Optimal")
            assert (getattr(r, f"{name}_v") is not None) == feasible
            assert (getattr(r, f"{name}_worst_corner_snir_db") is not None) == feasible


def test_records_sorted_and_complete(cfg, small_sweep):
    keys = [(r.k, r.b, r.trial) for r in small_sweep.records]
    assert keys == sorted(keys)
    assert len(keys) == len(cfg.k_values) * len(cfg.b_values) * cfg.trials


def test_single_trial_aggregate_equals_record(cfg):
    rec = run_trial(cfg, 2, 8, 0)
    (row,) = aggregate([rec])
    assert row["trials"] == 1
    assert row["robust_feasible_pct"] == (100.0 if rec.robust_feasible else 0.0)
    assert row["robust_worst_corner_snir_db"] == rec.robust_worst_corner_snir_db
    assert row["nonrobust_actual_snir_db"] == rec.nonrobust_actual_worst_user_snir_db


def test_aggregates_recomputed_from_csv(small_sweep):
    # independent pass over the written CSV with the csv module only
    rows = list(csv.DictReader(io.StringIO(trials_csv(small_sweep.records))))
    for agg in small_sweep.aggregates:
        cell = [r for r in rows if int(r["k"]) == agg["k"] and int(r["b"]) == agg["b"]]
        for name in ("robust", "nonrobust"):
            feas = [r for r in cell if r[f"{name}_feasible"] == "1"]
            assert agg[f"{name}_feasible_pct"] == pytest.approx(100 * len(feas) / len(cell))
            vals = [float(r[f"{name}_actual_worst_user_snir_db"]) for r in feas]
            if vals:
                assert agg[f"{name}_actual_snir_db"] == pytest.approx(sum(vals) / len(vals), rel=1e-12)
            else:
                assert agg[f"{name}_actual_snir_db"] is None


def test_csv_round_trip(small_sweep):
    text = trials_csv(small_sweep.records)
    assert parse_trials(text) == small_sweep.records


def test_empty_records_give_header_only_files(tmp_path):
    emit_outputs([], [], tmp_path)
    for name in ["trials.csv", "aggregates.csv", "table1_summary.csv", *FIGURES]:
        lines = (tmp_path / name).read_text().splitlines()
        assert len(lines) == 1
    assert (tmp_path / "aggregates.csv").read_text().strip().split(",") == AGG_FIELDS


def test_outputs_written_atomically(tmp_path, small_sweep):
    paths = emit_outputs(small_sweep.records, small_sweep.aggregates, tmp_path)
    assert all(p.exists() for p in paths)
    assert not list(tmp_path.glob("*.partial*"))


def test_failed_write_leaves_no_partial(tmp_path, small_sweep):
    target = tmp_path / "out"
    target.mkdir()
    (target / "trials.csv").mkdir()    # a directory blocks the rename
    with pytest.raises(OSError):
        emit_outputs(small_sweep.records, small_sweep.aggregates, target)
    assert not list(target.glob("*.partial*"))


def test_table1_uses_largest_feasible_k():
    def rec(k, trial, feasible, snir):
        nr = None if snir is None else snir - 1
        return TrialRecord(k, 8, trial, "Optimal" if feasible else "Infeasible", feasible,
                           1.0 if feasible else None, 10, snir, snir, "Optimal", True, 1.0, 10,
                           nr, nr)
    records = [rec(2, 0, True, 16.0), rec(3, 0, True, 15.0), rec(4, 0, False, None),
               rec(2, 1, True, 17.0), rec(3, 1, False, None)]
    (row,) = table1(records)
    assert row["trials"] == 2
    assert row["mean_k"] == 2.5
    assert row["robust_actual_snir_db"] == pytest.approx(16.0)
    assert row["nonrobust_actual_snir_db"] == pytest.approx(15.0)


def test_parallel_matches_serial(cfg, small_sweep):
    par = run_sweep(cfg, workers=2)
    assert trials_csv(par.records) == trials_csv(small_sweep.records)


def test_fine_quantization_makes_designs_agree(dynamic_range):
    # with 30 bits the regions are nearly points (except the floor cell of
    # blocked links), so both designs deliver the same SNIR
    cfg = SweepConfig(k_values=(2,), b_values=(30,), trials=1, seed=3, dynamic_range=dynamic_range)
    for t in range(4):
        r = run_trial(cfg, 2, 30, t)
        if r.robust_feasible:
            assert r.nonrobust_feasible
            assert abs(r.robust_actual_worst_user_snir_db
                       - r.nonrobust_actual_worst_user_snir_db) < 0.1
            assert r.nonrobust_v <= r.robust_v * (1 + 1e-7)


def test_robust_snir_at_sixteen_bits_near_target(dynamic_range):
    cfg = SweepConfig(k_values=(2,), b_values=(16,), trials=5, seed=0, dynamic_range=dynamic_range)
    res = run_sweep(cfg, workers=1)
    vals = [r.robust_actual_worst_user_snir_db for r in res.records if r.robust_feasible]
    assert vals
    assert 15.0 - 1e-6 <= min(vals) and max(vals) <= 15.5


def test_config_validation(dynamic_range):
    with pytest.raises(ValueError):
        SweepConfig(k_values=(), dynamic_range=dynamic_range)
    with pytest.raises(ValueError):
        SweepConfig(trials=0, dynamic_range=dynamic_range)
    with pytest.raises(ValueError):
        SweepConfig()
