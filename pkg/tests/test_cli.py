import json

import numpy as np
import pytest

from sinespikes import MixtureInstance
from sinespikes.cli import main, trial_seed


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


FIG1_SYNTH = {
    "n_sensors": 50,
    "n_snapshots": 5,
    "frequencies": [0.1, 0.4, 0.8],
    "s_per_snapshot": 3,
    "outlier_mode": "distinct-sensors-overall",
    "seed": 7,
}

SMALL_SYNTH = {
    "n_sensors": 32,
    "n_snapshots": 2,
    "frequencies": [0.15, 0.62],
    "s_per_snapshot": 2,
    "outlier_mode": "distinct-sensors-overall",
    "seed": 5,
}


def test_synth_writes_instance(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"synthesis": FIG1_SYNTH})
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    inst = MixtureInstance.load(tmp_path / "o" / "instance.json")
    assert inst.n_sensors == 50
    assert inst.outlier_rows.size == 15


def test_demix_small_instance(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"synthesis": SMALL_SYNTH})
    out = tmp_path / "o"
    assert main(["demix", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["estimated_frequencies"]) == 2
    assert np.abs(np.array(report["estimated_frequencies"])
                  - np.array(SMALL_SYNTH["frequencies"])).max() <= 1e-4
    assert len(report["estimated_outlier_rows"]) == 4
    for name in ("dual_poly_trace.csv", "row_norms.csv", "solver_diagnostics.csv"):
        assert (out / name).exists()
    header = (out / "dual_poly_trace.csv").read_text().splitlines()[0]
    assert header == "f,q_norm"
    header = (out / "row_norms.csv").read_text().splitlines()[0]
    assert header == "row,gamma_row_norm,lambda"


def test_demix_outputs_reproducible(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"synthesis": SMALL_SYNTH})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["demix", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["demix", "--config", cfg, "--out", str(out2)]) == 0
    for name in ("report.json", "dual_poly_trace.csv", "row_norms.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_demix_zero_instance(tmp_path):
    inst = MixtureInstance.from_components([0.3], np.zeros((1, 2)), np.zeros((16, 2)))
    inst.save(tmp_path / "zero.json")
    cfg = write_config(tmp_path / "c.json", {"instance": str(tmp_path / "zero.json")})
    out = tmp_path / "o"
    assert main(["demix", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["estimated_frequencies"] == []
    assert report["estimated_outlier_rows"] == []


def test_phase_transition_tiny_sweep(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "synthesis": {"n_sensors": 32},
        "phase_transition": {
            "f1": 0.2, "delta_start": 1.4, "delta_step": 0.1, "delta_stop": 1.5,
            "snapshot_counts": [2], "trials": 2, "total_outliers": 2,
        },
    })
    out = tmp_path / "o"
    assert main(["phase-transition", "--config", cfg, "--out", str(out), "--seed", "3"]) == 0
    agg = (out / "phase_transition.csv").read_text().splitlines()
    assert agg[0] == "L,delta_times_N,success_rate"
    assert len(agg) == 3  # two sweep points
    trials = (out / "trials.csv").read_text().splitlines()
    assert trials[0] == "seed,delta,L,success"
    assert len(trials) == 5
    # aggregate equals the mean of the per-trial flags
    flags = {}
    for line in trials[1:]:
        seed, delta, l, ok = line.split(",")
        flags.setdefault(delta, []).append(int(ok))
    for line in agg[1:]:
        l, dn, rate = line.split(",")
        delta = float(dn) / 32
        key = [k for k in flags if abs(float(k) - delta) < 1e-12][0]
        assert float(rate) == pytest.approx(np.mean(flags[key]))


def test_phase_transition_reproducible(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "synthesis": {"n_sensors": 32},
        "phase_transition": {
            "f1": 0.2, "delta_start": 1.5, "delta_step": 0.5, "delta_stop": 1.6,
            "snapshot_counts": [2], "trials": 1, "total_outliers": 2,
        },
    })
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["phase-transition", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["phase-transition", "--config", cfg, "--out", str(out2)]) == 0
    assert (out1 / "trials.csv").read_bytes() == (out2 / "trials.csv").read_bytes()


def test_trial_seed_is_stable():
    assert trial_seed(0, 5, 3, 11) == trial_seed(0, 5, 3, 11)
    seen = {trial_seed(0, L, d, t) for L in (1, 3, 5) for d in range(15) for t in range(5)}
    assert len(seen) == 3 * 15 * 5


def test_certificate_command(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "certificate": {"n_sensors": 61, "n_frequencies": 1, "separation": 0.0,
                        "n_outliers": 0, "n_snapshots": 2, "grid_size": 4096},
    })
    out = tmp_path / "o"
    assert main(["certificate", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "certificate_report.json").read_text())
    for key in ("interpolation_residual", "offgrid_max", "near_curvature_max",
                "outlier_row_margin", "condition_number_d", "pass"):
        assert key in report
    assert report["interpolation_residual"] <= 1e-8
    assert (out / "certificate_trace.csv").exists()


def test_certificate_seed_sweep(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "certificate": {"n_sensors": 61, "n_frequencies": 1, "separation": 0.0,
                        "n_outliers": 2, "n_snapshots": 2, "seeds": 3,
                        "grid_size": 4096},
    })
    out = tmp_path / "o"
    assert main(["certificate", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads((out / "certificate_summary.json").read_text())
    assert summary["seeds"] == 3
    assert 0.0 <= summary["pass_rate"] <= 1.0


def test_invalid_config_exit_code(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"synthesis": {"n_sensors": -3,
                                                           "n_snapshots": 1,
                                                           "frequencies": [0.1]}})
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "o")]) == 4


def test_missing_config_exit_code(tmp_path):
    assert main(["synth", "--config", str(tmp_path / "nope.json")]) == 3
