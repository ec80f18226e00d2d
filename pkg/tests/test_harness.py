import csv
import json

import numpy as np
import pytest

from online_bls.cli import main
from online_bls.datasets import SEAParams, StreamSpec, dataset_spec
from online_bls.errors import IncompatibleConfigs, PartialFailure
from online_bls.harness import (
    StepLog,
    TrialConfig,
    compare_models,
    derive_seed,
    format_table,
    load_report_dir,
    run_experiment,
    run_trial,
    trial_seeds,
)

SMALL = dict(n1=4, n2=3, n3=30, n4=1)


def sea_config(model="online-bls", n=600, **kw):
    stream = StreamSpec(source="sea", n=n, generator_seed=3, normalization="minmax")
    return TrialConfig(model=model, stream=stream, **{**SMALL, **kw})


def segment_config(model="online-bls", limit=300, **kw):
    return TrialConfig(model=model, stream=dataset_spec("image-segment", limit=limit),
                       **{**SMALL, **kw})


def test_seed_derivation():
    cfg = segment_config(seed=5)
    assert trial_seeds(cfg, 0) == trial_seeds(cfg, 0)
    assert len({*trial_seeds(cfg, 0), *trial_seeds(cfg, 1)}) == 6
    assert derive_seed(5, 0) != derive_seed(0, 5)
    assert 0 <= derive_seed(2**64 + 3) < 2**64


def test_trial_is_deterministic():
    cfg = segment_config(seed=11)
    a, b = run_trial(cfg, 0), run_trial(cfg, 0)
    assert np.array_equal(a.steps.pred_label, b.steps.pred_label)
    assert np.array_equal(a.steps.true_label, b.steps.true_label)
    assert a.summary.oca == b.summary.oca and a.summary.seed == b.summary.seed
    c = run_trial(cfg, 1)
    assert not np.array_equal(a.steps.true_label, c.steps.true_label)


def test_step_log_consistency():
    res = run_trial(segment_config(), 0)
    steps = res.steps
    k = np.arange(1, len(steps) + 1)
    np.testing.assert_allclose(steps.cumulative_oca, np.cumsum(steps.correct) / k)
    assert np.all(steps.update_micros >= 0)
    assert res.summary.oca == pytest.approx(steps.cumulative_oca[-1])
    assert res.summary.oca + res.summary.oce == 1.0
    assert res.summary.avrbacc == pytest.approx(steps.cumulative_bacc.mean())


def test_prediction_precedes_update():
    cfg = segment_config(limit=50)
    res = run_trial(cfg, 0, keep_model=True)
    assert res.model.k == 50
    assert res.steps.pred_label[0] == 0     # zero weights, lowest-index tie-break


def test_ada_with_unit_decay_matches_plain():
    plain = run_trial(sea_config("online-bls", lam=1e-3), 0)
    ada = run_trial(sea_config("online-bls-ada", lam=1e-3, mu=1.0), 0)
    assert np.array_equal(plain.steps.pred_label, ada.steps.pred_label)


def test_single_trial_has_zero_sd(tmp_path):
    cfg = segment_config(output_dir=str(tmp_path))
    report, conv, _ = run_experiment(cfg)
    for key in ("oca", "bacc", "mcc", "update_mean_us"):
        assert report["aggregate"][key]["sd"] == 0.0
    assert np.all(conv["sd_oce"] == 0.0)


def test_experiment_outputs(tmp_path):
    cfg = segment_config(trials=3, output_dir=str(tmp_path), limit=120)
    report, conv, results = run_experiment(cfg)
    assert len(results) == 3
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["convergence.csv", "summary.json", "trial_0_steps.csv",
                     "trial_1_steps.csv", "trial_2_steps.csv"]
    with open(tmp_path / "convergence.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "mean_oce", "sd_oce"] and len(rows) == 121
    ocas = [r.summary.oca for r in results]
    assert report["aggregate"]["oca"]["mean"] == pytest.approx(np.mean(ocas))
    assert report["aggregate"]["oca"]["sd"] == pytest.approx(np.std(ocas))
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["model"] == "online-bls"
    assert TrialConfig.from_dict(summary["config"]) == cfg
    logged = StepLog.from_csv(tmp_path / "trial_1_steps.csv")
    assert np.array_equal(logged.pred_label, results[1].steps.pred_label)
    np.testing.assert_array_equal(logged.cumulative_oca, results[1].steps.cumulative_oca)


def test_report_reaggregates(tmp_path):
    cfg = segment_config(trials=2, output_dir=str(tmp_path), limit=80)
    report, _, _ = run_experiment(cfg)
    (tmp_path / "convergence.csv").unlink()
    again = load_report_dir(tmp_path)
    for key in ("oca", "bacc", "avrbacc", "f1", "mcc"):
        assert again["aggregate"][key]["mean"] == pytest.approx(report["aggregate"][key]["mean"])
    assert (tmp_path / "convergence.csv").exists()
    with pytest.raises(FileNotFoundError):
        load_report_dir(tmp_path / "empty")


def test_parallel_trials_match_serial():
    serial, _, _ = run_experiment(segment_config(trials=2, limit=60))
    parallel, _, _ = run_experiment(segment_config(trials=2, limit=60, jobs=2))
    assert [t["oca"] for t in serial["trials"]] == [t["oca"] for t in parallel["trials"]]


def test_partial_failure(tmp_path):
    cfg = sea_config("ibls", n=200, max_samples=100, output_dir=str(tmp_path))
    with pytest.raises(PartialFailure) as info:
        run_experiment(cfg)
    assert sorted(info.value.failed) == [0]


def test_generator_trials_reseed_stream():
    cfg = sea_config(trials=2)
    a, b = run_trial(cfg, 0), run_trial(cfg, 1)
    assert not np.array_equal(a.steps.true_label, b.steps.true_label)
    fixed = sea_config(trials=2, shuffle=False)
    c, d = run_trial(fixed, 0), run_trial(fixed, 1)
    assert np.array_equal(c.steps.true_label, d.steps.true_label)


def test_compare_online_and_ribls():
    stream = StreamSpec(source="sea", n=500, generator_seed=1, normalization="minmax")
    configs = [TrialConfig(model=m, stream=stream, lam=1e-2, **SMALL) for m in ("online-bls", "ribls")]
    rows = compare_models(configs)
    assert [r["model"] for r in rows] == ["online-bls", "ribls"]
    assert rows[0]["weight_gap_vs_first"] == 0.0
    assert rows[1]["weight_gap_vs_first"] < 1e-6
    assert rows[0]["oca"] == rows[1]["oca"]
    assert "oca" in rows[0]["best"]
    table = format_table(rows)
    assert "online-bls" in table and "ribls" in table


def test_compare_rejects_bad_input():
    with pytest.raises(IncompatibleConfigs):
        compare_models([])
    with pytest.raises(IncompatibleConfigs):
        compare_models([sea_config(seed=1), sea_config("ribls", seed=2)])


def test_adaptive_beats_plain_on_sea():
    stream = StreamSpec(source="sea", n=20_000, generator_seed=7, normalization="minmax",
                        params=SEAParams(segment_length=5000))
    configs = [TrialConfig(model=m, stream=stream, n1=5, n2=4, n3=40, n4=1, shuffle=False)
               for m in ("online-bls", "online-bls-ada")]
    plain, ada = compare_models(configs)
    assert ada["oca"] >= plain["oca"]


def test_config_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        TrialConfig(model="svm", stream=StreamSpec(source="sea"))
    with pytest.raises(ValueError):
        TrialConfig(stream=StreamSpec(source="sea"), trials=0)
    with pytest.raises(ValueError):
        TrialConfig(model="online-bls-ada", stream=StreamSpec(source="sea"), mu=1.2)
    cfg = sea_config("blscil", lambda1=0.2)
    path = tmp_path / "cfg.json"
    data = cfg.to_dict()
    data["lambda"] = data.pop("lam")
    path.write_text(json.dumps(data))
    assert TrialConfig.from_json(path) == cfg


def test_ibls_guard():
    cfg = sea_config("ibls", n=300, max_samples=200)
    with pytest.raises(ValueError):
        run_trial(cfg, 0)


# CLI

def test_cli_run_and_report(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["run", "--model", "online-bls", "--dataset", "image-segment", "--n1", "4",
                 "--n2", "3", "--n3", "30", "--n4", "1", "--lambda", "1e-8", "--seed", "2",
                 "--trials", "2", "--limit", "100", "--output", str(out)])
    assert code == 0
    assert "oca" in capsys.readouterr().out
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["n3"] == 30 and summary["config"]["stream"]["limit"] == 100
    assert main(["report", str(out)]) == 0
    assert "2 trial(s)" in capsys.readouterr().out


def test_cli_config_file_with_overrides(tmp_path):
    cfg = sea_config("online-bls-ada", n=150, mu=0.95)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    out = tmp_path / "out"
    assert main(["run", "--config", str(path), "--trials", "2", "--no-shuffle",
                 "--output", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["mu"] == 0.95 and summary["config"]["trials"] == 2
    assert summary["config"]["shuffle"] is False
    # same stream order in both trials; only the mapper differs
    first, second = StepLog.from_csv(out / "trial_0_steps.csv"), StepLog.from_csv(out / "trial_1_steps.csv")
    assert np.array_equal(first.true_label, second.true_label)


def test_cli_generate(tmp_path, capsys):
    path = tmp_path / "sea.csv"
    assert main(["generate", "sea", "--n", "25", "--seed", "4", "--output", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1,x2,label" and len(lines) == 26
    hyp = tmp_path / "hyp.csv"
    assert main(["generate", "hyperplane", "--n", "10", "--d", "5", "--output", str(hyp)]) == 0
    assert hyp.read_text().splitlines()[0].count(",") == 5
    # the generated file is a valid dataset for run
    assert main(["run", "--dataset", str(path), "--n3", "10", "--n1", "2", "--n2", "2"]) == 0


def test_cli_compare(tmp_path, capsys):
    code = main(["compare", "--models", "online-bls", "ribls", "--dataset", "sea", "--n", "300",
                 "--n1", "3", "--n2", "3", "--n3", "20", "--lambda", "1e-2",
                 "--output", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "ribls" in out and "W gap" in out
    rows = json.loads((tmp_path / "comparison.json").read_text())
    assert len(rows) == 2


def test_cli_errors(tmp_path, capsys):
    assert main(["run", "--dataset", str(tmp_path / "missing.csv")]) == 2
    assert "not found" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["run", "--model", "svm", "--dataset", "sea"])
