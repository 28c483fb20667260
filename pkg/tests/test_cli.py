"""End-to-end tests of the command-line front end."""

import json
from pathlib import Path

import pytest

from riskpess.cli import main


FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def _dump(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def _error(capsys):
    """Structured error response, always the last stderr line."""
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture
def specs(tmp_path):
    """Environment, behavior, policy and class files for a two-context bandit."""
    return {
        "env": _dump(tmp_path / "env.json", {
            "K": 2,
            "D": 1.0,
            "context_probs": [0.5, 0.5],
            "rewards": [[[[0.2, 0.5], [0.8, 0.5]], [[0.5, 1.0]]], [[[0.0, 0.3], [1.0, 0.7]], [[0.4, 1.0]]]],
        }),
        "behavior": _dump(tmp_path / "behavior.json", {"propensities": [[0.5, 0.5], [0.7, 0.3]]}),
        "policy": _dump(tmp_path / "policy.json", {"policy": [0, 1]}),
        "class": _dump(tmp_path / "class.json", {"policies": [[0, 0], [0, 1], [1, 0], [1, 1]]}),
    }


@pytest.fixture
def lure_files(tmp_path):
    """One rare high-reward action against a well-covered safe one."""
    rows = ['{"schema_version":1,"K":2,"D":1.0,"n_contexts":2}']
    rows += ['{"x":0,"a":0,"y":0.6,"beta":[0.998,0.002]}'] * 5999
    rows.append('{"x":1,"a":1,"y":1.0,"beta":[0.998,0.002]}')
    data = tmp_path / "lure.jsonl"
    data.write_text("\n".join(rows) + "\n")
    cls = _dump(tmp_path / "lure_class.json", {"policies": [[0, 0], [1, 1]], "natarajan_dim": 1})
    return str(data), cls


@pytest.fixture
def dataset(tmp_path, specs):
    out = tmp_path / "data.jsonl"
    assert main(["gen-data", "--env", specs["env"], "--behavior", specs["behavior"],
                 "--n", "400", "--seed", "3", "--out", str(out)]) == 0
    return str(out)


class TestGenData:
    def test_summary_line(self, tmp_path, specs, capsys):
        out = tmp_path / "d.jsonl"
        code = main(["gen-data", "--env", specs["env"], "--behavior", specs["behavior"],
                     "--n", "50", "--out", str(out)])
        assert code == 0
        assert capsys.readouterr().out.startswith("n=50 K=2 D=1 contexts=2")
        assert len(out.read_text().splitlines()) == 51

    def test_same_seed_same_bytes(self, tmp_path, specs):
        outs = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
        for out in outs:
            main(["gen-data", "--env", specs["env"], "--behavior", specs["behavior"],
                  "--n", "200", "--seed", "11", "--out", str(out)])
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_behavior_mismatch(self, tmp_path, specs, capsys):
        bad = _dump(tmp_path / "bad.json", {"propensities": [[1.0, 0.0]]})
        code = main(["gen-data", "--env", specs["env"], "--behavior", bad, "--n", "5", "--out", str(tmp_path / "x")])
        assert code == 2
        assert _error(capsys)["error_code"] == "VALIDATION_ERROR"


class TestEvaluate:
    def test_evaluate_policy(self, dataset, specs, capsys):
        capsys.readouterr()
        code = main(["evaluate", "--data", dataset, "--policy", specs["policy"], "--risk", "mean"])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["estimator"] == "clipped_is"
        assert result["radius_source"] == "pointwise"
        assert 0.0 <= result["rho_hat"] <= 1.0
        assert 0.0 < result["pointwise_radius"] <= 1.0
        assert result["lcb"] == pytest.approx(result["rho_hat"] - result["pointwise_radius"])
        assert result["diagnostics"]["r"] == 0.0

    def test_wis_with_cvar_and_dump(self, tmp_path, dataset, specs, capsys):
        capsys.readouterr()
        dump = tmp_path / "cdf.json"
        code = main(["evaluate", "--data", dataset, "--policy", specs["policy"],
                     "--risk", '{"kind": "cvar", "alpha": 0.5}', "--estimator", "wis",
                     "--dump-cdf", str(dump)])
        assert code == 0
        result = json.loads(capsys.readouterr().out)
        assert result["lipschitz"] == pytest.approx(2.0)
        assert result["radius_source"] == "uniform_d0"
        assert json.loads(dump.read_text())["values"][-1] == pytest.approx(1.0)

    def test_dr_without_model(self, dataset, specs, capsys):
        code = main(["evaluate", "--data", dataset, "--policy", specs["policy"], "--risk", "mean",
                     "--estimator", "dr", "--dr-bias", "0.1"])
        assert code == 2
        assert _error(capsys)["error_code"] == "MISSING_MODEL"

    def test_var_is_rejected(self, dataset, specs, capsys):
        code = main(["evaluate", "--data", dataset, "--policy", specs["policy"],
                     "--risk", '{"kind": "var", "alpha": 0.5}'])
        assert code == 2
        assert _error(capsys)["error_code"] == "NOT_LIPSCHITZ"

    def test_missing_dataset(self, tmp_path, specs, capsys):
        code = main(["evaluate", "--data", str(tmp_path / "absent.jsonl"), "--policy", specs["policy"],
                     "--risk", "mean"])
        assert code == 2
        assert _error(capsys)["error_code"] == "FILE_NOT_FOUND"

    def test_malformed_rows(self, tmp_path, specs, capsys):
        data = tmp_path / "bad.jsonl"
        data.write_text(
            '{"schema_version":1,"K":2,"D":1.0,"n_contexts":2}\n'
            '{"x":0,"a":0,"y":0.5,"beta":[0.5,0.5]}\n'
            '{"x":3,"a":0,"y":0.5,"beta":[0.5,0.5]}\n'
        )
        code = main(["evaluate", "--data", str(data), "--policy", specs["policy"], "--risk", "mean"])
        assert code == 2
        error = _error(capsys)
        assert error["error_code"] == "VALIDATION_ERROR"
        assert error["details"]["errors"] == ["line 3: context 3 outside [0, 2)"]


class TestLearn:
    def test_pessimistic_avoids_lure(self, tmp_path, lure_files):
        data, cls = lure_files
        out = tmp_path / "learn.json"
        assert main(["learn", "--data", data, "--class", cls, "--risk", "mean", "--out", str(out)]) == 0
        result = json.loads(out.read_text())
        assert result["mode"] == "pessimistic"
        assert result["selected"] == 0
        assert (tmp_path / "learn.csv").exists()

    def test_greedy_takes_lure(self, tmp_path, lure_files):
        data, cls = lure_files
        out = tmp_path / "greedy.json"
        assert main(["learn", "--data", data, "--class", cls, "--risk", "mean", "--greedy", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["selected"] == 1

    def test_learn_round_trip(self, tmp_path, dataset, specs, capsys):
        out = tmp_path / "learn.json"
        code = main(["--threads", "2", "learn", "--data", dataset, "--class", specs["class"],
                     "--risk", '{"kind": "cvar", "alpha": 0.25}', "--out", str(out)])
        assert code == 0
        result = json.loads(out.read_text())
        assert len(result["reports"]) == 4
        assert result["natarajan_dim"] == 2
        assert "mode=pessimistic" in capsys.readouterr().out

    def test_metrics_file(self, tmp_path, lure_files):
        data, cls = lure_files
        metrics = tmp_path / "metrics.prom"
        code = main(["--metrics-out", str(metrics), "learn", "--data", data, "--class", cls, "--risk", "mean",
                     "--out", str(tmp_path / "l.json")])
        assert code == 0
        assert 'policies_evaluated_total{estimator="clipped_is"} 2.0' in metrics.read_text()

    def test_bad_dr_bias(self, lure_files, capsys):
        data, cls = lure_files
        code = main(["learn", "--data", data, "--class", cls, "--risk", "mean", "--dr-bias", "lots"])
        assert code == 2
        assert _error(capsys)["error_code"] == "CONFIGURATION_ERROR"

    def test_overlap_only_writes_strict_json(self, tmp_path):
        out = tmp_path / "overlap.json"
        code = main(["learn", "--data", str(FIXTURES / "no_overlap_data.jsonl"),
                     "--class", str(FIXTURES / "no_overlap_class.json"), "--risk", "mean",
                     "--overlap-only", "--out", str(out)])
        assert code == 0

        def reject(token):
            raise ValueError(f"non-standard JSON constant {token}")

        result = json.loads(out.read_text(), parse_constant=reject)
        assert result["mode"] == "overlap_only"
        assert [r["lcb"] for r in result["reports"]] == [None, None, None]

    def test_greedy_and_overlap_only_exclusive(self, lure_files):
        data, cls = lure_files
        with pytest.raises(SystemExit) as info:
            main(["learn", "--data", data, "--class", cls, "--risk", "mean", "--greedy", "--overlap-only"])
        assert info.value.code == 2


class TestExperiments:
    def test_coverage_forced_radius(self, tmp_path, specs, capsys):
        config = _dump(tmp_path / "coverage.json", {
            "environment": "env.json",
            "behavior": "behavior.json",
            "policy": "policy.json",
            "n": 20,
            "trials": 100,
            "seed": 1,
            "deltas": [0.05, 0.2],
            "flavors": ["hoeffding", "bernstein"],
            "estimators": ["is", "wis"],
            "force_radius_one": True,
        })
        out = tmp_path / "cov.json"
        assert main(["coverage", config, "--out", str(out)]) == 0
        cells = json.loads(out.read_text())["cells"]
        assert len(cells) == 6
        assert all(c["violations"] == 0 for c in cells)
        assert (tmp_path / "cov.csv").exists()
        assert "EXCEEDED" not in capsys.readouterr().out

    def test_certificate(self, tmp_path, specs):
        config = _dump(tmp_path / "cert.json", {
            "environment": "env.json",
            "behavior": "behavior.json",
            "policy_class": "class.json",
            "risk": {"kind": "cvar", "alpha": 0.5},
            "n": 100,
            "trials": 5,
        })
        out = tmp_path / "cert_out.json"
        assert main(["certificate", config, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["certificate_failures"] == 0
        assert report["trials"] == 5

    def test_rate_curve_seed_override(self, tmp_path):
        config = _dump(tmp_path / "rate.json", {
            "risk": "mean",
            "n_grid": [10, 20, 40, 80],
            "trials_per_n": 2,
            "seed": 5,
            "family": {"d": 1, "beta_inf": 0.5, "delta_gap": 0.2},
        })
        out = tmp_path / "rate_out.json"
        assert main(["rate-curve", config, "--seed", "9", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["seed"] == 9
        assert [p["n"] for p in report["points"]] == [10, 20, 40, 80]

    def test_unknown_config_key(self, tmp_path, capsys):
        config = _dump(tmp_path / "rate.json", {
            "risk": "mean",
            "n_grid": [10, 20, 40, 80],
            "family": {"d": 1, "beta_inf": 0.5},
            "bogus": 1,
        })
        assert main(["rate-curve", config]) == 2
        assert _error(capsys)["error_code"] == "VALIDATION_ERROR"

    def test_family_and_environment_exclusive(self, tmp_path, specs, capsys):
        config = _dump(tmp_path / "rate.json", {
            "risk": "mean",
            "n_grid": [10, 20, 40, 80],
            "family": {"d": 1, "beta_inf": 0.5},
            "environment": "env.json",
            "behavior": "behavior.json",
            "policy_class": "class.json",
        })
        assert main(["rate-curve", config]) == 2


class TestNatarajan:
    def test_reports_dimension(self, lure_files, capsys):
        _, cls = lure_files
        assert main(["natarajan", "--class", cls]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["natarajan_dim"] == 1
        assert out["declared"] == 1
        assert out["policies"] == 2
        assert out["growth_bound_holds"] is True
