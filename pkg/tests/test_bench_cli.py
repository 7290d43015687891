import json
import subprocess
import sys

import numpy as np
import pytest

from admmtune import bench, matio
from admmtune.generators import random_l2, qp_instance, qp_known_gram_spectrum
from admmtune.problems import save_qp


def qp_config(methods=("admm",), **kw):
    base = dict(kind="qp",
                source={"generator": {"n": 12, "m": 6, "instances": 3}},
                methods=methods, seed=7)
    base.update(kw)
    return bench.ExperimentConfig(**base)


class TestSweep:
    def test_auto_grid_single_row_per_method_instance(self):
        records, aggs = bench.run_sweep(qp_config(methods=("admm",
                                                           "admm-relaxed")))
        assert len(records) == 6  # 3 instances x 2 methods x 1 rho
        rhos = {r.rho for r in records if r.method == "admm"}
        assert len(rhos) == 1
        relaxed = [r for r in records if r.method == "admm-relaxed"]
        assert all(r.alpha == 2.0 for r in relaxed)
        assert len(aggs) == 2
        for agg in aggs:
            assert agg["min"] <= agg["mean"] <= agg["max"]

    def test_grid_spec(self):
        cfg = qp_config(rho_grid={"lo": 0.1, "hi": 10.0, "points": 4})
        records, aggs = bench.run_sweep(cfg)
        assert len(records) == 12
        assert len({r.rho for r in records}) == 4

    def test_converged_records_satisfy_stop(self):
        records, _ = bench.run_sweep(qp_config())
        for r in records:
            assert r.converged
            assert max(r.final_r, r.final_s) <= 1e-5
            assert 0.0 < r.empirical_factor <= 1.0 + 1e-9

    def test_l2_factor_sweep_columns(self):
        cfg = bench.ExperimentConfig(
            kind="l2-factors",
            source={"generator": {"lam_min": 1.0, "lam_max": 1200.0}},
            methods=(), delta_grid={"lo": 1e-3, "hi": 1e5, "points": 9})
        rows, _ = bench.run_sweep(cfg)
        assert len(rows) == 9
        # matched-step curve is pinned at one half
        for row in rows:
            assert row["admm_rho_eq_delta"] == pytest.approx(0.5)
        # tuned splitting wins at the small end, momentum at the large end
        assert rows[0]["admm_rho_star"] < rows[0]["heavy_ball"]
        assert rows[-1]["admm_rho_star"] > rows[-1]["heavy_ball"]

    def test_mpc_kind_with_scaling_variants(self):
        # condensed-batch sweep with and without the optimal row scaling,
        # standard and relaxed: the four aggregate series of the study
        gen = {"nx": 3, "nu": 2, "horizon": 2, "grid": [10.0, 14.0],
               "max_feasible": 4, "state_upper": False, "state_lower": False,
               "input_lower": False, "u_min": -2.0, "u_max": 2.0,
               "x_ref": 8.0}
        curves = {}
        for scaling in ("none", "optimal"):
            cfg = bench.ExperimentConfig(
                kind="mpc", source={"generator": gen},
                methods=("admm", "admm-relaxed"), scaling=scaling, seed=5)
            records, aggs = bench.run_sweep(cfg)
            assert records and all(r.converged for r in records)
            for agg in aggs:
                curves[(agg["method"], scaling)] = agg["mean"]
        assert len(curves) == 4

    def test_csv_deterministic_except_wall_time(self, tmp_path):
        cfg = qp_config(methods=("admm", "fast-admm"))
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (p1, p2):
            records, aggs = bench.run_sweep(cfg)
            bench.write_sweep_csv(p, cfg, records, aggs)

        def strip_wall(path):
            return [",".join(line.split(",")[:-1])
                    for line in path.read_text().splitlines()]

        assert p1.read_text() != "" and strip_wall(p1) == strip_wall(p2)
        assert p1.read_text().splitlines()[0] == "# seed=7"


class TestCompare:
    def test_identical_method_zero_difference(self):
        cfg = qp_config(methods=("admm", "admm"))
        summary = bench.compare_methods(cfg)
        assert summary["pairwise"] == {}  # no distinct pair
        assert summary["methods"]["admm"]["converged"] == 3

    def test_win_counts(self):
        cfg = qp_config(methods=("admm-relaxed", "fast-admm"))
        summary = bench.compare_methods(cfg)
        key = "admm-relaxed vs fast-admm"
        pair = summary["pairwise"][key]
        assert pair["admm-relaxed"] + pair["fast-admm"] + pair["ties"] == 3

    def test_mpc_batch_relaxed_vs_accelerated(self):
        gen = {"nx": 3, "nu": 2, "horizon": 2, "grid": [10.0, 14.0],
               "max_feasible": 4, "state_upper": False, "state_lower": False,
               "input_lower": False, "u_min": -2.0, "u_max": 2.0,
               "x_ref": 8.0}
        cfg = bench.ExperimentConfig(kind="mpc", source={"generator": gen},
                                     methods=("admm-relaxed", "fast-admm"),
                                     seed=5)
        summary = bench.compare_methods(cfg)
        pair = summary["pairwise"]["admm-relaxed vs fast-admm"]
        assert pair["admm-relaxed"] + pair["fast-admm"] + pair["ties"] \
            == summary["instances"] > 0

    def test_heavy_ball_sweeps_ill_conditioned(self):
        cfg = bench.ExperimentConfig(
            kind="l2",
            source={"generator": {"n": 10, "delta": 0.01, "lam_min": 0.1,
                                  "lam_max": 50.0, "instances": 3}},
            methods=("gradient", "heavy-ball"), tol=1e-6, seed=3)
        summary = bench.compare_methods(cfg)
        pair = summary["pairwise"]["gradient vs heavy-ball"]
        assert pair["heavy-ball"] == 3 and pair["gradient"] == 0

    def test_rejects_single_method(self):
        with pytest.raises(ValueError):
            bench.compare_methods(qp_config(methods=("admm",)))


class TestConfigValidation:
    def test_bad_kind(self):
        with pytest.raises(ValueError):
            bench.ExperimentConfig(kind="lp", source={})

    def test_bad_method_for_kind(self):
        with pytest.raises(ValueError):
            bench.ExperimentConfig(kind="qp", source={},
                                   methods=("heavy-ball",))

    def test_json_roundtrip(self, tmp_path):
        cfg = qp_config()
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        loaded = bench.ExperimentConfig.from_json(path)
        assert loaded.kind == cfg.kind and loaded.methods == cfg.methods


def run_cli(args, **kw):
    return subprocess.run([sys.executable, "-m", "admmtune.cli", *args],
                          capture_output=True, text=True, **kw)


@pytest.fixture(scope="module")
def qp_files(tmp_path_factory):
    path = tmp_path_factory.mktemp("qpfiles")
    eigs = np.exp(np.linspace(-0.5, 1.0, 5))
    Q, A = qp_known_gram_spectrum(10, 5, eigs, 0)
    prob = qp_instance(Q, A, 1)
    files = {k: str(path / f"{k}.txt") for k in ("Q", "q", "A", "c")}
    save_qp(prob, files["Q"], files["q"], files["A"], files["c"])
    return files


class TestCli:
    def test_tune_qp_json(self, qp_files):
        out = run_cli(["tune", "--kind", "qp", "--quad", qp_files["Q"],
                       "--lin", qp_files["q"], "--constraints", qp_files["A"],
                       "--limits", qp_files["c"]])
        assert out.returncode == 0, out.stderr
        data = json.loads(out.stdout)
        assert data["rank_case"] == "full-row"
        assert data["relaxed"]["alpha_star"] == 2.0
        assert 0 < data["standard"]["zeta_star"] < 1

    def test_tune_l2_json(self, tmp_path):
        prob, _ = random_l2(6, 2.0, 1.0, 9.0, 0)
        matio.write_matrix(tmp_path / "Q.txt", prob.Q)
        matio.write_vector(tmp_path / "q.txt", prob.q)
        matio.write_scalar(tmp_path / "d.txt", prob.delta)
        out = run_cli(["tune", "--kind", "l2", "--quad",
                       str(tmp_path / "Q.txt"), "--lin",
                       str(tmp_path / "q.txt"), "--delta",
                       str(tmp_path / "d.txt")])
        assert out.returncode == 0, out.stderr
        data = json.loads(out.stdout)
        assert data["regime"] == "inside"
        assert data["rho_star"] == pytest.approx(2.0)

    def test_solve_writes_trace(self, qp_files, tmp_path):
        out = run_cli(["solve", "--kind", "qp", "--quad", qp_files["Q"],
                       "--lin", qp_files["q"], "--constraints", qp_files["A"],
                       "--limits", qp_files["c"], "--rho", "auto",
                       "--out", str(tmp_path)])
        assert out.returncode == 0, out.stderr
        data = json.loads(out.stdout)
        assert data["status"] == "converged"
        header = open(data["trace"]).read().splitlines()[1]
        assert header == "k,r_norm,s_norm,fv_norm,eps_k,delta_k,zeta_lb_k"

    def test_outdir_env_override(self, qp_files, tmp_path, monkeypatch):
        override = tmp_path / "redirected"
        out = subprocess.run(
            [sys.executable, "-m", "admmtune.cli", "solve", "--kind", "qp",
             "--quad", qp_files["Q"], "--lin", qp_files["q"],
             "--constraints", qp_files["A"], "--limits", qp_files["c"]],
            capture_output=True, text=True,
            env={**__import__("os").environ, "ADMMTUNE_OUTDIR": str(override)})
        assert out.returncode == 0, out.stderr
        assert (override / "trace.csv").exists()

    def test_scale_json(self, qp_files):
        out = run_cli(["scale", "--quad", qp_files["Q"], "--constraints",
                       qp_files["A"]])
        assert out.returncode == 0, out.stderr
        data = json.loads(out.stdout)
        assert data["ratio_after"] <= data["ratio_before"] + 1e-8
        assert len(data["w"]) == 5 and len(data["L"]) == 5

    def test_sweep_and_compare_roundtrip(self, tmp_path):
        cfg = {"kind": "qp",
               "source": {"generator": {"n": 10, "m": 5, "instances": 2}},
               "methods": ["admm", "fast-admm"], "seed": 11}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out = run_cli(["sweep", "--config", str(cfg_path), "--out",
                       str(tmp_path), "--name", "s.csv"])
        assert out.returncode == 0, out.stderr
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "# seed=11"
        out2 = run_cli(["compare", "--config", str(cfg_path)])
        assert out2.returncode == 0, out2.stderr
        assert "pairwise" in json.loads(out2.stdout)

    def test_condense_writes_manifest(self, tmp_path):
        spec = {"nx": 3, "nu": 2, "horizon": 2, "seed": 4,
                "grid": [0.0, 1.0], "state_upper": False,
                "state_lower": False, "x_min": -50, "x_max": 50}
        cfg = tmp_path / "mpc.json"
        cfg.write_text(json.dumps(spec))
        out = run_cli(["condense", "--config", str(cfg), "--out",
                       str(tmp_path / "batch")])
        assert out.returncode == 0, out.stderr
        info = json.loads(out.stdout)
        assert info["instances"] == 8
        manifest = json.load(open(info["manifest"]))
        assert manifest["row_blocks"] == ["input-upper", "input-lower"]
