import json
from pathlib import Path

import numpy as np
import pytest

from cnfem.cli import main
from cnfem.experiments import (ConfigError, ExperimentConfig, load_config,
                               run_check, run_experiment)


PINCERS_SMALL = """
kind = "pincers_illustration"
out = "{out}"
evaluator = "{evaluator}"

[domain]
nx = 30
ny = 18
hinge_radius = 0.4

[map]
a = 1.1

[energy]
beta = 0.5
eps2 = 0.5

[penalty]
eps2_values = [0.5, 0.25]

[diagnostics]
raster_cells = 8
s_values = [0.1]
rho = 0.5
"""

MODEL1_SMALL = """
kind = "model1"
out = "{out}"
evaluator = "{evaluator}"

[domain]
nx = 8
ny = 4
ny2 = 8

[energy]
mu = 1.0
eps2 = 0.5
beta = 1.8

[dirichlet]
m1 = 0.2

[sweep]
parameter = "m2"
values = [0.3, 0.4]

[solver]
max_iter = 60
grad_tol = 1e-3
warm_start = true

[diagnostics]
raster_cells = 8
s_values = [0.1]
"""

MODEL2_SMALL = """
kind = "model2"
out = "{out}"
evaluator = "{evaluator}"

[domain]
nx = 15
ny = 9
slot_start = 0.2
slot_halfwidth = 1.05
slot_slope = -0.35

[energy]
eps2 = 0.5
beta = 1.8
nu = 0.2

[sweep]
parameter = "mu"
values = [1e-4, 1e-1]

[solver]
max_iter = 50
grad_tol = 1e-3

[diagnostics]
raster_cells = 8
s_values = [0.1]
"""


def write_config(tmp_path, template, name, evaluator="accelerated"):
    p = tmp_path / name
    p.write_text(template.format(out=tmp_path / "out", evaluator=evaluator))
    return p


class TestConfig:
    def test_load_and_validate(self, tmp_path):
        p = write_config(tmp_path, MODEL1_SMALL, "m1.toml")
        cfg = load_config(p)
        assert cfg.kind == "model1"
        assert cfg.sweep_values == (0.3, 0.4)
        assert cfg.energy.mu == 1.0
        assert cfg.solver.max_iter == 60

    def test_overrides_win(self, tmp_path):
        p = write_config(tmp_path, MODEL1_SMALL, "m1.toml")
        cfg = load_config(p, out_dir=tmp_path / "elsewhere", evaluator="both",
                          threads=2, trace=True)
        assert cfg.out_dir == tmp_path / "elsewhere"
        assert cfg.evaluator == "both"
        assert cfg.threads == 2
        assert cfg.trace is True

    def test_bad_sweep_parameter(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text(MODEL1_SMALL.format(out=tmp_path, evaluator="full")
                     .replace('parameter = "m2"', 'parameter = "m3"'))
        with pytest.raises(ConfigError):
            load_config(p)

    def test_bad_evaluator(self, tmp_path):
        p = write_config(tmp_path, MODEL1_SMALL, "m1.toml", evaluator="magic")
        with pytest.raises(ConfigError):
            load_config(p)


class TestPincersRunner:
    def test_outputs_and_support_nesting(self, tmp_path):
        cfg = load_config(write_config(tmp_path, PINCERS_SMALL, "p.toml"))
        paths = run_experiment(cfg)
        diag = json.loads(Path(paths["diagnostics"]).read_text())
        assert diag["cn_gap"] > 0
        assert 1.05 <= diag["min_det_interior"] <= 1.15
        assert diag["cn_totals"]["0.5"] > 0
        dens = {}
        for tag in ("0p5", "0p25"):
            rows = Path(paths[f"density_{tag}"]).read_text().splitlines()[1:]
            dens[tag] = {r.split(",")[0] for r in rows
                         if float(r.split(",")[3]) > 1e-12}
        assert dens["0p25"] <= dens["0p5"]

    def test_rerun_bit_identical(self, tmp_path):
        cfg_path = write_config(tmp_path, PINCERS_SMALL, "p.toml")
        first = run_experiment(load_config(cfg_path))
        blobs = {k: Path(v).read_bytes() for k, v in first.items()}
        second = run_experiment(load_config(cfg_path))
        for k, v in second.items():
            assert Path(v).read_bytes() == blobs[k]


class TestModelRunners:
    def test_model1_smoke(self, tmp_path):
        cfg = load_config(write_config(tmp_path, MODEL1_SMALL, "m1.toml"))
        paths = run_experiment(cfg)
        energies = Path(paths["energy"]).read_text().splitlines()
        assert energies[0] == "m2,E_el,mu_E_cn,E_reg,E_body,total"
        assert len(energies) == 3
        snap = json.loads(Path(paths["state_0p4"]).read_text())
        assert snap["m2"] == 0.4
        assert len(snap["y1"]) == len(snap["nodes"])
        diag = json.loads(Path(paths["diagnostics_0p3"]).read_text())
        assert "cn_gap" in diag and "p_measure" in diag

    def test_model2_smoke(self, tmp_path):
        cfg = load_config(write_config(tmp_path, MODEL2_SMALL, "m2.toml"))
        paths = run_experiment(cfg)
        rows = Path(paths["energy"]).read_text().splitlines()
        assert rows[0].startswith("mu,")
        assert len(rows) == 3
        rep = json.loads(Path(paths["report_0p1"]).read_text())
        assert rep["iterations"] <= 50
        assert rep["breakdown"] is not None

    def test_model1_both_evaluators_and_trace(self, tmp_path):
        cfg = load_config(write_config(tmp_path, MODEL1_SMALL, "m1.toml",
                                       evaluator="both"))
        run_experiment(cfg)  # any full/accelerated mismatch would raise


class TestCli:
    def test_check_passes(self, capsys):
        assert main(["check"]) == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out and "[FAIL]" not in out

    def test_missing_config(self, capsys):
        assert main(["model1", "--config", "/nonexistent/x.toml"]) == 2

    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_kind_mismatch(self, tmp_path, capsys):
        p = write_config(tmp_path, MODEL1_SMALL, "m1.toml")
        assert main(["model2", "--config", str(p)]) == 2

    def test_model1_via_cli(self, tmp_path, capsys):
        p = write_config(tmp_path, MODEL1_SMALL, "m1.toml")
        out_dir = tmp_path / "cliout"
        assert main(["model1", "--config", str(p), "--out", str(out_dir)]) == 0
        assert (out_dir / "energies.csv").exists()
        assert (out_dir / "mesh_undeformed.json").exists()


def test_run_check_quiet(tmp_path):
    import io
    buf = io.StringIO()
    assert run_check(out=buf) is True
    assert buf.getvalue().count("[PASS]") >= 6
