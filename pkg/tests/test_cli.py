"""Configuration, CLI surface, and recipe tests (including determinism)."""

import csv
import json
import os

import numpy as np
import pytest

from bitpipes.cli import main
from bitpipes.config import load_config
from bitpipes.recipes import recipe_names, run_recipe


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_empty_file_defaults(self, tmp_path):
        path = tmp_path / "empty.ini"
        path.write_text("")
        cfg = load_config(str(path))
        assert cfg.peak_a == 10.0
        assert cfg.avg_e == 10.0
        assert cfg.sigma == 1.0
        assert cfg.beta == 5.0
        assert cfg.seed == 1

    def test_ratio_with_peak_db(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[channel]\nratio = 0.333\npeak_db = 10\n")
        cfg = load_config(str(path))
        assert cfg.peak_a == pytest.approx(10.0)
        assert cfg.avg_e == pytest.approx(cfg.peak_a / 3, rel=2e-3)

    def test_negative_beta_names_key(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[frontend]\nbeta = -2\n")
        with pytest.raises(ValueError, match="frontend.beta"):
            load_config(str(path))

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[channel]\npeak = 3\n")
        with pytest.raises(ValueError, match="channel.peak"):
            load_config(str(path))

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[chan]\npeak_a = 3\n")
        with pytest.raises(ValueError, match="chan"):
            load_config(str(path))

    def test_both_peak_forms_rejected(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[channel]\npeak_a = 3\npeak_db = 10\n")
        with pytest.raises(ValueError, match="not both"):
            load_config(str(path))

    def test_type_error_names_key(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text("[run]\nseed = soon\n")
        with pytest.raises(ValueError, match="run.seed"):
            load_config(str(path))

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_config("/nonexistent/conf.ini")


class TestCliCommands:
    def test_noise_marginals_csv(self, tmp_path, capsys):
        out = tmp_path / "noise.csv"
        rc = main(
            ["noise", "--peak-a", "10", "--beta", "5", "--gamma", "10",
             "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out)
        assert list(rows[0]) == ["index", "bit_pattern", "probability"]
        alphas = [float(r["probability"]) for r in rows]
        assert alphas == pytest.approx(
            [0.5, 0.5, 0.5, 0.5, 0.54, 0.88, 0.08, 0.0], abs=5e-3
        )

    def test_noise_joint_rows(self, tmp_path):
        out = tmp_path / "noise.csv"
        main(["noise", "--peak-a", "2", "--beta", "3", "--gamma", "1",
              "--joint", "--out", str(out)])
        rows = read_csv(out)
        assert len(rows) == 3 + 8
        joint = {r["bit_pattern"]: float(r["probability"]) for r in rows[3:]}
        # limited by the 6-significant-digit CSV format
        assert sum(joint.values()) == pytest.approx(1.0, abs=1e-5)

    def test_rate_csv_schema(self, tmp_path):
        out = tmp_path / "rate.csv"
        rc = main(["rate", "--scheme", "id", "--peak-db-range", "12",
                   "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert list(rows[0]) == [
            "snr_db", "scheme", "q", "beta", "gamma",
            "total_rate", "active_pipes", "p_values",
        ]
        assert float(rows[0]["total_rate"]) == pytest.approx(1.915, abs=0.1)

    def test_capacity_csv(self, tmp_path):
        out = tmp_path / "cap.csv"
        rc = main(["capacity", "--mode", "vbc", "--peak-db-range", "10",
                   "--beta", "5", "--gamma", "0.5", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert float(rows[0]["capacity_bits"]) == pytest.approx(1.6009, abs=0.02)
        assert rows[0]["N"] == "4"

    def test_simulate_smoke(self, tmp_path, capsys):
        out = tmp_path / "sim.csv"
        rc = main(
            ["simulate", "--scheme", "id", "--n", "64", "--frames", "40",
             "--peak-db", "13.9794", "--beta", "5", "--gamma", "4.4801",
             "--rates", "4:0.359,5:0.734,6:0.984", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out)
        assert [r["pipe"] for r in rows] == ["4", "5", "6"]
        report = json.loads(capsys.readouterr().out)
        assert report["frames"] == 40

    def test_simulate_infeasible_rates_explained(self, capsys):
        rc = main(
            ["simulate", "--scheme", "id", "--n", "64", "--frames", "2",
             "--peak-db", "13.9794", "--beta", "5", "--gamma", "4.4801",
             "--rates", "7:0.5"]
        )
        assert rc == 2
        assert "peak" in capsys.readouterr().err

    def test_bad_rate_count_explained(self, capsys):
        rc = main(
            ["simulate", "--scheme", "id", "--n", "64", "--frames", "2",
             "--peak-db", "6", "--beta", "3", "--gamma", "1",
             "--rates", "0.5,0.5,0.5,0.5,0.5,0.5,0.5"]
        )
        assert rc == 2
        assert "active set" in capsys.readouterr().err


class TestRecipes:
    def test_unknown_recipe_lists_available(self):
        from bitpipes.config import Config

        with pytest.raises(ValueError) as err:
            run_recipe("table99", Config())
        for name in recipe_names():
            assert name in str(err.value)

    def test_table1_matches_reference(self, tmp_path):
        from bitpipes.config import Config

        cfg = Config(out_dir=str(tmp_path))
        outputs = run_recipe("table1", cfg)
        rows = read_csv(outputs[0])
        alphas = [float(r["probability"]) for r in rows]
        assert alphas == pytest.approx(
            [0.5, 0.5, 0.5, 0.5, 0.54, 0.88, 0.08, 0.0], abs=5e-3
        )
        manifest = json.load(open(outputs[-1]))
        assert manifest["seed"] == 1
        assert manifest["recipe"] == "table1"

    def test_table3_matches_reference(self, tmp_path):
        from bitpipes.config import Config

        outputs = run_recipe("table3", Config(out_dir=str(tmp_path)))
        rows = read_csv(outputs[0])
        joint = {(r["z0"], r["z1"]): float(r["joint"]) for r in rows}
        cond = {(r["z0"], r["z1"]): float(r["conditional_z2"]) for r in rows}
        assert joint[("0", "0")] == pytest.approx(0.1573, abs=5e-4)
        assert joint[("0", "1")] == pytest.approx(0.3426, abs=5e-4)
        assert cond[("0", "0")] == pytest.approx(0.8640, abs=5e-4)
        assert cond[("1", "1")] == pytest.approx(0.0039, abs=5e-4)
        assert float(rows[0]["alpha2"]) == pytest.approx(0.16, abs=5e-3)

    def test_fig3a_single_point_override(self, tmp_path):
        from bitpipes.config import Config

        outputs = run_recipe("fig3a", Config(out_dir=str(tmp_path)), {"snr": "12"})
        rows = read_csv(outputs[0])
        assert len(rows) == 1
        assert float(rows[0]["total_rate"]) == pytest.approx(1.915, abs=0.1)

    def test_recipe_rerun_is_byte_identical_across_threads(self, tmp_path):
        from bitpipes.config import Config

        texts = []
        for threads, sub in ((1, "a"), (3, "b")):
            cfg = Config(out_dir=str(tmp_path / sub), threads=threads, seed=9)
            outputs = run_recipe(
                "table5", cfg, {"n": "64", "frames": "80"}
            )
            texts.append(open(outputs[0]).read() + open(outputs[1]).read())
        assert texts[0] == texts[1]

    def test_unknown_override_rejected(self, tmp_path):
        from bitpipes.config import Config

        with pytest.raises(ValueError, match="override"):
            run_recipe("table1", Config(out_dir=str(tmp_path)), {"bogus": "1"})

    def test_cli_recipe_roundtrip(self, tmp_path, capsys):
        rc = main(["--out-dir", str(tmp_path), "recipe", "table3"])
        assert rc == 0
        printed = capsys.readouterr().out.strip().splitlines()
        assert any(p.endswith("table3.csv") for p in printed)
        assert os.path.exists(tmp_path / "table3.manifest.json")
