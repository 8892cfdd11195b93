"""
Command-line interface

Subcommands end to end against the shipped datasets, with exit codes.
"""

import json

import pytest

from main import (
    EXIT_EVALUATION,
    EXIT_INPUT,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_SENSITIVITY,
    load_config,
    main,
)
from core.errors import ConfigurationError
from tests.conftest import (
    BEIJING_MANIFEST,
    BEIJING_PARAMS,
    BEIJING_PARAMS_MC,
    BEIJING_REPORTED_MANIFEST,
    SYNTHETIC_MANIFEST,
    SYNTHETIC_PARAMS,
    manifest_bytes,
    manifest_dict,
)

BEIJING = [str(BEIJING_MANIFEST), str(BEIJING_PARAMS)]


def _run_json(capsys, *argv):
    code = main([*argv, "--format", "json"])
    return code, json.loads(capsys.readouterr().out)


class TestValidate:
    def test_valid_model(self, capsys):
        assert main(["validate", *BEIJING]) == EXIT_OK
        assert "inputs sha256:" in capsys.readouterr().out

    def test_double_counting(self, tmp_path, capsys):
        document = manifest_dict()
        document["items"][7]["node"] = "air_quality_decrease"
        manifest = tmp_path / "model.json"
        manifest.write_bytes(manifest_bytes(document))
        code, report = _run_json(capsys, "validate", str(manifest), str(BEIJING_PARAMS))
        assert code == EXIT_INVALID
        codes = [v["code"] for v in report["validation"]["violations"]]
        assert "E-DOUBLECOUNT" in codes

    def test_missing_parameter(self, tmp_path, capsys):
        params = tmp_path / "params.csv"
        lines = BEIJING_PARAMS.read_text(encoding="utf-8").splitlines(keepends=True)
        params.write_text("".join(line for line in lines if not line.startswith("Pop,")), encoding="utf-8")
        code, report = _run_json(capsys, "validate", str(BEIJING_MANIFEST), str(params))
        assert code == EXIT_INVALID
        assert report["validation"]["bindings"][0]["parameter"] == "Pop"


class TestValue:
    def test_beijing_ledger(self, capsys):
        code, report = _run_json(capsys, "value", *BEIJING)
        assert code == EXIT_OK
        assert report["ledger"]["es_total"] == pytest.approx(2.033968e11, rel=1e-9)
        assert report["ledger"]["net"] == pytest.approx(1.9434e11, rel=1e-4)
        assert report["inputs_digest"].startswith("sha256:")

    def test_reported_ledger(self, capsys):
        code, report = _run_json(capsys, "value", str(BEIJING_REPORTED_MANIFEST), str(BEIJING_PARAMS))
        assert code == EXIT_OK
        assert report["ledger"]["eds_total"] == pytest.approx(9.1301e9, rel=1e-9)

    def test_output_is_byte_identical(self, capsys):
        main(["value", *BEIJING, "--format", "json"])
        first = capsys.readouterr().out
        main(["value", *BEIJING, "--format", "json"])
        assert capsys.readouterr().out == first

    def test_table_output(self, capsys):
        assert main(["value", *BEIJING]) == EXIT_OK
        assert "Net value" in capsys.readouterr().out

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert main(["value", *BEIJING, "--format", "json", "--out", str(out)]) == EXIT_OK
        assert capsys.readouterr().out == ""
        assert json.loads(out.read_text(encoding="utf-8"))["region"] == "Beijing"

    def test_strict_counts(self, capsys):
        assert main(["value", str(SYNTHETIC_MANIFEST), str(SYNTHETIC_PARAMS)]) == EXIT_OK
        capsys.readouterr()
        code = main(["value", str(SYNTHETIC_MANIFEST), str(SYNTHETIC_PARAMS), "--strict"])
        assert code == EXIT_EVALUATION

    def test_value_outside_domain(self, tmp_path, capsys):
        params = tmp_path / "params.csv"
        text = SYNTHETIC_PARAMS.read_text(encoding="utf-8").replace("P_T,44,%", "P_T,150,%")
        params.write_text(text, encoding="utf-8")
        assert main(["value", str(SYNTHETIC_MANIFEST), str(params)]) == EXIT_EVALUATION
        assert "P_T" in capsys.readouterr().err

    def test_invalid_model_is_not_valued(self, tmp_path, capsys):
        document = manifest_dict()
        document["items"][0]["side"] = "EDS"
        manifest = tmp_path / "model.json"
        manifest.write_bytes(manifest_bytes(document))
        code, report = _run_json(capsys, "value", str(manifest), str(BEIJING_PARAMS))
        assert code == EXIT_INVALID
        assert "ledger" not in report

    def test_transfer_collision(self, tmp_path, capsys):
        params = tmp_path / "params.csv"
        text = BEIJING_PARAMS.read_text(encoding="utf-8") + "P_T,44,%,tabled,2018,local_study,,\n"
        params.write_text(text, encoding="utf-8")
        assert main(["value", str(BEIJING_MANIFEST), str(params)]) == EXIT_INVALID


class TestInputErrors:
    def test_missing_file(self, tmp_path, capsys):
        assert main(["value", str(tmp_path / "absent.json"), str(BEIJING_PARAMS)]) == EXIT_INPUT
        assert "esdv: error:" in capsys.readouterr().err

    def test_malformed_csv(self, tmp_path, capsys):
        params = tmp_path / "params.csv"
        params.write_text("id,value\nM,1\n", encoding="utf-8")
        assert main(["validate", str(BEIJING_MANIFEST), str(params)]) == EXIT_INPUT

    def test_malformed_manifest(self, tmp_path, capsys):
        manifest = tmp_path / "model.json"
        manifest.write_text("[]", encoding="utf-8")
        assert main(["validate", str(manifest), str(BEIJING_PARAMS)]) == EXIT_INPUT

    def test_missing_config(self, tmp_path, capsys):
        assert main(["--config", str(tmp_path / "none.yaml"), "kernels"]) == EXIT_INPUT

    def test_environment_does_not_select_config(self, tmp_path, monkeypatch, capsys):
        """Only --config names a configuration file."""
        monkeypatch.setenv("ESDV_CONFIG_PATH", str(tmp_path / "none.yaml"))
        assert main(["kernels"]) == EXIT_OK

    def test_empty_config_sections(self, tmp_path, capsys):
        config = tmp_path / "esdv.yaml"
        config.write_text("evaluation:\nsensitivity:\nlogging:\n", encoding="utf-8")
        code, report = _run_json(capsys, "--config", str(config), "value", *BEIJING)
        assert code == EXIT_OK
        assert report["ledger"]["es_total"] == pytest.approx(2.033968e11, rel=1e-9)

    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc_info:
            main(["appraise"])
        assert exc_info.value.code == 2


class TestSensitivity:
    def _argv(self, *extra):
        return [
            "sensitivity",
            str(BEIJING_MANIFEST),
            str(BEIJING_PARAMS_MC),
            "--samples",
            "40",
            "--seed",
            "7",
            "--format",
            "json",
            *extra,
        ]

    def test_report(self, capsys):
        assert main(self._argv()) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["sensitivity"]["samples"] == 40
        assert report["sensitivity"]["seed"] == 7
        assert report["sensitivity"]["elasticities"]["M"] < 0.0
        assert report["ledger"]["net"] == pytest.approx(1.9434e11, rel=1e-4)

    def test_reproducible_across_workers(self, capsys):
        main(self._argv())
        serial = capsys.readouterr().out
        main(self._argv("--workers", "3"))
        assert capsys.readouterr().out == serial

    def test_zero_samples(self, capsys):
        argv = self._argv()
        argv[argv.index("40")] = "0"
        assert main(argv) == EXIT_SENSITIVITY

    def test_item_target(self, capsys):
        assert main(self._argv("--target", "V_W")) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["sensitivity"]["elasticities"]["A_E"] == pytest.approx(8.04e9 / 8.04504e9, rel=1e-6)


class TestKernels:
    def test_listing(self, capsys):
        assert main(["kernels"]) == EXIT_OK
        listing = json.loads(capsys.readouterr().out)
        assert listing["water_deficit"]["slots"]["Pr_WE"] == "RMB/m3"
        assert listing["food_raw_material"]["strict_counts"] == {"products": 4}


class TestLoadConfig:
    def test_default_config(self):
        config = load_config()
        assert config["sensitivity"]["seed"] == 7
        assert config["report"]["format"] == "table"

    def test_explicit_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(str(tmp_path / "none.yaml"))

    def test_config_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- a\n- b\n", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            load_config(str(path))
