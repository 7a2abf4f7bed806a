"""Unit tests for the command-line surface: parsing, configuration merging,
exit codes, error payloads and the artifacts of each subcommand.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pandas as pd
import pytest
from aipw.cli import ESTIMATE_COLUMNS, build_parser, load_run_config, load_scenario_config, main
from aipw.config.settings import get_settings
from aipw.longitudinal_data import export_long_csv
from aipw.models import Construct, DatasetSchema
from aipw.shared.errors import ModelSpecificationError

from tests.conftest import make_dropout_panel, make_tiny_panel

RUN_CONFIG = {"columns": {"baseline": ["x1", "x2"]}, "arm": "x2"}


@pytest.fixture(scope="module")
def panel_csv(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Raw dropout panel written as a long CSV."""
    path = tmp_path_factory.mktemp("data") / "panel.csv"
    export_long_csv(make_dropout_panel(n=200), path)
    return path


def _write_config(directory: Path, payload: dict[str, Any]) -> Path:
    path = directory / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def _error(out: Path) -> dict[str, Any]:
    return json.loads((out / "error.json").read_text(encoding="utf-8"))


def _metadata(out: Path) -> dict[str, Any]:
    return json.loads((out / "metadata.json").read_text(encoding="utf-8"))


# ── Parsing and configuration ─────────────────────────────────────────


class TestParser:
    """Argument parsing."""

    def test_subcommand_required(self) -> None:
        """A bare invocation is a usage error."""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_construct_flag(self) -> None:
        """``--construct`` parses to the enum."""
        args = build_parser().parse_args(["simulate", "--construct", "extreme", "--seed", "3"])

        assert args.construct is Construct.EXTREME
        assert args.seed == 3

    def test_unknown_method(self) -> None:
        """Method names are restricted to the supported set."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["estimate", "--method", "locf"])


class TestLoadConfig:
    """Merging JSON configuration with flags."""

    def test_flags_win(self, tmp_path: Path) -> None:
        """Command-line values override the file."""
        path = _write_config(tmp_path, {**RUN_CONFIG, "method": "paik", "seed": 1})
        cfg = load_run_config(path, method="gee", seed=9, fill_gaps=True)

        assert cfg.method == "gee"
        assert cfg.seed == 9
        assert cfg.fill_gaps is True
        assert cfg.columns == DatasetSchema(baseline=("x1", "x2"))
        assert cfg.threads == get_settings().threads

    def test_defaults_without_file(self) -> None:
        """No file means the model defaults."""
        cfg = load_run_config(None)

        assert cfg.method == "aipw-i"
        assert cfg.input is None
        assert cfg.bootstrap is None

    def test_non_object_file(self, tmp_path: Path) -> None:
        """The file must hold a JSON object."""
        path = tmp_path / "config.json"
        path.write_text("[1, 2]", encoding="utf-8")

        with pytest.raises(ModelSpecificationError, match="JSON object"):
            load_run_config(path)

    def test_scenario_method_flag(self) -> None:
        """A single ``--method`` restricts the scenario methods."""
        cfg = load_scenario_config(None, method="gee", replicates=5, construct=Construct.EXTREME)

        assert cfg.methods == ("gee",)
        assert cfg.bootstrap == 5
        assert cfg.construct_kind is Construct.EXTREME


# ── Exit codes ────────────────────────────────────────────────────────


class TestExitCodes:
    """Domain errors become exit codes and ``error.json``."""

    def test_missing_input(self, tmp_path: Path) -> None:
        """Estimating without input is a specification error."""
        out = tmp_path / "out"

        assert main(["estimate", "--out", str(out)]) == 2
        payload = _error(out)
        assert payload["code"] == "model_specification"
        assert payload["category"] == "validation"
        assert payload["exit_code"] == 2

    def test_non_monotone(self, tmp_path: Path) -> None:
        """Intermittent gaps are refused without ``--fill-gaps``."""
        csv = tmp_path / "gaps.csv"
        export_long_csv(make_tiny_panel([[1.0, float("nan"), 3.0], [1.0, 2.0, 3.0]]), csv)
        out = tmp_path / "out"

        assert main(["validate", "--input", str(csv), "--out", str(out)]) == 2
        assert _error(out)["code"] == "non_monotone"

    def test_invalid_configuration(self, tmp_path: Path, panel_csv: Path) -> None:
        """One bootstrap replicate fails configuration validation."""
        out = tmp_path / "out"

        code = main(["estimate", "--input", str(panel_csv), "--bootstrap", "1", "--out", str(out)])
        assert code == 2
        payload = _error(out)
        assert payload["code"] == "config_validation"
        assert payload["details"]["errors"][0]["loc"] == ["bootstrap"]

    def test_unreadable_input(self, tmp_path: Path) -> None:
        """A missing file is an I/O error."""
        out = tmp_path / "out"

        assert main(["validate", "--input", str(tmp_path / "absent.csv"), "--out", str(out)]) == 2
        assert _error(out)["code"] == "io"

    def test_estimation_failure(self, tmp_path: Path, panel_csv: Path) -> None:
        """A positivity violation exits 3."""
        config = _write_config(tmp_path, {**RUN_CONFIG, "positivity_floor": 0.999})
        out = tmp_path / "out"

        code = main(
            ["estimate", "--input", str(panel_csv), "--config", str(config), "--out", str(out)]
        )
        assert code == 3
        payload = _error(out)
        assert payload["code"] == "positivity"
        assert payload["category"] == "convergence"


# ── Subcommands ───────────────────────────────────────────────────────


class TestValidateCommand:
    """Panel checks and summaries."""

    def test_artifacts(
        self, tmp_path: Path, panel_csv: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Summaries and metadata are written; a synopsis goes to stdout."""
        out = tmp_path / "out"

        assert main(["validate", "--input", str(panel_csv), "--out", str(out)]) == 0
        metadata = _metadata(out)
        assert metadata["command"] == "validate"
        assert metadata["artifacts"] == ["summary.csv", "summary_by_completion.csv"]
        assert metadata["switches"]["nonmonotone_subjects"] == 0
        assert metadata["switches"]["time_codes"] == [0.0, 1.0, 2.0]
        assert "200 subjects, 3 visits" in capsys.readouterr().out


class TestImputeCommand:
    """Completed data and diagnostics."""

    def test_aipw_i_artifacts(self, tmp_path: Path, panel_csv: Path) -> None:
        """Completed data, comparison, weights and both model tables."""
        config = _write_config(tmp_path, RUN_CONFIG)
        out = tmp_path / "out"

        code = main(
            ["impute", "--input", str(panel_csv), "--config", str(config), "--out", str(out)]
        )
        assert code == 0
        assert _metadata(out)["artifacts"] == [
            "completed.csv",
            "comparison.csv",
            "weights.csv",
            "hazard_models.csv",
            "sequential_models.csv",
        ]
        completed = pd.read_csv(out / "completed.csv")
        assert len(completed) == 200 * 3
        assert completed["y"].notna().all()
        assert set(completed["provenance"]) <= {"observed", "imputed:aipw-i"}
        assert "imputed:aipw-i" in set(completed["provenance"])

    def test_non_imputation_method(self, tmp_path: Path, panel_csv: Path) -> None:
        """GEE has nothing to impute."""
        out = tmp_path / "out"

        code = main(["impute", "--input", str(panel_csv), "--method", "gee", "--out", str(out)])
        assert code == 2
        assert _error(out)["code"] == "model_specification"


class TestEstimateCommand:
    """Estimate tables from raw and completed input."""

    def test_model_standard_errors(self, tmp_path: Path, panel_csv: Path) -> None:
        """Without bootstrap GEE reports sandwich SEs; mean_last has none."""
        config = _write_config(tmp_path, RUN_CONFIG)
        out = tmp_path / "out"

        code = main(
            [
                "estimate",
                "--input",
                str(panel_csv),
                "--config",
                str(config),
                "--method",
                "gee",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        table = pd.read_csv(out / "estimates.csv", keep_default_na=False, na_values=["NA"])
        assert list(table.columns) == list(ESTIMATE_COLUMNS)
        assert list(table["estimand"]) == ["1", "x1", "x2", "t", "x2:t", "mean_last"]
        rows = table.set_index("estimand")
        assert rows.loc["x1", "se_source"] == "robust"
        assert rows.loc["x1", "lower"] < rows.loc["x1", "estimate"] < rows.loc["x1", "upper"]
        assert pd.isna(rows.loc["mean_last", "se"])
        assert rows.loc["mean_last", "se_source"] == ""
        assert (out / "fit_summary.csv").exists()
        assert _metadata(out)["switches"]["input"] == "raw"

    def test_bootstrap(self, tmp_path: Path, panel_csv: Path) -> None:
        """Bootstrap SEs replace the model SEs and the replicates are kept."""
        config = _write_config(tmp_path, RUN_CONFIG)
        out = tmp_path / "out"

        argv = ["estimate", "--input", str(panel_csv), "--config", str(config)]
        argv += ["--method", "gee", "--bootstrap", "5", "--seed", "4", "--out", str(out)]
        assert main(argv) == 0
        table = pd.read_csv(out / "estimates.csv", keep_default_na=False, na_values=["NA"])
        assert set(table["se_source"]) == {"bootstrap"}
        replicates = pd.read_csv(out / "bootstrap_replicates.csv")
        assert len(replicates) == 5 * 6
        assert _metadata(out)["seed"] == 4

    def test_bootstrap_on_completed_input(self, tmp_path: Path, panel_csv: Path) -> None:
        """Completed data cannot be bootstrapped."""
        config = _write_config(tmp_path, RUN_CONFIG)
        imputed = tmp_path / "imputed"
        argv = ["--input", str(panel_csv), "--config", str(config)]
        assert main(["impute", *argv, "--out", str(imputed)]) == 0
        out = tmp_path / "out"

        completed_argv = ["--input", str(imputed / "completed.csv"), "--config", str(config)]
        code = main(["estimate", *completed_argv, "--bootstrap", "5", "--out", str(out)])
        assert code == 2
        assert "raw panel" in _error(out)["message"]
