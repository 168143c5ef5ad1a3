"""Secondary acceptance: plots consume the three preset outputs, headless,
and reruns on identical inputs are checksum-identical."""

import hashlib
import subprocess
import sys

import pytest

from figplots import SchemaError, SeriesPlotSpec, WignerPlotSpec, plot_series, plot_wigner
from figplots.cli import main_series, main_wigner


def sha256(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


@pytest.fixture(scope="session")
def preset_outputs(tmp_path_factory):
    """Smoke-scale preset artifacts, produced through the simulator CLI."""
    base = tmp_path_factory.mktemp("runs")
    for name in ("fig2", "fig3", "fig4"):
        subprocess.run(
            [sys.executable, "-m", "cavmotion.cli", "presets", name,
             "--scale", "smoke", "--out", str(base / name)],
            check=True, capture_output=True)
    return base


class TestSeriesPlots:
    def test_fig2_two_panel_projectors(self, preset_outputs, tmp_path):
        spec = SeriesPlotSpec(
            input_path=str(preset_outputs / "fig2" / "series.csv"),
            panels=[["P_coh"], ["P_coh_0", "P_coh_2"]],
            output_path=str(tmp_path / "fig2.png"))
        out = plot_series(spec)
        assert (tmp_path / "fig2.png").stat().st_size > 0
        assert out.endswith("fig2.png")

    def test_fig4_dual_axis_squeezing_negativity(self, preset_outputs, tmp_path):
        spec = SeriesPlotSpec(
            input_path=str(preset_outputs / "fig4" / "series.csv"),
            panels=[["squeezing", "negativity"]],
            output_path=str(tmp_path / "fig4.png"),
            dual_axis=True)
        plot_series(spec)
        assert (tmp_path / "fig4.png").stat().st_size > 0

    def test_missing_column_reports_schema_error(self, preset_outputs, tmp_path):
        spec = SeriesPlotSpec(
            input_path=str(preset_outputs / "fig2" / "series.csv"),
            panels=[["not_a_column"]],
            output_path=str(tmp_path / "x.png"))
        with pytest.raises(SchemaError, match="not_a_column"):
            plot_series(spec)

    def test_stderr_columns_optional(self, tmp_path):
        csv = tmp_path / "bare.csv"
        csv.write_text("time,n\n0,1\n1,0.5\n2,0.25\n")
        spec = SeriesPlotSpec(input_path=str(csv), panels=[["n"]],
                              output_path=str(tmp_path / "bare.png"))
        plot_series(spec)
        assert (tmp_path / "bare.png").stat().st_size > 0


class TestWignerPlots:
    def test_fig3_panel_grid(self, preset_outputs, tmp_path):
        inputs = [str(preset_outputs / "fig3" / f"wigner_m{m}.txt")
                  for m in (0, 2, 4, 8)]
        spec = WignerPlotSpec(input_paths=inputs, n_cols=2,
                              output_path=str(tmp_path / "fig3.png"),
                              labels=[f"m={m}" for m in (0, 2, 4, 8)])
        plot_wigner(spec)
        assert (tmp_path / "fig3.png").stat().st_size > 0

    def test_not_a_grid_rejected(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("nonsense\n")
        with pytest.raises(SchemaError):
            plot_wigner(WignerPlotSpec(input_paths=[str(bad)],
                                       output_path=str(tmp_path / "x.png")))


class TestDeterminism:
    def test_rerun_is_checksum_identical(self, preset_outputs, tmp_path):
        pairs = []
        for k in (1, 2):
            s_out = tmp_path / f"series{k}.png"
            w_out = tmp_path / f"wigner{k}.png"
            plot_series(SeriesPlotSpec(
                input_path=str(preset_outputs / "fig4" / "series.csv"),
                panels=[["squeezing", "negativity"]], dual_axis=True,
                output_path=str(s_out)))
            plot_wigner(WignerPlotSpec(
                input_paths=[str(preset_outputs / "fig3" / "wigner_m0.txt")],
                output_path=str(w_out)))
            pairs.append((sha256(s_out), sha256(w_out)))
        assert pairs[0] == pairs[1]


class TestCliEntries:
    def test_series_cli(self, preset_outputs, tmp_path):
        rc = main_series(["--input", str(preset_outputs / "fig2" / "series.csv"),
                          "--panel", "P_coh", "--panel", "P_coh_0,P_coh_2",
                          "--out", str(tmp_path / "cli2.png")])
        assert rc == 0 and (tmp_path / "cli2.png").stat().st_size > 0

    def test_wigner_cli(self, preset_outputs, tmp_path):
        rc = main_wigner(["--inputs",
                          str(preset_outputs / "fig3" / "wigner_m0.txt"),
                          str(preset_outputs / "fig3" / "wigner_m2.txt"),
                          "--out", str(tmp_path / "cli3.png")])
        assert rc == 0 and (tmp_path / "cli3.png").stat().st_size > 0

    def test_schema_error_exit_code(self, preset_outputs, tmp_path, capsys):
        rc = main_series(["--input", str(preset_outputs / "fig2" / "series.csv"),
                          "--panel", "bogus", "--out", str(tmp_path / "x.png")])
        assert rc == 1
        assert "bogus" in capsys.readouterr().err
