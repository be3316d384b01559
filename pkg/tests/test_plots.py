"""Tests for SVG chart output."""

import pytest

from src.analysis import aggregate_runs
from src.errors import ResultsParseError
from src.models import RunRecord
from src.reporting import emit_plots, parse_svg_data, render_chart
from src.storage import read_results, write_results


def _record(budget, dc, seed, mse, mode="budget_share"):
    return RunRecord(
        budget_db=budget, composition_dc=dc, mode=mode, seed=seed, n_low=2, n_high=1,
        total_cost=budget * 0.9, mse_u=mse, mse_tau=2 * mse, epochs_run=20,
    )


@pytest.fixture
def results(tmp_path):
    records = [
        _record(b, dc, s, 0.1 / b + 0.01 * dc + 0.001 * s)
        for b in (10.0, 30.0) for dc in (0.0, 0.5, 1.0) for s in (0, 1)
    ]
    records.append(_record(100.0, 1.0, 0, 0.002, mode="baseline"))
    return write_results(records, tmp_path / "results.csv")


class TestEmitPlots:
    """Tests for emit_plots."""

    def test_one_chart_per_field(self, results, tmp_path):
        """Velocity and wall-stress charts are written as SVG."""
        paths = emit_plots(results, tmp_path / "figures")
        assert [p.name for p in paths] == ["scaling_u.svg", "scaling_tau_w.svg"]
        for path in paths:
            text = path.read_text()
            assert text.startswith("<?xml")
            assert "<svg" in text

    def test_embedded_data_matches_aggregate(self, results, tmp_path):
        """The data block equals the aggregated cells to 6 decimals."""
        cells = aggregate_runs(read_results(results))
        (u_path, tau_path) = emit_plots(results, tmp_path / "figures")
        for path, field in ((u_path, "u"), (tau_path, "tau_w")):
            data = parse_svg_data(path.read_text())
            assert data["field"] == field
            assert len(data["cells"]) == len(cells)
            for (budget, dc, mean, std, n), cell in zip(data["cells"], cells):
                assert (budget, dc, n) == (cell.budget_db, cell.composition_dc, cell.n_seeds)
                assert mean == pytest.approx(cell.mean[field], abs=1e-6)
                assert std == pytest.approx(cell.std[field], abs=1e-6)
        assert parse_svg_data(u_path.read_text())["baseline"] == 0.002

    def test_deterministic(self, results, tmp_path):
        """Two renders of the same results are byte-identical."""
        a = emit_plots(results, tmp_path / "a")[0].read_bytes()
        b = emit_plots(results, tmp_path / "b")[0].read_bytes()
        assert a == b

    def test_empty_results(self, tmp_path):
        """No usable rows raises and writes nothing."""
        results = write_results([], tmp_path / "results.csv")
        out = tmp_path / "figures"
        with pytest.raises(ResultsParseError):
            emit_plots(results, out)
        assert not out.exists()


class TestRenderChart:
    """Tests for a single chart."""

    def test_single_budget_two_points(self):
        """Two cells at one budget give one line with two points."""
        cells = aggregate_runs([_record(10.0, 0.0, 0, 0.05), _record(10.0, 1.0, 0, 0.04)])
        svg = render_chart("u", cells, None)
        data = parse_svg_data(svg)
        assert [c[:2] for c in data["cells"]] == [(10.0, 0.0), (10.0, 1.0)]
        assert data["baseline"] is None
        assert "D_b = " in svg

    def test_missing_block(self):
        """A chart without a data block cannot be parsed."""
        with pytest.raises(ResultsParseError):
            parse_svg_data("<svg></svg>")
