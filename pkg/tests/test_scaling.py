"""Tests for seed aggregation, power-law fits and transfer verdicts."""

import math
import random

import numpy as np
import pytest

from src.analysis import (
    AggregateCell,
    aggregate_runs,
    analyze_results,
    detect_positive_transfer,
    fit_power_law,
    optimal_composition,
    transfer_verdicts,
)
from src.analysis.scaling import baseline_cell, fit_cells
from src.errors import ContractError, MissingBaselineError, ResultsParseError
from src.models import RunRecord
from src.storage import write_results

BUDGETS = [1.0, 2.0, 4.0, 8.0, 16.0]


def _record(budget, dc, seed, mse_u, mse_tau=None, mode="budget_share", status="ok"):
    return RunRecord(
        budget_db=budget, composition_dc=dc, mode=mode, seed=seed, n_low=1, n_high=1,
        total_cost=budget / 2, mse_u=mse_u, mse_tau=mse_u if mse_tau is None else mse_tau,
        epochs_run=10, status=status,
    )


def _cell(dc, mean, std=0.0, n=4, budget=100.0):
    return AggregateCell(
        budget_db=budget, composition_dc=dc,
        mean={"u": mean, "tau_w": mean}, std={"u": std, "tau_w": std}, n_seeds=n,
    )


def _curve(a, alpha, l_inf, budgets):
    return [(b, a * b ** (-alpha) + l_inf) for b in budgets]


class TestAggregateRuns:
    """Tests for aggregate_runs."""

    def test_single_record(self):
        """One record gives its value with zero spread."""
        (cell,) = aggregate_runs([_record(10.0, 0.5, 0, 0.7)])
        assert cell.mean["u"] == 0.7
        assert cell.std["u"] == 0.0
        assert cell.n_seeds == 1

    def test_population_std(self):
        """Values {0.2, 0.4} give mean 0.3 and std 0.1."""
        (cell,) = aggregate_runs([_record(10.0, 0.5, 0, 0.2), _record(10.0, 0.5, 1, 0.4)])
        assert cell.mean["u"] == pytest.approx(0.3)
        assert cell.std["u"] == pytest.approx(0.1)
        assert cell.standard_error("u") == pytest.approx(0.1 / math.sqrt(2))

    def test_order_and_seed_labels_irrelevant(self):
        """Permuting rows or relabeling seeds changes nothing."""
        records = [_record(b, dc, s, 0.1 * (1 + s) + b / 100 + dc)
                   for b in (10.0, 20.0) for dc in (0.0, 1.0) for s in range(3)]
        shuffled = records[:]
        random.Random(0).shuffle(shuffled)
        relabeled = [r.model_copy(update={"seed": r.seed + 10}) for r in records]
        assert aggregate_runs(records) == aggregate_runs(shuffled) == aggregate_runs(relabeled)

    def test_baseline_and_failures_excluded(self):
        """Baseline and failed rows stay out of the grid cells."""
        records = [
            _record(10.0, 0.5, 0, 0.2),
            _record(10.0, 0.5, 1, math.nan, mode="budget_share", status="failed: SelectionError"),
            _record(50.0, 1.0, 0, 0.05, mode="baseline"),
        ]
        cells = aggregate_runs(records)
        assert [c.key for c in cells] == [(10.0, 0.5)]
        assert cells[0].n_seeds == 1
        base = baseline_cell(records)
        assert base.budget_db == 50.0
        assert base.mean["u"] == 0.05

    def test_no_baseline(self):
        """Without a baseline row there is no baseline cell."""
        assert baseline_cell([_record(10.0, 0.5, 0, 0.2)]) is None


class TestFitPowerLaw:
    """Tests for fit_power_law."""

    def test_exact_recovery(self):
        """Noiseless data from (2.0, 0.5, 0.1) is recovered to 1e-6."""
        fit = fit_power_law(_curve(2.0, 0.5, 0.1, BUDGETS))
        assert fit.fit_ok
        assert fit.a == pytest.approx(2.0, abs=1e-6)
        assert fit.alpha == pytest.approx(0.5, abs=1e-6)
        assert fit.l_inf == pytest.approx(0.1, abs=1e-6)
        assert fit.residual < 1e-12

    def test_exact_recovery_large_budgets(self):
        """Rescaling by the smallest budget keeps large budgets well conditioned."""
        budgets = [b * 1000.0 for b in BUDGETS]
        fit = fit_power_law(_curve(50.0, 0.8, 0.02, budgets))
        assert fit.alpha == pytest.approx(0.8, abs=1e-6)
        assert fit.a == pytest.approx(50.0, rel=1e-5)
        assert fit.l_inf == pytest.approx(0.02, abs=1e-7)

    def test_pure_power_law(self):
        """Data without a floor fits l_inf = 0."""
        fit = fit_power_law(_curve(3.0, 1.2, 0.0, BUDGETS))
        assert fit.alpha == pytest.approx(1.2, abs=1e-6)
        assert fit.l_inf == pytest.approx(0.0, abs=1e-9)
        assert fit.residual < 1e-12

    def test_noisy_alpha_recovery(self):
        """With +/-1% noise alpha lands within 0.05 in at least 90% of 50 trials."""
        clean = np.array([e for _, e in _curve(2.0, 0.5, 0.1, BUDGETS)])
        hits = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            noisy = clean * (1.0 + rng.uniform(-0.01, 0.01, size=clean.size))
            fit = fit_power_law(zip(BUDGETS, noisy))
            hits += abs(fit.alpha - 0.5) <= 0.05
        assert hits >= 45

    def test_constant_errors_flat(self):
        """Constant errors give a flat curve with alpha at its lower bound."""
        fit = fit_power_law([(b, 0.3) for b in BUDGETS])
        assert fit.fit_ok
        assert fit.alpha == pytest.approx(1e-6)
        np.testing.assert_allclose(fit(BUDGETS), 0.3, atol=1e-9)

    def test_too_few_budgets(self):
        """Three budgets are not enough to fit."""
        fit = fit_power_law(_curve(2.0, 0.5, 0.1, [1.0, 2.0, 4.0]))
        assert not fit.fit_ok
        assert math.isnan(fit.alpha)
        assert fit.n_budgets == 3

    def test_repeated_budgets_count_once(self):
        """Duplicate budgets do not count as distinct."""
        points = _curve(2.0, 0.5, 0.1, [1.0, 1.0, 2.0, 2.0, 4.0])
        assert not fit_power_law(points).fit_ok

    def test_non_positive_budget(self):
        """Budgets must be positive."""
        with pytest.raises(ContractError):
            fit_power_law([(0.0, 1.0), (1.0, 0.5), (2.0, 0.4), (4.0, 0.3)])

    def test_fit_cells_per_composition(self):
        """fit_cells fits every (field, composition) pair."""
        cells = [_cell(dc, 2.0 * b ** -0.5 + 0.1, budget=b) for dc in (0.0, 1.0) for b in BUDGETS]
        fits = fit_cells(cells)
        assert set(fits) == {(f, dc) for f in ("u", "tau_w") for dc in (0.0, 1.0)}
        assert fits[("u", 1.0)].alpha == pytest.approx(0.5, abs=1e-6)


class TestOptimalComposition:
    """Tests for optimal_composition."""

    def test_monotone_decreasing(self):
        """Error falling with dc picks the largest dc."""
        cells = [_cell(0.0, 0.5), _cell(0.5, 0.3), _cell(1.0, 0.1)]
        assert optimal_composition(cells, 100.0, "u") == (1.0, 0.1)

    def test_u_shape(self):
        """U-shaped errors pick the interior minimum."""
        cells = [_cell(0.25, 0.10), _cell(0.5, 0.08), _cell(1.0, 0.09)]
        assert optimal_composition(cells, 100.0, "u")[0] == 0.5

    def test_tie_takes_lower_dc(self):
        """An exact tie goes to the lower composition."""
        cells = [_cell(1.0, 0.08), _cell(0.5, 0.08)]
        assert optimal_composition(cells, 100.0, "u")[0] == 0.5

    def test_rescale_invariant(self):
        """Scaling all errors by a positive constant keeps the argmin."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            errors = rng.uniform(0.01, 1.0, size=5)
            dcs = [0.0, 0.25, 0.5, 0.75, 1.0]
            cells = [_cell(dc, float(e)) for dc, e in zip(dcs, errors)]
            scaled = [_cell(dc, float(e) * 7.5) for dc, e in zip(dcs, errors)]
            assert optimal_composition(cells, 100.0, "u")[0] == \
                optimal_composition(scaled, 100.0, "u")[0]

    def test_other_budget_ignored(self):
        """Only cells at the requested budget compete."""
        cells = [_cell(0.0, 0.01, budget=50.0), _cell(1.0, 0.2)]
        assert optimal_composition(cells, 100.0, "u")[0] == 1.0

    def test_no_cells(self):
        """An unknown budget is a contract error."""
        with pytest.raises(ContractError):
            optimal_composition([_cell(1.0, 0.1)], 5.0, "u")


class TestPositiveTransfer:
    """Tests for detect_positive_transfer."""

    def test_all_worse(self):
        """No mix beats the baseline."""
        cells = [_cell(0.0, 0.3), _cell(0.5, 0.2), _cell(1.0, 0.1, std=0.02)]
        assert detect_positive_transfer(cells, "u", 100.0) is False

    def test_clear_gain(self):
        """A mix well below baseline minus one standard error is positive transfer."""
        cells = [_cell(0.5, 0.05), _cell(1.0, 0.1, std=0.02, n=4)]
        assert detect_positive_transfer(cells, "u", 100.0) is True

    def test_within_margin(self):
        """A gain smaller than one standard error does not count."""
        cells = [_cell(0.5, 0.095), _cell(1.0, 0.1, std=0.02, n=4)]
        assert detect_positive_transfer(cells, "u", 100.0) is False

    def test_infinite_variance_baseline(self):
        """An infinitely uncertain baseline never shows transfer."""
        cells = [_cell(0.0, 1e-9), _cell(1.0, 0.1, std=math.inf)]
        assert detect_positive_transfer(cells, "u", 100.0) is False

    def test_missing_baseline(self):
        """Without a dc=1 cell there is nothing to compare against."""
        with pytest.raises(MissingBaselineError):
            detect_positive_transfer([_cell(0.5, 0.1)], "u", 100.0)

    def test_verdicts_without_baseline(self):
        """Verdicts mark budgets without a dc=1 cell as not assessed."""
        cells = [_cell(0.5, 0.1), _cell(0.0, 0.2, budget=200.0), _cell(1.0, 0.3, budget=200.0)]
        verdicts = transfer_verdicts(cells)
        by_key = {(v.field, v.budget_db): v for v in verdicts}
        assert by_key[("u", 100.0)].positive_transfer is None
        assert by_key[("u", 200.0)].positive_transfer is True
        assert by_key[("tau_w", 200.0)].best_dc == 0.0


class TestAnalyzeResults:
    """Tests for the analyze step."""

    def test_writes_tables(self, tmp_path):
        """Aggregate, fit, verdict and summary files are written."""
        records = [
            _record(b, dc, s, (2.0 * b ** -0.5 + 0.1) * (1 + 0.01 * s) * (1.5 - dc / 2))
            for b in BUDGETS for dc in (0.0, 1.0) for s in range(2)
        ]
        records.append(_record(32.0, 1.0, 0, 0.2, mode="baseline"))
        results = write_results(records, tmp_path / "results.csv")

        analysis = analyze_results(results, tmp_path / "analysis")
        assert len(analysis.cells) == 10
        assert analysis.baseline.budget_db == 32.0
        assert analysis.fits[("u", 0.0)].fit_ok
        text = analysis.paths["summary"].read_text()
        assert "Full high-fidelity baseline" in text
        assert analysis.paths["aggregate"].read_text().count("\n") == 21

    def test_no_usable_rows(self, tmp_path):
        """A results file with only failed rows cannot be analyzed."""
        failed = _record(10.0, 0.5, 0, math.nan, status="failed: ContractError")
        results = write_results([failed], tmp_path / "results.csv")
        with pytest.raises(ResultsParseError):
            analyze_results(results, tmp_path / "analysis")
