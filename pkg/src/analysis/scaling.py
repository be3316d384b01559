"""Seed aggregation, saturating power-law fits and fidelity-mix verdicts."""

import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import least_squares

from ..errors import ContractError, MissingBaselineError
from ..models import RunRecord
from ..utils import get_logger

logger = get_logger(__name__)

# field name -> RunRecord attribute
FIELDS = {"u": "mse_u", "tau_w": "mse_tau"}

MIN_FIT_BUDGETS = 4
ALPHA_BOUNDS = (1e-6, 10.0)
ALPHA_STARTS = (0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0)
_FLAT_A = 1e-12
_TOL = 1e-14


@dataclass(frozen=True)
class AggregateCell:
    """Seed statistics of one (budget, composition) cell."""
    budget_db: float
    composition_dc: float
    mean: dict[str, float]
    std: dict[str, float]
    n_seeds: int

    @property
    def key(self) -> tuple[float, float]:
        return self.budget_db, self.composition_dc

    def standard_error(self, field: str) -> float:
        return self.std[field] / math.sqrt(self.n_seeds)


@dataclass(frozen=True)
class ScalingFit:
    """L(D_b) = a * D_b**(-alpha) + l_inf."""
    a: float
    alpha: float
    l_inf: float
    residual: float
    fit_ok: bool
    n_budgets: int = 0

    def __call__(self, budgets) -> np.ndarray:
        b = np.asarray(budgets, dtype=float)
        return self.a * b ** (-self.alpha) + self.l_inf


@dataclass(frozen=True)
class TransferVerdict:
    field: str
    budget_db: float
    best_dc: float
    best_mean_error: float
    positive_transfer: Optional[bool]


def _cell_stats(values: list[float]) -> tuple[float, float]:
    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def aggregate_runs(records: Iterable[RunRecord]) -> list[AggregateCell]:
    """Mean and population std per (budget, composition) over seeds.

    Failed rows and the baseline row are left out; cells come back sorted by key.
    """
    groups: dict[tuple[float, float], list[RunRecord]] = defaultdict(list)
    for record in records:
        if record.ok and not record.is_baseline:
            groups[(record.budget_db, record.composition_dc)].append(record)

    cells = []
    for key in sorted(groups):
        rows = groups[key]
        means, stds = {}, {}
        for field, attr in FIELDS.items():
            means[field], stds[field] = _cell_stats([getattr(r, attr) for r in rows])
        cells.append(AggregateCell(
            budget_db=key[0], composition_dc=key[1], mean=means, std=stds, n_seeds=len(rows),
        ))
    return cells


def baseline_cell(records: Iterable[RunRecord]) -> Optional[AggregateCell]:
    """Aggregate of the full high-fidelity baseline rows, if any succeeded."""
    rows = [r for r in records if r.ok and r.is_baseline]
    if not rows:
        return None
    means, stds = {}, {}
    for field, attr in FIELDS.items():
        means[field], stds[field] = _cell_stats([getattr(r, attr) for r in rows])
    return AggregateCell(
        budget_db=rows[0].budget_db, composition_dc=1.0, mean=means, std=stds, n_seeds=len(rows),
    )


def _sse(residuals: np.ndarray) -> float:
    return math.fsum(residuals * residuals)


def _fit_saturating(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Best (A, alpha, l_inf) over the alpha start grid, in rescaled budgets."""
    def residuals(p):
        return p[0] * x ** (-p[1]) + p[2] - y

    best, best_sse = None, math.inf
    for alpha0 in ALPHA_STARTS:
        design = np.column_stack([x ** (-alpha0), np.ones_like(x)])
        (a0, l0), *_ = np.linalg.lstsq(design, y, rcond=None)
        start = [max(a0, 0.0), alpha0, max(l0, 0.0)]
        result = least_squares(
            residuals, start, method="trf",
            bounds=([0.0, ALPHA_BOUNDS[0], 0.0], [np.inf, ALPHA_BOUNDS[1], np.inf]),
            xtol=_TOL, ftol=_TOL, gtol=_TOL, max_nfev=2000,
        )
        sse = _sse(residuals(result.x))
        if sse < best_sse:
            best, best_sse = result.x, sse
    return best, best_sse


def _fit_pure(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Best (A, alpha) with the floor fixed at zero."""
    def residuals(p):
        return p[0] * x ** (-p[1]) - y

    best, best_sse = None, math.inf
    for alpha0 in ALPHA_STARTS:
        basis = x ** (-alpha0)
        a0 = math.fsum(basis * y) / math.fsum(basis * basis)
        result = least_squares(
            residuals, [max(a0, 0.0), alpha0], method="trf",
            bounds=([0.0, ALPHA_BOUNDS[0]], [np.inf, ALPHA_BOUNDS[1]]),
            xtol=_TOL, ftol=_TOL, gtol=_TOL, max_nfev=2000,
        )
        sse = _sse(residuals(result.x))
        if sse < best_sse:
            best, best_sse = result.x, sse
    return np.array([best[0], best[1], 0.0]), best_sse


def fit_power_law(points: Iterable[tuple[float, float]]) -> ScalingFit:
    """Least-squares saturating power law of error against budget.

    Budgets are rescaled by their minimum before fitting. Several alpha starts
    are tried, each seeded with the linear least-squares (a, l_inf) for that
    alpha; the pure power law is fitted the same way and wins when its residual
    is lower. Fewer than four distinct budgets give fit_ok False.
    """
    pts = sorted((float(b), float(e)) for b, e in points)
    budgets = np.array([p[0] for p in pts])
    errors = np.array([p[1] for p in pts])
    n_budgets = len(set(budgets.tolist()))

    if n_budgets < MIN_FIT_BUDGETS:
        return ScalingFit(math.nan, math.nan, math.nan, math.nan, False, n_budgets)
    if np.any(budgets <= 0) or not np.all(np.isfinite(errors)):
        raise ContractError("budgets must be positive and errors finite")

    scale = float(budgets.min())
    x = budgets / scale

    spread = float(errors.max() - errors.min())
    if spread <= 1e-12 * max(1.0, float(np.abs(errors).max())):
        level = math.fsum(errors) / errors.size
        fit = ScalingFit(_FLAT_A, ALPHA_BOUNDS[0], max(level - _FLAT_A, 0.0), 0.0, True, n_budgets)
        logger.warning(f"Constant errors ({level:.4g}); fitted a flat curve")
        return replace(fit, residual=_sse(fit(budgets) - errors))

    params, sse = _fit_saturating(x, errors)
    pure, pure_sse = _fit_pure(x, errors)
    if pure_sse < sse:
        params, sse = pure, pure_sse

    a_scaled, alpha, l_inf = (float(v) for v in params)
    return ScalingFit(
        a=a_scaled * scale**alpha,
        alpha=alpha,
        l_inf=l_inf,
        residual=sse,
        fit_ok=True,
        n_budgets=n_budgets,
    )


def _cells_at(cells: Iterable[AggregateCell], budget: float) -> list[AggregateCell]:
    return sorted((c for c in cells if c.budget_db == budget), key=lambda c: c.composition_dc)


def optimal_composition(
    cells: Iterable[AggregateCell], budget: float, field: str
) -> tuple[float, float]:
    """Composition with the lowest seed-mean error; ties go to the lower dc."""
    at_budget = _cells_at(cells, budget)
    if not at_budget:
        raise ContractError(f"no aggregate cells at budget {budget!r}")
    best = at_budget[0]
    for cell in at_budget[1:]:
        if cell.mean[field] < best.mean[field]:
            best = cell
    return best.composition_dc, best.mean[field]


def detect_positive_transfer(cells: Iterable[AggregateCell], field: str, budget: float) -> bool:
    """True when a mix with dc < 1 beats the dc = 1 mean by more than its standard error."""
    at_budget = _cells_at(cells, budget)
    baseline = next((c for c in at_budget if c.composition_dc == 1.0), None)
    if baseline is None:
        raise MissingBaselineError(f"no dc=1.0 cell at budget {budget!r}")
    threshold = baseline.mean[field] - baseline.standard_error(field)
    return any(c.mean[field] < threshold for c in at_budget if c.composition_dc < 1.0)


def transfer_verdicts(cells: list[AggregateCell]) -> list[TransferVerdict]:
    """Best mix and transfer verdict per field and budget."""
    verdicts = []
    for field in FIELDS:
        for budget in sorted({c.budget_db for c in cells}):
            best_dc, best_err = optimal_composition(cells, budget, field)
            try:
                positive = detect_positive_transfer(cells, field, budget)
            except MissingBaselineError:
                logger.warning(f"No dc=1.0 cell at budget {budget:g}; transfer not assessed")
                positive = None
            verdicts.append(TransferVerdict(field, budget, best_dc, best_err, positive))
    return verdicts


def fit_cells(cells: list[AggregateCell]) -> dict[tuple[str, float], ScalingFit]:
    """One power law per (field, composition) across budgets."""
    fits = {}
    for field in FIELDS:
        for dc in sorted({c.composition_dc for c in cells}):
            points = [(c.budget_db, c.mean[field]) for c in cells if c.composition_dc == dc]
            fits[(field, dc)] = fit_power_law(points)
    return fits
