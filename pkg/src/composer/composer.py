"""Budget-constrained composition of multi-fidelity training sets.

Counts are estimated from average costs, samples are drawn at random per
fidelity, and a greedy repair pass restores feasibility and then fills the
remaining slack.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ..errors import SelectionError
from ..models import CompositionMode, CostModel, DatasetBudgetSpec, FidelityLevel
from ..solver.pool import SamplePool
from ..utils import get_logger, save_json

logger = get_logger(__name__)

# Guards floor() against quotients like 67/13.4 landing just below an integer
_COUNT_EPS = 1e-9

_LEVEL_ORDER = {FidelityLevel.LOW: 0, FidelityLevel.HIGH: 1}


@dataclass(frozen=True)
class Selection:
    """Chosen pool samples per fidelity."""
    low_ids: tuple[int, ...]
    high_ids: tuple[int, ...]
    total_cost: float
    achieved_dc: float

    @property
    def n_low(self) -> int:
        return len(self.low_ids)

    @property
    def n_high(self) -> int:
        return len(self.high_ids)

    def __len__(self) -> int:
        return self.n_low + self.n_high

    def items(self) -> list[tuple[int, FidelityLevel]]:
        return [(cid, FidelityLevel.LOW) for cid in self.low_ids] + [
            (cid, FidelityLevel.HIGH) for cid in self.high_ids
        ]

    def case_ids(self) -> set[int]:
        return set(self.low_ids) | set(self.high_ids)


def estimate_counts(spec: DatasetBudgetSpec, costs: CostModel) -> tuple[int, int]:
    """Sample counts (n_low, n_high) whose expected cost fits the budget."""
    db, dc = spec.budget_db, spec.composition_dc

    if spec.mode is CompositionMode.BUDGET_SHARE:
        n_high = math.floor(dc * db / costs.avg_cost_high + _COUNT_EPS)
        n_low = math.floor((1.0 - dc) * db / costs.avg_cost_low + _COUNT_EPS)
        return n_low, n_high

    per_sample = dc * costs.avg_cost_high + (1.0 - dc) * costs.avg_cost_low
    total = math.floor(db / per_sample + _COUNT_EPS)
    while total > 0:
        n_high = math.floor(dc * total + 0.5)
        n_low = total - n_high
        if n_low * costs.avg_cost_low + n_high * costs.avg_cost_high <= db * (1 + _COUNT_EPS):
            return n_low, n_high
        total -= 1
    return 0, 0


def _share(cost_low: float, cost_high: float, n_low: int, n_high: int,
           mode: CompositionMode) -> float:
    if mode is CompositionMode.COUNT_SHARE:
        n = n_low + n_high
        return n_high / n if n else 0.0
    total = cost_low + cost_high
    return cost_high / total if total else 0.0


class _Working:
    """Mutable selection state used by the repair and fill phases."""

    def __init__(self, pool: SamplePool, low_ids: Iterable[int], high_ids: Iterable[int]):
        self.pool = pool
        self.chosen = {
            FidelityLevel.LOW: set(low_ids),
            FidelityLevel.HIGH: set(high_ids),
        }

    def cost_of(self, level: FidelityLevel) -> int:
        return sum(self.pool.cost(cid, level) for cid in self.chosen[level])

    @property
    def total(self) -> int:
        return self.cost_of(FidelityLevel.LOW) + self.cost_of(FidelityLevel.HIGH)

    def share(self, mode: CompositionMode) -> float:
        return _share(
            self.cost_of(FidelityLevel.LOW), self.cost_of(FidelityLevel.HIGH),
            len(self.chosen[FidelityLevel.LOW]), len(self.chosen[FidelityLevel.HIGH]), mode,
        )

    def freeze(self, mode: CompositionMode) -> Selection:
        return Selection(
            low_ids=tuple(sorted(self.chosen[FidelityLevel.LOW])),
            high_ids=tuple(sorted(self.chosen[FidelityLevel.HIGH])),
            total_cost=float(self.total),
            achieved_dc=self.share(mode),
        )


def _repair(state: _Working, spec: DatasetBudgetSpec) -> None:
    """Remove samples until the selection fits the budget."""
    while state.total > spec.budget_db:
        share_high = state.share(spec.mode)
        excess_high = share_high - spec.composition_dc
        excess_low = -excess_high
        candidates = [lvl for lvl in FidelityLevel if state.chosen[lvl]]
        if excess_high >= excess_low and FidelityLevel.HIGH in candidates:
            level = FidelityLevel.HIGH
        elif FidelityLevel.LOW in candidates:
            level = FidelityLevel.LOW
        else:
            level = candidates[0]

        overshoot = state.total - spec.budget_db
        members = sorted(state.chosen[level], key=lambda cid: (state.pool.cost(cid, level), cid))
        restoring = [cid for cid in members if state.pool.cost(cid, level) >= overshoot]
        if restoring:
            victim = restoring[0]
        else:
            top = max(state.pool.cost(cid, level) for cid in members)
            victim = min(cid for cid in members if state.pool.cost(cid, level) == top)
        state.chosen[level].discard(victim)


def _fill(state: _Working, spec: DatasetBudgetSpec) -> None:
    """Add the best-fitting unselected samples until nothing fits the slack."""
    pool = state.pool
    cost_low = state.cost_of(FidelityLevel.LOW)
    cost_high = state.cost_of(FidelityLevel.HIGH)

    while True:
        slack = spec.budget_db - (cost_low + cost_high)
        best_key, best_item = None, None
        for level in FidelityLevel:
            chosen = state.chosen[level]
            for cid in pool.case_ids:
                if cid in chosen:
                    continue
                cost = pool.cost(cid, level)
                if cost > slack:
                    continue
                high = level is FidelityLevel.HIGH
                share = _share(
                    cost_low + (0 if high else cost),
                    cost_high + (cost if high else 0),
                    len(state.chosen[FidelityLevel.LOW]) + (0 if high else 1),
                    len(state.chosen[FidelityLevel.HIGH]) + (1 if high else 0),
                    spec.mode,
                )
                key = (abs(share - spec.composition_dc), cost, cid, _LEVEL_ORDER[level])
                if best_key is None or key < best_key:
                    best_key, best_item = key, (cid, level)
        if best_item is None:
            return
        cid, level = best_item
        state.chosen[level].add(cid)
        if level is FidelityLevel.HIGH:
            cost_high += pool.cost(cid, level)
        else:
            cost_low += pool.cost(cid, level)


def greedy_repair(selection: Selection, pool: SamplePool, spec: DatasetBudgetSpec) -> Selection:
    """Make a selection feasible, then maximal. Idempotent."""
    state = _Working(pool, selection.low_ids, selection.high_ids)
    _repair(state, spec)
    _fill(state, spec)
    return state.freeze(spec.mode)


def compose_dataset(pool: SamplePool, spec: DatasetBudgetSpec, seed: int) -> Selection:
    """Compose a training set for (D_b, D_c) from the pool.

    Estimates counts from the pool's average costs, draws that many samples
    per fidelity without replacement (all of them when the pool is short),
    then runs the greedy repair.
    """
    if len(pool) == 0:
        raise SelectionError("cannot compose from an empty pool")
    cheapest = min(pool.cost(cid, lvl) for cid in pool.case_ids for lvl in FidelityLevel)
    if spec.budget_db < cheapest:
        raise SelectionError(
            f"budget {spec.budget_db:g} cannot afford the cheapest sample ({cheapest})"
        )

    n_low, n_high = estimate_counts(spec, pool.cost_model)
    rng = np.random.default_rng(seed)
    ids = np.array(pool.case_ids)
    high_draw = ids[rng.permutation(ids.size)[: min(n_high, ids.size)]]
    low_draw = ids[rng.permutation(ids.size)[: min(n_low, ids.size)]]

    drawn = Selection(
        low_ids=tuple(sorted(int(i) for i in low_draw)),
        high_ids=tuple(sorted(int(i) for i in high_draw)),
        total_cost=0.0,
        achieved_dc=0.0,
    )
    selection = greedy_repair(drawn, pool, spec)
    if len(selection) == 0:
        raise SelectionError(f"no feasible selection for budget {spec.budget_db:g}")

    logger.debug(
        f"Composed D_b={spec.budget_db:g} D_c={spec.composition_dc:g}: "
        f"estimated {n_low}L/{n_high}H, selected {selection.n_low}L/{selection.n_high}H, "
        f"cost {selection.total_cost:g}"
    )
    return selection


def save_selection(
    selection: Selection,
    pool: SamplePool,
    spec: DatasetBudgetSpec,
    seed: int,
    path: Path,
) -> None:
    """Write (case_id, fidelity, cost) rows plus totals as JSON."""
    rows = [
        {"case_id": cid, "fidelity": level.value, "cost": pool.cost(cid, level)}
        for cid, level in sorted(selection.items(), key=lambda it: (it[0], _LEVEL_ORDER[it[1]]))
    ]
    save_json({
        "budget_db": spec.budget_db,
        "composition_dc": spec.composition_dc,
        "mode": spec.mode.value,
        "seed": seed,
        "rows": rows,
        "n_low": selection.n_low,
        "n_high": selection.n_high,
        "total_cost": selection.total_cost,
        "achieved_dc": selection.achieved_dc,
    }, path)
