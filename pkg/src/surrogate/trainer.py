"""Training and inference of the field/scalar surrogate pair."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..composer import Selection
from ..config import NetworkConfig, TrainConfig
from ..errors import ContractError, SelectionError
from ..models import Activation, FidelityLevel, FlowCase
from ..solver.mesh import Mesh
from ..solver.pool import SamplePool
from ..utils import get_logger
from .network import DenseLayer, copy_network, forward, init_network, loss_and_grad, parameters
from .optimizer import AdamW, WarmupCosineSchedule, clip_grad_norm

logger = get_logger(__name__)

FIELD_INPUTS = ("log10_y", "log10_re_delta", "beta_p")
SCALAR_INPUTS = ("log10_re_delta", "beta_p")
LABEL_INPUT = "fidelity"
VALIDATE_ON_TRAIN = "validation_on_training_set"

_CONSTANT_RTOL = 1e-12
_RANGE_RTOL = 1e-9


def fidelity_label(level: FidelityLevel) -> float:
    return 1.0 if level is FidelityLevel.HIGH else 0.0


def field_features(
    node_y: np.ndarray, re_delta: float, beta_p: float, label: Optional[float] = None
) -> np.ndarray:
    """One row per node: (log10 y, log10 re_delta, beta_p[, label])."""
    y = np.asarray(node_y, dtype=float)
    cols = [np.log10(y), np.full(y.size, math.log10(re_delta)), np.full(y.size, float(beta_p))]
    if label is not None:
        cols.append(np.full(y.size, label))
    return np.column_stack(cols)


def scalar_features(re_delta: float, beta_p: float, label: Optional[float] = None) -> np.ndarray:
    row = [math.log10(re_delta), float(beta_p)]
    if label is not None:
        row.append(label)
    return np.array([row])


@dataclass(frozen=True, eq=False)
class NormalizationStats:
    """Per-column z-score parameters."""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, data: np.ndarray) -> tuple["NormalizationStats", list[int]]:
        """Column stats of data; constant columns get std 1 and are returned by index."""
        mean = data.mean(axis=0)
        std = data.std(axis=0)
        constant = [
            i for i in range(std.size)
            if std[i] <= _CONSTANT_RTOL * max(1.0, abs(float(mean[i])))
        ]
        std = std.copy()
        std[constant] = 1.0
        return cls(mean=mean, std=std), constant

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        return z * self.std + self.mean


@dataclass(eq=False)
class TrainedModel:
    """Trained networks plus everything needed to query them."""
    field_net: list[DenseLayer]
    scalar_net: list[DenseLayer]
    activation: Activation
    fidelity_label: bool
    field_inputs: NormalizationStats
    field_output: NormalizationStats
    scalar_inputs: NormalizationStats
    scalar_output: NormalizationStats
    field_input_range: tuple[np.ndarray, np.ndarray]
    scalar_input_range: tuple[np.ndarray, np.ndarray]
    best_val_loss: float
    epochs_run: int
    flags: list[str] = field(default_factory=list)
    best_epoch: int = 0
    final_train_loss: float = math.nan
    val_history: list[float] = field(default_factory=list)
    train_items: list[tuple[int, FidelityLevel]] = field(default_factory=list)
    val_items: list[tuple[int, FidelityLevel]] = field(default_factory=list)


@dataclass
class Prediction:
    u: np.ndarray
    tau_w: float
    extrapolated: bool = False


@dataclass
class _Rows:
    field_x: np.ndarray
    field_y: np.ndarray
    scalar_x: np.ndarray
    scalar_y: np.ndarray


def _build_rows(
    pool: SamplePool, items: list[tuple[int, FidelityLevel]], use_label: bool
) -> _Rows:
    fx, fy, sx, sy = [], [], [], []
    for cid, level in items:
        solution = pool.solution(cid, level)
        case = pool.case(cid)
        label = fidelity_label(level) if use_label else None
        fx.append(field_features(solution.mesh.node_y, case.re_delta, case.beta_p, label))
        fy.append(np.asarray(solution.u, dtype=float).reshape(-1, 1))
        sx.append(scalar_features(case.re_delta, case.beta_p, label))
        sy.append([[solution.tau_w]])
    return _Rows(
        field_x=np.vstack(fx),
        field_y=np.vstack(fy),
        scalar_x=np.vstack(sx),
        scalar_y=np.array(sy, dtype=float).reshape(-1, 1),
    )


def _split_items(
    items: list[tuple[int, FidelityLevel]], val_fraction: float, rng: np.random.Generator
) -> tuple[list, list, bool]:
    n = len(items)
    n_val = int(round(val_fraction * n))
    if n_val == 0 or n_val >= n:
        return items, items, True
    order = rng.permutation(n)
    val_idx = set(int(i) for i in order[:n_val])
    train_items = [it for i, it in enumerate(items) if i not in val_idx]
    val_items = [it for i, it in enumerate(items) if i in val_idx]
    return train_items, val_items, False


def _loss(
    field_net: list[DenseLayer], scalar_net: list[DenseLayer], rows: _Rows, activation: Activation
) -> float:
    field_pred = forward(field_net, rows.field_x, activation)
    scalar_pred = forward(scalar_net, rows.scalar_x, activation)
    field_mse = np.mean((field_pred - rows.field_y) ** 2)
    return float(field_mse + np.mean((scalar_pred - rows.scalar_y) ** 2))


def _flag_constants(flags: list[str], prefix: str, names: tuple[str, ...], constant: list[int]):
    for i in constant:
        flags.append(f"{prefix}:{names[i]}")


def train(
    selection: Selection,
    pool: SamplePool,
    net_cfg: Optional[NetworkConfig] = None,
    train_cfg: Optional[TrainConfig] = None,
) -> TrainedModel:
    """Fit the field and scalar networks on a selection of pool samples.

    Low- and high-fidelity samples enter identically unless the fidelity label
    input is enabled. The scalar net takes one full-batch step for every field
    mini-batch; both share the schedule and the global clipping norm. The
    parameters with the lowest validation loss are returned.
    """
    net_cfg = net_cfg or NetworkConfig()
    train_cfg = train_cfg or TrainConfig()

    items = sorted(
        selection.items(), key=lambda it: (it[0], 0 if it[1] is FidelityLevel.LOW else 1)
    )
    if not items:
        raise SelectionError("cannot train on an empty selection")
    missing = [cid for cid, _ in items if cid not in pool]
    if missing:
        raise ContractError(f"selection references cases missing from the pool: {missing[:5]}")

    rng = np.random.default_rng(train_cfg.seed)
    flags: list[str] = []
    train_items, val_items, on_train = _split_items(items, train_cfg.val_fraction, rng)
    if on_train:
        flags.append(VALIDATE_ON_TRAIN)

    use_label = net_cfg.fidelity_label
    raw_train = _build_rows(pool, train_items, use_label)
    raw_val = _build_rows(pool, val_items, use_label)

    field_names = FIELD_INPUTS + ((LABEL_INPUT,) if use_label else ())
    scalar_names = SCALAR_INPUTS + ((LABEL_INPUT,) if use_label else ())
    field_in, const = NormalizationStats.fit(raw_train.field_x)
    _flag_constants(flags, "constant_input", field_names, const)
    scalar_in, const = NormalizationStats.fit(raw_train.scalar_x)
    _flag_constants(flags, "constant_input", scalar_names, const)
    field_out, const = NormalizationStats.fit(raw_train.field_y)
    _flag_constants(flags, "constant_target", ("u",), const)
    scalar_out, const = NormalizationStats.fit(raw_train.scalar_y)
    _flag_constants(flags, "constant_target", ("tau_w",), const)
    for flag in flags:
        logger.warning(f"Training flag: {flag}")

    def normalized(rows: _Rows) -> _Rows:
        return _Rows(
            field_x=field_in.normalize(rows.field_x),
            field_y=field_out.normalize(rows.field_y),
            scalar_x=scalar_in.normalize(rows.scalar_x),
            scalar_y=scalar_out.normalize(rows.scalar_y),
        )

    train_rows = normalized(raw_train)
    val_rows = normalized(raw_val)

    activation = net_cfg.activation
    field_net = init_network(net_cfg.field_widths, seed=net_cfg.seed, dtype=net_cfg.dtype)
    scalar_net = init_network(net_cfg.scalar_widths, seed=net_cfg.seed + 1, dtype=net_cfg.dtype)
    field_params = parameters(field_net)
    scalar_params = parameters(scalar_net)

    adam_kwargs = dict(
        lr=train_cfg.peak_lr,
        betas=(train_cfg.beta1, train_cfg.beta2),
        eps=train_cfg.eps,
        weight_decay=train_cfg.weight_decay,
    )
    field_opt = AdamW(field_params, **adam_kwargs)
    scalar_opt = AdamW(scalar_params, **adam_kwargs)
    schedule = WarmupCosineSchedule(
        train_cfg.peak_lr, train_cfg.warmup_epochs, train_cfg.epochs
    )

    best_loss = _loss(field_net, scalar_net, val_rows, activation)
    best_epoch = 0
    best_field, best_scalar = copy_network(field_net), copy_network(scalar_net)
    history: list[float] = []
    n_rows = train_rows.field_x.shape[0]
    n_field = len(field_params)

    epoch = 0
    for epoch in range(1, train_cfg.epochs + 1):
        lr = schedule(epoch)
        order = rng.permutation(n_rows)
        for start in range(0, n_rows, train_cfg.batch_size):
            idx = order[start:start + train_cfg.batch_size]
            _, field_grads = loss_and_grad(
                field_net, train_rows.field_x[idx], train_rows.field_y[idx], activation
            )
            _, scalar_grads = loss_and_grad(
                scalar_net, train_rows.scalar_x, train_rows.scalar_y, activation
            )
            grads = field_grads + scalar_grads
            clip_grad_norm(grads, train_cfg.grad_clip_norm)
            field_opt.step(grads[:n_field], lr)
            scalar_opt.step(grads[n_field:], lr)

        val_loss = _loss(field_net, scalar_net, val_rows, activation)
        history.append(val_loss)
        logger.debug(f"epoch {epoch}: lr={lr:.3e} val_loss={val_loss:.6e}")

        if val_loss < best_loss:
            best_loss, best_epoch = val_loss, epoch
            best_field, best_scalar = copy_network(field_net), copy_network(scalar_net)
        elif epoch - best_epoch >= train_cfg.early_stop_patience:
            logger.debug(f"Early stop at epoch {epoch} (best {best_epoch})")
            break

    final_train = _loss(best_field, best_scalar, train_rows, activation)
    logger.info(
        f"Trained on {len(train_items)} samples ({len(val_items)} val): "
        f"{epoch} epochs, best val loss {best_loss:.4e} at epoch {best_epoch}"
    )

    return TrainedModel(
        field_net=best_field,
        scalar_net=best_scalar,
        activation=activation,
        fidelity_label=use_label,
        field_inputs=field_in,
        field_output=field_out,
        scalar_inputs=scalar_in,
        scalar_output=scalar_out,
        field_input_range=(raw_train.field_x.min(axis=0), raw_train.field_x.max(axis=0)),
        scalar_input_range=(raw_train.scalar_x.min(axis=0), raw_train.scalar_x.max(axis=0)),
        best_val_loss=best_loss,
        epochs_run=epoch,
        flags=flags,
        best_epoch=best_epoch,
        final_train_loss=final_train,
        val_history=history,
        train_items=train_items,
        val_items=val_items,
    )


def _outside(x: np.ndarray, bounds: tuple[np.ndarray, np.ndarray]) -> bool:
    lo, hi = bounds
    slack = _RANGE_RTOL * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    return bool(np.any(x < lo - slack) or np.any(x > hi + slack))


def predict(model: TrainedModel, case: FlowCase, query_mesh: Mesh | np.ndarray) -> Prediction:
    """Velocity at the query nodes and the wall shear stress for a case.

    Queries outside the training input range are answered but flagged.
    """
    node_y = query_mesh.node_y if isinstance(query_mesh, Mesh) else np.asarray(query_mesh, float)
    if node_y.ndim != 1 or node_y.size == 0:
        raise ContractError("query mesh must be a nonempty 1-D node array")
    if not np.all(np.isfinite(node_y)) or np.any(node_y <= 0) or np.any(node_y > 1):
        raise ContractError("query nodes must lie in (0, 1]")

    label = fidelity_label(FidelityLevel.HIGH) if model.fidelity_label else None
    fx = field_features(node_y, case.re_delta, case.beta_p, label)
    sx = scalar_features(case.re_delta, case.beta_p, label)
    extrapolated = _outside(fx, model.field_input_range) or _outside(sx, model.scalar_input_range)
    if extrapolated:
        logger.debug(f"Case {case.case_id} lies outside the training input range")

    z_u = forward(model.field_net, model.field_inputs.normalize(fx), model.activation)
    z_tau = forward(model.scalar_net, model.scalar_inputs.normalize(sx), model.activation)
    return Prediction(
        u=model.field_output.denormalize(z_u)[:, 0],
        tau_w=float(model.scalar_output.denormalize(z_tau)[0, 0]),
        extrapolated=extrapolated,
    )
