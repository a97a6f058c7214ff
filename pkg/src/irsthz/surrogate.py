"""Small MLP surrogates for the outage and RQAM-ASER closed forms.

Targets are learned in the -log10 domain (outputs map back through
10^-y), inputs are log10-compressed where they span decades and min-max
scaled to [-1, 1] on the training split.  Training is full-batch
Levenberg-Marquardt with validation-based early stopping and a
bounded-memory first-order fallback.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import LseParams
from .errors import DomainError, NumericError, TrainingError
from .metrics import RqamSpec, aser_rqam_table
from .specfun import reg_lower_gamma

__all__ = [
    "MlpSpec",
    "TransformSpec",
    "TrainConfig",
    "Dataset",
    "TrainedModel",
    "op_net_spec",
    "aser_net_spec",
    "op_net_inputs",
    "aser_net_inputs",
    "generate_op_dataset",
    "generate_aser_dataset",
    "mlp_forward",
    "train_mlp",
    "evaluate_model",
    "save_model",
    "load_model",
]

TARGET_CLIP = 1e-30  # -log10 domain outliers destabilise LM
# closed-form ASER below this relative certainty is numerical noise
_ASER_REL_GATE = 2e-3

_FORMAT_NAME = "irsthz-mlp"
_FORMAT_MAJOR = 1
_FORMAT_MINOR = 0


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths, input to output; tanh hidden, linear output."""

    layer_sizes: tuple[int, ...]
    hidden_activation: str = "tanh"
    output_activation: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(v) for v in self.layer_sizes))
        if len(self.layer_sizes) < 2 or any(v < 1 for v in self.layer_sizes):
            raise DomainError("MlpSpec.layer_sizes must be >= 2 positive entries")
        if self.hidden_activation != "tanh" or self.output_activation != "linear":
            raise DomainError("only tanh hidden / linear output supported")

    @property
    def n_params(self) -> int:
        sizes = self.layer_sizes
        return sum((sizes[i] + 1) * sizes[i + 1] for i in range(len(sizes) - 1))


@dataclass(frozen=True)
class TransformSpec:
    """Which inputs are log10-compressed; output is always 10^-y."""

    input_log10: tuple[bool, ...]
    output_neglog10: bool = True


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 2000
    val_frac: float = 0.15
    test_frac: float = 0.15
    patience: int = 6
    lm_damping_init: float = 1e-3
    lm_damping_max: float = 1e10
    seed: int = 0
    jacobian_budget_bytes: int = 1 << 30
    restarts: int = 2

    def __post_init__(self):
        if not 0.0 < self.val_frac + self.test_frac < 1.0:
            raise DomainError("TrainConfig split fractions must leave a training share")


@dataclass
class Dataset:
    """Raw (untransformed) inputs and metric-valued targets."""

    inputs: np.ndarray
    targets: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] != self.targets.shape[0]:
            raise DomainError("Dataset inputs must be (N, d) matching targets (N,)")

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.inputs.tobytes())
        h.update(self.targets.tobytes())
        return h.hexdigest()[:16]


@dataclass
class TrainedModel:
    spec: MlpSpec
    transforms: TransformSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_lo: np.ndarray
    input_hi: np.ndarray
    meta: dict = field(default_factory=dict)


def op_net_spec() -> tuple[MlpSpec, TransformSpec]:
    """Outage predictor: two inputs, hidden widths 14/12/8."""
    return MlpSpec((2, 14, 12, 8, 1)), TransformSpec((True, True))


def aser_net_spec() -> tuple[MlpSpec, TransformSpec]:
    """RQAM-ASER predictor: four inputs, hidden widths 20/15/10."""
    return MlpSpec((4, 20, 15, 10, 1)), TransformSpec((False, False, True, True))


def op_net_inputs(lse: LseParams, lambda0: float, lambda_th: float) -> np.ndarray:
    """Feature pair (tau+1, threshold-normalised scale) for the outage net.

    The second input is sqrt(lambda_th)/(mu_B sqrt(lambda0)): the outage
    probability is an exact function of this pair, and at the training
    convention lambda_th = 1 it coincides with lambda_th/(mu_B sqrt(lambda0)).
    """
    shape = lse.tau + 1.0
    mu_b = lse.lam * shape
    return np.asarray([shape, math.sqrt(lambda_th) / (mu_b * math.sqrt(lambda0))])


def aser_net_inputs(spec: RqamSpec, lse: LseParams, lambda0: float) -> np.ndarray:
    return np.asarray(
        [float(spec.mi), float(spec.mq), lse.tau + 1.0, lse.lam * math.sqrt(lambda0)]
    )


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------

_OP_RANGES = ((0.3, 64.0), (1e-7, 100.0))


def generate_op_dataset(
    n_samples: int = 20_000,
    ranges: tuple[tuple[float, float], tuple[float, float]] | None = None,
    seed: int = 1,
) -> Dataset:
    """Log-uniform samples of (tau+1, scale) with exact outage targets.

    Thresholds are fixed at lambda_th = 1 so the input pair determines
    the target; rows whose outage falls below the clip floor are
    rejected and redrawn, so exactly ``n_samples`` rows come back.
    """
    (n1_lo, n1_hi), (n2_lo, n2_hi) = ranges or _OP_RANGES
    rng = np.random.default_rng(seed)
    rows = []
    targets = []
    attempts = 0
    while len(rows) < n_samples:
        attempts += 1
        if attempts > 50 * n_samples:
            raise NumericError("generate_op_dataset: rejection rate too high", kept=len(rows))
        n1 = math.exp(rng.uniform(math.log(n1_lo), math.log(n1_hi)))
        n2 = math.exp(rng.uniform(math.log(n2_lo), math.log(n2_hi)))
        target = reg_lower_gamma(n1, n1 * n2)
        if target < TARGET_CLIP or target >= 1.0:
            continue
        rows.append((n1, n2))
        targets.append(target)
    return Dataset(
        np.asarray(rows),
        np.asarray(targets),
        meta={
            "kind": "outage",
            "lambda_th": 1.0,
            "ranges": ((n1_lo, n1_hi), (n2_lo, n2_hi)),
            "seed": seed,
            "attempts": attempts,
        },
    )


_ASER_AXIS_RANGE = (1e-7, 200.0)
_ASER_MOD_VALUES = (2, 4, 8, 16)


def generate_aser_dataset(
    seed: int = 1,
    full_scale: bool = False,
    variant: str = "standard",
) -> Dataset:
    """Grid dataset over (MI, MQ, tau+1, scale) with closed-form targets.

    16 modulation pairs times a log-spaced axis grid: 80x80 at full scale
    (102400 candidate rows), 20x20 at desk scale (6400).  Rows whose
    closed-form value is clipped or numerically uncertifiable (the Fox-H
    groups cancel below the error estimate) are dropped; the counts are
    recorded in ``meta``.
    """
    axis = 80 if full_scale else 20
    lo, hi = _ASER_AXIS_RANGE
    shape_grid = np.exp(np.linspace(math.log(lo), math.log(hi), axis))
    lsl_grid = np.exp(np.linspace(math.log(lo), math.log(hi), axis))
    specs = [RqamSpec(mi, mq, variant=variant) for mi in _ASER_MOD_VALUES for mq in _ASER_MOD_VALUES]

    rows = []
    targets = []
    for shape in shape_grid:
        tau = shape - 1.0
        vals, errs = aser_rqam_table(specs, tau, lsl_grid, rtol=1e-9)
        for k, spec in enumerate(specs):
            keep = (
                (vals[k] > TARGET_CLIP)
                & (vals[k] < 1.0)
                & (errs[k] <= _ASER_REL_GATE * np.abs(vals[k]))
            )
            for j in np.nonzero(keep)[0]:
                rows.append((float(spec.mi), float(spec.mq), shape, lsl_grid[j]))
                targets.append(vals[k, j])
    n_candidates = 16 * axis * axis
    return Dataset(
        np.asarray(rows),
        np.asarray(targets),
        meta={
            "kind": "aser-rqam",
            "grid": (16, axis, axis),
            "n_candidates": n_candidates,
            "n_kept": len(rows),
            "variant": variant,
            "seed": seed,
            "clip": TARGET_CLIP,
            "rel_gate": _ASER_REL_GATE,
        },
    )


# ---------------------------------------------------------------------------
# Forward pass and training
# ---------------------------------------------------------------------------


def _transform_inputs(transforms: TransformSpec, x: np.ndarray) -> np.ndarray:
    x = np.array(x, dtype=np.float64, copy=True)
    for d, flag in enumerate(transforms.input_log10):
        if flag:
            if np.any(x[:, d] <= 0.0):
                raise DomainError(f"input column {d} must be > 0 for log10 transform")
            x[:, d] = np.log10(x[:, d])
    return x


def _scale_inputs(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    return 2.0 * (x - lo) / (hi - lo) - 1.0


def _forward_scaled(weights, biases, xs: np.ndarray) -> np.ndarray:
    a = xs
    for w, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ w.T + b)
    return (a @ weights[-1].T + biases[-1]).ravel()


def _forward_with_acts(weights, biases, xs: np.ndarray):
    acts = [xs]
    a = xs
    for w, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ w.T + b)
        acts.append(a)
    out = (a @ weights[-1].T + biases[-1]).ravel()
    return out, acts


def mlp_forward(model: TrainedModel, inputs) -> np.ndarray | float:
    """Predict the metric for raw inputs (single vector or (N, d) batch)."""
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    d = model.spec.layer_sizes[0]
    if x.shape[1] != d:
        raise DomainError(f"mlp_forward: expected {d} inputs, got {x.shape[1]}")
    xs = _scale_inputs(_transform_inputs(model.transforms, x), model.input_lo, model.input_hi)
    y = _forward_scaled(model.weights, model.biases, xs)
    z = np.power(10.0, -y) if model.transforms.output_neglog10 else y
    return float(z[0]) if single else z


def _init_params(spec: MlpSpec, rng: np.random.Generator):
    weights, biases = [], []
    sizes = spec.layer_sizes
    for i in range(len(sizes) - 1):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        r = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-r, r, (fan_out, fan_in)))
        biases.append(rng.uniform(-r, r, fan_out))
    return weights, biases


def _pack(weights, biases) -> np.ndarray:
    return np.concatenate([w.ravel() for w in weights] + [b.ravel() for b in biases])


def _unpack(theta: np.ndarray, spec: MlpSpec):
    sizes = spec.layer_sizes
    weights, biases = [], []
    k = 0
    for i in range(len(sizes) - 1):
        n = sizes[i + 1] * sizes[i]
        weights.append(theta[k : k + n].reshape(sizes[i + 1], sizes[i]))
        k += n
    for i in range(len(sizes) - 1):
        n = sizes[i + 1]
        biases.append(theta[k : k + n])
        k += n
    return weights, biases


def _jacobian(weights, biases, xs: np.ndarray):
    """Per-sample gradient of the scalar output w.r.t. all parameters.

    Reverse accumulation with the per-sample seed kept, laid out to match
    ``_pack``; returns (predictions, J) with J of shape (N, n_params).
    """
    out, acts = _forward_with_acts(weights, biases, xs)
    n = xs.shape[0]
    n_layers = len(weights)
    deltas = [None] * n_layers
    delta = np.ones((n, 1))
    deltas[-1] = delta
    for layer in range(n_layers - 1, 0, -1):
        delta = (delta @ weights[layer]) * (1.0 - acts[layer] ** 2)
        deltas[layer - 1] = delta
    blocks = []
    for layer in range(n_layers):
        blocks.append(np.einsum("ni,nj->nij", deltas[layer], acts[layer]).reshape(n, -1))
    for layer in range(n_layers):
        blocks.append(deltas[layer])
    return out, np.concatenate(blocks, axis=1)


def _lm_fit(spec, xs, ys, xv, yv, cfg: TrainConfig, rng: np.random.Generator):
    weights, biases = _init_params(spec, rng)
    theta = _pack(weights, biases)
    n_train = xs.shape[0]
    mu = cfg.lm_damping_init
    history = []

    def mse_at(th):
        w, b = _unpack(th, spec)
        r = _forward_scaled(w, b, xs) - ys
        return float(r @ r) / n_train

    best_val = math.inf
    best_theta = theta.copy()
    fails = 0
    mse = mse_at(theta)
    epochs_run = 0
    for epoch in range(cfg.max_epochs):
        epochs_run = epoch + 1
        w, b = _unpack(theta, spec)
        pred, jac = _jacobian(w, b, xs)
        resid = pred - ys
        a = jac.T @ jac
        g = jac.T @ resid
        improved = False
        while mu <= cfg.lm_damping_max:
            try:
                step = np.linalg.solve(a + mu * np.eye(a.shape[0]), g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            trial = theta - step
            trial_mse = mse_at(trial)
            if trial_mse < mse:
                theta, mse = trial, trial_mse
                mu = max(mu * 0.1, 1e-20)
                improved = True
                break
            mu *= 10.0
        w, b = _unpack(theta, spec)
        val_mse = float(np.mean((_forward_scaled(w, b, xv) - yv) ** 2))
        history.append((mse, val_mse))
        if val_mse < best_val:
            best_val = val_mse
            best_theta = theta.copy()
            fails = 0
        else:
            fails += 1
        if not improved:
            # damping overflow: genuine divergence if nothing was learned
            if not math.isfinite(best_val) or (epoch == 0 and best_val > mse_at(best_theta)):
                raise TrainingError("LM damping overflow with no progress", history)
            break
        if fails > cfg.patience:
            break
    return best_theta, best_val, history, epochs_run


def _adam_fit(spec, xs, ys, xv, yv, cfg: TrainConfig, rng: np.random.Generator):
    """Bounded-memory fallback when the Jacobian would not fit the budget."""
    weights, biases = _init_params(spec, rng)
    theta = _pack(weights, biases)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    lr, beta1, beta2, eps = 1e-2, 0.9, 0.999, 1e-8
    n = xs.shape[0]
    batch = min(256, n)
    best_val = math.inf
    best_theta = theta.copy()
    history = []
    fails = 0
    step_count = 0
    epochs_run = 0
    for epoch in range(cfg.max_epochs):
        epochs_run = epoch + 1
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            w, b = _unpack(theta, spec)
            pred, jac = _jacobian(w, b, xs[idx])
            grad = 2.0 * jac.T @ (pred - ys[idx]) / idx.size
            step_count += 1
            m = beta1 * m + (1 - beta1) * grad
            v = beta2 * v + (1 - beta2) * grad * grad
            mh = m / (1 - beta1**step_count)
            vh = v / (1 - beta2**step_count)
            theta = theta - lr * mh / (np.sqrt(vh) + eps)
        w, b = _unpack(theta, spec)
        train_mse = float(np.mean((_forward_scaled(w, b, xs) - ys) ** 2))
        val_mse = float(np.mean((_forward_scaled(w, b, xv) - yv) ** 2))
        history.append((train_mse, val_mse))
        if val_mse < best_val:
            best_val, best_theta, fails = val_mse, theta.copy(), 0
        else:
            fails += 1
        if fails > 10 * cfg.patience:
            break
    return best_theta, best_val, history, epochs_run


def train_mlp(
    spec: MlpSpec,
    transforms: TransformSpec,
    dataset: Dataset,
    cfg: TrainConfig | None = None,
) -> TrainedModel:
    """Fit the network to the dataset in the -log10 target domain.

    70/15/15 split, LM with validation early stopping and best-weight
    restore; several seeded restarts keep the best validation error.
    """
    cfg = cfg or TrainConfig()
    if dataset.targets.size == 0:
        raise DomainError("train_mlp: empty dataset")
    if not np.all(np.isfinite(dataset.targets)) or np.any(dataset.targets <= 0.0):
        raise DomainError("train_mlp: targets must be finite and positive")
    x_all = _transform_inputs(transforms, dataset.inputs)
    y_all = -np.log10(dataset.targets)

    rng = np.random.default_rng(cfg.seed)
    n = x_all.shape[0]
    order = rng.permutation(n)
    n_val = int(round(cfg.val_frac * n))
    n_test = int(round(cfg.test_frac * n))
    idx_train = order[: n - n_val - n_test]
    idx_val = order[n - n_val - n_test : n - n_test]
    idx_test = order[n - n_test :]

    lo = x_all[idx_train].min(axis=0)
    hi = x_all[idx_train].max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    xs = _scale_inputs(x_all, lo, hi)

    jac_bytes = 8 * idx_train.size * spec.n_params
    fit = _lm_fit if jac_bytes <= cfg.jacobian_budget_bytes else _adam_fit

    best = None
    for restart in range(max(cfg.restarts, 1)):
        theta, val_mse, history, epochs_run = fit(
            spec, xs[idx_train], y_all[idx_train], xs[idx_val], y_all[idx_val], cfg, rng
        )
        if best is None or val_mse < best[1]:
            best = (theta, val_mse, history, epochs_run, restart)
    theta, val_mse, history, epochs_run, restart = best

    weights, biases = _unpack(theta, spec)
    weights = [w.copy() for w in weights]
    biases = [b.copy() for b in biases]
    test_mse = float(np.mean((_forward_scaled(weights, biases, xs[idx_test]) - y_all[idx_test]) ** 2))
    train_mse = float(
        np.mean((_forward_scaled(weights, biases, xs[idx_train]) - y_all[idx_train]) ** 2)
    )
    return TrainedModel(
        spec=spec,
        transforms=transforms,
        weights=weights,
        biases=biases,
        input_lo=lo,
        input_hi=hi,
        meta={
            "train_mse": train_mse,
            "val_mse": val_mse,
            "test_mse": test_mse,
            "epochs": epochs_run,
            "optimizer": "levenberg-marquardt" if fit is _lm_fit else "adam-fallback",
            "data_hash": dataset.content_hash(),
            "seed": cfg.seed,
            "restart": restart,
            "n_train": int(idx_train.size),
        },
    )


def evaluate_model(model: TrainedModel, dataset: Dataset) -> tuple[float, float, float]:
    """(mse, correlation, regression intercept) in the -log10 domain."""
    if dataset.targets.size == 0:
        raise DomainError("evaluate_model: empty dataset")
    x = _transform_inputs(model.transforms, dataset.inputs)
    xs = _scale_inputs(x, model.input_lo, model.input_hi)
    pred = _forward_scaled(model.weights, model.biases, xs)
    y = -np.log10(dataset.targets)
    mse = float(np.mean((pred - y) ** 2))
    if np.ptp(y) == 0.0 or np.ptp(pred) == 0.0:
        corr = 1.0 if mse == 0.0 else 0.0
        slope, intercept = 0.0, float(np.mean(pred))
    else:
        corr = float(np.corrcoef(pred, y)[0, 1])
        slope, intercept = np.polyfit(y, pred, 1)
    return mse, corr, float(intercept)


# ---------------------------------------------------------------------------
# Persistence: versioned text format, hex-exact values, checksummed
# ---------------------------------------------------------------------------


def _hex_row(row: np.ndarray) -> str:
    return " ".join(float(v).hex() for v in row)


def save_model(model: TrainedModel, path) -> None:
    lines = [f"{_FORMAT_NAME} {_FORMAT_MAJOR}.{_FORMAT_MINOR}"]
    lines.append("layers " + " ".join(str(v) for v in model.spec.layer_sizes))
    lines.append("input_log10 " + " ".join("1" if f else "0" for f in model.transforms.input_log10))
    lines.append("output " + ("neglog10" if model.transforms.output_neglog10 else "identity"))
    lines.append("input_lo " + _hex_row(model.input_lo))
    lines.append("input_hi " + _hex_row(model.input_hi))
    lines.append("meta " + json.dumps(model.meta, sort_keys=True))
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"tensor W{i} {w.shape[0]} {w.shape[1]}")
        lines.extend(_hex_row(row) for row in w)
        lines.append(f"tensor b{i} {b.shape[0]}")
        lines.append(_hex_row(b))
    payload = "\n".join(lines) + "\n"
    digest = hashlib.sha256(payload.encode()).hexdigest()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(payload)
        fh.write(f"checksum {digest}\n")


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    lines = raw.splitlines()
    if not lines or not lines[-1].startswith("checksum "):
        raise DomainError("model file truncated: missing checksum line")
    payload = "\n".join(lines[:-1]) + "\n"
    expect = lines[-1].split()[1]
    digest = hashlib.sha256(payload.encode()).hexdigest()
    if digest != expect:
        raise DomainError("model file corrupt: checksum mismatch")

    head = lines[0].split()
    if head[0] != _FORMAT_NAME:
        raise DomainError(f"not a {_FORMAT_NAME} file")
    major, minor = (int(v) for v in head[1].split("."))
    if major != _FORMAT_MAJOR:
        raise DomainError(f"unsupported model format major version {major}")
    if minor > _FORMAT_MINOR:
        warnings.warn(f"model file minor version {minor} is newer; reading best-effort")

    it = iter(lines[1:-1])
    sizes = tuple(int(v) for v in next(it).split()[1:])
    log_flags = tuple(v == "1" for v in next(it).split()[1:])
    out_mode = next(it).split()[1]
    input_lo = np.asarray([float.fromhex(v) for v in next(it).split()[1:]])
    input_hi = np.asarray([float.fromhex(v) for v in next(it).split()[1:]])
    meta = json.loads(next(it).split(" ", 1)[1])

    spec = MlpSpec(sizes)
    transforms = TransformSpec(log_flags, out_mode == "neglog10")
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    for i in range(len(sizes) - 1):
        tag, name, *shape = next(it).split()
        if tag != "tensor" or name != f"W{i}":
            raise DomainError(f"model file: expected tensor W{i}")
        rows, cols = int(shape[0]), int(shape[1])
        if (rows, cols) != (sizes[i + 1], sizes[i]):
            raise DomainError(f"model file: W{i} shape mismatch")
        w = np.asarray(
            [[float.fromhex(v) for v in next(it).split()] for _ in range(rows)]
        )
        if w.shape != (rows, cols):
            raise DomainError(f"model file: W{i} row width mismatch")
        tag, name, blen = next(it).split()
        if tag != "tensor" or name != f"b{i}" or int(blen) != sizes[i + 1]:
            raise DomainError(f"model file: expected tensor b{i}")
        b = np.asarray([float.fromhex(v) for v in next(it).split()])
        weights.append(w)
        biases.append(b)
    return TrainedModel(spec, transforms, weights, biases, input_lo, input_hi, meta)
