"""
Momentum gradient descent on the motion loss lambda_f * mean L1(movements,
target), and optionally on the refinement head's L1 residual plus focal
score loss.

The motion head's kinematic decode path and the refinement head's
center-residual readout are first fitted by least squares.
A seeded share of the samples is held out, and the parameters with the
lowest held-out loss over the run are returned.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, TypeVar

import numpy as np

from bevtrack.errors import DatasetError
from bevtrack.future.motion import motion_backward, motion_forward
from bevtrack.model.config import LossConfig, TrackerConfig, TrainConfig
from bevtrack.nn.layers import MlpParams, mlp_backward, mlp_forward_cached
from bevtrack.nn.losses import focal_loss, focal_loss_grad, l1_loss, l1_loss_grad
from bevtrack.nn.params import DECODE_HEAD, MOTION_ATTN, REFINE_HEAD
from bevtrack.nn.rng import stream
from bevtrack.past.reasoning import logit, sigmoid
from bevtrack.training.dataset import RefineSample, TrainSample

logger = logging.getLogger(__name__)

LOG_EVERY = 50

Params = Dict[str, np.ndarray]
LossFn = Callable[[Mapping[str, np.ndarray]], Tuple[float, Params]]
Sample = TypeVar("Sample")


@dataclass
class TrainResult:
    """
    Selected parameters with the training loss before every step and after
    the last one, plus the held-out loss at the same points when a split exists.
    """
    params: Params
    losses: List[float] = field(default_factory=list)
    val_losses: List[float] = field(default_factory=list)
    best_step: int = 0

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]

    @property
    def selected_loss(self) -> float:
        """Loss of the returned parameters on the data they were selected by."""
        return (self.val_losses or self.losses)[self.best_step]

    def loss_csv(self) -> str:
        if not self.val_losses:
            return "step,loss\n" + "".join(f"{i},{loss!r}\n" for i, loss in enumerate(self.losses))
        rows = zip(self.losses, self.val_losses)
        return "step,loss,val_loss\n" + "".join(f"{i},{a!r},{b!r}\n" for i, (a, b) in enumerate(rows))


def motion_loss(
    samples: Sequence[TrainSample],
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    lambda_f: float,
    with_grad: bool = True,
) -> Tuple[float, Params]:
    """Mean weighted L1 motion loss over samples and its gradient for future.* parameters."""
    total = 0.0
    grads: Params = {}
    scale = lambda_f / len(samples)
    for sample in samples:
        movements, cache = motion_forward(sample.inputs, params, config)
        total += scale * l1_loss(movements, sample.target)
        if with_grad:
            for name, g in motion_backward(cache, scale * l1_loss_grad(movements, sample.target)).items():
                grads[name] = grads[name] + g if name in grads else g
    return total, grads


def fit_kinematic(
    samples: Sequence[TrainSample],
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
) -> np.ndarray:
    """
    Least-squares coefficients of the kinematic decode path, shape
    (tau_f, tau_h + 1), with the attention and MLP part of the head held
    fixed. Collinear features get the minimum-norm solution.
    """
    rows, targets = [], []
    for sample in samples:
        _, cache = motion_forward(sample.inputs, params, config)
        rows.append(sample.inputs.kinematics.T)
        targets.append((sample.target - cache.decoded).T)
    coefficients, *_ = np.linalg.lstsq(np.concatenate(rows), np.concatenate(targets), rcond=None)
    return coefficients.T


def fit_refine_residual(samples: Sequence[RefineSample], params: Mapping[str, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Least-squares center-residual readout of the refinement head over its
    hidden layer, fitted on matched samples.

    Returns:
        (weights (hidden, 3), biases (3,)) for the first three outputs
    """
    head = MlpParams.from_params(params, REFINE_HEAD)
    positives = [s for s in samples if s.label]
    if not positives:
        return head.weights[-1][:, 0:3].copy(), head.biases[-1][0:3].copy()
    _, cache = mlp_forward_cached(np.stack([s.feature for s in positives]), head)
    hidden = cache.inputs[-1]
    design = np.hstack([hidden, np.ones((len(positives), 1))])
    solution, *_ = np.linalg.lstsq(design, np.stack([s.residual for s in positives]), rcond=None)
    return solution[:-1], solution[-1]


def detection_loss(samples: Sequence[RefineSample], loss: LossConfig) -> float:
    """Detector-stage loss of the stub boxes: L1 on matched center residuals plus focal on stub scores."""
    total = 0.0
    residuals = [s.residual for s in samples if s.label]
    if residuals:
        target = np.stack(residuals)
        total += loss.lambda_box_d * l1_loss(np.zeros_like(target), target)
    scores = np.array([s.stub.score for s in samples])
    labels = np.array([s.label for s in samples])
    return total + loss.lambda_cls_d * float(np.mean(focal_loss(scores, labels, loss.focal_alpha, loss.focal_gamma)))


def refine_loss(
    samples: Sequence[RefineSample],
    params: Mapping[str, np.ndarray],
    train: TrainConfig,
    with_grad: bool = True,
) -> Tuple[float, Params]:
    """
    L1 on center residuals of matched samples plus focal loss on the decoded
    score, added to the detector-stage loss of the stubs (constant in the
    head's parameters).
    """
    head = MlpParams.from_params(params, REFINE_HEAD)
    features = np.stack([s.feature for s in samples])
    raw, cache = mlp_forward_cached(features, head)
    loss_cfg = train.loss
    n = len(samples)
    d_raw = np.zeros_like(raw)
    total = detection_loss(samples, loss_cfg)
    positives = [i for i, s in enumerate(samples) if s.label]
    if positives:
        pred = raw[positives, 0:3]
        target = np.stack([samples[i].residual for i in positives])
        total += loss_cfg.lambda_box_r * l1_loss(pred, target)
        d_raw[positives, 0:3] = loss_cfg.lambda_box_r * l1_loss_grad(pred, target)
    base = logit(np.array([s.stub.score for s in samples]))
    p = sigmoid(base + raw[:, 9])
    labels = np.array([s.label for s in samples])
    total += loss_cfg.lambda_cls_r * float(np.mean(focal_loss(p, labels, loss_cfg.focal_alpha, loss_cfg.focal_gamma)))
    d_raw[:, 9] = loss_cfg.lambda_cls_r / n * focal_loss_grad(p, labels, loss_cfg.focal_alpha, loss_cfg.focal_gamma) * p * (1.0 - p)
    if not with_grad:
        return total, {}
    _, grads = mlp_backward(cache, d_raw)
    return total, {f"{REFINE_HEAD}.{k}": v for k, v in grads.items()}


def _optimize(
    loss_fn: LossFn,
    params: Mapping[str, np.ndarray],
    names: Sequence[str],
    train: TrainConfig,
    what: str,
    val_fn: Optional[Callable[[Mapping[str, np.ndarray]], float]] = None,
) -> TrainResult:
    current = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    velocity = {k: np.zeros_like(current[k]) for k in names}
    best, best_score = dict(current), np.inf
    result = TrainResult(params=current)
    for i in range(train.steps + 1):
        loss, grads = loss_fn(current)
        result.losses.append(loss)
        score = loss
        if val_fn is not None:
            score = val_fn(current)
            result.val_losses.append(score)
        if score < best_score:
            best, best_score, result.best_step = {k: v.copy() for k, v in current.items()}, score, i
        if i == train.steps:
            break
        if i % LOG_EVERY == 0:
            logger.info(f"{what} step {i}: loss {loss:.6f}")
        for k in names:
            velocity[k] = train.momentum * velocity[k] - train.lr * grads.get(k, 0.0)
            current[k] = current[k] + velocity[k]
    result.params = best
    selected_by = "held-out" if val_fn is not None else "training"
    logger.info(
        f"{what}: loss {result.initial_loss:.6f} -> {result.final_loss:.6f} over {train.steps} steps; "
        f"kept step {result.best_step} ({selected_by} loss {best_score:.6f})"
    )
    return result


def _check_nonempty(samples: Sequence, what: str) -> None:
    if not samples:
        raise DatasetError(f"No {what} samples to train on", "EMPTY_DATASET")


def subsample(samples: Sequence[Sample], limit: int) -> List[Sample]:
    """Evenly spaced subset of at most `limit` samples, in original order."""
    if len(samples) <= limit:
        return list(samples)
    return [samples[i] for i in np.linspace(0, len(samples) - 1, limit).round().astype(int)]


def holdout_split(samples: Sequence[Sample], fraction: float, seed: int, name: str) -> Tuple[List[Sample], List[Sample]]:
    """
    Seeded (train, held-out) split, both in original order.

    Nothing is held out when the held-out share rounds down to zero samples
    or would leave no training samples.
    """
    n_val = int(len(samples) * fraction)
    if n_val == 0 or n_val >= len(samples):
        return list(samples), []
    held = set(stream(seed, f"holdout.{name}").permutation(len(samples))[:n_val].tolist())
    return [s for i, s in enumerate(samples) if i not in held], [s for i, s in enumerate(samples) if i in held]


def train_motion_head(
    samples: Sequence[TrainSample],
    params: Mapping[str, np.ndarray],
    config: TrackerConfig,
    train: TrainConfig = TrainConfig(),
) -> TrainResult:
    """
    Optimize the motion attention and decode head; other parameters are carried unchanged.

    Raises:
        DatasetError: If there are no samples
    """
    _check_nonempty(samples, "motion")
    fit, held = holdout_split(samples, train.validation_fraction, train.seed, "motion")
    lambda_f = train.loss.lambda_f
    start = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    if train.warm_start:
        before = motion_loss(fit, start, config, lambda_f, with_grad=False)[0]
        start[f"{DECODE_HEAD}.kinematic"] = fit_kinematic(fit, start, config)
        after = motion_loss(fit, start, config, lambda_f, with_grad=False)[0]
        logger.info(f"Kinematic warm start on {len(fit)} samples: loss {before:.6f} -> {after:.6f}")
    batch = subsample(fit, train.max_samples)
    names = sorted(k for k in params if k.startswith(MOTION_ATTN) or k.startswith(DECODE_HEAD))
    held = subsample(held, train.max_samples)

    def held_out_loss(p: Mapping[str, np.ndarray]) -> float:
        return motion_loss(held, p, config, lambda_f, with_grad=False)[0]

    return _optimize(
        lambda p: motion_loss(batch, p, config, lambda_f), start, names, train, "motion head",
        held_out_loss if held else None,
    )


def train_refine_head(
    samples: Sequence[RefineSample],
    params: Mapping[str, np.ndarray],
    train: TrainConfig = TrainConfig(),
) -> TrainResult:
    """
    Optimize the refinement head only.

    Raises:
        DatasetError: If there are no samples
    """
    _check_nonempty(samples, "refinement")
    fit, held = holdout_split(samples, train.validation_fraction, train.seed, "refine")
    start = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    if train.warm_start:
        before = refine_loss(fit, start, train, with_grad=False)[0]
        weights, biases = fit_refine_residual(fit, start)
        start[f"{REFINE_HEAD}.w1"][:, 0:3] = weights
        start[f"{REFINE_HEAD}.b1"][0:3] = biases
        after = refine_loss(fit, start, train, with_grad=False)[0]
        logger.info(f"Residual warm start on {len(fit)} samples: loss {before:.6f} -> {after:.6f}")
    batch = subsample(fit, train.max_samples)
    names = sorted(k for k in params if k.startswith(REFINE_HEAD))
    held = subsample(held, train.max_samples)

    def held_out_loss(p: Mapping[str, np.ndarray]) -> float:
        return refine_loss(held, p, train, with_grad=False)[0]

    return _optimize(
        lambda p: refine_loss(batch, p, train), start, names, train, "refinement head",
        held_out_loss if held else None,
    )
