import numpy as np

from bevtrack.errors import ShapeError

EPS = 1e-7


def _focal_terms(p, target, alpha: float):
    p = np.asarray(p, dtype=np.float64)
    target = np.asarray(target)
    pc = np.clip(p, EPS, 1.0 - EPS)
    positive = target == 1
    p_t = np.where(positive, pc, 1.0 - pc)
    alpha_t = np.where(positive, alpha, 1.0 - alpha)
    return p, pc, positive, p_t, alpha_t


def focal_loss(p, target, alpha: float = 0.25, gamma: float = 2.0):
    """
    Focal loss -alpha_t (1 - p_t)^gamma log p_t, elementwise.

    Probabilities are clamped to [1e-7, 1 - 1e-7].
    """
    _, _, _, p_t, alpha_t = _focal_terms(p, target, alpha)
    loss = -alpha_t * (1.0 - p_t) ** gamma * np.log(p_t)
    return float(loss) if loss.ndim == 0 else loss


def focal_loss_grad(p, target, alpha: float = 0.25, gamma: float = 2.0):
    """d focal_loss / d p; zero where the clamp is active."""
    p, pc, positive, p_t, alpha_t = _focal_terms(p, target, alpha)
    d_pt = alpha_t * (gamma * (1.0 - p_t) ** (gamma - 1.0) * np.log(p_t) - (1.0 - p_t) ** gamma / p_t)
    grad = np.where(positive, d_pt, -d_pt) * (pc == p)
    return float(grad) if grad.ndim == 0 else grad


def _check_pair(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"L1 operands differ in shape: {pred.shape} vs {target.shape}", "SHAPE_MISMATCH")
    if pred.size == 0:
        raise ShapeError("L1 loss of empty operands", "SHAPE_MISMATCH")
    return pred, target


def l1_loss(pred, target) -> float:
    """Mean absolute difference."""
    pred, target = _check_pair(pred, target)
    return float(np.mean(np.abs(pred - target)))


def l1_loss_grad(pred, target) -> np.ndarray:
    pred, target = _check_pair(pred, target)
    return np.sign(pred - target) / pred.size
