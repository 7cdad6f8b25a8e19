"""
Constant-velocity Kalman filter over (x, y, z, yaw, l, w, h, vx, vy)
with a 7-d box measurement.
"""
from dataclasses import dataclass, replace

import numpy as np
from filterpy.kalman import predict, update

from bevtrack.core.geometry import normalize_yaw
from bevtrack.errors import ConfigError
from bevtrack.model.geometry import Box3D

STATE_DIM = 9
MEAS_DIM = 7
YAW = 3
VELOCITY_VARIANCE = 1.0
MIN_SIZE = 1e-3

H = np.eye(MEAS_DIM, STATE_DIM)


@dataclass(frozen=True)
class KalmanTrack:
    """Filter state of one tracking-by-detection track."""
    id: int
    x: np.ndarray
    P: np.ndarray
    class_id: int = 0
    score: float = 1.0
    age: int = 1
    hits: int = 1
    misses: int = 0

    @classmethod
    def from_box(cls, track_id: int, box: Box3D, measurement_noise: float) -> "KalmanTrack":
        x = np.array([*box.center, box.yaw, *box.size, *box.velocity], dtype=np.float64)
        variances = [measurement_noise ** 2] * MEAS_DIM + [VELOCITY_VARIANCE] * 2
        return cls(id=track_id, x=x, P=np.diag(variances), class_id=box.class_id, score=box.score)

    def to_box(self) -> Box3D:
        x, y, z, yaw, l, w, h, vx, vy = (float(v) for v in self.x)
        return Box3D(
            center=(x, y, z),
            size=(max(l, MIN_SIZE), max(w, MIN_SIZE), max(h, MIN_SIZE)),
            yaw=yaw,
            velocity=(vx, vy),
            score=min(max(self.score, 0.0), 1.0),
            class_id=self.class_id,
        )


def transition(dt: float) -> np.ndarray:
    F = np.eye(STATE_DIM)
    F[0, 7] = dt
    F[1, 8] = dt
    return F


def _symmetric(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def kalman_predict(track: KalmanTrack, dt: float, process_noise: float = 0.1) -> KalmanTrack:
    """
    Constant-velocity prediction: x += vx dt, y += vy dt, P = F P F' + Q.

    Raises:
        ConfigError: If dt is not positive
    """
    if not dt > 0.0:
        raise ConfigError(f"Prediction step must be positive, got {dt}", "CONFIG_INVALID", {"dt": dt})
    x, P = predict(track.x, track.P, F=transition(dt), Q=np.eye(STATE_DIM) * process_noise ** 2)
    return replace(track, x=x, P=_symmetric(P))


def kalman_update(track: KalmanTrack, box: Box3D, measurement_noise: float = 0.5) -> KalmanTrack:
    """Fuse one detection box; the measured yaw is unwrapped next to the predicted yaw."""
    z = np.array([*box.center, box.yaw, *box.size], dtype=np.float64)
    z[YAW] = track.x[YAW] + normalize_yaw(z[YAW] - track.x[YAW])
    x, P = update(track.x, track.P, z, np.eye(MEAS_DIM) * measurement_noise ** 2, H)
    x = np.array(x, dtype=np.float64)
    x[YAW] = normalize_yaw(float(x[YAW]))
    return replace(track, x=x, P=_symmetric(P), score=box.score, hits=track.hits + 1, misses=0)
