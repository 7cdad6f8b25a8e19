import math
from typing import TYPE_CHECKING

from bevtrack.errors import NumericalError

if TYPE_CHECKING:
    from bevtrack.model.geometry import Box3D

TWO_PI = 2.0 * math.pi


def normalize_yaw(theta: float) -> float:
    """
    Map an angle into (-pi, pi], equivalent modulo 2*pi.

    Raises:
        NumericalError: If theta is not finite
    """
    if not math.isfinite(theta):
        raise NumericalError(
            f"Cannot normalize non-finite yaw {theta}",
            "NON_FINITE",
            {"value": str(theta)}
        )
    if -math.pi < theta <= math.pi:
        return theta
    wrapped = math.remainder(theta, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def center_distance_2d(a: "Box3D", b: "Box3D") -> float:
    """Ground-plane distance between two box centers; z is ignored."""
    return math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])
