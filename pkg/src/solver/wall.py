"""Law of the wall and flat-plate friction estimates."""

import math

import numpy as np

from ..errors import DomainError

KAPPA = 0.41
LOG_LAW_B = 5.0

# Reichardt blending lengths in wall units
_SUBLAYER_SCALE = 11.0
_BUFFER_SCALE = 3.0


def law_of_the_wall(y_plus, kappa: float = KAPPA, b: float = LOG_LAW_B):
    """Velocity in wall units from Reichardt's smooth wall law.

    Blends the viscous sublayer (u+ = y+) into the logarithmic layer
    u+ = ln(y+)/kappa + b. The additive constant is chosen so the large-y+
    asymptote is exactly the log law.

    Args:
        y_plus: Scalar or array of non-negative wall distances in wall units.
        kappa: von Karman constant.
        b: Log-law intercept.

    Returns:
        u+ with the same shape as the input (a float for scalar input).
    """
    arr = np.asarray(y_plus, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("y_plus must be finite")
    if np.any(arr < 0):
        raise DomainError("y_plus must be non-negative")

    c = b - math.log(kappa) / kappa
    u_plus = np.log1p(kappa * arr) / kappa + c * (
        1.0
        - np.exp(-arr / _SUBLAYER_SCALE)
        - (arr / _SUBLAYER_SCALE) * np.exp(-arr / _BUFFER_SCALE)
    )
    if u_plus.ndim == 0:
        return float(u_plus)
    return u_plus


def flat_plate_skin_friction(re_delta: float, coefficient: float = 0.02) -> float:
    """Turbulent flat-plate skin friction c_f = coefficient * re^(-1/6)."""
    if re_delta <= 0:
        raise DomainError(f"re_delta must be positive, got {re_delta}")
    return coefficient * re_delta ** (-1.0 / 6.0)


def provisional_friction_velocity(re_delta: float, coefficient: float = 0.02) -> float:
    """Friction velocity (edge-velocity units) implied by the flat-plate estimate."""
    return math.sqrt(0.5 * flat_plate_skin_friction(re_delta, coefficient))
