"""Principal branch of the Lambert W function for real arguments."""

import math

from .errors import DomainError

_BRANCH_POINT = -math.exp(-1.0)


def lambert_w0(z: float) -> float:
    """Solve ``w * exp(w) = z`` for ``w >= -1``, defined for ``z >= -1/e``.

    Halley iteration started from the branch-point series near ``-1/e``,
    from ``log(z) - log(log(z))`` for large ``z`` and from ``log1p(z)``
    elsewhere. Converges to a few ulps in under ten steps.
    """
    z = float(z)
    if math.isnan(z):
        raise DomainError("lambert_w0 of NaN")
    if z < _BRANCH_POINT:
        # tolerate the rounding of -1/e computed in different ways
        if z < _BRANCH_POINT * (1.0 + 4e-16):
            raise DomainError(f"lambert_w0 needs z >= -1/e, got {z!r}")
        z = _BRANCH_POINT
    if z == 0.0:
        return 0.0
    if z == _BRANCH_POINT:
        return -1.0
    if math.isinf(z):
        return math.inf

    if z < -0.25:
        # w = -1 + t - t^2/3 + 11 t^3/72 with t = sqrt(2 (e z + 1))
        t = math.sqrt(max(2.0 * (math.e * z + 1.0), 0.0))
        w = -1.0 + t - t * t / 3.0 + 11.0 / 72.0 * t ** 3
    elif z > 3.0:
        lz = math.log(z)
        w = lz - math.log(lz)
    else:
        w = math.log1p(z)

    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 4e-16 * (1.0 + abs(w)):
            break
    return max(w, -1.0)
