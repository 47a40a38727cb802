"""Lorentz (hyperboloid) model primitives and the Poincare-ball maps.

Points live in ambient coordinates ``(x0, x1, ..., xn)`` on the upper sheet of
``<x, x>_L = -1``. Every function accepts a single vector or a stack of
vectors along the leading axes; the last axis is always the coordinate axis.
Everything is float64.
"""

import numpy as np

from .errors import BoundaryError, NumericError

#: tolerance for the hyperboloid constraint checks
CONSTRAINT_TOL = 1e-8
#: tangent vectors shorter than this are treated as zero in ``exp_map``
ZERO_TANGENT = 1e-9
#: Poincare points must satisfy ``|u| < 1 - BALL_EPS``
BALL_EPS = 1e-12


def _as_float(x):
    return np.asarray(x, dtype=np.float64)


def _check_pair(x, y):
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    if x.shape[-1] < 2:
        raise ValueError("ambient vectors need at least 2 coordinates")


def _scalar(r):
    return float(r) if np.ndim(r) == 0 else r


def lorentz_inner(x, y):
    """Lorentzian scalar product ``-x0*y0 + sum_i xi*yi`` along the last axis."""
    x = _as_float(x)
    y = _as_float(y)
    _check_pair(x, y)
    r = np.sum(x[..., 1:] * y[..., 1:], axis=-1) - x[..., 0] * y[..., 0]
    return _scalar(r)


def _arcosh1p(t):
    # arcosh(1 + t) for t >= 0 without forming 1 + t first
    t = np.maximum(t, 0.0)
    return np.log1p(t + np.sqrt(t) * np.sqrt(t + 2.0))


def lorentz_distance(x, y):
    """Geodesic distance on the hyperboloid, ``arcosh(-<x, y>_L)``.

    The argument is evaluated as ``1 + <x-y, x-y>_L / 2``, which is the same
    quantity on the hyperboloid but keeps its precision for nearby points.
    Values below 1 from rounding are clamped.
    """
    x = _as_float(x)
    y = _as_float(y)
    _check_pair(x, y)
    diff = x - y
    half_sq = 0.5 * (np.sum(diff[..., 1:] ** 2, axis=-1) - diff[..., 0] ** 2)
    return _scalar(_arcosh1p(half_sq))


def lift(spatial):
    """Lift spatial coordinates ``(x1..xn)`` onto the hyperboloid.

    The time coordinate is ``sqrt(1 + |x'|^2)``.
    """
    s = _as_float(spatial)
    x0 = np.sqrt(1.0 + np.sum(s * s, axis=-1, keepdims=True))
    return np.concatenate([x0, s], axis=-1)


def renormalize(x):
    """Recompute the time coordinate of ``x`` from its spatial part."""
    x = _as_float(x)
    if not np.all(np.isfinite(x[..., 1:])):
        raise NumericError("cannot renormalize a point with non-finite coordinates")
    return lift(x[..., 1:])


def tangent_norm(v):
    """``sqrt(<v, v>_L)``, with tiny negative products from rounding clamped to 0."""
    v = _as_float(v)
    sq = lorentz_inner(v, v)
    return _scalar(np.sqrt(np.maximum(sq, 0.0)))


def project_to_tangent(x, u):
    """Orthogonal projection of an ambient vector ``u`` onto the tangent space at ``x``."""
    x = _as_float(x)
    u = _as_float(u)
    _check_pair(x, u)
    return u + np.asarray(lorentz_inner(x, u))[..., None] * x


def exp_map(x, v):
    """Exponential map at ``x`` applied to the tangent vector ``v``.

    ``cosh(|v|) x + sinh(|v|) v / |v|``; rows with ``|v|_L < 1e-9`` return ``x``.
    """
    x = _as_float(x)
    v = _as_float(v)
    _check_pair(x, v)
    norm = np.asarray(tangent_norm(v))[..., None]
    small = norm < ZERO_TANGENT
    safe = np.where(small, 1.0, norm)
    out = np.cosh(norm) * x + np.sinh(norm) * (v / safe)
    return np.where(small, x, out)


def to_poincare(x):
    """Map a hyperboloid point into the Poincare ball: ``x' / (x0 + 1)``."""
    x = _as_float(x)
    return x[..., 1:] / (x[..., :1] + 1.0)


def from_poincare(u):
    """Map a point of the open unit ball onto the hyperboloid.

    Raises :class:`BoundaryError` when ``|u| >= 1 - 1e-12``.
    """
    u = _as_float(u)
    sq = np.sum(u * u, axis=-1, keepdims=True)
    if np.any(~np.isfinite(sq)) or np.any(np.sqrt(sq) >= 1.0 - BALL_EPS):
        raise BoundaryError("Poincare point on or outside the unit ball boundary")
    denom = 1.0 - sq
    return np.concatenate([(1.0 + sq) / denom, 2.0 * u / denom], axis=-1)


def poincare_distance(u, v):
    """Poincare-ball distance ``arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))``."""
    u = _as_float(u)
    v = _as_float(v)
    if u.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: {u.shape[-1]} vs {v.shape[-1]}")
    diff_sq = np.sum((u - v) ** 2, axis=-1)
    a = 1.0 - np.sum(u * u, axis=-1)
    b = 1.0 - np.sum(v * v, axis=-1)
    return _scalar(_arcosh1p(2.0 * diff_sq / (a * b)))


def constraint_error(x):
    """``|<x, x>_L + 1|``, the distance from satisfying the hyperboloid equation."""
    return _scalar(np.abs(np.asarray(lorentz_inner(x, x)) + 1.0))


def is_on_hyperboloid(x, tol=CONSTRAINT_TOL):
    """True when every row has ``x0 >= 1`` and satisfies the constraint within ``tol``.

    The constraint error is measured relative to ``max(1, x0^2)``: evaluating
    ``<x, x>_L`` for a point with ``x0 = 1e4`` already carries rounding error
    near 1e-8, so an absolute bound cannot hold far from the origin.
    """
    x = _as_float(x)
    if not np.all(np.isfinite(x)):
        return False
    scale = np.maximum(1.0, x[..., 0] ** 2)
    return bool(np.all(constraint_error(x) <= tol * scale) and np.all(x[..., 0] >= 1.0 - tol))


def basepoint(n):
    """The hyperboloid origin ``(1, 0, ..., 0)`` in ``n`` hyperbolic dimensions."""
    p = np.zeros(n + 1)
    p[0] = 1.0
    return p
