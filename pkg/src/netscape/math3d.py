"""Quaternion and ray intersection helpers for the interaction scene.

Quaternions are (w, x, y, z) numpy arrays. All functions are pure and
allocation-light; nothing here knows about networks or scenes.
"""

from __future__ import annotations

import math

import numpy as np

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = math.sqrt(float((q * q).sum()))
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return q / n


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Hamilton product; q1 ⊗ q2 rotates by q2 first, then q1."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = math.sqrt(float((axis * axis).sum()))
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    half = angle / 2.0
    return np.concatenate(([math.cos(half)], axis * (math.sin(half) / n)))


def quat_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Minimal rotation taking direction u to direction v.

    For antiparallel inputs the axis is ambiguous; an arbitrary perpendicular
    is chosen deterministically.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = math.sqrt(float((u * u).sum()))
    nv = math.sqrt(float((v * v).sum()))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cannot rotate between zero vectors")
    u = u / nu
    v = v / nv
    dot = float(np.dot(u, v))
    if dot > 1.0 - 1e-12:
        return IDENTITY_QUAT.copy()
    if dot < -1.0 + 1e-12:
        # 180 degrees: any axis perpendicular to u works.
        axis = np.cross(u, [1.0, 0.0, 0.0])
        if float((axis * axis).sum()) < 1e-12:
            axis = np.cross(u, [0.0, 1.0, 0.0])
        return quat_from_axis_angle(axis, math.pi)
    axis = np.cross(u, v)
    w = 1.0 + dot
    return quat_normalize(np.concatenate(([w], axis)))


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate one 3-vector by the quaternion."""
    w, x, y, z = q
    qv = np.array([x, y, z])
    t = 2.0 * np.cross(qv, np.asarray(v, dtype=np.float64))
    return v + w * t + np.cross(qv, t)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix; q must be unit length."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def ray_box_params(
    origin: np.ndarray,
    direction: np.ndarray,
    centers: np.ndarray,
    half_edges: np.ndarray,
) -> np.ndarray:
    """Slab-method ray vs axis-aligned boxes, vectorized over boxes.

    Returns the entry parameter per box (0 when the origin is inside), NaN for
    misses. Box faces count as hits (closed intervals).
    """
    n = centers.shape[0]
    tmin = np.full(n, -np.inf)
    tmax = np.full(n, np.inf)
    for axis in range(3):
        lo = centers[:, axis] - half_edges
        hi = centers[:, axis] + half_edges
        d = direction[axis]
        o = origin[axis]
        if d != 0.0:
            t1 = (lo - o) / d
            t2 = (hi - o) / d
            near = np.minimum(t1, t2)
            far = np.maximum(t1, t2)
            tmin = np.maximum(tmin, near)
            tmax = np.minimum(tmax, far)
        else:
            # Parallel to this slab: inside it or a guaranteed miss.
            outside = (o < lo) | (o > hi)
            tmax = np.where(outside, -np.inf, tmax)
    hit = (tmin <= tmax) & (tmax >= 0.0)
    params = np.maximum(tmin, 0.0)
    return np.where(hit, params, np.nan)
