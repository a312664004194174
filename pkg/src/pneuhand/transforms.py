"""Rigid-body poses and quaternion helpers.

Quaternions are stored as (w, x, y, z), unit norm, with the sign
canonicalized so w >= 0. Positions are millimeters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_UNIT_TOL = 1e-9


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Return q scaled to unit norm. Raises on (near-)zero input."""
    q = np.asarray(q, dtype=float)
    norm = float(np.linalg.norm(q))
    if not math.isfinite(norm) or norm < 1e-9:
        raise ValueError(f"quaternion norm {norm} is not normalizable")
    return q / norm


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Flip sign so the scalar part is non-negative."""
    return -q if q[0] < 0 else q


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    w, x, y, z = q
    u = np.array([x, y, z])
    v = np.asarray(v, dtype=float)
    # v' = v + 2 w (u x v) + 2 u x (u x v)
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def quat_from_axis_angle(axis, angle_deg: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(axis))
    if norm == 0.0:
        raise ValueError("rotation axis must be nonzero")
    half = math.radians(angle_deg) / 2.0
    s = math.sin(half) / norm
    return quat_canonical(
        np.array([math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])
    )


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Rotation angle between two unit quaternions, in degrees (0..180)."""
    dot = abs(float(np.dot(a, b)))
    dot = min(1.0, dot)
    return math.degrees(2.0 * math.acos(dot))


def quat_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Sign-insensitive Euclidean distance between quaternions."""
    return min(float(np.linalg.norm(a - b)), float(np.linalg.norm(a + b)))


def rotate_towards(q: np.ndarray, target: np.ndarray, budget_deg: float) -> np.ndarray:
    """Step q toward target along the shortest arc by at most budget_deg.

    Snaps exactly to target once the remaining angle fits in the budget.
    """
    if budget_deg < 0:
        raise ValueError("rotation budget must be non-negative")
    dot = float(np.dot(q, target))
    tgt = -target if dot < 0 else target  # shortest arc
    angle = quat_angle_deg(q, tgt)
    if angle <= budget_deg:
        return quat_canonical(tgt.copy())
    t = budget_deg / angle
    half = math.radians(angle) / 2.0
    s = math.sin(half)
    out = (math.sin((1.0 - t) * half) * q + math.sin(t * half) * tgt) / s
    return quat_canonical(quat_normalize(out))


@dataclass(frozen=True, eq=False)
class Pose:
    """Position (mm) plus unit quaternion (w, x, y, z) orientation."""

    position: np.ndarray
    quat: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.position, other.position) and np.array_equal(
            self.quat, other.quat
        )

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        q = np.asarray(self.quat, dtype=float).reshape(4)
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(q)):
            raise ValueError("pose fields must be finite")
        norm = float(np.linalg.norm(q))
        if abs(norm - 1.0) > _UNIT_TOL:
            q = quat_normalize(q)  # raises on zero norm
        q = quat_canonical(q)
        pos.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "quat", q)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.quat)

    def compose(self, other: "Pose") -> "Pose":
        """Rigid composition self * other (apply other first, then self)."""
        return Pose(
            self.position + quat_rotate(self.quat, other.position),
            quat_mul(self.quat, other.quat),
        )

    def inverse(self) -> "Pose":
        qinv = quat_conj(self.quat)
        return Pose(-quat_rotate(qinv, self.position), qinv)

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return self.position + quat_rotate(self.quat, np.asarray(p, dtype=float))

    def approx_equal(self, other: "Pose", pos_tol_mm: float = 1e-9, quat_tol: float = 1e-9) -> bool:
        return (
            float(np.linalg.norm(self.position - other.position)) <= pos_tol_mm
            and quat_distance(self.quat, other.quat) <= quat_tol
        )
