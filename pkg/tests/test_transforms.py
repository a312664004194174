import numpy as np
import pytest
from hypothesis import given, strategies as st

from pneuhand.transforms import (
    Pose,
    quat_angle_deg,
    quat_canonical,
    quat_distance,
    quat_from_axis_angle,
    quat_mul,
    quat_normalize,
    quat_rotate,
    quat_to_matrix,
    rotate_towards,
)


def random_pose(rng):
    q = rng.normal(size=4)
    return Pose(rng.uniform(-500, 500, size=3), q / np.linalg.norm(q))


unit_quats = st.builds(
    lambda w, x, y, z: quat_canonical(quat_normalize(np.array([w, x, y, z]))),
    *[st.floats(-1, 1).filter(lambda v: abs(v) > 1e-3) for _ in range(4)],
)


def test_identity_pose():
    p = Pose.identity()
    assert np.allclose(p.position, 0)
    assert np.allclose(p.quat, [1, 0, 0, 0])


def test_pose_canonicalizes_sign():
    p = Pose([0, 0, 0], [-1, 0, 0, 0])
    assert p.quat[0] == 1.0


def test_pose_rejects_zero_quat():
    with pytest.raises(ValueError):
        Pose([0, 0, 0], [0, 0, 0, 0])


def test_pose_rejects_nonfinite():
    with pytest.raises(ValueError):
        Pose([np.nan, 0, 0], [1, 0, 0, 0])


def test_unit_quat_passes_through_bit_exact():
    q = np.array([0.5, 0.5, 0.5, 0.5])
    p = Pose([1, 2, 3], q)
    assert p.quat.tobytes() == q.tobytes()


def test_rotate_90_about_z():
    q = quat_from_axis_angle([0, 0, 1], 90.0)
    assert np.allclose(quat_rotate(q, [1, 0, 0]), [0, 1, 0], atol=1e-12)


def test_compose_inverse_is_identity():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = random_pose(rng)
        ident = p.compose(p.inverse())
        assert np.linalg.norm(ident.position) < 1e-9
        assert quat_distance(ident.quat, np.array([1, 0, 0, 0])) < 1e-9


def test_compose_matches_matrix_composition():
    rng = np.random.default_rng(8)
    for _ in range(50):
        a, b = random_pose(rng), random_pose(rng)
        ab = a.compose(b)
        m = a.rotation_matrix @ b.rotation_matrix
        assert np.allclose(ab.rotation_matrix, m, atol=1e-9)
        assert np.allclose(
            ab.position, a.position + a.rotation_matrix @ b.position, atol=1e-9
        )


def test_rotation_matrix_is_orthonormal():
    rng = np.random.default_rng(9)
    for _ in range(50):
        m = random_pose(rng).rotation_matrix
        assert np.allclose(m @ m.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-12)


@given(unit_quats, unit_quats)
def test_quat_mul_preserves_norm(a, b):
    assert np.linalg.norm(quat_mul(a, b)) == pytest.approx(1.0, abs=1e-9)


@given(unit_quats)
def test_quat_to_matrix_round_trip_rotation(q):
    v = np.array([1.0, -2.0, 3.0])
    assert np.allclose(quat_to_matrix(q) @ v, quat_rotate(q, v), atol=1e-9)


def test_rotate_towards_snaps_within_budget():
    a = quat_from_axis_angle([0, 0, 1], 0.0)
    b = quat_from_axis_angle([0, 0, 1], 10.0)
    out = rotate_towards(a, b, 15.0)
    assert quat_distance(out, b) == 0.0


def test_rotate_towards_consumes_budget():
    a = quat_from_axis_angle([0, 0, 1], 0.0)
    b = quat_from_axis_angle([0, 0, 1], 90.0)
    out = rotate_towards(a, b, 30.0)
    assert quat_angle_deg(out, b) == pytest.approx(60.0, abs=1e-9)
    assert quat_angle_deg(a, out) == pytest.approx(30.0, abs=1e-9)


def test_rotate_towards_takes_shortest_arc():
    a = quat_from_axis_angle([0, 0, 1], 0.0)
    b = quat_from_axis_angle([0, 0, 1], 350.0)  # = -10 degrees
    out = rotate_towards(a, b, 15.0)
    assert quat_angle_deg(out, b) == 0.0


@given(unit_quats, unit_quats, st.floats(0.1, 179.0))
def test_rotate_towards_never_increases_angle(a, b, budget):
    before = quat_angle_deg(a, b)
    after = quat_angle_deg(rotate_towards(a, b, budget), b)
    assert after <= before + 1e-9
