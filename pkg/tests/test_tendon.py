"""Tendon geometry: muscle Jacobian, ring equilibrium, belts, wrap checks."""

import dataclasses
import math

import numpy as np
import pytest

from vlimb.model import default_vlimb
from vlimb.tendon import (
    check_wire_segments,
    detect_wrap,
    element_lengths,
    forward_kinematics,
    link_axis_segments,
    moment_arm,
    muscle_jacobian,
    resolve_routing,
    solve_ring_angles,
)

from oracles import fd_muscle_jacobian, grid_ring_angle, random_configs


RING_ELEMENTS = ("ua_flex", "ua_ext")


# ------------------------------------------------------------- Jacobian

@pytest.mark.parametrize("mode,n,seed", [("manipulation", 60, 11), ("power", 40, 12)])
def test_muscle_jacobian_matches_finite_difference(model, mode, n, seed):
    routing = resolve_routing(model, mode)
    worst = 0.0
    for q in random_configs(model, n, seed, margin=0.05):
        G = muscle_jacobian(model, routing, q)
        G_fd = fd_muscle_jacobian(model, routing, q)
        worst = max(worst, float(np.max(np.abs(G - G_fd))))
    assert worst < 1e-5


def test_moment_arm_is_negative_jacobian_entry(model):
    routing = resolve_routing(model, "manipulation")
    for q in random_configs(model, 3, 21):
        G = muscle_jacobian(model, routing, q)
        for e in routing.elements:
            for j in model.joints:
                arm = moment_arm(model, routing, q, e.name, j.name)
                ei = model.element_index(e.name)
                ji = model.joint_index(j.name)
                assert arm == pytest.approx(-G[ei, ji], abs=1e-12)


# ---------------------------------------------------------------- rings

@pytest.mark.parametrize("element", RING_ELEMENTS)
def test_ring_angle_matches_dense_grid(model, element):
    routing = resolve_routing(model, "manipulation")
    idx = [e.name for e in routing.elements].index(element)
    for q in random_configs(model, 2, 31, margin=0.1):
        rings = dict(solve_ring_angles(model, routing, q))
        phi = rings[element]
        phi_grid = grid_ring_angle(model, routing, q, element)
        err = abs((phi - phi_grid + math.pi) % (2.0 * math.pi) - math.pi)
        assert err < 1e-3
        # the solved angle can only improve on the grid argmin
        l_solved = element_lengths(model, routing, q, rings=rings)[idx]
        l_grid = element_lengths(
            model, routing, q, rings={**rings, element: phi_grid})[idx]
        assert l_solved <= l_grid + 1e-9


@pytest.mark.parametrize("element", RING_ELEMENTS)
def test_ring_angle_is_stationary(model, element):
    routing = resolve_routing(model, "manipulation")
    idx = [e.name for e in routing.elements].index(element)
    h = 1e-5
    for q in random_configs(model, 3, 41, margin=0.1):
        rings = dict(solve_ring_angles(model, routing, q))
        phi = rings[element]
        lp = element_lengths(model, routing, q, rings={**rings, element: phi + h})[idx]
        lm = element_lengths(model, routing, q, rings={**rings, element: phi - h})[idx]
        assert abs(lp - lm) / (2.0 * h) < 1e-6


# ---------------------------------------------------------------- belts

def test_belt_rows_are_constant_radius(model):
    routing = resolve_routing(model, "manipulation")
    sr = model.element_index("sr_belt")
    wr = model.element_index("wr_belt")
    expect_sr = np.zeros(5)
    expect_sr[model.joint_index("ShoulderRoll")] = -0.04
    expect_wr = np.zeros(5)
    expect_wr[model.joint_index("WristRoll")] = -0.04
    for q in random_configs(model, 4, 51):
        G = muscle_jacobian(model, routing, q)
        np.testing.assert_allclose(G[sr], expect_sr, atol=1e-12)
        np.testing.assert_allclose(G[wr], expect_wr, atol=1e-12)


def test_belt_length_is_affine_in_joint_angle(model):
    routing = resolve_routing(model, "manipulation")
    sr = model.element_index("sr_belt")
    j = model.joint_index("ShoulderRoll")
    q0 = np.zeros(5)
    l0 = element_lengths(model, routing, q0)[sr]
    for dq in (-2.0, -0.5, 1.0, 3.0):
        q = q0.copy()
        q[j] += dq
        l = element_lengths(model, routing, q)[sr]
        assert l - l0 == pytest.approx(-0.04 * dq, abs=1e-12)


# ----------------------------------------------------------------- wrap

def _mast_case(y):
    """One wire segment crossing a vertical axis at offset y."""
    axis = [(0, np.array([0.0, 0.0, -1.0]), np.array([0.0, 0.0, 1.0]))]
    seg = [np.array([[-1.0, y, 0.0], [1.0, y, 0.0]])]
    return seg, axis


def test_wrap_core_flags_close_pass_and_reports_distance():
    seg, axis = _mast_case(0.02)
    out = check_wire_segments(seg, [(1, 1)], axis, 0.03, ["mast"], ["w"])
    assert len(out) == 1
    v = out[0]
    assert (v.element, v.segment, v.link) == ("w", 0, "mast")
    assert v.distance_m == pytest.approx(0.02, abs=1e-12)

    seg, axis = _mast_case(0.05)
    assert check_wire_segments(seg, [(1, 1)], axis, 0.03, ["mast"], ["w"]) == []


def test_wrap_core_skips_attached_segments():
    seg, axis = _mast_case(0.0)
    # untouched owners: the crossing is a hard violation
    assert check_wire_segments(seg, [(1, 1)], axis, 0.03, ["mast"], ["w"])
    # either endpoint living on the mast exempts the segment
    assert check_wire_segments(seg, [(0, 1)], axis, 0.03, ["mast"], ["w"]) == []
    # joint-housing points carry a tuple of links; any match exempts
    assert check_wire_segments(seg, [((2, 0), 1)], axis, 0.03, ["mast"], ["w"]) == []


def test_wrap_core_is_rotation_invariant():
    rng = np.random.default_rng(61)
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    ang = 1.234
    K = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    R = np.eye(3) + math.sin(ang) * K + (1 - math.cos(ang)) * (K @ K)

    seg, axis = _mast_case(0.025)
    base = check_wire_segments(seg, [(1, 1)], axis, 0.03, ["mast"], ["w"])
    seg_r = [seg[0] @ R.T]
    axis_r = [(k, R @ a, R @ b) for k, a, b in axis]
    rot = check_wire_segments(seg_r, [(1, 1)], axis_r, 0.03, ["mast"], ["w"])
    assert len(base) == len(rot) == 1
    assert rot[0].distance_m == pytest.approx(base[0].distance_m, abs=1e-12)


def test_short_links_carry_no_axis_segment(model):
    fk = forward_kinematics(model, np.zeros(5))
    names = [model.link_names()[k] for k, a, b in link_axis_segments(model, fk)]
    # 0.10 m links lose their whole span to the two 0.05 m end margins
    assert names == ["upper_arm", "elbow_upper", "elbow_lower"]


def test_axis_end_margin_exempts_near_joint_passes(model):
    # arm hangs along -z; elbow_lower spans z in [-0.9, -1.2]
    fk = forward_kinematics(model, np.zeros(5))
    axis = link_axis_segments(model, fk)

    def crossing_at(z):
        seg = [np.array([[-1.0, 0.0, z], [1.0, 0.0, z]])]
        return check_wire_segments(seg, [(0, 0)], axis, 0.03,
                                   model.link_names(), ["w"])

    hits = crossing_at(-1.0)
    assert [v.link for v in hits] == ["elbow_lower"]
    assert hits[0].distance_m == pytest.approx(0.0, abs=1e-12)
    # same crossing shifted into the 0.05 m margin band next to the joint
    assert crossing_at(-0.91) == []


@pytest.mark.parametrize("mode,seed", [("manipulation", 71), ("power", 72)])
def test_default_routing_is_wrap_free_within_limits(model, mode, seed):
    routing = resolve_routing(model, mode)
    for q in random_configs(model, 40, seed, margin=0.15):
        assert detect_wrap(model, routing, q) == []


def test_chord_routed_through_the_arm_is_flagged(model):
    base = model.elements[model.element_index("elbow_power")]
    RP = type(base.routing[0])
    chord = dataclasses.replace(
        base, name="bad_chord",
        routing=(RP(link="shoulder", offset_m=(0.02, 0.0, 0.0), kind="pulley"),
                 RP(link="elbow_lower", offset_m=(0.0, 0.0, -0.25), kind="end")))
    m2 = dataclasses.replace(model, elements=model.elements + (chord,))
    routing = resolve_routing(m2, "manipulation")
    hits = detect_wrap(m2, routing, np.zeros(5))
    assert {(v.element, v.link) for v in hits} == {
        ("bad_chord", "upper_arm"), ("bad_chord", "elbow_upper")}
    assert all(v.distance_m < m2.link_cylinder_radius_m for v in hits)


def test_belts_are_exempt_from_wrap_checks(model):
    # drive the roll joints to extremes; enclosed belts never report
    routing = resolve_routing(model, "manipulation")
    q = np.zeros(5)
    q[model.joint_index("ShoulderRoll")] = 3.1
    q[model.joint_index("WristRoll")] = -3.1
    names = {v.element for v in detect_wrap(model, routing, q)}
    assert "sr_belt" not in names and "wr_belt" not in names
