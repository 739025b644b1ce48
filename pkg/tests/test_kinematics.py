import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vlimb.kinematics import (bias_forces, forward_kinematics, gravity_torque,
                              kin_arrays, mass_matrix, point_jacobian, rnea)
from vlimb.model import GRAVITY

from oracles import (pendulum_gravity_torque, pendulum_model, pendulum_period,
                     random_configs, total_energy)


def _rodrigues(axis, th):
    a = np.asarray(axis, dtype=float)
    K = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + math.sin(th) * K + (1.0 - math.cos(th)) * (K @ K)


def fk_oracle(model, q):
    """Plain homogeneous-transform chain: every link frame sits at its parent
    joint, links extend along local -z by their length, joint axes are fixed
    in the parent frame."""
    R = [np.eye(3)]
    p = [np.zeros(3)]
    for j, joint in enumerate(model.joints):
        Lp = model.links[j].length_m
        origin = p[j] + R[j] @ np.array([0.0, 0.0, -Lp])
        R.append(R[j] @ _rodrigues(joint.axis, q[j]))
        p.append(origin)
    return np.array(R), np.array(p)


def test_fk_matches_transform_oracle(model):
    for q in random_configs(model, 25, seed=11):
        Ro, po = fk_oracle(model, q)
        fk = forward_kinematics(model, q)
        assert np.allclose(fk.R, Ro, atol=1e-12)
        assert np.allclose(fk.p, po, atol=1e-12)


def test_tip_position_hangs_at_zero(model):
    fk = forward_kinematics(model, np.zeros(5))
    reach = sum(l.length_m for l in model.links)  # tip offset = hand length
    assert np.allclose(fk.tip_position(), [0.0, 0.0, -reach], atol=1e-12)


def test_rotations_stay_orthonormal(model):
    for q in random_configs(model, 10, seed=3):
        fk = forward_kinematics(model, q)
        for R in fk.R:
            assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
            assert math.isclose(np.linalg.det(R), 1.0, abs_tol=1e-12)


def test_point_jacobian_matches_fd(model):
    h = 1e-7
    for q in random_configs(model, 15, seed=7):
        for link, offset in ((2, (0.0, 0.0, -0.2)), (5, (0.0, 0.0, -0.1))):
            J = point_jacobian(model, q, link, offset)
            for j in range(5):
                qp, qm = q.copy(), q.copy()
                qp[j] += h
                qm[j] -= h
                pp = forward_kinematics(model, qp).point(link, offset)
                pm = forward_kinematics(model, qm).point(link, offset)
                fd = (pp - pm) / (2.0 * h)
                assert np.allclose(J[:, j], fd, atol=1e-6)


def test_gravity_torque_two_ways(model):
    """RNEA's static torque against the Jacobian-transpose sum; the two code
    paths share nothing but FK."""
    ar = kin_arrays(model)
    for q in random_configs(model, 20, seed=13):
        fk = forward_kinematics(model, q)
        tau = gravity_torque(model, q, fk=fk)
        tau_j = np.zeros(5)
        for k in range(len(model.links)):
            Jc = point_jacobian(model, q, k, ar.coms[k], fk=fk)
            tau_j += Jc.T @ np.array([0.0, 0.0, ar.masses[k] * GRAVITY])
        assert np.allclose(tau, tau_j, atol=1e-9)


def test_gravity_matches_pendulum_analytic():
    model, j, m, lc, _ = pendulum_model()
    for theta in np.linspace(-1.4, 1.4, 29):
        q = np.zeros(5)
        q[j] = theta
        tau = gravity_torque(model, q)
        assert abs(tau[j] - pendulum_gravity_torque(theta, m, lc)) < 1e-9
        others = np.delete(tau, j)
        assert np.max(np.abs(others)) < 1e-9


def test_pendulum_period_against_elliptic_integral():
    """Integrate the single swinging joint with the package's own M and
    gravity; the large-angle period must match the elliptic-integral value."""
    model, j, m, lc, I_joint = pendulum_model()
    theta0 = 1.0
    T_exact = pendulum_period(theta0, m, lc, I_joint)

    dt = 1e-4
    q = np.zeros(5)
    q[j] = theta0
    qd = 0.0
    crossings = []
    t = 0.0
    last = q[j]
    for _ in range(int(12.0 / dt)):
        M = mass_matrix(model, q)[j, j]
        qdd = -gravity_torque(model, q)[j] / M
        qd += dt * qdd
        q[j] += dt * qd
        t += dt
        if last > 0.0 >= q[j]:  # downward zero crossing
            frac = last / (last - q[j])
            crossings.append(t - dt + frac * dt)
        last = q[j]
        if len(crossings) >= 4:
            break
    assert len(crossings) >= 2
    periods = np.diff(crossings)
    T_sim = float(np.mean(periods))
    assert abs(T_sim - T_exact) / T_exact < 0.01


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_mass_matrix_spd(seed):
    from vlimb.model import default_vlimb
    model = default_vlimb()
    q = random_configs(model, 1, seed=seed)[0]
    M = mass_matrix(model, q)
    assert np.allclose(M, M.T, atol=1e-10)
    assert np.min(np.linalg.eigvalsh(M)) > 0.0


def test_mass_matrix_columns_match_rnea(model):
    """CRBA against RNEA: M e_j must equal the torque for unit qdd with
    gravity and velocities off. Two independent algorithms."""
    for q in random_configs(model, 10, seed=29):
        M = mass_matrix(model, q)
        for j in range(5):
            e = np.zeros(5)
            e[j] = 1.0
            col = rnea(model, q, np.zeros(5), e, gravity=0.0)
            assert np.allclose(M[:, j], col, atol=1e-9)


def test_bias_forces_reduce_to_gravity_at_rest(model):
    for q in random_configs(model, 5, seed=31):
        assert np.allclose(bias_forces(model, q, np.zeros(5)),
                           gravity_torque(model, q), atol=1e-12)


def test_free_swing_energy_drift(model):
    """Frictionless rotor-free plant, zero currents: total energy drifts
    less than 1% of the kinetic scale per second."""
    from dataclasses import replace
    from vlimb.plant import PlantParams, init_state, step
    from vlimb.tendon import resolve_routing

    joints = tuple(replace(j, viscous_friction_nms_per_rad=0.0,
                           coulomb_friction_nm=0.0) for j in model.joints)
    elements = tuple(replace(e, motor=replace(e.motor, rotor_inertia_kgm2=0.0))
                     for e in model.elements)
    m2 = replace(model, joints=joints, elements=elements)

    params = PlantParams()
    state = init_state(m2)
    state.joints.qd[:] = [0.3, 0.4, 0.5, 0.6, 0.3]
    routing = resolve_routing(m2, state.mode)
    zero = np.zeros(len(routing.elements))

    E0 = total_energy(m2, state.joints.q, state.joints.qd)
    T_sim = 2.0
    e_kin_max = 0.0
    for _ in range(int(T_sim / params.dt_s)):
        state = step(m2, routing, state, zero, params)
        qd = state.joints.qd
        e_kin_max = max(e_kin_max,
                        0.5 * qd @ mass_matrix(m2, state.joints.q) @ qd)
    assert not state.halted
    # the swing must stay off the hard stops or the springs trade energy
    assert not state.hardstop_contact
    E1 = total_energy(m2, state.joints.q, state.joints.qd)
    drift_per_s = abs(E1 - E0) / max(e_kin_max, 1e-9) / T_sim
    assert drift_per_s < 0.01
