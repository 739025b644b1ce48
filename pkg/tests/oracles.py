"""Independent reference implementations the tests check the fast paths
against. Everything here is deliberately written the dumb way (finite
differences, dense grids, exhaustive active-set enumeration, textbook
formulas) so a bug in the package cannot hide in here too."""
import itertools
import math

import numpy as np

from vlimb.kinematics import forward_kinematics
from vlimb.tendon import element_lengths, solve_ring_angles
from vlimb.model import GRAVITY


def fd_muscle_jacobian(model, routing, q, h=1e-6):
    """Central-difference d(element lengths)/dq. Rings re-equilibrate at
    every probe, so this is the total derivative the analytic G claims."""
    q = np.asarray(q, dtype=float)
    m = len(routing.elements)
    G = np.zeros((m, q.size))
    for j in range(q.size):
        qp, qm = q.copy(), q.copy()
        qp[j] += h
        qm[j] -= h
        lp = element_lengths(model, routing, qp)
        lm = element_lengths(model, routing, qm)
        G[:, j] = (lp - lm) / (2.0 * h)
    return G


def grid_ring_angle(model, routing, q, element_name, n=10000):
    """Ring angle by dense search: evaluate the element's length on an n-point
    phi grid and return the argmin angle.  element_lengths wants every ring
    pinned, so the other rings keep their solved angles."""
    rings = dict(solve_ring_angles(model, routing, q))
    best_phi, best_l = 0.0, np.inf
    idx = [e.name for e in routing.elements].index(element_name)
    for k in range(n):
        rings[element_name] = -math.pi + 2.0 * math.pi * k / n
        ls = element_lengths(model, routing, q, rings=rings)
        if ls[idx] < best_l:
            best_l, best_phi = ls[idx], rings[element_name]
    return best_phi


def _ls_on_active_set(A, b, lo, hi, combo):
    """Least squares of ||A f - b|| with the active set fixed per combo
    (0 free, 1 at lo, 2 at hi); None when the free part leaves the box."""
    m = A.shape[1]
    combo = np.asarray(combo)
    f = np.where(combo == 1, lo, hi).astype(float)
    free = combo == 0
    if free.any():
        rhs = b - A[:, ~free] @ f[~free] if (~free).any() else b
        x, *_ = np.linalg.lstsq(A[:, free], rhs, rcond=None)
        f[free] = x
    if np.any(f < lo - 1e-9) or np.any(f > hi + 1e-9):
        return None
    return np.clip(f, lo, hi)


def _project_on_active_set(A, y_star, lo, hi, bias, combo, tol=1e-7):
    """Nearest point to bias on {f in box: A f = y_star} with the active set
    fixed per combo; None when infeasible for that set."""
    m = A.shape[1]
    combo = np.asarray(combo)
    f = np.where(combo == 1, lo, hi).astype(float)
    free = combo == 0
    if free.any():
        M = A[:, free]
        d = y_star - (A[:, ~free] @ f[~free] if (~free).any() else 0.0)
        c = bias[free]
        x = c + np.linalg.pinv(M) @ (d - M @ c)
        if np.linalg.norm(M @ x - d) > tol:
            return None
        f[free] = x
    elif np.linalg.norm(A @ f - y_star) > tol:
        return None
    if np.any(f < lo - 1e-9) or np.any(f > hi + 1e-9):
        return None
    return np.clip(f, lo, hi)


def brute_force_allocation(A, b, lo, hi, bias):
    """Lexicographic box QP by exhaustive active-set enumeration:
    first minimize ||A f - b||, then among those minimizers the distance to
    bias. The phase-2 objective is strictly convex, so the answer is unique
    and needs no tie-breaking. Exponential in len(f); keep it small."""
    m = A.shape[1]
    combos = list(itertools.product((0, 1, 2), repeat=m))
    cands = [f for f in (_ls_on_active_set(A, b, lo, hi, c) for c in combos)
             if f is not None]
    res = np.array([np.linalg.norm(A @ f - b) for f in cands])
    y_star = A @ cands[int(np.argmin(res))]
    best = None
    for combo in combos:
        f = _project_on_active_set(A, y_star, lo, hi, bias, combo)
        if f is None:
            continue
        d = np.linalg.norm(f - bias)
        if best is None or d < best[0] - 1e-12:
            best = (d, f)
    return best[1]


def pendulum_model(mass_kg=2.0, length_m=0.5):
    """Five-joint model that is physically a single pendulum: every link but
    one is massless (well, 1e-15 kg), friction and rotor inertia are zero,
    and the heavy link hangs from the second joint (a pitch axis). Returns
    (model, joint_index, m, Lc, I_about_joint)."""
    from dataclasses import replace
    from vlimb.model import default_vlimb

    model = default_vlimb()
    eps = 1e-15
    links = []
    for i, l in enumerate(model.links):
        if l.name == "upper_arm":
            links.append(replace(
                l, length_m=length_m, mass_kg=mass_kg,
                com_offset_m=(0.0, 0.0, -length_m / 2.0),
                inertia_diag_kgm2=(mass_kg * length_m ** 2 / 12.0,) * 3))
        else:
            links.append(replace(l, mass_kg=eps,
                                 com_offset_m=(0.0, 0.0, 0.0),
                                 inertia_diag_kgm2=(eps, eps, eps)))
    joints = tuple(replace(j, viscous_friction_nms_per_rad=0.0,
                           coulomb_friction_nm=0.0) for j in model.joints)
    elements = tuple(replace(e, motor=replace(e.motor, rotor_inertia_kgm2=0.0))
                     for e in model.elements)
    model = replace(model, links=tuple(links), joints=joints,
                    elements=elements)
    Lc = length_m / 2.0
    I_joint = mass_kg * length_m ** 2 / 12.0 + mass_kg * Lc ** 2
    return model, 1, mass_kg, Lc, I_joint


def pendulum_gravity_torque(theta, mass_kg, lc_m):
    """Holding torque of a hanging pendulum displaced by theta."""
    return mass_kg * GRAVITY * lc_m * math.sin(theta)


def _agm_ellipk(k):
    """Complete elliptic integral K(k) by the arithmetic-geometric mean."""
    a, g = 1.0, math.sqrt(1.0 - k * k)
    for _ in range(40):
        a, g = (a + g) / 2.0, math.sqrt(a * g)
        if abs(a - g) < 1e-16:
            break
    return math.pi / (2.0 * a)


def pendulum_period(theta0, mass_kg, lc_m, inertia_kgm2):
    """Exact large-angle period: T = 4/omega0 * K(sin(theta0/2))."""
    omega0 = math.sqrt(mass_kg * GRAVITY * lc_m / inertia_kgm2)
    return 4.0 / omega0 * _agm_ellipk(math.sin(theta0 / 2.0))


def total_energy(model, q, qd):
    """Kinetic plus gravitational potential from the mass matrix and the
    link COM heights (potential zero at q upright... wherever FK puts it;
    only differences matter)."""
    from vlimb.kinematics import kin_arrays, mass_matrix

    ar = kin_arrays(model)
    fk = forward_kinematics(model, q)
    M = mass_matrix(model, q, fk=fk)
    T = 0.5 * float(qd @ M @ qd)
    V = 0.0
    for k in range(len(model.links)):
        V += ar.masses[k] * GRAVITY * fk.point(k, ar.coms[k])[2]
    return T + V


def random_configs(model, n, seed, margin=0.05):
    rng = np.random.default_rng(seed)
    lo = np.asarray(model.limits_lo()) + margin
    hi = np.asarray(model.limits_hi()) - margin
    return rng.uniform(lo, hi, size=(n, len(model.joints)))
