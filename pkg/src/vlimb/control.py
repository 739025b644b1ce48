"""Joint-space controller: cubic reference splines, gravity feedforward with
proportional feedback, tension allocation through the muscle Jacobian, and
conversion of tensions to motor currents.

The allocator solves a small box-constrained quadratic program
lexicographically: first minimize the torque residual ||-G^T f - tau||, then,
among residual-minimizers, minimize ||f - f_bias||. Wires are kept between
the pretension floor and the cap; belts may pull both ways. All pivoting is
lowest-index so identical inputs give identical outputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .kinematics import gravity_torque
from .tendon import muscle_jacobian, solve_ring_angles


@dataclass
class Trajectory:
    """One cubic joint-space segment: q(s) = q0 + (q_des - q0)(3s^2 - 2s^3)."""
    q0: np.ndarray
    q_des: np.ndarray
    duration_s: float
    start_time_s: float = 0.0

    def sample(self, t):
        """Reference (q, qd, qdd) at absolute time t; clamped outside [0, T]."""
        s = (t - self.start_time_s) / self.duration_s
        s = min(max(s, 0.0), 1.0)
        dq = self.q_des - self.q0
        q = self.q0 + dq * (3.0 * s * s - 2.0 * s ** 3)
        qd = dq * 6.0 * s * (1.0 - s) / self.duration_s
        qdd = dq * (6.0 - 12.0 * s) / self.duration_s ** 2
        if s <= 0.0 or s >= 1.0:
            qd = np.zeros_like(dq)
            qdd = np.zeros_like(dq)
        return q, qd, qdd

    @property
    def end_time_s(self):
        return self.start_time_s + self.duration_s


@dataclass
class ControlGains:
    kp: np.ndarray
    kd: np.ndarray = None
    loop_rate_hz: float = 1000.0
    tension_floor_n: float = 10.0
    tension_cap_n: float = 1500.0

    def __post_init__(self):
        self.kp = np.asarray(self.kp, dtype=float)
        if self.kd is None:
            self.kd = np.zeros_like(self.kp)
        else:
            self.kd = np.asarray(self.kd, dtype=float)
        if np.any(self.kp < 0.0):
            raise ValueError("kp must be nonnegative")
        if not 0.0 <= self.tension_floor_n < self.tension_cap_n:
            raise ValueError("need 0 <= tension_floor < tension_cap")


def gains_from_model(model):
    d = model.controller
    return ControlGains(kp=np.array(d.kp_nm_per_rad),
                        kd=np.array(d.kd_nms_per_rad),
                        loop_rate_hz=d.loop_rate_hz,
                        tension_floor_n=d.tension_floor_n,
                        tension_cap_n=d.tension_cap_n)


@dataclass
class ControlOutput:
    tau_cmd: np.ndarray
    tensions_cmd: np.ndarray
    currents_cmd: np.ndarray
    rank_deficient: bool
    current_saturated: bool = False
    torque_residual_nm: float = 0.0


def plan_trajectory(model, q_now, q_des, duration_s):
    """Cubic spline from q_now to q_des over duration_s seconds.

    The target must respect the joint limits; the current posture is taken
    as-is (the plant may be pushed slightly past a stop by contact).
    """
    q_now = np.asarray(q_now, dtype=float)
    q_des = np.asarray(q_des, dtype=float)
    if duration_s <= 0.0:
        raise ValueError("trajectory duration must be positive")
    lo, hi = model.limits_lo(), model.limits_hi()
    for j, jo in enumerate(model.joints):
        if not lo[j] <= q_des[j] <= hi[j]:
            raise ValueError(
                f"target {q_des[j]:.4f} rad outside limits of {jo.name}")
    return Trajectory(q0=q_now.copy(), q_des=q_des.copy(),
                      duration_s=float(duration_s))


def duration_for(q_now, q_des, speed_rad_s=1.0, min_duration_s=0.5):
    """Spline duration from a peak-speed budget. The cubic peaks at
    1.5*|dq|/T, so T = 1.5*max|dq|/speed keeps every joint under speed."""
    dq = np.max(np.abs(np.asarray(q_des, float) - np.asarray(q_now, float)))
    return max(min_duration_s, 1.5 * dq / speed_rad_s)


def compute_torque(model, q, q_ref, gains, qd=None, qd_ref=None):
    """Gravity-hold feedforward plus proportional feedback.

    The feedforward uses the nominal (unloaded) model by convention; payload
    shows up as tracking error, not as compensation. kd defaults to zero.
    """
    tau = gravity_torque(model, q) + gains.kp * (np.asarray(q_ref) - np.asarray(q))
    if qd is not None and np.any(gains.kd != 0.0):
        ref_d = np.zeros_like(tau) if qd_ref is None else np.asarray(qd_ref)
        tau = tau + gains.kd * (ref_d - np.asarray(qd))
    return tau


# ---------------------------------------------------------------------------
# tension allocation


def _bounded_lstsq(A, b, lo, hi, max_iter=200):
    """min ||A f - b|| subject to lo <= f <= hi (Lawson-Hanson style BVLS).

    Deterministic: ties in the gradient test break toward the lowest index,
    free subproblems use SVD least squares.
    """
    m = A.shape[1]
    f = lo.copy()
    at_lower = np.ones(m, dtype=bool)
    at_upper = np.zeros(m, dtype=bool)
    free = np.zeros(m, dtype=bool)
    tol = 1e-11

    for _ in range(max_iter):
        w = A.T @ (b - A @ f)
        w_eff = np.where(at_lower & (w > tol), w,
                         np.where(at_upper & (w < -tol), -w, 0.0))
        if not np.any(w_eff > 0.0):
            break
        j = int(np.argmax(w_eff))  # argmax takes the lowest index on ties
        at_lower[j] = at_upper[j] = False
        free[j] = True

        # inner loop: re-solve on the free set, clipping at blocking bounds
        for _ in range(max_iter):
            idx = np.flatnonzero(free)
            rhs = b - A[:, ~free] @ f[~free]
            z, *_ = np.linalg.lstsq(A[:, idx], rhs, rcond=None)
            inside = (z >= lo[idx] - tol) & (z <= hi[idx] + tol)
            if np.all(inside):
                f[idx] = np.clip(z, lo[idx], hi[idx])
                break
            # step as far toward z as the first violated bound allows
            alpha = 1.0
            for k, zk in zip(idx, z):
                if zk < lo[k] - tol:
                    a = (lo[k] - f[k]) / (zk - f[k])
                elif zk > hi[k] + tol:
                    a = (hi[k] - f[k]) / (zk - f[k])
                else:
                    continue
                alpha = min(alpha, a)
            f[idx] = f[idx] + alpha * (z - f[idx])
            for k in idx:
                if f[k] <= lo[k] + tol:
                    f[k] = lo[k]
                    free[k] = False
                    at_lower[k] = True
                elif f[k] >= hi[k] - tol:
                    f[k] = hi[k]
                    free[k] = False
                    at_upper[k] = True
            if not np.any(free):
                break
    return f


def _project_to_bias(A, y, f0, bias, lo, hi, max_iter=200):
    """min ||f - bias|| s.t. A f = y, lo <= f <= hi, warm-started at the
    feasible f0 (which satisfies the equality by construction)."""
    f = f0.copy()
    m = len(f)
    tol = 1e-10
    at_lo = np.abs(f - lo) <= tol
    at_hi = np.abs(f - hi) <= tol

    for _ in range(max_iter):
        fixed = at_lo | at_hi
        idx = np.flatnonzero(~fixed)
        if idx.size:
            Af = A[:, idx]
            c = y - A[:, fixed] @ f[fixed]
            # min ||g - bias_F|| s.t. Af g = c; consistent since f is a witness
            g = bias[idx] + np.linalg.pinv(Af) @ (c - Af @ bias[idx])
            d = g - f[idx]
        else:
            d = np.zeros(0)

        if idx.size and np.max(np.abs(d)) > tol:
            alpha, blocker = 1.0, -1
            for pos, k in enumerate(idx):
                if d[pos] > tol:
                    a = (hi[k] - f[k]) / d[pos]
                elif d[pos] < -tol:
                    a = (lo[k] - f[k]) / d[pos]
                else:
                    continue
                if a < alpha - 1e-14:
                    alpha, blocker = a, k
            f[idx] = f[idx] + max(alpha, 0.0) * d
            if blocker >= 0:
                f[blocker] = lo[blocker] if d[list(idx).index(blocker)] < 0 else hi[blocker]
                if f[blocker] == lo[blocker]:
                    at_lo[blocker] = True
                else:
                    at_hi[blocker] = True
                continue

        # at the constrained minimum for this working set: check multipliers
        if idx.size:
            lam, *_ = np.linalg.lstsq(A[:, idx].T, f[idx] - bias[idx], rcond=None)
        else:
            lam = np.zeros(A.shape[0])
        mu = (f - bias) - A.T @ lam
        release = -1
        for k in np.flatnonzero(at_lo):
            if mu[k] < -1e-9:       # lower bound holds f up; negative mu says drop it
                release = k
                break
        if release < 0:
            for k in np.flatnonzero(at_hi):
                if mu[k] > 1e-9:
                    release = k
                    break
        if release < 0:
            break
        at_lo[release] = at_hi[release] = False
    return f


def allocate_tensions(G, tau, kinds, gains):
    """Torque -> element tensions through tau = -G^T f.

    Returns (f, rank_deficient). When tau is not achievable inside the box,
    f minimizes the torque residual and rank_deficient is set; among
    residual-minimizers the result stays closest to the bias (pretension
    floor on wires, zero on belts).
    """
    G = np.asarray(G, dtype=float)
    tau = np.asarray(tau, dtype=float)
    m = G.shape[0]
    A = -G.T                                  # tau = A f
    is_wire = np.array([k == "wire" for k in kinds])
    lo = np.where(is_wire, gains.tension_floor_n, -gains.tension_cap_n)
    hi = np.full(m, gains.tension_cap_n)
    bias = np.where(is_wire, gains.tension_floor_n, 0.0)

    f1 = _bounded_lstsq(A, tau, lo, hi)
    residual = float(np.linalg.norm(A @ f1 - tau))
    y = A @ f1
    f = _project_to_bias(A, y, f1, bias, lo, hi)

    rank = np.linalg.matrix_rank(G, tol=1e-9)
    rank_deficient = bool(rank < G.shape[1] or residual > 1e-6)
    return f, rank_deficient, residual


def tension_to_current(f, model):
    """i = f * pulley_radius / (gear * kt) per element, clamped to the motor
    limit. Returns (currents, saturated_anywhere)."""
    f = np.asarray(f, dtype=float)
    i = np.empty_like(f)
    saturated = False
    for e, elem in enumerate(model.elements):
        raw = f[e] * elem.pulley_radius_m / (elem.motor.gear_ratio * elem.motor.torque_constant_nm_per_a)
        cap = elem.motor.max_current_a
        i[e] = min(max(raw, -cap), cap)
        if abs(raw) > cap + 1e-12:
            saturated = True
    return i, saturated


def control_step(model, routing, posture, trajectory, t, gains, rings=None):
    """One controller tick: sample the spline, build the torque demand,
    allocate tensions, convert to currents. Pure function of its inputs."""
    q_ref, qd_ref, _ = trajectory.sample(t)
    tau = compute_torque(model, posture.q, q_ref, gains,
                         qd=posture.qd, qd_ref=qd_ref)
    if rings is None:
        rings = solve_ring_angles(model, routing, posture.q)
    G = muscle_jacobian(model, routing, posture.q, rings=rings)
    kinds = [e.kind for e in routing.elements]
    f, rank_def, residual = allocate_tensions(G, tau, kinds, gains)
    currents, saturated = tension_to_current(f, model)
    return ControlOutput(tau_cmd=tau, tensions_cmd=f, currents_cmd=currents,
                         rank_deficient=rank_def, current_saturated=saturated,
                         torque_residual_nm=residual)
