"""Serial-chain kinematics and dynamics for the five-joint arm.

All quantities are expressed in the world frame; the base link is welded at
the origin. Joint i connects links[i] -> links[i+1]; its origin sits at the
end of the parent link, (0, 0, -parent_length) in the parent frame, and its
axis is given in the parent frame (equal to the child frame at q = 0).
"""

from dataclasses import dataclass
import numpy as np

from .model import GRAVITY


@dataclass(frozen=True)
class FramePose:
    """World-frame pose of a link frame."""
    position: np.ndarray   # (3,)
    rotation: np.ndarray   # (3,3), orthonormal, det +1

    def transform(self, local_point):
        return self.position + self.rotation @ np.asarray(local_point, dtype=float)


@dataclass
class JointPosture:
    """Joint-space snapshot: positions, velocities, applied torques."""
    q: np.ndarray
    qd: np.ndarray
    tau: np.ndarray

    @staticmethod
    def zero():
        return JointPosture(q=np.zeros(5), qd=np.zeros(5), tau=np.zeros(5))

    def copy(self):
        return JointPosture(self.q.copy(), self.qd.copy(), self.tau.copy())


class KinArrays:
    """Static per-model arrays used by every kinematics call."""

    def __init__(self, model):
        n = len(model.joints)
        self.n = n
        self.axes = np.array([j.axis for j in model.joints], dtype=float)
        # joint i origin in parent frame = end of parent link
        self.offsets = np.array(
            [(0.0, 0.0, -model.links[i].length_m) for i in range(n)], dtype=float)
        self.masses = np.array([l.mass_kg for l in model.links], dtype=float)
        self.coms = np.array([l.com_offset_m for l in model.links], dtype=float)
        self.inertias = np.array(
            [np.diag(l.inertia_diag_kgm2) for l in model.links], dtype=float)
        self.tip_offset = np.array(
            (0.0, 0.0, -model.links[-1].length_m), dtype=float)
        self.limits_lo = np.array(model.limits_lo(), dtype=float)
        self.limits_hi = np.array(model.limits_hi(), dtype=float)
        self.viscous = np.array(
            [j.viscous_friction_nms_per_rad for j in model.joints], dtype=float)
        self.coulomb = np.array(
            [j.coulomb_friction_nm for j in model.joints], dtype=float)


_KIN_CACHE = {}


def kin_arrays(model):
    key = id(model)
    hit = _KIN_CACHE.get(key)
    if hit is None or hit[0] is not model:
        hit = (model, KinArrays(model))
        _KIN_CACHE[key] = hit
        if len(_KIN_CACHE) > 64:
            # drop stale ids so the cache cannot grow without bound
            for k in list(_KIN_CACHE)[:32]:
                if k != key:
                    _KIN_CACHE.pop(k, None)
    return hit[1]


def _axis_rotation(axis, angle):
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    C = 1.0 - c
    return np.array([
        [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
        [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
        [z * x * C - y * s, z * y * C + x * s, c + z * z * C]])


def _cross3(a, b):
    # np.cross spends most of its time on broadcast bookkeeping; the sim only
    # ever crosses single 3-vectors, so spell it out.
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


class FKResult:
    """World poses of each link plus joint axes/origins, reused everywhere."""

    __slots__ = ("R", "p", "joint_origins", "joint_axes", "arrays")

    def __init__(self, R, p, joint_origins, joint_axes, arrays):
        self.R = R                       # (n_links, 3, 3)
        self.p = p                       # (n_links, 3)
        self.joint_origins = joint_origins  # (n_joints, 3)
        self.joint_axes = joint_axes        # (n_joints, 3)
        self.arrays = arrays

    def poses(self):
        return [FramePose(position=self.p[i].copy(), rotation=self.R[i].copy())
                for i in range(self.p.shape[0])]

    def point(self, link_index, offset):
        return self.p[link_index] + self.R[link_index] @ np.asarray(offset, float)

    def tip_position(self):
        return self.point(self.p.shape[0] - 1, self.arrays.tip_offset)


def forward_kinematics(model, q):
    """World pose of every link frame. Returns an FKResult; .poses() gives
    the FramePose list, .tip_position() the end point of the chain."""
    ar = kin_arrays(model)
    q = np.asarray(q, dtype=float)
    n = ar.n
    R = np.empty((n + 1, 3, 3))
    p = np.empty((n + 1, 3))
    R[0] = np.eye(3)
    p[0] = 0.0
    joint_origins = np.empty((n, 3))
    joint_axes = np.empty((n, 3))
    for i in range(n):
        o = p[i] + R[i] @ ar.offsets[i]
        a = R[i] @ ar.axes[i]
        joint_origins[i] = o
        joint_axes[i] = a
        R[i + 1] = R[i] @ _axis_rotation(ar.axes[i], q[i])
        p[i + 1] = o
    return FKResult(R, p, joint_origins, joint_axes, ar)


def point_jacobian(model, q, link, offset_m=(0.0, 0.0, 0.0), fk=None):
    """3x5 Jacobian of a point rigidly attached to a link.

    `link` may be a name or index. Columns for joints that are not on the
    path from the base to the link are zero.
    """
    if fk is None:
        fk = forward_kinematics(model, q)
    idx = model.link_index(link) if isinstance(link, str) else int(link)
    pw = fk.point(idx, offset_m)
    return _jacobian_from_fk(fk, idx, pw)


def _jacobian_from_fk(fk, link_index, point_world):
    J = np.zeros((3, fk.arrays.n))
    k = min(link_index, fk.arrays.n)
    a = fk.joint_axes[:k]
    d = point_world - fk.joint_origins[:k]
    J[0, :k] = a[:, 1] * d[:, 2] - a[:, 2] * d[:, 1]
    J[1, :k] = a[:, 2] * d[:, 0] - a[:, 0] * d[:, 2]
    J[2, :k] = a[:, 0] * d[:, 1] - a[:, 1] * d[:, 0]
    return J


def rnea(model, q, qd, qdd, gravity=GRAVITY, fk=None):
    """Recursive Newton-Euler inverse dynamics.

    Returns the joint torques the actuators must apply to produce qdd at
    (q, qd) under gravity. Gravity enters as the usual fictitious upward
    base acceleration, so rnea(q, 0, 0) is the static holding torque.
    """
    ar = kin_arrays(model)
    if fk is None:
        fk = forward_kinematics(model, q)
    qd = np.asarray(qd, dtype=float)
    qdd = np.asarray(qdd, dtype=float)
    n = ar.n
    nl = n + 1

    w = np.zeros((nl, 3))      # angular velocity
    dw = np.zeros((nl, 3))     # angular acceleration
    a_frame = np.zeros((nl, 3))  # linear acceleration of the frame origin
    a_frame[0] = (0.0, 0.0, gravity)

    for i in range(n):
        a = fk.joint_axes[i]
        o = fk.joint_origins[i]
        # acceleration of the joint origin, carried by the parent
        r = o - fk.p[i]
        ao = a_frame[i] + _cross3(dw[i], r) + _cross3(w[i], _cross3(w[i], r))
        k = i + 1
        w[k] = w[i] + a * qd[i]
        dw[k] = dw[i] + a * qdd[i] + _cross3(w[i], a * qd[i])
        a_frame[k] = ao
        # note: child frame origin coincides with the joint origin

    # per-link com accelerations and net forces
    f = np.zeros((nl, 3))
    nmom = np.zeros((nl, 3))   # moment about the link frame origin
    for k in range(nl):
        c_world = fk.R[k] @ ar.coms[k]
        a_com = a_frame[k] + _cross3(dw[k], c_world) \
            + _cross3(w[k], _cross3(w[k], c_world))
        I_w = fk.R[k] @ ar.inertias[k] @ fk.R[k].T
        F = ar.masses[k] * a_com
        N_com = I_w @ dw[k] + _cross3(w[k], I_w @ w[k])
        f[k] = F
        nmom[k] = N_com + _cross3(c_world, F)

    # backward pass: accumulate child wrenches onto parents
    tau = np.zeros(n)
    fa = f.copy()
    na = nmom.copy()
    for k in range(nl - 1, 0, -1):
        i = k - 1   # joint index driving link k
        tau[i] = fk.joint_axes[i] @ na[k]
        # shift wrench to the parent frame origin
        r = fk.p[k] - fk.p[i if i >= 0 else 0]
        fa[k - 1] += fa[k]
        na[k - 1] += na[k] + _cross3(r, fa[k])
    return tau


def gravity_torque(model, q, fk=None):
    """Static holding torque against gravity at posture q."""
    return rnea(model, q, np.zeros(5), np.zeros(5), fk=fk)


def bias_forces(model, q, qd, fk=None):
    """Coriolis/centrifugal plus gravity torque at (q, qd)."""
    return rnea(model, q, qd, np.zeros(5), fk=fk)


def mass_matrix(model, q, fk=None):
    """Joint-space mass matrix via composite rigid bodies."""
    ar = kin_arrays(model)
    if fk is None:
        fk = forward_kinematics(model, q)
    n = ar.n
    nl = n + 1

    # composite mass / com / inertia of link k and everything distal to it
    cm = np.zeros(nl)
    cc = np.zeros((nl, 3))
    ci = np.zeros((nl, 3, 3))
    for k in range(nl - 1, -1, -1):
        m = ar.masses[k]
        c = fk.point(k, ar.coms[k])
        I_w = fk.R[k] @ ar.inertias[k] @ fk.R[k].T
        if k == nl - 1:
            cm[k], cc[k], ci[k] = m, c, I_w
        else:
            mc, ccd, cid = cm[k + 1], cc[k + 1], ci[k + 1]
            mt = m + mc
            ct = (m * c + mc * ccd) / mt
            def shift(I, mm, frm):
                d = frm - ct
                return I + mm * ((d @ d) * np.eye(3) - np.outer(d, d))
            cm[k] = mt
            cc[k] = ct
            ci[k] = shift(I_w, m, c) + shift(cid, mc, ccd)

    M = np.zeros((n, n))
    for j in range(n):
        aj = fk.joint_axes[j]
        oj = fk.joint_origins[j]
        comp = j + 1   # composite body rooted at child link of joint j
        # spatial force from unit angular acceleration about (aj, oj)
        F = cm[comp] * _cross3(aj, cc[comp] - oj)
        N = ci[comp] @ aj + _cross3(cc[comp] - oj, F)
        for i in range(j + 1):
            ai = fk.joint_axes[i]
            oi = fk.joint_origins[i]
            M[i, j] = ai @ (N + _cross3(oj - oi, F))
            M[j, i] = M[i, j]
    return M
