"""Simulated device: motor currents in, joint motion out.

Currents map to pulley tensions through the gear chain, lagged by a
first-order transmission filter. Joint torques come from the muscle Jacobian
plus viscous/Coulomb friction, one-sided hard-stop springs, and (when
engaged) a stiff spring-damper grasp between the hand and an anchor point.
Forward dynamics integrate with semi-implicit Euler.

The grasp anchor has two flavors. A world-fixed anchor pins the hand to a
point in the base frame. A mobile anchor is a separate rigid body with one
vertical degree of freedom resting on unilateral ground support: winching
the arm down against the grasp hoists that body once the ground force
reaches zero. Working in the arm's base frame this way is equivalent to the
arm hoisting its own welded base toward a fixed bar, with the lifted mass
carried by the anchor body.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .model import GRAVITY
from .kinematics import (
    JointPosture,
    forward_kinematics,
    point_jacobian,
    bias_forces,
    mass_matrix,
)
from .tendon import (
    RingState,
    WirePosture,
    element_lengths,
    muscle_jacobian,
    resolve_routing,
    solve_ring_angles,
)


@dataclass
class BeltWireContact:
    """Fouling of the power chord on the belt housings once the elbow fold
    passes a threshold. The rubbing interface brakes the fold (extra Coulomb
    on the lower elbow) and chokes the chord itself: tension delivered past
    the contact saturates at slip_tension_n no matter what the motor pulls.
    Without the choke a stiff grasp can wind up elastic energy and drag the
    fold through any finite joint friction. Engagement ramps in over
    engage_band_rad below the threshold; a hard on/off switch makes the
    fold chatter around the threshold instead of settling."""
    enabled: bool = False
    angle_threshold_rad: float = 2.2
    engage_band_rad: float = 0.1
    extra_coulomb_nm: float = 400.0
    slip_tension_n: float = 300.0


def _contact_engagement(q_elbow_fold, bwc):
    # smoothstep from 0 at (threshold - band) to 1 at the threshold
    if not bwc.enabled:
        return 0.0
    x = (q_elbow_fold - (bwc.angle_threshold_rad - bwc.engage_band_rad))
    x = min(max(x / bwc.engage_band_rad, 0.0), 1.0)
    return x * x * (3.0 - 2.0 * x)


@dataclass
class PlantParams:
    dt_s: float = 1e-3
    transmission_lag_s: float = 0.03
    hardstop_stiffness_nm_per_rad: float = 1e4
    hardstop_damping_nms_per_rad: float = 50.0
    hardstop_flag_tol_rad: float = 1e-3
    grasp_stiffness_n_per_m: float = 2e5
    grasp_damping_ns_per_m: float = 2e3
    ground_stiffness_n_per_m: float = 1e6
    ground_damping_ns_per_m: float = 2e3
    coulomb_smoothing_rad_s: float = 5e-3
    belt_wire_contact: BeltWireContact = field(default_factory=BeltWireContact)

    def __post_init__(self):
        if self.dt_s <= 0.0:
            raise ValueError("dt must be positive")
        if self.dt_s > 2e-3:
            raise ValueError("dt above 2 ms breaks the hard-stop stability contract")


@dataclass
class SimState:
    t: float
    joints: JointPosture
    rings: RingState
    wire: WirePosture
    mode: str
    payload_mass_kg: float = 0.0
    grasp_anchor: np.ndarray = None        # world point, None when released
    grasp_mobile: bool = False
    anchor_mass_kg: float = 0.0
    anchor_z_m: float = 0.0                # vertical travel of the mobile body
    anchor_zd_m_s: float = 0.0
    ground_force_n: float = 0.0
    grasp_force_n: np.ndarray = None       # world force on the hand, last step
    hardstop_contact: bool = False
    halted: bool = False
    diagnostic: str = ""

    def copy(self):
        return replace(
            self,
            joints=self.joints.copy(),
            rings=RingState(self.rings),
            wire=self.wire.copy(),
            grasp_anchor=None if self.grasp_anchor is None else self.grasp_anchor.copy(),
            grasp_force_n=None if self.grasp_force_n is None else self.grasp_force_n.copy(),
        )


def init_state(model, q=None, mode="manipulation"):
    """Fresh state at rest; wire tensions start at zero (slack motors)."""
    q = np.zeros(5) if q is None else np.asarray(q, dtype=float).copy()
    routing = resolve_routing(model, mode)
    fk = forward_kinematics(model, q)
    rings = solve_ring_angles(model, routing, q, fk=fk)
    lengths = element_lengths(model, routing, q, rings=rings, fk=fk)
    m = len(routing.elements)
    wire = WirePosture(lengths=lengths, rates=np.zeros(m), tensions=np.zeros(m))
    return SimState(t=0.0, joints=JointPosture(q=q, qd=np.zeros(5), tau=np.zeros(5)),
                    rings=rings, wire=wire, mode=mode)


_loaded_cache = {}


def _effective_model(model, payload_mass):
    if payload_mass <= 0.0:
        return model
    key = (id(model), round(float(payload_mass), 9))
    got = _loaded_cache.get(key)
    if got is None:
        got = model.with_payload(payload_mass)
        if len(_loaded_cache) > 32:
            _loaded_cache.clear()
        _loaded_cache[key] = got
    return got


def reflected_masses(model):
    """Per-element drivetrain mass in cable-length coordinates,
    J_rotor * (gear / pulley_radius)^2. Projected through the muscle
    Jacobian this is the inertia the joints feel from the geared rotors."""
    return np.array([e.motor.rotor_inertia_kgm2
                     * (e.motor.gear_ratio / e.pulley_radius_m) ** 2
                     for e in model.elements])


def effective_mass_matrix(model, routing, q, payload_mass=0.0, G=None):
    """Joint-space mass matrix including reflected drivetrain inertia,
    M(q) + G' rho G. This is the M the integrator uses; the matching
    velocity force is G' rho dG/dt qd (see step)."""
    eff = _effective_model(model, payload_mass)
    M = mass_matrix(eff, q)
    if G is None:
        G = muscle_jacobian(model, routing, q)
    rho = reflected_masses(model)
    return M + G.T @ (rho[:, None] * G)


def _drivetrain_rate_force(model, routing, q, qd, G, rho):
    """G' rho (dG/dt) qd, the velocity half of the rigid rotor coupling.
    dG/dt qd only needs the derivative of G along qd, one extra Jacobian
    at a nudged posture. Hessian symmetry of l(q) makes this together with
    the G' rho G mass term the exact Lagrangian contribution."""
    speed = float(np.max(np.abs(qd)))
    if speed < 1e-12 or not np.any(rho):
        return np.zeros_like(qd)
    eps = 1e-6 / max(speed, 1.0)
    G2 = muscle_jacobian(model, routing, q + eps * qd)
    Gdot_qd = ((G2 - G) / eps) @ qd
    return G.T @ (rho * Gdot_qd)


def _friction_torque(arrays, qd, params, q_elbow_fold):
    coul = arrays.coulomb
    engage = _contact_engagement(q_elbow_fold, params.belt_wire_contact)
    if engage > 0.0:
        coul = coul.copy()
        coul[3] += engage * params.belt_wire_contact.extra_coulomb_nm
    smooth = np.tanh(qd / params.coulomb_smoothing_rad_s)
    return -arrays.viscous * qd - coul * smooth


def _hardstop_torque(model, q, qd, params):
    lo, hi = model.limits_lo(), model.limits_hi()
    tau = np.zeros_like(q)
    contact = False
    k = params.hardstop_stiffness_nm_per_rad
    d = params.hardstop_damping_nms_per_rad
    for j in range(len(q)):
        if q[j] > hi[j]:
            pen = q[j] - hi[j]
            tau[j] = -k * pen - d * max(qd[j], 0.0)
            contact = contact or pen > params.hardstop_flag_tol_rad
        elif q[j] < lo[j]:
            pen = lo[j] - q[j]
            tau[j] = k * pen - d * min(qd[j], 0.0)
            contact = contact or pen > params.hardstop_flag_tol_rad
    return tau, contact


def step(model, routing, state, currents, params):
    """Advance one dt. Pure: returns a new SimState, never mutates input."""
    if state.halted:
        return state

    st = state.copy()
    q, qd = st.joints.q, st.joints.qd
    dt = params.dt_s

    # commanded tensions from currents through the gear chain
    f_cmd = np.empty(len(model.elements))
    for e, elem in enumerate(model.elements):
        f_cmd[e] = (currents[e] * elem.motor.torque_constant_nm_per_a
                    * elem.motor.gear_ratio / elem.pulley_radius_m)

    # exact first-order lag over one step, then wire unilaterality
    decay = np.exp(-dt / params.transmission_lag_s)
    f = f_cmd + (st.wire.tensions - f_cmd) * decay
    for e, elem in enumerate(model.elements):
        if elem.kind == "wire":
            f[e] = max(f[e], 0.0)

    bwc = params.belt_wire_contact
    engage = _contact_engagement(q[3], bwc)
    if engage > 0.0:
        # chord fouled on the belt housings: tension past the rub point caps
        for e, elem in enumerate(model.elements):
            if any(p.switch_group for p in elem.routing):
                f[e] -= engage * max(f[e] - bwc.slip_tension_n, 0.0)

    fk = forward_kinematics(model, q)
    rings = solve_ring_angles(model, routing, q, fk=fk)
    G = muscle_jacobian(model, routing, q, rings=rings, fk=fk)

    tau = -G.T @ f
    tau += _friction_torque(fk.arrays, qd, params, q[3])
    tau_stop, contact = _hardstop_torque(model, q, qd, params)
    tau += tau_stop

    # grasp spring-damper between hand tip and anchor
    grasp_force = np.zeros(3)
    anchor_zdd = 0.0
    ground = 0.0
    if st.grasp_anchor is not None:
        tip = fk.tip_position()
        Jt = point_jacobian(model, q, len(model.links) - 1,
                            fk.arrays.tip_offset, fk=fk)
        tip_v = Jt @ qd
        anchor = st.grasp_anchor.copy()
        anchor_v = np.zeros(3)
        if st.grasp_mobile:
            anchor[2] += st.anchor_z_m
            anchor_v[2] = st.anchor_zd_m_s
        dx = tip - anchor
        dv = tip_v - anchor_v
        grasp_force = (-params.grasp_stiffness_n_per_m * dx
                       - params.grasp_damping_ns_per_m * dv)
        tau += Jt.T @ grasp_force
        if st.grasp_mobile and st.anchor_mass_kg > 0.0:
            fz = -grasp_force[2]                      # reaction on the body
            if st.anchor_z_m < 0.0:
                ground = max(0.0, -params.ground_stiffness_n_per_m * st.anchor_z_m
                             - params.ground_damping_ns_per_m * st.anchor_zd_m_s)
            anchor_zdd = (fz + ground) / st.anchor_mass_kg - GRAVITY

    eff = _effective_model(model, st.payload_mass_kg)
    rho = reflected_masses(model)
    M = mass_matrix(eff, q) + G.T @ (rho[:, None] * G)
    h = bias_forces(eff, q, qd) + _drivetrain_rate_force(model, routing, q, qd, G, rho)
    try:
        qdd = np.linalg.solve(M, tau - h)
    except np.linalg.LinAlgError:
        st.halted = True
        st.diagnostic = "singular mass matrix"
        return st

    qd_new = qd + dt * qdd
    q_new = q + dt * qd_new

    if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(qd_new))):
        st.halted = True
        st.diagnostic = f"non-finite state at t={st.t:.4f}"
        return st

    st.joints = JointPosture(q=q_new, qd=qd_new, tau=tau)
    if st.grasp_mobile:
        st.anchor_zd_m_s = st.anchor_zd_m_s + dt * anchor_zdd
        st.anchor_z_m = st.anchor_z_m + dt * st.anchor_zd_m_s
        st.ground_force_n = ground
    st.grasp_force_n = grasp_force
    st.hardstop_contact = contact

    fk2 = forward_kinematics(model, q_new)
    rings2 = solve_ring_angles(model, routing, q_new, fk=fk2)
    lengths = element_lengths(model, routing, q_new, rings=rings2, fk=fk2)
    st.rings = rings2
    st.wire = WirePosture(lengths=lengths, rates=G @ qd_new, tensions=f)
    st.t = st.t + dt
    return st


class GraspError(ValueError):
    pass


class ModeSwitchError(ValueError):
    pass


def apply_grasp(state, model, anchor, mobile=False, anchor_mass_kg=0.0):
    """Engage the hand on an anchor point. The hand must already be within
    5 mm; grasping is not a reach action."""
    anchor = np.asarray(anchor, dtype=float)
    fk = forward_kinematics(model, state.joints.q)
    gap = float(np.linalg.norm(fk.tip_position() - anchor))
    if gap > 5e-3:
        raise GraspError(f"hand is {gap * 1e3:.1f} mm from the anchor, max 5 mm")
    st = state.copy()
    st.grasp_anchor = anchor.copy()
    st.grasp_mobile = bool(mobile)
    st.anchor_mass_kg = float(anchor_mass_kg)
    st.anchor_z_m = 0.0
    st.anchor_zd_m_s = 0.0
    st.ground_force_n = 0.0
    return st


def release_grasp(state):
    st = state.copy()
    st.grasp_anchor = None
    st.grasp_mobile = False
    st.anchor_mass_kg = 0.0
    st.grasp_force_n = np.zeros(3)
    return st


def set_mode(state, model, mode_name):
    """Swap routing mode. Allowed only near rest with slack wires, the way
    the physical waypoints are re-pinned by hand; lengths re-zero to the new
    geometry so no tension step occurs."""
    mode = model.mode(mode_name)  # validates the name
    floor = model.controller.tension_floor_n
    if float(np.max(np.abs(state.joints.qd))) >= 0.01:
        raise ModeSwitchError("mode switch rejected: not stationary")
    if float(np.max(state.wire.tensions)) >= 2.0 * floor:
        raise ModeSwitchError("mode switch rejected: wires are under tension")
    st = state.copy()
    routing = resolve_routing(model, mode_name)
    fk = forward_kinematics(model, st.joints.q)
    rings = solve_ring_angles(model, routing, st.joints.q, fk=fk)
    lengths = element_lengths(model, routing, st.joints.q, rings=rings, fk=fk)
    st.mode = mode_name
    st.rings = rings
    st.wire = WirePosture(lengths=lengths, rates=np.zeros(len(lengths)),
                          tensions=st.wire.tensions.copy())
    return st
