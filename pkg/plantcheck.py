# Scratch checks for plant.py. Not part of the package.
import numpy as np

from vlimb.model import default_vlimb, GRAVITY
from vlimb.tendon import resolve_routing
from vlimb.control import gains_from_model, plan_trajectory, control_step
from vlimb import plant
from vlimb.kinematics import forward_kinematics

model = default_vlimb()
gains = gains_from_model(model)
params = plant.PlantParams()


def run_hold(q_hold, seconds=3.0, mode="manipulation", payload=0.0):
    routing = resolve_routing(model, mode)
    st = plant.init_state(model, q=q_hold, mode=mode)
    st.payload_mass_kg = payload
    traj = plan_trajectory(model, np.array(q_hold), np.array(q_hold), 0.5)
    n = int(seconds / params.dt_s)
    for _ in range(n):
        out = control_step(model, routing, st.joints, traj, st.t, gains, rings=st.rings)
        st = plant.step(model, routing, st, out.currents_cmd, params)
        if st.halted:
            print("HALTED:", st.diagnostic)
            return st
    err = st.joints.q - np.array(q_hold)
    print(f"hold {np.round(q_hold,2)} err={np.round(err,4)} |err|max={np.max(np.abs(err)):.4f} "
          f"qd_max={np.max(np.abs(st.joints.qd)):.5f} stop={st.hardstop_contact}")
    return st


print("== closed-loop holds ==")
for q in [(0, 0, 0, 0, 0), (0, 1.2, 0, 0, 0), (0, 0.5, 0.8, 0.5, 0),
          (0.5, -1.2, 1.7, 0.3, 1.0), (0, 0, 0.5, 0.8, 0)]:
    run_hold(q)

print("== tracking move ==")
routing = resolve_routing(model, "manipulation")
st = plant.init_state(model, q=(0, 0, 0, 0, 0))
qd_tgt = np.array([0.3, 0.6, 0.9, 0.7, -0.4])
traj = plan_trajectory(model, st.joints.q, qd_tgt, 3.0)
worst = 0.0
while st.t < 4.5:
    out = control_step(model, routing, st.joints, traj, st.t, gains, rings=st.rings)
    st = plant.step(model, routing, st, out.currents_cmd, params)
    q_ref = traj.sample(st.t)[0]
    worst = max(worst, float(np.max(np.abs(st.joints.q - q_ref))))
print(f"move track worst={worst:.4f} final_err={np.max(np.abs(st.joints.q - qd_tgt)):.4f}")

print("== grasp steady force (world anchor) ==")
q0 = np.array([0, 0.5, 0.8, 0.5, 0])
st = plant.init_state(model, q=q0)
# settle the hold first
traj = plan_trajectory(model, q0, q0, 0.5)
for _ in range(2000):
    out = control_step(model, routing, st.joints, traj, st.t, gains, rings=st.rings)
    st = plant.step(model, routing, st, out.currents_cmd, params)
tip = forward_kinematics(model, st.joints.q).tip_position()
st = plant.apply_grasp(st, model, tip)
st.payload_mass_kg = 20.0
for _ in range(4000):
    out = control_step(model, routing, st.joints, traj, st.t, gains, rings=st.rings)
    st = plant.step(model, routing, st, out.currents_cmd, params)
fg = np.linalg.norm(st.grasp_force_n)
w = 20.0 * GRAVITY
print(f"grasp |F|={fg:.2f} expect {w:.2f} rel={(fg-w)/w:+.3%} Fz={st.grasp_force_n[2]:.2f}")

print("== pendulum period ==")
# all mass in upper_arm, other links near massless; swing UpperArmPitch
from dataclasses import replace as drep
links = list(model.links)
for i, l in enumerate(links):
    if l.name == "upper_arm":
        links[i] = drep(l, mass_kg=2.0, com_offset_m=(0, 0, -0.2),
                        inertia_diag_kgm2=(1e-8, 1e-8, 1e-8))
    else:
        links[i] = drep(l, mass_kg=1e-9, inertia_diag_kgm2=(1e-12, 1e-12, 1e-12))
joints = tuple(drep(j, viscous_friction_nms_per_rad=0.0, coulomb_friction_nm=0.0)
               for j in model.joints)
elems0 = tuple(drep(e, motor=drep(e.motor, rotor_inertia_kgm2=0.0))
               for e in model.elements)
pend = drep(model, links=tuple(links), joints=joints, elements=elems0)
st = plant.init_state(pend, q=(0, 0.05, 0, 0, 0))
zero_i = np.zeros(len(model.elements))
prev = st.joints.q[1]
crossings = []
while st.t < 6.0:
    st = plant.step(pend, routing, st, zero_i, params)
    cur = st.joints.q[1]
    if prev < 0.0 <= cur:
        # linear interp crossing time
        crossings.append(st.t - params.dt_s * cur / (cur - prev))
    prev = cur
L = 0.2
T_meas = np.mean(np.diff(crossings)) if len(crossings) > 2 else float("nan")
T_theo = 2 * np.pi * np.sqrt(L / GRAVITY)
print(f"period meas={T_meas:.5f} theo={T_theo:.5f} rel={(T_meas-T_theo)/T_theo:+.4%}")

print("== energy drift (frictionless, unforced) ==")
from vlimb.kinematics import kin_arrays
def energy(m, q, qd):
    M = plant.effective_mass_matrix(m, routing, q)
    fk = forward_kinematics(m, q)
    ar = kin_arrays(m)
    V = 0.0
    for i in range(len(m.links)):
        V += ar.masses[i] * GRAVITY * fk.point(i, ar.coms[i])[2]
    return 0.5 * qd @ M @ qd + V
fric0 = drep(model, joints=joints)
st = plant.init_state(fric0, q=(0.3, 0.8, 0.4, 0.6, 0.2))
E0 = energy(fric0, st.joints.q, st.joints.qd)
while st.t < 2.0:
    st = plant.step(fric0, routing, st, zero_i, params)
E1 = energy(fric0, st.joints.q, st.joints.qd)
print(f"E0={E0:.4f} E1={E1:.4f} drift/s={(E1-E0)/abs(E0)/2.0:+.4%}")

print("== set_mode guard ==")
st = plant.init_state(model, q=(0, 0, 0.5, 0.8, 0))
try:
    st2 = plant.set_mode(st, model, "power")
    print("switch ok, mode:", st2.mode, "elements:", len(st2.wire.lengths))
except plant.ModeSwitchError as e:
    print("rejected:", e)
st.joints.qd = st.joints.qd + 0.02
try:
    plant.set_mode(st, model, "power")
    print("BUG: moving switch accepted")
except plant.ModeSwitchError as e:
    print("moving switch rejected ok:", e)
