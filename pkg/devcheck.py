import numpy as np
from dataclasses import replace
from vlimb.model import default_vlimb
from vlimb import plant, scenarios as S
from vlimb.tendon import resolve_routing
from vlimb.control import gains_from_model
from vlimb.kinematics import forward_kinematics

m = default_vlimb()
params = plant.PlantParams()
data = S._load_data("lift.json")
gains = gains_from_model(m)
rm = resolve_routing(m, "manipulation")
rp = resolve_routing(m, "power")
state = plant.init_state(m)
rec = S._Recorder(m, params.dt_s)
prelift = np.array(data["prelift_q"])
state, settled, _ = S._track_to(m, rm, state, gains, prelift,
                                data["approach_speed_rad_s"],
                                data["settle_s"], params, rec)
anchor = forward_kinematics(m, state.joints.q).tip_position()
state = plant.apply_grasp(state, m, anchor, mobile=True, anchor_mass_kg=60.0)
zero = np.zeros(len(m.elements))
for k in range(int(round(data["slack_timeout_s"] / params.dt_s))):
    state = plant.step(m, rm, state, zero, params)
    if k * params.dt_s >= data["slack_min_s"] \
            and float(np.max(np.abs(state.joints.qd))) < 0.008 \
            and float(np.max(state.wire.tensions)) < 19.0:
        break
state = plant.set_mode(state, m, "power")
engaged = state.copy()
path_q, path_rise = S._build_lift_path(m, state.joints.q,
                                       data["path_elbow_up_max_rad"],
                                       data["path_elbow_max_rad"],
                                       data["path_points"])
print("rail cap", round(path_rise[-1], 3), "ends", np.round(path_q[-1], 3))


from vlimb.control import tension_to_current
_ft = np.zeros(len(m.elements))
_ft[4] = 1000.0
_I, _ = tension_to_current(_ft, m)
CHORD_N_PER_A = 1000.0 / float(_I[4])


class Spy:
    """Stands in for the recorder; prints a line every half second."""
    def __init__(self, tag, state0):
        self.tag = tag
        self.t0 = state0.t
        self.next = 0.5
        self.f_max = 0.0
        self.i_max = 0.0

    def take(self, state, q_ref, tau, currents):
        self.f_max = max(self.f_max, float(np.max(state.wire.tensions)))
        self.i_max = max(self.i_max, float(np.max(np.abs(currents))))
        t = state.t - self.t0
        if self.tag == "var" and t >= 6.9:
            self.next = min(self.next, round(t / 0.05) * 0.05 + 0.05)
        if t >= self.next:
            self.next += 0.05 if (self.tag == "var" and t >= 6.9) else 0.5
            q = state.joints.q
            f = state.wire.tensions
            eng = plant._contact_engagement(q[3],
                  replace(plant.PlantParams().belt_wire_contact, enabled=True)
                  if self.tag == "var" else plant.PlantParams().belt_wire_contact)
            fcmd4 = currents[4] * CHORD_N_PER_A
            print(f"[{self.tag}] t={t:6.2f} z={state.anchor_z_m:+.3f} "
                  f"zd={state.anchor_zd_m_s:+.3f} "
                  f"q=({q[1]:+.2f},{q[2]:+.2f},{q[3]:+.3f}) "
                  f"qr=({q_ref[1]:+.2f},{q_ref[2]:+.2f},{q_ref[3]:+.2f}) "
                  f"ch_cmd={fcmd4:5.0f} f_del=(ch:{f[4]:4.0f} eu:{f[5]:4.0f} "
                  f"elf:{f[6]:4.0f} ele:{f[7]:4.0f}) eng={eng:.2f}")


spy = Spy("main", state)
st, outcome, info = S._winch(m, rp, state, params, spy, data, gains,
                             path_q, path_rise, 60.0 * 9.81,
                             data["rise_rate_m_s"], data["winch_timeout_s"],
                             data["target_rise_m"])
print("main:", outcome, "z_peak", round(info["z_peak"], 3),
      "final q", np.round(info["final_q"], 3))

params_c = replace(params, belt_wire_contact=replace(
    params.belt_wire_contact, enabled=True))
spy = Spy("var", engaged)
st, outcome, info = S._winch(m, rp, engaged, params_c, spy, data, gains,
                             path_q, path_rise, 60.0 * 9.81,
                             data["stall_variant_rise_rate_m_s"],
                             data["stall_variant_timeout_s"], np.inf)
print("variant:", outcome, "z_peak", round(info["z_peak"], 3),
      "final q", np.round(info["final_q"], 3))
