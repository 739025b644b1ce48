# Scratch: instrument the UAP=1.2 hold collapse. Not part of the package.
import numpy as np

from vlimb.model import default_vlimb
from vlimb.tendon import resolve_routing, muscle_jacobian
from vlimb.control import gains_from_model, plan_trajectory, control_step
from vlimb import plant

np.set_printoptions(precision=3, suppress=True, linewidth=160)
model = default_vlimb()
gains = gains_from_model(model)
params = plant.PlantParams()
routing = resolve_routing(model, "manipulation")

q_hold = np.array([0.0, 1.2, 0.0, 0.0, 0.0])
st = plant.init_state(model, q=q_hold)
traj = plan_trajectory(model, q_hold, q_hold, 0.5)
for k in range(3000):
    out = control_step(model, routing, st.joints, traj, st.t, gains, rings=st.rings)
    st = plant.step(model, routing, st, out.currents_cmd, params)
    if k % 250 == 0 or (k < 300 and k % 50 == 0):
        G = muscle_jacobian(model, routing, st.joints.q, rings=st.rings)
        ach = -G.T @ st.wire.tensions
        print(f"t={st.t:.3f} q={st.joints.q} qd={st.joints.qd}")
        print(f"   tau_cmd={out.tau_cmd} resid={out.torque_residual_nm:.3f} "
              f"sat={out.current_saturated} f_cmd={np.round(out.tensions_cmd,1)}")
        print(f"   f_act={np.round(st.wire.tensions,1)} ach={np.round(ach,2)}")
