# Scratch: trace the tracking move. Not part of the package.
import numpy as np

from vlimb.model import default_vlimb
from vlimb.tendon import resolve_routing
from vlimb.control import gains_from_model, plan_trajectory, control_step
from vlimb import plant

np.set_printoptions(precision=3, suppress=True, linewidth=200)
model = default_vlimb()
gains = gains_from_model(model)
params = plant.PlantParams()
routing = resolve_routing(model, "manipulation")

st = plant.init_state(model, q=(0, 0, 0, 0, 0))
tgt = np.array([0.3, 0.6, 0.9, 0.7, -0.4])
traj = plan_trajectory(model, st.joints.q, tgt, 3.0)
k = 0
while st.t < 4.5:
    out = control_step(model, routing, st.joints, traj, st.t, gains, rings=st.rings)
    st = plant.step(model, routing, st, out.currents_cmd, params)
    if k % 250 == 0:
        qr = traj.sample(st.t)[0]
        print(f"t={st.t:.2f} q={st.joints.q} ref={qr} resid={out.torque_residual_nm:7.3f} "
              f"sat={out.current_saturated} fmax={np.max(out.tensions_cmd):7.1f}")
    k += 1
print("final err:", st.joints.q - tgt)
