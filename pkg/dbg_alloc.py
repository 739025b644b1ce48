# Scratch: real-allocator residuals at reachability extremes + stability slope probe.
import numpy as np

from vlimb.model import default_vlimb
from vlimb.tendon import resolve_routing, muscle_jacobian
from vlimb.kinematics import gravity_torque
from vlimb.control import gains_from_model, allocate_tensions

np.set_printoptions(precision=4, suppress=True, linewidth=200)
model = default_vlimb()
gains = gains_from_model(model)
routing = resolve_routing(model, "manipulation")
kinds = [e.kind for e in model.elements]

margin = 0.1
names = model.joint_names()
lo, hi = model.limits_lo(), model.limits_hi()

print("== real allocator at extremes ==")
worst = 0.0
for j in range(5):
    for side, val in (("lo", lo[j] + margin), ("hi", hi[j] - margin)):
        q = np.zeros(5)
        q[j] = val
        G = muscle_jacobian(model, routing, q)
        tau = gravity_torque(model, q)
        f, rd, res = allocate_tensions(G, tau, kinds, gains)
        worst = max(worst, res)
        print(f"  {names[j]}_{side:2s} q_j={val:+.2f} resid={res:8.4f} fmax={np.max(f):8.1f}")
print(f"worst = {worst:.4f}")

print("\n== EUP authority vs demand along the UAP=1.2 sag line ==")
for q2 in np.linspace(0.1, -0.5, 13):
    q = np.array([0.0, 1.2, q2, 0.0, 0.0])
    G = muscle_jacobian(model, routing, q)
    tau = gravity_torque(model, q)
    # demand with kp pull toward q2=0
    tau_fb = tau.copy()
    tau_fb[2] += 80.0 * (0.0 - q2)
    f, rd, res = allocate_tensions(G, tau_fb, kinds, gains)
    print(f"  q2={q2:+.3f} g_EUP={tau[2]:7.2f} demand={tau_fb[2]:7.2f} resid={res:8.4f}")

print("\n== dense residual map (both modes, gravity hold only) ==")
rng = np.random.default_rng(7)
bad = []
for mode in ("manipulation",):
    r = resolve_routing(model, mode)
    for _ in range(400):
        q = rng.uniform(np.array(lo) + margin, np.array(hi) - margin)
        G = muscle_jacobian(model, r, q)
        tau = gravity_torque(model, q)
        f, rd, res = allocate_tensions(G, tau, kinds, gains)
        if res > 1e-6:
            bad.append((res, q.copy()))
bad.sort(key=lambda t: -t[0])
print(f"infeasible {len(bad)}/400; worst:")
for res, q in bad[:8]:
    print(f"  res={res:8.4f} q={q}")
