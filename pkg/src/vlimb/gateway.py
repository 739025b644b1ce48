"""Live network bridge to the simulator.

Three cooperating tasks on one event loop: the sim loop (sole owner of all
mutable state) drains a command queue and advances control + plant; a
broadcaster serializes immutable snapshots to every connected client at the
stream rate; per-connection readers validate JSON framing and enqueue
commands. Clients talk JSON text frames over a single websocket.
"""
import asyncio
import json
import time
from collections import deque
from contextlib import asynccontextmanager

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .control import (control_step, duration_for, gains_from_model,
                      plan_trajectory)
from .kinematics import forward_kinematics
from .model import default_vlimb
from .plant import (GraspError, ModeSwitchError, PlantParams, apply_grasp,
                    init_state, release_grasp, set_mode, step)
from .scenarios import _load_data
from .tendon import detect_wrap, resolve_routing

SCHEMA_VERSION = 1

# a wall-clock hitch (debugger, swap) must not demand unbounded catch-up
_MAX_CATCHUP_S = 0.25
_MAX_STEPS_PER_TICK = 2000


def build_schema(model):
    """Message catalog served at /schema; the console generates its client
    bindings from this document."""
    lo, hi = model.limits_lo(), model.limits_hi()
    return {
        "schema_version": SCHEMA_VERSION,
        "transport": "websocket at /ws, one JSON object per text frame",
        "server_messages": {
            "model_info": "sent once on connect; joint limits, element "
                          "names per mode, tension bounds, stream rate",
            "state": {
                "t": "sim time [s], monotone",
                "seq": "frame counter, monotone",
                "q": "joint angles [rad], joint order",
                "qd": "joint rates [rad/s]",
                "q_ref": "controller reference [rad]",
                "tensions": "element tensions [N], routing order",
                "currents": "commanded motor currents [A], routing order",
                "elements": "element names for the active routing",
                "mode": "active routing mode",
                "paused": "sim loop hold flag",
                "payload_kg": "payload mass carried at the hand [kg]",
                "grasped": "hand constrained to an anchor",
                "ee": "pos: hand point [m]; R: hand rotation, row-major",
                "stick": "joint origins + hand point [m] for the arm render",
                "flags": "saturated, rank_deficient, wrap, stall, hardstop",
            },
            "ack": {"cmd": "echoed type", "id": "echoed id", "detail": "str"},
            "reject": {"cmd": "echoed type", "id": "echoed id",
                       "reason": "why the command was refused"},
        },
        "client_commands": {
            "set_target": {"q_des": "rad, one per joint, within limits",
                           "duration_s": "optional; derived from the speed "
                                         "budget when omitted",
                           "id": "optional, echoed in the reply"},
            "switch_mode": {"name": "routing mode; arm must be stationary"},
            "set_payload": {"kg": "nonnegative mass at the hand"},
            "grasp": {"anchor": "optional world point [m], default the "
                                "current hand point (must be within 5 mm)",
                      "mobile": "anchor rides a vertical rail when true",
                      "anchor_mass_kg": "mass of the grasped body"},
            "release": {},
            "load_scenario": {"name": "queue that scenario's posture list"},
            "pause": {}, "resume": {}, "reset": {},
        },
        "joints": [{"name": j.name, "lo_rad": float(lo[i]),
                    "hi_rad": float(hi[i])}
                   for i, j in enumerate(model.joints)],
        "modes": {m.name: [e.name for e in
                           resolve_routing(model, m.name).elements]
                  for m in model.modes},
        "tension_cap_n": float(model.controller.tension_cap_n),
        "tension_floor_n": float(model.controller.tension_floor_n),
        "max_joint_speed_rad_s": float(model.controller.max_joint_speed_rad_s),
    }


class _Envelope:
    __slots__ = ("msg", "outbox")

    def __init__(self, msg, outbox):
        self.msg = msg
        self.outbox = outbox


class GatewaySession:
    """Owns the simulator state. Every mutation happens on the sim-loop task;
    other tasks only read immutable snapshots or enqueue commands."""

    def __init__(self, model=None, params=None, time_scale=1.0,
                 stream_hz=30.0):
        self.model = model if model is not None else default_vlimb()
        self.params = params if params is not None else PlantParams()
        self.gains = gains_from_model(self.model)
        self.time_scale = float(time_scale)
        self.stream_hz = float(stream_hz)
        self.commands = asyncio.Queue()
        self.clients = set()
        self.seq = 0
        self._carry = 0.0
        self._reset()

    def _reset(self):
        self.state = init_state(self.model)
        self.routing = resolve_routing(self.model, self.state.mode)
        self.currents = np.zeros(len(self.routing.elements))
        self.q_ref = self.state.joints.q.copy()
        self.playlist = deque()
        self.playlist_speed = self.model.controller.max_joint_speed_rad_s
        self.paused = False
        self.last_out = None
        self._hold_here()

    def _hold_here(self):
        q = self.state.joints.q
        lo, hi = self.model.limits_lo(), self.model.limits_hi()
        q_hold = np.clip(q, lo, hi)  # contact can push slightly past a stop
        self.traj = plan_trajectory(self.model, q_hold, q_hold, 1.0)
        self.traj_t0 = self.state.t
        self.q_ref = q_hold.copy()

    def _start_target(self, q_des, duration_s):
        # plan from the current reference, not the measured posture, so a
        # steady tracking error does not kick the reference at takeoff
        self.traj = plan_trajectory(self.model, self.q_ref, q_des, duration_s)
        self.traj_t0 = self.state.t

    # -- command handling (sim-loop task only) --------------------------

    def apply(self, msg):
        kind = msg.get("type")
        try:
            if kind == "set_target":
                return self._cmd_set_target(msg)
            if kind == "switch_mode":
                return self._cmd_switch_mode(msg)
            if kind == "set_payload":
                return self._cmd_set_payload(msg)
            if kind == "grasp":
                return self._cmd_grasp(msg)
            if kind == "release":
                self.state = release_grasp(self.state)
                return True, "released"
            if kind == "load_scenario":
                return self._cmd_load_scenario(msg)
            if kind == "pause":
                self.paused = True
                return True, "paused"
            if kind == "resume":
                self.paused = False
                return True, "running"
            if kind == "reset":
                self._reset()
                return True, "reset to initial posture"
        except (KeyError, TypeError, ValueError) as e:
            return False, f"malformed {kind}: {e}"
        return False, f"malformed: unknown command type {kind!r}"

    def _cmd_set_target(self, msg):
        q_des = np.asarray(msg["q_des"], dtype=float)
        if q_des.shape != (len(self.model.joints),):
            return False, (f"malformed set_target: q_des needs "
                           f"{len(self.model.joints)} numbers")
        lo, hi = self.model.limits_lo(), self.model.limits_hi()
        for j, name in enumerate(self.model.joint_names()):
            if not lo[j] <= q_des[j] <= hi[j]:
                return False, (f"joint limit: {name} target {q_des[j]:.3f} "
                               f"rad outside [{lo[j]:.3f}, {hi[j]:.3f}]")
        duration = msg.get("duration_s")
        if duration is None:
            duration = duration_for(
                self.q_ref, q_des, self.model.controller.max_joint_speed_rad_s)
        duration = float(duration)
        if not duration > 0.0:
            return False, "malformed set_target: duration_s must be positive"
        self.playlist.clear()  # a direct target replaces any queued sequence
        self._start_target(q_des, duration)
        return True, f"tracking target over {duration:.2f} s"

    def _cmd_switch_mode(self, msg):
        name = msg["name"]
        try:
            st = set_mode(self.state, self.model, name)
        except KeyError:
            return False, f"unknown mode {name!r}"
        except ModeSwitchError as e:
            return False, str(e)
        self.state = st
        self.routing = resolve_routing(self.model, name)
        self.currents = np.zeros(len(self.routing.elements))
        self.playlist.clear()
        self._hold_here()
        return True, f"mode {name}"

    def _cmd_set_payload(self, msg):
        kg = float(msg["kg"])
        if kg < 0.0 or not np.isfinite(kg):
            return False, "payload must be a finite nonnegative mass"
        self.state.payload_mass_kg = kg
        return True, f"payload {kg:.3f} kg"

    def _cmd_grasp(self, msg):
        fk = forward_kinematics(self.model, self.state.joints.q)
        anchor = msg.get("anchor")
        anchor = fk.tip_position() if anchor is None \
            else np.asarray(anchor, dtype=float)
        if anchor.shape != (3,):
            return False, "malformed grasp: anchor needs 3 numbers"
        try:
            self.state = apply_grasp(
                self.state, self.model, anchor,
                mobile=bool(msg.get("mobile", False)),
                anchor_mass_kg=float(msg.get("anchor_mass_kg", 0.0)))
        except GraspError as e:
            return False, str(e)
        return True, "grasp engaged"

    def _cmd_load_scenario(self, msg):
        name = msg["name"]
        if name not in ("reachability", "manipulation", "lift"):
            return False, f"unknown scenario {name!r}"
        data = _load_data(f"{name}.json")
        if "postures" in data:
            targets = [wp["q"] for wp in data["postures"]]
            speed = data.get("speed_rad_s", 1.0)
        elif "waypoints" in data:
            targets = [wp["q"] for wp in data["waypoints"]]
            speed = data.get("speed_rad_s", 1.0)
        else:
            targets = [data["prelift_q"]]
            speed = data.get("approach_speed_rad_s", 1.0)
        self.playlist = deque(np.asarray(t, dtype=float) for t in targets)
        self.playlist_speed = float(speed)
        return True, f"queued {len(targets)} waypoints from {name}"

    # -- simulation (sim-loop task only) ---------------------------------

    def advance(self, sim_s):
        dt = self.params.dt_s
        self._carry += sim_s / dt
        n = min(int(self._carry), _MAX_STEPS_PER_TICK)
        self._carry -= n
        for _ in range(n):
            self._step_once()

    def _step_once(self):
        st = self.state
        rel_t = st.t - self.traj_t0
        if rel_t >= self.traj.duration_s and self.playlist:
            q_next = self.playlist.popleft()
            self._start_target(q_next, duration_for(self.q_ref, q_next,
                                                    self.playlist_speed))
            rel_t = 0.0
        out = control_step(self.model, self.routing, st.joints, self.traj,
                           rel_t, self.gains, rings=st.rings)
        self.q_ref = self.traj.sample(rel_t)[0]
        self.currents = out.currents_cmd
        self.last_out = out
        self.state = step(self.model, self.routing, st, out.currents_cmd,
                          self.params)

    # -- snapshots (any task; state mutates only between awaits) ---------

    def model_info(self):
        info = build_schema(self.model)
        return {
            "type": "model_info",
            "version": SCHEMA_VERSION,
            "name": self.model.name,
            "joints": info["joints"],
            "modes": info["modes"],
            "mode": self.state.mode,
            "tension_cap_n": info["tension_cap_n"],
            "tension_floor_n": info["tension_floor_n"],
            "max_joint_speed_rad_s": info["max_joint_speed_rad_s"],
            "stream_hz": self.stream_hz,
            "dt_s": self.params.dt_s,
            "time_scale": self.time_scale,
        }

    def snapshot(self):
        st = self.state
        fk = forward_kinematics(self.model, st.joints.q)
        tip = fk.tip_position()
        stick = np.vstack([fk.joint_origins, tip])
        wrap = bool(detect_wrap(self.model, self.routing, st.joints.q,
                                rings=st.rings, fk=fk))
        out = self.last_out
        self.seq += 1
        return {
            "type": "state",
            "version": SCHEMA_VERSION,
            "seq": self.seq,
            "t": float(st.t),
            "q": st.joints.q.tolist(),
            "qd": st.joints.qd.tolist(),
            "q_ref": np.asarray(self.q_ref, dtype=float).tolist(),
            "tensions": st.wire.tensions.tolist(),
            "currents": np.asarray(self.currents, dtype=float).tolist(),
            "elements": [e.name for e in self.routing.elements],
            "mode": st.mode,
            "paused": self.paused,
            "payload_kg": float(st.payload_mass_kg),
            "grasped": st.grasp_anchor is not None,
            "ee": {"pos": tip.tolist(), "R": fk.R[-1].tolist()},
            "stick": stick.tolist(),
            "flags": {
                "saturated": bool(out.current_saturated) if out else False,
                "rank_deficient": bool(out.rank_deficient) if out else False,
                "wrap": wrap,
                "stall": bool(st.halted),
                "hardstop": bool(st.hardstop_contact),
            },
        }


async def _sim_loop(session, tick_s=1.0 / 120.0):
    last = time.perf_counter()
    while True:
        await asyncio.sleep(tick_s)
        while True:
            try:
                env = session.commands.get_nowait()
            except asyncio.QueueEmpty:
                break
            ok, text = session.apply(env.msg)
            reply = {"type": "ack" if ok else "reject",
                     "cmd": env.msg.get("type"),
                     "id": env.msg.get("id"),
                     "t": float(session.state.t)}
            reply["detail" if ok else "reason"] = text
            _offer(env.outbox, json.dumps(reply))
        now = time.perf_counter()
        wall, last = now - last, now
        if not session.paused:
            session.advance(min(wall, _MAX_CATCHUP_S) * session.time_scale)


async def _broadcaster(session):
    period = 1.0 / session.stream_hz
    while True:
        await asyncio.sleep(period)
        if not session.clients:
            continue
        text = json.dumps(session.snapshot())
        for outbox in list(session.clients):
            _offer(outbox, text)


def _offer(outbox, text):
    # a slow consumer loses frames, never stalls the loop
    try:
        outbox.put_nowait(text)
    except asyncio.QueueFull:
        pass


async def _sender(ws, outbox):
    while True:
        await ws.send_text(await outbox.get())


def create_app(model=None, params=None, time_scale=1.0, stream_hz=30.0,
               console_dir=None):
    session = GatewaySession(model, params, time_scale=time_scale,
                             stream_hz=stream_hz)

    @asynccontextmanager
    async def lifespan(app):
        tasks = [asyncio.create_task(_sim_loop(session)),
                 asyncio.create_task(_broadcaster(session))]
        try:
            yield
        finally:
            for t in tasks:
                t.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)

    app = FastAPI(title="vlimb gateway", lifespan=lifespan)
    app.state.session = session

    @app.get("/schema")
    def schema():
        return JSONResponse(build_schema(session.model))

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_text(json.dumps(session.model_info()))
        outbox = asyncio.Queue(maxsize=64)
        session.clients.add(outbox)
        sender = asyncio.create_task(_sender(ws, outbox))
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict):
                        raise ValueError("frame is not an object")
                except ValueError as e:
                    _offer(outbox, json.dumps(
                        {"type": "reject", "cmd": None, "id": None,
                         "reason": f"malformed frame: {e}"}))
                    continue
                session.commands.put_nowait(_Envelope(msg, outbox))
        except WebSocketDisconnect:
            pass
        finally:
            session.clients.discard(outbox)
            sender.cancel()

    if console_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=console_dir, html=True),
                  name="console")

    return app


def serve(model=None, params=None, host="127.0.0.1", port=8733,
          time_scale=1.0, stream_hz=30.0, console_dir=None):
    import uvicorn
    app = create_app(model, params, time_scale=time_scale,
                     stream_hz=stream_hz, console_dir=console_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
