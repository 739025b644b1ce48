"""Robot description: links, joints, tendon elements, modes, controller defaults.

The model is a plain immutable tree of dataclasses loaded from / written to a
JSON file with units spelled out in the field names. Geometry convention:
every link frame sits at the link's proximal joint and the link extends along
local -z, so the next joint origin in the parent frame is (0, 0, -length).
"""

from dataclasses import dataclass, field, replace
import json
import math

GRAVITY = 9.81
FORMAT_VERSION = 1

POINT_KINDS = ("pulley", "waypoint_a", "waypoint_b", "waypoint_c", "cam", "end")
ELEMENT_KINDS = ("wire", "belt")


class ModelError(ValueError):
    """Base for model file problems."""


class ModelParseError(ModelError):
    """Malformed file or wrong types."""


class ModelValidationError(ModelError):
    """Structurally sound file that breaks a model invariant."""


def _vec3(x, what):
    try:
        v = tuple(float(c) for c in x)
    except (TypeError, ValueError):
        raise ModelParseError(f"{what} must be a 3-vector, got {x!r}")
    if len(v) != 3:
        raise ModelParseError(f"{what} must have 3 components, got {len(v)}")
    return v


@dataclass(frozen=True)
class LinkSpec:
    name: str
    length_m: float
    mass_kg: float
    com_offset_m: tuple = (0.0, 0.0, 0.0)
    inertia_diag_kgm2: tuple = (1e-4, 1e-4, 1e-4)


@dataclass(frozen=True)
class JointSpec:
    name: str
    axis: tuple
    limit_lo_rad: float
    limit_hi_rad: float
    kind: str = "revolute"
    viscous_friction_nms_per_rad: float = 0.0
    coulomb_friction_nm: float = 0.0


@dataclass(frozen=True)
class MotorSpec:
    name: str
    torque_constant_nm_per_a: float
    gear_ratio: float
    max_current_a: float
    # rotor inertia reflects into the joints as J * (gear / pulley_radius)^2
    rotor_inertia_kgm2: float = 0.0


@dataclass(frozen=True)
class RoutingPointSpec:
    link: str
    offset_m: tuple
    kind: str
    switch_group: str = None
    # cam points only: housing-rim drum the wire winds. The drum sits on the
    # joint axis of its link's parent joint; wrap_dir (+1/-1, sense of the
    # winding about the +axis, fixed by assembly) picks which way the wire
    # lies on the rim, so while wound the moment arm is exactly the rim
    # radius with one sign over the whole travel.
    radius_m: float = 0.0
    wrap_dir: int = 0


@dataclass(frozen=True)
class RingSpec:
    link: str
    center_offset_m: float
    radius_m: float


@dataclass(frozen=True)
class ElementSpec:
    name: str
    kind: str
    motor: MotorSpec
    pulley_radius_m: float
    routing: tuple
    ring: RingSpec = None
    belt_loop_length_m: float = 1.0


@dataclass(frozen=True)
class ControllerDefaults:
    kp_nm_per_rad: tuple = (80.0,) * 5
    # kd acts through the same lagged tension path as kp; 8 N m s/rad keeps
    # fast arrivals from overshooting into the saturated-antagonist regime
    kd_nms_per_rad: tuple = (8.0,) * 5
    loop_rate_hz: float = 1000.0
    tension_floor_n: float = 10.0
    tension_cap_n: float = 1500.0
    max_joint_speed_rad_s: float = 1.0


@dataclass(frozen=True)
class ModeSpec:
    name: str
    engaged_groups: tuple


@dataclass(frozen=True)
class RobotModel:
    name: str
    links: tuple
    joints: tuple
    elements: tuple
    modes: tuple
    controller: ControllerDefaults = ControllerDefaults()
    link_cylinder_radius_m: float = 0.03
    wrap_axis_margin_m: float = 0.05
    format_version: int = FORMAT_VERSION

    def mode(self, name):
        for m in self.modes:
            if m.name == name:
                return m
        raise KeyError(f"unknown mode {name!r}")

    def mode_names(self):
        return tuple(m.name for m in self.modes)

    def joint_names(self):
        return tuple(j.name for j in self.joints)

    def link_names(self):
        return tuple(l.name for l in self.links)

    def link_index(self, name):
        for i, l in enumerate(self.links):
            if l.name == name:
                return i
        raise KeyError(f"unknown link {name!r}")

    def joint_index(self, name):
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(f"unknown joint {name!r}")

    def element_index(self, name):
        for i, e in enumerate(self.elements):
            if e.name == name:
                return i
        raise KeyError(f"unknown element {name!r}")

    def limits_lo(self):
        return tuple(j.limit_lo_rad for j in self.joints)

    def limits_hi(self):
        return tuple(j.limit_hi_rad for j in self.joints)

    def with_payload(self, mass_kg, at_offset_m=None):
        """New model with a point mass rigidly added at the tip of the last link.

        Point-mass inertia about its own center is zero; the mass still
        contributes to the composite inertia through the parallel-axis terms
        that the dynamics build from mass and com placement.
        """
        if mass_kg <= 0.0:
            return self
        hand = self.links[-1]
        off = at_offset_m if at_offset_m is not None else (0.0, 0.0, -hand.length_m)
        m0, m1 = hand.mass_kg, float(mass_kg)
        mt = m0 + m1
        com = tuple((m0 * c0 + m1 * c1) / mt for c0, c1 in zip(hand.com_offset_m, off))
        # parallel-axis shift of both masses onto the combined com
        def shifted(idiag, m, c):
            dx, dy, dz = (c[0] - com[0], c[1] - com[1], c[2] - com[2])
            return (idiag[0] + m * (dy * dy + dz * dz),
                    idiag[1] + m * (dx * dx + dz * dz),
                    idiag[2] + m * (dx * dx + dy * dy))
        i0 = shifted(hand.inertia_diag_kgm2, m0, hand.com_offset_m)
        i1 = shifted((0.0, 0.0, 0.0), m1, off)
        new_hand = replace(hand, mass_kg=mt, com_offset_m=com,
                           inertia_diag_kgm2=tuple(a + b for a, b in zip(i0, i1)))
        return replace(self, links=self.links[:-1] + (new_hand,))


def _validate_cam_point(model, e, i, k):
    """Cam points wind the parent joint of their link; the math in tendon.py
    is exact only when the drum center sits on that joint's axis and both
    neighbors lie in the drum plane, so enforce that shape here. The winding
    direction is fixed by assembly, which is only physical if the anchor
    never crosses the feed ray over the joint's travel; that sector check
    has a closed form because the anchor angle is linear in the joint angle."""
    p = e.routing[k]
    if e.kind == "belt":
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: belts cannot carry cam points")
    if e.ring is not None:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cam points are not supported on "
            "ring-terminated elements")
    if k == 0 or k == len(e.routing) - 1:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cam must be an interior point")
    if not p.radius_m > 0.0:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cam radius_m must be > 0")
    if p.wrap_dir not in (-1, 1):
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cam wrap_dir must be +1 or -1")
    li = model.link_index(p.link)
    if li == 0:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cam link needs a parent joint")
    joint = model.joints[li - 1]
    ax = joint.axis
    an = math.sqrt(ax[0] ** 2 + ax[1] ** 2 + ax[2] ** 2)
    ax = (ax[0] / an, ax[1] / an, ax[2] / an)

    def _axial(v):
        return v[0] * ax[0] + v[1] * ax[1] + v[2] * ax[2]

    def _planar(v):
        d = _axial(v)
        return tuple(v[c] - d * ax[c] for c in range(3))

    def _norm(v):
        return math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2)

    if _norm(_planar(p.offset_m)) > 1e-9:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cam center must sit on the "
            "joint axis")
    prev, nxt = e.routing[k - 1], e.routing[k + 1]
    if prev.kind == "cam" or nxt.kind == "cam":
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cams cannot be adjacent")
    if prev.kind == "waypoint_c" or nxt.kind == "waypoint_c":
        # mode filtering drops disengaged switch points, which would hand
        # the cam different neighbors than the ones checked here
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cam neighbors cannot be "
            "switchable points")
    if model.link_index(prev.link) != li - 1 or nxt.link != p.link:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: cam neighbors must sit on the "
            "parent link and the cam link")
    # both neighbors in the drum plane (the plane is preserved by the joint
    # rotation, so checking the zero posture checks every posture)
    L_parent = model.links[li - 1].length_m
    prev_rel = tuple(prev.offset_m[c] - (0.0, 0.0, -L_parent)[c]
                     - p.offset_m[c] for c in range(3))
    nxt_rel = tuple(nxt.offset_m[c] - p.offset_m[c] for c in range(3))
    for name, rel in (("previous", prev_rel), ("next", nxt_rel)):
        if abs(_axial(rel)) > 1e-9:
            raise ModelValidationError(
                f"elements[{i}].routing[{k}]: {name} point must lie in the "
                "drum plane")
    ap, bp = _planar(prev_rel), _planar(nxt_rel)
    ra, rb = _norm(ap), _norm(bp)
    if ra <= p.radius_m + 1e-6:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: previous point sits inside the "
            "cam radius")
    if rb < p.radius_m - 1e-9:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: next point sits inside the "
            "cam radius")
    # anchor angle relative to the feed point, measured about +axis, moves
    # 1:1 with the joint; the winding is single-valued only while it stays
    # off the feed ray, so the whole travel must fit one turn with margin
    e2 = (ax[1] * ap[2] - ax[2] * ap[1],
          ax[2] * ap[0] - ax[0] * ap[2],
          ax[0] * ap[1] - ax[1] * ap[0])
    rel0 = math.atan2(bp[0] * e2[0] + bp[1] * e2[1] + bp[2] * e2[2],
                      bp[0] * ap[0] + bp[1] * ap[1] + bp[2] * ap[2])
    s = float(p.wrap_dir)
    w_lo = s * (rel0 + joint.limit_lo_rad)
    w_hi = s * (rel0 + joint.limit_hi_rad)
    margin = 0.02
    sweep = joint.limit_hi_rad - joint.limit_lo_rad
    base = min(w_lo, w_hi) % (2.0 * math.pi)
    if base < margin or base + sweep > 2.0 * math.pi - margin:
        raise ModelValidationError(
            f"elements[{i}].routing[{k}]: anchor crosses the cam feed ray "
            "inside the joint range; move the anchor or flip wrap_dir")


def validate_model(model):
    """Raise ModelValidationError naming the first violated invariant."""
    if len(model.joints) != 5:
        raise ModelValidationError(
            f"joint count must be 5, got {len(model.joints)}")
    if len(model.links) != len(model.joints) + 1:
        raise ModelValidationError(
            f"link count must be joint count + 1, got {len(model.links)}")

    names = [l.name for l in model.links]
    if len(set(names)) != len(names):
        raise ModelValidationError("link names must be unique")
    jnames = [j.name for j in model.joints]
    if len(set(jnames)) != len(jnames):
        raise ModelValidationError("joint names must be unique")
    enames = [e.name for e in model.elements]
    if len(set(enames)) != len(enames):
        raise ModelValidationError("element names must be unique")

    for i, l in enumerate(model.links):
        if not l.length_m >= 0.0:
            raise ModelValidationError(f"links[{i}].length_m must be >= 0")
        if not l.mass_kg > 0.0:
            raise ModelValidationError(f"links[{i}].mass_kg must be > 0")
        if len(l.com_offset_m) != 3:
            raise ModelValidationError(f"links[{i}].com_offset_m must be 3-vector")
        if len(l.inertia_diag_kgm2) != 3 or any(c <= 0.0 for c in l.inertia_diag_kgm2):
            raise ModelValidationError(
                f"links[{i}].inertia_diag_kgm2 entries must be > 0")

    for i, j in enumerate(model.joints):
        if j.kind != "revolute":
            raise ModelValidationError(f"joints[{i}].kind must be 'revolute'")
        n = math.sqrt(sum(c * c for c in j.axis))
        if abs(n - 1.0) > 1e-9:
            raise ModelValidationError(f"joints[{i}].axis must be a unit vector")
        if not j.limit_lo_rad < j.limit_hi_rad:
            raise ModelValidationError(
                f"joints[{i}]: limit_lo_rad must be < limit_hi_rad")
        if j.viscous_friction_nms_per_rad < 0.0 or j.coulomb_friction_nm < 0.0:
            raise ModelValidationError(f"joints[{i}]: friction must be >= 0")

    link_set = set(names)
    groups = set()
    for i, e in enumerate(model.elements):
        if e.kind not in ELEMENT_KINDS:
            raise ModelValidationError(f"elements[{i}].kind must be wire or belt")
        if not e.pulley_radius_m > 0.0:
            raise ModelValidationError(f"elements[{i}].pulley_radius_m must be > 0")
        m = e.motor
        if not (m.torque_constant_nm_per_a > 0.0 and m.gear_ratio > 0.0
                and m.max_current_a > 0.0):
            raise ModelValidationError(
                f"elements[{i}].motor constants must all be > 0")
        if m.rotor_inertia_kgm2 < 0.0:
            raise ModelValidationError(
                f"elements[{i}].motor.rotor_inertia_kgm2 must be >= 0")
        if len(e.routing) < 2:
            raise ModelValidationError(
                f"elements[{i}] needs at least 2 routing points")
        if e.routing[0].kind != "pulley":
            raise ModelValidationError(
                f"elements[{i}]: first routing point must be kind 'pulley'")
        if e.routing[-1].kind != "end":
            raise ModelValidationError(
                f"elements[{i}]: last routing point must be kind 'end'")
        for k, p in enumerate(e.routing):
            if p.kind not in POINT_KINDS:
                raise ModelValidationError(
                    f"elements[{i}].routing[{k}].kind unknown: {p.kind!r}")
            if p.kind == "end" and k != len(e.routing) - 1:
                raise ModelValidationError(
                    f"elements[{i}]: 'end' point must be last")
            if p.link not in link_set:
                raise ModelValidationError(
                    f"elements[{i}].routing[{k}] references unknown link {p.link!r}")
            if len(p.offset_m) != 3:
                raise ModelValidationError(
                    f"elements[{i}].routing[{k}].offset_m must be 3-vector")
            if p.kind == "waypoint_c":
                if not p.switch_group:
                    raise ModelValidationError(
                        f"elements[{i}].routing[{k}]: waypoint_c needs a switch_group")
                groups.add(p.switch_group)
            elif p.switch_group is not None:
                raise ModelValidationError(
                    f"elements[{i}].routing[{k}]: switch_group is only valid "
                    "on waypoint_c points")
            if p.kind == "cam":
                _validate_cam_point(model, e, i, k)
            elif p.radius_m != 0.0 or p.wrap_dir != 0:
                raise ModelValidationError(
                    f"elements[{i}].routing[{k}]: radius_m and wrap_dir are "
                    "only valid on cam points")
        if e.ring is not None:
            if e.ring.link not in link_set:
                raise ModelValidationError(
                    f"elements[{i}].ring references unknown link {e.ring.link!r}")
            if not e.ring.radius_m > 0.0:
                raise ModelValidationError(f"elements[{i}].ring.radius_m must be > 0")
            if e.routing[-1].link != e.ring.link:
                raise ModelValidationError(
                    f"elements[{i}]: end point must sit on the ring link")
        if e.kind == "belt":
            end = e.routing[-1]
            if model.link_index(end.link) == 0:
                raise ModelValidationError(
                    f"elements[{i}]: belt end point cannot be on the base link")
            if not e.belt_loop_length_m > 0.0:
                raise ModelValidationError(
                    f"elements[{i}].belt_loop_length_m must be > 0")

    if not model.modes:
        raise ModelValidationError("at least one mode is required")
    mnames = [m.name for m in model.modes]
    if len(set(mnames)) != len(mnames):
        raise ModelValidationError("mode names must be unique")
    for m in model.modes:
        for g in m.engaged_groups:
            if g not in groups:
                raise ModelValidationError(
                    f"mode {m.name!r} references unknown switch_group {g!r}")

    c = model.controller
    if len(c.kp_nm_per_rad) != 5 or any(k < 0.0 for k in c.kp_nm_per_rad):
        raise ModelValidationError("controller.kp_nm_per_rad must be 5 values >= 0")
    if len(c.kd_nms_per_rad) != 5 or any(k < 0.0 for k in c.kd_nms_per_rad):
        raise ModelValidationError("controller.kd_nms_per_rad must be 5 values >= 0")
    if not c.loop_rate_hz > 0.0:
        raise ModelValidationError("controller.loop_rate_hz must be > 0")
    if not (0.0 <= c.tension_floor_n < c.tension_cap_n):
        raise ModelValidationError(
            "controller tension_floor_n must satisfy 0 <= floor < cap")
    if not c.max_joint_speed_rad_s > 0.0:
        raise ModelValidationError("controller.max_joint_speed_rad_s must be > 0")
    if not model.link_cylinder_radius_m > 0.0:
        raise ModelValidationError("link_cylinder_radius_m must be > 0")
    if model.wrap_axis_margin_m < 0.0:
        raise ModelValidationError("wrap_axis_margin_m must be >= 0")
    return model


# ---------------------------------------------------------------- JSON I/O

def _link_to_dict(l):
    return {"name": l.name, "length_m": l.length_m, "mass_kg": l.mass_kg,
            "com_offset_m": list(l.com_offset_m),
            "inertia_diag_kgm2": list(l.inertia_diag_kgm2)}


def _joint_to_dict(j):
    return {"name": j.name, "kind": j.kind, "axis": list(j.axis),
            "limit_lo_rad": j.limit_lo_rad, "limit_hi_rad": j.limit_hi_rad,
            "viscous_friction_nms_per_rad": j.viscous_friction_nms_per_rad,
            "coulomb_friction_nm": j.coulomb_friction_nm}


def _element_to_dict(e):
    d = {"name": e.name, "kind": e.kind,
         "motor": {"name": e.motor.name,
                   "torque_constant_nm_per_a": e.motor.torque_constant_nm_per_a,
                   "gear_ratio": e.motor.gear_ratio,
                   "max_current_a": e.motor.max_current_a,
                   "rotor_inertia_kgm2": e.motor.rotor_inertia_kgm2},
         "pulley_radius_m": e.pulley_radius_m,
         "routing": []}
    for p in e.routing:
        pd = {"link": p.link, "offset_m": list(p.offset_m), "kind": p.kind}
        if p.switch_group is not None:
            pd["switch_group"] = p.switch_group
        if p.kind == "cam":
            pd["radius_m"] = p.radius_m
            pd["wrap_dir"] = p.wrap_dir
        d["routing"].append(pd)
    if e.ring is not None:
        d["ring"] = {"link": e.ring.link, "center_offset_m": e.ring.center_offset_m,
                     "radius_m": e.ring.radius_m}
    if e.kind == "belt":
        d["belt_loop_length_m"] = e.belt_loop_length_m
    return d


def model_to_dict(model):
    return {
        "format_version": model.format_version,
        "name": model.name,
        "link_cylinder_radius_m": model.link_cylinder_radius_m,
        "wrap_axis_margin_m": model.wrap_axis_margin_m,
        "links": [_link_to_dict(l) for l in model.links],
        "joints": [_joint_to_dict(j) for j in model.joints],
        "elements": [_element_to_dict(e) for e in model.elements],
        "modes": {m.name: list(m.engaged_groups) for m in model.modes},
        "controller": {
            "kp_nm_per_rad": list(model.controller.kp_nm_per_rad),
            "kd_nms_per_rad": list(model.controller.kd_nms_per_rad),
            "loop_rate_hz": model.controller.loop_rate_hz,
            "tension_floor_n": model.controller.tension_floor_n,
            "tension_cap_n": model.controller.tension_cap_n,
            "max_joint_speed_rad_s": model.controller.max_joint_speed_rad_s,
        },
    }


def _req(d, key, what):
    if key not in d:
        raise ModelParseError(f"{what}: missing required field {key!r}")
    return d[key]


def model_from_dict(d):
    if not isinstance(d, dict):
        raise ModelParseError("model file must hold a JSON object")
    fv = _req(d, "format_version", "model")
    if fv != FORMAT_VERSION:
        raise ModelParseError(
            f"unsupported format_version {fv!r}, expected {FORMAT_VERSION}")
    try:
        links = tuple(
            LinkSpec(name=str(_req(l, "name", "link")),
                     length_m=float(_req(l, "length_m", "link")),
                     mass_kg=float(_req(l, "mass_kg", "link")),
                     com_offset_m=_vec3(_req(l, "com_offset_m", "link"),
                                        "link.com_offset_m"),
                     inertia_diag_kgm2=_vec3(_req(l, "inertia_diag_kgm2", "link"),
                                             "link.inertia_diag_kgm2"))
            for l in _req(d, "links", "model"))
        joints = tuple(
            JointSpec(name=str(_req(j, "name", "joint")),
                      kind=str(j.get("kind", "revolute")),
                      axis=_vec3(_req(j, "axis", "joint"), "joint.axis"),
                      limit_lo_rad=float(_req(j, "limit_lo_rad", "joint")),
                      limit_hi_rad=float(_req(j, "limit_hi_rad", "joint")),
                      viscous_friction_nms_per_rad=float(
                          j.get("viscous_friction_nms_per_rad", 0.0)),
                      coulomb_friction_nm=float(j.get("coulomb_friction_nm", 0.0)))
            for j in _req(d, "joints", "model"))
        elements = []
        for e in _req(d, "elements", "model"):
            md = _req(e, "motor", "element")
            motor = MotorSpec(
                name=str(_req(md, "name", "motor")),
                torque_constant_nm_per_a=float(
                    _req(md, "torque_constant_nm_per_a", "motor")),
                gear_ratio=float(_req(md, "gear_ratio", "motor")),
                max_current_a=float(_req(md, "max_current_a", "motor")),
                rotor_inertia_kgm2=float(md.get("rotor_inertia_kgm2", 0.0)))
            routing = tuple(
                RoutingPointSpec(link=str(_req(p, "link", "routing point")),
                                 offset_m=_vec3(_req(p, "offset_m", "routing point"),
                                                "routing.offset_m"),
                                 kind=str(_req(p, "kind", "routing point")),
                                 switch_group=p.get("switch_group"),
                                 radius_m=float(p.get("radius_m", 0.0)),
                                 wrap_dir=int(p.get("wrap_dir", 0)))
                for p in _req(e, "routing", "element"))
            ring = None
            if e.get("ring") is not None:
                rd = e["ring"]
                ring = RingSpec(link=str(_req(rd, "link", "ring")),
                                center_offset_m=float(
                                    _req(rd, "center_offset_m", "ring")),
                                radius_m=float(_req(rd, "radius_m", "ring")))
            elements.append(ElementSpec(
                name=str(_req(e, "name", "element")),
                kind=str(_req(e, "kind", "element")),
                motor=motor,
                pulley_radius_m=float(_req(e, "pulley_radius_m", "element")),
                routing=routing,
                ring=ring,
                belt_loop_length_m=float(e.get("belt_loop_length_m", 1.0))))
        modes = tuple(ModeSpec(name=str(k), engaged_groups=tuple(str(g) for g in v))
                      for k, v in sorted(_req(d, "modes", "model").items()))
        cd = _req(d, "controller", "model")
        controller = ControllerDefaults(
            kp_nm_per_rad=tuple(float(x) for x in _req(cd, "kp_nm_per_rad", "controller")),
            kd_nms_per_rad=tuple(float(x) for x in _req(cd, "kd_nms_per_rad", "controller")),
            loop_rate_hz=float(_req(cd, "loop_rate_hz", "controller")),
            tension_floor_n=float(_req(cd, "tension_floor_n", "controller")),
            tension_cap_n=float(_req(cd, "tension_cap_n", "controller")),
            max_joint_speed_rad_s=float(_req(cd, "max_joint_speed_rad_s", "controller")))
    except ModelError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise ModelParseError(f"malformed model file: {exc}") from exc
    model = RobotModel(
        name=str(d.get("name", "unnamed")),
        links=links, joints=joints, elements=tuple(elements), modes=modes,
        controller=controller,
        link_cylinder_radius_m=float(d.get("link_cylinder_radius_m", 0.03)),
        wrap_axis_margin_m=float(d.get("wrap_axis_margin_m", 0.05)),
        format_version=int(fv))
    return validate_model(model)


def load_model(path):
    """Load and validate a model file. Raises ModelParseError /
    ModelValidationError with the offending field named."""
    with open(path, "r") as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as exc:
            raise ModelParseError(f"invalid JSON in {path}: {exc}") from exc
    return model_from_dict(d)


def write_model(model, path):
    validate_model(model)
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------- default model

TOTAL_REACH_M = 1.3
TOTAL_MASS_KG = 16.3
BASE_MASS_FRACTION = 0.6

_LINK_LENGTHS = {
    "shoulder": 0.0,        # base mount, carries the motor block
    "shoulder_roll": 0.10,
    "upper_arm": 0.40,
    "elbow_upper": 0.40,
    "elbow_lower": 0.30,
    "hand": 0.10,
}

_AK_MOTOR = MotorSpec(name="ak60", torque_constant_nm_per_a=0.1,
                      gear_ratio=6.0, max_current_a=15.0,
                      rotor_inertia_kgm2=1.5e-4)


def _rod_link(name, length, mass):
    # slender rod about its center; tiny but positive axial term
    ixx = max(mass * length * length / 12.0, 1e-5)
    izz = max(0.5 * mass * 0.03 * 0.03, 1e-5)
    return LinkSpec(name=name, length_m=length, mass_kg=mass,
                    com_offset_m=(0.0, 0.0, -length / 2.0),
                    inertia_diag_kgm2=(ixx, ixx, izz))


def _pt(link, offset, kind="waypoint_a", group=None, radius=0.0, wrap=0):
    return RoutingPointSpec(link=link, offset_m=offset, kind=kind,
                            switch_group=group, radius_m=radius, wrap_dir=wrap)


def default_vlimb():
    """The default arm: 1.3 m reach, 16.3 kg, five joints, eight elements.

    Two belts drive the roll joints; six wires drive the pitch joints. The
    elbow element is the high-force path: with its switchable waypoints
    engaged it hugs both elbow joints (small moment arms, fine manipulation),
    with them removed it runs as a straight chord from the shoulder to the
    forearm (large moment arms, winch-style lifting).
    """
    base_mass = BASE_MASS_FRACTION * TOTAL_MASS_KG
    rest = TOTAL_MASS_KG - base_mass
    links = [LinkSpec(name="shoulder", length_m=0.0, mass_kg=base_mass,
                      com_offset_m=(0.0, 0.0, 0.1),
                      inertia_diag_kgm2=(0.15, 0.15, 0.15))]
    moving = [(n, L) for n, L in _LINK_LENGTHS.items() if n != "shoulder"]
    for n, L in moving:
        links.append(_rod_link(n, L, rest * L / TOTAL_REACH_M))

    joints = (
        JointSpec(name="ShoulderRoll", axis=(0.0, 0.0, 1.0),
                  limit_lo_rad=-3.14, limit_hi_rad=3.14,
                  viscous_friction_nms_per_rad=2.0, coulomb_friction_nm=0.4),
        JointSpec(name="UpperArmPitch", axis=(0.0, 1.0, 0.0),
                  limit_lo_rad=-1.3, limit_hi_rad=1.3,
                  viscous_friction_nms_per_rad=2.5, coulomb_friction_nm=0.5),
        JointSpec(name="ElbowUpPitch", axis=(0.0, 1.0, 0.0),
                  limit_lo_rad=-1.57, limit_hi_rad=1.8,
                  viscous_friction_nms_per_rad=2.5, coulomb_friction_nm=0.5),
        JointSpec(name="ElbowLowPitch", axis=(0.0, 1.0, 0.0),
                  limit_lo_rad=-0.8, limit_hi_rad=2.8,
                  viscous_friction_nms_per_rad=3.0, coulomb_friction_nm=0.5),
        JointSpec(name="WristRoll", axis=(0.0, 0.0, 1.0),
                  limit_lo_rad=-3.14, limit_hi_rad=3.14,
                  viscous_friction_nms_per_rad=2.5, coulomb_friction_nm=0.3),
    )

    elements = (
        # belts: ideal closed-loop transmissions on the two roll joints
        ElementSpec(name="sr_belt", kind="belt", motor=_AK_MOTOR,
                    pulley_radius_m=0.006,
                    routing=(_pt("shoulder", (0.06, 0.0, 0.04), "pulley"),
                             _pt("shoulder_roll", (0.04, 0.0, -0.02), "end")),
                    belt_loop_length_m=1.0),
        ElementSpec(name="wr_belt", kind="belt", motor=_AK_MOTOR,
                    pulley_radius_m=0.006,
                    routing=(_pt("shoulder", (-0.06, 0.0, 0.04), "pulley"),
                             _pt("hand", (0.04, 0.0, -0.01), "end")),
                    belt_loop_length_m=2.0),
        # upper-arm antagonist pair, ring-terminated so full shoulder roll
        # leaves them inertially fixed instead of wrapping around the arm.
        # The shoulder guides aim low and wide so each wire's sign flip
        # (guide, axis and ring attachment colinear) lands past the travel
        # limit, not inside it
        ElementSpec(name="ua_flex", kind="wire", motor=_AK_MOTOR,
                    pulley_radius_m=0.006,
                    routing=(_pt("shoulder", (-0.16, 0.0, 0.05), "pulley"),
                             _pt("shoulder", (-0.148, 0.0, -0.079), "waypoint_b"),
                             _pt("upper_arm", (-0.05, 0.0, -0.22), "end")),
                    ring=RingSpec(link="upper_arm", center_offset_m=0.22,
                                  radius_m=0.05)),
        ElementSpec(name="ua_ext", kind="wire", motor=_AK_MOTOR,
                    pulley_radius_m=0.006,
                    routing=(_pt("shoulder", (0.16, 0.0, 0.05), "pulley"),
                             _pt("shoulder", (0.148, 0.0, -0.075), "waypoint_b"),
                             _pt("upper_arm", (0.05, 0.0, -0.20), "end")),
                    ring=RingSpec(link="upper_arm", center_offset_m=0.20,
                                  radius_m=0.05)),
        # elbow element: switchable waypoints give the two routing modes.
        # Elbow wires run on the link side faces (y standoff) so folded
        # postures keep them clear of the other links' collision cylinders.
        # Each pitch crossing is a two-guide pair, one guide per link, at
        # axial distance d from the joint plane and lateral radius rho. The
        # arm keeps its sign over (-2*atan(rho/d), +2*atan(d/rho)), so d/rho
        # is picked per joint range; the small y split keeps the guides from
        # meeting at deep flexion.
        ElementSpec(name="elbow_power", kind="wire", motor=_AK_MOTOR,
                    pulley_radius_m=0.006,
                    # pulley sits in the UpperArmPitch joint plane so winch
                    # tension barely couples into the shoulder
                    routing=(_pt("shoulder_roll", (-0.01, 0.04, -0.095), "pulley"),
                             _pt("upper_arm", (-0.03, 0.02, -0.325),
                                 "waypoint_c", "elbow_chord"),
                             _pt("elbow_upper", (-0.03, 0.06, -0.075),
                                 "waypoint_c", "elbow_chord"),
                             _pt("elbow_upper", (-0.03, 0.08, -0.36),
                                 "waypoint_c", "elbow_chord"),
                             _pt("elbow_lower", (-0.03, 0.04, -0.04),
                                 "waypoint_c", "elbow_chord"),
                             _pt("elbow_lower", (-0.04, 0.04, -0.24), "end"))),
        # the posture wires wind drums on the elbow joint housings and anchor
        # just off the rim: a straight guide pair keeps one torque sign over
        # at most pi of travel, and both elbow joints sweep more than that,
        # so each wire stays wound on its drum over the whole joint range and
        # the moment arm holds at the rim radius all the way to the stops
        # the elbow wires take off from ducted guides on the upper arm, not
        # from the shoulder: a feed segment crossing UpperArmPitch would drag
        # the shoulder every time the allocator works the elbows
        #
        # eu_flex winds against the lift direction: under a held payload the
        # chord alone cannot hold the upper elbow, so the drum backs it up
        # with a full-range flexor; extension comes from gravity and from
        # el_flex's crossing below
        ElementSpec(name="eu_flex", kind="wire", motor=_AK_MOTOR,
                    pulley_radius_m=0.006,
                    routing=(_pt("upper_arm", (0.055, 0.04, -0.39), "pulley"),
                             _pt("elbow_upper", (0.0, 0.04, 0.0), "cam",
                                 radius=0.05, wrap=-1),
                             _pt("elbow_upper", (-0.049, 0.04, -0.017), "end"))),
        # the forearm pair's guides sit off the pitch centerline, so each
        # crossing also torques the upper elbow: el_ext assists flexion from
        # the +x side and el_flex is the only cable that can extend that joint
        ElementSpec(name="el_flex", kind="wire", motor=_AK_MOTOR,
                    pulley_radius_m=0.006,
                    routing=(_pt("upper_arm", (-0.05, 0.045, -0.385), "pulley"),
                             _pt("elbow_upper", (-0.055, 0.045, -0.39), "waypoint_a"),
                             _pt("elbow_lower", (0.0, 0.045, 0.0), "cam",
                                 radius=0.05, wrap=-1),
                             _pt("elbow_lower", (0.046, 0.045, 0.024), "end"))),
        ElementSpec(name="el_ext", kind="wire", motor=_AK_MOTOR,
                    pulley_radius_m=0.006,
                    routing=(_pt("upper_arm", (0.05, 0.05, -0.385), "pulley"),
                             _pt("elbow_upper", (0.055, 0.05, -0.39), "waypoint_a"),
                             _pt("elbow_lower", (0.0, 0.05, 0.0), "cam",
                                 radius=0.05, wrap=1),
                             _pt("elbow_lower", (-0.003, 0.05, -0.052), "end"))),
    )

    modes = (ModeSpec(name="manipulation", engaged_groups=("elbow_chord",)),
             ModeSpec(name="power", engaged_groups=()))

    model = RobotModel(name="vlimb-default",
                       links=tuple(links), joints=joints, elements=elements,
                       modes=modes, controller=ControllerDefaults())
    return validate_model(model)
