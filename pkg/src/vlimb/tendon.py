"""Wire routing geometry: lengths, muscle-length Jacobian, passive rings, wrap.

Wire segments are straight lines between routing points; guide points are
ideal (no wrap arc length). Belts are ideal closed-loop pulley transmissions:
length = loop - r * q_driven with r the end point's perpendicular distance to
the driven joint axis, so their moment arm is exactly constant and positive
tension drives the joint in the positive direction.

Cam points are joint-housing drums the wire winds: a circle of the given
radius centered on the owning link's parent joint axis, with the winding
direction fixed by assembly (wrap_dir). The wire runs straight to its anchor
while the anchor sits inside the feed point's tangent sector and winds the
rim beyond it; a shortest-path rule would flip sides once feed and anchor
pass half a turn apart, which an assembled wire cannot do. While wound the
leg's length changes only with the drum's own joint angle, at exactly the
rim radius per radian, which is what makes drums useful: a plain crossing
guide pair holds one torque sign for at most pi of joint travel, a drum
holds it to the stops. The straight/wound handoff happens at tangency, so
lengths and the Jacobian stay continuous there.

Ring-terminated wires end on a bearing-mounted ring riding the link; the ring
angle settles where the total wire path is shortest. Only the final segment
depends on the ring angle, so the optimum is the projection of the last
interior point onto the ring plane (exact; |dl/dphi| = 0 at the solution).
Lengths and the Jacobian treat the solved angle as fixed: at the optimum the
path length is first-order insensitive to the ring angle.
"""

from dataclasses import dataclass
import numpy as np

from .kinematics import forward_kinematics, _jacobian_from_fk, _cross3


@dataclass(frozen=True)
class RoutedElement:
    name: str
    kind: str                 # wire | belt
    link_indices: tuple       # per routing point, after mode filtering
    offsets: np.ndarray       # (k, 3) local offsets
    cams: tuple = ()          # (point_index, joint, radius, wrap_dir) per cam
    ring_link: int = -1
    ring_center_offset: float = 0.0
    ring_radius: float = 0.0
    belt_joint: int = -1
    belt_radius: float = 0.0
    belt_loop: float = 0.0


@dataclass(frozen=True)
class RoutingConfig:
    """Mode-resolved routing: switchable waypoints of disengaged groups removed."""
    mode: str
    elements: tuple           # RoutedElement per model element, same order

    def element(self, name):
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(f"unknown element {name!r}")


@dataclass
class WirePosture:
    """Per-element lengths, rates and tensions."""
    lengths: np.ndarray
    rates: np.ndarray
    tensions: np.ndarray

    def copy(self):
        return WirePosture(self.lengths.copy(), self.rates.copy(),
                           self.tensions.copy())


class RingState(dict):
    """element name -> ring angle phi in [-pi, pi)."""

    def copy(self):
        return RingState(self)


def _perp_radius(offset, axis):
    off = np.asarray(offset, dtype=float)
    ax = np.asarray(axis, dtype=float)
    return float(np.linalg.norm(off - (off @ ax) * ax))


def resolve_routing(model, mode):
    """Effective routing for a mode.

    Waypoints whose switch group is disengaged in the mode are removed from
    the path; every element keeps its pulley and end points, so at least two
    points always remain.
    """
    engaged = set(model.mode(mode).engaged_groups)
    routed = []
    for e in model.elements:
        pts = [p for p in e.routing
               if p.kind != "waypoint_c" or p.switch_group in engaged]
        links = tuple(model.link_index(p.link) for p in pts)
        offs = np.array([p.offset_m for p in pts], dtype=float)
        cams = tuple((i, links[i] - 1, p.radius_m, p.wrap_dir)
                     for i, p in enumerate(pts) if p.kind == "cam")
        kw = {"cams": cams}
        if e.ring is not None:
            kw.update(ring_link=model.link_index(e.ring.link),
                      ring_center_offset=e.ring.center_offset_m,
                      ring_radius=e.ring.radius_m)
        if e.kind == "belt":
            end_link = links[-1]
            bj = end_link - 1   # parent joint of the end link
            kw.update(belt_joint=bj,
                      belt_radius=_perp_radius(offs[-1], model.joints[bj].axis),
                      belt_loop=e.belt_loop_length_m)
        routed.append(RoutedElement(name=e.name, kind=e.kind,
                                    link_indices=links, offsets=offs, **kw))
    return RoutingConfig(mode=mode, elements=tuple(routed))


def _wrap_angle(phi):
    phi = (phi + np.pi) % (2.0 * np.pi) - np.pi
    return float(phi) if phi < np.pi else float(phi - 2.0 * np.pi)


def solve_ring_angles(model, routing, q, fk=None):
    """Ring angles minimizing each ring-terminated element's path length."""
    if fk is None:
        fk = forward_kinematics(model, q)
    rings = RingState()
    for e in routing.elements:
        if e.ring_link < 0:
            continue
        center = fk.point(e.ring_link, (0.0, 0.0, -e.ring_center_offset))
        R = fk.R[e.ring_link]
        xhat, yhat, zhat = R[:, 0], R[:, 1], R[:, 2]
        # last interior point drives the final segment
        prev = fk.point(e.link_indices[-2], e.offsets[-2])
        v = prev - center
        vx, vy = v @ xhat, v @ yhat
        if vx * vx + vy * vy < 1e-24:
            rings[e.name] = 0.0   # degenerate: point on the ring axis
        else:
            rings[e.name] = _wrap_angle(np.arctan2(vy, vx))
    return rings


def ring_attachment_world(fk, e, phi):
    center = fk.point(e.ring_link, (0.0, 0.0, -e.ring_center_offset))
    R = fk.R[e.ring_link]
    return center + e.ring_radius * (np.cos(phi) * R[:, 0] + np.sin(phi) * R[:, 1])


class _CamLeg:
    """Path past one drum, winding direction fixed by assembly: straight
    chord while the anchor sits inside the tangent sector, tangent-arc-
    tangent wind otherwise. sign is dl/dq of the wound arc in units of the
    radius (the wrap_dir, 0 when straight); t_a/t_b are the world points
    where the wire meets and leaves the rim."""
    __slots__ = ("branch", "length", "sign", "t_a", "t_b")

    def __init__(self, branch, length, sign, t_a, t_b):
        self.branch = branch
        self.length = length
        self.sign = sign
        self.t_a = t_a
        self.t_b = t_b


def _solve_cam_leg(A, B, c, ahat, r, s):
    a = A - c
    b = B - c
    ap = a - (a @ ahat) * ahat
    bp = b - (b @ ahat) * ahat
    ra = float(np.linalg.norm(ap))
    rb = float(np.linalg.norm(bp))
    straight = float(np.linalg.norm(B - A))
    if ra <= r:
        # feed point on or inside the rim: degenerate, treat as straight
        return _CamLeg("straight", straight, 0.0, None, None)
    e1 = ap / ra
    e2 = _cross3(ahat, e1)
    alpha = float(np.arctan2(bp @ e2, bp @ e1))
    ga = np.arccos(r / ra)
    gb = np.arccos(min(r / rb, 1.0)) if rb > r else 0.0
    # angle of the anchor past the feed tangent, in the winding direction;
    # the model keeps this off the 0/2pi cut over the whole joint range
    phi = (s * alpha) % (2.0 * np.pi) - ga - gb
    if phi <= 0.0:
        return _CamLeg("straight", straight, 0.0, None, None)
    t_a = np.sqrt(ra * ra - r * r)
    t_b = np.sqrt(max(rb * rb - r * r, 0.0))
    th_a = s * ga
    th_b = s * ((s * alpha) % (2.0 * np.pi) - gb)
    pt_a = c + r * (np.cos(th_a) * e1 + np.sin(th_a) * e2)
    pt_b = c + r * (np.cos(th_b) * e1 + np.sin(th_b) * e2)
    return _CamLeg("wound", t_a + r * phi + t_b, float(s), pt_a, pt_b)


def _cam_legs(e, P, fk):
    """point index of each cam -> solved leg for the current posture."""
    legs = {}
    for (pi, joint, radius, s) in e.cams:
        A, B = P[pi - 1], P[pi + 1]
        legs[pi] = _solve_cam_leg(A, B, P[pi], fk.joint_axes[joint],
                                  radius, s)
    return legs


def _raw_points(e, fk, rings):
    P = np.empty((len(e.link_indices), 3))
    for i, (li, off) in enumerate(zip(e.link_indices, e.offsets)):
        P[i] = fk.point(li, off)
    if e.ring_link >= 0:
        P[-1] = ring_attachment_world(fk, e, rings[e.name])
    return P


def _wire_path_length(e, P, fk):
    if not e.cams:
        d = np.diff(P, axis=0)
        return float(np.sqrt((d * d).sum(axis=1)).sum())
    legs = _cam_legs(e, P, fk)
    total = 0.0
    m = 0
    k = len(e.link_indices)
    while m < k - 1:
        if (m + 1) in legs:
            total += legs[m + 1].length
            m += 2
        else:
            total += float(np.linalg.norm(P[m + 1] - P[m]))
            m += 1
    return total


def element_points_world(model, routing, q, rings=None, fk=None):
    """World positions of every element's effective routing points.

    Returns a list of (k_i, 3) arrays, belts included (their two placement
    points; belt length does not come from these). A wrapped cam appears as
    its two tangent points; an unwrapped one drops out of the path, so the
    polyline is the wire's actual straight segments (arc length between the
    tangent points is not represented here; element_lengths carries it).
    """
    pts, _ = _points_and_owners(model, routing, q, rings=rings, fk=fk)
    return pts


def _points_and_owners(model, routing, q, rings=None, fk=None):
    if fk is None:
        fk = forward_kinematics(model, q)
    if rings is None:
        rings = solve_ring_angles(model, routing, q, fk=fk)
    out_pts, out_own = [], []
    for e in routing.elements:
        P = _raw_points(e, fk, rings)
        if not e.cams:
            out_pts.append(P)
            out_own.append(tuple(e.link_indices))
            continue
        legs = _cam_legs(e, P, fk)
        pts, own = [], []
        for i in range(len(e.link_indices)):
            if i in legs:
                leg = legs[i]
                if leg.branch != "straight":
                    # rim points live on the joint housing, which spans the
                    # cam link and its parent
                    li = e.link_indices[i]
                    pts.extend([leg.t_a, leg.t_b])
                    own.extend([(li - 1, li)] * 2)
                continue
            pts.append(P[i])
            own.append(e.link_indices[i])
        out_pts.append(np.array(pts))
        out_own.append(tuple(own))
    return out_pts, out_own


def element_lengths(model, routing, q, rings=None, fk=None):
    """Path length of every element at posture q."""
    if fk is None:
        fk = forward_kinematics(model, q)
    if rings is None:
        rings = solve_ring_angles(model, routing, q, fk=fk)
    q = np.asarray(q, dtype=float)
    L = np.empty(len(routing.elements))
    for i, e in enumerate(routing.elements):
        if e.kind == "belt":
            L[i] = e.belt_loop - e.belt_radius * q[e.belt_joint]
        else:
            L[i] = _wire_path_length(e, _raw_points(e, fk, rings), fk)
    return L


def muscle_jacobian(model, routing, q, rings=None, fk=None):
    """G = dl/dq, one row per element. Joint torque from tensions f is
    tau = -G.T @ f. Ring angles are held fixed at their solved values."""
    if fk is None:
        fk = forward_kinematics(model, q)
    if rings is None:
        rings = solve_ring_angles(model, routing, q, fk=fk)
    n = fk.arrays.n
    G = np.zeros((len(routing.elements), n))
    for i, e in enumerate(routing.elements):
        if e.kind == "belt":
            G[i, e.belt_joint] = -e.belt_radius
            continue
        k = len(e.link_indices)
        P = np.empty((k, 3))
        J = np.empty((k, 3, n))
        for m, (li, off) in enumerate(zip(e.link_indices, e.offsets)):
            P[m] = fk.point(li, off)
            J[m] = _jacobian_from_fk(fk, li, P[m])
        if e.ring_link >= 0:
            P[-1] = ring_attachment_world(fk, e, rings[e.name])
            J[-1] = _jacobian_from_fk(fk, e.ring_link, P[-1])
        legs = _cam_legs(e, P, fk) if e.cams else {}
        cam_jr = {pi: (j, r) for (pi, j, r, _s) in e.cams}
        m = 0
        while m < k - 1:
            if (m + 1) in legs:
                # cam leg spans P[m] -> rim -> P[m+2]. Wound, the length
                # varies only with the cam's own joint and at exactly the
                # rim radius per radian; straight, the generic chord term
                # between the two neighbors applies.
                leg = legs[m + 1]
                if leg.branch == "straight":
                    d = P[m + 2] - P[m]
                    ln = np.linalg.norm(d)
                    if ln >= 1e-12:
                        G[i] += (d / ln) @ (J[m + 2] - J[m])
                else:
                    j, r = cam_jr[m + 1]
                    G[i, j] += leg.sign * r
                m += 2
                continue
            d = P[m + 1] - P[m]
            ln = np.linalg.norm(d)
            if ln >= 1e-12:
                G[i] += (d / ln) @ (J[m + 1] - J[m])
            m += 1
    return G


def moment_arm(model, routing, q, element, joint, rings=None, fk=None):
    """Moment arm of an element about a joint: -dl/dq (meters).
    Positive arm means tension drives the joint positive."""
    G = muscle_jacobian(model, routing, q, rings=rings, fk=fk)
    ei = model.element_index(element) if isinstance(element, str) else int(element)
    ji = model.joint_index(joint) if isinstance(joint, str) else int(joint)
    return float(-G[ei, ji])


# ------------------------------------------------------------------ wrap

def _segment_segment_distance(p1, q1, p2, q2):
    """Minimum distance between segments [p1,q1] and [p2,q2]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    eps = 1e-14
    if a <= eps and e <= eps:
        return float(np.linalg.norm(r))
    if a <= eps:
        s, t = 0.0, np.clip(f / e, 0.0, 1.0)
    else:
        c = d1 @ r
        if e <= eps:
            t, s = 0.0, np.clip(-c / a, 0.0, 1.0)
        else:
            b = d1 @ d2
            den = a * e - b * b
            s = np.clip((b * f - c * e) / den, 0.0, 1.0) if den > eps else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t, s = 0.0, np.clip(-c / a, 0.0, 1.0)
            elif t > 1.0:
                t, s = 1.0, np.clip((b - c) / a, 0.0, 1.0)
    cp1 = p1 + s * d1
    cp2 = p2 + t * d2
    return float(np.linalg.norm(cp1 - cp2))


@dataclass(frozen=True)
class WrapViolation:
    element: str
    segment: int      # index of the wire segment within the element path
    link: str
    distance_m: float


def link_axis_segments(model, fk, margin=None):
    """(link_index, a, b) collision axis segments for links long enough to
    carry one after the per-end margin is removed."""
    margin = model.wrap_axis_margin_m if margin is None else margin
    segs = []
    for k, link in enumerate(model.links):
        L = link.length_m
        if L - 2.0 * margin <= 0.0:
            continue
        a = fk.point(k, (0.0, 0.0, -margin))
        b = fk.point(k, (0.0, 0.0, -(L - margin)))
        segs.append((k, a, b))
    return segs


def check_wire_segments(segments, owners, axis_segments, radius, link_names,
                        element_names):
    """Pure geometry core of wrap detection.

    segments: list of (k,3) world point arrays (one per wire element);
    owners:   list of per-point link indices matching each array (an int,
              or a tuple of ints for points owned by a joint housing);
    axis_segments: output of link_axis_segments.
    Rotating every point and axis by a common rigid rotation leaves the
    result unchanged (distances only).
    """
    out = []
    for name, pts, own in zip(element_names, segments, owners):
        for s in range(len(pts) - 1):
            la, lb = own[s], own[s + 1]
            la = la if isinstance(la, tuple) else (la,)
            lb = lb if isinstance(lb, tuple) else (lb,)
            for (k, a, b) in axis_segments:
                if k in la or k in lb:
                    continue   # segment is attached to this link
                d = _segment_segment_distance(pts[s], pts[s + 1], a, b)
                if d < radius:
                    out.append(WrapViolation(element=name, segment=s,
                                             link=link_names[k],
                                             distance_m=d))
    return out


def detect_wrap(model, routing, q, rings=None, fk=None):
    """Wire-on-link interference: any wire segment closer to a link's
    collision cylinder axis than the cylinder radius. Belts are enclosed
    transmissions and are skipped. Returns a list of WrapViolation."""
    if fk is None:
        fk = forward_kinematics(model, q)
    if rings is None:
        rings = solve_ring_angles(model, routing, q, fk=fk)
    pts_all, own_all = _points_and_owners(model, routing, q, rings=rings, fk=fk)
    segments, owners, names = [], [], []
    for e, pts, own in zip(routing.elements, pts_all, own_all):
        if e.kind == "belt":
            continue
        segments.append(pts)
        owners.append(own)
        names.append(e.name)
    axis_segs = link_axis_segments(model, fk)
    return check_wire_segments(segments, owners, axis_segs,
                               model.link_cylinder_radius_m,
                               model.link_names(), names)
