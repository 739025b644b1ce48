import json
from dataclasses import replace

import pytest

from vlimb.model import (ModelParseError, ModelValidationError, default_vlimb,
                         load_model, model_from_dict, model_to_dict,
                         validate_model, write_model)


def _swap_element(model, i, elem):
    els = list(model.elements)
    els[i] = elem
    return replace(model, elements=tuple(els))


def _swap_point(model, ei, pi, point):
    e = model.elements[ei]
    pts = list(e.routing)
    pts[pi] = point
    return _swap_element(model, ei, replace(e, routing=tuple(pts)))


def _eidx(model, name):
    return [e.name for e in model.elements].index(name)


def test_default_model_is_valid(model):
    assert validate_model(model) is model
    assert len(model.joints) == 5
    assert len(model.elements) == 8
    assert model.mode_names() == ("manipulation", "power")


def test_dict_round_trip(model):
    d1 = model_to_dict(model)
    d2 = model_to_dict(model_from_dict(d1))
    assert d1 == d2
    # and the dict is honest JSON, not numpy leftovers
    assert json.loads(json.dumps(d1)) == d1


def test_file_round_trip(model, tmp_path):
    path = tmp_path / "m.json"
    write_model(model, path)
    back = load_model(path)
    assert model_to_dict(back) == model_to_dict(model)


def test_load_rejects_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{this is not json")
    with pytest.raises(ModelParseError):
        load_model(path)


def test_load_rejects_invalid_model(model, tmp_path):
    d = model_to_dict(model)
    d["links"][1]["mass_kg"] = -1.0
    path = tmp_path / "badmass.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ModelValidationError, match="mass_kg"):
        load_model(path)


def test_joint_count_pinned(model):
    with pytest.raises(ModelValidationError, match="joint count"):
        validate_model(replace(model, joints=model.joints[:4],
                               links=model.links[:5]))


def test_unique_names_enforced(model):
    links = list(model.links)
    links[2] = replace(links[2], name=links[1].name)
    with pytest.raises(ModelValidationError, match="unique"):
        validate_model(replace(model, links=tuple(links)))


def test_axis_must_be_unit(model):
    joints = list(model.joints)
    joints[0] = replace(joints[0], axis=(0.0, 0.0, 2.0))
    with pytest.raises(ModelValidationError, match="unit"):
        validate_model(replace(model, joints=tuple(joints)))


def test_limits_must_be_ordered(model):
    joints = list(model.joints)
    joints[1] = replace(joints[1], limit_lo_rad=1.0, limit_hi_rad=-1.0)
    with pytest.raises(ModelValidationError, match="limit_lo_rad"):
        validate_model(replace(model, joints=tuple(joints)))


def test_motor_constants_positive(model):
    e = model.elements[0]
    bad = replace(e, motor=replace(e.motor, torque_constant_nm_per_a=0.0))
    with pytest.raises(ModelValidationError, match="motor constants"):
        validate_model(_swap_element(model, 0, bad))


def test_routing_needs_pulley_first_end_last(model):
    i = _eidx(model, "ua_flex")
    e = model.elements[i]
    flipped = replace(e, routing=tuple(reversed(e.routing)))
    with pytest.raises(ModelValidationError, match="pulley"):
        validate_model(_swap_element(model, i, flipped))


def test_routing_unknown_link(model):
    i = _eidx(model, "ua_flex")
    p = model.elements[i].routing[1]
    with pytest.raises(ModelValidationError, match="unknown link"):
        validate_model(_swap_point(model, i, 1, replace(p, link="nope")))


def test_switch_group_only_on_switch_points(model):
    i = _eidx(model, "ua_flex")
    p = model.elements[i].routing[1]
    with pytest.raises(ModelValidationError, match="switch_group"):
        validate_model(_swap_point(model, i, 1,
                                   replace(p, switch_group="g")))


def test_switch_point_needs_group(model):
    i = _eidx(model, "elbow_power")
    p = model.elements[i].routing[1]
    with pytest.raises(ModelValidationError, match="needs a switch_group"):
        validate_model(_swap_point(model, i, 1,
                                   replace(p, switch_group=None)))


def test_cam_radius_positive(model):
    i = _eidx(model, "eu_flex")
    p = model.elements[i].routing[1]
    assert p.kind == "cam"
    with pytest.raises(ModelValidationError, match="radius_m"):
        validate_model(_swap_point(model, i, 1, replace(p, radius_m=0.0)))


def test_cam_wrap_dir_must_be_sign(model):
    i = _eidx(model, "eu_flex")
    p = model.elements[i].routing[1]
    with pytest.raises(ModelValidationError, match="wrap_dir"):
        validate_model(_swap_point(model, i, 1, replace(p, wrap_dir=2)))


def test_cam_center_must_sit_on_joint_axis(model):
    i = _eidx(model, "eu_flex")
    p = model.elements[i].routing[1]
    off = (p.offset_m[0] + 0.02, p.offset_m[1], p.offset_m[2])
    with pytest.raises(ModelValidationError, match="joint axis"):
        validate_model(_swap_point(model, i, 1, replace(p, offset_m=off)))


def test_cam_wrap_dir_sector_rule(model):
    # a joint sweep longer than one turn cannot keep the anchor off the
    # feed ray in either winding, so the sector rule must fire
    joints = list(model.joints)
    joints[2] = replace(joints[2], limit_lo_rad=-3.2, limit_hi_rad=3.2)
    with pytest.raises(ModelValidationError, match="feed ray"):
        validate_model(replace(model, joints=tuple(joints)))


def test_cam_neighbor_off_drum_plane(model):
    i = _eidx(model, "eu_flex")
    nxt = model.elements[i].routing[2]
    off = (nxt.offset_m[0], nxt.offset_m[1] + 0.03, nxt.offset_m[2])
    with pytest.raises(ModelValidationError, match="drum plane"):
        validate_model(_swap_point(model, i, 2, replace(nxt, offset_m=off)))


def test_cam_anchor_inside_radius(model):
    i = _eidx(model, "eu_flex")
    cam = model.elements[i].routing[1]
    nxt = model.elements[i].routing[2]
    off = (cam.offset_m[0] + 0.01, nxt.offset_m[1], cam.offset_m[2])
    with pytest.raises(ModelValidationError, match="inside the cam radius"):
        validate_model(_swap_point(model, i, 2, replace(nxt, offset_m=off)))


def test_cam_not_allowed_on_belt(model):
    i = _eidx(model, "sr_belt")
    e = model.elements[i]
    cam = replace(e.routing[0], kind="cam", radius_m=0.02, wrap_dir=1)
    pts = (e.routing[0], cam, e.routing[1])
    with pytest.raises(ModelValidationError):
        validate_model(_swap_element(model, i, replace(e, routing=pts)))


def test_ring_end_must_sit_on_ring_link(model):
    i = _eidx(model, "ua_flex")
    e = model.elements[i]
    bad = replace(e, ring=replace(e.ring, link="elbow_lower"))
    with pytest.raises(ModelValidationError, match="ring link"):
        validate_model(_swap_element(model, i, bad))


def test_belt_end_not_on_base(model):
    i = _eidx(model, "sr_belt")
    e = model.elements[i]
    end = replace(e.routing[-1], link="shoulder")
    with pytest.raises(ModelValidationError, match="base link"):
        validate_model(_swap_point(model, i, len(e.routing) - 1, end))


def test_mode_groups_must_exist(model):
    modes = list(model.modes)
    modes[0] = replace(modes[0], engaged_groups=("no_such_group",))
    with pytest.raises(ModelValidationError, match="switch_group"):
        validate_model(replace(model, modes=tuple(modes)))


def test_controller_bounds_checked(model):
    ctl = replace(model.controller, tension_floor_n=2000.0)
    with pytest.raises(ModelValidationError, match="floor"):
        validate_model(replace(model, controller=ctl))
