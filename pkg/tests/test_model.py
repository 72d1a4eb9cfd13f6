from dataclasses import replace

import numpy as np
import pytest

from sms_handover.model import (ArmParams, JointParams, ModelError, ModelValidationError, RigidBodyParams,
                                default_model_path, dumps_model, load_system_model, loads_model, mass_ratio,
                                model_from_dict, model_to_dict, save_system_model, validate_model)


def test_bundled_model_shape(model):
    assert model.n_dof == 6 + 2 * 7 == 20
    assert len(model.arm_a.links) == len(model.arm_b.links) == 7
    assert validate_model(model) == []
    assert model.base.mass == 240.0
    assert np.isclose(model.arm_a.mass, 7.0) and np.isclose(model.arm_b.mass, 7.0)
    assert np.isclose(mass_ratio(model), 14.0 / 240.0)
    assert model.arm_slice("A") == slice(6, 13) and model.arm_slice("b") == slice(13, 20)
    assert model.joint_limits().shape == (14, 2)


def test_round_trip(model, tmp_path):
    assert loads_model(dumps_model(model)) == model
    path = tmp_path / "m.toml"
    save_system_model(model, path)
    assert load_system_model(path) == model


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ModelError, match="not found"):
        load_system_model(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("name = [unclosed")
    with pytest.raises(ModelError, match="not valid TOML"):
        load_system_model(bad)
    with pytest.raises(ModelError, match="malformed"):
        model_from_dict({"base": {"mass": 1.0}})


def test_validation_lists_every_violation(model):
    data = model_to_dict(model)
    data["base"]["mass"] = -1.0
    a1 = data["arms"]["A"]["links"][0]
    a1["inertia"] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 3.0]]  # triangle inequality
    a1["axis"] = [0.0, 0.0, 1.001]
    data["arms"]["B"]["links"][2]["limits"] = [1.0, -1.0]
    data["arms"]["B"]["links"].pop()
    import tomli_w
    with pytest.raises(ModelValidationError) as info:
        loads_model(tomli_w.dumps(data))
    v = info.value.violations
    assert any("base: mass" in s for s in v)
    assert any("triangle" in s for s in v)
    assert any("unit vector" in s for s in v)
    assert any("min < max" in s for s in v)
    assert any("expected 7 links, found 6" in s for s in v)
    assert len(v) == 5


@pytest.mark.parametrize("inertia, message", [
    (((1.0, 0.1, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)), "not symmetric"),
    (((1.0, 0.0, 0.0), (0.0, -1.0, 0.0), (0.0, 0.0, 1.0)), "positive definite"),
])
def test_rigid_body_invariants(inertia, message):
    assert any(message in s for s in RigidBodyParams(1.0, inertia).violations("x"))


def test_joint_invariants():
    assert JointParams((0.0, 0.0, 1.0)).violations("j") == []
    assert JointParams((0.0, 0.0, 1.0 + 1e-13)).violations("j") == []
    assert JointParams((0.0, 0.0, 1.0 + 1e-11)).violations("j")
    assert JointParams((1.0, 0.0, 0.0), armature=-0.1).violations("j")
    assert JointParams((1.0, 0.0, 0.0), type="prismatic").violations("j")


def test_default_path_is_packaged():
    assert default_model_path().is_file()


def test_packed_arrays_follow_model(model):
    base_mass, base_inertia, mount_pos, mount_rot, tool, arm_start, axes, *_ = model.packed
    assert base_mass == 240.0
    assert list(arm_start) == [0, 7, 14]
    assert axes.shape == (14, 3)
    assert np.allclose(mount_rot[0] @ mount_rot[0].T, np.eye(3))
