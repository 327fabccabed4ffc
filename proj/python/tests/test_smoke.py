import json
import math

import pytest

import teachctl


def test_step_size_endpoints():
    assert teachctl.step_size(0.5) == pytest.approx(0.015, abs=1e-15)
    assert teachctl.step_size(0.0) == pytest.approx(0.0199331, abs=1e-6)
    with pytest.raises(teachctl.TeachctlError):
        teachctl.step_size(1.5)


def test_scheduler_moves_by_eta():
    s = teachctl.MaskScheduler()
    mu, eta = s.step(1.0)
    assert mu == pytest.approx(0.48)
    assert eta == pytest.approx(0.02)
    for loss in (1.0, 1.0):
        s.step(loss)
    mu, _ = s.step(0.5)
    assert mu == pytest.approx(0.46)


def test_scheduler_state_round_trip():
    s = teachctl.MaskScheduler(total_epochs=10)
    for loss in (0.9, 0.8, 1.1, 0.7):
        s.advance_epoch()
        s.step(loss)
    text = s.export_state()
    t = teachctl.MaskScheduler.import_state(text)
    assert t.mask_ratio == s.mask_ratio
    assert t.epoch == 4
    assert s.step(0.6) == t.step(0.6)
    with pytest.raises(teachctl.TeachctlError):
        teachctl.MaskScheduler.import_state("{not json")


def test_scheduler_rejects_bad_config_and_loss():
    with pytest.raises(ValueError, match="eta_min"):
        teachctl.MaskScheduler(eta_min=0.5)
    s = teachctl.MaskScheduler()
    with pytest.raises(teachctl.TeachctlError):
        s.step(math.nan)


def test_threshold_update_worked_value():
    n = teachctl.update_threshold(0.3, 0.64, 0.01, 0.5)
    assert n == pytest.approx(0.5 * 0.3 + 0.5 * (0.5 * 0.8 - 0.2 * 0.01))
    assert teachctl.update_threshold(0.45, 1.0, 0.0, 0.0) == 0.45
    assert teachctl.class_stats([]) is None
    mean, var = teachctl.class_stats([0.2, 0.4])
    assert mean == pytest.approx(0.3)
    assert var == pytest.approx(0.01)


def test_smoothing_coefficient_modes():
    assert teachctl.smoothing_coefficient(50, 100) == pytest.approx(0.5)
    assert teachctl.smoothing_coefficient(0, 100, mode="literal") == pytest.approx(0.5)
    assert teachctl.smoothing_coefficient(0, 100) > 0.99
    with pytest.raises(teachctl.TeachctlError):
        teachctl.smoothing_coefficient(0, 100, mode="sideways")


def test_vfst_controller():
    v = teachctl.VfstController([1, 2], total_iters=100)
    assert v.thresholds == {1: 0.3, 2: 0.3}
    out = v.step({1: [0.9, 0.95, 0.85]}, 10)
    assert out[2] == 0.3
    assert 0.25 <= out[1] <= 0.45
    doc = json.loads(v.export_state())
    assert set(doc) == {"config", "states"}
    w = teachctl.VfstController.import_state(v.export_state())
    assert w.thresholds == v.thresholds
    assert w.step({2: [0.7]}, 11) == v.step({2: [0.7]}, 11)
