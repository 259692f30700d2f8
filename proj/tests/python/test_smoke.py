import math

import numpy as np
import pytest

import symk


def test_gaussian_kernel_value_and_symmetry():
    k = symk.KernelSpec(symk.KernelFamily.GAUSSIAN, 1.0)
    x = np.array([0.3, -0.2])
    y = np.array([-0.1, 0.4])
    expected = math.exp(-float(np.sum((x - y) ** 2)))
    assert symk.kernel_eval(k, x, y) == pytest.approx(expected, rel=1e-14)
    assert symk.kernel_eval(k, x, y) == symk.kernel_eval(k, y, x)


def test_kernel_gradient_matches_central_difference():
    k = symk.KernelSpec(symk.KernelFamily.MATERN52, 0.8)
    x = np.array([0.5, 0.1, -0.7])
    y = np.array([-0.2, 0.3, 0.4])
    h = 1e-6
    fd = np.array([(symk.kernel_eval(k, x, y + h * e) - symk.kernel_eval(k, x, y - h * e)) / (2 * h)
                   for e in np.eye(3)])
    np.testing.assert_allclose(symk.kernel_grad2(k, x, y), fd, rtol=1e-6, atol=1e-9)


def test_pendulum_midpoint_nearly_conserves_energy():
    sys = symk.HamiltonianSystem.pendulum()
    x0 = np.array([1.0, 0.0])
    times, states = symk.propagate(sys, x0, 1e-3, 1000)
    assert states.shape == (1001, 2)
    assert times[-1] == pytest.approx(1.0)
    drift = max(abs(sys.energy(s) - sys.energy(x0)) for s in states)
    assert drift < 1e-5


def test_step_bound_and_resonance():
    sys = symk.HamiltonianSystem.pendulum()
    lo = np.array([-math.pi, -2 * math.sqrt(9.81)])
    assert symk.step_size_bound_box(sys, lo, -lo, 6.0) == pytest.approx(math.log(2) / 9.81)
    osc = symk.HamiltonianSystem.quadratic(np.eye(2))
    det, resonant = symk.resonance_check(osc, math.pi / 2)
    assert resonant and abs(det) < 1e-10
    det, resonant = symk.resonance_check(osc, math.pi / 4)
    assert not resonant and det == pytest.approx(math.cos(math.pi / 4))


def test_errors_surface_as_symk_error():
    with pytest.raises(symk.SymkError):
        symk.KernelSpec(symk.KernelFamily.IMQ, -1.0)
    with pytest.raises(symk.SymkError):
        symk.HamiltonianSystem.pendulum().energy(np.zeros(3))


def test_small_pendulum_experiment_round_trip(tmp_path):
    cfg = tmp_path / "tiny.json"
    cfg.write_text("""{
      "system": "pendulum",
      "sampler": {"mode": "grid", "counts": [12, 12]},
      "delta_t": [0.1],
      "greedy": {"max_centers": 40},
      "selection": {"kernel": {"family": "gaussian", "epsilon": 1.0}},
      "test": {"count": 2, "horizon": 1.0}
    }""")
    out = tmp_path / "out"
    steps = symk.run_experiment("pendulum", out, seed=3, config=cfg)
    assert len(steps) == 1 and steps[0]["centers"] == 40
    assert (out / "MANIFEST").read_text().startswith("status: complete")

    model = symk.load_model(out / "model_dt0.1.json")
    assert model.centers == 40 and model.delta_t == pytest.approx(0.1)
    x1, converged = model.step(np.array([0.5, 0.0]))
    assert converged and x1.shape == (2,)
    assert model.rollout(np.array([0.5, 0.0]), 10).shape == (11, 2)
    assert model.symplecticity_defect(np.array([0.5, 0.0])) < 1e-5
