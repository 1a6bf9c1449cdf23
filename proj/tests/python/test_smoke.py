import math

import numpy as np
import pytest

import multikoop as mk


def tiny_config(tmp_path, variant="flat", seed=1):
    return mk.Config(
        profile="desk",
        overrides={
            "variant": variant,
            "seed": seed,
            "output_dir": str(tmp_path / variant),
            "training": {"n_ic": 320},
            "evaluation": {"n_trajectories": 5, "n_steps": 10},
            "control": {"n_ic": 2, "horizon": 8, "ic_box": 0.5},
            "simulate": {"n_ic": 1, "n_steps": 20},
        },
    )


def test_version_and_exports():
    assert mk.__version__
    assert {"Config", "Model", "fit", "kreiss_bound"} <= set(mk.__all__)


def test_config_profiles_and_validation():
    cfg = mk.Config(profile="desk")
    assert cfg.to_dict()["training"]["n_ic"] == 2000
    cfg.variant = "hier"
    assert cfg.variant == "hier"
    cfg.validate()
    with pytest.raises(mk.Error):
        mk.Config(profile="unknown")
    with pytest.raises(mk.Error):
        cfg.apply({"training": {"n_ic": "many"}})


def test_simulate_trajectory_shapes():
    traj = mk.simulate_trajectory(
        "flat", np.array([0.3, -0.2, 0.1, 0.4]), np.zeros((50, 2)), 50
    )
    assert traj["states"].shape == (51, 4)
    assert traj["times"][0] == 0.0
    assert math.isclose(traj["times"][-1], 5.0)
    assert np.isfinite(traj["states"]).all()


def test_pipeline_round_trip(tmp_path):
    cfg = tiny_config(tmp_path)

    sim = mk.simulate(cfg)
    assert len(sim["files"]) == 1

    summary = mk.fit(cfg)
    assert len(summary["rms_per_agent"]) == 2
    assert all(np.isfinite(summary["rms_per_agent"]))

    model = mk.Model.load(summary["model_file"])
    assert model.variant == "flat"
    assert model.n_agents == 2
    a, b = model.combined()
    assert a.shape[0] == a.shape[1]
    assert b.shape[0] == a.shape[0]

    psi0 = model.lift_state(0, np.array([0.1, -0.2]))
    psi0 = np.concatenate([psi0, model.lift_state(1, np.array([0.3, 0.05]))])
    rollout = model.predict(psi0, np.zeros((0, b.shape[1])), 10)
    assert rollout.shape == (11, a.shape[0])
    np.testing.assert_allclose(rollout[1], a @ psi0, atol=1e-12)

    metrics = mk.analyze(cfg)
    names = [c["matrix"] for c in metrics["columns"]]
    assert "K_comb" in names

    ctl = mk.control(cfg)
    assert ctl["aggregate"]["convergence_rate"] == 1.0

    rep = mk.report(cfg)
    assert "soft_checks" in rep and "reference" in rep


def test_hier_reduced_model(tmp_path):
    cfg = tiny_config(tmp_path, variant="hier", seed=2)
    cfg.apply({"training": {"n_ic": 500}})
    summary = mk.fit(cfg)
    reduced = mk.Reduced.load(summary["reduced_file"])
    assert reduced.n_agents == 2
    a, b = reduced.combined()
    rollout = reduced.predict(np.zeros(a.shape[0]), np.ones((1, b.shape[1])), 3)
    np.testing.assert_allclose(rollout[1], b @ np.ones(b.shape[1]), atol=1e-12)


def test_matrix_utilities():
    a = np.array([[0.5, 0.0], [0.0, 0.25]])
    assert math.isclose(mk.initial_growth(a), math.log(0.5))
    assert math.isclose(mk.kreiss_bound(a), 1.0, rel_tol=1e-6)

    f = np.array([[0.4, 0.1], [0.0, 0.3]])
    rhs = np.eye(2)
    x = mk.solve_discrete_lyapunov(f, rhs)
    np.testing.assert_allclose(f @ x @ f.T - x, -rhs, atol=1e-12)

    with pytest.raises(mk.Error):
        mk.solve_discrete_lyapunov(np.eye(2), rhs)
