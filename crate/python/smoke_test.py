"""Smoke test of the chns Python bindings.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import tempfile

import numpy as np

import chns

SMALL = """
[domain]
Nx = 16
Ny = 16

[params]
h = channel:2

[scheme]
dt = 1e-3

[run]
T = 0.05
snapshot_cadence = 10
mean_phi = 0.3
"""


def main():
    cfg = chns.Config(SMALL)
    assert cfg.grid == (16, 16)
    assert chns.Config(cfg.to_ini()) == cfg
    try:
        chns.Config("[params]\nlamda = 1\n")
        raise AssertionError("misspelled key accepted")
    except chns.ChnsError as e:
        assert "unknown key" in str(e)

    sim = chns.Simulation(cfg)
    j0 = sim.energy()
    sim.step(50)
    assert abs(sim.t - 0.05) < 1e-12
    phi = sim.phi()
    ux, uy = sim.velocity()
    lower, upper = sim.phi_wall()
    assert phi.shape == (16, 16) and ux.shape == (16, 16) and lower.shape == (16,)
    assert sim.mass_drift() < 1e-12
    assert sim.max_divergence() < 1e-10
    ledger = sim.ledger()
    assert len(ledger) == 50 and np.isfinite(ledger[-1]["j"])
    print(f"simulation: J {j0:.4e} -> {sim.energy():.4e}, mean phi {sim.mean_phi():.6f}")

    with tempfile.TemporaryDirectory() as out:
        summary = chns.run(cfg, out)
        assert summary["steps"] == 50 and summary["mass_ok"] and summary["divergence_ok"]
        snap = chns.read_snapshot(out, 5)
        assert np.array_equal(snap["phi"], phi), "run output differs from the interactive run"
    print(f"run: {summary['steps']} steps, drift {summary['max_mass_drift']:.1e}")

    hyp = chns.check_hypotheses(chns.Config())
    assert hyp["satisfied"]
    bad = chns.check_hypotheses(chns.Config("[nonlinearity]\npoly_f = 0, 0, 1\n"))
    assert not bad["satisfied"] and bad["witnesses"]
    print(f"hypotheses: default satisfied, s^2 witness: {bad['witnesses'][0]['condition']}")

    ops = chns.verify_operators(chns.Config())
    assert ops["passed"], ops["min_order"]
    print(f"operators: min order {ops['min_order']:.3f}")

    g = chns.gronwall(cfg, 1e-8)
    assert g["report"]["separation_ok"]

    angles = 2 * np.pi * np.arange(300) / 300
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    dim = chns.fractal_dimension(d, seed=1)
    assert abs(dim["slope"] - 1.0) < 0.3
    print(f"circle dimension {dim['slope']:.3f} [{dim['ci_low']:.3f}, {dim['ci_high']:.3f}]")
    print("smoke test passed")


if __name__ == "__main__":
    main()
