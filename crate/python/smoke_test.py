"""Smoke test for the loggas_py extension.

Build and run:
    cargo build --release -p loggas-python --features extension-module
    cp target/release/libloggas_py.so python/loggas_py.so
    python3 python/smoke_test.py
"""
import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import loggas_py as lg  # noqa: E402


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    semi = lg.EquilibriumDensity.nonconfining(0.0)
    close(semi.half_width, 2.0, 1e-14)
    close(semi.normalization(), 1.0, 1e-12)
    close(semi.density(0.0), 1.0 / math.pi, 1e-12)
    for x in (-1.5, -0.3, 0.7, 1.9):
        close(semi.hilbert(x), x / 2, 1e-9)
    close(semi.entropy(), 0.75, 1e-6)

    pts = semi.sample(400)
    assert len(pts) == 400 and pts == sorted(pts)
    close(pts[0], -pts[-1], 0.0)
    harmonic = lg.Potential.quartic_nonconfining(0.0)
    assert lg.fisher(pts, harmonic) < 1e-3
    close(sum(lg.hilbert(pts)), 0.0, 1e-9)
    close(lg.w2(pts, pts), 0.0, 0.0)
    close(lg.second_moment(pts), 1.0, 1e-2)
    assert semi.w2(pts) < 1e-2

    v = lg.Potential.quartic_confining(-0.001)
    close(v.derivative(1.0), 1.0 - 0.001, 1e-15)
    assert v.to_dict()["kind"] == "quartic_confining"

    cfg = {
        "n": 100,
        "potential": {"kind": "quartic_confining", "c": -0.001},
        "init": {"kind": "uniform", "half_width": 1.5},
        "t_end": 3.0,
        "snapshot_count": 6,
        "verify": {"hwi_pairs": 8},
    }
    constants = lg.constants(json.dumps(cfg))
    assert constants["certified"]
    close(constants["rate_2lambda"], 0.0022360, 1e-6)

    traj = lg.simulate(json.dumps(cfg))
    assert not traj.aborted and len(traj) > 10
    series = traj.series()
    assert series["w2"][-1] < series["w2"][0]
    assert all(b <= a + 1e-12 for a, b in zip(series["entropy"], series["entropy"][1:]))
    assert len(traj.snapshots()) == 7

    report = lg.verify(traj)
    assert report["passed"], report

    with tempfile.TemporaryDirectory() as d:
        traj.write(d)
        assert sorted(f for f in os.listdir(d) if not f.startswith("snapshot")) == ["meta.json", "series.csv"]
        again = lg.Trajectory.read(d)
        assert again.series()["w2"] == series["w2"]

    try:
        lg.simulate(json.dumps({**cfg, "n": 1}))
    except ValueError:
        pass
    else:
        raise AssertionError("n = 1 should be rejected")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
