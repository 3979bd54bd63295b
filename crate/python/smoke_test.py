"""Smoke test for the sgqgan_py extension.

Build and install first:  maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/*.whl
Then:  python python/smoke_test.py
"""

import json
import math
import tempfile

import sgqgan_py as sg


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    h = sg.PureState([1, 0])
    d = sg.PureState.parse("1, 1")
    assert close(sg.overlap(h, d), 0.5)
    assert close(sg.root_fidelity(h, h), 1.0)
    assert sg.bloch_coords(h) == (0.0, 0.0, 1.0)
    t5 = sg.PureState.parse("psi_t5")
    assert t5.dim == 2 and close(sum(abs(a) ** 2 for a in t5.amplitudes), 1.0)
    try:
        sg.PureState([0, 0])
    except ValueError:
        pass
    else:
        raise AssertionError("zero vector accepted")

    # Half-wave plate at 22.5 degrees turns H into D.
    assert close(sg.overlap(sg.hwp(math.pi / 8).apply(h), d), 1.0)
    assert close(sg.coincidence_prob(1.0), 0.0)
    assert close(sg.coincidence_prob_multiphase([1.0], 1.0, [math.pi], [0.0]), 1.0)

    out = sg.learn_state(sg.PureState.parse("psi_t2"), iterations=20, trials=20, seed=1)
    assert len(out["mean"]) == 20 and out["mean"][-1] > 0.99, out["mean"][-1]

    ph = sg.estimate_phases(10, iterations=600, trials=5)
    assert ph["mean"][-1] > 0.98, ph["mean"][-1]

    ch = sg.characterize(sg.JonesUnitary.from_waveplates("hwp:22.5,qwp:45"))
    assert ch["process_fidelity"] > 0.99, ch["process_fidelity"]
    assert len(json.loads(ch["chi"])["chi"]) == 16

    with tempfile.TemporaryDirectory() as tmp:
        cfg = {"command": "learn-state", "target": "psi_t3", "trials": 5, "iterations": 10}
        s = sg.run_config(json.dumps(cfg), output=f"{tmp}/run")
        assert any(f.endswith(".manifest.json") for f in s["files"])
        try:
            sg.run_config(json.dumps({**cfg, "iterations": 0}))
        except ValueError as e:
            assert "$.iterations" in str(e)
        else:
            raise AssertionError("bad config accepted")

    print("sgqgan_py smoke test passed")


if __name__ == "__main__":
    main()
