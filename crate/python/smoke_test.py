"""Smoke test for the advdrift_py extension module.

Build and install the module first, e.g.

    pip install maturin
    cd crates/python && maturin build --release -o dist && pip install dist/*.whl

then run ``python python/smoke_test.py``.
"""

import json
import os
import tempfile

import advdrift_py as ad


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    train, test = ad.synth_gaussian(600, 6, 2.0, seed=3)
    assert len(train) == 480 and len(test) == 120, (len(train), len(test))
    assert train.feature_names == [f"x{j}" for j in range(6)]

    model, history = ad.train(train, epochs=5, seed=0)
    assert len(history) == 5
    assert history[-1]["loss"] < history[0]["loss"]
    clean = model.accuracy(test)
    assert clean > 0.8, clean

    probs = model.predict_proba(test.x[:4])
    assert all(close(sum(p), 1.0, 1e-12) for p in probs)

    # Attacks stay inside the L-infinity ball.
    for kind in ("fgsm", "pgd"):
        adv = ad.attack(model, test.x, test.y, 0.1, attack=kind)
        worst = max(abs(a - b) for r, s in zip(adv, test.x) for a, b in zip(r, s))
        assert worst <= 0.1 + 1e-12, (kind, worst)

    curve = ad.sweep(model, test, attack="fgsm")
    assert len(curve["epsilons"]) == 10 and curve["accuracies"][0] == clean
    assert close(curve["ri"], ad.robustness_index(curve["epsilons"], curve["accuracies"]), 1e-15)
    assert close(ad.robustness_index([0.0, 0.3], [1.0, 0.0]), 0.5, 1e-12)

    # Exact Shapley values are efficient.
    bg = train.x[:16]
    x = test.x[0]
    phi, base = ad.shapley(model, x, bg)
    fx = model.predict_proba([x])[0][1]
    assert close(sum(phi) + base, fx, 1e-9)
    approx, _ = ad.shapley(model, x, bg, permutations=320, seed=1)
    assert max(abs(a - b) for a, b in zip(phi, approx)) < 0.05

    drift0 = ad.attribution_drift(model, test, bg, epsilon=0.0, n_samples=20, permutations=16)
    assert drift0 == [0.0] * 6
    drift = ad.attribution_drift(model, test, bg, epsilon=0.1, n_samples=20, permutations=16)
    assert all(v >= 0 for v in drift) and any(v > 0 for v in drift)

    sens = ad.feature_sensitivity(model, test, n_samples=64)
    assert len(sens) == 6 and all(v >= 0 for v in sens)

    adv_model, _ = ad.adv_train(train, epochs=5, seed=0)
    assert adv_model.accuracy(test) > 0.8

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "m.json")
        model.save(path)
        again = ad.Model.load(path)
        assert again.predict_proba(test.x[:3]) == model.predict_proba(test.x[:3])

        cfg = """
seeds = [0]
[synthetic]
n = 300
d = 4
separation = 2.0
seed = 1
[train]
epochs = 3
[attack]
eps_steps = 4
[explain]
n_samples = 16
background = 8
permutations = 16
"""
        report = json.loads(ad.run_pipeline(cfg, out_dir=os.path.join(tmp, "out")))
        assert report["schema_version"] == "1.0"
        assert len(report["mean_curves"]) == 2
        assert os.path.exists(os.path.join(tmp, "out", "report.json"))

    try:
        ad.robustness_index([0.0], [])
    except ValueError:
        pass
    else:
        raise AssertionError("mismatched curve accepted")

    checks = ad.selftest()
    assert all(passed for _, passed, _ in checks), checks
    print(f"smoke test passed: clean accuracy {clean:.3f}, RI_FGSM {curve['ri']:.3f}, {len(checks)} self-checks")


if __name__ == "__main__":
    main()
