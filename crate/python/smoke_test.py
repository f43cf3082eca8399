"""Smoke test for the bulkgrow extension module.

Build and install with

    pip install --no-build-isolation ./crates/py

then run ``python python/smoke_test.py``.
"""

import json
import math
import tempfile

import bulkgrow


def main():
    mesh = bulkgrow.Mesh.disk(1.5, 0.45)
    print(mesh)
    assert abs(mesh.bulk_measure() - math.pi * 1.5**2) < 1e-2

    mats = bulkgrow.Matrices(mesh)
    ones = [1.0] * mesh.n_boundary
    assert abs(mats.norm_m(ones, surface=True) ** 2 - mesh.boundary_measure()) < 1e-10

    delta, gamma = bulkgrow.bdf(3)
    assert abs(sum(delta)) < 1e-14 and abs(sum(gamma) - 1.0) < 1e-14

    oracle = bulkgrow.RadialOracle(1, 1.5, 1.5, 1.0, 1.0)
    config = bulkgrow.Config.from_json(json.dumps({
        "model": {"alpha": 1, "beta": 1, "mu": 0, "Q": "const:1.5"},
        "geometry": {"kind": "disk", "radii": [1.5], "h": 0.45},
        "discretization": {"k": 2, "q": 2, "tau": 0.01, "T": 0.1},
        "run": {"kind": "simulate", "snapshots": 1},
    }))
    with tempfile.TemporaryDirectory() as out:
        result = bulkgrow.simulate(config, out)
    diag = result["diagnostics"]
    drift = max(abs(r - e) for r, e in zip(diag["mean_radius"], diag["exact_radius"]))
    print(f"{result['steps']} steps, radius {diag['mean_radius'][-1]:.6f} "
          f"(exact {oracle.radius(0.1):.6f}), max drift {drift:.2e}")
    assert drift < 1e-3

    ratios = bulkgrow.stability("disk", "robin", levels=3, samples=10)
    print("robin ratios", ["%.3f" % r for r in ratios["max_ratio"]])

    try:
        bulkgrow.Config.from_json("{}")
    except ValueError as e:
        print("rejected empty config:", str(e).splitlines()[0])
    else:
        raise AssertionError("empty config accepted")
    print("ok")


if __name__ == "__main__":
    main()
