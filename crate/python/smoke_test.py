"""Smoke test for the hopf_twistor extension module.

Build and install first:
    cd crates/py && maturin develop --release
"""

import json
import math
import pathlib

import hopf_twistor as ht

DATA = pathlib.Path(__file__).resolve().parent.parent / "data" / "cko"


def check(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name} {detail}".rstrip())
    return ok


def main():
    results = []

    kappa, res = ht.curve_curvature("zero", 0.7, 0.3)
    results.append(check("horocycle curvature", abs(kappa - 2.0) < 1e-4 and res < 1e-4, f"kappa={kappa:.6f}"))

    p = ht.Patch.example("tube-rhn", 2, 0.3)
    report = json.loads(p.verify(density=2, cap=8))
    mu = report["mu"]
    results.append(check("tube-rhn mu", abs(abs(mu) - 2 * math.tanh(0.6)) < 1e-4, f"mu={mu:.6f}"))

    a = p.shape_operator(p.center())
    results.append(check("shape operator is square", len(a) == 3 and all(len(r) == 3 for r in a)))

    q = ht.Patch.cko(0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
    report = json.loads(q.verify(density=2, cap=8))
    results.append(check("cko mu", abs(report["mu"] - 2.0) < 1e-4, repr(q)))

    rho = ht.predicted_rho(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0)
    results.append(check("predicted rho", abs(rho - 0.6) < 1e-12, f"rho={rho:.6f}"))

    form = (DATA / "form_n3.json").read_text()
    results.append(check("maurer-cartan residual", ht.maurer_cartan_residual(form) <= 1e-12))

    x = [[0j, 1 + 0j, 0j], [1 + 0j, 0j, 0j], [0j, 0j, 1j]]
    g = ht.matrix_exp(x, 0.5)
    results.append(check("matrix exp", abs(g[0][0].real - math.cosh(0.5)) < 1e-12))

    env = json.loads(ht.run(json.dumps({"command": "verify-curves", "n": 2, "s": "plus", "r": 0.5})))
    results.append(check("run verify-curves", env["certified"] and env["artifact_version"] == ht.ARTIFACT_VERSION))

    passed = sum(results)
    print(f"smoke: {passed} of {len(results)} passed")
    return 0 if passed == len(results) else 1


if __name__ == "__main__":
    raise SystemExit(main())
