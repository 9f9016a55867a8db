"""Smoke test for the parareg_py extension module."""

import math
import sys
import tempfile
from pathlib import Path

import parareg_py as pr

ROOT = Path(__file__).resolve().parent.parent


def main():
    g = pr.Grid(1, 1, 32, 32, 0.25, 1.0)
    assert g.points() == 32 * 32, g

    u = pr.Field.band_limited(g, "scalar", 6, 6, seed=1)
    dt = pr.time_derivative(u)
    err = (pr.factored_time_derivative(u) - dt).norm_l2() / dt.norm_l2()
    assert err < 1e-12, err

    a = pr.Coefficients.generate(g, "time_checkerboard", seed=42, cell_t=0.03125)
    assert a.lam == 1.0 and abs(a.sup_norm - 5.0) < 1e-12
    assert a.verify_garding(trials=50)["lambda_est"] >= 1.0 - 1e-9
    assert a.coercivity_margin(u, None) >= 0.0

    f = pr.Field.band_limited(g, "scalar", 4, 4, seed=2)
    v, report = pr.solve(a, f, tol=1e-8)
    assert report["dual_residual"] <= 1e-8, report
    assert pr.energy_identity_defect(v) < 1e-12

    e = pr.solve_exponents("6/5", "2.2", 1)
    assert e["alpha"] == "2/5" and e["q_alpha"] == "55/52", e
    assert math.isclose(55 / 52, 1.0576923076923077)

    try:
        pr.solve_exponents("6/5", "2", 1)
    except pr.PararegError as exc:
        assert "infeasible" in str(exc) or "exponent" in str(exc), exc
    else:
        raise AssertionError("p = 2 accepted")

    with tempfile.TemporaryDirectory() as out:
        m = pr.run_experiment("rh-u", str(ROOT / "configs" / "checkerboard64.toml"), out, 5)
        names = [x["path"] for x in m["artifacts"]]
        assert "rh_u.csv" in names, names

    print("parareg_py smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
