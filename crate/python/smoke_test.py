# SPDX-License-Identifier: Apache-2.0
"""Smoke test for the pymodgeo extension module.

Build and install first, e.g.
    pip install maturin
    maturin develop --release -m crates/py/Cargo.toml
then run
    python3 python/smoke_test.py
"""

import math

import pymodgeo as mg


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAILED: {what}")
    print(f"ok: {what}")


def raises(exc, fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except exc:
        return True
    return False


def main():
    check(mg.is_discriminant(5) and not mg.is_discriminant(7), "is_discriminant")

    g = mg.class_group(40)
    check(g["order"] == 2 and len(g["table"]) == 2, "class group of 40 has order 2")
    check(mg.fundamental_pell(40) == (38, 6), "Pell solution for 40")
    reg, period, minus_one = mg.regulator(40)
    check(abs(reg - math.log(19 + 6 * math.sqrt(10))) < 1e-12, "regulator of 40")
    check(period == 2 * reg and minus_one, "period and norm -1 unit")
    t, u = mg.fundamental_pell(1021)
    check(t * t - 1021 * u * u == 4, "large Pell solution is exact")

    f = mg.QuadForm(1, 6, -1)
    check(f.is_reduced() and len(f.cycle()) == 2, "reduced cycle of (1, 6, -1)")
    check(mg.principal_form(40).compose(f).reduce() in f.cycle(), "composition with identity")
    check(raises(ValueError, mg.QuadForm, 1, 1, 1), "negative discriminant rejected")

    cusp = mg.TestFunction("cusp:2")
    check(abs(cusp.exact_integral - 3 / (2 * math.pi)) < 1e-15, "cusp integral")
    check(cusp.eval(0.1, 3.0, 0.0) == 1.0 and cusp.eval(0.1, 1.5, 0.0) == 0.0, "cusp eval")

    full = mg.GeodesicCollection(40)
    check(len(full) == 2 and abs(full.total_length - 14.547) < 1e-3, "G_40")
    half = full.subcollection(classes=[1])
    rep = half.discrepancy(cusp, step=1e-2)
    check(rep["n_members"] == 1 and rep["phi"] > 1.0, "discrepancy report")
    check(raises(IndexError, full.subcollection, classes=[5]), "bad class index rejected")

    ds = mg.fundamental_log_spaced(1000, 100000, 8)
    sweep = mg.duke_sweep(ds, cusp)
    check(len(sweep["reports"]) == 8 and "gamma_hat" in sweep, "duke sweep")

    corr = mg.mixing_correlation(cusp, [0.0, 2.0, 8.0], n_samples=20000, seed=1)
    vals = [abs(e["value"]) for e in corr["estimates"]]
    check(vals[0] > vals[1] and vals[0] > vals[2], "correlation decays from t = 0")

    adv = mg.adversarial_experiment(1, 5, n_samples=2000)
    check(adv["rows"][0]["tube_mass"] == 1.0, "orbit lies in its own tube")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
