"""Acceptance criteria 1-10.

Each test prints one ``criterion N: PASS|FAIL`` line (also collected into
the pytest terminal summary by ``conftest.py``) and then asserts the
criterion at its stated tolerance.  Run on its own with

    pytest tests/test_acceptance.py -v
"""

import json
import math
import random
import time
from fractions import Fraction

import numpy as np
from cknlab.blockgeom import BlockDecomposition as B, ExponentSet, holder_exponents, sigma_exponents
from cknlab.cli import main
from cknlab.field import Field, ckn_functional, grad_norm, hardy_functional, write_field
from cknlab.grid import build_grid, integrate
from cknlab.rearrange import check_hardy_littlewood, ps_slack_study
from cknlab.solve import assemble_forms, convergence_study, lemma2_constant_sweep, loglog_slope, min_eig
from cknlab.special import counterexample_report, supersolution_certificate
from cknlab.sturm import AngularProblem, angular_best_constant

RESULTS: dict[int, str] = {}


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)


def smooth_field(grid, rng):
    """Random smooth field in log coordinates, zero on the outer layers."""
    coef = rng.normal(size=(4, 4))
    c = rng.uniform(-1.5, 1.5, size=2)
    w = rng.uniform(0.5, 2.0, size=2)

    def fn(a, b):
        x, y = (np.log(a) - c[0]) / w[0], (np.log(b) - c[1]) / w[1]
        poly = sum(coef[i, j] * x**i * y**j for i in range(4) for j in range(4))
        return poly * np.exp(-(x**2) - y**2)

    return Field.from_function(grid, fn, dirichlet=True)


def test_criterion_01_exponent_identities():
    t0 = time.perf_counter()
    rng = random.Random(1)
    bad = []
    for _ in range(50):
        m = rng.randint(3, 6)
        big = rng.randint(3, m)
        g = [rng.randint(2, 9) for _ in range(big)] + [1] * (m - big)
        rng.shuffle(g)
        d = B(tuple(g))
        s = sum(sigma_exponents(d))
        ps, _ = holder_exponents(d)
        h = sum(Fraction(1) / p for p in ps)
        if s != 1 or h != 1:
            bad.append((g, s, h))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    report(1, ok, f"50 random decompositions, failures={len(bad)}, {dt:.3f}s")
    assert ok, bad


def test_criterion_02_radial_hardy_oracle():
    t0 = time.perf_counter()
    grid = build_grid(B((4,)), 1e-10, 1e10, 257)
    est = convergence_study(lambda g: min_eig(assemble_forms(g, "radial")), grid, 3)
    lam = est[-1].quotient
    dt = time.perf_counter() - t0
    ok = abs(lam - 1.0) <= 0.02 and dt < 10
    report(2, ok, f"lambda after two refinements = {lam:.5f} (target 1 +- 2%), "
           f"levels {[round(e.quotient, 5) for e in est]}, {dt:.2f}s")
    assert ok


def test_criterion_03_flagship_hardy():
    t0 = time.perf_counter()
    grid = build_grid(B((2, 2)), 1e-2, 1e2, 65)
    est = convergence_study(lambda g: min_eig(assemble_forms(g, "hardy")), grid, 3)
    c_hat = est[-1].value
    stable = abs(est[-1].value - est[0].value) / est[-1].value
    fine = build_grid(B((2, 2)), 1e-2, 1e2, est[-1].level)
    rng = np.random.default_rng(2024)
    worst = -math.inf
    for _ in range(20):
        f = smooth_field(fine, rng)
        worst = max(worst, hardy_functional(f, 2) / (c_hat * grad_norm(f, 2)) - 1.0)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and stable < 0.01 and dt < 60
    report(3, ok, f"C_hat = {c_hat:.5f}, max rel excess = {worst:.3e}, "
           f"drift over two refinements = {stable:.2%}, {dt:.2f}s")
    assert ok


ANGULAR_ALPHAS = [10.0, 14.7, 21.5, 31.6, 46.4, 68.1, 100.0]


def test_criterion_04_angular_scaling():
    t0 = time.perf_counter()
    slopes = {}
    for g in ((2, 2), (3, 2)):
        lam = [angular_best_constant(AngularProblem(*g, a)).value for a in ANGULAR_ALPHAS]
        slopes[g] = loglog_slope(ANGULAR_ALPHAS, lam)
    dt = time.perf_counter() - t0
    ok = all(abs(s - 2.0) <= 0.1 for s in slopes.values()) and dt < 30
    report(4, ok, "slopes " + ", ".join(f"{g}: {s:.3f}" for g, s in slopes.items())
           + f" (target 2 +- 0.1), {dt:.2f}s")
    assert ok


def test_criterion_05_lemma2_scaling():
    t0 = time.perf_counter()
    grid = build_grid(B((2, 2)), math.exp(-1.5), math.exp(1.5), 257)
    sweep = lemma2_constant_sweep(grid, 2.0, [8.0, 18.0, 38.0, 68.0, 98.0])
    dt = time.perf_counter() - t0
    ok = abs(sweep.slope + 2.0) <= 0.2 and all(e.value > 0 for e in sweep.estimates) and dt < 60
    report(5, ok, f"slope = {sweep.slope:.3f} (target -2 +- 0.2), {dt:.2f}s")
    assert ok


def test_criterion_06_counterexample():
    t0 = time.perf_counter()
    rep = counterexample_report((8, 16, 32, 64))
    dt = time.perf_counter() - t0
    ok1 = abs(rep.slope_R1 + 3.5) <= 0.3
    ok2 = abs(rep.slope_R2 + 0.5) <= 0.3
    ok3 = rep.S_spread < 0.10
    ok = ok1 and ok2 and ok3 and dt < 30
    report(6, ok, f"slope R1 = {rep.slope_R1:.3f} (target -3.5 +- 0.3) {'ok' if ok1 else 'MISS'}; "
           f"slope R2 = {rep.slope_R2:.3f} {'ok' if ok2 else 'MISS'}; "
           f"S spread = {rep.S_spread:.2%} {'ok' if ok3 else 'MISS'}; {dt:.2f}s")
    assert ok


def test_criterion_07_supersolution():
    t0 = time.perf_counter()
    alphas = [3.0, 5.0, 9.0, 17.0]
    cs = [supersolution_certificate(a) for a in alphas]
    slope = loglog_slope([a - 1 for a in alphas], cs)
    dt = time.perf_counter() - t0
    ok = all(c > 0 for c in cs) and abs(slope - 2.0) <= 0.2 and dt < 30
    report(7, ok, f"C* = {[round(c, 4) for c in cs]}, slope = {slope:.3f} (target 2 +- 0.2), {dt:.2f}s")
    assert ok


def test_criterion_08_rearrangement():
    t0 = time.perf_counter()
    grid = build_grid(B((2, 2)), 0.0, 3.0, 32, spacing="volume")
    rng = np.random.default_rng(8)
    worst = -math.inf
    for _ in range(100):
        f = Field(grid, rng.normal(size=grid.shape))
        before, after = check_hardy_littlewood(f, 2.0)
        worst = max(worst, (before - after) / after)
    study = ps_slack_study(
        lambda a, b: np.exp(-4 * (a - 1) ** 2 - 3 * (b - 1.2) ** 2),
        build_grid(B((2, 2)), 0.0, 3.0, 16, spacing="volume"),
        q=2.0,
        levels=6,
    )
    decreasing = all(b < a for a, b in zip(study.slack, study.slack[1:]))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and decreasing and study.order >= 1.0 and dt < 30
    report(8, ok, f"HL worst rel excess = {worst:.2e}; PS slack {[f'{s:.2e}' for s in study.slack]}, "
           f"order = {study.order:.3f} (target >= 1), {dt:.2f}s")
    assert ok


def test_criterion_09_ckn_endpoints():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = 0.0
    for gam in ((2, 2), (3, 2), (2, 2, 3)):
        grid = build_grid(B(gam), 1e-2, 1e2, 17 if len(gam) == 2 else 9)
        for q in (1.0, 1.5, 2.0, 3.0):
            f = Field(grid, rng.normal(size=grid.shape))
            h = hardy_functional(f, q)
            worst = max(worst, abs(ckn_functional(f, q, q) - h) / h)
            qs = ExponentSet(grid.decomp, q).q_star
            sob = integrate(grid, np.abs(f.values) ** float(qs)) ** (q / float(qs))
            worst = max(worst, abs(ckn_functional(f, qs, q) - sob) / sob)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 5
    report(9, ok, f"max rel deviation = {worst:.2e}, {dt:.3f}s")
    assert ok


def test_criterion_10_determinism(tmp_path, capsys):
    g = build_grid(B((2, 2)), 0.1, 3.0, 9)
    field_file = tmp_path / "u.csv"
    write_field(field_file, Field.from_function(g, lambda a, b: np.exp(-a * a - b * b)))
    runs = {
        "constant": ["--nodes", "17"],
        "verify": [str(field_file)],
        "counterexample": [],
        "supersolution": [],
        "rearrange": [str(field_file)],
        "angular": [],
    }
    differ = []
    for cmd, extra in runs.items():
        outs = []
        for k in range(2):
            out = tmp_path / f"{cmd}{k}"
            assert main([cmd, *extra, "--out", str(out)]) == 0
            outs.append(out)
        for suffix in (".json", ".csv"):
            a = (outs[0] / f"{cmd}{suffix}").read_bytes()
            b = (outs[1] / f"{cmd}{suffix}").read_bytes()
            if a != b:
                differ.append(cmd + suffix)
        json.loads((outs[0] / f"{cmd}.json").read_text())
    capsys.readouterr()  # drop the echoed reports
    ok = not differ
    report(10, ok, f"{len(runs)} commands run twice, differing reports: {differ or 'none'}")
    assert ok
