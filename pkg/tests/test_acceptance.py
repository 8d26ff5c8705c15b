"""Acceptance criteria, one test per criterion, each printing a pass/fail
line with its metric and stated tolerance."""

import time
from dataclasses import replace

import numpy as np

from shgspec.config import RunConfig
from shgspec.differentials import (
    solve_sigma,
    verify_negative_normalization,
    verify_normalization,
)
from shgspec.gradients import grad_deltas_fd_report
from shgspec.monodromy import integrate_many, lam_zero, omega
from shgspec.potential import Potential
from shgspec.roots_products import (
    CanonicalRootEvaluator,
    constraint_products,
    sign_tables,
    verify_product_reps,
)
from shgspec.spectrum import count_annulus
from shgspec.verification import ZERO_SAMPLE_LAMBDAS, interpolation_self_test


def _line(name, metric, threshold, passed):
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: metric={metric:.3e} "
          f"tolerance={threshold:.1e}")


def check(name, metric, threshold):
    ok = metric <= threshold
    _line(name, metric, threshold, ok)
    assert ok, f"{name}: {metric:.3e} > {threshold:.3e}"


def test_criterion_1_zero_closed_forms():
    """Delta, chi_D, Delta_dot at v=0 vs closed forms; 20 samples; < 5 s."""
    t0 = time.time()
    res = integrate_many(Potential.zero(), ZERO_SAMPLE_LAMBDAS, order=1, tol=1e-11)
    om = omega(ZERO_SAMPLE_LAMBDAS)
    rel = lambda a, b: np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0))
    metric = max(
        rel(res.Delta, np.cos(om)),
        rel(res.chi_D, np.sin(om)),
        rel(res.Delta_dot, -(1 + 1 / (16 * ZERO_SAMPLE_LAMBDAS**2)) * np.sin(om)),
    )
    runtime = time.time() - t0
    check("criterion 1 (zero closed forms)", metric, 1e-8)
    check("criterion 1 (runtime seconds)", runtime, 5.0)


def test_criterion_2_zero_spectrum(tab0, v_zero):
    errs = []
    for n in range(-8, 9):
        lm, lp = tab0.lam_pm(n)
        errs += [abs(lm - lam_zero(n)), abs(lp - lam_zero(n))]
    errs.append(abs(tab0.lam_dot_star - 0.25j))
    check("criterion 2 (zero spectrum)", max(errs), 1e-9)
    cnt = count_annulus(v_zero, 4, tol=1e-11)
    miss = (
        abs(cnt["chi_p"][0] - 36) + abs(cnt["chi_D"][0] - 18)
    )
    check("criterion 2 (counting 4+8N, 2+4N)", float(miss), 0.0)


def test_criterion_3_reciprocity(tab16, reflected):
    _, tabr, _ = reflected
    errs = []
    for n in range(-6, 7):
        lm, lp = tab16.lam_pm(n)
        lmr, lpr = tabr.lam_pm(-n)
        errs += [
            abs(16 * lp * lmr - 1),
            abs(16 * lm * lpr - 1),
            abs(16 * tab16.mu_n(n) * tabr.mu_n(-n) - 1),
            abs(16 * tab16.lam_dot_n(n) * tabr.lam_dot_n(-n) - 1),
        ]
    check("criterion 3 (reciprocity)", max(errs), 1e-7)


def test_criterion_4_reality_confinement(v_seed, tab16):
    from shgspec.spectrum import delta_sign_check

    worst = 0.0
    for n in range(-16, 17):
        lm, lp = tab16.lam_pm(n)
        worst = max(worst, abs(lm.imag), abs(lp.imag))
        if abs(tab16.gamma(n)) > 1e-9:
            worst = max(worst, lm.real - tab16.mu_n(n).real,
                        tab16.mu_n(n).real - lp.real)
            worst = max(worst, lm.real - tab16.lam_dot_n(n).real,
                        tab16.lam_dot_n(n).real - lp.real)
    check("criterion 4 (reality/interlacing)", worst, 1e-7)
    check("criterion 4 (Delta sign at eigenvalues)",
          delta_sign_check(v_seed, tab16, tol=1e-12), 1e-7)


def test_criterion_5_product_representations(v_seed, tab32):
    trace = []
    for K in (8, 16, 24, 32):
        rep = verify_product_reps(v_seed, tab32, K, tol_ode=1e-11)
        trace.append(max(rep["chi_p"], rep["chi_D"], rep["delta_dot"]))
    check("criterion 5 (product residual at K=32)", trace[-1], 1e-4)
    mono = sum(0 if b < a else 1 for a, b in zip(trace[:-1], trace[1:]))
    check("criterion 5 (monotone in K)", float(mono), 0.0)
    cons = constraint_products(tab32, 32)
    check(
        "criterion 5 (constraint products)",
        max(abs(v - 1) for v in cons.values()),
        1e-4,
    )


def test_criterion_6_canonical_conventions(v_seed, tab0, tab16, reflected):
    ev0 = CanonicalRootEvaluator(tab0, 16)
    sample = np.array([0.7, 1.3 + 0.2j, 5.1], complex)
    metric = float(np.max(np.abs(ev0.chip(sample) + 1j * np.sin(omega(sample)))))
    check("criterion 6 (sqrt_c at v=0)", metric, 1e-7)
    _, tabr, _ = reflected
    ev = CanonicalRootEvaluator(tab16, 16)
    evr = CanonicalRootEvaluator(tabr, 16)
    sym = 0.0
    for lam in (0.83 + 0.1j, 4.4 - 0.3j, 1.7 + 0.6j):
        z = np.array([lam])
        sym = max(sym, abs(ev.chip(z)[0] + ev.chip(-z)[0]))
        sym = max(sym, abs(evr.chip(-1 / (16 * z))[0] - ev.chip(z)[0]))
    check("criterion 6 (oddness/reciprocity)", sym, 1e-7)
    rep = sign_tables(v_seed, tab16, K=16)
    check("criterion 6 (sign tables)", float(len(rep["failures"])), 0.0)


def test_criterion_7_gradients(v_seed, tab16):
    rep = grad_deltas_fd_report(v_seed, tab16, RunConfig())
    check("criterion 7 (FD relative error)", rep["max_rel"], 1e-5)
    check("criterion 7 (FD order >= 1.9)", 1.9 - rep["min_order"], 0.0)
    check("criterion 7 (dDelta at v=0)", rep["zero_delta_norm"], 1e-9)


def test_criterion_8_main_theorem(v_seed, tab16, iso16, reflected):
    worst_iters = 0
    worst_dev = 0.0
    worst_gap = 0.0
    worst_est = 0.0
    for n in (0, 1, 2):
        sol = solve_sigma(tab16, iso16, n, 16, tol=1e-9, max_iter=10)
        worst_iters = max(worst_iters, sol.newton_iters)
        mat, _ = verify_normalization(sol, tab16, iso16, nodes=96)
        for (j, m), val in mat.items():
            if abs(m) <= 10:
                want = 1.0 if (j == 1 and m == n) else 0.0
                worst_dev = max(worst_dev, abs(val - want))
        for k in range(-16, 17):
            gam1 = abs(tab16.gamma2(1, k))
            if k != n:
                lo, hi = tab16.gap2(1, k)
                worst_gap = max(worst_gap, _seg_dist(sol.sigma1_at(k), lo, hi))
                worst_est = max(
                    worst_est,
                    abs(sol.sigma1_at(k) - tab16.tau2(1, k))
                    - 5 * gam1**2 - 1e-8,
                )
            lo, hi = tab16.gap2(2, k)
            worst_gap = max(
                worst_gap, _seg_dist(-1 / (16 * sol.sigma2_at(k)), lo, hi)
            )
            worst_est = max(
                worst_est,
                abs(sol.sigma2_at(k) - tab16.tau2(2, k))
                - 5 * abs(tab16.gamma2(2, k)) ** 2 - 1e-8,
            )
    check("criterion 8 (Newton iterations <= 10)", float(worst_iters), 10.0)
    check("criterion 8 (normalization |m|<=10)", worst_dev, 1e-6)
    check("criterion 8 (roots in gaps)", worst_gap, 1e-8)
    check("criterion 8 (|sigma-tau| <= 5 gamma^2)", worst_est, 0.0)
    vr, tabr, isor = reflected
    solr = solve_sigma(tabr, isor, 1, 16, tol=1e-9, max_iter=10)
    _, devm = verify_negative_normalization(
        solr, tabr, isor, tab16, iso16, nodes=96
    )
    check("criterion 8 (psi_{-1} reflected normalization)", devm, 1e-6)


def _seg_dist(z, a, b):
    if a == b:
        return abs(z - a)
    t = np.clip(((z - a) / (b - a)).real, 0.0, 1.0)
    return abs(z - (a + t * (b - a)))


def test_criterion_9_zero_potential_solver(tab0, iso0):
    sol = solve_sigma(tab0, iso0, 1, 8, tol=1e-9)
    err = max(
        max(abs(sol.sigma1_at(k) - tab0.tau2(1, k)) for k in range(-8, 9)),
        max(abs(sol.sigma2_at(k) - tab0.tau2(2, k)) for k in range(-8, 9)),
    )
    check("criterion 9 (sigma = tau at v=0)", err, 1e-12)
    check("criterion 9 (residual)", sol.residual_norm, 1e-9)
    check("criterion 9 (Newton steps)", float(sol.newton_iters), 0.0)


def test_criterion_10_interpolation(tab0):
    metric = interpolation_self_test(tab0, K=24, seed=0, n_points=5)
    check("criterion 10 (interpolation self-test)", metric, 1e-5)


def test_criterion_11_negative_control(v_seed, tab16, iso16):
    sol = solve_sigma(tab16, iso16, 1, 16, tol=1e-9)
    _, dev_clean = verify_normalization(sol, tab16, iso16, nodes=96)
    bad = sol.sigma1.copy()
    k0 = 2
    gam = tab16.gamma2(1, k0)
    if abs(gam) < 1e-9:
        gam = 0.05
    bad[k0 + sol.K] = tab16.lam2(1, k0, +1) + 0.5 * abs(gam)
    sol_bad = replace(sol, sigma1=bad)
    _, dev_bad = verify_normalization(sol_bad, tab16, iso16, nodes=96)
    detected = dev_clean <= 1e-6 < dev_bad
    _line("criterion 11 (negative control detected)", dev_bad, 1e-6, detected)
    assert detected, (dev_clean, dev_bad)
