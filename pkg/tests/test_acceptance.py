"""Acceptance suite: one test per criterion, one printed line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
Closed-form oracles pin every tolerance; Monte Carlo checks use frozen
seeds, so reruns are deterministic.
"""

import json
import math

import mpmath as mp
import numpy as np
import sympy as sp

from qcdsim.chaos import (
    ChaosCoefficients,
    _unit_iterated_terminals,
    norm_identity,
    stroock_coeff,
    stroock_coeff_general,
)
from qcdsim.clark_ocone import (
    integrand_com,
    reconstruct,
    reconstruct_com,
    verify_ensemble,
)
from qcdsim.cli import dispatch
from qcdsim.detfuncs import DeterministicFn
from qcdsim.grid_paths import (
    SamplePath,
    brownian_path,
    make_uniform_grid,
    shift_path,
    simulate_brownian,
)
from qcdsim.heat_kernel import (
    density_dx,
    heat_equation_residual,
    hermite_form,
    normal_cdf,
)
from qcdsim.hedging import (
    MarketSpec,
    delta_digital,
    hedge_report,
    initial_capital,
    simulate_stock,
)
from qcdsim.ito_girsanov import cond_exp_deriv, cond_exp_heat
from qcdsim.payoffs import PayoffSpec
from qcdsim.quadratic_covariation import (
    QcdEstimatorConfig,
    QcovPath,
    qcd_smoothed_from_qcov,
    qcd_strong,
    qcov,
)

PHI_MINUS_HALF = 0.3085375387259869  # Phi(-0.5), mpmath oracle
PHI_MINUS_ONE = 0.15865525393145707  # Phi(-1), mpmath oracle
PARTIAL_40_AT_MONEY = 0.4798812265934342  # norm-identity partial sum, series oracle


def _report(name, ok, detail=""):
    print(f"\n[acceptance] {name}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"{name}: {detail}"


def test_c01_qcd_ground_truth():
    grid = make_uniform_grid(1.0, 2 ** 14)
    cfg = QcdEstimatorConfig(window=0.05, half_width=64)
    drift = SamplePath(grid, DeterministicFn.linear(0.0, 1.0).antiderivative(grid.nodes))
    ests, drifts = [], []
    for seed in range(100):
        w = brownian_path(grid, seed=seed)
        ests.append(qcd_strong(w, w, 0.5, cfg))
        drifts.append(qcd_strong(drift, w, 0.5, cfg))
    med_w = float(np.median(ests))
    med_d = float(np.median(np.abs(drifts)))
    ok = abs(med_w - 1.0) < 0.15 and med_d < 0.05
    _report(
        "criterion 1 (strong QCD ground truth)",
        ok,
        f"median qcd(W,W)={med_w:.4f} (|err|<0.15), median |qcd(drift,W)|={med_d:.2e} (<0.05)",
    )


def test_c02_smoothed_branch_analytic():
    grid = make_uniform_grid(1.0, 2 ** 10)
    identity = QcovPath(grid, grid.nodes.copy())
    err = abs(qcd_smoothed_from_qcov(identity, 0.0, 0.1) - 1.0)
    _report(
        "criterion 2 (smoothed branch at t=0, analytic kernel)",
        err < 1e-12,
        f"|estimate - 1| = {err:.2e} (<1e-12)",
    )


def test_c03_girsanov_invariance():
    # window k = 256: the criterion does not pin k, and the default k = 64
    # leaves the estimator noise term (which scales like sup|lam| sqrt(dt/2k))
    # above the stated C = 10 bound; see the quadratic_covariation module
    # notes for the bias/variance accounting.
    grid = make_uniform_grid(1.0, 2 ** 12)
    k = 256
    n = grid.step_count
    span = 2.0 * k * grid.dt
    worst = []
    for lam in (DeterministicFn.const(0.5), DeterministicFn.linear(0.0, 1.0)):
        devs = []
        for seed in range(100):
            w = brownian_path(grid, seed=seed)
            w_tilde = shift_path(w, lam)
            q_w = qcov(w, w).values
            q_t = qcov(w, w_tilde).values
            est_w = (q_w[2 * k :] - q_w[: n + 1 - 2 * k]) / span
            est_t = (q_t[2 * k :] - q_t[: n + 1 - 2 * k]) / span
            devs.append(np.max(np.abs(est_w - est_t)))
        bound = 10.0 * grid.dt * lam.sup_abs(1.0)
        worst.append((lam.tag(), float(np.median(devs)), bound))
    ok = all(dev <= bound for _, dev, bound in worst)
    detail = "; ".join(f"{tag}: median max-dev {dev:.2e} <= {b:.2e}" for tag, dev, b in worst)
    _report("criterion 3 (Girsanov invariance of QCD)", ok, detail)


def test_c04_clark_ocone_reconstruction():
    grid12 = make_uniform_grid(1.0, 2 ** 12)
    linear = PayoffSpec.polynomial([0.0, 1.0])
    ens = simulate_brownian(grid12, 1000, seed=41)
    l2_linear = verify_ensemble(linear, ens).l2_error

    square = PayoffSpec.polynomial([0.0, 0.0, 1.0])
    ens_big = simulate_brownian(grid12, 10 ** 4, seed=42)
    l2_square = verify_ensemble(square, ens_big).l2_error
    del ens_big

    indicator = PayoffSpec.indicator(0.5)
    medians = []
    for steps in (2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14):
        grid = make_uniform_grid(1.0, steps)
        l2 = [
            verify_ensemble(indicator, simulate_brownian(grid, 64, seed=seed)).l2_error
            for seed in range(100)
        ]
        medians.append(float(np.median(l2)))
    decreasing = all(a > b for a, b in zip(medians, medians[1:]))

    ens_mean = simulate_brownian(make_uniform_grid(1.0, 2 ** 8), 10 ** 5, seed=43)
    report = verify_ensemble(indicator, ens_mean)
    se = math.sqrt(report.e_f * (1.0 - report.e_f) / report.n_paths)
    mean_ok = abs(report.e_f - PHI_MINUS_HALF) < 3.0 * se

    ok = l2_linear < 1e-12 and l2_square < 0.05 and decreasing and mean_ok
    _report(
        "criterion 4 (Clark-Ocone reconstruction)",
        ok,
        f"W_T l2={l2_linear:.1e} (<1e-12); W_T^2 l2={l2_square:.4f} (<0.05); "
        f"indicator medians {['%.4f' % m for m in medians]} decreasing={decreasing}; "
        f"E F err={abs(report.e_f - PHI_MINUS_HALF):.2e} < 3SE={3 * se:.2e}",
    )


def test_c05_clark_ocone_under_com():
    indicator = PayoffSpec.indicator(0.5)
    lam = DeterministicFn.const(0.5)
    medians = []
    for steps in (2 ** 8, 2 ** 10, 2 ** 12, 2 ** 14):
        grid = make_uniform_grid(1.0, steps)
        l2 = [
            verify_ensemble(
                indicator, simulate_brownian(grid, 64, seed=seed), lam=lam
            ).l2_error
            for seed in range(100)
        ]
        medians.append(float(np.median(l2)))
    decreasing = all(a > b for a, b in zip(medians, medians[1:]))

    # lam = 0 degenerates bit-identically
    grid = make_uniform_grid(1.0, 2 ** 10)
    w = brownian_path(grid, seed=44)
    zero = DeterministicFn.zero()
    bit_identical = reconstruct_com(indicator, zero, w) == reconstruct(indicator, w)
    ens_small = simulate_brownian(grid, 128, seed=45)
    r_plain = verify_ensemble(indicator, ens_small, keep_paths=True)
    r_zero = verify_ensemble(indicator, ens_small, lam=zero, keep_paths=True)
    bit_identical &= np.array_equal(r_plain.reconstructions, r_zero.reconstructions)

    ens_mean = simulate_brownian(make_uniform_grid(1.0, 2 ** 8), 10 ** 5, seed=46)
    report = verify_ensemble(indicator, ens_mean, lam=lam)
    # reweighted estimator SE from the sample itself
    dw = np.diff(ens_mean.values, axis=1)
    z_t = np.exp(-0.5 * np.sum(dw, axis=1) - 0.5 * 0.25)
    sample = (ens_mean.terminal >= 0.5) * z_t
    se = float(np.std(sample, ddof=1) / np.sqrt(len(sample)))
    mean_ok = abs(report.e_f - PHI_MINUS_ONE) < 3.0 * se

    ok = decreasing and bit_identical and mean_ok
    _report(
        "criterion 5 (Clark-Ocone under change of measure)",
        ok,
        f"medians {['%.4f' % m for m in medians]} decreasing={decreasing}; "
        f"lam=0 bit-identical={bit_identical}; "
        f"E~F err={abs(report.e_f - PHI_MINUS_ONE):.2e} < 3SE={3 * se:.2e}",
    )


def test_c06_heat_kernel_suite():
    heat_ok = all(
        heat_equation_residual(n, t, x) < 1e-6
        for n in range(5)
        for t in (0.8, 1.0, 1.5)
        for x in (-1.0, 0.0, 0.7, 1.5)
    )

    t_s, x_s = sp.symbols("t x", positive=True)
    kernel = sp.exp(-x_s ** 2 / (2 * t_s)) / sp.sqrt(2 * sp.pi * t_s)
    sym_ok = True
    worst_rel = 0.0
    for n in range(1, 7):
        oracle = sp.lambdify((t_s, x_s), sp.diff(kernel, x_s, n), "numpy")
        for t in (0.5, 1.0, 2.0):
            for x in (-1.5, -0.3, 0.4, 1.1, 2.2):
                want = float(oracle(t, x))
                got = hermite_form(n, t, x)
                rel = abs(got - want) / max(abs(want), 1e-300)
                worst_rel = max(worst_rel, rel if abs(want) > 1e-12 else abs(got - want))
                sym_ok &= np.isclose(got, want, rtol=1e-10, atol=1e-13)

    mp.mp.dps = 30
    phi_ok = True
    worst_phi = 0.0
    for z in (-3.0, -1.96, -0.5, 0.0, 0.5, 1.0, 1.96, 3.0):
        oracle = float(
            mp.quad(lambda u: mp.exp(-u * u / 2), [-mp.inf, mp.mpf(z)]) / mp.sqrt(2 * mp.pi)
        )
        err = abs(normal_cdf(z) - oracle)
        worst_phi = max(worst_phi, err)
        phi_ok &= err < 1e-12

    ok = heat_ok and sym_ok and phi_ok
    _report(
        "criterion 6 (heat-kernel suite)",
        ok,
        f"heat-eq residual<1e-6: {heat_ok}; hermite-vs-symbolic worst rel "
        f"{worst_rel:.1e} (<1e-10): {sym_ok}; Phi worst abs err {worst_phi:.1e} (<1e-12)",
    )


def test_c07_kernel_martingales():
    grid = make_uniform_grid(1.0, 16)
    m = 10 ** 5
    x, y = 0.1, 0.3
    ens = simulate_brownian(grid, m, seed=47, start=x)
    ok = True
    details = []
    for n in range(3):
        want = density_dx(n, 1.0, x, y)
        for t in (0.25, 0.5, 0.75):
            idx = grid.node_index(t)
            sample = density_dx(n, 1.0 - t, ens.values[:, idx], y)
            se = float(np.std(sample, ddof=1) / np.sqrt(m))
            err = abs(float(np.mean(sample)) - want)
            ok &= err < 3.0 * se
            details.append(f"n={n},t={t}: {err:.1e}<{3 * se:.1e}")
    _report("criterion 7 (kernel martingale means)", ok, "; ".join(details[:3]) + " ...")


def test_c08_conditional_chain_rule():
    cases = [
        PayoffSpec.smooth("sin"),
        PayoffSpec.smooth("cos"),
        PayoffSpec.polynomial([0.5, -1.0, 0.0, 2.0]),  # cubic
    ]
    worst = 0.0
    for spec in cases:
        fprime = spec.derivative()
        for t in (0.0, 0.3, 0.7, 0.9):
            for x in (-2.0, -0.5, 0.0, 1.0, 2.5):
                got = cond_exp_deriv(spec, t, x, 1.0)
                want = cond_exp_heat(fprime, t, x, 1.0)
                worst = max(worst, abs(got - want))
    _report(
        "criterion 8 (conditional QCD chain rule)",
        worst < 1e-8,
        f"max |cond_exp_deriv(f) - cond_exp_heat(f')| = {worst:.1e} (<1e-8)",
    )


def test_c09_chaos_suite():
    # cross-implementation agreement of the coefficient formulas
    cross_ok = True
    for n, nodes in [(1, [0.25]), (2, [0.25, 0.5]), (3, [0.2, 0.5, 0.8])]:
        direct = stroock_coeff(n, 1.0, 0.0, 0.3)
        general = stroock_coeff_general(PayoffSpec.indicator(0.3), n, nodes)
        cross_ok &= abs(direct - general) < 1e-10

    # norm identity at the money: monotone partial sums toward 1/2.
    # The provisional claim |partial_40 - 0.5| < 1e-6 fails its own series
    # oracle: the exact partial sum at order 40 is 0.479881... (the tail
    # decays like c/sqrt(order), which is also what makes the indicator
    # non-Malliavin-differentiable).  Locked here: partial_40 equals the
    # oracle value, and the oracle's extrapolated limit equals 0.5 to 1e-6.
    coeffs = ChaosCoefficients.indicator(1.0, 0.0, 0.0, 40)
    partials = np.array([norm_identity(coeffs, k)[0] for k in range(41)])
    monotone = bool(np.all(np.diff(partials) >= 0.0))
    partial_40 = partials[-1]
    partial_ok = np.isclose(partial_40, PARTIAL_40_AT_MONEY, rtol=1e-12)
    gap_ok = abs(partial_40 - 0.5) < 0.021  # oracle gap 0.02011...

    # series oracle, continued by the stable term recurrence
    # term_j = p(1,0)^2 (2j-1)!!/((2j+1)(2j)!!) for expansion order n = 2j+1
    def partial_at(order_max):
        total = 0.25 + 1.0 / (2.0 * np.pi)  # g_0^2 + order-1 term
        term = 1.0 / (2.0 * np.pi)
        j = 0
        while 2 * (j + 1) + 1 <= order_max:
            j += 1
            term *= (2 * j - 1) ** 2 / (2 * j * (2 * j + 1.0))
            total += term
        return total

    assert np.isclose(partial_at(40), PARTIAL_40_AT_MONEY, rtol=1e-12)
    s1, s2, s3 = partial_at(1000), partial_at(2000), partial_at(4000)
    mat = np.array(
        [[1.0, n ** -0.5, n ** -1.5] for n in (1000.0, 2000.0, 4000.0)]
    )
    limit = float(np.linalg.solve(mat, np.array([s1, s2, s3]))[0])
    limit_ok = abs(limit - 0.5) < 1e-6

    # second-moment law of iterated integrals (J_n^2 is heavy-tailed, so
    # the 3-SE check needs a large sample to be meaningful)
    ens = simulate_brownian(make_uniform_grid(1.0, 2 ** 10), 20000, seed=100)
    terms = _unit_iterated_terminals(np.diff(ens.values, axis=1), 4)
    moment_ok = True
    for n in range(1, 5):
        sample = terms[:, n] ** 2
        se = np.std(sample, ddof=1) / np.sqrt(len(sample))
        moment_ok &= abs(np.mean(sample) - 1.0 / math.factorial(n)) < 3.0 * se

    # truncated reconstruction error decreasing in the truncation order
    orders = (1, 3, 5, 9, 15)
    coeffs15 = ChaosCoefficients.indicator(1.0, 0.0, 0.0, 15)
    per_seed = {k: [] for k in orders}
    grid = make_uniform_grid(1.0, 2 ** 14)
    for seed in range(100):
        e = simulate_brownian(grid, 64, seed=seed)
        terminals = _unit_iterated_terminals(np.diff(e.values, axis=1), 15)
        exact = (e.terminal >= 0.0).astype(float)
        for k in orders:
            recon = terminals[:, : k + 1] @ coeffs15.g[: k + 1]
            per_seed[k].append(np.sqrt(np.mean((exact - recon) ** 2)))
    medians = [float(np.median(per_seed[k])) for k in orders]
    trunc_ok = all(a > b for a, b in zip(medians, medians[1:]))

    ok = cross_ok and monotone and partial_ok and gap_ok and limit_ok and moment_ok and trunc_ok
    _report(
        "criterion 9 (chaos suite)",
        ok,
        f"cross-impl<1e-10: {cross_ok}; partials monotone: {monotone}; "
        f"partial_40={partial_40:.12f} (oracle {PARTIAL_40_AT_MONEY}, gap to 0.5 "
        f"{abs(partial_40 - 0.5):.4f}); extrapolated limit err {abs(limit - 0.5):.1e} (<1e-6); "
        f"E J_n(1)^2 within 3SE: {moment_ok}; truncation medians {['%.4f' % m for m in medians]}",
    )


def test_c10_hedging():
    market = MarketSpec(
        drift=DeterministicFn.const(0.05),
        volatility=DeterministicFn.const(0.2),
        rate=DeterministicFn.const(0.01),
        strike=0.5,
        horizon=1.0,
        initial_price=1.0,
    )
    lam = market.lambda_fn()
    spec = PayoffSpec.indicator(0.5)

    # pointwise identity Delta a D P / D_T == change-of-measure integrand
    grid = make_uniform_grid(1.0, 512)
    w = brownian_path(grid, seed=49)
    stock = simulate_stock(market, w)
    worst_rel = 0.0
    for idx in (5, 64, 250, 460):
        t = grid.nodes[idx]
        lhs = (
            delta_digital(market, t, w.values[idx], stock.values[idx])
            * market.volatility(t)
            * market.discount(t)
            * stock.values[idx]
            / market.discount(1.0)
        )
        rhs = integrand_com(spec, lam, t, w.values[idx])
        worst_rel = max(worst_rel, abs(lhs - rhs) / abs(rhs))
    identity_ok = worst_rel < 1e-12

    # L2 terminal error nonincreasing in rebalance frequency
    ens = simulate_brownian(make_uniform_grid(1.0, 2 ** 14), 1500, seed=50)
    rows = hedge_report(market, ens, [2 ** 6, 2 ** 8, 2 ** 10, 2 ** 14])
    l2 = [r["l2_error"] for r in rows]
    monotone_ok = all(a >= b for a, b in zip(l2, l2[1:]))
    del ens

    # risk-neutral price: reweighted discounted payoff vs initial capital
    ens_p = simulate_brownian(make_uniform_grid(1.0, 128), 10 ** 4, seed=51)
    dw = np.diff(ens_p.values, axis=1)
    z_t = np.exp(
        -np.sum(lam(ens_p.grid.nodes[:-1]) * dw, axis=1)
        - 0.5 * lam.square_antiderivative(1.0)
    )
    sample = market.discount(1.0) * (ens_p.terminal >= 0.5) * z_t
    se = float(np.std(sample, ddof=1) / np.sqrt(len(sample)))
    price_err = abs(float(np.mean(sample)) - market.discount(0.0) * initial_capital(market))
    price_ok = price_err < 3.0 * se

    ok = identity_ok and monotone_ok and price_ok
    _report(
        "criterion 10 (digital hedging)",
        ok,
        f"pointwise identity worst rel {worst_rel:.1e} (<1e-12); "
        f"L2 by frequency {['%.4f' % v for v in l2]} nonincreasing={monotone_ok}; "
        f"price err {price_err:.2e} < 3SE={3 * se:.2e}",
    )


def test_c11_cli_reproducibility(tmp_path):
    ok = True
    details = []
    runs = [
        ["clark-ocone", "--payoff", "indicator:0.5", "--paths", "64", "--steps", "256",
         "--seed", "7"],
        ["paths", "--paths", "8", "--steps", "32", "--seed", "7"],
        ["hedge", "--paths", "50", "--steps", "256", "--freqs", "16,64", "--seed", "7"],
    ]
    for argv in runs:
        outputs = []
        for threads in ("1", "4"):
            out = tmp_path / f"{argv[0]}-{threads}.txt"
            code = dispatch(argv + ["--threads", threads, "--output", str(out)])
            ok &= code == 0
            outputs.append(out.read_bytes())
        same = outputs[0] == outputs[1]
        ok &= same
        details.append(f"{argv[0]}: byte-identical={same}")
    _report("criterion 11 (CLI reproducibility across thread counts)", ok, "; ".join(details))
