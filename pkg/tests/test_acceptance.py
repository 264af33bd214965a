"""Acceptance criteria, one test each.

Every test prints a PASS/FAIL line (also collected in the terminal summary)
and then asserts it.  Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import time

import numpy as np

from spinsense import metrics, oracle, verify
from spinsense.channels import DephasingChannel, EmissionChannel, dephasing_propagate, emission_propagate
from spinsense.metrics import SensingScenario, closed_form_gain, numeric_gain

from helpers import pure_rho, random_unitary, rk4_errors

GAMMAS = verify.PIPELINE_GAMMAS
PHIS = verify.PIPELINE_PHIS


def _worst_gain_gap(scenarios, reference):
    worst, where = 0.0, ""
    for sc in scenarios:
        for t in verify.pipeline_times(sc.gamma):
            ref = reference(sc, t)
            dev = abs(numeric_gain(sc, t) / ref - 1)
            if dev > worst:
                worst, where = dev, f"n={sc.n} gamma={sc.gamma:g} phi={sc.phi:g} t={t:.3g}"
    return worst, where


def _oracle_criterion(channel, report, label):
    start = time.perf_counter()
    results = verify.oracle_suite(3, [channel], tol=1e-6)
    elapsed = time.perf_counter() - start
    worst = max(results, key=lambda r: r.deviation)
    ok = all(r.passed for r in results) and len(results) == 12 and elapsed < 30
    report(label, ok, f"max |drho| {worst.deviation:.2e} at {worst.name}, {elapsed:.1f}s")
    assert ok


def test_01_oracle_dephasing(report):
    _oracle_criterion("dephasing", report, "01 oracle equivalence, dephasing N<=3")


def test_02_oracle_emission(report):
    _oracle_criterion("emission", report, "02 oracle equivalence, emission N<=3")


def test_03_ghz_dephasing_gain(report):
    scs = [SensingScenario(n, "dephasing", "ghz", g, phi) for n in range(1, 7) for g in GAMMAS for phi in PHIS]
    worst, where = _worst_gain_gap(scs, lambda sc, t: sc.n**2 * math.exp(-4 * sc.n * sc.gamma * t))
    ok = worst < 1e-6
    report("03 GHZ dephasing gain N^2 exp(-4N gamma t)", ok, f"worst rel {worst:.2e} ({where})")
    assert ok


def test_04_dephasing_img(report):
    start = time.perf_counter()
    worst, where = 0.0, ""
    for state in ("ghz", "product"):
        for n in range(1, 7):
            for g in (0.1, 0.5, 1.0, 2.0):
                val = metrics.integrated_gain(SensingScenario(n, "dephasing", state, g))
                dev = abs(val / (n / (4 * g)) - 1)
                if dev > worst:
                    worst, where = dev, f"{state} n={n} gamma={g:g}"
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 10
    report("04 dephasing IMG = N/(4 gamma)", ok, f"worst rel {worst:.2e} ({where}), {elapsed:.1f}s")
    assert ok


def test_05_emission_ghz_gain(report):
    def ref(sc, t):
        n, x = sc.n, math.exp(-sc.gamma * t)
        return 2 * n**2 * x**n / (1 + (1 - x) ** n + x**n)

    scs = [SensingScenario(n, "emission", "ghz", g, phi) for n in range(1, 7) for g in GAMMAS for phi in PHIS]
    worst, where = _worst_gain_gap(scs, ref)
    ok = worst < 1e-6
    report("05 emission GHZ gain", ok, f"worst rel {worst:.2e} ({where})")
    assert ok


def test_06_emission_img_bound(report):
    g = 1.0
    problems = []
    for n in range(1, 13):
        ref = metrics.closed_form_img(SensingScenario(n, "emission", "ghz", g))
        bound = 2 * n * math.log(2) / g
        beta = math.exp(math.lgamma(n) + math.lgamma(n + 1) - math.lgamma(2 * n + 1))
        gap = bound - ref.value
        if not ref.value <= bound:
            problems.append(f"n={n} above bound")
        if not gap <= 2 * n**2 * beta / g + ref.quadrature_error:
            problems.append(f"n={n} gap {gap:.3e} exceeds correction bound")
        if n >= 8 and gap / bound >= 1e-3:
            problems.append(f"n={n} gap {gap / bound:.2e} of bound")
    worst_sep = 0.0
    for n in range(1, 7):
        val = metrics.integrated_gain(SensingScenario(n, "emission", "product", g))
        worst_sep = max(worst_sep, abs(val / (n / g) - 1))
    if worst_sep >= 1e-6:
        problems.append(f"separable IMG off by {worst_sep:.2e}")
    n8 = metrics.closed_form_img(SensingScenario(8, "emission", "ghz", g))
    ok = not problems
    detail = "; ".join(problems) or (
        f"N=8 at {n8.value / n8.upper_bound:.6f} of 2N ln2/gamma, separable worst rel {worst_sep:.1e}"
    )
    report("06 emission IMG bound and separable N/gamma", ok, detail)
    assert ok


def test_07_dephasing_crossover(report):
    worst, where = 0.0, ""
    for g in (0.5, 1.0, 2.0):
        for n in (2, 4, 8, 16):
            c = metrics.gain_ratio_crossover(n, g, "dephasing")
            expect = math.log(n) / (4 * (n - 1) * g)
            dev = abs(c.t_star / expect - 1)
            if dev >= worst:
                worst, where = dev, f"n={n} gamma={g:g}"
    ok = worst < 1e-8
    report("07 dephasing crossover ln N / (4 (N-1) gamma)", ok, f"worst rel {worst:.2e} ({where})")
    assert ok


def test_08_delta_sweep(report):
    worst_rel, worst_abs = 0.0, 0.0
    for delta in (-1.0, -0.5, 0.0, 0.5, 1.0):
        for g in GAMMAS:
            for phase in (0.0, 1.1):
                sc = SensingScenario(1, "dephasing", "delta", g, delta=delta, phase=phase)
                for t in verify.pipeline_times(g):
                    num = numeric_gain(sc, t)
                    ref = (1 - delta**2) * math.exp(-4 * g * t)
                    if abs(delta) == 1:
                        worst_abs = max(worst_abs, abs(num))
                    else:
                        worst_rel = max(worst_rel, abs(num / ref - 1))
    ok = worst_rel < 1e-6 and worst_abs < 1e-10
    report("08 delta sweep (1 - delta^2) exp(-4 gamma t)", ok, f"worst rel {worst_rel:.2e}, |G| at |delta|=1 {worst_abs:.1e}")
    assert ok


def test_09_phi_independence(report):
    scs = [
        SensingScenario(n, ch, st, g, phi)
        for ch in metrics.CHANNELS
        for st in ("ghz", "product")
        for n in range(1, 7)
        for g in GAMMAS
        for phi in PHIS
    ]
    scs += [
        SensingScenario(1, "dephasing", "delta", g, phi, delta=d) for g in GAMMAS for phi in PHIS for d in (-0.5, 0, 0.5)
    ]
    worst, where = 0.0, ""
    for sc in scs:
        for t in verify.pipeline_times(sc.gamma):
            a, b = numeric_gain(sc, t), numeric_gain(sc.with_phi(2 * sc.phi), t)
            dev = abs(b / a - 1)
            if dev > worst:
                worst, where = dev, f"{sc.channel}/{sc.state} n={sc.n} t={t:.3g}"
    ok = worst < 1e-9
    report("09 gain unchanged when phi doubles", ok, f"worst rel {worst:.2e} ({where})")
    assert ok


def _propagate(channel, rho0, g, phi, t):
    n = int(round(math.log2(rho0.shape[0])))
    if channel == "dephasing":
        return dephasing_propagate(rho0, DephasingChannel.uniform(n, g, phi), t)
    return emission_propagate(rho0, EmissionChannel(g, phi), t)


def test_10_structural_invariants(report):
    rng = np.random.default_rng(20240611)
    worst = dict(trace=0.0, herm=0.0, min_eig=0.0, semigroup=0.0, qfi_basis=0.0)
    orders = []
    for channel in metrics.CHANNELS:
        for state in ("ghz", "product"):
            for n in range(1, 5):
                rho0 = pure_rho(state, n)
                for g in (0.25, 1.0):
                    for t in np.concatenate([[0.0], np.geomspace(1e-3, 10, 12)]):
                        rho = _propagate(channel, rho0, g, 1.0, t)
                        worst["trace"] = max(worst["trace"], abs(np.trace(rho) - 1))
                        worst["herm"] = max(worst["herm"], float(np.max(np.abs(rho - rho.conj().T))))
                        worst["min_eig"] = min(worst["min_eig"], float(np.linalg.eigvalsh(rho)[0]))
                        t1 = 0.37 * t
                        split = _propagate(channel, _propagate(channel, rho0, g, 1.0, t1), g, 1.0, t - t1)
                        worst["semigroup"] = max(worst["semigroup"], float(np.max(np.abs(split - rho))))
                        if t > 0:
                            drho = metrics.dphi_rho_dephasing(rho, t)
                            u = random_unitary(2**n, rng)
                            q_rot = metrics.qfi(u @ rho @ u.conj().T, u @ drho @ u.conj().T)
                            worst["qfi_basis"] = max(worst["qfi_basis"], abs(q_rot - metrics.qfi(rho, drho)))
            for n in range(1, 5):
                if state == "ghz":
                    e1, e2 = rk4_errors(channel, n, [0.02, 0.01])
                    orders.append(math.log2(e1 / e2))
    ok = (
        worst["trace"] < 1e-12
        and worst["herm"] < 1e-12
        and worst["min_eig"] >= -1e-10
        and worst["semigroup"] < 1e-10
        and worst["qfi_basis"] < 1e-8
        and all(3.8 < p < 4.2 for p in orders)
    )
    detail = (
        f"trace {worst['trace']:.1e}, herm {worst['herm']:.1e}, min eig {worst['min_eig']:.1e}, "
        f"semigroup {worst['semigroup']:.1e}, qfi basis {worst['qfi_basis']:.1e}, "
        f"rk4 order {min(orders):.2f}..{max(orders):.2f}"
    )
    report("10 structural invariants N<=4", ok, detail)
    assert ok


def test_11_concurrence(report):
    c_ghz = metrics.two_qubit_concurrence(pure_rho("ghz", 2))
    sc = SensingScenario(2, "dephasing", "product", 0.5)
    c_prod = max(metrics.two_qubit_concurrence(sc.propagate(t)) for t in np.linspace(0, 5, 10))
    ok = abs(c_ghz - 1) < 1e-10 and c_prod < 1e-10
    report("11 concurrence GHZ = 1, dephased product = 0", ok, f"|C_ghz - 1| {abs(c_ghz - 1):.1e}, max C_prod {c_prod:.1e}")
    assert ok
