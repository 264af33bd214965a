"""Analytic-versus-oracle and numeric-versus-closed-form check suites."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import channels, metrics, oracle, states

ORACLE_GAMMAS = (0.25, 1.0)
PIPELINE_GAMMAS = (0.1, 0.5, 1.0)
PIPELINE_PHIS = (0.3, 1.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tol: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.deviation < self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{status}  {self.name}: worst deviation {self.deviation:.3e} (tol {self.tol:.1e}){extra}"


def oracle_times(gamma: float, count: int = 30) -> np.ndarray:
    """``t = 0`` followed by ``count - 1`` log-spaced times up to ``5 / gamma``."""
    t_hi = 5.0 / gamma
    return np.concatenate([[0.0], np.geomspace(1e-3 * t_hi, t_hi, count - 1)])


def pipeline_times(gamma: float, count: int = 20) -> np.ndarray:
    return np.geomspace(1e-3 / gamma, 5.0 / gamma, count)


def analytic_propagator(channel: str, rho0: np.ndarray, n: int, gamma: float, phi: float):
    if channel == "dephasing":
        ch = channels.DephasingChannel.uniform(n, gamma, phi)
        return lambda t: channels.dephasing_propagate(rho0, ch, t)
    em = channels.EmissionChannel(gamma, phi)
    return lambda t: channels.emission_propagate(rho0, em, t)


def oracle_problem(channel: str, rho0: np.ndarray, n: int, gamma: float, phi: float, n_max=oracle.ORACLE_N_MAX):
    if channel == "dephasing":
        return oracle.dephasing_problem(rho0, [gamma] * n, phi, n_max)
    return oracle.emission_problem(rho0, n, gamma, phi, n_max)


def oracle_check(channel: str, n: int, gamma: float, state: str, phi: float = 1.0, tol: float = 1e-6) -> CheckResult:
    psi = states.ghz_state(n) if state == "ghz" else states.product_plus_state(n)
    rho0 = states.density_from_pure(psi)
    cmp = oracle.compare_trajectories(
        analytic_propagator(channel, rho0, n, gamma, phi),
        oracle_problem(channel, rho0, n, gamma, phi),
        oracle_times(gamma),
    )
    k, l = cmp.worst_index
    return CheckResult(
        f"oracle/{channel} n={n} gamma={gamma:g} state={state}",
        cmp.max_deviation,
        tol,
        f"t={cmp.worst_time:.4g}, entry ({k},{l})",
    )


def oracle_suite(n_max: int, channel_list: Iterable[str], tol: float = 1e-6) -> list[CheckResult]:
    if n_max > oracle.ORACLE_N_MAX:
        raise oracle.OracleCapError(f"n_max={n_max} exceeds the oracle cap of {oracle.ORACLE_N_MAX}")
    return [
        oracle_check(ch, n, g, st, tol=tol)
        for ch in channel_list
        for n in range(1, n_max + 1)
        for g in ORACLE_GAMMAS
        for st in ("ghz", "product")
    ]


def gain_deviation(sc: metrics.SensingScenario, times) -> tuple[float, float]:
    """Worst relative gap between the numeric and closed-form gain, and where."""
    worst, where = 0.0, float(times[0])
    for t in times:
        num = metrics.numeric_gain(sc, t)
        ref = metrics.closed_form_gain(sc, t)
        dev = abs(num - ref) / abs(ref) if ref != 0 else abs(num)
        if dev > worst:
            worst, where = dev, float(t)
    return worst, where


def closed_form_suite(n_max: int, channel_list: Iterable[str], tol: float = 1e-6) -> list[CheckResult]:
    out = []
    for ch in channel_list:
        for st in ("ghz", "product"):
            for n in range(1, n_max + 1):
                worst, where = 0.0, ""
                for g in PIPELINE_GAMMAS:
                    for phi in PIPELINE_PHIS:
                        sc = metrics.SensingScenario(n, ch, st, g, phi)
                        dev, t = gain_deviation(sc, pipeline_times(g))
                        if dev >= worst:
                            worst, where = dev, f"gamma={g:g}, phi={phi:g}, t={t:.4g}"
                out.append(CheckResult(f"gain/{ch} n={n} state={st}", worst, tol, where))
    return out


def img_suite(n_max: int, channel_list: Iterable[str], tol: float = 1e-6) -> list[CheckResult]:
    out = []
    for ch in channel_list:
        for st in ("ghz", "product"):
            worst, where = 0.0, ""
            for n in range(1, n_max + 1):
                sc = metrics.SensingScenario(n, ch, st, 0.5)
                num = metrics.integrated_gain(sc, rel_tol=1e-9)
                ref = metrics.closed_form_img(sc).value
                dev = abs(num / ref - 1)
                if dev >= worst:
                    worst, where = dev, f"n={n}"
            out.append(CheckResult(f"img/{ch} state={st}", worst, tol, where))
    return out


def run_all(n_max: int = 3, channel_list: Iterable[str] = metrics.CHANNELS, tol: float = 1e-6) -> list[CheckResult]:
    channel_list = tuple(channel_list)
    return (
        oracle_suite(n_max, channel_list, tol)
        + closed_form_suite(n_max, channel_list, tol)
        + img_suite(n_max, channel_list, tol)
    )
