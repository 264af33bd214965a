"""Quantum Fisher information, metrological gain and its time integral.

A :class:`SensingScenario` fixes the probe (GHZ, product, or a single
tilted spin), the noise channel and the rates.  From it we get

* the numeric pipeline: propagate, differentiate in ``phi``, take the QFI;
* closed-form gains and integrated gains for the covered families;
* crossover times where the entangled probe loses its advantage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np

from . import channels, states
from .numerics import (
    EIG_TOL,
    adaptive_quadrature,
    check_hermitian,
    hermitian_eig,
    parity_vector,
)

LAMBDA_CUT = 1e-12
IMG_HORIZON = 40.0
FD_REL_STEP = 1e-5

CHANNELS = ("dephasing", "emission")
STATES = ("ghz", "product", "delta")


class UncoveredScenarioError(ValueError):
    """No closed form is available; use the numeric pipeline instead."""


@dataclass(frozen=True)
class SensingScenario:
    n: int
    channel: str
    state: str
    gamma: float
    phi: float = 1.0
    rates: tuple[float, ...] | None = None
    delta: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if self.state not in STATES:
            raise ValueError(f"state must be one of {STATES}, got {self.state!r}")
        if not isinstance(self.n, (int, np.integer)) or not 1 <= self.n <= states.N_MAX:
            raise ValueError(f"n must be an integer in [1, {states.N_MAX}], got {self.n!r}")
        if self.state == "delta":
            if self.n != 1:
                raise ValueError("the delta state is defined for a single spin only")
            if not -1 <= self.delta <= 1:
                raise ValueError(f"delta must lie in [-1, 1], got {self.delta}")
        if self.rates is not None:
            if self.channel != "dephasing" or self.state != "product":
                raise ValueError("per-site rates are supported for dephasing of product states only")
            rates = tuple(float(r) for r in self.rates)
            if len(rates) != self.n:
                raise ValueError(f"got {len(rates)} rates for {self.n} sites")
            object.__setattr__(self, "rates", rates)

    @property
    def site_rates(self) -> tuple[float, ...]:
        return self.rates if self.rates is not None else (float(self.gamma),) * self.n

    def with_phi(self, phi: float) -> "SensingScenario":
        return replace(self, phi=phi)

    def initial_state(self) -> states.PureState:
        if self.state == "ghz":
            return states.ghz_state(self.n)
        if self.state == "product":
            return states.product_plus_state(self.n)
        return states.single_qubit_delta_state(self.delta, self.phase)

    @cached_property
    def _rho0(self) -> np.ndarray:
        rho = states.density_from_pure(self.initial_state())
        rho.setflags(write=False)
        return rho

    def rho0(self) -> np.ndarray:
        return self._rho0

    def propagate(self, t: float, phi: float | None = None) -> np.ndarray:
        phi = self.phi if phi is None else phi
        if self.channel == "dephasing":
            ch = channels.DephasingChannel(self.site_rates, phi)
            return channels.dephasing_propagate(self.rho0(), ch, t)
        return channels.emission_propagate(self.rho0(), channels.EmissionChannel(self.gamma, phi), t)

    def decay_rate(self) -> float:
        """Slowest exponential decay rate of the gain for this family."""
        if self.channel == "dephasing":
            if self.state == "ghz":
                return 4 * self.n * self.gamma
            return 4 * min(self.site_rates)
        if self.state == "ghz":
            return self.n * self.gamma
        return self.gamma

    def gain_envelope(self) -> float:
        """Prefactor ``C`` with ``G(t) <= C exp(-decay_rate * t)``."""
        if self.state == "delta":
            return 1 - self.delta**2
        if self.channel == "emission" and self.state == "ghz":
            return 2.0 * self.n**2
        if self.state == "ghz":
            return float(self.n**2)
        return float(self.n)


@dataclass(frozen=True)
class GainCurve:
    times: np.ndarray
    qfi: np.ndarray
    gain: np.ndarray
    img_cumulative: np.ndarray
    closed_form_gain: np.ndarray | None = None

    def __post_init__(self):
        lengths = {len(self.times), len(self.qfi), len(self.gain), len(self.img_cumulative)}
        if self.closed_form_gain is not None:
            lengths.add(len(self.closed_form_gain))
        if len(lengths) != 1:
            raise ValueError("all GainCurve arrays must have the same length")


def qfi(rho, drho) -> float:
    """QFI ``2 sum_{mn} |<m|drho|n>|^2 / (lambda_m + lambda_n)``.

    Pairs whose eigenvalue sum does not exceed ``LAMBDA_CUT`` are dropped.
    """
    rho = check_hermitian(np.asarray(rho, dtype=complex), EIG_TOL, "rho")
    drho = check_hermitian(np.asarray(drho, dtype=complex), EIG_TOL, "drho")
    if drho.shape != rho.shape:
        raise ValueError(f"shape mismatch: rho {rho.shape}, drho {drho.shape}")
    eig = hermitian_eig(rho)
    lam = eig.eigenvalues
    v = eig.eigenvectors
    d = v.conj().T @ drho @ v
    denom = lam[:, None] + lam[None, :]
    keep = denom > LAMBDA_CUT
    q = 2.0 * np.sum(np.abs(d[keep]) ** 2 / denom[keep])
    return float(max(q, 0.0))


def dphi_rho_dephasing(rho_t, t: float) -> np.ndarray:
    """``(i t / 2) [rho(t), sum_j sigma_j^z]`` evaluated entrywise.

    Exact for both channels: the field enters only through
    ``exp(-i phi t J^z)``, which commutes with either dissipator.
    """
    rho_t = np.asarray(rho_t, dtype=complex)
    n = int(round(math.log2(rho_t.shape[0])))
    s = parity_vector(n)
    return 0.5j * t * rho_t * (s[None, :] - s[:, None])


def dphi_rho_numeric(
    propagate: Callable[[float, float], np.ndarray],
    phi: float,
    t: float,
    h_phi: float | None = None,
    richardson: bool = True,
) -> np.ndarray:
    """Central difference of ``propagate(t, phi)`` in ``phi``.

    With ``richardson`` the steps ``h`` and ``h/2`` are combined to cancel
    the ``h^2`` term.
    """
    if h_phi is None:
        h_phi = FD_REL_STEP * max(1.0, abs(phi))
    if not 1e-7 <= h_phi <= 1e-3:
        raise ValueError(f"h_phi must lie in [1e-7, 1e-3], got {h_phi}")

    def central(h):
        return (propagate(t, phi + h) - propagate(t, phi - h)) / (2 * h)

    d = central(h_phi)
    if richardson:
        d = (4 * central(h_phi / 2) - d) / 3
    return 0.5 * (d + d.conj().T)


def numeric_qfi(sc: SensingScenario, t: float, derivative: str = "auto") -> float:
    """QFI at time ``t`` from the propagated state.

    ``derivative`` picks the ``phi`` derivative: ``"commutator"`` (also
    ``"auto"``) uses the exact generator form, ``"fd"`` finite differences
    the propagator and serves as an independent check.
    """
    rho = sc.propagate(t)
    return qfi(rho, _drho(sc, rho, t, derivative))


def _mode(sc, derivative):
    if derivative == "auto":
        return "commutator"
    if derivative not in ("commutator", "fd"):
        raise ValueError(f"unknown derivative mode {derivative!r}")
    return derivative


def _drho(sc, rho, t, derivative):
    derivative = _mode(sc, derivative)
    if derivative == "commutator":
        return dphi_rho_dephasing(rho, t)
    return dphi_rho_numeric(lambda tt, ph: sc.propagate(tt, ph), sc.phi, t)


def metrological_gain(q, t, scenario: SensingScenario | None = None):
    """``Q / t^2``; at ``t = 0`` the right limit is substituted.

    The limit comes from the closed form when ``scenario`` is covered,
    otherwise by linear extrapolation from the two smallest positive
    samples in ``t``.  Scalars in, scalar out.
    """
    scalar = np.ndim(t) == 0
    q = np.atleast_1d(np.asarray(q, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if q.shape != t.shape:
        raise ValueError("q and t must have the same shape")
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    g = np.empty_like(q)
    pos = t > 0
    g[pos] = q[pos] / t[pos] ** 2
    if np.any(~pos):
        limit = None
        if scenario is not None:
            try:
                limit = closed_form_gain(scenario, 0.0)
            except UncoveredScenarioError:
                limit = None
        if limit is None:
            if np.count_nonzero(pos) < 2:
                raise ValueError("need a covered scenario or two positive samples to evaluate G at t = 0")
            order = np.argsort(t[pos])[:2]
            (t1, t2), (g1, g2) = t[pos][order], g[pos][order]
            limit = g1 - t1 * (g2 - g1) / (t2 - t1)
        g[~pos] = limit
    return float(g[0]) if scalar else g


def numeric_gain(sc: SensingScenario, t: float, derivative: str = "auto") -> float:
    """Metrological gain from the numeric pipeline at a single time."""
    if t < 0:
        raise ValueError("time must be non-negative")
    mode = _mode(sc, derivative)
    if t == 0:
        if mode == "commutator":
            rho = sc.rho0()
            return qfi(rho, dphi_rho_dephasing(rho, 1.0))
        if _covered(sc):
            return closed_form_gain(sc, 0.0)
        return _extrapolated_gain(sc, mode)
    rho = sc.propagate(t)
    drho = _drho(sc, rho, t, derivative)
    # Q / t^2 computed as QFI of drho / t keeps small-t values well scaled
    return qfi(rho, drho / t)


def _extrapolated_gain(sc, derivative):
    t1, t2 = 1e-6 / max(sc.gamma, 1e-12), 2e-6 / max(sc.gamma, 1e-12)
    g1, g2 = numeric_gain(sc, t1, derivative), numeric_gain(sc, t2, derivative)
    return g1 - t1 * (g2 - g1) / (t2 - t1)


def _covered(sc: SensingScenario) -> bool:
    try:
        closed_form_gain(sc, 0.0)
    except UncoveredScenarioError:
        return False
    return True


def closed_form_gain(sc: SensingScenario, t):
    """Closed-form gain ``G(t)`` for the covered scenario families.

    Negative ``gamma`` is accepted and gives exponential growth.
    """
    t = np.asarray(t, dtype=float)
    n, g = sc.n, sc.gamma
    if sc.channel == "dephasing":
        if sc.state == "ghz":
            out = n**2 * np.exp(-4 * n * g * t)
        elif sc.state == "product":
            out = sum(np.exp(-4 * r * t) for r in sc.site_rates)
        else:
            out = (1 - sc.delta**2) * np.exp(-4 * g * t)
    else:
        if sc.state == "ghz":
            x = np.exp(-g * t)
            out = 2 * n**2 * x**n / (1 + (1 - x) ** n + x**n)
        elif sc.state == "product":
            out = n * np.exp(-g * t)
        else:
            raise UncoveredScenarioError(
                "no closed form for the delta state under emission; use the numeric pipeline"
            )
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ImgReference:
    """Closed-form integrated gain and the comparison values that go with it."""

    value: float
    upper_bound: float | None = None
    large_n: float | None = None
    asymptotic: float | None = None
    quadrature_error: float = 0.0


def emission_ghz_img(n: int, gamma: float, rel_tol: float = 1e-13) -> tuple[float, float]:
    """Integrated emission GHZ gain via ``x = exp(-gamma t)`` on ``[0, 1]``."""

    def integrand(x):
        return x ** (n - 1) / (1 + (1 - x) ** n + x**n)

    val, err = adaptive_quadrature(integrand, 0.0, 1.0, rel_tol)
    scale = 2 * n**2 / gamma
    return scale * val, scale * err


def closed_form_img(sc: SensingScenario) -> ImgReference:
    if sc.gamma <= 0 or any(r <= 0 for r in sc.site_rates):
        raise ValueError("integrated gain needs strictly positive rates")
    n, g = sc.n, sc.gamma
    if sc.channel == "dephasing":
        if sc.state == "ghz":
            return ImgReference(n / (4 * g))
        if sc.state == "product":
            return ImgReference(sum(1 / (4 * r) for r in sc.site_rates))
        return ImgReference((1 - sc.delta**2) / (4 * g))
    if sc.state == "ghz":
        val, err = emission_ghz_img(n, g)
        bound = 2 * n * math.log(2) / g
        return ImgReference(val, upper_bound=bound, large_n=bound, asymptotic=n / g, quadrature_error=err)
    if sc.state == "product":
        return ImgReference(n / g)
    raise UncoveredScenarioError("no closed form for the delta state under emission")


def img_horizon(sc: SensingScenario) -> float:
    return IMG_HORIZON / sc.decay_rate()


def integrated_gain(sc: SensingScenario, rel_tol: float = 1e-8, derivative: str = "auto") -> float:
    """Integrate the numeric gain over ``[0, T_max]``.

    ``T_max = 40 / r`` with ``r`` the slowest decay rate of the family; the
    remainder is bounded by the exponential envelope and must stay below
    ``rel_tol`` times the value.
    """
    if sc.gamma <= 0 or any(r <= 0 for r in sc.site_rates):
        raise ValueError("integrated gain diverges unless every rate is positive")
    t_max = img_horizon(sc)
    value, _ = adaptive_quadrature(
        lambda t: numeric_gain(sc, t, derivative), 0.0, t_max, rel_tol, abs_tol=1e-300
    )
    tail = sc.gain_envelope() * math.exp(-sc.decay_rate() * t_max) / sc.decay_rate()
    if tail > rel_tol * abs(value) and tail > 0:
        raise ArithmeticError(f"tail bound {tail:.3e} exceeds tolerance for value {value:.3e}")
    return value


def cumulative_img(gain: Callable[[float], float], times, rel_tol: float = 1e-9) -> np.ndarray:
    """``int_0^{t_i} G`` at each ascending sample time, segment by segment."""
    times = np.asarray(times, dtype=float)
    out = np.empty(len(times))
    acc = 0.0
    prev = 0.0
    for i, t in enumerate(times):
        if t > prev:
            v, _ = adaptive_quadrature(gain, prev, t, rel_tol, abs_tol=1e-300)
            acc += v
        out[i] = acc
        prev = t
    return out


def auto_times(sc: SensingScenario, count: int = 200) -> np.ndarray:
    """Log-spaced grid from ``1e-3 / gamma`` out to the integration horizon."""
    fastest = max(sc.site_rates)
    if fastest <= 0 or sc.decay_rate() <= 0:
        raise ValueError("an automatic time grid needs positive rates")
    return np.geomspace(1e-3 / fastest, img_horizon(sc), count)


def gain_curve(sc: SensingScenario, times, rel_tol: float = 1e-9, derivative: str = "auto") -> GainCurve:
    """Sample the numeric gain on ``times`` with the running integral alongside."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("need a non-empty 1-d time grid")
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly ascending")
    gain = np.array([numeric_gain(sc, t, derivative) for t in times])
    q = gain * times**2
    cf = closed_form_gain(sc, times) if _covered(sc) else None
    img = cumulative_img(lambda t: numeric_gain(sc, t, derivative), times, rel_tol)
    return GainCurve(times, q, gain, img, None if cf is None else np.atleast_1d(cf))


@dataclass(frozen=True)
class Crossover:
    n: int
    channel: str
    t_star: float
    analytic_reference: float


def _log_gain_ratio(n: int, gamma: float, channel: str, t: float) -> float:
    if channel == "dephasing":
        return math.log(n) - 4 * (n - 1) * gamma * t
    x = math.exp(-gamma * t)
    # log(G_ent) - log(G_sep) with G_ent = 2 N^2 x^N / (1 + (1-x)^N + x^N), G_sep = N x
    return (
        math.log(2 * n)
        + (n - 1) * math.log(x)
        - math.log(1 + (-math.expm1(-gamma * t)) ** n + x**n)
    )


def gain_ratio_crossover(n: int, gamma: float, channel: str) -> Crossover:
    """First time the entangled gain drops to the separable one.

    The root is bracketed on ``[1e-6/gamma, 10 * reference]`` and bisected on
    the exact closed-form gains down to ``1e-10`` absolute.
    """
    if n < 2:
        raise ValueError("crossover needs n >= 2; for one spin the gain ratio is identically 1")
    if gamma <= 0:
        raise ValueError("crossover needs gamma > 0")
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}")
    if channel == "dephasing":
        ref = math.log(n) / (4 * (n - 1) * gamma)
    else:
        ref = math.log(n) / ((n - 1) * gamma)
    lo, hi = 1e-6 / gamma, 10 * ref
    f_lo = _log_gain_ratio(n, gamma, channel, lo)
    f_hi = _log_gain_ratio(n, gamma, channel, hi)
    if f_lo <= 0 or f_hi > 0:
        raise ArithmeticError(f"crossover not bracketed on [{lo}, {hi}]")
    tol = min(1e-10, 1e-12 * ref)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _log_gain_ratio(n, gamma, channel, mid) > 0:
            lo = mid
        else:
            hi = mid
    return Crossover(n, channel, 0.5 * (lo + hi), ref)


_SIGMA_Y2 = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def two_qubit_concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"concurrence needs a 4x4 density matrix, got {rho.shape}")
    rho_tilde = _SIGMA_Y2 @ rho.conj() @ _SIGMA_Y2
    mu = np.linalg.eigvals(rho @ rho_tilde)
    roots = np.sort(np.sqrt(np.clip(mu.real, 0.0, None)))[::-1]
    return float(max(0.0, roots[0] - roots[1:].sum()))
