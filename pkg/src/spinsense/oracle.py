"""Brute-force RK4 integration of the Lindblad master equation.

This is the independent reference for the analytic propagators.  Operators
are assembled from Kronecker products of 2x2 Pauli matrices and never touch
the bit-twiddling code in :mod:`spinsense.channels`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .numerics import HERM_TOL, check_hermitian

ORACLE_N_MAX = 6
PSD_TOL = 1e-10

SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# sigma^- = |1><0| : lowers |0> (up) to |1> (down)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class OracleCapError(ValueError):
    pass


class IntegrationError(FloatingPointError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite density matrix encountered at step {step}")


def site_operator(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Embed a single-site operator at ``site`` (0-based) in ``n`` sites.

    Site 0 is the least significant bit of the basis index, so it sits at
    the right end of the Kronecker product.
    """
    factors = [op if s == site else IDENTITY_2 for s in reversed(range(n))]
    return reduce(np.kron, factors)


def field_hamiltonian(n: int, phi: float) -> np.ndarray:
    """``phi * J^z`` with ``J^z = sum_j sigma_j^z / 2``."""
    return phi * sum(site_operator(SIGMA_Z, j, n) for j in range(n)) / 2


@dataclass(frozen=True)
class LindbladProblem:
    hamiltonian: np.ndarray
    dissipators: tuple[tuple[np.ndarray, float], ...]
    rho0: np.ndarray
    n_max: int = ORACLE_N_MAX

    def __post_init__(self):
        h = check_hermitian(np.asarray(self.hamiltonian, dtype=complex), HERM_TOL, "hamiltonian")
        d = h.shape[0]
        n = int(round(math.log2(d)))
        if n > self.n_max:
            raise OracleCapError(f"{n} sites exceeds the oracle cap of {self.n_max}")
        rho0 = check_hermitian(np.asarray(self.rho0, dtype=complex), HERM_TOL, "rho0")
        if rho0.shape != h.shape:
            raise ValueError(f"rho0 shape {rho0.shape} does not match hamiltonian {h.shape}")
        if abs(np.trace(rho0).real - 1) > PSD_TOL:
            raise ValueError("rho0 must have unit trace")
        if np.linalg.eigvalsh(rho0)[0] < -PSD_TOL:
            raise ValueError("rho0 must be positive semidefinite")
        diss = []
        for op, rate in self.dissipators:
            op = np.asarray(op, dtype=complex)
            if op.shape != h.shape:
                raise ValueError(f"jump operator shape {op.shape} does not match {h.shape}")
            if rate < 0:
                raise ValueError(f"dissipation rates must be non-negative, got {rate}")
            diss.append((op, float(rate)))
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "rho0", rho0)
        object.__setattr__(self, "dissipators", tuple(diss))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def gamma_max(self) -> float:
        return max((g for _, g in self.dissipators), default=0.0)

    def stiffness(self) -> float:
        h_norm = np.linalg.norm(self.hamiltonian, 2)
        d_norm = sum(g * np.linalg.norm(op, 2) ** 2 for op, g in self.dissipators)
        return float(max(h_norm, d_norm))


def dephasing_problem(rho0, rates: Sequence[float], phi: float, n_max: int = ORACLE_N_MAX):
    n = len(rates)
    diss = tuple((site_operator(SIGMA_Z, j, n), g) for j, g in enumerate(rates))
    return LindbladProblem(field_hamiltonian(n, phi), diss, rho0, n_max)


def emission_problem(rho0, n: int, gamma: float, phi: float, n_max: int = ORACLE_N_MAX):
    diss = tuple((site_operator(SIGMA_MINUS, j, n), gamma) for j in range(n))
    return LindbladProblem(field_hamiltonian(n, phi), diss, rho0, n_max)


@dataclass(frozen=True)
class IntegratorConfig:
    step: float
    method: str = "rk4"

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.method != "rk4":
            raise ValueError(f"unknown method {self.method!r}")

    @classmethod
    def default_for(cls, problem: LindbladProblem) -> "IntegratorConfig":
        phi = _field_strength(problem)
        scales = [1.0]
        if problem.gamma_max > 0:
            scales.append(1.0 / problem.gamma_max)
        if phi > 0:
            scales.append(1.0 / phi)
        return cls(1e-3 * min(scales))


def _field_strength(problem: LindbladProblem) -> float:
    # H = phi J^z has spectral radius |phi| N / 2
    n = int(round(math.log2(problem.dim)))
    return 2 * np.linalg.norm(problem.hamiltonian, 2) / n if n else 0.0


class _Generator:
    """Precomputed pieces of the Lindblad right-hand side."""

    def __init__(self, p: LindbladProblem):
        ops = [op for op, g in p.dissipators if g > 0]
        rates = np.array([g for _, g in p.dissipators if g > 0])
        self.h_eff = p.hamiltonian.astype(complex)
        if ops:
            ls = np.stack(ops) * np.sqrt(rates)[:, None, None]
            self.ls = ls
            self.ls_dag = ls.conj().transpose(0, 2, 1)
            self.h_eff = self.h_eff - 0.5j * np.einsum("aji,ajk->ik", ls.conj(), ls)
        else:
            self.ls = None
        self.h_eff_dag = self.h_eff.conj().T

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        out = -1j * (self.h_eff @ rho - rho @ self.h_eff_dag)
        if self.ls is not None:
            out += np.sum(self.ls @ rho @ self.ls_dag, axis=0)
        return out


def lindblad_rhs(rho, p: LindbladProblem) -> np.ndarray:
    """``-i[H, rho] + sum_a gamma_a (L rho L^+ - {L^+ L, rho}/2)``, written out term by term."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (p.dim, p.dim):
        raise ValueError(f"rho shape {rho.shape} does not match problem dimension {p.dim}")
    h = p.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for op, g in p.dissipators:
        op_dag = op.conj().T
        ldl = op_dag @ op
        out += g * (op @ rho @ op_dag - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def _check_step(p: LindbladProblem, cfg: IntegratorConfig) -> None:
    stiff = p.stiffness()
    if stiff > 0 and cfg.step > 1e-2 / stiff:
        warnings.warn(
            f"step {cfg.step:g} exceeds the recommended 1e-2/{stiff:g}; RK4 error may be large",
            RuntimeWarning,
            stacklevel=3,
        )


def _rk4_span(gen, rho, span, step, step_offset=0):
    if span == 0:
        return rho, 0
    n_steps = max(1, math.ceil(span / step - 1e-9))
    h = span / n_steps
    for i in range(n_steps):
        k1 = gen(rho)
        k2 = gen(rho + 0.5 * h * k1)
        k3 = gen(rho + 0.5 * h * k2)
        k4 = gen(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(rho)):
            raise IntegrationError(step_offset + i + 1)
    return rho, n_steps


def integrate_trajectory(p: LindbladProblem, times, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """States at each of the ascending, non-negative ``times``.

    Each gap between consecutive sample times is covered by the smallest
    whole number of equal RK4 steps not longer than ``cfg.step``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be a non-negative ascending 1-d array")
    cfg = cfg or IntegratorConfig.default_for(p)
    _check_step(p, cfg)
    gen = _Generator(p)
    out = np.empty((len(times), p.dim, p.dim), dtype=complex)
    rho = p.rho0.copy()
    t_prev = 0.0
    done = 0
    for i, t in enumerate(times):
        rho, k = _rk4_span(gen, rho, t - t_prev, cfg.step, done)
        done += k
        t_prev = t
        out[i] = rho
    return out


def integrate(p: LindbladProblem, t_final: float, cfg: IntegratorConfig | None = None) -> np.ndarray:
    if t_final < 0:
        raise ValueError(f"t_final must be non-negative, got {t_final}")
    return integrate_trajectory(p, [t_final], cfg)[0]


@dataclass(frozen=True)
class TrajectoryComparison:
    max_deviation: float
    worst_time: float
    worst_index: tuple[int, int]
    deviations: np.ndarray = field(repr=False)


def compare_trajectories(
    analytic: Callable[[float], np.ndarray],
    p: LindbladProblem,
    times,
    cfg: IntegratorConfig | None = None,
) -> TrajectoryComparison:
    """Largest entrywise gap between ``analytic(t)`` and the RK4 trajectory."""
    times = np.asarray(times, dtype=float)
    numeric = integrate_trajectory(p, times, cfg)
    worst = -1.0
    worst_t, worst_kl = 0.0, (0, 0)
    devs = np.empty(len(times))
    for i, t in enumerate(times):
        ref = np.asarray(analytic(float(t)))
        if ref.shape != numeric[i].shape:
            raise ValueError(f"propagator returned shape {ref.shape}, problem has {numeric[i].shape}")
        diff = np.abs(ref - numeric[i])
        k, l = np.unravel_index(np.argmax(diff), diff.shape)
        devs[i] = diff[k, l]
        if devs[i] > worst:
            worst, worst_t, worst_kl = float(devs[i]), float(t), (int(k), int(l))
    return TrajectoryComparison(worst, worst_t, worst_kl, devs)
