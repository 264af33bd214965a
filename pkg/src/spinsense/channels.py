"""Exact time propagation under local dephasing and local emission.

Both channels commute with the field Hamiltonian ``phi * J^z``, so the
solutions are closed form in ``t`` and are applied elementwise in the
computational basis.  Sign conventions: ``sigma^z |0> = +|0>`` and
``sigma^- = |1><0|``, so emission drives every spin towards ``|1>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .numerics import HERM_TOL, check_hermitian, parity_vector, popcount, site_difference_masks

TRACE_TOL = 1e-10


@dataclass(frozen=True)
class DephasingChannel:
    rates: tuple[float, ...]
    phi: float = 0.0

    def __post_init__(self):
        rates = tuple(float(r) for r in np.atleast_1d(self.rates))
        if not rates:
            raise ValueError("need at least one dephasing rate")
        if any(r < 0 for r in rates):
            raise ValueError(f"dephasing rates must be non-negative, got {rates}")
        object.__setattr__(self, "rates", rates)

    @classmethod
    def uniform(cls, n: int, gamma: float, phi: float = 0.0) -> "DephasingChannel":
        return cls((gamma,) * n, phi)

    @property
    def n(self) -> int:
        return len(self.rates)


@dataclass(frozen=True)
class EmissionChannel:
    gamma: float
    phi: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"emission rate must be non-negative, got {self.gamma}")


@dataclass(frozen=True)
class ReducedGhzBlock:
    """Density matrix of a GHZ probe restricted to |0...0>, |1...1>.

    ``tail`` lists the remaining (diagonal) populations by number of down
    spins ``n = 1..N-1``, one entry per sector with its multiplicity
    already applied.
    """

    block: np.ndarray
    tail: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.block)

    def total_trace(self) -> float:
        return float(np.trace(self.block).real + np.sum(self.tail))


def _sites(rho0: np.ndarray) -> int:
    d = rho0.shape[0]
    n = int(round(np.log2(d)))
    if 2**n != d:
        raise ValueError(f"dimension {d} is not a power of two")
    return n


def _check_state(rho0) -> np.ndarray:
    rho0 = check_hermitian(np.asarray(rho0, dtype=complex), HERM_TOL, "rho0")
    tr = np.trace(rho0).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"rho0 must have unit trace, got {tr}")
    return rho0


def _phase_factors(n: int, phi: float, t: float) -> np.ndarray:
    # exp(-(i/2) phi t (s_k - s_l))
    s = parity_vector(n)
    return np.exp(-0.5j * phi * t * (s[:, None] - s[None, :]))


def dephasing_propagate(rho0, ch: DephasingChannel, t: float) -> np.ndarray:
    """Evolve ``rho0`` for time ``t`` under local ``sigma^z`` dephasing.

    Element ``(k, l)`` decays as ``exp(-2 t sum_{j: k_j != l_j} gamma_j)`` and
    picks up the phase ``exp(-(i/2) phi t (s_k - s_l))``.
    """
    rho0 = _check_state(rho0)
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    n = _sites(rho0)
    if n != ch.n:
        raise ValueError(f"rho0 has {n} sites but the channel has {ch.n} rates")
    decay = np.tensordot(np.asarray(ch.rates), site_difference_masks(n), axes=1)
    return rho0 * np.exp(-2.0 * t * decay) * _phase_factors(n, ch.phi, t)


def emission_propagate(rho0, ch: EmissionChannel, t: float) -> np.ndarray:
    """Evolve ``rho0`` for time ``t`` under local ``sigma^-`` emission.

    The interaction-picture state is ``prod_j (1 + Lambda L_j) rho0`` with
    ``L_j[rho] = sigma_j^- rho sigma_j^+`` and ``Lambda = 1 - exp(-gamma t)``;
    the diagonal generator ``A`` then supplies decay and phase.
    """
    rho0 = _check_state(rho0)
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    n = _sites(rho0)
    gamma, phi = ch.gamma, ch.phi
    lam = -np.expm1(-gamma * t)

    rho = rho0.copy()
    idx = np.arange(2**n)
    for j in range(n):
        down = idx[(idx >> j) & 1 == 1]
        up = down ^ (1 << j)
        # sigma_j^- rho sigma_j^+ moves the (up, up) block to (down, down)
        rho[np.ix_(down, down)] += lam * rho[np.ix_(up, up)]

    s = parity_vector(n)
    a = (-0.5j * phi - 0.25 * gamma) * s - 0.25 * n * gamma
    return rho * np.exp(t * (a[:, None] + a.conj()[None, :]))


def ghz_dephasing_reduced(n: int, gamma: float, phi: float, t: float) -> ReducedGhzBlock:
    if n < 1 or gamma < 0 or t < 0:
        raise ValueError("need n >= 1, gamma >= 0, t >= 0")
    off = 0.5 * np.exp(-2 * n * gamma * t) * np.exp(-1j * n * phi * t)
    block = np.array([[0.5, off], [np.conj(off), 0.5]], dtype=complex)
    return ReducedGhzBlock(block, np.zeros(max(n - 1, 0)))


def ghz_emission_reduced(n: int, gamma: float, phi: float, t: float) -> ReducedGhzBlock:
    if n < 1 or gamma < 0 or t < 0:
        raise ValueError("need n >= 1, gamma >= 0, t >= 0")
    x = np.exp(-gamma * t)
    lam = -np.expm1(-gamma * t)
    off = 0.5 * x ** (n / 2) * np.exp(-1j * n * phi * t)
    block = np.array([[0.5 * x**n, off], [np.conj(off), 0.5 * (1 + lam**n)]], dtype=complex)
    # Sector with m down spins: Lambda^m e^{(m-N) gamma t} / 2 = Lambda^m x^(N-m) / 2 each.
    tail = np.array([comb(n, m) * 0.5 * lam**m * x ** (n - m) for m in range(1, n)])
    return ReducedGhzBlock(block, tail)


def ghz_emission_block_eigenvalues(n: int, gamma: float, t: float) -> tuple[float, float]:
    """Closed-form ``(lambda_-, lambda_+)`` of the emission GHZ block."""
    x = np.exp(-gamma * t)
    lam = -np.expm1(-gamma * t)
    u_plus = 1 + lam**n + x**n
    u_minus = 1 + lam**n - x**n
    delta = np.sqrt(u_minus**2 + 4 * x**n)
    return (u_plus - delta) / 4, (u_plus + delta) / 4


def extremal_indices(n: int) -> np.ndarray:
    return np.array([0, 2**n - 1])


def restrict_extremal(rho: np.ndarray) -> np.ndarray:
    n = _sites(rho)
    i = extremal_indices(n)
    return rho[np.ix_(i, i)]


def sector_populations(rho: np.ndarray) -> np.ndarray:
    """Diagonal weight summed by number of down spins (0..N)."""
    n = _sites(rho)
    w = popcount(np.arange(2**n))
    diag = np.real(np.diag(rho))
    return np.bincount(w, weights=diag, minlength=n + 1)
