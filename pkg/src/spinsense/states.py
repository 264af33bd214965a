"""Initial probe states and their density matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_MAX = 12
NORM_TOL = 1e-12


@dataclass(frozen=True)
class PureState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n,):
            raise ValueError(f"expected {2**self.n} amplitudes for {self.n} sites, got {amps.shape}")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


def _check_n(n: int) -> int:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= N_MAX:
        raise ValueError(f"site count must be an integer in [1, {N_MAX}], got {n!r}")
    return int(n)


def ghz_state(n: int) -> PureState:
    """(|00...0> + |11...1>)/sqrt(2) on ``n`` sites."""
    n = _check_n(n)
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return PureState(n, amps)


def product_plus_state(n: int) -> PureState:
    n = _check_n(n)
    return PureState(n, np.full(2**n, 2.0 ** (-n / 2), dtype=complex))


def single_qubit_delta_state(delta: float, phase: float = 0.0) -> PureState:
    """One spin with |alpha|^2 = (1 + delta)/2, the phase riding on |1>."""
    if not -1.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [-1, 1], got {delta}")
    alpha = np.sqrt((1 + delta) / 2)
    beta = np.sqrt((1 - delta) / 2) * np.exp(1j * phase)
    return PureState(1, np.array([alpha, beta], dtype=complex))


def density_from_pure(psi: PureState) -> np.ndarray:
    a = psi.amplitudes
    return np.outer(a, a.conj())
