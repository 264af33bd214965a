"""Numerical kernels shared by the rest of the package.

Hermitian eigendecomposition with a checked contract, adaptive Simpson
quadrature, and helpers for the computational spin basis. Bit ``j`` of a
basis index stores the state of site ``j + 1``; ``0`` is spin up.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

EIG_TOL = 1e-10
HERM_TOL = 1e-12
QUAD_MAX_DEPTH = 40


class NotHermitianError(ValueError):
    """Raised when a matrix that must be Hermitian is not."""

    def __init__(self, asymmetry: float, tol: float):
        self.asymmetry = asymmetry
        super().__init__(f"matrix is not Hermitian: max |M - M^H| = {asymmetry:.3e} > {tol:.1e}")


class EigenSolverError(RuntimeError):
    pass


class QuadratureError(RuntimeError):
    """Adaptive quadrature hit its depth cap before meeting the tolerance.

    The best available estimate and its error are kept on the exception.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class EigDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def max_asymmetry(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)))


def check_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    return m


def check_hermitian(m: np.ndarray, tol: float = HERM_TOL, name: str = "matrix") -> np.ndarray:
    m = check_square(m, name)
    asym = max_asymmetry(m)
    if asym > tol:
        raise NotHermitianError(asym, tol)
    return m


def hermitian_eig(m: np.ndarray, tol: float = EIG_TOL) -> EigDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back ascending, eigenvectors as orthonormal columns.
    The input is symmetrised before the dense solver is called, so an
    asymmetry below ``tol`` never leaks into the spectrum.
    """
    m = check_hermitian(m, tol)
    herm = 0.5 * (m + m.conj().T)
    try:
        w, v = np.linalg.eigh(herm)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge on {m.shape} matrix: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
        raise EigenSolverError("eigensolver returned non-finite values")
    return EigDecomposition(w, v)


def adaptive_quadrature(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 0.0,
    max_depth: int = QUAD_MAX_DEPTH,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]`` with adaptive Simpson.

    Each panel is compared against its two halves; the difference serves as
    the error estimate and the Richardson-corrected value is kept, which
    makes the rule exact for polynomials through degree five.  Panels are
    halved, worst first, until the summed estimate meets the target; no
    panel is split beyond ``max_depth`` levels.

    Returns
    -------
    value, error
        The integral estimate and the summed error estimate.
    """
    a = float(a)
    b = float(b)
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if not 0.0 < rel_tol <= 1e-2:
        raise ValueError(f"rel_tol must lie in (0, 1e-2], got {rel_tol}")

    fa, fm, fb = float(f(a)), float(f(0.5 * (a + b))), float(f(b))
    for v in (fa, fm, fb):
        if not math.isfinite(v):
            raise ValueError("integrand is not finite on the interval")
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0

    # A coarse 9-point composite pass sets the scale for the relative target.
    xs = np.linspace(a, b, 9)
    ys = [float(f(x)) for x in xs]
    h = (b - a) / 8
    coarse = h / 3.0 * (ys[0] + ys[-1] + 4 * sum(ys[1:-1:2]) + 2 * sum(ys[2:-1:2]))
    scale = max(abs(coarse), abs(whole))
    total, err_total = _simpson_pass(f, a, b, fa, fm, fb, whole, _target(rel_tol, scale, abs_tol), max_depth)
    if err_total > max(rel_tol * abs(total), abs_tol):
        # the coarse pass overestimated the scale; retry against the actual value
        total, err_total = _simpson_pass(
            f, a, b, fa, fm, fb, whole, _target(rel_tol, abs(total), abs_tol), max_depth
        )
    return total, err_total


def _target(rel_tol, scale, abs_tol):
    eps = max(rel_tol * scale, abs_tol)
    return eps if eps > 0.0 else np.finfo(float).tiny


def _panel(f, lo, hi, flo, fmid, fhi, whole, depth):
    mid = 0.5 * (lo + hi)
    flm = float(f(0.5 * (lo + mid)))
    frm = float(f(0.5 * (mid + hi)))
    if not (math.isfinite(flm) and math.isfinite(frm)):
        raise ValueError("integrand is not finite on the interval")
    left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
    right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
    diff = left + right - whole
    # |diff| rather than |diff|/15 is the panel error: the asymptotic
    # factor undershoots on wide panels.
    return (-abs(diff) / 15.0, lo, hi, depth, (flo, flm, fmid, frm, fhi), left, right, diff)


def _simpson_pass(f, a, b, fa, fm, fb, whole, eps, max_depth):
    """Globally adaptive Simpson: always halve the panel with the largest error."""
    heap = [_panel(f, a, b, fa, fm, fb, whole, 0)]
    err_total = -heap[0][0]
    while err_total > eps:
        worst = heap[0]
        if worst[3] >= max_depth:
            total = sum(p[5] + p[6] + p[7] / 15.0 for p in heap)
            raise QuadratureError(
                f"adaptive Simpson reached depth {max_depth} without meeting tolerance",
                total,
                err_total,
            )
        heapq.heappop(heap)
        _, lo, hi, depth, (flo, flm, fmid, frm, fhi), left, right, _ = worst
        mid = 0.5 * (lo + hi)
        for child in (
            _panel(f, lo, mid, flo, flm, fmid, left, depth + 1),
            _panel(f, mid, hi, fmid, frm, fhi, right, depth + 1),
        ):
            heapq.heappush(heap, child)
        err_total = sum(-p[0] for p in heap)
    total = math.fsum(p[5] + p[6] + p[7] / 15.0 for p in heap)
    return total, err_total


def popcount(k) -> np.ndarray | int:
    if isinstance(k, (int, np.integer)):
        return int(k).bit_count()
    k = np.asarray(k, dtype=np.int64)
    out = np.zeros_like(k)
    while np.any(k):
        out += k & 1
        k = k >> 1
    return out


def spin_parity_sum(k: int, n: int) -> int:
    """Sum over sites of ``(-1)**k_j``, i.e. ``n - 2 * popcount(k)``."""
    if n < 1 or not 0 <= k < 2**n:
        raise ValueError(f"basis index {k} out of range for {n} sites")
    return n - 2 * popcount(k)


@lru_cache(maxsize=None)
def parity_vector(n: int) -> np.ndarray:
    """``spin_parity_sum`` for every basis index, as a read-only float array."""
    s = (n - 2 * popcount(np.arange(2**n))).astype(float)
    s.setflags(write=False)
    return s


@lru_cache(maxsize=None)
def site_difference_masks(n: int) -> np.ndarray:
    """``masks[j, k, l] = 1`` where basis states ``k`` and ``l`` differ at site ``j``."""
    idx = np.arange(2**n)
    diff = idx[:, None] ^ idx[None, :]
    masks = np.stack([(diff >> j) & 1 for j in range(n)]).astype(float)
    masks.setflags(write=False)
    return masks


def hamming_matrix(n: int) -> np.ndarray:
    return site_difference_masks(n).sum(axis=0).astype(int)
