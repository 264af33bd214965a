"""Small fixtures shared across test modules."""

import warnings

import numpy as np

from spinsense import oracle, states
from spinsense.channels import DephasingChannel, EmissionChannel, dephasing_propagate, emission_propagate


def pure_rho(state: str, n: int) -> np.ndarray:
    psi = states.ghz_state(n) if state == "ghz" else states.product_plus_state(n)
    return states.density_from_pure(psi)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def rk4_errors(channel: str, n: int, steps, t=1.0, g=1.0, phi=1.0) -> list[float]:
    """Max entrywise RK4 error against the exact propagator, one per step size."""
    rho0 = pure_rho("ghz", n)
    if channel == "dephasing":
        p = oracle.dephasing_problem(rho0, [g] * n, phi)
        exact = dephasing_propagate(rho0, DephasingChannel.uniform(n, g, phi), t)
    else:
        p = oracle.emission_problem(rho0, n, g, phi)
        exact = emission_propagate(rho0, EmissionChannel(g, phi), t)
    with warnings.catch_warnings():
        # the large steps are deliberate here
        warnings.simplefilter("ignore", RuntimeWarning)
        return [float(np.max(np.abs(oracle.integrate(p, t, oracle.IntegratorConfig(h)) - exact))) for h in steps]
