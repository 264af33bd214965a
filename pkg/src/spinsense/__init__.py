"""Metrological gain and its time integral for N-spin field sensors under local dissipation."""

from .channels import (
    DephasingChannel,
    EmissionChannel,
    dephasing_propagate,
    emission_propagate,
    ghz_dephasing_reduced,
    ghz_emission_reduced,
)
from .metrics import (
    GainCurve,
    SensingScenario,
    closed_form_gain,
    closed_form_img,
    gain_curve,
    gain_ratio_crossover,
    integrated_gain,
    metrological_gain,
    numeric_gain,
    qfi,
    two_qubit_concurrence,
)
from .states import density_from_pure, ghz_state, product_plus_state, single_qubit_delta_state

__version__ = "0.1.0"
