"""
Missingness package: mechanism templates, coefficient draws and masks
"""

from .mechanism import (
    MechanismForm,
    MechanismKind,
    MechanismSpec,
    MechanismTemplate,
    calibrate_phi0,
    draw_phi,
    make_template,
    observation_probabilities,
    realized_missing_rates,
    simulate_mask,
    transform_drivers,
)

__all__ = [
    "MechanismForm",
    "MechanismKind",
    "MechanismSpec",
    "MechanismTemplate",
    "calibrate_phi0",
    "draw_phi",
    "make_template",
    "observation_probabilities",
    "realized_missing_rates",
    "simulate_mask",
    "transform_drivers",
]
