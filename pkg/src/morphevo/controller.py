"""Decentralized sine-wave joint control.

Each joint tracks a target angle

    theta_i = A * sin(phi_i + P) + O,      phi_i = phi_{i-1} + dphi * F

where A (amplitude) and P (phase offset) are the learnable parameters, O is
a fixed offset (default 0) and F a fixed frequency multiplier (default 4).
The returned target is dimensionless in [-A+O, A+O]; the simulator scales it
by its maximum deflection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .genotype import TWO_PI, ControllerParams

DEFAULT_FREQUENCY = 4.0
DEFAULT_OFFSET = 0.0


@dataclass
class SineState:
    phi: float
    params: ControllerParams
    offset: float = DEFAULT_OFFSET
    frequency: float = DEFAULT_FREQUENCY


def step_phase(phi_prev: float, delta_phi: float, frequency: float = DEFAULT_FREQUENCY) -> float:
    """Advance the accumulated phase by one tick (unwrapped)."""
    if delta_phi < 0:
        raise ValueError("delta_phi must be non-negative")
    return phi_prev + delta_phi * frequency


def joint_target(state: SineState) -> float:
    """Dimensionless target angle of one joint at its current phase."""
    p = state.params
    return p.amplitude * math.sin(state.phi + p.phase_offset) + state.offset


def mirrored_params(p: ControllerParams, alternating: bool) -> ControllerParams:
    """Parameters of the mirror-side joint: identical, or anti-phase when the
    genotype's alternating flag is set."""
    if not alternating:
        return p
    return ControllerParams(p.amplitude, (p.phase_offset + math.pi) % TWO_PI)
