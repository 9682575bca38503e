"""Closed-form electrochemistry shared by the cell simulator and the analysis.

Everything here is a pure function over immutable inputs. Units are SI
throughout: volts, amps, kelvin, metres, S/m. Degrees Celsius appear only
at user-facing surfaces (config files, logs), never in these formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Reject exponent arguments beyond this instead of saturating, so the
# voltage <-> activity mapping stays invertible.
_MAX_EXP_ARG = 700.0


class DomainError(ValueError):
    """Input outside the physical domain of a formula."""


@dataclass(frozen=True)
class PhysicalConstants:
    """Faraday constant, gas constant and the electron count of the
    O2 + 4e- <-> 2 O2- reaction."""

    faraday: float = 96485.332        # C/mol
    gas_constant: float = 8.31446     # J/(mol K)
    z_electrons: int = 4


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class CellGeometry:
    """Hemispherical micro contact against a much thicker electrolyte."""

    contact_radius_m: float = 100e-6
    reversible_electrode_radius_m: float = 5e-3
    electrolyte_thickness_m: float = 2e-3

    def __post_init__(self):
        if not (self.contact_radius_m > 0):
            raise DomainError("contact_radius_m must be > 0")
        if self.contact_radius_m > self.electrolyte_thickness_m / 10:
            raise DomainError(
                "contact_radius_m must be <= electrolyte_thickness_m / 10 "
                "(the spreading-resistance formula assumes a << thickness)"
            )


@dataclass(frozen=True)
class ReferenceAtmosphere:
    """Fixed oxygen activity at the reversible electrode, at temperature T."""

    a_o2_reversible: float = 0.21
    temperature_k: float = 973.15

    def __post_init__(self):
        if not (self.a_o2_reversible > 0):
            raise DomainError("a_o2_reversible must be > 0")
        if not (self.temperature_k > 0):
            raise DomainError("temperature_k must be > 0")


def nernst_activity(e_app_v: float, ref: ReferenceAtmosphere,
                    consts: PhysicalConstants = CONSTANTS) -> float:
    """Oxygen activity at the blocking contact for an applied voltage.

    a1 = a2 * exp(z * E * F / (R * T)). Strictly increasing in E and
    positive for any finite voltage that does not overflow.
    """
    arg = (consts.z_electrons * e_app_v * consts.faraday
           / (consts.gas_constant * ref.temperature_k))
    if abs(arg) > _MAX_EXP_ARG:
        raise DomainError(
            f"voltage {e_app_v} V drives exp argument {arg:.1f} beyond "
            f"+-{_MAX_EXP_ARG:.0f}; mapping would not be invertible"
        )
    return ref.a_o2_reversible * math.exp(arg)


def nernst_voltage(a1: float, ref: ReferenceAtmosphere,
                   consts: PhysicalConstants = CONSTANTS) -> float:
    """Exact inverse of nernst_activity: (R*T / (z*F)) * ln(a1 / a2)."""
    if not (a1 > 0):
        raise DomainError(f"activity must be > 0, got {a1}")
    return (consts.gas_constant * ref.temperature_k
            / (consts.z_electrons * consts.faraday)
            * math.log(a1 / ref.a_o2_reversible))


def spreading_resistance(geom: CellGeometry, sigma_e: float) -> float:
    """Resistance of a semi-infinite medium seen by a hemispherical contact:
    1 / (2 pi a sigma)."""
    if not (sigma_e > 0):
        raise DomainError(f"conductivity must be > 0, got {sigma_e}")
    return 1.0 / (2.0 * math.pi * geom.contact_radius_m * sigma_e)


def conductivity_from_derivative(di_de: float, geom: CellGeometry) -> float:
    """Electronic conductivity from the local I-V slope: dI/dE / (2 pi a).

    The result may be zero or negative for noisy slopes; repairing such
    points is the analysis module's job, not this formula's.
    """
    return di_de / (2.0 * math.pi * geom.contact_radius_m)
