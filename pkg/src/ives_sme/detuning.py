"""Critical velocity, Zeeman shifts and the one-/two-photon detunings.

All frequencies are ordinary frequencies in Hz.  Detuning functions accept
NumPy arrays for the magnetic field and the beam velocity and broadcast.
Only first-order Doppler shifts are kept.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atomic_data import AtomicConstants, HyperfineLevel, LambdaSystem, default_atomic_data
from .sme_photon import Direction, KappaSet, rho_by_direction

THERMAL_BETA_LIMIT = 1e-4


@dataclass(frozen=True)
class BeamConfig:
    """Atomic beam velocity along the East axis (positive = moving East)."""

    v_at: float | np.ndarray
    c: float = 299_792_458.0

    def __post_init__(self):
        if np.any(np.abs(np.asarray(self.v_at)) / self.c >= THERMAL_BETA_LIMIT):
            raise ValueError(f"|v_at|/c must stay below {THERMAL_BETA_LIMIT:g}")

    @property
    def beta_at(self):
        return np.asarray(self.v_at) / self.c

    @property
    def direction(self) -> Direction:
        v = np.asarray(self.v_at)
        signs = set(np.sign(v[v != 0]).tolist()) if v.ndim else {float(np.sign(v))}
        if len(signs) != 1 or 0.0 in signs:
            raise ValueError("beam direction is ambiguous for this velocity array")
        return Direction.EAST if signs.pop() > 0 else Direction.WEST


@dataclass(frozen=True)
class FieldConfig:
    nu0: float
    omega_p: float
    omega_c: float
    B: float | np.ndarray = 0.0

    def __post_init__(self):
        if not self.nu0 > 0:
            raise ValueError("nu0 must be positive")
        if self.omega_p < 0 or self.omega_c < 0:
            raise ValueError("Rabi frequencies must be non-negative")

    def with_field(self, B) -> "FieldConfig":
        return FieldConfig(self.nu0, self.omega_p, self.omega_c, B)


@dataclass(frozen=True)
class Detunings:
    Delta: float | np.ndarray
    delta: float | np.ndarray


def laser_frequency(constants: AtomicConstants) -> float:
    """Common laser frequency that Doppler-shifts symmetrically onto both legs."""
    return 0.5 * (constants.nu31 + constants.nu32)


def critical_velocity(constants: AtomicConstants) -> float:
    return constants.nu21 / (2.0 * laser_frequency(constants)) * constants.c


def zeeman_shift(level: HyperfineLevel, B, mu_B_over_h: float | None = None):
    if mu_B_over_h is None:
        mu_B_over_h = default_atomic_data().constants.mu_B_over_h
    return mu_B_over_h * float(level.zeeman_coefficient) * np.asarray(B, dtype=float)


def _check_direction(system: LambdaSystem, beam: BeamConfig) -> None:
    if beam.direction is not system.beam_direction:
        raise ValueError(
            f"beam moves {beam.direction.value} but the Lambda-system belongs to the "
            f"{system.beam_direction.value} beam"
        )


def _sr_parts(system, beam, field, constants):
    _check_direction(system, beam)
    mu = constants.mu_B_over_h
    B = np.asarray(field.B, dtype=float)
    # probe = approaching field, coupling = receding field, whichever way the atoms move
    speed_ratio = np.abs(np.asarray(beam.v_at, dtype=float)) / constants.c
    one_photon = (
        (constants.nu31 - field.nu0)
        + mu * float(system.one_photon_coefficient) * B
        - field.nu0 * speed_ratio
    )
    two_photon = (
        constants.nu21
        + mu * float(system.two_photon_coefficient) * B
        - 2.0 * field.nu0 * speed_ratio
    )
    return one_photon, two_photon


def detunings_sr(system: LambdaSystem, beam: BeamConfig, field: FieldConfig,
                 constants: AtomicConstants | None = None) -> Detunings:
    """Special-relativistic one-photon (probe leg) and two-photon detunings."""
    constants = constants or default_atomic_data().constants
    one, two = _sr_parts(system, beam, field, constants)
    return Detunings(one, two)


def lorentz_violating_terms(beam: BeamConfig, field: FieldConfig, kappas: KappaSet,
                            rho_values: dict | None = None):
    """Additive corrections ``(dDelta, ddelta)`` in Hz.

    The probe leg picks up the rho of the probe's own propagation direction,
    which is opposite to the atoms' motion.
    """
    rho_values = rho_values or rho_by_direction(kappas)
    beta = np.asarray(beam.beta_at, dtype=float)
    probe_dir = beam.direction.opposite
    d_one = field.nu0 * beta * rho_values[probe_dir]
    d_two = field.nu0 * beta * (rho_values[Direction.EAST] + rho_values[Direction.WEST])
    return d_one, d_two


def detunings_sme(system: LambdaSystem, beam: BeamConfig, field: FieldConfig, kappas: KappaSet,
                  constants: AtomicConstants | None = None, rho_values: dict | None = None) -> Detunings:
    constants = constants or default_atomic_data().constants
    one, two = _sr_parts(system, beam, field, constants)
    d_one, d_two = lorentz_violating_terms(beam, field, kappas, rho_values)
    return Detunings(one + d_one, two + d_two)


def lv_offset(kappa_tr: float, constants: AtomicConstants | None = None) -> float:
    """Magnitude of the kappa_tr line-centre offset, ``2 kappa_tr nu0 beta``, in Hz at v_c."""
    constants = constants or default_atomic_data().constants
    nu0 = laser_frequency(constants)
    return 2.0 * kappa_tr * nu0 * critical_velocity(constants) / constants.c


def lv_offset_field(kappa_tr: float, slope_hz_per_tesla: float,
                    constants: AtomicConstants | None = None) -> float:
    """The same offset expressed as an equivalent field (T) for a given two-photon slope."""
    return lv_offset(kappa_tr, constants) / abs(slope_hz_per_tesla)
