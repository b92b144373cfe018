"""Magnetic-field sweeps, thermal velocity averaging and splitting extraction.

The observable is the probe absorption ``Im chi`` as a function of the bias
field ``B``.  For each Lambda-system the two-photon resonance sits where the
Zeeman shift cancels the Lorentz-violating offset, so dips of the two beams
move in opposite directions and their separation measures ``kappa_tr``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _sc
from scipy.signal import find_peaks

from .atomic_data import AtomicData, LambdaSystem, default_atomic_data
from .detuning import BeamConfig, FieldConfig, critical_velocity, detunings_sme, laser_frequency
from .liouville import DecayRates, SusceptibilityInputs, solve_lambda_batch, steady_state_3
from .sme_photon import KappaSet, rho_by_direction

CONVERGENCE_RTOL = 1e-3
MIN_QUADRATURE_POINTS = 21
MIN_SWEEP_POINTS = 51


class SpectrumError(RuntimeError):
    """A sweep could not be completed; carries the offending ``(B, v, system)``."""

    def __init__(self, message: str, B=None, v=None, system=None):
        super().__init__(message)
        self.B, self.v, self.system = B, v, system


class NoMinimumError(ValueError):
    pass


@dataclass(frozen=True)
class VelocityDistribution:
    """Fixed quadrature window around the critical speed.

    ``center`` is a speed; each Lambda-system's beam direction supplies the
    sign, so one distribution serves both beams.
    """

    temperature: float
    mass: float
    center: float
    half_width: float
    quadrature_points: int = 101

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        if self.quadrature_points < MIN_QUADRATURE_POINTS or self.quadrature_points % 2 == 0:
            raise ValueError(f"quadrature_points must be odd and >= {MIN_QUADRATURE_POINTS}")
        if not (self.temperature > 0 and self.mass > 0 and self.center >= 0):
            raise ValueError("temperature and mass must be positive and center non-negative")

    @classmethod
    def around_critical(cls, data: AtomicData | None = None, half_width: float = 4.4,
                        quadrature_points: int = 101, temperature: float = 300.0) -> "VelocityDistribution":
        data = data or default_atomic_data()
        return cls(temperature, data.constants.mass, critical_velocity(data.constants),
                   half_width, quadrature_points)

    def replace(self, **changes) -> "VelocityDistribution":
        values = dict(temperature=self.temperature, mass=self.mass, center=self.center,
                      half_width=self.half_width, quadrature_points=self.quadrature_points)
        values.update(changes)
        return VelocityDistribution(**values)

    def density(self, v):
        """One-dimensional Maxwell-Boltzmann density of the velocity component."""
        kT = _sc.k * self.temperature
        v = np.asarray(v, dtype=float)
        return np.sqrt(self.mass / (2 * np.pi * kT)) * np.exp(-self.mass * v**2 / (2 * kT))

    def nodes(self, sign: int = 1):
        """Signed velocities and weights (quadrature weight times density)."""
        x, w = np.polynomial.legendre.leggauss(self.quadrature_points)
        v = sign * (self.center + self.half_width * x)
        return v, w * self.half_width * self.density(v)

    def window_probability(self) -> float:
        return float(self.nodes()[1].sum())


@dataclass(frozen=True)
class ThermalAverage:
    integral: float
    window_probability: float
    converged: bool | None = None
    relative_change: float | None = None

    @property
    def mean(self) -> float:
        """Velocity-averaged value, the integral divided by the window's probability."""
        return self.integral / self.window_probability


def _im_chi(system: LambdaSystem, B, v, field: FieldConfig, kappas: KappaSet, rates: DecayRates,
            data: AtomicData, chi_inputs: SusceptibilityInputs, backend, rho_values):
    """``Im chi`` on the outer product of field values ``B`` and velocities ``v``."""
    B = np.atleast_1d(np.asarray(B, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    det = detunings_sme(system, BeamConfig(v[None, :], data.constants.c),
                        field.with_field(B[:, None]), kappas, data.constants, rho_values)
    Delta, delta = np.broadcast_arrays(det.Delta, det.delta)
    omega_p = field.omega_p * system.probe_weight
    omega_c = field.omega_c * system.coupling_weight
    rho, ok = solve_lambda_batch(Delta.ravel(), delta.ravel(), omega_p, omega_c, rates, backend)
    for i in np.flatnonzero(~ok):
        try:
            rho[i] = steady_state_3(system, (Delta.flat[i], delta.flat[i]), rates,
                                        field.omega_p, field.omega_c).entries
        except Exception as exc:  # report the grid point that broke
            bi, vi = np.unravel_index(i, Delta.shape)
            raise SpectrumError(f"steady state failed for {system.describe()} at B={B[bi]:.6e} T, "
                                f"v={v[vi]:.6e} m/s: {exc}", B[bi], v[vi], system) from exc
    mu13 = chi_inputs.mu13 * system.probe_weight
    return chi_inputs.prefactor * mu13 * rho[:, 2, 0].imag.reshape(Delta.shape)


def thermal_average_grid(system, B, field, kappas, dist, rates, *, data=None, chi_inputs=None,
                         backend=None, rho_values=None) -> np.ndarray:
    """``int Im chi(B, v) P(v) dv`` for every field value in ``B``."""
    data = data or default_atomic_data()
    chi_inputs = chi_inputs or SusceptibilityInputs.unit()
    rho_values = rho_values or rho_by_direction(kappas)
    v, w = dist.nodes(system.beam_direction.sign)
    values = _im_chi(system, B, v, field, kappas, rates, data, chi_inputs, backend, rho_values)
    return values @ w


def thermal_average(system: LambdaSystem, field: FieldConfig, kappas: KappaSet,
                    dist: VelocityDistribution, rates: DecayRates, *, data=None, chi_inputs=None,
                    backend=None, check_convergence: bool = True) -> ThermalAverage:
    """Velocity-integrated ``Im chi`` at the single field ``field.B``.

    With ``check_convergence`` the integral is repeated on ``2n + 1`` nodes and
    flagged unconverged if it moves by more than 0.1%.
    """
    kw = dict(data=data, chi_inputs=chi_inputs, backend=backend)
    value = float(thermal_average_grid(system, [float(field.B)], field, kappas, dist, rates, **kw)[0])
    converged = change = None
    if check_convergence:
        fine = dist.replace(quadrature_points=2 * dist.quadrature_points + 1)
        refined = float(thermal_average_grid(system, [float(field.B)], field, kappas, fine, rates, **kw)[0])
        change = abs(refined - value) / max(abs(refined), np.finfo(float).tiny)
        converged = change <= CONVERGENCE_RTOL
    return ThermalAverage(value, dist.window_probability(), converged, change)


def single_velocity_grid(system, B, field, kappas, rates, speed, *, data=None, chi_inputs=None,
                         backend=None) -> np.ndarray:
    """``Im chi`` versus ``B`` for a mono-energetic beam (the zero-width window limit)."""
    data = data or default_atomic_data()
    chi_inputs = chi_inputs or SusceptibilityInputs.unit()
    v = system.beam_direction.sign * abs(speed)
    return _im_chi(system, B, [v], field, kappas, rates, data, chi_inputs, backend,
                   rho_by_direction(kappas))[:, 0]


def minmax_normalize(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    span = y.max() - y.min()
    return np.zeros_like(y) if span == 0 else (y - y.min()) / span


@dataclass(frozen=True)
class Extremum:
    B: float
    depth: float
    index: int


@dataclass(frozen=True)
class Extrema:
    minima: tuple[Extremum, ...]
    merged: bool = False

    def __iter__(self):
        return iter(self.minima)

    def __len__(self):
        return len(self.minima)

    @property
    def locations(self) -> np.ndarray:
        return np.array([m.B for m in self.minima])

    def closest_to(self, B: float) -> Extremum:
        return min(self.minima, key=lambda m: abs(m.B - B))


@dataclass
class Spectrum:
    B_grid: np.ndarray
    absorption: np.ndarray
    labels: tuple
    per_system: dict = field(default_factory=dict)
    normalization: str = "figure"
    converged: np.ndarray | None = None

    def __post_init__(self):
        self.B_grid = np.asarray(self.B_grid, dtype=float)
        self.absorption = np.asarray(self.absorption, dtype=float)
        if np.any(np.diff(self.B_grid) <= 0):
            raise ValueError("B_grid must be strictly increasing")
        if not np.all(np.isfinite(self.absorption)):
            raise ValueError("absorption contains non-finite values")

    @property
    def extrema(self) -> Extrema:
        return extract_extrema(self)

    def component(self, label) -> "Spectrum":
        return Spectrum(self.B_grid, self.per_system[label], (label,), normalization=self.normalization)

    def combine(self, labels) -> "Spectrum":
        labels = tuple(labels)
        return Spectrum(self.B_grid, sum(self.per_system[k] for k in labels), labels,
                        normalization=self.normalization)


def _quadratic_vertex(x, y, i):
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a <= 0:
        return x1, y1
    xv = -b / (2 * a)
    xv = min(max(xv, x0), x2)
    return xv, y1 + a * (xv - x1) ** 2 + (2 * a * x1 + b) * (xv - x1)


def extract_extrema(spec, y=None, *, expected: int | None = None,
                    prominence: float = 0.05) -> Extrema:
    """Local absorption minima refined by a three-point parabola.

    Accepts a :class:`Spectrum` or ``(B, y)`` arrays.  Minima shallower than
    ``prominence`` times the data range are ignored.  ``expected`` is the
    number of dips the caller knows to be present; finding fewer sets
    ``merged``.  Results are ordered by depth, equal depths by ``|B|``.
    """
    if isinstance(spec, Spectrum):
        x, y = spec.B_grid, spec.absorption
    else:
        x, y = np.asarray(spec, dtype=float), np.asarray(y, dtype=float)
    if x.size < 3:
        raise NoMinimumError("need at least three samples")
    span = float(y.max() - y.min())
    if span == 0:
        raise NoMinimumError("data are constant")
    peaks, _ = find_peaks(-y, prominence=prominence * span)
    found = []
    for i in peaks:
        # centre of a flat-bottomed run, ties going to the smaller |B|
        run = np.flatnonzero(y == y[i])
        run = run[(run >= i) & (np.cumsum(np.diff(np.r_[i, run]) > 1) == 0)]
        if run.size > 1:
            mids = run[(run.size - 1) // 2: run.size // 2 + 1]
            i = int(min(mids, key=lambda j: abs(x[j])))
        xv, yv = _quadratic_vertex(x, y, i) if 0 < i < x.size - 1 else (x[i], y[i])
        found.append(Extremum(float(xv), float(y.max() - yv), int(i)))
    if not found:
        raise NoMinimumError("no interior minimum; the data are monotone or too shallow")
    found.sort(key=lambda m: (-m.depth, abs(m.B)))
    merged = expected is not None and len(found) < expected
    return Extrema(tuple(found), merged)


def field_grid(half_range: float, n_points: int) -> np.ndarray:
    if n_points < MIN_SWEEP_POINTS:
        raise ValueError(f"n_points must be >= {MIN_SWEEP_POINTS}")
    if not half_range > 0:
        raise ValueError("half_range must be positive")
    return np.linspace(-half_range, half_range, n_points)


def sweep_spectrum(systems, field: FieldConfig, kappas: KappaSet, dist: VelocityDistribution | None,
                   B_range, n_points: int, rates: DecayRates, *, normalization: str = "figure",
                   data=None, chi_inputs=None, backend=None) -> Spectrum:
    """Absorption of every system versus ``B`` and their sum.

    ``B_range`` is ``(B_min, B_max)`` or a half-width.  ``dist=None`` uses a
    single velocity at the window centre.  With ``normalization="figure"``
    every system is scaled to its own maximum before summing; ``"physical"``
    sums the raw ``Im chi``.
    """
    if normalization not in ("figure", "physical"):
        raise ValueError("normalization must be 'figure' or 'physical'")
    data = data or default_atomic_data()
    if np.ndim(B_range) == 0:
        B_range = (-float(B_range), float(B_range))
    lo, hi = B_range
    grid = field_grid(0.5 * (hi - lo), n_points) + 0.5 * (hi + lo)
    kw = dict(data=data, chi_inputs=chi_inputs, backend=backend)
    per = {}
    for s in systems:
        if dist is None:
            y = single_velocity_grid(s, grid, field, kappas, rates, critical_velocity(data.constants), **kw)
        else:
            y = thermal_average_grid(s, grid, field, kappas, dist, rates, **kw)
        if normalization == "figure":
            peak = np.max(np.abs(y))
            y = y / peak if peak > 0 else y
        per[s.label] = y
    total = sum(per.values()) if per else np.zeros_like(grid)
    return Spectrum(grid, total, tuple(per), per, normalization)


@dataclass(frozen=True)
class KappaEstimate:
    kappa_tr: float
    upper_bound: bool = False
    bound: float | None = None


def estimate_kappa_tr(delta_xi: float, slope_hz_per_tesla: float, constants=None, *,
                      merged: bool = False, beta: float | None = None) -> KappaEstimate:
    """Invert the East-West splitting ``delta_xi`` (T) for ``kappa_tr``.

    A merged or negative splitting only bounds the coefficient: the estimate is
    zero and ``bound`` holds the value the splitting magnitude would imply.
    """
    constants = constants or default_atomic_data().constants
    beta = critical_velocity(constants) / constants.c if beta is None else beta
    value = abs(delta_xi) * abs(slope_hz_per_tesla) / (4.0 * laser_frequency(constants) * beta)
    if merged or delta_xi < 0:
        return KappaEstimate(0.0, True, value)
    return KappaEstimate(value)


@dataclass(frozen=True)
class SplittingResult:
    xi_east: float
    xi_west: float
    delta_xi: float
    kappa_tr_estimate: float
    upper_bound: bool = False
    signed_kappa_tr: float | None = None


def measure_splitting(east: Spectrum, west: Spectrum, slope_hz_per_tesla: float, constants=None,
                      *, prominence: float = 0.05) -> SplittingResult:
    """Splitting between the deepest dips of one East and one West class spectrum.

    ``slope_hz_per_tesla`` is the two-photon slope of the East class.  The
    signed estimate uses the direction of the East dip: a positive
    ``kappa_tr`` pushes it to the side where the Zeeman shift is positive.
    """
    constants = constants or default_atomic_data().constants
    e = extract_extrema(east, prominence=prominence).minima[0]
    w = extract_extrema(west, prominence=prominence).minima[0]
    delta_xi = abs(e.B - w.B)
    est = estimate_kappa_tr(delta_xi, slope_hz_per_tesla, constants)
    beta = critical_velocity(constants) / constants.c
    signed = slope_hz_per_tesla * (e.B - w.B) / (4.0 * laser_frequency(constants) * beta)
    return SplittingResult(e.B, w.B, delta_xi, est.kappa_tr, est.upper_bound, float(signed))
