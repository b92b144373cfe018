"""Lindblad master equation for three- and six-level Lambda systems.

All rates and detunings are ordinary frequencies in Hz; every solver rescales
by the largest rate, so the overall unit cancels.  Density matrices are
vectorized row-major, ``vec(rho)[3*a + b] = rho[a, b]``.

Levels of a single Lambda system are ``|1>`` (lower ground), ``|2>`` (upper
ground) and ``|3>`` (excited).  The probe drives 1-3, the coupling drives 2-3,
and the rotating-frame Hamiltonian is::

    H = [[0,      0,      -Op/2],
         [0,      -delta, -Oc/2],
         [-Op/2,  -Oc/2,  -Delta]]

With this sign of the dipole coupling ``Im rho_31 > 0`` means absorption.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import constants as _sc

from . import _lambda_py

try:  # pragma: no cover - depends on the build
    if os.environ.get("IVES_SME_PURE_PYTHON"):
        raise ImportError("pure-Python backend forced")
    from . import _lambda_kernel as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

BACKENDS = ("compiled", "python") if _compiled is not None else ("python",)
DEFAULT_BACKEND = BACKENDS[0]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


class SingularLiouvillianError(RuntimeError):
    """The steady state is not determined by the generator and the initial state."""


@dataclass(frozen=True)
class DecayRates:
    """Population decay (``Gamma``) and extra pure-dephasing (``gamma``) rates in Hz.

    ``gamma41``, ``gamma52`` and ``gamma63`` only enter the six-level model,
    where they dephase level ``k`` of the first system against level ``k`` of
    the second.
    """

    Gamma31: float
    Gamma32: float
    gamma21: float = 0.0
    gamma31: float = 0.0
    gamma32: float = 0.0
    gamma41: float = 0.0
    gamma52: float = 0.0
    gamma63: float = 0.0

    def __post_init__(self):
        bad = [f.name for f in fields(self) if not (getattr(self, f.name) >= 0.0)]
        if bad:
            raise ValueError(f"decay rates must be finite and non-negative: {', '.join(bad)}")

    @classmethod
    def symmetric(cls, linewidth: float, gamma21: float = 0.0, **extra) -> "DecayRates":
        """Excited state decays with total rate ``linewidth`` split equally between the legs."""
        return cls(Gamma31=0.5 * linewidth, Gamma32=0.5 * linewidth, gamma21=gamma21, **extra)

    @property
    def total(self) -> float:
        return self.Gamma31 + self.Gamma32

    def dephasing_3(self) -> np.ndarray:
        g = np.zeros((3, 3))
        g[0, 1] = g[1, 0] = self.gamma21
        g[0, 2] = g[2, 0] = self.gamma31
        g[1, 2] = g[2, 1] = self.gamma32
        return g

    def dephasing_6(self) -> np.ndarray:
        """Pure-dephasing matrix for the direct sum of two Lambda systems."""
        inner = self.dephasing_3()
        g = np.zeros((6, 6))
        g[:3, :3] = inner
        g[3:, 3:] = inner
        # pairs (k, k+3) have their own rates, mixed pairs reuse the analogous in-block rate
        cross = inner.copy()
        np.fill_diagonal(cross, [self.gamma41, self.gamma52, self.gamma63])
        g[:3, 3:] = cross
        g[3:, :3] = cross.T
        return g

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        n = self.entries.shape
        if len(n) != 2 or n[0] != n[1]:
            raise ValueError("density matrix must be square")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, key):
        return self.entries[key]

    def coherence(self, i: int, j: int) -> complex:
        """``rho_ij`` with 1-based level labels."""
        return complex(self.entries[i - 1, j - 1])

    def populations(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    def violations(self) -> list[str]:
        r = self.entries
        out = []
        if np.max(np.abs(r - r.conj().T)) > HERMITIAN_TOL:
            out.append("not Hermitian")
        if abs(np.trace(r) - 1.0) > TRACE_TOL:
            out.append(f"trace {np.trace(r).real:.3e} differs from 1")
        pops = r.diagonal().real
        if pops.min() < -TRACE_TOL or pops.max() > 1 + TRACE_TOL:
            out.append("population outside [0, 1]")
        if np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min() < -POSITIVITY_TOL:
            out.append("not positive semidefinite")
        return out

    def is_physical(self) -> bool:
        return not self.violations()


def lambda_hamiltonian(Delta: float, delta: float, omega_p: float, omega_c: float) -> np.ndarray:
    return np.array(
        [[0.0, 0.0, -0.5 * omega_p],
         [0.0, -delta, -0.5 * omega_c],
         [-0.5 * omega_p, -0.5 * omega_c, -Delta]],
        dtype=complex,
    )


def _ket_bra(n, i, j):
    op = np.zeros((n, n), dtype=complex)
    op[i, j] = 1.0
    return op


def jump_operators_3(rates: DecayRates) -> list[np.ndarray]:
    return [np.sqrt(rates.Gamma31) * _ket_bra(3, 0, 2), np.sqrt(rates.Gamma32) * _ket_bra(3, 1, 2)]


def jump_operators_6(rates: DecayRates) -> list[np.ndarray]:
    g31, g32 = np.sqrt(rates.Gamma31), np.sqrt(rates.Gamma32)
    return [g31 * _ket_bra(6, 0, 2), g32 * _ket_bra(6, 1, 2),
            g31 * _ket_bra(6, 3, 5), g32 * _ket_bra(6, 4, 5)]


def liouvillian(H: np.ndarray, jumps, dephasing: np.ndarray | None = None) -> np.ndarray:
    """Row-major superoperator of ``-i[H, rho] + sum D[C] rho - gamma_jk rho_jk``."""
    H = np.asarray(H, dtype=complex)
    n = H.shape[0]
    eye = np.eye(n)
    L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for C in jumps:
        CdC = C.conj().T @ C
        L += np.kron(C, C.conj()) - 0.5 * (np.kron(CdC, eye) + np.kron(eye, CdC.T))
    if dephasing is not None:
        L -= np.diag(np.asarray(dephasing, dtype=float).ravel())
    return L


def _null_space(A: np.ndarray, rtol: float) -> np.ndarray:
    _, s, vh = np.linalg.svd(A)
    rank = int(np.count_nonzero(s > rtol * max(s[0], 1.0)))
    return vh[rank:].conj().T


def _trace_row(n: int) -> np.ndarray:
    row = np.zeros(n * n, dtype=complex)
    row[:: n + 1] = 1.0
    return row


def steady_state(L: np.ndarray, rho0: np.ndarray | None = None, constraints=None,
                 rtol: float = 1e-11) -> DensityMatrix:
    """Stationary state of ``L``.

    ``constraints`` is a list of ``(row, functional)`` pairs: each conserved
    functional replaces one redundant row of the generator and is pinned to its
    value on ``rho0`` (the default is the trace, pinned to one).  When that
    system is singular the long-time limit from ``rho0`` is returned instead,
    i.e. the projection of ``rho0`` onto the zero eigenspace along the others.
    """
    L = np.asarray(L, dtype=complex)
    n = int(round(np.sqrt(L.shape[0])))
    start = None if rho0 is None else np.asarray(rho0, dtype=complex)
    scale = np.max(np.abs(L))
    if scale == 0:
        if start is None:
            raise SingularLiouvillianError("generator vanishes and no initial state was given")
        return DensityMatrix(start.copy())
    Ls = L / scale
    if constraints is None:
        constraints = [(0, _trace_row(n))]
    A = Ls.copy()
    b = np.zeros(n * n, dtype=complex)
    for row, functional in constraints:
        A[row] = functional
        b[row] = 1.0 if start is None else functional @ start.ravel()
    try:
        r = np.linalg.solve(A, b).reshape(n, n)
        if np.all(np.isfinite(r)) and _plausible(r):
            return DensityMatrix(_tidy(r))
    except np.linalg.LinAlgError:
        pass
    return _projected(Ls, start, rtol)


def _plausible(r: np.ndarray, tol: float = 1e-6) -> bool:
    pops = r.diagonal()
    return bool(np.all(np.abs(pops.imag) < tol) and pops.real.min() > -tol and pops.real.max() < 1 + tol
                and np.abs(r).max() < 1 + tol)


def _projected(Ls: np.ndarray, start, rtol: float) -> DensityMatrix:
    n = int(round(np.sqrt(Ls.shape[0])))
    right = _null_space(Ls, rtol)
    if start is None:
        raise SingularLiouvillianError(
            f"stationary state is {right.shape[1]}-fold degenerate; an initial state is required"
        )
    left = _null_space(Ls.conj().T, rtol)
    overlap = left.conj().T @ right
    if left.shape[1] != right.shape[1] or np.linalg.svd(overlap, compute_uv=False).min() < 1e-8:
        raise SingularLiouvillianError("zero eigenvalue of the generator is not semisimple")
    vec = right @ np.linalg.solve(overlap, left.conj().T @ start.ravel())
    return DensityMatrix(_tidy(vec.reshape(n, n)))


def _tidy(r: np.ndarray) -> np.ndarray:
    r = 0.5 * (r + r.conj().T)
    return r / np.trace(r).real


def residual(L: np.ndarray, rho: DensityMatrix) -> float:
    return float(np.max(np.abs(L @ rho.entries.ravel())))


def initial_state_3() -> np.ndarray:
    return np.diag([1.0, 0.0, 0.0]).astype(complex)


def initial_state_6() -> np.ndarray:
    return np.diag([0.5, 0.0, 0.0, 0.5, 0.0, 0.0]).astype(complex)


def liouvillian_3(Delta, delta, omega_p, omega_c, rates: DecayRates) -> np.ndarray:
    H = lambda_hamiltonian(Delta, delta, omega_p, omega_c)
    return liouvillian(H, jump_operators_3(rates), rates.dephasing_3())


def liouvillian_6(det_a, det_b, omega_p, omega_c, rates: DecayRates) -> np.ndarray:
    """Two Lambda systems side by side; ``det_a``/``det_b`` are ``(Delta, delta)`` pairs."""
    H = np.zeros((6, 6), dtype=complex)
    H[:3, :3] = lambda_hamiltonian(det_a[0], det_a[1], omega_p, omega_c)
    H[3:, 3:] = lambda_hamiltonian(det_b[0], det_b[1], omega_p, omega_c)
    return liouvillian(H, jump_operators_6(rates), rates.dephasing_6())


def _detuning_pair(det):
    if hasattr(det, "Delta"):
        return float(det.Delta), float(det.delta)
    Delta, delta = det
    return float(Delta), float(delta)


def _weights(system):
    if system is None:
        return 1.0, 1.0
    return system.probe_weight, system.coupling_weight


def steady_state_3(system, det, rates: DecayRates, omega_p: float, omega_c: float) -> DensityMatrix:
    """Steady state of one Lambda system.

    ``det`` is a :class:`~ives_sme.detuning.Detunings` or a ``(Delta, delta)``
    pair.  The system's dipole weights scale the two Rabi frequencies; pass
    ``None`` for unit weights.
    """
    wp, wc = _weights(system)
    Delta, delta = _detuning_pair(det)
    L = liouvillian_3(Delta, delta, wp * omega_p, wc * omega_c, rates)
    return steady_state(L, initial_state_3())


def steady_state_6(systems, det_a, det_b, rates: DecayRates, omega_p: float, omega_c: float) -> DensityMatrix:
    """Two independent Lambda systems, each holding half of the atoms."""
    sys_a, sys_b = systems if systems is not None else (None, None)
    (wpa, wca), (wpb, wcb) = _weights(sys_a), _weights(sys_b)
    H = np.zeros((6, 6), dtype=complex)
    H[:3, :3] = lambda_hamiltonian(*_detuning_pair(det_a), wpa * omega_p, wca * omega_c)
    H[3:, 3:] = lambda_hamiltonian(*_detuning_pair(det_b), wpb * omega_p, wcb * omega_c)
    L = liouvillian(H, jump_operators_6(rates), rates.dephasing_6())
    # populations never cross between the blocks, so each block trace is conserved
    tr_a = np.zeros(36, dtype=complex)
    tr_a[[0, 7, 14]] = 1.0
    tr_b = np.zeros(36, dtype=complex)
    tr_b[[21, 28, 35]] = 1.0
    return steady_state(L, initial_state_6(), constraints=[(0, tr_a), (21, tr_b)])


def weak_probe_coherence(Delta, delta, omega_p, omega_c, rates: DecayRates):
    """Closed-form ``rho_31`` to first order in the probe, all population in ``|1>``."""
    Delta = np.asarray(Delta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    g31 = 0.5 * rates.total + rates.gamma31
    g21 = rates.gamma21 - 1j * delta
    return 0.5j * omega_p * g21 / ((g31 - 1j * Delta) * g21 + 0.25 * omega_c**2)


def solve_lambda_batch(Delta, delta, omega_p, omega_c, rates: DecayRates, backend: str | None = None):
    """Steady states of one Lambda system for many ``(Delta, delta)`` points.

    Returns ``(rho, ok)`` with ``rho`` of shape ``(N, 3, 3)``.  Points where the
    generator is singular are flagged ``ok = False`` and hold zeros.
    """
    backend = backend or DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} unavailable; choose from {BACKENDS}")
    impl = _compiled if backend == "compiled" else _lambda_py
    return impl.solve_lambda_batch(
        np.asarray(Delta, dtype=float), np.asarray(delta, dtype=float),
        float(omega_p), float(omega_c), rates.Gamma31, rates.Gamma32,
        rates.gamma21, rates.gamma31, rates.gamma32,
    )


def lambda_steady_states(Delta, delta, omega_p, omega_c, rates: DecayRates, backend: str | None = None):
    """Like :func:`solve_lambda_batch` but resolves singular points from ``|1><1|``."""
    Delta = np.atleast_1d(np.asarray(Delta, dtype=float))
    delta = np.broadcast_to(np.asarray(delta, dtype=float), Delta.shape).copy()
    rho, ok = solve_lambda_batch(Delta.ravel(), delta.ravel(), omega_p, omega_c, rates, backend)
    for i in np.flatnonzero(~ok):
        rho[i] = steady_state_3(None, (Delta.ravel()[i], delta.ravel()[i]), rates, omega_p, omega_c).entries
    return rho.reshape(Delta.shape + (3, 3))


@dataclass(frozen=True)
class SusceptibilityInputs:
    """Prefactor ``2N / (eps0 E0 V)`` and transition dipoles.

    ``SusceptibilityInputs.unit()`` sets the prefactor to one, which is what
    the line-shape code uses.
    """

    n_atoms: float
    volume: float
    field_amplitude: float
    eps0: float = _sc.epsilon_0
    mu13: float = 1.0
    mu23: float = 0.0
    mu46: float = 1.0
    mu56: float = 0.0

    def __post_init__(self):
        if not (self.n_atoms >= 0 and self.volume > 0 and self.field_amplitude > 0 and self.eps0 > 0):
            raise ValueError("need n_atoms >= 0 and positive volume, field amplitude and eps0")

    @classmethod
    def unit(cls, **dipoles) -> "SusceptibilityInputs":
        return cls(n_atoms=0.5, volume=1.0, field_amplitude=1.0, eps0=1.0, **dipoles)

    @property
    def prefactor(self) -> float:
        return 2.0 * self.n_atoms / (self.eps0 * self.field_amplitude * self.volume)

    def with_atoms(self, n_atoms: float) -> "SusceptibilityInputs":
        return SusceptibilityInputs(n_atoms, self.volume, self.field_amplitude, self.eps0,
                                    self.mu13, self.mu23, self.mu46, self.mu56)


@dataclass(frozen=True)
class Susceptibility:
    chi: complex
    contributions: tuple = field(default=())

    @property
    def real(self) -> float:
        return self.chi.real

    @property
    def imag(self) -> float:
        return self.chi.imag


def susceptibility(rho: DensityMatrix | np.ndarray, inputs: SusceptibilityInputs | None = None) -> Susceptibility:
    """Probe susceptibility from the optical coherences of a 3- or 6-level state."""
    inputs = inputs or SusceptibilityInputs.unit()
    r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    terms = [inputs.mu13 * r[2, 0], inputs.mu23 * r[2, 1]]
    if r.shape[0] == 6:
        terms += [inputs.mu46 * r[5, 3], inputs.mu56 * r[5, 4]]
    elif r.shape[0] != 3:
        raise ValueError("susceptibility needs a 3- or 6-level density matrix")
    parts = tuple(complex(inputs.prefactor * t) for t in terms)
    return Susceptibility(complex(sum(parts)), parts)
