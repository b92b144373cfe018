"""CPT-even photon-sector coefficients and the phase speeds they imply.

The rank-4 coefficient ``k_F`` is stored densely as a ``(4, 4, 4, 4)`` array
with index 0 = time.  Spatial Levi-Civita symbols are Euclidean; the
spacetime metric is ``diag(+1, -1, -1, -1)``.

Direction convention: ``WaveFourVector.east()`` has contravariant components
``(1; 0, 0, +1)``, i.e. East is the +z axis of the experimental frame.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np

C_LIGHT = 299_792_458.0  # m/s, exact

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
_SIGNS = np.diag(METRIC)

VALIDATION_TOL = 1e-12
SIGMA2_CLAMP = 1e-20


class SymmetryError(ValueError):
    """Raised when a tensor or kappa set violates its symmetry constraints."""


class DispersionError(ArithmeticError):
    """Raised when sigma^2 comes out significantly negative."""


def _levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for perm in itertools.permutations(range(3)):
        i, j, k = perm
        eps[perm] = (j - i) * (k - i) * (k - j) / 2
    return eps


EPS3 = _levi_civita()


class Direction(str, Enum):
    EAST = "East"
    WEST = "West"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            for member in cls:
                if member.value.lower() == value.strip().lower():
                    return member
        return None

    @property
    def sign(self) -> int:
        return 1 if self is Direction.EAST else -1

    @property
    def opposite(self) -> "Direction":
        return Direction.WEST if self is Direction.EAST else Direction.EAST


class Branch(str, Enum):
    PLUS = "+"
    MINUS = "-"
    MEAN = "mean"


# ---------------------------------------------------------------------------
# Kappa matrices
# ---------------------------------------------------------------------------


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class KappaSet:
    """Electrodynamic kappa matrices plus the derived experimental set.

    ``kappa_e_plus`` ... ``kappa_o_minus`` are derived on access and never
    stored or serialized.  Use :meth:`validate` (or :func:`kf_from_kappas`,
    which calls it) before trusting a hand-built set.
    """

    kappa_DE: np.ndarray
    kappa_HB: np.ndarray
    kappa_DB: np.ndarray
    kappa_HE: np.ndarray
    kappa_tr: float

    def __post_init__(self):
        for name in ("kappa_DE", "kappa_HB", "kappa_DB", "kappa_HE"):
            object.__setattr__(self, name, _as_matrix(getattr(self, name), name))
        object.__setattr__(self, "kappa_tr", float(self.kappa_tr))

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_electrodynamic(cls, kappa_DE, kappa_HB, kappa_DB) -> "KappaSet":
        de = np.asarray(kappa_DE, dtype=float)
        db = np.asarray(kappa_DB, dtype=float)
        return cls(de, kappa_HB, db, -db.T, np.trace(de) / 3.0)

    @classmethod
    def zero(cls) -> "KappaSet":
        z = np.zeros((3, 3))
        return cls.from_electrodynamic(z, z, z)

    @classmethod
    def isotropic(cls, kappa_tr: float) -> "KappaSet":
        eye = np.eye(3)
        z = np.zeros((3, 3))
        return cls(kappa_tr * eye, -kappa_tr * eye, z, z, kappa_tr)

    @classmethod
    def from_experimental(cls, e_plus, e_minus, o_plus, o_minus, kappa_tr) -> "KappaSet":
        """Invert the experimental decomposition back to the electrodynamic set."""
        e_plus = np.asarray(e_plus, dtype=float)
        e_minus = np.asarray(e_minus, dtype=float)
        iso = kappa_tr * np.eye(3)
        de = e_plus + e_minus + iso
        hb = e_plus - e_minus - iso
        db = np.asarray(o_plus, dtype=float) + np.asarray(o_minus, dtype=float)
        return cls.from_electrodynamic(de, hb, db)

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 1.0) -> "KappaSet":
        """Draw a set obeying every constraint (19 free parameters)."""
        de = rng.normal(scale=scale, size=(3, 3))
        de = (de + de.T) / 2
        hb = rng.normal(scale=scale, size=(3, 3))
        hb = (hb + hb.T) / 2
        hb -= np.eye(3) * (np.trace(hb) + np.trace(de)) / 3
        db = rng.normal(scale=scale, size=(3, 3))
        db -= np.eye(3) * np.trace(db) / 3
        return cls.from_electrodynamic(de, hb, db)

    # -- derived experimental set -------------------------------------------

    @cached_property
    def kappa_e_plus(self) -> np.ndarray:
        return 0.5 * (self.kappa_DE + self.kappa_HB)

    @cached_property
    def kappa_e_minus(self) -> np.ndarray:
        return 0.5 * (self.kappa_DE - self.kappa_HB) - np.eye(3) * np.trace(self.kappa_DE) / 3.0

    @cached_property
    def kappa_o_plus(self) -> np.ndarray:
        return 0.5 * (self.kappa_DB + self.kappa_HE)

    @cached_property
    def kappa_o_minus(self) -> np.ndarray:
        return 0.5 * (self.kappa_DB - self.kappa_HE)

    # -- checks ---------------------------------------------------------------

    def violations(self, tol: float = VALIDATION_TOL) -> list[str]:
        """Every constraint the set breaks, as human-readable strings."""
        out = []
        scale = max(1.0, max(np.abs(m).max() for m in self._matrices()))
        atol = tol * scale
        if np.abs(self.kappa_HE + self.kappa_DB.T).max() > atol:
            out.append("kappa_HE must equal -transpose(kappa_DB)")
        if np.abs(self.kappa_DE - self.kappa_DE.T).max() > atol:
            out.append("kappa_DE must be symmetric")
        if np.abs(self.kappa_HB - self.kappa_HB.T).max() > atol:
            out.append("kappa_HB must be symmetric")
        if abs(np.trace(self.kappa_DB)) > atol:
            out.append("kappa_DB must be traceless (cyclic identity of k_F)")
        if abs(np.trace(self.kappa_DE) + np.trace(self.kappa_HB)) > atol:
            out.append("trace(kappa_DE) + trace(kappa_HB) must vanish (k_F double trace)")
        if abs(self.kappa_tr - np.trace(self.kappa_DE) / 3.0) > atol:
            out.append("kappa_tr must equal trace(kappa_DE)/3")
        return out

    def validate(self, tol: float = VALIDATION_TOL) -> "KappaSet":
        problems = self.violations(tol)
        if problems:
            raise SymmetryError("; ".join(problems))
        return self

    def _matrices(self):
        return (self.kappa_DE, self.kappa_HB, self.kappa_DB, self.kappa_HE)

    def allclose(self, other: "KappaSet", atol: float = 1e-14) -> bool:
        pairs = zip(self._matrices() + (self.kappa_tr,), other._matrices() + (other.kappa_tr,))
        return all(np.allclose(a, b, rtol=0, atol=atol) for a, b in pairs)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "kappa_DE": self.kappa_DE.tolist(),
            "kappa_HB": self.kappa_HB.tolist(),
            "kappa_DB": self.kappa_DB.tolist(),
            "kappa_HE": self.kappa_HE.tolist(),
            "kappa_tr": self.kappa_tr,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KappaSet":
        missing = [k for k in ("kappa_DE", "kappa_HB", "kappa_DB", "kappa_HE", "kappa_tr") if k not in doc]
        if missing:
            raise KeyError(f"kappa document missing field(s): {', '.join(missing)}")
        return cls(doc["kappa_DE"], doc["kappa_HB"], doc["kappa_DB"], doc["kappa_HE"], doc["kappa_tr"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "KappaSet":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "KappaSet":
        return cls.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# The rank-4 tensor
# ---------------------------------------------------------------------------


def riemann_violations(components: np.ndarray) -> dict[str, float]:
    """Largest absolute residual of each symmetry identity."""
    k = components
    return {
        "antisymmetric_first_pair": float(np.abs(k + k.transpose(1, 0, 2, 3)).max()),
        "antisymmetric_second_pair": float(np.abs(k + k.transpose(0, 1, 3, 2)).max()),
        "pair_exchange": float(np.abs(k - k.transpose(2, 3, 0, 1)).max()),
        # k[a,b,m,n] + k[a,m,n,b] + k[a,n,b,m]
        "cyclic": float(np.abs(k + k.transpose(0, 3, 1, 2) + k.transpose(0, 2, 3, 1)).max()),
        "double_trace": float(abs(np.einsum("a,b,abab->", _SIGNS, _SIGNS, k))),
    }


@dataclass(frozen=True, eq=False)
class KFTensor:
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.components, dtype=float)
        if arr.shape != (4, 4, 4, 4):
            raise ValueError(f"k_F must have shape (4, 4, 4, 4), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "components", arr)

    @classmethod
    def zero(cls) -> "KFTensor":
        return cls(np.zeros((4, 4, 4, 4)))

    def violations(self) -> dict[str, float]:
        return riemann_violations(self.components)

    def validate(self, tol: float = VALIDATION_TOL) -> "KFTensor":
        atol = tol * max(1.0, float(np.abs(self.components).max()))
        bad = {k: v for k, v in self.violations().items() if v > atol}
        if bad:
            detail = ", ".join(f"{k}={v:.3g}" for k, v in bad.items())
            raise SymmetryError(f"k_F violates Riemann symmetries: {detail}")
        return self


def kf_from_kappas(k: KappaSet) -> KFTensor:
    """Assemble ``k_F`` from the electrodynamic matrices.

    The time-space-time-space, purely spatial and time-space-space-space
    blocks are filled from ``kappa_DE``, ``kappa_HB`` and ``kappa_DB``;
    the remaining components follow from the index symmetries.
    """
    k.validate()
    kf = np.zeros((4, 4, 4, 4))
    s = slice(1, 4)

    tt = -0.5 * k.kappa_DE
    kf[0, s, 0, s] = tt
    kf[s, 0, s, 0] = tt
    kf[0, s, s, 0] = -tt
    kf[s, 0, 0, s] = -tt

    kf[s, s, s, s] = 0.5 * np.einsum("jpq,krs,jk->pqrs", EPS3, EPS3, k.kappa_HB)

    mixed = 0.5 * np.einsum("jk,kpq->jpq", k.kappa_DB, EPS3)
    kf[0, s, s, s] = mixed
    kf[s, 0, s, s] = -mixed
    kf[s, s, 0, s] = mixed.transpose(1, 2, 0)
    kf[s, s, s, 0] = -mixed.transpose(1, 2, 0)
    return KFTensor(kf)


def decompose_kf(kf: KFTensor) -> KappaSet:
    kf.validate()
    c = kf.components
    s = slice(1, 4)
    de = -2.0 * c[0, s, 0, s]
    hb = 0.5 * np.einsum("jpq,krs,pqrs->jk", EPS3, EPS3, c[s, s, s, s])
    db = np.einsum("jpq,kpq->jk", c[0, s, s, s], EPS3)
    return KappaSet(de, hb, db, -db.T, np.trace(de) / 3.0)


# ---------------------------------------------------------------------------
# Dispersion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveFourVector:
    """Unit wave four-vector, contravariant components ``(p0; p1, p2, p3)``."""

    p_hat: tuple[float, float, float, float]

    def __post_init__(self):
        p = np.asarray(self.p_hat, dtype=float)
        if p.shape != (4,):
            raise ValueError("p_hat needs four components")
        norm = np.linalg.norm(p[1:])
        if norm == 0:
            raise ValueError("spatial part of p_hat must be non-zero")
        p = np.concatenate(([1.0], p[1:] / norm))
        object.__setattr__(self, "p_hat", tuple(float(x) for x in p))

    @classmethod
    def along(cls, direction: Direction | str) -> "WaveFourVector":
        return cls((1.0, 0.0, 0.0, float(Direction(direction).sign)))

    @classmethod
    def east(cls) -> "WaveFourVector":
        return cls.along(Direction.EAST)

    @classmethod
    def west(cls) -> "WaveFourVector":
        return cls.along(Direction.WEST)

    @property
    def covariant(self) -> np.ndarray:
        return METRIC @ np.asarray(self.p_hat)


def contract(kf: KFTensor, p: WaveFourVector) -> np.ndarray:
    """``k^{ab} = k_F^{a m b n} p_m p_n`` with lowered wave vector."""
    p_low = p.covariant
    return np.einsum("ambn,m,n->ab", kf.components, p_low, p_low)


def rho(k_ab: np.ndarray) -> float:
    return float(-0.5 * np.einsum("a,aa->", _SIGNS, k_ab))


def sigma2(k_ab: np.ndarray, rho_value: float | None = None) -> float:
    if rho_value is None:
        rho_value = rho(k_ab)
    k_low = METRIC @ k_ab @ METRIC
    value = float(0.5 * np.sum(k_low * k_ab) - rho_value**2)
    if value < 0.0:
        if value < -SIGMA2_CLAMP:
            raise DispersionError(f"sigma^2 = {value:.3e} is negative beyond round-off")
        value = 0.0
    return value


@dataclass(frozen=True, eq=False)
class DispersionResult:
    k_ab: np.ndarray
    rho: float
    sigma2: float

    @property
    def sigma(self) -> float:
        return float(np.sqrt(max(self.sigma2, 0.0)))

    @property
    def u_plus(self) -> float:
        return C_LIGHT * (1.0 + self.rho + self.sigma)

    @property
    def u_minus(self) -> float:
        return C_LIGHT * (1.0 + self.rho - self.sigma)


def dispersion(kf: KFTensor, p: WaveFourVector) -> DispersionResult:
    k_ab = contract(kf, p)
    r = rho(k_ab)
    return DispersionResult(k_ab, r, sigma2(k_ab, r))


def phase_speed(kf: KFTensor, direction: Direction | str, branch: Branch | str = Branch.MEAN) -> float:
    """Phase speed ``c (1 + rho +/- sigma)``; the default branch drops sigma."""
    d = dispersion(kf, WaveFourVector.along(direction))
    branch = Branch(branch)
    if branch is Branch.PLUS:
        return d.u_plus
    if branch is Branch.MINUS:
        return d.u_minus
    return C_LIGHT * (1.0 + d.rho)


def rho_by_direction(kappas: KappaSet) -> dict[Direction, float]:
    kf = kf_from_kappas(kappas)
    return {d: rho(contract(kf, WaveFourVector.along(d))) for d in Direction}


# Closed forms for propagation along the z axis.  ``axis_sign`` is the third
# *covariant* component of the wave vector, so East-travelling light (p^3=+1)
# has axis_sign = -1.


def rho_axis_closed_form(k: KappaSet, axis_sign: int) -> float:
    d = k.kappa_DE - k.kappa_HB
    db = axis_sign * k.kappa_DB
    return -0.25 * (d[0, 0] + d[1, 1] + 2 * db[1, 0] - 2 * db[0, 1])


def sigma2_axis_closed_form(k: KappaSet, axis_sign: int) -> float:
    D = axis_sign * k.kappa_DB
    E = k.kappa_DE
    H = k.kappa_HB
    total = (
        4 * D[0, 0] ** 2 + 4 * D[0, 1] ** 2 + 8 * D[0, 1] * D[1, 0] + 4 * D[1, 0] ** 2
        - 8 * D[0, 0] * D[1, 1] + 4 * D[1, 1] ** 2 - 4 * D[0, 1] * E[0, 0] - 4 * D[1, 0] * E[0, 0]
        + E[0, 0] ** 2 + 8 * D[0, 0] * E[1, 0] - 8 * D[1, 1] * E[1, 0] + 4 * E[1, 0] ** 2
        + 4 * D[0, 1] * E[1, 1] + 4 * D[1, 0] * E[1, 1] - 2 * E[0, 0] * E[1, 1] + E[1, 1] ** 2
        - 4 * D[0, 1] * H[0, 0] - 4 * D[1, 0] * H[0, 0] + 2 * E[0, 0] * H[0, 0] - 2 * E[1, 1] * H[0, 0]
        + H[0, 0] ** 2 + 8 * D[0, 0] * H[1, 0] - 8 * D[1, 1] * H[1, 0] + 8 * E[1, 0] * H[1, 0]
        + 4 * H[1, 0] ** 2 + 4 * D[0, 1] * H[1, 1] + 4 * D[1, 0] * H[1, 1] - 2 * E[0, 0] * H[1, 1]
        + 2 * E[1, 1] * H[1, 1] - 2 * H[0, 0] * H[1, 1] + H[1, 1] ** 2
    )
    return total / 16.0


# ---------------------------------------------------------------------------


def classic_is_observable(kappa_tr: float, beta: float, beta_sun_dot_beta: float = 0.0) -> float:
    """``nu_E nu_W / nu_0**2`` for a conventional Ives-Stilwell measurement."""
    if not abs(beta) < 1.0:
        raise ValueError(f"|beta| must be < 1, got {beta}")
    return 1.0 + 2.0 * kappa_tr * (beta**2 + 2.0 * beta_sun_dot_beta)
