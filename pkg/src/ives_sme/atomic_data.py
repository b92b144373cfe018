"""Atomic structure for the D1 Lambda-systems and their enumeration."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .sme_photon import Direction

SCHEMA = "ives-sme/atomic-data/1"
NU21_CONSISTENCY_HZ = 1e3

_CONSTANT_FIELDS = {
    "nu31": "nu31_hz",
    "nu32": "nu32_hz",
    "nu21": "nu21_hz",
    "gamma31_natural": "gamma31_natural_hz",
    "mass": "mass_kg",
    "mu_B_over_h": "mu_B_over_h_hz_per_tesla",
    "c": "c_mps",
}
_LEVEL_KEYS = ("ground_lower", "ground_upper", "excited")


class AtomicDataError(ValueError):
    pass


@dataclass(frozen=True)
class AtomicConstants:
    nu31: float
    nu32: float
    nu21: float
    gamma31_natural: float
    mass: float
    mu_B_over_h: float
    c: float

    def __post_init__(self):
        for name in _CONSTANT_FIELDS:
            value = getattr(self, name)
            if not value > 0:
                raise AtomicDataError(f"{name} must be positive, got {value!r}")
        if abs(self.nu21 - (self.nu31 - self.nu32)) > NU21_CONSISTENCY_HZ:
            raise AtomicDataError(
                f"nu21 = {self.nu21!r} Hz inconsistent with nu31 - nu32 = "
                f"{self.nu31 - self.nu32!r} Hz (tolerance {NU21_CONSISTENCY_HZ:g} Hz)"
            )


@dataclass(frozen=True)
class HyperfineLevel:
    manifold: str
    F: int
    g_F: Fraction
    m_F: int

    def __post_init__(self):
        if self.manifold not in ("ground", "excited"):
            raise AtomicDataError(f"unknown manifold {self.manifold!r}")
        if abs(self.m_F) > self.F:
            raise AtomicDataError(f"|m_F| = {abs(self.m_F)} exceeds F = {self.F}")
        object.__setattr__(self, "g_F", Fraction(self.g_F))

    @property
    def zeeman_coefficient(self) -> Fraction:
        """``m_F g_F``; multiply by ``mu_B/h * B`` for the shift in Hz."""
        return self.m_F * self.g_F


@dataclass(frozen=True)
class Manifold:
    """F and g_F of one hyperfine manifold, without a magnetic sublevel."""

    manifold: str
    F: int
    g_F: Fraction

    def level(self, m_F: int) -> HyperfineLevel:
        return HyperfineLevel(self.manifold, self.F, self.g_F, m_F)


@dataclass(frozen=True)
class AtomicData:
    constants: AtomicConstants
    ground_lower: Manifold
    ground_upper: Manifold
    excited: Manifold
    default_weights: tuple[float, float] = (1.0, 1.0)
    weight_overrides: dict = field(default_factory=dict)
    source: str = ""

    def weights_for(self, m1: int, m2: int, m3: int) -> tuple[float, float]:
        return self.weight_overrides.get((m1, m2, m3), self.default_weights)

    def to_dict(self) -> dict:
        c = self.constants
        return {
            "schema": SCHEMA,
            "constants": {key: getattr(c, name) for name, key in _CONSTANT_FIELDS.items()},
            "levels": {
                key: {"manifold": m.manifold, "F": m.F, "g_F": str(m.g_F)}
                for key, m in zip(_LEVEL_KEYS, (self.ground_lower, self.ground_upper, self.excited))
            },
            "dipole_weights": {
                "default": {"probe": self.default_weights[0], "coupling": self.default_weights[1]},
                "overrides": [
                    {"m1": k[0], "m2": k[1], "m3": k[2], "probe": v[0], "coupling": v[1]}
                    for k, v in sorted(self.weight_overrides.items())
                ],
            },
        }


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise AtomicDataError(f"missing field {where}{key}")
    return doc[key]


def parse_atomic_data(doc: dict, source: str = "") -> AtomicData:
    schema = _require(doc, "schema", "")
    if schema != SCHEMA:
        raise AtomicDataError(f"unsupported atomic-data schema {schema!r} (expected {SCHEMA!r})")

    raw = _require(doc, "constants", "")
    values = {name: float(_require(raw, key, "constants.")) for name, key in _CONSTANT_FIELDS.items()}
    constants = AtomicConstants(**values)

    levels = _require(doc, "levels", "")
    manifolds = []
    for key in _LEVEL_KEYS:
        entry = _require(levels, key, "levels.")
        manifolds.append(
            Manifold(
                str(_require(entry, "manifold", f"levels.{key}.")),
                int(_require(entry, "F", f"levels.{key}.")),
                Fraction(str(_require(entry, "g_F", f"levels.{key}."))),
            )
        )
    lower, upper, excited = manifolds
    if lower.manifold != "ground" or upper.manifold != "ground":
        raise AtomicDataError("levels.ground_lower and levels.ground_upper must be ground manifolds")
    if {lower.F, upper.F} != {2, 3}:
        raise AtomicDataError("ground manifolds must have F = 2 and F = 3")
    if excited.manifold != "excited" or excited.F != 2:
        raise AtomicDataError("only the F' = 2 excited manifold is supported")

    weights = doc.get("dipole_weights", {})
    default = weights.get("default", {"probe": 1.0, "coupling": 1.0})
    overrides = {
        (int(o["m1"]), int(o["m2"]), int(o["m3"])): (float(o["probe"]), float(o["coupling"]))
        for o in weights.get("overrides", [])
    }
    return AtomicData(
        constants,
        lower,
        upper,
        excited,
        (float(default["probe"]), float(default["coupling"])),
        overrides,
        source,
    )


def load_atomic_data(document=None) -> AtomicData:
    """Load from a path, a JSON string or a dict; ``None`` gives the shipped 85Rb data."""
    if document is None:
        text = resources.files("ives_sme.data").joinpath("rb85_d1.json").read_text()
        return parse_atomic_data(json.loads(text), source="builtin:rb85_d1")
    if isinstance(document, dict):
        return parse_atomic_data(document, source="<dict>")
    if isinstance(document, (str, Path)) and Path(document).exists():
        return parse_atomic_data(json.loads(Path(document).read_text()), source=str(document))
    if isinstance(document, str):
        return parse_atomic_data(json.loads(document), source="<string>")
    raise TypeError(f"cannot load atomic data from {type(document).__name__}")


_DEFAULT = None


def default_atomic_data() -> AtomicData:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_atomic_data()
    return _DEFAULT


# ---------------------------------------------------------------------------
# Lambda-systems
# ---------------------------------------------------------------------------

SIGMA_PLUS = "sigma+"
SIGMA_MINUS = "sigma-"
_DELTA_M = {SIGMA_PLUS: 1, SIGMA_MINUS: -1}

# Probe polarization per beam; the coupling field carries the orthogonal one.
SIGMA_MINUS_PROBE_ASSIGNMENT = {Direction.EAST: SIGMA_MINUS, Direction.WEST: SIGMA_MINUS}
LAB_FIXED_ASSIGNMENT = {Direction.EAST: SIGMA_MINUS, Direction.WEST: SIGMA_PLUS}


@dataclass(frozen=True)
class LambdaSystem:
    """Ground |1>, metastable |2> and excited |3> sublevels for one beam.

    The probe drives |1> <-> |3> and the coupling field |2> <-> |3>.
    """

    state1: HyperfineLevel
    state2: HyperfineLevel
    state3: HyperfineLevel
    probe_weight: float = 1.0
    coupling_weight: float = 1.0
    label: int = 0
    beam_direction: Direction = Direction.EAST

    def __post_init__(self):
        object.__setattr__(self, "beam_direction", Direction(self.beam_direction))
        m1, m2, m3 = self.m_F
        if abs(m3 - m1) != 1 or abs(m3 - m2) != 1 or abs(m2 - m1) != 2:
            raise AtomicDataError(f"m_F triplet {self.m_F} does not form a circular-polarization Lambda")

    @property
    def m_F(self) -> tuple[int, int, int]:
        return (self.state1.m_F, self.state2.m_F, self.state3.m_F)

    @property
    def two_photon_coefficient(self) -> Fraction:
        """``m2 g2 - m1 g1``: the two-photon Zeeman slope in units of mu_B/h."""
        return self.state2.zeeman_coefficient - self.state1.zeeman_coefficient

    @property
    def one_photon_coefficient(self) -> Fraction:
        return self.state3.zeeman_coefficient - self.state1.zeeman_coefficient

    @property
    def magnetically_inert(self) -> bool:
        return self.two_photon_coefficient == 0

    @property
    def class_key(self) -> Fraction:
        """Systems sharing this key shift their line centre identically under kappa_tr."""
        return self.beam_direction.sign * self.two_photon_coefficient

    def two_photon_slope(self, constants: AtomicConstants) -> float:
        """d(delta)/dB in Hz/T."""
        return constants.mu_B_over_h * float(self.two_photon_coefficient)

    def describe(self) -> str:
        m1, m2, m3 = self.m_F
        return f"#{self.label} {self.beam_direction.value} (m1={m1:+d}, m2={m2:+d}, m3={m3:+d})"


def make_lambda_system(
    m_F: tuple[int, int, int],
    beam_direction=Direction.EAST,
    data: AtomicData | None = None,
    label: int = 0,
) -> LambdaSystem:
    data = data or default_atomic_data()
    m1, m2, m3 = m_F
    probe, coupling = data.weights_for(m1, m2, m3)
    return LambdaSystem(
        data.ground_lower.level(m1),
        data.ground_upper.level(m2),
        data.excited.level(m3),
        probe,
        coupling,
        label,
        Direction(beam_direction),
    )


@dataclass(frozen=True)
class Enumeration:
    systems: tuple[LambdaSystem, ...]
    classes: tuple[tuple[LambdaSystem, ...], ...]

    @property
    def contributing(self) -> tuple[LambdaSystem, ...]:
        return tuple(s for s in self.systems if not s.magnetically_inert)

    @property
    def inert(self) -> tuple[LambdaSystem, ...]:
        return tuple(s for s in self.systems if s.magnetically_inert)

    @property
    def counts(self) -> tuple[int, int, int]:
        return len(self.systems), len(self.contributing), len(self.classes)

    def most_sensitive_class_members(self) -> tuple[LambdaSystem, ...]:
        """Contributing systems with the largest |two-photon slope|, one per beam if available."""
        top = max(abs(s.two_photon_coefficient) for s in self.contributing)
        return tuple(s for s in self.contributing if abs(s.two_photon_coefficient) == top)


def enumerate_lambda_systems(
    polarization_assignment: dict | None = None,
    directions=(Direction.EAST, Direction.WEST),
    data: AtomicData | None = None,
) -> Enumeration:
    """All Lambda-systems addressed by the two counter-propagating fields.

    ``polarization_assignment`` maps beam direction to the probe's circular
    polarization (``"sigma+"``/``"sigma-"``); the coupling field has the other.
    Unique-spectrum classes are ordered most magnetically sensitive first.
    """
    data = data or default_atomic_data()
    assignment = {Direction(k): v for k, v in (polarization_assignment or SIGMA_MINUS_PROBE_ASSIGNMENT).items()}
    systems = []
    label = 0
    for direction in (Direction(d) for d in directions):
        pol = assignment[direction]
        if pol not in _DELTA_M:
            raise AtomicDataError(f"unknown polarization {pol!r}")
        dm = _DELTA_M[pol]
        for m1 in range(data.ground_lower.F, -data.ground_lower.F - 1, -1):
            m3 = m1 + dm
            m2 = m3 + dm  # orthogonal coupling: m3 = m2 - dm
            if abs(m3) > data.excited.F or abs(m2) > data.ground_upper.F:
                continue
            label += 1
            systems.append(make_lambda_system((m1, m2, m3), direction, data, label))

    buckets: dict[Fraction, list[LambdaSystem]] = {}
    for s in systems:
        if not s.magnetically_inert:
            buckets.setdefault(s.class_key, []).append(s)
    ordered = sorted(buckets.items(), key=lambda kv: (-abs(kv[0]), len(kv[1]), kv[0]))
    classes = tuple(tuple(v) for _, v in ordered)
    return Enumeration(tuple(systems), classes)
