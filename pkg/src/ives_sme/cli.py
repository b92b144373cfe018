"""Command-line driver: ``simulate <config> [--atomic-data P] [--out DIR] [--validate-only]``.

A run is described by one JSON document whose physical quantities carry
their unit in the key name (``_hz``, ``_tesla``, ``_mps``, ``_kelvin``).
Flags choose files only; every physics value comes from the document.

Exit codes: 0 success, 2 configuration error, 3 solver error.  Failures
print one JSON record on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .atomic_data import (LAB_FIXED_ASSIGNMENT, SIGMA_MINUS_PROBE_ASSIGNMENT, AtomicData, AtomicDataError,
                          enumerate_lambda_systems, load_atomic_data, make_lambda_system)
from .detuning import FieldConfig, critical_velocity, laser_frequency
from .liouville import DecayRates, SingularLiouvillianError
from .sme_photon import KappaSet, classic_is_observable
from .spectra import (MIN_QUADRATURE_POINTS, MIN_SWEEP_POINTS, NoMinimumError, SpectrumError,
                      VelocityDistribution, extract_extrema, measure_splitting, sweep_spectrum)

RUN_SCHEMA_ID = "ives-sme/run/1"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
MODES = ("single-system", "toy-model", "full-d1", "classic-is")
ASSIGNMENTS = {"sigma-minus-probe": SIGMA_MINUS_PROBE_ASSIGNMENT, "lab-fixed": LAB_FIXED_ASSIGNMENT}

_NUM = {"type": "number"}
_MATRIX = {"type": "array", "minItems": 3, "maxItems": 3,
           "items": {"type": "array", "minItems": 3, "maxItems": 3, "items": _NUM}}


def _obj(props: dict, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


RUN_SCHEMA = _obj(
    {
        "schema": {"const": RUN_SCHEMA_ID},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "mode": {"enum": list(MODES)},
        "kappa": {
            "oneOf": [
                _obj({"kappa_tr": _NUM}, ["kappa_tr"]),
                _obj({"kappa_set": _obj({"kappa_DE": _MATRIX, "kappa_HB": _MATRIX, "kappa_DB": _MATRIX,
                                         "kappa_HE": _MATRIX, "kappa_tr": _NUM},
                                        ["kappa_DE", "kappa_HB", "kappa_DB", "kappa_HE", "kappa_tr"])},
                     ["kappa_set"]),
            ]
        },
        "fields": _obj({"omega_p_hz": _NUM, "omega_c_hz": _NUM, "nu0_hz": _NUM}, ["omega_p_hz", "omega_c_hz"]),
        "decay": _obj({k: _NUM for k in ("Gamma31_hz", "Gamma32_hz", "gamma21_hz", "gamma31_hz",
                                         "gamma32_hz", "gamma41_hz", "gamma52_hz", "gamma63_hz")},
                      ["Gamma31_hz", "Gamma32_hz"]),
        "distribution": {
            "oneOf": [
                {"type": "null"},
                _obj({"temperature_kelvin": _NUM, "half_width_mps": _NUM, "center_mps": _NUM,
                      "quadrature_points": {"type": "integer"}}, ["half_width_mps"]),
            ]
        },
        "sweep": _obj({"B_min_tesla": _NUM, "B_max_tesla": _NUM, "n_points": {"type": "integer"}},
                      ["B_min_tesla", "B_max_tesla", "n_points"]),
        "normalization": {"enum": ["figure", "physical"]},
        "system": _obj({"m_F": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "integer"}},
                        "beam": {"enum": ["East", "West", "east", "west"]}}, ["m_F", "beam"]),
        "polarization_assignment": {"enum": list(ASSIGNMENTS)},
        "classic_is": _obj({"beta": _NUM, "beta_sun_dot_beta": _NUM}, ["beta"]),
    },
    ["schema", "name", "mode", "kappa"],
)


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _path(error) -> str:
    parts = [str(p) for p in error.absolute_path]
    return ".".join(parts) if parts else "<root>"


def _schema_problems(doc) -> list[str]:
    validator = jsonschema.Draft7Validator(RUN_SCHEMA)
    out = []
    for err in sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message)):
        if err.validator == "oneOf" and err.context:
            # report the branch that came closest instead of the generic oneOf message
            best = min(err.context, key=lambda e: len(list(e.absolute_path)) * -1)
            out.append(f"{_path(best)}: {best.message}")
        else:
            out.append(f"{_path(err)}: {err.message}")
    return out


def _physics_problems(doc: dict, data: AtomicData) -> list[str]:
    out = []
    mode = doc.get("mode")
    kappa = doc.get("kappa", {})
    if "kappa_set" in kappa:
        try:
            out += [f"kappa.kappa_set: {p}" for p in KappaSet.from_dict(kappa["kappa_set"]).violations()]
        except (ValueError, TypeError) as exc:
            out.append(f"kappa.kappa_set: {exc}")
    if mode == "classic-is":
        cis = doc.get("classic_is")
        if cis is None:
            out.append("classic_is: required for mode classic-is")
        elif not abs(cis.get("beta", 0.0)) < 1:
            out.append("classic_is.beta: must satisfy |beta| < 1")
        return out
    for key in ("fields", "decay", "sweep"):
        if key not in doc:
            out.append(f"{key}: required for mode {mode}")
    f = doc.get("fields", {})
    for key in ("omega_p_hz", "omega_c_hz"):
        if f.get(key, 0.0) < 0:
            out.append(f"fields.{key}: must be non-negative")
    if f.get("nu0_hz", 1.0) <= 0:
        out.append("fields.nu0_hz: must be positive")
    d = doc.get("decay", {})
    for key, value in d.items():
        if value < 0:
            out.append(f"decay.{key}: must be non-negative")
    if d and not any(v > 0 for k, v in d.items() if k in ("Gamma31_hz", "Gamma32_hz", "gamma21_hz",
                                                         "gamma31_hz", "gamma32_hz")):
        out.append("decay: at least one decay or dephasing rate must be positive for a unique steady state")
    dist = doc.get("distribution")
    if dist:
        vc = critical_velocity(data.constants)
        hw = dist.get("half_width_mps", 0.0)
        center = dist.get("center_mps", vc)
        if not hw > 0:
            out.append("distribution.half_width_mps: must be positive")
        elif not center - hw <= vc <= center + hw:
            out.append(f"distribution: window {center:g} +/- {hw:g} m/s does not contain v_c = {vc:.6g} m/s")
        if center - hw < 0 and hw > 0:
            out.append("distribution: window must not reach zero speed")
        n = dist.get("quadrature_points", 101)
        if n < MIN_QUADRATURE_POINTS or n % 2 == 0:
            out.append(f"distribution.quadrature_points: must be odd and >= {MIN_QUADRATURE_POINTS}")
        if dist.get("temperature_kelvin", 300.0) <= 0:
            out.append("distribution.temperature_kelvin: must be positive")
    s = doc.get("sweep", {})
    if s:
        if not s.get("B_max_tesla", 0) > s.get("B_min_tesla", 0):
            out.append("sweep: B_max_tesla must exceed B_min_tesla")
        if s.get("n_points", MIN_SWEEP_POINTS) < MIN_SWEEP_POINTS:
            out.append(f"sweep.n_points: must be >= {MIN_SWEEP_POINTS}")
    if mode == "single-system":
        if "system" not in doc:
            out.append("system: required for mode single-system")
        else:
            try:
                make_lambda_system(tuple(doc["system"]["m_F"]), doc["system"]["beam"], data)
            except (AtomicDataError, ValueError, KeyError) as exc:
                out.append(f"system: {exc}")
    return out


def validate(config, atomic_data: AtomicData | None = None) -> list[str]:
    """Every problem found in ``config`` (a dict, JSON text or path); empty means valid."""
    try:
        doc = _as_document(config)
    except ConfigError as exc:
        return exc.problems
    problems = _schema_problems(doc)
    if problems:
        return problems
    return _physics_problems(doc, atomic_data or load_atomic_data())


def _as_document(config) -> dict:
    if isinstance(config, dict):
        return config
    text = str(config)
    if not text.lstrip().startswith("{"):
        try:
            text = Path(text).read_text()
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"]) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])
    return doc


@dataclass(frozen=True)
class RunConfig:
    """A validated run with defaults filled in."""

    name: str
    mode: str
    kappas: KappaSet
    document: dict
    field: FieldConfig | None = None
    rates: DecayRates | None = None
    distribution: VelocityDistribution | None = None
    B_range: tuple | None = None
    n_points: int = 0
    normalization: str = "figure"
    polarization_assignment: str = "sigma-minus-probe"

    @classmethod
    def from_document(cls, config, atomic_data: AtomicData) -> "RunConfig":
        doc = _as_document(config)
        problems = validate(doc, atomic_data)
        if problems:
            raise ConfigError(problems)
        kappa = doc["kappa"]
        kappas = (KappaSet.isotropic(kappa["kappa_tr"]) if "kappa_tr" in kappa
                  else KappaSet.from_dict(kappa["kappa_set"]))
        if doc["mode"] == "classic-is":
            return cls(doc["name"], doc["mode"], kappas, doc)
        C = atomic_data.constants
        f = doc["fields"]
        field = FieldConfig(f.get("nu0_hz", laser_frequency(C)), f["omega_p_hz"], f["omega_c_hz"])
        rates = DecayRates(**{k[:-3]: v for k, v in doc["decay"].items()})
        dist = doc.get("distribution")
        if dist is not None:
            dist = VelocityDistribution(dist.get("temperature_kelvin", 300.0), C.mass,
                                        dist.get("center_mps", critical_velocity(C)),
                                        dist["half_width_mps"], dist.get("quadrature_points", 101))
        s = doc["sweep"]
        return cls(doc["name"], doc["mode"], kappas, doc, field, rates, dist,
                   (s["B_min_tesla"], s["B_max_tesla"]), s["n_points"],
                   doc.get("normalization", "figure"), doc.get("polarization_assignment", "sigma-minus-probe"))

    def resolved(self, atomic_data: AtomicData) -> dict:
        """The document with every default made explicit."""
        out = json.loads(json.dumps(self.document))
        out["kappa"] = {"kappa_set": self.kappas.to_dict()}
        if self.mode == "classic-is":
            out["classic_is"].setdefault("beta_sun_dot_beta", 0.0)
            return out
        out["fields"] = {"omega_p_hz": self.field.omega_p, "omega_c_hz": self.field.omega_c,
                         "nu0_hz": self.field.nu0}
        out["decay"] = {f"{k}_hz": v for k, v in self.rates.as_dict().items()}
        if self.distribution is not None:
            d = self.distribution
            out["distribution"] = {"temperature_kelvin": d.temperature, "half_width_mps": d.half_width,
                                   "center_mps": d.center, "quadrature_points": d.quadrature_points,
                                   "mass_kg": d.mass}
        out["normalization"] = self.normalization
        out["polarization_assignment"] = self.polarization_assignment
        out["atomic_data"] = atomic_data.to_dict()
        return out


def _systems(cfg: RunConfig, data: AtomicData):
    if cfg.mode == "single-system":
        s = cfg.document["system"]
        return [make_lambda_system(tuple(s["m_F"]), s["beam"], data, label=1)], None
    enum = enumerate_lambda_systems(ASSIGNMENTS[cfg.polarization_assignment], data=data)
    if cfg.mode == "toy-model":
        return list(enum.most_sensitive_class_members()), enum
    return list(enum.contributing), enum


def _column(system) -> str:
    return f"system_{system.label}_{system.beam_direction.value}"


def format_csv(columns: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(list(columns))
    for row in zip(*columns.values()):
        writer.writerow([f"{x:.15e}" for x in row])
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run(config, atomic_data=None, out_dir=".") -> dict:
    """Execute one run and write its artifacts; returns the summary record."""
    data = atomic_data if isinstance(atomic_data, AtomicData) else load_atomic_data(atomic_data)
    cfg = RunConfig.from_document(config, data)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = cfg.resolved(data)
    meta = {"software": "ives_sme", "version": __version__, "config": resolved}
    summary = {"name": cfg.name, "mode": cfg.mode}
    files = {}

    if cfg.mode == "classic-is":
        cis = resolved["classic_is"]
        summary["observable"] = classic_is_observable(cfg.kappas.kappa_tr, cis["beta"], cis["beta_sun_dot_beta"])
    else:
        systems, enum = _systems(cfg, data)
        spec = sweep_spectrum(systems, cfg.field, cfg.kappas, cfg.distribution, cfg.B_range, cfg.n_points,
                              cfg.rates, normalization=cfg.normalization, data=data)
        columns = {"B_tesla": spec.B_grid}
        columns.update({_column(s): spec.per_system[s.label] for s in systems})
        if enum is not None:
            for i, members in enumerate(enum.classes, start=1):
                present = [m.label for m in members if m.label in spec.per_system]
                if present:
                    columns[f"class_{i}"] = spec.combine(present).absorption
        columns["total"] = spec.absorption
        (out / f"{cfg.name}.csv").write_text(format_csv(columns))
        files["csv"] = f"{cfg.name}.csv"
        meta["quadrature"] = (None if cfg.distribution is None else
                              {"rule": "gauss-legendre", "nodes": cfg.distribution.quadrature_points,
                               "half_width_mps": cfg.distribution.half_width})
        meta["columns"] = list(columns)
        summary["minima_tesla"] = [{"B_tesla": m.B, "depth": m.depth} for m in extract_extrema(spec)]
        summary["per_system_minimum_tesla"] = {
            _column(s): extract_extrema(spec.component(s.label)).minima[0].B for s in systems
        }
        if enum is not None:
            east, west = enum.most_sensitive_class_members()
            slope = east.two_photon_slope(data.constants)
            split = measure_splitting(spec.component(east.label), spec.component(west.label), slope, data.constants)
            summary["splitting"] = {
                "xi_east_tesla": split.xi_east, "xi_west_tesla": split.xi_west,
                "delta_xi_tesla": split.delta_xi, "kappa_tr_estimate": split.kappa_tr_estimate,
                "signed_kappa_tr_estimate": split.signed_kappa_tr, "upper_bound": split.upper_bound,
                "slope_hz_per_tesla": slope,
                "east_system": east.describe(), "west_system": west.describe(),
            }
    summary["config"] = resolved
    (out / f"{cfg.name}.summary.json").write_text(_dump(summary))
    files["summary"] = f"{cfg.name}.summary.json"
    meta["files"] = files
    (out / f"{cfg.name}.meta.json").write_text(_dump(meta))
    return summary


def shipped_config(name: str) -> Path:
    """Path of one of the bundled example configs (``fig_eit_dip1``, ``null_test``, ...)."""
    path = resources.files("ives_sme") / "configs" / f"{name}.json"
    if not path.is_file():
        raise FileNotFoundError(name)
    return Path(str(path))


def _fail(kind: str, code: int, messages) -> int:
    record = {"status": "error", "kind": kind, "exit_code": code, "messages": list(messages)}
    sys.stderr.write(json.dumps(record) + "\n")
    return code


def _resolve_config_arg(arg: str) -> str:
    p = Path(arg)
    if not p.exists() and not arg.endswith(".json"):
        try:
            return str(shipped_config(arg))
        except FileNotFoundError:
            pass
    return arg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="simulate", description=__doc__.splitlines()[0])
    parser.add_argument("config", help="run document (JSON) or the name of a shipped config")
    parser.add_argument("--atomic-data", help="atomic-data JSON (defaults to the bundled 85Rb D1 file)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--validate-only", action="store_true", help="check the config and exit")
    args = parser.parse_args(argv)

    try:
        data = load_atomic_data(args.atomic_data)
    except (AtomicDataError, OSError, ValueError) as exc:
        return _fail("config", EXIT_CONFIG, [f"atomic data: {exc}"])
    config = _resolve_config_arg(args.config)
    problems = validate(config, data)
    if args.validate_only:
        print(json.dumps({"status": "ok" if not problems else "invalid", "problems": problems}))
        return EXIT_OK if not problems else EXIT_CONFIG
    if problems:
        return _fail("config", EXIT_CONFIG, problems)
    try:
        summary = run(config, data, args.out)
    except ConfigError as exc:
        return _fail("config", EXIT_CONFIG, exc.problems)
    except (SpectrumError, SingularLiouvillianError, NoMinimumError, np.linalg.LinAlgError) as exc:
        return _fail("solver", EXIT_SOLVER, [str(exc)])
    print(json.dumps({"status": "ok", "name": summary["name"], "out": str(Path(args.out))}))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
