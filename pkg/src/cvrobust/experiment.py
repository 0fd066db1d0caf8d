"""Iso-energy robustness experiments: configuration, runner and CSV output.

Configuration schema (JSON)::

    {
      "channel": {"kind": "loss_thermal", "gamma": 1.0, "n1": 0.5, "n2": 0.5},
      "cutoff": 25,
      "integrator": {"dt": 0.001, "hermitize_each_step": true},
      "sample_times": [0.0, 0.25, 0.5, 1.0],
      "time_unit": "absolute",
      "target_energy": 1.0,
      "families": [
        {"kind": "tmss"},
        {"kind": "pnes2", "level": 1},
        {"kind": "pnes3", "levels": [1, 2], "phi": 0.7853981634},
        {"kind": "pnes", "coefficients": [0.8, 0.6]}
      ],
      "separation": {"tol_time": 0.0001, "threshold": 1e-7},
      "output_path": "results",
      "workers": 1
    }

Only ``channel`` and ``families`` are required.  A family without its
parameter (``lambda`` for ``tmss``, ``theta`` for ``pnes2``/``pnes3``)
is energy-matched to ``target_energy``.  With ``"time_unit":
"inverse_gamma"`` every time-valued key (``sample_times``,
``integrator.dt``, ``separation.tol_time``) is read in units of
``1 / gamma``.  Unknown keys are rejected.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .channels import ChannelKind, ChannelParams, IntegratorConfig, evolve, expected_energy
from .entanglement import SEPARATION_THRESHOLD, SeparationTime, log_negativity, separation_time
from .errors import ConfigError, EnergyMismatch
from .fock import Ket, check_cutoff, mean_energy
from .states import (
    StateFamily,
    match_energy,
    pnes_ket,
    three_term_pnes_family,
    tmss_family,
    two_term_pnes_family,
)

log = logging.getLogger(__name__)

ENERGY_TOL = 1e-6
ORDERING_SLACK = 1e-3
NEGATIVITY_CAVEAT = (
    "Ordering is measured with the negativity-vanishing time. Gaussian extremality "
    "holds for continuous, strongly superadditive entanglement monotones; negativity "
    "is not one, so violations up to the ordering slack are tolerated."
)
TRAJECTORY_COLUMNS = ("t", "energy", "negativity", "log_negativity", "trace_error", "min_eigenvalue")
SUMMARY_COLUMNS = (
    "family",
    "kind",
    "gaussian",
    "parameter",
    "initial_energy",
    "tau",
    "tau_low",
    "tau_high",
    "max_energy_residual",
    "cutoff",
    "dt",
)

_FAMILY_KEYS = {
    "tmss": {"kind", "label", "lambda"},
    "pnes2": {"kind", "label", "level", "theta"},
    "pnes3": {"kind", "label", "levels", "phi", "theta"},
    "pnes": {"kind", "label", "coefficients"},
}
_TOP_KEYS = {
    "channel",
    "families",
    "cutoff",
    "integrator",
    "sample_times",
    "time_unit",
    "target_energy",
    "separation",
    "output_path",
    "workers",
}


def fmt(x: float) -> str:
    """12 significant digits; negative zero printed as 0."""
    return f"{float(x) + 0.0:.12g}"


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    label: str
    param: float | None = None
    level: int | None = None
    levels: tuple[int, int] | None = None
    phi: float | None = None
    coefficients: tuple[float, ...] | None = None

    @property
    def gaussian(self) -> bool:
        return self.kind == "tmss"

    def family(self) -> StateFamily | None:
        if self.kind == "tmss":
            return tmss_family()
        if self.kind == "pnes2":
            return two_term_pnes_family(self.level)
        if self.kind == "pnes3":
            return three_term_pnes_family(self.levels, self.phi)
        return None

    def build(self, cutoff: int, target: float | None) -> tuple[Ket, float | None]:
        """Return the initial ket and the family parameter actually used."""
        if self.kind == "pnes":
            return pnes_ket(self.coefficients, cutoff), None
        fam = self.family()
        param = self.param
        if param is None:
            if target is None:
                raise ConfigError(f"family {self.label!r} has no parameter and no target_energy is set")
            param = match_energy(target, fam, cutoff)
        return fam(param, cutoff), param

    @classmethod
    def from_dict(cls, raw: dict, index: int) -> "FamilySpec":
        if not isinstance(raw, dict) or "kind" not in raw:
            raise ConfigError(f"families[{index}] must be an object with a 'kind'")
        kind = raw["kind"]
        if kind not in _FAMILY_KEYS:
            raise ConfigError(f"families[{index}]: unknown kind {kind!r}")
        unknown = set(raw) - _FAMILY_KEYS[kind]
        if unknown:
            raise ConfigError(f"families[{index}]: unknown keys {sorted(unknown)}")
        try:
            if kind == "tmss":
                spec = cls(kind, "", param=_opt_float(raw.get("lambda")))
            elif kind == "pnes2":
                spec = cls(kind, "", param=_opt_float(raw.get("theta")), level=int(raw.get("level", 1)))
            elif kind == "pnes3":
                levels = tuple(int(v) for v in raw.get("levels", (1, 2)))
                if len(levels) != 2:
                    raise ConfigError(f"families[{index}]: 'levels' needs two entries")
                spec = cls(
                    kind,
                    "",
                    param=_opt_float(raw.get("theta")),
                    levels=levels,
                    phi=float(raw.get("phi", math.pi / 4)),
                )
            else:
                spec = cls(kind, "", coefficients=tuple(float(c) for c in raw["coefficients"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"families[{index}]: {exc}") from exc
        label = raw.get("label") or spec.default_label()
        return cls(**{**spec.__dict__, "label": str(label)})

    def default_label(self) -> str:
        if self.kind == "tmss":
            return "tmss"
        if self.kind == "pnes2":
            return f"pnes_0{self.level}"
        if self.kind == "pnes3":
            return f"pnes_0{self.levels[0]}{self.levels[1]}"
        return "pnes_custom"


def _opt_float(value) -> float | None:
    return None if value is None else float(value)


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelParams
    families: tuple[FamilySpec, ...]
    cutoff: int = 25
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    sample_times: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    output_path: str = "results"
    target_energy: float | None = None
    tol_time: float = 1e-4
    threshold: float = SEPARATION_THRESHOLD
    workers: int = 1

    def __post_init__(self):
        ts = self.sample_times
        if not ts or ts[0] != 0.0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigError("sample_times must start at 0 and be strictly increasing")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys {sorted(unknown)}")
        if "channel" not in raw:
            raise ConfigError("missing 'channel'")
        ch = dict(raw["channel"])
        bad = set(ch) - {"kind", "gamma", "n1", "n2"}
        if bad:
            raise ConfigError(f"unknown channel keys {sorted(bad)}")
        try:
            channel = ChannelParams(
                gamma=float(ch.get("gamma", 1.0)),
                n1=float(ch.get("n1", 0.0)),
                n2=float(ch.get("n2", 0.0)),
                kind=ChannelKind(ch.get("kind", "loss_thermal")),
            )
        except ValueError as exc:
            raise ConfigError(f"channel: {exc}") from exc

        unit = raw.get("time_unit", "absolute")
        if unit not in ("absolute", "inverse_gamma"):
            raise ConfigError(f"time_unit must be 'absolute' or 'inverse_gamma', got {unit!r}")
        scale = 1.0 / channel.gamma if unit == "inverse_gamma" else 1.0

        families = tuple(FamilySpec.from_dict(f, i) for i, f in enumerate(raw.get("families", [])))
        if not families:
            raise EnergyMismatch("at least one state family is required")
        labels = [f.label for f in families]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"family labels must be unique, got {labels}")

        integ = dict(raw.get("integrator", {}))
        bad = set(integ) - {"dt", "hermitize_each_step"}
        if bad:
            raise ConfigError(f"unknown integrator keys {sorted(bad)}")
        sep = dict(raw.get("separation", {}))
        bad = set(sep) - {"tol_time", "threshold"}
        if bad:
            raise ConfigError(f"unknown separation keys {sorted(bad)}")

        times = tuple(float(t) * scale for t in raw.get("sample_times", cls.sample_times))
        dt = integ.get("dt")
        try:
            integrator = IntegratorConfig(
                dt=None if dt is None else float(dt) * scale,
                t_max=max(times[-1], 1e-12) if times else 1.0,
                hermitize_each_step=bool(integ.get("hermitize_each_step", True)),
            )
            cutoff = check_cutoff(raw.get("cutoff", cls.cutoff))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        target = raw.get("target_energy")
        return cls(
            channel=channel,
            families=families,
            cutoff=cutoff,
            integrator=integrator,
            sample_times=times,
            output_path=str(raw.get("output_path", cls.output_path)),
            target_energy=None if target is None else float(target),
            tol_time=float(sep.get("tol_time", cls.tol_time)) * scale,
            threshold=float(sep.get("threshold", cls.threshold)),
            workers=int(raw.get("workers", 1)),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(load_config_dict(path))


def load_config_dict(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


@dataclass(frozen=True)
class TrajectoryRecord:
    t: float
    energy: float
    negativity: float
    log_negativity: float
    trace_error: float
    min_eigenvalue: float

    def row(self) -> list[str]:
        return [fmt(getattr(self, c)) for c in TRAJECTORY_COLUMNS]


@dataclass
class FamilyResult:
    spec: FamilySpec
    parameter: float | None
    initial_energy: float
    records: list[TrajectoryRecord]
    separation: SeparationTime | None
    max_energy_residual: float


@dataclass
class Report:
    config: ExperimentConfig
    families: list[FamilyResult]
    verdict: bool | None
    caveat: str = NEGATIVITY_CAVEAT

    @property
    def gaussian_tau(self) -> float | None:
        for fam in self.families:
            if fam.spec.gaussian and fam.separation is not None:
                return fam.separation.tau
        return None

    @property
    def max_energy_residual(self) -> float:
        return max(f.max_energy_residual for f in self.families)


def trajectory_records(ket, params: ChannelParams, config: IntegratorConfig, times) -> list[TrajectoryRecord]:
    """Integrate one input and tabulate energy, negativity and health at ``times``."""
    traj = evolve(ket, params, config, times)
    out = []
    for t, rho, health in zip(traj.times, traj.states, traj.health):
        ent = log_negativity(rho)
        out.append(
            TrajectoryRecord(
                float(t),
                mean_energy(rho),
                ent.negativity,
                ent.log_negativity,
                health.trace_error,
                health.min_eigenvalue,
            )
        )
    return out


def ordering_verdict(taus: list[tuple[float, bool]], slack: float = ORDERING_SLACK) -> bool:
    """True when the Gaussian separation time is not beaten by any other family.

    ``taus`` holds ``(tau, is_gaussian)`` pairs in declaration order; the
    first Gaussian entry is the reference.
    """
    ref = next((tau for tau, g in taus if g), None)
    if ref is None:
        raise ConfigError("the ordering verdict needs a Gaussian (tmss) family")
    return all(ref >= tau - slack for tau, g in taus if not g)


def _run_family(spec: FamilySpec, ket: Ket, param, cfg: ExperimentConfig) -> FamilyResult:
    log.info("family %s: integrating", spec.label)
    records = trajectory_records(ket, cfg.channel, cfg.integrator, cfg.sample_times)
    e0 = records[0].energy
    residual = max(abs(r.energy - expected_energy(e0, cfg.channel, r.t)) for r in records)
    sep = None
    if cfg.channel.kind is ChannelKind.LOSS_THERMAL:
        log.info("family %s: separation time", spec.label)
        sep = separation_time(ket, cfg.channel, cfg.integrator, cfg.tol_time, cfg.threshold)
    return FamilyResult(spec, param, e0, records, sep, residual)


def prepare_states(cfg: ExperimentConfig) -> list[tuple[FamilySpec, Ket, float | None]]:
    """Build every family's initial ket and enforce a common initial energy.

    Raises:
        EnergyMismatch: energies disagree by more than 1e-6 (or miss the target).
    """
    if not cfg.families:
        raise EnergyMismatch("at least one state family is required")
    built = [(spec, *spec.build(cfg.cutoff, cfg.target_energy)) for spec in cfg.families]
    energies = [mean_energy(ket) for _, ket, _ in built]
    ref = cfg.target_energy if cfg.target_energy is not None else energies[0]
    for (spec, _, _), e in zip(built, energies):
        if abs(e - ref) > ENERGY_TOL:
            raise EnergyMismatch(f"family {spec.label!r} has energy {e:.12g}, expected {ref:.12g}")
    return built


def run_comparison(cfg: ExperimentConfig) -> Report:
    """Evolve every family, find separation times and decide the ordering."""
    built = prepare_states(cfg)
    if cfg.channel.kind is ChannelKind.LOSS_THERMAL and not any(s.gaussian for s, _, _ in built):
        raise ConfigError("compare needs a Gaussian (tmss) reference family")
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda b: _run_family(*b, cfg), built))
    else:
        results = [_run_family(*b, cfg) for b in built]
    verdict = None
    if cfg.channel.kind is ChannelKind.LOSS_THERMAL:
        verdict = ordering_verdict([(r.separation.tau, r.spec.gaussian) for r in results])
    return Report(cfg, results, verdict)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def summary_rows(report: Report) -> list[list[str]]:
    cfg = report.config
    rows = []
    for fam in report.families:
        sep = fam.separation
        rows.append(
            [
                fam.spec.label,
                fam.spec.kind,
                "1" if fam.spec.gaussian else "0",
                "" if fam.parameter is None else fmt(fam.parameter),
                fmt(fam.initial_energy),
                "" if sep is None else fmt(sep.tau),
                "" if sep is None else fmt(sep.bracket_low),
                "" if sep is None else fmt(sep.bracket_high),
                fmt(fam.max_energy_residual),
                str(cfg.cutoff),
                fmt(cfg.integrator.step(cfg.channel.gamma)),
            ]
        )
    return rows


def write_trajectories(report: Report, path) -> list[Path]:
    """Write ``<label>.csv`` per family, ``summary.csv`` and ``report.json`` under ``path``."""
    out = Path(path)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for fam in report.families:
            target = out / f"{fam.spec.label}.csv"
            target.write_text(_csv_text(TRAJECTORY_COLUMNS, [r.row() for r in fam.records]), encoding="utf-8")
            written.append(target)
        target = out / "summary.csv"
        target.write_text(_csv_text(SUMMARY_COLUMNS, summary_rows(report)), encoding="utf-8")
        written.append(target)
        target = out / "report.json"
        target.write_text(json.dumps(report_metadata(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(target)
    except OSError as exc:
        raise OSError(f"could not write results to {os.fspath(out)}: {exc}") from exc
    return written


def report_metadata(report: Report) -> dict:
    cfg = report.config
    return {
        "verdict": report.verdict,
        "ordering_slack": ORDERING_SLACK,
        "caveat": report.caveat,
        "gaussian_tau": None if report.gaussian_tau is None else fmt(report.gaussian_tau),
        "max_energy_residual": fmt(report.max_energy_residual),
        "cutoff": cfg.cutoff,
        "dt": fmt(cfg.integrator.step(cfg.channel.gamma)),
        "channel": {
            "kind": cfg.channel.kind.value,
            "gamma": fmt(cfg.channel.gamma),
            "n1": fmt(cfg.channel.n1),
            "n2": fmt(cfg.channel.n2),
        },
        "families": [f.spec.label for f in report.families],
    }


def verdict_from_summary(path) -> bool:
    """Recompute the ordering verdict from a written ``summary.csv``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return ordering_verdict([(float(r["tau"]), r["gaussian"] == "1") for r in rows])
