"""Config parsing, CSV/JSON output, calibration cache and run manifests.

Config files are YAML documents. Site labels in them are 1-based, matching
how oscillators are numbered along the chain.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from . import __version__
from .decoherence import Calibration, calibrate_zeta
from .dynamics import RampSchedule
from .errors import ConfigError
from .experiments import ScenarioConfig, ScenarioKind, ScenarioResult, Series
from .gaussian import VALIDITY_TOL
from .lattice import BathSpec, ChainSpec
from .units import PhysicalParams

__all__ = [
    "SERIES_HEADER",
    "DEFAULT_DOCUMENTS",
    "parse_config",
    "load_config",
    "config_document",
    "dump_config",
    "config_hash",
    "format_float",
    "write_series",
    "write_table",
    "write_json",
    "CalibrationCache",
    "RunManifest",
    "write_result",
]

SERIES_HEADER = ["t", "E_N", "witness", "nu_min_pt", "validity_margin"]


# -- schema ----------------------------------------------------------------

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChainDoc(_Strict):
    n_sites: int = Field(ge=2)
    coupling: float = Field(ge=0)
    boundary: Literal["periodic", "open"] = "periodic"
    open_ends: Literal["spring", "uniform"] = "spring"


class TimeDoc(_Strict):
    t_end: float = Field(40.0, gt=0)
    dt_sample: float = Field(0.05, gt=0)
    dt: float = Field(1e-3, gt=0)


class RampDoc(_Strict):
    kind: Literal["sudden", "linear"] = "sudden"
    duration: float = Field(0.0, ge=0)


class RampScanDoc(_Strict):
    durations: list[float] = Field(min_length=1)


class BathDoc(_Strict):
    modes_per_oscillator: int = Field(300, ge=0)
    cutoff: float = Field(5.0, gt=0)
    coupling: Union[Literal["calibrate"], float] = "calibrate"
    temperature: float = Field(0.0, ge=0)


class PhysicalDoc(_Strict):
    frequency_hz: float = Field(gt=0)
    temperature_k: float = Field(gt=0)
    q_factor: float = Field(gt=0)


class ChannelDoc(_Strict):
    squeezing: float = Field(1.0, ge=0)


class FalloffDoc(_Strict):
    distances: list[int] = Field(min_length=1)


class ConfigDoc(_Strict):
    scenario: Literal["quench", "ramp_scan", "decohere", "channel", "falloff", "calibrate"]
    chain: ChainDoc
    sites: tuple[int, int] = (1, 2)
    time: TimeDoc = TimeDoc()
    ramp: Optional[RampDoc] = None
    ramp_scan: Optional[RampScanDoc] = None
    bath: Optional[BathDoc] = None
    physical: Optional[PhysicalDoc] = None
    channel: Optional[ChannelDoc] = None
    falloff: Optional[FalloffDoc] = None
    log_base: Literal["2", "e"] = "2"
    threads: int = Field(1, ge=1)


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def _from_doc(doc: ConfigDoc) -> ScenarioConfig:
    chain = ChainSpec(doc.chain.n_sites, doc.chain.coupling, doc.chain.boundary, doc.chain.open_ends)
    ramp = None
    if doc.ramp is not None:
        if (doc.ramp.kind == "sudden") != (doc.ramp.duration == 0):
            raise ConfigError("ramp: a sudden ramp has duration 0 and a linear one duration > 0")
        ramp = RampSchedule(doc.ramp.kind, doc.ramp.duration, chain.coupling)
    bath, calibrate = None, False
    if doc.bath is not None:
        calibrate = doc.bath.coupling == "calibrate"
        bath = BathSpec(doc.bath.modes_per_oscillator, doc.bath.cutoff,
                        0.0 if calibrate else doc.bath.coupling, doc.bath.temperature)
    physical = None
    if doc.physical is not None:
        physical = PhysicalParams(doc.physical.frequency_hz, doc.physical.temperature_k, doc.physical.q_factor)
    n = chain.n_sites
    for label in doc.sites:
        if not 1 <= label <= n:
            raise ConfigError(f"sites: label {label} out of range 1..{n}")
    return ScenarioConfig(
        kind=ScenarioKind(doc.scenario),
        chain=chain,
        sites=(doc.sites[0] - 1, doc.sites[1] - 1),
        t_end=doc.time.t_end,
        dt_sample=doc.time.dt_sample,
        dt=doc.time.dt,
        ramp=ramp,
        ramp_durations=tuple(doc.ramp_scan.durations) if doc.ramp_scan else (),
        bath=bath,
        calibrate_bath=calibrate,
        physical=physical,
        squeezing=doc.channel.squeezing if doc.channel else 1.0,
        distances=tuple(doc.falloff.distances) if doc.falloff else (),
        log_base=2.0 if doc.log_base == "2" else math.e,
        threads=doc.threads,
    )


def parse_document(data: Any) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    try:
        doc = ConfigDoc.model_validate(data)
    except ValidationError as err:
        raise ConfigError(_format_errors(err)) from None
    try:
        return _from_doc(doc)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse and fully validate a YAML scenario document."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError(f"malformed YAML: {err}") from None
    return parse_document(data)


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    return parse_config(text)


def config_document(cfg: ScenarioConfig) -> dict:
    """Inverse of :func:`parse_document`, with every default written out."""
    chain = cfg.chain
    doc: dict[str, Any] = {
        "scenario": cfg.kind.value,
        "chain": {
            "n_sites": chain.n_sites,
            "coupling": float(chain.coupling),
            "boundary": chain.boundary.value,
            "open_ends": chain.open_ends.value,
        },
        "sites": [cfg.sites[0] + 1, cfg.sites[1] + 1],
        "time": {"t_end": float(cfg.t_end), "dt_sample": float(cfg.dt_sample), "dt": float(cfg.dt)},
        "log_base": "2" if cfg.log_base == 2.0 else "e",
        "threads": cfg.threads,
    }
    if cfg.ramp is not None:
        doc["ramp"] = {"kind": cfg.ramp.kind.value, "duration": float(cfg.ramp.ramp_duration)}
    if cfg.ramp_durations:
        doc["ramp_scan"] = {"durations": [float(d) for d in cfg.ramp_durations]}
    if cfg.bath is not None:
        b = cfg.bath
        doc["bath"] = {
            "modes_per_oscillator": b.modes_per_oscillator,
            "cutoff": float(b.cutoff),
            "coupling": "calibrate" if cfg.calibrate_bath else float(b.coupling),
            "temperature": float(b.temperature),
        }
    if cfg.physical is not None:
        p = cfg.physical
        doc["physical"] = {"frequency_hz": float(p.frequency), "temperature_k": float(p.temperature),
                           "q_factor": float(p.q_factor)}
    if cfg.kind is ScenarioKind.CHANNEL:
        doc["channel"] = {"squeezing": float(cfg.squeezing)}
    if cfg.distances:
        doc["falloff"] = {"distances": [int(d) for d in cfg.distances]}
    return doc


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_document(cfg), sort_keys=False)


def config_hash(cfg: ScenarioConfig) -> str:
    """SHA-256 of the canonical physics content of ``cfg`` (threads excluded)."""
    doc = config_document(cfg)
    doc.pop("threads")
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- files -----------------------------------------------------------------

def format_float(x: float | None) -> str:
    """17 significant digits; ``None`` becomes an empty field."""
    if x is None:
        return ""
    return format(float(x), ".17g")


def _atomic_write(path: Path, write) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            write(handle)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_series(series: Series | None, path: str | os.PathLike) -> None:
    """One CSV row per sample under :data:`SERIES_HEADER`, LF line endings."""

    def write(handle):
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        if series is None:
            return
        cols = (series.times, series.en, series.witness, series.nu_min_pt, series.validity_margin)
        for row in zip(*cols):
            w.writerow([format_float(v) for v in row])

    try:
        _atomic_write(Path(path), write)
    except OSError as err:
        raise OSError(f"writing series to {path}: {err}") from err


def write_table(header: list[str], rows: list[tuple], path: str | os.PathLike) -> None:
    def cell(v):
        if isinstance(v, (int, str)) and not isinstance(v, bool):
            return str(v)
        return format_float(v)

    def write(handle):
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([cell(v) for v in row])

    _atomic_write(Path(path), write)


def write_json(obj: Any, path: str | os.PathLike) -> None:
    _atomic_write(Path(path), lambda h: h.write(json.dumps(obj, indent=2, sort_keys=True) + "\n"))


class CalibrationCache:
    """JSON file of calibrated couplings keyed by ``(Q, M, Lambda)``.

    Entries written by a different tool version are ignored.
    """

    def __init__(self, path: str | os.PathLike | None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if self.path is not None and self.path.exists():
            try:
                data = json.loads(self.path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError):
                data = {}
            self._entries = {k: v for k, v in data.get("entries", {}).items()
                             if v.get("tool_version") == __version__}

    @staticmethod
    def key(q_factor: float, modes: int, cutoff: float) -> str:
        return f"Q={format_float(q_factor)}|M={modes}|Lambda={format_float(cutoff)}"

    def get(self, q_factor: float, modes: int, cutoff: float) -> Calibration | None:
        entry = self._entries.get(self.key(q_factor, modes, cutoff))
        if entry is None:
            return None
        return Calibration(q_factor, modes, cutoff, entry["zeta"], entry["rate"], entry["residual"])

    def get_or_compute(self, q_factor: float, modes: int, cutoff: float) -> Calibration:
        with self._lock:
            cal = self.get(q_factor, modes, cutoff)
            if cal is None:
                cal = calibrate_zeta(q_factor, modes, cutoff)
                self._entries[self.key(q_factor, modes, cutoff)] = {
                    "zeta": cal.zeta, "rate": cal.rate, "residual": cal.residual,
                    "tool_version": __version__,
                }
                if self.path is not None:
                    write_json({"entries": self._entries}, self.path)
            return cal


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    tolerances: dict
    started: str
    finished: str = ""
    outputs: list[str] = field(default_factory=list)


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


def tolerances() -> dict:
    from .experiments import ONSET_EPS

    return {"validity": VALIDITY_TOL, "onset_eps": ONSET_EPS}


def _label_file(label: str) -> str:
    return "series.csv" if label == "main" else f"series_{label}.csv"


def write_result(result: ScenarioResult, out_dir: str | os.PathLike, started: datetime | None = None,
                 wall_clock: float | None = None) -> Path:
    """Write CSVs, ``summary.json`` and ``manifest.json`` into a fresh run directory.

    The directory is named ``<hash prefix>-<UTC timestamp>``.
    """
    started = started or _utc_now()
    digest = config_hash(result.config)
    run_dir = Path(out_dir) / f"{digest[:12]}-{started.strftime('%Y%m%dT%H%M%S%fZ')}"
    run_dir.mkdir(parents=True, exist_ok=False)
    manifest = RunManifest(digest, __version__, tolerances(), started.isoformat())
    for label, s in result.series.items():
        name = _label_file(label)
        write_series(s, run_dir / name)
        manifest.outputs.append(name)
    for name, (header, rows) in result.tables.items():
        write_table(header, rows, run_dir / f"{name}.csv")
        manifest.outputs.append(f"{name}.csv")
    summary = {
        "config": config_document(result.config),
        "config_hash": digest,
        "results": result.summary,
        "series": {label: s.summary() for label, s in result.series.items()},
        "tolerances": tolerances(),
        "calibration": asdict(result.calibration) if result.calibration else None,
        "wall_clock_seconds": wall_clock,
    }
    write_json(summary, run_dir / "summary.json")
    manifest.outputs.append("summary.json")
    manifest.finished = _utc_now().isoformat()
    write_json(asdict(manifest), run_dir / "manifest.json")
    return run_dir


DEFAULT_DOCUMENTS: dict[str, dict] = {
    "quench": {
        "scenario": "quench",
        "chain": {"n_sites": 8, "coupling": 0.3, "boundary": "periodic"},
        "sites": [1, 5],
        "time": {"t_end": 40.0},
    },
    "ramp_scan": {
        "scenario": "ramp_scan",
        "chain": {"n_sites": 8, "coupling": 0.1, "boundary": "open"},
        "sites": [1, 8],
        "time": {"t_end": 60.0},
        "ramp_scan": {"durations": [0.0, 0.25, 0.5, 0.75, 1.0, 2.0, 5.0, 10.0, 20.0]},
    },
    "decohere": {
        "scenario": "decohere",
        "chain": {"n_sites": 2, "coupling": 0.4, "boundary": "periodic"},
        "sites": [1, 2],
        "time": {"t_end": 40.0},
        "bath": {"modes_per_oscillator": 300, "cutoff": 5.0, "coupling": "calibrate"},
        "physical": {"frequency_hz": 5.0e9, "temperature_k": 0.01, "q_factor": 1000.0},
    },
    "channel": {
        "scenario": "channel",
        "chain": {"n_sites": 8, "coupling": 0.1, "boundary": "open"},
        "time": {"t_end": 60.0},
        "channel": {"squeezing": 1.0},
    },
    "falloff": {
        "scenario": "falloff",
        "chain": {"n_sites": 128, "coupling": 0.1, "boundary": "periodic"},
        "time": {"t_end": 200.0},
        "falloff": {"distances": list(range(1, 33))},
    },
    "calibrate": {
        "scenario": "calibrate",
        "chain": {"n_sites": 2, "coupling": 0.0},
        "bath": {"modes_per_oscillator": 300, "cutoff": 5.0, "coupling": "calibrate"},
        "physical": {"frequency_hz": 5.0e9, "temperature_k": 0.01, "q_factor": 1000.0},
    },
}
