"""Preset pipelines and the CSV result format."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .beamforming import ao_crb_min, optimal_los_detection
from .config import ExperimentConfig, Preset
from .detection import pd_closed_form, simulate_detection
from .errors import InfeasibleError, SingularFIMError
from .estimation import crb_angle
from .isac import pareto_sweep
from .model import Architecture
from .scenarios import crb_channels, detection_channels, isac_channels
from .snr import reflection_noise_ratio, sensing_snr, signal_snr

SCHEMA_VERSION = 1
ACTIVE_LAW_NOTE = "lam1=2T*snr_sig/kappa^2"


@dataclass(frozen=True)
class MetricRecord:
    """One result row.  SNRs are stored in dB, the CRB in rad^2."""

    scenario: str
    architecture: str
    sweep_parameter: str
    sweep_value: float
    method: str  # "closed_form", "monte_carlo", "optimized"
    feasible: bool
    sensing_snr_db: float = math.nan
    pd: float = math.nan
    pfa: float = math.nan
    pd_half_width: float = math.nan
    pfa_half_width: float = math.nan
    crb: float = math.nan
    comm_snr_db: float = math.nan
    trials: int = 0
    seed: int = 0
    config_hash: str = ""
    note: str = ""

    def sort_key(self):
        return (self.scenario, self.architecture, self.sweep_value, self.method)


COLUMNS = ["schema_version"] + [f.name for f in fields(MetricRecord)]


def db(x: float) -> float:
    if x <= 0:
        return -math.inf
    return 10 * math.log10(x)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    return str(value)


def format_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in sorted(records, key=MetricRecord.sort_key):
        writer.writerow([SCHEMA_VERSION] + [_fmt(getattr(rec, c)) for c in COLUMNS[1:]])
    return buf.getvalue()


def write_csv(records, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(format_csv(records).encode("utf-8"))


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# pipelines


def _override(cfg: ExperimentConfig, value) -> dict:
    return {cfg.sweep_parameter: value}


def _base(cfg, arch, value, method, **kw) -> MetricRecord:
    return MetricRecord(
        scenario=cfg.preset.value, architecture=arch.value,
        sweep_parameter=cfg.sweep_parameter, sweep_value=float(value), method=method,
        seed=cfg.seed, config_hash=cfg.digest(), **kw)


def _detection_point(cfg: ExperimentConfig, arch: Architecture, value, monte_carlo: bool):
    system = cfg.system_for(arch, **_override(cfg, value))
    channels = detection_channels(system)
    try:
        sol = optimal_los_detection(system, channels, cfg.pfa)
    except InfeasibleError as exc:
        return [_base(cfg, arch, value, "closed_form", feasible=False, note=str(exc))]
    snr = sensing_snr(system, channels, sol.pattern, sol.r)
    note = ""
    if arch is Architecture.ACTIVE:
        out = pd_closed_form(system, signal_snr(system, channels, sol.pattern, sol.r), cfg.pfa,
                             reflection_noise_ratio(system, channels, sol.pattern))
        note = f"{ACTIVE_LAW_NOTE};a0={_fmt(float(sol.meta['a0']))}"
    else:
        out = pd_closed_form(system, snr, cfg.pfa)
    crb = math.nan
    if cfg.preset is Preset.CUSTOM:
        try:
            crb = crb_angle(system, channels, sol.pattern, sol.r)
        except SingularFIMError:
            crb = math.inf
    rows = [_base(cfg, arch, value, "closed_form", feasible=True, sensing_snr_db=db(snr),
                  pd=out.pd, pfa=cfg.pfa, crb=crb, note=note)]
    if monte_carlo:
        scenario = f"{cfg.preset.value}/{arch.value}/{cfg.sweep_parameter}={value}"
        mc = simulate_detection(system, channels, sol.pattern, sol.r, cfg.pfa, cfg.trials,
                                cfg.seed, scenario=scenario)
        rows.append(_base(cfg, arch, value, "monte_carlo", feasible=True,
                          sensing_snr_db=db(snr), pd=mc.pd, pfa=mc.pfa,
                          pd_half_width=mc.meta["pd_half_width"],
                          pfa_half_width=mc.meta["pfa_half_width"], trials=mc.trials,
                          note=note))
    return rows


def _crb_point(cfg: ExperimentConfig, arch: Architecture, value):
    system = cfg.system_for(arch, **_override(cfg, value))
    channels = crb_channels(system, cfg.seed, cfg.extras["rician_k"])
    try:
        sol = ao_crb_min(system, channels)
    except (SingularFIMError, InfeasibleError, ValueError) as exc:
        return [_base(cfg, arch, value, "optimized", feasible=False, crb=math.inf,
                      note=str(exc))]
    snr = sensing_snr(system, channels, sol.pattern, sol.r)
    return [_base(cfg, arch, value, "optimized", feasible=math.isfinite(sol.objective),
                  sensing_snr_db=db(snr), crb=sol.objective,
                  note=f"iterations={len(sol.trace) - 1}")]


def _isac_region(cfg: ExperimentConfig):
    arch = Architecture.FULLY_PASSIVE
    system = cfg.system_for(arch)
    channels = isac_channels(system, cfg.seed, k_factor=cfg.extras["rician_k"],
                             shadow_db=cfg.extras["shadow_std_db"])
    crb_min = ao_crb_min(system, channels).objective
    factors = sorted(cfg.sweep_values)
    points = pareto_sweep(system, channels, [f * crb_min for f in factors], cfg.receiver)
    rows = []
    for f, p in zip(factors, points):
        rows.append(_base(cfg, arch, f, "optimized", feasible=p.feasible,
                          crb=p.crb if p.feasible else math.nan,
                          comm_snr_db=db(p.comm_snr) if p.feasible else math.nan,
                          note=f"receiver={cfg.receiver};crb_min={_fmt(crb_min)}"))
    return rows


def run_experiment(cfg: ExperimentConfig) -> list[MetricRecord]:
    """Run every (architecture, sweep value) point of a preset."""
    if cfg.preset is Preset.ISAC_REGION:
        return sorted(_isac_region(cfg), key=MetricRecord.sort_key)
    rows = []
    for arch in cfg.architectures:
        for value in cfg.sweep_values:
            if cfg.preset is Preset.CRB_SWEEP:
                rows += _crb_point(cfg, arch, value)
            else:
                mc = cfg.preset is Preset.MC_VALIDATE or (
                    cfg.preset is Preset.CUSTOM and cfg.trials > 0)
                rows += _detection_point(cfg, arch, value, mc)
    return sorted(rows, key=MetricRecord.sort_key)
