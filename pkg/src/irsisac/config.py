"""Experiment configuration: strict TOML parsing and resolved defaults.

Layout::

    preset = "detect-sweep"      # optional, must match the CLI subcommand
    seed = 7                     # required unless given on the command line

    [system]                     # overrides of the preset system
    sigma2_db = -80              # powers: W, or dBm with a _db / _dbm suffix
    ...

    [sweep]
    parameter = "n_irs"
    values = [16, 36, 64]
    trials = 100000
    pfa = 0.01
    architectures = ["fully_passive", "semi_passive", "active"]

    [output]
    path = "results/detect.csv"

Unknown keys anywhere are fatal.  See ``configs/`` for one file per preset
and ``README.md`` for the full key list.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from dataclasses import dataclass, field

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli

from .errors import ConfigError, InvalidArgumentError
from .model import Architecture, Geometry, PathLossModel, SystemConfig
from .scenarios import RICIAN_K, SHADOW_DB, crb_config, detection_config, isac_config


class Preset(str, enum.Enum):
    DETECT_SWEEP = "detect-sweep"
    CRB_SWEEP = "crb-sweep"
    ISAC_REGION = "isac-region"
    MC_VALIDATE = "mc-validate"
    CUSTOM = "custom"


# [system] keys.  kind: int, float, power (W; dBm via suffix), ratio (linear; dB via suffix)
_SYSTEM_KEYS = {
    "m_t": "int", "m_r": "int", "n_irs": "int", "t_symbols": "int",
    "p_bs": "power", "p_irs": "power", "sigma2": "power", "sigma_z2": "power",
    "sigma_c2": "power", "a_max": "float",
    "d1": "float", "d2": "float", "theta_deg": "float",
    "k0": "ratio", "alpha_bs_irs": "float", "alpha_irs_target": "float",
    "alpha_irs_cu": "float", "alpha_bs_cu": "float",
    "rician_k": "float", "shadow_std_db": "float", "fair_power": "bool",
}
_SWEEP_KEYS = {"parameter", "values", "trials", "pfa", "architectures", "receiver"}
_OUTPUT_KEYS = {"path"}
_TOP_KEYS = {"preset", "seed", "system", "sweep", "output"}

_SWEEP_PARAMS = {
    Preset.DETECT_SWEEP: ("n_irs", "t_symbols"),
    Preset.MC_VALIDATE: ("n_irs", "t_symbols"),
    Preset.CRB_SWEEP: ("n_irs", "t_symbols"),
    Preset.CUSTOM: ("n_irs", "t_symbols"),
    Preset.ISAC_REGION: ("crb_factor",),
}

_DEFAULT_SWEEPS = {
    Preset.DETECT_SWEEP: ("n_irs", [8, 16, 24, 32, 48, 64, 96, 128, 192, 256]),
    Preset.MC_VALIDATE: ("n_irs", [16, 36, 64]),
    Preset.CRB_SWEEP: ("n_irs", [16, 32, 64, 128, 256]),
    Preset.CUSTOM: ("n_irs", [16, 32, 64]),
    Preset.ISAC_REGION: ("crb_factor", [1.000001, 1.25, 1.6, 2.5, 4.0, 10.0, 100.0, math.inf]),
}

_DEFAULT_ARCHS = {
    Preset.DETECT_SWEEP: list(Architecture),
    Preset.MC_VALIDATE: list(Architecture),
    Preset.CRB_SWEEP: [Architecture.FULLY_PASSIVE, Architecture.SEMI_PASSIVE],
    Preset.CUSTOM: list(Architecture),
    Preset.ISAC_REGION: [Architecture.FULLY_PASSIVE],
}

_DEFAULT_TRIALS = {Preset.MC_VALIDATE: 100_000}
MAX_SEED = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    preset: Preset
    system: dict  # resolved [system] values in linear units
    sweep_parameter: str
    sweep_values: tuple
    architectures: tuple
    trials: int
    seed: int
    pfa: float = 1e-2
    receiver: str = "II"
    output_path: str | None = None
    extras: dict = field(default_factory=dict)

    def system_for(self, architecture: Architecture, **overrides) -> SystemConfig:
        """SystemConfig of the preset with the [system] overrides applied."""
        values = {**self.system, **overrides}
        return build_system(self.preset, architecture, values)

    def canonical(self) -> dict:
        """Everything that determines the results (the output path does not)."""
        def enc(v):
            if isinstance(v, float) and not math.isfinite(v):
                return repr(v)
            if isinstance(v, enum.Enum):
                return v.value
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            if isinstance(v, dict):
                return {k: enc(x) for k, x in sorted(v.items())}
            return v

        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        d.pop("output_path")
        # only the resolved systems count, so spelling out a default changes nothing
        d.pop("system")
        resolved = {a.value: _system_dict(self.system_for(a)) for a in self.architectures}
        d["resolved"] = resolved
        return enc(d)

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _system_dict(cfg: SystemConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["architecture"] = cfg.architecture.value
    d["pathloss"]["alpha0"] = dict(sorted(cfg.pathloss.alpha0.items()))
    return d


def build_system(preset: Preset, architecture: Architecture, values: dict) -> SystemConfig:
    """Preset system for one architecture with linear-unit overrides."""
    architecture = Architecture(architecture)
    if preset is Preset.CRB_SWEEP:
        base = crb_config(architecture)
    elif preset is Preset.ISAC_REGION:
        base = isac_config()
    else:
        base = detection_config(architecture)
    v = dict(values)
    fair = v.pop("fair_power", True)
    v.pop("rician_k", None)
    v.pop("shadow_std_db", None)
    geo = base.geometry
    geo_changes = {k: v.pop(k) for k in ("d1", "d2") if k in v}
    if "theta_deg" in v:
        geo_changes["theta"] = math.radians(v.pop("theta_deg"))
    pl = base.pathloss
    exps = dict(pl.alpha0)
    for link in ("bs_irs", "irs_target", "irs_cu", "bs_cu"):
        if f"alpha_{link}" in v:
            exps[link] = v.pop(f"alpha_{link}")
    k0 = v.pop("k0", pl.k0)
    try:
        geometry = dataclasses.replace(geo, **geo_changes)
        pathloss = PathLossModel(k0=k0, d0=pl.d0, alpha0=exps)
        changes = dict(v, geometry=geometry, pathloss=pathloss, architecture=architecture)
        if preset in (Preset.DETECT_SWEEP, Preset.MC_VALIDATE, Preset.CUSTOM):
            # equal total power: passive BSs also get the IRS budget
            p_bs = changes.get("p_bs", 1.0)
            if architecture.passive and fair:
                p_bs = p_bs + changes.get("p_irs", base.p_irs)
            changes["p_bs"] = p_bs
        return base.with_(**changes)
    except InvalidArgumentError as exc:
        raise ConfigError(f"[system]: {exc}") from None


def _base_key(key: str) -> tuple[str, str | None]:
    for suffix in ("_dbm", "_db"):
        if key.endswith(suffix) and key not in _SYSTEM_KEYS:
            return key[: -len(suffix)], suffix
    return key, None


def _number(section: str, key: str, value, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key}: expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"[{section}] {key}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _parse_system(table: dict) -> dict:
    out = {}
    for key, value in table.items():
        base, suffix = _base_key(key)
        kind = _SYSTEM_KEYS.get(base)
        if kind is None or (suffix and kind not in ("power", "ratio")):
            raise ConfigError(f"unknown key '{base}' in [system]")
        if base in out:
            raise ConfigError(f"[system] {base} given more than once")
        if kind == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"[system] {key}: expected true or false")
            out[base] = value
            continue
        x = _number("system", key, value, integer=kind == "int")
        if suffix and kind == "power":
            x = 10 ** ((x - 30) / 10)  # dBm -> W
        elif suffix:
            x = 10 ** (x / 10)
        out[base] = x
    return out


def parse_config(text: str, preset: Preset | str | None = None,
                 seed: int | None = None, output_path: str | None = None) -> ExperimentConfig:
    """Parse a TOML experiment document.

    ``preset``, ``seed`` and ``output_path`` come from the command line and
    take precedence over the document (a conflicting ``preset`` is an error).
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key '{_base_key(key)[0]}' at top level")
    for name in ("system", "sweep", "output"):
        if name in doc and not isinstance(doc[name], dict):
            raise ConfigError(f"[{name}] must be a table")

    doc_preset = doc.get("preset")
    try:
        chosen = Preset(preset) if preset is not None else (
            Preset(doc_preset) if doc_preset is not None else None)
        if doc_preset is not None and Preset(doc_preset) is not chosen:
            raise ConfigError(f"preset '{doc_preset}' does not match '{chosen.value}'")
    except ValueError:
        raise ConfigError(f"unknown preset {doc_preset or preset!r}") from None
    if chosen is None:
        raise ConfigError("no preset given")

    if seed is None:
        if "seed" not in doc:
            raise ConfigError("missing required key 'seed'")
        seed = doc["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")

    system = _parse_system(doc.get("system", {}))

    sweep = doc.get("sweep", {})
    for key in sweep:
        if key not in _SWEEP_KEYS:
            raise ConfigError(f"unknown key '{_base_key(key)[0]}' in [sweep]")
    param, values = _DEFAULT_SWEEPS[chosen]
    param = sweep.get("parameter", param)
    if param not in _SWEEP_PARAMS[chosen]:
        raise ConfigError(f"[sweep] parameter '{param}' is not supported by {chosen.value}")
    if "values" in sweep:
        values = sweep["values"]
    elif param != _DEFAULT_SWEEPS[chosen][0]:
        raise ConfigError("[sweep] values are required for a non-default parameter")
    if not isinstance(values, list) or not values:
        raise ConfigError("[sweep] values must be a non-empty list")
    integer = param in ("n_irs", "t_symbols")
    values = tuple(_number("sweep", "values", v, integer) for v in values)
    if any(not v > 0 for v in values):
        raise ConfigError("[sweep] values must be positive")
    if param == "crb_factor" and any(v < 1 for v in values):
        raise ConfigError("[sweep] crb_factor values must be >= 1")

    trials = sweep.get("trials", _DEFAULT_TRIALS.get(chosen, 0))
    trials = _number("sweep", "trials", trials, integer=True)
    if trials < 0 or (chosen is Preset.MC_VALIDATE and trials < 1):
        raise ConfigError("[sweep] trials must be positive for mc-validate")
    pfa = _number("sweep", "pfa", sweep.get("pfa", 1e-2))
    if not 0 < pfa < 1:
        raise ConfigError("[sweep] pfa must lie in (0, 1)")
    receiver = sweep.get("receiver", "II")
    if receiver not in ("I", "II"):
        raise ConfigError("[sweep] receiver must be 'I' or 'II'")
    archs = sweep.get("architectures")
    try:
        archs = tuple(Architecture(a) for a in archs) if archs is not None else tuple(
            _DEFAULT_ARCHS[chosen])
    except (ValueError, TypeError):
        raise ConfigError(f"[sweep] unknown architecture in {archs!r}") from None
    if not archs:
        raise ConfigError("[sweep] architectures must not be empty")
    if chosen is Preset.ISAC_REGION and archs != (Architecture.FULLY_PASSIVE,):
        raise ConfigError("isac-region supports the fully_passive architecture only")

    out = doc.get("output", {})
    for key in out:
        if key not in _OUTPUT_KEYS:
            raise ConfigError(f"unknown key '{_base_key(key)[0]}' in [output]")
    path = output_path if output_path is not None else out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("[output] path must be a string")

    extras = {
        "rician_k": system.get("rician_k", RICIAN_K),
        "shadow_std_db": system.get("shadow_std_db", SHADOW_DB),
    }
    cfg = ExperimentConfig(chosen, system, param, values, archs, trials, seed, pfa, receiver,
                           path, extras)
    for a in archs:  # surface invalid combinations now, not mid-run
        cfg.system_for(a)
    return cfg
