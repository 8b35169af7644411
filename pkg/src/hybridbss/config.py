"""Experiment configuration: strict JSON schema with field-path error messages.

Unknown fields are rejected rather than ignored so a typo in an experiment
file fails loudly instead of silently running defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .channel import Geometry, default_geometry
from .controller import SwitchPolicy
from .errors import ConfigError
from .signals import (
    FilteredNoise,
    InterferenceKind,
    ModulationScheme,
    QamStream,
    Tone,
)

DEFAULT_CARRIER_HZ = 8.40e8  # informational: the antenna's best band sits near 840 MHz


@dataclass(frozen=True)
class FsoConfig:
    gain_policy: str = "match_a22"
    blocked_schedule: tuple[int, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: Geometry = field(default_factory=default_geometry)
    modulation: ModulationScheme = ModulationScheme.QAM64
    interference: InterferenceKind = field(default_factory=lambda: QamStream(ModulationScheme.QAM16))
    n_symbols: int = 4096
    pilot_len: int = 64
    snr_db: float = 25.0
    n_frames: int = 8
    fso: FsoConfig = field(default_factory=FsoConfig)
    policy: SwitchPolicy = field(default_factory=SwitchPolicy)
    carrier_hz: float = DEFAULT_CARRIER_HZ
    seed: int = 0

    def __post_init__(self):
        if self.n_symbols < self.pilot_len + 100:
            raise ConfigError(
                f"n_symbols: must be >= pilot_len + 100 "
                f"(got {self.n_symbols} with pilot_len {self.pilot_len})"
            )
        if self.pilot_len < 16:
            raise ConfigError(f"pilot_len: must be >= 16, got {self.pilot_len}")
        if self.n_frames < 1:
            raise ConfigError(f"n_frames: must be >= 1, got {self.n_frames}")


def _expect_keys(obj: dict, allowed: set[str], path: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        name = sorted(unknown)[0]
        where = f"{path}.{name}" if path else name
        raise ConfigError(f"{where}: unknown field")


def _get_number(obj: dict, key: str, path: str, default=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{_join(path, key)}: required field missing")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{_join(path, key)}: expected a number, got {v!r}")
    return v


def _get_int(obj: dict, key: str, path: str, default=None) -> int:
    v = _get_number(obj, key, path, default)
    if isinstance(v, float) and not v.is_integer():
        raise ConfigError(f"{_join(path, key)}: expected an integer, got {v!r}")
    return int(v)


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _parse_point(v, path: str) -> tuple[float, float]:
    if (
        not isinstance(v, (list, tuple))
        or len(v) != 2
        or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in v)
    ):
        raise ConfigError(f"{path}: expected [x_cm, y_cm]")
    return float(v[0]), float(v[1])


def _parse_geometry(obj, path: str) -> Geometry:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    _expect_keys(obj, {"tx_soi", "tx_int", "rx1", "rx2"}, path)
    points = {}
    for key in ("tx_soi", "tx_int", "rx1", "rx2"):
        if key not in obj:
            raise ConfigError(f"{_join(path, key)}: required field missing")
        points[key] = _parse_point(obj[key], _join(path, key))
    return Geometry(**points)


def _parse_modulation(v, path: str) -> ModulationScheme:
    if not isinstance(v, str):
        raise ConfigError(f"{path}: expected one of QPSK, QAM16, QAM64")
    try:
        return ModulationScheme(v)
    except ValueError:
        raise ConfigError(f"{path}: unknown modulation {v!r}") from None


def _parse_interference(obj, path: str) -> InterferenceKind:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{path}: expected an object with a 'kind' field")
    kind = obj["kind"]
    if kind == "qam_stream":
        _expect_keys(obj, {"kind", "scheme"}, path)
        if "scheme" not in obj:
            raise ConfigError(f"{_join(path, 'scheme')}: required field missing")
        return QamStream(_parse_modulation(obj["scheme"], _join(path, "scheme")))
    if kind == "tone":
        _expect_keys(obj, {"kind", "normalized_frequency"}, path)
        return Tone(float(_get_number(obj, "normalized_frequency", path)))
    if kind == "filtered_noise":
        _expect_keys(obj, {"kind", "bandwidth_fraction"}, path)
        bf = float(_get_number(obj, "bandwidth_fraction", path))
        if not 0.0 < bf <= 1.0:
            raise ConfigError(f"{_join(path, 'bandwidth_fraction')}: must be in (0, 1]")
        return FilteredNoise(bf)
    raise ConfigError(f"{_join(path, 'kind')}: unknown interference kind {kind!r}")


def _parse_fso(obj, path: str) -> FsoConfig:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    _expect_keys(obj, {"gain_policy", "blocked_schedule"}, path)
    policy = obj.get("gain_policy", "match_a22")
    if policy != "match_a22":
        raise ConfigError(f"{_join(path, 'gain_policy')}: only 'match_a22' is supported")
    schedule = obj.get("blocked_schedule", [])
    if not isinstance(schedule, list) or any(
        isinstance(i, bool) or not isinstance(i, int) or i < 0 for i in schedule
    ):
        raise ConfigError(
            f"{_join(path, 'blocked_schedule')}: expected a list of frame indices >= 0"
        )
    return FsoConfig(gain_policy=policy, blocked_schedule=tuple(schedule))


def _parse_policy(obj, path: str) -> SwitchPolicy:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    _expect_keys(obj, {"kappa_hi", "kappa_lo", "dwell_up", "dwell_down"}, path)
    try:
        return SwitchPolicy(
            kappa_hi=float(_get_number(obj, "kappa_hi", path, 50.0)),
            kappa_lo=float(_get_number(obj, "kappa_lo", path, 10.0)),
            dwell_up=_get_int(obj, "dwell_up", path, 3),
            dwell_down=_get_int(obj, "dwell_down", path, 3),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


_TOP_LEVEL_KEYS = {
    "geometry",
    "modulation",
    "interference",
    "n_symbols",
    "pilot_len",
    "snr_db",
    "n_frames",
    "fso",
    "policy",
    "carrier_hz",
    "seed",
}


def _parse_snr(raw: dict, defaults: ExperimentConfig) -> float:
    if "snr_db" not in raw:
        return defaults.snr_db
    v = raw["snr_db"]
    if v == "inf":  # JSON cannot express infinity; "inf" means noiseless
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"snr_db: expected a number or \"inf\", got {v!r}")
    return float(v)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a JSON object")
    _expect_keys(raw, _TOP_LEVEL_KEYS, "")
    defaults = ExperimentConfig()
    geometry = (
        _parse_geometry(raw["geometry"], "geometry") if "geometry" in raw else defaults.geometry
    )
    modulation = (
        _parse_modulation(raw["modulation"], "modulation")
        if "modulation" in raw
        else defaults.modulation
    )
    interference = (
        _parse_interference(raw["interference"], "interference")
        if "interference" in raw
        else defaults.interference
    )
    fso = _parse_fso(raw["fso"], "fso") if "fso" in raw else defaults.fso
    policy = _parse_policy(raw["policy"], "policy") if "policy" in raw else defaults.policy
    return ExperimentConfig(
        geometry=geometry,
        modulation=modulation,
        interference=interference,
        n_symbols=_get_int(raw, "n_symbols", "", defaults.n_symbols),
        pilot_len=_get_int(raw, "pilot_len", "", defaults.pilot_len),
        snr_db=_parse_snr(raw, defaults),
        n_frames=_get_int(raw, "n_frames", "", defaults.n_frames),
        fso=fso,
        policy=policy,
        carrier_hz=float(_get_number(raw, "carrier_hz", "", defaults.carrier_hz)),
        seed=_get_int(raw, "seed", "", defaults.seed),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Canonical plain-dict form, used for serialization and digests."""
    if isinstance(cfg.interference, QamStream):
        interference = {"kind": "qam_stream", "scheme": cfg.interference.scheme.value}
    elif isinstance(cfg.interference, Tone):
        interference = {
            "kind": "tone",
            "normalized_frequency": cfg.interference.normalized_frequency,
        }
    else:
        interference = {
            "kind": "filtered_noise",
            "bandwidth_fraction": cfg.interference.bandwidth_fraction,
        }
    return {
        "geometry": {
            "tx_soi": list(cfg.geometry.tx_soi),
            "tx_int": list(cfg.geometry.tx_int),
            "rx1": list(cfg.geometry.rx1),
            "rx2": list(cfg.geometry.rx2),
        },
        "modulation": cfg.modulation.value,
        "interference": interference,
        "n_symbols": cfg.n_symbols,
        "pilot_len": cfg.pilot_len,
        "snr_db": cfg.snr_db if math.isfinite(cfg.snr_db) else "inf",
        "n_frames": cfg.n_frames,
        "fso": {
            "gain_policy": cfg.fso.gain_policy,
            "blocked_schedule": list(cfg.fso.blocked_schedule),
        },
        "policy": {
            "kappa_hi": cfg.policy.kappa_hi,
            "kappa_lo": cfg.policy.kappa_lo,
            "dwell_up": cfg.policy.dwell_up,
            "dwell_down": cfg.policy.dwell_down,
        },
        "carrier_hz": cfg.carrier_hz,
        "seed": cfg.seed,
    }


def config_digest(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
