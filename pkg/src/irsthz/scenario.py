"""Scenario configuration: sectioned key=value files, defaults, hashing.

Defaults mirror the reference simulation parameter set (275 GHz carrier,
15 m hops, 55 dBi end gains, 6.08 uW noise, alpha = mu = 3 fading with
phi = 15, s0 = 0.8 pointing).  dB/dBm quantities are converted to linear
exactly once, when the typed parameter records are built.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
import os
from dataclasses import dataclass, field
from typing import Any

from .channel import (
    AtmosphereConfig,
    FadingParams,
    HopParams,
    LinkBudget,
    LseParams,
    PointingParams,
    effective_snr_scale,
    lse_params,
)
from .errors import ConfigError
from .metrics import HqamSpec, RqamSpec
from .montecarlo import McConfig, PhaseModel

__all__ = ["ScenarioConfig", "parse_config", "emit_defaults", "CONFIG_DIR_ENV"]

CONFIG_DIR_ENV = "IRSTHZ_CONFIG_DIR"

_AUTO = "auto"

# (type, default); "auto" resolves to d1+d2 for the absorption length
_SCHEMA: dict[str, dict[str, tuple[type, Any]]] = {
    "link": {
        "freq_ghz": (float, 275.0),
        "tx_power_dbm": (float, 30.0),
        "noise_variance_uw": (float, 6.08),
        "n_elements": (int, 10),
        "path_loss_exponent": (float, 2.0),
    },
    "hop1": {
        "alpha": (float, 3.0),
        "mu": (float, 3.0),
        "omega": (float, 1.0),
        "phi": (float, 15.0),
        "s0": (float, 0.8),
        "distance_m": (float, 15.0),
        "tx_gain_dbi": (float, 55.0),
        "rx_gain_dbi": (float, 0.0),
    },
    "hop2": {
        "alpha": (float, 3.0),
        "mu": (float, 3.0),
        "omega": (float, 1.0),
        "phi": (float, 15.0),
        "s0": (float, 0.8),
        "distance_m": (float, 15.0),
        "tx_gain_dbi": (float, 0.0),
        "rx_gain_dbi": (float, 55.0),
    },
    "atmosphere": {
        "temperature_k": (float, 296.0),
        "pressure_hpa": (float, 1013.25),
        "rel_humidity_pct": (float, 50.0),
        "k_alpha_per_m": (float, 0.0033),
        "absorption_length_m": (str, _AUTO),
    },
    "modulation": {
        "mi": (int, 4),
        "mq": (int, 4),
        "beta": (float, 1.0),
        "rqam_variant": (str, "standard"),
        "hqam_m": (int, 4),
    },
    "sim": {
        "trials": (int, 1_000_000),
        "seed": (int, 20260314),
        "chunk": (int, 16_384),
        "workers": (int, 1),
        "phase_model": (str, "ideal"),
        "lambda_th_db": (float, 0.0),
    },
    "sweep": {
        "ps_dbm_start": (float, -5.0),
        "ps_dbm_stop": (float, 40.0),
        "ps_dbm_step": (float, 0.5),
    },
}


def _dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3

def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass
class ScenarioConfig:
    """Fully-resolved scenario; values are the raw config-file quantities."""

    values: dict[str, dict[str, Any]] = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    # ------------------------------------------------------------------
    # typed builders (dB converted here, exactly once)
    # ------------------------------------------------------------------

    def hop(self, index: int) -> HopParams:
        h = self.values[f"hop{index}"]
        return HopParams(
            fading=FadingParams(h["alpha"], h["mu"], h["omega"]),
            pointing=PointingParams(h["phi"], h["s0"]),
            distance_m=h["distance_m"],
            tx_gain_linear=_db_to_linear(h["tx_gain_dbi"]),
            rx_gain_linear=_db_to_linear(h["rx_gain_dbi"]),
        )

    def budget(self, ps_dbm: float | None = None) -> LinkBudget:
        link = self.values["link"]
        power = _dbm_to_watt(link["tx_power_dbm"] if ps_dbm is None else ps_dbm)
        return LinkBudget(
            freq_hz=link["freq_ghz"] * 1e9,
            tx_power_w=power,
            noise_var_w=link["noise_variance_uw"] * 1e-6,
            n_elements=link["n_elements"],
        )

    def atmosphere(self) -> AtmosphereConfig:
        a = self.values["atmosphere"]
        length = a["absorption_length_m"]
        if length == _AUTO:
            length = self.values["hop1"]["distance_m"] + self.values["hop2"]["distance_m"]
        return AtmosphereConfig(
            temperature_k=a["temperature_k"],
            pressure_hpa=a["pressure_hpa"],
            rel_humidity_pct=a["rel_humidity_pct"],
            k_alpha_per_m=a["k_alpha_per_m"],
            absorption_length_m=float(length),
        )

    def eta(self) -> float:
        return self.values["link"]["path_loss_exponent"]

    def lse(self) -> LseParams:
        return lse_params(self.hop(1), self.hop(2), self.values["link"]["n_elements"])

    def lambda0(self, ps_dbm: float | None = None) -> float:
        return effective_snr_scale(
            self.budget(ps_dbm), self.hop(1), self.hop(2), self.atmosphere(), self.eta()
        )

    def lambda_th(self) -> float:
        return _db_to_linear(self.values["sim"]["lambda_th_db"])

    def rqam(self) -> RqamSpec:
        m = self.values["modulation"]
        return RqamSpec(m["mi"], m["mq"], m["beta"], m["rqam_variant"])

    def hqam(self) -> HqamSpec:
        return HqamSpec(self.values["modulation"]["hqam_m"])

    def phase(self) -> PhaseModel:
        raw = self.values["sim"]["phase_model"]
        if raw == "ideal":
            return PhaseModel.ideal()
        if raw == "random":
            return PhaseModel.random()
        if raw.startswith("quantized:"):
            try:
                return PhaseModel.quantized(int(raw.split(":", 1)[1]))
            except ValueError as exc:
                raise ConfigError(f"bad quantizer bits in {raw!r}", key="sim.phase_model") from exc
        raise ConfigError(f"unknown phase model {raw!r}", key="sim.phase_model")

    def mc(self, seed: int | None = None) -> McConfig:
        s = self.values["sim"]
        return McConfig(
            trials=s["trials"],
            seed=s["seed"] if seed is None else seed,
            chunk=s["chunk"],
            workers=s["workers"],
        )

    def sweep_points(self) -> list[float]:
        sw = self.values["sweep"]
        start, stop, step = sw["ps_dbm_start"], sw["ps_dbm_stop"], sw["ps_dbm_step"]
        if step <= 0.0:
            raise ConfigError("sweep step must be > 0", key="sweep.ps_dbm_step")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]

    # ------------------------------------------------------------------

    def config_hash(self) -> str:
        lines = []
        for section in sorted(self.values):
            for key in sorted(self.values[section]):
                val = self.values[section][key]
                if section == "atmosphere" and key == "absorption_length_m":
                    val = self.atmosphere().absorption_length_m
                lines.append(f"{section}.{key}={val!r}")
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]

    def emit(self) -> str:
        """Config text with every resolved value (round-trips to the same hash)."""
        out = io.StringIO()
        for section in _SCHEMA:
            out.write(f"[{section}]\n")
            for key in _SCHEMA[section]:
                val = self.values[section][key]
                if section == "atmosphere" and key == "absorption_length_m":
                    val = self.atmosphere().absorption_length_m
                out.write(f"{key} = {val}\n")
            out.write("\n")
        return out.getvalue()


def _defaults() -> dict[str, dict[str, Any]]:
    return {s: {k: d for k, (_, d) in keys.items()} for s, keys in _SCHEMA.items()}


def _find_line(text: str, section: str, key: str | None) -> int | None:
    needle = f"[{section}]" if key is None else key
    inside = key is None
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section:
            if stripped.split("=")[0].strip() == key:
                return i
    return None


def parse_config(path: str | os.PathLike | None = None, text: str | None = None) -> ScenarioConfig:
    """Read and validate a scenario file; absent keys take the defaults.

    Unknown sections or keys are errors (cited with their line number);
    so are values that fail type conversion or the record invariants.
    """
    if text is None:
        if path is None:
            return ScenarioConfig(_defaults())
        path = _resolve_path(path)
        with open(path, encoding="utf-8") as fh:
            text = fh.read()

    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc

    values = _defaults()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]", key=section, line=_find_line(text, section, None)
            )
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]",
                    key=f"{section}.{key}",
                    line=_find_line(text, section, key),
                )
            typ, _ = _SCHEMA[section][key]
            if typ is str:
                values[section][key] = raw.strip()
            else:
                try:
                    values[section][key] = typ(raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"cannot parse {section}.{key} = {raw!r} as {typ.__name__}",
                        key=f"{section}.{key}",
                        line=_find_line(text, section, key),
                    ) from exc

    cfg = ScenarioConfig(values)
    _validate(cfg, text)
    return cfg


def _resolve_path(path):
    if os.path.exists(path):
        return path
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        candidate = os.path.join(env_dir, os.fspath(path))
        if os.path.exists(candidate):
            return candidate
    raise ConfigError(f"config file not found: {path}")


def _validate(cfg: ScenarioConfig, text: str) -> None:
    """Run every invariant by building the typed records once."""
    try:
        cfg.hop(1)
        cfg.hop(2)
        cfg.budget()
        cfg.atmosphere()
        cfg.rqam()
        cfg.hqam()
        cfg.phase()
        cfg.mc()
        cfg.sweep_points()
        cfg.lambda_th()
        a = cfg.values["atmosphere"]["absorption_length_m"]
        if a != _AUTO:
            float(a)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def emit_defaults() -> str:
    return ScenarioConfig(_defaults()).emit()
