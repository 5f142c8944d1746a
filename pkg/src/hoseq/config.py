"""Flat key-value configuration files with sections, strictly validated.

Unknown sections or keys fail fast; known keys have typed defaults, so a
config file only states what it overrides. The canonical rendering of
the effective configuration feeds the provenance hash stamped onto every
output file.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass

from .errors import UsageError


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# (caster, default) per key; README documents every entry.
SCHEMA: dict[str, dict[str, tuple]] = {
    "deployment": {
        "seed": (int, 1),
        "n_bs": (int, 50),
        "n_sectors": (int, 3),
    },
    "area": {
        "width_m": (float, 1000.0),
        "height_m": (float, 1000.0),
    },
    "radio": {
        "tx_power_dbm": (float, 43.0),
        "path_loss_exponent": (float, 3.1),
        "reference_distance_m": (float, 1.0),
        "max_gain_dbi": (float, 14.0),
        "beamwidth_3db_deg": (float, 65.0),
        "front_back_ratio_db": (float, 30.0),
    },
    "mobility": {
        "speed_m_per_step": (float, 5.0),
        "n_ues": (int, 20),
        "n_steps": (int, 5000),
        "seed": (int, 1),
    },
    "a3": {
        "hysteresis_db": (float, 2.0),
        "time_to_trigger_steps": (int, 1),
    },
    "task": {
        "kind": (str, "cell_to_cell"),
        "history_len": (int, 9),
        "horizon": (int, 1),
        "vocab_size": (int, 50),
    },
    "train": {
        "episodes": (int, 30),
        "batch_size": (int, 32),
        "learning_rate": (float, 1e-3),
        "hidden_units": (int, 100),
        "init_scale": (float, 0.08),
        "seed": (int, 1),
        "train_fraction": (float, 0.8),
    },
    "suite": {
        "name": (str, "cell_accuracy"),
        "seeds": (_int_list, [1, 2, 3]),
        "n_values": (_int_list, [3, 5, 7, 9, 11, 13]),
        "k_values": (_int_list, [1, 2]),
        "drift_values": (_float_list, [0.0, 0.25, 0.75]),
        "beams": (int, 68),
        "beam_n_ues": (int, 24),
        "beam_n_steps": (int, 400),
        "beam_noise": (float, 0.08),
    },
}


@dataclass
class Config:
    """Effective configuration: raw strings over SCHEMA defaults."""

    values: dict[str, dict[str, str]]

    def get(self, section: str, key: str):
        caster, default = SCHEMA[section][key]
        raw = self.values.get(section, {}).get(key)
        if raw is None:
            return default
        try:
            return caster(raw)
        except ValueError as exc:
            raise UsageError(f"bad value for {section}.{key}: {raw!r} ({exc})") from exc

    def canonical(self, sections: tuple[str, ...] | None = None) -> str:
        """Deterministic rendering, defaults included; optionally a subset."""
        lines = []
        for section in sorted(sections or SCHEMA):
            for key in sorted(SCHEMA[section]):
                value = self.get(section, key)
                if isinstance(value, list):
                    value = ",".join(str(v) for v in value)
                lines.append(f"{section}.{key}={value}")
        return "\n".join(lines)

    def hash(self, sections: tuple[str, ...] | None = None) -> str:
        return hashlib.sha256(self.canonical(sections).encode("utf-8")).hexdigest()[:12]


def load_config(path, overrides: list[str] | None = None) -> Config:
    """Parse a config file, apply section.key=value overrides, validate keys."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except configparser.Error as exc:
        raise UsageError(f"invalid config file {path}: {exc}") from exc
    values: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise UsageError(f"unknown config section [{section}] in {path}")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise UsageError(f"unknown config key {section}.{key} in {path}")
            values.setdefault(section, {})[key] = raw
    cfg = Config(values=values)
    for item in overrides or []:
        apply_override(cfg, item)
    # surface bad values now rather than mid-run
    cfg.canonical()
    return cfg


def apply_override(cfg: Config, item: str) -> None:
    if "=" not in item or "." not in item.split("=", 1)[0]:
        raise UsageError(f"override must look like section.key=value, got {item!r}")
    target, raw = item.split("=", 1)
    section, key = target.split(".", 1)
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise UsageError(f"unknown config key {section}.{key}")
    cfg.values.setdefault(section, {})[key] = raw
