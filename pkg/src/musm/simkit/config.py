"""Flat key-value campaign files.

::

    # lines before the first [campaign] header are shared defaults
    runs = 10
    [campaign]
    system = bd_sm
    n_users = 8
    n_beams = 32
    mod_order = 4
    snr_grid_db = 0, 5, 10, 15, 20
    [campaign]
    system = tdma_sm

A file without any ``[campaign]`` header describes a single campaign.
"""

from __future__ import annotations

from dataclasses import fields

from ..channel import ChannelConfig
from ..errors import MusmError, ParseError, ValidationError
from .engine import SimConfig

__all__ = ["DEFAULTS", "KEYS", "load_config", "loads_config", "dump_config"]

DEFAULTS = {
    "system": "tdma_sm",
    "n_tx": 64,
    "n_rx": 2,
    "n_users": 1,
    "beta_tx": 0.3,
    "beta_rx": None,
    "rho_tx": 0.5,
    "rho_rx": 0.5,
    "n_beams": 32,
    "mod_order": 2,
    "snr_grid_db": (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0),
    "runs": 10,
    "symbols_per_run": 100_000,
    "coherence_block": 100,
    "master_seed": 0,
    "e_tr": 1.0,
    "bd_power": "radiated",
}

_INT = {"n_tx", "n_rx", "n_users", "n_beams", "mod_order", "runs", "symbols_per_run", "coherence_block", "master_seed"}
_FLOAT = {"beta_tx", "beta_rx", "rho_tx", "rho_rx", "e_tr"}
# convenience keys that set both ends of the link
_ALIASES = {"beta": ("beta_tx", "beta_rx"), "rho": ("rho_tx", "rho_rx"), "k_users": ("n_users",), "seed": ("master_seed",)}

KEYS = tuple(DEFAULTS) + tuple(_ALIASES)


def _to_int(raw):
    try:
        return int(raw)
    except ValueError:
        value = float(raw)
        if not value.is_integer():
            raise
        return int(value)


def _convert(key, raw, line):
    try:
        if key in _INT:
            return _to_int(raw)
        if key in _FLOAT:
            return None if raw.lower() == "none" else float(raw)
        if key == "snr_grid_db":
            parts = [p for p in raw.replace(",", " ").split() if p]
            if not parts:
                raise ValueError("empty SNR grid")
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ParseError(f"bad value for {key!r}: {raw!r} ({exc})", line) from None


def _assign(section, key, raw, line):
    key = key.strip().lower()
    if key in _ALIASES:
        targets = _ALIASES[key]
    elif key in DEFAULTS:
        targets = (key,)
    else:
        raise ParseError(f"unknown key {key!r}", line)
    value = _convert(targets[0], raw.strip(), line)
    for t in targets:
        section[t] = value


def _build(values, line):
    try:
        channel = ChannelConfig(
            n_tx=values["n_tx"],
            n_rx=values["n_rx"],
            n_users=values["n_users"],
            beta_tx=values["beta_tx"],
            beta_rx=values["beta_rx"],
            rho_tx=values["rho_tx"],
            rho_rx=values["rho_rx"],
            seed=values["master_seed"],
        )
        return SimConfig(
            channel=channel,
            system=values["system"],
            n_beams=values["n_beams"],
            mod_order=values["mod_order"],
            snr_grid_db=values["snr_grid_db"],
            runs=values["runs"],
            symbols_per_run=values["symbols_per_run"],
            coherence_block=values["coherence_block"],
            master_seed=values["master_seed"],
            e_tr=values["e_tr"],
            bd_power=values["bd_power"],
        )
    except MusmError as exc:
        raise ValidationError(f"campaign starting at line {line}: {exc}") from exc


def loads_config(text):
    """Parse campaign text into a list of SimConfig."""
    shared = {}
    blocks = []  # (start line, values)
    current = shared
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line.lower() != "[campaign]":
                raise ParseError(f"unknown section {line!r}", lineno)
            current = {}
            blocks.append((lineno, current))
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = line.split("=", 1)
        _assign(current, key, value, lineno)
    if not blocks:
        blocks = [(1, {})]
    configs = []
    for start, values in blocks:
        merged = {**DEFAULTS, **shared, **values}
        configs.append(_build(merged, start))
    return configs


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return loads_config(fh.read())


def _fmt(value):
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(configs):
    """Serialize configs in the format read by :func:`loads_config`."""
    out = []
    for cfg in configs:
        ch = cfg.channel
        values = {f.name: getattr(ch, f.name) for f in fields(ch) if f.name != "seed"}
        values.update({f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "channel"})
        out.append("[campaign]")
        out.extend(f"{k} = {_fmt(values[k])}" for k in DEFAULTS)
        out.append("")
    return "\n".join(out)
