"""INI run configuration with typed fields and strict key checking.

A config file holds one section per concern (``run``, ``phantom``, ``psf``,
``deconvolve``, ``evaluate``, ``benchmark``). Unknown sections or keys are
errors. Manifests written by the CLI use the same format, plus a
``[manifest]`` section, so any manifest can be fed back with ``--config``.
"""

from __future__ import annotations

import configparser
import io
import re
from dataclasses import fields

from .core import DeconvParams
from .simcep import PhantomConfig

__all__ = ["ConfigError", "SCHEMA", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the file, line and field."""


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_str(text: str):
    return text.strip() or None


def _str_list(text: str):
    return [p.strip() for p in re.split(r"[;\n]", text) if p.strip()]


_PHANTOM_TYPES = {f.name: (f.type if isinstance(f.type, type) else {"int": int, "float": float, "bool": bool}[f.type])
                  for f in fields(PhantomConfig)}

SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {
        "seed": (int, 0),
        "threads": (int, 1),
        "out": (str, "out"),
    },
    "phantom": {name: (_bool if typ is bool else typ, getattr(PhantomConfig(), name))
                for name, typ in _PHANTOM_TYPES.items() if name != "rng_seed"},
    "psf": {
        "path": (_opt_str, None),
        "model": (str, "gaussian"),
        "sigma": (float, 2.0),
        "support_radius": (int, 6),
    },
    "deconvolve": {
        "input": (_opt_str, None),
        "method": (str, "map-d"),
        "lambda": (float, DeconvParams().lam),
        "beta": (float, DeconvParams().beta),
        "window_radius": (int, DeconvParams().window_radius),
        "iterations": (int, DeconvParams().iterations),
        "epsilon": (float, DeconvParams().epsilon),
        "boundary": (str, "reflect"),
        "ground_truth": (_opt_str, None),
    },
    "evaluate": {
        "reference": (_opt_str, None),
        "tests": (_str_list, []),
        "background": (_opt_str, None),
        "signal": (_opt_str, None),
        "contrast_region": (_opt_str, None),
        "segments": (_str_list, []),
        "normalize_profiles": (_bool, True),
    },
    "benchmark": {
        "width": (int, 800),
        "height": (int, 800),
        "channels": (int, 3),
        "methods": (_str_list, ["lr", "map-hunt", "map-d"]),
    },
    "manifest": {
        "command": (str, ""),
        "version": (str, ""),
        "input_scale": (str, ""),
        "clipped_pixels": (str, ""),
    },
}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "; ".join(str(v) for v in value)
    return str(value)


class RunConfig:
    """Typed view of a configuration: ``cfg["deconvolve"]["beta"]``."""

    def __init__(self, values: dict[str, dict] | None = None):
        self.values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
        for sec, kv in (values or {}).items():
            for k, v in kv.items():
                self.set(sec, k, v)

    def __getitem__(self, section):
        return self.values[section]

    def set(self, section: str, key: str, value, source: str = "<override>"):
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        if key not in SCHEMA[section]:
            raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
        conv = SCHEMA[section][key][0]
        if isinstance(value, str) and conv is not str:
            try:
                value = conv(value)
            except ValueError as exc:
                raise ConfigError(f"{source}: [{section}] {key}: {exc}") from None
        self.values[section][key] = value

    def phantom_config(self) -> PhantomConfig:
        kw = dict(self.values["phantom"])
        return PhantomConfig(rng_seed=int(self.values["run"]["seed"]), **kw)

    def deconv_params(self) -> DeconvParams:
        d = self.values["deconvolve"]
        return DeconvParams(lam=d["lambda"], beta=d["beta"], window_radius=d["window_radius"],
                            iterations=d["iterations"], epsilon=d["epsilon"])

    def to_ini(self, sections) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for sec in sections:
            cp[sec] = {k: _format(v) for k, v in self.values[sec].items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _line_of(text: str, section: str, key: str | None) -> int:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return 0


def load_config(path) -> RunConfig:
    """Parse an INI config file, rejecting unknown sections and keys."""
    with open(path) as fh:
        text = fh.read()
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = RunConfig()
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{path}:{_line_of(text, sec, None)}: unknown section [{sec}]")
        for key, raw in cp[sec].items():
            cfg.set(sec, key, raw, source=f"{path}:{_line_of(text, sec, key)}")
    return cfg
