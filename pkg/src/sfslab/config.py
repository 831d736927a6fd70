"""Flat ``key = value`` run configurations and their per-subcommand schemas.

A configuration file holds one assignment per line; ``#`` starts a comment.
Physical quantities carry their unit in the key name (``_s``, ``_hz``, ``_m``).
Unknown keys, missing required keys and out-of-range values raise
:class:`~sfslab.errors.ConfigError` naming the offending key.
"""

import hashlib
import math
from dataclasses import dataclass

from .errors import ConfigError

__all__ = ["Key", "SCHEMAS", "parse_text", "parse_overrides", "resolve", "canonical_text",
           "config_hash", "range_values"]

_REQUIRED = object()


@dataclass(frozen=True)
class Key:
    name: str
    kind: type
    default: object = _REQUIRED
    lo: float = None
    hi: float = None
    lo_open: bool = False
    choices: tuple = None
    doc: str = ""

    @property
    def required(self):
        return self.default is _REQUIRED

    def describe_range(self):
        if self.choices:
            return "one of " + ", ".join(self.choices)
        if self.kind is str:
            return "text"
        left = "(-inf" if self.lo is None else f"{'(' if self.lo_open else '['}{self.lo:g}"
        right = "inf)" if self.hi is None else f"{self.hi:g}]"
        return f"{left}, {right}"

    def convert(self, raw):
        text = raw.strip()
        if self.kind is str:
            value = text
            if self.choices and value not in self.choices:
                raise ConfigError(f"{self.name} must be {self.describe_range()}, got {text!r}", self.name)
            return value
        try:
            value = int(text) if self.kind is int else float(text)
        except ValueError:
            raise ConfigError(
                f"{self.name} must be a {self.kind.__name__}, got {text!r}", self.name
            ) from None
        if self.kind is float and not math.isfinite(value):
            raise ConfigError(f"{self.name} must be finite", self.name)
        bad_lo = self.lo is not None and (value <= self.lo if self.lo_open else value < self.lo)
        bad_hi = self.hi is not None and value > self.hi
        if bad_lo or bad_hi:
            raise ConfigError(
                f"{self.name} = {text} outside allowed range {self.describe_range()}", self.name
            )
        return value


_GRID_KEYS = (
    Key("points_per_scale", int, 200, 20, 5000, doc="samples per shortest time scale"),
    Key("dt_s", float, None, 0, None, True, doc="time step override"),
    Key("t_min_s", float, None, doc="grid start override"),
    Key("t_max_s", float, None, doc="grid end override"),
)

_MEDIUM_KEYS = (
    Key("alpha_l", float, _REQUIRED, 0, 1e4, doc="resonant optical depth"),
    Key("t2_s", float, _REQUIRED, 0, None, True, doc="phase relaxation time"),
)

_GEOMETRY_KEYS = (
    Key("beam_area_m2", float, None, 0, None, True, doc="beam cross-section for the Fresnel check"),
    Key("length_m", float, None, 0, None, True, doc="medium length for the Fresnel check"),
    Key("wavelength_m", float, None, 0, None, True, doc="wavelength for the Fresnel check"),
)

SCHEMAS = {
    "simulate": _MEDIUM_KEYS + (
        Key("pulse_t_s", float, None, 0, None, True, doc="duration of the time-reversed exponential"),
        Key("pulse_file", str, None, doc="envelope CSV to propagate instead"),
    ) + _GRID_KEYS + _GEOMETRY_KEYS,
    "fit": _MEDIUM_KEYS + (
        Key("pulse_t_s", float, _REQUIRED, 0, None, True, doc="duration of the time-reversed exponential"),
        Key("fit_mode", str, "phi0_pinned", choices=("phi0_pinned", "free_fit")),
    ) + _GRID_KEYS,
    "sweep": (
        Key("t2_s", float, 1.0, 0, None, True, doc="phase relaxation time"),
        Key("alpha_l_start", float, _REQUIRED, 0, 1e3, True),
        Key("alpha_l_stop", float, _REQUIRED, 0, 1e3, True),
        Key("alpha_l_step", float, _REQUIRED, 0, None, True),
        Key("pulse_rule", str, "half_T2", choices=("half_T2", "fixed")),
        Key("pulse_t_s", float, None, 0, None, True, doc="pulse duration when pulse_rule = fixed"),
        Key("points_per_scale", int, 200, 20, 5000),
        Key("workers", int, 1, 1, 64),
    ),
    "afc": (
        Key("alpha_l", float, _REQUIRED, 0, 1e4, doc="optical depth of one comb peak"),
        Key("delta_hz", float, 1e6, 0, None, True, doc="comb peak spacing"),
        Key("finesse", float, None, 1, None, True, doc="delta / gamma_peak"),
        Key("gamma_peak_hz", float, None, 0, None, True, doc="comb peak width"),
        Key("sweep_param", str, "none", choices=("none", "alpha_l", "finesse")),
        Key("sweep_start", float, None),
        Key("sweep_stop", float, None),
        Key("sweep_step", float, None, 0, None, True),
    ),
    "slowlight": (
        Key("background_alpha_l", float, 70.0, 0, 1e4, True),
        Key("hole_fwhm_hz", float, 30e6, 0, None, True),
        Key("edge_softness_hz", float, 0.0, 0),
        Key("length_m", float, 0.02, 0, None, True),
        Key("profile_file", str, None, doc="two-column CSV (frequency_hz, alpha_l) replacing the pit"),
        Key("freq_span_hz", float, 2.4e9, 0, None, True),
        Key("freq_points", int, 32768, 64, 2**24),
        Key("pulse_fwhm_s", float, 1e-6, 0, None, True),
        Key("theta_deg", float, 0.0, -360, 360),
        Key("carrier_detuning_hz", float, 0.0),
        Key("dt_s", float, 2e-9, 0, None, True),
        Key("t_min_s", float, None),
        Key("t_max_s", float, None),
    ),
}


def parse_text(text, source="<config>"):
    """Parse ``key = value`` lines into a dict of raw strings."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {body!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}", key)
        out[key] = value
    return out


def parse_overrides(items):
    """``["k=v", ...]`` from the command line into a dict (later items win)."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        out[key] = value
    return out


def resolve(kind, raw):
    """Validate raw strings against the schema for ``kind`` and fill defaults."""
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {kind!r}")
    schema = {k.name: k for k in SCHEMAS[kind]}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} for {kind}", unknown[0])
    cfg = {}
    for name, key in schema.items():
        if name in raw:
            cfg[name] = key.convert(raw[name])
        elif key.required:
            raise ConfigError(f"missing required key {name!r} ({key.describe_range()})", name)
        else:
            cfg[name] = key.default
    _cross_check(kind, cfg)
    return cfg


def _exactly_one(cfg, a, b):
    if (cfg[a] is None) == (cfg[b] is None):
        raise ConfigError(f"exactly one of {a!r} and {b!r} must be given", a)


def _cross_check(kind, cfg):
    if kind == "simulate":
        _exactly_one(cfg, "pulse_t_s", "pulse_file")
        geo = [cfg[k] is None for k in ("beam_area_m2", "length_m", "wavelength_m")]
        if any(geo) and not all(geo):
            raise ConfigError("beam_area_m2, length_m and wavelength_m must be given together",
                              "beam_area_m2")
    if kind in ("simulate", "fit"):
        if cfg["t_min_s"] is not None and cfg["t_max_s"] is not None and cfg["t_max_s"] <= cfg["t_min_s"]:
            raise ConfigError("t_max_s must exceed t_min_s", "t_max_s")
    if kind == "sweep":
        if cfg["alpha_l_stop"] < cfg["alpha_l_start"]:
            raise ConfigError("empty sweep range: alpha_l_stop < alpha_l_start", "alpha_l_stop")
        if cfg["pulse_rule"] == "fixed" and cfg["pulse_t_s"] is None:
            raise ConfigError("pulse_rule = fixed requires pulse_t_s", "pulse_t_s")
        if cfg["pulse_rule"] == "half_T2" and cfg["pulse_t_s"] is not None:
            raise ConfigError("pulse_t_s is only used with pulse_rule = fixed", "pulse_t_s")
    if kind == "afc":
        _exactly_one(cfg, "finesse", "gamma_peak_hz")
        if cfg["gamma_peak_hz"] is not None and cfg["gamma_peak_hz"] >= cfg["delta_hz"]:
            raise ConfigError("gamma_peak_hz must be below delta_hz (finesse > 1)", "gamma_peak_hz")
        if cfg["sweep_param"] != "none":
            for k in ("sweep_start", "sweep_stop", "sweep_step"):
                if cfg[k] is None:
                    raise ConfigError(f"sweep_param = {cfg['sweep_param']} requires {k}", k)
            if cfg["sweep_stop"] < cfg["sweep_start"]:
                raise ConfigError("empty sweep range: sweep_stop < sweep_start", "sweep_stop")
            floor = 1.0 if cfg["sweep_param"] == "finesse" else 0.0
            if cfg["sweep_start"] < floor or (floor == 1.0 and cfg["sweep_start"] == 1.0):
                raise ConfigError(f"sweep_start out of range for {cfg['sweep_param']}", "sweep_start")
    if kind == "slowlight":
        if cfg["edge_softness_hz"] > cfg["hole_fwhm_hz"]:
            raise ConfigError("edge_softness_hz must not exceed hole_fwhm_hz", "edge_softness_hz")
        if cfg["t_min_s"] is not None and cfg["t_max_s"] is not None and cfg["t_max_s"] <= cfg["t_min_s"]:
            raise ConfigError("t_max_s must exceed t_min_s", "t_max_s")


def range_values(start, stop, step):
    """Inclusive arithmetic progression robust to round-off in ``step``."""
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(count)]


def canonical_text(cfg):
    """Sorted ``key = value`` echo of a resolved config (unset keys omitted)."""
    lines = []
    for k in sorted(cfg):
        v = cfg[k]
        if v is None:
            continue
        lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines)


def config_hash(kind, cfg):
    return hashlib.sha256(f"[{kind}]\n{canonical_text(cfg)}".encode()).hexdigest()
