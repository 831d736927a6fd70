"""Deterministic CSV and JSON documents for curves and summaries.

Every number is written with 9 significant digits. A provenance block (package
version, config hash and config echo) heads each file; there are no
timestamps, so identical configurations give byte-identical files.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .envelope import PulseEnvelope, TimeGrid
from .errors import ConfigError

__all__ = [
    "Provenance",
    "CurveDocument",
    "envelope_document",
    "write_csv",
    "write_json",
    "summary_json",
    "round_sig",
    "read_envelope_csv",
    "read_profile_csv",
]

_FMT = "%.9g"


def round_sig(x):
    """Round floats (recursively) to 9 significant digits; non-finite -> None."""
    if isinstance(x, dict):
        return {str(k): round_sig(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [round_sig(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return float(_FMT % v) if math.isfinite(v) else None
    return x


@dataclass(frozen=True)
class Provenance:
    version: str
    subcommand: str
    config_sha256: str
    config_text: str
    extra: tuple = ()

    def lines(self):
        out = [f"sfslab {self.version}", f"subcommand {self.subcommand}",
               f"config_sha256 {self.config_sha256}"]
        out += [f"config {line}" for line in self.config_text.splitlines()]
        out += [f"{k} {v}" for k, v in self.extra]
        return out

    def as_dict(self):
        return {
            "version": self.version,
            "subcommand": self.subcommand,
            "config_sha256": self.config_sha256,
            "config": self.config_text.splitlines(),
        }


@dataclass(frozen=True)
class CurveDocument:
    columns: tuple
    units: tuple
    rows: np.ndarray
    provenance: Provenance
    extra_provenance: tuple = field(default=())

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if len(self.columns) != len(self.units) or rows.shape[1] != len(self.columns):
            raise ValueError("CurveDocument: column, unit and data widths differ")
        object.__setattr__(self, "rows", rows)


def envelope_document(pulse, provenance, t_scale=1.0):
    """Curve document for an envelope: t, Re F, Im F, |F|^2.

    A discontinuity at a node is written as two rows with the same time, the
    left-hand limit first. ``t_scale`` reports times in units of ``t_scale``
    seconds (amplitudes are rescaled to keep ``sum |F|^2 dt`` invariant).
    """
    grid = pulse.grid
    t = grid.times
    rows = []
    amp = math.sqrt(t_scale)
    for k in range(grid.n):
        if k in pulse.left_limits:
            v = pulse.left_limits[k] * amp
            rows.append((t[k] / t_scale, v.real, v.imag, abs(v) ** 2))
        v = pulse.samples[k] * amp
        rows.append((t[k] / t_scale, v.real, v.imag, abs(v) ** 2))
    if t_scale == 1.0:
        cols, units = ("t_s", "re_f", "im_f", "intensity"), ("s", "s^-1/2", "s^-1/2", "s^-1")
    else:
        cols = ("t_over_t2", "re_f", "im_f", "intensity")
        units = ("T2", "T2^-1/2", "T2^-1/2", "T2^-1")
    extra = (("grid", f"t_start={grid.t_start / t_scale!r} dt={grid.dt / t_scale!r} n={grid.n}"),)
    return CurveDocument(cols, units, np.array(rows), provenance, extra)


def write_csv(doc, path):
    buf = io.StringIO()
    for line in doc.provenance.lines():
        buf.write(f"# {line}\n")
    for k, v in doc.extra_provenance:
        buf.write(f"# {k} {v}\n")
    buf.write(",".join(doc.columns) + "\n")
    buf.write(",".join(doc.units) + "\n")
    for row in doc.rows:
        buf.write(",".join(_FMT % v for v in row) + "\n")
    with open(path, "w", newline="\n") as fh:
        fh.write(buf.getvalue())


def _dump(obj):
    return json.dumps(round_sig(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(doc, path):
    obj = {
        "columns": list(doc.columns),
        "units": list(doc.units),
        "data": doc.rows.tolist(),
        "provenance": dict(doc.provenance.as_dict(), **dict(doc.extra_provenance)),
    }
    with open(path, "w", newline="\n") as fh:
        fh.write(_dump(obj))


def summary_json(summary, provenance, path):
    obj = dict(summary)
    obj["provenance"] = provenance.as_dict()
    with open(path, "w", newline="\n") as fh:
        fh.write(_dump(obj))


def _data_lines(path):
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    comments = [ln[1:].strip() for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    return comments, body


def read_envelope_csv(path):
    """Re-ingest an envelope CSV written by :func:`write_csv` (SI units).

    Repeated time rows mark a discontinuity: the first is the left-hand limit.
    When the provenance carries the exact grid it is used in preference to the
    rounded time column.
    """
    comments, body = _data_lines(path)
    if len(body) < 4:
        raise ConfigError(f"{path}: no envelope data")
    header = [c.strip() for c in next(csv.reader([body[0]]))]
    if header[:3] != ["t_s", "re_f", "im_f"]:
        raise ConfigError(f"{path}: expected columns t_s, re_f, im_f (SI units), got {header}")
    data = np.array([[float(v) for v in r[:3]] for r in csv.reader(body[2:])])
    t, f = data[:, 0], data[:, 1] + 1j * data[:, 2]
    dup = np.nonzero(np.diff(t) == 0)[0]
    keep = np.ones(t.size, dtype=bool)
    keep[dup] = False
    times, samples = t[keep], f[keep]
    grid = None
    for c in comments:
        if c.startswith("grid "):
            fields = dict(item.split("=") for item in c[5:].split())
            grid = TimeGrid(float(fields["t_start"]), float(fields["dt"]), int(fields["n"]))
    if grid is None or grid.n != times.size:
        grid = TimeGrid.from_times(times)
    limits = {}
    for i in dup:
        idx = int(i - np.searchsorted(dup, i))
        limits[idx] = f[i]
    return PulseEnvelope(grid, samples, limits, {"source": str(path)})


def read_profile_csv(path):
    """Two-column absorption table (frequency_hz, alpha_l); header lines optional."""
    _, body = _data_lines(path)
    rows = []
    for r in csv.reader(body):
        try:
            rows.append((float(r[0]), float(r[1])))
        except (ValueError, IndexError):
            if rows:
                raise ConfigError(f"{path}: malformed row {r}") from None
    if len(rows) < 4:
        raise ConfigError(f"{path}: need at least 4 rows of frequency_hz, alpha_l")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]
