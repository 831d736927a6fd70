"""Command-line front end: ``sfslab simulate|fit|sweep|afc|slowlight|validate``.

Exit status is 0 on success, 2 for configuration problems and 3 for numerical
failures; errors are reported as one JSON line on stderr.
"""

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .afc import AfcComb, fid_time, sr_single_peak_time
from .analysis import cumulative_energy, efficiency, fit_decay, sweep_theory, x_approx
from .config import SCHEMAS, canonical_text, config_hash, parse_overrides, parse_text, range_values, resolve
from .core import (BeamGeometry, ExpReversedSpec, ResonantMedium, default_grid, fresnel_number,
                   make_exp_reversed, make_gaussian, phi0, propagate_convolution,
                   propagate_exp_reversed)
from .envelope import TimeGrid, pulse_energy
from .errors import ConfigError, ConvergenceError, SfsError
from .output import (CurveDocument, Provenance, envelope_document, read_envelope_csv,
                     read_profile_csv, summary_json, write_csv, write_json)
from .slowlight import (MEASURED_DELAY, MEASURED_GROUP_VELOCITY, PitSpec, SpectralProfile,
                        build_pit, centroid_delay, group_delay, kk_transfer, polarized_propagate,
                        uniform_frequency_grid, vg_analytic)
from .svg import Panel, Series, render

__all__ = ["main", "build_parser"]

SUBCOMMANDS = tuple(SCHEMAS)
_SUFFIX = {"si": {1: "_s", -0.5: "_per_sqrt_s", -1: "_per_s"},
           "t2": {1: "_over_t2", -0.5: "_per_sqrt_t2", -1: "_per_t2"}}


class _Run:
    """Shared state of one subcommand invocation."""

    def __init__(self, kind, cfg, args):
        self.kind, self.cfg, self.args = kind, cfg, args
        self.out = args.out
        self.written = []
        self.provenance = Provenance(__version__, kind, config_hash(kind, cfg), canonical_text(cfg))

    def path(self, name):
        p = os.path.join(self.out, name)
        self.written.append(p)
        return p

    def curve(self, doc, stem):
        if self.args.format in ("csv", "both"):
            write_csv(doc, self.path(stem + ".csv"))
        if self.args.format in ("json", "both"):
            write_json(doc, self.path(stem + ".json"))

    def summary(self, obj, stem="summary"):
        summary_json(obj, self.provenance, self.path(stem + ".json"))

    def svg(self, panels, stem):
        if self.args.svg:
            render(panels, self.path(stem + ".svg"))


def _dimensioned(units, t2, entries):
    """Summary entries ``(name, value, power_of_seconds)`` in the chosen units."""
    out = {}
    for name, value, dim in entries:
        if dim == 0:
            out[name] = value
            continue
        scale = t2 if units == "t2" else 1.0
        out[name + _SUFFIX[units][dim]] = value / scale**dim
    return out


def _time_grid(cfg, medium, spec):
    base = default_grid(medium, spec, cfg["points_per_scale"])
    dt = cfg["dt_s"] or base.dt
    t_min = base.t_start if cfg["t_min_s"] is None else cfg["t_min_s"]
    t_max = base.t_end if cfg["t_max_s"] is None else cfg["t_max_s"]
    return TimeGrid.spanning(t_min, t_max, dt)


def _exp_reversed_run(cfg):
    medium = ResonantMedium(cfg["alpha_l"], cfg["t2_s"])
    spec = ExpReversedSpec(cfg["pulse_t_s"])
    grid = _time_grid(cfg, medium, spec)
    return medium, spec, make_exp_reversed(spec, grid), propagate_exp_reversed(medium, spec, grid)


def cmd_simulate(run):
    cfg, units = run.cfg, run.args.units
    t2 = cfg["t2_s"]
    entries = [("alpha_l", cfg["alpha_l"], 0), ("t2", t2, 1)]
    if cfg["pulse_t_s"] is not None:
        medium, spec, pulse_in, pulse_out = _exp_reversed_run(cfg)
        j0 = pulse_out.grid.node_index(0.0)
        entries += [
            ("pulse_t", spec.duration_t, 1),
            ("phi0", phi0(medium, spec.duration_t), -0.5),
            ("f_out_zero_plus", abs(pulse_out.samples[j0]), -0.5),
            ("efficiency", efficiency(pulse_out), 0),
        ]
    else:
        medium = ResonantMedium(cfg["alpha_l"], t2)
        pulse_in = read_envelope_csv(cfg["pulse_file"])
        pulse_out = propagate_convolution(medium, pulse_in)
    entries += [
        ("b", medium.b, -1),
        ("t_r", medium.t_r if medium.b > 0 else math.nan, 1),
        ("input_energy", pulse_energy(pulse_in), 0),
        ("output_energy", pulse_energy(pulse_out), 0),
        ("dt", pulse_out.grid.dt, 1),
    ]
    summary = _dimensioned(units, t2, entries)
    summary["gamma_hz"] = medium.gamma
    summary["warnings"] = list(pulse_out.metadata.get("warnings", ()))
    if cfg["beam_area_m2"] is not None:
        fr = fresnel_number(BeamGeometry(cfg["beam_area_m2"], cfg["length_m"], cfg["wavelength_m"]))
        summary["fresnel_number"] = fr.value
        summary["fresnel_valid_1d"] = fr.valid_1d
    scale = t2 if units == "t2" else 1.0
    run.curve(envelope_document(pulse_in, run.provenance, scale), "input")
    run.curve(envelope_document(pulse_out, run.provenance, scale), "output")
    run.summary(summary)
    t = pulse_out.times / scale
    run.svg([Panel("Envelope intensity", "t (T2)" if units == "t2" else "t (s)", "|F|^2",
                   (Series(t, pulse_in.intensity * scale, "input"),
                    Series(t, pulse_out.intensity * scale, "output")))], "simulate")


def cmd_fit(run):
    cfg, units = run.cfg, run.args.units
    medium, spec, _, pulse_out = _exp_reversed_run(cfg)
    fit = fit_decay(pulse_out, medium, spec, cfg["fit_mode"])
    t2 = medium.t2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        x_ref = x_approx(medium.alpha_l, "experiment_fit") if medium.alpha_l > 0 else math.nan
    summary = _dimensioned(units, t2, [
        ("t_dec", fit.t_dec, 1),
        ("i0_amp", fit.i0_amp, -1),
        ("x", fit.x, 0),
        ("efficiency", fit.efficiency, 0),
        ("residual", fit.residual, 0),
        ("window_end", fit.window_end, 1),
        ("x_experiment_fit", x_ref, 0),
    ])
    summary["mode"] = fit.mode
    run.summary(summary, "fit")
    j0 = pulse_out.grid.node_index(0.0)
    t = pulse_out.times[j0:] - pulse_out.times[j0]
    cum = cumulative_energy(pulse_out, j0)
    model = fit.efficiency * -np.expm1(-t / fit.t_dec)
    scale = t2 if units == "t2" else 1.0
    tcol, tunit = ("t_over_t2", "T2") if units == "t2" else ("t_s", "s")
    doc = CurveDocument((tcol, "cumulative_energy", "model"), (tunit, "1", "1"),
                        np.column_stack([t / scale, cum, model]), run.provenance)
    run.curve(doc, "cumulative")
    run.svg([Panel("Cumulative scattered energy", f"t ({tunit})", "energy",
                   (Series(t / scale, cum, "simulated"), Series(t / scale, model, "fit")))], "fit")


def cmd_sweep(run):
    cfg = run.cfg
    values = range_values(cfg["alpha_l_start"], cfg["alpha_l_stop"], cfg["alpha_l_step"])
    rule = "half_T2" if cfg["pulse_rule"] == "half_T2" else cfg["pulse_t_s"]
    res = sweep_theory(values, rule, cfg["t2_s"], cfg["workers"], cfg["points_per_scale"])
    cols = ("alpha_l", "t_over_t2", "t_dec_over_t2", "x", "efficiency")
    doc = CurveDocument(cols, ("1",) * 5, np.array([tuple(r) for r in res.rows]), run.provenance)
    run.curve(doc, "sweep")
    a = res.column("alpha_l")
    law = 1.0 / (2.0 + 0.5 * a * (1.0 + 0.055 * a))
    run.svg([
        Panel("Decay time", "alpha L", "T_dec / T2",
              (Series(a, res.column("t_dec_over_t2"), "simulated"),
               Series(a, law, "x = 1 + 0.055 aL"))),
        Panel("Forward-scattering efficiency", "alpha L", "efficiency",
              (Series(a, res.column("efficiency"), "simulated"),)),
    ], "sweep")


def _comb(cfg, alpha_l=None, finesse=None):
    a = cfg["alpha_l"] if alpha_l is None else alpha_l
    if finesse is not None:
        return AfcComb.from_finesse(finesse, a, cfg["delta_hz"])
    if cfg["finesse"] is not None:
        return AfcComb.from_finesse(cfg["finesse"], a, cfg["delta_hz"])
    return AfcComb(cfg["delta_hz"], cfg["gamma_peak_hz"], a)


def cmd_afc(run):
    cfg = run.cfg
    if run.args.units == "t2":
        raise ConfigError("--units t2 is not defined for afc (no single T2)", "units")
    comb = _comb(cfg)
    res = sr_single_peak_time(comb)
    run.summary({
        "alpha_l": comb.alpha_l,
        "delta_hz": comb.delta,
        "gamma_peak_hz": comb.gamma_peak,
        "finesse": comb.finesse,
        "t_recall_s": comb.t_recall,
        "t_single_s": comb.t_single,
        "fid_time_s": fid_time(comb.gamma_peak),
        "t_single_sr_s": res.t_single_sr,
        "ratio_to_recall": res.ratio_to_recall,
        "sr_loss_flagged": res.sr_loss_flagged,
        "x": res.x,
        "x_in_regime": res.x_in_regime,
    }, "afc")
    param = cfg["sweep_param"]
    if param == "none":
        return
    rows = []
    for v in range_values(cfg["sweep_start"], cfg["sweep_stop"], cfg["sweep_step"]):
        c = _comb(cfg, alpha_l=v) if param == "alpha_l" else _comb(cfg, finesse=v)
        r = sr_single_peak_time(c)
        rows.append((v, r.ratio_to_recall, r.t_single_sr, float(r.sr_loss_flagged)))
    doc = CurveDocument((param, "ratio_to_recall", "t_single_sr_s", "sr_loss_flagged"),
                        ("1", "1", "s", "bool"), np.array(rows), run.provenance)
    run.curve(doc, "afc_sweep")
    arr = np.array(rows)
    run.svg([Panel("Single-peak emission time", param, "T_single,SR / T_recall",
                   (Series(arr[:, 0], arr[:, 1], "ratio"),
                    Series(arr[:, 0], np.ones(len(rows)), "recall")))], "afc")


def cmd_slowlight(run):
    cfg = run.cfg
    if run.args.units == "t2":
        raise ConfigError("--units t2 is not defined for slowlight", "units")
    if cfg["profile_file"] is not None:
        freq, a = read_profile_csv(cfg["profile_file"])
        profile = SpectralProfile(freq, a)
        pit = None
    else:
        pit = PitSpec(cfg["background_alpha_l"], cfg["hole_fwhm_hz"], cfg["edge_softness_hz"],
                      cfg["length_m"])
        profile = build_pit(pit, uniform_frequency_grid(cfg["freq_span_hz"], cfg["freq_points"]))
    tf = kk_transfer(profile)
    fwhm = cfg["pulse_fwhm_s"]
    t_min = -6.0 * fwhm if cfg["t_min_s"] is None else cfg["t_min_s"]
    t_max = 12.0 * fwhm if cfg["t_max_s"] is None else cfg["t_max_s"]
    grid = TimeGrid.spanning(t_min, t_max, cfg["dt_s"])
    pulse = make_gaussian(grid, fwhm)
    theta = math.radians(cfg["theta_deg"])
    nu0 = cfg["carrier_detuning_hz"]
    res = polarized_propagate(tf, pulse, theta, nu0)
    full = polarized_propagate(tf, pulse, 0.0, nu0).parallel_out
    band = 0.441 / fwhm
    delay = group_delay(tf, nu0, band)
    summary = {
        "theta_deg": cfg["theta_deg"],
        "carrier_detuning_hz": nu0,
        "group_delay_s": delay,
        "centroid_delay_s": centroid_delay(full, pulse),
        "delay_band_hz": band,
        "energy_input": pulse_energy(pulse),
        "energy_parallel_before_medium": math.cos(theta) ** 2 * pulse_energy(pulse),
        "energy_parallel": res.energy_parallel,
        "energy_perpendicular": res.energy_perpendicular,
        "measured_delay_s": MEASURED_DELAY,
        "measured_group_velocity_m_s": MEASURED_GROUP_VELOCITY,
        "length_m": cfg["length_m"],
        "group_velocity_numeric_m_s": cfg["length_m"] / delay if delay > 0 else math.nan,
        "warnings": list(res.parallel_out.metadata.get("warnings", ())),
    }
    if pit is not None:
        vg = vg_analytic(pit.hole_fwhm, pit.alpha_per_m)
        summary.update(vg_analytic_m_s=vg, delay_analytic_s=pit.length_l / vg,
                       hole_fwhm_hz=pit.hole_fwhm, background_alpha_l=pit.background_alpha_l)
    run.summary(summary)
    run.curve(envelope_document(pulse, run.provenance), "input")
    run.curve(envelope_document(res.parallel_out, run.provenance), "parallel")
    run.curve(envelope_document(res.perpendicular_out, run.provenance), "perpendicular")
    t_us = grid.times * 1e6
    run.svg([Panel("Polarization channels", "t (us)", "|F|^2 (1/s)",
                   (Series(t_us, pulse.intensity, "input"),
                    Series(t_us, res.parallel_out.intensity, "parallel (delayed)"),
                    Series(t_us, res.perpendicular_out.intensity, "perpendicular")))],
            "slowlight")


_COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "sweep": cmd_sweep, "afc": cmd_afc,
             "slowlight": cmd_slowlight}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (wins over the file)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("csv", "json", "both"), default="csv")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("--units", choices=("si", "t2"), default="si",
                        help="report times in seconds or in units of T2")
    parser = argparse.ArgumentParser(prog="sfslab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sfslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    v = sub.add_parser("validate", parents=[common], help="check a configuration only")
    v.add_argument("kind", choices=SUBCOMMANDS)
    return parser


def _load(kind, args):
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = parse_text(fh.read(), args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
    raw.update(parse_overrides(args.set))
    return resolve(kind, raw)


def _fail(code, kind, message, **extra):
    print(json.dumps(dict(error=kind, message=message, **extra), sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    kind = args.kind if args.command == "validate" else args.command
    try:
        cfg = _load(kind, args)
        if args.command == "validate":
            print(json.dumps({"status": "ok", "subcommand": kind,
                              "config_sha256": config_hash(kind, cfg)}, sort_keys=True))
            return 0
        os.makedirs(args.out, exist_ok=True)
        run = _Run(kind, cfg, args)
        _COMMANDS[kind](run)
    except ConfigError as exc:
        return _fail(2, "config", str(exc), key=exc.key)
    except ConvergenceError as exc:
        return _fail(3, "numerical", str(exc), residual=exc.residual)
    except (FloatingPointError, ArithmeticError) as exc:
        return _fail(3, "numerical", str(exc))
    except SfsError as exc:
        # precondition and domain violations stem from the requested parameters
        return _fail(2, "config", str(exc), type=type(exc).__name__)
    print(json.dumps({"status": "ok", "subcommand": kind, "files": run.written}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
