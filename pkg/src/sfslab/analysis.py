"""Observables extracted from simulated output envelopes.

Decay fits follow the single-exponential model ``|F(t)|^2 = I0 exp(-t/T_dec)``
with

    1/T_dec = 2/T2 + (alpha_l / (2 T2)) x,

fitted on the cumulative energy ``int_0^t |F|^2 = E (1 - exp(-t/T_dec))``
where ``E = I0 T_dec`` is the forward-scattering efficiency.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import least_squares

from .core import ExpReversedSpec, ResonantMedium, default_grid, phi0, propagate_exp_reversed
from .envelope import pulse_energy
from .errors import ConvergenceError, DomainError, PreconditionError, RegimeWarning
from .specfun import bessel_i0_scaled, bessel_i1_scaled

__all__ = [
    "DecayFit",
    "SweepRow",
    "SweepResult",
    "energy",
    "cumulative_energy",
    "efficiency",
    "fit_decay",
    "decay_time",
    "x_from_tdec",
    "x_approx",
    "x_regime_valid",
    "closed_form_efficiency_short",
    "sweep_theory",
]

UNIT_ENERGY_TOL = 1e-4
TAIL_FRACTION = 1e-4
WINDOW_FRACTION = 0.9999

X_REGIMES = ("small", "large", "experiment_fit")


@dataclass(frozen=True)
class DecayFit:
    t_dec: float
    i0_amp: float
    x: float
    efficiency: float
    residual: float
    mode: str
    window_end: float


class SweepRow(NamedTuple):
    alpha_l: float
    t_over_t2: float
    t_dec_over_t2: float
    x: float
    efficiency: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])


def energy(pulse, from_t=None, to_t=None):
    """Trapezoidal energy ``int |F|^2 dt`` over ``[from_t, to_t]`` (default: whole grid).

    Window ends between nodes are handled by linear interpolation of the
    intensity inside the cut segment, which keeps the result additive over
    adjacent windows.
    """
    grid = pulse.grid
    tol = 1e-9 * grid.dt
    a = grid.t_start if from_t is None else float(from_t)
    b = grid.t_end if to_t is None else float(to_t)
    if a > b:
        raise PreconditionError("energy: from_t must not exceed to_t")
    if a < grid.t_start - tol or b > grid.t_end + tol:
        raise PreconditionError(
            f"energy: window [{a:.6g}, {b:.6g}] outside grid "
            f"[{grid.t_start:.6g}, {grid.t_end:.6g}]"
        )
    pa = min(max((a - grid.t_start) / grid.dt, 0.0), grid.n - 1)
    pb = min(max((b - grid.t_start) / grid.dt, 0.0), grid.n - 1)
    right = np.abs(pulse.samples) ** 2
    left = np.abs(pulse.left_samples()) ** 2

    def partial(k, f0, f1):
        r, l_ = right[k], left[k + 1]
        return grid.dt * (r * (f1 - f0) + 0.5 * (l_ - r) * (f1 * f1 - f0 * f0))

    ia = math.ceil(pa - 1e-9)
    ib = math.floor(pb + 1e-9)
    if ia > ib:
        k = int(math.floor(pa))
        return float(partial(k, pa - k, pb - k))
    total = pulse_energy(pulse, ia, ib)
    if pa < ia - 1e-9:
        total += partial(ia - 1, pa - (ia - 1), 1.0)
    if pb > ib + 1e-9:
        total += partial(ib, 0.0, pb - ib)
    return float(total)


def cumulative_energy(pulse, from_index):
    """Running trapezoidal energy from node ``from_index`` to every later node."""
    right = np.abs(pulse.samples[from_index:-1]) ** 2
    left = np.abs(pulse.left_samples()[from_index + 1:]) ** 2
    return np.concatenate([[0.0], np.cumsum(0.5 * pulse.grid.dt * (right + left))])


def _zero_index(pulse):
    j0 = pulse.grid.node_index(0.0)
    if j0 is None:
        raise PreconditionError("t = 0 must be a grid node")
    return j0


def efficiency(output):
    """Scattered energy after the input pulse, ``int_0^inf |F_out|^2``.

    Only meaningful for unit-energy inputs; the propagators record the input
    energy in ``output.metadata["input_energy"]``.
    """
    e_in = output.metadata.get("input_energy")
    if e_in is None or abs(e_in - 1.0) > UNIT_ENERGY_TOL:
        raise PreconditionError(
            f"efficiency: output must come from a unit-energy input (input_energy={e_in})"
        )
    return energy(output, 0.0, output.grid.t_end)


def decay_time(medium, x):
    """Effective decay time ``T2 / (2 + alpha_l x / 2)``."""
    return medium.t2 / (2.0 + 0.5 * medium.alpha_l * x)


def x_from_tdec(medium, t_dec):
    """Invert the decay-time law for the x parameter."""
    if medium.alpha_l == 0:
        raise DomainError("x is undefined for alpha_l = 0")
    if not t_dec > 0:
        raise DomainError("t_dec must be > 0")
    return (medium.t2 / t_dec - 2.0) * 2.0 / medium.alpha_l


def x_regime_valid(alpha_l, regime):
    if regime == "small":
        return alpha_l <= 1.0
    if regime == "large":
        return alpha_l >= 10.0
    if regime == "experiment_fit":
        return 0.5 <= alpha_l <= 5.0
    raise ValueError(f"unknown x regime {regime!r}; expected one of {X_REGIMES}")


def x_approx(alpha_l, regime):
    """Closed-form approximations of x.

    ``small``: 1 + alpha_l/24 (alpha_l <~ 1); ``large``: 1 + 2/sqrt(pi alpha_l);
    ``experiment_fit``: 1 + 0.055 alpha_l (T = T2/2, 0.5 <= alpha_l <= 5).
    A :class:`RegimeWarning` is issued outside the stated range.
    """
    if not alpha_l > 0:
        raise DomainError("x_approx: alpha_l must be > 0")
    if not x_regime_valid(alpha_l, regime):
        warnings.warn(f"x_approx({regime!r}) used at alpha_l={alpha_l}", RegimeWarning, stacklevel=2)
    if regime == "small":
        return 1.0 + alpha_l / 24.0
    if regime == "large":
        return 1.0 + 2.0 / math.sqrt(math.pi * alpha_l)
    return 1.0 + 0.055 * alpha_l


def closed_form_efficiency_short(medium, T):
    """Efficiency for excitation much shorter than T_R and T2.

    ``2 T b [1 - e^{-b T2} (I0(b T2) + I1(b T2))]``, evaluated with scaled Bessel
    functions so large optical depths do not overflow.
    """
    b = medium.b
    if b > 0 and T > medium.t_r / 10.0:
        warnings.warn("closed_form_efficiency_short: T exceeds T_R/10", RegimeWarning, stacklevel=2)
    x = b * medium.t2
    return 2.0 * T * b * (1.0 - bessel_i0_scaled(x) - bessel_i1_scaled(x))


def _model(params, t):
    e, tau = params
    return e * -np.expm1(-t / tau)


def fit_decay(output, medium, spec, mode="phi0_pinned"):
    """Fit the post-pulse decay of ``output``.

    Parameters
    ----------
    output : PulseEnvelope
        Output of a unit-energy time-reversed exponential input.
    medium : ResonantMedium
    spec : ExpReversedSpec
    mode : {"phi0_pinned", "free_fit"}
        ``phi0_pinned`` fixes ``I0 = Phi(0)^2`` and takes ``T_dec = E / I0``.
        ``free_fit`` runs Levenberg-Marquardt for ``(E, T_dec)`` on the
        cumulative-energy curve, starting from the pinned result.

    Returns
    -------
    DecayFit
    """
    if mode not in ("phi0_pinned", "free_fit"):
        raise ValueError(f"unknown fit mode {mode!r}")
    if medium.alpha_l == 0:
        raise DomainError("fit_decay: a transparent medium has no decay to fit")
    j0 = _zero_index(output)
    eff = efficiency(output)
    i0_pinned = phi0(medium, spec.duration_t) ** 2
    t_dec = eff / i0_pinned

    t = output.grid.times[j0:] - output.grid.times[j0]
    cum = cumulative_energy(output, j0)
    tail = abs(output.samples[-1]) ** 2 * t_dec
    if tail > TAIL_FRACTION * eff:
        raise PreconditionError(
            f"fit_decay: decay not contained in grid (estimated tail {tail:.3g} vs E={eff:.3g})"
        )
    k_end = int(np.searchsorted(cum, WINDOW_FRACTION * cum[-1])) + 1
    k_end = min(max(k_end, 3), t.size)
    tw, cw = t[:k_end], cum[:k_end]

    if mode == "phi0_pinned":
        resid = cw - _model((eff, t_dec), tw)
        return DecayFit(
            t_dec=t_dec,
            i0_amp=i0_pinned,
            x=x_from_tdec(medium, t_dec),
            efficiency=eff,
            residual=float(np.sqrt(np.mean(resid**2))),
            mode=mode,
            window_end=float(tw[-1]),
        )

    scale = np.array([eff, t_dec])

    def fun(p):
        return _model(p * scale, tw) - cw

    def jac(p):
        e, tau = p * scale
        ex = np.exp(-tw / tau)
        return np.column_stack([(1.0 - ex) * scale[0], -e * tw / tau**2 * ex * scale[1]])

    sol = least_squares(fun, np.ones(2), jac=jac, method="lm", xtol=1e-10, ftol=1e-15,
                        gtol=1e-15, max_nfev=200)
    e_fit, tau_fit = sol.x * scale
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    if sol.status <= 0 or not (tau_fit > 0 and np.isfinite(e_fit)):
        raise ConvergenceError(
            f"fit_decay: Levenberg-Marquardt did not converge ({sol.message})",
            best=(float(e_fit), float(tau_fit)),
            residual=rms,
        )
    return DecayFit(
        t_dec=float(tau_fit),
        i0_amp=float(e_fit / tau_fit),
        x=x_from_tdec(medium, tau_fit),
        efficiency=float(e_fit),
        residual=rms,
        mode=mode,
        window_end=float(tw[-1]),
    )


def _pulse_duration(t_rule, t2):
    if t_rule == "half_T2":
        return 0.5 * t2
    T = float(t_rule)
    if not T > 0:
        raise DomainError("fixed pulse duration must be > 0")
    return T


def _sweep_point(alpha_l, T, t2, points_per_scale):
    medium = ResonantMedium(alpha_l, t2)
    spec = ExpReversedSpec(T)
    out = propagate_exp_reversed(medium, spec, default_grid(medium, spec, points_per_scale))
    fit = fit_decay(out, medium, spec, "phi0_pinned")
    return SweepRow(alpha_l, T / t2, fit.t_dec / t2, fit.x, fit.efficiency)


def sweep_theory(alpha_l_values, t_rule="half_T2", medium_t2=1.0, workers=None,
                 points_per_scale=200):
    """Decay time, x and efficiency over a sorted list of optical depths.

    ``t_rule`` is ``"half_T2"`` (T = T2/2) or a fixed pulse duration in
    seconds. Points are independent; with ``workers > 1`` they run in a thread
    pool, and rows are always returned in input order.
    """
    values = [float(v) for v in alpha_l_values]
    if not values:
        raise DomainError("sweep_theory: empty alpha_l list")
    if any(v <= 0 for v in values) or any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError("sweep_theory: alpha_l values must be positive and strictly increasing")
    T = _pulse_duration(t_rule, medium_t2)

    def run(v):
        return _sweep_point(v, T, medium_t2, points_per_scale)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, values))
    else:
        rows = [run(v) for v in values]
    return SweepResult(tuple(rows))
