"""Small-area pulse propagation through a Lorentzian resonant absorber.

The medium acts as a linear filter with impulse response

    H(t) = delta(t) - b * K(b t) * exp(-t / T2) * theta(t),

with ``K(u) = J1(2 sqrt(u)) / sqrt(u)`` and thickness parameter
``b = alpha_l / (2 T2)``.  The delta term is never discretised: every
propagator returns ``input + scattered``.

Time-reversed exponential inputs ``sqrt(2/T) exp(t/T)`` for ``t <= 0`` have a
closed-form output expressed through the scattered amplitude

    Psi(t) = sqrt(2/T) b int_t^inf K(b tau) exp(-tau/T2) exp(-(tau - t)/T) d tau,

so that the output is ``-Psi(t)`` after the pulse and
``(sqrt(2/T) - Psi(0)) exp(t/T)`` during it.  ``Psi(t) exp(-t/T)`` is the
amplitude function returned by :func:`phi`.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve, lfilter

from .envelope import PulseEnvelope, TimeGrid, pulse_energy
from .errors import DomainError, NonUniformGridError, PreconditionError
from .specfun import bessel_j0, sr_kernel

__all__ = [
    "ResonantMedium",
    "ExpReversedSpec",
    "BeamGeometry",
    "FresnelResult",
    "default_grid",
    "make_exp_reversed",
    "make_gaussian",
    "impulse_response_scattered",
    "analytic_transfer",
    "kernel_transfer",
    "phi",
    "phi0",
    "propagate_exp_reversed",
    "propagate_convolution",
    "out_thin",
    "out_short",
    "out_strong",
    "fresnel_number",
]

# Simpson step is min(T, T_R, T2) / _SIMPSON_DIVISOR (at most 1/50 of the scale)
_SIMPSON_DIVISOR = 100
# tail cut where the exponential weight drops below 1e-14
_TAIL_LOG = 14.0 * math.log(10.0)
_EDGE_INTENSITY = 1e-8


@dataclass(frozen=True)
class ResonantMedium:
    """Optically thick Lorentzian absorber.

    Attributes
    ----------
    alpha_l : float
        Resonant optical depth (intensity), dimensionless.
    t2 : float
        Phase relaxation time in seconds.
    """

    alpha_l: float
    t2: float

    def __post_init__(self):
        if not (self.alpha_l >= 0 and math.isfinite(self.alpha_l)):
            raise DomainError(f"alpha_l must be finite and >= 0, got {self.alpha_l}")
        if not (self.t2 > 0 and math.isfinite(self.t2)):
            raise DomainError(f"t2 must be finite and > 0, got {self.t2}")

    @property
    def b(self):
        """Thickness parameter alpha_l / (2 T2) in 1/s."""
        return self.alpha_l / (2.0 * self.t2)

    @property
    def t_r(self):
        """Superradiant lifetime 1/b (infinite for a transparent medium)."""
        return 1.0 / self.b if self.b > 0 else math.inf

    @property
    def gamma(self):
        """Lorentzian FWHM 1/(pi T2) in Hz."""
        return 1.0 / (math.pi * self.t2)


@dataclass(frozen=True)
class ExpReversedSpec:
    """Time-reversed exponential input of duration ``duration_t`` (seconds)."""

    duration_t: float

    def __post_init__(self):
        if not (self.duration_t > 0 and math.isfinite(self.duration_t)):
            raise DomainError(f"duration_t must be > 0, got {self.duration_t}")


@dataclass(frozen=True)
class BeamGeometry:
    cross_section_s: float
    length_l: float
    wavelength: float

    def __post_init__(self):
        for name in ("cross_section_s", "length_l", "wavelength"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class FresnelResult:
    value: float
    valid_1d: bool


def _scale(medium, T=None):
    scales = [medium.t2]
    if medium.b > 0:
        scales.append(medium.t_r)
    if T is not None:
        scales.append(T)
    return min(scales)


def _decay_horizon(medium):
    # 5 max(T2, T_R); T_R is infinite for alpha_l = 0, where T2 alone sets the decay
    return 5.0 * max(medium.t2, medium.t_r if medium.b > 0 else 0.0)


def default_grid(medium, spec, points_per_scale=200):
    """Default grid: ``dt = min(T, T2, T_R)/200`` over ``[-10T, 5 max(T2, T_R)]``."""
    T = spec.duration_t
    dt = _scale(medium, T) / points_per_scale
    return TimeGrid.spanning(-10.0 * T, _decay_horizon(medium), dt)


def _zero_node(grid, who):
    j0 = grid.node_index(0.0)
    if j0 is None:
        raise PreconditionError(f"{who}: t = 0 must be a grid node (use TimeGrid.spanning)")
    return j0


def _piecewise(grid, before, after, metadata=None):
    """Envelope equal to before(t) for t < 0 and after(t) for t >= 0.

    At a node t = 0 the sample holds after(0) and the left limit before(0).
    """
    t = grid.times
    out = np.zeros(grid.n, dtype=complex)
    neg = t < 0
    j0 = grid.node_index(0.0)
    if j0 is not None:
        neg[j0] = False
    out[neg] = before(t[neg])
    out[~neg] = after(np.maximum(t[~neg], 0.0))
    limits = {}
    if j0 is not None:
        limits[j0] = complex(before(np.array([0.0]))[0])
    meta = {"sample_at_discontinuity": "right_limit", "theta_zero": 0.5}
    meta.update(metadata or {})
    return PulseEnvelope(grid, out, limits, meta)


def make_exp_reversed(spec, grid):
    """Sample ``sqrt(2/T) exp(t/T)`` for ``t <= 0`` (zero afterwards).

    The grid must span ``[-10 T, 0]`` with ``t = 0`` on a node; the sample at
    ``t = 0`` carries the right-hand limit (0) and the left-hand limit
    ``sqrt(2/T)`` is recorded in ``left_limits``.
    """
    T = spec.duration_t
    if grid.t_start > -10.0 * T * (1 - 1e-12) or grid.t_end < 0:
        raise PreconditionError(
            f"make_exp_reversed: grid [{grid.t_start:.6g}, {grid.t_end:.6g}] s must span "
            f"at least [{-10.0 * T:.6g}, 0] s (10 T before t = 0)"
        )
    _zero_node(grid, "make_exp_reversed")
    amp = math.sqrt(2.0 / T)
    env = _piecewise(grid, lambda t: amp * np.exp(t / T), lambda t: np.zeros_like(t))
    return env.with_metadata(source="exp_reversed", pulse_t=T)


def make_gaussian(grid, fwhm, center=0.0, energy=1.0, chirp=0.0):
    """Gaussian envelope with intensity FWHM ``fwhm`` and the given total energy."""
    t = grid.times - center
    sigma_i = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    amp = (energy / (sigma_i * math.sqrt(2.0 * math.pi))) ** 0.5
    # intensity exp(-t^2 / (2 sigma_i^2)) -> amplitude exp(-t^2 / (4 sigma_i^2))
    f = amp * np.exp(-(t**2) / (4.0 * sigma_i**2) + 1j * chirp * t**2)
    return PulseEnvelope(grid, f, {}, {"source": "gaussian", "fwhm": fwhm})


def impulse_response_scattered(medium, t):
    """Non-delta part of the impulse response, ``-b K(b t) exp(-t/T2)`` for ``t >= 0``.

    Returns ``-b`` at ``t = 0``; the theta(0) = 1/2 weighting is applied by the
    convolution quadrature, not here.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("impulse_response_scattered: t must be finite and >= 0")
    b = medium.b
    if b == 0:
        out = np.zeros_like(arr)
    else:
        out = -b * np.asarray(sr_kernel(b * arr)) * np.exp(-arr / medium.t2)
    return float(out) if np.ndim(t) == 0 else out


def analytic_transfer(medium, nu):
    """Exact amplitude transfer function ``exp(-b / (1/T2 - 2 pi i nu))``.

    ``nu`` is the detuning in Hz. Envelopes use the convention
    ``F(t) = int F(nu) exp(-2 pi i nu t) d nu``.
    """
    nu = np.asarray(nu, dtype=float)
    return np.exp(-medium.b / (1.0 / medium.t2 - 2j * math.pi * nu))


def kernel_transfer(medium, dt, t_max, nu=0.0):
    """Trapezoidal Fourier transform of the sampled impulse response.

    ``1 + dt * sum' h(t_k) exp(2 pi i nu t_k)`` over ``[0, t_max]``; the delta
    part contributes the leading 1.
    """
    n = int(math.ceil(t_max / dt)) + 1
    tk = dt * np.arange(n)
    h = impulse_response_scattered(medium, tk)
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    nus = np.atleast_1d(np.asarray(nu, dtype=float))
    out = 1.0 + np.exp(2j * math.pi * np.outer(nus, tk)) @ (w * h)
    return complex(out[0]) if np.ndim(nu) == 0 else out


def _simpson_weights(m):
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _psi_quad(medium, T, t):
    """Psi(t) exp(t/T2) by composite Simpson; t is a 1-d array of times >= 0."""
    b = medium.b
    kappa = 1.0 / T + 1.0 / medium.t2
    h_max = _scale(medium, T) / _SIMPSON_DIVISOR
    span = _TAIL_LOG / kappa
    m = int(math.ceil(span / h_max))
    m += m % 2
    h = span / m
    s = h * np.arange(m + 1)
    w = _simpson_weights(m) * h * np.exp(-kappa * s)
    out = np.empty(t.size)
    chunk = max(1, 2_000_000 // (m + 1))
    for i in range(0, t.size, chunk):
        tt = t[i:i + chunk, None]
        out[i:i + chunk] = sr_kernel(b * (tt + s[None, :])) @ w
    return math.sqrt(2.0 / T) * b * out


def phi(medium, T, t):
    """Scattered-amplitude function Phi(t) (units s^-1/2), by quadrature.

    ``Phi(t) = sqrt(2/T) b int_t^inf K(b tau) exp(-tau (1/T2 + 1/T)) d tau``.
    The integral is truncated where the exponential weight has fallen by 1e-14
    relative to its value at ``t``.
    """
    if not T > 0:
        raise DomainError("phi: T must be > 0")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("phi: t must be finite and >= 0")
    flat = np.atleast_1d(arr).ravel()
    if medium.b == 0:
        out = np.zeros_like(flat)
    else:
        kappa = 1.0 / T + 1.0 / medium.t2
        out = _psi_quad(medium, T, flat) * np.exp(-kappa * flat)
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(t) == 0 else out


def phi0(medium, T):
    """Closed form ``Phi(0) = sqrt(2/T) (1 - exp(-b / (1/T + 1/T2)))``."""
    if not T > 0:
        raise DomainError("phi0: T must be > 0")
    return math.sqrt(2.0 / T) * -math.expm1(-medium.b / (1.0 / T + 1.0 / medium.t2))


def _psi_on_grid(medium, T, grid, j0):
    """Psi(t_k) for the nodes k >= j0 (t >= 0) by backward recursion.

    Psi(t_k) = exp(-dt/T) Psi(t_{k+1}) + sqrt(2/T) b int_{t_k}^{t_{k+1}} ...;
    each interval integral uses Simpson's rule with step <= min(T, T_R, T2)/100.
    """
    b, t2, dt = medium.b, medium.t2, grid.dt
    n_pos = grid.n - j0
    h_max = _scale(medium, T) / _SIMPSON_DIVISOR
    m = max(2, int(math.ceil(dt / h_max)))
    m += m % 2
    h = dt / m
    tau = h * np.arange((n_pos - 1) * m + 1)
    g = np.asarray(sr_kernel(b * tau)) * np.exp(-tau / t2)
    idx = np.arange(n_pos - 1)[:, None] * m + np.arange(m + 1)[None, :]
    w = _simpson_weights(m) * h * np.exp(-h * np.arange(m + 1) / T)
    interval = math.sqrt(2.0 / T) * b * (g[idx] @ w)
    t_last = grid.t_end
    psi_last = float(_psi_quad(medium, T, np.array([t_last]))[0] * math.exp(-t_last / t2))
    a = math.exp(-dt / T)
    rev = lfilter([1.0], [1.0, -a], interval[::-1], zi=[a * psi_last])[0]
    return np.concatenate([rev[::-1], [psi_last]])


def propagate_exp_reversed(medium, spec, grid=None):
    """Closed-form output for the time-reversed exponential input.

    ``F_out = (sqrt(2/T) - Phi(0)) exp(t/T)`` before ``t = 0`` and
    ``-Phi(t) exp(t/T)`` after. The node at ``t = 0`` stores the ``t -> 0+``
    limit, whose magnitude is Phi(0).
    """
    T = spec.duration_t
    if grid is None:
        grid = default_grid(medium, spec)
    horizon = _decay_horizon(medium)
    if grid.t_start > -10.0 * T * (1 - 1e-12) or grid.t_end < horizon * (1 - 1e-12):
        raise PreconditionError(
            f"propagate_exp_reversed: grid must cover [{-10.0 * T:.6g}, {horizon:.6g}] s "
            "(10 T before the pulse end, 5 max(T2, T_R) after)"
        )
    j0 = _zero_node(grid, "propagate_exp_reversed")
    pulse_in = make_exp_reversed(spec, grid)
    amp = math.sqrt(2.0 / T)
    t = grid.times
    out = np.zeros(grid.n, dtype=complex)
    if medium.b == 0:
        out[:j0] = amp * np.exp(t[:j0] / T)
        limits = {j0: complex(amp)}
    else:
        p0 = phi0(medium, T)
        out[:j0] = (amp - p0) * np.exp(t[:j0] / T)
        psi = _psi_on_grid(medium, T, grid, j0)
        out[j0:] = -psi
        limits = {j0: complex(amp - p0)}
    meta = {
        "source": "propagate_exp_reversed",
        "pulse_t": T,
        "input_energy": pulse_energy(pulse_in),
        "sample_at_discontinuity": "right_limit",
        "theta_zero": 0.5,
    }
    return PulseEnvelope(grid, out, limits, meta)


def propagate_convolution(medium, pulse):
    """Propagate an arbitrary envelope by direct convolution with the impulse response.

    The scattered part is the trapezoidal convolution integral, evaluated with
    FFTs; discontinuity nodes use the theta(0) = 1/2 midpoint value, so the
    quadrature error is O(dt^2). The delta part is applied exactly as identity.
    """
    grid = pulse.grid
    if not isinstance(grid, TimeGrid):
        raise NonUniformGridError("propagate_convolution: input must live on a uniform TimeGrid")
    n, dt = grid.n, grid.dt
    f_right = np.asarray(pulse.samples)
    f_left = pulse.left_samples()
    f_mid = pulse.midpoint_samples()

    warnings = []
    inten = np.abs(f_right) ** 2
    peak = max(inten.max(), np.abs(f_left).max() ** 2)
    if peak > 0 and (np.abs(f_left[0]) ** 2 > _EDGE_INTENSITY * peak
                     or inten[-1] > _EDGE_INTENSITY * peak):
        warnings.append("input intensity at grid ends exceeds 1e-8 of peak; tail truncated")

    meta = dict(pulse.metadata)
    meta.update(
        source="propagate_convolution",
        input_energy=pulse_energy(pulse),
        sample_at_discontinuity="right_limit",
        theta_zero=0.5,
        warnings=tuple(warnings),
    )
    if medium.b == 0:
        return PulseEnvelope(grid, f_right, dict(pulse.left_limits), meta)

    h = impulse_response_scattered(medium, dt * np.arange(n))
    full = fftconvolve(f_mid, h)[:n] * dt
    y = (full
         - dt * f_mid[0] * h + 0.5 * dt * f_right[0] * h
         - dt * f_mid * h[0] + 0.5 * dt * f_left * h[0])
    y[0] = 0.0
    limits = {k: v + y[k] for k, v in pulse.left_limits.items()}
    return PulseEnvelope(grid, f_right + y, limits, meta)


def _thin_coeff(medium, T):
    return medium.b * T * medium.t2 / (T + medium.t2)


def out_thin(medium, spec, grid):
    """Optically thin limit: output is the input scaled down plus an FID tail."""
    T = spec.duration_t
    amp = math.sqrt(2.0 / T)
    c = _thin_coeff(medium, T)
    return _piecewise(
        grid,
        lambda t: amp * (1.0 - c) * np.exp(t / T),
        lambda t: -amp * c * np.exp(-t / medium.t2),
        {"source": "out_thin", "pulse_t": T},
    )


def out_short(medium, spec, grid):
    """Short-excitation limit: the tail reproduces the impulse response."""
    T = spec.duration_t
    amp = math.sqrt(2.0 / T)
    b = medium.b
    return _piecewise(
        grid,
        lambda t: amp * (1.0 - b * T) * np.exp(t / T),
        lambda t: -amp * b * T * np.asarray(sr_kernel(b * t)) * np.exp(-t / medium.t2),
        {"source": "out_short", "pulse_t": T},
    )


def out_strong(medium, spec, grid):
    """Strong-superradiance limit ``-sqrt(2/T) J0(2 sqrt(b t))`` for ``t > 0``; zero before."""
    T = spec.duration_t
    amp = math.sqrt(2.0 / T)
    b = medium.b
    return _piecewise(
        grid,
        lambda t: np.zeros_like(t),
        lambda t: -amp * np.asarray(bessel_j0(2.0 * np.sqrt(b * t))),
        {"source": "out_strong", "pulse_t": T},
    )


def fresnel_number(geom):
    """Fresnel number ``S / (L lambda)`` of the interaction volume.

    ``valid_1d`` is set when the value is at least 10, i.e. when a
    one-dimensional propagation model is justified.
    """
    value = geom.cross_section_s / (geom.length_l * geom.wavelength)
    return FresnelResult(value=value, valid_1d=value >= 10.0)
