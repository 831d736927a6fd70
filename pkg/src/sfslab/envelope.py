"""Uniform time grids and sampled complex pulse envelopes.

A :class:`PulseEnvelope` may be discontinuous at grid nodes (the time-reversed
exponential input switches off abruptly at ``t = 0``).  At such a node the
stored sample is the right-hand limit ``F(t+0)`` and the left-hand limit is kept
in ``left_limits``.  Energies and convolutions use the appropriate one-sided
limit on each side of the node, which keeps trapezoidal quadrature second-order
accurate across the jump.
"""

import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import NonUniformGridError, PreconditionError

__all__ = ["TimeGrid", "PulseEnvelope", "pulse_energy", "relative_l2", "is_power_of_two"]

_NODE_TOL = 1e-9


def is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = t_start + k*dt`` for ``k = 0..n-1`` (seconds)."""

    t_start: float
    dt: float
    n: int

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise PreconditionError(f"TimeGrid: dt must be positive, got {self.dt}")
        if int(self.n) != self.n or self.n < 2:
            raise PreconditionError(f"TimeGrid: n must be an integer >= 2, got {self.n}")
        if not math.isfinite(self.t_start):
            raise PreconditionError("TimeGrid: t_start must be finite")

    @classmethod
    def spanning(cls, t_min, t_max, dt):
        """Smallest node-aligned grid covering ``[t_min, t_max]``.

        Nodes sit on integer multiples of ``dt`` so ``t = 0`` is always a node
        when the span contains it.
        """
        if t_max <= t_min:
            raise PreconditionError("TimeGrid.spanning: t_max must exceed t_min")
        k0 = math.floor(t_min / dt + 1e-9)
        k1 = math.ceil(t_max / dt - 1e-9)
        return cls(t_start=k0 * dt, dt=dt, n=k1 - k0 + 1)

    @classmethod
    def from_times(cls, times, rtol=1e-6):
        """Rebuild a grid from sample times, rejecting non-uniform spacing."""
        t = np.asarray(times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise PreconditionError("need at least two sample times")
        dt = (t[-1] - t[0]) / (t.size - 1)
        if dt <= 0 or np.max(np.abs(np.diff(t) - dt)) > rtol * dt:
            raise NonUniformGridError("sample times are not uniformly spaced")
        # snap to the node lattice when the samples came from a node-aligned grid
        k0 = round(t[0] / dt)
        t_start = k0 * dt if abs(t[0] - k0 * dt) <= rtol * dt else float(t[0])
        return cls(t_start=t_start, dt=float(dt), n=int(t.size))

    @property
    def times(self):
        return self.t_start + self.dt * np.arange(self.n)

    @property
    def t_end(self):
        return self.t_start + self.dt * (self.n - 1)

    def node_index(self, t):
        """Index of the node at time ``t``, or ``None`` if ``t`` is not a node."""
        k = round((t - self.t_start) / self.dt)
        if 0 <= k < self.n and abs(self.t_start + k * self.dt - t) <= _NODE_TOL * self.dt:
            return int(k)
        return None


@dataclass(frozen=True)
class PulseEnvelope:
    """Complex envelope sampled on a :class:`TimeGrid`.

    ``samples`` are in units of s^-1/2 so that ``sum |F|^2 dt`` is dimensionless.
    ``left_limits`` maps node index -> left-hand limit at a discontinuity.
    Instances are immutable; the sample array is made read-only.
    """

    grid: TimeGrid
    samples: np.ndarray
    left_limits: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.shape != (self.grid.n,):
            raise PreconditionError(
                f"PulseEnvelope: expected {self.grid.n} samples, got shape {s.shape}"
            )
        if not np.all(np.isfinite(s)):
            raise PreconditionError("PulseEnvelope: samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        limits = {int(k): complex(v) for k, v in dict(self.left_limits).items()}
        for k in limits:
            if not 0 <= k < self.grid.n:
                raise PreconditionError(f"PulseEnvelope: jump index {k} outside grid")
        object.__setattr__(self, "left_limits", MappingProxyType(limits))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    @property
    def times(self):
        return self.grid.times

    @property
    def intensity(self):
        return np.abs(self.samples) ** 2

    def left_samples(self):
        """Samples with left-hand limits substituted at discontinuities."""
        out = np.array(self.samples)
        for k, v in self.left_limits.items():
            out[k] = v
        return out

    def midpoint_samples(self):
        """Samples with the mean of both one-sided limits at discontinuities.

        This is the theta(0) = 1/2 value; it is what a trapezoidal rule needs to
        integrate a function with a jump at a node to second order.
        """
        out = np.array(self.samples)
        for k, v in self.left_limits.items():
            out[k] = 0.5 * (out[k] + v)
        return out

    def with_metadata(self, **extra):
        meta = dict(self.metadata)
        meta.update(extra)
        return PulseEnvelope(self.grid, self.samples, dict(self.left_limits), meta)

    def scaled(self, factor):
        limits = {k: factor * v for k, v in self.left_limits.items()}
        return PulseEnvelope(self.grid, factor * self.samples, limits, dict(self.metadata))


def relative_l2(a, b):
    """Relative L2 distance ``||a - b|| / ||b||`` between envelopes on one grid.

    Discontinuity nodes contribute their one-sided limits on each side.
    """
    if a.grid != b.grid:
        raise PreconditionError("relative_l2: envelopes live on different grids")
    ra = np.abs(a.samples - b.samples) ** 2
    la = np.abs(a.left_samples() - b.left_samples()) ** 2
    rb = np.abs(b.samples) ** 2
    lb = np.abs(b.left_samples()) ** 2
    num = 0.5 * (ra[:-1].sum() + la[1:].sum())
    den = 0.5 * (rb[:-1].sum() + lb[1:].sum())
    if den == 0:
        return math.sqrt(num)
    return math.sqrt(num / den)


def pulse_energy(pulse, i_from=0, i_to=None):
    """Trapezoidal energy between nodes ``i_from`` and ``i_to`` (inclusive).

    Segment ``[k, k+1]`` uses the right limit at ``k`` and the left limit at
    ``k+1``, so a jump at a node costs no accuracy.
    """
    n = pulse.grid.n
    i_to = n - 1 if i_to is None else i_to
    if i_to <= i_from:
        return 0.0
    right = np.abs(pulse.samples[i_from:i_to]) ** 2
    left = np.abs(pulse.left_samples()[i_from + 1:i_to + 1]) ** 2
    return float(0.5 * pulse.grid.dt * (right.sum() + left.sum()))
