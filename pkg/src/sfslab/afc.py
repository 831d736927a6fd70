"""Superradiant loss budget for atomic-frequency-comb memories.

A comb with peak spacing ``delta`` and peak width ``gamma_peak`` rephases after
``T_recall = 1/delta``. Each peak on its own re-emits collectively on the time
scale

    (T_single)_SR = F / (pi (2 + alpha_l x / 2)) * T_recall,

with finesse ``F = delta / gamma_peak`` and ``x = 1 + 2/sqrt(pi alpha_l)``.
When this is shorter than ``T_recall`` the single-peak emission drains the
stored excitation before the echo.
"""

import math
import warnings
from dataclasses import dataclass

from .analysis import x_approx, x_regime_valid
from .errors import DomainError, RegimeWarning

__all__ = ["AfcComb", "AfcAssessment", "sr_single_peak_time", "fid_time"]


@dataclass(frozen=True)
class AfcComb:
    delta: float
    gamma_peak: float
    alpha_l: float

    def __post_init__(self):
        if not (self.gamma_peak > 0 and self.delta > self.gamma_peak):
            raise DomainError("AfcComb requires delta > gamma_peak > 0 (finesse > 1)")
        if not (self.alpha_l >= 0 and math.isfinite(self.alpha_l)):
            raise DomainError("AfcComb: alpha_l must be >= 0")

    @classmethod
    def from_finesse(cls, finesse, alpha_l, delta=1e6):
        return cls(delta=delta, gamma_peak=delta / finesse, alpha_l=alpha_l)

    @property
    def finesse(self):
        return self.delta / self.gamma_peak

    @property
    def t_recall(self):
        return 1.0 / self.delta

    @property
    def t_single(self):
        return 1.0 / (math.pi * self.gamma_peak)


@dataclass(frozen=True)
class AfcAssessment:
    t_single_sr: float
    ratio_to_recall: float
    sr_loss_flagged: bool
    x: float
    x_in_regime: bool


def sr_single_peak_time(comb):
    """Collective single-peak emission time and its ratio to the recall time."""
    a = comb.alpha_l
    if a > 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            x = x_approx(a, "large")
        sr_term = 0.5 * a * x
        in_regime = x_regime_valid(a, "large")
    else:
        x, sr_term, in_regime = math.nan, 0.0, False
    ratio = comb.finesse / (math.pi * (2.0 + sr_term))
    return AfcAssessment(
        t_single_sr=ratio * comb.t_recall,
        ratio_to_recall=ratio,
        sr_loss_flagged=ratio < 1.0,
        x=x,
        x_in_regime=in_regime,
    )


def fid_time(gamma_peak):
    """Free-induction-decay time ``1/(pi gamma_peak)`` of a Lorentzian peak (Hz in, s out)."""
    if not gamma_peak > 0:
        raise DomainError("fid_time: gamma_peak must be > 0")
    return 1.0 / (math.pi * gamma_peak)
