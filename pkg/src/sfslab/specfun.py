r"""Bessel-type special functions used by the propagation kernels.

Provides :math:`J_0`, :math:`J_1`, the exponentially scaled modified Bessel
functions :math:`e^{-x} I_0(x)`, :math:`e^{-x} I_1(x)` and the forward-scattering
kernel

.. math::
    K(u) = \frac{J_1(2\sqrt{u})}{\sqrt{u}}, \qquad K(0) = 1.

All functions accept scalars or arrays. Evaluation uses three regimes:

* ascending power series for small arguments,
* Miller's backward recurrence (normalised with
  :math:`J_0 + 2\sum_k J_{2k} = 1`) for intermediate arguments,
* Hankel / Hankel-type asymptotic expansions for large arguments.

The seams are placed so that neighbouring branches agree to better than
``1e-12`` relative (absolute near zeros of the functions); see
``tests/test_specfun.py``.
"""

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "bessel_j0",
    "bessel_j1",
    "sr_kernel",
    "bessel_i0_scaled",
    "bessel_i1_scaled",
    "SERIES_LIMIT",
    "ASYMPTOTIC_LIMIT",
    "I_ASYMPTOTIC_LIMIT",
]

# branch seams
SERIES_LIMIT = 8.0
ASYMPTOTIC_LIMIT = 25.0
I_ASYMPTOTIC_LIMIT = 30.0

_SERIES_TERMS = 32
_HANKEL_TERMS = 40
_MILLER_START = 100


def _prepare(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    return arr


def _finish(out, like):
    if np.ndim(like) == 0:
        return float(out)
    return out


def _j_series(x, nu):
    q = 0.25 * x * x
    term = np.ones_like(x) if nu == 0 else 0.5 * x
    total = term.copy()
    for k in range(1, _SERIES_TERMS):
        term = term * (-q) / (k * (k + nu))
        total += term
    return total


def _j_miller(x):
    """Return (J0, J1) for moderate positive x by backward recurrence."""
    n_start = max(_MILLER_START, 2 * int((x.max() + 40.0 + 10.0 * np.cbrt(x.max())) / 2) + 2)
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j1 = np.zeros_like(x)
    inv = 2.0 / x
    for k in range(n_start, 0, -1):
        j_prev = k * inv * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{k-1} (unnormalised)
        if k - 1 == 1:
            j1 = j_cur.copy()
        elif (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        big = np.abs(j_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j_cur *= scale
            j_next *= scale
            norm *= scale
            j1 *= scale
    norm += j_cur
    return j_cur / norm, j1 / norm


def _j_hankel(x, nu):
    mu = 4.0 * nu * nu
    c = np.ones_like(x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    for m in range(1, _HANKEL_TERMS):
        c = c * (mu - (2 * m - 1) ** 2) / (8.0 * m * x)
        if m % 2 == 0:
            p += c if (m // 2) % 2 == 0 else -c
        else:
            q += c if ((m - 1) // 2) % 2 == 0 else -c
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _j_nonneg(ax, nu):
    out = np.empty_like(ax)
    small = ax < SERIES_LIMIT
    large = ax >= ASYMPTOTIC_LIMIT
    mid = ~(small | large)
    if np.any(small):
        out[small] = _j_series(ax[small], nu)
    if np.any(mid):
        j0, j1 = _j_miller(ax[mid])
        out[mid] = j0 if nu == 0 else j1
    if np.any(large):
        out[large] = _j_hankel(ax[large], nu)
    return out


def bessel_j0(x):
    """Bessel function of the first kind of order zero.

    Parameters
    ----------
    x : float or array_like
        Finite real argument.

    Returns
    -------
    float or ndarray
        :math:`J_0(x)`; relative accuracy better than ``1e-12`` away from the
        zeros (absolute accuracy near them).
    """
    arr = _prepare(x, "bessel_j0")
    ax = np.atleast_1d(np.abs(arr))
    out = _j_nonneg(ax, 0).reshape(arr.shape)
    return _finish(out, x)


def bessel_j1(x):
    """Bessel function of the first kind of order one (odd in ``x``)."""
    arr = _prepare(x, "bessel_j1")
    ax = np.atleast_1d(np.abs(arr))
    out = _j_nonneg(ax, 1).reshape(arr.shape)
    out = np.where(arr < 0, -out, out)
    return _finish(out, x)


def sr_kernel(u):
    r"""Forward-scattering kernel :math:`J_1(2\sqrt{u})/\sqrt{u}` for ``u >= 0``.

    Continuously extended to 1 at ``u = 0``. For ``u < 16`` the ascending series
    :math:`\sum_k (-u)^k / (k!(k+1)!)` is summed directly, so there is no
    cancellation at tiny ``u``.
    """
    arr = _prepare(u, "sr_kernel")
    if np.any(arr < 0):
        raise DomainError("sr_kernel: argument must be >= 0")
    flat = np.atleast_1d(arr).astype(float)
    out = np.empty_like(flat)
    small = flat < 16.0
    if np.any(small):
        us = flat[small]
        term = np.ones_like(us)
        total = term.copy()
        for k in range(1, 40):
            term = term * (-us) / (k * (k + 1))
            total += term
        out[small] = total
    if np.any(~small):
        s = np.sqrt(flat[~small])
        out[~small] = _j_nonneg(2.0 * s, 1) / s
    return _finish(out.reshape(arr.shape), u)


def _i_scaled(x, nu, name):
    arr = _prepare(x, name)
    if np.any(arr < 0):
        raise DomainError(f"{name}: argument must be >= 0")
    flat = np.atleast_1d(arr).astype(float)
    out = np.empty_like(flat)
    small = flat < I_ASYMPTOTIC_LIMIT
    if np.any(small):
        xs = flat[small]
        q = 0.25 * xs * xs
        term = np.ones_like(xs) if nu == 0 else 0.5 * xs
        total = term.copy()
        k = 1
        while k < 300:
            term = term * q / (k * (k + nu))
            total += term
            if np.all(term <= 1e-18 * total):
                break
            k += 1
        out[small] = total * np.exp(-xs)
    if np.any(~small):
        xl = flat[~small]
        mu = 4.0 * nu * nu
        c = np.ones_like(xl)
        total = c.copy()
        for m in range(1, 40):
            c = -c * (mu - (2 * m - 1) ** 2) / (8.0 * m * xl)
            total += c
        out[~small] = total / np.sqrt(2.0 * math.pi * xl)
    return _finish(out.reshape(arr.shape), x)


def bessel_i0_scaled(x):
    r"""Exponentially scaled modified Bessel function :math:`e^{-x} I_0(x)`, ``x >= 0``.

    Never overflows; lies in ``(0, 1]``.
    """
    return _i_scaled(x, 0, "bessel_i0_scaled")


def bessel_i1_scaled(x):
    r""":math:`e^{-x} I_1(x)` for ``x >= 0``."""
    return _i_scaled(x, 1, "bessel_i1_scaled")
