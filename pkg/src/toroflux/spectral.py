"""Trigonometric collocation helpers on the doubly periodic cell (0, 2*pi)^2.

Fields are sampled on an n_mu x n_nu uniform open grid (node 0 included, node
2*pi excluded).  Differentiation is exact for the trigonometric interpolant;
products of sampled fields are de-aliased with 3/2-rule zero padding.  The
Nyquist coefficient of an even-length axis is split between +n/2 and -n/2 when
changing resolution, which keeps interpolants real and transfer operators
mutually adjoint.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT ordering."""
    return np.fft.fftfreq(n, d=1.0 / n)


def _diff_factors(n: int) -> np.ndarray:
    # ik with the Nyquist mode dropped: its sampled derivative is ill-defined
    # and keeping it breaks the skew symmetry of the derivative operator.
    fac = 1j * np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        fac[n // 2] = 0.0
    return fac


def deriv_mu(a: np.ndarray) -> np.ndarray:
    """Spectral d/dmu along axis 0."""
    ah = np.fft.fft(a, axis=0)
    ah *= _diff_factors(a.shape[0])[:, None]
    return np.fft.ifft(ah, axis=0).real


def deriv_nu(a: np.ndarray) -> np.ndarray:
    """Spectral d/dnu along axis 1."""
    ah = np.fft.fft(a, axis=1)
    ah *= _diff_factors(a.shape[1])[None, :]
    return np.fft.ifft(ah, axis=1).real


def _pad_axis(ah: np.ndarray, axis: int, m: int) -> np.ndarray:
    """Zero-pad one FFT axis from n to m >= n, splitting the Nyquist mode."""
    n = ah.shape[axis]
    if m == n:
        return ah
    moved = np.moveaxis(ah, axis, 0)
    out = np.zeros((m,) + moved.shape[1:], dtype=complex)
    h = n // 2
    out[:h] = moved[:h]
    if n % 2 == 0:
        out[h] = 0.5 * moved[h]
        out[m - h] = 0.5 * moved[h]
        out[m - h + 1 :] = moved[h + 1 :]
    else:
        out[m - h :] = moved[n - h :]
    return np.moveaxis(out, 0, axis)


def _truncate_axis(ah: np.ndarray, axis: int, n: int) -> np.ndarray:
    """Drop modes beyond +-n/2, folding fine +-n/2 into the coarse Nyquist."""
    m = ah.shape[axis]
    if m == n:
        return ah
    moved = np.moveaxis(ah, axis, 0)
    out = np.zeros((n,) + moved.shape[1:], dtype=complex)
    h = n // 2
    out[:h] = moved[:h]
    if n % 2 == 0:
        out[h] = moved[h] + moved[m - h]
        out[h + 1 :] = moved[m - h + 1 :]
    else:
        out[n - h :] = moved[m - h :]
    return np.moveaxis(out, 0, axis)


def _pad_shape(n: int) -> int:
    m = (3 * n) // 2
    return m + (m % 2)


def pad_to_fine(a: np.ndarray, m0: int | None = None, m1: int | None = None) -> np.ndarray:
    """Resample a periodic field onto a finer grid by trig interpolation."""
    n0, n1 = a.shape
    m0 = m0 or _pad_shape(n0)
    m1 = m1 or _pad_shape(n1)
    ah = np.fft.fft2(a)
    ah = _pad_axis(_pad_axis(ah, 0, m0), 1, m1)
    return np.fft.ifft2(ah).real * ((m0 * m1) / (n0 * n1))


def dealiased_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise product projected back onto the resolved modes (3/2 rule)."""
    n0, n1 = a.shape
    m0, m1 = _pad_shape(n0), _pad_shape(n1)
    fine = pad_to_fine(a, m0, m1) * pad_to_fine(b, m0, m1)
    fh = np.fft.fft2(fine)
    fh = _truncate_axis(_truncate_axis(fh, 0, n0), 1, n1)
    return np.fft.ifft2(fh).real * ((n0 * n1) / (m0 * m1))


def quadrature_mean(*factors: np.ndarray) -> float:
    """Cell mean of a product of periodic fields, evaluated alias-free.

    Factors are interpolated to double resolution before multiplying, so the
    trapezoid mean integrates products of up to four interpolants exactly.
    """
    n0, n1 = factors[0].shape
    m0, m1 = 2 * n0, 2 * n1
    prod = np.ones((m0, m1))
    for f in factors:
        prod = prod * pad_to_fine(f, m0, m1)
    return float(np.mean(prod))


def eval_series(a: np.ndarray, mu, nu) -> np.ndarray:
    """Evaluate the trigonometric interpolant of a sampled field at points.

    mu, nu: broadcast-compatible angle arrays.  Cost is O(P * n0 * n1).
    """
    mu = np.atleast_1d(np.asarray(mu, float))
    nu = np.atleast_1d(np.asarray(nu, float))
    shape = np.broadcast(mu, nu).shape
    mu, nu = np.broadcast_arrays(mu, nu)
    mu, nu = mu.ravel(), nu.ravel()
    n0, n1 = a.shape
    ah = np.fft.fft2(a) / (n0 * n1)
    km, kn = wavenumbers(n0), wavenumbers(n1)
    em = np.exp(1j * np.outer(mu, km))
    en = np.exp(1j * np.outer(nu, kn))
    # Nyquist columns carry pure-cosine content on the sampling grid
    if n0 % 2 == 0:
        em[:, n0 // 2] = np.cos(mu * km[n0 // 2])
    if n1 % 2 == 0:
        en[:, n1 // 2] = np.cos(nu * kn[n1 // 2])
    vals = np.einsum("pm,mn,pn->p", em, ah, en).real
    return vals.reshape(shape)


def wrap_closed(a: np.ndarray) -> np.ndarray:
    """Append the periodic images at mu = 2*pi and nu = 2*pi (closed grid)."""
    return np.pad(a, ((0, 1), (0, 1)), mode="wrap")
