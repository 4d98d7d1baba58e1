"""Univariate power-series utilities.

The manifold solver needs Taylor coefficients of smooth maps evaluated along
polynomial curves ``t -> x(t)``.  For maps implemented as complex-safe numpy
callables this is done by sampling on a circle in the complex plane and
applying an FFT (Cauchy-integral coefficients).  For polynomial maps the
result is exact up to roundoff; for analytic maps the aliasing error decays
like ``radius**n_samples`` and is negligible for the sample counts used here.
"""

from __future__ import annotations

import numpy as np

__all__ = ["polyval_ascending", "polyder_ascending", "circle_coefficients"]


def polyval_ascending(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate polynomials with ascending-degree coefficient rows at ``t``.

    ``coeffs`` has shape ``(n, d+1)`` (or ``(d+1,)``); returns ``(n, len(t))``
    (or ``(len(t),)``).  Horner evaluation, complex-safe.
    """
    c = np.atleast_2d(np.asarray(coeffs))
    t = np.asarray(t)
    out = np.zeros((c.shape[0],) + t.shape, dtype=np.result_type(c, t))
    for j in range(c.shape[1] - 1, -1, -1):
        out = out * t + c[:, j].reshape((-1,) + (1,) * t.ndim)
    if np.asarray(coeffs).ndim == 1:
        return out[0]
    return out


def polyder_ascending(coeffs: np.ndarray) -> np.ndarray:
    """Differentiate ascending-degree coefficient rows."""
    c = np.atleast_2d(np.asarray(coeffs))
    if c.shape[1] <= 1:
        d = np.zeros((c.shape[0], 1))
    else:
        d = c[:, 1:] * np.arange(1, c.shape[1])
    if np.asarray(coeffs).ndim == 1:
        return d[0]
    return d


def circle_coefficients(fn, order: int, radius: float = 0.25,
                        n_samples: int | None = None) -> np.ndarray:
    """Taylor coefficients of ``t -> fn(t)`` up to ``order``.

    Parameters
    ----------
    fn : callable
        Maps a complex sample array ``t`` of shape ``(N,)`` to values of shape
        ``(n_out, N)`` (or ``(N,)`` for scalar maps).  Must be analytic on a
        disc that contains the sampling circle.
    order : int
        Highest degree to return.
    radius : float
        Radius of the sampling circle.  Must be well inside the domain of
        analyticity of ``fn``.
    n_samples : int, optional
        Number of circle samples; defaults to a power-of-two count large
        enough to make aliasing irrelevant for the requested order.

    Returns
    -------
    numpy.ndarray
        Real coefficient table of shape ``(n_out, order + 1)`` in ascending
        degree (``(order + 1,)`` for scalar maps).
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if radius <= 0:
        raise ValueError("radius must be positive")
    n = n_samples or max(128, 8 * (order + 1))
    t = radius * np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.asarray(fn(t))
    scalar = vals.ndim == 1
    vals = np.atleast_2d(vals)
    spectrum = np.fft.fft(vals, axis=1) / n
    degs = np.arange(order + 1)
    coeffs = spectrum[:, : order + 1].real / radius ** degs
    return coeffs[0] if scalar else coeffs
