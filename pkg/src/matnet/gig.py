"""Generalized inverse Gaussian sampling.

Density on x > 0, up to normalization:

    f(x | lam, psi, chi)  ~  x^(lam-1) * exp(-(psi*x + chi/x) / 2)

Under x = sqrt(chi/psi) * exp(z) the log-density of z is

    l(z) = lam*z - omega*cosh(z) + const,   omega = sqrt(psi*chi),

which is strictly concave for every real lam, so a three-piece tangent
envelope (flat cap around the mode, exponential tails hung from the points
where l drops one nat below the mode) yields an exact rejection sampler valid
on the whole parameter space. Boundary cases chi = 0 and psi = 0 reduce to
Gamma and inverse-Gamma draws.
"""

from __future__ import annotations

import numpy as np


def _envelope(lam: float, omega: float) -> tuple[float, float, float, float, float]:
    """Tangent-envelope geometry for l(z) = lam*z - omega*cosh(z).

    Returns (z_mode, z_lo, z_hi, slope_lo, slope_hi) where l(z_mode) - l(z_lo)
    = l(z_mode) - l(z_hi) = 1 and the slopes are l'(z_lo) > 0 > l'(z_hi).
    """
    z_mode = float(np.arcsinh(lam / omega))

    def drop(z: float) -> float:
        # l(z_mode) - l(z), nonnegative, convex in each direction
        return (lam * (z_mode - z)
                + omega * (np.cosh(z) - np.cosh(z_mode)))

    def locate(direction: float) -> float:
        step = 1.0
        far = z_mode + direction * step
        while drop(far) < 1.0:
            step *= 2.0
            far = z_mode + direction * step
            if step > 1e308:
                raise RuntimeError("envelope bracketing failed")
        near = z_mode
        for _ in range(60):
            mid = 0.5 * (near + far)
            if drop(mid) < 1.0:
                near = mid
            else:
                far = mid
        return 0.5 * (near + far)

    z_lo = locate(-1.0)
    z_hi = locate(+1.0)
    slope_lo = lam - omega * np.sinh(z_lo)
    slope_hi = lam - omega * np.sinh(z_hi)
    return z_mode, z_lo, z_hi, slope_lo, slope_hi


def _sample_log_domain(rng: np.random.Generator, lam: float, omega: float,
                       size: int) -> np.ndarray:
    """Draw z with density proportional to exp(lam*z - omega*cosh(z))."""
    z_mode, z_lo, z_hi, s_lo, s_hi = _envelope(lam, omega)
    cosh_mode = np.cosh(z_mode)

    # Piece areas with the mode height normalized to 1; tails sit at e^-1.
    area_mid = z_hi - z_lo
    area_lo = np.exp(-1.0) / s_lo
    area_hi = np.exp(-1.0) / (-s_hi)
    total = area_mid + area_lo + area_hi
    p_lo = area_lo / total
    p_mid = area_mid / total

    out = np.empty(size)
    have = 0
    while have < size:
        need = size - have
        m = max(16, int(1.6 * need) + 8)
        u = rng.random(m)
        w = rng.random(m)
        v = rng.random(m)

        z = np.empty(m)
        in_lo = u < p_lo
        in_mid = (~in_lo) & (u < p_lo + p_mid)
        in_hi = ~(in_lo | in_mid)
        z[in_lo] = z_lo + np.log(w[in_lo]) / s_lo
        z[in_mid] = z_lo + w[in_mid] * area_mid
        z[in_hi] = z_hi + np.log(w[in_hi]) / s_hi

        with np.errstate(over="ignore"):
            log_target = lam * (z - z_mode) - omega * (np.cosh(z) - cosh_mode)
        log_env = np.zeros(m)
        log_env[in_lo] = -1.0 + s_lo * (z[in_lo] - z_lo)
        log_env[in_hi] = -1.0 + s_hi * (z[in_hi] - z_hi)
        keep = np.log(v) <= log_target - log_env

        take = min(int(keep.sum()), need)
        out[have:have + take] = z[keep][:take]
        have += take
    return out


def gig_sample(rng: np.random.Generator, lam: float, psi: float, chi: float,
               size: int | None = None) -> float | np.ndarray:
    """Draw from the generalized inverse Gaussian distribution.

    Parameters
    ----------
    rng : numpy Generator
    lam : float
        Index parameter, any real value.
    psi, chi : float
        Nonnegative rate parameters. chi = 0 requires lam > 0 (Gamma limit);
        psi = 0 requires lam < 0 (inverse-Gamma limit).
    size : int, optional
        Number of draws; None returns a scalar.

    Returns
    -------
    float or ndarray of positive draws.
    """
    if psi < 0.0 or chi < 0.0:
        raise ValueError("psi and chi must be nonnegative")
    n = 1 if size is None else int(size)

    if chi == 0.0:
        if lam <= 0.0 or psi <= 0.0:
            raise ValueError("chi = 0 requires lam > 0 and psi > 0")
        draws = rng.gamma(lam, 2.0 / psi, size=n)
    elif psi == 0.0:
        if lam >= 0.0:
            raise ValueError("psi = 0 requires lam < 0 and chi > 0")
        draws = (chi / 2.0) / rng.gamma(-lam, 1.0, size=n)
    else:
        omega = float(np.sqrt(psi * chi))
        scale = float(np.sqrt(chi / psi))
        z = _sample_log_domain(rng, float(lam), omega, n)
        draws = scale * np.exp(z)

    if size is None:
        return float(draws[0])
    return draws
