"""Scalar-channel characterization of the large-system performance limit.

The vector problem decouples into scalar Gaussian channels Z = X + W with
X ~ Ber(p) and a degraded SNR eta*gamma, where eta solves a fixed-point
equation driven by the scalar MMSE.  These routines compute that MMSE, the
fixed point, and the distortion the degraded channel predicts.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.stats import norm


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"prior p must be in (0, 1), got {p}")


def bernoulli_mmse(p: float, snr: float) -> float:
    """MMSE of estimating X ~ Ber(p) from Z = X + N(0, 1/snr).

    Evaluates E[Var(X | Z)] = integral of p(1-p) phi0 phi1 / f by adaptive
    quadrature to absolute tolerance 1e-9; snr = 0 returns the prior
    variance p(1-p) exactly.
    """
    _check_p(p)
    if snr < 0:
        raise ValueError(f"snr must be >= 0, got {snr}")
    if snr == 0.0:
        return p * (1.0 - p)
    sd = 1.0 / np.sqrt(snr)

    def integrand(z):
        log_phi0 = norm.logpdf(z, loc=0.0, scale=sd)
        log_phi1 = norm.logpdf(z, loc=1.0, scale=sd)
        log_f = np.logaddexp(np.log(p) + log_phi1, np.log1p(-p) + log_phi0)
        return p * (1.0 - p) * np.exp(log_phi0 + log_phi1 - log_f)

    lo, hi = -12.0 * sd, 1.0 + 12.0 * sd
    breaks = [b for b in (0.0, 0.5, 1.0) if lo < b < hi]
    val, _ = quad(integrand, lo, hi, points=breaks, epsabs=1e-12, limit=200)
    return float(val)


@dataclass(frozen=True)
class EtaFixedPoint:
    """Fixed point(s) of the SNR-degradation equation."""

    eta: float
    all_etas: tuple
    multiple: bool
    residual: float

    def __float__(self):
        return self.eta


def _eta_residual(eta: float, p: float, delta: float, gamma: float) -> float:
    return abs(1.0 / eta - 1.0 - (gamma / (p * delta)) * bernoulli_mmse(p, eta * gamma))


def eta_fixed_point(p: float, delta: float, gamma: float, tol: float = 1e-8,
                    max_iters: int = 1000, step: float = 0.5) -> EtaFixedPoint:
    """Solve 1/eta = 1 + (gamma/(p*delta)) * mmse(p, eta*gamma).

    Damped fixed-point iteration from eta = 0.5; a 10-point start grid
    probes for additional fixed points (phase coexistence), which are
    reported through ``all_etas`` / ``multiple``.
    """
    _check_p(p)
    if delta <= 0 or gamma <= 0:
        raise ValueError("delta and gamma must be positive")

    def gap(eta: float) -> float:
        # root of eta - G(eta); iterate(eta) drives this to zero
        target = 1.0 / (1.0 + (gamma / (p * delta)) * bernoulli_mmse(p, eta * gamma))
        return eta - target

    def polish(eta: float) -> float:
        """Bracket the sign change around a damped-iteration limit and hand
        it to a root finder; the iterate tolerance alone leaves an equation
        residual far above what small eta can carry."""
        width = max(10 * tol, 1e-10)
        while width < 0.25:
            lo = max(eta - width, 1e-12)
            hi = min(eta + width, 1.0)
            g_lo, g_hi = gap(lo), gap(hi)
            if g_lo == 0.0:
                return lo
            if g_hi == 0.0:
                return hi
            if np.sign(g_lo) != np.sign(g_hi):
                return float(brentq(gap, lo, hi, xtol=1e-14, rtol=8.9e-16))
            width *= 4.0
        return eta

    def iterate(eta0: float):
        eta = eta0
        trace = [eta]
        for _ in range(max_iters):
            new = eta - step * gap(eta)
            trace.append(new)
            if abs(new - eta) < tol:
                return polish(new), trace
            eta = new
        return None, trace

    primary, trace = iterate(0.5)
    if primary is None:
        tail = ", ".join(f"{v:.6g}" for v in trace[-6:])
        raise RuntimeError(
            f"eta fixed point did not converge in {max_iters} iterations "
            f"(last iterates: {tail})"
        )
    found = [primary]
    for eta0 in np.linspace(0.05, 0.95, 10):
        sol, _ = iterate(float(eta0))
        if sol is not None and all(abs(sol - e) > 100 * tol for e in found):
            found.append(sol)
    found.sort()
    return EtaFixedPoint(
        eta=primary,
        all_etas=tuple(found),
        multiple=len(found) > 1,
        residual=_eta_residual(primary, p, delta, gamma),
    )


def predicted_distortion(p: float, delta: float, gamma: float,
                         metric: str = "square") -> float:
    """Distortion of the degraded scalar channel at SNR eta*gamma.

    ``square`` returns the scalar MMSE there; ``hamming`` the error
    probability of the MAP test on Z (closed form from Gaussian tails).
    """
    _check_p(p)
    if metric not in ("square", "hamming"):
        raise ValueError(f"metric must be 'square' or 'hamming', got {metric!r}")
    eta = eta_fixed_point(p, delta, gamma).eta
    snr = eta * gamma
    if metric == "square":
        return bernoulli_mmse(p, snr)
    return map_test_error(p, snr)


def map_test_error(p: float, snr: float) -> float:
    """Hamming risk of the MAP decision on Z = X + N(0, 1/snr), X ~ Ber(p)."""
    _check_p(p)
    if snr <= 0:
        return min(p, 1.0 - p)
    sd = 1.0 / np.sqrt(snr)
    threshold = 0.5 + np.log((1.0 - p) / p) / snr
    miss = norm.cdf((threshold - 1.0) / sd)  # X=1 declared 0
    false_alarm = norm.sf(threshold / sd)  # X=0 declared 1
    return float(p * miss + (1.0 - p) * false_alarm)
