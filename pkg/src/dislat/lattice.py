"""Periodic dissipative lattice definition.

The lattice combines a real cosine potential with a periodic comb of
Gaussian absorbers,

    V(x) = v0 * cos(2x),
    G(x) = g0 * sum_m exp(-(x - 2*pi*m)**2 / sigma**2),

on a cell of fixed period 2*pi.  G enters the wave equation as a negative
imaginary potential, so g0 >= 0 models pure loss.  All Fourier expansions
here use the exp(-i*n*x) convention:

    G(x) = sum_n dissipation_fourier(n) * exp(-i*n*x),
    V(x) = sum_n potential_fourier(n)   * exp(-i*n*x).

The n-th dissipation coefficient is g0*sigma/(2*sqrt(pi)) * exp(-(n*sigma/2)**2);
the zeroth one (the mean loss rate) is called gamma0 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

PERIOD = 2.0 * math.pi

# 2*pi split into a double-double pair so the comb can be folded into one
# cell without losing accuracy at large |x|.
_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16

# Gaussians are summed over sites within this many sigmas of x; beyond it a
# term is below 2e-36 of the peak and cannot move a double.
COMB_WINDOW_SIGMAS = 9.0


@dataclass(frozen=True)
class LatticeSpec:
    """Parameters of one dissipative lattice.

    Attributes:
        v0:    strength of the real cos(2x) potential (any real value).
        g0:    peak amplitude of each Gaussian absorber, >= 0.
        sigma: 1/e half-width of the absorbers, > 0.
        g:     cubic self-focusing coefficient of the wave equation, >= 0.
    """

    v0: float = 0.0
    g0: float = 0.0
    sigma: float = math.pi / 20.0
    g: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0.0) or not math.isfinite(self.sigma):
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if self.g0 < 0.0 or not math.isfinite(self.g0):
            raise ConfigurationError(f"g0 must be >= 0, got {self.g0}")
        if self.g < 0.0 or not math.isfinite(self.g):
            raise ConfigurationError(f"g must be >= 0, got {self.g}")
        if not math.isfinite(self.v0):
            raise ConfigurationError(f"v0 must be finite, got {self.v0}")

    @property
    def period(self) -> float:
        return PERIOD

    @property
    def gamma0(self) -> float:
        """Mean dissipation rate: zeroth Fourier coefficient of G."""
        return self.sigma * self.g0 / (2.0 * math.sqrt(math.pi))

    @classmethod
    def from_gamma0(cls, v0: float, gamma0: float, sigma: float, g: float = 0.0) -> "LatticeSpec":
        """Build a spec from the mean rate gamma0 instead of the peak g0."""
        if gamma0 < 0.0:
            raise ConfigurationError(f"gamma0 must be >= 0, got {gamma0}")
        if not (sigma > 0.0):
            raise ConfigurationError(f"sigma must be positive, got {sigma}")
        g0 = 2.0 * math.sqrt(math.pi) * gamma0 / sigma
        return cls(v0=v0, g0=g0, sigma=sigma, g=g)

    def truncation_floor(self) -> int:
        """Smallest plane-wave cutoff resolving every dissipation coefficient
        above double-precision noise (coefficient ratio exp(-(n*sigma/2)^2)
        reaches 1e-16 near n = 12.2/sigma)."""
        return int(math.ceil(12.2 / self.sigma))


def real_potential_value(x, spec: LatticeSpec):
    """V(x) = v0*cos(2x), vectorized over x."""
    return spec.v0 * np.cos(2.0 * np.asarray(x, dtype=float))


def dissipation_value(x, spec: LatticeSpec):
    """Dissipation profile G(x) >= 0, vectorized over x.

    The comb sum is folded into the central cell first, then only sites
    within COMB_WINDOW_SIGMAS * sigma contribute, so evaluation cost does
    not grow with |x|.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("dissipation_value requires finite x")
    n = np.round(x / PERIOD)
    # fold to r in about [-pi, pi]; two-part 2*pi keeps r accurate for large |x|
    r = (x - n * _TWO_PI_HI) - n * _TWO_PI_LO
    reach = int(math.ceil((COMB_WINDOW_SIGMAS * spec.sigma + math.pi) / PERIOD))
    total = np.zeros_like(r)
    for m in range(-reach, reach + 1):
        d = r - m * PERIOD
        total += np.exp(-(d / spec.sigma) ** 2)
    out = spec.g0 * total
    return out if out.ndim else float(out)


def dissipation_fourier(n, spec: LatticeSpec):
    """Fourier coefficient of G at harmonic n (even in n, positive)."""
    n = np.asarray(n, dtype=float)
    out = spec.gamma0 * np.exp(-((n * spec.sigma / 2.0) ** 2))
    return out if out.ndim else float(out)


def potential_fourier(n, spec: LatticeSpec):
    """Fourier coefficient of V at harmonic n: v0/2 at n = +-2, else 0."""
    n = np.asarray(n)
    out = np.where(np.abs(n) == 2, spec.v0 / 2.0, 0.0)
    return out if out.ndim else float(out)


def delta_comb_strength(spec: LatticeSpec) -> float:
    """Weight of each delta absorber in the zero-width limit of G.

    Shrinking sigma at fixed gamma0 sends G to 2*pi*gamma0 * sum_m
    delta(x - 2*pi*m); the prefactor is the area under one absorber.
    """
    return 2.0 * math.pi * spec.gamma0
