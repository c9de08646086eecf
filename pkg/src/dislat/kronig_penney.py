"""Zero-width limit of the dissipative lattice: delta absorbers.

Shrinking the Gaussian absorbers at fixed mean rate gamma0 turns the
lattice into a comb of imaginary delta potentials of weight
2*pi*gamma0.  The complex band structure mu(k) then satisfies a closed
dispersion relation,

    cos(2*pi*k) = cos(2*pi*s) - i*(2*pi*gamma0/s)*sin(2*pi*s),
    s = sqrt(2*mu),

whose left-minus-right residual is exposed below.  The residual is even
in s, so the principal square root is as good as any other branch.

Roots with sin(2*pi*s) = 0 are immune to the absorbers: at the zone
center mu = n**2/2 with cell profile sin(n*x), at the zone boundary
mu = (n - 1/2)**2/2 with profile exp(-i*x/2)*sin((n - 1/2)*x).  Both
vanish at the absorber sites, which is why they do not decay.  They are
tabulated by nondecaying_catalog rather than recovered from the resonant
plane-wave sum, which degenerates to 0/0 exactly there.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from .errors import NumericsError

_TWO_PI = 2.0 * math.pi

#: convergence target for the damped Newton iteration
RESIDUAL_TOL = 1e-12
MAX_ITERATIONS = 100


class BranchJumpWarning(UserWarning):
    """Newton converged far from its seeding free band."""


@dataclass(frozen=True)
class KPRoot:
    """One converged root of the delta-comb dispersion relation."""

    mu: complex
    k: float
    branch_index: int
    residual: float          # |dispersion_residual| at the root
    iterations: int
    branch_jumped: bool = False


@dataclass(frozen=True)
class NondecayingMode:
    """A strictly real band point whose cell profile avoids the absorbers."""

    k: float                 # 0.0 or 0.5
    index: int               # 1-based within its symmetry point
    mu: float
    profile: Callable        # unit-L2 cell profile on [0, 2*pi)


def _trig_parts(mu):
    """cos(2*pi*s), sin(2*pi*s)/s and (t*cos(t) - sin(t))/s**3 for t = 2*pi*s.

    Series kick in near the branch point so all three stay accurate there.
    """
    s = cmath.sqrt(2.0 * complex(mu))
    t = _TWO_PI * s
    if abs(t) < 1e-3:
        t2 = t * t
        cos_t = 1.0 - t2 / 2.0 + t2 * t2 / 24.0 - t2 * t2 * t2 / 720.0
        sin_over = _TWO_PI * (1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0)
        bracket = _TWO_PI ** 3 * (-1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0)
    else:
        # reduce by half periods first: sin and cos of 2*pi*s pick up
        # (-1)^m under s -> s - m/2, and the resonant s are exact floats,
        # so the reduction makes the residual vanish identically there
        half_turns = round(2.0 * s.real)
        reduced = _TWO_PI * (s - 0.5 * half_turns)
        sign = 1.0 if half_turns % 2 == 0 else -1.0
        cos_t = sign * cmath.cos(reduced)
        sin_t = sign * cmath.sin(reduced)
        sin_over = sin_t / s
        bracket = (t * cos_t - sin_t) / (s * s * s)
    return s, cos_t, sin_over, bracket


def dispersion_residual(mu, k: float, gamma0: float) -> complex:
    """Left-minus-right defect of the delta-comb dispersion relation.

    Zero iff mu belongs to the complex band structure at quasimomentum k.
    Even in sqrt(2*mu), hence branch-independent.  mu = 0 sits on the
    square-root branch point and is rejected.
    """
    if mu == 0:
        raise ValueError("mu = 0 is the sqrt branch point of the dispersion relation")
    _, cos_t, sin_over, _ = _trig_parts(mu)
    return cmath.cos(_TWO_PI * k) - cos_t + 1j * _TWO_PI * gamma0 * sin_over


def _residual_derivative(mu, gamma0: float) -> complex:
    """d(dispersion_residual)/d(mu), analytic away from mu = 0."""
    s, _, sin_over, bracket = _trig_parts(mu)
    # d/dmu = (1/s) d/ds;   d residual/ds = 2*pi*sin(t) + i*2*pi*gamma0*(t*cos - sin)/s**2
    return _TWO_PI * sin_over + 1j * _TWO_PI * gamma0 * bracket


def solve_mu(k: float, gamma0: float, branch_index: int) -> KPRoot:
    """Track one band of the delta-comb lattice by damped Newton iteration.

    The seed is the free band 0.5*(k + branch_index)**2 pushed slightly
    into the lower half plane by -i*gamma0, which breaks the stagnation a
    purely real seed suffers on this complex-analytic residual.  Steps are
    halved until the residual decreases; convergence means
    |residual| < RESIDUAL_TOL.  A root landing further from its seed than
    half the gap to the neighboring free bands is reported (and flagged)
    as a branch jump.
    """
    free = 0.5 * (k + branch_index) ** 2
    mu, residual, iterations = _newton(complex(free, -gamma0), k, gamma0,
                                       f"k={k}, branch {branch_index}")
    jumped = False
    spacing = _seed_spacing(k, branch_index)
    if abs(mu - free) > 0.5 * spacing:
        jumped = True
        warnings.warn(
            f"root at k={k}, branch {branch_index} moved {abs(mu - free):.3g} "
            f"from its free-band seed (adjacent spacing {spacing:.3g}); "
            "it likely belongs to a neighboring branch", BranchJumpWarning)
    return KPRoot(mu=mu, k=k, branch_index=branch_index,
                  residual=residual, iterations=iterations, branch_jumped=jumped)


def refine_root(mu_guess, k: float, gamma0: float) -> complex:
    """Polish an arbitrary dispersion-root guess to |residual| < RESIDUAL_TOL.

    Same damped Newton as solve_mu but without the free-band seeding
    policy, for callers that already know roughly where their root lives.
    """
    mu, _, _ = _newton(complex(mu_guess), k, gamma0, f"guess {mu_guess} at k={k}")
    return mu


def _newton(mu, k: float, gamma0: float, label: str):
    if mu == 0:
        mu = complex(0.0, -max(gamma0, 1e-12))
    f = dispersion_residual(mu, k, gamma0)
    iterations = 0
    while abs(f) >= RESIDUAL_TOL:
        if iterations >= MAX_ITERATIONS:
            raise NumericsError(
                f"dispersion root for {label} did not reach |residual| < "
                f"{RESIDUAL_TOL} in {MAX_ITERATIONS} iterations (stalled at {abs(f):.3e})")
        d = _residual_derivative(mu, gamma0)
        if d == 0:
            raise NumericsError(f"dispersion derivative vanished at mu={mu} for {label}")
        accepted = _descend(mu, f, -f / d, k, gamma0)
        if accepted is None:
            raise NumericsError(
                f"damped Newton stagnated for {label} at mu={mu}, |residual|={abs(f):.3e}")
        mu, f = accepted
        iterations += 1
    return mu, abs(f), iterations


# Retry angles for the step-halving search.  Exactly midway between two
# roots the residual derivative vanishes and the Newton direction is
# noise; a rotated copy of the step then still points within the descent
# cone of one of the roots.
_STEP_ROTATIONS = (1.0, 0.7071067811865476 + 0.7071067811865476j,
                   0.7071067811865476 - 0.7071067811865476j, 1j, -1j, -1.0)


def _descend(mu, f, step, k, gamma0):
    """One damped update: first decrease of |residual| along a rotated,
    halved Newton step. Returns (mu, residual) or None if none is found."""
    for rotation in _STEP_ROTATIONS:
        scale = rotation
        for _ in range(60):
            trial = mu + scale * step
            if trial != 0:
                ft = dispersion_residual(trial, k, gamma0)
                if abs(ft) < abs(f):
                    return trial, ft
            scale *= 0.5
    return None


def _seed_spacing(k: float, branch_index: int) -> float:
    here = 0.5 * (k + branch_index) ** 2
    gaps = [abs(here - 0.5 * (k + branch_index + step) ** 2) for step in (-1, 1)]
    gaps = [gap for gap in gaps if gap > 0.0]
    return min(gaps) if gaps else 1.0


def nondecaying_catalog(n_max: int) -> List[NondecayingMode]:
    """All strictly nondecaying band points with index up to n_max.

    Returned in ascending mu; profiles are unit-L2 on one cell and vanish
    at the absorber site x = 0 regardless of gamma0.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    norm = 1.0 / math.sqrt(math.pi)

    def _center_profile(n):
        def profile(x):
            return norm * np.sin(n * np.asarray(x, dtype=float)) + 0.0j
        return profile

    def _boundary_profile(half_n):
        def profile(x):
            x = np.asarray(x, dtype=float)
            return norm * np.exp(-0.5j * x) * np.sin(half_n * x)
        return profile

    modes = []
    for n in range(1, n_max + 1):
        modes.append(NondecayingMode(k=0.5, index=n, mu=0.5 * (n - 0.5) ** 2,
                                     profile=_boundary_profile(n - 0.5)))
        modes.append(NondecayingMode(k=0.0, index=n, mu=0.5 * n ** 2,
                                     profile=_center_profile(n)))
    modes.sort(key=lambda mode: mode.mu)
    return modes


def plane_wave_sum(mu, k: float, n_terms: int) -> complex:
    """Truncated resolvent sum  sum_{|m| <= n_terms} 1/(mu - (m+k)**2/2).

    On the band structure it converges (with O(1/n_terms) tail) to
    i/gamma0; that limit is the delta-comb self-consistency condition.
    """
    m = np.arange(-n_terms, n_terms + 1)
    return complex(np.sum(1.0 / (complex(mu) - 0.5 * (m + k) ** 2)))


def periodic_part(mu, k: float, gamma0: float, x, n_terms: int = 2000):
    """Cell profile of the Bloch mode at a generic dispersion root.

    Superposes plane waves exp(i*m*x)/(mu - (m+k)**2/2) and rescales to
    max |u| = 1.  Near a nondecaying point the dominant denominator
    vanishes and the sum degenerates to 0/0; such roots are rejected --
    their profiles are in nondecaying_catalog in closed form.
    """
    x = np.asarray(x, dtype=float)
    m = np.arange(-n_terms, n_terms + 1)
    denom = complex(mu) - 0.5 * (m + k) ** 2
    closest = np.min(np.abs(denom))
    if closest <= 1e-6:
        raise ValueError(
            f"plane-wave denominator {closest:.2e} away from resonance at "
            f"mu={mu}: profile is a catalog mode, use nondecaying_catalog")
    u = np.exp(1j * np.outer(x, m)) @ (1.0 / denom)
    peak = np.max(np.abs(u))
    if peak == 0.0:
        raise NumericsError("plane-wave profile vanished identically")
    return u / peak
