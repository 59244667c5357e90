"""Classify complex martingale parameters into fluctuation regimes.

For a reproduction law with Laplace transform ``m`` and a complex parameter
``lambda = theta + i*eta`` this module decides which limit theorem governs
the fluctuations of the normalized additive martingale, computes the
associated scaling constants ``a_n``, and analyses the multiplicative group
generated by the branching weights (which controls the exponent ``w`` on
the stable boundary).

All equality predicates are evaluated on defining residuals with absolute
tolerance 1e-9; root targets are tighter (1e-12).  See the individual
functions for the exact conditions.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .model import (
    PointMass,
    ReproductionLaw,
    laplace_m,
    log_laplace_m,
    log_m_derivatives,
    mirrored,
    sigma_lambda_sq,
)

# Residual target for the boundary-parameter root.
_ROOT_TOL = 1e-12
# Absolute tolerance for equality predicates on defining residuals.
_EQ_TOL = 1e-9
# Bracket for the boundary-parameter search.
_THETA_BRACKET_HI = 50.0
_THETA_BRACKET_LO = 1e-6
# Diophantine detection parameters (config-exposed through compute_group).
RATIONAL_TOL = 1e-9
RATIONAL_QMAX = 10**6

GAUSSIAN_INTERIOR = "GaussianInterior"
GAUSSIAN_BOUNDARY = "GaussianBoundary"
EXTREMAL = "Extremal"
STABLE_BOUNDARY = "StableBoundary"
OUT_OF_THEORY = "OutOfTheory"

VARIANTS = (
    GAUSSIAN_INTERIOR,
    GAUSSIAN_BOUNDARY,
    EXTREMAL,
    STABLE_BOUNDARY,
    OUT_OF_THEORY,
)


def _g(law: ReproductionLaw, t: float) -> float:
    """Boundary residual g(t) = t*(log m)'(t) - log m(t)."""
    return t * log_m_derivatives(law, t, order=1) - log_laplace_m(law, t)


@dataclass(frozen=True)
class BoundaryParams:
    """The real boundary parameter and the variance of the centered walk.

    ``theta_star`` solves t*(log m)'(t) = log m(t); ``sigma_sq`` is the
    variance E[sum V(u)^2 e^{-V(u)}] of the recentred walk
    V(u) = theta_star*S(u) + n*log m(theta_star), and ``c`` the constant
    sqrt(2/(pi*sigma_sq)) appearing in the Seneta-Heyde norming.
    """

    theta_star: float
    sigma_sq: float
    c: float


@dataclass(frozen=True)
class GroupSpec:
    """Structure of the closed multiplicative group spanned by the weights."""

    full_circle: bool
    u1_order: Optional[int]
    w: complex
    detection: str
    phase: float

    def __post_init__(self) -> None:
        if self.full_circle and self.w != 1:
            raise ValueError("full circle forces w = 1")


@dataclass(frozen=True)
class RegimeLabel:
    """Classification outcome; fields beyond ``variant`` are variant-specific."""

    variant: str
    limit_is_complex: Optional[bool] = None
    nondegenerate_2theta: Optional[bool] = None
    sigma_sq_positive: Optional[bool] = None
    alpha: Optional[float] = None
    w: Optional[complex] = None
    reason: Optional[str] = None
    notes: tuple = ()

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == STABLE_BOUNDARY:
            if self.alpha is None or not (1.0 < self.alpha < 2.0):
                raise ValueError("StableBoundary requires alpha in (1,2)")
            if self.w is None or abs(self.w.real - 1.0) > 1e-9:
                raise ValueError("StableBoundary requires Re(w) = 1")


@lru_cache(maxsize=256)
def _solve_theta_star_cached(law: ReproductionLaw) -> BoundaryParams:
    lo, hi = _THETA_BRACKET_LO, _THETA_BRACKET_HI
    glo, ghi = _g(law, lo), _g(law, hi)
    if glo >= 0.0:
        # g(0+) = -log E[N] < 0 for supercritical laws; a non-negative value
        # at the bracket floor means the transform is not supercritical-like.
        raise ValueError("no boundary parameter: g positive at bracket floor")
    if ghi <= 0.0:
        raise ValueError(
            "no boundary parameter: g has no sign change on the bracket "
            f"({lo:g}, {hi:g}]"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = _g(law, mid)
        if abs(gm) < _ROOT_TOL:
            lo = hi = mid
            break
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    t = 0.5 * (lo + hi)
    sigma_sq = t * t * log_m_derivatives(law, t, order=2)
    if sigma_sq <= 0.0:
        raise ValueError("degenerate boundary walk: sigma^2 <= 0")
    return BoundaryParams(theta_star=t, sigma_sq=sigma_sq,
                          c=math.sqrt(2.0 / (math.pi * sigma_sq)))


def solve_theta_star(law: ReproductionLaw) -> BoundaryParams:
    """Find the positive root of t*(log m)'(t) = log m(t) by bisection.

    Raises ValueError when no sign change exists on the bracket (e.g. a
    point-mass displacement at 0, for which g is the constant -log E[N]).
    """
    law.require_supercritical()
    return _solve_theta_star_cached(law)


def _try_theta_star(law: ReproductionLaw) -> Optional[BoundaryParams]:
    try:
        return solve_theta_star(law)
    except ValueError:
        return None


def _h(law: ReproductionLaw, lam: complex, p: float) -> float:
    """Contraction exponent h(p) = log m(p*theta) - p*log|m(lambda)|."""
    return log_laplace_m(law, p * lam.real) - p * math.log(abs(laplace_m(law, lam)))


_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section minimum of a unimodal f on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    candidates = [(f(x), x), (f(lo), lo), (f(hi), hi)]
    fx, x = min(candidates)
    return x, fx


def in_lambda(law: ReproductionLaw, lam: complex,
              gamma_grid: Sequence[float] = (2.0,)) -> bool:
    """Whether lambda lies in the locally-uniform convergence region.

    True iff inf over p in [1, gamma] of m(p*theta)/|m(lambda)|^p is < 1
    (probed through the log-ratio, minimized by golden section; the ratio
    is log-convex in p for the supported laws).  The companion moment
    condition holds automatically because every supported displacement has
    finite exponential moments of all orders.
    """
    lam = complex(lam)
    law.require_supercritical()
    if abs(laplace_m(law, lam)) < 1e-12:
        return False
    for gamma in gamma_grid:
        if not 1.0 < gamma <= 2.0:
            raise ValueError("gamma must lie in (1, 2]")
        _, hmin = _golden_min(lambda p: _h(law, lam, p), 1.0, gamma)
        if hmin < -1e-12:
            return True
    return False


@dataclass(frozen=True)
class AlphaRoot:
    """Root of m(alpha*theta) = |m(lambda)|^alpha with its variant.

    ``variant`` is "equality" when the derivative condition holds as well
    (the tangency case characterizing the stable boundary) and "leq" when
    the contraction dips strictly below one and the root is a plain
    crossing.
    """

    alpha: float
    variant: str
    residual_m: float
    residual_dm: float


def solve_alpha(law: ReproductionLaw, lam: complex) -> Optional[AlphaRoot]:
    """Solve the stable-boundary characteristic equation on (1, 2).

    Returns None when theta <= 0 or no admissible root exists.  h'(p) is
    increasing (h is convex), so the stationary point p* is found by
    bisection on h'; equality of h(p*) with 0 within 1e-12 marks the
    tangency ("equality" variant).  When h(p*) < 0 the crossing on
    (1, p*) is returned as the "leq" variant.
    """
    lam = complex(lam)
    theta = lam.real
    if theta <= 0.0:
        return None
    law.require_supercritical()
    mod_m = abs(laplace_m(law, lam))
    if mod_m < 1e-12:
        return None
    log_mod = math.log(mod_m)

    def hp(p: float) -> float:
        return theta * log_m_derivatives(law, p * theta, order=1) - log_mod

    lo, hi = 1.0 + 1e-9, 2.0 - 1e-9
    if hp(lo) >= 0.0:
        # h increasing on the whole window: the infimum sits at p = 1 and
        # no tangency or crossing can occur inside (1, 2).
        return None
    if hp(hi) <= 0.0:
        p_star = hi
    else:
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if abs(hp(mid)) < 1e-13:
                a = b = mid
                break
            if hp(mid) < 0.0:
                a = mid
            else:
                b = mid
            if b - a < 1e-15:
                break
        p_star = 0.5 * (a + b)

    h_star = _h(law, lam, p_star)
    if abs(h_star) <= 1e-12:
        alpha = p_star
        variant = "equality"
    elif h_star < 0.0:
        # Strict dip: find the crossing left of the minimum.
        a, b = lo, p_star
        if _h(law, lam, a) <= 0.0:
            return None
        for _ in range(200):
            mid = 0.5 * (a + b)
            hm = _h(law, lam, mid)
            if abs(hm) < 1e-15:
                a = b = mid
                break
            if hm > 0.0:
                a = mid
            else:
                b = mid
            if b - a < 1e-15:
                break
        alpha = 0.5 * (a + b)
        variant = "leq"
    else:
        return None

    res_m = abs(laplace_m(law, alpha * theta).real / mod_m**alpha - 1.0)
    res_dm = abs(theta * laplace_m(law, alpha * theta).real
                 * log_m_derivatives(law, alpha * theta, order=1)
                 / mod_m**alpha - log_mod)
    if not 1.0 < alpha < 2.0:
        return None
    return AlphaRoot(alpha=alpha, variant=variant,
                     residual_m=res_m, residual_dm=res_dm)


def _detect_rational(x: float, tol: float, qmax: int) -> Optional[tuple[int, int]]:
    """First continued-fraction convergent p/q of x with |x - p/q| <= tol/q^2."""
    p0, q0 = 0, 1
    p1, q1 = 1, 0
    y = x
    for _ in range(64):
        a = math.floor(y)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > qmax:
            return None
        if abs(x - p1 / q1) <= tol / (q1 * q1):
            return (p1, q1)
        frac = y - a
        if frac < 1e-15:
            return None
        y = 1.0 / frac
    return None


def compute_group(law: ReproductionLaw, lam: complex,
                  tol: float = RATIONAL_TOL, qmax: int = RATIONAL_QMAX) -> GroupSpec:
    """Analyse the closed multiplicative group generated by the weights.

    The weights e^{-lambda*X}/m(lambda) fill a one-parameter coset for
    Gaussian and Uniform displacements.  Writing the group on the cylinder
    (log-modulus, phase), the coset line has direction (theta, eta) and the
    normalization point projects to the phase increment

        phi = -arg m(lambda) + (eta/theta)*log|m(lambda)|   (mod 2pi).

    The circle part of the group is generated by e^{i*phi}: it is finite of
    order q when phi/(2pi) is (numerically) rational p/q, and the full
    circle otherwise.  Rationality from floats is necessarily approximate:
    a continued-fraction convergent is accepted when |x - p/q| <= tol/q^2
    with q <= qmax, and the outcome is recorded in ``detection``.
    """
    lam = complex(lam)
    theta, eta = lam.real, lam.imag
    if isinstance(law.displacement, PointMass):
        raise ValueError("lattice weights: point-mass displacements generate "
                         "a lattice and the group analysis refuses them")
    if theta <= 0.0:
        raise ValueError("group analysis requires theta > 0")
    if eta == 0.0:
        return GroupSpec(full_circle=False, u1_order=1, w=1 + 0j,
                         detection="real weights", phase=0.0)
    m_lam = laplace_m(law, lam)
    if abs(m_lam) < 1e-12:
        raise ValueError("m(lambda) numerically zero")
    phi = (-cmath.phase(m_lam) + (eta / theta) * math.log(abs(m_lam))) % (2.0 * math.pi)
    x = phi / (2.0 * math.pi)
    hit = _detect_rational(x % 1.0, tol, qmax)
    if hit is not None:
        _, q = hit
        return GroupSpec(full_circle=False, u1_order=q, w=lam / theta,
                         detection=f"numerically rational ({hit[0]}/{q})",
                         phase=phi)
    return GroupSpec(full_circle=True, u1_order=None, w=1 + 0j,
                     detection="assumed irrational", phase=phi)


def classify(law: ReproductionLaw, lam: complex) -> RegimeLabel:
    """Decide which fluctuation theorem governs (law, lambda).

    Requires theta >= 0 (mirror the displacements for theta < 0).  Decision
    order: Gaussian boundary (2*theta at the boundary parameter, strict
    contraction, nondegenerate variance), then extremal domination (inside
    the convergence region with theta strictly between half the boundary
    parameter and the boundary parameter), then Gaussian interior (strict
    contraction), then the stable boundary (tangency of the characteristic
    equation).  The boundary check precedes the interior check because the
    interior inequality also holds on the segment 2*theta = theta_star,
    where the plain Gaussian limit degenerates; likewise the extremal
    region overlaps the contraction disc near its corners and wins there.
    """
    lam = complex(lam)
    theta = lam.real
    if theta < 0.0:
        raise ValueError("classify requires theta >= 0; mirror the law and "
                         "use -conj(lambda) for theta < 0")
    law.require_supercritical()
    m_lam = laplace_m(law, lam)
    if abs(m_lam) < 1e-12:
        return RegimeLabel(OUT_OF_THEORY, reason="m(lambda) numerically zero")
    mod_sq = abs(m_lam) ** 2
    m_2theta = laplace_m(law, 2.0 * theta).real
    m_2lambda = laplace_m(law, 2.0 * lam)
    ratio = m_2theta / mod_sq
    ssq = sigma_lambda_sq(law, lam)
    bp = _try_theta_star(law)

    if (bp is not None and theta > 0.0
            and abs(_g(law, 2.0 * theta)) <= _EQ_TOL
            and ratio < 1.0 - _EQ_TOL
            and ssq > 1e-12):
        return RegimeLabel(GAUSSIAN_BOUNDARY, sigma_sq_positive=True)

    if (bp is not None
            and theta - 0.5 * bp.theta_star > _EQ_TOL
            and bp.theta_star - theta > _EQ_TOL
            and in_lambda(law, lam)):
        return RegimeLabel(EXTREMAL)

    if ratio < 1.0 - _EQ_TOL:
        nondeg = bool(bp is None or _g(law, 2.0 * theta) < -_EQ_TOL)
        complex_limit = bool((m_2theta - abs(m_2lambda)) > 1e-12 * m_2theta)
        return RegimeLabel(
            GAUSSIAN_INTERIOR,
            limit_is_complex=complex_limit,
            nondegenerate_2theta=nondeg,
            sigma_sq_positive=bool(ssq > 1e-12),
        )

    root = solve_alpha(law, lam)
    if root is not None and root.variant == "equality":
        try:
            group = compute_group(law, lam)
        except ValueError as exc:
            return RegimeLabel(OUT_OF_THEORY, reason=str(exc))
        return RegimeLabel(
            STABLE_BOUNDARY,
            alpha=root.alpha,
            w=group.w,
            notes=(("group_detection", group.detection),
                   ("u1_order", group.u1_order),
                   ("full_circle", group.full_circle)),
        )

    return RegimeLabel(OUT_OF_THEORY,
                       reason="m(2theta) >= |m(lambda)|^2 and no boundary, "
                              "extremal or stable condition holds")


def scaling_constants(label: RegimeLabel, law: ReproductionLaw,
                      lam: complex, n: int) -> complex:
    """The deterministic scaling a_n for the residual Z - Z_n under ``label``.

    Gaussian interior: m(lambda)^n / m^{n/2} with m = m(2 theta) when the
    limit is complex and m = m(2 lambda) when it is real.  Gaussian
    boundary: the same times n^{1/4}.  Extremal:
    n^{3 lambda/(2 theta_star)} * (m(lambda)/m(theta_star)^{lambda/theta_star})^n.
    Stable boundary: n^{w/(2 alpha)}.  Complex powers use principal
    branches; the polynomial factor is taken as 1 at n = 0.
    """
    if label.variant == OUT_OF_THEORY:
        raise ValueError("no scaling constants outside the theory")
    lam = complex(lam)
    if n < 0:
        raise ValueError("n must be >= 0")
    m_lam = complex(laplace_m(law, lam))

    if label.variant in (GAUSSIAN_INTERIOR, GAUSSIAN_BOUNDARY):
        m_2theta = laplace_m(law, 2.0 * lam.real).real
        m_2lambda = complex(laplace_m(law, 2.0 * lam))
        complex_limit = (m_2theta - abs(m_2lambda)) > 1e-12 * m_2theta
        m = complex(m_2theta) if complex_limit else m_2lambda
        base = m_lam * cmath.exp(-0.5 * cmath.log(m))
        a = base ** n
        if label.variant == GAUSSIAN_BOUNDARY and n > 0:
            a *= n ** 0.25
        return a

    if label.variant == EXTREMAL:
        bp = solve_theta_star(law)
        t = bp.theta_star
        m_star = laplace_m(law, t).real
        base = m_lam * cmath.exp(-(lam / t) * math.log(m_star))
        a = base ** n
        if n > 0:
            a *= cmath.exp((1.5 * lam / t) * math.log(n))
        return a

    # Stable boundary: pure polynomial scaling.
    if label.alpha is None or label.w is None:
        raise ValueError("stable-boundary label lacks alpha or w")
    if n == 0:
        return 1 + 0j
    return cmath.exp((label.w / (2.0 * label.alpha)) * math.log(n))


def regime_map(law: ReproductionLaw, theta_grid: Sequence[float],
               eta_grid: Sequence[float]) -> list[list[RegimeLabel]]:
    """Classify every (theta, eta) grid point; rows follow eta, columns theta.

    Points with theta < 0 are classified through the mirrored law (which
    flips the sign of theta), so the map covers the full plane.
    """
    mirror = mirrored(law)
    rows: list[list[RegimeLabel]] = []
    for eta in eta_grid:
        row = []
        for theta in theta_grid:
            if theta >= 0.0:
                row.append(classify(law, complex(theta, eta)))
            else:
                row.append(classify(mirror, complex(-theta, eta)))
        rows.append(row)
    return rows


def snail_curves(law: ReproductionLaw, lam: complex,
                 n_points: int = 400,
                 x_range: tuple[float, float] = (-5.0, 2.25)) -> list[np.ndarray]:
    """Polylines tracing the group cosets z0 * e^{lambda*x} of the weights.

    One curve per element of the finite circle part (z0 running over the
    roots of unity generated by the coset phase increment); a single curve
    when the circle part is full or trivial.
    """
    group = compute_group(law, lam)
    xs = np.linspace(x_range[0], x_range[1], n_points)
    spiral = np.exp(complex(lam) * xs)
    count = 1 if group.full_circle else int(group.u1_order or 1)
    return [np.exp(1j * group.phase * j) * spiral for j in range(count)]
