"""Reproduction laws for branching random walks, with exact transforms.

A law couples a finite-support offspring-count distribution with a
displacement family whose Laplace transform E[exp(-lam*X)] is entire and
available in closed form.  Martingale normalizations, regime boundaries and
scaling constants all consume these transforms, so they are kept exact
rather than quadrature-based: a root found to 1e-12 actually means
something.

Conventions.  lam = theta + i*eta is the complex weight parameter; the
transform of the intensity measure is m(lam) = E[N] * phi(lam) where phi is
the displacement transform.  All displacement draws are iid and independent
of the offspring count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Largest supported offspring count.  The traversal kernel stores one
# pending-children frame per tree level with this fixed width.
MAX_OFFSPRING = 64

_PROB_SUM_TOL = 1e-12
_M_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class PointMass:
    """Deterministic displacement by x."""

    x: float


@dataclass(frozen=True)
class Gaussian:
    """Normal displacement with the given mean and standard deviation."""

    mean: float
    sd: float

    def __post_init__(self) -> None:
        if not self.sd > 0:
            raise ValueError(f"Gaussian sd must be > 0, got {self.sd}")


@dataclass(frozen=True)
class Uniform:
    """Uniform displacement on (a, b)."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError(f"Uniform needs a < b, got a={self.a}, b={self.b}")


Displacement = PointMass | Gaussian | Uniform

# (1 - exp(-z))/z and the log-derivatives of the uniform transform have a
# removable singularity at 0; below this radius the entire series is used.
_SMALL_Z = 1e-3


def _g_ratio(z: complex) -> complex:
    """(1 - exp(-z)) / z, entire, g(0) = 1."""
    if abs(z) < _SMALL_Z:
        # 1 - z/2 + z^2/6 - z^3/24 + z^4/120; next term ~ |z|^5/720 < 2e-19
        return 1.0 + z * (-0.5 + z * (1.0 / 6.0 + z * (-1.0 / 24.0 + z / 120.0)))
    x, y = (z.real, z.imag) if isinstance(z, complex) else (z, 0.0)
    if y == 0.0:
        # expm1 keeps 1 - e^{-x} accurate right down to the series switch
        return -math.expm1(-x) / x
    # componentwise: 1 - e^{-x}cos y = 2 sin^2(y/2) - cos(y) expm1(-x)
    s = math.sin(0.5 * y)
    num = complex(
        2.0 * s * s - math.cos(y) * math.expm1(-x),
        math.exp(-x) * math.sin(y),
    )
    return num / z


def _log_g_d1(z: float) -> float:
    """d/dz log g(z) = 1/(e^z - 1) - 1/z."""
    if abs(z) < _SMALL_Z:
        # Bernoulli series: -1/2 + z/12 - z^3/720 + z^5/30240
        z2 = z * z
        return -0.5 + z * (1.0 / 12.0 + z2 * (-1.0 / 720.0 + z2 / 30240.0))
    if z > 700.0:
        return -1.0 / z
    e = math.expm1(z)
    return 1.0 / e - 1.0 / z


def _log_g_d2(z: float) -> float:
    """d^2/dz^2 log g(z) = 1/z^2 - e^z/(e^z - 1)^2."""
    if abs(z) < _SMALL_Z:
        z2 = z * z
        return 1.0 / 12.0 + z2 * (-1.0 / 240.0 + z2 / 6048.0)
    if z > 700.0:
        return 1.0 / (z * z)
    e = math.expm1(z)
    return 1.0 / (z * z) - (e + 1.0) / (e * e)


def displacement_transform(disp: Displacement, lam: complex) -> complex:
    """phi(lam) = E[exp(-lam*X)] for a single displacement X."""
    if isinstance(disp, PointMass):
        return np.exp(-lam * disp.x)
    if isinstance(disp, Gaussian):
        return np.exp(-lam * disp.mean + 0.5 * lam * lam * disp.sd * disp.sd)
    width = disp.b - disp.a
    return np.exp(-lam * disp.a) * _g_ratio(lam * width)


def _log_phi_derivative(disp: Displacement, theta: float, order: int) -> float:
    if isinstance(disp, PointMass):
        return -disp.x if order == 1 else 0.0
    if isinstance(disp, Gaussian):
        if order == 1:
            return -disp.mean + theta * disp.sd * disp.sd
        return disp.sd * disp.sd
    width = disp.b - disp.a
    if order == 1:
        return -disp.a + width * _log_g_d1(theta * width)
    return width * width * _log_g_d2(theta * width)


@dataclass(frozen=True)
class ReproductionLaw:
    """Offspring-count probabilities (index = count) plus displacement family.

    Displacements are iid across children and independent of the count
    (`displacements_iid` is fixed true; the field records the assumption).
    Probabilities must be nonnegative and sum to 1 within 1e-12; support is
    capped at MAX_OFFSPRING.  Supercriticality (mean_offspring > 1) is not
    required here -- simulation and classification check it where their
    statements need it.
    """

    offspring_probs: tuple[float, ...]
    displacement: Displacement
    displacements_iid: bool = True

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.offspring_probs)
        object.__setattr__(self, "offspring_probs", probs)
        if len(probs) == 0:
            raise ValueError("offspring_probs is empty")
        if len(probs) - 1 > MAX_OFFSPRING:
            raise ValueError(
                f"offspring counts above {MAX_OFFSPRING} unsupported "
                f"(got support up to {len(probs) - 1})"
            )
        if any(p < 0.0 or not math.isfinite(p) for p in probs):
            raise ValueError("offspring_probs must be finite and nonnegative")
        total = math.fsum(probs)
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise ValueError(
                f"offspring_probs must sum to 1 within {_PROB_SUM_TOL}, "
                f"got {total!r}"
            )
        if not self.displacements_iid:
            raise ValueError("only iid displacements are supported")

    @property
    def mean_offspring(self) -> float:
        return math.fsum(k * p for k, p in enumerate(self.offspring_probs))

    @property
    def second_factorial_moment(self) -> float:
        """E[N(N-1)]."""
        return math.fsum(k * (k - 1) * p for k, p in enumerate(self.offspring_probs))

    @property
    def max_offspring(self) -> int:
        return len(self.offspring_probs) - 1

    def require_supercritical(self) -> None:
        if not self.mean_offspring > 1.0:
            raise ValueError(
                f"supercritical law required (mean offspring "
                f"{self.mean_offspring} <= 1)"
            )


def binary_gaussian(sd: float = 1.0, mean: float = 0.0) -> ReproductionLaw:
    """Deterministic two offspring with Gaussian displacements."""
    return ReproductionLaw((0.0, 0.0, 1.0), Gaussian(mean, sd))


def mirrored(law: ReproductionLaw) -> ReproductionLaw:
    """The law with displacements negated (x -> -x)."""
    d = law.displacement
    if isinstance(d, PointMass):
        md: Displacement = PointMass(-d.x)
    elif isinstance(d, Gaussian):
        md = Gaussian(-d.mean, d.sd)
    else:
        md = Uniform(-d.b, -d.a)
    return ReproductionLaw(law.offspring_probs, md, law.displacements_iid)


def laplace_m(law: ReproductionLaw, lam: complex) -> complex:
    """m(lam) = E[N] * E[exp(-lam*X)], entire in lam."""
    return law.mean_offspring * displacement_transform(law.displacement, lam)


def log_laplace_m(law: ReproductionLaw, theta: float) -> float:
    """log m(theta) for real theta, safe against overflow for large arguments.

    Root finding brackets probe the transform far out on the real axis where
    direct exponentiation overflows; this evaluates the logarithm in closed
    form instead.
    """
    disp = law.displacement
    base = math.log(law.mean_offspring)
    if isinstance(disp, PointMass):
        return base - theta * disp.x
    if isinstance(disp, Gaussian):
        return base - theta * disp.mean + 0.5 * theta * theta * disp.sd * disp.sd
    width = disp.b - disp.a
    z = theta * width
    if z >= 30.0:
        log_ratio = math.log1p(-math.exp(-z)) - math.log(z)
    elif z <= -30.0:
        log_ratio = -z - math.log(-z)
    else:
        ratio = _g_ratio(z) if abs(z) < _SMALL_Z else -math.expm1(-z) / z
        log_ratio = math.log(ratio)
    return base - theta * disp.a + log_ratio


def log_m_derivatives(law: ReproductionLaw, theta: float, order: int) -> float:
    """d/dtheta log m(theta) (order 1) or its second derivative (order 2).

    The offspring mean is constant in theta, so these equal the
    log-derivatives of the displacement transform.  Order 2 is the variance
    of the exponentially tilted displacement, hence >= 0 (0 only for
    PointMass).
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    return _log_phi_derivative(law.displacement, theta, order)


def _sigma_sq(law: ReproductionLaw, lam: complex) -> float:
    theta = lam.real
    phi_lam = displacement_transform(law.displacement, lam)
    phi_2theta = displacement_transform(law.displacement, 2.0 * theta).real
    m_lam = law.mean_offspring * phi_lam
    m_abs2 = abs(m_lam) ** 2
    if m_abs2 < _M_ZERO_TOL * _M_ZERO_TOL:
        raise ValueError(f"m(lambda) vanishes at lambda={lam}")
    num = law.mean_offspring * phi_2theta + law.second_factorial_moment * abs(phi_lam) ** 2
    val = num / m_abs2 - 1.0
    # exact cancellation can land a few ulp below zero
    return max(val, 0.0)


@dataclass(frozen=True)
class ComplexParam:
    """lam = theta + i*eta with law-dependent transform values cached.

    Build with `ComplexParam.for_law`; direct construction is for tests.
    A vanishing m(lambda) (|m| < 1e-12) is a hard error -- every consumer
    divides by it.  The cached values satisfy |m(2*lam)| <= m(2*theta)
    within 1e-12 (transform modulus bound for a real intensity measure).
    """

    theta: float
    eta: float
    m_lambda: complex
    m_2theta: float
    m_2lambda: complex
    sigma_lambda_sq: float

    def __post_init__(self) -> None:
        if abs(self.m_lambda) < _M_ZERO_TOL:
            raise ValueError(
                f"m(lambda) = {self.m_lambda} is numerically zero at "
                f"lambda = {self.lam}; the martingale normalization is undefined"
            )
        if abs(self.m_2lambda) > self.m_2theta * (1.0 + 1e-12):
            raise ValueError(
                "cached transforms violate |m(2 lambda)| <= m(2 theta): "
                f"{abs(self.m_2lambda)} > {self.m_2theta}"
            )

    @property
    def lam(self) -> complex:
        return complex(self.theta, self.eta)

    @property
    def sigma_degenerate(self) -> bool:
        """True when the first-generation martingale is a.s. constant."""
        return self.sigma_lambda_sq <= 1e-12

    @classmethod
    def for_law(cls, law: ReproductionLaw, lam: complex) -> "ComplexParam":
        lam = complex(lam)
        return cls(
            theta=lam.real,
            eta=lam.imag,
            m_lambda=complex(laplace_m(law, lam)),
            m_2theta=float(laplace_m(law, 2.0 * lam.real).real),
            m_2lambda=complex(laplace_m(law, 2.0 * lam)),
            sigma_lambda_sq=_sigma_sq(law, lam),
        )


def sigma_lambda_sq(law: ReproductionLaw, param: "ComplexParam | complex") -> float:
    """E|Z_1(lambda) - 1|^2 in closed form (iid displacements).

    = (E[N] phi(2 theta) + E[N(N-1)] |phi(lambda)|^2) / |m(lambda)|^2 - 1.
    A return of 0 means Z_1 is a.s. constant, which degenerates the
    Gaussian fluctuation regime (see ComplexParam.sigma_degenerate).
    """
    lam = param.lam if isinstance(param, ComplexParam) else complex(param)
    return _sigma_sq(law, lam)


@lru_cache(maxsize=256)
def _offspring_cdf(probs: tuple[float, ...]) -> np.ndarray:
    cdf = np.cumsum(np.asarray(probs, dtype=np.float64))
    cdf[-1] = 1.0
    return cdf


def sample_offspring(law: ReproductionLaw, rng: np.random.Generator) -> np.ndarray:
    """One litter: array of displacements with law-distributed length.

    Reference sampler for moment checks; the traversal kernel has its own
    (counter-based) streams and draw layout.
    """
    cdf = _offspring_cdf(law.offspring_probs)
    k = int(np.searchsorted(cdf, rng.random(), side="left"))
    d = law.displacement
    if isinstance(d, PointMass):
        return np.full(k, d.x, dtype=np.float64)
    if isinstance(d, Gaussian):
        return rng.normal(d.mean, d.sd, size=k)
    return rng.uniform(d.a, d.b, size=k)
