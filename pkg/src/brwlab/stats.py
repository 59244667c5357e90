"""Statistical machinery for complex-valued samples.

Three tools used throughout the laboratory: a two-sample energy-distance
test with a permutation null (rotation-equivariant on the plane, so no
arbitrary axis choices enter), a Hill estimator for tail indices of
positive magnitudes, and second-moment summaries with jackknife standard
errors.  Every p-value is deterministic given (inputs, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy import stats as _scipy_stats

# Default resample count: p-resolution 0.002 suffices for 0.01 thresholds.
DEFAULT_RESAMPLES = 500
# Hard floor demanded of every permutation/bootstrap null.
MIN_RESAMPLES = 200

ArrayLike = Union[Sequence[complex], np.ndarray]


@dataclass(frozen=True)
class TestReport:
    """Outcome of a randomized hypothesis test; reproducible given seed."""

    statistic: float
    p_value: float
    method: str
    bootstrap_count: int
    seed: int
    flags: tuple = ()


@dataclass(frozen=True)
class HillEstimate:
    """Hill tail-index estimate on the top-k order statistics."""

    alpha_hat: float
    ci90: tuple
    k: int
    n_obs: int
    unreliable: bool


@dataclass(frozen=True)
class MomentSummary:
    """Plug-in second-moment estimates with jackknife standard errors."""

    mean: complex
    mean_se: float
    abs2: float
    abs2_se: float
    pseudo2: complex
    pseudo2_se: float
    n_obs: int


def _as_complex_array(samples: ArrayLike) -> np.ndarray:
    values = getattr(samples, "values", samples)
    arr = np.asarray(values, dtype=np.complex128).ravel()
    return arr


def _jackknife_se_mean(values: np.ndarray) -> float:
    """Jackknife standard error of the sample mean (real or complex input)."""
    n = values.size
    total = values.sum()
    loo = (total - values) / (n - 1)
    if np.iscomplexobj(values):
        var = loo.real.var() + loo.imag.var()
    else:
        var = loo.var()
    return math.sqrt((n - 1.0) / n * n * var)


def _energy_from_blocks(dist: np.ndarray, n_a: int) -> float:
    s_aa = dist[:n_a, :n_a].sum()
    s_bb = dist[n_a:, n_a:].sum()
    s_ab = dist[:n_a, n_a:].sum()
    n_b = dist.shape[0] - n_a
    stat = 2.0 * (s_ab / (n_a * n_b)) - s_aa / (n_a * n_a) - s_bb / (n_b * n_b)
    return max(stat, 0.0)


def energy_test(a: ArrayLike, b: ArrayLike, b_boot: int = DEFAULT_RESAMPLES,
                seed: int = 0) -> TestReport:
    """Two-sample energy-distance test on the complex plane.

    The statistic is the V-form 2 E|A-B| - E|A-A'| - E|B-B'| with all
    pairs included (so it is exactly zero when the two samples coincide as
    multisets), clamped at zero.  The null is a label permutation of the
    pooled sample; the p-value uses the add-one estimator
    (#{perm >= observed} + 1)/(b_boot + 1), which equals 1 on identical
    samples and is never zero.
    """
    za, zb = _as_complex_array(a), _as_complex_array(b)
    n_a, n_b = za.size, zb.size
    if n_a < 50 or n_b < 50:
        raise ValueError(
            f"too few samples for the energy test: need >= 50 per side, "
            f"got {n_a} and {n_b}"
        )
    if b_boot < MIN_RESAMPLES:
        raise ValueError(f"b_boot must be >= {MIN_RESAMPLES}, got {b_boot}")
    # The test is symmetric in its two arguments; putting them in a
    # canonical order makes the report bitwise identical under a swap.
    if (n_b, zb.tobytes()) < (n_a, za.tobytes()):
        za, zb = zb, za
        n_a, n_b = n_b, n_a

    pool = np.concatenate([za, zb])
    n = n_a + n_b
    dist = np.abs(pool[:, None] - pool[None, :])
    observed = _energy_from_blocks(dist, n_a)

    # Permutation null through one matrix product: with the A-membership
    # indicator u, the pair sums reduce to u.D.u and u.d (d = row sums),
    # so all b_boot statistics come from a single (b_boot, n) x (n, n) gemm.
    rng = np.random.default_rng(seed)
    idx = rng.permuted(np.tile(np.arange(n), (b_boot, 1)), axis=1)
    u = np.zeros((b_boot, n))
    np.put_along_axis(u, idx[:, :n_a], 1.0, axis=1)
    d = dist.sum(axis=1)
    total = d.sum()
    r = u @ dist
    s_aa = np.einsum("bi,bi->b", r, u)
    ud = u @ d
    perm = (
        2.0 * (ud - s_aa) / (n_a * n_b)
        - s_aa / (n_a * n_a)
        - (total - 2.0 * ud + s_aa) / (n_b * n_b)
    )
    perm = np.maximum(perm, 0.0)
    p = (int(np.count_nonzero(perm >= observed)) + 1) / (b_boot + 1)
    return TestReport(
        statistic=float(observed),
        p_value=p,
        method="energy-distance permutation (V-statistic)",
        bootstrap_count=b_boot,
        seed=seed,
    )


def hill_estimator(mags: ArrayLike, k: int) -> HillEstimate:
    """Hill estimate of the tail index alpha from positive magnitudes.

    Uses the top-k order statistics against the (k+1)-th largest:
    1/alpha_hat = mean over the top k of log(x_(i) / x_(k+1)).  The 90%
    interval is the asymptotic-normal alpha_hat * (1 +- 1.645/sqrt(k)); it
    is flagged unreliable when its relative half-width reaches 50%
    (k <= 10).  Ratios are formed before taking logs, so the estimate is
    invariant under rescaling of the input (exactly so for power-of-two
    scale factors; to rounding otherwise).
    """
    x = np.asarray(getattr(mags, "values", mags), dtype=np.float64).ravel()
    if x.size == 0 or np.any(~(x > 0.0)):
        raise ValueError("hill_estimator needs strictly positive magnitudes")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError("k must be a positive integer")
    if k >= x.size / 2:
        raise ValueError(f"k must be < n/2 = {x.size / 2:g}, got {k}")
    top = np.sort(x)[::-1][: k + 1]
    logs = np.log(top[:k] / top[k])
    alpha = k / logs.sum()
    half = 1.645 / math.sqrt(k)
    return HillEstimate(
        alpha_hat=float(alpha),
        ci90=(float(alpha * (1.0 - half)), float(alpha * (1.0 + half))),
        k=int(k),
        n_obs=int(x.size),
        unreliable=bool(half >= 0.5),
    )


def complex_normal_structure(samples: ArrayLike,
                             b_boot: int = DEFAULT_RESAMPLES,
                             seed: int = 0) -> TestReport:
    """Isotropy check of the 2x2 covariance structure of a complex sample.

    An isotropic (rotation-invariant) complex Gaussian has equal diagonal
    covariance and zero off-diagonal entries, which is equivalent to a
    vanishing pseudo-moment E[zeta^2].  The statistic is the ratio
    r = |mean(zeta^2)| / mean(|zeta|^2); the null resamples multiply each
    observation by an independent uniform phase (the isotropic-ized version
    of the data: moduli kept, pseudo-moment killed in law), and the
    one-sided p-value is P(r_null >= r_observed).
    """
    z = _as_complex_array(samples)
    if z.size < 100:
        raise ValueError(
            f"complex_normal_structure needs >= 100 samples, got {z.size}"
        )
    if b_boot < MIN_RESAMPLES:
        raise ValueError(f"b_boot must be >= {MIN_RESAMPLES}, got {b_boot}")
    flags = ()
    if np.ptp(z.real) == 0.0 and np.ptp(z.imag) == 0.0:
        flags = ("degenerate",)
    z2 = z * z
    abs2 = np.abs(z2).mean()
    if abs2 == 0.0:
        return TestReport(
            statistic=0.0, p_value=1.0,
            method="pseudo-moment ratio, phase-randomization null",
            bootstrap_count=b_boot, seed=seed, flags=flags,
        )
    observed = abs(z2.mean()) / abs2

    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(b_boot, z.size))
    null = np.abs((z2 * np.exp(2j * phases)).mean(axis=1)) / abs2
    p = (int(np.count_nonzero(null >= observed)) + 1) / (b_boot + 1)
    return TestReport(
        statistic=float(observed),
        p_value=p,
        method="pseudo-moment ratio, phase-randomization null",
        bootstrap_count=b_boot,
        seed=seed,
        flags=flags,
    )


def moment_summary(samples: ArrayLike) -> MomentSummary:
    """First and second moments (mean, E|z|^2, pseudo E[z^2]) with SEs.

    Standard errors are jackknife.  The reported pair always satisfies
    |pseudo2| <= abs2: both average the same squared values (pseudo2 the
    complex squares, abs2 their moduli), and the one-or-two-ulp slack that
    float summation can lose in perfectly phase-aligned samples is restored
    by rounding abs2 up to |pseudo2| when the two cross.
    """
    z = _as_complex_array(samples)
    if z.size < 2:
        raise ValueError("moment_summary needs at least 2 samples")
    z2 = z * z
    mods = np.abs(z2)
    pseudo2 = complex(z2.mean())
    abs2 = float(mods.mean())
    abs2 = max(abs2, abs(pseudo2))
    return MomentSummary(
        mean=complex(z.mean()),
        mean_se=_jackknife_se_mean(z),
        abs2=abs2,
        abs2_se=_jackknife_se_mean(mods),
        pseudo2=pseudo2,
        pseudo2_se=_jackknife_se_mean(z2),
        n_obs=int(z.size),
    )


def marginal_ks(a: ArrayLike, b: ArrayLike) -> dict:
    """Diagnostic KS p-values on the 1-D marginals |z| and arg z.

    Not a gate anywhere: the energy test carries the two-sample decisions;
    these marginals only help localize a discrepancy when one is found.
    """
    za, zb = _as_complex_array(a), _as_complex_array(b)
    return {
        "modulus_p": float(_scipy_stats.ks_2samp(np.abs(za), np.abs(zb)).pvalue),
        "phase_p": float(_scipy_stats.ks_2samp(np.angle(za), np.angle(zb)).pvalue),
    }
