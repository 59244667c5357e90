"""Randomized audits of the moment inequalities behind the limit theorems.

Four checks, each an inequality the analysis leans on:

* ``check_tv_inequality`` -- for a complex martingale started at zero,
  E f(|M_n|) <= 4 sum_k E f(|D_k|) whenever f is nondecreasing convex
  with f(0) = 0 and f(sqrt(x)) concave; f(x) = x^p with 1 <= p <= 2
  qualifies.
* ``check_parallelogram_bound`` -- the pointwise inequality
  f(|z+w|) + f(|z-w|) <= 2 (f(|z|) + f(|w|)) on the plane; at p = 2 it
  is the parallelogram identity.
* ``check_weighted_tail_bound`` -- for iid centered complex Y with
  E|Y| < infinity and weights with sum |c_k| = 1, c = max |c_k|:
  P(|sum c_k Y_k| > eps) <= (8/eps^2) (int_0^{1/c} c x P(|Y|>x) dx
  + int_{1/c}^inf P(|Y|>x) dx).
* ``check_cancellation`` -- a multiplicative cascade with unit expected
  total mass but rotating phases (|E Z_1| < 1, E sum |L(v)|^p < 1)
  loses its mass: E|Z_n|^q -> 0 geometrically, q = min(p, 2).

Both sides of every stochastic inequality are estimated from the same
draws, which keeps the 5-standard-error slack tight.  The cascade check
runs its own flat array cascade rather than the tree engine: the weights
here are abstract (no positions, no tips), and an independent
implementation is worth more as evidence.  Everything is deterministic
given the seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .simulator import stream_key

INCREMENT_KINDS = ("disk", "phase", "gaussian", "heavy", "skew")

CASCADE_KINDS = ("symmetric-phase", "squared-gaussian", "positive-real")


def draw_centered(kind: str, rng: np.random.Generator, size) -> np.ndarray:
    """Iid draws of a centered complex random variable with E|Y| finite.

    "disk" is uniform on the unit disk, "phase" uniform on the unit
    circle, "gaussian" the standard complex normal, "heavy" a Pareto(3/2)
    modulus with uniform phase (infinite variance, finite mean), and
    "skew" the real, asymmetric Exp(1) - 1 (centering, not symmetry, is
    what the inequalities use).
    """
    if kind == "disk":
        radius = np.sqrt(rng.random(size))
    elif kind == "phase":
        radius = 1.0
    elif kind == "gaussian":
        out = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        return out * math.sqrt(0.5)
    elif kind == "heavy":
        radius = rng.pareto(1.5, size) + 1.0
    elif kind == "skew":
        return (rng.exponential(1.0, size) - 1.0).astype(np.complex128)
    else:
        raise ValueError(f"unknown increment kind {kind!r}; "
                         f"choose from {', '.join(INCREMENT_KINDS)}")
    return radius * np.exp(2j * math.pi * rng.random(size))


@dataclass(frozen=True)
class TrialSpec:
    """One batch of martingale-inequality trials."""

    trials: int
    martingale_length: int
    increment: str = "disk"
    p: float = 1.5
    seed: int = 0
    inner: int = 10_000

    def __post_init__(self) -> None:
        if not 1.0 <= self.p <= 2.0:
            raise ValueError(
                f"p must lie in [1, 2] so that x^p is convex while "
                f"x^(p/2) stays concave; got {self.p}"
            )
        if self.increment not in INCREMENT_KINDS:
            raise ValueError(f"unknown increment kind {self.increment!r}; "
                             f"choose from {', '.join(INCREMENT_KINDS)}")
        if self.trials < 1 or self.martingale_length < 1:
            raise ValueError("trials and martingale_length must be >= 1")
        if self.inner < 100:
            raise ValueError("inner draw count must be >= 100")


@dataclass(frozen=True)
class TvInequalityReport:
    """Violation count plus the tightest observed use of the bound.

    ``max_ratio`` is max over trials of E f(|M_n|) / (4 sum E f(|D_k|));
    the inequality says it stays <= 1.  With orthogonal increments and
    p = 2 it equals 1/4 exactly.
    """

    violations: int
    trials: int
    max_ratio: float
    max_ratio_se: float
    max_ratio_trial: int
    p: float
    martingale_length: int


def check_tv_inequality(spec: TrialSpec) -> TvInequalityReport:
    """MC-estimate both sides of the martingale moment bound per trial.

    Each trial draws random complex weights w_1..w_n; the martingale is
    M_j = sum_{k<=j} w_k Y_k with iid centered Y.  LHS and RHS are
    estimated from the same ``inner`` draws of (Y_1, ..., Y_n); a trial
    counts as a violation when mean(f(|M_n|) - 4 sum_k f(|w_k Y_k|))
    exceeds 5 standard errors of itself.
    """
    violations = 0
    max_ratio = -math.inf
    max_ratio_se = 0.0
    max_ratio_trial = -1
    n = spec.martingale_length
    for t in range(spec.trials):
        rng = np.random.default_rng(stream_key(spec.seed, f"tv-trial-{t}"))
        mags = np.exp(rng.uniform(-1.5, 1.5, n))
        weights = mags * np.exp(2j * math.pi * rng.random(n))
        draws = draw_centered(spec.increment, rng, (spec.inner, n))
        lhs = np.abs(draws @ weights) ** spec.p
        rhs = np.sum((np.abs(draws) * mags) ** spec.p, axis=1)
        diff = lhs - 4.0 * rhs
        se = float(np.std(diff, ddof=1)) / math.sqrt(spec.inner)
        if float(np.mean(diff)) > 5.0 * se:
            violations += 1
        denom = 4.0 * float(np.mean(rhs))
        ratio = float(np.mean(lhs)) / denom
        if ratio > max_ratio:
            resid = lhs - ratio * 4.0 * rhs
            max_ratio = ratio
            max_ratio_se = float(np.std(resid, ddof=1)) \
                / (denom * math.sqrt(spec.inner))
            max_ratio_trial = t
    return TvInequalityReport(
        violations=violations,
        trials=spec.trials,
        max_ratio=max_ratio,
        max_ratio_se=max_ratio_se,
        max_ratio_trial=max_ratio_trial,
        p=spec.p,
        martingale_length=n,
    )


def check_parallelogram_bound(count: int = 1_000_000, p: float = 1.5,
                              seed: int = 0,
                              rel_slack: float = 1e-12) -> int:
    """Count violations of f(|z+w|) + f(|z-w|) <= 2(f(|z|) + f(|w|)).

    Pointwise and deterministic: ``count`` pairs (z, w) with magnitudes
    spread over several decades, compared with relative slack for the
    floating-point roundoff.  Returns the number of violating pairs.
    """
    if not 1.0 <= p <= 2.0:
        raise ValueError(f"p must lie in [1, 2]; got {p}")
    rng = np.random.default_rng(stream_key(seed, "parallelogram"))

    def _draw() -> np.ndarray:
        vec = rng.standard_normal(count) + 1j * rng.standard_normal(count)
        return vec * np.exp(rng.uniform(-3.0, 3.0, count))

    z, w = _draw(), _draw()
    lhs = np.abs(z + w) ** p + np.abs(z - w) ** p
    rhs = 2.0 * (np.abs(z) ** p + np.abs(w) ** p)
    return int(np.sum(lhs > rhs * (1.0 + rel_slack)))


@dataclass(frozen=True)
class WeightedTailReport:
    """Tail probabilities of |sum c_k Y_k| against the integral bound."""

    rows: tuple  # (eps, p_hat, p_se, bound) per grid point
    violations: int
    c_max: float
    n_weights: int
    increment: str

    def bound(self, eps: float) -> float:
        for row in self.rows:
            if row[0] == eps:
                return row[3]
        raise KeyError(f"eps {eps} not on the grid")


def check_weighted_tail_bound(weights: Sequence[complex],
                              increment: str = "disk",
                              eps_grid: Sequence[float] = (0.2, 0.4, 0.6, 0.8),
                              trials: int = 40_000,
                              tail_draws: int = 200_000,
                              seed: int = 0) -> WeightedTailReport:
    """Compare P(|sum c_k Y_k| > eps) with its truncated-moment bound.

    The two integrals reduce exactly (Fubini) to moments of |Y|:
    int_0^T x P(|Y|>x) dx = E[min(|Y|, T)^2] / 2 and
    int_T^inf P(|Y|>x) dx = E[(|Y| - T)_+], so the bound is estimated
    from a large plain sample of |Y| instead of a quadrature grid.  A
    grid point is a violation when the empirical probability exceeds
    the bound by more than 5 binomial standard errors.
    """
    c_vec = np.asarray(weights, dtype=np.complex128).ravel()
    total = float(np.sum(np.abs(c_vec)))
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must satisfy sum |c_k| = 1; got {total}")
    if not all(0.0 < e < 1.0 for e in eps_grid):
        raise ValueError("eps grid must lie inside (0, 1)")
    c_max = float(np.max(np.abs(c_vec)))
    cutoff = 1.0 / c_max

    rng_tail = np.random.default_rng(stream_key(seed, "tail-moments"))
    mags = np.abs(draw_centered(increment, rng_tail, tail_draws))
    inner = c_max * float(np.mean(np.minimum(mags, cutoff) ** 2)) / 2.0
    outer = float(np.mean(np.maximum(mags - cutoff, 0.0)))

    rng_sum = np.random.default_rng(stream_key(seed, "tail-sums"))
    sums = np.abs(
        draw_centered(increment, rng_sum, (trials, c_vec.size)) @ c_vec
    )
    rows = []
    violations = 0
    for eps in eps_grid:
        p_hat = float(np.mean(sums > eps))
        p_se = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / trials) / trials)
        bound = 8.0 / eps**2 * (inner + outer)
        if p_hat > bound + 5.0 * p_se:
            violations += 1
        rows.append((float(eps), p_hat, p_se, bound))
    return WeightedTailReport(
        rows=tuple(rows),
        violations=violations,
        c_max=c_max,
        n_weights=int(c_vec.size),
        increment=increment,
    )


@dataclass(frozen=True)
class CascadeFamily:
    """Distribution of one node's weight vector (L(1), ..., L(b)).

    Every family is built to have E sum |L(v)| = 1 exactly.
    "symmetric-phase" uses L(v) = exp(i Theta_v)/b with iid uniform
    phases (E Z_1 = 0); "squared-gaussian" uses the squared, mass-
    normalized exponential weights L(v) = exp(-2 lam S_v) / (b exp(2
    theta^2)) with iid standard normal steps S_v; "positive-real" is the
    deterministic L(v) = 1/b, which violates |E Z_1| < 1 and exists to
    exercise the guard.
    """

    kind: str
    branches: int = 2
    lam: complex = 0.3 + 0.6j

    def __post_init__(self) -> None:
        if self.kind not in CASCADE_KINDS:
            raise ValueError(f"unknown cascade kind {self.kind!r}; "
                             f"choose from {', '.join(CASCADE_KINDS)}")
        if self.branches < 2:
            raise ValueError("cascades need branches >= 2")
        object.__setattr__(self, "lam", complex(self.lam))

    def mean_z1(self) -> complex:
        """a = E Z_1, available in closed form for every family."""
        if self.kind == "symmetric-phase":
            return 0.0 + 0.0j
        if self.kind == "positive-real":
            return 1.0 + 0.0j
        theta = self.lam.real
        # E exp(-2 lam S) = exp(2 lam^2), normalized by exp(2 theta^2)
        return np.exp(2.0 * self.lam**2 - 2.0 * theta**2)

    def moment_mass(self, q: float) -> float:
        """E sum |L(v)|^q in closed form."""
        b = self.branches
        if self.kind == "symmetric-phase":
            return float(b ** (1.0 - q))
        if self.kind == "positive-real":
            return float(b ** (1.0 - q))
        theta = self.lam.real
        # E exp(-2 q theta S) = exp(2 q^2 theta^2)
        return float(b ** (1.0 - q)
                     * math.exp(2.0 * theta**2 * q * (q - 1.0)))

    def draw_children(self, rng: np.random.Generator,
                      nodes: int) -> np.ndarray:
        shape = (nodes, self.branches)
        if self.kind == "symmetric-phase":
            return np.exp(2j * math.pi * rng.random(shape)) / self.branches
        if self.kind == "positive-real":
            return np.full(shape, 1.0 / self.branches, dtype=np.complex128)
        steps = rng.standard_normal(shape)
        theta = self.lam.real
        norm = self.branches * math.exp(2.0 * theta**2)
        return np.exp(-2.0 * self.lam * steps) / norm


@dataclass(frozen=True)
class CancellationReport:
    """Empirical E|Z_n|^q along a depth grid with its geometric fit."""

    rows: tuple  # (n, moment, se) per depth
    q: float
    slope: float
    r_squared: float
    a_abs: float
    moment_mass: float
    passed: bool

    def moment(self, n: int) -> float:
        for row in self.rows:
            if row[0] == n:
                return row[1]
        raise KeyError(f"depth {n} not on the grid")


def check_cancellation(family: CascadeFamily, p: float = 2.0,
                       n_grid: Sequence[int] = (4, 8, 12, 16),
                       trees: int = 200, seed: int = 0) -> CancellationReport:
    """Watch E|Z_n|^q of a phase-rotating cascade decay geometrically.

    Z_n is the sum of the generation-n products of node weights.  The
    family must have |E Z_1| < 1 and E sum |L(v)|^q < 1 (q = min(p, 2));
    both are checked in closed form before any simulation.  The check
    passes when the log of the empirical moment falls linearly in n
    (fitted slope < 0, R^2 > 0.9).
    """
    if p <= 1.0:
        raise ValueError(f"cancellation needs an exponent p > 1; got {p}")
    q = min(p, 2.0)
    a_abs = abs(family.mean_z1())
    if a_abs >= 1.0:
        raise ValueError(
            f"cancellation needs |E Z_1| < 1, but this family has "
            f"|a| = {a_abs:.6g}; all-positive weights cannot cancel"
        )
    mass = family.moment_mass(q)
    if mass >= 1.0:
        raise ValueError(
            f"cancellation needs E sum |L(v)|^{q:g} < 1, got {mass:.6g}"
        )
    ns = tuple(sorted(int(n) for n in n_grid))
    if len(ns) < 2 or ns[0] < 1:
        raise ValueError("n_grid needs at least two depths >= 1")

    moments = np.empty((trees, len(ns)))
    for t in range(trees):
        rng = np.random.default_rng(stream_key(seed, f"cascade-{t}"))
        vals = np.ones(1, dtype=np.complex128)
        level = 0
        for j, n in enumerate(ns):
            while level < n:
                children = family.draw_children(rng, vals.size)
                vals = (vals[:, None] * children).ravel()
                level += 1
            moments[t, j] = abs(np.sum(vals)) ** q

    means = moments.mean(axis=0)
    ses = moments.std(axis=0, ddof=1) / math.sqrt(trees)
    rows = tuple((n, float(m), float(s)) for n, m, s in zip(ns, means, ses))

    logs = np.log(means)
    slope, intercept = np.polyfit(ns, logs, 1)
    fitted = slope * np.asarray(ns) + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return CancellationReport(
        rows=rows,
        q=q,
        slope=float(slope),
        r_squared=r_squared,
        a_abs=a_abs,
        moment_mass=mass,
        passed=bool(slope < 0.0 and r_squared > 0.9),
    )


@dataclass(frozen=True)
class SuiteReport:
    """One line per check: (name, violations); zero everywhere is a pass."""

    checks: tuple
    violations: int
    elapsed_seconds: float

    def lines(self) -> list:
        out = [f"{name}: {v} violation{'s' if v != 1 else ''}"
               for name, v in self.checks]
        out.append("suite: " + ("pass" if self.violations == 0 else "FAIL"))
        return out


def run_suite(seed: int = 0, scale: float = 1.0) -> SuiteReport:
    """Run every check at full published scale; ``scale`` shrinks trial
    counts proportionally for quick smoke runs (1.0 = the real thing)."""

    def _n(base: int) -> int:
        return max(64, int(round(base * scale)))

    t0 = time.perf_counter()
    checks = []

    tv_legs = (
        ("tv_p1_heavy", TrialSpec(trials=_n(3334), martingale_length=6,
                                  increment="heavy", p=1.0,
                                  seed=stream_key(seed, "tv-a"))),
        ("tv_p15_disk", TrialSpec(trials=_n(3333), martingale_length=8,
                                  increment="disk", p=1.5,
                                  seed=stream_key(seed, "tv-b"))),
        ("tv_p2_gaussian", TrialSpec(trials=_n(3333), martingale_length=8,
                                     increment="gaussian", p=2.0,
                                     seed=stream_key(seed, "tv-c"))),
    )
    for name, spec in tv_legs:
        checks.append((name, check_tv_inequality(spec).violations))

    for p in (1.0, 1.5, 2.0):
        checks.append((
            f"parallelogram_p{p:g}",
            check_parallelogram_bound(_n(1_000_000), p,
                                      seed=stream_key(seed, f"par-{p:g}")),
        ))

    third = np.full(3, 1.0 / 3.0)
    geometric = 2.0 ** -np.arange(1.0, 9.0)
    geometric /= geometric.sum()
    tail_legs = (
        ("tail_single_disk", (1.0,), "disk"),
        ("tail_equal_phase", np.full(16, 1.0 / 16.0), "phase"),
        ("tail_geometric_heavy", geometric, "heavy"),
        ("tail_thirds_skew", third, "skew"),
    )
    for name, w, kind in tail_legs:
        report = check_weighted_tail_bound(
            w, kind, trials=_n(40_000), tail_draws=_n(200_000),
            seed=stream_key(seed, name),
        )
        checks.append((name, report.violations))

    cascade_legs = (
        ("cancel_phase", CascadeFamily("symmetric-phase"), 2.0,
         (4, 8, 12, 16)),
        ("cancel_squared", CascadeFamily("squared-gaussian"), 2.0,
         (4, 8, 12, 16)),
        # ternary tree: generation size is 3^n, so stop the grid earlier
        ("cancel_phase_p32", CascadeFamily("symmetric-phase", branches=3),
         1.5, (2, 4, 6, 8)),
    )
    for name, family, p, grid in cascade_legs:
        report = check_cancellation(
            family, p, n_grid=grid, trees=_n(200), seed=stream_key(seed, name),
        )
        checks.append((name, 0 if report.passed else 1))

    total = int(sum(v for _, v in checks))
    return SuiteReport(
        checks=tuple(checks),
        violations=total,
        elapsed_seconds=time.perf_counter() - t0,
    )
