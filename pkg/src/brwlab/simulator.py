"""Depth-first branching-walk engine.

One bounded-memory pass per replica produces, for every depth d up to
``depth_n + extra_m``:

* the normalized complex sums ``Z_d(lambda) = m(lambda)^{-d} sum e^{-lambda S(u)}``
  for each requested parameter,
* the additive/derivative statistics at the boundary normalization
  ``V(u) = tstar*S(u) + d*log m(tstar)``: ``W_d = sum e^{-V}``,
  ``dW_d = sum V e^{-V}``, the minimal ``V`` and the top weight ``e^{-min V}``,
* the particle count,

plus the ``tip_k`` depth-``depth_n`` particles with the smallest ``V``,
each carrying the normalized martingale value of its own depth-``extra_m``
subtree.

Memory is O(depth * fanout + tip_k) regardless of population size: the walk
keeps an explicit stack of pending nodes and never materializes a
generation.  Randomness is a pure function of (master_seed, replica_index,
tree path), so any (law, config) pair maps to one reproducible tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from heapq import merge as _heap_merge
from itertools import islice
from os import environ
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernel_py
from .model import (
    ComplexParam,
    Gaussian,
    PointMass,
    ReproductionLaw,
    Uniform,
    _offspring_cdf,
    laplace_m,
)

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built; the pure twin still works
    _compiled = None

HARD_DEPTH_CAP = 26
TIP_CAP = 10_000
_MASK64 = (1 << 64) - 1


def _use_pure() -> bool:
    return _compiled is None or environ.get("BRWLAB_PURE_PYTHON", "") == "1"


def active_kernel() -> str:
    """Which traversal kernel run_replica currently selects."""
    return "pure-python" if _use_pure() else "compiled"


def replica_key(master_seed: int, replica_index: int) -> int:
    """Root hash key of one replica's tree."""
    mx = _kernel_py.mix64
    salt = ((replica_index + 1) * _kernel_py.GOLDEN) & _MASK64
    return mx(mx(master_seed & _MASK64) ^ salt)


def stream_key(master_seed: int, tag: str) -> int:
    """Hash key for an auxiliary named draw stream (reference samplers)."""
    k = _kernel_py.mix64(master_seed & _MASK64)
    for ch in tag.encode("utf-8"):
        k = _kernel_py.mix64((k ^ ((ch + 1) * _kernel_py.CHILD_SALT)) & _MASK64)
    return k


def derived_uniforms(master_seed: int, tag: str, count: int) -> np.ndarray:
    """`count` reproducible uniforms in (0, 1] from the named stream."""
    mx = _kernel_py.mix64
    k = stream_key(master_seed, tag)
    out = np.empty(count, dtype=float)
    for i in range(count):
        u = mx((k + (i + 1) * _kernel_py.GOLDEN) & _MASK64)
        out[i] = ((u >> 11) + 1) * _kernel_py.UNIT53
    return out


@dataclass(frozen=True)
class SimConfig:
    """Replica-level run parameters.

    ``tstar`` is the boundary normalization parameter (from
    ``regimes.solve_theta_star``); when None, V-statistics are skipped and
    tip recording is unavailable.
    """

    depth_n: int
    extra_m: int = 0
    params: tuple[ComplexParam, ...] = ()
    tip_k: int = 0
    master_seed: int = 0
    replica_index: int = 0
    tstar: float | None = None
    node_budget: float = float(2**27)

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        if self.depth_n < 0 or self.extra_m < 0:
            raise ValueError("depth_n and extra_m must be nonnegative")
        if self.depth_n + self.extra_m > HARD_DEPTH_CAP:
            raise ValueError(
                f"depth_n + extra_m = {self.depth_n + self.extra_m} exceeds "
                f"the hard depth cap {HARD_DEPTH_CAP}"
            )
        if not 0 <= self.tip_k <= TIP_CAP:
            raise ValueError(f"tip_k must lie in [0, {TIP_CAP}]")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.replica_index < 0:
            raise ValueError("replica_index must be nonnegative")
        if self.tip_k > 0 and self.tstar is None:
            raise ValueError("tip records need tstar (the V normalization)")
        if self.tip_k > 0 and not self.params:
            raise ValueError("tip records need at least one lambda in params")
        for p in self.params:
            if not isinstance(p, ComplexParam):
                raise TypeError("params must contain ComplexParam entries")

    @property
    def depth_total(self) -> int:
        return self.depth_n + self.extra_m


@dataclass(frozen=True)
class TipRecord:
    """One retained depth-n particle: centered position and its subtree
    martingale value at relative depth extra_m."""

    v_centered: float
    subtree_z: complex


@dataclass
class ReplicaResult:
    """Per-depth statistics of one simulated tree (see module docstring)."""

    cfg: SimConfig
    z: np.ndarray  # (depth_total+1, n_params) complex
    w: np.ndarray
    dw: np.ndarray
    min_v: np.ndarray
    sup_weight: np.ndarray
    population: np.ndarray
    tips_v: np.ndarray  # centered V, ascending
    tips_z: np.ndarray  # matching subtree martingale values
    extinct: bool

    @property
    def tips(self) -> tuple[TipRecord, ...]:
        return tuple(
            TipRecord(float(v), complex(z))
            for v, z in zip(self.tips_v, self.tips_z)
        )


_DISP_KIND = {PointMass: 0, Gaussian: 1, Uniform: 2}


def _disp_args(law: ReproductionLaw) -> tuple[int, float, float]:
    d = law.displacement
    if isinstance(d, PointMass):
        return 0, d.x, 0.0
    if isinstance(d, Gaussian):
        return 1, d.mean, d.sd
    return 2, d.a, d.b - d.a


def run_replica(law: ReproductionLaw, cfg: SimConfig) -> ReplicaResult:
    """Simulate one tree and collect all per-depth statistics."""
    depth = cfg.depth_total
    if law.mean_offspring**depth > cfg.node_budget:
        raise ValueError(
            f"expected node count E[N]^(n+m) = {law.mean_offspring**depth:.3g} "
            f"exceeds the node budget {cfg.node_budget:.3g}"
        )
    n_params = len(cfg.params)
    thetas = np.array([p.theta for p in cfg.params], dtype=float)
    etas = np.array([p.eta for p in cfg.params], dtype=float)
    want_v = cfg.tstar is not None
    if want_v:
        tst = float(cfg.tstar)
        log_m_star = math.log(complex(laplace_m(law, tst)).real)
        dlogm = np.arange(depth + 1, dtype=float) * log_m_star
    else:
        tst = 0.0
        dlogm = np.zeros(depth + 1, dtype=float)
    kind, d0, d1 = _disp_args(law)
    cdf = _offspring_cdf(law.offspring_probs)

    zre = np.zeros((depth + 1, n_params), dtype=float)
    zim = np.zeros((depth + 1, n_params), dtype=float)
    w = np.zeros(depth + 1, dtype=float)
    dw = np.zeros(depth + 1, dtype=float)
    minv = np.full(depth + 1, np.inf, dtype=float)
    pop = np.zeros(depth + 1, dtype=np.int64)
    k = cfg.tip_k
    tv = np.zeros(k, dtype=float)
    tord = np.zeros(k, dtype=np.int64)
    ts = np.zeros(k, dtype=float)
    sre = np.zeros(k, dtype=float)
    sim = np.zeros(k, dtype=float)
    hp = np.zeros(k, dtype=np.int64)

    impl = _kernel_py if _use_pure() else _compiled
    hn = impl.run_kernel(
        replica_key(cfg.master_seed, cfg.replica_index),
        depth,
        cfg.depth_n,
        cdf,
        kind,
        d0,
        d1,
        thetas,
        etas,
        1 if want_v else 0,
        tst,
        dlogm,
        k,
        zre,
        zim,
        w,
        dw,
        minv,
        pop,
        tv,
        tord,
        ts,
        sre,
        sim,
        hp,
    )

    # normalize the raw sums: Z_d = raw_d * m^{-d}, via exact cumulative
    # products (keeps integer cases like lambda=0 bit-exact)
    invm = np.array([1.0 / p.m_lambda for p in cfg.params], dtype=complex)
    rows = [np.ones(n_params, dtype=complex)] + [invm] * depth
    invm_pow = np.vstack(rows).cumprod(axis=0)
    z = (zre + 1j * zim) * invm_pow

    if want_v:
        supw = np.exp(-minv)
    else:
        w = np.full(depth + 1, np.nan)
        dw = np.full(depth + 1, np.nan)
        minv = np.full(depth + 1, np.nan)
        supw = np.full(depth + 1, np.nan)

    if hn > 0:
        order = np.lexsort((tord[:hn], tv[:hn]))
        center = 1.5 * math.log(cfg.depth_n) if cfg.depth_n >= 1 else 0.0
        tips_v = tv[order] - center
        tips_z = (sre[order] + 1j * sim[order]) * invm_pow[cfg.extra_m, 0]
    else:
        tips_v = np.zeros(0, dtype=float)
        tips_z = np.zeros(0, dtype=complex)

    return ReplicaResult(
        cfg=cfg,
        z=z,
        w=w,
        dw=dw,
        min_v=minv,
        sup_weight=supw,
        population=pop,
        tips_v=tips_v,
        tips_z=tips_z,
        extinct=bool(pop[cfg.depth_n] == 0),
    )


def iter_replicas(
    law: ReproductionLaw, cfg: SimConfig, count: int
) -> Iterator[ReplicaResult]:
    """Replicas cfg.replica_index, +1, ... (lazily; constant memory)."""
    for i in range(count):
        yield run_replica(law, replace(cfg, replica_index=cfg.replica_index + i))


def run_replicas(
    law: ReproductionLaw, cfg: SimConfig, count: int
) -> list[ReplicaResult]:
    return list(iter_replicas(law, cfg, count))


def residual(rep: ReplicaResult, lam: complex, n: int, a_n: complex) -> complex:
    """a_n * (Z_{n+extra_m}(lambda) - Z_n(lambda)), the scaled truncated
    fluctuation of the martingale beyond depth n."""
    cfg = rep.cfg
    if n < 0 or n + cfg.extra_m > cfg.depth_total:
        raise ValueError(f"need 0 <= n and n + extra_m <= {cfg.depth_total}")
    lam = complex(lam)
    for i, p in enumerate(cfg.params):
        if p.lam == lam:
            return complex(a_n) * (
                complex(rep.z[n + cfg.extra_m, i]) - complex(rep.z[n, i])
            )
    raise ValueError(f"lambda {lam} was not simulated (params: "
                     f"{[p.lam for p in cfg.params]})")


def sup_weight_trend(
    law: ReproductionLaw,
    tstar: float,
    n_grid: Sequence[int],
    replicas: int,
    master_seed: int = 0,
) -> dict[int, float]:
    """Medians over replicas of sqrt(n) * sup_{|u|=n} e^{-V(u)} per n."""
    ns = sorted({int(n) for n in n_grid})
    if not ns or ns[0] < 1:
        raise ValueError("n_grid entries must be >= 1")
    cfg = SimConfig(
        depth_n=max(ns),
        params=(),
        tip_k=0,
        master_seed=master_seed,
        tstar=float(tstar),
    )
    table = {n: np.empty(replicas) for n in ns}
    for i, rep in enumerate(iter_replicas(law, cfg, replicas)):
        for n in ns:
            table[n][i] = math.sqrt(n) * rep.sup_weight[n]
    return {n: float(np.median(v)) for n, v in table.items()}


def merge_tip_lists(
    a: Iterable[TipRecord], b: Iterable[TipRecord], k: int
) -> tuple[TipRecord, ...]:
    """k smallest tips of two sorted tip lists (stable: `a` wins ties)."""
    merged = _heap_merge(a, b, key=lambda t: t.v_centered)
    return tuple(islice(merged, k))
