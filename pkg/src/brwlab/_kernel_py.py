"""Pure-Python traversal kernel.

This is the reference implementation of the tree walk; the compiled twin in
``_kernel.pyx`` mirrors it statement for statement.  Both perform the same
floating-point operations in the same order on the same splitmix-derived
draws, so their outputs are bit-identical — the compiled module is purely a
speed upgrade.

All randomness is stateless: every node owns a 64-bit key, every draw is a
hash of (key, draw index).  Traversal order therefore cannot change a single
sampled value, only the (fixed, preorder) accumulation order.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
CHILD_SALT = 0xD1B54A32D192ED03
UNIT53 = 2.0**-53
TWO_PI = 6.283185307179586
MAX_DEPTH = 26
MAX_FANOUT = 64

KIND_POINT = 0
KIND_GAUSS = 1
KIND_UNIFORM = 2


def mix64(z: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit words."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _greater(tv, tord, a: int, b: int) -> bool:
    # max-heap order on (value, arrival ordinal): later arrivals lose ties
    if tv[a] != tv[b]:
        return tv[a] > tv[b]
    return tord[a] > tord[b]


def _sift_up(tv, tord, hp, pos: int) -> None:
    while pos > 0:
        parent = (pos - 1) >> 1
        if _greater(tv, tord, hp[pos], hp[parent]):
            hp[pos], hp[parent] = hp[parent], hp[pos]
            pos = parent
        else:
            break


def _sift_down(tv, tord, hp, hn: int, pos: int) -> None:
    while True:
        child = 2 * pos + 1
        if child >= hn:
            break
        right = child + 1
        if right < hn and _greater(tv, tord, hp[right], hp[child]):
            child = right
        if _greater(tv, tord, hp[child], hp[pos]):
            hp[pos], hp[child] = hp[child], hp[pos]
            pos = child
        else:
            break


def run_kernel(
    root_key: int,
    depth_total: int,
    depth_n: int,
    cdf,
    disp_kind: int,
    d0: float,
    d1: float,
    thetas,
    etas,
    want_v: int,
    tstar: float,
    dlogm,
    tip_k: int,
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
) -> int:
    """One replica: preorder walk accumulating per-depth statistics.

    Outputs are written into the caller-allocated arrays:
      zre/zim[d, p]  raw sums of e^{-lambda_p S(u)} over |u| = d
      w/dw/minv[d]   sum e^{-V}, sum V e^{-V}, min V (when want_v)
      pop[d]         particle count per depth
      tv/tord/ts/sre/sim  tip slots (value, arrival ordinal, tip position,
                     raw subtree sums); hp is the heap of slot ids
    Returns the number of tip slots in use.
    """
    n_params = len(thetas)
    # explicit stack of pending nodes: (depth, position, key)
    cap = MAX_FANOUT * MAX_DEPTH + 2
    stack_d = [0] * cap
    stack_s = [0.0] * cap
    stack_k = [0] * cap
    xbuf = [0.0] * MAX_FANOUT
    hn = 0
    open_slot = -1
    tip_seen = 0
    sp = 1
    stack_d[0] = 0
    stack_s[0] = 0.0
    stack_k[0] = root_key
    while sp > 0:
        sp -= 1
        d = stack_d[sp]
        s = stack_s[sp]
        key = stack_k[sp]

        # ---- visit ----
        pop[d] += 1
        for p in range(n_params):
            ex = math.exp(-thetas[p] * s)
            et = etas[p]
            if et == 0.0:
                zre[d, p] += ex
            else:
                ang = et * s
                zre[d, p] += ex * math.cos(ang)
                zim[d, p] -= ex * math.sin(ang)
        if want_v:
            v = tstar * s + dlogm[d]
            ew = math.exp(-v)
            w[d] += ew
            dw[d] += v * ew
            if v < minv[d]:
                minv[d] = v
            if tip_k > 0 and d == depth_n:
                open_slot = -1
                if hn < tip_k:
                    slot = hn
                    tv[slot] = v
                    tord[slot] = tip_seen
                    hp[hn] = slot
                    hn += 1
                    _sift_up(tv, tord, hp, hn - 1)
                    open_slot = slot
                else:
                    top = hp[0]
                    if v < tv[top]:
                        tv[top] = v
                        tord[top] = tip_seen
                        _sift_down(tv, tord, hp, hn, 0)
                        open_slot = top
                tip_seen += 1
                if open_slot >= 0:
                    ts[open_slot] = s
                    sre[open_slot] = 0.0
                    sim[open_slot] = 0.0
        if open_slot >= 0 and d == depth_total:
            ds = s - ts[open_slot]
            ex0 = math.exp(-thetas[0] * ds)
            ang0 = etas[0] * ds
            sre[open_slot] += ex0 * math.cos(ang0)
            sim[open_slot] -= ex0 * math.sin(ang0)

        # ---- expand ----
        if d < depth_total:
            u = ((mix64((key + GOLDEN) & MASK64) >> 11) + 1) * UNIT53
            count = 0
            while u > cdf[count]:
                count += 1
            if count > 0:
                if disp_kind == KIND_GAUSS:
                    q = 0
                    while 2 * q < count:
                        mul_a = 2 + 2 * q  # draw 1+2q
                        ua = ((mix64((key + mul_a * GOLDEN) & MASK64) >> 11) + 1) * UNIT53
                        ub = ((mix64((key + (mul_a + 1) * GOLDEN) & MASK64) >> 11) + 1) * UNIT53
                        r = math.sqrt(-2.0 * math.log(ua))
                        ang = TWO_PI * ub
                        xbuf[2 * q] = d0 + d1 * (r * math.cos(ang))
                        if 2 * q + 1 < count:
                            xbuf[2 * q + 1] = d0 + d1 * (r * math.sin(ang))
                        q += 1
                elif disp_kind == KIND_UNIFORM:
                    for j in range(count):
                        uj = ((mix64((key + (2 + j) * GOLDEN) & MASK64) >> 11) + 1) * UNIT53
                        xbuf[j] = d0 + d1 * uj
                else:
                    for j in range(count):
                        xbuf[j] = d0
                j = count - 1
                while j >= 0:
                    stack_d[sp] = d + 1
                    stack_s[sp] = s + xbuf[j]
                    stack_k[sp] = mix64((key ^ (((j + 1) * CHILD_SALT) & MASK64)) & MASK64)
                    sp += 1
                    j -= 1
    return hn
