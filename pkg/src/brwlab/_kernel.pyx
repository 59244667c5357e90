# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled traversal kernel.

Statement-for-statement mirror of ``_kernel_py.run_kernel``; see that module
for the layout of draws and outputs.  Both twins perform identical
floating-point operations in identical order (the extension is built with
FP contraction off), so results are bit-identical.
"""

from libc.math cimport cos, exp, log, sin, sqrt
from libc.stdint cimport int64_t, uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15
cdef uint64_t CHILD_SALT = 0xD1B54A32D192ED03
cdef double UNIT53 = 2.0 ** -53
cdef double TWO_PI = 6.283185307179586

cdef enum:
    KIND_POINT = 0
    KIND_GAUSS = 1
    KIND_UNIFORM = 2
    MAX_DEPTH = 26
    MAX_FANOUT = 64
    STACK_CAP = 1666  # MAX_FANOUT * MAX_DEPTH + 2


cdef inline uint64_t mix64(uint64_t z) noexcept:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline bint _greater(double[::1] tv, int64_t[::1] tord,
                          Py_ssize_t a, Py_ssize_t b) noexcept:
    # max-heap order on (value, arrival ordinal): later arrivals lose ties
    if tv[a] != tv[b]:
        return tv[a] > tv[b]
    return tord[a] > tord[b]


cdef inline void _sift_up(double[::1] tv, int64_t[::1] tord,
                          int64_t[::1] hp, Py_ssize_t pos) noexcept:
    cdef Py_ssize_t parent
    cdef int64_t tmp
    while pos > 0:
        parent = (pos - 1) >> 1
        if _greater(tv, tord, hp[pos], hp[parent]):
            tmp = hp[pos]
            hp[pos] = hp[parent]
            hp[parent] = tmp
            pos = parent
        else:
            break


cdef inline void _sift_down(double[::1] tv, int64_t[::1] tord,
                            int64_t[::1] hp, Py_ssize_t hn,
                            Py_ssize_t pos) noexcept:
    cdef Py_ssize_t child, right
    cdef int64_t tmp
    while True:
        child = 2 * pos + 1
        if child >= hn:
            break
        right = child + 1
        if right < hn and _greater(tv, tord, hp[right], hp[child]):
            child = right
        if _greater(tv, tord, hp[child], hp[pos]):
            tmp = hp[pos]
            hp[pos] = hp[child]
            hp[child] = tmp
            pos = child
        else:
            break


def run_kernel(
    uint64_t root_key,
    int depth_total,
    int depth_n,
    double[::1] cdf,
    int disp_kind,
    double d0,
    double d1,
    double[::1] thetas,
    double[::1] etas,
    int want_v,
    double tstar,
    double[::1] dlogm,
    int tip_k,
    double[:, ::1] zre,
    double[:, ::1] zim,
    double[::1] w,
    double[::1] dw,
    double[::1] minv,
    int64_t[::1] pop,
    double[::1] tv,
    int64_t[::1] tord,
    double[::1] ts,
    double[::1] sre,
    double[::1] sim,
    int64_t[::1] hp,
):
    """One replica: preorder walk accumulating per-depth statistics."""
    cdef Py_ssize_t n_params = thetas.shape[0]
    cdef int stack_d[STACK_CAP]
    cdef double stack_s[STACK_CAP]
    cdef uint64_t stack_k[STACK_CAP]
    cdef double xbuf[MAX_FANOUT]
    cdef Py_ssize_t hn = 0
    cdef Py_ssize_t open_slot = -1
    cdef int64_t tip_seen = 0
    cdef Py_ssize_t sp = 1
    cdef int d, count, j, q, mul_a
    cdef Py_ssize_t p, slot, top
    cdef double s, ex, et, ang, v, ew, ds, ex0, ang0, u, ua, ub, r, uj
    cdef uint64_t key
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
            ex = exp(-thetas[p] * s)
            et = etas[p]
            if et == 0.0:
                zre[d, p] += ex
            else:
                ang = et * s
                zre[d, p] += ex * cos(ang)
                zim[d, p] -= ex * sin(ang)
        if want_v:
            v = tstar * s + dlogm[d]
            ew = exp(-v)
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
            ex0 = exp(-thetas[0] * ds)
            ang0 = etas[0] * ds
            sre[open_slot] += ex0 * cos(ang0)
            sim[open_slot] -= ex0 * sin(ang0)

        # ---- expand ----
        if d < depth_total:
            u = ((mix64(key + GOLDEN) >> 11) + 1) * UNIT53
            count = 0
            while u > cdf[count]:
                count += 1
            if count > 0:
                if disp_kind == KIND_GAUSS:
                    q = 0
                    while 2 * q < count:
                        mul_a = 2 + 2 * q  # draw 1+2q
                        ua = ((mix64(key + <uint64_t>mul_a * GOLDEN) >> 11) + 1) * UNIT53
                        ub = ((mix64(key + <uint64_t>(mul_a + 1) * GOLDEN) >> 11) + 1) * UNIT53
                        r = sqrt(-2.0 * log(ua))
                        ang = TWO_PI * ub
                        xbuf[2 * q] = d0 + d1 * (r * cos(ang))
                        if 2 * q + 1 < count:
                            xbuf[2 * q + 1] = d0 + d1 * (r * sin(ang))
                        q += 1
                elif disp_kind == KIND_UNIFORM:
                    for j in range(count):
                        uj = ((mix64(key + <uint64_t>(2 + j) * GOLDEN) >> 11) + 1) * UNIT53
                        xbuf[j] = d0 + d1 * uj
                else:
                    for j in range(count):
                        xbuf[j] = d0
                j = count - 1
                while j >= 0:
                    stack_d[sp] = d + 1
                    stack_s[sp] = s + xbuf[j]
                    stack_k[sp] = mix64(key ^ (<uint64_t>(j + 1) * CHILD_SALT))
                    sp += 1
                    j -= 1
    return hn
