# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=False
"""Compiled per-tile, per-layer cost kernel (mirror of ``_kernels_py``)."""

from libc.stdlib cimport malloc, free

ctypedef long long i64

BACKEND = "cython"


cdef inline i64 _map(i64 c, i64 extent, i64 ds, i64 dim) nogil:
    cdef i64 v
    if c >= extent:
        return dim
    v = c // ds
    return v if v < dim else dim


cdef i64 _covered(i64 o0, i64 o1, i64 s, i64 p, i64 k, i64 a, i64 b) nogil:
    cdef i64 lo, hi, r, total
    if o1 <= o0 or b <= a:
        return 0
    if k >= s:
        lo = o0 * s - p
        hi = (o1 - 1) * s - p + k
        if lo < a:
            lo = a
        if hi > b:
            hi = b
        return hi - lo if hi > lo else 0
    total = 0
    for r in range(o0, o1):
        lo = r * s - p
        hi = lo + k
        if lo < a:
            lo = a
        if hi > b:
            hi = b
        if hi > lo:
            total += hi - lo
    return total


cdef inline i64 _paper_halo(i64 n_in, i64 k, i64 s, i64 p) nogil:
    cdef i64 n_out = 0, v
    if n_in + 2 * p >= k:
        n_out = (n_in - k + 2 * p) // s + 1
    v = s * (n_out - 1) - n_in + s
    return v if v > 0 else 0


def tile_layer_costs(layers, in_dims, out_dims, in_ds, tiles,
                     i64 image_h, i64 image_w, bint exact, i64 bpe):
    cdef Py_ssize_t L = len(layers), N = len(tiles)
    cdef Py_ssize_t li, ti
    cdef i64 *lp = <i64 *> malloc(L * 12 * sizeof(i64))
    cdef i64 *tp = <i64 *> malloc(N * 4 * sizeof(i64))
    cdef i64 *flops = <i64 *> malloc(N * L * sizeof(i64))
    cdef i64 *comm = <i64 *> malloc(N * L * sizeof(i64))
    cdef i64 *act = <i64 *> malloc(N * L * sizeof(i64))
    cdef char *collapsed = <char *> malloc(N * sizeof(char))
    cdef i64 is_pool, c_in, c_out, kh, kw, s, p, hin, win, hout, wout, dsi, dso
    cdef i64 tx, ty, tw, th
    cdef i64 iy0, iy1, ix0, ix1, oy0, oy1, ox0, ox1, oh, ow, window, vol
    if not (lp and tp and flops and comm and act and collapsed):
        free(lp); free(tp); free(flops); free(comm); free(act); free(collapsed)
        raise MemoryError()
    try:
        for li in range(L):
            row = layers[li]
            for j in range(7):
                lp[li * 12 + j] = row[j]
            lp[li * 12 + 7] = in_dims[li][0]
            lp[li * 12 + 8] = in_dims[li][1]
            lp[li * 12 + 9] = out_dims[li][0]
            lp[li * 12 + 10] = out_dims[li][1]
            lp[li * 12 + 11] = in_ds[li]
        for ti in range(N):
            t = tiles[ti]
            for j in range(4):
                tp[ti * 4 + j] = t[j]

        with nogil:
            for ti in range(N):
                tx = tp[ti * 4]
                ty = tp[ti * 4 + 1]
                tw = tp[ti * 4 + 2]
                th = tp[ti * 4 + 3]
                collapsed[ti] = 0
                for li in range(L):
                    is_pool = lp[li * 12]
                    c_in = lp[li * 12 + 1]
                    c_out = lp[li * 12 + 2]
                    kh = lp[li * 12 + 3]
                    kw = lp[li * 12 + 4]
                    s = lp[li * 12 + 5]
                    p = lp[li * 12 + 6]
                    hin = lp[li * 12 + 7]
                    win = lp[li * 12 + 8]
                    hout = lp[li * 12 + 9]
                    wout = lp[li * 12 + 10]
                    dsi = lp[li * 12 + 11]
                    dso = dsi * s

                    iy0 = _map(ty, image_h, dsi, hin)
                    iy1 = _map(ty + th, image_h, dsi, hin)
                    ix0 = _map(tx, image_w, dsi, win)
                    ix1 = _map(tx + tw, image_w, dsi, win)
                    oy0 = _map(ty, image_h, dso, hout)
                    oy1 = _map(ty + th, image_h, dso, hout)
                    ox0 = _map(tx, image_w, dso, wout)
                    ox1 = _map(tx + tw, image_w, dso, wout)
                    oh = oy1 - oy0
                    ow = ox1 - ox0
                    if oh <= 0 or ow <= 0:
                        collapsed[ti] = 1

                    window = kh * kw * oh * ow
                    if is_pool:
                        flops[ti * L + li] = c_in * window
                    else:
                        flops[ti * L + li] = c_in * c_out * window
                    act[ti * L + li] = c_out * oh * ow * bpe

                    if exact:
                        if oh <= 0 or ow <= 0:
                            vol = 0
                        else:
                            vol = (_covered(oy0, oy1, s, p, kh, 0, hin)
                                   * _covered(ox0, ox1, s, p, kw, 0, win)
                                   - _covered(oy0, oy1, s, p, kh, iy0, iy1)
                                   * _covered(ox0, ox1, s, p, kw, ix0, ix1))
                    else:
                        vol = (_paper_halo(iy1 - iy0, kh, s, p) * (ix1 - ix0)
                               + _paper_halo(ix1 - ix0, kw, s, p) * (iy1 - iy0))
                    comm[ti * L + li] = vol * c_in * bpe

        flops_out = [[flops[ti * L + li] for li in range(L)] for ti in range(N)]
        comm_out = [[comm[ti * L + li] for li in range(L)] for ti in range(N)]
        act_out = [[act[ti * L + li] for li in range(L)] for ti in range(N)]
        coll_out = [bool(collapsed[ti]) for ti in range(N)]
    finally:
        free(lp); free(tp); free(flops); free(comm); free(act); free(collapsed)
    return flops_out, comm_out, act_out, coll_out
