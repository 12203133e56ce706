"""Pure-Python per-tile, per-layer cost kernel.

Must stay line-for-line equivalent to ``_kernels.pyx``; both return exact
integers so the two backends agree bit for bit.
"""

BACKEND = "python"


def _map(c, extent, ds, dim):
    if c >= extent:
        return dim
    v = c // ds
    return v if v < dim else dim


def _covered(o0, o1, s, p, k, a, b):
    # input positions in [a, b) read by outputs o0..o1-1
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


def _paper_halo(n_in, k, s, p):
    n_out = (n_in - k + 2 * p) // s + 1 if n_in + 2 * p >= k else 0
    v = s * (n_out - 1) - n_in + s
    return v if v > 0 else 0


def tile_layer_costs(layers, in_dims, out_dims, in_ds, tiles,
                     image_h, image_w, exact, bpe):
    """Return ``(flops, comm_bytes, act_bytes, collapsed)`` for every tile.

    layers: ``(is_pool, c_in, c_out, k_h, k_w, s, p)`` per layer
    in_dims / out_dims: whole-image ``(h, w)`` per layer
    in_ds: cumulative stride ahead of each layer
    tiles: ``(x, y, w, h)`` in input-image pixels
    """
    flops_all, comm_all, act_all, collapsed_all = [], [], [], []
    for tx, ty, tw, th in tiles:
        flops, comm, act = [], [], []
        collapsed = False
        for li in range(len(layers)):
            is_pool, c_in, c_out, kh, kw, s, p = layers[li]
            hin, win = in_dims[li]
            hout, wout = out_dims[li]
            dsi = in_ds[li]
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
                collapsed = True

            window = kh * kw * oh * ow
            flops.append(c_in * window if is_pool else c_in * c_out * window)
            act.append(c_out * oh * ow * bpe)

            if exact:
                if oh <= 0 or ow <= 0:
                    vol = 0
                else:
                    need_r = _covered(oy0, oy1, s, p, kh, 0, hin)
                    need_c = _covered(ox0, ox1, s, p, kw, 0, win)
                    own_r = _covered(oy0, oy1, s, p, kh, iy0, iy1)
                    own_c = _covered(ox0, ox1, s, p, kw, ix0, ix1)
                    vol = need_r * need_c - own_r * own_c
            else:
                h_in = iy1 - iy0
                w_in = ix1 - ix0
                vol = (_paper_halo(h_in, kh, s, p) * w_in
                       + _paper_halo(w_in, kw, s, p) * h_in)
            comm.append(vol * c_in * bpe)
        flops_all.append(flops)
        comm_all.append(comm)
        act_all.append(act)
        collapsed_all.append(collapsed)
    return flops_all, comm_all, act_all, collapsed_all
