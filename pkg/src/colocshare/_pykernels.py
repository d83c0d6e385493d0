"""Pure numpy fallback for the compiled kernels, with identical outputs."""

import numpy as np


def disk_edges(qx, qy, px, py, r, width, height, torus, nx, ny):
    """Same contract as ``_kernels.disk_edges``; loops over points, vectorised over queries."""
    qx = np.asarray(qx, dtype=np.float64)
    qy = np.asarray(qy, dtype=np.float64)
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    cw, ch = width / nx, height / ny

    qcx = np.clip(np.floor(qx / cw).astype(np.int64), 0, nx - 1)
    qcy = np.clip(np.floor(qy / ch).astype(np.int64), 0, ny - 1)
    qcell = qcy * nx + qcx
    order = np.argsort(qcell, kind="stable")
    bounds = np.searchsorted(qcell[order], np.arange(nx * ny + 1))

    pcx = np.clip(np.floor(px / cw).astype(np.int64), 0, nx - 1)
    pcy = np.clip(np.floor(py / ch).astype(np.int64), 0, ny - 1)

    offs_x = range(nx) if torus and nx < 3 else range(-1, 2)
    offs_y = range(ny) if torus and ny < 3 else range(-1, 2)

    out_q, out_p, out_d = [], [], []
    r2 = r * r
    for j in range(px.shape[0]):
        cells = []
        for oy in offs_y:
            gy = pcy[j] + oy if not (torus and ny < 3) else oy
            if torus:
                gy %= ny
            elif gy < 0 or gy >= ny:
                continue
            for ox in offs_x:
                gx = pcx[j] + ox if not (torus and nx < 3) else ox
                if torus:
                    gx %= nx
                elif gx < 0 or gx >= nx:
                    continue
                cells.append(gy * nx + gx)
        if not cells:
            continue
        cand = np.concatenate([order[bounds[c]:bounds[c + 1]] for c in cells])
        dx = np.abs(qx[cand] - px[j])
        dy = np.abs(qy[cand] - py[j])
        if torus:
            dx = np.minimum(dx, width - dx)
            dy = np.minimum(dy, height - dy)
        d2 = dx * dx + dy * dy
        hit = d2 <= r2
        out_q.append(cand[hit])
        out_p.append(np.full(int(hit.sum()), j, dtype=np.int64))
        out_d.append(np.sqrt(d2[hit]))
    if not out_q:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))
    return (np.concatenate(out_q).astype(np.int64), np.concatenate(out_p),
            np.concatenate(out_d))
