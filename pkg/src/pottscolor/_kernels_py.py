"""Pure-Python versions of the hot loops in ``_kernels.pyx``.

Both implementations consume the same pre-drawn random numbers, so for a
given seed they produce identical results.  This module is used when the
compiled extension is unavailable or ``POTTSCOLOR_PURE_PYTHON`` is set.
"""
import math

import numpy as np


def accept_pairs(colors, pairs, edges_out, n_have, n_target, reject_run, reject_cap):
    """Scan candidate pairs in order, appending valid new edges to ``edges_out``.

    A pair is rejected when its endpoints share a color (this covers i == j)
    or when the edge is already present.  Returns
    ``(n_have, n_consumed, reject_run)``; scanning stops early once
    ``n_target`` edges exist or ``reject_run`` reaches ``reject_cap``.
    """
    n = len(colors)
    seen = set()
    for k in range(n_have):
        seen.add(int(edges_out[k, 0]) * n + int(edges_out[k, 1]))
    col = colors.tolist()
    pl = pairs.tolist()
    consumed = 0
    for i, j in pl:
        if n_have >= n_target or reject_run >= reject_cap:
            break
        consumed += 1
        if col[i] == col[j]:
            reject_run += 1
            continue
        if i > j:
            i, j = j, i
        key = i * n + j
        if key in seen:
            reject_run += 1
            continue
        seen.add(key)
        edges_out[n_have, 0] = i
        edges_out[n_have, 1] = j
        n_have += 1
        reject_run = 0
    return n_have, consumed, reject_run


def sa_sweep(offsets, neighbors, colors, nodes, shifts, uniforms, q, beta, energy):
    """One Metropolis sweep over pre-drawn proposals, updating ``colors`` in place.

    Proposal k recolors ``nodes[k]`` to ``(old + shifts[k]) % q``.  Returns
    ``(energy, n_accepted, n_done)``; the sweep ends early if the energy
    reaches zero.
    """
    off = offsets.tolist()
    nb = neighbors.tolist()
    col = colors.tolist()
    accepted = 0
    done = 0
    for node, shift, u in zip(nodes.tolist(), shifts.tolist(), uniforms.tolist()):
        done += 1
        old = col[node]
        new = (old + shift) % q
        delta = 0
        for k in range(off[node], off[node + 1]):
            c = col[nb[k]]
            if c == new:
                delta += 1
            elif c == old:
                delta -= 1
        if delta <= 0 or u < math.exp(-beta * delta):
            col[node] = new
            energy += delta
            accepted += 1
            if energy == 0:
                break
    colors[:] = np.asarray(col, dtype=colors.dtype)
    return energy, accepted, done
