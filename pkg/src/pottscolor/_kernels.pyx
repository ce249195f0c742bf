# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot loops: rejection sampling of edges and Metropolis sweeps.

Semantics match ``_kernels_py`` exactly; see that module for documentation.
"""
from libc.math cimport exp
from libcpp.unordered_set cimport unordered_set

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64


def accept_pairs(const i64[::1] colors, const i64[:, ::1] pairs, i64[:, ::1] edges_out,
                 i64 n_have, i64 n_target, i64 reject_run, i64 reject_cap):
    cdef i64 n = colors.shape[0]
    cdef unordered_set[i64] seen
    cdef i64 k, i, j, t, key
    cdef i64 consumed = 0
    seen.reserve(<size_t>(n_target * 2 + 16))
    for k in range(n_have):
        seen.insert(edges_out[k, 0] * n + edges_out[k, 1])
    for k in range(pairs.shape[0]):
        if n_have >= n_target or reject_run >= reject_cap:
            break
        consumed += 1
        i = pairs[k, 0]
        j = pairs[k, 1]
        if colors[i] == colors[j]:
            reject_run += 1
            continue
        if i > j:
            t = i
            i = j
            j = t
        key = i * n + j
        if seen.count(key):
            reject_run += 1
            continue
        seen.insert(key)
        edges_out[n_have, 0] = i
        edges_out[n_have, 1] = j
        n_have += 1
        reject_run = 0
    return n_have, consumed, reject_run


def sa_sweep(const i64[::1] offsets, const i64[::1] neighbors, i64[::1] colors,
             const i64[::1] nodes, const i64[::1] shifts, const double[::1] uniforms,
             i64 q, double beta, i64 energy):
    cdef i64 k, e, node, old, new, c, delta
    cdef i64 accepted = 0
    cdef i64 done = 0
    for k in range(nodes.shape[0]):
        done += 1
        node = nodes[k]
        old = colors[node]
        new = (old + shifts[k]) % q
        delta = 0
        for e in range(offsets[node], offsets[node + 1]):
            c = colors[neighbors[e]]
            if c == new:
                delta += 1
            elif c == old:
                delta -= 1
        if delta <= 0 or uniforms[k] < exp(-beta * delta):
            colors[node] = new
            energy += delta
            accepted += 1
            if energy == 0:
                break
    return energy, accepted, done
