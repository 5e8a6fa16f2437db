"""Compiled canonical-key pipeline (numba).

A line-by-line port of the reference labeler in ``canon`` plus graph
construction and table renaming, so one call maps a flat value array to its
canonical encoding.  The search tree is walked with an explicit stack
because numba handles recursion poorly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NO_JUMP = 1 << 30


@njit(cache=True)
def build_csr(values, n, q, r_base, bool_base, cell_base, u_vertex, arg_vertices, is_rel):
    """CSR adjacency of the cube graph; mirrors ``GraphShape.build``."""
    nc = values.shape[0]
    any_unassigned = False
    for c in range(nc):
        if values[c] < 0:
            any_unassigned = True
            break
    N = u_vertex + 1 if any_unassigned else u_vertex
    deg = np.zeros(N + 1, np.int64)
    for d in range(n):
        for p in range(1, q + 1):
            deg[d] += 1
            deg[n * p + d] += 1
        deg[d] += 1
        deg[r_base + d] += 1
    for c in range(nc):
        x = cell_base + c
        v = values[c]
        if v < 0:
            deg[x] += 1
            deg[u_vertex] += 1
            continue
        if is_rel[c]:
            t = bool_base + (0 if v else 1)
        else:
            t = r_base + v
        deg[x] += 1
        deg[t] += 1
        for k in range(arg_vertices.shape[1]):
            a = arg_vertices[c, k]
            if a < 0:
                break
            deg[x] += 1
            deg[a] += 1
    ptr = np.zeros(N + 1, np.int64)
    for v in range(N):
        ptr[v + 1] = ptr[v] + deg[v]
    fill = ptr[:N].copy()
    idx = np.empty(ptr[N], np.int64)
    for d in range(n):
        for p in range(1, q + 1):
            a = n * p + d
            idx[fill[d]] = a
            fill[d] += 1
            idx[fill[a]] = d
            fill[a] += 1
        r = r_base + d
        idx[fill[d]] = r
        fill[d] += 1
        idx[fill[r]] = d
        fill[r] += 1
    for c in range(nc):
        x = cell_base + c
        v = values[c]
        if v < 0:
            idx[fill[x]] = u_vertex
            fill[x] += 1
            idx[fill[u_vertex]] = x
            fill[u_vertex] += 1
            continue
        if is_rel[c]:
            t = bool_base + (0 if v else 1)
        else:
            t = r_base + v
        idx[fill[x]] = t
        fill[x] += 1
        idx[fill[t]] = x
        fill[t] += 1
        for k in range(arg_vertices.shape[1]):
            a = arg_vertices[c, k]
            if a < 0:
                break
            idx[fill[x]] = a
            fill[x] += 1
            idx[fill[a]] = x
            fill[a] += 1
    for v in range(N):
        # insertion sort: segments are short
        for i in range(ptr[v] + 1, ptr[v + 1]):
            x = idx[i]
            j = i - 1
            while j >= ptr[v] and idx[j] > x:
                idx[j + 1] = idx[j]
                j -= 1
            idx[j + 1] = x
    # vertices of elements that occur in no assigned cell
    used = np.zeros(n, np.bool_)
    for c in range(nc):
        v = values[c]
        if v < 0:
            continue
        if not is_rel[c]:
            used[v] = True
        for k in range(arg_vertices.shape[1]):
            a = arg_vertices[c, k]
            if a < 0:
                break
            used[a % n] = True
    inert = np.zeros(N, np.bool_)
    for d in range(n):
        if not used[d]:
            for p in range(q + 2):
                inert[n * p + d] = True
    return N, ptr, idx, any_unassigned, inert


@njit(cache=True)
def _insertion_sort(a, m):
    for i in range(1, m):
        x = a[i]
        j = i - 1
        while j >= 0 and a[j] > x:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = x


@njit(cache=True)
def _refine(lab, pos, cell, end, ptr, idx, N, queue, qstate, queued,
            counts, ins, tcount, head, tail, nxt, tcells, xs, tmp, frag_s, frag_len):
    qh, qlen = qstate[0], qstate[1]
    while qlen > 0:
        w = queue[qh]
        qh = (qh + 1) % N
        qlen -= 1
        queued[w] = False
        nins = 0
        for i in range(w, end[w]):
            u = lab[i]
            for k in range(ptr[u], ptr[u + 1]):
                x = idx[k]
                if counts[x] == 0:
                    ins[nins] = x
                    nins += 1
                counts[x] += 1
        ntc = 0
        for j in range(nins):
            x = ins[j]
            s = cell[x]
            if end[s] - s > 1:
                if tcount[s] == 0:
                    tcells[ntc] = s
                    ntc += 1
                    head[s] = x
                else:
                    nxt[tail[s]] = x
                tail[s] = x
                nxt[x] = -1
                tcount[s] += 1
        _insertion_sort(tcells, ntc)
        for t in range(ntc):
            s = tcells[t]
            e = end[s]
            k = tcount[s]
            tcount[s] = 0
            nx = 0
            x = head[s]
            while x >= 0:
                xs[nx] = x
                nx += 1
                x = nxt[x]
            if k == e - s:
                c0 = counts[xs[0]]
                uniform = True
                for j in range(nx):
                    if counts[xs[j]] != c0:
                        uniform = False
                        break
                if uniform:
                    continue
            # new order: untouched members (lab order), then touched by count, stable
            m = 0
            if k < e - s:
                for i in range(s, e):
                    v = lab[i]
                    if counts[v] == 0:
                        tmp[m] = v
                        m += 1
            # stable insertion sort of the touched members by count
            for j in range(nx):
                x = xs[j]
                c = counts[x]
                i = m + j - 1
                while i >= m and counts[tmp[i]] > c:
                    tmp[i + 1] = tmp[i]
                    i -= 1
                tmp[i + 1] = x
            nfr = 0
            p = s
            prev = -1
            fs = s
            for j in range(e - s):
                v = tmp[j]
                c = counts[v]
                if j == 0 or c != prev:
                    if j > 0:
                        end[fs] = p
                        frag_s[nfr] = fs
                        frag_len[nfr] = p - fs
                        nfr += 1
                    fs = p
                    prev = c
                lab[p] = v
                pos[v] = p
                cell[v] = fs
                p += 1
            end[fs] = p
            frag_s[nfr] = fs
            frag_len[nfr] = p - fs
            nfr += 1
            if queued[s]:
                for j in range(1, nfr):
                    queue[(qh + qlen) % N] = frag_s[j]
                    qlen += 1
                    queued[frag_s[j]] = True
            else:
                largest = 0
                for j in range(1, nfr):
                    if frag_len[j] > frag_len[largest]:
                        largest = j
                for j in range(nfr):
                    if j != largest:
                        queue[(qh + qlen) % N] = frag_s[j]
                        qlen += 1
                        queued[frag_s[j]] = True
        for j in range(nins):
            counts[ins[j]] = 0
    qstate[0] = qh
    qstate[1] = 0


@njit(cache=True)
def _same_adj(ptr, idx, a, b):
    if ptr[a + 1] - ptr[a] != ptr[b + 1] - ptr[b]:
        return False
    for k in range(ptr[a + 1] - ptr[a]):
        if idx[ptr[a] + k] != idx[ptr[b] + k]:
            return False
    return True


@njit(cache=True)
def _all_inert(lab, s, e, inert):
    for i in range(s, e):
        if not inert[lab[i]]:
            return False
    return True


@njit(cache=True)
def _settle(lab, pos, end, N):
    """Order the members of each remaining non-singleton cell by vertex id."""
    s = 0
    while s < N:
        e = end[s]
        if e - s > 1:
            lab[s:e] = np.sort(lab[s:e])
            for i in range(s, e):
                pos[lab[i]] = i
        s = e


@njit(cache=True)
def _target(lab, end, ptr, idx, N, inert):
    bs, be = -1, -1
    s = 0
    while s < N:
        e = end[s]
        size = e - s
        if size > 1 and (bs < 0 or size < be - bs) and not _all_inert(lab, s, e, inert):
            for i in range(s + 1, e):
                if not _same_adj(ptr, idx, lab[i], lab[s]):
                    bs, be = s, e
                    break
        s = e
    return bs, be


@njit(cache=True)
def _leaf_keys(pos, ptr, idx, N, out):
    m = 0
    for u in range(N):
        pu = pos[u]
        for k in range(ptr[u], ptr[u + 1]):
            px = pos[idx[k]]
            if px > pu:
                out[m] = pu * N + px
                m += 1
    out[:m] = np.sort(out[:m])


@njit(cache=True)
def _compare(a, b):
    for i in range(a.shape[0]):
        if a[i] != b[i]:
            return -1 if a[i] < b[i] else 1
    return 0


@njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def _orbit_roots(gens, ngens, path, depth, N, roots):
    parent = np.arange(N)
    for g in range(ngens):
        fixes = True
        for d in range(depth):
            if gens[g, path[d]] != path[d]:
                fixes = False
                break
        if not fixes:
            continue
        for x in range(N):
            y = gens[g, x]
            if x != y:
                rx = _find(parent, x)
                ry = _find(parent, y)
                if rx != ry:
                    parent[max(rx, ry)] = min(rx, ry)
    for x in range(N):
        roots[x] = _find(parent, x)


@njit(cache=True)
def _grow(a):
    b = np.zeros(2 * a.shape[0], a.dtype)
    b[:a.shape[0]] = a
    return b


@njit(cache=True)
def label(N, ptr, idx, init_lab, init_starts, inert, seeds):
    """Canonical order of the vertices; returns (order, edge_keys, leaves, generators).

    Rows of ``seeds`` are known automorphisms used for orbit pruning.
    """
    lab = init_lab.copy()
    pos = np.empty(N, np.int64)
    cell = np.empty(N, np.int64)
    end = np.zeros(N, np.int64)
    for i in range(N):
        pos[lab[i]] = i
    nst = init_starts.shape[0]
    for j in range(nst):
        s = init_starts[j]
        e = init_starts[j + 1] if j + 1 < nst else N
        end[s] = e
        for i in range(s, e):
            cell[lab[i]] = s
    queue = np.empty(N, np.int64)
    qstate = np.zeros(2, np.int64)
    queued = np.zeros(N, np.bool_)
    counts = np.zeros(N, np.int64)
    ins = np.empty(N, np.int64)
    tcount = np.zeros(N, np.int64)
    head = np.empty(N, np.int64)
    tail = np.empty(N, np.int64)
    nxt = np.empty(N, np.int64)
    tcells = np.empty(N, np.int64)
    xs = np.empty(N, np.int64)
    tmp = np.empty(N, np.int64)
    frag_s = np.empty(N, np.int64)
    frag_len = np.empty(N, np.int64)

    for j in range(nst):
        queue[j] = init_starts[j]
        queued[init_starts[j]] = True
    qstate[1] = nst
    _refine(lab, pos, cell, end, ptr, idx, N, queue, qstate, queued,
            counts, ins, tcount, head, tail, nxt, tcells, xs, tmp, frag_s, frag_len)

    E = ptr[N] // 2
    keys = np.empty(E, np.int64)
    first_keys = np.empty(E, np.int64)
    best_keys = np.empty(E, np.int64)
    first_order = np.empty(N, np.int64)
    best_order = np.empty(N, np.int64)
    first_path = np.empty(N, np.int64)
    best_path = np.empty(N, np.int64)
    first_depth = 0
    best_depth = 0
    have_best = False
    max_gens = 4 * N + 16 + seeds.shape[0]
    gens = np.empty((max_gens, N), np.int64)
    ngens = seeds.shape[0]
    gens[:ngens] = seeds
    leaves = 0

    # per-depth state; rows 0..3 of ``frames`` hold the partition snapshot
    # (lab, pos, cell, end), then the target members, explored members and
    # orbit roots
    depth_cap = 8
    frames = np.empty((depth_cap, 7, N), np.int64)
    nmem = np.zeros(depth_cap, np.int64)
    midx = np.zeros(depth_cap, np.int64)
    nexp = np.zeros(depth_cap, np.int64)
    seen_gens = np.zeros(depth_cap, np.int64)
    path = np.empty(N + 1, np.int64)

    depth = 0
    enter = True
    ret = NO_JUMP
    while True:
        if enter:
            enter = False
            bs, be = _target(lab, end, ptr, idx, N, inert)
            if bs < 0:
                # leaf
                leaves += 1
                _settle(lab, pos, end, N)
                _leaf_keys(pos, ptr, idx, N, keys)
                ret = NO_JUMP
                matched = False
                for which in range(2):
                    if not have_best:
                        break
                    if which == 0:
                        rk, ro, rp, rd = first_keys, first_order, first_path, first_depth
                    else:
                        rk, ro, rp, rd = best_keys, best_order, best_path, best_depth
                    if _compare(rk, keys) == 0:
                        identity = True
                        if ngens < max_gens:
                            for i in range(N):
                                gens[ngens, ro[i]] = lab[i]
                                if ro[i] != lab[i]:
                                    identity = False
                            if not identity:
                                ngens += 1
                        common = 0
                        for i in range(min(rd, depth)):
                            if rp[i] != path[i]:
                                break
                            common += 1
                        ret = common
                        matched = True
                        break
                if not matched:
                    if not have_best:
                        have_best = True
                        first_keys[:] = keys
                        first_order[:] = lab
                        first_path[:depth] = path[:depth]
                        first_depth = depth
                        best_keys[:] = keys
                        best_order[:] = lab
                        best_path[:depth] = path[:depth]
                        best_depth = depth
                    elif _compare(keys, best_keys) > 0:
                        best_keys[:] = keys
                        best_order[:] = lab
                        best_path[:depth] = path[:depth]
                        best_depth = depth
                depth -= 1
                if depth < 0:
                    break
                # fall through to the return handling of the parent level
            else:
                if depth >= depth_cap:
                    grown = np.empty((2 * depth_cap, 7, N), np.int64)
                    grown[:depth_cap] = frames
                    frames = grown
                    nmem = _grow(nmem)
                    midx = _grow(midx)
                    nexp = _grow(nexp)
                    seen_gens = _grow(seen_gens)
                    depth_cap *= 2
                m = be - bs
                frames[depth, 4, :m] = np.sort(lab[bs:be])
                nmem[depth] = m
                midx[depth] = 0
                nexp[depth] = 0
                seen_gens[depth] = -1
                frames[depth, 0] = lab
                frames[depth, 1] = pos
                frames[depth, 2] = cell
                frames[depth, 3] = end
                ret = -1  # marks "no child returned yet"
        if ret != -1:
            # a child of this level returned
            lab[:] = frames[depth, 0]
            pos[:] = frames[depth, 1]
            cell[:] = frames[depth, 2]
            end[:] = frames[depth, 3]
            if ret < depth:
                depth -= 1
                if depth < 0:
                    break
                continue
        # pick the next member of this level's target cell
        chosen = -1
        while midx[depth] < nmem[depth]:
            v = frames[depth, 4, midx[depth]]
            midx[depth] += 1
            if nexp[depth] > 0 and ngens > 0:
                if seen_gens[depth] != ngens:
                    _orbit_roots(gens, ngens, path, depth, N, frames[depth, 6])
                    seen_gens[depth] = ngens
                rv = frames[depth, 6, v]
                skip = False
                for j in range(nexp[depth]):
                    if frames[depth, 6, frames[depth, 5, j]] == rv:
                        skip = True
                        break
                if skip:
                    continue
            chosen = v
            break
        if chosen < 0:
            ret = NO_JUMP
            depth -= 1
            if depth < 0:
                break
            continue
        frames[depth, 5, nexp[depth]] = chosen
        nexp[depth] += 1
        # individualize
        s = cell[chosen]
        e = end[s]
        p = pos[chosen]
        u = lab[s]
        lab[s] = chosen
        lab[p] = u
        pos[chosen] = s
        pos[u] = p
        end[s] = s + 1
        for i in range(s + 1, e):
            cell[lab[i]] = s + 1
        end[s + 1] = e
        queue[0] = s
        queued[s] = True
        qstate[0] = 0
        qstate[1] = 1
        _refine(lab, pos, cell, end, ptr, idx, N, queue, qstate, queued,
                counts, ins, tcount, head, tail, nxt, tcells, xs, tmp, frag_s, frag_len)
        path[depth] = chosen
        depth += 1
        enter = True
        ret = -1
    return best_order, best_keys, leaves, ngens - seeds.shape[0]


@njit(cache=True)
def swap_generators(values, n, N, cell_base, q, is_rel, cell_args, offsets, cell_symbol, free):
    """Vertex permutations of the element swaps that are automorphisms of the cube.

    Swaps are tested between free elements; each class of mutually swappable
    elements contributes the swaps of consecutive members, which generate
    its full symmetric group.
    """
    nc = values.shape[0]
    nf = free.shape[0]
    cls = np.arange(n)
    out = np.empty((max(nf - 1, 0), N), np.int64)
    m = 0
    for i in range(nf):
        d = free[i]
        if cls[d] != d:
            continue
        prev = d
        for j in range(i + 1, nf):
            e = free[j]
            if cls[e] != e:
                continue
            ok = True
            for c in range(nc):
                t = 0
                for k in range(cell_args.shape[1]):
                    a = cell_args[c, k]
                    if a < 0:
                        break
                    if a == d:
                        a = e
                    elif a == e:
                        a = d
                    t = t * n + a
                t += offsets[cell_symbol[c]]
                v = values[c]
                if v >= 0 and not is_rel[c]:
                    if v == d:
                        v = e
                    elif v == e:
                        v = d
                if values[t] != v:
                    ok = False
                    break
            if not ok:
                continue
            cls[e] = d
            g = out[m]
            for x in range(N):
                g[x] = x
            for p in range(q + 2):
                g[n * p + prev] = n * p + e
                g[n * p + e] = n * p + prev
            for c in range(nc):
                t = 0
                for k in range(cell_args.shape[1]):
                    a = cell_args[c, k]
                    if a < 0:
                        break
                    if a == prev:
                        a = e
                    elif a == e:
                        a = prev
                    t = t * n + a
                g[cell_base + c] = cell_base + t + offsets[cell_symbol[c]]
            m += 1
            prev = e
    return out[:m]


@njit(cache=True)
def canonical_table(values, n, q, r_base, bool_base, cell_base, u_vertex, arg_vertices,
                    is_rel, base_lab, base_starts, free, offsets, cell_symbol, cell_args):
    """Canonical encoding body (one byte per cell) and the domain permutation."""
    N, ptr, idx, any_unassigned, inert = build_csr(values, n, q, r_base, bool_base, cell_base,
                                            u_vertex, arg_vertices, is_rel)
    if any_unassigned:
        init_lab = np.empty(N, np.int64)
        init_lab[:N - 1] = base_lab
        init_lab[N - 1] = u_vertex
        init_starts = np.empty(base_starts.shape[0] + 1, np.int64)
        init_starts[:-1] = base_starts
        init_starts[-1] = N - 1
    else:
        init_lab = base_lab
        init_starts = base_starts
    seeds = swap_generators(values, n, N, cell_base, q, is_rel, cell_args, offsets,
                            cell_symbol, free)
    order, _, _, _ = label(N, ptr, idx, init_lab, init_starts, inert, seeds)
    position = np.empty(N, np.int64)
    for i in range(N):
        position[order[i]] = i
    nf = free.shape[0]
    rank = np.empty(nf, np.int64)
    for j in range(nf):
        rank[j] = position[free[j]]
    ranked = free[np.argsort(rank)]
    perm = np.arange(n)
    for j in range(nf):
        perm[ranked[j]] = free[j]
    nc = values.shape[0]
    out = np.empty(nc, np.uint8)
    for c in range(nc):
        t = 0
        for k in range(cell_args.shape[1]):
            a = cell_args[c, k]
            if a < 0:
                break
            t = t * n + perm[a]
        t += offsets[cell_symbol[c]]
        v = values[c]
        if v < 0:
            out[t] = 255
        elif is_rel[c]:
            out[t] = 254 if v else 253
        else:
            out[t] = perm[v]
    return out, perm
