"""Compiled search loop (numba), equivalent to ``search._Run`` over ``search.Engine``.

Ground clauses are flattened to postfix term code.  A term op ``>= 0`` pushes
that element; a negative op ``-(1 + 4 * offset + arity)`` pops ``arity``
arguments and pushes the value of the addressed cell.  Watches are per-cell
linked lists over a preallocated pool, with a dense (cell, clause) bitmap to
keep them duplicate-free; every change goes through the undo log.  Canonical
keys are kept in an open-addressing table of fixed-width rows.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._kernels import canonical_table

# undo kinds
_ASSIGN, _MDN, _CAND, _WATCH = 0, 1, 2, 3
_SAT, _OPEN, _CONFLICT = 0, 1, 2

# scalar slots
_ULEN, _PLEN, _MDNV, _QLEN, _CONFL = 0, 1, 2, 3, 4

# stop reasons
STOP_NONE, STOP_MAX_MODELS, STOP_NODE_CAP, STOP_STORE_CAP = 0, 1, 2, 3


def compile_clauses(clauses) -> tuple:
    """Postfix code for a list of ground clauses (see module docstring)."""
    code: list[int] = []
    term_start: list[int] = []
    lit_eq: list[int] = []
    lit_pos: list[int] = []
    lit_lhs: list[int] = []
    lit_rhs: list[int] = []
    cl_start = [0]

    def emit(t) -> None:
        if type(t) is int:
            code.append(t)
            return
        off, args = t
        for a in args:
            emit(a)
        code.append(-(1 + 4 * off + len(args)))

    def term(t) -> int:
        term_start.append(len(code))
        emit(t)
        return len(term_start) - 1

    for clause in clauses:
        for is_eq, positive, lhs, rhs in clause:
            lit_eq.append(1 if is_eq else 0)
            lit_pos.append(1 if positive else 0)
            lit_lhs.append(term(lhs))
            lit_rhs.append(term(rhs) if is_eq else -1)
        cl_start.append(len(lit_eq))
    term_start.append(len(code))
    as_array = lambda xs: np.array(xs, dtype=np.int64)  # noqa: E731
    max_ops = max((term_start[i + 1] - term_start[i] for i in range(len(term_start) - 1)),
                  default=1)
    return (as_array(code), as_array(term_start), as_array(lit_eq), as_array(lit_pos),
            as_array(lit_lhs), as_array(lit_rhs), as_array(cl_start), max_ops)


@njit(cache=True)
def _eval(tid, code, term_start, values, n, nc, stack):
    s, e = term_start[tid], term_start[tid + 1]
    sp = 0
    for i in range(s, e):
        op = code[i]
        if op >= 0:
            stack[sp] = op
            sp += 1
            continue
        x = -op - 1
        ar = x & 3
        idx = 0
        for k in range(sp - ar, sp):
            idx = idx * n + stack[k]
        sp -= ar
        cell = (x >> 2) + idx
        v = values[cell]
        if v < 0:
            return -1 - cell if i == e - 1 else -1 - nc - cell
        stack[sp] = v
        sp += 1
    return stack[0]


@njit(cache=True)
def _set(cell, v, values, cand, is_rel, max_arg, undo, trail_q, scal):
    cur = values[cell]
    if cur >= 0:
        return cur == v
    old = cand[cell]
    if not (old >> v) & 1:
        return False
    values[cell] = v
    cand[cell] = 1 << v
    u = scal[_ULEN]
    undo[u, 0] = _ASSIGN
    undo[u, 1] = cell
    undo[u, 2] = old
    u += 1
    m = max_arg[cell]
    if not is_rel[cell] and v > m:
        m = v
    if m > scal[_MDNV]:
        undo[u, 0] = _MDN
        undo[u, 1] = scal[_MDNV]
        undo[u, 2] = 0
        u += 1
        scal[_MDNV] = m
    scal[_ULEN] = u
    trail_q[scal[_QLEN]] = cell
    scal[_QLEN] += 1
    return True


@njit(cache=True)
def _exclude(cell, v, values, cand, is_rel, max_arg, undo, trail_q, scal):
    cur = values[cell]
    if cur >= 0:
        return cur != v
    old = cand[cell]
    if not (old >> v) & 1:
        return True
    new = old & ~(1 << v)
    if new == 0:
        return False
    u = scal[_ULEN]
    undo[u, 0] = _CAND
    undo[u, 1] = cell
    undo[u, 2] = old
    scal[_ULEN] = u + 1
    cand[cell] = new
    if new & (new - 1) == 0:
        b = 0
        while not (new >> b) & 1:
            b += 1
        return _set(cell, b, values, cand, is_rel, max_arg, undo, trail_q, scal)
    return True


@njit(cache=True)
def _check(cid, P, S, scal):
    code, term_start, lit_eq, lit_pos, lit_lhs, lit_rhs, cl_start, n, nc, is_rel, \
        max_arg, propagation = P
    values, cand, watched, node_cid, node_next, head, undo, queue, stack = S
    deep = -nc
    unknown = 0
    unit_cell = -1
    unit_v = 0
    unit_pos = True
    for li in range(cl_start[cid], cl_start[cid + 1]):
        a = _eval(lit_lhs[li], code, term_start, values, n, nc, stack)
        positive = lit_pos[li] == 1
        if lit_eq[li] == 1:
            b = _eval(lit_rhs[li], code, term_start, values, n, nc, stack)
            if a >= 0 and b >= 0:
                if (a == b) == positive:
                    return _SAT
                continue
            blk = a if a < 0 else b
            if a >= 0 and b >= deep:
                unit_cell, unit_v, unit_pos = -1 - b, a, positive
            elif b >= 0 and a >= deep:
                unit_cell, unit_v, unit_pos = -1 - a, b, positive
            else:
                unit_cell = -1
        else:
            if a >= 0:
                if (a == 1) == positive:
                    return _SAT
                continue
            blk = a
            if a >= deep:
                unit_cell, unit_v, unit_pos = -1 - a, 1 if positive else 0, True
            else:
                unit_cell = -1
        cell = -1 - blk if blk >= deep else -1 - nc - blk
        if not watched[cell, cid]:
            watched[cell, cid] = True
            p = scal[_PLEN]
            node_cid[p] = cid
            node_next[p] = head[cell]
            head[cell] = p
            scal[_PLEN] = p + 1
            u = scal[_ULEN]
            undo[u, 0] = _WATCH
            undo[u, 1] = cell
            undo[u, 2] = 0
            scal[_ULEN] = u + 1
        unknown += 1
        if unknown == 2:
            return _OPEN
    if unknown == 0:
        return _CONFLICT
    if unit_cell >= 0 and propagation:
        if unit_pos:
            ok = _set(unit_cell, unit_v, values, cand, is_rel, max_arg, undo, queue, scal)
        else:
            ok = _exclude(unit_cell, unit_v, values, cand, is_rel, max_arg, undo, queue, scal)
        if not ok:
            return _CONFLICT
    return _OPEN


@njit(cache=True)
def _propagate(P, S, scal, qi):
    values, cand, watched, node_cid, node_next, head, undo, queue, stack = S
    i = qi
    while i < scal[_QLEN]:
        cell = queue[i]
        i += 1
        p = head[cell]
        while p >= 0:
            # checks only ever watch unassigned cells, so this list is stable
            nxt = node_next[p]
            if _check(node_cid[p], P, S, scal) == _CONFLICT:
                scal[_CONFL] += 1
                scal[_QLEN] = 0
                return False
            p = nxt
    scal[_QLEN] = 0
    return True


@njit(cache=True)
def _undo_to(mark, S, scal):
    values, cand, watched, node_cid, node_next, head, undo, queue, stack = S
    u = scal[_ULEN]
    while u > mark:
        u -= 1
        kind = undo[u, 0]
        a = undo[u, 1]
        if kind == _ASSIGN:
            values[a] = -1
            cand[a] = undo[u, 2]
        elif kind == _CAND:
            cand[a] = undo[u, 2]
        elif kind == _WATCH:
            p = head[a]
            watched[a, node_cid[p]] = False
            head[a] = node_next[p]
            scal[_PLEN] -= 1
        else:
            scal[_MDNV] = a
    scal[_ULEN] = u
    scal[_QLEN] = 0


@njit(cache=True)
def _hash(row, seed):
    h = np.uint64(seed)
    for b in row:
        h ^= np.uint64(b)
        h *= np.uint64(1099511628211)
    h ^= h >> np.uint64(29)
    h *= np.uint64(0x3F58476D1CE4E5B9)
    h ^= h >> np.uint64(32)
    return h


def run(ground_arrays, n, nc, is_rel, max_arg, order, initial_mdn, lnh, propagation,
        use_canon, fingerprint, store_cap, max_nodes, max_models, shape_arrays, key_len):
    """Python entry point: builds state arrays and calls the compiled loop."""
    code, term_start, lit_eq, lit_pos, lit_lhs, lit_rhs, cl_start, max_ops = ground_arrays
    num_clauses = len(cl_start) - 1
    P = (code, term_start, lit_eq, lit_pos, lit_lhs, lit_rhs, cl_start, n, nc,
         is_rel, max_arg, propagation)
    pool = max(nc * num_clauses, 1)
    values = np.full(nc, -1, np.int64)
    cand = np.where(is_rel, 3, (1 << n) - 1).astype(np.int64)
    S = (values, cand, np.zeros((nc, max(num_clauses, 1)), np.bool_),
         np.empty(pool, np.int64), np.empty(pool, np.int64), np.full(nc, -1, np.int64),
         np.empty((pool + nc * (n + 3), 3), np.int64), np.empty(nc + 1, np.int64),
         np.empty(max_ops + 1, np.int64))
    scal = np.zeros(8, np.int64)
    scal[_MDNV] = initial_mdn
    return _search(P, S, scal, num_clauses, order, lnh, use_canon, fingerprint, store_cap,
                   max_nodes, max_models, shape_arrays, key_len)


@njit(cache=True)
def _search(P, S, scal, num_clauses, order, lnh, use_canon, fingerprint, store_cap,
            max_nodes, max_models, shape_arrays, key_len):
    """``key_len`` is the byte size charged per stored key."""
    values, cand, watched, node_cid, node_next, head, undo, queue, stack = S
    n = P[7]
    nc = P[8]
    is_rel = P[9]
    max_arg = P[10]
    stats = np.zeros(8, np.int64)  # models, nodes, pruned, conflicts, keys, key_bytes, stop
    models = np.empty((16, nc), np.int64)
    nmodels = 0

    # key table
    width = 16 if fingerprint else nc
    kcap = 1024
    krows = np.empty((kcap, width), np.uint8)
    nkeys = 0
    slots = np.full(2 * kcap, -1, np.int64)
    frag = np.empty(16, np.uint8)

    # root
    consistent = True
    for cid in range(num_clauses):
        if _check(cid, P, S, scal) == _CONFLICT:
            consistent = False
            break
    if consistent:
        consistent = _propagate(P, S, scal, 0)
    else:
        scal[_QLEN] = 0
    if not consistent:
        stats[3] = scal[_CONFL]
        return models[:0], stats

    fpos = np.empty(nc + 1, np.int64)
    fcell = np.empty(nc + 1, np.int64)
    fmask = np.empty(nc + 1, np.int64)
    ftop = np.empty(nc + 1, np.int64)
    fv = np.empty(nc + 1, np.int64)
    fmark = np.empty(nc + 1, np.int64)

    # first frame
    p0 = 0
    while p0 < nc and values[order[p0]] >= 0:
        p0 += 1
    if p0 == nc:
        models[0] = values
        stats[0] = 1
        stats[3] = scal[_CONFL]
        return models[:1], stats
    depth = 0
    fpos[0] = p0
    c0 = order[p0]
    fcell[0] = c0
    fmask[0] = cand[c0]
    top = 2 if is_rel[c0] else n
    if lnh and not is_rel[c0]:
        top = min(top, max(scal[_MDNV], max_arg[c0]) + 2)
    ftop[0] = top
    fv[0] = 0

    stop = STOP_NONE
    while depth >= 0 and stop == STOP_NONE:
        cell = fcell[depth]
        v = fv[depth]
        while v < ftop[depth] and not (fmask[depth] >> v) & 1:
            v += 1
        if v >= ftop[depth]:
            depth -= 1
            if depth >= 0:
                _undo_to(fmark[depth], S, scal)
            continue
        fv[depth] = v + 1
        fmark[depth] = scal[_ULEN]
        ok = _set(cell, v, values, cand, is_rel, max_arg, undo, queue, scal)
        if ok:
            ok = _propagate(P, S, scal, 0)
        else:
            scal[_QLEN] = 0
        if ok:
            admitted = True
            if use_canon:
                body, _ = canonical_table(values, *shape_arrays)
                if fingerprint:
                    h1 = _hash(body, 0x4BF29CE484222325)
                    h2 = _hash(body, 0x1E3779B97F4A7C15)
                    for k in range(8):
                        frag[k] = (h1 >> np.uint64(8 * k)) & np.uint64(255)
                        frag[8 + k] = (h2 >> np.uint64(8 * k)) & np.uint64(255)
                    row = frag
                else:
                    row = body
                h = _hash(row, 1469598103934665603)
                mask = slots.shape[0] - 1
                s = np.int64(h & np.uint64(mask))
                found = False
                while slots[s] >= 0:
                    r = slots[s]
                    same = True
                    for k in range(width):
                        if krows[r, k] != row[k]:
                            same = False
                            break
                    if same:
                        found = True
                        break
                    s = (s + 1) & mask
                if found:
                    admitted = False
                    stats[2] += 1
                else:
                    if store_cap >= 0 and (nkeys + 1) * key_len > store_cap:
                        stop = STOP_STORE_CAP
                        break
                    if nkeys == kcap:
                        grown = np.empty((2 * kcap, width), np.uint8)
                        grown[:kcap] = krows
                        krows = grown
                        kcap *= 2
                        slots = np.full(2 * kcap, -1, np.int64)
                        mask = slots.shape[0] - 1
                        for r in range(nkeys):
                            hs = np.int64(_hash(krows[r], 1469598103934665603) & np.uint64(mask))
                            while slots[hs] >= 0:
                                hs = (hs + 1) & mask
                            slots[hs] = r
                        s = np.int64(h & np.uint64(mask))
                        while slots[s] >= 0:
                            s = (s + 1) & mask
                    krows[nkeys] = row
                    slots[s] = nkeys
                    nkeys += 1
            if admitted:
                stats[1] += 1
                if max_nodes >= 0 and stats[1] > max_nodes:
                    stop = STOP_NODE_CAP
                    break
                p = fpos[depth] + 1
                while p < nc and values[order[p]] >= 0:
                    p += 1
                if p == nc:
                    if nmodels == models.shape[0]:
                        grown_m = np.empty((2 * nmodels, nc), np.int64)
                        grown_m[:nmodels] = models
                        models = grown_m
                    models[nmodels] = values
                    nmodels += 1
                    if max_models >= 0 and nmodels >= max_models:
                        stop = STOP_MAX_MODELS
                        break
                else:
                    depth += 1
                    fpos[depth] = p
                    c = order[p]
                    fcell[depth] = c
                    fmask[depth] = cand[c]
                    top = 2 if is_rel[c] else n
                    if lnh and not is_rel[c]:
                        top = min(top, max(scal[_MDNV], max_arg[c]) + 2)
                    ftop[depth] = top
                    fv[depth] = 0
                    continue
        _undo_to(fmark[depth], S, scal)

    stats[0] = nmodels
    stats[3] = scal[_CONFL]
    stats[4] = nkeys
    stats[5] = nkeys * key_len
    stats[6] = stop
    return models[:nmodels], stats
