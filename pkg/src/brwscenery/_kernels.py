"""Hot inner loops, each with a numba and a pure numpy/Python implementation.

The numba path is used when numba imports and ``BRWSCENERY_DISABLE_NUMBA`` is
unset (or ``0``).  Both paths return identical arrays in identical order; the
test-suite checks this and ``benchmarks/bench_kernels.py`` times them.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


EMPTY = -1
AMBIGUOUS = -2
_INT64_MAX = np.iinfo(np.int64).max


def _env_disabled() -> bool:
    return os.environ.get("BRWSCENERY_DISABLE_NUMBA", "0") not in ("", "0", "false", "False")


_use_numba = HAVE_NUMBA and not _env_disabled()


def use_numba() -> bool:
    return _use_numba


def set_backend(name: str) -> None:
    """Switch kernels at runtime: ``"numba"`` or ``"numpy"``."""
    global _use_numba
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def check_code_range(kappa: int, length: int) -> None:
    if length > 0 and max(kappa, 2) ** length > _INT64_MAX:
        raise OverflowError(f"colour strings of length {length} over {kappa} colours do not fit int64")


def neighbor_table(shape: tuple) -> np.ndarray:
    """``nbr[i, k]``: flat index of the k-th neighbour of flat point i, or -1.

    Neighbour k follows :func:`lattice.unit_vectors` order (+e1, -e1, +e2, ...).
    """
    d = len(shape)
    size = int(np.prod(shape))
    idx = np.arange(size).reshape(shape)
    nbr = np.full((size, 2 * d), -1, dtype=np.int64)
    for axis in range(d):
        for j, sgn in enumerate((1, -1)):
            col = 2 * axis + j
            shifted = np.full(shape, -1, dtype=np.int64)
            src = [slice(None)] * d
            dst = [slice(None)] * d
            if sgn == 1:
                src[axis] = slice(1, None)
                dst[axis] = slice(None, -1)
            else:
                src[axis] = slice(None, -1)
                dst[axis] = slice(1, None)
            shifted[tuple(dst)] = idx[tuple(src)]
            nbr[:, col] = shifted.ravel()
    return nbr


# --- path enumeration -------------------------------------------------------

@njit(cache=True)
def _paths_numba(colors, nbr, starts, steps, kappa):
    ndir = nbr.shape[1]
    maxn = len(starts) * ndir ** steps
    out_s = np.empty(maxn, np.int64)
    out_e = np.empty(maxn, np.int64)
    out_c = np.empty(maxn, np.int64)
    node = np.empty(steps + 1, np.int64)
    nxt = np.empty(steps + 1, np.int64)
    code = np.empty(steps + 1, np.int64)
    n = 0
    for s in starts:
        if steps == 0:
            out_s[n] = s
            out_e[n] = s
            out_c[n] = colors[s]
            n += 1
            continue
        depth = 0
        node[0] = s
        code[0] = colors[s]
        nxt[0] = 0
        while depth >= 0:
            if nxt[depth] < ndir:
                nb = nbr[node[depth], nxt[depth]]
                nxt[depth] += 1
                if nb < 0:
                    continue
                c = code[depth] * kappa + colors[nb]
                if depth + 1 == steps:
                    out_s[n] = s
                    out_e[n] = nb
                    out_c[n] = c
                    n += 1
                else:
                    depth += 1
                    node[depth] = nb
                    code[depth] = c
                    nxt[depth] = 0
            else:
                depth -= 1
    return out_s[:n], out_e[:n], out_c[:n]


def _paths_numpy(colors, nbr, starts, steps, kappa):
    start = np.asarray(starts, dtype=np.int64)
    cur = start.copy()
    code = colors[cur].astype(np.int64)
    ndir = nbr.shape[1]
    for _ in range(steps):
        nxt = nbr[cur].ravel()
        start = np.repeat(start, ndir)
        code = np.repeat(code, ndir)
        keep = nxt >= 0
        start, nxt, code = start[keep], nxt[keep], code[keep]
        code = code * kappa + colors[nxt]
        cur = nxt
    return start, cur, code


def enumerate_paths(colors, nbr, starts, steps: int, kappa: int):
    """Every nearest-neighbour path of ``steps`` steps from each start.

    Returns ``(start, end, code)`` arrays; ``code`` is the base-``kappa``
    value of the colour string read along the path (first colour most
    significant).  Order is by start, then lexicographic in the step directions.
    """
    check_code_range(kappa, steps + 1)
    colors = np.ascontiguousarray(colors, dtype=np.int64)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    if _use_numba:
        return _paths_numba(colors, nbr, starts, int(steps), int(kappa))
    return _paths_numpy(colors, nbr, starts, int(steps), int(kappa))


# --- phase-1 selection over (endpoint, bridge, startpoint) tables -----------

@njit(cache=True)
def _combine(a, b):
    if a == -1:
        return b
    if b == -1 or a == b:
        return a
    return -2


@njit(cache=True)
def _select_numba(npos, e_ptr, e_idx, br_ptr, br_q, br_st,
                  w3_at_ptr, w3_at_idx, st_ptr, st_idx, cand_codes):
    selected = np.zeros(len(cand_codes), np.bool_)
    U = np.full(npos, -1, np.int64)
    touched = np.empty(npos, np.int64)
    mark = np.zeros(npos, np.bool_)
    n_w1 = len(e_ptr) - 1
    for i in range(n_w1):
        nt = 0
        for k in range(e_ptr[i], e_ptr[i + 1]):
            p = e_idx[k]
            for j in range(br_ptr[p], br_ptr[p + 1]):
                q = br_q[j]
                U[q] = _combine(U[q], br_st[j])
                if not mark[q]:
                    mark[q] = True
                    touched[nt] = q
                    nt += 1
        for t in range(nt):
            q = touched[t]
            u = U[q]
            if u < 0:
                continue
            ui = np.searchsorted(cand_codes, u)
            if selected[ui]:
                continue
            for k in range(w3_at_ptr[q], w3_at_ptr[q + 1]):
                w3 = w3_at_idx[k]
                status = -1
                for m in range(st_ptr[w3], st_ptr[w3 + 1]):
                    status = _combine(status, U[st_idx[m]])
                    if status == -2:
                        break
                if status == u:
                    selected[ui] = True
                    break
        for t in range(nt):
            q = touched[t]
            U[q] = -1
            mark[q] = False
    return selected


def _select_python(npos, e_ptr, e_idx, br_ptr, br_q, br_st,
                   w3_at_ptr, w3_at_idx, st_ptr, st_idx, cand_codes):
    e_ptr, e_idx = e_ptr.tolist(), e_idx.tolist()
    br_ptr, br_q, br_st = br_ptr.tolist(), br_q.tolist(), br_st.tolist()
    w3_at_ptr, w3_at_idx = w3_at_ptr.tolist(), w3_at_idx.tolist()
    st_ptr, st_idx = st_ptr.tolist(), st_idx.tolist()
    index = {int(c): k for k, c in enumerate(cand_codes)}
    selected = np.zeros(len(cand_codes), dtype=bool)

    def combine(a, b):
        if a == -1:
            return b
        if b == -1 or a == b:
            return a
        return -2

    for i in range(len(e_ptr) - 1):
        U: dict = {}
        for k in range(e_ptr[i], e_ptr[i + 1]):
            p = e_idx[k]
            for j in range(br_ptr[p], br_ptr[p + 1]):
                q = br_q[j]
                U[q] = combine(U.get(q, -1), br_st[j])
        for q, u in U.items():
            if u < 0 or selected[index[u]]:
                continue
            for k in range(w3_at_ptr[q], w3_at_ptr[q + 1]):
                w3 = w3_at_idx[k]
                status = -1
                for m in range(st_ptr[w3], st_ptr[w3 + 1]):
                    status = combine(status, U.get(st_idx[m], -1))
                    if status == -2:
                        break
                if status == u:
                    selected[index[u]] = True
                    break
    return selected


def select_unique_middles(npos, e_ptr, e_idx, br_ptr, br_q, br_st,
                          w3_at_ptr, w3_at_idx, st_ptr, st_idx, cand_codes):
    """Decide, for every candidate middle code, whether some left/right context
    pins it down uniquely.

    ``e_*``: CSR, left-context id -> positions where it can end.
    ``br_*``: CSR, position p -> (q, status) bridges to positions q, with
    status the unique middle code or ``AMBIGUOUS``.
    ``w3_at_*``: CSR, position q -> right-context ids that can start at q.
    ``st_*``: CSR, right-context id -> all its start positions.
    ``cand_codes``: sorted unique middle codes that occur as a bridge status.
    """
    args = (int(npos), e_ptr, e_idx, br_ptr, br_q, br_st,
            w3_at_ptr, w3_at_idx, st_ptr, st_idx, np.ascontiguousarray(cand_codes, dtype=np.int64))
    if len(cand_codes) == 0:
        return np.zeros(0, dtype=bool)
    if _use_numba:
        return _select_numba(*args)
    return _select_python(*args)


# --- visit counting ---------------------------------------------------------

@njit(cache=True)
def _count_numba(idx, size):
    out = np.zeros(size, np.int64)
    for i in idx:
        if i >= 0:
            out[i] += 1
    return out


def count_visits(idx, size: int) -> np.ndarray:
    """Histogram of flat indices in ``[0, size)``; negative entries are ignored."""
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if _use_numba:
        return _count_numba(idx, int(size))
    return np.bincount(idx[idx >= 0], minlength=size).astype(np.int64)



# --- bridge statuses: which middles join p to q in a fixed number of steps --

@njit(cache=True)
def _grow(a, cap):
    out = np.empty(cap, a.dtype)
    out[:len(a)] = a
    return out


@njit(cache=True)
def _bridges_numba(colors, nbr, steps, kappa):
    npos = len(colors)
    ndir = nbr.shape[1]
    stat = np.full(npos, -1, np.int64)
    mark = np.zeros(npos, np.bool_)
    touched = np.empty(npos, np.int64)
    cap = 1024
    out_p = np.empty(cap, np.int64)
    out_q = np.empty(cap, np.int64)
    out_s = np.empty(cap, np.int64)
    n = 0
    node = np.empty(steps + 1, np.int64)
    nxt = np.empty(steps + 1, np.int64)
    code = np.empty(steps + 1, np.int64)
    for p in range(npos):
        nt = 0
        depth = 0
        node[0] = p
        code[0] = 0
        nxt[0] = 0
        while depth >= 0:
            if nxt[depth] < ndir:
                nb = nbr[node[depth], nxt[depth]]
                nxt[depth] += 1
                if nb < 0:
                    continue
                if depth + 1 == steps:
                    mid = code[depth]
                    cur = stat[nb]
                    if cur == -1:
                        stat[nb] = mid
                    elif cur != mid:
                        stat[nb] = -2
                    if not mark[nb]:
                        mark[nb] = True
                        touched[nt] = nb
                        nt += 1
                else:
                    depth += 1
                    node[depth] = nb
                    code[depth] = code[depth - 1] * kappa + colors[nb]
                    nxt[depth] = 0
            else:
                depth -= 1
        if n + nt > cap:
            while n + nt > cap:
                cap *= 2
            out_p = _grow(out_p, cap)
            out_q = _grow(out_q, cap)
            out_s = _grow(out_s, cap)
        qs = np.sort(touched[:nt])
        for q in qs:
            out_p[n] = p
            out_q[n] = q
            out_s[n] = stat[q]
            n += 1
            stat[q] = -1
            mark[q] = False
    return out_p[:n], out_q[:n], out_s[:n]


def _bridges_numpy(colors, nbr, steps, kappa, chunk=256):
    ps, qs, ss = [], [], []
    inner = kappa ** (steps - 1)
    for lo in range(0, len(colors), chunk):
        starts = np.arange(lo, min(lo + chunk, len(colors)))
        p, q, code = _paths_numpy(colors, nbr, starts, steps, kappa)
        mid = (code // kappa) % inner
        order = np.lexsort((mid, q, p))
        p, q, mid = p[order], q[order], mid[order]
        new_pair = np.ones(len(p), dtype=bool)
        new_pair[1:] = (p[1:] != p[:-1]) | (q[1:] != q[:-1])
        first = np.flatnonzero(new_pair)
        last = np.append(first[1:], len(p)) - 1
        status = np.where(mid[first] == mid[last], mid[first], AMBIGUOUS)
        ps.append(p[first])
        qs.append(q[first])
        ss.append(status)
    if not ps:
        e = np.zeros(0, dtype=np.int64)
        return e, e.copy(), e.copy()
    return np.concatenate(ps), np.concatenate(qs), np.concatenate(ss)


def bridge_statuses(colors, nbr, steps: int, kappa: int):
    """For every pair (p, q) joined by a path of ``steps`` steps, the colour
    string read strictly between them if it is the same for all such paths,
    else ``AMBIGUOUS``.

    Returns ``(p, q, status)`` sorted by p then q; the status is a base-kappa
    code of length ``steps - 1``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    check_code_range(kappa, steps + 1)
    colors = np.ascontiguousarray(colors, dtype=np.int64)
    if _use_numba:
        return _bridges_numba(colors, nbr, int(steps), int(kappa))
    return _bridges_numpy(colors, nbr, int(steps), int(kappa))


# --- end points of all paths reading given strings --------------------------

@njit(cache=True)
def _reach_numba(colors, nbr, words):
    nw, L = words.shape
    npos = len(colors)
    ptr = np.zeros(nw + 1, np.int64)
    cap = 1024
    out = np.empty(cap, np.int64)
    front = np.empty(npos, np.int64)
    nxt = np.empty(npos, np.int64)
    mark = np.zeros(npos, np.bool_)
    n = 0
    for k in range(nw):
        nf = 0
        for i in range(npos):
            if colors[i] == words[k, 0]:
                front[nf] = i
                nf += 1
        for j in range(1, L):
            nn = 0
            c = words[k, j]
            for t in range(nf):
                for dd in range(nbr.shape[1]):
                    nb = nbr[front[t], dd]
                    if nb >= 0 and not mark[nb] and colors[nb] == c:
                        mark[nb] = True
                        nxt[nn] = nb
                        nn += 1
            for t in range(nn):
                mark[nxt[t]] = False
                front[t] = nxt[t]
            nf = nn
            if nf == 0:
                break
        if n + nf > cap:
            while n + nf > cap:
                cap *= 2
            out = _grow(out, cap)
        srt = np.sort(front[:nf])
        for t in range(nf):
            out[n] = srt[t]
            n += 1
        ptr[k + 1] = n
    return ptr, out[:n]


def _reach_numpy(colors, nbr, words):
    npos = len(colors)
    pad = np.append(nbr, np.full((1, nbr.shape[1]), npos), axis=0)
    pad = np.where(pad < 0, npos, pad)
    ptr = [0]
    out = []
    for w in words:
        m = colors == w[0]
        for c in w[1:]:
            if not m.any():
                break
            mm = np.append(m, False)
            m = mm[pad[:npos]].any(axis=1) & (colors == c)
        hits = np.flatnonzero(m)
        out.append(hits)
        ptr.append(ptr[-1] + len(hits))
    idx = np.concatenate(out) if out else np.zeros(0, dtype=np.int64)
    return np.asarray(ptr, dtype=np.int64), idx.astype(np.int64)


def reach_sets(colors, nbr, words):
    """For each row of ``words`` (colour indices), the sorted positions where
    some path reading that row can end.  Returns CSR ``(ptr, idx)``."""
    colors = np.ascontiguousarray(colors, dtype=np.int64)
    words = np.ascontiguousarray(words, dtype=np.int64)
    if words.ndim != 2 or words.shape[1] < 1:
        raise ValueError("words must be a nonempty 2-d array")
    if _use_numba:
        return _reach_numba(colors, nbr, words)
    return _reach_numpy(colors, nbr, words)
