# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the pure-Python graph kernels.

Same functions, same inputs, byte-identical outputs; the pure module is
the reference and ``tests/test_backend_parity.py`` holds the two to it.
Fixed stack buffers rely on the 32-vertex core limit.  Refinement keys
are packed into 64-bit integers whose ordering reproduces the reference
tuple ordering exactly; graphs with a vertex degree above 4 (impossible
for valence-valid molecules) are delegated to the reference code so the
packing never has to widen.
"""

from libc.string cimport memcmp

MAX_ATOM_CODE = 3
VALENCES = (4, 3, 2, 1)  # C, N, O, F
MAX_VERTICES = 32

OK = 0
ERR_EMPTY = 1
ERR_BAD_TYPE = 2
ERR_BAD_ADJ = 3
ERR_VALENCE = 4
ERR_DISCONNECTED = 5
ERR_TOO_MANY = 6

OP_ADD = 0
OP_REMOVE = 1
OP_BOND = 2
OP_SUB = 3

cdef int[4] _VAL
_VAL[0] = 4
_VAL[1] = 3
_VAL[2] = 2
_VAL[3] = 1

cdef enum:
    NMAX = 32


cdef inline const unsigned char* _buf(bytes b):
    cdef const char* p = b
    return <const unsigned char*> p


def used_valences(bytes types, bytes adj):
    """Per-vertex sum of incident bond orders, as a list of ints."""
    cdef const unsigned char* a = _buf(adj)
    cdef Py_ssize_t n = len(types)
    cdef Py_ssize_t v, u
    cdef int s
    out = []
    for v in range(n):
        s = 0
        for u in range(n):
            s += a[v * n + u]
        out.append(s)
    return out


cdef bint _bfs(const unsigned char* a, int n, int skip_v, int skip_a,
               int skip_b, int start, int want):
    # reachability with one optional excluded vertex and one excluded edge
    cdef bint seen[NMAX]
    cdef int stack[NMAX]
    cdef int top = 0, count = 1, v, u, row
    for v in range(n):
        seen[v] = 0
    if skip_v >= 0:
        seen[skip_v] = 1
    seen[start] = 1
    stack[top] = start
    top += 1
    while top:
        top -= 1
        v = stack[top]
        row = v * n
        for u in range(n):
            if not a[row + u] or seen[u]:
                continue
            if (v == skip_a and u == skip_b) or (v == skip_b and u == skip_a):
                continue
            seen[u] = 1
            count += 1
            stack[top] = u
            top += 1
    return count == want


def is_connected(bytes adj, int n):
    if n == 0:
        return False
    return bool(_bfs(_buf(adj), n, -1, -1, -1, 0, n))


def connected_without_vertex(bytes adj, int n, int skip):
    """True if the graph minus vertex ``skip`` is connected and nonempty."""
    if n <= 1:
        return False
    return bool(_bfs(_buf(adj), n, skip, -1, -1, 1 if skip == 0 else 0, n - 1))


def connected_without_edge(bytes adj, int n, int a, int b):
    """True if the graph stays connected after deleting edge (a, b)."""
    return bool(_bfs(_buf(adj), n, -1, a, b, 0, n))


def validity_error(bytes types, bytes adj, int max_atoms):
    """0 when valid, else the first failing check's error code."""
    cdef Py_ssize_t n = len(types)
    cdef const unsigned char* t
    cdef const unsigned char* a
    cdef Py_ssize_t v, u
    cdef int o, s
    if n == 0:
        return ERR_EMPTY
    if n > max_atoms:
        return ERR_TOO_MANY
    if n > NMAX:
        return ERR_TOO_MANY
    if len(adj) != n * n:
        return ERR_BAD_ADJ
    t = _buf(types)
    a = _buf(adj)
    for v in range(n):
        if t[v] > 3:
            return ERR_BAD_TYPE
    for v in range(n):
        if a[v * n + v] != 0:
            return ERR_BAD_ADJ
        for u in range(v + 1, n):
            o = a[v * n + u]
            if o != a[u * n + v] or o > 3:
                return ERR_BAD_ADJ
    for v in range(n):
        s = 0
        for u in range(n):
            s += a[v * n + u]
        if s > _VAL[t[v]]:
            return ERR_VALENCE
    if not _bfs(a, <int> n, -1, -1, -1, 0, <int> n):
        return ERR_DISCONNECTED
    return OK


# ---------------------------------------------------------------------------
# Canonical labeling.  Packed-key layout (all orderings match the
# reference tuples):
#   refinement key: color * 128^4 + pair1 * 128^3 + ... + pair4,
#     pair = order * 32 + neighbor_color in 32..127, zero padding at the
#     end compares like a shorter tuple because every real pair is > 0.
#   initial key: type * 2^11 + degree * 2^8 + o1 * 2^6 + ... + o4,
#     orders 1..3 ascending, zero padded.
# ---------------------------------------------------------------------------

cdef void _sort_ll(long long* a, int n):
    cdef int i, j
    cdef long long x
    for i in range(1, n):
        x = a[i]
        j = i - 1
        while j >= 0 and a[j] > x:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = x

cdef int _dense_rank_ll(long long* keys, int* out, int n):
    # out[v] = index of keys[v] among sorted distinct keys; returns count
    cdef long long uniq[NMAX]
    cdef int m = 0, i, j, lo, hi, mid
    for i in range(n):
        uniq[i] = keys[i]
    _sort_ll(uniq, n)
    for i in range(n):
        if i == 0 or uniq[i] != uniq[m - 1]:
            uniq[m] = uniq[i]
            m += 1
    for i in range(n):
        lo = 0
        hi = m - 1
        while lo < hi:
            mid = (lo + hi) >> 1
            if uniq[mid] < keys[i]:
                lo = mid + 1
            else:
                hi = mid
        out[i] = lo
    return m

cdef int _count_distinct(int* colors, int n):
    cdef bint seen[2 * NMAX]
    cdef int i, m = 0
    for i in range(2 * NMAX):
        seen[i] = 0
    for i in range(n):
        if not seen[colors[i]]:
            seen[colors[i]] = 1
            m += 1
    return m

cdef void _refine_c(int* colors, const unsigned char* t,
                    const unsigned char* a, int n):
    cdef long long keys[NMAX]
    cdef long long pk[4]
    cdef long long key
    cdef int ncolors = _count_distinct(colors, n)
    cdef int v, u, k, cnt, count, row, o
    while True:
        for v in range(n):
            row = v * n
            cnt = 0
            for u in range(n):
                o = a[row + u]
                if o:
                    pk[cnt] = o * 32 + colors[u]
                    cnt += 1
            _sort_ll(pk, cnt)
            key = colors[v]
            for k in range(4):
                key = key * 128 + (pk[k] if k < cnt else 0)
            keys[v] = key
        count = _dense_rank_ll(keys, colors, n)
        if count == ncolors:
            return
        ncolors = count

cdef void _search_c(int* colors, const unsigned char* t,
                    const unsigned char* a, int n, unsigned char* best_enc,
                    unsigned char* best_perm, bint* best_set):
    cdef int counts[NMAX]
    cdef int branched[NMAX]
    cdef long long keys[NMAX]
    cdef int perm[NMAX]
    cdef unsigned char enc[NMAX + NMAX * NMAX]
    cdef int c, v, u, i, j, target, enc_len
    for c in range(n):
        counts[c] = 0
    for v in range(n):
        counts[colors[v]] += 1
    target = -1
    for c in range(n):
        if counts[c] > 1:
            target = c
            break
    if target < 0:  # discrete: colors are a permutation
        for v in range(n):
            perm[colors[v]] = v
        for i in range(n):
            enc[i] = t[perm[i]]
        enc_len = n
        for i in range(n):
            for j in range(n):
                enc[enc_len] = a[perm[i] * n + perm[j]]
                enc_len += 1
        if not best_set[0] or memcmp(enc, best_enc, enc_len) < 0:
            best_set[0] = 1
            for i in range(enc_len):
                best_enc[i] = enc[i]
            for i in range(n):
                best_perm[i] = <unsigned char> perm[i]
        return
    for v in range(n):
        if colors[v] != target:
            continue
        for u in range(n):
            keys[u] = 2 * colors[u]
        keys[v] -= 1  # split v off below its old cell
        _dense_rank_ll(keys, branched, n)
        _refine_c(branched, t, a, n)
        _search_c(branched, t, a, n, best_enc, best_perm, best_set)


cdef bint _degree_fits(const unsigned char* a, int n):
    cdef int v, u, cnt
    for v in range(n):
        cnt = 0
        for u in range(n):
            if a[v * n + u]:
                cnt += 1
        if cnt > 4:
            return 0
    return 1


def canonical_perm(bytes types, bytes adj):
    """Canonical vertex ordering as bytes: position i holds the old index."""
    cdef Py_ssize_t n = len(types)
    if n > NMAX:
        raise ValueError("graph exceeds the %d-vertex core limit" % NMAX)
    if n == 1:
        return b"\x00"
    if n == 0:
        return b""
    cdef const unsigned char* t = _buf(types)
    cdef const unsigned char* a = _buf(adj)
    if not _degree_fits(a, <int> n):
        from . import _pygraph
        return _pygraph.canonical_perm(types, adj)
    cdef long long keys[NMAX]
    cdef long long orders[NMAX]
    cdef long long key
    cdef int colors[NMAX]
    cdef unsigned char best_enc[NMAX + NMAX * NMAX]
    cdef unsigned char best_perm[NMAX]
    cdef bint best_set = 0
    cdef int v, u, k, cnt, row, o
    for v in range(n):
        row = v * <int> n
        cnt = 0
        for u in range(n):
            o = a[row + u]
            if o:
                orders[cnt] = o
                cnt += 1
        _sort_ll(orders, cnt)
        key = (t[v] << 3) + cnt
        for k in range(4):
            key = key * 4 + (orders[k] if k < cnt else 0)
        keys[v] = key
    _dense_rank_ll(keys, colors, <int> n)
    _refine_c(colors, t, a, <int> n)
    _search_c(colors, t, a, <int> n, best_enc, best_perm, &best_set)
    return best_perm[:n]


def shingle_codes(bytes types, bytes adj):
    cdef Py_ssize_t n = len(types)
    cdef const unsigned char* t = _buf(types)
    cdef const unsigned char* a = _buf(adj)
    cdef long long pk[NMAX]
    cdef unsigned char code[1 + 2 * NMAX]
    cdef Py_ssize_t v, u
    cdef int cnt, k, row
    out = []
    for v in range(n):
        row = <int> (v * n)
        cnt = 0
        for u in range(n):
            if a[row + u]:
                pk[cnt] = a[row + u] * 256 + t[u]
                cnt += 1
        _sort_ll(pk, cnt)
        code[0] = t[v]
        for k in range(cnt):
            code[1 + 2 * k] = <unsigned char> (pk[k] >> 8)
            code[2 + 2 * k] = <unsigned char> (pk[k] & 0xff)
        out.append(code[:1 + 2 * cnt])
    return out


def list_mutations(bytes types, bytes adj, int max_atoms):
    """All validity-preserving single edits, in fixed enumeration order."""
    cdef Py_ssize_t n = len(types)
    cdef const unsigned char* t = _buf(types)
    cdef const unsigned char* a = _buf(adj)
    cdef int used[NMAX]
    cdef int free_v[NMAX]
    cdef int v, u, s, tt, b, top, cur, cap
    for v in range(n):
        s = 0
        for u in range(n):
            s += a[v * <int> n + u]
        used[v] = s
        free_v[v] = _VAL[t[v]] - s
    ops = []
    if n < max_atoms:
        for v in range(n):
            if free_v[v] <= 0:
                continue
            for tt in range(4):
                top = free_v[v]
                if _VAL[tt] < top:
                    top = _VAL[tt]
                if top > 3:
                    top = 3
                for b in range(1, top + 1):
                    ops.append((OP_ADD, v, tt, b))
    if n >= 2:
        for v in range(n):
            if _bfs(a, <int> n, v, -1, -1, 1 if v == 0 else 0, <int> n - 1):
                ops.append((OP_REMOVE, v, 0, 0))
    for u in range(n):
        for v in range(u + 1, n):
            cur = a[u * <int> n + v]
            cap = free_v[u] if free_v[u] < free_v[v] else free_v[v]
            for b in range(4):
                if b == cur:
                    continue
                if b == 0:
                    if _bfs(a, <int> n, -1, u, v, 0, <int> n):
                        ops.append((OP_BOND, u, v, 0))
                elif b - cur <= cap:
                    ops.append((OP_BOND, u, v, b))
    for v in range(n):
        for tt in range(4):
            if tt != t[v] and used[v] <= _VAL[tt]:
                ops.append((OP_SUB, v, tt, 0))
    return ops


def apply_op(bytes types, bytes adj, op):
    """Apply a mutation op, returning new (types, adj) bytes."""
    cdef int kind = op[0]
    cdef int oa = op[1]
    cdef int ob = op[2]
    cdef int oc = op[3]
    cdef Py_ssize_t n = len(types)
    cdef const unsigned char* t = _buf(types)
    cdef const unsigned char* a = _buf(adj)
    cdef unsigned char newt[NMAX + 1]
    cdef unsigned char out[(NMAX + 1) * (NMAX + 1)]
    cdef int keep[NMAX]
    cdef int m, v, u, i, j, row
    if n > NMAX:
        raise ValueError("graph exceeds the %d-vertex core limit" % NMAX)
    if kind == OP_ADD:
        m = <int> n + 1
        for i in range(m * m):
            out[i] = 0
        for v in range(n):
            for u in range(n):
                out[v * m + u] = a[v * <int> n + u]
        out[oa * m + n] = <unsigned char> oc
        out[<int> n * m + oa] = <unsigned char> oc
        return types + bytes((ob,)), out[:m * m]
    if kind == OP_REMOVE:
        m = 0
        for v in range(n):
            if v != oa:
                keep[m] = v
                m += 1
        for i in range(m):
            newt[i] = t[keep[i]]
            row = keep[i] * <int> n
            for j in range(m):
                out[i * m + j] = a[row + keep[j]]
        return newt[:m], out[:m * m]
    if kind == OP_BOND:
        for i in range(n * n):
            out[i] = a[i]
        out[oa * <int> n + ob] = <unsigned char> oc
        out[ob * <int> n + oa] = <unsigned char> oc
        return types, out[:n * n]
    if kind == OP_SUB:
        for i in range(n):
            newt[i] = t[i]
        newt[oa] = <unsigned char> ob
        return newt[:n], adj
    raise ValueError("unknown mutation kind %r" % (kind,))
