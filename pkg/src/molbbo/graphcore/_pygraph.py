"""Pure-Python reference implementation of the hot graph kernels.

Graphs are passed around in a compact immutable form: ``types`` is a bytes
object of per-vertex atom codes (0=C, 1=N, 2=O, 3=F) and ``adj`` is the
row-major n*n adjacency matrix as bytes, entries being bond orders 0..3.
The compiled twin (``_cygraph``) implements the exact same functions with
byte-identical outputs; ``tests/test_backend_parity.py`` enforces that.
"""

MAX_ATOM_CODE = 3
VALENCES = (4, 3, 2, 1)  # C, N, O, F
MAX_VERTICES = 32  # compiled twin uses fixed buffers of this size

# validity_error codes
OK = 0
ERR_EMPTY = 1
ERR_BAD_TYPE = 2
ERR_BAD_ADJ = 3
ERR_VALENCE = 4
ERR_DISCONNECTED = 5
ERR_TOO_MANY = 6

# mutation kinds
OP_ADD = 0
OP_REMOVE = 1
OP_BOND = 2
OP_SUB = 3


def used_valences(types, adj):
    """Per-vertex sum of incident bond orders, as a list of ints."""
    n = len(types)
    return [sum(adj[v * n + u] for u in range(n)) for v in range(n)]


def is_connected(adj, n):
    if n == 0:
        return False
    seen = [False] * n
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        v = stack.pop()
        row = v * n
        for u in range(n):
            if adj[row + u] and not seen[u]:
                seen[u] = True
                count += 1
                stack.append(u)
    return count == n


def connected_without_vertex(adj, n, skip):
    """True if the graph minus vertex ``skip`` is connected and nonempty."""
    if n <= 1:
        return False
    start = 1 if skip == 0 else 0
    seen = [False] * n
    seen[skip] = True  # excluded from traversal
    stack = [start]
    seen[start] = True
    count = 1
    while stack:
        v = stack.pop()
        row = v * n
        for u in range(n):
            if adj[row + u] and not seen[u]:
                seen[u] = True
                count += 1
                stack.append(u)
    return count == n - 1


def connected_without_edge(adj, n, a, b):
    """True if the graph stays connected after deleting edge (a, b)."""
    seen = [False] * n
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        v = stack.pop()
        row = v * n
        for u in range(n):
            if not adj[row + u] or seen[u]:
                continue
            if (v == a and u == b) or (v == b and u == a):
                continue
            seen[u] = True
            count += 1
            stack.append(u)
    return count == n


def validity_error(types, adj, max_atoms):
    """0 when valid, else the first failing check's error code."""
    n = len(types)
    if n == 0:
        return ERR_EMPTY
    if n > max_atoms:
        return ERR_TOO_MANY
    if n > MAX_VERTICES:
        return ERR_TOO_MANY
    if len(adj) != n * n:
        return ERR_BAD_ADJ
    for v in range(n):
        if types[v] > MAX_ATOM_CODE:
            return ERR_BAD_TYPE
    for v in range(n):
        if adj[v * n + v] != 0:
            return ERR_BAD_ADJ
        for u in range(v + 1, n):
            o = adj[v * n + u]
            if o != adj[u * n + v] or o > 3:
                return ERR_BAD_ADJ
    for v in range(n):
        if sum(adj[v * n + u] for u in range(n)) > VALENCES[types[v]]:
            return ERR_VALENCE
    if not is_connected(adj, n):
        return ERR_DISCONNECTED
    return OK


# ---------------------------------------------------------------------------
# Canonical labeling: iterative neighborhood refinement plus individualization
# backtracking; the canonical permutation is the one whose relabeled
# (types, adj) byte encoding is lexicographically smallest.
# ---------------------------------------------------------------------------

def _dense_rank(keys):
    index = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [index[k] for k in keys]


def _refine(colors, types, adj, n):
    ncolors = len(set(colors))
    while True:
        keys = []
        for v in range(n):
            row = v * n
            nb = sorted((adj[row + u], colors[u]) for u in range(n) if adj[row + u])
            keys.append((colors[v], tuple(nb)))
        colors = _dense_rank(keys)
        count = len(set(colors))
        if count == ncolors:
            return colors
        ncolors = count


def _encode_perm(types, adj, n, perm):
    out = bytearray(types[v] for v in perm)
    for v in perm:
        row = v * n
        for u in perm:
            out.append(adj[row + u])
    return bytes(out)


def canonical_perm(types, adj):
    """Canonical vertex ordering as bytes: position i holds the old index."""
    n = len(types)
    if n > MAX_VERTICES:
        raise ValueError("graph exceeds the %d-vertex core limit" % MAX_VERTICES)
    if n == 1:
        return b"\x00"
    init = []
    for v in range(n):
        row = v * n
        orders = sorted(adj[row + u] for u in range(n) if adj[row + u])
        init.append((types[v], len(orders), tuple(orders)))
    colors = _refine(_dense_rank(init), types, adj, n)
    best = [None, None]
    _search(colors, types, adj, n, best)
    return bytes(best[1])


def _search(colors, types, adj, n, best):
    counts = {}
    for c in colors:
        counts[c] = counts.get(c, 0) + 1
    target = -1
    for c in sorted(counts):
        if counts[c] > 1:
            target = c
            break
    if target < 0:  # discrete: colors are a permutation
        perm = sorted(range(n), key=colors.__getitem__)
        enc = _encode_perm(types, adj, n, perm)
        if best[0] is None or enc < best[0]:
            best[0] = enc
            best[1] = perm
        return
    for v in range(n):
        if colors[v] != target:
            continue
        branched = [2 * c for c in colors]
        branched[v] -= 1  # split v off below its old cell
        branched = _refine(_dense_rank(branched), types, adj, n)
        _search(branched, types, adj, n, best)


# ---------------------------------------------------------------------------
# Shingles: one radius-1 environment per vertex, encoded as
# bytes([center, order1, type1, order2, type2, ...]) with the
# (order, type) pairs sorted ascending.
# ---------------------------------------------------------------------------

def shingle_codes(types, adj):
    n = len(types)
    out = []
    for v in range(n):
        row = v * n
        pairs = sorted((adj[row + u], types[u]) for u in range(n) if adj[row + u])
        code = bytearray((types[v],))
        for order, t in pairs:
            code.append(order)
            code.append(t)
        out.append(bytes(code))
    return out


# ---------------------------------------------------------------------------
# Mutation enumeration. Ops are 4-tuples (kind, a, b, c):
#   (OP_ADD, anchor, new_type, order)   attach a new vertex to ``anchor``
#   (OP_REMOVE, v, 0, 0)                delete vertex v
#   (OP_BOND, u, v, new_order)          set bond u-v to new_order (0 deletes)
#   (OP_SUB, v, new_type, 0)            relabel vertex v
# Every listed op preserves validity under ``max_atoms``; enumeration order is
# fixed (part of the determinism contract shared with the compiled twin).
# ---------------------------------------------------------------------------

def list_mutations(types, adj, max_atoms):
    n = len(types)
    used = used_valences(types, adj)
    free = [VALENCES[types[v]] - used[v] for v in range(n)]
    ops = []
    if n < max_atoms:
        for v in range(n):
            if free[v] <= 0:
                continue
            for t in range(4):
                top = min(free[v], VALENCES[t], 3)
                for b in range(1, top + 1):
                    ops.append((OP_ADD, v, t, b))
    if n >= 2:
        for v in range(n):
            if connected_without_vertex(adj, n, v):
                ops.append((OP_REMOVE, v, 0, 0))
    for u in range(n):
        for v in range(u + 1, n):
            cur = adj[u * n + v]
            cap = min(free[u], free[v])
            for b in range(4):
                if b == cur:
                    continue
                if b == 0:
                    if connected_without_edge(adj, n, u, v):
                        ops.append((OP_BOND, u, v, 0))
                elif b - cur <= cap:
                    ops.append((OP_BOND, u, v, b))
    for v in range(n):
        for t in range(4):
            if t != types[v] and used[v] <= VALENCES[t]:
                ops.append((OP_SUB, v, t, 0))
    return ops


def apply_op(types, adj, op):
    """Apply a mutation op, returning new (types, adj) bytes."""
    kind, a, b, c = op
    n = len(types)
    if kind == OP_ADD:
        m = n + 1
        out = bytearray(m * m)
        for v in range(n):
            out[v * m : v * m + n] = adj[v * n : v * n + n]
        out[a * m + n] = c
        out[n * m + a] = c
        return types + bytes((b,)), bytes(out)
    if kind == OP_REMOVE:
        keep = [v for v in range(n) if v != a]
        m = n - 1
        out = bytearray(m * m)
        for i, v in enumerate(keep):
            row = v * n
            for j, u in enumerate(keep):
                out[i * m + j] = adj[row + u]
        return bytes(types[v] for v in keep), bytes(out)
    if kind == OP_BOND:
        out = bytearray(adj)
        out[a * n + b] = c
        out[b * n + a] = c
        return types, bytes(out)
    if kind == OP_SUB:
        out = bytearray(types)
        out[a] = b
        return bytes(out), adj
    raise ValueError("unknown mutation kind %r" % (kind,))
