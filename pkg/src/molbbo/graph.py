"""Molecular graphs over C/N/O/F with fixed valences and bond orders 1-3.

Hydrogens are implicit: the free valence of a vertex is the number of
hydrogens it carries. Graphs are immutable, connected, nonempty, and capped
at a configurable heavy-atom count. A small SMILES subset (bare C/N/O/F,
-/=/# bonds, branches, ring-closure digits 0-9) is the text format used in
configs, logs, and the external-objective protocol.
"""

from __future__ import annotations

from . import graphcore

SYMBOLS = "CNOF"
_CODE = {s: i for i, s in enumerate(SYMBOLS)}
VALENCES = graphcore.VALENCES
_BOND_CHARS = {"-": 1, "=": 2, "#": 3}
_BOND_SYM = {1: "", 2: "=", 3: "#"}

_ERROR_TEXT = {
    graphcore.ERR_EMPTY: "molecule has no atoms",
    graphcore.ERR_BAD_TYPE: "unknown atom type code",
    graphcore.ERR_BAD_ADJ: "malformed adjacency (self-loop, asymmetry, or bad order)",
    graphcore.ERR_VALENCE: "valence exceeded",
    graphcore.ERR_DISCONNECTED: "graph is disconnected",
    graphcore.ERR_TOO_MANY: "heavy-atom limit exceeded",
}


class GraphError(ValueError):
    """Base class for molecule construction failures."""


class SmilesSyntaxError(GraphError):
    """Malformed SMILES text (tokens, parentheses, ring digits)."""


class ChemistryError(GraphError):
    """Structurally well-formed input that violates chemistry rules."""


def _raise_for_code(code, max_atoms):
    text = _ERROR_TEXT.get(code, "invalid graph")
    if code == graphcore.ERR_TOO_MANY:
        text += " (limit %d)" % max_atoms
    raise ChemistryError(text)


class MolecularGraph:
    """Labeled undirected graph of heavy atoms with typed bonds.

    Vertices carry atom codes (0=C, 1=N, 2=O, 3=F); edges carry bond orders
    1-3, stored as a dense adjacency matrix in bytes. Instances are immutable
    and hashable; equality is exact labeled equality. Use
    :meth:`canonical_key` for identity up to isomorphism.
    """

    __slots__ = ("types", "adj", "_key", "_hash")

    def __init__(self, types: bytes, adj: bytes, max_atoms: int = graphcore.MAX_VERTICES):
        code = graphcore.validity_error(types, adj, max_atoms)
        if code != graphcore.OK:
            _raise_for_code(code, max_atoms)
        self.types = bytes(types)
        self.adj = bytes(adj)
        self._key = None
        self._hash = None

    @classmethod
    def from_edges(cls, symbols, edges, max_atoms: int = graphcore.MAX_VERTICES):
        """Build from atom symbols and (i, j, order) triples."""
        try:
            types = bytes(_CODE[s] for s in symbols)
        except KeyError as exc:
            raise ChemistryError("unsupported atom type %r" % (exc.args[0],)) from None
        n = len(types)
        adj = bytearray(n * n)
        for i, j, order in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError("edge endpoint out of range")
            adj[i * n + j] = order
            adj[j * n + i] = order
        return cls(types, bytes(adj), max_atoms)

    @classmethod
    def single_atom(cls, symbol: str):
        return cls.from_edges([symbol], [])

    @property
    def n_atoms(self) -> int:
        return len(self.types)

    @property
    def atom_symbols(self):
        return [SYMBOLS[t] for t in self.types]

    def bonds(self):
        """All (i, j, order) with i < j."""
        n = len(self.types)
        out = []
        for i in range(n):
            row = i * n
            for j in range(i + 1, n):
                if self.adj[row + j]:
                    out.append((i, j, self.adj[row + j]))
        return out

    def bond_order(self, i: int, j: int) -> int:
        n = len(self.types)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError("vertex index out of range")
        return self.adj[i * n + j]

    def free_valence(self, v: int) -> int:
        """Max valence of v's atom type minus its incident bond orders."""
        n = len(self.types)
        if not 0 <= v < n:
            raise IndexError("vertex index out of range")
        return VALENCES[self.types[v]] - sum(self.adj[v * n : v * n + n])

    def relabel(self, perm):
        """New graph whose vertex i is this graph's vertex perm[i]."""
        n = len(self.types)
        types = bytes(self.types[v] for v in perm)
        adj = bytearray(n * n)
        for i, v in enumerate(perm):
            row = v * n
            for j, u in enumerate(perm):
                adj[i * n + j] = self.adj[row + u]
        return MolecularGraph(types, bytes(adj))

    def canonical_key(self) -> str:
        """Canonical SMILES: equal across all relabelings, distinct otherwise."""
        if self._key is None:
            perm = graphcore.canonical_perm(self.types, self.adj)
            n = len(self.types)
            types = bytes(self.types[v] for v in perm)
            adj = bytearray(n * n)
            for i, v in enumerate(perm):
                row = v * n
                for j, u in enumerate(perm):
                    adj[i * n + j] = self.adj[row + u]
            self._key = _write(types, bytes(adj))
        return self._key

    def __eq__(self, other):
        if not isinstance(other, MolecularGraph):
            return NotImplemented
        return self.types == other.types and self.adj == other.adj

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.types, self.adj))
        return self._hash

    def __repr__(self):
        return "MolecularGraph(%r)" % write_smiles(self)


def parse_smiles(text: str, max_atoms: int = 9) -> MolecularGraph:
    """Parse the SMILES subset into a validated MolecularGraph.

    Raises SmilesSyntaxError for malformed text and ChemistryError for
    valence violations, disconnection ('.'), or atom counts over the limit.
    """
    types = []
    edges = {}
    prev = None
    pending = None
    stack = []
    rings = {}

    def add_edge(a, b, order):
        if a == b:
            raise SmilesSyntaxError("ring closure bonds an atom to itself")
        key = (a, b) if a < b else (b, a)
        if key in edges:
            raise SmilesSyntaxError("duplicate bond between atoms %d and %d" % key)
        edges[key] = order

    for pos, ch in enumerate(text):
        if ch in _CODE:
            if len(types) >= max_atoms:
                raise ChemistryError(
                    "more than %d heavy atoms (limit exceeded)" % max_atoms
                )
            types.append(_CODE[ch])
            new = len(types) - 1
            if prev is not None:
                add_edge(prev, new, pending if pending else 1)
            elif pending is not None:
                raise SmilesSyntaxError("bond symbol before the first atom")
            prev = new
            pending = None
        elif ch in _BOND_CHARS:
            if pending is not None:
                raise SmilesSyntaxError("two bond symbols in a row at position %d" % pos)
            pending = _BOND_CHARS[ch]
        elif ch.isdigit():
            if prev is None:
                raise SmilesSyntaxError("ring-closure digit before any atom")
            d = int(ch)
            if d in rings:
                other, order1 = rings.pop(d)
                order2 = pending
                pending = None
                if order1 is not None and order2 is not None and order1 != order2:
                    raise SmilesSyntaxError(
                        "conflicting bond orders on ring closure %d" % d
                    )
                add_edge(other, prev, order1 or order2 or 1)
            else:
                rings[d] = (prev, pending)
                pending = None
        elif ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch opened before any atom")
            if pending is not None:
                raise SmilesSyntaxError("bond symbol directly before '('")
            stack.append(prev)
        elif ch == ")":
            if not stack:
                raise SmilesSyntaxError("unbalanced ')' at position %d" % pos)
            if pending is not None:
                raise SmilesSyntaxError("dangling bond symbol before ')'")
            prev = stack.pop()
        elif ch == ".":
            raise ChemistryError("disconnected input ('.') is not supported")
        else:
            raise SmilesSyntaxError("unknown token %r at position %d" % (ch, pos))

    if stack:
        raise SmilesSyntaxError("unbalanced '(': %d branch(es) left open" % len(stack))
    if rings:
        raise SmilesSyntaxError(
            "dangling ring-closure digit(s): %s" % sorted(rings)
        )
    if pending is not None:
        raise SmilesSyntaxError("trailing bond symbol")
    if not types:
        raise SmilesSyntaxError("empty SMILES")

    n = len(types)
    adj = bytearray(n * n)
    for (a, b), order in edges.items():
        adj[a * n + b] = order
        adj[b * n + a] = order
    tb = bytes(types)
    code = graphcore.validity_error(tb, bytes(adj), max_atoms)
    if code != graphcore.OK:
        _raise_for_code(code, max_atoms)
    return MolecularGraph(tb, bytes(adj), max_atoms)


def write_smiles(g: MolecularGraph) -> str:
    """Deterministic SMILES for g's current labeling; reparses isomorphic."""
    return _write(g.types, g.adj)


def _write(types, adj):
    n = len(types)
    if n == 1:
        return SYMBOLS[types[0]]

    # DFS from vertex 0, neighbors in ascending index order: classify tree
    # edges and ring (back) edges, record preorder positions.
    preorder = [-1] * n
    children = [[] for _ in range(n)]
    ring_at = [[] for _ in range(n)]
    counter = 0

    def explore(v, parent):
        nonlocal counter
        preorder[v] = counter
        counter += 1
        row = v * n
        for u in range(n):
            if not adj[row + u] or u == parent:
                continue
            if preorder[u] < 0:
                children[v].append(u)
                explore(u, v)
            elif preorder[u] < preorder[v]:
                ring_at[v].append(u)
                ring_at[u].append(v)

    explore(0, -1)

    open_digits = {}
    free_digits = set(range(10))
    preference = list(range(1, 10)) + [0]

    def alloc_digit():
        for d in preference:
            if d in free_digits:
                free_digits.discard(d)
                return d
        raise GraphError("more than 10 ring closures open at once")

    def emit(v):
        row = v * n
        parts = [SYMBOLS[types[v]]]
        for u in sorted(ring_at[v], key=preorder.__getitem__):
            edge = (v, u) if v < u else (u, v)
            if edge in open_digits:
                d = open_digits.pop(edge)
                free_digits.add(d)
                parts.append(str(d))
            else:
                d = alloc_digit()
                open_digits[edge] = d
                parts.append(_BOND_SYM[adj[row + u]] + str(d))
        kids = children[v]
        for u in kids[:-1]:
            parts.append("(" + _BOND_SYM[adj[row + u]] + emit(u) + ")")
        if kids:
            u = kids[-1]
            parts.append(_BOND_SYM[adj[row + u]] + emit(u))
        return "".join(parts)

    return emit(0)


def canonical_key(g: MolecularGraph) -> str:
    """Functional alias for :meth:`MolecularGraph.canonical_key`."""
    return g.canonical_key()
