"""Shared test helpers: an independent random-valid-graph generator and a
brute-force validity oracle, both written without the package's own
mutation/validity code so they can stand as referees for it."""

import random

VAL = (4, 3, 2, 1)  # C, N, O, F

criteria_lines = []


def record_criterion(num, passed, detail):
    criteria_lines.append((num, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not criteria_lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, passed, detail in sorted(criteria_lines):
        terminalreporter.write_line(
            "criterion %2d: %s  %s" % (num, "PASS" if passed else "FAIL", detail))


def oracle_validity(types, adj, max_atoms):
    """Independent implementation of the molecule validity rules."""
    n = len(types)
    if n == 0 or n > max_atoms:
        return False
    if len(adj) != n * n:
        return False
    if any(t > 3 for t in types):
        return False
    for v in range(n):
        if adj[v * n + v]:
            return False
        for u in range(n):
            if adj[v * n + u] != adj[u * n + v] or adj[v * n + u] > 3:
                return False
    for v in range(n):
        if sum(adj[v * n + u] for u in range(n)) > VAL[types[v]]:
            return False
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for v in frontier:
            for u in range(n):
                if adj[v * n + u] and u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return len(seen) == n


def random_valid_graph(rng: random.Random, max_atoms=9):
    """Random valence-valid connected graph: random spanning tree over
    random atom types, then random bond-order bumps and chords while the
    valence budget allows.  Returns (types, adj) bytes."""
    while True:
        n = rng.randint(1, max_atoms)
        types = [rng.randrange(4) for _ in range(n)]
        adj = [0] * (n * n)
        free = [VAL[t] for t in types]
        ok = True
        for v in range(1, n):
            anchors = [u for u in range(v) if free[u] >= 1]
            if not anchors or free[v] < 1:
                ok = False
                break
            u = rng.choice(anchors)
            adj[v * n + u] = adj[u * n + v] = 1
            free[u] -= 1
            free[v] -= 1
        if not ok:
            continue
        for _ in range(rng.randrange(2 * n)):
            v = rng.randrange(n)
            u = rng.randrange(n)
            if v == u:
                continue
            cur = adj[v * n + u]
            if cur >= 3 or free[v] < 1 or free[u] < 1:
                continue
            adj[v * n + u] = adj[u * n + v] = cur + 1
            free[v] -= 1
            free[u] -= 1
        types_b, adj_b = bytes(types), bytes(adj)
        assert oracle_validity(types_b, adj_b, max_atoms)
        return types_b, adj_b


def random_permutation_relabel(rng, types, adj):
    """(types, adj) under a uniformly random vertex permutation."""
    n = len(types)
    perm = list(range(n))
    rng.shuffle(perm)
    new_types = bytes(types[perm[i]] for i in range(n))
    new_adj = bytearray(n * n)
    for i in range(n):
        for j in range(n):
            new_adj[i * n + j] = adj[perm[i] * n + perm[j]]
    return new_types, bytes(new_adj)
