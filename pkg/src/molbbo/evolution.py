"""Steady-state evolutionary search over valence-valid molecular graphs.

Mutations are local graph edits (add atom, remove atom, change bond,
substitute atom) enumerated exhaustively so that every listed op keeps
the molecule valid; a mutation draws one or two of them at random.  The
loop replaces worst members with children that improve on them, walking
parents best-first, and doubles as both the merit optimizer inside the
surrogate loop and the standalone baseline optimizer.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import graphcore
from .graph import MolecularGraph

_KIND_NAMES = {graphcore.OP_ADD: "add_atom",
               graphcore.OP_REMOVE: "remove_atom",
               graphcore.OP_BOND: "change_bond",
               graphcore.OP_SUB: "substitute_atom"}
_KIND_CODES = {v: k for k, v in _KIND_NAMES.items()}


class MutationOp(NamedTuple):
    """One validity-preserving edit.

    kind "add_atom": attach atom ``atom_code`` to ``vertex`` with bond
    ``bond_order``; "remove_atom": delete ``vertex``; "change_bond": set
    the ``vertex``-``partner`` bond to ``bond_order`` (0 deletes it);
    "substitute_atom": relabel ``vertex`` to ``atom_code``.  Unused
    fields are -1.
    """

    kind: str
    vertex: int
    partner: int = -1
    atom_code: int = -1
    bond_order: int = -1


def _to_public(raw) -> MutationOp:
    kind, a, b, c = raw
    if kind == graphcore.OP_ADD:
        return MutationOp("add_atom", a, -1, b, c)
    if kind == graphcore.OP_REMOVE:
        return MutationOp("remove_atom", a)
    if kind == graphcore.OP_BOND:
        return MutationOp("change_bond", a, b, -1, c)
    return MutationOp("substitute_atom", a, -1, b)


def _to_raw(op: MutationOp):
    code = _KIND_CODES[op.kind]
    if code == graphcore.OP_ADD:
        return (code, op.vertex, op.atom_code, op.bond_order)
    if code == graphcore.OP_REMOVE:
        return (code, op.vertex, 0, 0)
    if code == graphcore.OP_BOND:
        return (code, op.vertex, op.partner, op.bond_order)
    return (code, op.vertex, op.atom_code, 0)


def enumerate_valid_mutations(g: MolecularGraph, max_atoms: int = 9):
    """All validity-preserving ops on ``g``, in a fixed deterministic order."""
    return [_to_public(raw)
            for raw in graphcore.list_mutations(g.types, g.adj, max_atoms)]


def apply_mutation(g: MolecularGraph, op: MutationOp,
                   max_atoms: int = 9) -> MolecularGraph:
    types, adj = graphcore.apply_op(g.types, g.adj, _to_raw(op))
    return MolecularGraph(types, adj, max_atoms)


class MutationExhausted(RuntimeError):
    """No acceptable mutant found within the attempt budget."""


@dataclass
class EaConfig:
    steps: int = 10
    insert_per_step: int = 10
    perturbations: int = 2  # mutate applies 1..perturbations ops
    max_attempts: int = 50
    max_population: int = 300
    max_atoms: int = 9
    tabu: frozenset = field(default_factory=frozenset)  # canonical keys
    seed: object = 0  # int, SeedSequence, or Generator

    def __post_init__(self):
        if self.steps < 1 or self.insert_per_step < 1:
            raise ValueError("steps and insert_per_step must be >= 1")
        if self.perturbations not in (1, 2):
            raise ValueError("perturbations must be 1 or 2")


def mutate(g: MolecularGraph, cfg: EaConfig, rng,
           extra_tabu=frozenset()) -> MolecularGraph:
    """Perturb ``g`` with 1..cfg.perturbations random valid ops.

    The result is valid, not isomorphic to ``g``, and its canonical key
    avoids cfg.tabu and ``extra_tabu``; up to cfg.max_attempts resampled
    attempts, then MutationExhausted.
    """
    parent_key = g.canonical_key()
    for _ in range(cfg.max_attempts):
        k = int(rng.integers(1, cfg.perturbations + 1))
        current = g
        dead = False
        for _ in range(k):
            raw_ops = graphcore.list_mutations(current.types, current.adj,
                                               cfg.max_atoms)
            if not raw_ops:
                dead = True
                break
            raw = raw_ops[int(rng.integers(len(raw_ops)))]
            types, adj = graphcore.apply_op(current.types, current.adj, raw)
            current = MolecularGraph(types, adj, cfg.max_atoms)
        if dead:
            continue
        key = current.canonical_key()
        if key == parent_key or key in cfg.tabu or key in extra_tabu:
            continue
        return current
    raise MutationExhausted("no acceptable mutant of %r within %d attempts"
                            % (parent_key, cfg.max_attempts))


class _Member(NamedTuple):
    fitness: float
    order: int  # insertion counter; older members have smaller values
    graph: MolecularGraph
    key: str


def ea_maximize(fitness, initial, cfg: EaConfig, on_step=None):
    """Maximize ``fitness`` over molecular graphs from ``initial``.

    Runs cfg.steps steady-state steps.  Each step snapshots the
    population best-first and walks it cyclically, mutating each parent;
    every child is evaluated (counting toward the per-step quota of
    cfg.insert_per_step) and inserted when the population has room or
    when it strictly beats the current worst member, which is then
    evicted (oldest first among equals).  Parents whose mutation budget
    is exhausted are skipped for the rest of the step.

    Returns (best graph, best fitness, trace) where trace lists every
    evaluated child as (graph, fitness) in discovery order.  Initial
    members are scored too but do not appear in the trace.  ``on_step``
    is called with the step index before each step begins.
    """
    if not initial:
        raise ValueError("initial population is empty")
    rng = cfg.seed if isinstance(cfg.seed, np.random.Generator) \
        else np.random.default_rng(cfg.seed)

    pop = []
    keys = set()
    counter = 0
    for g in initial:
        key = g.canonical_key()
        if key in keys:
            raise ValueError("duplicate canonical key in initial population")
        keys.add(key)
        pop.append(_Member(float(fitness(g)), counter, g, key))
        counter += 1
    if len(pop) > cfg.max_population:
        raise ValueError("initial population exceeds max_population")

    trace = []
    for step in range(cfg.steps):
        if on_step is not None:
            on_step(step)
        parents = sorted(pop, key=lambda m: (-m.fitness, m.order))
        failed = set()
        produced = 0
        cursor = 0
        while produced < cfg.insert_per_step and len(failed) < len(parents):
            parent = parents[cursor % len(parents)]
            cursor += 1
            if parent.key in failed:
                continue
            try:
                child = mutate(parent.graph, cfg, rng, extra_tabu=keys)
            except MutationExhausted:
                failed.add(parent.key)
                continue
            value = float(fitness(child))
            trace.append((child, value))
            produced += 1
            worst = min(pop, key=lambda m: (m.fitness, m.order))
            if len(pop) < cfg.max_population:
                pass
            elif value > worst.fitness:
                pop.remove(worst)
                keys.discard(worst.key)
            else:
                continue
            keys.add(child.canonical_key())
            pop.append(_Member(value, counter, child, child.canonical_key()))
            counter += 1

    best = max(pop, key=lambda m: (m.fitness, -m.order))
    return best.graph, best.fitness, trace
