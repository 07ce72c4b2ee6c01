"""One-off brute-force oracle fixing the comparative-efficiency target.

Samples 10^5 random mutation walks from methane (lengths 1..20), scores
every distinct endpoint with the seed-0 linear shingle objective, and
freezes target = best - 0.05 * range into tests/data/criterion7.json.
Rerun only to regenerate the fixture:

    python tests/oracles/criterion7_target.py
"""

import json
import os
import random

from molbbo.graph import MolecularGraph, parse_smiles
from molbbo.graphcore import apply_op, list_mutations
from molbbo.objectives import ObjectiveSpec, make_objective

SAMPLES = 100_000
ORACLE_SEED = 2024
OBJECTIVE_SEED = 0
MAX_ATOMS = 9
VALUE_RANGE = 9.0  # objective maps into [-10, -1]


def main():
    rng = random.Random(ORACLE_SEED)
    objective = make_objective(ObjectiveSpec(kind="linear_shingles",
                                             seed=OBJECTIVE_SEED))
    methane = parse_smiles("C", MAX_ATOMS)
    cache = {}
    best = None
    for _ in range(SAMPLES):
        types, adj = methane.types, methane.adj
        for _ in range(rng.randint(1, 20)):
            ops = list_mutations(types, adj, MAX_ATOMS)
            if not ops:
                break
            types, adj = apply_op(types, adj, rng.choice(ops))
        g = MolecularGraph(types, adj, MAX_ATOMS)
        key = g.canonical_key()
        if key not in cache:
            cache[key] = objective(g)
        if best is None or cache[key] > best:
            best = cache[key]
    objective.close()
    fixture = {
        "samples": SAMPLES,
        "oracle_seed": ORACLE_SEED,
        "objective": {"kind": "linear_shingles", "seed": OBJECTIVE_SEED},
        "max_atoms": MAX_ATOMS,
        "distinct_molecules": len(cache),
        "best_value": best,
        "value_range": VALUE_RANGE,
        "target": best - 0.05 * VALUE_RANGE,
    }
    out = os.path.join(os.path.dirname(__file__), os.pardir, "data",
                       "criterion7.json")
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w") as fh:
        json.dump(fixture, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(fixture, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
