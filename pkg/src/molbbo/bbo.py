"""Surrogate-driven black-box optimization over molecular graphs.

Each step trains a GP on everything evaluated so far, launches a batch
of evolutionary restarts that maximize expected improvement, evaluates
each restart's best unseen candidate with the exact objective, and grows
the dataset, until the call budget is spent.  The standalone EA baseline
shares the dataset bootstrap and log format so the two methods compare
directly.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import graphcore
from .evolution import EaConfig, ea_maximize
from .gp import DOT_PRODUCT, KernelSpec, expected_improvement
from .gp import fit as gp_fit
from .graph import MolecularGraph, parse_smiles
from .objectives import BudgetExhausted, CachedObjective, ObjectiveError
from .runlog import RunLog, make_header, records_from_calls
from .shingles import ShingleDictionary, sparse_encode

# phase tags for the per-(step, restart) RNG streams
_PHASE_FIT = 0
_PHASE_INIT = 1
_PHASE_EA = 2

# consecutive steps in which every exact evaluation failed before the
# run aborts as objective-unavailable
_MAX_FAILED_STEPS = 3


class ObjectiveUnavailable(RuntimeError):
    """The exact objective keeps failing; the run cannot proceed."""


@dataclass
class EvaluatedMolecule:
    key: str  # canonical SMILES
    smiles: str
    descriptor: np.ndarray  # shingle counts, length = dictionary capacity
    value: float  # exact objective output, never a prediction
    step_index: int
    restart_index: int
    objective_call_index: int
    wall_time: float


@dataclass
class BboConfig:
    restarts: int = 10
    init_pop_size: int = 10
    ea: EaConfig = field(default_factory=EaConfig)
    xi: float = 0.01
    budget: int = 1000
    kernel: KernelSpec = field(default_factory=KernelSpec)
    max_atoms: int = 9
    shingle_capacity: int = 2000
    master_seed: int = 0
    doe_smiles: tuple = ("C",)

    def __post_init__(self):
        if self.restarts < 1 or self.init_pop_size < 1 or self.budget < 1:
            raise ValueError("restarts, init_pop_size and budget must be >= 1")
        if self.xi < 0:
            raise ValueError("xi must be nonnegative")
        if not self.doe_smiles:
            raise ValueError("need at least one design-of-experiments molecule")

    def descriptor_scale(self) -> float:
        # integer counts go in unscaled for the dot-product kernel; the
        # RBF kernel sees them shrunk so distances stay O(1)
        if self.kernel.family == DOT_PRODUCT:
            return 1.0
        return 1.0 / math.sqrt(self.shingle_capacity)


def _stream(master_seed, step, restart, phase):
    return np.random.default_rng(
        np.random.SeedSequence([master_seed, step, restart, phase]))


def select_initial_population(D, size, rng):
    """Sample min(size, |D|) distinct molecules, rank-weighted by value.

    The molecule ranked i from the worst (1-based) among m carries weight
    i / sum(1..m), which favors high objective values while staying well
    defined for negative ones.  Ties order by call index.
    """
    m = len(D)
    order = sorted(range(m), key=lambda i: (D[i].value, D[i].objective_call_index))
    ranks = np.empty(m)
    for rank, i in enumerate(order, start=1):
        ranks[i] = rank
    take = min(size, m)
    picked = rng.choice(m, size=take, replace=False, p=ranks / ranks.sum())
    return [parse_smiles(D[i].smiles, graphcore.MAX_VERTICES) for i in picked]


def ei_fitness(model, known_keys, f_max, xi, dct, descriptor_scale=1.0,
               cache=None, stats=None):
    """Fitness: expected improvement of the GP posterior at a molecule.

    Molecules whose canonical key is in ``known_keys`` score exactly 0
    without touching the surrogate.  Candidate descriptors are encoded
    against the frozen dictionary; shingles it does not know are dropped
    and tallied into ``stats["unseen"]``.  ``cache`` memoizes EI by
    canonical key across restarts of one step.
    """
    def fitness(g: MolecularGraph) -> float:
        key = g.canonical_key()
        if key in known_keys:
            return 0.0
        if cache is not None:
            hit = cache.get(key)
            if hit is not None:
                return hit
        indices, counts, unseen = sparse_encode(g, dct, frozen=True)
        if stats is not None and unseen:
            stats["unseen"] += unseen
        values = np.asarray(counts, dtype=float)
        if descriptor_scale != 1.0:
            values = values * descriptor_scale
        ei = expected_improvement(model.predict_sparse(indices, values), f_max, xi)
        if cache is not None:
            cache[key] = ei
        return ei
    return fitness


class _GramCache:
    """Scaled descriptor matrix of D with an incrementally grown Gram."""

    def __init__(self, dim, scale):
        self.scale = scale
        self.n = 0
        self._X = np.empty((64, dim))
        self._G = np.empty((64, 64))

    def append(self, descriptor):
        if self.n == self._X.shape[0]:
            grown = self._X.shape[0] * 2
            X = np.empty((grown, self._X.shape[1]))
            X[: self.n] = self._X[: self.n]
            G = np.empty((grown, grown))
            G[: self.n, : self.n] = self._G[: self.n, : self.n]
            self._X, self._G = X, G
        row = np.asarray(descriptor, dtype=float) * self.scale
        i = self.n
        dots = self._X[:i] @ row
        self._X[i] = row
        self._G[:i, i] = dots
        self._G[i, :i] = dots
        self._G[i, i] = float(row @ row)
        self.n = i + 1

    @property
    def X(self):
        return self._X[: self.n]

    @property
    def gram(self):
        return self._G[: self.n, : self.n]


def bbo_step(D, cfg: BboConfig, cache: CachedObjective, dct: ShingleDictionary,
             step_index: int, gram_cache=None, parallel: int = 1):
    """One outer-loop step; returns (new records appended to D, drop count).

    Fits the surrogate on all of D, runs cfg.restarts EA restarts over EI
    with tabu = keys(D) plus candidates already chosen this step, picks
    each restart's highest-EI traced molecule, and evaluates the picks
    exactly (in parallel when ``parallel`` > 1; results land in D in
    restart order regardless).
    """
    scale = cfg.descriptor_scale()
    if gram_cache is None:
        gram_cache = _GramCache(dct.capacity, scale)
        for d in D:
            gram_cache.append(d.descriptor)
    X = gram_cache.X
    y = np.array([d.value for d in D])
    gram = gram_cache.gram if cfg.kernel.family == DOT_PRODUCT else None
    model = gp_fit(X, y, cfg.kernel,
                   rng=_stream(cfg.master_seed, step_index, 0, _PHASE_FIT),
                   gram=gram)

    f_max = float(y.max())
    d_keys = frozenset(d.key for d in D)
    ei_cache = {}
    stats = {"unseen": 0}
    fitness = ei_fitness(model, d_keys, f_max, cfg.xi, dct, scale,
                         cache=ei_cache, stats=stats)

    picks = []  # (restart, graph, key, ei)
    chosen = set()
    for r in range(cfg.restarts):
        init = select_initial_population(
            D, cfg.init_pop_size, _stream(cfg.master_seed, step_index, r, _PHASE_INIT))
        ea_cfg = replace(cfg.ea,
                         tabu=frozenset(d_keys | chosen),
                         seed=_stream(cfg.master_seed, step_index, r, _PHASE_EA),
                         max_atoms=cfg.max_atoms)
        _, _, trace = ea_maximize(fitness, init, ea_cfg)
        best = None  # key: (-ei, first discovery index, smiles)
        best_graph = None
        seen = set()
        for i, (g, ei) in enumerate(trace):
            key = g.canonical_key()
            if key in seen:
                continue
            seen.add(key)
            cand = (-ei, i, key)
            if best is None or cand < best:
                best = cand
                best_graph = g
        if best is None:
            continue  # restart found nothing eligible
        picks.append((r, best_graph, best[2], -best[0]))
        chosen.add(best[2])

    room = cfg.budget - cache.misses
    eligible = picks[: max(room, 0)]
    values = {}
    drops = 0
    if parallel > 1 and len(eligible) > 1:
        def run(item):
            cache.set_context(step_index, item[0])
            return item[2], cache.evaluate(item[1])
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(run, item) for item in eligible]
            for fut in futures:
                try:
                    key, value = fut.result()
                    values[key] = value
                except ObjectiveError:
                    drops += 1
                except BudgetExhausted:
                    pass
    else:
        for item in eligible:
            if cache.misses >= cfg.budget:
                break
            cache.set_context(step_index, item[0])
            try:
                values[item[2]] = cache.evaluate(item[1])
            except BudgetExhausted:
                break
            except ObjectiveError:
                drops += 1

    new = []
    for r, g, key, _ in eligible:
        if key not in values:
            continue
        indices, counts, _ = sparse_encode(g, dct, frozen=False)
        vec = np.zeros(dct.capacity, dtype=np.int64)
        vec[indices] = counts
        record = cache.record_for(key)
        mol = EvaluatedMolecule(key, key, vec, values[key], step_index, r,
                                record.call_index, record.duration_s)
        D.append(mol)
        gram_cache.append(vec)
        new.append(mol)
    return new, drops


def _bootstrap_doe(cfg: BboConfig, cache: CachedObjective,
                   dct: ShingleDictionary, D):
    cache.set_context(0, -1)
    failures = 0
    seen = set()
    for smi in cfg.doe_smiles:
        g = parse_smiles(smi, cfg.max_atoms)
        if g.canonical_key() in seen:
            continue
        seen.add(g.canonical_key())
        try:
            value = cache.evaluate(g)
        except BudgetExhausted:
            break
        except ObjectiveError:
            failures += 1
            continue
        indices, counts, _ = sparse_encode(g, dct, frozen=False)
        vec = np.zeros(dct.capacity, dtype=np.int64)
        vec[indices] = counts
        record = cache.record_for(g.canonical_key())
        D.append(EvaluatedMolecule(g.canonical_key(), g.canonical_key(), vec,
                                   value, 0, -1, record.call_index,
                                   record.duration_s))
    if not D:
        raise ObjectiveUnavailable(
            "every design-of-experiments evaluation failed (%d attempts)"
            % max(failures, 1))


def config_to_dict(cfg: BboConfig) -> dict:
    k = cfg.kernel
    return {"restarts": cfg.restarts,
            "init_pop_size": cfg.init_pop_size,
            "xi": cfg.xi,
            "budget": cfg.budget,
            "max_atoms": cfg.max_atoms,
            "shingle_capacity": cfg.shingle_capacity,
            "master_seed": cfg.master_seed,
            "doe_smiles": list(cfg.doe_smiles),
            "ea": {"steps": cfg.ea.steps,
                   "insert_per_step": cfg.ea.insert_per_step,
                   "perturbations": cfg.ea.perturbations,
                   "max_attempts": cfg.ea.max_attempts,
                   "max_population": cfg.ea.max_population},
            "kernel": {"family": k.family,
                       "signal_variance": k.signal_variance,
                       "length_scale": k.length_scale,
                       "offset": k.offset,
                       "noise_variance": k.noise_variance,
                       "signal_variance_bounds": list(k.signal_variance_bounds),
                       "length_scale_bounds": list(k.length_scale_bounds),
                       "offset_bounds": list(k.offset_bounds),
                       "noise_variance_bounds":
                           None if k.noise_variance_bounds is None
                           else list(k.noise_variance_bounds)}}


def state_to_dict(cfg: BboConfig, dct: ShingleDictionary, D, next_step) -> dict:
    """Resumable checkpoint.  RNG streams are derived statelessly from
    (master seed, step, restart, phase), so no cursors are needed."""
    entries = []
    for d in D:
        nz = np.nonzero(d.descriptor)[0]
        entries.append({"key": d.key,
                        "value": d.value,
                        "descriptor": {int(i): int(d.descriptor[i]) for i in nz},
                        "step": d.step_index,
                        "restart": d.restart_index,
                        "call": d.objective_call_index,
                        "wall": d.wall_time})
    return {"schema_version": 1,
            "config": config_to_dict(cfg),
            "dictionary": dct.to_strings(),
            "capacity": dct.capacity,
            "D": entries,
            "next_step": next_step}


def restore_state(state: dict, cfg: BboConfig, cache: CachedObjective):
    """Rebuild (dct, D, next_step) from a checkpoint and replay the cache."""
    dct = ShingleDictionary.from_strings(state["dictionary"], state["capacity"])
    D = []
    for e in state["D"]:
        vec = np.zeros(dct.capacity, dtype=np.int64)
        for i, c in e["descriptor"].items():
            vec[int(i)] = c
        D.append(EvaluatedMolecule(e["key"], e["key"], vec, e["value"],
                                   e["step"], e["restart"], e["call"], e["wall"]))
        cache.replay(e["key"], e["value"], e["wall"], e["step"], e["restart"])
    return dct, D, state["next_step"]


def run_bbo(cfg: BboConfig, objective, *, sequential=True, parallel=1,
            label="bbo", objective_dict=None, checkpoint=None, resume=None):
    """Run the full loop and return its RunLog.

    ``sequential`` zeroes measured times in the log so identical
    configurations yield byte-identical files; ``parallel`` > 1 spreads
    the exact evaluations of each step over that many threads (useful
    with external evaluators), leaving candidate selection unchanged.
    ``checkpoint`` is called with the state dict after every step;
    ``resume`` accepts such a dict.
    """
    cache = CachedObjective(objective, budget=cfg.budget)
    if resume is not None:
        dct, D, step = restore_state(resume, cfg, cache)
    else:
        dct = ShingleDictionary(cfg.shingle_capacity)
        D = []
        _bootstrap_doe(cfg, cache, dct, D)
        step = 1
    gram_cache = _GramCache(dct.capacity, cfg.descriptor_scale())
    for d in D:
        gram_cache.append(d.descriptor)

    header = make_header("bbo", label, config_to_dict(cfg),
                         objective_dict or {}, cfg.master_seed, sequential)
    failed_steps = 0
    unseen_total = 0
    while cache.misses < cfg.budget:
        new, drops = bbo_step(D, cfg, cache, dct, step,
                              gram_cache=gram_cache, parallel=parallel)
        if checkpoint is not None:
            checkpoint(state_to_dict(cfg, dct, D, step + 1))
        if not new:
            if drops:
                failed_steps += 1
                if failed_steps >= _MAX_FAILED_STEPS:
                    header["incomplete"] = True
                    break
            else:
                # no restart produced an eligible candidate; searching
                # again with the same data would be the only option
                header["stalled"] = True
                break
        else:
            failed_steps = 0
        step += 1

    return RunLog(header, records_from_calls(cache.records, sequential))


def run_ea_baseline(cfg: BboConfig, objective, *, sequential=True, label="ea",
                    objective_dict=None) -> RunLog:
    """The same EA as a direct optimizer of the exact objective.

    Bootstraps from the same design-of-experiments molecules, then runs
    one long evolutionary loop whose fitness is the cached exact
    objective; the spent budget ends the run via BudgetExhausted.  The
    log schema matches run_bbo so reports compare the two directly.
    """
    cache = CachedObjective(objective, budget=cfg.budget)
    dct = ShingleDictionary(cfg.shingle_capacity)
    D = []
    _bootstrap_doe(cfg, cache, dct, D)
    initial = [parse_smiles(d.smiles, graphcore.MAX_VERTICES) for d in D]
    ea_cfg = replace(cfg.ea,
                     steps=cfg.budget,  # budget exhaustion is the stop rule
                     seed=_stream(cfg.master_seed, 0, 0, _PHASE_EA),
                     max_atoms=cfg.max_atoms)

    def fitness(g):
        return cache.evaluate(g)

    def on_step(i):
        cache.set_context(i + 1, 0)

    try:
        ea_maximize(fitness, initial, ea_cfg, on_step=on_step)
    except BudgetExhausted:
        pass
    header = make_header("ea", label, config_to_dict(cfg),
                         objective_dict or {}, cfg.master_seed, sequential)
    return RunLog(header, records_from_calls(cache.records, sequential))
