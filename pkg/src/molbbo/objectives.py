"""Exact-objective plumbing: synthetic objectives, external evaluators,
caching and budget accounting.

Synthetic objectives are pure functions of the molecular graph given a
seed.  The external kind speaks a line protocol over a child process's
standard streams ("EVAL <canonical-smiles>" -> "OK <float>" or
"ERR <message>"), one request in flight per child, with a pool of
children for parallelism.
"""

import hashlib
import os
import selectors
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from queue import Queue
from typing import NamedTuple, Optional

import numpy as np

from . import graphcore
from .graph import MolecularGraph

LINEAR_SHINGLES = "linear_shingles"
ATOM_COUNT = "atom_count"
EXTERNAL = "external"


class ObjectiveError(RuntimeError):
    """Evaluation failed (includes explicit ERR replies)."""


class ObjectiveTimeout(ObjectiveError):
    """The external evaluator missed its reply deadline."""


class ObjectiveProtocolError(ObjectiveError):
    """The external evaluator replied with something unparsable."""


class BudgetExhausted(Exception):
    """Signal that the exact-evaluation budget is spent."""


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: str = LINEAR_SHINGLES
    seed: int = 0
    noise_std: float = 0.0
    command: Optional[str] = None  # external only
    timeout: float = 30.0  # seconds per external reply
    max_atoms: int = 9  # range normalization for linear_shingles

    def __post_init__(self):
        if self.kind not in (LINEAR_SHINGLES, ATOM_COUNT, EXTERNAL):
            raise ValueError("unknown objective kind %r" % (self.kind,))
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if self.kind == EXTERNAL and not self.command:
            raise ValueError("external objective needs a command")


def shingle_weight(code: bytes, seed: int) -> float:
    """Deterministic weight in [-1, 1] for a shingle code under ``seed``."""
    digest = hashlib.blake2b(code, digest_size=8,
                             salt=(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"),
                             person=b"shingle-w").digest()
    return 2.0 * (int.from_bytes(digest, "little") / 2.0**64) - 1.0


class _NoiseMixin:
    def _init_noise(self, spec: ObjectiveSpec):
        self.spec = spec
        self._noise_rng = (np.random.default_rng((spec.seed, 0x5EED))
                          if spec.noise_std > 0 else None)

    def _noisy(self, value: float) -> float:
        if self._noise_rng is not None:
            value += float(self._noise_rng.normal()) * self.spec.noise_std
        return value


class LinearShingleObjective(_NoiseMixin):
    """Sum of seeded per-shingle weights, mapped affinely into [-10, -1].

    The raw sum over a molecule's shingles lies in [-max_atoms, max_atoms]
    because every vertex contributes one weight in [-1, 1]; the affine map
    v = -5.5 + raw * 4.5 / max_atoms pins that box to an eV-like range.
    Restricted to any fixed shingle dictionary the value is exactly
    linear in the count vector.
    """

    def __init__(self, spec: ObjectiveSpec):
        self._init_noise(spec)
        self._weights = {}

    def _weight(self, code: bytes) -> float:
        w = self._weights.get(code)
        if w is None:
            w = shingle_weight(code, self.spec.seed)
            self._weights[code] = w
        return w

    def __call__(self, g: MolecularGraph) -> float:
        raw = sum(self._weight(c) for c in graphcore.shingle_codes(g.types, g.adj))
        return self._noisy(-5.5 + raw * 4.5 / self.spec.max_atoms)

    def close(self):
        pass


class AtomCountObjective(_NoiseMixin):
    """Heavy-atom count; a monotone sanity objective."""

    def __init__(self, spec: ObjectiveSpec):
        self._init_noise(spec)

    def __call__(self, g: MolecularGraph) -> float:
        return self._noisy(float(g.n_atoms))

    def close(self):
        pass


class _Worker:
    """One external child process, one request in flight at a time."""

    def __init__(self, argv):
        self.argv = argv
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, bufsize=0)
        self._buf = b""

    def _readline(self, deadline: float) -> bytes:
        sel = selectors.DefaultSelector()
        sel.register(self.proc.stdout, selectors.EVENT_READ)
        try:
            while b"\n" not in self._buf:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise ObjectiveTimeout("external evaluator timed out")
                if not sel.select(remaining):
                    continue
                chunk = os.read(self.proc.stdout.fileno(), 4096)
                if not chunk:
                    raise ObjectiveProtocolError(
                        "external evaluator closed its output stream")
                self._buf += chunk
        finally:
            sel.close()
        line, self._buf = self._buf.split(b"\n", 1)
        return line

    def request(self, smiles: str, timeout: float) -> float:
        try:
            self.proc.stdin.write(("EVAL %s\n" % smiles).encode("ascii"))
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ObjectiveProtocolError("external evaluator is gone: %s" % exc)
        line = self._readline(time.monotonic() + timeout).decode(
            "ascii", "replace").strip()
        if line.startswith("OK "):
            try:
                return float(line[3:])
            except ValueError:
                raise ObjectiveProtocolError("malformed OK reply: %r" % line)
        if line.startswith("ERR "):
            raise ObjectiveError("evaluator error: %s" % line[4:])
        raise ObjectiveProtocolError("malformed reply: %r" % line)

    def kill(self):
        try:
            self.proc.kill()
            self.proc.wait(timeout=5)
        except Exception:
            pass


class ExternalProcessObjective:
    """Pool of protocol children; evaluate() borrows an idle child."""

    def __init__(self, spec: ObjectiveSpec, pool_size: int = 1):
        self.spec = spec
        argv = shlex.split(spec.command)
        self._idle = Queue()
        self._all = []
        for _ in range(max(1, pool_size)):
            w = _Worker(argv)
            self._all.append(w)
            self._idle.put(w)

    def __call__(self, g: MolecularGraph) -> float:
        worker = self._idle.get()
        replace = False
        try:
            return worker.request(g.canonical_key(), self.spec.timeout)
        except (ObjectiveTimeout, ObjectiveProtocolError):
            # stream state is unknown after these; start a fresh child
            replace = True
            raise
        finally:
            if replace:
                worker.kill()
                self._all.remove(worker)
                fresh = _Worker(shlex.split(self.spec.command))
                self._all.append(fresh)
                self._idle.put(fresh)
            else:
                self._idle.put(worker)

    def close(self):
        for w in list(self._all):
            w.kill()
        self._all.clear()


def make_objective(spec: ObjectiveSpec, pool_size: int = 1):
    """Instantiate the objective named by ``spec``; callable on graphs."""
    if spec.kind == LINEAR_SHINGLES:
        return LinearShingleObjective(spec)
    if spec.kind == ATOM_COUNT:
        return AtomCountObjective(spec)
    return ExternalProcessObjective(spec, pool_size)


class CallRecord(NamedTuple):
    call_index: int  # 1-based, strictly increasing
    key: str  # canonical SMILES
    value: float
    duration_s: float
    cpu_s: float  # process CPU time at completion
    wall_s: float  # wall clock since the wrapper was created
    step: int
    restart: int


class CachedObjective:
    """Caching, budget-counting wrapper around an exact objective.

    Repeat calls on the same canonical key return the stored value and do
    not consume budget.  A cache miss past the budget raises
    BudgetExhausted before touching the underlying objective.
    """

    def __init__(self, fn, budget: Optional[int] = None):
        self.fn = fn
        self.budget = budget
        self.cache = {}
        self.records = []
        self.calls = 0  # including cache hits
        self._by_key = {}
        self._lock = threading.Lock()
        self._t0 = time.perf_counter()
        self._step = 0
        self._restart = -1

    @property
    def misses(self) -> int:
        return len(self.records)

    def record_for(self, key: str) -> CallRecord:
        return self._by_key[key]

    def replay(self, key: str, value: float, duration: float, step: int,
               restart: int):
        """Restore one prior call from a checkpoint without re-evaluating."""
        with self._lock:
            record = CallRecord(len(self.records) + 1, key, value, duration,
                                0.0, 0.0, step, restart)
            self.cache[key] = value
            self.records.append(record)
            self._by_key[key] = record

    def set_context(self, step: int, restart: int):
        """Tag subsequent call records with a step/restart provenance."""
        self._step = step
        self._restart = restart

    def __call__(self, g: MolecularGraph) -> float:
        return self.evaluate(g)

    def evaluate(self, g: MolecularGraph) -> float:
        key = g.canonical_key()
        with self._lock:
            self.calls += 1
            if key in self.cache:
                return self.cache[key]
            if self.budget is not None and len(self.records) >= self.budget:
                raise BudgetExhausted()
        start = time.perf_counter()
        value = float(self.fn(g))
        end = time.perf_counter()
        with self._lock:
            self.cache[key] = value
            record = CallRecord(
                len(self.records) + 1, key, value, end - start,
                time.process_time(), end - self._t0,
                self._step, self._restart)
            self.records.append(record)
            self._by_key[key] = record
        return value
