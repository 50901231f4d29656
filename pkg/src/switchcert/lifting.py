"""Mode sequences, compositions, lifted products and the gamma coefficient tables.

Sequences are tuples of 1-based mode ids ``(q_1, ..., q_h)``; the lifted
product applies ``q_1`` first, so ``Gamma_q = A_{q_h} ... A_{q_1}``.
Compositions are count vectors ``z`` with ``sum(z) == h``, ordered
lexicographically ascending.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from . import _backend
from .matlib import SPECTRAL, InvalidInput, NormKind, mat_norm
from .model import SwitchedSystem

MATERIALIZE_LIMIT = 2 ** 24
SEQUENCE_LIMIT = 2 ** 32
DEFAULT_SPLIT_DEPTH = 4


def _check_sequence(q, M: int) -> tuple:
    q = tuple(int(s) for s in q)
    if not q:
        raise InvalidInput("mode sequences need length >= 1")
    if any(not 1 <= s <= M for s in q):
        raise InvalidInput(f"sequence {q} has modes outside 1..{M}")
    return q


def lifted_product(system: SwitchedSystem, q) -> np.ndarray:
    q = _check_sequence(q, system.M)
    prod = np.eye(system.n)
    for s in q:
        prod = system[s] @ prod
    return prod


def gamma_of(system: SwitchedSystem, q, norm: NormKind | str = SPECTRAL, epsilon: float = 1e-24) -> float:
    """``ln max(||Gamma_q||, epsilon)``."""
    _check_epsilon(epsilon)
    nrm = mat_norm(lifted_product(system, q), norm)
    return math.log(max(nrm, epsilon))


def count_vector(q, M: int) -> tuple:
    q = _check_sequence(q, M)
    return tuple(q.count(s) for s in range(1, M + 1))


def enumerate_compositions(h: int, M: int) -> list[tuple]:
    if h < 1 or M < 1:
        raise InvalidInput("need h >= 1 and M >= 1")
    return list(_compositions(h, M))


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def variable_counts(h: int, M: int) -> tuple[int, int]:
    """Variable counts of the per-sequence and the per-composition programs."""
    if h < 1 or M < 1:
        raise InvalidInput("need h >= 1 and M >= 1")
    return M ** h, math.comb(h + M - 1, M - 1)


@lru_cache(maxsize=64)
def _rank_table(h: int, M: int) -> np.ndarray:
    # table[i, rem, z]: compositions that agree on parts < i and have a smaller part i
    def tails(k, r):
        if k == 0:
            return 1 if r == 0 else 0
        return math.comb(r + k - 1, k - 1)

    table = np.zeros((M, h + 1, h + 1), dtype=np.int64)
    for i in range(M - 1):
        k = M - i - 1
        for rem in range(h + 1):
            acc = 0
            for z in range(rem + 1):
                table[i, rem, z] = acc
                acc += tails(k, rem - z)
    table.setflags(write=False)
    return table


def composition_rank(z, h: int) -> int:
    """Position of ``z`` in :func:`enumerate_compositions` order."""
    M = len(z)
    table = _rank_table(h, M)
    rank, rem = 0, h
    for i in range(M - 1):
        rank += int(table[i, rem, z[i]])
        rem -= z[i]
    return rank


def _check_epsilon(epsilon):
    if not 0.0 < epsilon < 1.0:
        raise InvalidInput(f"epsilon must lie in (0, 1), got {epsilon}")


@dataclass(frozen=True, eq=False)
class GammaTables:
    """Per-composition maxima of the gamma coefficients, with witnesses.

    ``witnesses[k]`` is the lexicographically first sequence (1-based modes)
    attaining ``gamma_prime[k]`` for ``compositions[k]``.
    """

    h: int
    M: int
    norm: NormKind
    epsilon: float
    compositions: tuple
    gamma_prime: np.ndarray
    witnesses: np.ndarray
    per_sequence: np.ndarray | None = None

    def index_of(self, z) -> int:
        z = tuple(int(v) for v in z)
        if len(z) != self.M or sum(z) != self.h or min(z) < 0:
            raise InvalidInput(f"{z} is not a composition of {self.h} into {self.M} parts")
        return composition_rank(z, self.h)

    def witness(self, z) -> tuple:
        return tuple(int(s) for s in self.witnesses[self.index_of(z)])

    @property
    def per_composition(self) -> dict:
        return {
            z: (float(self.gamma_prime[k]), tuple(int(s) for s in self.witnesses[k]))
            for k, z in enumerate(self.compositions)
        }

    def sequence_index(self, q) -> int:
        q = _check_sequence(q, self.M)
        idx = 0
        for s in q:
            idx = idx * self.M + (s - 1)
        return idx

    def gamma_q(self, q) -> float:
        if self.per_sequence is None:
            raise InvalidInput("per-sequence coefficients were not materialized")
        return float(self.per_sequence[self.sequence_index(q)])

    def sequence_counts(self) -> np.ndarray:
        """``(M**h, M)`` count vectors of all sequences in base-M index order."""
        idx = np.arange(self.M ** self.h, dtype=np.int64)
        counts = np.zeros((idx.size, self.M), dtype=np.int64)
        for _ in range(self.h):
            counts[np.arange(idx.size), idx % self.M] += 1
            idx //= self.M
        return counts


def build_gamma_tables(
    system: SwitchedSystem,
    h: int,
    norm: NormKind | str = SPECTRAL,
    epsilon: float = 1e-24,
    materialize_sequences: bool = False,
    *,
    workers: int | None = None,
    split_depth: int = DEFAULT_SPLIT_DEPTH,
    backend: str | None = None,
) -> GammaTables:
    """Sweep all ``M**h`` sequences once, carrying prefix products down the tree.

    The tree is cut at ``split_depth``; subtrees run on a thread pool and are
    merged in lexicographic order, so results do not depend on ``workers``.
    """
    if isinstance(norm, str):
        norm = NormKind(norm)
    _check_epsilon(epsilon)
    if h < 1:
        raise InvalidInput("h must be >= 1")
    M, n = system.M, system.n
    total = M ** h
    if materialize_sequences and total > MATERIALIZE_LIMIT:
        raise InvalidInput(f"refusing to materialize {total} per-sequence coefficients (limit 2**24)")
    if total > SEQUENCE_LIMIT:
        raise InvalidInput(f"M**h = {total} sequences is beyond the supported range (2**32)")

    kern = _backend.get(backend)
    mats = system.stacked()
    lt, lt_inv = norm.transforms(n)
    log_eps = math.log(epsilon)
    table = _rank_table(h, M)
    comps = tuple(_compositions(h, M))
    F = len(comps)

    per_seq = np.full(total if materialize_sequences else 0, np.nan)
    depth = max(0, min(split_depth, h))
    prefixes = [np.array(p, dtype=np.int64) for p in product(range(M), repeat=depth)]

    def run(prefix):
        best = np.full(F, -np.inf)
        wit = np.zeros((F, h), dtype=np.int32)
        kern.gamma_subtree(mats, prefix, h, norm.code, lt, lt_inv, log_eps, table, best, wit, per_seq)
        return best, wit

    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(prefixes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(run, prefixes)
            best, wit = _merge(results, F, h)
    else:
        best, wit = _merge(map(run, prefixes), F, h)

    if np.any(~np.isfinite(best) & (best < 0)):
        raise RuntimeError("internal error: a composition received no sequence")
    best.setflags(write=False)
    wit = wit + 1
    wit.setflags(write=False)
    if materialize_sequences:
        per_seq.setflags(write=False)
    return GammaTables(
        h=h, M=M, norm=norm, epsilon=float(epsilon), compositions=comps,
        gamma_prime=best, witnesses=wit, per_sequence=per_seq if materialize_sequences else None,
    )


def _merge(results, F, h):
    best = np.full(F, -np.inf)
    wit = np.zeros((F, h), dtype=np.int32)
    for b, w in results:
        better = b > best
        best[better] = b[better]
        wit[better] = w[better]
    return best, wit
