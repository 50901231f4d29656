"""Mode signals: hidden-Markov, periodic and explicit; exact long-run block frequencies;
empirical statistics and trajectory simulation.

Chain states are 0-based; modes are 1-based. ``partition[s - 1]`` lists the
states that emit mode ``s``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import _backend
from .matlib import InvalidInput
from .model import ActivationBounds, SwitchedSystem

STOCHASTIC_TOL = 1e-12
LIFTED_STATE_LIMIT = 200_000
DENSE_SOLVE_LIMIT = 2_000
TAIL_FRACTION = 0.1


@dataclass(frozen=True, eq=False)
class HiddenMarkovSpec:
    transition: np.ndarray
    initial_state: int
    partition: tuple

    def __post_init__(self):
        P = np.array(self.transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise InvalidInput("transition must be a nonempty square matrix")
        if not np.all(np.isfinite(P)) or np.any(P < 0.0):
            raise InvalidInput("transition probabilities must be finite and nonnegative")
        bad = np.flatnonzero(np.abs(P.sum(axis=1) - 1.0) > STOCHASTIC_TOL)
        if bad.size:
            raise InvalidInput(f"row {int(bad[0])} of the transition matrix does not sum to 1")
        S = P.shape[0]
        parts = tuple(tuple(sorted(int(v) for v in part)) for part in self.partition)
        if not parts:
            raise InvalidInput("partition needs at least one mode")
        flat = [v for part in parts for v in part]
        if sorted(flat) != list(range(S)):
            raise InvalidInput("partition must cover every state exactly once")
        g0 = int(self.initial_state)
        if not 0 <= g0 < S:
            raise InvalidInput(f"initial state {g0} outside 0..{S - 1}")
        P.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "partition", parts)
        object.__setattr__(self, "initial_state", g0)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def M(self) -> int:
        return len(self.partition)

    @property
    def mode_of_state(self) -> np.ndarray:
        out = np.empty(self.n_states, dtype=np.int64)
        for s, part in enumerate(self.partition):
            out[list(part)] = s + 1
        return out


@dataclass(frozen=True)
class PeriodicSignal:
    """Repeats ``pattern`` (1-based modes) from index 0."""

    pattern: tuple

    def __post_init__(self):
        pat = tuple(int(s) for s in self.pattern)
        if not pat or min(pat) < 1:
            raise InvalidInput("pattern must be a nonempty list of 1-based modes")
        object.__setattr__(self, "pattern", pat)


def periodic_chain(pattern, M: int | None = None) -> HiddenMarkovSpec:
    """Deterministic cycle whose state ``i`` emits ``pattern[i]``."""
    pat = PeriodicSignal(pattern).pattern
    L = len(pat)
    M = max(pat) if M is None else M
    P = np.zeros((L, L))
    P[np.arange(L), (np.arange(L) + 1) % L] = 1.0
    partition = [[i for i in range(L) if pat[i] == s] for s in range(1, M + 1)]
    return HiddenMarkovSpec(P, 0, partition)


def gilbert_elliott(p: float, q: float, e: float, f: float) -> HiddenMarkovSpec:
    """Packet-loss channel; mode 1 = delivered, mode 2 = lost.

    Full state order: (Good, ok), (Bad, ok), (Good, lost), (Bad, lost); start
    in (Good, ok). ``p`` is P(Good -> Bad), ``q`` is P(Bad -> Good), ``e`` and
    ``f`` the loss probabilities in Good and Bad. States unreachable from the
    start (e.g. (Good, lost) when ``e == 0``) are dropped.
    """
    for name, v in (("p", p), ("q", q), ("e", e), ("f", f)):
        if not 0.0 <= v <= 1.0:
            raise InvalidInput(f"{name} must lie in [0, 1], got {v}")
    chan = np.array([[1 - p, p], [q, 1 - q]])
    loss = np.array([e, f])
    P = np.zeros((4, 4))
    for i in range(4):
        ci = i % 2
        for j in range(4):
            cj, lost = j % 2, j >= 2
            P[i, j] = chan[ci, cj] * (loss[cj] if lost else 1.0 - loss[cj])
    keep = sorted(_reachable(P, 0))
    P = P[np.ix_(keep, keep)]
    P = P / P.sum(axis=1, keepdims=True)
    relabel = {old: new for new, old in enumerate(keep)}
    partition = [[relabel[i] for i in (0, 1) if i in relabel], [relabel[i] for i in (2, 3) if i in relabel]]
    return HiddenMarkovSpec(P, 0, partition)


def random_hidden_markov(n_states: int, M: int, rng, sparsity: float = 0.5,
                         mode_weights=None) -> HiddenMarkovSpec:
    """Random irreducible chain (a Hamiltonian cycle plus random edges) with a random partition.

    ``mode_weights`` scales transition mass into each mode's states.
    """
    rng = np.random.default_rng(rng)
    if n_states < 1 or M < 1:
        raise InvalidInput("need n_states >= 1 and M >= 1")
    perm = rng.permutation(n_states)
    W = rng.random((n_states, n_states)) * (rng.random((n_states, n_states)) >= sparsity)
    W[perm, np.roll(perm, -1)] += rng.random(n_states) + 0.05
    modes = rng.integers(1, M + 1, size=n_states)
    if mode_weights is not None:
        W = W * np.asarray(mode_weights, dtype=float)[modes - 1][None, :]
        W[perm, np.roll(perm, -1)] += 1e-3
    P = W / W.sum(axis=1, keepdims=True)
    partition = [[i for i in range(n_states) if modes[i] == s] for s in range(1, M + 1)]
    return HiddenMarkovSpec(P, int(rng.integers(n_states)), partition)


def _reachable(P, start, reverse=False):
    adj = P.T if reverse else P
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u] > 0.0):
            v = int(v)
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def is_irreducible(spec: HiddenMarkovSpec) -> bool:
    S = spec.n_states
    g0 = spec.initial_state
    return len(_reachable(spec.transition, g0)) == S and len(_reachable(spec.transition, g0, True)) == S


def _require_irreducible(spec):
    if not is_irreducible(spec):
        raise InvalidInput("the chain is reducible; an irreducible chain is required")


def _bfs_layers(P, start):
    layer = np.full(P.shape[0], -1, dtype=np.int64)
    layer[start] = 0
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(P[u] > 0.0):
            if layer[v] < 0:
                layer[v] = layer[u] + 1
                queue.append(int(v))
    return layer


def chain_period(spec: HiddenMarkovSpec) -> int:
    """gcd over edges ``u -> v`` of ``layer(u) + 1 - layer(v)`` for BFS layers from the start."""
    _require_irreducible(spec)
    P = spec.transition
    layer = _bfs_layers(P, spec.initial_state)
    us, vs = np.nonzero(P > 0.0)
    diffs = np.abs(layer[us] + 1 - layer[vs])
    return int(reduce(math.gcd, diffs.tolist(), 0))


def sample_states(spec: HiddenMarkovSpec, T: int, seed: int = 0, backend: str | None = None) -> np.ndarray:
    """Chain path ``g(0..T-1)`` by inverse-CDF sampling of each row."""
    if T < 1:
        raise InvalidInput("T must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random(T - 1)
    P = spec.transition
    cum = np.ascontiguousarray(np.cumsum(P, axis=1))
    last_pos = np.array([np.flatnonzero(row > 0.0)[-1] for row in P], dtype=np.int64)
    out = np.empty(T, dtype=np.int64)
    _backend.get(backend).markov_walk(cum, last_pos, spec.initial_state, u, out)
    return out


def sample_signal(spec, T: int, seed: int = 0, backend: str | None = None) -> np.ndarray:
    """Mode signal (1-based) of length ``T`` from a hidden-Markov spec, a periodic
    pattern, or an explicit schedule (returned unchanged, truncated to ``T``)."""
    if T < 1:
        raise InvalidInput("T must be >= 1")
    if isinstance(spec, HiddenMarkovSpec):
        return spec.mode_of_state[sample_states(spec, T, seed, backend)]
    if isinstance(spec, PeriodicSignal):
        pat = np.asarray(spec.pattern, dtype=np.int64)
        return np.resize(pat, T)
    sched = np.asarray(spec, dtype=np.int64).ravel()
    if sched.size < T:
        raise InvalidInput(f"explicit schedule has {sched.size} entries, {T} requested")
    if sched.size and sched.min() < 1:
        raise InvalidInput("modes are 1-based")
    return sched[:T].copy()


@dataclass(frozen=True, eq=False)
class LimitTable:
    h: int
    entries: dict
    tau: int
    d: int
    lifted_state_count: int

    def __getitem__(self, q) -> float:
        return self.entries.get(tuple(q), 0.0)

    def per_mode(self, M: int) -> np.ndarray:
        """Per-mode frequencies from block frequencies: ``sum_q c_s(q)/h * limit(q)``."""
        out = np.zeros(M)
        for q, w in self.entries.items():
            for s in q:
                out[s - 1] += w / self.h
        return out


def _enumerate_paths(P, start, length):
    # all state paths (start, ..., ) of ``length`` states with positive probability
    paths = [((start,), 1.0)]
    for _ in range(length - 1):
        nxt = []
        for path, prob in paths:
            row = P[path[-1]]
            for v in np.flatnonzero(row > 0.0):
                nxt.append((path + (int(v),), prob * row[v]))
        paths = nxt
        if len(paths) > LIFTED_STATE_LIMIT:
            raise InvalidInput(f"lifted path space exceeds {LIFTED_STATE_LIMIT} states")
    return paths


def _stationary(Pbar):
    N = Pbar.shape[0]
    if N <= DENSE_SOLVE_LIMIT:
        D = Pbar.toarray() if sp.issparse(Pbar) else Pbar
        Amat = np.vstack([D.T - np.eye(N), np.ones((1, N))])
        b = np.zeros(N + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(Amat, b, rcond=None)
    else:
        Amat = (Pbar.T - sp.identity(N, format="csr")).tolil()
        Amat[N - 1, :] = np.ones(N)
        b = np.zeros(N)
        b[-1] = 1.0
        pi = spsolve(Amat.tocsc(), b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def limit_oracle(spec: HiddenMarkovSpec, h: int) -> LimitTable:
    """Exact long-run frequencies of the length-``h`` blocks ``(r(ih), ..., r(ih+h-1))``.

    Builds the chain of consecutive ``d = tau*h`` state paths reachable from the
    start, solves for its invariant distribution and averages the block counts.
    """
    if h < 1:
        raise InvalidInput("h must be >= 1")
    tau = chain_period(spec)
    d = tau * h
    P = spec.transition
    modes = spec.mode_of_state

    index = {}
    order = []
    path_cache = {}

    def paths_from(v):
        if v not in path_cache:
            path_cache[v] = _enumerate_paths(P, v, d)
        return path_cache[v]

    first = _enumerate_paths(P, spec.initial_state, d)
    queue = deque()
    for path, _ in first:
        if path not in index:
            index[path] = len(order)
            order.append(path)
            queue.append(path)
    rows, cols, vals = [], [], []
    while queue:
        path = queue.popleft()
        i = index[path]
        last_row = P[path[-1]]
        for v in np.flatnonzero(last_row > 0.0):
            for nxt, prob in paths_from(int(v)):
                j = index.get(nxt)
                if j is None:
                    j = index[nxt] = len(order)
                    order.append(nxt)
                    queue.append(nxt)
                    if len(order) > LIFTED_STATE_LIMIT:
                        raise InvalidInput(
                            f"lifted path chain has more than {LIFTED_STATE_LIMIT} states (tau={tau}, d={d})"
                        )
                rows.append(i)
                cols.append(j)
                vals.append(last_row[v] * prob)
    N = len(order)
    Pbar = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    pi = _stationary(Pbar)

    entries = {}
    for k, path in enumerate(order):
        if pi[k] == 0.0:
            continue
        mp = modes[list(path)]
        for b in range(tau):
            q = tuple(int(s) for s in mp[b * h:(b + 1) * h])
            entries[q] = entries.get(q, 0.0) + float(pi[k]) / tau
    entries = {q: w for q, w in sorted(entries.items()) if w > 1e-15}
    return LimitTable(h, entries, tau, d, N)


@dataclass(frozen=True, eq=False)
class FrequencyStats:
    steps: int
    h: int
    per_mode: np.ndarray
    per_sequence: dict
    tail_min: np.ndarray
    tail_max: np.ndarray
    blocks: int = 0

    @property
    def M(self) -> int:
        return self.per_mode.size


def empirical_frequencies(signal, h: int, M: int | None = None) -> FrequencyStats:
    """Per-mode averages over all steps; per-sequence averages over disjoint blocks from index 0.

    ``tail_min``/``tail_max`` are the extremes of the running per-mode averages
    over the last 10% of steps (heuristic liminf/limsup evidence only).
    """
    sig = np.asarray(signal, dtype=np.int64).ravel()
    T = sig.size
    if h < 1 or T < h:
        raise InvalidInput("need h >= 1 and a signal of length >= h")
    if sig.min() < 1:
        raise InvalidInput("modes are 1-based")
    M = int(sig.max()) if M is None else M
    counts = np.bincount(sig - 1, minlength=M)
    per_mode = counts / T

    nb = T // h
    blocks = sig[: nb * h].reshape(nb, h) - 1
    code = np.zeros(nb, dtype=np.int64)
    for j in range(h):
        code = code * M + blocks[:, j]
    uniq, cnt = np.unique(code, return_counts=True)
    per_seq = {}
    for c, k in zip(uniq.tolist(), cnt.tolist()):
        q = []
        for _ in range(h):
            q.append(c % M + 1)
            c //= M
        per_seq[tuple(reversed(q))] = k / nb

    start = max(1, T - max(1, int(TAIL_FRACTION * T)))
    tmin = np.empty(M)
    tmax = np.empty(M)
    steps = np.arange(start, T + 1)
    for s in range(M):
        run = np.cumsum(sig == s + 1)[start - 1:] / steps
        tmin[s], tmax[s] = run.min(), run.max()
    return FrequencyStats(T, h, per_mode, per_seq, tmin, tmax, nb)


@dataclass
class AssumptionReport:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def check_assumption1(stats: FrequencyStats, bounds: ActivationBounds, tolerance: float = 1e-3) -> AssumptionReport:
    """Empirical per-mode frequencies and their block aggregation against the bounds."""
    if stats.M > bounds.M:
        raise InvalidInput(f"signal uses {stats.M} modes, bounds cover {bounds.M}")
    M = bounds.M
    per_mode = np.zeros(M)
    per_mode[: stats.M] = stats.per_mode
    agg = np.zeros(M)
    for q, w in stats.per_sequence.items():
        for s in q:
            agg[s - 1] += w / stats.h
    viol = []
    lo, hi = np.array(bounds.lower), np.array(bounds.upper)
    for label, freq in (("mode average", per_mode), ("block aggregation", agg)):
        for s in range(M):
            if freq[s] < lo[s] - tolerance or freq[s] > hi[s] + tolerance:
                viol.append(f"{label} of mode {s + 1} = {freq[s]:.6g} outside [{lo[s]:.6g}, {hi[s]:.6g}]")
    return AssumptionReport(not viol, viol)


def simulate_lognorm(system: SwitchedSystem, signal, x0, backend: str | None = None) -> np.ndarray:
    """``ln ||x(t)||_2`` for ``t = 0..T`` under the mode signal (renormalized internally)."""
    sig = np.ascontiguousarray(np.asarray(signal, dtype=np.int64).ravel() - 1)
    if sig.size and (sig.min() < 0 or sig.max() >= system.M):
        raise InvalidInput(f"signal uses modes outside 1..{system.M}")
    x0 = np.ascontiguousarray(np.asarray(x0, dtype=float).ravel())
    if x0.size != system.n:
        raise InvalidInput(f"x0 has length {x0.size}, system dimension is {system.n}")
    out = np.empty(sig.size + 1)
    _backend.get(backend).simulate_lognorm(system.stacked(), sig, x0, out)
    return out
