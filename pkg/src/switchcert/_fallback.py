"""Pure numpy implementations of the compiled kernels in ``_kernels.pyx``.

Same signatures, same in-place output conventions. Used when the extension
is not built or when ``SWITCHCERT_PURE=1``.
"""

import numpy as np

NORM_ONE, NORM_INF, NORM_SPECTRAL, NORM_FROBENIUS, NORM_WEIGHTED = range(5)

# leaves evaluated per numpy batch
_BATCH_DEPTH_LEAVES = 1 << 15


def _batch_norms(prods, norm_code, lt, lt_inv):
    if norm_code == NORM_ONE:
        return np.abs(prods).sum(axis=1).max(axis=1)
    if norm_code == NORM_INF:
        return np.abs(prods).sum(axis=2).max(axis=1)
    if norm_code == NORM_FROBENIUS:
        return np.sqrt((prods * prods).sum(axis=(1, 2)))
    if norm_code == NORM_WEIGHTED:
        prods = lt @ prods @ lt_inv
    return np.linalg.norm(prods, ord=2, axis=(1, 2))


def _expand(mats, prods, seqs):
    b, M = prods.shape[0], mats.shape[0]
    # child of prefix i with mode s lands at i * M + s
    # stacked matmul: each product is computed independently of the batch shape
    prods = np.matmul(mats[None], prods[:, None]).reshape(b * M, *mats.shape[1:])
    seqs = np.concatenate([np.repeat(seqs, M, axis=0), np.tile(np.arange(M), b)[:, None]], axis=1)
    return prods, seqs


def _sweep(mats, prods, seqs, h, norm_code, lt, lt_inv, log_eps, rank_table,
           best, witness, per_seq):
    M = mats.shape[0]
    depth = seqs.shape[1]
    per_prefix = M ** (h - depth)
    if prods.shape[0] * per_prefix > _BATCH_DEPTH_LEAVES:
        if prods.shape[0] == 1:
            prods, seqs = _expand(mats, prods, seqs)
            per_prefix //= M
        # chunks in order keep lexicographic tie-breaking intact
        step = max(1, _BATCH_DEPTH_LEAVES // per_prefix)
        for i in range(0, prods.shape[0], step):
            _sweep(mats, prods[i:i + step], seqs[i:i + step], h, norm_code, lt, lt_inv,
                   log_eps, rank_table, best, witness, per_seq)
        return
    while depth < h:
        prods, seqs = _expand(mats, prods, seqs)
        depth += 1

    nrm = _batch_norms(prods, norm_code, lt, lt_inv)
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.log(nrm)
    vals = np.where((nrm > 0.0) & (lg > log_eps), lg, log_eps)

    if per_seq.shape[0] > 0:
        idx = np.zeros(seqs.shape[0], dtype=np.int64)
        for j in range(h):
            idx = idx * M + seqs[:, j]
        per_seq[idx] = vals

    counts = np.stack([(seqs == s).sum(axis=1) for s in range(M)], axis=1)
    rank = np.zeros(seqs.shape[0], dtype=np.int64)
    rem = np.full(seqs.shape[0], h, dtype=np.int64)
    for i in range(M - 1):
        rank += rank_table[i, rem, counts[:, i]]
        rem -= counts[:, i]

    # first maximiser per rank in batch (lexicographic) order
    order = np.lexsort((np.arange(len(vals)), -vals, rank))
    r_sorted = rank[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = r_sorted[1:] != r_sorted[:-1]
    for k in order[first]:
        r = rank[k]
        if vals[k] > best[r]:
            best[r] = vals[k]
            witness[r, :] = seqs[k]


def gamma_subtree(mats, prefix, h, norm_code, lt, lt_inv, log_eps, rank_table,
                  best, witness, per_seq):
    mats = np.asarray(mats, dtype=float)
    prefix = np.asarray(prefix, dtype=np.int64)
    if prefix.shape[0] > h:
        raise ValueError("prefix longer than h")
    n = mats.shape[1]
    prod = np.eye(n)
    for s in prefix:
        prod = mats[s] @ prod
    _sweep(mats, prod[None], prefix[None, :].copy(), h, norm_code, np.asarray(lt),
           np.asarray(lt_inv), log_eps, np.asarray(rank_table), best, witness, per_seq)


def markov_walk(cum, last_pos, start, u, out):
    T = out.shape[0]
    if T == 0:
        return
    state = int(start)
    out[0] = state
    for t in range(T - 1):
        j = int(np.searchsorted(cum[state], u[t], side="right"))
        state = min(j, int(last_pos[state]))
        out[t + 1] = state


def simulate_lognorm(mats, signal, x0, out):
    x = np.array(x0, dtype=float)
    offset = 0.0
    nrm = float(np.sqrt(x @ x))
    out[0] = np.log(nrm) if nrm > 0.0 else -np.inf
    for t, s in enumerate(signal):
        x = mats[s] @ x
        nrm = float(np.sqrt(x @ x))
        if nrm == 0.0:
            out[t + 1] = -np.inf
            continue
        out[t + 1] = offset + np.log(nrm)
        if nrm > 1e100 or nrm < 1e-100:
            x = x / nrm
            offset += np.log(nrm)
