"""Vectorized Monte-Carlo runs of the offline semi-sample and sample-based testers.

Each batch of trials draws its own random k x n bases, query points and input
tables, then decides consistency for the whole batch with one Gaussian
elimination over stacked augmented matrices.  Trials are split into chunks
seeded by (seed, chunk index), so counts do not depend on how chunks are
scheduled across workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .gf import FieldSpec
from .rm import CodeFamily
from .rng import child
from .space import all_vectors, to_index

__all__ = ["batch_eliminate", "batch_rank", "batch_consistent", "batch_random_bases", "semi_sample_rejections", "worker_count"]

DEFAULT_CHUNK = 5000


def worker_count() -> int:
    env = os.environ.get("RMTEST_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def batch_eliminate(field: FieldSpec, a: np.ndarray, ncols: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jordan on the first ``ncols`` columns of each matrix in a stack.

    Returns the reduced stack and a (B, R) mask of pivot rows.
    """
    a = np.array(a, dtype=np.int64, copy=True)
    b, r, _ = a.shape
    used = np.zeros((b, r), dtype=bool)
    ar = np.arange(b)
    inv = field.inv_table
    for c in range(ncols):
        col = a[:, :, c]
        cand = (col != 0) & ~used
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = cand.argmax(axis=1)
        prow = a[ar, piv]
        prow = field.vmul(prow, inv[prow[:, c]][:, None])
        factor = np.where(has[:, None], col, 0)
        factor[ar, piv] = 0
        a = field.vsub(a, field.vmul(factor[:, :, None], prow[:, None, :]))
        hb, hp = ar[has], piv[has]
        a[hb, hp] = prow[has]
        used[hb, hp] = True
    return a, used


def batch_rank(field: FieldSpec, m: np.ndarray) -> np.ndarray:
    _, used = batch_eliminate(field, m, m.shape[2])
    return used.sum(axis=1)


def batch_consistent(field: FieldSpec, rows: np.ndarray, values: np.ndarray, valid: np.ndarray | None = None) -> np.ndarray:
    """For each trial: is ``rows @ c = values`` solvable on the valid rows?"""
    aug = np.concatenate([rows, values[:, :, None]], axis=2)
    if valid is not None:
        aug = np.where(valid[:, :, None], aug, 0)
    m = rows.shape[2]
    a, used = batch_eliminate(field, aug, m)
    return ~((a[:, :, m] != 0) & ~used).any(axis=1)


def batch_random_bases(field: FieldSpec, count: int, k: int, n: int, rng) -> np.ndarray:
    """(count, k, n) stack of uniform rank-k matrices (rejection sampling)."""
    out = np.empty((count, k, n), dtype=np.int64)
    todo = np.arange(count)
    while todo.size:
        cand = rng.integers(0, field.q, size=(todo.size, k, n))
        ok = batch_rank(field, cand) == k
        out[todo[ok]] = cand[ok]
        todo = todo[~ok]
    return out


def _chunk_rejections(code: CodeFamily, pool: np.ndarray, n: int, k: int, Q: int, size: int, rng, sample_based: bool) -> int:
    field, q = code.field, code.field.q
    local_all = all_vectors(q, k)
    ev = code.basis_rows(k, local_all)  # (q^k, m), fixed chart evaluation
    if sample_based:
        bases = np.broadcast_to(np.eye(n, dtype=np.int64), (size, n, n))
    else:
        bases = batch_random_bases(field, size, k, n, rng)
    z = rng.integers(0, q**k, size=(size, Q))
    which = rng.integers(0, len(pool), size=size)
    if q**k <= 2 * Q:
        # every chart point once; rows not drawn are masked out
        hit = np.zeros((size, q**k), dtype=bool)
        np.put_along_axis(hit, z, True, axis=1)
        amb = field.matmul(np.broadcast_to(local_all, (size,) + local_all.shape), bases)
        vals = pool[which[:, None], to_index(amb, q)]
        rows = np.broadcast_to(ev, (size,) + ev.shape)
        ok = batch_consistent(field, rows, vals, hit)
    else:
        amb = field.matmul(local_all[z], bases)
        vals = pool[which[:, None], to_index(amb, q)]
        ok = batch_consistent(field, ev[z], vals)
    return int((~ok).sum())


def semi_sample_rejections(
    code: CodeFamily,
    pool,
    n: int,
    k: int,
    Q: int,
    trials: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
    workers: int | None = None,
) -> int:
    """Number of rejecting trials of T_k(Q) over inputs drawn uniformly from ``pool``.

    ``pool`` is a (P, q^n) array of input tables.  k == n with identity bases
    gives the sample-based tester.
    """
    pool = np.asarray(pool, dtype=np.int64).reshape(-1, code.field.q**n)
    sample_based = k == n
    sizes = [min(chunk, trials - s) for s in range(0, trials, chunk)]

    def run(i: int) -> int:
        return _chunk_rejections(code, pool, n, k, Q, sizes[i], child(seed, i, tag=7), sample_based)

    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(sizes) == 1:
        return sum(run(i) for i in range(len(sizes)))
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return sum(ex.map(run, range(len(sizes))))
