"""Hyperplane collections, the sampling measure nu_W, consistency graphs and extrapolation.

Everything here is exact: point counts are integers, measures are Fractions,
and square roots are compared by squaring.  Monte-Carlo only appears in
``hyperplane_decomposition_check``, which compares two sampling procedures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .functab import FunctionTable, restrict
from .gf import FieldSpec
from .montecarlo import semi_sample_rejections
from .rm import CodeFamily
from .space import Subspace, all_vectors, hyperplane_functionals, nullspace, to_index

__all__ = [
    "LemmaViolation",
    "IntegrityError",
    "HyperplaneCollection",
    "ConsistencyGraph",
    "CliqueCover",
    "random_collection",
    "count_containing",
    "zero_counts",
    "nu_measure",
    "mu_measure",
    "check_sampling_bounds",
    "check_chebyshev",
    "build_consistency_graph",
    "beta",
    "make_transitive",
    "select_clique",
    "extrapolate",
    "planted_collection",
    "hyperplane_decomposition_check",
]


class LemmaViolation(AssertionError):
    """A universally quantified inequality failed; always an implementation bug."""


class IntegrityError(ValueError):
    pass


@lru_cache(maxsize=32)
def _functionals(field: FieldSpec, n: int) -> np.ndarray:
    a = hyperplane_functionals(field, n)
    a.setflags(write=False)
    return a


class HyperplaneCollection:
    """M distinct linear hyperplanes ker(a_i) of F_q^n, with optional local functions.

    ``local`` holds one table per hyperplane over the whole ambient space,
    with -2 off the hyperplane, so restrictions to intersections are plain
    masked comparisons.
    """

    OFF = -2

    def __init__(self, field: FieldSpec, n: int, functionals, local=None) -> None:
        a = np.asarray(functionals, dtype=np.int64).reshape(-1, n)
        if a.shape[0] < 1:
            raise ValueError("collection needs at least one hyperplane")
        a = np.array([_normalize(field, row) for row in a])
        if len({row.tobytes() for row in a}) != len(a):
            raise ValueError("hyperplanes must be pairwise distinct")
        self.field = field
        self.n = n
        self.functionals = a
        self._membership = None
        self._counts = None
        self.local = None
        if local is not None:
            local = np.asarray(local, dtype=np.int64).reshape(len(a), field.q**n)
            if ((local == self.OFF) != ~self.membership).any():
                raise ValueError("local functions must be defined exactly on their hyperplanes")
            self.local = local

    @property
    def M(self) -> int:
        return len(self.functionals)

    @property
    def membership(self) -> np.ndarray:
        """(M, q^n) bool array; row i marks the points of hyperplane i."""
        if self._membership is None:
            m = self.field.matmul(all_vectors(self.field.q, self.n), self.functionals.T).T == 0
            m.setflags(write=False)
            self._membership = m
        return self._membership

    def subspace(self, i: int) -> Subspace:
        return Subspace.span(self.field, self.n, _kernel_basis(self.field, self.functionals[i]))

    def with_local(self, tables) -> "HyperplaneCollection":
        return HyperplaneCollection(self.field, self.n, self.functionals, tables)

    def counts(self) -> np.ndarray:
        """N(x) for every point x, in index order."""
        if self._counts is None:
            c = zero_counts(self.field, self.n, self.functionals)
            c.setflags(write=False)
            self._counts = c
        return self._counts


def zero_counts(field: FieldSpec, n: int, functionals) -> np.ndarray:
    """#{a in functionals : <a, x> = 0} for every x, in O(n q^(n+2)) integer work.

    Coordinates are traded one at a time: axis i starts as the digit a_i and
    ends as x_i, while a trailing axis carries the partial sum of a_j x_j.
    """
    q = field.q
    acc = np.zeros((q**n, q), dtype=np.int64)
    np.add.at(acc[:, 0], to_index(np.asarray(functionals).reshape(-1, n), q), 1)
    acc = acc.reshape((q,) * n + (q,))
    add, mul = field.add_table, field.mul_table
    for ax in range(n):
        out = np.zeros_like(acc)
        for v in range(q):
            dst = out[(slice(None),) * ax + (v,)]
            for u in range(q):
                # partial sum s moves to s + u v
                dst[..., add[mul[u, v]]] += acc[(slice(None),) * ax + (u,)]
        acc = out
    return acc.reshape(q**n, q)[:, 0]


def _normalize(field: FieldSpec, a: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(a)
    if nz.size == 0:
        raise ValueError("zero functional does not define a hyperplane")
    return field.vmul(int(field.inv_table[a[nz[0]]]), a)


def _kernel_basis(field: FieldSpec, a: np.ndarray) -> np.ndarray:
    return nullspace(np.asarray(a)[None, :], field)


def random_collection(field: FieldSpec, n: int, M: int, rng) -> HyperplaneCollection:
    allf = _functionals(field, n)
    if not 1 <= M <= len(allf):
        raise ValueError(f"M must be in [1, {len(allf)}]")
    pick = np.sort(rng.choice(len(allf), size=M, replace=False))
    return HyperplaneCollection(field, n, allf[pick])


def count_containing(coll: HyperplaneCollection, x: int) -> int:
    return int(coll.membership[:, int(x)].sum())


def _as_mask(coll: HyperplaneCollection, S) -> np.ndarray:
    S = np.asarray(S)
    if S.dtype == bool and S.size == coll.field.q**coll.n:
        return S
    mask = np.zeros(coll.field.q**coll.n, dtype=bool)
    mask[S.astype(np.int64)] = True
    return mask


def nu_measure(coll: HyperplaneCollection, S) -> Fraction:
    """Sum over x in S of N(x) / (M q^{n-1})."""
    mask = _as_mask(coll, S)
    total = int(coll.counts()[mask].sum())
    return Fraction(total, coll.M * coll.field.q ** (coll.n - 1))


def mu_measure(coll: HyperplaneCollection, S) -> Fraction:
    mask = _as_mask(coll, S)
    return Fraction(int(mask.sum()), coll.field.q**coll.n)


def check_sampling_bounds(coll: HyperplaneCollection, S) -> dict:
    """1/2 (mu - 4q/M) <= nu <= 2 mu + 8q/M, exactly; raises LemmaViolation otherwise."""
    q, M = coll.field.q, coll.M
    mu, nu = mu_measure(coll, S), nu_measure(coll, S)
    lower = (mu - Fraction(4 * q, M)) / 2
    upper = 2 * mu + Fraction(8 * q, M)
    report = {"mu": mu, "nu": nu, "lower": lower, "upper": upper, "slack_lower": nu - lower, "slack_upper": upper - nu}
    if not lower <= nu <= upper:
        raise LemmaViolation(f"sampling bounds violated: {report}")
    return report


def check_chebyshev(coll: HyperplaneCollection, c) -> dict:
    """Pr_x[|N(x) - M/q| >= cM/q] <= q/(c^2 M), enumerating every point."""
    c = Fraction(c)
    if c <= 0:
        raise ValueError("c must be positive")
    q, M = coll.field.q, coll.M
    N = coll.counts()
    # |N - M/q| >= cM/q  <=>  |qN - M| * den >= num * M
    dev = np.abs(q * N - M) * c.denominator
    hits = int((dev >= c.numerator * M).sum())
    tail = Fraction(hits, q**coll.n)
    bound = Fraction(q) / (c * c * M)
    report = {"c": c, "tail": tail, "bound": bound, "slack": bound - tail}
    if tail > bound:
        raise LemmaViolation(f"Chebyshev tail violated: {report}")
    return report


# -- consistency graph ------------------------------------------------------------------------


@dataclass(frozen=True)
class ConsistencyGraph:
    adjacency: np.ndarray  # (M, M) bool, symmetric, False diagonal

    @property
    def M(self) -> int:
        return len(self.adjacency)

    def edges(self) -> set[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return set(zip(i.tolist(), j.tolist()))

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    @classmethod
    def from_edges(cls, M: int, edges) -> "ConsistencyGraph":
        adj = np.zeros((M, M), dtype=bool)
        for i, j in edges:
            if i == j:
                raise ValueError("self-loop")
            adj[i, j] = adj[j, i] = True
        return cls(adj)


def build_consistency_graph(coll: HyperplaneCollection) -> ConsistencyGraph:
    """(i, j) is an edge iff f_i and f_j agree on every point of W_i and W_j."""
    if coll.local is None:
        raise ValueError("collection has no local functions")
    L, mem = coll.local, coll.membership
    M = coll.M
    adj = np.zeros((M, M), dtype=bool)
    for i in range(M - 1):
        both = mem[i][None, :] & mem[i + 1 :]
        clash = both & (L[i][None, :] != L[i + 1 :])
        adj[i, i + 1 :] = ~clash.any(axis=1)
    adj |= adj.T
    return ConsistencyGraph(adj)


def beta(g: ConsistencyGraph) -> Fraction:
    """Max over non-edges (i, j) of |common neighbours| / M; 0 if the graph is complete."""
    a = g.adjacency.astype(np.int64)
    common = a @ a
    non = ~g.adjacency
    np.fill_diagonal(non, False)
    if not non.any():
        return Fraction(0)
    return Fraction(int(common[non].max()), g.M)


@dataclass(frozen=True)
class CliqueCover:
    cliques: tuple[tuple[int, ...], ...]
    removed: frozenset
    beta: Fraction
    M: int

    @property
    def removed_count(self) -> int:
        return len(self.removed)

    @property
    def within_bound(self) -> bool:
        """removed <= 3 sqrt(beta) M^2, compared by squaring."""
        return Fraction(self.removed_count) ** 2 <= 9 * self.beta * Fraction(self.M) ** 4

    def retained(self) -> ConsistencyGraph:
        edges = [(u, v) for c in self.cliques for i, u in enumerate(c) for v in c[i + 1 :]]
        return ConsistencyGraph.from_edges(self.M, edges)


def _similar(common: int, size: int, b: Fraction) -> bool:
    # common >= (1 - 2 sqrt(b)) size  <=>  size - common <= 2 sqrt(b) size
    gap = size - common
    return gap <= 0 or Fraction(gap) ** 2 <= 4 * b * size * size


def make_transitive(g: ConsistencyGraph) -> CliqueCover:
    """Greedy clique extraction; the retained graph is a disjoint union of cliques.

    Take the highest-degree remaining vertex v, keep the neighbours u whose
    closed neighbourhood overlaps N[v] in at least (1 - 2 sqrt(beta)) |N[v]|
    vertices, then drop the vertex with the fewest neighbours inside the
    candidate set (largest index on ties) until it is a clique.
    """
    adj = g.adjacency
    b = beta(g)
    closed = adj | np.eye(g.M, dtype=bool)
    alive = np.ones(g.M, dtype=bool)
    cliques = []
    while alive.any():
        deg = np.where(alive, (adj & alive[None, :]).sum(axis=1), -1)
        v = int(np.argmax(deg))  # smallest index among the highest degrees
        nv = closed[v] & alive
        size = int(nv.sum())
        cand = [v] + [
            int(u) for u in np.flatnonzero(adj[v] & alive) if _similar(int((closed[u] & nv).sum()), size, b)
        ]
        cand.sort()
        while True:
            sub = adj[np.ix_(cand, cand)]
            inside = sub.sum(axis=1)
            if (inside == len(cand) - 1).all():
                break
            worst = min(range(len(cand)), key=lambda i: (inside[i], -cand[i]))
            if cand[worst] == v:
                # never drop the seed; drop its weakest partner instead
                others = [i for i in range(len(cand)) if cand[i] != v]
                worst = min(others, key=lambda i: (inside[i], -cand[i]))
            cand.pop(worst)
        cliques.append(tuple(cand))
        alive[cand] = False
    kept = {(u, w) for c in cliques for i, u in enumerate(c) for w in c[i + 1 :]}
    removed = frozenset(g.edges() - kept)
    cover = CliqueCover(tuple(cliques), removed, b, g.M)
    if beta(cover.retained()) != 0:
        raise IntegrityError("clique extraction left a non-transitive graph")
    return cover


def select_clique(cover: CliqueCover) -> tuple[int, ...]:
    """Largest clique; ties go to the one with the smallest member."""
    return min(cover.cliques, key=lambda c: (-len(c), min(c)))


def extrapolate(coll: HyperplaneCollection, clique) -> FunctionTable:
    """F(x) = f_j(x) for the first clique member j containing x, 0 off their union."""
    if coll.local is None:
        raise ValueError("collection has no local functions")
    clique = sorted(int(j) for j in clique)
    size = coll.field.q**coll.n
    F = np.zeros(size, dtype=np.int64)
    seen = np.zeros(size, dtype=bool)
    for j in clique:
        on = coll.membership[j]
        clash = on & seen & (coll.local[j] != F)
        if clash.any():
            raise IntegrityError(f"clique member {j} disagrees with earlier members")
        new = on & ~seen
        F[new] = coll.local[j][new]
        seen |= on
    return FunctionTable(coll.field, coll.n, F)


def _pencil(field: FieldSpec, n: int, rng) -> np.ndarray:
    """The q + 1 hyperplanes through a random codimension-2 subspace; they cover F_q^n."""
    from .space import random_full_rank

    a, b = random_full_rank(field, 2, n, rng)
    rows = [b] + [field.vadd(a, field.vmul(lam, b)) for lam in range(field.q)]
    return np.array([_normalize(field, r) for r in rows])


def planted_collection(code: CodeFamily, n: int, M: int, share, noise: int, rng, cover: bool = True):
    """Hyperplanes carrying restrictions of two codewords: g on a ``share`` of them, g' elsewhere.

    Returns (collection, f, g, planted clique, eps) where f is g with ``noise``
    random corruptions and eps is the largest dist(g|W, f|W) over the clique.
    With ``cover`` the clique contains a pencil of q + 1 hyperplanes, so its
    union is the whole space.
    """
    field = code.field
    allf = _functionals(field, n)
    keys = {row.tobytes(): i for i, row in enumerate(allf)}
    forced = [keys[r.tobytes()] for r in _pencil(field, n, rng)] if cover else []
    if M < len(forced) or M > len(allf):
        raise ValueError(f"M must be in [{len(forced)}, {len(allf)}]")
    rest = np.setdiff1d(np.arange(len(allf)), forced)
    pick = np.concatenate([forced, rng.choice(rest, size=M - len(forced), replace=False)]).astype(np.int64)
    order = rng.permutation(M)
    pick = pick[order]
    coll = HyperplaneCollection(field, n, allf[pick])
    g = code.random_codeword(n, rng)
    h = code.random_codeword(n, rng)
    while h == g:
        h = code.random_codeword(n, rng)
    size = field.q**n
    f = g.values.copy()
    pts = rng.choice(size, size=noise, replace=False)
    f[pts] = field.vadd(f[pts], rng.integers(1, field.q, size=noise))
    na = min(M, max(len(forced), 1, math.ceil(Fraction(share) * M)))
    forced_pos = np.flatnonzero(order < len(forced))
    others = np.setdiff1d(np.arange(M), forced_pos)
    members = np.sort(np.concatenate([forced_pos, rng.choice(others, size=na - len(forced_pos), replace=False)]))
    src = np.where(np.isin(np.arange(M), members)[:, None], g.values[None, :], h.values[None, :])
    coll = coll.with_local(np.where(coll.membership, src, HyperplaneCollection.OFF))
    per = [Fraction(int(((f != g.values) & coll.membership[j]).sum()), field.q ** (n - 1)) for j in members]
    return coll, FunctionTable(field, n, f), g, tuple(members.tolist()), max(per)


# -- hyperplane decomposition of the rejection probability --------------------------------------


def hyperplane_decomposition_check(
    code: CodeFamily, f: FunctionTable, k: int, Q: int, trials: int, seed: int
) -> dict:
    """Pr[T_k^f rejects] against E_W Pr[T_k^{f|W} rejects], W a uniform hyperplane.

    The right side runs the same engine over the pool of all restrictions
    f|W; at k = n - 1 the outer average is stratified over every hyperplane.
    """
    n, field = f.n, f.field
    if not n > k:
        raise ValueError("need n > k")
    direct = semi_sample_rejections(code, f.values, n, k, Q, trials, seed)
    subs = [Subspace.span(field, n, _kernel_basis(field, a)) for a in _functionals(field, n)]
    pool = np.stack([restrict(f, w).table.values for w in subs])
    if k == n - 1:
        # each restriction is a single (n-1)-space: its rejection chance is the sample-based one
        per = trials // len(pool) + 1
        rej = [semi_sample_rejections(code, pool[i], n - 1, k, Q, per, seed + 1 + i) for i in range(len(pool))]
        two_stage = Fraction(sum(rej), per * len(pool))
        n2 = per * len(pool)
    else:
        two_stage = Fraction(semi_sample_rejections(code, pool, n - 1, k, Q, trials, seed + 1), trials)
        n2 = trials
    p1 = Fraction(direct, trials)
    pooled = float((p1 * trials + two_stage * n2) / (trials + n2))
    se = math.sqrt(max(pooled * (1 - pooled), 0.0) * (1 / trials + 1 / n2))
    diff = abs(float(p1 - two_stage))
    return {
        "direct": p1,
        "two_stage": two_stage,
        "trials": (trials, n2),
        "sigma": se,
        "agree": diff <= 3 * se if se > 0 else diff == 0,
    }
