"""Linear algebra and finite geometry of F_q^n.

Points are integers ``idx = sum_j x_j q^j`` (coordinate 0 least significant).
Matrices are plain int64 numpy arrays whose entries are field indices.
Subspaces are stored by the reduced row-echelon form of a basis, which makes
structural equality coincide with subspace equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .gf import FieldSpec

__all__ = [
    "MAX_TABLE_ENTRIES",
    "SpaceError",
    "Subspace",
    "AffineFlat",
    "check_table_size",
    "to_vectors",
    "to_index",
    "all_vectors",
    "rref",
    "rank",
    "nullspace",
    "gaussian_binomial",
    "random_full_rank",
    "random_subspace",
    "random_invertible",
    "enumerate_subspaces",
    "enumerate_hyperplanes",
    "hyperplane_functionals",
    "intersect",
    "enumerate_points",
    "enumerate_affine_flats",
    "format_subspace",
    "parse_subspace",
]

MAX_TABLE_ENTRIES = 2**28


class SpaceError(ValueError):
    pass


def check_table_size(q: int, n: int) -> int:
    size = q**n
    if size > MAX_TABLE_ENTRIES:
        raise SpaceError(f"q^n = {q}^{n} exceeds the dense-table limit of 2^28 entries")
    return size


# -- point indexing ----------------------------------------------------------


def to_vectors(idx, q: int, n: int) -> np.ndarray:
    """Point indices -> coordinate vectors, shape ``idx.shape + (n,)``."""
    idx = np.asarray(idx, dtype=np.int64)
    powers = q ** np.arange(n, dtype=np.int64)
    return (idx[..., None] // powers) % q


def to_index(vecs, q: int) -> np.ndarray:
    vecs = np.asarray(vecs, dtype=np.int64)
    powers = q ** np.arange(vecs.shape[-1], dtype=np.int64)
    return vecs @ powers


def all_vectors(q: int, n: int) -> np.ndarray:
    """Every vector of F_q^n, row i being the vector with index i."""
    return to_vectors(np.arange(q**n, dtype=np.int64), q, n)


# -- elimination ---------------------------------------------------------------


def _rref(m, field: FieldSpec) -> tuple[np.ndarray, list[int]]:
    a = np.array(m, dtype=np.int64, copy=True)
    if a.ndim != 2:
        raise SpaceError("rref expects a 2-D matrix")
    rows, cols = a.shape
    if field.q == 2:
        return _rref_gf2(a)
    r = 0
    pivots: list[int] = []
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        pr = r + int(nz[0])
        if pr != r:
            a[[r, pr]] = a[[pr, r]]
        a[r] = field.vmul(a[r], field.inv(int(a[r, c])))
        f = a[:, c].copy()
        f[r] = 0
        hit = np.flatnonzero(f)
        if hit.size:
            a[hit] = field.vsub(a[hit], field.vmul(f[hit, None], a[r][None, :]))
        pivots.append(c)
        r += 1
    return a, pivots


def _rref_gf2(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    # over F_2 pivots are already 1 and row operations are XOR
    rows, cols = a.shape
    r = 0
    pivots: list[int] = []
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        pr = r + int(nz[0])
        if pr != r:
            a[[r, pr]] = a[[pr, r]]
        hit = np.flatnonzero(a[:, c])
        hit = hit[hit != r]
        if hit.size:
            a[hit] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def rref(m, field: FieldSpec) -> tuple[np.ndarray, int]:
    """Reduced row-echelon form over F_q and the rank.

    The returned matrix keeps the input shape; rows past ``rank`` are zero.
    """
    a, piv = _rref(m, field)
    return a, len(piv)


def rank(m, field: FieldSpec) -> int:
    return len(_rref(m, field)[1])


def nullspace(m, field: FieldSpec) -> np.ndarray:
    """Basis (as rows) of {x : m x = 0}."""
    m = np.asarray(m, dtype=np.int64)
    cols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(cols, dtype=np.int64)
    a, piv = _rref(m, field)
    free = [c for c in range(cols) if c not in piv]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for i, fc in enumerate(free):
        basis[i, fc] = 1
        for r, pc in enumerate(piv):
            basis[i, pc] = field.neg(int(a[r, fc]))
    return basis


def gaussian_binomial(n: int, k: int, q: int) -> int:
    """Number of k-dimensional subspaces of F_q^n, in exact integers."""
    if k < 0 or k > n:
        raise SpaceError(f"gaussian_binomial needs 0 <= k <= n, got n={n}, k={k}")
    num = den = 1
    for i in range(k):
        num *= q**n - q**i
        den *= q**k - q**i
    return num // den


# -- subspaces -----------------------------------------------------------------


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of F_q^n given by its RREF basis (k rows)."""

    field: FieldSpec
    n: int
    basis: tuple[tuple[int, ...], ...]

    @classmethod
    def span(cls, field: FieldSpec, n: int, rows) -> "Subspace":
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, n)
        a, r = rref(rows, field)
        return cls(field, n, tuple(tuple(int(x) for x in row) for row in a[:r]))

    @classmethod
    def zero(cls, field: FieldSpec, n: int) -> "Subspace":
        return cls(field, n, ())

    @classmethod
    def full(cls, field: FieldSpec, n: int) -> "Subspace":
        return cls.span(field, n, np.eye(n, dtype=np.int64))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def ambient_dim(self) -> int:
        return self.n

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.array(self.basis, dtype=np.int64).reshape(self.dim, self.n)
        m.setflags(write=False)
        return m

    @cached_property
    def pivots(self) -> tuple[int, ...]:
        return tuple(int(np.flatnonzero(row)[0]) for row in self.matrix)

    def annihilator(self) -> np.ndarray:
        """Functionals (rows) vanishing exactly on this subspace."""
        if self.dim == 0:
            return np.eye(self.n, dtype=np.int64)
        return nullspace(self.matrix, self.field)

    def contains(self, vec) -> bool:
        vec = np.asarray(vec, dtype=np.int64).reshape(1, self.n)
        if self.dim == 0:
            return not vec.any()
        return rank(np.vstack([self.matrix, vec]), self.field) == self.dim

    def contains_subspace(self, other: "Subspace") -> bool:
        if other.dim == 0:
            return True
        ann = self.annihilator()
        return not self.field.matmul(other.matrix, ann.T).any()

    def points(self) -> np.ndarray:
        return enumerate_points(self)


@dataclass(frozen=True)
class AffineFlat:
    """The coset ``shift + direction`` with the shift reduced modulo direction."""

    direction: Subspace
    shift: tuple[int, ...]

    @classmethod
    def make(cls, direction: Subspace, shift) -> "AffineFlat":
        field = direction.field
        s = np.asarray(shift, dtype=np.int64).reshape(direction.n).copy()
        for row, pc in zip(direction.matrix, direction.pivots):
            c = int(s[pc])
            if c:
                s = field.vsub(s, field.vmul(c, row))
        return cls(direction, tuple(int(x) for x in s))

    @property
    def field(self) -> FieldSpec:
        return self.direction.field

    @property
    def n(self) -> int:
        return self.direction.n

    @property
    def dim(self) -> int:
        return self.direction.dim

    @property
    def matrix(self) -> np.ndarray:
        return self.direction.matrix

    def points(self) -> np.ndarray:
        return enumerate_points(self)


def _chart(s: Subspace | AffineFlat) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(s, AffineFlat):
        return s.matrix, np.asarray(s.shift, dtype=np.int64)
    return s.matrix, np.zeros(s.n, dtype=np.int64)


def enumerate_points(s: Subspace | AffineFlat) -> np.ndarray:
    """All q^dim points of the (affine) subspace, in chart-coordinate order.

    Point z (index in F_q^dim) maps to ``z . basis + shift``.
    """
    field = s.field
    basis, shift = _chart(s)
    z = all_vectors(field.q, basis.shape[0])
    if basis.shape[0] == 0:
        pts = shift[None, :]
    else:
        pts = field.vadd(field.matmul(z, basis), shift[None, :])
    return to_index(pts, field.q)


# -- random sampling -------------------------------------------------------------


def random_full_rank(field: FieldSpec, k: int, n: int, rng) -> np.ndarray:
    """Uniform k x n matrix of rank k (rejection sampling)."""
    while True:
        m = rng.integers(0, field.q, size=(k, n), dtype=np.int64)
        if rank(m, field) == k:
            return m


def random_subspace(field: FieldSpec, n: int, k: int, rng) -> Subspace:
    """Uniformly random k-dimensional subspace of F_q^n."""
    if not 0 <= k <= n:
        raise SpaceError(f"need 0 <= k <= n, got k={k}, n={n}")
    if k == 0:
        return Subspace.zero(field, n)
    return Subspace.span(field, n, random_full_rank(field, k, n, rng))


def random_invertible(field: FieldSpec, n: int, rng) -> np.ndarray:
    return random_full_rank(field, n, n, rng)


# -- enumeration -------------------------------------------------------------------


def enumerate_subspaces(field: FieldSpec, n: int, k: int):
    """Yield every k-dimensional subspace of F_q^n once (by RREF pattern)."""
    if not 0 <= k <= n:
        raise SpaceError(f"need 0 <= k <= n, got k={k}, n={n}")
    q = field.q
    for piv in itertools.combinations(range(n), k):
        free = [(i, c) for i, p in enumerate(piv) for c in range(p + 1, n) if c not in piv]
        for vals in itertools.product(range(q), repeat=len(free)):
            m = np.zeros((k, n), dtype=np.int64)
            for i, p in enumerate(piv):
                m[i, p] = 1
            for (i, c), v in zip(free, vals):
                m[i, c] = v
            yield Subspace(field, n, tuple(tuple(int(x) for x in row) for row in m))


def hyperplane_functionals(field: FieldSpec, n: int) -> np.ndarray:
    """All nonzero functionals with leading nonzero coordinate 1, one per hyperplane.

    Row order follows point-index order of the functional vectors.
    """
    vecs = all_vectors(field.q, n)[1:]
    lead = vecs[np.arange(len(vecs)), (vecs != 0).argmax(axis=1)]
    return vecs[lead == 1]


def enumerate_hyperplanes(field: FieldSpec, n: int) -> list[Subspace]:
    """All (q^n - 1)/(q - 1) linear hyperplanes, as kernels of functionals."""
    if n < 1:
        raise SpaceError("hyperplanes need n >= 1")
    out = []
    for a in hyperplane_functionals(field, n):
        out.append(Subspace.span(field, n, nullspace(a[None, :], field)))
    return out


def intersect(u: Subspace, v: Subspace) -> Subspace:
    if u.n != v.n or u.field != v.field:
        raise SpaceError("subspaces live in different spaces")
    ann = np.vstack([u.annihilator(), v.annihilator()])
    return Subspace.span(u.field, u.n, nullspace(ann, u.field))


def enumerate_affine_flats(field: FieldSpec, n: int, k: int) -> list[AffineFlat]:
    """All q^(n-k) * [n choose k]_q affine k-flats, each once."""
    q = field.q
    out = []
    for d in enumerate_subspaces(field, n, k):
        nonpiv = [c for c in range(n) if c not in d.pivots]
        for vals in itertools.product(range(q), repeat=len(nonpiv)):
            shift = [0] * n
            for c, v in zip(nonpiv, vals):
                shift[c] = v
            out.append(AffineFlat(d, tuple(shift)))
    return out


# -- text format -----------------------------------------------------------------


def format_subspace(s: Subspace) -> str:
    """Serialize as ``"k n ; row ; row ; ..."`` with comma-separated rows."""
    parts = [f"{s.dim} {s.n}"] + [",".join(map(str, row)) for row in s.basis]
    return " ; ".join(parts)


def parse_subspace(text: str, field: FieldSpec) -> Subspace:
    parts = [p.strip() for p in text.split(";")]
    try:
        k, n = (int(x) for x in parts[0].split())
        rows = [[int(x) for x in p.split(",")] for p in parts[1:] if p]
    except ValueError as exc:
        raise SpaceError(f"bad subspace text {text!r}: {exc}") from None
    if len(rows) != k or any(len(r) != n for r in rows):
        raise SpaceError(f"subspace text {text!r} does not match its header")
    if any(not 0 <= x < field.q for r in rows for x in r):
        raise SpaceError("subspace entries out of field range")
    s = Subspace.span(field, n, np.array(rows, dtype=np.int64).reshape(k, n))
    if s.dim != k:
        raise SpaceError(f"rows of {text!r} are linearly dependent")
    return s
