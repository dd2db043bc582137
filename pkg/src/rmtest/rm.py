"""Reed-Muller codes, lifted affine-invariant codes and the CodeFamily interface.

A code family answers, for each dimension k, "is this table a codeword", and
supplies what the testers need: a basis evaluator (linear families) or an
enumerator (extensional families), the distance bound delta0 and ln|C_k|.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .exact import QPower, ceil_log_ratio
from .functab import FunctionTable, TableError
from .gf import FieldSpec
from .space import (
    all_vectors,
    enumerate_affine_flats,
    enumerate_points,
    gaussian_binomial,
    nullspace,
    rank,
    rref,
    to_index,
)

__all__ = [
    "CodeError",
    "rm_dim",
    "monomials",
    "evaluation_matrix",
    "testing_dimension",
    "rm_delta0",
    "rm_parameters",
    "interpolate_reduced",
    "coefficient_tensor",
    "degree",
    "rm_membership",
    "evaluate_poly",
    "walsh_spectrum",
    "distance_to_affine_q2",
    "CodeFamily",
    "ReedMuller",
    "ExtensionalCode",
    "LiftedCode",
    "lifted_membership",
    "exact_distance",
    "q_k_parameter",
    "ENUM_CAP",
    "load_lifted_base",
]

ENUM_CAP = 2**22
FLAT_BUDGET = 10**6


class CodeError(ValueError):
    pass


# -- monomials and evaluation ------------------------------------------------------


def rm_dim(k: int, q: int, d: int) -> int:
    """Number of reduced monomials in k variables of total degree <= d."""
    if d < 0:
        return 0
    # ways[s] = exponent vectors seen so far with sum s
    ways = [1] + [0] * d
    for _ in range(k):
        new = [0] * (d + 1)
        for s, w in enumerate(ways):
            if w:
                for e in range(min(q - 1, d - s) + 1):
                    new[s + e] += w
        ways = new
    return sum(ways)


@lru_cache(maxsize=None)
def _monomials(k: int, q: int, d: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for total in range(0, min(d, k * (q - 1)) + 1):
        level = [e for e in itertools.product(range(min(q - 1, total) + 1), repeat=k) if sum(e) == total]
        out.extend(sorted(level, reverse=True))
    return tuple(out)


def monomials(k: int, q: int, d: int) -> np.ndarray:
    """Exponent vectors (rows): by total degree, then descending lexicographic."""
    mons = _monomials(k, q, d)
    return np.array(mons, dtype=np.int64).reshape(len(mons), k)


def evaluation_matrix(field: FieldSpec, vecs, exps) -> np.ndarray:
    """Rows: points; columns: monomials x^e evaluated there."""
    vecs = np.asarray(vecs, dtype=np.int64)
    exps = np.asarray(exps, dtype=np.int64)
    pw = field.power_table
    out = np.ones(vecs.shape[:-1] + (exps.shape[0],), dtype=np.int64)
    for j in range(exps.shape[1]):
        out = field.vmul(out, pw[vecs[..., j, None], exps[:, j]])
    return out


def testing_dimension(q: int, d: int, p: int | None = None) -> int:
    """ceil((d+1)/(q - q/p)) + 1, exact integers."""
    if p is None:
        p = next(f for f in range(2, q + 1) if q % f == 0)
    step = q - q // p
    return -(-(d + 1) // step) + 1


def rm_delta0(q: int, d: int) -> QPower:
    return QPower(q, d, q - 1)


def rm_parameters(q: int, d: int, k: int, p: int | None = None) -> tuple[int, QPower, int]:
    """(t_{q,d}, delta0, s_k) with s_k = ceil(100 ln|RM[k,q,d]| / delta0) + 1."""
    if k < 1:
        raise CodeError("k must be >= 1")
    delta0 = rm_delta0(q, d)
    s_k = ceil_log_ratio(100, q, delta0, log_multiplier=rm_dim(k, q, d)) + 1
    return testing_dimension(q, d, p), delta0, s_k


# -- interpolation -------------------------------------------------------------------


@lru_cache(maxsize=None)
def _vandermonde_inverse(field: FieldSpec) -> np.ndarray:
    q = field.q
    v = field.power_table[:, :q]  # v[a, e] = a^e, 0^0 = 1
    aug = np.hstack([v, np.eye(q, dtype=np.int64)])
    r, k = rref(aug, field)
    if k != q or not (r[:, :q] == np.eye(q)).all():
        raise CodeError("Vandermonde matrix is singular")
    out = r[:, q:].copy()
    out.setflags(write=False)
    return out


def coefficient_tensor(f: FunctionTable) -> np.ndarray:
    """Reduced-polynomial coefficients c[e_0, ..., e_{n-1}] of f."""
    f.require_complete()
    field, n, q = f.field, f.n, f.field.q
    if n == 0:
        return f.values.copy().reshape(())
    # values.reshape puts x_{n-1} on axis 0; reverse so axis j is x_j
    c = f.values.reshape([q] * n).transpose(list(range(n - 1, -1, -1)))
    vinv = _vandermonde_inverse(field)
    for j in range(n):
        moved = np.moveaxis(c, j, -1)
        shape = moved.shape
        moved = field.matmul(moved.reshape(-1, q), vinv.T).reshape(shape)
        c = np.moveaxis(moved, -1, j)
    return np.ascontiguousarray(c)


def interpolate_reduced(f: FunctionTable) -> dict[tuple[int, ...], int]:
    c = coefficient_tensor(f)
    return {tuple(int(e) for e in idx): int(c[tuple(idx)]) for idx in np.argwhere(c != 0)}


def degree(f: FunctionTable) -> int:
    c = coefficient_tensor(f)
    nz = np.argwhere(c != 0)
    if nz.size == 0:
        return -1
    return int(nz.sum(axis=1).max())


def rm_membership(f: FunctionTable, d: int) -> bool:
    return degree(f) <= d


def evaluate_poly(field: FieldSpec, n: int, coeffs: dict[tuple[int, ...], int]) -> FunctionTable:
    vecs = all_vectors(field.q, n)
    if not coeffs:
        return FunctionTable.zeros(field, n)
    exps = np.array(list(coeffs.keys()), dtype=np.int64).reshape(-1, n)
    cs = np.array(list(coeffs.values()), dtype=np.int64)
    ev = evaluation_matrix(field, vecs, exps)
    return FunctionTable(field, n, field.matmul(ev, cs[:, None])[:, 0])


# -- Walsh transform (q = 2) -----------------------------------------------------------


def walsh_spectrum(f: FunctionTable) -> np.ndarray:
    """W(a) = sum_x (-1)^(f(x) + a.x), via the fast Hadamard butterfly."""
    if f.field.q != 2:
        raise CodeError("Walsh spectrum is defined here for q = 2 only")
    f.require_complete()
    w = 1 - 2 * f.values.astype(np.int64)
    h = 1
    while h < w.size:
        w = w.reshape(-1, 2, h)
        w = np.stack([w[:, 0] + w[:, 1], w[:, 0] - w[:, 1]], axis=1).reshape(-1)
        h *= 2
    return w


def distance_to_affine_q2(f: FunctionTable) -> Fraction:
    """Exact distance from f to RM[n,2,1]: (2^n - max|W|) / 2^(n+1)."""
    w = walsh_spectrum(f)
    return Fraction(f.size - int(np.abs(w).max()), 2 * f.size)


# -- code families -----------------------------------------------------------------------


class CodeFamily:
    """Per-dimension code C_k in F_q^{q^k} for k >= base_dim.

    Linear families implement ``basis_rows``; extensional ones implement
    ``enumerate``.  ``delta0`` is a Fraction or QPower lower bound on the
    relative distance across the dimensions in use.
    """

    name = "code"
    is_linear = True

    def __init__(self, field: FieldSpec, base_dim: int, c_km: int = 6) -> None:
        self.field = field
        self.base_dim = base_dim
        self.c_km = c_km

    delta0: Fraction | QPower

    def contains(self, f: FunctionTable) -> bool:
        raise NotImplementedError

    def dim(self, k: int) -> int:
        raise NotImplementedError

    def basis_rows(self, k: int, vecs: np.ndarray) -> np.ndarray:
        """Evaluations of the k-dim basis at points (rows of vecs in F_q^k)."""
        raise NotImplementedError

    def log_size(self, k: int) -> tuple[int, int]:
        """(arg, mult) with ln|C_k| = mult * ln(arg)."""
        if self.is_linear:
            return self.field.q, self.dim(k)
        return len(self.enumerate(k)), 1

    def size(self, k: int) -> int:
        arg, mult = self.log_size(k)
        return arg**mult

    def generator(self, k: int) -> np.ndarray:
        """(dim, q^k) generator matrix in point-index order."""
        return self.basis_rows(k, all_vectors(self.field.q, k)).T.copy()

    def enumerate(self, k: int) -> np.ndarray:
        """All codewords at dimension k as rows (q^k columns)."""
        if not self.is_linear:
            raise NotImplementedError
        size = self.size(k)
        if size > ENUM_CAP:
            raise CodeError(f"|C_{k}| = {size} exceeds the enumeration cap {ENUM_CAP}")
        g = self.generator(k)
        coeffs = all_vectors(self.field.q, g.shape[0])
        return self.field.matmul(coeffs, g)

    def random_codeword(self, n: int, rng) -> FunctionTable:
        if self.is_linear:
            g = self.generator(n)
            c = rng.integers(0, self.field.q, size=g.shape[0])
            return FunctionTable(self.field, n, self.field.matmul(c[None, :], g)[0])
        words = self.enumerate(n)
        return FunctionTable(self.field, n, words[rng.integers(len(words))])

    def q_parameter(self, k: int) -> int:
        return q_k_parameter(self, k)


class ReedMuller(CodeFamily):
    """RM[k, q, d] for every k, with the testing dimension as base dimension."""

    def __init__(self, field: FieldSpec, d: int, c_km: int = 6) -> None:
        if d < 0:
            raise CodeError("degree bound must be >= 0")
        super().__init__(field, testing_dimension(field.q, d, field.p), c_km)
        self.d = d
        self.delta0 = rm_delta0(field.q, d)
        self.name = f"RM[q={field.q},d={d}]"

    def contains(self, f: FunctionTable) -> bool:
        return rm_membership(f, self.d)

    def dim(self, k: int) -> int:
        return rm_dim(k, self.field.q, self.d)

    def exponents(self, k: int) -> np.ndarray:
        return monomials(k, self.field.q, self.d)

    def basis_rows(self, k: int, vecs) -> np.ndarray:
        return evaluation_matrix(self.field, np.asarray(vecs).reshape(-1, k), self.exponents(k))

    def s_k(self, k: int) -> int:
        return rm_parameters(self.field.q, self.d, k, self.field.p)[2]


class ExtensionalCode(CodeFamily):
    """A family given by explicit codeword lists (or a membership predicate) per dimension."""

    is_linear = False

    def __init__(self, field: FieldSpec, base_dim: int, words_by_dim, delta0, name="extensional", c_km: int = 6):
        super().__init__(field, base_dim, c_km)
        self._words = words_by_dim
        self.delta0 = delta0
        self.name = name

    def enumerate(self, k: int) -> np.ndarray:
        words = self._words(k) if callable(self._words) else self._words[k]
        return np.asarray(words, dtype=np.int64).reshape(-1, self.field.q**k)

    def contains(self, f: FunctionTable) -> bool:
        return bool((self.enumerate(f.n) == f.values[None, :]).all(axis=1).any())


class LiftedCode(CodeFamily):
    """The lift C^{t->k} of an affine-invariant base code on F_q^t.

    Linear bases get a basis of each lift as the kernel of the base's
    parity checks applied on every affine t-flat; other bases fall back to
    brute-force enumeration.
    """

    def __init__(self, field: FieldSpec, t: int, base_tables, max_dim: int | None = None, c_km: int = 6):
        super().__init__(field, t, c_km)
        q = field.q
        base = np.unique(np.asarray(base_tables, dtype=np.int64).reshape(-1, q**t), axis=0)
        if base.size == 0:
            raise CodeError("base code is empty")
        self.base = base
        self._base_set = {row.tobytes() for row in base}
        self._check_affine_closure()
        r = rank(base, field)
        # base lies in its span, so equal sizes mean base is a subspace
        self.is_linear = len(base) == q**r
        self.name = f"lift(t={t},|base|={len(base)})"
        self._basis_cache: dict[int, np.ndarray] = {}
        self._enum_cache: dict[int, np.ndarray] = {}
        if self.is_linear:
            g, _ = rref(base, field)
            self._base_gen = g[:r]
            self._parity = nullspace(self._base_gen, field)
        self.max_dim = t if max_dim is None else max_dim
        self.delta0 = self._min_distance(range(t, self.max_dim + 1))

    def _check_affine_closure(self) -> None:
        field, t, q = self.field, self.base_dim, self.field.q
        vecs = all_vectors(q, t)
        for m_flat in itertools.product(range(q), repeat=t * t + t):
            m = np.array(m_flat[: t * t], dtype=np.int64).reshape(t, t)
            b = np.array(m_flat[t * t :], dtype=np.int64)
            img = to_index(field.vadd(field.matmul(vecs, m), b[None, :]), q)
            for row in self.base[:, img]:
                if row.tobytes() not in self._base_set:
                    raise CodeError("base code is not closed under affine maps")

    def _flat_point_lists(self, k: int) -> np.ndarray:
        q, t = self.field.q, self.base_dim
        count = q ** (k - t) * gaussian_binomial(k, t, q)
        if count > FLAT_BUDGET:
            raise CodeError(f"{count} affine {t}-flats exceed the enumeration budget")
        flats = enumerate_affine_flats(self.field, k, t)
        return np.array([enumerate_points(a) for a in flats], dtype=np.int64).reshape(-1, q**t)

    def dim(self, k: int) -> int:
        return self._lift_basis(k).shape[0]

    def _lift_basis(self, k: int) -> np.ndarray:
        if k in self._basis_cache:
            return self._basis_cache[k]
        q, field = self.field.q, self.field
        if k < self.base_dim:
            raise CodeError(f"lift defined for k >= {self.base_dim}")
        if self._parity.shape[0] == 0:
            basis = np.eye(q**k, dtype=np.int64)
        else:
            pts = self._flat_point_lists(k)
            rows = np.zeros((pts.shape[0] * self._parity.shape[0], q**k), dtype=np.int64)
            for i, h in enumerate(self._parity):
                block = rows[i * pts.shape[0] : (i + 1) * pts.shape[0]]
                for z in range(q**self.base_dim):
                    # duplicate points cannot occur inside one flat
                    block[np.arange(pts.shape[0]), pts[:, z]] = h[z]
            reduced, r = rref(rows, field)
            basis = nullspace(reduced[:r], field)
        basis.setflags(write=False)
        self._basis_cache[k] = basis
        return basis

    def generator(self, k: int) -> np.ndarray:
        if not self.is_linear:
            raise NotImplementedError
        return self._lift_basis(k)

    def basis_rows(self, k: int, vecs) -> np.ndarray:
        idx = to_index(np.asarray(vecs).reshape(-1, k), self.field.q)
        return self._lift_basis(k)[:, idx].T

    def enumerate(self, k: int) -> np.ndarray:
        if self.is_linear:
            return super().enumerate(k)
        if k in self._enum_cache:
            return self._enum_cache[k]
        q = self.field.q
        if q ** (q**k) > ENUM_CAP:
            raise CodeError(f"brute-force lift enumeration at k={k} exceeds the cap")
        words = [
            w for w in itertools.product(range(q), repeat=q**k)
            if self.contains(FunctionTable(self.field, k, w))
        ]
        out = np.array(words, dtype=np.int64).reshape(-1, q**k)
        self._enum_cache[k] = out
        return out

    def contains(self, f: FunctionTable) -> bool:
        return lifted_membership(f, self)

    def _min_distance(self, dims) -> Fraction:
        best = None
        for k in dims:
            words = self.enumerate(k)
            if len(words) < 2:
                continue
            if self.is_linear:
                w = (words != 0).sum(axis=1)
                dmin = Fraction(int(w[w > 0].min()), self.field.q**k)
            else:
                diff = (words[:, None, :] != words[None, :, :]).sum(axis=2)
                dmin = Fraction(int(diff[diff > 0].min()), self.field.q**k)
            best = dmin if best is None else min(best, dmin)
        if best is None:
            return Fraction(1)
        return best


def lifted_membership(f: FunctionTable, code: LiftedCode) -> bool:
    """Every affine t-flat restriction of f lies in the base list."""
    f.require_complete()
    t = code.base_dim
    if f.n < t:
        raise CodeError(f"table dimension {f.n} below base dimension {t}")
    if f.field != code.field:
        raise CodeError("field mismatch")
    pts = code._flat_point_lists(f.n)
    restricted = f.values[pts]
    return all(row.tobytes() in code._base_set for row in np.ascontiguousarray(restricted))


def exact_distance(f: FunctionTable, code: CodeFamily) -> Fraction:
    """Exhaustive minimum distance from f to C_n (enumerable codes only)."""
    f.require_complete()
    arg, mult = code.log_size(f.n)
    if arg**mult > ENUM_CAP:
        raise CodeError(
            f"|C_{f.n}| = {arg}^{mult} exceeds the cap {ENUM_CAP}; use a planted instance with a certified distance"
        )
    words = code.enumerate(f.n)
    best = int((words != f.values[None, :]).sum(axis=1).min())
    return Fraction(best, f.size)


def q_k_parameter(code: CodeFamily, k: int) -> int:
    """Q_k = ceil(100 ln|C_k| / delta0) + 1."""
    arg, mult = code.log_size(k)
    return ceil_log_ratio(100, arg, code.delta0, log_multiplier=mult) + 1


def load_lifted_base(directory, max_dim: int | None = None) -> LiftedCode:
    """Read a base code from a directory holding ``manifest`` and table files."""
    from pathlib import Path

    from .functab import read_table

    d = Path(directory)
    kv = dict(tok.split("=", 1) for tok in (d / "manifest").read_text().split())
    t, q, count = int(kv["t"]), int(kv["q"]), int(kv["count"])
    tables = [read_table(p) for p in sorted(d.glob("*.tab"))]
    if len(tables) != count:
        raise TableError(f"manifest declares {count} tables, found {len(tables)}")
    if any(tb.n != t or tb.field.q != q for tb in tables):
        raise TableError("base tables disagree with the manifest")
    return LiftedCode(tables[0].field, t, [tb.values for tb in tables], max_dim=max_dim)
