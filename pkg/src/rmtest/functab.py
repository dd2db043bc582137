"""Dense evaluation tables of functions F_q^n -> F_q, with erasure marks."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .gf import FieldError, FieldSpec, parse_field
from .space import AffineFlat, Subspace, all_vectors, check_table_size, enumerate_points, to_index, to_vectors

__all__ = [
    "ERASED",
    "TableError",
    "TableParseError",
    "FunctionTable",
    "Restriction",
    "PlantedInstance",
    "restrict",
    "compose_affine",
    "plant",
    "hamming_distance",
    "read_table",
    "write_table",
    "format_table",
    "parse_table",
]

ERASED = -1


class TableError(ValueError):
    pass


class TableParseError(TableError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class FunctionTable:
    """f: F_q^n -> F_q (or ERASED) as a read-only int64 array in point-index order."""

    __slots__ = ("field", "n", "values")

    def __init__(self, field: FieldSpec, n: int, values) -> None:
        size = check_table_size(field.q, n)
        vals = np.array(values, dtype=np.int64).ravel()
        if vals.size != size:
            raise TableError(f"table needs {size} entries, got {vals.size}")
        if vals.size and (vals.max() >= field.q or vals.min() < ERASED):
            raise TableError("table entries out of range")
        vals.setflags(write=False)
        self.field = field
        self.n = n
        self.values = vals

    @classmethod
    def from_function(cls, field: FieldSpec, n: int, fn) -> "FunctionTable":
        """Build from ``fn(vectors)`` evaluated on all q^n coordinate rows at once."""
        return cls(field, n, fn(all_vectors(field.q, n)))

    @classmethod
    def zeros(cls, field: FieldSpec, n: int) -> "FunctionTable":
        return cls(field, n, np.zeros(field.q**n, dtype=np.int64))

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def has_erasures(self) -> bool:
        return bool((self.values == ERASED).any())

    def __getitem__(self, idx):
        return self.values[idx]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FunctionTable):
            return NotImplemented
        return self.field == other.field and self.n == other.n and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.field, self.n, self.values.tobytes()))

    def __repr__(self) -> str:
        return f"FunctionTable({self.field!r}, n={self.n}, {self.values.tolist() if self.size <= 16 else '...'})"

    def _same(self, other: "FunctionTable") -> None:
        if self.field != other.field or self.n != other.n:
            raise TableError("tables live over different domains")

    def __add__(self, other: "FunctionTable") -> "FunctionTable":
        self._same(other)
        self.require_complete()
        other.require_complete()
        return FunctionTable(self.field, self.n, self.field.vadd(self.values, other.values))

    def __sub__(self, other: "FunctionTable") -> "FunctionTable":
        self._same(other)
        self.require_complete()
        other.require_complete()
        return FunctionTable(self.field, self.n, self.field.vsub(self.values, other.values))

    def scale(self, c: int) -> "FunctionTable":
        self.require_complete()
        return FunctionTable(self.field, self.n, self.field.vmul(c, self.values))

    def with_values(self, idx, vals) -> "FunctionTable":
        v = self.values.copy()
        v[np.asarray(idx, dtype=np.int64)] = vals
        return FunctionTable(self.field, self.n, v)

    def require_complete(self) -> None:
        if self.has_erasures:
            raise TableError("operation undefined on a table with ERASED entries")


@dataclass(frozen=True)
class Restriction:
    source: FunctionTable
    basis: np.ndarray
    shift: np.ndarray
    table: FunctionTable

    def chart(self, z) -> np.ndarray:
        """Ambient point indices of chart coordinates z (indices in F_q^k)."""
        f = self.source.field
        k = self.basis.shape[0]
        vecs = to_vectors(np.asarray(z), f.q, k).reshape(np.size(z), k)
        pts = f.vadd(f.matmul(vecs, self.basis), self.shift[None, :])
        return to_index(pts, f.q).reshape(np.shape(z))


def restrict(f: FunctionTable, flat: AffineFlat | Subspace) -> Restriction:
    """f restricted to a flat, parametrized by the flat's canonical basis rows."""
    if flat.n != f.n or flat.field != f.field:
        raise TableError("flat does not live in the table's ambient space")
    pts = enumerate_points(flat)
    shift = np.asarray(flat.shift if isinstance(flat, AffineFlat) else [0] * f.n, dtype=np.int64)
    table = FunctionTable(f.field, flat.dim, f.values[pts])
    return Restriction(f, np.array(flat.matrix), shift, table)


def compose_affine(f: FunctionTable, matrix, shift=None) -> FunctionTable:
    """g(x) = f(x M + b) for an n x n matrix M (row-vector convention)."""
    field = f.field
    m = np.asarray(matrix, dtype=np.int64).reshape(f.n, f.n)
    b = np.zeros(f.n, dtype=np.int64) if shift is None else np.asarray(shift, dtype=np.int64)
    x = all_vectors(field.q, f.n)
    y = field.vadd(field.matmul(x, m), b[None, :])
    return FunctionTable(field, f.n, f.values[to_index(y, field.q)])


@dataclass(frozen=True)
class PlantedInstance:
    codeword: FunctionTable
    support: np.ndarray
    f: FunctionTable
    certified_distance: Fraction


def plant(code, n: int, noise_weight: int, rng) -> PlantedInstance:
    """Random codeword plus exactly ``noise_weight`` random nonzero offsets.

    The weight must sit strictly inside the unique-decoding radius so that the
    returned distance is exact.
    """
    field = code.field
    size = field.q**n
    if not 0 <= noise_weight <= size:
        raise TableError(f"noise weight {noise_weight} outside [0, {size}]")
    if not code.delta0 > Fraction(2 * noise_weight, size):
        raise TableError(
            f"noise weight {noise_weight}/{size} is not below half the minimum distance {code.delta0}; "
            "distance would not be certified"
        )
    g = code.random_codeword(n, rng)
    support = np.sort(rng.choice(size, size=noise_weight, replace=False)).astype(np.int64)
    offsets = rng.integers(1, field.q, size=noise_weight)
    vals = g.values.copy()
    vals[support] = field.vadd(vals[support], offsets)
    return PlantedInstance(g, support, FunctionTable(field, n, vals), Fraction(noise_weight, size))


def hamming_distance(f: FunctionTable, g: FunctionTable) -> Fraction:
    f._same(g)
    f.require_complete()
    g.require_complete()
    return Fraction(int((f.values != g.values).sum()), f.size)


# -- file format ------------------------------------------------------------------


def format_table(f: FunctionTable) -> str:
    q_part, _, mod_part = f.field.config_string().partition(" ")
    line1 = f"{q_part} n={f.n}" + (f" {mod_part}" if mod_part else "")
    syms = ["*" if v == ERASED else str(int(v)) for v in f.values]
    rows = [" ".join(syms[i : i + 32]) for i in range(0, len(syms), 32)]
    return "\n".join([line1] + rows) + "\n"


def parse_table(text: str) -> FunctionTable:
    header = None
    symbols: list[tuple[str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            header = (line, lineno)
            continue
        symbols.extend((tok, lineno) for tok in line.split())
    if header is None:
        raise TableParseError("missing header 'q=<int> n=<int>'", 1)
    line, lineno = header
    kv = {}
    for tok in line.split():
        if "=" not in tok:
            raise TableParseError(f"bad header token {tok!r}", lineno)
        k, v = tok.split("=", 1)
        kv[k] = v
    if "q" not in kv or "n" not in kv:
        raise TableParseError("header must declare q and n", lineno)
    try:
        n = int(kv.pop("n"))
        field = parse_field(" ".join(f"{k}={v}" for k, v in kv.items()))
    except (ValueError, FieldError) as exc:
        raise TableParseError(str(exc), lineno) from None
    size = field.q**n
    if len(symbols) != size:
        last = symbols[-1][1] if symbols else lineno
        raise TableParseError(f"expected {size} symbols, found {len(symbols)}", last)
    vals = np.empty(size, dtype=np.int64)
    for i, (tok, ln) in enumerate(symbols):
        if tok == "*":
            vals[i] = ERASED
            continue
        try:
            v = int(tok)
        except ValueError:
            raise TableParseError(f"bad symbol {tok!r}", ln) from None
        if not 0 <= v < field.q:
            raise TableParseError(f"symbol {v} not in F_{field.q}", ln)
        vals[i] = v
    return FunctionTable(field, n, vals)


def read_table(path) -> FunctionTable:
    return parse_table(Path(path).read_text())


def write_table(f: FunctionTable, path) -> None:
    Path(path).write_text(format_table(f))
