from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmtest.functab import (
    ERASED,
    FunctionTable,
    TableError,
    TableParseError,
    compose_affine,
    format_table,
    hamming_distance,
    parse_table,
    plant,
    read_table,
    restrict,
    write_table,
)
from rmtest.gf import make_field
from rmtest.rm import ReedMuller, exact_distance
from rmtest.space import AffineFlat, Subspace, random_full_rank, random_subspace, to_index

F2, F3 = make_field(2), make_field(3)


def test_restrict_examples():
    f = FunctionTable.from_function(F2, 2, lambda x: x[:, 0])
    assert restrict(f, Subspace.full(F2, 2)).table == f
    assert not restrict(f, Subspace.span(F2, 2, [[0, 1]])).table.values.any()
    g = FunctionTable.from_function(F2, 2, lambda x: x[:, 0] * x[:, 1])
    diag = restrict(g, Subspace.span(F2, 2, [[1, 1]])).table
    assert diag.values.tolist() == [0, 1]
    with pytest.raises(TableError):
        restrict(g, Subspace.full(F2, 3))


def test_restriction_chart_matches_table():
    rng = np.random.default_rng(0)
    f = FunctionTable(F3, 3, rng.integers(0, 3, 27))
    flat = AffineFlat.make(random_subspace(F3, 3, 2, rng), [1, 2, 0])
    r = restrict(f, flat)
    z = np.arange(9)
    assert (f.values[r.chart(z)] == r.table.values).all()


@pytest.mark.parametrize("q", [2, 3])
def test_restrict_functorial(q):
    field = make_field(q)
    rng = np.random.default_rng(q)
    for _ in range(30):
        n = int(rng.integers(2, 5))
        f = FunctionTable(field, n, rng.integers(0, q, q**n))
        outer = restrict(f, AffineFlat.make(random_subspace(field, n, n - 1, rng), rng.integers(0, q, n)))
        k = n - 1
        b_local = AffineFlat.make(random_subspace(field, k, k - 1, rng), rng.integers(0, q, k))
        inner = restrict(outer.table, b_local)
        # the same flat B written directly in ambient coordinates
        b_dir = Subspace.span(field, n, field.matmul(b_local.matrix, outer.basis))
        b_shift = field.vadd(field.matmul(np.asarray(b_local.shift)[None, :], outer.basis)[0], outer.shift)
        direct = restrict(f, AffineFlat.make(b_dir, b_shift))
        z = np.arange(q ** (k - 1))
        composed_pts = outer.chart(inner.chart(z))
        assert set(composed_pts.tolist()) == set(direct.chart(z).tolist())
        assert (inner.table.values == f.values[composed_pts]).all()
        assert sorted(inner.table.values.tolist()) == sorted(direct.table.values.tolist())


def test_hamming_distance_examples():
    z = FunctionTable.zeros(F2, 2)
    one = FunctionTable(F2, 2, [1, 1, 1, 1])
    g = FunctionTable(F2, 2, [0, 1, 1, 0])
    assert hamming_distance(z, z) == 0
    assert hamming_distance(z, one) == 1
    assert hamming_distance(z, g) == Fraction(1, 2)
    with pytest.raises(TableError):
        hamming_distance(z.with_values([0], [ERASED]), z)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hamming_is_metric(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (FunctionTable(F3, 2, rng.integers(0, 3, 9)) for _ in range(3))
    assert hamming_distance(f, g) == hamming_distance(g, f)
    assert hamming_distance(f, f) == 0
    assert hamming_distance(f, h) <= hamming_distance(f, g) + hamming_distance(g, h)


def test_plant_examples():
    rng = np.random.default_rng(1)
    rm8 = ReedMuller(F2, 1)
    inst = plant(rm8, 8, 0, rng)
    assert inst.f == inst.codeword and inst.certified_distance == 0
    inst = plant(rm8, 8, 1, rng)
    assert inst.certified_distance == Fraction(1, 256)
    for _ in range(10):
        inst = plant(rm8, 4, 3, rng)
        assert inst.certified_distance == Fraction(3, 16)
        assert exact_distance(inst.f, rm8) == Fraction(3, 16)
    with pytest.raises(TableError):
        plant(rm8, 4, 4, rng)  # 4/16 is exactly half the distance


def test_plant_matches_exhaustive_q3():
    rng = np.random.default_rng(2)
    code = ReedMuller(F3, 1)  # delta0 = 3^(-1/2)
    for w in range(0, 5):
        inst = plant(code, 3, w, rng)
        assert exact_distance(inst.f, code) == inst.certified_distance == Fraction(w, 27)
    with pytest.raises(TableError):
        plant(code, 3, 8, rng)  # 16/27 > 3^(-1/2)


def test_compose_affine_identity_and_shift():
    rng = np.random.default_rng(3)
    f = FunctionTable(F3, 2, rng.integers(0, 3, 9))
    assert compose_affine(f, np.eye(2, dtype=np.int64)) == f
    m = random_full_rank(F3, 2, 2, rng)
    g = compose_affine(f, m, [1, 2])
    assert sorted(g.values.tolist()) == sorted(f.values.tolist())


def test_table_io(tmp_path):
    t = parse_table("q=2 n=1\n0 1\n")
    assert t.values.tolist() == [0, 1]
    t = parse_table("# comment\nq=2 n=2\n0 * 1 1  # trailing\n")
    assert t.values.tolist() == [0, ERASED, 1, 1]
    rng = np.random.default_rng(4)
    fields = [make_field(2), make_field(3), make_field(4), make_field(8)]
    for i in range(100):
        field = fields[i % 4]
        n = int(rng.integers(0, 4))
        vals = rng.integers(-1, field.q, field.q**n)
        f = FunctionTable(field, n, vals)
        assert parse_table(format_table(f)) == f
    p = tmp_path / "f.tab"
    write_table(f, p)
    assert read_table(p) == f


@pytest.mark.parametrize(
    "text,line",
    [
        ("q=2 n=2\n0 1 1\n", 2),
        ("q=2 n=1\n0\n2\n", 3),
        ("q=4 n=1 modulus=1,0,1\n0 1 2 3\n", 1),
        ("n=1\n0 1\n", 1),
        ("q=2 n=1\n0 x\n", 2),
    ],
)
def test_table_parse_errors(text, line):
    with pytest.raises(TableParseError) as err:
        parse_table(text)
    assert err.value.line == line
