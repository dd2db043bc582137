import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rmtest.gf import make_field
from rmtest.space import (
    AffineFlat,
    SpaceError,
    Subspace,
    check_table_size,
    enumerate_affine_flats,
    enumerate_hyperplanes,
    enumerate_points,
    enumerate_subspaces,
    format_subspace,
    gaussian_binomial,
    intersect,
    parse_subspace,
    random_invertible,
    random_subspace,
    rank,
    rref,
    to_index,
    to_vectors,
)

F2, F3, F4 = make_field(2), make_field(3), make_field(4)


def brute_subspaces(field, n, k):
    # distinct point sets spanned by k independent vectors
    q = field.q
    vecs = list(itertools.product(range(q), repeat=n))
    seen = set()
    for rows in itertools.combinations(vecs, k):
        m = np.array(rows).reshape(k, n)
        if rank(m, field) == k:
            seen.add(frozenset(enumerate_points(Subspace.span(field, n, m)).tolist()))
    return seen


def test_rref_examples():
    r, k = rref(np.eye(3, dtype=np.int64), F2)
    assert k == 3 and (r == np.eye(3)).all()
    r, k = rref(np.zeros((2, 2), dtype=np.int64), F2)
    assert k == 0 and not r.any()
    r, k = rref([[1, 1], [1, 1]], F2)
    assert k == 1 and r[0].tolist() == [1, 1] and not r[1].any()


def test_point_index_roundtrip():
    v = to_vectors(np.arange(27), 3, 3)
    assert v[5].tolist() == [2, 1, 0]
    assert (to_index(v, 3) == np.arange(27)).all()


def test_gaussian_binomial_examples():
    assert gaussian_binomial(2, 1, 2) == 3
    assert gaussian_binomial(3, 1, 2) == 7
    assert gaussian_binomial(4, 2, 2) == 35
    assert len(brute_subspaces(F2, 4, 2)) == 35
    with pytest.raises(SpaceError):
        gaussian_binomial(2, 3, 2)


@pytest.mark.parametrize("q", [2, 3, 4])
def test_gaussian_binomial_symmetry_and_enumeration(q):
    f = make_field(q)
    for n in range(9):
        for k in range(n + 1):
            assert gaussian_binomial(n, k, q) == gaussian_binomial(n, n - k, q)
    for n in range(1, 4):
        for k in range(n + 1):
            subs = list(enumerate_subspaces(f, n, k))
            assert len(subs) == len(set(subs)) == gaussian_binomial(n, k, q)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]))
def test_rank_invariant_under_row_ops(seed, q):
    f = make_field(q)
    rng = np.random.default_rng(seed)
    m = rng.integers(0, q, size=(4, 5))
    r0 = rank(m, f)
    assert rank(m[rng.permutation(4)], f) == r0
    g = random_invertible(f, 4, rng)
    assert rank(f.matmul(g, m), f) == r0


def test_random_subspace_uniform_lines():
    rng = np.random.default_rng(1)
    draws = 30000
    c = Counter(random_subspace(F2, 2, 1, rng) for _ in range(draws))
    assert len(c) == 3
    sigma = np.sqrt(draws * (1 / 3) * (2 / 3))
    for v in c.values():
        assert abs(v - draws / 3) <= 3 * sigma


def test_random_subspace_coverage_and_full():
    rng = np.random.default_rng(2)
    seen = set()
    for _ in range(3000):
        seen.add(random_subspace(F2, 4, 2, rng))
    assert len(seen) == 35
    assert random_subspace(F3, 3, 3, rng) == Subspace.full(F3, 3)


def test_random_subspace_contains_fixed_line():
    # P[U contains a fixed 1-dim subspace] for U of dim 3 in F_2^4
    rng = np.random.default_rng(3)
    line = Subspace.span(F2, 4, [[1, 0, 1, 0]])
    p1 = gaussian_binomial(3, 1, 2) / gaussian_binomial(4, 1, 2)
    draws = 20000
    hits = sum(random_subspace(F2, 4, 3, rng).contains_subspace(line) for _ in range(draws))
    assert abs(hits / draws - p1) <= 3 * np.sqrt(p1 * (1 - p1) / draws)


def test_random_invertible():
    rng = np.random.default_rng(4)
    assert all(random_invertible(F2, 1, rng).tolist() == [[1]] for _ in range(20))
    draws = 12000
    c = Counter(tuple(random_invertible(F2, 2, rng).ravel()) for _ in range(draws))
    assert len(c) == 6
    sigma = np.sqrt(draws * (1 / 6) * (5 / 6))
    assert all(abs(v - draws / 6) <= 3 * sigma for v in c.values())
    assert all(rank(random_invertible(F3, 4, rng), F3) == 4 for _ in range(20))


def test_hyperplanes():
    assert len(enumerate_hyperplanes(F2, 1)) == 1
    assert enumerate_hyperplanes(F2, 1)[0].dim == 0
    hs = enumerate_hyperplanes(F2, 3)
    assert len(hs) == len(set(hs)) == 7
    assert len(enumerate_hyperplanes(F3, 2)) == 4
    assert all(h.dim == 2 for h in hs)


@pytest.mark.parametrize("q,n", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4)])
def test_hyperplane_intersections(q, n):
    f = make_field(q)
    hs = enumerate_hyperplanes(f, n)
    for u, v in itertools.combinations(hs, 2):
        w = intersect(u, v)
        assert w.dim == n - 2
        pts = set(enumerate_points(w).tolist())
        assert pts == set(enumerate_points(u).tolist()) & set(enumerate_points(v).tolist())
    assert intersect(hs[0], hs[0]) == hs[0]


def test_intersect_lines_is_zero():
    a = Subspace.span(F2, 2, [[1, 0]])
    b = Subspace.span(F2, 2, [[1, 1]])
    assert intersect(a, b) == Subspace.zero(F2, 2)


def test_enumerate_points():
    assert enumerate_points(Subspace.zero(F2, 3)).tolist() == [0]
    h = enumerate_hyperplanes(F2, 3)[0]
    assert len(set(enumerate_points(h).tolist())) == 4
    # e_1 + span{e_2}: coordinate vectors (1,0) and (1,1), indices 1 and 3
    flat = AffineFlat.make(Subspace.span(F2, 2, [[0, 1]]), [1, 0])
    pts = sorted(enumerate_points(flat).tolist())
    assert [tuple(v) for v in to_vectors(pts, 2, 2)] == [(1, 0), (1, 1)]


@pytest.mark.parametrize("q,n,k,count", [(2, 2, 1, 6), (2, 2, 2, 1), (2, 3, 2, 14), (3, 2, 1, 12)])
def test_enumerate_affine_flats(q, n, k, count):
    f = make_field(q)
    flats = enumerate_affine_flats(f, n, k)
    assert len(flats) == count == q ** (n - k) * gaussian_binomial(n, k, q)
    sets = {frozenset(enumerate_points(a).tolist()) for a in flats}
    assert len(sets) == count


def test_affine_flat_canonical_shift():
    d = Subspace.span(F3, 3, [[1, 2, 0]])
    a = AffineFlat.make(d, [2, 1, 1])
    b = AffineFlat.make(d, [0, 0, 1])
    assert a == b


def test_subspace_text_roundtrip():
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = random_subspace(F4, 4, 2, rng)
        assert parse_subspace(format_subspace(s), F4) == s
    with pytest.raises(SpaceError):
        parse_subspace("2 2 ; 1,1 ; 1,1", F2)
    with pytest.raises(SpaceError):
        parse_subspace("1 2 ; 1,5", F2)


def test_table_guard():
    assert check_table_size(2, 28) == 2**28
    with pytest.raises(SpaceError):
        check_table_size(2, 29)
