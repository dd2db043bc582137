"""Lexicographic low-weight counts, query lower bounds, rank witnesses and k_adv sizing.

Lexicographic order here is most-significant coordinate first: the j-th
element of {0..q-1}^n is the base-q expansion of j written left to right.
Point indices elsewhere in the package are little-endian, so converting a
lex tuple to a point reverses its digits.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .gf import FieldSpec, make_field
from .rm import CodeFamily, ReedMuller, evaluation_matrix, monomials, rm_dim, testing_dimension
from .space import rank
from .testers import repetitions

__all__ = [
    "BoundError",
    "ClaimViolation",
    "BoundReport",
    "ENUM_LIMIT",
    "lex_set",
    "lex_points",
    "lex_set_count_low_weight",
    "query_lower_bound",
    "rank_witness",
    "sk_ratio_check",
    "k_adv_size",
    "adv_queries",
    "lifted_online_feasible",
]

ENUM_LIMIT = 2**24
RANK_BUDGET = 2**14
K_CAP = 256


class BoundError(ValueError):
    pass


class ClaimViolation(AssertionError):
    pass


def lex_set(q: int, n: int, k: int) -> np.ndarray:
    """First k tuples of {0..q-1}^n in lexicographic order, as rows."""
    if not 0 <= k <= q**n:
        raise BoundError(f"k must be in [0, {q**n}]")
    j = np.arange(k, dtype=np.int64)
    digits = (j[:, None] // q ** np.arange(n - 1, -1, -1, dtype=np.int64)[None, :]) % q
    return digits


def lex_points(q: int, n: int, k: int) -> np.ndarray:
    """The same tuples as coordinate vectors (x_1 is the leading lex digit)."""
    return lex_set(q, n, k)


def _count_dp(q: int, n: int, k: int, d: int) -> int:
    # walk the base-q digits of k from the most significant one, counting
    # tuples below k whose digit sum stays <= d
    digits = [(k // q**i) % q for i in range(n - 1, -1, -1)]

    @lru_cache(maxsize=None)
    def free(slots: int, budget: int) -> int:
        if budget < 0:
            return 0
        if slots == 0:
            return 1
        return sum(free(slots - 1, budget - v) for v in range(q))

    total, used = 0, 0
    for pos, dig in enumerate(digits):
        for v in range(dig):
            total += free(n - pos - 1, d - used - v)
        used += dig
        if used > d:
            break
    return total


def lex_set_count_low_weight(q: int, n: int, k: int, d: int, method: str = "auto") -> int:
    """|{x in M_q^n(k) : sum x_i <= d}|."""
    if not 0 <= k <= q**n:
        raise BoundError(f"k must be in [0, {q**n}]")
    if d < 0:
        return 0
    if k == q**n:
        # the DP walks digits of k, which has n + 1 digits here
        return _count_dp(q, n + 1, k, d) if method != "enum" else int((lex_set(q, n, k).sum(axis=1) <= d).sum())
    if method == "enum" or (method == "auto" and k <= ENUM_LIMIT):
        return int((lex_set(q, n, k).sum(axis=1) <= d).sum())
    return _count_dp(q, n, k, d)


@dataclass(frozen=True)
class BoundReport:
    q: int
    n: int
    d: int
    t: int
    lower_bound: int
    explicit_floor: str | None
    tester_queries: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _floor_log(q: int, t: int) -> int:
    r = 0
    while q ** (r + 1) <= t:
        r += 1
    return r


def query_lower_bound(q: int, n: int, d: int, t, tester_queries: int | None = None) -> BoundReport:
    """|M_q^n(t)_{<=d}| queries, plus (floor(log_q t)/d)^d when d <= q.

    A fractional rate uses floor(t) points; the count is capped at q^n.
    """
    t_int = math.floor(Fraction(t))
    if t_int < 1:
        raise BoundError("t must be >= 1")
    lb = lex_set_count_low_weight(q, n, min(t_int, q**n), d)
    floor = None
    if d <= q and d >= 1:
        fl = Fraction(_floor_log(q, t_int), d) ** d
        floor = str(fl)
        if lb < fl:
            raise ClaimViolation(f"lower bound {lb} below explicit floor {fl}")
    return BoundReport(q, n, d, t_int, lb, floor, tester_queries)


def rank_witness(q: int, n: int, d: int, r: int, rng=None, field: FieldSpec | None = None) -> dict:
    """Rank of the RM[n,q,d] evaluation matrix on the lex prefix of size q^r (asserted) and on a random S."""
    if not 0 <= r <= n:
        raise BoundError("need 0 <= r <= n")
    if q**r > RANK_BUDGET or rm_dim(n, q, d) > RANK_BUDGET:
        raise BoundError("rank computation over budget")
    field = field or make_field(q)
    exps = monomials(n, q, d)
    need = lex_set_count_low_weight(q, n, q**r, d)
    lex_rank = rank(evaluation_matrix(field, lex_points(q, n, q**r), exps), field)
    if lex_rank < need:
        raise ClaimViolation(f"rank {lex_rank} < {need} on the lex prefix (q={q}, n={n}, d={d}, r={r})")
    out = {"q": q, "n": n, "d": d, "r": r, "lex_rank": lex_rank, "required": need}
    if rng is not None:
        idx = rng.choice(q**n, size=q**r, replace=False)
        vecs = (idx[:, None] // q ** np.arange(n)[None, :]) % q
        out["random_rank"] = rank(evaluation_matrix(field, vecs, exps), field)
    return out


def sk_ratio_check(q: int, d: int, c: int, k: int, code: ReedMuller | None = None) -> dict:
    """s_k / q^k against q^-c; asserted only from k >= 8d + 3c + 24 on."""
    if k < 1:
        raise BoundError("k must be >= 1")
    code = code or ReedMuller(make_field(q), d)
    s = code.s_k(k)
    ratio = Fraction(s, q**k)
    threshold = 8 * d + 3 * c + 24
    holds = ratio <= Fraction(1, q**c)
    if k >= threshold and not holds:
        raise ClaimViolation(f"s_k/q^k = {ratio} > q^-{c} at k={k}")
    return {"q": q, "d": d, "c": c, "k": k, "s_k": s, "ratio": ratio, "asserted": k >= threshold, "holds": holds}


def adv_queries(code: CodeFamily, k: int, eps) -> int:
    """Q_total(k): the repeated semi-sample tester's total queries at dimension k."""
    Q = code.q_parameter(k)
    return repetitions(Q, eps) * Q


def k_adv_size(code: CodeFamily, t, eps, safety=Fraction(1, 5), n: int | None = None, cap: int = K_CAP) -> dict:
    """Smallest k >= t_{q,d} with t * Q_total(k)^2 / q^k <= safety.

    Returns a report; ``feasible`` is False when no k up to ``cap`` (or up to n,
    if given) works.
    """
    t, eps, safety = Fraction(t), Fraction(eps), Fraction(safety)
    if t < 0 or eps <= 0:
        raise BoundError("need t >= 0 and eps > 0")
    q = code.field.q
    k0 = code.base_dim
    found = None
    k = k0
    while k <= cap:
        Qt = adv_queries(code, k, eps)
        if t * Qt * Qt <= safety * q**k:
            found = k
            break
        k += 1
    report = {"t": str(t), "eps": str(eps), "safety": str(safety), "k_adv": found, "cap": cap, "feasible": found is not None}
    if found is not None:
        Qt = adv_queries(code, found, eps)
        report["Q_total"] = Qt
        report["hit_bound"] = str(t * Qt * Qt / Fraction(q**found))
        if n is not None and found > n:
            report["feasible"] = False
            report["reason"] = f"k_adv = {found} exceeds n = {n}"
    else:
        report["reason"] = f"no k <= {cap} meets the target"
    return report


def lifted_online_feasible(code: CodeFamily, k: int, t) -> bool:
    """Q_k^2 t / q^k <= 1/100."""
    Qk = code.q_parameter(k)
    return Fraction(t) * Qk * Qk <= Fraction(code.field.q**k, 100)
