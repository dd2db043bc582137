"""Sample-based, semi-sample-based, repeated, online-wrapped and BLR testers.

Testers are non-adaptive: each one draws its whole query plan from its own
random stream, then asks the points in order through an oracle.  An oracle is
anything with ``query(x) -> symbol``; a FunctionTable is wrapped in a
``TableOracle``.  Any ERASED answer stops the tester with an accept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .functab import ERASED, FunctionTable
from .rm import CodeFamily
from .space import random_subspace, rref, to_index, to_vectors

__all__ = [
    "ACCEPT",
    "REJECT",
    "CONSISTENT",
    "NO_CODEWORD_FITS",
    "ERASURE_SEEN",
    "UnsupportedFamily",
    "Verdict",
    "TesterSpec",
    "TableOracle",
    "QueryPlan",
    "consistency_check",
    "plan_semi_sample",
    "plan_sample",
    "sample_based_test",
    "semi_sample_test",
    "repetitions",
    "repeated_tester",
    "online_wrapper",
    "blr_test",
    "run_tester",
    "distinguishing_sample_size",
    "all_pairs_distinguished",
]

ACCEPT, REJECT = "ACCEPT", "REJECT"
CONSISTENT, NO_CODEWORD_FITS, ERASURE_SEEN = "CONSISTENT", "NO_CODEWORD_FITS", "ERASURE_SEEN"

REPEAT_CONSTANT = 4


class UnsupportedFamily(TypeError):
    pass


@dataclass(frozen=True)
class Verdict:
    decision: str
    reason: str
    witness: tuple[int, ...] | None = None

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT

    def to_dict(self) -> dict:
        return {"decision": self.decision, "reason": self.reason, "witness": list(self.witness) if self.witness else None}


ERASURE_VERDICT = Verdict(ACCEPT, ERASURE_SEEN)


@dataclass
class TesterSpec:
    """kind is one of SAMPLE, SEMI_SAMPLE, BLR; Q is per round, reps rounds."""

    __test__ = False

    kind: str
    code: CodeFamily | None
    n: int
    k: int | None = None
    Q: int | None = None
    reps: int = 1
    eps: Fraction | None = None

    def __post_init__(self) -> None:
        self.kind = self.kind.upper()
        if self.kind not in ("SAMPLE", "SEMI_SAMPLE", "BLR"):
            raise ValueError(f"unknown tester kind {self.kind!r}")
        if self.kind == "SEMI_SAMPLE":
            if self.k is None:
                raise ValueError("semi-sample tester needs k")
            if not self.code.base_dim <= self.k <= self.n:
                raise ValueError(f"need t <= k <= n, got t={self.code.base_dim}, k={self.k}, n={self.n}")
            if self.Q is None:
                self.Q = self.code.q_parameter(self.k)
        elif self.kind == "SAMPLE":
            if self.Q is None:
                self.Q = self.code.q_parameter(self.n)
        else:
            self.Q = 3
        if self.Q < 1:
            raise ValueError("Q must be >= 1")
        if self.eps is not None:
            self.reps = repetitions(self.Q, self.eps)

    @property
    def queries_total(self) -> int:
        return self.reps * self.Q

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "code": None if self.code is None else self.code.name,
            "n": self.n,
            "k": self.k,
            "Q": self.Q,
            "reps": self.reps,
            "eps": None if self.eps is None else str(self.eps),
        }


class TableOracle:
    """Offline oracle: answers straight from a table and keeps a trace."""

    def __init__(self, f: FunctionTable) -> None:
        self.f = f
        self.trace: list[tuple[int, int]] = []

    @property
    def field(self):
        return self.f.field

    @property
    def n(self) -> int:
        return self.f.n

    def query(self, x: int) -> int:
        ans = int(self.f.values[x])
        self.trace.append((int(x), ans))
        return ans


def _as_oracle(source):
    return TableOracle(source) if isinstance(source, FunctionTable) else source


@dataclass(frozen=True)
class QueryPlan:
    points: np.ndarray  # ambient point indices in query order
    local: np.ndarray  # the same points in chart coordinates (vectors in F_q^k)
    k: int
    basis: np.ndarray | None = dc_field(default=None, compare=False)


# -- consistency ---------------------------------------------------------------------


def consistency_check(code: CodeFamily, k: int, vecs, values) -> tuple[bool, tuple[int, ...] | None]:
    """Is some codeword of C_k equal to ``values`` at the points ``vecs`` (rows in F_q^k)?

    Linear families compare ranks of the evaluation matrix with and without
    the value column; extensional families scan their enumerator.  Repeated
    points collapse (the oracle repeats first answers, so they agree).
    """
    field = code.field
    vecs = np.asarray(vecs, dtype=np.int64).reshape(-1, k)
    values = np.asarray(values, dtype=np.int64).ravel()
    if (values == ERASED).any():
        raise ValueError("consistency_check got an ERASED value")
    idx = to_index(vecs, field.q)
    idx, first = np.unique(idx, return_index=True)
    values = values[first]
    if code.is_linear:
        m = code.dim(k)
        if idx.size == 0:
            return True, (0,) * m
        rows = code.basis_rows(k, to_vectors(idx, field.q, k))
        aug = np.hstack([rows, values[:, None]])
        r, rk = rref(aug, field)
        pivots = [int(np.flatnonzero(row)[0]) for row in r[:rk]]
        if m in pivots:
            return False, None
        coeffs = [0] * m
        for row, pc in zip(r[:rk], pivots):
            coeffs[pc] = int(row[m])
        return True, tuple(coeffs)
    try:
        words = code.enumerate(k)
    except NotImplementedError:
        raise UnsupportedFamily(f"{code.name} is neither linear nor enumerable") from None
    hit = np.flatnonzero((words[:, idx] == values[None, :]).all(axis=1))
    if hit.size == 0:
        return False, None
    return True, (int(hit[0]),)


# -- plans -----------------------------------------------------------------------------


def plan_semi_sample(field, n: int, k: int, Q: int, rng) -> QueryPlan:
    sub = random_subspace(field, n, k, rng)
    z = rng.integers(0, field.q**k, size=Q)
    local = to_vectors(z, field.q, k)
    amb = field.matmul(local, sub.matrix) if k else np.zeros((Q, n), dtype=np.int64)
    return QueryPlan(to_index(amb, field.q), local, k, sub.matrix)


def plan_sample(field, n: int, s: int, rng) -> QueryPlan:
    pts = rng.integers(0, field.q**n, size=s)
    return QueryPlan(pts, to_vectors(pts, field.q, n), n, None)


def _ask(oracle, points) -> np.ndarray | None:
    answers = np.empty(len(points), dtype=np.int64)
    for i, x in enumerate(points):
        a = oracle.query(int(x))
        if a == ERASED:
            return None
        answers[i] = a
    return answers


def _decide(code, plan: QueryPlan, answers) -> Verdict:
    if answers is None:
        return ERASURE_VERDICT
    ok, witness = consistency_check(code, plan.k, plan.local, answers)
    return Verdict(ACCEPT, CONSISTENT, witness) if ok else Verdict(REJECT, NO_CODEWORD_FITS)


# -- testers -----------------------------------------------------------------------------


def sample_based_test(source, code: CodeFamily, s: int, rng) -> Verdict:
    """Query s uniform points of F_q^n; accept iff a codeword of C_n fits them."""
    if s < 1:
        raise ValueError("s must be >= 1")
    oracle = _as_oracle(source)
    plan = plan_sample(code.field, oracle.n, s, rng)
    return _decide(code, plan, _ask(oracle, plan.points))


def semi_sample_test(source, spec: TesterSpec, rng) -> Verdict:
    """Random k-subspace, Q uniform points in it, fit against C_k in chart coordinates."""
    oracle = _as_oracle(source)
    plan = plan_semi_sample(spec.code.field, spec.n, spec.k, spec.Q, rng)
    return _decide(spec.code, plan, _ask(oracle, plan.points))


def blr_test(source, rng, n: int | None = None) -> Verdict:
    """One round of f(x) + f(y) = f(x + y) over F_2^n."""
    oracle = _as_oracle(source)
    n = oracle.n if n is None else n
    x, y = (int(v) for v in rng.integers(0, 2**n, size=2))
    answers = _ask(oracle, [x, y, x ^ y])
    if answers is None:
        return ERASURE_VERDICT
    if (answers[0] + answers[1]) % 2 == answers[2]:
        return Verdict(ACCEPT, CONSISTENT)
    return Verdict(REJECT, NO_CODEWORD_FITS)


def repetitions(Q: int, eps) -> int:
    """ceil(4 * (1/(Q eps) + 1)) independent rounds."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = REPEAT_CONSTANT * (1 / (Q * eps) + 1)
    return math.ceil(x)


def _one_round(oracle, spec: TesterSpec, rng) -> Verdict:
    if spec.kind == "SEMI_SAMPLE":
        return semi_sample_test(oracle, spec, rng)
    if spec.kind == "SAMPLE":
        return sample_based_test(oracle, spec.code, spec.Q, rng)
    return blr_test(oracle, rng, spec.n)


def run_tester(source, spec: TesterSpec, rng) -> Verdict:
    """spec.reps rounds of the base tester; reject iff a round rejects."""
    oracle = _as_oracle(source)
    last = Verdict(ACCEPT, CONSISTENT)
    for _ in range(spec.reps):
        v = _one_round(oracle, spec, rng)
        if v.reason == ERASURE_SEEN or v.decision == REJECT:
            return v
        last = v
    return last


def repeated_tester(source, spec: TesterSpec, eps, rng) -> Verdict:
    rounds = repetitions(spec.Q, eps)
    s = TesterSpec(spec.kind, spec.code, spec.n, spec.k, spec.Q, reps=rounds)
    return run_tester(source, s, rng)


def online_wrapper(spec: TesterSpec, session, rng) -> Verdict:
    """Run the tester through an online session; any erased answer means accept."""
    return run_tester(session, spec, rng)


# -- pairwise distinguishability ------------------------------------------------------------


def distinguishing_sample_size(N: int, delta) -> int:
    """ceil((2 ln N + ln 2) / delta) for a rational delta."""
    from .exact import certified_ceil, to_interval

    if N < 2:
        return 0
    return certified_ceil(lambda ctx: (2 * ctx.log(N) + ctx.log(2)) / to_interval(delta, ctx))


def all_pairs_distinguished(words: np.ndarray, points) -> bool:
    """No two distinct codewords agree on all of ``points``."""
    sub = np.ascontiguousarray(np.asarray(words)[:, np.asarray(points, dtype=np.int64)])
    return len(np.unique(sub, axis=0)) == len(np.unique(np.asarray(words), axis=0))
