"""Online erasure / corruption oracles, adversary strategies and the game runner.

After the i-th answer is delivered the adversary may manipulate up to its
allowance of points: fixed-rate accounting grants floor((i+1)t) - floor(it)
per step, budget accounting lets the total manipulated count reach floor(it).
A repeated query returns the first answer given for that point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

import numpy as np

from .functab import ERASED, FunctionTable
from .rng import child
from .space import to_index, to_vectors
from .testers import ERASURE_SEEN, TesterSpec, Verdict, run_tester

__all__ = [
    "ERASURE",
    "CORRUPTION",
    "FIXED_RATE",
    "BUDGET",
    "ProtocolViolation",
    "OracleSession",
    "AdversaryView",
    "Strategy",
    "NoAdversary",
    "RandomEraser",
    "SumEraser",
    "SpanInferenceEraser",
    "RandomCorruptor",
    "STRATEGIES",
    "ERASURE_STRATEGIES",
    "make_strategy",
    "GameRecord",
    "run_game",
    "erasure_hit_rate",
    "fixed_rate_allowance",
]

ERASURE, CORRUPTION = "ERASURE", "CORRUPTION"
FIXED_RATE, BUDGET = "FIXED_RATE", "BUDGET"


class ProtocolViolation(RuntimeError):
    pass


def fixed_rate_allowance(t: Fraction, i: int) -> int:
    return math.floor((i + 1) * t) - math.floor(i * t)


@dataclass
class AdversaryView:
    """What a strategy may look at: the transcript and its own past moves.

    The containers are the session's own, shared read-only to avoid copying
    the transcript on every move.
    """

    field: object
    n: int
    mode: str
    trace: list[tuple[int, int]]
    queried: object  # supports `in`
    manipulated: set[int]
    truth: FunctionTable


class Strategy:
    name = "strategy"
    modes = (ERASURE, CORRUPTION)

    def __init__(self, rng=None) -> None:
        self.rng = rng

    def reset(self, rng) -> None:
        self.rng = rng

    def move(self, view: AdversaryView, allowance: int) -> dict[int, int]:
        raise NotImplementedError


class NoAdversary(Strategy):
    name = "none_adv"

    def move(self, view, allowance):
        return {}


def _fresh_points(view: AdversaryView, count: int, rng, limit: int = 64) -> list[int]:
    size = view.field.q**view.n
    out: list[int] = []
    if len(view.queried) + len(view.manipulated) >= size:
        return out
    tries = 0
    while len(out) < count and tries < limit * max(count, 1):
        x = int(rng.integers(size))
        tries += 1
        if x not in view.queried and x not in view.manipulated and x not in out:
            out.append(x)
    return out


class RandomEraser(Strategy):
    name = "random_eraser"
    modes = (ERASURE,)

    def move(self, view, allowance):
        return {x: ERASED for x in _fresh_points(view, allowance, self.rng)}


class SumEraser(Strategy):
    """Erase a*x + b*y over observed pairs, newest pairs first, (a, b) nonzero in lex order."""

    name = "sum_eraser"
    modes = (ERASURE,)
    PAIR_DEPTH = 64

    def reset(self, rng) -> None:
        super().reset(rng)
        self._vec: dict[int, np.ndarray] = {}

    def _v(self, x: int, q: int, n: int) -> np.ndarray:
        v = self._vec.get(x)
        if v is None:
            v = self._vec[x] = to_vectors(x, q, n)
        return v

    def move(self, view, allowance):
        if allowance <= 0:
            return {}
        field, n, q = view.field, view.n, view.field.q
        pts: list[int] = []
        for x, _ in reversed(view.trace):  # distinct, newest first
            if x not in pts:
                pts.append(x)
                if len(pts) > self.PAIR_DEPTH:
                    break
        if len(pts) < 2:
            return {}
        coeffs = [(a, b) for a in range(1, q) for b in range(1, q)]
        out: dict[int, int] = {}
        # pairs ordered by the older member's recency, newest pair first
        for j in range(1, len(pts)):
            for i in range(j):
                if q == 2:
                    cands = [pts[i] ^ pts[j]]
                else:
                    u, v = self._v(pts[i], q, n), self._v(pts[j], q, n)
                    cands = [int(to_index(field.vadd(field.vmul(a, u), field.vmul(b, v)), q)) for a, b in coeffs]
                for z in cands:
                    if z in view.queried or z in view.manipulated or z in out:
                        continue
                    out[z] = ERASED
                    if len(out) == allowance:
                        return out
        return out


class SpanInferenceEraser(Strategy):
    """Erase random unqueried points of the span of the queries seen so far."""

    name = "span_inference_eraser"
    modes = (ERASURE,)

    def reset(self, rng) -> None:
        super().reset(rng)
        self._basis = None
        self._seen = 0

    def _update(self, view) -> np.ndarray:
        # echelon basis of the queried points, extended one point at a time
        field, n, q = view.field, view.n, view.field.q
        if self._basis is None:
            self._basis = np.zeros((0, n), dtype=np.int64)
            self._pivots: list[int] = []
        for x, _ in view.trace[self._seen :]:
            if len(self._pivots) == n:
                break
            v = to_vectors(x, q, n)
            for row, p in zip(self._basis, self._pivots):
                if v[p]:
                    v = field.vsub(v, field.vmul(int(v[p]), row))
            nz = np.flatnonzero(v)
            if nz.size:
                v = field.vmul(int(field.inv_table[v[nz[0]]]), v)
                self._basis = np.vstack([self._basis, v[None, :]])
                self._pivots.append(int(nz[0]))
        self._seen = len(view.trace)
        return self._basis

    def move(self, view, allowance):
        if allowance <= 0 or not view.trace:
            return {}
        q = view.field.q
        basis = self._update(view)
        r = len(basis)
        if r == 0:
            return {}
        out: dict[int, int] = {}
        coeffs = self.rng.integers(0, q, size=(8 * allowance, r))
        for z in to_index(view.field.matmul(coeffs, basis), q).tolist():
            if z not in view.queried and z not in view.manipulated and z not in out:
                out[z] = ERASED
                if len(out) == allowance:
                    break
        return out


class RandomCorruptor(Strategy):
    name = "random_corruptor"
    modes = (CORRUPTION,)

    def move(self, view, allowance):
        field = view.field
        out = {}
        for x in _fresh_points(view, allowance, self.rng):
            out[x] = field.add(int(view.truth.values[x]), int(self.rng.integers(1, field.q)))
        return out


STRATEGIES = {
    cls.name: cls for cls in (NoAdversary, RandomEraser, SumEraser, SpanInferenceEraser, RandomCorruptor)
}
ERASURE_STRATEGIES = ("none_adv", "random_eraser", "sum_eraser", "span_inference_eraser")


def make_strategy(name: str) -> Strategy:
    if name not in STRATEGIES:
        raise KeyError(f"unknown adversary {name!r}; choose from {sorted(STRATEGIES)}")
    return STRATEGIES[name]()


class OracleSession:
    """The oracle sequence O_1, O_2, ... seen by one tester run."""

    def __init__(
        self,
        truth: FunctionTable,
        strategy: Strategy | None = None,
        t=0,
        mode: str = ERASURE,
        accounting: str = FIXED_RATE,
        rng=None,
    ) -> None:
        truth.require_complete()
        self.truth = truth
        self.field = truth.field
        self.n = truth.n
        self.t = Fraction(t)
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if mode not in (ERASURE, CORRUPTION):
            raise ValueError(f"unknown mode {mode!r}")
        if accounting not in (FIXED_RATE, BUDGET):
            raise ValueError(f"unknown accounting {accounting!r}")
        self.mode = mode
        self.accounting = accounting
        self.strategy = strategy or NoAdversary()
        if mode not in self.strategy.modes:
            raise ValueError(f"{self.strategy.name} does not support {mode} mode")
        self.strategy.reset(rng if rng is not None else np.random.default_rng(0))
        self.current = truth.values.copy()
        self.i = 0
        self.trace: list[tuple[int, int]] = []
        self.memo: dict[int, int] = {}
        self.manipulated: set[int] = set()
        self.timeline: list[tuple[int, list[int]]] = []
        self.forfeit: str | None = None
        self.erasure_seen = False

    @property
    def spent(self) -> int:
        return len(self.manipulated)

    def allowance(self, i: int) -> int:
        """Manipulations permitted right after the i-th answer."""
        if i < 1:
            raise ValueError("allowance is defined for i >= 1")
        a, b = self.t.numerator, self.t.denominator
        if self.accounting == FIXED_RATE:
            return ((i + 1) * a) // b - (i * a) // b
        return (i * a) // b - self.spent

    def cumulative_cap(self, i: int) -> int:
        """Largest Dist(O_1, O_{i+1}) the accounting permits."""
        a, b = self.t.numerator, self.t.denominator
        if self.accounting == FIXED_RATE:
            return ((i + 1) * a) // b - a // b
        return (i * a) // b

    def snapshot(self) -> FunctionTable:
        return FunctionTable(self.field, self.n, self.current)

    def query(self, x: int) -> int:
        x = int(x)
        if x in self.memo:
            ans = self.memo[x]
        else:
            ans = int(self.current[x])
            self.memo[x] = ans
        self.i += 1
        self.trace.append((x, ans))
        if ans == ERASED:
            self.erasure_seen = True
        if self.forfeit is None and self.t > 0:
            self._adversary_turn()
        return ans

    def _adversary_turn(self) -> None:
        allow = self.allowance(self.i)
        view = AdversaryView(self.field, self.n, self.mode, self.trace, self.memo.keys(), self.manipulated, self.truth)
        try:
            moves = self.strategy.move(view, allow)
            self._apply(moves, allow)
        except ProtocolViolation as exc:
            self.forfeit = str(exc)

    def _apply(self, moves: dict[int, int], allow: int) -> None:
        if len(moves) > allow:
            raise ProtocolViolation(f"{self.strategy.name} used {len(moves)} manipulations, allowance {allow}")
        size = self.field.q**self.n
        for x, v in moves.items():
            if not 0 <= x < size:
                raise ProtocolViolation(f"point {x} outside the domain")
            if self.mode == ERASURE and v != ERASED:
                raise ProtocolViolation("erasure-mode move must write ERASED")
            if self.mode == CORRUPTION and (not 0 <= v < self.field.q or v == self.truth.values[x]):
                raise ProtocolViolation("corruption must write a field element different from the input")
        if not moves:
            return
        keys = list(moves)
        saved = self.current[keys].copy(), set(self.manipulated)
        for x, v in moves.items():
            self.current[x] = v
            self.manipulated.add(x)
        try:
            self._check_invariants()
        except ProtocolViolation:
            self.current[keys] = saved[0]
            self.manipulated = saved[1]
            raise
        self.timeline.append((self.i, sorted(moves)))

    def _check_invariants(self) -> None:
        # only _apply writes to current, so differences can only sit on manipulated points
        touched = np.fromiter(self.manipulated, dtype=np.int64, count=len(self.manipulated))
        diff = self.current[touched] != self.truth.values[touched]
        dist = int(diff.sum())
        if dist != len(self.manipulated):
            raise ProtocolViolation("manipulated set out of sync with the oracle")
        # per-step fixed-rate grants telescope to floor((i+1)t) - floor(t), which can exceed i*t for fractional t
        cap = self.cumulative_cap(self.i)
        if dist > cap:
            raise ProtocolViolation(f"distance {dist} exceeds the cumulative cap {cap} after {self.i} answers")
        if self.mode == ERASURE and (self.current[touched] != ERASED).any():
            raise ProtocolViolation("erasure mode changed a value")


@dataclass
class GameRecord:
    tester: dict
    adversary: str
    mode: str
    accounting: str
    t: str
    seed: int
    verdict: dict
    trace: list
    erasures: list
    forfeit: str | None = None
    extra: dict = dc_field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.verdict["decision"] == "ACCEPT"

    @property
    def erasure_seen(self) -> bool:
        return self.verdict["reason"] == ERASURE_SEEN

    def to_json(self) -> str:
        return json.dumps(
            {
                "tester": self.tester,
                "adversary": self.adversary,
                "mode": self.mode,
                "accounting": self.accounting,
                "t": self.t,
                "seed": self.seed,
                "verdict": self.verdict,
                "forfeit": self.forfeit,
                "trace": self.trace,
                "erasures": self.erasures,
            },
            sort_keys=True,
        )


def run_game(
    f: FunctionTable,
    spec: TesterSpec,
    strategy: str | Strategy,
    seed: int,
    t=1,
    mode: str = ERASURE,
    accounting: str = FIXED_RATE,
    keep_trace: bool = True,
) -> GameRecord:
    """One tester run through a fresh session; tester and adversary use separate streams."""
    strat = make_strategy(strategy) if isinstance(strategy, str) else strategy
    session = OracleSession(f, strat, t=t, mode=mode, accounting=accounting, rng=child(seed, 0, tag=2))
    verdict: Verdict = run_tester(session, spec, child(seed, 0, tag=1))
    return GameRecord(
        tester=spec.to_dict(),
        adversary=strat.name,
        mode=mode,
        accounting=accounting,
        t=str(Fraction(t)),
        seed=seed,
        verdict=verdict.to_dict(),
        trace=[[x, a] for x, a in session.trace] if keep_trace else [],
        erasures=[[i, pts] for i, pts in session.timeline] if keep_trace else [],
        forfeit=session.forfeit,
        extra={"erasure_hit": session.erasure_seen},
    )


def erasure_hit_rate(f: FunctionTable, spec: TesterSpec, strategy: str, trials: int, seed: int, t=1) -> dict:
    """Fraction of games in which some answer was ERASED, next to t*Q_total^2/q^k."""
    hits = 0
    for g in range(trials):
        rec = run_game(f, spec, strategy, seed * 1_000_003 + g, t=t, keep_trace=False)
        hits += bool(rec.extra["erasure_hit"])
    q, k = f.field.q, spec.k if spec.k is not None else spec.n
    bound = Fraction(t) * spec.queries_total**2 / Fraction(q**k)
    return {"trials": trials, "hits": hits, "rate": Fraction(hits, trials) if trials else Fraction(0),
            "bound": bound, "vacuous": bound >= 1}
