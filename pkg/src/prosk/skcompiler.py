"""Word compilation over congruence quotients: a base table of shortest words
up to a shallow level, then depth-doubling commutator stages.

The ladder step is the whole algorithm: given a word w with residual
r = g * eval(w)^-1 in K_a, pick levels (n1, m1) with n1 + m1 = a, ask the
commutator oracle for pairs whose product matches r mod K_b (b = 2*n1 + m1,
clipped to the request and the truncation), compile each commutator argument
recursively at the accuracy the refinement law demands (b - m1 for the left
entries, b - n1 for the right), and prepend.  Budgets are certified against
the telescoping bound B^i * l0, never against observed lengths.
"""

from __future__ import annotations

import hashlib
import json

from dataclasses import dataclass

import numpy as np

from . import _bfs
from .errors import (
    BudgetExceeded,
    IndexOutOfRange,
    NotGenerating,
    OracleLevelRejected,
    PrecisionExceedsTruncation,
    UsageError,
)
from .matgroups import ops_for

# ---------------------------------------------------------------------------
# words


class Word:
    """Sequence of (generator index, exponent +-1) over a named generating
    set, stored as packed int32 ops ((idx << 1) | sign-bit)."""

    __slots__ = ("gens_id", "ops")

    def __init__(self, gens_id, ops=None):
        self.gens_id = gens_id
        self.ops = (
            np.array([], dtype=np.int32)
            if ops is None
            else np.asarray(ops, dtype=np.int32)
        )

    def __len__(self):
        return len(self.ops)

    def inverse(self):
        return Word(self.gens_id, (self.ops[::-1] ^ 1).copy())

    def concat(self, other):
        """Concatenation with seam cancellation (adjacent inverse pairs at
        the join only; no other free reduction)."""
        if self.gens_id != other.gens_id:
            raise UsageError("words over different generating sets")
        a, b = self.ops, other.ops
        i, j = len(a), 0
        while i > 0 and j < len(b) and a[i - 1] == b[j] ^ 1:
            i -= 1
            j += 1
        return Word(self.gens_id, np.concatenate([a[:i], b[j:]]))

    def commutator(self, other):
        """[w1, w2] = w1^-1 w2^-1 w1 w2, plain concatenation so that the
        length is exactly 2 (len w1 + len w2)."""
        if self.gens_id != other.gens_id:
            raise UsageError("words over different generating sets")
        parts = [self.inverse().ops, other.inverse().ops, self.ops, other.ops]
        return Word(self.gens_id, np.concatenate(parts))

    def to_json(self):
        return {
            "gens": self.gens_id,
            "ops": [[int(c >> 1), 1 if c & 1 == 0 else -1] for c in self.ops],
        }

    @staticmethod
    def from_json(obj):
        ops = []
        for i, s in obj["ops"]:
            if s not in (1, -1):
                raise UsageError(f"bad exponent {s!r} in word")
            ops.append((int(i) << 1) | (0 if s == 1 else 1))
        return Word(obj["gens"], np.array(ops, dtype=np.int32))


# ---------------------------------------------------------------------------
# generating sets


class GeneratingSet:
    """Realized generators with a content-derived id (shared by words,
    tables, and certificates so mixing them up fails loudly)."""

    def __init__(self, desc, elements, source="anonymous"):
        if not elements:
            raise UsageError("empty generating set")
        self.descriptor = desc
        self.elements = tuple(elements)
        self.source = source
        ops = ops_for(desc)
        blob = json.dumps(
            [ops.serialize(g) for g in self.elements], sort_keys=True
        )
        self.id = hashlib.sha256(
            (desc.describe() + "|" + blob).encode()
        ).hexdigest()[:16]

    def __len__(self):
        return len(self.elements)


def sample_generating_set(desc, k, seed, source=None):
    ops = ops_for(desc)
    rng = np.random.default_rng(seed)
    elems = [ops.sample_uniform(rng) for _ in range(k)]
    return GeneratingSet(
        desc, elems, source or f"sampled:{k}:{seed}"
    )


# ---------------------------------------------------------------------------
# evaluation


def evaluate(word, gens):
    """Left-to-right product of the word over realized generators."""
    ops = ops_for(gens.descriptor)
    n_gens = len(gens.elements)
    if len(word.ops) and (word.ops >> 1).max() >= n_gens:
        raise IndexOutOfRange(
            f"word references generator {(word.ops >> 1).max()} "
            f"of a {n_gens}-element set"
        )
    if hasattr(ops, "power_matrix"):
        # acc <- acc o s is right-to-left accumulation: s1...sk = sk o ... o s1,
        # so feed the word reversed.
        pms = {}
        acc = ops.eval_begin()
        for code in word.ops[::-1]:
            code = int(code)
            if code not in pms:
                idx, sign = _bfs.unpack_op(code)
                g = gens.elements[idx]
                pms[code] = ops.power_matrix(g if sign > 0 else ops.inv(g))
            acc = ops.eval_apply(acc, pms[code])
        return ops.eval_finish(acc)
    invs = {}
    acc = ops.identity()
    for code in word.ops:
        idx, sign = _bfs.unpack_op(int(code))
        if sign > 0:
            g = gens.elements[idx]
        else:
            if idx not in invs:
                invs[idx] = ops.inv(gens.elements[idx])
            g = invs[idx]
        acc = ops.mul(acc, g)
    return acc


# ---------------------------------------------------------------------------
# base tables


class BaseTable:
    def __init__(self, gens, table):
        self.gens = gens
        self.level = table.level
        self.l0 = table.l0
        self.count = table.count
        self._table = table

    def lookup(self, g):
        return Word(self.gens.id, self._table.word_for(g))


def build_base_table(desc, n_base, gens):
    """Shortest words for every coset of G/K_{n_base} (BFS over gens and
    their inverses); raises NotGenerating if the set does not generate."""
    if gens.descriptor != desc:
        raise UsageError("generating set belongs to a different group")
    level = min(n_base, desc.ring.N)
    ops = ops_for(desc)
    table = _bfs.build_table(ops, gens.elements, level)
    return BaseTable(gens, table)


# ---------------------------------------------------------------------------
# plans and certificates


@dataclass(frozen=True)
class CompilePlan:
    kind: str = "dyadic"  # dyadic | triadic
    n0: int | None = None  # override the per-family default

    def __post_init__(self):
        if self.kind not in ("dyadic", "triadic"):
            raise UsageError(f"unknown plan {self.kind!r}")

    @property
    def D(self):
        return 2 if self.kind == "dyadic" else 3

    def arity(self, ops):
        return ops.pairs_bound()

    def budget_base(self, ops):
        A = self.arity(ops)
        return 8 * A * A + 6 * A if self.kind == "dyadic" else (4 * A + 1) ** 6

    def default_n0(self, desc):
        if self.n0 is not None:
            return self.n0
        return 3 if desc.family == "Nottingham" else 1

    def n_base(self, desc):
        return min(self.D * self.default_n0(desc), desc.ring.N)


@dataclass
class CompileCertificate:
    n: int
    length: int
    B: int
    D: int
    i: int
    l0: int
    budget: int
    residual_depth: int
    plan: str
    A: int
    gens_id: str

    def as_dict(self):
        return {
            "n": self.n,
            "length": self.length,
            "B": self.B,
            "D": self.D,
            "i": self.i,
            "l0": self.l0,
            "budget": self.budget,
            "residual_depth": self.residual_depth,
            "plan": self.plan,
            "A": self.A,
            "gens": self.gens_id,
        }


# ---------------------------------------------------------------------------
# the compiler


def _stage_pair(ops, a):
    """Largest-gain admissible oracle levels (n1, m1) with n1 + m1 = a."""
    p = ops.descriptor.ring.p
    nott = ops.descriptor.family == "Nottingham"
    for n1 in range(a // 2, (a + 2) // 3 - 1, -1):
        m1 = a - n1
        if not 1 <= n1 <= m1 <= 2 * n1:
            continue
        if nott and (m1 - n1) % p == 0:
            continue
        return n1, m1
    raise OracleLevelRejected(f"no admissible stage at depth {a}")


class CompilerSession:
    """One compilation context: ops + generators + base table + plan.
    The memo cache maps (accuracy, coset key at that accuracy) to words and
    is private to the session."""

    def __init__(self, gens, table, plan=None):
        self.gens = gens
        self.table = table
        if table.gens.id != gens.id:
            raise UsageError("base table was built over a different set")
        self.plan = plan or CompilePlan()
        self.ops = ops_for(gens.descriptor)
        self._memo = {}

    def _eval(self, word):
        return evaluate(word, self.gens)

    def _residual(self, g, word):
        ops = self.ops
        return ops.mul(g, ops.inv(self._eval(word)))

    def _refine(self, g, t):
        """Word w with g * eval(w)^-1 in K_t."""
        ops = self.ops
        if ops.depth(g) >= t:
            return Word(self.gens.id)
        key = (t, ops.key(g, level=t))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        N = ops.descriptor.ring.N
        if t <= self.table.level:
            w = self.table.lookup(g)
            self._memo[key] = w
            return w
        w = self._refine(g, self.table.level)
        for _ in range(4 * N + 8):
            r = self._residual(g, w)
            a = ops.depth(r)
            if a >= t:
                break
            n1, m1 = _stage_pair(ops, a)
            b = min(2 * n1 + m1, t)
            pairs = ops.oracle(r, n1, m1, capped=(2 * n1 + m1 > N))
            cw = Word(self.gens.id)
            for P, W in pairs:
                wp = self._refine(P, b - m1)
                ww = self._refine(W, b - n1)
                cw = cw.concat(wp.commutator(ww))
            w = cw.concat(w)
        else:
            raise AssertionError(f"ladder stalled refining to level {t}")
        self._memo[key] = w
        return w

    def compile(self, target, n):
        ops = self.ops
        desc = ops.descriptor
        if target.descriptor != desc:
            raise UsageError("target belongs to a different group")
        N = desc.ring.N
        if not 1 <= n <= N:
            raise PrecisionExceedsTruncation(
                f"precision {n} outside [1, {N}]"
            )
        word = self._refine(target, n)
        resid = self._residual(target, word)
        rd = ops.depth(resid)
        assert rd >= n, f"compiled word misses target: depth {rd} < {n}"
        plan = self.plan
        D = plan.D
        B = plan.budget_base(ops)
        nb = self.table.level
        i, cap = 0, nb
        while cap < n:  # exact ceil(log_D(n / n_base)), no float edge cases
            cap *= D
            i += 1
        l0 = max(self.table.l0, 1)
        budget = B**i * l0
        if len(word) > budget:
            raise BudgetExceeded(
                f"word length {len(word)} exceeds certified budget {budget}"
            )
        cert = CompileCertificate(
            n=n,
            length=len(word),
            B=B,
            D=D,
            i=i,
            l0=l0,
            budget=budget,
            residual_depth=int(rd),
            plan=plan.kind,
            A=plan.arity(ops),
            gens_id=self.gens.id,
        )
        return word, cert


def compile_element(target, n, table, plan=None):
    """One-shot form: session setup + compile."""
    session = CompilerSession(table.gens, table, plan)
    return session.compile(target, n)
