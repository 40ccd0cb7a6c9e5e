"""Cayley-graph measurements on finite quotients: exact diameters, the walk
operator's norm on mean-zero functions, mixing profiles, and random-walk
coordinate statistics.

Everything here works against an enumerated graph: elements in BFS order from
the identity, one left-multiplication permutation per walk direction.  The
group itself only has to quack like the quotient facades (identity / mul /
inv / key / group_order / sample_uniform / serialize), so the tiny cyclic
adapter below is a first-class citizen — it is both the non-FAb contrast
family and the corpus for the exhaustive generating-set sweeps.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    BudgetExceeded,
    NotGenerating,
    NotSymmetricSet,
    UsageError,
)

DENSE_EIG_CAP = 5000  # dense symmetric eigensolve up to here
EXACT_CONV_CAP = 3000  # integer-arithmetic convolution up to here
CONV_CAP = 500_000  # float convolution (one vector, gathers only)
POWER_TOL = 1e-9
POWER_CAP = 10**6
SWEEP_WORK_CAP = 2 * 10**8  # exhaustive generating-set sweeps, gather units


def _budget_mb():
    return int(os.environ.get("PROSK_BUDGET_MB", "1024"))


# ---------------------------------------------------------------------------
# cyclic adapter


class CyclicOps:
    """Additive Z/nZ behind the same duck-typed surface as the quotient
    facades.  `p` marks a Z/p^e instance so digit coordinates make sense."""

    def __init__(self, n, p=None):
        if n < 1:
            raise UsageError("modulus must be positive")
        self.n = n
        self.p = p
        self.descriptor = None

    def identity(self):
        return 0

    def mul(self, a, b):
        return (a + b) % self.n

    def inv(self, a):
        return (-a) % self.n

    def key(self, a, level=None):
        return a % self.n

    def group_order(self):
        return self.n

    def elements(self):
        return list(range(self.n))

    def sample_uniform(self, rng):
        return int(rng.integers(self.n))

    def serialize(self, a):
        return int(a)

    def deserialize(self, raw):
        return int(raw) % self.n


def cyclic_group(p, e):
    """Z/p^e with its prime recorded (digit coordinates, contrast runs)."""
    return CyclicOps(p**e, p=p)


def cyclic_pair(n_big, n_small):
    """(G, Q, pi) for the reduction Z/n_big -> Z/n_small."""
    if n_big % n_small:
        raise UsageError(f"{n_small} does not divide {n_big}")
    return CyclicOps(n_big), CyclicOps(n_small), lambda x: x % n_small


def congruence_pair(ops, m):
    """(G, Q, pi) for a quotient facade and its level-m congruence image."""
    from .matgroups import ops_for

    qops = ops_for(ops.descriptor.truncated(m))
    return ops, qops, lambda g: ops.project(g, m)


def all_elements(ops):
    if hasattr(ops, "elements"):
        return ops.elements()
    from . import matgroups

    return matgroups.enumerate_quotient(ops.descriptor)


# ---------------------------------------------------------------------------
# symmetric sets


def symmetrize(ops, gens, include_identity=False):
    """gens with inverses adjoined, deduplicated; optionally the identity
    too (the lazy walk)."""
    out, seen = [], set()
    if include_identity:
        e = ops.identity()
        seen.add(ops.key(e))
        out.append(e)
    for g in gens:
        for h in (g, ops.inv(g)):
            k = ops.key(h)
            if k not in seen:
                seen.add(k)
                out.append(h)
    return out


def is_symmetric(ops, elems):
    keys = {ops.key(g) for g in elems}
    return all(ops.key(ops.inv(g)) in keys for g in elems)


# ---------------------------------------------------------------------------
# the enumerated graph


class CayleyGraph:
    """Left-multiplication tables for one (G, S): elements[0] is the
    identity, perms[a, j] = index of dirs[a] * elements[j], dist[j] the BFS
    distance from the identity (so dist.max() is the diameter — the graph is
    vertex-transitive)."""

    def __init__(self, ops, dirs, perms, dist, elements=None, mats=None):
        self.ops = ops
        self.dirs = dirs
        self.perms = perms
        self.dist = dist
        self._elements = elements
        self._mats = mats
        self.order = perms.shape[1]
        self.root = 0
        self.diameter = int(dist.max()) if self.order else 0

    def element(self, i):
        if self._elements is not None:
            return self._elements[i]
        from .matgroups import FilteredElement

        desc = self.ops.descriptor
        mat = tuple(tuple(int(x) for x in row) for row in self._mats[i])
        return FilteredElement(desc, mat)

    def walk_matvec(self, v):
        """One step of the walk operator: average of v over S-translates.
        Valid because dirs is symmetric (as a set, s and s^-1 both appear)."""
        return v[self.perms].mean(axis=0)


def _graph_budget(order, k):
    need = order * (72 + 4 * k)  # element keys + perm rows + slack
    cap = _budget_mb() * 2**20
    if need > cap:
        raise BudgetExceeded(
            f"graph on {order} elements x {k} directions wants ~{need >> 20} MB, "
            f"budget {_budget_mb()} MB (PROSK_BUDGET_MB)"
        )


def _bfs_over_perms(perms, n, root=0):
    """Index-frontier BFS: O(edges) total regardless of depth."""
    dist = np.full(n, -1, dtype=np.int32)
    dist[root] = 0
    frontier = np.array([root], dtype=np.int64)
    d = 0
    while frontier.size:
        cand = np.unique(perms[:, frontier].ravel())
        cand = cand[dist[cand] < 0]
        d += 1
        dist[cand] = d
        frontier = cand
    return dist


def build_graph(ops, gens, *, adjoin_identity=True, order=None):
    """Enumerate the whole group by BFS over S u S^-1 (identity adjoined for
    the lazy walk unless told otherwise) and tabulate the left-multiplication
    permutations.  NotGenerating if the ball closes before covering `order`
    elements (pass `order` explicitly to walk a proper subgroup, e.g. a
    congruence kernel)."""
    if order is None:
        order = ops.group_order()
    dirs = symmetrize(ops, gens, include_identity=adjoin_identity)
    _graph_budget(order, len(dirs))
    ekey = ops.key(ops.identity())
    step = [g for g in dirs if ops.key(g) != ekey]
    if not step:
        if order == 1:
            perms = np.zeros((len(dirs), 1), dtype=np.int32)
            return CayleyGraph(ops, dirs, perms, np.zeros(1, np.int32),
                               elements=[ops.identity()])
        raise NotGenerating("no non-identity directions")

    if _zp_fast_path(ops, order):
        return _zp_graph(ops, dirs, step, order)
    return _scalar_graph(ops, dirs, step, order)


def _scalar_graph(ops, dirs, step, order):
    e = ops.identity()
    elements = [e]
    index = {ops.key(e): 0}
    dist = [0]
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            x = elements[i]
            for s in step:
                h = ops.mul(s, x)
                k = ops.key(h)
                if k not in index:
                    index[k] = len(elements)
                    elements.append(h)
                    dist.append(dist[i] + 1)
                    nxt.append(index[k])
        frontier = nxt
    if len(elements) != order:
        raise NotGenerating(
            f"directions span {len(elements)} of {order} elements"
        )
    n = len(elements)
    perms = np.empty((len(dirs), n), dtype=np.int32)
    for a, s in enumerate(dirs):
        row = perms[a]
        for j, x in enumerate(elements):
            row[j] = index[ops.key(ops.mul(s, x))]
    return CayleyGraph(ops, dirs, perms, np.array(dist, np.int32),
                       elements=elements)


# batched engine for big Zp matrix quotients (the scalar walk's Python-level
# multiply dominates past a few 10^4 elements)


def _zp_fast_path(ops, order):
    desc = getattr(ops, "descriptor", None)
    if desc is None or desc.family == "Nottingham":
        return False
    ring = desc.ring
    if ring.kind != "Zp" or order <= 4000:
        return False
    return (ring.p**ring.N) ** (desc.d * desc.d) < 2**63  # packable keys


def _zp_graph(ops, dirs, step, order):
    desc = ops.descriptor
    ring = desc.ring
    d = desc.d
    mod = ring.p**ring.N
    weights = mod ** np.arange(d * d, dtype=np.int64)

    def pack(mats):
        return mats.reshape(len(mats), -1) @ weights

    smats = np.array([s.mat for s in step], dtype=np.int64)
    frontier = np.eye(d, dtype=np.int64)[None]
    chunks = [frontier]
    dists = [np.zeros(1, np.int32)]
    visited = pack(frontier)
    level = 0
    while frontier.size:
        prod = np.einsum("kab,fbc->kfac", smats, frontier) % mod
        prod = prod.reshape(-1, d, d)
        keys = pack(prod)
        uk, ui = np.unique(keys, return_index=True)
        fresh = ~np.isin(uk, visited)
        frontier = prod[ui[fresh]]
        level += 1
        if frontier.size:
            chunks.append(frontier)
            dists.append(np.full(len(frontier), level, np.int32))
            visited = np.sort(np.concatenate([visited, uk[fresh]]))
    mats = np.concatenate(chunks)
    dist = np.concatenate(dists)
    if len(mats) != order:
        raise NotGenerating(f"directions span {len(mats)} of {order} elements")
    okeys = pack(mats)
    sorter = np.argsort(okeys)
    skeys = okeys[sorter]

    def lookup(keys):
        pos = np.searchsorted(skeys, keys)
        assert pos.max(initial=0) < len(skeys) and np.array_equal(
            skeys[pos], keys
        ), "left-translate left the group"
        return sorter[pos]

    perms = np.empty((len(dirs), order), dtype=np.int32)
    for a, s in enumerate(dirs):
        prod = np.einsum("ab,nbc->nac", np.array(s.mat, np.int64), mats) % mod
        perms[a] = lookup(pack(prod))
    return CayleyGraph(ops, dirs, perms, dist, mats=mats)


def diameter_bfs(ops, gens, *, order=None):
    """Exact diameter of Cay(G, S u S^-1): the identity's eccentricity."""
    return build_graph(ops, gens, order=order).diameter


# ---------------------------------------------------------------------------
# spectral gap


def spectral_gap(graph, *, tol=POWER_TOL, max_iter=POWER_CAP):
    """Norm of the walk operator on mean-zero functions.  Dense symmetric
    eigensolve up to DENSE_EIG_CAP elements, power iteration with the
    constant vector deflated above (stop at residual <= tol)."""
    if not is_symmetric(graph.ops, graph.dirs):
        raise NotSymmetricSet("walk directions are not closed under inverse")
    n = graph.order
    if n == 1:
        return 0.0
    if n <= DENSE_EIG_CAP:
        A = np.zeros((n, n))
        cols = np.arange(n)
        for p in graph.perms:
            A[p, cols] += 1.0
        A /= len(graph.perms)
        lam = np.linalg.eigvalsh(A)
        rho = max(abs(float(lam[0])), abs(float(lam[-2])))
    else:
        rng = np.random.default_rng(0x5EC7)
        v = rng.standard_normal(n)
        v -= v.mean()
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = graph.walk_matvec(v)
            w -= w.mean()
            lam = float(v @ w)
            if np.linalg.norm(w - lam * v) <= tol:
                break
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            v = w / nw
        rho = abs(lam)
    return min(max(rho, 0.0), 1.0)


# ---------------------------------------------------------------------------
# mixing profiles


def mixing_profile(graph, l_max, *, exact=None):
    """deviation(l) = max_z |P[walk at z after l steps] - 1/|G|| for
    l = 0..l_max.  Exact mode runs the convolution in integers (denominator
    |S|^l) and returns Fractions; float mode returns floats."""
    n = graph.order
    if exact is None:
        exact = n <= EXACT_CONV_CAP
    k = len(graph.perms)
    if exact:
        num = [0] * n
        num[graph.root] = 1
        den = 1
        out = []
        for l in range(l_max + 1):
            u = Fraction(1, n)
            dev = max(abs(Fraction(c, den) - u) for c in num)
            out.append(dev)
            if l == l_max:
                break
            new = [0] * n
            for p in graph.perms:
                for j in range(n):
                    new[j] += num[p[j]]
            num = new
            den *= k
        return out
    if n > CONV_CAP:
        raise BudgetExceeded(f"convolution vector of {n} entries over cap")
    v = np.zeros(n)
    v[graph.root] = 1.0
    out = []
    for l in range(l_max + 1):
        out.append(float(np.abs(v - 1.0 / n).max()))
        if l < l_max:
            v = graph.walk_matvec(v)
    return out


@dataclass
class SpectralReport:
    order: int
    set_size: int
    diameter: int
    rho: float
    inv_gap: float
    sandwich_lower: float
    sandwich_upper: float
    profile: list
    exact_profile: bool

    def as_dict(self):
        prof = [float(x) for x in self.profile]
        out = {
            "order": self.order,
            "set_size": self.set_size,
            "diameter": self.diameter,
            "rho": self.rho,
            "inv_gap": self.inv_gap,
            "sandwich_lower": self.sandwich_lower,
            "sandwich_upper": self.sandwich_upper,
            "profile": prof,
            "exact_profile": self.exact_profile,
        }
        if self.exact_profile:
            out["profile_exact"] = [str(x) for x in self.profile]
        return out


def spectral_report(ops, gens, *, l_max=50, exact=None, tol=POWER_TOL,
                    adjoin_identity=True):
    """Diameter, gap, and mixing profile for one (G, S); checks the sandwich
    (diam-1)/log|G| <= 1/(1-rho) <= |S| diam^2 before returning."""
    graph = build_graph(ops, gens, adjoin_identity=adjoin_identity)
    rho = spectral_gap(graph, tol=tol)
    n = graph.order
    diam = graph.diameter
    k = len(graph.dirs)
    if rho >= 1.0 - 1e-14:
        raise NotGenerating(
            "walk norm at 1: directions do not mix (adjoin the identity?)"
        )
    inv_gap = 1.0 / (1.0 - rho)
    lower = (diam - 1) / math.log(n) if n > 1 else 0.0
    upper = float(k * diam * diam) if n > 1 else 1.0
    profile = mixing_profile(graph, l_max, exact=exact)
    rep = SpectralReport(
        order=n,
        set_size=k,
        diameter=diam,
        rho=rho,
        inv_gap=inv_gap,
        sandwich_lower=lower,
        sandwich_upper=upper,
        profile=profile,
        exact_profile=not isinstance(profile[0], float),
    )
    assert lower <= inv_gap + tol and inv_gap <= upper + tol, (
        f"sandwich violated: {lower} / {inv_gap} / {upper}"
    )
    return rep


# ---------------------------------------------------------------------------
# exhaustive generating-set sweeps


def inverse_pair_classes(ops, elements):
    """The {x, x^-1} classes with the identity dropped — the atoms every
    symmetric subset is a union of."""
    ekey = ops.key(ops.identity())
    seen = set()
    classes = []
    for x in elements:
        k = ops.key(x)
        if k == ekey or k in seen:
            continue
        xi = ops.inv(x)
        ki = ops.key(xi)
        seen.add(k)
        seen.add(ki)
        classes.append((x,) if ki == k else (x, xi))
    return classes


@dataclass
class DiameterSurvey:
    value: int
    mode: str  # "exhaustive" | "sampled-lower-bound"
    witness: list
    examined: int
    generating: int

    def as_dict(self):
        return {
            "value": self.value,
            "mode": self.mode,
            "witness": self.witness,
            "examined": self.examined,
            "generating": self.generating,
        }


def _class_perms(ops, elements, classes):
    index = {ops.key(x): i for i, x in enumerate(elements)}
    out = []
    for cls in classes:
        rows = np.empty((len(cls), len(elements)), dtype=np.int32)
        for r, s in enumerate(cls):
            for j, x in enumerate(elements):
                rows[r, j] = index[ops.key(ops.mul(s, x))]
        out.append(rows)
    return out


def worst_case_diameter(ops, *, elements=None, mode="exhaustive", trials=200,
                        set_sizes=(2, 3, 4), seed=0, work_cap=SWEEP_WORK_CAP):
    """max over symmetric generating sets of diam(G, S).  Exhaustive mode
    sweeps every union of inverse-pair classes (the subset count is the hard
    wall — BudgetExceeded once 2^classes * |G| leaves the work cap); sampled
    mode only certifies a lower bound and says so."""
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        best, witness, gen = -1, [], 0
        for t in range(trials):
            k = int(rng.choice(list(set_sizes)))
            gens = [ops.sample_uniform(rng) for _ in range(k)]
            try:
                g = build_graph(ops, gens, adjoin_identity=False)
            except NotGenerating:
                continue
            gen += 1
            if g.diameter > best:
                best = g.diameter
                witness = [ops.serialize(x) for x in gens]
        if gen == 0:
            raise NotGenerating(f"no generating draw in {trials} trials")
        return DiameterSurvey(best, "sampled-lower-bound", witness, trials, gen)

    elems = all_elements(ops) if elements is None else elements
    n = len(elems)
    if n == 1:
        return DiameterSurvey(0, "exhaustive", [], 1, 1)
    if n > 200:
        raise BudgetExceeded(
            f"exhaustive sweep capped at 200 elements, got {n}; use sampled mode"
        )
    classes = inverse_pair_classes(ops, elems)
    c = len(classes)
    if (2**c) * n * 2 * c > work_cap:
        raise BudgetExceeded(
            f"{c} inverse-pair classes -> {2**c} symmetric sets over the work cap"
        )
    cperms = _class_perms(ops, elems, classes)
    root = next(i for i, x in enumerate(elems)
                if ops.key(x) == ops.key(ops.identity()))
    best, witness, gen = -1, None, 0
    for bits in range(1, 2**c):
        ps = np.concatenate([cperms[i] for i in range(c) if bits >> i & 1])
        dist = _bfs_over_perms(ps, n, root=root)
        if dist.min() < 0:
            continue  # bits does not generate
        gen += 1
        d = int(dist.max())
        if d > best:
            best, witness = d, bits
    wit = [ops.serialize(x) for i in range(c) if witness >> i & 1
           for x in classes[i]]
    return DiameterSurvey(best, "exhaustive", wit, 2**c - 1, gen)


# ---------------------------------------------------------------------------
# quotient comparisons


def _quotient_diameter(qops, proj_set):
    """Diameter of the image graph; the projected set generates whenever the
    upstairs set does."""
    elems = all_elements(qops)
    index = {qops.key(x): i for i, x in enumerate(elems)}
    n = len(elems)
    perms = np.empty((len(proj_set), n), dtype=np.int32)
    for a, s in enumerate(proj_set):
        for j, x in enumerate(elems):
            perms[a, j] = index[qops.key(qops.mul(s, x))]
    root = index[qops.key(qops.identity())]
    dist = _bfs_over_perms(perms, n, root=root)
    if dist.min() < 0:
        raise NotGenerating("projected set does not generate the quotient")
    return int(dist.max())


def monotonicity_exhaustive(G_ops, Q_ops, proj, *, work_cap=SWEEP_WORK_CAP):
    """diam(Q, pi(S)) <= diam(G, S) for every symmetric generating set S of
    G, plus the worst-case comparison.  Exhaustive-corpus sizes only."""
    elems = all_elements(G_ops)
    n = len(elems)
    if n > 200:
        raise BudgetExceeded(f"exhaustive monotonicity capped at 200, got {n}")
    classes = inverse_pair_classes(G_ops, elems)
    c = len(classes)
    if (2**c) * n * 4 * c > work_cap:
        raise BudgetExceeded(f"{c} classes over the work cap")
    cperms = _class_perms(G_ops, elems, classes)
    root = next(i for i, x in enumerate(elems)
                if G_ops.key(x) == G_ops.key(G_ops.identity()))
    checked = 0
    violations = []
    wcG = -1
    wcQ = -1
    for bits in range(1, 2**c):
        ps = np.concatenate([cperms[i] for i in range(c) if bits >> i & 1])
        dist = _bfs_over_perms(ps, n, root=root)
        if dist.min() < 0:
            continue
        dG = int(dist.max())
        S = [x for i in range(c) if bits >> i & 1 for x in classes[i]]
        dQ = _quotient_diameter(Q_ops, [proj(x) for x in S])
        checked += 1
        wcG = max(wcG, dG)
        wcQ = max(wcQ, dQ)
        if dQ > dG:
            violations.append({
                "set": [G_ops.serialize(x) for x in S],
                "diam_G": dG,
                "diam_Q": dQ,
            })
    return {
        "mode": "exhaustive",
        "checked": checked,
        "violations": violations,
        "worst_case_G": wcG,
        "worst_case_Q": wcQ,
        "worst_case_ok": wcQ <= wcG,
    }


def _sampled_sets(ops, rng, count, set_sizes):
    """Generating draws only: k uniform elements, graph built to check
    coverage; retried until `count` sets pass."""
    out = []
    attempts = 0
    while len(out) < count and attempts < 30 * count:
        attempts += 1
        k = int(rng.choice(list(set_sizes)))
        gens = [ops.sample_uniform(rng) for _ in range(k)]
        try:
            g = build_graph(ops, gens)
        except NotGenerating:
            continue
        out.append((gens, g))
    if len(out) < count:
        raise NotGenerating(
            f"only {len(out)} of {count} draws generated after {attempts} tries"
        )
    return out


def monotonicity_sampled(G_ops, Q_ops, proj, *, sets=20, set_sizes=(2, 3, 4),
                         seed=0):
    """Per-set diam(Q, pi(S)) <= diam(G, S) on sampled generating sets (the
    big-G regime where exhaustion is off the table)."""
    rng = np.random.default_rng(seed)
    checked = 0
    violations = []
    rows = []
    for gens, g in _sampled_sets(G_ops, rng, sets, set_sizes):
        dG = g.diameter
        dQ = _quotient_diameter(Q_ops, [proj(x) for x in
                                        symmetrize(G_ops, gens)])
        checked += 1
        rows.append({"diam_G": dG, "diam_Q": dQ})
        if dQ > dG:
            violations.append({
                "set": [G_ops.serialize(x) for x in gens],
                "diam_G": dG,
                "diam_Q": dQ,
            })
    return {
        "mode": "sampled",
        "checked": checked,
        "violations": violations,
        "pairs": rows,
    }


def extension_bound_check(G_ops, Q_ops, proj, kernel_elements, *, sets=20,
                          set_sizes=(2, 3, 4), seed=0, exhaustive=False):
    """diam(G, S) <= (2 diam(Q) + 1)(diam(K) + 1/2) - 1/2 with worst-case
    right-hand side, for every enumerated or sampled generating set of G.
    The kernel and quotient sweeps must be exhaustive-feasible."""
    wcQ = worst_case_diameter(Q_ops).value
    wcK = worst_case_diameter(G_ops, elements=kernel_elements).value
    bound = (2 * wcQ + 1) * (wcK + 0.5) - 0.5
    checked = 0
    violations = []
    diams = []
    if exhaustive:
        elems = all_elements(G_ops)
        n = len(elems)
        if n > 200:
            raise BudgetExceeded(f"exhaustive extension check capped at 200, got {n}")
        classes = inverse_pair_classes(G_ops, elems)
        c = len(classes)
        if (2**c) * n * 2 * c > SWEEP_WORK_CAP:
            raise BudgetExceeded(f"{c} classes over the work cap")
        cperms = _class_perms(G_ops, elems, classes)
        root = next(i for i, x in enumerate(elems)
                    if G_ops.key(x) == G_ops.key(G_ops.identity()))
        for bits in range(1, 2**c):
            ps = np.concatenate([cperms[i] for i in range(c) if bits >> i & 1])
            dist = _bfs_over_perms(ps, n, root=root)
            if dist.min() < 0:
                continue
            dG = int(dist.max())
            checked += 1
            diams.append(dG)
            if dG > bound + 1e-9:
                violations.append({"bits": bits, "diam_G": dG})
    else:
        rng = np.random.default_rng(seed)
        for gens, g in _sampled_sets(G_ops, rng, sets, set_sizes):
            checked += 1
            diams.append(g.diameter)
            if g.diameter > bound + 1e-9:
                violations.append({
                    "set": [G_ops.serialize(x) for x in gens],
                    "diam_G": g.diameter,
                })
    return {
        "worst_case_Q": wcQ,
        "worst_case_K": wcK,
        "bound": bound,
        "checked": checked,
        "max_diam_G": max(diams) if diams else 0,
        "violations": violations,
    }


# ---------------------------------------------------------------------------
# random walks


def mixing_length(rho, order):
    """The step schedule 10 * ceil(1/(1-rho)) * log|G|, rounded up."""
    if order <= 1:
        return 0
    if rho >= 1.0:
        raise NotGenerating("walk norm at 1: no mixing schedule")
    # relative epsilon so exactly-representable gaps (rho = 0.9) don't get
    # their ceiling bumped by the 1/(1-rho) rounding error
    inv = 1.0 / (1.0 - rho)
    return int(math.ceil(10 * math.ceil(inv * (1.0 - 1e-12)) * math.log(order)))


def _coordinate_codes(graph, kind):
    """(order, ncoord) integer codes, per-coordinate support sizes, labels."""
    ops = graph.ops
    if kind == "NottinghamCoeffs":
        desc = getattr(ops, "descriptor", None)
        if desc is None or desc.family != "Nottingham":
            raise UsageError("NottinghamCoeffs needs a Nottingham quotient")
        q = desc.ring.field.q
        N = desc.ring.N
        codes = np.array(
            [graph.element(i).coeffs for i in range(graph.order)],
            dtype=np.int64,
        )
        labels = [f"A{k}" for k in range(2, N + 1)]
        return codes, [q] * (N - 1), labels
    if kind == "FirstKind":
        desc = getattr(ops, "descriptor", None)
        if desc is None or desc.family == "Nottingham":
            raise UsageError("FirstKind needs a matrix quotient")
        ring = desc.ring
        d = desc.d
        if graph._mats is not None:
            mats = graph._mats
        else:
            mats = np.array(
                [graph.element(i).mat for i in range(graph.order)],
                dtype=np.int64 if ring.kind == "Zp" else object,
            )
        labels = [f"x{i + 1}{j + 1}" for i in range(d) for j in range(d)]
        if ring.kind == "Zp":
            p = ring.p
            delta = (mats - np.eye(d, dtype=np.int64) * 1) % (p**ring.N)
            if (delta % p).any():
                raise UsageError(
                    "FirstKind reads (g - 1)/P: walk the level-1 kernel"
                )
            codes = (delta // p).reshape(graph.order, d * d)
            m = p ** (ring.N - 1)
            return codes.astype(np.int64), [m] * (d * d), labels
        # Fq[[t]]: entries are coefficient tuples; (g - 1)/t drops slot 0
        q = ring.field.q
        codes = np.empty((graph.order, d * d), dtype=np.int64)
        for i in range(graph.order):
            g = graph.element(i)
            flat = []
            for r in range(d):
                for cidx in range(d):
                    entry = list(g.mat[r][cidx])
                    if r == cidx:
                        entry[0] = ring.field.sub_codes(
                            np.array([entry[0]]), np.array([1]))[0]
                    if entry[0] != 0:
                        raise UsageError(
                            "FirstKind reads (g - 1)/P: walk the level-1 kernel"
                        )
                    acc = 0
                    for cpos in range(len(entry) - 1, 0, -1):
                        acc = acc * q + int(entry[cpos])
                    flat.append(acc)
            codes[i] = flat
        return codes, [q ** (ring.N - 1)] * (d * d), labels
    if kind == "SecondKind":
        p = getattr(ops, "p", None)
        if p is None:
            raise UsageError(
                "SecondKind is only wired for abelian Z/p^e test quotients"
            )
        e = round(math.log(ops.n, p))
        vals = np.array(graph._elements, dtype=np.int64)
        digits = np.empty((graph.order, e), dtype=np.int64)
        rest = vals.copy()
        for j in range(e):
            digits[:, j] = rest % p
            rest //= p
        return digits, [p] * e, [f"c{j}" for j in range(e)]
    raise UsageError(f"unknown coordinate system {kind!r}")


@dataclass
class WalkReport:
    order: int
    set_size: int
    steps: int
    trials: int
    coordinates: str | None
    rho: float
    schedule: int
    sup_dev_mc: float
    tv_mc: float
    sup_dev_exact: float | None
    tv_exact: float | None
    scaled_sup_exact: float | None
    mc_vs_exact_sup: float | None
    mc_vs_exact_tv: float | None
    marginals: list

    def as_dict(self):
        return {
            "order": self.order,
            "set_size": self.set_size,
            "steps": self.steps,
            "trials": self.trials,
            "coordinates": self.coordinates,
            "rho": self.rho,
            "schedule": self.schedule,
            "sup_dev_mc": self.sup_dev_mc,
            "tv_mc": self.tv_mc,
            "sup_dev_exact": self.sup_dev_exact,
            "tv_exact": self.tv_exact,
            "scaled_sup_exact": self.scaled_sup_exact,
            "mc_vs_exact_sup": self.mc_vs_exact_sup,
            "mc_vs_exact_tv": self.mc_vs_exact_tv,
            "marginals": self.marginals,
        }


def walk_statistics(ops, gens, *, steps=None, trials=10**5, coordinates=None,
                    seed=0, rng=None, adjoin_identity=True, order=None,
                    exact=None):
    """Monte Carlo l-step walk against the exact convolution.

    Reports the sup deviation from uniform (the metric the coordinate
    equidistribution statements are phrased in), total variation, and — when
    a coordinate system is named — per-coordinate marginal distances.  The
    plug-in Monte Carlo estimate of total variation to uniform carries an
    irreducible ~sqrt(|G|/trials) upward bias at stationarity, so the
    headline closeness figures are the sup deviation and the per-marginal
    distances; the joint tv_mc is reported anyway, next to its noise floor.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    graph = build_graph(ops, gens, adjoin_identity=adjoin_identity,
                        order=order)
    n = graph.order
    rho = spectral_gap(graph)
    schedule = mixing_length(rho, n)
    if steps is None:
        steps = schedule
    if exact is None:
        exact = n <= CONV_CAP
    u = 1.0 / n

    mu = None
    if exact:
        mu = np.zeros(n)
        mu[graph.root] = 1.0
        for _ in range(steps):
            mu = graph.walk_matvec(mu)

    k = len(graph.dirs)
    state = np.zeros(trials, dtype=np.int64)
    for _ in range(steps):
        choice = rng.integers(0, k, size=trials)
        state = graph.perms[choice, state].astype(np.int64)
    counts = np.bincount(state, minlength=n)
    emp = counts / trials

    sup_mc = float(np.abs(emp - u).max())
    tv_mc = float(0.5 * np.abs(emp - u).sum())
    sup_ex = tv_ex = scaled = mvs = mvt = None
    if mu is not None:
        sup_ex = float(np.abs(mu - u).max())
        tv_ex = float(0.5 * np.abs(mu - u).sum())
        scaled = float(n * sup_ex)
        mvs = float(np.abs(emp - mu).max())
        mvt = float(0.5 * np.abs(emp - mu).sum())

    marginals = []
    if coordinates is not None:
        codes, supports, labels = _coordinate_codes(graph, coordinates)
        for j, (m, lab) in enumerate(zip(supports, labels)):
            mm = np.bincount(codes[:, j], weights=emp, minlength=m)
            row = {
                "label": lab,
                "support": int(m),
                "tv_mc_uniform": float(0.5 * np.abs(mm - 1.0 / m).sum()),
                "sup_mc_uniform": float(np.abs(mm - 1.0 / m).max()),
            }
            if mu is not None:
                me = np.bincount(codes[:, j], weights=mu, minlength=m)
                row["tv_exact_uniform"] = float(0.5 * np.abs(me - 1.0 / m).sum())
                row["tv_mc_vs_exact"] = float(0.5 * np.abs(mm - me).sum())
            marginals.append(row)

    return WalkReport(
        order=n,
        set_size=k,
        steps=int(steps),
        trials=int(trials),
        coordinates=coordinates,
        rho=rho,
        schedule=schedule,
        sup_dev_mc=sup_mc,
        tv_mc=tv_mc,
        sup_dev_exact=sup_ex,
        tv_exact=tv_ex,
        scaled_sup_exact=scaled,
        mc_vs_exact_sup=mvs,
        mc_vs_exact_tv=mvt,
        marginals=marginals,
    )


def walk_series(ops, gens, *, l_max, trials=10**5, seed=0, checkpoints=None,
                adjoin_identity=True, order=None, exact=None):
    """Distance-to-uniform curve along one Monte Carlo run: sup-deviation and
    plug-in TV at checkpoint steps, with the exact convolution alongside when
    the group is small enough.  One trajectory batch serves every checkpoint,
    so the rows are correlated in the way a single experiment would be."""
    graph = build_graph(ops, gens, adjoin_identity=adjoin_identity, order=order)
    n = graph.order
    k = graph.perms.shape[0]
    if checkpoints is None:
        stride = max(1, l_max // 50)
        checkpoints = list(range(0, l_max + 1, stride))
        if checkpoints[-1] != l_max:
            checkpoints.append(l_max)
    cpset = set(int(c) for c in checkpoints)
    if min(cpset) < 0 or max(cpset) > l_max:
        raise UsageError(f"checkpoints outside [0, {l_max}]")
    do_exact = exact if exact is not None else n <= CONV_CAP
    rng = np.random.default_rng(seed)
    state = np.full(trials, graph.root, dtype=np.int64)
    dist = None
    if do_exact:
        dist = np.zeros(n)
        dist[graph.root] = 1.0
    rows = []
    for l in range(0, l_max + 1):
        if l > 0:
            state = graph.perms[rng.integers(0, k, size=trials), state]
            if do_exact:
                dist = graph.walk_matvec(dist)
        if l in cpset:
            emp = np.bincount(state, minlength=n) / trials
            row = {
                "l": l,
                "sup_dev_mc": float(np.abs(emp - 1.0 / n).max()),
                "tv_mc": float(0.5 * np.abs(emp - 1.0 / n).sum()),
            }
            if do_exact:
                row["sup_dev_exact"] = float(np.abs(dist - 1.0 / n).max())
                row["tv_exact"] = float(0.5 * np.abs(dist - 1.0 / n).sum())
            rows.append(row)
    return {
        "order": int(n),
        "directions": int(k),
        "trials": int(trials),
        "l_max": int(l_max),
        "exact": bool(do_exact),
        "rows": rows,
    }


# ---------------------------------------------------------------------------
# growth series


def cyclic_contrast_series(p, n_max, *, order_cap=200_000):
    """diam(Z/p^n, {+-1}) for n = 1..n_max — the one-generator non-FAb
    family, measured (BFS) rather than assumed.  Growth is exponential in n."""
    out = []
    for n in range(1, n_max + 1):
        if p**n > order_cap:
            break
        g = build_graph(CyclicOps(p**n, p=p), [1], adjoin_identity=False)
        out.append({"level": n, "order": p**n, "diameter": g.diameter})
    return out


def quotient_diameter_series(desc, levels, *, sets_per_level=3, set_size=3,
                             seed=0):
    """max over sampled generating sets of diam at each congruence level."""
    from .matgroups import ops_for

    rng = np.random.default_rng(seed)
    out = []
    for n in levels:
        lops = ops_for(desc.truncated(n))
        best = 0
        got = 0
        attempts = 0
        while got < sets_per_level and attempts < 20 * sets_per_level:
            attempts += 1
            gens = [lops.sample_uniform(rng) for _ in range(set_size)]
            try:
                g = build_graph(lops, gens)
            except NotGenerating:
                continue
            got += 1
            best = max(best, g.diameter)
        if got == 0:
            raise NotGenerating(f"no generating draw at level {n}")
        out.append({
            "level": int(n),
            "order": lops.group_order(),
            "diameter": int(best),
            "sets": got,
        })
    return out


def loglog_slope(xs, ys):
    """Least-squares slope of log y against log x."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.maximum(np.asarray(ys, dtype=float), 1.0))
    return float(np.polyfit(lx, ly, 1)[0])
