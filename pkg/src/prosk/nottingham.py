"""The Nottingham group at finite truncation: power series t + a_2 t^2 + ...
over F_q under composition, stored as coefficient tuples for t^2..t^N.

The product convention is (f * g)(t) = g(f(t)): apply f first.  K_n is the
set of series with a_k = 0 for k <= n; depth(f) = (first nonzero slot) - 1,
or N for the identity.

Series arithmetic runs on "plane" arrays: shape (..., k, L) of base-p digits,
k the field degree, L = N + 1 coefficients t^0..t^N.  All kernels broadcast
over leading batch axes.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    BadLevelPair,
    BudgetExceeded,
    DescriptorMismatch,
    IndexOutOfRange,
    LevelTooLarge,
    NotDeepEnough,
    OracleLevelRejected,
    UsageError,
)
from .rings import get_field

_CTX_CACHE: dict = {}


class SeriesContext:
    """Field tables plus the plane-reduction tensor for one (q, L)."""

    def __init__(self, q, L):
        self.q = q
        self.L = L
        self.field = get_field(q)
        self.p = self.field.p
        self.k = self.field.k
        k, p = self.k, self.p
        # C[i, j, r]: plane r of the field product x^i * x^j
        C = np.zeros((k, k, k), dtype=np.int64)
        for i in range(k):
            for j in range(k):
                code = self.field.mul(p**i, p**j)
                for r in range(k):
                    C[i, j, r] = (code // p**r) % p
        self.C = C

    # -- conversions ------------------------------------------------------

    def planes_from_codes(self, codes):
        """codes: (..., L) ints in [0, q) -> planes (..., k, L)."""
        codes = np.asarray(codes, dtype=np.int64)
        out = np.empty(codes.shape[:-1] + (self.k, self.L), dtype=np.int64)
        for r in range(self.k):
            out[..., r, :] = (codes // self.p**r) % self.p
        return out

    def codes_from_planes(self, planes):
        out = np.zeros(planes.shape[:-2] + (self.L,), dtype=np.int64)
        for r in range(self.k):
            out += planes[..., r, :] * self.p**r
        return out

    def t(self, batch=()):
        out = np.zeros(batch + (self.k, self.L), dtype=np.int64)
        out[..., 0, 1] = 1
        return out

    # -- core arithmetic --------------------------------------------------

    def _tconv(self, A, B):
        """Truncated convolution along the last axis, no reduction."""
        L = self.L
        if A.ndim == 1 and B.ndim == 1:
            return np.convolve(A, B)[:L]
        shape = np.broadcast_shapes(A.shape[:-1], B.shape[:-1]) + (L,)
        out = np.zeros(shape, dtype=np.int64)
        # iterate over the sparser operand
        nzA = np.flatnonzero(A.reshape(-1, L).any(axis=0) if A.ndim > 1 else A)
        nzB = np.flatnonzero(B.reshape(-1, L).any(axis=0) if B.ndim > 1 else B)
        if len(nzA) <= len(nzB):
            for s in nzA:
                out[..., s:] += A[..., s : s + 1] * B[..., : L - s]
        else:
            for s in nzB:
                out[..., s:] += B[..., s : s + 1] * A[..., : L - s]
        return out

    def mul(self, A, B):
        """Series product of plane arrays, truncated at L."""
        k = self.k
        if k == 1:
            return self._tconv(A[..., 0, :], B[..., 0, :])[..., None, :] % self.p
        shape = np.broadcast_shapes(A.shape, B.shape)
        out = np.zeros(shape, dtype=np.int64)
        for i in range(k):
            for j in range(k):
                T = self._tconv(A[..., i, :], B[..., j, :])
                for r in range(k):
                    c = self.C[i, j, r]
                    if c:
                        out[..., r, :] += c * T
        return out % self.p

    def smul(self, h, S):
        """Field scalar (planes (..., k)) times series S (..., k, L)."""
        k = self.k
        if k == 1:
            return (h[..., :, None] * S) % self.p
        out = np.zeros(np.broadcast_shapes(h.shape + (1,), S.shape), dtype=np.int64)
        for i in range(k):
            for j in range(k):
                T = h[..., i, None] * S[..., j, :]
                for r in range(k):
                    c = self.C[i, j, r]
                    if c:
                        out[..., r, :] += c * T
        return out % self.p

    def power(self, F, e):
        """F^e truncated, by repeated squaring."""
        result = None
        base = F
        while e:
            if e & 1:
                result = base if result is None else self.mul(result, base)
            e >>= 1
            if e:
                base = self.mul(base, base)
        if result is None:
            out = np.zeros_like(F)
            out[..., 0, 0] = 1
            return out
        return result

    def compose(self, G, F):
        """G(F), Horner over G's coefficients."""
        L = self.L
        Gr = G.reshape(-1, self.k, L)
        support = np.flatnonzero(Gr.any(axis=(0, 1)))
        if len(support) == 0:
            return np.zeros(np.broadcast_shapes(G.shape, F.shape), dtype=np.int64)
        top = support[-1]
        R = np.zeros(np.broadcast_shapes(G.shape, F.shape), dtype=np.int64)
        R[..., :, 0] = G[..., :, top]
        for j in range(top - 1, -1, -1):
            R = self.mul(R, F)
            R[..., :, 0] = (R[..., :, 0] + G[..., :, j]) % self.p
        return R

    def solve_right(self, Y, X):
        """The series C with C(X) = Y (X monic of the form t + ...)."""
        L = self.L
        shape = np.broadcast_shapes(Y.shape, X.shape)
        Yb = np.broadcast_to(Y, shape)
        acc = np.zeros(shape, dtype=np.int64)
        out = np.zeros(shape, dtype=np.int64)
        pw = X
        for m in range(1, L):
            # coefficient planes of t^m in the deficit
            h = (Yb[..., :, m] - acc[..., :, m]) % self.p
            out[..., :, m] = h
            if pw is not None and h.any():
                acc = (acc + self.smul(h, pw)) % self.p
            if m + 1 < L:
                pw = self.mul(pw, X)
        return out

    def inverse(self, F):
        """Compositional inverse: H with H(F) = t (= F(H))."""
        return self.solve_right(np.broadcast_to(self.t(), F.shape), F)

    def append_generator(self, acc, a, lam_planes):
        """acc * e_{a,lam} = acc + lam * acc^(a+1) (product convention)."""
        if a + 1 >= self.L:
            return acc
        pw = self.power(acc, a + 1)
        return (acc + self.smul(lam_planes, pw)) % self.p

    def depth(self, F):
        """Batched depth from planes: first nonzero slot minus one."""
        L = self.L
        body = F.copy()
        body[..., 0, 1] = 0  # remove the leading t
        nz = body.any(axis=-2)  # (..., L)
        has = nz.any(axis=-1)
        first = np.argmax(nz, axis=-1)
        depth = np.where(has, first - 1, L - 1)
        return depth

    def first_difference_depth(self, A, B):
        """depth(x^-1 y) for the elements with planes A, B: slot where the
        series first differ, minus one; N if equal."""
        L = self.L
        diff = (A != B).any(axis=-2)
        has = diff.any(axis=-1)
        first = np.argmax(diff, axis=-1)
        return np.where(has, first - 1, L - 1)


def series_context(q, L):
    key = (q, L)
    if key not in _CTX_CACHE:
        _CTX_CACHE[key] = SeriesContext(q, L)
    return _CTX_CACHE[key]


# ---------------------------------------------------------------------------
# elements


class NottElement:
    """Series t + sum_{k=2}^N coeffs[k-2] t^k, coefficients as field codes."""

    __slots__ = ("descriptor", "coeffs")

    def __init__(self, descriptor, coeffs):
        self.descriptor = descriptor
        self.coeffs = tuple(int(c) for c in coeffs)
        assert len(self.coeffs) == descriptor.ring.N - 1

    def depth(self):
        for idx, c in enumerate(self.coeffs):
            if c:
                return idx + 1  # slot idx+2 nonzero -> depth idx+1
        return self.descriptor.ring.N

    def to_codes(self):
        N = self.descriptor.ring.N
        out = np.zeros(N + 1, dtype=np.int64)
        out[1] = 1
        out[2:] = self.coeffs
        return out

    def __eq__(self, other):
        return (
            isinstance(other, NottElement)
            and other.descriptor == self.descriptor
            and other.coeffs == self.coeffs
        )

    def __hash__(self):
        return hash((self.descriptor, self.coeffs))

    def __repr__(self):
        return f"NottElement({format_series(self)})"


def _ctx_of(desc):
    return series_context(desc.ring.field.q, desc.ring.N + 1)


def _planes(desc, elem):
    ctx = _ctx_of(desc)
    return ctx.planes_from_codes(elem.to_codes())


def _from_planes(desc, planes):
    ctx = _ctx_of(desc)
    codes = ctx.codes_from_planes(planes)
    assert codes[0] == 0 and codes[1] == 1, "series is not in the group"
    return NottElement(desc, [int(c) for c in codes[2:]])


def identity(desc):
    return NottElement(desc, [0] * (desc.ring.N - 1))


def generator(desc, n, lam):
    """e_{n, lam} = t + lam t^(n+1)."""
    N = desc.ring.N
    if not 1 <= n <= N - 1:
        raise IndexOutOfRange(f"generator index {n} not in [1, {N - 1}]")
    lam = int(lam.code) if hasattr(lam, "code") else int(lam)
    if not 0 <= lam < desc.ring.field.q:
        raise UsageError("generator coefficient out of range")
    coeffs = [0] * (N - 1)
    coeffs[n - 1] = lam
    return NottElement(desc, coeffs)


def mul(a, b):
    """(a*b)(t) = b(a(t))."""
    if a.descriptor != b.descriptor:
        raise DescriptorMismatch("elements live in different groups")
    ctx = _ctx_of(a.descriptor)
    return _from_planes(a.descriptor, ctx.compose(_planes(a.descriptor, b), _planes(a.descriptor, a)))


def inv(a):
    ctx = _ctx_of(a.descriptor)
    return _from_planes(a.descriptor, ctx.inverse(_planes(a.descriptor, a)))


def commutator(a, b):
    """[a, b] = a^-1 b^-1 a b, computed as the C with C(b·a) = a·b."""
    if a.descriptor != b.descriptor:
        raise DescriptorMismatch("elements live in different groups")
    ctx = _ctx_of(a.descriptor)
    ab = ctx.compose(_planes(a.descriptor, b), _planes(a.descriptor, a))
    ba = ctx.compose(_planes(a.descriptor, a), _planes(a.descriptor, b))
    return _from_planes(a.descriptor, ctx.solve_right(ab, ba))


def project(a, m):
    desc = a.descriptor
    if m < 1:
        raise UsageError("projection level must be >= 1")
    if m > desc.ring.N:
        raise LevelTooLarge(f"level {m} exceeds truncation N={desc.ring.N}")
    newdesc = desc.truncated(m)
    return NottElement(newdesc, a.coeffs[: m - 1])


def canonical_coordinates(f):
    """gamma_1..gamma_{N-1} with f = e_{1,g_1} * e_{2,g_2} * ... (ascending
    product in the group convention)."""
    desc = f.descriptor
    N = desc.ring.N
    ctx = _ctx_of(desc)
    r = _planes(desc, f)
    out = []
    for n in range(1, N):
        code = int(ctx.codes_from_planes(r)[n + 1])
        out.append(code)
        if code:
            # peel: r <- r o e^-1, i.e. solve s with s(e) = r
            e = ctx.planes_from_codes(generator(desc, n, code).to_codes())
            r = ctx.solve_right(r, e)
    return out


def from_canonical(desc, gammas):
    g = identity(desc)
    for n, c in enumerate(gammas, start=1):
        if c:
            g = mul(g, generator(desc, n, c))
    return g


def enumerate_quotient(desc, budget=10_000_000):
    import itertools

    q = desc.ring.field.q
    N = desc.ring.N
    total = q ** (N - 1)
    if total > budget:
        raise BudgetExceeded(f"group has {total} elements, budget {budget}")
    return [
        NottElement(desc, coeffs)
        for coeffs in itertools.product(range(q), repeat=N - 1)
    ]


def sample_uniform(desc, rng):
    q = desc.ring.field.q
    return NottElement(desc, rng.integers(0, q, size=desc.ring.N - 1))


def sample_kernel(desc, n, rng):
    N = desc.ring.N
    if not 1 <= n <= N:
        raise LevelTooLarge(f"kernel level {n} out of range")
    q = desc.ring.field.q
    coeffs = np.zeros(N - 1, dtype=np.int64)
    if n < N:
        coeffs[n - 1 :] = rng.integers(0, q, size=N - 1 - (n - 1))
    return NottElement(desc, coeffs)


# ---------------------------------------------------------------------------
# the commutator oracle


def oracle_admissible(desc, n, m):
    p = desc.ring.p
    return (1 <= n <= m <= 2 * n and (m - n) % p != 0
            and 2 * n + m <= desc.ring.N)


def commutator_pairs(r, n, m, capped=False):
    """Write r in K_{n+m} as [g1, e_{m,1}] * [g2, e_{m+1,1}] agreeing with r
    mod K_{2n+m}; g1, g2 are products of at most n basic generators in K_n.

    Level rules: n <= m <= 2n, the residue characteristic must not divide
    m - n, and (public form) 2n + m <= N.
    """
    desc = r.descriptor
    N = desc.ring.N
    p = desc.ring.p
    if not 1 <= n <= m <= 2 * n:
        raise BadLevelPair(f"need 1 <= n <= m <= 2n, got ({n}, {m})")
    if (m - n) % p == 0:
        raise OracleLevelRejected(f"p = {p} divides m - n = {m - n}")
    if not capped and 2 * n + m > N:
        raise OracleLevelRejected(f"2n + m = {2 * n + m} exceeds N = {N}")
    if r.depth() < min(n + m, N):
        raise NotDeepEnough(f"oracle input depth {r.depth()} < {n + m}")
    if n + m >= N:
        return []
    lam, mu = _oracle_solve(desc, r.to_codes()[None, :], n, m)
    g1 = identity(desc)
    for i in range(n):
        if lam[0, i]:
            g1 = mul(g1, generator(desc, n + i, int(lam[0, i])))
    g2 = identity(desc)
    for i in range(1, n):
        if mu[0, i]:
            g2 = mul(g2, generator(desc, n - 1 + i, int(mu[0, i])))
    out = []
    if g1.depth() < N:
        out.append((g1, generator(desc, m, 1)))
    if g2.depth() < N:
        out.append((g2, generator(desc, m + 1, 1)))
    return out


def _oracle_solve(desc, R_codes, n, m):
    """Batched window solve.  R_codes: (B, L) full code vectors of elements
    of K_{n+m}.  Returns (lam, mu): (B, n) code arrays; mu[:, 0] unused.

    Window bookkeeping: within slots [n+m, 2n+m) the coefficients of a
    product of commutators of K_n x K_m pieces add up, so each slot is
    cleared by one new generator whose single-commutator contribution is
    linear in its coefficient there.
    """
    N = desc.ring.N
    q = desc.ring.field.q
    p = desc.ring.p
    field = get_field(q)
    B = R_codes.shape[0]
    Lw = min(2 * n + m, N) + 1  # working truncation: degrees 0..Lw-1
    ctx = series_context(q, Lw)
    target = ctx.planes_from_codes(R_codes[:, :Lw])
    accum = np.zeros_like(target)  # window coefficients of the product so far
    accum[..., 0, 1] = 1
    lam = np.zeros((B, n), dtype=np.int64)
    mu = np.zeros((B, n), dtype=np.int64)
    for i in range(n):
        deg = n + m + 1 + i  # leading degree of the step-i commutator
        if deg >= Lw:
            break
        deficit = _slot_codes(ctx, target, deg)
        have = _slot_codes(ctx, accum, deg)
        need = field.sub_codes(deficit, have)
        if not need.any():
            continue
        a = n + i
        use_mu = (i >= 1) and ((a - m) % p == 0)
        if use_mu:
            a2 = n - 1 + i
            c = _probe_slot(ctx, a2, m + 1, deg)
            assert c != 0, "window denominator vanished on the shifted rail"
            coeff = field.div_codes(need, c)
            mu[:, i] = coeff
            contrib = _single_commutator(ctx, a2, coeff, m + 1)
        else:
            c = _probe_slot(ctx, a, m, deg)
            assert c != 0, "window denominator vanished"
            coeff = field.div_codes(need, c)
            lam[:, i] = coeff
            contrib = _single_commutator(ctx, a, coeff, m)
        accum = _window_add(ctx, accum, contrib)
    return lam, mu


def _gen_codes(q, L, a, lam):
    out = np.zeros(L, dtype=np.int64)
    out[1] = 1
    if a + 1 < L:
        out[a + 1] = lam
    return out


def _slot_codes(ctx, planes, s):
    out = np.zeros(planes.shape[:-2], dtype=np.int64)
    for r in range(ctx.k):
        out += planes[..., r, s] * ctx.p**r
    return out


def _single_commutator(ctx, a, coeff_codes, b):
    """Planes of [e_{a,coeff}, e_{b,1}], batched over coeff."""
    B = coeff_codes.shape[0]
    x = np.zeros((B, ctx.k, ctx.L), dtype=np.int64)
    x[:, 0, 1] = 1
    if a + 1 < ctx.L:
        for r in range(ctx.k):
            x[:, r, a + 1] = (coeff_codes // ctx.p**r) % ctx.p
    y = ctx.planes_from_codes(_gen_codes(ctx.q, ctx.L, b, 1))
    xy = ctx.compose(np.broadcast_to(y, x.shape), x)  # x * y
    yx = ctx.compose(x, np.broadcast_to(y, x.shape))  # y * x
    return ctx.solve_right(xy, yx)


def _probe_slot(ctx, a, b, deg):
    """Degree-`deg` code of [e_{a,1}, e_{b,1}] (the linear response coefficient)."""
    probe = _single_commutator(ctx, a, np.ones(1, dtype=np.int64), b)
    return int(_slot_codes(ctx, probe, deg)[0])


def _window_add(ctx, accum, contrib):
    """Product of deep elements: coefficients add in the working window."""
    out = (accum + contrib) % ctx.p
    out[..., 0, 1] = 1  # both carry the leading t; keep a single copy
    return out


# ---------------------------------------------------------------------------
# parsing / formatting


def parse_series(desc, text):
    N = desc.ring.N
    q = desc.ring.field.q
    coeffs = [0] * (N - 1)
    parts = text.replace(" ", "").split("+")
    if not parts or parts[0] != "t":
        raise UsageError(f"series must start with the term 't': {text!r}")
    for part in parts[1:]:
        if "t^" not in part:
            raise UsageError(f"bad series term {part!r}")
        cpart, _, epart = part.partition("t^")
        try:
            c = int(cpart) if cpart else 1
            e = int(epart)
        except ValueError as exc:
            raise UsageError(f"bad series term {part!r}") from exc
        if not 2 <= e <= N:
            raise LevelTooLarge(f"exponent {e} outside storage range [2, {N}]")
        if not 0 <= c < q:
            raise UsageError(f"coefficient {c} outside [0, {q})")
        coeffs[e - 2] = c
    return NottElement(desc, coeffs)


def format_series(elem):
    terms = ["t"]
    for idx, c in enumerate(elem.coeffs):
        if c:
            e = idx + 2
            terms.append(f"t^{e}" if c == 1 else f"{c}t^{e}")
    return "+".join(terms)


# ---------------------------------------------------------------------------
# the uniform ops facade


class NottinghamOps:
    n0 = 1

    def __init__(self, desc):
        self.descriptor = desc

    def identity(self):
        return identity(self.descriptor)

    def mul(self, a, b):
        return mul(a, b)

    def inv(self, a):
        return inv(a)

    def commutator(self, a, b):
        return commutator(a, b)

    def depth(self, a):
        return a.depth()

    def key(self, a, level=None):
        if level is None:
            return a.coeffs
        return a.coeffs[: level - 1]

    def project(self, a, m):
        return project(a, m)

    def oracle(self, r, n, m, capped=False):
        return commutator_pairs(r, n, m, capped=capped)

    def oracle_admissible(self, n, m):
        return oracle_admissible(self.descriptor, n, m)

    def pairs_bound(self):
        return 2

    def sample_kernel(self, n, rng):
        return sample_kernel(self.descriptor, n, rng)

    def sample_uniform(self, rng):
        return sample_uniform(self.descriptor, rng)

    def group_order(self):
        q = self.descriptor.ring.field.q
        return q ** (self.descriptor.ring.N - 1)

    def quotient_order(self, n):
        q = self.descriptor.ring.field.q
        return q ** (n - 1)

    def serialize(self, a):
        return list(a.coeffs)

    def deserialize(self, raw):
        N = self.descriptor.ring.N
        q = self.descriptor.ring.field.q
        if len(raw) != N - 1 or any(not 0 <= int(c) < q for c in raw):
            raise UsageError("bad coefficient vector")
        return NottElement(self.descriptor, raw)

    # word-evaluation hooks (right-to-left accumulation)

    def power_matrix(self, elem):
        """PM[e] = planes of elem^e; acc <- acc-coefficients applied to PM
        realizes acc o elem = elem-first product."""
        ctx = _ctx_of(self.descriptor)
        L = ctx.L
        PM = np.zeros((L, ctx.k, L), dtype=np.int64)
        PM[0, 0, 0] = 1
        F = _planes(self.descriptor, elem)
        pw = F
        for e in range(1, L):
            PM[e] = pw
            if e + 1 < L:
                pw = ctx.mul(pw, F)
        return PM

    def eval_begin(self):
        ctx = _ctx_of(self.descriptor)
        return ctx.t()

    def eval_apply(self, acc, PM):
        ctx = _ctx_of(self.descriptor)
        if ctx.k == 1:
            vec = acc[0]
            return (vec @ PM[:, 0, :])[None, :] % ctx.p
        E = np.einsum("ie,ejl->ijl", acc, PM)
        out = np.tensordot(ctx.C, E, axes=([0, 1], [0, 1]))
        return out % ctx.p

    def eval_finish(self, acc):
        return _from_planes(self.descriptor, acc)
