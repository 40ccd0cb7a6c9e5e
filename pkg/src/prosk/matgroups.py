"""Congruence-filtered classical groups SL_d / SO_d / Sp_d over a truncated
local ring, plus the Nottingham dispatch.

Elements are payload matrices that satisfy the defining equations exactly at
the working truncation (det 1, M^T M = I, M^T Omega M = Omega).  K_n is the
kernel of reduction to level n; depth(g) is the largest n with g in K_n,
capped at N.
"""

from __future__ import annotations

import itertools

from . import _matrix as mx
from .errors import (
    BudgetExceeded,
    DescriptorMismatch,
    LevelTooLarge,
    UnsupportedCharacteristic,
    UsageError,
)
from .rings import Ring

ENUM_WORK_CAP = 5_000_000  # residue-level brute-force candidates


class GroupDescriptor:
    def __init__(self, family, d, ring):
        if family not in ("SL", "SO", "Sp", "Nottingham"):
            raise UsageError(f"unknown group family {family!r}")
        if family == "Nottingham":
            if ring.kind != "FqT":
                raise UsageError("Nottingham group lives over a series ring")
            d = 0
        else:
            if d is None or d < 2:
                raise UsageError("matrix family needs d >= 2")
            if family == "Sp" and d % 2:
                raise UsageError("Sp needs even d")
            if family in ("SO", "Sp") and ring.p == 2:
                raise UnsupportedCharacteristic(
                    f"{family}_{d} needs odd residue characteristic"
                )
        self.family = family
        self.d = d
        self.ring = ring

    @staticmethod
    def parse(text):
        head, _, rest = text.partition(",")
        if head == "Nottingham":
            return GroupDescriptor("Nottingham", 0, Ring.parse(rest))
        try:
            fam, dpart = head.split(":")
            d = int(dpart.split("=")[1])
        except (ValueError, IndexError) as exc:
            raise UsageError(f"malformed group descriptor {text!r}") from exc
        return GroupDescriptor(fam, d, Ring.parse(rest))

    def describe(self):
        if self.family == "Nottingham":
            return f"Nottingham,{self.ring.describe()}"
        return f"{self.family}:d={self.d},{self.ring.describe()}"

    def algebra_dim(self):
        d = self.d
        if self.family == "SL":
            return d * d - 1
        if self.family == "SO":
            return d * (d - 1) // 2
        if self.family == "Sp":
            g = d // 2
            return g * (2 * g + 1)
        return None  # Nottingham: not a matrix algebra

    def truncated(self, m):
        return GroupDescriptor(self.family, self.d, self.ring.truncated(m))

    def __eq__(self, other):
        return (
            isinstance(other, GroupDescriptor)
            and self.family == other.family
            and self.d == other.d
            and self.ring == other.ring
        )

    def __hash__(self):
        return hash((self.family, self.d, self.ring))

    def __repr__(self):
        return f"GroupDescriptor({self.describe()})"


class FilteredElement:
    __slots__ = ("descriptor", "mat")

    def __init__(self, descriptor, mat):
        self.descriptor = descriptor
        self.mat = mat

    def depth(self):
        return mx.depth(self.descriptor.ring, self.mat)

    def to_rows(self):
        ring = self.descriptor.ring
        if ring.kind == "Zp":
            return [list(row) for row in self.mat]
        return [[list(entry) for entry in row] for row in self.mat]

    def __eq__(self, other):
        return (
            isinstance(other, FilteredElement)
            and other.descriptor == self.descriptor
            and other.mat == self.mat
        )

    def __hash__(self):
        return hash((self.descriptor, self.mat))

    def __repr__(self):
        return f"<{self.descriptor.describe()} element depth {self.depth()}>"


def identity(desc):
    return FilteredElement(desc, mx.eye(desc.ring, desc.d))


def omega(ring, d):
    g = d // 2
    zero, one = ring.zero, ring.one
    out = [[zero] * d for _ in range(d)]
    for i in range(g):
        out[i][g + i] = one
        out[g + i][i] = ring.neg(one)
    return tuple(tuple(r) for r in out)


def is_member(desc, mat):
    ring = desc.ring
    d = desc.d
    if desc.family == "SL":
        return mx.det(ring, mat) == ring.one
    if desc.family == "SO":
        MtM = mx.mul(ring, mx.transpose(mat), mat)
        return MtM == mx.eye(ring, d) and mx.det(ring, mat) == ring.one
    if desc.family == "Sp":
        Om = omega(ring, d)
        return mx.mul(ring, mx.transpose(mat), mx.mul(ring, Om, mat)) == Om
    raise UsageError("membership test is for matrix families")


def element(desc, rows):
    ring = desc.ring
    d = desc.d
    if len(rows) != d or any(len(r) != d for r in rows):
        raise UsageError(f"need a {d}x{d} matrix")
    mat = tuple(tuple(ring.elem(entry).payload for entry in row) for row in rows)
    if not is_member(desc, mat):
        raise DescriptorMismatch(
            f"matrix fails the defining equations of {desc.describe()}"
        )
    return FilteredElement(desc, mat)


def _chk_pair(a, b):
    if a.descriptor != b.descriptor:
        raise DescriptorMismatch("elements live in different groups")


def mul(a, b):
    _chk_pair(a, b)
    return FilteredElement(a.descriptor, mx.mul(a.descriptor.ring, a.mat, b.mat))


def inv(a):
    return FilteredElement(a.descriptor, mx.inv(a.descriptor.ring, a.mat))


def commutator(a, b):
    _chk_pair(a, b)
    ring = a.descriptor.ring
    ia = mx.inv(ring, a.mat)
    ib = mx.inv(ring, b.mat)
    m = mx.mul(ring, mx.mul(ring, ia, ib), mx.mul(ring, a.mat, b.mat))
    return FilteredElement(a.descriptor, m)


def project(a, m):
    desc = a.descriptor
    if m < 1:
        raise UsageError("projection level must be >= 1")
    if m > desc.ring.N:
        raise LevelTooLarge(f"level {m} exceeds truncation N={desc.ring.N}")
    newdesc = desc.truncated(m)
    return FilteredElement(newdesc, mx.reduce_level(newdesc.ring, a.mat, m))


# ---------------------------------------------------------------------------
# orders


def residue_group_order(family, d, q):
    if family == "SL":
        o = q ** (d * (d - 1) // 2)
        for k in range(2, d + 1):
            o *= q**k - 1
        return o
    if family == "SO":
        m = d // 2
        if d % 2:
            o = q ** (m * m)
            for k in range(1, m + 1):
                o *= q ** (2 * k) - 1
            return o
        eps = 1 if (m % 2 == 0 or q % 4 == 1) else -1
        o = q ** (m * (m - 1)) * (q**m - eps)
        for k in range(1, m):
            o *= q ** (2 * k) - 1
        return o
    if family == "Sp":
        m = d // 2
        o = q ** (m * m)
        for k in range(1, m + 1):
            o *= q ** (2 * k) - 1
        return o
    raise UsageError(f"no residue order formula for {family}")


def group_order(desc):
    """Order of the full group at the working truncation."""
    if desc.family == "Nottingham":
        q = desc.ring.field.q
        return q ** (desc.ring.N - 1)
    q = desc.ring.field.q
    base = residue_group_order(desc.family, desc.d, q)
    return base * q ** (desc.algebra_dim() * (desc.ring.N - 1))


def quotient_order(desc, n):
    """Order of G / K_n (image at level n)."""
    if not 1 <= n <= desc.ring.N:
        raise LevelTooLarge(f"level {n} out of range")
    return group_order(desc.truncated(n))


def kernel_order(desc, n):
    return group_order(desc) // quotient_order(desc, n)


# ---------------------------------------------------------------------------
# section lifts (exact representatives over the residue field)


def _entry_lift(ring, rring, mat1):
    """Lift a residue-level payload matrix entrywise to the full ring."""
    if ring.kind == "Zp":
        return tuple(tuple(int(e) for e in row) for row in mat1)
    pad = ring.N - 1
    return tuple(tuple(e + (0,) * pad for e in row) for row in mat1)


def _fix_det(ring, mat):
    """Scale column 1 by det^-1 (a 1-unit), making det exactly one."""
    u = mx.det(ring, mat)
    ui = ring.inv(u)
    out = [list(row) for row in mat]
    for i in range(len(out)):
        out[i][0] = ring.mul(out[i][0], ui)
    return tuple(tuple(r) for r in out)


def _newton_inv_sqrt(ring, A, d):
    """A^(-1/2) for A = I mod the maximal ideal, as a polynomial in A."""
    inv2 = ring.inv(ring.from_int(2))
    U = mx.eye(ring, d)
    three = [
        [ring.from_int(3) if i == j else ring.zero for j in range(d)]
        for i in range(d)
    ]
    three = tuple(tuple(r) for r in three)
    for _ in range(max(4, ring.N.bit_length() + 2)):
        AU2 = mx.mul(ring, A, mx.mul(ring, U, U))
        diff = mx.sub(ring, three, AU2)
        U = mx.mul(ring, U, diff)
        U = tuple(tuple(ring.mul(e, inv2) for e in row) for row in U)
    return U


def section_lift(desc, mat1):
    """Exact group element over the full ring reducing to mat1 at level 1."""
    ring = desc.ring
    d = desc.d
    M = _entry_lift(ring, ring.truncated(1), mat1)
    if desc.family == "SL":
        M = _fix_det(ring, M)
    elif desc.family == "SO":
        A = mx.mul(ring, mx.transpose(M), M)
        M = mx.mul(ring, M, _newton_inv_sqrt(ring, A, d))
        M = _fix_det_sign(ring, M, d)
    else:  # Sp
        Om = omega(ring, d)
        Omi = mx.transpose(Om)  # J^-1 = J^T for the standard form
        A = mx.mul(ring, Omi, mx.mul(ring, mx.transpose(M), mx.mul(ring, Om, M)))
        M = mx.mul(ring, M, _newton_inv_sqrt(ring, A, d))
    g = FilteredElement(desc, M)
    assert is_member(desc, M), "section lift left the group"
    return g


def _fix_det_sign(ring, M, d):
    # det is +-1 and = 1 mod the ideal, hence exactly 1 for odd p
    return M


# ---------------------------------------------------------------------------
# enumeration and sampling


def _residue_codes(ring):
    return range(ring.field.q)


def _residue_matrices(desc1):
    ring1 = desc1.ring
    d = desc1.d
    q = ring1.field.q
    if q ** (d * d) > ENUM_WORK_CAP:
        raise BudgetExceeded(
            f"residue-level enumeration needs {q ** (d * d)} candidates"
        )
    mk = (lambda c: c) if ring1.kind == "Zp" else (lambda c: (c,))
    for flat in itertools.product(range(q), repeat=d * d):
        yield tuple(
            tuple(mk(flat[i * d + j]) for j in range(d)) for i in range(d)
        )


def enumerate_kernel(desc, n):
    """All of K_n, as products of depth-graded exact lifts (each element
    exactly once)."""
    from . import liealg

    ring = desc.ring
    fam = {"SL": "sl", "SO": "so", "Sp": "sp"}[desc.family]
    alg = liealg.LieAlgebra(fam, desc.d, ring)
    names = alg.basis_names()
    q = ring.field.q
    out = [identity(desc)]
    for l in range(n, ring.N):
        layer = []
        for coords in itertools.product(range(q), repeat=len(names)):
            X = alg.from_coords(
                {nm: ring.from_int(c) for nm, c in zip(names, coords)}
            )
            layer.append(liealg._lift_any(X, l))
        out = [mul(a, b) for a in out for b in layer]
    return out


def enumerate_quotient(desc, budget=10_000_000):
    """Every element of the group at its truncation; count is checked
    against the order formula."""
    if desc.family == "Nottingham":
        from . import nottingham

        return nottingham.enumerate_quotient(desc, budget=budget)
    total = group_order(desc)
    if total > budget:
        raise BudgetExceeded(f"group has {total} elements, budget {budget}")
    ring = desc.ring
    desc1 = desc.truncated(1)
    reps1 = [m for m in _residue_matrices(desc1) if is_member(desc1, m)]
    assert len(reps1) == residue_group_order(
        desc.family, desc.d, ring.field.q
    ), "residue enumeration disagrees with the order formula"
    if ring.N == 1:
        return [FilteredElement(desc, m) for m in reps1]
    sections = [section_lift(desc, m) for m in reps1]
    kernel = enumerate_kernel(desc, 1)
    out = [mul(s, k) for s in sections for k in kernel]
    assert len(out) == total
    return out


def sample_kernel(desc, n, rng):
    """Exactly uniform element of K_n (triangular coordinates)."""
    from . import liealg

    ring = desc.ring
    if not 1 <= n <= ring.N:
        raise LevelTooLarge(f"kernel level {n} out of range")
    fam = {"SL": "sl", "SO": "so", "Sp": "sp"}[desc.family]
    alg = liealg.LieAlgebra(fam, desc.d, ring)
    g = identity(desc)
    for l in range(n, ring.N):
        X = alg.random(rng, residue_only=True)
        g = mul(g, liealg._lift_any(X, l))
    return g


def sample_uniform(desc, rng):
    """Uniform over the full group for SL (exact); for SO/Sp the residue
    part is a bounded random word (kernel part stays exact)."""
    ring = desc.ring
    d = desc.d
    if desc.family == "SL":
        q = ring.field.q
        r1 = ring.truncated(1)
        while True:
            flat = rng.integers(0, q, size=d * d)
            mk = (lambda c: int(c)) if ring.kind == "Zp" else (lambda c: (int(c),))
            m1 = tuple(
                tuple(mk(flat[i * d + j]) for j in range(d)) for i in range(d)
            )
            dt = mx.det(r1, m1)
            if r1.is_unit(dt):
                break
        # scale row 1 by det^-1: pushes uniform GL to uniform SL
        di = r1.inv(dt)
        row0 = tuple(r1.mul(e, di) for e in m1[0])
        g = section_lift(desc, (row0,) + m1[1:])
    elif desc.family in ("SO", "Sp"):
        # product of two Cayley transforms: each covers the no-(-1)-eigenvalue
        # part of the group, products of two reach everything
        g = mul(_cayley_sample(desc, rng), _cayley_sample(desc, rng))
    else:
        raise UsageError("sample_uniform is for matrix families")
    if ring.N > 1:
        g = mul(g, sample_kernel(desc, 1, rng))
    return g


def _cayley_sample(desc, rng):
    """(I - S)(I + S)^-1 for random S in the algebra with I + S invertible:
    exactly orthogonal/symplectic with det 1 over the full truncated ring."""
    from . import liealg

    ring = desc.ring
    d = desc.d
    fam = {"SO": "so", "Sp": "sp"}[desc.family]
    alg = liealg.LieAlgebra(fam, d, ring)
    I = mx.eye(ring, d)
    for _ in range(256):
        S = alg.random(rng).to_matrix()
        IpS = mx.add(ring, I, S)
        if not ring.is_unit(mx.det(ring, IpS)):
            continue
        M = mx.mul(ring, mx.sub(ring, I, S), mx.inv(ring, IpS))
        out = FilteredElement(desc, M)
        assert is_member(desc, M), "Cayley transform left the group"
        return out
    raise UsageError("could not draw an invertible I + S (degenerate ring?)")


def ops_for(desc):
    if desc.family == "Nottingham":
        from . import nottingham

        return nottingham.NottinghamOps(desc)
    return MatrixOps(desc)


class MatrixOps:
    """Uniform handle used by the compiler and the verifier."""

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
            return a.mat
        return mx.key(self.descriptor.ring, a.mat, level)

    def project(self, a, m):
        return project(a, m)

    def oracle(self, r, n, m, capped=False):
        from . import liealg

        if capped:
            return liealg._commutator_decompose_capped(r, n, m)
        return liealg.commutator_decompose(r, n, m)

    def oracle_admissible(self, n, m):
        return self.n0 <= n <= m <= 2 * n

    def pairs_bound(self):
        return 2 if self.descriptor.family == "SL" else 3

    def sample_kernel(self, n, rng):
        return sample_kernel(self.descriptor, n, rng)

    def sample_uniform(self, rng):
        return sample_uniform(self.descriptor, rng)

    def group_order(self):
        return group_order(self.descriptor)

    def quotient_order(self, n):
        return quotient_order(self.descriptor, n)

    def serialize(self, a):
        return a.to_rows()

    def deserialize(self, raw):
        return element(self.descriptor, raw)
