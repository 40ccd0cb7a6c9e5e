"""Batched truncated-series arithmetic over F_q (q = p or p^2).

Coefficient vectors are "plane" arrays of shape (B, N+1, e): slot j holds
the degree-j coefficient written in the F_p basis of the field (e = 1 for
prime q, e = 2 for quadratic extensions, using the same modulus as
rings.FqField).  Group elements carry slot 0 = 0 and slot 1 = 1.

Built for the bulk filtration runs: the law [K_n, K_m] <= K_{n+m} and the
depth-pairing lead coefficient both read off the two products gh and hg
coefficient-by-coefficient, so no series reversion is ever needed here.
The scalar NottElement path stays the reference implementation.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .rings import get_field


class FqPlanes:
    """Field constants needed by the vectorized kernels."""

    def __init__(self, q):
        field = get_field(q)
        if field.k > 2:
            raise UsageError("batched series path covers q = p and q = p^2")
        self.q = q
        self.p = field.p
        self.e = field.k
        if self.e == 2:
            # monic x^2 + c1 x + c0, constant term first in rings
            self.c0 = field.modulus[0] % self.p
            self.c1 = field.modulus[1] % self.p
        else:
            self.c0 = self.c1 = 0

    def split(self, codes):
        """Base-p digit planes of packed codes, shape (..., e)."""
        codes = np.asarray(codes, dtype=np.int64)
        if self.e == 1:
            return codes[..., None] % self.p
        return np.stack([codes % self.p, codes // self.p], axis=-1)

    def join(self, planes):
        if self.e == 1:
            return planes[..., 0].copy()
        return planes[..., 0] + self.p * planes[..., 1]

    def mul(self, x, y):
        """Elementwise field product of plane arrays (broadcasting ok)."""
        p = self.p
        if self.e == 1:
            return (x * y) % p
        a1, b1 = x[..., 0], x[..., 1]
        a2, b2 = y[..., 0], y[..., 1]
        bb = b1 * b2
        real = (a1 * a2 - self.c0 * bb) % p
        imag = (a1 * b2 + b1 * a2 - self.c1 * bb) % p
        return np.stack([real, imag], axis=-1)

    def sub(self, x, y):
        return (x - y) % self.p

    def embed_int(self, n):
        """Image of an integer in the prime subfield, as a plane vector."""
        v = np.zeros(self.e, dtype=np.int64)
        v[0] = n % self.p
        return v


def poly_mul_trunc(fq, A, B, min_deg=0):
    """Product of padded polynomials, truncated to the common length."""
    L = A.shape[1]
    C = np.zeros_like(A)
    for j in range(min_deg, L):
        C[:, j:] += fq.mul(A[:, : L - j], B[:, j : j + 1])
    return C % fq.p


def compose(fq, F, G):
    """F o G for padded arrays (B, L, e); G must have zero constant term."""
    if G[:, 0].any():
        raise UsageError("composition needs a zero constant term")
    L = F.shape[1]
    acc = np.zeros_like(F)
    acc[:, 0] = F[:, L - 1]
    for k in range(L - 2, 0, -1):
        acc = poly_mul_trunc(fq, acc, G, min_deg=1)
        acc[:, 0] = (acc[:, 0] + F[:, k]) % fq.p
    return poly_mul_trunc(fq, acc, G, min_deg=1)


def group_mul(fq, F, G):
    """Product in the composition group, f*g = g o f."""
    return compose(fq, G, F)


def sample_depth(fq, depths, N, rng):
    """Rows t + (nonzero) t^(d+1) + ... with exact per-row depth d."""
    depths = np.asarray(depths)
    B = depths.shape[0]
    P = np.zeros((B, N + 1, fq.e), dtype=np.int64)
    P[:, 1, 0] = 1
    deg = np.arange(N + 1)
    free = deg[None, :] > (depths[:, None] + 1)
    tail = fq.split(rng.integers(0, fq.q, size=(B, N + 1)))
    P[free] = tail[free]
    lead = fq.split(rng.integers(1, fq.q, size=B))
    P[np.arange(B), depths + 1] = lead
    return P


def agreement_depth(U, V, N):
    """depth(u^-1 v) via first differing coefficient (N when u = v)."""
    diff = (U != V).any(axis=2)
    first = np.argmax(diff, axis=1)
    return np.where(diff.any(axis=1), first - 1, N)


def to_coeff_rows(fq, P):
    """Padded planes -> packed coefficient rows for t^2..t^N."""
    return fq.join(P[:, 2:])
