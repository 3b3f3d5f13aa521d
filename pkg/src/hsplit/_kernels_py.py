"""Pure-Python versions of the geometry kernels in ``_kernels.pyx``."""
import math

import numpy as np


def euclid_dist(a, b):
    return math.sqrt(sum((p - q) * (p - q) for p, q in zip(a, b)))


def poincare_dist(a, b):
    diff = sum((p - q) * (p - q) for p, q in zip(a, b))
    if diff == 0.0:
        return 0.0
    na = sum(p * p for p in a)
    nb = sum(q * q for q in b)
    return 2.0 * math.asinh(math.sqrt(diff / ((1.0 - na) * (1.0 - nb))))


def mobius_add(a, b):
    ab = sum(p * q for p, q in zip(a, b))
    na = sum(p * p for p in a)
    nb = sum(q * q for q in b)
    ca = 1.0 + 2.0 * ab + nb
    cb = 1.0 - na
    den = 1.0 + 2.0 * ab + na * nb
    return np.array([(ca * p + cb * q) / den for p, q in zip(a, b)])


def poincare_geodesic(a, b, lam):
    w = mobius_add([-p for p in a], b)
    nw = math.sqrt(sum(p * p for p in w))
    if nw == 0.0:
        return np.array(a, dtype=np.float64)
    r = math.tanh(lam * math.atanh(nw)) / nw
    return mobius_add(a, [p * r for p in w])


def pairwise_sq_euclid(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def pairwise_sq_poincare(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    sq = pairwise_sq_euclid(A, B)
    ca = 1.0 - np.einsum("ij,ij->i", A, A)
    cb = 1.0 - np.einsum("ij,ij->i", B, B)
    d = 2.0 * np.arcsinh(np.sqrt(sq / (ca[:, None] * cb[None, :])))
    return d * d


def tree_dist(u1, v1, s1, l1, u2, v2, s2, l2, D):
    if u1 == u2 and v1 == v2 and u1 != v1:
        return abs(s1 - s2)
    return min(
        s1 + D[u1, u2] + s2,
        s1 + D[u1, v2] + (l2 - s2),
        (l1 - s1) + D[v1, u2] + s2,
        (l1 - s1) + D[v1, v2] + (l2 - s2),
    )


def pairwise_sq_tree(u1, v1, s1, l1, u2, v2, s2, l2, D):
    u1 = np.asarray(u1)[:, None]
    v1 = np.asarray(v1)[:, None]
    s1 = np.asarray(s1)[:, None]
    l1 = np.asarray(l1)[:, None]
    u2 = np.asarray(u2)[None, :]
    v2 = np.asarray(v2)[None, :]
    s2 = np.asarray(s2)[None, :]
    l2 = np.asarray(l2)[None, :]
    D = np.asarray(D)
    best = np.minimum.reduce([
        s1 + D[u1, u2] + s2,
        s1 + D[u1, v2] + (l2 - s2),
        (l1 - s1) + D[v1, u2] + s2,
        (l1 - s1) + D[v1, v2] + (l2 - s2),
    ])
    same = (u1 == u2) & (v1 == v2) & (u1 != v1)
    best = np.where(same, np.abs(s1 - s2), best)
    return best * best
