"""Brute-force reference implementations used to freeze expected values.

Nothing here calls into ``hknet``'s algebra routines: commutants come from
explicit loops over matrix units, closures from repeated pairwise products,
fixed-point algebras from group twirls, and subspace relations from ranks.
"""

from __future__ import annotations

import itertools

import numpy as np

RANK_TOL = 1e-8


def vec(mats) -> np.ndarray:
    return np.array([np.asarray(m, dtype=complex).reshape(-1) for m in mats])


def rank(mats) -> int:
    mats = list(mats)
    if not mats:
        return 0
    return int(np.linalg.matrix_rank(vec(mats), tol=RANK_TOL))


def span_basis(mats) -> np.ndarray:
    """Orthonormal (complex) basis of the span, as matrices."""
    mats = list(mats)
    d = np.asarray(mats[0]).shape[0]
    V = vec(mats)
    U, s, _ = np.linalg.svd(V.T, full_matrices=False)
    r = int(np.sum(s > RANK_TOL * max(1.0, s[0])))
    return U[:, :r].T.reshape(r, d, d)


def null_space(M) -> np.ndarray:
    """Kernel with a cutoff relative to ``max(1, sigma_max)`` so zero maps stay zero."""
    _, sv, vh = np.linalg.svd(M)
    r = int(np.sum(sv > RANK_TOL * max(1.0, sv[0] if sv.size else 0.0)))
    return np.conj(vh[r:]).T


def matrix_units(d: int):
    for i, j in itertools.product(range(d), repeat=2):
        E = np.zeros((d, d), dtype=complex)
        E[i, j] = 1
        yield E


def commutant(gens, d: int) -> np.ndarray:
    """Commutant via the linear map X -> ([g, X])_g on matrix units."""
    units = list(matrix_units(d))
    cols = []
    for E in units:
        cols.append(np.concatenate([(g @ E - E @ g).reshape(-1) for g in gens]))
    M = np.array(cols).T
    K = null_space(M)
    return np.array([sum(c * E for c, E in zip(k, units)) for k in K.T])


def closure(gens, d: int) -> np.ndarray:
    """Unital *-algebra generated by ``gens``: add adjoints and products until stable."""
    cur = span_basis([np.eye(d)] + list(gens) + [np.conj(g.T) for g in gens])
    while True:
        prods = [a @ b for a in cur for b in cur]
        nxt = span_basis(list(cur) + prods)
        if len(nxt) == len(cur):
            return cur
        cur = nxt


def intersect(U, V) -> np.ndarray:
    """Intersection of two matrix subspaces via the kernel of ``[U, -V]``."""
    A = vec(U).T
    B = vec(V).T
    K = null_space(np.hstack([A, -B]))
    d = np.asarray(U[0]).shape[0]
    if K.shape[1] == 0:
        return np.zeros((0, d, d), dtype=complex)
    return span_basis([(A @ k[:len(U)]).reshape(d, d) for k in K.T])


def same_space(U, V) -> bool:
    return rank(U) == rank(V) == rank(list(U) + list(V))


def max_commutator(U, V) -> float:
    return max(np.linalg.norm(a @ b - b @ a) for a in U for b in V)


# ---------------------------------------------------------------------------
# Lattice nets


def embed(ops, sites, n: int, d: int = 2) -> list[np.ndarray]:
    """Place operators on the contiguous ``sites`` of an ``n``-site chain."""
    lo, hi = min(sites), max(sites)
    left = np.eye(d ** lo)
    right = np.eye(d ** (n - hi - 1))
    return [np.kron(np.kron(left, o), right) for o in ops]


def full_interval(sites, n: int, d: int = 2) -> list[np.ndarray]:
    k = len(sites)
    return embed(list(matrix_units(d ** k)), sites, n, d)


def twirl_interval(sites, n: int, u: np.ndarray) -> list[np.ndarray]:
    """Fixed points of ``Ad u^{(x) k}`` on the interval, by averaging over the group.

    ``u`` must generate a finite cyclic group.
    """
    k = len(sites)
    U = np.eye(1)
    for _ in range(k):
        U = np.kron(U, u)
    group = [np.eye(U.shape[0])]
    while True:
        g = group[-1] @ U
        if np.allclose(g, np.eye(U.shape[0])):
            break
        group.append(g)
    fixed = [sum(g @ E @ np.conj(g.T) for g in group) / len(group)
             for E in matrix_units(U.shape[0])]
    return embed(list(span_basis(fixed)), sites, n, u.shape[0])


def runs(sites) -> list[list[int]]:
    s = sorted(sites)
    out = []
    for x in s:
        if out and x == out[-1][-1] + 1:
            out[-1].append(x)
        else:
            out.append([x])
    return out


def region_algebra(sites, n: int, interval_fn) -> np.ndarray:
    d_tot = 2 ** n
    if not sites:
        return np.eye(d_tot)[None].astype(complex)
    parts = [m for r in runs(sites) for m in interval_fn(r, n)]
    if len(runs(sites)) == 1:
        return span_basis(parts)
    return closure(parts, d_tot)


def intervals(n: int) -> list[tuple[int, ...]]:
    return [tuple(range(a, b + 1)) for a in range(n) for b in range(a, n)]


def rays_containing(sites, n: int) -> list[tuple[int, ...]]:
    lo, hi = min(sites), max(sites)
    return [tuple(range(0, b + 1)) for b in range(hi, n)] + \
        [tuple(range(a, n)) for a in range(0, lo + 1) if a > 0]


def parity_sector(n: int, charge: int = 1) -> np.ndarray:
    """Isometry onto the ``(x) sigma_z`` eigenspace; columns are computational basis states."""
    cols = [i for i in range(2 ** n) if (-1) ** bin(i).count("1") == charge]
    return np.eye(2 ** n)[:, cols].astype(complex)


def compress(mats, V) -> list[np.ndarray]:
    return [np.conj(V.T) @ m @ V for m in mats]
