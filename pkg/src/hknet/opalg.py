"""Finite-dimensional von Neumann algebras as certified operator subspaces.

An algebra is stored as a Hilbert-Schmidt orthonormal basis of *Hermitian*
matrices.  Every ``*``-closed subspace admits such a basis, and keeping it
Hermitian means the complex span can be handled with real arithmetic on the
vectorised ``(Re, Im)`` parts: for Hermitian ``A, B`` the inner product
``trace(A^dagger B)`` is real.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import (CertificationError, DecompositionFailure, DimensionMismatch,
                     NotNormalized, NotPositive)
from .numerics import (Tolerance, as_matrix, dagger, hermitian_eig, kernel_of_blocks,
                       matrix_function_psd, opnorm, resolve_tol)

# products checked exhaustively up to this dimension, by random probes above it
_EXHAUSTIVE_CLOSURE_DIM = 64
_CLOSURE_PROBES = 4
_INTERNAL_SEED = 0x5EED


# ---------------------------------------------------------------------------
# Hermitian real-form helpers


def _to_real(H: np.ndarray) -> np.ndarray:
    """(k, d, d) Hermitian stack -> (k, 2 d^2) real vectors."""
    k = H.shape[0]
    flat = H.reshape(k, -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def _from_real(v: np.ndarray, d: int) -> np.ndarray:
    k = v.shape[0]
    n = d * d
    out = (v[:, :n] + 1j * v[:, n:]).reshape(k, d, d)
    return (out + dagger(out)) / 2


def hermitian_parts(mats) -> np.ndarray:
    """Split each matrix into its Hermitian and anti-Hermitian pieces.

    Returns a stack of Hermitian matrices whose complex span equals the
    ``*``-closure of the span of ``mats``.
    """
    M = np.asarray(mats, dtype=complex)
    if M.ndim == 2:
        M = M[None]
    if M.shape[0] == 0:
        return M
    Md = dagger(M)
    return np.concatenate([(M + Md) / 2, (M - Md) / 2j], axis=0)


def _extend_real_basis(Q: np.ndarray, cand: np.ndarray, rank_tol: float) -> np.ndarray:
    """New orthonormal real directions from ``cand`` not already in span(Q).

    Candidates are projected off ``Q`` twice (classical Gram-Schmidt applied
    twice); the rank of what is left is decided by SVD.  Inputs are products
    of HS-unit matrices, so residual sizes are judged on an absolute scale:
    normalising first would blow rounding noise up into fake directions.
    """
    C = cand
    if Q.shape[0]:
        for _ in range(2):
            C = C - (C @ Q.T) @ Q
    C = C[np.linalg.norm(C, axis=1) > rank_tol]
    if C.shape[0] == 0:
        return np.zeros((0, cand.shape[1]))
    _, s, vh = np.linalg.svd(C, full_matrices=False)
    new = vh[s > max(rank_tol, rank_tol * s[0])]
    if Q.shape[0] and new.shape[0]:
        new = new - (new @ Q.T) @ Q
        new, _ = np.linalg.qr(new.T)
        new = new.T
    return new


def _orthonormal_hermitian(mats, d: int, tol: Tolerance) -> np.ndarray:
    H = hermitian_parts(mats) if len(mats) else np.zeros((0, d, d), dtype=complex)
    Q = _extend_real_basis(np.zeros((0, 2 * d * d)), _to_real(H), tol.rank_tol) if len(H) \
        else np.zeros((0, 2 * d * d))
    return _from_real(Q, d)


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True, eq=False)
class OperatorSpace:
    """A linear space of ``d x d`` matrices with a HS-orthonormal basis."""

    ambient_dim: int
    basis: np.ndarray  # (k, d, d)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex).reshape(-1, self.ambient_dim, self.ambient_dim)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def vectors(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    def gram(self) -> np.ndarray:
        V = self.vectors()
        return np.conj(V) @ V.T

    def project(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        V = self.vectors()
        coeff = np.conj(V) @ X.reshape(-1)
        return (coeff @ V).reshape(X.shape)

    def residual(self, X) -> float:
        """HS distance from ``X`` to the space."""
        X = np.asarray(X, dtype=complex)
        return float(np.linalg.norm(X - self.project(X)))


@dataclass(frozen=True, eq=False)
class VnAlgebra:
    """A certified unital ``*``-closed, multiplicatively closed operator space.

    ``blocks`` and ``block_unitary`` are filled in by :func:`decompose`.
    """

    space: OperatorSpace
    contains_identity: bool
    star_closed: bool
    mult_closed: bool
    blocks: tuple[tuple[int, int], ...] | None = None
    block_unitary: np.ndarray | None = field(default=None, repr=False)

    @property
    def ambient_dim(self) -> int:
        return self.space.ambient_dim

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def basis(self) -> np.ndarray:
        return self.space.basis

    def __repr__(self):
        return f"VnAlgebra(ambient_dim={self.ambient_dim}, dim={self.dim}, blocks={self.blocks})"


@dataclass(frozen=True, eq=False)
class Channel:
    """A CP map given by Kraus operators ``v_i`` (possibly rectangular).

    Heisenberg picture ``x -> sum v_i^dagger x v_i``; Schrodinger picture
    ``rho -> sum v_i rho v_i^dagger``.  A channel is normalised when
    ``sum v_i^dagger v_i = 1``, which is unitality of the former and trace
    preservation of the latter.
    """

    kraus: tuple[np.ndarray, ...]
    direction: str = "heisenberg"

    def __post_init__(self):
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.shape != shape or k.ndim != 2 for k in ks):
            raise DimensionMismatch("Kraus operators must share one shape")
        if self.direction not in ("heisenberg", "schrodinger"):
            raise ValueError(f"unknown direction {self.direction!r}")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def normalization_residual(self) -> float:
        S = sum(dagger(k) @ k for k in self.kraus)
        return opnorm(S - np.eye(self.dim_in))

    def check_normalized(self, tol: Tolerance | None = None) -> None:
        res = self.normalization_residual()
        if res > resolve_tol(tol).eq_tol:
            raise NotNormalized(f"sum of v^dagger v deviates from identity by {res:.3e}")

    def heisenberg(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return sum(dagger(k) @ x @ k for k in self.kraus)

    def schrodinger(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    __call__ = heisenberg


@dataclass(frozen=True, eq=False)
class DensityState:
    rho: np.ndarray
    faithful: bool

    @property
    def dim(self) -> int:
        return self.rho.shape[0]


def density_state(rho, tol: Tolerance | None = None) -> DensityState:
    """Validate a density matrix and record whether it is faithful."""
    tol = resolve_tol(tol)
    rho = as_matrix(rho)
    w, _ = hermitian_eig(rho, tol)
    if abs(np.trace(rho).real - 1) > tol.eq_tol * max(1, rho.shape[0]) or w[0] < -tol.rank_tol:
        raise NotPositive("not a unit-trace positive semidefinite matrix")
    rho = (rho + dagger(rho)) / 2
    return DensityState(rho=rho, faithful=bool(w[0] > tol.rank_tol))


# ---------------------------------------------------------------------------
# Construction and certification


def _products_outside(space: OperatorSpace, left: np.ndarray, right: np.ndarray) -> float:
    """Largest HS residual of ``left[i] @ right[j]`` off ``space``."""
    worst = 0.0
    V = space.vectors()
    for a in left:
        P = np.einsum("ij,kjl->kil", a, right).reshape(right.shape[0], -1)
        R = P - (P @ np.conj(V).T) @ V
        worst = max(worst, float(np.max(np.linalg.norm(R, axis=1), initial=0.0)))
    return worst


def certify(space: OperatorSpace, tol: Tolerance | None = None) -> VnAlgebra:
    """Check the three algebra certificates and wrap ``space`` as a VnAlgebra.

    Multiplicative closure is checked on all basis pairs when the dimension is
    at most 64; above that every basis element is multiplied on both sides by
    a few seeded random elements, which detects a non-closed space with
    probability one.
    """
    tol = resolve_tol(tol)
    d = space.ambient_dim
    B = space.basis
    cut = tol.eq_tol * max(1.0, np.sqrt(d))
    gram_err = opnorm(space.gram() - np.eye(space.dim)) if space.dim else 0.0
    if gram_err > cut:
        raise CertificationError(f"basis not orthonormal (error {gram_err:.3e})")
    has_one = space.residual(np.eye(d) / np.sqrt(d)) <= cut
    star = max((space.residual(dagger(b)) for b in B), default=0.0) <= cut
    if space.dim <= _EXHAUSTIVE_CLOSURE_DIM:
        mult = _products_outside(space, B, B) <= cut
    else:
        rng = np.random.default_rng(_INTERNAL_SEED)
        probes = np.einsum("pk,kij->pij", rng.standard_normal((_CLOSURE_PROBES, space.dim)), B)
        probes /= np.linalg.norm(probes.reshape(len(probes), -1), axis=1)[:, None, None]
        mult = max(_products_outside(space, B, probes), _products_outside(space, probes, B)) <= cut
    if not (has_one and star and mult):
        raise CertificationError(
            f"not a von Neumann algebra: identity={has_one}, star={star}, products={mult}")
    return VnAlgebra(space=space, contains_identity=True, star_closed=True, mult_closed=True)


def algebra_from_span(mats, ambient_dim: int, tol: Tolerance | None = None) -> VnAlgebra:
    """Certify the span of ``mats`` (plus adjoints) as an algebra, without closure."""
    tol = resolve_tol(tol)
    mats = np.asarray(mats, dtype=complex).reshape(-1, ambient_dim, ambient_dim)
    return certify(OperatorSpace(ambient_dim, _orthonormal_hermitian(mats, ambient_dim, tol)), tol)


def scalars(d: int) -> VnAlgebra:
    return certify(OperatorSpace(d, (np.eye(d) / np.sqrt(d))[None]))


def gell_mann_basis(n: int) -> np.ndarray:
    """HS-orthonormal Hermitian basis of ``M_n``, identity first."""
    out = [np.eye(n, dtype=complex) / np.sqrt(n)]
    for j in range(n):
        for k in range(j + 1, n):
            S = np.zeros((n, n), dtype=complex)
            S[j, k] = S[k, j] = 1 / np.sqrt(2)
            A = np.zeros((n, n), dtype=complex)
            A[j, k] = -1j / np.sqrt(2)
            A[k, j] = 1j / np.sqrt(2)
            out += [S, A]
    for l in range(1, n):
        D = np.zeros((n, n), dtype=complex)
        D[:l, :l] = np.eye(l)
        D[l, l] = -l
        out.append(D / np.sqrt(l * (l + 1)))
    return np.array(out)


def full_algebra(d: int) -> VnAlgebra:
    return certify(OperatorSpace(d, gell_mann_basis(d)))


def diagonal_algebra(d: int) -> VnAlgebra:
    B = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        B[i, i, i] = 1
    return certify(OperatorSpace(d, B))


def block_algebra(blocks: Sequence[tuple[int, int]], unitary=None) -> VnAlgebra:
    """The algebra ``U (+)_i (M_{n_i} (x) 1_{m_i}) U^dagger``."""
    d = sum(n * m for n, m in blocks)
    mats = []
    offset = 0
    for n, m in blocks:
        for g in gell_mann_basis(n):
            M = np.zeros((d, d), dtype=complex)
            M[offset:offset + n * m, offset:offset + n * m] = np.kron(g, np.eye(m)) / np.sqrt(m)
            mats.append(M)
        offset += n * m
    mats = np.array(mats)
    if unitary is not None:
        U = as_matrix(unitary)
        mats = np.einsum("ij,kjl,lm->kim", U, mats, dagger(U))
    return certify(OperatorSpace(d, mats))


def generate_algebra(generators, ambient_dim: int, tol: Tolerance | None = None) -> VnAlgebra:
    """Smallest von Neumann algebra containing ``generators``.

    The span is grown from the identity by multiplying the most recently
    added basis directions with the (Hermitian parts of the) generators until
    no new direction appears.  This reaches every word in the generators.
    """
    tol = resolve_tol(tol)
    d = ambient_dim
    gens = np.asarray(list(generators), dtype=complex)
    if gens.size and (gens.ndim != 3 or gens.shape[1:] != (d, d)):
        raise DimensionMismatch(f"generators must be {d}x{d}")
    gens = gens.reshape(-1, d, d)
    n_real = 2 * d * d
    Q = _extend_real_basis(np.zeros((0, n_real)), _to_real((np.eye(d) / np.sqrt(d))[None]),
                           tol.rank_tol)
    if gens.shape[0]:
        G = _from_real(_extend_real_basis(np.zeros((0, n_real)), _to_real(hermitian_parts(gens)),
                                          tol.rank_tol), d)
        new = _extend_real_basis(Q, _to_real(G), tol.rank_tol)
        Q = np.vstack([Q, new])
        frontier = _from_real(Q, d)
        while frontier.shape[0]:
            prods = np.einsum("gij,fjk->gfik", G, frontier).reshape(-1, d, d)
            new = _extend_real_basis(Q, _to_real(hermitian_parts(prods)), tol.rank_tol)
            Q = np.vstack([Q, new])
            frontier = _from_real(new, d)
    return certify(OperatorSpace(d, _from_real(Q, d)), tol)


def _check_same_dim(A, B):
    if A.ambient_dim != B.ambient_dim:
        raise DimensionMismatch(f"ambient dims differ: {A.ambient_dim} vs {B.ambient_dim}")


def commutant(A: VnAlgebra, tol: Tolerance | None = None) -> VnAlgebra:
    """``{X : [X, b] = 0 for all b in A}`` via the joint kernel of ``X -> Xb - bX``."""
    tol = resolve_tol(tol)
    d = A.ambient_dim
    eye = np.eye(d)
    # row-major vec: vec(X b - b X) = (1 (x) b^T - b (x) 1) vec(X)
    blocks = (np.kron(eye, b.T) - np.kron(b, eye) for b in A.basis)
    K = kernel_of_blocks(blocks, d * d, tol, scale=1.0)
    mats = K.reshape(-1, d, d)
    return certify(OperatorSpace(d, _orthonormal_hermitian(mats, d, tol)), tol)


def intersect(A: VnAlgebra, B: VnAlgebra, tol: Tolerance | None = None) -> VnAlgebra:
    """``span(A) & span(B)``.

    Solved in the coordinates of A: ``X = sum c_k a_k`` lies in B exactly when
    the component of X orthogonal to B vanishes, i.e. ``c`` is in the kernel of
    ``(1 - P_B) Q_A``.
    """
    tol = resolve_tol(tol)
    _check_same_dim(A, B)
    d = A.ambient_dim
    QA = _to_real(A.basis)
    QB = _to_real(B.basis)
    M = QA - (QA @ QB.T) @ QB  # rows: (1 - P_B) a_k
    C = kernel_of_blocks([M.T], A.dim, tol, real=True, scale=1.0)
    if C.shape[0] == 0:
        raise CertificationError("intersection lost the identity")
    X = C.real @ QA
    X, _ = np.linalg.qr(X.T)
    return certify(OperatorSpace(d, _from_real(X.T, d)), tol)


def join(A: VnAlgebra, B: VnAlgebra, tol: Tolerance | None = None) -> VnAlgebra:
    _check_same_dim(A, B)
    return generate_algebra(np.concatenate([A.basis, B.basis]), A.ambient_dim, tol)


def space_residual(A, B) -> float:
    """Largest HS residual of a basis vector of A projected onto B."""
    SA = A.space if isinstance(A, VnAlgebra) else A
    SB = B.space if isinstance(B, VnAlgebra) else B
    if SA.ambient_dim != SB.ambient_dim:
        raise DimensionMismatch("ambient dims differ")
    if SA.dim == 0:
        return 0.0
    V = SA.vectors()
    W = SB.vectors()
    R = V - (V @ np.conj(W).T) @ W
    return float(np.max(np.linalg.norm(R, axis=1)))


def space_leq(A, B, tol: Tolerance | None = None) -> bool:
    return space_residual(A, B) <= resolve_tol(tol).eq_tol


def space_eq(A, B, tol: Tolerance | None = None) -> bool:
    return space_leq(A, B, tol) and space_leq(B, A, tol)


def space_eq_residual(A, B) -> float:
    return max(space_residual(A, B), space_residual(B, A))


def contains(A, X, tol: Tolerance | None = None) -> bool:
    """Is ``X`` in span(A)?  Residual measured relative to ``||X||_HS``."""
    S = A.space if isinstance(A, VnAlgebra) else A
    X = np.asarray(X, dtype=complex)
    if X.shape != (S.ambient_dim, S.ambient_dim):
        raise DimensionMismatch(f"matrix of shape {X.shape} vs ambient dim {S.ambient_dim}")
    nx = float(np.linalg.norm(X))
    if nx == 0.0:
        return True
    return S.residual(X) <= resolve_tol(tol).eq_tol * max(1.0, nx)


def cross_commutator_norm(A: VnAlgebra, B: VnAlgebra) -> float:
    """Largest HS norm of ``[a, b]`` over the HS-orthonormal bases."""
    Ca = np.einsum("aij,bjk->abik", A.basis, B.basis)
    Cb = np.einsum("bij,ajk->abik", B.basis, A.basis)
    return float(np.max(np.linalg.norm((Ca - Cb).reshape(A.dim * B.dim, -1), axis=1)))


def center(A: VnAlgebra, tol: Tolerance | None = None) -> VnAlgebra:
    return intersect(A, commutant(A, tol), tol)


# ---------------------------------------------------------------------------
# Structure theory


def random_element(A: VnAlgebra, seed: int, kind: str = "hermitian") -> np.ndarray:
    """Seeded random element of ``A``.

    ``kind="hermitian"`` draws a real Gaussian combination of the Hermitian
    basis; ``kind="unitary"`` exponentiates such an element, which keeps the
    result inside ``A``.
    """
    rng = np.random.default_rng(seed)
    h = np.einsum("k,kij->ij", rng.standard_normal(A.dim), A.basis)
    h = (h + dagger(h)) / 2
    if kind == "hermitian":
        return h
    if kind == "unitary":
        return matrix_function_psd(h, "exp", 1j)
    if kind == "complex":
        h2 = np.einsum("k,kij->ij", rng.standard_normal(A.dim), A.basis)
        return h + 1j * (h2 + dagger(h2)) / 2
    raise ValueError(f"unknown kind {kind!r}")


def _cluster(w: np.ndarray, gap: float) -> list[np.ndarray]:
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > gap:
            groups.append(np.arange(start, i))
            start = i
    return groups


@dataclass(frozen=True, eq=False)
class Decomposition:
    """Block structure ``U^dagger A U = (+)_i M_{n_i} (x) 1_{m_i}``."""

    blocks: tuple[tuple[int, int], ...]
    unitary: np.ndarray
    algebra: VnAlgebra

    def offsets(self) -> list[int]:
        out, o = [], 0
        for n, m in self.blocks:
            out.append(o)
            o += n * m
        return out

    def block_view(self, X) -> list[np.ndarray]:
        """Diagonal blocks of ``U^dagger X U`` (each ``n_i m_i`` square)."""
        Y = dagger(self.unitary) @ np.asarray(X, dtype=complex) @ self.unitary
        return [Y[o:o + n * m, o:o + n * m] for o, (n, m) in zip(self.offsets(), self.blocks)]

    def compress(self, X) -> list[np.ndarray]:
        """The ``n_i x n_i`` matrices by which an element of A acts on each block."""
        out = []
        for blk, (n, m) in zip(self.block_view(X), self.blocks):
            out.append(blk.reshape(n, m, n, m)[:, 0, :, 0])
        return out

    def marginals(self, X) -> list[np.ndarray]:
        """Multiplicity-reduced blocks: partial trace of each block over ``1_{m_i}``."""
        out = []
        for blk, (n, m) in zip(self.block_view(X), self.blocks):
            out.append(np.trace(blk.reshape(n, m, n, m), axis1=1, axis2=3))
        return out


def decompose(A: VnAlgebra, tol: Tolerance | None = None) -> Decomposition:
    """Find the block decomposition of ``A`` and a block-adapting unitary.

    Minimal central projections come from the spectrum of a random central
    element; inside each central block a random Hermitian element supplies a
    minimal projection ``E_1`` and the matrix units ``e_{j1}`` are read off as
    ``E_j a E_1`` for a random ``a``.

    Raises
    ------
    DecompositionFailure
        If the dimension counts or the block form fail to check out.
    """
    tol = resolve_tol(tol)
    d = A.ambient_dim
    if A.dim == d * d:
        dec = Decomposition(((d, 1),), np.eye(d, dtype=complex), A)
        return replace(dec, algebra=replace(A, blocks=dec.blocks, block_unitary=dec.unitary))
    rng = np.random.default_rng(_INTERNAL_SEED)
    Z = center(A, tol)
    z = np.einsum("k,kij->ij", rng.standard_normal(Z.dim), Z.basis)
    wz, Vz = hermitian_eig(z, tol)
    gap = 1e-6 * max(1.0, float(np.max(np.abs(wz))))
    central = [Vz[:, g] for g in _cluster(wz, gap)]
    if len(central) != Z.dim:
        raise DecompositionFailure(f"{len(central)} central projections for a {Z.dim}-dim center")
    blocks, columns = [], []
    for W in central:
        # A restricted to the range of P, in coordinates of W
        sub = np.einsum("ij,kjl,lm->kim", dagger(W), A.basis, W)
        h = np.einsum("k,kij->ij", rng.standard_normal(A.dim), sub)
        wh, Vh = hermitian_eig(h, tol)
        gh = 1e-6 * max(1.0, float(np.max(np.abs(wh))))
        groups = _cluster(wh, gh)
        n = len(groups)
        m = len(groups[0])
        if any(len(g) != m for g in groups) or n * m != W.shape[1]:
            raise DecompositionFailure("unequal multiplicities inside a central block")
        E = [Vh[:, g] for g in groups]  # isometries onto eigenspaces
        a = np.einsum("k,kij->ij", rng.standard_normal(A.dim) + 1j * rng.standard_normal(A.dim), sub)
        cols = [E[0]]
        for j in range(1, n):
            x = E[j] @ dagger(E[j]) @ a @ E[0] @ dagger(E[0])
            s = np.sqrt(np.real(np.trace(dagger(x) @ x)) / m)
            if s <= tol.rank_tol:
                raise DecompositionFailure("vanishing matrix unit")
            cols.append((x / s) @ E[0])
        Ublock = np.stack(cols, axis=1).reshape(W.shape[1], n * m)  # column (j, l) -> j*m + l
        columns.append(W @ Ublock)
        blocks.append((n, m))
    U = np.concatenate(columns, axis=1)
    blocks = tuple(blocks)
    if opnorm(dagger(U) @ U - np.eye(d)) > 1e3 * tol.eq_tol:
        raise DecompositionFailure("block-adapting matrix is not unitary")
    if sum(n * n for n, _ in blocks) != A.dim or sum(n * m for n, m in blocks) != d:
        raise DecompositionFailure(f"inconsistent blocks {blocks} for dim {A.dim} in {d}")
    dec = Decomposition(blocks, U, A)
    worst = 0.0
    for b in A.basis:
        Y = dagger(U) @ b @ U
        R = Y.copy()
        for o, (n, m), c in zip(dec.offsets(), blocks, dec.compress(b)):
            R[o:o + n * m, o:o + n * m] -= np.kron(c, np.eye(m))
        worst = max(worst, opnorm(R))
    if worst > 1e3 * tol.eq_tol:
        raise DecompositionFailure(f"basis not block diagonal (residual {worst:.3e})")
    return replace(dec, algebra=replace(A, blocks=blocks, block_unitary=U))


def conditional_expectation(A: VnAlgebra, X, tol: Tolerance | None = None) -> np.ndarray:
    """Trace-preserving conditional expectation onto A (HS-orthogonal projection)."""
    X = np.asarray(X, dtype=complex)
    if X.shape != (A.ambient_dim, A.ambient_dim):
        raise DimensionMismatch(f"matrix of shape {X.shape} vs ambient dim {A.ambient_dim}")
    return A.space.project(X)


def random_density(d: int, seed: int, *, rank: int | None = None) -> np.ndarray:
    """Seeded random density matrix (Ginibre ensemble), faithful unless ``rank < d``."""
    rng = np.random.default_rng(seed)
    r = d if rank is None else rank
    G = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = G @ dagger(G)
    return rho / np.trace(rho).real


def random_channel_in(A: VnAlgebra, n_kraus: int, seed: int) -> Channel:
    """Normalised channel whose Kraus operators all lie in ``A``.

    Draw ``a_k`` in A and set ``v_k = a_k S^{-1/2}`` with ``S = sum a_k^dagger a_k``;
    ``S^{-1/2}`` is a spectral function of an element of A, hence in A.
    """
    rng = np.random.default_rng(seed)
    a = [random_element(A, int(s), "complex") for s in rng.integers(0, 2**63, n_kraus)]
    S = sum(dagger(x) @ x for x in a)
    Sinv = matrix_function_psd(S, "power", -0.5)
    return Channel(tuple(x @ Sinv for x in a))


def random_channel(d_in: int, d_out: int, n_kraus: int, seed: int) -> Channel:
    """Seeded channel from a random isometry ``C^{d_in} -> C^{d_out} (x) C^{n_kraus}``."""
    if d_out * n_kraus < d_in:
        raise DimensionMismatch("dilation space too small for an isometry")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((d_out * n_kraus, d_in)) + 1j * rng.standard_normal((d_out * n_kraus, d_in))
    V, _ = np.linalg.qr(G)
    return Channel(tuple(V.reshape(n_kraus, d_out, d_in)))


# ---------------------------------------------------------------------------
# Serialization


def encode_matrix(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def decode_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix must be rows of (re, im) pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def algebra_to_dict(A: VnAlgebra) -> dict:
    return {
        "ambient_dim": A.ambient_dim,
        "basis": [encode_matrix(b) for b in A.basis],
        "certificates": {"contains_identity": A.contains_identity,
                         "star_closed": A.star_closed,
                         "mult_closed": A.mult_closed},
        "blocks": None if A.blocks is None else [list(b) for b in A.blocks],
    }


def algebra_from_dict(data: dict) -> VnAlgebra:
    d = int(data["ambient_dim"])
    basis = np.array([decode_matrix(b) for b in data["basis"]]).reshape(-1, d, d)
    cert = data["certificates"]
    blocks = data.get("blocks")
    return VnAlgebra(OperatorSpace(d, basis), bool(cert["contains_identity"]),
                     bool(cert["star_closed"]), bool(cert["mult_closed"]),
                     None if blocks is None else tuple(tuple(b) for b in blocks))


def algebra_to_json(A: VnAlgebra) -> str:
    return json.dumps(algebra_to_dict(A))


def algebra_from_json(text: str) -> VnAlgebra:
    return algebra_from_dict(json.loads(text))
