"""Tomita-Takesaki data and relative entropy for finite-dimensional algebras.

Standard forms are built blockwise from the structure decomposition of the
algebra: a block ``M_n (x) 1_m`` is represented on the ``n x n`` matrices with
the HS inner product, acting by left multiplication, and the state vector is
the square root of the block marginal.  The Tomita operator is then obtained
straight from its defining relation ``S(a Omega) = a^dagger Omega`` and split
by polar decomposition, so the familiar closed forms (``Delta = L_rho R_rho^{-1}``
and so on) are outputs to test, not inputs.

Antilinear operators are stored as a pair ``(W, conj=True)`` acting as
``x -> W conj(x)``.  Vectors of the ``n x n`` block space are row-major
flattenings, so ``vec(a X b) = (a (x) b^T) vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import opalg
from .errors import (DPIViolation, DimensionMismatch, KrausNotInAlgebra, NotFaithful,
                     NotFaithfulOutput, NotInAlgebra, SingularTomita)
from .numerics import (Tolerance, as_matrix, dagger, hermitian_eig, matrix_function_psd,
                       opnorm, resolve_tol)
from .opalg import Channel, Decomposition, VnAlgebra

FLOW_TIMES = (0.3, 1.0, 2.7)


def _density(rho) -> np.ndarray:
    if isinstance(rho, opalg.DensityState):
        return rho.rho
    return as_matrix(rho)


def _block_diag(mats: Sequence[np.ndarray]) -> np.ndarray:
    return scipy.linalg.block_diag(*mats) if len(mats) > 1 else np.asarray(mats[0])


# ---------------------------------------------------------------------------
# Standard form and modular data


@dataclass(frozen=True, eq=False)
class StandardForm:
    algebra: VnAlgebra
    decomposition: Decomposition = field(repr=False)
    rep_dim: int
    omega_vector: np.ndarray = field(repr=False)
    marginals: tuple[np.ndarray, ...] = field(repr=False)
    cyclic: bool
    separating: bool

    def left_action(self, a) -> np.ndarray:
        """Represent an element of the algebra on the standard space."""
        blocks = self.decomposition.compress(a)
        return _block_diag([np.kron(c, np.eye(c.shape[0])) for c in blocks])

    represent = left_action

    def represented_basis(self) -> np.ndarray:
        return np.array([self.left_action(b) for b in self.algebra.basis])

    def represented_algebra(self, tol: Tolerance | None = None) -> VnAlgebra:
        return opalg.algebra_from_span(self.represented_basis(), self.rep_dim, tol)

    def state(self, X) -> complex:
        """``<Omega, X Omega>`` for an operator on the standard space."""
        return complex(np.vdot(self.omega_vector, X @ self.omega_vector))


def standard_form(A: VnAlgebra, omega, tol: Tolerance | None = None) -> StandardForm:
    """GNS-type standard form of ``A`` for the restriction of ``omega``.

    Raises
    ------
    NotFaithful
        If some block marginal of the restricted state has an eigenvalue at or
        below ``rank_tol``.
    """
    tol = resolve_tol(tol)
    rho = _density(omega)
    if rho.shape[0] != A.ambient_dim:
        raise DimensionMismatch("state and algebra live in different dimensions")
    dec = opalg.decompose(A, tol)
    restricted = opalg.conditional_expectation(A, rho)
    margs = [(m + dagger(m)) / 2 for m in dec.marginals(restricted)]
    roots = []
    for i, m in enumerate(margs):
        w, V = np.linalg.eigh(m)
        if w[0] <= tol.rank_tol:
            raise NotFaithful(f"block {i} marginal has eigenvalue {w[0]:.3e}")
        roots.append(((V * np.sqrt(w)) @ dagger(V)).reshape(-1))
    omega_vec = np.concatenate(roots)
    rep_dim = omega_vec.size
    form = StandardForm(A, dec, rep_dim, omega_vec, tuple(margs), False, False)
    T = np.stack([form.left_action(b) @ omega_vec for b in A.basis], axis=1)
    s = np.linalg.svd(T, compute_uv=False)
    full_rank = T.shape[0] == T.shape[1] and s[-1] > tol.rank_tol * s[0]
    # cyclic: the vectors a Omega span the space; separating: a -> a Omega is injective
    return StandardForm(A, dec, rep_dim, omega_vec, tuple(margs), bool(full_rank), bool(full_rank))


@dataclass(frozen=True, eq=False)
class ModularData:
    J: np.ndarray = field(repr=False)  # antiunitary x -> J conj(x)
    J_conjugates: bool
    Delta: np.ndarray = field(repr=False)
    form: StandardForm = field(repr=False)
    tomita: np.ndarray = field(repr=False)  # S x = tomita conj(x)

    def apply_J(self, x) -> np.ndarray:
        return self.J @ np.conj(x)

    def conjugate_by_J(self, X) -> np.ndarray:
        """The linear operator ``J X J``."""
        return self.J @ np.conj(X) @ np.conj(self.J)

    def delta_power(self, z: complex) -> np.ndarray:
        return matrix_function_psd(self.Delta, "power", z)

    def modular_hamiltonian(self) -> np.ndarray:
        """``-log Delta``."""
        return -matrix_function_psd(self.Delta, "log")


def tomita_operator(form: StandardForm, tol: Tolerance | None = None) -> ModularData:
    """Matrix of ``S: a Omega -> a^dagger Omega`` and its polar decomposition.

    With the Hermitian basis ``b_j`` of the algebra, ``T[:, j] = b_j Omega`` and
    ``S(T c) = T conj(c)``, so ``S x = T conj(T^{-1}) conj(x)``.  Writing
    ``T conj(T^{-1}) = W P`` (polar) gives ``J = (W, conj)`` and
    ``Delta = S^* S = conj(P)^2``.

    Raises
    ------
    SingularTomita
        If ``T`` is numerically singular.
    """
    tol = resolve_tol(tol)
    T = np.stack([form.left_action(b) @ form.omega_vector for b in form.algebra.basis], axis=1)
    if T.shape[0] != T.shape[1]:
        raise SingularTomita("standard space and algebra dimensions differ")
    s = np.linalg.svd(T, compute_uv=False)
    if s[-1] <= tol.rank_tol * s[0]:
        raise SingularTomita(f"Omega is not cyclic and separating (sigma_min {s[-1]:.3e})")
    M = T @ np.conj(np.linalg.inv(T))
    W, P = scipy.linalg.polar(M)
    Delta = np.conj(P @ P)
    Delta = (Delta + dagger(Delta)) / 2
    return ModularData(J=W, J_conjugates=True, Delta=Delta, form=form, tomita=M)


def polar_residual(md: ModularData) -> float:
    """``max_a ||J Delta^{1/2} (a Omega) - a^dagger Omega||`` over the algebra basis."""
    form = md.form
    root = md.delta_power(0.5)
    worst = 0.0
    for b in form.algebra.basis:
        for a in (b, 1j * b):  # complex multiples exercise the antilinearity
            pa = form.left_action(a)
            lhs = md.apply_J(root @ (pa @ form.omega_vector))
            rhs = dagger(pa) @ form.omega_vector
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def vacuum_residuals(md: ModularData) -> tuple[float, float]:
    """``(||J Omega - Omega||, ||Delta Omega - Omega||)``."""
    O = md.form.omega_vector
    return (float(np.linalg.norm(md.apply_J(O) - O)),
            float(np.linalg.norm(md.Delta @ O - O)))


def modular_flow(md: ModularData, t: float, X, tol: Tolerance | None = None,
                 rep_algebra: VnAlgebra | None = None) -> np.ndarray:
    """``Delta^{it} X Delta^{-it}`` for ``X`` in the represented algebra.

    Raises
    ------
    NotInAlgebra
        If ``X`` or its image is not in the represented algebra.
    """
    tol = resolve_tol(tol)
    M = md.form.represented_algebra(tol) if rep_algebra is None else rep_algebra
    X = np.asarray(X, dtype=complex)
    if not opalg.contains(M, X, tol):
        raise NotInAlgebra("operator is not in the represented algebra")
    U = md.delta_power(1j * t)
    out = U @ X @ dagger(U)
    if not opalg.contains(M, out, tol):
        raise NotInAlgebra("modular flow left the algebra")
    return out


@dataclass
class TTResiduals:
    conjugation: float  # J M J vs M'
    flow_algebra: float
    flow_commutant: float
    dim_commutant: int

    def max(self) -> float:
        return max(self.conjugation, self.flow_algebra, self.flow_commutant)


def _flow_stability(U: np.ndarray, S: VnAlgebra) -> float:
    moved = np.einsum("ij,kjl,lm->kim", U, S.basis, dagger(U))
    return max(S.space.residual(m) for m in moved)


def tomita_takesaki_check(md: ModularData, tol: Tolerance | None = None,
                          times: Sequence[float] = FLOW_TIMES) -> TTResiduals:
    """Residuals of ``J M J = M'`` and of modular invariance of ``M`` and ``M'``."""
    tol = resolve_tol(tol)
    M = md.form.represented_algebra(tol)
    Mc = opalg.commutant(M, tol)
    JMJ = opalg.OperatorSpace(M.ambient_dim,
                              np.array([md.conjugate_by_J(b) for b in M.basis]))
    conj_res = opalg.space_eq_residual(JMJ, Mc.space)
    fa = fc = 0.0
    for t in times:
        U = md.delta_power(1j * t)
        fa = max(fa, _flow_stability(U, M))
        fc = max(fc, _flow_stability(U, Mc))
    return TTResiduals(conj_res, fa, fc, Mc.dim)


def kms_check(md: ModularData, pairs) -> float:
    """Largest ``|omega(A sigma_{-i}(B)) - omega(B A)|`` over represented pairs.

    ``sigma_z(B) = Delta^{iz} B Delta^{-iz}``, so ``sigma_{-i}(B) = Delta B Delta^{-1}``,
    evaluated spectrally.  This is the boundary condition the modular flow
    satisfies with ``sigma_t = Ad Delta^{it}``.
    """
    D = md.Delta
    Dinv = md.delta_power(-1)
    form = md.form
    worst = 0.0
    for A, B in pairs:
        lhs = form.state(A @ (D @ B @ Dinv))
        rhs = form.state(B @ A)
        worst = max(worst, abs(lhs - rhs))
    return float(worst)


# ---------------------------------------------------------------------------
# Relative modular operator and relative entropy


def relative_modular(rho, sigma, tol: Tolerance | None = None) -> np.ndarray:
    """``Delta_{rho|sigma} X = rho X sigma^{-1}`` on the HS space of the full matrix algebra."""
    tol = resolve_tol(tol)
    rho = _density(rho)
    sigma = _density(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch("states of different dimension")
    for name, m in (("rho", rho), ("sigma", sigma)):
        w, _ = hermitian_eig(m, tol)
        if w[0] <= tol.rank_tol:
            raise NotFaithful(f"{name} has eigenvalue {w[0]:.3e}")
    sinv = matrix_function_psd(sigma, "power", -1, tol)
    D = np.kron(rho, sinv.T)
    return (D + dagger(D)) / 2


def _support_split(m: np.ndarray, tol: Tolerance):
    w, V = np.linalg.eigh((m + dagger(m)) / 2)
    pos = w > tol.rank_tol
    return w, V, pos


def _block_araki(r: np.ndarray, s: np.ndarray, tol: Tolerance) -> float:
    """``-<Omega_r, log Delta_{s|r} Omega_r>`` for one block, support-aware."""
    wr, Vr, pr = _support_split(r, tol)
    if not np.any(pr):
        return 0.0
    ws, Vs, ps = _support_split(s, tol)
    # weight of r outside the support of s
    Pk = Vs[:, ~ps] @ dagger(Vs[:, ~ps])
    if np.real(np.trace(Pk @ r)) > tol.rank_tol:
        return math.inf
    rinv = (Vr[:, pr] / wr[pr]) @ dagger(Vr[:, pr])
    s_clip = (Vs[:, ps] * ws[ps]) @ dagger(Vs[:, ps])
    D = np.kron(s_clip, rinv.T)
    D = (D + dagger(D)) / 2
    omega = ((Vr[:, pr] * np.sqrt(wr[pr])) @ dagger(Vr[:, pr])).reshape(-1)
    lam, E = np.linalg.eigh(D)
    c = np.abs(dagger(E) @ omega) ** 2
    live = lam > tol.rank_tol
    if np.sum(c[~live]) > tol.rank_tol:
        return math.inf
    return float(-np.sum(c[live] * np.log(lam[live])))


def araki_entropy(rho, sigma, A: VnAlgebra, tol: Tolerance | None = None) -> float:
    """Relative entropy ``S(rho || sigma)`` of the restrictions to ``A``.

    Both states are restricted by the conditional expectation and reduced to
    block marginals; each block contributes ``-<Omega_rho, log Delta Omega_rho>``
    with ``Delta = L_sigma R_rho^{-1}`` the relative modular operator of the
    pair, ``Omega_rho`` the square-root vector.  Returns ``math.inf`` when the
    support of the restricted ``rho`` is not inside that of ``sigma``.
    """
    tol = resolve_tol(tol)
    rho = _density(rho)
    sigma = _density(sigma)
    dec = opalg.decompose(A, tol)
    r = dec.marginals(opalg.conditional_expectation(A, rho))
    s = dec.marginals(opalg.conditional_expectation(A, sigma))
    total = 0.0
    for ri, si in zip(r, s):
        total += _block_araki(ri, si, tol)
    if math.isinf(total):
        return math.inf
    return max(total, 0.0) if total > -tol.eq_tol else total


def umegaki_blockwise(rho_A, sigma_A, blocks: Decomposition,
                      tol: Tolerance | None = None) -> float:
    """``sum_i trace(r_i (log r_i - log s_i))`` over multiplicity-reduced block marginals.

    ``rho_A`` and ``sigma_A`` are states already inside the algebra (e.g.
    conditional-expectation images); ``blocks`` is the algebra's
    decomposition.  Support violations give ``math.inf``.
    """
    tol = resolve_tol(tol)
    total = 0.0
    for r, s in zip(blocks.marginals(rho_A), blocks.marginals(sigma_A)):
        wr, Vr = np.linalg.eigh((r + dagger(r)) / 2)
        ws, Vs = np.linalg.eigh((s + dagger(s)) / 2)
        wr = np.clip(wr, 0, None)
        ent = float(np.sum(wr[wr > tol.rank_tol] * np.log(wr[wr > tol.rank_tol])))
        # diagonal of r in the eigenbasis of s
        diag = np.real(np.einsum("ia,ij,ja->a", np.conj(Vs), r, Vs))
        live = ws > tol.rank_tol
        if np.sum(diag[~live]) > tol.rank_tol:
            return math.inf
        total += ent - float(np.sum(diag[live] * np.log(ws[live])))
    return total


# ---------------------------------------------------------------------------
# Channels: data processing and recovery


@dataclass
class DPIResult:
    S_before: float
    S_after: float
    slack: float


def dpi_check(channel: Channel, rho, sigma, A_in: VnAlgebra, A_out: VnAlgebra,
              tol: Tolerance | None = None) -> DPIResult:
    """Relative entropy before and after a trace-preserving channel.

    Raises
    ------
    DPIViolation
        If the entropy grows by more than ``10 eq_tol``.
    """
    tol = resolve_tol(tol)
    channel.check_normalized(tol)
    rho = _density(rho)
    sigma = _density(sigma)
    before = araki_entropy(rho, sigma, A_in, tol)
    after = araki_entropy(channel.schrodinger(rho), channel.schrodinger(sigma), A_out, tol)
    if math.isinf(before):
        slack = math.inf
    else:
        slack = before - after
    if slack < -tol.signal_tol:
        raise DPIViolation(f"relative entropy increased: {before} -> {after}")
    return DPIResult(before, after, slack)


def petz_recovery(channel: Channel, sigma, tol: Tolerance | None = None) -> Channel:
    """Petz map ``x -> sigma^{1/2} Phi^dagger(Phi(sigma)^{-1/2} x Phi(sigma)^{-1/2}) sigma^{1/2}``.

    Kraus operators ``sigma^{1/2} v_k^dagger Phi(sigma)^{-1/2}``.

    Raises
    ------
    NotFaithfulOutput
        If ``Phi(sigma)`` is not faithful.
    """
    tol = resolve_tol(tol)
    sigma = _density(sigma)
    out = channel.schrodinger(sigma)
    w, _ = hermitian_eig(out, tol)
    if w[0] <= tol.rank_tol:
        raise NotFaithfulOutput(f"Phi(sigma) has eigenvalue {w[0]:.3e}")
    s_half = matrix_function_psd(sigma, "power", 0.5, tol)
    o_mhalf = matrix_function_psd(out, "power", -0.5, tol)
    return Channel(tuple(s_half @ dagger(v) @ o_mhalf for v in channel.kraus),
                   direction="schrodinger")


@dataclass
class EntropicReport:
    commutes: bool
    rho_fixed: bool
    sigma_fixed: bool
    entropy_before: float
    entropy_after: float
    entropy_delta: float
    pre_post_entropy: float  # S(rho_B || (Phi_* rho)_B)
    restriction_residual: float


def entropic_nosignalling_check(channel: Channel, A_op: VnAlgebra, rho, sigma, B: VnAlgebra,
                                tol: Tolerance | None = None) -> EntropicReport:
    """Restricted states and relative entropy on ``B`` before and after ``channel``.

    Raises
    ------
    KrausNotInAlgebra
        If a Kraus operator lies outside ``A_op``.
    """
    tol = resolve_tol(tol)
    for v in channel.kraus:
        if not opalg.contains(A_op, v, tol):
            raise KrausNotInAlgebra("Kraus operator outside the implementing algebra")
    rho = _density(rho)
    sigma = _density(sigma)
    commutes = opalg.cross_commutator_norm(A_op, B) <= tol.signal_tol
    rho2 = channel.schrodinger(rho)
    sigma2 = channel.schrodinger(sigma)
    r_res = opnorm(opalg.conditional_expectation(B, rho2) - opalg.conditional_expectation(B, rho))
    s_res = opnorm(opalg.conditional_expectation(B, sigma2)
                   - opalg.conditional_expectation(B, sigma))
    before = araki_entropy(rho, sigma, B, tol)
    after = araki_entropy(rho2, sigma2, B, tol)
    if math.isinf(before) or math.isinf(after):
        delta = 0.0 if before == after else math.inf
    else:
        delta = abs(after - before)
    return EntropicReport(commutes=commutes, rho_fixed=r_res <= tol.signal_tol,
                          sigma_fixed=s_res <= tol.signal_tol, entropy_before=before,
                          entropy_after=after, entropy_delta=delta,
                          pre_post_entropy=araki_entropy(rho, rho2, B, tol),
                          restriction_residual=max(r_res, s_res))
