"""Duality, maximal no-signalling extensions and signalling witnesses.

The central objects are, for an interval ``O`` with complement ``O'``:

* the local algebra ``A(O)``;
* the maximal no-signalling extension ``A(O')'``, computed both as the
  intersection of ``A(O_B)'`` over intervals ``O_B`` inside ``O'`` and as the
  commutant of the additive ``A(O')`` -- the two must always agree;
* whether ``A(O)' = A(O')`` (essential duality), which decides whether
  ``A(O)`` is already maximal.

When duality holds, every strict extension carries a unitary whose inner
automorphism changes some spacelike expectation value; when it fails, the
whole of ``A(O')'`` is invisible from ``O'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import opalg
from .errors import (AmbiguousTolerance, EmptyComplement, IdentityViolation,
                     NotAnExtension, NotInterval)
from .net import (Net, Region, _embed, all_intervals, spacelike_complement, subintervals,
                  wedges_containing)
from .numerics import Tolerance, dagger, hermitian_eig, matrix_function_psd, opnorm, resolve_tol
from .modular import araki_entropy
from .opalg import Channel, DensityState, VnAlgebra, cross_commutator_norm

THETA_GRID = (np.pi / 8, np.pi / 4, np.pi / 2)
WITNESS_EPSILON = 1e-3
# norms in (signal_tol, AMBIGUOUS_FACTOR * eq_tol] are refused rather than classified
AMBIGUOUS_FACTOR = 1e3


def classify_norm(value: float, tol: Tolerance | None = None) -> bool:
    """True if ``value`` counts as nonzero, False if zero.

    Raises
    ------
    AmbiguousTolerance
        If the value sits between the two cutoffs.
    """
    tol = resolve_tol(tol)
    if value <= tol.signal_tol:
        return False
    if value <= AMBIGUOUS_FACTOR * tol.eq_tol:
        raise AmbiguousTolerance(f"norm {value:.3e} between {tol.signal_tol:.1e} and "
                                 f"{AMBIGUOUS_FACTOR * tol.eq_tol:.1e}")
    return True


def unit_operator_basis(A: VnAlgebra) -> np.ndarray:
    """Basis of A rescaled to operator norm one."""
    norms = np.linalg.norm(A.basis, ord=2, axis=(1, 2))
    return A.basis / norms[:, None, None]


# ---------------------------------------------------------------------------
# Duality and the maximal extension


def _complement_checked(net: Net, O: Region) -> Region:
    if not O.is_interval:
        raise NotInterval(f"{O.label()} is not an interval")
    Oc = spacelike_complement(O)
    if not Oc.sites:
        raise EmptyComplement(f"{O.label()} has empty complement")
    return Oc


def max_nosignalling_extension(net: Net, O: Region, tol: Tolerance | None = None) -> VnAlgebra:
    """The largest algebra whose inner automorphisms fix every ``A(O_B)``, ``O_B`` in ``O'``.

    Raises
    ------
    IdentityViolation
        If the intersection of commutants differs from ``A(O')'`` or fails to
        contain ``A(O)``.
    """
    tol = resolve_tol(tol)
    Oc = _complement_checked(net, O)
    parts = [opalg.commutant(net.local_algebra(r), tol) for r in subintervals(Oc)]
    ext = parts[0]
    for p in parts[1:]:
        ext = opalg.intersect(ext, p, tol)
    direct = opalg.commutant(net.local_algebra(Oc), tol)
    res = opalg.space_eq_residual(ext, direct)
    if res > tol.signal_tol:
        raise IdentityViolation(f"intersection of commutants != A(O')' (residual {res:.3e})")
    inner = opalg.space_residual(net.local_algebra(O), ext)
    if inner > tol.signal_tol:
        raise IdentityViolation(f"A(O) not inside its maximal extension (residual {inner:.3e})")
    return ext


@dataclass
class DualityReport:
    region: Region
    holds: bool
    dim_A: int
    dim_A_commutant: int
    dim_A_Oprime: int
    dim_max_extension: int
    residuals: list[float]
    commutant_equals_complement: bool  # (i)
    wedge_intersection_property: bool  # (ii), as computed
    double_commutant_identity: bool  # (iii)

    @property
    def conditions_agree(self) -> bool:
        return self.commutant_equals_complement == self.wedge_intersection_property \
            == self.double_commutant_identity

    @property
    def gap(self) -> int:
        return self.dim_max_extension - self.dim_A


def wedge_intersection(net: Net, O: Region, tol: Tolerance | None = None) -> VnAlgebra:
    """Intersection of ``A(W)`` over all rays ``W`` containing ``O``."""
    tol = resolve_tol(tol)
    ws = [net.local_algebra(w) for w in wedges_containing(O)]
    out = ws[0]
    for w in ws[1:]:
        out = opalg.intersect(out, w, tol)
    return out


def essential_duality_check(net: Net, O: Region, tol: Tolerance | None = None) -> DualityReport:
    """Decide ``A(O)' = A(O')`` and record the two equivalent reformulations.

    (i) and (iii) are equivalent by the double commutant theorem, so their
    disagreement raises.  (ii) is only equivalent when wedge duality holds,
    which the lattice fixed-point nets need not satisfy; its value is reported
    as computed.
    """
    tol = resolve_tol(tol)
    Oc = _complement_checked(net, O)
    A = net.local_algebra(O)
    Ac = opalg.commutant(A, tol)
    B = net.local_algebra(Oc)
    ext = max_nosignalling_extension(net, O, tol)
    W = wedge_intersection(net, O, tol)
    r1 = opalg.space_eq_residual(Ac, B)
    r3 = opalg.space_eq_residual(A, ext)
    r2 = opalg.space_eq_residual(A, W)
    c1, c2, c3 = (r <= tol.signal_tol for r in (r1, r2, r3))
    if c1 != c3:
        raise IdentityViolation("A(O)' = A(O') and A(O) = A(O')' disagree")
    if c1 != (A.dim == ext.dim):
        raise IdentityViolation("duality verdict disagrees with the dimension count")
    return DualityReport(region=O, holds=c1, dim_A=A.dim, dim_A_commutant=Ac.dim,
                         dim_A_Oprime=B.dim, dim_max_extension=ext.dim,
                         residuals=[r1, r2, r3], commutant_equals_complement=c1,
                         wedge_intersection_property=c2, double_commutant_identity=c3)


@dataclass
class WedgeReport:
    region: Region
    holds: bool
    dim_wedge_intersection: int
    dim_complement_commutant: int
    residual: float


def check_wedge_intersection_identity(net: Net, O: Region,
                                      tol: Tolerance | None = None) -> WedgeReport:
    """Compare ``A(O')'`` with the intersection of ``A(W)`` over rays ``W`` containing ``O``.

    A mismatch is a finding about the net (ray duality can fail on
    fixed-point nets), not an error.
    """
    tol = resolve_tol(tol)
    if not O.is_interval:
        raise NotInterval(f"{O.label()} is not an interval")
    W = wedge_intersection(net, O, tol)
    Oc = spacelike_complement(O)
    if Oc.sites:
        rhs = opalg.commutant(net.local_algebra(Oc), tol)
    else:
        # whole chain: the only ray is the chain itself; compare with its double commutant
        full = net.local_algebra(O)
        rhs = opalg.commutant(opalg.commutant(full, tol), tol)
    res = opalg.space_eq_residual(W, rhs)
    return WedgeReport(region=O, holds=res <= tol.signal_tol, dim_wedge_intersection=W.dim,
                       dim_complement_commutant=rhs.dim, residual=res)


# ---------------------------------------------------------------------------
# Channels and instruments


def is_nonsignalling_channel(channel: Channel, B: VnAlgebra,
                             tol: Tolerance | None = None) -> tuple[bool, float]:
    """Does the Heisenberg map fix every element of ``B``?

    The deviation ``||Phi(b) - b||`` is taken over the basis of ``B`` rescaled
    to operator norm one, so ``Ad_u`` flipping the sign of a Pauli reports 2.
    """
    tol = resolve_tol(tol)
    channel.check_normalized(tol)
    dev = max(opnorm(channel.heisenberg(b) - b) for b in unit_operator_basis(B))
    return dev <= tol.signal_tol, float(dev)


@dataclass(frozen=True, eq=False)
class Instrument:
    """Branches of CP maps (each a Kraus list) summing to a channel."""

    branches: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        br = tuple(tuple(np.asarray(k, dtype=complex) for k in b) for b in self.branches)
        if not br or any(not b for b in br):
            raise ValueError("an instrument needs nonempty branches")
        object.__setattr__(self, "branches", br)

    def nonselective(self) -> Channel:
        return Channel(tuple(k for b in self.branches for k in b))


def projective_instrument(X, tol: Tolerance | None = None) -> Instrument:
    """Measurement of a Hermitian observable: one branch per eigenspace."""
    w, V = hermitian_eig(X, tol)
    branches = []
    for g in opalg._cluster(w, 1e-8 * max(1.0, float(np.max(np.abs(w))))):
        P = V[:, g] @ dagger(V[:, g])
        branches.append((P,))
    return Instrument(tuple(branches))


@dataclass
class InstrumentReport:
    nonsignalling: bool
    deviation: float
    branch_deviations: list[float]


def nonselective_instrument_check(instr: Instrument, B: VnAlgebra,
                                  tol: Tolerance | None = None) -> InstrumentReport:
    """Test the summed channel; per-branch deviations are recorded only for diagnostics."""
    tol = resolve_tol(tol)
    ch = instr.nonselective()
    ok, dev = is_nonsignalling_channel(ch, B, tol)
    per = []
    for br in instr.branches:
        # sub-normalised branch: compare Phi_a(b) against Phi_a(1) b
        phi = Channel(br)
        per.append(max(opnorm(phi.heisenberg(b) - phi.heisenberg(np.eye(b.shape[0])) @ b)
                       for b in unit_operator_basis(B)))
    return InstrumentReport(ok, dev, [float(x) for x in per])


# ---------------------------------------------------------------------------
# Witnesses


@dataclass
class Witness:
    region_B: Region
    unitary_u: np.ndarray = field(repr=False)
    element_b: np.ndarray = field(repr=False)
    commutator_norm: float
    state: DensityState = field(repr=False)
    entropy_value: float  # math.inf allowed
    epsilon: float
    theta: float
    deviation: float

    @property
    def entropy_infinite(self) -> bool:
        return math.isinf(self.entropy_value)


def _witness_candidates(extension: VnAlgebra, maxext: VnAlgebra, seed: int,
                        tol: Tolerance) -> list[np.ndarray]:
    cands = [g for g in extension.basis if not opalg.contains(maxext, g, tol)]
    cands.append(opalg.random_element(extension, seed, "hermitian"))
    out = []
    for g in cands:
        h = (g + dagger(g)) / 2
        nrm = opnorm(h)
        if nrm > 0:
            out.append(h / nrm)
    return out


def find_signalling_witness(net: Net, O: Region, extension: VnAlgebra, seed: int = 0,
                            tol: Tolerance | None = None, epsilon: float = WITNESS_EPSILON
                            ) -> Witness | None:
    """Search ``extension`` for a unitary that signals into some interval of ``O'``.

    Returns None exactly when ``extension`` lies inside the maximal
    no-signalling extension ``A(O')'``.

    Raises
    ------
    NotAnExtension
        If ``extension`` does not strictly contain ``A(O)``.
    """
    tol = resolve_tol(tol)
    A = net.local_algebra(O)
    if not opalg.space_leq(A, extension, tol) or opalg.space_eq(A, extension, tol):
        raise NotAnExtension("extension must strictly contain A(O)")
    maxext = max_nosignalling_extension(net, O, tol)
    if opalg.space_leq(extension, maxext, tol):
        return None
    d = net.ambient_dim
    Oc = spacelike_complement(O)
    best = None
    for h in _witness_candidates(extension, maxext, seed, tol):
        for OB in subintervals(Oc):
            for b in unit_operator_basis(net.local_algebra(OB)):
                if not classify_norm(opnorm(h @ b - b @ h), tol):
                    continue
                for theta in THETA_GRID:
                    u = matrix_function_psd(h, "exp", 1j * theta)
                    dev = opnorm(dagger(u) @ b @ u - b)
                    if best is None or dev > best[0] + tol.eq_tol:
                        best = (dev, OB, b, u, theta)
    if best is None:
        return None
    dev, OB, b, u, theta = best
    X = dagger(u) @ b @ u - b
    w, V = hermitian_eig(X, tol)
    psi = V[:, -1]
    phi = np.outer(psi, np.conj(psi))
    omega = (1 - epsilon) * phi + epsilon * np.eye(d) / d
    state = opalg.density_state(omega, tol)
    B = net.local_algebra(OB)
    rho_after = u @ omega @ dagger(u)
    S = araki_entropy(omega, rho_after, B, tol)
    return Witness(region_B=OB, unitary_u=u, element_b=b,
                   commutator_norm=opnorm(u @ b - b @ u), state=state,
                   entropy_value=S, epsilon=epsilon, theta=float(theta), deviation=float(dev))


def single_generator_extensions(net: Net, O: Region,
                                tol: Tolerance | None = None) -> list[tuple[str, VnAlgebra]]:
    """``A(O)`` joined with each one-site basis operator not already in ``A(O)``.

    The one-site operators are the traceless Gell-Mann matrices on each site
    (Pauli matrices for qubits).
    """
    tol = resolve_tol(tol)
    A = net.local_algebra(O)
    chain = net.chain
    out = []
    for s in range(chain.n_sites):
        R = chain.region([s])
        for k, g in enumerate(opalg.gell_mann_basis(chain.site_dims[s])[1:]):
            op = _embed(chain, R, [g])[0]
            if net.isometry is not None:
                op = dagger(net.isometry) @ op @ net.isometry
            if opalg.contains(A, op, tol) or np.linalg.norm(op) == 0:
                continue
            ext = opalg.generate_algebra(np.concatenate([A.basis, op[None]]), net.ambient_dim, tol)
            out.append((f"site{s}:gm{k + 1}", ext))
    return out


@dataclass
class SharpnessReport:
    region: Region
    duality_fails: bool
    gap: int
    max_deviation: float
    samples: list[float]
    note: str = ""


def sharpness_demo(net: Net, O: Region, n_samples: int, seed: int = 0,
                   tol: Tolerance | None = None) -> SharpnessReport:
    """Sample unitaries of ``A(O')'`` and check they signal to no interval of ``O'``."""
    tol = resolve_tol(tol)
    report = essential_duality_check(net, O, tol)
    if report.holds:
        return SharpnessReport(O, False, 0, 0.0, [],
                               note="essential duality holds; no proper non-signalling extension")
    ext = max_nosignalling_extension(net, O, tol)
    Oc = spacelike_complement(O)
    targets = [net.local_algebra(r) for r in subintervals(Oc)]
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63, n_samples)
    devs = []
    for s in seeds:
        u = opalg.random_element(ext, int(s), "unitary")
        ch = Channel((u,))
        devs.append(max(is_nonsignalling_channel(ch, B, tol)[1] for B in targets))
    return SharpnessReport(O, True, ext.dim - report.dim_A, max(devs, default=0.0),
                           [float(x) for x in devs])


# ---------------------------------------------------------------------------
# Causal reconstruction


@dataclass
class PairRow:
    sites_A: tuple[int, ...]
    sites_B: tuple[int, ...]
    algebraic_perp: bool
    geometric_disjoint: bool

    @property
    def agree(self) -> bool:
        return self.algebraic_perp == self.geometric_disjoint


@dataclass
class ReconstructionTable:
    rows: list[PairRow]

    @property
    def reverse_failures(self) -> list[PairRow]:
        """Disjoint pairs that fail to commute (microcausality violations)."""
        return [r for r in self.rows if r.geometric_disjoint and not r.algebraic_perp]

    @property
    def forward_failures(self) -> list[PairRow]:
        """Commuting pairs that overlap (extended-faithfulness violations)."""
        return [r for r in self.rows if r.algebraic_perp and not r.geometric_disjoint]

    @property
    def biconditional(self) -> bool:
        return all(r.agree for r in self.rows)


def causal_reconstruction_check(net: Net, tol: Tolerance | None = None) -> ReconstructionTable:
    """Algebraic vs geometric independence over every ordered pair of intervals."""
    tol = resolve_tol(tol)
    ivs = all_intervals(net.chain)
    rows = []
    for IA in ivs:
        for IB in ivs:
            c = cross_commutator_norm(net.local_algebra(IA), net.local_algebra(IB))
            rows.append(PairRow(IA.key, IB.key, not classify_norm(c, tol),
                                not (IA.sites & IB.sites)))
    return ReconstructionTable(rows)
