"""Region calculus on a 1-d site chain and Haag-Kastler nets over it.

The chain is a Cauchy slice: intervals stand in for double cones, rays
(intervals touching an end of the chain) for wedges, and set complement for
the causal complement.  Two flavours of net are built:

* ``full``: the algebra of an interval is the full matrix algebra of its
  sites tensored with the identity elsewhere.  Duality holds.
* ``fixed_point``: only operators invariant under a global on-site symmetry
  ``U = u_0 (x) u_1 (x) ...`` are observable.  Duality typically fails.

Non-interval regions get the additive extension (join over maximal runs).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import opalg
from .errors import CapExceeded, ConfigError, EmptySector, NotInterval, NotUnitary
from .numerics import Tolerance, dagger, is_unitary, kron, nullspace, resolve_tol
from .opalg import VnAlgebra

DEFAULT_CAP = 64


@dataclass(frozen=True)
class Chain:
    n_sites: int
    site_dims: tuple[int, ...]
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        dims = tuple(int(d) for d in self.site_dims)
        object.__setattr__(self, "site_dims", dims)
        if self.n_sites < 2 or len(dims) != self.n_sites or min(dims) < 1:
            raise ConfigError(f"need >= 2 sites with positive dims, got {dims}")
        if self.total_dim > self.cap:
            raise CapExceeded(f"total dimension {self.total_dim} exceeds cap {self.cap}")

    @classmethod
    def qubits(cls, n: int, cap: int = DEFAULT_CAP) -> "Chain":
        return cls(n, (2,) * n, cap)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.site_dims))

    @property
    def sites(self) -> frozenset[int]:
        return frozenset(range(self.n_sites))

    def region(self, sites: Iterable[int]) -> "Region":
        return Region(frozenset(sites), self.n_sites)


@dataclass(frozen=True)
class Region:
    """A set of chain sites.  ``kind`` is recomputed from the sites."""

    sites: frozenset[int]
    n_sites: int

    def __post_init__(self):
        s = frozenset(int(i) for i in self.sites)
        if any(i < 0 or i >= self.n_sites for i in s):
            raise ValueError(f"sites {sorted(s)} outside a chain of {self.n_sites}")
        object.__setattr__(self, "sites", s)

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.sites))

    @property
    def is_interval(self) -> bool:
        k = self.key
        return bool(k) and k[-1] - k[0] + 1 == len(k)

    @property
    def kind(self) -> str:
        if not self.sites:
            return "empty"
        if not self.is_interval:
            return "general"
        k = self.key
        if k[0] == 0 and k[-1] == self.n_sites - 1:
            return "interval"  # the whole chain; a ray from both ends
        if k[0] == 0:
            return "left_ray"
        if k[-1] == self.n_sites - 1:
            return "right_ray"
        return "interval"

    @property
    def is_ray(self) -> bool:
        k = self.key
        return self.is_interval and (k[0] == 0 or k[-1] == self.n_sites - 1)

    def label(self) -> str:
        k = self.key
        if not k:
            return "{}"
        if self.is_interval:
            return f"{k[0]}..{k[-1]}"
        return "{" + ",".join(map(str, k)) + "}"

    def __lt__(self, other: "Region"):
        return (len(self.key), self.key) < (len(other.key), other.key)


def parse_region(spec: str, n_sites: int) -> Region:
    """Parse ``"a..b"``, ``"a"`` or ``"a,b,c"`` into a region."""
    spec = spec.strip()
    try:
        if ".." in spec:
            a, b = spec.split("..")
            sites = range(int(a), int(b) + 1)
        elif spec in ("", "{}"):
            sites = ()
        else:
            sites = [int(x) for x in spec.strip("{}").split(",")]
        return Region(frozenset(sites), n_sites)
    except ValueError as exc:
        raise ConfigError(f"bad region {spec!r}: {exc}") from exc


def spacelike_complement(R: Region, chain: Chain | None = None) -> Region:
    n = R.n_sites if chain is None else chain.n_sites
    return Region(frozenset(range(n)) - R.sites, n)


def intervals_within(R: Region) -> list[Region]:
    """Maximal contiguous runs of ``R``."""
    runs, cur = [], []
    for s in R.key:
        if cur and s != cur[-1] + 1:
            runs.append(cur)
            cur = []
        cur.append(s)
    if cur:
        runs.append(cur)
    return [Region(frozenset(r), R.n_sites) for r in runs]


def subintervals(R: Region) -> list[Region]:
    """Every interval contained in ``R``, in canonical order."""
    out = []
    for run in intervals_within(R):
        k = run.key
        for i in range(len(k)):
            for j in range(i, len(k)):
                out.append(Region(frozenset(k[i:j + 1]), R.n_sites))
    return sorted(out)


def all_intervals(chain: Chain) -> list[Region]:
    return subintervals(Region(chain.sites, chain.n_sites))


def wedges_containing(O: Region, chain: Chain | None = None) -> list[Region]:
    """All rays (left or right, the full chain included) that contain ``O``."""
    if not O.is_interval:
        raise NotInterval(f"{O.label()} is not an interval")
    n = O.n_sites if chain is None else chain.n_sites
    lo, hi = O.key[0], O.key[-1]
    rays = {frozenset(range(0, b + 1)) for b in range(hi, n)}
    rays |= {frozenset(range(a, n)) for a in range(0, lo + 1)}
    return sorted(Region(r, n) for r in rays)


# ---------------------------------------------------------------------------
# Nets


@dataclass(eq=False)
class Net:
    """A net of local algebras with a per-region cache.

    Sector-restricted nets keep a reference to their parent and the isometry
    onto the chosen eigenspace; their algebras are compressions of the
    parent's.
    """

    chain: Chain
    flavor: str
    onsite_symmetry: tuple[np.ndarray, ...] | None = None
    sector: complex | None = None
    parent: "Net | None" = field(default=None, repr=False)
    isometry: np.ndarray | None = field(default=None, repr=False)
    tol: Tolerance | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def ambient_dim(self) -> int:
        return self.chain.total_dim if self.isometry is None else self.isometry.shape[1]

    def region(self, sites: Iterable[int]) -> Region:
        return self.chain.region(sites)

    def global_symmetry(self) -> np.ndarray | None:
        if self.onsite_symmetry is None:
            return None
        return kron(*self.onsite_symmetry)

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(net_to_config(self), sort_keys=True).encode()).hexdigest()[:16]

    def local_algebra(self, R: Region) -> VnAlgebra:
        return local_algebra(self, R)


def _embed(chain: Chain, R: Region, mats: np.ndarray) -> np.ndarray:
    """Embed operators on the contiguous sites of ``R`` into the chain."""
    k = R.key
    left = int(np.prod(chain.site_dims[:k[0]]))
    right = int(np.prod(chain.site_dims[k[-1] + 1:]))
    norm = np.sqrt(left * right)
    return np.array([kron(np.eye(left), m, np.eye(right)) / norm for m in mats])


def _interval_dim(chain: Chain, R: Region) -> int:
    return int(np.prod([chain.site_dims[s] for s in R.key]))


def build_full_net(chain: Chain, tol: Tolerance | None = None) -> Net:
    return Net(chain=chain, flavor="full", tol=tol)


def build_fixed_point_net(chain: Chain, onsite_symmetry: Sequence, tol: Tolerance | None = None) -> Net:
    """Observable net of operators invariant under ``u_0 (x) u_1 (x) ...``."""
    syms = tuple(np.asarray(u, dtype=complex) for u in onsite_symmetry)
    if len(syms) != chain.n_sites:
        raise ConfigError(f"need one symmetry generator per site, got {len(syms)}")
    for s, (u, d) in enumerate(zip(syms, chain.site_dims)):
        if u.shape != (d, d):
            raise ConfigError(f"symmetry on site {s} has shape {u.shape}, expected {(d, d)}")
        if not is_unitary(u, tol):
            raise NotUnitary(f"symmetry generator on site {s} is not unitary")
    return Net(chain=chain, flavor="fixed_point", onsite_symmetry=syms, tol=tol)


def _interval_algebra(net: Net, R: Region) -> VnAlgebra:
    chain = net.chain
    tol = resolve_tol(net.tol)
    dI = _interval_dim(chain, R)
    if net.flavor == "full":
        local = opalg.gell_mann_basis(dI)
    else:
        uI = kron(*[net.onsite_symmetry[s] for s in R.key])
        local = opalg.commutant(opalg.generate_algebra([uI], dI, tol), tol).basis
    return opalg.certify(opalg.OperatorSpace(chain.total_dim, _embed(chain, R, local)), tol)


def local_algebra(net: Net, R: Region) -> VnAlgebra:
    """The algebra of ``R``: direct for intervals, additive extension otherwise."""
    if R.n_sites != net.chain.n_sites:
        raise ValueError("region belongs to a different chain")
    key = R.key
    if key in net._cache:
        return net._cache[key]
    tol = resolve_tol(net.tol)
    if net.parent is not None:
        P = net.parent.local_algebra(R)
        V = net.isometry
        comp = np.einsum("ij,kjl,lm->kim", dagger(V), P.basis, V)
        A = opalg.algebra_from_span(comp, V.shape[1], tol)
    elif not key:
        A = opalg.scalars(net.ambient_dim)
    elif R.is_interval:
        A = _interval_algebra(net, R)
    else:
        runs = [local_algebra(net, r) for r in intervals_within(R)]
        A = opalg.generate_algebra(np.concatenate([a.basis for a in runs]), net.ambient_dim, tol)
    net._cache[key] = A
    return A


def populate(net: Net) -> None:
    """Fill the cache for every region of the chain."""
    n = net.chain.n_sites
    for mask in range(1 << n):
        net.local_algebra(Region(frozenset(i for i in range(n) if mask >> i & 1), n))


def sector_restrict(net: Net, charge: complex, tol: Tolerance | None = None) -> Net:
    """Compress every algebra onto one eigenspace of the global symmetry."""
    tol = resolve_tol(tol if tol is not None else net.tol)
    if net.flavor != "fixed_point":
        raise ConfigError("sector restriction needs a fixed-point net")
    U = net.global_symmetry()
    d = U.shape[0]
    K = nullspace(U - charge * np.eye(d), tol)
    if K.shape[0] == 0:
        raise EmptySector(f"global symmetry has no eigenvalue {charge}")
    V = np.eye(d, dtype=complex) if K.shape[0] == d else K.T.copy()
    return Net(chain=net.chain, flavor=net.flavor, onsite_symmetry=net.onsite_symmetry,
               sector=complex(charge), parent=net, isometry=V, tol=net.tol)


# ---------------------------------------------------------------------------
# Config files


def net_to_config(net: Net) -> dict:
    cfg = {"n_sites": net.chain.n_sites, "site_dims": list(net.chain.site_dims),
           "flavor": net.flavor}
    if net.onsite_symmetry is not None:
        cfg["symmetry"] = [opalg.encode_matrix(u) for u in net.onsite_symmetry]
    if net.sector is not None:
        c = complex(net.sector)
        cfg["sector"] = c.real if c.imag == 0 else [c.real, c.imag]
    return cfg


def net_from_config(cfg: dict, tol: Tolerance | None = None, cap: int = DEFAULT_CAP) -> Net:
    try:
        chain = Chain(int(cfg["n_sites"]), tuple(cfg["site_dims"]), cap)
        flavor = cfg.get("flavor", "full")
        if flavor == "full":
            net = build_full_net(chain, tol)
        elif flavor == "fixed_point":
            if "symmetry" not in cfg:
                raise ConfigError("fixed_point net needs a symmetry")
            net = build_fixed_point_net(chain, [opalg.decode_matrix(u) for u in cfg["symmetry"]], tol)
        else:
            raise ConfigError(f"unknown flavor {flavor!r}")
        sector = cfg.get("sector")
        if sector is not None:
            charge = complex(*sector) if isinstance(sector, list) else complex(sector)
            net = sector_restrict(net, charge, tol)
        return net
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed net config: {exc}") from exc


def load_net_config(path, tol: Tolerance | None = None) -> Net:
    """Load a net from a JSON file path or the name of a bundled config."""
    p = Path(path)
    if not p.exists():
        bundled = Path(__file__).parent / "configs" / f"{path}.json"
        if not bundled.exists():
            raise ConfigError(f"no such net config: {path}")
        p = bundled
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    return net_from_config(cfg, tol)


def bundled_configs() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).parent / "configs").glob("*.json"))
