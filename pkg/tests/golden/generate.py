"""Freeze brute-force expectations for the bundled nets into ``nets.json``.

Run from the repository root::

    python3 tests/golden/generate.py

Only the oracle module is used; the package under test is never imported.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

import oracle  # noqa: E402

SZ = np.diag([1.0, -1.0]).astype(complex)

NETS = {
    "full-net-2q": dict(n=2, kind="full"),
    "full-net-3q": dict(n=3, kind="full"),
    "z2-net-2q": dict(n=2, kind="z2"),
    "z2-net-3q": dict(n=3, kind="z2"),
    "z2-net-4q-sector": dict(n=4, kind="z2", sector=1),
}


def net_oracle(spec):
    n = spec["n"]
    if spec["kind"] == "full":
        fn = oracle.full_interval
    else:
        def fn(r, nn):
            return oracle.twirl_interval(r, nn, SZ)
    V = oracle.parity_sector(n, spec["sector"]) if "sector" in spec else None
    cache = {}

    def alg(sites):
        key = tuple(sorted(sites))
        if key not in cache:
            A = oracle.region_algebra(key, n, fn)
            if V is not None:
                A = oracle.span_basis(oracle.compress(A, V))
            cache[key] = A
        return cache[key]

    d = 2 ** n if V is None else V.shape[1]
    return n, d, alg


def net_golden(spec) -> dict:
    n, d, alg = net_oracle(spec)
    full = tuple(range(n))
    duality = {}
    wedge = {}
    for I in oracle.intervals(n):
        comp = tuple(x for x in full if x not in I)
        label = f"{I[0]}..{I[-1]}"
        A = alg(I)
        if comp:
            Ac = oracle.commutant(A, d)
            B = alg(comp)
            ext = oracle.commutant(B, d)
            duality[label] = {"dim_A": len(A), "dim_A_commutant": len(Ac),
                              "dim_A_Oprime": len(B), "dim_max_extension": len(ext),
                              "holds": oracle.same_space(Ac, B), "gap": len(ext) - len(A)}
            rhs = ext
        else:
            rhs = oracle.commutant(oracle.commutant(A, d), d)
        W = None
        for ray in oracle.rays_containing(I, n):
            W = alg(ray) if W is None else oracle.intersect(W, alg(ray))
        wedge[label] = {"dim_wedge_intersection": len(W), "dim_complement_commutant": len(rhs),
                        "holds": oracle.same_space(W, rhs)}
    causal = []
    for IA in oracle.intervals(n):
        for IB in oracle.intervals(n):
            perp = oracle.max_commutator(alg(IA), alg(IB)) < 1e-8
            causal.append({"sites_A": list(IA), "sites_B": list(IB), "algebraic_perp": bool(perp),
                           "geometric_disjoint": not set(IA) & set(IB)})
    return {"duality": duality, "wedge": wedge, "causal": causal}


def main() -> None:
    out = {name: net_golden(spec) for name, spec in NETS.items()}
    (HERE / "nets.json").write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
