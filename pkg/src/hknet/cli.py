"""Scenario runner: load a net, run named checks, write JSON/CSV reports.

Usage::

    hknet --scenario duality --net z2-net-2q --region 0..0 --out runs/z2
    hknet --list

``--net`` takes a config path or the name of a bundled config.  Every check
produces one record ``{check, net_fingerprint, region(s), outcome, dims,
residuals, samples, seed, ...}``; the verdict of a check is ``pass``,
``fail`` or ``finding`` (a theorem-consistent negative result such as
duality failing on a fixed-point net).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, modular, nosignal, opalg
from .errors import ConfigError, HKNetError
from .net import (Net, Region, all_intervals, load_net_config, parse_region,
                  spacelike_complement, subintervals, wedges_containing, _embed)
from .numerics import Tolerance, dagger, default_tolerance, use_tolerance

SCHEMA_VERSION = 1
PASS, FAIL, FINDING = "pass", "fail", "finding"


@dataclass(frozen=True)
class Scenario:
    name: str
    net_config: str
    region: str | None = None
    seed: int = 0
    samples: int = 32
    out_dir: str | None = None
    tol: float | None = None


@dataclass
class RunReport:
    scenario: Scenario
    results: list[dict]
    verdicts: dict[str, str]
    versions: dict[str, object]
    wall_time_ms: float
    causal_rows: list[dict] = field(default_factory=list, repr=False)

    @property
    def exit_code(self) -> int:
        return 1 if FAIL in self.verdicts.values() else 0

    def to_json(self) -> str:
        """Deterministic serialisation (wall time is kept out of it)."""
        payload = {"scenario": _scenario_dict(self.scenario), "versions": self.versions,
                   "verdicts": self.verdicts, "results": self.results}
        return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def _scenario_dict(s: Scenario) -> dict:
    return {"name": s.name, "net_config": s.net_config, "region": s.region, "seed": s.seed,
            "samples": s.samples, "tol": s.tol}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    return x


def _record(check: str, net: Net, regions, outcome: str, dims=None, residuals=None,
            samples=0, seed=0, **details) -> dict:
    rec = {"check": check, "net_fingerprint": net.fingerprint(),
           "regions": [r.label() for r in regions], "outcome": outcome,
           "dims": dims or {}, "residuals": residuals or {}, "samples": samples, "seed": seed}
    if details:
        rec["details"] = details
    return rec


# ---------------------------------------------------------------------------
# Scenarios


def _duality(net: Net, O: Region, s: Scenario, tol: Tolerance) -> list[dict]:
    rep = nosignal.essential_duality_check(net, O, tol)
    outcome = PASS if rep.holds else FINDING
    return [_record("duality", net, [O], outcome,
                    dims={"A": rep.dim_A, "A_commutant": rep.dim_A_commutant,
                          "A_Oprime": rep.dim_A_Oprime, "max_extension": rep.dim_max_extension},
                    residuals={"commutant_vs_complement": rep.residuals[0],
                               "wedge_intersection": rep.residuals[1],
                               "double_commutant": rep.residuals[2]},
                    seed=s.seed, holds=rep.holds, gap=rep.gap,
                    conditions=[rep.commutant_equals_complement, rep.wedge_intersection_property,
                                rep.double_commutant_identity])]


def _maximality(net: Net, O: Region, s: Scenario, tol: Tolerance) -> list[dict]:
    rep = nosignal.essential_duality_check(net, O, tol)
    out = []
    for name, ext in nosignal.single_generator_extensions(net, O, tol):
        w = nosignal.find_signalling_witness(net, O, ext, seed=s.seed, tol=tol)
        if w is not None:
            outcome = PASS
        else:
            # no witness is only consistent with the theorem when duality fails
            outcome = FINDING if not rep.holds else FAIL
        out.append(_record(f"maximality:{name}", net, [O], outcome,
                           dims={"A": rep.dim_A, "extension": ext.dim},
                           residuals={} if w is None else
                           {"commutator_norm": w.commutator_norm, "entropy": w.entropy_value},
                           seed=s.seed, duality_holds=rep.holds, witnessed=w is not None))
    return out


def _sharpness(net: Net, O: Region, s: Scenario, tol: Tolerance) -> list[dict]:
    rep = nosignal.sharpness_demo(net, O, s.samples, seed=s.seed, tol=tol)
    if not rep.duality_fails:
        outcome = FINDING
    else:
        outcome = PASS if rep.max_deviation <= tol.signal_tol else FAIL
    return [_record("sharpness", net, [O], outcome, dims={"gap": rep.gap},
                    residuals={"max_deviation": rep.max_deviation}, samples=len(rep.samples),
                    seed=s.seed, duality_fails=rep.duality_fails, note=rep.note)]


def _cp_nosignal(net: Net, O: Region, s: Scenario, tol: Tolerance) -> list[dict]:
    ext = nosignal.max_nosignalling_extension(net, O, tol)
    targets = [(r, net.local_algebra(r)) for r in subintervals(spacelike_complement(O))]
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for seed in rng.integers(0, 2**63, s.samples):
        n_kraus = 1 + int(seed % 3)
        ch = opalg.random_channel_in(ext, n_kraus, int(seed))
        for _, B in targets:
            worst = max(worst, nosignal.is_nonsignalling_channel(ch, B, tol)[1])
    outcome = PASS if worst <= tol.signal_tol else FAIL
    return [_record("cp_nosignal", net, [O], outcome, dims={"max_extension": ext.dim},
                    residuals={"max_deviation": worst}, samples=s.samples, seed=s.seed)]


def _site_observable(net: Net, site: int) -> np.ndarray:
    d = net.chain.site_dims[site]
    obs = _embed(net.chain, net.chain.region([site]),
                 [np.diag(np.arange(d, dtype=float))])[0]
    if net.isometry is not None:
        obs = dagger(net.isometry) @ obs @ net.isometry
    return obs


def _instrument(net: Net, O: Region, s: Scenario, tol: Tolerance) -> list[dict]:
    site = min(O.sites)
    instr = nosignal.projective_instrument(_site_observable(net, site), tol)
    own = net.region([site])
    far = spacelike_complement(O)
    out = []
    if far.sites:
        rep = nosignal.nonselective_instrument_check(instr, net.local_algebra(far), tol)
        out.append(_record("instrument:complement", net, [own, far],
                           PASS if rep.nonsignalling else FAIL,
                           residuals={"deviation": rep.deviation},
                           seed=s.seed, branch_deviations=rep.branch_deviations))
    rep = nosignal.nonselective_instrument_check(instr, net.local_algebra(own), tol)
    # dephasing of the measured site is the expected outcome; absent only on abelian sites
    out.append(_record("instrument:own_site", net, [own, own],
                       FINDING if rep.nonsignalling else PASS,
                       residuals={"deviation": rep.deviation}, seed=s.seed,
                       nonsignalling=rep.nonsignalling, branch_deviations=rep.branch_deviations))
    return out


def _witness(net: Net, O: Region, s: Scenario, tol: Tolerance) -> list[dict]:
    maxext = nosignal.max_nosignalling_extension(net, O, tol)
    menu = nosignal.single_generator_extensions(net, O, tol)
    outside = [(n, e) for n, e in menu if not opalg.space_leq(e, maxext, tol)]
    if not outside:
        return [_record("witness", net, [O], FINDING, dims={"max_extension": maxext.dim},
                        seed=s.seed, note="every menu extension is non-signalling")]
    name, ext = outside[0]
    w = nosignal.find_signalling_witness(net, O, ext, seed=s.seed, tol=tol)
    if w is None:
        return [_record("witness", net, [O], FAIL, seed=s.seed, generator=name)]
    ok = w.commutator_norm > tol.signal_tol and w.entropy_value > 0
    rho = w.state.rho
    after = w.unitary_u @ rho @ dagger(w.unitary_u)
    ent = modular.entropic_nosignalling_check(opalg.Channel((w.unitary_u,)), ext, rho, after,
                                              net.local_algebra(w.region_B), tol)
    return [_record("witness", net, [O, w.region_B], PASS if ok else FAIL,
                    dims={"extension": ext.dim, "max_extension": maxext.dim},
                    residuals={"commutator_norm": w.commutator_norm, "entropy": w.entropy_value,
                               "deviation": w.deviation,
                               "pre_post_entropy": ent.pre_post_entropy},
                    seed=s.seed, generator=name, theta=w.theta, epsilon=w.epsilon)]


def _wedge_identity(net: Net, s: Scenario, tol: Tolerance) -> list[dict]:
    chain = net.chain
    out = []
    for i in range(chain.n_sites):
        R = chain.region([i])
        inter = frozenset(chain.sites)
        for w in wedges_containing(R):
            inter &= w.sites
        out.append(_record("wedge_sites", net, [R], PASS if inter == R.sites else FAIL,
                           seed=s.seed, intersection=sorted(inter)))
    for O in all_intervals(chain):
        rep = nosignal.check_wedge_intersection_identity(net, O, tol)
        if rep.holds:
            outcome = PASS
        else:
            outcome = FAIL if net.flavor == "full" and net.sector is None else FINDING
        out.append(_record("wedge_identity", net, [O], outcome,
                           dims={"wedge_intersection": rep.dim_wedge_intersection,
                                 "complement_commutant": rep.dim_complement_commutant},
                           residuals={"residual": rep.residual}, seed=s.seed, holds=rep.holds))
    return out


def _causal(net: Net, s: Scenario, tol: Tolerance) -> tuple[list[dict], list[dict]]:
    table = nosignal.causal_reconstruction_check(net, tol)
    rows = [{"sites_A": " ".join(map(str, r.sites_A)), "sites_B": " ".join(map(str, r.sites_B)),
             "algebraic_perp": r.algebraic_perp, "geometric_disjoint": r.geometric_disjoint,
             "agree": r.agree} for r in table.rows]
    rev, fwd = table.reverse_failures, table.forward_failures
    outcome = FAIL if rev else (FINDING if fwd else PASS)
    rec = _record("causal_recon", net, [], outcome,
                  dims={"pairs": len(table.rows), "reverse_failures": len(rev),
                        "forward_failures": len(fwd)},
                  seed=s.seed, biconditional=table.biconditional,
                  forward_failure_pairs=[[list(r.sites_A), list(r.sites_B)] for r in fwd])
    return [rec], rows


def modular_cases(seed: int) -> list[tuple[str, opalg.VnAlgebra, np.ndarray]]:
    """The three reference (algebra, state) pairs of the modular suite."""
    return [("full_M2", opalg.full_algebra(2), np.diag([2 / 3, 1 / 3]).astype(complex)),
            ("full_M4", opalg.full_algebra(4), opalg.random_density(4, seed)),
            ("diagonal_M3", opalg.diagonal_algebra(3), opalg.random_density(3, seed + 1))]


def modular_residuals(A: opalg.VnAlgebra, rho: np.ndarray, n_pairs: int, seed: int,
                      tol: Tolerance) -> dict[str, float]:
    form = modular.standard_form(A, rho, tol)
    md = modular.tomita_operator(form, tol)
    tt = modular.tomita_takesaki_check(md, tol)
    rng = np.random.default_rng(seed)
    pairs = []
    for a, b in rng.integers(0, 2**63, (n_pairs, 2)):
        pairs.append((form.left_action(opalg.random_element(A, int(a), "complex")),
                      form.left_action(opalg.random_element(A, int(b), "complex"))))
    jo, do = modular.vacuum_residuals(md)
    return {"polar": modular.polar_residual(md), "conjugation": tt.conjugation,
            "flow_algebra": tt.flow_algebra, "flow_commutant": tt.flow_commutant,
            "kms": modular.kms_check(md, pairs), "J_vacuum": jo, "Delta_vacuum": do}


def _modular_suite(net: Net, s: Scenario, tol: Tolerance) -> list[dict]:
    out = []
    for name, A, rho in modular_cases(s.seed):
        res = modular_residuals(A, rho, 50, s.seed, tol)
        outcome = PASS if max(res.values()) <= tol.signal_tol else FAIL
        out.append(_record(f"modular:{name}", net, [], outcome, dims={"algebra": A.dim},
                           residuals=res, samples=50, seed=s.seed))
    return out


# block structures (n_i, m_i) used for random subalgebras in the entropy suite
ENTROPY_BLOCKS = (((2, 1),), ((1, 2),), ((2, 2),), ((1, 1), (1, 1), (1, 1)),
                  ((2, 1), (1, 2)), ((1, 3), (2, 1), (1, 1)), ((3, 1), (1, 2)),
                  ((2, 2), (1, 2)))


def random_subalgebra(seed: int) -> opalg.VnAlgebra:
    rng = np.random.default_rng(seed)
    blocks = ENTROPY_BLOCKS[int(rng.integers(len(ENTROPY_BLOCKS)))]
    d = sum(n * m for n, m in blocks)
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    U, _ = np.linalg.qr(G)
    return opalg.block_algebra(blocks, U)


def _entropy_suite(net: Net, s: Scenario, tol: Tolerance) -> list[dict]:
    rng = np.random.default_rng(s.seed)
    worst = 0.0
    for sd in rng.integers(0, 2**62, s.samples):
        A = random_subalgebra(int(sd))
        d = A.ambient_dim
        rho = opalg.random_density(d, int(sd) + 1)
        sigma = opalg.random_density(d, int(sd) + 2)
        dec = opalg.decompose(A, tol)
        ar = modular.araki_entropy(rho, sigma, A, tol)
        um = modular.umegaki_blockwise(opalg.conditional_expectation(A, rho),
                                       opalg.conditional_expectation(A, sigma), dec, tol)
        worst = max(worst, abs(ar - um))
    out = [_record("entropy:oracle", net, [], PASS if worst <= tol.signal_tol else FAIL,
                   residuals={"max_abs_difference": worst}, samples=s.samples, seed=s.seed)]

    kl = modular.araki_entropy(np.diag([2 / 3, 1 / 3]), np.eye(2) / 2, opalg.full_algebra(2), tol)
    exact = (2 / 3) * math.log(4 / 3) + (1 / 3) * math.log(2 / 3)
    out.append(_record("entropy:classical", net, [], PASS if abs(kl - exact) <= 1e-10 else FAIL,
                       residuals={"value": kl, "error": abs(kl - exact)}, seed=s.seed))

    min_slack, petz_sigma, petz_rho, equality_cases = math.inf, 0.0, 0.0, 0
    for i, sd in enumerate(rng.integers(0, 2**62, s.samples)):
        ch, rho, sigma = dpi_sample(i, int(sd))
        res = modular.dpi_check(ch, rho, sigma, opalg.full_algebra(ch.dim_in),
                                opalg.full_algebra(ch.dim_out), tol)
        min_slack = min(min_slack, res.slack)
        R = modular.petz_recovery(ch, sigma, tol)
        petz_sigma = max(petz_sigma, float(np.linalg.norm(R.schrodinger(ch.schrodinger(sigma))
                                                          - sigma)))
        if res.slack <= 1e-9:
            equality_cases += 1
            petz_rho = max(petz_rho, float(np.linalg.norm(R.schrodinger(ch.schrodinger(rho))
                                                          - rho)))
    out.append(_record("entropy:dpi", net, [], PASS if min_slack >= -tol.signal_tol else FAIL,
                       residuals={"min_slack": min_slack}, samples=s.samples, seed=s.seed))
    out.append(_record("entropy:petz", net, [],
                       PASS if petz_sigma <= 1e-6 and petz_rho <= 1e-6 else FAIL,
                       residuals={"sigma_recovery": petz_sigma, "rho_recovery": petz_rho},
                       samples=s.samples, seed=s.seed, equality_cases=equality_cases))
    return out


def dpi_sample(i: int, seed: int) -> tuple[opalg.Channel, np.ndarray, np.ndarray]:
    """The ``i``-th (channel, rho, sigma) triple of the DPI sweep.

    Every fourth sample is a unitary channel and every fourth (offset two) a
    full dephasing with diagonal states, so equality cases of the data
    processing inequality are exercised alongside generic isometric dilations.
    """
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 5))
    rho = opalg.random_density(d, seed + 1)
    sigma = opalg.random_density(d, seed + 2)
    if i % 4 == 0:
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        U, _ = np.linalg.qr(G)
        return opalg.Channel((U,)), rho, sigma
    if i % 4 == 2:
        proj = tuple(np.diag(np.eye(d)[k]).astype(complex) for k in range(d))
        return (opalg.Channel(proj), np.diag(np.diag(rho)).astype(complex),
                np.diag(np.diag(sigma)).astype(complex))
    d_out = int(rng.integers(2, 5))
    # enough Kraus operators for an isometry with a faithful output
    n_min = -(-max(d, d_out) // min(d, d_out))
    return opalg.random_channel(d, d_out, n_min + int(rng.integers(0, 3)), seed), rho, sigma


REGION_SCENARIOS: dict[str, Callable] = {
    "duality": _duality,
    "maximality": _maximality,
    "sharpness": _sharpness,
    "cp_nosignal": _cp_nosignal,
    "instrument": _instrument,
    "witness": _witness,
}
NET_SCENARIOS: dict[str, Callable] = {
    "wedge_identity": _wedge_identity,
    "causal_recon": None,  # handled separately: also yields the CSV rows
    "modular_suite": _modular_suite,
    "entropy_suite": _entropy_suite,
}

_CATALOG = (
    ("duality", "Essential duality A(O)' = A(O') and its equivalent forms"),
    ("maximality", "Rigidity theorem: under duality every strict extension signals"),
    ("sharpness", "Sharpness proposition: without duality A(O')' is a proper non-signalling extension"),
    ("cp_nosignal", "CP-operational maximality: channels with Kraus operators in A(O')' do not signal"),
    ("instrument", "Non-selective instruments: measurement signals only through its own algebra"),
    ("witness", "Corollary \"Entropic witness of signalling\""),
    ("wedge_identity", "Wedge-intersection identity and the reduction of wedges to points"),
    ("causal_recon", "Causal reconstruction: algebraic independence versus disjointness"),
    ("modular_suite", "Tomita-Takesaki theorem, modular invariance and the KMS condition"),
    ("entropy_suite", "Araki relative entropy, monotonicity and Petz recovery"),
    ("all", "Every scenario above on one net"),
)


def list_scenarios() -> list[tuple[str, str]]:
    """``(name, citation)`` for every scenario, in a fixed order."""
    return list(_CATALOG)


def _regions_for(net: Net, s: Scenario) -> list[Region]:
    if s.region is not None:
        O = parse_region(s.region, net.chain.n_sites)
        if not O.is_interval:
            raise ConfigError(f"region {s.region!r} is not an interval")
        if any(x >= net.chain.n_sites or x < 0 for x in O.sites):
            raise ConfigError(f"region {s.region!r} outside the chain")
        return [O]
    if s.name != "all":
        raise ConfigError(f"scenario {s.name!r} needs --region")
    return [O for O in all_intervals(net.chain) if spacelike_complement(O).sites]


def run(s: Scenario) -> RunReport:
    """Execute a scenario; write ``report.json`` and ``summary.txt`` if ``out_dir`` is set.

    Raises
    ------
    ConfigError
        For an unknown scenario, a missing region or a bad config.
    """
    names = [n for n, _ in _CATALOG]
    if s.name not in names:
        raise ConfigError(f"unknown scenario {s.name!r}; choose from {', '.join(names)}")
    if s.samples < 1:
        raise ConfigError("samples must be positive")
    tol = default_tolerance() if s.tol is None else Tolerance(s.tol, s.tol)
    start = time.perf_counter()
    with use_tolerance(tol):
        net = load_net_config(s.net_config, tol)
        todo = names[:-1] if s.name == "all" else [s.name]
        results: list[dict] = []
        rows: list[dict] = []
        for name in todo:
            if name in REGION_SCENARIOS:
                for O in _regions_for(net, s):
                    results.extend(REGION_SCENARIOS[name](net, O, s, tol))
            elif name == "causal_recon":
                recs, rows = _causal(net, s, tol)
                results.extend(recs)
            else:
                results.extend(NET_SCENARIOS[name](net, s, tol))
    elapsed = (time.perf_counter() - start) * 1e3
    verdicts = {}
    for rec in results:
        key = rec["check"] + ("[" + ",".join(rec["regions"]) + "]" if rec["regions"] else "")
        verdicts[key] = rec["outcome"]
    report = RunReport(scenario=s, results=results, verdicts=verdicts,
                       versions={"hknet": __version__, "schema": SCHEMA_VERSION},
                       wall_time_ms=elapsed, causal_rows=rows)
    if s.out_dir is not None:
        write_report(report, Path(s.out_dir))
    return report


def write_report(report: RunReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    counts = {v: sum(1 for x in report.verdicts.values() if x == v) for v in (PASS, FINDING, FAIL)}
    lines = [f"scenario {report.scenario.name} on {report.scenario.net_config} "
             f"(seed {report.scenario.seed})",
             f"{counts[PASS]} pass, {counts[FINDING]} finding, {counts[FAIL]} fail; "
             f"{report.wall_time_ms:.0f} ms", ""]
    lines += [f"{v:8s} {k}" for k, v in report.verdicts.items()]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    if report.causal_rows:
        with open(out / "causal_pairs.csv", "w", newline="") as fh:
            cols = ["sites_A", "sites_B", "algebraic_perp", "geometric_disjoint", "agree"]
            wr = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
            wr.writeheader()
            wr.writerows(report.causal_rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hknet", description=__doc__.splitlines()[0])
    p.add_argument("--scenario", help="scenario name (see --list)")
    p.add_argument("--net", help="net config file or bundled config name")
    p.add_argument("--region", help='interval "a..b" for region-scoped scenarios')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--out", help="output directory for report.json and summary.txt")
    p.add_argument("--tol", type=float, help="rank and equality tolerance")
    p.add_argument("--list", action="store_true", help="list scenarios and exit")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list:
        for name, cite in list_scenarios():
            print(f"{name:15s} {cite}")
        return 0
    try:
        if not args.scenario or not args.net:
            raise ConfigError("--scenario and --net are required")
        s = Scenario(args.scenario, args.net, args.region, args.seed, args.samples,
                     args.out, args.tol)
        report = run(s)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HKNetError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for k, v in report.verdicts.items():
        print(f"{v:8s} {k}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
