"""Suite orchestration: registered checks, records and the aggregated report.

Every check takes a validated :class:`RunConfig` and returns its parameters
plus a list of result items, each a flat dict carrying a ``pass`` flag. A
record passes when the check raised nothing and every item passes; the
suite passes when every record does.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .boardgame import (
    CollapseMap,
    applicable_moves,
    count_collapse_maps,
    enumerate_collapse_maps,
    move_graph_echelon_forms,
    partition_classes,
)
from .config import RunConfig
from .kernels import OneParticleKernelExpr, assemble_jk, direct_expansion, theta_expand
from .ledger import final_bound, ledger_for
from .logutil import get_logger
from .numerics.definetti import (
    DiscreteMeasure,
    admissibility_residual,
    chebyshev_support,
    h_trace,
    hermiticity_residual,
    min_gram_eigenvalue,
    mixture_hierarchy,
    symmetry_residual,
)
from .numerics.grid import (
    Grid,
    GridField,
    gaussian_bump,
    mass,
    nls_energy,
    nls_flow,
    nls_order_study,
    plane_wave,
    plane_wave_solution,
    random_field,
)
from .numerics.lowrank import LowRankKernel, trace_norm
from .numerics.verify import (
    ResidualReport,
    strichartz_ratio,
    strichartz_ratio_probe,
    trace_norm_oracle,
    verify_duhamel_expansion,
    verify_factorization,
    verify_full_sum,
    verify_move_invariance,
    verify_resummation,
)
from .trees import TreeForest, build_forest, extract_labeling, subtree_stats

Item = Dict[str, Any]
CheckOutcome = Tuple[Dict[str, Any], List[Item]]
CheckFn = Callable[[RunConfig], CheckOutcome]

GOLDEN_FILES = ("forest_k3.json", "kappa_relations.json", "theta_counts.json")


@dataclass
class CheckRecord:
    check: str
    params: Dict[str, Any] = field(default_factory=dict)
    residuals: List[Item] = field(default_factory=list)
    runtime_ms: float = 0.0
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(bool(item.get("pass")) for item in self.residuals)

    def failed_items(self) -> List[Item]:
        return [item for item in self.residuals if not item.get("pass")]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "params": self.params,
            "residuals": self.residuals,
            "pass": self.passed,
            "runtime_ms": self.runtime_ms,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CheckRecord":
        return cls(
            check=data["check"],
            params=dict(data.get("params", {})),
            residuals=[dict(item) for item in data.get("residuals", [])],
            runtime_ms=float(data.get("runtime_ms", 0.0)),
            error=data.get("error"),
        )


@dataclass
class Report:
    records: List[CheckRecord] = field(default_factory=list)
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def summary(self) -> Dict[str, Any]:
        failed = [r.check for r in self.records if not r.passed]
        return {
            "checks": len(self.records),
            "passed": len(self.records) - len(failed),
            "failed": failed,
            "runtime_ms": sum(r.runtime_ms for r in self.records),
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool": "gpboard",
            "version": self.version,
            "records": [r.to_dict() for r in self.records],
            "summary": self.summary(),
            "pass": self.passed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Report":
        return cls(
            [CheckRecord.from_dict(r) for r in data.get("records", [])],
            version=str(data.get("version", __version__)),
        )


def _item(name: str, value: float, limit: float, **extra: Any) -> Item:
    """Item passing when ``value < limit``."""
    return {
        "item": name,
        **extra,
        "value": float(value),
        "limit": float(limit),
        "pass": bool(value < limit),
    }


def _equal(name: str, value: Any, expected: Any, **extra: Any) -> Item:
    return {"item": name, **extra, "value": value, "expected": expected, "pass": value == expected}


def _residual_item(name: str, report: ResidualReport) -> Item:
    return {"item": name, **report.to_dict()}


# -- golden examples ---------------------------------------------------------


def load_golden(name: str) -> Dict[str, Any]:
    text = resources.files("gpboard").joinpath("golden", name).read_text(encoding="utf-8")
    data: Dict[str, Any] = json.loads(text)
    return data


def forest_summary(m: CollapseMap) -> Dict[str, Any]:
    """Per-tree shape of a forest in the layout of the golden forest file."""
    forest: TreeForest = build_forest(m)
    trees: List[Dict[str, Any]] = []
    for j in range(1, m.k + 1):
        if forest.is_bare_edge(j):
            trees.append({"j": j, "bare": True})
            continue
        lab = extract_labeling(forest, j)
        trees.append(
            {
                "j": j,
                "bare": False,
                "m": lab.m,
                "sigma": list(lab.sigma),
                "columns": list(lab.time_binding),
                "distinguished": lab.distinguished,
            }
        )
    return {
        "k": m.k,
        "rho": list(m.rho),
        "distinguished_tree": forest.distinguished_tree,
        "trees": trees,
    }


def kappa_value(m: CollapseMap, tree: int, which: str, power: int, alpha: int) -> int:
    """Apply ``kappa_minus`` or ``kappa_plus`` ``power`` times starting at ``alpha``."""
    lab = extract_labeling(build_forest(m), tree)
    step = lab.kappa_minus_of if which == "kappa_minus" else lab.kappa_plus_of
    node = alpha
    for _ in range(power):
        node = step(node)
    return node


def theta_counts(m: CollapseMap, tree: int = 1) -> Dict[str, int]:
    lab = extract_labeling(build_forest(m), tree)
    return {str(a): len(expr) for a, expr in sorted(theta_expand(lab).items())}


def check_golden(cfg: RunConfig) -> CheckOutcome:
    items: List[Item] = []
    forest = load_golden("forest_k3.json")
    m = CollapseMap(forest["k"], tuple(forest["rho"]))
    items.append(_equal("forest", forest_summary(m), forest))
    kappa = load_golden("kappa_relations.json")
    m = CollapseMap(kappa["k"], tuple(kappa["rho"]))
    for rel in kappa["relations"]:
        got = kappa_value(m, kappa["tree"], rel["map"], rel["power"], rel["alpha"])
        label = f"{rel['map']}^{rel['power']}({rel['alpha']})"
        items.append(_equal(label, got, rel["value"], rho=kappa["rho"]))
    counts = load_golden("theta_counts.json")
    m = CollapseMap(counts["k"], tuple(counts["rho"]))
    items.append(_equal("theta-counts", theta_counts(m, counts["tree"]), counts["counts"]))
    return {"files": list(GOLDEN_FILES)}, items


# -- combinatorics -----------------------------------------------------------


def check_enumerate(cfg: RunConfig) -> CheckOutcome:
    items: List[Item] = []
    for k in range(1, cfg.k_max + 1):
        for r in range(1, cfg.r_max + 1):
            classes = partition_classes(k, r, cfg.enumeration_cap)
            maps = sum(len(c) for c in classes.values())
            expected = math.prod(k + col - 1 for col in range(1, r + 1))
            oracle = move_graph_echelon_forms(k, r, cfg.enumeration_cap)
            mismatched = sum(
                1
                for cls in classes.values()
                for member in cls.members
                if oracle[member.source] != (cls.form.rho,)
            )
            items.append(
                {
                    "item": "classes",
                    "k": k,
                    "r": r,
                    "maps": maps,
                    "expected_maps": expected,
                    "classes": len(classes),
                    "class_bound": 2 ** (k + r),
                    "oracle_mismatches": mismatched,
                    "pass": maps == expected == count_collapse_maps(k, r)
                    and len(classes) <= 2 ** (k + r)
                    and mismatched == 0,
                }
            )
    small = partition_classes(1, 3)
    items.append(
        _equal("k=1,r=3", [len(small), sum(len(c) for c in small.values())], [5, 6])
    )
    return {"k_max": cfg.k_max, "r_max": cfg.r_max}, items


def _random_map(rng: np.random.Generator, k_max: int, r_max: int) -> CollapseMap:
    k = int(rng.integers(1, k_max + 1))
    r = int(rng.integers(1, r_max + 1))
    return CollapseMap(k, tuple(int(rng.integers(1, k + col)) for col in range(1, r + 1)))


def theta_law_violations(m: CollapseMap) -> List[str]:
    """Term-count, bound and distinguished-factor violations over every tree of ``m``."""
    forest = build_forest(m)
    problems: List[str] = []
    for j in range(1, m.k + 1):
        if forest.is_bare_edge(j):
            continue
        lab = extract_labeling(forest, j)
        thetas = theta_expand(lab)

        def size(label: int) -> int:
            return 1 if lab.is_leaf(label) else len(thetas[label])

        for alpha in range(1, lab.m + 1):
            expr: OneParticleKernelExpr = thetas[alpha]
            d, _ = subtree_stats(lab, alpha)
            if lab.distinguished and alpha == lab.m:
                law = 2
            else:
                law = 2 * size(lab.kept[alpha - 1]) * size(lab.contracted[alpha - 1])
            if len(expr) != law or len(expr) != 2**d:
                problems.append(f"rho={list(m.rho)} tree {j}: |Theta_{alpha}|={len(expr)}")
            if len(expr) > 2 ** (lab.m - alpha + 1):
                problems.append(f"rho={list(m.rho)} tree {j}: bound fails at {alpha}")
            below = lab.distinguished and _in_subtree(lab.kept, lab.contracted, alpha, lab.m)
            if set(expr.distinguished_counts()) != {int(below)}:
                problems.append(f"rho={list(m.rho)} tree {j}: distinguished factors at {alpha}")
    return problems


def _in_subtree(kept: Sequence[int], contracted: Sequence[int], alpha: int, target: int) -> bool:
    m = len(kept)
    stack = [alpha]
    while stack:
        node = stack.pop()
        if node == target:
            return True
        if node <= m:
            stack.extend((kept[node - 1], contracted[node - 1]))
    return False


def check_theta(cfg: RunConfig) -> CheckOutcome:
    items: List[Item] = []
    worked = CollapseMap(1, (1, 2, 3))
    items.append(_equal("worked-example", theta_counts(worked), {"1": 8, "2": 4, "3": 2}))
    rng = np.random.default_rng(cfg.seed)
    problems: List[str] = []
    for _ in range(cfg.theta_samples):
        problems.extend(theta_law_violations(_random_map(rng, 3, cfg.theta_r_max)))
    items.append(_equal("term-count-law", len(problems), 0, samples=cfg.theta_samples))
    if problems:
        get_logger().warning("theta: %s", "; ".join(problems[:5]))
    unequal = [
        list(m.rho)
        for k in range(1, 3)
        for r in range(1, 4)
        for m in enumerate_collapse_maps(k, r)
        if assemble_jk(m).substituted() != direct_expansion(m)
    ]
    items.append(_equal("tree-vs-direct", unequal, []))
    return {"samples": cfg.theta_samples, "r_max": cfg.theta_r_max, "seed": cfg.seed}, items


def check_ledger(cfg: RunConfig) -> CheckOutcome:
    T, M, C = cfg.horizon_T(), cfg.ledger_M, cfg.ledger_C
    items: List[Item] = []
    for k in range(1, cfg.ledger_k_max + 1):
        values = [final_bound(k, r, T, M, C) for r in range(0, cfg.ledger_r_max + 1)]
        decreasing = all(b < a for a, b in zip(values, values[1:]))
        items.append({"item": "final-bound", "k": k, "values": values, "pass": decreasing})
    worked = ledger_for(CollapseMap(1, (1, 2, 3))).closing_integral()
    items.append(_equal("worked-example", worked.shape(), "8 C^3 T^2 M^8"))
    wrong = [
        list(m.rho)
        for k in range(1, 3)
        for r in range(1, 5)
        for m in enumerate_collapse_maps(k, r)
        if ledger_for(m).phi_exp != 2 * (k + r)
    ]
    items.append(_equal("phi-exponent", wrong, []))
    return {"T": T, "M": M, "C": C, "k_max": cfg.ledger_k_max, "r_max": cfg.ledger_r_max}, items


# -- numerics ----------------------------------------------------------------


def check_trace(cfg: RunConfig) -> CheckOutcome:
    grid = Grid(1, cfg.trace_n)
    worst, count = trace_norm_oracle(grid, cfg.trace_samples, cfg.seed)
    items = [_item("dense-oracle", worst, cfg.tolerances.exact, samples=count)]
    chi = plane_wave(grid, 1).scaled(1 / plane_wave(grid, 1).l2_norm())
    psi = plane_wave(grid, 2).scaled(1 / plane_wave(grid, 2).l2_norm())
    skew = LowRankKernel.from_terms(grid, [(1.0, chi, psi), (-1.0, psi, chi)])
    items.append(_item("orthogonal-pair", abs(trace_norm(skew) - 2.0), cfg.tolerances.exact))
    return {"n": cfg.trace_n, "samples": cfg.trace_samples, "seed": cfg.seed}, items


def _unit_atoms(grid: Grid, rng: np.random.Generator, count: int) -> DiscreteMeasure:
    weights = rng.dirichlet(np.ones(count))
    return DiscreteMeasure(tuple((float(w), random_field(grid, rng)) for w in weights))


def check_definetti(cfg: RunConfig) -> CheckOutcome:
    grid = cfg.grid.build()
    tol = cfg.tolerances
    rng = np.random.default_rng(cfg.seed)
    mu = _unit_atoms(grid, rng, 3)
    items: List[Item] = []
    for k in (1, 2, 3):
        res, norm = admissibility_residual(mu, k)
        items.append(_item("admissibility", res / norm, tol.admissibility, k=k))
        items.append(_item("gram-min-eigenvalue", -min_gram_eigenvalue(mu, k), 1e-12, k=k))
    for k in (2, 3):
        gamma = mixture_hierarchy(mu, k)
        ref = gamma.hs_norm()
        items.append(_item("hermiticity", hermiticity_residual(gamma) / ref, tol.exact, k=k))
        items.append(_item("symmetry", symmetry_residual(gamma) / ref, tol.exact, k=k))
    inner = DiscreteMeasure(((1.0, random_field(grid, rng, norm=0.8)),))
    for k in (1, 2, 3):
        trace = mixture_hierarchy(inner, k).trace().real
        items.append(_item("unit-ball-trace", abs(trace - 0.8 ** (2 * k)), tol.exact, k=k))
    f1, f2 = random_field(grid, rng), random_field(grid, rng)
    two = DiscreteMeasure(((0.5, f1.scaled(1 / f1.h1_norm())), (0.5, f2.scaled(2 / f2.h1_norm()))))
    cheb = chebyshev_support(two, cfg.chebyshev_order)
    K = cfg.chebyshev_order
    exact_root = (0.5 * (1 + 4.0**K)) ** (1 / (2 * K))
    items.append(
        {
            "item": "chebyshev",
            "order": K,
            "bound": cheb.bound,
            "last_root": cheb.roots[-1],
            "pass": cheb.monotone
            and cheb.within_bound
            and abs(cheb.bound - 2.0) < 1e-12
            and abs(cheb.roots[-1] - exact_root) < 1e-9,
        }
    )
    for k in (1, 2):
        gap = abs(h_trace(two, k) - cheb.moments[k - 1]) / cheb.moments[k - 1]
        items.append(_item("h-trace", gap, 1e-10, k=k))
    return {"atoms": 3, "grid": [grid.d, grid.n], "seed": cfg.seed}, items


def check_nls(cfg: RunConfig) -> CheckOutcome:
    grid = Grid(1, cfg.grid.n)
    tol = cfg.tolerances
    amplitude, t, dt = 0.3, 0.1, cfg.nls_dt
    items: List[Item] = []
    evolved = nls_flow(plane_wave(grid, 1, amplitude), cfg.lam, t, dt)
    exact = plane_wave_solution(grid, 1, amplitude, cfg.lam, t)
    err = float(np.max(np.abs(evolved.values - exact.values)))
    items.append(_item("plane-wave", err, tol.plane_wave, t=t, dt=dt))
    f0 = random_field(grid, cfg.seed, max_mode=4)
    f1 = nls_flow(f0, cfg.lam, 1000 * dt, dt)
    items.append(_item("mass-drift", abs(mass(f1) - mass(f0)) / mass(f0), 1e-10, steps=1000))
    e0 = nls_energy(f0, cfg.lam)
    drift = abs(nls_energy(f1, cfg.lam) - e0) / abs(e0)
    items.append(_item("energy-drift", drift, 1e-6, steps=1000))
    study = nls_order_study(grid, cfg.lam)
    items.append(
        {
            "item": "order",
            "dts": list(study.dts),
            "errors": list(study.errors),
            "value": study.order,
            "pass": 1.8 <= study.order <= 2.2,
        }
    )
    return {"lam": cfg.lam, "n": grid.n, "dt": dt}, items


def _phi0(cfg: RunConfig, grid: Grid) -> GridField:
    return random_field(grid, cfg.seed)


def check_factorize(cfg: RunConfig) -> CheckOutcome:
    grid = cfg.grid.build()
    phi0 = _phi0(cfg, grid)
    rng = np.random.default_rng(cfg.seed)
    items: List[Item] = []
    for k in range(1, cfg.factorize_k_max + 1):
        for r in range(1, cfg.factorize_r_max + 1):
            for m in enumerate_collapse_maps(k, r):
                times = [cfg.t] + sorted(rng.uniform(0.0, cfg.t, r), reverse=True)
                rep = verify_factorization(m, grid, phi0, times, cfg.tolerances.exact)
                items.append(_residual_item("factorize", rep))
    params = {"k_max": cfg.factorize_k_max, "r_max": cfg.factorize_r_max, "seed": cfg.seed}
    return params, items


def check_moves(cfg: RunConfig) -> CheckOutcome:
    grid = cfg.grid.build()
    phi0 = _phi0(cfg, grid)
    tol = cfg.tolerances.quadrature
    items: List[Item] = []
    for k, r in cfg.move_cases:
        for m in enumerate_collapse_maps(k, r):
            for col in applicable_moves(m):
                rep = verify_move_invariance(
                    m, col, grid, phi0, cfg.t, cfg.quad_order, tol, cfg.chunk
                )
                items.append(_residual_item("move", rep))
    # residuals stay below tolerance under q -> q+4
    sample = CollapseMap(1, (1, 2, 1))
    for q in (cfg.quad_order, cfg.quad_order + 4):
        rep = verify_move_invariance(sample, 2, grid, phi0, cfg.t, q, tol, cfg.chunk)
        items.append(_residual_item("refine", rep))
    return {"cases": cfg.move_cases, "t": cfg.t, "q": cfg.quad_order, "seed": cfg.seed}, items


def check_resum(cfg: RunConfig) -> CheckOutcome:
    grid = cfg.grid.build()
    phi0 = _phi0(cfg, grid)
    tol = cfg.tolerances.quadrature
    items: List[Item] = []
    for k, r in cfg.resum_cases:
        for cls in partition_classes(k, r, cfg.enumeration_cap).values():
            rep = verify_resummation(cls, grid, phi0, cfg.t, cfg.quad_order, tol, cfg.chunk)
            items.append(_residual_item("class", rep))
        rep = verify_full_sum(k, r, grid, phi0, cfg.t, cfg.quad_order, tol, cfg.chunk)
        items.append(_residual_item("full-sum", rep))
    return {"cases": cfg.resum_cases, "t": cfg.t, "q": cfg.quad_order, "seed": cfg.seed}, items


def check_mild(cfg: RunConfig) -> CheckOutcome:
    grid = Grid(1, cfg.grid.n, cfg.grid.length)
    tol = cfg.tolerances
    t, dt, lam = cfg.mild_t, cfg.nls_dt, cfg.lam
    items: List[Item] = []
    wave = DiscreteMeasure(((1.0, plane_wave(grid, 1, 0.3)),))
    rep = verify_duhamel_expansion(wave, 1, 1, lam, t, dt, tol=tol.quadrature, chunk=cfg.chunk)
    items.append(_residual_item("plane-wave", rep))
    rng = np.random.default_rng(cfg.seed)
    pair = DiscreteMeasure(
        tuple((0.5, random_field(grid, rng, norm=0.9, max_mode=4)) for _ in range(2))
    )
    rep = verify_duhamel_expansion(pair, 2, 1, lam, t, dt, tol=tol.mild, chunk=cfg.chunk)
    items.append(_residual_item("mixture", rep))
    rep = verify_duhamel_expansion(pair, 1, 2, lam, t, dt, tol=tol.mild, chunk=cfg.chunk)
    items.append(_residual_item("second-order", rep))
    return {"lam": lam, "t": t, "dt": dt, "seed": cfg.seed}, items


def check_strichartz(cfg: RunConfig) -> CheckOutcome:
    window = 1.0
    items: List[Item] = []
    stats = []
    for n in (cfg.grid.n, 2 * cfg.grid.n):
        grid = Grid(1, n, cfg.grid.length)
        bump = gaussian_bump(grid)
        waves = [plane_wave(grid, mode, 0.2) for mode in (1, 2, 3)]
        triples = [(bump, bump, bump), (waves[0], waves[1], waves[2])]
        stats.append(strichartz_ratio_probe(triples, window))
    coarse, fine = stats
    items.append(
        {
            "item": "refinement",
            "max_ratio": [coarse.max_ratio, fine.max_ratio],
            "value": fine.max_ratio / coarse.max_ratio,
            "limit": 2.0,
            "pass": bool(math.isfinite(fine.max_ratio) and fine.max_ratio < 2 * coarse.max_ratio),
        }
    )
    zero = GridField(Grid(1, cfg.grid.n), np.zeros(cfg.grid.n))
    items.append(_equal("zero-field", strichartz_ratio(zero, zero, zero, window), 0.0))
    return {"n": [cfg.grid.n, 2 * cfg.grid.n], "window": window}, items


CHECKS: Dict[str, CheckFn] = {
    "enumerate": check_enumerate,
    "golden": check_golden,
    "theta": check_theta,
    "ledger": check_ledger,
    "trace": check_trace,
    "definetti": check_definetti,
    "nls": check_nls,
    "factorize": check_factorize,
    "moves": check_moves,
    "resum": check_resum,
    "mild": check_mild,
    "strichartz": check_strichartz,
}


def run_check(name: str, cfg: RunConfig) -> CheckRecord:
    log = get_logger()
    start = time.perf_counter()
    try:
        params, items = CHECKS[name](cfg)
        record = CheckRecord(name, params, items)
    except Exception as exc:  # recorded, the suite goes on
        log.warning("check %s raised %s: %s", name, type(exc).__name__, exc)
        record = CheckRecord(name, error=f"{type(exc).__name__}: {exc}")
    record.runtime_ms = round((time.perf_counter() - start) * 1000.0, 3)
    if record.error is None and not record.passed:
        log.warning("check %s: %d item(s) failed", name, len(record.failed_items()))
    log.info("check %s finished in %.0f ms", name, record.runtime_ms)
    return record


def run_suite(cfg: RunConfig) -> Report:
    cfg.validate()
    names = list(cfg.checks)
    if cfg.workers > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(lambda n: run_check(n, cfg), names))
    else:
        records = [run_check(n, cfg) for n in names]
    return Report(records)


__all__ = [
    "CHECKS",
    "GOLDEN_FILES",
    "CheckRecord",
    "Report",
    "load_golden",
    "forest_summary",
    "kappa_value",
    "theta_counts",
    "theta_law_violations",
    "run_check",
    "run_suite",
]
