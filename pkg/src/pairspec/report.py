"""Sweeps, Richardson extrapolation and the end-to-end verification report."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from . import reference
from .bracketing import (
    bracketing_counts,
    build_bracket_pair,
    build_embedding,
    check_rayleigh_preservation,
    minmax_domination,
)
from .eigensolve import EigenSolveError, lowest_eigenpairs
from .femassembly import build_system
from .geometry import DomainKind, PairParameters, make_domain, normalize_sector

log = logging.getLogger(__name__)

DEFAULT_DELTA = 0.02
DEFAULT_GAP_FLOOR = 1e-3


class Extrapolation(NamedTuple):
    limit: float
    order: float | None
    error: float
    flag: str  # "ok", "indeterminate", "non-monotone"


def extrapolate(values, h=None) -> Extrapolation:
    """Richardson limit of ``lam(h) = lam* + C h^p`` from the last three values.

    ``h`` defaults to a halving sequence.  Unequal spacing ratios are allowed;
    the order is then found by root finding.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        raise ValueError("extrapolation needs at least three mesh levels")
    h = 2.0 ** -np.arange(len(v)) if h is None else np.asarray(h, dtype=float)
    (v1, v2, v3), (h1, h2, h3) = v[-3:], h[-3:]
    d1, d2 = v1 - v2, v2 - v3
    scale = max(abs(v1), abs(v2), abs(v3), 1e-300)
    if abs(d1) <= 1e-13 * scale and abs(d2) <= 1e-13 * scale:
        return Extrapolation(float(v3), None, 0.0, "indeterminate")
    if d1 * d2 <= 0 or abs(d2) >= abs(d1):
        log.warning("non-monotone refinement sequence %s; returning finest value", v[-3:])
        return Extrapolation(float(v3), None, float(abs(d2)), "non-monotone")
    r1, r2 = h1 / h2, h2 / h3
    if math.isclose(r1, r2, rel_tol=1e-12):
        p = math.log(d1 / d2) / math.log(r1)
    else:
        def mismatch(q):
            return (h1**q - h2**q) / (h2**q - h3**q) - d1 / d2
        p = brentq(mismatch, 1e-3, 30.0)
    limit = v3 - d2 * h3**p / (h2**p - h3**p)
    return Extrapolation(float(limit), float(p), float(abs(limit - v3)), "ok")


def _domain_threshold(spec) -> float:
    if spec.kind is DomainKind.ARMS:
        return reference.snapped_cross_threshold(spec.half_width)
    return reference.threshold_for(spec)


def expected_isolated(kind) -> int:
    return 0 if DomainKind(kind) is DomainKind.ARMS else 1


def solve_domain(kind, sector="full", d=1.0, L=None, h=None, k=6, tol=1e-8, seed=0,
                 delta=DEFAULT_DELTA, scale=1.0, system=None) -> tuple:
    """Solve one domain; returns ``(record, system, spectral_result)``.

    ``record`` follows the canonical JSON report layout.
    """
    L = 8 * d if L is None else L
    h = d / 32 if h is None else h
    spec = make_domain(kind, PairParameters(d, L, h), scale, sector=sector)
    if system is None:
        system = build_system(spec)
    thr = _domain_threshold(spec)
    res = lowest_eigenpairs(system.stiffness, system.mass, k, tol, seed=seed, sigma=-0.1 * thr)
    iso = res.add_count(system.stiffness, system.mass, (1 - delta) * thr)
    lam = res.eigenvalues
    ok = iso == expected_isolated(kind) and lam[iso] >= (1 - delta) * thr
    record = {
        "domain": spec.kind.value,
        "sector": spec.sector,
        "d": d,
        "L": L,
        "h": h,
        "snapped_width": spec.half_width,
        "eigenvalues": [float(x) for x in lam],
        "residuals": [float(x) for x in res.residuals],
        "threshold": thr,
        "isolated_count": iso,
        "pass": bool(ok),
    }
    return record, system, res


# -- sweeps ------------------------------------------------------------------

@dataclass
class SweepPlan:
    domain: str = "pair"
    sector: str = "symmetric"
    d: float = 1.0
    h: list = field(default_factory=lambda: [1 / 8, 1 / 16, 1 / 32])
    L: list = field(default_factory=lambda: [4.0, 8.0])
    k: int = 4
    tol: float = 1e-8
    seed: int = 0
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        self.sector = normalize_sector(self.sector)
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if not self.h or not self.L:
            raise ValueError("empty h or L list")
        for a, b in zip(self.h, self.h[1:]):
            if not math.isclose(b, a / 2, rel_tol=1e-12):
                raise ValueError("h list must be nested (each value half the previous)")
        if any(b <= a for a, b in zip(self.L, self.L[1:])):
            raise ValueError("L list must be increasing")

    @classmethod
    def from_json(cls, path) -> "SweepPlan":
        with open(path) as fh:
            return cls(**json.load(fh))


def run_sweep(plan: SweepPlan) -> dict:
    """Solve every (h, L) cell; failed cells are marked and skipped."""
    cells = []
    for L in plan.L:
        for h in plan.h:
            row = {"h": h, "L": L, "status": "ok"}
            try:
                rec, _, _ = solve_domain(plan.domain, plan.sector, plan.d, L, h, plan.k,
                                         plan.tol, plan.seed, plan.delta)
                row.update(eigenvalues=rec["eigenvalues"], residuals=rec["residuals"],
                           isolated_count=rec["isolated_count"], threshold=rec["threshold"])
            except EigenSolveError as exc:
                row.update(status="failed", error=str(exc))
            cells.append(row)

    lookup = {(c["h"], c["L"]): c for c in cells}
    for c in cells:
        if c["status"] != "ok":
            continue
        i, j = plan.h.index(c["h"]), plan.L.index(c["L"])
        coarser = lookup.get((plan.h[i - 1], c["L"])) if i else None
        shorter = lookup.get((c["h"], plan.L[j - 1])) if j else None
        c["dlam1_h"] = (c["eigenvalues"][0] - coarser["eigenvalues"][0]
                        if coarser and coarser["status"] == "ok" else None)
        c["dlam1_L"] = (c["eigenvalues"][0] - shorter["eigenvalues"][0]
                        if shorter and shorter["status"] == "ok" else None)

    extrapolations = {}
    if len(plan.h) >= 3:
        for L in plan.L:
            col = [lookup[(h, L)] for h in plan.h]
            if all(c["status"] == "ok" for c in col):
                ex = extrapolate([c["eigenvalues"][0] for c in col], plan.h)
                extrapolations[str(L)] = ex._asdict()
    return {"plan": asdict(plan), "cells": cells, "extrapolated_lambda1": extrapolations}


def sweep_csv(table: dict) -> str:
    k = max((len(c.get("eigenvalues", [])) for c in table["cells"]), default=0)
    head = ["h", "L", "status", "isolated_count", "dlam1_h", "dlam1_L"] + [f"lambda{i + 1}" for i in range(k)]
    lines = [",".join(head)]
    for c in table["cells"]:
        vals = [c["h"], c["L"], c["status"], c.get("isolated_count"), c.get("dlam1_h"), c.get("dlam1_L")]
        vals += list(c.get("eigenvalues", [])) + [None] * (k - len(c.get("eigenvalues", [])))
        lines.append(",".join("" if v is None else repr(v) if isinstance(v, float) else str(v) for v in vals))
    return "\n".join(lines) + "\n"


# -- theorem verification ----------------------------------------------------

@dataclass
class VerifyConfig:
    h: float | None = None
    L: float | None = None
    delta: float = DEFAULT_DELTA
    gap_floor: float = DEFAULT_GAP_FLOOR
    k: int = 6
    tol: float = 1e-8
    seed: int = 0
    n_compare: int = 5
    bracket_points: int = 20
    random_vectors: int = 5
    extrapolation_levels: int = 3


@dataclass
class VerificationReport:
    d: float
    config: dict
    provenance: dict
    sectors: dict
    comparisons: dict
    bracketing: dict
    embeddings: dict
    domination: dict
    observations: dict
    checks: dict
    passed: bool
    warnings: list
    timestamp: float = 0.0

    def failing(self) -> list:
        return [name for name, ok in self.checks.items() if not ok]

    def canonical(self) -> dict:
        out = asdict(self)
        out.pop("timestamp")
        out["pass"] = out.pop("passed")
        return out

    def canonical_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=False, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self, indent=2) -> str:
        out = self.canonical()
        out["canonical_hash"] = self.canonical_hash()
        out["timestamp"] = self.timestamp
        return json.dumps(out, indent=indent)


def _sector_entry(rec, res, thr, delta, gap_floor, extrap):
    lam = res.eigenvalues
    iso = rec["isolated_count"]
    return {
        "isolated_count": iso,
        "eigenvalues": rec["eigenvalues"],
        "residuals": rec["residuals"],
        "threshold": thr,
        "lambda1_extrapolated": extrap.limit if extrap else None,
        "lambda1_error_estimate": extrap.error if extrap else None,
        "extrapolation_order": extrap.order if extrap else None,
        "lambda2_minus_threshold": float(lam[1] - thr),
        "lambda2_over_threshold": float(lam[1] / thr),
        "gap": float(lam[1] - lam[0]),
        "pass": bool(iso == 1 and lam[1] >= (1 - delta) * thr and lam[1] - lam[0] >= gap_floor * thr),
    }


def _extrapolate_lambda1(sector, d, L, h, cfg):
    hs = [h * 2**j for j in range(cfg.extrapolation_levels - 1, -1, -1)]
    if any(abs(d / x - round(d / x)) > 1e-9 or round(d / x) < 1 for x in hs):
        return None
    if normalize_sector(sector) != "full" and round(d / hs[0]) < 2:
        return None
    vals = []
    for x in hs:
        spec = make_domain(DomainKind.PAIR, PairParameters(d, L, x), sector=sector)
        sysm = build_system(spec)
        thr = reference.threshold_for(spec)
        vals.append(lowest_eigenpairs(sysm.stiffness, sysm.mass, 1, cfg.tol, seed=cfg.seed,
                                      sigma=-0.1 * thr).eigenvalues[0])
    return extrapolate(vals, hs)


def verify_theorem(d: float = 1.0, config: VerifyConfig | None = None) -> VerificationReport:
    """Run every sector, comparison and bracketing check at one ``(d, L, h)``."""
    cfg = config or VerifyConfig()
    L = 8 * d if cfg.L is None else cfg.L
    h = d / 32 if cfg.h is None else cfg.h
    params = PairParameters(d, L, h)
    delta, floor = cfg.delta, cfg.gap_floor
    rng = np.random.default_rng(cfg.seed)
    checks, notes = {}, []
    if params.coarse:
        notes.append("coarse mesh: d/h = 1")

    sectors, systems, results = {}, {}, {}
    for sector in ("full", "symmetric", "antisymmetric"):
        rec, sysm, res = solve_domain("pair", sector, d, L, h, cfg.k, cfg.tol, cfg.seed, delta)
        systems[sector], results[sector] = sysm, res
        extrap = _extrapolate_lambda1(sector, d, L, h, cfg)
        sectors[sector] = _sector_entry(rec, res, rec["threshold"], delta, floor, extrap)
        checks[f"sector[{sector}]: one simple eigenvalue below threshold"] = sectors[sector]["pass"]

    comparisons = {}
    cross_sys = {}
    for label, scale in (("cross_diag_d", 1.0), ("cross_diag_d/2", 0.5)):
        rec, sysm, res = solve_domain("cross-diag", "full", d, L, h, cfg.k, cfg.tol, cfg.seed, delta, scale)
        cross_sys[label] = (sysm, res)
        entry = _sector_entry(rec, res, rec["threshold"], delta, floor, None)
        comparisons[label] = entry
        checks[f"{label}: one simple eigenvalue below threshold"] = entry["pass"]
    rec, axis_sys, axis_res = solve_domain("cross-axis", "full", d, L, h, cfg.k, cfg.tol, cfg.seed, delta)
    entry = _sector_entry(rec, axis_res, rec["threshold"], delta, floor, None)
    entry["snapped_width"] = rec["snapped_width"]
    comparisons["cross_axis"] = entry
    checks["cross_axis: one simple eigenvalue below snapped threshold"] = entry["pass"]

    # Neumann decoupling of the axis cross
    square, arms = build_bracket_pair(d, L, h)
    thr_axis = rec["threshold"]
    grid = thr_axis * np.arange(1, cfg.bracket_points + 1) / (cfg.bracket_points + 1)
    rows = bracketing_counts(axis_sys, square, arms, grid)
    bracketing = {
        "threshold": thr_axis,
        "rows": rows,
        "inequality_holds": all(r["holds"] for r in rows),
        "arms_empty": all(r["arms"] == 0 for r in rows),
    }
    checks["bracketing: N(cross) <= N(square) + N(arms)"] = bracketing["inequality_holds"]
    checks["bracketing: arms have no eigenvalue below threshold"] = bracketing["arms_empty"]

    # embeddings and min-max ordering
    embeddings, domination = {}, {}
    for sector in ("full", "symmetric", "antisymmetric"):
        label = "cross_diag_d/2" if sector == "antisymmetric" else "cross_diag_d"
        tsys, tres = cross_sys[label]
        emap = build_embedding(sector, d, L, h, source=systems[sector], target=tsys)
        worst = 0.0
        vectors = [results[sector].eigenvectors[:, 0]]
        vectors += [rng.standard_normal(emap.source.dim) for _ in range(cfg.random_vectors)]
        for u in vectors:
            qs, qt = check_rayleigh_preservation(emap, u)
            worst = max(worst, abs(qs - qt) / abs(qs))
        embeddings[sector] = {"target": label, "copies": len(emap.copies), "max_relative_mismatch": worst}
        checks[f"embedding[{sector}]: Rayleigh quotient preserved"] = worst <= 1e-9

        n = min(cfg.n_compare, cfg.k)
        pv = results[sector].eigenvalues[:n]
        cv = tres.eigenvalues[:n]
        slack = 1e-6 + float(max(results[sector].residuals.max(), tres.residuals.max()))
        ok = minmax_domination(pv, cv, slack)
        domination[sector] = {"target": label, "pair": [float(x) for x in pv],
                              "cross": [float(x) for x in cv], "holds": ok}
        checks[f"min-max[{sector}]: lambda_n(pair) >= lambda_n(cross)"] = all(ok)

    lf = results["full"].eigenvalues[0]
    ls, la = results["symmetric"].eigenvalues[0], results["antisymmetric"].eigenvalues[0]
    observations = {
        "full_ground_state_equals_sector_minimum": bool(abs(lf - min(ls, la)) <= 1e-8 * lf),
        "ground_state_sector": "symmetric" if ls <= la else "antisymmetric",
    }
    if not observations["full_ground_state_equals_sector_minimum"] or ls > la:
        notes.append("full ground state is not the symmetric-sector ground state")

    provenance = {"h": h, "L": L, "seed": cfg.seed, "delta": delta, "gap_floor": floor,
                  "snapped_width": comparisons["cross_axis"]["snapped_width"],
                  "ideal_half_width": d / math.sqrt(2)}
    return VerificationReport(
        d=d, config=asdict(cfg), provenance=provenance, sectors=sectors,
        comparisons=comparisons, bracketing=bracketing, embeddings=embeddings,
        domination=domination, observations=observations, checks=checks,
        passed=all(checks.values()), warnings=notes, timestamp=time.time(),
    )


__all__ = [
    "Extrapolation", "SweepPlan", "VerificationReport", "VerifyConfig",
    "extrapolate", "run_sweep", "solve_domain", "sweep_csv", "verify_theorem",
]
