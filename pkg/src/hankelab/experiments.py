"""Named experiments: each takes an :class:`ExperimentConfig` and returns a RunRecord."""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .bergman import basis_values, extend_basis, orthonormal_basis, project
from .config import ExperimentConfig
from .dbar import (CauchyOperator, WeightedDbarProblem, dbar_matrix, extension_operator,
                   hormander_solve)
from .diagnostics import (Thresholds, TruncationFamily, certificate, essential_norm_proxy,
                          format_cap, verdict, write_spectra_csv, write_trend_csv)
from .domains import Annulus, Bidisc, Lens, UnitDisc, build_quadrature, flood_fill_connected
from .errors import ConfigError, GeometryError
from .hankel import default_extra, restrict_symbol, truncated_hankel
from .symbols import from_expression


@dataclass
class RunRecord:
    experiment: str
    config: dict
    payload: dict
    version: str = __version__
    started: str = ""
    finished: str = ""
    wall_seconds: float = 0.0
    csv: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "wall_seconds": self.wall_seconds,
            "config": self.config,
            "payload": self.payload,
            "csv": self.csv,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def planar_domain(cfg: ExperimentConfig):
    if cfg.domain == "disc":
        return UnitDisc(cfg.radius)
    if cfg.domain == "annulus":
        return Annulus(cfg.inner_radius, cfg.outer_radius)
    raise ConfigError(f"domain: {cfg.domain} is not planar")


def base_domain(cfg: ExperimentConfig):
    if cfg.domain == "bidisc":
        return Bidisc(cfg.radius1, cfg.radius2)
    return planar_domain(cfg)


def thresholds(cfg: ExperimentConfig) -> Thresholds:
    return Thresholds(cfg.plateau_floor, cfg.slope_ceiling, cfg.growth_tol)


def _extra(cfg, dim):
    return cfg.projection_extra if cfg.projection_extra is not None else default_extra(dim)


def spectra_family(symbol, domain, cfg: ExperimentConfig, rule=None):
    """Truncations of ``H_symbol`` on ``domain`` at every configured cap."""
    rule = rule if rule is not None else build_quadrature(domain, cfg.resolution)
    members, runs = [], []
    for cap in cfg.degree_caps:
        th = truncated_hankel(symbol, domain, cap, rule, cfg.threshold, _extra(cfg, rule.dimension))
        members.append(th.spectrum)
        runs.append(th)
    return TruncationFamily(tuple(members)), runs, rule


def _family_payload(family, runs, cfg) -> dict:
    v = verdict(family, thresholds(cfg))
    return {
        "label": family.spectra[0].domain_label,
        "verdict": v.as_dict(),
        "trend": [[format_cap(c), s] for c, s in essential_norm_proxy(family, v.tail_index)],
        "members": [
            {"degree_cap": format_cap(th.spectrum.degree_cap),
             "basis": th.basis.metadata(),
             "projection_rank": th.projection.retained_rank,
             "singular_values": th.spectrum.singular_values.tolist()}
            for th in runs
        ],
    }, v


def _emit_family_csv(out_dir, families, verdicts):
    if out_dir is None:
        return {}
    spectra = os.path.join(out_dir, "spectra.csv")
    trend = os.path.join(out_dir, "trend.csv")
    write_spectra_csv(spectra, families)
    write_trend_csv(trend, {f.spectra[0].domain_label: (v.tail_index,
                                                        essential_norm_proxy(f, v.tail_index))
                            for f, v in zip(families, verdicts)})
    return {"spectra": "spectra.csv", "trend": "trend.csv"}


def _localize(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    base = planar_domain(cfg)
    lens = Lens(base, cfg.lens_center, cfg.lens_radius)
    if not flood_fill_connected(lens, cfg.resolution):
        raise GeometryError(f"{lens.label} is not connected at resolution {cfg.resolution}")
    phi = from_expression(cfg.symbol, 1)
    fam_base, runs_base, _ = spectra_family(phi, base, cfg)
    restricted = restrict_symbol(phi, lens)
    fam_lens, runs_lens, lens_rule = spectra_family(restricted, lens, cfg)
    p_base, v_base = _family_payload(fam_base, runs_base, cfg)
    p_lens, v_lens = _family_payload(fam_lens, runs_lens, cfg)
    p_lens["symbol_sup_norm"] = restricted.sup_norm(lens_rule.nodes)
    compact = "CompactConsistent"
    payload = {
        "symbol": phi.metadata(),
        "resolution": cfg.resolution,
        "base": p_base,
        "lens": p_lens,
        "headline": {
            "base_verdict": v_base.label.value,
            "lens_verdict": v_lens.label.value,
            "implication_holds": v_base.label.value != compact or v_lens.label.value == compact,
        },
    }
    return payload, _emit_family_csv(out_dir, [fam_base, fam_lens], [v_base, v_lens])


def _analytic_disc(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    domain = base_domain(cfg)
    if not isinstance(domain, Bidisc):
        raise ConfigError("domain: analytic_disc runs on the bidisc")
    phi = from_expression(cfg.symbol, 2)
    fam, runs, _ = spectra_family(phi, domain, cfg)
    p, v = _family_payload(fam, runs, cfg)
    payload = {"symbol": phi.metadata(), "resolution": cfg.resolution, "bidisc": p,
               "verdict": v.label.value}
    return payload, _emit_family_csv(out_dir, [fam], [v])


def cauchy_cross_check(phi, domain, cap, cfg: ExperimentConfig, spectral_runs=None) -> dict:
    """``||(I - P) S_phi e_n||`` on a lattice rule against the spectral route."""
    res = cfg.cauchy_resolution or cfg.resolution
    count = cfg.cross_check_count
    if phi.dbar_evaluator is None:
        return {"skipped": f"symbol {phi.expression} carries no dbar data"}
    rule = build_quadrature(domain, res, scheme="grid")
    basis = orthonormal_basis(domain, cap, rule, cfg.threshold)
    proj = extend_basis(basis, rule, _extra(cfg, 1))
    E = basis_values(proj, rule)
    op = CauchyOperator(rule, density=phi.dbar(rule.nodes)[:, 0])
    n_max = min(count, basis.retained_rank - 1)
    rows = []
    sigma = column = None
    if spectral_runs is not None:
        sigma = spectral_runs.spectrum.singular_values
        column = spectral_runs.column_norms()
    for n in range(n_max + 1):
        s = op.apply(E[:, n])
        resid = s - E @ project(proj, rule, s)
        row = {"n": n, "cauchy_norm": rule.norm(resid)}
        if sigma is not None:
            row["sigma"] = float(sigma[n])
            row["column_norm"] = float(column[n])
        rows.append(row)
    return {"resolution": res, "puncture_radius": op.puncture_radius, "rows": rows}


def _prop1(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    domain = planar_domain(cfg)
    phi = from_expression(cfg.symbol, 1)
    fam, runs, _ = spectra_family(phi, domain, cfg)
    p, v = _family_payload(fam, runs, cfg)
    cross = cauchy_cross_check(phi, domain, cfg.degree_caps[-1], cfg, runs[-1])
    payload = {"symbol": phi.metadata(), "resolution": cfg.resolution, "family": p,
               "verdict": v.label.value, "cauchy_cross_check": cross}
    csvs = _emit_family_csv(out_dir, [fam], [v])
    if out_dir is not None and "rows" in cross:
        path = os.path.join(out_dir, "cauchy_check.csv")
        with open(path, "w") as fh:
            fh.write("n,cauchy_norm,sigma,column_norm\n")
            for r in cross["rows"]:
                fh.write(f"{r['n']},{r['cauchy_norm']!r},{r.get('sigma', '')!r},"
                         f"{r.get('column_norm', '')!r}\n")
        csvs["cauchy_check"] = "cauchy_check.csv"
    return payload, csvs


def _extend(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    base = UnitDisc(cfg.radius)
    lens = Lens(base, cfg.lens_center, cfg.lens_radius)
    if not flood_fill_connected(lens, cfg.resolution):
        raise GeometryError(f"{lens.label} is not connected at resolution {cfg.resolution}")
    f = from_expression(cfg.function, 1)
    rule = build_quadrature(base, cfg.resolution, scheme="grid")
    try:
        result = extension_operator(lambda z: f(z), lens, cfg.resolved_epsilon(), cfg.delta,
                                    cfg.k_max, rule=rule, ks=cfg.k_values)
    except ValueError as exc:
        if "holomorphic" in str(exc):
            raise ConfigError(f"function: {exc}") from None
        raise
    payload = {"function": cfg.function, "lens": lens.label, "epsilon": cfg.resolved_epsilon(),
               "delta": cfg.delta, "resolution": cfg.resolution, **result.as_dict()}
    csvs = {}
    if out_dir is not None:
        with open(os.path.join(out_dir, "extension.csv"), "w") as fh:
            fh.write("k,achieved_error\n")
            for k, e in result.sweep:
                fh.write(f"{k},{e!r}\n")
        csvs["extension"] = "extension.csv"
    return payload, csvs


def _hormander(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    domain = UnitDisc(cfg.radius)
    rule = build_quadrature(domain, cfg.resolution, scheme="grid")
    g = from_expression(cfg.data, 1)(rule.nodes)
    psi_values = from_expression(cfg.weight, 1)(rule.nodes)
    if np.max(np.abs(psi_values.imag)) > 1e-12 * max(1.0, np.max(np.abs(psi_values))):
        raise ConfigError("weight: the weight exponent must be real-valued")
    D = dbar_matrix(rule)
    reports = []
    for k in cfg.weight_scales:
        _, rep = hormander_solve(WeightedDbarProblem(rule, g, psi_values.real, k), D)
        reports.append(rep.as_dict())
    payload = {"data": cfg.data, "weight": cfg.weight, "resolution": cfg.resolution,
               "nodes": len(rule), "equations": len(D.rows), "reports": reports,
               "inequality_holds": all(r["lhs"] <= r["rhs"] for r in reports)}
    csvs = {}
    if out_dir is not None:
        keys = ["weight_scale", "lhs", "rhs", "ratio", "residual", "backward_error",
                "weighted_norm"]
        with open(os.path.join(out_dir, "hormander.csv"), "w") as fh:
            fh.write(",".join(keys) + "\n")
            for r in reports:
                fh.write(",".join(repr(float(r[k])) for k in keys) + "\n")
        csvs["hormander"] = "hormander.csv"
    return payload, csvs


def _certify(cfg: ExperimentConfig, out_dir: Optional[str] = None):
    eps = cfg.resolved_epsilon()
    certs = []
    if cfg.gram_diagonal is not None:
        cert = certificate(np.diag(np.asarray(cfg.gram_diagonal, dtype=float)), eps)
        certs.append({"degree_cap": "given", **cert.as_dict()})
    else:
        domain = base_domain(cfg)
        phi = from_expression(cfg.symbol, domain.dimension)
        rule = build_quadrature(domain, cfg.resolution)
        for cap in cfg.degree_caps:
            th = truncated_hankel(phi, domain, cap, rule, cfg.threshold,
                                  _extra(cfg, domain.dimension))
            cert = certificate(th.gram, eps)
            certs.append({"degree_cap": format_cap(cap), **cert.as_dict()})
    csvs = {}
    if out_dir is not None:
        with open(os.path.join(out_dir, "certificates.csv"), "w") as fh:
            fh.write("degree_cap,epsilon,rank,residual_norm,degenerate\n")
            for c in certs:
                fh.write(f"{c['degree_cap']},{c['epsilon']!r},{c['rank']},"
                         f"{c['residual_norm']!r},{c['degenerate']}\n")
        csvs["certificates"] = "certificates.csv"
    return {"epsilon": eps, "certificates": certs}, csvs


_BODIES = {
    "localize": _localize,
    "prop1": _prop1,
    "analytic_disc": _analytic_disc,
    "extend": _extend,
    "hormander": _hormander,
    "certify": _certify,
}


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> RunRecord:
    """Run ``cfg.experiment``; CSV files go to ``out_dir`` when given."""
    started = _now()
    t0 = time.perf_counter()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    payload, csvs = _BODIES[cfg.experiment](cfg, out_dir)
    return RunRecord(cfg.experiment, cfg.echo(), payload, started=started, finished=_now(),
                     wall_seconds=round(time.perf_counter() - t0, 3), csv=csvs)


def _runner(name):
    def run(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> RunRecord:
        if cfg.experiment != name:
            raise ConfigError(f"experiment: expected a {name} config, got {cfg.experiment}")
        return run_experiment(cfg, out_dir)
    run.__name__ = run.__qualname__ = f"run_{name}"
    return run


run_localize = _runner("localize")
run_prop1 = _runner("prop1")
run_analytic_disc = _runner("analytic_disc")
run_extend = _runner("extend")
run_hormander = _runner("hormander")
run_certify = _runner("certify")


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays, complex numbers and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj
