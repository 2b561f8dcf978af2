"""Run registered examples (or custom problems) and write CSV, VTK and JSON outputs."""

import json
import logging
import platform
import time
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import run_convergence_study, solve_level
from .assembly import LpsConfig
from .errors import ConfigurationError
from .fields import layer_statistics, sample_field
from .mesh import build_structured_mesh
from .problems import ExampleSpec, Variant, custom_problem, get_example
from .verification import check_wellposedness
from .vtk import write_vtk

log = logging.getLogger(__name__)

DEFAULT_LAYER_LEVEL = 32
LAYER_BOUNDS = (0.0, 1.0)


def _variant_name(v):
    if not v.enable_s1 and not v.enable_s2:
        base = "no_stabilization"
    elif v.enable_s1 and v.enable_s2:
        base = "s1+s2"
    else:
        base = "s1-only" if v.enable_s1 else "s2-only"
    return base + ("" if v.enriched else "_unenriched")


def resolve_example(cfg):
    """The example spec to run: a registry entry or one built from custom data."""
    if cfg.example is None:
        raise ConfigurationError("no example given")
    if cfg.example != "custom":
        return get_example(cfg.example)
    if cfg.beta is None:
        raise ConfigurationError("custom problems need 'beta'")
    kind = cfg.kind or "curl"
    probe = custom_problem(kind, cfg.beta, cfg.gamma, cfg.exact, cfg.inflow)
    layer = probe.exact is None
    return ExampleSpec("custom", probe.name,
                       lambda k: custom_problem(k, cfg.beta, cfg.gamma, cfg.exact, cfg.inflow),
                       probe.dim, ("curl", "div"), (1, 2, 3),
                       (4, 8, 16) if probe.dim == 2 else (1, 2, 4), layer=layer)


def _variants(spec, cfg):
    if not cfg.toggles_set:
        return spec.variants
    base = spec.variants[0]
    v = Variant("", base.enable_s1 if cfg.s1 is None else cfg.s1,
                base.enable_s2 if cfg.s2 is None else cfg.s2,
                base.enriched if cfg.enrich is None else cfg.enrich)
    return (Variant(_variant_name(v), v.enable_s1, v.enable_s2, v.enriched),)


def _levels(spec, cfg):
    levels = tuple(cfg.levels) if cfg.levels else tuple(spec.levels)
    if cfg.large and not cfg.levels:
        levels = levels + tuple(spec.large_levels)
    if not levels:
        raise ConfigurationError("levels must be nonempty")
    return levels


def _lps_config(cfg, r, variant):
    return LpsConfig(r=r, enriched=variant.enriched, enable_s1=variant.enable_s1,
                     enable_s2=variant.enable_s2, cf_strategy=cfg.cf_strategy,
                     solver_tol=cfg.solver_tol)


def _progress(row):
    log.info("  1/h=%d ndofs=%d energy=%.3e l2=%.3e (%s, %.1fs)", row.inv_h, row.ndofs,
             row.energy, row.l2, row.solve_method, row.seconds)


def run_experiment(cfg, echo=print):
    """Execute ``cfg``; returns the JSON summary (also written to ``out``)."""
    spec = resolve_example(cfg)
    if cfg.deterministic:
        kernels.set_threads(1)
    kinds = (cfg.kind,) if cfg.kind else spec.kinds
    for k in kinds:
        if k not in spec.kinds:
            raise ConfigurationError(f"{spec.id} does not support kind {k!r}")
    orders = tuple(cfg.r) if cfg.r else spec.orders
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"example": spec.id, "title": spec.title, "kernels": kernels.BACKEND,
               "deterministic": cfg.deterministic, "python": platform.python_version(),
               "runs": []}
    t_all = time.perf_counter()
    for kind in kinds:
        problem = spec.problem(kind)
        rho = check_wellposedness(problem, build_structured_mesh(problem.dim, 2))
        for r in orders:
            for variant in _variants(spec, cfg):
                conf = _lps_config(cfg, r, variant)
                tag = f"{spec.id}_{kind}_r{r}_{variant.name}"
                if spec.layer:
                    entry = _run_layer(problem, conf, cfg, out, tag, echo)
                else:
                    entry = _run_convergence(problem, conf, _levels(spec, cfg), out, tag, echo)
                entry.update(kind=kind, r=r, variant=variant.name, coercivity_min=rho)
                summary["runs"].append(entry)
    if spec.layer:
        summary["layer_comparison"] = _compare_layers(summary["runs"])
    summary["total_seconds"] = time.perf_counter() - t_all
    path = out / f"{spec.id}_summary.json"
    path.write_text(json.dumps(summary, indent=2, default=_json_default) + "\n")
    echo(f"summary -> {path}")
    return summary


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _run_convergence(problem, conf, levels, out, tag, echo):
    echo(f"{tag}: levels {','.join(map(str, levels))}")
    report = run_convergence_study(problem, conf, levels, progress=_progress)
    csv = report.to_csv()
    path = out / f"{tag}.csv"
    path.write_text(csv)
    echo(csv.rstrip())
    echo(f"  -> {path}")
    return {"csv": str(path), **report.as_dict()}


def _run_layer(problem, conf, cfg, out, tag, echo):
    n = cfg.n or (cfg.levels[-1] if cfg.levels else DEFAULT_LAYER_LEVEL)
    res = cfg.resolution or 4 * n
    t0 = time.perf_counter()
    mesh, space, rep = solve_level(problem, conf, n)
    dump = sample_field(space, rep.solution, res)
    stats = layer_statistics(dump.first_component, *LAYER_BOUNDS)
    path = out / f"{tag}_n{n}.vtk"
    write_vtk(path, dump.points, dump.shape, scalars={"u_1": dump.first_component},
              vectors={"u": dump.values}, title=f"{tag} n={n}")
    echo(f"{tag}: n={n} min={stats['min']:.4f} max={stats['max']:.4f} "
         f"overshoot={stats['overshoot']:.4e} undershoot={stats['undershoot']:.4e} -> {path}")
    return {"vtk": str(path), "n": n, "resolution": res, "ndofs": space.ndofs,
            "solver": rep.method, "relative_residual": rep.relative_residual,
            "seconds": time.perf_counter() - t0, "statistics": stats}


def _compare_layers(runs):
    by = {}
    for r in runs:
        by.setdefault((r["kind"], r["r"]), {})[r["variant"]] = r["statistics"]
    out = []
    for (kind, r), stats in by.items():
        if "no_stabilization" not in stats:
            continue
        ref = stats["no_stabilization"]
        for name, s in stats.items():
            if name == "no_stabilization":
                continue
            out.append({"kind": kind, "r": r, "variant": name,
                        "overshoot_reduced": s["overshoot"] < ref["overshoot"],
                        "undershoot_reduced": s["undershoot"] < ref["undershoot"]})
    return out
