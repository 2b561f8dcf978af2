"""Error norms, convergence orders and mesh-refinement studies."""

import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import (LpsConfig, assemble, cell_degree, facet_degree, facet_weights,
                       fluctuation_apply, projection_matrix)
from .errors import ConfigurationError, InvalidArgumentError
from .mesh import build_structured_mesh, classify_boundary
from .operators import adjoint_constant
from .quadrature import simplex_rule
from .solver import solve
from .spaces import FiniteElementSpace

CSV_HEADER = "inv_h,energy_err,energy_order,l2_err,l2_order"


@dataclass(frozen=True)
class ErrorBreakdown:
    l2: float
    boundary_out: float
    boundary_in: float
    jump: float
    fluctuation: float

    @property
    def energy(self):
        return math.sqrt(self.l2 ** 2 + self.boundary_out ** 2 + self.boundary_in ** 2
                         + self.jump ** 2 + self.fluctuation ** 2)

    @property
    def s1_norm(self):
        """Energy norm without the fluctuation term."""
        return math.sqrt(self.l2 ** 2 + self.boundary_out ** 2 + self.boundary_in ** 2
                         + self.jump ** 2)

    def as_dict(self):
        return {"l2": self.l2, "boundary_out": self.boundary_out,
                "boundary_in": self.boundary_in, "jump": self.jump,
                "fluctuation": self.fluctuation, "energy": self.energy,
                "s1_norm": self.s1_norm}


def _exact_or_zero(problem, x, jac=False):
    if problem.exact is None:
        return np.zeros(x.shape + ((x.shape[-1],) if jac else ()))
    return problem.exact_jacobian(x) if jac else problem.exact(x)


def error_breakdown(solution, problem, mesh, space, config, exact=True):
    """Parts of the energy norm of ``u - u_h`` (or of ``u_h`` alone when ``exact`` is False)."""
    if exact and not problem.has_exact:
        raise ConfigurationError("error norms need an exact solution with Jacobian")
    if space.mesh is not mesh:
        raise ConfigurationError("space was built on a different mesh")
    sign = 1.0 if exact else 0.0
    coef = np.asarray(solution, dtype=float)
    crule = simplex_rule(mesh.dim, cell_degree(problem, config))
    P = projection_matrix(config.r, mesh.dim, crule)
    l2sq = 0.0
    flsq = 0.0
    for start in range(0, mesh.n_cells, config.chunk_size):
        cells = np.arange(start, min(mesh.n_cells, start + config.chunk_size))
        x = mesh.to_physical(cells, crule.cartesian)
        uh, duh = space.evaluate_function(coef, cells, crule.cartesian, derivatives=True)
        e = sign * _exact_or_zero(problem, x) - uh
        de = sign * _exact_or_zero(problem, x, jac=True) - duh
        w = crule.weights[None, :] * mesh.det[cells][:, None]
        l2sq += float(np.einsum("cq,cqd,cqd->", w, e, e))
        bb = np.einsum("cq,cqd->cd", w, problem.beta(x)) / w.sum(axis=1)[:, None]
        k = fluctuation_apply(P, adjoint_constant(de, bb[:, None, :]))
        flsq += float(np.einsum("c,cq,cqd,cqd->", mesh.h[cells], w, k, k))

    frule = simplex_rule(mesh.dim - 1, facet_degree(problem, config))
    ref_vals = space.facet_tabulation(frule)[0]

    def trace(facets, side):
        c = mesh.facet_cells[facets, side]
        V = space.push_forward(c, ref_vals[mesh.facet_local[facets, side]])
        return np.einsum("fb,fqbd->fqd", coef[space.dofmap.cell_dofs[c]], V)

    def abs_bn(facets, x):
        return np.abs(np.einsum("fqd,fd->fq", problem.beta(x), mesh.facet_normals[facets]))

    fi = mesh.interior_facets
    jsq = 0.0
    for start in range(0, len(fi), config.chunk_size):
        f = fi[start:start + config.chunk_size]
        x = mesh.facet_points(f, frule)
        jump = trace(f, 0) - trace(f, 1)  # exact solution has no jumps
        w = facet_weights(mesh, f, frule) * abs_bn(f, x)
        jsq += float(np.einsum("fq,fqd,fqd->", w, jump, jump))

    bc = classify_boundary(mesh, problem.beta, frule.exactness_degree)
    parts = []
    for fset in (bc.outflow_facets, bc.inflow_facets):
        s = 0.0
        for start in range(0, len(fset), config.chunk_size):
            f = fset[start:start + config.chunk_size]
            x = mesh.facet_points(f, frule)
            e = sign * _exact_or_zero(problem, x) - trace(f, 0)
            w = 0.5 * facet_weights(mesh, f, frule) * abs_bn(f, x)
            s += float(np.einsum("fq,fqd,fqd->", w, e, e))
        parts.append(s)
    return ErrorBreakdown(math.sqrt(l2sq), math.sqrt(parts[0]), math.sqrt(parts[1]),
                          math.sqrt(jsq), math.sqrt(flsq))


def eoc(errors, inverse_h):
    """Orders ``log(e_{k-1}/e_k) / log(h_{k-1}/h_k)``; the first entry is None."""
    errors = [float(e) for e in errors]
    inverse_h = [float(n) for n in inverse_h]
    if len(errors) != len(inverse_h) or len(errors) < 1:
        raise InvalidArgumentError("errors and inverse_h must have the same nonzero length")
    if any(e <= 0 or not math.isfinite(e) for e in errors):
        raise InvalidArgumentError("errors must be positive and finite")
    if any(b <= a for a, b in zip(inverse_h, inverse_h[1:])):
        raise InvalidArgumentError("inverse_h must be strictly increasing")
    out = [None]
    for k in range(1, len(errors)):
        out.append(math.log(errors[k - 1] / errors[k]) / math.log(inverse_h[k] / inverse_h[k - 1]))
    return out


@dataclass
class ConvergenceRow:
    inv_h: int
    energy: float
    l2: float
    breakdown: ErrorBreakdown
    ndofs: int
    seconds: float
    solve_method: str
    residual: float
    energy_order: float = None
    l2_order: float = None


@dataclass
class ConvergenceReport:
    rows: list
    metadata: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for row in self.rows:
            buf.write(",".join([str(row.inv_h), f"{row.energy:.3e}", _fmt_order(row.energy_order),
                                f"{row.l2:.3e}", _fmt_order(row.l2_order)]) + "\n")
        return buf.getvalue()

    def orders(self, which="energy"):
        return [getattr(r, f"{which}_order") for r in self.rows]

    def as_dict(self):
        return {"metadata": self.metadata,
                "rows": [{"inv_h": r.inv_h, "energy": r.energy, "energy_order": r.energy_order,
                          "l2": r.l2, "l2_order": r.l2_order, "ndofs": r.ndofs,
                          "seconds": r.seconds, "solver": r.solve_method,
                          "relative_residual": r.residual,
                          "norms": r.breakdown.as_dict()} for r in self.rows]}


def _fmt_order(v):
    return "--" if v is None else f"{v:.2f}"


def reported_energy(breakdown, config):
    """Full energy norm when the fluctuation stabilizer is active, the S1 norm otherwise."""
    return breakdown.energy if config.enable_s2 else breakdown.s1_norm


def solve_level(problem, config, n):
    """Build, assemble and solve on the structured mesh with ``1/h = n``."""
    mesh = build_structured_mesh(problem.dim, n)
    space = FiniteElementSpace(mesh, problem.form_kind, config.r, config.enriched)
    system = assemble(problem, mesh, space, config)
    report = solve(system, config.solver_tol)
    return mesh, space, report


def run_convergence_study(problem, config, levels, progress=None):
    levels = [int(n) for n in levels]
    if not levels:
        raise InvalidArgumentError("at least one level is required")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidArgumentError("levels must be strictly increasing")
    rows = []
    for n in levels:
        t0 = time.perf_counter()
        mesh, space, rep = solve_level(problem, config, n)
        br = error_breakdown(rep.solution, problem, mesh, space, config)
        rows.append(ConvergenceRow(n, reported_energy(br, config), br.l2, br, space.ndofs,
                                   time.perf_counter() - t0, rep.method, rep.relative_residual))
        if progress:
            progress(rows[-1])
    if len(rows) > 1:
        for name in ("energy", "l2"):
            orders = eoc([getattr(r, name) for r in rows], levels)
            for r, o in zip(rows, orders):
                setattr(r, f"{name}_order", o)
    meta = {"problem": problem.name, "form_kind": problem.form_kind, "dim": problem.dim,
            "r": config.r, "enriched": config.enriched, "enable_s1": config.enable_s1,
            "enable_s2": config.enable_s2,
            "energy_column": "energy" if config.enable_s2 else "s1_norm"}
    return ConvergenceReport(rows, meta)


__all__ = ["ErrorBreakdown", "ConvergenceReport", "ConvergenceRow", "LpsConfig", "CSV_HEADER",
           "error_breakdown", "eoc", "run_convergence_study", "solve_level", "reported_energy"]
