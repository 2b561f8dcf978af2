"""Pointwise vector advection operators.

All functions act on stacked samples: values ``(..., d)`` and Jacobians
``(..., d, d)`` with ``J[..., i, j] = d u_i / d x_j``. Broadcasting over
leading axes lets a single velocity sample serve many basis functions.
"""

import numpy as np

from .errors import ConfigurationError

KIND_SIGN = {"curl": 1.0, "div": -1.0}


def _check_kind(kind):
    if kind not in KIND_SIGN:
        raise ConfigurationError(f"unknown form kind {kind!r}")


def _matvec(M, v):
    return np.einsum("...ij,...j->...i", M, v)


def _div(J):
    return np.trace(J, axis1=-2, axis2=-1)


def advection(kind, u, du, beta, dbeta):
    """The advection operator applied to ``u``.

    curl: ``grad(beta.u) - beta x curl u``; div: ``beta div u + curl(u x beta)``.
    """
    _check_kind(kind)
    beta = np.asarray(beta)
    if kind == "curl":
        return _matvec(np.swapaxes(dbeta, -1, -2), u) + _matvec(du, beta)
    return _div(dbeta)[..., None] * u - _matvec(dbeta, u) + _matvec(du, beta)


def adjoint_advection(kind, v, dv, beta, dbeta):
    """Formal adjoint of :func:`advection` for a variable velocity."""
    _check_kind(kind)
    if kind == "curl":
        return _matvec(dbeta, v) - _div(dbeta)[..., None] * v - _matvec(dv, beta)
    return -_matvec(np.swapaxes(dbeta, -1, -2), v) - _matvec(dv, beta)


def adjoint_constant(dv, beta_const):
    """Adjoint for a constant velocity: ``-(Dv) beta`` for both kinds."""
    return -_matvec(dv, beta_const)


def symmetric_part(kind, dbeta):
    """``L + L*`` as a matrix field: ``+-(Dbeta + Dbeta^T - div(beta) I)``."""
    _check_kind(kind)
    d = dbeta.shape[-1]
    M = dbeta + np.swapaxes(dbeta, -1, -2) - _div(dbeta)[..., None, None] * np.eye(d)
    return KIND_SIGN[kind] * M


def coercivity_eigenvalues(kind, gamma, dbeta):
    """Smallest eigenvalue of ``gamma I + (L + L*)/2`` at each sample."""
    d = dbeta.shape[-1]
    M = np.asarray(gamma)[..., None, None] * np.eye(d) + 0.5 * symmetric_part(kind, dbeta)
    return np.linalg.eigvalsh(M)[..., 0]
