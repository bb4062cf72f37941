"""Minimum l1-norm solver for ``A s = x`` via its linear-program form.

The split ``s = u - v`` with ``u, v >= 0`` turns the problem into

    min 1^T (u + v)   s.t.   [A, -A] [u; v] = x,   u, v >= 0

solved here with a Mehrotra predictor-corrector primal-dual method. The
Newton steps reduce to dense normal equations ``A diag(d) A^T dy = r``
(one n x n Cholesky per iteration); the block structure of ``[A, -A]`` is
exploited throughout so the work scales with ``A`` itself, never with an
explicitly doubled constraint matrix.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .exceptions import (
    InvalidParamsError,
    MaxIterationsExceededError,
    NumericalFailureError,
)


@dataclass(frozen=True)
class LpConfig:
    """Termination settings for the interior-point solver.

    Convergence requires all three of: relative primal feasibility within
    ``feasibility_tol``, relative dual feasibility within it, and relative
    duality gap within ``gap_tol``.
    """

    max_iterations: int = 100
    feasibility_tol: float = 1e-8
    gap_tol: float = 1e-8
    step_scale: float = 0.999

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidParamsError(
                f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0 < self.feasibility_tol < 1:
            raise InvalidParamsError(
                f"feasibility_tol must be in (0, 1), got {self.feasibility_tol}")
        if not 0 < self.gap_tol < 1:
            raise InvalidParamsError(
                f"gap_tol must be in (0, 1), got {self.gap_tol}")
        if not 0 < self.step_scale < 1:
            raise InvalidParamsError(
                f"step_scale must be in (0, 1), got {self.step_scale}")


def _factor_normal_eq(a: np.ndarray, d: np.ndarray):
    """Cholesky of ``A diag(d) A^T`` with escalating ridge on failure."""
    m_mat = (a * d) @ a.T
    reg = 0.0
    for _ in range(4):
        try:
            return cho_factor(m_mat + reg * np.eye(a.shape[0]),
                              lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            base = np.trace(m_mat) / a.shape[0]
            reg = max(reg * 100.0, 1e-12 * max(base, 1.0))
    raise NumericalFailureError(
        "normal-equation matrix could not be factored even after "
        "regularization")


def _max_step(z: np.ndarray, dz: np.ndarray) -> float:
    """Largest alpha with z + alpha dz >= 0, given z > 0."""
    neg = dz < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-z[neg] / dz[neg]))


def min_l1(a: np.ndarray, x: np.ndarray, config: LpConfig = LpConfig(),
           keep_iterates: bool = False):
    """Solve ``min ||s||_1  s.t.  A s = x``.

    Parameters
    ----------
    a : ndarray, shape (n, m)
        Constraint matrix, full row rank. Square systems are accepted
        (the feasible set is then a single point).
    x : ndarray, shape (n,)
    config : LpConfig
    keep_iterates : bool
        Record ``u - v`` after every iteration in the info trace.

    Returns
    -------
    s : ndarray, shape (m,)
    info : dict
        iterations, converged, primal_infeas, dual_infeas, rel_gap,
        objective, and a per-iteration ``trace`` list.

    Raises
    ------
    MaxIterationsExceededError
        Tolerances unmet after ``max_iterations``; the best iterate is
        attached to the exception as ``result = (s, info)``.
    NumericalFailureError
        Newton system factorization failed beyond recovery.
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise InvalidParamsError(f"matrix must be 2-D, got ndim={a.ndim}")
    n, m = a.shape
    if m < n:
        raise InvalidParamsError(
            f"system must have at least as many columns as rows, "
            f"got {a.shape}")
    if x.shape != (n,):
        raise InvalidParamsError(
            f"right-hand side must have shape ({n},), got {x.shape}")

    x_scale = float(np.max(np.abs(x))) if x.size else 0.0
    if x_scale == 0.0:
        info = {"iterations": 0, "converged": True, "primal_infeas": 0.0,
                "dual_infeas": 0.0, "rel_gap": 0.0, "objective": 0.0,
                "trace": []}
        return np.zeros(m), info
    x_norm2 = float(np.linalg.norm(x))

    t_start = time.perf_counter()

    # Mehrotra starting point. The least-norm primal seed solves
    # (G G^T) q = x with G = [A, -A], i.e. 2 A A^T; the dual seed y = 0
    # gives unit slacks exactly since G^T 0 + w = 1.
    try:
        gram2 = cho_factor(2.0 * (a @ a.T), lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(
            f"A A^T is not positive definite; the constraint matrix must "
            f"have full row rank ({exc})") from exc
    q = cho_solve(gram2, x, check_finite=False)
    u = a.T @ q
    v = -u
    shift = max(-1.5 * min(float(u.min()), float(v.min())), 0.0)
    u = u + shift
    v = v + shift
    total = float(u.sum() + v.sum())
    if total <= 0.0:
        u = np.ones(m)
        v = np.ones(m)
        total = 2.0 * m
    # second-stage centering shifts; with unit slacks the duality measure
    # is total/(2m) on one side and total/total = 1 -> 0.5 on the other
    u += 0.5 * total / (2.0 * m)
    v += 0.5 * total / (2.0 * m)
    y = np.zeros(n)
    wu = np.full(m, 1.5)
    wv = np.full(m, 1.5)

    eta = config.step_scale
    trace: list[dict] = []
    best = None

    for it in range(1, config.max_iterations + 1):
        aty = a.T @ y
        rb = a @ (u - v) - x
        rcu = aty + wu - 1.0
        rcv = -aty + wv - 1.0
        mu = (u @ wu + v @ wv) / (2.0 * m)

        pinf = float(np.max(np.abs(rb))) / (1.0 + x_scale)
        dinf = max(float(np.max(np.abs(rcu))),
                   float(np.max(np.abs(rcv)))) / 2.0
        pobj = float(u.sum() + v.sum())
        dobj = float(x @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))

        s_cur = u - v
        peak = float(np.max(np.abs(s_cur)))
        trace.append({"iteration": it - 1, "mu": mu, "primal_infeas": pinf,
                      "dual_infeas": dinf, "rel_gap": gap,
                      "residual_rel": float(np.linalg.norm(rb)) / x_norm2,
                      "support": int(np.count_nonzero(
                          np.abs(s_cur) > 1e-6 * peak)) if peak else 0,
                      "elapsed": time.perf_counter() - t_start,
                      "estimate": s_cur.copy() if keep_iterates else None})
        converged = (pinf <= config.feasibility_tol
                     and dinf <= config.feasibility_tol
                     and gap <= config.gap_tol)
        info = {"iterations": it - 1, "converged": converged,
                "primal_infeas": pinf, "dual_infeas": dinf, "rel_gap": gap,
                "objective": pobj, "trace": trace}
        best = (u - v, info)
        if converged:
            return u - v, info

        du_ = u / wu
        dv_ = v / wv
        factor = _factor_normal_eq(a, du_ + dv_)

        # predictor: pure Newton on the perturbed KKT residuals
        rhs = -rb + a @ ((u - du_ * rcu) - (v - dv_ * rcv))
        dy = cho_solve(factor, rhs, check_finite=False)
        aty_d = a.T @ dy
        dwu = -rcu - aty_d
        dwv = -rcv + aty_d
        du = -u - du_ * dwu
        dv = -v - dv_ * dwv

        ap_max = min(_max_step(u, du), _max_step(v, dv))
        ad_max = min(_max_step(wu, dwu), _max_step(wv, dwv))
        ap_aff = min(1.0, ap_max)
        ad_aff = min(1.0, ad_max)
        mu_aff = ((u + ap_aff * du) @ (wu + ad_aff * dwu)
                  + (v + ap_aff * dv) @ (wv + ad_aff * dwv)) / (2.0 * m)
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # corrector: recenter toward sigma*mu and cancel the second-order
        # complementarity error of the affine step
        rxu = u * wu + du * dwu - sigma * mu
        rxv = v * wv + dv * dwv - sigma * mu
        rhs = -rb + a @ ((rxu / wu - du_ * rcu) - (rxv / wv - dv_ * rcv))
        dy = cho_solve(factor, rhs, check_finite=False)
        aty_d = a.T @ dy
        dwu = -rcu - aty_d
        dwv = -rcv + aty_d
        du = -rxu / wu - du_ * dwu
        dv = -rxv / wv - dv_ * dwv

        ap = min(1.0, eta * min(_max_step(u, du), _max_step(v, dv)))
        ad = min(1.0, eta * min(_max_step(wu, dwu), _max_step(wv, dwv)))
        u += ap * du
        v += ap * dv
        y += ad * dy
        wu += ad * dwu
        wv += ad * dwv

    s, info = best
    raise MaxIterationsExceededError(
        f"no convergence in {config.max_iterations} iterations "
        f"(primal {info['primal_infeas']:.2e}, dual {info['dual_infeas']:.2e}, "
        f"gap {info['rel_gap']:.2e})", result=(s, info))
