"""Estimation steps given a detected active/inactive split.

The s-space estimator solves

    min sum_{i inactive} s_i^2   subject to   A s = x

by one of three equivalent routes: two closed forms with different
feasibility envelopes and cost profiles, and a direct KKT solve kept as an
independent cross-check. The x-space estimator instead least-squares fits
the mixture on the active columns alone and zeroes the rest.

Notation: ``act``/``inact`` are the active and inactive column index sets,
``k_alpha = len(act)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detection import ActiveSetPartition
from .exceptions import (
    InfeasiblePartitionError,
    InvalidParamsError,
    RankDeficientActiveSetError,
    SingularSystemError,
)
from .linalg import LuFactor, SpdFactor, nullspace_basis
from .problem import SparseProblem

S_METHODS = ("closed_form_2", "closed_form_1", "kkt_direct", "auto")


def frame_gram_factor(problem: SparseProblem) -> SpdFactor:
    """Factor the frame Gram ``A A^T`` of a problem's dictionary."""
    a = problem.dictionary.entries
    return SpdFactor(a @ a.T, "frame gram")


class FrameCache:
    """Per-problem quantities shared across repeated s-space estimates.

    Holds the Cholesky factor ``C`` of ``A A^T``, the transformed mixture
    ``C^{-1} x``, and, for every column that has ever been active, the
    transformed column ``t_i = C^{-1} a_i`` together with its pairwise
    products ``t_i^T t_j`` and ``t_i^T C^{-1} x``. Active sets of
    consecutive iterations overlap heavily, so each column's triangular
    solve and its products are paid once per solve, not once per
    iteration.
    """

    def __init__(self, problem: SparseProblem):
        self.problem = problem
        a = problem.dictionary.entries
        self.a = a
        self.gram = frame_gram_factor(problem)
        self.tx = self.gram.half_solve(problem.mixture)
        n, m = problem.n, problem.m
        self._slot = np.full(m, -1, dtype=np.intp)
        self._cols = np.empty(m, dtype=np.intp)
        self._nslots = 0
        cap = min(m, max(2 * n, 64))
        self._tbuf = np.empty((n, cap), order="F")
        self._qbuf = np.empty((cap, cap))
        self._ubuf = np.empty(cap)

    def _grow(self, need: int) -> None:
        m = self.problem.m
        cap = min(m, max(2 * self._tbuf.shape[1], need))
        k = self._nslots
        tbuf = np.empty((self._tbuf.shape[0], cap), order="F")
        qbuf = np.empty((cap, cap))
        ubuf = np.empty(cap)
        tbuf[:, :k] = self._tbuf[:, :k]
        qbuf[:k, :k] = self._qbuf[:k, :k]
        ubuf[:k] = self._ubuf[:k]
        self._tbuf, self._qbuf, self._ubuf = tbuf, qbuf, ubuf

    def active_block(self, idx: np.ndarray):
        """``(T, Q, u)`` for the columns in ``idx``: ``T = C^{-1} A[:, idx]``,
        ``Q = T^T T``, ``u = T^T C^{-1} x``. All three are copies."""
        slots = self._slot[idx]
        fresh = idx[slots < 0]
        if fresh.size:
            k0 = self._nslots
            k1 = k0 + fresh.size
            if k1 > self._tbuf.shape[1]:
                self._grow(k1)
            self._tbuf[:, k0:k1] = self.gram.half_solve(self.a[:, fresh])
            self._cols[k0:k1] = fresh
            self._slot[fresh] = np.arange(k0, k1)
            new = self._tbuf[:, k0:k1]
            cross = new.T @ self._tbuf[:, :k1]
            self._qbuf[k0:k1, :k1] = cross
            self._qbuf[:k0, k0:k1] = cross[:, :k0].T
            self._ubuf[k0:k1] = new.T @ self.tx
            self._nslots = k1
            slots = self._slot[idx]
        t_mat = self._tbuf[:, slots]
        q = self._qbuf[np.ix_(slots, slots)]
        u = self._ubuf[slots]
        return t_mat, q, u


def _check_partition(problem: SparseProblem,
                     partition: ActiveSetPartition) -> None:
    if partition.m != problem.m:
        raise InvalidParamsError(
            f"partition over m={partition.m} does not match problem "
            f"m={problem.m}")


def estimate_s_space(problem: SparseProblem, partition: ActiveSetPartition,
                     method: str = "closed_form_2",
                     cache: FrameCache | None = None) -> np.ndarray:
    """Minimum inactive-energy estimate consistent with the mixture.

    Parameters
    ----------
    problem : SparseProblem
    partition : ActiveSetPartition
        Active set from the detection step.
    method : str
        ``closed_form_2`` needs ``k_alpha <= min(n, m - n)``;
        ``closed_form_1`` needs ``k_alpha <= n``; ``kkt_direct`` solves the
        full optimality system; ``auto`` picks the cheapest feasible one.
    cache : FrameCache, optional
        Built once per problem. With it, ``closed_form_2`` reuses the frame
        Gram factorization and per-column solves across calls and works on
        the active block only (the inactive Gram is reached through the
        matrix-inversion lemma); results agree with the direct route to
        working precision.

    Returns
    -------
    ndarray, shape (m,)
        Estimate satisfying ``A s = x`` to working precision.

    Raises
    ------
    InfeasiblePartitionError
        Active set outside the method's envelope.
    SingularSystemError
        A required inverse has condition estimate above 1e12.
    """
    _check_partition(problem, partition)
    if method not in S_METHODS:
        raise InvalidParamsError(f"unknown method {method!r}")
    if cache is not None and cache.problem is not problem:
        raise InvalidParamsError("cache was built for a different problem")
    n, m = problem.n, problem.m
    k = partition.k_alpha
    if method == "auto":
        if k <= min(n, m - n):
            method = "closed_form_2"
        elif k <= n:
            method = "closed_form_1"
        else:
            method = "kkt_direct"
    if method == "closed_form_2" and k > min(n, m - n):
        raise InfeasiblePartitionError(
            f"closed_form_2 needs k_alpha <= min(n, m-n) = "
            f"{min(n, m - n)}, got {k}")
    if method == "closed_form_1" and k > n:
        raise InfeasiblePartitionError(
            f"closed_form_1 needs k_alpha <= n = {n}, got {k}")

    if method == "closed_form_2":
        if cache is not None:
            return _s_closed_form_2_cached(problem, partition, cache)
        return _s_closed_form_2(problem, partition)
    if method == "closed_form_1":
        return _s_closed_form_1(problem, partition)
    return _s_kkt_direct(problem, partition)


def _s_closed_form_2(problem, partition):
    # With P = (A_i A_i^T)^{-1}:
    #   s_act   = (A_a^T P A_a)^{-1} A_a^T P x
    #   s_inact = A_i^T P (x - A_a s_act)
    # computed through the Cholesky half-factor of A_i A_i^T so the inner
    # Gram is a symmetric product U^T U.
    a = problem.dictionary.entries
    x = problem.mixture
    act, inact = partition.active, partition.inactive
    aa = a[:, act]
    ai = a[:, inact]
    f = SpdFactor(ai @ ai.T, "inactive gram")
    ux = f.half_solve(x)
    if act.size:
        u = f.half_solve(aa)
        mfac = SpdFactor(u.T @ u, "projected active gram")
        s_act = mfac.solve(u.T @ ux)
        t = f.half_solve_back(ux - u @ s_act)
    else:
        s_act = np.zeros(0)
        t = f.half_solve_back(ux)
    s = np.zeros(problem.m)
    s[act] = s_act
    s[inact] = ai.T @ t
    return s


def _s_closed_form_2_cached(problem, partition, cache: FrameCache):
    # Same estimate through the factored frame Gram G = A A^T = C C^T.
    # With T = C^{-1} A_a and Q = T^T T, expanding P = (G - A_a A_a^T)^{-1}
    # by the inversion lemma and using that Q and I - Q commute gives
    #   s_act   = Q^{-1} T^T C^{-1} x
    #   s_inact = A_i^T C^{-T} (C^{-1} x - T s_act)
    # (the lemma's correction term vanishes: C^{-1}(x - A_a s_act) is
    # orthogonal to the columns of T). Each call therefore costs one
    # k x k factorization against memoized per-column solves, instead of
    # a fresh n x n Cholesky of the inactive Gram.
    a = cache.a
    act, inact = partition.active, partition.inactive
    tx = cache.tx
    if act.size:
        t_mat, q, u = cache.active_block(act)
        qf = SpdFactor(q, "projected active gram")
        s_act = qf.solve(u)
        w = tx - t_mat @ s_act
    else:
        s_act = np.zeros(0)
        w = tx
    t_full = cache.gram.half_solve_back(w)
    corr = a.T @ t_full
    s = np.zeros(problem.m)
    s[act] = s_act
    s[inact] = corr[inact]
    return s


def _s_closed_form_1(problem, partition):
    # Reduce to the null space of the active columns: with Z spanning
    # null(A_a^T) and B_i = Z^T A_i,
    #   s_inact = B_i^T (B_i B_i^T)^{-1} Z^T x
    #   s_act   = (A_a^T A_a)^{-1} A_a^T (x - A_i s_inact)
    a = problem.dictionary.entries
    x = problem.mixture
    act, inact = partition.active, partition.inactive
    aa = a[:, act]
    ai = a[:, inact]
    z = nullspace_basis(aa.T)
    if z.shape[1]:
        bi = z.T @ ai
        f = SpdFactor(bi @ bi.T, "reduced inactive gram")
        s_inact = bi.T @ f.solve(z.T @ x)
    else:
        # active columns span the whole mixture space; the minimum lands
        # at zero inactive energy
        s_inact = np.zeros(inact.size)
    if act.size:
        g = SpdFactor(aa.T @ aa, "active gram")
        s_act = g.solve(aa.T @ (x - ai @ s_inact))
    else:
        s_act = np.zeros(0)
    s = np.zeros(problem.m)
    s[act] = s_act
    s[inact] = s_inact
    return s


def _kkt_solve(problem, partition):
    # Stationarity of 1/2 sum_{i in inact} s_i^2 under A s = x:
    #   [ H  A^T ] [ s ]   [ 0 ]       H = diag(1 on inact, 0 on act)
    #   [ A   0  ] [ y ] = [ x ]
    # Returns (s, lam) with the multipliers oriented so H s = A^T lam.
    a = problem.dictionary.entries
    x = problem.mixture
    n, m = problem.n, problem.m
    kkt = np.zeros((m + n, m + n))
    kkt[partition.inactive, partition.inactive] = 1.0
    kkt[:m, m:] = a.T
    kkt[m:, :m] = a
    rhs = np.concatenate([np.zeros(m), x])
    sol = LuFactor(kkt, "KKT system").solve(rhs)
    return sol[:m], -sol[m:]


def _s_kkt_direct(problem, partition):
    return _kkt_solve(problem, partition)[0]


@dataclass
class EstimationWorkspace:
    """Named intermediates of one s-space estimate, for inspection.

    Only :func:`build_workspace` fills these in; the solver routes
    themselves form just the pieces they need, in factored form. Fields
    a route cannot form for the given partition stay ``None``:

    - ``z``: basis of ``null(A_alpha^T)``, shape (n, n - k_alpha),
      requires ``k_alpha <= n``; satisfies ``a_alpha.T @ z == 0``.
    - ``b_iota``: ``z.T @ a_iota``.
    - ``p``: explicit inverse of the inactive Gram ``A_iota A_iota^T``,
      requires ``k_iota >= n``.
    - ``h``: diagonal Hessian of the objective, ones on the inactive
      coordinates.
    - ``lam``: constraint multipliers at the minimizer,
      ``h @ s_hat == a.T @ lam``.
    """

    a_alpha: np.ndarray
    a_iota: np.ndarray
    z: np.ndarray | None = None
    b_iota: np.ndarray | None = None
    p: np.ndarray | None = None
    h: np.ndarray | None = None
    lam: np.ndarray | None = None


def build_workspace(problem: SparseProblem,
                    partition: ActiveSetPartition) -> EstimationWorkspace:
    """Assemble the intermediate quantities behind the s-space routes.

    Meant for diagnostics and cross-checks, so everything is formed
    explicitly (including matrix inverses the solvers never materialize).
    """
    _check_partition(problem, partition)
    a = problem.dictionary.entries
    n, m = problem.n, problem.m
    act, inact = partition.active, partition.inactive
    ws = EstimationWorkspace(a_alpha=a[:, act].copy(),
                             a_iota=a[:, inact].copy())
    hdiag = np.zeros(m)
    hdiag[inact] = 1.0
    ws.h = np.diag(hdiag)
    if partition.k_alpha <= n:
        ws.z = nullspace_basis(ws.a_alpha.T)
        ws.b_iota = ws.z.T @ ws.a_iota
    if partition.k_iota >= n:
        ws.p = SpdFactor(ws.a_iota @ ws.a_iota.T,
                         "inactive gram").solve(np.eye(n))
    _, ws.lam = _kkt_solve(problem, partition)
    return ws


def estimate_x_space(problem: SparseProblem,
                     partition: ActiveSetPartition) -> np.ndarray:
    """Least-squares fit of the mixture on the active columns only.

    Inactive components are set exactly to zero; the active block solves
    ``(A_a^T A_a) s_act = A_a^T x``. Raises
    :class:`RankDeficientActiveSetError` when the active columns are too
    close to dependent.
    """
    _check_partition(problem, partition)
    act = partition.active
    s = np.zeros(problem.m)
    if act.size == 0:
        return s
    aa = problem.dictionary.entries[:, act]
    try:
        f = SpdFactor(aa.T @ aa, "active gram")
    except SingularSystemError as exc:
        raise RankDeficientActiveSetError(str(exc)) from exc
    s[act] = f.solve(aa.T @ problem.mixture)
    return s
