"""Ranking SVM: margin constraints on score differences of preference pairs.

Each preference (a over b) contributes the constraint s(a) - s(b) >= 1 - xi
on the utility s.  In the kernelized dual this becomes a box-constrained
quadratic program over one multiplier per pair,

    max_{0 <= alpha <= C}  sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j Q_ij,

where Q_ij is the difference-pair kernel
K(a_i,a_j) - K(a_i,b_j) - K(b_i,a_j) + K(b_i,b_j).  The ranking formulation
has no equality constraint (no bias term), so the dual is solved by cyclic
single-coordinate ascent with an exact line search per coordinate:

    alpha_i <- clip(alpha_i + (1 - (Q alpha)_i) / Q_ii, 0, C).

The solver is fully deterministic: fixed cyclic order, no randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from preflearn.dataset import DataTable, PreferenceSet


class RankSvmError(ValueError):
    pass


@dataclass(frozen=True)
class Linear:
    """K(x, y) = x . y"""


@dataclass(frozen=True)
class Polynomial:
    """K(x, y) = (gamma x . y + coef0) ^ degree

    gamma=None resolves to default_gamma(n_features) when the kernel is applied.
    """

    gamma: float | None = None
    coef0: float = 1.0
    degree: int = 2

    def __post_init__(self) -> None:
        if self.gamma is not None and self.gamma <= 0:
            raise RankSvmError("gamma must be positive")
        if self.degree < 1 or int(self.degree) != self.degree:
            raise RankSvmError("degree must be an integer >= 1")


@dataclass(frozen=True)
class Rbf:
    """K(x, y) = exp(-gamma ||x - y||^2)

    gamma=None resolves to default_gamma(n_features) when the kernel is applied.
    """

    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.gamma is not None and self.gamma <= 0:
            raise RankSvmError("gamma must be positive")


Kernel = Union[Linear, Polynomial, Rbf]


def default_gamma(n_features: int) -> float:
    """Common heuristic for RBF/polynomial kernels: 1 / feature count."""
    return 1.0 / n_features


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    kernel: Kernel = Linear()
    tol: float = 1e-3
    max_epochs: int = 1000
    cache_cap: int = 20_000  # full Q matrix kept when pair count <= cap

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise RankSvmError("C must be positive")
        if self.tol <= 0:
            raise RankSvmError("tol must be positive")
        if self.max_epochs < 1:
            raise RankSvmError("max_epochs must be >= 1")


def kernel_matrix(kernel: Kernel, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kernel values for every row pair of A (n x d) and B (m x d)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1] != B.shape[1]:
        raise RankSvmError(
            f"dimension mismatch: {A.shape[1]} vs {B.shape[1]} features"
        )
    G = A @ B.T
    if isinstance(kernel, Linear):
        return G
    gamma = kernel.gamma if kernel.gamma is not None else default_gamma(A.shape[1])
    if isinstance(kernel, Polynomial):
        return (gamma * G + kernel.coef0) ** kernel.degree
    sq_a = np.einsum("ij,ij->i", A, A)[:, None]
    sq_b = np.einsum("ij,ij->i", B, B)[None, :]
    d2 = np.maximum(sq_a + sq_b - 2.0 * G, 0.0)
    return np.exp(-gamma * d2)


def kernel_eval(kernel: Kernel, x, y) -> float:
    """Kernel value of two single vectors."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return float(kernel_matrix(kernel, x, y)[0, 0])


def pair_kernel(kernel: Kernel, p: tuple, q: tuple) -> float:
    """Difference-pair kernel of two preference pairs p=(a,b), q=(c,d).

    For the linear kernel this equals (a-b).(c-d); it is symmetric in p, q.
    """
    a, b = p
    c, d = q
    return (
        kernel_eval(kernel, a, c)
        - kernel_eval(kernel, a, d)
        - kernel_eval(kernel, b, c)
        + kernel_eval(kernel, b, d)
    )


def _q_block(
    kernel: Kernel, Xa: np.ndarray, Xb: np.ndarray, idx: np.ndarray
) -> np.ndarray:
    """Rows Q[idx, :] of the difference-pair kernel matrix."""
    Kaa = kernel_matrix(kernel, Xa[idx], Xa)
    Kab = kernel_matrix(kernel, Xa[idx], Xb)
    Kba = kernel_matrix(kernel, Xb[idx], Xa)
    Kbb = kernel_matrix(kernel, Xb[idx], Xb)
    return Kaa - Kab - Kba + Kbb


@dataclass(frozen=True)
class TrainDiagnostics:
    converged: bool
    stop_reason: str  # "converged" or "max_epochs"
    epochs: int
    final_violation: float
    objective: float
    zero_difference_pairs: int
    zero_diagonal_pairs: int
    # full multiplier vector over the kept (non-zero-difference) pairs,
    # aligned with kept_pair_indices into the original preference list
    alpha: np.ndarray = field(repr=False)
    kept_pair_indices: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class SvmRankModel:
    """Support pairs with positive multipliers; scores are kernel expansions.

    s(x) = sum_i alpha_i (K(a_i, x) - K(b_i, x))
    """

    support_a: np.ndarray
    support_b: np.ndarray
    alpha: np.ndarray
    kernel: Kernel
    diagnostics: TrainDiagnostics | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        for arr in (self.support_a, self.support_b, self.alpha):
            arr.setflags(write=False)
        if self.support_a.shape != self.support_b.shape:
            raise RankSvmError("support pair arrays must have equal shapes")
        if len(self.alpha) != len(self.support_a):
            raise RankSvmError("one multiplier per support pair required")

    @property
    def n_features(self) -> int:
        return self.support_a.shape[1] if self.support_a.ndim == 2 else 0

    def score_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if len(self.alpha) == 0:
            return np.zeros(len(X))
        Ka = kernel_matrix(self.kernel, X, self.support_a)
        Kb = kernel_matrix(self.kernel, X, self.support_b)
        return (Ka - Kb) @ self.alpha

    def score(self, x) -> float:
        return float(self.score_many(np.asarray(x, dtype=float).reshape(1, -1))[0])


def svm_score(model: SvmRankModel, x) -> float:
    return model.score(x)


def _kkt_violation(alpha: np.ndarray, g: np.ndarray, C: float, active: np.ndarray) -> float:
    viol = np.where(
        alpha <= 0.0,
        np.maximum(g, 0.0),
        np.where(alpha >= C, np.maximum(-g, 0.0), np.abs(g)),
    )
    viol[~active] = 0.0
    return float(viol.max()) if len(viol) else 0.0


def train_ranksvm(
    prefs: PreferenceSet,
    table: DataTable,
    params: SvmParams,
    on_progress: Callable[[float], None] | None = None,
) -> SvmRankModel:
    """Fit the dual by cyclic coordinate ascent; returns the support-pair model.

    Zero-difference pairs (identical vectors after preprocessing) are dropped
    before solving: they carry no order information and have Q_ii = 0.  Any
    remaining zero-diagonal coordinates are skipped and counted.  The model's
    ``diagnostics`` reports whether the KKT tolerance was met or the epoch cap
    was hit, along with the final dual objective.
    """
    if len(prefs) == 0:
        raise RankSvmError("cannot train on an empty preference set")
    Xa_all = table.matrix_for([p.preferred for p in prefs.pairs])
    Xb_all = table.matrix_for([p.other for p in prefs.pairs])

    same = np.all(Xa_all == Xb_all, axis=1)
    n_zero_diff = int(same.sum())
    if n_zero_diff == len(prefs):
        raise RankSvmError(
            "all preference pairs have identical feature vectors; nothing to learn"
        )
    kept = np.flatnonzero(~same)
    Xa = np.ascontiguousarray(Xa_all[kept])
    Xb = np.ascontiguousarray(Xb_all[kept])
    m = len(kept)

    cached = m <= params.cache_cap
    if cached:
        Q = _q_block(params.kernel, Xa, Xb, np.arange(m))
        diag = np.ascontiguousarray(np.diagonal(Q))
    else:
        Q = None
        diag = np.array(
            [_q_block(params.kernel, Xa, Xb, np.array([i]))[0, i] for i in range(m)]
        )

    active = diag > 0.0
    n_zero_diag = int((~active).sum())

    def exact_gradient(alpha: np.ndarray) -> np.ndarray:
        if cached:
            return 1.0 - Q @ alpha
        g = np.ones(m)
        step = 1024
        for start in range(0, m, step):
            idx = np.arange(start, min(start + step, m))
            g[idx] -= _q_block(params.kernel, Xa, Xb, idx) @ alpha
        return g

    C = params.C
    alpha = np.zeros(m)
    g = np.ones(m)  # gradient of the dual objective: 1 - Q alpha
    epochs = 0
    converged = False
    violation = float("inf")
    while epochs < params.max_epochs:
        epochs += 1
        for i in range(m):
            if not active[i]:
                continue
            gi = g[i]
            a_new = alpha[i] + gi / diag[i]
            if a_new < 0.0:
                a_new = 0.0
            elif a_new > C:
                a_new = C
            delta = a_new - alpha[i]
            if delta != 0.0:
                alpha[i] = a_new
                row = Q[i] if cached else _q_block(params.kernel, Xa, Xb, np.array([i]))[0]
                g -= delta * row
        violation = _kkt_violation(alpha, g, C, active)
        if violation < params.tol:
            # the incrementally maintained gradient drifts; confirm before stopping
            g = exact_gradient(alpha)
            violation = _kkt_violation(alpha, g, C, active)
            if violation < params.tol:
                converged = True
                break
        if on_progress is not None:
            on_progress(epochs / params.max_epochs)

    g = exact_gradient(alpha)
    violation = _kkt_violation(alpha, g, C, active)
    # dual objective via the gradient identity: alpha^T Q alpha = sum(alpha) - alpha.g
    objective = 0.5 * (alpha.sum() + alpha @ g)

    diagnostics = TrainDiagnostics(
        converged=converged,
        stop_reason="converged" if converged else "max_epochs",
        epochs=epochs,
        final_violation=violation,
        objective=float(objective),
        zero_difference_pairs=n_zero_diff,
        zero_diagonal_pairs=n_zero_diag,
        alpha=alpha.copy(),
        kept_pair_indices=kept,
    )
    sv = alpha > 0.0
    return SvmRankModel(
        support_a=Xa[sv].copy(),
        support_b=Xb[sv].copy(),
        alpha=alpha[sv].copy(),
        kernel=params.kernel,
        diagnostics=diagnostics,
    )
