"""Differentiable objectives for sparsity-constrained minimization.

Three concrete objectives are provided:

* least squares, f(theta) = ||y - X theta||^2 / (2n)
* logistic negative log-likelihood with the softplus link
* negative mean log pseudo-likelihood of a pairwise binary (+-1) Markov
  network, parameterized by the upper-triangular couplings

All follow the same contract: ``value``/``gradient`` over the full space,
an optional restricted Hessian, and ``restricted_minimize`` which solves
min f(theta) subject to supp(theta) = A by delegating to the subsolver.
The gradient scale is O(1) in n because every objective carries a 1/n
normalization.
"""

from __future__ import annotations

import abc

import numpy as np
from scipy.special import expit

from .types import ParamVector, SupportSet, embed


def softplus(t: np.ndarray) -> np.ndarray:
    """log(1 + exp(t)), overflow-safe for large |t|."""
    return np.logaddexp(0.0, t)


class RestrictedProblem:
    """Reduced view of an objective on a fixed support.

    The subsolver iterates in the |A|-dimensional coordinate space; this
    wrapper evaluates value/gradient/Hessian there.  The generic version
    embeds back into R^p; concrete objectives override it with sliced-data
    versions so candidate solves cost O(n |A|) instead of O(n p).
    """

    def __init__(self, objective: "Objective", support: SupportSet):
        self.objective = objective
        self.support = support
        self._idx = support.as_array()

    def value(self, u: np.ndarray) -> float:
        return self.objective.value(embed(u, self.support))

    def gradient(self, u: np.ndarray) -> np.ndarray:
        return self.objective.gradient(embed(u, self.support))[self._idx]

    def hessian(self, u: np.ndarray) -> np.ndarray | None:
        return self.objective.restricted_hessian(embed(u, self.support), self.support)


class Objective(abc.ABC):
    """A differentiable objective f: R^p -> R."""

    @property
    @abc.abstractmethod
    def dimension(self) -> int:
        """Number of free parameters p."""

    @abc.abstractmethod
    def value(self, theta: np.ndarray) -> float: ...

    @abc.abstractmethod
    def gradient(self, theta: np.ndarray) -> np.ndarray: ...

    def value_and_gradient(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value(theta), self.gradient(theta)

    def restricted_hessian(self, theta: np.ndarray, support: SupportSet) -> np.ndarray | None:
        """Dense |A| x |A| Hessian block, or None if unavailable."""
        return None

    def restricted_problem(self, support: SupportSet) -> RestrictedProblem:
        return RestrictedProblem(self, support)

    def restricted_minimize(self, support: SupportSet, config=None,
                            warm: ParamVector | None = None) -> ParamVector:
        """Minimize f over vectors supported on ``support``."""
        from .subsolver import solve_smooth_restricted
        return solve_smooth_restricted(self, support, config, warm)

    def _check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dimension,):
            raise ValueError(
                f"parameter has shape {theta.shape}, expected ({self.dimension},)"
            )
        return theta


class QuadraticObjective(Objective):
    """Least squares with the 1/(2n) scaling.

    f(theta) = ||y - X theta||^2 / (2n),  grad f = -X^T (y - X theta) / n.
    The restricted minimizer has the closed form given by the normal
    equations, so ``restricted_minimize`` bypasses the iterative subsolver.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2:
            raise ValueError("design must be a 2-d array")
        if y.shape != (X.shape[0],):
            raise ValueError(f"response length {y.shape} does not match {X.shape[0]} rows")
        self.X = X
        self.y = y
        self.n = X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def value(self, theta: np.ndarray) -> float:
        theta = self._check_theta(theta)
        r = self.y - self.X @ theta
        return float(r @ r) / (2.0 * self.n)

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check_theta(theta)
        r = self.y - self.X @ theta
        return -(self.X.T @ r) / self.n

    def value_and_gradient(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        theta = self._check_theta(theta)
        r = self.y - self.X @ theta
        return float(r @ r) / (2.0 * self.n), -(self.X.T @ r) / self.n

    def restricted_hessian(self, theta: np.ndarray, support: SupportSet) -> np.ndarray:
        XA = self.X[:, support.as_array()]
        return (XA.T @ XA) / self.n

    def restricted_problem(self, support: SupportSet) -> RestrictedProblem:
        return _QuadraticRestricted(self, support)

    def restricted_minimize(self, support: SupportSet, config=None,
                            warm: ParamVector | None = None) -> ParamVector:
        from .subsolver import solve_quadratic_restricted
        return solve_quadratic_restricted(self, support, config)


class _QuadraticRestricted(RestrictedProblem):
    def __init__(self, objective: QuadraticObjective, support: SupportSet):
        super().__init__(objective, support)
        self.XA = objective.X[:, self._idx]
        self.y = objective.y
        self.n = objective.n

    def value(self, u: np.ndarray) -> float:
        r = self.y - self.XA @ u
        return float(r @ r) / (2.0 * self.n)

    def gradient(self, u: np.ndarray) -> np.ndarray:
        r = self.y - self.XA @ u
        return -(self.XA.T @ r) / self.n

    def hessian(self, u: np.ndarray) -> np.ndarray:
        return (self.XA.T @ self.XA) / self.n


class LogisticObjective(Objective):
    """Logistic negative log-likelihood over labels in {0, 1}.

    f(theta) = -(1/n) sum_i [y_i t_i - log(1 + exp(t_i))],  t_i = x_i^T theta.
    Evaluated through softplus/expit so |t| in the hundreds (signal
    magnitudes of 100 are routine here) does not overflow.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2:
            raise ValueError("design must be a 2-d array")
        if y.shape != (X.shape[0],):
            raise ValueError(f"label length {y.shape} does not match {X.shape[0]} rows")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("labels must lie in {0, 1}")
        self.X = X
        self.y = y
        self.n = X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def value(self, theta: np.ndarray) -> float:
        theta = self._check_theta(theta)
        t = self.X @ theta
        return float(np.sum(softplus(t) - self.y * t)) / self.n

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        theta = self._check_theta(theta)
        t = self.X @ theta
        return self.X.T @ (expit(t) - self.y) / self.n

    def value_and_gradient(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        theta = self._check_theta(theta)
        t = self.X @ theta
        val = float(np.sum(softplus(t) - self.y * t)) / self.n
        return val, self.X.T @ (expit(t) - self.y) / self.n

    def restricted_hessian(self, theta: np.ndarray, support: SupportSet) -> np.ndarray:
        idx = support.as_array()
        t = self.X @ np.asarray(theta, dtype=float)
        w = expit(t)
        w = w * (1.0 - w)
        XA = self.X[:, idx]
        return (XA.T * w) @ XA / self.n

    def restricted_problem(self, support: SupportSet) -> RestrictedProblem:
        return _LogisticRestricted(self, support)


class _LogisticRestricted(RestrictedProblem):
    def __init__(self, objective: LogisticObjective, support: SupportSet):
        super().__init__(objective, support)
        self.XA = objective.X[:, self._idx]
        self.y = objective.y
        self.n = objective.n

    def value(self, u: np.ndarray) -> float:
        t = self.XA @ u
        return float(np.sum(softplus(t) - self.y * t)) / self.n

    def gradient(self, u: np.ndarray) -> np.ndarray:
        t = self.XA @ u
        return self.XA.T @ (expit(t) - self.y) / self.n

    def hessian(self, u: np.ndarray) -> np.ndarray:
        t = self.XA @ u
        w = expit(t)
        w = w * (1.0 - w)
        return (self.XA.T * w) @ self.XA / self.n


def upper_pairs(p: int) -> np.ndarray:
    """All (k, l) with k < l, row-major: (0,1), (0,2), ..., (p-2,p-1)."""
    k, l = np.triu_indices(p, k=1)
    return np.column_stack([k, l])


def pair_index(k: int, l: int, p: int) -> int:
    """Flat index of the coupling between nodes k < l."""
    if not 0 <= k < l < p:
        raise ValueError(f"need 0 <= k < l < p, got k={k}, l={l}, p={p}")
    return k * (2 * p - k - 1) // 2 + (l - k - 1)


class IsingObjective(Objective):
    """Negative mean log pseudo-likelihood of a pairwise +-1 Markov network.

    Free parameters are the p(p-1)/2 upper-triangular couplings of the
    symmetric zero-diagonal interaction matrix, flattened row-major; all
    supports and sparsity counts live in that flattened space.  With
    phi_k(x) = sigma(2 x_k sum_{l != k} theta_kl x_l) the objective is
    -(1/n) sum_i sum_k log phi_k(x_i) and the coupling (k, l) has gradient
    -(2/n) sum_i x_ik x_il (2 - phi_k(x_i) - phi_l(x_i)).
    """

    def __init__(self, samples: np.ndarray):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2:
            raise ValueError("samples must be a 2-d array")
        if not np.all(np.abs(samples) == 1.0):
            raise ValueError("sample entries must lie in {-1, +1}")
        self.X = samples
        self.n, self.p_nodes = samples.shape
        self._pairs = upper_pairs(self.p_nodes)

    @property
    def dimension(self) -> int:
        return self.p_nodes * (self.p_nodes - 1) // 2

    @property
    def pairs(self) -> np.ndarray:
        """(dimension, 2) array mapping flat index -> (k, l) node pair."""
        return self._pairs

    def to_matrix(self, theta: np.ndarray) -> np.ndarray:
        """Expand a flattened coupling vector to the symmetric p x p matrix."""
        theta = self._check_theta(theta)
        M = np.zeros((self.p_nodes, self.p_nodes))
        k, l = self._pairs[:, 0], self._pairs[:, 1]
        M[k, l] = theta
        M[l, k] = theta
        return M

    def _conditionals(self, theta: np.ndarray) -> np.ndarray:
        # phi[i, k] = sigma(2 x_ik * (X Theta)_ik); Theta symmetric, zero diagonal
        M = self.X @ self.to_matrix(theta)
        return expit(2.0 * self.X * M)

    def value(self, theta: np.ndarray) -> float:
        M = self.X @ self.to_matrix(theta)
        # -log phi = softplus(-u) with u = 2 x * field
        return float(np.sum(softplus(-2.0 * self.X * M))) / self.n

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        phi = self._conditionals(theta)
        C = self.X * (1.0 - phi)
        S = C.T @ self.X
        k, l = self._pairs[:, 0], self._pairs[:, 1]
        return -(2.0 / self.n) * (S[k, l] + S[l, k])

    def restricted_hessian(self, theta: np.ndarray, support: SupportSet) -> np.ndarray:
        phi = self._conditionals(np.asarray(theta, dtype=float))
        return _ising_hessian_block(self.X, phi, self._pairs[support.as_array()], self.n)

    def restricted_problem(self, support: SupportSet) -> RestrictedProblem:
        return _IsingRestricted(self, support)


def _ising_hessian_block(X: np.ndarray, phi: np.ndarray, pairs: np.ndarray,
                         n: int) -> np.ndarray:
    """Hessian of the pseudo-likelihood over the given coupling pairs.

    Two couplings interact only through a shared node v, contributing
    (4/n) sum_i x_iw x_iw' phi_v (1 - phi_v) for their other endpoints
    w, w'; grouping by shared node turns the assembly into one small Gram
    product per node (the diagonal picks up both endpoint groups).
    """
    m = len(pairs)
    H = np.zeros((m, m))
    D = phi * (1.0 - phi)
    p_nodes = X.shape[1]
    members: list[list[tuple[int, int]]] = [[] for _ in range(p_nodes)]
    for pos, (a, b) in enumerate(pairs):
        members[a].append((pos, b))
        members[b].append((pos, a))
    for v in range(p_nodes):
        if not members[v]:
            continue
        pos = np.array([m_ for m_, _ in members[v]], dtype=np.intp)
        other = np.array([w for _, w in members[v]], dtype=np.intp)
        Xw = X[:, other]
        block = (4.0 / n) * ((Xw.T * D[:, v]) @ Xw)
        H[np.ix_(pos, pos)] += block
    return H


class _IsingRestricted(RestrictedProblem):
    """Pseudo-likelihood restricted to a set of active couplings.

    Only nodes touched by an active pair have nontrivial conditionals; the
    remaining nodes each contribute the constant log 2.
    """

    def __init__(self, objective: IsingObjective, support: SupportSet):
        super().__init__(objective, support)
        self.X = objective.X
        self.n = objective.n
        self.active_pairs = objective.pairs[self._idx]
        self.touched = np.unique(self.active_pairs)
        self._slot = -np.ones(objective.p_nodes, dtype=np.intp)
        self._slot[self.touched] = np.arange(len(self.touched))
        self._const = (objective.p_nodes - len(self.touched)) * np.log(2.0)

    def _fields(self, u: np.ndarray) -> np.ndarray:
        # local field of every touched node, n x |touched|
        F = np.zeros((self.n, len(self.touched)))
        for coef, (a, b) in zip(u, self.active_pairs):
            F[:, self._slot[a]] += coef * self.X[:, b]
            F[:, self._slot[b]] += coef * self.X[:, a]
        return F

    def _phi(self, u: np.ndarray) -> np.ndarray:
        return expit(2.0 * self.X[:, self.touched] * self._fields(u))

    def value(self, u: np.ndarray) -> float:
        U = 2.0 * self.X[:, self.touched] * self._fields(u)
        return float(np.sum(softplus(-U))) / self.n + self._const

    def gradient(self, u: np.ndarray) -> np.ndarray:
        B = 1.0 - self._phi(u)
        g = np.empty(len(u))
        for pos, (a, b) in enumerate(self.active_pairs):
            xx = self.X[:, a] * self.X[:, b]
            g[pos] = -(2.0 / self.n) * np.sum(xx * (B[:, self._slot[a]] + B[:, self._slot[b]]))
        return g

    def hessian(self, u: np.ndarray) -> np.ndarray:
        phi_full = np.full((self.n, self.X.shape[1]), 0.5)
        phi_full[:, self.touched] = self._phi(u)
        return _ising_hessian_block(self.X, phi_full, self.active_pairs, self.n)
