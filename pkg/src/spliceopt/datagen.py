"""Synthetic problem generators with known ground truth.

Three families: AR(1)-correlated Gaussian linear regression, logistic
classification on the same designs, and sparse pairwise +-1 Markov
networks sampled exactly by enumerating all 2^p states (p <= 20, so no
Gibbs-chain mixing questions).  Generators are pure functions of their
config, seed included: the same config reproduces bit-identical data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .objectives import IsingObjective, LogisticObjective, Objective, QuadraticObjective, upper_pairs
from .types import ParamVector, SupportSet

ISING_MAX_NODES = 20
_ENUM_CHUNK = 1 << 16


@dataclass(frozen=True)
class TruthSpec:
    """Ground truth of a synthetic instance, in solver coordinates."""

    p: int
    s_true: int
    signal_values: tuple[float, ...]
    support: SupportSet
    theta_star: ParamVector
    vartheta: float

    def __post_init__(self) -> None:
        if len(self.support) != self.s_true:
            raise ValueError("support cardinality must equal s_true")
        if self.s_true > 0 and self.vartheta <= 0:
            raise ValueError("minimum nonzero magnitude must be positive")


@dataclass
class ProblemInstance:
    """Design data plus ground truth for one synthetic trial."""

    model: str
    objective: Objective
    truth: TruthSpec
    n: int
    seed: int
    meta: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class LinearGenConfig:
    """Correlated Gaussian design with +-signal_magnitude coefficients.

    ``snr_convention`` picks how the noise variance is derived from the
    signal-to-noise ratio: "per_sample" uses sigma^2 = ||X theta*||^2 /
    (n * snr) so recovery difficulty does not drift with n, "total" is the
    literal ||X theta*||^2 / snr reading.  snr=inf means noiseless.
    ``orthonormalize`` replaces the correlated design with an orthonormal
    one rescaled so X^T X = n I (needs n >= p).
    """

    n: int
    p: int
    s_true: int
    rho: float = 0.6
    snr: float = 1.0
    signal_magnitude: float = 100.0
    seed: int = 0
    standardize_response: bool = True
    snr_convention: str = "per_sample"
    orthonormalize: bool = False

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0 <= self.s_true <= self.p:
            raise ValueError(f"s_true must lie in [0, {self.p}]")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if not self.snr > 0:
            raise ValueError("snr must be positive (inf for noiseless)")
        if self.snr_convention not in ("per_sample", "total"):
            raise ValueError(f"unknown snr convention {self.snr_convention!r}")
        if self.orthonormalize and self.n < self.p:
            raise ValueError("orthonormalization needs n >= p")


@dataclass(frozen=True)
class IsingGenConfig:
    """Sparse +-coupling network on p nodes, sampled exactly."""

    p: int
    s_true: int
    n: int
    coupling_magnitude: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 2 <= self.p <= ISING_MAX_NODES:
            raise ValueError(
                f"exact sampling supports 2 <= p <= {ISING_MAX_NODES}, got {self.p}"
            )
        max_edges = self.p * (self.p - 1) // 2
        if not 0 <= self.s_true <= max_edges:
            raise ValueError(f"s_true must lie in [0, {max_edges}]")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.coupling_magnitude <= 0:
            raise ValueError("coupling magnitude must be positive")


def ar1_covariance(p: int, rho: float) -> np.ndarray:
    """Sigma with entries rho^|i-j|."""
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _draw_design(rng: np.random.Generator, cfg: LinearGenConfig) -> np.ndarray:
    Z = rng.standard_normal((cfg.n, cfg.p))
    if cfg.rho > 0:
        L = np.linalg.cholesky(ar1_covariance(cfg.p, cfg.rho))
        X = Z @ L.T
    else:
        X = Z
    if cfg.orthonormalize:
        Q, _ = np.linalg.qr(X)
        X = Q * math.sqrt(cfg.n)
    return X


def _draw_truth(rng: np.random.Generator, p: int, s_true: int,
                magnitude: float) -> tuple[SupportSet, ParamVector]:
    support = SupportSet.from_iterable(
        rng.choice(p, size=s_true, replace=False), p
    )
    theta = np.zeros(p)
    theta[support.as_array()] = magnitude * rng.choice([-1.0, 1.0], size=s_true)
    return support, ParamVector(theta, support)


def _truth_spec(p: int, s_true: int, magnitude: float, support: SupportSet,
                theta_star: ParamVector) -> TruthSpec:
    return TruthSpec(
        p=p,
        s_true=s_true,
        signal_values=(-magnitude, magnitude),
        support=support,
        theta_star=theta_star,
        vartheta=magnitude if s_true > 0 else 0.0,
    )


def gen_linear(cfg: LinearGenConfig) -> tuple[ProblemInstance, TruthSpec]:
    """Noisy linear measurements y = X theta* + eps."""
    rng = np.random.default_rng(cfg.seed)
    X = _draw_design(rng, cfg)
    support, theta_star = _draw_truth(rng, cfg.p, cfg.s_true, cfg.signal_magnitude)
    signal = X @ theta_star.values
    signal_power = float(signal @ signal)
    if math.isinf(cfg.snr):
        sigma = 0.0
    elif cfg.snr_convention == "per_sample":
        sigma = math.sqrt(signal_power / (cfg.n * cfg.snr))
    else:
        sigma = math.sqrt(signal_power / cfg.snr)
    y = signal + sigma * rng.standard_normal(cfg.n)
    if cfg.standardize_response:
        y = y - y.mean()
        sd = y.std()
        if sd > 0:
            y = y / sd
    truth = _truth_spec(cfg.p, cfg.s_true, cfg.signal_magnitude, support, theta_star)
    inst = ProblemInstance(
        model="linear",
        objective=QuadraticObjective(X, y),
        truth=truth,
        n=cfg.n,
        seed=cfg.seed,
        meta={"sigma": sigma, "snr": cfg.snr, "rho": cfg.rho,
              "signal_power": signal_power},
    )
    return inst, truth


def gen_logistic(cfg: LinearGenConfig) -> tuple[ProblemInstance, TruthSpec]:
    """Bernoulli labels with success probability sigma(x_i^T theta*)."""
    rng = np.random.default_rng(cfg.seed)
    X = _draw_design(rng, cfg)
    support, theta_star = _draw_truth(rng, cfg.p, cfg.s_true, cfg.signal_magnitude)
    from scipy.special import expit
    probs = expit(X @ theta_star.values)
    y = (rng.random(cfg.n) < probs).astype(float)
    truth = _truth_spec(cfg.p, cfg.s_true, cfg.signal_magnitude, support, theta_star)
    inst = ProblemInstance(
        model="logistic",
        objective=LogisticObjective(X, y),
        truth=truth,
        n=cfg.n,
        seed=cfg.seed,
        meta={"rho": cfg.rho},
    )
    return inst, truth


def ising_state_table(p: int) -> np.ndarray:
    """All 2^p configurations as +-1 rows, state i = bits of i."""
    codes = np.arange(1 << p, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(p)) & 1
    return (2 * bits - 1).astype(np.int8)


def ising_exact_distribution(theta_flat: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact state table and probabilities for the given couplings.

    Probability of a state z is exp(sum_{k<l} theta_kl z_k z_l) normalized
    over all 2^p states.
    """
    pairs = upper_pairs(p)
    theta_flat = np.asarray(theta_flat, dtype=float)
    if theta_flat.shape != (len(pairs),):
        raise ValueError(f"expected {len(pairs)} couplings, got {theta_flat.shape}")
    states = ising_state_table(p)
    energies = np.empty(states.shape[0])
    for lo in range(0, states.shape[0], _ENUM_CHUNK):
        chunk = states[lo:lo + _ENUM_CHUNK].astype(float)
        energies[lo:lo + chunk.shape[0]] = (
            chunk[:, pairs[:, 0]] * chunk[:, pairs[:, 1]]
        ) @ theta_flat
    energies -= energies.max()
    weights = np.exp(energies)
    return states, weights / weights.sum()


def gen_ising(cfg: IsingGenConfig) -> tuple[ProblemInstance, TruthSpec]:
    """Exact-sampled network data with couplings of +-coupling_magnitude.

    The truth lives in the flattened upper-triangular coupling space of
    dimension p(p-1)/2, matching the objective's parameterization.
    """
    rng = np.random.default_rng(cfg.seed)
    dim = cfg.p * (cfg.p - 1) // 2
    support = SupportSet.from_iterable(
        rng.choice(dim, size=cfg.s_true, replace=False), dim
    )
    theta = np.zeros(dim)
    theta[support.as_array()] = cfg.coupling_magnitude * rng.choice(
        [-1.0, 1.0], size=cfg.s_true
    )
    theta_star = ParamVector(theta, support)

    states, probs = ising_exact_distribution(theta, cfg.p)
    picks = rng.choice(states.shape[0], size=cfg.n, p=probs)
    samples = states[picks].astype(float)

    truth = _truth_spec(dim, cfg.s_true, cfg.coupling_magnitude, support, theta_star)
    inst = ProblemInstance(
        model="ising",
        objective=IsingObjective(samples),
        truth=truth,
        n=cfg.n,
        seed=cfg.seed,
        meta={"p_nodes": cfg.p, "coupling": cfg.coupling_magnitude},
    )
    return inst, truth
