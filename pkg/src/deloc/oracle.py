"""Exact Gaussian ground truth for Langevin Monte Carlo experiments.

For a Gaussian target pi = N(0, A^{-1}) the LMC chain
x_{k+1} = (I - hA) x_k + sqrt(2h) xi is itself Gaussian, and its
stationary covariance solves the discrete Lyapunov equation

    S = (I - hA) S (I - hA) + 2h I.

For symmetric A the solution has the closed form S = (A (I - hA/2))^{-1};
the fixed-point iteration below is kept as an independent oracle for it.
Continuous-time (overdamped Langevin / OU) laws, Gaussian 2-Wasserstein
(Bures) and KL round out the ground-truth toolkit.

W_{2,linf} between Gaussians has no closed form and is deliberately
absent; it is estimated empirically in the metrics module.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GaussianLaw",
    "GaussianTarget",
    "lmc_stationary_law",
    "lyapunov_fixed_point",
    "lmc_transient_law",
    "ou_law",
    "marginal",
    "w2sq_gaussian",
    "kl_gaussian",
    "sample",
]

_PSD_CLIP = 1e-14
_PSD_REL = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianLaw:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        n = mean.shape[0]
        if cov.shape != (n, n):
            raise ValueError(f"cov shape {cov.shape} does not match mean length {n}")
        if not np.allclose(cov, cov.T, atol=1e-12, rtol=0):
            raise ValueError("covariance must be symmetric (tol 1e-12)")
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise ValueError("covariance must be positive definite")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)

def _psd_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric square root via eigendecomposition.  Eigenvalues are
    clipped at 1e-14; clipping more than 1e-10 relative mass is an error."""
    lam, Q = np.linalg.eigh(_sym(M))
    top = float(lam[-1]) if lam.size else 0.0
    clipped = np.clip(lam, _PSD_CLIP, None)
    if top > 0 and float(np.max(clipped - lam)) > _PSD_REL * top:
        raise ValueError(f"matrix is not PSD: min eigenvalue {lam[0]} vs scale {top}")
    return (Q * np.sqrt(clipped)) @ Q.T


@dataclass(frozen=True, eq=False)
class GaussianTarget:
    """Target N(0, A^{-1}) described by its precision matrix."""

    precision: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.precision, dtype=float))
        if not np.allclose(A, A.T, atol=1e-10, rtol=0):
            raise ValueError("precision must be symmetric")
        object.__setattr__(self, "precision", _sym(A))
        if self._eigs[0][0] <= 0:
            raise ValueError("precision must be positive definite")

    @cached_property
    def _eigs(self):
        lam, Q = np.linalg.eigh(self.precision)
        return lam, Q

    @property
    def alpha(self) -> float:
        return float(self._eigs[0][0])

    @property
    def beta(self) -> float:
        return float(self._eigs[0][-1])

    @property
    def dim(self) -> int:
        return self.precision.shape[0]

    def law(self) -> GaussianLaw:
        lam, Q = self._eigs
        return GaussianLaw(np.zeros(self.dim), _sym((Q / lam) @ Q.T))


def lmc_stationary_law(A, h: float) -> GaussianLaw:
    """Closed-form stationary law of LMC on N(0, A^{-1}):
    S_h = (A (I - hA/2))^{-1}, valid for 0 < h < 2 / lambda_max(A)."""
    tgt = A if isinstance(A, GaussianTarget) else GaussianTarget(A)
    lam, Q = tgt._eigs
    hmax = 2.0 / tgt.beta
    if not 0.0 < h < hmax:
        raise ValueError(
            f"step h={h} outside the stability region (0, 2/lambda_max) = (0, {hmax})"
        )
    cov = _sym((Q / (lam * (1.0 - 0.5 * h * lam))) @ Q.T)
    return GaussianLaw(np.zeros(tgt.dim), cov)


def lyapunov_fixed_point(A, h: float, tol: float = 1e-14, max_iter: int = 200_000) -> np.ndarray:
    """Independent oracle for the stationary covariance: iterate
    S <- (I - hA) S (I - hA) + 2h I until the spectral norm of the update
    falls below tol (relative)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    M = np.eye(n) - h * A
    if np.max(np.abs(np.linalg.eigvalsh(_sym(M)))) >= 1.0:
        raise ValueError("fixed-point iteration diverges: |1 - h lambda| >= 1 for some mode")
    S = 2.0 * h * np.eye(n)
    for _ in range(max_iter):
        S_next = M @ S @ M.T + 2.0 * h * np.eye(n)
        delta = np.linalg.norm(S_next - S, ord=2)
        S = _sym(S_next)
        if delta <= tol * max(1.0, np.linalg.norm(S, ord=2)):
            return S
    raise RuntimeError(f"Lyapunov iteration did not reach tol={tol} in {max_iter} steps")


def lmc_transient_law(A, h: float, k: int, law0: GaussianLaw) -> GaussianLaw:
    """Exact law of the LMC chain after k steps from a Gaussian start:
    mean_{j+1} = (I - hA) mean_j, cov_{j+1} = (I-hA) cov_j (I-hA) + 2h I."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    M = np.eye(A.shape[0]) - h * A
    mean = law0.mean.copy()
    cov = law0.cov.copy()
    for _ in range(k):
        mean = M @ mean
        cov = _sym(M @ cov @ M.T + 2.0 * h * np.eye(A.shape[0]))
    return GaussianLaw(mean, cov)


def ou_law(A, cov0, t: float, mean0=None) -> GaussianLaw:
    """Law at time t of dX = -A X dt + sqrt(2) dW from N(mean0, cov0):
    mean e^{-At} m0, covariance e^{-At} cov0 e^{-At} + A^{-1}(I - e^{-2At})."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    tgt = A if isinstance(A, GaussianTarget) else GaussianTarget(A)
    lam, Q = tgt._eigs
    cov0 = np.atleast_2d(np.asarray(cov0, dtype=float))
    n = tgt.dim
    mean0 = np.zeros(n) if mean0 is None else np.asarray(mean0, dtype=float)
    E = (Q * np.exp(-lam * t)) @ Q.T
    eq = (Q * ((1.0 - np.exp(-2.0 * lam * t)) / lam)) @ Q.T
    return GaussianLaw(E @ mean0, _sym(E @ cov0 @ E + eq))


def marginal(law: GaussianLaw, u) -> GaussianLaw:
    idx = sorted(set(int(i) for i in u))
    if not idx:
        raise ValueError("marginal over the empty set is undefined")
    if idx[0] < 0 or idx[-1] >= law.dim:
        raise ValueError(f"subset {idx} out of range for dimension {law.dim}")
    return GaussianLaw(law.mean[idx], law.cov[np.ix_(idx, idx)])


def w2sq_gaussian(law1: GaussianLaw, law2: GaussianLaw) -> float:
    """Squared 2-Wasserstein distance (Bures):
    |m1 - m2|^2 + tr(S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2})."""
    if law1.dim != law2.dim:
        raise ValueError(f"dimension mismatch: {law1.dim} vs {law2.dim}")
    d2 = float(np.sum((law1.mean - law2.mean) ** 2))
    root2 = _psd_sqrt(law2.cov)
    inner = _sym(root2 @ law1.cov @ root2)
    lam = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    cross = float(np.sum(np.sqrt(lam)))
    val = d2 + float(np.trace(law1.cov) + np.trace(law2.cov)) - 2.0 * cross
    return max(val, 0.0)


def kl_gaussian(law1: GaussianLaw, law2: GaussianLaw) -> float:
    """KL(law1 || law2) for Gaussians:
    (tr(S2^{-1} S1) - k + (m2-m1)' S2^{-1} (m2-m1) + lndet S2 - lndet S1) / 2."""
    if law1.dim != law2.dim:
        raise ValueError(f"dimension mismatch: {law1.dim} vs {law2.dim}")
    k = law1.dim
    try:
        L = np.linalg.cholesky(law2.cov)
    except np.linalg.LinAlgError:
        raise ValueError("law2 covariance is not positive definite") from None
    sol = np.linalg.solve(law2.cov, law1.cov)
    dm = law2.mean - law1.mean
    quad = float(dm @ np.linalg.solve(law2.cov, dm))
    _, ld1 = np.linalg.slogdet(law1.cov)
    ld2 = 2.0 * float(np.sum(np.log(np.diag(L))))
    val = 0.5 * (float(np.trace(sol)) - k + quad + ld2 - ld1)
    return max(val, 0.0)


def sample(law: GaussianLaw, m: int, rng: np.random.Generator) -> np.ndarray:
    """m exact draws, shape (m, dim), via Cholesky of the covariance."""
    L = np.linalg.cholesky(law.cov)
    return law.mean + rng.standard_normal((m, law.dim)) @ L.T
