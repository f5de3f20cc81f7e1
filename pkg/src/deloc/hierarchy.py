"""Set-indexed operator hierarchy for entropy bounds.

Functions F map coordinate subsets (bitmasks) to reals.  Two generators
act on them:

  sparse:  (A F)(u) = rate * (F(N(u)) - F(u)),      rate = gamma beta^2/(alpha eps)
           (N F)(u) = F(N(u))
  weak:    (A F)(u) = rho * sum_{w cap u != 0} L_w (F(w u u) - F(u)),
           (N F)(u) = sum_{w cap u != 0} L_w F(w),  rho = gamma M0/(alpha eps)

In the sparse case A and N commute and e^{tA}F(u) = E F(N_{Lambda(t)}(u))
collapses to an exact finite Poisson series, because neighbourhoods
stabilize.  In the weak case the operators do not commute; e^{tA} is
evaluated by uniformization on the reachable lattice of growing subsets.

certified_entropy_trajectory evaluates the exact discrete-step entropy
recursion

  sparse: H_kh <= (e^{-ah} I + q N^2)^k e^{khA} H_0
                  + (1-e^{-ah})/a * sum_j (e^{-ah} I + q N^2)^j e^{(j+1)hA} N G
  weak:   H_kh <= (e^{-ah} e^{hA} + q e^{hA} N^2)^k H_0
                  + (1-e^{-ah})/a * sum_j (...)^j e^{hA} G

with no closed-form relaxation, so it sits between the exact trajectory
and the closed-form dynamic envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from .graph import InteractionGraph
from .potential import StructuredPotential
from .subsets import as_mask, indices_from, size

__all__ = [
    "SubsetFunction",
    "SparseGenerator",
    "WeakGenerator",
    "SparseParams",
    "WeakParams",
    "apply_n_sparse",
    "apply_a_sparse",
    "apply_n_weak",
    "apply_a_weak",
    "semigroup_sparse",
    "semigroup_weak",
    "commutation_residual_sparse",
    "commutation_residual_weak",
    "certified_entropy_trajectory",
    "certified_entropy_curve",
    "weights_from_potential",
    "weak_interaction_constants",
]

MAX_WEAK_STATES = 1 << 16
POISSON_TAIL = 1e-12


class SubsetFunction:
    """Memoized real function on subset bitmasks."""

    def __init__(self, fn: Callable[[int], float], name: str = ""):
        self._fn = fn
        self.name = name
        self._memo: dict[int, float] = {}

    def __call__(self, mask: int) -> float:
        v = self._memo.get(mask)
        if v is None:
            v = float(self._fn(mask))
            self._memo[mask] = v
        return v

    @classmethod
    def size(cls) -> "SubsetFunction":
        return cls(lambda m: float(size(m)), "size")

    @classmethod
    def constant(cls, c: float) -> "SubsetFunction":
        return cls(lambda m: c, f"const:{c}")

    @classmethod
    def from_indices(cls, fn, name: str = "") -> "SubsetFunction":
        return cls(lambda m: fn(indices_from(m)), name)


@dataclass(frozen=True)
class SparseGenerator:
    graph: InteractionGraph
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"rate must be >= 0, got {self.rate}")

    @classmethod
    def from_params(cls, graph, alpha, beta, gamma, eps) -> "SparseGenerator":
        if not 0 < eps < 1:
            raise ValueError(f"eps must lie in (0,1), got {eps}")
        return cls(graph, gamma * beta**2 / (alpha * eps))


@dataclass(frozen=True)
class WeakGenerator:
    """weights = ((support_mask, L_w), ...) over factors with L_w > 0."""

    weights: tuple[tuple[int, float], ...]
    rate_factor: float

    def __post_init__(self):
        if self.rate_factor < 0:
            raise ValueError(f"rate factor must be >= 0, got {self.rate_factor}")
        for w, L in self.weights:
            if w == 0:
                raise ValueError("empty support in weight list")
            if L <= 0:
                raise ValueError(f"weights must be positive, got {L}")

    @classmethod
    def from_params(cls, weights, alpha, gamma, M0, eps) -> "WeakGenerator":
        if not 0 < eps < 1:
            raise ValueError(f"eps must lie in (0,1), got {eps}")
        return cls(tuple(weights), gamma * M0 / (alpha * eps))


def weights_from_potential(pot: StructuredPotential) -> tuple[tuple[int, float], ...]:
    return tuple(
        (as_mask(t.support), t.lipschitz) for t in pot.active_terms
    )


def weak_interaction_constants(weights) -> tuple[float, float, float]:
    """(M0, M1, R1) recomputed from a weight list."""
    m0: dict[int, float] = {}
    m1: dict[int, float] = {}
    r1: dict[int, float] = {}
    for w, L in weights:
        k = size(w)
        for i in indices_from(w):
            m0[i] = m0.get(i, 0.0) + L
            m1[i] = m1.get(i, 0.0) + L * k
            if k >= 2:
                r1[i] = r1.get(i, 0.0) + L * (k - 1)
    if not m0:
        return 0.0, 0.0, 0.0
    return max(m0.values()), max(m1.values()), max(r1.values()) if r1 else 0.0


# -- pointwise operator applications ------------------------------------------


def apply_n_sparse(graph: InteractionGraph, F, u) -> float:
    return F(graph.neighborhood_mask(as_mask(u, graph.n), 1))


def apply_a_sparse(gen: SparseGenerator, F, u) -> float:
    m = as_mask(u, gen.graph.n)
    return gen.rate * (F(gen.graph.neighborhood_mask(m, 1)) - F(m))


def apply_n_weak(weights, F, u) -> float:
    m = as_mask(u)
    return sum(L * F(w) for w, L in weights if w & m)


def apply_a_weak(gen: WeakGenerator, F, u) -> float:
    m = as_mask(u)
    return gen.rate_factor * sum(L * (F(w | m) - F(m)) for w, L in gen.weights if w & m)


def commutation_residual_sparse(gen: SparseGenerator, F, u) -> float:
    """|ANF(u) - NAF(u)|; identically zero because N_1(N_1(u)) is all that
    either order evaluates."""
    AN = apply_a_sparse(gen, lambda v: apply_n_sparse(gen.graph, F, v), u)
    NA = apply_n_sparse(gen.graph, lambda v: apply_a_sparse(gen, F, v), u)
    return abs(AN - NA)


def commutation_residual_weak(gen: WeakGenerator, F, u) -> float:
    """|ANF(u) - NAF(u)| for the weak operators; generally nonzero."""
    AN = apply_a_weak(gen, lambda v: apply_n_weak(gen.weights, F, v), u)
    NA = apply_n_weak(gen.weights, lambda v: apply_a_weak(gen, F, v), u)
    return abs(AN - NA)


# -- semigroups ----------------------------------------------------------------


def semigroup_sparse(gen: SparseGenerator, t: float, F, u) -> float:
    """e^{tA}F(u) = E F(N_{Lambda(t)}(u)) as an exact finite series:
    sum_{j<J} pmf(j; rate t) F(N_j(u)) + P(Lambda >= J) F(N_J(u))."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    m = as_mask(u, gen.graph.n)
    chain = [gen.graph.neighborhood_mask(m, j) for j in range(gen.graph.stabilization_index(m) + 1)]
    J = len(chain) - 1
    mu = gen.rate * t
    total = 0.0
    for j in range(J):
        total += float(stats.poisson.pmf(j, mu)) * F(chain[j])
    total += float(stats.poisson.sf(J - 1, mu)) * F(chain[J])
    return total


def _weak_reachable(gen: WeakGenerator, u_mask: int, max_states: int, seed_supports: bool):
    """BFS closure of {u} (plus the supports when seeding) under
    v -> v | w for intersecting supports w.  Returns (states, index map)."""
    seeds = [u_mask]
    if seed_supports:
        seeds.extend(w for w, _ in gen.weights)
    states: list[int] = []
    index: dict[int, int] = {}
    stack = []
    for s in seeds:
        if s not in index:
            index[s] = len(states)
            states.append(s)
            stack.append(s)
    while stack:
        v = stack.pop()
        for w, _ in gen.weights:
            if w & v:
                nv = v | w
                if nv not in index:
                    if len(states) >= max_states:
                        raise ValueError(
                            f"reachable subset lattice exceeds {max_states} states"
                        )
                    index[nv] = len(states)
                    states.append(nv)
                    stack.append(nv)
    return states, index


def _weak_transitions(gen: WeakGenerator, states, index):
    """Flat (src, dst, rate) arrays of the jump rates v -> v | w."""
    src, dst, rate = [], [], []
    for i, v in enumerate(states):
        for w, L in gen.weights:
            if w & v and (v | w) != v:
                src.append(i)
                dst.append(index[v | w])
                rate.append(gen.rate_factor * L)
    return (
        np.asarray(src, dtype=np.intp),
        np.asarray(dst, dtype=np.intp),
        np.asarray(rate, dtype=float),
    )


def _uniformized_apply(src, dst, rate, theta, nstates):
    def q_apply(v: np.ndarray) -> np.ndarray:
        if src.size == 0:
            return np.zeros_like(v)
        return np.bincount(src, weights=rate * (v[dst] - v[src]), minlength=nstates)

    def p_apply(v: np.ndarray) -> np.ndarray:
        return v + q_apply(v) / theta

    return p_apply


def _expm_series(p_apply, theta, t, f, tail_tol):
    """e^{tQ} f by uniformization: sum_m pmf(m; theta t) P^m f, truncated
    when the remaining Poisson mass drops below tail_tol."""
    mu = theta * t
    M = int(stats.poisson.isf(tail_tol, mu)) + 1
    pmf = stats.poisson.pmf(np.arange(M + 1), mu)
    acc = pmf[0] * f
    v = f
    for m in range(1, M + 1):
        v = p_apply(v)
        acc = acc + pmf[m] * v
    return acc


def semigroup_weak(
    gen: WeakGenerator,
    t: float,
    F,
    u,
    tail_tol: float = POISSON_TAIL,
    max_states: int = MAX_WEAK_STATES,
) -> float:
    """e^{tA}F(u) for the weak generator by uniformization over the
    reachable growing-subset lattice."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    m = as_mask(u)
    states, index = _weak_reachable(gen, m, max_states, seed_supports=False)
    src, dst, rate = _weak_transitions(gen, states, index)
    exit_rates = np.bincount(src, weights=rate, minlength=len(states)) if src.size else np.zeros(len(states))
    theta = float(exit_rates.max()) if exit_rates.size else 0.0
    f = np.array([F(s) for s in states])
    if theta == 0.0 or t == 0.0:
        return float(f[index[m]])
    p_apply = _uniformized_apply(src, dst, rate, theta, len(states))
    out = _expm_series(p_apply, theta, t, f, tail_tol)
    return float(out[index[m]])


# -- certified entropy trajectories --------------------------------------------


@dataclass(frozen=True)
class SparseParams:
    """Analytic constants plus a growth certificate: polynomial (p set) or
    exponential (r set).  epsilon defaults to 1/2 for polynomial growth and
    to the midpoint 1/2 + gamma beta^2 (r-1)/(2 alpha^2) for exponential."""

    alpha: float
    beta: float
    gamma: float
    c: float
    p: float | None = None
    r: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if (self.p is None) == (self.r is None):
            raise ValueError("set exactly one of p (polynomial) or r (exponential)")
        if self.alpha <= 0 or self.beta < self.alpha or self.gamma <= 0 or self.c < 1:
            raise ValueError("need 0 < alpha <= beta, gamma > 0, c >= 1")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0,1), got {self.epsilon}")

    @property
    def mode(self) -> str:
        return "polynomial" if self.p is not None else "exponential"

    def resolved_epsilon(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        if self.mode == "polynomial":
            return 0.5
        eps = 0.5 + self.gamma * self.beta**2 * (self.r - 1.0) / (2.0 * self.alpha**2)
        if eps >= 1.0:
            raise ValueError(
                f"default epsilon = {eps} >= 1: growth rate r={self.r} is supercritical"
            )
        return eps

    def h_star(self) -> float:
        if self.mode == "polynomial":
            return self.alpha / (4.0 * self.c * self.beta**2)
        eta = 1.0 - (self.gamma * self.beta**2 / self.alpha**2) * (self.r - 1.0)
        if eta <= 0:
            raise ValueError(f"supercritical growth rate r={self.r}: eta={eta} <= 0")
        return self.alpha * eta**1.5 / (5.0 * self.beta**2 * self.c)


@dataclass(frozen=True)
class WeakParams:
    alpha: float
    gamma: float
    epsilon: float | None = None

    def __post_init__(self):
        if self.alpha <= 0 or self.gamma <= 0:
            raise ValueError("need alpha > 0 and gamma > 0")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0,1), got {self.epsilon}")

    def resolved_epsilon(self, M0: float, R1: float) -> float:
        if self.epsilon is not None:
            return self.epsilon
        eps = 0.5 + self.gamma * M0 * R1 / (2.0 * self.alpha**2)
        if eps >= 1.0:
            raise ValueError(
                f"default epsilon = {eps} >= 1: weak-interaction condition fails"
            )
        return eps

    def h_star(self, M0: float, M1: float, R1: float) -> float:
        eta = 1.0 - self.gamma * M0 * R1 / self.alpha**2
        if eta <= 0:
            raise ValueError(f"weak-interaction condition fails: eta={eta} <= 0")
        return self.alpha * eta**1.5 / (5.0 * M0 * M1)


def _sparse_chain_semigroup(v: np.ndarray, mu: float) -> np.ndarray:
    """(e^{tA}F)(N_m(u)) on the chain representation: index-shift mixture
    with the Poisson tail absorbed at the stabilized end."""
    J = v.shape[0] - 1
    out = np.empty_like(v)
    for m in range(J + 1):
        span = J - m
        acc = 0.0
        if span > 0:
            pmf = stats.poisson.pmf(np.arange(span), mu)
            acc = float(pmf @ v[m:J])
        acc += float(stats.poisson.sf(span - 1, mu)) * v[J]
        out[m] = acc
    return out


def _shift(v: np.ndarray, s: int) -> np.ndarray:
    J = v.shape[0] - 1
    idx = np.minimum(np.arange(J + 1) + s, J)
    return v[idx]


def certified_entropy_curve(case: str, params, structure, H0, h: float, k_max: int, u) -> np.ndarray:
    """Exact RHS of the operator iteration for k = 0 .. k_max.

    case "sparse": structure is an InteractionGraph, params a SparseParams.
    case "weak":   structure is a weight list ((mask, L), ...) or a
                   StructuredPotential, params a WeakParams.
    H0 is a callable on subset bitmasks (monotone under inclusion).
    Requires h <= h* of the invoked theorem.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    if h <= 0:
        raise ValueError(f"h must be > 0, got {h}")
    if case == "sparse":
        return _certified_sparse(params, structure, H0, h, k_max, u)
    if case == "weak":
        return _certified_weak(params, structure, H0, h, k_max, u)
    raise ValueError(f"unknown case {case!r} (use 'sparse' or 'weak')")


def certified_entropy_trajectory(case: str, params, structure, H0, h: float, k: int, u) -> float:
    return float(certified_entropy_curve(case, params, structure, H0, h, k, u)[k])


def _certified_sparse(params: SparseParams, graph: InteractionGraph, H0, h, k_max, u):
    h_star = params.h_star()
    if h > h_star * (1.0 + 1e-12):
        raise ValueError(f"h={h} exceeds h* = {h_star} of the matching theorem")
    eps = params.resolved_epsilon()
    alpha, beta = params.alpha, params.beta
    lam = params.gamma * beta**2 / (alpha * eps)

    m = as_mask(u, graph.n)
    J = graph.stabilization_index(m)
    chain = [graph.neighborhood_mask(m, j) for j in range(J + 1)]
    h0 = np.array([H0(cm) for cm in chain])
    sizes = np.array([float(size(cm)) for cm in chain])

    a = math.exp(-alpha * h)
    q = (2.0 * beta**4 * h**2 / (alpha**2 * (1.0 - eps))) * (1.0 - a)
    g = (beta**2 * h / (1.0 - eps)) * (beta * h + 1.0) * sizes
    ng = _shift(g, 1)
    coeff = (1.0 - a) / alpha
    mu_h = lam * h

    def B(v):
        return a * v + q * _shift(v, 2)

    out = np.empty(k_max + 1)
    out[0] = h0[0]
    # first term: w_k = (B e^{hA})^k H0 = B^k e^{khA} H0 (operators commute)
    w = h0.copy()
    # second term: y_j = B^j e^{(j+1)hA} N G, accumulated
    y = None
    acc2 = 0.0
    for k in range(1, k_max + 1):
        w = B(_sparse_chain_semigroup(w, mu_h))
        y = _sparse_chain_semigroup(ng, mu_h) if y is None else B(_sparse_chain_semigroup(y, mu_h))
        acc2 += y[0]
        out[k] = w[0] + coeff * acc2
    return out


def _certified_weak(params: WeakParams, structure, H0, h, k_max, u):
    weights = (
        weights_from_potential(structure)
        if isinstance(structure, StructuredPotential)
        else tuple(structure)
    )
    M0, M1, R1 = weak_interaction_constants(weights)
    if M0 <= 0:
        raise ValueError("weight list has no active factors")
    h_star = params.h_star(M0, M1, R1)
    if h > h_star * (1.0 + 1e-12):
        raise ValueError(f"h={h} exceeds h* = {h_star} of the matching theorem")
    eps = params.resolved_epsilon(M0, R1)
    alpha = params.alpha
    gen = WeakGenerator.from_params(weights, alpha, params.gamma, M0, eps)

    m = as_mask(u)
    states, index = _weak_reachable(gen, m, MAX_WEAK_STATES, seed_supports=True)
    iu = index[m]
    nstates = len(states)
    src, dst, rate = _weak_transitions(gen, states, index)
    exit_rates = np.bincount(src, weights=rate, minlength=nstates) if src.size else np.zeros(nstates)
    theta = float(exit_rates.max()) if exit_rates.size else 0.0

    # N as flat (state, support-state, L) triples
    nsrc, ndst, nl = [], [], []
    for i, v in enumerate(states):
        for w, L in weights:
            if w & v:
                nsrc.append(i)
                ndst.append(index[w])
                nl.append(L)
    nsrc = np.asarray(nsrc, dtype=np.intp)
    ndst = np.asarray(ndst, dtype=np.intp)
    nl = np.asarray(nl, dtype=float)

    def n_apply(v):
        if nsrc.size == 0:
            return np.zeros_like(v)
        return np.bincount(nsrc, weights=nl * v[ndst], minlength=nstates)

    if theta == 0.0:
        u_apply = lambda v: v
    else:
        p_apply = _uniformized_apply(src, dst, rate, theta, nstates)
        u_apply = lambda v: _expm_series(p_apply, theta, h, v, POISSON_TAIL)

    a = math.exp(-alpha * h)
    q = (2.0 * h**2 * M0**2 / (alpha**2 * (1.0 - eps))) * (1.0 - a)
    coeff = (1.0 - a) / alpha

    sizes = np.array([float(size(s)) for s in states])
    ns = n_apply(sizes)
    g = (h * M0 / (1.0 - eps)) * ((M0 / alpha) * h * n_apply(ns) + ns)

    def B(v):
        # e^{-ah} e^{hA} v + q e^{hA} N^2 v = e^{hA}(a v + q N^2 v)
        return u_apply(a * v + q * n_apply(n_apply(v)))

    h0 = np.array([H0(s) for s in states])
    out = np.empty(k_max + 1)
    out[0] = h0[iu]
    w = h0.copy()
    y = None
    acc2 = 0.0
    for k in range(1, k_max + 1):
        w = B(w)
        y = u_apply(g) if y is None else B(y)
        acc2 += y[iu]
        out[k] = w[iu] + coeff * acc2
    return out
