"""Structured potentials V(x) = sum_u V_u(x_u) over subsets of coordinates.

Each factor V_u comes with a Lipschitz weight L_u for its gradient.  The
weights drive everything downstream: interaction constants (M_p, R_p),
the interaction graph, and the bound machinery.  Factors are either
explicit quadratic forms (matrix on the support coordinates) or scalar
callables with an analytic gradient.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "FactorTerm",
    "SmoothnessParams",
    "InteractionConstants",
    "StructuredPotential",
    "PairwiseSpec",
    "quadratic_term",
    "callable_term",
    "gaussian_potential",
    "chain_pairwise",
    "grid_pairwise",
    "mean_field",
    "tridiagonal_precision",
    "load_potential",
    "potential_from_dict",
    "potential_to_dict",
]

_SYM_TOL = 1e-12
_LIPSCHITZ_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FactorTerm:
    """A single factor V_u acting on the coordinates in `support`.

    kind is "quadratic" (V_u(z) = z' M z / 2, gradient M z) or "callable"
    (user-supplied value/gradient on the support coordinates).  L_u = 0 is
    permitted only for factors with constant gradient; for quadratic terms
    this is automatic since L_u equals the operator norm of M.
    """

    support: tuple[int, ...]
    kind: str
    lipschitz: float
    matrix: np.ndarray | None = None
    value_fn: Callable[[np.ndarray], float] | None = None
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = ""

    def __post_init__(self):
        if len(self.support) == 0:
            raise ValueError("factor support must be nonempty")
        if list(self.support) != sorted(set(self.support)):
            raise ValueError(f"support must be sorted and duplicate-free, got {self.support}")
        if self.lipschitz < 0:
            raise ValueError(f"lipschitz weight must be >= 0, got {self.lipschitz}")
        if self.kind not in ("quadratic", "callable"):
            raise ValueError(f"unknown factor kind {self.kind!r}")

    def value(self, x_u: np.ndarray) -> float:
        if self.kind == "quadratic":
            return 0.5 * float(x_u @ self.matrix @ x_u)
        return float(self.value_fn(x_u))

    def grad(self, x_u: np.ndarray) -> np.ndarray:
        if self.kind == "quadratic":
            return self.matrix @ x_u
        return np.asarray(self.grad_fn(x_u), dtype=float)


def quadratic_term(support: Sequence[int], matrix, lipschitz: float | None = None) -> FactorTerm:
    """Quadratic factor V_u(z) = z' M z / 2 with L_u = ||M||_op.

    If `lipschitz` is given it must agree with the operator norm to 1e-10.
    """
    support = tuple(sorted(support))
    M = np.asarray(matrix, dtype=float)
    if M.shape != (len(support), len(support)):
        raise ValueError(f"matrix shape {M.shape} does not match support size {len(support)}")
    if not np.allclose(M, M.T, atol=_SYM_TOL, rtol=0):
        raise ValueError("quadratic factor matrix must be symmetric")
    M = 0.5 * (M + M.T)
    opnorm = float(np.max(np.abs(np.linalg.eigvalsh(M)))) if len(support) else 0.0
    if lipschitz is not None and abs(lipschitz - opnorm) > _LIPSCHITZ_TOL * max(1.0, opnorm):
        raise ValueError(
            f"declared lipschitz {lipschitz} inconsistent with operator norm {opnorm}"
        )
    return FactorTerm(support=support, kind="quadratic", lipschitz=opnorm, matrix=M)


def callable_term(support, value_fn, grad_fn, lipschitz: float, label: str = "") -> FactorTerm:
    return FactorTerm(
        support=tuple(sorted(support)),
        kind="callable",
        lipschitz=float(lipschitz),
        value_fn=value_fn,
        grad_fn=grad_fn,
        label=label,
    )


@dataclass(frozen=True)
class SmoothnessParams:
    """Analytic inputs: LSI constant alpha, gradient Lipschitz constant beta
    (defaults to M_0 when omitted), semigroup commutation constant gamma,
    and optional off-diagonal l_inf bound alpha0 for the one-step theorem."""

    alpha: float
    beta: float | None = None
    gamma: float = 1.0
    alpha0: float | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.beta is not None and self.beta < self.alpha:
            raise ValueError(f"need alpha <= beta, got alpha={self.alpha}, beta={self.beta}")
        if self.alpha0 is not None and self.alpha0 < 0:
            raise ValueError("alpha0 must be >= 0")


@dataclass(frozen=True)
class InteractionConstants:
    """M_p = max_i sum_{w ni i} L_w |w|^p and
    R_p = max_i sum_{w ni i, |w| >= 2} L_w (|w|-1)^p, for p in {0, 1}."""

    M0: float
    M1: float
    R0: float
    R1: float


@dataclass(frozen=True, eq=False)
class StructuredPotential:
    n: int
    terms: tuple[FactorTerm, ...]
    smoothness: SmoothnessParams

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"dimension must be positive, got {self.n}")
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.support[-1] >= self.n:
                raise ValueError(f"support {t.support} out of range for n={self.n}")
        if self.smoothness.beta is None:
            m0 = self.interaction_constants.M0
            if m0 < self.smoothness.alpha:
                raise ValueError(
                    f"default beta=M0={m0} is below alpha={self.smoothness.alpha}; "
                    "pass beta explicitly"
                )

    # -- evaluation ---------------------------------------------------------

    def value(self, x) -> float:
        x = self._check_point(x)
        total = 0.0
        for t in self.terms:
            total += t.value(x[list(t.support)])
        return total

    def gradient(self, x) -> np.ndarray:
        x = self._check_point(x)
        if self.quadratic_matrix is not None:
            return self.quadratic_matrix @ x
        out = np.zeros(self.n)
        for t in self.terms:
            idx = list(t.support)
            out[idx] += t.grad(x[idx])
        return out

    def partial_gradient(self, x, u) -> np.ndarray:
        """Restriction of the full gradient to the coordinates in u."""
        g = self.gradient(x)
        idx = sorted(set(u))
        if idx and (idx[0] < 0 or idx[-1] >= self.n):
            raise ValueError(f"subset {idx} out of range for n={self.n}")
        return g[idx]

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"point shape {x.shape} does not match dimension {self.n}")
        return x

    # -- derived structure --------------------------------------------------

    @cached_property
    def active_terms(self) -> tuple[FactorTerm, ...]:
        """Factors with L_u > 0; the rest are invisible to graph and constants."""
        return tuple(t for t in self.terms if t.lipschitz > 0)

    @cached_property
    def interaction_constants(self) -> InteractionConstants:
        m0 = np.zeros(self.n)
        m1 = np.zeros(self.n)
        r0 = np.zeros(self.n)
        r1 = np.zeros(self.n)
        for t in self.active_terms:
            w = len(t.support)
            for i in t.support:
                m0[i] += t.lipschitz
                m1[i] += t.lipschitz * w
                if w >= 2:
                    r0[i] += t.lipschitz
                    r1[i] += t.lipschitz * (w - 1)
        return InteractionConstants(
            M0=float(m0.max()) if self.n else 0.0,
            M1=float(m1.max()) if self.n else 0.0,
            R0=float(r0.max()) if self.n else 0.0,
            R1=float(r1.max()) if self.n else 0.0,
        )

    @property
    def beta(self) -> float:
        """Effective gradient Lipschitz constant (explicit beta or M_0)."""
        if self.smoothness.beta is not None:
            return self.smoothness.beta
        return self.interaction_constants.M0

    def weak_condition(self) -> tuple[bool, float]:
        """Check gamma * M0 * R1 < alpha^2; returns (holds, eta)."""
        c = self.interaction_constants
        s = self.smoothness
        eta = 1.0 - s.gamma * c.M0 * c.R1 / s.alpha**2
        return eta > 0.0, eta

    @cached_property
    def quadratic_matrix(self) -> np.ndarray | None:
        """Assembled n-by-n matrix A with V(x) = x'Ax/2 when every factor is
        quadratic, else None.  Lets samplers and oracles take the fast path."""
        if any(t.kind != "quadratic" for t in self.terms):
            return None
        A = np.zeros((self.n, self.n))
        for t in self.terms:
            idx = np.asarray(t.support)
            A[np.ix_(idx, idx)] += t.matrix
        return A

    def content_hash(self) -> str:
        """Hash of the structural description (supports, kinds, weights,
        matrices).  Callable bodies are identified by their label only."""
        payload = {
            "n": self.n,
            "smoothness": {
                "alpha": self.smoothness.alpha,
                "beta": self.smoothness.beta,
                "gamma": self.smoothness.gamma,
                "alpha0": self.smoothness.alpha0,
            },
            "terms": [
                {
                    "support": t.support,
                    "kind": t.kind,
                    "lipschitz": t.lipschitz,
                    "matrix": None if t.matrix is None else np.round(t.matrix, 12).tolist(),
                    "label": t.label,
                }
                for t in self.terms
            ],
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


# -- pairwise specification --------------------------------------------------


@dataclass(frozen=True, eq=False)
class PairwiseSpec:
    """Pairwise potential V(x) = sum_i V_i(x_i) + sum_{i<j} V_ij(x_i - x_j).

    `confine_bounds[i]` is sup|V_i''| and `interaction_bounds[i, j]` is
    sup|V_ij''| (symmetric, zero diagonal).  With weights L_i = sup|V_i''|
    and L_ij = sup|V_ij''| the constants reduce to

        M0 = max_i (||V_i''|| + sum_{j != i} ||V_ij''||),
        R1 = max_i sum_{j != i} ||V_ij''||.

    Scalar callables are optional; without them the spec is a pure
    constants container.
    """

    n: int
    confine_bounds: np.ndarray
    interaction_bounds: np.ndarray
    confine_fns: tuple | None = None  # ((v_i, dv_i), ...) scalar callables
    interaction_fns: dict | None = None  # {(i, j): (v_ij, dv_ij)} for i < j

    def __post_init__(self):
        cb = np.asarray(self.confine_bounds, dtype=float)
        ib = np.asarray(self.interaction_bounds, dtype=float)
        if cb.shape != (self.n,):
            raise ValueError(f"confine_bounds shape {cb.shape}, expected ({self.n},)")
        if ib.shape != (self.n, self.n):
            raise ValueError(f"interaction_bounds shape {ib.shape}, expected square")
        if not np.allclose(ib, ib.T, atol=_SYM_TOL, rtol=0):
            raise ValueError("interaction_bounds must be symmetric")
        if np.any(np.diag(ib) != 0):
            raise ValueError("interaction_bounds diagonal must be zero")
        if np.any(cb < 0) or np.any(ib < 0):
            raise ValueError("curvature bounds must be >= 0")
        object.__setattr__(self, "confine_bounds", cb)
        object.__setattr__(self, "interaction_bounds", 0.5 * (ib + ib.T))

    def interaction_constants(self) -> InteractionConstants:
        row = self.interaction_bounds.sum(axis=1)
        return InteractionConstants(
            M0=float((self.confine_bounds + row).max()),
            M1=float((self.confine_bounds + 2.0 * row).max()),
            R0=float(row.max()),
            R1=float(row.max()),
        )

    @classmethod
    def quadratic(cls, confine, coupling) -> "PairwiseSpec":
        """V_i(s) = confine[i] s^2 / 2 and V_ij(s) = coupling[i, j] s^2 / 2."""
        confine = np.asarray(confine, dtype=float)
        coupling = np.asarray(coupling, dtype=float)
        n = confine.shape[0]
        confine_fns = tuple(
            (lambda s, a=a: 0.5 * a * s * s, lambda s, a=a: a * s) for a in confine
        )
        interaction_fns = {
            (i, j): (
                lambda s, c=coupling[i, j]: 0.5 * c * s * s,
                lambda s, c=coupling[i, j]: c * s,
            )
            for i in range(n)
            for j in range(i + 1, n)
            if coupling[i, j] != 0
        }
        return cls(
            n=n,
            confine_bounds=np.abs(confine),
            interaction_bounds=np.abs(coupling),
            confine_fns=confine_fns,
            interaction_fns=interaction_fns,
        )

    def to_structured(self, smoothness: SmoothnessParams) -> StructuredPotential:
        if self.confine_fns is None:
            raise ValueError("scalar callables required to build an evaluable potential")
        terms = []
        for i, (v, dv) in enumerate(self.confine_fns):
            terms.append(
                callable_term(
                    (i,),
                    lambda z, v=v: v(z[0]),
                    lambda z, dv=dv: np.array([dv(z[0])]),
                    lipschitz=float(self.confine_bounds[i]),
                    label=f"confine:{i}",
                )
            )
        for (i, j), (v, dv) in sorted((self.interaction_fns or {}).items()):
            terms.append(
                callable_term(
                    (i, j),
                    lambda z, v=v: v(z[0] - z[1]),
                    lambda z, dv=dv: np.array([dv(z[0] - z[1]), -dv(z[0] - z[1])]),
                    lipschitz=float(self.interaction_bounds[i, j]),
                    label=f"pair:{i}-{j}",
                )
            )
        return StructuredPotential(n=self.n, terms=tuple(terms), smoothness=smoothness)


# -- builders ----------------------------------------------------------------


def tridiagonal_precision(n: int, diag: float = 2.0, off: float = -0.5) -> np.ndarray:
    A = np.zeros((n, n))
    np.fill_diagonal(A, diag)
    idx = np.arange(n - 1)
    A[idx, idx + 1] = off
    A[idx + 1, idx] = off
    return A


def _gaussian_terms(A: np.ndarray) -> list[FactorTerm]:
    """Decompose x'Ax/2 into singleton terms A_ii x_i^2/2 and pair terms
    A_ij x_i x_j, so the interaction graph has an edge exactly where A_ij != 0."""
    n = A.shape[0]
    terms = []
    for i in range(n):
        if A[i, i] != 0.0:
            terms.append(quadratic_term((i,), [[A[i, i]]]))
    for i in range(n):
        for j in range(i + 1, n):
            if A[i, j] != 0.0:
                terms.append(quadratic_term((i, j), [[0.0, A[i, j]], [A[i, j], 0.0]]))
    return terms


def _gaussian_smoothness(A: np.ndarray, gamma: float, alpha0: float | None) -> SmoothnessParams:
    eigs = np.linalg.eigvalsh(0.5 * (A + A.T))
    if eigs[0] <= 0:
        raise ValueError(f"precision matrix must be positive definite, lambda_min={eigs[0]}")
    return SmoothnessParams(
        alpha=float(eigs[0]), beta=float(eigs[-1]), gamma=gamma, alpha0=alpha0
    )


def gaussian_potential(A, gamma: float = 1.0, alpha0: float | None = None) -> StructuredPotential:
    """Gaussian target N(0, A^{-1}) as a structured potential.

    alpha = lambda_min(A) (exact log-Sobolev constant), beta = lambda_max(A).
    """
    A = np.asarray(A, dtype=float)
    if not np.allclose(A, A.T, atol=1e-10, rtol=0):
        raise ValueError("precision matrix must be symmetric")
    A = 0.5 * (A + A.T)
    return StructuredPotential(
        n=A.shape[0], terms=tuple(_gaussian_terms(A)), smoothness=_gaussian_smoothness(A, gamma, alpha0)
    )


def _pair_coupling_matrix(c: float) -> list[list[float]]:
    # (x_i - x_j)^2 c / 2 as a quadratic form
    return [[c, -c], [-c, c]]


def _assembled_pair_potential(n, singleton_coefs, pairs, gamma) -> StructuredPotential:
    terms = []
    A = np.zeros((n, n))
    for i, a in enumerate(singleton_coefs):
        if a != 0.0:
            terms.append(quadratic_term((i,), [[a]]))
            A[i, i] += a
    for (i, j), c in pairs:
        if c != 0.0:
            terms.append(quadratic_term((i, j), _pair_coupling_matrix(c)))
            A[i, i] += c
            A[j, j] += c
            A[i, j] -= c
            A[j, i] -= c
    return StructuredPotential(
        n=n, terms=tuple(terms), smoothness=_gaussian_smoothness(A, gamma, None)
    )


def chain_pairwise(
    n: int, confine: float = 1.0, couple: float = 0.5, gamma: float = 1.0
) -> StructuredPotential:
    """V(x) = sum_i confine x_i^2/2 + sum_i couple (x_i - x_{i+1})^2/2."""
    pairs = [((i, i + 1), couple) for i in range(n - 1)]
    return _assembled_pair_potential(n, [confine] * n, pairs, gamma)


def grid_pairwise(
    rows: int, cols: int, confine: float = 1.0, couple: float = 0.25, gamma: float = 1.0
) -> StructuredPotential:
    """Nearest-neighbour coupling on a rows-by-cols grid (row-major labels)."""
    n = rows * cols
    pairs = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                pairs.append(((v, v + 1), couple))
            if r + 1 < rows:
                pairs.append(((v, v + cols), couple))
    return _assembled_pair_potential(n, [confine] * n, pairs, gamma)


def mean_field(
    n: int, confine: float = 1.0, strength: float = 1.0, gamma: float = 1.0
) -> StructuredPotential:
    """All-pairs coupling with 1/n scaling:
    V(x) = sum_i confine x_i^2/2 + (strength/n) sum_{i<j} (x_i - x_j)^2/2."""
    pairs = [((i, j), strength / n) for i in range(n) for j in range(i + 1, n)]
    return _assembled_pair_potential(n, [confine] * n, pairs, gamma)


# -- JSON serialization -------------------------------------------------------


def potential_to_dict(pot: StructuredPotential) -> dict:
    terms = []
    for t in pot.terms:
        if t.kind != "quadratic":
            raise ValueError("only quadratic factors are JSON-serializable")
        terms.append(
            {
                "support": list(t.support),
                "kind": "quadratic",
                "params": {"matrix": t.matrix.tolist()},
                "lipschitz": t.lipschitz,
            }
        )
    s = pot.smoothness
    sm = {"alpha": s.alpha, "gamma": s.gamma}
    if s.beta is not None:
        sm["beta"] = s.beta
    if s.alpha0 is not None:
        sm["alpha0"] = s.alpha0
    return {"n": pot.n, "terms": terms, "smoothness": sm}


def _expand_builtin(name: str, support: list[int], params: dict) -> list[FactorTerm]:
    k = len(support)
    if name == "gaussian":
        if "precision" in params:
            A = np.asarray(params["precision"], dtype=float)
        elif "tridiagonal" in params:
            td = params["tridiagonal"]
            A = tridiagonal_precision(k, td.get("diag", 2.0), td.get("off", -0.5))
        else:
            raise ValueError("builtin:gaussian needs 'precision' or 'tridiagonal' params")
        if A.shape != (k, k):
            raise ValueError(f"precision shape {A.shape} does not match support size {k}")
        inner = _gaussian_terms(0.5 * (A + A.T))
    elif name == "chain-pairwise":
        pot = chain_pairwise(k, params.get("confine", 1.0), params.get("couple", 0.5))
        inner = list(pot.terms)
    elif name == "grid-pairwise":
        rows, cols = params["rows"], params["cols"]
        if rows * cols != k:
            raise ValueError(f"grid {rows}x{cols} does not match support size {k}")
        pot = grid_pairwise(rows, cols, params.get("confine", 1.0), params.get("couple", 0.25))
        inner = list(pot.terms)
    elif name == "mean-field":
        pot = mean_field(k, params.get("confine", 1.0), params.get("strength", 1.0))
        inner = list(pot.terms)
    else:
        raise ValueError(f"unknown builtin {name!r}")
    # remap local coordinates onto the declared support
    remap = dict(enumerate(support))
    out = []
    for t in inner:
        sup = tuple(sorted(remap[i] for i in t.support))
        out.append(quadratic_term(sup, t.matrix))
    return out


def potential_from_dict(spec: dict) -> StructuredPotential:
    try:
        n = int(spec["n"])
        raw_terms = spec["terms"]
        sm = spec["smoothness"]
    except KeyError as e:
        raise ValueError(f"potential spec missing required key {e.args[0]!r}") from None
    smoothness = SmoothnessParams(
        alpha=float(sm["alpha"]),
        beta=float(sm["beta"]) if "beta" in sm and sm["beta"] is not None else None,
        gamma=float(sm.get("gamma", 1.0)),
        alpha0=float(sm["alpha0"]) if sm.get("alpha0") is not None else None,
    )
    terms: list[FactorTerm] = []
    for entry in raw_terms:
        support = sorted(int(i) for i in entry["support"])
        kind = entry["kind"]
        params = entry.get("params", {})
        if kind == "quadratic":
            terms.append(
                quadratic_term(support, params["matrix"], lipschitz=entry.get("lipschitz"))
            )
        elif kind.startswith("builtin:"):
            terms.extend(_expand_builtin(kind.split(":", 1)[1], support, params))
        else:
            raise ValueError(f"unknown term kind {kind!r}")
    return StructuredPotential(n=n, terms=tuple(terms), smoothness=smoothness)


def load_potential(path) -> StructuredPotential:
    with open(path) as f:
        return potential_from_dict(json.load(f))
