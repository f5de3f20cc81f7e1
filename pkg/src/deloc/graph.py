"""Interaction graph of a structured potential and neighbourhood growth.

Vertices are coordinates; an edge joins i and j whenever some factor with
positive Lipschitz weight has both in its support.  That is a conservative
superset of {mixed second derivative not identically zero}, and it is the
graph all bound machinery consumes.

Neighbourhoods N_k(u) expand along edges: N_0(u) = u and N_{k+1}(u) is
N_k(u) together with everything adjacent to it.  Subsets travel as
bitmasks (see subsets.py), and per-subset neighbourhood chains are
memoized up to their stabilization index.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from .potential import StructuredPotential
from .subsets import as_mask, indices_from, mask_from, size

__all__ = [
    "InteractionGraph",
    "GrowthCertificate",
    "GrowthReport",
    "build_graph",
    "verify_growth",
    "union_growth_bound",
]


class InteractionGraph:
    """Undirected simple graph on [n] with bitmask adjacency."""

    def __init__(self, n: int, adj_masks: Iterable[int]):
        self.n = n
        self.adj_masks = tuple(adj_masks)
        if len(self.adj_masks) != n:
            raise ValueError(f"expected {n} adjacency masks, got {len(self.adj_masks)}")
        for i, m in enumerate(self.adj_masks):
            if m >> n:
                raise ValueError(f"adjacency of vertex {i} leaves range({n})")
            if m & (1 << i):
                raise ValueError(f"self-loop at vertex {i}")
            for j in indices_from(m):
                if not self.adj_masks[j] & (1 << i):
                    raise ValueError(f"asymmetric adjacency between {i} and {j}")
        self._chains: dict[int, list[int]] = {}

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "InteractionGraph":
        adj = [0] * n
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            adj[i] |= 1 << j
            adj[j] |= 1 << i
        return cls(n, adj)

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for i in range(self.n):
            for j in indices_from(self.adj_masks[i]):
                if i < j:
                    out.append((i, j))
        return out

    def adjacency(self, i: int) -> tuple[int, ...]:
        return indices_from(self.adj_masks[i])

    # -- neighbourhoods ------------------------------------------------------

    def _chain(self, u_mask: int) -> list[int]:
        """Masks [N_0(u), N_1(u), ..., N_J(u)] up to stabilization."""
        cached = self._chains.get(u_mask)
        if cached is not None:
            return cached
        chain = [u_mask]
        cur = u_mask
        while True:
            nxt = cur
            rest = cur
            while rest:
                i = (rest & -rest).bit_length() - 1
                nxt |= self.adj_masks[i]
                rest &= rest - 1
            if nxt == cur:
                break
            chain.append(nxt)
            cur = nxt
        self._chains[u_mask] = chain
        return chain

    def neighborhood_mask(self, u, k: int) -> int:
        if k < 0:
            raise ValueError(f"k must be >= 0, got {k}")
        m = as_mask(u, self.n)
        if m == 0:
            return 0
        chain = self._chain(m)
        return chain[min(k, len(chain) - 1)]

    def neighborhood(self, u, k: int) -> tuple[int, ...]:
        return indices_from(self.neighborhood_mask(u, k))

    def stabilization_index(self, u) -> int:
        """Smallest J with N_J(u) = N_{J+1}(u) (component closure reached)."""
        m = as_mask(u, self.n)
        if m == 0:
            raise ValueError("stabilization index of the empty set is undefined")
        return len(self._chain(m)) - 1

    # -- export ---------------------------------------------------------------

    def export_edge_list(self, path) -> None:
        """Plain text: one '<i> <j>' line per edge, 0-indexed, i < j."""
        with open(path, "w") as f:
            for i, j in self.edges():
                f.write(f"{i} {j}\n")


def build_graph(pot: StructuredPotential) -> InteractionGraph:
    adj = [0] * pot.n
    for t in pot.active_terms:
        m = mask_from(t.support)
        for i in t.support:
            adj[i] |= m & ~(1 << i)
    return InteractionGraph(pot.n, adj)


# -- growth certificates -------------------------------------------------------


@dataclass(frozen=True)
class GrowthCertificate:
    """Claim |N_{k+1}(i)| <= c (1 + k^p) (polynomial) or <= c r^k
    (exponential) for every vertex i and every k >= 0.  c, and p or r,
    must be >= 1.  verified_up_to is stamped by verify_growth."""

    mode: str  # "polynomial" | "exponential"
    c: float
    exponent: float  # p or r
    verified_up_to: int = -1

    def __post_init__(self):
        if self.mode not in ("polynomial", "exponential"):
            raise ValueError(f"unknown growth mode {self.mode!r}")
        if self.c < 1 or self.exponent < 1:
            raise ValueError("growth certificate requires c >= 1 and exponent >= 1")

    def vertex_bound(self, k: int) -> float:
        if self.mode == "polynomial":
            return self.c * (1.0 + float(k) ** self.exponent)
        return self.c * self.exponent**k


@dataclass(frozen=True)
class GrowthReport:
    passed: bool
    first_violation: tuple[int, int] | None  # (vertex, k)
    checked_up_to: int
    certificate: GrowthCertificate


def verify_growth(g: InteractionGraph, cert: GrowthCertificate) -> GrowthReport:
    """Exhaustively check the certificate for every vertex, for k from 0 up
    to each vertex's stabilization index.  Beyond stabilization the
    neighbourhood size is constant while the bound is nondecreasing, so
    this range is exhaustive.  Certificates are verified, never fitted.
    """
    checked = 0
    for i in range(g.n):
        chain = g._chain(1 << i)
        J = len(chain) - 1
        checked = max(checked, J)
        for k in range(J + 1):
            got = size(chain[min(k + 1, J)])
            if got > cert.vertex_bound(k) + 1e-12:
                return GrowthReport(False, (i, k), checked, cert)
    return GrowthReport(True, None, checked, replace(cert, verified_up_to=checked))


def union_growth_bound(cert: GrowthCertificate, u, k: int) -> float:
    """Bound |N_{k+1}(u)| <= sum_{i in u} |N_{k+1}(i)| <= c |u| (1 + k^p)
    (or c |u| r^k)."""
    m = as_mask(u)
    return size(m) * cert.vertex_bound(k)
