import numpy as np
import pytest


def finite_difference_gradient(f, x, eps=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2.0 * eps)
    return g


def brute_force_value(pot, x):
    """Potential value summed term by term, no fast path."""
    return sum(t.value(np.asarray(x)[list(t.support)]) for t in pot.terms)


def brute_force_gradient(pot, x):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for t in pot.terms:
        idx = list(t.support)
        g[idx] += t.grad(x[idx])
    return g


def bfs_neighborhood(edges, n, u, k):
    """Reference k-step neighborhood via an adjacency-set BFS."""
    adj = {i: set() for i in range(n)}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    cur = set(u)
    for _ in range(k):
        cur = cur | {j for i in cur for j in adj[i]}
    return frozenset(cur)


def weak_lattice_reference(weights, rate_factor, u_mask, seed_supports):
    """Independent BFS closure + dense rate matrix for a weak generator."""
    seeds = [u_mask] + ([w for w, _ in weights] if seed_supports else [])
    states = []
    for s in seeds:
        if s not in states:
            states.append(s)
    frontier = list(states)
    while frontier:
        v = frontier.pop()
        for w, _ in weights:
            if w & v and (v | w) not in states:
                states.append(v | w)
                frontier.append(v | w)
    index = {s: i for i, s in enumerate(states)}
    Q = np.zeros((len(states), len(states)))
    for v, i in index.items():
        for w, L in weights:
            if w & v and (v | w) != v:
                Q[i, index[v | w]] += rate_factor * L
    np.fill_diagonal(Q, Q.diagonal() - Q.sum(axis=1))
    return states, index, Q


def random_spd(rng, n, cond_max=50.0):
    """Random SPD matrix with eigenvalues in [1/cond_max, 1] * scale."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(1.0 / cond_max, 1.0, size=n)
    lam[0] = 1.0 / cond_max
    lam[-1] = 1.0
    return (Q * lam) @ Q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
