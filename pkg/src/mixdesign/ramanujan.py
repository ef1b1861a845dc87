"""Random regular graphs and the weight-1/d Ramanujan mixing design.

On a complete base topology where each node pays the same per-link cost, any
graph of maximum degree ``d = min_i floor((budget - c^a_i) / c^b_i)`` meets the
budget.  A d-regular Ramanujan graph weighted by 1/d has every nonzero
Laplacian eigenvalue within ``1 +/- 2 sqrt(d - 1) / d``, so its mixing matrix
has ``rho <= 4 (d - 1) / d**2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cost import CostModel
from .spectral import MixingDesign, eig_symmetric, laplacian
from .topology import Topology, complete_graph, node_degrees

EIG_SLACK = 1e-9


class RamanujanError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegularGraphSpec:
    m: int
    d: int
    rng_seed: int = 0
    max_attempts: int = 1000

    def __post_init__(self):
        if self.d < 2 or self.d >= self.m:
            raise ValueError(f"need 2 <= d < m, got d={self.d}, m={self.m}")
        if (self.m * self.d) % 2:
            raise ValueError(f"m*d must be even, got m={self.m}, d={self.d}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def rho_bound(d: int) -> float:
    return 4.0 * (d - 1) / d**2


def _pair_stubs(m: int, d: int, rng: np.random.Generator):
    """One pass of configuration-model pairing.

    Stubs are matched one pair at a time; a candidate pair that would create a
    self-loop or repeat an edge is rejected and redrawn.  Returns None when the
    remaining stubs admit no valid pair (caller restarts from scratch).
    """
    stubs = np.repeat(np.arange(m), d).tolist()
    edges: set[tuple[int, int]] = set()
    while stubs:
        n = len(stubs)
        placed = False
        for _ in range(4 * n):
            i, j = rng.integers(n, size=2)
            a, b = stubs[i], stubs[j]
            if i == j or a == b:
                continue
            e = (a, b) if a < b else (b, a)
            if e in edges:
                continue
            edges.add(e)
            for k in sorted((int(i), int(j)), reverse=True):
                stubs[k] = stubs[-1]
                stubs.pop()
            placed = True
            break
        if not placed:
            # exhaustive check before giving up on this pass
            rest = sorted(set(stubs))
            ok = any(
                (a, b) not in edges
                for x, a in enumerate(rest)
                for b in rest[x + 1 :]
            )
            if not ok:
                return None
    return sorted(edges)


def random_regular(spec: RegularGraphSpec, rng: np.random.Generator | None = None) -> Topology:
    """Simple d-regular graph on m nodes (restarts on a dead-end pairing)."""
    rng = np.random.default_rng(spec.rng_seed) if rng is None else rng
    for _ in range(spec.max_attempts):
        edges = _pair_stubs(spec.m, spec.d, rng)
        if edges is not None:
            return Topology.from_links(spec.m, edges)
    raise RamanujanError(f"could not pair stubs for m={spec.m}, d={spec.d} in {spec.max_attempts} attempts")


def regular_degree(t: Topology) -> int:
    deg = node_degrees(t)
    if not np.all(deg == deg[0]):
        raise ValueError(f"graph is not regular (degrees {deg.min()}..{deg.max()})")
    return int(deg[0])


def is_ramanujan(t: Topology) -> bool:
    """All Laplacian eigenvalues after the first lie in d -/+ 2 sqrt(d - 1) (closed)."""
    d = regular_degree(t)
    lam = eig_symmetric(laplacian(t, np.ones(t.n_links)))
    r = 2.0 * math.sqrt(max(d - 1, 0))
    return bool(np.all(lam[1:] >= d - r - EIG_SLACK) and np.all(lam[1:] <= d + r + EIG_SLACK))


def embed_in_complete(h: Topology, weight: float, base: Topology | None = None) -> MixingDesign:
    """Design on the complete base graph with ``weight`` on the links of ``h``."""
    base = complete_graph(h.m) if base is None else base
    on = set(h.links)
    alpha = np.array([weight if e in on else 0.0 for e in base.links])
    return MixingDesign(base, alpha)


def ramanujan_mixing(spec: RegularGraphSpec, base: Topology | None = None) -> MixingDesign:
    """Draw random d-regular graphs until one is Ramanujan; weight its links 1/d.

    ``base`` must be the complete graph on ``spec.m`` nodes (it carries costs).
    """
    if base is not None and base.n_links != spec.m * (spec.m - 1) // 2:
        raise ValueError("base topology must be complete")
    rng = np.random.default_rng(spec.rng_seed)
    for _ in range(spec.max_attempts):
        h = random_regular(spec, rng)
        if is_ramanujan(h):
            return embed_in_complete(h, 1.0 / spec.d, base)
    raise RamanujanError(f"no Ramanujan graph among {spec.max_attempts} draws (m={spec.m}, d={spec.d})")


def degree_budget(t: Topology, cost: CostModel, budget: float) -> int:
    """d = min_i floor((budget - c^a_i) / c^b_i) for per-node-uniform link costs."""
    cost.check(t)
    if np.any(cost.comp > budget):
        bad = int(np.argmax(cost.comp > budget))
        raise ValueError(f"budget {budget} is below node {bad}'s computation cost {cost.comp[bad]}")
    per_node: list[set[float]] = [set() for _ in range(t.m)]
    for (u, v), c in zip(t.links, cost.comm):
        per_node[u].add(float(c))
        per_node[v].add(float(c))
    best = None
    for i, cs in enumerate(per_node):
        if len(cs) > 1:
            raise ValueError(f"node {i} has heterogeneous link costs {sorted(cs)}")
        if not cs:
            continue
        cb = cs.pop()
        slack = budget - cost.comp[i]
        # small relative guard so e.g. 3 * c_b + c_a == budget floors to 3
        di = t.m - 1 if cb == 0 else math.floor(slack / cb + 1e-9)
        best = di if best is None else min(best, di)
    return int(best if best is not None else 0)
