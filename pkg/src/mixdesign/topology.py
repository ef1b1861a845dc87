"""Base topologies with per-node and per-link energy costs.

Edge-list format (UTF-8, ``#`` starts a directive or comment)::

    #comp_cost 0.0003342      # default computation cost for every node
    #comm_cost 0.0138         # default cost for links without a third column
    #node 0 0.0003342         # per-node computation cost override
    0 1 0.0138
    1 2

Node ids must be dense 0-based integers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """Undirected base topology with canonical ``u < v`` link orientation.

    ``comm_cost[e]`` is what each endpoint of link ``e`` pays per iteration in
    which the link is active; ``comp_cost[i]`` is node ``i``'s per-iteration
    computation cost.
    """

    m: int
    links: tuple[tuple[int, int], ...]
    comm_cost: np.ndarray = field(repr=False)
    comp_cost: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.m < 2:
            raise TopologyError(f"need at least 2 nodes, got {self.m}")
        links = tuple((int(u), int(v)) for u, v in self.links)
        seen = set()
        for u, v in links:
            if u == v:
                raise TopologyError(f"self-loop at node {u}")
            if not (0 <= u < v < self.m):
                raise TopologyError(f"link ({u}, {v}) is not canonical for m={self.m}")
            if (u, v) in seen:
                raise TopologyError(f"duplicate link ({u}, {v})")
            seen.add((u, v))
        comm = np.asarray(self.comm_cost, dtype=float).reshape(-1)
        comp = np.asarray(self.comp_cost, dtype=float).reshape(-1)
        if comm.shape != (len(links),):
            raise TopologyError("comm_cost must have one entry per link")
        if comp.shape != (self.m,):
            raise TopologyError("comp_cost must have one entry per node")
        if np.any(comm < 0) or np.any(comp < 0):
            raise TopologyError("costs must be nonnegative")
        comm.setflags(write=False)
        comp.setflags(write=False)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "comm_cost", comm)
        object.__setattr__(self, "comp_cost", comp)

    @classmethod
    def from_links(cls, m: int, links: Iterable[Sequence[int]], comm_cost=1.0, comp_cost=0.0) -> "Topology":
        """Build from arbitrary-orientation links; scalar costs broadcast."""
        canon = []
        for u, v in links:
            u, v = int(u), int(v)
            if u == v:
                raise TopologyError(f"self-loop at node {u}")
            canon.append((min(u, v), max(u, v)))
        order = sorted(range(len(canon)), key=lambda k: canon[k])
        comm = np.broadcast_to(np.asarray(comm_cost, dtype=float), (len(canon),))
        comp = np.broadcast_to(np.asarray(comp_cost, dtype=float), (m,))
        return cls(m, tuple(canon[k] for k in order), comm[order].copy(), comp.copy())

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        arr = np.asarray(self.links, dtype=np.intp).reshape(-1, 2)
        return arr[:, 0], arr[:, 1]

    def link_index(self, u: int, v: int) -> int:
        return self.links.index((min(u, v), max(u, v)))

    def with_costs(self, comm_cost=None, comp_cost=None) -> "Topology":
        comm = self.comm_cost if comm_cost is None else np.broadcast_to(np.asarray(comm_cost, float), (self.n_links,))
        comp = self.comp_cost if comp_cost is None else np.broadcast_to(np.asarray(comp_cost, float), (self.m,))
        return Topology(self.m, self.links, np.array(comm), np.array(comp))

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            self.m == other.m
            and self.links == other.links
            and np.array_equal(self.comm_cost, other.comm_cost)
            and np.array_equal(self.comp_cost, other.comp_cost)
        )

    def __hash__(self):
        return hash((self.m, self.links))


def _parse_cost(tok: str, lineno: int) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise TopologyError(f"line {lineno}: bad cost {tok!r}") from None
    if not np.isfinite(val) or val < 0:
        raise TopologyError(f"line {lineno}: cost must be finite and nonnegative, got {tok}")
    return val


def _parse_node(tok: str, lineno: int) -> int:
    try:
        val = int(tok)
    except ValueError:
        raise TopologyError(f"line {lineno}: bad node id {tok!r}") from None
    if val < 0:
        raise TopologyError(f"line {lineno}: negative node id {val}")
    return val


def parse_topology(text: str, comm_cost: float = 1.0, comp_cost: float = 0.0) -> Topology:
    """Parse an edge-list document.

    ``comm_cost``/``comp_cost`` are fallbacks used when the document has no
    ``#comm_cost``/``#comp_cost`` directive.
    """
    default_comm, default_comp = comm_cost, comp_cost
    node_comp: dict[int, float] = {}
    raw_links: list[tuple[int, int, float | None]] = []
    seen: set[tuple[int, int]] = set()

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            toks = line[1:].split()
            if not toks:
                continue
            key = toks[0]
            if key == "comp_cost" and len(toks) >= 2:
                default_comp = _parse_cost(toks[1], lineno)
            elif key == "comm_cost" and len(toks) >= 2:
                default_comm = _parse_cost(toks[1], lineno)
            elif key == "node" and len(toks) >= 3:
                i = _parse_node(toks[1], lineno)
                if i in node_comp:
                    raise TopologyError(f"line {lineno}: duplicate #node entry for {i}")
                node_comp[i] = _parse_cost(toks[2], lineno)
            continue
        toks = line.split("#", 1)[0].split()
        if len(toks) not in (2, 3):
            raise TopologyError(f"line {lineno}: expected 'u v [c_b]', got {line!r}")
        u, v = _parse_node(toks[0], lineno), _parse_node(toks[1], lineno)
        if u == v:
            raise TopologyError(f"line {lineno}: self-loop at node {u}")
        key2 = (min(u, v), max(u, v))
        if key2 in seen:
            raise TopologyError(f"line {lineno}: duplicate link {key2}")
        seen.add(key2)
        raw_links.append((key2[0], key2[1], _parse_cost(toks[2], lineno) if len(toks) == 3 else None))

    ids = {u for u, _, _ in raw_links} | {v for _, v, _ in raw_links} | set(node_comp)
    if len(ids) < 2:
        raise TopologyError("topology needs at least 2 nodes")
    m = max(ids) + 1
    if len(ids) != m:
        missing = sorted(set(range(m)) - ids)
        raise TopologyError(f"node ids must be dense 0..{m - 1}; missing {missing[:5]}")

    raw_links.sort(key=lambda r: (r[0], r[1]))
    comm = np.array([default_comm if c is None else c for _, _, c in raw_links], dtype=float)
    comp = np.array([node_comp.get(i, default_comp) for i in range(m)], dtype=float)
    return Topology(m, tuple((u, v) for u, v, _ in raw_links), comm, comp)


def serialize_topology(t: Topology) -> str:
    """Emit a document that ``parse_topology`` reads back to an equal Topology."""
    lines = [f"# m={t.m} links={t.n_links}"]
    for i, c in enumerate(t.comp_cost):
        lines.append(f"#node {i} {float(c)!r}")
    for (u, v), c in zip(t.links, t.comm_cost):
        lines.append(f"{u}\t{v}\t{float(c)!r}")
    return "\n".join(lines) + "\n"


def incidence_matrix(t: Topology) -> np.ndarray:
    """m x |E| matrix with +1 at the tail ``u`` and -1 at the head ``v``."""
    B = np.zeros((t.m, t.n_links))
    if t.n_links:
        u, v = t.endpoints
        cols = np.arange(t.n_links)
        B[u, cols] = 1.0
        B[v, cols] = -1.0
    return B


def _as_mask(t: Topology, active) -> np.ndarray:
    if active is None:
        return np.ones(t.n_links, dtype=bool)
    mask = np.asarray(active, dtype=bool)
    if mask.shape != (t.n_links,):
        raise TopologyError(f"active mask has length {mask.size}, topology has {t.n_links} links")
    return mask


class DisjointSet:
    """Union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return True


def is_connected(t: Topology, active=None) -> bool:
    mask = _as_mask(t, active)
    ds = DisjointSet(t.m)
    for (u, v), on in zip(t.links, mask):
        if on and ds.union(u, v) and ds.components == 1:
            return True
    return ds.components == 1


def node_degrees(t: Topology, active=None) -> np.ndarray:
    mask = _as_mask(t, active)
    deg = np.zeros(t.m, dtype=int)
    if t.n_links:
        u, v = t.endpoints
        np.add.at(deg, u[mask], 1)
        np.add.at(deg, v[mask], 1)
    return deg


# -- generators ---------------------------------------------------------------

def complete_graph(m: int, comm_cost=1.0, comp_cost=0.0) -> Topology:
    links = [(u, v) for u in range(m) for v in range(u + 1, m)]
    return Topology.from_links(m, links, comm_cost, comp_cost)


def path_graph(m: int, comm_cost=1.0, comp_cost=0.0) -> Topology:
    return Topology.from_links(m, [(i, i + 1) for i in range(m - 1)], comm_cost, comp_cost)


def cycle_graph(m: int, comm_cost=1.0, comp_cost=0.0) -> Topology:
    return Topology.from_links(m, [(i, (i + 1) % m) for i in range(m)], comm_cost, comp_cost)


def star_graph(m: int, comm_cost=1.0, comp_cost=0.0) -> Topology:
    """Center 0, leaves 1..m-1."""
    return Topology.from_links(m, [(0, i) for i in range(1, m)], comm_cost, comp_cost)


def random_geometric(m: int, radius: float, seed=0, comm_cost=1.0, comp_cost=0.0, max_attempts: int = 1000) -> Topology:
    """Connected random geometric graph in the unit square (resampled until connected)."""
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        pts = rng.random((m, 2))
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        iu, iv = np.nonzero(np.triu(d2 <= radius * radius, k=1))
        t = Topology.from_links(m, zip(iu.tolist(), iv.tolist()), comm_cost, comp_cost)
        if is_connected(t):
            return t
    raise TopologyError(f"no connected geometric graph with m={m}, radius={radius} in {max_attempts} draws")
