"""Bulk-synchronous D-PSGD on heterogeneous least-squares tasks.

Every iteration samples a mixing matrix, each node takes a minibatch gradient
step at its own parameters, and the post-step parameters are mixed:
``X <- W (X - eta * G)``.  Energy is charged per iteration from the sampled
design's activation pattern.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .cost import CostModel, node_costs
from .spectral import MixingDistribution

DIVERGENCE_LIMIT = 1e12

# spawn-key tags that keep the random streams of different consumers apart
_STREAM_MIXING = 0
_STREAM_BATCH = 1


class DivergenceError(RuntimeError):
    pass


@dataclass
class QuadraticTask:
    """F_i(x) = ||A_i x - b_i||^2 / (2 n_i); F is the node average of the F_i."""

    A: list[np.ndarray]
    b: list[np.ndarray]
    heterogeneity: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if len(self.A) != len(self.b) or not self.A:
            raise ValueError("need one (A_i, b_i) pair per node")
        self.A = [np.atleast_2d(np.asarray(a, dtype=float)) for a in self.A]
        self.b = [np.asarray(b, dtype=float).reshape(-1) for b in self.b]
        dims = {a.shape[1] for a in self.A}
        if len(dims) != 1:
            raise ValueError("all A_i must have the same number of columns")
        for a, b in zip(self.A, self.b):
            if a.shape[0] != b.shape[0]:
                raise ValueError("A_i and b_i row counts differ")
        H = sum(a.T @ a / a.shape[0] for a in self.A) / self.m
        r = sum(a.T @ b / a.shape[0] for a, b in zip(self.A, self.b)) / self.m
        self._hessian = H
        self._rhs = r
        self.x_star = np.linalg.solve(H, r)
        self.f_star = self.loss(self.x_star)

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def dim(self) -> int:
        return self.A[0].shape[1]

    def smoothness(self) -> float:
        """Largest l such that every F_i is l-smooth."""
        return max(float(np.linalg.eigvalsh(a.T @ a / a.shape[0])[-1]) for a in self.A)

    def local_loss(self, i: int, x) -> float:
        r = self.A[i] @ x - self.b[i]
        return float(r @ r) / (2 * self.A[i].shape[0])

    def loss(self, x) -> float:
        return sum(self.local_loss(i, x) for i in range(self.m)) / self.m

    def grad(self, x) -> np.ndarray:
        return self._hessian @ x - self._rhs

    def local_grad(self, i: int, x, rows=None) -> np.ndarray:
        A, b = self.A[i], self.b[i]
        if rows is not None:
            A, b = A[rows], b[rows]
        return A.T @ (A @ x - b) / A.shape[0]


def make_quadratic_task(m: int, dim: int, n_per_node: int, heterogeneity: float = 1.0, seed=0, noise: float = 0.1) -> QuadraticTask:
    """Node i's data is A_i ~ N(0,1), b_i = A_i (x0 + heterogeneity * delta_i) + noise."""
    if min(m, dim, n_per_node) < 1 or heterogeneity < 0 or noise < 0:
        raise ValueError("sizes must be positive and heterogeneity/noise nonnegative")
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(dim)
    A, b = [], []
    for _ in range(m):
        a = rng.standard_normal((n_per_node, dim))
        delta = rng.standard_normal(dim)
        A.append(a)
        b.append(a @ (x0 + heterogeneity * delta) + noise * rng.standard_normal(n_per_node))
    return QuadraticTask(A, b, heterogeneity, seed)


@dataclass
class TrainingTrace:
    """Per-iteration record; row k describes x^(k) and the energy of iterations 1..k."""

    loss: np.ndarray
    grad_sq: np.ndarray
    consensus: np.ndarray
    cum_energy: np.ndarray = field(repr=False)   # (K, m)
    mean_params: np.ndarray = field(repr=False)  # (K + 1, dim): x_bar^(1..K+1)
    mean_local_grad: np.ndarray = field(repr=False)  # (K, dim)
    active_links: np.ndarray = field(repr=False)  # (K,) number of active links per iteration
    design_index: np.ndarray = field(repr=False)  # (K,) which design was sampled
    f_star: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.loss)

    @property
    def running_avg_grad_sq(self) -> np.ndarray:
        return np.cumsum(self.grad_sq) / np.arange(1, len(self.grad_sq) + 1)

    @property
    def max_cum_energy(self) -> np.ndarray:
        return self.cum_energy.max(axis=1)

    @property
    def total_cum_energy(self) -> np.ndarray:
        return self.cum_energy.sum(axis=1)

    def to_csv(self, record_every: int = 1) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        ravg = self.running_avg_grad_sq
        mx, tot = self.max_cum_energy, self.total_cum_energy
        K = self.iterations
        for k in range(K):
            if (k + 1) % record_every and k != K - 1:
                continue
            w.writerow([k + 1, repr(float(self.loss[k])), repr(float(self.grad_sq[k])), repr(float(ravg[k])),
                        repr(float(self.consensus[k])), repr(float(mx[k])), repr(float(tot[k]))])
        return buf.getvalue()


CSV_COLUMNS = ("iter", "loss", "grad_sq", "running_avg_grad_sq", "consensus", "max_cum_energy_wh", "total_cum_energy_wh")


def _rng(seed, *key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def run_dpsgd(
    task: QuadraticTask,
    mixing: MixingDistribution,
    eta: float,
    iterations: int,
    batch: int | None = None,
    seed: int = 0,
    cost: CostModel | None = None,
    x0=None,
) -> TrainingTrace:
    """Run D-PSGD for ``iterations`` updates from x_i^(1) = 0 (or ``x0``).

    ``batch=None`` uses full local gradients.  Minibatches are drawn without
    replacement from a stream keyed by (node, iteration); the mixing matrix of
    iteration k comes from a stream keyed by k alone.
    """
    if not eta >= 0:
        raise ValueError("eta must be nonnegative")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    m, dim = task.m, task.dim
    if mixing.m != m:
        raise ValueError(f"mixing matrices are {mixing.m}x{mixing.m}, task has {m} nodes")
    Ws = [d.W for d in mixing.designs]
    per_iter_cost = [
        node_costs(d.topology, CostModel.from_topology(d.topology) if cost is None else cost, d.alpha)
        for d in mixing.designs
    ]
    n_active = [int(d.active.sum()) for d in mixing.designs]

    X = np.zeros((m, dim)) if x0 is None else np.array(x0, dtype=float).reshape(m, dim)
    loss = np.empty(iterations)
    grad_sq = np.empty(iterations)
    consensus = np.empty(iterations)
    energy = np.empty((iterations, m))
    means = np.empty((iterations + 1, dim))
    mean_g = np.empty((iterations, dim))
    active = np.empty(iterations, dtype=int)
    picked = np.empty(iterations, dtype=int)
    running = np.zeros(m)
    G = np.empty((m, dim))

    for k in range(iterations):
        xbar = X.mean(axis=0)
        means[k] = xbar
        loss[k] = task.loss(xbar)
        if not math.isfinite(loss[k]) or loss[k] > DIVERGENCE_LIMIT:
            raise DivergenceError(f"loss {loss[k]:.3g} at iteration {k + 1}; reduce eta")
        g = task.grad(xbar)
        grad_sq[k] = g @ g
        consensus[k] = float(((X - xbar) ** 2).sum()) / m

        for i in range(m):
            rows = None
            n_i = task.A[i].shape[0]
            if batch is not None and batch < n_i:
                rows = _rng(seed, _STREAM_BATCH, i, k).choice(n_i, size=batch, replace=False)
            G[i] = task.local_grad(i, X[i], rows)
        mean_g[k] = G.mean(axis=0)

        j = 0 if len(Ws) == 1 else int(_rng(seed, _STREAM_MIXING, k).choice(len(Ws), p=mixing.probs))
        picked[k] = j
        active[k] = n_active[j]
        running += per_iter_cost[j]
        energy[k] = running
        X = Ws[j] @ (X - eta * G)

    means[iterations] = X.mean(axis=0)
    return TrainingTrace(loss, grad_sq, consensus, energy, means, mean_g, active, picked, task.f_star)


def iterations_to_target(trace: TrainingTrace, eps: float) -> int | None:
    """First K (1-based) with (1/K) sum_k ||grad F(x_bar^(k))||^2 <= eps, or None."""
    hit = np.flatnonzero(trace.running_avg_grad_sq <= eps)
    return int(hit[0]) + 1 if hit.size else None


def gradient_descent(task: QuadraticTask, eta: float, iterations: int, x0=None) -> np.ndarray:
    """Centralized full-gradient descent on F; returns iterates x^(1..iterations+1)."""
    x = np.zeros(task.dim) if x0 is None else np.array(x0, dtype=float)
    out = [x.copy()]
    for _ in range(iterations):
        x = x - eta * task.grad(x)
        out.append(x.copy())
    return np.array(out)
