"""Laplacians, mixing matrices and the convergence parameter rho.

For a mixing matrix ``W = I - L`` the quantity that drives D-PSGD convergence
is ``rho = ||E[W^T W] - J||`` with ``J = 11^T / m``.  For a deterministic W this
collapses to ``||I - L - J||**2 = max((1 - lam_2)**2, (1 - lam_m)**2)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cost import ACTIVE_TOL, active_mask
from .topology import Topology

SYMMETRY_TOL = 1e-10


def averaging_matrix(m: int) -> np.ndarray:
    return np.full((m, m), 1.0 / m)


def eig_symmetric(A, vectors: bool = False):
    """Ascending eigenvalues (and orthonormal eigenvectors) of a symmetric matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.size and np.max(np.abs(A - A.T)) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric")
    if vectors:
        return np.linalg.eigh(A)
    return np.linalg.eigvalsh(A)


def laplacian(t: Topology, alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (t.n_links,):
        raise ValueError(f"alpha has length {alpha.size}, topology has {t.n_links} links")
    L = np.zeros((t.m, t.m))
    if t.n_links:
        u, v = t.endpoints
        np.add.at(L, (u, v), -alpha)
        np.add.at(L, (v, u), -alpha)
        np.add.at(L, (u, u), alpha)
        np.add.at(L, (v, v), alpha)
    return 0.5 * (L + L.T)


def mixing_matrix(t: Topology, alpha) -> np.ndarray:
    return np.eye(t.m) - laplacian(t, alpha)


def rho_tilde_of_laplacian(L: np.ndarray) -> float:
    """||I - L - J||.

    Equals max(|1 - lam_2|, |1 - lam_m|) when L is positive semidefinite; the
    norm is taken directly so negative link weights are handled too.
    """
    m = L.shape[0]
    lam = eig_symmetric(np.eye(m) - L - averaging_matrix(m))
    return float(max(abs(lam[0]), abs(lam[-1])))


@dataclass(frozen=True)
class MixingDesign:
    """Link weights over a topology; W = I - B diag(alpha) B^T."""

    topology: Topology
    alpha: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float).reshape(-1)
        if a.shape != (self.topology.n_links,):
            raise ValueError(f"alpha has length {a.size}, topology has {self.topology.n_links} links")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def m(self) -> int:
        return self.topology.m

    @property
    def laplacian(self) -> np.ndarray:
        return laplacian(self.topology, self.alpha)

    @property
    def W(self) -> np.ndarray:
        return np.eye(self.m) - self.laplacian

    @property
    def active(self) -> np.ndarray:
        return active_mask(self.alpha)

    @property
    def rho_tilde(self) -> float:
        return rho_tilde_of_laplacian(self.laplacian)

    @property
    def rho(self) -> float:
        return rho_deterministic(self)

    def row_sum_max_err(self) -> float:
        return float(np.max(np.abs(self.W.sum(axis=1) - 1.0)))

    def to_dict(self) -> dict:
        t = self.topology
        return {
            "m": t.m,
            "links": [
                {"u": u, "v": v, "alpha": float(a), "comm_cost": float(c)}
                for (u, v), a, c in zip(t.links, self.alpha, t.comm_cost)
            ],
            "comp_cost": [float(c) for c in t.comp_cost],
            "rho": self.rho,
            "rho_tilde": self.rho_tilde,
            "row_sum_max_err": self.row_sum_max_err(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixingDesign":
        links = d["links"]
        m = int(d.get("m") or 1 + max(max(l["u"], l["v"]) for l in links))
        comp = d.get("comp_cost", 0.0)
        t = Topology.from_links(
            m,
            [(l["u"], l["v"]) for l in links],
            comm_cost=[l.get("comm_cost", 1.0) for l in links],
            comp_cost=comp,
        )
        # from_links sorts links canonically; realign weights the same way
        by_link = {(min(l["u"], l["v"]), max(l["u"], l["v"])): float(l["alpha"]) for l in links}
        return cls(t, np.array([by_link[e] for e in t.links]))


def design_to_json(design: MixingDesign, **extra) -> str:
    d = design.to_dict()
    d.update(extra)
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def design_from_json(text: str) -> MixingDesign:
    return MixingDesign.from_dict(json.loads(text))


def rho_deterministic(design: MixingDesign) -> float:
    """rho of a fixed W: ||W^T W - J|| = ||I - L - J||**2."""
    return rho_tilde_of_laplacian(design.laplacian) ** 2


@dataclass(frozen=True)
class MixingDistribution:
    """Finite distribution over designs sharing the same node set."""

    designs: tuple[MixingDesign, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        designs = tuple(self.designs)
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if not designs:
            raise ValueError("distribution needs at least one design")
        if probs.shape != (len(designs),):
            raise ValueError("one probability per design required")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities must be nonnegative and sum to 1, got {probs}")
        if len({d.m for d in designs}) != 1:
            raise ValueError("all designs must share the same node count")
        object.__setattr__(self, "designs", designs)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def deterministic(cls, design: MixingDesign) -> "MixingDistribution":
        return cls((design,), np.array([1.0]))

    @property
    def m(self) -> int:
        return self.designs[0].m

    def expected_gram(self) -> np.ndarray:
        """E[W^T W]."""
        out = np.zeros((self.m, self.m))
        for d, p in zip(self.designs, self.probs):
            W = d.W
            out += p * (W.T @ W)
        return 0.5 * (out + out.T)

    def sample(self, rng: np.random.Generator) -> MixingDesign:
        if len(self.designs) == 1:
            return self.designs[0]
        return self.designs[int(rng.choice(len(self.designs), p=self.probs))]


def rho_randomized(dist: MixingDistribution) -> float:
    M = dist.expected_gram() - averaging_matrix(dist.m)
    lam = eig_symmetric(M)
    return float(max(abs(lam[0]), abs(lam[-1])))


@dataclass
class RhoReport:
    rho: float
    jensen_bound: float
    jensen_ok: bool
    max_sampled_ratio: float
    sampled_ok: bool
    attained_ratio: float
    attained_ok: bool
    p: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.jensen_ok and self.sampled_ok and self.attained_ok

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "jensen_bound": self.jensen_bound,
            "jensen_ok": self.jensen_ok,
            "max_sampled_ratio": self.max_sampled_ratio,
            "sampled_ok": self.sampled_ok,
            "attained_ratio": self.attained_ratio,
            "attained_ok": self.attained_ok,
            "p": self.p,
            "trials": self.trials,
            "passed": self.passed,
        }


def _complement_basis(m: int) -> np.ndarray:
    """Orthonormal basis (m x (m-1)) of the subspace orthogonal to the all-ones vector."""
    ones = np.ones((m, 1)) / np.sqrt(m)
    Q, _ = np.linalg.qr(np.hstack([ones, np.eye(m)[:, : m - 1]]))
    return Q[:, 1:]


def validate_rho_bounds(dist: MixingDistribution, trials: int = 1000, rng_seed=0, rows: int = 4) -> RhoReport:
    """Numerically check the consensus-contraction identities behind rho.

    (a) rho <= E ||I - L - J||^2;
    (b) E||X(W - J)||_F^2 / ||X(I - J)||_F^2 <= rho for random Gaussian X;
    (c) the ratio reaches rho when X is the top eigenvector of E[W^T W] - J,
        so p = 1 - rho.

    The inner expectation in (b) is exact: (W - J)(W - J)^T = W^T W - J.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    m = dist.m
    J = averaging_matrix(m)
    M = dist.expected_gram() - J
    P = np.eye(m) - J
    rho = rho_randomized(dist)

    jensen = float(sum(p * d.rho_tilde ** 2 for d, p in zip(dist.designs, dist.probs)))
    jensen_ok = rho <= jensen + 1e-9

    rng = np.random.default_rng(rng_seed)
    ratios = np.empty(trials)
    filled = 0
    while filled < trials:
        X = rng.standard_normal((trials - filled, rows, m))
        num = np.einsum("tij,jk,tik->t", X, M, X)
        den = np.einsum("tij,jk,tik->t", X, P, X)
        ok = den > 1e-12
        take = num[ok] / den[ok]
        ratios[filled : filled + take.size] = take
        filled += take.size
    max_ratio = float(ratios.max())
    sampled_ok = max_ratio <= rho + 1e-8

    Q = _complement_basis(m)
    lam, vecs = eig_symmetric(Q.T @ M @ Q, vectors=True)
    x = Q @ vecs[:, -1]
    attained = float((x @ M @ x) / (x @ P @ x))
    attained_ok = abs(attained - rho) <= 1e-6

    return RhoReport(
        rho=rho,
        jensen_bound=jensen,
        jensen_ok=bool(jensen_ok),
        max_sampled_ratio=max_ratio,
        sampled_ok=bool(sampled_ok),
        attained_ratio=attained,
        attained_ok=bool(attained_ok),
        p=1.0 - attained,
        trials=trials,
    )
