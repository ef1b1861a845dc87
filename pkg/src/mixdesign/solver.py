"""Unconstrained link-weight optimization: minimize ||I - B diag(alpha) B^T - J||.

The objective is convex in alpha, and one symmetric eigendecomposition gives
both its value and a subgradient, so a projected subgradient method with a
Polyak step toward a moving target level is used.  Frozen links are pinned to
zero by projection.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import MixingDesign, averaging_matrix, laplacian, rho_tilde_of_laplacian
from .topology import Topology, incidence_matrix, node_degrees

STEP_RULES = ("polyak-level",)


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    tolerance: float = 1e-7
    step_rule: str = "polyak-level"
    rng_seed: int = 0
    window: int = 200
    patience: int = 50
    widen: float = 1.5

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step rule {self.step_rule!r}; choose from {STEP_RULES}")
        if self.window < 1 or self.patience < 1:
            raise ValueError("window and patience must be >= 1")


@dataclass
class SolveResult:
    topology: Topology
    alpha: np.ndarray = field(repr=False)
    rho_tilde: float
    iterations: int
    converged: bool

    @property
    def design(self) -> MixingDesign:
        return MixingDesign(self.topology, self.alpha)

    def to_dict(self) -> dict:
        d = self.design.to_dict()
        d["solver"] = {"iterations": self.iterations, "converged": self.converged, "rho_tilde": self.rho_tilde}
        return d


def _frozen_mask(t: Topology, frozen) -> np.ndarray:
    mask = np.zeros(t.n_links, dtype=bool)
    if frozen is None:
        return mask
    frozen = list(frozen)
    if len(frozen) == t.n_links and all(isinstance(f, (bool, np.bool_)) for f in frozen):
        return np.asarray(frozen, dtype=bool)
    for e in frozen:
        idx = t.link_index(*e) if isinstance(e, tuple) else int(e)
        mask[idx] = True
    return mask


def default_init(t: Topology, frozen_mask: np.ndarray) -> np.ndarray:
    free = ~frozen_mask
    dmax = int(node_degrees(t, free).max()) if t.n_links else 0
    alpha = np.where(free, 1.0 / (dmax + 1), 0.0)
    return alpha


def _value_and_subgradient(B, I_J, u, v, alpha):
    M = I_J - (B * alpha) @ B.T
    lam, vecs = np.linalg.eigh(M)
    k = 0 if abs(lam[0]) > abs(lam[-1]) else len(lam) - 1
    sign = np.sign(lam[k]) or 1.0
    vec = vecs[:, k]
    # d(v^T M v)/d alpha_e = -(v_u - v_v)^2
    g = -sign * (vec[u] - vec[v]) ** 2
    return abs(float(lam[k])), g


def solve_min_rho(t: Topology, frozen=None, cfg: SolverConfig | None = None, init=None) -> SolveResult:
    """Minimize rho_tilde over weights of non-frozen links.

    ``frozen`` is a boolean mask, link indices or ``(u, v)`` pairs.  ``init``
    warm-starts the iteration (frozen entries are zeroed).  A disconnected
    free support leaves rho_tilde >= 1.
    """
    cfg = cfg or SolverConfig()
    fmask = _frozen_mask(t, frozen)
    free = ~fmask
    if t.n_links == 0 or not free.any():
        alpha = np.zeros(t.n_links)
        return SolveResult(t, alpha, rho_tilde_of_laplacian(laplacian(t, alpha)), 0, True)

    u, v = t.endpoints
    B = incidence_matrix(t)
    I_J = np.eye(t.m) - averaging_matrix(t.m)
    alpha = default_init(t, fmask) if init is None else np.where(free, np.asarray(init, dtype=float), 0.0)

    f, g = _value_and_subgradient(B, I_J, u, v, alpha)
    best_f, best_alpha = f, alpha.copy()
    history = [best_f]
    delta = max(0.1 * f, 1e-3)
    since_improve = 0
    level_ref = best_f
    converged = False
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        g = np.where(free, g, 0.0)
        gg = float(g @ g)
        if gg <= 1e-30 or best_f <= 1e-14:
            converged = True
            break
        level = best_f - delta
        alpha = alpha - ((f - level) / gg) * g
        alpha[fmask] = 0.0
        f, g = _value_and_subgradient(B, I_J, u, v, alpha)
        if f < best_f:
            best_f, best_alpha = f, alpha.copy()
        if best_f <= level_ref - 0.5 * delta:
            # target reached: widen the level gap, restart the patience clock
            level_ref = best_f
            delta *= cfg.widen
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= cfg.patience:
                delta *= 0.5
                level_ref = best_f
                since_improve = 0
                alpha = best_alpha.copy()
                f, g = _value_and_subgradient(B, I_J, u, v, alpha)
        history.append(best_f)
        if it >= cfg.window and history[-cfg.window - 1] - best_f < cfg.tolerance:
            converged = True
            break

    best_alpha[fmask] = 0.0
    rho = rho_tilde_of_laplacian(laplacian(t, best_alpha))
    return SolveResult(t, best_alpha, rho, it, converged)


MAX_BRUTE_FORCE_LINKS = 4


def brute_force_min_rho(
    t: Topology,
    frozen=None,
    grid: float = 1e-3,
    lo: float = 0.0,
    hi: float = 1.0,
    max_points: int = 250_000,
) -> SolveResult:
    """Grid search of rho_tilde over [lo, hi]^k for the k <= 4 free links.

    When the full grid at resolution ``grid`` would exceed ``max_points``, the
    search starts on the finest affordable grid and repeatedly re-grids a box
    of +/-2 cells around the incumbent until ``grid`` is reached.
    """
    fmask = _frozen_mask(t, frozen)
    free_idx = np.flatnonzero(~fmask)
    k = free_idx.size
    if k > MAX_BRUTE_FORCE_LINKS:
        raise ValueError(f"brute force supports at most {MAX_BRUTE_FORCE_LINKS} free links, got {k}")
    if k == 0:
        alpha = np.zeros(t.n_links)
        return SolveResult(t, alpha, rho_tilde_of_laplacian(laplacian(t, alpha)), 1, True)

    u, v = t.endpoints
    I_J = np.eye(t.m) - averaging_matrix(t.m)
    # per-free-link Laplacian of a unit weight
    basis = np.zeros((k, t.m, t.m))
    for j, e in enumerate(free_idx):
        a, b = u[e], v[e]
        basis[j, a, a] = basis[j, b, b] = 1.0
        basis[j, a, b] = basis[j, b, a] = -1.0

    def evaluate(points: np.ndarray) -> np.ndarray:
        out = np.empty(len(points))
        for s in range(0, len(points), 100_000):
            chunk = points[s : s + 100_000]
            M = I_J[None] - np.tensordot(chunk, basis, axes=1)
            lam = np.linalg.eigvalsh(M)
            out[s : s + len(chunk)] = np.maximum(np.abs(lam[:, 0]), np.abs(lam[:, -1]))
        return out

    n_full = int(round((hi - lo) / grid)) + 1
    per_axis = min(n_full, max(3, int(max_points ** (1.0 / k))))
    box_lo, box_hi = np.full(k, lo), np.full(k, hi)
    step = (hi - lo) / (per_axis - 1)
    evals = 0
    while True:
        axes = [np.linspace(box_lo[j], box_hi[j], int(round((box_hi[j] - box_lo[j]) / step)) + 1) for j in range(k)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
        vals = evaluate(pts)
        evals += len(pts)
        best = int(np.argmin(vals))
        x, fx = pts[best], float(vals[best])
        if step <= grid * (1 + 1e-9):
            break
        new_step = max(grid, step / max(2.0, (max_points ** (1.0 / k) - 1) / 4))
        box_lo = np.maximum(lo, x - 2 * step)
        box_hi = np.minimum(hi, x + 2 * step)
        # snap to the finer lattice anchored at the incumbent
        box_lo = x - np.floor((x - box_lo) / new_step + 1e-9) * new_step
        box_hi = x + np.floor((box_hi - x) / new_step + 1e-9) * new_step
        step = new_step

    alpha = np.zeros(t.n_links)
    alpha[free_idx] = x
    return SolveResult(t, alpha, fx, evals, True)
