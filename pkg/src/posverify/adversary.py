"""Worst-case position faking against signal-strength ranging.

A node at one point claims to be at another. Each genuine receiver checks
the claim against its own power reading, so the faker wants the point
whose claimed distances survive as many of those checks as possible, in
expectation over the channel noise. This module scores candidate fakes and
searches a rectangular deployment region for the best one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SignalParams, _deception_prob_arrays

# Candidate-generation constants: samples per distance circle, and how many
# top-scoring candidates get their own pattern-search refinement.
CIRCLE_SAMPLES = 16
REFINE_STARTS = 5

_COMPASS = np.array(
    [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)], dtype=float
)


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle where nodes live, metres."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate region [{self.x_min}, {self.x_max}] x [{self.y_min}, {self.y_max}]"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    def contains(self, points) -> np.ndarray | bool:
        p = np.asarray(points, dtype=float)
        ok = (
            (p[..., 0] >= self.x_min)
            & (p[..., 0] <= self.x_max)
            & (p[..., 1] >= self.y_min)
            & (p[..., 1] <= self.y_max)
        )
        return bool(ok) if ok.ndim == 0 else ok

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform points, shape (count, 2)."""
        return rng.uniform(
            (self.x_min, self.y_min), (self.x_max, self.y_max), size=(count, 2)
        )

    def clip(self, points: np.ndarray) -> np.ndarray:
        return np.clip(
            points, (self.x_min, self.y_min), (self.x_max, self.y_max)
        )


@dataclass(frozen=True)
class FakingSearchConfig:
    """Search controls for the fake-position optimizer.

    exclusion_radius keeps the fake away from the true position: claiming
    (nearly) where you are deceives everyone and defeats nobody, so the
    interesting adversary is one forced to lie by at least this much.
    """

    exclusion_radius: float
    grid_step: float
    refine_iters: int = 25

    def __post_init__(self) -> None:
        if self.exclusion_radius <= 0:
            raise ValueError(f"exclusion_radius must be positive, got {self.exclusion_radius}")
        if self.grid_step <= 0:
            raise ValueError(f"grid_step must be positive, got {self.grid_step}")
        if self.refine_iters < 0:
            raise ValueError(f"refine_iters must be nonnegative, got {self.refine_iters}")


@dataclass(frozen=True)
class FakingOutcome:
    fake_position: tuple[float, float]
    expected_deceived: float
    per_node_probs: tuple[float, ...]


def _true_distances(true_position, genuine_positions) -> tuple[np.ndarray, np.ndarray]:
    x0 = np.asarray(true_position, dtype=float).reshape(2)
    gp = np.asarray(genuine_positions, dtype=float).reshape(-1, 2)
    if gp.shape[0] == 0:
        raise ValueError("need at least one genuine position")
    r = np.hypot(gp[:, 0] - x0[0], gp[:, 1] - x0[1])
    if np.any(r <= 0):
        raise ValueError("a genuine node coincides with the faker's true position")
    return x0, r


def _theta_batch(
    params: SignalParams, true_position, genuine_positions, points: np.ndarray
) -> np.ndarray:
    """Expected number of deceived receivers for each candidate point."""
    _, r = _true_distances(true_position, genuine_positions)
    gp = np.asarray(genuine_positions, dtype=float).reshape(-1, 2)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    claimed = np.hypot(gp[:, 0, None] - pts[:, 0][None, :], gp[:, 1, None] - pts[:, 1][None, :])
    probs = _deception_prob_arrays(params, r[:, None], claimed)
    # a claim of exactly zero distance to some receiver can never be ranged
    probs = np.where(claimed > 0, probs, 0.0)
    return probs.sum(axis=0)


def theta_for_fake(
    params: SignalParams, true_position, fake_position, genuine_positions
) -> float:
    """Expected count of genuine receivers deceived by claiming ``fake_position``.

    Sums, over receivers, the probability that the claimed distance passes
    the receiver's 3-sigma check given the true one.
    """
    val = _theta_batch(params, true_position, genuine_positions, np.asarray(fake_position, float).reshape(1, 2))
    return float(val[0])


def _pair_reflections(x0: np.ndarray, gp: np.ndarray) -> np.ndarray:
    """Second intersection of each pair of equal-range circles.

    Every circle "points at distance r_j from receiver j" passes through the
    true position; for a pair of receivers the other crossing is the mirror
    image of the true position across the line joining them. Those points
    keep two claimed distances exactly truthful and are the payoff spots
    when the noise band is thin.
    """
    n = gp.shape[0]
    if n < 2:
        return np.empty((0, 2))
    ii, jj = np.triu_indices(n, k=1)
    a, b = gp[ii], gp[jj]
    ab = b - a
    norm2 = np.einsum("ij,ij->i", ab, ab)
    keep = norm2 > 1e-18
    a, ab, norm2 = a[keep], ab[keep], norm2[keep]
    t = np.einsum("ij,ij->i", x0 - a, ab) / norm2
    proj = a + t[:, None] * ab
    return 2.0 * proj - x0


def _circle_points(x0: np.ndarray, gp: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Evenly spaced points on each receiver's equal-range circle."""
    ang = np.linspace(0.0, 2.0 * np.pi, CIRCLE_SAMPLES, endpoint=False)
    offs = np.stack([np.cos(ang), np.sin(ang)], axis=1)  # (K, 2)
    return (gp[:, None, :] + r[:, None, None] * offs[None, :, :]).reshape(-1, 2)


def _grid_points(region: Region, step: float) -> np.ndarray:
    nx = max(2, int(round(region.width / step)) + 1)
    ny = max(2, int(round(region.height / step)) + 1)
    xs = np.linspace(region.x_min, region.x_max, nx)
    ys = np.linspace(region.y_min, region.y_max, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def _feasible(region: Region, x0: np.ndarray, radius: float, pts: np.ndarray) -> np.ndarray:
    dist = np.hypot(pts[:, 0] - x0[0], pts[:, 1] - x0[1])
    return pts[(dist >= radius) & region.contains(pts)]


def _lex_best(points: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, float]:
    """Highest value; ties broken toward the lowest (x, y) coordinate."""
    vmax = values.max()
    tied = points[values == vmax]
    order = np.lexsort((tied[:, 1], tied[:, 0]))
    return tied[order[0]], float(vmax)


def optimize_fake_position(
    params: SignalParams,
    region: Region,
    true_position,
    genuine_positions,
    config: FakingSearchConfig,
) -> FakingOutcome:
    """Best position to claim from ``true_position``, by expected deceptions.

    Deterministic search: a coarse grid over the region, plus geometry
    candidates (pairwise circle crossings and points on each equal-range
    circle, which carry the optima when the noise band is too thin for any
    grid), filtered to the feasible set, then greedy compass refinement
    with step halving from the top few candidates.
    """
    x0, r = _true_distances(true_position, genuine_positions)
    gp = np.asarray(genuine_positions, dtype=float).reshape(-1, 2)
    if not region.contains(x0):
        raise ValueError("true_position lies outside the region")

    corners = np.array(
        [
            (region.x_min, region.y_min),
            (region.x_min, region.y_max),
            (region.x_max, region.y_min),
            (region.x_max, region.y_max),
        ]
    )
    corner_dist = np.hypot(corners[:, 0] - x0[0], corners[:, 1] - x0[1])
    if corner_dist.max() < config.exclusion_radius:
        raise ValueError("exclusion ball covers the whole region; no feasible fake exists")

    cands = np.concatenate(
        [
            _grid_points(region, config.grid_step),
            _pair_reflections(x0, gp),
            _circle_points(x0, gp, r),
        ]
    )
    cands = _feasible(region, x0, config.exclusion_radius, cands)
    values = _theta_batch(params, x0, gp, cands)

    # refine from the strongest few starts; cheap insurance against the
    # greedy walk stalling on a local ridge
    order = np.lexsort((cands[:, 1], cands[:, 0], -values))
    starts = order[:REFINE_STARTS]

    best_pt, best_val = _lex_best(cands[starts], values[starts])
    for idx in starts:
        pt, val = cands[idx], float(values[idx])
        step = config.grid_step / 2.0
        for _ in range(config.refine_iters):
            moves = region.clip(pt[None, :] + step * _COMPASS)
            moves = _feasible(region, x0, config.exclusion_radius, moves)
            if moves.shape[0] == 0:
                step /= 2.0
                continue
            mvals = _theta_batch(params, x0, gp, moves)
            cand_pt, cand_val = _lex_best(moves, mvals)
            if cand_val > val:
                pt, val = cand_pt, cand_val
            else:
                step /= 2.0
        if val > best_val or (val == best_val and tuple(pt) < tuple(best_pt)):
            best_pt, best_val = pt, val

    claimed = np.hypot(gp[:, 0] - best_pt[0], gp[:, 1] - best_pt[1])
    probs = np.where(claimed > 0, _deception_prob_arrays(params, r, claimed), 0.0)
    return FakingOutcome(
        fake_position=(float(best_pt[0]), float(best_pt[1])),
        expected_deceived=float(probs.sum()),
        per_node_probs=tuple(float(q) for q in probs),
    )
