"""Spline and radial-basis design matrices, knot and center placement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SplineBasisSpec",
    "RbfSpec",
    "power_basis",
    "spline_basis",
    "truncated_power_basis",
    "place_knots",
    "rbf_design",
    "cluster_centers",
]


@dataclass
class SplineBasisSpec:
    """Truncated power basis of a given degree with an ordered knot vector."""

    degree: int
    knots: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        if self.degree < 1:
            raise ValueError(f"spline degree must be >= 1, got {self.degree}")
        if self.knots.size > 1 and not np.all(np.diff(self.knots) > 0):
            raise ValueError("knots must be strictly increasing")

    @property
    def n_knots(self) -> int:
        return int(self.knots.size)


@dataclass
class RbfSpec:
    """Gaussian radial basis: centers in covariate space plus positive scales."""

    centers: np.ndarray
    scales: np.ndarray

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.scales = np.atleast_1d(np.asarray(self.scales, dtype=float))
        if self.centers.shape[0] < 1:
            raise ValueError("need at least one RBF center")
        if self.scales.size == 1:
            self.scales = np.full(self.centers.shape[0], self.scales[0])
        if self.scales.size != self.centers.shape[0]:
            raise ValueError("one scale per center required")
        if np.any(self.scales <= 0):
            raise ValueError("RBF scales must be > 0")

    @property
    def n_basis(self) -> int:
        return int(self.centers.shape[0])


def power_basis(y, degree: int) -> np.ndarray:
    """Rows (1, y, y^2, ..., y^degree) for each element of y."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.vander(y, degree + 1, increasing=True)


def spline_basis(y, knots: np.ndarray, degree: int) -> np.ndarray:
    """Rows of truncated power terms (y - knot)_+^degree, one column per knot.

    Degree 0 is the indicator 1{y > knot}, needed by spline derivatives.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    knots = np.asarray(knots, dtype=float)
    if knots.size == 0:
        return np.empty((y.size, 0))
    diff = y[:, None] - knots[None, :]
    if degree == 0:
        return (diff > 0).astype(float)
    return np.where(diff > 0, diff, 0.0) ** degree


def truncated_power_basis(y: float, spec: SplineBasisSpec):
    """Basis row of a scalar response: polynomial part and spline part.

    Returns (w1, w2) with w1 = (1, y, ..., y^q) and
    w2_l = (y - knot_l)^q for y > knot_l, else 0.
    """
    if not np.isfinite(y):
        raise ValueError(f"response value must be finite, got {y}")
    w1 = power_basis(y, spec.degree)[0]
    w2 = spline_basis(y, spec.knots, spec.degree)[0]
    return w1, w2


def place_knots(y_obs, n_knots: int, a: float = 0.0, b: float = 0.0,
                lo_quantile: float = 0.10, hi_quantile: float = 0.90) -> np.ndarray:
    """Equally spaced knots spanning expanded empirical quantiles.

    The base span runs from the 10% to the 90% quantile of the observed
    responses (linear interpolation between order statistics); the endpoints
    are then pushed out by a and b halves of the base span:

        lo = q10 - a * (q90 - q10) / 2,   hi = q90 + b * (q90 - q10) / 2.

    With a = b = 0 this is the plain quantile rule. Nonzero constants widen
    the coverage so the spline can track response values that are only seen
    among the missing part of the sample.
    """
    y_obs = np.asarray(y_obs, dtype=float)
    if n_knots < 2:
        raise ValueError(f"need at least 2 knots, got {n_knots}")
    if a < 0 or b < 0:
        raise ValueError("expansion constants must be nonnegative")
    k_lo = float(np.quantile(y_obs, lo_quantile))
    k_hi = float(np.quantile(y_obs, hi_quantile))
    if k_hi <= k_lo:
        raise ValueError("observed responses have a degenerate quantile range")
    span = k_hi - k_lo
    return np.linspace(k_lo - a * span / 2.0, k_hi + b * span / 2.0, n_knots)


def rbf_design(Z: np.ndarray, spec: RbfSpec) -> np.ndarray:
    """n x R matrix with entries exp(-scale_r * ||z_i - center_r||^2)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != spec.centers.shape[1]:
        raise ValueError(
            f"covariate dimension {Z.shape[1]} does not match "
            f"center dimension {spec.centers.shape[1]}"
        )
    sq = ((Z[:, None, :] - spec.centers[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-spec.scales[None, :] * sq)


def cluster_centers(Z: np.ndarray, n_clusters: int,
                    rng: np.random.Generator, n_restarts: int = 25) -> np.ndarray:
    """k-means centers of the rows of Z (Lloyd iterations, seeded restarts).

    Runs n_restarts seeded initialisations, iterating until assignments
    stabilise, and keeps the solution with the lowest within-cluster sum of
    squares. Deterministic given the generator state.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    n = Z.shape[0]
    if not 1 <= n_clusters <= n:
        raise ValueError(f"need 1 <= n_clusters <= n rows, got R={n_clusters}, n={n}")

    best_centers = None
    best_inertia = np.inf
    for _ in range(n_restarts):
        centers = Z[rng.choice(n, size=n_clusters, replace=False)].copy()
        assign = np.full(n, -1)
        for _ in range(200):
            d2 = ((Z[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_assign = d2.argmin(axis=1)
            if np.array_equal(new_assign, assign):
                break
            assign = new_assign
            for r in range(n_clusters):
                members = assign == r
                if members.any():
                    centers[r] = Z[members].mean(axis=0)
                else:
                    centers[r] = Z[rng.integers(n)]
        inertia = float(((Z - centers[assign]) ** 2).sum())
        if inertia < best_inertia:
            best_inertia = inertia
            best_centers = centers.copy()
    return best_centers
