"""Dataset container: response with missingness mask plus covariate roles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Dataset"]


@dataclass
class Dataset:
    """Regression data with a possibly missing response.

    y holds NaN at the missing positions; s is the response indicator
    (1 = observed). x collects the outcome-model covariates (no intercept
    column), z the subset entering the response model. Instrument columns
    live in x only. Optional group/time codes support longitudinal data.
    y_full carries the oracle (pre-missingness) responses for simulated
    data and is never used by the samplers.
    """

    y: np.ndarray
    s: np.ndarray
    x: np.ndarray
    z: np.ndarray
    group: np.ndarray | None = None
    time: np.ndarray | None = None
    x_names: list = field(default_factory=list)
    z_names: list = field(default_factory=list)
    y_full: np.ndarray | None = None

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.s = np.asarray(self.s, dtype=int)
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim == 1:
            self.x = self.x.reshape(-1, 1)
        if self.x.shape[0] != self.y.size:
            raise ValueError("covariate rows do not match the response length")
        self.z = np.asarray(self.z, dtype=float)
        if self.z.ndim == 1:
            self.z = self.z.reshape(-1, 1) if self.z.size else self.z.reshape(0, 0)
        if self.s.size != self.y.size:
            raise ValueError("response and indicator lengths differ")
        nan_mask = np.isnan(self.y)
        if np.any(nan_mask != (self.s == 0)):
            raise ValueError("missingness mask disagrees with NaN pattern in y")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("covariates must be complete and finite")
        if not self.x_names:
            self.x_names = [f"x{j+1}" for j in range(self.x.shape[1])]
        if not self.z_names:
            self.z_names = [f"z{j+1}" for j in range(self.z.shape[1])]
        if self.group is not None:
            self.group = np.asarray(self.group)
            _, self.group = np.unique(self.group, return_inverse=True)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def n_groups(self) -> int:
        return 0 if self.group is None else int(self.group.max()) + 1

    @property
    def miss_idx(self) -> np.ndarray:
        return np.where(self.s == 0)[0]

    @property
    def obs_idx(self) -> np.ndarray:
        return np.where(self.s == 1)[0]

    @property
    def n_missing(self) -> int:
        return int((self.s == 0).sum())

    @property
    def y_obs(self) -> np.ndarray:
        return self.y[self.obs_idx]

    def completed(self, y_mis: np.ndarray) -> np.ndarray:
        """Full response vector with y_mis substituted at the missing slots."""
        out = self.y.copy()
        out[self.miss_idx] = y_mis
        return out

    def with_lagged_indicator(self, name: str = "s_lag") -> "Dataset":
        """Append the within-subject lagged response indicator to z.

        Rows are matched by (group, time); the lag at each subject's first
        time point is 1. Requires group and time codes.
        """
        if self.group is None or self.time is None:
            raise ValueError("lagged indicator needs group and time columns")
        lag = np.ones(self.n)
        order = np.lexsort((self.time, self.group))
        g_sorted = self.group[order]
        s_sorted = self.s[order]
        prev = np.empty(self.n)
        prev[0] = 1.0
        prev[1:] = np.where(g_sorted[1:] == g_sorted[:-1], s_sorted[:-1], 1.0)
        lag[order] = prev
        z = np.column_stack([self.z, lag]) if self.z.size else lag.reshape(-1, 1)
        return Dataset(
            y=self.y, s=self.s, x=self.x, z=z, group=self.group, time=self.time,
            x_names=list(self.x_names), z_names=list(self.z_names) + [name],
            y_full=self.y_full,
        )
