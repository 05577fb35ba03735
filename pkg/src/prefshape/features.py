"""Hand-coded driving features, network inputs, and linear reward evaluation.

Per-step features (in fixed order): stay_lane, keep_speed, heading,
collision. Each is bounded in [-1, 1] for every state. Trajectory features
are the per-step mean by default (configurable to the plain sum).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

FEATURE_NAMES = ("stay_lane", "keep_speed", "heading", "collision")
N_HC = len(FEATURE_NAMES)

# stay-lane falloff: feature halves midway between adjacent lane centers
LANE_FALLOFF = math.log(2.0) / 0.085**2

GAP_RATE_BOUND = 10.0
GAP_RATE_EPS = 1e-6

# "mean" divides the per-step sum by k+1; "sum" leaves it as is
ACCUMULATE_MODE = "mean"


def phi_hc_states(states: np.ndarray, lane_falloff: float = LANE_FALLOFF) -> np.ndarray:
    """Hand-coded per-step features for an (T, 8) state array -> (T, 4)."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    x_r, y_r, th_r, v_r = states[:, 0], states[:, 1], states[:, 2], states[:, 3]
    x_h, y_h = states[:, 4], states[:, 5]

    lane_dev = np.minimum.reduce([(x_r - 0.17) ** 2, x_r**2, (x_r + 0.17) ** 2])
    stay_lane = np.exp(-lane_falloff * lane_dev)
    keep_speed = -((v_r - 1.0) ** 2)
    heading = np.sin(np.radians(th_r))
    collision = -np.exp(-(7.0 * (x_r - x_h) ** 2 + 3.0 * (y_r - y_h) ** 2))
    return np.column_stack([stay_lane, keep_speed, heading, collision])


def phi_hc(s) -> np.ndarray:
    """Hand-coded features of a single JointState -> length-4 vector."""
    return phi_hc_states(s.as_array().reshape(1, -1))[0]


def distance(s) -> float:
    """Euclidean distance between the two cars."""
    a = s.as_array()
    return float(math.hypot(a[0] - a[4], a[1] - a[5]))


def gap_rate_values(states: np.ndarray, bound: float = GAP_RATE_BOUND,
                    eps: float = GAP_RATE_EPS) -> np.ndarray:
    """(y_r - y_h) / (v_r - v_h) clamped to [-bound, bound].

    At the v_r == v_h singularity the value saturates to sign(y_r - y_h) * bound
    (0 when the gap is also zero).
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    dy = states[:, 1] - states[:, 5]
    dv = states[:, 3] - states[:, 7]
    out = np.where(np.abs(dv) < eps, np.sign(dy) * bound,
                   dy / np.where(np.abs(dv) < eps, 1.0, dv))
    return np.clip(out, -bound, bound)


def gap_rate(s, bound: float = GAP_RATE_BOUND) -> float:
    return float(gap_rate_values(s.as_array().reshape(1, -1), bound=bound)[0])


def net_inputs(states: np.ndarray, n_in: int = 4) -> np.ndarray:
    """Network input rows [x_r, d, theta_r, v_r(, gap_rate)] for each state.

    Heading is centered on straight-ahead (90 degrees): feeding the raw
    degree value puts a large constant into every hidden unit, which
    saturates the tanh output and freezes training.
    """
    if n_in not in (4, 5):
        raise ValueError("n_in must be 4 or 5")
    states = np.atleast_2d(np.asarray(states, dtype=float))
    d = np.hypot(states[:, 0] - states[:, 4], states[:, 1] - states[:, 5])
    cols = [states[:, 0], d, states[:, 2] - 90.0, states[:, 3]]
    if n_in == 5:
        cols.append(gap_rate_values(states))
    return np.column_stack(cols)


def accumulate(traj, per_step=None, mode: str = None) -> np.ndarray:
    """Trajectory feature vector: per-step features reduced over all k+1 states.

    per_step maps an (T, 8) state array to (T, n) feature rows; defaults to
    the hand-coded set.
    """
    mode = mode or ACCUMULATE_MODE
    fn = per_step or phi_hc_states
    vals = fn(traj.states)
    if mode == "mean":
        return vals.mean(axis=0)
    if mode == "sum":
        return vals.sum(axis=0)
    raise ValueError(f"unknown accumulate mode {mode!r}")


def reward(traj, w: np.ndarray, phi_fn=None) -> float:
    """Linear trajectory reward w . Phi(traj).

    phi_fn, when given, maps a trajectory to its feature vector (used for
    mixed hand-coded + learned models); defaults to the hand-coded Phi.
    """
    w = np.asarray(w, dtype=float)
    phi = phi_fn(traj) if phi_fn is not None else accumulate(traj)
    if w.shape != phi.shape:
        raise ValueError(f"weight dim {w.shape} does not match feature dim {phi.shape}")
    return float(w @ phi)


@dataclass(frozen=True)
class GridSpec:
    """Axis sweep for feature visualization: named axes with value arrays,
    remaining state entries frozen."""

    axes: dict  # name -> 1-D array of values; names among x_r, y_h, x_h, theta_r, v_r
    frozen: dict  # state-field name -> value

    _FIELDS = ("x_r", "y_r", "theta_r", "v_r", "x_h", "y_h", "theta_h", "v_h")

    def base_state(self) -> np.ndarray:
        s = np.array([0.0, 0.0, 90.0, 1.0, 0.17, 0.0, 90.0, 0.8])
        for name, val in self.frozen.items():
            s[self._FIELDS.index(name)] = val
        return s


def eval_feature_grid(feature, spec: GridSpec) -> tuple:
    """Dense grid of feature values over the swept axes.

    feature maps an (T, 8) state array to T values. Returns (axis_names,
    axis_values, grid) with the grid in row-major axis order.
    """
    names = list(spec.axes)
    values = [np.asarray(spec.axes[n], dtype=float) for n in names]
    if not names or any(v.size == 0 for v in values):
        raise ValueError("grid needs at least one non-empty axis")
    mesh = np.meshgrid(*values, indexing="ij")
    n_pts = mesh[0].size
    states = np.tile(spec.base_state(), (n_pts, 1))
    for name, m in zip(names, mesh):
        states[:, GridSpec._FIELDS.index(name)] = m.ravel()
    vals = np.asarray(feature(states), dtype=float).reshape(mesh[0].shape)
    return names, values, vals


def write_grid_csv(path, names, values, grid, frozen: dict):
    """Row-major CSV export with axis metadata header rows."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["# axes"] + names)
        for n, v in zip(names, values):
            w.writerow([f"# axis {n}"] + [repr(x) for x in v])
        w.writerow(["# frozen"] + [f"{k}={v}" for k, v in sorted(frozen.items())])
        if grid.ndim == 1:
            w.writerow([repr(x) for x in grid])
        else:
            for row in grid.reshape(grid.shape[0], -1):
                w.writerow([repr(x) for x in row])
