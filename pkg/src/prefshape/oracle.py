"""Simulated users answering preference queries from a known reward.

The ground truth is either purely linear in the hand-coded features or
linear plus a hidden nonlinear term the hand-coded set cannot express,
which is what the learned network feature should pick up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import features

HIDDEN_FEATURES = ("ahead_of_human", "min_gap_penalty")


def _ahead_of_human(traj, gamma: float) -> float:
    dy = traj.states[:, 1] - traj.states[:, 5]
    return float(np.tanh(gamma * dy).mean())


def _min_gap_penalty(traj, gamma: float) -> float:
    d2 = (traj.states[:, 0] - traj.states[:, 4]) ** 2 + (traj.states[:, 1] - traj.states[:, 5]) ** 2
    return float(-np.exp(-gamma * d2).max())


@dataclass(frozen=True)
class GroundTruth:
    """Reward used to answer queries. kind: 'linear_hc' or 'linear_plus_hidden'."""

    kind: str
    w_star: np.ndarray
    temperature: float = 10.0  # sigmoid sharpness; None = deterministic responses
    alpha: float = 0.5
    hidden: str = "ahead_of_human"
    gamma: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "w_star", np.asarray(self.w_star, dtype=float))
        if self.kind not in ("linear_hc", "linear_plus_hidden"):
            raise ValueError(f"unknown ground truth kind {self.kind!r}")
        if self.kind == "linear_plus_hidden" and self.hidden not in HIDDEN_FEATURES:
            raise ValueError(f"unknown hidden feature {self.hidden!r}")

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "w_star": self.w_star.tolist(),
            "temperature": self.temperature,
            "alpha": self.alpha,
            "hidden": self.hidden,
            "gamma": self.gamma,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "GroundTruth":
        d = dict(d)
        d["w_star"] = np.array(d["w_star"], dtype=float)
        return GroundTruth(**d)


def true_reward(traj, gt: GroundTruth) -> float:
    r = float(gt.w_star @ features.accumulate(traj))
    if gt.kind == "linear_plus_hidden":
        h = _ahead_of_human if gt.hidden == "ahead_of_human" else _min_gap_penalty
        r += gt.alpha * h(traj, gt.gamma)
    return r


def respond(query, gt: GroundTruth, rng: np.random.Generator = None) -> int:
    """+1 if trajectory A is (noisily) preferred, else -1.

    Stochastic mode draws +1 with probability sigma(beta * (R_a - R_b))
    where the reward difference is the per-trajectory total (the per-step
    mean times the step count), so the temperature acts on the same margin
    scale the belief sees; temperature None gives the deterministic sign
    (tie -> +1).
    """
    dr = true_reward(query.traj_a, gt) - true_reward(query.traj_b, gt)
    dr *= query.traj_a.states.shape[0]
    if gt.temperature is None:
        return 1 if dr >= 0 else -1
    p = 1.0 / (1.0 + np.exp(-gt.temperature * dr))
    rng = rng if rng is not None else np.random.default_rng()
    return 1 if rng.random() < p else -1
