"""Active query construction.

Each query pairs two trajectories, each optimized for a different weight
sample drawn from the current belief. The sample pair is chosen by an
exhaustive search over the multiobjective score
p(w_i) p(w_j) + mu ||w_i - w_j||, and each trajectory is found with
bounded L-BFGS ascent over the control sequence from random restarts.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import belief as belief_mod
from . import dynamics, features
from .belief import BeliefState, McmcConfig
from .dynamics import ScenarioConfig, Trajectory

FD_STEP = 1e-5


class DegenerateQueryError(RuntimeError):
    """Both optimized trajectories collapsed to identical controls."""

    def __init__(self, w_a, w_b):
        super().__init__("query trajectories are identical after all retries")
        self.w_a = w_a
        self.w_b = w_b


@dataclass(frozen=True)
class Query:
    query_id: str
    traj_a: Trajectory
    traj_b: Trajectory
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        prov = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in self.provenance.items()}
        return {
            "query_id": self.query_id,
            "traj_a": self.traj_a.to_json_dict(),
            "traj_b": self.traj_b.to_json_dict(),
            "provenance": prov,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "Query":
        return Query(
            d["query_id"],
            Trajectory.from_json_dict(d["traj_a"]),
            Trajectory.from_json_dict(d["traj_b"]),
            d.get("provenance", {}),
        )


@dataclass(frozen=True)
class QueryGenConfig:
    n_samples: int = 100  # M: posterior samples per query round
    mu: float = 0.1
    restarts: int = 10
    max_iter: int = 100
    max_retries: int = 5
    mcmc: McmcConfig = field(default_factory=McmcConfig)


def select_weight_pair(samples: np.ndarray, belief: BeliefState, mu: float):
    """Best unordered sample pair under p(w_i) p(w_j) + mu ||w_i - w_j||.

    Unnormalized posteriors are rescaled by their maximum over the sample
    set so the product term stays in [0, 1]^2 as the record count grows.
    Ties break to the lowest (i, j). Returns (i, j, w_i, w_j).
    """
    samples = np.asarray(samples, dtype=float)
    m = samples.shape[0]
    if m < 2:
        raise ValueError("need at least 2 samples")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    logp = np.array([belief_mod.log_unnorm_posterior(w, belief) for w in samples])
    p = np.exp(logp - logp.max())
    best = None
    for i in range(m):
        for j in range(i + 1, m):
            score = p[i] * p[j] + mu * np.linalg.norm(samples[i] - samples[j])
            if best is None or score > best[0] + 1e-15:
                best = (score, i, j)
    _, i, j = best
    return i, j, samples[i], samples[j]


def reward_of_controls(flat: np.ndarray, w: np.ndarray, scenario: ScenarioConfig,
                       phi_fn=None) -> float:
    traj = dynamics.rollout(scenario.initial_state,
                            dynamics.controls_from_flat(flat, scenario), scenario)
    return features.reward(traj, w, phi_fn)


def reward_control_gradient(flat: np.ndarray, w: np.ndarray, scenario: ScenarioConfig,
                            phi_fn=None, h: float = FD_STEP) -> np.ndarray:
    """Central finite-difference gradient of the trajectory reward w.r.t. the
    flat control vector."""
    flat = np.asarray(flat, dtype=float)
    g = np.empty_like(flat)
    for i in range(flat.size):
        e = np.zeros_like(flat)
        e[i] = h
        g[i] = (reward_of_controls(flat + e, w, scenario, phi_fn)
                - reward_of_controls(flat - e, w, scenario, phi_fn)) / (2 * h)
    return g


def _fast_neg_reward_and_grad(flat, w, scenario, h=FD_STEP):
    """Hand-coded-reward objective and central-FD gradient from one batched
    rollout of the center point plus all 2n coordinate perturbations."""
    flat = np.asarray(flat, dtype=float)
    n = flat.size
    batch = np.empty((2 * n + 1, n))
    batch[0] = flat
    eye = h * np.eye(n)
    batch[1 : n + 1] = flat + eye
    batch[n + 1 :] = flat - eye
    states = dynamics.rollout_batch(batch, scenario)
    B, T, _ = states.shape
    vals = features.phi_hc_states(states.reshape(B * T, 8)) @ w
    rewards = vals.reshape(B, T).sum(axis=1)
    if features.ACCUMULATE_MODE == "mean":
        rewards /= T
    g = (rewards[1 : n + 1] - rewards[n + 1 :]) / (2 * h)
    return -rewards[0], -g


def optimize_trajectory(w: np.ndarray, scenario: ScenarioConfig, restarts: int = 10,
                        rng: np.random.Generator = None, max_iter: int = 100,
                        phi_fn=None) -> Trajectory:
    """Maximize the linear reward over control sequences with L-BFGS-B from
    random restarts; returns the best rollout found."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    w = np.asarray(w, dtype=float)
    bounds = scenario.control_bounds()

    if phi_fn is None:
        def neg_reward_and_grad(flat):
            return _fast_neg_reward_and_grad(flat, w, scenario)
    else:
        def neg_reward_and_grad(flat):
            f = reward_of_controls(flat, w, scenario, phi_fn)
            g = reward_control_gradient(flat, w, scenario, phi_fn)
            return -f, -g

    best_flat, best_val = None, -np.inf
    for _ in range(restarts):
        x0 = dynamics.sample_random_controls(rng, scenario).blocks.ravel()
        f0 = reward_of_controls(x0, w, scenario, phi_fn)
        if np.isfinite(f0) and f0 > best_val:
            best_val, best_flat = f0, x0
        try:
            res = minimize(neg_reward_and_grad, x0, jac=True, method="L-BFGS-B",
                           bounds=bounds, options={"maxiter": max_iter, "maxcor": 10})
        except (FloatingPointError, ValueError):
            continue
        val = -res.fun
        if np.isfinite(val) and val > best_val:
            best_val, best_flat = val, res.x
    if best_flat is None:
        raise RuntimeError("all restarts failed")
    # clipping to bounds is a no-op for L-BFGS-B but guards solver drift
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    best_flat = np.clip(best_flat, lo, hi)
    return dynamics.rollout(scenario.initial_state,
                            dynamics.controls_from_flat(best_flat, scenario), scenario)


def _query_id(traj_a: Trajectory, traj_b: Trajectory) -> str:
    h = hashlib.sha1()
    h.update(np.ascontiguousarray(traj_a.controls.blocks).tobytes())
    h.update(np.ascontiguousarray(traj_b.controls.blocks).tobytes())
    return h.hexdigest()[:16]


def generate_query(belief: BeliefState, scenario: ScenarioConfig,
                   cfg: QueryGenConfig, rng: np.random.Generator) -> Query:
    """One round of the active loop: sample the posterior, pick a weight
    pair by the heuristic, optimize one trajectory per weight."""
    if belief.dimension != features.N_HC:
        raise ValueError("active queries use the hand-coded features only")
    samples = belief_mod.sample_posterior(belief, cfg.n_samples, cfg.mcmc, rng)
    _, _, w_a, w_b = select_weight_pair(samples, belief, cfg.mu)
    traj_a = optimize_trajectory(w_a, scenario, cfg.restarts, rng, cfg.max_iter)
    traj_b = optimize_trajectory(w_b, scenario, cfg.restarts, rng, cfg.max_iter)
    for _ in range(cfg.max_retries):
        if traj_a.controls != traj_b.controls:
            break
        traj_b = optimize_trajectory(w_b, scenario, cfg.restarts, rng, cfg.max_iter)
    else:
        raise DegenerateQueryError(w_a, w_b)
    return Query(
        query_id=_query_id(traj_a, traj_b),
        traj_a=traj_a,
        traj_b=traj_b,
        provenance={"w_a": w_a, "w_b": w_b},
    )


def sample_support_uniform(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform draw from {w >= 0, ||w||_2 <= 1}."""
    direction = np.abs(rng.standard_normal(d))
    direction /= np.linalg.norm(direction)
    return direction * rng.random() ** (1.0 / d)


def generate_standardized_test(count: int, scenario: ScenarioConfig,
                               rng: np.random.Generator, restarts: int = 10,
                               max_iter: int = 100) -> list:
    """Fixed evaluation queries from independent random weight pairs, each
    trajectory locally optimized for its weight."""
    if count < 1:
        raise ValueError("count must be >= 1")
    queries = []
    for _ in range(count):
        w_a = sample_support_uniform(rng, features.N_HC)
        w_b = sample_support_uniform(rng, features.N_HC)
        traj_a = optimize_trajectory(w_a, scenario, restarts, rng, max_iter)
        traj_b = optimize_trajectory(w_b, scenario, restarts, rng, max_iter)
        queries.append(Query(
            query_id=_query_id(traj_a, traj_b),
            traj_a=traj_a,
            traj_b=traj_b,
            provenance={"w_a": w_a, "w_b": w_b, "source": "standardized"},
        ))
    return queries


def best_of_n_trajectory(w: np.ndarray, scenario: ScenarioConfig, n: int,
                         rng: np.random.Generator, phi_fn=None) -> Trajectory:
    """Highest-reward rollout among n uniformly random control sequences."""
    if n < 1:
        raise ValueError("n must be >= 1")
    best, best_val = None, -np.inf
    for _ in range(n):
        u = dynamics.sample_random_controls(rng, scenario)
        traj = dynamics.rollout(scenario.initial_state, u, scenario)
        val = features.reward(traj, w, phi_fn)
        if val > best_val:
            best, best_val = traj, val
    return best
