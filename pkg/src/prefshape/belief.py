"""Posterior over reward weights from pairwise preferences.

Likelihood is the sigmoid of the signed trajectory-reward difference; the
prior is uniform over {w >= 0, ||w||_2 <= 1}. Sampling uses the adaptive
Metropolis algorithm of Haario et al. (proposal covariance tracks the
chain history scaled by 2.4^2 / d).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PreferenceRecord:
    """One answered query: precomputed trajectory features and the +/-1 response."""

    query_id: str
    phi_a: np.ndarray
    phi_b: np.ndarray
    response: int

    def __post_init__(self):
        object.__setattr__(self, "phi_a", np.asarray(self.phi_a, dtype=float))
        object.__setattr__(self, "phi_b", np.asarray(self.phi_b, dtype=float))
        if self.response not in (1, -1):
            raise ValueError("response must be +1 or -1")
        if self.phi_a.shape != self.phi_b.shape:
            raise ValueError("feature vectors must have equal length")

    def to_json_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "phi_a": self.phi_a.tolist(),
            "phi_b": self.phi_b.tolist(),
            "response": self.response,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "PreferenceRecord":
        return PreferenceRecord(d["query_id"], d["phi_a"], d["phi_b"], d["response"])


@dataclass(frozen=True)
class McmcConfig:
    chain_length: int = 20_000
    burn_in: int = 5_000
    adapt_start: int = 1_000
    adapt_eps: float = 1e-6
    init_proposal_std: float = 0.05


@dataclass(frozen=True)
class BeliefState:
    """Immutable preference dataset defining the unnormalized posterior over
    w in {w >= 0, ||w|| <= 1}."""

    dimension: int
    records: tuple = ()

    def __post_init__(self):
        for r in self.records:
            if r.phi_a.shape != (self.dimension,):
                raise ValueError("record dimension mismatch")

    def with_record(self, record: PreferenceRecord) -> "BeliefState":
        return BeliefState(self.dimension, self.records + (record,))

    def _delta_matrix(self) -> np.ndarray:
        """Rows I_n * (phi_a - phi_b); log posterior is sum log sigma(D @ w)."""
        if not self.records:
            return np.zeros((0, self.dimension))
        return np.stack([r.response * (r.phi_a - r.phi_b) for r in self.records])


def in_support(w: np.ndarray) -> bool:
    w = np.asarray(w, dtype=float)
    return bool(np.all(w >= 0.0) and w @ w <= 1.0)


def likelihood(record: PreferenceRecord, w: np.ndarray) -> float:
    """p(I | w) = sigma(I * w.(phi_a - phi_b))."""
    w = np.asarray(w, dtype=float)
    if w.shape != record.phi_a.shape:
        raise ValueError("weight dimension mismatch")
    z = record.response * float(w @ (record.phi_a - record.phi_b))
    return float(1.0 / (1.0 + np.exp(-z)))


def log_unnorm_posterior(w: np.ndarray, belief: BeliefState) -> float:
    """Sum of log sigmoid likelihoods; -inf outside the support."""
    w = np.asarray(w, dtype=float)
    if not in_support(w):
        return -np.inf
    D = belief._delta_matrix()
    if D.shape[0] == 0:
        return 0.0
    # log sigma(z) = -log(1 + exp(-z)), numerically via logaddexp
    z = D @ w
    return float(-np.logaddexp(0.0, -z).sum())


def sample_posterior(belief: BeliefState, M: int, cfg: McmcConfig = McmcConfig(),
                     rng: np.random.Generator = None) -> np.ndarray:
    """M posterior samples via adaptive Metropolis; returns an (M, d) array.

    Proposals are Gaussian random walks; after cfg.adapt_start steps the
    proposal covariance is s_d * (Cov(history) + eps * I) with
    s_d = 2.4^2 / d. Burn-in is discarded and the rest thinned evenly.
    """
    rng = rng if rng is not None else np.random.default_rng()
    d = belief.dimension
    kept = cfg.chain_length - cfg.burn_in
    if M < 1:
        raise ValueError("M must be >= 1")
    if M > kept:
        raise ValueError(f"M={M} exceeds post-burn-in chain length {kept}")

    D = belief._delta_matrix()

    def logpost(w):
        z = D @ w
        return -np.logaddexp(0.0, -z).sum() if z.size else 0.0

    s_d = 2.4**2 / d
    w = np.full(d, 0.3 / np.sqrt(d))  # interior starting point
    lp = logpost(w)

    chain = np.empty((cfg.chain_length, d))
    # running first/second moments (Welford) of the chain history
    mean = np.zeros(d)
    m2 = np.zeros((d, d))
    chol = cfg.init_proposal_std * np.eye(d)
    log_u = np.log(rng.random(cfg.chain_length))
    noise = rng.standard_normal((cfg.chain_length, d))

    for t in range(cfg.chain_length):
        prop = w + chol @ noise[t]
        if np.all(prop >= 0.0) and prop @ prop <= 1.0:
            lp_prop = logpost(prop)
            if log_u[t] < lp_prop - lp:
                w = prop
                lp = lp_prop
        chain[t] = w

        delta = w - mean
        mean += delta / (t + 1)
        m2 += np.outer(delta, w - mean)
        if t + 1 >= cfg.adapt_start:
            cov = m2 / t + cfg.adapt_eps * np.eye(d)
            chol = np.linalg.cholesky(s_d * cov)

    post = chain[cfg.burn_in :]
    idx = np.linspace(0, kept - 1, M).round().astype(int)
    return post[idx]


def point_estimate(samples: np.ndarray) -> np.ndarray:
    """Coordinate-wise mean projected back into the support."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples")
    w = samples.mean(axis=0)
    w = np.maximum(w, 0.0)
    norm = np.linalg.norm(w)
    if norm > 1.0:
        w = w / norm
    return w


def snapshot_to_json(belief: BeliefState, samples: np.ndarray, seed) -> str:
    return json.dumps({
        "dimension": belief.dimension,
        "records": [r.to_json_dict() for r in belief.records],
        "seed": seed,
        "samples": np.asarray(samples).tolist(),
    })


def snapshot_from_json(s: str):
    d = json.loads(s)
    belief = BeliefState(
        d["dimension"],
        tuple(PreferenceRecord.from_json_dict(r) for r in d["records"]),
    )
    return belief, np.array(d["samples"]), d["seed"]
