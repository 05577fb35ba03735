"""Session orchestration: the active-query loop, persistence, offline
training, and analysis exports.

A session lives in one directory: meta.json, an append-only records.jsonl
(one line per answered query), and periodic belief snapshots. Per-query
rng streams are derived from (seed, query index), so a killed session
resumed from disk replays identically.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import belief as belief_mod
from . import featlearn, features, oracle, querygen
from .belief import BeliefState, McmcConfig, PreferenceRecord
from .dynamics import ScenarioConfig
from .featlearn import ComparisonRecord, DatasetSplit, RewardModel, TrainConfig
from .querygen import Query, QueryGenConfig


def data_dir() -> Path:
    return Path(os.environ.get("PREFSHAPE_DATA_DIR", "./prefshape_data"))


# Belief records use the per-trajectory feature sum: with the unit-norm
# weight cap, mean-normalized features make query margins ~1/(k+1) and the
# sigmoid likelihood nearly flat, so the posterior would barely update.
BELIEF_PHI_MODE = "sum"


def _belief_phi(traj) -> np.ndarray:
    return features.accumulate(traj, mode=BELIEF_PHI_MODE)


@dataclass(frozen=True)
class SessionConfig:
    n_queries: int = 100
    seed: int = 0
    snapshot_every: int = 10
    querygen: QueryGenConfig = field(default_factory=QueryGenConfig)


class OracleUser:
    """Answers queries from a ground-truth reward."""

    kind = "oracle"

    def __init__(self, gt: oracle.GroundTruth):
        self.gt = gt

    def respond(self, query: Query, rng: np.random.Generator) -> int:
        return oracle.respond(query, self.gt, rng)

    def describe(self) -> dict:
        return {"kind": "oracle", "ground_truth": self.gt.to_json_dict()}


@dataclass
class SessionLog:
    """Answered queries of one session, in order."""

    session_id: str
    scenario: ScenarioConfig
    config: SessionConfig
    user_info: dict
    entries: list = field(default_factory=list)  # (Query, response, timestamp)

    @property
    def n_answered(self) -> int:
        return len(self.entries)

    def belief(self) -> BeliefState:
        b = BeliefState(features.N_HC)
        for query, response, _ in self.entries:
            b = b.with_record(PreferenceRecord(
                query.query_id,
                _belief_phi(query.traj_a),
                _belief_phi(query.traj_b),
                response,
            ))
        return b

    def comparison_records(self) -> list:
        return [ComparisonRecord.from_query(q, r) for q, r, _ in self.entries]


class SessionStore:
    """Directory-backed persistence for one session."""

    def __init__(self, root: Path, session_id: str):
        self.dir = Path(root) / session_id
        self.session_id = session_id

    @property
    def meta_path(self) -> Path:
        return self.dir / "meta.json"

    @property
    def records_path(self) -> Path:
        return self.dir / "records.jsonl"

    def create(self, scenario: ScenarioConfig, cfg: SessionConfig, user_info: dict):
        self.dir.mkdir(parents=True, exist_ok=True)
        if not self.meta_path.exists():
            meta = {
                "session_id": self.session_id,
                "scenario": scenario.to_json_dict(),
                "config": {
                    "n_queries": cfg.n_queries,
                    "seed": cfg.seed,
                    "snapshot_every": cfg.snapshot_every,
                },
                "user": user_info,
            }
            self.meta_path.write_text(json.dumps(meta, indent=2))

    def append(self, index: int, query: Query, response: int):
        line = json.dumps({
            "index": index,
            "query": query.to_json_dict(),
            "response": response,
            "timestamp": time.time(),
        })
        with open(self.records_path, "a") as f:
            f.write(line + "\n")

    def snapshot(self, belief: BeliefState, samples: np.ndarray, seed, index: int):
        path = self.dir / f"belief_{index:04d}.json"
        path.write_text(belief_mod.snapshot_to_json(belief, samples, seed))

    def load(self) -> SessionLog:
        meta = json.loads(self.meta_path.read_text())
        c = meta["config"]
        log = SessionLog(
            session_id=meta["session_id"],
            scenario=ScenarioConfig.from_json_dict(meta["scenario"]),
            config=SessionConfig(n_queries=c["n_queries"], seed=c["seed"],
                                 snapshot_every=c["snapshot_every"]),
            user_info=meta["user"],
        )
        if self.records_path.exists():
            for line in self.records_path.read_text().splitlines():
                d = json.loads(line)
                log.entries.append((Query.from_json_dict(d["query"]),
                                    d["response"], d["timestamp"]))
        return log


def run_active_session(user, scenario: ScenarioConfig, cfg: SessionConfig,
                       store: SessionStore = None,
                       on_progress=None) -> SessionLog:
    """Fig.-2 loop: sample posterior, build a query, get the response,
    update the belief; persists after every response when given a store.

    Resumes from the store's existing records, replaying the same per-query
    rng streams derived from (seed, query index).
    """
    log = None
    if store is not None:
        store.create(scenario, cfg, user.describe())
        log = store.load()
    if log is None:
        log = SessionLog(str(uuid.uuid4()), scenario, cfg, user.describe())

    b = log.belief()
    for i in range(log.n_answered, cfg.n_queries):
        if on_progress is not None:
            on_progress(i, "optimizing")
        q_rng = np.random.default_rng([cfg.seed, i])
        query = querygen.generate_query(b, scenario, cfg.querygen, q_rng)
        r_rng = np.random.default_rng([cfg.seed, i, 1])
        response = user.respond(query, r_rng)
        log.entries.append((query, response, time.time()))
        b = b.with_record(PreferenceRecord(
            query.query_id,
            _belief_phi(query.traj_a),
            _belief_phi(query.traj_b),
            response,
        ))
        if store is not None:
            store.append(i, query, response)
            if (i + 1) % cfg.snapshot_every == 0:
                samples = belief_mod.sample_posterior(
                    b, cfg.querygen.n_samples, cfg.querygen.mcmc,
                    np.random.default_rng([cfg.seed, i, 2]))
                store.snapshot(b, samples, cfg.seed, i + 1)
    return log


def point_estimate_from_log(log: SessionLog, mcmc: McmcConfig = McmcConfig(),
                            n_samples: int = 100, seed: int = 0) -> np.ndarray:
    b = log.belief()
    samples = belief_mod.sample_posterior(b, n_samples, mcmc,
                                          np.random.default_rng([seed, 10_000]))
    return belief_mod.point_estimate(samples)


def build_test_set(count: int, scenario: ScenarioConfig, rng: np.random.Generator,
                   user=None, restarts: int = 10, max_iter: int = 100) -> list:
    """Standardized queries with frozen responses: list of (Query, response).

    response is None when no user is given (human sessions answer later).
    """
    queries = querygen.generate_standardized_test(count, scenario, rng,
                                                  restarts=restarts, max_iter=max_iter)
    out = []
    for i, q in enumerate(queries):
        resp = user.respond(q, np.random.default_rng([7, i])) if user is not None else None
        out.append((q, resp))
    return out


def test_set_to_json(test_set: list) -> str:
    return json.dumps([
        {"query": q.to_json_dict(), "response": r} for q, r in test_set
    ])


def test_set_from_json(s: str) -> list:
    return [(Query.from_json_dict(d["query"]), d["response"]) for d in json.loads(s)]


@dataclass
class ExperimentReport:
    hand_coded_accuracy: float
    mixed_mean: float
    mixed_std: float
    w_hc_estimate: np.ndarray
    train_report: featlearn.TrainReport

    def to_json_dict(self) -> dict:
        return {
            "hand_coded_accuracy": self.hand_coded_accuracy,
            "mixed_mean": self.mixed_mean,
            "mixed_std": self.mixed_std,
            "w_hc_estimate": np.asarray(self.w_hc_estimate).tolist(),
            "train": self.train_report.to_json_dict(),
        }


def run_offline_training(log: SessionLog, test_set: list, cfg: TrainConfig,
                         mcmc: McmcConfig = McmcConfig(),
                         n_train: int = 70, n_val: int = 30) -> ExperimentReport:
    """Hand-coded baseline plus network feature training on a session log.

    Uses the belief point estimate both as the baseline linear model and as
    the initialization of w_hc for training.
    """
    needed = n_train + n_val
    if log.n_answered < needed:
        raise ValueError(
            f"session has {log.n_answered} records; the split needs "
            f"{n_train} train + {n_val} validation")
    if any(r is None for _, r in test_set):
        raise ValueError("test set has unanswered queries")

    w_est = point_estimate_from_log(log, mcmc, seed=cfg.seed)
    test_records = [ComparisonRecord.from_query(q, r) for q, r in test_set]
    hc_model = RewardModel(w_est)
    hc_acc = featlearn.evaluate_accuracy(hc_model, test_records)

    split = DatasetSplit.paper_split(log.comparison_records(), test_records,
                                     n_train=n_train, n_val=n_val)
    report = featlearn.train(split, w_est, cfg)
    return ExperimentReport(hc_acc, report.test_mean, report.test_std, w_est, report)


def export_analysis(model: RewardModel, out_dir, scenario: ScenarioConfig,
                    hc_weights: np.ndarray = None, n_best: int = 10_000,
                    seed: int = 0):
    """Feature-slice CSVs, the 2-D heat map, and best-of-N optimal
    trajectories for the hand-coded-only and mixed models."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def nn_feature(states):
        n_in = model.params.n_in
        return featlearn.mlp_forward_batch(model.params, features.net_inputs(states, n_in))

    def hc_heading(states):
        return features.phi_hc_states(states)[:, 2]

    # heading sweep at x_r=0, d=0.5, v_r=0.8 (human placed straight ahead)
    thetas = np.arange(0.0, 360.5, 2.0)
    frozen = {"x_r": 0.0, "v_r": 0.8, "x_h": 0.0, "y_h": 0.5}
    spec = features.GridSpec({"theta_r": thetas}, frozen)
    for name, fn in [("nn_feature_heading.csv", nn_feature),
                     ("hc_heading_feature.csv", hc_heading)]:
        names, vals, grid = features.eval_feature_grid(fn, spec)
        features.write_grid_csv(out / name, names, vals, grid, frozen)

    speeds = np.linspace(0.0, 1.0, 101)
    spec = features.GridSpec({"v_r": speeds},
                             {"x_r": 0.0, "theta_r": 90.0, "x_h": 0.0, "y_h": 0.5})
    names, vals, grid = features.eval_feature_grid(nn_feature, spec)
    features.write_grid_csv(out / "nn_feature_speed.csv", names, vals, grid, spec.frozen)

    # heat map over human placement; robot frozen at v_r=1, theta_r=90
    hw = scenario.road_half_width
    frozen = {"x_r": 0.0, "theta_r": 90.0, "v_r": 1.0}
    spec = features.GridSpec(
        {"x_h": np.linspace(-hw, hw, 41), "y_h": np.linspace(-1.0, 1.0, 81)}, frozen)
    names, vals, grid = features.eval_feature_grid(nn_feature, spec)
    features.write_grid_csv(out / "nn_feature_heatmap.csv", names, vals, grid, frozen)

    # optimal trajectories
    results = {}
    if hc_weights is not None:
        traj = querygen.best_of_n_trajectory(hc_weights, scenario, n_best,
                                             np.random.default_rng([seed, 1]))
        results["hand_coded"] = traj.to_json_dict()
    traj = querygen.best_of_n_trajectory(model.weights, scenario, n_best,
                                         np.random.default_rng([seed, 2]),
                                         phi_fn=model.trajectory_phi)
    results["mixed"] = traj.to_json_dict()
    (out / "optimal_trajectories.json").write_text(json.dumps(results))
    return out
