"""Offline learning of one neural-network reward feature.

The network (one 100-unit ReLU hidden layer, tanh output) maps per-step
inputs [x_r, d, theta_r, v_r(, gap_rate)] to a learned feature; its
trajectory value is the per-step mean, appended to the hand-coded feature
vector. Training minimizes binary cross entropy on the probability of the
user picking trajectory A, with NADAM on the network parameters and
periodic projected gradient descent on the linear weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import features

HIDDEN = 100
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class MlpParams:
    W1: np.ndarray  # (HIDDEN, n_in)
    b1: np.ndarray  # (HIDDEN,)
    W2: np.ndarray  # (1, HIDDEN)
    b2: float

    def __post_init__(self):
        object.__setattr__(self, "W1", np.asarray(self.W1, dtype=float))
        object.__setattr__(self, "b1", np.asarray(self.b1, dtype=float))
        object.__setattr__(self, "W2", np.asarray(self.W2, dtype=float).reshape(1, -1))
        if self.W1.shape[0] != self.W2.shape[1] or self.b1.shape[0] != self.W1.shape[0]:
            raise ValueError("inconsistent layer shapes")

    @property
    def n_in(self) -> int:
        return self.W1.shape[1]

    def as_dict(self) -> dict:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": np.array([self.b2])}

    @staticmethod
    def from_dict(d: dict) -> "MlpParams":
        return MlpParams(d["W1"], d["b1"], d["W2"], float(np.asarray(d["b2"]).ravel()[0]))

    @staticmethod
    def zeros(n_in: int) -> "MlpParams":
        return MlpParams(np.zeros((HIDDEN, n_in)), np.zeros(HIDDEN),
                         np.zeros((1, HIDDEN)), 0.0)

    @staticmethod
    def random_init(n_in: int, rng: np.random.Generator) -> "MlpParams":
        lim1 = np.sqrt(6.0 / (n_in + HIDDEN))
        lim2 = np.sqrt(6.0 / (HIDDEN + 1))
        return MlpParams(
            rng.uniform(-lim1, lim1, size=(HIDDEN, n_in)),
            np.zeros(HIDDEN),
            rng.uniform(-lim2, lim2, size=(1, HIDDEN)),
            0.0,
        )


def mlp_forward_batch(p: MlpParams, X: np.ndarray) -> np.ndarray:
    """Network outputs in (-1, 1) for an (N, n_in) input batch."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p.n_in:
        raise ValueError(f"input dim {X.shape[1]} != network n_in {p.n_in}")
    h = np.maximum(X @ p.W1.T + p.b1, 0.0)
    return np.tanh(h @ p.W2[0] + p.b2)


def mlp_forward(p: MlpParams, x) -> float:
    return float(mlp_forward_batch(p, np.asarray(x, dtype=float).reshape(1, -1))[0])


@dataclass(frozen=True)
class RewardModel:
    """Hand-coded features plus an optional learned network feature."""

    w_hc: np.ndarray
    w_nn: float = 0.0
    params: MlpParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "w_hc", np.asarray(self.w_hc, dtype=float))

    @property
    def n_features(self) -> int:
        return self.w_hc.size + (1 if self.params is not None else 0)

    @property
    def weights(self) -> np.ndarray:
        if self.params is None:
            return self.w_hc
        return np.append(self.w_hc, self.w_nn)

    def learned_feature_mean(self, inputs: np.ndarray) -> float:
        return float(mlp_forward_batch(self.params, inputs[:, : self.params.n_in]).mean())

    def trajectory_phi(self, traj) -> np.ndarray:
        phi = features.accumulate(traj)
        if self.params is None:
            return phi
        inputs = features.net_inputs(traj.states, self.params.n_in)
        return np.append(phi, self.learned_feature_mean(inputs))

    def reward(self, traj) -> float:
        return float(self.weights @ self.trajectory_phi(traj))

    def to_json_dict(self, train_meta: dict = None) -> dict:
        d = {
            "n_in": self.params.n_in if self.params is not None else None,
            "W1": self.params.W1.tolist() if self.params is not None else None,
            "b1": self.params.b1.tolist() if self.params is not None else None,
            "W2": self.params.W2.tolist() if self.params is not None else None,
            "b2": self.params.b2 if self.params is not None else None,
            "w_hc": self.w_hc.tolist(),
            "w_nn": self.w_nn,
        }
        if train_meta is not None:
            d["train_meta"] = train_meta
        return d

    @staticmethod
    def from_json_dict(d: dict) -> "RewardModel":
        params = None
        if d.get("W1") is not None:
            params = MlpParams(np.array(d["W1"]), np.array(d["b1"]),
                               np.array(d["W2"]), d["b2"])
        return RewardModel(np.array(d["w_hc"]), d.get("w_nn", 0.0), params)


def mixed_phi(traj, model: RewardModel) -> np.ndarray:
    """Hand-coded Phi with the learned feature's per-step mean appended."""
    if model.params is None:
        raise ValueError("model has no network")
    return model.trajectory_phi(traj)


@dataclass(frozen=True)
class ComparisonRecord:
    """One labeled comparison with everything training needs precomputed:
    hand-coded Phi of both trajectories and per-step network inputs
    (5 columns; 4-input models use the first four)."""

    query_id: str
    phi_hc_a: np.ndarray
    phi_hc_b: np.ndarray
    inputs_a: np.ndarray
    inputs_b: np.ndarray
    response: int

    @staticmethod
    def from_query(query, response: int) -> "ComparisonRecord":
        return ComparisonRecord(
            query_id=query.query_id,
            phi_hc_a=features.accumulate(query.traj_a),
            phi_hc_b=features.accumulate(query.traj_b),
            inputs_a=features.net_inputs(query.traj_a.states, 5),
            inputs_b=features.net_inputs(query.traj_b.states, 5),
            response=response,
        )


@dataclass(frozen=True)
class DatasetSplit:
    train: list
    val: list
    test: list

    @staticmethod
    def paper_split(session_records: list, test_records: list,
                    n_train: int = 70, n_val: int = 30) -> "DatasetSplit":
        if len(session_records) < n_train + n_val:
            raise ValueError(
                f"need {n_train}+{n_val} session records, got {len(session_records)}")
        return DatasetSplit(
            train=session_records[:n_train],
            val=session_records[n_train : n_train + n_val],
            test=test_records,
        )


class _Batch:
    """Stacked arrays for a record list, reused across epochs.

    With total_margin the likelihood margin is the per-trajectory total
    reward difference (the per-step mean times the step count), matching
    the margin scale used by the belief and the simulated users."""

    def __init__(self, records, n_in: int, total_margin: bool = False):
        self.n = len(records)
        self.n_in = n_in
        self.steps = records[0].inputs_a.shape[0]
        self.scale = float(self.steps) if total_margin else 1.0
        self.dphi_hc = np.stack([r.phi_hc_a - r.phi_hc_b for r in records])
        self.X_a = np.concatenate([r.inputs_a[:, :n_in] for r in records])
        self.X_b = np.concatenate([r.inputs_b[:, :n_in] for r in records])
        self.z = np.array([(r.response + 1) / 2 for r in records], dtype=float)


def _batch_learned_means(params: MlpParams, batch: _Batch):
    out_a = mlp_forward_batch(params, batch.X_a)
    out_b = mlp_forward_batch(params, batch.X_b)
    mean_a = out_a.reshape(batch.n, batch.steps).mean(axis=1)
    mean_b = out_b.reshape(batch.n, batch.steps).mean(axis=1)
    return out_a, out_b, mean_a, mean_b


def _batch_probs(model: RewardModel, batch: _Batch):
    delta = batch.dphi_hc @ model.w_hc
    cache = None
    if model.params is not None:
        cache = _batch_learned_means(model.params, batch)
        delta = delta + model.w_nn * (cache[2] - cache[3])
    return 1.0 / (1.0 + np.exp(-batch.scale * delta)), cache


def predict_prob_a(phi_a: np.ndarray, phi_b: np.ndarray, w: np.ndarray) -> float:
    """sigma(w . (phi_a - phi_b)): probability the user picks trajectory A."""
    z = float(np.asarray(w) @ (np.asarray(phi_a) - np.asarray(phi_b)))
    return float(1.0 / (1.0 + np.exp(-z)))


def record_prob_a(model: RewardModel, record: ComparisonRecord,
                  total_margin: bool = False) -> float:
    batch = _Batch([record], model.params.n_in if model.params else 4,
                   total_margin=total_margin)
    return float(_batch_probs(model, batch)[0][0])


def bce_loss(model: RewardModel, records: list,
             total_margin: bool = False) -> float:
    """Mean binary cross entropy of P(pick A) against z = (I+1)/2."""
    if not records:
        raise ValueError("no records")
    batch = _Batch(records, model.params.n_in if model.params else 4,
                   total_margin=total_margin)
    p, _ = _batch_probs(model, batch)
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-(batch.z * np.log(p) + (1 - batch.z) * np.log(1 - p)).mean())


def _loss_and_grads(model: RewardModel, batch: _Batch):
    """BCE loss plus exact gradients for the network and linear weights."""
    p, cache = _batch_probs(model, batch)
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = float(-(batch.z * np.log(pc) + (1 - batch.z) * np.log(1 - pc)).mean())

    c = (p - batch.z) * (batch.scale / batch.n)  # dL/d(R_A - R_B) per record
    g_whc = c @ batch.dphi_hc
    if model.params is None:
        return loss, {"w_hc": g_whc}

    out_a, out_b, mean_a, mean_b = cache
    g_wnn = float(c @ (mean_a - mean_b))

    # per-input-row upstream coefficients: +- c_n * w_nn / steps
    row_c = np.repeat(c, batch.steps) * (model.w_nn / batch.steps)
    p_ = model.params

    def dense_grads(X, out, coeff):
        d_out = coeff * (1.0 - out**2)  # tanh'
        h = np.maximum(X @ p_.W1.T + p_.b1, 0.0)
        g_w2 = d_out @ h
        g_b2 = d_out.sum()
        dh = np.outer(d_out, p_.W2[0])
        dh[h <= 0.0] = 0.0
        return g_w2, g_b2, dh.T @ X, dh.sum(axis=0)

    gw2_a, gb2_a, gW1_a, gb1_a = dense_grads(batch.X_a, out_a, row_c)
    gw2_b, gb2_b, gW1_b, gb1_b = dense_grads(batch.X_b, out_b, -row_c)

    grads = {
        "w_hc": g_whc,
        "w_nn": np.array([g_wnn]),
        "W1": gW1_a + gW1_b,
        "b1": gb1_a + gb1_b,
        "W2": (gw2_a + gw2_b).reshape(1, -1),
        "b2": np.array([gb2_a + gb2_b]),
    }
    return loss, grads


def grad_loss(model: RewardModel, records: list, total_margin: bool = False):
    """Gradients of bce_loss w.r.t. network params and (w_hc, w_nn)."""
    batch = _Batch(records, model.params.n_in if model.params else 4,
                   total_margin=total_margin)
    return _loss_and_grads(model, batch)[1]


@dataclass
class NadamState:
    m: dict
    v: dict

    @staticmethod
    def zeros_like(params: dict) -> "NadamState":
        return NadamState(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
        )


def nadam_step(state: NadamState, params: dict, grads: dict, lr: float = 0.001,
               betas=(0.9, 0.999), eps: float = 1e-8, t: int = 1) -> dict:
    """One Nesterov-Adam update (Dozat 2016, constant momentum schedule).

    Mutates state in place and returns the updated parameter dict.
    m_hat uses the t+1 bias correction for the lookahead term.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    b1, b2 = betas
    out = {}
    for k, g in grads.items():
        state.m[k] = b1 * state.m[k] + (1 - b1) * g
        state.v[k] = b2 * state.v[k] + (1 - b2) * g**2
        m_hat = state.m[k] / (1 - b1 ** (t + 1))
        g_hat = g / (1 - b1**t)
        v_hat = state.v[k] / (1 - b2**t)
        out[k] = params[k] - lr * (b1 * m_hat + (1 - b1) * g_hat) / (np.sqrt(v_hat) + eps)
    return out


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    lr: float = 0.001
    betas: tuple = (0.9, 0.999)
    linear_update_period: int = 20
    linear_lr: float = 0.001
    trials: int = 40
    top_k: int = 5
    n_in: int = 4
    seed: int = 0
    total_margin: bool = True

    def __post_init__(self):
        if not self.trials >= self.top_k >= 1:
            raise ValueError("need trials >= top_k >= 1")


@dataclass
class TrialResult:
    trial: int
    model: RewardModel
    val_accuracy: float
    test_accuracy: float
    loss_curve: list
    val_curve: list


@dataclass
class TrainReport:
    trials: list
    top_k_indices: list
    test_mean: float
    test_std: float
    config: TrainConfig

    @property
    def best_model(self) -> RewardModel:
        return self.trials[self.top_k_indices[0]].model

    def to_json_dict(self) -> dict:
        return {
            "top_k_indices": self.top_k_indices,
            "test_mean": self.test_mean,
            "test_std": self.test_std,
            "trials": [
                {
                    "trial": t.trial,
                    "val_accuracy": t.val_accuracy,
                    "test_accuracy": t.test_accuracy,
                    "loss_curve": t.loss_curve,
                    "val_curve": t.val_curve,
                }
                for t in self.trials
            ],
        }


def evaluate_accuracy(model: RewardModel, records: list) -> float:
    """Fraction of comparisons whose preferred side has the higher model
    reward; exact reward ties count 0.5."""
    batch = _Batch(records, model.params.n_in if model.params else 4)
    delta = batch.dphi_hc @ model.w_hc
    if model.params is not None:
        _, _, mean_a, mean_b = _batch_learned_means(model.params, batch)
        delta = delta + model.w_nn * (mean_a - mean_b)
    # delta > 0 predicts A; response +1 means A was preferred
    resp = 2 * batch.z - 1
    correct = np.where(delta == 0.0, 0.5, (np.sign(delta) == resp).astype(float))
    return float(correct.mean())


def _train_one_trial(trial: int, train_b: _Batch, val_records, test_records,
                     w_hc_init: np.ndarray, cfg: TrainConfig,
                     rng: np.random.Generator) -> TrialResult:
    params = MlpParams.random_init(cfg.n_in, rng)
    w_hc = np.array(w_hc_init, dtype=float)
    w_nn = float(rng.uniform(0.0, 0.5))

    net = params.as_dict()
    opt = NadamState.zeros_like(net)
    loss_curve, val_curve = [], []

    for epoch in range(cfg.epochs):
        model = RewardModel(w_hc, w_nn, MlpParams.from_dict(net))
        loss, grads = _loss_and_grads(model, train_b)
        loss_curve.append(loss)

        net = nadam_step(opt, net, {k: grads[k] for k in net}, lr=cfg.lr,
                         betas=cfg.betas, t=epoch + 1)
        if (epoch + 1) % cfg.linear_update_period == 0:
            w_hc = np.maximum(w_hc - cfg.linear_lr * grads["w_hc"], 0.0)
            w_nn = max(w_nn - cfg.linear_lr * float(grads["w_nn"][0]), 0.0)
            model = RewardModel(w_hc, w_nn, MlpParams.from_dict(net))
            val_curve.append(evaluate_accuracy(model, val_records))

    model = RewardModel(w_hc, w_nn, MlpParams.from_dict(net))
    val_acc = evaluate_accuracy(model, val_records)
    test_acc = evaluate_accuracy(model, test_records)
    return TrialResult(trial, model, val_acc, test_acc, loss_curve, val_curve)


def train(split: DatasetSplit, w_hc_init: np.ndarray, cfg: TrainConfig,
          rng: np.random.Generator = None) -> TrainReport:
    """Multi-trial training; ranks trials by validation accuracy and reports
    the top-k test accuracies."""
    root = rng if rng is not None else np.random.default_rng(cfg.seed)
    trial_rngs = root.spawn(cfg.trials)
    train_b = _Batch(split.train, cfg.n_in, total_margin=cfg.total_margin)

    results = [
        _train_one_trial(i, train_b, split.val, split.test, w_hc_init, cfg, trial_rngs[i])
        for i in range(cfg.trials)
    ]
    order = sorted(range(cfg.trials),
                   key=lambda i: (-results[i].val_accuracy, i))
    top = order[: cfg.top_k]
    accs = np.array([results[i].test_accuracy for i in top])
    return TrainReport(results, top, float(accs.mean()), float(accs.std()), cfg)
