"""Command-line entry points: simulate, serve, train, export, testset."""

from __future__ import annotations

import json
from pathlib import Path

import click
import numpy as np

from . import session as session_mod
from .belief import McmcConfig
from .dynamics import ScenarioConfig
from .featlearn import RewardModel, TrainConfig
from .oracle import GroundTruth
from .querygen import QueryGenConfig
from .session import OracleUser, SessionConfig, SessionStore


def _load_scenario(path) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    return ScenarioConfig.from_json_dict(json.loads(Path(path).read_text()))


def _load_ground_truth(path) -> GroundTruth:
    if path is None:
        w = np.array([0.3, 0.2, 0.2, 0.9])
        return GroundTruth("linear_hc", w / np.linalg.norm(w))
    return GroundTruth.from_json_dict(json.loads(Path(path).read_text()))


@click.group()
def main():
    """Preference-based reward learning with learned driving features."""


@main.command()
@click.option("--seed", default=0, show_default=True)
@click.option("--n-queries", default=100, show_default=True)
@click.option("--scenario-file", type=click.Path(exists=True), default=None)
@click.option("--ground-truth-file", type=click.Path(exists=True), default=None,
              help="JSON GroundTruth spec; defaults to a linear oracle.")
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--session-id", default=None)
def simulate(seed, n_queries, scenario_file, ground_truth_file, output_dir, session_id):
    """Run an end-to-end active session answered by a simulated user."""
    scenario = _load_scenario(scenario_file)
    user = OracleUser(_load_ground_truth(ground_truth_file))
    cfg = SessionConfig(n_queries=n_queries, seed=seed)
    root = Path(output_dir) if output_dir else session_mod.data_dir()
    sid = session_id or f"sim-{seed}"
    store = SessionStore(root, sid)
    log = session_mod.run_active_session(user, scenario, cfg, store)
    est = session_mod.point_estimate_from_log(log)
    click.echo(f"session {sid}: {log.n_answered} queries answered")
    click.echo(f"belief point estimate: {np.round(est, 4).tolist()}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--scenario-file", type=click.Path(exists=True), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--fast", is_flag=True,
              help="Lighter MCMC/optimizer settings for interactive latency.")
def serve(host, port, scenario_file, output_dir, fast):
    """Serve the HTTP API (and the UI bundle, if built) for human sessions."""
    import uvicorn

    from .server import create_app

    scenario = _load_scenario(scenario_file)
    root = Path(output_dir) if output_dir else session_mod.data_dir()
    qcfg = None
    if fast:
        qcfg = QueryGenConfig(restarts=5, max_iter=50,
                              mcmc=McmcConfig(chain_length=8000, burn_in=2000))
    uvicorn.run(create_app(root, scenario, qcfg), host=host, port=port)


@main.command()
@click.option("--session-dir", type=click.Path(exists=True), required=True)
@click.option("--test-set-file", type=click.Path(exists=True), required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--epochs", default=500, show_default=True)
@click.option("--trials", default=40, show_default=True)
@click.option("--n-in", default=4, show_default=True, type=click.Choice(["4", "5"]))
@click.option("--output-dir", type=click.Path(), default=None)
def train(session_dir, test_set_file, seed, epochs, trials, n_in, output_dir):
    """Offline feature learning from a recorded session log."""
    session_dir = Path(session_dir)
    store = SessionStore(session_dir.parent, session_dir.name)
    log = store.load()
    test_set = session_mod.test_set_from_json(Path(test_set_file).read_text())
    cfg = TrainConfig(epochs=epochs, trials=trials, top_k=min(5, trials),
                      n_in=int(n_in), seed=seed)
    report = session_mod.run_offline_training(log, test_set, cfg)
    out = Path(output_dir) if output_dir else session_dir
    (out / "experiment_report.json").write_text(json.dumps(report.to_json_dict()))
    best = report.train_report.best_model
    best_meta = {
        "seed": seed,
        "val_acc": report.train_report.trials[report.train_report.top_k_indices[0]].val_accuracy,
        "test_acc": report.train_report.trials[report.train_report.top_k_indices[0]].test_accuracy,
    }
    (out / "best_model.json").write_text(json.dumps(best.to_json_dict(best_meta)))
    click.echo(f"hand-coded accuracy: {report.hand_coded_accuracy:.4f}")
    click.echo(f"mixed accuracy: {report.mixed_mean:.4f} +/- {report.mixed_std:.4f}")


@main.command()
@click.option("--model-file", type=click.Path(exists=True), required=True)
@click.option("--scenario-file", type=click.Path(exists=True), default=None)
@click.option("--hand-coded-weights", default=None,
              help="Comma-separated w_hc for the baseline optimal trajectory.")
@click.option("--output-dir", type=click.Path(), required=True)
@click.option("--seed", default=0, show_default=True)
def export(model_file, scenario_file, hand_coded_weights, output_dir, seed):
    """Write feature-slice CSVs, the heat map, and optimal trajectories."""
    model = RewardModel.from_json_dict(json.loads(Path(model_file).read_text()))
    scenario = _load_scenario(scenario_file)
    w_hc = None
    if hand_coded_weights:
        w_hc = np.array([float(v) for v in hand_coded_weights.split(",")])
    session_mod.export_analysis(model, output_dir, scenario, hc_weights=w_hc, seed=seed)
    click.echo(f"analysis written to {output_dir}")


@main.command()
@click.option("--count", default=75, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--scenario-file", type=click.Path(exists=True), default=None)
@click.option("--ground-truth-file", type=click.Path(exists=True), default=None,
              help="Freeze oracle responses into the file.")
@click.option("--output-file", type=click.Path(), required=True)
def testset(count, seed, scenario_file, ground_truth_file, output_file):
    """Build the standardized test-set file of locally optimal query pairs."""
    scenario = _load_scenario(scenario_file)
    user = None
    if ground_truth_file is not None:
        user = OracleUser(_load_ground_truth(ground_truth_file))
    ts = session_mod.build_test_set(count, scenario, np.random.default_rng(seed), user)
    Path(output_file).write_text(session_mod.test_set_to_json(ts))
    click.echo(f"wrote {count} standardized queries to {output_file}")


if __name__ == "__main__":
    main()
