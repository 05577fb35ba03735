"""Two-car kinematic simulator.

Both cars follow a discrete-time point-car model: heading-rate and
acceleration controls, heading in degrees (90 = straight down the road),
speed clamped to [0, 1]. The human car follows a fixed per-scenario
script; the robot car is driven by the control sequence being optimized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

STATE_DIM = 8  # [x_r, y_r, theta_r, v_r, x_h, y_h, theta_h, v_h]

LANE_CENTERS = (-0.17, 0.0, 0.17)


@dataclass(frozen=True)
class CarState:
    """Pose and speed of one car. theta in degrees, wrapped to [0, 360)."""

    x: float
    y: float
    theta: float
    v: float

    def as_tuple(self):
        return (self.x, self.y, self.theta, self.v)


@dataclass(frozen=True)
class JointState:
    robot: CarState
    human: CarState

    def as_array(self) -> np.ndarray:
        return np.array(self.robot.as_tuple() + self.human.as_tuple())

    @staticmethod
    def from_array(a) -> "JointState":
        a = [float(v) for v in a]
        return JointState(CarState(*a[:4]), CarState(*a[4:8]))


def _advance_car(x, y, theta, v, steer, accel, dt):
    """One kinematic step for a single car.

    New speed applies immediately to the displacement; the old heading is
    used for the direction (heading update takes effect next step).
    """
    theta_new = (theta + steer) % 360.0
    v_new = min(1.0, max(0.0, v + accel))
    rad = math.radians(theta)
    x_new = x + v_new * math.cos(rad) * dt
    y_new = y + v_new * math.sin(rad) * dt
    return x_new, y_new, theta_new, v_new


@dataclass(frozen=True)
class ControlSequence:
    """Piecewise-constant controls: each (steer_rate, accel) block is held
    for block_len steps; blocks.shape == (n_blocks, 2)."""

    blocks: np.ndarray
    block_len: int

    def __post_init__(self):
        object.__setattr__(self, "blocks", np.asarray(self.blocks, dtype=float))
        if self.blocks.ndim != 2 or self.blocks.shape[1] != 2:
            raise ValueError("blocks must have shape (n_blocks, 2)")

    @property
    def n_steps(self) -> int:
        return self.blocks.shape[0] * self.block_len

    def per_step(self) -> np.ndarray:
        """Expand blocks to one (steer, accel) row per step."""
        return np.repeat(self.blocks, self.block_len, axis=0)

    def __eq__(self, other):
        return (
            isinstance(other, ControlSequence)
            and self.block_len == other.block_len
            and np.array_equal(self.blocks, other.blocks)
        )


@dataclass(frozen=True)
class Trajectory:
    """k+1 joint states (rows of an (k+1, 8) array) plus the robot controls
    that produced them. Row layout: [x_r, y_r, th_r, v_r, x_h, y_h, th_h, v_h]."""

    states: np.ndarray
    controls: ControlSequence
    scenario_id: str = "default"

    def __post_init__(self):
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))

    @property
    def k(self) -> int:
        return self.states.shape[0] - 1

    def joint_state(self, t: int) -> JointState:
        return JointState.from_array(self.states[t])

    def to_json_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "controls": self.controls.blocks.tolist(),
            "block_len": self.controls.block_len,
            "states": self.states.tolist(),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "Trajectory":
        return Trajectory(
            states=np.array(d["states"], dtype=float),
            controls=ControlSequence(np.array(d["controls"], dtype=float), d["block_len"]),
            scenario_id=d.get("scenario_id", "default"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def _default_initial_state() -> JointState:
    return JointState(
        robot=CarState(x=0.0, y=0.0, theta=90.0, v=0.8),
        human=CarState(x=0.17, y=0.3, theta=90.0, v=0.8),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, horizon, control bounds and the fixed human script."""

    k: int = 50
    block_len: int = 10
    dt: float = 0.1
    lane_centers: tuple = LANE_CENTERS
    road_half_width: float = 0.255
    steer_max: float = 15.0  # deg per step
    accel_max: float = 0.05  # speed units per step
    initial_state: JointState = field(default_factory=_default_initial_state)
    scenario_id: str = "default"

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("horizon k must be positive")
        if self.k % self.block_len != 0:
            raise ValueError("block_len must divide k")

    @property
    def n_blocks(self) -> int:
        return self.k // self.block_len

    def control_bounds(self):
        """Per-parameter (low, high) bounds for a flat control vector."""
        return [(-self.steer_max, self.steer_max), (-self.accel_max, self.accel_max)] * self.n_blocks

    def to_json_dict(self) -> dict:
        s0 = self.initial_state
        return {
            "k": self.k,
            "block_len": self.block_len,
            "dt": self.dt,
            "lane_centers": list(self.lane_centers),
            "road_half_width": self.road_half_width,
            "steer_max": self.steer_max,
            "accel_max": self.accel_max,
            "initial_state": s0.as_array().tolist(),
            "scenario_id": self.scenario_id,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "ScenarioConfig":
        d = dict(d)
        if "initial_state" in d:
            d["initial_state"] = JointState.from_array(d["initial_state"])
        if "lane_centers" in d:
            d["lane_centers"] = tuple(d["lane_centers"])
        return ScenarioConfig(**d)


def step(s: JointState, u_robot, u_human, dt: float) -> JointState:
    """Advance both cars one timestep. u_* are (steer_rate, accel) pairs."""
    r = _advance_car(s.robot.x, s.robot.y, s.robot.theta, s.robot.v, u_robot[0], u_robot[1], dt)
    h = _advance_car(s.human.x, s.human.y, s.human.theta, s.human.v, u_human[0], u_human[1], dt)
    return JointState(CarState(*r), CarState(*h))


def human_reference(scenario: ScenarioConfig) -> np.ndarray:
    """Per-step (steer, accel) controls for the human car's scripted lane
    change from the right lane (x=0.17) into the middle lane.

    The heading deviation follows a sin^2 bump over the middle fifth of the
    horizon; the bump amplitude is solved so the lateral displacement is
    exactly one lane width.
    """
    k = scenario.k
    dt = scenario.dt
    v = scenario.initial_state.human.v
    t0 = (2 * k) // 5
    span = max(k // 5, 2)

    window = np.zeros(k + 1)
    tt = np.arange(span + 1)
    window[t0 : t0 + span + 1] = np.sin(np.pi * tt / span) ** 2

    # x displacement uses the heading of states 0..k-1 (pre-step heading)
    def lateral_shift(amp):
        dev = amp * window[:k]
        return -np.sum(v * np.sin(np.radians(dev)) * dt)

    target = scenario.lane_centers[1] - scenario.initial_state.human.x
    amp = brentq(lambda a: lateral_shift(a) - target, 0.0, 89.0, xtol=1e-12)

    dev = amp * window
    steer = np.diff(dev)
    controls = np.zeros((k, 2))
    controls[:, 0] = steer
    return controls


_human_cache: dict = {}


def _human_states(scenario: ScenarioConfig) -> np.ndarray:
    """Human car states for the scenario script, cached per scenario config."""
    key = (scenario.scenario_id, scenario.k, scenario.dt,
           scenario.initial_state.human.as_tuple())
    if key not in _human_cache:
        script = human_reference(scenario)
        h = scenario.initial_state.human
        x, y, th, v = h.x, h.y, h.theta, h.v
        out = np.empty((scenario.k + 1, 4))
        out[0] = (x, y, th, v)
        for t in range(scenario.k):
            x, y, th, v = _advance_car(x, y, th, v, script[t, 0], script[t, 1], scenario.dt)
            out[t + 1] = (x, y, th, v)
        _human_cache[key] = out
    return _human_cache[key]


def rollout(s0: JointState, u: ControlSequence, scenario: ScenarioConfig) -> Trajectory:
    """Simulate the robot under u while the human follows the scenario script."""
    if u.n_steps != scenario.k:
        raise ValueError(
            f"control sequence covers {u.n_steps} steps, scenario horizon is {scenario.k}"
        )
    k = scenario.k
    dt = scenario.dt
    states = np.empty((k + 1, STATE_DIM))

    if s0.human == scenario.initial_state.human:
        states[:, 4:] = _human_states(scenario)
    else:
        script = human_reference(scenario)
        h = s0.human
        x, y, th, v = h.x, h.y, h.theta, h.v
        states[0, 4:] = (x, y, th, v)
        for t in range(k):
            x, y, th, v = _advance_car(x, y, th, v, script[t, 0], script[t, 1], dt)
            states[t + 1, 4:] = (x, y, th, v)

    per_step = u.per_step()
    x, y, th, v = s0.robot.x, s0.robot.y, s0.robot.theta, s0.robot.v
    states[0, :4] = (x, y, th, v)
    for t in range(k):
        x, y, th, v = _advance_car(x, y, th, v, per_step[t, 0], per_step[t, 1], dt)
        states[t + 1, :4] = (x, y, th, v)

    return Trajectory(states=states, controls=u, scenario_id=scenario.scenario_id)


def sample_random_controls(rng: np.random.Generator, scenario: ScenarioConfig) -> ControlSequence:
    """Uniform controls within the scenario bounds, one draw per block."""
    n = scenario.n_blocks
    steer = rng.uniform(-scenario.steer_max, scenario.steer_max, size=n)
    accel = rng.uniform(-scenario.accel_max, scenario.accel_max, size=n)
    return ControlSequence(np.column_stack([steer, accel]), scenario.block_len)


def rollout_batch(flats: np.ndarray, scenario: ScenarioConfig) -> np.ndarray:
    """Vectorized robot rollouts for a (B, 2*n_blocks) batch of flat control
    vectors -> (B, k+1, 8) state arrays.

    Matches rollout() up to floating-point association (heading accumulated
    by cumsum, no intermediate 360-degree wrap); used inside optimizers
    where ulp-level differences are irrelevant. Stored trajectories must
    come from rollout().
    """
    flats = np.atleast_2d(np.asarray(flats, dtype=float))
    B = flats.shape[0]
    k, dt = scenario.k, scenario.dt
    blocks = flats.reshape(B, scenario.n_blocks, 2)
    steer = np.repeat(blocks[:, :, 0], scenario.block_len, axis=1)  # (B, k)
    accel = np.repeat(blocks[:, :, 1], scenario.block_len, axis=1)

    r0 = scenario.initial_state.robot
    theta = np.empty((B, k + 1))
    theta[:, 0] = r0.theta
    theta[:, 1:] = r0.theta + np.cumsum(steer, axis=1)

    v = np.empty((B, k + 1))
    v[:, 0] = r0.v
    cur = np.full(B, r0.v)
    for t in range(k):
        cur = np.clip(cur + accel[:, t], 0.0, 1.0)
        v[:, t + 1] = cur

    rad = np.radians(theta[:, :k])  # heading before each step
    x = np.empty((B, k + 1))
    y = np.empty((B, k + 1))
    x[:, 0] = r0.x
    y[:, 0] = r0.y
    x[:, 1:] = r0.x + np.cumsum(v[:, 1:] * np.cos(rad) * dt, axis=1)
    y[:, 1:] = r0.y + np.cumsum(v[:, 1:] * np.sin(rad) * dt, axis=1)

    states = np.empty((B, k + 1, STATE_DIM))
    states[:, :, 0] = x
    states[:, :, 1] = y
    states[:, :, 2] = theta % 360.0
    states[:, :, 3] = v
    states[:, :, 4:] = _human_states(scenario)
    return states


def controls_from_flat(flat: np.ndarray, scenario: ScenarioConfig) -> ControlSequence:
    """Rebuild a ControlSequence from a flat [s1,a1,s2,a2,...] vector."""
    blocks = np.asarray(flat, dtype=float).reshape(scenario.n_blocks, 2)
    return ControlSequence(blocks, scenario.block_len)
