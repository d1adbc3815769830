"""Mean-field SIS dynamics under a piecewise-constant weight schedule.

State is one infection probability per node, advanced with classical
fixed-step RK4. A candidate solution is a flat vector in [0,1]^D holding the
off-diagonal weight-matrix entries for each unit time interval from t=1 on;
the interval [0,1) always runs on the network's initial weights. The
objective integrates sum_i sqrt(p_i) over the horizon; the constraint caps
the total squared deviation of the schedule from the initial weights.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .graph import Network

BatchEvaluator = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


class IntegrationError(RuntimeError):
    """The ODE state became non-finite during integration."""


@dataclass(frozen=True)
class EpidemicParams:
    """Epidemic rates, initial condition, horizon, and integration resolution.

    ``beta``, ``gamma`` and ``p0`` may be scalars (shared by all nodes) or
    per-node arrays; ``substeps`` is the number of RK4 steps per unit time.
    """

    beta: float | np.ndarray
    gamma: float | np.ndarray
    p0: float | np.ndarray
    horizon: int
    substeps: int = 20

    def __post_init__(self) -> None:
        for name in ("beta", "gamma", "p0"):
            value = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} must be finite")
            if np.any(value < 0.0):
                raise ValueError(f"{name} must be nonnegative")
        if np.any(np.asarray(self.p0, dtype=float) > 1.0):
            raise ValueError("p0 must lie in [0, 1]")
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")

    def node_vectors(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcast the rate/initial-condition fields to length-n vectors."""
        out = []
        for name in ("beta", "gamma", "p0"):
            value = np.asarray(getattr(self, name), dtype=float)
            if value.ndim == 0:
                value = np.full(n, float(value))
            elif value.shape != (n,):
                raise ValueError(f"{name} must be scalar or length {n}")
            out.append(value)
        return out[0], out[1], out[2]


@dataclass(frozen=True)
class WeightSchedule:
    """(T-1) weight matrices; block t-1 is active on the interval [t, t+1)."""

    blocks: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        blocks = np.asarray(self.blocks, dtype=float)
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise ValueError(f"blocks must be (T-1, N, N), got {blocks.shape}")
        if np.any(blocks < 0.0) or np.any(blocks > 1.0):
            raise ValueError("schedule weights must lie in [0, 1]")
        if np.any(blocks[:, range(blocks.shape[1]), range(blocks.shape[1])] != 0.0):
            raise ValueError("schedule diagonals must be zero")
        blocks.setflags(write=False)
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return self.blocks.shape[1]

    @property
    def horizon(self) -> int:
        return self.blocks.shape[0] + 1

    def matrix_at(self, t: float, w0: np.ndarray) -> np.ndarray:
        """Weight matrix active at time t; w0 on [0, 1), blocks afterwards."""
        if not 0.0 <= t < self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon})")
        if t < 1.0:
            return w0
        return self.blocks[int(t) - 1]


@dataclass(frozen=True)
class Trajectory:
    """Infection probabilities sampled on the substep grid 0 = t_0 < ... < t_M."""

    times: np.ndarray
    p: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != times.shape[0]:
            raise ValueError("p must have one row per sample instant")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        times.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class Evaluation:
    """Objective f, signed constraint g, and violation max(0, g)."""

    f: float
    g: float
    violation: float


@lru_cache(maxsize=None)
def _offdiag_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = np.nonzero(~np.eye(n, dtype=bool))
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def decision_dimension(n: int, horizon: int) -> int:
    """Number of decision variables N*(N-1)*(T-1)."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    return n * (n - 1) * (horizon - 1)


def decode_candidate(x: np.ndarray, n: int, horizon: int) -> WeightSchedule:
    """Unpack a flat decision vector into per-interval weight matrices.

    The vector is consumed time-major, each block filling its off-diagonal
    entries in row-major order; diagonals stay zero.
    """
    x = np.asarray(x, dtype=float)
    dim = decision_dimension(n, horizon)
    if x.shape != (dim,):
        raise ValueError(f"expected vector of length {dim}, got shape {x.shape}")
    rows, cols = _offdiag_indices(n)
    blocks = np.zeros((horizon - 1, n, n))
    blocks[:, rows, cols] = x.reshape(horizon - 1, n * (n - 1))
    return WeightSchedule(blocks=blocks)


def encode_schedule(sched: WeightSchedule) -> np.ndarray:
    """Flatten a schedule back into a decision vector (decode's inverse)."""
    rows, cols = _offdiag_indices(sched.n)
    return sched.blocks[:, rows, cols].reshape(-1).copy()


def _rhs(p: np.ndarray, wb: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    inflow = (wb @ p[..., None])[..., 0]
    return (1.0 - p) * inflow - gamma * p


def _advance_unit(
    p: np.ndarray,
    wb: np.ndarray,
    gamma: np.ndarray,
    substeps: int,
    record: list[np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """RK4 over one unit interval with a fixed weight matrix.

    Returns the advanced state and this interval's trapezoid contribution to
    the integral of sum_i sqrt(p_i). States are clamped to [0, 1] after every
    substep to keep discretization error out of the sqrt.
    """
    h = 1.0 / substeps
    s = np.sqrt(p).sum(axis=-1)
    acc = 0.5 * s
    for _ in range(substeps):
        k1 = _rhs(p, wb, gamma)
        k2 = _rhs(p + (0.5 * h) * k1, wb, gamma)
        k3 = _rhs(p + (0.5 * h) * k2, wb, gamma)
        k4 = _rhs(p + h * k3, wb, gamma)
        p = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        np.clip(p, 0.0, 1.0, out=p)
        if record is not None:
            record.append(p.copy())
        s = np.sqrt(p).sum(axis=-1)
        acc += s
    acc -= 0.5 * s
    if not np.all(np.isfinite(p)):
        raise IntegrationError("state became non-finite during integration")
    return p, h * acc


def integrate(net: Network, params: EpidemicParams, sched: WeightSchedule) -> Trajectory:
    """Integrate the mean-field SIS equations over [0, horizon].

    The interval [0, 1) runs on the network's initial weights; block t-1 of
    the schedule governs [t, t+1).
    """
    if sched.n != net.n:
        raise ValueError(f"schedule is for {sched.n} nodes, network has {net.n}")
    if sched.horizon != params.horizon:
        raise ValueError(
            f"schedule horizon {sched.horizon} != params horizon {params.horizon}"
        )
    beta, gamma, p0 = params.node_vectors(net.n)
    k = params.substeps
    p = p0[None, :].copy()
    states: list[np.ndarray] = []
    for t in range(params.horizon):
        w = net.w0 if t == 0 else sched.blocks[t - 1]
        p, _ = _advance_unit(p, (w * beta)[None, :, :], gamma, k, record=states)
    times = np.arange(params.horizon * k + 1) / k
    traj = np.vstack([p0[None, :]] + [s[0][None, :] for s in states])
    return Trajectory(times=times, p=traj)


def objective_value(traj: Trajectory) -> float:
    """Integral of sum_i sqrt(p_i(t)) over the sampled grid (trapezoid rule)."""
    integrand = np.sqrt(traj.p).sum(axis=1)
    return float(np.trapezoid(integrand, traj.times))


def constraint_value(sched: WeightSchedule, net: Network, budget: float) -> float:
    """Signed constraint: total squared deviation from w0 minus the budget.

    Blocks are piecewise constant on unit intervals, so the time integral is
    the plain sum over blocks; [0, 1) contributes nothing because the weights
    there equal w0.
    """
    if sched.n != net.n:
        raise ValueError(f"schedule is for {sched.n} nodes, network has {net.n}")
    dev = sched.blocks - net.w0[None, :, :]
    return float(np.sum(dev * dev) - budget)


def evaluate_candidate(
    x: np.ndarray, net: Network, params: EpidemicParams, budget: float
) -> Evaluation:
    """Decode, integrate, and score one decision vector."""
    sched = decode_candidate(x, net.n, params.horizon)
    f = objective_value(integrate(net, params, sched))
    g = constraint_value(sched, net, budget)
    return Evaluation(f=f, g=g, violation=max(0.0, g))


def make_batch_evaluator(
    net: Network, params: EpidemicParams, budget: float
) -> BatchEvaluator:
    """Vectorized evaluator mapping (B, D) candidates to (f, violation) arrays.

    The shared [0, 1) interval (identical for every candidate) is integrated
    once up front. This is the hot path for population-based optimizers;
    :func:`evaluate_candidate` is the single-vector reference.
    """
    n, horizon, k = net.n, params.horizon, params.substeps
    beta, gamma, p0 = params.node_vectors(n)
    rows, cols = _offdiag_indices(n)
    dim = decision_dimension(n, horizon)
    x0 = np.tile(net.w0[rows, cols], horizon - 1)
    p_unit, obj_unit = _advance_unit(p0[None, :].copy(), (net.w0 * beta)[None], gamma, k)

    def evaluate(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != dim:
            raise ValueError(f"expected {dim} genes per candidate, got {x.shape[1]}")
        b = x.shape[0]
        diff = x - x0
        g = np.einsum("ij,ij->i", diff, diff) - budget
        blocks = np.zeros((b, horizon - 1, n, n))
        blocks[:, :, rows, cols] = x.reshape(b, horizon - 1, n * (n - 1))
        p = np.repeat(p_unit, b, axis=0)
        obj = np.full(b, obj_unit[0])
        for t in range(1, horizon):
            p, contrib = _advance_unit(p, blocks[:, t - 1] * beta, gamma, k)
            obj += contrib
        return obj, np.maximum(0.0, g)

    return evaluate


def infected_level(traj: Trajectory, t: float) -> float:
    """Mean infection probability at a sampled instant."""
    idx = np.nonzero(np.isclose(traj.times, t, rtol=0.0, atol=1e-9))[0]
    if idx.size == 0:
        raise ValueError(f"t={t} is not on the sample grid")
    return float(traj.p[idx[0]].mean())


def total_weights(sched: WeightSchedule, net: Network, t: float) -> float:
    """Sum of all off-diagonal weights in force at time t in [0, horizon)."""
    return float(sched.matrix_at(t, net.w0).sum())


def trace_series(
    traj: Trajectory, sched: WeightSchedule, net: Network
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Infected level I(t) and total weights W(t) on the trajectory grid.

    W at the final instant carries the last block's value (left limit), so
    both series share the grid.
    """
    i_level = traj.p.mean(axis=1)
    w_level = np.array(
        [total_weights(sched, net, min(t, sched.horizon - 1e-9)) for t in traj.times]
    )
    return traj.times, i_level, w_level


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> None:
    """Export a trajectory as CSV rows ``t, p_0, ..., p_{N-1}``."""
    n = traj.p.shape[1]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"p_{i}" for i in range(n)])
        for t, row in zip(traj.times, traj.p):
            writer.writerow([f"{t:.12g}"] + [f"{v:.12g}" for v in row])


def write_trace_csv(
    traj: Trajectory, sched: WeightSchedule, net: Network, path: str | Path
) -> None:
    """Export the I(t)/W(t) trace as CSV rows ``t, I, W``."""
    times, i_level, w_level = trace_series(traj, sched, net)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "I", "W"])
        for t, i_val, w_val in zip(times, i_level, w_level):
            writer.writerow([f"{t:.12g}", f"{i_val:.12g}", f"{w_val:.12g}"])
