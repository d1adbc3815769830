"""Experiment orchestration: seeded campaigns, run records, CSV artifacts.

A campaign builds one network, executes the configured number of
independent optimization runs (or a single deterministic baseline run),
and emits CSV artifacts. Per-run seeds are split from the master seed with
a fixed derivation, so a campaign is reproducible byte for byte no matter
how many worker processes execute it; wall times go to a separate
timing.txt precisely to keep the CSVs deterministic.
"""
from __future__ import annotations

import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import (
    constant_adaptation_schedule,
    no_adaptation_schedule,
)
from .coevolve import C3Config, GenerationRecord, run_c3, run_nsde
from .de_core import DEConfig
from .dynamics import (
    EpidemicParams,
    IntegrationError,
    Trajectory,
    WeightSchedule,
    constraint_value,
    decision_dimension,
    decode_candidate,
    integrate,
    make_batch_evaluator,
    objective_value,
    trace_series,
    _offdiag_indices,
)
from .graph import Network, generate_ba
from .stats import AlgorithmSummary, summarize

ALGORITHMS = ("nsde", "nsde_c3", "none", "constant")

# Budget identity of the constant baseline holds only to round-off; deviations
# below this are reported as exactly feasible.
BASELINE_FEAS_ATOL = 1e-9


class ConfigError(ValueError):
    """Invalid experiment configuration or config file."""


def normalize_algorithm(name: str) -> str:
    """Map CLI spellings (nsde-c3) onto config tokens (nsde_c3)."""
    token = name.strip().lower().replace("-", "_")
    if token not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")
    return token


@dataclass(frozen=True)
class ExperimentConfig:
    """Campaign parameters: network, epidemic, budget, optimizer, and runs.

    Optimizer sizes default to the full-scale campaign reported in the
    source experiments; desk-scale studies override ``np_size``/``total_fes``.
    ``ds`` of None decomposes by one weight matrix per subcomponent and
    ``sub_fes`` of None spends ten populations per subcomponent visit.
    """

    n: int = 20
    m0: int = 5
    m: int = 5
    net_seed: int = 1
    beta: float = 0.4
    gamma: float = 0.3
    p0: float = 0.153
    horizon: int = 10
    substeps: int = 20
    budget: float = 700.0
    algorithm: str = "nsde_c3"
    np_size: int = 350
    cr: float = 0.9
    fp: float = 0.5
    ds: int | None = None
    sub_fes: int | None = None
    total_fes: int = 6_300_000
    gc_fraction: float = 0.2
    lam: float = 10.0
    count_reevals: bool = True
    runs: int = 25
    master_seed: int = 0

    _JSON_KEYS = {"np": "np_size"}

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", normalize_algorithm(self.algorithm))
        checks = [
            (self.n >= 2, "n must be at least 2"),
            (1 <= self.m <= self.m0 <= self.n, "need 1 <= m <= m0 <= n"),
            (self.net_seed >= 0, "net_seed must be nonnegative"),
            (self.beta >= 0.0, "beta must be nonnegative"),
            (self.gamma >= 0.0, "gamma must be nonnegative"),
            (0.0 <= self.p0 <= 1.0, "p0 must lie in [0, 1]"),
            (self.horizon >= 2, "horizon must be at least 2"),
            (self.substeps >= 1, "substeps must be at least 1"),
            (self.budget >= 0.0, "budget must be nonnegative"),
            (self.np_size >= 4, "np must be at least 4"),
            (0.0 <= self.cr <= 1.0, "cr must lie in [0, 1]"),
            (0.0 <= self.fp <= 1.0, "fp must lie in [0, 1]"),
            (self.ds is None or self.ds >= 1, "ds must be positive when given"),
            (self.sub_fes is None or self.sub_fes >= 1, "sub_fes must be positive"),
            (self.total_fes >= 1, "total_fes must be positive"),
            (0.0 < self.gc_fraction < 1.0, "gc_fraction must lie in (0, 1)"),
            (self.runs >= 1, "runs must be at least 1"),
            (self.master_seed >= 0, "master_seed must be nonnegative"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    @classmethod
    def json_keys(cls) -> list[str]:
        names = [f.name for f in fields(cls) if not f.name.startswith("_")]
        reverse = {v: k for k, v in cls._JSON_KEYS.items()}
        return [reverse.get(name, name) for name in names]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        allowed = set(cls.json_keys())
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError(
                f"unknown config keys {unknown}; allowed keys are {sorted(allowed)}"
            )
        kwargs = {cls._JSON_KEYS.get(key, key): value for key, value in data.items()}
        nullable = {"ds", "sub_fes"}
        for key, value in kwargs.items():
            if value is None and key not in nullable:
                raise ConfigError(f"config key {key!r} must not be null")
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def epidemic_params(self) -> EpidemicParams:
        return EpidemicParams(
            beta=self.beta,
            gamma=self.gamma,
            p0=self.p0,
            horizon=self.horizon,
            substeps=self.substeps,
        )


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one independent run: scores, history, and best-candidate traces."""

    algorithm: str
    run: int
    ofv: float
    violation: float
    evaluations: int
    generations: int
    history: list[GenerationRecord] = field(repr=False)
    schedule: WeightSchedule = field(repr=False)
    trajectory: Trajectory = field(repr=False)
    wall_time: float = 0.0


def derive_run_seed(master_seed: int, run_index: int) -> int:
    """Fixed per-run seed split: first 64-bit word of SeedSequence([master, run])."""
    seq = np.random.SeedSequence([master_seed, run_index])
    return int(seq.generate_state(1, np.uint64)[0])


def _optimizer_record(
    cfg: ExperimentConfig, net: Network, params: EpidemicParams, run_index: int
) -> RunRecord:
    start = time.perf_counter()
    dim = decision_dimension(net.n, cfg.horizon)
    evaluate = make_batch_evaluator(net, params, cfg.budget)
    de_cfg = DEConfig(np_size=cfg.np_size, cr=cfg.cr, fp=cfg.fp)
    seed = derive_run_seed(cfg.master_seed, run_index)
    if cfg.algorithm == "nsde_c3":
        ds = cfg.ds if cfg.ds is not None else net.n * (net.n - 1)
        c3_cfg = C3Config(
            ds=ds,
            total_budget=cfg.total_fes,
            sub_fes=cfg.sub_fes,
            gc_fraction=cfg.gc_fraction,
            lam=cfg.lam,
            count_reevals=cfg.count_reevals,
        )
        result = run_c3(evaluate, dim, c3_cfg, de_cfg, seed)
    else:
        result = run_nsde(
            evaluate, dim, cfg.total_fes, de_cfg, seed,
            gc_fraction=cfg.gc_fraction, lam=cfg.lam,
        )
    schedule = decode_candidate(result.best.genes, net.n, cfg.horizon)
    trajectory = integrate(net, params, schedule)
    return RunRecord(
        algorithm=cfg.algorithm,
        run=run_index,
        ofv=result.best.f,
        violation=result.best.violation,
        evaluations=result.evaluations,
        generations=result.generations,
        history=result.history,
        schedule=schedule,
        trajectory=trajectory,
        wall_time=time.perf_counter() - start,
    )


def _baseline_record(
    cfg: ExperimentConfig, net: Network, params: EpidemicParams
) -> RunRecord:
    start = time.perf_counter()
    if cfg.algorithm == "none":
        schedule = no_adaptation_schedule(net, cfg.horizon)
    else:
        schedule = constant_adaptation_schedule(net, cfg.horizon, cfg.budget)
    trajectory = integrate(net, params, schedule)
    g = constraint_value(schedule, net, cfg.budget)
    violation = 0.0 if g <= BASELINE_FEAS_ATOL else g
    return RunRecord(
        algorithm=cfg.algorithm,
        run=0,
        ofv=objective_value(trajectory),
        violation=violation,
        evaluations=1,
        generations=0,
        history=[],
        schedule=schedule,
        trajectory=trajectory,
        wall_time=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class RunFailure:
    run: int
    message: str


def _run_one(payload: tuple[ExperimentConfig, Network, int]) -> RunRecord | RunFailure:
    cfg, net, run_index = payload
    try:
        return _optimizer_record(cfg, net, cfg.epidemic_params(), run_index)
    except IntegrationError as exc:
        return RunFailure(run=run_index, message=str(exc))


def run_experiment(
    cfg: ExperimentConfig,
    net: Network | None = None,
    outdir: str | Path | None = None,
    workers: int = 1,
) -> list[RunRecord]:
    """Execute one campaign and optionally emit its CSV artifacts.

    The network is generated from ``net_seed`` unless one is supplied (the
    CLI loads it from disk so every algorithm sees the same instance).
    Baselines produce a single deterministic record; optimizer campaigns
    produce ``cfg.runs`` records whose seeds derive from the master seed.
    Records come back in run order regardless of ``workers``.
    """
    if net is None:
        net = generate_ba(cfg.n, cfg.m0, cfg.m, cfg.net_seed)
    params = cfg.epidemic_params()
    if cfg.algorithm in ("none", "constant"):
        records = [_baseline_record(cfg, net, params)]
    else:
        payloads = [(cfg, net, r) for r in range(cfg.runs)]
        if workers > 1 and cfg.runs > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_run_one, payloads))
        else:
            outcomes = [_run_one(p) for p in payloads]
        records = [out for out in outcomes if isinstance(out, RunRecord)]
        for out in outcomes:
            # A diverged integration loses its run, not the campaign.
            if isinstance(out, RunFailure):
                print(f"run {out.run} aborted: {out.message}", file=sys.stderr)
    if outdir is not None:
        emit_run_artifacts(records, net, Path(outdir))
    return records


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_history_csv(history: Sequence[GenerationRecord], path: Path) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["generation", "cycle", "group", "best_f", "best_violation", "epsilon"]
        )
        for row in history:
            writer.writerow(
                [row.generation, row.cycle, row.group,
                 _fmt(row.best_f), _fmt(row.best_violation), _fmt(row.epsilon)]
            )


def write_schedule_csv(sched: WeightSchedule, path: Path) -> None:
    """All off-diagonal weights of every block, rows ``t,i,j,w`` with t >= 1."""
    rows, cols = _offdiag_indices(sched.n)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "i", "j", "w"])
        for t in range(1, sched.horizon):
            block = sched.blocks[t - 1]
            for i, j in zip(rows, cols):
                writer.writerow([t, i, j, _fmt(block[i, j])])


def read_schedule_csv(path: str | Path, n: int, horizon: int) -> WeightSchedule:
    """Read a schedule written by :func:`write_schedule_csv`."""
    blocks = np.zeros((horizon - 1, n, n))
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["t", "i", "j", "w"]:
            raise ConfigError(f"{path}: expected header 't,i,j,w'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            t, i, j = int(row[0]), int(row[1]), int(row[2])
            if not 1 <= t < horizon:
                raise ConfigError(f"{path}:{lineno}: block index {t} outside [1, {horizon})")
            if not (0 <= i < n and 0 <= j < n):
                raise ConfigError(f"{path}:{lineno}: node ids must lie in [0, {n})")
            if i == j:
                raise ConfigError(f"{path}:{lineno}: diagonal weights must stay zero")
            blocks[t - 1, i, j] = float(row[3])
    return WeightSchedule(blocks=blocks)


def emit_run_artifacts(records: Sequence[RunRecord], net: Network, outdir: Path) -> None:
    """Write runs.csv plus per-run history, traces, schedule, and timing.txt."""
    outdir.mkdir(parents=True, exist_ok=True)
    with (outdir / "runs.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["algorithm", "run", "ofv", "violation", "evaluations", "generations"]
        )
        for rec in records:
            writer.writerow(
                [rec.algorithm, rec.run, _fmt(rec.ofv), _fmt(rec.violation),
                 rec.evaluations, rec.generations]
            )
    for rec in records:
        rdir = outdir / f"run_{rec.run:02d}"
        rdir.mkdir(exist_ok=True)
        write_history_csv(rec.history, rdir / "history.csv")
        write_schedule_csv(rec.schedule, rdir / "best_schedule.csv")
        times, i_level, w_level = trace_series(rec.trajectory, rec.schedule, net)
        with (rdir / "trace_I.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "I"])
            for t, value in zip(times, i_level):
                writer.writerow([_fmt(t), _fmt(value)])
        with (rdir / "trace_W.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "W"])
            for t, value in zip(times, w_level):
                writer.writerow([_fmt(t), _fmt(value)])
    with (outdir / "timing.txt").open("w") as fh:
        for rec in records:
            fh.write(f"run {rec.run}: {rec.wall_time:.3f} s\n")


def read_runs_csv(path: str | Path) -> list[dict]:
    """Rows of a runs.csv as dicts with typed ofv/violation fields."""
    out: list[dict] = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"algorithm", "run", "ofv", "violation"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ConfigError(f"{path}: missing columns {sorted(required)}")
        for row in reader:
            out.append(
                {
                    "algorithm": row["algorithm"],
                    "run": int(row["run"]),
                    "ofv": float(row["ofv"]),
                    "violation": float(row["violation"]),
                }
            )
    if not out:
        raise ConfigError(f"{path}: no run rows")
    return out


def summarize_run_dirs(
    indirs: Sequence[str | Path], reference: str
) -> list[AlgorithmSummary]:
    """Aggregate runs.csv files from campaign directories into summary rows."""
    ofvs: dict[str, list[float]] = {}
    viols: dict[str, list[float]] = {}
    for indir in indirs:
        for row in read_runs_csv(Path(indir) / "runs.csv"):
            ofvs.setdefault(row["algorithm"], []).append(row["ofv"])
            viols.setdefault(row["algorithm"], []).append(row["violation"])
    return summarize(ofvs, reference=normalize_algorithm(reference), violations=viols)


def write_summary_csv(rows: Sequence[AlgorithmSummary], path: Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["algorithm", "mean_ofv", "std", "p_value", "best", "infeasible_runs"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.algorithm,
                    _fmt(row.mean_ofv),
                    _fmt(row.std),
                    "-" if row.p_value is None else _fmt(row.p_value),
                    int(row.is_best),
                    row.n_infeasible,
                ]
            )
