"""Run orchestration: DOE, surrogate refits, infill asks, finalization.

The driver exposes an ask/tell core.  `ask` hands out the next point to
evaluate (DOE replay first, then acquisition maximizers) and `tell` feeds
the black-box values back.  `finalize` produces the two outputs of a run:
the database front (feasible nondominated evaluated points) and the
predicted front (NSGA-II over the final surrogates), plus a proximity
report between them.  Everything is deterministic given the config seeds.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import moea
from .acquisition import AcquisitionConfig
from .design_space import DesignSpace, MixedPoint
from .infill import InfillProblem, dedup_guard, solve
from .pareto import ParetoArchive, nondominated_filter, reference_point
from .surrogate import FitError, KernelConfig, MultiOutputSurrogate

log = logging.getLogger("mixmobo.driver")

DOE = "doe"
ENRICH = "enrich"
DONE = "done"


class ProtocolError(RuntimeError):
    """Ask/tell called out of turn."""


class BudgetExhaustedError(ProtocolError):
    """The evaluation budget is spent; the run is done."""


class PendingEvaluationError(ProtocolError):
    """An ask is outstanding; tell it before asking again."""


@dataclass(frozen=True)
class RunConfig:
    space: DesignSpace
    n_objectives: int
    n_constraints: int
    doe_size: int
    budget: int
    acquisition: AcquisitionConfig = AcquisitionConfig()
    kernel: KernelConfig = KernelConfig()
    seed: int = 0
    infill_starts: int = 20
    name: str = "run"

    def __post_init__(self):
        if self.n_objectives < 1 or self.n_constraints < 0:
            raise ValueError("need n_objectives >= 1 and n_constraints >= 0")
        if not (self.budget >= self.doe_size >= 2):
            raise ValueError("need budget >= doe_size >= 2")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "space": self.space.to_dict(),
            "n_objectives": self.n_objectives,
            "n_constraints": self.n_constraints,
            "doe_size": self.doe_size,
            "budget": self.budget,
            "acquisition": asdict(self.acquisition),
            "kernel": asdict(self.kernel),
            "seed": self.seed,
            "infill_starts": self.infill_starts,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return cls(
            space=DesignSpace.from_dict(data["space"]),
            n_objectives=data["n_objectives"],
            n_constraints=data["n_constraints"],
            doe_size=data["doe_size"],
            budget=data["budget"],
            acquisition=AcquisitionConfig(**data.get("acquisition", {})),
            kernel=KernelConfig(**data.get("kernel", {})),
            seed=data.get("seed", 0),
            infill_starts=data.get("infill_starts", 20),
            name=data.get("name", "run"),
        )


@dataclass
class EvalRecord:
    point: MixedPoint
    objectives: tuple[float, ...]
    constraints: tuple[float, ...]
    origin: str  # "doe" | "infill"
    status: str  # "ok" | "failed"
    feasible: bool
    timestamp: float


class RunState:
    """Single-writer run state; ask/tell must alternate."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.history: list[EvalRecord] = []
        self.archive = ParetoArchive(n_objectives=config.n_objectives)
        self.pending: tuple[MixedPoint, str] | None = None
        self.ref_point: np.ndarray | None = None
        self.doe_points = config.space.lhs_sample(config.doe_size, seed=config.seed)
        self.outputs: "FinalizeResult | None" = None  # set by finalize

    @property
    def n_evaluated(self) -> int:
        return len(self.history)

    @property
    def n_ok(self) -> int:
        return sum(r.status == "ok" for r in self.history)

    @property
    def phase(self) -> str:
        if self.n_evaluated >= self.config.budget:
            return DONE
        if self.n_evaluated < self.config.doe_size:
            return DOE
        return ENRICH

    def usable(self) -> list[EvalRecord]:
        return [r for r in self.history if r.status == "ok"]

    @classmethod
    def restore(
        cls,
        config: RunConfig,
        records: Sequence[tuple],
        pending: tuple[MixedPoint, str] | None = None,
    ) -> "RunState":
        """Rebuild a state from logged evaluations (event-log replay)."""
        state = cls(config)
        for point, f, g, origin, status in records:
            state._append(point, f, g, origin, status)
        state.pending = pending
        return state

    def _append(self, point: MixedPoint, f, g, origin: str, status: str) -> EvalRecord:
        f = tuple(float(v) for v in f)
        g = tuple(float(v) for v in g)
        finite = all(np.isfinite(f)) and all(np.isfinite(g))
        if not finite:
            status = "failed"
        feasible = status == "ok" and all(v <= 0.0 for v in g)
        record = EvalRecord(point, f, g, origin, status, feasible, time.time())
        self.history.append(record)
        if status == "ok":
            self.archive.add(point, f, g)
            self.ref_point = self.archive.ref_point()
        return record


def _sub_seed(master: int, stream: int, index: int) -> int:
    return int(np.random.SeedSequence((master, stream, index)).generate_state(1)[0])


def _objective_stats(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    center = F.mean(axis=0)
    scale = F.std(axis=0)
    scale[scale <= 1e-12] = 1.0
    return center, scale


def _fit_on_history(state: RunState, seed: int) -> MultiOutputSurrogate | None:
    usable = state.usable()
    if len(usable) < 2:
        return None
    X = np.array([state.config.space.encode(r.point).as_array() for r in usable])
    F = np.array([r.objectives for r in usable])
    G = np.array([r.constraints for r in usable]) if state.config.n_constraints else None
    try:
        return MultiOutputSurrogate.fit(X, F, G, config=state.config.kernel, seed=seed)
    except FitError as exc:
        log.warning("surrogate fit failed (%s); falling back to space sampling", exc)
        return None


def _enrich_point(state: RunState) -> MixedPoint:
    config = state.config
    iteration = state.n_evaluated
    surrogate = _fit_on_history(state, seed=_sub_seed(config.seed, 1, iteration))
    if surrogate is None:
        # not enough usable data to model; keep exploring deterministically
        return config.space.lhs_sample(1, seed=_sub_seed(config.seed, 9, iteration))[0]

    front = state.archive.front()
    feasible_F = state.archive.feasible_objectives()
    if len(feasible_F):
        ref = reference_point(feasible_F)
        center, scale = _objective_stats(feasible_F)
    else:
        all_F = np.array([r.objectives for r in state.usable()])
        ref = reference_point(all_F)
        center, scale = _objective_stats(all_F)
    archive_coords = (
        np.array([config.space.encode(state.archive.entries[i].point).as_array() for i in state.archive.nondominated_indices()])
        if len(front)
        else np.empty((0, config.space.relaxed_dimension()))
    )

    problem = InfillProblem(
        surrogate=surrogate,
        acquisition=config.acquisition,
        space=config.space,
        front=front,
        ref_point=ref,
        obj_center=center,
        obj_scale=scale,
        archive_coords=archive_coords,
    )
    result = solve(problem, n_starts=config.infill_starts, seed=_sub_seed(config.seed, 2, iteration))
    coords, exhausted = dedup_guard(
        result.coords, surrogate.X, config.space, seed=_sub_seed(config.seed, 3, iteration)
    )
    if exhausted:
        log.warning("design space exhausted at iteration %d; repeating a point", iteration)
    return config.space.decode(coords)


def ask(state: RunState) -> MixedPoint:
    """Next point to evaluate; errors when done or an ask is outstanding."""
    if state.pending is not None:
        raise PendingEvaluationError("pending evaluation: tell the last point first")
    if state.phase == DONE:
        raise BudgetExhaustedError(f"budget of {state.config.budget} evaluations reached")
    if state.phase == DOE:
        point = state.doe_points[state.n_evaluated]
        origin = "doe"
    else:
        point = _enrich_point(state)
        origin = "infill"
    state.pending = (point, origin)
    return point


def tell(state: RunState, point: MixedPoint, f, g=(), status: str = "ok") -> RunState:
    """Record the evaluation of the pending point; advances the phase."""
    if state.pending is None:
        raise ProtocolError("no pending evaluation")
    expected, origin = state.pending
    if point != expected:
        raise ProtocolError("told point does not match the pending ask")
    if status not in ("ok", "failed"):
        raise ValueError(f"unknown evaluation status {status!r}")
    if len(f) != state.config.n_objectives:
        raise ValueError(f"expected {state.config.n_objectives} objectives, got {len(f)}")
    if len(g) != state.config.n_constraints:
        raise ValueError(f"expected {state.config.n_constraints} constraints, got {len(g)}")
    state._append(point, f, g, origin, status)
    state.pending = None
    return state


@dataclass
class ProximityReport:
    """Distances from predicted points to the database front, plus merged
    front survival counts."""

    distances: list[float]
    nearest_database_index: list[int]
    database_total: int
    database_on_merged: int
    predicted_total: int
    predicted_on_merged: int

    @property
    def summary(self) -> str:
        return (
            f"{self.database_on_merged} of {self.database_total} database + "
            f"{self.predicted_on_merged} of {self.predicted_total} predicted points "
            "survive in the merged front"
        )


@dataclass
class FinalizeResult:
    pf_database: list[int]  # history indices of the database front
    predicted_pf: ParetoArchive
    proximity: ProximityReport
    ref_point: np.ndarray | None


def _proximity(db_F: np.ndarray, pred_F: np.ndarray) -> ProximityReport:
    n_db, n_pred = len(db_F), len(pred_F)
    distances: list[float] = []
    nearest: list[int] = []
    if n_db and n_pred:
        combined = np.vstack([db_F, pred_F])
        center, scale = _objective_stats(combined)
        db_s = (db_F - center) / scale
        pred_s = (pred_F - center) / scale
        for row in pred_s:
            d = np.linalg.norm(db_s - row, axis=1)
            j = int(np.argmin(d))
            distances.append(float(d[j]))
            nearest.append(j)
        merged_idx = nondominated_filter(combined)
        db_on = int(np.sum(merged_idx < n_db))
        pred_on = len(merged_idx) - db_on
    else:
        db_on = n_db  # a lone set is its own merged front
        pred_on = n_pred
        nearest = [-1] * n_pred
        distances = [float("inf")] * n_pred
    return ProximityReport(
        distances=distances,
        nearest_database_index=nearest,
        database_total=n_db,
        database_on_merged=db_on,
        predicted_total=n_pred,
        predicted_on_merged=pred_on,
    )


def finalize(state: RunState, nsga2: moea.Nsga2Config | None = None) -> FinalizeResult:
    """Build both run outputs and the proximity report; idempotent.

    The database front is the feasible nondominated subset of the evaluated
    history.  The predicted front comes from NSGA-II on surrogates fitted to
    the full usable history, constrained by surrogate means.
    """
    config = state.config
    nsga2 = nsga2 or moea.Nsga2Config(seed=_sub_seed(config.seed, 4, 0))
    usable = state.usable()
    feasible = [i for i, r in enumerate(state.history) if r.feasible]
    if feasible:
        F = np.array([state.history[i].objectives for i in feasible])
        pf_database = [feasible[j] for j in nondominated_filter(F)]
    else:
        log.warning("no feasible evaluations; database front is empty")
        pf_database = []

    surrogate = _fit_on_history(state, seed=_sub_seed(config.seed, 5, 0))
    if surrogate is not None:

        def surrogate_problem(point: MixedPoint):
            x = config.space.encode(point).as_array()
            means, _ = surrogate.predict_objectives(x)
            g = surrogate.predict_constraint_means(x) if surrogate.constraints else ()
            return means, g

        predicted = moea.evolve(surrogate_problem, config.space, nsga2)
    else:
        log.warning("cannot fit final surrogates; predicted front is empty")
        predicted = ParetoArchive(n_objectives=config.n_objectives)

    db_F = np.array([state.history[i].objectives for i in pf_database]).reshape(
        len(pf_database), config.n_objectives
    )
    pred_F = predicted.front()
    report = _proximity(db_F, pred_F)
    ref = reference_point(db_F) if len(db_F) else None
    result = FinalizeResult(
        pf_database=pf_database, predicted_pf=predicted, proximity=report, ref_point=ref
    )
    state.outputs = result
    return result


def run(
    config: RunConfig,
    evaluator: Callable[[MixedPoint], tuple],
    nsga2: moea.Nsga2Config | None = None,
    artifact_dir: str | Path | None = None,
) -> tuple[RunState, FinalizeResult]:
    """Drive ask/tell to budget exhaustion, then finalize.

    Evaluator failures (raised exceptions or non-finite values) are recorded
    as failed points and excluded from surrogate training.
    """
    state = RunState(config)
    while state.phase != DONE:
        point = ask(state)
        try:
            f, g = evaluator(point)
            status = "ok"
        except Exception as exc:  # noqa: BLE001 - black boxes fail arbitrarily
            log.warning("evaluation failed: %s", exc)
            f = [float("nan")] * config.n_objectives
            g = [float("nan")] * config.n_constraints
            status = "failed"
        tell(state, point, f, g, status=status)
    result = finalize(state, nsga2=nsga2)
    if artifact_dir is not None:
        write_artifacts(artifact_dir, state, result)
    return state, result


# -- artifacts ---------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def history_header(config: RunConfig) -> list[str]:
    return (
        [v.name for v in config.space.variables]
        + [f"f{i + 1}" for i in range(config.n_objectives)]
        + [f"g{j + 1}" for j in range(config.n_constraints)]
        + ["origin", "feasible"]
    )


def history_rows(config: RunConfig, history: Sequence[EvalRecord]) -> list[list[str]]:
    rows = []
    for r in history:
        named = config.space.named_values(r.point)
        row = [_fmt(named[v.name]) for v in config.space.variables]
        row += [_fmt(v) for v in r.objectives]
        row += [_fmt(v) for v in r.constraints]
        row += [r.origin, str(int(r.feasible))]
        rows.append(row)
    return rows


def write_history_csv(path, config: RunConfig, history: Sequence[EvalRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(history_header(config))
        writer.writerows(history_rows(config, history))


def write_artifacts(directory, state: RunState, result: FinalizeResult) -> Path:
    """Run artifact directory: config snapshot, history, fronts, proximity, log."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config = state.config

    with open(directory / "config.json", "w") as fh:
        json.dump(config.to_dict(), fh, indent=2)

    write_history_csv(directory / "history.csv", config, state.history)

    with open(directory / "pf_database.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["history_index"] + history_header(config)[:-2])
        for i in result.pf_database:
            r = state.history[i]
            named = config.space.named_values(r.point)
            row = [str(i)]
            row += [_fmt(named[v.name]) for v in config.space.variables]
            row += [_fmt(v) for v in r.objectives]
            row += [_fmt(v) for v in r.constraints]
            writer.writerow(row)

    with open(directory / "predicted_pf.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(history_header(config)[:-2])
        for e in result.predicted_pf.entries:
            named = config.space.named_values(e.point)
            row = [_fmt(named[v.name]) for v in config.space.variables]
            row += [_fmt(v) for v in e.objectives]
            row += [_fmt(v) for v in e.constraints]
            writer.writerow(row)

    with open(directory / "proximity.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["predicted_index", "nearest_database_index", "distance"])
        for i, (j, dist) in enumerate(
            zip(result.proximity.nearest_database_index, result.proximity.distances)
        ):
            writer.writerow([i, j, _fmt(dist)])

    with open(directory / "run.log", "w") as fh:
        fh.write(f"run: {config.name}\n")
        fh.write(f"evaluations: {state.n_evaluated} (ok: {state.n_ok})\n")
        fh.write(f"phase: {state.phase}\n")
        fh.write(f"database front size: {len(result.pf_database)}\n")
        fh.write(f"predicted front size: {len(result.predicted_pf.entries)}\n")
        fh.write(f"proximity: {result.proximity.summary}\n")
        if result.ref_point is not None:
            fh.write(f"reference point: {result.ref_point.tolist()}\n")
    return directory
