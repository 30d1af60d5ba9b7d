"""Analytic mixed-variable benchmark problems.

Cheap smooth stand-ins shaped like realistic engineering studies: a
retrofit-style space (3 continuous + 1 categorical), a product-family space
with hierarchical variables (9 continuous + 10 binary categoricals), and a
supply-chain space of 8 categoricals with feasibility-mask constraints.
All objectives follow the minimization convention; quantities that would
naturally be maximized (efficiency, quality) enter negated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .design_space import ActivityRule, DesignSpace, MixedPoint, VariableSpec


@dataclass(frozen=True)
class BenchmarkProblem:
    name: str
    space: DesignSpace
    n_objectives: int
    n_constraints: int
    evaluate: Callable[[MixedPoint], tuple[np.ndarray, np.ndarray]]
    description: str = ""
    true_front: Callable[[int], np.ndarray] | None = None  # dense front sampler
    enumerate_all: Callable[[], tuple[list, np.ndarray, np.ndarray]] | None = None


# -- continuous classics -----------------------------------------------------


def _zdt1() -> BenchmarkProblem:
    d = 5
    space = DesignSpace(
        [VariableSpec(f"x{i + 1}", "continuous", bounds=(0.0, 1.0)) for i in range(d)],
        name="zdt1",
    )

    def evaluate(p: MixedPoint):
        x = np.asarray(p.values, dtype=float)
        f1 = x[0]
        g = 1.0 + 9.0 * x[1:].mean()
        f2 = g * (1.0 - math.sqrt(f1 / g))
        return np.array([f1, f2]), np.empty(0)

    def true_front(n: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n)
        return np.column_stack([t, 1.0 - np.sqrt(t)])

    return BenchmarkProblem(
        name="zdt1",
        space=space,
        n_objectives=2,
        n_constraints=0,
        evaluate=evaluate,
        true_front=true_front,
        description="bi-objective continuous benchmark, front f2 = 1 - sqrt(f1)",
    )


def _bnh() -> BenchmarkProblem:
    space = DesignSpace(
        [
            VariableSpec("x", "continuous", bounds=(0.0, 5.0)),
            VariableSpec("y", "continuous", bounds=(0.0, 3.0)),
        ],
        name="bnh",
    )

    def evaluate(p: MixedPoint):
        x, y = p.values
        f1 = 4.0 * x * x + 4.0 * y * y
        f2 = (x - 5.0) ** 2 + (y - 5.0) ** 2
        g1 = (x - 5.0) ** 2 + y * y - 25.0
        g2 = 7.7 - (x - 8.0) ** 2 - (y + 3.0) ** 2
        return np.array([f1, f2]), np.array([g1, g2])

    def true_front(n: int) -> np.ndarray:
        # optimal designs trace x = y on [0, 3], then y pinned at 3, x in [3, 5]
        out = []
        for t in np.linspace(0.0, 1.0, n):
            if t <= 0.6:
                x = y = 5.0 * t
            else:
                x, y = 5.0 * t, 3.0
            out.append([4 * x * x + 4 * y * y, (x - 5) ** 2 + (y - 5) ** 2])
        return np.asarray(out)

    return BenchmarkProblem(
        name="bnh",
        space=space,
        n_objectives=2,
        n_constraints=2,
        evaluate=evaluate,
        true_front=true_front,
        description="constrained bi-objective benchmark with two inequality constraints",
    )


def _biquad() -> BenchmarkProblem:
    space = DesignSpace(
        [
            VariableSpec("x1", "continuous", bounds=(0.0, 1.0)),
            VariableSpec("x2", "continuous", bounds=(0.0, 1.0)),
        ],
        name="biquad",
    )

    def evaluate(p: MixedPoint):
        x = np.asarray(p.values, dtype=float)
        f1 = float(np.sum(x**2))
        f2 = float(np.sum((x - 1.0) ** 2))
        return np.array([f1, f2]), np.empty(0)

    def true_front(n: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, n)
        return np.column_stack([2 * t * t, 2 * (1 - t) ** 2])

    return BenchmarkProblem(
        name="biquad",
        space=space,
        n_objectives=2,
        n_constraints=0,
        evaluate=evaluate,
        true_front=true_front,
        description="two quadratic bowls; the Pareto set is the segment between their minima",
    )


# -- retrofit-shaped: 3 continuous + 1 categorical(4), 4 objectives ----------

_OBS_LEVELS = ("CONV", "MEA1", "MEA2", "AEA")


def _retrofit() -> BenchmarkProblem:
    space = DesignSpace(
        [
            VariableSpec("bypass_ratio", "continuous", bounds=(9.0, 15.0)),
            VariableSpec("engine_x", "continuous", bounds=(-0.98, -0.80)),
            VariableSpec("engine_z", "continuous", bounds=(-0.39, -0.21)),
            VariableSpec("obs_arch", "categorical", levels=_OBS_LEVELS),
        ],
        name="mixed-retrofit-toy",
    )

    def evaluate(p: MixedPoint):
        b, x, z, k = p.values
        tb = (b - 9.0) / 6.0
        tx = (x + 0.98) / 0.18
        tz = (z + 0.39) / 0.18
        elec = k / 3.0  # electrification level of the architecture choice
        weight = 0.8 + 0.30 * (1.0 - tb) ** 2 + 0.15 * (tx - 0.4) ** 2 + 0.10 * (tz - 0.6) ** 2 - 0.05 * elec
        emissions = 1.2 - 0.50 * tb + 0.20 * tb * tb + 0.10 * math.sin(math.pi * tx) - 0.30 * elec
        cost = 0.2 + 0.60 * elec + 0.40 * tb + 0.05 * math.cos(2.0 * math.pi * tz)
        sar = 0.5 + 0.40 * tb + 0.25 * elec - 0.20 * (tx - 0.5) ** 2
        f = np.array([weight, emissions, cost, -sar])
        noise = 1.0 - 0.35 * tb - 0.30 * elec + 0.15 * (tx - 0.3) ** 2
        g = np.array(
            [
                weight - 1.05,
                0.45 - tb - 0.15 * elec,
                noise - 0.95,
                0.20 * (tx - 0.5) ** 2 + 0.20 * (tz - 0.5) ** 2 - 0.06,
            ]
        )
        return f, g

    return BenchmarkProblem(
        name="mixed-retrofit-toy",
        space=space,
        n_objectives=4,
        n_constraints=4,
        evaluate=evaluate,
        description="retrofit-style study: engine placement and architecture choice, "
        "four conflicting objectives, four constraints (relaxed dimension 7)",
    )


# -- family-shaped: 9 continuous + 10 binary categoricals, activity rules ----

_SHARE = ("no", "yes")


def _family() -> BenchmarkProblem:
    cats = [
        "eng12", "eng23", "wing12", "wing23", "gear12",
        "gear23", "obs12", "obs23", "emp13", "emp32",
    ]
    variables = [VariableSpec(c, "categorical", levels=_SHARE) for c in cats]
    # wing 1 is always designed; wings 2 and 3 are designed only when not shared
    gates = {2: "wing12", 3: "wing23"}
    for w in (1, 2, 3):
        rule = None if w == 1 else ActivityRule(var=gates[w], levels=("no",))
        variables += [
            VariableSpec(f"sweep{w}", "continuous", bounds=(30.0, 42.0), active_when=rule),
            VariableSpec(f"span{w}", "continuous", bounds=(0.72, 0.82), active_when=rule),
            VariableSpec(f"tc{w}", "continuous", bounds=(0.06, 0.11), active_when=rule),
        ]
    space = DesignSpace(variables, name="mixed-family-toy")
    names = [v.name for v in variables]
    idx = {n: i for i, n in enumerate(names)}

    def evaluate(p: MixedPoint):
        vals = p.values
        shares = sum(vals[idx[c]] for c in cats)
        operating = 2.0 + 0.22 * shares
        for w in (1, 2, 3):
            shared = w > 1 and vals[idx[gates[w]]] == 1
            if shared:
                operating += 1.1  # off-design penalty of a borrowed wing
            else:
                sweep = (vals[idx[f"sweep{w}"]] - 36.0) / 6.0
                span = (vals[idx[f"span{w}"]] - 0.77) / 0.05
                tc = (vals[idx[f"tc{w}"]] - 0.085) / 0.025
                operating += sweep * sweep + 0.5 * span * span + 0.3 * tc * tc
        nonrecurring = 3.0 + 0.8 * (10 - shares) + 0.6 * sum(
            1 for w in (2, 3) if vals[idx[gates[w]]] == 0
        )
        f = np.array([operating, nonrecurring])
        tc1 = vals[idx["tc1"]]
        sweep1 = vals[idx["sweep1"]]
        g = np.array(
            [
                (sweep1 - 30.0) / 12.0 + (0.11 - tc1) / 0.05 - 1.6,  # field-length proxy
                0.8 - operating / 4.0,  # need some minimum capability
            ]
        )
        return f, g

    return BenchmarkProblem(
        name="mixed-family-toy",
        space=space,
        n_objectives=2,
        n_constraints=2,
        evaluate=evaluate,
        description="family-design study: commonality choices against per-aircraft wing "
        "variables that deactivate when the wing is shared (relaxed dimension 29)",
    )


# -- supply-chain-shaped: 8 categoricals, 5 objectives, feasibility masks ----

_PARTS = ("skin", "spar", "stringer", "rib")
_N_SITES_FULL = 21
_N_PROCS_FULL = {"skin": 6, "spar": 5, "stringer": 4, "rib": 5}


def _supply_tables(n_sites: int, n_procs: dict[str, int]) -> dict:
    """Deterministic per-level coefficient tables (seeded once, then sliced)."""
    rng = np.random.default_rng(987654321)
    full = {
        "site_cost": {p: rng.uniform(1.0, 3.0, _N_SITES_FULL) for p in _PARTS},
        "site_time": {p: rng.uniform(0.5, 2.0, _N_SITES_FULL) for p in _PARTS},
        "site_risk": {p: rng.uniform(0.1, 1.0, _N_SITES_FULL) for p in _PARTS},
        "proc_cost": {p: rng.uniform(0.5, 2.5, _N_PROCS_FULL[p]) for p in _PARTS},
        "proc_time": {p: rng.uniform(0.3, 1.5, _N_PROCS_FULL[p]) for p in _PARTS},
        "proc_fuel": {p: rng.uniform(0.2, 1.8, _N_PROCS_FULL[p]) for p in _PARTS},
        # competence 0 means the site cannot run the process at all
        "competence": {
            p: (rng.uniform(size=(_N_SITES_FULL, _N_PROCS_FULL[p])) > 0.12).astype(int)
            for p in _PARTS
        },
    }
    # material incompatibility between the skin process and the rib process
    incompat = rng.uniform(size=(_N_PROCS_FULL["skin"], _N_PROCS_FULL["rib"])) < 0.18
    incompat[0, :] = False  # the baseline process is compatible with everything
    incompat[:, 0] = False
    tables = {
        key: {p: arr[:n_sites] if key.startswith("site") else arr[: n_procs[p]] for p, arr in sub.items()}
        for key, sub in full.items()
        if key != "competence"
    }
    tables["competence"] = {
        p: full["competence"][p][:n_sites, : n_procs[p]] for p in _PARTS
    }
    tables["incompat"] = incompat[: n_procs["skin"], : n_procs["rib"]]
    return tables


def _supply_problem(name: str, n_sites: int, n_procs: dict[str, int], enumerable: bool) -> BenchmarkProblem:
    site_levels = tuple(f"site{k:02d}" for k in range(n_sites))
    variables = [VariableSpec(f"site_{p}", "categorical", levels=site_levels) for p in _PARTS]
    variables += [
        VariableSpec(
            f"proc_{p}",
            "categorical",
            levels=tuple(f"{p}_proc{k}" for k in range(n_procs[p])),
        )
        for p in _PARTS
    ]
    space = DesignSpace(variables, name=name)
    t = _supply_tables(n_sites, n_procs)

    def evaluate(p: MixedPoint):
        sites = dict(zip(_PARTS, p.values[:4]))
        procs = dict(zip(_PARTS, p.values[4:]))
        cost = sum(t["site_cost"][q][sites[q]] + t["proc_cost"][q][procs[q]] for q in _PARTS)
        risk = sum(t["site_risk"][q][sites[q]] * (1.0 + 0.5 * t["proc_time"][q][procs[q]]) for q in _PARTS)
        time_ = sum(t["site_time"][q][sites[q]] + t["proc_time"][q][procs[q]] for q in _PARTS)
        fuel = sum(t["proc_fuel"][q][procs[q]] for q in _PARTS)
        # premium supply chains deliver proportionally better quality, so cost
        # and (negated) quality trade off exactly
        quality = 0.75 * cost + 1.0
        f = np.array([cost, risk, time_, fuel, -quality])
        bad_material = bool(t["incompat"][procs["skin"], procs["rib"]])
        bad_site = any(t["competence"][q][sites[q], procs[q]] == 0 for q in _PARTS)
        g = np.array([1.0 if bad_material else -1.0, 1.0 if bad_site else -1.0])
        return f, g

    def enumerate_all():
        points, F, G = [], [], []
        ranges = [range(n_sites)] * 4 + [range(n_procs[p]) for p in _PARTS]
        for combo in itertools.product(*ranges):
            point = space.point(list(combo))
            f, g = evaluate(point)
            points.append(point)
            F.append(f)
            G.append(g)
        return points, np.asarray(F), np.asarray(G)

    return BenchmarkProblem(
        name=name,
        space=space,
        n_objectives=5,
        n_constraints=2,
        evaluate=evaluate,
        enumerate_all=enumerate_all if enumerable else None,
        description="supply-chain study: per-part production sites and processes, five "
        "objectives, material and competence feasibility masks",
    )


def _supply_full() -> BenchmarkProblem:
    return _supply_problem("cat-supply-toy", _N_SITES_FULL, dict(_N_PROCS_FULL), enumerable=False)


def _supply_small() -> BenchmarkProblem:
    return _supply_problem(
        "cat-supply-toy-small", 4, {p: 2 for p in _PARTS}, enumerable=True
    )


def builtin_problems() -> dict[str, BenchmarkProblem]:
    """Catalog of built-in benchmark problems, keyed by name."""
    problems = [
        _zdt1(),
        _bnh(),
        _biquad(),
        _retrofit(),
        _family(),
        _supply_full(),
        _supply_small(),
    ]
    return {p.name: p for p in problems}
