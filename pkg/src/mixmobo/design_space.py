"""Mixed design spaces: declaration, continuous relaxation, imputation, LHS.

A design space is an ordered list of continuous, integer and categorical
variables.  Categorical variables may deactivate later variables through
activity rules (hierarchical spaces).  The space knows how to embed mixed
points into a continuous box of dimension d' = d + l_int + sum(L_j) via
one-hot relaxation of the categoricals, and how to map arbitrary vectors
of that box back to valid mixed points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

CONTINUOUS = "continuous"
INTEGER = "integer"
CATEGORICAL = "categorical"
_KINDS = (CONTINUOUS, INTEGER, CATEGORICAL)


class SpaceError(ValueError):
    """Invalid design-space declaration or out-of-range point."""


@dataclass(frozen=True)
class ActivityRule:
    """Variable is active iff the referenced categorical takes one of `levels`.

    The referenced variable must be a categorical declared earlier in the
    space, which rules out cycles.
    """

    var: str
    levels: tuple[str, ...]

    def __post_init__(self):
        if not self.levels:
            raise SpaceError("activity rule needs at least one enabling level")


@dataclass(frozen=True)
class VariableSpec:
    """One design variable: kind, bounds or levels, optional activity rule."""

    name: str
    kind: str
    bounds: tuple[float, float] | None = None
    levels: tuple[str, ...] | None = None
    active_when: ActivityRule | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SpaceError(f"unknown variable kind {self.kind!r} for {self.name!r}")
        if self.kind in (CONTINUOUS, INTEGER):
            if self.bounds is None or self.levels is not None:
                raise SpaceError(f"{self.name!r}: {self.kind} variables take bounds, not levels")
            lo, hi = self.bounds
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise SpaceError(f"{self.name!r}: bounds must be finite with lower < upper")
            if self.kind == INTEGER and (lo != int(lo) or hi != int(hi)):
                raise SpaceError(f"{self.name!r}: integer bounds must be whole numbers")
        else:
            if self.levels is None or self.bounds is not None:
                raise SpaceError(f"{self.name!r}: categorical variables take levels, not bounds")
            if len(self.levels) < 2:
                raise SpaceError(f"{self.name!r}: need at least 2 levels")
            if len(set(self.levels)) != len(self.levels):
                raise SpaceError(f"{self.name!r}: duplicate level labels")

    @property
    def n_levels(self) -> int:
        return len(self.levels) if self.levels is not None else 0


@dataclass(frozen=True)
class MixedPoint:
    """A design point in native mixed coordinates.

    `values` holds a float per continuous variable, an int per integer
    variable and a level index per categorical.  `active` flags follow from
    the space's activity rules; inactive variables always carry the imputed
    placeholder value.
    """

    values: tuple
    active: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RelaxedVector:
    """A point of the relaxed space R^d' with its variable -> span layout."""

    coords: tuple[float, ...]
    layout: tuple[tuple[str, int, int], ...]

    def __len__(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


class DesignSpace:
    """Ordered mixed variables plus relaxation/encoding/sampling machinery.

    Immutable after construction; all methods are pure and thread-safe.
    """

    def __init__(self, variables: Sequence[VariableSpec], name: str = "space"):
        if not variables:
            raise SpaceError("design space needs at least one variable")
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate variable names")
        self.name = name
        self.variables: tuple[VariableSpec, ...] = tuple(variables)
        self._index = {v.name: i for i, v in enumerate(self.variables)}
        for i, v in enumerate(self.variables):
            rule = v.active_when
            if rule is None:
                continue
            if rule.var not in self._index:
                raise SpaceError(f"{v.name!r}: activity rule references unknown variable {rule.var!r}")
            j = self._index[rule.var]
            ref = self.variables[j]
            if ref.kind != CATEGORICAL:
                raise SpaceError(f"{v.name!r}: activity rule must reference a categorical variable")
            if j >= i:
                raise SpaceError(f"{v.name!r}: activity rule must reference an earlier variable")
            unknown = set(rule.levels) - set(ref.levels)
            if unknown:
                raise SpaceError(f"{v.name!r}: activity rule uses unknown levels {sorted(unknown)}")

        layout = []
        start = 0
        for v in self.variables:
            width = v.n_levels if v.kind == CATEGORICAL else 1
            layout.append((v.name, start, start + width))
            start += width
        self.layout: tuple[tuple[str, int, int], ...] = tuple(layout)
        self._d_prime = start

    # -- structure ---------------------------------------------------------

    @property
    def n_continuous(self) -> int:
        return sum(v.kind == CONTINUOUS for v in self.variables)

    @property
    def n_integer(self) -> int:
        return sum(v.kind == INTEGER for v in self.variables)

    @property
    def n_categorical(self) -> int:
        return sum(v.kind == CATEGORICAL for v in self.variables)

    def relaxed_dimension(self) -> int:
        """d' = d + l_int + sum of categorical level counts."""
        return self._d_prime

    def relaxed_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Box bounds of the relaxed space (one-hot coordinates in [0, 1])."""
        lo = np.empty(self._d_prime)
        hi = np.empty(self._d_prime)
        for v, (_, a, b) in zip(self.variables, self.layout):
            if v.kind == CATEGORICAL:
                lo[a:b], hi[a:b] = 0.0, 1.0
            else:
                lo[a:b], hi[a:b] = v.bounds
        return lo, hi

    def span(self, name: str) -> tuple[int, int]:
        _, a, b = self.layout[self._index[name]]
        return a, b

    # -- points ------------------------------------------------------------

    def _placeholder(self, v: VariableSpec):
        if v.kind == CONTINUOUS:
            return (v.bounds[0] + v.bounds[1]) / 2.0
        if v.kind == INTEGER:
            mid = (v.bounds[0] + v.bounds[1]) / 2.0
            return int(math.floor(mid + 0.5))  # half rounds up, deterministic
        return 0

    def _check_value(self, v: VariableSpec, value):
        if v.kind == CONTINUOUS:
            x = float(value)
            if not (v.bounds[0] <= x <= v.bounds[1]):
                raise SpaceError(f"{v.name!r}: {x} outside bounds {v.bounds}")
            return x
        if v.kind == INTEGER:
            z = int(value)
            if z != value or not (v.bounds[0] <= z <= v.bounds[1]):
                raise SpaceError(f"{v.name!r}: {value} not an in-bounds integer")
            return z
        k = int(value)
        if k != value or not (0 <= k < v.n_levels):
            raise SpaceError(f"{v.name!r}: level index {value} outside 0..{v.n_levels - 1}")
        return k

    def point(self, values: Sequence) -> MixedPoint:
        """Build a validated point: compute activity flags, impute inactives."""
        if len(values) != len(self.variables):
            raise SpaceError(f"expected {len(self.variables)} values, got {len(values)}")
        out, active = [], []
        for v, raw in zip(self.variables, values):
            rule = v.active_when
            if rule is None:
                is_active = True
            else:
                j = self._index[rule.var]
                label = self.variables[j].levels[out[j]]
                is_active = label in rule.levels
            active.append(is_active)
            out.append(self._check_value(v, raw) if is_active else self._placeholder(v))
        return MixedPoint(values=tuple(out), active=tuple(active))

    def impute(self, p: MixedPoint) -> MixedPoint:
        """Reapply activity rules and placeholders; idempotent."""
        return self.point(p.values)

    def is_valid(self, p: MixedPoint) -> bool:
        try:
            return self.point(p.values) == p
        except SpaceError:
            return False

    def level_label(self, name: str, index: int) -> str:
        return self.variables[self._index[name]].levels[index]

    def named_values(self, p: MixedPoint) -> dict:
        """Point as {variable name: value}, categorical values as labels."""
        out = {}
        for v, val in zip(self.variables, p.values):
            out[v.name] = v.levels[val] if v.kind == CATEGORICAL else val
        return out

    def point_from_named(self, named: dict) -> MixedPoint:
        values = []
        for v in self.variables:
            if v.name not in named:
                raise SpaceError(f"missing value for variable {v.name!r}")
            raw = named[v.name]
            if v.kind == CATEGORICAL:
                if raw not in v.levels:
                    raise SpaceError(f"{v.name!r}: unknown level {raw!r}")
                raw = v.levels.index(raw)
            values.append(raw)
        return self.point(values)

    # -- relaxation --------------------------------------------------------

    def encode(self, p: MixedPoint) -> RelaxedVector:
        """One-hot relaxation: continuous copied, integer cast, categorical -> e_k."""
        p = self.impute(p)
        coords = np.zeros(self._d_prime)
        for v, val, (_, a, b) in zip(self.variables, p.values, self.layout):
            if v.kind == CATEGORICAL:
                coords[a + val] = 1.0
            else:
                coords[a] = float(val)
        return RelaxedVector(coords=tuple(coords.tolist()), layout=self.layout)

    def decode(self, v: RelaxedVector | np.ndarray | Sequence[float]) -> MixedPoint:
        """Total inverse of encode: clip, round, argmax (ties to lowest level)."""
        coords = v.as_array() if isinstance(v, RelaxedVector) else np.asarray(v, dtype=float)
        if coords.shape != (self._d_prime,):
            raise SpaceError(f"expected {self._d_prime} coordinates, got {coords.shape}")
        values = []
        for var, (_, a, b) in zip(self.variables, self.layout):
            if var.kind == CONTINUOUS:
                values.append(float(np.clip(coords[a], *var.bounds)))
            elif var.kind == INTEGER:
                z = math.floor(float(coords[a]) + 0.5)
                values.append(int(np.clip(z, *var.bounds)))
            else:
                values.append(int(np.argmax(coords[a:b])))  # argmax takes lowest on ties
        return self.point(values)

    # -- sampling ----------------------------------------------------------

    def lhs_sample(self, n: int, seed: int) -> list[MixedPoint]:
        """Latin hypercube sample of n valid mixed points.

        Each continuous axis gets exactly one point per equal-width bin.
        Integer and categorical axes are stratified on their continuous
        relaxation and then rounded, so duplicates are possible there.
        """
        if n < 1:
            raise SpaceError("need n >= 1")
        rng = np.random.default_rng(seed)
        columns = []
        for v in self.variables:
            u = (rng.permutation(n) + rng.uniform(size=n)) / n
            if v.kind == CONTINUOUS:
                lo, hi = v.bounds
                columns.append(lo + u * (hi - lo))
            elif v.kind == INTEGER:
                lo, hi = v.bounds
                z = np.floor(lo + u * (hi - lo) + 0.5)
                columns.append(np.clip(z, lo, hi).astype(int))
            else:
                k = np.minimum((u * v.n_levels).astype(int), v.n_levels - 1)
                columns.append(k)
        return [self.point([col[i] for col in columns]) for i in range(n)]

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        out = {"name": self.name, "variables": []}
        for v in self.variables:
            entry: dict = {"name": v.name, "kind": v.kind}
            if v.kind == CATEGORICAL:
                entry["levels"] = list(v.levels)
            else:
                entry["bounds"] = list(v.bounds)
            if v.active_when is not None:
                entry["active_when"] = {"var": v.active_when.var, "in": list(v.active_when.levels)}
            out["variables"].append(entry)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DesignSpace":
        if not isinstance(data, dict) or "variables" not in data:
            raise SpaceError("space spec must be an object with a 'variables' list")
        variables = []
        for entry in data["variables"]:
            allowed = {"name", "kind", "bounds", "levels", "active_when"}
            unknown = set(entry) - allowed
            if unknown:
                raise SpaceError(f"unknown variable fields {sorted(unknown)}")
            rule = None
            aw = entry.get("active_when")
            if aw is not None:
                if "equals" in aw:
                    levels = (aw["equals"],)
                elif "in" in aw:
                    levels = tuple(aw["in"])
                else:
                    raise SpaceError("active_when needs 'equals' or 'in'")
                rule = ActivityRule(var=aw["var"], levels=levels)
            variables.append(
                VariableSpec(
                    name=entry["name"],
                    kind=entry.get("kind", ""),
                    bounds=tuple(entry["bounds"]) if "bounds" in entry else None,
                    levels=tuple(entry["levels"]) if "levels" in entry else None,
                    active_when=rule,
                )
            )
        return cls(variables, name=data.get("name", "space"))

    @classmethod
    def from_file(cls, path: str | Path) -> "DesignSpace":
        """Load a JSON space spec.

        Schema::

            {
              "name": "my-space",
              "variables": [
                {"name": "x", "kind": "continuous", "bounds": [0.0, 1.0]},
                {"name": "z", "kind": "integer", "bounds": [1, 5]},
                {"name": "c", "kind": "categorical", "levels": ["a", "b"]},
                {"name": "w", "kind": "continuous", "bounds": [0.0, 1.0],
                 "active_when": {"var": "c", "equals": "a"}}
              ]
            }

        `active_when` takes either `equals` (one level label) or `in` (a list
        of labels) and must reference an earlier categorical variable.
        Unknown kinds and unknown fields are rejected.
        """
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def relaxed_dimension(space: DesignSpace) -> int:
    return space.relaxed_dimension()


def encode(space: DesignSpace, p: MixedPoint) -> RelaxedVector:
    return space.encode(p)


def decode(space: DesignSpace, v) -> MixedPoint:
    return space.decode(v)


def impute(space: DesignSpace, p: MixedPoint) -> MixedPoint:
    return space.impute(p)


def lhs_sample(space: DesignSpace, n: int, seed: int) -> list[MixedPoint]:
    return space.lhs_sample(n, seed)
