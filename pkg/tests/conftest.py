import numpy as np
import pytest

from mixmobo.design_space import ActivityRule, DesignSpace, VariableSpec


def hv_oracle(front, ref):
    """Exact hypervolume by coordinate-compressed cell counting (2D/3D).

    Independent of the sweep/slicing implementations: build the grid of all
    point coordinates, mark a cell dominated iff some point covers its lower
    corner, sum cell volumes.
    """
    F = np.asarray(front, dtype=float)
    ref = np.asarray(ref, dtype=float)
    F = F[np.all(F < ref, axis=1)]
    if len(F) == 0:
        return 0.0
    axes = [np.unique(np.concatenate([F[:, j], [ref[j]]])) for j in range(F.shape[1])]
    total = 0.0
    if F.shape[1] == 2:
        for i in range(len(axes[0]) - 1):
            for j in range(len(axes[1]) - 1):
                corner = (axes[0][i], axes[1][j])
                if np.any(np.all(F <= corner, axis=1)):
                    total += (axes[0][i + 1] - axes[0][i]) * (axes[1][j + 1] - axes[1][j])
        return total
    if F.shape[1] == 3:
        for i in range(len(axes[0]) - 1):
            for j in range(len(axes[1]) - 1):
                for k in range(len(axes[2]) - 1):
                    corner = (axes[0][i], axes[1][j], axes[2][k])
                    if np.any(np.all(F <= corner, axis=1)):
                        total += (
                            (axes[0][i + 1] - axes[0][i])
                            * (axes[1][j + 1] - axes[1][j])
                            * (axes[2][k + 1] - axes[2][k])
                        )
        return total
    raise NotImplementedError("oracle supports 2 or 3 objectives")


def brute_force_nondominated(F):
    """O(n^2) dominance filter straight from the definition."""
    F = np.asarray(F, dtype=float)
    keep = []
    for i in range(len(F)):
        dominated = False
        for j in range(len(F)):
            if i == j:
                continue
            if np.all(F[j] <= F[i]) and np.any(F[j] < F[i]):
                dominated = True
                break
            if np.all(F[j] == F[i]) and j < i:
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return np.array(keep)


@pytest.fixture
def simple_mixed_space():
    return DesignSpace(
        [
            VariableSpec("x", "continuous", bounds=(0.0, 1.0)),
            VariableSpec("z", "integer", bounds=(1, 5)),
            VariableSpec("c", "categorical", levels=("A", "B", "C")),
        ],
        name="simple",
    )


@pytest.fixture
def hierarchical_space():
    return DesignSpace(
        [
            VariableSpec("mode", "categorical", levels=("shared", "custom")),
            VariableSpec(
                "sweep",
                "continuous",
                bounds=(30.0, 42.0),
                active_when=ActivityRule(var="mode", levels=("custom",)),
            ),
            VariableSpec(
                "count",
                "integer",
                bounds=(1, 5),
                active_when=ActivityRule(var="mode", levels=("custom",)),
            ),
        ],
        name="hierarchical",
    )
