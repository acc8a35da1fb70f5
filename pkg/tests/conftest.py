import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- suite-wide Lloyd postconditions ----------------------------------------
# Every Lloyd run made anywhere in the suite is re-checked here, independently
# of the assertions inside the implementation.

LLOYD_RUNS = {"runs": 0, "violations": []}
ACCEPTANCE_LINES = []


def _checked_lloyd(original):
    def wrapper(points, init_centroids, *args, **kwargs):
        model = original(points, init_centroids, *args, **kwargs)
        x = np.asarray(points, dtype=np.float64).reshape(len(model.labels), -1)
        w = kwargs.get("weights")
        w = np.ones(len(x)) if w is None else np.asarray(w, dtype=np.float64)
        LLOYD_RUNS["runs"] += 1
        h = np.asarray(model.cost_history)
        if (np.diff(h) > 1e-12 * np.maximum(1.0, h[:-1])).any():
            LLOYD_RUNS["violations"].append("cost increased")
        if model.converged:
            for j in range(model.k):
                mask = model.labels == j
                if not mask.any():
                    LLOYD_RUNS["violations"].append("empty cluster")
                    continue
                mean = (x[mask] * w[mask, None]).sum(axis=0) / w[mask].sum()
                if np.abs(mean - model.centroids[j]).max() > 1e-12:
                    LLOYD_RUNS["violations"].append("centroid differs from mean")
        return model
    return wrapper


@pytest.fixture(autouse=True, scope="session")
def _watch_lloyd():
    from qa_archetypes import cluster

    original = cluster.lloyd
    cluster.lloyd = _checked_lloyd(original)
    yield LLOYD_RUNS
    cluster.lloyd = original


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    if LLOYD_RUNS["runs"]:
        terminalreporter.write_line(f"Lloyd runs checked: {LLOYD_RUNS['runs']}, "
                                    f"violations: {len(LLOYD_RUNS['violations'])}")
