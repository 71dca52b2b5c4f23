import numpy as np
import pytest

from mindev.model import FiniteObject, LearningData, LossMatrix, Strategy

T2_SPEC = """{"signals": ["a"], "states": ["1", "2"],
 "models": [{"label": "t1"}, {"label": "t2"}],
 "p_xy": {"t1": [[0.8, 0.2]], "t2": [[0.2, 0.8]]}}"""

D1_SPEC = """{"signals": ["a", "b"], "states": ["1", "2"], "models": [{"label": "t"}],
 "p_xy": {"t": [[0.5, 0.0], [0.0, 0.5]]}}"""


def make_obj(p_xy, signals=None, states=None, models=None):
    p = np.asarray(p_xy, dtype=float)
    m, nx, ny = p.shape
    return FiniteObject(
        signals or tuple(f"x{i}" for i in range(nx)),
        states or tuple(str(i + 1) for i in range(ny)),
        models or tuple(f"t{i + 1}" for i in range(m)),
        p,
    )


@pytest.fixture
def t1():
    return make_obj([[[0.3, 0.7]]]), LearningData.trivial(1), LossMatrix.zero_one(2)


@pytest.fixture
def t2():
    return make_obj([[[0.8, 0.2]], [[0.2, 0.8]]]), LearningData.trivial(2), LossMatrix.zero_one(2)


@pytest.fixture
def d1():
    return make_obj([[[0.5, 0.0], [0.0, 0.5]]]), LearningData.trivial(1), LossMatrix.zero_one(2)


def split(s):
    """Strategy on a one-signal, one-value instance deciding state 1 with probability s."""
    return Strategy(np.array([[[s, 1.0 - s]]]))


def random_instance(rng, m=None, nx=None, ny=None, nz=None, loss="01"):
    m = m or int(rng.integers(2, 4))
    nx = nx or int(rng.integers(1, 4))
    ny = ny or int(rng.integers(2, 4))
    nz = nz or int(rng.integers(1, 4))
    p = rng.dirichlet(np.ones(nx * ny), size=m).reshape(m, nx, ny)
    ld = LearningData(rng.dirichlet(np.ones(nz), size=m))
    if loss == "01":
        w = LossMatrix.zero_one(ny)
    else:
        w = LossMatrix(rng.uniform(0, 2, size=(ny, ny)))
    return make_obj(p), ld, w


def random_strategy(rng, nx, nz, ny):
    return Strategy(rng.dirichlet(np.ones(ny), size=(nx, nz)))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
