import mpmath
import numpy as np
import pytest

from mindev.gaussian import (
    GridSpec, build_example1, build_example2, check_instance, discretize_gaussian_1d,
)
from mindev.risk import RiskModel
from mindev.strategies import mindev_strategy


def ncdf(x):
    return float(mpmath.ncdf(x))


def bayes_risks(inst):
    return RiskModel(inst.obj, inst.ld, inst.loss).model_bayes_risks()


def test_symmetric_masses():
    p = discretize_gaussian_1d(0.0, 2.0, GridSpec(-5, 5, 11))
    assert np.allclose(p, p[::-1], atol=1e-12, rtol=0)
    assert p.sum() == pytest.approx(1.0, abs=1e-15)


def test_median_split():
    assert np.allclose(discretize_gaussian_1d(0.0, 1.0, GridSpec(-1, 1, 2)), [0.5, 0.5])


def test_center_cell_against_mpmath():
    p = discretize_gaussian_1d(0.0, 1.0, GridSpec(-1, 1, 3))
    assert p[1] == pytest.approx(2 * ncdf(1 / 3) - 1, abs=1e-7)
    assert p[1] == pytest.approx(0.2611, abs=1e-4)


def test_masses_against_mpmath_shifted():
    grid = GridSpec(-3, 4, 9)
    p = discretize_gaussian_1d(0.7, 2.5, grid)
    b = np.concatenate([[-np.inf], grid.boundaries(), [np.inf]])
    sd = mpmath.sqrt(2.5)
    expected = [ncdf((b[j + 1] - 0.7) / sd) - ncdf((b[j] - 0.7) / sd) for j in range(9)]
    assert np.allclose(p, expected, atol=1e-7, rtol=0)


def test_invalid_grid_and_variance():
    with pytest.raises(ValueError):
        GridSpec(1, 0, 5)
    with pytest.raises(ValueError):
        discretize_gaussian_1d(0.0, 0.0, GridSpec(-1, 1, 3))


def test_example2_rows():
    inst = build_example2(1)
    assert check_instance(inst) == []
    r = bayes_risks(inst)
    mid = inst.obj.params.index(0.5)
    assert r[mid] == pytest.approx(ncdf(-1), abs=0.01)
    assert r[0] == 0.0
    # decide state 1 left of zero, state 2 right of it
    d = RiskModel(inst.obj, None, inst.loss).bayes_decisions(np.eye(inst.obj.n_models)[mid])[:, 0]
    centers = GridSpec(-8, 8, 65).centers()
    assert np.all(d[centers < 0] == 0) and np.all(d[centers > 0] == 1)


def test_example2_without_learning_matches_plain_solve():
    a = build_example2(0, m=11)
    _, rep = mindev_strategy(a.obj, a.ld, a.loss)
    _, rep_plain = mindev_strategy(a.obj, None, a.loss)
    assert rep.phi == pytest.approx(rep_plain.phi, abs=1e-12)


def test_example2_cap():
    from mindev.model import SizeError
    with pytest.raises(SizeError):
        build_example2(10)
    assert build_example2(10, mode="mc").ld is None


def test_example1_rows():
    inst = build_example1(4)
    assert check_instance(inst) == []
    r = bayes_risks(inst)
    thetas = np.array(inst.obj.params)
    zero = int(np.argmin(np.abs(thetas)))
    assert r[zero] == pytest.approx(ncdf(-1), abs=0.01)
    # risk shrinks as |theta| grows on either side of zero
    assert np.all(np.diff(r[zero:]) <= 1e-12) and np.all(np.diff(r[:zero + 1]) >= -1e-12)


def test_sufficient_statistic_variance():
    learn = GridSpec(-10, 10, 33)
    inst = build_example1(4, m=5, learn=learn)
    for t, theta in enumerate(inst.obj.params):
        assert np.allclose(inst.ld.p_z[t], discretize_gaussian_1d(theta, 4.0, learn))


@pytest.mark.parametrize("n", [1, 2])
def test_sufficient_statistic_equivalence(n):
    kw = dict(m=11, x1=GridSpec(-6, 8, 15), x2=GridSpec(-8, 8, 17), learn=GridSpec(-10, 10, 7))
    a = build_example1(n, **kw)
    b = build_example1(n, use_sufficient_statistic=False, **kw)
    assert check_instance(b) == []
    pa = mindev_strategy(a.obj, a.ld, a.loss)[1].phi
    pb = mindev_strategy(b.obj, b.ld, b.loss)[1].phi
    assert abs(pa - pb) <= 0.02


def test_refinement_stability():
    e2 = bayes_risks(build_example2(0))
    e2_fine = bayes_risks(build_example2(0, signal=GridSpec(-8, 8, 130)))
    assert np.max(np.abs(e2 - e2_fine)) <= 0.005
    e1 = bayes_risks(build_example1(0))
    e1_fine = bayes_risks(build_example1(0, x1=GridSpec(-6, 8, 114), x2=GridSpec(-8, 8, 130)))
    assert np.max(np.abs(e1 - e1_fine)) <= 0.005
