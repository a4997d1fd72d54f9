from fractions import Fraction as F

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from trackstop import TrackingStopper, build_example
from trackstop.io import model_to_dict


def test_params_and_clone():
    est = TrackingStopper(alpha="1/8", random_state=0)
    assert est.get_params() == {"alpha": "1/8", "method": "auto", "mode": "auto", "random_state": 0}
    assert clone(est).get_params() == est.get_params()


def test_fit_pure_vertex(ex6):
    est = TrackingStopper(alpha="1/8").fit(*ex6)
    assert est.delay_ == F(1, 8)
    assert est.lambdas_ == [3, F(1, 3)]
    assert len(est.mixture_) == 1
    # the pruned tree stops at 1 after observing "1"
    assert est.predict([["1", "0"], ["0", "1"], ["0", "0"]]).tolist() == [1, 2, 2]
    assert est.predict(np.array([[1, 1], [0, 0]])).tolist() == [1, 2]


def test_fit_from_dict_and_mixture(ex6):
    est = TrackingStopper(alpha="5/16", random_state=1).fit(model_to_dict(*ex6))
    assert est.delay_ == F(1, 16)
    picks = est.predict(np.tile([0, 1], (4000, 1)))
    # equal mixture of the split tree (T = 2 on "01") and the depth-one tree (T = 1)
    assert set(picks.tolist()) == {1, 2}
    assert abs(picks.mean() - 1.5) < 0.05


def test_composition_method():
    model, rule = build_example("ex12-geometric", kappa=5)
    a = TrackingStopper(alpha="1/20", method="composition").fit(model, rule)
    b = TrackingStopper(alpha="1/20", method="string").fit(model, rule)
    assert a.delay_ == b.delay_ and a.vertices_ == b.vertices_


def test_validation(ex6):
    with pytest.raises(NotFittedError):
        TrackingStopper().predict([[0, 0]])
    with pytest.raises(ValueError, match="alpha"):
        TrackingStopper(alpha=2).fit(*ex6)
    with pytest.raises(ValueError, match="method"):
        TrackingStopper(method="magic").fit(*ex6)
    with pytest.raises(ValueError, match="rule"):
        TrackingStopper().fit(ex6[0])
    est = TrackingStopper().fit(*ex6)
    with pytest.raises(ValueError, match="columns"):
        est.predict([[0, 0, 0]])
    with pytest.raises(ValueError, match="index"):
        est.predict([[0, 5]])
