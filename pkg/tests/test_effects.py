from __future__ import annotations

import numpy as np
import pytest

from rhetorica.effects import (EffectEstimate, SingularDesignError, estimate_effects, effects_rows,
                               plain_least_squares, regression_columns, type_topics)
from rhetorica.prep import bspline_basis
from rhetorica.stm import StmModel
from rhetorica.stm.model import softmax_pad

from sims import EFFECT_COLUMNS, effect_trial


def _model(eta, P, Sigma_scale=1e-12):
    K = eta.shape[1] + 1
    return StmModel(K, np.zeros(2), np.zeros((K, 2)), np.zeros((1, 2)), np.zeros((1, K, 2)),
                    np.zeros((P, K - 1)), np.ones(K - 1), np.eye(K - 1) * Sigma_scale, eta)


def _design(D, rng):
    g = rng.integers(0, 2, D)
    return np.column_stack([np.ones(D), g]).astype(float), ["(Intercept)", "negTRUE"]


def test_negligible_uncertainty_reduces_to_least_squares():
    rng = np.random.default_rng(0)
    X, cols = _design(300, rng)
    eta = rng.normal(size=(300, 3))
    # huge documents make the per-document posterior collapse onto eta_hat
    est = estimate_effects(_model(eta, 2), X, cols, np.full(300, 1e12), draws=3)
    np.testing.assert_allclose(est.coef, plain_least_squares(softmax_pad(eta), X, cols), atol=1e-6)


def test_contrast_algebra():
    est = EffectEstimate(["a", "b"], np.array([[1.0, 2.0], [0.5, -1.0]]),
                         np.array([np.diag([1.0, 4.0]), np.diag([1.0, 1.0])]), 1)
    c = est.contrast("a", "b")
    np.testing.assert_allclose(c.estimate, [0.5, 3.0])
    np.testing.assert_allclose(c.stderr, [np.sqrt(5.0), np.sqrt(2.0)])


def test_contrast_antisymmetry_exact():
    rng = np.random.default_rng(2)
    V = rng.normal(size=(4, 3, 3))
    est = EffectEstimate(["a", "b", "c"], rng.normal(size=(3, 4)), V @ V.transpose(0, 2, 1), 1)
    ab, ba = est.contrast("a", "b"), est.contrast("b", "a")
    np.testing.assert_array_equal(ab.estimate, -ba.estimate)
    np.testing.assert_array_equal(ab.pvalue, ba.pvalue)


def test_collinear_design_names_columns():
    X = np.column_stack([np.ones(20), np.arange(20) % 2, np.arange(20) % 2])
    with pytest.raises(SingularDesignError, match="negTRUE"):
        estimate_effects(_model(np.zeros((20, 2)), 3), X, ["(Intercept)", "fctBrexiteer", "negTRUE"],
                         np.full(20, 10.0))


def test_spline_intercept_column_dropped():
    t = np.linspace(0, 1, 50)
    X = np.column_stack([np.ones(50), bspline_basis(t, 5)])
    cols = ["(Intercept)"] + [f"s(t){i + 1}" for i in range(5)]
    Xr, kept = regression_columns(X, cols)
    assert kept == ["(Intercept)"] + [f"s(t){i + 1}" for i in range(1, 5)]
    assert np.linalg.matrix_rank(Xr) == Xr.shape[1]


def test_draws_validation_and_determinism():
    rng = np.random.default_rng(1)
    X, cols = _design(100, rng)
    m = _model(rng.normal(size=(100, 2)), 2, 0.5)
    with pytest.raises(ValueError):
        estimate_effects(m, X, cols, np.full(100, 20.0), draws=0)
    a = estimate_effects(m, X, cols, np.full(100, 20.0), draws=5, seed=3)
    b = estimate_effects(m, X, cols, np.full(100, 20.0), draws=5, seed=3)
    np.testing.assert_array_equal(a.coef, b.coef)
    np.testing.assert_array_equal(a.vcov, b.vcov)


def test_labels_follow_sign_and_significance():
    est = EffectEstimate(["rel.typeDestruction", "rel.typeCreation", "fctBrexiteer", "fctRemainer", "negTRUE"],
                         np.array([[0.2, -0.2, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.1],
                                   [0.0, 0.0, 0.0], [0.3, 0.0, 0.0]]),
                         np.tile(np.eye(5) * 1e-4, (3, 1, 1)), 1)
    est.contrasts = {
        "Destruction-Creation": est.contrast("rel.typeDestruction", "rel.typeCreation"),
        "Brexiteer-Remainer": est.contrast("fctBrexiteer", "fctRemainer"),
        "negTRUE-FALSE": est.contrast("negTRUE"),
    }
    lab = type_topics(est, 0.01)
    assert lab.verb_type == ["Destruction", "Creation", None]
    assert lab.faction_type == [None, None, "Brexiteer"]
    assert lab.negation_flag == [True, None, None]
    header, rows = effects_rows(est, lab)
    assert len(header) == len(rows[0]) and rows[2][-2] == "Brexiteer"
    with pytest.raises(ValueError):
        type_topics(est, 1.5)


def test_single_simulation_trial_covers_planted_effect():
    covered, flagged = effect_trial(0)
    assert covered and not flagged
    assert len(EFFECT_COLUMNS) == 16
