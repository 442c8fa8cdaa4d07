"""Transition-probability oracle built on the forward equations, plus the
closed-form record likelihoods for discrete and mixed observation."""

import math

import numpy as np
import pytest

from coarselik.baselines import Weibull
from coarselik.catalog import illness_death
from coarselik.errors import InconsistentObservationError, InvalidInputError
from coarselik.likelihood import loglik_continuous
from coarselik.markov import MarkovSpec
from coarselik.models import JumpHistory
from coarselik.oracle import (
    illness_death_mixed_loglik,
    loglik_continuous_markov,
    loglik_discrete_markov,
    transition_matrix,
)
from coarselik.quadrature import integrate_1d


def weibull_spec(a01=(0.3, 1.4), a02=(0.2, 0.8), a12=(0.5, 1.2)):
    return MarkovSpec(
        p=2,
        transitions={(0, 1): Weibull(*a01), (0, 2): Weibull(*a02),
                     (1, 2): Weibull(*a12)},
        compact=True,
    )


def test_constant_closed_forms():
    spec, _ = illness_death(0.1, 0.2, 0.4)
    P = transition_matrix(spec, 0.0, 1.0)
    p00 = math.exp(-0.3)
    p01 = math.exp(-0.4) * (math.exp(0.1) - 1.0)
    assert P[0, 0] == pytest.approx(p00, rel=1e-10)
    assert P[0, 0] == pytest.approx(0.740818, abs=5e-7)
    assert P[0, 1] == pytest.approx(p01, rel=1e-10)
    assert P[0, 1] == pytest.approx(0.0704986, abs=5e-7)
    assert P[0, 2] == pytest.approx(1.0 - p00 - p01, rel=1e-10)
    assert P[1, 1] == pytest.approx(math.exp(-0.4), rel=1e-10)
    assert P[1, 0] == 0.0
    assert P[2, 2] == 1.0


def test_identity_at_equal_times_and_validation():
    spec, _ = illness_death(0.1, 0.2, 0.4)
    P = transition_matrix(spec, 0.7, 0.7)
    assert np.allclose(P.matrix, np.eye(3))
    with pytest.raises(InvalidInputError):
        transition_matrix(spec, 1.0, 0.5)
    with pytest.raises(InvalidInputError):
        transition_matrix(spec, 0.0, np.inf)


def test_rows_stay_on_simplex():
    for spec in (illness_death(0.6, 1.1, 2.3)[0], weibull_spec()):
        P = transition_matrix(spec, 0.2, 3.0).matrix
        assert np.all(P >= 0.0) and np.all(P <= 1.0)
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-9)


def test_chapman_kolmogorov():
    for spec in (illness_death(0.3, 0.2, 0.5)[0], weibull_spec()):
        P02 = transition_matrix(spec, 0.0, 2.0).matrix
        P01 = transition_matrix(spec, 0.0, 0.9).matrix
        P12 = transition_matrix(spec, 0.9, 2.0).matrix
        assert np.allclose(P02, P01 @ P12, atol=1e-9)


def test_ode_route_against_quadrature():
    # time-varying rates force the differential-equation path; p01 also has
    # an independent one-dimensional integral representation
    spec = weibull_spec()
    a01, a02, a12 = (spec.transitions[k] for k in ((0, 1), (0, 2), (1, 2)))
    s, t = 0.3, 1.7
    P = transition_matrix(spec, s, t)

    p00 = math.exp(-(a01.cum(s, t) + a02.cum(s, t)))
    assert P[0, 0] == pytest.approx(p00, rel=1e-8)

    def integrand(u):
        stay0 = np.exp(-(a01.cum0(u) - a01.cum0(s)) - (a02.cum0(u) - a02.cum0(s)))
        stay1 = np.exp(-(a12.cum0(t) - a12.cum0(u)))
        return stay0 * a01.rate(u) * stay1

    ref = integrate_1d(integrand, s, t, rel_tol=1e-11).value
    assert P[0, 1] == pytest.approx(ref, rel=1e-8)


def test_decreasing_hazard_start_segment():
    # shape < 1 means an unbounded rate at zero; the stay probability still
    # has the exact closed form exp(-integrated hazard)
    spec = weibull_spec(a01=(0.3, 0.6), a02=(0.2, 0.5), a12=(0.4, 0.7))
    P = transition_matrix(spec, 0.0, 1.3)
    out = spec.transitions[(0, 1)].cum(0.0, 1.3) + spec.transitions[(0, 2)].cum(0.0, 1.3)
    assert P[0, 0] == pytest.approx(math.exp(-out), rel=1e-7)
    assert P[1, 1] == pytest.approx(math.exp(-spec.transitions[(1, 2)].cum(0.0, 1.3)), rel=1e-7)


def test_continuous_path_matches_component_model():
    spec, model = illness_death(0.1, 0.2, 0.4)
    C = 2.0
    cases = [
        ([(0.5, 1), (1.2, 2)], ((0.5, True), (1.2, True))),
        ([(0.5, 1)], ((0.5, True), (C, False))),
        ([(0.7, 2)], ((C, False), (0.7, True))),
        ([], ((C, False), (C, False))),
    ]
    for transitions, times in cases:
        a = loglik_continuous_markov(spec, 0, transitions, C)
        b = loglik_continuous(model, JumpHistory(times, C))
        assert a == pytest.approx(b, rel=1e-12)


def test_continuous_path_rejects_undeclared_moves():
    spec, _ = illness_death(0.1, 0.2, 0.4)
    with pytest.raises(InconsistentObservationError):
        loglik_continuous_markov(spec, 0, [(0.5, 1), (1.0, 0)], 2.0)
    with pytest.raises(InvalidInputError):
        loglik_continuous_markov(spec, 0, [(1.5, 1), (1.0, 2)], 2.0)


def test_discrete_panel_worked_value():
    spec, _ = illness_death(0.1, 0.2, 0.4)
    assert loglik_discrete_markov(spec, [0.0, 1.0], [0, 0]) == pytest.approx(-0.3, rel=1e-10)
    two_step = loglik_discrete_markov(spec, [0.0, 1.0, 2.0], [0, 0, 1])
    P = transition_matrix(spec, 1.0, 2.0)
    assert two_step == pytest.approx(-0.3 + math.log(P[0, 1]), rel=1e-10)
    with pytest.raises(InvalidInputError):
        loglik_discrete_markov(spec, [0.0, 1.0], [0])


def test_mixed_record_first_seen_ill():
    # seen ill at the second visit, alive at the horizon: must reproduce the
    # interval-plus-survivor worked value
    spec, _ = illness_death(0.1, 0.2, 0.4)
    ll = illness_death_mixed_loglik(spec, [0.0, 1.0], 1, 2.0, False)
    assert math.exp(ll) == pytest.approx(math.exp(-0.8) * (math.exp(0.1) - 1.0), rel=1e-9)


def test_mixed_record_never_ill_death_observed():
    a01, a02, a12 = 0.1, 0.2, 0.4
    spec, _ = illness_death(a01, a02, a12)
    ll = illness_death_mixed_loglik(spec, [0.0, 0.5], None, 1.5, True)
    p00_tail = math.exp(-(a01 + a02))
    p01_tail = math.exp(-0.3) - math.exp(-0.4)
    expected = math.exp(-0.15) * (p00_tail * a02 + p01_tail * a12)
    assert math.exp(ll) == pytest.approx(expected, rel=1e-9)


def test_mixed_record_validation():
    spec, _ = illness_death(0.1, 0.2, 0.4)
    with pytest.raises(InvalidInputError):
        illness_death_mixed_loglik(spec, [0.0, 1.0], 1, 0.5, True)
    with pytest.raises(InvalidInputError):
        illness_death_mixed_loglik(spec, [0.0, 1.0], 0, 2.0, True)
    with pytest.raises(InvalidInputError):
        illness_death_mixed_loglik(spec, [0.0, 1.0], 2, 2.0, True)
    full = MarkovSpec(p=2, transitions={(0, 1): Weibull(0.3, 1.4), (0, 2): Weibull(0.2, 0.8),
                                        (1, 3): Weibull(0.5, 1.2)}, compact=False)
    with pytest.raises(InvalidInputError):
        illness_death_mixed_loglik(full, [0.0, 1.0], None, 2.0, False)
