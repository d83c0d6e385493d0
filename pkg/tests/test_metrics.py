import math

import numpy as np
import pytest

from colocshare.errors import InvalidParameterError, SingularGeometryError, UndefinedMetricError
from colocshare.geometry import Region
from colocshare.metrics import (RadioParams, channel_capacity, coverage_fraction, link_capacities,
                                summarize, user_strength, user_strengths)
from colocshare.network import ScenarioConfig, Towers, Users, associate, build_network

REGION = Region(100.0, 100.0, "truncate")


def small_network():
    # one shared site (C=2) at the centre and one operator-1 site in a corner
    towers = Towers(np.array([[50.0, 50.0], [5.0, 5.0]]), np.array([[True, True], [True, False]]))
    users = Users(np.array([[50.0, 60.0], [50.0, 54.0], [95.0, 95.0]]), np.array([1, 2, 1]))
    return associate(towers, users, 12.0, REGION)


def test_strength_by_hand():
    net = small_network()
    # both connected users see w*C/D = 1e7 * 2 / 2 over distances 10 and 4
    assert user_strength(0, net, 1e7) == pytest.approx(math.log(1e6))
    assert user_strength(1, net, 1e7) == pytest.approx(math.log(1e7 / 4))
    assert user_strength(2, net, 1e7) == 0.0
    np.testing.assert_allclose(user_strengths(net, 1e7),
                               [math.log(1e6), math.log(2.5e6), 0.0])
    assert user_strength(0, net, 1e7, alpha=2.0) == pytest.approx(math.log(1e5))


def test_capacity_by_hand():
    net = small_network()
    radio = RadioParams(100.0)  # K R^-2 = 1 at R = 10
    assert channel_capacity(0, net, 1e7, radio) == pytest.approx(1e7 * math.log(2))
    assert RadioParams(20.0, "db").k_linear == pytest.approx(100.0)
    np.testing.assert_allclose(link_capacities(net, 1e7, radio),
                               [1e7 * math.log(2), 1e7 * math.log1p(100 / 16)])


def test_radio_params_validation():
    with pytest.raises(InvalidParameterError):
        RadioParams(-1.0)
    with pytest.raises(InvalidParameterError):
        RadioParams(1.0, "watts")
    with pytest.raises(InvalidParameterError):
        RadioParams(1.0, alpha=0.0)


def test_capacity_is_monotone_in_distance_and_degree():
    radio = RadioParams(111.0, "db", 2.0)
    r = np.linspace(1, 500, 200)
    cap = (1e7 / 3) * np.log1p(radio.k_linear * r ** -2.0)
    assert np.all(np.diff(cap) < 0)


def test_summary_counts_disconnected_users():
    net = small_network()
    s = summarize(net, 1e7, RadioParams(100.0))
    assert s.coverage_fraction == pytest.approx(2 / 3)
    assert s.mean_strength_per_user == pytest.approx((math.log(1e6) + math.log(2.5e6)) / 3)
    assert s.mean_user_degree == pytest.approx(2 / 3)
    assert s.mean_tower_degree == pytest.approx(1.0)
    assert s.mean_strength_by_type[2] == pytest.approx(math.log(2.5e6))
    row = s.to_row()
    assert row["strength_type_1"] == pytest.approx(math.log(1e6) / 2)
    assert math.isnan(summarize(net, 1e7).mean_capacity_per_user)


def test_zero_distance_is_singular():
    towers = Towers(np.array([[50.0, 50.0]]), np.array([[True]]))
    users = Users(np.array([[50.0, 50.0]]), np.array([1]))
    net = associate(towers, users, 5.0, REGION)
    with pytest.raises(SingularGeometryError):
        user_strengths(net, 1e7)
    with pytest.raises(SingularGeometryError):
        user_strength(0, net, 1e7)
    with pytest.raises(SingularGeometryError):
        channel_capacity(0, net, 1e7, RadioParams(1.0))


def test_no_users_is_undefined():
    towers = Towers(np.array([[50.0, 50.0]]), np.array([[True]]))
    net = associate(towers, Users(np.empty((0, 2)), np.empty(0, dtype=np.int64)), 5.0, REGION)
    with pytest.raises(UndefinedMetricError):
        coverage_fraction(net)
    with pytest.raises(UndefinedMetricError):
        summarize(net, 1e7)


def test_summary_is_invariant_to_user_order():
    cfg = ScenarioConfig(n_operators=2, colocation_p=0.5, lambda_u=2e-4, seed=4)
    net = build_network(cfg)
    perm = np.random.default_rng(0).permutation(net.n_users)
    users = Users(net.users.xy[perm], net.users.operator[perm])
    other = associate(net.towers, users, net.radius, net.region)
    a, b = summarize(net, 1e7), summarize(other, 1e7)
    assert a.mean_strength_per_user == pytest.approx(b.mean_strength_per_user, rel=1e-12)
    assert a.coverage_fraction == b.coverage_fraction
