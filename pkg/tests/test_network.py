import json
import math

import numpy as np
import pytest
from scipy import stats

from colocshare import analytics
from colocshare.errors import InvalidParameterError
from colocshare.geometry import Region
from colocshare.network import (ScenarioConfig, associate, build_network, compose_densities,
                                parse_override, place_towers, place_users, subnetwork)


def test_config_defaults_and_validation():
    cfg = ScenarioConfig()
    assert cfg.betas == () and cfg.all_betas.tolist() == [1.0]
    assert ScenarioConfig(n_operators=3).betas == (1.0, 1.0)
    for bad in [dict(n_operators=0), dict(colocation_p=1.5), dict(n_operators=2, betas=(0.5, 0.5)),
                dict(n_operators=2, betas=(1.2,)), dict(lambda_u=-1.0), dict(radius_r="big"),
                dict(alpha=0.0)]:
        with pytest.raises(InvalidParameterError):
            ScenarioConfig(**bad)


def test_config_warns_when_towers_outnumber_users():
    with pytest.warns(UserWarning):
        ScenarioConfig(lambda_bs=1e-2, lambda_u=1e-3)


def test_config_json_round_trip():
    cfg = ScenarioConfig(n_operators=3, colocation_p=0.4, betas=(0.5, 0.25), radius_r=120.0,
                         region=Region(500.0, 300.0, "truncate"), seed=9)
    assert ScenarioConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(InvalidParameterError):
        ScenarioConfig.from_dict({**cfg.to_dict(), "colour": "red"})


def test_parse_override():
    cfg = parse_override(ScenarioConfig(), "n_operators", "3")
    cfg = parse_override(cfg, "betas", "[0.5, 0.5]")
    cfg = parse_override(cfg, "region.width", "1000")
    assert cfg.n_operators == 3 and cfg.betas == (0.5, 0.5) and cfg.region.width == 1000
    assert parse_override(cfg, "radius_r", "optimal").radius_r == "optimal"
    with pytest.raises(InvalidParameterError):
        parse_override(cfg, "nope", "1")
    with pytest.raises(InvalidParameterError):
        parse_override(cfg, "region.depth", "1")


def test_compose_densities():
    cfg = ScenarioConfig(n_operators=3, colocation_p=0.25, betas=(0.5, 0.3))
    lt, lu = compose_densities(cfg)
    assert lt == pytest.approx((1 + 0.75 * 0.8) * 1e-6)
    assert lu == pytest.approx(1.8e-3)


def test_tower_and_user_counts_follow_densities():
    cfg = ScenarioConfig(n_operators=3, colocation_p=0.4, betas=(0.6, 0.9), lambda_bs=2e-6,
                         lambda_u=1e-5, region=Region(20000.0, 20000.0))
    rng = np.random.default_rng(1)
    lt, lu = compose_densities(cfg)
    towers, users = [], []
    for _ in range(30):
        towers.append(len(place_towers(cfg, rng)))
        users.append(len(place_users(cfg, rng)))
    for got, lam in ((towers, lt), (users, lu)):
        mean = lam * cfg.region.area
        assert abs(np.mean(got) - mean) < 4 * math.sqrt(mean / len(got))


def test_user_types_follow_betas():
    cfg = ScenarioConfig(n_operators=3, betas=(0.5, 0.25), lambda_u=1e-4,
                         region=Region(3000.0, 3000.0))
    users = place_users(cfg, np.random.default_rng(2))
    counts = np.bincount(users.operator, minlength=4)[1:]
    expected = np.array([1.0, 0.5, 0.25]) / 1.75 * counts.sum()
    assert stats.chisquare(counts, expected).pvalue > 0.001


def test_colocation_count_law():
    cfg = ScenarioConfig(n_operators=4, colocation_p=0.6, betas=(0.9, 0.5, 0.7), lambda_bs=1e-6,
                         region=Region(60000.0, 60000.0), seed=4)
    towers = place_towers(cfg, np.random.default_rng(cfg.seed))
    anchors = towers.owners[:, 0]
    c = towers.count[anchors]
    # oracle: Monte Carlo of the Bernoulli owner draws, independent of the DP pmf
    sim = 1 + (np.random.default_rng(0).random((200_000, 3)) < 0.6 * np.array([0.9, 0.5, 0.7])).sum(1)
    expected = np.bincount(sim, minlength=5)[1:] / sim.size
    observed = np.bincount(c, minlength=5)[1:]
    assert stats.chisquare(observed, expected * observed.sum()).pvalue > 0.001
    np.testing.assert_allclose(expected, analytics.poisson_binomial_pmf([0.54, 0.3, 0.42]),
                               atol=5e-3)
    assert np.all(towers.count[~anchors] == 1)


def test_tower_iteration_view():
    towers = place_towers(ScenarioConfig(n_operators=2, colocation_p=1.0, seed=3),
                          np.random.default_rng(3))
    t = towers[0]
    assert 1 in t.owner_types and t.resource_count == len(t.owner_types)
    assert sum(1 for _ in towers) == len(towers)


@pytest.mark.parametrize("mode", ["torus", "truncate"])
def test_association_is_the_disk_model(mode):
    cfg = ScenarioConfig(n_operators=2, colocation_p=0.5, lambda_u=2e-4, radius_r=300.0,
                         region=Region(2000.0, 1500.0, mode), seed=6)
    net = build_network(cfg)
    d = np.abs(net.users.xy[:, None, :] - net.towers.xy[None, :, :])
    if mode == "torus":
        d = np.minimum(d, np.array([2000.0, 1500.0]) - d)
    dist = np.hypot(d[..., 0], d[..., 1])
    ui, tj = np.nonzero(dist <= 300.0)
    np.testing.assert_array_equal(net.edge_user, ui)
    np.testing.assert_array_equal(net.edge_tower, tj)
    assert net.tower_degree.sum() == net.user_degree.sum() == ui.size
    assert net.edges_of(int(ui[0]))[0][0] == tj[0]


def test_no_sharing_equals_per_operator_subnetworks():
    cfg = ScenarioConfig(n_operators=3, colocation_p=0.7, betas=(0.8, 0.6), lambda_u=1e-4,
                         radius_r=400.0, seed=8)
    rng = np.random.default_rng(cfg.seed)
    towers, users = place_towers(cfg, rng), place_users(cfg, rng)
    merged = associate(towers, users, 400.0, cfg.region, sharing=False)
    assert np.all(merged.tower_count == 1)
    for k in (1, 2, 3):
        t_k, u_k = subnetwork(towers, users, k)
        sub = associate(t_k, u_k, 400.0, cfg.region)
        mine = np.flatnonzero(users.operator == k)
        np.testing.assert_array_equal(merged.user_degree[mine], sub.user_degree)
        e = np.isin(merged.edge_user, mine)
        np.testing.assert_allclose(np.sort(merged.edge_dist[e]), np.sort(sub.edge_dist))


def test_build_network_is_deterministic():
    cfg = ScenarioConfig(n_operators=2, colocation_p=0.3, seed=12)
    a, b = build_network(cfg), build_network(cfg)
    np.testing.assert_array_equal(a.edge_dist, b.edge_dist)
    assert a.radius == pytest.approx(cfg.resolved_radius())
    json.dumps(cfg.to_dict())
