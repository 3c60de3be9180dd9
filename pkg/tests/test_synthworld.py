import json

import numpy as np
import pytest

from orgminer import (
    OrgSpec,
    UnknownProfileError,
    WorldSpec,
    WorldSpecError,
    disclosure_census,
    generate_world,
)

from conftest import two_community_spec


def clique_spec(seed: int = 0) -> WorldSpec:
    return WorldSpec(
        total_population=10,
        orgs=(OrgSpec(name_keywords=("acme",), size=10,
                      intra_community_edge_prob=1.0),),
        rng_seed=seed,
    )


def test_pair_index_decoding_is_exact():
    from orgminer.synthworld import _pair_from_index

    for n in (2, 3, 7, 10, 41):
        expected = [(i, j) for i in range(n) for j in range(i + 1, n)]
        got = [_pair_from_index(k, n) for k in range(n * (n - 1) // 2)]
        assert got == expected


# -- spec validation ----------------------------------------------------------


def test_spec_rejects_oversized_orgs():
    with pytest.raises(WorldSpecError):
        WorldSpec(total_population=5, orgs=(OrgSpec(("a",), size=6),))


def test_spec_rejects_bad_probabilities():
    with pytest.raises(WorldSpecError):
        OrgSpec(("a",), size=3, intra_community_edge_prob=1.5)
    with pytest.raises(WorldSpecError):
        OrgSpec(("a",), size=3, intra_community_edge_prob=0.1,
                inter_community_edge_prob=0.2)
    with pytest.raises(WorldSpecError):
        OrgSpec(("a",), size=3, manager_degree_boost=0.5)


def test_spec_json_round_trip(tmp_path):
    spec = two_community_spec(4)
    path = tmp_path / "w.json"
    path.write_text(json.dumps(spec.to_dict()))
    assert WorldSpec.from_json_file(path) == spec


# -- generation ---------------------------------------------------------------


def test_intra_prob_one_gives_clique():
    world = generate_world(clique_spec())
    members = world.truth.members[0]
    assert len(members) == 10
    for i, u in enumerate(members):
        for v in members[i + 1:]:
            assert world.graph.has_edge(u, v)


def test_manager_count_rounds_by_largest_remainder():
    spec = WorldSpec(
        total_population=10,
        orgs=(OrgSpec(("acme",), size=10, intra_community_edge_prob=0.5,
                      manager_fraction=0.3),),
        rng_seed=1,
    )
    world = generate_world(spec)
    assert len(world.truth.managers) == 3


def test_determinism_bit_identical():
    a = generate_world(two_community_spec(9))
    b = generate_world(two_community_spec(9))
    assert a.graph == b.graph
    assert a.truth.managers == b.truth.managers
    assert a.truth.disclosure == b.truth.disclosure
    assert a.fingerprint == b.fingerprint


def test_different_seeds_differ():
    a = generate_world(two_community_spec(1))
    b = generate_world(two_community_spec(2))
    assert a.graph != b.graph


def test_members_carry_org_keyword_in_employers():
    world = generate_world(two_community_spec(3))
    keywords = world.truth.org_keywords[0]
    for v in world.truth.members[0]:
        employers = world.graph.profile(v).employers
        assert any(k in e for e in employers for k in keywords)


def test_within_community_degree_matches_intra_prob():
    # Monte-Carlo: mean within-community degree over 30 seeds should sit
    # within 3 sigma of p*(c-1) for a community of c nodes.
    p, size = 0.3, 40
    totals = []
    for seed in range(30):
        spec = WorldSpec(
            total_population=size,
            orgs=(OrgSpec(("acme",), size=size, intra_community_edge_prob=p),),
            rng_seed=seed,
        )
        world = generate_world(spec)
        degs = [world.graph.degree(v) for v in world.truth.members[0]]
        totals.extend(degs)
    mean = np.mean(totals)
    expected = p * (size - 1)
    sigma = np.sqrt(p * (1 - p) * (size - 1) / len(totals))
    assert abs(mean - expected) <= 3 * sigma


def test_homophily_membership_given_member_friends():
    # Being adjacent to >= 2 members must raise the membership rate above
    # the unconditional one, aggregated over seeds.
    hits = trials = members_total = nodes_total = 0
    for seed in range(10):
        world = generate_world(two_community_spec(seed))
        member_set = world.truth.all_members()
        for v in world.graph.nodes:
            if sum(1 for w in world.graph.neighbors(v) if w in member_set) >= 2:
                trials += 1
                hits += v in member_set
        members_total += len(member_set)
        nodes_total += world.graph.num_nodes
    assert trials > 0
    assert hits / trials > members_total / nodes_total


def test_manager_degree_boost_raises_mean_degree():
    mgr, non = [], []
    for seed in range(30):
        spec = WorldSpec(
            total_population=60,
            orgs=(OrgSpec(("acme",), size=60, intra_community_edge_prob=0.1,
                          manager_fraction=0.2, manager_degree_boost=3.0),),
            rng_seed=seed,
        )
        world = generate_world(spec)
        for v in world.truth.members[0]:
            (mgr if v in world.truth.managers else non).append(world.graph.degree(v))
    assert np.mean(mgr) > np.mean(non)


# -- fetch interface ----------------------------------------------------------


def test_fetch_profile_contract():
    world = generate_world(clique_spec())
    src = world.fresh_source()
    member = world.truth.members[0][0]
    profile, friends = src.fetch_profile(member)
    assert profile.node == member
    assert len(friends) == 9
    assert friends == sorted(world.graph.neighbors(member))
    # repeat fetch: identical payload, counter still ticks
    again = src.fetch_profile(member)
    assert again == (profile, friends)
    assert src.fetch_count == 2


def test_fetch_isolated_node_and_unknown_id():
    spec = WorldSpec(
        total_population=3,
        orgs=(OrgSpec(("acme",), size=1),),
        rng_seed=0,
    )
    world = generate_world(spec)
    src = world.fresh_source()
    isolated = [v for v in world.graph.nodes if world.graph.degree(v) == 0]
    assert isolated  # population 3, one singleton org, no background edges
    _, friends = src.fetch_profile(isolated[0])
    assert friends == []
    with pytest.raises(UnknownProfileError):
        src.fetch_profile(999)


def test_fetch_counter_counts_distinct_fetches():
    world = generate_world(clique_spec())
    src = world.fresh_source()
    for k, v in enumerate(world.graph.nodes, start=1):
        src.fetch_profile(v)
        assert src.fetch_count == k


# -- census ---------------------------------------------------------------


def test_census_full_disclosure():
    world = generate_world(clique_spec())
    report = disclosure_census(world)
    assert report.total.members == 10
    assert report.total.disclosing == 10
    assert report.total.disclosing_pct == pytest.approx(100.0)
    assert report.total.links == 45  # 10-clique


def test_census_partial_disclosure_within_3_sigma():
    n, rate = 200, 0.3
    counts = []
    for seed in range(30):
        spec = WorldSpec(
            total_population=n,
            orgs=(OrgSpec(("acme",), size=n, intra_community_edge_prob=0.05,
                          position_disclosure_rate=rate),),
            rng_seed=seed,
        )
        counts.append(disclosure_census(generate_world(spec)).total.disclosing)
    mean = np.mean(counts)
    sigma = np.sqrt(n * rate * (1 - rate) / len(counts))
    assert abs(mean - n * rate) <= 3 * sigma


def test_disclosure_flag_implies_position_text():
    world = generate_world(two_community_spec(5, disclosure=0.5))
    for v, discloses in world.truth.disclosure.items():
        profile = world.graph.profile(v)
        if discloses:
            assert profile.position
        else:
            assert profile.position is None
