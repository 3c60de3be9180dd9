import pytest

from orgminer import (
    CrawlConfig,
    CrawlError,
    OrgSpec,
    Profile,
    StateError,
    WorldSpec,
    bfs_crawl,
    crawl,
    generate_world,
    keyword_match,
    resume,
    save_state,
)
from orgminer.crawler import Frontier
from orgminer.synthworld import InMemorySource
from orgminer.graph import SocialGraph

from conftest import crawl_world_spec


def make_source(nodes, edges, employers):
    profiles = {
        v: Profile(node=v, employers=tuple(employers.get(v, ())))
        for v in nodes
    }
    g = SocialGraph(nodes, edges, profiles)
    return InMemorySource(g, fingerprint="test-src")


# -- keyword matching ---------------------------------------------------------


def test_keyword_match_case_and_whitespace_folding():
    p = Profile(node=0, employers=("BGU  ISE",))
    assert keyword_match(p, ["bgu ise"])


def test_keyword_match_empty_employers():
    assert not keyword_match(Profile(node=0), ["anything"])


def test_keyword_match_substring():
    p = Profile(node=0, employers=("works at AcmeCorp",))
    assert keyword_match(p, ["AcmeCorp"])


def test_keyword_match_checks_position_and_name_too():
    p = Profile(node=0, name="Acme fan club", position="engineer at acme")
    assert keyword_match(p, ["acme"])
    assert not keyword_match(p, ["globex"])


# -- frontier -----------------------------------------------------------------


def test_frontier_max_priority_then_fifo():
    f = Frontier()
    f.push(10, 1)
    f.push(11, 1)
    f.push(12, 3)
    f.increase(11)
    # 12 has priority 3; 11 was bumped to 2; 10 stays at 1
    assert f.pop() == (12, 3)
    assert f.pop() == (11, 2)
    assert f.pop() == (10, 1)


def test_frontier_fifo_among_ties():
    f = Frontier()
    for v in (5, 3, 9):
        f.push(v, 1)
    assert [f.pop()[0] for _ in range(3)] == [5, 3, 9]


def test_frontier_single_entry_per_node():
    f = Frontier()
    f.push(1, 1)
    with pytest.raises(CrawlError):
        f.push(1, 1)  # re-push is a bug, not a no-op
    assert len(f) == 1
    f.increase(1)
    assert f.priority_of(1) == 2
    assert f.pop() == (1, 2)
    assert len(f) == 0


# -- crawl basics -------------------------------------------------------------


def test_single_matching_seed_no_friends():
    src = make_source([0], [], {0: ("acme",)})
    res = crawl(src, CrawlConfig(seeds=[0], keywords=["acme"]))
    assert res.graph.nodes == (0,)
    assert res.graph.num_edges == 0
    assert res.stats.fetched == 1
    assert res.stats.confirmed == 1
    assert res.stats.precision == 1.0


def test_nonmatching_profiles_not_expanded():
    # 0 matches, 1 does not; 1's friend 2 must never be fetched.
    src = make_source([0, 1, 2], [(0, 1), (1, 2)], {0: ("acme",)})
    res = crawl(src, CrawlConfig(seeds=[0], keywords=["acme"]))
    assert res.stats.fetched == 2
    assert res.stats.confirmed == 1
    assert 2 not in res.state.crawled


def test_output_graph_only_confirmed_members_and_their_edges():
    employers = {0: ("acme",), 1: ("acme",), 3: ("acme",)}
    src = make_source([0, 1, 2, 3], [(0, 1), (0, 2), (1, 3), (2, 3)], employers)
    res = crawl(src, CrawlConfig(seeds=[0], keywords=["acme"]))
    assert set(res.graph.nodes) == {0, 1, 3}
    assert res.graph.edges() == [(0, 1), (1, 3)]  # 2 is not a member


def test_missing_profile_skipped_and_counted():
    g = SocialGraph([0, 1], [(0, 1)], {0: Profile(node=0, employers=("acme",))})
    src = InMemorySource(g, fingerprint="x")
    res = crawl(src, CrawlConfig(seeds=[0, 99], keywords=["acme"]))
    assert res.stats.not_found == 1
    assert res.stats.confirmed == 1


def test_budget_stop_sets_truncated():
    world = generate_world(crawl_world_spec(0))
    seeds = sorted(world.truth.all_members())[:3]
    cfg = CrawlConfig(seeds=seeds, keywords=["acme"], max_fetches=5)
    res = crawl(world.fresh_source(), cfg)
    assert res.stats.fetched == 5
    assert res.stats.truncated
    assert res.stats.stop_reason == "budget"


def test_no_node_fetched_twice():
    world = generate_world(crawl_world_spec(1))
    seeds = sorted(world.truth.all_members())[:3]
    seen = []
    crawl(world.fresh_source(), CrawlConfig(seeds=seeds, keywords=["acme"]),
          audit_hook=lambda state, node: seen.append(node))
    assert len(seen) == len(set(seen))


def test_priority_equals_confirmed_neighbor_count():
    world = generate_world(crawl_world_spec(2))
    adj = {v: world.graph.neighbors(v) for v in world.graph.nodes}
    seeds = sorted(world.truth.all_members())[:3]
    cfg = CrawlConfig(seeds=seeds, keywords=["acme"])

    def check(state, node):
        for cand, pr in state.frontier.items().items():
            expect = sum(1 for m in state.confirmed if m in adj[cand])
            if cand in cfg.seeds:
                expect += cfg.seed_priority  # enqueue bonus persists
            assert pr == expect

    crawl(world.fresh_source(), cfg, audit_hook=check)


def test_width_one_determinism():
    world = generate_world(crawl_world_spec(3))
    seeds = sorted(world.truth.all_members())[:3]
    cfg = CrawlConfig(seeds=seeds, keywords=["acme"])
    a = crawl(world.fresh_source(), cfg)
    b = crawl(world.fresh_source(), cfg)
    assert a.graph == b.graph
    assert a.stats == b.stats


def test_wider_crawl_confirms_same_members_on_closed_world():
    # Org reachable only through members: concurrency cannot change the set.
    spec = WorldSpec(
        total_population=40,
        orgs=(OrgSpec(("acme",), size=40, intra_community_edge_prob=0.3),),
        rng_seed=4,
    )
    world = generate_world(spec)
    seeds = sorted(world.truth.all_members())[:2]
    narrow = crawl(world.fresh_source(), CrawlConfig(seeds=seeds, keywords=["acme"]))
    wide = crawl(world.fresh_source(),
                 CrawlConfig(seeds=seeds, keywords=["acme"], concurrency_width=4))
    assert set(narrow.graph.nodes) == set(wide.graph.nodes)


# -- bfs baseline -------------------------------------------------------------


def test_bfs_same_members_on_closed_clique_world():
    spec = WorldSpec(
        total_population=12,
        orgs=(OrgSpec(("acme",), size=12, intra_community_edge_prob=1.0),),
        rng_seed=0,
    )
    world = generate_world(spec)
    seeds = [world.truth.members[0][0]]
    cfg = CrawlConfig(seeds=seeds, keywords=["acme"])
    a = crawl(world.fresh_source(), cfg)
    b = bfs_crawl(world.fresh_source(), cfg)
    assert set(a.graph.nodes) == set(b.graph.nodes) == set(world.truth.members[0])


def test_empty_friend_lists_fetch_only_seeds():
    src = make_source([0, 1, 2], [], {0: ("acme",), 1: ("acme",)})
    cfg = CrawlConfig(seeds=[0, 1], keywords=["acme"])
    res_v1 = crawl(src, cfg)
    assert res_v1.stats.fetched == 2
    src2 = make_source([0, 1, 2], [], {0: ("acme",), 1: ("acme",)})
    res_bfs = bfs_crawl(src2, cfg)
    assert res_bfs.stats.fetched == 2


def test_v1_beats_bfs_on_noisy_world():
    world = generate_world(crawl_world_spec(5))
    seeds = sorted(world.truth.all_members())[:3]
    cfg = CrawlConfig(seeds=seeds, keywords=["acme"], max_fetches=120)
    v1 = crawl(world.fresh_source(), cfg)
    bfs = bfs_crawl(world.fresh_source(), cfg)
    assert v1.stats.precision > bfs.stats.precision


# -- version 2 stopping -------------------------------------------------------


def test_v2_stops_on_sterile_window():
    world = generate_world(crawl_world_spec(6))
    seeds = sorted(world.truth.all_members())[:3]
    v1 = crawl(world.fresh_source(),
               CrawlConfig(seeds=seeds, keywords=["acme"], version="v1"))
    v2 = crawl(world.fresh_source(),
               CrawlConfig(seeds=seeds, keywords=["acme"], version="v2",
                           window_size=40))
    assert v2.stats.stop_reason == "window-stop"
    assert v2.stats.fetched < v1.stats.fetched
    assert v2.state.confirmed == v1.state.confirmed  # stop is a pure suffix cut


def test_v2_stop_is_suffix_cut():
    world = generate_world(crawl_world_spec(7))
    seeds = sorted(world.truth.all_members())[:3]
    v2 = crawl(world.fresh_source(),
               CrawlConfig(seeds=seeds, keywords=["acme"], version="v2",
                           window_size=30))
    replay = crawl(world.fresh_source(),
                   CrawlConfig(seeds=seeds, keywords=["acme"], version="v1",
                               max_fetches=v2.stats.fetched))
    assert v2.state.confirmed == replay.state.confirmed


# -- save / resume ------------------------------------------------------------


def test_save_at_zero_fetches_resumes_to_identical_run(tmp_path):
    world = generate_world(crawl_world_spec(8))
    seeds = sorted(world.truth.all_members())[:3]
    cfg = CrawlConfig(seeds=seeds, keywords=["acme"])
    fresh = crawl(world.fresh_source(), cfg)

    from orgminer.crawler import CrawlState
    src = world.fresh_source()
    state = CrawlState.fresh(cfg, src.fingerprint, strategy="priority")
    path = tmp_path / "state.json"
    save_state(state, path)
    resumed = crawl(src, cfg, state=resume(path, src))
    assert resumed.graph == fresh.graph


@pytest.mark.parametrize("k", [1, 9, 23])
def test_mid_crawl_resume_matches_uninterrupted(tmp_path, k):
    world = generate_world(crawl_world_spec(9))
    seeds = sorted(world.truth.all_members())[:3]
    cfg = CrawlConfig(seeds=seeds, keywords=["acme"])
    full = crawl(world.fresh_source(), cfg)

    src = world.fresh_source()
    part = crawl(src, CrawlConfig(seeds=seeds, keywords=["acme"], max_fetches=k))
    assert part.stats.truncated
    path = tmp_path / "state.json"
    save_state(part.state, path)
    done = crawl(src, cfg, state=resume(path, src))
    assert done.state.confirmed == full.state.confirmed
    assert done.graph == full.graph


def test_resume_against_other_world_rejected(tmp_path):
    world_a = generate_world(crawl_world_spec(10))
    world_b = generate_world(crawl_world_spec(11))
    seeds = sorted(world_a.truth.all_members())[:3]
    cfg = CrawlConfig(seeds=seeds, keywords=["acme"], max_fetches=4)
    res = crawl(world_a.fresh_source(), cfg)
    path = tmp_path / "state.json"
    save_state(res.state, path)
    with pytest.raises(StateError):
        resume(path, world_b.fresh_source())


def test_resume_rejects_changed_fixed_config(tmp_path):
    world = generate_world(crawl_world_spec(12))
    seeds = sorted(world.truth.all_members())[:3]
    res = crawl(world.fresh_source(),
                CrawlConfig(seeds=seeds, keywords=["acme"], max_fetches=4))
    path = tmp_path / "state.json"
    save_state(res.state, path)
    src = world.fresh_source()
    state = resume(path, src)
    with pytest.raises(StateError):
        crawl(src, CrawlConfig(seeds=seeds, keywords=["globex"]), state=state)
    # budget may change on resume
    state2 = resume(path, src)
    done = crawl(src, CrawlConfig(seeds=seeds, keywords=["acme"], max_fetches=8),
                 state=state2)
    assert done.stats.fetched == 8


def test_corrupt_state_file_rejected(tmp_path):
    path = tmp_path / "state.json"
    path.write_bytes(b"{ not json")
    world = generate_world(crawl_world_spec(13))
    with pytest.raises(StateError):
        resume(path, world.fresh_source())
    path.write_bytes(b'{"format_version": 99}')
    with pytest.raises(StateError):
        resume(path, world.fresh_source())


def test_config_validation():
    with pytest.raises(CrawlError):
        CrawlConfig(seeds=[], keywords=["a"])
    with pytest.raises(CrawlError):
        CrawlConfig(seeds=[1], keywords=[])
    with pytest.raises(CrawlError):
        CrawlConfig(seeds=[1], keywords=["a"], window_size=0)
    with pytest.raises(CrawlError):
        CrawlConfig(seeds=[1], keywords=["a"], version="v3")
