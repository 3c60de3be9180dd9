import numpy as np
import pytest
from hypothesis import given, settings

from orgminer import (
    Partition,
    Profile,
    SocialGraph,
    adjusted_rand_index,
    community_report,
    detect_communities,
    generate_world,
    infer_roles,
    load_role_rules,
    modularity,
    normalize_position,
)
from orgminer.bruteforce import best_partition_bruteforce
from orgminer.community import (
    PartitionError,
    partition_table_bytes,
    report_table_bytes,
)

from conftest import complete_graph, path_graph, random_graph, small_graphs, two_community_spec


def two_triangles() -> SocialGraph:
    return SocialGraph(range(6), [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


# -- modularity ---------------------------------------------------------------


def test_modularity_single_community_is_zero():
    g = complete_graph(4)
    assert modularity(g, {v: 0 for v in g.nodes}) == pytest.approx(0.0)


def test_modularity_two_triangles_half():
    g = two_triangles()
    part = {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    assert modularity(g, part) == pytest.approx(0.5)


def test_modularity_singletons_on_triangle():
    # Each node alone: Q = -sum (d/2m)^2 = -3*(2/6)^2 = -1/3.
    g = complete_graph(3)
    assert modularity(g, {0: 0, 1: 1, 2: 2}) == pytest.approx(-1 / 3)


def test_modularity_edgeless_graph_is_zero():
    g = SocialGraph(range(3), [])
    assert modularity(g, {0: 0, 1: 0, 2: 1}) == 0.0


def test_modularity_requires_full_cover():
    g = path_graph(3)
    with pytest.raises(PartitionError):
        modularity(g, {0: 0, 1: 0})


# -- greedy detection -----------------------------------------------------------


def test_detect_two_triangles_exact_recovery():
    part = detect_communities(two_triangles())
    assert part.q == pytest.approx(0.5)
    assert len(part) == 2
    comms = part.communities()
    assert sorted(map(list, comms.values())) == [[0, 1, 2], [3, 4, 5]]


def test_detect_complete_graph_single_community():
    part = detect_communities(complete_graph(6))
    assert len(part) == 1


def test_detect_edgeless_graph_all_singletons():
    g = SocialGraph(range(4), [])
    part = detect_communities(g)
    assert len(part) == 4
    assert part.q == 0.0
    assert part.merges == ()


def test_detect_isolated_node_stays_singleton():
    g = SocialGraph(range(7), [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
    part = detect_communities(g)
    solo = part.assignment[6]
    assert [v for v, c in part.assignment.items() if c == solo] == [6]


def test_detect_reports_internally_consistent_q():
    g = random_graph(11, 20, 0.15)
    part = detect_communities(g)
    assert modularity(g, part.assignment) == pytest.approx(part.q, abs=1e-12)


def test_detect_merge_log_q_trace_monotone():
    g = random_graph(12, 18, 0.2)
    part = detect_communities(g)
    q_values = [step.q_after for step in part.merges]
    assert all(step.gain > 0 for step in part.merges)
    assert q_values == sorted(q_values)
    if q_values:
        assert part.q == pytest.approx(q_values[-1], abs=1e-12)


def test_community_ids_are_renumbered_by_smallest_member():
    part = detect_communities(two_triangles())
    comms = part.communities()
    assert list(comms) == [0, 1]
    assert comms[0] == (0, 1, 2)  # community containing node 0 gets id 0


@given(small_graphs(min_nodes=3, max_nodes=10))
@settings(max_examples=50)
def test_greedy_never_beats_exhaustive(g):
    greedy = detect_communities(g)
    best_q, _ = best_partition_bruteforce(g)
    assert greedy.q <= best_q + 1e-12


@given(small_graphs(min_nodes=3, max_nodes=9))
@settings(max_examples=25)
def test_detection_is_permutation_equivariant(g):
    perm = {v: v * 13 % 97 + 200 for v in g.nodes}
    h = SocialGraph(perm.values(), [(perm[u], perm[v]) for u, v in g.edges()])
    pg = detect_communities(g)
    ph = detect_communities(h)
    assert ph.q == pytest.approx(pg.q, abs=1e-12)
    # same grouping under the relabeling
    mapped = {perm[v]: c for v, c in pg.assignment.items()}
    assert adjusted_rand_index(mapped, ph.assignment) == pytest.approx(1.0)


# -- adjusted rand ---------------------------------------------------------------


def test_ari_identical_partitions():
    a = {0: 0, 1: 0, 2: 1, 3: 1}
    relabeled = {0: 5, 1: 5, 2: 9, 3: 9}
    assert adjusted_rand_index(a, relabeled) == pytest.approx(1.0)


def test_ari_known_value():
    a = {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    b = {0: 0, 1: 0, 2: 1, 3: 1, 4: 1, 5: 1}
    # contingency (2,1,3): index 4, expected 2.8, max 6.5 -> 1.2/3.7
    assert adjusted_rand_index(a, b) == pytest.approx(12 / 37)


def test_ari_single_blob_degenerate_case():
    a = {0: 0, 1: 0}
    assert adjusted_rand_index(a, a) == 1.0


def test_ari_rejects_mismatched_node_sets():
    with pytest.raises(ValueError):
        adjusted_rand_index({0: 0}, {1: 0})


# -- position normalization -------------------------------------------------------


def test_normalize_position_examples():
    assert normalize_position("Senior Software Engineer") == "R&D"
    assert normalize_position("VP of Sales") == "Management"  # manager words win
    assert normalize_position("account executive") == "Sales"
    assert normalize_position("customer support specialist") == "Support"
    assert normalize_position("sysadmin") == "IT"
    assert normalize_position("Brand Strategist") == "Marketing"
    assert normalize_position("Chief Technology Officer") == "Management"
    assert normalize_position(None) is None
    assert normalize_position("crane operator") is None


def test_normalize_position_folds_case_and_spaces():
    assert normalize_position("  HEAD   OF  research ") == "Management"


def test_rules_load_from_custom_file(tmp_path):
    path = tmp_path / "rules.json"
    path.write_text('{"rules": [{"category": "X", "keywords": ["wizard"]}]}')
    rules = load_role_rules(path)
    assert normalize_position("senior wizard", rules) == "X"
    assert normalize_position("engineer", rules) is None


# -- role inference -------------------------------------------------------------


def build_labeled_graph():
    # community 0: nodes 0-3 engineers in east; community 1: nodes 4-7 sales in west
    profiles = {
        0: Profile(node=0, position="software engineer", location="east"),
        1: Profile(node=1, position="qa engineer", location="east"),
        2: Profile(node=2, position="research scientist", location="east"),
        3: Profile(node=3, location="east"),
        4: Profile(node=4, position="sales rep", location="west"),
        5: Profile(node=5, position="sales manager", location="west"),
        6: Profile(node=6, position="account executive", location="west"),
        7: Profile(node=7),
    }
    edges = [(0, 1), (1, 2), (0, 2), (2, 3), (4, 5), (5, 6), (4, 6), (6, 7), (3, 4)]
    g = SocialGraph(range(8), edges, profiles)
    part = Partition({v: 0 if v < 4 else 1 for v in range(8)}, q=0.0)
    return g, part


def test_infer_roles_majority_votes():
    g, part = build_labeled_graph()
    roles = infer_roles(g, part)
    by_comm = {r.community: r for r in roles}
    assert by_comm[0].position == "R&D"
    assert by_comm[0].location == "east"
    assert not by_comm[0].low_confidence
    assert by_comm[1].location == "west"
    # community 1 votes: Sales, Management, Sales -> Sales wins
    assert by_comm[1].position == "Sales"
    assert by_comm[1].position_support == pytest.approx(2 / 3)


def test_infer_roles_low_confidence_on_sparse_votes():
    profiles = {0: Profile(node=0, position="engineer", location="x")}
    g = SocialGraph(range(4), [(0, 1), (1, 2), (2, 3)], profiles)
    part = Partition({v: 0 for v in range(4)}, q=0.0)
    (role,) = infer_roles(g, part)
    assert role.position == "R&D"
    assert role.low_confidence  # one voter is below min_labeled


def test_infer_roles_counts_managers_with_label_override():
    g, part = build_labeled_graph()
    labels = {5: True, 0: True}
    roles = infer_roles(g, part, manager_labels=labels)
    by_comm = {r.community: r for r in roles}
    assert by_comm[0].manager_count == 1
    assert by_comm[1].manager_count == 1


def test_planted_world_roles_recovered():
    world = generate_world(two_community_spec(3))
    members = sorted(world.truth.all_members())
    sub = world.graph.subgraph(members)
    part = detect_communities(sub)
    roles = infer_roles(sub, part, manager_labels={
        v: v in world.truth.managers for v in members
    })
    qualifying = [r for r in roles if not r.low_confidence]
    assert qualifying
    planted = {
        info.category for info in world.truth.communities.values()
    }
    assert {r.position for r in qualifying} <= planted


# -- report ---------------------------------------------------------------


def test_community_report_counts():
    g, part = build_labeled_graph()
    roles = infer_roles(g, part)
    rows = community_report(g, part, roles)
    assert len(rows) == 2
    first = rows[0]
    assert first.community == 0
    assert first.size == 4
    assert first.internal_links == 4
    assert first.disclosed_positions == 3
    assert first.classified_positions == 3
    assert "R&D" in first.description and "east" in first.description


def test_report_tables_round_trip_shape():
    g, part = build_labeled_graph()
    roles = infer_roles(g, part)
    rows = community_report(g, part, roles)
    table = report_table_bytes(rows).decode()
    assert len(table.strip().splitlines()) == 3
    nodes_csv = partition_table_bytes(part).decode()
    assert nodes_csv.splitlines()[0] == "node,community"
    assert len(nodes_csv.strip().splitlines()) == 9
