"""Undirected social graph with per-node profiles and canonical file formats.

The graph type is immutable after construction. Node ids are arbitrary
non-negative integers; edges are unordered pairs without self-loops or
duplicates. Supported interchange formats:

* edge list: one ``u v`` pair per line, optional ``# nodes:`` header lines
  so isolated nodes survive a round trip;
* profiles: JSON Lines, one object per node (schema in README);
* labels: CSV with columns node, is_org_member, is_manager,
  discloses_position, community, location (any subset may be empty);
* exports: edge list, GraphML, DOT, and CSV tables.
"""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

EXPORT_FORMATS = ("edge-list", "graphml", "dot", "csv")

_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


class GraphError(Exception):
    """Malformed graph data or an invalid graph operation."""


class GraphParseError(GraphError):
    """A graph file failed to parse; carries the offending line number."""

    def __init__(self, source: str, line_no: int, message: str):
        super().__init__(f"{source}:{line_no}: {message}")
        self.source = source
        self.line_no = line_no


@dataclass(frozen=True)
class Profile:
    """Public profile fields for one node.

    ``is_org_member`` and ``is_manager`` are optional ground-truth labels;
    ``None`` means unknown. A profile that discloses its position must
    actually carry one, and a manager label implies org membership.
    """

    node: int
    name: str | None = None
    employers: tuple[str, ...] = ()
    position: str | None = None
    location: str | None = None
    is_org_member: bool | None = None
    is_manager: bool | None = None
    discloses_position: bool = False

    def __post_init__(self):
        object.__setattr__(self, "employers", tuple(self.employers))
        if self.discloses_position and self.position is None:
            raise GraphError(
                f"profile {self.node}: discloses_position requires a position"
            )
        if self.is_manager and not self.is_org_member:
            raise GraphError(
                f"profile {self.node}: a manager label requires org membership"
            )

    def text_fields(self) -> tuple[str, ...]:
        """All free-text fields, for keyword matching."""
        fields = list(self.employers)
        if self.name:
            fields.append(self.name)
        if self.position:
            fields.append(self.position)
        return tuple(fields)


@dataclass(frozen=True)
class LabelRow:
    """One row of a label table. Missing columns stay ``None``."""

    node: int
    is_org_member: bool | None = None
    is_manager: bool | None = None
    discloses_position: bool | None = None
    community: int | None = None
    location: str | None = None


class SocialGraph:
    """Immutable simple undirected graph over integer node ids."""

    __slots__ = ("_nodes", "_adj", "_edges", "_profiles", "_index", "_matrix")

    def __init__(
        self,
        nodes: Iterable[int],
        edges: Iterable[tuple[int, int]] = (),
        profiles: Mapping[int, Profile] | None = None,
    ):
        node_set = {int(v) for v in nodes}
        adj: dict[int, set[int]] = {v: set() for v in node_set}
        edge_set: set[tuple[int, int]] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if u not in adj or v not in adj:
                raise GraphError(f"edge ({u}, {v}) references an unknown node")
            edge_set.add((u, v) if u < v else (v, u))  # duplicates collapse here
            adj[u].add(v)
            adj[v].add(u)
        self._nodes: tuple[int, ...] = tuple(sorted(node_set))
        self._adj = {v: frozenset(adj[v]) for v in self._nodes}
        self._edges = frozenset(edge_set)
        prof = dict(profiles or {})
        for pid in prof:
            if pid not in adj:
                raise GraphError(f"profile references unknown node {pid}")
        self._profiles = prof
        self._index = {v: i for i, v in enumerate(self._nodes)}
        self._matrix = None

    # -- topology ---------------------------------------------------------

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    @property
    def num_nodes(self) -> int:
        return len(self._nodes)

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def edges(self) -> list[tuple[int, int]]:
        return sorted(self._edges)

    def has_node(self, v: int) -> bool:
        return v in self._adj

    def has_edge(self, u: int, v: int) -> bool:
        return ((u, v) if u < v else (v, u)) in self._edges

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def degree_sequence(self) -> tuple[int, ...]:
        return tuple(len(self._adj[v]) for v in self._nodes)

    def index_of(self, v: int) -> int:
        return self._index[v]

    def node_at(self, i: int) -> int:
        return self._nodes[i]

    def adjacency_matrix(self) -> sp.csr_array:
        """CSR adjacency in ascending-node-id order (cached)."""
        if self._matrix is None:
            n = len(self._nodes)
            rows, cols = [], []
            for u, v in sorted(self._edges):
                iu, iv = self._index[u], self._index[v]
                rows += [iu, iv]
                cols += [iv, iu]
            data = np.ones(len(rows), dtype=np.float64)
            self._matrix = sp.csr_array((data, (rows, cols)), shape=(n, n))
        return self._matrix

    # -- profiles ---------------------------------------------------------

    @property
    def profiles(self) -> Mapping[int, Profile]:
        return dict(self._profiles)

    def profile(self, v: int) -> Profile | None:
        return self._profiles.get(v)

    def with_profiles(self, profiles: Mapping[int, Profile]) -> "SocialGraph":
        return SocialGraph(self._nodes, self._edges, profiles)

    def subgraph(self, keep: Iterable[int]) -> "SocialGraph":
        keep_set = set(keep)
        unknown = keep_set - set(self._nodes)
        if unknown:
            raise GraphError(f"subgraph references unknown nodes {sorted(unknown)}")
        edges = [(u, v) for u, v in self._edges if u in keep_set and v in keep_set]
        profiles = {v: p for v, p in self._profiles.items() if v in keep_set}
        return SocialGraph(keep_set, edges, profiles)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SocialGraph):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._edges == other._edges
            and self._profiles == other._profiles
        )

    __hash__ = None  # mutable-profile payloads make hashing a trap

    def __repr__(self) -> str:
        return f"SocialGraph(n={self.num_nodes}, m={self.num_edges})"


# -- profile (de)serialization ------------------------------------------------

_PROFILE_FIELDS = (
    "node",
    "name",
    "employers",
    "position",
    "location",
    "is_org_member",
    "is_manager",
    "discloses_position",
)


def profile_to_dict(p: Profile) -> dict:
    out: dict = {"node": p.node}
    if p.name is not None:
        out["name"] = p.name
    if p.employers:
        out["employers"] = list(p.employers)
    if p.position is not None:
        out["position"] = p.position
    if p.location is not None:
        out["location"] = p.location
    if p.is_org_member is not None:
        out["is_org_member"] = p.is_org_member
    if p.is_manager is not None:
        out["is_manager"] = p.is_manager
    if p.discloses_position:
        out["discloses_position"] = True
    return out


def profile_from_dict(d: Mapping) -> Profile:
    unknown = set(d) - set(_PROFILE_FIELDS)
    unknown = {k for k in unknown if not k.startswith("_")}
    if unknown:
        raise GraphError(f"unknown profile fields {sorted(unknown)}")
    if "node" not in d:
        raise GraphError("profile record lacks a node id")
    return Profile(
        node=int(d["node"]),
        name=d.get("name"),
        employers=tuple(d.get("employers", ())),
        position=d.get("position"),
        location=d.get("location"),
        is_org_member=d.get("is_org_member"),
        is_manager=d.get("is_manager"),
        discloses_position=bool(d.get("discloses_position", False)),
    )


def profiles_to_jsonl_bytes(profiles: Mapping[int, Profile]) -> bytes:
    lines = [
        json.dumps(profile_to_dict(profiles[v]), sort_keys=True)
        for v in sorted(profiles)
    ]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def load_profiles(source: str | Path | bytes) -> dict[int, Profile]:
    """Parse a JSON Lines profile file into a node -> Profile map."""
    name, text = _read_text(source)
    profiles: dict[int, Profile] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise GraphParseError(name, line_no, f"bad JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise GraphParseError(name, line_no, "profile record must be an object")
        if any(k.startswith("_") for k in record):
            continue  # provenance record, not a profile
        try:
            p = profile_from_dict(record)
        except GraphError as exc:
            raise GraphParseError(name, line_no, str(exc)) from exc
        if p.node in profiles:
            raise GraphParseError(name, line_no, f"duplicate profile for node {p.node}")
        profiles[p.node] = p
    return profiles


# -- edge-list format ----------------------------------------------------------


def _read_text(source: str | Path | bytes) -> tuple[str, str]:
    if isinstance(source, bytes):
        return "<bytes>", source.decode("utf-8")
    path = Path(source)
    return str(path), path.read_text(encoding="utf-8")


def parse_edge_list(source: str | Path | bytes) -> SocialGraph:
    """Parse whitespace-separated integer pairs, one edge per line.

    ``# nodes: 3 7 9`` header lines declare nodes (needed for isolated
    ones); other ``#`` lines are comments. Duplicate edges collapse
    silently; a self-loop is a parse error.
    """
    name, text = _read_text(source)
    nodes: set[int] = set()
    edges: list[tuple[int, int]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.lower().startswith("# nodes:"):
                body = line.split(":", 1)[1]
                try:
                    nodes.update(int(tok) for tok in body.split())
                except ValueError:
                    raise GraphParseError(name, line_no, "bad node id in header")
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(
                name, line_no, f"expected two node ids, got {len(parts)} tokens"
            )
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(name, line_no, "node ids must be integers")
        if u == v:
            raise GraphParseError(name, line_no, f"self-loop at node {u}")
        nodes.add(u)
        nodes.add(v)
        edges.append((u, v))
    return SocialGraph(nodes, edges)


def load_edge_list(path: str | Path) -> SocialGraph:
    return parse_edge_list(Path(path))


def load_graph(
    edge_path: str | Path, profile_path: str | Path | None = None
) -> SocialGraph:
    """Load an edge list and optionally attach a profile file.

    Profile ids must be a subset of the graph's nodes; dangling ids are an
    error rather than a silent drop.
    """
    g = load_edge_list(edge_path)
    if profile_path is None:
        return g
    profiles = load_profiles(profile_path)
    dangling = sorted(set(profiles) - set(g.nodes))
    if dangling:
        raise GraphError(f"profiles reference nodes absent from the graph: {dangling}")
    return g.with_profiles(profiles)


def edge_list_bytes(g: SocialGraph) -> bytes:
    out = io.StringIO()
    node_ids = list(g.nodes)
    for start in range(0, len(node_ids), 100):
        chunk = node_ids[start : start + 100]
        out.write("# nodes: " + " ".join(str(v) for v in chunk) + "\n")
    for u, v in g.edges():
        out.write(f"{u} {v}\n")
    return out.getvalue().encode("utf-8")


# -- label tables --------------------------------------------------------------

_LABEL_COLUMNS = (
    "node",
    "is_org_member",
    "is_manager",
    "discloses_position",
    "community",
    "location",
)

_BOOL_TOKENS = {"true": True, "1": True, "false": False, "0": False}


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def labels_to_csv_bytes(rows: Iterable[LabelRow]) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_LABEL_COLUMNS)
    for row in sorted(rows, key=lambda r: r.node):
        writer.writerow(
            [
                row.node,
                _format_cell(row.is_org_member),
                _format_cell(row.is_manager),
                _format_cell(row.discloses_position),
                _format_cell(row.community),
                _format_cell(row.location),
            ]
        )
    return out.getvalue().encode("utf-8")


def _parse_bool(token: str, name: str, line_no: int) -> bool | None:
    token = token.strip().lower()
    if token == "":
        return None
    if token not in _BOOL_TOKENS:
        raise GraphParseError(name, line_no, f"bad boolean {token!r}")
    return _BOOL_TOKENS[token]


def load_labels(source: str | Path | bytes) -> dict[int, LabelRow]:
    """Parse a label CSV into a node -> LabelRow map."""
    name, text = _read_text(source)
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise GraphParseError(name, 1, "empty label file")
    header = [h.strip() for h in header]
    if "node" not in header:
        raise GraphParseError(name, 1, "label file needs a 'node' column")
    unknown = set(header) - set(_LABEL_COLUMNS)
    if unknown:
        raise GraphParseError(name, 1, f"unknown label columns {sorted(unknown)}")
    out: dict[int, LabelRow] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        cells = dict(zip(header, row))
        try:
            node = int(cells["node"])
        except ValueError:
            raise GraphParseError(name, line_no, "node id must be an integer")
        if node in out:
            raise GraphParseError(name, line_no, f"duplicate label row for {node}")
        community_raw = cells.get("community", "").strip()
        out[node] = LabelRow(
            node=node,
            is_org_member=_parse_bool(cells.get("is_org_member", ""), name, line_no),
            is_manager=_parse_bool(cells.get("is_manager", ""), name, line_no),
            discloses_position=_parse_bool(
                cells.get("discloses_position", ""), name, line_no
            ),
            community=int(community_raw) if community_raw else None,
            location=cells.get("location", "").strip() or None,
        )
    return out


# -- anonymization -------------------------------------------------------------


def anonymize(
    g: SocialGraph, seed: int, retain_labels: bool = False
) -> tuple[SocialGraph, dict[int, int]]:
    """Relabel nodes onto ``0..n-1`` with a seed-determined permutation.

    All free-text profile fields are dropped. The ground-truth booleans
    (``is_org_member``, ``is_manager``) survive only when
    ``retain_labels`` is set; ``discloses_position`` always resets since
    the position it refers to is gone. Returns the new graph and the
    old -> new id map.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(g.num_nodes)
    id_map = {old: int(perm[i]) for i, old in enumerate(g.nodes)}
    edges = [(id_map[u], id_map[v]) for u, v in g.edges()]
    profiles: dict[int, Profile] = {}
    if retain_labels:
        for old, p in g.profiles.items():
            if p.is_org_member is None and p.is_manager is None:
                continue
            profiles[id_map[old]] = Profile(
                node=id_map[old],
                is_org_member=p.is_org_member,
                is_manager=p.is_manager,
            )
    return SocialGraph(range(g.num_nodes), edges, profiles), id_map


# -- exports -------------------------------------------------------------------


def export_graph(
    g: SocialGraph,
    fmt: str,
    communities: Mapping[int, int | str] | None = None,
) -> bytes:
    """Serialize the graph to one of ``EXPORT_FORMATS``.

    ``communities`` adds a per-node community attribute where the format
    can carry one (GraphML, DOT, CSV).
    """
    if fmt == "edge-list":
        return edge_list_bytes(g)
    if fmt == "graphml":
        return _graphml_bytes(g, communities)
    if fmt == "dot":
        return _dot_bytes(g, communities)
    if fmt == "csv":
        return _csv_tables_bytes(g, communities)
    raise GraphError(f"unsupported export format {fmt!r}; use one of {EXPORT_FORMATS}")


_GRAPHML_ATTRS = (
    ("name", "string"),
    ("employers", "string"),  # JSON-encoded list
    ("position", "string"),
    ("location", "string"),
    ("is_org_member", "boolean"),
    ("is_manager", "boolean"),
    ("discloses_position", "boolean"),
    ("community", "string"),
)


def _graphml_bytes(g: SocialGraph, communities) -> bytes:
    ET.register_namespace("", _GRAPHML_NS)
    root = ET.Element(f"{{{_GRAPHML_NS}}}graphml")
    used: dict[str, str] = {}

    def node_values(v: int) -> dict[str, str]:
        vals: dict[str, str] = {}
        p = g.profile(v)
        if p is not None:
            if p.name is not None:
                vals["name"] = p.name
            if p.employers:
                vals["employers"] = json.dumps(list(p.employers))
            if p.position is not None:
                vals["position"] = p.position
            if p.location is not None:
                vals["location"] = p.location
            if p.is_org_member is not None:
                vals["is_org_member"] = "true" if p.is_org_member else "false"
            if p.is_manager is not None:
                vals["is_manager"] = "true" if p.is_manager else "false"
            if p.discloses_position:
                vals["discloses_position"] = "true"
        if communities is not None and v in communities:
            vals["community"] = str(communities[v])
        return vals

    per_node = {v: node_values(v) for v in g.nodes}
    for attr, kind in _GRAPHML_ATTRS:
        if any(attr in vals for vals in per_node.values()):
            key_id = f"d{len(used)}"
            used[attr] = key_id
            ET.SubElement(
                root,
                f"{{{_GRAPHML_NS}}}key",
                {"id": key_id, "for": "node", "attr.name": attr, "attr.type": kind},
            )
    graph_el = ET.SubElement(
        root, f"{{{_GRAPHML_NS}}}graph", {"id": "G", "edgedefault": "undirected"}
    )
    for v in g.nodes:
        node_el = ET.SubElement(graph_el, f"{{{_GRAPHML_NS}}}node", {"id": str(v)})
        for attr, value in per_node[v].items():
            data = ET.SubElement(
                node_el, f"{{{_GRAPHML_NS}}}data", {"key": used[attr]}
            )
            data.text = value
    for u, v in g.edges():
        ET.SubElement(
            graph_el,
            f"{{{_GRAPHML_NS}}}edge",
            {"source": str(u), "target": str(v)},
        )
    buf = io.BytesIO()
    ET.ElementTree(root).write(buf, encoding="utf-8", xml_declaration=True)
    return buf.getvalue() + b"\n"


def load_graphml(source: str | Path | bytes) -> SocialGraph:
    """Parse GraphML produced by :func:`export_graph` (community attr ignored)."""
    name, text = _read_text(source)
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise GraphParseError(name, exc.position[0], f"bad XML: {exc}") from exc
    keys: dict[str, str] = {}
    for key_el in root.findall(f"{{{_GRAPHML_NS}}}key"):
        keys[key_el.get("id", "")] = key_el.get("attr.name", "")
    graph_el = root.find(f"{{{_GRAPHML_NS}}}graph")
    if graph_el is None:
        raise GraphError(f"{name}: no <graph> element")
    nodes: set[int] = set()
    raw_attrs: dict[int, dict[str, str]] = {}
    for node_el in graph_el.findall(f"{{{_GRAPHML_NS}}}node"):
        v = int(node_el.get("id", ""))
        nodes.add(v)
        vals: dict[str, str] = {}
        for data in node_el.findall(f"{{{_GRAPHML_NS}}}data"):
            attr = keys.get(data.get("key", ""), "")
            vals[attr] = data.text or ""
        raw_attrs[v] = vals
    edges = []
    for edge_el in graph_el.findall(f"{{{_GRAPHML_NS}}}edge"):
        edges.append((int(edge_el.get("source", "")), int(edge_el.get("target", ""))))
    profiles: dict[int, Profile] = {}
    for v, vals in raw_attrs.items():
        vals.pop("community", None)
        if not vals:
            continue
        employers: tuple[str, ...] = ()
        if "employers" in vals:
            employers = tuple(json.loads(vals["employers"]))
        to_bool = lambda s: s == "true"  # noqa: E731
        profiles[v] = Profile(
            node=v,
            name=vals.get("name"),
            employers=employers,
            position=vals.get("position"),
            location=vals.get("location"),
            is_org_member=(
                to_bool(vals["is_org_member"]) if "is_org_member" in vals else None
            ),
            is_manager=to_bool(vals["is_manager"]) if "is_manager" in vals else None,
            discloses_position=to_bool(vals.get("discloses_position", "false")),
        )
    return SocialGraph(nodes, edges, profiles)


def _dot_bytes(g: SocialGraph, communities) -> bytes:
    def quote(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = ["graph G {"]
    for v in g.nodes:
        attrs = []
        if communities is not None and v in communities:
            attrs.append(f"community={quote(str(communities[v]))}")
        p = g.profile(v)
        if p is not None and p.is_manager is not None:
            attrs.append(f"manager={quote('true' if p.is_manager else 'false')}")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {v}{suffix};")
    for u, v in g.edges():
        lines.append(f"  {u} -- {v};")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _csv_tables_bytes(g: SocialGraph, communities) -> bytes:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    out.write("# nodes\n")
    header = [
        "node",
        "name",
        "employers",
        "position",
        "location",
        "is_org_member",
        "is_manager",
        "discloses_position",
    ]
    if communities is not None:
        header.append("community")
    writer.writerow(header)
    for v in g.nodes:
        p = g.profile(v)
        row = [
            v,
            (p.name if p else None) or "",
            json.dumps(list(p.employers)) if p and p.employers else "",
            (p.position if p else None) or "",
            (p.location if p else None) or "",
            _format_cell(p.is_org_member if p else None),
            _format_cell(p.is_manager if p else None),
            _format_cell(p.discloses_position if p else None),
        ]
        if communities is not None:
            row.append(_format_cell(communities.get(v)))
        writer.writerow(row)
    out.write("# edges\n")
    writer.writerow(["source", "target"])
    for u, v in g.edges():
        writer.writerow([u, v])
    return out.getvalue().encode("utf-8")
