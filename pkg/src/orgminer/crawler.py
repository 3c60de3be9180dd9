"""Focused crawler that prioritizes candidates by confirmed-member friends.

The frontier is a max-priority queue. A candidate's priority equals the
number of already-confirmed members known to be its friends, so the
crawler fetches the most promising profiles first. Fetched profiles that
match an organization keyword are confirmed; their friend lists feed the
frontier. Non-matching profiles are counted but never expanded.

Stopping:

* ``v1`` stops when the frontier is empty (or the fetch budget runs out);
* ``v2`` additionally stops once every queued candidate has priority <= 1
  and the last ``window_size`` fetches produced no new member. The check
  runs after each completed fetch.

With ``concurrency_width == 1`` a crawl is fully deterministic; larger
widths fetch in parallel and apply completions in completion order.
"""

from __future__ import annotations

import heapq
import json
import re
from collections import deque
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .graph import Profile, SocialGraph, profile_from_dict, profile_to_dict
from .synthworld import FetchSource, UnknownProfileError

STATE_FORMAT_VERSION = 1


class CrawlError(Exception):
    pass


class StateError(CrawlError):
    """A crawl state file is corrupt or belongs to a different world."""


_WS = re.compile(r"\s+")


def _normalize(text: str) -> str:
    return _WS.sub(" ", text.casefold()).strip()


def keyword_match(profile: Profile, keywords: Sequence[str]) -> bool:
    """True when any normalized keyword is a substring of any text field.

    Normalization case-folds and collapses whitespace on both sides.
    """
    fields = [_normalize(t) for t in profile.text_fields()]
    for kw in keywords:
        needle = _normalize(kw)
        if not needle:
            continue
        if any(needle in f for f in fields):
            return True
    return False


@dataclass(frozen=True)
class CrawlConfig:
    seeds: tuple[int, ...]
    keywords: tuple[str, ...]
    version: str = "v1"
    window_size: int = 1000
    max_fetches: int | None = None
    concurrency_width: int = 1
    seed_priority: int = 1

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(self.seeds))
        object.__setattr__(self, "keywords", tuple(self.keywords))
        if not self.seeds:
            raise CrawlError("at least one seed is required")
        if not self.keywords:
            raise CrawlError("at least one keyword is required")
        if self.version not in ("v1", "v2"):
            raise CrawlError("version must be 'v1' or 'v2'")
        if self.window_size < 1:
            raise CrawlError("window_size must be positive")
        if self.max_fetches is not None and self.max_fetches < 0:
            raise CrawlError("max_fetches must be non-negative")
        if self.concurrency_width < 1:
            raise CrawlError("concurrency_width must be >= 1")

    def to_dict(self) -> dict:
        return {
            "seeds": list(self.seeds),
            "keywords": list(self.keywords),
            "version": self.version,
            "window_size": self.window_size,
            "max_fetches": self.max_fetches,
            "concurrency_width": self.concurrency_width,
            "seed_priority": self.seed_priority,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrawlConfig":
        return cls(
            seeds=tuple(int(v) for v in d["seeds"]),
            keywords=tuple(d["keywords"]),
            version=d.get("version", "v1"),
            window_size=int(d.get("window_size", 1000)),
            max_fetches=d.get("max_fetches"),
            concurrency_width=int(d.get("concurrency_width", 1)),
            seed_priority=int(d.get("seed_priority", 1)),
        )


class Frontier:
    """Max-priority queue with FIFO tie-break by first enqueue order.

    Priority increases keep the original sequence number, so two
    candidates at equal priority dequeue in the order they first
    appeared. Stale heap rows are discarded lazily.
    """

    def __init__(self):
        self._heap: list[tuple[int, int, int]] = []  # (-priority, seq, node)
        self._entries: dict[int, tuple[int, int]] = {}  # node -> (priority, seq)
        self._next_seq = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, node: int) -> bool:
        return node in self._entries

    def priority_of(self, node: int) -> int:
        return self._entries[node][0]

    def push(self, node: int, priority: int) -> None:
        if node in self._entries:
            raise CrawlError(f"node {node} already queued")
        seq = self._next_seq
        self._next_seq += 1
        self._entries[node] = (priority, seq)
        heapq.heappush(self._heap, (-priority, seq, node))

    def increase(self, node: int, by: int = 1) -> None:
        priority, seq = self._entries[node]
        self._entries[node] = (priority + by, seq)
        heapq.heappush(self._heap, (-(priority + by), seq, node))

    def _clean_top(self) -> None:
        while self._heap:
            neg, seq, node = self._heap[0]
            entry = self._entries.get(node)
            if entry is not None and entry == (-neg, seq):
                return
            heapq.heappop(self._heap)

    def pop(self) -> tuple[int, int]:
        self._clean_top()
        if not self._heap:
            raise CrawlError("frontier is empty")
        neg, seq, node = heapq.heappop(self._heap)
        del self._entries[node]
        return node, -neg

    def max_priority(self) -> int | None:
        self._clean_top()
        if not self._heap:
            return None
        return -self._heap[0][0]

    def items(self) -> dict[int, int]:
        return {node: prio for node, (prio, _) in self._entries.items()}

    # -- persistence ------------------------------------------------------

    def dump(self) -> dict:
        rows = sorted(
            (seq, node, prio) for node, (prio, seq) in self._entries.items()
        )
        return {
            "next_seq": self._next_seq,
            "entries": [[node, prio, seq] for seq, node, prio in rows],
        }

    @classmethod
    def restore(cls, data: dict) -> "Frontier":
        f = cls()
        for node, prio, seq in data["entries"]:
            f._entries[int(node)] = (int(prio), int(seq))
            heapq.heappush(f._heap, (-int(prio), int(seq), int(node)))
        f._next_seq = int(data["next_seq"])
        return f


class FifoFrontier:
    """Plain FIFO queue with the Frontier interface; priorities ignored."""

    def __init__(self):
        self._queue: deque[int] = deque()
        self._queued: set[int] = set()

    def __len__(self) -> int:
        return len(self._queue)

    def __contains__(self, node: int) -> bool:
        return node in self._queued

    def push(self, node: int, priority: int) -> None:
        if node in self._queued:
            raise CrawlError(f"node {node} already queued")
        self._queue.append(node)
        self._queued.add(node)

    def increase(self, node: int, by: int = 1) -> None:
        pass  # a FIFO baseline tracks no priorities

    def pop(self) -> tuple[int, int]:
        node = self._queue.popleft()
        self._queued.discard(node)
        return node, 0

    def max_priority(self) -> int | None:
        return 0 if self._queue else None

    def items(self) -> dict[int, int]:
        return {node: 0 for node in self._queue}

    def dump(self) -> dict:
        return {"entries": [[node, 0, i] for i, node in enumerate(self._queue)],
                "next_seq": len(self._queue)}

    @classmethod
    def restore(cls, data: dict) -> "FifoFrontier":
        f = cls()
        for node, _prio, _seq in data["entries"]:
            f.push(int(node), 0)
        return f


@dataclass
class CrawlState:
    """Everything a crawl needs to continue exactly where it stopped."""

    config: CrawlConfig
    strategy: str  # "priority" | "fifo"
    frontier: Frontier | FifoFrontier
    crawled: set[int]
    confirmed: set[int]
    edges: set[tuple[int, int]]
    profiles: dict[int, Profile]
    window: deque
    fetch_count: int = 0
    not_found: int = 0
    fingerprint: str = ""

    @classmethod
    def fresh(
        cls, config: CrawlConfig, fingerprint: str, strategy: str = "priority"
    ) -> "CrawlState":
        frontier = Frontier() if strategy == "priority" else FifoFrontier()
        for seed in config.seeds:
            if seed not in frontier:
                frontier.push(seed, config.seed_priority)
        return cls(
            config=config,
            strategy=strategy,
            frontier=frontier,
            crawled=set(),
            confirmed=set(),
            edges=set(),
            profiles={},
            window=deque(maxlen=config.window_size),
            fetch_count=0,
            not_found=0,
            fingerprint=fingerprint,
        )

    def to_json_bytes(self) -> bytes:
        payload = {
            "format_version": STATE_FORMAT_VERSION,
            "fingerprint": self.fingerprint,
            "strategy": self.strategy,
            "config": self.config.to_dict(),
            "frontier": self.frontier.dump(),
            "crawled": sorted(self.crawled),
            "confirmed": sorted(self.confirmed),
            "edges": [[u, v] for u, v in sorted(self.edges)],
            "profiles": {
                str(v): profile_to_dict(p) for v, p in sorted(self.profiles.items())
            },
            "window": list(self.window),
            "fetch_count": self.fetch_count,
            "not_found": self.not_found,
        }
        return (json.dumps(payload, sort_keys=True, indent=1) + "\n").encode("utf-8")

    @classmethod
    def from_json_bytes(cls, data: bytes) -> "CrawlState":
        try:
            payload = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise StateError(f"corrupt crawl state: {exc}") from exc
        if not isinstance(payload, dict):
            raise StateError("corrupt crawl state: not an object")
        version = payload.get("format_version")
        if version != STATE_FORMAT_VERSION:
            raise StateError(f"unsupported state format version {version!r}")
        required = {
            "fingerprint", "strategy", "config", "frontier", "crawled",
            "confirmed", "edges", "profiles", "window", "fetch_count", "not_found",
        }
        missing = required - set(payload)
        if missing:
            raise StateError(f"corrupt crawl state: missing {sorted(missing)}")
        try:
            config = CrawlConfig.from_dict(payload["config"])
            strategy = payload["strategy"]
            if strategy not in ("priority", "fifo"):
                raise StateError(f"unknown strategy {strategy!r}")
            frontier_cls = Frontier if strategy == "priority" else FifoFrontier
            frontier = frontier_cls.restore(payload["frontier"])
            window: deque = deque(maxlen=config.window_size)
            window.extend(int(x) for x in payload["window"])
            state = cls(
                config=config,
                strategy=strategy,
                frontier=frontier,
                crawled={int(v) for v in payload["crawled"]},
                confirmed={int(v) for v in payload["confirmed"]},
                edges={(int(u), int(v)) for u, v in payload["edges"]},
                profiles={
                    int(v): profile_from_dict(d)
                    for v, d in payload["profiles"].items()
                },
                window=window,
                fetch_count=int(payload["fetch_count"]),
                not_found=int(payload["not_found"]),
                fingerprint=str(payload["fingerprint"]),
            )
        except StateError:
            raise
        except Exception as exc:  # malformed nested structure
            raise StateError(f"corrupt crawl state: {exc}") from exc
        return state


@dataclass(frozen=True)
class CrawlStats:
    fetched: int
    confirmed: int
    not_found: int
    truncated: bool
    stop_reason: str

    @property
    def precision(self) -> float:
        return self.confirmed / self.fetched if self.fetched else 0.0


@dataclass
class CrawlResult:
    graph: SocialGraph
    stats: CrawlStats
    state: CrawlState


def save_state(state: CrawlState, path: str | Path) -> None:
    Path(path).write_bytes(state.to_json_bytes())


def resume(path: str | Path, src: FetchSource) -> CrawlState:
    """Load a crawl state and check it belongs to this fetch source."""
    state = CrawlState.from_json_bytes(Path(path).read_bytes())
    if state.fingerprint != src.fingerprint:
        raise StateError(
            f"state fingerprint {state.fingerprint} does not match "
            f"source fingerprint {src.fingerprint}"
        )
    return state


def _check_resume_config(cfg: CrawlConfig, state: CrawlState) -> None:
    fixed = ("seeds", "keywords", "version", "window_size", "seed_priority")
    for name in fixed:
        if getattr(cfg, name) != getattr(state.config, name):
            raise StateError(
                f"config field {name!r} differs from the saved crawl; "
                "only max_fetches and concurrency_width may change on resume"
            )


AuditHook = Callable[[CrawlState, int], None]


def crawl(
    src: FetchSource,
    cfg: CrawlConfig,
    state: CrawlState | None = None,
    audit_hook: AuditHook | None = None,
) -> CrawlResult:
    """Run (or continue) a prioritized crawl against ``src``.

    ``audit_hook(state, node)`` fires after each completed fetch, before
    the stopping check; tests use it to audit frontier invariants.
    """
    if state is None:
        state = CrawlState.fresh(cfg, src.fingerprint, strategy="priority")
    else:
        _check_resume_config(cfg, state)
        if state.strategy != "priority":
            raise StateError("saved state came from a different crawl strategy")
        state.config = replace(
            state.config,
            max_fetches=cfg.max_fetches,
            concurrency_width=cfg.concurrency_width,
        )
    return _run(src, state, audit_hook)


def bfs_crawl(
    src: FetchSource,
    cfg: CrawlConfig,
    state: CrawlState | None = None,
    audit_hook: AuditHook | None = None,
) -> CrawlResult:
    """Baseline crawl: identical bookkeeping, FIFO frontier, no priorities.

    The ``v2`` priority condition is vacuous here, so ``v2`` reduces to
    the sterile-window test alone.
    """
    if state is None:
        state = CrawlState.fresh(cfg, src.fingerprint, strategy="fifo")
    else:
        _check_resume_config(cfg, state)
        if state.strategy != "fifo":
            raise StateError("saved state came from a different crawl strategy")
        state.config = replace(
            state.config,
            max_fetches=cfg.max_fetches,
            concurrency_width=cfg.concurrency_width,
        )
    return _run(src, state, audit_hook)


def _fetch_one(src: FetchSource, node: int):
    try:
        return node, src.fetch_profile(node)
    except (UnknownProfileError, KeyError):
        return node, None


def _run(
    src: FetchSource, state: CrawlState, audit_hook: AuditHook | None
) -> CrawlResult:
    cfg = state.config
    budget = cfg.max_fetches
    stop_reason: str | None = None
    truncated = False

    def window_stop_ready() -> bool:
        if cfg.version != "v2":
            return False
        if len(state.window) < cfg.window_size:
            return False
        if any(state.window):
            return False
        top = state.frontier.max_priority()
        return top is None or top <= 1

    if window_stop_ready() and len(state.frontier) > 0:
        stop_reason = "window-stop"

    executor = (
        ThreadPoolExecutor(max_workers=cfg.concurrency_width)
        if cfg.concurrency_width > 1
        else None
    )
    try:
        while stop_reason is None:
            if len(state.frontier) == 0:
                stop_reason = "frontier-exhausted"
                break
            if budget is not None and state.fetch_count >= budget:
                stop_reason = "budget"
                truncated = True
                break
            width = cfg.concurrency_width
            if budget is not None:
                width = min(width, budget - state.fetch_count)
            batch: list[int] = []
            while len(batch) < width and len(state.frontier) > 0:
                node, _priority = state.frontier.pop()
                state.crawled.add(node)
                batch.append(node)
            if executor is None:
                results = [_fetch_one(src, node) for node in batch]
            else:
                futures = [executor.submit(_fetch_one, src, node) for node in batch]
                results = [f.result() for f in as_completed(futures)]
            for node, fetched in results:
                state.fetch_count += 1
                if fetched is None:
                    state.not_found += 1
                    state.window.append(0)
                else:
                    profile, friends = fetched
                    if keyword_match(profile, cfg.keywords):
                        state.confirmed.add(node)
                        state.profiles[node] = profile
                        state.window.append(1)
                        for friend in friends:
                            if friend in state.confirmed:
                                key = (node, friend) if node < friend else (friend, node)
                                state.edges.add(key)
                        for friend in friends:
                            if friend == node or friend in state.crawled:
                                continue
                            if friend in state.frontier:
                                state.frontier.increase(friend)
                            else:
                                state.frontier.push(friend, 1)
                    else:
                        state.window.append(0)
                if audit_hook is not None:
                    audit_hook(state, node)
                if stop_reason is None and window_stop_ready():
                    stop_reason = "window-stop"
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    graph = SocialGraph(state.confirmed, state.edges, dict(state.profiles))
    stats = CrawlStats(
        fetched=state.fetch_count,
        confirmed=len(state.confirmed),
        not_found=state.not_found,
        truncated=truncated,
        stop_reason=stop_reason or "frontier-exhausted",
    )
    return CrawlResult(graph=graph, stats=stats, state=state)
