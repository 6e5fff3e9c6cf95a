"""User/subcarrier availability graphs and constrained matching.

The allocator must hand each user exactly ``quota`` subcarriers it can
actually use.  Saturating every user at once is possible iff the Hall-type
condition |N(X)| >= quota*|X| holds for every user subset X; when it fails,
the allocation keeps the largest all-or-nothing saturable user set.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Iterable, Optional

import numpy as np

from .channel import ChannelRealization, subcarrier_ok

HALL_USER_LIMIT = 20  # subset enumeration guard


@dataclass(frozen=True)
class BipartiteGraph:
    """Availability graph: edge (u, s) means user u can use subcarrier s."""

    users: tuple[Hashable, ...]
    subcarriers: tuple[Hashable, ...]
    edges: frozenset[tuple[Hashable, Hashable]]

    def __post_init__(self):
        if len(set(self.users)) != len(self.users):
            raise ValueError("duplicate users")
        if len(set(self.subcarriers)) != len(self.subcarriers):
            raise ValueError("duplicate subcarriers")
        users = set(self.users)
        subs = set(self.subcarriers)
        for u, s in self.edges:
            if u not in users or s not in subs:
                raise ValueError(f"edge ({u!r}, {s!r}) references unknown vertex")

    def neighborhood(self, user: Hashable) -> tuple[Hashable, ...]:
        """Subcarriers available to ``user``, in subcarrier order."""
        return tuple(s for s in self.subcarriers if (user, s) in self.edges)

    def adjacency(self) -> dict[Hashable, tuple[int, ...]]:
        """User -> sorted tuple of subcarrier indices."""
        sub_index = {s: i for i, s in enumerate(self.subcarriers)}
        adj: dict[Hashable, list[int]] = {u: [] for u in self.users}
        for u in self.users:
            for s in self.subcarriers:
                if (u, s) in self.edges:
                    adj[u].append(sub_index[s])
        return {u: tuple(v) for u, v in adj.items()}


@dataclass(frozen=True)
class Matching:
    """All-or-nothing assignment: each user holds ``quota`` subcarriers or none."""

    quota: int
    assignment: dict[Hashable, tuple[Hashable, ...]]
    saturated: frozenset[Hashable]

    def __post_init__(self):
        used: set[Hashable] = set()
        for u, slots in self.assignment.items():
            if len(slots) not in (0, self.quota):
                raise ValueError(f"user {u!r} holds {len(slots)} != 0 or {self.quota} subcarriers")
            if (len(slots) == self.quota) != (u in self.saturated):
                raise ValueError(f"saturated set inconsistent for user {u!r}")
            for s in slots:
                if s in used:
                    raise ValueError(f"subcarrier {s!r} assigned twice")
                used.add(s)


def build_graph(
    real: ChannelRealization,
    receiver: Hashable,
    users: Iterable[Hashable],
    rate_threshold: float,
) -> BipartiteGraph:
    """Availability graph at ``receiver``: edges where the subcarrier is not in outage."""
    users = tuple(users)
    for u in users:
        if (u, receiver) not in real.gains:
            raise ValueError(f"unknown receiver or link: {(u, receiver)!r}")
    subcarriers = tuple(range(real.grid.n_subcarriers))
    edges = frozenset(
        (u, s)
        for u in users
        for s in subcarriers
        if subcarrier_ok(real, (u, receiver), s, rate_threshold)
    )
    return BipartiteGraph(users=users, subcarriers=subcarriers, edges=edges)


def isolated_users(graph: BipartiteGraph) -> frozenset[Hashable]:
    """Users with no usable subcarrier at all."""
    adj = graph.adjacency()
    return frozenset(u for u in graph.users if not adj[u])


def _neighbor_masks(graph: BipartiteGraph) -> list[int]:
    adj = graph.adjacency()
    masks = []
    for u in graph.users:
        m = 0
        for i in adj[u]:
            m |= 1 << i
        masks.append(m)
    return masks


def hall_condition(
    graph: BipartiteGraph, quota: int
) -> tuple[bool, Optional[tuple[Hashable, ...]]]:
    """Check |N(X)| >= quota*|X| for every nonempty user subset X.

    Returns (True, None) when it holds, else (False, witness) where the
    witness is a violating subset of minimum size, lexicographically first
    in user order.
    """
    if quota < 1:
        raise ValueError(f"quota must be >= 1, got {quota}")
    n = len(graph.users)
    if n > HALL_USER_LIMIT:
        raise ValueError(f"hall_condition enumerates subsets; |users| = {n} > {HALL_USER_LIMIT}")
    masks = _neighbor_masks(graph)
    for size in range(1, n + 1):
        for picks in combinations(range(n), size):
            union = 0
            for i in picks:
                union |= masks[i]
            if union.bit_count() < quota * size:
                return False, tuple(graph.users[i] for i in picks)
    return True, None


def _kuhn_assign(
    adjacency: list[tuple[int, ...]], quota: int, n_subs: int
) -> Optional[list[list[int]]]:
    """Assign ``quota`` subcarriers to every listed user, or None if impossible.

    Augmenting-path search in user order with subcarriers scanned in index
    order, so the result is deterministic.
    """
    owner = [-1] * n_subs  # subcarrier -> user index, -1 free
    held: list[list[int]] = [[] for _ in adjacency]

    def try_augment(ui: int, visited: list[bool]) -> bool:
        for s in adjacency[ui]:
            if visited[s]:
                continue
            visited[s] = True
            other = owner[s]
            if other == -1 or try_augment(other, visited):
                if other != -1:
                    held[other].remove(s)
                owner[s] = ui
                held[ui].append(s)
                return True
        return False

    for ui in range(len(adjacency)):
        for _ in range(quota):
            if not try_augment(ui, [False] * n_subs):
                return None
    return held


def _kuhn_partial(adjacency: list[tuple[int, ...]], quota: int, n_subs: int) -> int:
    """Size of a maximum matching when partially served users are allowed."""
    owner = [-1] * n_subs
    held: list[list[int]] = [[] for _ in adjacency]

    def try_augment(ui: int, visited: list[bool]) -> bool:
        for s in adjacency[ui]:
            if visited[s]:
                continue
            visited[s] = True
            other = owner[s]
            if other == -1 or try_augment(other, visited):
                if other != -1:
                    held[other].remove(s)
                owner[s] = ui
                held[ui].append(s)
                return True
        return False

    total = 0
    for ui in range(len(adjacency)):
        for _ in range(quota):
            if try_augment(ui, [False] * n_subs):
                total += 1
    return total


def max_constraint_matching(
    graph: BipartiteGraph,
    quota: int,
    rng: Optional[np.random.Generator] = None,
) -> Matching:
    """Saturate the largest possible user set with ``quota`` subcarriers each.

    Among maximum saturable subsets the lexicographically smallest (in user
    order) wins, and the assignment itself is found by deterministic
    augmenting paths.  ``rng`` optionally shuffles each user's subcarrier
    preference order: the saturated set is unchanged but the chosen
    subcarriers vary, which is exactly the freedom a receiver that did not
    run the allocation cannot predict.
    """
    if quota < 1:
        raise ValueError(f"quota must be >= 1, got {quota}")
    n_subs = len(graph.subcarriers)
    adj = graph.adjacency()
    order: dict[Hashable, tuple[int, ...]] = {}
    for u in graph.users:
        pref = list(adj[u])
        if rng is not None:
            rng.shuffle(pref)
        order[u] = tuple(pref)

    candidates = [u for u in graph.users if len(adj[u]) >= quota]

    def feasible(users: tuple[Hashable, ...]) -> Optional[list[list[int]]]:
        return _kuhn_assign([order[u] for u in users], quota, n_subs)

    chosen: tuple[Hashable, ...] = ()
    held = feasible(tuple(candidates))
    if held is not None:
        chosen = tuple(candidates)
    else:
        if len(candidates) > HALL_USER_LIMIT:
            raise ValueError(
                f"matching falls back to subset enumeration; "
                f"|candidates| = {len(candidates)} > {HALL_USER_LIMIT}"
            )
        # Largest saturable subset, searched by size descending then lexicographic
        # order, so the first feasible subset is the canonical answer.  A partial
        # (not all-or-nothing) matching bounds the achievable size from above.
        partial = _kuhn_partial([order[u] for u in candidates], quota, n_subs)
        best_possible = min(len(candidates) - 1, partial // quota)
        for size in range(best_possible, 0, -1):
            found = None
            for picks in combinations(candidates, size):
                held = feasible(picks)
                if held is not None:
                    found = picks
                    break
            if found is not None:
                chosen = found
                break
        else:
            held = []
            chosen = ()

    sub_of = dict(enumerate(graph.subcarriers))
    assignment: dict[Hashable, tuple[Hashable, ...]] = {u: () for u in graph.users}
    for u, slots in zip(chosen, held or []):
        assignment[u] = tuple(sub_of[i] for i in sorted(slots))
    return Matching(quota=quota, assignment=assignment, saturated=frozenset(chosen))


def dump_graph(graph: BipartiteGraph) -> str:
    """Adjacency text, one ``u: s,s,...`` line per user, for golden tests."""
    adj = graph.adjacency()
    lines = []
    for u in graph.users:
        subs = ",".join(str(graph.subcarriers[i]) for i in adj[u])
        lines.append(f"{u}: {subs}")
    return "\n".join(lines) + "\n"


def dump_matching(matching: Matching) -> str:
    """Assignment text in the same ``u: s,s,...`` shape as dump_graph."""
    lines = []
    for u, slots in matching.assignment.items():
        lines.append(f"{u}: {','.join(str(s) for s in slots)}")
    return "\n".join(lines) + "\n"
