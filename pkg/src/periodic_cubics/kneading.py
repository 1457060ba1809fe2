"""Kneading words of period-p critically marked cubics and the type A/B moves.

A kneading word is a bit-string ``i_1 ... i_p`` with ``i_p == '0'``.  Words are
kept as plain ``str`` so they print, hash and compare without ceremony.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Literal, Optional

EXHAUSTIVE_LIMIT = 14


def check_word(k: str) -> str:
    if len(k) < 2 or set(k) - {"0", "1"}:
        raise ValueError(f"kneading word must be a bit-string of length >= 2, got {k!r}")
    if k[-1] != "0":
        raise ValueError(f"kneading word must end in 0, got {k!r}")
    return k


def distinguished(p: int) -> str:
    return "1" * (p - 1) + "0"


def all_words(p: int) -> Iterator[str]:
    for bits in product("01", repeat=p - 1):
        yield "".join(bits) + "0"


def max_return_time(k: str) -> int:
    """One plus the longest run of 1s (so 1 for the zero word)."""
    check_word(k)
    return max((len(run) for run in k.split("0")), default=0) + 1


def order_key(k: str) -> tuple[int, int]:
    """(b, w): b = n + m + 1 for k = 0^n 1^m 0..., b = 0 for 0^p; w counts 1s."""
    check_word(k)
    w = k.count("1")
    if w == 0:
        return 0, 0
    n = k.index("1")
    m = len(k[n:]) - len(k[n:].lstrip("1"))
    return n + m + 1, w


@dataclass(frozen=True)
class MoveEdge:
    source: str
    target: str
    kind: Literal["A", "B"]
    position: Optional[int] = None

    def __str__(self) -> str:
        tag = self.kind if self.position is None else f"{self.kind}{self.position}"
        return f"{self.source} -{tag}-> {self.target}"


def iter_type_a(k: str) -> Iterator[str]:
    """Type A successors, generated lazily (there are 2**(p - mu - 1) of them)."""
    check_word(k)
    p, mu = len(k), max_return_time(k)
    if not k.startswith("1" * (mu - 1) + "0"):
        return
    head = "0" * (mu - 1) + "1"
    free = p - mu - 1
    # the head would reach position p, which must stay 0
    if free < 0:
        return
    for bits in product("01", repeat=free):
        yield head + "".join(bits) + "0"


def type_a_successors(k: str) -> set[str]:
    return set(iter_type_a(k))


def type_b_successors(k: str) -> set[MoveEdge]:
    check_word(k)
    p, mu = len(k), max_return_time(k)
    edges = set()
    for pos in range(1, p):
        if pos + mu > p or k[pos - 1] != "0":
            continue
        if k[pos : pos + mu - 1] != "1" * (mu - 1):
            continue
        target = k[: pos - 1] + "1" + k[pos:]
        edges.add(MoveEdge(k, target, "B", pos))
    return edges


def iter_moves(k: str) -> Iterator[MoveEdge]:
    for t in iter_type_a(k):
        yield MoveEdge(k, t, "A")
    yield from sorted(type_b_successors(k), key=lambda e: e.position)


def is_terminal(k: str) -> bool:
    return next(iter_moves(k), None) is None


def path_to_distinguished(k: str) -> list[MoveEdge]:
    """A shortest sequence of moves from ``k`` to 1^(p-1)0, by breadth-first search."""
    check_word(k)
    goal = distinguished(len(k))
    if k == goal:
        return []
    parent: dict[str, Optional[MoveEdge]] = {k: None}
    queue = deque([k])
    while queue:
        word = queue.popleft()
        for edge in iter_moves(word):
            if edge.target in parent:
                continue
            parent[edge.target] = edge
            if edge.target == goal:
                path = []
                node = goal
                while parent[node] is not None:
                    path.append(parent[node])
                    node = parent[node].source
                return path[::-1]
            queue.append(edge.target)
    raise RuntimeError(f"no move sequence from {k} reaches {goal}")


@dataclass(frozen=True)
class MoveLemmaReport:
    p: int
    max_chain: int
    bound: int
    ok: bool
    words: int
    edges: int
    monotone: bool
    terminal_words: tuple[str, ...]


def verify_move_lemma(p: int) -> MoveLemmaReport:
    """Exhaustively check the move-termination bound for words of length ``p``.

    ``max_chain`` counts moves (edges) in the longest chain.  The check is
    strict: a chain of ``max_chain`` moves visits ``max_chain + 1`` words and
    that count must not exceed p**2 + p.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    if p > EXHAUSTIVE_LIMIT:
        raise MemoryError(f"exhaustive enumeration limited to p <= {EXHAUSTIVE_LIMIT}")
    words = sorted(all_words(p), key=order_key, reverse=True)
    longest: dict[str, int] = {}
    monotone = True
    terminal = []
    edges = 0
    # strictly increasing keys give a topological order; visit sinks first
    for word in words:
        key = order_key(word)
        best = 0
        has_move = False
        for edge in iter_moves(word):
            has_move = True
            edges += 1
            if order_key(edge.target) <= key:
                monotone = False
                continue
            best = max(best, longest[edge.target] + 1)
        if not has_move:
            terminal.append(word)
        longest[word] = best
    max_chain = max(longest.values())
    bound = p * p + p
    ok = monotone and max_chain + 1 <= bound and terminal == [distinguished(p)]
    return MoveLemmaReport(p, max_chain, bound, ok, len(words), edges, monotone, tuple(terminal))
