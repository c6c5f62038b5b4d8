"""Per-population ancestry trees with distance queries and near-interaction search.

Each population keeps its own tree of taxa (one node per individual that ever
lived). Asexual reproduction means every taxon has at most one parent, so the
structure is a forest: founders have no parent, and pruning may orphan a
retained subtree whose ancestor fell outside the retention horizon.

Distances are shortest undirected path lengths in edges. A parent and child
are at distance 1, siblings at 2, grandparent and grandchild at 2. The
distance between two interactions across a pair of trees is the sum of the
two within-tree distances; `k_nearest_evaluated` searches interaction space
in breadth-first order of that combined distance.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

TaxonId = int


class UnknownTaxonError(KeyError):
    """Raised when a query references a taxon id not present in the tree."""


@dataclass(slots=True)
class Taxon:
    id: TaxonId
    parent: TaxonId | None
    children: list[TaxonId] = field(default_factory=list)
    birth_generation: int = 0
    extant: bool = True


class Phylogeny:
    """Ancestry forest for one population.

    Ids are assigned monotonically and never reused, so a child's id is
    always greater than its parent's. Mutation (adding taxa, marking
    extinctions, pruning) happens in a single-writer phase between
    generations; distance and neighbourhood queries are read-only and safe
    to run concurrently.
    """

    def __init__(self, population_label: str):
        self.population_label = population_label
        self._taxa: dict[TaxonId, Taxon] = {}
        self._extant: set[TaxonId] = set()
        self._next_id: TaxonId = 0

    # -- accessors ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._taxa)

    def __contains__(self, tid: TaxonId) -> bool:
        return tid in self._taxa

    def taxon(self, tid: TaxonId) -> Taxon:
        try:
            return self._taxa[tid]
        except KeyError:
            raise UnknownTaxonError(
                f"taxon {tid} not in population {self.population_label!r}"
            ) from None

    @property
    def extant(self) -> frozenset[TaxonId]:
        return frozenset(self._extant)

    def taxa_ids(self) -> list[TaxonId]:
        return sorted(self._taxa)

    def neighbors(self, tid: TaxonId) -> list[TaxonId]:
        """Parent (if any) plus children, ascending by id."""
        t = self.taxon(tid)
        if t.parent is None:
            return list(t.children)
        return [t.parent] + t.children

    # -- mutation ----------------------------------------------------------

    def add_taxon(self, parent: TaxonId | None, generation: int) -> TaxonId:
        """Insert a new extant taxon and return its fresh id."""
        if parent is not None:
            self.taxon(parent).children.append(self._next_id)
        tid = self._next_id
        self._next_id += 1
        self._taxa[tid] = Taxon(id=tid, parent=parent, birth_generation=generation)
        self._extant.add(tid)
        return tid

    def mark_extinct(self, tid: TaxonId) -> None:
        self.taxon(tid).extant = False
        self._extant.discard(tid)

    def prune(self, horizon: int) -> set[TaxonId]:
        """Drop every taxon farther than `horizon` edges from all extant taxa.

        Anything beyond the horizon can never be reached by a within-horizon
        search starting from a living individual, so removing it cannot
        change any such search. Removal may orphan a retained taxon whose
        parent was dropped; the orphan becomes a root of its own tree.

        Returns the set of removed ids (callers drop their stored outcomes).
        """
        retained: set[TaxonId] = set(self._extant)
        frontier = list(self._extant)
        for _ in range(horizon):
            nxt: list[TaxonId] = []
            for tid in frontier:
                for nb in self.neighbors(tid):
                    if nb not in retained:
                        retained.add(nb)
                        nxt.append(nb)
            if not nxt:
                break
            frontier = nxt
        pruned = set(self._taxa) - retained
        for tid in sorted(pruned):
            t = self._taxa.pop(tid)
            if t.parent is not None and t.parent in self._taxa:
                self._taxa[t.parent].children.remove(tid)
            for child in t.children:
                if child in retained:
                    self._taxa[child].parent = None
        return pruned

    # -- queries -----------------------------------------------------------

    def pairwise_distance(
        self, x: TaxonId, y: TaxonId, horizon: int
    ) -> int | None:
        """Shortest path length in edges between x and y, or None beyond horizon.

        The unique tree path runs through the lowest common ancestor, so both
        legs are walked upward at most `horizon` steps.
        """
        if x == y:
            self.taxon(x)
            return 0
        up_x: dict[TaxonId, int] = {}
        node: TaxonId | None = x
        d = 0
        while node is not None and d <= horizon:
            up_x[node] = d
            node = self.taxon(node).parent
            d += 1
        node = y
        d = 0
        while node is not None and d <= horizon:
            if node in up_x:
                total = up_x[node] + d
                return total if total <= horizon else None
            node = self.taxon(node).parent
            d += 1
        self.taxon(y)
        return None

    def rings(self, origin: TaxonId) -> "RingExpander":
        return RingExpander(self, origin)

    # -- export --------------------------------------------------------------

    def export_rows(self) -> Iterator[tuple[int, int | None, int, bool]]:
        """(id, parent_id, birth_generation, extant) rows, ascending by id."""
        for tid in sorted(self._taxa):
            t = self._taxa[tid]
            yield (t.id, t.parent, t.birth_generation, t.extant)

    def write_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "parent_id", "birth_generation", "extant"])
            for tid, parent, birth, extant in self.export_rows():
                writer.writerow([tid, "" if parent is None else parent, birth, int(extant)])


class RingExpander:
    """Lazily expanded BFS rings around one taxon.

    ring(d) is the sorted list of taxa at exactly d edges from the origin.
    Expansion stops when the component is exhausted; rings beyond that are
    empty. Instances cache their frontier, so repeated queries against the
    same origin (one selection generation's worth of estimates) cost one BFS.
    """

    __slots__ = ("_tree", "_rings", "_seen", "_frontier")

    def __init__(self, tree: Phylogeny, origin: TaxonId):
        tree.taxon(origin)
        self._tree = tree
        self._rings: list[list[TaxonId]] = [[origin]]
        self._seen: set[TaxonId] = {origin}
        self._frontier: list[TaxonId] = [origin]

    def ring(self, d: int) -> list[TaxonId]:
        while d >= len(self._rings) and self._frontier:
            nxt: list[TaxonId] = []
            seen = self._seen
            neighbors = self._tree.neighbors
            for tid in self._frontier:
                for nb in neighbors(tid):
                    if nb not in seen:
                        seen.add(nb)
                        nxt.append(nb)
            nxt.sort()
            self._rings.append(nxt)
            self._frontier = nxt
        return self._rings[d] if d < len(self._rings) else _EMPTY

    @property
    def is_exhausted(self) -> bool:
        return not self._frontier

    def max_depth(self) -> int:
        """Largest ring index holding any taxon. Valid once exhausted."""
        d = len(self._rings) - 1
        while d > 0 and not self._rings[d]:
            d -= 1
        return d


_EMPTY: list[TaxonId] = []


def interaction_distance(d_a: int, d_b: int) -> int:
    """Distance between two interactions: sum of the per-population distances."""
    return d_a + d_b


class PairSearch:
    """Breadth-first search over interaction space for two populations.

    Pairs (x, y) are expanded level by level in nondecreasing combined
    distance from the query interaction; within a level, pairs are visited
    in lexicographic (x, y) id order so results are deterministic. Each
    tree's side is explored at most `horizon` edges deep, bounding combined
    distance by 2 * horizon.

    Ring caches are shared across queries; build one PairSearch per
    read-only phase (trees must not change while it is alive).
    """

    def __init__(self, tree_a: Phylogeny, tree_b: Phylogeny, horizon: int = 10):
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        self.tree_a = tree_a
        self.tree_b = tree_b
        self.horizon = horizon
        self._rings_a: dict[TaxonId, RingExpander] = {}
        self._rings_b: dict[TaxonId, RingExpander] = {}

    def _expander(self, side_a: bool, origin: TaxonId) -> RingExpander:
        cache = self._rings_a if side_a else self._rings_b
        exp = cache.get(origin)
        if exp is None:
            tree = self.tree_a if side_a else self.tree_b
            exp = RingExpander(tree, origin)
            cache[origin] = exp
        return exp

    def nearest_evaluated(
        self, a: TaxonId, b: TaxonId, has_pair, k: int, skip_exact: bool = False
    ) -> list[tuple[TaxonId, TaxonId, int]]:
        """Up to k evaluated pairs nearest to (a, b), as (x, y, distance).

        `has_pair((x, y))` decides whether the interaction between x and y
        was truly evaluated. Result distances are nondecreasing; ties follow
        (distance, x, y) order. `skip_exact` starts past combined distance 0
        for callers that already resolved the query pair itself.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        ra = self._expander(True, a)
        rb = self._expander(False, b)
        horizon = self.horizon
        found: list[tuple[TaxonId, TaxonId, int]] = []
        if not skip_exact and has_pair((a, b)):
            found.append((a, b, 0))
            if k == 1:
                return found
        rings_a = [ra.ring(0)]
        rings_b = [rb.ring(0)]
        for total in range(1, 2 * horizon + 1):
            need = min(total, horizon)
            while len(rings_a) <= need:
                rings_a.append(ra.ring(len(rings_a)))
            while len(rings_b) <= need:
                rings_b.append(rb.ring(len(rings_b)))
            parts: list[list[tuple[TaxonId, TaxonId]]] = []
            for da in range(max(0, total - horizon), need + 1):
                ring_a = rings_a[da]
                if not ring_a:
                    continue
                ring_b = rings_b[total - da]
                if ring_b:
                    parts.append([(x, y) for x in ring_a for y in ring_b])
            if parts:
                if len(parts) == 1:
                    level = parts[0]
                else:
                    level = [p for part in parts for p in part]
                    level.sort()
                for pair in level:
                    if has_pair(pair):
                        found.append((pair[0], pair[1], total))
                        if len(found) == k:
                            return found
            if ra.is_exhausted and rb.is_exhausted:
                if total >= min(ra.max_depth(), horizon) + min(rb.max_depth(), horizon):
                    break
        return found


def pairwise_distance(
    tree: Phylogeny, x: TaxonId, y: TaxonId, horizon: int = 10
) -> int | None:
    """Module-level convenience wrapper around Phylogeny.pairwise_distance."""
    return tree.pairwise_distance(x, y, horizon)


def k_nearest_evaluated(
    tree_a: Phylogeny,
    tree_b: Phylogeny,
    store,
    query: tuple[TaxonId, TaxonId],
    k: int,
    horizon: int = 10,
) -> list[tuple[tuple[TaxonId, TaxonId], int]]:
    """Up to k evaluated interactions nearest to `query`, with distances.

    `store` needs a `has_pair((a, b)) -> bool` callable (see OutcomeStore).
    A fresh breadth-first search is built per call; long-lived callers
    should hold a PairSearch instead.
    """
    search = PairSearch(tree_a, tree_b, horizon)
    hits = search.nearest_evaluated(query[0], query[1], store.has_pair, k)
    return [((x, y), d) for x, y, d in hits]
