"""Dataset ingestion: taxonomy edge lists, transitive closure, interaction logs, cognates.

All files are UTF-8, tab separated, with ``#`` comment lines and blank lines
ignored:

* taxonomy edges: ``child<TAB>parent[<TAB>weight]``
* similarity triplets: ``id1<TAB>id2<TAB>score``
* annotations: ``entity<TAB>annotation_set_id``
* interactions: ``id_a<TAB>id_b<TAB>weight``
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .errors import CycleError, DataError
from .objective import SimilarityDataset


class TaxonomyDag:
    """Directed acyclic graph with edges stored as ``(subordinate, superior)``.

    Nodes keep first-seen order. Duplicate edges are dropped; self-loops and
    cycles raise.
    """

    def __init__(self, edges=(), nodes=(), check=True):
        self.nodes = []
        self._node_set = set()
        self.parents = defaultdict(list)
        self.children = defaultdict(list)
        self._edges = set()
        for n in nodes:
            self.add_node(n)
        for child, parent in edges:
            self.add_edge(child, parent)
        if check:
            self.check_acyclic()

    def add_node(self, n):
        n = str(n)
        if n not in self._node_set:
            self._node_set.add(n)
            self.nodes.append(n)

    def add_edge(self, child, parent):
        child, parent = str(child), str(parent)
        if child == parent:
            raise DataError(f"self-loop on {child!r}")
        self.add_node(child)
        self.add_node(parent)
        if (child, parent) in self._edges:
            return
        self._edges.add((child, parent))
        self.parents[child].append(parent)
        self.children[parent].append(child)

    @property
    def edges(self):
        """Edges in insertion order of their child node."""
        return [(c, p) for c in self.nodes for p in self.parents.get(c, ())]

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node):
        return node in self._node_set

    @property
    def num_edges(self):
        return len(self._edges)

    def roots(self):
        """Nodes without a parent."""
        return [n for n in self.nodes if not self.parents.get(n)]

    def find_cycle(self):
        """One cycle as a list of nodes (first node repeated at the end), or None."""
        color = {}
        for start in self.nodes:
            if start in color:
                continue
            color[start] = 1
            stack = [(start, iter(self.parents.get(start, ())))]
            path = [start]
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    color[node] = 2
                    stack.pop()
                    path.pop()
                elif color.get(nxt) == 1:
                    return path[path.index(nxt):] + [nxt]
                elif nxt not in color:
                    color[nxt] = 1
                    stack.append((nxt, iter(self.parents.get(nxt, ()))))
                    path.append(nxt)
        return None

    def check_acyclic(self, path=None):
        cycle = self.find_cycle()
        if cycle is not None:
            raise CycleError(cycle, path=path)

    def topological_order(self):
        """Superiors before subordinates (parents before children)."""
        indeg = {n: len(self.parents.get(n, ())) for n in self.nodes}
        ready = [n for n in self.nodes if indeg[n] == 0]
        order = []
        while ready:
            nxt = []
            for n in ready:
                order.append(n)
                for c in self.children.get(n, ()):
                    indeg[c] -= 1
                    if indeg[c] == 0:
                        nxt.append(c)
            ready = nxt
        if len(order) != len(self.nodes):
            self.check_acyclic()
        return order


def _read_rows(path, min_cols, max_cols):
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataError("no such file", path=path) from None
    except OSError as exc:
        raise DataError(f"cannot read file ({exc.strerror})", path=path) from None
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if not min_cols <= len(cols) <= max_cols or any(c == "" for c in cols):
                raise DataError(f"expected {min_cols}-{max_cols} tab-separated fields, "
                                f"got {line!r}", path=path, line=lineno)
            yield lineno, cols


def _parse_weight(text, path, lineno):
    try:
        w = float(text)
    except ValueError:
        raise DataError(f"invalid number {text!r}", path=path, line=lineno) from None
    if not math.isfinite(w) or w < 0:
        raise DataError(f"value must be finite and >= 0, got {text!r}", path=path, line=lineno)
    return w


def load_edges(path, weighted=False):
    """Read a ``child<TAB>parent[<TAB>weight]`` file.

    Returns a :class:`TaxonomyDag` (acyclicity checked), or with
    ``weighted=True`` a list of ``(a, b, weight)`` triples where a missing
    weight defaults to 1.
    """
    triples = []
    dag = TaxonomyDag()
    for lineno, cols in _read_rows(path, 2, 3):
        w = _parse_weight(cols[2], path, lineno) if len(cols) == 3 else 1.0
        if weighted:
            if cols[0] == cols[1]:
                raise DataError(f"self-loop on {cols[0]!r}", path=path, line=lineno)
            triples.append((cols[0], cols[1], w))
            continue
        try:
            dag.add_edge(cols[0], cols[1])
        except DataError as exc:
            raise DataError(str(exc), path=path, line=lineno) from None
    if weighted:
        return triples
    dag.check_acyclic(path=path)
    return dag


def save_edges(dag, path):
    """Write ``dag`` as a ``child<TAB>parent`` file. Isolated nodes are not representable."""
    with open(path, "w", encoding="utf-8") as fh:
        for child, parent in dag.edges:
            fh.write(f"{child}\t{parent}\n")


def transitive_closure(dag):
    """All pairs ``(u, v)`` such that ``v`` is reachable from ``u`` along child->parent edges.

    Ancestor sets are memoized in topological order. The result is sorted by
    node order, then ancestor order.
    """
    pos = {n: i for i, n in enumerate(dag.nodes)}
    ancestors = {}
    for node in dag.topological_order():
        acc = set()
        for p in dag.parents.get(node, ()):
            acc.add(p)
            acc |= ancestors[p]
        ancestors[node] = acc
    out = []
    for node in dag.nodes:
        for a in sorted(ancestors[node], key=pos.__getitem__):
            out.append((node, a))
    return out


def closure_dataset(dag):
    """Binary similarity dataset over all dag nodes: score 1 for every closure pair."""
    index = {n: i for i, n in enumerate(dag.nodes)}
    pairs = {(index[u], index[v]): 1.0 for u, v in transitive_closure(dag)}
    return SimilarityDataset(dag.nodes, pairs)


def closure_dag(dag):
    """A new dag whose edges are the transitive closure of ``dag``."""
    return TaxonomyDag(transitive_closure(dag), nodes=dag.nodes, check=False)


def load_similarity(path):
    """Read an ``id1<TAB>id2<TAB>score`` file into a :class:`SimilarityDataset`."""
    triples = []
    for lineno, cols in _read_rows(path, 3, 3):
        if cols[0] == cols[1]:
            raise DataError(f"self-pair {cols[0]!r}", path=path, line=lineno)
        triples.append((cols[0], cols[1], _parse_weight(cols[2], path, lineno)))
    try:
        return SimilarityDataset.from_scores(triples)
    except DataError as exc:
        raise DataError(str(exc), path=path) from None


@dataclass
class InteractionLog:
    """Weighted interaction events between pairs of ids, e.g. message counts."""

    records: list = field(default_factory=list)

    def __post_init__(self):
        for a, b, w in self.records:
            if not math.isfinite(w) or w < 0:
                raise DataError(f"interaction weight must be finite and >= 0, got {w}")

    @classmethod
    def load(cls, path):
        recs = []
        for lineno, cols in _read_rows(path, 3, 3):
            recs.append((cols[0], cols[1], _parse_weight(cols[2], path, lineno)))
        return cls(recs)


def aggregate_interactions(log):
    """Total weight per unordered pair of ids. Events of an id with itself are skipped.

    Pairs whose total weight is 0 are not stored.
    """
    concepts = []
    index = {}
    totals = defaultdict(float)
    for a, b, w in log.records:
        for c in (a, b):
            if c not in index:
                index[c] = len(concepts)
                concepts.append(c)
        if a == b:
            continue
        i, j = index[a], index[b]
        totals[(min(i, j), max(i, j))] += w
    return SimilarityDataset(concepts, {k: v for k, v in totals.items() if v > 0})


class AnnotationTable:
    """Rows of ``(entity, annotation_set)`` membership, e.g. (language, cognate class)."""

    def __init__(self, rows=()):
        self.entities = []
        self.sets = {}
        for entity, group in rows:
            self.add(entity, group)

    def add_entity(self, entity):
        entity = str(entity)
        if entity not in self.sets:
            self.entities.append(entity)
            self.sets[entity] = set()

    def add(self, entity, group):
        entity, group = str(entity), str(group)
        self.add_entity(entity)
        if group in self.sets[entity]:
            raise DataError(f"duplicate annotation row ({entity!r}, {group!r})")
        self.sets[entity].add(group)

    def count(self, entity):
        return len(self.sets[entity])

    def shared(self, a, b):
        return len(self.sets[a] & self.sets[b])

    @classmethod
    def load(cls, path):
        table = cls()
        for lineno, cols in _read_rows(path, 2, 2):
            try:
                table.add(cols[0], cols[1])
            except DataError as exc:
                raise DataError(str(exc), path=path, line=lineno) from None
        return table


def cognate_similarity(table):
    """Shared annotation sets over the smaller of the two annotation counts.

    Only pairs that share at least one set are stored; all others score 0.
    """
    for e in table.entities:
        if table.count(e) == 0:
            raise DataError(f"entity {e!r} has no annotations")
    index = {e: i for i, e in enumerate(table.entities)}
    members = defaultdict(list)
    for e in table.entities:
        for g in table.sets[e]:
            members[g].append(index[e])
    common = defaultdict(int)
    for group in members.values():
        group.sort()
        for x in range(len(group)):
            for y in range(x + 1, len(group)):
                common[(group[x], group[y])] += 1
    ents = table.entities
    pairs = {}
    for (i, j), c in common.items():
        pairs[(i, j)] = c / min(table.count(ents[i]), table.count(ents[j]))
    return SimilarityDataset(ents, pairs)


def taxonomy_stats(dag):
    """Node count, closure edge count and depth (longest root-to-leaf path, in edges)."""
    depth = {}
    for node in dag.topological_order():
        depth[node] = max((depth[p] + 1 for p in dag.parents.get(node, ())), default=0)
    return {
        "nodes": len(dag),
        "edges": dag.num_edges,
        "closure_edges": len(transitive_closure(dag)),
        "depth": max(depth.values(), default=0),
    }
