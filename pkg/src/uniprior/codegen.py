"""Code construction: spanning-tree search, codeword assembly, decoding plans.

The designed code sends one coded symbol per spanning-tree edge of each
non-trivial component (the difference of the two endpoint messages), one
uncoded symbol per leftover arc (the tail's message), and one uncoded symbol
per message known to nobody.  Receivers decode a wanted message by adding a
multiple of their known message to a subset of received symbols; the number of
received symbols used is that demand's transmission count, which the tree
search minimizes in the worst case over demands.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import yaml

from .errors import InfeasibleError, ValidationError
from .fields import SUPPORTED_FIELD_ORDERS, unit_vector, vec_add, vec_scale, SpanBasis
from .graphcore import (
    IndexCodingProblem,
    InformationFlowGraph,
    PrunedGraph,
    SquareReduction,
    _as_int,
    _require_keys,
    build_flow_graph,
    prune,
    reduce_to_square,
)

# Components with at most this many vertices are searched exhaustively over
# all labeled spanning trees (k^(k-2) of them); larger ones use a star.
EXHAUSTIVE_TREE_LIMIT = 8
# Decoding-plan search is combinatorial in the code length; refuse beyond this.
PLAN_SEARCH_LIMIT = 20


@lru_cache(maxsize=None)
def _tree_search_tables(k: int):
    """All labeled trees on vertices 0..k-1, as parallel arrays.

    Returns (lo, hi, codes, dist): lo/hi are (T, k-1) endpoint arrays with
    lo < hi and edges sorted canonically within each tree; codes = lo * k + hi
    for lexicographic comparison; dist is the (T, k, k) matrix of tree
    distances.  Trees are decoded from all k^(k-2) sequences via the standard
    smallest-leaf construction, vectorized across trees.
    """
    if k == 2:
        seqs = np.zeros((1, 0), dtype=np.int64)
    else:
        seqs = np.indices((k,) * (k - 2)).reshape(k - 2, -1).T.copy()
    t_count = seqs.shape[0]
    rows = np.arange(t_count)

    deg = np.ones((t_count, k), dtype=np.int16)
    for v in range(k):
        deg[:, v] += (seqs == v).sum(axis=1)
    edges = np.empty((t_count, k - 1, 2), dtype=np.int16)
    for step in range(k - 2):
        joined = seqs[:, step]
        leaf = np.argmax(deg == 1, axis=1)
        edges[:, step, 0] = leaf
        edges[:, step, 1] = joined
        deg[rows, leaf] -= 1
        deg[rows, joined] -= 1
    first = np.argmax(deg == 1, axis=1)
    deg[rows, first] = 0
    second = np.argmax(deg == 1, axis=1)
    edges[:, k - 2, 0] = first
    edges[:, k - 2, 1] = second

    lo = np.minimum(edges[:, :, 0], edges[:, :, 1])
    hi = np.maximum(edges[:, :, 0], edges[:, :, 1])
    codes = lo * k + hi
    order = np.argsort(codes, axis=1)
    codes = np.take_along_axis(codes, order, axis=1)
    lo = np.take_along_axis(lo, order, axis=1)
    hi = np.take_along_axis(hi, order, axis=1)

    dist = np.full((t_count, k, k), 4 * k, dtype=np.int16)
    diag = np.arange(k)
    dist[:, diag, diag] = 0
    dist[rows[:, None], lo, hi] = 1
    dist[rows[:, None], hi, lo] = 1
    for mid in range(k):
        np.minimum(dist, dist[:, :, mid, None] + dist[:, mid, None, :], out=dist)
    return lo, hi, codes, dist


def min_max_spanning_tree(
    component_vertices, demand_arcs
) -> list[tuple[int, int]]:
    """Spanning tree minimizing the worst tree distance over demand arcs.

    Ties are broken by smallest total distance, then by the lexicographically
    smallest sorted edge list.  Components of at most EXHAUSTIVE_TREE_LIMIT
    vertices are searched exhaustively; larger ones fall back to the star
    whose center touches the most demand arcs (smallest vertex on ties).
    Returns edges as (u, v) pairs with u < v, sorted.
    """
    verts = sorted(set(component_vertices))
    if not verts:
        raise ValidationError("cannot build a spanning tree of an empty vertex set")
    k = len(verts)
    if k == 1:
        return []
    index_of = {v: i for i, v in enumerate(verts)}
    local = []
    for a, b in demand_arcs:
        if a not in index_of or b not in index_of:
            raise ValidationError(f"demand arc ({a}, {b}) leaves the component")
        if a == b:
            raise ValidationError(f"demand arc ({a}, {a}) is a self-loop")
        local.append((index_of[a], index_of[b]))

    if k <= EXHAUSTIVE_TREE_LIMIT:
        lo, hi, codes, dist = _tree_search_tables(k)
        if local:
            u = np.array([a for a, _ in local])
            v = np.array([b for _, b in local])
            arc_dist = dist[:, u, v]
            max_d = arc_dist.max(axis=1)
            tot_d = arc_dist.sum(axis=1)
        else:
            max_d = np.zeros(codes.shape[0], dtype=np.int16)
            tot_d = max_d
        cand = np.flatnonzero(max_d == max_d.min())
        cand = cand[tot_d[cand] == tot_d[cand].min()]
        rows = codes[cand]
        winner = int(cand[np.lexsort(rows[:, ::-1].T)[0]])
        return sorted(
            (verts[int(a)], verts[int(b)]) for a, b in zip(lo[winner], hi[winner])
        )

    incidence = {v: 0 for v in verts}
    for a, b in demand_arcs:
        incidence[a] += 1
        incidence[b] += 1
    center = min(verts, key=lambda v: (-incidence[v], v))
    return sorted((min(center, v), max(center, v)) for v in verts if v != center)


@dataclass(frozen=True)
class LinearCode:
    """A linear broadcast code: each column is one transmitted combination."""

    q: int
    n: int
    columns: tuple[tuple[int, ...], ...]
    origins: tuple[str, ...] = ()

    def __post_init__(self):
        if self.q not in SUPPORTED_FIELD_ORDERS:
            raise ValidationError(f"unsupported field order q={self.q}")
        if self.n < 1:
            raise ValidationError(f"message count must be positive, got {self.n}")
        for col in self.columns:
            if len(col) != self.n:
                raise ValidationError(
                    f"codeword length {len(col)} does not match message count {self.n}"
                )
            if any(not (0 <= e < self.q) for e in col):
                raise ValidationError(f"codeword entries must lie in 0..{self.q - 1}: {col}")
            if not any(col):
                raise ValidationError("zero codeword column is not allowed")
        if self.origins and len(self.origins) != len(self.columns):
            raise ValidationError("origins must parallel columns")

    @property
    def length(self) -> int:
        return len(self.columns)

    def matrix(self) -> np.ndarray:
        """n x N generator matrix; transmitting x sends x @ matrix mod q."""
        if not self.columns:
            return np.zeros((self.n, 0), dtype=np.int64)
        return np.array(self.columns, dtype=np.int64).T

    def encode(self, messages) -> np.ndarray:
        arr = np.asarray(messages, dtype=np.int64)
        return arr @ self.matrix() % self.q

    def code_hash(self) -> str:
        payload = f"q={self.q};n={self.n};columns={[list(c) for c in self.columns]}"
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _check_spanning(component, edges) -> None:
    members = sorted(component)
    if len(edges) != len(members) - 1:
        raise ValidationError(
            f"tree must have {len(members) - 1} edges for {len(members)} vertices, got {len(edges)}"
        )
    adj = {v: [] for v in members}
    for a, b in edges:
        if a not in adj or b not in adj:
            raise ValidationError(f"tree edge ({a}, {b}) leaves the component")
        adj[a].append(b)
        adj[b].append(a)
    seen = {members[0]}
    stack = [members[0]]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != len(members):
        raise ValidationError("tree edges do not span the component")


def build_index_code(
    pruned: PrunedGraph,
    trees,
    direct_messages=(),
    *,
    q: int = 2,
    message_of_vertex: dict[int, int] | None = None,
    n: int | None = None,
) -> LinearCode:
    """Assemble the code: tree-edge differences, then uncoded singletons.

    Tree edge {i, j} with i < j contributes the codeword e_i - e_j; a leftover
    arc contributes its tail's unit vector; each direct message (known to
    nobody) contributes its own unit vector.  Vertices are translated through
    message_of_vertex when the problem was relabeled to square form.
    """
    v_count = pruned.residual.vertex_count
    if message_of_vertex is None:
        message_of_vertex = {v: v for v in range(1, v_count + 1)}
    trees = tuple(tuple(tuple(sorted(e)) for e in t) for t in trees)
    if len(trees) != len(pruned.components):
        raise ValidationError(
            f"need one spanning tree per component: {len(pruned.components)} components, "
            f"{len(trees)} trees"
        )
    direct = sorted(direct_messages)
    if n is None:
        mentioned = list(message_of_vertex.values()) + direct
        n = max(mentioned) if mentioned else v_count

    columns: list[tuple[int, ...]] = []
    origins: list[str] = []
    for comp, tree in zip(pruned.components, trees):
        _check_spanning(comp, tree)
        for a, b in sorted(tree):
            i = message_of_vertex[a]
            j = message_of_vertex[b]
            col = vec_add(unit_vector(n, i), vec_scale(unit_vector(n, j), q - 1, q), q)
            columns.append(col)
            origins.append(f"tree:{a}-{b}")
    for a, b in sorted(pruned.leftover_arcs):
        columns.append(unit_vector(n, message_of_vertex[a]))
        origins.append(f"leftover:{a}")
    for msg in direct:
        columns.append(unit_vector(n, msg))
        origins.append(f"direct:{msg}")
    return LinearCode(q=q, n=n, columns=tuple(columns), origins=tuple(origins))


@dataclass
class CodeDesign:
    """Full output of the tree-based design pipeline for one problem."""

    problem: IndexCodingProblem
    reduction: SquareReduction
    graph: InformationFlowGraph
    pruned: PrunedGraph
    trees: tuple[tuple[tuple[int, int], ...], ...]
    code: LinearCode


def design_min_max_code(problem: IndexCodingProblem) -> CodeDesign:
    """Run the whole pipeline: square reduction, pruning, tree search, code."""
    if not problem.is_uniprior:
        raise ValidationError("code design requires a uniprior problem")
    reduction = reduce_to_square(problem)
    graph = build_flow_graph(reduction.problem)
    pruned = prune(graph)
    trees = tuple(
        tuple(min_max_spanning_tree(comp, sorted(pruned.component_arcs(idx))))
        for idx, comp in enumerate(pruned.components)
    )
    code = build_index_code(
        pruned,
        trees,
        reduction.direct_messages,
        q=problem.q,
        message_of_vertex=reduction.message_of_vertex,
        n=problem.n,
    )
    return CodeDesign(problem, reduction, graph, pruned, trees, code)


@dataclass(frozen=True)
class DemandPlan:
    """How one receiver recovers one wanted message.

    known_terms are (message, coeff) pairs over the receiver's known messages;
    code_terms are (column, coeff) pairs over received symbols, 1-based.  The
    transmission count for the demand is len(code_terms).
    """

    receiver: int
    demand: int
    known_terms: tuple[tuple[int, int], ...]
    code_terms: tuple[tuple[int, int], ...]

    @property
    def count(self) -> int:
        return len(self.code_terms)

    def expression(self) -> str:
        parts = [_format_term(coeff, f"x{msg}") for msg, coeff in self.known_terms]
        parts += [_format_term(coeff, f"t{col}") for col, coeff in self.code_terms]
        return f"x{self.demand} = " + " + ".join(parts)


def _format_term(coeff: int, name: str) -> str:
    return name if coeff == 1 else f"{coeff}*{name}"


def codeword_label(vector, q: int) -> str:
    """Human-readable form of a codeword, e.g. (1,1,0) -> 'x1+x2'."""
    parts = [_format_term(coeff, f"x{i}") for i, coeff in enumerate(vector, start=1) if coeff]
    return "+".join(parts) if parts else "0"


@dataclass(frozen=True)
class DecodingPlan:
    code: LinearCode
    entries: tuple[DemandPlan, ...]

    def entry(self, receiver: int, demand: int) -> DemandPlan:
        for e in self.entries:
            if e.receiver == receiver and e.demand == demand:
                return e
        raise KeyError((receiver, demand))


def _best_decode(code: LinearCode, receiver: int, demand: int, known: list[int]) -> DemandPlan:
    q, n = code.q, code.n
    target = unit_vector(n, demand)
    basis = SpanBasis(n, q, [unit_vector(n, k) for k in known] + list(code.columns))
    if not basis.contains(target):
        raise InfeasibleError(
            f"receiver {receiver} cannot recover message {demand} from this code"
        )
    known_vecs = [unit_vector(n, k) for k in known]
    zero = (0,) * n
    for card in range(code.length + 1):
        for subset in itertools.combinations(range(code.length), card):
            for alphas in itertools.product(range(q), repeat=len(known)):
                base = zero
                for a, kv in zip(alphas, known_vecs):
                    if a:
                        base = vec_add(base, vec_scale(kv, a, q), q)
                for betas in itertools.product(range(1, q), repeat=card):
                    total = base
                    for b, t in zip(betas, subset):
                        total = vec_add(total, vec_scale(code.columns[t], b, q), q)
                    if total == target:
                        return DemandPlan(
                            receiver=receiver,
                            demand=demand,
                            known_terms=tuple(
                                (k, a) for k, a in zip(known, alphas) if a
                            ),
                            code_terms=tuple(
                                (t + 1, b) for t, b in zip(subset, betas)
                            ),
                        )
    raise InfeasibleError(
        f"receiver {receiver} cannot recover message {demand} from this code"
    )


def decoding_plan(code: LinearCode, problem: IndexCodingProblem) -> DecodingPlan:
    """Minimal-count decoding recipe for every (receiver, demand) pair.

    For each demand the search returns the fewest received symbols whose
    combination with a multiple of the receiver's known messages yields the
    wanted one; ties go to the lexicographically earliest column subset and
    smallest coefficients.
    """
    if code.q != problem.q:
        raise ValidationError(f"code is over q={code.q} but problem is over q={problem.q}")
    if code.n != problem.n:
        raise ValidationError(f"code covers {code.n} messages but problem has {problem.n}")
    if code.length > PLAN_SEARCH_LIMIT:
        raise InfeasibleError(
            f"decoding-plan search not attempted for codes longer than {PLAN_SEARCH_LIMIT}"
        )
    entries = [
        _best_decode(code, receiver, demand, sorted(problem.known_sets[receiver - 1]))
        for receiver, demand in problem.demands()
    ]
    return DecodingPlan(code=code, entries=tuple(entries))


def transmission_counts(plan: DecodingPlan) -> dict[tuple[int, int], int]:
    """(receiver, demand) -> number of received symbols that demand combines."""
    return {(e.receiver, e.demand): e.count for e in plan.entries}


def plan_to_csv(plan: DecodingPlan) -> str:
    lines = ["receiver,demand,count,expression"]
    for e in plan.entries:
        lines.append(f"{e.receiver},{e.demand},{e.count},{e.expression()}")
    return "\n".join(lines) + "\n"


def code_to_mapping(code: LinearCode) -> dict:
    return {"q": code.q, "n": code.n, "columns": [list(c) for c in code.columns]}


def code_from_mapping(data) -> LinearCode:
    if not isinstance(data, dict):
        raise ValidationError("code document must be a mapping")
    _require_keys(data, {"q", "n", "columns"}, "code document")
    q = _as_int(data["q"], "q")
    n = _as_int(data["n"], "n")
    cols = data["columns"]
    if not isinstance(cols, list):
        raise ValidationError("columns must be a list of codewords")
    columns = []
    for col in cols:
        if not isinstance(col, list):
            raise ValidationError("each codeword must be a list of field elements")
        columns.append(tuple(_as_int(e, "codeword entry") for e in col))
    return LinearCode(q=q, n=n, columns=tuple(columns))


def parse_code_text(text: str) -> LinearCode:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"malformed code document: {exc}") from exc
    return code_from_mapping(data)


def parse_code(path: str | Path) -> LinearCode:
    return parse_code_text(Path(path).read_text())


def write_code(code: LinearCode, path: str | Path) -> None:
    lines = [f"q: {code.q}", f"n: {code.n}", "columns:"]
    for col in code.columns:
        lines.append(f"  - [{', '.join(str(e) for e in col)}]")
    Path(path).write_text("\n".join(lines) + "\n")
