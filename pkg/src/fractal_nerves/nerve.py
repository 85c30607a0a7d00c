"""
Nerves N_{j,k} of the covering of J_j by the pieces f_w(J_k), the simplicial
maps between them, and component bookkeeping.
"""
import logging
from fractions import Fraction
from functools import cached_property, singledispatch

import attr

from .affine import AffineSystem, affine1d_oracle, apply
from .contact import EMPTY, NONEMPTY, UNKNOWN, automaton_for
from .errors import (
    BudgetExceededError,
    HorizonExceededError,
    InvalidWordError,
    LevelMismatchError,
    SubcomplexError,
    TupleArityError,
    VerificationError,
)
from .system import TAIL_TRUNCATE, GridIFS, cell_of_digits, detect_cut, no_corner_check
from .utils import forward_offsets, format_word

logger = logging.getLogger(__name__)

VERDICT_EXACT = "exact"
VERDICT_OUTER = "outer"
VERDICT_INNER = "inner"
VERDICT_MODES = {VERDICT_EXACT, VERDICT_OUTER, VERDICT_INNER}


# --- Layers: one level range (j, k) of a system, answering contact queries ---


class GridLayer:
    def __init__(self, ifs, j, k):
        self.ifs = ifs
        self.j = j
        self.k = k
        self.automaton = automaton_for(ifs)
        self.vertices = list(ifs.words(j, k))
        self.corners = [cell_of_digits(ifs.n, v).corner for v in self.vertices]
        self.position = ifs.position(k)

    @property
    def max_arity(self):
        return 2**self.ifs.d

    def default_maxdim(self):
        if self.ifs.d == 2 and self.ifs.tail.kind != TAIL_TRUNCATE and no_corner_check(self.ifs):
            return 1
        return self.max_arity - 1

    def _kind(self, offsets):
        if self.position is None:
            return UNKNOWN
        if not self.automaton.survives(offsets, self.position):
            return EMPTY
        if self.ifs.tail.kind == TAIL_TRUNCATE:
            return UNKNOWN
        return NONEMPTY

    def pairs(self):
        d = self.ifs.d
        origin = (0,) * d
        kinds = {delta: self._kind((origin, delta)) for delta in forward_offsets(d)}
        live = [(delta, kind) for delta, kind in kinds.items() if kind != EMPTY]
        index = {corner: i for i, corner in enumerate(self.corners)}
        for i, corner in enumerate(self.corners):
            for delta, kind in live:
                other = index.get(tuple(a + b for a, b in zip(corner, delta)))
                if other is not None:
                    yield (i, other, kind) if i < other else (other, i, kind)

    def kind(self, simplex):
        base = self.corners[simplex[0]]
        offsets = tuple(tuple(a - b for a, b in zip(self.corners[v], base)) for v in simplex)
        return self._kind(offsets)


class AffineLayer:
    max_arity = 2

    def __init__(self, system, j, k):
        self.system = system
        self.j = j
        self.k = k
        self.vertices = list(system.words(j, k))
        self.maps = [system.word_map(j, v) for v in self.vertices]

    def default_maxdim(self):
        return 1

    def pairs(self):
        # Sweep over the outer boxes f_w([0,1]); the oracle settles the limit pieces.
        boxes = sorted((apply(f, 0), apply(f, 1), i) for i, f in enumerate(self.maps))
        for position, (lo, hi, i) in enumerate(boxes):
            for other_lo, _, other in boxes[position + 1 :]:
                if other_lo > hi:
                    break
                a, b = min(i, other), max(i, other)
                yield a, b, self.kind((a, b))

    def kind(self, simplex):
        verdict = affine1d_oracle(self.system, self.j, [self.vertices[v] for v in simplex])
        return verdict.kind


@singledispatch
def layer_for(system, j, k):
    raise TypeError(f"no nerve construction for {type(system).__name__}")


@layer_for.register(GridIFS)
def _(system, j, k):
    return GridLayer(system, j, k)


@layer_for.register(AffineSystem)
def _(system, j, k):
    return AffineLayer(system, j, k)


# --- Complexes and maps ---


@attr.s(frozen=True)
class SimplicialComplex:
    """
    Sealed complex. `simplices[q]` holds the q-simplices as sorted tuples of
    vertex indices, themselves sorted.
    """

    vertices = attr.ib(converter=tuple)
    simplices = attr.ib(converter=lambda s: tuple(tuple(sorted(tuple(x) for x in level)) for level in s))
    j = attr.ib()
    k = attr.ib()
    verdict_mode = attr.ib(default=VERDICT_EXACT)
    unknown_present = attr.ib(default=0)
    unknown_absent = attr.ib(default=0)

    def __attrs_post_init__(self):
        count = len(self.vertices)
        if self.simplices and len(self.simplices[0]) != count:
            raise VerificationError("0-simplices must match the vertex list")
        for q in range(1, len(self.simplices)):
            previous = self.simplex_set(q - 1)
            seen = set()
            for simplex in self.simplices[q]:
                if len(simplex) != q + 1 or len(set(simplex)) != q + 1 or list(simplex) != sorted(simplex):
                    raise VerificationError(f"malformed {q}-simplex {simplex}")
                if simplex in seen:
                    raise VerificationError(f"duplicate {q}-simplex {simplex}")
                seen.add(simplex)
                for drop in range(q + 1):
                    if simplex[:drop] + simplex[drop + 1 :] not in previous:
                        raise VerificationError(f"{q}-simplex {simplex} is missing a face")

    @property
    def dimension(self):
        for q in range(len(self.simplices) - 1, -1, -1):
            if self.simplices[q]:
                return q
        return -1

    def count(self, q):
        if q < 0 or q >= len(self.simplices):
            return 0
        return len(self.simplices[q])

    @cached_property
    def _simplex_sets(self):
        return [frozenset(level) for level in self.simplices]

    def simplex_set(self, q):
        if q < 0 or q >= len(self.simplices):
            return frozenset()
        return self._simplex_sets[q]

    @cached_property
    def index_of(self):
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def edges(self):
        return self.simplices[1] if len(self.simplices) > 1 else ()

    def euler_characteristic(self):
        return sum((-1) ** q * len(level) for q, level in enumerate(self.simplices))

    def label(self, i):
        return format_word(self.vertices[i])

    def to_json(self):
        return {
            "j": self.j,
            "k": self.k,
            "verdict_mode": self.verdict_mode,
            "unknown": {"present": self.unknown_present, "absent": self.unknown_absent},
            "vertices": [self.label(i) for i in range(len(self.vertices))],
            "simplices": {str(q): [list(s) for s in self.simplices[q]] for q in range(1, len(self.simplices))},
        }

    def to_dot(self):
        lines = [f"graph N_{self.j}_{self.k} {{"]
        for i in range(len(self.vertices)):
            lines.append(f'  {i} [label="{self.label(i)}"];')
        for a, b in self.edges:
            lines.append(f"  {a} -- {b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


@attr.s(frozen=True)
class SimplicialMap:
    domain = attr.ib()
    codomain = attr.ib()
    vertex_map = attr.ib(converter=tuple)

    def __attrs_post_init__(self):
        if len(self.vertex_map) != len(self.domain.vertices):
            raise VerificationError("vertex map must cover the whole domain")
        for q in range(1, len(self.domain.simplices)):
            for simplex in self.domain.simplices[q]:
                image = self.image(simplex)
                if image not in self.codomain.simplex_set(len(image) - 1):
                    raise VerificationError(f"image of {simplex} is not a simplex")

    def image(self, simplex):
        return tuple(sorted({self.vertex_map[v] for v in simplex}))

    def is_simplex_surjective(self):
        """
        Every q-simplex of the codomain is the image of a q-simplex of the domain.
        """
        for q in range(len(self.codomain.simplices)):
            images = {self.image(s) for s in (self.domain.simplices[q] if q < len(self.domain.simplices) else ())}
            if not self.codomain.simplex_set(q) <= images:
                return False
        return True


def build_nerve(system, j, k, maxdim=None, verdict_mode=VERDICT_EXACT, cell_budget=None):
    if verdict_mode not in VERDICT_MODES:
        raise ValueError(f"unknown verdict mode {verdict_mode!r}")
    if not 1 <= j < k:
        raise LevelMismatchError(f"need 1 <= j < k, got j={j}, k={k}")
    if cell_budget is not None and system.word_count(j, k) > cell_budget:
        raise BudgetExceededError(
            f"N_{{{j},{k}}} has {system.word_count(j, k)} vertices, over the budget of {cell_budget}", cell_budget
        )
    layer = layer_for(system, j, k)
    cap = layer.max_arity - 1
    if maxdim is None:
        maxdim = layer.default_maxdim()
    elif maxdim > cap:
        raise TupleArityError(f"maxdim {maxdim} exceeds the limit {cap}")

    unknown = {"present": 0, "absent": 0}

    def keep(kind, simplex):
        if kind == NONEMPTY:
            return True
        if kind == EMPTY:
            return False
        if verdict_mode == VERDICT_EXACT:
            raise HorizonExceededError(
                f"contact of {[format_word(layer.vertices[v]) for v in simplex]} is undecided within the horizon"
            )
        if verdict_mode == VERDICT_OUTER:
            unknown["present"] += 1
            return True
        unknown["absent"] += 1
        return False

    simplices = [[(i,) for i in range(len(layer.vertices))]]
    if maxdim >= 1:
        edges = {(a, b) for a, b, kind in layer.pairs() if keep(kind, (a, b))}
        simplices.append(sorted(edges))
        higher = [set() for _ in layer.vertices]
        for a, b in edges:
            higher[a].add(b)
        for q in range(2, maxdim + 1):
            faces = set(simplices[q - 1])
            found = []
            for sigma in simplices[q - 1]:
                common = set.intersection(*(higher[v] for v in sigma))
                for w in sorted(c for c in common if c > sigma[-1]):
                    candidate = sigma + (w,)
                    if any(candidate[:drop] + candidate[drop + 1 :] not in faces for drop in range(q)):
                        continue
                    if keep(layer.kind(candidate), candidate):
                        found.append(candidate)
            if not found:
                break
            simplices.append(found)
    logger.debug(
        "N_{%d,%d}: %s simplices per dimension", j, k, [len(level) for level in simplices]
    )
    return SimplicialComplex(
        vertices=layer.vertices,
        simplices=simplices,
        j=j,
        k=k,
        verdict_mode=verdict_mode,
        unknown_present=unknown["present"],
        unknown_absent=unknown["absent"],
    )


def projection_phi(domain, codomain):
    """
    The map N_{j,k+1} -> N_{j,k} dropping the last digit.
    """
    if domain.j != codomain.j or domain.k != codomain.k + 1:
        raise LevelMismatchError(
            f"phi needs N_{{j,k+1}} -> N_{{j,k}}, got N_{{{domain.j},{domain.k}}} -> N_{{{codomain.j},{codomain.k}}}"
        )
    index = codomain.index_of
    return SimplicialMap(domain, codomain, [index[v[:-1]] for v in domain.vertices])


def embed_xi(source, target, u):
    """
    The prefix embedding v -> uv of N_{k,l} into N_{j,l}.
    """
    u = tuple(tuple(d) if not isinstance(d, str) else d for d in u)
    if source.k != target.k or source.j != target.j + len(u):
        raise LevelMismatchError(
            f"xi_u needs N_{{k,l}} -> N_{{j,l}} with k = j + |u|, "
            f"got N_{{{source.j},{source.k}}} -> N_{{{target.j},{target.k}}} and |u| = {len(u)}"
        )
    index = target.index_of
    try:
        vertex_map = [index[u + v] for v in source.vertices]
    except KeyError:
        raise InvalidWordError(f"{format_word(u)} is not a word of levels {target.j}..{source.j - 1}")
    return SimplicialMap(source, target, vertex_map)


def subcomplex_M(n_jl, n_kl, n_jk):
    """
    M_{j,k,l}: the union of xi_u(N_{k,l}) over the vertices u of N_{j,k},
    with its inclusion into N_{j,l}.
    """
    if n_jk.j != n_jl.j or n_jk.k != n_kl.j or n_kl.k != n_jl.k:
        raise LevelMismatchError(
            f"M needs N_{{j,l}}, N_{{k,l}}, N_{{j,k}}, "
            f"got N_{{{n_jl.j},{n_jl.k}}}, N_{{{n_kl.j},{n_kl.k}}}, N_{{{n_jk.j},{n_jk.k}}}"
        )
    levels = [set() for _ in n_kl.simplices]
    for u in n_jk.vertices:
        xi = embed_xi(n_kl, n_jl, u)
        for q, simplices in enumerate(n_kl.simplices):
            levels[q].update(xi.image(s) for s in simplices)
    while len(levels) > 1 and not levels[-1]:
        levels.pop()
    for q, simplices in enumerate(levels):
        if not simplices <= n_jl.simplex_set(q):
            raise SubcomplexError(f"M_{{{n_jl.j},{n_kl.j},{n_jl.k}}} has {q}-simplices outside N")
    m = SimplicialComplex(
        vertices=n_jl.vertices,
        simplices=levels,
        j=n_jl.j,
        k=n_jl.k,
        verdict_mode=n_jl.verdict_mode,
    )
    return m, SimplicialMap(m, n_jl, range(len(n_jl.vertices)))


# --- Components ---


class UnionFind:
    def __init__(self, size):
        self.parents = list(range(size))
        self.sizes = [1] * size
        self.num_components = size

    def find(self, x):
        root = x
        while self.parents[root] != root:
            root = self.parents[root]
        while self.parents[x] != root:
            self.parents[x], x = root, self.parents[x]
        return root

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        if self.sizes[a] < self.sizes[b]:
            a, b = b, a
        self.parents[b] = a
        self.sizes[a] += self.sizes[b]
        self.num_components -= 1
        return True


@attr.s(frozen=True)
class ComponentPartition:
    parents = attr.ib(converter=tuple)
    labels = attr.ib(converter=tuple)
    sizes = attr.ib(converter=tuple)

    @property
    def count(self):
        return len(self.sizes)

    def members(self, label):
        return [v for v, c in enumerate(self.labels) if c == label]


def components(complex):
    uf = UnionFind(len(complex.vertices))
    for a, b in complex.edges:
        uf.union(a, b)
    roots = [uf.find(v) for v in range(len(complex.vertices))]
    ids = {}
    labels = []
    for root in roots:
        labels.append(ids.setdefault(root, len(ids)))
    sizes = [0] * len(ids)
    for label in labels:
        sizes[label] += 1
    return ComponentPartition(parents=roots, labels=labels, sizes=sizes)


@attr.s(frozen=True)
class ComponentMap:
    source = attr.ib()
    target = attr.ib()
    mapping = attr.ib(converter=tuple)

    @property
    def surjective(self):
        return set(self.mapping) == set(range(self.target.count))

    @property
    def injective(self):
        return len(set(self.mapping)) == len(self.mapping)

    @property
    def bijective(self):
        return self.surjective and self.injective


def component_map(smap, source=None, target=None):
    source = source or components(smap.domain)
    target = target or components(smap.codomain)
    mapping = [None] * source.count
    for v, label in enumerate(source.labels):
        image = target.labels[smap.vertex_map[v]]
        if mapping[label] is None:
            mapping[label] = image
        elif mapping[label] != image:
            raise VerificationError(f"component {label} maps to both {mapping[label]} and {image}")
    return ComponentMap(source, target, mapping)


# --- Towers of nerves and reports ---


class NerveTower:
    """
    Builds and caches the nerves of one system under one set of options.
    """

    def __init__(self, system, maxdim=None, verdict_mode=VERDICT_EXACT, cell_budget=None):
        self.system = system
        self.maxdim = maxdim
        self.verdict_mode = verdict_mode
        self.cell_budget = cell_budget
        self._nerves = {}
        self._components = {}

    def nerve(self, j, k):
        try:
            return self._nerves[j, k]
        except KeyError:
            pass
        nerve = build_nerve(
            self.system, j, k, maxdim=self.maxdim, verdict_mode=self.verdict_mode, cell_budget=self.cell_budget
        )
        self._nerves[j, k] = nerve
        return nerve

    def components(self, j, k):
        try:
            return self._components[j, k]
        except KeyError:
            partition = self._components[j, k] = components(self.nerve(j, k))
            return partition

    def phi(self, j, k):
        return projection_phi(self.nerve(j, k + 1), self.nerve(j, k))

    def xi(self, j, k, ell, u):
        return embed_xi(self.nerve(k, ell), self.nerve(j, ell), u)

    def subcomplex_M(self, j, k, ell):
        return subcomplex_M(self.nerve(j, ell), self.nerve(k, ell), self.nerve(j, k))


def _tower(system, tower):
    return tower if tower is not None else NerveTower(system)


@attr.s(frozen=True)
class ConnectivityRow:
    k = attr.ib()
    connected = attr.ib()
    components = attr.ib()
    level_connected = attr.ib()


@attr.s(frozen=True)
class ConnectivityReport:
    rows = attr.ib(converter=tuple)

    @property
    def connected(self):
        # J is connected iff every N_{1,k} is.
        return all(row.connected for row in self.rows)

    @property
    def locally_connected_evidence(self):
        # N_{k,k+1} connected for all checked k
        return all(row.level_connected for row in self.rows)

    def to_json(self):
        return {
            "connected": self.connected,
            "locally_connected_evidence": self.locally_connected_evidence,
            "rows": [attr.asdict(row) for row in self.rows],
        }


def connectivity_report(system, kmax, tower=None):
    tower = _tower(system, tower)
    rows = []
    for k in range(2, kmax + 1):
        partition = tower.components(1, k)
        rows.append(
            ConnectivityRow(
                k=k,
                connected=partition.count == 1,
                components=partition.count,
                level_connected=tower.components(k, k + 1).count == 1,
            )
        )
    return ConnectivityReport(rows)


def disconnection_certificate(system, k, tower=None):
    """
    c^(k-1) times the largest component of N_{1,k}; an upper bound on the
    diameter (per axis) of every component of J.
    """
    tower = _tower(system, tower)
    return system.contraction ** (k - 1) * max(tower.components(1, k).sizes)


@attr.s(frozen=True)
class ProjectionAudit:
    axis = attr.ib()
    level = attr.ib()
    depth = attr.ib()
    cut = attr.ib()
    bound = attr.ib()
    widest = attr.ib()
    errors = attr.ib(factory=list)

    @property
    def vacuous(self):
        return self.cut is None

    @property
    def passed(self):
        return not self.errors


def cut_projection_audit(ifs, m, j, axis, tower=None):
    """
    With a cut on `axis` at level j, every component of N_{1,m} (m - 1 >= j)
    projects onto `axis` inside an interval of length (n-1)/n^j plus 2/n^(m-1).
    """
    if m - 1 < j:
        raise LevelMismatchError(f"the audit needs m - 1 >= j, got m={m}, j={j}")
    cut = detect_cut(ifs.require_level(j), ifs.n, axis)
    nk = ifs.n[axis]
    bound = Fraction(nk - 1, nk**j) + Fraction(2, nk ** (m - 1))
    if cut is None:
        return ProjectionAudit(axis=axis, level=j, depth=m, cut=None, bound=bound, widest=None)
    tower = _tower(ifs, tower)
    nerve = tower.nerve(1, m)
    partition = tower.components(1, m)
    low = {}
    high = {}
    for v, label in enumerate(partition.labels):
        a = cell_of_digits(ifs.n, nerve.vertices[v]).corner[axis]
        low[label] = min(low.get(label, a), a)
        high[label] = max(high.get(label, a), a)
    errors = []
    widest = Fraction(0)
    for label in range(partition.count):
        span = Fraction(high[label] + 1 - low[label], nk ** (m - 1))
        widest = max(widest, span)
        if span > bound:
            errors.append(VerificationError(f"component {label} of N_{{1,{m}}} spans {span} > {bound} on axis {axis}"))
    return ProjectionAudit(axis=axis, level=j, depth=m, cut=cut, bound=bound, widest=widest, errors=errors)
