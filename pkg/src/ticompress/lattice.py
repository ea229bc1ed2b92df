"""Lattice geometries as ordered permutation classes of nearest-neighbor bonds.

A permutation class groups the bonds that carry one shared two-qubit gate in
a translationally invariant layer. Each class splits into one or more
*matchings*: runs of pairwise site-disjoint bonds that can execute as a
single parallel sub-layer. On the chain every class is one matching; on the
square, triangular, and kagome geometries each class is two interleaved
matchings whose union forms disjoint even cycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

Bond = tuple[int, int]


@dataclass(frozen=True)
class PermutationClass:
    matchings: tuple[tuple[Bond, ...], ...]

    @classmethod
    def from_bond_lists(cls, lists) -> "PermutationClass":
        """Build from matchings given as bond lists; duplicates across
        matchings are merged (first occurrence wins)."""
        seen = set()
        out = []
        for lst in lists:
            kept = []
            for a, b in lst:
                key = frozenset((a, b))
                if key in seen:
                    continue
                seen.add(key)
                kept.append((int(a), int(b)))
            if kept:
                out.append(tuple(kept))
        return cls(tuple(out))

    @classmethod
    def from_flat_arrays(cls, arrays) -> "PermutationClass":
        """Each flat array lists sites where consecutive pairs are bonds."""
        lists = []
        for arr in arrays:
            if len(arr) % 2:
                raise ValueError("flat permutation array must have even length")
            lists.append([(arr[k], arr[k + 1]) for k in range(0, len(arr), 2)])
        return cls.from_bond_lists(lists)

    @property
    def bonds(self) -> tuple[Bond, ...]:
        return tuple(b for m in self.matchings for b in m)

    def sites(self) -> set[int]:
        return {s for a, b in self.bonds for s in (a, b)}


@dataclass(frozen=True)
class Lattice:
    name: str
    n_sites: int
    classes: tuple[PermutationClass, ...]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_sublayers(self) -> int:
        """Total matching count: the depth needed to execute one pass with
        strictly parallel sub-layers."""
        return sum(len(c.matchings) for c in self.classes)

    @property
    def bonds(self) -> tuple[Bond, ...]:
        return tuple(b for c in self.classes for b in c.bonds)

    def degrees(self) -> list[int]:
        deg = [0] * self.n_sites
        for a, b in self.bonds:
            deg[a] += 1
            deg[b] += 1
        return deg


@dataclass
class LatticeReport:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def validate(lat: Lattice) -> LatticeReport:
    """Check bond-set sanity: index ranges, one class per bond, and
    site-disjointness inside every matching."""
    rep = LatticeReport()
    seen: dict[frozenset, int] = {}
    for ci, c in enumerate(lat.classes):
        for a, b in c.bonds:
            if a == b:
                rep.violations.append(f"class {ci}: degenerate bond ({a},{b})")
            if not (0 <= a < lat.n_sites and 0 <= b < lat.n_sites):
                rep.violations.append(f"class {ci}: bond ({a},{b}) out of range")
                continue
            key = frozenset((a, b))
            if key in seen and seen[key] != ci:
                rep.violations.append(
                    f"bond ({a},{b}) appears in classes {seen[key]} and {ci}"
                )
            seen[key] = ci
        for mi, m in enumerate(c.matchings):
            used = set()
            for a, b in m:
                for s in (a, b):
                    if s in used:
                        rep.violations.append(
                            f"class {ci} matching {mi}: site {s} repeated"
                        )
                    used.add(s)
    covered = {s for a, b in lat.bonds for s in (a, b)}
    for s in range(lat.n_sites):
        if s not in covered:
            rep.violations.append(f"site {s} is isolated")
    return rep


# ---------------------------------------------------------------------------
# builtin geometries (bond data listed per permutation class)
# ---------------------------------------------------------------------------

_SQUARE4X4 = [
    [
        (0, 4, 1, 5, 2, 6, 3, 7, 8, 12, 9, 13, 10, 14, 11, 15),
        (4, 8, 5, 9, 6, 10, 7, 11, 12, 0, 13, 1, 14, 2, 15, 3),
    ],
    [
        (0, 1, 4, 5, 8, 9, 12, 13, 2, 3, 6, 7, 10, 11, 14, 15),
        (1, 2, 5, 6, 9, 10, 13, 14, 3, 0, 7, 4, 11, 8, 15, 12),
    ],
]

_TRIANGULAR4X4 = [
    [
        (0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15),
        (1, 2, 3, 0, 5, 6, 7, 4, 9, 10, 11, 8, 13, 14, 15, 12),
    ],
    [
        (0, 5, 10, 15, 3, 4, 9, 14, 2, 7, 8, 13, 1, 6, 11, 12),
        (5, 10, 15, 0, 4, 9, 14, 3, 7, 8, 13, 2, 6, 11, 12, 1),
    ],
    [
        (0, 4, 8, 12, 1, 5, 9, 13, 2, 6, 10, 14, 3, 7, 11, 15),
        (4, 8, 12, 0, 5, 9, 13, 1, 6, 10, 14, 2, 7, 11, 15, 3),
    ],
]

# Third-class published interleaving repeats two bonds of the first and
# leaves four sites at degree 3; the corrected second interleaving walks the
# same two 4-cycles (1-4-9-11 and 3-5-7-10) off-phase, restoring 24 bonds
# and degree 4 everywhere.
_KAGOME12 = [
    [(0, 4, 6, 10, 2, 5, 8, 11), (4, 6, 10, 0, 5, 8, 11, 2)],
    [(0, 1, 2, 3, 6, 7, 8, 9), (1, 2, 3, 0, 7, 8, 9, 6)],
    [(1, 4, 9, 11, 3, 5, 7, 10), (4, 9, 11, 1, 5, 7, 10, 3)],
]


def _chain(n: int) -> Lattice:
    if n < 2:
        raise ValueError("chain needs at least 2 sites")
    if n == 2:
        classes = (PermutationClass.from_bond_lists([[(0, 1)]]),)
        return Lattice("chain(2)", 2, classes)
    if n % 2:
        raise ValueError("periodic chain needs an even number of sites")
    even = [(i, i + 1) for i in range(0, n, 2)]
    odd = [(i, (i + 1) % n) for i in range(1, n, 2)]
    classes = (
        PermutationClass.from_bond_lists([even]),
        PermutationClass.from_bond_lists([odd]),
    )
    return Lattice(f"chain({n})", n, classes)


def builtin_lattice(name: str) -> Lattice:
    """Construct a named geometry: chain(N), square4x4, triangular4x4, kagome12."""
    name = name.strip()
    if name.startswith("chain(") and name.endswith(")"):
        return _chain(int(name[6:-1]))
    if name == "square4x4":
        classes = tuple(PermutationClass.from_flat_arrays(p) for p in _SQUARE4X4)
        return Lattice(name, 16, classes)
    if name == "triangular4x4":
        classes = tuple(PermutationClass.from_flat_arrays(p) for p in _TRIANGULAR4X4)
        return Lattice(name, 16, classes)
    if name == "kagome12":
        classes = tuple(PermutationClass.from_flat_arrays(p) for p in _KAGOME12)
        return Lattice(name, 12, classes)
    raise ValueError(f"unknown lattice {name!r}")


# ---------------------------------------------------------------------------
# bipartition / coverage helpers used when emitting Pauli-string layers
# ---------------------------------------------------------------------------


def class_bipartition(c: PermutationClass) -> tuple[set[int], list[str]]:
    """Two-color the class subgraph and orient it against the listed bonds.

    Returns (side_a, positions) where side_a holds one color chosen so that,
    within every matching, the side-a endpoint sits at a uniform position;
    positions[m] is 'first' or 'second' accordingly. Raises if the class is
    not bipartite or the listed interleavings are inconsistent.
    """
    adj: dict[int, list[int]] = {}
    for a, b in c.bonds:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    color: dict[int, int] = {}
    for m in c.matchings:
        for a, _ in m:
            if a in color:
                continue
            color[a] = 0
            queue = [a]
            while queue:
                u = queue.pop()
                for v in adj[u]:
                    if v in color:
                        if color[v] == color[u]:
                            raise ValueError("class subgraph is not bipartite")
                    else:
                        color[v] = 1 - color[u]
                        queue.append(v)
    side_a = {s for s, col in color.items() if col == 0}
    positions = []
    for mi, m in enumerate(c.matchings):
        pos = {"first" if a in side_a else "second" for a, b in m}
        if len(pos) != 1:
            raise ValueError(f"matching {mi} mixes bond orientations")
        positions.append(pos.pop())
    return side_a, positions


def site_cover_plan(lat: Lattice) -> list[tuple[int, int, str]]:
    """Greedy plan covering every site exactly once with whole matchings.

    Each entry (class_idx, matching_idx, mode) applies a shared two-qubit
    gate over one matching; mode says which tensor factors carry the
    single-qubit operator: 'both', 'first', or 'second'.
    """
    uncovered = set(range(lat.n_sites))
    plan = []
    for ci, c in enumerate(lat.classes):
        if not uncovered:
            break
        for mi, m in enumerate(c.matchings):
            firsts = {a for a, b in m}
            seconds = {b for a, b in m}
            if firsts <= uncovered and seconds <= uncovered:
                plan.append((ci, mi, "both"))
                uncovered -= firsts | seconds
            elif firsts <= uncovered and not (seconds & uncovered):
                plan.append((ci, mi, "first"))
                uncovered -= firsts
            elif seconds <= uncovered and not (firsts & uncovered):
                plan.append((ci, mi, "second"))
                uncovered -= seconds
            if not uncovered:
                break
    if uncovered:
        raise ValueError(
            f"no exact site cover from whole matchings; {sorted(uncovered)} left"
        )
    return plan


# ---------------------------------------------------------------------------
# file format: 'sites N' header, then one class per line of a-b tokens,
# matchings separated by '|'
# ---------------------------------------------------------------------------


def format_lattice(lat: Lattice) -> str:
    lines = [f"# {lat.name}", f"sites {lat.n_sites}"]
    for c in lat.classes:
        parts = [" ".join(f"{a}-{b}" for a, b in m) for m in c.matchings]
        lines.append("class " + " | ".join(parts))
    return "\n".join(lines) + "\n"


def parse_lattice(text: str, name: str = "custom") -> Lattice:
    n_sites = None
    classes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("sites"):
            n_sites = int(line.split()[1])
            continue
        if line.startswith("class"):
            body = line[len("class"):].strip()
            matchings = []
            for part in body.split("|"):
                bonds = []
                for tok in part.split():
                    a, b = tok.split("-")
                    bonds.append((int(a), int(b)))
                if bonds:
                    matchings.append(bonds)
            classes.append(PermutationClass.from_bond_lists(matchings))
            continue
        raise ValueError(f"line {lineno}: cannot parse {raw!r}")
    if n_sites is None:
        raise ValueError("missing 'sites N' header")
    if not classes:
        raise ValueError("no classes defined")
    lat = Lattice(name, n_sites, tuple(classes))
    rep = validate(lat)
    if not rep.valid:
        raise ValueError("invalid lattice: " + "; ".join(rep.violations))
    return lat


def load_lattice(path: str) -> Lattice:
    with open(path) as fh:
        return parse_lattice(fh.read(), name=path)
