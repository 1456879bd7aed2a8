"""Measurement network geometry, check derivation and syndrome graphs.

Geometry
--------
The cluster behind the foliated code lives on a cubic complex in doubled
integer coordinates: cells sit at all-odd points, vertices at all-even
points, faces at points with exactly two odd coordinates and edges at points
with exactly one.  A block of distance ``d`` spans x, y in [0, 2d] and z in
[0, 2L] with L = 2d + 1 layers of cells, so the cell grid is d x d x (2d+1).

Every face and edge of the block carries one measurement site; every
face-edge incidence carries one doubled-chain resource state, chain qubit 1
ending at the face site and chain qubit 2 at the edge site.  A site with k
incident resource ends performs k physical Bell measurements pairing the
``a`` photon of end i with the ``b`` photon of end i+1 around the site's
geometric rotation order, which yields the zz outcomes (one per Bell) and
one x-product outcome per site.

Boundaries are open:

  x = 0, 2d    full planes; the cell-centred (primal) graph dangles here
               and the two planes carry its spanning terminals.
  y = 0, 2d    empty planes (every qubit with an even y-coordinate on them
               is absent); the vertex-centred (dual) graph dangles here and
               carries its spanning terminals.
  z = 0, 2L    full planes; dangling outcomes go to non-spanning leaves.

Checks
------
Check operators are derived generatively as the intersection of the resource
stabiliser group with the measurement outcome group.  On a unit-cell region
this produces the local template (per-site zz parities and the cell check
made of six x-products plus one zz per cell edge); the full lattice graphs
are obtained by tiling that template, and the tiling rules are re-validated
against the exact algebra once per process.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import gf2
from .pauli import PauliOperator, multiply_all

Coord = tuple[int, int, int]

MAX_DISTANCE = 25

ZZ = "ZZ"
XPROD = "XPROD"

# Photon offsets within one placement: chain qubit 1 (face end) photons a, b
# then chain qubit 2 (edge end) photons a, b.
_P1A, _P1B, _P2A, _P2B = 0, 1, 2, 3


class LatticeError(Exception):
    pass


class DanglingEndError(LatticeError):
    """A resource state has an unmeasured end and the region does not mark
    its boundaries as open."""


class TemplateError(LatticeError):
    """The tiled template disagrees with the exact check-group algebra."""


def _axes(axis: int) -> tuple[int, int]:
    """The two axes spanning the plane orthogonal to `axis`, in cyclic order."""
    return ((1, 2), (2, 0), (0, 1))[axis]


def _step(coord: Coord, axis: int, delta: int) -> Coord:
    out = list(coord)
    out[axis] += delta
    return tuple(out)


def rotation_neighbours(coord: Coord, axis: int) -> list[Coord]:
    """The four candidate partner positions around a site, in rotation order."""
    v, w = _axes(axis)
    return [
        _step(coord, v, +1),
        _step(coord, w, +1),
        _step(coord, v, -1),
        _step(coord, w, -1),
    ]


def classify(coord: Coord) -> tuple[str, int] | None:
    """('face', normal axis) or ('edge', direction axis) or None."""
    odd = [c & 1 for c in coord]
    k = sum(odd)
    if k == 2:
        return "face", odd.index(0)
    if k == 1:
        return "edge", odd.index(1)
    return None


@dataclass(frozen=True)
class Site:
    index: int
    coord: Coord
    kind: str  # 'face' | 'edge'
    axis: int
    placements: tuple[int, ...]  # incident placements in rotation order

    @property
    def arity(self) -> int:
        return len(self.placements)


@dataclass(frozen=True)
class Placement:
    """One doubled-chain resource state between a face site and an edge site.

    Either endpoint may be None in fragments whose boundary is explicitly
    marked open; the far end's photons then exist but are never measured.
    """

    index: int
    face_site: int | None
    edge_site: int | None


@dataclass(frozen=True)
class Bell:
    """One physical Bell measurement at `site` pairing the 'a' photon of the
    resource end in rotation slot `slot` with the 'b' photon of the next."""

    index: int
    site: int
    slot: int
    placement_a: int
    placement_b: int


@dataclass
class GhzNetwork:
    distance: int | None
    extent: Coord | None  # (2d, 2d, 2L) for lattices, None for fragments
    sites: list[Site]
    placements: list[Placement]
    bells: list[Bell]
    site_bell_start: np.ndarray  # len(sites)+1 offsets into `bells`
    allow_open: bool = False
    coord_to_site: dict[Coord, int] = field(default_factory=dict)

    @property
    def num_outcomes(self) -> int:
        return len(self.bells) + len(self.sites)

    def zz_outcome(self, bell_index: int) -> int:
        return bell_index

    def xprod_outcome(self, site_index: int) -> int:
        return len(self.bells) + site_index

    def outcome_kind(self, outcome_id: int) -> str:
        return ZZ if outcome_id < len(self.bells) else XPROD

    def has_open_ends(self) -> bool:
        return any(p.face_site is None or p.edge_site is None for p in self.placements)


def _finish_network(
    distance: int | None,
    extent: Coord | None,
    site_specs: list[tuple[Coord, str, int]],
    placement_pairs: list[tuple[Coord, Coord]],
    allow_open: bool,
) -> GhzNetwork:
    """Assemble Site/Placement/Bell lists with rotation-ordered incidences.

    Placement pairs always name both endpoint coordinates; a coordinate
    without a site is an open (unmeasured) end, which keeps its geometric
    slot in the partner site's rotation order.
    """
    site_specs = sorted(site_specs)
    coord_to_site = {coord: i for i, (coord, _, _) in enumerate(site_specs)}
    placements = []
    for i, (f, e) in enumerate(placement_pairs):
        placements.append(Placement(i, coord_to_site.get(f), coord_to_site.get(e)))
    # Incidences per site, keyed by the partner coordinate.
    by_site: dict[int, dict[Coord, int]] = {}
    for p, (f, e) in zip(placements, placement_pairs):
        if p.face_site is not None:
            by_site.setdefault(p.face_site, {})[e] = p.index
        if p.edge_site is not None:
            by_site.setdefault(p.edge_site, {})[f] = p.index
    sites: list[Site] = []
    for idx, (coord, kind, axis) in enumerate(site_specs):
        incident = by_site.get(idx, {})
        ordered = [
            incident.pop(cand)
            for cand in rotation_neighbours(coord, axis)
            if cand in incident
        ]
        if incident:
            raise LatticeError(
                f"site {coord} has partners outside its rotation plane"
            )
        if len(ordered) < 2:
            raise LatticeError(
                f"site {coord} has arity {len(ordered)}; measurement sites "
                "need at least two resource ends"
            )
        sites.append(Site(idx, coord, kind, axis, tuple(ordered)))
    bells: list[Bell] = []
    starts = [0]
    for s in sites:
        k = s.arity
        for slot in range(k):
            bells.append(
                Bell(
                    len(bells),
                    s.index,
                    slot,
                    s.placements[slot],
                    s.placements[(slot + 1) % k],
                )
            )
        starts.append(len(bells))
    return GhzNetwork(
        distance=distance,
        extent=extent,
        sites=sites,
        placements=placements,
        bells=bells,
        site_bell_start=np.asarray(starts, dtype=np.int64),
        allow_open=allow_open,
        coord_to_site=coord_to_site,
    )


# ---------------------------------------------------------------------------
# Full lattice
# ---------------------------------------------------------------------------


def _lattice_extent(d: int) -> Coord:
    return (2 * d, 2 * d, 2 * (2 * d + 1))


def qubit_exists(coord: Coord, d: int) -> bool:
    """Site existence rule for the open-boundary block.

    All faces and edges of the cell block exist except those with an even
    y-coordinate on the two empty y-boundary planes.
    """
    kind = classify(coord)
    if kind is None:
        return False
    ex, ey, ez = _lattice_extent(d)
    x, y, z = coord
    if not (0 <= x <= ex and 0 <= y <= ey and 0 <= z <= ez):
        return False
    if y % 2 == 0 and not (2 <= y <= ey - 2):
        return False
    return True


def cell_exists(coord: Coord, d: int) -> bool:
    ex, ey, ez = _lattice_extent(d)
    x, y, z = coord
    return (
        x % 2 == 1 and y % 2 == 1 and z % 2 == 1
        and 1 <= x <= ex - 1 and 1 <= y <= ey - 1 and 1 <= z <= ez - 1
    )


def vertex_check_exists(coord: Coord, d: int) -> bool:
    """Vertex-centred checks close everywhere except on the empty y-planes."""
    ex, ey, ez = _lattice_extent(d)
    x, y, z = coord
    return (
        x % 2 == 0 and y % 2 == 0 and z % 2 == 0
        and 0 <= x <= ex and 2 <= y <= ey - 2 and 0 <= z <= ez
    )


def iter_cells(d: int):
    ex, ey, ez = _lattice_extent(d)
    for x in range(1, ex, 2):
        for y in range(1, ey, 2):
            for z in range(1, ez, 2):
                yield (x, y, z)


@lru_cache(maxsize=8)
def build_ghz_network(d: int) -> GhzNetwork:
    """Measurement network for the d x d x (2d+1) block.

    Raises on even or out-of-range distances.  Interior sites end up with
    arity four; boundary sites keep their reduced arity and simply perform
    smaller cyclic measurements.
    """
    if d % 2 == 0:
        raise ValueError("distance must be odd")
    if not (3 <= d <= MAX_DISTANCE):
        raise ValueError(f"distance must lie in [3, {MAX_DISTANCE}]")
    ex, ey, ez = _lattice_extent(d)
    site_specs: list[tuple[Coord, str, int]] = []
    for coord in itertools.product(range(ex + 1), range(ey + 1), range(ez + 1)):
        info = classify(coord)
        if info is None or not qubit_exists(coord, d):
            continue
        site_specs.append((coord, info[0], info[1]))
    pairs: list[tuple[Coord, Coord]] = []
    for coord, kind, axis in site_specs:
        if kind != "face":
            continue
        for edge in rotation_neighbours(coord, axis):
            if qubit_exists(edge, d):
                pairs.append((coord, edge))
    return _finish_network(d, (ex, ey, ez), site_specs, pairs, allow_open=False)


# ---------------------------------------------------------------------------
# Fragments for exact derivations
# ---------------------------------------------------------------------------


def _cell_sites(cell: Coord) -> tuple[list[Coord], list[Coord]]:
    x, y, z = cell
    faces = [
        (x - 1, y, z), (x + 1, y, z),
        (x, y - 1, z), (x, y + 1, z),
        (x, y, z - 1), (x, y, z + 1),
    ]
    edges = [
        (x + dx, y + dy, z + dz)
        for dx, dy, dz in itertools.product((-1, 0, 1), repeat=3)
        if (dx, dy, dz).count(0) == 1
    ]
    return faces, edges


def _fragment_from_sites(face_coords, edge_coords, *, open_face_legs=False) -> GhzNetwork:
    faces = sorted(set(face_coords))
    edges = sorted(set(edge_coords))
    edge_set = set(edges)
    site_specs = [(c, "face", classify(c)[1]) for c in faces]
    site_specs += [(c, "edge", classify(c)[1]) for c in edges]
    pairs: list[tuple[Coord, Coord]] = []
    for f in faces:
        axis = classify(f)[1]
        for e in rotation_neighbours(f, axis):
            if e in edge_set or open_face_legs:
                pairs.append((f, e))
    return _finish_network(None, None, site_specs, pairs, allow_open=open_face_legs)


def single_site_fragment() -> GhzNetwork:
    """One four-way measurement site fed by four chains with open far ends."""
    edge = (2, 2, 1)
    faces = rotation_neighbours(edge, classify(edge)[1])
    site_specs = [(edge, "edge", classify(edge)[1])]
    pairs = [(f, edge) for f in faces]
    return _finish_network(None, None, site_specs, pairs, allow_open=True)


def unit_cell_fragment(cell: Coord = (1, 1, 1)) -> GhzNetwork:
    faces, edges = _cell_sites(cell)
    return _fragment_from_sites(faces, edges)


def two_cell_fragment(cell: Coord = (1, 1, 1)) -> GhzNetwork:
    x, y, z = cell
    f1, e1 = _cell_sites(cell)
    f2, e2 = _cell_sites((x + 2, y, z))
    return _fragment_from_sites(f1 + f2, e1 + e2)


def slice_fragment() -> GhzNetwork:
    """A 2x2 patch of one z-layer: plaquette-like faces with measured
    interior edges and open boundary legs."""
    faces = [(1, 1, 2), (1, 3, 2), (3, 1, 2), (3, 3, 2)]
    edges = [(2, 1, 2), (2, 3, 2), (1, 2, 2), (3, 2, 2)]
    return _fragment_from_sites(faces, edges, open_face_legs=True)


# ---------------------------------------------------------------------------
# Exact check-group derivation: intersection of the resource stabiliser
# group with the measurement outcome group
# ---------------------------------------------------------------------------

Outcome = tuple[str, int]  # ('zz', bell index) | ('xprod', site index)


@dataclass(frozen=True)
class Check:
    outcomes: frozenset[Outcome]
    parity: int


@dataclass
class CheckGroup:
    network: GhzNetwork
    checks: list[Check]
    _space: gf2.RowSpace  # span of the checks in outcome coordinates

    @property
    def rank(self) -> int:
        return len(self.checks)

    def outcome_sets(self) -> list[frozenset[Outcome]]:
        return [c.outcomes for c in self.checks]

    def _coord_vector(self, outcomes) -> np.ndarray:
        net = self.network
        bits = 0
        for kind, idx in outcomes:
            if kind == "zz":
                bits |= 1 << idx
            elif kind == "xprod":
                bits |= 1 << (len(net.bells) + idx)
            else:
                raise KeyError(f"unknown outcome kind {kind!r}")
        return gf2.pack_int(bits, net.num_outcomes)

    def contains(self, outcomes) -> bool:
        """Is the given outcome parity set an element of the check group?"""
        return self._space.contains(self._coord_vector(outcomes))

    def contains_many(self, outcome_sets) -> list[bool]:
        vecs = np.stack([self._coord_vector(o) for o in outcome_sets])
        residuals = self._space.reduce_block(vecs)
        return [not residuals[i].any() for i in range(residuals.shape[0])]

    def find_with_xprods(self, site_indices: set[int]) -> Check | None:
        """An element whose x-product support is exactly `site_indices`."""
        for c in self.checks:
            got = {i for kind, i in c.outcomes if kind == "xprod"}
            if got == site_indices:
                return c
        # Search the span: solve for a combination whose xprod block matches.
        net = self.network
        nx = len(net.sites)
        rows = []
        for c in self.checks:
            bits = 0
            for kind, i in c.outcomes:
                if kind == "xprod":
                    bits |= 1 << i
            rows.append(bits)
        target = 0
        for i in site_indices:
            target |= 1 << i
        combo = gf2.solve(gf2.pack_ints(rows, nx), nx, gf2.pack_int(target, nx))
        if combo is None:
            return None
        members: set[Outcome] = set()
        parity = 1
        for i, c in enumerate(self.checks):
            if gf2.get_bit(combo, i):
                members ^= c.outcomes
                parity *= c.parity
        return Check(frozenset(members), parity)


def _photon_count(net: GhzNetwork) -> int:
    return 4 * len(net.placements)


def _placement_end_at(site: Site) -> int:
    return _P1A if site.kind == "face" else _P2A


def _chain_rows(net: GhzNetwork) -> tuple[np.ndarray, list[PauliOperator]]:
    """Stabiliser generators of every doubled chain, packed and as operators."""
    photons = _photon_count(net)
    ncols = 2 * photons
    ops: list[PauliOperator] = []
    for p in net.placements:
        base = 4 * p.index
        x1a, x1b = 1 << (base + _P1A), 1 << (base + _P1B)
        x2a, x2b = 1 << (base + _P2A), 1 << (base + _P2B)
        ops.append(PauliOperator(photons, x1a | x1b, x2a))       # X1a X1b Z2a
        ops.append(PauliOperator(photons, x2a | x2b, x1a))       # Z1a X2a X2b
        ops.append(PauliOperator(photons, 0, x1a | x1b))         # Z1a Z1b
        ops.append(PauliOperator(photons, 0, x2a | x2b))         # Z2a Z2b
    rows = gf2.pack_ints([op.symplectic_vector() for op in ops], ncols)
    return rows, ops


def _outcome_rows(net: GhzNetwork) -> tuple[np.ndarray, list[PauliOperator]]:
    """Measurement generators: per Bell the xx row then the zz row."""
    photons = _photon_count(net)
    ncols = 2 * photons
    ops: list[PauliOperator] = []
    for b in net.bells:
        site = net.sites[b.site]
        a_off = _P1A if site.kind == "face" else _P2A
        b_off = _P1B if site.kind == "face" else _P2B
        pa = 4 * b.placement_a + a_off
        pb = 4 * b.placement_b + b_off
        ops.append(PauliOperator(photons, (1 << pa) | (1 << pb), 0))  # xx
        ops.append(PauliOperator(photons, 0, (1 << pa) | (1 << pb)))  # zz
    rows = gf2.pack_ints([op.symplectic_vector() for op in ops], ncols)
    return rows, ops


def derive_check_group(net: GhzNetwork) -> CheckGroup:
    """Exact derivation of the check group on any (small) network.

    Every element of the intersection is expressed over the measurement
    outcomes; x-type support always arrives in complete per-site cycles and
    is reported as the site's single x-product outcome.  Each check carries
    its deterministic parity: the relative sign between its expression as a
    product of chain stabilisers and as a product of outcome operators.
    """
    if net.has_open_ends() and not net.allow_open:
        raise DanglingEndError(
            "network has dangling resource ends; close the region or mark "
            "its boundaries open"
        )
    photons = _photon_count(net)
    ncols = 2 * photons
    r_rows, r_ops = _chain_rows(net)
    m_rows, m_ops = _outcome_rows(net)
    elements = gf2.intersect_spans(r_rows, m_rows, ncols)

    checks: list[Check] = []
    vectors: list[int] = []
    for _vec, combo_r, combo_m in elements:
        r_idx = [i for i in range(len(r_ops)) if gf2.get_bit(combo_r, i)]
        m_idx = [j for j in range(len(m_ops)) if gf2.get_bit(combo_m, j)]
        op_r = multiply_all([r_ops[i] for i in r_idx], photons)
        op_m = multiply_all([m_ops[j] for j in m_idx], photons)
        if (op_r.x_bits, op_r.z_bits) != (op_m.x_bits, op_m.z_bits):
            raise TemplateError("inconsistent intersection expressions")
        parity = op_r.sign * op_m.sign
        xx_bells = {j // 2 for j in m_idx if j % 2 == 0}
        zz_bells = {j // 2 for j in m_idx if j % 2 == 1}
        outcomes: set[Outcome] = {("zz", b) for b in zz_bells}
        by_site: dict[int, set[int]] = {}
        for b in xx_bells:
            by_site.setdefault(net.bells[b].site, set()).add(b)
        for site_idx, used in by_site.items():
            site = net.sites[site_idx]
            all_bells = set(
                range(
                    int(net.site_bell_start[site_idx]),
                    int(net.site_bell_start[site_idx + 1]),
                )
            )
            if used != all_bells:
                raise TemplateError(
                    f"partial x-cycle at site {site.coord}; x support must "
                    "arrive as whole site products"
                )
            outcomes.add(("xprod", site_idx))
        checks.append(Check(frozenset(outcomes), parity))
        bits = 0
        for kind, idx in checks[-1].outcomes:
            bits |= 1 << (idx if kind == "zz" else len(net.bells) + idx)
        vectors.append(bits)

    space = gf2.RowSpace(
        gf2.pack_ints(vectors, net.num_outcomes) if vectors else
        np.zeros((0, gf2.num_words(net.num_outcomes)), dtype=np.uint64),
        net.num_outcomes,
    )
    return CheckGroup(network=net, checks=checks, _space=space)


# ---------------------------------------------------------------------------
# Tiling rules: local consumers of every outcome
# ---------------------------------------------------------------------------


def _cube_for_zz(site: Site, net: GhzNetwork, slot: int) -> Coord | None:
    """Cell whose check consumes the zz outcome of (site, slot), if any.

    The consuming cell is determined by the two partner faces of the Bell
    pair; it exists iff f_i + f_{i+1} - site is an all-odd point.
    """
    k = site.arity
    pa = net.placements[site.placements[slot]]
    pb = net.placements[site.placements[(slot + 1) % k]]
    fa = net.sites[pa.face_site].coord if pa.face_site is not None else None
    fb = net.sites[pb.face_site].coord if pb.face_site is not None else None
    if fa is None or fb is None:
        return None
    cand = tuple(a + b - s for a, b, s in zip(fa, fb, site.coord))
    if all(c % 2 == 1 for c in cand):
        return cand
    return None


def _vertex_for_zz(site: Site, net: GhzNetwork, slot: int) -> Coord | None:
    """Vertex whose check consumes the zz outcome of a face site's Bell."""
    k = site.arity
    pa = net.placements[site.placements[slot]]
    pb = net.placements[site.placements[(slot + 1) % k]]
    ea = net.sites[pa.edge_site].coord if pa.edge_site is not None else None
    eb = net.sites[pb.edge_site].coord if pb.edge_site is not None else None
    if ea is None or eb is None:
        return None
    cand = tuple(a + b - s for a, b, s in zip(ea, eb, site.coord))
    if all(c % 2 == 0 for c in cand):
        return cand
    return None


def cell_check_outcomes(cell: Coord, net: GhzNetwork, exists=None) -> frozenset[Outcome]:
    """Tiled cell check: the x-products of the cell's faces plus one zz per
    cell edge, chosen as the Bell whose partner faces both belong to the cell.
    """
    if exists is None:
        exists = lambda c: c in net.coord_to_site
    faces, edges = _cell_sites(cell)
    outcomes: set[Outcome] = set()
    for f in faces:
        if exists(f):
            outcomes.add(("xprod", net.coord_to_site[f]))
    for e in edges:
        if not exists(e):
            continue
        site = net.sites[net.coord_to_site[e]]
        for slot in range(site.arity):
            if _cube_for_zz(site, net, slot) == cell:
                bell = int(net.site_bell_start[site.index]) + slot
                outcomes.add(("zz", bell))
                break  # reduced-arity sites repeat the same pair; use one
    return frozenset(outcomes)


def vertex_check_outcomes(vertex: Coord, net: GhzNetwork) -> frozenset[Outcome]:
    """Tiled vertex check: x-products of the vertex's edges plus one zz per
    surrounding face, chosen as the Bell whose partner edges meet the vertex."""
    outcomes: set[Outcome] = set()
    x, y, z = vertex
    for axis in range(3):
        for delta in (-1, 1):
            e = _step(vertex, axis, delta)
            if e in net.coord_to_site:
                outcomes.add(("xprod", net.coord_to_site[e]))
    for dx, dy, dz in itertools.product((-1, 1), repeat=3):
        for drop in range(3):
            f = [x + dx, y + dy, z + dz]
            f[drop] = vertex[drop]
            f = tuple(f)
            if classify(f) is None or f not in net.coord_to_site:
                continue
            site = net.sites[net.coord_to_site[f]]
            for slot in range(site.arity):
                if _vertex_for_zz(site, net, slot) == vertex:
                    bell = int(net.site_bell_start[site.index]) + slot
                    outcomes.add(("zz", bell))
                    break
    return frozenset(outcomes)


def diamond_check_outcomes(site: Site, net: GhzNetwork) -> frozenset[Outcome]:
    start = int(net.site_bell_start[site.index])
    return frozenset(("zz", start + slot) for slot in range(site.arity))


@lru_cache(maxsize=1)
def validate_template() -> dict[str, int]:
    """Re-derive the local template exactly and check the tiling rules.

    Returns the frozen template figures (ranks and degree counts); raises
    TemplateError when the generative algebra disagrees with the tiling.
    """
    # Single site: the only check is the parity of the site's zz outcomes.
    single = single_site_fragment()
    group = derive_check_group(single)
    dia = diamond_check_outcomes(single.sites[0], single)
    if group.rank != 1 or not group.contains(dia):
        raise TemplateError("four-way site must yield exactly the zz parity check")
    if group.checks[0].parity != 1:
        raise TemplateError("zz parity check must be deterministic +1")

    # Unit cell: diamonds at all sites plus the cell check.
    cell = (1, 1, 1)
    net = unit_cell_fragment(cell)
    group = derive_check_group(net)
    for site in net.sites:
        if not group.contains(diamond_check_outcomes(site, net)):
            raise TemplateError(f"missing zz parity check at {site.coord}")
    cube = cell_check_outcomes(cell, net, exists=lambda c: c in net.coord_to_site)
    if not group.contains(cube):
        raise TemplateError("tiled cell check is not in the derived group")
    xprods = {i for kind, i in cube if kind == "xprod"}
    zzs = {i for kind, i in cube if kind == "zz"}
    if len(xprods) != 6 or len(zzs) != 12:
        raise TemplateError("cell check must use 6 x-products and 12 zz outcomes")

    # Two cells: both cell checks coexist and use distinct zz outcomes at the
    # shared edges.
    net2 = two_cell_fragment(cell)
    group2 = derive_check_group(net2)
    cube_a = cell_check_outcomes((1, 1, 1), net2)
    cube_b = cell_check_outcomes((3, 1, 1), net2)
    if not group2.contains(cube_a) or not group2.contains(cube_b):
        raise TemplateError("adjacent cell checks are not both in the group")
    if {i for k, i in cube_a if k == "zz"} & {i for k, i in cube_b if k == "zz"}:
        raise TemplateError("adjacent cell checks may not share zz outcomes")

    return {
        "unit_cell_rank": group.rank,
        "two_cell_rank": group2.rank,
        "cell_xprod_degree": 6,
        "cell_zz_degree": 12,
    }


# ---------------------------------------------------------------------------
# Syndrome graphs
# ---------------------------------------------------------------------------


@dataclass
class SyndromeGraph:
    side: str  # 'primal' | 'dual'
    node_names: list[str]
    spanning: tuple[int, int]
    edges: list[tuple[int, str, int, int]]  # (outcome id, kind, node u, node v)
    node_outcomes: list[list[int]]
    endpoint_of: dict[int, tuple[int, int]]

    @property
    def num_nodes(self) -> int:
        return len(self.node_names)

    @property
    def outcome_ids(self) -> frozenset[int]:
        return frozenset(self.endpoint_of)

    def dump(self) -> str:
        lines = [
            f"edge {oid} {kind} {self.node_names[u]} {self.node_names[v]}"
            for oid, kind, u, v in sorted(self.edges)
        ]
        return "\n".join(lines) + "\n"


class _GraphBuilder:
    def __init__(self, side: str):
        self.side = side
        self.node_names: list[str] = []
        self.node_ids: dict[str, int] = {}
        self.edges: list[tuple[int, str, int, int]] = []

    def node(self, name: str) -> int:
        if name not in self.node_ids:
            self.node_ids[name] = len(self.node_names)
            self.node_names.append(name)
        return self.node_ids[name]

    def leaf(self, outcome_id: int) -> int:
        return self.node(f"leaf:{outcome_id}")

    def edge(self, outcome_id: int, kind: str, u: int, v: int):
        self.edges.append((outcome_id, kind, u, v))

    def build(self, spanning: tuple[int, int]) -> SyndromeGraph:
        node_outcomes: list[list[int]] = [[] for _ in self.node_names]
        endpoint_of: dict[int, tuple[int, int]] = {}
        for oid, kind, u, v in self.edges:
            node_outcomes[u].append(oid)
            node_outcomes[v].append(oid)
            endpoint_of[oid] = (u, v)
        return SyndromeGraph(
            side=self.side,
            node_names=self.node_names,
            spanning=spanning,
            edges=sorted(self.edges),
            node_outcomes=node_outcomes,
            endpoint_of=endpoint_of,
        )


def _coord_name(prefix: str, coord: Coord) -> str:
    return f"{prefix}:{coord[0]},{coord[1]},{coord[2]}"


@lru_cache(maxsize=8)
def build_syndrome_graphs(d: int) -> tuple[SyndromeGraph, SyndromeGraph]:
    """Tile the validated template over the full lattice.

    The primal graph holds the cell checks and the zz-parity checks of edge
    sites; its spanning terminals sit on the two x-boundaries.  The dual
    graph holds the vertex checks and the zz-parity checks of face sites;
    its spanning terminals sit on the two y-boundaries.  Remaining open ends
    go to per-outcome leaf nodes, which can never contribute to spanning.
    """
    validate_template()
    net = build_ghz_network(d)
    ex, ey, ez = net.extent

    primal = _GraphBuilder("primal")
    dual = _GraphBuilder("dual")
    for cell in iter_cells(d):
        primal.node(_coord_name("cube", cell))
    for site in net.sites:
        if site.kind == "edge":
            primal.node(_coord_name("dia", site.coord))
    west, east = primal.node("west"), primal.node("east")
    for x in range(0, ex + 1, 2):
        for y in range(2, ey - 1, 2):
            for z in range(0, ez + 1, 2):
                dual.node(_coord_name("vcube", (x, y, z)))
    for site in net.sites:
        if site.kind == "face":
            dual.node(_coord_name("dia", site.coord))
    south, north = dual.node("south"), dual.node("north")

    def cube_node(coord: Coord) -> int | None:
        if cell_exists(coord, d):
            return primal.node_ids[_coord_name("cube", coord)]
        return None

    def vertex_node(coord: Coord) -> int | None:
        if vertex_check_exists(coord, d):
            return dual.node_ids[_coord_name("vcube", coord)]
        return None

    # x-product outcomes.
    for site in net.sites:
        oid = net.xprod_outcome(site.index)
        a = _step(site.coord, site.axis, -1)
        b = _step(site.coord, site.axis, +1)
        if site.kind == "face":
            ends = []
            for cand in (a, b):
                node = cube_node(cand)
                if node is None:
                    if site.axis == 0:
                        node = west if cand[0] < 0 else east
                    else:
                        node = primal.leaf(oid)
                ends.append(node)
            primal.edge(oid, XPROD, ends[0], ends[1])
        else:
            ends = []
            for cand in (a, b):
                node = vertex_node(cand)
                if node is None:
                    if cand[1] <= 0:
                        node = south
                    elif cand[1] >= ey:
                        node = north
                    else:
                        node = dual.leaf(oid)
                ends.append(node)
            dual.edge(oid, XPROD, ends[0], ends[1])

    # zz outcomes.
    for site in net.sites:
        start = int(net.site_bell_start[site.index])
        dia_name = _coord_name("dia", site.coord)
        if site.kind == "edge":
            dia = primal.node_ids[dia_name]
            used: set[Coord] = set()
            for slot in range(site.arity):
                oid = start + slot
                cand = _cube_for_zz(site, net, slot)
                if cand is not None and cell_exists(cand, d) and cand not in used:
                    used.add(cand)
                    other = primal.node_ids[_coord_name("cube", cand)]
                elif site.coord[0] == 0:
                    other = west
                elif site.coord[0] == ex:
                    other = east
                else:
                    other = primal.leaf(oid)
                primal.edge(oid, ZZ, dia, other)
        else:
            dia = dual.node_ids[dia_name]
            for slot in range(site.arity):
                oid = start + slot
                cand = _vertex_for_zz(site, net, slot)
                if cand is not None and vertex_check_exists(cand, d):
                    other = dual.node_ids[_coord_name("vcube", cand)]
                elif site.coord[1] == 1:
                    other = south
                elif site.coord[1] == ey - 1:
                    other = north
                else:
                    raise TemplateError(
                        f"unattached zz outcome at face site {site.coord}"
                    )
                dual.edge(oid, ZZ, dia, other)

    graphs = (primal.build((west, east)), dual.build((south, north)))
    _check_graph_invariants(net, *graphs)
    return graphs


def _check_graph_invariants(net: GhzNetwork, primal: SyndromeGraph, dual: SyndromeGraph):
    all_ids = set(range(net.num_outcomes))
    p_ids, d_ids = set(primal.endpoint_of), set(dual.endpoint_of)
    if p_ids & d_ids or (p_ids | d_ids) != all_ids:
        raise TemplateError("outcome sets must partition between the graphs")
    for graph in (primal, dual):
        for oid, (u, v) in graph.endpoint_of.items():
            if u == v:
                raise TemplateError(f"outcome {oid} loops on one check")


class UnionFind:
    """Path-halving union-find over a fixed node range."""

    __slots__ = ("parent",)

    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)


@dataclass
class MergedChecks:
    """Supercheck structure after erasing a set of outcomes."""

    graph: SyndromeGraph
    _uf: UnionFind

    def component_of(self, node: int) -> int:
        return self._uf.find(node)

    def spanning_connected(self) -> bool:
        a, b = self.graph.spanning
        return self._uf.connected(a, b)

    def components(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for node in range(self.graph.num_nodes):
            out.setdefault(self._uf.find(node), []).append(node)
        return out


def erase_and_merge(graph: SyndromeGraph, erased) -> MergedChecks:
    """Union the two checks of every erased outcome (supercheck formation)."""
    uf = UnionFind(graph.num_nodes)
    for oid in erased:
        if oid not in graph.endpoint_of:
            raise KeyError(f"unknown outcome id {oid} for the {graph.side} graph")
        u, v = graph.endpoint_of[oid]
        uf.union(u, v)
    return MergedChecks(graph=graph, _uf=uf)
