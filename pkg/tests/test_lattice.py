"""Network geometry, generative check derivation and syndrome graphs."""

import itertools

import pytest

from ghzloss import gf2
from ghzloss.lattice import (
    ZZ,
    XPROD,
    DanglingEndError,
    build_ghz_network,
    build_syndrome_graphs,
    cell_check_outcomes,
    cell_exists,
    derive_check_group,
    diamond_check_outcomes,
    erase_and_merge,
    single_site_fragment,
    slice_fragment,
    two_cell_fragment,
    unit_cell_fragment,
    validate_template,
    vertex_check_exists,
)

# Frozen after the first exact derivations; see the golden tests below.
GOLDEN_UNIT_CELL_RANK = 26
GOLDEN_TWO_CELL_RANK = 44
GOLDEN_SLICE_RANK = 9
GOLDEN_D3_RANK = 526


def independent_site_count(d: int) -> int:
    """Closed-form face and edge counts of the block, derived separately."""
    L = 2 * d + 1
    x_faces = (d + 1) * d * L
    y_faces = (d - 1) * d * L
    z_faces = d * d * (L + 1)
    x_edges = d * (d - 1) * (L + 1)
    y_edges = (d + 1) * d * (L + 1)
    z_edges = (d + 1) * (d - 1) * L
    return x_faces + y_faces + z_faces + x_edges + y_edges + z_edges


class TestNetworkGeometry:
    def test_rejects_even_or_small_distance(self):
        with pytest.raises(ValueError):
            build_ghz_network(4)
        with pytest.raises(ValueError):
            build_ghz_network(1)

    def test_site_count_matches_independent_enumeration(self):
        for d in (3, 5):
            net = build_ghz_network(d)
            assert len(net.sites) == independent_site_count(d)

    def test_interior_sites_have_arity_four(self):
        net = build_ghz_network(3)
        ex, ey, ez = net.extent
        for site in net.sites:
            x, y, z = site.coord
            if 1 <= x <= ex - 1 and 2 <= y <= ey - 2 and 1 <= z <= ez - 1:
                assert site.arity == 4, site.coord

    def test_boundary_sites_have_reduced_arity(self):
        net = build_ghz_network(3)
        arities = {net.sites[net.coord_to_site[c]].arity for c in [(0, 1, 1), (1, 1, 0)]}
        assert arities == {3}
        assert net.sites[net.coord_to_site[(0, 1, 0)]].arity == 2

    def test_dimensions_scale_with_distance(self):
        net = build_ghz_network(3)
        assert net.extent == (6, 6, 14)
        cells = [c for c in itertools.product(range(7), range(7), range(15))
                 if cell_exists(c, 3)]
        assert len(cells) == 3 * 3 * 7

    def test_bell_pairing_is_cyclic(self):
        net = build_ghz_network(3)
        site = next(s for s in net.sites if s.arity == 4)
        bells = net.bells[net.site_bell_start[site.index]:net.site_bell_start[site.index + 1]]
        assert [b.slot for b in bells] == [0, 1, 2, 3]
        for b in bells:
            assert b.placement_a == site.placements[b.slot]
            assert b.placement_b == site.placements[(b.slot + 1) % 4]


class TestDeriveCheckGroup:
    def test_single_site_yields_only_the_zz_parity(self):
        group = derive_check_group(single_site_fragment())
        assert group.rank == 1
        (check,) = group.checks
        assert {k for k, _ in check.outcomes} == {"zz"}
        assert len(check.outcomes) == 4
        assert check.parity == 1

    def test_dangling_ends_rejected_without_open_marking(self):
        net = single_site_fragment()
        net.allow_open = False
        with pytest.raises(DanglingEndError):
            derive_check_group(net)

    def test_unit_cell_rank_and_members(self):
        net = unit_cell_fragment()
        group = derive_check_group(net)
        assert group.rank == GOLDEN_UNIT_CELL_RANK
        for site in net.sites:
            assert group.contains(diamond_check_outcomes(site, net))
        cube = cell_check_outcomes((1, 1, 1), net)
        assert group.contains(cube)
        assert sum(1 for k, _ in cube if k == "xprod") == 6
        assert sum(1 for k, _ in cube if k == "zz") == 12

    def test_unit_cell_volume_check_emerges(self):
        net = unit_cell_fragment()
        group = derive_check_group(net)
        face_ids = {s.index for s in net.sites if s.kind == "face"}
        found = group.find_with_xprods(face_ids)
        assert found is not None
        assert found.parity == 1

    def test_two_cell_checks_share_no_zz(self):
        net = two_cell_fragment()
        group = derive_check_group(net)
        assert group.rank == GOLDEN_TWO_CELL_RANK
        a = cell_check_outcomes((1, 1, 1), net)
        b = cell_check_outcomes((3, 1, 1), net)
        assert group.contains(a) and group.contains(b)
        assert not ({i for k, i in a if k == "zz"} & {i for k, i in b if k == "zz"})

    def test_slice_fragment_star_structure(self):
        net = slice_fragment()
        group = derive_check_group(net)
        assert group.rank == GOLDEN_SLICE_RANK
        edge_ids = {s.index for s in net.sites if s.kind == "edge"}
        star = group.find_with_xprods(edge_ids)
        assert star is not None
        # One zz per plaquette-like face joins the four x-products.
        zz_sites = {net.bells[i].site for k, i in star.outcomes if k == "zz"}
        face_ids = {s.index for s in net.sites if s.kind == "face"}
        assert zz_sites == face_ids

    def test_template_validation_passes(self):
        figures = validate_template()
        assert figures["cell_xprod_degree"] == 6
        assert figures["cell_zz_degree"] == 12


@pytest.fixture(scope="module")
def graphs_d3():
    return build_syndrome_graphs(3)


@pytest.fixture(scope="module")
def net_d3():
    return build_ghz_network(3)


class TestSyndromeGraphs:
    def test_outcome_partition(self, graphs_d3, net_d3):
        primal, dual = graphs_d3
        p_ids, d_ids = primal.outcome_ids, dual.outcome_ids
        assert not (p_ids & d_ids)
        assert p_ids | d_ids == set(range(net_d3.num_outcomes))

    def test_every_outcome_has_two_distinct_endpoints(self, graphs_d3):
        for graph in graphs_d3:
            for oid, (u, v) in graph.endpoint_of.items():
                assert u != v

    def test_bulk_outcomes_connect_real_checks(self, graphs_d3):
        primal, dual = graphs_d3
        virtual = {"west", "east", "south", "north", "leaf"}
        for graph in graphs_d3:
            for oid, kind, u, v in graph.edges:
                roles = {graph.node_names[n].split(":")[0] for n in (u, v)}
                assert len(roles & {"cube", "vcube", "dia"}) >= 1

    def test_interior_degree_profile(self, graphs_d3):
        primal, dual = graphs_d3
        from collections import Counter

        def degree(graph, name):
            nid = graph.node_names.index(name)
            return Counter(k for _o, k, u, v in graph.edges if nid in (u, v))

        assert degree(primal, "cube:3,3,7") == {ZZ: 12, XPROD: 6}
        assert degree(dual, "vcube:2,4,6") == {ZZ: 12, XPROD: 6}
        assert degree(primal, "dia:3,4,6")[ZZ] == 4
        assert degree(dual, "dia:3,4,7")[ZZ] == 4

    def test_spanning_terminals(self, graphs_d3):
        primal, dual = graphs_d3
        assert [primal.node_names[i] for i in primal.spanning] == ["west", "east"]
        assert [dual.node_names[i] for i in dual.spanning] == ["south", "north"]

    def test_deterministic_serialisation(self, graphs_d3):
        build_syndrome_graphs.cache_clear()
        rebuilt = build_syndrome_graphs(3)
        for a, b in zip(graphs_d3, rebuilt):
            assert a.dump() == b.dump()

    def test_primal_dual_translation_symmetry(self, graphs_d3, net_d3):
        # Interior cells map onto interior vertices under a unit diagonal
        # shift; both carry 6 x-product and 12 zz attachments.
        primal, dual = graphs_d3
        shift = (1, 1, 1)
        for cell in [(1, 3, 5), (3, 3, 7), (3, 3, 9)]:
            vertex = tuple(c + s for c, s in zip(cell, shift))
            assert cell_exists(cell, 3) and vertex_check_exists(vertex, 3)
            pn = primal.node_names.index(f"cube:{cell[0]},{cell[1]},{cell[2]}")
            dn = dual.node_names.index(f"vcube:{vertex[0]},{vertex[1]},{vertex[2]}")
            assert len(primal.node_outcomes[pn]) == len(dual.node_outcomes[dn]) == 18

    def test_graph_dump_format(self, graphs_d3):
        primal, _ = graphs_d3
        line = primal.dump().splitlines()[0]
        parts = line.split()
        assert parts[0] == "edge" and parts[2] in (ZZ, XPROD) and len(parts) == 5

    def test_graph_dump_matches_golden(self, graphs_d3):
        from pathlib import Path

        golden = Path(__file__).parent / "golden"
        primal, dual = graphs_d3
        assert primal.dump() == (golden / "graph_d3_primal.txt").read_text()
        assert dual.dump() == (golden / "graph_d3_dual.txt").read_text()


@pytest.fixture(scope="module")
def exact_group(net_d3):
    return derive_check_group(net_d3)


@pytest.mark.slow
class TestWholeLatticeOracle:
    """Tiled graphs against the exact whole-lattice derivation at d = 3."""

    def real_check_sets(self, graph, net):
        out = []
        for nid, name in enumerate(graph.node_names):
            if name.split(":")[0] in ("cube", "vcube", "dia"):
                members = frozenset(
                    ("zz", o) if o < len(net.bells) else ("xprod", o - len(net.bells))
                    for o in graph.node_outcomes[nid]
                )
                out.append(members)
        return out

    def test_rank_is_frozen_golden(self, exact_group):
        assert exact_group.rank == GOLDEN_D3_RANK

    def test_every_tiled_check_is_derived(self, graphs_d3, net_d3, exact_group):
        primal, dual = graphs_d3
        tiled = self.real_check_sets(primal, net_d3) + self.real_check_sets(dual, net_d3)
        assert len(tiled) == GOLDEN_D3_RANK - 1
        flags = exact_group.contains_many(tiled)
        assert all(flags)

    def test_tiled_plus_boundary_spans_everything(self, graphs_d3, net_d3, exact_group):
        primal, dual = graphs_d3
        tiled = self.real_check_sets(primal, net_d3) + self.real_check_sets(dual, net_d3)

        def bits(members):
            b = 0
            for kind, idx in members:
                b |= 1 << (idx if kind == "zz" else len(net_d3.bells) + idx)
            return b

        north = frozenset(
            ("zz", o) if o < len(net_d3.bells) else ("xprod", o - len(net_d3.bells))
            for o in dual.node_outcomes[dual.node_names.index("north")]
        )
        assert exact_group.contains(north)
        rows = gf2.pack_ints([bits(t) for t in tiled] + [bits(north)], net_d3.num_outcomes)
        assert gf2.rank_of(rows, net_d3.num_outcomes) == GOLDEN_D3_RANK

    def test_open_x_boundary_parity_not_deterministic(self, graphs_d3, net_d3, exact_group):
        primal, _ = graphs_d3
        west = frozenset(
            ("zz", o) if o < len(net_d3.bells) else ("xprod", o - len(net_d3.bells))
            for o in primal.node_outcomes[primal.node_names.index("west")]
        )
        assert not exact_group.contains(west)


class TestEraseAndMerge:
    def test_empty_erasure_keeps_singletons(self, graphs_d3):
        primal, _ = graphs_d3
        merged = erase_and_merge(primal, set())
        assert len(merged.components()) == primal.num_nodes
        assert not merged.spanning_connected()

    def test_single_bulk_edge_merges_its_two_checks(self, graphs_d3):
        primal, _ = graphs_d3
        oid, kind, u, v = next(e for e in primal.edges if e[1] == XPROD)
        merged = erase_and_merge(primal, {oid})
        assert merged.component_of(u) == merged.component_of(v)
        assert len(merged.components()) == primal.num_nodes - 1

    def test_unknown_outcome_rejected(self, graphs_d3):
        primal, _ = graphs_d3
        with pytest.raises(KeyError):
            erase_and_merge(primal, {10**9})

    def test_boundary_to_boundary_path(self, graphs_d3, net_d3):
        primal, _ = graphs_d3
        path = {
            net_d3.xprod_outcome(net_d3.coord_to_site[(x, 3, 7)])
            for x in (0, 2, 4, 6)
        }
        merged = erase_and_merge(primal, path)
        assert merged.spanning_connected()
        merged = erase_and_merge(primal, set(list(sorted(path))[:-1]))
        assert not merged.spanning_connected()
