"""Geometry tests: contraction maps, node sets, cells, locate."""

from fractions import Fraction

import pytest

from nel.errors import OutOfDomainError
from nel.geometry import (
    AffineMap,
    cells_and_measure,
    is_node,
    locate,
    node_set,
    phi_edge,
    phi_path,
)
from nel.index_space import Edge, Path, iter_paths


class TestEdgeMaps:
    def test_identity_for_top_edge(self):
        m = phi_edge(Edge(1, 2))
        assert (m.slope, m.shift) == (1, 0)

    def test_loop_edges(self):
        m = phi_edge(Edge(1, 1))
        assert m.image == (0, Fraction(1, 2))
        m2 = phi_edge(Edge(1, 1, prime=True))
        assert m2.image == (Fraction(1, 2), 1)

    def test_four_images_from_vertex_two(self):
        images = {phi_edge(e).image for e in
                  [Edge(2, 2), Edge(2, 3), Edge(2, 3, prime=True), Edge(2, 4)]}
        assert images == {
            (Fraction(1, 4), Fraction(3, 4)),
            (Fraction(0), Fraction(3, 4)),
            (Fraction(1, 4), Fraction(1)),
            (Fraction(0), Fraction(1)),
        }


class TestPathMaps:
    def test_known_wire_endpoints(self):
        m = phi_path(Path.from_edges([Edge(1, 2), Edge(2, 3)]))
        assert (m(0), m(1)) == (0, Fraction(3, 4))

    def test_empty_path_is_identity(self):
        m = phi_path(Path(1))
        assert (m.slope, m.shift) == (1, 0)

    def test_first_edge_outermost(self):
        # hand-composed: the first edge picks the coarse block, the
        # second refines inside it: phi_{e11}(phi_{e11'}(x)) = x/4 + 1/4
        m = phi_path(Path(1, "1p"))
        assert (m(0), m(1)) == (Fraction(1, 4), Fraction(1, 2))

    def test_slope_encodes_terminal_vertex(self):
        for p in iter_paths(3, 4):
            m = phi_path(p)
            assert m.slope == Fraction(p.terminal, 2**4 * 3)

    def test_positive_slope_orients_wires(self):
        for p in iter_paths(2, 3):
            m = phi_path(p)
            assert m(0) < m(1)


class TestNodeSets:
    def test_stage_zero(self):
        for i in (1, 2, 3, 7):
            assert node_set(i, 0).nodes == (0, 1)

    def test_known_node_sets(self):
        assert node_set(1, 2).nodes == (
            0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1
        )
        assert node_set(3, 1).nodes == (0, Fraction(1, 6), Fraction(5, 6), 1)

    def test_cardinalities(self):
        for n in range(0, 8):
            assert len(node_set(1, n)) == 2**n + 1
            for i in (2, 3, 5):
                assert len(node_set(i, n)) == 2 ** (n + 1)

    def test_left_right_split(self):
        ns = node_set(4, 2)
        quarter = Fraction(1, 4)
        assert all(x < quarter for x in ns.left)
        assert all(x > 1 - quarter for x in ns.right)
        with pytest.raises(ValueError):
            node_set(1, 2).left

    def test_nesting(self):
        for i in range(1, 9):
            for n in range(0, 10):
                coarse = set(node_set(i, n).nodes)
                fine = set(node_set(i, n + 1).nodes)
                assert coarse <= fine

    def test_nodes_equal_path_endpoint_union(self):
        for i in (1, 2, 3, 6):
            for n in range(0, 6):
                endpoints = set()
                for p in iter_paths(i, n):
                    m = phi_path(p)
                    endpoints.add(m(0))
                    endpoints.add(m(1))
                assert endpoints == set(node_set(i, n).nodes)

    def test_is_node(self):
        assert is_node(1, 3, Fraction(5, 8))
        assert not is_node(1, 3, Fraction(1, 3))
        assert is_node(3, 1, Fraction(5, 6))
        assert not is_node(3, 1, Fraction(1, 2))


class TestCellsAndMeasure:
    def test_interval_masses(self):
        cm = cells_and_measure(1, 3)
        assert cm.mass(0) == Fraction(1, 16)
        assert cm.mass(1) == Fraction(1, 16)
        assert cm.mass(Fraction(1, 2)) == Fraction(1, 8)
        assert cm.total_mass == 1

    def test_stage_zero_masses(self):
        cm = cells_and_measure(1, 0)
        assert cm.masses == (Fraction(1, 2), Fraction(1, 2))

    def test_split_space_masses(self):
        for i in (2, 3, 5):
            for n in (0, 1, 3):
                cm = cells_and_measure(i, n)
                assert set(cm.masses) == {Fraction(1, i * 2**n)}
                assert cm.total_mass == Fraction(2, i)

    def test_cells_tile_without_overlap(self):
        for i in (1, 2, 4):
            cm = cells_and_measure(i, 2)
            cells = sorted(cm.cells, key=lambda c: c.lo)
            for a, b in zip(cells, cells[1:]):
                assert a.hi <= b.lo
                if a.hi == b.lo:
                    assert not (a.include_hi and b.include_lo)


class TestLocate:
    def test_interval_examples(self):
        assert locate(1, 2, 0.30) == Fraction(1, 4)
        assert locate(1, 2, 0.95) == 1
        assert locate(1, 2, 0.0) == 0

    def test_cell_boundaries_are_bit_exact(self):
        # 3/8 is the boundary between the cells of 1/4 and 1/2
        assert locate(1, 2, Fraction(3, 8)) == Fraction(1, 2)
        assert locate(2, 1, Fraction(1, 4)) == Fraction(1, 4)
        assert locate(2, 1, Fraction(3, 4)) == Fraction(3, 4)

    def test_gap_and_exclusions(self):
        with pytest.raises(OutOfDomainError):
            locate(3, 1, 0.5)
        with pytest.raises(OutOfDomainError):
            locate(2, 3, Fraction(1, 2))
        with pytest.raises(OutOfDomainError):
            locate(3, 2, Fraction(1, 3))  # uncovered endpoint of the arm
        with pytest.raises(OutOfDomainError):
            locate(1, 1, 1.5)

    def test_locate_agrees_with_cells(self):
        for i in (1, 2, 3):
            cm = cells_and_measure(i, 3)
            for node, cell in zip(cm.nodes, cm.cells):
                mid = (cell.lo + cell.hi) / 2
                assert locate(i, 3, mid) == node
                if cell.include_lo:
                    assert locate(i, 3, cell.lo) == node
                if cell.include_hi:
                    assert locate(i, 3, cell.hi) == node
