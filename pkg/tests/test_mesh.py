import numpy as np
import pytest

from cnfem import mesh as M


def test_single_element_box():
    m = M.build_box_mesh((0, 0), (1, 1), 1, 1)
    assert m.nn == 4
    assert m.ne == 1
    assert m.boundary_node.all()
    assert list(M.boundary_elements(m)) == [0]


def test_box_counts():
    m = M.build_box_mesh((0, 0), (2, 1), 8, 4)
    assert m.nn == 45
    assert m.ne == 32


def test_box_counts_closed_form():
    for nx, ny in [(1, 1), (3, 5), (17, 9), (64, 64)]:
        m = M.build_box_mesh((0, 0), (1.5, 2.5), nx, ny)
        assert m.nn == (nx + 1) * (ny + 1)
        assert m.ne == nx * ny


def test_grid_alignment():
    m = M.build_box_mesh((0, 0.5), (2, 1), 8, 4)
    coords = set(map(tuple, np.round(m.nodes, 12)))
    assert (0.0, 0.5) in coords
    assert (0.0, 0.49) not in coords


def test_element_corner_consistency():
    m = M.build_box_mesh((0, 0), (2, 1), 8, 4)
    hx, hy = m.element_size
    corners = m.nodes[m.elements]
    # counter-clockwise from lower-left
    assert np.allclose(corners[:, 1] - corners[:, 0], [hx, 0])
    assert np.allclose(corners[:, 2] - corners[:, 1], [0, hy])
    assert np.allclose(corners[:, 3] - corners[:, 0], [0, hy])


def test_areas_sum_to_domain_area():
    m = M.build_box_mesh((0, 0), (2, 1), 8, 4)
    assert abs(m.ne * m.element_area - 2.0) < 1e-12 * 2.0
    tb = M.build_two_box_domain(M.DomainSpec(kind="two_box", nx=8, ny=4, ny2=8))
    assert abs(tb.ne * tb.element_area - 6.0) < 1e-12 * 6.0


def test_invalid_box_specs():
    with pytest.raises(M.InvalidSpecError):
        M.build_box_mesh((0, 0), (0.0, 1), 2, 2)
    with pytest.raises(M.InvalidSpecError):
        M.build_box_mesh((0, 0), (1, 1), 0, 2)


def test_boundary_elements_perimeter_count():
    m = M.build_box_mesh((0, 0), (2, 1), 8, 4)
    # perimeter count oracle: 2*nx + 2*ny - 4
    assert len(M.boundary_elements(m)) == 2 * 8 + 2 * 4 - 4
    # an interior element is not listed
    interior = [e for e in range(m.ne) if (m.neighbors[e] >= 0).all()]
    assert set(interior).isdisjoint(M.boundary_elements(m))
    assert len(interior) == (8 - 2) * (4 - 2)


def test_midpoints():
    m = M.build_box_mesh((0, 0), (2, 1), 8, 4)
    mids = M.element_midpoints(m)
    assert mids.shape == (m.ne, 2)
    assert np.allclose(mids[0], [0.125, 0.125])
    tb = M.build_two_box_domain(M.DomainSpec(kind="two_box", nx=8, ny=4, ny2=8))
    tmids = M.element_midpoints(tb)
    assert np.all((tmids[:, 0] > 0) & (tmids[:, 0] < 2))
    assert np.all((tmids[:, 1] > -1.5) & (tmids[:, 1] < 1.5))


class TestTwoBox:
    def test_default_model_counts(self):
        tb = M.build_two_box_domain(M.DomainSpec(kind="two_box", nx=8, ny=4, ny2=8))
        assert tb.ne == 32 + 64
        assert set(np.unique(tb.body_id)) == {0, 1}

    def test_interface_nodes_duplicated(self):
        tb = M.build_two_box_domain(M.DomainSpec(kind="two_box", nx=8, ny=4, ny2=8))
        # duplicate-coordinate scan: every interface node exists once per body
        rounded = list(map(tuple, np.round(tb.nodes, 12)))
        assert rounded.count((1.0, 0.5)) == 2
        interface = [c for c in rounded if c[1] == 0.5]
        assert len(interface) == 2 * 9

    def test_no_dof_sharing_between_bodies(self):
        tb = M.build_two_box_domain(M.DomainSpec(kind="two_box", nx=8, ny=4, ny2=8))
        nodes0 = set(tb.elements[tb.body_id == 0].ravel())
        nodes1 = set(tb.elements[tb.body_id == 1].ravel())
        assert nodes0.isdisjoint(nodes1)

    def test_per_body_boundary_flags(self):
        tb = M.build_two_box_domain(M.DomainSpec(kind="two_box", nx=8, ny=4, ny2=8))
        # interface nodes are boundary nodes of each body
        on_iface = np.isclose(tb.nodes[:, 1], 0.5)
        assert tb.boundary_node[on_iface].all()

    def test_overlapping_boxes_rejected(self):
        spec = M.DomainSpec(kind="two_box",
                            box1=((0, 2), (0.0, 1.5)), box2=((0, 2), (-1.5, 0.5)),
                            nx=8, ny=6, ny2=8)
        with pytest.raises(M.InvalidSpecError):
            M.build_two_box_domain(spec)

    def test_unequal_element_sizes_rejected(self):
        spec = M.DomainSpec(kind="two_box", nx=8, ny=4, ny2=6)
        with pytest.raises(M.InvalidSpecError):
            M.build_two_box_domain(spec)


class TestPincers:
    def test_connected_single_body(self):
        pm = M.build_pincers_domain(M.DomainSpec(kind="pincers", nx=25, ny=15))
        assert M._component_count(pm) == 1
        assert set(np.unique(pm.body_id)) == {0}

    def test_slot_midpoint_exclusion(self):
        pm = M.build_pincers_domain(M.DomainSpec(kind="pincers", nx=25, ny=15))
        mids = M.element_midpoints(pm)
        w = 0.05 + 0.2 * mids[:, 0]
        in_slot = (mids[:, 0] > 0) & (np.abs(mids[:, 1]) < w)
        assert not in_slot.any()

    def test_bounding_box(self):
        pm = M.build_pincers_domain(M.DomainSpec(kind="pincers", nx=25, ny=15))
        assert pm.nodes[:, 0].min() >= -3 - 1e-12
        assert pm.nodes[:, 0].max() <= 2 + 1e-12
        assert np.abs(pm.nodes[:, 1]).max() <= 1.5 + 1e-12

    def test_dirichlet_tag(self):
        pm = M.build_pincers_domain(M.DomainSpec(kind="pincers", nx=25, ny=15))
        tagged = pm.node_tags["dirichlet"]
        assert tagged.size > 0
        assert np.allclose(pm.nodes[tagged, 0], 0.0)
        assert np.all(np.abs(pm.nodes[tagged, 1]) < 0.5)

    def test_disconnecting_slot_rejected(self):
        # a slot wider than the half-height severs the arms completely
        spec = M.DomainSpec(kind="pincers", nx=25, ny=15,
                            slot_start=-3.0, slot_halfwidth=1.6, slot_slope=0.0)
        with pytest.raises(M.InvalidSpecError):
            M.build_pincers_domain(spec)

    def test_hinge_hole(self):
        pm = M.build_pincers_domain(
            M.DomainSpec(kind="pincers", nx=45, ny=27, hinge_radius=0.4))
        mids = M.element_midpoints(pm)
        assert np.all(np.hypot(mids[:, 0], mids[:, 1]) >= 0.4)
        assert M._component_count(pm) == 1


def test_build_domain_dispatch():
    assert M.build_domain(M.DomainSpec(kind="box", nx=2, ny=2)).ne == 4
    with pytest.raises(M.InvalidSpecError):
        M.build_domain(M.DomainSpec(kind="wedge"))


def test_mesh_json_roundtrip(tmp_path):
    import json
    pm = M.build_pincers_domain(M.DomainSpec(kind="pincers", nx=25, ny=15))
    path = tmp_path / "mesh.json"
    M.save_mesh_json(pm, path)
    data = json.loads(path.read_text())
    assert len(data["nodes"]) == pm.nn
    assert len(data["elements"]) == pm.ne
    assert data["element_size"] == [0.2, 0.2]
    assert len(data["node_tags"]["dirichlet"]) > 0
