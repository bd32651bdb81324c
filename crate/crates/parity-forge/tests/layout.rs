use parity_forge::cost::{n_data, n_qubits, Connectivity};
use parity_forge::layout::*;
use std::collections::{HashMap, HashSet};

fn nn(m: u32) -> UnfoldedLayout {
    build_layout(m, Connectivity::NearestNeighbour, TargetMode::Ideal).unwrap()
}

fn count_kind(layout: &UnfoldedLayout, kind: StabilizerKind) -> usize {
    layout.stabilizers.iter().filter(|s| s.kind == kind).count()
}

#[test]
fn bulk_plaquette_counts() {
    for (m, qubits, plaquettes) in [(4, 16, 9), (5, 32, 21), (6, 64, 49)] {
        let b = build_bulk(m).unwrap();
        assert_eq!(b.n_bulk(), qubits);
        assert_eq!(count_kind(&b, StabilizerKind::Bulk), plaquettes);
    }
    let b = build_bulk(5).unwrap();
    assert_eq!((b.grid.rows(), b.grid.cols()), (4, 8));
    assert!(matches!(build_bulk(3), Err(parity_forge::Error::Unsupported(_))));
}

#[test]
fn m4_has_one_boundary_stabilizer_per_side_type() {
    let layout = distribute_boundaries(attach_boundaries(build_bulk(4).unwrap()));
    let edges: Vec<(Edge, u32, i64)> = layout
        .stabilizers
        .iter()
        .filter(|s| s.kind == StabilizerKind::BoundaryLogical)
        .map(|s| (s.edge.unwrap(), s.w.unwrap(), s.t.unwrap()))
        .collect();
    assert_eq!(edges, vec![(Edge::Top, 2, 0), (Edge::Right, 2, 0)]);
}

#[test]
fn m6_distribution_splits_top_and_bottom() {
    let layout = distribute_boundaries(attach_boundaries(build_bulk(6).unwrap()));
    let mut per_edge: HashMap<Edge, usize> = HashMap::new();
    for s in layout.stabilizers.iter().filter(|s| s.kind == StabilizerKind::BoundaryLogical) {
        *per_edge.entry(s.edge.unwrap()).or_default() += 1;
    }
    assert_eq!(per_edge[&Edge::Top], 2);
    assert_eq!(per_edge[&Edge::Bottom], 2);
    assert_eq!(per_edge[&Edge::Left] + per_edge[&Edge::Right], 4);
}

#[test]
fn boundary_stabilizers_pair_shape() {
    for l in 2..=8 {
        let stabs = boundary_stabilizers(l);
        assert_eq!(stabs.len(), (1usize << l) - l as usize - 1);
        for s in &stabs {
            let [i, i1, j, j1] = s.positions;
            assert_eq!((i1, j1, j - i), (i + 1, j + 1, s.w as usize));
            assert!(i >= 1 && j1 <= 1 << l);
        }
        for s in 1..l {
            let w = 1u32 << s;
            assert_eq!(stabs.iter().filter(|b| b.w == w).count(), (1usize << (l - s)) - 1);
        }
    }
}

#[test]
fn boundary_stabilizers_share_pairs_only_on_unit_shift() {
    for l in 2..=8 {
        let stabs = boundary_stabilizers(l);
        for (a, x) in stabs.iter().enumerate() {
            for y in &stabs[a + 1..] {
                let px: HashSet<usize> = [x.positions[0], x.positions[2]].into();
                let py: HashSet<usize> = [y.positions[0], y.positions[2]].into();
                if px.intersection(&py).next().is_some() {
                    assert_eq!(x.w, y.w);
                    assert_eq!((x.t - y.t).abs(), 1);
                }
            }
        }
    }
}

#[test]
fn nearest_neighbour_builds_for_all_supported_m() {
    for m in 4..=10 {
        let layout = nn(m);
        let k = m - 2;
        let data = layout.data_qubits().len() as u64;
        assert_eq!(data, n_data(k).unwrap(), "data qubits for m = {m}");
        assert_eq!(layout.qubits.len() as u64, n_qubits(k, Connectivity::NearestNeighbour).unwrap());
    }
}

#[test]
fn long_range_qubit_count() {
    for m in 4..=10 {
        let layout = build_layout(m, Connectivity::LongRange, TargetMode::Ideal).unwrap();
        assert_eq!(layout.qubits.len() as u64, n_qubits(m - 2, Connectivity::LongRange).unwrap());
    }
}

#[test]
fn composite_parts_are_local() {
    for m in 4..=10 {
        let layout = nn(m);
        let mut squares = HashSet::new();
        for s in layout.measured_stabilizers() {
            let spec = &layout.stabilizers[s];
            assert!(spec.support.len() <= 4);
            let a = &layout.qubits[spec.ancilla.unwrap()];
            assert!(squares.insert((a.row.to_bits(), a.col.to_bits())), "shared square in m = {m}");
            for &q in &spec.support {
                let d = &layout.qubits[q];
                assert!((d.row - a.row).abs() <= 0.5 && (d.col - a.col).abs() <= 0.5);
            }
        }
        let mut positions = HashSet::new();
        for q in &layout.qubits {
            assert!(
                positions.insert((q.row.to_bits(), q.col.to_bits())),
                "overlapping qubits in m = {m}"
            );
        }
    }
}

#[test]
fn composite_ancilla_heights_stay_logarithmic() {
    for m in 4..=10 {
        let layout = nn(m);
        let max_w = 1i32 << (m.div_ceil(2) - 1);
        let top = layout
            .qubits
            .iter()
            .filter(|q| q.role == Role::BoundaryAncillaData)
            .map(|q| q.layer.abs())
            .max()
            .unwrap();
        assert!(top <= max_w.trailing_zeros() as i32, "m = {m}: height {top}");
    }
}

#[test]
fn m4_data_qubits() {
    let layout = nn(4);
    assert_eq!(layout.data_qubits().len(), 20);
    let ancilla_data = layout.qubits.iter().filter(|q| q.role == Role::BoundaryAncillaData).count();
    assert_eq!(ancilla_data, 4);
    // S(2,0) on each side type: two ancilla-data qubits and three parts
    assert_eq!(count_kind(&layout, StabilizerKind::BoundaryCompositePart), 6);
}
