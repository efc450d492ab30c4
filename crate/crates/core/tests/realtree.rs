use std::f64::consts::PI;

use hopf_atlas::polyfield::SymmetricFamily;
use hopf_atlas::quaddiff::Foliation;
use hopf_atlas::realtree::{build_family_tree, measure_edge_numeric, tree_distance, PointOnTree, VertexLabel};
use proptest::prelude::*;

fn fam(m: u32, a: f64, b: f64) -> SymmetricFamily {
    SymmetricFamily::new(m, a, b).unwrap()
}

#[test]
fn outer_distances() {
    let t = build_family_tree(&fam(2, 0.0, 1.0), Foliation::Vertical);
    let (u, v) = (t.outer_vertex(0).unwrap(), t.outer_vertex(1).unwrap());
    let d = tree_distance(&t, PointOnTree::Vertex(u), PointOnTree::Vertex(v)).unwrap();
    assert!((d - PI / 3.0).abs() < 1e-12);
    assert_eq!(tree_distance(&t, PointOnTree::Vertex(u), PointOnTree::Vertex(u)).unwrap(), 0.0);

    let t = build_family_tree(&fam(1, 0.0, 2.0), Foliation::Vertical);
    let (u, v) = (t.outer_vertex(0).unwrap(), t.outer_vertex(1).unwrap());
    let d = tree_distance(&t, PointOnTree::Vertex(u), PointOnTree::Vertex(v)).unwrap();
    assert!((d - PI).abs() < 1e-12);
    assert!(t.vertices.iter().any(|v| v.label == VertexLabel::Midpoint && v.multiplicity == 0));
}

#[test]
fn numeric_edge_examples() {
    assert!((measure_edge_numeric(&fam(2, 0.0, 1.0), 0).unwrap() - PI / 6.0).abs() < 1e-8);
    assert!(measure_edge_numeric(&fam(1, 5.0, 0.0), 0).unwrap().abs() < 1e-8);
    assert!((measure_edge_numeric(&fam(2, 7.0, 1.0), 1).unwrap() - PI / 6.0).abs() < 1e-8);
}

#[test]
fn numeric_edges_match_closed_form_on_the_grid() {
    for m in 1..=6u32 {
        for a in [-3.0, 0.0, 7.0] {
            for b in [0.5, -0.5, 2.0, -2.0] {
                let f = fam(m, a, b);
                for k in 0..=m as usize {
                    let e = measure_edge_numeric(&f, k).unwrap();
                    assert!((e - PI * b.abs() / (2.0 * (m as f64 + 1.0))).abs() < 1e-8, "{m} {a} {b} {k}");
                }
            }
        }
    }
}

#[test]
fn collapsed_tree_has_all_rays_on_one_vertex() {
    let t = build_family_tree(&fam(3, 0.0, 0.0), Foliation::Vertical);
    assert!(t.finite_edges.is_empty());
    assert_eq!(t.vertices.len(), 1);
    assert_eq!(t.infinite_edges.len(), 8);
}

#[test]
fn horizontal_tree_swaps_the_roles_of_a_and_b() {
    for m in 1..=4u32 {
        let h = build_family_tree(&fam(m, 1.3, -0.4), Foliation::Horizontal);
        let v = build_family_tree(&fam(m, -0.4, 1.3), Foliation::Vertical);
        let lengths = |t: &hopf_atlas::realtree::MetricTree| {
            let mut l: Vec<f64> = t.merged_edges().iter().map(|e| e.2).collect();
            l.sort_by(f64::total_cmp);
            l
        };
        assert_eq!(lengths(&h), lengths(&v));
        assert_eq!(h.infinite_edges.len(), v.infinite_edges.len());
    }
}

#[test]
fn ray_zero_contains_the_positive_real_axis() {
    for m in 1..=4u32 {
        let t = build_family_tree(&fam(m, 0.0, 1.0), Foliation::Vertical);
        let ray0 = t.infinite_edges.iter().find(|r| r.ray == 0).unwrap();
        assert_eq!(ray0.direction, 0.0);
    }
}

fn arb_point(n_edges: usize, n_rays: usize, n_vertices: usize) -> impl Strategy<Value = PointOnTree> {
    prop_oneof![
        (0..n_vertices).prop_map(PointOnTree::Vertex),
        (0..n_edges.max(1), 0.0..1.0f64).prop_map(|(edge, t)| PointOnTree::Finite { edge, offset: t }),
        (0..n_rays, 0.0..5.0f64).prop_map(|(ray, offset)| PointOnTree::Infinite { ray, offset }),
    ]
}

proptest! {
    #[test]
    fn leaves_match_end_domains(m in 1u32..8, b in prop_oneof![-4.0..-0.1f64, 0.1..4.0f64]) {
        let t = build_family_tree(&fam(m, 0.0, b), Foliation::Vertical);
        prop_assert_eq!(t.infinite_edges.len(), 2 * m as usize + 2);
    }

    #[test]
    fn tree_metric_is_zero_hyperbolic(
        pts in (1u32..5).prop_flat_map(|m| {
            let n = m as usize + 1;
            let (edges, rays, verts) = (n, 2 * n, n + 1);
            (Just(m), proptest::collection::vec(arb_point(edges, rays, verts), 4))
        })
    ) {
        let (m, pts) = pts;
        let t = build_family_tree(&fam(m, 0.0, 2.0), Foliation::Vertical);
        let scale = |p: PointOnTree| match p {
            PointOnTree::Finite { edge, offset } if edge < t.finite_edges.len() => {
                Some(PointOnTree::Finite { edge, offset: offset * t.finite_edges[edge].length })
            }
            PointOnTree::Finite { .. } => None,
            PointOnTree::Vertex(v) if v < t.vertices.len() => Some(p),
            PointOnTree::Vertex(_) => None,
            other => Some(other),
        };
        let pts: Vec<PointOnTree> = pts.into_iter().filter_map(scale).collect();
        prop_assume!(pts.len() == 4);
        let d = |i: usize, j: usize| tree_distance(&t, pts[i], pts[j]).unwrap();
        let mut sums = [d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2)];
        sums.sort_by(f64::total_cmp);
        prop_assert!((sums[2] - sums[1]).abs() < 1e-9);
    }
}
