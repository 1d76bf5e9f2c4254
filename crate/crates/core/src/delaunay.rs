//! Intra-frame adjacency edges: Delaunay triangulation of segment centroids.
//!
//! Degenerate inputs get explicit handling so every frame still contributes
//! a connected edge set: two or fewer points give the trivial edges, and
//! collinear point sets are chained between coordinate-sorted neighbors.

use std::collections::BTreeSet;

use delaunator::{triangulate, Point};

use crate::segment::Segment;
use crate::Real;

/// Undirected Delaunay edges over arbitrary points, as index pairs (i < j).
pub fn delaunay_edges(points: &[(Real, Real)]) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    if n == 2 {
        return vec![(0, 1)];
    }

    // exact-duplicate positions join their first occurrence with an edge and
    // participate in the triangulation once
    let mut rep_of: Vec<usize> = (0..n).collect();
    let mut uniques: Vec<usize> = Vec::new();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    'outer: for i in 0..n {
        for &u in &uniques {
            if points[u] == points[i] {
                rep_of[i] = u;
                edges.insert((u.min(i), u.max(i)));
                continue 'outer;
            }
        }
        uniques.push(i);
    }

    if uniques.len() == 1 {
        return edges.into_iter().collect();
    }
    if uniques.len() == 2 || all_collinear(points, &uniques) {
        chain_collinear(points, &uniques, &mut edges);
        return edges.into_iter().collect();
    }

    let pts: Vec<Point> = uniques
        .iter()
        .map(|&i| Point { x: points[i].0, y: points[i].1 })
        .collect();
    let tri = triangulate(&pts);
    if tri.triangles.is_empty() {
        // numerically collinear beyond the exact test
        chain_collinear(points, &uniques, &mut edges);
        return edges.into_iter().collect();
    }
    for t in tri.triangles.chunks(3) {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let (i, j) = (uniques[a], uniques[b]);
            edges.insert((i.min(j), i.max(j)));
        }
    }
    edges.into_iter().collect()
}

/// Edges between segments of one frame; indices refer to `segments`.
pub fn delaunay_intra_edges(segments: &[Segment]) -> Vec<(usize, usize)> {
    debug_assert!(segments.windows(2).all(|w| w[0].frame_index == w[1].frame_index));
    let pts: Vec<(Real, Real)> = segments.iter().map(|s| s.centroid_px).collect();
    delaunay_edges(&pts)
}

fn all_collinear(points: &[(Real, Real)], uniques: &[usize]) -> bool {
    let (ax, ay) = points[uniques[0]];
    let (bx, by) = points[uniques[1]];
    uniques[2..].iter().all(|&i| {
        let (px, py) = points[i];
        let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
        cross == 0.0
    })
}

fn chain_collinear(
    points: &[(Real, Real)],
    uniques: &[usize],
    edges: &mut BTreeSet<(usize, usize)>,
) {
    let mut order: Vec<usize> = uniques.to_vec();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[a].1.total_cmp(&points[b].1))
    });
    for w in order.windows(2) {
        let (i, j) = (w[0].min(w[1]), w[0].max(w[1]));
        edges.insert((i, j));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_gives_three_edges() {
        let pts = [(0.0, 0.0), (10.0, 0.0), (5.0, 8.0)];
        let edges = delaunay_edges(&pts);
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn square_gives_five_edges() {
        let pts = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
        let edges = delaunay_edges(&pts);
        assert_eq!(edges.len(), 5);
        // all four hull edges present; either diagonal is a valid tie-break
        for e in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            assert!(edges.contains(&e), "missing hull edge {e:?}");
        }
    }

    #[test]
    fn degenerate_counts() {
        assert!(delaunay_edges(&[]).is_empty());
        assert!(delaunay_edges(&[(1.0, 2.0)]).is_empty());
        assert_eq!(delaunay_edges(&[(0.0, 0.0), (3.0, 1.0)]), vec![(0, 1)]);
    }

    #[test]
    fn collinear_points_chain_in_order() {
        let pts = [(4.0, 4.0), (0.0, 0.0), (2.0, 2.0), (6.0, 6.0)];
        let edges = delaunay_edges(&pts);
        assert_eq!(edges, vec![(0, 2), (0, 3), (1, 2)]);
    }

    #[test]
    fn duplicate_points_attach_to_first_occurrence() {
        let pts = [(0.0, 0.0), (10.0, 0.0), (5.0, 8.0), (10.0, 0.0)];
        let edges = delaunay_edges(&pts);
        assert!(edges.contains(&(1, 3)));
        assert!(edges.contains(&(0, 1)));
        assert!(edges.contains(&(0, 2)));
        assert!(edges.contains(&(1, 2)));
    }

    /// Brute-force check: every output triangle's circumcircle is empty.
    #[test]
    fn empty_circumcircle_on_random_points() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.random_range(3..=10usize);
            let pts: Vec<(Real, Real)> = (0..n)
                .map(|_| (rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)))
                .collect();
            let edges = delaunay_edges(&pts);
            crate::delaunay::verify::assert_matches_brute_force(&pts, &edges);
        }
    }
}

/// Brute-force Delaunay oracle, shared with the acceptance suite. A triple
/// is a Delaunay face exactly when no other point lands strictly inside its
/// circumcircle; the oracle edge set is the union of face edges.
pub mod verify {
    use std::collections::BTreeSet;

    use crate::Real;

    fn circumcircle_contains(
        a: (Real, Real),
        b: (Real, Real),
        c: (Real, Real),
        p: (Real, Real),
    ) -> bool {
        // in-circle determinant, positive when p is strictly inside the
        // circle through the CCW-oriented triangle (a, b, c)
        let (ax, ay) = (a.0 - p.0, a.1 - p.1);
        let (bx, by) = (b.0 - p.0, b.1 - p.1);
        let (cx, cy) = (c.0 - p.0, c.1 - p.1);
        let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
            - (bx * bx + by * by) * (ax * cy - cx * ay)
            + (cx * cx + cy * cy) * (ax * by - bx * ay);
        let orient = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        let signed = if orient >= 0.0 { det } else { -det };
        signed > 1e-7
    }

    /// Enumerate all triples and keep the ones with empty circumcircles.
    /// O(n^4); intended for n <= 10.
    pub fn brute_force_edges(points: &[(Real, Real)]) -> BTreeSet<(usize, usize)> {
        let n = points.len();
        let mut edges = BTreeSet::new();
        if n == 2 {
            edges.insert((0, 1));
            return edges;
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let empty = (0..n)
                        .filter(|&p| p != i && p != j && p != k)
                        .all(|p| !circumcircle_contains(points[i], points[j], points[k], points[p]));
                    if empty {
                        edges.insert((i, j));
                        edges.insert((j, k));
                        edges.insert((i, k));
                    }
                }
            }
        }
        edges
    }

    /// Panic unless `edges` equals the brute-force oracle. Only meaningful
    /// on non-degenerate inputs (no cocircular quadruples, no collinear
    /// triples on the hull).
    pub fn assert_matches_brute_force(points: &[(Real, Real)], edges: &[(usize, usize)]) {
        let expect = brute_force_edges(points);
        let got: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
        assert_eq!(got, expect, "edge set diverges from brute-force Delaunay");
    }
}
