//! Approximate medial graph of a simple polygon.
//!
//! The boundary is densely resampled and triangulated; circumcenters of
//! Delaunay triangles that land inside the polygon approximate the medial
//! axis (the dual Voronoi vertices), with the distance to the polygon
//! boundary as the local clearance. Adjacent interior triangles become graph
//! edges.

use super::MedialError;
use crate::geom::{Point2, Polygon};

pub(super) struct MedialGraph {
    pub pos: Vec<Point2>,
    pub clearance: Vec<f64>,
    pub adj: Vec<Vec<usize>>,
}

pub(super) fn boundary_samples(poly: &Polygon, spacing: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    for (a, b) in poly.edges() {
        let n = (a.dist(b) / spacing).ceil().max(1.0) as usize;
        for k in 0..n {
            out.push(Point2::lerp(a, b, k as f64 / n as f64));
        }
    }
    out
}

fn circumcenter(a: Point2, b: Point2, c: Point2) -> Option<Point2> {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    if d == 0.0 {
        return None;
    }
    let ab2 = ab.norm_sq();
    let ac2 = ac.norm_sq();
    let u = Point2::new(ac.y * ab2 - ab.y * ac2, ab.x * ac2 - ac.x * ab2) / d;
    let cc = a + u;
    cc.is_finite().then_some(cc)
}

pub(super) fn build_graph(poly: &Polygon, spacing: f64) -> Result<MedialGraph, MedialError> {
    let samples = boundary_samples(poly, spacing);
    let dpts: Vec<delaunator::Point> = samples
        .iter()
        .map(|p| delaunator::Point { x: p.x, y: p.y })
        .collect();
    let tri = delaunator::triangulate(&dpts);
    let ntri = tri.triangles.len() / 3;

    let mut node_of = vec![usize::MAX; ntri];
    let mut pos = Vec::new();
    let mut clearance = Vec::new();
    for t in 0..ntri {
        let a = samples[tri.triangles[3 * t]];
        let b = samples[tri.triangles[3 * t + 1]];
        let c = samples[tri.triangles[3 * t + 2]];
        if let Some(cc) = circumcenter(a, b, c) {
            if poly.contains(cc) {
                let cl = poly.distance_to_boundary(cc);
                if cl > 0.0 {
                    node_of[t] = pos.len();
                    pos.push(cc);
                    clearance.push(cl);
                }
            }
        }
    }
    if pos.len() < 2 {
        return Err(MedialError::TooThin { spacing });
    }

    let mut adj = vec![Vec::new(); pos.len()];
    for e in 0..tri.halfedges.len() {
        let twin = tri.halfedges[e];
        if twin == delaunator::EMPTY || e > twin {
            continue;
        }
        let (n1, n2) = (node_of[e / 3], node_of[twin / 3]);
        if n1 != usize::MAX && n2 != usize::MAX && n1 != n2 {
            adj[n1].push(n2);
            adj[n2].push(n1);
        }
    }
    Ok(MedialGraph { pos, clearance, adj })
}

fn degree(g: &MedialGraph, alive: &[bool], v: usize) -> usize {
    g.adj[v].iter().filter(|&&u| alive[u]).count()
}

/// Trim leaf branches whose leaf clearance falls below
/// `frac * max_clearance`. A whole branch is removed up to (but excluding)
/// its junction; when the graph is a bare path there is no junction and the
/// branch is kept, since removing it would discard the axis itself.
///
/// Branches are collected per round against the round-start graph, then
/// removed together. Removing spurs one at a time would demote a junction to
/// a path node and let the next branch walk swallow the trunk.
pub(super) fn prune(g: &MedialGraph, frac: f64) -> Result<Vec<bool>, MedialError> {
    let n = g.pos.len();
    let mut alive = vec![true; n];
    let max_clear = g.clearance.iter().cloned().fold(0.0, f64::max);
    let thr = frac * max_clear;
    loop {
        let mut to_remove: Vec<usize> = Vec::new();
        let mut removed_any = false;
        for leaf in 0..n {
            if !alive[leaf] || g.clearance[leaf] >= thr {
                continue;
            }
            match degree(g, &alive, leaf) {
                0 => to_remove.push(leaf),
                1 => {
                    let mut branch = vec![leaf];
                    let mut prev = leaf;
                    let mut cur = *g.adj[leaf].iter().find(|&&u| alive[u]).unwrap();
                    loop {
                        match degree(g, &alive, cur) {
                            d if d >= 3 => {
                                to_remove.extend_from_slice(&branch);
                                break;
                            }
                            2 => {
                                branch.push(cur);
                                match g.adj[cur].iter().find(|&&u| alive[u] && u != prev) {
                                    Some(&nx) => {
                                        prev = cur;
                                        cur = nx;
                                    }
                                    None => break, // tiny cycle; leave it alone
                                }
                            }
                            // reached the far end: bare path, keep the axis
                            _ => break,
                        }
                    }
                }
                _ => {}
            }
        }
        for v in to_remove {
            if alive[v] {
                alive[v] = false;
                removed_any = true;
            }
        }
        if !alive.iter().any(|&a| a) {
            return Err(MedialError::EmptyAfterPruning);
        }
        if !removed_any {
            break;
        }
    }
    Ok(alive)
}

fn dijkstra(g: &MedialGraph, alive: &[bool], src: usize) -> (Vec<f64>, Vec<usize>) {
    let n = g.pos.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    dist[src] = 0.0;
    loop {
        let mut best = usize::MAX;
        let mut bd = f64::INFINITY;
        for v in 0..n {
            if alive[v] && !done[v] && dist[v] < bd {
                bd = dist[v];
                best = v;
            }
        }
        if best == usize::MAX {
            break;
        }
        done[best] = true;
        for &u in &g.adj[best] {
            if alive[u] && !done[u] {
                let nd = dist[best] + g.pos[best].dist(g.pos[u]);
                if nd < dist[u] {
                    dist[u] = nd;
                    parent[u] = best;
                }
            }
        }
    }
    (dist, parent)
}

/// Longest leaf-to-leaf path (graph diameter) of the largest alive component.
pub(super) fn diameter_path(g: &MedialGraph, alive: &[bool]) -> Result<Vec<Point2>, MedialError> {
    let n = g.pos.len();
    // largest component by node count
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for v in 0..n {
        if alive[v] && comp[v] == usize::MAX {
            let id = sizes.len();
            let mut stack = vec![v];
            let mut size = 0usize;
            comp[v] = id;
            while let Some(x) = stack.pop() {
                size += 1;
                for &u in &g.adj[x] {
                    if alive[u] && comp[u] == usize::MAX {
                        comp[u] = id;
                        stack.push(u);
                    }
                }
            }
            sizes.push((size, v));
        }
    }
    let Some(&(_, seed)) = sizes.iter().max_by_key(|(s, _)| *s) else {
        return Err(MedialError::EmptyAfterPruning);
    };
    let in_comp: Vec<bool> = (0..n).map(|v| alive[v] && comp[v] == comp[seed]).collect();

    let far_from = |src: usize| {
        let (dist, parent) = dijkstra(g, &in_comp, src);
        let mut best = src;
        for v in 0..n {
            if in_comp[v] && dist[v].is_finite() && dist[v] > dist[best] {
                best = v;
            }
        }
        (best, parent)
    };
    let (u, _) = far_from(seed);
    let (v, parent) = far_from(u);
    let mut path = vec![v];
    let mut cur = v;
    while parent[cur] != usize::MAX {
        cur = parent[cur];
        path.push(cur);
    }
    path.reverse();
    Ok(path.into_iter().map(|i| g.pos[i]).collect())
}

