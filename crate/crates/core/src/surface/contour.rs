//! Marching squares over a [`GridSurface`].
//!
//! Corners at or above the level are "inside". Crossings are placed on cell
//! edges by linear interpolation, and the two ambiguous saddle cases are
//! resolved by the mean of the four corners. Segments are stitched through
//! shared edges, so polylines come out in a fixed order: open chains first
//! (each started at its lowest-index free end), then closed loops, which
//! repeat their first vertex at the end.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GridSurface;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub level: f64,
    /// Ordered `(δ, γ)` vertices.
    pub polylines: Vec<Vec<[f64; 2]>>,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }
}

/// Cell edge identity: horizontal edges run along δ, vertical along γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    /// From `(i, j)` to `(i + 1, j)`.
    H(usize, usize),
    /// From `(i, j)` to `(i, j + 1)`.
    V(usize, usize),
}

pub fn extract_contours(surface: &GridSurface, levels: &[f64]) -> Vec<ContourSet> {
    levels
        .iter()
        .map(|&level| ContourSet {
            level,
            polylines: trace_level(surface, level),
        })
        .collect()
}

fn trace_level(s: &GridSurface, level: f64) -> Vec<Vec<[f64; 2]>> {
    let k = s.k;
    let segments = cell_segments(s, level);
    if segments.is_empty() {
        return Vec::new();
    }

    let mut by_edge: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (idx, (a, b)) in segments.iter().enumerate() {
        by_edge.entry(*a).or_default().push(idx);
        by_edge.entry(*b).or_default().push(idx);
    }
    let point = |e: Edge| edge_point(s, e, level);
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| {
        let mut line = vec![point(start_edge)];
        let mut seg = start_seg;
        let mut from = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let to = if a == from { b } else { a };
            line.push(point(to));
            let next = by_edge[&to].iter().copied().find(|&n| !used[n]);
            match next {
                Some(n) => {
                    seg = n;
                    from = to;
                }
                None => break,
            }
        }
        line
    };

    // open chains start from edges owned by a single segment (grid boundary)
    for (edge, owners) in &by_edge {
        if owners.len() == 1 && !used[owners[0]] {
            lines.push(walk(owners[0], *edge, &mut used));
        }
    }
    for idx in 0..segments.len() {
        if !used[idx] {
            lines.push(walk(idx, segments[idx].0, &mut used));
        }
    }
    debug_assert!(lines.iter().all(|l| l.len() >= 2) && k >= 2);
    lines
}

fn cell_segments(s: &GridSurface, level: f64) -> Vec<(Edge, Edge)> {
    let k = s.k;
    let mut out = Vec::new();
    for i in 0..k - 1 {
        for j in 0..k - 1 {
            let v00 = s.value(i, j);
            let v10 = s.value(i + 1, j);
            let v11 = s.value(i + 1, j + 1);
            let v01 = s.value(i, j + 1);
            let case = usize::from(v00 >= level)
                | usize::from(v10 >= level) << 1
                | usize::from(v11 >= level) << 2
                | usize::from(v01 >= level) << 3;
            let bottom = Edge::H(i, j);
            let right = Edge::V(i + 1, j);
            let top = Edge::H(i, j + 1);
            let left = Edge::V(i, j);
            let centre_inside = (v00 + v10 + v11 + v01) / 4.0 >= level;
            match case {
                0 | 15 => {}
                1 | 14 => out.push((left, bottom)),
                2 | 13 => out.push((bottom, right)),
                3 | 12 => out.push((left, right)),
                4 | 11 => out.push((right, top)),
                6 | 9 => out.push((bottom, top)),
                7 | 8 => out.push((left, top)),
                5 => {
                    // corners 00 and 11 inside
                    if centre_inside {
                        out.push((left, top));
                        out.push((bottom, right));
                    } else {
                        out.push((left, bottom));
                        out.push((right, top));
                    }
                }
                10 => {
                    // corners 10 and 01 inside
                    if centre_inside {
                        out.push((left, bottom));
                        out.push((right, top));
                    } else {
                        out.push((left, top));
                        out.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    out
}

fn edge_point(s: &GridSurface, e: Edge, level: f64) -> [f64; 2] {
    let lerp = |a: f64, b: f64, va: f64, vb: f64| {
        let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
        a + t * (b - a)
    };
    match e {
        Edge::H(i, j) => [
            lerp(
                s.deltas[i],
                s.deltas[i + 1],
                s.value(i, j),
                s.value(i + 1, j),
            ),
            s.gammas[j],
        ],
        Edge::V(i, j) => [
            s.deltas[i],
            lerp(
                s.gammas[j],
                s.gammas[j + 1],
                s.value(i, j),
                s.value(i, j + 1),
            ),
        ],
    }
}
