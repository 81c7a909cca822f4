//! Ribbon graphs (graphs with a cyclic order of half-edges at each vertex)
//! and boundary-walk tracing.
//!
//! Also hosts the flat-torus line arrangement, which shares the face tracer
//! and serves as a genus-1 reference.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// A directed half of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dart {
    pub origin: usize,
    pub twin: usize,
    pub edge: usize,
    /// Next outgoing dart counter-clockwise around `origin`.
    pub rot_next: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RibbonGraph {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub darts: Vec<Dart>,
}

impl RibbonGraph {
    /// Builds the graph from edge endpoints and, for each vertex, the list of
    /// outgoing darts with their tangent angles. Dart `2e` runs `from -> to`
    /// of edge `e`, dart `2e + 1` the reverse.
    pub fn from_angles(n_vertices: usize, edges: &[(usize, usize)], angles: &[f64]) -> Result<Self> {
        assert_eq!(angles.len(), 2 * edges.len());
        let mut darts: Vec<Dart> = Vec::with_capacity(2 * edges.len());
        for (e, &(a, b)) in edges.iter().enumerate() {
            darts.push(Dart {
                origin: a,
                twin: 2 * e + 1,
                edge: e,
                rot_next: usize::MAX,
            });
            darts.push(Dart {
                origin: b,
                twin: 2 * e,
                edge: e,
                rot_next: usize::MAX,
            });
        }
        let mut around: Vec<Vec<usize>> = vec![Vec::new(); n_vertices];
        for (i, d) in darts.iter().enumerate() {
            around[d.origin].push(i);
        }
        for list in &mut around {
            list.sort_by(|&x, &y| {
                angles[x]
                    .rem_euclid(TAU)
                    .partial_cmp(&angles[y].rem_euclid(TAU))
                    .unwrap()
            });
            for w in 0..list.len() {
                let here = angles[list[w]].rem_euclid(TAU);
                let next = angles[list[(w + 1) % list.len()]].rem_euclid(TAU);
                if list.len() > 1 && ((next - here).rem_euclid(TAU) < 1e-6) {
                    return Err(Error::TangencyDetected {
                        angle: (next - here).rem_euclid(TAU),
                    });
                }
            }
            for w in 0..list.len() {
                darts[list[w]].rot_next = list[(w + 1) % list.len()];
            }
        }
        Ok(RibbonGraph {
            n_vertices,
            n_edges: edges.len(),
            darts,
        })
    }

    /// Successor of a dart along its boundary walk.
    #[inline]
    pub fn face_next(&self, d: usize) -> usize {
        self.darts[self.darts[d].twin].rot_next
    }

    /// Boundary walks, each listed as its sequence of darts.
    pub fn faces(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.darts.len()];
        let mut faces = Vec::new();
        for start in 0..self.darts.len() {
            if seen[start] {
                continue;
            }
            let mut walk = Vec::new();
            let mut d = start;
            while !seen[d] {
                seen[d] = true;
                walk.push(d);
                d = self.face_next(d);
            }
            faces.push(walk);
        }
        faces
    }

    pub fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.n_vertices).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for d in &self.darts {
            let a = find(&mut parent, d.origin);
            let b = find(&mut parent, self.darts[d.twin].origin);
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        (0..self.n_vertices).all(|v| find(&mut parent, v) == root)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.n_edges as i64 + self.faces().len() as i64
    }
}

/// A closed straight line on `R^2 / Z^2` through `offset` with primitive
/// integer direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusLine {
    pub direction: (i64, i64),
    pub offset: (f64, f64),
}

/// Ribbon graph of a family of straight lines on the flat torus, with each
/// vertex's crossing parameters.
pub fn torus_arrangement(lines: &[TorusLine]) -> Result<RibbonGraph> {
    // (line, parameter in [0,1)) for each vertex, two passes per vertex
    let mut passes: Vec<Vec<(f64, usize)>> = vec![Vec::new(); lines.len()];
    let mut n_vertices = 0;
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            let (ux, uy) = lines[i].direction;
            let (vx, vy) = lines[j].direction;
            let det = ux * vy - uy * vx;
            if det == 0 {
                continue;
            }
            let (ox, oy) = (
                lines[j].offset.0 - lines[i].offset.0,
                lines[j].offset.1 - lines[i].offset.1,
            );
            // t u - s v = o + k, k ∈ Z^2; there are |det| solutions with t, s ∈ [0,1)
            let span = (ux.abs() + vx.abs() + uy.abs() + vy.abs()) as i64 + 2;
            let detf = det as f64;
            for kx in -span..=span {
                for ky in -span..=span {
                    let rx = ox + kx as f64;
                    let ry = oy + ky as f64;
                    let t = (rx * vy as f64 - ry * vx as f64) / detf;
                    let s = -((ux as f64) * ry - (uy as f64) * rx) / detf;
                    if (0.0..1.0).contains(&t) && (0.0..1.0).contains(&s) {
                        passes[i].push((t, n_vertices));
                        passes[j].push((s, n_vertices));
                        n_vertices += 1;
                    }
                }
            }
        }
    }
    let mut edges = Vec::new();
    let mut angles = Vec::new();
    for (i, list) in passes.iter_mut().enumerate() {
        list.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let (dx, dy) = lines[i].direction;
        let fwd = (dy as f64).atan2(dx as f64);
        for k in 0..list.len() {
            let a = list[k].1;
            let b = list[(k + 1) % list.len()].1;
            edges.push((a, b));
            angles.push(fwd);
            angles.push(fwd + TAU / 2.0);
        }
    }
    RibbonGraph::from_angles(n_vertices, &edges, &angles)
}
