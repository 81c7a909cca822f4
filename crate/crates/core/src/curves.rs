//! Closed geodesics on the surface, their lifts and intersection pattern,
//! and the filling test for curve systems.
//!
//! Each curve `c` with deck element `g` and axis `A` is parametrized by the
//! arclength `s` of its frame, with fundamental segment `[-ℓ/2, ℓ/2)`.
//! Every point where two branches cross on the surface has exactly one
//! representative on that segment, which is what makes enumeration finite.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupWord, SurfaceGroup};
use crate::hyperbolic::{
    dist, DiskPoint, FermiCoords, Geodesic, GeodesicFrame, Isometry,
};
use crate::ribbon::RibbonGraph;

/// Arclength tolerance for identifying crossing points.
pub const POINT_TOL: f64 = 1e-7;
/// Minimum crossing angle accepted as transverse.
pub const ANGLE_TOL: f64 = 1e-6;
/// Slack added to the segment radius when enumerating lifts.
const SEGMENT_MARGIN: f64 = 0.05;

/// A free homotopy class with its closed geodesic.
#[derive(Clone, Debug, Serialize)]
pub struct CurveClass {
    pub word: GroupWord,
    pub geodesic: Geodesic,
    #[serde(skip)]
    pub element: Isometry,
    pub length: f64,
    #[serde(skip)]
    frame: GeodesicFrame,
}

impl CurveClass {
    pub fn parse(word: &str, group: &SurfaceGroup) -> Result<CurveClass> {
        geodesic_of(&word.parse()?, group)
    }

    pub fn frame(&self) -> &GeodesicFrame {
        &self.frame
    }

    /// Distance from the disk origin to the axis.
    pub fn axis_offset(&self) -> f64 {
        dist(DiskPoint::ORIGIN, self.frame.from_fermi(FermiCoords { s: 0.0, d: 0.0 }))
    }

    /// Point of the axis at arclength `s`.
    pub fn point_at(&self, s: f64) -> DiskPoint {
        self.frame.from_fermi(FermiCoords { s, d: 0.0 })
    }

    /// `s` reduced to `[-ℓ/2, ℓ/2)` together with the number of periods removed.
    fn wrap(&self, s: f64) -> (f64, i64) {
        let m = ((s + self.length / 2.0) / self.length).floor();
        (s - m * self.length, m as i64)
    }
}

/// Closed geodesic of a nontrivial word: the axis of its deck element,
/// oriented along the translation.
pub fn geodesic_of(word: &GroupWord, group: &SurfaceGroup) -> Result<CurveClass> {
    let word = word.cyclically_reduced();
    if word.is_empty() {
        return Err(Error::TrivialWord);
    }
    let element = group.evaluate(&word)?;
    let geodesic = element.axis()?;
    let length = element.translation_length()?;
    Ok(CurveClass {
        frame: geodesic.frame(),
        word,
        geodesic,
        element,
        length,
    })
}

/// A lift `conj · axis(base)` of a curve to the disk.
#[derive(Clone, Debug, Serialize)]
pub struct ExtendedLift {
    pub base: usize,
    pub conj: GroupWord,
    pub geodesic: Geodesic,
}

impl ExtendedLift {
    /// Lifts are equal exactly when their endpoints agree.
    pub fn same_as(&self, other: &ExtendedLift) -> bool {
        self.geodesic.same_oriented(&other.geodesic, 1e-9)
    }
}

/// A transverse crossing of two curve branches on the surface.
#[derive(Clone, Debug, Serialize)]
pub struct Intersection {
    /// Representative in the closed fundamental domain.
    pub point: DiskPoint,
    /// Arclength on the first curve, in its fundamental segment.
    pub s1: f64,
    /// Arclength on the second curve, in its fundamental segment.
    pub s2: f64,
    /// Unsigned crossing angle in `(0, π)`.
    pub angle: f64,
    /// `lift1 · point_at(s1) = lift2 · point_at(s2)` in the disk.
    pub lift1: GroupWord,
    pub lift2: GroupWord,
    /// Direction of the second branch measured from the first, in `(0, 2π)`.
    #[serde(skip)]
    turn: f64,
}

/// Group elements needed to see every lift of `c2` crossing the fundamental
/// segment of `c1`.
pub(crate) fn lift_radius(c1: &CurveClass, c2: &CurveClass) -> f64 {
    c1.length / 2.0 + SEGMENT_MARGIN + 2.0 * c1.axis_offset() + c2.axis_offset() + c2.length / 2.0
}

/// Crossings of `c1`'s fundamental segment with lifts of `c2`, taken from
/// the element list `elements` (which must cover [`lift_radius`]).
///
/// With `same` the two curves are one and the same class, the stabilizer of
/// the axis is skipped, and each self-crossing is reported once.
fn crossings(
    c1: &CurveClass,
    c2: &CurveClass,
    same: bool,
    ids: (usize, usize),
    elements: &[(GroupWord, Isometry)],
    group: &SurfaceGroup,
) -> Result<Vec<Intersection>> {
    let f1 = c1.frame();
    let half = c1.length / 2.0;
    let g1 = &c1.word;
    let g2 = &c2.word;
    let mut out: Vec<Intersection> = Vec::new();
    for (hw, h) in elements {
        let lift = h.apply_geodesic(&c2.geodesic);
        if lift.same_carrier(&c1.geodesic, 1e-9) {
            if !same {
                return Err(Error::DuplicateCurve(ids.0, ids.1));
            }
            if !h.is_identity(1e-9) && h.translation_length()? < c1.length - 1e-6 {
                return Err(Error::NotPrimitive);
            }
            continue;
        }
        let xt = f1.boundary_real(lift.tail);
        let xh = f1.boundary_real(lift.head);
        if xt * xh >= 0.0 {
            continue;
        }
        let y = (-xt * xh).sqrt();
        let s_raw = y.ln();
        if s_raw.abs() > half + SEGMENT_MARGIN {
            continue;
        }
        let m = (xt + xh) / 2.0;
        let r = (xh - xt).abs() / 2.0;
        let sin = y / r;
        if sin < ANGLE_TOL {
            return Err(Error::TangencyDetected { angle: sin.asin() });
        }
        let sign = (xh - xt).signum();
        // tangent of the lift at iy, in the frame's half-plane
        let turn_abs = (sign * m).atan2(sign * y);
        // measured from the upward direction of c1
        let turn = (turn_abs - PI / 2.0).rem_euclid(2.0 * PI);

        let (s1, m1) = c1.wrap(s_raw);
        let x = f1.from_upper(num_complex::Complex64::new(0.0, y));
        let local = h.inverse().apply(x);
        let (s2, m2) = c2.wrap(c2.frame().to_fermi(local).s);
        if same && s1 >= s2 {
            continue;
        }
        let lift1 = g1.pow(m1);
        let lift2 = hw.concat(&g2.pow(m2));
        if out.iter().any(|o| {
            circ(o.s1, s1, c1.length) < POINT_TOL && circ(o.s2, s2, c2.length) < POINT_TOL
        }) {
            continue;
        }
        let (point, _) = group.reduce_to_domain(x)?;
        out.push(Intersection {
            point,
            s1,
            s2,
            angle: turn.min(2.0 * PI - turn),
            lift1,
            lift2,
            turn,
        });
    }
    out.sort_by(|a, b| a.s1.partial_cmp(&b.s1).unwrap());
    Ok(out)
}

/// Circular distance of two arclengths modulo `len`.
fn circ(a: f64, b: f64, len: f64) -> f64 {
    let d = (a - b).rem_euclid(len);
    d.min(len - d)
}

/// All transverse crossings of `c1` and `c2` on the surface. When both are
/// the same closed geodesic this lists its self-crossings.
pub fn intersections(c1: &CurveClass, c2: &CurveClass, group: &SurfaceGroup) -> Result<Vec<Intersection>> {
    let same = c1.geodesic.same_carrier(&c2.geodesic, 1e-9);
    let elements = group.elements_within(lift_radius(c1, c2));
    crossings(c1, c2, same, (0, 1), &elements, group)
}

/// One visit of a curve to a vertex.
#[derive(Clone, Debug, Serialize)]
pub struct Pass {
    pub curve: usize,
    pub s: f64,
    pub vertex: usize,
    /// Deck word `T` with `vertex lift = T · point_at(s)`.
    pub lift: GroupWord,
    /// Direction of travel in the vertex chart.
    #[serde(skip)]
    angle: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ArrangementVertex {
    pub point: DiskPoint,
    pub passes: [usize; 2],
    pub angle: f64,
}

/// Subarc of a curve between consecutive passes.
#[derive(Clone, Debug, Serialize)]
pub struct ArrangementEdge {
    pub curve: usize,
    pub from: usize,
    pub to: usize,
    /// Whether the arc crosses the end of the fundamental segment.
    pub wraps: bool,
    pub length: f64,
}

/// Graph on the surface cut out by a curve system, with its rotation system.
#[derive(Clone, Debug)]
pub struct Arrangement {
    pub genus: usize,
    pub curves: Vec<CurveClass>,
    pub passes: Vec<Pass>,
    pub vertices: Vec<ArrangementVertex>,
    pub edges: Vec<ArrangementEdge>,
    pub graph: RibbonGraph,
}

pub fn build_arrangement(curves: &[CurveClass], group: &SurfaceGroup) -> Result<Arrangement> {
    let n = curves.len();
    let radius = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| lift_radius(&curves[i], &curves[j]))
        .fold(0.0, f64::max);
    let elements = group.elements_within(radius);

    let mut passes: Vec<Pass> = Vec::new();
    let mut vertices: Vec<ArrangementVertex> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let list = crossings(&curves[i], &curves[j], i == j, (i, j), &elements, group)?;
            for x in list {
                let v = vertices.len();
                let p = passes.len();
                passes.push(Pass {
                    curve: i,
                    s: x.s1,
                    vertex: v,
                    lift: x.lift1.clone(),
                    angle: PI / 2.0,
                });
                passes.push(Pass {
                    curve: j,
                    s: x.s2,
                    vertex: v,
                    lift: x.lift2.clone(),
                    angle: PI / 2.0 + x.turn,
                });
                vertices.push(ArrangementVertex {
                    point: x.point,
                    passes: [p, p + 1],
                    angle: x.angle,
                });
            }
        }
    }
    if vertices.is_empty() {
        return Err(Error::NoIntersections);
    }

    let mut edges = Vec::new();
    let mut ends = Vec::new();
    let mut angles = Vec::new();
    for (c, curve) in curves.iter().enumerate() {
        let mut on: Vec<usize> = (0..passes.len()).filter(|&p| passes[p].curve == c).collect();
        on.sort_by(|&a, &b| passes[a].s.partial_cmp(&passes[b].s).unwrap());
        for k in 0..on.len() {
            let (a, b) = (on[k], on[(k + 1) % on.len()]);
            let wraps = k + 1 == on.len();
            let length = passes[b].s - passes[a].s + if wraps { curve.length } else { 0.0 };
            if on.len() > 1 && length < POINT_TOL {
                // two branches cross this curve at one point
                return Err(Error::TangencyDetected { angle: 0.0 });
            }
            edges.push(ArrangementEdge {
                curve: c,
                from: a,
                to: b,
                wraps,
                length,
            });
            ends.push((passes[a].vertex, passes[b].vertex));
            angles.push(passes[a].angle);
            angles.push(passes[b].angle + PI);
        }
    }
    let graph = RibbonGraph::from_angles(vertices.len(), &ends, &angles)?;
    Ok(Arrangement {
        genus: group.genus,
        curves: curves.to_vec(),
        passes,
        vertices,
        edges,
        graph,
    })
}

impl Arrangement {
    /// Deck word obtained by following a closed dart walk in the disk: the
    /// walk closes up in the universal cover iff this is the identity.
    pub fn walk_word(&self, darts: &[usize]) -> GroupWord {
        let mut w = GroupWord::empty();
        for &d in darts {
            let e = &self.edges[d / 2];
            let step = if e.wraps {
                self.curves[e.curve].word.clone()
            } else {
                GroupWord::empty()
            };
            let (p, q) = (&self.passes[e.from], &self.passes[e.to]);
            let piece = if d % 2 == 0 {
                p.lift.concat(&step).concat(&q.lift.inverse())
            } else {
                q.lift.concat(&step.inverse()).concat(&p.lift.inverse())
            };
            w = w.concat(&piece);
        }
        w
    }

    /// Every curve meets the graph and the graph is connected.
    pub fn is_connected(&self) -> bool {
        (0..self.curves.len()).all(|c| self.passes.iter().any(|p| p.curve == c))
            && self.graph.is_connected()
    }

    /// Faces whose boundary walk does not close up in the disk.
    pub fn essential_faces(&self, group: &SurfaceGroup) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (k, face) in self.graph.faces().iter().enumerate() {
            let m = group.evaluate(&self.walk_word(face))?;
            if !m.is_identity(1e-6) {
                out.push(k);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FillingReport {
    pub is_filling: bool,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "E")]
    pub e: usize,
    #[serde(rename = "F")]
    pub f: usize,
    pub euler: i64,
    pub connected: bool,
    pub face_degrees: Vec<usize>,
    /// Faces whose boundary walk is essential.
    pub witnesses: Vec<usize>,
}

/// Decides whether the complement of the curves is a union of disks:
/// the graph must be connected with `V - E + F = 2 - 2g`.
pub fn filling_check(curves: &[CurveClass], group: &SurfaceGroup) -> Result<FillingReport> {
    let arr = match build_arrangement(curves, group) {
        Ok(a) => a,
        Err(Error::NoIntersections) => {
            return Ok(FillingReport {
                is_filling: false,
                v: 0,
                e: 0,
                f: 0,
                euler: 0,
                connected: false,
                face_degrees: Vec::new(),
                witnesses: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    let faces = arr.graph.faces();
    let euler = arr.graph.euler_characteristic();
    let connected = arr.is_connected();
    Ok(FillingReport {
        is_filling: connected && euler == 2 - 2 * group.genus as i64,
        v: arr.vertices.len(),
        e: arr.edges.len(),
        f: faces.len(),
        euler,
        connected,
        face_degrees: faces.iter().map(|f| f.len()).collect(),
        witnesses: arr.essential_faces(group)?,
    })
}

/// Connectedness of the full preimage of the curves in the disk, decided
/// from the surface graph: it must be connected and every face walk must
/// close up in the disk.
pub fn lifted_union_connected(curves: &[CurveClass], group: &SurfaceGroup) -> bool {
    match build_arrangement(curves, group) {
        Ok(arr) => {
            arr.is_connected() && matches!(arr.essential_faces(group), Ok(v) if v.is_empty())
        }
        Err(_) => false,
    }
}
