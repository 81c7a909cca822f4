//! Homeomorphisms of the surface isotopic to the identity, built from shears
//! along geodesic annuli, together with their natural lifts to the disk.
//! Also the flat-torus shear maps used as a genus-1 baseline.
//!
//! A shear along a closed geodesic acts in Fermi coordinates of each lift
//! by `(s, d) ↦ (s + η(d), d)`. Since the family of lifts is invariant under
//! the deck group and its strips are pairwise disjoint, the lifted map
//! commutes with every deck transformation.

use std::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{geodesic_of, CurveClass};
use crate::error::{Error, Result};
use crate::group::{GroupWord, Letter, SurfaceGroup};
use crate::hyperbolic::{dist, DiskPoint, FermiCoords, GeodesicFrame};

/// Equivariance tolerance for the natural lift.
pub const EQUIVARIANCE_TOL: f64 = 1e-9;
/// Tolerance on `|det - 1|` for the area check.
pub const AREA_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `(1 - t²)²` on `|t| < 1`.
    #[default]
    QuarticBump,
}

impl Profile {
    #[inline]
    pub fn value(self, t: f64) -> f64 {
        match self {
            Profile::QuarticBump => {
                let u = 1.0 - t * t;
                if u > 0.0 {
                    u * u
                } else {
                    0.0
                }
            }
        }
    }
}

/// Shear along the closed geodesic of `curve`.
///
/// With `side_offset = 0` the displacement is `strength · ℓ · bump(d / width)`.
/// With `side_offset = o > 0` there are two annuli, centred at `d = ±o`, moving
/// in opposite directions: `strength · ℓ · (bump((d-o)/w) - bump((d+o)/w))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearSpec {
    pub curve: GroupWord,
    pub width: f64,
    pub strength: f64,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub side_offset: f64,
}

impl ShearSpec {
    pub fn new(curve: &str, width: f64, strength: f64, side_offset: f64) -> Result<Self> {
        Ok(ShearSpec {
            curve: curve.parse()?,
            width,
            strength,
            profile: Profile::QuarticBump,
            side_offset,
        })
    }

    /// Half-width of the support around the core geodesic.
    pub fn reach(&self) -> f64 {
        self.width + self.side_offset
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::InvalidShear(format!("width {} must be positive", self.width)));
        }
        if !self.strength.is_finite() {
            return Err(Error::InvalidShear("strength must be finite".into()));
        }
        if !(self.side_offset.is_finite() && self.side_offset >= 0.0) {
            return Err(Error::InvalidShear(format!(
                "side_offset {} must be non-negative",
                self.side_offset
            )));
        }
        if self.side_offset > 0.0 && 2.0 * self.side_offset < self.width {
            return Err(Error::InvalidShear(format!(
                "side_offset {} must be at least width/2 so the two cores move rigidly",
                self.side_offset
            )));
        }
        Ok(())
    }

    /// Displacement along the lift at signed distance `d`, for a curve of length `len`.
    #[inline]
    pub fn eta(&self, len: f64, d: f64) -> f64 {
        let w = self.width;
        let o = self.side_offset;
        let amp = self.strength * len;
        if o == 0.0 {
            amp * self.profile.value(d / w)
        } else {
            amp * (self.profile.value((d - o) / w) - self.profile.value((d + o) / w))
        }
    }

    /// Which smooth piece of the profile `d` lies in.
    fn piece(&self, d: f64) -> u32 {
        let w = self.width;
        let o = self.side_offset;
        ((((d - o) / w).abs() < 1.0) as u32) | (((((d + o) / w).abs() < 1.0) as u32) << 1)
    }
}

/// Ordered composition of shears, applied first to last.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub shears: Vec<ShearSpec>,
}

impl MapSpec {
    /// Negated strengths in reverse order.
    pub fn inverse(&self) -> MapSpec {
        MapSpec {
            shears: self
                .shears
                .iter()
                .rev()
                .map(|s| ShearSpec {
                    strength: -s.strength,
                    ..s.clone()
                })
                .collect(),
        }
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.shears.is_empty() {
            Err(Error::EmptySpec)
        } else {
            Ok(())
        }
    }

    /// Two-way shears of the given reach along each curve, at full strength.
    pub fn two_way(words: &[&str], width: f64, side_offset: f64) -> Result<MapSpec> {
        Ok(MapSpec {
            shears: words
                .iter()
                .map(|w| ShearSpec::new(w, width, 1.0, side_offset))
                .collect::<Result<_>>()?,
        })
    }

    /// Two-way shears along [`GENUS2_CHAIN`] (width 0.5, side offset 0.3,
    /// strength 0.25).
    pub fn genus2_chain() -> MapSpec {
        let mut spec = MapSpec::two_way(&GENUS2_CHAIN, 0.5, 0.3).expect("valid chain");
        for s in &mut spec.shears {
            s.strength = 0.25;
        }
        spec
    }
}

/// A filling chain of simple closed curves on the genus-2 surface.
pub const GENUS2_CHAIN: [&str; 5] = ["a1", "b1", "a1 a2", "b2", "a2"];

/// A named map of the zoo, with the genus it lives on.
#[derive(Clone, Debug)]
pub struct ZooEntry {
    pub name: &'static str,
    pub genus: usize,
    pub spec: MapSpec,
}

/// The reference maps used by the checks and benchmarks.
pub fn zoo() -> Vec<ZooEntry> {
    let with_strength = |mut spec: MapSpec, k: f64| {
        for s in &mut spec.shears {
            s.strength = k;
        }
        spec
    };
    vec![
        ZooEntry {
            name: "genus2-chain-two-way",
            genus: 2,
            spec: MapSpec::genus2_chain(),
        },
        ZooEntry {
            name: "genus2-chain-one-way",
            genus: 2,
            spec: with_strength(MapSpec::two_way(&GENUS2_CHAIN, 0.5, 0.0).expect("valid"), 0.25),
        },
        ZooEntry {
            name: "genus2-single-a1",
            genus: 2,
            spec: MapSpec::two_way(&["a1"], 0.5, 0.3).expect("valid"),
        },
        ZooEntry {
            name: "genus3-a1-b3",
            genus: 3,
            spec: with_strength(MapSpec::two_way(&["a1", "b3"], 0.4, 0.0).expect("valid"), 0.5),
        },
    ]
}

/// One lift of a shear's core geodesic close to the fundamental domain.
#[derive(Clone, Debug)]
struct StripLift {
    frame: GeodesicFrame,
    /// `sinh d(p) = normal · P` with `P` the hyperboloid point of `p`.
    normal: [f64; 3],
}

#[inline]
fn hyperboloid(p: DiskPoint) -> [f64; 3] {
    let r2 = p.norm_sqr();
    let k = 1.0 / (1.0 - r2);
    [(1.0 + r2) * k, 2.0 * p.x * k, 2.0 * p.y * k]
}

impl StripLift {
    fn new(frame: GeodesicFrame) -> Self {
        // sinh d is a linear functional on the hyperboloid
        let probes = [
            DiskPoint::ORIGIN,
            DiskPoint { x: 0.4, y: 0.0 },
            DiskPoint { x: 0.0, y: 0.4 },
        ];
        let rows: Vec<[f64; 3]> = probes.iter().map(|&p| hyperboloid(p)).collect();
        let m = Matrix3::from_fn(|i, j| rows[i][j]);
        let rhs = Vector3::from_fn(|i, _| frame.to_fermi(probes[i]).d.sinh());
        let n = m.lu().solve(&rhs).expect("hyperboloid probes are independent");
        StripLift {
            frame,
            normal: [n[0], n[1], n[2]],
        }
    }

    #[inline]
    fn sinh_d(&self, h: &[f64; 3]) -> f64 {
        self.normal[0] * h[0] + self.normal[1] * h[1] + self.normal[2] * h[2]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceCertificate {
    pub samples: usize,
    pub max_word_len: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Per-shear build information.
#[derive(Clone, Debug, Serialize)]
pub struct ShearInfo {
    pub curve: String,
    pub length: f64,
    /// Distance from the core geodesic to its nearest distinct lift.
    pub collar: f64,
    pub lifts_near_domain: usize,
    /// For two-way shears: the cores at `d = ±side_offset` avoid every other
    /// strip, so they are exact periodic orbits following the curve in both
    /// directions.
    pub cores_clear: Option<bool>,
}

/// Natural lift of a composition of shears.
#[derive(Clone, Debug)]
pub struct LiftedMap {
    pub spec: MapSpec,
    pub group: SurfaceGroup,
    pub curves: Vec<CurveClass>,
    strips: Vec<Vec<StripLift>>,
    sinh_reach: Vec<f64>,
    pub shear_info: Vec<ShearInfo>,
    /// Upper bound on `d(p, f̃(p))`.
    pub displacement_bound: f64,
    pub certificate: EquivarianceCertificate,
}

/// Builds the lift, checking strip disjointness and recording an
/// equivariance certificate over 1000 random (point, word) pairs.
pub fn build_map(spec: &MapSpec, group: &SurfaceGroup) -> Result<LiftedMap> {
    build_map_seeded(spec, group, 0x5eed)
}

pub fn build_map_seeded(spec: &MapSpec, group: &SurfaceGroup, seed: u64) -> Result<LiftedMap> {
    let domain_reach = group.domain.circumradius + 1e-6;
    let mut curves = Vec::new();
    let mut strips = Vec::new();
    let mut info = Vec::new();
    let mut bound = 0.0;
    for (k, sh) in spec.shears.iter().enumerate() {
        sh.validate()?;
        let c = geodesic_of(&sh.curve, group)?;
        let offset = c.axis_offset();
        let reach = sh.reach();

        // same-curve lifts near the fundamental segment
        let collar_radius = c.length + 2.0 * reach + 2.0 * offset + 0.1;
        let mut collar = f64::INFINITY;
        for (_, h) in group.elements_within(collar_radius) {
            let l = h.apply_geodesic(&c.geodesic);
            if l.same_carrier(&c.geodesic, 1e-9) {
                continue;
            }
            collar = collar.min(c.geodesic.distance_to_geodesic(&l));
        }
        if collar <= 2.0 * reach {
            return Err(Error::StripsOverlap {
                shear: k,
                distance: collar,
                required: 2.0 * reach,
            });
        }

        let near = domain_reach + reach;
        let mut lifts: Vec<StripLift> = Vec::new();
        for (_, h) in group.elements_within(near + offset + c.length / 2.0 + 0.1) {
            let l = h.apply_geodesic(&c.geodesic);
            if l.distance_to_point(DiskPoint::ORIGIN) > near {
                continue;
            }
            if lifts.iter().any(|s| s.frame.geodesic.same_carrier(&l, 1e-9)) {
                continue;
            }
            lifts.push(StripLift::new(c.frame().transported(&h)));
        }
        bound += sh.strength.abs() * c.length * reach.cosh();
        info.push(ShearInfo {
            curve: c.word.to_string(),
            length: c.length,
            collar,
            lifts_near_domain: lifts.len(),
            cores_clear: None,
        });
        strips.push(lifts);
        curves.push(c);
    }
    let sinh_reach = spec.shears.iter().map(|s| s.reach().sinh()).collect();
    let mut map = LiftedMap {
        spec: spec.clone(),
        group: group.clone(),
        curves,
        strips,
        sinh_reach,
        shear_info: info,
        displacement_bound: bound,
        certificate: EquivarianceCertificate {
            samples: 0,
            max_word_len: 3,
            max_error: 0.0,
            tolerance: EQUIVARIANCE_TOL,
            passed: true,
        },
    };
    for k in 0..map.spec.shears.len() {
        if map.spec.shears[k].side_offset > 0.0 {
            map.shear_info[k].cores_clear = Some(map.cores_clear(k)?);
        }
    }
    map.certificate = map.equivariance_certificate(1000, 3, seed)?;
    Ok(map)
}

impl LiftedMap {
    pub fn identity(group: &SurfaceGroup) -> Result<LiftedMap> {
        build_map(&MapSpec::default(), group)
    }

    pub fn rank(&self) -> usize {
        self.group.rank()
    }

    /// Shear `k` applied to a point of (or near) the fundamental domain.
    /// Also returns a tag of the smooth piece used.
    #[inline]
    fn shear_near(&self, k: usize, q: DiskPoint) -> (DiskPoint, u32) {
        let hq = hyperboloid(q);
        let sh = &self.spec.shears[k];
        let lim = self.sinh_reach[k];
        for (i, lift) in self.strips[k].iter().enumerate() {
            let sd = lift.sinh_d(&hq);
            if sd.abs() < lim {
                let d = sd.asinh();
                let eta = sh.eta(self.curves[k].length, d);
                let tag = ((i as u32) << 2) | sh.piece(d);
                if eta == 0.0 {
                    return (q, tag);
                }
                let z = lift.frame.to_upper(q) * eta.exp();
                return (lift.frame.from_upper(z), tag);
            }
        }
        (q, u32::MAX)
    }

    /// One application of the map to a domain point; the image is reduced
    /// back into the domain and the homology of the deck words used is added
    /// to `acc`.
    pub fn step_cell(&self, q: &mut DiskPoint, acc: &mut [i64]) -> Result<()> {
        for k in 0..self.spec.shears.len() {
            let (moved, _) = self.shear_near(k, *q);
            *q = self
                .group
                .reduce_with(moved, |l: Letter| acc[l.gen as usize] += l.sign())?;
        }
        Ok(())
    }

    /// Same as [`step_cell`](Self::step_cell), reporting the deck word.
    pub fn step_cell_word(&self, q: &mut DiskPoint, word: &mut GroupWord) -> Result<()> {
        for k in 0..self.spec.shears.len() {
            let (moved, _) = self.shear_near(k, *q);
            *q = self.group.reduce_with(moved, |l| word.push(l))?;
        }
        Ok(())
    }

    fn eval_traced(&self, p: DiskPoint, tags: &mut Vec<u32>) -> Result<DiskPoint> {
        let (mut q, w) = self.group.reduce_to_domain(p)?;
        let mut m = self.group.evaluate(&w)?;
        for k in 0..self.spec.shears.len() {
            let (moved, tag) = self.shear_near(k, q);
            tags.push(tag);
            let (q2, w2) = self.group.reduce_to_domain(moved)?;
            m = m * self.group.evaluate(&w2)?;
            q = q2;
        }
        Ok(m.apply(q))
    }

    /// The natural lift `f̃` at any point of the disk.
    pub fn eval_lift(&self, p: DiskPoint) -> Result<DiskPoint> {
        self.eval_traced(p, &mut Vec::new())
    }

    /// `f̃(p)` as `(W, q)` with `f̃(p) = W·q` and `q` in the domain.
    pub fn eval_cell(&self, p: DiskPoint) -> Result<(GroupWord, DiskPoint)> {
        let (mut q, mut w) = self.group.reduce_to_domain(p)?;
        self.step_cell_word(&mut q, &mut w)?;
        Ok((w, q))
    }

    /// `f̃^n(p)`.
    pub fn iterate(&self, p: DiskPoint, n: usize) -> Result<DiskPoint> {
        let (mut q, w) = self.group.reduce_to_domain(p)?;
        let mut word = w;
        for _ in 0..n {
            self.step_cell_word(&mut q, &mut word)?;
        }
        Ok(self.group.evaluate(&word)?.apply(q))
    }

    pub fn inverse(&self) -> Result<LiftedMap> {
        build_map(&self.spec.inverse(), &self.group)
    }

    fn equivariance_certificate(
        &self,
        samples: usize,
        max_len: usize,
        seed: u64,
    ) -> Result<EquivarianceCertificate> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = self.rank();
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let p = self.group.sample_uniform(&mut rng);
            let len = rng.gen_range(1..=max_len);
            let w = GroupWord::from_letters(
                (0..len).map(|_| Letter::new(rng.gen_range(0..rank), rng.gen_bool(0.5))),
            );
            let g = self.group.evaluate(&w)?;
            // d(f̃(g p), g f̃(p)) evaluated next to the domain
            let (wa, qa) = self.eval_cell(g.apply(p))?;
            let (wb, qb) = self.eval_cell(p)?;
            let link = self.group.evaluate(&wa.inverse().concat(&w).concat(&wb))?;
            worst = worst.max(dist(qa, link.apply(qb)));
        }
        Ok(EquivarianceCertificate {
            samples,
            max_word_len: max_len,
            max_error: worst,
            tolerance: EQUIVARIANCE_TOL,
            passed: worst < EQUIVARIANCE_TOL,
        })
    }

    /// Samples the two cores of a two-way shear and checks they stay out of
    /// every other strip.
    fn cores_clear(&self, k: usize) -> Result<bool> {
        let c = &self.curves[k];
        let o = self.spec.shears[k].side_offset;
        for side in [-1.0, 1.0] {
            for i in 0..512 {
                let s = c.length * i as f64 / 512.0;
                let p = c.frame().from_fermi(FermiCoords { s, d: side * o });
                let (q, _) = self.group.reduce_to_domain(p)?;
                let hq = hyperboloid(q);
                for j in 0..self.spec.shears.len() {
                    if j == k {
                        continue;
                    }
                    if self.strips[j]
                        .iter()
                        .any(|l| l.sinh_d(&hq).abs() < self.sinh_reach[j])
                    {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Largest sampled displacement `d(p, f̃(p))` over domain points.
    pub fn sampled_displacement(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let p = self.group.sample_uniform(&mut rng);
            worst = worst.max(dist(p, self.eval_lift(p)?));
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaReport {
    pub samples: usize,
    /// Points re-drawn because the difference stencil straddled a seam of
    /// the piecewise polynomial profile.
    pub redrawn: usize,
    pub step: f64,
    pub max_defect: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Finite-difference check that `f̃` preserves hyperbolic area: at each
/// sample `|det Df · ρ(f(p)) / ρ(p) - 1|` is small, `ρ = 4 / (1 - |z|²)²`.
pub fn area_check(map: &LiftedMap, samples: usize, seed: u64) -> Result<AreaReport> {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut redrawn = 0;
    let mut done = 0;
    let mut tags = Vec::new();
    let mut reference = Vec::new();
    while done < samples {
        let p = map.group.sample_uniform(&mut rng);
        reference.clear();
        let fp = map.eval_traced(p, &mut reference)?;
        let mut cols = [[0.0; 2]; 2];
        let mut smooth = true;
        for (axis, col) in cols.iter_mut().enumerate() {
            let mut acc = [0.0; 2];
            for (k, wgt) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
                let q = if axis == 0 {
                    DiskPoint { x: p.x + k * h, y: p.y }
                } else {
                    DiskPoint { x: p.x, y: p.y + k * h }
                };
                tags.clear();
                let fq = map.eval_traced(q, &mut tags)?;
                smooth &= tags == reference;
                acc[0] += wgt * fq.x;
                acc[1] += wgt * fq.y;
            }
            *col = [acc[0] / (12.0 * h), acc[1] / (12.0 * h)];
        }
        if !smooth {
            redrawn += 1;
            continue;
        }
        let det = cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1];
        let ratio = ((1.0 - p.norm_sqr()) / (1.0 - fp.norm_sqr())).powi(2);
        worst = worst.max((det * ratio - 1.0).abs());
        done += 1;
    }
    Ok(AreaReport {
        samples,
        redrawn,
        step: h,
        max_defect: worst,
        tolerance: AREA_TOL,
        passed: worst < AREA_TOL,
    })
}

/// Whether the map passes [`area_check`] on 1000 points.
pub fn area_preserving(map: &LiftedMap) -> Result<bool> {
    Ok(area_check(map, 1000, 0xa7ea)?.passed)
}

/// Shear profile on the circle `R / Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TorusProfile {
    Zero,
    /// `amplitude · (1 - cos 2πt) / 2`, ranging over `[0, amplitude]`.
    Cosine { amplitude: f64 },
    /// `amplitude · sin 2π(t + phase)`.
    Sine { amplitude: f64, phase: f64 },
}

impl TorusProfile {
    #[inline]
    pub fn value(self, t: f64) -> f64 {
        match self {
            TorusProfile::Zero => 0.0,
            TorusProfile::Cosine { amplitude } => amplitude * (1.0 - (TAU * t).cos()) / 2.0,
            TorusProfile::Sine { amplitude, phase } => amplitude * (TAU * (t + phase)).sin(),
        }
    }
}

/// `(x, y) ↦ (x + φ(y), y)` followed by `(x, y) ↦ (x, y + ψ(x))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusMapSpec {
    pub horizontal: TorusProfile,
    pub vertical: TorusProfile,
}

/// The lift to `R²`; commutes with integer translations.
#[inline]
pub fn torus_lift(spec: &TorusMapSpec, p: (f64, f64)) -> (f64, f64) {
    let x = p.0 + spec.horizontal.value(p.1);
    let y = p.1 + spec.vertical.value(x);
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zoo_maps_build() {
        for z in zoo() {
            let g = SurfaceGroup::standard(z.genus).unwrap();
            let m = build_map(&z.spec, &g).unwrap_or_else(|e| panic!("{}: {e}", z.name));
            assert!(m.certificate.passed, "{}", z.name);
        }
    }

    fn g2() -> SurfaceGroup {
        SurfaceGroup::standard(2).unwrap()
    }

    fn single(word: &str, offset: f64) -> LiftedMap {
        let spec = MapSpec {
            shears: vec![ShearSpec::new(word, 0.12, 1.0, offset).unwrap()],
        };
        build_map(&spec, &g2()).unwrap()
    }

    #[test]
    fn hyperboloid_normal_matches_fermi() {
        let m = single("a1 b1", 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for lift in &m.strips[0] {
            for _ in 0..20 {
                let p = m.group.sample_uniform(&mut rng);
                let exact = lift.frame.to_fermi(p).d.sinh();
                assert!((lift.sinh_d(&hyperboloid(p)) - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn empty_spec_is_identity() {
        let g = g2();
        let m = LiftedMap::identity(&g).unwrap();
        let p = DiskPoint::new(0.3, -0.5).unwrap();
        assert!(dist(m.eval_lift(p).unwrap(), p) < 1e-12);
        assert!(MapSpec::default().require_nonempty().is_err());
    }

    #[test]
    fn core_moves_by_deck_element() {
        let m = single("a1", 0.0);
        let c = &m.curves[0];
        for s in [-1.0, 0.0, 0.7, 3.0] {
            let p = c.point_at(s);
            let q = m.eval_lift(p).unwrap();
            assert!(dist(q, c.element.apply(p)) < 1e-9);
        }
    }

    #[test]
    fn two_way_cores_move_both_ways() {
        let m = single("b1", 0.15);
        let c = &m.curves[0];
        let f = c.frame();
        for s in [-0.5, 0.2] {
            let plus = f.from_fermi(FermiCoords { s, d: 0.15 });
            let minus = f.from_fermi(FermiCoords { s, d: -0.15 });
            assert!(dist(m.eval_lift(plus).unwrap(), c.element.apply(plus)) < 1e-9);
            assert!(dist(m.eval_lift(minus).unwrap(), c.element.inverse().apply(minus)) < 1e-9);
        }
        assert_eq!(m.shear_info[0].cores_clear, Some(true));
    }

    #[test]
    fn far_points_are_fixed() {
        let m = single("a1", 0.0);
        let c = &m.curves[0];
        let p = c.frame().from_fermi(FermiCoords { s: 0.3, d: 0.5 });
        assert_eq!(m.eval_lift(p).unwrap(), p);
    }

    #[test]
    fn composition_is_sequential() {
        let g = g2();
        let s1 = ShearSpec::new("a1", 0.1, 0.7, 0.0).unwrap();
        let s2 = ShearSpec::new("b1", 0.1, -0.4, 0.0).unwrap();
        let both = build_map(&MapSpec { shears: vec![s1.clone(), s2.clone()] }, &g).unwrap();
        let m1 = build_map(&MapSpec { shears: vec![s1] }, &g).unwrap();
        let m2 = build_map(&MapSpec { shears: vec![s2] }, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = g.sample_uniform(&mut rng);
            let a = both.eval_lift(p).unwrap();
            let b = m2.eval_lift(m1.eval_lift(p).unwrap()).unwrap();
            assert!(dist(a, b) < 1e-9);
        }
    }

    #[test]
    fn overlapping_strips_rejected() {
        let g = g2();
        let spec = MapSpec {
            shears: vec![ShearSpec::new("a1", 1.5, 1.0, 0.0).unwrap()],
        };
        assert!(matches!(build_map(&spec, &g), Err(Error::StripsOverlap { .. })));
        // a self-crossing curve has no embedded collar
        let spec = MapSpec {
            shears: vec![ShearSpec::new("a1 a1 B1 B1", 0.01, 1.0, 0.0).unwrap()],
        };
        assert!(matches!(build_map(&spec, &g), Err(Error::StripsOverlap { .. })));
    }

    #[test]
    fn invalid_parameters_rejected() {
        let g = g2();
        for (w, o) in [(-0.1, 0.0), (0.2, 0.05), (0.1, -1.0)] {
            let spec = MapSpec {
                shears: vec![ShearSpec::new("a1", w, 1.0, o).unwrap()],
            };
            assert!(matches!(build_map(&spec, &g), Err(Error::InvalidShear(_))));
        }
    }

    #[test]
    fn chain_map_certificates() {
        let g = g2();
        let m = build_map(&MapSpec::genus2_chain(), &g).unwrap();
        assert!(m.certificate.passed, "{:?}", m.certificate);
        let rep = area_check(&m, 300, 1).unwrap();
        assert!(rep.passed, "{rep:?}");
        let disp = m.sampled_displacement(300, 2).unwrap();
        assert!(disp <= m.displacement_bound + 1e-6);
    }

    #[test]
    fn inverse_round_trip() {
        let g = g2();
        let spec = MapSpec::two_way(&["a1", "b1", "a1 a2"], 0.12, 0.15).unwrap();
        let m = build_map(&spec, &g).unwrap();
        let inv = m.inverse().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let p = g.sample_uniform(&mut rng);
            assert!(dist(inv.eval_lift(m.eval_lift(p).unwrap()).unwrap(), p) < 1e-8);
        }
    }

    #[test]
    fn iterate_agrees_with_repeated_eval() {
        let g = g2();
        let m = build_map(&MapSpec::two_way(&["a1", "b1"], 0.12, 0.15).unwrap(), &g).unwrap();
        let p = DiskPoint::new(0.21, 0.13).unwrap();
        let mut q = p;
        for _ in 0..7 {
            q = m.eval_lift(q).unwrap();
        }
        assert!(dist(q, m.iterate(p, 7).unwrap()) < 1e-8);
    }

    #[test]
    fn torus_identity_and_invariant_circle() {
        let zero = TorusMapSpec {
            horizontal: TorusProfile::Zero,
            vertical: TorusProfile::Zero,
        };
        assert_eq!(torus_lift(&zero, (0.3, 0.7)), (0.3, 0.7));
        let shear = TorusMapSpec {
            horizontal: TorusProfile::Cosine { amplitude: 1.0 },
            vertical: TorusProfile::Zero,
        };
        let mut p = (0.1, 0.5);
        for _ in 0..10 {
            p = torus_lift(&shear, p);
        }
        assert!((p.0 - 10.1).abs() < 1e-12 && p.1 == 0.5);
    }

    proptest! {
        #[test]
        fn torus_lift_commutes_with_translations(
            x in -3.0f64..3.0, y in -3.0f64..3.0, m in -5i32..5, n in -5i32..5,
        ) {
            let spec = TorusMapSpec {
                horizontal: TorusProfile::Cosine { amplitude: 0.8 },
                vertical: TorusProfile::Sine { amplitude: 0.3, phase: 0.1 },
            };
            let a = torus_lift(&spec, (x + m as f64, y + n as f64));
            let b = torus_lift(&spec, (x, y));
            prop_assert!((a.0 - b.0 - m as f64).abs() < 1e-9);
            prop_assert!((a.1 - b.1 - n as f64).abs() < 1e-9);
        }
    }
}
