//! Homological displacement, rotation vectors and rotation-set estimates.
//!
//! Displacement is measured through the cell decomposition by translates of
//! the fundamental domain: the orbit is kept in the domain and every deck
//! word used to bring it back is abelianized. All bookkeeping is integer.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{area_check, torus_lift, LiftedMap, TorusMapSpec};
use crate::error::{Error, Result};
use crate::group::{abelianize, GroupWord, HomologyClass};
use crate::hyperbolic::{dist, DiskPoint, Isometry};
use crate::lp::{hull_depth, q_from_f64, q_to_f64, Depth, Q};

/// Dynamics on a space tiled by cells, exposing the integer displacement of
/// each step.
pub trait CellDynamics: Sync {
    type Point: Copy + Send + Sync + std::fmt::Debug;

    fn rank(&self) -> usize;

    /// Area-distributed point of the base cell.
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Self::Point;

    /// Advances `p` by one step inside the base cell and adds the homology of
    /// the cell change to `acc`.
    fn step(&self, p: &mut Self::Point, acc: &mut [i64]) -> Result<()>;

    /// Homology of the cell containing `p` under the shifted convention,
    /// relative to the base cell.
    fn recentre(&self, p: &Self::Point, basepoint: &Basepoint) -> Result<Vec<i64>>;

    /// Largest norm a single [`recentre`](Self::recentre) can return.
    fn recentre_bound(&self, basepoint: &Basepoint) -> f64;

    /// Diameter bound for the reference arcs joining the basepoint to points
    /// of the base cell.
    fn arc_bound(&self) -> f64;
}

/// Where the reference cell is centred.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basepoint {
    #[default]
    Origin,
    Shifted { x: f64, y: f64 },
}

impl CellDynamics for LiftedMap {
    type Point = DiskPoint;

    fn rank(&self) -> usize {
        self.group.rank()
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> DiskPoint {
        self.group.sample_uniform(rng)
    }

    #[inline]
    fn step(&self, p: &mut DiskPoint, acc: &mut [i64]) -> Result<()> {
        self.step_cell(p, acc)
    }

    fn recentre(&self, p: &DiskPoint, basepoint: &Basepoint) -> Result<Vec<i64>> {
        match *basepoint {
            Basepoint::Origin => Ok(vec![0; self.rank()]),
            Basepoint::Shifted { x, y } => {
                let cells = ShiftedCells::new(self, DiskPoint::new(x, y)?);
                Ok(cells.cell_of(*p)?.0)
            }
        }
    }

    fn recentre_bound(&self, basepoint: &Basepoint) -> f64 {
        match *basepoint {
            Basepoint::Origin => 0.0,
            Basepoint::Shifted { x, y } => match DiskPoint::new(x, y) {
                Ok(c) => ShiftedCells::new(self, c).bound,
                Err(_) => f64::INFINITY,
            },
        }
    }

    fn arc_bound(&self) -> f64 {
        self.group.domain.circumradius
    }
}

/// Dirichlet cells about a point near the origin, expressed through
/// translates of the standard domain.
struct ShiftedCells {
    centre: DiskPoint,
    elements: Vec<(Isometry, Vec<i64>)>,
    bound: f64,
}

impl ShiftedCells {
    fn new(map: &LiftedMap, centre: DiskPoint) -> Self {
        let g = &map.group;
        let rank = g.rank();
        let elements: Vec<(Isometry, Vec<i64>)> = g
            .elements_within(2.0 * g.domain.circumradius + 2.0 * dist(centre, DiskPoint::ORIGIN))
            .into_iter()
            .map(|(w, h)| (h, abelianize(&w, rank).0))
            .collect();
        let bound = elements
            .iter()
            .map(|(_, v)| norm_i(v))
            .fold(0.0, f64::max);
        ShiftedCells {
            centre,
            elements,
            bound,
        }
    }

    /// Element `h` (as homology) with `h⁻¹ p` closest to the centre.
    fn cell_of(&self, p: DiskPoint) -> Result<(Vec<i64>, DiskPoint)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, (h, _)) in self.elements.iter().enumerate() {
            let d = dist(h.inverse().apply(p), self.centre);
            if best.map_or(true, |(bd, _)| d < bd - 1e-12) {
                best = Some((d, i));
            }
        }
        let (_, i) = best.ok_or(Error::NonConvergence { steps: 0 })?;
        Ok((self.elements[i].1.clone(), self.elements[i].0.inverse().apply(p)))
    }
}

fn norm_i(v: &[i64]) -> f64 {
    v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flat-torus shear map with the unit square as base cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusMap {
    pub spec: TorusMapSpec,
}

impl CellDynamics for TorusMap {
    type Point = (f64, f64);

    fn rank(&self) -> usize {
        2
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        (rng.gen::<f64>(), rng.gen::<f64>())
    }

    #[inline]
    fn step(&self, p: &mut (f64, f64), acc: &mut [i64]) -> Result<()> {
        let (x, y) = torus_lift(&self.spec, *p);
        let (fx, fy) = (x.floor(), y.floor());
        acc[0] += fx as i64;
        acc[1] += fy as i64;
        *p = (x - fx, y - fy);
        Ok(())
    }

    fn recentre(&self, p: &(f64, f64), basepoint: &Basepoint) -> Result<Vec<i64>> {
        Ok(match *basepoint {
            Basepoint::Origin => vec![0, 0],
            Basepoint::Shifted { x, y } => {
                vec![(p.0 - x).floor() as i64, (p.1 - y).floor() as i64]
            }
        })
    }

    fn recentre_bound(&self, basepoint: &Basepoint) -> f64 {
        match basepoint {
            Basepoint::Origin => 0.0,
            Basepoint::Shifted { .. } => 2f64.sqrt(),
        }
    }

    fn arc_bound(&self) -> f64 {
        2f64.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationConfig {
    pub n_iters: usize,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub basepoint: Basepoint,
}

impl RotationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iters == 0 || self.n_samples == 0 {
            return Err(Error::Invalid("n_iters and n_samples must be positive".into()));
        }
        if let Basepoint::Shifted { x, y } = self.basepoint {
            if x * x + y * y >= 1.0 || !x.is_finite() || !y.is_finite() {
                return Err(Error::Invalid("shifted basepoint must lie in the disk".into()));
            }
        }
        Ok(())
    }
}

/// Checkpoint iteration counts: powers of two below `n`, then `n`.
pub fn checkpoints(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..usize::BITS)
        .map(|k| 1usize << k)
        .take_while(|&m| m < n)
        .collect();
    out.push(n);
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitSample<P> {
    pub start: P,
    /// `(n, Ψⁿ)` at each checkpoint.
    pub checkpoints: Vec<(usize, HomologyClass)>,
}

/// Runs an orbit and records Birkhoff sums at the checkpoints.
pub fn orbit<D: CellDynamics>(d: &D, start: D::Point, n: usize) -> Result<OrbitSample<D::Point>> {
    let marks = checkpoints(n);
    let mut acc = vec![0i64; d.rank()];
    let mut p = start;
    let mut out = Vec::with_capacity(marks.len());
    let mut next = 0;
    for i in 1..=n {
        d.step(&mut p, &mut acc)?;
        if i == marks[next] {
            out.push((i, HomologyClass(acc.clone())));
            next += 1;
        }
    }
    Ok(OrbitSample {
        start,
        checkpoints: out,
    })
}

/// `Ψⁿ(p)` for a point of the base cell.
pub fn displacement_class<D: CellDynamics>(d: &D, p: D::Point, n: usize) -> Result<HomologyClass> {
    let mut acc = vec![0i64; d.rank()];
    let mut q = p;
    for _ in 0..n {
        d.step(&mut q, &mut acc)?;
    }
    Ok(HomologyClass(acc))
}

/// Endpoint of an orbit segment along with its displacement.
pub fn displacement_with_end<D: CellDynamics>(
    d: &D,
    p: D::Point,
    n: usize,
) -> Result<(HomologyClass, D::Point)> {
    let mut acc = vec![0i64; d.rank()];
    let mut q = p;
    for _ in 0..n {
        d.step(&mut q, &mut acc)?;
    }
    Ok((HomologyClass(acc), q))
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationVector {
    pub vector: Vec<f64>,
    pub n: usize,
    /// `‖Ψⁿ/n − Ψ^{n/2}/(n/2)‖`.
    pub cauchy_gap: f64,
}

pub fn rotation_vector<D: CellDynamics>(d: &D, p: D::Point, n: usize) -> Result<RotationVector> {
    if n == 0 {
        return Err(Error::Invalid("n must be positive".into()));
    }
    let half = (n / 2).max(1);
    let (a, mid) = displacement_with_end(d, p, half)?;
    let b = displacement_class(d, mid, n - half)?;
    let total = a.add(&b);
    let v: Vec<f64> = total.to_f64().iter().map(|x| x / n as f64).collect();
    let h: Vec<f64> = a.to_f64().iter().map(|x| x / half as f64).collect();
    let gap = norm(&v.iter().zip(&h).map(|(x, y)| x - y).collect::<Vec<_>>());
    Ok(RotationVector {
        vector: v,
        n,
        cauchy_gap: gap,
    })
}

/// Per-sample generator: the configured seed on stream `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportSample {
    pub direction: Vec<f64>,
    pub value: f64,
    /// Index into the cloud of a maximizer.
    pub argmax: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationSetEstimate {
    pub n_iters: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub basepoint: Basepoint,
    /// Bound on reference arcs, `C_A`.
    pub arc_bound: f64,
    /// `Ψⁿ/n` per sample.
    pub cloud: Vec<Vec<f64>>,
    /// Exact integer sums `Ψⁿ` behind the cloud.
    #[serde(skip)]
    pub sums: Vec<HomologyClass>,
    pub support: Vec<SupportSample>,
    /// Cloud indices of the support maximizers.
    pub hull_vertices: Vec<usize>,
    pub mean: Vec<f64>,
}

impl RotationSetEstimate {
    pub fn rank(&self) -> usize {
        self.cloud.first().map_or(0, |v| v.len())
    }

    pub fn vertex_points(&self) -> Vec<Vec<f64>> {
        self.hull_vertices.iter().map(|&i| self.cloud[i].clone()).collect()
    }

    /// Sampled support function `max_x ⟨x, u⟩`.
    pub fn support_value(&self, u: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, x) in self.cloud.iter().enumerate() {
            let v = dot(x, u);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Exact depth of `v` in the hull of the extreme points (rational
    /// arithmetic on the cloud values).
    pub fn depth(&self, v: &[f64]) -> Depth {
        let pts: Vec<Vec<Q>> = self
            .hull_vertices
            .iter()
            .map(|&i| {
                let n = Q::from_integer(self.n_iters.into());
                self.sums[i].0.iter().map(|&s| Q::from_integer(s.into()) / &n).collect()
            })
            .collect();
        let vq: Vec<Q> = v.iter().map(|&x| q_from_f64(x)).collect();
        hull_depth(&pts, &vq)
    }

    /// Radius of a ball around `v` guaranteed inside the hull, or a negative
    /// number when `v` is not interior.
    pub fn interior_margin(&self, v: &[f64]) -> f64 {
        match self.depth(v) {
            // the cross-polytope of radius t contains the ball of radius t/√d
            Depth::Interior { margin } => q_to_f64(&margin) / (v.len() as f64).sqrt(),
            Depth::Boundary { .. } => 0.0,
            Depth::Outside { .. } => -1.0,
        }
    }
}

/// Radical-inverse (Halton) value of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Deterministic direction net: `±e_j` followed by `extra` low-discrepancy
/// unit vectors.
pub fn direction_net(rank: usize, extra: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * rank + extra);
    for j in 0..rank {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; rank];
            e[j] = s;
            out.push(e);
        }
    }
    let dims = rank + rank % 2;
    for i in 1..=extra as u64 {
        let u: Vec<f64> = (0..dims).map(|k| radical_inverse(i, PRIMES[k])).collect();
        let mut v = Vec::with_capacity(dims);
        for pair in u.chunks(2) {
            // Box–Muller on Halton coordinates
            let r = (-2.0 * pair[0].max(1e-300).ln()).sqrt();
            let t = std::f64::consts::TAU * pair[1];
            v.push(r * t.cos());
            v.push(r * t.sin());
        }
        v.truncate(rank);
        let n = norm(&v);
        if n > 0.0 {
            out.push(v.iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Unit vectors drawn from the rotation-invariant distribution.
pub fn random_directions(rank: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = sample_rng(seed, 0xd1ec);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..rank).map(|_| rng.sample(StandardNormal)).collect();
            let n = norm(&v);
            if n > 1e-12 {
                break v.iter().map(|x| x / n).collect();
            }
        })
        .collect()
}

/// Number of low-discrepancy directions in the hull net.
pub const NET_DIRECTIONS: usize = 512;

/// Samples orbits from area-distributed starts and returns the cloud
/// `Ψⁿ/n`, its sampled support function and extreme points. Deterministic
/// for a fixed seed regardless of thread scheduling.
pub fn mz_estimate<D: CellDynamics>(d: &D, cfg: &RotationConfig) -> Result<RotationSetEstimate> {
    cfg.validate()?;
    let n = cfg.n_iters;
    let sums: Vec<HomologyClass> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i as u64);
            let p = d.sample_point(&mut rng);
            let (mut psi, end) = displacement_with_end(d, p, n)?;
            if cfg.basepoint != Basepoint::Origin {
                let a = d.recentre(&p, &cfg.basepoint)?;
                let b = d.recentre(&end, &cfg.basepoint)?;
                for j in 0..psi.0.len() {
                    psi.0[j] += b[j] - a[j];
                }
            }
            Ok(psi)
        })
        .collect::<Result<_>>()?;
    Ok(estimate_from_sums(d.rank(), sums, cfg, d.arc_bound()))
}

pub fn estimate_from_sums(
    rank: usize,
    sums: Vec<HomologyClass>,
    cfg: &RotationConfig,
    arc_bound: f64,
) -> RotationSetEstimate {
    let n = cfg.n_iters as f64;
    let cloud: Vec<Vec<f64>> = sums
        .iter()
        .map(|s| s.0.iter().map(|&x| x as f64 / n).collect())
        .collect();
    let mut mean = vec![0.0; rank];
    for x in &cloud {
        for j in 0..rank {
            mean[j] += x[j] / cloud.len() as f64;
        }
    }
    let mut est = RotationSetEstimate {
        n_iters: cfg.n_iters,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        basepoint: cfg.basepoint,
        arc_bound,
        cloud,
        sums,
        support: Vec::new(),
        hull_vertices: Vec::new(),
        mean,
    };
    let mut vertices = Vec::new();
    for u in direction_net(rank, NET_DIRECTIONS) {
        let (value, argmax) = est.support_value(&u);
        if !vertices.contains(&argmax) {
            vertices.push(argmax);
        }
        est.support.push(SupportSample {
            direction: u,
            value,
            argmax,
        });
    }
    vertices.sort_unstable();
    est.hull_vertices = vertices;
    est
}

/// Affine dimension of the extreme points (singular values above `1e-6`
/// relative to the largest).
pub fn hull_dimension(est: &RotationSetEstimate) -> usize {
    affine_rank(&est.vertex_points(), 1e-6)
}

pub fn affine_rank(points: &[Vec<f64>], rel_tol: f64) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let d = points[0].len();
    let k = points.len();
    let m = DMatrix::from_fn(k - 1, d, |i, j| points[i + 1][j] - points[0][j]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct LebesgueVector {
    pub vector: Vec<f64>,
    pub standard_error: Vec<f64>,
    /// Three standard errors, in norm.
    pub confidence_radius: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Average of `Ψ¹` over area-distributed samples.
pub fn lebesgue_average<D: CellDynamics>(d: &D, cfg: &RotationConfig) -> Result<LebesgueVector> {
    cfg.validate()?;
    let rank = d.rank();
    let steps: Vec<Vec<i64>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed ^ 0x1eb5_e58e, i as u64);
            let p = d.sample_point(&mut rng);
            Ok(displacement_class(d, p, 1)?.0)
        })
        .collect::<Result<_>>()?;
    let n = steps.len() as f64;
    let mut mean = vec![0.0; rank];
    for s in &steps {
        for j in 0..rank {
            mean[j] += s[j] as f64 / n;
        }
    }
    let mut var = vec![0.0; rank];
    for s in &steps {
        for j in 0..rank {
            var[j] += (s[j] as f64 - mean[j]).powi(2) / (n - 1.0).max(1.0);
        }
    }
    let se: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
    Ok(LebesgueVector {
        confidence_radius: 3.0 * norm(&se),
        vector: mean,
        standard_error: se,
        samples: steps.len(),
        seed: cfg.seed,
    })
}

/// Rotation vector of hyperbolic area; requires the area check to pass.
pub fn measure_vector_lebesgue(map: &LiftedMap, cfg: &RotationConfig) -> Result<LebesgueVector> {
    let rep = area_check(map, 1000, cfg.seed)?;
    if !rep.passed {
        return Err(Error::NotAreaPreserving {
            max_defect: rep.max_defect,
        });
    }
    lebesgue_average(map, cfg)
}

/// A boundary point with an outward unit normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportTarget {
    pub omega: Vec<f64>,
    pub normal: Vec<f64>,
}

impl SupportTarget {
    /// The support point of `est` in direction `u`.
    pub fn from_direction(est: &RotationSetEstimate, u: &[f64]) -> SupportTarget {
        let n = norm(u);
        let normal: Vec<f64> = u.iter().map(|x| x / n).collect();
        let (_, i) = est.support_value(&normal);
        SupportTarget {
            omega: est.cloud[i].clone(),
            normal,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationReport {
    pub omega: Vec<f64>,
    pub normal: Vec<f64>,
    /// Largest `(Ψⁿ(p) − nω)·v_H` over the sampled points and `n ≤ n_iters`.
    pub max_deviation: f64,
    /// `(n, running max up to n)` at the checkpoints.
    pub growth: Vec<(usize, f64)>,
    /// Least-squares slope of the running max against `n`.
    pub slope: f64,
    pub slope_limit: f64,
    pub flagged: bool,
}

/// Support validation tolerance.
pub const SUPPORT_TOL: f64 = 1e-3;
/// Slope above which the running max counts as growing.
pub const SLOPE_LIMIT: f64 = 0.01;

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(points: &[(usize, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 as f64 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Deviation statistics along several supporting directions at once, from
/// one shared set of orbits (fresh samples, seed stream offset).
pub fn deviation_stats<D: CellDynamics>(
    d: &D,
    cfg: &RotationConfig,
    est: &RotationSetEstimate,
    targets: &[SupportTarget],
) -> Result<Vec<DeviationReport>> {
    cfg.validate()?;
    for t in targets {
        if (norm(&t.normal) - 1.0).abs() > 1e-9 || t.omega.len() != d.rank() {
            return Err(Error::Invalid("normal must be a unit vector of full rank".into()));
        }
        let (h, _) = est.support_value(&t.normal);
        let gap = h - dot(&t.omega, &t.normal);
        if gap.abs() > SUPPORT_TOL {
            return Err(Error::NotSupporting { gap });
        }
    }
    let marks = checkpoints(cfg.n_iters);
    let rank = d.rank();
    // per sample: running max at each checkpoint for each target
    let per_sample: Vec<Vec<Vec<f64>>> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed ^ 0xde71_a7e0, i as u64);
            let mut p = d.sample_point(&mut rng);
            let mut acc = vec![0i64; rank];
            let mut best = vec![f64::NEG_INFINITY; targets.len()];
            let mut rows = Vec::with_capacity(marks.len());
            let mut next = 0;
            for n in 1..=cfg.n_iters {
                d.step(&mut p, &mut acc)?;
                for (b, t) in best.iter_mut().zip(targets) {
                    let mut dev = 0.0;
                    for j in 0..rank {
                        dev += (acc[j] as f64 - n as f64 * t.omega[j]) * t.normal[j];
                    }
                    *b = b.max(dev);
                }
                if n == marks[next] {
                    rows.push(best.clone());
                    next += 1;
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(targets.len());
    for (k, t) in targets.iter().enumerate() {
        let growth: Vec<(usize, f64)> = marks
            .iter()
            .enumerate()
            .map(|(c, &n)| {
                let m = per_sample
                    .iter()
                    .map(|rows| rows[c][k])
                    .fold(f64::NEG_INFINITY, f64::max);
                (n, m)
            })
            .collect();
        let slope = ls_slope(&growth);
        out.push(DeviationReport {
            omega: t.omega.clone(),
            normal: t.normal.clone(),
            max_deviation: growth.last().map_or(0.0, |g| g.1),
            growth,
            slope,
            slope_limit: SLOPE_LIMIT,
            flagged: slope > SLOPE_LIMIT,
        });
    }
    Ok(out)
}

pub fn deviation_stat<D: CellDynamics>(
    d: &D,
    cfg: &RotationConfig,
    est: &RotationSetEstimate,
    omega: &[f64],
    normal: &[f64],
) -> Result<DeviationReport> {
    let t = SupportTarget {
        omega: omega.to_vec(),
        normal: normal.to_vec(),
    };
    Ok(deviation_stats(d, cfg, est, &[t])?.remove(0))
}

/// Hausdorff distance between the hull of a planar cloud and a segment.
pub fn hausdorff_to_segment(cloud: &[Vec<f64>], a: [f64; 2], b: [f64; 2]) -> f64 {
    let hull = convex_hull_2d(cloud);
    let seg_dist = |p: [f64; 2]| -> f64 {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
        };
        ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
    };
    let forward = hull.iter().map(|&p| seg_dist(p)).fold(0.0, f64::max);
    let backward = [a, b]
        .iter()
        .map(|&p| polygon_distance(&hull, p))
        .fold(0.0, f64::max);
    forward.max(backward)
}

/// Counter-clockwise hull (monotone chain).
pub fn convex_hull_2d(cloud: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = cloud.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from `p` to a convex polygon (zero inside).
fn polygon_distance(hull: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let seg = |a: [f64; 2], b: [f64; 2]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
        };
        ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
    };
    match hull.len() {
        0 => f64::INFINITY,
        1 => seg(hull[0], hull[0]),
        2 => seg(hull[0], hull[1]),
        n => {
            let inside = (0..n).all(|i| {
                let a = hull[i];
                let b = hull[(i + 1) % n];
                (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
            });
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| seg(hull[i], hull[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Cell words of an orbit, for the realization search.
pub fn orbit_words(map: &LiftedMap, start: DiskPoint, n: usize) -> Result<Vec<(GroupWord, DiskPoint)>> {
    let mut q = start;
    let mut out = Vec::with_capacity(n);
    let mut w = GroupWord::empty();
    for _ in 0..n {
        map.step_cell_word(&mut q, &mut w)?;
        out.push((w.clone(), q));
    }
    Ok(out)
}
