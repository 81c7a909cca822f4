//! Realizing rotation vectors by periodic orbits.
//!
//! Extremal data (deck word, period) come from near-returns of sampled
//! orbits, checked by a local periodic-point solve. A rational target is
//! written as a convex combination of at most `4g` data, the weights are
//! cleared to integers, and the concatenated deck word is certified in exact
//! integer arithmetic.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::LiftedMap;
use crate::error::{Error, Result};
use crate::group::{abelianize, GroupWord};
use crate::hyperbolic::{dist, DiskPoint, FermiCoords, Isometry, IsometryKind};
use crate::lp::{hull_depth, q, q_from_f64, q_to_f64, ray_depth, Depth, Q};
use crate::rotation::sample_rng;

/// Default residual tolerance for periodic points.
pub const SEARCH_TOL: f64 = 1e-6;

/// Decimal-string (de)serialization of exact numbers.
pub mod decimal {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn q_to_string(x: &Q) -> String {
        if x.denom().is_one() {
            x.numer().to_string()
        } else {
            format!("{}/{}", x.numer(), x.denom())
        }
    }

    pub fn q_parse(s: &str) -> std::result::Result<Q, String> {
        let parse = |t: &str| t.trim().parse::<BigInt>().map_err(|e| format!("{t:?}: {e}"));
        match s.split_once('/') {
            None => Ok(Q::from_integer(parse(s)?)),
            Some((n, d)) => {
                let d = parse(d)?;
                if d.is_zero() {
                    return Err("zero denominator".into());
                }
                Ok(Q::new(parse(n)?, d))
            }
        }
    }

    pub mod qs {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(q_to_string))
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
            let raw: Vec<String> = Vec::deserialize(d)?;
            raw.iter().map(|t| q_parse(t).map_err(D::Error::custom)).collect()
        }
    }

    pub mod int {
        use super::*;
        pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
            s.serialize_str(&v.to_string())
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigInt, D::Error> {
            let raw = String::deserialize(d)?;
            raw.parse().map_err(D::Error::custom)
        }
    }

    pub mod ints {
        use super::*;
        pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| x.to_string()))
        }
        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigInt>, D::Error> {
            let raw: Vec<String> = Vec::deserialize(d)?;
            raw.iter().map(|t| t.parse().map_err(D::Error::custom)).collect()
        }
    }
}

/// A deck word realized with period `n`, with `abelianize(word) = n·w`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalDatum {
    #[serde(with = "decimal::qs")]
    pub w: Vec<Q>,
    pub word: GroupWord,
    pub n: u64,
}

impl ExtremalDatum {
    pub fn new(word: GroupWord, n: u64, rank: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("period must be positive".into()));
        }
        let h = abelianize(&word, rank);
        let nq = q(n as i64);
        Ok(ExtremalDatum {
            w: h.0.iter().map(|&x| q(x) / &nq).collect(),
            word,
            n,
        })
    }

    pub fn is_consistent(&self) -> bool {
        let h = abelianize(&self.word, self.w.len());
        let nq = q(self.n as i64);
        h.0.iter().zip(&self.w).all(|(&x, w)| q(x) == w * &nq)
    }

    pub fn w_f64(&self) -> Vec<f64> {
        self.w.iter().map(q_to_f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPointResult {
    #[serde(rename = "N")]
    pub n: usize,
    pub g: GroupWord,
    pub point: DiskPoint,
    /// `d(f̃ᴺ(r̃), g(r̃))`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Grid points per axis over the bounding square of the domain.
    pub grid: usize,
    /// Grid minima passed to local refinement.
    pub keep: usize,
    /// Golden-section sweeps before the Newton polish.
    pub sweeps: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid: 40,
            keep: 8,
            sweeps: 6,
        }
    }
}

/// `g⁻¹ f̃ⁿ(p)`, evaluated through cell words.
fn pulled_back(map: &LiftedMap, g_inv: &GroupWord, p: DiskPoint, n: usize) -> Result<DiskPoint> {
    let (mut q, h) = map.group.reduce_to_domain(p)?;
    let mut w = g_inv.concat(&h);
    for _ in 0..n {
        map.step_cell_word(&mut q, &mut w)?;
    }
    Ok(map.group.evaluate(&w)?.apply(q))
}

/// `d(f̃ⁿ(p), g(p))`.
pub fn verify_periodic(map: &LiftedMap, n: usize, g: &GroupWord, p: DiskPoint) -> Result<f64> {
    Ok(dist(pulled_back(map, &g.inverse(), p, n)?, p))
}

fn residual_at(map: &LiftedMap, g_inv: &GroupWord, n: usize, x: f64, y: f64) -> f64 {
    if x * x + y * y >= 1.0 {
        return f64::INFINITY;
    }
    let p = DiskPoint { x, y };
    match pulled_back(map, g_inv, p, n) {
        Ok(t) => dist(t, p),
        Err(_) => f64::INFINITY,
    }
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// Damped Gauss–Newton on the displacement `g⁻¹f̃ⁿ(p) − p`; returns the
/// best point seen and its residual.
fn newton(map: &LiftedMap, g_inv: &GroupWord, n: usize, start: (f64, f64)) -> ((f64, f64), f64) {
    let f = |x: f64, y: f64| residual_at(map, g_inv, n, x, y);
    let disp = |x: f64, y: f64| -> Option<[f64; 2]> {
        if x * x + y * y >= 1.0 {
            return None;
        }
        let t = pulled_back(map, g_inv, DiskPoint { x, y }, n).ok()?;
        Some([t.x - x, t.y - y])
    };
    let (mut x, mut y) = start;
    let mut best = f(x, y);
    let mut mu = 1e-12;
    for _ in 0..60 {
        if best < 1e-13 {
            break;
        }
        let Some(r0) = disp(x, y) else { break };
        let e = 1e-8 * (1.0 - x * x - y * y);
        let (Some(rx), Some(ry)) = (disp(x + e, y), disp(x, y + e)) else {
            break;
        };
        let j = [
            [(rx[0] - r0[0]) / e, (ry[0] - r0[0]) / e],
            [(rx[1] - r0[1]) / e, (ry[1] - r0[1]) / e],
        ];
        // (JᵀJ + μ·scale·I) δ = −Jᵀ r
        let n11 = j[0][0] * j[0][0] + j[1][0] * j[1][0];
        let n22 = j[0][1] * j[0][1] + j[1][1] * j[1][1];
        let damp = mu * 0.5 * (n11 + n22);
        let (a11, a22) = (n11 + damp, n22 + damp);
        let a12 = j[0][0] * j[0][1] + j[1][0] * j[1][1];
        let b1 = -(j[0][0] * r0[0] + j[1][0] * r0[1]);
        let b2 = -(j[0][1] * r0[0] + j[1][1] * r0[1]);
        let det = a11 * a22 - a12 * a12;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = (b1 * a22 - b2 * a12) / det;
        let dy = (a11 * b2 - a12 * b1) / det;
        let trial = f(x + dx, y + dy);
        if trial < best {
            x += dx;
            y += dy;
            best = trial;
            mu = (mu * 0.1).max(1e-15);
        } else {
            mu *= 10.0;
            if mu > 1e3 {
                break;
            }
        }
    }
    ((x, y), best)
}

/// Local solve of `f̃ⁿ(p) = g(p)` from `start`: Newton first, then
/// coordinate golden-section sweeps on the residual followed by Newton again
/// if that did not converge.
pub fn refine_from(
    map: &LiftedMap,
    g: &GroupWord,
    n: usize,
    start: DiskPoint,
    bracket: f64,
    sweeps: usize,
) -> Result<PeriodicPointResult> {
    map.group.check_word(g)?;
    let g_inv = g.inverse();
    let f = |x: f64, y: f64| residual_at(map, &g_inv, n, x, y);
    let (mut p, mut best) = newton(map, &g_inv, n, (start.x, start.y));
    if best >= 1e-13 && sweeps > 0 {
        let (mut x, mut y) = (start.x, start.y);
        let mut here = f(x, y);
        let mut h = bracket;
        for _ in 0..sweeps {
            let tx = golden(|t| f(t, y), x - h, x + h, 30);
            if f(tx, y) < here {
                x = tx;
                here = f(x, y);
            }
            let ty = golden(|t| f(x, t), y - h, y + h, 30);
            if f(x, ty) < here {
                y = ty;
                here = f(x, y);
            }
            h *= 0.5;
        }
        let (q, r) = newton(map, &g_inv, n, (x, y));
        if r < best {
            p = q;
            best = r;
        }
    }
    Ok(PeriodicPointResult {
        n,
        g: g.clone(),
        point: DiskPoint { x: p.0, y: p.1 },
        residual: best,
    })
}

/// Translating elements `h` whose image of the domain meets one fundamental
/// segment of the axis of `g`, paired with `h⁻¹gh`. A periodic orbit of
/// class `g` has a point `r̃ = h·r̃₀` with `r̃₀` in the domain and
/// `f̃ᴺ(r̃₀) = h⁻¹gh(r̃₀)`.
pub fn domain_conjugates(map: &LiftedMap, g: &GroupWord) -> Result<Vec<(GroupWord, GroupWord)>> {
    let iso = map.group.evaluate(g)?;
    let (Ok(IsometryKind::Hyperbolic), Ok(len), Ok(axis)) =
        (iso.classify(), iso.translation_length(), iso.axis())
    else {
        return Ok(vec![(GroupWord::empty(), g.clone())]);
    };
    let frame = axis.frame();
    let r = map.group.domain.circumradius;
    let reach = axis.distance_to_point(DiskPoint::ORIGIN) + len / 2.0 + r + 1e-6;
    let mut out = Vec::new();
    for (h, hi) in map.group.elements_within(reach) {
        let c = frame.to_fermi(hi.apply(DiskPoint::ORIGIN));
        if c.d.abs() <= r + 1e-9 && c.s >= -len / 2.0 && c.s < len / 2.0 {
            let conj = g.conjugate_by(&h.inverse());
            out.push((h, conj));
        }
    }
    if out.is_empty() {
        out.push((GroupWord::empty(), g.clone()));
    }
    Ok(out)
}

/// Grid plus local refinement at one period; the best result found. The
/// grid covers the domain and every conjugate from [`domain_conjugates`];
/// the returned point satisfies `f̃ᴺ(r̃) ≈ g(r̃)` for `g` itself.
pub fn search_period(
    map: &LiftedMap,
    g: &GroupWord,
    n: usize,
    cfg: &SearchConfig,
) -> Result<PeriodicPointResult> {
    map.group.check_word(g)?;
    if n == 0 {
        return Err(Error::Invalid("period must be positive".into()));
    }
    let conj = domain_conjugates(map, g)?;
    let conj_iso: Vec<Isometry> = conj
        .iter()
        .map(|(_, c)| map.group.evaluate(c))
        .collect::<Result<_>>()?;
    let rmax = (map.group.domain.circumradius / 2.0).tanh();
    let step = 2.0 * rmax / cfg.grid as f64;
    let mut grid = Vec::new();
    for i in 0..cfg.grid {
        for j in 0..cfg.grid {
            let p = DiskPoint {
                x: -rmax + (i as f64 + 0.5) * step,
                y: -rmax + (j as f64 + 0.5) * step,
            };
            if p.norm_sqr() < rmax * rmax && map.group.domain.contains(&map.group, p, 1e-9) {
                grid.push(p);
            }
        }
    }
    let empty = GroupWord::empty();
    let mut scored: Vec<(f64, usize, usize)> = grid
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, &p)| {
            let image = pulled_back(map, &empty, p, n).ok();
            conj_iso.iter().enumerate().map(move |(k, c)| match image {
                Some(t) => (dist(t, c.apply(p)), i, k),
                None => (f64::INFINITY, i, k),
            })
        })
        .collect();
    scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let refined: Vec<PeriodicPointResult> = scored
        .par_iter()
        .take(cfg.keep.max(1))
        .map(|&(_, i, k)| {
            let local = refine_from(map, &conj[k].1, n, grid[i], step, cfg.sweeps)?;
            if !local.residual.is_finite() {
                return Ok(local);
            }
            let point = map.group.evaluate(&conj[k].0)?.apply(local.point);
            Ok(PeriodicPointResult {
                n,
                g: g.clone(),
                point,
                residual: verify_periodic(map, n, g, point)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(refined
        .into_iter()
        .min_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
        .expect("nonempty grid"))
}

/// First period `N ≤ n_max` with a point satisfying `f̃ᴺ(r̃) = g(r̃)` to
/// within `tol`.
pub fn periodic_point_search(
    map: &LiftedMap,
    g: &GroupWord,
    n_max: usize,
    tol: f64,
) -> Result<PeriodicPointResult> {
    periodic_point_search_with(map, g, n_max, tol, &SearchConfig::default())
}

pub fn periodic_point_search_with(
    map: &LiftedMap,
    g: &GroupWord,
    n_max: usize,
    tol: f64,
    cfg: &SearchConfig,
) -> Result<PeriodicPointResult> {
    if !(tol > 0.0) {
        return Err(Error::Invalid("tol must be positive".into()));
    }
    let mut best_residual = f64::INFINITY;
    for n in 1..=n_max {
        let r = search_period(map, g, n, cfg)?;
        if r.residual < tol {
            return Ok(r);
        }
        best_residual = best_residual.min(r.residual);
    }
    Err(Error::NotFound {
        n_max,
        best_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CandidateConfig {
    /// Area-distributed starts.
    pub starts: usize,
    /// Starts per shear and side, spread along the curve at the centre of
    /// each moving band.
    pub curve_starts: usize,
    pub max_period: usize,
    /// Hyperbolic distance counted as a near-return.
    pub return_radius: f64,
    pub tol: f64,
    pub seed: u64,
    /// Golden-section sweeps when Newton alone stalls.
    pub sweeps: usize,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig {
            starts: 400,
            curve_starts: 0,
            max_period: 64,
            return_radius: 0.05,
            tol: SEARCH_TOL,
            seed: 0,
            sweeps: 0,
        }
    }
}

/// A datum with the periodic point that certifies it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatedDatum {
    pub datum: ExtremalDatum,
    pub witness: PeriodicPointResult,
}

/// Extremal data from near-returns of sampled orbits; each is kept only if a
/// periodic point with the observed deck word and period is found nearby.
/// Distinct rotation vectors only, smallest period first.
pub fn extract_candidates(map: &LiftedMap, cfg: &CandidateConfig) -> Result<Vec<ValidatedDatum>> {
    let rank = map.rank();
    let mut starts: Vec<DiskPoint> = (0..cfg.starts)
        .map(|i| map.group.sample_uniform(&mut sample_rng(cfg.seed ^ 0xca4d_1da7e, i as u64)))
        .collect();
    for (shear, curve) in map.spec.shears.iter().zip(&map.curves) {
        let band = if shear.side_offset > 0.0 {
            shear.side_offset
        } else {
            0.0
        };
        for side in [1.0, -1.0] {
            for i in 0..cfg.curve_starts {
                let s = curve.length * ((i as f64 + 0.5) / cfg.curve_starts as f64 - 0.5);
                let p = curve.frame().from_fermi(FermiCoords { s, d: side * band });
                starts.push(map.group.reduce_to_domain(p)?.0);
            }
            if band == 0.0 {
                break;
            }
        }
    }
    let found: Vec<Vec<ValidatedDatum>> = starts
        .par_iter()
        .map(|&p| {
            let mut q = p;
            let mut w = GroupWord::empty();
            let mut out: Vec<ValidatedDatum> = Vec::new();
            for n in 1..=cfg.max_period {
                map.step_cell_word(&mut q, &mut w)?;
                if dist(q, p) >= cfg.return_radius || abelianize(&w, rank).is_zero() {
                    continue;
                }
                let r = refine_from(map, &w, n, p, cfg.return_radius, cfg.sweeps)?;
                if r.residual < cfg.tol {
                    let datum = ExtremalDatum::new(w.clone(), n as u64, rank)?;
                    if !out.iter().any(|d| d.datum.w == datum.w) {
                        out.push(ValidatedDatum { datum, witness: r });
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<ValidatedDatum> = Vec::new();
    for d in found.into_iter().flatten() {
        match all.iter_mut().find(|e| e.datum.w == d.datum.w) {
            Some(e) => {
                let key = |v: &ValidatedDatum| (v.datum.n, v.datum.word.len());
                if key(&d) < key(e) {
                    *e = d;
                }
            }
            None => all.push(d),
        }
    }
    all.sort_by(|a, b| {
        (a.datum.n, &a.datum.w, a.datum.word.to_string()).cmp(&(b.datum.n, &b.datum.w, b.datum.word.to_string()))
    });
    Ok(all)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Indices into the candidate list.
    pub indices: Vec<usize>,
    #[serde(with = "decimal::qs")]
    pub lambda: Vec<Q>,
}

fn generic_direction(d: usize) -> Vec<Q> {
    (0..d)
        .map(|j| {
            let s = if j % 2 == 0 { 1 } else { -1 };
            Q::new(BigInt::from(s), BigInt::from(j as i64 + 2))
        })
        .collect()
}

/// Writes `v` as a convex combination with strictly positive weights of at
/// most `2d` candidates (`d` the rank). Shoots a ray through `v` both ways;
/// each exit point lies on a face spanned by at most `d` candidates.
pub fn steinitz_decompose(v: &[Q], candidates: &[ExtremalDatum]) -> Result<Decomposition> {
    let d = v.len();
    if let Some(got) = candidates.iter().map(|c| c.w.len()).find(|&l| l != d) {
        return Err(Error::DimensionMismatch { expected: d, got });
    }
    if candidates.is_empty() {
        return Err(Error::Invalid("no candidates".into()));
    }
    let pts: Vec<Vec<Q>> = candidates.iter().map(|c| c.w.clone()).collect();
    match hull_depth(&pts, v) {
        Depth::Interior { .. } => {}
        Depth::Boundary { normal } | Depth::Outside { normal } => {
            return Err(Error::NotInterior { separating: normal });
        }
    }
    let u = generic_direction(d);
    let neg: Vec<Q> = u.iter().map(|x| -x.clone()).collect();
    let (tp, lp, _) = ray_depth(&pts, v, &u).map_err(|n| Error::NotInterior { separating: n })?;
    let (tm, lm, _) = ray_depth(&pts, v, &neg).map_err(|n| Error::NotInterior { separating: n })?;
    let total = &tp + &tm;
    let mut indices = Vec::new();
    let mut lambda = Vec::new();
    for i in 0..pts.len() {
        let l = (&tm * &lp[i] + &tp * &lm[i]) / &total;
        if l.is_positive() {
            indices.push(i);
            lambda.push(l);
        }
    }
    let dec = Decomposition { indices, lambda };
    check_decomposition(v, candidates, &dec)?;
    Ok(dec)
}

/// Exact re-substitution: positive weights summing to one reproducing `v`.
pub fn check_decomposition(v: &[Q], candidates: &[ExtremalDatum], dec: &Decomposition) -> Result<()> {
    let d = v.len();
    let sum: Q = dec.lambda.iter().sum();
    let mut acc = vec![Q::zero(); d];
    for (&i, l) in dec.indices.iter().zip(&dec.lambda) {
        for j in 0..d {
            acc[j] += l * &candidates[i].w[j];
        }
    }
    if sum != Q::one()
        || acc != v
        || dec.lambda.iter().any(|l| !l.is_positive())
        || dec.indices.len() > 2 * d
    {
        return Err(Error::Invalid("decomposition does not re-substitute".into()));
    }
    Ok(())
}

/// One factor `word^power` of `h_v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPower {
    pub word: GroupWord,
    #[serde(with = "decimal::int")]
    pub power: BigInt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationCertificate {
    #[serde(with = "decimal::qs")]
    pub v: Vec<Q>,
    pub data: Vec<ExtremalDatum>,
    #[serde(with = "decimal::qs")]
    pub lambda: Vec<Q>,
    #[serde(with = "decimal::ints")]
    pub a: Vec<BigInt>,
    #[serde(with = "decimal::ints")]
    pub u: Vec<BigInt>,
    #[serde(rename = "N_product", with = "decimal::int")]
    pub n_product: BigInt,
    #[serde(with = "decimal::int")]
    pub a_total: BigInt,
    /// `h_v` as the product of `g_{w_i}^{a_i u_i}`.
    pub h_v: Vec<WordPower>,
    /// `abelianize(h_v)`.
    #[serde(with = "decimal::ints")]
    pub homology: Vec<BigInt>,
}

fn abelianize_big(w: &GroupWord, rank: usize) -> Vec<BigInt> {
    abelianize(w, rank).0.into_iter().map(BigInt::from).collect()
}

/// Clears denominators and assembles `h_v`.
pub fn compose_certificate(
    v: &[Q],
    candidates: &[ExtremalDatum],
    dec: &Decomposition,
) -> Result<RealizationCertificate> {
    check_decomposition(v, candidates, dec)?;
    let data: Vec<ExtremalDatum> = dec.indices.iter().map(|&i| candidates[i].clone()).collect();
    let a_total = dec
        .lambda
        .iter()
        .fold(BigInt::one(), |acc, l| acc.lcm(l.denom()));
    let a: Vec<BigInt> = dec
        .lambda
        .iter()
        .map(|l| (l * Q::from_integer(a_total.clone())).to_integer())
        .collect();
    let n_product = data.iter().fold(BigInt::one(), |acc, d| acc * BigInt::from(d.n));
    let u: Vec<BigInt> = data.iter().map(|d| &n_product / BigInt::from(d.n)).collect();
    let h_v = data
        .iter()
        .zip(a.iter().zip(&u))
        .map(|(d, (ai, ui))| WordPower {
            word: d.word.clone(),
            power: ai * ui,
        })
        .collect();
    let mut cert = RealizationCertificate {
        v: v.to_vec(),
        data,
        lambda: dec.lambda.clone(),
        a,
        u,
        n_product,
        a_total,
        h_v,
        homology: Vec::new(),
    };
    cert.homology = cert.homology_from_words();
    if !cert.verify() {
        return Err(Error::Invalid("certificate identity failed".into()));
    }
    Ok(cert)
}

impl RealizationCertificate {
    pub fn rank(&self) -> usize {
        self.v.len()
    }

    /// `Σ power_i · abelianize(word_i)`.
    pub fn homology_from_words(&self) -> Vec<BigInt> {
        let mut acc = vec![BigInt::zero(); self.rank()];
        for f in &self.h_v {
            for (s, x) in acc.iter_mut().zip(abelianize_big(&f.word, self.rank())) {
                *s += &f.power * x;
            }
        }
        acc
    }

    /// `Σ a_i u_i n_i w_i`, from the rational vectors alone.
    pub fn homology_from_vectors(&self) -> Vec<Q> {
        let mut acc = vec![Q::zero(); self.rank()];
        for (d, (ai, ui)) in self.data.iter().zip(self.a.iter().zip(&self.u)) {
            let k = Q::from_integer(ai * ui * BigInt::from(d.n));
            for (s, w) in acc.iter_mut().zip(&d.w) {
                *s += &k * w;
            }
        }
        acc
    }

    /// `a_Total · N_product · v`.
    pub fn target(&self) -> Vec<Q> {
        let k = Q::from_integer(&self.a_total * &self.n_product);
        self.v.iter().map(|x| x * &k).collect()
    }

    /// Both computations of `abelianize(h_v)` agree with each other, with
    /// the stored value and with `a_Total · N_product · v`.
    pub fn verify(&self) -> bool {
        let words: Vec<Q> = self
            .homology_from_words()
            .into_iter()
            .map(Q::from_integer)
            .collect();
        let stored: Vec<Q> = self.homology.iter().cloned().map(Q::from_integer).collect();
        let sum: Q = self.lambda.iter().sum();
        self.data.iter().all(|d| d.is_consistent())
            && sum == Q::one()
            && self.lambda.iter().all(|l| l.is_positive())
            && words == self.homology_from_vectors()
            && words == stored
            && words == self.target()
            && self
                .u
                .iter()
                .zip(&self.data)
                .all(|(u, d)| u * BigInt::from(d.n) == self.n_product)
    }

    /// Letters in `h_v`, before free reduction.
    pub fn word_length(&self) -> BigInt {
        self.h_v
            .iter()
            .map(|f| f.power.abs() * BigInt::from(f.word.len()))
            .sum()
    }

    /// `h_v` spelled out, when it has at most `max_len` letters.
    pub fn materialize(&self, max_len: usize) -> Option<GroupWord> {
        if self.word_length() > BigInt::from(max_len) {
            return None;
        }
        let mut w = GroupWord::empty();
        for f in &self.h_v {
            w = w.concat(&f.word.pow(f.power.to_i64()?));
        }
        Some(w)
    }

    /// Period `a_Total · N_product` of the realizing orbit.
    pub fn period(&self) -> BigInt {
        &self.a_total * &self.n_product
    }
}

/// Looks for the periodic point certified by `cert`: period
/// `a_Total·N_product`, deck word `h_v`. Word and period beyond `max_len`
/// are reported as not found.
pub fn realize_and_verify(
    map: &LiftedMap,
    cert: &RealizationCertificate,
    tol: f64,
    max_len: usize,
) -> Result<PeriodicPointResult> {
    if !cert.verify() {
        return Err(Error::Invalid("certificate identity failed".into()));
    }
    let period = cert.period().to_usize().filter(|&n| n <= max_len);
    let (Some(n), Some(word)) = (period, cert.materialize(max_len)) else {
        return Err(Error::NotFound {
            n_max: max_len,
            best_residual: f64::INFINITY,
        });
    };
    let r = search_period(map, &word, n, &SearchConfig::default())?;
    if r.residual < tol {
        Ok(r)
    } else {
        Err(Error::NotFound {
            n_max: n,
            best_residual: r.residual,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundedSequence {
    /// Datum index chosen at each step.
    pub symbols: Vec<u32>,
    /// `‖Σ u·[g] − n·N_product·v‖` after each step.
    pub deviation: Vec<f64>,
    pub max_deviation: f64,
    /// Guaranteed bound `X + X²/(2r)`.
    pub c_star: f64,
    /// Largest step `X = N_product · max ‖w_i − v‖`.
    pub max_step: f64,
    /// Inscribed radius `r` of the step hull about 0, within its span.
    pub inradius: f64,
    pub n_product: f64,
}

/// Greedy symbol sequence tracking `n·v`: at each step the datum whose step
/// `u_i·[g_{w_i}]` brings the running sum nearest to `(n+1)·N_product·v`.
///
/// If the steps `s_i − N_product·v` contain a ball of radius `r` about 0 in
/// their span and have norms at most `X`, some step decreases any deviation
/// `D` with `‖D‖ ≥ X²/(2r)`, since `‖D + s‖² ≤ ‖D‖² − 2r‖D‖ + X²`; so the
/// deviation never exceeds `X + X²/(2r)`.
pub fn bounded_sequence(v: &[f64], data: &[ExtremalDatum], steps: usize) -> Result<BoundedSequence> {
    let d = v.len();
    if let Some(got) = data.iter().map(|x| x.w.len()).find(|&l| l != d) {
        return Err(Error::DimensionMismatch { expected: d, got });
    }
    if data.is_empty() {
        return Err(Error::Invalid("no data".into()));
    }
    let n_product: f64 = data.iter().map(|x| x.n as f64).product();
    let l = data.iter().fold(1u64, |acc, x| acc.lcm(&x.n));
    // exact numerators over the common period L
    let ints: Vec<Vec<i128>> = data
        .iter()
        .map(|x| {
            x.w.iter()
                .map(|c| (c * q(l as i64)).to_integer().to_i128().expect("small"))
                .collect()
        })
        .collect();
    let e: Vec<Vec<f64>> = data
        .iter()
        .map(|x| x.w_f64().iter().zip(v).map(|(a, b)| a - b).collect())
        .collect();
    let x_max = e
        .iter()
        .map(|s| s.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let inradius = if x_max == 0.0 {
        0.0
    } else {
        relative_inradius(&e)?
    };
    let c_star = if x_max == 0.0 {
        0.0
    } else {
        n_product * (x_max + x_max * x_max / (2.0 * inradius))
    };
    let mut t = vec![0i128; d];
    let mut symbols = Vec::with_capacity(steps);
    let mut deviation = Vec::with_capacity(steps);
    let mut max_dev: f64 = 0.0;
    let lf = l as f64;
    for n in 0..steps {
        let target = (n + 1) as f64;
        let mut best = (f64::INFINITY, 0usize);
        for (i, s) in ints.iter().enumerate() {
            let mut norm2 = 0.0;
            for j in 0..d {
                let c = (t[j] + s[j]) as f64 / lf - target * v[j];
                norm2 += c * c;
            }
            if norm2 < best.0 {
                best = (norm2, i);
            }
        }
        for j in 0..d {
            t[j] += ints[best.1][j];
        }
        let dev = n_product * best.0.sqrt();
        max_dev = max_dev.max(dev);
        symbols.push(best.1 as u32);
        deviation.push(dev);
    }
    Ok(BoundedSequence {
        symbols,
        deviation,
        max_deviation: max_dev,
        c_star,
        max_step: n_product * x_max,
        inradius: n_product * inradius,
        n_product,
    })
}

/// Radius of a ball about 0 inside `conv(steps)` within their linear span.
fn relative_inradius(steps: &[Vec<f64>]) -> Result<f64> {
    let d = steps[0].len();
    let m = DMatrix::from_fn(steps.len(), d, |i, j| steps[i][j]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let basis: Vec<Vec<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 1e-9 * top)
        .map(|(k, _)| vt.row(k).iter().cloned().collect())
        .collect();
    let k = basis.len();
    let coords: Vec<Vec<Q>> = steps
        .iter()
        .map(|s| {
            basis
                .iter()
                .map(|b| q_from_f64(b.iter().zip(s).map(|(x, y)| x * y).sum()))
                .collect()
        })
        .collect();
    let lift = |normal: Vec<Q>| -> Vec<Q> {
        (0..d)
            .map(|j| {
                normal
                    .iter()
                    .zip(&basis)
                    .map(|(c, b)| c * q_from_f64(b[j]))
                    .sum()
            })
            .collect()
    };
    match hull_depth(&coords, &vec![Q::zero(); k]) {
        Depth::Interior { margin } => {
            let r = q_to_f64(&margin) / (k as f64).sqrt();
            if r < 1e-9 {
                Err(Error::NotInterior {
                    separating: Vec::new(),
                })
            } else {
                Ok(r)
            }
        }
        Depth::Boundary { normal } | Depth::Outside { normal } => Err(Error::NotInterior {
            separating: lift(normal),
        }),
    }
}

/// A nonzero rational point in the relative interior of the data hull: the
/// centroid, or halfway from it to a nonzero datum when the centroid is 0.
pub fn interior_target(data: &[ExtremalDatum]) -> Option<Vec<Q>> {
    let d = data.first()?.w.len();
    let k = q(data.len() as i64);
    let c: Vec<Q> = (0..d)
        .map(|j| data.iter().map(|x| x.w[j].clone()).sum::<Q>() / &k)
        .collect();
    if c.iter().any(|x| !x.is_zero()) {
        return Some(c);
    }
    let w = data.iter().find(|x| x.w.iter().any(|c| !c.is_zero()))?;
    Some(w.w.iter().map(|x| x / q(2)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RealizeConfig {
    pub candidates: CandidateConfig,
    /// Largest period and `h_v` length attempted by the final search.
    pub max_word_len: usize,
    pub tol: f64,
    /// Length of the greedy stream for the irrational target.
    pub stream_steps: usize,
}

impl Default for RealizeConfig {
    fn default() -> Self {
        RealizeConfig {
            candidates: CandidateConfig::default(),
            max_word_len: 256,
            tol: SEARCH_TOL,
            stream_steps: 100_000,
        }
    }
}

/// Outcome of the final periodic-point search for `h_v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RealizationAttempt {
    Found(PeriodicPointResult),
    /// Period or word beyond the search limits.
    TooLong { period: String, word_length: String },
    NotFound { best_residual: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationRun {
    pub data: Vec<ValidatedDatum>,
    #[serde(with = "decimal::qs")]
    pub v: Vec<Q>,
    pub certificate: RealizationCertificate,
    pub attempt: RealizationAttempt,
    /// Irrational target near `v` and its greedy stream summary.
    pub irrational_v: Vec<f64>,
    pub stream_max_deviation: f64,
    pub stream_c_star: f64,
    pub stream_steps: usize,
    /// Number of data the stream draws from, and their period product.
    pub stream_data: usize,
    pub stream_n_product: f64,
}

/// `v` moved by a quarter of its inscribed radius along an irrational
/// direction; stays inside the data hull.
pub fn irrational_target(data: &[ExtremalDatum], v: &[Q]) -> Result<Vec<f64>> {
    let pts: Vec<Vec<Q>> = data.iter().map(|d| d.w.clone()).collect();
    let margin = match hull_depth(&pts, v) {
        Depth::Interior { margin } => q_to_f64(&margin),
        Depth::Boundary { normal } | Depth::Outside { normal } => {
            return Err(Error::NotInterior { separating: normal })
        }
    };
    let d = v.len();
    let dir: Vec<f64> = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0]
        .iter()
        .cycle()
        .take(d)
        .map(|p| p.sqrt())
        .collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r = margin / (d as f64).sqrt() / 4.0;
    Ok(v.iter().zip(&dir).map(|(x, u)| q_to_f64(x) + r * u / norm).collect())
}

/// Candidate extraction, Steinitz decomposition of an interior target,
/// certificate, realization attempt and the irrational stream.
pub fn realize(map: &LiftedMap, cfg: &RealizeConfig) -> Result<RealizationRun> {
    let data = extract_candidates(map, &cfg.candidates)?;
    let datums: Vec<ExtremalDatum> = data.iter().map(|d| d.datum.clone()).collect();
    let v = interior_target(&datums).ok_or_else(|| Error::Invalid("no validated data".into()))?;
    let dec = steinitz_decompose(&v, &datums)?;
    let certificate = compose_certificate(&v, &datums, &dec)?;
    let attempt = match realize_and_verify(map, &certificate, cfg.tol, cfg.max_word_len) {
        Ok(r) => RealizationAttempt::Found(r),
        Err(Error::NotFound { best_residual, .. }) if best_residual.is_finite() => {
            RealizationAttempt::NotFound { best_residual }
        }
        Err(Error::NotFound { .. }) => RealizationAttempt::TooLong {
            period: certificate.period().to_string(),
            word_length: certificate.word_length().to_string(),
        },
        Err(e) => return Err(e),
    };
    // the certificate's data keep N_product small; the full set is the fallback
    let (irrational_v, stream, stream_data) = match irrational_target(&certificate.data, &v) {
        Ok(t) => {
            let s = bounded_sequence(&t, &certificate.data, cfg.stream_steps)?;
            (t, s, certificate.data.len())
        }
        Err(Error::NotInterior { .. }) => {
            let t = irrational_target(&datums, &v)?;
            let s = bounded_sequence(&t, &datums, cfg.stream_steps)?;
            (t, s, datums.len())
        }
        Err(e) => return Err(e),
    };
    Ok(RealizationRun {
        data,
        v,
        certificate,
        attempt,
        irrational_v,
        stream_max_deviation: stream.max_deviation,
        stream_c_star: stream.c_star,
        stream_steps: cfg.stream_steps,
        stream_data,
        stream_n_product: stream.n_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_map, MapSpec, ShearSpec};
    use crate::group::SurfaceGroup;
    use proptest::prelude::*;

    fn qs(xs: &[(i64, i64)]) -> Vec<Q> {
        xs.iter().map(|&(n, d)| Q::new(n.into(), d.into())).collect()
    }

    fn axis_data(genus: usize) -> Vec<ExtremalDatum> {
        let mut out = Vec::new();
        for gen in 0..2 * genus {
            for inv in [false, true] {
                let w = GroupWord::from_letters([crate::group::Letter::new(gen, inv)]);
                out.push(ExtremalDatum::new(w, 1, 2 * genus).unwrap());
            }
        }
        out
    }

    #[test]
    fn vertex_is_not_interior() {
        let data = axis_data(2);
        let v = data[0].w.clone();
        match steinitz_decompose(&v, &data) {
            Err(Error::NotInterior { separating }) => assert_eq!(separating.len(), 4),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn origin_from_axis_data() {
        let data = axis_data(2);
        let v = vec![Q::zero(); 4];
        let dec = steinitz_decompose(&v, &data).unwrap();
        assert!(dec.indices.len() <= 8);
        let cert = compose_certificate(&v, &data, &dec).unwrap();
        assert!(cert.homology.iter().all(|x| x.is_zero()));
        assert!(cert.verify());
    }

    #[test]
    fn quarter_quarter_certificate() {
        let data = axis_data(2);
        let v = qs(&[(1, 4), (1, 4), (0, 1), (0, 1)]);
        let dec = steinitz_decompose(&v, &data).unwrap();
        check_decomposition(&v, &data, &dec).unwrap();
        let cert = compose_certificate(&v, &data, &dec).unwrap();
        let k = &cert.a_total * &cert.n_product;
        let expect: Vec<Q> = v.iter().map(|x| x * Q::from_integer(k.clone())).collect();
        let got: Vec<Q> = cert.homology.iter().cloned().map(Q::from_integer).collect();
        assert_eq!(got, expect);
        let w = cert.materialize(10_000).unwrap();
        let direct: Vec<BigInt> = abelianize_big(&w, 4);
        assert_eq!(direct, cert.homology);
    }

    #[test]
    fn mixed_periods() {
        let w = |s: &str| s.parse::<GroupWord>().unwrap();
        let data = vec![
            ExtremalDatum::new(w("a1 a1"), 2, 4).unwrap(),
            ExtremalDatum::new(w("A1 A1 A1"), 3, 4).unwrap(),
            ExtremalDatum::new(w("b1 b1"), 2, 4).unwrap(),
            ExtremalDatum::new(w("B1 B1 B1"), 3, 4).unwrap(),
            ExtremalDatum::new(w("a2 a2"), 2, 4).unwrap(),
            ExtremalDatum::new(w("A2 A2 A2"), 3, 4).unwrap(),
            ExtremalDatum::new(w("b2 b2"), 2, 4).unwrap(),
            ExtremalDatum::new(w("B2 B2 B2"), 3, 4).unwrap(),
        ];
        let dec = Decomposition {
            indices: vec![0, 1],
            lambda: qs(&[(1, 2), (1, 2)]),
        };
        let v = vec![Q::zero(); 4];
        let cert = compose_certificate(&v, &data, &dec).unwrap();
        assert_eq!(cert.n_product, BigInt::from(6));
        assert_eq!(cert.u, vec![BigInt::from(3), BigInt::from(2)]);
        assert!(cert.verify());
    }

    #[test]
    fn certificate_json_round_trip() {
        let data = axis_data(2);
        let v = qs(&[(1, 3), (-1, 7), (0, 1), (1, 11)]);
        let dec = steinitz_decompose(&v, &data).unwrap();
        let cert = compose_certificate(&v, &data, &dec).unwrap();
        let s = serde_json::to_string(&cert).unwrap();
        assert!(s.contains("\"1/3\""));
        let back: RealizationCertificate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cert);
        assert!(back.verify());
    }

    #[test]
    fn tampered_certificate_fails() {
        let data = axis_data(2);
        let v = qs(&[(1, 4), (1, 4), (0, 1), (0, 1)]);
        let dec = steinitz_decompose(&v, &data).unwrap();
        let mut cert = compose_certificate(&v, &data, &dec).unwrap();
        cert.homology[0] += 1;
        assert!(!cert.verify());
    }

    #[test]
    fn constant_stream_for_single_datum() {
        let data = axis_data(2)[..1].to_vec();
        let s = bounded_sequence(&data[0].w_f64(), &data, 100).unwrap();
        assert!(s.symbols.iter().all(|&i| i == 0));
        assert_eq!(s.max_deviation, 0.0);
        assert_eq!(s.c_star, 0.0);
    }

    #[test]
    fn alternating_stream_for_midpoint() {
        let data = axis_data(2)[..2].to_vec();
        let s = bounded_sequence(&[0.0; 4], &data, 100).unwrap();
        for w in s.symbols.windows(2) {
            assert_ne!(w[0], w[1]);
        }
        assert!(s.max_deviation <= 1.0 + 1e-12);
        assert!(s.max_deviation <= s.c_star);
    }

    #[test]
    fn irrational_stream_stays_bounded() {
        let data = axis_data(2);
        let r2 = 2f64.sqrt();
        let v = [r2 / 5.0, -r2 / 7.0, r2 / 11.0, 0.1 * r2];
        let s = bounded_sequence(&v, &data, 100_000).unwrap();
        assert!(s.max_deviation < s.c_star, "{} {}", s.max_deviation, s.c_star);
    }

    #[test]
    fn outside_target_rejected_by_stream() {
        let data = axis_data(2);
        assert!(matches!(
            bounded_sequence(&[2.0, 0.0, 0.0, 0.0], &data, 10),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn identity_map_periodic_everywhere() {
        let g = SurfaceGroup::standard(2).unwrap();
        let m = LiftedMap::identity(&g).unwrap();
        let r = periodic_point_search(&m, &GroupWord::empty(), 1, 1e-9).unwrap();
        assert_eq!(r.residual, 0.0);
        let data = axis_data(2);
        let v = vec![Q::zero(); 4];
        let dec = Decomposition {
            indices: vec![0, 1],
            lambda: qs(&[(1, 2), (1, 2)]),
        };
        let cert = compose_certificate(&v, &data, &dec).unwrap();
        // h_v = a1 A1 reduces to the identity with period 2
        let r = realize_and_verify(&m, &cert, 1e-9, 100).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn single_shear_core_point() {
        let g = SurfaceGroup::standard(2).unwrap();
        let spec = MapSpec {
            shears: vec![ShearSpec::new("a1", 0.12, 1.0, 0.0).unwrap()],
        };
        let m = build_map(&spec, &g).unwrap();
        let a1: GroupWord = "a1".parse().unwrap();
        let r = periodic_point_search(&m, &a1, 1, 1e-9).unwrap();
        assert_eq!(r.n, 1);
        assert!(r.residual < 1e-9);
        assert!(verify_periodic(&m, 1, &r.g, r.point).unwrap() < 1e-9);
        let data = vec![ExtremalDatum::new(a1.clone(), 1, 4).unwrap()];
        let dec = Decomposition {
            indices: vec![0],
            lambda: vec![Q::one()],
        };
        let cert = compose_certificate(&data[0].w, &data, &dec).unwrap();
        let r = realize_and_verify(&m, &cert, 1e-9, 100).unwrap();
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn equivariance_of_periodic_points() {
        let g = SurfaceGroup::standard(2).unwrap();
        let spec = MapSpec {
            shears: vec![ShearSpec::new("a1", 0.12, 1.0, 0.0).unwrap()],
        };
        let m = build_map(&spec, &g).unwrap();
        let r = periodic_point_search(&m, &"a1".parse().unwrap(), 1, 1e-9).unwrap();
        for h in ["b1", "a2 B1", "A1 b2 b2"] {
            let h: GroupWord = h.parse().unwrap();
            let p = g.evaluate(&h).unwrap().apply(r.point);
            let res = verify_periodic(&m, r.n, &r.g.conjugate_by(&h), p).unwrap();
            assert!(res < 1e-8, "{res}");
        }
    }

    #[test]
    fn interior_target_is_nonzero() {
        let data = axis_data(2);
        let v = interior_target(&data).unwrap();
        assert!(v.iter().any(|x| !x.is_zero()));
        steinitz_decompose(&v, &data).unwrap();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_rational_targets_certify(a in -20i64..20, b in -20i64..20, c in -20i64..20, d in 21i64..80) {
            let data = axis_data(2);
            let v = qs(&[(a, 4 * d), (b, 4 * d), (c, 4 * d), (1, 4 * d + 1)]);
            let dec = steinitz_decompose(&v, &data).unwrap();
            prop_assert!(dec.indices.len() <= 8);
            let cert = compose_certificate(&v, &data, &dec).unwrap();
            prop_assert!(cert.verify());
            prop_assert_eq!(
                cert.homology_from_vectors(),
                cert.homology.iter().cloned().map(Q::from_integer).collect::<Vec<_>>()
            );
        }
    }
}
