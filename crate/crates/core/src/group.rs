//! The genus-g surface group acting on the disk.
//!
//! The fundamental domain is the regular `4g`-gon centred at the origin with
//! interior angles `2π/4g` and a vertex on the positive x-axis. Side `k` runs
//! from vertex `k` to vertex `k+1` (counter-clockwise). In the block of sides
//! `4j..4j+4`, `a_j` maps side `4j+2` onto side `4j` and `b_j` maps side
//! `4j+1` onto side `4j+3`, each carrying the domain onto the neighbouring tile
//! across its target side. Reading the letter that crosses each side gives the
//! boundary word `a_j b_j⁻¹ a_j⁻¹ b_j`, and with this choice the relator is
//! `[a1,b1]⋯[a_g,b_g] = a1 b1 a1⁻¹ b1⁻¹ ⋯`.
//! Generators are indexed `a1 = 0, b1 = 1, a2 = 2, b2 = 3, …`.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{cosh_dist, dist, DiskPoint, Isometry};

/// One generator or inverse generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    /// Generator index in `0..2g`.
    pub gen: u8,
    pub inverse: bool,
}

impl Letter {
    pub fn new(gen: usize, inverse: bool) -> Self {
        Letter {
            gen: gen as u8,
            inverse,
        }
    }

    pub fn inv(self) -> Letter {
        Letter {
            gen: self.gen,
            inverse: !self.inverse,
        }
    }

    pub fn sign(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    /// Dense index in `0..4g`: `2*gen + inverse`.
    #[inline]
    pub fn slot(self) -> usize {
        2 * self.gen as usize + self.inverse as usize
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let handle = self.gen / 2 + 1;
        let c = match (self.gen % 2, self.inverse) {
            (0, false) => 'a',
            (0, true) => 'A',
            (_, false) => 'b',
            (_, true) => 'B',
        };
        write!(f, "{c}{handle}")
    }
}

impl FromStr for Letter {
    type Err = Error;
    fn from_str(tok: &str) -> Result<Letter> {
        let mut chars = tok.chars();
        let head = chars.next().ok_or_else(|| Error::WordParse(tok.into()))?;
        let handle: usize = chars
            .as_str()
            .parse()
            .map_err(|_| Error::WordParse(tok.into()))?;
        if handle == 0 || handle > 64 {
            return Err(Error::WordParse(tok.into()));
        }
        let (offset, inverse) = match head {
            'a' => (0, false),
            'A' => (0, true),
            'b' => (1, false),
            'B' => (1, true),
            _ => return Err(Error::WordParse(tok.into())),
        };
        Ok(Letter::new(2 * (handle - 1) + offset, inverse))
    }
}

/// Freely reduced word in the standard generators.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GroupWord {
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn empty() -> Self {
        GroupWord::default()
    }

    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = GroupWord::empty();
        for l in letters {
            w.push(l);
        }
        w
    }

    pub fn letter(l: Letter) -> Self {
        GroupWord { letters: vec![l] }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Appends a letter, cancelling against the last one if inverse.
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inv()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    pub fn concat(&self, other: &GroupWord) -> GroupWord {
        let mut w = self.clone();
        for &l in &other.letters {
            w.push(l);
        }
        w
    }

    pub fn inverse(&self) -> GroupWord {
        GroupWord {
            letters: self.letters.iter().rev().map(|l| l.inv()).collect(),
        }
    }

    pub fn pow(&self, n: i64) -> GroupWord {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut w = GroupWord::empty();
        for _ in 0..n.unsigned_abs() {
            w = w.concat(&base);
        }
        w
    }

    pub fn conjugate_by(&self, h: &GroupWord) -> GroupWord {
        h.concat(self).concat(&h.inverse())
    }

    /// Cyclic reduction: strips matching first/last inverse pairs.
    pub fn cyclically_reduced(&self) -> GroupWord {
        let mut l = self.letters.as_slice();
        while l.len() >= 2 && l[0] == l[l.len() - 1].inv() {
            l = &l[1..l.len() - 1];
        }
        GroupWord { letters: l.to_vec() }
    }

    /// The relator `[a1,b1]⋯[a_g,b_g]`.
    pub fn relator(genus: usize) -> GroupWord {
        let mut w = GroupWord::empty();
        for j in 0..genus {
            let a = Letter::new(2 * j, false);
            let b = Letter::new(2 * j + 1, false);
            for l in [a, b, a.inv(), b.inv()] {
                w.push(l);
            }
        }
        w
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.gen as usize).max()
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for GroupWord {
    type Err = Error;
    /// Whitespace-separated tokens `a1 B1 a2`; capitals denote inverses.
    fn from_str(s: &str) -> Result<GroupWord> {
        let letters = s
            .split_whitespace()
            .map(Letter::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupWord::from_letters(letters))
    }
}

impl TryFrom<String> for GroupWord {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GroupWord> for String {
    fn from(w: GroupWord) -> String {
        w.to_string()
    }
}

/// Integer homology class in the basis dual to `a1, b1, …, a_g, b_g`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomologyClass(pub Vec<i64>);

impl HomologyClass {
    pub fn zero(rank: usize) -> Self {
        HomologyClass(vec![0; rank])
    }

    pub fn basis(rank: usize, i: usize) -> Self {
        let mut v = vec![0; rank];
        v[i] = 1;
        HomologyClass(v)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn add(&self, o: &HomologyClass) -> HomologyClass {
        HomologyClass(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, k: i64) -> HomologyClass {
        HomologyClass(self.0.iter().map(|a| a * k).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&x| x as f64).collect()
    }
}

/// Exponent-sum vector of a word.
pub fn abelianize(w: &GroupWord, rank: usize) -> HomologyClass {
    let mut v = vec![0i64; rank];
    for l in w.letters() {
        v[l.gen as usize] += l.sign();
    }
    HomologyClass(v)
}

/// The regular `4g`-gon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FundamentalDomain {
    pub vertices: Vec<DiskPoint>,
    /// Letter whose generator maps the domain across side `k`.
    pub side_pairings: Vec<Letter>,
    /// Hyperbolic circumradius.
    pub circumradius: f64,
    /// Hyperbolic inradius.
    pub inradius: f64,
}

impl FundamentalDomain {
    pub fn diameter(&self) -> f64 {
        2.0 * self.circumradius
    }

    /// Hyperbolic area by quadrature of the area form in polar coordinates.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let sector = TAU / n as f64;
        let half = sector / 2.0;
        // distance along ray at angle φ (relative to side bisector) to the side circle
        let rv = self.vertices[0].norm_sqr().sqrt();
        let center_norm = (1.0 + rv * rv) / (2.0 * rv * half.cos());
        let edge = |phi: f64| {
            let uc = center_norm * phi.cos();
            let t = uc - (uc * uc - 1.0).sqrt();
            2.0 * t * t / (1.0 - t * t)
        };
        let m = 4000;
        let h = sector / m as f64;
        let mut acc = edge(-half) + edge(half);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * edge(-half + i as f64 * h);
        }
        n as f64 * acc * h / 3.0
    }

    /// Interior angle at vertex `k`, from the two side circles meeting there.
    pub fn interior_angle(&self, k: usize) -> f64 {
        let n = self.vertices.len();
        let v = self.vertices[k];
        let centre = |side: usize| -> (f64, f64) {
            let p = self.vertices[side];
            let q = self.vertices[(side + 1) % n];
            let phi = (p.y.atan2(p.x) + q.y.atan2(q.x)) / 2.0
                + if (q.y.atan2(q.x) - p.y.atan2(p.x)).abs() > PI {
                    PI
                } else {
                    0.0
                };
            let r = p.norm_sqr().sqrt();
            let c = (1.0 + r * r) / (2.0 * r * (PI / n as f64).cos());
            (c * phi.cos(), c * phi.sin())
        };
        let (c1x, c1y) = centre((k + n - 1) % n);
        let (c2x, c2y) = centre(k);
        let (r1x, r1y) = (v.x - c1x, v.y - c1y);
        let (r2x, r2y) = (v.x - c2x, v.y - c2y);
        let cos = (r1x * r2x + r1y * r2y) / ((r1x.hypot(r1y)) * (r2x.hypot(r2y)));
        PI - cos.clamp(-1.0, 1.0).acos()
    }

    /// Closed-domain membership (Dirichlet criterion at the origin).
    pub fn contains(&self, group: &SurfaceGroup, p: DiskPoint, tol: f64) -> bool {
        let c0 = cosh_dist(p, DiskPoint::ORIGIN);
        group
            .neighbour_centres
            .iter()
            .all(|&c| cosh_dist(p, c) >= c0 - tol)
    }
}

/// The standard genus-g surface group.
#[derive(Clone, Debug)]
pub struct SurfaceGroup {
    pub genus: usize,
    /// Generators `a1, b1, …` as isometries.
    pub generators: Vec<Isometry>,
    pub domain: FundamentalDomain,
    /// Isometry of each letter, indexed by [`Letter::slot`].
    letter_isos: Vec<Isometry>,
    /// Images of the origin under the side-pairing letters, in side order.
    neighbour_centres: Vec<DiskPoint>,
    /// Disk-form coefficients of the inverse of each side letter, in side order.
    side_inverse_coeffs: Vec<(num_complex::Complex64, num_complex::Complex64)>,
    /// `1 - |c|^2` for each neighbour centre.
    neighbour_weights: Vec<f64>,
}

/// Letter whose isometry carries the domain across side `k`.
fn side_label(k: usize) -> Letter {
    let j = k / 4;
    match k % 4 {
        0 => Letter::new(2 * j, false),
        1 => Letter::new(2 * j + 1, true),
        2 => Letter::new(2 * j, true),
        _ => Letter::new(2 * j + 1, false),
    }
}

impl SurfaceGroup {
    /// Regular `4g`-gon model; see the module docs for the side convention.
    pub fn standard(genus: usize) -> Result<SurfaceGroup> {
        if genus < 2 {
            return Err(Error::UnsupportedGenus(genus));
        }
        let n = 4 * genus;
        let nf = n as f64;
        let cot = 1.0 / (PI / nf).tan();
        // cosh R = cot(π/n) cot(α/2) with α = 2π/n
        let circumradius = (cot * cot).acosh();
        // cosh r = cos(π/n) / sin(α/2)
        let inradius = ((PI / nf).cos() / (PI / nf).sin()).acosh();
        let vertices: Vec<DiskPoint> = (0..n)
            .map(|k| DiskPoint::polar(circumradius, TAU * k as f64 / nf))
            .collect();
        let mid0 = DiskPoint::polar(inradius, PI / nf);
        let flip = Isometry::half_turn(mid0);
        let rot = |k: usize| Isometry::rotation(TAU * k as f64 / nf);
        // pairing sending side m onto side s (reversed), domain across side s
        let pairing = |s: usize, m: usize| rot(s) * flip * rot(m).inverse();

        let mut generators = Vec::with_capacity(2 * genus);
        for j in 0..genus {
            generators.push(pairing(4 * j, 4 * j + 2));
            generators.push(pairing(4 * j + 3, 4 * j + 1));
        }
        let mut letter_isos = vec![Isometry::IDENTITY; 4 * genus];
        for (i, g) in generators.iter().enumerate() {
            letter_isos[2 * i] = *g;
            letter_isos[2 * i + 1] = g.inverse();
        }
        let side_pairings: Vec<Letter> = (0..n).map(side_label).collect();
        let neighbour_centres: Vec<DiskPoint> = side_pairings
            .iter()
            .map(|l| letter_isos[l.slot()].apply(DiskPoint::ORIGIN))
            .collect();
        let side_inverse_coeffs = side_pairings
            .iter()
            .map(|l| letter_isos[l.inv().slot()].disk_coefficients())
            .collect();
        let neighbour_weights = neighbour_centres.iter().map(|c| 1.0 - c.norm_sqr()).collect();
        Ok(SurfaceGroup {
            genus,
            generators,
            domain: FundamentalDomain {
                vertices,
                side_pairings,
                circumradius,
                inradius,
            },
            letter_isos,
            neighbour_centres,
            side_inverse_coeffs,
            neighbour_weights,
        })
    }

    /// Number of generators, `2g`.
    pub fn rank(&self) -> usize {
        2 * self.genus
    }

    pub fn letter_isometry(&self, l: Letter) -> Isometry {
        self.letter_isos[l.slot()]
    }

    pub fn check_word(&self, w: &GroupWord) -> Result<()> {
        match w.max_generator() {
            Some(i) if i >= self.rank() => Err(Error::BadIndex {
                index: i,
                rank: self.rank(),
            }),
            _ => Ok(()),
        }
    }

    /// Ordered product of generator matrices.
    pub fn evaluate(&self, w: &GroupWord) -> Result<Isometry> {
        self.check_word(w)?;
        Ok(w.letters()
            .iter()
            .fold(Isometry::IDENTITY, |acc, &l| acc * self.letter_isos[l.slot()]))
    }

    pub fn relator_residual(&self) -> f64 {
        self.evaluate(&GroupWord::relator(self.genus))
            .map(|m| m.distance_to(&Isometry::IDENTITY))
            .unwrap_or(f64::INFINITY)
    }

    /// Maximum number of greedy steps allowed for a point at distance `r`.
    fn step_budget(r: f64) -> usize {
        (10.0 * (1.0 + r)).ceil() as usize
    }

    /// Greedy descent into the closed fundamental domain.
    ///
    /// Returns `(q, w)` with `evaluate(w)·q = p`. Each step applies the
    /// inverse of the side pairing whose neighbour centre is nearest, which
    /// strictly decreases the distance to the origin.
    pub fn reduce_to_domain(&self, p: DiskPoint) -> Result<(DiskPoint, GroupWord)> {
        let mut w = GroupWord::empty();
        let q = self.reduce_with(p, |l| w.push(l))?;
        Ok((q, w))
    }

    /// Descent reporting each letter to `sink` in order.
    pub fn reduce_with<F: FnMut(Letter)>(&self, p: DiskPoint, mut sink: F) -> Result<DiskPoint> {
        let mut q = p;
        let budget = Self::step_budget(dist(p, DiskPoint::ORIGIN));
        for _ in 0..=budget {
            match self.descent_side(q) {
                None => return Ok(q),
                Some(k) => {
                    let (alpha, beta) = self.side_inverse_coeffs[k];
                    let z = q.to_complex();
                    q = DiskPoint::from_complex(
                        (alpha * z + beta) / (beta.conj() * z + alpha.conj()),
                    );
                    sink(self.domain.side_pairings[k]);
                }
            }
        }
        Err(Error::NonConvergence { steps: budget })
    }

    /// Side whose neighbour centre is strictly nearer than the origin; ties
    /// resolve to the first side in order.
    #[inline]
    fn descent_side(&self, q: DiskPoint) -> Option<usize> {
        // cosh d(q,c) ∝ |q-c|^2 / (1-|c|^2); origin has weight 1
        let base = q.norm_sqr() * (1.0 - 1e-12) - 1e-15;
        let mut best = None;
        let mut best_val = base;
        for (k, (c, w)) in self
            .neighbour_centres
            .iter()
            .zip(&self.neighbour_weights)
            .enumerate()
        {
            let dx = q.x - c.x;
            let dy = q.y - c.y;
            let v = (dx * dx + dy * dy) / w;
            if v < best_val {
                best_val = v;
                best = Some(k);
            }
        }
        best
    }

    /// Point of the fundamental domain distributed by hyperbolic area.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> DiskPoint {
        let rmax = (self.domain.circumradius / 2.0).tanh();
        let floor = 1.0 - rmax * rmax;
        loop {
            let x = rng.gen_range(-rmax..rmax);
            let y = rng.gen_range(-rmax..rmax);
            let r2 = x * x + y * y;
            if r2 >= rmax * rmax {
                continue;
            }
            let accept = (floor / (1.0 - r2)).powi(2);
            if rng.gen::<f64>() >= accept {
                continue;
            }
            let p = DiskPoint { x, y };
            if self.domain.contains(self, p, 0.0) {
                return p;
            }
        }
    }

    /// All group elements moving the origin within `radius + diameter`.
    ///
    /// Breadth-first over tiles adjacent through sides; the identity comes
    /// first. Deduplicated by the image of the origin.
    pub fn translates_near(&self, radius: f64) -> Vec<(GroupWord, Isometry)> {
        self.elements_within(radius + self.domain.diameter())
    }

    /// All group elements `h` with `d(0, h·0) <= bound`.
    pub fn elements_within(&self, bound: f64) -> Vec<(GroupWord, Isometry)> {
        let explore = bound + self.domain.circumradius + 1e-9;
        let cosh_explore = explore.cosh();
        let mut seen = PointIndex::default();
        let mut queue = VecDeque::new();
        let mut out = Vec::new();
        seen.insert(DiskPoint::ORIGIN);
        queue.push_back((GroupWord::empty(), Isometry::IDENTITY));
        while let Some((w, h)) = queue.pop_front() {
            let c = h.apply(DiskPoint::ORIGIN);
            if dist(c, DiskPoint::ORIGIN) <= bound + 1e-9 {
                out.push((w.clone(), h));
            }
            for &l in &self.domain.side_pairings {
                let h2 = h * self.letter_isos[l.slot()];
                let c2 = h2.apply(DiskPoint::ORIGIN);
                if cosh_dist(c2, DiskPoint::ORIGIN) > cosh_explore {
                    continue;
                }
                if seen.insert(c2) {
                    let mut w2 = w.clone();
                    w2.push(l);
                    queue.push_back((w2, h2));
                }
            }
        }
        out
    }
}

/// Spatial hash of disk points; distinct orbit points are far apart.
#[derive(Default)]
pub(crate) struct PointIndex {
    cells: HashMap<(i64, i64), Vec<DiskPoint>>,
}

impl PointIndex {
    const CELL: f64 = 1e-7;

    fn key(p: DiskPoint) -> (i64, i64) {
        (
            (p.x / Self::CELL).floor() as i64,
            (p.y / Self::CELL).floor() as i64,
        )
    }

    /// Returns `true` if `p` was not already present (within 1e-6 hyperbolic).
    pub fn insert(&mut self, p: DiskPoint) -> bool {
        let (kx, ky) = Self::key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.cells.get(&(kx + dx, ky + dy)) {
                    if v.iter().any(|&q| dist(p, q) < 1e-6) {
                        return false;
                    }
                }
            }
        }
        self.cells.entry((kx, ky)).or_default().push(p);
        true
    }
}
