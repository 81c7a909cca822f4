//! Poincaré disk arithmetic.
//!
//! Isometries are stored as `SL(2, R)` matrices acting on the upper half-plane
//! `H`. The disk `D` is identified with `H` through the Cayley map
//! `κ(z) = (z - i) / (z + i)`, so the origin of the disk corresponds to `i`.
//! Every constructor and every composition renormalizes the determinant to 1.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for algebraic identities on freshly normalized matrices.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance after long compositions (up to ~10^4 factors).
pub const LONG_TOL: f64 = 1e-9;
/// Half-width of the band around `|trace| = 2` reported as parabolic.
pub const PARABOLIC_BAND: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point of the open unit disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { x: 0.0, y: 0.0 };

    /// Checked constructor; rejects points on or outside the unit circle.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite()) || x * x + y * y >= 1.0 {
            return Err(Error::Invalid(format!("({x}, {y}) is not in the open disk")));
        }
        Ok(DiskPoint { x, y })
    }

    /// Point at hyperbolic distance `r` from the origin in direction `angle`.
    pub fn polar(r: f64, angle: f64) -> Self {
        let e = (r / 2.0).tanh();
        DiskPoint {
            x: e * angle.cos(),
            y: e * angle.sin(),
        }
    }

    #[inline]
    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    #[inline]
    pub fn from_complex(z: Complex64) -> Self {
        DiskPoint { x: z.re, y: z.im }
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Image in the upper half-plane under the inverse Cayley map.
    pub fn to_upper(self) -> Complex64 {
        let p = self.to_complex();
        I * (1.0 + p) / (1.0 - p)
    }

    pub fn from_upper(z: Complex64) -> Self {
        Self::from_complex((z - I) / (z + I))
    }
}

/// Hyperbolic distance in the disk.
pub fn dist(p: DiskPoint, q: DiskPoint) -> f64 {
    let (a, b) = (p.to_complex(), q.to_complex());
    let num = (a - b).norm();
    let den = (1.0 - a.conj() * b).norm();
    2.0 * (num / den).min(1.0).atanh()
}

/// `cosh` of the hyperbolic distance; cheaper and monotone in the distance.
#[inline]
pub fn cosh_dist(p: DiskPoint, q: DiskPoint) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    1.0 + 2.0 * (dx * dx + dy * dy) / ((1.0 - p.norm_sqr()) * (1.0 - q.norm_sqr()))
}

/// A point of the boundary circle, stored as an angle in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub angle: f64,
}

impl BoundaryPoint {
    pub fn new(angle: f64) -> Self {
        let mut a = angle.rem_euclid(TAU);
        if a >= TAU {
            a = 0.0;
        }
        BoundaryPoint { angle: a }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle)
    }

    /// Homogeneous coordinates of the corresponding point of `R ∪ {∞}`.
    fn projective_real(self) -> (f64, f64) {
        let h = self.angle / 2.0;
        (-h.cos(), h.sin())
    }

    /// Angular distance on the circle, in `[0, π]`.
    pub fn separation(self, other: BoundaryPoint) -> f64 {
        let d = (self.angle - other.angle).rem_euclid(TAU);
        d.min(TAU - d)
    }
}

/// Complex 2x2 matrix acting by linear fractional transformation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    /// The inverse Cayley map `D -> H`.
    pub fn disk_to_upper() -> Self {
        Mobius {
            a: I,
            b: I,
            c: Complex64::new(-1.0, 0.0),
            d: Complex64::new(1.0, 0.0),
        }
    }

    /// The Cayley map `H -> D`.
    pub fn upper_to_disk() -> Self {
        Mobius {
            a: Complex64::new(1.0, 0.0),
            b: -I,
            c: Complex64::new(1.0, 0.0),
            d: I,
        }
    }

    pub fn from_real(m: &Isometry) -> Self {
        Mobius {
            a: m.a.into(),
            b: m.b.into(),
            c: m.c.into(),
            d: m.d.into(),
        }
    }

    #[inline]
    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn compose(&self, o: &Mobius) -> Mobius {
        Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Classification of a nontrivial orientation-preserving isometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Orientation-preserving isometry of the disk, as a det-1 real matrix acting
/// on the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Upper half-plane matrix `z ↦ (az + b)/(cz + d)`; requires positive determinant.
    pub fn from_matrix(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Invalid(format!(
                "matrix determinant {det} is not positive"
            )));
        }
        Ok(Isometry { a, b, c, d }.normalized())
    }

    /// Build from the disk form `p ↦ (αp + β)/(β̄p + ᾱ)`.
    pub fn from_disk(alpha: Complex64, beta: Complex64) -> Self {
        Isometry {
            a: alpha.re + beta.re,
            b: alpha.im - beta.im,
            c: -alpha.im - beta.im,
            d: alpha.re - beta.re,
        }
        .normalized()
    }

    /// Disk-form coefficients `(α, β)`.
    #[inline]
    pub fn disk_coefficients(&self) -> (Complex64, Complex64) {
        let alpha = Complex64::new((self.a + self.d) / 2.0, (self.b - self.c) / 2.0);
        let beta = Complex64::new((self.a - self.d) / 2.0, -(self.b + self.c) / 2.0);
        (alpha, beta)
    }

    /// Rotation by `theta` about the origin of the disk.
    pub fn rotation(theta: f64) -> Self {
        Self::from_disk(Complex64::from_polar(1.0, theta / 2.0), Complex64::new(0.0, 0.0))
    }

    /// Half-turn (rotation by π) about a disk point.
    pub fn half_turn(center: DiskPoint) -> Self {
        let t = Self::translation_to(center);
        t * Self::rotation(PI) * t.inverse()
    }

    /// Hyperbolic translation moving the origin to `target` along a diameter.
    pub fn translation_to(target: DiskPoint) -> Self {
        let c = target.to_complex();
        let s = (1.0 - c.norm_sqr()).sqrt();
        Self::from_disk(Complex64::new(1.0 / s, 0.0), c / s)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn normalized(self) -> Self {
        let k = 1.0 / self.det().sqrt();
        Isometry {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            d: self.d * k,
        }
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .normalized()
    }

    pub fn inverse(&self) -> Isometry {
        Isometry {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn pow(&self, n: i64) -> Isometry {
        let base = if n < 0 { self.inverse() } else { *self };
        let mut acc = Isometry::IDENTITY;
        for _ in 0..n.unsigned_abs() {
            acc = acc.compose(&base);
        }
        acc
    }

    /// Max-entry distance to `other` as elements of `PSL(2, R)`.
    pub fn distance_to(&self, other: &Isometry) -> f64 {
        let plus = (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs());
        let minus = (self.a + other.a)
            .abs()
            .max((self.b + other.b).abs())
            .max((self.c + other.c).abs())
            .max((self.d + other.d).abs());
        plus.min(minus)
    }

    pub fn approx_eq(&self, other: &Isometry, tol: f64) -> bool {
        self.distance_to(other) <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&Isometry::IDENTITY, tol)
    }

    #[inline]
    pub fn apply(&self, p: DiskPoint) -> DiskPoint {
        let (alpha, beta) = self.disk_coefficients();
        let z = p.to_complex();
        DiskPoint::from_complex((alpha * z + beta) / (beta.conj() * z + alpha.conj()))
    }

    pub fn apply_boundary(&self, b: BoundaryPoint) -> BoundaryPoint {
        let (alpha, beta) = self.disk_coefficients();
        let z = b.to_complex();
        let w = (alpha * z + beta) / (beta.conj() * z + alpha.conj());
        BoundaryPoint::new(w.arg())
    }

    pub fn apply_geodesic(&self, g: &Geodesic) -> Geodesic {
        Geodesic {
            tail: self.apply_boundary(g.tail),
            head: self.apply_boundary(g.head),
        }
    }

    /// Elliptic / parabolic / hyperbolic by `|trace|`; identity is rejected.
    pub fn classify(&self) -> Result<IsometryKind> {
        if self.is_identity(EXACT_TOL) {
            return Err(Error::IdentityInput);
        }
        let t = self.trace().abs();
        if (t - 2.0).abs() <= PARABOLIC_BAND {
            log::warn!("isometry with |trace| = {t} classified parabolic");
            Ok(IsometryKind::Parabolic)
        } else if t > 2.0 {
            Ok(IsometryKind::Hyperbolic)
        } else {
            Ok(IsometryKind::Elliptic)
        }
    }

    fn require_hyperbolic(&self) -> Result<()> {
        match self.classify() {
            Ok(IsometryKind::Hyperbolic) => Ok(()),
            Err(Error::IdentityInput) => Err(Error::NotHyperbolic { trace: self.trace() }),
            Err(e) => Err(e),
            Ok(_) => Err(Error::NotHyperbolic { trace: self.trace() }),
        }
    }

    /// Translation length `ℓ` with `|trace| = 2 cosh(ℓ/2)`.
    pub fn translation_length(&self) -> Result<f64> {
        self.require_hyperbolic()?;
        Ok(2.0 * (self.trace().abs() / 2.0).acosh())
    }

    /// Invariant geodesic oriented from the repelling to the attracting fixed point.
    pub fn axis(&self) -> Result<Geodesic> {
        self.require_hyperbolic()?;
        let (alpha, beta) = self.disk_coefficients();
        let root = (beta.norm_sqr() - alpha.im * alpha.im).max(0.0).sqrt();
        let bc = beta.conj();
        let p1 = (Complex64::new(root, alpha.im)) / bc;
        let p2 = (Complex64::new(-root, alpha.im)) / bc;
        // |f'(p)| = 1/|β̄p + ᾱ|²; attracting iff |β̄p + ᾱ| > 1.
        let k1 = (bc * p1 + alpha.conj()).norm();
        let k2 = (bc * p2 + alpha.conj()).norm();
        let (att, rep) = if k1 > k2 { (p1, p2) } else { (p2, p1) };
        Ok(Geodesic {
            tail: BoundaryPoint::new(rep.arg()),
            head: BoundaryPoint::new(att.arg()),
        })
    }
}

impl Mul for Isometry {
    type Output = Isometry;
    fn mul(self, rhs: Isometry) -> Isometry {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a Isometry> for &'a Isometry {
    type Output = Isometry;
    fn mul(self, rhs: &Isometry) -> Isometry {
        self.compose(rhs)
    }
}

/// Oriented geodesic, given by its boundary endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub tail: BoundaryPoint,
    pub head: BoundaryPoint,
}

impl Geodesic {
    pub fn new(tail: BoundaryPoint, head: BoundaryPoint) -> Result<Self> {
        if tail.separation(head) < 1e-12 {
            return Err(Error::Invalid("geodesic endpoints coincide".into()));
        }
        Ok(Geodesic { tail, head })
    }

    pub fn reversed(&self) -> Geodesic {
        Geodesic {
            tail: self.head,
            head: self.tail,
        }
    }

    /// Same oriented geodesic, endpoints compared within `tol` radians.
    pub fn same_oriented(&self, other: &Geodesic, tol: f64) -> bool {
        self.tail.separation(other.tail) <= tol && self.head.separation(other.head) <= tol
    }

    /// Same unoriented carrier.
    pub fn same_carrier(&self, other: &Geodesic, tol: f64) -> bool {
        self.same_oriented(other, tol) || self.same_oriented(&other.reversed(), tol)
    }

    /// Whether the endpoint pairs interleave on the circle (transverse crossing).
    pub fn crosses(&self, other: &Geodesic) -> bool {
        let a0 = self.tail.angle;
        let len = (self.head.angle - a0).rem_euclid(TAU);
        let inside = |b: BoundaryPoint| {
            let t = (b.angle - a0).rem_euclid(TAU);
            t > 0.0 && t < len
        };
        inside(other.tail) != inside(other.head)
    }

    /// Normalizing frame sending this geodesic to the imaginary axis of `H`.
    pub fn frame(&self) -> GeodesicFrame {
        GeodesicFrame::new(self)
    }

    pub fn distance_to_point(&self, p: DiskPoint) -> f64 {
        self.frame().to_fermi(p).d.abs()
    }

    /// Distance between carriers; zero when they cross or coincide.
    pub fn distance_to_geodesic(&self, other: &Geodesic) -> f64 {
        let f = self.frame();
        let x1 = f.boundary_real(other.tail);
        let x2 = f.boundary_real(other.head);
        if x1 * x2 <= 0.0 || !x1.is_finite() || !x2.is_finite() {
            return 0.0;
        }
        ((x1 + x2).abs() / (x2 - x1).abs()).acosh()
    }
}

/// Fermi coordinates relative to an oriented geodesic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermiCoords {
    /// Arclength along the reference geodesic.
    pub s: f64,
    /// Signed normal distance; positive on the right of the direction of travel.
    pub d: f64,
}

/// `normalizer` maps the geodesic to the imaginary axis of `H` oriented
/// from 0 to ∞, scaled so the foot of the perpendicular from the disk origin
/// sits at `i` (arclength origin).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicFrame {
    pub geodesic: Geodesic,
    pub normalizer: Isometry,
    to_frame: Mobius,
    from_frame: Mobius,
}

impl GeodesicFrame {
    pub fn new(g: &Geodesic) -> Self {
        let (xh, yh) = g.head.projective_real();
        let (xt, yt) = g.tail.projective_real();
        // inverse normalizer sends ∞ -> head, 0 -> tail
        let (mut xt, mut yt) = (xt, yt);
        if xh * yt - xt * yh < 0.0 {
            xt = -xt;
            yt = -yt;
        }
        let inv = Isometry {
            a: xh,
            b: xt,
            c: yh,
            d: yt,
        }
        .normalized();
        let mut normalizer = inv.inverse();
        let z0 = Mobius::from_real(&normalizer).apply(I);
        let r = z0.norm();
        let scale = Isometry {
            a: 1.0 / r.sqrt(),
            b: 0.0,
            c: 0.0,
            d: r.sqrt(),
        };
        normalizer = scale * normalizer;
        Self::from_normalizer(*g, normalizer)
    }

    fn from_normalizer(geodesic: Geodesic, normalizer: Isometry) -> Self {
        let to_frame = Mobius::from_real(&normalizer).compose(&Mobius::disk_to_upper());
        let from_frame =
            Mobius::upper_to_disk().compose(&Mobius::from_real(&normalizer.inverse()));
        GeodesicFrame {
            geodesic,
            normalizer,
            to_frame,
            from_frame,
        }
    }

    /// Frame of `h(geodesic)`, keeping the arclength origin at `h` of the old one.
    pub fn transported(&self, h: &Isometry) -> Self {
        Self::from_normalizer(
            h.apply_geodesic(&self.geodesic),
            self.normalizer * h.inverse(),
        )
    }

    /// Position in the normalized upper half-plane.
    #[inline]
    pub fn to_upper(&self, p: DiskPoint) -> Complex64 {
        self.to_frame.apply(p.to_complex())
    }

    #[inline]
    pub fn from_upper(&self, z: Complex64) -> DiskPoint {
        DiskPoint::from_complex(self.from_frame.apply(z))
    }

    /// Real coordinate of a boundary point in the normalized half-plane.
    pub fn boundary_real(&self, b: BoundaryPoint) -> f64 {
        self.to_frame.apply(b.to_complex()).re
    }

    pub fn to_fermi(&self, p: DiskPoint) -> FermiCoords {
        let z = self.to_upper(p);
        FermiCoords {
            s: z.norm().ln(),
            d: (z.re / z.im).asinh(),
        }
    }

    pub fn from_fermi(&self, f: FermiCoords) -> DiskPoint {
        let z = Complex64::new(f.d.tanh(), 1.0 / f.d.cosh()) * f.s.exp();
        self.from_upper(z)
    }

    /// Hyperbolic translation of length `t` along the oriented geodesic.
    pub fn axial_translation(&self, t: f64) -> Isometry {
        let h = t / 2.0;
        let diag = Isometry {
            a: h.exp(),
            b: 0.0,
            c: 0.0,
            d: (-h).exp(),
        };
        self.normalizer.inverse() * diag * self.normalizer
    }
}

impl fmt::Display for DiskPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.12}, {:.12})", self.x, self.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gen_point() -> impl Strategy<Value = DiskPoint> {
        (0.0f64..4.0, 0.0f64..TAU).prop_map(|(r, a)| DiskPoint::polar(r, a))
    }

    fn gen_isometry() -> impl Strategy<Value = Isometry> {
        (0.0f64..3.0, 0.0f64..TAU, 0.0f64..TAU).prop_map(|(r, a, t)| {
            Isometry::translation_to(DiskPoint::polar(r, a)) * Isometry::rotation(t)
        })
    }

    fn dilation(lambda: f64) -> Isometry {
        Isometry::from_matrix(lambda.sqrt(), 0.0, 0.0, 1.0 / lambda.sqrt()).unwrap()
    }

    #[test]
    fn compose_identity_and_inverse() {
        let g = Isometry::translation_to(DiskPoint::polar(1.3, 0.7)) * Isometry::rotation(0.4);
        assert!(Isometry::IDENTITY.compose(&g).approx_eq(&g, EXACT_TOL));
        assert!(g.compose(&g.inverse()).is_identity(EXACT_TOL));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            Isometry::rotation(PI / 3.0).classify().unwrap(),
            IsometryKind::Elliptic
        );
        let parabolic = Isometry::from_matrix(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(parabolic.classify().unwrap(), IsometryKind::Parabolic);
        assert_eq!(dilation(3.0).classify().unwrap(), IsometryKind::Hyperbolic);
        assert_eq!(Isometry::IDENTITY.classify(), Err(Error::IdentityInput));
    }

    #[test]
    fn dilation_axis_is_imaginary_axis() {
        let g = dilation(4.0);
        let ax = g.axis().unwrap();
        // 0 in H is -1 in D, ∞ is 1 in D.
        assert!(ax.tail.separation(BoundaryPoint::new(PI)) < 1e-12);
        assert!(ax.head.separation(BoundaryPoint::new(0.0)) < 1e-12);
        let inv = g.inverse().axis().unwrap();
        assert!(inv.same_oriented(&ax.reversed(), 1e-12));
    }

    #[test]
    fn translation_length_examples() {
        let g = dilation(2f64.exp());
        assert!((g.translation_length().unwrap() - 2.0).abs() < 1e-12);
        for n in 1..=8 {
            let l = g.pow(n).translation_length().unwrap();
            assert!((l - 2.0 * n as f64).abs() < 1e-9);
        }
        assert!(matches!(
            Isometry::rotation(1.0).translation_length(),
            Err(Error::NotHyperbolic { .. })
        ));
    }

    #[test]
    fn radial_distance() {
        let r: f64 = 0.6;
        let d = dist(DiskPoint::ORIGIN, DiskPoint::new(r, 0.0).unwrap());
        assert!((d - 2.0 * r.atanh()).abs() < 1e-14);
        let p = DiskPoint::polar(2.0, 1.0);
        assert_eq!(dist(p, p), 0.0);
    }

    #[test]
    fn fermi_point_on_axis_has_zero_offset() {
        let g = Isometry::translation_to(DiskPoint::polar(1.0, 0.3))
            * dilation(3.0)
            * Isometry::translation_to(DiskPoint::polar(1.0, 0.3)).inverse();
        let ax = g.axis().unwrap();
        let frame = ax.frame();
        let p = frame.from_fermi(FermiCoords { s: 0.37, d: 0.0 });
        assert!(frame.to_fermi(p).d.abs() < 1e-12);
        // the origin sits at s = 0
        assert!(frame.to_fermi(DiskPoint::ORIGIN).s.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn distance_is_invariant(p in gen_point(), q in gen_point(), g in gen_isometry()) {
            let d0 = dist(p, q);
            let d1 = dist(g.apply(p), g.apply(q));
            prop_assert!((d0 - d1).abs() < 1e-9);
            prop_assert!((dist(q, p) - d0).abs() < 1e-12);
        }

        #[test]
        fn axis_endpoints_fixed_and_conjugation(h in gen_isometry(), l in 0.5f64..4.0) {
            let g = dilation(l.exp());
            let conj = h * g * h.inverse();
            let ax = conj.axis().unwrap();
            prop_assert!(conj.apply_boundary(ax.tail).separation(ax.tail) < 1e-9);
            prop_assert!(conj.apply_boundary(ax.head).separation(ax.head) < 1e-9);
            let moved = h.apply_geodesic(&g.axis().unwrap());
            prop_assert!(ax.same_oriented(&moved, 1e-9));
            prop_assert_eq!(conj.classify().unwrap(), IsometryKind::Hyperbolic);
            prop_assert!((conj.translation_length().unwrap() - l).abs() < 1e-9);
        }

        #[test]
        fn classify_is_conjugation_invariant(h in gen_isometry(), t in 0.1f64..3.0) {
            let g = Isometry::rotation(t);
            prop_assert_eq!((h * g * h.inverse()).classify().unwrap(), IsometryKind::Elliptic);
        }

        #[test]
        fn fermi_round_trip(h in gen_isometry(), s in -3.0f64..3.0, d in -2.0f64..2.0, t in -2.0f64..2.0) {
            let ax = (h * dilation(5.0) * h.inverse()).axis().unwrap();
            let frame = ax.frame();
            let p = frame.from_fermi(FermiCoords { s, d });
            let f = frame.to_fermi(p);
            prop_assert!((f.s - s).abs() < 1e-9 && (f.d - d).abs() < 1e-9);
            prop_assert!((ax.distance_to_point(p) - d.abs()).abs() < 1e-9);
            let moved = frame.to_fermi(frame.axial_translation(t).apply(p));
            prop_assert!((moved.s - (s + t)).abs() < 1e-9 && (moved.d - d).abs() < 1e-9);
        }
    }
}
