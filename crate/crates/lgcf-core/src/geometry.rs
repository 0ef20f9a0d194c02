//! Numeric kernel for the Lorentz and Klein models of hyperbolic space.
//!
//! All points carry curvature -1: the hyperboloid is `<x,x>_L = -1` with
//! `x_0 > 0`, where `<x,y>_L = -x_0 y_0 + sum_i x_i y_i`. The Klein ball
//! is the open unit ball, reached through the isometry
//! `F(x) = [x_1..x_d] / x_0` with inverse
//! `F^-1(k) = [1, k] / sqrt(1 - |k|^2)`.
//!
//! Everything here is a pure function of its arguments; the random source
//! for wrapped-normal sampling is supplied by the caller.

use alloc::vec::Vec;
use core::fmt;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Accepted violation of `<x,x>_L = -1` for points claiming to be on the
/// hyperboloid.
pub const HYPERBOLOID_TOL: f64 = 1e-9;

/// Radial clamp applied to Klein norms; keeps the Lorentz factor finite.
pub const EPS_BALL: f64 = 1e-7;

/// Step norms below this short-circuit the exp/log maps.
pub const EPS_STEP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    DimensionMismatch { left: usize, right: usize },
    OffManifold { violation: f64 },
    OutsideBall { norm: f64 },
    EmptyMidpoint,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            GeometryError::OffManifold { violation } => {
                write!(f, "point violates <x,x>_L = -1 by {violation:e}")
            }
            GeometryError::OutsideBall { norm } => {
                write!(f, "Klein point norm {norm} not inside the unit ball")
            }
            GeometryError::EmptyMidpoint => write!(f, "midpoint of an empty point list"),
        }
    }
}

impl core::error::Error for GeometryError {}

/// A point on the hyperboloid sheet, stored in ambient coordinates
/// `[x_0, x_1, .., x_d]` with the time component first.
#[derive(Debug, Clone, PartialEq)]
pub struct LorentzPoint {
    coords: Vec<f64>,
}

impl LorentzPoint {
    /// Validates `|<x,x>_L + 1| <= HYPERBOLOID_TOL` and `x_0 > 0`.
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        let q = inner(&coords, &coords);
        let violation = libm::fabs(q + 1.0);
        if violation > HYPERBOLOID_TOL || coords[0] <= 0.0 {
            return Err(GeometryError::OffManifold { violation });
        }
        Ok(Self { coords })
    }

    /// The origin `(1, 0, .., 0)` of `d`-dimensional hyperbolic space.
    pub fn origin(d: usize) -> Self {
        let mut coords = alloc::vec![0.0; d + 1];
        coords[0] = 1.0;
        Self { coords }
    }

    pub(crate) fn from_coords_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    /// Spatial dimensionality `d` (ambient length is `d + 1`).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }
}

impl core::ops::Deref for LorentzPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

/// A point of the Klein ball model, `|k| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KleinPoint {
    coords: Vec<f64>,
}

impl KleinPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        let norm = libm::sqrt(norm_sq(&coords));
        if norm >= 1.0 {
            return Err(GeometryError::OutsideBall { norm });
        }
        Ok(Self { coords })
    }

    /// Builds a Klein point, radially rescaling onto the sphere of radius
    /// `1 - EPS_BALL` if the coordinates fall outside it.
    pub fn clamped(mut coords: Vec<f64>) -> Self {
        let norm = libm::sqrt(norm_sq(&coords));
        let max = 1.0 - EPS_BALL;
        if norm > max {
            let s = max / norm;
            for c in coords.iter_mut() {
                *c *= s;
            }
        }
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(norm_sq(&self.coords))
    }
}

impl core::ops::Deref for KleinPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

/// A vector of the tangent space at `base`, `<base, v>_L = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: LorentzPoint,
    coords: Vec<f64>,
}

impl TangentVector {
    pub fn base(&self) -> &LorentzPoint {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The induced norm `sqrt(<v,v>_L)`; nonnegative on tangent spaces of
    /// the hyperboloid.
    pub fn lorentz_norm(&self) -> f64 {
        let q = inner(&self.coords, &self.coords);
        libm::sqrt(if q > 0.0 { q } else { 0.0 })
    }
}

/// `<x,y>_L = -x_0 y_0 + sum_{i>=1} x_i y_i`.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(GeometryError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(inner(x, y))
}

/// Unchecked Lorentz inner product for internal hot paths.
pub(crate) fn inner(x: &[f64], y: &[f64]) -> f64 {
    let mut s = -x[0] * y[0];
    for i in 1..x.len() {
        s += x[i] * y[i];
    }
    s
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

/// Geodesic distance `arcosh(-<x,y>_L)`, with the argument clamped to
/// `[1, inf)` so that floating-point drift cannot produce NaN.
pub fn lorentz_distance(x: &LorentzPoint, y: &LorentzPoint) -> f64 {
    dist_slices(&x.coords, &y.coords)
}

pub(crate) fn dist_slices(x: &[f64], y: &[f64]) -> f64 {
    let mut t = -inner(x, y);
    if t < 1.0 {
        t = 1.0;
    }
    libm::acosh(t)
}

/// Lorentz -> Klein map `F(x) = [x_1..x_d] / x_0`.
pub fn to_klein(x: &LorentzPoint) -> KleinPoint {
    let t = x.time();
    KleinPoint {
        coords: x.spatial().iter().map(|c| c / t).collect(),
    }
}

/// Klein -> Lorentz map `[1, k] / sqrt(1 - |k|^2)`; the inverse of
/// `to_klein`.
pub fn from_klein(k: &KleinPoint) -> LorentzPoint {
    let mut n2 = norm_sq(&k.coords);
    let max2 = (1.0 - EPS_BALL) * (1.0 - EPS_BALL);
    let mut scale = 1.0;
    if n2 > max2 {
        scale = libm::sqrt(max2 / n2);
        n2 = max2;
    }
    let gamma = 1.0 / libm::sqrt(1.0 - n2);
    let mut coords = Vec::with_capacity(k.coords.len() + 1);
    coords.push(gamma);
    coords.extend(k.coords.iter().map(|c| gamma * scale * c));
    LorentzPoint { coords }
}

/// Lorentz factor `gamma = 1 / sqrt(1 - |k|^2)`, clamped so it never
/// becomes infinite.
pub fn lorentz_factor(k: &KleinPoint) -> f64 {
    let mut n2 = norm_sq(&k.coords);
    let max2 = (1.0 - EPS_BALL) * (1.0 - EPS_BALL);
    if n2 > max2 {
        n2 = max2;
    }
    1.0 / libm::sqrt(1.0 - n2)
}

/// Einstein midpoint `(sum_j gamma_j k_j) / (sum_j gamma_j)`.
pub fn klein_midpoint(points: &[KleinPoint]) -> Result<KleinPoint, GeometryError> {
    let first = points.first().ok_or(GeometryError::EmptyMidpoint)?;
    let d = first.coords.len();
    let mut num = alloc::vec![0.0; d];
    let mut den = 0.0;
    for k in points {
        let g = lorentz_factor(k);
        den += g;
        for (acc, c) in num.iter_mut().zip(k.coords.iter()) {
            *acc += g * c;
        }
    }
    for c in num.iter_mut() {
        *c /= den;
    }
    Ok(KleinPoint::clamped(num))
}

/// Calibration `f_c`: keeps the spatial slots of an arbitrary ambient
/// vector and recomputes the time slot as `sqrt(1 + sum_j x_j^2)`, landing
/// exactly on the hyperboloid.
pub fn calibrate(x: &[f64]) -> LorentzPoint {
    let spatial = &x[1..];
    let mut coords = Vec::with_capacity(x.len());
    coords.push(libm::sqrt(1.0 + norm_sq(spatial)));
    coords.extend_from_slice(spatial);
    LorentzPoint { coords }
}

/// Repairs floating-point drift after an optimizer step; identical to
/// [`calibrate`] but named for its role.
pub fn renormalize(x: &[f64]) -> LorentzPoint {
    calibrate(x)
}

/// Orthogonal projection of an ambient vector onto the tangent space at
/// `x`: `v + <x,v>_L x`.
pub fn proj_tangent(x: &LorentzPoint, v: &[f64]) -> TangentVector {
    let q = inner(&x.coords, v);
    let coords = v
        .iter()
        .zip(x.coords.iter())
        .map(|(vi, xi)| vi + q * xi)
        .collect();
    TangentVector {
        base: x.clone(),
        coords,
    }
}

/// Exponential map `cosh(r) x + sinh(r) v / r` with `r = sqrt(<v,v>_L)`;
/// returns the base point unchanged for steps below [`EPS_STEP`].
pub fn exp_map(v: &TangentVector) -> LorentzPoint {
    let r = v.lorentz_norm();
    if r < EPS_STEP {
        return v.base.clone();
    }
    let (ch, sh) = (libm::cosh(r), libm::sinh(r) / r);
    let coords = v
        .base
        .coords
        .iter()
        .zip(v.coords.iter())
        .map(|(x, t)| ch * x + sh * t)
        .collect();
    renormalize_vec(coords)
}

/// Logarithmic map, the inverse of [`exp_map`]: the tangent vector at `x`
/// pointing to `y` with `|v|_L = d_L(x, y)`.
pub fn log_map(x: &LorentzPoint, y: &LorentzPoint) -> TangentVector {
    let d = lorentz_distance(x, y);
    if d < EPS_STEP {
        return TangentVector {
            base: x.clone(),
            coords: alloc::vec![0.0; x.coords.len()],
        };
    }
    let q = inner(&x.coords, &y.coords);
    let mut coords: Vec<f64> = y
        .coords
        .iter()
        .zip(x.coords.iter())
        .map(|(yi, xi)| yi + q * xi)
        .collect();
    let n = {
        let q = inner(&coords, &coords);
        libm::sqrt(if q > 0.0 { q } else { 0.0 })
    };
    if n < EPS_STEP {
        for c in coords.iter_mut() {
            *c = 0.0;
        }
    } else {
        let s = d / n;
        for c in coords.iter_mut() {
            *c *= s;
        }
    }
    TangentVector {
        base: x.clone(),
        coords,
    }
}

/// Wrapped-normal sample: `v ~ N(0, sigma^2 I_d)` in the tangent space at
/// the origin, pushed onto the manifold by the exponential map.
pub fn sample_wrapped_normal<R: Rng + ?Sized>(d: usize, sigma: f64, rng: &mut R) -> LorentzPoint {
    let origin = LorentzPoint::origin(d);
    let mut coords = Vec::with_capacity(d + 1);
    coords.push(0.0);
    for _ in 0..d {
        let z: f64 = StandardNormal.sample(rng);
        coords.push(sigma * z);
    }
    exp_map(&TangentVector {
        base: origin,
        coords,
    })
}

fn renormalize_vec(mut coords: Vec<f64>) -> LorentzPoint {
    coords[0] = libm::sqrt(1.0 + norm_sq(&coords[1..]));
    LorentzPoint { coords }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SQRT2: f64 = core::f64::consts::SQRT_2;

    fn p(coords: &[f64]) -> LorentzPoint {
        LorentzPoint::new(coords.to_vec()).unwrap()
    }

    pub(crate) fn random_point(d: usize, rng: &mut ChaCha8Rng) -> LorentzPoint {
        sample_wrapped_normal(d, 0.8, rng)
    }

    #[test]
    fn inner_matches_hand_expansion() {
        let o = [1.0, 0.0, 0.0];
        let x = [SQRT2, 1.0, 0.0];
        assert!((lorentz_inner(&o, &o).unwrap() + 1.0).abs() < 1e-15);
        assert!((lorentz_inner(&x, &x).unwrap() + 1.0).abs() < 1e-15);
        assert!((lorentz_inner(&x, &o).unwrap() + SQRT2).abs() < 1e-15);
    }

    #[test]
    fn inner_rejects_mismatched_lengths() {
        assert!(matches!(
            lorentz_inner(&[1.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn distance_worked_examples() {
        let o = LorentzPoint::origin(2);
        let x = p(&[SQRT2, 1.0, 0.0]);
        assert_eq!(lorentz_distance(&o, &o), 0.0);
        assert!((lorentz_distance(&o, &x) - SQRT2.acosh()).abs() < 1e-12);
        assert!((lorentz_distance(&o, &x) - 0.881374).abs() < 1e-6);
    }

    #[test]
    fn distance_symmetric_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = random_point(3, &mut rng);
            let y = random_point(3, &mut rng);
            assert_eq!(lorentz_distance(&x, &y), lorentz_distance(&y, &x));
        }
    }

    #[test]
    fn klein_maps_worked_examples() {
        let o = LorentzPoint::origin(2);
        assert_eq!(to_klein(&o).coords(), &[0.0, 0.0]);

        let x = p(&[SQRT2, 1.0, 0.0]);
        let k = to_klein(&x);
        assert!((k[0] - 1.0 / SQRT2).abs() < 1e-12);
        assert_eq!(k[1], 0.0);

        let back = from_klein(&k);
        for (a, b) in back.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-12);
        }

        let k2 = KleinPoint::new(alloc::vec![0.414214, 0.0]).unwrap();
        let z = from_klein(&k2);
        assert!((z[0] - 1.098684).abs() < 1e-6);
        assert!((z[1] - 0.455090).abs() < 1e-6);
        assert!((inner(&z, &z) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn klein_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_point(4, &mut rng);
            let back = from_klein(&to_klein(&x));
            for (a, b) in back.iter().zip(x.iter()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lorentz_factor_values() {
        assert_eq!(lorentz_factor(&KleinPoint::new(alloc::vec![0.0, 0.0]).unwrap()), 1.0);
        let k = KleinPoint::new(alloc::vec![1.0 / SQRT2, 0.0]).unwrap();
        assert!((lorentz_factor(&k) - SQRT2).abs() < 1e-12);
        let k = KleinPoint::new(alloc::vec![0.6, 0.0]).unwrap();
        assert!((lorentz_factor(&k) - 1.25).abs() < 1e-12);
    }

    #[test]
    fn lorentz_factor_clamps_at_the_boundary() {
        let k = KleinPoint::clamped(alloc::vec![2.0, 0.0]);
        assert!(lorentz_factor(&k).is_finite());
    }

    #[test]
    fn midpoint_worked_examples() {
        let a = KleinPoint::new(alloc::vec![1.0 / SQRT2, 0.0]).unwrap();
        let b = KleinPoint::new(alloc::vec![0.0, 0.0]).unwrap();

        let single = klein_midpoint(core::slice::from_ref(&a)).unwrap();
        assert_eq!(single.coords(), a.coords());

        let mid = klein_midpoint(&[a.clone(), b]).unwrap();
        assert!((mid[0] - 0.414214).abs() < 1e-6);
        assert_eq!(mid[1], 0.0);

        let same = klein_midpoint(&[a.clone(), a.clone(), a.clone()]).unwrap();
        for (m, c) in same.iter().zip(a.iter()) {
            assert!((m - c).abs() < 1e-15);
        }

        assert!(matches!(klein_midpoint(&[]), Err(GeometryError::EmptyMidpoint)));
    }

    #[test]
    fn calibrate_worked_examples() {
        let e = calibrate(&[0.3, 0.0, 0.0]);
        assert_eq!(e.coords(), &[1.0, 0.0, 0.0]);

        let e = calibrate(&[0.0, 0.6, 0.8]);
        assert!((e[0] - SQRT2).abs() < 1e-12);
        assert_eq!(&e[1..], &[0.6, 0.8]);

        let e = calibrate(&[1.2, 0.0, 0.4]);
        assert!((e[0] - 1.16f64.sqrt()).abs() < 1e-12);
        assert!((e[0] - 1.077033).abs() < 1e-6);
    }

    #[test]
    fn proj_tangent_worked_examples() {
        let o = LorentzPoint::origin(2);
        let v = proj_tangent(&o, &[3.0, 5.0, 7.0]);
        assert_eq!(v.coords(), &[0.0, 5.0, 7.0]);

        // <o, o>_L = -1 kills the base point
        let v = proj_tangent(&o, o.coords());
        assert_eq!(v.coords(), &[0.0, 0.0, 0.0]);

        // idempotence on an already tangent vector
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_point(3, &mut rng);
        let t = proj_tangent(&x, &[0.1, -0.4, 0.2, 0.7]);
        let again = proj_tangent(&x, t.coords());
        for (a, b) in again.coords().iter().zip(t.coords().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(inner(x.coords(), t.coords()).abs() < 1e-9);
    }

    #[test]
    fn exp_map_worked_examples() {
        let o = LorentzPoint::origin(2);
        let zero = proj_tangent(&o, &[0.0, 0.0, 0.0]);
        assert_eq!(exp_map(&zero).coords(), o.coords());

        let r = 0.7;
        let v = proj_tangent(&o, &[0.0, r, 0.0]);
        let y = exp_map(&v);
        assert!((y[0] - r.cosh()).abs() < 1e-12);
        assert!((y[1] - r.sinh()).abs() < 1e-12);
        assert!((inner(&y, &y) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn log_map_inverts_exp_map() {
        let o = LorentzPoint::origin(2);
        let r = 1.3f64;
        let y = p(&[r.cosh(), r.sinh(), 0.0]);
        let v = log_map(&o, &y);
        assert!((v.coords()[0]).abs() < 1e-12);
        assert!((v.coords()[1] - r).abs() < 1e-10);

        let zero = log_map(&y, &y);
        assert!(zero.coords().iter().all(|c| *c == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let x = random_point(3, &mut rng);
            let y = random_point(3, &mut rng);
            let v = log_map(&x, &y);
            assert!((v.lorentz_norm() - lorentz_distance(&x, &y)).abs() < 1e-9);
            let back = exp_map(&v);
            for (a, b) in back.iter().zip(y.iter()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn wrapped_normal_stays_on_manifold() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let x = sample_wrapped_normal(5, 0.5, &mut rng);
            assert!((inner(&x, &x) + 1.0).abs() < 1e-9);
        }
        // sigma -> 0 collapses to the origin
        let x = sample_wrapped_normal(5, 1e-14, &mut rng);
        assert_eq!(x.coords(), LorentzPoint::origin(5).coords());
    }

    #[test]
    fn wrapped_normal_mean_distance_matches_chi_mean() {
        // at the origin, distance-to-origin equals |v|, so the mean over
        // samples should match the chi-distribution mean sigma*E|z|_d
        let d = 4usize;
        let sigma = 0.1;
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let o = LorentzPoint::origin(d);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| lorentz_distance(&o, &sample_wrapped_normal(d, sigma, &mut rng)))
            .sum::<f64>()
            / n as f64;
        // E|z| for d=4: sqrt(2)*Gamma(2.5)/Gamma(2) = sqrt(2)*1.32934
        let expected = sigma * SQRT2 * 1.329_340_388_179_137;
        assert!(
            (mean - expected).abs() / expected < 0.05,
            "mean {mean} vs expected {expected}"
        );
    }

    #[test]
    fn renormalize_repairs_drift() {
        let x = p(&[SQRT2, 1.0, 0.0]);
        let same = renormalize(x.coords());
        for (a, b) in same.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-12);
        }

        let fixed = renormalize(&[1.0001 * SQRT2, 1.0, 0.0]);
        assert!((fixed[0] - SQRT2).abs() < 1e-12);
        assert_eq!(&fixed[1..], &[1.0, 0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let mut c = random_point(3, &mut rng).coords().to_vec();
            c[0] *= 1.0 + 1e-3 * (rng.random::<f64>() - 0.5);
            let r = renormalize(&c);
            assert!((inner(&r, &r) + 1.0).abs() < 1e-9);
        }
    }
}
