//! Triangle-level identities behind the three-body estimate: circumradius,
//! the `R`-regularized cyclic sum and its case-wise closed forms.
//!
//! The multiplied cyclic sum, the edge product and the area are polynomials
//! in the coordinates and `R²`. They are generic over [`GeomRing`], so the same
//! code runs in `f64`, in exact integers ([`ScaledTriangle`], used for all
//! sampled checks) and in [`num_rational::BigRational`] (an independent exact
//! path used on a subset).

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered commutative ring; enough for the polynomial parts.
pub trait GeomRing:
    Clone + PartialOrd + Debug + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
}

impl<T> GeomRing for T where
    T: Clone + PartialOrd + Debug + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>
{
}

/// Ordered field; needed once the sum is divided out.
pub trait GeomField: GeomRing + std::ops::Div<Output = Self> {
    /// Exact for the rational instantiation.
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
}

impl GeomField for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl GeomField for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite coordinate")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

pub type ExactTriangle = Triangle<BigRational>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: GeomRing> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Self { x, y }
    }

    fn sub(&self, o: &Self) -> Self {
        Self::new(self.x.clone() - o.x.clone(), self.y.clone() - o.y.clone())
    }

    fn dot(&self, o: &Self) -> F {
        self.x.clone() * o.x.clone() + self.y.clone() * o.y.clone()
    }

    fn cross(&self, o: &Self) -> F {
        self.x.clone() * o.y.clone() - self.y.clone() * o.x.clone()
    }

    fn norm_sqr(&self) -> F {
        self.dot(self)
    }
}

fn max<F: PartialOrd + Clone>(a: &F, b: &F) -> F {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

fn two<F: GeomRing>() -> F {
    F::one() + F::one()
}

/// Edge-length configuration relative to `R` (an edge is short when `|e| ≤ R`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    AllLong,
    OneShort,
    TwoShort,
    AllShort,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::AllLong, Regime::OneShort, Regime::TwoShort, Regime::AllShort];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triangle<F> {
    pub x: Point<F>,
    pub y: Point<F>,
    pub z: Point<F>,
}

impl<F: GeomRing> Triangle<F> {
    pub fn new(x: Point<F>, y: Point<F>, z: Point<F>) -> Self {
        Self { x, y, z }
    }

    /// `(|x-y|², |y-z|², |z-x|²)`.
    pub fn edge_sqr(&self) -> [F; 3] {
        [
            self.x.sub(&self.y).norm_sqr(),
            self.y.sub(&self.z).norm_sqr(),
            self.z.sub(&self.x).norm_sqr(),
        ]
    }

    /// `ρ² = |x-y|² + |y-z|² + |z-x|²`.
    pub fn rho_sqr(&self) -> F {
        let [a, b, c] = self.edge_sqr();
        a + b + c
    }

    /// Twice the signed area.
    pub fn double_area(&self) -> F {
        self.y.sub(&self.x).cross(&self.z.sub(&self.x))
    }

    pub fn is_collinear(&self) -> bool {
        self.double_area().is_zero()
    }

    pub fn regime(&self, radius_sqr: &F) -> Regime {
        let short = self.edge_sqr().iter().filter(|e| *e <= radius_sqr).count();
        match short {
            0 => Regime::AllLong,
            1 => Regime::OneShort,
            2 => Regime::TwoShort,
            _ => Regime::AllShort,
        }
    }

    /// The three vertex dot products `(x-y)·(x-z)`, `(y-z)·(y-x)`, `(z-x)·(z-y)`.
    fn vertex_dots(&self) -> [F; 3] {
        let (x, y, z) = (&self.x, &self.y, &self.z);
        [
            x.sub(y).dot(&x.sub(z)),
            y.sub(z).dot(&y.sub(x)),
            z.sub(x).dot(&z.sub(y)),
        ]
    }

    /// `|x-y|²_R |y-z|²_R |z-x|²_R` times the cyclic sum:
    /// `|y-z|²_R (x-y)·(x-z) + |z-x|²_R (y-z)·(y-x) + |x-y|²_R (z-x)·(z-y)`.
    pub fn multiplied_sum(&self, radius_sqr: &F) -> F {
        self.multiplied_sum_with(|e| max(e, radius_sqr))
    }

    /// [`Triangle::multiplied_sum`] with `|v|²_R` replaced by `profile(|v|²)`.
    pub fn multiplied_sum_with(&self, profile: impl Fn(&F) -> F) -> F {
        let [xy, yz, zx] = self.edge_sqr().map(|e| profile(&e));
        let [dx, dy, dz] = self.vertex_dots();
        yz * dx + zx * dy + xy * dz
    }

    /// `|x-y|²_R |y-z|²_R |z-x|²_R`.
    pub fn regularized_product(&self, radius_sqr: &F) -> F {
        let [a, b, c] = self.edge_sqr().map(|e| max(&e, radius_sqr));
        a * b * c
    }

    /// Twice the closed form of [`Triangle::multiplied_sum`] in the triangle's
    /// regime, as derived case by case in the proof of non-negativity:
    ///
    /// * all long: `4·(2·Area)²` (the sum is `𝓡⁻²/2`),
    /// * all short: `R² ρ²` (the sum is `ρ²/(2R⁴)`),
    /// * two short, long edge `|x-z|`: `2|x-z|²(R² + (y-z)·(y-x))`,
    /// * one short edge `|x-y|`: `2(R² - |x-y|²)(z-x)·(z-y) + 4|(z-x)∧(z-y)|²`.
    ///
    /// In the last two cases the vertices are cyclically relabeled so that the
    /// named edge roles hold.
    pub fn doubled_regime_formula(&self, radius_sqr: &F) -> F {
        let r2 = radius_sqr.clone();
        match self.regime(radius_sqr) {
            Regime::AllLong => {
                let d = self.double_area();
                two::<F>() * two::<F>() * d.clone() * d
            }
            Regime::AllShort => r2 * self.rho_sqr(),
            Regime::TwoShort => {
                // y is the vertex shared by the two short edges
                let t = self.relabel(radius_sqr, |e| !e[2]);
                let (x, y, z) = (&t.x, &t.y, &t.z);
                two::<F>() * x.sub(z).norm_sqr() * (r2 + y.sub(z).dot(&y.sub(x)))
            }
            Regime::OneShort => {
                // x-y is the short edge
                let t = self.relabel(radius_sqr, |e| e[0]);
                let (x, y, z) = (&t.x, &t.y, &t.z);
                let b = z.sub(x).cross(&z.sub(y));
                two::<F>() * (r2 - x.sub(y).norm_sqr()) * z.sub(x).dot(&z.sub(y))
                    + two::<F>() * two::<F>() * b.clone() * b
            }
        }
    }

    /// Cyclic relabeling (which leaves the sum invariant) chosen so that the
    /// short-edge pattern `(xy, yz, zx)` satisfies `want`.
    fn relabel(&self, radius_sqr: &F, want: impl Fn(&[bool; 3]) -> bool) -> Self {
        let mut t = self.clone();
        for _ in 0..3 {
            if want(&t.edge_sqr().map(|e| &e <= radius_sqr)) {
                return t;
            }
            t = Triangle::new(t.y.clone(), t.z.clone(), t.x.clone());
        }
        t
    }
}

impl<F: GeomField> Triangle<F> {
    pub fn from_f64(p: [[f64; 2]; 3]) -> Self {
        let pt = |q: [f64; 2]| Point::new(F::from_f64(q[0]), F::from_f64(q[1]));
        Self::new(pt(p[0]), pt(p[1]), pt(p[2]))
    }

    pub fn to_f64(&self) -> [[f64; 2]; 3] {
        [&self.x, &self.y, &self.z].map(|p| [p.x.to_f64(), p.y.to_f64()])
    }

    /// `𝓡⁻² = 16·Area²/(|x-y|²|y-z|²|z-x|²)`; zero for collinear points,
    /// `None` when two points coincide.
    pub fn inv_circumradius_sqr(&self) -> Option<F> {
        let [a, b, c] = self.edge_sqr();
        let prod = a * b * c;
        if prod.is_zero() {
            return None;
        }
        let d = self.double_area();
        Some(two::<F>() * two::<F>() * d.clone() * d / prod)
    }

    /// Closed form of [`Triangle::multiplied_sum`] in the triangle's regime.
    pub fn regime_formula(&self, radius_sqr: &F) -> F {
        self.doubled_regime_formula(radius_sqr) / two::<F>()
    }

    /// `Σ_cyc (x-y)/|x-y|²_R · (x-z)/|x-z|²_R` with `|v|_R = max(|v|, R)`,
    /// evaluated in `F`.
    pub fn cyclic_sum(&self, radius: &F) -> Result<F> {
        let r2 = radius.clone() * radius.clone();
        self.cyclic_sum_with(|e| max(e, &r2))
    }

    /// Cyclic sum with `|v|²_R` replaced by `profile(|v|²)`.
    pub fn cyclic_sum_with(&self, profile: impl Fn(&F) -> F) -> Result<F> {
        let [a, b, c] = self.cyclic_terms(&profile)?;
        Ok(a + b + c)
    }

    /// The three summands of the cyclic sum under `profile`.
    fn cyclic_terms(&self, profile: &impl Fn(&F) -> F) -> Result<[F; 3]> {
        let [xy, yz, zx] = self.edge_sqr().map(|e| profile(&e));
        if xy.is_zero() || yz.is_zero() || zx.is_zero() {
            return Err(Error::Domain("cyclic sum needs distinct points when R = 0".into()));
        }
        let [dx, dy, dz] = self.vertex_dots();
        Ok([dx / (xy.clone() * zx.clone()), dy / (yz.clone() * xy), dz / (zx * yz)])
    }
}

impl Triangle<f64> {
    /// Circumradius; infinite for collinear points.
    pub fn circumradius(&self) -> f64 {
        match self.inv_circumradius_sqr() {
            Some(v) if v > 0.0 => v.sqrt().recip(),
            _ => f64::INFINITY,
        }
    }

    pub fn edges(&self) -> [f64; 3] {
        self.edge_sqr().map(f64::sqrt)
    }

    pub fn rho(&self) -> f64 {
        self.rho_sqr().sqrt()
    }
}

/// A floating-point triangle and radius rescaled by a common power of two so
/// that every coordinate and `R` is an integer. Polynomial quantities are then
/// exact and only their final quotient is rounded.
#[derive(Debug, Clone)]
pub struct ScaledTriangle {
    pub triangle: Triangle<BigInt>,
    pub radius_sqr: BigInt,
    /// Coordinates were multiplied by `2^shift`.
    pub shift: i64,
}

fn decode(v: f64) -> (BigInt, i64) {
    let (m, e, s) = Float::integer_decode(v);
    (BigInt::from(s as i64 * m as i64), e as i64)
}

impl ScaledTriangle {
    pub fn new(points: [[f64; 2]; 3], radius: f64) -> Result<Self> {
        let coords = points.iter().flatten().copied().chain([radius]);
        if coords.clone().any(|v| !v.is_finite()) {
            return Err(Error::Domain("triangle coordinates and R must be finite".into()));
        }
        let decoded: Vec<_> = coords.map(decode).collect();
        let low = decoded
            .iter()
            .filter(|(m, _)| !m.is_zero())
            .map(|&(_, e)| e)
            .min()
            .unwrap_or(0);
        let mut ints = decoded.into_iter().map(|(m, e)| m << (e - low) as usize);
        let mut pt = || {
            let x = ints.next().unwrap();
            Point::new(x, ints.next().unwrap())
        };
        let triangle = Triangle::new(pt(), pt(), pt());
        let r = ints.next().unwrap();
        Ok(Self { triangle, radius_sqr: &r * &r, shift: -low })
    }

    pub fn regime(&self) -> Regime {
        self.triangle.regime(&self.radius_sqr)
    }

    /// `num/den · 2^(2·shift)` correctly rounded.
    pub fn rescaled(&self, num: BigInt, den: BigInt) -> f64 {
        let s = 2 * self.shift;
        let (num, den) = if s >= 0 { (num << s as usize, den) } else { (num, den << (-s) as usize) };
        ToPrimitive::to_f64(&Ratio::new_raw(num, den)).unwrap_or(f64::NAN)
    }

    /// The cyclic sum, exact up to the final rounding.
    pub fn cyclic_sum(&self) -> Result<f64> {
        let den = self.triangle.regularized_product(&self.radius_sqr);
        if den.is_zero() {
            return Err(Error::Domain("cyclic sum needs distinct points when R = 0".into()));
        }
        Ok(self.rescaled(self.triangle.multiplied_sum(&self.radius_sqr), den))
    }

    /// `𝓡⁻²`, exact up to the final rounding.
    pub fn inv_circumradius_sqr(&self) -> Option<f64> {
        let [a, b, c] = self.triangle.edge_sqr();
        let prod = a * b * c;
        if prod.is_zero() {
            return None;
        }
        let d = self.triangle.double_area();
        Some(self.rescaled(BigInt::from(4) * &d * &d, prod))
    }

    /// The multiplied sum equals its regime's closed form and is non-negative.
    pub fn identity_holds(&self) -> bool {
        let n = self.triangle.multiplied_sum(&self.radius_sqr);
        !n.is_negative() && BigInt::from(2) * &n == self.triangle.doubled_regime_formula(&self.radius_sqr)
    }

    /// `𝓡⁻² ≤ 9ρ⁻²` in the form `16A²ρ² ≤ 9|x-y|²|y-z|²|z-x|²`.
    pub fn circumradius_bound_holds(&self) -> bool {
        let t = &self.triangle;
        let [a, b, c] = t.edge_sqr();
        let d = t.double_area();
        BigInt::from(4) * &d * &d * t.rho_sqr() <= BigInt::from(9) * a * b * c
    }

    /// `𝓡 ≥ max edge / 2` in the form `(2·Area)² · max|e|² ≤ |x-y|²|y-z|²|z-x|²`.
    pub fn diameter_bound_holds(&self) -> bool {
        let t = &self.triangle;
        let [a, b, c] = t.edge_sqr();
        let longest = max(&max(&a, &b), &c);
        let d = t.double_area();
        &d * &d * longest <= a * b * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub regime: Regime,
    /// Exact up to the final rounding.
    pub cyclic_sum: f64,
    /// The same sum evaluated term by term in `f64`.
    pub float_sum: f64,
    /// `Σ|terms|`, the round-off scale of the float sum.
    pub scale: f64,
    pub lower_ok: bool,
    /// `cyclic_sum · ρ²`, the constant `C` needed for this triangle.
    pub upper_ratio: f64,
}

/// Checks `0 ≤ Σ ≤ C/ρ²` for one triangle and returns the measured `C`.
pub fn verify_sandwich(t: &Triangle<f64>, radius: f64) -> Result<SandwichReport> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!("radius must be finite and ≥ 0, got {radius}")));
    }
    sandwich_from(&ScaledTriangle::new(t.to_f64(), radius)?, t, radius)
}

fn sandwich_from(exact: &ScaledTriangle, t: &Triangle<f64>, radius: f64) -> Result<SandwichReport> {
    let cyclic_sum = exact.cyclic_sum()?;
    let r2 = radius * radius;
    let terms = t.cyclic_terms(&|e: &f64| e.max(r2))?;
    let scale = terms.iter().map(|v| v.abs()).sum::<f64>();
    Ok(SandwichReport {
        regime: exact.regime(),
        cyclic_sum,
        float_sum: terms.iter().sum(),
        scale,
        lower_ok: cyclic_sum >= -1e-12 * scale,
        upper_ratio: cyclic_sum * t.rho_sqr(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircumradiusReport {
    /// `𝓡⁻²`, zero for collinear points.
    pub inv_circumradius_sqr: f64,
    pub nine_over_rho_sqr: f64,
    /// `𝓡⁻² ≤ 9ρ⁻²`, decided exactly.
    pub bound_ok: bool,
    /// `𝓡 ≥ max edge / 2`, decided exactly.
    pub diameter_ok: bool,
    pub collinear: bool,
}

pub fn circumradius_bounds(t: &Triangle<f64>) -> Result<CircumradiusReport> {
    circumradius_from(&ScaledTriangle::new(t.to_f64(), 0.0)?, t)
}

fn circumradius_from(exact: &ScaledTriangle, t: &Triangle<f64>) -> Result<CircumradiusReport> {
    let inv = exact
        .inv_circumradius_sqr()
        .ok_or_else(|| Error::Domain("circumradius needs three distinct points".into()))?;
    Ok(CircumradiusReport {
        inv_circumradius_sqr: inv,
        nine_over_rho_sqr: 9.0 / t.rho_sqr(),
        bound_ok: exact.circumradius_bound_holds(),
        diameter_ok: exact.diameter_bound_holds(),
        collinear: exact.triangle.is_collinear(),
    })
}

/// A triangle with its regularization radius, replayable from a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub index: u64,
    pub points: [[f64; 2]; 3],
    pub radius: f64,
    pub value: f64,
}

fn uniform_triangle(rng: &mut ChaCha8Rng) -> Triangle<f64> {
    let mut p = || [rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0)];
    Triangle::from_f64([p(), p(), p()])
}

/// Uniform triangle in `[-2,2]²` with a radius placed so that the edge pattern
/// lands in `regime`.
pub fn sample_in_regime(rng: &mut ChaCha8Rng, regime: Regime) -> (Triangle<f64>, f64) {
    let t = uniform_triangle(rng);
    let mut e = t.edges();
    e.sort_by(f64::total_cmp);
    let u: f64 = rng.gen();
    let r = match regime {
        Regime::AllLong => e[0] * (1.0 - u).max(1e-3),
        Regime::OneShort => e[0] + u * (e[1] - e[0]),
        Regime::TwoShort => e[1] + u * (e[2] - e[1]),
        Regime::AllShort => e[2] * (1.0 + u.max(1e-3)),
    };
    (t, r)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const CHUNK: u64 = 4096;

/// Splits `samples` into fixed chunks with their own RNG stream, so results
/// do not depend on the thread count.
fn chunked<R: Send>(
    samples: u64,
    seed: u64,
    stream_base: u64,
    f: impl Fn(&mut ChaCha8Rng, std::ops::Range<u64>) -> R + Sync,
) -> Vec<R> {
    use rayon::prelude::*;
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, stream_base + k);
            f(&mut rng, k * CHUNK..((k + 1) * CHUNK).min(samples))
        })
        .collect()
}

fn keep_worst(slot: &mut Option<Case>, cand: Case, larger: bool) {
    let better = match slot {
        None => true,
        Some(c) => {
            let ord = cand.value.total_cmp(&c.value).then(c.index.cmp(&cand.index));
            if larger {
                ord.is_gt()
            } else {
                ord.is_lt()
            }
        }
    };
    if better {
        *slot = Some(cand);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeStats {
    pub regime: Regime,
    pub samples: u64,
    /// Samples whose classified regime differed from the target (boundary ties).
    pub misclassified: u64,
    pub lower_violations: u64,
    /// Samples where the exact multiplied sum differs from its regime's
    /// closed form or is negative.
    pub identity_failures: u64,
    pub circumradius_violations: u64,
    pub collinear: u64,
    /// Most negative `cyclic_sum / scale`.
    pub min_relative_sum: Option<Case>,
    /// Largest `cyclic_sum · ρ²`.
    pub max_upper_ratio: Option<Case>,
    /// Largest relative deviation of the cyclic sum from the closed form of
    /// its regime (`𝓡⁻²/2`, `ρ²/(2R⁴)`, or the assembled quotient).
    pub max_identity_error: Option<Case>,
    /// The same deviation with the sum evaluated term by term in `f64`; a
    /// conditioning diagnostic only.
    pub max_float_identity_error: Option<Case>,
    /// Largest `𝓡⁻² ρ² / 9`.
    pub max_circumradius_ratio: Option<Case>,
    /// Samples re-checked in rational arithmetic.
    pub rational_checked: u64,
    pub rational_failures: u64,
    pub first_failure: Option<Case>,
}

impl RegimeStats {
    fn empty(regime: Regime) -> Self {
        Self {
            regime,
            samples: 0,
            misclassified: 0,
            lower_violations: 0,
            identity_failures: 0,
            circumradius_violations: 0,
            collinear: 0,
            min_relative_sum: None,
            max_upper_ratio: None,
            max_identity_error: None,
            max_float_identity_error: None,
            max_circumradius_ratio: None,
            rational_checked: 0,
            rational_failures: 0,
            first_failure: None,
        }
    }

    fn merge(mut self, o: Self) -> Self {
        self.samples += o.samples;
        self.misclassified += o.misclassified;
        self.lower_violations += o.lower_violations;
        self.identity_failures += o.identity_failures;
        self.circumradius_violations += o.circumradius_violations;
        self.collinear += o.collinear;
        self.rational_checked += o.rational_checked;
        self.rational_failures += o.rational_failures;
        for (slot, c, larger) in [
            (&mut self.min_relative_sum, o.min_relative_sum, false),
            (&mut self.max_upper_ratio, o.max_upper_ratio, true),
            (&mut self.max_identity_error, o.max_identity_error, true),
            (&mut self.max_float_identity_error, o.max_float_identity_error, true),
            (&mut self.max_circumradius_ratio, o.max_circumradius_ratio, true),
        ] {
            if let Some(c) = c {
                keep_worst(slot, c, larger);
            }
        }
        if let Some(c) = o.first_failure {
            match &self.first_failure {
                Some(s) if s.index <= c.index => {}
                _ => self.first_failure = Some(c),
            }
        }
        self
    }

    pub fn worst_value(slot: &Option<Case>) -> f64 {
        slot.as_ref().map_or(f64::NAN, |c| c.value)
    }

    /// Every hard check passed.
    pub fn passed(&self) -> bool {
        self.lower_violations == 0
            && self.identity_failures == 0
            && self.circumradius_violations == 0
            && self.rational_failures == 0
    }
}

/// Relative deviation of `sum` from the regime's closed form evaluated in
/// `f64`: `𝓡⁻²/2`, `ρ²/(2R⁴)`, or the assembled quotient in the mixed cases.
fn float_identity_error(t: &Triangle<f64>, radius_sqr: f64, inv_circ: Option<f64>, sum: f64) -> f64 {
    let expect = match t.regime(&radius_sqr) {
        Regime::AllLong => match inv_circ {
            Some(v) => v / 2.0,
            None => return f64::NAN,
        },
        Regime::AllShort => t.rho_sqr() / (2.0 * radius_sqr * radius_sqr),
        _ => t.regime_formula(&radius_sqr) / t.regularized_product(&radius_sqr),
    };
    relative_error(sum, expect)
}

fn relative_error(got: f64, expect: f64) -> f64 {
    if expect == 0.0 {
        got.abs()
    } else {
        (got / expect - 1.0).abs()
    }
}

/// The same identities decided in rational arithmetic, independently of
/// [`ScaledTriangle`]: the multiplied sum equals its closed form, is
/// non-negative, and `𝓡⁻² ρ² ≤ 9`.
pub fn rational_check(points: [[f64; 2]; 3], radius: f64) -> bool {
    let t = ExactTriangle::from_f64(points);
    let r = BigRational::from_f64(radius);
    let r2 = r.clone() * r;
    let n = t.multiplied_sum(&r2);
    if n != t.regime_formula(&r2) || n.is_negative() {
        return false;
    }
    match t.inv_circumradius_sqr() {
        Some(inv) => inv * t.rho_sqr() <= BigRational::from_integer(BigInt::from(9)),
        None => false,
    }
}

fn regime_chunk(
    rng: &mut ChaCha8Rng,
    range: std::ops::Range<u64>,
    regime: Regime,
    rational_every: u64,
) -> RegimeStats {
    let mut s = RegimeStats::empty(regime);
    for index in range {
        let (t, r) = sample_in_regime(rng, regime);
        let points = t.to_f64();
        let case = |value| Case { index, points, radius: r, value };
        let fail = |s: &mut RegimeStats, value| {
            if s.first_failure.is_none() {
                s.first_failure = Some(case(value));
            }
        };
        s.samples += 1;
        let Ok(exact) = ScaledTriangle::new(points, r) else {
            continue;
        };
        if exact.regime() != regime {
            s.misclassified += 1;
        }
        if !exact.identity_holds() {
            s.identity_failures += 1;
            fail(&mut s, f64::NAN);
        }
        let Ok(rep) = sandwich_from(&exact, &t, r) else {
            continue;
        };
        if !rep.lower_ok {
            s.lower_violations += 1;
            fail(&mut s, rep.cyclic_sum);
        }
        if rep.scale > 0.0 {
            keep_worst(&mut s.min_relative_sum, case(rep.cyclic_sum / rep.scale), false);
        }
        keep_worst(&mut s.max_upper_ratio, case(rep.upper_ratio), true);

        let r2 = r * r;
        let expect = match exact.regime() {
            Regime::AllLong => exact.inv_circumradius_sqr().map(|v| v / 2.0),
            Regime::AllShort => Some(t.rho_sqr() / (2.0 * r2 * r2)),
            _ => {
                let tr = &exact.triangle;
                let den = BigInt::from(2) * tr.regularized_product(&exact.radius_sqr);
                Some(exact.rescaled(tr.doubled_regime_formula(&exact.radius_sqr), den))
            }
        };
        if let Some(e) = expect {
            keep_worst(&mut s.max_identity_error, case(relative_error(rep.cyclic_sum, e)), true);
        }
        let ferr = float_identity_error(&t, r2, t.inv_circumradius_sqr(), rep.float_sum);
        if ferr.is_finite() {
            keep_worst(&mut s.max_float_identity_error, case(ferr), true);
        }

        if let Ok(c) = circumradius_from(&exact, &t) {
            if c.collinear {
                s.collinear += 1;
            }
            if !c.bound_ok || !c.diameter_ok {
                s.circumradius_violations += 1;
                fail(&mut s, c.inv_circumradius_sqr);
            }
            keep_worst(&mut s.max_circumradius_ratio, case(c.inv_circumradius_sqr / c.nine_over_rho_sqr), true);
        }
        if rational_every > 0 && index % rational_every == 0 {
            s.rational_checked += 1;
            if !rational_check(points, r) {
                s.rational_failures += 1;
                fail(&mut s, f64::NAN);
            }
        }
    }
    s
}

/// Samples `samples` triangles in `regime`. Every sample is checked in exact
/// integer arithmetic; every `rational_every`-th one (0 for none) is also
/// re-checked in rational arithmetic.
pub fn regime_stats(regime: Regime, samples: u64, seed: u64, rational_every: u64) -> RegimeStats {
    let base = (1 + regime as u64) << 40;
    chunked(samples, seed, base, |rng, range| regime_chunk(rng, range, regime, rational_every))
        .into_iter()
        .fold(RegimeStats::empty(regime), RegimeStats::merge)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub seed: u64,
    pub samples: u64,
    pub violations: u64,
    /// Most negative `cyclic_sum / scale`; the case radius is unused.
    pub most_negative: Option<Case>,
}

/// Relative cyclic sum `Σ/Σ|terms|` under a squared-norm profile, `None` when
/// it is undefined.
pub fn probe_value(points: [[f64; 2]; 3], profile: impl Fn(f64) -> f64) -> Option<f64> {
    let t = Triangle::<f64>::from_f64(points);
    let terms = t.cyclic_terms(&|e: &f64| profile(*e)).ok()?;
    let scale: f64 = terms.iter().map(|v| v.abs()).sum();
    if !scale.is_finite() || scale == 0.0 {
        return None;
    }
    Some(terms.iter().sum::<f64>() / scale)
}

/// Searches uniform triangles in `[-2,2]²` for negative cyclic sums when
/// `|v|²_R` is replaced by `profile(|v|²)`.
pub fn counterexample_probe(
    profile: impl Fn(f64) -> f64 + Sync,
    samples: u64,
    seed: u64,
) -> ProbeReport {
    let parts = chunked(samples, seed, 0, |rng, range| {
        let mut violations = 0;
        let mut worst = None;
        for index in range {
            let points = uniform_triangle(rng).to_f64();
            let Some(value) = probe_value(points, &profile) else {
                continue;
            };
            if value < -1e-12 {
                violations += 1;
                keep_worst(&mut worst, Case { index, points, radius: 0.0, value }, false);
            }
        }
        (violations, worst)
    });
    let mut out = ProbeReport { seed, samples, violations: 0, most_negative: None };
    for (v, w) in parts {
        out.violations += v;
        if let Some(c) = w {
            keep_worst(&mut out.most_negative, c, false);
        }
    }
    out
}

/// Named squared-norm profiles for reports and replays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum ProbeProfile {
    GaussianGrowth,
    Regularized { radius: f64 },
}

impl ProbeProfile {
    pub fn eval(&self, e: f64) -> f64 {
        match *self {
            Self::GaussianGrowth => gaussian_growth_profile(e),
            Self::Regularized { radius } => e.max(radius * radius),
        }
    }
}

/// `|v|²_R = max(|v|², R²)`, as a squared-norm profile.
pub fn regularized_profile(radius: f64) -> impl Fn(f64) -> f64 + Sync {
    move |e| e.max(radius * radius)
}

/// `e^{|v|²}`, the square of the radial function `e^{|v|²/2}`.
pub fn gaussian_growth_profile(e: f64) -> f64 {
    e.exp()
}
