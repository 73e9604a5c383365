//! Conformal immersions into `S^n` evaluated as jets.
//!
//! Every chart is written against jet-valued domain coordinates, so the same
//! formula provides exact derivatives at a point and can be precomposed with
//! a holomorphic change of coordinates. Charts are named by the mini-grammar
//! `name[:key=value[,key=value]*]`; see [`parse_surface`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::jets::{jet_from_samples, required_half_width, Jet, JetVector, MAX_ORDER};
use crate::minkowski::MobiusTransform;
use crate::{Error, Result, C64};

/// Parameter region of a chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// Doubly periodic in `u` and `v` with the given periods; grids start at 0.
    Periodic { pu: f64, pv: f64 },
    /// A closed coordinate box `[u0, u1] × [v0, v1]`.
    Box { u0: f64, u1: f64, v0: f64, v1: f64 },
}

impl Domain {
    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain::Periodic { .. })
    }

    /// Coordinate extents `(u-length, v-length)`.
    pub fn extent(&self) -> (f64, f64) {
        match *self {
            Domain::Periodic { pu, pv } => (pu, pv),
            Domain::Box { u0, u1, v0, v1 } => (u1 - u0, v1 - v0),
        }
    }

    /// Grid node `(i, j)` of a `w × h` grid. Periodic grids omit the right
    /// endpoint; box grids include both endpoints.
    pub fn node(&self, i: usize, j: usize, w: usize, h: usize) -> (f64, f64) {
        match *self {
            Domain::Periodic { pu, pv } => (pu * i as f64 / w as f64, pv * j as f64 / h as f64),
            Domain::Box { u0, u1, v0, v1 } => (
                u0 + (u1 - u0) * i as f64 / (w - 1).max(1) as f64,
                v0 + (v1 - v0) * j as f64 / (h - 1).max(1) as f64,
            ),
        }
    }

    /// Grid spacings of a `w × h` grid.
    pub fn spacing(&self, w: usize, h: usize) -> (f64, f64) {
        match *self {
            Domain::Periodic { pu, pv } => (pu / w as f64, pv / h as f64),
            Domain::Box { u0, u1, v0, v1 } => ((u1 - u0) / (w - 1).max(1) as f64, (v1 - v0) / (h - 1).max(1) as f64),
        }
    }

    /// Maps a point of the unit square to the domain.
    pub fn from_unit(&self, s: f64, t: f64) -> (f64, f64) {
        match *self {
            Domain::Periodic { pu, pv } => (pu * s, pv * t),
            Domain::Box { u0, u1, v0, v1 } => (u0 + (u1 - u0) * s, v0 + (v1 - v0) * t),
        }
    }
}

/// A conformal immersion `y : D → S^n ⊂ R^{n+1}`.
pub trait Chart: Send + Sync + fmt::Debug {
    /// Canonical spec string of this chart.
    fn spec(&self) -> String;

    /// Sphere dimension `n`; positions have `n + 1` components.
    fn n(&self) -> usize;

    fn domain(&self) -> Domain;

    /// Position jets for jet-valued coordinates `u`, `v`.
    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector>;

    /// Position jet of the given order at the point `(u, v)`.
    fn position(&self, u: f64, v: f64, order: usize) -> Result<JetVector> {
        self.position_jets(&Jet::var_u(u, order), &Jet::var_v(v, order))
    }
}

/// Shared handle to a chart.
pub type SurfaceChart = Arc<dyn Chart>;

fn real(x: f64, order: usize) -> Jet {
    Jet::real(x, order)
}

/// `y = (cos u, sin u, cos v, sin v)/√2`, the minimal Clifford torus in `S³`.
#[derive(Clone, Debug)]
pub struct Clifford;

impl Chart for Clifford {
    fn spec(&self) -> String {
        "clifford".into()
    }

    fn n(&self) -> usize {
        3
    }

    fn domain(&self) -> Domain {
        Domain::Periodic { pu: 2.0 * PI, pv: 2.0 * PI }
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Ok(JetVector::new(vec![u.cos() * r, u.sin() * r, v.cos() * r, v.sin() * r]))
    }
}

/// `y = (a cos(u/a), a sin(u/a), b cos(v/b), b sin(v/b))` with `a² + b² = 1`.
#[derive(Clone, Debug)]
pub struct ProductTorus {
    a: f64,
    b: f64,
}

impl ProductTorus {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::ParameterRange {
                name: "a".into(),
                value: a,
                range: "(0, 1)".into(),
            });
        }
        Ok(Self {
            a,
            b: (1.0 - a * a).sqrt(),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl Chart for ProductTorus {
    fn spec(&self) -> String {
        format!("product-torus:a={}", self.a)
    }

    fn n(&self) -> usize {
        3
    }

    fn domain(&self) -> Domain {
        Domain::Periodic {
            pu: 2.0 * PI * self.a,
            pv: 2.0 * PI * self.b,
        }
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let (a, b) = (self.a, self.b);
        let (p, q) = (*u * (1.0 / a), *v * (1.0 / b));
        Ok(JetVector::new(vec![p.cos() * a, p.sin() * a, q.cos() * b, q.sin() * b]))
    }
}

/// Inverse stereographic coordinates `(2u, 2v, 1 − |z|²)/(1 + |z|²)`.
fn inverse_stereographic(u: &Jet, v: &Jet) -> Result<[Jet; 3]> {
    let r2 = *u * *u + *v * *v;
    let inv = (r2 + 1.0).recip()?;
    Ok([*u * inv * 2.0, *v * inv * 2.0, (-r2 + 1.0) * inv])
}

/// A totally geodesic 2-sphere in `S^n` via inverse stereographic projection.
#[derive(Clone, Debug)]
pub struct GreatSphere {
    n: usize,
}

impl GreatSphere {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        Ok(Self { n })
    }
}

impl Chart for GreatSphere {
    fn spec(&self) -> String {
        format!("great-sphere:n={}", self.n)
    }

    fn n(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Domain {
        Domain::Box { u0: -1.0, u1: 1.0, v0: -1.0, v1: 1.0 }
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let order = u.order().min(v.order());
        let mut e = inverse_stereographic(u, v)?.to_vec();
        e.resize(self.n + 1, real(0.0, order));
        Ok(JetVector::new(e))
    }
}

/// The Veronese surface in `S⁴` composed with inverse stereographic projection.
#[derive(Clone, Debug)]
pub struct Veronese;

impl Chart for Veronese {
    fn spec(&self) -> String {
        "veronese".into()
    }

    fn n(&self) -> usize {
        4
    }

    fn domain(&self) -> Domain {
        Domain::Box { u0: -0.5, u1: 0.5, v0: -0.5, v1: 0.5 }
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let [x1, x2, x3] = inverse_stereographic(u, v)?;
        let r3 = 3f64.sqrt();
        Ok(JetVector::new(vec![
            x2 * x3 * r3,
            x1 * x3 * r3,
            x1 * x2 * r3,
            (x1 * x1 - x2 * x2) * (0.5 * r3),
            (x3 * x3 * 2.0 - x1 * x1 - x2 * x2) * 0.5,
        ]))
    }
}

/// A flat torus `y = (a_k e^{i(p_k u + q_k v)})_{k=1..3}` in `S⁵ ⊂ C³`.
///
/// The frequency vectors satisfy `a_k (p_k, q_k) = √(2/3)(cos 2πk/3, sin 2πk/3)`,
/// which makes the coordinates conformal with unit speed. It is minimal
/// exactly when `a_1 = a_2 = a_3 = 1/√3`.
#[derive(Clone, Debug)]
pub struct FlatTorusS5 {
    amp: [f64; 3],
    freq: [(f64, f64); 3],
}

impl FlatTorusS5 {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        for (name, a) in [("a1", a1), ("a2", a2)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::ParameterRange {
                    name: name.into(),
                    value: a,
                    range: "(0, 1)".into(),
                });
            }
        }
        let rest = 1.0 - a1 * a1 - a2 * a2;
        if rest <= 0.0 {
            return Err(Error::ParameterRange {
                name: "a1²+a2²".into(),
                value: 1.0 - rest,
                range: "(0, 1)".into(),
            });
        }
        let amp = [a1, a2, rest.sqrt()];
        let r = (2.0f64 / 3.0).sqrt();
        let mut freq = [(0.0, 0.0); 3];
        for k in 0..3 {
            let t = 2.0 * PI * (k + 1) as f64 / 3.0;
            freq[k] = (r * t.cos() / amp[k], r * t.sin() / amp[k]);
        }
        Ok(Self { amp, freq })
    }
}

impl Chart for FlatTorusS5 {
    fn spec(&self) -> String {
        format!("flat-torus-s5:a1={},a2={}", self.amp[0], self.amp[1])
    }

    fn n(&self) -> usize {
        5
    }

    fn domain(&self) -> Domain {
        Domain::Box { u0: 0.0, u1: 1.0, v0: 0.0, v1: 1.0 }
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let mut e = Vec::with_capacity(6);
        for k in 0..3 {
            let (p, q) = self.freq[k];
            let phase = *u * p + *v * q;
            e.push(phase.cos() * self.amp[k]);
            e.push(phase.sin() * self.amp[k]);
        }
        Ok(JetVector::new(e))
    }
}

/// Chart whose lift is `M·Y` for a Möbius transformation `M`, re-projected
/// to the sphere as `y' = spatial(MY₀)/time(MY₀)`.
#[derive(Clone, Debug)]
pub struct MobiusChart {
    inner: SurfaceChart,
    m: MobiusTransform,
}

impl Chart for MobiusChart {
    fn spec(&self) -> String {
        format!("{}|mobius", self.inner.spec())
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn domain(&self) -> Domain {
        self.inner.domain()
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let y = self.inner.position_jets(u, v)?;
        let order = y.order();
        let dim = self.m.dim();
        let mut y0 = vec![real(1.0, order)];
        y0.extend_from_slice(y.entries());
        let mat = self.m.matrix();
        let image: Vec<Jet> = (0..dim)
            .map(|i| {
                let mut acc = real(0.0, order);
                for (j, e) in y0.iter().enumerate() {
                    acc += *e * mat[(i, j)];
                }
                acc
            })
            .collect();
        let t = image[0].value().re;
        if t <= 1e-12 {
            return Err(Error::ThroughInfinity(t));
        }
        let inv = image[0].recip()?;
        Ok(JetVector::new(image[1..].iter().map(|x| *x * inv).collect()))
    }
}

/// Applies a Möbius transformation to a chart.
pub fn apply_mobius(chart: SurfaceChart, m: &MobiusTransform) -> Result<SurfaceChart> {
    if m.dim() != chart.n() + 2 {
        return Err(Error::DimensionMismatch {
            expected: chart.n() + 2,
            actual: m.dim(),
        });
    }
    Ok(Arc::new(MobiusChart { inner: chart, m: m.clone() }))
}

/// A holomorphic change of coordinate `w = w(z)` with closed-form inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoordinateChange {
    /// `w = c·z`
    Linear(C64),
    /// `w = a·z + b`
    Affine(C64, C64),
    /// `w = (a·z + b)/(c·z + d)`, `ad − bc ≠ 0`
    Fractional(C64, C64, C64, C64),
    /// `w = z + a·z²` (non-Möbius, non-vanishing Schwarzian)
    Quadratic(C64),
}

impl CoordinateChange {
    /// `w(z)` as a jet of the jet `z`.
    pub fn forward(&self, z: &Jet) -> Result<Jet> {
        Ok(match *self {
            CoordinateChange::Linear(c) => *z * c,
            CoordinateChange::Affine(a, b) => *z * a + b,
            CoordinateChange::Fractional(a, b, c, d) => ((*z * a + b) / (*z * c + d))?,
            CoordinateChange::Quadratic(a) => *z + *z * *z * a,
        })
    }

    /// `z(w)` as a jet of the jet `w`.
    pub fn inverse(&self, w: &Jet) -> Result<Jet> {
        match *self {
            CoordinateChange::Linear(c) => Ok(*w * c.inv()),
            CoordinateChange::Affine(a, b) => Ok((*w + (-b)) * a.inv()),
            CoordinateChange::Fractional(a, b, c, d) => (*w * d + (-b)) / (*w * (-c) + a),
            CoordinateChange::Quadratic(a) => {
                if a == C64::new(0.0, 0.0) {
                    return Ok(*w);
                }
                let root = (*w * (4.0 * a) + 1.0).csqrt()?;
                Ok((root + (-1.0)) * (0.5 / a))
            }
        }
    }

    /// `(w′, w″, w‴)` at `z`.
    pub fn derivatives(&self, z: C64) -> (C64, C64, C64) {
        let zero = C64::new(0.0, 0.0);
        match *self {
            CoordinateChange::Linear(c) => (c, zero, zero),
            CoordinateChange::Affine(a, _) => (a, zero, zero),
            CoordinateChange::Fractional(a, b, c, d) => {
                let det = a * d - b * c;
                let q = c * z + d;
                (det / (q * q), -2.0 * c * det / (q * q * q), 6.0 * c * c * det / (q * q * q * q))
            }
            CoordinateChange::Quadratic(a) => (1.0 + 2.0 * a * z, 2.0 * a, zero),
        }
    }

    /// `(w′, w″)` as jets of the jet `z`.
    pub fn derivative_jets(&self, z: &Jet) -> Result<(Jet, Jet)> {
        let order = z.order();
        let c = |x: C64| Jet::constant(x, order);
        Ok(match *self {
            CoordinateChange::Linear(a) | CoordinateChange::Affine(a, _) => (c(a), c(C64::new(0.0, 0.0))),
            CoordinateChange::Fractional(a, b, cc, d) => {
                let det = a * d - b * cc;
                let q = (*z * cc + d).recip()?;
                let q2 = q * q;
                (q2 * det, q2 * q * (-2.0 * cc * det))
            }
            CoordinateChange::Quadratic(a) => (*z * (2.0 * a) + 1.0, c(2.0 * a)),
        })
    }

    /// Classical Schwarzian `S_z(w) = w‴/w′ − (3/2)(w″/w′)²`.
    pub fn schwarzian(&self, z: C64) -> C64 {
        let (w1, w2, w3) = self.derivatives(z);
        w3 / w1 - 1.5 * (w2 / w1) * (w2 / w1)
    }

    pub fn check_regular(&self, z: C64) -> Result<()> {
        let (w1, _, _) = self.derivatives(z);
        if !(w1.norm() > 1e-10) {
            return Err(Error::SingularCoordinateChange(w1.norm()));
        }
        if let CoordinateChange::Fractional(a, b, c, d) = *self {
            if (a * d - b * c).norm() < 1e-14 {
                return Err(Error::SingularCoordinateChange(0.0));
            }
        }
        Ok(())
    }

    /// The point `z(w)`.
    pub fn inverse_point(&self, w: C64) -> Result<C64> {
        Ok(self.inverse(&Jet::constant(w, 0))?.value())
    }

    pub fn forward_point(&self, z: C64) -> Result<C64> {
        Ok(self.forward(&Jet::constant(z, 0))?.value())
    }
}

impl fmt::Display for CoordinateChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordinateChange::Linear(c) => write!(f, "w={c}z"),
            CoordinateChange::Affine(a, b) => write!(f, "w={a}z+{b}"),
            CoordinateChange::Fractional(a, b, c, d) => write!(f, "w=({a}z+{b})/({c}z+{d})"),
            CoordinateChange::Quadratic(a) => write!(f, "w=z+{a}z²"),
        }
    }
}

/// Chart in the new coordinate `w = U + iV`: evaluates the inner chart at `z(w)`.
#[derive(Clone, Debug)]
pub struct CoordinateChart {
    inner: SurfaceChart,
    change: CoordinateChange,
}

impl CoordinateChart {
    pub fn change(&self) -> CoordinateChange {
        self.change
    }

    pub fn inner(&self) -> &SurfaceChart {
        &self.inner
    }
}

impl Chart for CoordinateChart {
    fn spec(&self) -> String {
        format!("{}|{}", self.inner.spec(), self.change)
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn domain(&self) -> Domain {
        let d = self.inner.domain();
        let (le, he) = d.extent();
        let corners = [d.from_unit(0.0, 0.0), d.from_unit(1.0, 0.0), d.from_unit(0.0, 1.0), d.from_unit(1.0, 1.0)];
        let images: Vec<C64> = corners
            .iter()
            .filter_map(|&(u, v)| self.change.forward_point(C64::new(u, v)).ok())
            .collect();
        if let (CoordinateChange::Linear(c), Domain::Periodic { .. }) = (self.change, d) {
            if c.im == 0.0 && c.re > 0.0 {
                return Domain::Periodic { pu: c.re * le, pv: c.re * he };
            }
        }
        let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for w in images {
            u0 = u0.min(w.re);
            u1 = u1.max(w.re);
            v0 = v0.min(w.im);
            v1 = v1.max(w.im);
        }
        Domain::Box { u0, u1, v0, v1 }
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let w = *u + *v * C64::i();
        let z = self.change.inverse(&w)?;
        self.change.check_regular(z.value())?;
        self.inner.position_jets(&z.re(), &z.im())
    }
}

/// Precomposes a chart with the inverse of `w`, giving a chart in the coordinate `w`.
pub fn apply_coordinate_change(chart: SurfaceChart, change: CoordinateChange) -> SurfaceChart {
    Arc::new(CoordinateChart { inner: chart, change })
}

/// Bivariate composition `f ∘ (U, V)` of a jet `f` based at `(U₀, V₀)`.
fn compose2(f: &Jet, u: &Jet, v: &Jet) -> Jet {
    let order = f.order().min(u.order()).min(v.order());
    let (mut hu, mut hv) = (u.truncate(order), v.truncate(order));
    hu.set_coeff(0, 0, C64::new(0.0, 0.0));
    hv.set_coeff(0, 0, C64::new(0.0, 0.0));
    let mut pu = vec![Jet::real(1.0, order)];
    let mut pv = vec![Jet::real(1.0, order)];
    for k in 1..=order {
        pu.push(pu[k - 1] * hu);
        pv.push(pv[k - 1] * hv);
    }
    let mut fact = [1.0; MAX_ORDER + 1];
    for k in 1..=MAX_ORDER {
        fact[k] = fact[k - 1] * k as f64;
    }
    let mut acc = Jet::zero(order);
    for d in 0..=order {
        for j in 0..=d {
            let i = d - j;
            acc += pu[i] * pv[j] * (f.coeff(i, j) / (fact[i] * fact[j]));
        }
    }
    acc
}

/// Cross-validation chart: derivatives of the inner chart estimated by
/// central finite differences of its point values. Lower accuracy by design.
#[derive(Clone, Debug)]
pub struct FiniteDifferenceChart {
    inner: SurfaceChart,
    h: f64,
    accuracy: usize,
}

impl FiniteDifferenceChart {
    pub fn new(inner: SurfaceChart, h: f64, accuracy: usize) -> Self {
        Self { inner, h, accuracy }
    }
}

impl Chart for FiniteDifferenceChart {
    fn spec(&self) -> String {
        format!("{}|fd:h={},p={}", self.inner.spec(), self.h, self.accuracy)
    }

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn domain(&self) -> Domain {
        self.inner.domain()
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let order = u.order().min(v.order());
        let (u0, v0) = (u.value().re, v.value().re);
        let m = (0..=order)
            .map(|k| required_half_width(k, self.accuracy))
            .max()
            .unwrap_or(0);
        let side = 2 * m + 1;
        let mut grid: Vec<Vec<Vec<C64>>> = Vec::with_capacity(side);
        for a in 0..side {
            let uu = u0 + (a as f64 - m as f64) * self.h;
            let mut row = Vec::with_capacity(side);
            for b in 0..side {
                let vv = v0 + (b as f64 - m as f64) * self.h;
                row.push(self.inner.position(uu, vv, 0)?.values());
            }
            grid.push(row);
        }
        let comps = self.n() + 1;
        let mut entries = Vec::with_capacity(comps);
        for c in 0..comps {
            let samples: Vec<Vec<C64>> = grid.iter().map(|row| row.iter().map(|y| y[c]).collect()).collect();
            let jet = jet_from_samples(&samples, self.h, self.h, order, self.accuracy)?;
            entries.push(compose2(&jet, u, v));
        }
        Ok(JetVector::new(entries))
    }
}

#[derive(Deserialize)]
struct SampledFile {
    n: usize,
    du: f64,
    dv: f64,
    values: Vec<Vec<Vec<f64>>>,
}

/// Chart backed by a sampled grid `values[i][j] = y(i·du, j·dv)`, evaluated
/// at grid nodes only via finite differences. A cross-validation oracle.
#[derive(Clone, Debug)]
pub struct SampledChart {
    n: usize,
    du: f64,
    dv: f64,
    values: Vec<Vec<Vec<f64>>>,
    accuracy: usize,
}

impl SampledChart {
    pub fn from_json(text: &str) -> Result<Self> {
        let f: SampledFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if f.n < 3 {
            return Err(Error::InvalidDimension(f.n));
        }
        if f.values.is_empty() || f.values.iter().any(|r| r.len() != f.values[0].len()) {
            return Err(Error::Parse("sample grid must be rectangular".into()));
        }
        if f.values.iter().flatten().any(|y| y.len() != f.n + 1) {
            return Err(Error::Parse(format!("each sample needs {} components", f.n + 1)));
        }
        if !(f.du > 0.0 && f.dv > 0.0) {
            return Err(Error::Parse("grid steps must be positive".into()));
        }
        Ok(Self {
            n: f.n,
            du: f.du,
            dv: f.dv,
            values: f.values,
            accuracy: 2,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn shape(&self) -> (usize, usize) {
        (self.values.len(), self.values[0].len())
    }
}

impl Chart for SampledChart {
    fn spec(&self) -> String {
        let (w, h) = self.shape();
        format!("sampled:n={},w={w},h={h}", self.n)
    }

    fn n(&self) -> usize {
        self.n
    }

    fn domain(&self) -> Domain {
        let (w, h) = self.shape();
        Domain::Box {
            u0: 0.0,
            u1: self.du * (w - 1) as f64,
            v0: 0.0,
            v1: self.dv * (h - 1) as f64,
        }
    }

    fn position_jets(&self, u: &Jet, v: &Jet) -> Result<JetVector> {
        let order = u.order().min(v.order());
        let (fi, fj) = (u.value().re / self.du, v.value().re / self.dv);
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-9 || (fj - j).abs() > 1e-9 || i < 0.0 || j < 0.0 {
            return Err(Error::Unsupported(format!(
                "sampled chart is only evaluable at grid nodes, got ({}, {})",
                u.value().re,
                v.value().re
            )));
        }
        let (i, j) = (i as usize, j as usize);
        let m = (0..=order)
            .map(|k| required_half_width(k, self.accuracy))
            .max()
            .unwrap_or(0);
        let (w, h) = self.shape();
        if i < m || j < m || i + m >= w || j + m >= h {
            return Err(Error::InsufficientStencil {
                required: 2 * m + 1,
                available: (2 * i.min(j).min(w - 1 - i).min(h - 1 - j) + 1),
            });
        }
        let mut entries = Vec::with_capacity(self.n + 1);
        for c in 0..=self.n {
            let samples: Vec<Vec<C64>> = (i - m..=i + m)
                .map(|a| (j - m..=j + m).map(|b| C64::new(self.values[a][b][c], 0.0)).collect())
                .collect();
            let jet = jet_from_samples(&samples, self.du, self.dv, order, self.accuracy)?;
            entries.push(compose2(&jet, u, v));
        }
        Ok(JetVector::new(entries))
    }
}

/// Names available in [`parse_surface`], with their parameters.
pub fn catalog_entries() -> Vec<(&'static str, &'static str)> {
    vec![
        ("clifford", "minimal Clifford torus in S^3"),
        ("product-torus:a=<a>", "flat product torus in S^3, 0 < a < 1 (Willmore only at a = 1/sqrt 2)"),
        ("great-sphere:n=<n>", "totally geodesic sphere in S^n, n >= 3"),
        ("veronese", "minimal Veronese sphere in S^4"),
        ("flat-torus-s5:a1=<a1>,a2=<a2>", "flat torus in S^5, minimal at a1 = a2 = 1/sqrt 3"),
    ]
}

/// The default instance of every catalog entry.
pub fn catalog_defaults() -> Vec<&'static str> {
    vec![
        "clifford",
        "product-torus:a=0.8",
        "great-sphere:n=3",
        "veronese",
        "flat-torus-s5:a1=0.5,a2=0.6",
        "flat-torus-s5:a1=0.5773502691896258,a2=0.5773502691896258",
    ]
}

fn parse_params(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    if text.is_empty() {
        return Ok(map);
    }
    for item in text.split(',') {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("`{v}` is not a decimal literal")))?;
        if map.insert(k.trim().to_string(), value).is_some() {
            return Err(Error::Parse(format!("duplicate key `{k}`")));
        }
    }
    Ok(map)
}

fn take(params: &mut BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.remove(key).or(default) {
        Some(v) => Ok(v),
        None => Err(Error::Parse(format!("missing parameter `{key}`"))),
    }
}

/// Parses a chart spec `name[:key=value[,key=value]*]`.
pub fn parse_surface(spec: &str) -> Result<SurfaceChart> {
    let spec = spec.trim();
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    if let Some(path) = name.strip_prefix("file=").or_else(|| spec.strip_prefix("sampled:file=")) {
        return Ok(Arc::new(SampledChart::from_file(Path::new(path))?));
    }
    let mut params = parse_params(rest)?;
    let chart: SurfaceChart = match name {
        "clifford" => Arc::new(Clifford),
        "product-torus" => Arc::new(ProductTorus::new(take(&mut params, "a", None)?)?),
        "great-sphere" => {
            let n = take(&mut params, "n", Some(3.0))?;
            if n.fract() != 0.0 || n < 0.0 {
                return Err(Error::Parse(format!("n must be an integer, got {n}")));
            }
            Arc::new(GreatSphere::new(n as usize)?)
        }
        "veronese" => Arc::new(Veronese),
        "flat-torus-s5" => {
            let a1 = take(&mut params, "a1", None)?;
            let a2 = take(&mut params, "a2", None)?;
            Arc::new(FlatTorusS5::new(a1, a2)?)
        }
        other => return Err(Error::UnknownSurface(other.to_string())),
    };
    if let Some(k) = params.keys().next() {
        return Err(Error::Parse(format!("unknown parameter `{k}` for `{name}`")));
    }
    Ok(chart)
}

/// Defects of the conformality conditions at a point:
/// `(|⟨Y₀_z, Y₀_z⟩| / ⟨Y₀_z, Y₀_z̄⟩, ⟨Y₀_z, Y₀_z̄⟩)` with `Y₀ = (1, y)`.
pub fn conformality(chart: &dyn Chart, u: f64, v: f64) -> Result<(f64, f64)> {
    let y = chart.position(u, v, 1)?;
    let yz = y.d_z()?;
    let zz = yz.entries().iter().map(|e| e.value() * e.value()).sum::<C64>();
    let zzb = yz.entries().iter().map(|e| e.value() * e.value().conj()).sum::<C64>().re;
    Ok((zz.norm() / zzb.max(f64::MIN_POSITIVE), zzb))
}
