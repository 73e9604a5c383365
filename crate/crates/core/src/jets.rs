//! Truncated bivariate Taylor series ("jets") in the real domain coordinates
//! `(u, v)`.
//!
//! A [`Jet`] of order `k` stores the partial derivatives `∂_u^i ∂_v^j f` at the
//! base point for all `i + j ≤ k`. Equivalently, coefficient `(i, j)` is the
//! coefficient of `uⁱvʲ/(i! j!)` in the Taylor polynomial. With this
//! normalization the product rule is the binomial Leibniz formula
//!
//! ```text
//! (fg)_{ij} = Σ_{a≤i, b≤j} C(i,a) C(j,b) f_{ab} g_{i−a, j−b}
//! ```
//!
//! and shifting the index by one is an exact partial derivative. Coefficients
//! are complex because Wirtinger derivatives `∂_z = ½(∂_u − i∂_v)` leave the
//! real numbers immediately.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use crate::minkowski::{ComplexLorentzVector, LorentzVector};
use crate::{Error, Result, C64};

/// Largest supported total order.
pub const MAX_ORDER: usize = 5;

/// Number of coefficients of a jet of order [`MAX_ORDER`].
pub const NCOEF: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

/// Leading values below this modulus are rejected by division and roots.
pub const MIN_PIVOT: f64 = 1e-14;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Position of multi-index `(i, j)` in the coefficient array (graded order).
pub const fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

fn number_of_coeffs(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for t in 0..k {
        r = r * (n - t) as f64 / (t + 1) as f64;
    }
    r
}

/// Product table entries `(out, a, b, weight)` sorted by output degree, with
/// `ends[d]` the number of entries whose output degree is at most `d`.
struct ProductTable {
    entries: Vec<(u8, u8, u8, f64)>,
    ends: [usize; MAX_ORDER + 1],
}

fn product_table() -> &'static ProductTable {
    static TABLE: OnceLock<ProductTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut entries = Vec::new();
        let mut ends = [0; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            for j in 0..=d {
                let i = d - j;
                for a in 0..=i {
                    for b in 0..=j {
                        let w = binom(i, a) * binom(j, b);
                        entries.push((index(i, j) as u8, index(a, b) as u8, index(i - a, j - b) as u8, w));
                    }
                }
            }
            ends[d] = entries.len();
        }
        ProductTable { entries, ends }
    })
}

/// A truncated Taylor expansion of a complex scalar in `(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: [C64; NCOEF],
}

impl Jet {
    fn check_order(order: usize) -> usize {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        order
    }

    pub fn zero(order: usize) -> Self {
        Self {
            order: Self::check_order(order),
            c: [ZERO; NCOEF],
        }
    }

    pub fn constant(x: C64, order: usize) -> Self {
        let mut j = Self::zero(order);
        j.c[0] = x;
        j
    }

    pub fn real(x: f64, order: usize) -> Self {
        Self::constant(C64::new(x, 0.0), order)
    }

    /// The coordinate function `u` about `u0`.
    pub fn var_u(u0: f64, order: usize) -> Self {
        let mut j = Self::real(u0, order);
        if order >= 1 {
            j.c[index(1, 0)] = C64::new(1.0, 0.0);
        }
        j
    }

    /// The coordinate function `v` about `v0`.
    pub fn var_v(v0: f64, order: usize) -> Self {
        let mut j = Self::real(v0, order);
        if order >= 1 {
            j.c[index(0, 1)] = C64::new(1.0, 0.0);
        }
        j
    }

    /// The holomorphic coordinate `z = u + iv` about `z0`.
    pub fn var_z(z0: C64, order: usize) -> Self {
        let mut j = Self::constant(z0, order);
        if order >= 1 {
            j.c[index(1, 0)] = C64::new(1.0, 0.0);
            j.c[index(0, 1)] = C64::new(0.0, 1.0);
        }
        j
    }

    /// Builds a jet from derivative values listed in graded order.
    pub fn from_coeffs(order: usize, coeffs: &[C64]) -> Result<Self> {
        let n = number_of_coeffs(Self::check_order(order));
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: coeffs.len(),
            });
        }
        let mut j = Self::zero(order);
        j.c[..n].copy_from_slice(coeffs);
        Ok(j)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    /// `∂_u^i ∂_v^j` at the base point; zero beyond the retained order.
    pub fn coeff(&self, i: usize, j: usize) -> C64 {
        if i + j > self.order {
            ZERO
        } else {
            self.c[index(i, j)]
        }
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, x: C64) {
        assert!(i + j <= self.order, "coefficient ({i},{j}) beyond order {}", self.order);
        self.c[index(i, j)] = x;
    }

    /// Coefficients in graded order.
    pub fn coeffs(&self) -> &[C64] {
        &self.c[..number_of_coeffs(self.order)]
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut j = Self::zero(order);
        j.c[..number_of_coeffs(order)].copy_from_slice(&self.c[..number_of_coeffs(order)]);
        j
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus among derivatives of order `≥ 1`.
    pub fn max_abs_nonconstant(&self) -> f64 {
        self.coeffs()[1..].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Complex conjugate of the represented function. Because `u, v` are real,
    /// this conjugates every coefficient.
    pub fn conj(&self) -> Self {
        let mut j = *self;
        for x in j.c.iter_mut() {
            *x = x.conj();
        }
        j
    }

    pub fn re(&self) -> Self {
        let mut j = *self;
        for x in j.c.iter_mut() {
            *x = C64::new(x.re, 0.0);
        }
        j
    }

    pub fn im(&self) -> Self {
        let mut j = *self;
        for x in j.c.iter_mut() {
            *x = C64::new(x.im, 0.0);
        }
        j
    }

    fn shifted(&self, di: usize, dj: usize) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::OrderZero);
        }
        let order = self.order - 1;
        let mut j = Self::zero(order);
        for d in 0..=order {
            for b in 0..=d {
                let a = d - b;
                j.c[index(a, b)] = self.c[index(a + di, b + dj)];
            }
        }
        Ok(j)
    }

    pub fn d_u(&self) -> Result<Self> {
        self.shifted(1, 0)
    }

    pub fn d_v(&self) -> Result<Self> {
        self.shifted(0, 1)
    }

    /// `∂_z = ½(∂_u − i∂_v)`; lowers the order by one.
    pub fn d_z(&self) -> Result<Self> {
        let (du, dv) = (self.d_u()?, self.d_v()?);
        Ok((du - dv * C64::i()) * 0.5)
    }

    /// `∂_z̄ = ½(∂_u + i∂_v)`; lowers the order by one.
    pub fn d_zbar(&self) -> Result<Self> {
        let (du, dv) = (self.d_u()?, self.d_v()?);
        Ok((du + dv * C64::i()) * 0.5)
    }

    /// Evaluates the Taylor polynomial at the offset `(du, dv)`.
    pub fn eval_offset(&self, du: f64, dv: f64) -> C64 {
        let mut fact = [1.0; MAX_ORDER + 1];
        for k in 1..=MAX_ORDER {
            fact[k] = fact[k - 1] * k as f64;
        }
        let mut acc = ZERO;
        for d in 0..=self.order {
            for j in 0..=d {
                let i = d - j;
                acc += self.c[index(i, j)] * (du.powi(i as i32) * dv.powi(j as i32) / (fact[i] * fact[j]));
            }
        }
        acc
    }

    /// `Σ_k t_k hᵏ` with `h = self − value`, where `t_k = f⁽ᵏ⁾(x₀)/k!` are the
    /// Taylor coefficients of a scalar function at the leading value.
    pub fn compose(&self, taylor: &[C64]) -> Self {
        let mut h = *self;
        h.c[0] = ZERO;
        let top = self.order.min(taylor.len().saturating_sub(1));
        let mut acc = Self::constant(taylor[top], self.order);
        for k in (0..top).rev() {
            acc = acc * h;
            acc.c[0] += taylor[k];
        }
        acc
    }

    fn leading_check(&self) -> Result<C64> {
        let x0 = self.value();
        if !(x0.norm() >= MIN_PIVOT) {
            return Err(Error::DivisionBySmall(x0.norm()));
        }
        Ok(x0)
    }

    pub fn recip(&self) -> Result<Self> {
        let x0 = self.leading_check()?;
        let r = x0.inv();
        let mut t = [ZERO; MAX_ORDER + 1];
        let mut p = r;
        for (k, tk) in t.iter_mut().enumerate() {
            *tk = if k % 2 == 0 { p } else { -p };
            p *= r;
        }
        Ok(self.compose(&t))
    }

    /// Series of `x^a` about a given branch value `x0^a`.
    fn pow_series(&self, x0: C64, x0_pow_a: C64, a: f64) -> Self {
        let mut t = [ZERO; MAX_ORDER + 1];
        let inv = x0.inv();
        let mut coef = 1.0;
        let mut p = x0_pow_a;
        for (k, tk) in t.iter_mut().enumerate() {
            *tk = p * coef;
            coef *= (a - k as f64) / (k + 1) as f64;
            p *= inv;
        }
        self.compose(&t)
    }

    fn real_positive_value(&self, what: &str) -> Result<f64> {
        let x0 = self.value();
        if x0.re <= MIN_PIVOT || x0.im.abs() > 1e-12 * (1.0 + x0.re.abs()) {
            return Err(Error::SqrtDomain(format!("{what} of leading value {x0}")));
        }
        Ok(x0.re)
    }

    /// Real-branch square root; the leading value must be real and positive.
    pub fn sqrt(&self) -> Result<Self> {
        let x = self.real_positive_value("sqrt")?;
        let x0 = C64::new(x, 0.0);
        Ok(self.pow_series(x0, C64::new(x.sqrt(), 0.0), 0.5))
    }

    /// Principal-branch complex square root; the leading value must be non-zero.
    pub fn csqrt(&self) -> Result<Self> {
        let x0 = self.leading_check().map_err(|_| Error::SqrtDomain(format!("csqrt of {}", self.value())))?;
        Ok(self.pow_series(x0, x0.sqrt(), 0.5))
    }

    /// `x^a`; non-integer `a` requires a real positive leading value.
    pub fn pow(&self, a: f64) -> Result<Self> {
        if a.fract() == 0.0 && a.abs() <= 64.0 {
            return self.powi(a as i32);
        }
        let x = self
            .real_positive_value("pow")
            .map_err(|_| Error::PowDomain {
                value: self.value().to_string(),
                exponent: a,
            })?;
        Ok(self.pow_series(C64::new(x, 0.0), C64::new(x.powf(a), 0.0), a))
    }

    pub fn powi(&self, k: i32) -> Result<Self> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut acc = Self::real(1.0, self.order);
        for _ in 0..k {
            acc = acc * *self;
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        let mut t = [ZERO; MAX_ORDER + 1];
        let mut f = 1.0;
        for (k, tk) in t.iter_mut().enumerate() {
            if k > 0 {
                f /= k as f64;
            }
            *tk = e * f;
        }
        self.compose(&t)
    }

    fn trig(&self, phase: usize) -> Self {
        let x0 = self.value();
        let cycle = [x0.sin(), x0.cos(), -x0.sin(), -x0.cos()];
        let mut t = [ZERO; MAX_ORDER + 1];
        let mut f = 1.0;
        for (k, tk) in t.iter_mut().enumerate() {
            if k > 0 {
                f /= k as f64;
            }
            *tk = cycle[(k + phase) % 4] * f;
        }
        self.compose(&t)
    }

    pub fn sin(&self) -> Self {
        self.trig(0)
    }

    pub fn cos(&self) -> Self {
        self.trig(1)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for k in 0..number_of_coeffs(order) {
            out.c[k] = self.c[k] + rhs.c[k];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for k in 0..number_of_coeffs(order) {
            out.c[k] = self.c[k] - rhs.c[k];
        }
        out
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for x in self.c.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let table = product_table();
        let mut out = Jet::zero(order);
        for &(o, a, b, w) in &table.entries[..table.ends[order]] {
            out.c[o as usize] += self.c[a as usize] * rhs.c[b as usize] * w;
        }
        out
    }
}

impl Mul<C64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: C64) -> Jet {
        for x in self.c.iter_mut() {
            *x *= rhs;
        }
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for x in self.c.iter_mut() {
            *x *= rhs;
        }
        self
    }
}

impl Add<C64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: C64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Div for Jet {
    type Output = Result<Jet>;
    fn div(self, rhs: Jet) -> Result<Jet> {
        Ok(self * rhs.recip()?)
    }
}

/// A vector of jets sharing one base point, typically a section of the
/// complexified Lorentz space.
#[derive(Clone, Debug, PartialEq)]
pub struct JetVector {
    entries: Vec<Jet>,
}

impl JetVector {
    pub fn new(entries: Vec<Jet>) -> Self {
        Self { entries }
    }

    pub fn zeros(dim: usize, order: usize) -> Self {
        Self {
            entries: vec![Jet::zero(order); dim],
        }
    }

    /// A constant section.
    pub fn constant(v: &[C64], order: usize) -> Self {
        Self {
            entries: v.iter().map(|&x| Jet::constant(x, order)).collect(),
        }
    }

    pub fn from_real(v: &LorentzVector, order: usize) -> Self {
        Self {
            entries: v.coords().iter().map(|&x| Jet::real(x, order)).collect(),
        }
    }

    pub fn from_complex(v: &ComplexLorentzVector, order: usize) -> Self {
        Self::constant(v.coords(), order)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Jet] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Jet] {
        &mut self.entries
    }

    pub fn order(&self) -> usize {
        self.entries.iter().map(Jet::order).min().unwrap_or(0)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }

    /// Jet of the bilinear Lorentz pairing.
    pub fn inner(&self, other: &Self) -> Result<Jet> {
        self.check(other)?;
        let mut acc = -(self.entries[0] * other.entries[0]);
        for (a, b) in self.entries[1..].iter().zip(&other.entries[1..]) {
            acc += *a * *b;
        }
        Ok(acc)
    }

    /// Pairing with a constant vector.
    pub fn inner_const(&self, v: &[C64]) -> Jet {
        let mut acc = self.entries[0] * (-v[0]);
        for (a, &b) in self.entries[1..].iter().zip(&v[1..]) {
            acc += *a * b;
        }
        acc
    }

    pub fn conj(&self) -> Self {
        self.map(|j| j.conj())
    }

    pub fn re(&self) -> Self {
        self.map(|j| j.re())
    }

    pub fn im(&self) -> Self {
        self.map(|j| j.im())
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        Self {
            entries: self.entries.iter().map(f).collect(),
        }
    }

    fn try_map(&self, f: impl Fn(&Jet) -> Result<Jet>) -> Result<Self> {
        Ok(Self {
            entries: self.entries.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn d_u(&self) -> Result<Self> {
        self.try_map(Jet::d_u)
    }

    pub fn d_v(&self) -> Result<Self> {
        self.try_map(Jet::d_v)
    }

    pub fn d_z(&self) -> Result<Self> {
        self.try_map(Jet::d_z)
    }

    pub fn d_zbar(&self) -> Result<Self> {
        self.try_map(Jet::d_zbar)
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|j| j.truncate(order))
    }

    pub fn scale(&self, f: &Jet) -> Self {
        self.map(|j| *j * *f)
    }

    pub fn scale_c(&self, c: C64) -> Self {
        self.map(|j| *j * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| *a - *b).collect(),
        }
    }

    /// `self + f·other`.
    pub fn add_scaled(&self, f: &Jet, other: &Self) -> Self {
        Self {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| *a + *b * *f).collect(),
        }
    }

    pub fn values(&self) -> Vec<C64> {
        self.entries.iter().map(Jet::value).collect()
    }

    pub fn value(&self) -> Result<ComplexLorentzVector> {
        ComplexLorentzVector::new(self.values())
    }

    /// Real part of the leading value.
    pub fn real_value(&self) -> Result<LorentzVector> {
        LorentzVector::new(self.entries.iter().map(|j| j.value().re).collect())
    }

    /// Vector of `∂_u^i ∂_v^j` coefficients.
    pub fn coeff(&self, i: usize, j: usize) -> Vec<C64> {
        self.entries.iter().map(|e| e.coeff(i, j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(Jet::max_abs).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(Jet::is_finite)
    }
}

/// Finite-difference weights (Fornberg's recursion) for derivatives up to
/// `max_deriv` at `x0` from samples at `xs`. Returns `w[k][j]`.
pub fn fornberg_weights(x0: f64, xs: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil half-width needed for a central difference of derivative `k` with
/// even accuracy order `p`.
pub fn required_half_width(k: usize, p: usize) -> usize {
    if k == 0 {
        0
    } else {
        (k + 1) / 2 - 1 + p / 2
    }
}

/// Central-difference weights on offsets `−m..=m` (in units of the step)
/// for derivative `k`, padded with zeros to width `2·width + 1`.
fn central_weights(k: usize, p: usize, width: usize, h: f64) -> Vec<f64> {
    let m = required_half_width(k, p);
    let xs: Vec<f64> = (-(m as i64)..=m as i64).map(|t| t as f64).collect();
    let w = fornberg_weights(0.0, &xs, k);
    let mut out = vec![0.0; 2 * width + 1];
    let scale = h.powi(k as i32);
    for (t, wt) in w[k].iter().enumerate() {
        out[width - m + t] = wt / scale;
    }
    out
}

/// Estimates a jet by tensor-product central finite differences.
///
/// `samples[a][b]` holds `f(u₀ + (a − m)h_u, v₀ + (b − m)h_v)` on a square
/// `(2m+1)×(2m+1)` stencil. Every derivative is approximated to accuracy
/// `O(h^p)` for even `p ≥ 2`; `p = 2` gives the usual `O(h²)` estimates.
pub fn jet_from_samples(samples: &[Vec<C64>], hu: f64, hv: f64, order: usize, p: usize) -> Result<Jet> {
    let width = samples.len();
    if width % 2 == 0 || samples.iter().any(|row| row.len() != width) {
        return Err(Error::Unsupported("stencil must be square with odd side".into()));
    }
    if p < 2 || p % 2 == 1 {
        return Err(Error::Unsupported(format!("accuracy order {p} must be even and ≥ 2")));
    }
    let m = width / 2;
    let need = (0..=order).map(|k| required_half_width(k, p)).max().unwrap_or(0);
    if need > m {
        return Err(Error::InsufficientStencil {
            required: 2 * need + 1,
            available: width,
        });
    }
    let wu: Vec<Vec<f64>> = (0..=order).map(|k| central_weights(k, p, m, hu)).collect();
    let wv: Vec<Vec<f64>> = (0..=order).map(|k| central_weights(k, p, m, hv)).collect();
    let mut jet = Jet::zero(order);
    for d in 0..=order {
        for j in 0..=d {
            let i = d - j;
            let mut acc = ZERO;
            for (a, row) in samples.iter().enumerate() {
                if wu[i][a] == 0.0 {
                    continue;
                }
                let mut inner = ZERO;
                for (b, f) in row.iter().enumerate() {
                    inner += f * wv[j][b];
                }
                acc += inner * wu[i][a];
            }
            jet.set_coeff(i, j, acc);
        }
    }
    Ok(jet)
}

/// Samples `f` on the stencil needed for `(order, p)` and estimates its jet.
pub fn jet_from_fn(
    f: impl Fn(f64, f64) -> Result<C64>,
    u0: f64,
    v0: f64,
    h: f64,
    order: usize,
    p: usize,
) -> Result<Jet> {
    let m = (0..=order).map(|k| required_half_width(k, p)).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(2 * m + 1);
    for a in 0..=2 * m {
        let u = u0 + (a as f64 - m as f64) * h;
        let row = (0..=2 * m)
            .map(|b| f(u, v0 + (b as f64 - m as f64) * h))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    jet_from_samples(&rows, h, h, order, p)
}
