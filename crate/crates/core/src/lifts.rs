//! L-lifts `Z = span{Y, Ŷ}` of a surface and the Riccati equation for `μ`.
//!
//! Given a complex function `μ`, the section
//! `Ŷ = N + μ̄Y_z + μY_z̄ + ½|μ|²Y` satisfies `⟨Ŷ, Ŷ⟩ = 0`, `⟨Ŷ, Y⟩ = −1`, and
//!
//! ```text
//! Ŷ_z = ½μŶ + θ(Y_z̄ + ½μ̄Y) + ρ(Y_z + ½μY) + L,
//! θ = μ_z − ½μ² − s,   ρ = μ̄_z − 2⟨κ, κ̄⟩,   L = 2D_z̄κ + μ̄κ.
//! ```
//!
//! The lift is conformal exactly when `θ = 0`, the Riccati equation.

use std::fmt;
use std::sync::Arc;

use crate::invariants::{InvariantData, InvariantOptions};
use crate::jets::{Jet, JetVector};
use crate::minkowski::wedge_inner;
use crate::surfaces::{Chart, CoordinateChange};
use crate::{Error, Result, C64};

/// Default modulus at which a Riccati solution is declared to have reached a pole.
pub const BLOW_UP_BOUND: f64 = 1e6;

/// Regularizer of the parallelism test for S-Willmore surfaces.
pub const PARALLEL_EPS: f64 = 1e-14;

/// A closed-form μ written against a jet of `z`.
pub type MuFn = Arc<dyn Fn(&Jet) -> Result<Jet> + Send + Sync>;

/// The complex function `μ` defining an L-lift.
#[derive(Clone)]
pub enum MuField {
    Zero,
    Constant(C64),
    /// `μ = −2/(z − c)`, a Riccati solution for `s = 0`.
    Pole { c: C64 },
    /// `μ = −2z̄/(1 + |z|²)`, a non-holomorphic Riccati solution for `s = 0`
    /// in stereographic coordinates.
    StereoDual,
    /// Holomorphic Taylor data `m_k = μ⁽ᵏ⁾(z₀)` valid at `z₀` only.
    Series { z0: C64, m: Vec<C64> },
    /// μ of an inner field expressed in the coordinate `w(z)`.
    Transformed { inner: Box<MuField>, change: CoordinateChange },
    /// User supplied closed form.
    Closed { name: String, f: MuFn },
}

impl fmt::Debug for MuField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MuField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuField::Zero => write!(f, "zero"),
            MuField::Constant(c) => write!(f, "constant:{}", fmt_complex(*c)),
            MuField::Pole { c } => write!(f, "meromorphic:{}", fmt_complex(*c)),
            MuField::StereoDual => write!(f, "stereo-dual"),
            MuField::Series { z0, .. } => write!(f, "series@{z0}"),
            MuField::Transformed { inner, change } => write!(f, "{inner}|{change}"),
            MuField::Closed { name, .. } => write!(f, "{name}"),
        }
    }
}

/// `a+bi` with shortest round-trip parts and no negative zeros.
pub fn fmt_complex(z: C64) -> String {
    let clean = |x: f64| if x == 0.0 { 0.0 } else { x };
    let (re, im) = (clean(z.re), clean(z.im));
    if im < 0.0 { format!("{re}{im}i") } else { format!("{re}+{im}i") }
}

impl MuField {
    /// Jet of μ for a jet-valued coordinate `z`.
    pub fn eval(&self, z: &Jet) -> Result<Jet> {
        let order = z.order();
        match self {
            MuField::Zero => Ok(Jet::zero(order)),
            MuField::Constant(c) => Ok(Jet::constant(*c, order)),
            MuField::Pole { c } => {
                let d = *z + (-*c);
                if d.value().norm() < 1.0 / BLOW_UP_BOUND {
                    let z0 = z.value();
                    return Err(Error::RiccatiBlowUp {
                        re: z0.re,
                        im: z0.im,
                        modulus: f64::INFINITY,
                    });
                }
                Ok(d.recip()? * (-2.0))
            }
            MuField::StereoDual => {
                let zb = z.conj();
                Ok((zb * (-2.0) / (*z * zb + 1.0))?)
            }
            MuField::Series { z0, m } => {
                if (z.value() - z0).norm() > 1e-12 * (1.0 + z0.norm()) {
                    return Err(Error::Unsupported(format!("series for μ is anchored at {z0}, not {}", z.value())));
                }
                let mut t = Vec::with_capacity(m.len());
                let mut f = 1.0;
                for (k, mk) in m.iter().enumerate() {
                    if k > 0 {
                        f /= k as f64;
                    }
                    t.push(mk * f);
                }
                Ok(z.compose(&t))
            }
            MuField::Transformed { inner, change } => {
                let zi = change.inverse(z)?;
                change.check_regular(zi.value())?;
                let mu = inner.eval(&zi)?;
                let (w1, w2) = change.derivative_jets(&zi)?;
                let q = (w2 / w1)?;
                (mu - q) / w1
            }
            MuField::Closed { f, .. } => f(z),
        }
    }

    /// Jet of μ at the domain point `(u, v)`.
    pub fn jet_at(&self, u: f64, v: f64, order: usize) -> Result<Jet> {
        self.eval(&Jet::var_z(C64::new(u, v), order))
    }

    /// Holomorphic Taylor data at `z0` from `μ(z0)` and the derivatives
    /// `s_k = s⁽ᵏ⁾(z0)`, by `m_{k+1} = ½ Σ_j C(k,j) m_j m_{k−j} + s_k`.
    pub fn series(z0: C64, mu0: C64, s_derivs: &[C64]) -> Self {
        let mut m = vec![mu0];
        for k in 0..s_derivs.len() {
            let mut acc = C64::new(0.0, 0.0);
            let mut binom = 1.0;
            for j in 0..=k {
                acc += m[j] * m[k - j] * binom;
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            m.push(0.5 * acc + s_derivs[k]);
        }
        MuField::Series { z0, m }
    }
}

/// Both constant solutions `μ = ±√(−2s)` of the Riccati equation; the
/// principal branch comes first.
pub fn riccati_constant(s: &Jet, tol: f64) -> Result<[C64; 2]> {
    let var = s.max_abs_nonconstant();
    if var > tol {
        return Err(Error::NonConstantSchwarzian(var));
    }
    let r = (-2.0 * s.value()).sqrt();
    Ok([r, -r])
}

/// Step control for [`riccati_holomorphic`].
#[derive(Clone, Copy, Debug)]
pub struct RiccatiOptions {
    /// Local error target per unit path length, relative to `1 + |μ|`.
    pub tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub blow_up: f64,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            initial_step: 1e-2,
            min_step: 1e-12,
            blow_up: BLOW_UP_BOUND,
        }
    }
}

/// Integrates `μ′ = ½μ² + s(z)` along the polyline `path`, starting from
/// `μ(path[0]) = mu0`, and returns μ at every node.
///
/// Each segment `z(t) = a + t(b − a)` is integrated with classical RK4 on a
/// relative step size `h ∈ (0, 1]`. Step doubling estimates the local error
/// as `|μ_{h/2,h/2} − μ_h|/15`; accepted steps use the Richardson-extrapolated
/// value, and the step grows by at most 2× or shrinks by at least 2× based on
/// the fifth-order error model.
pub fn riccati_holomorphic(
    s: &dyn Fn(C64) -> Result<C64>,
    mu0: C64,
    path: &[C64],
    opts: &RiccatiOptions,
) -> Result<Vec<C64>> {
    if path.is_empty() {
        return Ok(vec![]);
    }
    let mut out = vec![mu0];
    let mut mu = mu0;
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let dz = b - a;
        let len = dz.norm();
        if len == 0.0 {
            out.push(mu);
            continue;
        }
        let rhs = |t: f64, m: C64| -> Result<C64> { Ok((0.5 * m * m + s(a + dz * t)?) * dz) };
        let step = |t: f64, m: C64, h: f64| -> Result<C64> {
            let k1 = rhs(t, m)?;
            let k2 = rhs(t + 0.5 * h, m + k1 * (0.5 * h))?;
            let k3 = rhs(t + 0.5 * h, m + k2 * (0.5 * h))?;
            let k4 = rhs(t + h, m + k3 * h)?;
            Ok(m + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0))
        };
        let mut t = 0.0;
        let mut h = (opts.initial_step / len).min(1.0);
        while t < 1.0 {
            h = h.min(1.0 - t);
            if h * len < opts.min_step {
                return Err(Error::StepUnderflow(h * len));
            }
            let full = step(t, mu, h)?;
            let half = step(t, mu, 0.5 * h)?;
            let two = step(t + 0.5 * h, half, 0.5 * h)?;
            let err = (two - full).norm() / 15.0;
            let allowed = opts.tol * h * len * (1.0 + two.norm());
            if err.is_finite() && err <= allowed {
                t += h;
                mu = two + (two - full) / 15.0;
                if !(mu.norm() < opts.blow_up) {
                    let z = a + dz * t;
                    return Err(Error::RiccatiBlowUp {
                        re: z.re,
                        im: z.im,
                        modulus: mu.norm(),
                    });
                }
                let grow = if err == 0.0 { 2.0 } else { (0.9 * (allowed / err).powf(0.2)).clamp(0.5, 2.0) };
                h *= grow;
            } else {
                let z = a + dz * t;
                if !full.is_finite() || full.norm() > opts.blow_up {
                    if h * len < 1e3 * opts.min_step {
                        return Err(Error::RiccatiBlowUp {
                            re: z.re,
                            im: z.im,
                            modulus: full.norm(),
                        });
                    }
                }
                let shrink = if err.is_finite() { (0.9 * (allowed / err).powf(0.2)).clamp(0.1, 0.5) } else { 0.1 };
                h *= shrink;
            }
        }
        out.push(mu);
    }
    Ok(out)
}

/// The Schwarzian of a chart as a function of `z = u + iv`, rejecting points
/// where `∂_z̄ s` exceeds `tol`.
pub fn holomorphic_schwarzian(chart: &dyn Chart, tol: f64) -> impl Fn(C64) -> Result<C64> + '_ {
    move |z: C64| {
        let mut opts = InvariantOptions::scalars_only();
        opts.order = 4;
        let d = InvariantData::compute(chart, z.re, z.im, &opts)?;
        let dzb = d.s.d_zbar()?.value().norm();
        if dzb > tol {
            return Err(Error::NonHolomorphicSchwarzian(dzb));
        }
        Ok(d.s.value())
    }
}

/// Riccati solutions along a path, each converted to a μ field anchored at its node.
pub fn riccati_along_path(chart: &dyn Chart, mu0: C64, path: &[C64], opts: &RiccatiOptions) -> Result<Vec<MuField>> {
    let s = holomorphic_schwarzian(chart, 1e-8);
    let mus = riccati_holomorphic(&s, mu0, path, opts)?;
    path.iter()
        .zip(mus)
        .map(|(&z, mu)| {
            let d = InvariantData::compute(chart, z.re, z.im, &InvariantOptions::scalars_only().with_order(5))?;
            let derivs: Vec<C64> = (0..=d.s.order()).map(|k| d.s.coeff(k, 0)).collect();
            Ok(MuField::series(z, mu, &derivs))
        })
        .collect()
}

/// `Ŷ = N + μ̄Y_z + μY_z̄ + ½|μ|²Y`.
pub fn hat_lift(inv: &InvariantData, mu: &Jet) -> JetVector {
    let mb = mu.conj();
    let half_abs2 = *mu * mb * 0.5;
    inv.n_sec.add_scaled(&mb, &inv.y_z).add_scaled(mu, &inv.y_zbar).add_scaled(&half_abs2, &inv.y).re()
}

/// The L-lift determined by μ at a point.
#[derive(Clone, Debug)]
pub struct LLiftData {
    pub mu: Jet,
    pub yhat: JetVector,
    pub yhat_z: JetVector,
    /// `μ_z − ½μ² − s`.
    pub theta: Jet,
    /// `2⟨Y∧Y_z, Ŷ_z∧Ŷ⟩`.
    pub theta_wedge: C64,
    /// `μ̄_z − 2⟨κ, κ̄⟩`.
    pub rho: Jet,
    /// `2⟨Y∧Y_z̄, Ŷ_z∧Ŷ⟩`.
    pub rho_wedge: C64,
    /// `L = 2D_z̄κ + μ̄κ`.
    pub l: JetVector,
    /// `⟨L, L⟩`.
    pub l_square: Jet,
}

impl LLiftData {
    pub fn compute(inv: &InvariantData, field: &MuField) -> Result<Self> {
        let order = inv.n_sec.order();
        let mu = field.jet_at(inv.u, inv.v, order)?;
        Self::from_mu(inv, mu)
    }

    pub fn from_mu(inv: &InvariantData, mu: Jet) -> Result<Self> {
        let yhat = hat_lift(inv, &mu);
        let yhat_z = yhat.d_z()?;
        let theta = mu.d_z()? - mu * mu * 0.5 - inv.s;
        let rho = mu.conj().d_z()? - inv.kappa_norm2 * 2.0;
        let (y, yz, yzb) = (inv.y.value()?, inv.y_z.value()?, inv.y_zbar.value()?);
        let (yh, yhz) = (yhat.value()?, yhat_z.value()?);
        let theta_wedge = wedge_inner(&y, &yz, &yhz, &yh)? * 2.0;
        let rho_wedge = wedge_inner(&y, &yzb, &yhz, &yh)? * 2.0;
        let dk = inv.dzbar_kappa()?;
        let l = dk.scale_c(C64::new(2.0, 0.0)).add_scaled(&mu.conj(), &inv.kappa);
        let l_square = l.inner(&l)?;
        Ok(Self {
            mu,
            yhat,
            yhat_z,
            theta,
            theta_wedge,
            rho,
            rho_wedge,
            l,
            l_square,
        })
    }

    /// Residual of the expansion `Ŷ_z = ½μŶ + θ(Y_z̄ + ½μ̄Y) + ρ(Y_z + ½μY) + L`.
    pub fn expansion_defect(&self, inv: &InvariantData) -> Result<f64> {
        let c = |x: C64| Jet::constant(x, 0);
        let mu = self.mu.value();
        let (th, rh) = (self.theta.value(), self.rho.value());
        let rhs = self
            .yhat
            .truncate(0)
            .scale(&c(0.5 * mu))
            .add(&inv.y_zbar.truncate(0).add_scaled(&c(0.5 * mu.conj()), &inv.y.truncate(0)).scale(&c(th)))
            .add(&inv.y_z.truncate(0).add_scaled(&c(0.5 * mu), &inv.y.truncate(0)).scale(&c(rh)))
            .add(&self.l.truncate(0));
        Ok(self.yhat_z.truncate(0).sub(&rhs).max_abs())
    }

    /// Conformal factor `2 Re ρ` of the metric of `Z` when `θ = 0`.
    pub fn conformal_factor(&self) -> f64 {
        2.0 * self.rho.value().re
    }

    /// `2D_z̄L − μ̄L − 2(2D_z̄D_z̄κ + s̄κ)`, which vanishes whenever `θ = 0`.
    pub fn willmore_identity_defect(&self, inv: &InvariantData) -> Result<f64> {
        let lhs = self.l_equation(inv)?;
        let w = inv.willmore_residual_jet()?.scale_c(C64::new(4.0, 0.0));
        Ok(lhs.sub(&w).max_abs())
    }

    /// `2D_z̄L − μ̄L` at the point.
    pub fn l_equation(&self, inv: &InvariantData) -> Result<JetVector> {
        let dl = inv.normal_dzbar(&self.l)?.scale_c(C64::new(2.0, 0.0));
        Ok(dl.add_scaled(&(-self.mu.conj()), &self.l).truncate(0))
    }

    /// `ρ_z̄ − μ̄ρ − 2⟨L, κ̄⟩`, zero on Willmore surfaces with `θ = 0`.
    pub fn rho_identity_defect(&self, inv: &InvariantData) -> Result<C64> {
        let lk = self.l.inner(&inv.kappa.conj())?;
        Ok(self.rho.d_zbar()?.value() - self.mu.value().conj() * self.rho.value() - 2.0 * lk.value())
    }

    /// Speed of the projectivized dual `ŷ = spatial(Ŷ)/time(Ŷ)`.
    pub fn dual_speed(&self) -> Result<f64> {
        let e = self.yhat.entries();
        let inv_t = e[0].re().recip()?;
        let mut acc: f64 = 0.0;
        for x in &e[1..] {
            let q = x.re() * inv_t;
            acc = acc.max(q.d_u()?.value().norm()).max(q.d_v()?.value().norm());
        }
        Ok(acc)
    }
}

/// One root `μ̄` of the isotropy quadratic.
#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicCandidate {
    pub mu_bar: C64,
    pub multiplicity: usize,
    /// Riccati residual θ of `μ = conj(root)`.
    pub theta: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicCandidates {
    pub roots: Vec<IsotropicCandidate>,
    pub warning: Option<String>,
}

/// Solves `⟨L, L⟩ = 0` for `μ̄` pointwise:
/// `μ̄²⟨κ,κ⟩ + 4μ̄⟨D_z̄κ,κ⟩ + 4⟨D_z̄κ,D_z̄κ⟩ = 0`.
///
/// Roots are computed as jets so that θ can be evaluated for each of them.
pub fn isotropic_mu_candidates(inv: &InvariantData) -> Result<IsotropicCandidates> {
    let dk = inv.dzbar_kappa()?;
    let k = inv.kappa.truncate(dk.order());
    let a = k.inner(&k)?;
    let b = dk.inner(&k)? * 4.0;
    let c = dk.inner(&dk)? * 4.0;
    let scale = inv.kappa_norm2.value().re.abs() + 4.0 * dk.values().iter().map(|x| x.norm_sqr()).sum::<f64>() + 1e-300;
    let tol = 1e-10 * scale + 1e-24;
    let theta_of = |mu_bar: &Jet| -> Result<C64> {
        let mu = mu_bar.conj();
        Ok((mu.d_z()? - mu * mu * 0.5 - inv.s.truncate(mu.order())).value())
    };
    let single = |mu_bar: Jet, multiplicity: usize| -> Result<IsotropicCandidate> {
        let theta = if mu_bar.order() >= 1 { theta_of(&mu_bar)? } else { C64::new(f64::NAN, f64::NAN) };
        Ok(IsotropicCandidate {
            mu_bar: mu_bar.value(),
            multiplicity,
            theta,
        })
    };
    if a.value().norm() <= tol {
        if b.value().norm() <= tol {
            let warning = if c.value().norm() <= tol {
                "vacuous isotropy equation: every μ gives ⟨L,L⟩ = 0"
            } else {
                "degenerate isotropy equation without solutions"
            };
            return Ok(IsotropicCandidates {
                roots: vec![],
                warning: Some(warning.into()),
            });
        }
        let root = (-c / b)?;
        return Ok(IsotropicCandidates {
            roots: vec![single(root, 1)?],
            warning: Some("degenerate isotropy equation: ⟨κ,κ⟩ = 0, linear in μ̄".into()),
        });
    }
    let disc = b * b - a * c * 4.0;
    let two_a = a * 2.0;
    if disc.value().norm() <= 1e-10 * (b.value().norm_sqr() + (a.value() * c.value()).norm() + 1e-300) {
        let root = (-b / two_a)?;
        return Ok(IsotropicCandidates {
            roots: vec![single(root, 2)?],
            warning: None,
        });
    }
    let r = disc.csqrt()?;
    let r1 = ((-b + r) / two_a)?;
    let r2 = ((-b - r) / two_a)?;
    Ok(IsotropicCandidates {
        roots: vec![single(r1, 1)?, single(r2, 1)?],
        warning: None,
    })
}

/// Pointwise classification flags with the quantities behind them.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub willmore: bool,
    pub s_willmore: bool,
    pub isotropic: bool,
    pub s_isotropic: bool,
    pub conformal_lift: bool,
    pub willmore_residual: f64,
    pub parallel_defect: f64,
    pub l_square: f64,
    pub l_norm: f64,
    pub theta: f64,
}

/// Classifies the surface and lift at a point with a common tolerance.
pub fn classify(inv: &InvariantData, lift: &LLiftData, tol: f64) -> Result<Classification> {
    let willmore_residual = inv.willmore_residual_norm()?;
    let parallel_defect = parallel_defect(inv)?;
    let l_square = lift.l_square.value().norm();
    let l_norm = lift.l.value()?.hermitian_norm2().max(0.0).sqrt();
    let theta = lift.theta.value().norm();
    let willmore = willmore_residual < tol;
    Ok(Classification {
        willmore,
        s_willmore: willmore && parallel_defect < tol,
        isotropic: l_square < tol,
        s_isotropic: l_norm < tol,
        conformal_lift: theta < tol,
        willmore_residual,
        parallel_defect,
        l_square,
        l_norm,
        theta,
    })
}

/// `‖D_z̄κ ∧ κ‖ / (‖D_z̄κ‖‖κ‖ + ε)` with the Hermitian Gram determinant as the
/// squared wedge norm.
pub fn parallel_defect(inv: &InvariantData) -> Result<f64> {
    let a = inv.dzbar_kappa()?.value()?;
    let b = inv.kappa.value()?;
    let aa = a.hermitian_norm2();
    let bb = b.hermitian_norm2();
    let ab = a.inner(&b.conj())?;
    let wedge = (aa * bb - ab.norm_sqr()).max(0.0).sqrt();
    Ok(wedge / (aa.max(0.0).sqrt() * bb.max(0.0).sqrt() + PARALLEL_EPS))
}
