//! Canonical lift and the second-order Möbius invariants of a conformal chart.
//!
//! With `Y₀ = (1, y)` and `g = ⟨Y₀_z, Y₀_z̄⟩`, the canonical lift is
//! `Y = (2g)^{-1/2} Y₀`, so that `⟨Y_z, Y_z̄⟩ = ½`. It satisfies Hill's equation
//! `Y_zz + ½sY = κ` with `κ ⊥ V = span{Y, Re Y_z, Im Y_z, Y_zz̄}`.
//!
//! Extraction of `s`: differentiating `⟨Y_z, Y_z⟩ = 0` gives `⟨Y_zz, Y_z⟩ = 0`,
//! and differentiating `⟨Y, Y_z̄⟩ = 0` in `z` gives `⟨Y, Y_zz̄⟩ = −½`. Pairing
//! Hill's equation with `Y_zz̄` and using `⟨κ, Y_zz̄⟩ = 0` yields
//! `⟨Y_zz, Y_zz̄⟩ − s/4 = 0`, i.e. `s = 4⟨Y_zz, Y_zz̄⟩`.
//!
//! All quantities are carried as jets. A position jet of order `k` gives a lift
//! of order `k − 1`; the Willmore residual `D_z̄D_z̄κ + ½s̄κ` needs four
//! derivatives of `Y`, hence the default position order [`MAX_ORDER`].

use rayon::prelude::*;

use crate::jets::{Jet, JetVector, MAX_ORDER};
use crate::minkowski::{gram_schmidt_lorentz, orthonormal_complement, ComplexLorentzVector, LorentzVector, OrthonormalSet, RANK_TOL};
use crate::surfaces::{Chart, CoordinateChange, Domain};
use crate::{Error, Result, C64};

/// Relative defect `|⟨Y₀_z, Y₀_z⟩| / ⟨Y₀_z, Y₀_z̄⟩` above which a chart is rejected.
pub const CONFORMAL_TOL: f64 = 1e-8;

/// Seeds whose normal projection falls below this length are rejected.
const SEED_CONDITION: f64 = 1e-3;

/// Evaluation controls for [`InvariantData::compute`].
#[derive(Clone, Debug)]
pub struct InvariantOptions {
    /// Order of the position jet.
    pub order: usize,
    /// Constant vectors projected onto `V^⊥` and orthonormalized to give `ψ`.
    /// Without seeds the orthonormal complement of `V` at the point is used.
    pub seeds: Option<Vec<LorentzVector>>,
    /// Skip the normal frame (enough for `s`, `κ` and the energy density).
    pub skip_normal_frame: bool,
    /// Conformality defect accepted by the canonical lift.
    pub conformal_tol: f64,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        Self {
            order: MAX_ORDER,
            seeds: None,
            skip_normal_frame: false,
            conformal_tol: CONFORMAL_TOL,
        }
    }
}

impl InvariantOptions {
    pub fn with_seeds(seeds: Vec<LorentzVector>) -> Self {
        Self {
            seeds: Some(seeds),
            ..Self::default()
        }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    /// Low-order evaluation sufficient for `s`, `κ` and `⟨κ, κ̄⟩`.
    pub fn scalars_only() -> Self {
        Self {
            order: 3,
            seeds: None,
            skip_normal_frame: true,
            conformal_tol: CONFORMAL_TOL,
        }
    }

    /// Relaxed conformality check, for finite-difference oracle charts.
    pub fn with_conformal_tol(mut self, tol: f64) -> Self {
        self.conformal_tol = tol;
        self
    }
}

/// Canonical lift `Y` at `(u, v)` from a position jet of order `order`.
pub fn canonical_lift(chart: &dyn Chart, u: f64, v: f64, order: usize) -> Result<JetVector> {
    let y = chart.position(u, v, order)?;
    lift_from_position(&y, u, v, CONFORMAL_TOL)
}

fn lift_from_position(y: &JetVector, u: f64, v: f64, tol: f64) -> Result<JetVector> {
    let order = y.order();
    let mut e = Vec::with_capacity(y.dim() + 1);
    e.push(Jet::real(1.0, order));
    e.extend_from_slice(y.entries());
    let y0 = JetVector::new(e);
    let y0z = y0.d_z()?;
    let g = y0z.inner(&y0z.conj())?;
    let metric = g.value().re;
    if !(metric > 1e-12) {
        return Err(Error::DegenerateMetric { u, v, metric });
    }
    let defect = y0z.inner(&y0z)?.value().norm() / metric;
    if defect > tol {
        return Err(Error::NonConformal { u, v, defect });
    }
    let phi = (g.re() * 2.0).pow(-0.5)?;
    Ok(y0.scale(&phi))
}

fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Pointwise invariant data, all fields jet valued at the base point.
#[derive(Clone, Debug)]
pub struct InvariantData {
    pub u: f64,
    pub v: f64,
    pub n: usize,
    /// Canonical lift.
    pub y: JetVector,
    pub y_z: JetVector,
    pub y_zbar: JetVector,
    pub y_zz: JetVector,
    pub y_zzbar: JetVector,
    /// Schwarzian `s = 4⟨Y_zz, Y_zz̄⟩`.
    pub s: Jet,
    /// Hopf differential `κ = Y_zz + ½sY`.
    pub kappa: JetVector,
    /// `⟨κ, κ̄⟩`.
    pub kappa_norm2: Jet,
    /// `N = 2Y_zz̄ + 2⟨κ, κ̄⟩Y`.
    pub n_sec: JetVector,
    /// Orthonormalized `{Y, Re Y_z, Im Y_z, Y_zz̄}` at the point.
    pub v_basis: OrthonormalSet,
    /// Orthonormal frame of `V^⊥` as jets; empty when skipped.
    pub psi: Vec<JetVector>,
    pub umbilic: bool,
    normal_tol: f64,
}

impl InvariantData {
    pub fn compute(chart: &dyn Chart, u: f64, v: f64, opts: &InvariantOptions) -> Result<Self> {
        let pos = chart.position(u, v, opts.order)?;
        Self::from_position(&pos, chart.n(), u, v, opts)
    }

    /// Builds the data from a Euclidean position jet `y` with `n + 1` entries.
    pub fn from_position(pos: &JetVector, n: usize, u: f64, v: f64, opts: &InvariantOptions) -> Result<Self> {
        let y = lift_from_position(pos, u, v, opts.conformal_tol)?;
        let y_z = y.d_z()?;
        let y_zbar = y.d_zbar()?;
        let y_zz = y_z.d_z()?;
        let y_zzbar = y_z.d_zbar()?;
        let s = y_zz.inner(&y_zzbar)? * 4.0;
        let kappa = y_zz.add_scaled(&(s * 0.5), &y);
        let kappa_norm2 = kappa.inner(&kappa.conj())?;
        let n_sec = y_zzbar.scale_c(C64::new(2.0, 0.0)).add_scaled(&(kappa_norm2 * 2.0), &y);
        let basis_vectors = [
            y.real_value()?,
            y_z.re().real_value()?,
            y_z.im().real_value()?,
            y_zzbar.re().real_value()?,
        ];
        let v_basis = gram_schmidt_lorentz(&basis_vectors, RANK_TOL)?;
        let kv = kappa.values();
        let umbilic = vector_norm(&kv) < 1e-8 * (1.0 + vector_norm(&y_zz.values()));
        let mut data = Self {
            u,
            v,
            n,
            y,
            y_z,
            y_zbar,
            y_zz,
            y_zzbar,
            s,
            kappa,
            kappa_norm2,
            n_sec,
            v_basis,
            psi: Vec::new(),
            umbilic,
            normal_tol: (opts.conformal_tol * 10.0).max(1e-8),
        };
        if !opts.skip_normal_frame {
            let seeds = match &opts.seeds {
                Some(s) => s.clone(),
                None => orthonormal_complement(&data.v_basis, n + 2)?.vectors,
            };
            data.psi = data.normal_frame(&seeds)?;
        }
        Ok(data)
    }

    pub fn dim(&self) -> usize {
        self.n + 2
    }

    /// Orthogonal projection onto `V`:
    /// `P(x) = −⟨x,N⟩Y − ⟨x,Y⟩N + 2⟨x,Y_z̄⟩Y_z + 2⟨x,Y_z⟩Y_z̄`.
    pub fn project_v(&self, x: &JetVector) -> Result<JetVector> {
        let a = -x.inner(&self.n_sec)?;
        let b = -x.inner(&self.y)?;
        let c = x.inner(&self.y_zbar)? * 2.0;
        let d = x.inner(&self.y_z)? * 2.0;
        Ok(self.y.scale(&a).add_scaled(&b, &self.n_sec).add_scaled(&c, &self.y_z).add_scaled(&d, &self.y_zbar))
    }

    pub fn project_normal(&self, x: &JetVector) -> Result<JetVector> {
        Ok(x.sub(&self.project_v(x)?))
    }

    fn normal_frame(&self, seeds: &[LorentzVector]) -> Result<Vec<JetVector>> {
        let order = self.n_sec.order();
        let rank = self.n - 2;
        if seeds.len() != rank {
            return Err(Error::DimensionMismatch {
                expected: rank,
                actual: seeds.len(),
            });
        }
        let mut psi: Vec<JetVector> = Vec::with_capacity(rank);
        for seed in seeds {
            if seed.dim() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    actual: seed.dim(),
                });
            }
            let mut w = self.project_normal(&JetVector::from_real(seed, order))?;
            for p in &psi {
                let c = w.inner(p)?;
                w = w.add_scaled(&(-c), p);
            }
            let nrm2 = w.inner(&w)?;
            let scale = seed.euclidean_norm().powi(2).max(f64::MIN_POSITIVE);
            if !(nrm2.value().re > SEED_CONDITION * SEED_CONDITION * scale) {
                return Err(Error::FrameDegenerate(nrm2.value().re / scale));
            }
            psi.push(w.scale(&nrm2.re().pow(-0.5)?).re());
        }
        // orientation: det[(Y+N)/√2, (N−Y)/√2, Re 2Y_z̄, Im 2Y_z̄, ψ…] > 0
        let dim = self.dim();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (yv, nv) = (self.y.values(), self.n_sec.values());
        let p = self.y_zbar.values();
        let mut m = nalgebra::DMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, 0)] = r * (yv[i].re + nv[i].re);
            m[(i, 1)] = r * (nv[i].re - yv[i].re);
            m[(i, 2)] = 2.0 * p[i].re;
            m[(i, 3)] = 2.0 * p[i].im;
            for (k, ps) in psi.iter().enumerate() {
                m[(i, 4 + k)] = ps.entries()[i].value().re;
            }
        }
        if m.determinant() < 0.0 {
            if let Some(last) = psi.last_mut() {
                *last = last.scale_c(C64::new(-1.0, 0.0));
            }
        }
        Ok(psi)
    }

    pub fn psi_values(&self) -> Vec<LorentzVector> {
        self.psi.iter().filter_map(|p| p.real_value().ok()).collect()
    }

    fn check_normal(&self, xi: &JetVector) -> Result<()> {
        let scale = 1.0 + vector_norm(&xi.values());
        for other in [&self.y, &self.y_z, &self.y_zbar, &self.n_sec] {
            let p = xi.inner(other)?.value().norm();
            if p > self.normal_tol * scale {
                return Err(Error::NotNormal(p));
            }
        }
        Ok(())
    }

    fn normal_part_of(&self, d: &JetVector) -> Result<JetVector> {
        let order = d.order();
        let mut acc = JetVector::zeros(self.dim(), order);
        for p in &self.psi {
            let c = d.inner(p)?;
            acc = acc.add_scaled(&c, p);
        }
        Ok(acc)
    }

    /// Normal connection `D_z ξ = (ξ_z)^⊥` for a section `ξ` of `V_C^⊥`.
    pub fn normal_dz(&self, xi: &JetVector) -> Result<JetVector> {
        self.require_frame()?;
        self.check_normal(xi)?;
        self.normal_part_of(&xi.d_z()?)
    }

    /// Normal connection `D_z̄ ξ = (ξ_z̄)^⊥`.
    pub fn normal_dzbar(&self, xi: &JetVector) -> Result<JetVector> {
        self.require_frame()?;
        self.check_normal(xi)?;
        self.normal_part_of(&xi.d_zbar()?)
    }

    fn require_frame(&self) -> Result<()> {
        if self.psi.len() + 2 != self.n {
            return Err(Error::Unsupported("normal frame was not computed".into()));
        }
        Ok(())
    }

    /// `D_z̄ κ`.
    pub fn dzbar_kappa(&self) -> Result<JetVector> {
        self.normal_dzbar(&self.kappa)
    }

    /// `D_z̄ D_z̄ κ + ½ s̄ κ` as a jet.
    pub fn willmore_residual_jet(&self) -> Result<JetVector> {
        let dk = self.dzbar_kappa()?;
        let ddk = self.normal_dzbar(&dk)?;
        Ok(ddk.add_scaled(&(self.s.conj() * 0.5), &self.kappa))
    }

    pub fn willmore_residual(&self) -> Result<ComplexLorentzVector> {
        self.willmore_residual_jet()?.value()
    }

    /// `√⟨W, W̄⟩` for the Willmore residual `W`.
    pub fn willmore_residual_norm(&self) -> Result<f64> {
        Ok(self.willmore_residual()?.hermitian_norm2().max(0.0).sqrt())
    }

    /// Largest `|⟨κ, b⟩|` over the basis of `V`.
    pub fn kappa_perpendicularity(&self) -> f64 {
        let k = self.kappa.values();
        self.v_basis
            .vectors
            .iter()
            .map(|b| crate::minkowski::lorentz_dot_c(&k, b.to_complex().coords()).norm())
            .fold(0.0, f64::max)
    }

    /// `|tr(P_z P_z)|` for the projector `P` onto `V`; vanishes exactly when
    /// the conformal Gauss map is conformal.
    pub fn gauss_map_conformality(&self) -> Result<f64> {
        let dim = self.dim();
        let mut pz = Vec::with_capacity(dim * dim);
        // P e_b has entries P_{ab}; P(x) is linear in x so columns come from basis vectors
        let order = self.n_sec.order();
        for b in 0..dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[b] = C64::new(1.0, 0.0);
            let col = self.project_v(&JetVector::constant(&e, order))?.d_z()?;
            pz.push(col.values());
        }
        let mut tr = C64::new(0.0, 0.0);
        for a in 0..dim {
            for b in 0..dim {
                tr += pz[b][a] * pz[a][b];
            }
        }
        Ok(tr.norm())
    }
}

/// Willmore energy `4∬⟨κ, κ̄⟩ du dv` by the trapezoid rule on a `w × h`
/// grid over the chart's domain (periodic rule on periodic domains).
pub fn willmore_energy(chart: &dyn Chart, w: usize, h: usize) -> Result<f64> {
    willmore_energy_on(chart, chart.domain(), w, h)
}

pub fn willmore_energy_on(chart: &dyn Chart, domain: Domain, w: usize, h: usize) -> Result<f64> {
    willmore_energy_with(chart, domain, w, h, &InvariantOptions::scalars_only())
}

pub fn willmore_energy_with(chart: &dyn Chart, domain: Domain, w: usize, h: usize, opts: &InvariantOptions) -> Result<f64> {
    if w < 2 || h < 2 {
        return Err(Error::GridTooSmall(w, h));
    }
    let (du, dv) = domain.spacing(w, h);
    let periodic = domain.is_periodic();
    let weight = |i: usize, n: usize| if !periodic && (i == 0 || i == n - 1) { 0.5 } else { 1.0 };
    let terms: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / h, k % h);
            let (u, v) = domain.node(i, j, w, h);
            let data = InvariantData::compute(chart, u, v, opts)?;
            let density = data.kappa_norm2.value().re;
            if !density.is_finite() {
                return Err(Error::NonFinite(format!("energy density at ({u}, {v})")));
            }
            Ok(4.0 * density * weight(i, w) * weight(j, h))
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum::<f64>() * du * dv)
}

/// Invariants expressed in a new coordinate `w(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformedInvariants {
    pub s: C64,
    pub kappa: ComplexLorentzVector,
    pub mu: C64,
}

/// Transformation laws under `z ↦ w(z)` at the point `z`:
/// `s̃ = (s − (w″/w′)′ + ½(w″/w′)²)/w′²`, `κ̃ = κ|w′|/w′²`, `μ̃ = (μ − w″/w′)/w′`.
pub fn transform_invariants(
    s: C64,
    kappa: &ComplexLorentzVector,
    mu: C64,
    change: &CoordinateChange,
    z: C64,
) -> Result<TransformedInvariants> {
    change.check_regular(z)?;
    let (w1, w2, w3) = change.derivatives(z);
    let q = w2 / w1;
    let dq = w3 / w1 - q * q;
    let s_new = (s - dq + 0.5 * q * q) / (w1 * w1);
    let kappa_new = kappa.scale(C64::new(w1.norm(), 0.0) / (w1 * w1));
    let mu_new = (mu - q) / w1;
    Ok(TransformedInvariants {
        s: s_new,
        kappa: kappa_new,
        mu: mu_new,
    })
}
