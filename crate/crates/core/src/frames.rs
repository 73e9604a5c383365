//! Adapted frames, Maurer–Cartan forms and the spectral family `α^λ`.
//!
//! The adapted frame has columns `X⁺, X⁻, P⁺, P⁻, ψ₁, …, ψ_{n−2}` and is
//! Lorentz orthonormal with `FᵀηF = η`, so `F⁻¹ = ηFᵀη`. Its Maurer–Cartan
//! form is `α = α′ + α″` with `α″ = conj(α′)`, where
//! `α′ = [[A, B♯], [B, C]] dz` and `B♯ = diag(1, −1)Bᵀ`.
//!
//! Matrix norms are sup norms over entries.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::invariants::{InvariantData, InvariantOptions};
use crate::jets::{Jet, JetVector};
use crate::lifts::{LLiftData, MuField};
use crate::minkowski::LorentzVector;
use crate::surfaces::{Chart, Domain};
use crate::{C64, Error, Result};

/// Gram defect above which a frame is rejected.
pub const FRAME_TOL: f64 = 1e-8;
/// Minimum number of grid points per direction for differencing.
pub const MIN_GRID: usize = 5;
pub const DEFAULT_LAMBDA_SAMPLES: usize = 16;
/// Neighbouring columns whose normalized Euclidean dot product falls below
/// this value are treated as a sign flip.
pub const DISCONTINUITY_COS: f64 = 0.0;

pub type CMatrix = DMatrix<C64>;

const I: C64 = C64::new(0.0, 1.0);

pub fn sup_norm(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub fn sup_norm_real(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// `η = diag(−1, 1, …, 1)` as a real matrix.
pub fn eta_matrix(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(dim, dim);
    m[(0, 0)] = -1.0;
    m
}

/// `F⁻¹ = ηFᵀη` for a Lorentz orthonormal frame.
pub fn lorentz_inverse(f: &DMatrix<f64>) -> DMatrix<f64> {
    let e = eta_matrix(f.nrows());
    &e * f.transpose() * &e
}

fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// A matrix valued function known through first order at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixJet {
    pub value: CMatrix,
    pub du: CMatrix,
    pub dv: CMatrix,
}

impl MatrixJet {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            value: CMatrix::zeros(rows, cols),
            du: CMatrix::zeros(rows, cols),
            dv: CMatrix::zeros(rows, cols),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let j = f(r, c);
                m.value[(r, c)] = j.value();
                m.du[(r, c)] = j.coeff(1, 0);
                m.dv[(r, c)] = j.coeff(0, 1);
            }
        }
        m
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn conj(&self) -> Self {
        Self {
            value: self.value.map(|x| x.conj()),
            du: self.du.map(|x| x.conj()),
            dv: self.dv.map(|x| x.conj()),
        }
    }

    pub fn d_z(&self) -> CMatrix {
        (&self.du - &self.dv * I) * C64::new(0.5, 0.0)
    }

    pub fn d_zbar(&self) -> CMatrix {
        (&self.du + &self.dv * I) * C64::new(0.5, 0.0)
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self {
            value: self.value.view((r0, c0), (nr, nc)).into_owned(),
            du: self.du.view((r0, c0), (nr, nc)).into_owned(),
            dv: self.dv.view((r0, c0), (nr, nc)).into_owned(),
        }
    }

    fn map_linear(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        Self {
            value: f(&self.value),
            du: f(&self.du),
            dv: f(&self.dv),
        }
    }

    fn combine(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Self {
        Self {
            value: f(&self.value, &other.value),
            du: f(&self.du, &other.du),
            dv: f(&self.dv, &other.dv),
        }
    }

    /// Sup norm of the difference over value and first derivatives.
    pub fn distance(&self, other: &Self) -> f64 {
        sup_norm(&(&self.value - &other.value))
            .max(sup_norm(&(&self.du - &other.du)))
            .max(sup_norm(&(&self.dv - &other.dv)))
    }
}

/// Pointwise adapted frame with its closed-form Maurer–Cartan blocks.
#[derive(Clone, Debug)]
pub struct FrameData {
    pub n: usize,
    /// Column jets `X⁺, X⁻, P⁺, P⁻, ψ…`.
    pub columns: Vec<JetVector>,
    pub f: DMatrix<f64>,
    /// `γ_j = 2⟨L, ψ_j⟩`.
    pub gamma: Vec<Jet>,
    /// `k_j = 2⟨κ, ψ_j⟩`.
    pub k: Vec<Jet>,
    /// `d[j][i] = 2⟨D_z ψ_i, ψ_j⟩`.
    pub d: Vec<Vec<Jet>>,
    pub a: MatrixJet,
    pub b: MatrixJet,
    pub c: MatrixJet,
    pub gram_defect: f64,
    /// Distance between `P±` and `Re(2Y_z + μY)`, `−Im(2Y_z + μY)`.
    pub ppm_defect: f64,
}

impl FrameData {
    pub fn new(inv: &InvariantData, lift: &LLiftData) -> Result<Self> {
        let n = inv.n;
        let dim = inv.dim();
        if inv.psi.len() + 2 != n {
            return Err(Error::Unsupported("adapted frame needs the normal frame".into()));
        }
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        let xp = inv.y.add(&lift.yhat).scale_c(r);
        let xm = lift.yhat.sub(&inv.y).scale_c(r);
        let p = inv.y_zbar.scale_c(C64::new(2.0, 0.0)).add_scaled(&lift.mu.conj(), &inv.y);
        let mut columns = vec![xp.re(), xm.re(), p.re(), p.im()];
        columns.extend(inv.psi.iter().cloned());

        let mut f = DMatrix::zeros(dim, dim);
        for (c, col) in columns.iter().enumerate() {
            for (r, x) in col.values().iter().enumerate() {
                f[(r, c)] = x.re;
            }
        }
        let gram = f.transpose() * eta_matrix(dim) * &f;
        let gram_defect = sup_norm_real(&(gram - eta_matrix(dim)));
        if !(gram_defect <= FRAME_TOL) {
            return Err(Error::FrameDegenerate(gram_defect));
        }

        let q = inv.y_z.scale_c(C64::new(2.0, 0.0)).add_scaled(&lift.mu, &inv.y);
        let (qv, pp, pm) = (q.values(), columns[2].values(), columns[3].values());
        let ppm_defect = (0..dim).fold(0.0f64, |acc, i| {
            acc.max((qv[i].re - pp[i].re).abs()).max((-qv[i].im - pm[i].re).abs())
        });

        let rank = n - 2;
        let mut gamma = Vec::with_capacity(rank);
        let mut k = Vec::with_capacity(rank);
        for psi in &inv.psi {
            gamma.push(lift.l.inner(psi)? * 2.0);
            k.push(inv.kappa.inner(psi)? * 2.0);
        }
        let dpsi: Vec<JetVector> = inv.psi.iter().map(|p| p.d_z()).collect::<Result<_>>()?;
        let mut d = vec![Vec::with_capacity(rank); rank];
        for (j, row) in d.iter_mut().enumerate() {
            for dp in &dpsi {
                row.push(dp.inner(&inv.psi[j])? * 2.0);
            }
        }

        let (a, b, c) = closed_blocks(&lift.mu, &lift.rho, &gamma, &k, &d);
        Ok(Self {
            n,
            columns,
            f,
            gamma,
            k,
            d,
            a,
            b,
            c,
            gram_defect,
            ppm_defect,
        })
    }

    pub fn dim(&self) -> usize {
        self.n + 2
    }

    /// Closed-form `α′` assembled from the blocks.
    pub fn alpha_prime(&self) -> MatrixJet {
        assemble(&self.a, &self.b, &self.c)
    }

    /// `α′ = F⁻¹F_z` computed directly from the column jets.
    pub fn alpha_prime_direct(&self) -> Result<MatrixJet> {
        let dim = self.dim();
        let dz: Vec<JetVector> = self.columns.iter().map(|c| c.d_z()).collect::<Result<_>>()?;
        let mut entries = vec![vec![Jet::zero(0); dim]; dim];
        for (i, row) in entries.iter_mut().enumerate() {
            let sign = if i == 0 { -1.0 } else { 1.0 };
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.columns[i].inner(&dz[j])? * sign;
            }
        }
        Ok(MatrixJet::from_fn(dim, dim, |i, j| entries[i][j]))
    }

    /// `BᵀB − ½⟨L,L⟩[[1,1],[1,1]]`, sup norm.
    pub fn corollary_defect(&self, l_square: C64) -> f64 {
        let btb = self.b.value.transpose() * &self.b.value;
        let target = l_square * 0.5;
        btb.iter().fold(0.0, |acc, x| acc.max((x - target).norm()))
    }

    /// Numerical rank of `B` relative to its largest singular value.
    pub fn b_rank(&self, rel_tol: f64) -> usize {
        let sv = self.b.value.clone().svd(false, false).singular_values;
        let top = sv.iter().cloned().fold(0.0, f64::max);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * top).count()
    }

    /// `B_z̄ + C̄B − BĀ`, sup norm.
    pub fn extra_condition(&self) -> f64 {
        let cb = self.c.value.map(|x| x.conj()) * &self.b.value;
        let ba = &self.b.value * self.a.value.map(|x| x.conj());
        sup_norm(&(self.b.d_zbar() + cb - ba))
    }
}

/// Blocks `A`, `B`, `C` of `α′` from `μ, ρ, γ, k, d`.
pub fn closed_blocks(mu: &Jet, rho: &Jet, gamma: &[Jet], k: &[Jet], d: &[Vec<Jet>]) -> (MatrixJet, MatrixJet, MatrixJet) {
    let rank = gamma.len();
    let n = rank + 2;
    let half = |j: Jet| j * 0.5;
    let zero = Jet::zero(0);
    let a = MatrixJet::from_fn(2, 2, |r, c| if r != c { half(*mu) } else { zero });
    let cb = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    let rp = (*rho + 1.0) * cb;
    let rm = (*rho + (-1.0)) * cb;
    let mi = C64::new(0.0, -1.0);
    let b = MatrixJet::from_fn(n, 2, |r, c| match (r, c) {
        (0, 0) => rp,
        (0, _) => rm,
        (1, 0) => rp * mi,
        (1, _) => rm * mi,
        (r, _) => gamma[r - 2] * cb,
    });
    let c = MatrixJet::from_fn(n, n, |r, c| match (r, c) {
        (0, 1) => half(*mu * I),
        (1, 0) => half(*mu * (-I)),
        (0, c) if c >= 2 => half(-k[c - 2]),
        (1, c) if c >= 2 => half(k[c - 2] * (-I)),
        (r, 0) if r >= 2 => half(k[r - 2]),
        (r, 1) if r >= 2 => half(k[r - 2] * I),
        (r, c) if r >= 2 && c >= 2 => half(d[r - 2][c - 2]),
        _ => zero,
    });
    (a, b, c)
}

/// `[[A, B♯], [B, C]]` with `B♯ = diag(1, −1)Bᵀ`.
pub fn assemble(a: &MatrixJet, b: &MatrixJet, c: &MatrixJet) -> MatrixJet {
    let n = c.shape().0;
    let dim = n + 2;
    let build = |a: &CMatrix, b: &CMatrix, c: &CMatrix| {
        let mut m = CMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (2, 2)).copy_from(a);
        m.view_mut((2, 0), (n, 2)).copy_from(b);
        m.view_mut((2, 2), (n, n)).copy_from(c);
        for r in 0..n {
            m[(0, 2 + r)] = b[(r, 0)];
            m[(1, 2 + r)] = -b[(r, 1)];
        }
        m
    };
    MatrixJet {
        value: build(&a.value, &b.value, &c.value),
        du: build(&a.du, &b.du, &c.du),
        dv: build(&a.dv, &b.dv, &c.dv),
    }
}

/// Splits a matrix into its `𝔨` part (block diagonal `2×2 ⊕ n×n`) and its
/// `𝔭` part (off-diagonal blocks).
pub fn split_kp(m: &CMatrix) -> (CMatrix, CMatrix) {
    let mut k = m.clone();
    let mut p = CMatrix::zeros(m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if (r < 2) != (c < 2) {
                p[(r, c)] = m[(r, c)];
                k[(r, c)] = C64::new(0.0, 0.0);
            }
        }
    }
    (k, p)
}

/// The involution `σ = Ad diag(−1, −1, 1, …, 1)`.
pub fn sigma(m: &CMatrix) -> CMatrix {
    let (k, p) = split_kp(m);
    k - p
}

/// `α^λ` evaluated on `∂_z` and `∂_z̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaForm {
    pub z: CMatrix,
    pub zbar: CMatrix,
}

impl LambdaForm {
    /// `α(∂_u) = α(∂_z) + α(∂_z̄)`.
    pub fn u(&self) -> CMatrix {
        &self.z + &self.zbar
    }

    /// `α(∂_v) = i(α(∂_z) − α(∂_z̄))`.
    pub fn v(&self) -> CMatrix {
        (&self.z - &self.zbar) * I
    }

    pub fn sigma(&self) -> Self {
        Self {
            z: sigma(&self.z),
            zbar: sigma(&self.zbar),
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        sup_norm(&(&self.z - &other.z)).max(sup_norm(&(&self.zbar - &other.zbar)))
    }
}

fn check_unit(lambda: C64) -> Result<()> {
    let m = lambda.norm();
    if !((m - 1.0).abs() <= 1e-12) {
        return Err(Error::LambdaNotUnit(m));
    }
    Ok(())
}

/// `α^λ = λ⁻¹α′_𝔭 + α_𝔨 + λα″_𝔭` from `α′ = α(∂_z)`.
pub fn alpha_lambda(alpha_prime: &CMatrix, lambda: C64) -> Result<LambdaForm> {
    check_unit(lambda)?;
    let (k, p) = split_kp(alpha_prime);
    let z = &k + &p * lambda.inv();
    let zbar = k.map(|x| x.conj()) + p.map(|x| x.conj()) * lambda;
    Ok(LambdaForm { z, zbar })
}

/// `K` equispaced points `e^{2πik/K}` on the unit circle.
pub fn lambda_samples(count: usize) -> Vec<C64> {
    (0..count)
        .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / count as f64))
        .collect()
}

/// Curvature `∂_uα_v − ∂_vα_u + [α_u, α_v]` of `d + α^λ` at a point, computed
/// from a first-order jet of `α′`.
pub fn jet_flatness(alpha_prime: &MatrixJet, lambda: C64) -> Result<f64> {
    check_unit(lambda)?;
    let (k, p) = (
        alpha_prime.map_linear(|m| split_kp(m).0),
        alpha_prime.map_linear(|m| split_kp(m).1),
    );
    let linv = lambda.inv();
    let z = k.combine(&p, |a, b| a + b * linv);
    let (kc, pc) = (k.conj(), p.conj());
    let zbar = kc.combine(&pc, |a, b| a + b * lambda);
    let au = z.combine(&zbar, |a, b| a + b);
    let av = z.combine(&zbar, |a, b| (a - b) * I);
    let curv = &av.du - &au.dv + &au.value * &av.value - &av.value * &au.value;
    Ok(sup_norm(&curv))
}

/// Residuals of the conformal Gauss, Codazzi and Ricci equations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StructureResiduals {
    pub gauss: f64,
    pub codazzi: f64,
    pub ricci: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        self.gauss.max(self.codazzi).max(self.ricci)
    }

    pub fn sup(&self, other: &Self) -> Self {
        Self {
            gauss: self.gauss.max(other.gauss),
            codazzi: self.codazzi.max(other.codazzi),
            ricci: self.ricci.max(other.ricci),
        }
    }
}

pub fn structure_residuals(inv: &InvariantData) -> Result<StructureResiduals> {
    let kappa_bar = inv.kappa.conj();
    let dz_kappa_bar = inv.normal_dz(&kappa_bar)?;
    let dz_kappa = inv.normal_dz(&inv.kappa)?;
    let gauss = inv.s.d_zbar()?.value() * 0.5
        - inv.kappa.inner(&dz_kappa_bar)?.value() * 3.0
        - dz_kappa.inner(&kappa_bar)?.value();

    let w = inv.willmore_residual()?;
    let codazzi = w.coords().iter().fold(0.0f64, |acc, x| acc.max(x.im.abs()));

    let mut ricci = 0.0f64;
    for psi in &inv.psi {
        let lhs = inv
            .normal_dzbar(&inv.normal_dz(psi)?)?
            .sub(&inv.normal_dz(&inv.normal_dzbar(psi)?)?);
        let a = psi.inner(&inv.kappa)?.value() * 2.0;
        let b = psi.inner(&kappa_bar)?.value() * 2.0;
        let (lv, kv, kbv) = (lhs.values(), inv.kappa.values(), kappa_bar.values());
        for i in 0..lv.len() {
            ricci = ricci.max((lv[i] - a * kbv[i] + b * kv[i]).norm());
        }
    }
    Ok(StructureResiduals {
        gauss: gauss.norm(),
        codazzi,
        ricci,
    })
}

/// Evaluates the adapted frame and `α′` at arbitrary points of a chart with
/// a fixed μ field and fixed normal-frame seeds.
#[derive(Clone)]
pub struct FrameEvaluator<'a> {
    pub chart: &'a dyn Chart,
    pub mu: MuField,
    pub seeds: Option<Vec<LorentzVector>>,
}

/// Everything computed at one point.
#[derive(Clone, Debug)]
pub struct PointFrame {
    pub inv: InvariantData,
    pub lift: LLiftData,
    pub frame: FrameData,
}

impl<'a> FrameEvaluator<'a> {
    /// Uses the normal frame at `(u0, v0)` as seeds when the normal bundle
    /// has rank at least two; rank one is fixed by orientation alone.
    pub fn new(chart: &'a dyn Chart, mu: MuField, u0: f64, v0: f64) -> Result<Self> {
        let seeds = if chart.n() >= 4 {
            let inv = InvariantData::compute(chart, u0, v0, &InvariantOptions::default())?;
            Some(inv.psi_values())
        } else {
            None
        };
        Ok(Self { chart, mu, seeds })
    }

    /// Chooses constant seeds with the best worst-case conditioning over a
    /// probe grid of `domain`, so a single gauge covers the whole grid.
    pub fn for_domain(chart: &'a dyn Chart, mu: MuField, domain: Domain) -> Result<Self> {
        let n = chart.n();
        if n < 4 {
            return Ok(Self { chart, mu, seeds: None });
        }
        let (dim, rank) = (n + 2, n - 2);
        let mut probes = Vec::with_capacity(SEED_PROBES * SEED_PROBES);
        for j in 0..SEED_PROBES {
            for i in 0..SEED_PROBES {
                let t = |k: usize| k as f64 / (SEED_PROBES - 1) as f64;
                let (u, v) = domain.from_unit(t(i), t(j));
                probes.push(InvariantData::compute(chart, u, v, &InvariantOptions::default())?.psi_values());
            }
        }
        let mut candidates: Vec<Vec<LorentzVector>> = probes.clone();
        for combo in combinations(dim, rank, 64) {
            candidates.push(combo.iter().map(|&k| LorentzVector::basis(dim, k)).collect::<Result<_>>()?);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..32 {
            let set = (0..rank)
                .map(|_| LorentzVector::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
                .collect::<Result<Vec<_>>>()?;
            candidates.push(set);
        }
        let mut best = (f64::NEG_INFINITY, None);
        for cand in candidates {
            let score = probes
                .iter()
                .map(|psi| seed_condition(&cand, psi))
                .try_fold(f64::INFINITY, |acc, c| c.map(|c| acc.min(c)))?;
            if score > best.0 {
                best = (score, Some(cand));
            }
        }
        Ok(Self { chart, mu, seeds: best.1 })
    }

    pub fn point(&self, u: f64, v: f64) -> Result<PointFrame> {
        let opts = match &self.seeds {
            Some(s) => InvariantOptions::with_seeds(s.clone()),
            None => InvariantOptions::default(),
        };
        let inv = InvariantData::compute(self.chart, u, v, &opts)?;
        let lift = LLiftData::compute(&inv, &self.mu)?;
        let frame = FrameData::new(&inv, &lift)?;
        Ok(PointFrame { inv, lift, frame })
    }

    pub fn alpha_prime(&self, u: f64, v: f64) -> Result<CMatrix> {
        Ok(self.point(u, v)?.frame.alpha_prime().value)
    }
}

const SEED_PROBES: usize = 7;

/// `|det⟨σ_i, ψ_j⟩|` with Euclidean-normalized seeds.
fn seed_condition(seeds: &[LorentzVector], psi: &[LorentzVector]) -> Result<f64> {
    let k = seeds.len();
    let mut m = DMatrix::zeros(k, k);
    for (i, s) in seeds.iter().enumerate() {
        let scale = s.euclidean_norm().max(f64::MIN_POSITIVE);
        for (j, p) in psi.iter().enumerate() {
            m[(i, j)] = s.inner(p)? / scale;
        }
    }
    Ok(m.determinant().abs())
}

/// Up to `limit` increasing `k`-subsets of `0..n`.
fn combinations(n: usize, k: usize, limit: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    while out.len() < limit {
        out.push(idx.clone());
        let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            break;
        };
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out
}

/// Frame values on a rectangular grid, indexed `j * w + i`.
#[derive(Clone, Debug)]
pub struct FrameSamples {
    pub w: usize,
    pub h: usize,
    pub hu: f64,
    pub hv: f64,
    pub periodic: bool,
    pub frames: Vec<DMatrix<f64>>,
}

fn column_cos(a: &DMatrix<f64>, b: &DMatrix<f64>, c: usize) -> f64 {
    let (x, y) = (a.column(c), b.column(c));
    let den = x.norm() * y.norm();
    if den == 0.0 { 1.0 } else { x.dot(&y) / den }
}

impl FrameSamples {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.w + i
    }

    fn neighbours(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(2);
        if i + 1 < self.w {
            out.push((i + 1, j));
        } else if self.periodic {
            out.push((0, j));
        }
        if j + 1 < self.h {
            out.push((i, j + 1));
        } else if self.periodic {
            out.push((i, 0));
        }
        out
    }

    /// First grid edge across which some column changes sign.
    pub fn find_discontinuity(&self) -> Option<(usize, usize, f64)> {
        for j in 0..self.h {
            for i in 0..self.w {
                let a = &self.frames[self.idx(i, j)];
                for (ni, nj) in self.neighbours(i, j) {
                    let b = &self.frames[self.idx(ni, nj)];
                    for c in 0..a.ncols() {
                        let cos = column_cos(a, b, c);
                        if cos < DISCONTINUITY_COS {
                            return Some((ni, nj, cos));
                        }
                    }
                }
            }
        }
        None
    }

    /// Propagates ψ orientation row-major from the origin, flipping normal
    /// columns that disagree with the previously visited neighbour.
    pub fn realign(&mut self) -> usize {
        let mut flips = 0;
        for j in 0..self.h {
            for i in 0..self.w {
                if i == 0 && j == 0 {
                    continue;
                }
                let reference = if i > 0 { self.idx(i - 1, j) } else { self.idx(i, j - 1) };
                let here = self.idx(i, j);
                let ncols = self.frames[here].ncols();
                for c in 4..ncols {
                    if column_cos(&self.frames[reference], &self.frames[here], c) < DISCONTINUITY_COS {
                        let mut col = self.frames[here].column_mut(c);
                        col.neg_mut();
                        flips += 1;
                    }
                }
            }
        }
        flips
    }

    fn interior(&self) -> Vec<(usize, usize)> {
        let (ri, rj) = if self.periodic {
            (0..self.w, 0..self.h)
        } else {
            (1..self.w - 1, 1..self.h - 1)
        };
        rj.flat_map(|j| ri.clone().map(move |i| (i, j))).collect()
    }

    fn shifted(&self, i: usize, j: usize, di: isize, dj: isize) -> usize {
        let wrap = |x: usize, d: isize, n: usize| ((x as isize + d).rem_euclid(n as isize)) as usize;
        self.idx(wrap(i, di, self.w), wrap(j, dj, self.h))
    }
}

fn check_grid(w: usize, h: usize) -> Result<()> {
    if w < MIN_GRID || h < MIN_GRID {
        return Err(Error::GridTooSmall(w, h));
    }
    Ok(())
}

/// `α′ = ½(α_u − iα_v)` by central differences of `F` with `F⁻¹ = ηFᵀη`, at
/// interior nodes. Sign flips of the frame are detected and either repaired
/// by realignment or reported.
pub fn maurer_cartan_numeric(samples: &FrameSamples, realign: bool) -> Result<Vec<Option<CMatrix>>> {
    check_grid(samples.w, samples.h)?;
    let aligned;
    let s = match samples.find_discontinuity() {
        None => samples,
        Some((i, j, cos)) => {
            if !realign {
                return Err(Error::FrameDiscontinuity(i, j, cos));
            }
            let mut copy = samples.clone();
            copy.realign();
            if let Some((i, j, cos)) = copy.find_discontinuity() {
                return Err(Error::FrameDiscontinuity(i, j, cos));
            }
            aligned = copy;
            &aligned
        }
    };
    let mut out = vec![None; s.w * s.h];
    let cells: Vec<(usize, CMatrix)> = s
        .interior()
        .into_par_iter()
        .map(|(i, j)| {
            let f = &s.frames[s.idx(i, j)];
            let fu = (&s.frames[s.shifted(i, j, 1, 0)] - &s.frames[s.shifted(i, j, -1, 0)]) / (2.0 * s.hu);
            let fv = (&s.frames[s.shifted(i, j, 0, 1)] - &s.frames[s.shifted(i, j, 0, -1)]) / (2.0 * s.hv);
            let inv = lorentz_inverse(f);
            let au = complexify(&(&inv * fu));
            let av = complexify(&(&inv * fv));
            (s.idx(i, j), (au - av * I) * C64::new(0.5, 0.0))
        })
        .collect();
    for (k, m) in cells {
        out[k] = Some(m);
    }
    Ok(out)
}

/// Data stored per grid node.
#[derive(Clone, Debug)]
pub struct FrameNode {
    pub u: f64,
    pub v: f64,
    pub f: DMatrix<f64>,
    pub alpha_prime: MatrixJet,
    pub gram_defect: f64,
    pub ppm_defect: f64,
    pub willmore_residual: f64,
    pub l_equation: f64,
    pub theta: f64,
    pub structure: StructureResiduals,
    pub extra_condition: f64,
}

impl FrameNode {
    fn from_point(u: f64, v: f64, p: &PointFrame) -> Result<Self> {
        let l_equation = p
            .lift
            .l_equation(&p.inv)?
            .values()
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.norm()));
        Ok(Self {
            u,
            v,
            f: p.frame.f.clone(),
            alpha_prime: p.frame.alpha_prime(),
            gram_defect: p.frame.gram_defect,
            ppm_defect: p.frame.ppm_defect,
            willmore_residual: p.inv.willmore_residual_norm()?,
            l_equation,
            theta: p.lift.theta.value().norm(),
            structure: structure_residuals(&p.inv)?,
            extra_condition: p.frame.extra_condition(),
        })
    }
}

/// One λ sample of a flatness sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessCell {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
    pub residual: f64,
}

/// Flatness residuals of `d + α^λ` over λ samples on the unit circle.
#[derive(Clone, Debug)]
pub struct LambdaFamily {
    pub samples: Vec<C64>,
    /// Value of `α^λ` at the first interior node, one per sample.
    pub alpha_lambda: Vec<LambdaForm>,
    pub residuals: Vec<f64>,
    pub noise_floor: f64,
}

impl LambdaFamily {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Flat for every sample within `factor` times the noise floor.
    pub fn is_flat(&self, factor: f64) -> bool {
        self.max_residual() < factor * self.noise_floor
    }
}

/// Frame data on a grid over a chart domain.
#[derive(Clone, Debug)]
pub struct FrameGrid {
    pub domain: Domain,
    pub w: usize,
    pub h: usize,
    pub hu: f64,
    pub hv: f64,
    pub nodes: Vec<FrameNode>,
}

impl FrameGrid {
    pub fn compute(chart: &dyn Chart, mu: &MuField, domain: Domain, w: usize, h: usize) -> Result<Self> {
        check_grid(w, h)?;
        let eval = FrameEvaluator::for_domain(chart, mu.clone(), domain)?;
        let nodes = (0..w * h)
            .into_par_iter()
            .map(|k| {
                let (u, v) = domain.node(k % w, k / w, w, h);
                let p = eval.point(u, v)?;
                FrameNode::from_point(u, v, &p)
            })
            .collect::<Result<Vec<_>>>()?;
        let (hu, hv) = domain.spacing(w, h);
        Ok(Self {
            domain,
            w,
            h,
            hu,
            hv,
            nodes,
        })
    }

    pub fn samples(&self) -> FrameSamples {
        FrameSamples {
            w: self.w,
            h: self.h,
            hu: self.hu,
            hv: self.hv,
            periodic: self.domain.is_periodic(),
            frames: self.nodes.iter().map(|n| n.f.clone()).collect(),
        }
    }

    fn interior(&self) -> Vec<(usize, usize)> {
        self.samples_shape().interior()
    }

    fn samples_shape(&self) -> FrameSamples {
        FrameSamples {
            w: self.w,
            h: self.h,
            hu: self.hu,
            hv: self.hv,
            periodic: self.domain.is_periodic(),
            frames: Vec::new(),
        }
    }

    /// Sup distance between numeric and closed-form `α′` over interior nodes.
    pub fn maurer_cartan_error(&self, realign: bool) -> Result<f64> {
        let numeric = maurer_cartan_numeric(&self.samples(), realign)?;
        Ok(numeric
            .iter()
            .zip(&self.nodes)
            .filter_map(|(m, node)| m.as_ref().map(|m| sup_norm(&(m - &node.alpha_prime.value))))
            .fold(0.0, f64::max))
    }

    /// Pointwise curvature of `d + α^λ` by central differences of the
    /// closed-form `α^λ` at interior nodes.
    pub fn flatness_field(&self, lambda: C64) -> Result<Vec<FlatnessCell>> {
        check_unit(lambda)?;
        let forms: Vec<(CMatrix, CMatrix)> = self
            .nodes
            .par_iter()
            .map(|n| alpha_lambda(&n.alpha_prime.value, lambda).map(|f| (f.u(), f.v())))
            .collect::<Result<_>>()?;
        let shape = self.samples_shape();
        let cells = shape
            .interior()
            .into_par_iter()
            .map(|(i, j)| {
                let here = shape.idx(i, j);
                let dv_u = (&forms[shape.shifted(i, j, 0, 1)].0 - &forms[shape.shifted(i, j, 0, -1)].0)
                    / C64::new(2.0 * self.hv, 0.0);
                let du_v = (&forms[shape.shifted(i, j, 1, 0)].1 - &forms[shape.shifted(i, j, -1, 0)].1)
                    / C64::new(2.0 * self.hu, 0.0);
                let (au, av) = &forms[here];
                let curv = du_v - dv_u + au * av - av * au;
                let node = &self.nodes[here];
                FlatnessCell {
                    i,
                    j,
                    u: node.u,
                    v: node.v,
                    residual: sup_norm(&curv),
                }
            })
            .collect();
        Ok(cells)
    }

    pub fn flatness_residual(&self, lambda: C64) -> Result<f64> {
        Ok(self.flatness_field(lambda)?.iter().map(|c| c.residual).fold(0.0, f64::max))
    }

    /// Larger of the λ = ±1 residuals (a genuine Maurer–Cartan form and its
    /// σ image, flat up to discretization) and a roundoff estimate.
    pub fn noise_floor(&self) -> Result<f64> {
        let plus = self.flatness_residual(C64::new(1.0, 0.0))?;
        let minus = self.flatness_residual(C64::new(-1.0, 0.0))?;
        Ok(plus.max(minus).max(self.roundoff_floor()))
    }

    pub fn roundoff_floor(&self) -> f64 {
        let a = self
            .nodes
            .iter()
            .map(|n| sup_norm(&n.alpha_prime.value))
            .fold(0.0, f64::max);
        let h = self.hu.min(self.hv);
        64.0 * f64::EPSILON * ((1.0 + a).powi(2) + (1.0 + a) / h)
    }

    pub fn lambda_family(&self, count: usize) -> Result<LambdaFamily> {
        let samples = lambda_samples(count);
        let first = self.interior().first().map(|&(i, j)| j * self.w + i).unwrap_or(0);
        let alpha_lambda = samples
            .iter()
            .map(|&l| alpha_lambda(&self.nodes[first].alpha_prime.value, l))
            .collect::<Result<Vec<_>>>()?;
        let residuals = samples
            .iter()
            .map(|&l| self.flatness_residual(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(LambdaFamily {
            samples,
            alpha_lambda,
            residuals,
            noise_floor: self.noise_floor()?,
        })
    }

    fn node_max(&self, f: impl Fn(&FrameNode) -> f64) -> f64 {
        self.nodes.iter().map(f).fold(0.0, f64::max)
    }

    pub fn max_willmore_residual(&self) -> f64 {
        self.node_max(|n| n.willmore_residual)
    }

    pub fn max_l_equation(&self) -> f64 {
        self.node_max(|n| n.l_equation)
    }

    pub fn max_theta(&self) -> f64 {
        self.node_max(|n| n.theta)
    }

    pub fn max_gram_defect(&self) -> f64 {
        self.node_max(|n| n.gram_defect)
    }

    pub fn max_extra_condition(&self) -> f64 {
        self.node_max(|n| n.extra_condition)
    }

    pub fn max_jet_flatness(&self, lambda: C64) -> Result<f64> {
        self.nodes
            .iter()
            .map(|n| jet_flatness(&n.alpha_prime, lambda))
            .try_fold(0.0f64, |acc, r| r.map(|x| acc.max(x)))
    }

    pub fn structure(&self) -> StructureResiduals {
        self.nodes
            .iter()
            .fold(StructureResiduals::default(), |acc, n| acc.sup(&n.structure))
    }
}

/// Step control for extended-frame integration.
#[derive(Clone, Copy, Debug)]
pub struct ExtendedFrameOptions {
    pub tol: f64,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for ExtendedFrameOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            initial_step: 0.05,
            min_step: 1e-9,
        }
    }
}

/// Extended frame values at the vertices of a polygonal path.
#[derive(Clone, Debug)]
pub struct PathFrames {
    pub lambda: C64,
    pub points: Vec<(f64, f64)>,
    pub frames: Vec<DMatrix<f64>>,
    pub steps: usize,
}

impl PathFrames {
    /// `‖F_end − F_start‖` for a closed loop.
    pub fn monodromy_defect(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => sup_norm_real(&(b - a)),
            _ => 0.0,
        }
    }
}

/// Integrates `dF = F·α^λ` by RK4 with step doubling along a polygonal path,
/// starting from `F(path[0]) = f0`. `alpha` returns `α′` at a point.
pub fn extended_frame_integrate(
    alpha: &dyn Fn(f64, f64) -> Result<CMatrix>,
    lambda: C64,
    path: &[(f64, f64)],
    f0: &DMatrix<f64>,
    opts: &ExtendedFrameOptions,
) -> Result<PathFrames> {
    check_unit(lambda)?;
    let mut frames = vec![f0.clone()];
    let mut steps = 0;
    let mut f = f0.clone();
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let (du, dv) = (b.0 - a.0, b.1 - a.1);
        let len = du.hypot(dv);
        if len == 0.0 {
            frames.push(f.clone());
            continue;
        }
        let rhs = |t: f64, f: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            let form = alpha_lambda(&alpha(a.0 + t * du, a.1 + t * dv)?, lambda)?;
            let omega = form.u() * C64::new(du, 0.0) + form.v() * C64::new(dv, 0.0);
            Ok(f * omega.map(|x| x.re))
        };
        let rk4 = |t: f64, h: f64, f: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            let k1 = rhs(t, f)?;
            let k2 = rhs(t + 0.5 * h, &(f + &k1 * (0.5 * h)))?;
            let k3 = rhs(t + 0.5 * h, &(f + &k2 * (0.5 * h)))?;
            let k4 = rhs(t + h, &(f + &k3 * h))?;
            Ok(f + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
        };
        let mut t = 0.0;
        let mut h = (opts.initial_step / len).min(1.0);
        let min_h = opts.min_step / len;
        while t < 1.0 {
            h = h.min(1.0 - t);
            if h < min_h && t + h < 1.0 {
                return Err(Error::StepUnderflow(h * len));
            }
            let full = rk4(t, h, &f)?;
            let half = rk4(t, 0.5 * h, &f)?;
            let two = rk4(t + 0.5 * h, 0.5 * h, &half)?;
            let err = sup_norm_real(&(&two - &full));
            let scale = 1.0 + sup_norm_real(&two);
            if err <= opts.tol * scale || h <= min_h {
                f = &two + (&two - &full) / 15.0;
                t += h;
                steps += 1;
                if err < opts.tol * scale / 64.0 {
                    h *= 2.0;
                }
            } else {
                h *= 0.5;
            }
            if !f.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite("extended frame".into()));
            }
        }
        frames.push(f.clone());
    }
    Ok(PathFrames {
        lambda,
        points: path.to_vec(),
        frames,
        steps,
    })
}

/// Closed rectangular loop through the corners of `[u0,u1]×[v0,v1]`.
pub fn rectangle_loop(u0: f64, u1: f64, v0: f64, v1: f64) -> Vec<(f64, f64)> {
    vec![(u0, v0), (u1, v0), (u1, v1), (u0, v1), (u0, v0)]
}

/// Largest deviation of `F^λ F_adapted⁻¹` from its starting value along the
/// path vertices.
pub fn gauge_defect(path: &PathFrames, adapted: &[DMatrix<f64>]) -> f64 {
    let mut base: Option<DMatrix<f64>> = None;
    let mut worst = 0.0f64;
    for (fl, fa) in path.frames.iter().zip(adapted) {
        let g = fl * lorentz_inverse(fa);
        match &base {
            None => base = Some(g),
            Some(b) => worst = worst.max(sup_norm_real(&(g - b))),
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifts::riccati_constant;
    use crate::surfaces::{Clifford, GreatSphere, ProductTorus, Veronese, parse_surface};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn point(chart: &dyn Chart, mu: MuField, u: f64, v: f64) -> PointFrame {
        FrameEvaluator::new(chart, mu, u, v).unwrap().point(u, v).unwrap()
    }

    fn torus_mu() -> MuField {
        let t = ProductTorus::new(0.8).unwrap();
        let inv = InvariantData::compute(&t, 0.0, 0.0, &InvariantOptions::scalars_only()).unwrap();
        MuField::Constant(riccati_constant(&inv.s, 1e-9).unwrap()[0])
    }

    #[test]
    fn clifford_frame_is_orthonormal() {
        let p = point(&Clifford, MuField::Zero, 0.0, 0.0);
        let f = &p.frame.f;
        let g = f.transpose() * eta_matrix(5) * f;
        assert_abs_diff_eq!(g[(0, 0)], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[(1, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[(0, 1)], 0.0, epsilon = 1e-12);
        assert!(p.frame.gram_defect < 1e-10);
        assert_abs_diff_eq!(f.determinant(), 1.0, epsilon = 1e-9);
        assert!(f[(0, 0)] > 0.0);
    }

    #[test]
    fn clifford_blocks() {
        let p = point(&Clifford, MuField::Zero, 0.3, 0.7);
        let fr = &p.frame;
        assert!(sup_norm(&fr.a.value) < 1e-12);
        assert!(fr.gamma.iter().all(|g| g.value().norm() < 1e-12));
        assert!(fr.corollary_defect(p.lift.l_square.value()) < 1e-12);
        assert_eq!(fr.b_rank(1e-9), 1);
        let btb = fr.b.value.transpose() * &fr.b.value;
        assert!(sup_norm(&btb) < 1e-12);
    }

    #[test]
    fn product_torus_a_block_is_constant() {
        let mu = torus_mu();
        let t = ProductTorus::new(0.8).unwrap();
        let m = match mu {
            MuField::Constant(m) => m,
            _ => unreachable!(),
        };
        for (u, v) in [(0.0, 0.0), (1.1, 2.3)] {
            let p = point(&t, mu.clone(), u, v);
            assert_abs_diff_eq!(p.frame.a.value[(0, 1)].re, 0.5 * m.re, epsilon = 1e-10);
            assert_abs_diff_eq!(p.frame.a.value[(1, 0)].re, 0.5 * m.re, epsilon = 1e-10);
            assert!(sup_norm(&p.frame.a.du) < 1e-9 && sup_norm(&p.frame.a.dv) < 1e-9);
        }
    }

    #[test]
    fn great_sphere_frame_is_valid() {
        let s = GreatSphere::new(3).unwrap();
        let p = point(&s, MuField::Zero, 0.2, -0.1);
        assert!(p.frame.gram_defect < 1e-10);
        assert!(p.frame.ppm_defect < 1e-12);
        let r = structure_residuals(&p.inv).unwrap();
        assert!(r.max() < 1e-14);
    }

    fn catalog_points() -> Vec<(SurfaceSpecCase, f64, f64)> {
        vec![
            (SurfaceSpecCase::Named("clifford", MuField::Zero), 0.3, 0.7),
            (SurfaceSpecCase::Named("clifford", MuField::Pole { c: C64::new(3.0, 3.0) }), 0.5, 0.4),
            (SurfaceSpecCase::Torus, 0.4, 1.3),
            (SurfaceSpecCase::Named("great-sphere:n=4", MuField::StereoDual), 0.2, 0.1),
            (SurfaceSpecCase::Named("veronese", MuField::StereoDual), 0.2, -0.3),
            (SurfaceSpecCase::Riccati("flat-torus-s5:a1=0.5,a2=0.6"), 0.3, 0.6),
        ]
    }

    enum SurfaceSpecCase {
        Named(&'static str, MuField),
        Torus,
        Riccati(&'static str),
    }

    fn resolve(case: &SurfaceSpecCase) -> (crate::surfaces::SurfaceChart, MuField) {
        match case {
            SurfaceSpecCase::Named(s, mu) => (parse_surface(s).unwrap(), mu.clone()),
            SurfaceSpecCase::Torus => (parse_surface("product-torus:a=0.8").unwrap(), torus_mu()),
            SurfaceSpecCase::Riccati(s) => {
                let chart = parse_surface(s).unwrap();
                let inv = InvariantData::compute(chart.as_ref(), 0.0, 0.0, &InvariantOptions::scalars_only()).unwrap();
                let mu = MuField::Constant(riccati_constant(&inv.s, 1e-9).unwrap()[1]);
                (chart, mu)
            }
        }
    }

    #[test]
    fn closed_form_matches_direct_maurer_cartan() {
        for (case, u, v) in catalog_points() {
            let (chart, mu) = resolve(&case);
            let p = point(chart.as_ref(), mu, u, v);
            let closed = p.frame.alpha_prime();
            let direct = p.frame.alpha_prime_direct().unwrap();
            let d = closed.distance(&direct);
            assert!(d < 1e-8, "{}: {d}", chart.spec());
            assert!(p.frame.ppm_defect < 1e-10);
            assert!(p.frame.gram_defect < 1e-10);
            assert!(p.frame.corollary_defect(p.lift.l_square.value()) < 1e-10);
            let c = &p.frame.c.value;
            assert!(sup_norm(&(c + c.transpose())) < 1e-12);
        }
    }

    #[test]
    fn structure_equations_hold_for_every_surface() {
        for (case, u, v) in catalog_points() {
            let (chart, mu) = resolve(&case);
            let p = point(chart.as_ref(), mu, u, v);
            let r = structure_residuals(&p.inv).unwrap();
            assert!(r.max() < 1e-8, "{}: {r:?}", chart.spec());
        }
        let p = point(&Clifford, MuField::Zero, 1.0, 2.0);
        assert!(structure_residuals(&p.inv).unwrap().max() < 1e-10);
    }

    #[test]
    fn lambda_one_and_minus_one() {
        let p = point(&Veronese, MuField::StereoDual, 0.1, 0.2);
        let a = p.frame.alpha_prime().value;
        let one = alpha_lambda(&a, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(one.z, a);
        assert_eq!(one.zbar, a.map(|x| x.conj()));
        let minus = alpha_lambda(&a, C64::new(-1.0, 0.0)).unwrap();
        assert!(minus.distance(&one.sigma()) < 1e-15);
        assert!(matches!(alpha_lambda(&a, C64::new(1.1, 0.0)), Err(Error::LambdaNotUnit(_))));
    }

    #[test]
    fn lambda_i_on_clifford_rotates_b() {
        let p = point(&Clifford, MuField::Zero, 0.3, 0.7);
        let a = p.frame.alpha_prime().value;
        let f = alpha_lambda(&a, I).unwrap();
        let (k0, p0) = split_kp(&a);
        let (k1, p1) = split_kp(&f.z);
        assert!(sup_norm(&(k1 - k0)) < 1e-15);
        assert!(sup_norm(&(p1 - p0 * (-I))) < 1e-15);
        let (_, pb) = split_kp(&f.zbar);
        assert!(sup_norm(&(pb - split_kp(&a.map(|x| x.conj())).1 * I)) < 1e-15);
    }

    #[test]
    fn jet_flatness_separates_willmore() {
        let p = point(&Clifford, MuField::Zero, 0.3, 0.7);
        for l in lambda_samples(16) {
            assert!(jet_flatness(&p.frame.alpha_prime(), l).unwrap() < 1e-10);
        }
        let t = ProductTorus::new(0.8).unwrap();
        let q = point(&t, torus_mu(), 0.3, 0.7);
        assert!(jet_flatness(&q.frame.alpha_prime(), C64::new(1.0, 0.0)).unwrap() < 1e-10);
        assert!(jet_flatness(&q.frame.alpha_prime(), I).unwrap() > 1e-2);
    }

    #[test]
    fn extra_condition() {
        let p = point(&Clifford, MuField::Pole { c: C64::new(3.0, 3.0) }, 0.5, 0.4);
        assert!(p.frame.extra_condition() < 1e-6);
        let p = point(&Clifford, MuField::Zero, 0.5, 0.4);
        assert!(p.frame.extra_condition() < 1e-6);
        let t = ProductTorus::new(0.8).unwrap();
        let q = point(&t, torus_mu(), 0.5, 0.4);
        assert!(q.frame.extra_condition() > 1e-2);
    }

    #[test]
    fn grid_too_small() {
        let r = FrameGrid::compute(&Clifford, &MuField::Zero, Clifford.domain(), 3, 3);
        assert!(matches!(r, Err(Error::GridTooSmall(3, 3))));
    }

    #[test]
    fn constant_frames_have_zero_form() {
        let s = FrameSamples {
            w: 6,
            h: 6,
            hu: 0.1,
            hv: 0.1,
            periodic: false,
            frames: vec![DMatrix::identity(5, 5); 36],
        };
        let a = maurer_cartan_numeric(&s, false).unwrap();
        assert_eq!(a.iter().filter(|m| m.is_some()).count(), 16);
        assert!(a.iter().flatten().all(|m| sup_norm(m) == 0.0));
    }

    #[test]
    fn sign_flip_is_detected_and_realigned() {
        let g = FrameGrid::compute(&Clifford, &MuField::Zero, Clifford.domain(), 16, 16).unwrap();
        let mut s = g.samples();
        let k = 5 * 16 + 7;
        s.frames[k].column_mut(4).neg_mut();
        assert!(matches!(maurer_cartan_numeric(&s, false), Err(Error::FrameDiscontinuity(..))));
        let fixed = maurer_cartan_numeric(&s, true).unwrap();
        let clean = maurer_cartan_numeric(&g.samples(), false).unwrap();
        for (a, b) in fixed.iter().zip(&clean) {
            if let (Some(a), Some(b)) = (a, b) {
                assert!(sup_norm(&(a - b)) < 1e-14);
            }
        }
    }

    #[test]
    fn numeric_maurer_cartan_converges_quadratically() {
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                FrameGrid::compute(&Clifford, &MuField::Zero, Clifford.domain(), n, n)
                    .unwrap()
                    .maurer_cartan_error(false)
                    .unwrap()
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!((1.8..=2.2).contains(&order), "{errs:?} {order}");
    }

    #[test]
    fn flatness_on_grids() {
        let g = FrameGrid::compute(&Clifford, &MuField::Zero, Clifford.domain(), 24, 24).unwrap();
        let fam = g.lambda_family(16).unwrap();
        assert!(fam.max_residual() < 1e-6);
        assert!(fam.is_flat(10.0));
        let t = ProductTorus::new(0.8).unwrap();
        let g = FrameGrid::compute(&t, &torus_mu(), t.domain(), 24, 24).unwrap();
        assert!(g.flatness_residual(C64::new(1.0, 0.0)).unwrap() < 1e-6);
        assert!(g.flatness_residual(I).unwrap() > 1e-2);
        assert!(!g.lambda_family(16).unwrap().is_flat(10.0));
    }

    #[test]
    fn extended_frames() {
        let mu = MuField::Zero;
        let eval = FrameEvaluator::new(&Clifford, mu, 0.0, 0.0).unwrap();
        let alpha = |u: f64, v: f64| eval.alpha_prime(u, v);
        let f0 = eval.point(0.0, 0.0).unwrap().frame.f;
        let path = rectangle_loop(0.0, 1.0, 0.0, 1.0);
        let opts = ExtendedFrameOptions::default();
        let lam = C64::from_polar(1.0, PI / 4.0);
        let r = extended_frame_integrate(&alpha, lam, &path, &f0, &opts).unwrap();
        assert!(r.monodromy_defect() < 1e-5);

        let one = extended_frame_integrate(&alpha, C64::new(1.0, 0.0), &path, &f0, &opts).unwrap();
        let adapted: Vec<_> = path.iter().map(|&(u, v)| eval.point(u, v).unwrap().frame.f).collect();
        assert!(gauge_defect(&one, &adapted) < 1e-6);

        let t = ProductTorus::new(0.8).unwrap();
        let te = FrameEvaluator::new(&t, torus_mu(), 0.0, 0.0).unwrap();
        let ta = |u: f64, v: f64| te.alpha_prime(u, v);
        let tf0 = te.point(0.0, 0.0).unwrap().frame.f;
        let r = extended_frame_integrate(&ta, I, &path, &tf0, &opts).unwrap();
        assert!(r.monodromy_defect() > 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn twisting_identity(theta in 0.0..(2.0 * PI), u in -0.5..0.5f64, v in -0.5..0.5f64) {
            let p = point(&Veronese, MuField::StereoDual, u, v);
            let a = p.frame.alpha_prime().value;
            let l = C64::from_polar(1.0, theta);
            let plus = alpha_lambda(&a, l).unwrap();
            let minus = alpha_lambda(&a, -l).unwrap();
            prop_assert!(minus.distance(&plus.sigma()) < 1e-12);
            prop_assert!(sup_norm(&plus.u().map(|x| C64::new(x.im, 0.0))) < 1e-12);
        }

        #[test]
        fn frame_invariants(u in 0.0..(2.0 * PI), v in 0.0..(2.0 * PI), c in 2.0..4.0f64) {
            let mu = MuField::Pole { c: C64::new(c, c) };
            let p = point(&Clifford, mu, u * 0.1 + 0.2, v * 0.1 + 0.2);
            prop_assert!(p.frame.gram_defect < 1e-10);
            let c = &p.frame.c.value;
            prop_assert!(sup_norm(&(c + c.transpose())) < 1e-12);
            let a = &p.frame.a.value;
            prop_assert!((a[(0, 1)] - a[(1, 0)]).norm() < 1e-15);
            prop_assert!(a[(0, 0)].norm() < 1e-15 && a[(1, 1)].norm() < 1e-15);
        }
    }
}
