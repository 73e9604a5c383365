//! Linear algebra in the Lorentzian space `R^{n+1,1}`.
//!
//! Coordinate 0 is timelike: `⟨v, w⟩ = −v₀w₀ + Σ_{j≥1} v_j w_j`. Complex
//! vectors carry the complex *bilinear* extension of this form, never the
//! Hermitian one; [`ComplexLorentzVector::hermitian_norm2`] is provided
//! separately for the cases where `⟨a, ā⟩` is wanted.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Default rank tolerance for Gram–Schmidt, relative to the input scale.
pub const RANK_TOL: f64 = 1e-9;

/// Smallest supported ambient dimension `n + 2` (surfaces in `S^3`).
pub const MIN_AMBIENT: usize = 5;

fn check_dim(len: usize) -> Result<()> {
    if len < MIN_AMBIENT {
        return Err(Error::InvalidDimension(len.saturating_sub(2)));
    }
    Ok(())
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

/// Signature `(1, n+1)` pairing of two real coordinate slices of equal length.
pub fn lorentz_dot(a: &[f64], b: &[f64]) -> f64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

/// Complex bilinear pairing of two complex coordinate slices of equal length.
pub fn lorentz_dot_c(a: &[C64], b: &[C64]) -> C64 {
    -a[0] * b[0] + a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<C64>()
}

/// The Gram matrix `η = diag(−1, 1, …, 1)` of size `dim`.
pub fn eta(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::identity(dim, dim);
    m[(0, 0)] = -1.0;
    m
}

/// A point or tangent vector of `R^{n+1,1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzVector {
    coords: Vec<f64>,
}

impl LorentzVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        Ok(Self { coords })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    /// The `k`-th standard basis vector.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        let mut v = Self::zeros(dim)?;
        v.coords[k] = 1.0;
        Ok(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        same_len(self.dim(), other.dim())?;
        Ok(lorentz_dot(&self.coords, &other.coords))
    }

    pub fn norm2(&self) -> f64 {
        lorentz_dot(&self.coords, &self.coords)
    }

    /// Euclidean length of the coordinate array, used only for scale estimates.
    pub fn euclidean_norm(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_null(&self, tol: f64) -> bool {
        self.norm2().abs() <= tol * (1.0 + self.euclidean_norm().powi(2))
    }

    /// Null and future pointing, i.e. a point of the forward light cone.
    pub fn is_forward_null(&self, tol: f64) -> bool {
        self.is_null(tol) && self.time() > 0.0
    }

    pub fn to_complex(&self) -> ComplexLorentzVector {
        ComplexLorentzVector {
            coords: self.coords.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }
}

impl Add for &LorentzVector {
    type Output = LorentzVector;
    fn add(self, rhs: Self) -> LorentzVector {
        LorentzVector {
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &LorentzVector {
    type Output = LorentzVector;
    fn sub(self, rhs: Self) -> LorentzVector {
        LorentzVector {
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &LorentzVector {
    type Output = LorentzVector;
    fn mul(self, rhs: f64) -> LorentzVector {
        LorentzVector {
            coords: self.coords.iter().map(|a| a * rhs).collect(),
        }
    }
}

impl Neg for &LorentzVector {
    type Output = LorentzVector;
    fn neg(self) -> LorentzVector {
        self * -1.0
    }
}

/// A vector of the complexification `C^{n+2}` with the bilinear form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexLorentzVector {
    coords: Vec<C64>,
}

impl ComplexLorentzVector {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        check_dim(coords.len())?;
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Complex bilinear pairing (no conjugation).
    pub fn inner(&self, other: &Self) -> Result<C64> {
        same_len(self.dim(), other.dim())?;
        Ok(lorentz_dot_c(&self.coords, &other.coords))
    }

    pub fn conj(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn re(&self) -> LorentzVector {
        LorentzVector {
            coords: self.coords.iter().map(|z| z.re).collect(),
        }
    }

    pub fn im(&self) -> LorentzVector {
        LorentzVector {
            coords: self.coords.iter().map(|z| z.im).collect(),
        }
    }

    /// `⟨a, ā⟩`, which is real; positive on spacelike subspaces.
    pub fn hermitian_norm2(&self) -> f64 {
        self.coords
            .iter()
            .enumerate()
            .map(|(k, z)| if k == 0 { -z.norm_sqr() } else { z.norm_sqr() })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            coords: self.coords.iter().map(|z| z * c).collect(),
        }
    }
}

impl Add for &ComplexLorentzVector {
    type Output = ComplexLorentzVector;
    fn add(self, rhs: Self) -> ComplexLorentzVector {
        ComplexLorentzVector {
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexLorentzVector {
    type Output = ComplexLorentzVector;
    fn sub(self, rhs: Self) -> ComplexLorentzVector {
        ComplexLorentzVector {
            coords: self.coords.iter().zip(&rhs.coords).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Gram-determinant pairing of 2-vectors:
/// `⟨a∧b, c∧d⟩ = ⟨a,c⟩⟨b,d⟩ − ⟨a,d⟩⟨b,c⟩`.
pub fn wedge_inner(
    a: &ComplexLorentzVector,
    b: &ComplexLorentzVector,
    c: &ComplexLorentzVector,
    d: &ComplexLorentzVector,
) -> Result<C64> {
    Ok(a.inner(c)? * b.inner(d)? - a.inner(d)? * b.inner(c)?)
}

/// An η-orthonormal family together with the sign `⟨e_k, e_k⟩ = ±1` of each member.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalSet {
    pub vectors: Vec<LorentzVector>,
    pub signs: Vec<i8>,
}

impl OrthonormalSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest deviation of the Gram matrix from `diag(signs)`.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { self.signs[i] as f64 } else { 0.0 };
                worst = worst.max((lorentz_dot(a.coords(), b.coords()) - target).abs());
            }
        }
        worst
    }

    /// Removes the components along this family: `x − Σ s_k ⟨x, e_k⟩ e_k`.
    pub fn project_out(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        for (e, &s) in self.vectors.iter().zip(&self.signs) {
            let c = s as f64 * lorentz_dot(&out, e.coords());
            for (o, ek) in out.iter_mut().zip(e.coords()) {
                *o -= c * ek;
            }
        }
        out
    }
}

/// Pivoted indefinite Gram–Schmidt on raw coordinate arrays.
///
/// At each step the remaining (already projected) candidate with the largest
/// `|⟨v, v⟩|` is taken. When every candidate is close to null but two of them
/// pair strongly, they are first combined as `v_i ± v_j`. With `budget` set,
/// the process stops after that many vectors and silently skips the rest;
/// otherwise a small pivot is a rank-deficiency error.
fn pivoted_orthonormalize(
    mut rest: Vec<Vec<f64>>,
    tol: f64,
    budget: Option<usize>,
) -> Result<OrthonormalSet> {
    let mut out = OrthonormalSet {
        vectors: Vec::new(),
        signs: Vec::new(),
    };
    let target = budget.unwrap_or(rest.len());
    while out.len() < target {
        if rest.is_empty() {
            return Err(Error::Degenerate {
                pivot: 0.0,
                tolerance: tol,
            });
        }
        let diag: Vec<f64> = rest.iter().map(|v| lorentz_dot(v, v)).collect();
        let mut k = 0;
        for i in 1..diag.len() {
            let (a, b) = (diag[i].abs(), diag[k].abs());
            if a > b * (1.0 + 1e-12) || (a >= b * (1.0 - 1e-12) && diag[i] < 0.0 && diag[k] > 0.0) {
                k = i;
            }
        }
        let mut best_off = (0.0_f64, 0, 0);
        for i in 0..rest.len() {
            for j in (i + 1)..rest.len() {
                let o = lorentz_dot(&rest[i], &rest[j]).abs();
                if o > best_off.0 {
                    best_off = (o, i, j);
                }
            }
        }
        if diag[k].abs() < 0.5 * best_off.0 && best_off.0 > tol {
            let (_, i, j) = best_off;
            let o = lorentz_dot(&rest[i], &rest[j]);
            let plus = diag[i] + diag[j] + 2.0 * o;
            let minus = diag[i] + diag[j] - 2.0 * o;
            let sgn = if plus.abs() >= minus.abs() { 1.0 } else { -1.0 };
            let merged: Vec<f64> = rest[i].iter().zip(&rest[j]).map(|(a, b)| a + sgn * b).collect();
            rest[i] = merged;
            k = i;
        }
        let d = lorentz_dot(&rest[k], &rest[k]);
        if d.abs() <= tol {
            return Err(Error::Degenerate {
                pivot: d.abs(),
                tolerance: tol,
            });
        }
        let pivot = rest.remove(k);
        let inv = 1.0 / d.abs().sqrt();
        let e: Vec<f64> = pivot.iter().map(|x| x * inv).collect();
        let sign: i8 = if d < 0.0 { -1 } else { 1 };
        for v in rest.iter_mut() {
            let c = sign as f64 * lorentz_dot(v, &e);
            for (vi, ei) in v.iter_mut().zip(&e) {
                *vi -= c * ei;
            }
        }
        out.vectors.push(LorentzVector { coords: e });
        out.signs.push(sign);
    }
    // timelike members first, original pivot order otherwise
    let mut idx: Vec<usize> = (0..out.len()).collect();
    idx.sort_by_key(|&i| out.signs[i]);
    Ok(OrthonormalSet {
        vectors: idx.iter().map(|&i| out.vectors[i].clone()).collect(),
        signs: idx.iter().map(|&i| out.signs[i]).collect(),
    })
}

fn input_scale(vectors: &[LorentzVector]) -> f64 {
    vectors
        .iter()
        .map(|v| v.euclidean_norm().powi(2))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Orthonormalizes `vectors` with respect to the Lorentz form.
///
/// Fails with [`Error::Degenerate`] if the family is rank deficient relative to
/// `rel_tol` times the largest squared Euclidean length of the inputs.
pub fn gram_schmidt_lorentz(vectors: &[LorentzVector], rel_tol: f64) -> Result<OrthonormalSet> {
    if let Some(first) = vectors.first() {
        for v in vectors {
            same_len(first.dim(), v.dim())?;
        }
    }
    let tol = rel_tol * input_scale(vectors);
    pivoted_orthonormalize(vectors.iter().map(|v| v.coords.clone()).collect(), tol, None)
}

/// Completes `set` to an orthonormal basis of the whole space, returning the
/// new members only. Standard basis vectors are used as candidates.
pub fn orthonormal_complement(set: &OrthonormalSet, dim: usize) -> Result<OrthonormalSet> {
    let missing = dim - set.len();
    let cands: Vec<Vec<f64>> = (0..dim)
        .map(|k| {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            set.project_out(&e)
        })
        .collect();
    if missing == 0 {
        return Ok(OrthonormalSet {
            vectors: vec![],
            signs: vec![],
        });
    }
    pivoted_orthonormalize(cands, RANK_TOL, Some(missing))
}

/// An element of the identity component `SO⁺(1, n+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MobiusTransform {
    matrix: DMatrix<f64>,
}

impl MobiusTransform {
    /// Validates `MᵀηM = η`, `det M = 1` and `M₀₀ > 0` to `tol`.
    pub fn new(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        let dim = matrix.nrows();
        same_len(dim, matrix.ncols())?;
        check_dim(dim)?;
        let e = eta(dim);
        let defect = (matrix.transpose() * &e * &matrix - &e).abs().max();
        if defect > tol {
            return Err(Error::Degenerate {
                pivot: defect,
                tolerance: tol,
            });
        }
        let det = matrix.determinant();
        if (det - 1.0).abs() > tol.sqrt() || matrix[(0, 0)] <= 0.0 {
            return Err(Error::Unsupported(format!(
                "matrix is not in the identity component (det {det:.3}, M00 {:.3})",
                matrix[(0, 0)]
            )));
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix without any checks. Intended for tests that need a
    /// Lorentz transformation outside the identity component.
    pub fn new_unchecked(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            matrix: DMatrix::identity(dim, dim),
        })
    }

    /// `exp(X)` for `X` in the Lie algebra (`Xᵀη + ηX = 0`).
    pub fn from_algebra(x: &DMatrix<f64>) -> Result<Self> {
        let dim = x.nrows();
        check_dim(dim)?;
        let e = eta(dim);
        let defect = (x.transpose() * &e + &e * x).abs().max();
        if defect > 1e-12 * (1.0 + x.abs().max()) {
            return Err(Error::Unsupported(format!(
                "matrix is not in so(1,n+1) (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            matrix: x.clone().exp(),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &LorentzVector) -> Result<LorentzVector> {
        same_len(self.dim(), v.dim())?;
        let out = &self.matrix * nalgebra::DVector::from_column_slice(v.coords());
        Ok(LorentzVector {
            coords: out.iter().copied().collect(),
        })
    }

    pub fn apply_complex(&self, v: &ComplexLorentzVector) -> Result<ComplexLorentzVector> {
        same_len(self.dim(), v.dim())?;
        let coords = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| v.coords[j] * self.matrix[(i, j)]).sum())
            .collect();
        Ok(ComplexLorentzVector { coords })
    }
}

/// A pseudo-random Lie algebra element `X = ηA` with `A` antisymmetric.
///
/// The upper-triangular entries of `A` are drawn uniformly from `[−1, 1]` by a
/// ChaCha8 stream seeded with `seed` (`rand_chacha::ChaCha8Rng::seed_from_u64`,
/// row-major order), then `X` is rescaled so that its Frobenius norm is at
/// most 1.
pub fn random_algebra_element(seed: u64, dim: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let x: f64 = rng.random_range(-1.0..=1.0);
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    let x = eta(dim) * a;
    let norm = x.norm();
    if norm > 1.0 {
        x / norm
    } else {
        x
    }
}

/// A reproducible random element of `SO⁺(1, n+1)` acting on `R^{n+1,1}`.
pub fn random_mobius(seed: u64, n: usize) -> Result<MobiusTransform> {
    let dim = n + 2;
    check_dim(dim)?;
    MobiusTransform::from_algebra(&random_algebra_element(seed, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> LorentzVector {
        LorentzVector::new(c.to_vec()).unwrap()
    }

    fn cv(c: &[C64]) -> ComplexLorentzVector {
        ComplexLorentzVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn inner_examples() {
        let null = v(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(null.inner(&null).unwrap(), 0.0);
        assert!(null.is_forward_null(1e-12));
        let t = v(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.inner(&t).unwrap(), -1.0);
        let i = C64::i();
        let z = C64::new(0.0, 0.0);
        let a = cv(&[z, i, z, z, z]);
        assert_eq!(a.inner(&a).unwrap(), C64::new(-1.0, 0.0));
    }

    #[test]
    fn inner_dimension_mismatch() {
        let a = v(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let b = v(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(a.inner(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(LorentzVector::new(vec![1.0, 2.0]), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn wedge_examples() {
        let e0 = v(&[1.0, 0.0, 0.0, 0.0, 0.0]).to_complex();
        let e1 = v(&[0.0, 1.0, 0.0, 0.0, 0.0]).to_complex();
        assert_eq!(wedge_inner(&e0, &e1, &e0, &e1).unwrap(), C64::new(-1.0, 0.0));
        let w = cv(&[C64::new(0.3, 1.0), C64::new(2.0, 0.0), C64::new(0.0, -1.0), C64::new(1.0, 1.0), C64::new(0.5, 0.0)]);
        assert_eq!(wedge_inner(&w, &w, &e0, &e1).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn gram_schmidt_standard_basis_is_fixed() {
        let basis: Vec<_> = (0..5).map(|k| LorentzVector::basis(5, k).unwrap()).collect();
        let set = gram_schmidt_lorentz(&basis, RANK_TOL).unwrap();
        assert_eq!(set.signs, vec![-1, 1, 1, 1, 1]);
        for (a, b) in set.vectors.iter().zip(&basis) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gram_schmidt_rank_deficient() {
        let e0 = LorentzVector::basis(5, 0).unwrap();
        let err = gram_schmidt_lorentz(&[e0.clone(), e0], RANK_TOL).unwrap_err();
        assert!(matches!(err, Error::Degenerate { .. }));
    }

    #[test]
    fn gram_schmidt_handles_null_pairs() {
        // two null vectors spanning a Lorentzian plane plus a spacelike one
        let a = v(&[1.0, 0.0, 0.0, 1.0, 0.0]);
        let b = v(&[1.0, 0.0, 0.0, -1.0, 0.0]);
        let c = v(&[0.0, 1.0, 0.0, 0.0, 0.0]);
        let set = gram_schmidt_lorentz(&[a, b, c], RANK_TOL).unwrap();
        assert_eq!(set.signs, vec![-1, 1, 1]);
        assert!(set.gram_defect() < 1e-14);
    }

    #[test]
    fn complement_completes_basis() {
        let a = v(&[1.0, 0.0, 0.0, 1.0, 0.0]);
        let b = v(&[1.0, 0.0, 0.0, -1.0, 0.0]);
        let c = v(&[0.0, 1.0, 1.0, 0.0, 0.0]);
        let set = gram_schmidt_lorentz(&[a, b, c], RANK_TOL).unwrap();
        let comp = orthonormal_complement(&set, 5).unwrap();
        assert_eq!(comp.signs, vec![1, 1]);
        let mut all = set.clone();
        all.vectors.extend(comp.vectors);
        all.signs.extend(comp.signs);
        assert!(all.gram_defect() < 1e-14);
    }

    #[test]
    fn random_mobius_examples() {
        let m = random_mobius(0, 3).unwrap();
        let e = eta(5);
        let defect = (m.matrix().transpose() * &e * m.matrix() - &e).abs().max();
        assert!(defect < 1e-12, "defect {defect}");
        assert!(m.matrix()[(0, 0)] > 0.0);
        assert_abs_diff_eq!(m.matrix().determinant(), 1.0, epsilon = 1e-12);

        let id = MobiusTransform::from_algebra(&DMatrix::zeros(5, 5)).unwrap();
        assert_eq!(id.matrix(), &DMatrix::<f64>::identity(5, 5));

        let m1 = random_mobius(1, 3).unwrap();
        let w = m1.apply(&v(&[1.0, 1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(w.norm2().abs() < 1e-12);
        assert!(w.time() > 0.0);
    }

    #[test]
    fn random_mobius_is_reproducible() {
        assert_eq!(random_mobius(7, 4).unwrap(), random_mobius(7, 4).unwrap());
        assert_ne!(random_mobius(7, 4).unwrap(), random_mobius(8, 4).unwrap());
        assert!(random_algebra_element(3, 6).norm() <= 1.0 + 1e-15);
    }

    #[test]
    fn unchecked_rejects_in_validation() {
        let mut d = DMatrix::identity(5, 5);
        d[(0, 0)] = -1.0;
        d[(1, 1)] = -1.0;
        assert!(MobiusTransform::new(d.clone(), 1e-12).is_err());
        let m = MobiusTransform::new_unchecked(d);
        assert_eq!(m.matrix()[(0, 0)], -1.0);
    }

    fn vec5() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0..3.0f64, 5)
    }

    fn cvec5() -> impl Strategy<Value = ComplexLorentzVector> {
        (vec5(), vec5()).prop_map(|(re, im)| {
            cv(&re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect::<Vec<_>>())
        })
    }

    proptest! {
        #[test]
        fn inner_is_symmetric(a in vec5(), b in vec5()) {
            let (a, b) = (v(&a), v(&b));
            prop_assert_eq!(a.inner(&b).unwrap(), b.inner(&a).unwrap());
        }

        #[test]
        fn hermitian_splits_into_real_forms(a in cvec5()) {
            let lhs = a.inner(&a.conj()).unwrap();
            let rhs = a.re().norm2() + a.im().norm2();
            prop_assert!((lhs.re - rhs).abs() < 1e-10);
            prop_assert!(lhs.im.abs() < 1e-10);
            prop_assert!((a.hermitian_norm2() - rhs).abs() < 1e-10);
        }

        #[test]
        fn wedge_is_antisymmetric(a in cvec5(), b in cvec5(), c in cvec5(), d in cvec5()) {
            let s = wedge_inner(&a, &b, &c, &d).unwrap() + wedge_inner(&b, &a, &c, &d).unwrap();
            prop_assert!(s.norm() < 1e-9);
            let swap = wedge_inner(&a, &b, &c, &d).unwrap() - wedge_inner(&c, &d, &a, &b).unwrap();
            prop_assert!(swap.norm() < 1e-9);
        }

        #[test]
        fn mobius_preserves_form(seed in 0u64..500, a in vec5(), b in vec5()) {
            let m = random_mobius(seed, 3).unwrap();
            let (a, b) = (v(&a), v(&b));
            let lhs = m.apply(&a).unwrap().inner(&m.apply(&b).unwrap()).unwrap();
            prop_assert!((lhs - a.inner(&b).unwrap()).abs() < 1e-10);
        }
    }
}
