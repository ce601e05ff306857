//! Dense complex linear-algebra helpers shared by the solver, the manifolds
//! and the realization pipeline.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const J: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real Frobenius inner product `Re tr(Aᴴ B)`.
pub fn real_inner(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn frob_norm(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖AᴴA − I‖_F
pub fn unitarity_defect(a: &CMat) -> f64 {
    let n = a.ncols();
    frob_norm(&(a.adjoint() * a - CMat::identity(n, n)))
}

/// ‖A − Aᵀ‖_F
pub fn symmetry_defect(a: &CMat) -> f64 {
    frob_norm(&(a - a.transpose()))
}

pub fn symmetrize(a: &CMat) -> CMat {
    (a + a.transpose()).scale(0.5)
}

pub fn all_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary matrix (QR of a complex Ginibre matrix with the
/// phases of R's diagonal folded back into Q).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let z = random_gaussian(n, n, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Unitary polar factor `W Xᴴ` of `A = W Σ Xᴴ`. For a complex-symmetric
/// nonsingular `A = U Σ Uᵀ` this equals `U Uᵀ`, the nearest unitary
/// symmetric matrix.
pub fn polar_unitary(a: &CMat) -> Result<CMat> {
    let svd = a
        .clone()
        .try_svd(true, true, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Numeric("SVD missing U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numeric("SVD missing Vᴴ".into()))?;
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 1e-14 * svd.singular_values.max().max(1.0) {
        return Err(Error::Numeric(format!(
            "polar factor of a numerically singular matrix (σ_min = {smin:.3e})"
        )));
    }
    Ok(u * v_t)
}

/// LU factorization with partial pivoting that supports both `A x = b` and
/// `Aᴴ x = b` solves from the same factors.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    l: CMat,
    u: CMat,
}

impl DenseLu {
    /// Factorizes `a`; fails when the smallest pivot falls below
    /// `rank_tol · max|a_ij|`.
    pub fn new(a: CMat, rank_tol: f64) -> std::result::Result<Self, f64> {
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lu = a.lu();
        let u = lu.u();
        let min_pivot = (0..u.nrows()).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        let ratio = if scale > 0.0 { min_pivot / scale } else { 0.0 };
        if !(ratio > rank_tol) {
            return Err(ratio);
        }
        let l = lu.l();
        Ok(DenseLu { lu, l, u })
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        self.lu.solve(b).expect("nonsingular by construction")
    }

    /// Solves `Aᴴ x = b`. With `P A = L U`, `Aᴴ = Uᴴ Lᴴ P`.
    pub fn adjoint_solve(&self, b: &CMat) -> CMat {
        let z = self
            .u
            .ad_solve_upper_triangular(b)
            .expect("nonsingular by construction");
        let mut w = self
            .l
            .ad_solve_lower_triangular(&z)
            .expect("unit lower triangular");
        self.lu.p().inv_permute_rows(&mut w);
        w
    }
}

/// Solves `A X = B` for a small square system, reporting near-singularity
/// through the reciprocal condition estimate of the pivots.
pub fn solve_small(a: &CMat, b: &CMat, cond_limit: f64) -> std::result::Result<CMat, f64> {
    let lu = DenseLu::new(a.clone(), 1.0 / cond_limit)?;
    Ok(lu.solve(b))
}

/// Eigen-decomposition of a general complex square matrix via the complex
/// Schur form and triangular back-substitution. Returns eigenvalues and
/// unit-norm eigenvector columns in Schur order.
pub fn complex_eig(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch("eigenproblem needs a square matrix".into()));
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut y = CMat::zeros(n, n);
    for i in 0..n {
        y[(i, i)] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for l in (j + 1)..=i {
                acc += t[(j, l)] * y[(l, i)];
            }
            let denom = t[(j, j)] - t[(i, i)];
            if denom.norm() <= 1e-12 * scale {
                if acc.norm() <= 1e-9 * scale {
                    y[(j, i)] = C64::new(0.0, 0.0);
                } else {
                    return Err(Error::NotDiagonalizable(format!(
                        "repeated eigenvalue {} with a Jordan block",
                        t[(i, i)]
                    )));
                }
            } else {
                y[(j, i)] = -acc / denom;
            }
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        col /= C64::new(nrm, 0.0);
    }
    let vals = (0..n).map(|i| t[(i, i)]).collect();
    Ok((vals, v))
}

/// Reciprocal condition estimate `σ_min / σ_max`.
pub fn rcond(a: &CMat) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Block-diagonal assembly of equally shaped blocks.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}
