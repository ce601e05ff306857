//! From an optimized element GSM to realization targets: termination,
//! modal eigen-decomposition, the reference-plane sweep, the back-transform
//! and a toy-element fit.
//!
//! Eigenvalues map to modal reactance measures through
//! `s = −(1 − jλ)/(1 + jλ)`, i.e. `λ = −j(1 + s)/(1 − s)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::coupled::apply_phase_shift;
use crate::error::{Error, Result};
use crate::linalg::{complex_eig, frob_norm, rcond, unitarity_defect, symmetry_defect, CMat, C64, J};
use crate::manifolds::Gsm;

/// Largest accepted condition number of `Γ_L − Γ`.
pub const TERMINATION_COND_LIMIT: f64 = 1e12;

/// `s(λ) = −(1 − jλ)/(1 + jλ)`; a resonant mode (`λ = 0`) has `s = −1`.
pub fn lambda_to_s(lambda: f64) -> C64 {
    -(C64::new(1.0, -lambda)) / C64::new(1.0, lambda)
}

/// Inverse of [`lambda_to_s`]; `s = 1` maps to `+∞`.
pub fn s_to_lambda(s: C64) -> C64 {
    let den = C64::new(1.0, 0.0) - s;
    if den.norm() == 0.0 {
        return C64::new(f64::INFINITY, 0.0);
    }
    -J * (C64::new(1.0, 0.0) + s) / den
}

/// `S̃₀ = S̃ + T̃(Γ_L − Γ̃)⁻¹R̃`.
pub fn terminate(gsm: &Gsm, gamma_l: &CMat) -> Result<CMat> {
    let p = gsm.n_ports;
    if gamma_l.shape() != (p, p) {
        return Err(Error::DimensionMismatch(format!("Γ_L is {:?}, expected {p}×{p}", gamma_l.shape())));
    }
    let m = gamma_l - gsm.gamma();
    let rc = rcond(&m);
    if !(rc * TERMINATION_COND_LIMIT > 1.0) {
        return Err(Error::ResonantTermination(if rc > 0.0 { 1.0 / rc } else { f64::INFINITY }));
    }
    let inv = m
        .try_inverse()
        .ok_or(Error::ResonantTermination(f64::INFINITY))?;
    Ok(gsm.s() + gsm.t() * inv * gsm.r())
}

/// Open-circuit load `Γ_L = +I`.
pub fn open_load(n_ports: usize) -> CMat {
    CMat::identity(n_ports, n_ports)
}

/// Eigen-decomposition `S̃₀ = Q̃ diag(s) Q̃⁻¹` of a terminated element.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminatedEig {
    pub s_values: Vec<C64>,
    pub lambdas: Vec<C64>,
    /// Columns normalized, largest component real positive.
    pub q: CMat,
    /// Whether the real-orthogonal path for unitary symmetric input was used.
    pub orthogonal: bool,
}

impl TerminatedEig {
    pub fn real_lambdas(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.lambdas.iter().map(|l| l.im.abs()).fold(0.0, f64::max)
    }

    /// `Q̃ diag(s) Q̃⁻¹`.
    pub fn reconstruct(&self) -> Result<CMat> {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(self.s_values.clone()));
        let inv = self
            .q
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotDiagonalizable("singular eigenvector matrix".into()))?;
        Ok(&self.q * d * inv)
    }
}

const UNITARY_SYMMETRIC_TOL: f64 = 1e-8;

fn phase_fix(q: &mut CMat) {
    for mut col in q.column_iter_mut() {
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 + 1e-12 { (i, z.norm()) } else { acc });
        let z = col[imax];
        if z.norm() > 0.0 {
            col *= z.conj() / z.norm();
        }
    }
}

fn largest_index(q: &CMat, j: usize) -> usize {
    q.column(j)
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 + 1e-12 { (i, z.norm()) } else { acc })
        .0
}

/// Order: descending `|λ|`, then ascending phase of the first eigenvector
/// component, then descending `Re λ`, then position of the largest component.
fn ordering(lambdas: &[C64], q: &CMat) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lambdas.len()).collect();
    let close = |a: f64, b: f64| {
        (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
    };
    idx.sort_by(|&a, &b| {
        let (ma, mb) = (lambdas[a].norm(), lambdas[b].norm());
        if !close(ma, mb) {
            return mb.partial_cmp(&ma).unwrap_or(std::cmp::Ordering::Equal);
        }
        let phase = |j: usize| {
            let z = q[(0, j)];
            if z.norm() <= 1e-12 {
                0.0
            } else {
                z.arg()
            }
        };
        let (pa, pb) = (phase(a), phase(b));
        if !close(pa, pb) {
            return pa.partial_cmp(&pb).unwrap_or(std::cmp::Ordering::Equal);
        }
        let (ra, rb) = (lambdas[a].re, lambdas[b].re);
        if !close(ra, rb) {
            return rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal);
        }
        largest_index(q, a).cmp(&largest_index(q, b))
    });
    idx
}

/// Real orthogonal eigenvectors of a unitary symmetric matrix: `Re S` and
/// `Im S` are commuting real symmetric matrices, so a generic combination
/// `Re S + τ Im S` shares their eigenvectors.
fn orthogonal_eig(s0: &CMat) -> Option<(Vec<C64>, CMat)> {
    let n = s0.nrows();
    let re = DMatrix::from_fn(n, n, |i, j| 0.5 * (s0[(i, j)].re + s0[(j, i)].re));
    let im = DMatrix::from_fn(n, n, |i, j| 0.5 * (s0[(i, j)].im + s0[(j, i)].im));
    let mut best: Option<(f64, SymmetricEigen<f64, nalgebra::Dyn>)> = None;
    for tau in [0.618_033_988_749_895, 1.0, -0.5, 2.414_213_562_373_095, 0.0, -1.732_050_807_568_877] {
        let m = &re + &im * tau;
        let eig = SymmetricEigen::try_new(m, 1e-15, 10_000)?;
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let gap = ev.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(g, _)| gap > *g) {
            best = Some((gap, eig));
        }
    }
    let (_, eig) = best?;
    let q = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    let s: Vec<C64> = (0..n)
        .map(|j| {
            let col = q.column(j);
            (col.transpose() * s0 * col)[(0, 0)]
        })
        .collect();
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(s.clone()));
    let err = frob_norm(&(&q * d * q.transpose() - s0));
    (err <= 1e-9 * frob_norm(s0).max(1.0)).then_some((s, q))
}

/// Eigenvalues (as `λ`) and phase-fixed, deterministically ordered
/// eigenvectors of a terminated scattering matrix.
pub fn eig_terminated(s0: &CMat) -> Result<TerminatedEig> {
    if s0.nrows() != s0.ncols() || s0.nrows() == 0 {
        return Err(Error::DimensionMismatch("terminated matrix must be square".into()));
    }
    let lossless = unitarity_defect(s0) <= UNITARY_SYMMETRIC_TOL && symmetry_defect(s0) <= UNITARY_SYMMETRIC_TOL;
    let (s_raw, mut q, orthogonal) = match lossless.then(|| orthogonal_eig(s0)).flatten() {
        Some((s, q)) => (s, q, true),
        None => {
            let (s, q) = complex_eig(s0)?;
            (s, q, false)
        }
    };
    phase_fix(&mut q);
    let lam_raw: Vec<C64> = s_raw.iter().map(|&s| s_to_lambda(s)).collect();
    let order = ordering(&lam_raw, &q);
    let q_sorted = CMat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, order[j])]);
    let eig = TerminatedEig {
        s_values: order.iter().map(|&i| s_raw[i]).collect(),
        lambdas: order.iter().map(|&i| lam_raw[i]).collect(),
        q: q_sorted,
        orthogonal,
    };
    // Conditioning guard: reject numerically defective decompositions.
    if !orthogonal && rcond(&eig.q) < 1e-10 {
        return Err(Error::NotDiagonalizable(format!(
            "eigenvector matrix condition estimate {:.3e}",
            1.0 / rcond(&eig.q)
        )));
    }
    Ok(eig)
}

/// Everything a realization step needs for one element at one reference
/// plane.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationTarget {
    pub lambdas: Vec<f64>,
    pub q: CMat,
    /// `Q̃ᵀ T̃′`
    pub t_eig: CMat,
    /// `R̃′ Q̃`
    pub r_eig: CMat,
    /// Port reflection `Γ̃′` of the shifted element.
    pub gamma: CMat,
    pub chi: f64,
    pub gamma_l: CMat,
}

impl RealizationTarget {
    pub fn det_q(&self) -> C64 {
        self.q.determinant()
    }

    /// GSM in the common modal basis rebuilt from this target.
    pub fn backtransform(&self) -> Result<Gsm> {
        backtransform_gsm(&self.lambdas, &self.q, &self.t_eig, &self.r_eig, &self.gamma, &self.gamma_l)
    }
}

/// Target for `gsm` with its port reference planes shifted by `chi`
/// radians.
pub fn realization_target(gsm: &Gsm, gamma_l: &CMat, chi: f64) -> Result<RealizationTarget> {
    let (shifted, _) = apply_phase_shift(gsm, &CMat::zeros(0, 0), chi);
    let s0 = terminate(&shifted, gamma_l)?;
    let eig = eig_terminated(&s0)?;
    let det = eig.q.determinant().norm();
    if (det - 1.0).abs() > 1e-6 {
        return Err(Error::NotDiagonalizable(format!("|det Q̃| = {det:.6} deviates from 1")));
    }
    Ok(RealizationTarget {
        lambdas: eig.real_lambdas(),
        t_eig: eig.q.transpose() * shifted.t(),
        r_eig: shifted.r() * &eig.q,
        gamma: shifted.gamma(),
        q: eig.q,
        chi,
        gamma_l: gamma_l.clone(),
    })
}

/// `Ψ̂ = [[I + Q̂(Ŝ_eig − I)Q̂ᵀ, Q̂T̂_eig], [R̂_eig Q̂ᵀ, Γ̂]]` with
/// `Ŝ_eig = diag(s(λ̂)) − T̂_eig(Γ_L − Γ̂)⁻¹R̂_eig`.
pub fn backtransform_gsm(
    lambda_hat: &[f64],
    q_hat: &CMat,
    t_eig: &CMat,
    r_eig: &CMat,
    gamma_hat: &CMat,
    gamma_l: &CMat,
) -> Result<Gsm> {
    let n = lambda_hat.len();
    let p = gamma_hat.nrows();
    if q_hat.shape() != (n, n) || t_eig.shape() != (n, p) || r_eig.shape() != (p, n) || gamma_l.shape() != (p, p) {
        return Err(Error::DimensionMismatch("back-transform block shapes".into()));
    }
    let m = gamma_l - gamma_hat;
    let rc = rcond(&m);
    if !(rc * TERMINATION_COND_LIMIT > 1.0) {
        return Err(Error::ResonantTermination(if rc > 0.0 { 1.0 / rc } else { f64::INFINITY }));
    }
    let inv = m.try_inverse().ok_or(Error::ResonantTermination(f64::INFINITY))?;
    let s0 = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, lambda_hat.iter().map(|&l| lambda_to_s(l))));
    let s_eig = s0 - t_eig * inv * r_eig;
    let eye = CMat::identity(n, n);
    let s = &eye + q_hat * (s_eig - &eye) * q_hat.transpose();
    Gsm::from_blocks(&s, &(q_hat * t_eig), &(r_eig * q_hat.transpose()), gamma_hat)
}

/// One grid point of the reference-plane sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiRecord {
    pub chi_deg: f64,
    pub lambdas: Vec<f64>,
    /// Row norms of `T̃′_eig`.
    pub t_mags: Vec<f64>,
    /// `max_n |λ′_n|`
    pub lambda_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub grid_deg: Vec<f64>,
    pub pole_threshold_deg: f64,
}

impl Default for SweepOptions {
    /// 1° grid on `[0°, 180°)`, 5° pole threshold.
    fn default() -> Self {
        SweepOptions { grid_deg: (0..180).map(|d| d as f64).collect(), pole_threshold_deg: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSweep {
    pub records: Vec<ChiRecord>,
    pub chi_max_deg: f64,
    /// `(χ_max + 90°) mod 180°`
    pub chi_star_deg: f64,
    /// Grid point with the smallest `λ̄`, reported for comparison.
    pub chi_argmin_deg: f64,
    /// Eigenvalue poles (`λ → ∞`) located between grid points.
    pub poles_deg: Vec<f64>,
    /// A pole lies within the threshold of `χ*`.
    pub pole_near: bool,
    /// `λ̄` does not vary over the grid.
    pub flat: bool,
    pub target: RealizationTarget,
}

impl ChiSweep {
    pub fn lambda_bar_at(&self, chi_deg: f64) -> Option<f64> {
        self.records.iter().find(|r| r.chi_deg == chi_deg).map(|r| r.lambda_bar)
    }

    /// `chi_deg,lambda1,lambda2,...,|t1|,|t2|,...`
    pub fn to_csv(&self) -> String {
        let n = self.records.first().map(|r| r.lambdas.len()).unwrap_or(0);
        let mut out = String::from("chi_deg");
        for i in 1..=n {
            out.push_str(&format!(",lambda{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",|t{i}|"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{}", r.chi_deg));
            for l in &r.lambdas {
                out.push_str(&format!(",{l:.12e}"));
            }
            for t in &r.t_mags {
                out.push_str(&format!(",{t:.12e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn circular_distance_deg(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// Sweeps the port reference plane over `opts.grid_deg` and selects
/// `χ* = χ_max + 90°` (mod 180°), where `χ_max` maximizes `λ̄`.
pub fn chi_sweep(gsm: &Gsm, gamma_l: &CMat, opts: &SweepOptions) -> Result<ChiSweep> {
    if opts.grid_deg.is_empty() {
        return Err(Error::InvalidInput("χ grid is empty".into()));
    }
    let mut records = Vec::with_capacity(opts.grid_deg.len());
    let mut phases: Vec<(f64, Vec<f64>)> = Vec::with_capacity(opts.grid_deg.len());
    for &chi_deg in &opts.grid_deg {
        let chi = chi_deg.to_radians();
        let (shifted, _) = apply_phase_shift(gsm, &CMat::zeros(0, 0), chi);
        let s0 = match terminate(&shifted, gamma_l) {
            Ok(s) => s,
            Err(Error::ResonantTermination(_)) => continue,
            Err(e) => return Err(e),
        };
        let eig = eig_terminated(&s0)?;
        let t_eig = eig.q.transpose() * shifted.t();
        let lambdas = eig.real_lambdas();
        let lambda_bar = lambdas.iter().map(|l| l.abs()).fold(0.0, f64::max);
        phases.push((chi_deg, eig.s_values.iter().map(|s| s.arg()).collect()));
        records.push(ChiRecord {
            chi_deg,
            t_mags: t_eig.row_iter().map(|r| r.norm()).collect(),
            lambdas,
            lambda_bar,
        });
    }
    if records.is_empty() {
        return Err(Error::SweepFailed);
    }
    let by = |better: fn(f64, f64) -> bool| {
        records
            .iter()
            .fold(&records[0], |acc, r| if better(r.lambda_bar, acc.lambda_bar) { r } else { acc })
            .chi_deg
    };
    let chi_max_deg = by(|a, b| a > b);
    let chi_argmin_deg = by(|a, b| a < b);
    let chi_star_deg = (chi_max_deg + 90.0).rem_euclid(180.0);
    let (lo, hi) = records
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.lambda_bar), hi.max(r.lambda_bar)));
    let flat = (hi - lo) <= 1e-9 * hi.abs().max(1.0);

    let poles_deg = locate_poles(&phases);
    let pole_near = poles_deg
        .iter()
        .any(|&p| circular_distance_deg(p, chi_star_deg, 180.0) <= opts.pole_threshold_deg);
    let target = realization_target(gsm, gamma_l, chi_star_deg.to_radians())?;
    Ok(ChiSweep { records, chi_max_deg, chi_star_deg, chi_argmin_deg, poles_deg, pole_near, flat, target })
}

/// A pole is where an eigenvalue `s = e^{jθ}` passes through `θ = 0`
/// (`λ = cot(θ/2) → ±∞`). Eigenvalues are matched between neighbouring grid
/// points by proximity on the unit circle; the sweep is 180°-periodic.
fn locate_poles(phases: &[(f64, Vec<f64>)]) -> Vec<f64> {
    let mut poles = Vec::new();
    let m = phases.len();
    if m < 2 {
        return poles;
    }
    for i in 0..m {
        let (c0, a0) = &phases[i];
        let (c1_raw, a1) = &phases[(i + 1) % m];
        let c1 = if i + 1 == m { c1_raw + 180.0 } else { *c1_raw };
        if c1 - c0 > 90.0 {
            continue;
        }
        let mut used = vec![false; a1.len()];
        for &p in a0 {
            if p == 0.0 {
                poles.push(c0.rem_euclid(180.0));
                continue;
            }
            let ang_dist = |q: f64| {
                let d = (p - q).rem_euclid(2.0 * PI);
                d.min(2.0 * PI - d)
            };
            let Some(j) = (0..a1.len())
                .filter(|&j| !used[j])
                .min_by(|&x, &y| ang_dist(a1[x]).partial_cmp(&ang_dist(a1[y])).unwrap_or(std::cmp::Ordering::Equal))
            else {
                continue;
            };
            used[j] = true;
            let q = a1[j];
            if q != 0.0 && p.signum() != q.signum() && p.abs() < PI / 2.0 && q.abs() < PI / 2.0 {
                poles.push((c0 + (c1 - c0) * p / (p - q)).rem_euclid(180.0));
            }
        }
    }
    poles
}

/// Toy element with two rotated modes and one port: per-mode detuning
/// `λ₁, λ₂`, rotation `φ`, signed port coupling amplitudes and the phase of
/// the port reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyElement {
    pub rotation_deg: f64,
    pub lambdas: [f64; 2],
    pub port_amplitudes: [f64; 2],
    pub port_phase_deg: f64,
}

impl ToyElement {
    /// GSM in the common modal basis. Its terminated response is
    /// `Q diag(s(λ)) Qᵀ` with `Q = [[cos φ, −sin φ], [sin φ, cos φ]]`.
    pub fn gsm(&self, gamma_l: C64) -> Result<Gsm> {
        let [a1, a2] = self.port_amplitudes;
        let a_sq = a1 * a1 + a2 * a2;
        if !(a_sq <= 1.0) {
            return Err(Error::InvalidInput(format!("port coupling norm² {a_sq} exceeds 1")));
        }
        let g = C64::from_polar((1.0 - a_sq).sqrt(), self.port_phase_deg.to_radians());
        let w = gamma_l - g;
        if w.norm() < 1e-12 {
            return Err(Error::ResonantTermination(f64::INFINITY));
        }
        let d = [lambda_to_s(self.lambdas[0]), lambda_to_s(self.lambdas[1])];
        let mu = gamma_l.conj() * C64::from_polar(1.0, 2.0 * w.arg());
        let t = CMat::from_fn(2, 1, |n, _| {
            C64::from_polar(self.port_amplitudes[n], 0.5 * (d[n].arg() + mu.arg()))
        });
        let s_e = CMat::from_diagonal(&nalgebra::DVector::from_vec(d.to_vec())) - &t * t.transpose() / w;
        let (sn, cs) = self.rotation_deg.to_radians().sin_cos();
        let q = CMat::from_row_slice(2, 2, &[C64::new(cs, 0.0), C64::new(-sn, 0.0), C64::new(sn, 0.0), C64::new(cs, 0.0)]);
        let t_rot = &q * &t;
        Gsm::from_blocks(&(&q * s_e * q.transpose()), &t_rot, &t_rot.transpose(), &CMat::from_element(1, 1, g))
    }

    pub fn snapped(&self, grid: &SnapGrid) -> ToyElement {
        let snap = |x: f64, step: f64| (x / step).round() * step;
        ToyElement {
            rotation_deg: snap(self.rotation_deg, grid.angle_step_deg),
            lambdas: [snap(self.lambdas[0], grid.lambda_step), snap(self.lambdas[1], grid.lambda_step)],
            ..*self
        }
    }
}

/// Discrete parameter grid of the toy element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapGrid {
    pub lambda_step: f64,
    pub angle_step_deg: f64,
}

impl Default for SnapGrid {
    fn default() -> Self {
        SnapGrid { lambda_step: 0.1, angle_step_deg: 1.0 }
    }
}

/// Largest accepted deviation of `Q̃` from a real rotation.
pub const ROTATION_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyFit {
    pub element: ToyElement,
    pub snapped: ToyElement,
    /// `‖Ψ̂ − Ψ̃′‖_F` for the exact parameters.
    pub residual: f64,
    /// The same for the snapped parameters.
    pub snapped_residual: f64,
    pub rotation_deviation: f64,
}

/// Fits a toy element to a two-mode, one-port target. The rotation is read
/// from the (phase-fixed, determinant +1) `Q̃` as `φ = atan2(Q₂₁, Q₁₁)`,
/// which equals `−atan(Q₁₂/Q₁₁)` for `Q₁₁ > 0`.
pub fn fit_toy_element(target: &RealizationTarget, grid: &SnapGrid) -> Result<ToyFit> {
    if target.q.shape() != (2, 2) || target.gamma.shape() != (1, 1) {
        return Err(Error::InvalidDimension("toy element fit needs N = 2 modes and P = 1 port".into()));
    }
    let qi = target.q.map(|z| z.im);
    let mut qr = target.q.map(|z| z.re);
    let deviation = qi.norm().max((qr.transpose() * &qr - DMatrix::<f64>::identity(2, 2)).norm());
    if deviation > ROTATION_TOL {
        return Err(Error::FitInfeasible(deviation));
    }
    let mut t = target.t_eig.clone();
    if qr.determinant() < 0.0 {
        qr.column_mut(1).neg_mut();
        t[(1, 0)] = -t[(1, 0)];
    }
    let rotation_deg = qr[(1, 0)].atan2(qr[(0, 0)]).to_degrees();
    let gamma_l = target.gamma_l[(0, 0)];
    let g = target.gamma[(0, 0)];
    let mu = gamma_l.conj() * C64::from_polar(1.0, 2.0 * (gamma_l - g).arg());
    let amp = |n: usize| {
        let beta = 0.5 * (lambda_to_s(target.lambdas[n]).arg() + mu.arg());
        (t[(n, 0)] * C64::from_polar(1.0, -beta)).re
    };
    let element = ToyElement {
        rotation_deg,
        lambdas: [target.lambdas[0], target.lambdas[1]],
        port_amplitudes: [amp(0), amp(1)],
        port_phase_deg: g.arg().to_degrees(),
    };
    let snapped = element.snapped(grid);
    let reference = target.backtransform()?;
    let residual = frob_norm(&(element.gsm(gamma_l)?.entries - &reference.entries));
    let snapped_residual = frob_norm(&(snapped.gsm(gamma_l)?.entries - &reference.entries));
    Ok(ToyFit { element, snapped, residual, snapped_residual, rotation_deviation: deviation })
}

/// Structured-text report of one element's realization.
pub fn format_report(class: usize, sweep: &ChiSweep, fit: Option<&ToyFit>) -> String {
    let mut out = format!("[class_{class}]\n");
    for (i, l) in sweep.target.lambdas.iter().enumerate() {
        out.push_str(&format!("lambda{} = {l:.9}\n", i + 1));
    }
    out.push_str(&format!("chi_star_deg = {}\n", sweep.chi_star_deg));
    out.push_str(&format!("chi_max_deg = {}\n", sweep.chi_max_deg));
    out.push_str(&format!("chi_argmin_deg = {}\n", sweep.chi_argmin_deg));
    out.push_str(&format!("pole_near = {}\n", sweep.pole_near));
    out.push_str(&format!("flat_sweep = {}\n", sweep.flat));
    match fit {
        Some(f) => {
            out.push_str(&format!("phi_deg = {:.6}\n", f.element.rotation_deg));
            out.push_str(&format!("phi_snapped_deg = {}\n", f.snapped.rotation_deg));
            out.push_str(&format!(
                "lambda_snapped = [{:.1}, {:.1}]\n",
                f.snapped.lambdas[0], f.snapped.lambdas[1]
            ));
            out.push_str(&format!("gsm_residual = {:.12e}\n", f.residual));
            out.push_str(&format!("gsm_residual_snapped = {:.12e}\n", f.snapped_residual));
        }
        None => out.push_str("fit = \"unavailable\"\n"),
    }
    out
}
