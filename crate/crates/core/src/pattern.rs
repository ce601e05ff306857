//! Far-field mapping, the multi-beam penalty cost and reporting metrics.
//!
//! Angles are `(θ, φ)` in degrees. Principal-plane cuts use signed `θ` in
//! `[−90°, 90°]` at fixed `φ`; the spherical unit vectors are evaluated with
//! the signed angle directly, so `θ̂` and `φ̂` stay continuous through
//! broadside.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// Complex 2-vector `(E_θ, E_φ)`.
pub type Field2 = [C64; 2];

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Circular polarization vectors in the `(θ̂, φ̂)` basis for an `e^{+jωt}`
/// phasor convention. Flip the sign of the imaginary parts here to swap the
/// handedness convention for the whole toolkit.
pub const LHCP: Field2 = [C64::new(H, 0.0), C64::new(0.0, -H)];
pub const RHCP: Field2 = [C64::new(H, 0.0), C64::new(0.0, H)];

/// Component of `field` along the polarization vector `u`: `uᴴ F`.
#[inline]
pub fn project(u: &Field2, field: &Field2) -> C64 {
    u[0].conj() * field[0] + u[1].conj() * field[1]
}

/// Observation direction in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

impl Angle {
    pub const fn new(theta_deg: f64, phi_deg: f64) -> Self {
        Angle { theta_deg, phi_deg }
    }

    /// Lookup key at micro-degree resolution.
    pub fn key(&self) -> (i64, i64) {
        (
            (self.theta_deg * 1e6).round() as i64,
            (self.phi_deg * 1e6).round() as i64,
        )
    }

    /// `(r̂, θ̂, φ̂)` as Cartesian triples.
    pub fn unit_vectors(&self) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let (t, p) = (self.theta_deg.to_radians(), self.phi_deg.to_radians());
        let (st, ct, sp, cp) = (t.sin(), t.cos(), p.sin(), p.cos());
        ([st * cp, st * sp, ct], [ct * cp, ct * sp, -st], [-sp, cp, 0.0])
    }
}

/// Full-sphere quadrature grid: `θ ∈ [0°, 180°]`, `φ ∈ [0°, 360°)` with
/// `sin θ` weights (rectangle rule in both directions).
pub fn sphere_grid(theta_step_deg: f64, phi_step_deg: f64) -> Vec<(Angle, f64)> {
    let nt = (180.0 / theta_step_deg).round() as usize;
    let np = (360.0 / phi_step_deg).round() as usize;
    let (dt, dp) = (theta_step_deg.to_radians(), phi_step_deg.to_radians());
    let mut out = Vec::with_capacity((nt + 1) * np);
    for i in 0..=nt {
        let theta = i as f64 * theta_step_deg;
        let w = theta.to_radians().sin() * dt * dp;
        for j in 0..np {
            out.push((Angle::new(theta, j as f64 * phi_step_deg), w));
        }
    }
    out
}

/// Single-element modal patterns on a full-sphere grid plus the element
/// positions; the pattern of element `k` is the stored pattern times
/// `e^{+j2π r̂·r_k}` (positions in wavelengths).
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePatterns {
    pub theta_step_deg: f64,
    pub phi_step_deg: f64,
    /// Indexed `[mode · n_points + point]`.
    pub element_patterns: Vec<Field2>,
    pub positions: Vec<[f64; 3]>,
}

impl SpherePatterns {
    pub fn grid(&self) -> Vec<(Angle, f64)> {
        sphere_grid(self.theta_step_deg, self.phi_step_deg)
    }

    pub fn n_points(&self) -> usize {
        self.grid().len()
    }

    /// Radiated power of modal coefficients `f` (length `KN`) by
    /// quadrature of `|F_θ|² + |F_φ|²`.
    pub fn radiated_power(&self, f: &[C64], n_modes: usize) -> f64 {
        let grid = self.grid();
        let np = grid.len();
        let k = self.positions.len();
        let mut total = 0.0;
        for (i, (ang, w)) in grid.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let (rh, _, _) = ang.unit_vectors();
            let mut acc = [C64::new(0.0, 0.0); 2];
            for e in 0..k {
                let pos = self.positions[e];
                let ph = C64::from_polar(1.0, 2.0 * PI * (rh[0] * pos[0] + rh[1] * pos[1] + rh[2] * pos[2]));
                let mut loc = [C64::new(0.0, 0.0); 2];
                for n in 0..n_modes {
                    let pat = self.element_patterns[n * np + i];
                    let coef = f[e * n_modes + n];
                    loc[0] += pat[0] * coef;
                    loc[1] += pat[1] * coef;
                }
                acc[0] += loc[0] * ph;
                acc[1] += loc[1] * ph;
            }
            total += w * (acc[0].norm_sqr() + acc[1].norm_sqr());
        }
        total
    }
}

/// Modal far fields `F_CM,n⁽ᵏ⁾(ξ)` sampled on a list of angles.
#[derive(Debug, Clone)]
pub struct ModalFarFieldSet {
    pub n_elements: usize,
    pub n_modes: usize,
    pub angles: Vec<Angle>,
    /// Indexed `[(k·N + n)·A + a]`.
    pub samples: Vec<Field2>,
    pub sphere: Option<SpherePatterns>,
    index: HashMap<(i64, i64), usize>,
}

impl PartialEq for ModalFarFieldSet {
    fn eq(&self, other: &Self) -> bool {
        self.n_elements == other.n_elements
            && self.n_modes == other.n_modes
            && self.angles == other.angles
            && self.samples == other.samples
            && self.sphere == other.sphere
    }
}

impl ModalFarFieldSet {
    pub fn new(
        n_elements: usize,
        n_modes: usize,
        angles: Vec<Angle>,
        samples: Vec<Field2>,
        sphere: Option<SpherePatterns>,
    ) -> Result<Self> {
        if samples.len() != n_elements * n_modes * angles.len() {
            return Err(Error::DimensionMismatch(format!(
                "far-field samples: {} values for K={n_elements}, N={n_modes}, A={}",
                samples.len(),
                angles.len()
            )));
        }
        if samples.iter().any(|s| !(s[0].re.is_finite() && s[0].im.is_finite() && s[1].re.is_finite() && s[1].im.is_finite())) {
            return Err(Error::InvalidInput("far-field samples are not finite".into()));
        }
        if let Some(sp) = &sphere {
            if sp.positions.len() != n_elements || sp.element_patterns.len() != n_modes * sp.n_points() {
                return Err(Error::DimensionMismatch("sphere pattern shapes".into()));
            }
        }
        let index = angles.iter().enumerate().map(|(i, a)| (a.key(), i)).collect();
        Ok(ModalFarFieldSet { n_elements, n_modes, angles, samples, sphere, index })
    }

    pub fn angle_index(&self, angle: &Angle) -> Result<usize> {
        self.index.get(&angle.key()).copied().ok_or(Error::MissingSample {
            theta: angle.theta_deg,
            phi: angle.phi_deg,
        })
    }

    #[inline]
    pub fn sample(&self, element: usize, mode: usize, angle_idx: usize) -> Field2 {
        self.samples[(element * self.n_modes + mode) * self.angles.len() + angle_idx]
    }

    /// Row vector `b` with `b·f = uᴴ F(ξ)` for coefficients `f` of length `KN`.
    pub fn projection_row(&self, u: &Field2, angle_idx: usize) -> Vec<C64> {
        let mut row = Vec::with_capacity(self.n_elements * self.n_modes);
        for k in 0..self.n_elements {
            for n in 0..self.n_modes {
                row.push(project(u, &self.sample(k, n, angle_idx)));
            }
        }
        row
    }
}

/// Far field of one excitation state sampled on a list of angles.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub angles: Vec<Angle>,
    pub values: Vec<Field2>,
}

impl FieldSamples {
    pub fn at(&self, angle: &Angle) -> Result<Field2> {
        let key = angle.key();
        self.angles
            .iter()
            .position(|a| a.key() == key)
            .map(|i| self.values[i])
            .ok_or(Error::MissingSample { theta: angle.theta_deg, phi: angle.phi_deg })
    }

    pub fn scaled(&self, s: f64) -> FieldSamples {
        FieldSamples {
            angles: self.angles.clone(),
            values: self.values.iter().map(|v| [v[0] * s, v[1] * s]).collect(),
        }
    }
}

/// `F_s(ξ) = Σ_k Σ_n F_CM,n⁽ᵏ⁾(ξ) f_{n,s}⁽ᵏ⁾` for every state `s`.
pub fn far_field(f: &CMat, fields: &ModalFarFieldSet, angles: &[Angle]) -> Result<Vec<FieldSamples>> {
    let kn = fields.n_elements * fields.n_modes;
    if f.nrows() != kn {
        return Err(Error::DimensionMismatch(format!(
            "coefficients have {} rows, far-field set has KN = {kn}",
            f.nrows()
        )));
    }
    let idx = angles.iter().map(|a| fields.angle_index(a)).collect::<Result<Vec<_>>>()?;
    Ok((0..f.ncols())
        .map(|s| {
            let values = idx
                .iter()
                .map(|&ai| {
                    let mut acc = [C64::new(0.0, 0.0); 2];
                    for k in 0..fields.n_elements {
                        for n in 0..fields.n_modes {
                            let smp = fields.sample(k, n, ai);
                            let coef = f[(k * fields.n_modes + n, s)];
                            acc[0] += smp[0] * coef;
                            acc[1] += smp[1] * coef;
                        }
                    }
                    acc
                })
                .collect();
            FieldSamples { angles: angles.to_vec(), values }
        })
        .collect())
}

/// Dead-zone linear penalty: `0` for `x ≤ 1`, `x − 1` otherwise.
pub fn penalty_gamma(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::Domain(format!("penalty argument {x} is negative")));
    }
    Ok(if x <= 1.0 { 0.0 } else { x - 1.0 })
}

/// dB target → linear amplitude ratio.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Beam specification σ.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpec {
    pub target: Angle,
    pub u_d: Field2,
    pub u_x: Field2,
    pub sll_db: f64,
    pub xpr_db: f64,
    pub side_set: Vec<Angle>,
    pub cross_set: Vec<Angle>,
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        let norm = |u: &Field2| (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
        let cross = project(&self.u_d, &self.u_x).norm();
        if (norm(&self.u_d) - 1.0).abs() > 1e-12 || (norm(&self.u_x) - 1.0).abs() > 1e-12 || cross > 1e-12 {
            return Err(Error::InvalidInput("polarization vectors are not orthonormal".into()));
        }
        if self.side_set.iter().any(|a| a.key() == self.target.key()) {
            return Err(Error::InvalidInput("target direction lies in the sidelobe set".into()));
        }
        if !(self.sll_db < 0.0) || !(self.xpr_db < 0.0) {
            return Err(Error::InvalidInput("SLL and XPR targets must be negative dB".into()));
        }
        Ok(())
    }

    /// Every angle the cost needs: target, sidelobe and cross-pol sets.
    pub fn sample_angles(&self) -> Vec<Angle> {
        let mut out = vec![self.target];
        out.extend(self.side_set.iter().copied());
        out.extend(self.cross_set.iter().copied());
        out
    }
}

/// Main-beam magnitude below which the penalty ratios are undefined.
pub const ZERO_BEAM_EPS: f64 = 1e-30;
/// Cost returned for a vanishing main beam when `α > 0`.
pub const ZERO_BEAM_SENTINEL: f64 = 1e30;

/// Projected samples of one beam: `uᴰ F(ξ_t)`, `uᴰ F` on `M_S`, `uˣ F` on `M_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamProjections {
    pub main: C64,
    pub side: Vec<C64>,
    pub cross: Vec<C64>,
}

/// Gradient of the beam cost with respect to the projections
/// (`∂p/∂Re z + j ∂p/∂Im z`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionGradient {
    pub main: C64,
    pub side: Vec<C64>,
    pub cross: Vec<C64>,
}

fn penalty_sum(values: &[C64], main_mag: f64, limit: f64) -> f64 {
    values
        .iter()
        .map(|z| {
            let y = z.norm() / (main_mag * limit);
            if y > 1.0 {
                (y - 1.0) * (y - 1.0)
            } else {
                0.0
            }
        })
        .sum()
}

/// `p_α` evaluated on projected samples.
pub fn projection_cost(p: &BeamProjections, sll_lin: f64, xpr_lin: f64, alpha: f64) -> f64 {
    let main_mag = p.main.norm();
    let gain = -main_mag * main_mag;
    if alpha == 0.0 {
        return gain;
    }
    if main_mag < ZERO_BEAM_EPS {
        return ZERO_BEAM_SENTINEL;
    }
    gain + alpha * (penalty_sum(&p.side, main_mag, sll_lin) + penalty_sum(&p.cross, main_mag, xpr_lin))
}

/// `p_α` and its gradient with respect to the projections.
pub fn projection_cost_grad(
    p: &BeamProjections,
    sll_lin: f64,
    xpr_lin: f64,
    alpha: f64,
) -> Result<(f64, ProjectionGradient)> {
    let main_mag = p.main.norm();
    let mut grad = ProjectionGradient {
        main: p.main * -2.0,
        side: vec![C64::new(0.0, 0.0); p.side.len()],
        cross: vec![C64::new(0.0, 0.0); p.cross.len()],
    };
    let mut cost = -main_mag * main_mag;
    if alpha == 0.0 {
        return Ok((cost, grad));
    }
    if main_mag < ZERO_BEAM_EPS {
        return Err(Error::GradientUndefined);
    }
    let unit_main = p.main / main_mag;
    let mut accumulate = |values: &[C64], out: &mut [C64], limit: f64| {
        for (z, g) in values.iter().zip(out.iter_mut()) {
            let mag = z.norm();
            let y = mag / (main_mag * limit);
            if y > 1.0 {
                cost += alpha * (y - 1.0) * (y - 1.0);
                let dy = 2.0 * alpha * (y - 1.0);
                *g = (z / mag) * (dy / (main_mag * limit));
                grad.main -= unit_main * (dy * y / main_mag);
            }
        }
    };
    accumulate(&p.side, &mut grad.side, sll_lin);
    accumulate(&p.cross, &mut grad.cross, xpr_lin);
    Ok((cost, grad))
}

/// Projections of a sampled far field for one beam.
pub fn beam_projections(field: &FieldSamples, sigma: &BeamSpec) -> Result<BeamProjections> {
    let main = project(&sigma.u_d, &field.at(&sigma.target)?);
    let side = sigma
        .side_set
        .iter()
        .map(|a| Ok(project(&sigma.u_d, &field.at(a)?)))
        .collect::<Result<Vec<_>>>()?;
    let cross = sigma
        .cross_set
        .iter()
        .map(|a| Ok(project(&sigma.u_x, &field.at(a)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(BeamProjections { main, side, cross })
}

/// Auxiliary cost `p_α(F, σ)` of one far field.
pub fn beam_cost(field: &FieldSamples, sigma: &BeamSpec, alpha: f64) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::Domain("penalty weight α must be nonnegative".into()));
    }
    let p = beam_projections(field, sigma)?;
    Ok(projection_cost(&p, db_to_amplitude(sigma.sll_db), db_to_amplitude(sigma.xpr_db), alpha))
}

/// `Σ_s p_α(F_s, σ_s)`.
pub fn total_cost(fields: &[FieldSamples], beams: &[BeamSpec], alpha: f64) -> Result<f64> {
    if fields.len() != beams.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} far fields for {} beams",
            fields.len(),
            beams.len()
        )));
    }
    let mut total = 0.0;
    for (f, b) in fields.iter().zip(beams) {
        total += beam_cost(f, b, alpha)?;
    }
    Ok(total)
}

/// Reporting metrics of one beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamMetrics {
    pub directivity_dbi: f64,
    pub sll_db: f64,
    pub xpr_db: f64,
}

impl BeamMetrics {
    pub fn passes(&self, sigma: &BeamSpec) -> bool {
        self.sll_db <= sigma.sll_db && self.xpr_db <= sigma.xpr_db
    }
}

/// Main-beam directivity (sphere quadrature), worst sidelobe and worst
/// cross-polarization level of one state with coefficients `f`.
pub fn metrics(field: &FieldSamples, sigma: &BeamSpec, fields: &ModalFarFieldSet, f: &[C64]) -> Result<BeamMetrics> {
    let p = beam_projections(field, sigma)?;
    let main = p.main.norm();
    if main < ZERO_BEAM_EPS {
        return Err(Error::MetricUndefined);
    }
    let sphere = fields
        .sphere
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("directivity needs full-sphere patterns".into()))?;
    if f.len() != fields.n_elements * fields.n_modes {
        return Err(Error::DimensionMismatch("coefficient vector length".into()));
    }
    let prad = sphere.radiated_power(f, fields.n_modes);
    if !(prad > 0.0) {
        return Err(Error::MetricUndefined);
    }
    let ratio_db = |v: &[C64]| {
        v.iter()
            .map(|z| 20.0 * (z.norm() / main).log10())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Ok(BeamMetrics {
        directivity_dbi: 10.0 * (4.0 * PI * main * main / prad).log10(),
        sll_db: ratio_db(&p.side),
        xpr_db: ratio_db(&p.cross),
    })
}

/// Precomputed projection rows for one beam, used on the optimizer's hot
/// path: `z = B f_s` gives all projections of state `s` at once.
#[derive(Debug, Clone)]
pub struct BeamProjector {
    rows: CMat,
    n_side: usize,
    n_cross: usize,
    /// Limits used by the cost, possibly tightened by a margin.
    pub sll_lin: f64,
    pub xpr_lin: f64,
    /// Limits of the beam specification itself.
    pub target_sll_lin: f64,
    pub target_xpr_lin: f64,
}

impl BeamProjector {
    pub fn new(sigma: &BeamSpec, fields: &ModalFarFieldSet) -> Result<Self> {
        sigma.validate()?;
        let kn = fields.n_elements * fields.n_modes;
        let m = 1 + sigma.side_set.len() + sigma.cross_set.len();
        let mut rows = CMat::zeros(m, kn);
        let mut put = |r: usize, u: &Field2, a: &Angle| -> Result<()> {
            let row = fields.projection_row(u, fields.angle_index(a)?);
            for (j, v) in row.into_iter().enumerate() {
                rows[(r, j)] = v;
            }
            Ok(())
        };
        put(0, &sigma.u_d, &sigma.target)?;
        for (i, a) in sigma.side_set.iter().enumerate() {
            put(1 + i, &sigma.u_d, a)?;
        }
        for (i, a) in sigma.cross_set.iter().enumerate() {
            put(1 + sigma.side_set.len() + i, &sigma.u_x, a)?;
        }
        Ok(BeamProjector {
            rows,
            n_side: sigma.side_set.len(),
            n_cross: sigma.cross_set.len(),
            sll_lin: db_to_amplitude(sigma.sll_db),
            xpr_lin: db_to_amplitude(sigma.xpr_db),
            target_sll_lin: db_to_amplitude(sigma.sll_db),
            target_xpr_lin: db_to_amplitude(sigma.xpr_db),
        })
    }

    /// Penalizes against limits `margin_db` below the specified targets.
    pub fn with_margin(mut self, margin_db: f64) -> Self {
        let scale = db_to_amplitude(-margin_db);
        self.sll_lin = self.target_sll_lin * scale;
        self.xpr_lin = self.target_xpr_lin * scale;
        self
    }

    pub fn project(&self, f_col: &CMat) -> BeamProjections {
        let z = &self.rows * f_col;
        BeamProjections {
            main: z[(0, 0)],
            side: (0..self.n_side).map(|i| z[(1 + i, 0)]).collect(),
            cross: (0..self.n_cross).map(|i| z[(1 + self.n_side + i, 0)]).collect(),
        }
    }

    pub fn cost(&self, f_col: &CMat, alpha: f64) -> f64 {
        projection_cost(&self.project(f_col), self.sll_lin, self.xpr_lin, alpha)
    }

    /// Cost and gradient with respect to the `KN` coefficients of one state.
    pub fn cost_grad(&self, f_col: &CMat, alpha: f64) -> Result<(f64, CMat)> {
        let (cost, g) = projection_cost_grad(&self.project(f_col), self.sll_lin, self.xpr_lin, alpha)?;
        let mut gz = CMat::zeros(self.rows.nrows(), 1);
        gz[(0, 0)] = g.main;
        for (i, v) in g.side.iter().enumerate() {
            gz[(1 + i, 0)] = *v;
        }
        for (i, v) in g.cross.iter().enumerate() {
            gz[(1 + self.n_side + i, 0)] = *v;
        }
        Ok((cost, self.rows.adjoint() * gz))
    }

    /// Largest penalty argument (`γ` input) over both sample sets, against
    /// the specified targets.
    pub fn worst_ratio(&self, f_col: &CMat) -> f64 {
        let p = self.project(f_col);
        let m = p.main.norm();
        let side = p.side.iter().map(|z| z.norm() / (m * self.target_sll_lin));
        let cross = p.cross.iter().map(|z| z.norm() / (m * self.target_xpr_lin));
        side.chain(cross).fold(0.0, f64::max)
    }
}

/// `Ξ(θ_A, θ_B)`: integer-degree angles at `φ = 0°` with
/// `−90° ≤ θ ≤ θ_A` or `θ_B ≤ θ ≤ 90°`.
pub fn sidelobe_set(theta_a: i32, theta_b: i32) -> Vec<Angle> {
    (-90..=90)
        .filter(|&t| t <= theta_a || t >= theta_b)
        .map(|t| Angle::new(t as f64, 0.0))
        .collect()
}

/// `Ξ₀`: every integer degree in `[−90°, 90°]` at `φ = 0°`.
pub fn full_cut() -> Vec<Angle> {
    (-90..=90).map(|t| Angle::new(t as f64, 0.0)).collect()
}

/// Main-beam bands `(θ_t, θ_A, θ_B)` of the 13-beam scan table.
pub const SCAN_TABLE_BANDS: [(i32, i32, i32); 13] = [
    (-60, -90, -25),
    (-50, -75, -30),
    (-40, -60, -25),
    (-30, -50, -15),
    (-20, -35, -5),
    (-10, -25, 5),
    (0, -15, 15),
    (10, -5, 25),
    (20, 5, 35),
    (30, 15, 50),
    (40, 25, 60),
    (50, 30, 75),
    (60, 25, 90),
];

fn lhcp_beam(theta_t: f64, side_set: Vec<Angle>, sll_db: f64, xpr_db: f64) -> BeamSpec {
    BeamSpec {
        target: Angle::new(theta_t, 0.0),
        u_d: LHCP,
        u_x: RHCP,
        sll_db,
        xpr_db,
        side_set,
        cross_set: full_cut(),
    }
}

/// The 13-beam φ = 0° scan table: θ_t from −60° to 60° in 10° steps,
/// LHCP desired, SLL −15 dB, XPR −30 dB, cross-pol checked on `Ξ₀`.
pub fn scan_table() -> Vec<BeamSpec> {
    SCAN_TABLE_BANDS
        .iter()
        .map(|&(t, a, b)| lhcp_beam(t as f64, sidelobe_set(a, b), -15.0, -30.0))
        .collect()
}

/// Beam table whose main-beam bands come from the Dolph–Chebyshev
/// null-to-null width of a `columns`-element line at the SLL target,
/// widened by `width_factor`, and rounded outward to integer degrees.
pub fn chebyshev_band_table(
    scan_deg: &[f64],
    columns: usize,
    spacing_wavelengths: f64,
    sll_db: f64,
    xpr_db: f64,
    width_factor: f64,
) -> Result<Vec<BeamSpec>> {
    let half = crate::chebyshev::null_to_null_half_width_u(columns, sll_db, spacing_wavelengths)? * width_factor;
    scan_deg
        .iter()
        .map(|&t| {
            if !(-90.0..=90.0).contains(&t) {
                return Err(Error::Config(format!("scan angle {t}° outside [−90°, 90°]")));
            }
            let u = t.to_radians().sin();
            let lo = u - half;
            let hi = u + half;
            let theta_a = if lo <= -1.0 { -91 } else { lo.asin().to_degrees().floor() as i32 };
            let theta_b = if hi >= 1.0 { 91 } else { hi.asin().to_degrees().ceil() as i32 };
            Ok(lhcp_beam(t, sidelobe_set(theta_a, theta_b), sll_db, xpr_db))
        })
        .collect()
}

/// CSV pattern cut of one state: `theta_deg,phi_deg,co_dB,cross_dB`, with
/// levels as partial directivities (dBi) relative to `prad`.
pub fn pattern_cut_csv(field: &FieldSamples, sigma: &BeamSpec, prad: f64) -> String {
    let mut out = String::from("theta_deg,phi_deg,co_dB,cross_dB\n");
    let db = |z: C64| 10.0 * (4.0 * PI * z.norm_sqr() / prad).log10();
    for (a, v) in field.angles.iter().zip(&field.values) {
        out.push_str(&format!(
            "{},{},{:.6},{:.6}\n",
            a.theta_deg,
            a.phi_deg,
            db(project(&sigma.u_d, v)),
            db(project(&sigma.u_x, v))
        ));
    }
    out
}
