//! Desk-scale array model: crossed Hertzian dipoles on a regular grid in
//! free space, with closed-form mutual coupling and modal far fields.

use std::f64::consts::PI;

use crate::coupled::CouplingMatrix;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::pattern::{full_cut, Angle, Field2, ModalFarFieldSet, SpherePatterns};

/// `√(3/8π)`: unit radiated power for a Hertzian-dipole pattern.
pub const DIPOLE_NORM: f64 = 0.345_494_149_471_335_5;

/// Regular `R × C` grid of crossed-dipole elements with spacings in
/// wavelengths. Element `k = c·R + r` sits at `(c·Dx, r·Dy, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayModel {
    pub rows: usize,
    pub cols: usize,
    pub dx: f64,
    pub dy: f64,
    pub n_ports: usize,
}

impl ArrayModel {
    pub fn new(rows: usize, cols: usize, dx: f64, dy: f64, n_ports: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || n_ports == 0 {
            return Err(Error::InvalidDimension(format!(
                "grid {rows}×{cols} with {n_ports} ports"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(Error::InvalidInput(format!("spacings ({dx}, {dy}) must be positive")));
        }
        Ok(ArrayModel { rows, cols, dx, dy, n_ports })
    }

    /// Half-wavelength grid with one port per element.
    pub fn half_wave(rows: usize, cols: usize) -> Result<Self> {
        ArrayModel::new(rows, cols, 0.5, 0.5, 1)
    }

    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn n_modes(&self) -> usize {
        2
    }

    /// `(column, row)` of element `k`.
    pub fn grid_index(&self, k: usize) -> (usize, usize) {
        (k / self.rows, k % self.rows)
    }

    pub fn position(&self, k: usize) -> [f64; 3] {
        let (c, r) = self.grid_index(k);
        [c as f64 * self.dx, r as f64 * self.dy, 0.0]
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.n_elements()).map(|k| self.position(k)).collect()
    }

    /// Mode 0 is the x̂-dipole, mode 1 the ŷ-dipole.
    pub fn mode_polarization(&self, n: usize) -> [f64; 3] {
        if n == 0 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        }
    }

    /// Modal scattering of the unloaded element: resonant modes, `S₀ = −I`.
    pub fn initial_modal_scattering(&self) -> CMat {
        -CMat::identity(2, 2)
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Normalized mutual impedance between Hertzian dipoles `p1` and `p2`
/// separated by `sep` wavelengths; the self radiation resistance is 1.
pub fn hertzian_mutual_impedance(p1: &[f64; 3], p2: &[f64; 3], sep: &[f64; 3]) -> Result<C64> {
    let r = dot(sep, sep).sqrt();
    if r == 0.0 {
        return Err(Error::Singularity("mutual impedance at zero separation".into()));
    }
    let rh = [sep[0] / r, sep[1] / r, sep[2] / r];
    let x = 2.0 * PI * r;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let a = C64::new(1.0 - inv2, -inv);
    let b = C64::new(-1.0 + 3.0 * inv2, 3.0 * inv);
    let bracket = a * dot(p1, p2) + b * (dot(p1, &rh) * dot(p2, &rh));
    Ok(C64::new(0.0, 1.5) * C64::from_polar(1.0, -x) * inv * bracket)
}

/// Assembly path for [`coupling_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    Direct,
    Toeplitz,
}

fn offset_block(model: &ArrayModel, dc: isize, dr: isize) -> Result<[[C64; 2]; 2]> {
    let mut blk = [[C64::new(0.0, 0.0); 2]; 2];
    if dc == 0 && dr == 0 {
        return Ok(blk);
    }
    let sep = [dc as f64 * model.dx, dr as f64 * model.dy, 0.0];
    for (n, row) in blk.iter_mut().enumerate() {
        for (m, v) in row.iter_mut().enumerate() {
            let z = hertzian_mutual_impedance(&model.mode_polarization(n), &model.mode_polarization(m), &sep)?;
            *v = z * 0.5;
        }
    }
    Ok(blk)
}

/// Number of distinct relative-offset blocks on the grid.
pub fn toeplitz_block_count(model: &ArrayModel) -> usize {
    (2 * model.rows - 1) * (2 * model.cols - 1)
}

/// Global coupling matrix with `G⁽ᵏ'ˡ⁾ = ½ Z(r_k − r_l)`.
pub fn coupling_matrix(model: &ArrayModel, mode: CouplingMode) -> Result<CouplingMatrix> {
    let k_tot = model.n_elements();
    let (rows, cols) = (model.rows as isize, model.cols as isize);
    let mut g = CMat::zeros(2 * k_tot, 2 * k_tot);
    let table = match mode {
        CouplingMode::Direct => None,
        CouplingMode::Toeplitz => {
            let mut t = Vec::with_capacity(toeplitz_block_count(model));
            for dc in -(cols - 1)..cols {
                for dr in -(rows - 1)..rows {
                    t.push(offset_block(model, dc, dr)?);
                }
            }
            Some(t)
        }
    };
    for k in 0..k_tot {
        let (ck, rk) = model.grid_index(k);
        for l in 0..k_tot {
            if k == l {
                continue;
            }
            let (cl, rl) = model.grid_index(l);
            let dc = ck as isize - cl as isize;
            let dr = rk as isize - rl as isize;
            let blk = match &table {
                None => offset_block(model, dc, dr)?,
                Some(t) => t[((dc + cols - 1) * (2 * rows - 1) + dr + rows - 1) as usize],
            };
            for n in 0..2 {
                for m in 0..2 {
                    g[(2 * k + n, 2 * l + m)] = blk[n][m];
                }
            }
        }
    }
    CouplingMatrix::from_dense(g, k_tot, 2)
}

/// Unit-power Hertzian dipole pattern `√(3/8π)(p̂·θ̂, p̂·φ̂)`.
pub fn dipole_pattern(p: &[f64; 3], angle: &Angle) -> Field2 {
    let (_, th, ph) = angle.unit_vectors();
    [
        C64::new(DIPOLE_NORM * dot(p, &th), 0.0),
        C64::new(DIPOLE_NORM * dot(p, &ph), 0.0),
    ]
}

/// `F_CM,n⁽ᵏ⁾(ξ)`: the mode pattern times `e^{+j2π r̂·r_k}`.
pub fn modal_far_field(model: &ArrayModel, element: usize, mode: usize, angle: &Angle) -> Field2 {
    let base = dipole_pattern(&model.mode_polarization(mode), angle);
    let (rh, _, _) = angle.unit_vectors();
    let ph = C64::from_polar(1.0, 2.0 * PI * dot(&rh, &model.position(element)));
    [base[0] * ph, base[1] * ph]
}

/// Modal far fields on `angles`, optionally with full-sphere patterns on a
/// `(Δθ, Δφ)` grid for directivity quadrature.
pub fn build_far_field_set(
    model: &ArrayModel,
    angles: Vec<Angle>,
    sphere_step_deg: Option<(f64, f64)>,
) -> Result<ModalFarFieldSet> {
    let (k_tot, n_modes) = (model.n_elements(), model.n_modes());
    let mut samples = Vec::with_capacity(k_tot * n_modes * angles.len());
    for k in 0..k_tot {
        for n in 0..n_modes {
            for a in &angles {
                samples.push(modal_far_field(model, k, n, a));
            }
        }
    }
    let sphere = sphere_step_deg.map(|(dt, dp)| {
        let grid = crate::pattern::sphere_grid(dt, dp);
        let mut element_patterns = Vec::with_capacity(n_modes * grid.len());
        for n in 0..n_modes {
            for (a, _) in &grid {
                element_patterns.push(dipole_pattern(&model.mode_polarization(n), a));
            }
        }
        SpherePatterns {
            theta_step_deg: dt,
            phi_step_deg: dp,
            element_patterns,
            positions: model.positions(),
        }
    });
    ModalFarFieldSet::new(k_tot, n_modes, angles, samples, sphere)
}

/// Far-field set on the default grid: the φ = 0° cut at 1° plus the
/// 1° × 1° sphere.
pub fn default_far_field_set(model: &ArrayModel) -> Result<ModalFarFieldSet> {
    build_far_field_set(model, full_cut(), Some((1.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: [f64; 3] = [1.0, 0.0, 0.0];
    const Y: [f64; 3] = [0.0, 1.0, 0.0];

    #[test]
    fn norm_constant() {
        assert!((DIPOLE_NORM - (3.0 / (8.0 * PI)).sqrt()).abs() < 1e-16);
    }

    #[test]
    fn self_resistance_limit_is_one() {
        let z = hertzian_mutual_impedance(&X, &X, &[0.0, 1e-3, 0.0]).unwrap();
        assert!((z.re - 1.0).abs() < 1e-4);
    }

    #[test]
    fn crossed_dipoles_along_axis_vanish() {
        let z = hertzian_mutual_impedance(&X, &Y, &[0.7, 0.0, 0.0]).unwrap();
        assert_eq!(z, C64::new(0.0, 0.0));
    }

    #[test]
    fn zero_separation_is_singular() {
        assert!(matches!(hertzian_mutual_impedance(&X, &X, &[0.0; 3]), Err(Error::Singularity(_))));
    }

    #[test]
    fn axis_null_and_equatorial_maximum() {
        let m = ArrayModel::half_wave(1, 1).unwrap();
        let null = modal_far_field(&m, 0, 0, &Angle::new(90.0, 0.0));
        assert!(null[0].norm() < 1e-16 && null[1].norm() < 1e-16);
        let max = modal_far_field(&m, 0, 0, &Angle::new(90.0, 90.0));
        let mag = (max[0].norm_sqr() + max[1].norm_sqr()).sqrt();
        assert!((mag - DIPOLE_NORM).abs() < 1e-15);
    }

    #[test]
    fn diagonal_blocks_are_zero_and_reciprocal() {
        let m = ArrayModel::half_wave(2, 3).unwrap();
        let g = coupling_matrix(&m, CouplingMode::Toeplitz).unwrap();
        assert_eq!(g.reciprocity_defect(), 0.0);
        assert_eq!(toeplitz_block_count(&m), 15);
    }
}
