//! Matrix manifolds for the design variables: unitary symmetric GSMs
//! (`M_US`), products of complex unit spheres for the factored excitation,
//! and the product manifold of both.
//!
//! The metric everywhere is the real Frobenius inner product
//! `⟨A, B⟩ = Re tr(Aᴴ B)`. Tangent vectors at a unitary symmetric `Ψ` are
//! the symmetric `V` with `Ψᴴ V` skew-Hermitian; the orthogonal projector is
//! `P(Z) = ½ (sym Z − Ψ (sym Z)ᴴ Ψ)`. The retraction symmetrizes `Ψ + tV` and
//! replaces it by its unitary polar factor, which for a symmetric matrix
//! `U Σ Uᵀ` (Takagi) is `U Uᵀ`, i.e. the singular values snapped to one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    frob_norm, polar_unitary, random_unitary, real_inner, symmetrize, symmetry_defect,
    unitarity_defect, CMat, C64,
};

/// Tolerance used when validating unitary symmetric points.
pub const GSM_TOL: f64 = 1e-10;
/// Tolerance used when validating unit-norm excitation columns.
pub const NORM_TOL: f64 = 1e-12;

/// Generalized scattering matrix of one element: `(N+P)×(N+P)`,
/// partitioned as `[[S, T], [R, Γ]]` with `N` modes and `P` ports.
#[derive(Debug, Clone, PartialEq)]
pub struct Gsm {
    pub entries: CMat,
    pub n_modes: usize,
    pub n_ports: usize,
}

impl Gsm {
    /// Wraps `entries` after checking shape, unitarity and symmetry.
    pub fn new(entries: CMat, n_modes: usize, n_ports: usize) -> Result<Self> {
        let g = Gsm::from_parts_unchecked(entries, n_modes, n_ports)?;
        let (u, s) = (g.unitarity_defect(), g.symmetry_defect());
        if u > GSM_TOL || s > GSM_TOL {
            return Err(Error::InvalidInput(format!(
                "GSM is not unitary symmetric (‖ΨᴴΨ−I‖={u:.3e}, ‖Ψ−Ψᵀ‖={s:.3e})"
            )));
        }
        Ok(g)
    }

    /// Wraps `entries` checking only the shape.
    pub fn from_parts_unchecked(entries: CMat, n_modes: usize, n_ports: usize) -> Result<Self> {
        let n = n_modes + n_ports;
        if n == 0 {
            return Err(Error::InvalidDimension("GSM needs N + P ≥ 1".into()));
        }
        if entries.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "GSM entries are {:?}, expected {n}×{n}",
                entries.shape()
            )));
        }
        Ok(Gsm { entries, n_modes, n_ports })
    }

    pub fn random(n_modes: usize, n_ports: usize, seed: u64) -> Result<Self> {
        let entries = us_random(n_modes + n_ports, seed)?;
        Ok(Gsm { entries, n_modes, n_ports })
    }

    /// Assembles `[[S, T], [R, Γ]]` without validation.
    pub fn from_blocks(s: &CMat, t: &CMat, r: &CMat, gamma: &CMat) -> Result<Self> {
        let (n, p) = (s.nrows(), gamma.nrows());
        if s.shape() != (n, n) || t.shape() != (n, p) || r.shape() != (p, n) || gamma.shape() != (p, p)
        {
            return Err(Error::DimensionMismatch("inconsistent GSM block shapes".into()));
        }
        let mut m = CMat::zeros(n + p, n + p);
        m.view_mut((0, 0), (n, n)).copy_from(s);
        m.view_mut((0, n), (n, p)).copy_from(t);
        m.view_mut((n, 0), (p, n)).copy_from(r);
        m.view_mut((n, n), (p, p)).copy_from(gamma);
        Ok(Gsm { entries: m, n_modes: n, n_ports: p })
    }

    pub fn dim(&self) -> usize {
        self.n_modes + self.n_ports
    }

    pub fn s(&self) -> CMat {
        self.entries.view((0, 0), (self.n_modes, self.n_modes)).into_owned()
    }

    pub fn t(&self) -> CMat {
        self.entries.view((0, self.n_modes), (self.n_modes, self.n_ports)).into_owned()
    }

    pub fn r(&self) -> CMat {
        self.entries.view((self.n_modes, 0), (self.n_ports, self.n_modes)).into_owned()
    }

    pub fn gamma(&self) -> CMat {
        self.entries
            .view((self.n_modes, self.n_modes), (self.n_ports, self.n_ports))
            .into_owned()
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.entries)
    }

    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.entries)
    }
}

/// Random point of `M_US` of dimension `n`: `U Uᵀ` with `U` Haar unitary.
pub fn us_random(n: usize, seed: u64) -> Result<CMat> {
    if n == 0 {
        return Err(Error::InvalidDimension("unitary symmetric matrix of size 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_unitary(n, &mut rng);
    Ok(symmetrize(&(&u * u.transpose())))
}

/// Orthogonal projection of `ambient` onto the tangent space of `M_US` at
/// `base`.
pub fn us_project_tangent(base: &CMat, ambient: &CMat) -> Result<CMat> {
    if base.shape() != ambient.shape() || base.nrows() != base.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "tangent projection: base {:?}, ambient {:?}",
            base.shape(),
            ambient.shape()
        )));
    }
    let zs = symmetrize(ambient);
    Ok((&zs - base * zs.adjoint() * base).scale(0.5))
}

/// Retraction `R_Ψ(tV)`: polar factor of `sym(Ψ + tV)`.
pub fn us_retract(base: &CMat, direction: &CMat, step: f64) -> Result<CMat> {
    if base.shape() != direction.shape() {
        return Err(Error::DimensionMismatch("retraction direction shape".into()));
    }
    if step == 0.0 {
        return Ok(base.clone());
    }
    let y = symmetrize(&(base + direction.scale(step)));
    let q = polar_unitary(&y)?;
    Ok(symmetrize(&q))
}

/// Factored excitation `v = v_static · v_dyn`.
///
/// `v_static` stores the per-column static vectors as columns, shape
/// `(R·P) × C`; `v_dyn` has shape `C × S`. Element `k = c·R + r` (column-major
/// over the grid) with port `p` is row `k·P + p` of the port-wave matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSet {
    pub v_static: CMat,
    pub v_dyn: CMat,
    pub rows: usize,
    pub n_ports: usize,
}

impl ExcitationSet {
    pub fn new(v_static: CMat, v_dyn: CMat, rows: usize, n_ports: usize) -> Result<Self> {
        let e = ExcitationSet { v_static, v_dyn, rows, n_ports };
        e.check_shapes()?;
        let defect = e.norm_defect();
        if defect > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "excitation columns are not unit norm (max defect {defect:.3e})"
            )));
        }
        Ok(e)
    }

    /// Uniform amplitude, zero phase.
    pub fn uniform(rows: usize, cols: usize, n_ports: usize, states: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || n_ports == 0 || states == 0 {
            return Err(Error::InvalidDimension("excitation layout needs R, C, P, S ≥ 1".into()));
        }
        let rp = rows * n_ports;
        let v_static = CMat::from_element(rp, cols, C64::new(1.0 / (rp as f64).sqrt(), 0.0));
        let v_dyn = CMat::from_element(cols, states, C64::new(1.0 / (cols as f64).sqrt(), 0.0));
        Ok(ExcitationSet { v_static, v_dyn, rows, n_ports })
    }

    pub fn cols(&self) -> usize {
        self.v_static.ncols()
    }

    pub fn states(&self) -> usize {
        self.v_dyn.ncols()
    }

    pub fn n_elements(&self) -> usize {
        self.rows * self.cols()
    }

    fn check_shapes(&self) -> Result<()> {
        if self.v_static.nrows() != self.rows * self.n_ports {
            return Err(Error::DimensionMismatch(format!(
                "v_static has {} rows, expected R·P = {}",
                self.v_static.nrows(),
                self.rows * self.n_ports
            )));
        }
        if self.v_dyn.nrows() != self.v_static.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "v_dyn has {} rows, expected C = {}",
                self.v_dyn.nrows(),
                self.v_static.ncols()
            )));
        }
        Ok(())
    }

    /// Largest deviation of any column norm from one.
    pub fn norm_defect(&self) -> f64 {
        self.v_static
            .column_iter()
            .chain(self.v_dyn.column_iter())
            .map(|c| (c.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Port-wave matrix `v` of shape `K·P × S`.
    pub fn port_waves(&self) -> CMat {
        let (rp, cols, s) = (self.v_static.nrows(), self.cols(), self.states());
        let mut v = CMat::zeros(rp * cols, s);
        for col in 0..cols {
            for i in 0..rp {
                let a = self.v_static[(i, col)];
                for st in 0..s {
                    v[(col * rp + i, st)] = a * self.v_dyn[(col, st)];
                }
            }
        }
        v
    }

    /// Chain rule from a port-wave gradient (`K·P × S`) to the factors.
    pub fn pullback_gradient(&self, grad_v: &CMat) -> (CMat, CMat) {
        let (rp, cols, s) = (self.v_static.nrows(), self.cols(), self.states());
        let mut g_static = CMat::zeros(rp, cols);
        let mut g_dyn = CMat::zeros(cols, s);
        for col in 0..cols {
            for i in 0..rp {
                let row = col * rp + i;
                for st in 0..s {
                    let g = grad_v[(row, st)];
                    g_static[(i, col)] += g * self.v_dyn[(col, st)].conj();
                    g_dyn[(col, st)] += self.v_static[(i, col)].conj() * g;
                }
            }
        }
        (g_static, g_dyn)
    }
}

fn sphere_project_columns(base: &CMat, ambient: &CMat) -> CMat {
    let mut out = ambient.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let b = base.column(j);
        let radial: f64 = b.iter().zip(ambient.column(j).iter()).map(|(x, y)| (x.conj() * y).re).sum();
        col -= b * C64::new(radial, 0.0);
    }
    out
}

fn sphere_retract_columns(base: &CMat, direction: &CMat, step: f64, offset: usize) -> Result<CMat> {
    let mut out = base + direction.scale(step);
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let n = col.norm();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::DegenerateColumn(offset + j));
        }
        col /= C64::new(n, 0.0);
    }
    Ok(out)
}

/// Tangent projection for the excitation spheres.
pub fn excitation_project_tangent(base: &ExcitationSet, g_static: &CMat, g_dyn: &CMat) -> Result<(CMat, CMat)> {
    if g_static.shape() != base.v_static.shape() || g_dyn.shape() != base.v_dyn.shape() {
        return Err(Error::DimensionMismatch("excitation tangent shapes".into()));
    }
    Ok((
        sphere_project_columns(&base.v_static, g_static),
        sphere_project_columns(&base.v_dyn, g_dyn),
    ))
}

/// Retraction by column renormalization. Static columns are numbered
/// `0..C`, dynamic columns `C..C+S` in degenerate-column errors.
pub fn excitation_retract(
    base: &ExcitationSet,
    d_static: &CMat,
    d_dyn: &CMat,
    step: f64,
) -> Result<ExcitationSet> {
    if d_static.shape() != base.v_static.shape() || d_dyn.shape() != base.v_dyn.shape() {
        return Err(Error::DimensionMismatch("excitation direction shapes".into()));
    }
    if step == 0.0 {
        return Ok(base.clone());
    }
    Ok(ExcitationSet {
        v_static: sphere_retract_columns(&base.v_static, d_static, step, 0)?,
        v_dyn: sphere_retract_columns(&base.v_dyn, d_dyn, step, base.cols())?,
        rows: base.rows,
        n_ports: base.n_ports,
    })
}

/// A point on the product manifold: one GSM per DOF class plus the
/// factored excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub class_gsms: Vec<Gsm>,
    pub excitations: ExcitationSet,
}

impl DesignPoint {
    pub fn new(class_gsms: Vec<Gsm>, excitations: ExcitationSet) -> Result<Self> {
        if class_gsms.is_empty() {
            return Err(Error::InvalidDimension("design point needs D ≥ 1 classes".into()));
        }
        let (n, p) = (class_gsms[0].n_modes, class_gsms[0].n_ports);
        if class_gsms.iter().any(|g| g.n_modes != n || g.n_ports != p) {
            return Err(Error::DimensionMismatch("class GSMs differ in (N, P)".into()));
        }
        if excitations.n_ports != p {
            return Err(Error::DimensionMismatch("excitation port count differs from GSMs".into()));
        }
        Ok(DesignPoint { class_gsms, excitations })
    }

    /// Seeded initialization: random class GSMs and uniform excitations.
    pub fn initial(
        n_classes: usize,
        n_modes: usize,
        n_ports: usize,
        rows: usize,
        cols: usize,
        states: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gsms = (0..n_classes)
            .map(|_| {
                let u = random_unitary(n_modes + n_ports, &mut rng);
                Gsm::from_parts_unchecked(symmetrize(&(&u * u.transpose())), n_modes, n_ports)
            })
            .collect::<Result<Vec<_>>>()?;
        DesignPoint::new(gsms, ExcitationSet::uniform(rows, cols, n_ports, states)?)
    }

    pub fn n_classes(&self) -> usize {
        self.class_gsms.len()
    }

    /// Largest violation of any manifold invariant.
    pub fn manifold_defect(&self) -> f64 {
        self.class_gsms
            .iter()
            .map(|g| g.unitarity_defect().max(g.symmetry_defect()))
            .fold(self.excitations.norm_defect(), f64::max)
    }

    /// Number of complex values in one design instance.
    pub fn complex_dof_count(&self) -> usize {
        let n = self.class_gsms[0].dim();
        n * n * self.n_classes() + self.excitations.v_static.len() + self.excitations.v_dyn.len()
    }
}

/// A tangent (or ambient) vector mirroring the shapes of a [`DesignPoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub gsms: Vec<CMat>,
    pub v_static: CMat,
    pub v_dyn: CMat,
}

impl TangentVector {
    pub fn zeros_like(x: &DesignPoint) -> Self {
        TangentVector {
            gsms: x.class_gsms.iter().map(|g| CMat::zeros(g.dim(), g.dim())).collect(),
            v_static: CMat::zeros(x.excitations.v_static.nrows(), x.excitations.v_static.ncols()),
            v_dyn: CMat::zeros(x.excitations.v_dyn.nrows(), x.excitations.v_dyn.ncols()),
        }
    }

    pub fn inner(&self, other: &TangentVector) -> f64 {
        self.gsms.iter().zip(&other.gsms).map(|(a, b)| real_inner(a, b)).sum::<f64>()
            + real_inner(&self.v_static, &other.v_static)
            + real_inner(&self.v_dyn, &other.v_dyn)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scale(&self, a: f64) -> TangentVector {
        TangentVector {
            gsms: self.gsms.iter().map(|g| g.scale(a)).collect(),
            v_static: self.v_static.scale(a),
            v_dyn: self.v_dyn.scale(a),
        }
    }

    /// `self + a·other`
    pub fn axpy(&self, a: f64, other: &TangentVector) -> TangentVector {
        TangentVector {
            gsms: self.gsms.iter().zip(&other.gsms).map(|(x, y)| x + y.scale(a)).collect(),
            v_static: &self.v_static + other.v_static.scale(a),
            v_dyn: &self.v_dyn + other.v_dyn.scale(a),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.gsms
            .iter()
            .flat_map(|g| g.iter())
            .chain(self.v_static.iter())
            .chain(self.v_dyn.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    fn check_shape(&self, x: &DesignPoint) -> Result<()> {
        let ok = self.gsms.len() == x.class_gsms.len()
            && self.gsms.iter().zip(&x.class_gsms).all(|(a, g)| a.shape() == g.entries.shape())
            && self.v_static.shape() == x.excitations.v_static.shape()
            && self.v_dyn.shape() == x.excitations.v_dyn.shape();
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("vector does not match design point shapes".into()))
        }
    }
}

/// Componentwise tangent projection of an ambient vector at `x`.
pub fn project_tangent(x: &DesignPoint, ambient: &TangentVector) -> Result<TangentVector> {
    ambient.check_shape(x)?;
    let gsms = x
        .class_gsms
        .iter()
        .zip(&ambient.gsms)
        .map(|(g, a)| us_project_tangent(&g.entries, a))
        .collect::<Result<Vec<_>>>()?;
    let (v_static, v_dyn) = excitation_project_tangent(&x.excitations, &ambient.v_static, &ambient.v_dyn)?;
    Ok(TangentVector { gsms, v_static, v_dyn })
}

/// Riemannian gradient of the embedded product manifold: the tangent
/// projection of the Euclidean gradient `∂φ/∂Re + j·∂φ/∂Im`.
pub fn riemannian_gradient(x: &DesignPoint, egrad: &TangentVector) -> Result<TangentVector> {
    project_tangent(x, egrad)
}

/// Product-manifold retraction.
pub fn retract(x: &DesignPoint, direction: &TangentVector, step: f64) -> Result<DesignPoint> {
    direction.check_shape(x)?;
    if step == 0.0 {
        return Ok(x.clone());
    }
    let class_gsms = x
        .class_gsms
        .iter()
        .zip(&direction.gsms)
        .map(|(g, d)| {
            Ok(Gsm {
                entries: us_retract(&g.entries, d, step)?,
                n_modes: g.n_modes,
                n_ports: g.n_ports,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let excitations = excitation_retract(&x.excitations, &direction.v_static, &direction.v_dyn, step)?;
    Ok(DesignPoint { class_gsms, excitations })
}

/// Checks that a GSM tangent component satisfies the linearized
/// constraints at `base`; returns the larger of the two residuals.
pub fn tangent_defect(base: &CMat, v: &CMat) -> f64 {
    let sym = symmetry_defect(v);
    let h = base.adjoint() * v;
    let skew = frob_norm(&(&h + h.adjoint()));
    sym.max(skew)
}
