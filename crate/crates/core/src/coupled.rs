//! Coupled GSM system of the array.
//!
//! Each element obeys `f⁽ᵏ⁾ = (S⁽ᵏ⁾ − I) a⁽ᵏ⁾ + T⁽ᵏ⁾ v⁽ᵏ⁾` and
//! `w⁽ᵏ⁾ = R⁽ᵏ⁾ a⁽ᵏ⁾ + Γ⁽ᵏ⁾ v⁽ᵏ⁾`; the incident modal waves come only from the
//! other elements, `a = G f`. Eliminating `a` gives
//! `(I − (S̄ − I) G) f = T̄ v` with block-diagonal `S̄`, `T̄`.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, CMat, DenseLu, C64};
use crate::manifolds::Gsm;

/// Relative pivot tolerance below which the coupled system is declared
/// resonant.
pub const RANK_TOL: f64 = 1e-12;

/// Global modal coupling matrix `G`, `KN × KN`, with zero diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    matrix: CMat,
    n_elements: usize,
    n_modes: usize,
}

impl CouplingMatrix {
    /// Wraps a dense matrix; diagonal blocks must be exactly zero and all
    /// entries finite.
    pub fn from_dense(matrix: CMat, n_elements: usize, n_modes: usize) -> Result<Self> {
        let kn = n_elements * n_modes;
        if matrix.shape() != (kn, kn) {
            return Err(Error::DimensionMismatch(format!(
                "coupling matrix is {:?}, expected {kn}×{kn}",
                matrix.shape()
            )));
        }
        if !all_finite(&matrix) {
            return Err(Error::InvalidInput("coupling matrix has non-finite entries".into()));
        }
        for k in 0..n_elements {
            let blk = matrix.view((k * n_modes, k * n_modes), (n_modes, n_modes));
            if blk.iter().any(|z| *z != C64::new(0.0, 0.0)) {
                return Err(Error::InvalidInput(format!("diagonal coupling block {k} is not zero")));
            }
        }
        Ok(CouplingMatrix { matrix, n_elements, n_modes })
    }

    pub fn zeros(n_elements: usize, n_modes: usize) -> Self {
        let kn = n_elements * n_modes;
        CouplingMatrix { matrix: CMat::zeros(kn, kn), n_elements, n_modes }
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn as_dense(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_dense(self) -> CMat {
        self.matrix
    }

    /// Block `G⁽ᵏ'ˡ⁾` (0-based element indices).
    pub fn block(&self, k: usize, l: usize) -> CMat {
        let n = self.n_modes;
        self.matrix.view((k * n, l * n), (n, n)).into_owned()
    }

    /// `max_{k,l} ‖G⁽ˡ'ᵏ⁾ − G⁽ᵏ'ˡ⁾ᵀ‖_max`.
    pub fn reciprocity_defect(&self) -> f64 {
        let g = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..i {
                worst = worst.max((g[(i, j)] - g[(j, i)]).norm());
            }
        }
        worst
    }
}

/// Assignment of each array element to a DOF class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofAssignment {
    /// 0-based class index per element, column-major element order.
    pub class_of: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
    pub strategy: String,
}

impl DofAssignment {
    pub fn new(class_of: Vec<usize>, rows: usize, cols: usize, strategy: impl Into<String>) -> Result<Self> {
        if class_of.len() != rows * cols {
            return Err(Error::Assignment(format!(
                "assignment has {} entries for a {rows}×{cols} grid",
                class_of.len()
            )));
        }
        let d = class_of.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; d];
        for &c in &class_of {
            seen[c] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Assignment(format!("class {} is never used", missing + 1)));
        }
        Ok(DofAssignment { class_of, rows, cols, strategy: strategy.into() })
    }

    pub fn n_elements(&self) -> usize {
        self.class_of.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_of.iter().max().map_or(0, |m| m + 1)
    }

    /// Class of the element at grid column `c` (x index) and row `r` (y index).
    pub fn class_at(&self, c: usize, r: usize) -> usize {
        self.class_of[c * self.rows + r]
    }
}

/// Per-element GSMs for an assignment.
pub fn assemble_element_gsms<'a>(assignment: &DofAssignment, class_gsms: &'a [Gsm]) -> Result<Vec<&'a Gsm>> {
    assignment
        .class_of
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            class_gsms.get(d).ok_or_else(|| {
                Error::Assignment(format!(
                    "element {} references class {} but only {} classes exist",
                    k + 1,
                    d + 1,
                    class_gsms.len()
                ))
            })
        })
        .collect()
}

/// Outgoing/incident modal coefficients and outgoing port waves.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSolution {
    pub f: CMat,
    pub a: CMat,
    pub w: CMat,
}

/// Factorized coupled system for a fixed set of element GSMs and `G`,
/// reusable across right-hand sides and for adjoint solves.
#[derive(Debug, Clone)]
pub struct CoupledSystem<'a> {
    elements: Vec<&'a Gsm>,
    coupling: &'a CouplingMatrix,
    lu: DenseLu,
}

impl<'a> CoupledSystem<'a> {
    pub fn new(elements: Vec<&'a Gsm>, coupling: &'a CouplingMatrix) -> Result<Self> {
        let k = coupling.n_elements();
        let n = coupling.n_modes();
        if elements.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} element GSMs for {k} coupled elements",
                elements.len()
            )));
        }
        for (i, g) in elements.iter().enumerate() {
            if g.n_modes != n {
                return Err(Error::DimensionMismatch(format!(
                    "element {} has N = {}, coupling matrix has N = {n}",
                    i + 1,
                    g.n_modes
                )));
            }
            if !all_finite(&g.entries) {
                return Err(Error::InvalidInput(format!("element {} GSM is not finite", i + 1)));
            }
        }
        let p = elements.first().map_or(0, |g| g.n_ports);
        if elements.iter().any(|g| g.n_ports != p) {
            return Err(Error::DimensionMismatch("elements differ in port count".into()));
        }
        let kn = k * n;
        let g = coupling.as_dense();
        let mut sys = CMat::identity(kn, kn);
        for (e, gsm) in elements.iter().enumerate() {
            let mut s_minus_i = gsm.s();
            for i in 0..n {
                s_minus_i[(i, i)] -= C64::new(1.0, 0.0);
            }
            let rows = g.rows(e * n, n);
            let prod = &s_minus_i * rows;
            let mut target = sys.rows_mut(e * n, n);
            target -= prod;
        }
        let lu = DenseLu::new(sys, RANK_TOL).map_err(Error::ResonantCoupling)?;
        Ok(CoupledSystem { elements, coupling, lu })
    }

    pub fn n_ports(&self) -> usize {
        self.elements.first().map_or(0, |g| g.n_ports)
    }

    /// `T̄ v`
    pub fn transmit(&self, v: &CMat) -> CMat {
        let (n, p) = (self.coupling.n_modes(), self.n_ports());
        let mut out = CMat::zeros(self.elements.len() * n, v.ncols());
        for (e, gsm) in self.elements.iter().enumerate() {
            let blk = gsm.t() * v.rows(e * p, p);
            out.rows_mut(e * n, n).copy_from(&blk);
        }
        out
    }

    pub fn solve(&self, v: &CMat) -> Result<CoupledSolution> {
        let (k, n, p) = (self.elements.len(), self.coupling.n_modes(), self.n_ports());
        if v.nrows() != k * p {
            return Err(Error::DimensionMismatch(format!(
                "port-wave matrix has {} rows, expected K·P = {}",
                v.nrows(),
                k * p
            )));
        }
        if !all_finite(v) {
            return Err(Error::InvalidInput("port waves are not finite".into()));
        }
        let f = self.lu.solve(&self.transmit(v));
        let a = self.coupling.as_dense() * &f;
        let mut w = CMat::zeros(k * p, v.ncols());
        for (e, gsm) in self.elements.iter().enumerate() {
            let blk = gsm.r() * a.rows(e * n, n) + gsm.gamma() * v.rows(e * p, p);
            w.rows_mut(e * p, p).copy_from(&blk);
        }
        if !all_finite(&f) || !all_finite(&w) {
            return Err(Error::Numeric("coupled solution is not finite".into()));
        }
        Ok(CoupledSolution { f, a, w })
    }

    /// Solves `(I − (S̄ − I)G)ᴴ x = b`.
    pub fn adjoint_solve(&self, b: &CMat) -> CMat {
        self.lu.adjoint_solve(b)
    }

    pub fn elements(&self) -> &[&'a Gsm] {
        &self.elements
    }
}

/// One-shot coupled solve.
pub fn solve_coupled(element_gsms: &[&Gsm], coupling: &CouplingMatrix, v: &CMat) -> Result<CoupledSolution> {
    CoupledSystem::new(element_gsms.to_vec(), coupling)?.solve(v)
}

/// Shifts the port reference planes of one element by `chi` radians:
/// `T′ = T e^{jχ}`, `R′ = R e^{jχ}`, `Γ′ = Γ e^{j2χ}`, `v′ = v e^{−jχ}`.
pub fn apply_phase_shift(gsm: &Gsm, v_block: &CMat, chi: f64) -> (Gsm, CMat) {
    let e1 = C64::from_polar(1.0, chi);
    let e2 = C64::from_polar(1.0, 2.0 * chi);
    let (n, p) = (gsm.n_modes, gsm.n_ports);
    let mut m = gsm.entries.clone();
    m.view_mut((0, n), (n, p)).apply(|z| *z *= e1);
    m.view_mut((n, 0), (p, n)).apply(|z| *z *= e1);
    m.view_mut((n, n), (p, p)).apply(|z| *z *= e2);
    let shifted = Gsm { entries: m, n_modes: n, n_ports: p };
    (shifted, v_block.map(|z| z * e1.conj()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob_norm, random_gaussian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_coupling(k: usize, n: usize, scale: f64, seed: u64) -> CouplingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = random_gaussian(k * n, k * n, &mut rng).scale(scale);
        g = (&g + g.transpose()).scale(0.5);
        for e in 0..k {
            g.view_mut((e * n, e * n), (n, n)).fill(C64::new(0.0, 0.0));
        }
        CouplingMatrix::from_dense(g, k, n).unwrap()
    }

    #[test]
    fn uncoupled_limit() {
        let gsms: Vec<Gsm> = (0..3).map(|s| Gsm::random(2, 1, s).unwrap()).collect();
        let refs: Vec<&Gsm> = gsms.iter().collect();
        let g = CouplingMatrix::zeros(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_gaussian(3, 2, &mut rng);
        let sol = solve_coupled(&refs, &g, &v).unwrap();
        for (e, gsm) in gsms.iter().enumerate() {
            let f_e = gsm.t() * v.rows(e, 1);
            assert!(frob_norm(&(sol.f.rows(2 * e, 2) - f_e)) < 1e-14);
            let w_e = gsm.gamma() * v.rows(e, 1);
            assert!(frob_norm(&(sol.w.rows(e, 1) - w_e)) < 1e-14);
        }
        assert_eq!(frob_norm(&sol.a), 0.0);
        let lhs = frob_norm(&sol.f).powi(2) + frob_norm(&sol.w).powi(2);
        let rhs = frob_norm(&v).powi(2);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn coupled_solution_satisfies_element_equations() {
        let gsms: Vec<Gsm> = (0..4).map(|s| Gsm::random(2, 1, 10 + s).unwrap()).collect();
        let refs: Vec<&Gsm> = gsms.iter().collect();
        let g = random_coupling(4, 2, 0.2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_gaussian(4, 3, &mut rng);
        let sol = solve_coupled(&refs, &g, &v).unwrap();
        assert!(frob_norm(&(&sol.a - g.as_dense() * &sol.f)) <= 1e-12 * frob_norm(&sol.f));
        for (e, gsm) in gsms.iter().enumerate() {
            let mut s_mi = gsm.s();
            s_mi[(0, 0)] -= 1.0;
            s_mi[(1, 1)] -= 1.0;
            let rhs = s_mi * sol.a.rows(2 * e, 2) + gsm.t() * v.rows(e, 1);
            assert!(frob_norm(&(sol.f.rows(2 * e, 2) - rhs)) < 1e-12);
        }
    }

    #[test]
    fn dimension_and_input_errors() {
        let gsms: Vec<Gsm> = (0..2).map(|s| Gsm::random(2, 1, s).unwrap()).collect();
        let refs: Vec<&Gsm> = gsms.iter().collect();
        let g = CouplingMatrix::zeros(3, 2);
        assert!(matches!(
            CoupledSystem::new(refs.clone(), &g),
            Err(Error::DimensionMismatch(_))
        ));
        let g2 = CouplingMatrix::zeros(2, 2);
        let mut v = CMat::zeros(2, 1);
        v[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(solve_coupled(&refs, &g2, &v), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn resonant_system_is_detected() {
        // K=2, N=1: (1 − (s−1)² g²) = 0 for s = 0 with g = 1 (not unitary, but
        // the solver must still report the singular system).
        let s = Gsm::from_parts_unchecked(CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0); 4]), 1, 1).unwrap();
        let g = CouplingMatrix::from_dense(
            CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
            2,
            1,
        )
        .unwrap();
        assert!(matches!(CoupledSystem::new(vec![&s, &s], &g), Err(Error::ResonantCoupling(_))));
    }

    #[test]
    fn nonzero_diagonal_block_is_rejected() {
        let mut m = CMat::zeros(4, 4);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(CouplingMatrix::from_dense(m, 2, 2).is_err());
    }

    #[test]
    fn assignment_bounds() {
        let a = DofAssignment::new(vec![0, 1, 2, 4, 3], 1, 5, "custom").unwrap();
        let gsms: Vec<Gsm> = (0..4).map(|s| Gsm::random(2, 1, s).unwrap()).collect();
        assert!(matches!(assemble_element_gsms(&a, &gsms), Err(Error::Assignment(_))));
        assert!(DofAssignment::new(vec![0, 2], 1, 2, "gap").is_err());
    }

    #[test]
    fn phase_shift_special_angles() {
        let g = Gsm::random(2, 1, 5).unwrap();
        let v = CMat::from_element(1, 2, C64::new(0.3, -0.2));
        let (g0, v0) = apply_phase_shift(&g, &v, 0.0);
        assert_eq!(g0, g);
        assert_eq!(v0, v);
        let (gp, vp) = apply_phase_shift(&g, &v, std::f64::consts::PI);
        assert!(frob_norm(&(gp.t() + g.t())) < 1e-15);
        assert!(frob_norm(&(gp.r() + g.r())) < 1e-15);
        assert!(frob_norm(&(gp.gamma() - g.gamma())) < 1e-15);
        assert!(frob_norm(&(gp.s() - g.s())) == 0.0);
        assert!(frob_norm(&(vp + &v)) < 1e-15);
        let (g1, _) = apply_phase_shift(&g, &v, 0.7);
        assert!(g1.unitarity_defect() < 1e-12 && g1.symmetry_defect() < 1e-12);
    }
}
