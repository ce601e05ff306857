//! Staged-penalty Riemannian steepest descent over class GSMs and
//! excitations.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::coupled::{assemble_element_gsms, CoupledSystem, CouplingMatrix, DofAssignment};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::manifolds::{project_tangent, retract, riemannian_gradient, DesignPoint, TangentVector};
use crate::pattern::{BeamProjector, BeamSpec, ModalFarFieldSet};

/// DOF-sharing strategy across the array grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    PointSymmetry,
    EqualElements,
    EdgeCornerInternal,
    Alternating,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::PointSymmetry,
        Strategy::EqualElements,
        Strategy::EdgeCornerInternal,
        Strategy::Alternating,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::PointSymmetry => "PointSymmetry",
            Strategy::EqualElements => "EqualElements",
            Strategy::EdgeCornerInternal => "EdgeCornerInternal",
            Strategy::Alternating => "Alternating",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown strategy '{s}' (expected one of PointSymmetry, EqualElements, EdgeCornerInternal, Alternating)"
                ))
            })
    }
}

/// Class assignment of an `R × C` grid under `strategy`.
pub fn dof_strategy(strategy: Strategy, rows: usize, cols: usize) -> Result<DofAssignment> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension(format!("grid {rows}×{cols}")));
    }
    let k_tot = rows * cols;
    let mut class_of = Vec::with_capacity(k_tot);
    for c in 0..cols {
        for r in 0..rows {
            let k = c * rows + r;
            let cls = match strategy {
                Strategy::PointSymmetry => k.min(k_tot - 1 - k),
                Strategy::EqualElements => 0,
                Strategy::EdgeCornerInternal => {
                    let on_c = c == 0 || c == cols - 1;
                    let on_r = r == 0 || r == rows - 1;
                    match (on_c, on_r) {
                        (true, true) => 1,
                        (false, false) => 0,
                        _ => 2,
                    }
                }
                Strategy::Alternating => (c + r) % 2,
            };
            class_of.push(cls);
        }
    }
    // Small grids may leave some labels unused; renumber the rest in order.
    let mut used: Vec<usize> = class_of.clone();
    used.sort_unstable();
    used.dedup();
    let class_of = class_of
        .iter()
        .map(|c| used.binary_search(c).expect("label present"))
        .collect();
    DofAssignment::new(class_of, rows, cols, strategy.name())
}

/// Back-off of the penalty thresholds below the SLL/XPR targets. A finite
/// quadratic penalty settles slightly outside its constraint (by about the
/// multiplier over `2α`); the margin keeps the result inside the targets.
pub const DEFAULT_MARGIN_DB: f64 = 0.01;

/// Cost data of one synthesis problem: DOF assignment, coupling and one
/// projector per beam.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    pub assignment: &'a DofAssignment,
    pub coupling: &'a CouplingMatrix,
    projectors: Vec<BeamProjector>,
}

impl<'a> Problem<'a> {
    pub fn new(
        assignment: &'a DofAssignment,
        coupling: &'a CouplingMatrix,
        fields: &ModalFarFieldSet,
        beams: &[BeamSpec],
    ) -> Result<Self> {
        if beams.is_empty() {
            return Err(Error::InvalidInput("at least one beam is required".into()));
        }
        if assignment.n_elements() != coupling.n_elements() || fields.n_elements != coupling.n_elements() {
            return Err(Error::DimensionMismatch(format!(
                "assignment K={}, coupling K={}, far fields K={}",
                assignment.n_elements(),
                coupling.n_elements(),
                fields.n_elements
            )));
        }
        if fields.n_modes != coupling.n_modes() {
            return Err(Error::DimensionMismatch("far fields and coupling disagree on N".into()));
        }
        let projectors = beams
            .iter()
            .map(|b| Ok(BeamProjector::new(b, fields)?.with_margin(DEFAULT_MARGIN_DB)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem { assignment, coupling, projectors })
    }

    /// Replaces the constraint back-off applied inside the cost.
    pub fn with_margin(mut self, margin_db: f64) -> Result<Self> {
        if !(margin_db >= 0.0 && margin_db.is_finite()) {
            return Err(Error::Config(format!("margin {margin_db} dB must be nonnegative")));
        }
        self.projectors = self.projectors.into_iter().map(|p| p.with_margin(margin_db)).collect();
        Ok(self)
    }

    pub fn n_beams(&self) -> usize {
        self.projectors.len()
    }

    fn check(&self, x: &DesignPoint) -> Result<()> {
        if x.n_classes() != self.assignment.n_classes() {
            return Err(Error::DimensionMismatch(format!(
                "design point has D={}, assignment D={}",
                x.n_classes(),
                self.assignment.n_classes()
            )));
        }
        if x.class_gsms[0].n_modes != self.coupling.n_modes() {
            return Err(Error::DimensionMismatch("GSM mode count differs from the coupling matrix".into()));
        }
        if x.excitations.n_elements() != self.assignment.n_elements()
            || x.excitations.rows != self.assignment.rows
            || x.excitations.states() != self.n_beams()
        {
            return Err(Error::DimensionMismatch(format!(
                "excitation layout {}×{} with {} states vs grid {}×{} with {} beams",
                x.excitations.rows,
                x.excitations.cols(),
                x.excitations.states(),
                self.assignment.rows,
                self.assignment.cols,
                self.n_beams()
            )));
        }
        Ok(())
    }

    /// Modal coefficients `f` (`KN × S`) and port waves `v` of `x`.
    pub fn solve(&self, x: &DesignPoint) -> Result<CMat> {
        self.check(x)?;
        let elements = assemble_element_gsms(self.assignment, &x.class_gsms)?;
        let sys = CoupledSystem::new(elements, self.coupling)?;
        Ok(sys.solve(&x.excitations.port_waves())?.f)
    }

    /// `φ(x) = Σ_s p_α(F_s, σ_s)`.
    pub fn cost(&self, x: &DesignPoint, alpha: f64) -> Result<f64> {
        let f = self.solve(x)?;
        Ok(self
            .projectors
            .iter()
            .enumerate()
            .map(|(s, p)| p.cost(&f.columns(s, 1).into_owned(), alpha))
            .sum())
    }

    /// Cost and Euclidean gradient (`∂φ/∂Re + j ∂φ/∂Im` per entry) through
    /// the coupled solve by the adjoint method.
    pub fn cost_and_gradient(&self, x: &DesignPoint, alpha: f64) -> Result<(f64, TangentVector)> {
        self.check(x)?;
        let elements = assemble_element_gsms(self.assignment, &x.class_gsms)?;
        let sys = CoupledSystem::new(elements, self.coupling)?;
        let v = x.excitations.port_waves();
        let sol = sys.solve(&v)?;
        let (kn, s_tot) = (sol.f.nrows(), sol.f.ncols());
        let mut g_f = CMat::zeros(kn, s_tot);
        let mut cost = 0.0;
        for (s, p) in self.projectors.iter().enumerate() {
            let (c, g) = p.cost_grad(&sol.f.columns(s, 1).into_owned(), alpha)?;
            cost += c;
            g_f.set_column(s, &g.column(0));
        }
        let lam = sys.adjoint_solve(&g_f);

        let n = x.class_gsms[0].n_modes;
        let p = x.class_gsms[0].n_ports;
        let mut grad = TangentVector::zeros_like(x);
        for k in 0..self.assignment.n_elements() {
            let d = self.assignment.class_of[k];
            let lam_k = lam.rows(k * n, n);
            let a_k = sol.a.rows(k * n, n);
            let v_k = v.rows(k * p, p);
            let g_s = &lam_k * a_k.adjoint();
            let g_t = &lam_k * v_k.adjoint();
            let mut blk = grad.gsms[d].view_mut((0, 0), (n, n));
            blk += g_s;
            let mut blk = grad.gsms[d].view_mut((0, n), (n, p));
            blk += g_t;
        }
        let mut g_v = CMat::zeros(v.nrows(), s_tot);
        for (k, el) in sys.elements().iter().enumerate() {
            let t_k = el.t();
            g_v.rows_mut(k * p, p).copy_from(&(t_k.adjoint() * lam.rows(k * n, n)));
        }
        let (g_static, g_dyn) = x.excitations.pullback_gradient(&g_v);
        grad.v_static = g_static;
        grad.v_dyn = g_dyn;
        Ok((cost, grad))
    }

    /// Largest penalty argument (input of `γ`) of every beam.
    pub fn worst_ratios(&self, x: &DesignPoint) -> Result<Vec<f64>> {
        let f = self.solve(x)?;
        Ok(self
            .projectors
            .iter()
            .enumerate()
            .map(|(s, p)| p.worst_ratio(&f.columns(s, 1).into_owned()))
            .collect())
    }
}

/// Line-search and stopping parameters of one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentOptions {
    /// Absolute cost-decrease threshold of the two-iteration stop rule.
    pub tol: f64,
    pub max_iters: usize,
    pub sufficient_decrease: f64,
    pub contraction: f64,
    pub max_backtracks: usize,
    pub min_step: f64,
    pub max_step: f64,
    /// Riemannian gradient norm treated as stationary.
    pub grad_tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            tol: 1e-4,
            max_iters: 1000,
            sufficient_decrease: 1e-4,
            contraction: 0.5,
            max_backtracks: 40,
            min_step: 1e-6,
            max_step: 1e2,
            grad_tol: 1e-12,
        }
    }
}

/// Penalty weights of the staged solve plus per-stage stopping controls.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSchedule {
    pub alphas: Vec<f64>,
    pub tol: f64,
    pub max_iters: usize,
}

impl StageSchedule {
    pub fn new(alphas: Vec<f64>, tol: f64, max_iters: usize) -> Result<Self> {
        let s = StageSchedule { alphas, tol, max_iters };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::Config("schedule needs at least one α".into()));
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config("α values must be finite and nonnegative".into()));
        }
        if self.alphas.windows(2).skip(1).any(|w| !(w[1] > w[0])) || (self.alphas.len() > 1 && self.alphas[1] < self.alphas[0]) {
            return Err(Error::Config("α values must increase".into()));
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return Err(Error::Config("tolerance and iteration limit must be positive".into()));
        }
        Ok(())
    }

    pub fn options(&self) -> DescentOptions {
        DescentOptions { tol: self.tol, max_iters: self.max_iters, ..DescentOptions::default() }
    }
}

impl Default for StageSchedule {
    /// `α ∈ {0, 10⁻¹, 1, …, 10⁵}`.
    fn default() -> Self {
        StageSchedule {
            alphas: vec![0.0, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5],
            tol: 1e-4,
            max_iters: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub stage: usize,
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
    /// Index into `records` where each stage begins.
    pub stage_starts: Vec<usize>,
    pub stalled: Vec<bool>,
}

impl OptimizationTrace {
    pub fn n_stages(&self) -> usize {
        self.stage_starts.len()
    }

    pub fn stage(&self, l: usize) -> &[IterationRecord] {
        let end = self.stage_starts.get(l + 1).copied().unwrap_or(self.records.len());
        &self.records[self.stage_starts[l]..end]
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.records.last().map(|r| r.cost)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,iter,cost,grad_norm,step,elapsed_s\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e},{:.17e},{:.6}\n",
                r.stage, r.iter, r.cost, r.grad_norm, r.step, r.elapsed_s
            ));
        }
        out
    }
}

/// Outcome of one stage.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub x: DesignPoint,
    pub records: Vec<IterationRecord>,
    /// The line search ran out of backtracks.
    pub stalled: bool,
}

fn try_point(problem: &Problem, x: &DesignPoint, dir: &TangentVector, t: f64, alpha: f64) -> Option<(DesignPoint, f64)> {
    let cand = retract(x, dir, t).ok()?;
    let c = problem.cost(&cand, alpha).ok()?;
    c.is_finite().then_some((cand, c))
}

/// Riemannian steepest descent with Armijo backtracking at fixed `alpha`.
pub fn descend_stage(
    problem: &Problem,
    x0: DesignPoint,
    alpha: f64,
    stage: usize,
    opts: &DescentOptions,
    clock: Instant,
) -> Result<StageOutcome> {
    let mut x = x0;
    let (mut cost, eg) = problem.cost_and_gradient(&x, alpha)?;
    let mut rg = riemannian_gradient(&x, &eg)?;
    let mut gn = rg.norm();
    let mut records = vec![IterationRecord {
        stage,
        iter: 0,
        cost,
        grad_norm: gn,
        step: 0.0,
        elapsed_s: clock.elapsed().as_secs_f64(),
    }];
    let mut t_init = (1.0 / gn.max(1e-300)).clamp(opts.min_step, opts.max_step);
    let mut small = 0;
    let mut stalled = false;
    for iter in 1..=opts.max_iters {
        if gn <= opts.grad_tol {
            break;
        }
        let dir = rg.scale(-1.0);
        let mut t = t_init;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            if let Some((cand, c)) = try_point(problem, &x, &dir, t, alpha) {
                if c <= cost - opts.sufficient_decrease * t * gn * gn {
                    accepted = Some((cand, c));
                    break;
                }
            }
            t *= opts.contraction;
        }
        let Some((x_new, c_new)) = accepted else {
            log::debug!("stage {stage}: line search stalled at iteration {iter}");
            stalled = true;
            break;
        };
        let (c_chk, eg_new) = problem.cost_and_gradient(&x_new, alpha)?;
        debug_assert!((c_chk - c_new).abs() <= 1e-9 * c_new.abs().max(1.0));
        let rg_new = riemannian_gradient(&x_new, &eg_new)?;

        // Barzilai–Borwein step from the displacement and gradient change,
        // both expressed in the new tangent space.
        let s_vec = project_tangent(&x_new, &dir.scale(t))?;
        let y_vec = rg_new.axpy(-1.0, &project_tangent(&x_new, &rg)?);
        let sy = s_vec.inner(&y_vec);
        t_init = if sy > 0.0 { s_vec.inner(&s_vec) / sy } else { 2.0 * t };
        t_init = t_init.clamp(opts.min_step, opts.max_step);

        let decrease = cost - c_new;
        x = x_new;
        cost = c_new;
        rg = rg_new;
        gn = rg.norm();
        records.push(IterationRecord {
            stage,
            iter,
            cost,
            grad_norm: gn,
            step: t,
            elapsed_s: clock.elapsed().as_secs_f64(),
        });
        small = if decrease < opts.tol { small + 1 } else { 0 };
        if small >= 2 {
            break;
        }
    }
    Ok(StageOutcome { x, records, stalled })
}

/// Runs every stage of `schedule` in order, warm-starting each from the
/// previous result.
pub fn staged_optimize(
    problem: &Problem,
    x0: DesignPoint,
    schedule: &StageSchedule,
) -> Result<(DesignPoint, OptimizationTrace)> {
    schedule.validate()?;
    let opts = schedule.options();
    let clock = Instant::now();
    let mut trace = OptimizationTrace::default();
    let mut x = x0;
    for (l, &alpha) in schedule.alphas.iter().enumerate() {
        let out = descend_stage(problem, x, alpha, l, &opts, clock)
            .map_err(|e| Error::Stage { stage: l, source: Box::new(e) })?;
        log::info!(
            "stage {l} (α = {alpha:e}): {} iterations, cost {:.6e}{}",
            out.records.len() - 1,
            out.records.last().map(|r| r.cost).unwrap_or(f64::NAN),
            if out.stalled { " [stalled]" } else { "" }
        );
        trace.stage_starts.push(trace.records.len());
        trace.records.extend(out.records);
        trace.stalled.push(out.stalled);
        x = out.x;
    }
    Ok((x, trace))
}

/// Complex design values `(N+P)²·D + C·R·P + C·S`.
pub fn complex_dof_count(n_modes: usize, n_ports: usize, classes: usize, rows: usize, cols: usize, states: usize) -> usize {
    (n_modes + n_ports).pow(2) * classes + cols * rows * n_ports + cols * states
}
