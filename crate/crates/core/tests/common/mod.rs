#![allow(dead_code)]

use gsmarray::coupled::CouplingMatrix;
use gsmarray::linalg::{random_gaussian, CMat, C64};
use gsmarray::manifolds::{DesignPoint, ExcitationSet, Gsm};
use gsmarray::optimizer::Problem;
use gsmarray::pattern::{sidelobe_set, BeamSpec, ModalFarFieldSet, LHCP, RHCP, Angle, full_cut};
use gsmarray::toyem::{build_far_field_set, coupling_matrix, ArrayModel, CouplingMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Toy {
    pub model: ArrayModel,
    pub coupling: CouplingMatrix,
    pub fields: ModalFarFieldSet,
}

pub fn toy(rows: usize, cols: usize, sphere: bool) -> Toy {
    let model = ArrayModel::half_wave(rows, cols).unwrap();
    let coupling = coupling_matrix(&model, CouplingMode::Toeplitz).unwrap();
    let fields = build_far_field_set(&model, full_cut(), sphere.then_some((1.0, 1.0))).unwrap();
    Toy { model, coupling, fields }
}

/// LHCP beam at `theta` with sidelobes checked outside `theta ± half_width`.
pub fn beam(theta: i32, half_width: i32) -> BeamSpec {
    BeamSpec {
        target: Angle::new(theta as f64, 0.0),
        u_d: LHCP,
        u_x: RHCP,
        sll_db: -15.0,
        xpr_db: -30.0,
        side_set: sidelobe_set(theta - half_width, theta + half_width),
        cross_set: full_cut(),
    }
}

/// Random design point with non-uniform excitations.
pub fn random_point(n_classes: usize, rows: usize, cols: usize, states: usize, seed: u64) -> DesignPoint {
    let mut x = DesignPoint::initial(n_classes, 2, 1, rows, cols, states, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut vs = random_gaussian(rows, cols, &mut rng);
    let mut vd = random_gaussian(cols, states, &mut rng);
    for mut c in vs.column_iter_mut() {
        let n = c.norm();
        c /= C64::new(n, 0.0);
    }
    for mut c in vd.column_iter_mut() {
        let n = c.norm();
        c /= C64::new(n, 0.0);
    }
    x.excitations = ExcitationSet::new(vs, vd, rows, 1).unwrap();
    x
}

/// Every real coordinate of a design point, in a fixed order.
pub fn coordinates(x: &DesignPoint) -> Vec<(usize, usize, usize, bool)> {
    let mut out = Vec::new();
    for (d, g) in x.class_gsms.iter().enumerate() {
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                out.push((d, i, j, false));
                out.push((d, i, j, true));
            }
        }
    }
    let dcl = x.class_gsms.len();
    for (block, m) in [&x.excitations.v_static, &x.excitations.v_dyn].into_iter().enumerate() {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push((dcl + block, i, j, false));
                out.push((dcl + block, i, j, true));
            }
        }
    }
    out
}

fn entry_mut(x: &mut DesignPoint, c: (usize, usize, usize, bool)) -> &mut C64 {
    let dcl = x.class_gsms.len();
    let (d, i, j, _) = c;
    if d < dcl {
        &mut x.class_gsms[d].entries[(i, j)]
    } else if d == dcl {
        &mut x.excitations.v_static[(i, j)]
    } else {
        &mut x.excitations.v_dyn[(i, j)]
    }
}

/// Central difference of the cost along one real coordinate, ignoring the
/// manifold constraints.
pub fn central_difference(p: &Problem, x: &DesignPoint, c: (usize, usize, usize, bool), alpha: f64, h: f64) -> f64 {
    let delta = if c.3 { C64::new(0.0, h) } else { C64::new(h, 0.0) };
    let mut hi = x.clone();
    *entry_mut(&mut hi, c) += delta;
    let mut lo = x.clone();
    *entry_mut(&mut lo, c) -= delta;
    (p.cost(&hi, alpha).unwrap() - p.cost(&lo, alpha).unwrap()) / (2.0 * h)
}

/// Component of an ambient gradient for the coordinate `c`.
pub fn gradient_component(g: &gsmarray::manifolds::TangentVector, n_classes: usize, c: (usize, usize, usize, bool)) -> f64 {
    let (d, i, j, im) = c;
    let z = if d < n_classes {
        g.gsms[d][(i, j)]
    } else if d == n_classes {
        g.v_static[(i, j)]
    } else {
        g.v_dyn[(i, j)]
    };
    if im { z.im } else { z.re }
}

pub fn gsm_from(entries: CMat) -> Gsm {
    Gsm::new(entries, 2, 1).unwrap()
}
