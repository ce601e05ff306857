use std::fs;
use std::path::Path;
use std::time::Instant;

use gsmarray::chebyshev::{measured_sidelobe_db, steered_weights};
use gsmarray::dataset::{export_dataset, import_dataset, load_checkpoint, save_checkpoint, Dataset};
use gsmarray::linalg::C64;
use gsmarray::manifolds::DesignPoint;
use gsmarray::optimizer::{dof_strategy, staged_optimize, Problem};
use gsmarray::pattern::{far_field, full_cut, metrics, pattern_cut_csv};
use gsmarray::realization::{chi_sweep, fit_toy_element, format_report, open_load, SnapGrid, SweepOptions};
use gsmarray::toyem::{build_far_field_set, coupling_matrix, toeplitz_block_count, ArrayModel, CouplingMode};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn load_dataset(cfg: &RunConfig) -> CliResult<Dataset> {
    let (data, warnings) = import_dataset(&cfg.dataset, cfg.allow_override)?;
    for w in warnings {
        log::warn!("dataset {}: {w}", cfg.dataset.display());
    }
    let m = &data.model;
    let a = &cfg.array;
    if (m.rows, m.cols) != (a.rows, a.cols) || m.dx != a.spacing || m.dy != a.spacing {
        return Err(CliError::Validation(format!(
            "dataset {} holds a {}×{} grid at ({}, {}) λ but the config asks for {}×{} at {} λ",
            cfg.dataset.display(),
            m.rows,
            m.cols,
            m.dx,
            m.dy,
            a.rows,
            a.cols,
            a.spacing
        )));
    }
    Ok(data)
}

pub fn preprocess(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(false, false)?;
    let a = &cfg.array;
    let start = Instant::now();
    let model = ArrayModel::new(a.rows, a.cols, a.spacing, a.spacing, 1)?;
    let coupling = coupling_matrix(&model, CouplingMode::Toeplitz)?;
    let fields = build_far_field_set(&model, full_cut(), Some((a.sphere_step_deg, a.sphere_step_deg)))?;
    let assembled = start.elapsed().as_secs_f64();
    let k = model.n_elements();
    let nonzero = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|&(i, j)| coupling.block(i, j).iter().any(|z| z.norm() != 0.0))
        .count();
    let distinct = toeplitz_block_count(&model);
    let n = coupling.n_modes();
    let angles = fields.angles.len();
    let sphere_points = fields.sphere.as_ref().map(|s| s.n_points()).unwrap_or(0);
    let data = Dataset { model, coupling, fields };
    export_dataset(&cfg.dataset, &data)?;
    let total = start.elapsed().as_secs_f64();
    println!("dataset    {}", cfg.dataset.display());
    println!("elements   K = {k} ({}×{}), modes N = {n}, ports P = {}", a.rows, a.cols, data.model.n_ports);
    println!("coupling   {}×{}, {} blocks, {nonzero} nonzero, {distinct} distinct offsets", k * n, k * n, k * k);
    println!("far field  {angles} cut angles, {sphere_points} sphere points");
    println!("time       assemble {assembled:.3} s, total {total:.3} s");
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    strategy: String,
    seed: u64,
    rows: usize,
    cols: usize,
    classes: usize,
    beams: usize,
    complex_values: usize,
    real_parameters: usize,
    stages: usize,
    iterations: usize,
    final_cost: f64,
    worst_ratio: f64,
    all_targets_met: bool,
}

pub fn optimize(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(true, false)?;
    let strategy = cfg.strategy()?;
    let schedule = cfg.schedule()?;
    let beams = cfg.beam_specs()?;
    let data = load_dataset(cfg)?;
    let a = &cfg.array;
    let assignment = dof_strategy(strategy, a.rows, a.cols)?;
    let problem = Problem::new(&assignment, &data.coupling, &data.fields, &beams)?;
    let x0 = DesignPoint::initial(
        assignment.n_classes(),
        data.fields.n_modes,
        data.model.n_ports,
        a.rows,
        a.cols,
        beams.len(),
        cfg.seed,
    )?;
    let start = Instant::now();
    let (x, trace) = staged_optimize(&problem, x0, &schedule)?;
    let elapsed = start.elapsed().as_secs_f64();
    let worst = problem.worst_ratios(&x)?.into_iter().fold(0.0, f64::max);
    let complex_values = x.complex_dof_count();
    let summary = Summary {
        strategy: strategy.name().into(),
        seed: cfg.seed,
        rows: a.rows,
        cols: a.cols,
        classes: assignment.n_classes(),
        beams: beams.len(),
        complex_values,
        real_parameters: 2 * complex_values,
        stages: trace.n_stages(),
        iterations: trace.records.len(),
        final_cost: trace.final_cost().unwrap_or(f64::NAN),
        worst_ratio: worst,
        all_targets_met: worst <= 1.0,
    };
    write(&cfg.out.join("trace.csv"), &trace.to_csv())?;
    save_checkpoint(cfg.out.join("checkpoint"), &x, &assignment)?;
    let text = toml::to_string(&summary).map_err(|e| CliError::Numeric(e.to_string()))?;
    write(&cfg.out.join("summary.toml"), &text)?;
    println!(
        "strategy   {} on {}×{}: D = {} classes, S = {} beams",
        summary.strategy, a.rows, a.cols, summary.classes, summary.beams
    );
    println!("design     {complex_values} complex values ({} real parameters)", summary.real_parameters);
    println!(
        "result     cost {:.6e} after {} iterations in {} stages, worst ratio {worst:.6}",
        summary.final_cost, summary.iterations, summary.stages
    );
    println!("targets    {}", if summary.all_targets_met { "all met" } else { "not all met" });
    println!("output     {}", cfg.out.display());
    println!("time       {elapsed:.3} s");
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, baseline: bool) -> CliResult<()> {
    if baseline {
        return evaluate_baseline(cfg);
    }
    cfg.validate(true, true)?;
    let beams = cfg.beam_specs()?;
    let data = load_dataset(cfg)?;
    let checkpoint = cfg.checkpoint.as_ref().expect("validated");
    let (x, assignment) = load_checkpoint(checkpoint)?;
    let problem = Problem::new(&assignment, &data.coupling, &data.fields, &beams)?;
    let f = problem.solve(&x)?;
    let sphere = data.fields.sphere.as_ref().ok_or_else(|| {
        CliError::Validation(format!("dataset {} has no sphere patterns for directivity", cfg.dataset.display()))
    })?;
    let mut table = String::from("beam,theta_deg,directivity_dbi,sll_db,xpr_db,sll_target_db,xpr_target_db,pass\n");
    println!("{:>4} {:>7} {:>9} {:>9} {:>9} {:>6}", "beam", "theta", "D [dBi]", "SLL [dB]", "XPR [dB]", "pass");
    let mut passed = 0;
    for (s, beam) in beams.iter().enumerate() {
        let col = f.columns(s, 1).into_owned();
        let coeffs: Vec<C64> = col.iter().copied().collect();
        let samples = far_field(&col, &data.fields, &beam.sample_angles())?;
        let m = metrics(&samples[0], beam, &data.fields, &coeffs)?;
        let pass = m.passes(beam);
        passed += usize::from(pass);
        let theta = beam.target.theta_deg;
        table.push_str(&format!(
            "{s},{theta},{:.6},{:.6},{:.6},{},{},{pass}\n",
            m.directivity_dbi, m.sll_db, m.xpr_db, beam.sll_db, beam.xpr_db
        ));
        println!(
            "{s:>4} {theta:>7} {:>9.3} {:>9.3} {:>9.3} {:>6}",
            m.directivity_dbi,
            m.sll_db,
            m.xpr_db,
            if pass { "PASS" } else { "FAIL" }
        );
        let cut = far_field(&col, &data.fields, &full_cut())?;
        let prad = sphere.radiated_power(&coeffs, data.fields.n_modes);
        write(&cfg.out.join("cuts").join(format!("beam_{s:02}.csv")), &pattern_cut_csv(&cut[0], beam, prad))?;
    }
    write(&cfg.out.join("metrics.csv"), &table)?;
    println!("{passed} of {} beams meet their targets", beams.len());
    Ok(())
}

/// Dolph–Chebyshev line of `cols` elements steered to every beam.
fn evaluate_baseline(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(false, false)?;
    let beams = cfg.beam_specs()?;
    let (n, d) = (cfg.array.cols, cfg.array.spacing);
    let mut table = String::from("beam,theta_deg,sll_db,sll_target_db\n");
    println!("Chebyshev baseline: {n} elements at {d} λ");
    println!("{:>4} {:>7} {:>9} {:>9}", "beam", "theta", "SLL [dB]", "target");
    for (s, beam) in beams.iter().enumerate() {
        let theta = beam.target.theta_deg;
        let w = steered_weights(n, beam.sll_db, d, theta)?;
        let sll = measured_sidelobe_db(&w, d, 0.1);
        table.push_str(&format!("{s},{theta},{sll:.6},{}\n", beam.sll_db));
        println!("{s:>4} {theta:>7} {sll:>9.3} {:>9.3}", beam.sll_db);
    }
    write(&cfg.out.join("baseline.csv"), &table)
}

pub fn realize(cfg: &RunConfig) -> CliResult<()> {
    let checkpoint = match &cfg.checkpoint {
        Some(c) if c.is_dir() => c,
        _ => return cfg.validate(false, true),
    };
    let (x, assignment) = load_checkpoint(checkpoint)?;
    let dir = cfg.out.join("realize");
    let opts = SweepOptions::default();
    let mut table = String::from("class,elements,status,chi_star_deg,chi_max_deg,chi_argmin_deg,pole_near,lambdas,phi_deg,gsm_residual\n");
    println!("{:>5} {:>4} {:>8} {:>6} {:>5}  {:<28} {:>10}", "class", "K_d", "status", "chi*", "pole", "lambdas", "phi [deg]");
    let mut failures = 0;
    for (d, gsm) in x.class_gsms.iter().enumerate() {
        let members = assignment.class_of.iter().filter(|&&c| c == d).count();
        let sweep = match chi_sweep(gsm, &open_load(gsm.n_ports), &opts) {
            Ok(s) => s,
            Err(e) => {
                failures += 1;
                log::warn!("class {d}: {e}");
                table.push_str(&format!("{d},{members},failed,,,,,,,\n"));
                write(&dir.join(format!("class_{d}.toml")), &format!("[class_{d}]\nerror = {:?}\n", e.to_string()))?;
                println!("{d:>5} {members:>4} {:>8}  {e}", "failed");
                continue;
            }
        };
        write(&dir.join(format!("class_{d}_sweep.csv")), &sweep.to_csv())?;
        let fit = if gsm.n_modes == 2 && gsm.n_ports == 1 {
            fit_toy_element(&sweep.target, &SnapGrid::default())
                .map_err(|e| log::info!("class {d}: no toy-element fit: {e}"))
                .ok()
        } else {
            None
        };
        write(&dir.join(format!("class_{d}.toml")), &format_report(d, &sweep, fit.as_ref()))?;
        let lambdas: Vec<String> = sweep.target.lambdas.iter().map(|l| format!("{l:.6}")).collect();
        let (phi, residual) = match &fit {
            Some(f) => (format!("{:.6}", f.element.rotation_deg), format!("{:.6e}", f.residual)),
            None => (String::new(), String::new()),
        };
        table.push_str(&format!(
            "{d},{members},ok,{},{},{},{},{},{phi},{residual}\n",
            sweep.chi_star_deg,
            sweep.chi_max_deg,
            sweep.chi_argmin_deg,
            sweep.pole_near,
            lambdas.join(";")
        ));
        println!(
            "{d:>5} {members:>4} {:>8} {:>6} {:>5}  {:<28} {:>10}",
            "ok",
            sweep.chi_star_deg,
            if sweep.pole_near { "near" } else { "-" },
            lambdas.join(" "),
            phi
        );
    }
    write(&dir.join("realization.csv"), &table)?;
    println!("{} classes, {failures} sweep failures; reports in {}", x.n_classes(), dir.display());
    Ok(())
}
