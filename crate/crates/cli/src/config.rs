//! Run configuration: a TOML file layered over an optional named preset,
//! then command-line overrides.

use std::path::{Path, PathBuf};

use gsmarray::optimizer::{StageSchedule, Strategy};
use gsmarray::pattern::{chebyshev_band_table, full_cut, scan_table, sidelobe_set, Angle, BeamSpec, LHCP, RHCP};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const PRESET_PAPER_8X8: &str = "paper-8x8";
pub const PRESETS: [&str; 1] = [PRESET_PAPER_8X8];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths, both grid directions.
    pub spacing: f64,
    /// Step of the full-sphere directivity grid.
    #[serde(default = "default_sphere_step")]
    pub sphere_step_deg: f64,
}

fn default_sphere_step() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_alphas() -> Vec<f64> {
    StageSchedule::default().alphas
}

fn default_tol() -> f64 {
    StageSchedule::default().tol
}

fn default_max_iters() -> usize {
    StageSchedule::default().max_iters
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { alphas: default_alphas(), tol: default_tol(), max_iters: default_max_iters() }
    }
}

/// Beam table generated from Chebyshev main-beam widths.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub scan_deg: Vec<f64>,
    pub sll_db: f64,
    pub xpr_db: f64,
    #[serde(default = "default_width_factor")]
    pub width_factor: f64,
}

fn default_width_factor() -> f64 {
    1.0
}

/// One explicitly listed LHCP beam at `φ = 0°`. The sidelobe set is every
/// whole degree at or below `sidelobe_below_deg` and at or above
/// `sidelobe_above_deg`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitBeam {
    pub theta_deg: f64,
    pub sidelobe_below_deg: i32,
    pub sidelobe_above_deg: i32,
    pub sll_db: f64,
    pub xpr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeamTable {
    /// The built-in 13-beam scan table.
    ScanTable,
    Generator(GeneratorConfig),
    Explicit(Vec<ExplicitBeam>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BeamsSection {
    table: Option<String>,
    generator: Option<GeneratorConfig>,
    explicit: Option<Vec<ExplicitBeam>>,
}

/// The config file as written; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    preset: Option<String>,
    dataset: Option<PathBuf>,
    out: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    strategy: Option<String>,
    seed: Option<u64>,
    allow_override: Option<bool>,
    array: Option<ArrayConfig>,
    beams: Option<BeamsSection>,
    schedule: Option<ScheduleConfig>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

/// Values given on the command line; they win over the file and preset.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub strategy: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub strategy: String,
    pub seed: u64,
    pub allow_override: bool,
    pub array: ArrayConfig,
    pub beams: BeamTable,
    pub schedule: ScheduleConfig,
}

/// 8×8 grid at λ/2, the 13-beam scan table, the default stage schedule
/// and PointSymmetry sharing.
pub fn paper_8x8() -> RunConfig {
    RunConfig {
        dataset: PathBuf::from("paper-8x8/dataset"),
        out: PathBuf::from("paper-8x8"),
        checkpoint: None,
        strategy: Strategy::PointSymmetry.name().into(),
        seed: 0,
        allow_override: false,
        array: ArrayConfig { rows: 8, cols: 8, spacing: 0.5, sphere_step_deg: 1.0 },
        beams: BeamTable::ScanTable,
        schedule: ScheduleConfig::default(),
    }
}

pub fn preset(name: &str) -> CliResult<RunConfig> {
    match name {
        PRESET_PAPER_8X8 => Ok(paper_8x8()),
        _ => Err(CliError::Validation(format!(
            "unknown preset '{name}' (available: {})",
            PRESETS.join(", ")
        ))),
    }
}

fn beam_table(section: BeamsSection) -> CliResult<BeamTable> {
    let given = [section.table.is_some(), section.generator.is_some(), section.explicit.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(CliError::Validation(
            "[beams] needs exactly one of table = \"scan\", [beams.generator] or [[beams.explicit]]".into(),
        ));
    }
    if let Some(t) = section.table {
        return match t.as_str() {
            "scan" => Ok(BeamTable::ScanTable),
            _ => Err(CliError::Validation(format!("unknown beam table '{t}' (available: scan)"))),
        };
    }
    if let Some(g) = section.generator {
        return Ok(BeamTable::Generator(g));
    }
    Ok(BeamTable::Explicit(section.explicit.unwrap_or_default()))
}

impl RunConfig {
    /// Layers `file` over the preset (from the command line or the file)
    /// and applies `cli` on top.
    pub fn resolve(file: Option<FileConfig>, cli: &Overrides) -> CliResult<RunConfig> {
        let file = file.unwrap_or_default();
        let preset_name = cli.preset.clone().or(file.preset.clone());
        let base = preset_name.as_deref().map(preset).transpose()?;
        let mut missing = Vec::new();
        macro_rules! pick {
            ($cli:expr, $file:expr, $base:ident, $name:literal) => {
                match $cli.or($file).or(base.as_ref().map(|b| b.$base.clone())) {
                    Some(v) => Some(v),
                    None => {
                        missing.push($name);
                        None
                    }
                }
            };
        }
        let dataset = pick!(cli.dataset.clone(), file.dataset, dataset, "dataset");
        let out = pick!(cli.out.clone(), file.out, out, "out");
        let strategy = pick!(cli.strategy.clone(), file.strategy, strategy, "strategy");
        let array = pick!(None, file.array, array, "[array]");
        let beams = match file.beams {
            Some(section) => Some(beam_table(section)?),
            None => pick!(None, None, beams, "[beams]"),
        };
        if !missing.is_empty() {
            return Err(CliError::Validation(format!(
                "missing configuration: {} (set it in the config file or use --preset {PRESET_PAPER_8X8})",
                missing.join(", ")
            )));
        }
        Ok(RunConfig {
            dataset: dataset.unwrap(),
            out: out.unwrap(),
            checkpoint: cli.checkpoint.clone().or(file.checkpoint),
            strategy: strategy.unwrap(),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            allow_override: file.allow_override.unwrap_or(false),
            array: array.unwrap(),
            beams: beams.unwrap(),
            schedule: file.schedule.or(base.map(|b| b.schedule)).unwrap_or_default(),
        })
    }

    pub fn strategy(&self) -> CliResult<Strategy> {
        Ok(self.strategy.parse::<Strategy>()?)
    }

    pub fn schedule(&self) -> CliResult<StageSchedule> {
        Ok(StageSchedule::new(self.schedule.alphas.clone(), self.schedule.tol, self.schedule.max_iters)?)
    }

    pub fn beam_specs(&self) -> CliResult<Vec<BeamSpec>> {
        let beams = match &self.beams {
            BeamTable::ScanTable => scan_table(),
            BeamTable::Generator(g) => chebyshev_band_table(
                &g.scan_deg,
                self.array.cols,
                self.array.spacing,
                g.sll_db,
                g.xpr_db,
                g.width_factor,
            )?,
            BeamTable::Explicit(list) => list
                .iter()
                .map(|b| BeamSpec {
                    target: Angle::new(b.theta_deg, 0.0),
                    u_d: LHCP,
                    u_x: RHCP,
                    sll_db: b.sll_db,
                    xpr_db: b.xpr_db,
                    side_set: sidelobe_set(b.sidelobe_below_deg, b.sidelobe_above_deg),
                    cross_set: full_cut(),
                })
                .collect(),
        };
        for b in &beams {
            b.validate()?;
        }
        Ok(beams)
    }

    /// Every out-of-range value, one message each.
    pub fn problems(&self, needs_dataset: bool, needs_checkpoint: bool) -> Vec<String> {
        let mut p = Vec::new();
        let a = &self.array;
        if a.rows == 0 || a.cols == 0 {
            p.push(format!("array: grid {}×{} must have at least one row and column", a.rows, a.cols));
        }
        if !(a.spacing > 0.0 && a.spacing.is_finite()) {
            p.push(format!("array.spacing = {} must be a positive number of wavelengths", a.spacing));
        }
        if !(a.sphere_step_deg > 0.0 && a.sphere_step_deg <= 10.0) {
            p.push(format!("array.sphere_step_deg = {} must lie in (0, 10]", a.sphere_step_deg));
        }
        if let Err(e) = self.strategy() {
            p.push(e.to_string());
        }
        if let Err(e) = self.schedule() {
            p.push(format!("schedule: {e}"));
        }
        let angle = |what: String, t: f64, p: &mut Vec<String>| {
            if !(-90.0..=90.0).contains(&t) {
                p.push(format!("{what} = {t}° must lie in [−90°, 90°]"));
            } else if t.fract() != 0.0 {
                p.push(format!("{what} = {t}° must be a whole degree (the far-field cut is sampled at 1°)"));
            }
        };
        let negative = |what: String, v: f64, p: &mut Vec<String>| {
            if !(v < 0.0) {
                p.push(format!("{what} = {v} dB must be negative"));
            }
        };
        match &self.beams {
            BeamTable::ScanTable => {}
            BeamTable::Generator(g) => {
                if g.scan_deg.is_empty() {
                    p.push("beams.generator.scan_deg is empty".into());
                }
                for (i, &t) in g.scan_deg.iter().enumerate() {
                    angle(format!("beams.generator.scan_deg[{i}]"), t, &mut p);
                }
                negative("beams.generator.sll_db".into(), g.sll_db, &mut p);
                negative("beams.generator.xpr_db".into(), g.xpr_db, &mut p);
                if !(g.width_factor > 0.0 && g.width_factor.is_finite()) {
                    p.push(format!("beams.generator.width_factor = {} must be positive", g.width_factor));
                }
                if self.array.cols < 2 {
                    p.push("beams.generator needs at least 2 array columns".into());
                }
            }
            BeamTable::Explicit(list) => {
                if list.is_empty() {
                    p.push("beams.explicit is empty".into());
                }
                for (i, b) in list.iter().enumerate() {
                    angle(format!("beams.explicit[{i}].theta_deg"), b.theta_deg, &mut p);
                    for (name, v) in [("sidelobe_below_deg", b.sidelobe_below_deg), ("sidelobe_above_deg", b.sidelobe_above_deg)] {
                        if !(-91..=91).contains(&v) {
                            p.push(format!("beams.explicit[{i}].{name} = {v}° must lie in [−91°, 91°]"));
                        }
                    }
                    if !(f64::from(b.sidelobe_below_deg) < b.theta_deg && b.theta_deg < f64::from(b.sidelobe_above_deg)) {
                        p.push(format!(
                            "beams.explicit[{i}]: the main-beam band ({}°, {}°) must contain theta_deg = {}°",
                            b.sidelobe_below_deg, b.sidelobe_above_deg, b.theta_deg
                        ));
                    }
                    negative(format!("beams.explicit[{i}].sll_db"), b.sll_db, &mut p);
                    negative(format!("beams.explicit[{i}].xpr_db"), b.xpr_db, &mut p);
                }
            }
        }
        if needs_dataset && !self.dataset.is_dir() {
            p.push(format!(
                "dataset directory {} does not exist (run `preprocess` first or pass --dataset)",
                self.dataset.display()
            ));
        }
        if needs_checkpoint {
            match &self.checkpoint {
                None => p.push("no checkpoint given (pass --checkpoint or set checkpoint in the config)".into()),
                Some(c) if !c.is_dir() => p.push(format!("checkpoint directory {} does not exist", c.display())),
                Some(_) => {}
            }
        }
        p
    }

    pub fn validate(&self, needs_dataset: bool, needs_checkpoint: bool) -> CliResult<()> {
        let p = self.problems(needs_dataset, needs_checkpoint);
        if p.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(format!("invalid configuration:\n  - {}", p.join("\n  - "))))
        }
    }
}
