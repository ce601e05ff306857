//! On-disk dataset and checkpoint directories.
//!
//! A directory holds a `manifest.toml` plus one raw binary file per array.
//! Arrays are row-major; complex values are interleaved `(re, im)` pairs of
//! little-endian `f64`, real arrays plain little-endian `f64`. Directories
//! are written to a temporary sibling and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coupled::{CouplingMatrix, DofAssignment};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, CMat, C64};
use crate::manifolds::{DesignPoint, ExcitationSet, Gsm};
use crate::pattern::{Angle, Field2, ModalFarFieldSet, SpherePatterns};
use crate::toyem::ArrayModel;

pub const MANIFEST: &str = "manifest.toml";
const DATASET_FORMAT: &str = "gsmarray-dataset";
const CHECKPOINT_FORMAT: &str = "gsmarray-checkpoint";
const VERSION: u32 = 1;
const BYTE_ORDER: &str = "little-endian";

/// Reciprocity tolerance applied on import.
pub const RECIPROCITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Complex,
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    file: String,
    rows: usize,
    cols: usize,
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dimensions {
    elements: usize,
    modes: usize,
    ports: usize,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SphereGrid {
    theta_step_deg: f64,
    phi_step_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DatasetManifest {
    format: String,
    version: u32,
    byte_order: String,
    dimensions: Dimensions,
    dx: f64,
    dy: f64,
    angle_count: usize,
    sphere: Option<SphereGrid>,
    arrays: Vec<ArrayEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointManifest {
    format: String,
    version: u32,
    byte_order: String,
    modes: usize,
    ports: usize,
    rows: usize,
    cols: usize,
    states: usize,
    strategy: String,
    class_of: Vec<usize>,
    arrays: Vec<ArrayEntry>,
}

/// Array model, coupling matrix and modal far fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub model: ArrayModel,
    pub coupling: CouplingMatrix,
    pub fields: ModalFarFieldSet,
}

enum Payload {
    Complex(CMat),
    Real(usize, usize, Vec<f64>),
}

struct Named {
    name: String,
    payload: Payload,
}

fn encode(p: &Payload) -> Vec<u8> {
    let mut out = Vec::new();
    match p {
        Payload::Complex(m) => {
            out.reserve(m.len() * 16);
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                    out.extend_from_slice(&m[(i, j)].im.to_le_bytes());
                }
            }
        }
        Payload::Real(_, _, v) => {
            out.reserve(v.len() * 8);
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

fn entry(n: &Named) -> ArrayEntry {
    let (rows, cols, kind) = match &n.payload {
        Payload::Complex(m) => (m.nrows(), m.ncols(), Kind::Complex),
        Payload::Real(r, c, _) => (*r, *c, Kind::Real),
    };
    ArrayEntry { name: n.name.clone(), file: format!("{}.bin", n.name), rows, cols, kind }
}

fn temp_sibling(dir: &Path, tag: &str) -> PathBuf {
    let name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    dir.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

/// Writes `manifest` and `arrays` into a fresh temporary directory and
/// renames it onto `dir`, replacing any previous contents.
fn write_directory(dir: &Path, manifest: &str, arrays: &[(ArrayEntry, Vec<u8>)]) -> Result<()> {
    let tmp = temp_sibling(dir, "tmp");
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    }
    fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    for (e, bytes) in arrays {
        let p = tmp.join(&e.file);
        fs::write(&p, bytes).map_err(|err| Error::io(&p, err))?;
    }
    let mp = tmp.join(MANIFEST);
    fs::write(&mp, manifest).map_err(|e| Error::io(&mp, e))?;
    if dir.exists() {
        let old = temp_sibling(dir, "old");
        fs::rename(dir, &old).map_err(|e| Error::io(dir, e))?;
        fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))?;
        fs::remove_dir_all(&old).map_err(|e| Error::io(&old, e))?;
    } else {
        fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn write_arrays<M: Serialize>(dir: &Path, manifest: &M, arrays: &[Named]) -> Result<()> {
    let text = toml::to_string(manifest).map_err(|e| Error::Format(e.to_string()))?;
    let blobs: Vec<(ArrayEntry, Vec<u8>)> = arrays.iter().map(|n| (entry(n), encode(&n.payload))).collect();
    write_directory(dir, &text, &blobs)
}

fn read_manifest<M: for<'de> Deserialize<'de>>(dir: &Path) -> Result<M> {
    let p = dir.join(MANIFEST);
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))
}

fn check_header(format: &str, version: u32, byte_order: &str, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Format(format!("manifest format '{format}', expected '{expected}'")));
    }
    if version != VERSION {
        return Err(Error::Format(format!("unsupported manifest version {version}")));
    }
    if byte_order != BYTE_ORDER {
        return Err(Error::Format(format!("unsupported byte order '{byte_order}'")));
    }
    Ok(())
}

fn find<'a>(arrays: &'a [ArrayEntry], name: &str) -> Result<&'a ArrayEntry> {
    arrays
        .iter()
        .find(|a| a.name == name)
        .ok_or_else(|| Error::Format(format!("manifest lists no array '{name}'")))
}

fn read_raw(dir: &Path, e: &ArrayEntry, rows: usize, cols: usize, kind: Kind) -> Result<Vec<f64>> {
    if e.kind != kind {
        return Err(Error::Format(format!("array '{}' has the wrong element kind", e.name)));
    }
    let per = if kind == Kind::Complex { 2 } else { 1 };
    if e.rows != rows || e.cols != cols {
        return Err(Error::ShapeMismatch { name: e.name.clone(), expected: rows * cols, found: e.rows * e.cols });
    }
    let p = dir.join(&e.file);
    let bytes = fs::read(&p).map_err(|err| Error::io(&p, err))?;
    if bytes.len() != rows * cols * per * 8 {
        return Err(Error::ShapeMismatch {
            name: e.name.clone(),
            expected: rows * cols,
            found: bytes.len() / (8 * per),
        });
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(e.name.clone()));
    }
    Ok(vals)
}

fn read_complex(dir: &Path, arrays: &[ArrayEntry], name: &str, rows: usize, cols: usize) -> Result<CMat> {
    let vals = read_raw(dir, find(arrays, name)?, rows, cols, Kind::Complex)?;
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let o = 2 * (i * cols + j);
        C64::new(vals[o], vals[o + 1])
    }))
}

fn fields_to_matrix(values: &[Field2]) -> CMat {
    CMat::from_fn(values.len(), 2, |i, j| values[i][j])
}

fn matrix_to_fields(m: &CMat) -> Vec<Field2> {
    (0..m.nrows()).map(|i| [m[(i, 0)], m[(i, 1)]]).collect()
}

/// Writes a dataset directory.
pub fn export_dataset(dir: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let (model, fields) = (&data.model, &data.fields);
    let k = model.n_elements();
    if data.coupling.n_elements() != k || fields.n_elements != k || fields.n_modes != data.coupling.n_modes() {
        return Err(Error::DimensionMismatch("dataset parts disagree on K or N".into()));
    }
    let mut arrays = vec![
        Named { name: "coupling".into(), payload: Payload::Complex(data.coupling.as_dense().clone()) },
        Named {
            name: "angles".into(),
            payload: Payload::Real(
                fields.angles.len(),
                2,
                fields.angles.iter().flat_map(|a| [a.theta_deg, a.phi_deg]).collect(),
            ),
        },
        Named { name: "far_field".into(), payload: Payload::Complex(fields_to_matrix(&fields.samples)) },
    ];
    if let Some(sp) = &fields.sphere {
        arrays.push(Named { name: "sphere_patterns".into(), payload: Payload::Complex(fields_to_matrix(&sp.element_patterns)) });
    }
    let manifest = DatasetManifest {
        format: DATASET_FORMAT.into(),
        version: VERSION,
        byte_order: BYTE_ORDER.into(),
        dimensions: Dimensions {
            elements: k,
            modes: fields.n_modes,
            ports: model.n_ports,
            rows: model.rows,
            cols: model.cols,
        },
        dx: model.dx,
        dy: model.dy,
        angle_count: fields.angles.len(),
        sphere: fields.sphere.as_ref().map(|s| SphereGrid {
            theta_step_deg: s.theta_step_deg,
            phi_step_deg: s.phi_step_deg,
        }),
        arrays: arrays.iter().map(entry).collect(),
    };
    write_arrays(dir.as_ref(), &manifest, &arrays)
}

/// Reads and validates a dataset directory.
///
/// Non-zero diagonal coupling blocks and reciprocity defects above
/// [`RECIPROCITY_TOL`] are reported as warnings. Without `allow_override`
/// they fail the import with [`Error::Validation`]; with it the import
/// proceeds (diagonal blocks are cleared) and the warnings are returned.
pub fn import_dataset(dir: impl AsRef<Path>, allow_override: bool) -> Result<(Dataset, Vec<String>)> {
    let dir = dir.as_ref();
    let m: DatasetManifest = read_manifest(dir)?;
    check_header(&m.format, m.version, &m.byte_order, DATASET_FORMAT)?;
    let d = &m.dimensions;
    if d.elements != d.rows * d.cols {
        return Err(Error::Format(format!("K = {} but R·C = {}", d.elements, d.rows * d.cols)));
    }
    if d.modes != 2 {
        return Err(Error::Format(format!("crossed-dipole model needs N = 2, manifest has {}", d.modes)));
    }
    let model = ArrayModel::new(d.rows, d.cols, m.dx, m.dy, d.ports)?;
    let kn = d.elements * d.modes;

    let mut g = read_complex(dir, &m.arrays, "coupling", kn, kn)?;
    let a_vals = read_raw(dir, find(&m.arrays, "angles")?, m.angle_count, 2, Kind::Real)?;
    let angles: Vec<Angle> = a_vals.chunks_exact(2).map(|p| Angle::new(p[0], p[1])).collect();
    let samples = matrix_to_fields(&read_complex(dir, &m.arrays, "far_field", kn * m.angle_count, 2)?);
    let sphere = match &m.sphere {
        None => None,
        Some(s) => {
            let np = crate::pattern::sphere_grid(s.theta_step_deg, s.phi_step_deg).len();
            let pats = read_complex(dir, &m.arrays, "sphere_patterns", d.modes * np, 2)?;
            Some(SpherePatterns {
                theta_step_deg: s.theta_step_deg,
                phi_step_deg: s.phi_step_deg,
                element_patterns: matrix_to_fields(&pats),
                positions: model.positions(),
            })
        }
    };

    let mut warnings = Vec::new();
    let n = d.modes;
    let mut diag_nonzero = false;
    for k in 0..d.elements {
        if g.view((k * n, k * n), (n, n)).iter().any(|z| *z != C64::new(0.0, 0.0)) {
            warnings.push(format!("diagonal coupling block {k} is not zero"));
            diag_nonzero = true;
        }
    }
    let recip = (0..kn)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (g[(i, j)] - g[(j, i)]).norm())
        .fold(0.0, f64::max);
    if recip > RECIPROCITY_TOL {
        warnings.push(format!("reciprocity defect {recip:.3e} exceeds {RECIPROCITY_TOL:.0e}"));
    }
    for w in &warnings {
        log::warn!("{}: {w}", dir.display());
    }
    if !warnings.is_empty() && !allow_override {
        return Err(Error::Validation(warnings));
    }
    if diag_nonzero {
        for k in 0..d.elements {
            g.view_mut((k * n, k * n), (n, n)).fill(C64::new(0.0, 0.0));
        }
    }
    let coupling = CouplingMatrix::from_dense(g, d.elements, d.modes)?;
    let fields = ModalFarFieldSet::new(d.elements, d.modes, angles, samples, sphere)?;
    Ok((Dataset { model, coupling, fields }, warnings))
}

/// Writes a design point and its DOF assignment.
pub fn save_checkpoint(dir: impl AsRef<Path>, x: &DesignPoint, assignment: &DofAssignment) -> Result<()> {
    let g0 = &x.class_gsms[0];
    if assignment.n_classes() != x.n_classes() {
        return Err(Error::DimensionMismatch("assignment and design point disagree on D".into()));
    }
    let mut arrays: Vec<Named> = x
        .class_gsms
        .iter()
        .enumerate()
        .map(|(d, g)| Named { name: format!("gsm_{d}"), payload: Payload::Complex(g.entries.clone()) })
        .collect();
    arrays.push(Named { name: "v_static".into(), payload: Payload::Complex(x.excitations.v_static.clone()) });
    arrays.push(Named { name: "v_dyn".into(), payload: Payload::Complex(x.excitations.v_dyn.clone()) });
    let manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        version: VERSION,
        byte_order: BYTE_ORDER.into(),
        modes: g0.n_modes,
        ports: g0.n_ports,
        rows: x.excitations.rows,
        cols: x.excitations.cols(),
        states: x.excitations.states(),
        strategy: assignment.strategy.clone(),
        class_of: assignment.class_of.clone(),
        arrays: arrays.iter().map(entry).collect(),
    };
    write_arrays(dir.as_ref(), &manifest, &arrays)
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<(DesignPoint, DofAssignment)> {
    let dir = dir.as_ref();
    let m: CheckpointManifest = read_manifest(dir)?;
    check_header(&m.format, m.version, &m.byte_order, CHECKPOINT_FORMAT)?;
    let assignment = DofAssignment::new(m.class_of.clone(), m.rows, m.cols, m.strategy.clone())?;
    let dim = m.modes + m.ports;
    let gsms = (0..assignment.n_classes())
        .map(|d| Gsm::new(read_complex(dir, &m.arrays, &format!("gsm_{d}"), dim, dim)?, m.modes, m.ports))
        .collect::<Result<Vec<_>>>()?;
    let v_static = read_complex(dir, &m.arrays, "v_static", m.rows * m.ports, m.cols)?;
    let v_dyn = read_complex(dir, &m.arrays, "v_dyn", m.cols, m.states)?;
    if !all_finite(&v_static) || !all_finite(&v_dyn) {
        return Err(Error::NonFinite("excitation".into()));
    }
    let x = DesignPoint::new(gsms, ExcitationSet::new(v_static, v_dyn, m.rows, m.ports)?)?;
    Ok((x, assignment))
}
