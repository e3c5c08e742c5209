//! File formats: JSON for configs, matrices, assemblages, functionals and SDP
//! results; CSV for records, Wigner grids, sweeps and histograms.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, WignerPoint};
use crate::homodyne::Sign;
use crate::linalg::{c, CMat};
use crate::photonics::ExperimentConfig;
use crate::sdp::SdpStatus;
use crate::steering::{Certificate, SdpResult, SteeringFunctional, SweepRow};
use crate::tomography::{QuadratureRecord, ViolationHistogram};

/// Row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub mode_dims: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat, mode_dims: Vec<usize>) -> Self {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|k| f(&m[(i, k)])).collect()).collect()
        };
        MatrixJson {
            mode_dims,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let d: usize = self.mode_dims.iter().product();
        let square = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !square(&self.re) || !square(&self.im) {
            return Err(Error::Parse(format!("matrix is not {d}x{d} as mode_dims {:?} require", self.mode_dims)));
        }
        Ok(CMat::from_fn(d, d, |i, k| c(self.re[i][k], self.im[i][k])))
    }
}

impl From<&DensityMatrix> for MatrixJson {
    fn from(rho: &DensityMatrix) -> Self {
        MatrixJson::from_matrix(&rho.entries, rho.mode_dims.clone())
    }
}

impl TryFrom<&MatrixJson> for DensityMatrix {
    type Error = Error;
    fn try_from(m: &MatrixJson) -> Result<Self> {
        DensityMatrix::new(m.to_matrix()?, m.mode_dims.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberJson {
    pub theta_index: usize,
    pub sign: Sign,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblageJson {
    pub phases_rad: Vec<f64>,
    pub members: Vec<MemberJson>,
}

fn members_json(ops: &[[CMat; 2]]) -> Vec<MemberJson> {
    let mut out = Vec::with_capacity(2 * ops.len());
    for (j, pair) in ops.iter().enumerate() {
        for sign in Sign::BOTH {
            let m = &pair[sign.index()];
            out.push(MemberJson {
                theta_index: j,
                sign,
                matrix: MatrixJson::from_matrix(m, vec![m.nrows()]),
            });
        }
    }
    out
}

fn members_from_json(members: &[MemberJson], m_a: usize) -> Result<Vec<[CMat; 2]>> {
    let mut slots: Vec<[Option<CMat>; 2]> = vec![[None, None]; m_a];
    for m in members {
        let slot = slots
            .get_mut(m.theta_index)
            .ok_or_else(|| Error::Parse(format!("theta_index {} out of range", m.theta_index)))?;
        if slot[m.sign.index()].replace(m.matrix.to_matrix()?).is_some() {
            return Err(Error::Parse(format!("duplicate member ({}, {:+})", m.theta_index, m.sign.value())));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(j, [p, n])| match (p, n) {
            (Some(p), Some(n)) => Ok([p, n]),
            _ => Err(Error::Parse(format!("setting {j} is missing a sign"))),
        })
        .collect()
}

impl From<&Assemblage> for AssemblageJson {
    fn from(a: &Assemblage) -> Self {
        AssemblageJson {
            phases_rad: a.phases.clone(),
            members: members_json(&a.members),
        }
    }
}

impl TryFrom<&AssemblageJson> for Assemblage {
    type Error = Error;
    fn try_from(j: &AssemblageJson) -> Result<Self> {
        Assemblage::new(j.phases_rad.clone(), members_from_json(&j.members, j.phases_rad.len())?)
    }
}

/// A functional in the assemblage layout, with its normalization tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalJson {
    pub normalization_tag: String,
    pub phases_rad: Vec<f64>,
    pub members: Vec<MemberJson>,
}

impl FunctionalJson {
    pub fn new(f: &SteeringFunctional, phases: &[f64]) -> Self {
        FunctionalJson {
            normalization_tag: f.normalization_tag.clone(),
            phases_rad: phases.to_vec(),
            members: members_json(&f.operators),
        }
    }

    pub fn to_functional(&self) -> Result<SteeringFunctional> {
        Ok(SteeringFunctional {
            operators: members_from_json(&self.members, self.phases_rad.len())?,
            normalization_tag: self.normalization_tag.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateJson {
    Functional(FunctionalJson),
    Decomposition { t: f64, states: Vec<MatrixJson> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpResultJson {
    pub status: SdpStatus,
    pub objective: f64,
    pub duality_gap: f64,
    pub dim: usize,
    pub iterations: usize,
    pub signaling_residual: f64,
    pub certifies_steering: bool,
    /// Outcome of re-validating the certificate after the solve.
    pub certificate_check: String,
    pub certificate: CertificateJson,
}

impl SdpResultJson {
    pub fn new(r: &SdpResult, phases: &[f64], certificate_check: String) -> Self {
        let certificate = match &r.certificate {
            Certificate::Functional(f) => CertificateJson::Functional(FunctionalJson::new(f, phases)),
            Certificate::Decomposition { states, t } => CertificateJson::Decomposition {
                t: *t,
                states: states.iter().map(|s| MatrixJson::from_matrix(s, vec![s.nrows()])).collect(),
            },
        };
        SdpResultJson {
            status: r.status,
            objective: r.objective,
            duality_gap: r.duality_gap,
            dim: r.dim,
            iterations: r.iterations,
            signaling_residual: r.signaling_residual,
            certifies_steering: r.certifies_steering(),
            certificate_check,
            certificate,
        }
    }

    pub fn to_result(&self) -> Result<SdpResult> {
        let certificate = match &self.certificate {
            CertificateJson::Functional(f) => Certificate::Functional(f.to_functional()?),
            CertificateJson::Decomposition { t, states } => Certificate::Decomposition {
                t: *t,
                states: states.iter().map(MatrixJson::to_matrix).collect::<Result<_>>()?,
            },
        };
        Ok(SdpResult {
            status: self.status,
            objective: self.objective,
            duality_gap: self.duality_gap,
            dim: self.dim,
            iterations: self.iterations,
            signaling_residual: self.signaling_residual,
            certificate,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub mean: f64,
    pub std: f64,
    pub separation_sigmas: f64,
    pub n: usize,
}

impl From<&ViolationHistogram> for HistogramSummary {
    fn from(h: &ViolationHistogram) -> Self {
        HistogramSummary {
            mean: h.mean,
            std: h.std,
            separation_sigmas: h.separation_sigmas,
            n: h.s_values.len(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Parse(e.to_string())
    }
}

/// Pretty-printed, newline-terminated.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut s = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut s)?;
    Ok(serde_json::from_str(&s)?)
}

/// Parses a config document; missing keys take their defaults.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut doc: Value = serde_json::from_str(text)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let config: ExperimentConfig = serde_json::from_value(doc).map_err(|e| Error::invalid("config", e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut s = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut s)?;
    parse_config(&s, overrides)
}

/// `key=value` with dotted keys for nested tables (`chain.n_retained=500`). The value
/// is read as JSON when it parses, otherwise as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::invalid("override", format!("`{assignment}` is not key=value")))?;
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.trim().split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::invalid("override", format!("`{key}`: parent is not an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!()
}

pub fn write_records(path: &Path, records: &[QuadratureRecord]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "event_id,alice_phase_index,alice_sign,bob_phase_rad,bob_q")?;
    for r in records {
        let sign = match r.alice_sign {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        };
        writeln!(w, "{},{},{},{:?},{:?}", r.event_id, r.alice_phase_index, sign, r.bob_phase, r.bob_q)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<QuadratureRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    rdr.deserialize().map(|r| r.map_err(csv_err)).collect()
}

pub fn write_wigner(path: &Path, points: &[WignerPoint]) -> Result<()> {
    write_csv(path, points)
}

pub fn read_wigner(path: &Path) -> Result<Vec<WignerPoint>> {
    read_csv(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCsvRow {
    pub axis_value: f64,
    #[serde(rename = "S_min")]
    pub s_min: f64,
    pub status: SdpStatus,
    pub gap: f64,
    pub dim: usize,
}

impl From<&SweepRow> for SweepCsvRow {
    fn from(r: &SweepRow) -> Self {
        SweepCsvRow {
            axis_value: r.axis_value,
            s_min: r.s_min,
            status: r.status,
            gap: r.gap,
            dim: r.dim,
        }
    }
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_csv(path, &rows.iter().map(SweepCsvRow::from).collect::<Vec<_>>())
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepCsvRow>> {
    read_csv(path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SValue {
    s_value: f64,
}

/// `stem.csv` with one `s_value` per line and `stem.json` with the summary.
pub fn write_histogram(csv_path: &Path, json_path: &Path, h: &ViolationHistogram) -> Result<()> {
    write_csv(csv_path, &h.s_values.iter().map(|&s_value| SValue { s_value }).collect::<Vec<_>>())?;
    write_json(json_path, &HistogramSummary::from(h))
}

pub fn read_histogram_values(path: &Path) -> Result<Vec<f64>> {
    Ok(read_csv::<SValue>(path)?.into_iter().map(|v| v.s_value).collect())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    rdr.deserialize().map(|r| r.map_err(csv_err)).collect()
}
