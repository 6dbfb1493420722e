//! On-disk formats.
//!
//! * Instances: a JSON header next to a raw little-endian f64 blob holding the
//!   row-major design matrix. The header names the blob file.
//! * Sweep results: pretty JSON, a per-trial CSV
//!   `axis_value,trial,error,seed,wallclock_ms`, and a per-point summary CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::experiments::SweepResult;
use crate::linalg::DenseMatrix;
use crate::model::{NoiseSpec, ProblemInstance, SparseSignal};
use crate::rng::SeedRecord;

pub const TOOL_NAME: &str = "twf";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        Self {
            name: TOOL_NAME.into(),
            version: crate::VERSION.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceHeader {
    tool: ToolInfo,
    m: usize,
    p: usize,
    design_file: String,
    design_encoding: String,
    seed: Option<SeedRecord>,
    noise_spec: NoiseSpec,
    signal: Option<SparseSignal>,
    measurements: Vec<f64>,
    noise: Vec<f64>,
}

const ENCODING: &str = "f64-le-row-major";

/// Writes `path` (JSON) and a sibling `.bin` blob with the design.
pub fn save_instance(instance: &ProblemInstance, path: &Path) -> Result<()> {
    let blob_path = path.with_extension("bin");
    let blob_name = blob_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| invalid(format!("cannot derive blob name from {}", path.display())))?
        .to_string();
    let header = InstanceHeader {
        tool: ToolInfo::default(),
        m: instance.m(),
        p: instance.p(),
        design_file: blob_name,
        design_encoding: ENCODING.into(),
        seed: instance.seed(),
        noise_spec: instance.noise_spec(),
        signal: instance.signal().cloned(),
        measurements: instance.measurements().to_vec(),
        noise: instance.noise().to_vec(),
    };
    let mut blob = Vec::with_capacity(instance.m() * instance.p() * 8);
    for v in instance.design().as_slice() {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&blob_path, blob)?;
    fs::write(path, serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let header: InstanceHeader = serde_json::from_slice(&fs::read(path)?)?;
    if header.design_encoding != ENCODING {
        return Err(invalid(format!(
            "unsupported design encoding {:?}",
            header.design_encoding
        )));
    }
    let blob_path: PathBuf = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&header.design_file);
    let bytes = fs::read(&blob_path)?;
    if bytes.len() != header.m * header.p * 8 {
        return Err(invalid(format!(
            "{} holds {} bytes, expected {} for a {}x{} design",
            blob_path.display(),
            bytes.len(),
            header.m * header.p * 8,
            header.m,
            header.p
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let design = DenseMatrix::from_row_major(header.m, header.p, data)?;
    ProblemInstance::from_stored(
        design,
        header.noise,
        header.measurements,
        header.noise_spec,
        header.seed,
        header.signal,
    )
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    tool: ToolInfo,
    #[serde(flatten)]
    result: &'a SweepResult,
}

pub fn sweep_json(result: &SweepResult) -> Result<String> {
    let doc = SweepDocument {
        tool: ToolInfo::default(),
        result,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn sweep_from_json(text: &str) -> Result<SweepResult> {
    Ok(serde_json::from_str(text)?)
}

/// One row per trial. Failed trials leave `error` empty; `wallclock_ms` is
/// empty unless timings were recorded.
pub fn trials_csv(result: &SweepResult) -> String {
    let mut out = String::from("axis_value,trial,error,seed,wallclock_ms\n");
    for pt in &result.points {
        for t in &pt.trials {
            out.push_str(&format!(
                "{},{},{},{}:{},{}\n",
                pt.axis_value,
                t.trial,
                t.error.map(|e| e.to_string()).unwrap_or_default(),
                t.seed.master,
                t.seed.stream,
                t.wallclock_ms
                    .map(|w| format!("{w:.3}"))
                    .unwrap_or_default(),
            ));
        }
    }
    out
}

/// One row per grid point.
pub fn summary_csv(result: &SweepResult) -> String {
    let mut out = format!(
        "{},mean_error,successes,failures,invalid\n",
        result.spec.axis
    );
    for pt in &result.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            pt.axis_value,
            pt.mean_error.map(|e| e.to_string()).unwrap_or_default(),
            pt.trials.len() - pt.failures,
            pt.failures,
            pt.invalid
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_sweep, Axis, SweepOptions, SweepSpec, TrialParams};
    use crate::model::{generate_instance_with_seed, generate_signal};

    #[test]
    fn instance_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = SeedRecord::new(3, 4);
        let mut rng = rec.rng();
        let x = generate_signal(12, 3, &mut rng).unwrap();
        let inst = generate_instance_with_seed(
            &x,
            20,
            NoiseSpec::gaussian(0.5).unwrap(),
            &mut rng,
            Some(rec),
        )
        .unwrap();
        let path = dir.path().join("inst.json");
        save_instance(&inst, &path).unwrap();
        assert_eq!(
            fs::metadata(dir.path().join("inst.bin")).unwrap().len(),
            20 * 12 * 8
        );
        let back = load_instance(&path).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn blob_is_little_endian_row_major() {
        let dir = tempfile::tempdir().unwrap();
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -0.5]]).unwrap();
        let inst = ProblemInstance::from_measurements(a, vec![1.0, 2.0]).unwrap();
        let path = dir.path().join("obs.json");
        save_instance(&inst, &path).unwrap();
        let bytes = fs::read(dir.path().join("obs.bin")).unwrap();
        assert_eq!(&bytes[8..16], &2.0f64.to_le_bytes());
        assert_eq!(&bytes[24..32], &(-0.5f64).to_le_bytes());
        assert_eq!(load_instance(&path).unwrap(), inst);
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let inst = ProblemInstance::from_measurements(a, vec![1.0]).unwrap();
        let path = dir.path().join("t.json");
        save_instance(&inst, &path).unwrap();
        fs::write(dir.path().join("t.bin"), [0u8; 9]).unwrap();
        assert!(load_instance(&path).is_err());
    }

    #[test]
    fn tampered_measurements_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = SeedRecord::new(1, 1).rng();
        let x = generate_signal(5, 2, &mut rng).unwrap();
        let inst = generate_instance_with_seed(&x, 6, NoiseSpec::none(), &mut rng, None).unwrap();
        let path = dir.path().join("i.json");
        save_instance(&inst, &path).unwrap();
        let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
        v["measurements"][0] = serde_json::json!(123.0);
        fs::write(&path, serde_json::to_vec(&v).unwrap()).unwrap();
        assert!(load_instance(&path).is_err());
    }

    #[test]
    fn sweep_files() {
        let spec = SweepSpec {
            fixed: TrialParams {
                p: 30,
                m: 200,
                k: 2,
                iterations: 20,
                ..TrialParams::paper()
            },
            axis: Axis::Beta,
            grid: vec![0.0, 1.0],
            trials: 2,
            master_seed: 4,
        };
        let r = run_sweep(&spec, SweepOptions::default()).unwrap();
        let json = sweep_json(&r).unwrap();
        assert!(json.contains("\"version\""));
        assert_eq!(sweep_from_json(&json).unwrap(), r);
        let csv = trials_csv(&r);
        assert!(csv.starts_with("axis_value,trial,error,seed,wallclock_ms\n"));
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(summary_csv(&r).lines().count(), 3);
        assert!(summary_csv(&r).starts_with("beta,mean_error"));
    }
}
