//! JSON file formats for channels, datasets, and fit reports, plus a small
//! CSV writer for study tables. Doubles round-trip bit-exactly through
//! serde_json's shortest-representation encoding.

use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::error::{QptError, Result};
use crate::linalg::CMat;
use crate::optimizer::{FitConfig, FitReport, LossSample, StopReason};
use crate::tomography::{MeasurementSet, ProbeSet, Record, TomographyDataset};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    /// Row-major (re, im) entries.
    entries: Vec<(f64, f64)>,
}

impl MatrixRepr {
    fn from_mat(m: &CMat) -> Self {
        let (rows, cols) = m.shape();
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push((m[(r, c)].re, m[(r, c)].im));
            }
        }
        Self { rows, cols, entries }
    }

    fn to_mat(&self) -> Result<CMat> {
        if self.entries.len() != self.rows * self.cols {
            return Err(QptError::Format(format!(
                "matrix claims {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.entries.len()
            )));
        }
        let mut m = CMat::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let (re, im) = self.entries[r * self.cols + c];
                m[(r, c)] = Complex64::new(re, im);
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChannelFile {
    dim: usize,
    rank: usize,
    ops: Vec<MatrixRepr>,
}

pub fn write_channel(path: &Path, channel: &KrausChannel) -> Result<()> {
    let file = ChannelFile {
        dim: channel.dim(),
        rank: channel.rank(),
        ops: channel.ops().iter().map(MatrixRepr::from_mat).collect(),
    };
    write_json(path, &file)
}

pub fn read_channel(path: &Path) -> Result<KrausChannel> {
    let file: ChannelFile = read_json(path)?;
    if file.ops.len() != file.rank {
        return Err(QptError::Format(format!(
            "channel claims rank {} but has {} operators",
            file.rank,
            file.ops.len()
        )));
    }
    let ops = file.ops.iter().map(MatrixRepr::to_mat).collect::<Result<Vec<_>>>()?;
    for op in &ops {
        if op.nrows() != file.dim || op.ncols() != file.dim {
            return Err(QptError::Format(format!(
                "operator is {}x{}, dim field says {}",
                op.nrows(),
                op.ncols(),
                file.dim
            )));
        }
    }
    KrausChannel::new(ops)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetFile {
    dim: usize,
    probes: Vec<MatrixRepr>,
    measurements: Vec<MatrixRepr>,
    projective: bool,
    records: Vec<Record>,
}

pub fn write_dataset(path: &Path, data: &TomographyDataset) -> Result<()> {
    let file = DatasetFile {
        dim: data.dim(),
        probes: data.probes().states().iter().map(MatrixRepr::from_mat).collect(),
        measurements: data.measurements().operators().iter().map(MatrixRepr::from_mat).collect(),
        projective: data.measurements().projective(),
        records: data.records().to_vec(),
    };
    write_json(path, &file)
}

pub fn read_dataset(path: &Path) -> Result<TomographyDataset> {
    let file: DatasetFile = read_json(path)?;
    let probes = ProbeSet::new(
        file.dim,
        file.probes.iter().map(MatrixRepr::to_mat).collect::<Result<Vec<_>>>()?,
    )?;
    let measurements = MeasurementSet::new(
        file.dim,
        file.measurements.iter().map(MatrixRepr::to_mat).collect::<Result<Vec<_>>>()?,
        file.projective,
    )?;
    TomographyDataset::new(probes, measurements, file.records)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReportFile {
    config: FitConfig,
    loss_history: Vec<LossSample>,
    final_channel: ChannelFile,
    iterations_run: usize,
    wall_time_seconds: f64,
    stop_reason: StopReason,
    max_stiefel_defect: f64,
}

pub fn write_report(path: &Path, report: &FitReport) -> Result<()> {
    let file = ReportFile {
        config: report.config.clone(),
        loss_history: report.loss_history.clone(),
        final_channel: ChannelFile {
            dim: report.final_channel.dim(),
            rank: report.final_channel.rank(),
            ops: report.final_channel.ops().iter().map(MatrixRepr::from_mat).collect(),
        },
        iterations_run: report.iterations_run,
        wall_time_seconds: report.wall_time_seconds,
        stop_reason: report.stop_reason,
        max_stiefel_defect: report.max_stiefel_defect,
    };
    write_json(path, &file)
}

pub fn read_report(path: &Path) -> Result<FitReport> {
    let file: ReportFile = read_json(path)?;
    let ops =
        file.final_channel.ops.iter().map(MatrixRepr::to_mat).collect::<Result<Vec<_>>>()?;
    Ok(FitReport {
        config: file.config,
        loss_history: file.loss_history,
        final_channel: KrausChannel::new(ops)?,
        iterations_run: file.iterations_run,
        wall_time_seconds: file.wall_time_seconds,
        stop_reason: file.stop_reason,
        max_stiefel_defect: file.max_stiefel_defect,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes a CSV table with a fixed header. Fields are emitted verbatim;
/// callers must not include commas or newlines.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(QptError::Format(format!(
                "row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Dataset records as CSV (probe, measurement, value) for external analysis.
pub fn write_records_csv(path: &Path, data: &TomographyDataset) -> Result<()> {
    let rows: Vec<Vec<String>> = data
        .records()
        .iter()
        .map(|r| vec![r.probe.to_string(), r.measurement.to_string(), format!("{:e}", r.value)])
        .collect();
    write_csv(path, &["probe", "measurement", "value"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomography::{pauli_eigenstate_set, simulate_dataset};
    use tempfile::tempdir;

    #[test]
    fn channel_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("channel.json");
        let channel = KrausChannel::random(3, 4, 7).unwrap();
        write_channel(&path, &channel).unwrap();
        let back = read_channel(&path).unwrap();
        assert_eq!(channel, back);
        assert!(back.tp_defect() <= 1e-10);
    }

    #[test]
    fn channel_file_is_byte_deterministic() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let channel = KrausChannel::random(2, 4, 9).unwrap();
        write_channel(&a, &channel).unwrap();
        write_channel(&b, &channel).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn corrupt_channel_files_are_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"dim\": 2}").unwrap();
        assert!(read_channel(&path).is_err());
        std::fs::write(&path, "not json").unwrap();
        assert!(read_channel(&path).is_err());
        assert!(read_channel(&dir.path().join("missing.json")).is_err());
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("data.json");
        let (probes, meas) = pauli_eigenstate_set(1).unwrap();
        let channel = KrausChannel::random(2, 2, 11).unwrap();
        let data = simulate_dataset(&channel, &probes, &meas, 0.01, 12).unwrap();
        write_dataset(&path, &data).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn report_round_trip_preserves_history_and_channel() {
        use crate::optimizer::{fit, FitConfig};
        let dir = tempdir().unwrap();
        let path = dir.path().join("report.json");
        let (probes, meas) = pauli_eigenstate_set(1).unwrap();
        let channel = KrausChannel::random(2, 2, 13).unwrap();
        let data = simulate_dataset(&channel, &probes, &meas, 0.0, 14).unwrap();
        let mut config = FitConfig::new(2, 15);
        config.max_iters = 50;
        let report = fit(&data, &config).unwrap();
        write_report(&path, &report).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(report.loss_history, back.loss_history);
        assert_eq!(report.final_channel, back.final_channel);
        assert_eq!(report.config, back.config);
        assert_eq!(report.stop_reason, back.stop_reason);
    }

    #[test]
    fn csv_writer_checks_schema() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\n1,2\n");
        assert!(write_csv(&path, &["a", "b"], &[vec!["1".into()]]).is_err());
    }
}
