use std::fs;
use std::path::{Path, PathBuf};

use super::{sha256_hex, Normalization, ResultRecord, SAMPLES_HEADER};
use crate::error::{parse_err, Error, Result};
use crate::qubo::{fmt_f64, Sense};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub instance: String,
    pub solver: String,
    pub sense: Sense,
    pub count: usize,
    pub normalization: Normalization,
    pub reference: Option<f64>,
    pub mean_energy: f64,
    pub best_energy: f64,
    pub normalized_mean: Option<f64>,
    pub normalized_best: Option<f64>,
    pub p_f: f64,
    pub seconds: f64,
}

impl ReportRow {
    /// `best/seconds/feasible-fraction`, e.g. `240/27.113/1`.
    pub fn triple(&self) -> String {
        format!("{}/{:.3}/{}", fmt_f64(self.best_energy), self.seconds, fmt_f64(self.p_f / 100.0))
    }
}

pub fn load_record(path: &Path) -> Result<ResultRecord> {
    let r: ResultRecord = serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    Ok(r)
}

/// Checks the record's summary and its samples file against each other.
fn verify(path: &Path, r: &ResultRecord) -> Result<()> {
    if r.recompute_summary()? != r.summary {
        return Err(Error::Schema(format!("{}: stored summary does not match stored energies", path.display())));
    }
    let samples = path.parent().unwrap_or(Path::new(".")).join(&r.samples_file);
    let text = fs::read_to_string(&samples)?;
    if sha256_hex(text.as_bytes()) != r.samples_sha256 {
        return Err(Error::Schema(format!("{}: samples file hash mismatch", samples.display())));
    }
    let mut lines = text.lines();
    if lines.next() != Some(SAMPLES_HEADER) {
        return Err(Error::Schema(format!("{}: unexpected samples header", samples.display())));
    }
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(parse_err(i + 2, "expected 6 columns"));
        }
        let e: f64 = cols[2].parse().map_err(|_| parse_err(i + 2, "bad energy"))?;
        if r.energies.get(i) != Some(&e) || r.feasible.get(i) != Some(&(cols[3] == "1")) {
            return Err(Error::Schema(format!("{}: sample {i} disagrees with the record", samples.display())));
        }
        count += 1;
    }
    if count != r.energies.len() {
        return Err(Error::Schema(format!("{}: {count} samples, record has {}", samples.display(), r.energies.len())));
    }
    Ok(())
}

/// Verified rows keyed and sorted by (instance, solver); all records must share one sense.
pub fn report_rows(paths: &[PathBuf]) -> Result<Vec<ReportRow>> {
    if paths.is_empty() {
        return Err(Error::EmptyInput("result files"));
    }
    let mut rows = Vec::with_capacity(paths.len());
    for p in paths {
        let r = load_record(p)?;
        verify(p, &r)?;
        rows.push(ReportRow {
            instance: r.instance.clone(),
            solver: r.solver.clone(),
            sense: r.sense,
            count: r.summary.count,
            normalization: r.normalization,
            reference: r.reference,
            mean_energy: r.summary.mean_energy,
            best_energy: r.summary.best_energy,
            normalized_mean: r.summary.normalized_mean,
            normalized_best: r.summary.normalized_best,
            p_f: r.summary.p_f,
            seconds: r.seconds,
        });
    }
    if rows.iter().any(|r| r.sense != rows[0].sense) {
        return Err(Error::Schema("results mix minimization and maximization".into()));
    }
    rows.sort_by(|a, b| (&a.instance, &a.solver).cmp(&(&b.instance, &b.solver)));
    Ok(rows)
}

/// CSV table over result records.
pub fn cmd_report(paths: &[PathBuf]) -> Result<String> {
    let rows = report_rows(paths)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut s = String::from(
        "instance,solver,sense,count,normalization,reference,mean_energy,best_energy,normalized_mean,normalized_best,p_f,seconds,triple\n",
    );
    for r in &rows {
        let norm = serde_json::to_value(r.normalization).expect("enum serializes");
        s.push_str(&format!(
            "{},\"{}\",{},{},{},{},{},{},{},{},{},{:.3},{}\n",
            r.instance,
            r.solver,
            if r.sense == Sense::Min { "min" } else { "max" },
            r.count,
            norm.as_str().unwrap_or_default(),
            opt(r.reference),
            fmt_f64(r.mean_energy),
            fmt_f64(r.best_energy),
            opt(r.normalized_mean),
            opt(r.normalized_best),
            fmt_f64(r.p_f),
            r.seconds,
            r.triple()
        ));
    }
    Ok(s)
}
