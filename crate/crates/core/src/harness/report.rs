use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentKind;
use super::stats::{QqRow, TransformPoint};
use crate::analytics::{SpeedReport, TailConstant, TailEstimate};
use crate::env::{EnvSpec, RegimeReport};
use crate::error::Result;
use crate::stablelaws::NormingPlan;

/// One declared comparison against a tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    /// Reported only; does not enter the overall verdict.
    pub informational: bool,
}

impl Check {
    /// `|value - target| <= tolerance`.
    pub fn near(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: Some(target),
            tolerance,
            pass: (value - target).abs() <= tolerance,
            informational: false,
        }
    }

    /// `value <= bound`.
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, target: None, tolerance: bound, pass: value <= bound, informational: false }
    }

    /// `value >= bound`.
    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, target: None, tolerance: bound, pass: value >= bound, informational: false }
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderRung {
    pub n: u64,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
    pub truncated: u64,
    pub qq: Vec<QqRow>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub runtime_secs: f64,
    /// Replicas (or regeneration cycles) per second.
    pub throughput: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StatReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub replicas: usize,
    pub spec: Option<EnvSpec>,
    pub regime: Option<RegimeReport>,
    pub ks_stat: Option<f64>,
    pub ks_pvalue: Option<f64>,
    pub hill: Option<TailEstimate>,
    pub tail_constant: Option<TailConstant>,
    pub speed: Option<SpeedReport>,
    pub norming: Option<NormingPlan>,
    pub transform: Vec<TransformPoint>,
    pub qq: Vec<QqRow>,
    pub ladder: Vec<LadderRung>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub truncated: u64,
    pub pass: bool,
    pub timing: Timing,
}

impl StatReport {
    pub fn new(kind: ExperimentKind, seed: u64, replicas: usize, spec: Option<EnvSpec>) -> Self {
        StatReport {
            kind,
            seed,
            replicas,
            spec,
            regime: None,
            ks_stat: None,
            ks_pvalue: None,
            hill: None,
            tail_constant: None,
            speed: None,
            norming: None,
            transform: Vec::new(),
            qq: Vec::new(),
            ladder: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            truncated: 0,
            pass: false,
            timing: Timing::default(),
        }
    }

    /// Overall verdict from the gating checks.
    pub fn settle(&mut self) {
        self.pass = self.checks.iter().filter(|c| !c.informational).all(|c| c.pass);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report without its timing block, for reproducibility comparisons.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        v.to_string()
    }
}

/// Floats in CSV output: 17 significant digits, `.` decimal point.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn write_report(report: &StatReport, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(report.to_json().as_bytes())?;
    f.write_all(b"\n")?;
    Ok(f.flush()?)
}

pub fn write_jsonl<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    Ok(f.flush()?)
}

pub fn qq_csv(rows: &[QqRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["p", "sample", "reference"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([fmt17(r.p), fmt17(r.sample), fmt17(r.reference)]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}

/// The QQ table of the last ladder rung (or the report's own table).
pub fn write_qq_csv(report: &StatReport, path: &Path) -> Result<()> {
    let rows = report.ladder.last().map(|r| r.qq.as_slice()).unwrap_or(&report.qq);
    std::fs::write(path, qq_csv(rows)?)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
        let csv = qq_csv(&[QqRow { p: 0.5, sample: 2.0, reference: -1.25 }]).unwrap();
        assert_eq!(csv, "p,sample,reference\n5.0000000000000000e-1,2.0000000000000000e0,-1.2500000000000000e0\n");
    }

    #[test]
    fn canonical_form_drops_timing() {
        let mut r = StatReport::new(ExperimentKind::Speed, 1, 2, None);
        let a = r.canonical_json();
        r.timing.runtime_secs = 12.5;
        assert_eq!(a, r.canonical_json());
        assert!(!a.contains("runtime"));
        r.checks.push(Check::near("x", 1.0, 1.1, 0.2));
        r.checks.push(Check::at_most("y", 2.0, 1.0).informational());
        r.settle();
        assert!(r.pass);
    }
}
