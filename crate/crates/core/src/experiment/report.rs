//! Report assembly and persistence: one JSON document per run plus flat
//! CSV mirrors of the bound/test-error and cross-validation comparison
//! tables, and the risk-profile CSV that lets optimizer runs skip
//! retraining.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::cv::{cross_validate, CvReport};
use crate::experiment::{run_comparison, Comparison, ComparisonOptions, MethodReport};
use crate::risk::{BoundConfig, Distance, Prior};
use crate::svm::{build_risk_profile, split_dataset, BaseClassifier, Dataset};

/// Everything a single end-to-end run produces.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub dataset: String,
    pub seed: u64,
    pub m: usize,
    pub v: usize,
    pub t: usize,
    #[serde(rename = "H")]
    pub h: usize,
    pub delta: f64,
    pub methods: Vec<MethodReport>,
    pub cv: Option<CvReport>,
    /// Full posterior weight vectors in sorted-risk order, keyed by method.
    pub posteriors: BTreeMap<String, Vec<f64>>,
    /// Method-level failures the run continued past.
    pub failures: Vec<(String, String)>,
}

/// Settings for [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub seed: u64,
    pub delta: f64,
    /// Number of grid values to keep; `None` takes the full grid.
    pub h: Option<usize>,
    pub distances: Vec<Distance>,
    pub enable_ccp: bool,
    pub ccp_starts: usize,
    pub run_cv: bool,
    pub cv_folds: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 7,
            delta: 0.05,
            h: None,
            distances: Distance::ALL.to_vec(),
            enable_ccp: false,
            ccp_starts: 1000,
            run_cv: true,
            cv_folds: 5,
        }
    }
}

/// The full pipeline: split, standardize, train the lambda ensemble,
/// optimize posteriors, run the CV baseline, and assemble the report.
/// Returns the trained ensemble too so callers can persist the profile.
pub fn run_pipeline(
    d: &Dataset,
    settings: &RunSettings,
) -> Result<(RunReport, Vec<BaseClassifier>)> {
    let plan = split_dataset(d, settings.seed)?;
    let z = d.standardized_on(&plan.composite());
    let lambdas = crate::svm::lambda_grid(settings.h)?;
    let (profile, ensemble) = build_risk_profile(&z, &plan, &lambdas, settings.seed)?;

    let test_risks_original: Vec<f64> = ensemble.iter().map(|c| c.test_risk).collect();
    let test_risks = profile.sort_aligned(&test_risks_original)?;

    let cfg = BoundConfig::new(
        Distance::Lin,
        profile.m(),
        settings.delta,
        Prior::uniform(profile.h()),
    )?;
    let options = ComparisonOptions {
        distances: settings.distances.clone(),
        enable_ccp: settings.enable_ccp,
        ccp_starts: settings.ccp_starts,
        seed: settings.seed,
    };
    let comparison = run_comparison(&profile, &test_risks, &cfg, &options)?;

    let cv = if settings.run_cv {
        let raw = cross_validate(&z, &plan, &lambdas, settings.cv_folds, settings.seed)?;
        // comparison columns reference the squared-distance test error
        let completed = match comparison.method("sq") {
            Some(sq) => raw.with_comparison(sq.gibbs_test_error),
            None => raw,
        };
        Some(completed)
    } else {
        None
    };

    let Comparison {
        methods,
        posteriors,
        failures,
    } = comparison;
    let report = RunReport {
        dataset: d.name.clone(),
        seed: settings.seed,
        m: plan.train_idx.len(),
        v: plan.valid_idx.len(),
        t: plan.test_idx.len(),
        h: profile.h(),
        delta: settings.delta,
        methods,
        cv,
        posteriors,
        failures,
    };
    Ok((report, ensemble))
}

pub fn write_report_json(path: &Path, report: &RunReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Bound / test-error table: one row per dataset.
pub fn write_table2_csv(path: &Path, report: &RunReport) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "dataset,B_lin,B_sq,B_kl,T_lin,T_sq,T_kl")?;
    let cell = |name: &str, bound: bool| -> String {
        report
            .methods
            .iter()
            .find(|m| m.method == name)
            .map(|m| {
                if bound {
                    m.bound.map(fmt17).unwrap_or_else(|| "NA".to_string())
                } else {
                    fmt17(m.gibbs_test_error)
                }
            })
            .unwrap_or_else(|| "NA".to_string())
    };
    writeln!(
        f,
        "{},{},{},{},{},{},{}",
        report.dataset,
        cell("lin", true),
        cell("sq", true),
        cell("kl", true),
        cell("lin", false),
        cell("sq", false),
        cell("kl", false),
    )?;
    Ok(())
}

/// Cross-validation comparison table.
pub fn write_table5_csv(path: &Path, report: &RunReport) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "dataset,lambda_star,cv_test_error,sq_chi2_test_error,delta,relative,sq_chi2_bound"
    )?;
    let sq = report.methods.iter().find(|m| m.method == "sq");
    let cv = report.cv.as_ref();
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_else(|| "NA".to_string());
    writeln!(
        f,
        "{},{},{},{},{},{},{}",
        report.dataset,
        opt(cv.map(|c| c.best_lambda)),
        opt(cv.map(|c| c.test_error)),
        opt(sq.map(|m| m.gibbs_test_error)),
        opt(cv.and_then(|c| c.delta_test_error)),
        opt(cv.and_then(|c| c.relative_test_error)),
        opt(sq.and_then(|m| m.bound)),
    )?;
    Ok(())
}

/// One row of the persisted risk profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub lambda: f64,
    pub train_risk: f64,
    pub valid_risk: f64,
    pub test_risk: f64,
}

/// Persists per-classifier risks (original lambda order) with full
/// float precision so optimizer-only runs can skip retraining.
pub fn write_profile_csv(path: &Path, ensemble: &[BaseClassifier]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "lambda,train_risk,valid_risk,test_risk")?;
    for c in ensemble {
        writeln!(
            f,
            "{},{},{},{}",
            fmt17(c.lambda),
            fmt17(c.train_risk),
            fmt17(c.valid_risk),
            fmt17(c.test_risk)
        )?;
    }
    Ok(())
}

pub fn read_profile_csv(path: &Path) -> Result<Vec<ProfileRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected = ["lambda", "train_risk", "valid_risk", "test_risk"];
    let header_fields: Vec<&str> = headers.iter().collect();
    if header_fields != expected {
        return Err(Error::MalformedProfile(format!(
            "header {:?}, expected {:?}",
            header_fields, expected
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::MalformedProfile(format!("bad field in row {:?}", record)))
        };
        rows.push(ProfileRow {
            lambda: parse(0)?,
            train_risk: parse(1)?,
            valid_risk: parse(2)?,
            test_risk: parse(3)?,
        });
    }
    if rows.is_empty() {
        return Err(Error::MalformedProfile("no data rows".to_string()));
    }
    Ok(rows)
}

/// 17 significant digits: enough to round-trip any f64 exactly.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::blobs;

    fn tmp(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("chi2pb-report-{}-{}", std::process::id(), name))
    }

    #[test]
    fn profile_csv_round_trips_exactly() {
        let ensemble = vec![
            BaseClassifier {
                lambda: 0.1,
                dual_coeffs: vec![],
                support_points: vec![],
                gamma: 0.5,
                train_risk: 1.0 / 3.0,
                valid_risk: 0.123_456_789_012_345_68,
                test_risk: 0.25,
            },
            BaseClassifier {
                lambda: 1e-10,
                dual_coeffs: vec![],
                support_points: vec![],
                gamma: 0.5,
                train_risk: 0.0,
                valid_risk: 0.9999999999999999,
                test_risk: 1.0,
            },
        ];
        let path = tmp("roundtrip.csv");
        write_profile_csv(&path, &ensemble).unwrap();
        let rows = read_profile_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].valid_risk, ensemble[0].valid_risk);
        assert_eq!(rows[1].lambda, 1e-10);
        assert_eq!(rows[1].valid_risk, ensemble[1].valid_risk);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn read_rejects_malformed_profiles() {
        let path = tmp("bad.csv");
        std::fs::write(&path, "lambda,oops\n0.1,0.2\n").unwrap();
        assert!(matches!(
            read_profile_csv(&path),
            Err(Error::MalformedProfile(_))
        ));
        std::fs::write(
            &path,
            "lambda,train_risk,valid_risk,test_risk\n0.1,x,0.2,0.3\n",
        )
        .unwrap();
        assert!(read_profile_csv(&path).is_err());
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn pipeline_produces_complete_report() {
        let d = blobs(40, 0.6, 1.2, 5, "ovl-tiny");
        let settings = RunSettings {
            h: Some(6),
            run_cv: true,
            cv_folds: 3,
            ..Default::default()
        };
        let (report, ensemble) = run_pipeline(&d, &settings).unwrap();
        assert_eq!(report.h, 6);
        assert_eq!(ensemble.len(), 6);
        assert_eq!(report.m + report.v + report.t, 80);
        assert!(report.methods.iter().any(|m| m.method == "lin"));
        assert!(report.methods.iter().any(|m| m.method == "gibbs"));
        assert!(report.cv.is_some());
        assert_eq!(report.posteriors["lin"].len(), 6);

        let json_path = tmp("report.json");
        let t2 = tmp("table2.csv");
        let t5 = tmp("table5.csv");
        write_report_json(&json_path, &report).unwrap();
        write_table2_csv(&t2, &report).unwrap();
        write_table5_csv(&t5, &report).unwrap();
        let t2_contents = std::fs::read_to_string(&t2).unwrap();
        assert!(t2_contents.starts_with("dataset,B_lin,B_sq,B_kl"));
        for p in [json_path, t2, t5] {
            std::fs::remove_file(p).ok();
        }
    }
}
