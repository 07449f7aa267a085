//! CSV rendering and all-or-nothing file writing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use avsdf_core::montecarlo::TrackingOutput;
use avsdf_core::{SweepRow, TrackStatsRow};

use crate::CliError;

pub const SWEEP_HEADER: &str =
    "snr_db,alpha_bias_deg,alpha_std_deg,beta_bias_deg,beta_std_deg,crb_alpha_deg,crb_beta_deg,failed_trials";
pub const TRACE_HEADER: &str =
    "n,method,preprocess,alpha_true_deg,alpha_est_deg,alpha_err_deg,beta_true_deg,beta_est_deg,beta_err_deg";
pub const STATS_HEADER: &str =
    "method,lambdas,preprocess,mean_alpha_err_deg,std_alpha_err_deg,mean_beta_err_deg,std_beta_err_deg";

/// Scientific notation with 9 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn lambdas_label(lambdas: &[f64]) -> String {
    lambdas
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn method_label(row: &TrackStatsRow) -> String {
    format!("{}({})", row.method, lambdas_label(&row.lambdas))
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            num(r.snr_db),
            num(r.alpha_bias_deg),
            num(r.alpha_std_deg),
            num(r.beta_bias_deg),
            num(r.beta_std_deg),
            num(r.crb_alpha_deg),
            num(r.crb_beta_deg),
            r.failed_trials
        );
    }
    out
}

pub fn stats_csv(rows: &[TrackStatsRow]) -> String {
    let mut out = String::new();
    out.push_str(STATS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.method,
            lambdas_label(&r.lambdas),
            r.preprocess,
            num(r.mean_alpha_err_deg),
            num(r.std_alpha_err_deg),
            num(r.mean_beta_err_deg),
            num(r.std_beta_err_deg)
        );
    }
    out
}

pub fn trace_csv(output: &TrackingOutput) -> String {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (row, steps) in output.stats.iter().zip(&output.traces) {
        let label = method_label(row);
        for s in steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.n,
                label,
                row.preprocess,
                num(s.truth.alpha_deg()),
                num(s.estimate.alpha_deg()),
                num(s.alpha_err_deg),
                num(s.truth.beta_deg()),
                num(s.estimate.beta_deg()),
                num(s.beta_err_deg)
            );
        }
    }
    out
}

/// Writes every file or none: all targets are checked for existence first.
pub fn write_all(
    dir: &Path,
    files: &[(&str, String)],
    force: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let targets: Vec<PathBuf> = files.iter().map(|(name, _)| dir.join(name)).collect();
    if !force {
        if let Some(existing) = targets.iter().find(|p| p.exists()) {
            return Err(CliError::Overwrite(existing.clone()));
        }
    }
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (path, (_, body)) in targets.iter().zip(files) {
        fs::write(path, body).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.0), "0.00000000e0");
        assert_eq!(num(-1.5e-4), "-1.50000000e-4");
        assert_eq!(num(123456789.123), "1.23456789e8");
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn sweep_rows() {
        let row = SweepRow {
            snr_db: 20.0,
            alpha_bias_deg: 0.01,
            alpha_std_deg: 0.2,
            beta_bias_deg: -0.01,
            beta_std_deg: 0.3,
            crb_alpha_deg: 0.1,
            crb_beta_deg: 0.15,
            failed_trials: 2,
        };
        let csv = sweep_csv(&[row]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(
            lines[1],
            "2.00000000e1,1.00000000e-2,2.00000000e-1,-1.00000000e-2,3.00000000e-1,1.00000000e-1,1.50000000e-1,2"
        );
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn refuses_before_writing_anything() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.csv"), "old").unwrap();
        let files = [("a.csv", "new".to_string()), ("b.csv", "new".to_string())];
        let err = write_all(dir.path(), &files, false).unwrap_err();
        assert!(matches!(err, CliError::Overwrite(_)));
        assert!(!dir.path().join("a.csv").exists());
        assert_eq!(fs::read_to_string(dir.path().join("b.csv")).unwrap(), "old");

        write_all(dir.path(), &files, true).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("b.csv")).unwrap(), "new");
    }
}
