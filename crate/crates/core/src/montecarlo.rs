//! Seeded Monte Carlo drivers for the direction-finding SNR sweep and the
//! tracking comparison.
//!
//! Every trial draws its noise from a seed derived statelessly from the
//! configuration seed and the trial's indices, and results are reduced in
//! trial order, so the output does not depend on how rayon schedules work.

use rayon::prelude::*;

use crate::crb::crb_closed;
use crate::dephase::DephaseConfig;
use crate::esprit::estimate_doa_pipeline;
use crate::sigmodel::{
    derive_seed, synth_moving, synth_static, Doa, NoiseSpec, PpsCoeffs, Trajectory,
};
use crate::tracking::{
    angular_error, track_run, ForgettingSpec, ManifoldEstimator, TrackOptions, TrackStep,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub doa: Doa,
    pub coeffs: PpsCoeffs,
    pub n_snapshots: usize,
    /// SNR points in dB, `SNR = 1 / sigma^2`. `+inf` means noiseless.
    pub snr_db_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub dephase: DephaseConfig,
    pub pencil_delay: usize,
    pub ts: f64,
}

impl SweepConfig {
    /// Defaults: 1000 trials, unit-lag pressure-row dephasing, unit pencil
    /// delay, `ts = 1`.
    pub fn new(doa: Doa, coeffs: PpsCoeffs, n_snapshots: usize, snr_db_grid: Vec<f64>) -> Self {
        Self {
            doa,
            coeffs,
            n_snapshots,
            snr_db_grid,
            trials: 1000,
            seed: 1,
            dephase: DephaseConfig::default(),
            pencil_delay: 1,
            ts: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if self.snr_db_grid.is_empty() {
            return Err(Error::invalid("snr_db", "grid is empty"));
        }
        if let Some(bad) = self
            .snr_db_grid
            .iter()
            .find(|s| s.is_nan() || **s == f64::NEG_INFINITY)
        {
            return Err(Error::invalid(
                "snr_db",
                format!("{bad} is not a usable SNR"),
            ));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::invalid("ts", "must be > 0"));
        }
        if self.pencil_delay == 0 {
            return Err(Error::invalid("pencil_delay", "must be >= 1"));
        }
        self.dephase.validate()?;
        let consumed = (self.coeffs.degree() - 1) * self.dephase.delay_samples + self.pencil_delay;
        if self.n_snapshots <= consumed {
            return Err(Error::InsufficientSamples {
                needed: consumed,
                available: self.n_snapshots,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub alpha_bias_deg: f64,
    pub alpha_std_deg: f64,
    pub beta_bias_deg: f64,
    pub beta_std_deg: f64,
    pub crb_alpha_deg: f64,
    pub crb_beta_deg: f64,
    pub failed_trials: usize,
}

/// Mean and sample standard deviation (`n - 1` denominator; zero for a
/// single value). NaN for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Estimation bias and spread of the full pipeline against SNR.
///
/// Trial `t` at grid point `i` uses noise seed `derive_seed(seed, [i, t])`.
/// Trials where the pipeline fails (degenerate spectrum, vanished pressure
/// channel) are counted in `failed_trials` and left out of the moments.
pub fn run_doa_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let q = cfg.coeffs.degree();
    cfg.snr_db_grid
        .iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let sigma2 = NoiseSpec::sigma2_from_snr_db(snr_db);
            let outcomes: Vec<Option<(f64, f64)>> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let noise = NoiseSpec {
                        sigma2,
                        seed: derive_seed(cfg.seed, &[i as u64, t as u64]),
                    };
                    let z =
                        synth_static(cfg.doa, &cfg.coeffs, cfg.n_snapshots, cfg.ts, noise).ok()?;
                    let est = estimate_doa_pipeline(&z, q, &cfg.dephase, cfg.pencil_delay).ok()?;
                    Some(angular_error(est.doa, cfg.doa))
                })
                .collect();

            let (alpha_errs, beta_errs): (Vec<f64>, Vec<f64>) =
                outcomes.iter().flatten().copied().unzip();
            let failed_trials = outcomes.len() - alpha_errs.len();
            let (alpha_bias_deg, alpha_std_deg) = mean_std(&alpha_errs);
            let (beta_bias_deg, beta_std_deg) = mean_std(&beta_errs);

            let (crb_alpha_deg, crb_beta_deg) =
                match crb_closed(cfg.doa.alpha(), cfg.n_snapshots, sigma2) {
                    Ok(c) => (c.alpha_std_deg(), c.beta_std_deg()),
                    Err(Error::PoleSingularity) => (
                        (sigma2 / (2.0 * cfg.n_snapshots as f64))
                            .sqrt()
                            .to_degrees(),
                        f64::INFINITY,
                    ),
                    Err(e) => return Err(e),
                };
            Ok(SweepRow {
                snr_db,
                alpha_bias_deg,
                alpha_std_deg,
                beta_bias_deg,
                beta_std_deg,
                crb_alpha_deg,
                crb_beta_deg,
                failed_trials,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackStatsRow {
    pub method: &'static str,
    pub lambdas: Vec<f64>,
    pub preprocess: bool,
    pub mean_alpha_err_deg: f64,
    pub std_alpha_err_deg: f64,
    pub mean_beta_err_deg: f64,
    pub std_beta_err_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingExperiment {
    pub trajectory: Trajectory,
    pub coeffs: PpsCoeffs,
    /// Number of snapshots `M`.
    pub samples: usize,
    pub ts: f64,
    pub sigma2: f64,
    pub seed: u64,
    /// Steps with index below this are excluded from the statistics.
    pub burn_in: usize,
    pub runs: Vec<TrackOptions>,
}

impl TrackingExperiment {
    /// Defaults: `ts = 1`, `sigma2 = 0.01`, 50-sample burn-in, the
    /// eight-row comparison set of [`comparison_runs`].
    pub fn new(trajectory: Trajectory, coeffs: PpsCoeffs, samples: usize) -> Self {
        Self {
            trajectory,
            coeffs,
            samples,
            ts: 1.0,
            sigma2: 0.01,
            seed: 1,
            burn_in: 50,
            runs: comparison_runs(ManifoldEstimator::Literal),
        }
    }
}

/// MFF(0.9, 0.8, 0.7) then SFF at 0.9, 0.8 and 0.7, each without and then
/// with pre-processing.
pub fn comparison_runs(estimator: ManifoldEstimator) -> Vec<TrackOptions> {
    let mut specs = vec![ForgettingSpec::Mff([0.9, 0.8, 0.7])];
    specs.extend([0.9, 0.8, 0.7].map(ForgettingSpec::Sff));
    specs
        .into_iter()
        .flat_map(|spec| {
            [false, true].map(|pre| TrackOptions::new(spec, pre).with_estimator(estimator))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingOutput {
    pub stats: Vec<TrackStatsRow>,
    /// Post-burn-in steps for each run, in run order.
    pub traces: Vec<Vec<TrackStep>>,
}

/// Runs every tracker configuration on one shared noisy realization of the
/// moving source (a paired comparison).
pub fn run_tracking_experiment(exp: &TrackingExperiment) -> Result<TrackingOutput> {
    let q = exp.coeffs.degree();
    if exp.samples <= q {
        return Err(Error::InsufficientSamples {
            needed: q,
            available: exp.samples,
        });
    }
    let noise = NoiseSpec::new(exp.sigma2, exp.seed)?;
    let z = synth_moving(exp.trajectory, &exp.coeffs, exp.samples, exp.ts, noise)?;

    let results: Vec<Result<(TrackStatsRow, Vec<TrackStep>)>> = exp
        .runs
        .par_iter()
        .map(|opts| {
            let steps: Vec<TrackStep> = track_run(&z, q, opts, &exp.trajectory)?
                .into_iter()
                .filter(|s| s.n >= exp.burn_in)
                .collect();
            let alpha: Vec<f64> = steps.iter().map(|s| s.alpha_err_deg).collect();
            let beta: Vec<f64> = steps.iter().map(|s| s.beta_err_deg).collect();
            let (mean_alpha_err_deg, std_alpha_err_deg) = mean_std(&alpha);
            let (mean_beta_err_deg, std_beta_err_deg) = mean_std(&beta);
            Ok((
                TrackStatsRow {
                    method: opts.spec.method(),
                    lambdas: opts.spec.lambdas(),
                    preprocess: opts.preprocess,
                    mean_alpha_err_deg,
                    std_alpha_err_deg,
                    mean_beta_err_deg,
                    std_beta_err_deg,
                },
                steps,
            ))
        })
        .collect();

    let mut out = TrackingOutput {
        stats: Vec::with_capacity(results.len()),
        traces: Vec::with_capacity(results.len()),
    };
    for r in results {
        let (row, steps) = r?;
        out.stats.push(row);
        out.traces.push(steps);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn chirp() -> PpsCoeffs {
        PpsCoeffs::new(vec![0.05, 0.1, 0.13]).unwrap()
    }

    #[test]
    fn mean_std_basics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn noiseless_grid_point_is_exact() {
        let mut cfg = SweepConfig::new(
            Doa::from_degrees(45.0, 60.0).unwrap(),
            chirp(),
            100,
            vec![f64::INFINITY],
        );
        cfg.trials = 5;
        let rows = run_doa_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let r = rows[0];
        assert_eq!(r.failed_trials, 0);
        for v in [
            r.alpha_bias_deg,
            r.alpha_std_deg,
            r.beta_bias_deg,
            r.beta_std_deg,
        ] {
            assert!(v.abs() < 1e-7, "{r:?}");
        }
        assert_eq!(r.crb_alpha_deg, 0.0);
    }

    #[test]
    fn crb_columns_copy_closed_form() {
        let mut cfg = SweepConfig::new(
            Doa::from_degrees(45.0, 60.0).unwrap(),
            chirp(),
            100,
            vec![10.0, 20.0],
        );
        cfg.trials = 3;
        for (row, snr) in run_doa_sweep(&cfg).unwrap().iter().zip([10.0, 20.0]) {
            let c =
                crb_closed(45f64.to_radians(), 100, NoiseSpec::sigma2_from_snr_db(snr)).unwrap();
            assert_eq!(row.crb_alpha_deg, c.alpha_std_deg());
            assert_eq!(row.crb_beta_deg, c.beta_std_deg());
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let mut cfg = SweepConfig::new(
            Doa::from_degrees(45.0, 60.0).unwrap(),
            chirp(),
            80,
            vec![5.0, 15.0],
        );
        cfg.trials = 40;
        cfg.seed = 1234;
        assert_eq!(run_doa_sweep(&cfg).unwrap(), run_doa_sweep(&cfg).unwrap());
    }

    #[test]
    fn invalid_sweeps_are_rejected() {
        let mut cfg = SweepConfig::new(Doa::from_degrees(45.0, 60.0).unwrap(), chirp(), 80, vec![]);
        assert!(run_doa_sweep(&cfg).is_err());
        cfg.snr_db_grid = vec![10.0];
        cfg.trials = 0;
        assert!(run_doa_sweep(&cfg).is_err());
        cfg.trials = 1;
        cfg.n_snapshots = 2;
        assert!(matches!(
            run_doa_sweep(&cfg),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn comparison_order() {
        let runs = comparison_runs(ManifoldEstimator::Literal);
        let labels: Vec<(String, bool)> = runs
            .iter()
            .map(|r| {
                (
                    format!("{}{:?}", r.spec.method(), r.spec.lambdas()),
                    r.preprocess,
                )
            })
            .collect();
        assert_eq!(
            labels,
            [
                ("MFF[0.9, 0.8, 0.7]".to_string(), false),
                ("MFF[0.9, 0.8, 0.7]".to_string(), true),
                ("SFF[0.9]".to_string(), false),
                ("SFF[0.9]".to_string(), true),
                ("SFF[0.8]".to_string(), false),
                ("SFF[0.8]".to_string(), true),
                ("SFF[0.7]".to_string(), false),
                ("SFF[0.7]".to_string(), true),
            ]
        );
    }

    #[test]
    fn static_noiseless_tracking_has_no_error() {
        let traj = Trajectory::new(1.0, 2.0, 0.01, 0.02).with_amplitude(0.0);
        let mut exp = TrackingExperiment::new(traj, chirp(), 200);
        exp.sigma2 = 0.0;
        let out = run_tracking_experiment(&exp).unwrap();
        assert_eq!(out.stats.len(), 8);
        for row in &out.stats {
            assert!(
                row.std_alpha_err_deg < 1e-6 && row.std_beta_err_deg < 1e-6,
                "{row:?}"
            );
        }
        assert_eq!(out.traces[1].len(), 200 - 2 - 50);
        assert_eq!(out.traces[0].len(), 200 - 50);
    }

    #[test]
    fn out_of_range_trajectory_propagates() {
        let traj = Trajectory::new(0.3, PI, 0.01, -0.012);
        let exp = TrackingExperiment::new(traj, chirp(), 500);
        assert!(matches!(
            run_tracking_experiment(&exp),
            Err(Error::TrajectoryOutOfRange { .. })
        ));
        let ok = TrackingExperiment::new(Trajectory::new(FRAC_PI_2, PI, 0.01, -0.012), chirp(), 2);
        assert!(run_tracking_experiment(&ok).is_err());
    }
}
