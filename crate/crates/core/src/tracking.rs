//! Forgetting-factor DOA trackers fed either with raw snapshots or with the
//! dephased stream from [`track_preprocess`](crate::dephase::track_preprocess).

use crate::dephase::{track_preprocess, DephaseConfig, DephaseMode};
use crate::sigmodel::{wrap_two_pi, Doa, SnapshotMatrix, Trajectory};
use crate::{Error, Result, Vec4};

/// How a single complex snapshot is turned into a real manifold estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ManifoldEstimator {
    /// `Re(z / z_4)`: the common phase cancels before the real part is taken.
    #[default]
    Ratio,
    /// `Re(z) / Re(z_4)`, elementwise. Exact without noise, but divides by
    /// the cosine of the signal phase.
    Literal,
}

const SKIP_RATIO: f64 = 1e-12;

/// Instantaneous real manifold estimate `[u_x, u_y, u_z, 1]` from one
/// (possibly pre-processed) snapshot.
pub fn instant_manifold(z: &Vec4, estimator: ManifoldEstimator) -> Result<[f64; 4]> {
    let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    match estimator {
        ManifoldEstimator::Ratio => {
            let p = z[3];
            if p.norm() == 0.0 || p.norm() < SKIP_RATIO * norm {
                return Err(Error::SkipSample);
            }
            Ok([(z[0] / p).re, (z[1] / p).re, (z[2] / p).re, 1.0])
        }
        ManifoldEstimator::Literal => {
            let p = z[3].re;
            if p == 0.0 || p.abs() < SKIP_RATIO * norm {
                return Err(Error::SkipSample);
            }
            Ok([z[0].re / p, z[1].re / p, z[2].re / p, 1.0])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    /// Current manifold estimate; element 4 is always exactly 1.
    pub a_hat: [f64; 4],
    /// Number of updates applied since initialization.
    pub n: usize,
}

impl TrackState {
    pub fn new(initial: [f64; 4]) -> Self {
        Self {
            a_hat: [initial[0], initial[1], initial[2], 1.0],
            n: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForgettingSpec {
    /// One forgetting factor shared by all direction cosines.
    Sff(f64),
    /// Separate factors for `u_x`, `u_y` and `u_z`.
    Mff([f64; 3]),
}

impl ForgettingSpec {
    pub fn sff(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self::Sff(lambda))
    }

    pub fn mff(lambdas: [f64; 3]) -> Result<Self> {
        lambdas.iter().try_for_each(|&l| check_lambda(l))?;
        Ok(Self::Mff(lambdas))
    }

    pub fn method(&self) -> &'static str {
        match self {
            Self::Sff(_) => "SFF",
            Self::Mff(_) => "MFF",
        }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        match *self {
            Self::Sff(l) => vec![l],
            Self::Mff(ls) => ls.to_vec(),
        }
    }

    pub fn update(&self, state: &TrackState, m: &[f64; 4]) -> TrackState {
        match *self {
            Self::Sff(l) => sff_update(state, m, l),
            Self::Mff(ls) => mff_update(state, m, ls),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("lambda", format!("{lambda} not in (0, 1)")))
    }
}

/// `a(n) = lambda a(n-1) + (1 - lambda) m(n)`.
pub fn sff_update(state: &TrackState, m: &[f64; 4], lambda: f64) -> TrackState {
    mff_update(state, m, [lambda; 3])
}

/// Componentwise recursion with `lambdas[k]` on direction cosine `k`.
pub fn mff_update(state: &TrackState, m: &[f64; 4], lambdas: [f64; 3]) -> TrackState {
    let mut a_hat = [0.0, 0.0, 0.0, 1.0];
    for k in 0..3 {
        let l = lambdas[k];
        a_hat[k] = l * state.a_hat[k] + (1.0 - l) * m[k];
    }
    TrackState {
        a_hat,
        n: state.n + 1,
    }
}

pub fn doa_from_state(state: &TrackState) -> Doa {
    let [ux, uy, uz, _] = state.a_hat;
    let alpha = uz.clamp(-1.0, 1.0).acos();
    let beta = wrap_two_pi(uy.atan2(ux));
    Doa::new(alpha, beta).expect("clamped elevation is in range")
}

/// `(alpha error, beta error)` in degrees; the azimuth error is wrapped to
/// `(-180, 180]`.
pub fn angular_error(est: Doa, truth: Doa) -> (f64, f64) {
    let alpha_err = (est.alpha() - truth.alpha()).to_degrees();
    let beta_err = wrap_signed_degrees((est.beta() - truth.beta()).to_degrees());
    (alpha_err, beta_err)
}

/// Maps an angle difference in degrees to `(-180, 180]`.
pub fn wrap_signed_degrees(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if w <= -180.0 {
        w + 360.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions {
    pub spec: ForgettingSpec,
    /// Feed the tracker with the dephased stream instead of raw snapshots.
    pub preprocess: bool,
    pub estimator: ManifoldEstimator,
    /// Reference channel(s) for the pre-processing.
    pub mode: DephaseMode,
}

impl TrackOptions {
    pub fn new(spec: ForgettingSpec, preprocess: bool) -> Self {
        Self {
            spec,
            preprocess,
            estimator: ManifoldEstimator::default(),
            mode: DephaseMode::SingleRow(4),
        }
    }

    pub fn with_estimator(mut self, estimator: ManifoldEstimator) -> Self {
        self.estimator = estimator;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackStep {
    /// Sample index of the (first) snapshot this estimate is timed at.
    pub n: usize,
    pub time: f64,
    pub estimate: Doa,
    pub truth: Doa,
    pub alpha_err_deg: f64,
    pub beta_err_deg: f64,
    /// The update was skipped because the pressure channel vanished.
    pub held: bool,
}

/// Runs one tracker over a snapshot stream and scores it against `truth`.
///
/// The state is initialized from the first usable sample; samples whose
/// pressure channel vanishes hold the state. With pre-processing, fewer
/// than `q + 1` snapshots produce no output.
pub fn track_run(
    z: &SnapshotMatrix,
    q: usize,
    opts: &TrackOptions,
    truth: &Trajectory,
) -> Result<Vec<TrackStep>> {
    let inputs: Vec<(f64, Vec4)> = if opts.preprocess {
        if z.len() <= q {
            return Ok(Vec::new());
        }
        let cfg = DephaseConfig::new(1, opts.mode)?;
        track_preprocess(z, q, &cfg)?
    } else {
        z.columns()
            .iter()
            .enumerate()
            .map(|(n, col)| (z.time(n), *col))
            .collect()
    };

    let mut state: Option<TrackState> = None;
    let mut steps = Vec::with_capacity(inputs.len());
    for (n, (time, zb)) in inputs.into_iter().enumerate() {
        let held = match (instant_manifold(&zb, opts.estimator), state) {
            (Ok(m), None) => {
                state = Some(TrackState::new(m));
                false
            }
            (Ok(m), Some(s)) => {
                state = Some(opts.spec.update(&s, &m));
                false
            }
            (Err(Error::SkipSample), _) => true,
            (Err(e), _) => return Err(e),
        };
        let Some(s) = state else { continue };
        let estimate = doa_from_state(&s);
        let truth_doa = truth.doa_at(time)?;
        let (alpha_err_deg, beta_err_deg) = angular_error(estimate, truth_doa);
        steps.push(TrackStep {
            n,
            time,
            estimate,
            truth: truth_doa,
            alpha_err_deg,
            beta_err_deg,
            held,
        });
    }
    Ok(steps)
}
