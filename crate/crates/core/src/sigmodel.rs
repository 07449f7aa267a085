//! Measurement model of one acoustic vector sensor observing a
//! polynomial-phase source in additive complex Gaussian noise.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result, Vec4};

/// Elevation/azimuth pair in radians.
///
/// Elevation is measured from the z axis and lies in `[0, pi]`; azimuth is
/// kept normalized to `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Doa {
    alpha: f64,
    beta: f64,
}

impl Doa {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidDoa(format!(
                "non-finite angles ({alpha}, {beta})"
            )));
        }
        if !(0.0..=PI).contains(&alpha) {
            return Err(Error::InvalidDoa(format!(
                "elevation {alpha} rad outside [0, pi]"
            )));
        }
        Ok(Self {
            alpha,
            beta: wrap_two_pi(beta),
        })
    }

    pub fn from_degrees(alpha_deg: f64, beta_deg: f64) -> Result<Self> {
        Self::new(alpha_deg.to_radians(), beta_deg.to_radians())
    }

    /// Elevation in radians.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Azimuth in radians, in `[0, 2pi)`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha_deg(&self) -> f64 {
        self.alpha.to_degrees()
    }

    pub fn beta_deg(&self) -> f64 {
        self.beta.to_degrees()
    }
}

/// Maps any finite angle into `[0, 2pi)`.
pub(crate) fn wrap_two_pi(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2pi for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Coefficients `b_0..b_q` of the phase polynomial `sum_k b_k t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PpsCoeffs {
    b: Vec<f64>,
}

impl PpsCoeffs {
    /// Builds a degree-`b.len() - 1` coefficient set. The degree must be at
    /// least one and the leading coefficient nonzero.
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if b.len() < 2 {
            return Err(Error::InvalidCoeffs(format!(
                "need at least b_0 and b_1, got {} coefficient(s)",
                b.len()
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoeffs("non-finite coefficient".into()));
        }
        if b[b.len() - 1] == 0.0 {
            return Err(Error::InvalidCoeffs(
                "leading coefficient b_q must be nonzero".into(),
            ));
        }
        Ok(Self { b })
    }

    /// Polynomial degree `q`.
    pub fn degree(&self) -> usize {
        self.b.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.b
    }

    /// Leading coefficient `b_q`.
    pub fn leading(&self) -> f64 {
        self.b[self.b.len() - 1]
    }

    /// Phase `sum_k b_k t^k` in radians.
    pub fn phase(&self, t: f64) -> f64 {
        polynomial_phase(&self.b, t)
    }
}

/// Horner evaluation of `sum_k b[k] t^k`.
pub fn polynomial_phase(b: &[f64], t: f64) -> f64 {
    b.iter().rev().fold(0.0, |acc, &bk| acc * t + bk)
}

/// Unit-modulus sample `exp(j * sum_k b[k] t^k)` for an arbitrary
/// coefficient slice, including the constant-phase case.
pub fn phase_sample(b: &[f64], t: f64) -> Complex64 {
    Complex64::from_polar(1.0, polynomial_phase(b, t))
}

/// `s(t) = exp(j (b_0 + b_1 t + ... + b_q t^q))`.
pub fn pps_sample(c: &PpsCoeffs, t: f64) -> Complex64 {
    phase_sample(&c.b, t)
}

/// Real response `[u_x, u_y, u_z, 1]` of the sensor to a unit-power plane
/// wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldVector(pub [f64; 4]);

impl ManifoldVector {
    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn to_complex(&self) -> Vec4 {
        self.0.map(|v| Complex64::new(v, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

pub fn steering_vector(doa: Doa) -> ManifoldVector {
    let (sa, ca) = doa.alpha.sin_cos();
    let (sb, cb) = doa.beta.sin_cos();
    ManifoldVector([sa * cb, sa * sb, ca, 1.0])
}

/// Per-channel noise variance and generator seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma2: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma2: f64, seed: u64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", format!("{sigma2} is not >= 0")));
        }
        Ok(Self { sigma2, seed })
    }

    pub fn noiseless() -> Self {
        Self {
            sigma2: 0.0,
            seed: 0,
        }
    }

    /// Noise variance for an SNR in dB under the unit-signal-power convention
    /// `SNR = 1 / sigma^2`. `+inf` dB maps to zero noise.
    pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Noise generator for one dataset.
///
/// ChaCha8 keyed by `seed_from_u64` (PCG32-expanded key, stream 0). Samples
/// are drawn column by column, channel by channel, real part before
/// imaginary part, each `N(0, sigma^2 / 2)`.
pub fn noise_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stateless seed derivation: a SplitMix64 chain over `base` and `indices`.
///
/// Used to give every Monte Carlo trial its own independent stream without
/// sharing generator state between threads.
pub fn derive_seed(base: u64, indices: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &ix in indices {
        state = splitmix64(state ^ splitmix64(ix.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 4xN complex snapshots; column `n` was sampled at `t0 + n * ts`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    columns: Vec<Vec4>,
    ts: f64,
    t0: f64,
}

impl SnapshotMatrix {
    pub fn new(columns: Vec<Vec4>, ts: f64, t0: f64) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InsufficientSamples {
                needed: 0,
                available: 0,
            });
        }
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::invalid("ts", format!("{ts} is not > 0")));
        }
        Ok(Self { columns, ts, t0 })
    }

    pub fn columns(&self) -> &[Vec4] {
        &self.columns
    }

    pub fn into_columns(self) -> Vec<Vec4> {
        self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Sampling time of column `n`.
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.ts
    }

    /// Multiplies every sample by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            columns: self.columns.iter().map(|col| col.map(|v| v * c)).collect(),
            ts: self.ts,
            t0: self.t0,
        }
    }
}

/// Sinusoidal source motion around `(alpha0, beta0)`:
/// `alpha(t) = alpha0 + amplitude * sin(omega_alpha * t)` and likewise for
/// azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub alpha0: f64,
    pub beta0: f64,
    pub omega_alpha: f64,
    pub omega_beta: f64,
    pub amplitude: f64,
}

impl Trajectory {
    pub fn new(alpha0: f64, beta0: f64, omega_alpha: f64, omega_beta: f64) -> Self {
        Self {
            alpha0,
            beta0,
            omega_alpha,
            omega_beta,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn alpha_at(&self, t: f64) -> f64 {
        self.alpha0 + self.amplitude * (self.omega_alpha * t).sin()
    }

    pub fn beta_at(&self, t: f64) -> f64 {
        self.beta0 + self.amplitude * (self.omega_beta * t).sin()
    }

    /// True direction at time `t`. Fails if the elevation is outside
    /// `[0, pi]` there.
    pub fn doa_at(&self, t: f64) -> Result<Doa> {
        Doa::new(self.alpha_at(t), self.beta_at(t))
    }

    /// Checks that the elevation stays strictly inside `(0, pi)` at every
    /// sample time `n * ts`, `n < m`.
    pub fn validate(&self, m: usize, ts: f64) -> Result<()> {
        for n in 0..m {
            let alpha = self.alpha_at(n as f64 * ts);
            if !(alpha > 0.0 && alpha < PI) {
                return Err(Error::TrajectoryOutOfRange { sample: n, alpha });
            }
        }
        Ok(())
    }
}

fn check_sampling(n: usize, ts: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one snapshot"));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::invalid("ts", format!("{ts} is not > 0")));
    }
    Ok(())
}

fn synthesize(
    n: usize,
    ts: f64,
    c: &PpsCoeffs,
    noise: NoiseSpec,
    mut manifold: impl FnMut(f64) -> Result<ManifoldVector>,
) -> Result<SnapshotMatrix> {
    check_sampling(n, ts)?;
    let scale = (noise.sigma2 / 2.0).sqrt();
    let mut rng = noise_rng(noise.seed);
    let mut columns = Vec::with_capacity(n);
    for m in 0..n {
        let t = m as f64 * ts;
        let a = manifold(t)?;
        let s = pps_sample(c, t);
        let mut col = a.0.map(|ak| s * ak);
        if noise.sigma2 > 0.0 {
            for v in col.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *v += Complex64::new(re * scale, im * scale);
            }
        }
        columns.push(col);
    }
    SnapshotMatrix::new(columns, ts, 0.0)
}

/// Static source: column `m` is `a * s(m ts) + w_m`.
pub fn synth_static(
    doa: Doa,
    c: &PpsCoeffs,
    n: usize,
    ts: f64,
    noise: NoiseSpec,
) -> Result<SnapshotMatrix> {
    let a = steering_vector(doa);
    synthesize(n, ts, c, noise, |_| Ok(a))
}

/// Moving source: column `n` is `a(alpha(n ts), beta(n ts)) * s(n ts) + w_n`.
///
/// The trajectory is validated over all `m` samples before anything is
/// generated.
pub fn synth_moving(
    traj: Trajectory,
    c: &PpsCoeffs,
    m: usize,
    ts: f64,
    noise: NoiseSpec,
) -> Result<SnapshotMatrix> {
    check_sampling(m, ts)?;
    traj.validate(m, ts)?;
    synthesize(m, ts, c, noise, |t| traj.doa_at(t).map(steering_vector))
}
