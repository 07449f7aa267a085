//! Conjugate-lag dephasing.
//!
//! Multiplying a snapshot stream by the conjugate of one of its own channels
//! delayed by `d` samples replaces the phase polynomial `phi(t)` with the
//! difference `phi(t) - phi(t + d ts)`, lowering its degree by one while the
//! spatial signature stays proportional to the steering vector. Repeating
//! this `q - 1` times leaves a constant-frequency stream, from which the
//! two-block ESPRIT pencil is cut.

use std::fmt;

use num_complex::Complex64;

use crate::sigmodel::SnapshotMatrix;
use crate::{Error, Result, Vec4};

/// Which channel(s) supply the conjugated reference in a dephasing step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DephaseMode {
    /// Reference is row `i` (1-based, 1..=4). Row 4 is the pressure channel.
    SingleRow(usize),
    /// Reference is the sum of all four rows.
    Sum,
}

impl fmt::Display for DephaseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DephaseMode::SingleRow(i) => write!(f, "row {i}"),
            DephaseMode::Sum => f.write_str("row sum"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DephaseConfig {
    /// Dephasing lag `d` in samples.
    pub delay_samples: usize,
    pub mode: DephaseMode,
}

impl Default for DephaseConfig {
    fn default() -> Self {
        Self {
            delay_samples: 1,
            mode: DephaseMode::SingleRow(4),
        }
    }
}

impl DephaseConfig {
    pub fn new(delay_samples: usize, mode: DephaseMode) -> Result<Self> {
        let cfg = Self {
            delay_samples,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delay_samples == 0 {
            return Err(Error::invalid("delay_samples", "must be >= 1"));
        }
        if let DephaseMode::SingleRow(i) = self.mode {
            if !(1..=4).contains(&i) {
                return Err(Error::invalid("row_index", format!("{i} not in 1..=4")));
            }
        }
        Ok(())
    }

    fn reference(&self, col: &Vec4) -> Complex64 {
        match self.mode {
            DephaseMode::SingleRow(i) => col[i - 1],
            DephaseMode::Sum => col.iter().sum(),
        }
    }
}

const NEAR_ZERO_REFERENCE: f64 = 1e-9;

fn column_norm(col: &Vec4) -> f64 {
    col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// One dephasing step: output column `n` is `z[n] * conj(ref(z[n + d]))`.
///
/// The output has `N - d` columns and column `n` keeps the timestamp of
/// input column `n`.
pub fn dephase_step(z: &[Vec4], cfg: &DephaseConfig) -> Result<Vec<Vec4>> {
    cfg.validate()?;
    let d = cfg.delay_samples;
    if z.len() <= d {
        return Err(Error::InsufficientSamples {
            needed: d,
            available: z.len(),
        });
    }

    let refs: Vec<Complex64> = z[d..].iter().map(|col| cfg.reference(col)).collect();

    let mean_ref = refs.iter().map(|r| r.norm()).sum::<f64>() / refs.len() as f64;
    let mean_norm = z.iter().map(column_norm).sum::<f64>() / z.len() as f64;
    if mean_ref < NEAR_ZERO_REFERENCE * mean_norm {
        return Err(Error::NearZeroReferenceRow {
            reference: cfg.mode.to_string(),
        });
    }

    Ok(z.iter()
        .zip(&refs)
        .map(|(col, r)| {
            let rc = r.conj();
            col.map(|v| v * rc)
        })
        .collect())
}

/// Applies [`dephase_step`] `q - 1` times, reducing a degree-`q`
/// polynomial-phase stream to a constant-frequency one.
///
/// The result keeps the sampling metadata of `z`; it has
/// `N - (q - 1) d` columns. For `q = 1` the input is returned unchanged.
pub fn reduce_to_linear(
    z: &SnapshotMatrix,
    q: usize,
    cfg: &DephaseConfig,
) -> Result<SnapshotMatrix> {
    dephase_repeated(
        z,
        q.checked_sub(1)
            .ok_or_else(|| Error::invalid("q", "must be >= 1"))?,
        cfg,
    )
}

fn dephase_repeated(
    z: &SnapshotMatrix,
    steps: usize,
    cfg: &DephaseConfig,
) -> Result<SnapshotMatrix> {
    cfg.validate()?;
    let consumed = steps * cfg.delay_samples;
    if z.len() <= consumed {
        return Err(Error::InsufficientSamples {
            needed: consumed,
            available: z.len(),
        });
    }
    let mut cols = z.columns().to_vec();
    for _ in 0..steps {
        cols = dephase_step(&cols, cfg)?;
    }
    SnapshotMatrix::new(cols, z.ts(), z.t0())
}

/// Stacked pencil data: column `n` is `[z1[n]; z1[n + delta]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilDataset {
    columns: Vec<[Complex64; 8]>,
    pencil_delay_samples: usize,
}

impl PencilDataset {
    pub fn columns(&self) -> &[[Complex64; 8]] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn pencil_delay_samples(&self) -> usize {
        self.pencil_delay_samples
    }

    /// Top block, column `n`.
    pub fn y1(&self, n: usize) -> Vec4 {
        let c = &self.columns[n];
        [c[0], c[1], c[2], c[3]]
    }

    /// Bottom block, column `n`.
    pub fn y2(&self, n: usize) -> Vec4 {
        let c = &self.columns[n];
        [c[4], c[5], c[6], c[7]]
    }
}

pub fn build_pencil(z1: &[Vec4], pencil_delay_samples: usize) -> Result<PencilDataset> {
    if pencil_delay_samples == 0 {
        return Err(Error::invalid("pencil_delay", "must be >= 1"));
    }
    if z1.len() <= pencil_delay_samples {
        return Err(Error::InsufficientSamples {
            needed: pencil_delay_samples,
            available: z1.len(),
        });
    }
    let columns = z1
        .iter()
        .zip(&z1[pencil_delay_samples..])
        .map(|(top, bottom)| {
            let mut y = [Complex64::new(0.0, 0.0); 8];
            y[..4].copy_from_slice(top);
            y[4..].copy_from_slice(bottom);
            y
        })
        .collect();
    Ok(PencilDataset {
        columns,
        pencil_delay_samples,
    })
}

/// Tracking pre-processing: `q` unit-lag dephasing steps over every window
/// of `q + 1` contiguous snapshots.
///
/// Returns `(time, z_breve)` pairs, one per window, timed at the window's
/// first sample. Under a polynomial-phase source the remaining phase is the
/// constant `(-1)^q q! b_q ts^q`, so `z_breve` tracks the manifold of the
/// current direction.
pub fn track_preprocess(
    z: &SnapshotMatrix,
    q: usize,
    cfg: &DephaseConfig,
) -> Result<Vec<(f64, Vec4)>> {
    if cfg.delay_samples != 1 {
        return Err(Error::invalid(
            "delay_samples",
            "tracking pre-processing uses a one-sample lag",
        ));
    }
    if q == 0 {
        return Err(Error::invalid("q", "must be >= 1"));
    }
    let out = dephase_repeated(z, q, cfg)?;
    Ok(out
        .columns()
        .iter()
        .enumerate()
        .map(|(n, col)| (out.time(n), *col))
        .collect())
}
