//! Fisher information and Cramér-Rao bounds for the deterministic
//! polynomial-phase source observed by one vector sensor in white complex
//! Gaussian noise of known variance.
//!
//! Parameters are ordered `[alpha, beta, b_0, ..., b_q]`. The direction
//! block decouples from the phase coefficients, so the direction bounds
//! depend only on `alpha`, `N` and `sigma^2`.

use num_complex::Complex64;

use crate::sigmodel::{polynomial_phase, Doa, PpsCoeffs};
use crate::{Error, Result};

/// `(q + 3) x (q + 3)` Fisher information matrix, row-major, parameters
/// ordered `[alpha, beta, b_0, ..., b_q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    j: Vec<Vec<f64>>,
}

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.j.len()
    }

    /// Polynomial degree `q` implied by the dimension.
    pub fn degree(&self) -> usize {
        self.j.len() - 3
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.j[row][col]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.j
    }

    /// Index of `b_l` in the parameter vector.
    pub fn b_index(l: usize) -> usize {
        l + 2
    }

    /// Names of the parameters in matrix order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["alpha".to_string(), "beta".to_string()];
        names.extend((0..=self.degree()).map(|l| format!("b{l}")));
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbResult {
    /// Bound on the elevation variance, rad^2.
    pub crb_alpha: f64,
    /// Bound on the azimuth variance, rad^2.
    pub crb_beta: f64,
}

impl CrbResult {
    pub fn alpha_std_deg(&self) -> f64 {
        self.crb_alpha.sqrt().to_degrees()
    }

    pub fn beta_std_deg(&self) -> f64 {
        self.crb_beta.sqrt().to_degrees()
    }
}

/// `sum_{m=1..n} m^k` with Neumaier compensation.
fn power_sum(n: usize, k: u32) -> Result<f64> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for m in 1..=n {
        let term = (m as f64).powi(k as i32);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    let total = sum + comp;
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Overflow)
    }
}

fn check_common(n: usize, sigma2: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one snapshot"));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid("sigma2", format!("{sigma2} is not > 0")));
    }
    Ok(())
}

/// Closed-form FIM for samples taken at `ts, 2 ts, ..., n ts`.
pub fn fim_closed(alpha: f64, q: usize, n: usize, ts: f64, sigma2: f64) -> Result<FisherMatrix> {
    check_common(n, sigma2)?;
    if q == 0 {
        return Err(Error::invalid("q", "must be >= 1"));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::invalid("ts", format!("{ts} is not > 0")));
    }
    let dim = q + 3;
    let nf = n as f64;
    let mut j = vec![vec![0.0; dim]; dim];
    j[0][0] = 2.0 * nf / sigma2;
    j[1][1] = 2.0 * nf * alpha.sin().powi(2) / sigma2;

    let sums = (0..=2 * q as u32)
        .map(|k| power_sum(n, k))
        .collect::<Result<Vec<_>>>()?;
    for l1 in 0..=q {
        for l2 in 0..=q {
            let k = l1 + l2;
            let v = 4.0 / sigma2 * ts.powi(k as i32) * sums[k];
            if !v.is_finite() {
                return Err(Error::Overflow);
            }
            j[l1 + 2][l2 + 2] = v;
        }
    }
    Ok(FisherMatrix { j })
}

/// `CRB(alpha) = sigma^2 / 2N`, `CRB(beta) = sigma^2 / (2N sin^2 alpha)`.
pub fn crb_closed(alpha: f64, n: usize, sigma2: f64) -> Result<CrbResult> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one snapshot"));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid("sigma2", format!("{sigma2} is not >= 0")));
    }
    let sin_alpha = alpha.sin();
    if sin_alpha.abs() < 1e-9 {
        return Err(Error::PoleSingularity);
    }
    let crb_alpha = sigma2 / (2.0 * n as f64);
    Ok(CrbResult {
        crb_alpha,
        crb_beta: crb_alpha / (sin_alpha * sin_alpha),
    })
}

/// Noise-free data `a(alpha, beta) (x) s` for samples `ts .. n ts`, built
/// directly from raw parameters so perturbed angles need not be valid.
fn mean_vector(kappa: &[f64], n: usize, ts: f64) -> Vec<Complex64> {
    let (alpha, beta, b) = (kappa[0], kappa[1], &kappa[2..]);
    let a = [
        alpha.sin() * beta.cos(),
        alpha.sin() * beta.sin(),
        alpha.cos(),
        1.0,
    ];
    let mut m = Vec::with_capacity(4 * n);
    for ak in a {
        for i in 1..=n {
            let s = Complex64::from_polar(1.0, polynomial_phase(b, i as f64 * ts));
            m.push(s * ak);
        }
    }
    m
}

/// FIM by central finite differences of the noise-free data vector,
/// `J_ij = 2 Re(dm_i^H dm_j) / sigma^2`.
///
/// `step` is a relative step. Angles use `step * max(1, |kappa_i|)`; the
/// step on `b_l` is further divided by `max(1, n ts)^l` so the phase
/// perturbation at the last sample stays at `step` scale.
pub fn fim_numeric(
    doa: Doa,
    coeffs: &PpsCoeffs,
    n: usize,
    ts: f64,
    sigma2: f64,
    step: f64,
) -> Result<FisherMatrix> {
    check_common(n, sigma2)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", format!("{step} is not > 0")));
    }
    let mut kappa = vec![doa.alpha(), doa.beta()];
    kappa.extend_from_slice(coeffs.coeffs());
    let dim = kappa.len();
    let horizon = (n as f64 * ts).max(1.0);

    let derivs: Vec<Vec<Complex64>> = (0..dim)
        .map(|i| {
            let mut h = step * kappa[i].abs().max(1.0);
            if i >= 2 {
                h /= horizon.powi(i as i32 - 2);
            }
            let mut plus = kappa.clone();
            let mut minus = kappa.clone();
            plus[i] += h;
            minus[i] -= h;
            let mp = mean_vector(&plus, n, ts);
            let mm = mean_vector(&minus, n, ts);
            mp.iter()
                .zip(&mm)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect()
        })
        .collect();

    let mut j = vec![vec![0.0; dim]; dim];
    for r in 0..dim {
        for c in r..dim {
            let inner: Complex64 = derivs[r]
                .iter()
                .zip(&derivs[c])
                .map(|(x, y)| x.conj() * y)
                .sum();
            let v = 2.0 * inner.re / sigma2;
            j[r][c] = v;
            j[c][r] = v;
        }
    }
    Ok(FisherMatrix { j })
}
