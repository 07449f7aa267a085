//! Quick field diagnostics: noiseless exactness of the estimator and the
//! structure of the Fisher information.

use std::f64::consts::PI;

use avsdf_core::sigmodel::noise_rng;
use avsdf_core::tracking::angular_error;
use avsdf_core::{
    crb_closed, estimate_doa_pipeline, fim_closed, fim_numeric, synth_static, DephaseConfig, Doa,
    NoiseSpec, PpsCoeffs,
};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiselessCase {
    pub q: usize,
    pub doa: Doa,
    pub coeffs: PpsCoeffs,
}

/// Random cases with `q` in 1..=5, elevation in [10, 170] degrees, any
/// azimuth and leading coefficient in [0.01, 0.5].
pub fn noiseless_cases(count: usize, seed: u64) -> Vec<NoiselessCase> {
    let mut rng = noise_rng(seed);
    (0..count)
        .map(|_| {
            let q = rng.random_range(1..=5usize);
            let alpha = rng.random_range(10.0..=170.0f64).to_radians();
            let beta = rng.random_range(0.0..2.0 * PI);
            let mut b: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
            b.push(rng.random_range(0.01..=0.5));
            NoiselessCase {
                q,
                doa: Doa::new(alpha, beta).expect("elevation drawn in range"),
                coeffs: PpsCoeffs::new(b).expect("leading coefficient is nonzero"),
            }
        })
        .collect()
}

/// Largest of the elevation and wrapped azimuth errors, in radians.
pub fn noiseless_error(case: &NoiselessCase, snapshots: usize) -> avsdf_core::Result<f64> {
    let z = synth_static(
        case.doa,
        &case.coeffs,
        snapshots,
        1.0,
        NoiseSpec::noiseless(),
    )?;
    let est = estimate_doa_pipeline(&z, case.q, &DephaseConfig::default(), 1)?;
    let (da, db) = angular_error(est.doa, case.doa);
    Ok(da.abs().max(db.abs()).to_radians())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn check_noiseless(count: usize, seed: u64) -> Check {
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for case in noiseless_cases(count, seed) {
        match noiseless_error(&case, 64) {
            Ok(e) => worst = worst.max(e),
            Err(_) => failures += 1,
        }
    }
    Check {
        name: "noiseless exactness",
        passed: failures == 0 && worst <= 1e-6,
        detail: format!("{count} cases, worst error {worst:.3e} rad, {failures} failed"),
    }
}

/// Zero angle/coefficient cross terms, CRB(alpha) equal to the inverse
/// information and the numeric FIM agreeing with the closed form.
pub fn check_crb_decoupling() -> Check {
    let alpha = 50f64.to_radians();
    let (n, ts, sigma2) = (32, 1.0, 0.1);
    let mut problems = Vec::new();
    let bound = crb_closed(alpha, n, sigma2).expect("away from the pole");
    let mut rng = noise_rng(7);

    for q in 1..=5 {
        let fim = fim_closed(alpha, q, n, ts, sigma2).expect("valid arguments");
        for j in 1..fim.dim() {
            if fim.get(0, j) != 0.0 {
                problems.push(format!("q={q}: J[0][{j}] = {}", fim.get(0, j)));
            }
            if j >= 2 && fim.get(1, j) != 0.0 {
                problems.push(format!("q={q}: J[1][{j}] = {}", fim.get(1, j)));
            }
        }
        if q <= 3 {
            let b: Vec<f64> = (0..=q).map(|_| rng.random_range(0.01..0.5)).collect();
            let coeffs = PpsCoeffs::new(b).expect("nonzero leading coefficient");
            let doa = Doa::new(alpha, 1.0).expect("valid angles");
            let numeric = fim_numeric(doa, &coeffs, n, ts, sigma2, 1e-5).expect("valid arguments");
            for i in 0..fim.dim() {
                for j in 0..fim.dim() {
                    let c = fim.get(i, j);
                    let scale = if c == 0.0 {
                        (fim.get(i, i) * fim.get(j, j)).sqrt()
                    } else {
                        c.abs()
                    };
                    if (numeric.get(i, j) - c).abs() > 1e-4 * scale {
                        problems.push(format!(
                            "q={q}: numeric J[{i}][{j}] = {}, closed {c}",
                            numeric.get(i, j)
                        ));
                    }
                }
            }
        }
    }
    let inverse_alpha = 1.0
        / fim_closed(alpha, 1, n, ts, sigma2)
            .expect("valid arguments")
            .get(0, 0);
    if (inverse_alpha - bound.crb_alpha).abs() > 1e-12 * bound.crb_alpha {
        problems.push(format!(
            "CRB(alpha) {} vs 1/J {}",
            bound.crb_alpha, inverse_alpha
        ));
    }
    Check {
        name: "crb decoupling",
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            "q = 1..5".to_string()
        } else {
            problems.join("; ")
        },
    }
}

pub fn run_all() -> Vec<Check> {
    vec![check_noiseless(200, 1), check_crb_decoupling()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_reproducible_and_in_range() {
        let a = noiseless_cases(50, 3);
        assert_eq!(a, noiseless_cases(50, 3));
        for c in &a {
            assert!((1..=5).contains(&c.q));
            assert_eq!(c.coeffs.degree(), c.q);
            assert!((0.01..=0.5).contains(&c.coeffs.leading()));
            assert!(c.doa.alpha_deg() >= 10.0 - 1e-9 && c.doa.alpha_deg() <= 170.0 + 1e-9);
        }
    }

    #[test]
    fn checks_pass() {
        assert!(check_noiseless(20, 5).passed);
        let c = check_crb_decoupling();
        assert!(c.passed, "{}", c.detail);
    }
}
