//! One-source ESPRIT on the dephased pencil.
//!
//! The dominant eigenvector of `Y Y^H` splits into two 4-vectors that are
//! scaled copies of the modified manifold, related by the invariant factor
//! `rho`. Averaging them after removing `rho` gives the manifold up to a
//! complex constant, and ratios against the pressure channel give the
//! direction cosines.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::dephase::{build_pencil, reduce_to_linear, DephaseConfig, PencilDataset};
use crate::sigmodel::{wrap_two_pi, Doa, SnapshotMatrix};
use crate::{Error, Result, Vec4};

pub type Matrix8 = [[Complex64; 8]; 8];

/// Relative residual accepted by the power iteration.
pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 10_000;

/// Deflated spectra whose top eigenvalue reaches this fraction of the
/// dominant one are treated as ties.
const TIE_RATIO: f64 = 1.0 - 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;
const POLE_MARGIN: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `Y Y^H` for the stacked pencil data.
pub fn correlation(y: &PencilDataset) -> Matrix8 {
    let mut r = [[ZERO; 8]; 8];
    for col in y.columns() {
        for i in 0..8 {
            let yi = col[i];
            for j in i..8 {
                r[i][j] += yi * col[j].conj();
            }
        }
    }
    for i in 0..8 {
        r[i][i].im = 0.0;
        for j in (i + 1)..8 {
            r[j][i] = r[i][j].conj();
        }
    }
    r
}

fn mat_vec<const N: usize>(r: &[[Complex64; N]; N], v: &[Complex64; N]) -> [Complex64; N] {
    std::array::from_fn(|i| r[i].iter().zip(v).map(|(a, b)| a * b).sum())
}

fn dot<const N: usize>(a: &[Complex64; N], b: &[Complex64; N]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm<const N: usize>(v: &[Complex64; N]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn scale<const N: usize>(v: &[Complex64; N], s: Complex64) -> [Complex64; N] {
    v.map(|x| x * s)
}

fn max_abs<const N: usize>(r: &[[Complex64; N]; N]) -> f64 {
    r.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Rotates `v` so that its largest-modulus element is real and positive.
fn fix_phase<const N: usize>(v: [Complex64; N]) -> [Complex64; N] {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or(ZERO);
    if pivot.norm() == 0.0 {
        return v;
    }
    let rot = pivot.conj() / pivot.norm();
    v.map(|x| x * rot)
}

/// Dominant eigenpair of a Hermitian positive semidefinite matrix by power
/// iteration from the normalized all-ones vector.
///
/// On success `||R v - lambda v|| <= tol * lambda`, `v` is unit-norm and its
/// largest-modulus entry is real-positive. A zero matrix, a tie for the top
/// eigenvalue (detected by a deflated second pass) or a residual that has
/// not met `tol` after `max_iter` iterations all report
/// [`Error::NoConvergence`].
pub fn dominant_eigvec<const N: usize>(
    r: &[[Complex64; N]; N],
    tol: f64,
    max_iter: usize,
) -> Result<(f64, [Complex64; N])> {
    let scale_ref = max_abs(r);
    for i in 0..N {
        for j in i..N {
            if (r[i][j] - r[j][i].conj()).norm() > HERMITIAN_TOL * scale_ref.max(f64::MIN_POSITIVE)
            {
                return Err(Error::invalid("r", "matrix is not Hermitian"));
            }
        }
    }
    let fail = Error::NoConvergence { max_iter };
    if scale_ref == 0.0 || N == 0 {
        return Err(fail);
    }

    let mut v = [Complex64::new(1.0 / (N as f64).sqrt(), 0.0); N];
    let mut converged = None;
    for _ in 0..max_iter {
        let w = mat_vec(r, &v);
        let lambda = dot(&v, &w).re;
        let residual = norm(&std::array::from_fn::<_, N, _>(|i| w[i] - v[i] * lambda));
        if lambda > 0.0 && residual <= tol * lambda {
            converged = Some(lambda);
            break;
        }
        let wn = norm(&w);
        if wn == 0.0 {
            return Err(fail);
        }
        v = scale(&w, Complex64::new(1.0 / wn, 0.0));
    }
    let lambda = converged.ok_or(fail.clone())?;

    if second_eigenvalue_bound(r, &v, lambda) >= TIE_RATIO * lambda {
        return Err(fail);
    }
    Ok((lambda, fix_phase(v)))
}

/// Largest Rayleigh quotient reached by power iteration on
/// `R - lambda v v^H`, started orthogonal to `v`. It never exceeds the
/// largest eigenvalue of the deflated matrix.
fn second_eigenvalue_bound<const N: usize>(
    r: &[[Complex64; N]; N],
    v: &[Complex64; N],
    lambda: f64,
) -> f64 {
    if N < 2 {
        return 0.0;
    }
    let deflated: [[Complex64; N]; N] =
        std::array::from_fn(|i| std::array::from_fn(|j| r[i][j] - v[i] * v[j].conj() * lambda));

    let orthogonalize = |x: [Complex64; N]| {
        let p = dot(v, &x);
        std::array::from_fn::<_, N, _>(|i| x[i] - v[i] * p)
    };
    // golden-angle phases: no symmetry shared with structured test matrices
    let mut x = orthogonalize(std::array::from_fn(|k| {
        Complex64::from_polar(1.0 + k as f64 / N as f64, 2.399_963_229_728_653 * k as f64)
    }));
    if norm(&x) < 1e-6 {
        let k = (0..N)
            .min_by(|&a, &b| v[a].norm_sqr().total_cmp(&v[b].norm_sqr()))
            .unwrap_or(0);
        let mut e = [ZERO; N];
        e[k] = Complex64::new(1.0, 0.0);
        x = orthogonalize(e);
    }

    let mut best = 0.0f64;
    let mut prev = f64::NEG_INFINITY;
    for _ in 0..200 {
        let xn = norm(&x);
        if xn == 0.0 {
            break;
        }
        x = scale(&x, Complex64::new(1.0 / xn, 0.0));
        let w = mat_vec(&deflated, &x);
        let rq = dot(&x, &w).re;
        best = best.max(rq);
        if best >= TIE_RATIO * lambda || (rq - prev).abs() <= 1e-12 * lambda {
            break;
        }
        prev = rq;
        x = orthogonalize(w);
    }
    best
}

/// Least-squares `rho` in `v2 = rho v1`.
pub fn estimate_rho(v1: &Vec4, v2: &Vec4) -> Result<Complex64> {
    let energy = dot(v1, v1).re;
    if energy.sqrt() < 1e-14 {
        return Err(Error::ZeroReference);
    }
    Ok(dot(v1, v2) / energy)
}

/// Leading coefficient from the invariant factor:
/// `(arg(rho) + 2 pi m_b) / ((-1)^(q-1) q! delta^(q-1) pencil_delay)`,
/// with `delta` and `pencil_delay` in seconds.
pub fn estimate_bq(
    rho: Complex64,
    q: usize,
    delta: f64,
    pencil_delay: f64,
    m_b: i64,
) -> Result<f64> {
    if q == 0 {
        return Err(Error::invalid("q", "must be >= 1"));
    }
    let sign = if (q - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let factorial: f64 = (1..=q).map(|k| k as f64).product();
    let denom = sign * factorial * delta.powi(q as i32 - 1) * pencil_delay;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::invalid("delta", "delay product must be nonzero"));
    }
    Ok((rho.arg() + TAU * m_b as f64) / denom)
}

/// `(v1 + v2 / rho) / 2`.
pub fn estimate_manifold(v1: &Vec4, v2: &Vec4, rho: Complex64) -> Result<Vec4> {
    if rho.norm() < f64::MIN_POSITIVE {
        return Err(Error::ZeroRho);
    }
    Ok(std::array::from_fn(|k| (v1[k] + v2[k] / rho) * 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractedDoa {
    pub doa: Doa,
    /// `|u_z|` is within `1e-9` of one; the azimuth is not identifiable.
    pub at_pole: bool,
}

/// Direction from a manifold estimate known up to a complex scale.
pub fn extract_doa(a_tilde: &Vec4) -> Result<ExtractedDoa> {
    let p = a_tilde[3];
    if p.norm() <= 1e-12 * norm(a_tilde) || p.norm() == 0.0 {
        return Err(Error::ZeroPressureChannel);
    }
    let ux = (a_tilde[0] / p).re;
    let uy = (a_tilde[1] / p).re;
    let uz = (a_tilde[2] / p).re;
    let alpha = uz.clamp(-1.0, 1.0).acos();
    let beta = wrap_two_pi(uy.atan2(ux));
    Ok(ExtractedDoa {
        doa: Doa::new(alpha, beta)?,
        at_pole: uz.abs() > 1.0 - POLE_MARGIN,
    })
}

/// Everything the pipeline computed on the way to a direction estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    pub doa: Doa,
    pub at_pole: bool,
    pub rho: Complex64,
    pub eigenvalue: f64,
    pub v1: Vec4,
    pub v2: Vec4,
    pub a_tilde_hat: Vec4,
    q: usize,
    delta_seconds: f64,
    pencil_delay_seconds: f64,
}

impl DoaEstimate {
    /// Leading phase coefficient for the branch `m_b`, chosen from prior
    /// knowledge of where `b_q` lies.
    pub fn bq_hat(&self, m_b: i64) -> f64 {
        estimate_bq(
            self.rho,
            self.q,
            self.delta_seconds,
            self.pencil_delay_seconds,
            m_b,
        )
        .expect("delays validated by the pipeline")
    }
}

/// Dephase, build the pencil, and run one-source ESPRIT.
pub fn estimate_doa_pipeline(
    z: &SnapshotMatrix,
    q: usize,
    cfg: &DephaseConfig,
    pencil_delay: usize,
) -> Result<DoaEstimate> {
    let z1 = reduce_to_linear(z, q, cfg)?;
    let pencil = build_pencil(z1.columns(), pencil_delay)?;
    let r = correlation(&pencil);
    let (eigenvalue, v) = dominant_eigvec(&r, POWER_TOL, POWER_MAX_ITER)?;
    let v1: Vec4 = [v[0], v[1], v[2], v[3]];
    let v2: Vec4 = [v[4], v[5], v[6], v[7]];
    let rho = estimate_rho(&v1, &v2)?;
    let a_tilde_hat = estimate_manifold(&v1, &v2, rho)?;
    let ExtractedDoa { doa, at_pole } = extract_doa(&a_tilde_hat)?;
    Ok(DoaEstimate {
        doa,
        at_pole,
        rho,
        eigenvalue,
        v1,
        v2,
        a_tilde_hat,
        q,
        delta_seconds: cfg.delay_samples as f64 * z.ts(),
        pencil_delay_seconds: pencil_delay as f64 * z.ts(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephase::DephaseMode;
    use crate::sigmodel::{steering_vector, synth_static, NoiseSpec, PpsCoeffs};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn outer(x: &[Complex64; 8]) -> Matrix8 {
        std::array::from_fn(|i| std::array::from_fn(|j| x[i] * x[j].conj()))
    }

    fn residual(r: &Matrix8, lambda: f64, v: &[Complex64; 8]) -> f64 {
        let w = mat_vec(r, v);
        norm(&std::array::from_fn::<_, 8, _>(|i| w[i] - v[i] * lambda))
    }

    #[test]
    fn correlation_of_single_column_is_outer_product() {
        let x: [Complex64; 8] = std::array::from_fn(|k| c(k as f64 - 3.0, 0.5 * k as f64));
        let y = build_pencil(&[[x[0], x[1], x[2], x[3]], [x[4], x[5], x[6], x[7]]], 1).unwrap();
        assert_eq!(correlation(&y), outer(&x));
    }

    #[test]
    fn correlation_of_zero_data_is_zero() {
        let y = build_pencil(&[[ZERO; 4]; 6], 2).unwrap();
        assert!(correlation(&y).iter().flatten().all(|v| *v == ZERO));
    }

    #[test]
    fn rank_one_eigenpair() {
        let x: [Complex64; 8] =
            std::array::from_fn(|k| c((k as f64).sin() + 0.2, (k as f64 * 0.7).cos()));
        let r = outer(&x);
        let (lambda, v) = dominant_eigvec(&r, POWER_TOL, POWER_MAX_ITER).unwrap();
        assert_abs_diff_eq!(lambda, norm(&x).powi(2), epsilon = 1e-12 * lambda);
        assert!(residual(&r, lambda, &v) <= POWER_TOL * lambda);
        // v = x / ||x|| up to phase
        let overlap = dot(&v, &x).norm() / norm(&x);
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-12);
        let pivot = v
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        assert!(pivot.im == 0.0 && pivot.re > 0.0);
    }

    #[test]
    fn diagonal_eigenpair() {
        let mut r = [[ZERO; 8]; 8];
        r[0][0] = c(4.0, 0.0);
        for i in 1..8 {
            r[i][i] = c(1.0, 0.0);
        }
        let (lambda, v) = dominant_eigvec(&r, POWER_TOL, POWER_MAX_ITER).unwrap();
        assert_abs_diff_eq!(lambda, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[0].re, 1.0, epsilon = 1e-12);
        assert!(v[1..].iter().all(|x| x.norm() < 1e-6));
    }

    #[test]
    fn degenerate_spectra_do_not_converge() {
        let identity: Matrix8 = std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { c(1.0, 0.0) } else { ZERO })
        });
        assert!(matches!(
            dominant_eigvec(&identity, POWER_TOL, POWER_MAX_ITER),
            Err(Error::NoConvergence { .. })
        ));
        assert!(matches!(
            dominant_eigvec(&[[ZERO; 8]; 8], POWER_TOL, POWER_MAX_ITER),
            Err(Error::NoConvergence { .. })
        ));
        // two-fold top eigenvalue
        let mut r = identity;
        r[2][2] = c(3.0, 0.0);
        r[5][5] = c(3.0, 0.0);
        assert!(dominant_eigvec(&r, POWER_TOL, POWER_MAX_ITER).is_err());
    }

    #[test]
    fn dominant_vector_orthogonal_to_start_is_flagged() {
        // top eigenvector (1, -1, 0..)/sqrt2 is orthogonal to the all-ones start
        let mut r: Matrix8 = std::array::from_fn(|i| {
            std::array::from_fn(|j| if i == j { c(1.0, 0.0) } else { ZERO })
        });
        r[0][0] = c(5.0, 0.0);
        r[1][1] = c(5.0, 0.0);
        r[0][1] = c(-4.0, 0.0);
        r[1][0] = c(-4.0, 0.0);
        match dominant_eigvec(&r, POWER_TOL, POWER_MAX_ITER) {
            Ok((lambda, _)) => assert_abs_diff_eq!(lambda, 9.0, epsilon = 1e-9),
            Err(e) => assert!(matches!(e, Error::NoConvergence { .. })),
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut r = [[ZERO; 8]; 8];
        r[0][1] = c(1.0, 0.0);
        assert!(matches!(
            dominant_eigvec(&r, POWER_TOL, POWER_MAX_ITER),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn rho_examples() {
        let v1 = [c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(1.0, -0.4)];
        let rho = Complex64::from_polar(1.0, -0.26);
        let v2 = v1.map(|x| x * rho);
        assert_abs_diff_eq!(
            (estimate_rho(&v1, &v2).unwrap() - rho).norm(),
            0.0,
            epsilon = 1e-15
        );

        let e1 = [c(1.0, 0.0), ZERO, ZERO, ZERO];
        let e2 = [ZERO, c(0.0, 1.0), ZERO, ZERO];
        assert_eq!(estimate_rho(&e1, &e2).unwrap(), ZERO);
        assert_eq!(estimate_rho(&[ZERO; 4], &e2), Err(Error::ZeroReference));
    }

    #[test]
    fn bq_examples() {
        let rho = Complex64::from_polar(1.0, -0.26);
        assert_abs_diff_eq!(
            estimate_bq(rho, 2, 1.0, 1.0, 0).unwrap(),
            0.13,
            epsilon = 1e-15
        );
        assert_eq!(estimate_bq(c(1.0, 0.0), 2, 1.0, 1.0, 0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            estimate_bq(c(1.0, 0.0), 2, 1.0, 1.0, 1).unwrap(),
            -PI,
            epsilon = 1e-15
        );
        assert!(estimate_bq(rho, 2, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn manifold_examples() {
        let a = [c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(1.0, -0.4)];
        assert_eq!(estimate_manifold(&a, &a, c(1.0, 0.0)).unwrap(), a);

        let rho = Complex64::from_polar(1.0, 1.1);
        let got = estimate_manifold(&a, &a.map(|x| x * rho), rho).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!((got[k] - a[k]).norm(), 0.0, epsilon = 1e-15);
        }

        let v2 = [c(0.1, 0.0), c(0.0, 0.2), c(-0.3, 0.3), c(0.9, 0.1)];
        let got = estimate_manifold(&a, &v2, rho).unwrap();
        for k in 0..4 {
            let alt = a[k] + (v2[k] / rho - a[k]) * 0.5;
            assert_abs_diff_eq!((got[k] - alt).norm(), 0.0, epsilon = 1e-15);
        }
        assert_eq!(estimate_manifold(&a, &v2, ZERO), Err(Error::ZeroRho));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn extract_examples() {
        let a = [
            c(0.353553, 0.0),
            c(0.612372, 0.0),
            c(0.707107, 0.0),
            c(1.0, 0.0),
        ];
        let d = extract_doa(&a).unwrap();
        assert_abs_diff_eq!(d.doa.alpha_deg(), 45.0, epsilon = 1e-4);
        assert_abs_diff_eq!(d.doa.beta_deg(), 60.0, epsilon = 1e-4);
        assert!(!d.at_pole);

        let rot = Complex64::from_polar(1.0, 0.8);
        let pole = extract_doa(&[ZERO, ZERO, rot, rot]).unwrap();
        assert_eq!(pole.doa.alpha(), 0.0);
        assert!(pole.at_pole);

        assert_eq!(
            extract_doa(&[c(1.0, 0.0), ZERO, ZERO, ZERO]),
            Err(Error::ZeroPressureChannel)
        );
        assert_eq!(extract_doa(&[ZERO; 4]), Err(Error::ZeroPressureChannel));
    }

    fn noiseless_estimate(
        alpha_deg: f64,
        beta_deg: f64,
        b: &[f64],
        n: usize,
        cfg: DephaseConfig,
    ) -> DoaEstimate {
        let doa = Doa::from_degrees(alpha_deg, beta_deg).unwrap();
        let coeffs = PpsCoeffs::new(b.to_vec()).unwrap();
        let z = synth_static(doa, &coeffs, n, 1.0, NoiseSpec::noiseless()).unwrap();
        estimate_doa_pipeline(&z, coeffs.degree(), &cfg, 1).unwrap()
    }

    #[test]
    fn noiseless_chirp_pipeline() {
        let est = noiseless_estimate(
            45.0,
            60.0,
            &[0.05, 0.1, 0.13],
            500,
            DephaseConfig::default(),
        );
        assert_abs_diff_eq!(est.doa.alpha(), PI / 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.doa.beta(), PI / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.rho.arg(), -0.26, epsilon = 1e-9);
        assert_abs_diff_eq!(est.rho.norm(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.bq_hat(0), 0.13, epsilon = 1e-9);
    }

    #[test]
    fn noiseless_quartic_and_tone_pipeline() {
        let est = noiseless_estimate(
            45.0,
            60.0,
            &[0.05, 0.1, 0.13, 0.23, 0.29],
            500,
            DephaseConfig::default(),
        );
        assert_abs_diff_eq!(est.doa.alpha(), PI / 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.doa.beta(), PI / 3.0, epsilon = 1e-9);

        let est = noiseless_estimate(120.0, 250.0, &[0.4, 0.7], 64, DephaseConfig::default());
        assert_abs_diff_eq!(est.doa.alpha_deg(), 120.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.doa.beta_deg(), 250.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est.rho.arg(), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn sum_mode_matches_pressure_row() {
        let b = [0.05, 0.1, 0.13];
        let row = noiseless_estimate(45.0, 60.0, &b, 100, DephaseConfig::default());
        let sum = noiseless_estimate(
            45.0,
            60.0,
            &b,
            100,
            DephaseConfig::new(1, DephaseMode::Sum).unwrap(),
        );
        assert_abs_diff_eq!(row.doa.alpha(), sum.doa.alpha(), epsilon = 1e-12);
        assert_abs_diff_eq!(row.doa.beta(), sum.doa.beta(), epsilon = 1e-12);
    }

    #[test]
    fn pipeline_ignores_global_phase() {
        let doa = Doa::from_degrees(80.0, 200.0).unwrap();
        let coeffs = PpsCoeffs::new(vec![0.05, 0.1, 0.13]).unwrap();
        let z = synth_static(doa, &coeffs, 200, 1.0, NoiseSpec::new(0.05, 3).unwrap()).unwrap();
        let cfg = DephaseConfig::default();
        let plain = estimate_doa_pipeline(&z, 2, &cfg, 1).unwrap();
        let rotated =
            estimate_doa_pipeline(&z.scaled(Complex64::from_polar(1.0, 2.1)), 2, &cfg, 1).unwrap();
        assert_abs_diff_eq!(plain.doa.alpha(), rotated.doa.alpha(), epsilon = 1e-9);
        assert_abs_diff_eq!(plain.doa.beta(), rotated.doa.beta(), epsilon = 1e-9);
    }

    #[test]
    fn noisy_eigvec_meets_residual_contract() {
        let doa = Doa::from_degrees(45.0, 60.0).unwrap();
        let coeffs = PpsCoeffs::new(vec![0.05, 0.1, 0.13]).unwrap();
        for seed in 0..20 {
            let z =
                synth_static(doa, &coeffs, 500, 1.0, NoiseSpec::new(0.3, seed).unwrap()).unwrap();
            let z1 = reduce_to_linear(&z, 2, &DephaseConfig::default()).unwrap();
            let r = correlation(&build_pencil(z1.columns(), 1).unwrap());
            let (lambda, v) = dominant_eigvec(&r, POWER_TOL, POWER_MAX_ITER).unwrap();
            assert!(residual(&r, lambda, &v) <= POWER_TOL * lambda);
            assert_abs_diff_eq!(norm(&v), 1.0, epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn extract_is_scale_invariant(
            alpha in 0.1..(PI - 0.1),
            beta in 0.0..TAU,
            mag in -6.0f64..6.0,
            phase in -PI..PI,
        ) {
            let a = steering_vector(Doa::new(alpha, beta).unwrap()).to_complex();
            let s = Complex64::from_polar(10f64.powf(mag), phase);
            let base = extract_doa(&a).unwrap().doa;
            let scaled = extract_doa(&a.map(|x| x * s)).unwrap().doa;
            prop_assert!((base.alpha() - scaled.alpha()).abs() < 1e-12);
            let d = (base.beta() - scaled.beta()).abs();
            prop_assert!(d.min(TAU - d) < 1e-12);
        }

        #[test]
        fn noiseless_pipeline_is_exact(
            q in 1usize..=5,
            alpha_deg in 10.0f64..170.0,
            beta_deg in 0.0f64..360.0,
            bq in 0.01f64..0.5,
            lower in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let mut b: Vec<f64> = lower[..q].to_vec();
            b.push(bq);
            let est = noiseless_estimate(alpha_deg, beta_deg, &b, 64, DephaseConfig::default());
            prop_assert!((est.doa.alpha_deg() - alpha_deg).abs().to_radians() < 1e-6);
            let d = (est.doa.beta_deg() - beta_deg).rem_euclid(360.0);
            prop_assert!(d.min(360.0 - d).to_radians() < 1e-6);
            prop_assert!((est.rho.norm() - 1.0).abs() < 1e-9);
        }
    }
}
