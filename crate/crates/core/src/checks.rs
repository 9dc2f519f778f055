//! Analytic oracle checks of the simulator: ring transfer analytics, the
//! origin theorem, kurtosis constants and the IID variance-of-variance law.
//!
//! Each check draws its random instances from a seed and reports the worst
//! case it saw, so the same code backs the `validate` command and the tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{variance_gradient_oracle, variance_hessian_oracle};
use crate::error::Result;
use crate::signal::{MixingScenario, SourceSignal};
use crate::stats::{acquire, estimate, varvar_iid_predict, EstimatorQuality, SamplingPlan};
use crate::weightbank::{DetectorNoise, MixedSignalProbe, RingParams, WeightBank, WeightModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst-case measurement against its tolerance.
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Richardson-extrapolated central second difference.
fn second_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Zero point, curvature and the `a = ½` linearity condition over random rings.
pub fn ring_analytics(rings: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_zero: f64 = 0.0;
    let mut worst_curv: f64 = 0.0;
    for _ in 0..rings {
        let a: f64 = rng.random_range(0.05..0.95);
        let b: f64 = rng.random_range(0.05..1.0);
        let r = rng.random_range(0.5..2.0);
        let i0 = ((1.0 - a) / b).sqrt();
        let ring = RingParams::new(a, b, r, 0.0, i0 + rng.random_range(0.5..3.0))?;
        let i0 = ring.zero_weight_current()?;
        worst_zero = worst_zero.max(ring.photocurrent_weight(i0)?.abs());
        let numeric = second_derivative(|i| ring.photocurrent_weight(i).unwrap_or(f64::NAN), i0, 1e-3);
        worst_curv = worst_curv.max((numeric - ring.linearity_defect()).abs());
    }
    let half = RingParams::default();
    let i0 = half.zero_weight_current()?;
    let defect = second_derivative(|i| half.photocurrent_weight(i).unwrap_or(f64::NAN), i0, 1e-3).abs();
    Ok(CheckOutcome::new(
        "ring analytics",
        worst_zero < 1e-12 && worst_curv < 1e-6 && defect < 1e-6,
        format!(
            "{rings} rings: max |w(i0)| {worst_zero:.2e} (tol 1e-12), max |I''-2R(2a-1)b| {worst_curv:.2e} (tol 1e-6); a=0.5 numeric I'' {defect:.2e} (tol 1e-6)"
        ),
    ))
}

/// Two equal-power tones that are exactly orthogonal over the plan below.
fn orthogonal_tones() -> Result<Vec<SourceSignal>> {
    Ok(vec![
        SourceSignal::from_bits(vec![1], 1.0, 3e6, 0.0)?,
        SourceSignal::from_bits(vec![1], 1.0, 5e6, 0.0)?,
    ])
}

/// 16 µs at 64 MSPS: whole cycles of both tones.
fn whole_period_plan() -> Result<SamplingPlan> {
    SamplingPlan::periodic(64e6, 1024)
}

/// Noise-free measured variance against `2MMᵀw` and `det 2MMᵀ > 0`.
pub fn origin_theorem(matrices: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bank = WeightBank::default_for(2, 0)
        .with_model(WeightModel::Ideal)
        .with_noise(0.0, 0);
    let i0 = bank.zero_currents()?;
    let plan = whole_period_plan()?;
    let h = 1e-3;
    let mut worst_rel: f64 = 0.0;
    let mut min_det = f64::INFINITY;
    let mut worst_hess: f64 = 0.0;
    for _ in 0..matrices {
        let m = loop {
            let m: DMatrix<f64> = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            if m.determinant().abs() > 0.1 {
                break m;
            }
        };
        let scenario = MixingScenario::new(orthogonal_tones()?, m.clone())?;
        let s2 = |w: &DVector<f64>| -> Result<f64> {
            let probe = MixedSignalProbe::new(&scenario, &bank, &i0 + w)?;
            Ok(estimate(&acquire(&probe, &plan)?)?.s2)
        };
        let w = loop {
            let w = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
            if w.norm() > 0.2 {
                break w;
            }
        };
        let e = |k: usize| DVector::from_fn(2, |r, _| if r == k { h } else { 0.0 });
        let mut grad = DVector::zeros(2);
        let mut hess = DMatrix::zeros(2, 2);
        for p in 0..2 {
            grad[p] = (s2(&(&w + e(p)))? - s2(&(&w - e(p)))?) / (2.0 * h);
            for q in 0..2 {
                hess[(p, q)] = (s2(&(&w + e(p) + e(q)))? - s2(&(&w + e(p) - e(q)))?
                    - s2(&(&w - e(p) + e(q)))?
                    + s2(&(&w - e(p) - e(q)))?)
                    / (4.0 * h * h);
            }
        }
        let oracle = variance_gradient_oracle(&m, &w)?;
        worst_rel = worst_rel.max((&grad - &oracle).norm() / oracle.norm());
        min_det = min_det.min(hess.determinant());
        let hess_oracle = variance_hessian_oracle(&m)?;
        worst_hess = worst_hess.max((&hess - &hess_oracle).norm() / hess_oracle.norm());
    }
    Ok(CheckOutcome::new(
        "origin theorem",
        worst_rel < 0.01 && min_det > 0.0,
        format!(
            "{matrices} matrices: max gradient error {:.3}% (tol 1%), min Hessian det {min_det:.3e} (> 0), max Hessian error {:.3}%",
            worst_rel * 100.0,
            worst_hess * 100.0
        ),
    ))
}

/// Whole-period sinusoid (`K = −1.5`) and IID Gaussian (`K = 0`) through the estimator.
pub fn kurtosis_constants(seed: u64) -> Result<CheckOutcome> {
    let tone = MixingScenario::new(
        vec![SourceSignal::from_bits(vec![1], 1.0, 1e6, 0.0)?],
        DMatrix::identity(1, 1),
    )?;
    let bank = WeightBank::default_for(1, 0).with_noise(0.0, 0);
    let probe = MixedSignalProbe::new(&tone, &bank, DVector::from_element(1, 3.0))?;
    let k_sine = estimate(&acquire(&probe, &SamplingPlan::periodic(64e6, 4096)?)?)?.k;

    let mut gauss = vec![0.0; 1 << 16];
    DetectorNoise { std: 1.0, seed }.add_block(0, &mut gauss);
    let k_gauss = estimate(&gauss)?.k;
    Ok(CheckOutcome::new(
        "kurtosis constants",
        (k_sine + 1.5).abs() < 1e-3 && k_gauss.abs() < 0.1,
        format!("sinusoid K {k_sine:.6} (-1.5 +/- 1e-3), Gaussian 2^16 K {k_gauss:.4} (0 +/- 0.1)"),
    ))
}

/// Monte-Carlo variance of `S²` for IID unit Gaussians against the prediction.
pub fn varvar_iid(n_s: usize, trials: usize, seed: u64) -> Result<CheckOutcome> {
    let noise = DetectorNoise { std: 1.0, seed };
    let mut block = vec![0.0; n_s];
    let s2: Vec<f64> = (0..trials)
        .map(|t| {
            block.fill(0.0);
            noise.add_block((t * n_s) as u64, &mut block);
            block.iter().map(|m| m * m).sum::<f64>() / n_s as f64
        })
        .collect();
    let measured = EstimatorQuality::from_values(&s2)?.std.powi(2);
    let predicted = varvar_iid_predict(1.0, 0.0, n_s);
    let rel = (measured - predicted).abs() / predicted;
    Ok(CheckOutcome::new(
        "variance of variance",
        rel < 0.05,
        format!(
            "n_s {n_s}, {trials} trials: measured {measured:.4e}, predicted {predicted:.4e}, error {:.2}% (tol 5%)",
            rel * 100.0
        ),
    ))
}

/// All checks at full size.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        ring_analytics(1000, seed)?,
        origin_theorem(20, seed)?,
        kurtosis_constants(seed)?,
        varvar_iid(1024, 100_000, seed)?,
    ])
}
