//! Sub-Nyquist acquisition and moment statistics.
//!
//! Variance and excess kurtosis are estimated from raw second and fourth
//! moments, assuming a zero-mean signal:
//! `S² = ⟨m²⟩`, `K = ⟨m⁴⟩/S⁴ − 3`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PbssError, Result};
use crate::weightbank::MixedSignalProbe;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SamplingMode {
    Periodic,
    /// Uniform random instants within `window` seconds of the start.
    Random { window: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub f_s: f64,
    pub n_s: usize,
    pub t_start: f64,
    pub mode: SamplingMode,
}

impl SamplingPlan {
    pub fn periodic(f_s: f64, n_s: usize) -> Result<Self> {
        Self::new(f_s, n_s, 0.0, SamplingMode::Periodic)
    }

    pub fn new(f_s: f64, n_s: usize, t_start: f64, mode: SamplingMode) -> Result<Self> {
        let plan = Self {
            f_s,
            n_s,
            t_start,
            mode,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_s.is_finite() && self.f_s > 0.0) {
            return Err(PbssError::InvalidPlan(format!(
                "sampling rate {} must be positive",
                self.f_s
            )));
        }
        if !self.n_s.is_power_of_two() {
            return Err(PbssError::InvalidPlan(format!(
                "sample count {} is not a power of two",
                self.n_s
            )));
        }
        if !self.t_start.is_finite() {
            return Err(PbssError::InvalidPlan("start time must be finite".into()));
        }
        if let SamplingMode::Random { window, .. } = self.mode {
            if !(window.is_finite() && window > 0.0) {
                return Err(PbssError::InvalidPlan(format!(
                    "random window {window} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn with_start(self, t_start: f64) -> Self {
        Self { t_start, ..self }
    }

    /// Time covered by one acquisition.
    pub fn span(&self) -> f64 {
        match self.mode {
            SamplingMode::Periodic => self.n_s as f64 / self.f_s,
            SamplingMode::Random { window, .. } => window,
        }
    }

    /// Sample times of this acquisition.
    pub fn sample_times(&self) -> Vec<f64> {
        match self.mode {
            SamplingMode::Periodic => (0..self.n_s)
                .map(|j| self.t_start + j as f64 / self.f_s)
                .collect(),
            SamplingMode::Random { window, seed } => {
                let mix = self.t_start.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ mix);
                let mut times: Vec<f64> = (0..self.n_s)
                    .map(|_| self.t_start + window * rng.random::<f64>())
                    .collect();
                times.sort_by(f64::total_cmp);
                times
            }
        }
    }

    /// Index of the first sample on the global `f_s` grid, used to address noise.
    pub fn first_sample_index(&self) -> u64 {
        (self.t_start * self.f_s).round().max(0.0) as u64
    }
}

/// `n_s / f_s`: time needed to collect one acquisition.
pub fn acquisition_latency(plan: &SamplingPlan) -> f64 {
    plan.n_s as f64 / plan.f_s
}

pub fn acquire(probe: &MixedSignalProbe<'_>, plan: &SamplingPlan) -> Result<Vec<f64>> {
    plan.validate()?;
    Ok(probe.eval_block(&plan.sample_times(), plan.first_sample_index()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatEstimate {
    pub s2: f64,
    /// Excess kurtosis.
    pub k: f64,
    pub n_s: usize,
}

/// Single-pass accumulator of the raw second and fourth moments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentAccumulator {
    count: usize,
    sum: f64,
    sum2: f64,
    sum4: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, m: f64) {
        let m2 = m * m;
        self.count += 1;
        self.sum += m;
        self.sum2 += m2;
        self.sum4 += m2 * m2;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `S²`, defined even when it is zero.
    pub fn variance(&self) -> f64 {
        self.sum2 / self.count as f64
    }

    /// Diagnostic only; the estimators never subtract it.
    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn finish(&self) -> Result<StatEstimate> {
        if self.count < 4 {
            return Err(PbssError::DegenerateSignal(format!(
                "{} samples are too few for a kurtosis estimate",
                self.count
            )));
        }
        let n = self.count as f64;
        let s2 = self.sum2 / n;
        if s2 <= 0.0 || !s2.is_finite() {
            return Err(PbssError::DegenerateSignal(
                "zero variance leaves kurtosis undefined".into(),
            ));
        }
        // Cauchy-Schwarz gives ⟨m⁴⟩ ≥ ⟨m²⟩²; clamp away rounding below the floor.
        let k = (self.sum4 / n / (s2 * s2) - 3.0).max(-2.0);
        Ok(StatEstimate {
            s2,
            k,
            n_s: self.count,
        })
    }
}

impl Extend<f64> for MomentAccumulator {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for m in iter {
            self.push(m);
        }
    }
}

pub fn estimate(samples: &[f64]) -> Result<StatEstimate> {
    let mut acc = MomentAccumulator::new();
    acc.extend(samples.iter().copied());
    acc.finish()
}

/// Sample mean, for checking the zero-mean assumption.
pub fn sample_mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorQuality {
    pub mean: f64,
    pub std: f64,
    /// `20·log₁₀(|mean|/std)`; infinite when the estimator never varies.
    pub snr_db: f64,
    pub repeats: usize,
}

impl EstimatorQuality {
    /// Mean and Bessel-corrected standard deviation of repeated estimates.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(PbssError::param("repeats", "at least 2 values are needed"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Spread at rounding level means every repeat saw the same samples.
        let std = if var.sqrt() <= 1e-12 * mean.abs() { 0.0 } else { var.sqrt() };
        Ok(Self {
            mean,
            std,
            snr_db: snr_db(mean, std),
            repeats: values.len(),
        })
    }

    /// True when every repeat produced the same value.
    pub fn is_degenerate(&self) -> bool {
        self.std == 0.0
    }

    /// Amplitude SNR `|mean|/std`.
    pub fn snr_ratio(&self) -> f64 {
        self.mean.abs() / self.std
    }
}

pub fn snr_db(mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (mean.abs() / std).log10()
    }
}

/// Repeats acquisition on back-to-back blocks and summarizes `S²` and `K`.
pub fn estimator_quality(
    probe: &MixedSignalProbe<'_>,
    plan: &SamplingPlan,
    repeats: usize,
) -> Result<(EstimatorQuality, EstimatorQuality)> {
    if repeats < 2 {
        return Err(PbssError::param("repeats", "at least 2 repeats are needed"));
    }
    let mut s2 = Vec::with_capacity(repeats);
    let mut k = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let block = plan.with_start(plan.t_start + r as f64 * plan.span());
        let est = estimate(&acquire(probe, &block)?)?;
        s2.push(est.s2);
        k.push(est.k);
    }
    Ok((
        EstimatorQuality::from_values(&s2)?,
        EstimatorQuality::from_values(&k)?,
    ))
}

/// Predicted variance of `S²` for IID samples.
///
/// The kurtosis in this relation is the raw fourth standardized moment, so
/// the excess kurtosis `k` is shifted by 3 before use. A Monte-Carlo check
/// confirms this convention; with excess kurtosis plugged in directly the
/// prediction goes negative for Gaussian data.
pub fn varvar_iid_predict(s2: f64, k: f64, n_s: usize) -> f64 {
    let n = n_s as f64;
    let kappa = k + 3.0;
    s2 * s2 / n * (kappa - 1.0 + 2.0 / (n - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{MixingScenario, SourceSignal};
    use crate::weightbank::{WeightBank, WeightModel};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn carrier_scenario(freq: f64) -> MixingScenario {
        let s = SourceSignal::from_bits(vec![1], 1.0, freq, 0.0).unwrap();
        MixingScenario::new(vec![s], DMatrix::identity(1, 1)).unwrap()
    }

    fn ideal_bank(channels: usize) -> WeightBank {
        WeightBank::default_for(channels, 0)
            .with_model(WeightModel::Ideal)
            .with_noise(0.0, 0)
    }

    #[test]
    fn quadrature_sampling_cycles() {
        let sc = carrier_scenario(1e6);
        let bank = ideal_bank(1);
        let probe = MixedSignalProbe::new(&sc, &bank, DVector::from_vec(vec![3.0])).unwrap();
        let plan = SamplingPlan::periodic(4e6, 16).unwrap();
        let a = std::f64::consts::SQRT_2;
        for (j, m) in acquire(&probe, &plan).unwrap().iter().enumerate() {
            let want = [a, 0.0, -a, 0.0][j % 4];
            assert!((m - want).abs() < 1e-9, "sample {j}: {m}");
        }
    }

    #[test]
    fn sampling_at_signal_period_aliases_to_dc() {
        let sc = carrier_scenario(1e6);
        let bank = ideal_bank(1);
        let probe = MixedSignalProbe::new(&sc, &bank, DVector::from_vec(vec![3.0])).unwrap();
        let plan = SamplingPlan::new(1e6, 64, 0.1e-6, SamplingMode::Periodic).unwrap();
        let samples = acquire(&probe, &plan).unwrap();
        for m in &samples {
            assert!((m - samples[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn latency_values() {
        let plan = SamplingPlan::periodic(7.68e6, 1 << 11).unwrap();
        assert!((acquisition_latency(&plan) - 266.666_666e-6).abs() < 1e-9);
        let fast = SamplingPlan::periodic(122.9e6, 1 << 14).unwrap();
        assert!((acquisition_latency(&fast) - 133e-6).abs() / 133e-6 < 0.01);
        let double = SamplingPlan::periodic(122.9e6, 1 << 15).unwrap();
        assert_eq!(acquisition_latency(&double), 2.0 * acquisition_latency(&fast));
    }

    #[test]
    fn plan_validation() {
        assert!(SamplingPlan::periodic(1e6, 1000).is_err());
        assert!(SamplingPlan::periodic(0.0, 1024).is_err());
        assert!(SamplingPlan::new(1e6, 64, 0.0, SamplingMode::Random { window: 0.0, seed: 1 }).is_err());
    }

    #[test]
    fn random_mode_times_sorted_within_window() {
        let plan = SamplingPlan::new(
            1e6,
            256,
            2e-3,
            SamplingMode::Random {
                window: 1e-3,
                seed: 4,
            },
        )
        .unwrap();
        let times = plan.sample_times();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert!(times.iter().all(|&t| (2e-3..3e-3).contains(&t)));
        assert_eq!(times, plan.sample_times());
        assert_ne!(times, plan.with_start(3e-3).sample_times());
    }

    #[test]
    fn sinusoid_moments() {
        // Unit-variance sinusoid over whole periods: 64 samples per cycle.
        let samples: Vec<f64> = (0..4096)
            .map(|j| std::f64::consts::SQRT_2 * (std::f64::consts::TAU * j as f64 / 64.0).cos())
            .collect();
        let est = estimate(&samples).unwrap();
        assert!((est.s2 - 1.0).abs() < 1e-12);
        assert!((est.k + 1.5).abs() < 1e-3);
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..1 << 16).map(|_| rng.sample(StandardNormal)).collect();
        let est = estimate(&samples).unwrap();
        assert!((est.s2 - 1.0).abs() < 0.02);
        assert!(est.k.abs() < 0.1, "K = {}", est.k);
    }

    #[test]
    fn constant_samples_hit_kurtosis_floor() {
        let est = estimate(&[3.0; 64]).unwrap();
        assert_eq!(est.s2, 9.0);
        assert_eq!(est.k, -2.0);
        assert!(matches!(estimate(&[0.0; 64]), Err(PbssError::DegenerateSignal(_))));
        assert!(estimate(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn dense_sampling_is_unbiased() {
        // m = 0.3·s with s a unit-variance BPSK source: variance 0.09.
        let s = crate::signal::make_bpsk_source(4, 1137, 200e6, 1e9, 0.3).unwrap();
        let sc = MixingScenario::new(vec![s], DMatrix::identity(1, 1)).unwrap();
        let bank = ideal_bank(1);
        let probe = MixedSignalProbe::new(&sc, &bank, DVector::from_vec(vec![2.3])).unwrap();
        // 16 samples per carrier cycle over 8192 whole cycles.
        let plan = SamplingPlan::periodic(16e9, 1 << 17).unwrap();
        let est = estimate(&acquire(&probe, &plan).unwrap()).unwrap();
        assert!((est.s2 - 0.09).abs() < 1e-6, "s2 {}", est.s2);
    }

    #[test]
    fn degenerate_quality_is_flagged() {
        let sc = carrier_scenario(1e6);
        let bank = ideal_bank(1);
        let probe = MixedSignalProbe::new(&sc, &bank, DVector::from_vec(vec![3.0])).unwrap();
        let plan = SamplingPlan::new(1e6, 64, 0.1e-6, SamplingMode::Periodic).unwrap();
        let (s2, k) = estimator_quality(&probe, &plan, 4).unwrap();
        assert!(s2.is_degenerate() && k.is_degenerate());
        assert_eq!(s2.snr_db, f64::INFINITY);
        assert!(estimator_quality(&probe, &plan, 1).is_err());
    }

    #[test]
    fn iid_prediction_properties() {
        assert!(varvar_iid_predict(1.0, 0.0, 1 << 30) < 1e-8);
        assert_eq!(varvar_iid_predict(2.0, -1.0, 64), varvar_iid_predict(2.0, -1.0, 64));
        let small = varvar_iid_predict(1.0, 0.0, 1024);
        assert!((small - (2.0 + 2.0 / 1023.0) / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn iid_prediction_matches_monte_carlo_gaussian() {
        // Oracle: direct Monte-Carlo variance of S² over independent draws.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1024;
        let trials = 20_000;
        let s2: Vec<f64> = (0..trials)
            .map(|_| {
                (0..n)
                    .map(|_| rng.sample::<f64, _>(StandardNormal).powi(2))
                    .sum::<f64>()
                    / n as f64
            })
            .collect();
        let q = EstimatorQuality::from_values(&s2).unwrap();
        let predicted = varvar_iid_predict(1.0, 0.0, n);
        let rel = (q.std * q.std - predicted).abs() / predicted;
        assert!(rel < 0.05, "relative error {rel}");
        // The excess-kurtosis reading of the formula is not even positive.
        assert!(varvar_iid_predict(1.0, -3.0, n) < 0.0);
    }

    proptest! {
        #[test]
        fn kurtosis_never_below_floor(samples in prop::collection::vec(-1e3f64..1e3, 4..200)) {
            if let Ok(est) = estimate(&samples) {
                prop_assert!(est.k >= -2.0);
                prop_assert!(est.s2 >= 0.0);
            }
        }

        #[test]
        fn single_pass_matches_two_pass(samples in prop::collection::vec(-10f64..10.0, 4..300)) {
            prop_assume!(samples.iter().any(|&m| m != 0.0));
            let est = estimate(&samples).unwrap();
            let n = samples.len() as f64;
            let mut sum2 = 0.0;
            for m in &samples {
                sum2 += m * m;
            }
            let mut sum4 = 0.0;
            for m in &samples {
                let m2 = m * m;
                sum4 += m2 * m2;
            }
            let s2 = sum2 / n;
            prop_assert_eq!(est.s2.to_bits(), s2.to_bits());
            let k = (sum4 / n / (s2 * s2) - 3.0).max(-2.0);
            prop_assert_eq!(est.k.to_bits(), k.to_bits());
        }
    }
}
