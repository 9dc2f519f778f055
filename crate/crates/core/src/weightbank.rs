//! Micro-ring weight bank model.
//!
//! Each ring maps a heater current to a balanced-photodetector weight through
//! a Lorentzian resonance whose detuning grows quadratically with current:
//! `δ(i) = a + b·i²`, `T(δ) = 1/(1+δ²)`, `I(i) = R·(1 − 2T)`.
//! The bank sums the weighted received channels and adds detector noise.

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PbssError, Result};
use crate::signal::MixingScenario;

/// Lorentzian transmission `1/(1+δ²)`.
#[inline]
pub fn lorentzian_t(delta: f64) -> f64 {
    1.0 / (1.0 + delta * delta)
}

/// Offset of the most linear operating frequency above the ambient resonance,
/// `ω₀₀/(2Q)`, i.e. half the resonance FWHM `ω₀₀/Q`.
pub fn optimal_frequency_offset(q: f64, omega00: f64) -> f64 {
    omega00 / (2.0 * q)
}

/// Physical constants of one ring. Currents are in mA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    a: f64,
    b: f64,
    responsivity: f64,
    i_min: f64,
    i_max: f64,
}

impl Default for RingParams {
    /// `a = 1/2` (linearity optimum), `b = 0.125 mA⁻²` (`i₀ = 2 mA`), `R = 1`, range `[0, 5]` mA.
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 0.125,
            responsivity: 1.0,
            i_min: 0.0,
            i_max: 5.0,
        }
    }
}

impl RingParams {
    pub fn new(a: f64, b: f64, responsivity: f64, i_min: f64, i_max: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(PbssError::param("b", format!("{b} must be positive")));
        }
        if !(responsivity.is_finite() && responsivity > 0.0) {
            return Err(PbssError::param("R", format!("{responsivity} must be positive")));
        }
        if !(i_min.is_finite() && i_min >= 0.0) {
            return Err(PbssError::param("i_min", format!("{i_min} must be non-negative")));
        }
        if !(i_max.is_finite() && i_max > i_min) {
            return Err(PbssError::param("i_max", format!("{i_max} must exceed i_min")));
        }
        if !(a.is_finite() && a < 1.0) {
            return Err(PbssError::NoZeroCrossing { a });
        }
        let ring = Self {
            a,
            b,
            responsivity,
            i_min,
            i_max,
        };
        let i0 = ring.zero_weight_current()?;
        if !(i_min..=i_max).contains(&i0) {
            return Err(PbssError::param(
                "i_max",
                format!("zero-weight current {i0} mA lies outside [{i_min}, {i_max}] mA"),
            ));
        }
        Ok(ring)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn responsivity(&self) -> f64 {
        self.responsivity
    }

    pub fn current_range(&self) -> (f64, f64) {
        (self.i_min, self.i_max)
    }

    fn check_current(&self, ring: usize, i: f64) -> Result<()> {
        if i.is_finite() && i >= self.i_min && i <= self.i_max {
            Ok(())
        } else {
            Err(PbssError::CurrentOutOfRange {
                ring,
                current_ma: i,
                min_ma: self.i_min,
                max_ma: self.i_max,
            })
        }
    }

    pub fn detuning(&self, i: f64) -> Result<f64> {
        self.check_current(0, i)?;
        Ok(self.detuning_unchecked(i))
    }

    #[inline]
    fn detuning_unchecked(&self, i: f64) -> f64 {
        self.a + self.b * i * i
    }

    /// Balanced photocurrent weight `R·(1 − 2T(a + b·i²))`.
    pub fn photocurrent_weight(&self, i: f64) -> Result<f64> {
        self.check_current(0, i)?;
        Ok(self.weight_unchecked(i))
    }

    #[inline]
    pub(crate) fn weight_unchecked(&self, i: f64) -> f64 {
        self.responsivity * (1.0 - 2.0 * lorentzian_t(self.detuning_unchecked(i)))
    }

    /// `√((1−a)/b)`, where the weight crosses zero.
    pub fn zero_weight_current(&self) -> Result<f64> {
        if self.a >= 1.0 {
            return Err(PbssError::NoZeroCrossing { a: self.a });
        }
        Ok(((1.0 - self.a) / self.b).sqrt())
    }

    /// Analytic `I''(i₀) = 2R(2a−1)b`; vanishes at the linearity optimum `a = 1/2`.
    pub fn linearity_defect(&self) -> f64 {
        2.0 * self.responsivity * (2.0 * self.a - 1.0) * self.b
    }

    /// Analytic `dI/di = 8R·b·i·δ·T²`.
    pub fn weight_slope(&self, i: f64) -> f64 {
        let delta = self.detuning_unchecked(i);
        let t = lorentzian_t(delta);
        8.0 * self.responsivity * self.b * i * delta * t * t
    }

    /// Slope at the zero-weight current, `2R·b·i₀`.
    pub fn slope_at_zero(&self) -> Result<f64> {
        Ok(self.weight_slope(self.zero_weight_current()?))
    }
}

pub fn detuning(ring: &RingParams, i: f64) -> Result<f64> {
    ring.detuning(i)
}

pub fn photocurrent_weight(ring: &RingParams, i: f64) -> Result<f64> {
    ring.photocurrent_weight(i)
}

pub fn zero_weight_current(ring: &RingParams) -> Result<f64> {
    ring.zero_weight_current()
}

pub fn linearity_defect(ring: &RingParams) -> f64 {
    ring.linearity_defect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightModel {
    /// Linear reference backend: weight is the current offset from `i₀`.
    Ideal,
    #[default]
    Lorentzian,
}

/// Default detector noise standard deviation, about 30 dB below a unit-variance source.
pub const DEFAULT_NOISE_STD: f64 = 0.03;

/// Deterministic Gaussian noise addressed by `(seed, sample index)`.
///
/// Samples are produced in Box-Muller pairs; pair `p` consumes ChaCha words
/// `4p..4p+4`, so a sample has the same value whether it is generated alone
/// or as part of a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorNoise {
    pub std: f64,
    pub seed: u64,
}

impl DetectorNoise {
    fn pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = ((rng.next_u64() >> 11) + 1) as f64 * SCALE;
        let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }

    fn rng_at_pair(&self, pair: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(u128::from(pair) * 4);
        rng
    }

    pub fn sample(&self, index: u64) -> f64 {
        if self.std == 0.0 {
            return 0.0;
        }
        let (z0, z1) = Self::pair(&mut self.rng_at_pair(index >> 1));
        self.std * if index & 1 == 0 { z0 } else { z1 }
    }

    /// Adds noise samples `first..first+out.len()` to `out`.
    pub fn add_block(&self, first: u64, out: &mut [f64]) {
        if self.std == 0.0 || out.is_empty() {
            return;
        }
        let mut rng = self.rng_at_pair(first >> 1);
        let mut idx = first;
        let mut k = 0;
        while k < out.len() {
            let (z0, z1) = Self::pair(&mut rng);
            if idx & 1 == 0 {
                out[k] += self.std * z0;
                k += 1;
                idx += 1;
                if k == out.len() {
                    break;
                }
            }
            out[k] += self.std * z1;
            k += 1;
            idx += 1;
        }
    }
}

/// A bank of rings summed on a balanced photodetector.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBank {
    rings: Vec<RingParams>,
    model: WeightModel,
    noise: DetectorNoise,
}

impl WeightBank {
    pub fn new(
        rings: Vec<RingParams>,
        model: WeightModel,
        noise_std: f64,
        noise_seed: u64,
    ) -> Result<Self> {
        if rings.is_empty() {
            return Err(PbssError::param("rings", "at least one ring is required"));
        }
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(PbssError::param("noise_std", "must be non-negative"));
        }
        Ok(Self {
            rings,
            model,
            noise: DetectorNoise {
                std: noise_std,
                seed: noise_seed,
            },
        })
    }

    /// `l` default rings with the default Lorentzian model and noise.
    pub fn default_for(channels: usize, noise_seed: u64) -> Self {
        Self {
            rings: vec![RingParams::default(); channels],
            model: WeightModel::Lorentzian,
            noise: DetectorNoise {
                std: DEFAULT_NOISE_STD,
                seed: noise_seed,
            },
        }
    }

    pub fn rings(&self) -> &[RingParams] {
        &self.rings
    }

    pub fn model(&self) -> WeightModel {
        self.model
    }

    pub fn noise(&self) -> DetectorNoise {
        self.noise
    }

    pub fn with_model(mut self, model: WeightModel) -> Self {
        self.model = model;
        self
    }

    pub fn with_noise(mut self, std: f64, seed: u64) -> Self {
        self.noise = DetectorNoise { std, seed };
        self
    }

    pub fn len(&self) -> usize {
        self.rings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rings.is_empty()
    }

    pub fn zero_currents(&self) -> Result<DVector<f64>> {
        let i0 = self
            .rings
            .iter()
            .map(RingParams::zero_weight_current)
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(i0))
    }

    /// Per-ring `(min, max)` current bounds in mA.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.rings.iter().map(RingParams::current_range).collect()
    }

    pub fn check_currents(&self, currents: &DVector<f64>) -> Result<()> {
        if currents.len() != self.rings.len() {
            return Err(PbssError::DimensionMismatch(format!(
                "{} currents for {} rings",
                currents.len(),
                self.rings.len()
            )));
        }
        for (k, (ring, &i)) in self.rings.iter().zip(currents.iter()).enumerate() {
            ring.check_current(k, i)?;
        }
        Ok(())
    }

    pub fn weights(&self, currents: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_currents(currents)?;
        let w = self
            .rings
            .iter()
            .zip(currents.iter())
            .map(|(ring, &i)| match self.model {
                WeightModel::Ideal => ring.zero_weight_current().map(|i0| i - i0),
                WeightModel::Lorentzian => Ok(ring.weight_unchecked(i)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(w))
    }

    /// Diagonal Jacobian of the current-to-weight map at `i₀`.
    pub fn jacobian_at_zero(&self) -> Result<DMatrix<f64>> {
        let diag = self
            .rings
            .iter()
            .map(|ring| match self.model {
                WeightModel::Ideal => Ok(1.0),
                WeightModel::Lorentzian => ring.slope_at_zero(),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_diagonal(&DVector::from_vec(diag)))
    }
}

pub fn jacobian_at_zero(bank: &WeightBank) -> Result<DMatrix<f64>> {
    bank.jacobian_at_zero()
}

/// The detector output `m(t)` for one fixed current setting.
#[derive(Debug, Clone)]
pub struct MixedSignalProbe<'a> {
    scenario: &'a MixingScenario,
    bank: &'a WeightBank,
    currents: DVector<f64>,
    /// Per-source gains `Mᵀw`.
    source_gains: Vec<f64>,
}

impl<'a> MixedSignalProbe<'a> {
    pub fn new(
        scenario: &'a MixingScenario,
        bank: &'a WeightBank,
        currents: DVector<f64>,
    ) -> Result<Self> {
        if bank.len() != scenario.channels() {
            return Err(PbssError::DimensionMismatch(format!(
                "{} rings for {} received channels",
                bank.len(),
                scenario.channels()
            )));
        }
        let w = bank.weights(&currents)?;
        let gains = scenario.mixing().tr_mul(&w);
        Ok(Self {
            scenario,
            bank,
            currents,
            source_gains: gains.iter().copied().collect(),
        })
    }

    pub fn scenario(&self) -> &'a MixingScenario {
        self.scenario
    }

    pub fn bank(&self) -> &'a WeightBank {
        self.bank
    }

    pub fn currents(&self) -> &DVector<f64> {
        &self.currents
    }

    /// Effective gain applied to each source, `Mᵀw`.
    pub fn source_gains(&self) -> &[f64] {
        &self.source_gains
    }

    /// Noise-free `m(t) = w·r(t)`.
    #[inline]
    pub fn eval_clean(&self, t: f64) -> f64 {
        self.scenario
            .sources()
            .iter()
            .zip(&self.source_gains)
            .map(|(s, g)| g * s.eval(t))
            .sum()
    }

    /// `m(t)` plus the detector noise sample with the given index.
    pub fn eval(&self, t: f64, sample_index: u64) -> f64 {
        self.eval_clean(t) + self.bank.noise.sample(sample_index)
    }

    /// Evaluates `m` at `times`, with noise indices starting at `first_index`.
    pub fn eval_block(&self, times: &[f64], first_index: u64) -> Vec<f64> {
        let mut out: Vec<f64> = times.iter().map(|&t| self.eval_clean(t)).collect();
        self.bank.noise.add_block(first_index, &mut out);
        out
    }
}

pub fn eval_mixed(probe: &MixedSignalProbe<'_>, t: f64, sample_index: u64) -> f64 {
    probe.eval(t, sample_index)
}

/// JSON description of one ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub a: f64,
    #[serde(rename = "b_per_mA2")]
    pub b_per_ma2: f64,
    #[serde(rename = "R")]
    pub responsivity: f64,
    #[serde(rename = "i_min_mA")]
    pub i_min_ma: f64,
    #[serde(rename = "i_max_mA")]
    pub i_max_ma: f64,
}

impl Default for RingSpec {
    fn default() -> Self {
        let r = RingParams::default();
        Self {
            a: r.a,
            b_per_ma2: r.b,
            responsivity: r.responsivity,
            i_min_ma: r.i_min,
            i_max_ma: r.i_max,
        }
    }
}

impl RingSpec {
    pub fn build(&self) -> Result<RingParams> {
        RingParams::new(
            self.a,
            self.b_per_ma2,
            self.responsivity,
            self.i_min_ma,
            self.i_max_ma,
        )
    }
}

/// JSON description of a bank: `{rings, weight_model, noise_std, noise_seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankSpec {
    #[serde(default)]
    pub rings: Vec<RingSpec>,
    #[serde(default)]
    pub weight_model: WeightModel,
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    #[serde(default)]
    pub noise_seed: u64,
}

fn default_noise_std() -> f64 {
    DEFAULT_NOISE_STD
}

impl BankSpec {
    pub fn default_for(channels: usize) -> Self {
        Self {
            rings: vec![RingSpec::default(); channels],
            weight_model: WeightModel::Lorentzian,
            noise_std: DEFAULT_NOISE_STD,
            noise_seed: 0,
        }
    }

    pub fn build(&self) -> Result<WeightBank> {
        let rings = self
            .rings
            .iter()
            .map(RingSpec::build)
            .collect::<Result<Vec<_>>>()?;
        WeightBank::new(rings, self.weight_model, self.noise_std, self.noise_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{mixing_m1, MixingScenario};
    use proptest::prelude::*;

    fn ring(a: f64, b: f64, r: f64) -> RingParams {
        RingParams::new(a, b, r, 0.0, 1e3).unwrap()
    }

    fn second_difference(ring: &RingParams, i: f64, h: f64) -> f64 {
        (ring.weight_unchecked(i + h) - 2.0 * ring.weight_unchecked(i) + ring.weight_unchecked(i - h))
            / (h * h)
    }

    #[test]
    fn lorentzian_values() {
        assert_eq!(lorentzian_t(0.0), 1.0);
        assert_eq!(lorentzian_t(1.0), 0.5);
        assert_eq!(lorentzian_t(-1.0), 0.5);
    }

    #[test]
    fn detuning_values() {
        let r = RingParams::default();
        assert_eq!(detuning(&r, 0.0).unwrap(), 0.5);
        assert_eq!(detuning(&r, 2.0).unwrap(), 1.0);
        assert_eq!(lorentzian_t(detuning(&r, r.zero_weight_current().unwrap()).unwrap()), 0.5);
        assert!(matches!(
            detuning(&r, 5.5),
            Err(PbssError::CurrentOutOfRange { .. })
        ));
    }

    #[test]
    fn weight_values() {
        let r = RingParams::default();
        assert_eq!(photocurrent_weight(&r, 2.0).unwrap(), 0.0);
        assert!((photocurrent_weight(&r, 0.0).unwrap() + 0.6).abs() < 1e-15);
        let wide = ring(0.5, 0.125, 1.0);
        assert!((wide.weight_unchecked(900.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_weight_current_values() {
        assert_eq!(RingParams::default().zero_weight_current().unwrap(), 2.0);
        assert_eq!(ring(0.0, 1.0, 1.0).zero_weight_current().unwrap(), 1.0);
        assert!((ring(0.99, 0.0025, 1.0).zero_weight_current().unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            RingParams::new(1.0, 1.0, 1.0, 0.0, 5.0),
            Err(PbssError::NoZeroCrossing { .. })
        ));
    }

    #[test]
    fn linearity_defect_values() {
        assert_eq!(RingParams::default().linearity_defect(), 0.0);
        assert_eq!(ring(0.5, 3.0, 7.0).linearity_defect(), 0.0);
        // a = 1 has no zero crossing, so the formula is evaluated directly.
        let raw = RingParams {
            a: 1.0,
            b: 1.0,
            responsivity: 1.0,
            i_min: 0.0,
            i_max: 5.0,
        };
        assert_eq!(raw.linearity_defect(), 2.0);
        let r = RingParams::default();
        let fd = second_difference(&r, 2.0, 1e-4);
        assert!((fd - r.linearity_defect()).abs() < 1e-6, "fd {fd}");
    }

    #[test]
    fn linearity_sign_follows_detuning_offset() {
        for (a, sign) in [(0.3, -1.0), (0.7, 1.0)] {
            let r = ring(a, 0.125, 1.0);
            let i0 = r.zero_weight_current().unwrap();
            let fd = second_difference(&r, i0, 1e-4);
            assert!(fd.abs() > 1e-3);
            assert_eq!(fd.signum(), sign);
        }
    }

    #[test]
    fn optimal_offset_is_half_fwhm() {
        let q = 1e4;
        let omega00 = std::f64::consts::TAU * 193.4e12;
        let offset = optimal_frequency_offset(q, omega00);
        assert!((offset - omega00 * 5e-5).abs() / offset < 1e-14);
        assert!((offset / (omega00 / q) - 0.5).abs() < 1e-15);
        let a = q / omega00 * offset;
        assert!((a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let bank = WeightBank::default_for(2, 0);
        let jac = bank.jacobian_at_zero().unwrap();
        let r = RingParams::default();
        let h = 1e-5;
        let fd = (r.weight_unchecked(2.0 + h) - r.weight_unchecked(2.0 - h)) / (2.0 * h);
        assert!((jac[(0, 0)] - fd).abs() < 1e-6);
        assert_eq!(jac[(0, 0)], jac[(1, 1)]);
        assert_eq!(jac[(0, 1)], 0.0);
        let ideal = bank.with_model(WeightModel::Ideal).jacobian_at_zero().unwrap();
        assert_eq!(ideal, DMatrix::identity(2, 2));
    }

    #[test]
    fn noise_is_index_addressed() {
        let noise = DetectorNoise { std: 0.5, seed: 9 };
        for first in [0u64, 1, 2, 7, 1 << 40] {
            let mut block = vec![0.0; 11];
            noise.add_block(first, &mut block);
            for (k, v) in block.iter().enumerate() {
                assert_eq!(*v, noise.sample(first + k as u64));
            }
        }
        let mut big = vec![0.0; 1 << 16];
        noise.add_block(0, &mut big);
        let mean = big.iter().sum::<f64>() / big.len() as f64;
        let var = big.iter().map(|v| v * v).sum::<f64>() / big.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var.sqrt() - 0.5).abs() < 0.01);
    }

    #[test]
    fn zero_currents_give_silent_output() {
        let sc = MixingScenario::two_source_default(mixing_m1()).unwrap();
        let bank = WeightBank::default_for(2, 0).with_noise(0.0, 0);
        let probe = MixedSignalProbe::new(&sc, &bank, bank.zero_currents().unwrap()).unwrap();
        for k in 0..100 {
            assert_eq!(probe.eval(k as f64 * 1.1e-9, k), 0.0);
        }
    }

    #[test]
    fn ideal_unit_selector_returns_source() {
        let sc = MixingScenario::two_source_default(DMatrix::identity(2, 2)).unwrap();
        let bank = WeightBank::default_for(2, 0)
            .with_model(WeightModel::Ideal)
            .with_noise(0.0, 0);
        let probe = MixedSignalProbe::new(&sc, &bank, DVector::from_vec(vec![3.0, 2.0])).unwrap();
        for k in 0..100 {
            let t = k as f64 * 1.3e-9;
            assert!((eval_mixed(&probe, t, k) - sc.sources()[0].eval(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn lorentzian_linearizes_near_zero() {
        let sc = MixingScenario::two_source_default(mixing_m1()).unwrap();
        let bank = WeightBank::default_for(2, 0).with_noise(0.0, 0);
        let jac = bank.jacobian_at_zero().unwrap();
        let i0 = bank.zero_currents().unwrap();
        let effective = jac.transpose() * sc.mixing();
        for offset in [[0.2, 0.0], [0.0, -0.2], [0.14, 0.14], [-0.2, 0.05]] {
            let dw = DVector::from_row_slice(&offset);
            let probe = MixedSignalProbe::new(&sc, &bank, &i0 + &dw).unwrap();
            let (mut err, mut pow) = (0.0, 0.0);
            for k in 0..4000 {
                let t = k as f64 * 0.137e-9;
                let m = probe.eval_clean(t);
                let lin = (dw.transpose() * &effective * sc.eval_sources(t))[0];
                err += (m - lin).powi(2);
                pow += m * m;
            }
            let rel = (err / pow).sqrt();
            assert!(rel < 0.02, "offset {offset:?}: relative rms {rel}");
        }
    }

    #[test]
    fn probe_rejects_out_of_range_currents() {
        let sc = MixingScenario::two_source_default(mixing_m1()).unwrap();
        let bank = WeightBank::default_for(2, 0);
        let err = MixedSignalProbe::new(&sc, &bank, DVector::from_vec(vec![2.0, 5.1])).unwrap_err();
        assert!(matches!(err, PbssError::CurrentOutOfRange { ring: 1, .. }));
        assert!(MixedSignalProbe::new(&sc, &bank, DVector::from_vec(vec![2.0])).is_err());
    }

    #[test]
    fn bank_spec_json_field_names() {
        let spec = BankSpec::default_for(2);
        let text = serde_json::to_string(&spec).unwrap();
        for key in ["b_per_mA2", "\"R\"", "i_min_mA", "i_max_mA", "\"lorentzian\""] {
            assert!(text.contains(key), "{key} missing from {text}");
        }
        let bank = serde_json::from_str::<BankSpec>(&text).unwrap().build().unwrap();
        assert_eq!(bank, WeightBank::default_for(2, 0));
    }

    proptest! {
        #[test]
        fn zero_point_is_exact(a in -3.0f64..0.999, b in 0.01f64..5.0, r in 0.1f64..10.0) {
            let ring = ring(a, b, r);
            let i0 = ring.zero_weight_current().unwrap();
            prop_assert!(ring.photocurrent_weight(i0).unwrap().abs() < 1e-12);
        }

        #[test]
        fn weight_bounded_by_responsivity(i in 0.0f64..5.0, a in -2.0f64..0.99, r in 0.1f64..4.0) {
            let ring = RingParams::new(a, 0.125, r, 0.0, 1e3).unwrap();
            prop_assert!(ring.photocurrent_weight(i).unwrap().abs() <= r);
        }
    }
}
