//! BPSK source synthesis and linear mixing.
//!
//! Every signal is a closed-form function of time, so samplers can probe it
//! at arbitrary instants without a precomputed waveform buffer.

use std::f64::consts::{SQRT_2, TAU};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PbssError, Result};

/// Symbol count of the experimental bit sequences.
pub const DEFAULT_BITS: usize = 1137;
pub const DEFAULT_BAUD_HZ: f64 = 200e6;
pub const DEFAULT_CARRIER_HZ: f64 = 1e9;
/// Opposite-sign carrier offset applied to the two default sources.
pub const DEFAULT_CARRIER_OFFSET_HZ: f64 = 176e3;

/// A repeating random BPSK sequence on a cosine carrier with NRZ pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSignal {
    bits: Vec<i8>,
    baud_rate: f64,
    carrier_freq: f64,
    carrier_phase: f64,
    amplitude: f64,
}

impl SourceSignal {
    /// Builds a source from an explicit symbol sequence at unit variance.
    pub fn from_bits(bits: Vec<i8>, baud: f64, carrier: f64, phase: f64) -> Result<Self> {
        if bits.is_empty() {
            return Err(PbssError::param("n_bits", "must be at least 1"));
        }
        if let Some(b) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(PbssError::param("bits", format!("symbol {b} is not ±1")));
        }
        if !(baud.is_finite() && baud > 0.0) {
            return Err(PbssError::param("baud", format!("{baud} must be positive")));
        }
        if !(carrier.is_finite() && carrier > 0.0) {
            return Err(PbssError::param("carrier", format!("{carrier} must be positive")));
        }
        if !phase.is_finite() {
            return Err(PbssError::param("phase", "must be finite"));
        }
        Ok(Self {
            bits,
            baud_rate: baud,
            carrier_freq: carrier,
            carrier_phase: phase,
            amplitude: SQRT_2,
        })
    }

    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    pub fn baud_rate(&self) -> f64 {
        self.baud_rate
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn carrier_phase(&self) -> f64 {
        self.carrier_phase
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Returns a copy with the amplitude scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            amplitude: self.amplitude * factor,
            ..self.clone()
        }
    }

    /// Repetition period of the bit sequence in seconds.
    pub fn period(&self) -> f64 {
        self.bits.len() as f64 / self.baud_rate
    }

    /// Symbol active at time `t`; the sequence repeats indefinitely in both directions.
    #[inline]
    pub fn bit_at(&self, t: f64) -> i8 {
        let n = self.bits.len() as i64;
        let idx = ((t * self.baud_rate).floor() as i64).rem_euclid(n);
        self.bits[idx as usize]
    }

    /// Carrier phase in radians at time `t`, reduced before scaling to keep
    /// precision at large `t`.
    #[inline]
    pub fn carrier_angle(&self, t: f64) -> f64 {
        let cycles = self.carrier_freq * t;
        TAU * (cycles - cycles.floor()) + self.carrier_phase
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * f64::from(self.bit_at(t)) * self.carrier_angle(t).cos()
    }
}

/// Draws a reproducible `n_bits` BPSK source from `seed`.
pub fn make_bpsk_source(
    seed: u64,
    n_bits: usize,
    baud: f64,
    carrier: f64,
    phase: f64,
) -> Result<SourceSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = (0..n_bits)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    SourceSignal::from_bits(bits, baud, carrier, phase)
}

pub fn eval_source(source: &SourceSignal, t: f64) -> f64 {
    source.eval(t)
}

/// Sources plus an `l × n` mixing matrix; `r(t) = M s(t)`.
#[derive(Debug, Clone)]
pub struct MixingScenario {
    sources: Vec<SourceSignal>,
    mixing: DMatrix<f64>,
}

impl MixingScenario {
    pub fn new(sources: Vec<SourceSignal>, mixing: DMatrix<f64>) -> Result<Self> {
        if sources.is_empty() {
            return Err(PbssError::param("sources", "at least one source is required"));
        }
        if mixing.ncols() != sources.len() {
            return Err(PbssError::DimensionMismatch(format!(
                "mixing matrix has {} columns but there are {} sources",
                mixing.ncols(),
                sources.len()
            )));
        }
        if mixing.nrows() < mixing.ncols() {
            return Err(PbssError::DimensionMismatch(format!(
                "fewer received channels ({}) than sources ({})",
                mixing.nrows(),
                mixing.ncols()
            )));
        }
        if mixing.iter().any(|v| !v.is_finite()) {
            return Err(PbssError::param("mixing", "entries must be finite"));
        }
        if mixing.is_square() && mixing.determinant().abs() <= f64::EPSILON {
            return Err(PbssError::SingularMixing);
        }
        Ok(Self { sources, mixing })
    }

    /// Two sources mirroring the experimental setup: 1137-bit 200 MBaud BPSK on
    /// carriers 176 kHz either side of 1 GHz, seeds 1 and 2, zero phase.
    pub fn two_source_default(mixing: DMatrix<f64>) -> Result<Self> {
        let sources = vec![
            make_bpsk_source(
                1,
                DEFAULT_BITS,
                DEFAULT_BAUD_HZ,
                DEFAULT_CARRIER_HZ + DEFAULT_CARRIER_OFFSET_HZ,
                0.0,
            )?,
            make_bpsk_source(
                2,
                DEFAULT_BITS,
                DEFAULT_BAUD_HZ,
                DEFAULT_CARRIER_HZ - DEFAULT_CARRIER_OFFSET_HZ,
                0.0,
            )?,
        ];
        Self::new(sources, mixing)
    }

    pub fn sources(&self) -> &[SourceSignal] {
        &self.sources
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.mixing
    }

    /// Number of received channels `l`.
    pub fn channels(&self) -> usize {
        self.mixing.nrows()
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    pub fn eval_sources(&self, t: f64) -> DVector<f64> {
        DVector::from_iterator(self.sources.len(), self.sources.iter().map(|s| s.eval(t)))
    }

    pub fn eval_received(&self, t: f64) -> DVector<f64> {
        &self.mixing * self.eval_sources(t)
    }

    /// Longest bit-sequence period among the sources.
    pub fn longest_period(&self) -> f64 {
        self.sources
            .iter()
            .map(SourceSignal::period)
            .fold(0.0, f64::max)
    }
}

pub fn eval_received(scenario: &MixingScenario, t: f64) -> DVector<f64> {
    scenario.eval_received(t)
}

/// The symmetric mixing case: a similarly powerful interferer.
pub fn mixing_m1() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.6, 0.4, 0.4, 0.6])
}

/// The jamming case: a strong interferer masking a weaker target.
pub fn mixing_m2() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 1.0, 0.2])
}

/// JSON description of one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub seed: u64,
    pub n_bits: usize,
    pub baud_hz: f64,
    pub carrier_hz: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl SourceSpec {
    pub fn build(&self) -> Result<SourceSignal> {
        make_bpsk_source(
            self.seed,
            self.n_bits,
            self.baud_hz,
            self.carrier_hz,
            self.phase_rad,
        )
    }
}

/// JSON description of a scenario: `{sources: [...], mixing: [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub sources: Vec<SourceSpec>,
    pub mixing: Vec<Vec<f64>>,
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<MixingScenario> {
        let sources = self
            .sources
            .iter()
            .map(SourceSpec::build)
            .collect::<Result<Vec<_>>>()?;
        let mixing = matrix_from_rows(&self.mixing)?;
        MixingScenario::new(sources, mixing)
    }

    /// Default two-source scenario with the given mixing rows.
    pub fn two_source_default(mixing: &DMatrix<f64>) -> Self {
        let offsets = [DEFAULT_CARRIER_OFFSET_HZ, -DEFAULT_CARRIER_OFFSET_HZ];
        Self {
            sources: offsets
                .iter()
                .zip(1u64..)
                .map(|(&offset, seed)| SourceSpec {
                    seed,
                    n_bits: DEFAULT_BITS,
                    baud_hz: DEFAULT_BAUD_HZ,
                    carrier_hz: DEFAULT_CARRIER_HZ + offset,
                    phase_rad: 0.0,
                })
                .collect(),
            mixing: matrix_to_rows(mixing),
        }
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(PbssError::param("mixing", "matrix must be non-empty"));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PbssError::DimensionMismatch(
            "mixing matrix rows have unequal lengths".into(),
        ));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
