//! Coherent BPSK demodulation against known ground truth, and the
//! separation success criterion built on it.

use std::f64::consts::TAU;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::engine::PbssResult;
use crate::error::Result;
use crate::signal::{MixingScenario, SourceSignal};
use crate::weightbank::{MixedSignalProbe, WeightBank};

/// Trial carrier phases searched per demodulation.
pub const PHASE_STEPS: usize = 16;
/// Minimum dense-sampling density.
pub const SAMPLES_PER_CARRIER_CYCLE: f64 = 16.0;
/// Noise indices used by demodulation start here, far from acquisition indices.
const NOISE_INDEX_BASE: u64 = 1 << 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemodReport {
    pub source_index: usize,
    pub bit_errors: usize,
    /// Circular shift of the known sequence that best matches the decisions.
    pub alignment_offset: usize,
    pub polarity: i8,
    pub phase_used: f64,
}

impl DemodReport {
    pub fn success(&self) -> bool {
        self.bit_errors == 0
    }
}

/// Packed bit sequence, `1` for a `−1` symbol.
fn pack(symbols: impl Iterator<Item = bool>, len: usize) -> Vec<u64> {
    let mut words = vec![0u64; len.div_ceil(64)];
    for (j, neg) in symbols.enumerate() {
        if neg {
            words[j / 64] |= 1 << (j % 64);
        }
    }
    words
}

/// Matches decision sequences against every circular shift of one source's bits.
#[derive(Debug, Clone)]
pub struct Demodulator<'s> {
    source: &'s SourceSignal,
    source_index: usize,
    rotations: Vec<Vec<u64>>,
}

impl<'s> Demodulator<'s> {
    pub fn new(source: &'s SourceSignal, source_index: usize) -> Self {
        let bits = source.bits();
        let len = bits.len();
        let rotations = (0..len)
            .map(|o| pack((0..len).map(|j| bits[(j + o) % len] < 0), len))
            .collect();
        Self {
            source,
            source_index,
            rotations,
        }
    }

    /// Per-symbol in-phase and quadrature integrals of `m(t)` against the
    /// source carrier over one full bit-sequence period.
    fn integrate(&self, probe: &MixedSignalProbe<'_>) -> (Vec<f64>, Vec<f64>) {
        let src = self.source;
        let len = src.bits().len();
        let per_symbol =
            (SAMPLES_PER_CARRIER_CYCLE * src.carrier_freq() / src.baud_rate()).ceil() as usize;
        let per_symbol = per_symbol.max(16);
        let times: Vec<f64> = (0..len * per_symbol)
            .map(|n| {
                let (k, j) = (n / per_symbol, n % per_symbol);
                (k as f64 + (j as f64 + 0.5) / per_symbol as f64) / src.baud_rate()
            })
            .collect();
        let m = probe.eval_block(&times, NOISE_INDEX_BASE);
        let mut i_sum = vec![0.0; len];
        let mut q_sum = vec![0.0; len];
        for (n, (t, v)) in times.iter().zip(&m).enumerate() {
            let (s, c) = src.carrier_angle(*t).sin_cos();
            i_sum[n / per_symbol] += v * c;
            q_sum[n / per_symbol] += v * s;
        }
        (i_sum, q_sum)
    }

    pub fn demodulate(&self, probe: &MixedSignalProbe<'_>) -> DemodReport {
        let len = self.source.bits().len();
        let (i_sum, q_sum) = self.integrate(probe);
        let mut best = DemodReport {
            source_index: self.source_index,
            bit_errors: usize::MAX,
            alignment_offset: 0,
            polarity: 1,
            phase_used: 0.0,
        };
        for p in 0..PHASE_STEPS {
            let phase = TAU * p as f64 / PHASE_STEPS as f64;
            let (sp, cp) = phase.sin_cos();
            // ∫ m·cos(θ + φ) = cos φ·∫m cos θ − sin φ·∫m sin θ
            let decisions = pack(
                i_sum.iter().zip(&q_sum).map(|(i, q)| cp * i - sp * q < 0.0),
                len,
            );
            for (offset, rot) in self.rotations.iter().enumerate() {
                let errors: usize = decisions
                    .iter()
                    .zip(rot)
                    .map(|(a, b)| (a ^ b).count_ones() as usize)
                    .sum();
                for (polarity, e) in [(1i8, errors), (-1i8, len - errors)] {
                    if e < best.bit_errors {
                        best = DemodReport {
                            source_index: self.source_index,
                            bit_errors: e,
                            alignment_offset: offset,
                            polarity,
                            phase_used: phase,
                        };
                    }
                }
            }
        }
        best
    }
}

/// Demodulates `source` from the detector output described by `probe`.
pub fn demodulate(
    probe: &MixedSignalProbe<'_>,
    source: &SourceSignal,
    source_index: usize,
) -> DemodReport {
    Demodulator::new(source, source_index).demodulate(probe)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    /// `reports[ic][source]`.
    pub reports: Vec<Vec<DemodReport>>,
    /// IC claimed by each source, if any.
    pub assignment: Vec<Option<usize>>,
    pub success: bool,
}

/// Demodulates every source from every final IC and assigns ICs to sources
/// greedily by fewest bit errors, one IC per source.
pub fn assess_currents(
    ics: &[DVector<f64>],
    scenario: &MixingScenario,
    bank: &WeightBank,
) -> Result<SuccessReport> {
    let demods: Vec<Demodulator<'_>> = scenario
        .sources()
        .iter()
        .enumerate()
        .map(|(k, s)| Demodulator::new(s, k))
        .collect();
    let mut reports = Vec::with_capacity(ics.len());
    for currents in ics {
        let probe = MixedSignalProbe::new(scenario, bank, currents.clone())?;
        reports.push(demods.iter().map(|d| d.demodulate(&probe)).collect::<Vec<_>>());
    }

    let mut pairs: Vec<(usize, usize, usize)> = reports
        .iter()
        .enumerate()
        .flat_map(|(ic, row)| row.iter().map(move |r| (r.bit_errors, ic, r.source_index)))
        .collect();
    pairs.sort_unstable();
    let mut assignment = vec![None; scenario.source_count()];
    let mut claimed = vec![false; ics.len()];
    for (errors, ic, src) in pairs {
        if errors == 0 && assignment[src].is_none() && !claimed[ic] {
            assignment[src] = Some(ic);
            claimed[ic] = true;
        }
    }
    let success = assignment.iter().all(Option::is_some);
    Ok(SuccessReport {
        reports,
        assignment,
        success,
    })
}

pub fn assess(
    result: &PbssResult,
    scenario: &MixingScenario,
    bank: &WeightBank,
) -> Result<SuccessReport> {
    assess_currents(&result.ics_final, scenario, bank)
}

/// True when every source demodulates error-free from its own distinct IC.
pub fn pbss_success(
    result: &PbssResult,
    scenario: &MixingScenario,
    bank: &WeightBank,
) -> Result<bool> {
    Ok(assess(result, scenario, bank)?.success)
}
