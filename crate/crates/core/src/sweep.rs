//! Experiment sweeps over sampling rate and sample count.
//!
//! Trials and cells are seeded independently, run on a rayon pool bounded by
//! `PBSS_THREADS` (0 or unset = all cores), and collected in index order so
//! output is identical for any thread count.

use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demod::assess;
use crate::engine::{run_pbss, PbssConfig, PbssResult};
use crate::error::{PbssError, Result};
use crate::signal::MixingScenario;
use crate::stats::{estimator_quality, varvar_iid_predict, EstimatorQuality, SamplingMode, SamplingPlan};
use crate::weightbank::{MixedSignalProbe, WeightBank};

/// Lowest sampling rate of the grid; the others are power-of-two multiples.
pub const BASE_SAMPLE_RATE: f64 = 960e3;

/// Rates `960 kHz·2^k` for the given exponents.
pub fn rate_grid(exponents: impl IntoIterator<Item = u32>) -> Vec<f64> {
    exponents
        .into_iter()
        .map(|k| BASE_SAMPLE_RATE * f64::from(1u32 << k))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub f_s_hz: Vec<f64>,
    pub n_s: Vec<usize>,
    pub trials: usize,
    /// Repeats per estimator-quality measurement.
    pub quality_repeats: usize,
    /// High-variance current point used for estimator quality, mA.
    pub probe_currents_ma: Vec<f64>,
    /// `n_s` held fixed while `f_s` varies.
    pub fixed_n_s: usize,
    /// `f_s` held fixed while `n_s` varies.
    pub fixed_f_s_hz: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SweepConfig {
    /// 5 × 5 grid: every fourth rate exponent and every other count exponent.
    pub fn desk() -> Self {
        Self {
            f_s_hz: rate_grid([0, 3, 6, 9, 11]),
            n_s: [8, 10, 12, 14, 16].iter().map(|e| 1usize << e).collect(),
            ..Self::full()
        }
    }

    /// 12 × 9 grid: 960 kHz to 1.966 GHz and 2⁸ to 2¹⁶ samples.
    pub fn full() -> Self {
        Self {
            f_s_hz: rate_grid(0..12),
            n_s: (8..=16).map(|e| 1usize << e).collect(),
            trials: 32,
            quality_repeats: 32,
            probe_currents_ma: vec![0.0, 3.0],
            fixed_n_s: 2048,
            fixed_f_s_hz: 7.68e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.f_s_hz.is_empty() || self.n_s.is_empty() {
            return Err(PbssError::param("sweep", "grid must be non-empty"));
        }
        for &f in &self.f_s_hz {
            SamplingPlan::periodic(f, self.fixed_n_s)?;
        }
        for &n in &self.n_s {
            SamplingPlan::periodic(self.fixed_f_s_hz, n)?;
        }
        if self.trials == 0 || self.quality_repeats < 2 {
            return Err(PbssError::param("sweep", "need trials ≥ 1 and quality_repeats ≥ 2"));
        }
        Ok(())
    }
}

/// Builds the rayon pool sized by `PBSS_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("PBSS_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| PbssError::Config(format!("PBSS_THREADS={v:?} is not a count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PbssError::Config(format!("thread pool: {e}")))
}

/// Per-trial randomness: detector noise seed and acquisition start time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSeed {
    pub noise_seed: u64,
    pub t_start: f64,
}

impl TrialSeed {
    /// Derives trial `index` of stream `seed`; start times fall in the first millisecond.
    pub fn derive(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            noise_seed: rng.random(),
            t_start: rng.random::<f64>() * 1e-3,
        }
    }
}

#[derive(Debug)]
pub struct TrialOutcome {
    pub result: Result<PbssResult>,
    pub success: bool,
}

/// One separation attempt with trial-specific noise and start time.
pub fn run_trial(
    scenario: &MixingScenario,
    bank: &WeightBank,
    cfg: &PbssConfig,
    seed: TrialSeed,
) -> TrialOutcome {
    let bank = bank.clone().with_noise(bank.noise().std, seed.noise_seed);
    let cfg = PbssConfig {
        plan: cfg.plan.with_start(seed.t_start),
        ..*cfg
    };
    let result = run_pbss(scenario, &bank, &cfg);
    let success = match &result {
        Ok(r) => assess(r, scenario, &bank).map(|a| a.success).unwrap_or(false),
        Err(_) => false,
    };
    TrialOutcome { result, success }
}

/// Runs `trials` independent attempts; outcomes are in trial order.
pub fn run_trials(
    scenario: &MixingScenario,
    bank: &WeightBank,
    cfg: &PbssConfig,
    seed: u64,
    trials: usize,
) -> Vec<TrialOutcome> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(scenario, bank, cfg, TrialSeed::derive(seed, t)))
        .collect()
}

/// One cell of the success sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub mixing: String,
    pub f_s_hz: f64,
    pub n_s: usize,
    pub s2_snr_db: f64,
    pub k_snr_db: f64,
    pub success_count: usize,
    pub trials: usize,
}

impl ExperimentRecord {
    pub fn success_rate(&self) -> f64 {
        self.success_count as f64 / self.trials as f64
    }
}

fn quality_at(
    scenario: &MixingScenario,
    bank: &WeightBank,
    currents: &[f64],
    plan: &SamplingPlan,
    repeats: usize,
) -> Result<(EstimatorQuality, EstimatorQuality)> {
    let probe = MixedSignalProbe::new(scenario, bank, DVector::from_column_slice(currents))?;
    estimator_quality(&probe, plan, repeats)
}

/// Success rate and estimator SNR for every `(f_s, n_s)` cell of each
/// labelled scenario. Estimator failures leave NaN SNRs; PBSS errors count
/// as unsuccessful trials.
pub fn sweep_success_vs_snr(
    cases: &[(String, MixingScenario)],
    bank: &WeightBank,
    base: &PbssConfig,
    sweep: &SweepConfig,
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    sweep.validate()?;
    let cells: Vec<(usize, usize, f64, usize)> = cases
        .iter()
        .enumerate()
        .flat_map(|(c, _)| {
            sweep
                .f_s_hz
                .iter()
                .flat_map(move |&f| sweep.n_s.iter().map(move |&n| (c, f, n)))
        })
        .enumerate()
        .map(|(idx, (c, f, n))| (idx, c, f, n))
        .collect();

    let records = cells
        .into_par_iter()
        .map(|(idx, case, f_s, n_s)| {
            let (label, scenario) = &cases[case];
            let cfg = base.with_plan(f_s, n_s);
            let plan = SamplingPlan::periodic(f_s, n_s)?;
            let (s2_snr_db, k_snr_db) = match quality_at(
                scenario,
                bank,
                &sweep.probe_currents_ma,
                &plan,
                sweep.quality_repeats,
            ) {
                Ok((s2, k)) => (s2.snr_db, k.snr_db),
                Err(_) => (f64::NAN, f64::NAN),
            };
            let cell_seed = seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let success_count = (0..sweep.trials as u64)
                .into_par_iter()
                .filter(|&t| {
                    run_trial(scenario, bank, &cfg, TrialSeed::derive(cell_seed, t)).success
                })
                .count();
            Ok(ExperimentRecord {
                mixing: label.clone(),
                f_s_hz: f_s,
                n_s,
                s2_snr_db,
                k_snr_db,
                success_count,
                trials: sweep.trials,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(records)
}

/// One CSV row of the estimator sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub f_s_hz: f64,
    pub n_s: usize,
    /// `S2` / `K` (periodic), `S2_random` (random instants), `S2_iid` (IID prediction).
    pub stat: String,
    pub mean: f64,
    pub std: f64,
    pub snr_db: f64,
    pub repeats: usize,
}

impl QualityRow {
    fn new(f_s: f64, n_s: usize, stat: &str, q: &EstimatorQuality) -> Self {
        Self {
            f_s_hz: f_s,
            n_s,
            stat: stat.into(),
            mean: q.mean,
            std: q.std,
            snr_db: q.snr_db,
            repeats: q.repeats,
        }
    }
}

/// Estimator quality rows for one `(f_s, n_s)` cell.
pub fn quality_cell(
    scenario: &MixingScenario,
    bank: &WeightBank,
    sweep: &SweepConfig,
    f_s: f64,
    n_s: usize,
    seed: u64,
) -> Result<Vec<QualityRow>> {
    let plan = SamplingPlan::periodic(f_s, n_s)?;
    let (s2, k) = quality_at(scenario, bank, &sweep.probe_currents_ma, &plan, sweep.quality_repeats)?;
    let random = SamplingPlan::new(
        f_s,
        n_s,
        0.0,
        SamplingMode::Random {
            window: plan.span(),
            seed,
        },
    )?;
    let (s2_random, k_random) =
        quality_at(scenario, bank, &sweep.probe_currents_ma, &random, sweep.quality_repeats)?;
    let predicted_std = varvar_iid_predict(s2_random.mean, k_random.mean, n_s).sqrt();
    let iid = EstimatorQuality {
        mean: s2_random.mean,
        std: predicted_std,
        snr_db: crate::stats::snr_db(s2_random.mean, predicted_std),
        repeats: sweep.quality_repeats,
    };
    Ok(vec![
        QualityRow::new(f_s, n_s, "S2", &s2),
        QualityRow::new(f_s, n_s, "K", &k),
        QualityRow::new(f_s, n_s, "S2_random", &s2_random),
        QualityRow::new(f_s, n_s, "S2_iid", &iid),
    ])
}

/// The `f_s` sweep at fixed `n_s`, then the `n_s` sweep at fixed `f_s`.
pub fn sweep_estimator_quality(
    scenario: &MixingScenario,
    bank: &WeightBank,
    sweep: &SweepConfig,
    seed: u64,
) -> Result<Vec<QualityRow>> {
    sweep.validate()?;
    let cells: Vec<(f64, usize)> = sweep
        .f_s_hz
        .iter()
        .map(|&f| (f, sweep.fixed_n_s))
        .chain(sweep.n_s.iter().map(|&n| (sweep.fixed_f_s_hz, n)))
        .collect();
    let rows = cells
        .into_par_iter()
        .map(|(f, n)| quality_cell(scenario, bank, sweep, f, n, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Fitted exponent `p` in `SNR ∝ n_sᵖ` from rows of a single statistic.
pub fn snr_exponent(rows: &[&QualityRow]) -> f64 {
    let x: Vec<f64> = rows.iter().map(|r| (r.n_s as f64).log10()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.snr_db / 20.0).collect();
    fit_slope(&x, &y)
}

/// Cells whose acquisition is prone to sampling artifacts: the record spans
/// fewer than `min_periods` bit-sequence periods, or a carrier aliases to a
/// frequency completing fewer than `min_periods` cycles within the record.
pub fn is_alignment_cell(scenario: &MixingScenario, f_s: f64, n_s: usize, min_periods: f64) -> bool {
    let span = n_s as f64 / f_s;
    if span < min_periods * scenario.longest_period() {
        return true;
    }
    scenario.sources().iter().any(|s| {
        let ratio = s.carrier_freq() / f_s;
        let alias = (ratio - ratio.round()).abs() * f_s;
        alias * span < min_periods
    })
}

/// Mean success rate per `bin_db`-wide S² SNR bin, ordered by SNR. Bins with
/// no records are skipped; records with non-finite SNR are ignored.
pub fn bin_success_by_snr(records: &[&ExperimentRecord], bin_db: f64) -> Vec<(f64, f64, usize)> {
    let mut bins: std::collections::BTreeMap<i64, (usize, usize)> = Default::default();
    for r in records.iter().filter(|r| r.s2_snr_db.is_finite()) {
        let key = (r.s2_snr_db / bin_db).floor() as i64;
        let e = bins.entry(key).or_default();
        e.0 += r.success_count;
        e.1 += r.trials;
    }
    bins.into_iter()
        .map(|(k, (s, t))| (k as f64 * bin_db, s as f64 / t as f64, t))
        .collect()
}

/// Number of adjacent decreases in a sequence of rates.
pub fn count_inversions(rates: &[f64]) -> usize {
    rates.windows(2).filter(|w| w[1] < w[0]).count()
}

/// Lowest bin start above which every bin is fully successful, if any bin is.
pub fn success_floor(bins: &[(f64, f64, usize)]) -> Option<f64> {
    let mut floor = None;
    for (start, rate, _) in bins.iter().rev() {
        if *rate < 1.0 {
            break;
        }
        floor = Some(*start);
    }
    floor
}
