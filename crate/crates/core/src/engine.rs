//! Zero-calibration separation engine.
//!
//! | step | goal              | statistic | domain | runs  |
//! |------|-------------------|-----------|--------|-------|
//! | 1    | minimize          | variance  | field  | 1     |
//! | 2    | maximize          | variance  | sphere | a − 1 |
//! | 3    | minimize          | kurtosis  | sphere | a − 1 |
//! | 4    | minimize          | kurtosis  | field  | a     |
//!
//! The last component in steps 2 and 3 is forced by orthogonality and only
//! its sign is chosen. Every statistic acquisition is one cycle; the clock
//! advances by one acquisition span per cycle, like back-to-back hardware
//! measurements.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PbssError, Result};
use crate::optimize::{
    minimize_field, optimize_on_sphere, NelderMeadConfig, SphereDomain,
};
use crate::signal::{matrix_to_rows, MixingScenario};
use crate::stats::{acquisition_latency, MomentAccumulator, SamplingPlan};
use crate::weightbank::{MixedSignalProbe, WeightBank};

/// Radius of the linear region around the zero-weight point, in mA.
pub const DEFAULT_LINEAR_RADIUS: f64 = 0.6;
/// 960 kHz scaled by 2⁷, the 122.9 MSPS operating point.
pub const DEFAULT_SAMPLE_RATE: f64 = 122.88e6;
pub const DEFAULT_SAMPLE_COUNT: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PbssConfig {
    pub n_sources: usize,
    pub linear_radius: f64,
    pub plan: SamplingPlan,
    pub nm: NelderMeadConfig,
}

impl Default for PbssConfig {
    fn default() -> Self {
        Self {
            n_sources: 2,
            linear_radius: DEFAULT_LINEAR_RADIUS,
            plan: SamplingPlan {
                f_s: DEFAULT_SAMPLE_RATE,
                n_s: DEFAULT_SAMPLE_COUNT,
                t_start: 0.0,
                mode: crate::stats::SamplingMode::Periodic,
            },
            nm: NelderMeadConfig::default(),
        }
    }
}

impl PbssConfig {
    pub fn with_plan(self, f_s: f64, n_s: usize) -> Self {
        Self {
            plan: SamplingPlan { f_s, n_s, ..self.plan },
            ..self
        }
    }

    pub fn validate(&self, bank: &WeightBank) -> Result<()> {
        if self.n_sources < 2 {
            return Err(PbssError::param("n_sources", "at least 2 sources are required"));
        }
        if bank.len() != self.n_sources {
            return Err(PbssError::DimensionMismatch(format!(
                "{} rings for {} sources; the engine needs one ring per source",
                bank.len(),
                self.n_sources
            )));
        }
        self.plan.validate()?;
        self.nm.validate()?;
        if !(self.linear_radius.is_finite() && self.linear_radius > 0.0) {
            return Err(PbssError::param("linear_radius", "must be positive"));
        }
        for (k, ring) in bank.rings().iter().enumerate() {
            let i0 = ring.zero_weight_current()?;
            let (lo, hi) = ring.current_range();
            let margin = (hi - i0).min(i0 - lo);
            if self.linear_radius >= margin {
                return Err(PbssError::param(
                    "linear_radius",
                    format!(
                        "{} mA does not fit inside ring {k}'s range around i0 = {i0} mA",
                        self.linear_radius
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Optimizations per run: `1 + (a−1) + (a−1) + a`.
    pub fn optimization_count(&self) -> usize {
        3 * self.n_sources - 1
    }
}

/// Sets currents and measures statistics; the engine's only view of the hardware.
#[derive(Debug)]
pub struct Instrument<'a> {
    scenario: &'a MixingScenario,
    bank: &'a WeightBank,
    plan: SamplingPlan,
    clock: f64,
    cycles: usize,
}

impl<'a> Instrument<'a> {
    pub fn new(scenario: &'a MixingScenario, bank: &'a WeightBank, plan: SamplingPlan) -> Self {
        Self {
            scenario,
            bank,
            clock: plan.t_start,
            plan,
            cycles: 0,
        }
    }

    pub fn bank(&self) -> &'a WeightBank {
        self.bank
    }

    pub fn scenario(&self) -> &'a MixingScenario {
        self.scenario
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    /// One weight-set/measure cycle at `currents`.
    pub fn acquire(&mut self, currents: &DVector<f64>) -> Result<MomentAccumulator> {
        let probe = MixedSignalProbe::new(self.scenario, self.bank, currents.clone())?;
        let block = self.plan.with_start(self.clock);
        let samples = crate::stats::acquire(&probe, &block)?;
        self.clock += block.span();
        self.cycles += 1;
        let mut acc = MomentAccumulator::new();
        acc.extend(samples);
        Ok(acc)
    }

    pub fn variance(&mut self, currents: &DVector<f64>) -> Result<f64> {
        Ok(self.acquire(currents)?.variance())
    }

    /// Excess kurtosis; a silent output has no kurtosis and scores `+∞`.
    pub fn kurtosis(&mut self, currents: &DVector<f64>) -> Result<f64> {
        match self.acquire(currents)?.finish() {
            Ok(est) => Ok(est.k),
            Err(PbssError::DegenerateSignal(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: usize,
    pub label: String,
    /// Best objective value after each iteration.
    pub values: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponent {
    /// Unit direction in current-offset space.
    pub direction: DVector<f64>,
    /// `S²` measured at `î₀ + radius·direction`.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbssResult {
    pub i0_hat: DVector<f64>,
    pub pcs: Vec<PrincipalComponent>,
    pub whitening: DMatrix<f64>,
    /// Independent components as unit vectors in the whitened basis.
    pub ics_whitened: Vec<DVector<f64>>,
    /// The same components as unit current-offset directions.
    pub ics_sphere: Vec<DVector<f64>>,
    /// Cancellation currents after field refinement.
    pub ics_final: Vec<DVector<f64>>,
    pub traces: Vec<StepTrace>,
    pub cycle_count: usize,
}

fn field_bounds(bank: &WeightBank) -> Vec<(f64, f64)> {
    bank.bounds()
}

/// Step 1: minimize variance over the current field from the range midpoint.
pub fn step1_find_zero(
    inst: &mut Instrument<'_>,
    cfg: &PbssConfig,
) -> Result<(DVector<f64>, f64, StepTrace)> {
    let bounds = field_bounds(inst.bank());
    let x0: Vec<f64> = bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let res = minimize_field(
        |x| inst.variance(&DVector::from_column_slice(x)),
        &x0,
        &bounds,
        &cfg.nm,
    )?;
    let trace = StepTrace {
        step: 1,
        label: "minimize variance (field)".into(),
        values: res.trace,
        evaluations: res.evaluations,
    };
    Ok((DVector::from_vec(res.x), res.value, trace))
}

/// Step 2: successive variance maximizations on the linear-region sphere.
///
/// `noise_floor` is the variance at `î₀`; a component measuring at or below
/// it means no signal is present along that direction.
pub fn step2_pca(
    inst: &mut Instrument<'_>,
    i0_hat: &DVector<f64>,
    noise_floor: f64,
    cfg: &PbssConfig,
) -> Result<(Vec<PrincipalComponent>, Vec<StepTrace>)> {
    let d = i0_hat.len();
    let mut pcs: Vec<PrincipalComponent> = Vec::with_capacity(d);
    let mut traces = Vec::with_capacity(d);
    for j in 0..d {
        let constraints = pcs.iter().map(|pc| pc.direction.clone()).collect();
        let domain = SphereDomain::new(i0_hat.clone(), cfg.linear_radius, constraints)?;
        let res = optimize_on_sphere(
            |u| inst.variance(&domain.point(u)),
            &domain,
            &cfg.nm,
            true,
            None,
        )?;
        if res.value <= noise_floor {
            return Err(PbssError::DegenerateSignal(format!(
                "principal component {} variance {} is at the noise floor {}",
                j + 1,
                res.value,
                noise_floor
            )));
        }
        traces.push(StepTrace {
            step: 2,
            label: format!("maximize variance (sphere) PC{}", j + 1),
            values: res.trace,
            evaluations: res.evaluations,
        });
        pcs.push(PrincipalComponent {
            direction: res.u,
            variance: res.value,
        });
    }
    Ok((pcs, traces))
}

/// `W = U·diag(radius/√S²ⱼ)` with the component directions as the columns of `U`.
pub fn build_whitening(pcs: &[PrincipalComponent], linear_radius: f64) -> Result<DMatrix<f64>> {
    let d = pcs.len();
    if d == 0 {
        return Err(PbssError::SingularWhitening("no principal components".into()));
    }
    let mut w = DMatrix::zeros(d, d);
    for (j, pc) in pcs.iter().enumerate() {
        if pc.direction.len() != d {
            return Err(PbssError::DimensionMismatch(format!(
                "component {j} has {} entries, expected {d}",
                pc.direction.len()
            )));
        }
        if !(pc.variance > 0.0 && pc.variance.is_finite()) {
            return Err(PbssError::SingularWhitening(format!(
                "component {j} has variance {}",
                pc.variance
            )));
        }
        w.set_column(j, &(&pc.direction * (linear_radius / pc.variance.sqrt())));
    }
    Ok(w)
}

/// Whitened coordinates of a current offset, `W⁻¹·(i − î₀)`.
pub fn to_whitened(whitening: &DMatrix<f64>, offset: &DVector<f64>) -> Result<DVector<f64>> {
    whitening
        .clone()
        .lu()
        .solve(offset)
        .ok_or_else(|| PbssError::SingularWhitening("matrix is not invertible".into()))
}

/// Current-space point on the linear-region sphere for a whitened direction.
pub fn whitened_to_current(
    whitening: &DMatrix<f64>,
    i0_hat: &DVector<f64>,
    w_prime: &DVector<f64>,
    linear_radius: f64,
) -> DVector<f64> {
    i0_hat + (whitening * w_prime).normalize() * linear_radius
}

/// Step 3: successive kurtosis minimizations over whitened unit vectors,
/// each orthogonal (in the whitened basis) to the previous ones.
pub fn step3_ica(
    inst: &mut Instrument<'_>,
    i0_hat: &DVector<f64>,
    whitening: &DMatrix<f64>,
    cfg: &PbssConfig,
) -> Result<(Vec<DVector<f64>>, Vec<StepTrace>)> {
    let d = i0_hat.len();
    let mut ics: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut traces = Vec::with_capacity(d);
    let seed = DVector::from_fn(d, |r, _| if r == 0 { 1.0 } else { 0.0 });
    for j in 0..d {
        let domain = SphereDomain::new(DVector::zeros(d), 1.0, ics.clone())?;
        let res = optimize_on_sphere(
            |w| {
                inst.kurtosis(&whitened_to_current(
                    whitening,
                    i0_hat,
                    w,
                    cfg.linear_radius,
                ))
            },
            &domain,
            &cfg.nm,
            false,
            Some(&seed),
        )?;
        traces.push(StepTrace {
            step: 3,
            label: format!("minimize kurtosis (sphere) IC{}", j + 1),
            values: res.trace,
            evaluations: res.evaluations,
        });
        ics.push(res.u);
    }
    Ok((ics, traces))
}

/// Step 4: field-domain kurtosis minimization from each component's point.
pub fn step4_refine(
    inst: &mut Instrument<'_>,
    starts: &[DVector<f64>],
    cfg: &PbssConfig,
) -> Result<(Vec<DVector<f64>>, Vec<StepTrace>)> {
    let bounds = field_bounds(inst.bank());
    // The simplex is sized by the linear radius, the scale separating
    // neighbouring components; a field-wide simplex can straddle a stronger
    // component's basin and abandon its own.
    let width = bounds.iter().map(|(lo, hi)| hi - lo).fold(f64::INFINITY, f64::min);
    let nm = NelderMeadConfig {
        initial_step: cfg.nm.initial_step * cfg.linear_radius / width,
        ..cfg.nm
    };
    let mut finals = Vec::with_capacity(starts.len());
    let mut traces = Vec::with_capacity(starts.len());
    for (j, start) in starts.iter().enumerate() {
        let res = minimize_field(
            |x| inst.kurtosis(&DVector::from_column_slice(x)),
            start.as_slice(),
            &bounds,
            &nm,
        )?;
        traces.push(StepTrace {
            step: 4,
            label: format!("minimize kurtosis (field) IC{}", j + 1),
            values: res.trace,
            evaluations: res.evaluations,
        });
        finals.push(DVector::from_vec(res.x));
    }
    Ok((finals, traces))
}

/// Runs all four steps; a failing step aborts with the traces gathered so far.
pub fn run_pbss(
    scenario: &MixingScenario,
    bank: &WeightBank,
    cfg: &PbssConfig,
) -> Result<PbssResult> {
    cfg.validate(bank)?;
    if scenario.channels() != bank.len() || scenario.source_count() != cfg.n_sources {
        return Err(PbssError::DimensionMismatch(format!(
            "scenario has {} channels and {} sources; bank has {} rings; config expects {} sources",
            scenario.channels(),
            scenario.source_count(),
            bank.len(),
            cfg.n_sources
        )));
    }
    let mut inst = Instrument::new(scenario, bank, cfg.plan);
    let mut traces: Vec<StepTrace> = Vec::new();
    let fail = |step: usize, traces: &[StepTrace]| {
        let traces = traces.to_vec();
        move |e: PbssError| PbssError::StepFailed {
            step,
            source: Box::new(e),
            traces,
        }
    };

    let (i0_hat, floor, t1) = step1_find_zero(&mut inst, cfg).map_err(fail(1, &traces))?;
    traces.push(t1);

    let (pcs, t2) = step2_pca(&mut inst, &i0_hat, floor, cfg).map_err(fail(2, &traces))?;
    traces.extend(t2);
    let whitening = build_whitening(&pcs, cfg.linear_radius).map_err(fail(2, &traces))?;

    let (ics_whitened, t3) =
        step3_ica(&mut inst, &i0_hat, &whitening, cfg).map_err(fail(3, &traces))?;
    traces.extend(t3);
    let ics_sphere: Vec<DVector<f64>> = ics_whitened
        .iter()
        .map(|w| (&whitening * w).normalize())
        .collect();
    let starts: Vec<DVector<f64>> = ics_sphere
        .iter()
        .map(|u| &i0_hat + u * cfg.linear_radius)
        .collect();

    let (ics_final, t4) = step4_refine(&mut inst, &starts, cfg).map_err(fail(4, &traces))?;
    traces.extend(t4);

    Ok(PbssResult {
        i0_hat,
        pcs,
        whitening,
        ics_whitened,
        ics_sphere,
        ics_final,
        traces,
        cycle_count: inst.cycles(),
    })
}

/// `∇σ² = 2MMᵀw`, the variance gradient with respect to the weights.
pub fn variance_gradient_oracle(m: &DMatrix<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(variance_hessian_oracle(m)? * w)
}

/// `H = 2MMᵀ`, constant in the weights.
pub fn variance_hessian_oracle(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(PbssError::DimensionMismatch("mixing matrix must be square".into()));
    }
    if m.determinant().abs() <= f64::EPSILON {
        return Err(PbssError::SingularMixing);
    }
    Ok(m * m.transpose() * 2.0)
}

/// Per-cycle overheads besides acquisition, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleOverheads {
    /// Communication with the weight controller.
    pub t_c: f64,
    /// Weight settling.
    pub t_s: f64,
    /// Processing.
    pub t_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub cycles: usize,
    pub t_a: f64,
    pub cycle_time: f64,
    pub total: f64,
}

/// Latency of `cycles` cycles: `N·(t_a + t_c + t_s + t_p)`.
pub fn latency_for_cycles(
    cycles: usize,
    plan: &SamplingPlan,
    overheads: &CycleOverheads,
) -> LatencyReport {
    let t_a = acquisition_latency(plan);
    let cycle_time = t_a + overheads.t_c + overheads.t_s + overheads.t_p;
    LatencyReport {
        cycles,
        t_a,
        cycle_time,
        total: cycles as f64 * cycle_time,
    }
}

/// Nominal latency with one cycle per Nelder-Mead iteration:
/// `N = (3a − 1)·iterations`.
pub fn latency_model(cfg: &PbssConfig, overheads: &CycleOverheads) -> LatencyReport {
    latency_for_cycles(
        cfg.optimization_count() * cfg.nm.iterations,
        &cfg.plan,
        overheads,
    )
}

/// JSON form of a result, with matrices as nested row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbssResultJson {
    pub i0_hat: Vec<f64>,
    pub pcs: Vec<PcJson>,
    pub whitening: Vec<Vec<f64>>,
    pub ics_whitened: Vec<Vec<f64>>,
    pub ics_sphere: Vec<Vec<f64>>,
    pub ics_final: Vec<Vec<f64>>,
    pub cycle_count: usize,
    pub step_traces: Vec<StepTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcJson {
    pub direction: Vec<f64>,
    pub variance: f64,
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

impl From<&PbssResult> for PbssResultJson {
    fn from(r: &PbssResult) -> Self {
        Self {
            i0_hat: vec_of(&r.i0_hat),
            pcs: r
                .pcs
                .iter()
                .map(|pc| PcJson {
                    direction: vec_of(&pc.direction),
                    variance: pc.variance,
                })
                .collect(),
            whitening: matrix_to_rows(&r.whitening),
            ics_whitened: r.ics_whitened.iter().map(vec_of).collect(),
            ics_sphere: r.ics_sphere.iter().map(vec_of).collect(),
            ics_final: r.ics_final.iter().map(vec_of).collect(),
            cycle_count: r.cycle_count,
            step_traces: r.traces.clone(),
        }
    }
}

impl PbssResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PbssResultJson::from(self))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{mixing_m1, mixing_m2};
    use crate::weightbank::WeightModel;

    fn ideal_quiet(l: usize) -> WeightBank {
        WeightBank::default_for(l, 0)
            .with_model(WeightModel::Ideal)
            .with_noise(0.0, 0)
    }

    #[test]
    fn gradient_oracle_values() {
        let m = DMatrix::identity(2, 2);
        let g = variance_gradient_oracle(&m, &DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_eq!(g, DVector::from_vec(vec![2.0, 4.0]));
        let zero = variance_gradient_oracle(&mixing_m2(), &DVector::zeros(2)).unwrap();
        assert_eq!(zero, DVector::zeros(2));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            variance_gradient_oracle(&singular, &DVector::zeros(2)),
            Err(PbssError::SingularMixing)
        ));
    }

    #[test]
    fn hessian_determinant_positive() {
        for m in [mixing_m1(), mixing_m2(), DMatrix::from_row_slice(2, 2, &[0.1, -3.0, 2.0, 0.4])] {
            let h = variance_hessian_oracle(&m).unwrap();
            assert!(h.determinant() > 0.0);
            assert!((h.determinant() - 4.0 * m.determinant().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn whitening_inverse_consistency() {
        let pcs = vec![
            PrincipalComponent {
                direction: DVector::from_vec(vec![1.0, 1.0]).normalize(),
                variance: 0.36,
            },
            PrincipalComponent {
                direction: DVector::from_vec(vec![1.0, -1.0]).normalize(),
                variance: 0.0144,
            },
        ];
        let w = build_whitening(&pcs, 0.6).unwrap();
        let inv = w.clone().try_inverse().unwrap();
        assert!((inv * &w - DMatrix::identity(2, 2)).amax() < 1e-9);
        let offset = DVector::from_vec(vec![0.3, -0.1]);
        let back = &w * to_whitened(&w, &offset).unwrap();
        assert!((back - offset).amax() < 1e-12);

        let flat: Vec<_> = pcs
            .iter()
            .map(|pc| PrincipalComponent { variance: 0.25, ..pc.clone() })
            .collect();
        let rot = build_whitening(&flat, 0.5).unwrap();
        assert!((rot.transpose() * &rot - DMatrix::identity(2, 2)).amax() < 1e-12);

        let mut bad = pcs.clone();
        bad[1].variance = 0.0;
        assert!(matches!(build_whitening(&bad, 0.6), Err(PbssError::SingularWhitening(_))));
    }

    #[test]
    fn latency_values() {
        let cfg = PbssConfig::default().with_plan(122.9e6, 1 << 14);
        let rep = latency_model(&cfg, &CycleOverheads::default());
        assert_eq!(rep.cycles, 200);
        assert!((rep.t_a - 133e-6).abs() / 133e-6 < 0.01);
        assert!(rep.total < 30e-3 && rep.total > 26e-3);
        let slow = latency_model(&cfg, &CycleOverheads { t_c: 6e-3, ..Default::default() });
        assert!(slow.total >= 1.2);
        let none = latency_for_cycles(0, &cfg.plan, &CycleOverheads::default());
        assert_eq!(none.total, 0.0);
    }

    #[test]
    fn config_validation() {
        let bank = WeightBank::default_for(2, 0);
        assert!(PbssConfig::default().validate(&bank).is_ok());
        let wide = PbssConfig { linear_radius: 2.5, ..PbssConfig::default() };
        assert!(wide.validate(&bank).is_err());
        let one = PbssConfig { n_sources: 1, ..PbssConfig::default() };
        assert!(one.validate(&bank).is_err());
        let odd = PbssConfig::default().with_plan(1e6, 1000);
        assert!(odd.validate(&bank).is_err());
        assert!(PbssConfig::default().validate(&WeightBank::default_for(3, 0)).is_err());
    }

    #[test]
    fn instrument_counts_cycles_and_advances_clock() {
        let sc = MixingScenario::two_source_default(mixing_m1()).unwrap();
        let bank = ideal_quiet(2);
        let plan = SamplingPlan::periodic(7.68e6, 256).unwrap();
        let mut inst = Instrument::new(&sc, &bank, plan);
        let i = DVector::from_vec(vec![2.5, 2.0]);
        let a = inst.variance(&i).unwrap();
        let b = inst.variance(&i).unwrap();
        assert_eq!(inst.cycles(), 2);
        assert_ne!(a, b);
        assert_eq!(inst.kurtosis(&bank.zero_currents().unwrap()).unwrap(), f64::INFINITY);
    }

    #[test]
    fn step_failure_names_the_step() {
        // Silent sources and a noiseless detector leave nothing to measure.
        let silent = crate::signal::SourceSignal::from_bits(vec![1], 1.0, 1e6, 0.0)
            .unwrap()
            .scaled(0.0);
        let sc = MixingScenario::new(vec![silent.clone(), silent], mixing_m1()).unwrap();
        let bank = WeightBank::default_for(2, 3).with_noise(0.0, 3);
        let cfg = PbssConfig::default().with_plan(7.68e6, 256);
        match run_pbss(&sc, &bank, &cfg) {
            Err(PbssError::StepFailed { step, traces, source }) => {
                // Step 1 finds a zero floor; step 2 cannot rise above it.
                assert_eq!(step, 2);
                assert_eq!(traces.len(), 1);
                assert_eq!(traces[0].step, 1);
                assert!(matches!(*source, PbssError::DegenerateSignal(_)));
            }
            other => panic!("expected a step failure, got {other:?}"),
        }
    }

    #[test]
    fn components_at_the_floor_are_rejected() {
        let sc = MixingScenario::two_source_default(mixing_m1()).unwrap();
        let bank = WeightBank::default_for(2, 3);
        let cfg = PbssConfig::default().with_plan(7.68e6, 256);
        let mut inst = Instrument::new(&sc, &bank, cfg.plan);
        let i0 = bank.zero_currents().unwrap();
        assert!(matches!(
            step2_pca(&mut inst, &i0, f64::INFINITY, &cfg),
            Err(PbssError::DegenerateSignal(_))
        ));
    }
}
