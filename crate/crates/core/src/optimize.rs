//! Derivative-free optimization.
//!
//! [`minimize_field`] runs Nelder-Mead inside a box, penalizing vertices that
//! leave it. [`optimize_on_sphere`] restricts the search to unit vectors
//! orthogonal to a set of constraints by running Nelder-Mead on hyperspherical
//! angles in an orthonormal basis of the feasible subspace, so every point the
//! objective sees is feasible by construction.
//!
//! Both use a fixed iteration count and never consume more than
//! `2·iterations + vertices` objective evaluations.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{PbssError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadConfig {
    pub iterations: usize,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Field-mode simplex edge as a fraction of each dimension's width.
    pub initial_step: f64,
    /// Sphere-mode simplex edge in radians.
    pub sphere_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            iterations: 40,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.1,
            sphere_step: 0.3,
        }
    }
}

impl NelderMeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(PbssError::param("iterations", "must be at least 1"));
        }
        let positive = [
            ("reflection", self.reflection),
            ("expansion", self.expansion),
            ("contraction", self.contraction),
            ("shrink", self.shrink),
            ("initial_step", self.initial_step),
            ("sphere_step", self.sphere_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PbssError::param(name, format!("{v} must be positive")));
            }
        }
        if !(self.expansion > 1.0 && self.contraction < 1.0 && self.shrink < 1.0) {
            return Err(PbssError::param(
                "expansion",
                "coefficients need expansion > 1 > contraction and shrink < 1",
            ));
        }
        Ok(())
    }

    /// Evaluation budget for a simplex of `vertices` points.
    pub fn evaluation_budget(&self, vertices: usize) -> usize {
        2 * self.iterations + vertices
    }
}

/// Best point of a box-constrained minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Best value after each completed iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereResult {
    pub u: DVector<f64>,
    /// Objective value at `u` (not negated when maximizing).
    pub value: f64,
    /// Best objective value after each completed iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

/// Counts objective calls and refuses to exceed the budget.
struct Evaluator<F> {
    objective: F,
    evaluations: usize,
    budget: usize,
}

impl<F> Evaluator<F>
where
    F: FnMut(&[f64]) -> Result<Option<f64>>,
{
    /// `Ok(None)` once the budget is spent.
    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.evaluations >= self.budget {
            return Ok(None);
        }
        match (self.objective)(x)? {
            Some(v) => {
                self.evaluations += 1;
                Ok(Some(if v.is_nan() { f64::INFINITY } else { v }))
            }
            // Infeasible: penalized without spending an evaluation.
            None => Ok(Some(f64::INFINITY)),
        }
    }
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }
}

fn affine(base: &[f64], dir_from: &[f64], coeff: f64) -> Vec<f64> {
    // base + coeff·(base − dir_from)
    base.iter()
        .zip(dir_from)
        .map(|(b, d)| b + coeff * (b - d))
        .collect()
}

/// Regular simplex with `x0` as a vertex; `edges[i]` scales dimension `i`
/// (negative values flip that axis).
fn regular_simplex(x0: &[f64], edges: &[f64]) -> Vec<Vec<f64>> {
    let n = x0.len() as f64;
    let p = (n + 1.0).sqrt() + n - 1.0;
    let q = (n + 1.0).sqrt() - 1.0;
    let scale = 1.0 / (n * std::f64::consts::SQRT_2);
    let mut pts = vec![x0.to_vec()];
    for j in 0..x0.len() {
        pts.push(
            x0.iter()
                .zip(edges)
                .enumerate()
                .map(|(i, (x, e))| x + e * scale * if i == j { p } else { q })
                .collect(),
        );
    }
    pts
}

/// Core loop; returns the ordered final simplex and per-iteration trace.
fn nelder_mead<F>(
    eval: &mut Evaluator<F>,
    start: Vec<Vec<f64>>,
    cfg: &NelderMeadConfig,
) -> Result<(Simplex, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Result<Option<f64>>,
{
    let mut values = Vec::with_capacity(start.len());
    for p in &start {
        match eval.eval(p)? {
            Some(v) => values.push(v),
            None => return Err(PbssError::param("iterations", "budget too small")),
        }
    }
    let mut s = Simplex {
        points: start,
        values,
    };
    let n = s.points.len() - 1;
    let mut trace = Vec::with_capacity(cfg.iterations);

    'iterate: for _ in 0..cfg.iterations {
        s.order();
        let worst = s.points[n].clone();
        let (f_best, f_second, f_worst) = (s.values[0], s.values[n - 1], s.values[n]);
        let mut centroid = vec![0.0; worst.len()];
        for p in &s.points[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }

        let reflected = affine(&centroid, &worst, cfg.reflection);
        let Some(f_r) = eval.eval(&reflected)? else {
            break;
        };

        let mut accepted: Option<(Vec<f64>, f64)> = None;
        if f_r < f_best {
            let expanded = affine(&centroid, &worst, cfg.reflection * cfg.expansion);
            match eval.eval(&expanded)? {
                Some(f_e) if f_e < f_r => accepted = Some((expanded, f_e)),
                Some(_) => accepted = Some((reflected, f_r)),
                None => {
                    s.points[n] = reflected;
                    s.values[n] = f_r;
                    trace.push(f_r.min(f_best));
                    break;
                }
            }
        } else if f_r < f_second {
            accepted = Some((reflected, f_r));
        } else {
            let (candidate, outside) = if f_r < f_worst {
                (
                    affine(&centroid, &worst, cfg.reflection * cfg.contraction),
                    true,
                )
            } else {
                (affine(&centroid, &worst, -cfg.contraction), false)
            };
            let Some(f_c) = eval.eval(&candidate)? else {
                if f_r < f_worst {
                    s.points[n] = reflected;
                    s.values[n] = f_r;
                }
                trace.push(s.values.iter().copied().fold(f64::INFINITY, f64::min));
                break;
            };
            if (outside && f_c <= f_r) || (!outside && f_c < f_worst) {
                accepted = Some((candidate, f_c));
            }
        }

        match accepted {
            Some((p, v)) => {
                s.points[n] = p;
                s.values[n] = v;
            }
            None => {
                let best = s.points[0].clone();
                for k in 1..=n {
                    let moved: Vec<f64> = best
                        .iter()
                        .zip(&s.points[k])
                        .map(|(b, x)| b + cfg.shrink * (x - b))
                        .collect();
                    match eval.eval(&moved)? {
                        Some(v) => {
                            s.points[k] = moved;
                            s.values[k] = v;
                        }
                        None => {
                            trace.push(s.values.iter().copied().fold(f64::INFINITY, f64::min));
                            break 'iterate;
                        }
                    }
                }
            }
        }
        trace.push(s.values.iter().copied().fold(f64::INFINITY, f64::min));
    }
    s.order();
    Ok((s, trace))
}

/// Minimizes `objective` inside per-dimension `bounds` starting from `x0`.
pub fn minimize_field<F>(
    mut objective: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    cfg: &NelderMeadConfig,
) -> Result<FieldResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    if x0.is_empty() || x0.len() != bounds.len() {
        return Err(PbssError::InvalidStart(format!(
            "{} coordinates for {} bounds",
            x0.len(),
            bounds.len()
        )));
    }
    // Negated comparisons so NaN bounds and starts are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    for (i, (x, (lo, hi))) in x0.iter().zip(bounds).enumerate() {
        if !(lo < hi) {
            return Err(PbssError::InvalidStart(format!("empty bound {i}")));
        }
        if !(x >= lo && x <= hi) {
            return Err(PbssError::InvalidStart(format!(
                "coordinate {i} = {x} outside [{lo}, {hi}]"
            )));
        }
    }
    let edges: Vec<f64> = x0
        .iter()
        .zip(bounds)
        .map(|(x, (lo, hi))| {
            let e = cfg.initial_step * (hi - lo);
            if x + e > *hi {
                -e
            } else {
                e
            }
        })
        .collect();
    let start = regular_simplex(x0, &edges);
    let inside = |p: &[f64]| p.iter().zip(bounds).all(|(x, (lo, hi))| x >= lo && x <= hi);
    let mut eval = Evaluator {
        objective: |p: &[f64]| -> Result<Option<f64>> {
            if inside(p) {
                objective(p).map(Some)
            } else {
                Ok(None)
            }
        },
        evaluations: 0,
        budget: cfg.evaluation_budget(x0.len() + 1),
    };
    let (simplex, trace) = nelder_mead(&mut eval, start, cfg)?;
    Ok(FieldResult {
        x: simplex.points[0].clone(),
        value: simplex.values[0],
        trace,
        evaluations: eval.evaluations,
    })
}

/// Unit vectors orthogonal to `orthogonal_to`, placed at `center + radius·u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereDomain {
    center: DVector<f64>,
    radius: f64,
    orthogonal_to: Vec<DVector<f64>>,
}

impl SphereDomain {
    pub fn new(
        center: DVector<f64>,
        radius: f64,
        orthogonal_to: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(PbssError::param("radius", format!("{radius} must be positive")));
        }
        let d = center.len();
        if d == 0 {
            return Err(PbssError::param("center", "must be non-empty"));
        }
        if orthogonal_to.len() >= d {
            return Err(PbssError::OverConstrained {
                constraints: orthogonal_to.len(),
                dim: d,
            });
        }
        for (i, v) in orthogonal_to.iter().enumerate() {
            if v.len() != d {
                return Err(PbssError::DimensionMismatch(format!(
                    "constraint {i} has {} entries, expected {d}",
                    v.len()
                )));
            }
            for (j, w) in orthogonal_to.iter().enumerate().take(i + 1) {
                let want = if i == j { 1.0 } else { 0.0 };
                if (v.dot(w) - want).abs() > 1e-9 {
                    return Err(PbssError::param(
                        "orthogonal_to",
                        "constraint vectors must be orthonormal",
                    ));
                }
            }
        }
        Ok(Self {
            center,
            radius,
            orthogonal_to,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn constraints(&self) -> &[DVector<f64>] {
        &self.orthogonal_to
    }

    pub fn point(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.center + u * self.radius
    }

    /// Dimension of the feasible subspace, `d − k`.
    pub fn free_dims(&self) -> usize {
        self.dim() - self.orthogonal_to.len()
    }

    /// Orthonormal basis of the complement of the constraints, built by
    /// greedy Gram-Schmidt over the coordinate axes.
    pub fn feasible_basis(&self) -> Vec<DVector<f64>> {
        let d = self.dim();
        let mut span: Vec<DVector<f64>> = self.orthogonal_to.clone();
        let mut basis = Vec::with_capacity(self.free_dims());
        let mut remaining: Vec<usize> = (0..d).collect();
        while basis.len() < self.free_dims() {
            let (pos, residual) = remaining
                .iter()
                .enumerate()
                .map(|(pos, &axis)| (pos, project_out(&DVector::from_fn(d, |r, _| f64::from(u8::from(r == axis))), &span)))
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .expect("constraint count below dimension leaves an axis");
            remaining.remove(pos);
            let v = residual.normalize();
            span.push(v.clone());
            basis.push(v);
        }
        basis
    }

    /// Removes constraint components and renormalizes.
    pub fn clean(&self, u: &DVector<f64>) -> DVector<f64> {
        project_out(&project_out(u, &self.orthogonal_to), &self.orthogonal_to).normalize()
    }
}

fn project_out(v: &DVector<f64>, span: &[DVector<f64>]) -> DVector<f64> {
    let mut r = v.clone();
    for s in span {
        let c = r.dot(s);
        r.axpy(-c, s, 1.0);
    }
    r
}

/// Hyperspherical angles to a unit coordinate vector of length `angles.len() + 1`.
pub fn angles_to_unit(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut sin_prod = 1.0;
    for a in angles {
        out.push(sin_prod * a.cos());
        sin_prod *= a.sin();
    }
    out.push(sin_prod);
    out
}

/// Inverse of [`angles_to_unit`] for a unit (or nonzero) vector.
pub fn unit_to_angles(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut angles = Vec::with_capacity(n.saturating_sub(1));
    for j in 0..n.saturating_sub(1) {
        let tail = x[j + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if j == n - 2 {
            angles.push(x[n - 1].atan2(x[n - 2]));
        } else {
            angles.push(tail.atan2(x[j]));
        }
    }
    angles
}

/// Optimizes `objective(u)` over the feasible unit vectors of `domain`.
///
/// The search starts from `seed` projected onto the feasible subspace (the
/// first basis vector when absent or orthogonal). With a single free
/// dimension the direction is forced and only the sign is chosen; ties keep
/// the positive basis direction.
pub fn optimize_on_sphere<F>(
    mut objective: F,
    domain: &SphereDomain,
    cfg: &NelderMeadConfig,
    maximize: bool,
    seed: Option<&DVector<f64>>,
) -> Result<SphereResult>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    cfg.validate()?;
    let basis = domain.feasible_basis();
    let sign = if maximize { -1.0 } else { 1.0 };
    let to_unit = |coords: &[f64]| -> DVector<f64> {
        let mut u = DVector::zeros(domain.dim());
        for (c, b) in coords.iter().zip(&basis) {
            u.axpy(*c, b, 1.0);
        }
        domain.clean(&u)
    };

    if basis.len() == 1 {
        let plus = to_unit(&[1.0]);
        let minus = to_unit(&[-1.0]);
        let f_plus = objective(&plus)?;
        let f_minus = objective(&minus)?;
        let (u, value) = if sign * f_minus < sign * f_plus {
            (minus, f_minus)
        } else {
            (plus, f_plus)
        };
        return Ok(SphereResult {
            u,
            value,
            trace: vec![value],
            evaluations: 2,
        });
    }

    let mut coords: Vec<f64> = match seed {
        Some(s) if s.len() == domain.dim() => basis.iter().map(|b| b.dot(s)).collect(),
        Some(s) => {
            return Err(PbssError::DimensionMismatch(format!(
                "seed has {} entries, expected {}",
                s.len(),
                domain.dim()
            )))
        }
        None => vec![0.0; basis.len()],
    };
    let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm < 1e-12 {
        coords.iter_mut().for_each(|c| *c = 0.0);
        coords[0] = 1.0;
    } else {
        coords.iter_mut().for_each(|c| *c /= norm);
    }
    let theta0 = unit_to_angles(&coords);
    let start = regular_simplex(&theta0, &vec![cfg.sphere_step; theta0.len()]);

    let mut eval = Evaluator {
        objective: |theta: &[f64]| -> Result<Option<f64>> {
            let u = to_unit(&angles_to_unit(theta));
            objective(&u).map(|v| Some(sign * v))
        },
        evaluations: 0,
        budget: cfg.evaluation_budget(theta0.len() + 1),
    };
    let (simplex, trace) = nelder_mead(&mut eval, start, cfg)?;
    Ok(SphereResult {
        u: to_unit(&angles_to_unit(&simplex.points[0])),
        value: sign * simplex.values[0],
        trace: trace.into_iter().map(|v| sign * v).collect(),
        evaluations: eval.evaluations,
    })
}
