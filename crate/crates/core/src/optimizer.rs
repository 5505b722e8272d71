//! Derivative-free minimization.
//!
//! [`Method::Cobyla`] is Powell's COBYLA specialized to the unconstrained
//! case: a simplex of `n + 1` points defines a linear model of the objective,
//! each step moves a distance `rho` against the model gradient, and `rho`
//! shrinks from `initial_step` to `convergence_tolerance` when steps stop
//! paying off. [`Method::NelderMead`] is the classic reflection/expansion
//! simplex search and terminates when the simplex radius falls below the
//! same tolerance.
//!
//! Every objective evaluation is appended to the returned history in call
//! order; callers that attach side effects to evaluations (shot accounting)
//! see exactly that sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Cobyla,
    NelderMead,
}

impl Method {
    pub fn description(self) -> &'static str {
        match self {
            Method::Cobyla => "cobyla (unconstrained linear-model trust region)",
            Method::NelderMead => "nelder-mead simplex",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    pub method: Method,
    /// Maximum number of objective evaluations.
    pub max_iterations: usize,
    /// Initial trust-region radius / simplex edge, radians.
    pub initial_step: f64,
    /// Final trust-region radius / simplex radius.
    pub convergence_tolerance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            method: Method::Cobyla,
            max_iterations: 1000,
            initial_step: 0.5,
            convergence_tolerance: 1e-4,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidOptions("max_iterations must be >= 1".into()));
        }
        if !(self.convergence_tolerance > 0.0 && self.convergence_tolerance.is_finite()) {
            return Err(Error::InvalidOptions("convergence_tolerance must be > 0".into()));
        }
        if !(self.initial_step >= self.convergence_tolerance && self.initial_step.is_finite()) {
            return Err(Error::InvalidOptions(
                "initial_step must be finite and >= convergence_tolerance".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The simplex became numerically degenerate.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub stop: StopReason,
    pub history: Vec<Evaluation>,
}

/// Minimizes `objective` from `x0`. The objective may fail; its error aborts the run.
pub fn minimize<F>(objective: F, x0: &[f64], options: &OptimizerOptions) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    options.validate()?;
    if x0.is_empty() {
        return Err(Error::InvalidOptions("empty starting point".into()));
    }
    let mut counter = Counter {
        objective,
        history: Vec::new(),
        budget: options.max_iterations,
    };
    let (x_best, f_best, stop) = match options.method {
        Method::Cobyla => cobyla(&mut counter, x0, options)?,
        Method::NelderMead => nelder_mead(&mut counter, x0, options)?,
    };
    Ok(OptimizeResult {
        x_best,
        f_best,
        stop,
        history: counter.history,
    })
}

struct Counter<F> {
    objective: F,
    history: Vec<Evaluation>,
    budget: usize,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Counter<F> {
    fn exhausted(&self) -> bool {
        self.history.len() >= self.budget
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let value = (self.objective)(x)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective {
                evaluation: self.history.len(),
                value,
            });
        }
        self.history.push(Evaluation { x: x.to_vec(), value });
        Ok(value)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

/// Inverse of the matrix whose columns are `cols`, or `None` if singular.
/// Result is row-major: `inv[j]` is row `j`.
fn invert_columns(cols: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = cols.len();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale = a.iter().flat_map(|r| r.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .expect("nonempty range");
        if a[pivot][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                if factor != 0.0 {
                    for j in 0..n {
                        a[r][j] -= factor * a[col][j];
                        inv[r][j] -= factor * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

// Powell's acceptability and step constants.
const ALPHA: f64 = 0.25;
const BETA: f64 = 2.1;
const GAMMA: f64 = 0.5;
const DELTA: f64 = 1.1;

struct Simplex {
    /// Absolute vertex positions with their objective values.
    points: Vec<(Vec<f64>, f64)>,
    pole: usize,
}

/// Linear-model geometry of the simplex around its pole.
struct Geometry {
    /// Indices into `points` of the non-pole vertices, in column order.
    others: Vec<usize>,
    /// Displacement of each non-pole vertex from the pole.
    sim: Vec<Vec<f64>>,
    /// Rows of the inverse of the displacement matrix.
    simi: Vec<Vec<f64>>,
    /// Distance from each vertex to its opposite face.
    vsig: Vec<f64>,
    /// Distance from each vertex to the pole.
    veta: Vec<f64>,
    gradient: Vec<f64>,
}

impl Simplex {
    fn pole_point(&self) -> &[f64] {
        &self.points[self.pole].0
    }

    fn pole_value(&self) -> f64 {
        self.points[self.pole].1
    }

    /// Moves the pole to the lowest vertex (first wins on ties with the current pole).
    fn select_pole(&mut self) {
        let mut best = self.pole;
        for (i, (_, f)) in self.points.iter().enumerate() {
            if *f < self.points[best].1 {
                best = i;
            }
        }
        self.pole = best;
    }

    fn geometry(&self) -> Option<Geometry> {
        let pole = self.pole_point();
        let f0 = self.pole_value();
        let others: Vec<usize> = (0..self.points.len()).filter(|&i| i != self.pole).collect();
        let sim: Vec<Vec<f64>> = others
            .iter()
            .map(|&i| self.points[i].0.iter().zip(pole).map(|(a, b)| a - b).collect())
            .collect();
        let simi = invert_columns(&sim)?;
        let vsig = simi.iter().map(|row| 1.0 / norm(row)).collect();
        let veta = sim.iter().map(|d| norm(d)).collect();
        let n = pole.len();
        let mut gradient = vec![0.0; n];
        for (j, &idx) in others.iter().enumerate() {
            let df = self.points[idx].1 - f0;
            for i in 0..n {
                gradient[i] += df * simi[j][i];
            }
        }
        Some(Geometry {
            others,
            sim,
            simi,
            vsig,
            veta,
            gradient,
        })
    }
}

// The simplex bookkeeping walks several per-vertex arrays in lockstep.
#[allow(clippy::needless_range_loop)]
fn cobyla<F>(counter: &mut Counter<F>, x0: &[f64], options: &OptimizerOptions) -> Result<(Vec<f64>, f64, StopReason)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let rhoend = options.convergence_tolerance;
    let mut rho = options.initial_step;

    let f0 = counter.eval(x0)?;
    let mut simplex = Simplex {
        points: vec![(x0.to_vec(), f0)],
        pole: 0,
    };
    for j in 0..n {
        if counter.exhausted() {
            let best = simplex.points[simplex.pole].clone();
            return Ok((best.0, best.1, StopReason::MaxIterations));
        }
        let mut x = simplex.pole_point().to_vec();
        x[j] += rho;
        let f = counter.eval(&x)?;
        simplex.points.push((x, f));
        if f < simplex.pole_value() {
            simplex.pole = simplex.points.len() - 1;
        }
    }

    let mut trust_branch = false;
    let stop = loop {
        simplex.select_pole();
        let Some(geo) = simplex.geometry() else {
            break StopReason::Degenerate;
        };
        let parsig = ALPHA * rho;
        let pareta = BETA * rho;
        let acceptable = geo
            .vsig
            .iter()
            .zip(&geo.veta)
            .all(|(&s, &e)| s >= parsig && e <= pareta);

        if !trust_branch && !acceptable {
            // Replace the worst-shaped vertex by a point along its face normal.
            let mut jdrop = None;
            let mut limit = pareta;
            for (j, &e) in geo.veta.iter().enumerate() {
                if e > limit {
                    jdrop = Some(j);
                    limit = e;
                }
            }
            if jdrop.is_none() {
                for (j, &s) in geo.vsig.iter().enumerate() {
                    if s < limit {
                        jdrop = Some(j);
                        limit = s;
                    }
                }
            }
            let j = jdrop.expect("unacceptable simplex has a culprit vertex");
            let mut dx: Vec<f64> = geo.simi[j].iter().map(|v| GAMMA * rho * geo.vsig[j] * v).collect();
            if dot(&geo.gradient, &dx) > 0.0 {
                dx.iter_mut().for_each(|v| *v = -*v);
            }
            if counter.exhausted() {
                break StopReason::MaxIterations;
            }
            let x = axpy(simplex.pole_point(), 1.0, &dx);
            let f = counter.eval(&x)?;
            simplex.points[geo.others[j]] = (x, f);
            continue;
        }

        let gnorm = norm(&geo.gradient);
        let mut reduce = true;
        if gnorm > 0.0 && gnorm.is_finite() {
            let dx: Vec<f64> = geo.gradient.iter().map(|g| -rho * g / gnorm).collect();
            if counter.exhausted() {
                break StopReason::MaxIterations;
            }
            let x = axpy(simplex.pole_point(), 1.0, &dx);
            let f = counter.eval(&x)?;
            trust_branch = true;

            let predicted = rho * gnorm;
            let actual = simplex.pole_value() - f;

            let mut jdrop = None;
            let mut best_coord = if actual <= 0.0 { 1.0 } else { 0.0 };
            let mut sigbar = vec![0.0; n];
            for j in 0..n {
                let coord = dot(&geo.simi[j], &dx).abs();
                if coord > best_coord {
                    jdrop = Some(j);
                    best_coord = coord;
                }
                sigbar[j] = coord * geo.vsig[j];
            }
            let mut edgmax = DELTA * rho;
            let mut far = None;
            for j in 0..n {
                if sigbar[j] >= parsig || sigbar[j] >= geo.vsig[j] {
                    let dist = if actual > 0.0 {
                        norm(&dx.iter().zip(&geo.sim[j]).map(|(a, b)| a - b).collect::<Vec<_>>())
                    } else {
                        geo.veta[j]
                    };
                    if dist > edgmax {
                        far = Some(j);
                        edgmax = dist;
                    }
                }
            }
            if far.is_some() {
                jdrop = far;
            }
            if let Some(j) = jdrop {
                simplex.points[geo.others[j]] = (x, f);
                if actual > 0.0 && actual >= 0.1 * predicted {
                    reduce = false;
                }
            }
        } else {
            trust_branch = true;
        }

        if !reduce {
            continue;
        }
        if !acceptable {
            trust_branch = false;
            continue;
        }
        if rho > rhoend {
            rho *= 0.5;
            if rho <= 1.5 * rhoend {
                rho = rhoend;
            }
            continue;
        }
        break StopReason::Converged;
    };
    simplex.select_pole();
    let (x, f) = simplex.points[simplex.pole].clone();
    Ok((x, f, stop))
}

fn nelder_mead<F>(
    counter: &mut Counter<F>,
    x0: &[f64],
    options: &OptimizerOptions,
) -> Result<(Vec<f64>, f64, StopReason)>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let mut points = vec![(x0.to_vec(), counter.eval(x0)?)];
    for j in 0..n {
        if counter.exhausted() {
            break;
        }
        let mut x = x0.to_vec();
        x[j] += options.initial_step;
        let f = counter.eval(&x)?;
        points.push((x, f));
    }
    let order = |pts: &mut Vec<(Vec<f64>, f64)>| pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    let stop = loop {
        order(&mut points);
        if points.len() < n + 1 || counter.exhausted() {
            break StopReason::MaxIterations;
        }
        let radius = points[1..]
            .iter()
            .map(|(x, _)| norm(&x.iter().zip(&points[0].0).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        if radius <= options.convergence_tolerance {
            break StopReason::Converged;
        }
        let worst = points[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|i| points[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = toward(1.0);
        let fr = counter.eval(&xr)?;
        if fr < points[0].1 {
            if counter.exhausted() {
                points[n] = (xr, fr);
                continue;
            }
            let xe = toward(2.0);
            let fe = counter.eval(&xe)?;
            points[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < points[n - 1].1 {
            points[n] = (xr, fr);
            continue;
        }
        if counter.exhausted() {
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = toward(0.5);
            let fc = counter.eval(&xc)?;
            (xc, fc)
        } else {
            let xc = toward(-0.5);
            let fc = counter.eval(&xc)?;
            (xc, fc)
        };
        if fc < fr.min(worst.1) {
            points[n] = (xc, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = points[0].0.clone();
        for p in points.iter_mut().skip(1) {
            if counter.exhausted() {
                break;
            }
            let x: Vec<f64> = best.iter().zip(&p.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            let f = counter.eval(&x)?;
            *p = (x, f);
        }
    };
    order(&mut points);
    let (x, f) = points.swap_remove(0);
    Ok((x, f, stop))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    fn run(method: Method, f: impl Fn(&[f64]) -> f64, x0: &[f64], max: usize) -> OptimizeResult {
        let options = OptimizerOptions {
            method,
            max_iterations: max,
            ..OptimizerOptions::default()
        };
        minimize(|x| Ok(f(x)), x0, &options).unwrap()
    }

    #[test]
    fn convex_one_dimensional() {
        for method in [Method::Cobyla, Method::NelderMead] {
            let r = run(method, |x| (x[0] - 1.0).powi(2), &[0.0], 1000);
            assert!((r.x_best[0] - 1.0).abs() < 1e-3, "{method:?}: {:?}", r.x_best);
            assert_eq!(r.stop, StopReason::Converged);
        }
    }

    #[test]
    fn paraboloid() {
        for method in [Method::Cobyla, Method::NelderMead] {
            let r = run(method, |x| x[0] * x[0] + x[1] * x[1], &[3.0, -2.0], 1000);
            assert!(norm(&r.x_best) < 1e-3, "{method:?}: {:?}", r.x_best);
        }
    }

    #[test]
    fn rosenbrock_nelder_mead() {
        let r = run(Method::NelderMead, rosenbrock, &[-1.2, 1.0], 1000);
        assert!(r.history.len() <= 1000);
        assert!(r.f_best < 1e-2, "f = {}", r.f_best);
    }

    /// Linear-model steps crawl along the Rosenbrock valley; COBYLA needs a
    /// few thousand evaluations here, in line with other COBYLA builds.
    #[test]
    fn rosenbrock_cobyla_with_larger_budget() {
        let r = run(Method::Cobyla, rosenbrock, &[-1.2, 1.0], 6000);
        assert!(r.f_best < 1e-2, "f = {} after {}", r.f_best, r.history.len());
    }

    #[test]
    fn history_is_every_evaluation_in_order() {
        let mut seen = Vec::new();
        let r = minimize(
            |x| {
                seen.push(x.to_vec());
                Ok((x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2))
            },
            &[0.0, 0.0],
            &OptimizerOptions::default(),
        )
        .unwrap();
        assert_eq!(seen.len(), r.history.len());
        for (a, b) in seen.iter().zip(&r.history) {
            assert_eq!(a, &b.x);
        }
        assert!(r.history.iter().any(|e| e.value == r.f_best));
    }

    #[test]
    fn respects_evaluation_budget() {
        for method in [Method::Cobyla, Method::NelderMead] {
            let r = run(method, rosenbrock, &[-1.2, 1.0], 37);
            assert_eq!(r.history.len(), 37);
            assert_eq!(r.stop, StopReason::MaxIterations);
        }
    }

    #[test]
    fn non_finite_objective_aborts() {
        let mut calls = 0;
        let err = minimize(
            |_| {
                calls += 1;
                Ok(if calls == 3 { f64::NAN } else { 1.0 })
            },
            &[0.0, 0.0],
            &OptimizerOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { evaluation: 2, .. }));
    }

    #[test]
    fn objective_errors_propagate() {
        let err = minimize(|_| Err(Error::EmptyDistribution), &[0.0], &OptimizerOptions::default());
        assert_eq!(err.unwrap_err(), Error::EmptyDistribution);
    }

    #[test]
    fn options_validation() {
        let bad = OptimizerOptions {
            convergence_tolerance: 0.0,
            ..OptimizerOptions::default()
        };
        assert!(minimize(|_| Ok(0.0), &[0.0], &bad).is_err());
        let bad = OptimizerOptions {
            max_iterations: 0,
            ..OptimizerOptions::default()
        };
        assert!(bad.validate().is_err());
    }
}
