use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tfidf::SparseRow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    None,
    L1,
    L2,
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Penalty::None => "none",
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
        })
    }
}

impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Penalty::None),
            "l1" => Ok(Penalty::L1),
            "l2" => Ok(Penalty::L2),
            other => Err(Error::InvalidInput(format!("unknown penalty {other:?} (expected none, l1 or l2)"))),
        }
    }
}

/// Objective: mean negative log-likelihood + R(w) / (C * N), where R is
/// `||w||_1` (L1) or `||w||^2 / 2` (L2). The bias is never penalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub penalty: Penalty,
    pub strength_c: f64,
    pub max_iter: usize,
    /// Stop once the max-norm of the (minimum-norm sub)gradient drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { penalty: Penalty::L1, strength_c: 1.0, max_iter: 1000, tol: 1e-6, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub penalty: Penalty,
    pub strength_c: f64,
}

impl LogisticModel {
    pub fn decision(&self, row: &SparseRow) -> f64 {
        self.bias + row.iter().map(|&(j, v)| self.weights[j] * v).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &SparseRow) -> f64 {
        sigmoid(self.decision(row))
    }

    /// Fraction of weights that are exactly zero.
    pub fn sparsity(&self) -> f64 {
        if self.weights.is_empty() {
            return 0.0;
        }
        self.weights.iter().filter(|&&w| w == 0.0).count() as f64 / self.weights.len() as f64
    }
}

/// Per-iteration record of an optimizer run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    /// Objective value after each accepted iteration (index 0 = start).
    pub losses: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_norm: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() }
}

struct Problem<'a> {
    rows: &'a [SparseRow],
    y: Vec<f64>,
    dim: usize,
    /// Penalty coefficient 1 / (C * N).
    alpha: f64,
    penalty: Penalty,
}

impl Problem<'_> {
    fn n(&self) -> f64 {
        self.rows.len() as f64
    }

    /// Smooth part of the objective (NLL, plus the L2 term) and its gradient.
    /// Parameter layout: weights followed by the bias.
    fn smooth(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (w, b) = (&theta[..self.dim], theta[self.dim]);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (row, &yi) in self.rows.iter().zip(&self.y) {
            let z = b + row.iter().map(|&(j, v)| w[j] * v).sum::<f64>();
            loss += softplus(z) - yi * z;
            let r = sigmoid(z) - yi;
            for &(j, v) in row {
                grad[j] += r * v;
            }
            grad[self.dim] += r;
        }
        let n = self.n();
        loss /= n;
        grad.iter_mut().for_each(|g| *g /= n);
        if self.penalty == Penalty::L2 {
            loss += 0.5 * self.alpha * w.iter().map(|x| x * x).sum::<f64>();
            for (g, x) in grad.iter_mut().zip(w) {
                *g += self.alpha * x;
            }
        }
        loss
    }

    fn l1(&self, theta: &[f64]) -> f64 {
        if self.penalty == Penalty::L1 { self.alpha * theta[..self.dim].iter().map(|x| x.abs()).sum::<f64>() } else { 0.0 }
    }

    fn objective(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        self.smooth(theta, grad) + self.l1(theta)
    }

    /// Max-norm of the minimum-norm subgradient of the full objective.
    fn optimality(&self, theta: &[f64], grad: &[f64]) -> f64 {
        let mut m = grad[self.dim].abs();
        for j in 0..self.dim {
            let g = grad[j];
            let v = if self.penalty != Penalty::L1 {
                g.abs()
            } else if theta[j] > 0.0 {
                (g + self.alpha).abs()
            } else if theta[j] < 0.0 {
                (g - self.alpha).abs()
            } else {
                (g.abs() - self.alpha).max(0.0)
            };
            m = m.max(v);
        }
        m
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn validate(rows: &[SparseRow], dim: usize, y: &[u8], cfg: &TrainConfig) -> Result<()> {
    if rows.len() != y.len() {
        return Err(Error::InvalidInput(format!("{} feature rows but {} labels", rows.len(), y.len())));
    }
    if rows.is_empty() {
        return Err(Error::Data("no training rows".into()));
    }
    if let Some(bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!("labels must be 0/1, found {bad}")));
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::Data("training labels contain a single class".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            if j >= dim {
                return Err(Error::InvalidInput(format!("row {}: column {j} out of range {dim}", i + 1)));
            }
            if !v.is_finite() {
                return Err(Error::Data(format!("row {}: non-finite feature value", i + 1)));
            }
        }
    }
    if !(cfg.strength_c > 0.0 && cfg.strength_c.is_finite()) {
        return Err(Error::InvalidInput(format!("strength C must be positive, got {}", cfg.strength_c)));
    }
    Ok(())
}

/// Fits a binary logistic model to sparse features.
pub fn train_logistic(rows: &[SparseRow], dim: usize, y: &[u8], cfg: &TrainConfig) -> Result<LogisticModel> {
    train_logistic_traced(rows, dim, y, cfg).map(|(m, _)| m)
}

/// Same as [`train_logistic`], also returning the optimizer trace.
pub fn train_logistic_traced(rows: &[SparseRow], dim: usize, y: &[u8], cfg: &TrainConfig) -> Result<(LogisticModel, TrainTrace)> {
    validate(rows, dim, y, cfg)?;
    let problem = Problem {
        rows,
        y: y.iter().map(|&l| f64::from(l)).collect(),
        dim,
        alpha: 1.0 / (cfg.strength_c * rows.len() as f64),
        penalty: cfg.penalty,
    };
    // Zero start: the optimizers below are deterministic, so the seed is only
    // recorded, never consumed.
    let theta0 = vec![0.0; dim + 1];
    let (theta, trace) = match cfg.penalty {
        Penalty::L1 => proximal_gradient(&problem, theta0, cfg),
        Penalty::None | Penalty::L2 => lbfgs(&problem, theta0, cfg),
    };
    let model = LogisticModel { bias: theta[dim], weights: theta[..dim].to_vec(), penalty: cfg.penalty, strength_c: cfg.strength_c };
    if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
        return Err(Error::Data("optimizer produced non-finite weights".into()));
    }
    Ok((model, trace))
}

const LBFGS_MEMORY: usize = 10;

fn lbfgs(p: &Problem<'_>, mut theta: Vec<f64>, cfg: &TrainConfig) -> (Vec<f64>, TrainTrace) {
    let k = theta.len();
    let mut grad = vec![0.0; k];
    let mut loss = p.objective(&theta, &mut grad);
    let mut trace = TrainTrace { losses: vec![loss], ..TrainTrace::default() };
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut new_theta = vec![0.0; k];
    let mut new_grad = vec![0.0; k];

    for iter in 0..cfg.max_iter {
        let gnorm = p.optimality(&theta, &grad);
        trace.final_grad_norm = gnorm;
        if gnorm <= cfg.tol {
            trace.converged = true;
            break;
        }
        trace.iterations = iter + 1;

        // two-loop recursion
        let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, yv) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(yv, s);
            let a = rho * dot(s, &d);
            d.iter_mut().zip(yv).for_each(|(di, yi)| *di -= a * yi);
            alphas.push((a, rho));
        }
        let gamma = match (s_hist.last(), y_hist.last()) {
            (Some(s), Some(yv)) => dot(s, yv) / dot(yv, yv),
            _ => 1.0 / grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1.0),
        };
        d.iter_mut().for_each(|di| *di *= gamma);
        for ((s, yv), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(yv, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
        }
        let mut slope = dot(&grad, &d);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            d = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &d);
        }

        // Armijo backtracking
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            new_theta.iter_mut().zip(&theta).zip(&d).for_each(|((n, t), di)| *n = t + step * di);
            let new_loss = p.objective(&new_theta, &mut new_grad);
            if new_loss.is_finite() && new_loss <= loss + 1e-4 * step * slope {
                accepted = Some(new_loss);
                break;
            }
            step *= 0.5;
        }
        let Some(new_loss) = accepted else { break };

        let s: Vec<f64> = new_theta.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-12 * dot(&yv, &yv).sqrt() * dot(&s, &s).sqrt() {
            if s_hist.len() == LBFGS_MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
        }
        std::mem::swap(&mut theta, &mut new_theta);
        std::mem::swap(&mut grad, &mut new_grad);
        loss = new_loss;
        trace.losses.push(loss);
    }
    if !trace.converged {
        trace.final_grad_norm = p.optimality(&theta, &grad);
        trace.converged = trace.final_grad_norm <= cfg.tol;
    }
    (theta, trace)
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Monotone FISTA with backtracking on the Lipschitz estimate.
fn proximal_gradient(p: &Problem<'_>, theta: Vec<f64>, cfg: &TrainConfig) -> (Vec<f64>, TrainTrace) {
    let k = theta.len();
    let dim = p.dim;
    let mut x = theta;
    let mut x_prev = x.clone();
    let mut z = x.clone();
    let mut yk = x.clone();
    let mut grad = vec![0.0; k];
    let mut gy = vec![0.0; k];
    let mut gz = vec![0.0; k];
    let mut fx = p.objective(&x, &mut grad);
    let mut trace = TrainTrace { losses: vec![fx], ..TrainTrace::default() };
    let mut lip = 1.0_f64;
    let mut t = 1.0_f64;

    let prox_step = |point: &[f64], g: &[f64], lip: f64, out: &mut [f64]| {
        for j in 0..k {
            let v = point[j] - g[j] / lip;
            out[j] = if j < dim { soft_threshold(v, p.alpha / lip) } else { v };
        }
    };

    for iter in 0..cfg.max_iter {
        let opt = p.optimality(&x, &grad);
        trace.final_grad_norm = opt;
        if opt <= cfg.tol {
            trace.converged = true;
            break;
        }
        trace.iterations = iter + 1;

        let fy_smooth = p.smooth(&yk, &mut gy);
        lip = (lip * 0.8).max(1e-8);
        loop {
            prox_step(&yk, &gy, lip, &mut z);
            let fz_smooth = p.smooth(&z, &mut gz);
            let diff: Vec<f64> = z.iter().zip(&yk).map(|(a, b)| a - b).collect();
            let model = fy_smooth + dot(&gy, &diff) + 0.5 * lip * dot(&diff, &diff);
            if fz_smooth <= model + 1e-12 * fy_smooth.abs().max(1.0) || lip > 1e12 {
                break;
            }
            lip *= 2.0;
        }
        let fz = p.objective(&z, &mut gz);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        x_prev.copy_from_slice(&x);
        if fz <= fx {
            x.copy_from_slice(&z);
            grad.copy_from_slice(&gz);
            fx = fz;
        }
        for j in 0..k {
            yk[j] = x[j] + (t / t_next) * (z[j] - x[j]) + ((t - 1.0) / t_next) * (x[j] - x_prev[j]);
        }
        t = t_next;
        trace.losses.push(fx);
    }
    if !trace.converged {
        trace.final_grad_norm = p.optimality(&x, &grad);
        trace.converged = trace.final_grad_norm <= cfg.tol;
    }
    (x, trace)
}

/// Dense rows to the sparse layout used by the trainer.
pub fn dense_rows(rows: &[Vec<f64>]) -> Vec<SparseRow> {
    rows.iter().map(|r| r.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(penalty: Penalty, c: f64) -> TrainConfig {
        TrainConfig { penalty, strength_c: c, ..TrainConfig::default() }
    }

    #[test]
    fn separable_pair_fits() {
        let x = dense_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = train_logistic(&x, 2, &[1, 0], &cfg(Penalty::L2, 1.0)).unwrap();
        assert!(m.predict_proba(&x[0]) > 0.5);
        assert!(m.predict_proba(&x[1]) < 0.5);
    }

    #[test]
    fn uninformative_features_give_base_rate() {
        let x = dense_rows(&vec![vec![1.0, 2.0]; 8]);
        let y = [1, 0, 0, 1, 0, 0, 0, 1];
        let (m, trace) = train_logistic_traced(&x, 2, &y, &cfg(Penalty::L2, 1.0)).unwrap();
        assert!(trace.converged);
        assert!(m.weights.iter().all(|w| w.abs() < 1e-5), "{:?}", m.weights);
        let base = 3.0f64 / 8.0;
        assert!((m.bias - (base / (1.0 - base)).ln()).abs() < 1e-5);
    }

    #[test]
    fn heavy_l1_zeroes_every_weight() {
        let x = dense_rows(&[vec![1.0, 0.0, 0.3], vec![0.0, 1.0, 0.2], vec![0.5, 0.5, 0.0], vec![0.9, 0.1, 0.4]]);
        let y = [1, 0, 0, 1];
        let (m, trace) = train_logistic_traced(&x, 3, &y, &cfg(Penalty::L1, 1e-3)).unwrap();
        assert!(trace.converged);
        assert_eq!(m.sparsity(), 1.0);
        assert!(m.bias.abs() < 1e-6);
        assert!((m.predict_proba(&x[0]) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn rejects_single_class_and_nan() {
        let x = dense_rows(&[vec![1.0], vec![2.0]]);
        assert!(train_logistic(&x, 1, &[1, 1], &TrainConfig::default()).unwrap_err().to_string().contains("single class"));
        let bad = vec![vec![(0, f64::NAN)], vec![(0, 1.0)]];
        assert!(train_logistic(&bad, 1, &[1, 0], &TrainConfig::default()).unwrap_err().to_string().contains("non-finite"));
        assert!(train_logistic(&x, 1, &[1], &TrainConfig::default()).is_err());
    }

    #[test]
    fn losses_never_increase() {
        let x = dense_rows(&[
            vec![1.0, 0.2, 0.0], vec![0.1, 1.0, 0.3], vec![0.7, 0.7, 0.1], vec![0.0, 0.2, 1.0],
            vec![0.9, 0.0, 0.5], vec![0.3, 0.8, 0.8],
        ]);
        let y = [1, 0, 1, 0, 1, 0];
        for penalty in [Penalty::None, Penalty::L1, Penalty::L2] {
            let (_, trace) = train_logistic_traced(&x, 3, &y, &cfg(penalty, 1.0)).unwrap();
            assert!(trace.losses.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{penalty}");
        }
    }
}
