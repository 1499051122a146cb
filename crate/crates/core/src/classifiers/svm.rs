//! C-SVM trained by sequential minimal optimization with second-order
//! working-set selection.

use serde::{Deserialize, Serialize};

use super::encoding::OneHotEncoder;
use crate::data::Dataset;
use crate::error::{ensure, Error, Result};

const TAU: f64 = 1e-12;
/// Largest training set whose kernel matrix is held in memory.
const MAX_CACHED_ROWS: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tolerance: f64,
    /// The solver stops after `max_passes * n` pair updates.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            kernel: Kernel::Rbf { gamma: 1.0 },
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    encoder: OneHotEncoder,
    kernel: Kernel,
    /// Encoded support vectors, row-major.
    support: Vec<f64>,
    /// `alpha_i * y_i` per support vector.
    coef: Vec<f64>,
    rho: f64,
    iterations: usize,
}

impl SvmModel {
    /// `sum_i alpha_i y_i K(x_i, x) - rho`.
    pub fn decision_score(&self, x: &[f64]) -> f64 {
        let x = self.encoder.encode(x);
        let d = x.len();
        if d == 0 {
            return -self.rho;
        }
        self.support
            .chunks_exact(d)
            .zip(&self.coef)
            .map(|(sv, c)| c * self.kernel.eval(sv, &x))
            .sum::<f64>()
            - self.rho
    }

    pub fn dual_coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn n_support(&self) -> usize {
        self.coef.len()
    }

    pub fn bias(&self) -> f64 {
        -self.rho
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

enum KernelRows<'a> {
    Cached { n: usize, q: Vec<f64> },
    OnDemand { x: &'a [f64], d: usize, y: &'a [f64], kernel: Kernel },
}

impl KernelRows<'_> {
    /// Row `i` of `Q_ij = y_i y_j K(x_i, x_j)`.
    fn row<'b>(&'b self, i: usize, buf: &'b mut Vec<f64>) -> &'b [f64] {
        match self {
            KernelRows::Cached { n, q } => &q[i * n..(i + 1) * n],
            KernelRows::OnDemand { x, d, y, kernel } => {
                let xi = &x[i * d..(i + 1) * d];
                buf.clear();
                buf.extend(
                    x.chunks_exact(*d)
                        .zip(y.iter())
                        .map(|(xj, &yj)| y[i] * yj * kernel.eval(xi, xj)),
                );
                buf
            }
        }
    }
}

pub fn train_svm(train: &Dataset, params: &SvmParams) -> Result<SvmModel> {
    ensure!(!train.is_empty(), InvalidArgument, "SVM training set is empty");
    ensure!(params.c > 0.0 && params.c.is_finite(), InvalidArgument, "C must be positive");
    if let Kernel::Rbf { gamma } = params.kernel {
        ensure!(gamma > 0.0 && gamma.is_finite(), InvalidArgument, "gamma must be positive");
    }
    ensure!(params.tolerance > 0.0, InvalidArgument, "tolerance must be positive");
    ensure!(params.max_passes >= 1, InvalidArgument, "max_passes must be at least 1");

    let encoder = OneHotEncoder::new(train.schema());
    let d = encoder.n_outputs();
    let n = train.n_rows();
    let y: Vec<f64> = train.labels().iter().map(|l| l.sign()).collect();

    let n_pos = train.count_positive();
    if n_pos == 0 || n_pos == n {
        // One class: a constant decision equal to that class's sign.
        return Ok(SvmModel {
            encoder,
            kernel: params.kernel,
            support: Vec::new(),
            coef: Vec::new(),
            rho: -y[0],
            iterations: 0,
        });
    }

    let x = encoder.encode_rows(train.rows());
    let diag: Vec<f64> = x.chunks_exact(d).map(|xi| params.kernel.eval(xi, xi)).collect();
    ensure!(
        diag.iter().all(|v| v.is_finite()),
        Training,
        "kernel produced non-finite values"
    );
    let rows = if n <= MAX_CACHED_ROWS {
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = y[i] * y[j] * params.kernel.eval(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]);
                q[i * n + j] = v;
                q[j * n + i] = v;
            }
        }
        ensure!(
            q.iter().all(|v| v.is_finite()),
            Training,
            "kernel produced non-finite values"
        );
        KernelRows::Cached { n, q }
    } else {
        KernelRows::OnDemand {
            x: &x,
            d,
            y: &y,
            kernel: params.kernel,
        }
    };

    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut buf_i = Vec::new();
    let mut buf_j = Vec::new();
    let max_iter = params.max_passes.saturating_mul(n);
    let mut iter = 0;
    let is_up = |a: f64, yt: f64| if yt > 0.0 { a < c } else { a > 0.0 };
    let is_low = |a: f64, yt: f64| if yt > 0.0 { a > 0.0 } else { a < c };

    while iter < max_iter {
        // first index: maximal violation among rows that can move up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if is_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else { break };
        let qi = rows.row(i, &mut buf_i).to_vec();

        // second index: largest second-order decrease of the objective
        let mut gmax2 = f64::NEG_INFINITY;
        let mut obj_min = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            if !is_low(alpha[t], y[t]) {
                continue;
            }
            gmax2 = gmax2.max(y[t] * grad[t]);
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let mut a = diag[i] + diag[t] - 2.0 * y[i] * y[t] * qi[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < params.tolerance {
            break;
        }
        let Some(j) = j_sel else { break };
        let qj = rows.row(j, &mut buf_j);
        iter += 1;

        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] + 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - 2.0 * qi[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for t in 0..n {
            grad[t] += qi[t] * dai + qj[t] * daj;
        }
    }
    if iter >= max_iter {
        log::debug!("SMO stopped at the iteration cap ({max_iter})");
    }

    let rho = compute_rho(&alpha, &grad, &y, c);
    let mut support = Vec::new();
    let mut coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support.extend_from_slice(&x[t * d..(t + 1) * d]);
            coef.push(alpha[t] * y[t]);
        }
    }
    if !rho.is_finite() {
        return Err(Error::Training("SVM offset is not finite".into()));
    }
    Ok(SvmModel {
        encoder,
        kernel: params.kernel,
        support,
        coef,
        rho,
        iterations: iter,
    })
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    }
}
