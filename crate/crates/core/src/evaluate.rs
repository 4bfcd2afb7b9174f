//! Wasserstein-1 distances, predictive metrics and run summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::targets::{Dataset, MlpTarget, Target, LN_2PI};

/// Largest n·m accepted by [`wasserstein1`].
pub const MAX_TRANSPORT_PAIRS: usize = 1 << 22;

/// Exact W₁ between the empirical measures of the rows of `a` and `b`
/// with Euclidean ground cost.
pub fn wasserstein1(a: &Matrix, b: &Matrix) -> Result<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    if n == 0 || m == 0 {
        return Err(Error::NoSamples("both sample sets must be non-empty".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    if n.saturating_mul(m) > MAX_TRANSPORT_PAIRS {
        return Err(Error::TooLarge {
            n,
            m,
            cap: MAX_TRANSPORT_PAIRS,
        });
    }
    let d = a.ncols();
    let mut cost = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..d {
                let diff = a[(i, k)] - b[(j, k)];
                s += diff * diff;
            }
            cost[i * m + j] = s.sqrt();
        }
    }
    let total = TransportSimplex::new(n, m, cost).solve();
    Ok(total / (n * m) as f64)
}

/// Exact 1D W₁ for equal-size samples: mean gap between sorted values.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::NoSamples("empty sample".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    Ok(sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

const NONE: usize = usize::MAX;

/// Primal network simplex on the complete bipartite graph with supplies m at
/// each of n sources and demands n at each of m sinks.
///
/// Arcs `i*m + j` are the transport arcs; arc `n*m + u` is the artificial arc
/// between node u and the root. Every arc is uncapacitated. The tree is kept
/// as parent pointers plus child lists; pivoting uses block search pricing and
/// the leaving-arc rule that keeps the basis strongly feasible.
struct TransportSimplex {
    n: usize,
    m: usize,
    cost: Vec<f64>,
    art_cost: f64,
    flow: Vec<i64>,
    in_tree: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    // true when the pred arc points from the node to its parent
    up: Vec<bool>,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
    pi: Vec<f64>,
    next_arc: usize,
    block: usize,
    eps: f64,
}

impl TransportSimplex {
    fn new(n: usize, m: usize, cost: Vec<f64>) -> Self {
        let nodes = n + m + 1;
        let root = n + m;
        let max_cost = cost.iter().fold(0.0f64, |acc, &c| acc.max(c));
        let art_cost = (max_cost + 1.0) * nodes as f64;
        let arcs = n * m + n + m;
        let mut s = Self {
            n,
            m,
            cost,
            art_cost,
            flow: vec![0; arcs],
            in_tree: vec![false; arcs],
            parent: vec![NONE; nodes],
            pred: vec![NONE; nodes],
            up: vec![false; nodes],
            depth: vec![0; nodes],
            children: vec![Vec::new(); nodes],
            pi: vec![0.0; nodes],
            next_arc: 0,
            block: ((n * m) as f64).sqrt().ceil().max(10.0) as usize,
            eps: 1e-12 * (max_cost + 1.0),
        };
        for u in 0..n + m {
            let a = n * m + u;
            s.in_tree[a] = true;
            s.parent[u] = root;
            s.pred[u] = a;
            s.depth[u] = 1;
            s.children[root].push(u);
            if u < n {
                s.up[u] = true;
                s.flow[a] = m as i64;
                s.pi[u] = -art_cost;
            } else {
                s.up[u] = false;
                s.flow[a] = n as i64;
                s.pi[u] = art_cost;
            }
        }
        s
    }

    fn ends(&self, a: usize) -> (usize, usize) {
        let nm = self.n * self.m;
        if a < nm {
            (a / self.m, self.n + a % self.m)
        } else {
            let u = a - nm;
            let root = self.n + self.m;
            if u < self.n {
                (u, root)
            } else {
                (root, u)
            }
        }
    }

    fn arc_cost(&self, a: usize) -> f64 {
        if a < self.n * self.m {
            self.cost[a]
        } else {
            self.art_cost
        }
    }

    fn reduced_cost(&self, a: usize) -> f64 {
        let (s, t) = self.ends(a);
        self.arc_cost(a) + self.pi[s] - self.pi[t]
    }

    /// Block search over transport arcs for the most negative reduced cost.
    fn find_entering(&mut self) -> Option<usize> {
        let total = self.n * self.m;
        let mut best = NONE;
        let mut best_rc = -self.eps;
        let mut count = 0;
        let mut a = self.next_arc;
        for _ in 0..total {
            if !self.in_tree[a] {
                let rc = self.cost[a] + self.pi[a / self.m] - self.pi[self.n + a % self.m];
                if rc < best_rc {
                    best_rc = rc;
                    best = a;
                }
            }
            count += 1;
            a += 1;
            if a == total {
                a = 0;
            }
            if count == self.block {
                if best != NONE {
                    self.next_arc = a;
                    return Some(best);
                }
                count = 0;
            }
        }
        if best != NONE {
            self.next_arc = a;
            Some(best)
        } else {
            None
        }
    }

    fn join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        u
    }

    fn pivot(&mut self, e: usize) {
        let (u, v) = self.ends(e);
        let w = self.join(u, v);

        // Flow moves along e from u to v, up from v to w, down from w to u.
        let mut delta = i64::MAX;
        let mut u_out = NONE;
        let mut first_side = true;
        let mut x = u;
        while x != w {
            if self.up[x] && self.flow[self.pred[x]] < delta {
                delta = self.flow[self.pred[x]];
                u_out = x;
            }
            x = self.parent[x];
        }
        let mut x = v;
        while x != w {
            if !self.up[x] && self.flow[self.pred[x]] <= delta {
                delta = self.flow[self.pred[x]];
                u_out = x;
                first_side = false;
            }
            x = self.parent[x];
        }
        debug_assert!(u_out != NONE, "transport arcs are uncapacitated, so the cycle is bounded");

        if delta > 0 {
            self.flow[e] += delta;
            let mut x = u;
            while x != w {
                let a = self.pred[x];
                if self.up[x] {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
                x = self.parent[x];
            }
            let mut x = v;
            while x != w {
                let a = self.pred[x];
                if self.up[x] {
                    self.flow[a] += delta;
                } else {
                    self.flow[a] -= delta;
                }
                x = self.parent[x];
            }
        }

        let (u_in, v_in) = if first_side { (u, v) } else { (v, u) };
        let rc = self.reduced_cost(e);
        self.in_tree[self.pred[u_out]] = false;
        self.in_tree[e] = true;

        // Re-hang the path u_in → u_out below v_in, reversing its links.
        let mut x = u_in;
        let mut new_parent = v_in;
        let mut new_pred = e;
        let mut new_up = u_in == u;
        loop {
            let old_parent = self.parent[x];
            let old_pred = self.pred[x];
            let old_up = self.up[x];
            let siblings = &mut self.children[old_parent];
            let pos = siblings.iter().position(|&c| c == x).expect("child link present");
            siblings.swap_remove(pos);
            self.parent[x] = new_parent;
            self.pred[x] = new_pred;
            self.up[x] = new_up;
            self.children[new_parent].push(x);
            if x == u_out {
                break;
            }
            new_parent = x;
            new_pred = old_pred;
            new_up = !old_up;
            x = old_parent;
        }

        // Restore zero reduced cost on e across the re-hung subtree.
        let shift = if u_in == u { -rc } else { rc };
        let mut stack = vec![u_in];
        while let Some(x) = stack.pop() {
            self.pi[x] += shift;
            self.depth[x] = self.depth[self.parent[x]] + 1;
            stack.extend_from_slice(&self.children[x]);
        }
    }

    fn solve(mut self) -> f64 {
        while let Some(e) = self.find_entering() {
            self.pivot(e);
        }
        let nm = self.n * self.m;
        debug_assert!(self.flow[nm..].iter().all(|&f| f == 0), "artificial arcs carry no flow");
        self.flow[..nm]
            .iter()
            .zip(&self.cost)
            .filter(|(f, _)| **f > 0)
            .map(|(&f, &c)| f as f64 * c)
            .sum()
    }
}

/// Predictive mean squared error and negative log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveMetrics {
    pub mse: f64,
    pub nll: f64,
}

/// MSE of the posterior-mean predictor and NLL of the Gaussian mixture
/// predictive, over the rows of `samples`.
pub fn predictive_metrics(samples: &Matrix, target: &MlpTarget, test: &Dataset) -> Result<PredictiveMetrics> {
    let s = samples.nrows();
    if s == 0 {
        return Err(Error::NoSamples("predictive metrics need at least one ok sample".into()));
    }
    if samples.ncols() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: samples.ncols(),
        });
    }
    if test.n_features() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: test.n_features(),
        });
    }
    let sigma = target.config().noise_std;
    let thetas: Vec<_> = (0..s).map(|i| samples.row(i).transpose()).collect();
    let mut se = 0.0;
    let mut nll = 0.0;
    let mut logs = vec![0.0; s];
    for k in 0..test.len() {
        let x = test.x[(k, 0)];
        let y = test.y[k];
        let mut mean = 0.0;
        for (i, th) in thetas.iter().enumerate() {
            let f = target.predict(th, x);
            mean += f;
            let z = (y - f) / sigma;
            logs[i] = -0.5 * z * z - sigma.ln() - 0.5 * LN_2PI;
        }
        mean /= s as f64;
        se += (mean - y).powi(2);
        nll -= log_sum_exp(&logs) - (s as f64).ln();
    }
    let n = test.len() as f64;
    Ok(PredictiveMetrics {
        mse: se / n,
        nll: nll / n,
    })
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let mx = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + x.iter().map(|v| (v - mx).exp()).sum::<f64>().ln()
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One repetition of an experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub value: f64,
    pub mean_nfev: f64,
    pub n_failed: usize,
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metric_name: String,
    pub value_mean: f64,
    /// Population standard deviation across runs.
    pub value_std: f64,
    pub n_runs: usize,
    pub mean_nfev: f64,
    pub n_failed: usize,
    /// Only recorded when timing is requested, so reports stay reproducible.
    pub wall_time_s: Option<f64>,
    pub values: Vec<f64>,
}

impl EvaluationReport {
    /// "[mean, std]" rounded to three decimals.
    pub fn cell(&self) -> String {
        format!("[{}, {}]", round3(self.value_mean), round3(self.value_std))
    }
}

pub fn summarize(metric_name: &str, runs: &[RunResult]) -> Result<EvaluationReport> {
    if runs.is_empty() {
        return Err(Error::NoSamples("summary needs at least one run".into()));
    }
    let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let (value_mean, value_std) = mean_std(&values);
    let nfev: Vec<f64> = runs.iter().map(|r| r.mean_nfev).filter(|v| v.is_finite()).collect();
    let mean_nfev = if nfev.is_empty() {
        f64::NAN
    } else {
        nfev.iter().sum::<f64>() / nfev.len() as f64
    };
    let wall_time_s = runs
        .iter()
        .map(|r| r.wall_time_s)
        .collect::<Option<Vec<f64>>>()
        .map(|t| t.iter().sum::<f64>() / t.len() as f64);
    Ok(EvaluationReport {
        metric_name: metric_name.to_string(),
        value_mean,
        value_std,
        n_runs: runs.len(),
        mean_nfev,
        n_failed: runs.iter().map(|r| r.n_failed).sum(),
        wall_time_s,
        values,
    })
}

/// Rounds to three decimals and prints the shortest form, keeping one
/// fractional digit for whole numbers (0.0, 1.5, 0.143).
pub fn round3(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = (x * 1000.0).round() / 1000.0;
    let r = if r == 0.0 { 0.0 } else { r };
    let s = format!("{r}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

/// Like [`round3`] with one decimal, for function-evaluation counts.
pub fn round1(x: f64) -> String {
    if !x.is_finite() {
        return "-".into();
    }
    format!("{x:.1}")
}
