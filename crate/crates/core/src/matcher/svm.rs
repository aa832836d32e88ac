//! Soft-margin linear SVM on feature-difference vectors.
//!
//! Training solves `min ½‖w̃‖² + C Σ max(0, 1 − yᵢ w̃ᵀx̃ᵢ)` where `x̃ = [x, 1]`
//! and `w̃ = [w, b]`, so the bias is regularised together with the normal.
//! Each epoch runs one pass of dual coordinate descent over a fixed,
//! seed-derived permutation; the primal iterate then moves towards the dual
//! weight vector by an exact line search on the (piecewise quadratic)
//! primal objective, so the reported objective never increases.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textfmt::sig9;

const BIAS_FEATURE: f64 = 1.0;
/// Dual optimality required, on top of a stalled objective, before stopping.
const DUAL_VIOLATION_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub seed: u64,
    pub max_epochs: usize,
    /// Relative objective improvement below which training may stop.
    pub tolerance: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            seed: 0,
            max_epochs: 1000,
            tolerance: 1e-8,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidParams(format!("C must be positive, got {}", self.c)));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParams("max_epochs must be at least 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainMeta {
    pub epochs: usize,
    pub final_objective: f64,
    /// Primal objective at the start and after every epoch.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub normal: Vec<f64>,
    pub bias: f64,
    pub c_param: f64,
    pub seed: u64,
    /// Present on freshly trained models; not persisted in model files.
    pub train_meta: Option<TrainMeta>,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `wᵀx + b` for a prepared difference vector.
    pub fn decision(&self, diff: &[f64]) -> Result<f64> {
        if diff.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "model has dim {}, input has {}",
                self.dim(),
                diff.len()
            )));
        }
        Ok(self.normal.iter().zip(diff).map(|(w, x)| w * x).sum::<f64>() + self.bias)
    }

    /// Primal objective `½‖[w, b]‖² + C Σ hinge` on labelled data.
    pub fn objective(&self, positives: &[Vec<f64>], negatives: &[Vec<f64>]) -> Result<f64> {
        let mut hinge = 0.0;
        for (set, y) in [(positives, 1.0), (negatives, -1.0)] {
            for x in set {
                hinge += (1.0 - y * self.decision(x)?).max(0.0);
            }
        }
        let norm2 = self.normal.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias;
        Ok(0.5 * norm2 + self.c_param * hinge)
    }
}

struct Problem {
    rows: Vec<Vec<f64>>,
    labels: Vec<f64>,
    dim: usize,
}

impl Problem {
    fn dot(&self, w: &[f64], i: usize) -> f64 {
        let row = &self.rows[i];
        row.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() + BIAS_FEATURE * w[self.dim]
    }

    fn axpy(&self, w: &mut [f64], i: usize, scale: f64) {
        for (w, x) in w.iter_mut().zip(&self.rows[i]) {
            *w += scale * x;
        }
        w[self.dim] += scale * BIAS_FEATURE;
    }
}

/// Labels positives `+1` and negatives `−1`.
pub fn train_svm(positives: &[Vec<f64>], negatives: &[Vec<f64>], params: SvmParams) -> Result<SvmModel> {
    params.validate()?;
    if positives.is_empty() {
        return Err(Error::EmptyTrainingSet("no positive samples"));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyTrainingSet("no negative samples"));
    }
    let dim = positives[0].len();
    if dim == 0 {
        return Err(Error::DimensionMismatch("training vectors are empty".into()));
    }
    for x in positives.iter().chain(negatives) {
        if x.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "training vectors of dim {dim} and {}",
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
    }

    let problem = Problem {
        rows: positives.iter().chain(negatives).cloned().collect(),
        labels: positives
            .iter()
            .map(|_| 1.0)
            .chain(negatives.iter().map(|_| -1.0))
            .collect(),
        dim,
    };
    let n = problem.rows.len();
    let c = params.c;
    let q_diag: Vec<f64> = (0..n)
        .map(|i| problem.rows[i].iter().map(|x| x * x).sum::<f64>() + BIAS_FEATURE * BIAS_FEATURE)
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));

    let mut alpha = vec![0.0; n];
    let mut dual_w = vec![0.0; dim + 1];
    let mut primal = vec![0.0; dim + 1];
    let mut margins = vec![0.0; n]; // yᵢ · primalᵀx̃ᵢ
    let mut objective = primal_objective(&primal, &margins, c);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut epochs = 0;

    while epochs < params.max_epochs {
        epochs += 1;
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let y = problem.labels[i];
            let g = y * problem.dot(&dual_w, i) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q_diag[i]).clamp(0.0, c);
                problem.axpy(&mut dual_w, i, (alpha[i] - old) * y);
            }
        }

        let direction: Vec<f64> = dual_w.iter().zip(&primal).map(|(d, p)| d - p).collect();
        let slopes: Vec<f64> = (0..n).map(|i| problem.labels[i] * problem.dot(&direction, i)).collect();
        let t = exact_line_search(&primal, &direction, &margins, &slopes, c);
        if t > 0.0 {
            let candidate: Vec<f64> = primal.iter().zip(&direction).map(|(p, d)| p + t * d).collect();
            let cand_margins: Vec<f64> = (0..n).map(|i| problem.labels[i] * problem.dot(&candidate, i)).collect();
            let cand_obj = primal_objective(&candidate, &cand_margins, c);
            if cand_obj <= objective {
                primal = candidate;
                margins = cand_margins;
                let improvement = objective - cand_obj;
                objective = cand_obj;
                trace.push(objective);
                if improvement <= params.tolerance * objective.abs() && max_violation < DUAL_VIOLATION_TOL {
                    converged = true;
                    break;
                }
                continue;
            }
        }
        trace.push(objective);
        if max_violation < DUAL_VIOLATION_TOL {
            converged = true;
            break;
        }
    }

    let bias = primal[dim] * BIAS_FEATURE;
    primal.truncate(dim);
    Ok(SvmModel {
        normal: primal,
        bias,
        c_param: c,
        seed: params.seed,
        train_meta: Some(TrainMeta {
            epochs,
            final_objective: objective,
            objective_trace: trace,
            converged,
        }),
    })
}

fn primal_objective(w: &[f64], margins: &[f64], c: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    reg + c * margins.iter().map(|m| (1.0 - m).max(0.0)).sum::<f64>()
}

/// Minimiser over `t ∈ [0, 1]` of
/// `φ(t) = ½‖w + t·d‖² + C Σ max(0, 1 − mᵢ − t·sᵢ)`.
///
/// φ is convex and piecewise quadratic with kinks where a hinge term
/// switches on or off; the routine walks the kinks in order and stops on
/// the segment where the one-sided derivative changes sign.
pub(crate) fn exact_line_search(w: &[f64], d: &[f64], margins: &[f64], slopes: &[f64], c: f64) -> f64 {
    let wd: f64 = w.iter().zip(d).map(|(a, b)| a * b).sum();
    let dd: f64 = d.iter().map(|v| v * v).sum();
    if dd == 0.0 {
        return 0.0;
    }

    // sum of slopes of the hinge terms active just right of t
    let mut active_slope = 0.0;
    let mut kinks: Vec<(f64, f64)> = Vec::new();
    for (&m, &s) in margins.iter().zip(slopes) {
        let gap = 1.0 - m;
        if gap > 0.0 || (gap == 0.0 && s < 0.0) {
            active_slope += s;
        }
        if s != 0.0 {
            let t = gap / s;
            if t > 0.0 && t < 1.0 {
                kinks.push((t, s));
            }
        }
    }
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut lo = 0.0;
    let mut k = 0;
    loop {
        let deriv_at_lo = wd + lo * dd - c * active_slope;
        if deriv_at_lo >= 0.0 {
            return lo;
        }
        let hi = kinks.get(k).map_or(1.0, |kink| kink.0);
        let stationary = (c * active_slope - wd) / dd;
        if stationary < hi {
            return stationary.max(lo);
        }
        if k >= kinks.len() {
            return 1.0;
        }
        // every hinge whose kink sits at `hi` toggles together
        while k < kinks.len() && kinks[k].0 == hi {
            let s = kinks[k].1;
            if s > 0.0 {
                active_slope -= s;
            } else {
                active_slope += s;
            }
            k += 1;
        }
        lo = hi;
    }
}

pub fn model_to_string(model: &SvmModel) -> String {
    let mut out = format!(
        "svm-linear v1 dim={} C={} seed={}\n{}\n",
        model.dim(),
        sig9(model.c_param),
        model.seed,
        sig9(model.bias)
    );
    for (i, w) in model.normal.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", sig9(*w));
    }
    out.push('\n');
    out
}

pub fn save_model(model: &SvmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::write_io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SvmModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::read_io(path, e))?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<SvmModel> {
    let bad = |line: usize, message: String| Error::Parse {
        what: "svm model",
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty model file".into()))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("svm-linear") || tokens.next() != Some("v1") {
        return Err(bad(1, format!("unexpected header `{header}`")));
    }
    let (mut dim, mut c, mut seed) = (None, None, None);
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(1, format!("bad header field `{tok}`")))?;
        match k {
            "dim" => dim = v.parse::<usize>().ok(),
            "C" => c = v.parse::<f64>().ok(),
            "seed" => seed = v.parse::<u64>().ok(),
            _ => return Err(bad(1, format!("unknown header field `{k}`"))),
        }
    }
    let dim = dim.ok_or_else(|| bad(1, "missing or bad dim".into()))?;
    let c_param = c.ok_or_else(|| bad(1, "missing or bad C".into()))?;
    let seed = seed.ok_or_else(|| bad(1, "missing or bad seed".into()))?;
    let bias: f64 = lines
        .next()
        .and_then(|l| l.trim().parse().ok())
        .ok_or_else(|| bad(2, "missing or bad bias".into()))?;
    let normal = lines
        .next()
        .ok_or_else(|| bad(3, "missing normal vector".into()))?
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad(3, format!("bad component `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    if normal.len() != dim {
        return Err(bad(
            3,
            format!("header says dim={dim}, found {} components", normal.len()),
        ));
    }
    if !bias.is_finite() || normal.iter().any(|w| !w.is_finite()) {
        return Err(bad(3, "non-finite model parameter".into()));
    }
    Ok(SvmModel {
        normal,
        bias,
        c_param,
        seed,
        train_meta: None,
    })
}
