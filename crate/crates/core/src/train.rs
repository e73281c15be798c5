//! MM training of canonical sign-constrained networks with hinge losses.
//!
//! The objective is `J = R + J₊ + J₋` with `J₊ = Σ_pos max(0, 1 − f)`,
//! `J₋ = Σ_neg max(0, 1 + f)` and `R = λ·Σ (weight entries)²`. `J₊` is
//! convex in the parameters being trained; `J₋` is majorized by fixing
//! activation patterns at the current anchor.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construct::{build_shl_separator_with, build_thl_separator_with, rest_of, ConstructOptions};
use crate::error::{Result, ScrnError};
use crate::geometry::PointSet;
use crate::linalg::{relu, Matrix};
use crate::mm::{
    elapsed_ms, mm_minimize, mm_step, Bounds, ConvexFunction, MmOptions, MmTrace, SolverOptions, StepType, StopReason,
    SurrogateOracle,
};
use crate::network::{ActiveSet, CanonicalShl, CanonicalThl, Model};

pub const DEFAULT_LAMBDA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Random {
        seed: u64,
    },
    /// Start from the constructive separator, rescaled so margins are ≥ 1.
    Constructive,
    Warm(Model),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    /// `[l]` for single-hidden-layer training, `[l₁, l₂]` for two layers.
    /// Ignored by constructive and warm starts, which bring their own shapes.
    pub hidden: Vec<usize>,
    pub max_outer: usize,
    pub inner_budget: usize,
    pub ftol: f64,
    pub init: Init,
    pub timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let mm = MmOptions::default();
        TrainConfig {
            lambda: DEFAULT_LAMBDA,
            hidden: vec![2],
            max_outer: mm.max_outer,
            inner_budget: mm.inner.budget,
            ftol: mm.ftol,
            init: Init::Random { seed: 0 },
            timing: false,
        }
    }
}

impl TrainConfig {
    fn validate(&self, layers: usize) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(ScrnError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if matches!(self.init, Init::Random { .. }) {
            if self.hidden.len() != layers {
                return Err(ScrnError::Config(format!(
                    "expected {layers} hidden size(s), got {}",
                    self.hidden.len()
                )));
            }
            if self.hidden.contains(&0) {
                return Err(ScrnError::Config("hidden sizes must be >= 1".into()));
            }
        }
        Ok(())
    }

    fn mm_options(&self) -> MmOptions {
        MmOptions {
            ftol: self.ftol,
            max_outer: self.max_outer,
            inner: SolverOptions {
                budget: self.inner_budget,
                ..SolverOptions::default()
            },
            timing: self.timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub j_pos: f64,
    pub j_neg: f64,
    pub r: f64,
    pub total: f64,
    pub accuracy: f64,
    /// `f(x)` on each positive point.
    pub pos_scores: Vec<f64>,
    /// `f(x)` on each negative point.
    pub neg_scores: Vec<f64>,
}

/// A single-output function scored by the hinge objective.
pub trait Scored {
    fn score(&self, x: &[f64]) -> f64;
    fn weight_squared_sum(&self) -> f64;
}

impl Scored for CanonicalShl {
    fn score(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
    fn weight_squared_sum(&self) -> f64 {
        self.weights.squared_sum()
    }
}

impl Scored for CanonicalThl {
    fn score(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
    fn weight_squared_sum(&self) -> f64 {
        self.w1.squared_sum() + self.w2.squared_sum()
    }
}

/// Exact `J₊`, `J₋`, `R`. Accuracy counts `f > 0` as positive and `f ≤ 0`
/// as negative.
pub fn hinge_objective(
    model: &dyn Scored,
    pos: &PointSet,
    neg: &PointSet,
    lambda: f64,
    n_in: usize,
) -> Result<LossReport> {
    pos.check_dim(n_in)?;
    neg.check_dim(n_in)?;
    let pos_scores: Vec<f64> = pos.iter().map(|x| model.score(x)).collect();
    let neg_scores: Vec<f64> = neg.iter().map(|x| model.score(x)).collect();
    let j_pos = pos_scores.iter().map(|f| (1.0 - f).max(0.0)).sum::<f64>();
    let j_neg = neg_scores.iter().map(|f| (1.0 + f).max(0.0)).sum::<f64>();
    let r = lambda * model.weight_squared_sum();
    let correct = pos_scores.iter().filter(|&&f| f > 0.0).count() + neg_scores.iter().filter(|&&f| f <= 0.0).count();
    let total_points = pos.len() + neg.len();
    Ok(LossReport {
        j_pos,
        j_neg,
        r,
        total: j_pos + j_neg + r,
        accuracy: if total_points == 0 {
            1.0
        } else {
            correct as f64 / total_points as f64
        },
        pos_scores,
        neg_scores,
    })
}

/// Activation pattern of the canonical single-hidden-layer form at `x`.
pub fn active_set(model: &CanonicalShl, x: &[f64]) -> ActiveSet {
    model.active_set(x)
}

/// Index helpers for the `[b₀, W (n×m row-major), b]` parameter layout.
#[derive(Debug, Clone, Copy)]
struct ShlLayout {
    n: usize,
    m: usize,
}

impl ShlLayout {
    fn len(&self) -> usize {
        1 + self.n * self.m + self.m
    }
    fn w(&self, i: usize, k: usize) -> usize {
        1 + i * self.m + k
    }
    fn b(&self, k: usize) -> usize {
        1 + self.n * self.m + k
    }
    fn pre(&self, p: &[f64], x: &[f64], k: usize) -> f64 {
        let mut z = p[self.b(k)];
        for (i, xi) in x.iter().enumerate() {
            z += p[self.w(i, k)] * xi;
        }
        z
    }
    fn weight_sq(&self, p: &[f64]) -> f64 {
        p[1..1 + self.n * self.m].iter().map(|v| v * v).sum()
    }
}

/// The single-hidden-layer hinge problem over `[b₀, W, b]` on fixed inputs.
/// Also serves as the second-layer step of two-layer training, where the
/// inputs are first-layer features and `offset` carries the fixed part of
/// the regularizer.
pub struct ShlProblem {
    layout: ShlLayout,
    pos: Vec<Vec<f64>>,
    neg: Vec<Vec<f64>>,
    lambda: f64,
    offset: f64,
}

impl ShlProblem {
    pub fn new(n_hidden: usize, pos: &PointSet, neg: &PointSet, lambda: f64) -> Self {
        Self::from_features(pos.dim(), n_hidden, pos.to_vecs(), neg.to_vecs(), lambda, 0.0)
    }

    fn from_features(n: usize, m: usize, pos: Vec<Vec<f64>>, neg: Vec<Vec<f64>>, lambda: f64, offset: f64) -> Self {
        ShlProblem {
            layout: ShlLayout { n, m },
            pos,
            neg,
            lambda,
            offset,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    fn score(&self, p: &[f64], x: &[f64]) -> f64 {
        p[0] - (0..self.layout.m)
            .map(|k| self.layout.pre(p, x, k).max(0.0))
            .sum::<f64>()
    }

    /// `J₋` alone, for surrogate checks.
    pub fn j_neg(&self, p: &[f64]) -> f64 {
        self.neg.iter().map(|x| (1.0 + self.score(p, x)).max(0.0)).sum()
    }

    /// `Ĵ₋(p; anchor)` alone.
    pub fn j_neg_surrogate(&self, p: &[f64], anchor: &[f64]) -> f64 {
        let s = self.surrogate_at(anchor);
        s.neg_terms(p).0
    }

    fn surrogate_at(&self, anchor: &[f64]) -> ShlSurrogate<'_> {
        let active = self
            .neg
            .iter()
            .map(|x| {
                (0..self.layout.m)
                    .filter(|&k| self.layout.pre(anchor, x, k) > 0.0)
                    .collect()
            })
            .collect();
        ShlSurrogate { problem: self, active }
    }

    fn base_value(&self, p: &[f64]) -> f64 {
        self.offset
            + self.lambda * self.layout.weight_sq(p)
            + self.pos.iter().map(|x| (1.0 - self.score(p, x)).max(0.0)).sum::<f64>()
    }
}

impl SurrogateOracle for ShlProblem {
    fn objective(&self, p: &[f64]) -> f64 {
        self.base_value(p) + self.j_neg(p)
    }

    fn majorize<'a>(&'a self, anchor: &[f64]) -> Box<dyn ConvexFunction + 'a> {
        Box::new(self.surrogate_at(anchor))
    }
}

struct ShlSurrogate<'a> {
    problem: &'a ShlProblem,
    /// Anchor activation pattern of each negative point.
    active: Vec<Vec<usize>>,
}

impl ShlSurrogate<'_> {
    /// Returns `Ĵ₋` and, per negative point, the value `1 + f̂`.
    fn neg_terms(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let l = &self.problem.layout;
        let inner: Vec<f64> = self
            .problem
            .neg
            .iter()
            .zip(&self.active)
            .map(|(x, ks)| 1.0 + p[0] - ks.iter().map(|&k| l.pre(p, x, k)).sum::<f64>())
            .collect();
        (inner.iter().map(|v| v.max(0.0)).sum(), inner)
    }
}

impl ConvexFunction for ShlSurrogate<'_> {
    fn value(&self, p: &[f64]) -> f64 {
        self.problem.base_value(p) + self.neg_terms(p).0
    }

    fn subgradient(&self, p: &[f64]) -> Vec<f64> {
        let pr = self.problem;
        let l = &pr.layout;
        let mut g = vec![0.0; l.len()];
        for i in 0..l.n {
            for k in 0..l.m {
                g[l.w(i, k)] = 2.0 * pr.lambda * p[l.w(i, k)];
            }
        }
        for x in &pr.pos {
            let z: Vec<f64> = (0..l.m).map(|k| l.pre(p, x, k)).collect();
            let hinge = 1.0 - p[0] + z.iter().map(|v| v.max(0.0)).sum::<f64>();
            if hinge > 0.0 {
                g[0] -= 1.0;
                for (k, &zk) in z.iter().enumerate() {
                    if zk > 0.0 {
                        for (i, xi) in x.iter().enumerate() {
                            g[l.w(i, k)] += xi;
                        }
                        g[l.b(k)] += 1.0;
                    }
                }
            }
        }
        let (_, inner) = self.neg_terms(p);
        for ((x, ks), v) in pr.neg.iter().zip(&self.active).zip(inner) {
            if v > 0.0 {
                g[0] += 1.0;
                for &k in ks {
                    for (i, xi) in x.iter().enumerate() {
                        g[l.w(i, k)] -= xi;
                    }
                    g[l.b(k)] -= 1.0;
                }
            }
        }
        g
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let scale = 1.0 / (rows as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-0.5..0.5) * scale).collect();
    Matrix::from_row_major(rows, cols, data)
}

/// Uniform(−0.5, 0.5)/√fan_in weights, zero biases, `b₀ = 0`.
pub fn random_shl(n: usize, m: usize, seed: u64) -> CanonicalShl {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = uniform_matrix(&mut rng, n, m);
    CanonicalShl {
        b0: 0.0,
        weights,
        bias: vec![0.0; m],
    }
}

/// As [`random_shl`], with second-layer weights replaced by `−|w|`.
pub fn random_thl(n: usize, l1: usize, l2: usize, seed: u64) -> CanonicalThl {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w1 = uniform_matrix(&mut rng, n, l1);
    let mut w2 = uniform_matrix(&mut rng, l1, l2);
    for v in w2.as_mut_slice() {
        *v = -v.abs();
    }
    CanonicalThl {
        b0: 0.0,
        w1,
        b1: vec![0.0; l1],
        w2,
        b2: vec![0.0; l2],
    }
}

fn check_sets(pos: &PointSet, neg: &PointSet) -> Result<()> {
    pos.check_dim(neg.dim())?;
    pos.require_non_empty("positive set is empty")?;
    neg.require_non_empty("negative set is empty")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShlTrainResult {
    pub model: CanonicalShl,
    pub trace: MmTrace,
    pub report: LossReport,
}

pub fn train_shl(pos: &PointSet, neg: &PointSet, config: &TrainConfig) -> Result<ShlTrainResult> {
    check_sets(pos, neg)?;
    config.validate(1)?;
    let n = pos.dim();
    let start = match &config.init {
        Init::Random { seed } => random_shl(n, config.hidden[0], *seed),
        Init::Constructive => {
            let opts = ConstructOptions::default();
            CanonicalShl::from_scrn1(&build_shl_separator_with(pos, neg, &opts)?)?
        }
        Init::Warm(Model::CanonicalShl(m)) => m.clone(),
        Init::Warm(Model::Scrn1(m)) => CanonicalShl::from_scrn1(m)?,
        Init::Warm(other) => {
            return Err(ScrnError::Config(format!(
                "cannot warm-start single-hidden-layer training from a {} model",
                other.kind()
            )))
        }
    };
    if start.n_in() != n {
        return Err(ScrnError::DimensionMismatch {
            expected: n,
            found: start.n_in(),
        });
    }
    let m = start.n_hidden();
    let problem = ShlProblem::new(m, pos, neg, config.lambda);
    let (p, trace) = mm_minimize(&problem, &start.params(), None, &config.mm_options())?;
    let model = CanonicalShl::from_params(n, m, &p);
    let report = hinge_objective(&model, pos, neg, config.lambda, n)?;
    Ok(ShlTrainResult { model, trace, report })
}

/// `(f₁, f₂)` bounding the two-layer function at `x` for arbitrary
/// first-layer pattern `a1` and second-layer pattern `a2`:
/// `f₁ = b₀ − 1ᵀmax(0, W₂ᵀ diag(a₁) z₁ + b₂) ≤ f ≤ f₂ = b₀ − a₂ᵀ(W₂ᵀ max(0, z₁) + b₂)`.
pub fn thl_bounds(params: &CanonicalThl, x: &[f64], a1: &ActiveSet, a2: &ActiveSet) -> Result<(f64, f64)> {
    if let Some(v) = params.check_sign_constraints().first() {
        return Err(v.into());
    }
    if x.len() != params.n_in() {
        return Err(ScrnError::DimensionMismatch {
            expected: params.n_in(),
            found: x.len(),
        });
    }
    let z1 = params.z1(x);
    let (l1, l2) = params.hidden_sizes();
    let mask1 = a1.mask(l1);
    let masked: Vec<f64> = z1
        .iter()
        .zip(&mask1)
        .map(|(z, &on)| if on { *z } else { 0.0 })
        .collect();
    let mut f1 = params.b0;
    for j in 0..l2 {
        let zj = params.b2[j] + (0..l1).map(|i| params.w2.get(i, j) * masked[i]).sum::<f64>();
        f1 -= zj.max(0.0);
    }
    let z2 = params.z2_from_z1(&z1);
    let f2 = params.b0 - a2.indices().iter().filter(|&&j| j < l2).map(|&j| z2[j]).sum::<f64>();
    Ok((f1, f2))
}

/// First-layer step of two-layer training over `[W₁ (n×l₁ row-major), b₁]`
/// with `(b₀, W₂, b₂)` fixed.
pub struct FirstLayerProblem {
    n: usize,
    l1: usize,
    l2: usize,
    b0: f64,
    w2: Matrix,
    b2: Vec<f64>,
    pos: Vec<Vec<f64>>,
    neg: Vec<Vec<f64>>,
    lambda: f64,
    offset: f64,
}

impl FirstLayerProblem {
    pub fn new(model: &CanonicalThl, pos: &PointSet, neg: &PointSet, lambda: f64) -> Self {
        let (l1, l2) = model.hidden_sizes();
        FirstLayerProblem {
            n: model.n_in(),
            l1,
            l2,
            b0: model.b0,
            w2: model.w2.clone(),
            b2: model.b2.clone(),
            pos: pos.to_vecs(),
            neg: neg.to_vecs(),
            lambda,
            offset: lambda * model.w2.squared_sum(),
        }
    }

    pub fn params_of(model: &CanonicalThl) -> Vec<f64> {
        let mut p = model.w1.as_slice().to_vec();
        p.extend_from_slice(&model.b1);
        p
    }

    fn z1(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        (0..self.l1)
            .map(|i| p[self.n * self.l1 + i] + x.iter().enumerate().map(|(d, xd)| p[d * self.l1 + i] * xd).sum::<f64>())
            .collect()
    }

    fn score(&self, p: &[f64], x: &[f64]) -> f64 {
        let h = relu(&self.z1(p, x));
        let mut f = self.b0;
        for j in 0..self.l2 {
            let zj = self.b2[j] + (0..self.l1).map(|i| self.w2.get(i, j) * h[i]).sum::<f64>();
            f -= zj.max(0.0);
        }
        f
    }

    fn regularizer(&self, p: &[f64]) -> f64 {
        self.offset + self.lambda * p[..self.n * self.l1].iter().map(|v| v * v).sum::<f64>()
    }

    /// `ẑ₂ⱼ = Σ_{i∈a₁} W₂[i,j] z₁ᵢ + b₂ⱼ`.
    fn masked_z2(&self, z1: &[f64], a1: &[bool]) -> Vec<f64> {
        (0..self.l2)
            .map(|j| {
                self.b2[j]
                    + (0..self.l1)
                        .filter(|&i| a1[i])
                        .map(|i| self.w2.get(i, j) * z1[i])
                        .sum::<f64>()
            })
            .collect()
    }
}

impl SurrogateOracle for FirstLayerProblem {
    fn objective(&self, p: &[f64]) -> f64 {
        self.regularizer(p)
            + self.pos.iter().map(|x| (1.0 - self.score(p, x)).max(0.0)).sum::<f64>()
            + self.neg.iter().map(|x| (1.0 + self.score(p, x)).max(0.0)).sum::<f64>()
    }

    fn majorize<'a>(&'a self, anchor: &[f64]) -> Box<dyn ConvexFunction + 'a> {
        let pos_masks = self
            .pos
            .iter()
            .map(|x| self.z1(anchor, x).iter().map(|&z| z > 0.0).collect())
            .collect();
        // For negatives only â = −Σ_{j∈a₂} W₂[·,j] and Σ_{j∈a₂} b₂ⱼ are needed.
        let neg_terms = self
            .neg
            .iter()
            .map(|x| {
                let h = relu(&self.z1(anchor, x));
                let mut a_hat = vec![0.0; self.l1];
                let mut b_sum = 0.0;
                for j in 0..self.l2 {
                    let zj = self.b2[j] + (0..self.l1).map(|i| self.w2.get(i, j) * h[i]).sum::<f64>();
                    if zj > 0.0 {
                        b_sum += self.b2[j];
                        for (i, a) in a_hat.iter_mut().enumerate() {
                            *a -= self.w2.get(i, j);
                        }
                    }
                }
                (a_hat, b_sum)
            })
            .collect();
        Box::new(FirstLayerSurrogate {
            problem: self,
            pos_masks,
            neg_terms,
        })
    }
}

struct FirstLayerSurrogate<'a> {
    problem: &'a FirstLayerProblem,
    pos_masks: Vec<Vec<bool>>,
    neg_terms: Vec<(Vec<f64>, f64)>,
}

impl FirstLayerSurrogate<'_> {
    /// `1 − f₁` for a positive point.
    fn pos_inner(&self, p: &[f64], x: &[f64], mask: &[bool]) -> (Vec<f64>, Vec<f64>) {
        let z1 = self.problem.z1(p, x);
        let z2 = self.problem.masked_z2(&z1, mask);
        (z1, z2)
    }

    /// `1 + f₂` for a negative point.
    fn neg_inner(&self, z1: &[f64], a_hat: &[f64], b_sum: f64) -> f64 {
        1.0 + self.problem.b0 - b_sum + a_hat.iter().zip(z1).map(|(a, z)| a * z.max(0.0)).sum::<f64>()
    }
}

impl ConvexFunction for FirstLayerSurrogate<'_> {
    fn value(&self, p: &[f64]) -> f64 {
        let pr = self.problem;
        let mut v = pr.regularizer(p);
        for (x, mask) in pr.pos.iter().zip(&self.pos_masks) {
            let (_, z2) = self.pos_inner(p, x, mask);
            v += (1.0 - pr.b0 + z2.iter().map(|z| z.max(0.0)).sum::<f64>()).max(0.0);
        }
        for (x, (a_hat, b_sum)) in pr.neg.iter().zip(&self.neg_terms) {
            v += self.neg_inner(&pr.z1(p, x), a_hat, *b_sum).max(0.0);
        }
        v
    }

    fn subgradient(&self, p: &[f64]) -> Vec<f64> {
        let pr = self.problem;
        let (n, l1) = (pr.n, pr.l1);
        let mut g = vec![0.0; p.len()];
        for (gi, pi) in g[..n * l1].iter_mut().zip(&p[..n * l1]) {
            *gi = 2.0 * pr.lambda * pi;
        }
        let add = |g: &mut [f64], x: &[f64], i: usize, coef: f64| {
            for (d, xd) in x.iter().enumerate() {
                g[d * l1 + i] += coef * xd;
            }
            g[n * l1 + i] += coef;
        };
        for (x, mask) in pr.pos.iter().zip(&self.pos_masks) {
            let (_, z2) = self.pos_inner(p, x, mask);
            let hinge = 1.0 - pr.b0 + z2.iter().map(|z| z.max(0.0)).sum::<f64>();
            if hinge > 0.0 {
                for i in (0..l1).filter(|&i| mask[i]) {
                    let coef: f64 = (0..pr.l2).filter(|&j| z2[j] > 0.0).map(|j| pr.w2.get(i, j)).sum();
                    if coef != 0.0 {
                        add(&mut g, x, i, coef);
                    }
                }
            }
        }
        for (x, (a_hat, b_sum)) in pr.neg.iter().zip(&self.neg_terms) {
            let z1 = pr.z1(p, x);
            if self.neg_inner(&z1, a_hat, *b_sum) > 0.0 {
                for i in (0..l1).filter(|&i| z1[i] > 0.0 && a_hat[i] != 0.0) {
                    add(&mut g, x, i, a_hat[i]);
                }
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThlTrainResult {
    pub model: CanonicalThl,
    pub trace: MmTrace,
    pub report: LossReport,
}

fn thl_second_layer_problem(
    model: &CanonicalThl,
    pos: &PointSet,
    neg: &PointSet,
    lambda: f64,
) -> (ShlProblem, Vec<f64>, Bounds) {
    let (l1, l2) = model.hidden_sizes();
    let feats = |s: &PointSet| s.iter().map(|x| relu(&model.z1(x))).collect::<Vec<_>>();
    let problem = ShlProblem::from_features(l1, l2, feats(pos), feats(neg), lambda, lambda * model.w1.squared_sum());
    let shl = CanonicalShl {
        b0: model.b0,
        weights: model.w2.clone(),
        bias: model.b2.clone(),
    };
    let mut bounds = Bounds::unbounded(problem.param_count());
    for i in 0..l1 {
        for k in 0..l2 {
            bounds.set_nonpositive(problem.layout.w(i, k));
        }
    }
    (problem, shl.params(), bounds)
}

/// Alternates one second-layer MM step and one first-layer MM step per
/// outer round; `max_outer` counts rounds.
pub fn train_thl(pos: &PointSet, neg: &PointSet, config: &TrainConfig) -> Result<ThlTrainResult> {
    check_sets(pos, neg)?;
    config.validate(2)?;
    let n = pos.dim();
    let mut model = match &config.init {
        Init::Random { seed } => random_thl(n, config.hidden[0], config.hidden[1], *seed),
        Init::Constructive => {
            let opts = ConstructOptions::default();
            CanonicalThl::from_scrn2(&build_thl_separator_with(pos, neg, &opts)?)?
        }
        Init::Warm(Model::Scrn2(m)) => CanonicalThl::from_scrn2(m)?,
        Init::Warm(other) => {
            return Err(ScrnError::Config(format!(
                "cannot warm-start two-hidden-layer training from a {} model",
                other.kind()
            )))
        }
    };
    if model.n_in() != n {
        return Err(ScrnError::DimensionMismatch {
            expected: n,
            found: model.n_in(),
        });
    }
    let opts = config.mm_options();
    let initial = hinge_objective(&model, pos, neg, config.lambda, n)?.total;
    let mut trace = MmTrace::new(initial);
    let (l1, l2) = model.hidden_sizes();
    for _ in 0..opts.max_outer {
        let prev = trace.last_objective();

        let start = Instant::now();
        let (problem, p, bounds) = thl_second_layer_problem(&model, pos, neg, config.lambda);
        let step = mm_step(&problem, &p, Some(&bounds), &opts.inner)?;
        let shl = CanonicalShl::from_params(l1, l2, &step.x);
        model.b0 = shl.b0;
        model.w2 = shl.weights;
        model.b2 = shl.bias;
        if let Some(v) = model.check_sign_constraints().first() {
            return Err(v.into());
        }
        trace.push(
            step.objective,
            step.surrogate,
            elapsed_ms(start, opts.timing),
            StepType::SecondLayer,
        )?;

        let start = Instant::now();
        let problem = FirstLayerProblem::new(&model, pos, neg, config.lambda);
        let step = mm_step(&problem, &FirstLayerProblem::params_of(&model), None, &opts.inner)?;
        model.w1 = Matrix::from_row_major(n, l1, step.x[..n * l1].to_vec());
        model.b1 = step.x[n * l1..].to_vec();
        trace.push(
            step.objective,
            step.surrogate,
            elapsed_ms(start, opts.timing),
            StepType::FirstLayer,
        )?;

        if (prev - trace.last_objective()).abs() < opts.ftol {
            trace.converged = true;
            trace.stop_reason = StopReason::Ftol;
            break;
        }
    }
    let report = hinge_objective(&model, pos, neg, config.lambda, n)?;
    Ok(ThlTrainResult { model, trace, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Shl,
    Thl,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Binary {
    Shl(CanonicalShl),
    Thl(CanonicalThl),
}

impl Binary {
    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            Binary::Shl(m) => m.eval(x),
            Binary::Thl(m) => m.eval(x),
        }
    }

    pub fn to_model(&self) -> Model {
        match self {
            Binary::Shl(m) => Model::CanonicalShl(m.clone()),
            Binary::Thl(m) => Model::Scrn2(m.to_scrn2()),
        }
    }
}

/// One-vs-rest composition. With two classes a single binary model is
/// trained and class 1 scores `−f`.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub binaries: Vec<Binary>,
    pub traces: Vec<MmTrace>,
    pub n_classes: usize,
}

impl MulticlassModel {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        if self.n_classes == 2 {
            let f = self.binaries[0].score(x);
            vec![f, -f]
        } else {
            self.binaries.iter().map(|b| b.score(x)).collect()
        }
    }

    /// Highest score wins; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let s = self.scores(x);
        let mut best = 0;
        for (k, v) in s.iter().enumerate() {
            if *v > s[best] {
                best = k;
            }
        }
        best
    }

    pub fn accuracy(&self, classes: &[PointSet]) -> f64 {
        let total: usize = classes.iter().map(|c| c.len()).sum();
        let correct: usize = classes
            .iter()
            .enumerate()
            .map(|(k, c)| c.iter().filter(|x| self.predict(x) == k).count())
            .sum();
        if total == 0 {
            1.0
        } else {
            correct as f64 / total as f64
        }
    }
}

pub fn multiclass_train(classes: &[PointSet], arch: Arch, config: &TrainConfig) -> Result<MulticlassModel> {
    if classes.len() < 2 {
        return Err(ScrnError::Config(format!(
            "multiclass training needs at least 2 classes, got {}",
            classes.len()
        )));
    }
    let runs = if classes.len() == 2 { 1 } else { classes.len() };
    let mut binaries = Vec::with_capacity(runs);
    let mut traces = Vec::with_capacity(runs);
    for k in 0..runs {
        let rest = rest_of(classes, k)?;
        match arch {
            Arch::Shl => {
                let r = train_shl(&classes[k], &rest, config)?;
                binaries.push(Binary::Shl(r.model));
                traces.push(r.trace);
            }
            Arch::Thl => {
                let r = train_thl(&classes[k], &rest, config)?;
                binaries.push(Binary::Thl(r.model));
                traces.push(r.trace);
            }
        }
    }
    Ok(MulticlassModel {
        binaries,
        traces,
        n_classes: classes.len(),
    })
}
