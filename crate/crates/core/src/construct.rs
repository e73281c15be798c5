//! Constructive sign-constrained separators.
//!
//! [`build_shl_separator`] realises the single-hidden-layer construction: one
//! hidden node per negative point, each a hyperplane cutting that point off
//! from the positive hull, so that every positive point maps to the zero
//! hidden vector and every negative point to a nonzero one. Output weights
//! `−2/γ_min` then give `f = 1` on the positives and `f ≤ −1` on the
//! negatives. [`build_thl_separator`] stacks such separators, one per cluster
//! of a convex cover of the negatives, under a second non-positive layer; it
//! separates any two disjoint finite sets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScrnError};
use crate::geometry::{self, hull_distance, PointSet, SeparabilityVerdict};
use crate::linalg::{distance, dot, Matrix};
use crate::network::{ReluLayer, Scrn1Model, Scrn2Model, SignConstraint};

/// Smallest admissible `γ_min`; below it the output weights `−2/γ_min` blow up.
pub const MIN_GAMMA: f64 = 1e-9;

/// Output margin slack accepted by the post-construction verification.
pub const VERIFY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct ConstructOptions {
    pub tol: f64,
    /// Greedily drop hidden nodes whose negative point is already cut off by
    /// another node.
    pub merge_nodes: bool,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            tol: geometry::DEFAULT_TOL,
            merge_nodes: false,
        }
    }
}

impl ConstructOptions {
    pub fn with_tol(tol: f64) -> Self {
        ConstructOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Hidden layer cutting each negative point off from `CH(pos)`.
struct CutLayer {
    weights: Matrix,
    bias: Vec<f64>,
}

fn cut_layer(pos: &PointSet, neg: &PointSet, opts: &ConstructOptions) -> Result<CutLayer> {
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(neg.len());
    let mut biases = Vec::with_capacity(neg.len());
    for (i, x) in neg.iter().enumerate() {
        let proj = hull_distance(x, pos)?;
        if proj.distance <= opts.tol {
            return Err(ScrnError::NotConvexlySeparable {
                index: i,
                distance: proj.distance,
            });
        }
        let w: Vec<f64> = x
            .iter()
            .zip(&proj.nearest)
            .map(|(a, p)| (a - p) / proj.distance)
            .collect();
        // Place the hyperplane halfway between the point and the supporting
        // hyperplane of CH(pos) with normal w. With an exact projection
        // max_s wᵀs = wᵀp, so this is the midpoint of x and its projection.
        let support = pos.iter().map(|s| dot(&w, s)).fold(f64::NEG_INFINITY, f64::max);
        let wx = dot(&w, x);
        if wx - support <= opts.tol {
            return Err(ScrnError::NotConvexlySeparable {
                index: i,
                distance: (wx - support).max(0.0),
            });
        }
        biases.push(-(wx + support) / 2.0);
        columns.push(w);
    }
    let mut keep: Vec<bool> = vec![true; columns.len()];
    if opts.merge_nodes {
        // Drop a node only if every negative point stays covered by some
        // other kept node.
        let active: Vec<Vec<bool>> = neg
            .iter()
            .map(|x| {
                columns
                    .iter()
                    .zip(&biases)
                    .map(|(w, b)| dot(w, x) + b > opts.tol)
                    .collect()
            })
            .collect();
        for i in 0..columns.len() {
            keep[i] = false;
            let still_covered = active.iter().all(|row| row.iter().zip(&keep).any(|(&a, &k)| a && k));
            if !still_covered {
                keep[i] = true;
            }
        }
    }
    let kept: Vec<Vec<f64>> = columns
        .into_iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(c, _)| c)
        .collect();
    let bias = biases
        .into_iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(b, _)| b)
        .collect();
    Ok(CutLayer {
        weights: Matrix::from_columns(pos.dim(), &kept),
        bias,
    })
}

fn gamma_min(activations: impl Iterator<Item = f64>) -> Result<f64> {
    let gamma = activations.fold(f64::INFINITY, f64::min);
    if !(gamma >= MIN_GAMMA) {
        return Err(ScrnError::DegenerateGamma { gamma });
    }
    Ok(gamma)
}

fn verify_binary(f: impl Fn(&[f64]) -> f64, pos: &PointSet, neg: &PointSet) -> Result<()> {
    for (i, x) in pos.iter().enumerate() {
        let v = f(x);
        if !(v >= 1.0 - VERIFY_SLACK) {
            return Err(ScrnError::VerificationFailed {
                set: "positive".into(),
                index: i,
                value: v,
            });
        }
    }
    for (i, x) in neg.iter().enumerate() {
        let v = f(x);
        if !(v <= -1.0 + VERIFY_SLACK) {
            return Err(ScrnError::VerificationFailed {
                set: "negative".into(),
                index: i,
                value: v,
            });
        }
    }
    Ok(())
}

/// Single-hidden-layer separator with `A ⪯ 0`, `c = 1`: `f = 1` on `pos` and
/// `f ≤ −1` on `neg`. Requires `CH(pos) ∩ neg = ∅`.
pub fn build_shl_separator(pos: &PointSet, neg: &PointSet, tol: f64) -> Result<Scrn1Model> {
    build_shl_separator_with(pos, neg, &ConstructOptions::with_tol(tol))
}

pub fn build_shl_separator_with(pos: &PointSet, neg: &PointSet, opts: &ConstructOptions) -> Result<Scrn1Model> {
    pos.check_dim(neg.dim())?;
    pos.require_non_empty("positive set is empty")?;
    neg.require_non_empty("negative set is empty")?;
    let cut = cut_layer(pos, neg, opts)?;
    let hidden = ReluLayer::new(cut.weights, cut.bias, SignConstraint::None)?;
    let gamma = gamma_min(neg.iter().map(|x| hidden.forward(x).iter().sum()))?;
    let l = hidden.n_out();
    let model = Scrn1Model::new(hidden, Matrix::filled(l, 1, -2.0 / gamma), vec![1.0])?;
    verify_binary(|x| model.forward(x).map_or(f64::NAN, |y| y[0]), pos, neg)?;
    Ok(model)
}

/// `m`-output single-hidden-layer model; output `k` is positive exactly on
/// class `k`. Requires pairwise mutual convex separability.
pub fn build_shl_multiclass(classes: &[PointSet], tol: f64) -> Result<Scrn1Model> {
    build_shl_multiclass_with(classes, &ConstructOptions::with_tol(tol))
}

pub fn build_shl_multiclass_with(classes: &[PointSet], opts: &ConstructOptions) -> Result<Scrn1Model> {
    let verdicts = geometry::pairwise_verdicts(classes, geometry::PairwiseMode::MutualConvex, opts.tol)?;
    if let Some((first, second)) = verdicts.first_failure() {
        return Err(ScrnError::NotPairwiseMutuallyConvexSeparable { first, second });
    }
    let models = (0..classes.len())
        .map(|k| build_shl_separator_with(&classes[k], &rest_of(classes, k)?, opts))
        .collect::<Result<Vec<_>>>()?;
    stack_shl(&models)
}

/// Stacks single-output models: `W = [W₁, …, W_m]`, block-diagonal `A`.
pub fn stack_shl(models: &[Scrn1Model]) -> Result<Scrn1Model> {
    let ws: Vec<&Matrix> = models.iter().map(|m| m.hidden().weights()).collect();
    let as_: Vec<&Matrix> = models.iter().map(|m| m.output_weights()).collect();
    let b = models.iter().flat_map(|m| m.hidden().bias().to_vec()).collect();
    let c = models.iter().flat_map(|m| m.output_bias().to_vec()).collect();
    let hidden = ReluLayer::new(Matrix::hconcat(&ws), b, SignConstraint::None)?;
    Scrn1Model::new(hidden, Matrix::block_diag(&as_), c)
}

pub(crate) fn rest_of(classes: &[PointSet], k: usize) -> Result<PointSet> {
    let rest: Vec<&PointSet> = classes
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != k)
        .map(|(_, c)| c)
        .collect();
    PointSet::union(&rest)
}

/// Partition of a point set into clusters whose hulls avoid an opposing set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexClusterCover {
    pub clusters: Vec<Vec<usize>>,
    pub verdicts: Vec<SeparabilityVerdict>,
}

/// Errors with `NotDisjoint` if a point of `x` lies within `tol` of `against`.
pub fn check_disjoint(x: &PointSet, against: &PointSet, tol: f64) -> Result<()> {
    x.check_dim(against.dim())?;
    for (i, p) in x.iter().enumerate() {
        for (j, q) in against.iter().enumerate() {
            if distance(p, q) <= tol {
                return Err(ScrnError::NotDisjoint { index: i, other: j });
            }
        }
    }
    Ok(())
}

/// Greedy convex cover of `x` against `against`, scanning points in input
/// order: each cluster is seeded with the first unassigned point and grown by
/// every later point that keeps its hull clear of `against`.
pub fn greedy_convex_cover(x: &PointSet, against: &PointSet, tol: f64) -> Result<ConvexClusterCover> {
    let order: Vec<usize> = (0..x.len()).collect();
    greedy_cover_in_order(x, against, tol, &order)
}

/// Same as [`greedy_convex_cover`] with the insertion order shuffled by `seed`.
pub fn greedy_convex_cover_permuted(
    x: &PointSet,
    against: &PointSet,
    tol: f64,
    seed: u64,
) -> Result<ConvexClusterCover> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    greedy_cover_in_order(x, against, tol, &order)
}

fn greedy_cover_in_order(x: &PointSet, against: &PointSet, tol: f64, order: &[usize]) -> Result<ConvexClusterCover> {
    x.require_non_empty("cover of an empty set")?;
    against.require_non_empty("cover against an empty set")?;
    check_disjoint(x, against, tol)?;
    let mut assigned = vec![false; x.len()];
    let mut clusters = Vec::new();
    let mut verdicts = Vec::new();
    for (pos, &seed) in order.iter().enumerate() {
        if assigned[seed] {
            continue;
        }
        assigned[seed] = true;
        let mut cluster = vec![seed];
        for &cand in &order[pos + 1..] {
            if assigned[cand] {
                continue;
            }
            cluster.push(cand);
            if geometry::hull_excludes_all(&x.subset(&cluster), against, tol)? {
                assigned[cand] = true;
            } else {
                cluster.pop();
            }
        }
        let verdict = geometry::is_convexly_separable(&x.subset(&cluster), against, tol)?;
        clusters.push(cluster);
        verdicts.push(verdict);
    }
    Ok(ConvexClusterCover { clusters, verdicts })
}

/// Two-hidden-layer separator with `W₂ ⪯ 0`, `b₂ ⪰ 0`, `A ⪯ 0`, `c = 1`:
/// `f = 1` on `pos`, `f ≤ −1` on `neg`. Any two disjoint finite sets work.
pub fn build_thl_separator(pos: &PointSet, neg: &PointSet, tol: f64) -> Result<Scrn2Model> {
    build_thl_separator_with(pos, neg, &ConstructOptions::with_tol(tol))
}

pub fn build_thl_separator_with(pos: &PointSet, neg: &PointSet, opts: &ConstructOptions) -> Result<Scrn2Model> {
    pos.check_dim(neg.dim())?;
    pos.require_non_empty("positive set is empty")?;
    neg.require_non_empty("negative set is empty")?;
    let cover = greedy_convex_cover(neg, pos, opts.tol)?;
    // Per cluster: a single-hidden-layer separator with the cluster as the
    // positive side and `pos` as the negative side.
    let parts = cover
        .clusters
        .iter()
        .map(|c| build_shl_separator_with(&neg.subset(c), pos, opts))
        .collect::<Result<Vec<_>>>()?;
    let w1s: Vec<&Matrix> = parts.iter().map(|p| p.hidden().weights()).collect();
    let b1 = parts.iter().flat_map(|p| p.hidden().bias().to_vec()).collect();
    // Column i of W₂ carries cluster i's output weights on its own block.
    let w2_blocks: Vec<&Matrix> = parts.iter().map(|p| p.output_weights()).collect();
    let b2 = parts.iter().map(|p| p.output_bias()[0]).collect();
    let layer1 = ReluLayer::new(Matrix::hconcat(&w1s), b1, SignConstraint::None)?;
    let layer2 = ReluLayer::new(Matrix::block_diag(&w2_blocks), b2, SignConstraint::Nonpositive)?;
    let gamma = gamma_min(neg.iter().map(|x| layer2.forward(&layer1.forward(x)).iter().sum()))?;
    let l2 = layer2.n_out();
    let model = Scrn2Model::new(layer1, layer2, Matrix::filled(l2, 1, -2.0 / gamma), vec![1.0])?;
    verify_binary(|x| model.forward(x).map_or(f64::NAN, |y| y[0]), pos, neg)?;
    Ok(model)
}

/// `m`-output two-hidden-layer model, one block per class (class `k` against
/// the union of the others). Requires pairwise disjoint classes.
pub fn build_thl_multiclass(classes: &[PointSet], tol: f64) -> Result<Scrn2Model> {
    build_thl_multiclass_with(classes, &ConstructOptions::with_tol(tol))
}

pub fn build_thl_multiclass_with(classes: &[PointSet], opts: &ConstructOptions) -> Result<Scrn2Model> {
    if classes.len() < 2 {
        return Err(ScrnError::Config("need at least two classes".into()));
    }
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            check_disjoint(&classes[i], &classes[j], opts.tol)?;
        }
    }
    let models = (0..classes.len())
        .map(|k| build_thl_separator_with(&classes[k], &rest_of(classes, k)?, opts))
        .collect::<Result<Vec<_>>>()?;
    stack_thl(&models)
}

/// Stacks single-output two-layer models: `W₁` concatenated, `W₂` and `A`
/// block-diagonal.
pub fn stack_thl(models: &[Scrn2Model]) -> Result<Scrn2Model> {
    let w1s: Vec<&Matrix> = models.iter().map(|m| m.layer1().weights()).collect();
    let w2s: Vec<&Matrix> = models.iter().map(|m| m.layer2().weights()).collect();
    let as_: Vec<&Matrix> = models.iter().map(|m| m.output_weights()).collect();
    let b1 = models.iter().flat_map(|m| m.layer1().bias().to_vec()).collect();
    let b2 = models.iter().flat_map(|m| m.layer2().bias().to_vec()).collect();
    let c = models.iter().flat_map(|m| m.output_bias().to_vec()).collect();
    let layer1 = ReluLayer::new(Matrix::hconcat(&w1s), b1, SignConstraint::None)?;
    let layer2 = ReluLayer::new(Matrix::block_diag(&w2s), b2, SignConstraint::Nonpositive)?;
    Scrn2Model::new(layer1, layer2, Matrix::block_diag(&as_), c)
}
