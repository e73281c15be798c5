//! Pattern decomposition by hidden-node activation patterns.
//!
//! Given a sign-constrained separator `f` with output weights `a ⪯ 0`, every
//! subset `ℐ` of hidden nodes defines the piece
//! `f_ℐ(x) = Σ_{i∈ℐ} aᵢ(wᵢᵀx + bᵢ) + c`, which dominates `f` everywhere and
//! equals it on the points whose active set is exactly `ℐ`. Grouping the
//! negative points by their own active set therefore splits them into
//! subsets that `f_ℐ` separates from the positives: linearly for a
//! single-hidden-layer model, convexly for a two-hidden-layer model (where
//! `f_ℐ` is a single-hidden-layer function of the input).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::construct::{build_shl_separator_with, ConstructOptions};
use crate::error::{Result, ScrnError};
use crate::geometry::{self, PointSet};
use crate::linalg::{dot, relu};
use crate::network::{ActiveSet, Scrn1Model, Scrn2Model};

/// Occupied active sets beyond this count are not materialised.
pub const MAX_OCCUPIED_SETS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Separator {
    /// `wᵀx + b`.
    Affine { w: Vec<f64>, b: f64 },
    /// `âᵀ max(0, W₁ᵀx + b₁) + ĉ` over the model's first layer, with `â ⪰ 0`.
    FirstLayerShl { output_weights: Vec<f64>, bias: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub active_set: ActiveSet,
    /// Indices into the negative set.
    pub members: Vec<usize>,
    pub separator: Separator,
    /// `min f_ℐ` over the positive set (must be > 0).
    pub min_positive_margin: f64,
    /// `max f_ℐ` over the members (must be < 0).
    pub max_member_margin: f64,
    pub verified: bool,
    /// Two-layer decompositions also carry the hull oracle's verdict that
    /// `CH(members) ∩ positives = ∅`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convexly_separable: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hull_distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    Shl,
    Thl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub kind: DecompositionKind,
    pub subsets: Vec<SubsetReport>,
    /// Every negative point is a member of the subset keyed by its own
    /// active set. Subsets of different keys never share members here, but
    /// other pieces may also separate a point, so subsets defined by
    /// separation alone could overlap.
    pub coverage_ok: bool,
    pub truncated: bool,
    pub all_verified: bool,
}

impl DecompositionReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| ScrnError::parse(e.to_string()))
    }
}

fn check_separates(f: impl Fn(&[f64]) -> f64, pos: &PointSet, neg: &PointSet) -> Result<()> {
    for (i, x) in pos.iter().enumerate() {
        let v = f(x);
        if !(v > 0.0) {
            return Err(ScrnError::ModelDoesNotSeparate {
                set: "positive".into(),
                index: i,
                value: v,
            });
        }
    }
    for (i, x) in neg.iter().enumerate() {
        let v = f(x);
        if !(v < 0.0) {
            return Err(ScrnError::ModelDoesNotSeparate {
                set: "negative".into(),
                index: i,
                value: v,
            });
        }
    }
    Ok(())
}

/// Groups point indices by active set (in first-seen order of keys sorted by
/// the set itself), capping the number of distinct sets.
fn group_by_active_set(keys: Vec<ActiveSet>) -> (BTreeMap<ActiveSet, Vec<usize>>, bool) {
    let mut groups: BTreeMap<ActiveSet, Vec<usize>> = BTreeMap::new();
    let mut truncated = false;
    for (i, key) in keys.into_iter().enumerate() {
        if let Some(members) = groups.get_mut(&key) {
            members.push(i);
        } else if groups.len() < MAX_OCCUPIED_SETS {
            groups.insert(key, vec![i]);
        } else {
            truncated = true;
        }
    }
    (groups, truncated)
}

fn check_single_output(n_out: usize) -> Result<()> {
    if n_out != 1 {
        return Err(ScrnError::Config(format!(
            "decomposition needs a single-output model, got {n_out} outputs"
        )));
    }
    Ok(())
}

fn finish(kind: DecompositionKind, subsets: Vec<SubsetReport>, n_neg: usize, truncated: bool) -> DecompositionReport {
    let covered: usize = subsets.iter().map(|s| s.members.len()).sum();
    let all_verified = subsets
        .iter()
        .all(|s| s.verified && s.convexly_separable.unwrap_or(true));
    DecompositionReport {
        kind,
        coverage_ok: !truncated && covered == n_neg,
        truncated,
        all_verified,
        subsets,
    }
}

/// Splits `neg` into subsets, each linearly separable from `pos` by the
/// affine piece of `model` on its active set.
pub fn shl_decompose(model: &Scrn1Model, pos: &PointSet, neg: &PointSet) -> Result<DecompositionReport> {
    check_single_output(model.n_out())?;
    if let Some(v) = model.check_sign_constraints().first() {
        return Err(v.into());
    }
    pos.check_dim(model.n_in())?;
    neg.check_dim(model.n_in())?;
    neg.require_non_empty("negative set is empty")?;
    check_separates(|x| model.forward(x).map_or(f64::NAN, |y| y[0]), pos, neg)?;

    let hidden = model.hidden();
    let a = model.output_weights().column(0);
    let c = model.output_bias()[0];
    let keys = neg
        .iter()
        .map(|x| ActiveSet::from_pre_activations(&hidden.pre_activation(x)))
        .collect();
    let (groups, truncated) = group_by_active_set(keys);

    let n = model.n_in();
    let subsets = groups
        .into_iter()
        .map(|(set, members)| {
            let mut w = vec![0.0; n];
            let mut b = c;
            for &i in set.indices() {
                let col = hidden.weights().column(i);
                for (wd, cd) in w.iter_mut().zip(&col) {
                    *wd += a[i] * cd;
                }
                b += a[i] * hidden.bias()[i];
            }
            let eval = |x: &[f64]| dot(&w, x) + b;
            let min_pos = pos.iter().map(eval).fold(f64::INFINITY, f64::min);
            let max_mem = members
                .iter()
                .map(|&i| eval(neg.point(i)))
                .fold(f64::NEG_INFINITY, f64::max);
            SubsetReport {
                active_set: set,
                members,
                verified: min_pos > 0.0 && max_mem < 0.0,
                separator: Separator::Affine { w, b },
                min_positive_margin: min_pos,
                max_member_margin: max_mem,
                convexly_separable: None,
                hull_distance: None,
            }
        })
        .collect();
    Ok(finish(DecompositionKind::Shl, subsets, neg.len(), truncated))
}

/// Splits `neg` by second-layer activation patterns into subsets that are
/// convexly separable from `pos`, each with a single-hidden-layer separator
/// over the model's first layer.
pub fn thl_decompose(model: &Scrn2Model, pos: &PointSet, neg: &PointSet, tol: f64) -> Result<DecompositionReport> {
    check_single_output(model.n_out())?;
    if let Some(v) = model.check_sign_constraints().first() {
        return Err(v.into());
    }
    pos.check_dim(model.n_in())?;
    neg.check_dim(model.n_in())?;
    pos.require_non_empty("positive set is empty")?;
    neg.require_non_empty("negative set is empty")?;
    check_separates(|x| model.forward(x).map_or(f64::NAN, |y| y[0]), pos, neg)?;

    let l1 = model.layer1();
    let l2 = model.layer2();
    let a = model.output_weights().column(0);
    let c = model.output_bias()[0];
    let keys = neg
        .iter()
        .map(|x| ActiveSet::from_pre_activations(&l2.pre_activation(&l1.forward(x))))
        .collect();
    let (groups, truncated) = group_by_active_set(keys);

    let subsets = groups
        .into_iter()
        .map(|(set, members)| -> Result<SubsetReport> {
            let mut out_w = vec![0.0; l1.n_out()];
            let mut bias = c;
            for &i in set.indices() {
                let col = l2.weights().column(i);
                for (o, wij) in out_w.iter_mut().zip(&col) {
                    *o += a[i] * wij;
                }
                bias += a[i] * l2.bias()[i];
            }
            let eval = |x: &[f64]| dot(&out_w, &relu(&l1.pre_activation(x))) + bias;
            let min_pos = pos.iter().map(eval).fold(f64::INFINITY, f64::min);
            let max_mem = members
                .iter()
                .map(|&i| eval(neg.point(i)))
                .fold(f64::NEG_INFINITY, f64::max);
            let verdict = geometry::is_convexly_separable(&neg.subset(&members), pos, tol)?;
            Ok(SubsetReport {
                active_set: set,
                members,
                verified: min_pos > 0.0 && max_mem < 0.0,
                separator: Separator::FirstLayerShl {
                    output_weights: out_w,
                    bias,
                },
                min_positive_margin: min_pos,
                max_member_margin: max_mem,
                convexly_separable: Some(verdict.separable),
                hull_distance: Some(verdict.distance),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(DecompositionKind::Thl, subsets, neg.len(), truncated))
}

/// A negative subset paired with a positive subset and a verified affine
/// separator (`> 0` on the negative subset, `< 0` on the positive subset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrillLeaf {
    pub neg_members: Vec<usize>,
    pub pos_members: Vec<usize>,
    pub w: Vec<f64>,
    pub b: f64,
    pub min_neg_margin: f64,
    pub max_pos_margin: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrillBranch {
    pub active_set: ActiveSet,
    pub neg_members: Vec<usize>,
    pub leaves: Vec<DrillLeaf>,
}

/// Two-stage decomposition: the negatives are split into convexly separable
/// subsets by the two-layer model, then each subset gets its own
/// single-hidden-layer separator whose decomposition splits the positives
/// into subsets linearly separable from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrillDownReport {
    pub stage1: DecompositionReport,
    pub branches: Vec<DrillBranch>,
    pub all_verified: bool,
}

impl DrillDownReport {
    pub fn leaf_count(&self) -> usize {
        self.branches.iter().map(|b| b.leaves.len()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| ScrnError::parse(e.to_string()))
    }
}

/// Stage-two separators are built with node merging enabled so leaves stay
/// few; `opts.merge_nodes` is ignored.
pub fn full_drill_down(
    pos: &PointSet,
    neg: &PointSet,
    model: &Scrn2Model,
    opts: &ConstructOptions,
) -> Result<DrillDownReport> {
    neg.require_non_empty("negative set is empty")?;
    let stage1 = thl_decompose(model, pos, neg, opts.tol)?;
    let stage_opts = ConstructOptions {
        merge_nodes: true,
        ..*opts
    };
    let mut branches = Vec::with_capacity(stage1.subsets.len());
    for subset in &stage1.subsets {
        let sub = neg.subset(&subset.members);
        let shl = build_shl_separator_with(&sub, pos, &stage_opts)?;
        let report = shl_decompose(&shl, &sub, pos)?;
        let leaves = report
            .subsets
            .into_iter()
            .map(|s| {
                let Separator::Affine { w, b } = s.separator else {
                    unreachable!("shl_decompose emits affine separators")
                };
                DrillLeaf {
                    neg_members: subset.members.clone(),
                    pos_members: s.members,
                    w,
                    b,
                    min_neg_margin: s.min_positive_margin,
                    max_pos_margin: s.max_member_margin,
                    verified: s.verified,
                }
            })
            .collect();
        branches.push(DrillBranch {
            active_set: subset.active_set.clone(),
            neg_members: subset.members.clone(),
            leaves,
        });
    }
    let all_verified = stage1.all_verified && branches.iter().all(|b| b.leaves.iter().all(|l| l.verified));
    Ok(DrillDownReport {
        stage1,
        branches,
        all_verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_shl_separator, build_thl_separator};
    use crate::geometry::DEFAULT_TOL;
    use crate::linalg::Matrix;
    use crate::network::{ReluLayer, SignConstraint};

    fn ps(points: &[[f64; 2]]) -> PointSet {
        PointSet::from_points(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn ring() -> (PointSet, PointSet) {
        let octagon = |r: f64| -> Vec<Vec<f64>> {
            (0..8)
                .map(|k| {
                    let t = k as f64 * std::f64::consts::PI / 4.0;
                    vec![r * t.cos(), r * t.sin()]
                })
                .collect()
        };
        let mut outer = vec![vec![0.0, 0.0]];
        outer.extend(octagon(3.0));
        (
            PointSet::from_points(&octagon(1.0)).unwrap(),
            PointSet::from_points(&outer).unwrap(),
        )
    }

    #[test]
    fn xor_shl_decomposition() {
        let pos = ps(&[[0.0, 0.0], [1.0, 1.0]]);
        let neg = ps(&[[0.0, 1.0], [1.0, 0.0]]);
        let m = build_shl_separator(&pos, &neg, DEFAULT_TOL).unwrap();
        let r = shl_decompose(&m, &pos, &neg).unwrap();
        assert!(r.coverage_ok && r.all_verified && !r.truncated);
        let keys: Vec<&[usize]> = r.subsets.iter().map(|s| s.active_set.indices()).collect();
        assert_eq!(keys, vec![&[0][..], &[1][..]]);
        assert_eq!(r.subsets[0].members, vec![0]);
        assert_eq!(r.subsets[1].members, vec![1]);
        for s in &r.subsets {
            assert!(s.min_positive_margin > 1e-9 && s.max_member_margin < -1e-9);
        }
    }

    #[test]
    fn single_negative_point() {
        let pos = ps(&[[0.0, 0.0], [0.0, 1.0]]);
        let neg = ps(&[[3.0, 0.5]]);
        let m = build_shl_separator(&pos, &neg, DEFAULT_TOL).unwrap();
        let r = shl_decompose(&m, &pos, &neg).unwrap();
        assert_eq!(r.subsets.len(), 1);
        assert_eq!(r.subsets[0].members, vec![0]);
        assert!(!r.subsets[0].active_set.is_empty());
    }

    #[test]
    fn non_separating_model_is_rejected() {
        let pos = ps(&[[0.0, 0.0]]);
        let neg = ps(&[[2.0, 0.0]]);
        let hidden = ReluLayer::new(Matrix::zeros(2, 1), vec![0.0], SignConstraint::None).unwrap();
        let m = Scrn1Model::new(hidden, Matrix::filled(1, 1, -1.0), vec![1.0]).unwrap();
        assert!(matches!(
            shl_decompose(&m, &pos, &neg),
            Err(ScrnError::ModelDoesNotSeparate { index: 0, .. })
        ));
    }

    #[test]
    fn ring_thl_decomposition() {
        let (inner, outer) = ring();
        let m = build_thl_separator(&inner, &outer, DEFAULT_TOL).unwrap();
        let r = thl_decompose(&m, &inner, &outer, DEFAULT_TOL).unwrap();
        assert!(r.coverage_ok && r.all_verified);
        assert!(r.subsets.len() >= 2);
        for s in &r.subsets {
            assert_eq!(s.convexly_separable, Some(true));
        }
        // misclassified negative
        let mut wrong = outer.clone();
        wrong.push(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            thl_decompose(&m, &inner, &wrong, DEFAULT_TOL),
            Err(ScrnError::ModelDoesNotSeparate { .. })
        ));
    }

    #[test]
    fn single_second_layer_node() {
        let pos = ps(&[[0.0, 0.0], [1.0, 1.0]]);
        let neg = ps(&[[0.0, 1.0], [1.0, 0.0]]);
        let m = build_thl_separator(&pos, &neg, DEFAULT_TOL).unwrap();
        assert_eq!(m.layer2().n_out(), 1);
        let r = thl_decompose(&m, &pos, &neg, DEFAULT_TOL).unwrap();
        assert_eq!(r.subsets.len(), 1);
    }

    #[test]
    fn drill_down_ring() {
        let (inner, outer) = ring();
        let m = build_thl_separator(&inner, &outer, DEFAULT_TOL).unwrap();
        let d = full_drill_down(&inner, &outer, &m, &ConstructOptions::default()).unwrap();
        assert!(d.all_verified);
        for b in &d.branches {
            let mut covered: Vec<usize> = b.leaves.iter().flat_map(|l| l.pos_members.clone()).collect();
            covered.sort_unstable();
            assert_eq!(covered, (0..inner.len()).collect::<Vec<_>>());
            for l in &b.leaves {
                for &i in &l.neg_members {
                    assert!(dot(&l.w, outer.point(i)) + l.b > 0.0);
                }
                for &j in &l.pos_members {
                    assert!(dot(&l.w, inner.point(j)) + l.b < 0.0);
                }
            }
        }
    }

    #[test]
    fn drill_down_linearly_separable_is_single_leaf() {
        let pos = ps(&[[5.0, 0.0], [5.0, 1.0]]);
        let neg = ps(&[[0.0, 0.0], [0.0, 1.0]]);
        let m = build_thl_separator(&pos, &neg, DEFAULT_TOL).unwrap();
        let d = full_drill_down(&pos, &neg, &m, &ConstructOptions::default()).unwrap();
        assert_eq!(d.branches.len(), 1);
        assert_eq!(d.leaf_count(), 1);
        assert!(matches!(
            full_drill_down(&pos, &PointSet::empty(2), &m, &ConstructOptions::default()),
            Err(ScrnError::EmptySet { .. })
        ));
    }
}
