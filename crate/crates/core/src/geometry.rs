//! Convex-hull geometry on finite point sets.
//!
//! Everything here reduces to one primitive, [`hull_distance`]: the Euclidean
//! projection of a query point onto the convex hull of a finite set, computed
//! by fully corrective Frank–Wolfe (Wolfe's minimum-norm-point method) over
//! the simplex of convex-combination weights.
//! The separability verdicts are thin layers on top of it:
//!
//! * linear separability of `A` and `B` ⇔ `CH(A) ∩ CH(B) = ∅`;
//! * `A` convexly separable from `B` ⇔ `CH(A) ∩ B = ∅` (unidirectional);
//! * mutual convex separability is the conjunction of both directions.
//!
//! Points within `tol` of a hull are treated as members, so borderline cases
//! are reported as "not separable".

use std::collections::{hash_map::Entry, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScrnError};
use crate::linalg::{dot, norm};

/// Default distance tolerance for separability verdicts.
pub const DEFAULT_TOL: f64 = 1e-7;

/// A finite set of points in ℝⁿ, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(ScrnError::Config("point dimension must be positive".into()));
        }
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(ScrnError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Ok(PointSet { dim, data })
    }

    /// Infers the dimension from the first point.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| ScrnError::EmptySet {
            what: "cannot infer dimension of an empty point list".into(),
        })?;
        Self::new(dim, points)
    }

    pub fn empty(dim: usize) -> Self {
        PointSet { dim, data: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        self.check_dim(p.len())?;
        self.data.extend_from_slice(p);
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> PointSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        PointSet { dim: self.dim, data }
    }

    /// Concatenation of several sets of equal dimension.
    pub fn union(sets: &[&PointSet]) -> Result<PointSet> {
        let dim = sets.first().map(|s| s.dim).ok_or_else(|| ScrnError::EmptySet {
            what: "union of zero sets".into(),
        })?;
        let mut out = PointSet::empty(dim);
        for s in sets {
            out.check_dim(s.dim)?;
            out.data.extend_from_slice(&s.data);
        }
        Ok(out)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim {
            return Err(ScrnError::DimensionMismatch {
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    pub(crate) fn require_non_empty(&self, what: &str) -> Result<()> {
        if self.is_empty() {
            return Err(ScrnError::EmptySet { what: what.into() });
        }
        Ok(())
    }
}

/// Solver settings for [`hull_distance_with`].
#[derive(Debug, Clone, Copy)]
pub struct HullConfig {
    /// Absolute Frank–Wolfe gap threshold.
    pub gap_tol: f64,
    /// The gap must also fall below `rel_gap * ‖q − p‖²`, so small distances
    /// are resolved to relative accuracy rather than to `sqrt(gap_tol)`.
    pub rel_gap: f64,
    pub max_iter: usize,
}

impl Default for HullConfig {
    fn default() -> Self {
        HullConfig {
            gap_tol: 1e-10,
            rel_gap: 1e-6,
            max_iter: 10_000,
        }
    }
}

/// Projection of a point onto a convex hull.
#[derive(Debug, Clone, PartialEq)]
pub struct HullProjection {
    pub distance: f64,
    pub nearest: Vec<f64>,
    /// Convex-combination weights, one per input point (duplicates beyond the
    /// first occurrence get weight 0).
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    /// Final Frank–Wolfe duality gap on the squared distance.
    pub gap: f64,
}

/// Euclidean distance from `q` to `CH(set)` with default solver settings.
pub fn hull_distance(q: &[f64], set: &PointSet) -> Result<HullProjection> {
    hull_distance_with(q, set, &HullConfig::default())
}

pub fn hull_distance_with(q: &[f64], set: &PointSet, cfg: &HullConfig) -> Result<HullProjection> {
    set.check_dim(q.len())?;
    set.require_non_empty("hull_distance needs a non-empty set")?;
    if q.iter().any(|v| !v.is_finite()) || set.data.iter().any(|v| !v.is_finite()) {
        return Err(ScrnError::NonFinite {
            context: "hull_distance input".into(),
        });
    }
    let (atoms, first_index) = dedup(set);
    let sol = min_norm_point(q, &atoms, set.dim, cfg);
    let mut coefficients = vec![0.0; set.len()];
    for (u, &w) in sol.weights.iter().enumerate() {
        coefficients[first_index[u]] = w;
    }
    Ok(HullProjection {
        distance: sol.distance,
        nearest: sol.nearest,
        coefficients,
        iterations: sol.iterations,
        gap: sol.gap,
    })
}

/// Closest pair between two hulls.
#[derive(Debug, Clone, PartialEq)]
pub struct HullPair {
    pub distance: f64,
    /// Point of `CH(A)`.
    pub pa: Vec<f64>,
    /// Point of `CH(B)`.
    pub pb: Vec<f64>,
}

/// Distance between `CH(a)` and `CH(b)`, computed as the distance from the
/// origin to the hull of the Minkowski difference `{aᵢ − bⱼ}`.
pub fn hulls_distance(a: &PointSet, b: &PointSet) -> Result<HullPair> {
    a.check_dim(b.dim)?;
    a.require_non_empty("hulls_distance: first set is empty")?;
    b.require_non_empty("hulls_distance: second set is empty")?;
    let (ua, _) = dedup(a);
    let (ub, _) = dedup(b);
    let dim = a.dim;
    let mut diff = Vec::with_capacity(ua.len() / dim * ub.len());
    for pa in ua.chunks_exact(dim) {
        for pb in ub.chunks_exact(dim) {
            diff.extend(pa.iter().zip(pb).map(|(x, y)| x - y));
        }
    }
    let origin = vec![0.0; dim];
    let sol = min_norm_point(&origin, &diff, dim, &HullConfig::default());
    let nb = ub.len() / dim;
    let mut pa = vec![0.0; dim];
    let mut pb = vec![0.0; dim];
    for (k, &w) in sol.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let (i, j) = (k / nb, k % nb);
        for d in 0..dim {
            pa[d] += w * ua[i * dim + d];
            pb[d] += w * ub[j * dim + d];
        }
    }
    Ok(HullPair {
        distance: sol.distance,
        pa,
        pb,
    })
}

/// Outcome of a separability query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityVerdict {
    pub separable: bool,
    pub distance: f64,
    /// Linear verdicts carry a separating hyperplane `wᵀx + b`, positive on
    /// the first set and negative on the second.
    pub witness_w: Option<Vec<f64>>,
    pub witness_b: Option<f64>,
    pub tolerance_used: f64,
    /// For convex verdicts: index (in the opposing set) of the point closest
    /// to the hull.
    pub closest_index: Option<usize>,
}

/// Linear separability via `CH(a) ∩ CH(b) = ∅`.
pub fn is_linearly_separable(a: &PointSet, b: &PointSet, tol: f64) -> Result<SeparabilityVerdict> {
    let pair = hulls_distance(a, b)?;
    let separable = pair.distance > tol;
    let (witness_w, witness_b) = if separable {
        let w: Vec<f64> = pair
            .pa
            .iter()
            .zip(&pair.pb)
            .map(|(x, y)| (x - y) / pair.distance)
            .collect();
        let mid: Vec<f64> = pair.pa.iter().zip(&pair.pb).map(|(x, y)| x + y).collect();
        let b0 = -dot(&w, &mid) / 2.0;
        (Some(w), Some(b0))
    } else {
        (None, None)
    };
    Ok(SeparabilityVerdict {
        separable,
        distance: pair.distance,
        witness_w,
        witness_b,
        tolerance_used: tol,
        closest_index: None,
    })
}

/// Unidirectional convex separability: `CH(a) ∩ from_b = ∅`.
pub fn is_convexly_separable(a: &PointSet, from_b: &PointSet, tol: f64) -> Result<SeparabilityVerdict> {
    a.check_dim(from_b.dim)?;
    a.require_non_empty("is_convexly_separable: hull set is empty")?;
    from_b.require_non_empty("is_convexly_separable: opposing set is empty")?;
    let mut best = (f64::INFINITY, 0usize);
    for (i, p) in from_b.iter().enumerate() {
        let d = hull_distance(p, a)?.distance;
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(SeparabilityVerdict {
        separable: best.0 > tol,
        distance: best.0,
        witness_w: None,
        witness_b: None,
        tolerance_used: tol,
        closest_index: Some(best.1),
    })
}

/// `true` iff every point of `others` lies farther than `tol` from `CH(hull)`.
/// Stops at the first offending point.
pub(crate) fn hull_excludes_all(hull: &PointSet, others: &PointSet, tol: f64) -> Result<bool> {
    for p in others.iter() {
        if hull_distance(p, hull)?.distance <= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Both unidirectional verdicts: `a` from `b`, then `b` from `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualVerdict {
    pub separable: bool,
    pub a_from_b: SeparabilityVerdict,
    pub b_from_a: SeparabilityVerdict,
}

pub fn is_mutually_convexly_separable(a: &PointSet, b: &PointSet, tol: f64) -> Result<MutualVerdict> {
    let a_from_b = is_convexly_separable(a, b, tol)?;
    let b_from_a = is_convexly_separable(b, a, tol)?;
    Ok(MutualVerdict {
        separable: a_from_b.separable && b_from_a.separable,
        a_from_b,
        b_from_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseMode {
    Linear,
    MutualConvex,
}

/// Symmetric verdict matrix over all class pairs; the diagonal is `true`
/// with distance 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseVerdicts {
    pub mode: PairwiseMode,
    pub separable: Vec<Vec<bool>>,
    pub distance: Vec<Vec<f64>>,
}

impl PairwiseVerdicts {
    pub fn all_separable(&self) -> bool {
        self.separable.iter().flatten().all(|&s| s)
    }

    /// First failing pair `(i, j)` with `i < j`.
    pub fn first_failure(&self) -> Option<(usize, usize)> {
        let m = self.separable.len();
        (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .find(|&(i, j)| !self.separable[i][j])
    }
}

pub fn pairwise_verdicts(classes: &[PointSet], mode: PairwiseMode, tol: f64) -> Result<PairwiseVerdicts> {
    if classes.len() < 2 {
        return Err(ScrnError::Config("pairwise verdicts need at least two classes".into()));
    }
    let dim = classes[0].dim;
    for c in classes {
        if c.dim != dim {
            return Err(ScrnError::DimensionMismatch {
                expected: dim,
                found: c.dim,
            });
        }
    }
    let m = classes.len();
    let mut separable = vec![vec![true; m]; m];
    let mut distance = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let (s, d) = match mode {
                PairwiseMode::Linear => {
                    let v = is_linearly_separable(&classes[i], &classes[j], tol)?;
                    (v.separable, v.distance)
                }
                PairwiseMode::MutualConvex => {
                    let v = is_mutually_convexly_separable(&classes[i], &classes[j], tol)?;
                    (v.separable, v.a_from_b.distance.min(v.b_from_a.distance))
                }
            };
            separable[i][j] = s;
            separable[j][i] = s;
            distance[i][j] = d;
            distance[j][i] = d;
        }
    }
    Ok(PairwiseVerdicts {
        mode,
        separable,
        distance,
    })
}

/// Unique points (row-major) plus, for each unique point, the index of its
/// first occurrence in the input.
fn dedup(set: &PointSet) -> (Vec<f64>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut atoms = Vec::with_capacity(set.data.len());
    let mut first = Vec::new();
    for (i, p) in set.iter().enumerate() {
        // +0.0 and -0.0 are the same point.
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        if let Entry::Vacant(e) = seen.entry(key) {
            e.insert(first.len());
            first.push(i);
            atoms.extend_from_slice(p);
        }
    }
    (atoms, first)
}

struct FwSolution {
    distance: f64,
    nearest: Vec<f64>,
    weights: Vec<f64>,
    iterations: usize,
    gap: f64,
}

/// Wolfe's minimum-norm-point method for `min ‖q − Σ λⱼ sⱼ‖²` over the simplex.
///
/// Each major cycle is a Frank–Wolfe step (linear minimisation over the atoms,
/// stopping on the duality gap); the minor cycles then re-optimise exactly over
/// the affine hull of the current support, dropping atoms whose weights would
/// turn negative. This is the fully corrective Frank–Wolfe variant; it
/// terminates finitely and resolves interior queries to rounding level.
fn min_norm_point(q: &[f64], atoms: &[f64], dim: usize, cfg: &HullConfig) -> FwSolution {
    let m = atoms.len() / dim;
    // Atoms shifted so the query sits at the origin.
    let shifted: Vec<f64> = atoms
        .chunks_exact(dim)
        .flat_map(|a| a.iter().zip(q).map(|(x, y)| x - y))
        .collect();
    let atom = |j: usize| &shifted[j * dim..(j + 1) * dim];
    let scale_sq = (0..m).map(|j| dot(atom(j), atom(j))).fold(0.0, f64::max).max(1e-300);

    let start = (0..m)
        .map(|j| (dot(atom(j), atom(j)), j))
        .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
        .1;
    let mut support = vec![start];
    let mut lambda = vec![1.0];
    let mut x = atom(start).to_vec();
    let mut gap = f64::INFINITY;
    let mut iterations = 0;

    'major: while iterations < cfg.max_iter {
        iterations += 1;
        let xx = dot(&x, &x);
        if xx <= 1e-30 * scale_sq {
            gap = 0.0;
            break;
        }
        let (j_new, v) = (0..m)
            .map(|j| (j, dot(&x, atom(j))))
            .fold((0, f64::INFINITY), |acc, t| if t.1 < acc.1 { t } else { acc });
        // gap of the squared-distance objective: <∇, x − s> with ∇ = 2x
        gap = 2.0 * (xx - v);
        if (gap <= cfg.gap_tol && gap <= cfg.rel_gap * xx) || gap <= 1e-15 * scale_sq {
            break;
        }
        if support.contains(&j_new) {
            // Numerically stalled: the best atom is already in the support.
            break;
        }
        support.push(j_new);
        lambda.push(0.0);

        loop {
            let pts: Vec<&[f64]> = support.iter().map(|&j| atom(j)).collect();
            let Some(mu) = affine_min_norm(&pts, dim) else {
                // New atom is affinely dependent on the support: nothing to gain.
                support.pop();
                lambda.pop();
                break 'major;
            };
            if mu.iter().all(|&w| w > 0.0) {
                lambda = mu;
                break;
            }
            // Move from lambda towards mu until the first weight hits zero.
            let mut theta = 1.0f64;
            for (l, w) in lambda.iter().zip(&mu) {
                if *w <= 0.0 {
                    let denom = l - w;
                    if denom > 0.0 {
                        theta = theta.min(l / denom);
                    }
                }
            }
            for (l, w) in lambda.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * w;
            }
            // Drop at least the blocking atom, plus anything rounded to zero.
            let min_idx = lambda
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc })
                .0;
            let keep: Vec<bool> = lambda
                .iter()
                .enumerate()
                .map(|(i, &l)| i != min_idx && l > 0.0)
                .collect();
            let mut k = 0;
            support.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let mut k = 0;
            lambda.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
            if support.len() == 1 {
                break;
            }
        }
        x = vec![0.0; dim];
        for (&j, &l) in support.iter().zip(&lambda) {
            for (xd, ad) in x.iter_mut().zip(atom(j)) {
                *xd += l * ad;
            }
        }
    }

    let mut weights = vec![0.0; m];
    let mut nearest = vec![0.0; dim];
    for (&j, &l) in support.iter().zip(&lambda) {
        weights[j] = l;
        for (nd, ad) in nearest.iter_mut().zip(&atoms[j * dim..(j + 1) * dim]) {
            *nd += l * ad;
        }
    }
    let distance = nearest
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    FwSolution {
        distance,
        nearest,
        weights,
        iterations,
        gap,
    }
}

/// Affine weights `μ` (summing to 1) of the minimum-norm point in the affine
/// hull of `pts`. Returns `None` if the points are affinely dependent.
fn affine_min_norm(pts: &[&[f64]], dim: usize) -> Option<Vec<f64>> {
    let k = pts.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    let base = pts[0];
    // Modified Gram–Schmidt on the columns pᵢ − p₀, i ≥ 1.
    let cols: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let r_dim = k - 1;
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(r_dim);
    let mut r = vec![vec![0.0; r_dim]; r_dim];
    for (c, col) in cols.iter().enumerate() {
        let mut v = col.clone();
        let col_norm = norm(col);
        for (i, qi) in qs.iter().enumerate() {
            let proj = dot(qi, &v);
            r[i][c] = proj;
            for (vd, qd) in v.iter_mut().zip(qi) {
                *vd -= proj * qd;
            }
        }
        let nv = norm(&v);
        if nv <= 1e-12 * col_norm.max(1e-300) || nv == 0.0 {
            return None;
        }
        r[c][c] = nv;
        qs.push(v.iter().map(|x| x / nv).collect());
    }
    // min ‖p₀ + Dα‖ ⇒ Rα = −Qᵀp₀
    let rhs: Vec<f64> = qs.iter().map(|qi| -dot(qi, base)).collect();
    let mut alpha = vec![0.0; r_dim];
    for i in (0..r_dim).rev() {
        let mut acc = rhs[i];
        for j in i + 1..r_dim {
            acc -= r[i][j] * alpha[j];
        }
        alpha[i] = acc / r[i][i];
    }
    debug_assert!(dim >= r_dim);
    let mut mu = Vec::with_capacity(k);
    mu.push(1.0 - alpha.iter().sum::<f64>());
    mu.extend(alpha);
    Some(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(points: &[[f64; 2]]) -> PointSet {
        PointSet::from_points(&points.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn diamond() -> PointSet {
        ps(&[[2.0, 0.0], [-2.0, 0.0], [0.0, 2.0], [0.0, -2.0]])
    }

    #[test]
    fn projection_onto_diamond_vertex() {
        let h = hull_distance(&[3.0, 0.0], &diamond()).unwrap();
        assert!((h.distance - 1.0).abs() < 1e-9);
        assert!((h.nearest[0] - 2.0).abs() < 1e-9 && h.nearest[1].abs() < 1e-9);
        let s: f64 = h.coefficients.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(h.coefficients.iter().all(|&c| c >= 0.0));
    }

    #[test]
    fn centre_of_diamond_is_inside() {
        let h = hull_distance(&[0.0, 0.0], &diamond()).unwrap();
        assert!(h.distance < 1e-9, "{}", h.distance);
    }

    #[test]
    fn singleton_hull() {
        let h = hull_distance(&[1.5, -2.0], &ps(&[[1.5, -2.0]])).unwrap();
        assert_eq!(h.distance, 0.0);
        assert_eq!(h.nearest, vec![1.5, -2.0]);
    }

    #[test]
    fn projection_onto_segment() {
        let h = hull_distance(&[0.0, 1.0], &ps(&[[0.0, 0.0], [1.0, 1.0]])).unwrap();
        assert!((h.distance - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((h.nearest[0] - 0.5).abs() < 1e-9 && (h.nearest[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn hull_distance_errors() {
        assert!(matches!(
            hull_distance(&[0.0], &diamond()),
            Err(ScrnError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            hull_distance(&[0.0, 0.0], &PointSet::empty(2)),
            Err(ScrnError::EmptySet { .. })
        ));
    }

    #[test]
    fn duplicates_are_merged() {
        let set = ps(&[[1.0, 0.0], [1.0, 0.0], [3.0, 0.0]]);
        let h = hull_distance(&[2.0, 1.0], &set).unwrap();
        assert!((h.distance - 1.0).abs() < 1e-9);
        assert_eq!(h.coefficients[1], 0.0);
    }

    #[test]
    fn hulls_distance_examples() {
        let d = hulls_distance(&ps(&[[0.0, 0.0]]), &ps(&[[1.0, 0.0]])).unwrap();
        assert!((d.distance - 1.0).abs() < 1e-12);
        let d = hulls_distance(&ps(&[[0.0, 0.0], [1.0, 1.0]]), &ps(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert!(d.distance < 1e-7);
        let d = hulls_distance(&ps(&[[0.0, 0.0], [1.0, 0.0]]), &ps(&[[0.0, 2.0], [1.0, 2.0]])).unwrap();
        assert!((d.distance - 2.0).abs() < 1e-9);
        assert!((d.pa[1]).abs() < 1e-9 && (d.pb[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn linear_verdicts() {
        let v = is_linearly_separable(&ps(&[[0.0, 0.0]]), &ps(&[[1.0, 0.0]]), DEFAULT_TOL).unwrap();
        assert!(v.separable);
        let w = v.witness_w.unwrap();
        let b = v.witness_b.unwrap();
        // hyperplane x = 0.5, positive on the first set
        assert!((w[0] + 1.0).abs() < 1e-12 && w[1].abs() < 1e-12);
        assert!((b - 0.5).abs() < 1e-12);

        let xor = is_linearly_separable(
            &ps(&[[0.0, 0.0], [1.0, 1.0]]),
            &ps(&[[0.0, 1.0], [1.0, 0.0]]),
            DEFAULT_TOL,
        )
        .unwrap();
        assert!(!xor.separable && xor.witness_w.is_none());

        let inner = is_linearly_separable(&ps(&[[0.5, 0.1]]), &diamond(), DEFAULT_TOL).unwrap();
        assert!(!inner.separable);
    }

    #[test]
    fn convex_verdicts_are_directional() {
        let xor_a = ps(&[[0.0, 0.0], [1.0, 1.0]]);
        let xor_b = ps(&[[0.0, 1.0], [1.0, 0.0]]);
        let v = is_convexly_separable(&xor_a, &xor_b, DEFAULT_TOL).unwrap();
        assert!(v.separable);
        assert!((v.distance - 0.5f64.sqrt()).abs() < 1e-9);

        let centre = ps(&[[0.0, 0.0]]);
        assert!(
            !is_convexly_separable(&diamond(), &centre, DEFAULT_TOL)
                .unwrap()
                .separable
        );
        assert!(
            is_convexly_separable(&centre, &diamond(), DEFAULT_TOL)
                .unwrap()
                .separable
        );

        let mutual = is_mutually_convexly_separable(&xor_a, &xor_b, DEFAULT_TOL).unwrap();
        assert!(mutual.separable);
        let mutual = is_mutually_convexly_separable(&diamond(), &centre, DEFAULT_TOL).unwrap();
        assert!(!mutual.separable && mutual.b_from_a.separable);
    }

    #[test]
    fn pairwise_examples() {
        let blobs = vec![
            ps(&[[0.0, 0.0], [0.5, 0.2]]),
            ps(&[[10.0, 0.0], [10.3, 0.4]]),
            ps(&[[0.0, 10.0], [0.2, 9.5]]),
        ];
        let v = pairwise_verdicts(&blobs, PairwiseMode::Linear, DEFAULT_TOL).unwrap();
        assert!(v.all_separable());

        let classes = vec![
            ps(&[[0.0, 0.0], [1.0, 1.0]]),
            ps(&[[0.0, 1.0], [1.0, 0.0]]),
            ps(&[[5.0, 5.0]]),
        ];
        let v = pairwise_verdicts(&classes, PairwiseMode::MutualConvex, DEFAULT_TOL).unwrap();
        assert!(v.all_separable());
        let l = pairwise_verdicts(&classes, PairwiseMode::Linear, DEFAULT_TOL).unwrap();
        assert_eq!(l.first_failure(), Some((0, 1)));

        let shared = vec![ps(&[[0.0, 0.0], [1.0, 0.0]]), ps(&[[1.0, 0.0], [3.0, 3.0]])];
        let v = pairwise_verdicts(&shared, PairwiseMode::MutualConvex, DEFAULT_TOL).unwrap();
        assert!(!v.separable[0][1] && !v.separable[1][0] && v.separable[0][0]);
        assert!(pairwise_verdicts(&shared[..1], PairwiseMode::Linear, DEFAULT_TOL).is_err());
    }
}
