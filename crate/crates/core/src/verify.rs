//! Seeded property suites: the library's invariants checked on random
//! instances and reported as worst-case gaps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construct::build_shl_separator;
use crate::error::{Result, ScrnError};
use crate::geometry::{
    hull_distance, is_convexly_separable, is_linearly_separable, is_mutually_convexly_separable, PointSet, DEFAULT_TOL,
};
use crate::linalg::{dot, relu, Matrix};
use crate::mm::{solve_convex, verify_surrogate, Bounds, FnConvex, SolverOptions, SurrogateOracle};
use crate::network::{concavity_probe, ActiveSet, CanonicalThl, ReluLayer, Scrn1Model, Scrn2Model, SignConstraint};
use crate::train::{random_thl, thl_bounds, train_shl, train_thl, FirstLayerProblem, Init, ShlProblem, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Geometry,
    Surrogates,
    Descent,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Corrupt the constructed models' output weights so that the margin
    /// property must fail. Used to test the failure path.
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed violation (≤ tolerance passes).
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl PropertyResult {
    fn new(suite: &'static str, name: &'static str, worst: f64, tolerance: f64, cases: usize) -> Self {
        PropertyResult {
            suite,
            name,
            passed: worst <= tolerance,
            worst,
            tolerance,
            cases,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<PropertyResult>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Geometry | Suite::All) {
        out.extend(geometry_suite(opts)?);
    }
    if matches!(suite, Suite::Surrogates | Suite::All) {
        out.extend(surrogate_suite(opts)?);
    }
    if matches!(suite, Suite::Descent | Suite::All) {
        out.extend(descent_suite(opts)?);
    }
    Ok(out)
}

fn rng_for(opts: &VerifyOptions, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    rng
}

fn cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize, center: &[f64], spread: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|d| center[d] + rng.gen_range(-spread..spread)).collect())
        .collect()
}

/// Positive cloud plus negatives kept only if they are at least `gap` from
/// its hull.
fn convexly_separable_instance(rng: &mut ChaCha8Rng, dim: usize) -> Result<(PointSet, PointSet)> {
    let n = rng.gen_range(2..12);
    let pos = PointSet::new(dim, &cloud(rng, n, dim, &vec![0.0; dim], 1.0))?;
    let mut neg = PointSet::empty(dim);
    while neg.len() < 8 {
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        if hull_distance(&q, &pos)?.distance > 0.05 {
            neg.push(&q)?;
        }
    }
    Ok((pos, neg))
}

fn simplex_brute_force(q: &[f64], pts: &[Vec<f64>], steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    let k = pts.len();
    let mut eval = |lam: &[usize]| {
        let p: Vec<f64> = (0..q.len())
            .map(|d| (0..k).map(|i| lam[i] as f64 / steps as f64 * pts[i][d]).sum())
            .collect();
        best = best.min(crate::linalg::distance(q, &p));
    };
    match k {
        1 => eval(&[steps]),
        2 => (0..=steps).for_each(|i| eval(&[i, steps - i])),
        3 => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    eval(&[i, j, steps - i - j]);
                }
            }
        }
        _ => {
            for i in 0..=steps {
                for j in 0..=steps - i {
                    for l in 0..=steps - i - j {
                        eval(&[i, j, l, steps - i - j - l]);
                    }
                }
            }
        }
    }
    best
}

fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    // product of random Givens rotations
    let mut r: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..3 * dim {
        let i = rng.gen_range(0..dim);
        let j = rng.gen_range(0..dim);
        if i == j {
            continue;
        }
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (c, s) = (t.cos(), t.sin());
        for row in r.iter_mut() {
            let (a, b) = (row[i], row[j]);
            row[i] = c * a - s * b;
            row[j] = s * a + c * b;
        }
    }
    r
}

fn geometry_suite(opts: &VerifyOptions) -> Result<Vec<PropertyResult>> {
    let mut rng = rng_for(opts, 1);
    let mut results = Vec::new();

    let mut worst = 0.0f64;
    let cases = 30;
    for _ in 0..cases {
        let k = rng.gen_range(1..=4);
        let pts = cloud(&mut rng, k, 2, &[0.0, 0.0], 1.0);
        let q: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let d = hull_distance(&q, &PointSet::new(2, &pts)?)?.distance;
        worst = worst.max((d - simplex_brute_force(&q, &pts, 200)).abs());
    }
    results.push(PropertyResult::new(
        "geometry",
        "hull_distance_vs_brute_force",
        worst,
        1e-3,
        cases,
    ));

    let mut worst = 0.0f64;
    let cases = 40;
    for c in 0..cases {
        let dim = 2 + c % 4;
        let pts = cloud(&mut rng, 10, dim, &vec![0.0; dim], 1.0);
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let rot = random_rotation(&mut rng, dim);
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let tf = |p: &[f64]| -> Vec<f64> { (0..dim).map(|i| dot(&rot[i], p) + shift[i]).collect() };
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| tf(p)).collect();
        let d0 = hull_distance(&q, &PointSet::new(dim, &pts)?)?.distance;
        let d1 = hull_distance(&tf(&q), &PointSet::new(dim, &moved)?)?.distance;
        worst = worst.max((d0 - d1).abs() / (1.0 + d0));
    }
    results.push(PropertyResult::new(
        "geometry",
        "rigid_motion_invariance",
        worst,
        1e-7,
        cases,
    ));

    let mut implication = 0.0f64;
    let mut witness = 0.0f64;
    let cases = 100;
    for _ in 0..cases {
        let dim = rng.gen_range(2..=4);
        let offset = rng.gen_range(0.0..4.0);
        let a = PointSet::new(dim, &cloud(&mut rng, 6, dim, &vec![0.0; dim], 1.0))?;
        let mut center = vec![0.0; dim];
        center[0] = offset;
        let b = PointSet::new(dim, &cloud(&mut rng, 6, dim, &center, 1.0))?;
        let lin = is_linearly_separable(&a, &b, DEFAULT_TOL)?;
        if lin.separable {
            if !is_mutually_convexly_separable(&a, &b, DEFAULT_TOL)?.separable {
                implication = 1.0;
            }
            let w = lin.witness_w.as_ref().expect("witness");
            let b0 = lin.witness_b.expect("witness");
            for p in a.iter() {
                witness = witness.max(-(dot(w, p) + b0));
            }
            for p in b.iter() {
                witness = witness.max(dot(w, p) + b0);
            }
        }
    }
    results.push(PropertyResult::new(
        "geometry",
        "linear_implies_mutual_convex",
        implication,
        0.0,
        cases,
    ));
    results.push(PropertyResult::new(
        "geometry",
        "linear_witness_sign",
        witness,
        0.0,
        cases,
    ));

    let mut worst = 0.0f64;
    let cases = 30;
    for c in 0..cases {
        let dim = [2, 3, 5][c % 3];
        let (pos, neg) = convexly_separable_instance(&mut rng, dim)?;
        let mut model = build_shl_separator(&pos, &neg, DEFAULT_TOL)?;
        if opts.inject_fault {
            let mut a = model.output_weights().clone();
            a.scale(0.5);
            model = Scrn1Model::new(model.hidden().clone(), a, model.output_bias().to_vec())?;
        }
        let f = |x: &[f64]| model.forward(x).map(|y| y[0]);
        for x in pos.iter() {
            worst = worst.max(1.0 - f(x)?);
        }
        for x in neg.iter() {
            worst = worst.max(f(x)? + 1.0);
        }
    }
    results.push(PropertyResult::new(
        "geometry",
        "constructed_margins",
        worst,
        1e-9,
        cases,
    ));

    let mut worst = 0.0f64;
    let cases = 20;
    for _ in 0..cases {
        let (pos, neg) = convexly_separable_instance(&mut rng, 2)?;
        let cover = crate::construct::greedy_convex_cover(&neg, &pos, DEFAULT_TOL)?;
        for cl in &cover.clusters {
            let v = is_convexly_separable(&neg.subset(cl), &pos, DEFAULT_TOL)?;
            if !v.separable {
                worst = worst.max(1.0);
            }
        }
    }
    results.push(PropertyResult::new(
        "geometry",
        "cover_clusters_separable",
        worst,
        0.0,
        cases,
    ));
    Ok(results)
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointSet {
    PointSet::new(dim, &cloud(rng, n, dim, &vec![0.0; dim], 2.0)).expect("dims")
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

fn random_layer(rng: &mut ChaCha8Rng, n: usize, m: usize, sign: SignConstraint) -> ReluLayer {
    let mut w = Matrix::from_row_major(n, m, random_vec(rng, n * m, 1.0));
    if sign == SignConstraint::Nonpositive {
        for v in w.as_mut_slice() {
            *v = -v.abs();
        }
    }
    ReluLayer::new(w, random_vec(rng, m, 1.0), sign).expect("valid layer")
}

fn nonpositive(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    Matrix::from_row_major(n, 1, (0..n).map(|_| -rng.gen_range(0.0..1.0)).collect())
}

fn surrogate_suite(opts: &VerifyOptions) -> Result<Vec<PropertyResult>> {
    let mut rng = rng_for(opts, 2);
    let mut results = Vec::new();

    let (mut bound, mut touch) = (f64::NEG_INFINITY, 0.0f64);
    let anchors = 20;
    for _ in 0..anchors {
        let dim = rng.gen_range(2..=3);
        let pos = random_points(&mut rng, 6, dim);
        let neg = random_points(&mut rng, 6, dim);
        let problem = ShlProblem::new(3, &pos, &neg, 1e-3);
        let n = problem.param_count();
        let anchor = random_vec(&mut rng, n, 2.0);
        let probes: Vec<Vec<f64>> = (0..50).map(|_| random_vec(&mut rng, n, 2.0)).collect();
        let scale = 1.0 + problem.objective(&anchor).abs();
        let c = verify_surrogate(&problem, &anchor, &probes);
        bound = bound.max(c.max_bound_gap / scale);
        touch = touch.max(c.touch_gap / scale);
    }
    results.push(PropertyResult::new(
        "surrogates",
        "shl_surrogate_bound",
        bound,
        1e-9,
        anchors,
    ));
    results.push(PropertyResult::new(
        "surrogates",
        "shl_surrogate_touch",
        touch,
        1e-9,
        anchors,
    ));

    let (mut bound, mut touch) = (f64::NEG_INFINITY, 0.0f64);
    for t in 0..anchors {
        let pos = random_points(&mut rng, 6, 2);
        let neg = random_points(&mut rng, 6, 2);
        let mut m = random_thl(2, 4, 3, opts.seed.wrapping_add(t as u64));
        m.b1 = random_vec(&mut rng, 4, 0.5);
        m.b2 = random_vec(&mut rng, 3, 0.5);
        m.b0 = rng.gen_range(-1.0..1.0);
        let problem = FirstLayerProblem::new(&m, &pos, &neg, 1e-3);
        let anchor = FirstLayerProblem::params_of(&m);
        let probes: Vec<Vec<f64>> = (0..50).map(|_| random_vec(&mut rng, anchor.len(), 2.0)).collect();
        let scale = 1.0 + problem.objective(&anchor).abs();
        let c = verify_surrogate(&problem, &anchor, &probes);
        bound = bound.max(c.max_bound_gap / scale);
        touch = touch.max(c.touch_gap / scale);
    }
    results.push(PropertyResult::new(
        "surrogates",
        "first_layer_surrogate_bound",
        bound,
        1e-9,
        anchors,
    ));
    results.push(PropertyResult::new(
        "surrogates",
        "first_layer_surrogate_touch",
        touch,
        1e-9,
        anchors,
    ));

    let (mut sandwich, mut touch) = (f64::NEG_INFINITY, 0.0f64);
    let trials = 300;
    for _ in 0..trials {
        let m = random_canonical_thl(&mut rng, 3, 5, 4);
        let x = random_vec(&mut rng, 3, 2.0);
        let a1 = random_pattern(&mut rng, 5);
        let a2 = random_pattern(&mut rng, 4);
        let f = m.eval(&x);
        let (f1, f2) = thl_bounds(&m, &x, &a1, &a2)?;
        sandwich = sandwich.max(f1 - f).max(f - f2);
        let z1 = m.z1(&x);
        let b1 = ActiveSet::from_pre_activations(&z1);
        let b2 = ActiveSet::from_pre_activations(&m.z2_from_z1(&z1));
        let (g1, g2) = thl_bounds(&m, &x, &b1, &b2)?;
        touch = touch.max((g1 - f).abs()).max((g2 - f).abs());
    }
    results.push(PropertyResult::new(
        "surrogates",
        "two_layer_sandwich",
        sandwich,
        1e-12,
        trials,
    ));
    results.push(PropertyResult::new(
        "surrogates",
        "two_layer_sandwich_touch",
        touch,
        1e-12,
        trials,
    ));

    let mut worst = f64::NEG_INFINITY;
    let pairs = 200;
    let pos = random_points(&mut rng, 6, 2);
    let neg = random_points(&mut rng, 6, 2);
    let shl = ShlProblem::new(3, &pos, &neg, 1e-3);
    let thl = random_canonical_thl(&mut rng, 2, 4, 3);
    let first = FirstLayerProblem::new(&thl, &pos, &neg, 1e-3);
    let shl_anchor = random_vec(&mut rng, shl.param_count(), 2.0);
    let first_anchor = FirstLayerProblem::params_of(&thl);
    let gs = shl.majorize(&shl_anchor);
    let gf = first.majorize(&first_anchor);
    for _ in 0..pairs {
        for (g, n) in [(&gs, shl_anchor.len()), (&gf, first_anchor.len())] {
            let u = random_vec(&mut rng, n, 2.0);
            let v = random_vec(&mut rng, n, 2.0);
            let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| (a + b) / 2.0).collect();
            let gap = g.value(&mid) - (g.value(&u) + g.value(&v)) / 2.0;
            worst = worst.max(gap);
        }
    }
    results.push(PropertyResult::new(
        "surrogates",
        "surrogate_midpoint_convexity",
        worst,
        1e-9,
        pairs,
    ));

    let segments = 300;
    let (mut w1, mut w2, mut w3) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..segments {
        let hidden = random_layer(&mut rng, 3, 5, SignConstraint::None);
        let m1 = Scrn1Model::new(hidden.clone(), nonpositive(&mut rng, 5), vec![0.3])?;
        let (x0, x1) = (random_vec(&mut rng, 3, 3.0), random_vec(&mut rng, 3, 3.0));
        let f = |x: &[f64]| m1.forward(x).map_or(f64::NAN, |y| y[0]);
        let scale = 1.0 + f(&x0).abs().max(f(&x1).abs());
        w1 = w1.max(concavity_probe(f, &x0, &x1, 9) / scale);

        let layer2 = random_layer(&mut rng, 5, 4, SignConstraint::Nonpositive);
        let m2 = Scrn2Model::new(hidden, layer2, nonpositive(&mut rng, 4), vec![0.3])?;
        let (z0, z1) = (random_vec(&mut rng, 5, 3.0), random_vec(&mut rng, 5, 3.0));
        let g = |z: &[f64]| m2.forward_from_hidden(z)[0];
        let scale = 1.0 + g(&z0).abs().max(g(&z1).abs());
        w2 = w2.max(concavity_probe(g, &z0, &z1, 9) / scale);

        // f(x; W, b) = aᵀmax(0, Wᵀx + b) + c as a function of (W, b)
        let x = random_vec(&mut rng, 3, 2.0);
        let a = nonpositive(&mut rng, 5).column(0);
        let h = |p: &[f64]| {
            let pre: Vec<f64> = (0..5)
                .map(|k| p[15 + k] + (0..3).map(|i| p[i * 5 + k] * x[i]).sum::<f64>())
                .collect();
            dot(&a, &relu(&pre)) + 0.3
        };
        let (p0, p1) = (random_vec(&mut rng, 20, 2.0), random_vec(&mut rng, 20, 2.0));
        let scale = 1.0 + h(&p0).abs().max(h(&p1).abs());
        w3 = w3.max(concavity_probe(h, &p0, &p1, 9) / scale);
    }
    results.push(PropertyResult::new(
        "surrogates",
        "concavity_one_layer_in_x",
        w1,
        1e-9,
        segments,
    ));
    results.push(PropertyResult::new(
        "surrogates",
        "concavity_two_layer_in_z1",
        w2,
        1e-9,
        segments,
    ));
    results.push(PropertyResult::new(
        "surrogates",
        "concavity_in_parameters",
        w3,
        1e-9,
        segments,
    ));
    Ok(results)
}

fn random_canonical_thl(rng: &mut ChaCha8Rng, n: usize, l1: usize, l2: usize) -> CanonicalThl {
    let w1 = Matrix::from_row_major(n, l1, random_vec(rng, n * l1, 1.0));
    let w2 = Matrix::from_row_major(l1, l2, (0..l1 * l2).map(|_| -rng.gen_range(0.0..1.0)).collect());
    CanonicalThl::new(
        rng.gen_range(-1.0..1.0),
        w1,
        random_vec(rng, l1, 1.0),
        w2,
        random_vec(rng, l2, 1.0),
    )
    .expect("valid shapes")
}

fn random_pattern(rng: &mut ChaCha8Rng, n: usize) -> ActiveSet {
    ActiveSet::from_indices((0..n).filter(|_| rng.gen_bool(0.5)).collect())
}

fn descent_suite(opts: &VerifyOptions) -> Result<Vec<PropertyResult>> {
    let mut rng = rng_for(opts, 3);
    let mut results = Vec::new();

    // max of random affine pieces plus an absolute-value term
    let mut worst = f64::NEG_INFINITY;
    let cases = 100;
    let inner = SolverOptions {
        budget: 200,
        ..SolverOptions::default()
    };
    for _ in 0..cases {
        let n = rng.gen_range(1..=4);
        let pieces: Vec<(Vec<f64>, f64)> = (0..5)
            .map(|_| (random_vec(&mut rng, n, 2.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let value = |x: &[f64]| {
            pieces
                .iter()
                .map(|(a, b)| dot(a, x) + b)
                .fold(f64::NEG_INFINITY, f64::max)
                + x.iter().map(|v| v.abs()).sum::<f64>()
        };
        let sub = |x: &[f64]| {
            let (k, _) = pieces
                .iter()
                .enumerate()
                .map(|(k, (a, b))| (k, dot(a, x) + b))
                .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
            pieces[k].0.iter().zip(x).map(|(a, v)| a + v.signum()).collect()
        };
        let g = FnConvex {
            value,
            subgradient: sub,
        };
        let warm = random_vec(&mut rng, n, 3.0);
        let mut bounds = Bounds::unbounded(n);
        if rng.gen_bool(0.5) {
            bounds.set_nonpositive(0);
        }
        let s = solve_convex(&g, &warm, Some(&bounds), &inner)?;
        worst = worst.max(s.value - s.warm_value);
        let mut once = s.x.clone();
        bounds.project(&mut once);
        if once != s.x {
            worst = worst.max(1.0);
        }
    }
    results.push(PropertyResult::new(
        "descent",
        "inner_solver_never_worse",
        worst,
        0.0,
        cases,
    ));

    let xor = (
        PointSet::from_points(&[vec![0.0, 0.0], vec![1.0, 1.0]])?,
        PointSet::from_points(&[vec![0.0, 1.0], vec![1.0, 0.0]])?,
    );
    let mut worst = f64::NEG_INFINITY;
    let runs = 6;
    for s in 0..runs as u64 {
        let cfg = TrainConfig {
            init: Init::Random {
                seed: opts.seed.wrapping_add(s),
            },
            max_outer: 30,
            inner_budget: 500,
            ..TrainConfig::default()
        };
        let r = train_shl(&xor.0, &xor.1, &cfg)?;
        worst = worst.max(trace_rise(&r.trace));
    }
    results.push(PropertyResult::new("descent", "shl_trace_monotone", worst, 1e-9, runs));

    let mut worst = f64::NEG_INFINITY;
    let mut w2_positive = 0.0f64;
    for s in 0..3u64 {
        let cfg = TrainConfig {
            hidden: vec![4, 2],
            init: Init::Random {
                seed: opts.seed.wrapping_add(s),
            },
            max_outer: 8,
            inner_budget: 300,
            ..TrainConfig::default()
        };
        let r = train_thl(&xor.0, &xor.1, &cfg)?;
        worst = worst.max(trace_rise(&r.trace));
        w2_positive = w2_positive.max(r.model.w2.as_slice().iter().cloned().fold(0.0, f64::max));
    }
    results.push(PropertyResult::new("descent", "thl_trace_monotone", worst, 1e-9, 3));
    results.push(PropertyResult::new(
        "descent",
        "second_layer_nonpositive",
        w2_positive,
        0.0,
        3,
    ));
    Ok(results)
}

fn trace_rise(t: &crate::mm::MmTrace) -> f64 {
    let mut prev = t.initial_objective;
    let mut worst = f64::NEG_INFINITY;
    for it in &t.iterations {
        worst = worst.max(it.objective - prev);
        prev = it.objective;
    }
    worst
}

/// Fails if any property failed.
pub fn check_all(results: &[PropertyResult]) -> Result<()> {
    match results.iter().find(|r| !r.passed) {
        Some(r) => Err(ScrnError::VerificationFailed {
            set: r.name.into(),
            index: 0,
            value: r.worst,
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let r = run_suite(Suite::All, &VerifyOptions::default()).unwrap();
        for p in &r {
            assert!(p.passed, "{p:?}");
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let r = run_suite(
            Suite::Geometry,
            &VerifyOptions {
                seed: 0,
                inject_fault: true,
            },
        )
        .unwrap();
        assert!(r.iter().any(|p| p.name == "constructed_margins" && !p.passed));
        assert!(check_all(&r).is_err());
    }
}
