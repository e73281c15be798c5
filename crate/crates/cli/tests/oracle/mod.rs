//! Reference computations written against the math, not the library:
//! simplex-projected gradient hull distances with certified bounds, exact
//! 2-D hull distance by face enumeration, and plain forward passes.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scrn::{Scrn1Model, Scrn2Model};

pub fn relu(v: f64) -> f64 {
    v.max(0.0)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        css += uk;
        let t = (css - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Certified bracket `lower ≤ dist(q, CH(points)) ≤ upper`.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

/// Accelerated projected gradient on `‖q − Pλ‖²` over the simplex. The
/// upper bound comes from a feasible iterate, the lower bound from its
/// Frank–Wolfe gap. Stops early once `stop(bracket)` holds.
pub fn hull_bracket(q: &[f64], points: &[Vec<f64>], max_iter: usize, stop: impl Fn(Bracket) -> bool) -> Bracket {
    let k = points.len();
    let d: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(q).map(|(a, b)| a - b).collect())
        .collect();
    let gram: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| dot(&d[i], &d[j])).collect()).collect();
    // power iteration for the largest eigenvalue of the Gram matrix
    let mut v = vec![1.0; k];
    let mut lmax = 0.0;
    for _ in 0..100 {
        let w: Vec<f64> = (0..k).map(|i| dot(&gram[i], &v)).collect();
        let n = dot(&w, &w).sqrt();
        if n == 0.0 {
            break;
        }
        lmax = n / dot(&v, &v).sqrt();
        v = w.iter().map(|x| x / n).collect();
    }
    let step = 1.0 / (2.0 * lmax * 1.01 + 1e-300);
    let value = |l: &[f64]| -> (f64, Vec<f64>) {
        let gl: Vec<f64> = (0..k).map(|i| dot(&gram[i], l)).collect();
        (dot(l, &gl), gl.iter().map(|g| 2.0 * g).collect())
    };
    let bracket = |l: &[f64]| -> Bracket {
        let (f, g) = value(l);
        let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
        let gap = dot(&g, l) - gmin;
        Bracket {
            lower: (f - gap).max(0.0).sqrt(),
            upper: f.max(0.0).sqrt(),
        }
    };
    let mut x = vec![1.0 / k as f64; k];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut best = bracket(&x);
    for it in 0..max_iter {
        let (_, g) = value(&y);
        let xn = project_simplex(&y.iter().zip(&g).map(|(a, b)| a - step * b).collect::<Vec<_>>());
        let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = xn.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / tn * (a - b)).collect();
        x = xn;
        t = tn;
        if it % 10 == 0 || it + 1 == max_iter {
            let b = bracket(&x);
            best.lower = best.lower.max(b.lower);
            best.upper = best.upper.min(b.upper);
            if stop(best) {
                break;
            }
        }
    }
    best
}

/// `Some(true)` if certified farther than `margin` from the hull,
/// `Some(false)` if certified within `margin`, `None` if undecided.
pub fn farther_than(q: &[f64], points: &[Vec<f64>], margin: f64) -> Option<bool> {
    let b = hull_bracket(q, points, 20_000, |b| b.lower > margin || b.upper < margin);
    if b.lower > margin {
        Some(true)
    } else if b.upper < margin {
        Some(false)
    } else {
        None
    }
}

fn point_segment(q: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let aq: Vec<f64> = q.iter().zip(a).map(|(x, y)| x - y).collect();
    let l = dot(&ab, &ab);
    let t = if l == 0.0 {
        0.0
    } else {
        (dot(&aq, &ab) / l).clamp(0.0, 1.0)
    };
    let p: Vec<f64> = a.iter().zip(&ab).map(|(x, y)| x + t * y).collect();
    dist2(q, &p).sqrt()
}

fn in_triangle(q: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let cross = |o: &[f64], u: &[f64], v: &[f64]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    let d1 = cross(a, b, q);
    let d2 = cross(b, c, q);
    let d3 = cross(c, a, q);
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Exact distance from `q` to the hull of 2-D points: zero inside any
/// triangle of points, otherwise the nearest vertex or segment.
pub fn hull_distance_2d_exact(q: &[f64], pts: &[Vec<f64>]) -> f64 {
    let k = pts.len();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                if in_triangle(q, &pts[i], &pts[j], &pts[l]) {
                    return 0.0;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    for i in 0..k {
        best = best.min(dist2(q, &pts[i]).sqrt());
        for j in i + 1..k {
            best = best.min(point_segment(q, &pts[i], &pts[j]));
        }
    }
    best
}

/// Minimum over a uniform grid of convex weights with denominator `n`.
pub fn hull_distance_grid(q: &[f64], pts: &[Vec<f64>], n: usize) -> f64 {
    fn rec(q: &[f64], pts: &[Vec<f64>], n: usize, i: usize, left: usize, acc: &mut [f64], best: &mut f64) {
        if i + 1 == pts.len() {
            let p: Vec<f64> = acc
                .iter()
                .zip(&pts[i])
                .map(|(a, x)| a + left as f64 / n as f64 * x)
                .collect();
            *best = best.min(dist2(q, &p));
            return;
        }
        for w in 0..=left {
            let mut next: Vec<f64> = acc
                .iter()
                .zip(&pts[i])
                .map(|(a, x)| a + w as f64 / n as f64 * x)
                .collect();
            rec(q, pts, n, i + 1, left - w, &mut next, best);
        }
    }
    let mut best = f64::INFINITY;
    rec(q, pts, n, 0, n, &mut vec![0.0; q.len()], &mut best);
    best.sqrt()
}

pub fn uniform_point(rng: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

/// Uniform in a ball around `center`.
pub fn ball_point(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    loop {
        let p = uniform_point(rng, center.len(), 1.0);
        if dot(&p, &p) <= 1.0 {
            return p.iter().zip(center).map(|(a, c)| c + radius * a).collect();
        }
    }
}

/// `c + Aᵀ relu(Wᵀx + b)` evaluated from the raw parameters.
pub fn scrn1_forward(m: &Scrn1Model, x: &[f64]) -> Vec<f64> {
    let w = m.hidden().weights();
    let b = m.hidden().bias();
    let z: Vec<f64> = (0..w.cols())
        .map(|j| relu((0..w.rows()).map(|i| w.get(i, j) * x[i]).sum::<f64>() + b[j]))
        .collect();
    let a = m.output_weights();
    (0..a.cols())
        .map(|k| m.output_bias()[k] + (0..a.rows()).map(|j| a.get(j, k) * z[j]).sum::<f64>())
        .collect()
}

fn layer(w: &scrn::Matrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    (0..w.cols())
        .map(|j| relu((0..w.rows()).map(|i| w.get(i, j) * x[i]).sum::<f64>() + b[j]))
        .collect()
}

pub fn scrn2_hidden1(m: &Scrn2Model, x: &[f64]) -> Vec<f64> {
    layer(m.layer1().weights(), m.layer1().bias(), x)
}

/// Output as a function of the first hidden layer's activations.
pub fn scrn2_from_z1(m: &Scrn2Model, z1: &[f64]) -> Vec<f64> {
    let z2 = layer(m.layer2().weights(), m.layer2().bias(), z1);
    let a = m.output_weights();
    (0..a.cols())
        .map(|k| m.output_bias()[k] + (0..a.rows()).map(|j| a.get(j, k) * z2[j]).sum::<f64>())
        .collect()
}

pub fn scrn2_forward(m: &Scrn2Model, x: &[f64]) -> Vec<f64> {
    scrn2_from_z1(m, &scrn2_hidden1(m, x))
}

/// `b₀ − Σ relu(wₖᵀx + bₖ)`.
pub fn canonical_shl(b0: f64, w: &scrn::Matrix, b: &[f64], x: &[f64]) -> f64 {
    b0 - layer(w, b, x).iter().sum::<f64>()
}

/// `b₀ − Σ relu(W₂ᵀ relu(W₁ᵀx + b₁) + b₂)`.
pub fn canonical_thl(m: &scrn::CanonicalThl, x: &[f64]) -> f64 {
    let z1 = layer(&m.w1, &m.b1, x);
    m.b0 - layer(&m.w2, &m.b2, &z1).iter().sum::<f64>()
}

/// Largest chord-above-function gap along `x₀ → x₁` at `samples` interior
/// points; `≤ 0` up to rounding for a concave function.
pub fn chord_gap(f: impl Fn(&[f64]) -> f64, x0: &[f64], x1: &[f64], samples: usize) -> (f64, f64) {
    let (f0, f1) = (f(x0), f(x1));
    let mut worst = f64::NEG_INFINITY;
    let mut scale = 1.0f64.max(f0.abs()).max(f1.abs());
    for s in 1..=samples {
        let t = s as f64 / (samples + 1) as f64;
        let x: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        let fx = f(&x);
        scale = scale.max(fx.abs());
        worst = worst.max((1.0 - t) * f0 + t * f1 - fx);
    }
    (worst, scale)
}
