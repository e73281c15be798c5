use proptest::prelude::*;
use scrn::construct::{build_shl_separator, build_thl_separator};
use scrn::data::LabeledDataset;
use scrn::decompose::shl_decompose;
use scrn::geometry::{hull_distance, is_convexly_separable, is_linearly_separable, is_mutually_convexly_separable};
use scrn::network::concavity_probe;
use scrn::train::{train_shl, Init, TrainConfig};
use scrn::{ActiveSet, Model, PointSet, DEFAULT_TOL};

fn point2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 2)
}

fn cloud2(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(point2(), 1..=max)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn seg(q: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let l = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l == 0.0 {
        0.0
    } else {
        (((q[0] - a[0]) * ab[0] + (q[1] - a[1]) * ab[1]) / l).clamp(0.0, 1.0)
    };
    dist(q, &[a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Exact planar hull distance by enumerating triangles and segments.
fn reference_distance(q: &[f64], pts: &[Vec<f64>]) -> f64 {
    let cross = |o: &[f64], u: &[f64], v: &[f64]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    let k = pts.len();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                let d = [
                    cross(&pts[i], &pts[j], q),
                    cross(&pts[j], &pts[l], q),
                    cross(&pts[l], &pts[i], q),
                ];
                if d.iter().all(|&v| v >= 0.0) || d.iter().all(|&v| v <= 0.0) {
                    return 0.0;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    for i in 0..k {
        best = best.min(dist(q, &pts[i]));
        for j in i + 1..k {
            best = best.min(seg(q, &pts[i], &pts[j]));
        }
    }
    best
}

fn set(p: &[Vec<f64>]) -> PointSet {
    PointSet::from_points(p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hull_distance_matches_planar_enumeration(pts in cloud2(6), q in point2()) {
        let got = hull_distance(&q, &set(&pts)).unwrap();
        let want = reference_distance(&q, &pts);
        prop_assert!((got.distance - want).abs() <= 1e-6 * (1.0 + want), "{} vs {}", got.distance, want);
        let s: f64 = got.coefficients.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-9);
        prop_assert!(got.coefficients.iter().all(|&c| c >= -1e-12));
        for d in 0..2 {
            let comb: f64 = pts.iter().zip(&got.coefficients).map(|(p, c)| p[d] * c).sum();
            prop_assert!((comb - got.nearest[d]).abs() < 1e-9);
        }
    }

    #[test]
    fn hull_distance_is_translation_invariant(pts in cloud2(8), q in point2(), shift in point2()) {
        let moved: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] + shift[0], p[1] + shift[1]]).collect();
        let qm = [q[0] + shift[0], q[1] + shift[1]];
        let a = hull_distance(&q, &set(&pts)).unwrap().distance;
        let b = hull_distance(&qm, &set(&moved)).unwrap().distance;
        prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a));
    }

    #[test]
    fn members_are_at_distance_zero(pts in cloud2(8), pick in any::<prop::sample::Index>()) {
        let q = pts[pick.index(pts.len())].clone();
        prop_assert!(hull_distance(&q, &set(&pts)).unwrap().distance <= DEFAULT_TOL);
    }

    #[test]
    fn linear_witness_separates_and_implies_mutual(a in cloud2(6), b in cloud2(6), gap in 0.5..4.0f64) {
        let b: Vec<Vec<f64>> = b.iter().map(|p| vec![p[0] + 6.0 + gap, p[1]]).collect();
        let (sa, sb) = (set(&a), set(&b));
        let v = is_linearly_separable(&sa, &sb, DEFAULT_TOL).unwrap();
        prop_assert!(v.separable);
        let w = v.witness_w.unwrap();
        let c = v.witness_b.unwrap();
        for p in &a {
            prop_assert!(w[0] * p[0] + w[1] * p[1] + c > 0.0);
        }
        for p in &b {
            prop_assert!(w[0] * p[0] + w[1] * p[1] + c < 0.0);
        }
        prop_assert!(is_mutually_convexly_separable(&sa, &sb, DEFAULT_TOL).unwrap().separable);
    }

    #[test]
    fn convex_verdict_agrees_with_reference(a in cloud2(6), b in cloud2(6)) {
        let v = is_convexly_separable(&set(&a), &set(&b), DEFAULT_TOL).unwrap();
        let nearest = b.iter().map(|q| reference_distance(q, &a)).fold(f64::INFINITY, f64::min);
        // skip the band where rounding decides
        prop_assume!((nearest - DEFAULT_TOL).abs() > 1e-6);
        prop_assert_eq!(v.separable, nearest > DEFAULT_TOL);
    }

    #[test]
    fn constructed_separator_has_unit_margins(a in cloud2(8), b in cloud2(8), r in 4.0..8.0f64) {
        // negatives pushed radially out of a disc that contains every positive
        let neg: Vec<Vec<f64>> = b
            .iter()
            .map(|p| {
                let n = (p[0] * p[0] + p[1] * p[1]).sqrt().max(1e-3);
                vec![p[0] / n * (r + n), p[1] / n * (r + n)]
            })
            .collect();
        let model = build_shl_separator(&set(&a), &set(&neg), DEFAULT_TOL).unwrap();
        for p in &a {
            prop_assert!(model.forward(p).unwrap()[0] >= 1.0 - 1e-9);
        }
        for p in &neg {
            prop_assert!(model.forward(p).unwrap()[0] <= -1.0 + 1e-9);
        }
        let report = shl_decompose(&model, &set(&a), &set(&neg)).unwrap();
        prop_assert!(report.coverage_ok && report.all_verified);
        let (x0, x1) = (&a[0], &neg[neg.len() - 1]);
        let f = |z: &[f64]| model.forward(z).unwrap()[0];
        let scale = 1.0 + f(x0).abs().max(f(x1).abs());
        prop_assert!(concavity_probe(f, x0, x1, 7) <= 1e-9 * scale);
    }

    #[test]
    fn thl_separates_disjoint_sets(pts in prop::collection::vec(point2(), 4..16), split in any::<u64>()) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, p) in pts.iter().enumerate() {
            if (split >> (i % 64)) & 1 == 0 { pos.push(p.clone()) } else { neg.push(p.clone()) }
        }
        prop_assume!(!pos.is_empty() && !neg.is_empty());
        let min_gap = pos.iter().flat_map(|p| neg.iter().map(move |q| dist(p, q))).fold(f64::INFINITY, f64::min);
        prop_assume!(min_gap > 1e-3);
        let model = build_thl_separator(&set(&pos), &set(&neg), DEFAULT_TOL).unwrap();
        prop_assert!(model.check_sign_constraints().is_empty());
        for p in &pos {
            prop_assert!(model.forward(p).unwrap()[0] > 0.0);
        }
        for p in &neg {
            prop_assert!(model.forward(p).unwrap()[0] < 0.0);
        }
    }

    #[test]
    fn csv_round_trip(pts in cloud2(10), labels in prop::collection::vec(0usize..3, 10)) {
        let labels: Vec<usize> = labels[..pts.len()].to_vec();
        let d = LabeledDataset::new(set(&pts), labels).unwrap();
        let back = LabeledDataset::from_csv_str(&d.to_csv_string().unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn active_set_from_indices_is_canonical(idx in prop::collection::vec(0usize..10, 0..20)) {
        let s = ActiveSet::from_indices(idx.clone());
        prop_assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx.iter().all(|i| s.contains(*i)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn training_never_increases_the_objective(a in cloud2(6), b in cloud2(6), seed in 0u64..1000) {
        let cfg = TrainConfig {
            hidden: vec![3],
            max_outer: 15,
            inner_budget: 400,
            init: Init::Random { seed },
            ..TrainConfig::default()
        };
        let r = train_shl(&set(&a), &set(&b), &cfg).unwrap();
        prop_assert!(r.trace.is_monotone());
        prop_assert!(r.trace.final_objective() <= r.trace.initial_objective + 1e-9);
        prop_assert!((r.report.total - r.trace.final_objective()).abs() <= 1e-9 * (1.0 + r.report.total));
    }

    #[test]
    fn model_json_round_trip(a in cloud2(5), shift in 5.0..9.0f64) {
        let b: Vec<Vec<f64>> = a.iter().map(|p| vec![p[0] + shift, p[1] - shift]).collect();
        let m = Model::Scrn2(build_thl_separator(&set(&a), &set(&b), DEFAULT_TOL).unwrap());
        let text = m.to_json().unwrap();
        let back = Model::from_json(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_json().unwrap(), text);
    }
}
