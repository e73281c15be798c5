//! Labeled datasets, synthetic generators and CSV I/O.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, ScrnError};
use crate::geometry::{pairwise_verdicts, PairwiseMode, PointSet, DEFAULT_TOL};

/// How many times blob generation is retried before giving up.
pub const BLOB_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub points: PointSet,
    pub labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(points: PointSet, labels: Vec<usize>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(ScrnError::DimensionMismatch {
                expected: points.len(),
                found: labels.len(),
            });
        }
        Ok(LabeledDataset { points, labels })
    }

    /// Class `k` gets label `k`.
    pub fn from_classes(classes: &[PointSet]) -> Result<Self> {
        let refs: Vec<&PointSet> = classes.iter().collect();
        let points = PointSet::union(&refs)?;
        let labels = classes
            .iter()
            .enumerate()
            .flat_map(|(k, c)| std::iter::repeat_n(k, c.len()))
            .collect();
        Ok(LabeledDataset { points, labels })
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn class(&self, k: usize) -> PointSet {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == k).collect();
        self.points.subset(&idx)
    }

    pub fn classes(&self) -> Vec<PointSet> {
        (0..self.n_classes()).map(|k| self.class(k)).collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x{i}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_err)?;
        for (p, l) in self.points.iter().zip(&self.labels) {
            let mut row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            row.push(l.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| ScrnError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| ScrnError::Io(e.to_string()))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        let cols: Vec<&str> = header.iter().map(str::trim).collect();
        if cols.last() != Some(&"label") {
            return Err(ScrnError::parse_at(1, "last column must be 'label'"));
        }
        let dim = cols.len() - 1;
        if dim == 0 {
            return Err(ScrnError::parse_at(1, "no coordinate columns"));
        }
        for (i, c) in cols[..dim].iter().enumerate() {
            if *c != format!("x{}", i + 1) {
                return Err(ScrnError::parse_at(
                    1,
                    format!("expected column 'x{}', found '{c}'", i + 1),
                ));
            }
        }
        let mut points = PointSet::empty(dim);
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != dim + 1 {
                return Err(ScrnError::parse_at(
                    line,
                    format!("expected {} fields, found {}", dim + 1, rec.len()),
                ));
            }
            let coords = rec
                .iter()
                .take(dim)
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| ScrnError::parse_at(line, format!("bad coordinate '{f}'")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let label = rec[dim]
                .trim()
                .parse::<usize>()
                .map_err(|_| ScrnError::parse_at(line, format!("bad label '{}'", &rec[dim])))?;
            points.push(&coords)?;
            labels.push(label);
        }
        Ok(LabeledDataset { points, labels })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }
}

fn csv_err(e: csv::Error) -> ScrnError {
    let line = e.position().map(|p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::Io(io) => ScrnError::Io(io.to_string()),
        _ => ScrnError::Parse {
            line,
            message: e.to_string(),
        },
    }
}

/// `(0,0), (1,1)` in class 0 and `(0,1), (1,0)` in class 1.
pub fn gen_xor() -> LabeledDataset {
    let pts = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
    let points = PointSet::from_points(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).expect("fixed points");
    LabeledDataset {
        points,
        labels: vec![0, 0, 1, 1],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingParams {
    pub n_inner: usize,
    pub n_outer: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    pub include_center: bool,
    /// Angular jitter as a fraction of half the spacing: each point moves by
    /// up to `±jitter·π/n` radians. 0 gives equally spaced points.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for RingParams {
    fn default() -> Self {
        RingParams {
            n_inner: 8,
            n_outer: 8,
            r_inner: 1.0,
            r_outer: 3.0,
            include_center: true,
            jitter: 0.1,
            seed: 0,
        }
    }
}

/// Class 0 on the inner circle, class 1 on the outer circle plus the
/// center if requested. Neither class is convexly separable from the other
/// when the center is included.
pub fn gen_rings(p: &RingParams) -> Result<LabeledDataset> {
    if !(p.r_inner > 0.0) || !(p.r_outer > 0.0) || !p.r_outer.is_finite() {
        return Err(ScrnError::Config("radii must be positive".into()));
    }
    if p.r_inner >= p.r_outer {
        return Err(ScrnError::Config(format!(
            "inner radius {} must be below outer radius {}",
            p.r_inner, p.r_outer
        )));
    }
    if p.n_inner < 3 || p.n_outer < 3 {
        return Err(ScrnError::Config("each ring needs at least 3 points".into()));
    }
    if !(0.0..1.0).contains(&p.jitter) {
        return Err(ScrnError::Config("jitter must be in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut circle = |n: usize, r: f64| -> Vec<Vec<f64>> {
        let step = 2.0 * PI / n as f64;
        (0..n)
            .map(|k| {
                let offset = if p.jitter > 0.0 {
                    rng.gen_range(-1.0..1.0) * p.jitter * step / 2.0
                } else {
                    0.0
                };
                let t = k as f64 * step + offset;
                vec![r * t.cos(), r * t.sin()]
            })
            .collect()
    };
    let inner = circle(p.n_inner, p.r_inner);
    let mut outer = circle(p.n_outer, p.r_outer);
    if p.include_center {
        outer.push(vec![0.0, 0.0]);
    }
    LabeledDataset::from_classes(&[PointSet::from_points(&inner)?, PointSet::from_points(&outer)?])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobParams {
    pub classes: usize,
    pub dim: usize,
    pub points_per_class: usize,
    /// Minimum center distance in units of the blob radius (1).
    pub separation: f64,
    pub seed: u64,
}

fn unit_ball_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let len = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
    let r = rng.gen::<f64>().powf(1.0 / n as f64);
    dir.iter().map(|v| v / len * r).collect()
}

fn blobs_once(p: &BlobParams, seed: u64) -> Result<Vec<PointSet>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Side long enough that rejection sampling of centers finishes quickly.
    let side = p.separation * (p.classes as f64).powf(1.0 / p.dim as f64) * 2.0;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(p.classes);
    let mut tries = 0;
    while centers.len() < p.classes {
        tries += 1;
        if tries > 100_000 {
            return Err(ScrnError::GenerationFailed { attempts: 1 });
        }
        let c: Vec<f64> = (0..p.dim).map(|_| rng.gen_range(0.0..side)).collect();
        if centers.iter().all(|o| crate::linalg::distance(o, &c) >= p.separation) {
            centers.push(c);
        }
    }
    centers
        .iter()
        .map(|c| {
            let pts: Vec<Vec<f64>> = (0..p.points_per_class)
                .map(|_| {
                    unit_ball_point(&mut rng, p.dim)
                        .iter()
                        .zip(c)
                        .map(|(u, ci)| u + ci)
                        .collect()
                })
                .collect();
            PointSet::new(p.dim, &pts)
        })
        .collect()
}

/// Points uniform in unit balls around well-spread centers; the result is
/// checked to be pairwise mutually convexly separable and regenerated with
/// seed `seed + attempt` otherwise.
pub fn gen_polytope_blobs(p: &BlobParams) -> Result<LabeledDataset> {
    if p.classes < 2 {
        return Err(ScrnError::Config(format!("need at least 2 classes, got {}", p.classes)));
    }
    if p.dim == 0 || p.points_per_class == 0 {
        return Err(ScrnError::Config("dimension and points per class must be >= 1".into()));
    }
    if !(p.separation > 0.0) || !p.separation.is_finite() {
        return Err(ScrnError::Config("separation must be positive".into()));
    }
    for attempt in 0..BLOB_ATTEMPTS as u64 {
        let classes = match blobs_once(p, p.seed.wrapping_add(attempt)) {
            Ok(c) => c,
            Err(ScrnError::GenerationFailed { .. }) => continue,
            Err(e) => return Err(e),
        };
        if pairwise_verdicts(&classes, PairwiseMode::MutualConvex, DEFAULT_TOL)?.all_separable() {
            return LabeledDataset::from_classes(&classes);
        }
    }
    Err(ScrnError::GenerationFailed {
        attempts: BLOB_ATTEMPTS,
    })
}
