//! SVG rendering of 2-D datasets, decision boundaries and decompositions.

use std::fmt::Write as _;

use crate::data::LabeledDataset;
use crate::decompose::{DecompositionReport, DrillDownReport, Separator};
use crate::error::{Result, ScrnError};
use crate::geometry::PointSet;
use crate::network::Model;

pub const GRID: usize = 200;
const SIZE: f64 = 400.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

/// What a decomposition overlay draws: subsets of the negative class (as
/// data row indices) and affine separator lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overlay {
    pub subsets: Vec<Vec<usize>>,
    pub lines: Vec<(Vec<f64>, f64)>,
}

impl Overlay {
    /// `neg_rows[i]` is the data row of the `i`-th negative point.
    pub fn from_decomposition(report: &DecompositionReport, neg_rows: &[usize]) -> Self {
        Overlay {
            subsets: report
                .subsets
                .iter()
                .map(|s| s.members.iter().map(|&i| neg_rows[i]).collect())
                .collect(),
            lines: report
                .subsets
                .iter()
                .filter_map(|s| match &s.separator {
                    Separator::Affine { w, b } => Some((w.clone(), *b)),
                    Separator::FirstLayerShl { .. } => None,
                })
                .collect(),
        }
    }

    pub fn from_drill_down(report: &DrillDownReport, neg_rows: &[usize]) -> Self {
        let mut o = Self::from_decomposition(&report.stage1, neg_rows);
        o.lines = report
            .branches
            .iter()
            .flat_map(|b| b.leaves.iter().map(|l| (l.w.clone(), l.b)))
            .collect();
        o
    }
}

struct Frame {
    min: [f64; 2],
    max: [f64; 2],
}

impl Frame {
    fn new(points: &PointSet) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points.iter() {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        for d in 0..2 {
            let pad = ((max[d] - min[d]) * 0.1).max(0.5);
            min[d] -= pad;
            max[d] += pad;
        }
        Frame { min, max }
    }

    fn to_px(&self, p: &[f64]) -> (f64, f64) {
        (
            (p[0] - self.min[0]) / (self.max[0] - self.min[0]) * SIZE,
            SIZE - (p[1] - self.min[1]) / (self.max[1] - self.min[1]) * SIZE,
        )
    }

    fn grid_point(&self, i: usize, j: usize) -> [f64; 2] {
        let t = |k: usize, d: usize| self.min[d] + (k as f64 + 0.5) / GRID as f64 * (self.max[d] - self.min[d]);
        [t(i, 0), t(j, 1)]
    }
}

fn region(model: &Model, x: &[f64]) -> Result<usize> {
    let y = model.forward(x)?;
    Ok(if y.len() == 1 {
        usize::from(y[0] <= 0.0)
    } else {
        let mut best = 0;
        for (k, v) in y.iter().enumerate() {
            if *v > y[best] {
                best = k;
            }
        }
        best
    })
}

/// Cell edges between grid samples that fall in different regions
/// (sign of a single output, argmax otherwise).
fn boundary_path(model: &Model, frame: &Frame) -> Result<String> {
    let mut labels = vec![0usize; GRID * GRID];
    for i in 0..GRID {
        for j in 0..GRID {
            labels[i * GRID + j] = region(model, &frame.grid_point(i, j))?;
        }
    }
    let cell = SIZE / GRID as f64;
    let mut d = String::new();
    for i in 0..GRID {
        for j in 0..GRID {
            let here = labels[i * GRID + j];
            // j grows upward in data space, downward rows in pixels
            let x0 = i as f64 * cell;
            let y0 = SIZE - (j + 1) as f64 * cell;
            if i + 1 < GRID && labels[(i + 1) * GRID + j] != here {
                let _ = write!(d, "M{:.2} {:.2}V{:.2}", x0 + cell, y0, y0 + cell);
            }
            if j + 1 < GRID && labels[i * GRID + j + 1] != here {
                let _ = write!(d, "M{:.2} {:.2}H{:.2}", x0, y0, x0 + cell);
            }
        }
    }
    Ok(d)
}

/// Clips `wᵀx + b = 0` to the frame.
fn clip_line(w: &[f64], b: f64, f: &Frame) -> Option<([f64; 2], [f64; 2])> {
    let mut pts: Vec<[f64; 2]> = Vec::new();
    if w[1].abs() > 1e-12 {
        for x in [f.min[0], f.max[0]] {
            let y = -(w[0] * x + b) / w[1];
            if y >= f.min[1] && y <= f.max[1] {
                pts.push([x, y]);
            }
        }
    }
    if w[0].abs() > 1e-12 {
        for y in [f.min[1], f.max[1]] {
            let x = -(w[1] * y + b) / w[0];
            if x >= f.min[0] && x <= f.max[0] {
                pts.push([x, y]);
            }
        }
    }
    if pts.len() < 2 {
        return None;
    }
    Some((pts[0], pts[pts.len() - 1]))
}

/// Convex hull in counter-clockwise order (monotone chain).
fn hull_2d(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn render_svg(data: &LabeledDataset, model: Option<&Model>, overlay: Option<&Overlay>) -> Result<String> {
    if data.dim() != 2 {
        return Err(ScrnError::DimensionMismatch {
            expected: 2,
            found: data.dim(),
        });
    }
    if data.is_empty() {
        return Err(ScrnError::EmptySet {
            what: "dataset is empty".into(),
        });
    }
    if let Some(m) = model {
        if m.n_in() != 2 {
            return Err(ScrnError::DimensionMismatch {
                expected: 2,
                found: m.n_in(),
            });
        }
    }
    let frame = Frame::new(&data.points);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    s.push_str(
        "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" \
         patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#555\" \
         stroke-width=\"1\"/></pattern></defs>\n",
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    if let Some(o) = overlay {
        for (k, rows) in o.subsets.iter().enumerate() {
            let pts: Vec<[f64; 2]> = rows
                .iter()
                .filter(|&&r| r < data.len())
                .map(|&r| {
                    let (x, y) = frame.to_px(data.points.point(r));
                    [x, y]
                })
                .collect();
            let hull = hull_2d(pts);
            if hull.len() >= 3 {
                let poly: Vec<String> = hull.iter().map(|p| format!("{:.2},{:.2}", p[0], p[1])).collect();
                let _ = writeln!(
                    s,
                    r##"<polygon class="subset" data-subset="{k}" points="{}" fill="url(#hatch)" fill-opacity="0.6" stroke="#555"/>"##,
                    poly.join(" ")
                );
            } else {
                for p in &hull {
                    let _ = writeln!(
                        s,
                        r##"<circle class="subset" data-subset="{k}" cx="{:.2}" cy="{:.2}" r="9" fill="url(#hatch)" stroke="#555"/>"##,
                        p[0], p[1]
                    );
                }
            }
        }
        for (w, b) in &o.lines {
            if w.len() != 2 {
                continue;
            }
            if let Some((a, c)) = clip_line(w, *b, &frame) {
                let (x1, y1) = frame.to_px(&a);
                let (x2, y2) = frame.to_px(&c);
                let _ = writeln!(
                    s,
                    r##"<line class="separator" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#888" stroke-dasharray="4 3"/>"##
                );
            }
        }
    }

    if let Some(m) = model {
        let d = boundary_path(m, &frame)?;
        let _ = writeln!(
            s,
            r##"<path class="boundary" d="{d}" stroke="#000" stroke-width="2" fill="none"/>"##
        );
    }

    for (p, &l) in data.points.iter().zip(&data.labels) {
        let (x, y) = frame.to_px(p);
        let _ = writeln!(
            s,
            r##"<circle class="point" data-label="{l}" cx="{x:.2}" cy="{y:.2}" r="4" fill="{}" stroke="#000"/>"##,
            PALETTE[l % PALETTE.len()]
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::build_shl_separator;
    use crate::data::gen_xor;
    use crate::decompose::shl_decompose;
    use crate::geometry::DEFAULT_TOL;

    #[test]
    fn xor_points_boundary_and_overlay() {
        let d = gen_xor();
        let svg = render_svg(&d, None, None).unwrap();
        assert_eq!(svg.matches("class=\"point\"").count(), 4);
        assert!(!svg.contains("class=\"boundary\""));

        let (pos, neg) = (d.class(0), d.class(1));
        let m = build_shl_separator(&pos, &neg, DEFAULT_TOL).unwrap();
        let report = shl_decompose(&m, &pos, &neg).unwrap();
        let overlay = Overlay::from_decomposition(&report, &[2, 3]);
        let model = Model::Scrn1(m);
        let svg = render_svg(&d, Some(&model), Some(&overlay)).unwrap();
        assert!(svg.contains("<path class=\"boundary\" d=\"M"));
        assert_eq!(svg.matches("class=\"separator\"").count(), 2);
        assert_eq!(svg, render_svg(&d, Some(&model), Some(&overlay)).unwrap());
    }

    #[test]
    fn rejects_three_dimensions() {
        let pts = PointSet::from_points(&[vec![0.0, 0.0, 0.0]]).unwrap();
        let d = LabeledDataset::new(pts, vec![0]).unwrap();
        assert!(matches!(
            render_svg(&d, None, None),
            Err(ScrnError::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn hull_of_square() {
        let h = hull_2d(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.0, 1.0]]);
        assert_eq!(h.len(), 4);
    }
}
