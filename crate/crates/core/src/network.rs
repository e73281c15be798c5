//! Sign-constrained rectifier network models.
//!
//! Three concrete shapes are supported:
//!
//! * [`Scrn1Model`]: `y = Aᵀ max(0, Wᵀx + b) + c` with `A ⪯ 0`;
//! * [`Scrn2Model`]: `y = Aᵀ max(0, W₂ᵀ max(0, W₁ᵀx + b₁) + b₂) + c` with
//!   `W₂ ⪯ 0` and `A ⪯ 0`;
//! * [`CanonicalShl`] / [`CanonicalThl`]: the single-output trainer forms
//!   `b₀ − 1ᵀ max(0, ·)` whose output weights are fixed at −1.
//!
//! With non-positive output weights every output is a concave function of the
//! input (and, for the two-layer model, of the first hidden representation).
//! Sign constraints are validated when a model is built or loaded; forward
//! passes assume a validated model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScrnError};
use crate::linalg::{relu, Matrix};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConstraint {
    None,
    Nonpositive,
}

/// One sign-constraint violation: `layer[row, col] = value > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignViolation {
    pub layer: String,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl From<&SignViolation> for ScrnError {
    fn from(v: &SignViolation) -> Self {
        ScrnError::SignConstraintViolated {
            layer: v.layer.clone(),
            row: v.row,
            col: v.col,
            value: v.value,
        }
    }
}

fn nonpositive_violations(layer: &str, m: &Matrix) -> Vec<SignViolation> {
    let mut out = Vec::new();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m.get(r, c);
            // NaN is not ⪯ 0 either
            if !(v <= 0.0) {
                out.push(SignViolation {
                    layer: layer.into(),
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
    }
    out
}

fn first_violation(v: Vec<SignViolation>) -> Result<()> {
    match v.first() {
        Some(first) => Err(first.into()),
        None => Ok(()),
    }
}

/// Indices of hidden nodes with strictly positive pre-activation.
///
/// A pre-activation of exactly zero counts as inactive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActiveSet(Vec<usize>);

impl ActiveSet {
    pub fn from_pre_activations(pre: &[f64]) -> Self {
        ActiveSet(
            pre.iter()
                .enumerate()
                .filter(|(_, &z)| z > 0.0)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    /// Builds a set from arbitrary indices (sorted and deduplicated).
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        ActiveSet(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 0/1 indicator vector of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.0 {
            m[i] = true;
        }
        m
    }
}

/// A fully connected ReLU layer computing `max(0, Wᵀx + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluLayer {
    weights: Matrix,
    bias: Vec<f64>,
    sign: SignConstraint,
}

impl ReluLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, sign: SignConstraint) -> Result<Self> {
        let layer = Self::new_unchecked(weights, bias, sign)?;
        first_violation(layer.sign_violations("W"))?;
        Ok(layer)
    }

    /// Checks shapes but not signs.
    pub fn new_unchecked(weights: Matrix, bias: Vec<f64>, sign: SignConstraint) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(ScrnError::DimensionMismatch {
                expected: weights.cols(),
                found: bias.len(),
            });
        }
        Ok(ReluLayer { weights, bias, sign })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn sign(&self) -> SignConstraint {
        self.sign
    }

    pub fn n_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_out(&self) -> usize {
        self.weights.cols()
    }

    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.weights.transpose_mul(x);
        for (zi, bi) in z.iter_mut().zip(&self.bias) {
            *zi += bi;
        }
        z
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        relu(&self.pre_activation(x))
    }

    fn sign_violations(&self, name: &str) -> Vec<SignViolation> {
        match self.sign {
            SignConstraint::None => Vec::new(),
            SignConstraint::Nonpositive => nonpositive_violations(name, &self.weights),
        }
    }
}

fn check_input(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(ScrnError::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

fn affine_output(a: &Matrix, c: &[f64], z: &[f64]) -> Vec<f64> {
    let mut y = a.transpose_mul(z);
    for (yi, ci) in y.iter_mut().zip(c) {
        *yi += ci;
    }
    y
}

/// Single-hidden-layer sign-constrained network, `A ⪯ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scrn1Model {
    hidden: ReluLayer,
    a: Matrix,
    c: Vec<f64>,
}

impl Scrn1Model {
    pub fn new(hidden: ReluLayer, a: Matrix, c: Vec<f64>) -> Result<Self> {
        let m = Self::new_unchecked(hidden, a, c)?;
        first_violation(m.check_sign_constraints())?;
        Ok(m)
    }

    /// Checks shapes only; use [`Scrn1Model::check_sign_constraints`] to
    /// inspect signs.
    pub fn new_unchecked(hidden: ReluLayer, a: Matrix, c: Vec<f64>) -> Result<Self> {
        if a.rows() != hidden.n_out() {
            return Err(ScrnError::DimensionMismatch {
                expected: hidden.n_out(),
                found: a.rows(),
            });
        }
        if c.len() != a.cols() {
            return Err(ScrnError::DimensionMismatch {
                expected: a.cols(),
                found: c.len(),
            });
        }
        Ok(Scrn1Model { hidden, a, c })
    }

    pub fn hidden(&self) -> &ReluLayer {
        &self.hidden
    }

    pub fn output_weights(&self) -> &Matrix {
        &self.a
    }

    pub fn output_bias(&self) -> &[f64] {
        &self.c
    }

    pub fn n_in(&self) -> usize {
        self.hidden.n_in()
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden.n_out()
    }

    pub fn n_out(&self) -> usize {
        self.a.cols()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(self.n_in(), x)?;
        Ok(affine_output(&self.a, &self.c, &self.hidden.forward(x)))
    }

    pub fn check_sign_constraints(&self) -> Vec<SignViolation> {
        let mut v = self.hidden.sign_violations("W");
        v.extend(nonpositive_violations("A", &self.a));
        v
    }
}

/// Two-hidden-layer sign-constrained network, `W₂ ⪯ 0` and `A ⪯ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scrn2Model {
    layer1: ReluLayer,
    layer2: ReluLayer,
    a: Matrix,
    c: Vec<f64>,
}

impl Scrn2Model {
    pub fn new(layer1: ReluLayer, layer2: ReluLayer, a: Matrix, c: Vec<f64>) -> Result<Self> {
        let m = Self::new_unchecked(layer1, layer2, a, c)?;
        first_violation(m.check_sign_constraints())?;
        Ok(m)
    }

    pub fn new_unchecked(layer1: ReluLayer, mut layer2: ReluLayer, a: Matrix, c: Vec<f64>) -> Result<Self> {
        if layer2.n_in() != layer1.n_out() {
            return Err(ScrnError::DimensionMismatch {
                expected: layer1.n_out(),
                found: layer2.n_in(),
            });
        }
        if a.rows() != layer2.n_out() {
            return Err(ScrnError::DimensionMismatch {
                expected: layer2.n_out(),
                found: a.rows(),
            });
        }
        if c.len() != a.cols() {
            return Err(ScrnError::DimensionMismatch {
                expected: a.cols(),
                found: c.len(),
            });
        }
        layer2.sign = SignConstraint::Nonpositive;
        Ok(Scrn2Model { layer1, layer2, a, c })
    }

    pub fn layer1(&self) -> &ReluLayer {
        &self.layer1
    }

    pub fn layer2(&self) -> &ReluLayer {
        &self.layer2
    }

    pub fn output_weights(&self) -> &Matrix {
        &self.a
    }

    pub fn output_bias(&self) -> &[f64] {
        &self.c
    }

    pub fn n_in(&self) -> usize {
        self.layer1.n_in()
    }

    pub fn n_out(&self) -> usize {
        self.a.cols()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(self.n_in(), x)?;
        Ok(self.forward_from_hidden(&self.layer1.forward(x)))
    }

    /// Output as a function of the first hidden representation `z₁`.
    pub fn forward_from_hidden(&self, z1: &[f64]) -> Vec<f64> {
        affine_output(&self.a, &self.c, &self.layer2.forward(z1))
    }

    pub fn check_sign_constraints(&self) -> Vec<SignViolation> {
        let mut v = self.layer1.sign_violations("W1");
        v.extend(self.layer2.sign_violations("W2"));
        v.extend(nonpositive_violations("A", &self.a));
        v
    }
}

/// `f(x) = b₀ − 1ᵀ max(0, Wᵀx + b)`; the output weights are fixed at −1.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalShl {
    pub b0: f64,
    /// `n × m`, column `k` is node `k`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl CanonicalShl {
    pub fn new(b0: f64, weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(ScrnError::DimensionMismatch {
                expected: weights.cols(),
                found: bias.len(),
            });
        }
        Ok(CanonicalShl { b0, weights, bias })
    }

    pub fn n_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.cols()
    }

    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.weights.transpose_mul(x);
        for (zi, bi) in z.iter_mut().zip(&self.bias) {
            *zi += bi;
        }
        z
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.b0 - self.pre_activation(x).iter().map(|z| z.max(0.0)).sum::<f64>()
    }

    pub fn active_set(&self, x: &[f64]) -> ActiveSet {
        ActiveSet::from_pre_activations(&self.pre_activation(x))
    }

    /// Parameter vector `[b₀, W (row-major), b]`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(1 + self.weights.as_slice().len() + self.bias.len());
        p.push(self.b0);
        p.extend_from_slice(self.weights.as_slice());
        p.extend_from_slice(&self.bias);
        p
    }

    pub fn from_params(n: usize, m: usize, p: &[f64]) -> Self {
        assert_eq!(p.len(), Self::param_count(n, m), "parameter length");
        CanonicalShl {
            b0: p[0],
            weights: Matrix::from_row_major(n, m, p[1..1 + n * m].to_vec()),
            bias: p[1 + n * m..].to_vec(),
        }
    }

    pub fn param_count(n: usize, m: usize) -> usize {
        1 + n * m + m
    }

    /// The same function as a [`Scrn1Model`] with `A = −1`, `c = b₀`.
    pub fn to_scrn1(&self) -> Scrn1Model {
        let hidden = ReluLayer {
            weights: self.weights.clone(),
            bias: self.bias.clone(),
            sign: SignConstraint::None,
        };
        Scrn1Model {
            hidden,
            a: Matrix::filled(self.n_hidden(), 1, -1.0),
            c: vec![self.b0],
        }
    }

    /// Inverse of [`CanonicalShl::to_scrn1`] for single-output models whose
    /// output weights are all equal to some `−s < 0`; the scale is folded
    /// into the hidden layer.
    pub fn from_scrn1(model: &Scrn1Model) -> Result<Self> {
        if model.n_out() != 1 {
            return Err(ScrnError::Config("canonical SHL form needs a single output".into()));
        }
        let a = model.a.column(0);
        let s = -a[0];
        if !(s > 0.0) || a.iter().any(|&v| v != a[0]) {
            return Err(ScrnError::Config(
                "canonical SHL form needs equal negative output weights".into(),
            ));
        }
        let mut weights = model.hidden.weights.clone();
        weights.scale(s);
        let bias = model.hidden.bias.iter().map(|b| b * s).collect();
        CanonicalShl::new(model.c[0], weights, bias)
    }
}

/// `f(x) = b₀ − 1ᵀ max(0, W₂ᵀ max(0, W₁ᵀx + b₁) + b₂)` with `W₂ ⪯ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalThl {
    pub b0: f64,
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl CanonicalThl {
    pub fn new(b0: f64, w1: Matrix, b1: Vec<f64>, w2: Matrix, b2: Vec<f64>) -> Result<Self> {
        let shape_ok = b1.len() == w1.cols() && w2.rows() == w1.cols() && b2.len() == w2.cols();
        if !shape_ok {
            return Err(ScrnError::Config(format!(
                "inconsistent THL shapes: W1 {}x{}, b1 {}, W2 {}x{}, b2 {}",
                w1.rows(),
                w1.cols(),
                b1.len(),
                w2.rows(),
                w2.cols(),
                b2.len()
            )));
        }
        let m = CanonicalThl { b0, w1, b1, w2, b2 };
        first_violation(m.check_sign_constraints())?;
        Ok(m)
    }

    pub fn n_in(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden_sizes(&self) -> (usize, usize) {
        (self.w1.cols(), self.w2.cols())
    }

    /// First-layer pre-activations `z₁ = W₁ᵀx + b₁`.
    pub fn z1(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.w1.transpose_mul(x);
        for (zi, bi) in z.iter_mut().zip(&self.b1) {
            *zi += bi;
        }
        z
    }

    /// Second-layer pre-activations `z₂ = W₂ᵀ max(0, z₁) + b₂`.
    pub fn z2_from_z1(&self, z1: &[f64]) -> Vec<f64> {
        let mut z = self.w2.transpose_mul(&relu(z1));
        for (zi, bi) in z.iter_mut().zip(&self.b2) {
            *zi += bi;
        }
        z
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let z2 = self.z2_from_z1(&self.z1(x));
        self.b0 - z2.iter().map(|z| z.max(0.0)).sum::<f64>()
    }

    pub fn check_sign_constraints(&self) -> Vec<SignViolation> {
        nonpositive_violations("W2", &self.w2)
    }

    /// The same function as a [`Scrn2Model`] with `A = −1`, `c = b₀`.
    pub fn to_scrn2(&self) -> Scrn2Model {
        Scrn2Model {
            layer1: ReluLayer {
                weights: self.w1.clone(),
                bias: self.b1.clone(),
                sign: SignConstraint::None,
            },
            layer2: ReluLayer {
                weights: self.w2.clone(),
                bias: self.b2.clone(),
                sign: SignConstraint::Nonpositive,
            },
            a: Matrix::filled(self.w2.cols(), 1, -1.0),
            c: vec![self.b0],
        }
    }

    /// Inverse of [`CanonicalThl::to_scrn2`] for single-output models whose
    /// output weights are all equal to some `−s < 0`; the scale is folded
    /// into the second layer.
    pub fn from_scrn2(model: &Scrn2Model) -> Result<Self> {
        if model.n_out() != 1 {
            return Err(ScrnError::Config("canonical THL form needs a single output".into()));
        }
        let a = model.a.column(0);
        let s = -a[0];
        if !(s > 0.0) || a.iter().any(|&v| v != a[0]) {
            return Err(ScrnError::Config(
                "canonical THL form needs equal negative output weights".into(),
            ));
        }
        let mut w2 = model.layer2.weights.clone();
        w2.scale(s);
        let b2 = model.layer2.bias.iter().map(|b| b * s).collect();
        CanonicalThl::new(
            model.c[0],
            model.layer1.weights.clone(),
            model.layer1.bias.clone(),
            w2,
            b2,
        )
    }
}

/// Largest violation of concavity of `f` along the segment `x₀ → x₁`:
/// `max_λ [λ f(x₁) + (1 − λ) f(x₀)] − f(λ x₁ + (1 − λ) x₀)` over
/// `λ = k / (samples + 1)`, `k = 1..=samples`. A value `≤ 0` (up to rounding)
/// is consistent with concavity.
pub fn concavity_probe<F>(f: F, x0: &[f64], x1: &[f64], samples: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let f0 = f(x0);
    let f1 = f(x1);
    let mut worst = f64::NEG_INFINITY;
    let mut xl = vec![0.0; x0.len()];
    for k in 1..=samples.max(1) {
        let lambda = k as f64 / (samples.max(1) + 1) as f64;
        for (o, (a, b)) in xl.iter_mut().zip(x0.iter().zip(x1)) {
            *o = lambda * b + (1.0 - lambda) * a;
        }
        let chord = lambda * f1 + (1.0 - lambda) * f0;
        worst = worst.max(chord - f(&xl));
    }
    worst
}

/// Any model that can be stored as a document.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Scrn1(Scrn1Model),
    Scrn2(Scrn2Model),
    CanonicalShl(CanonicalShl),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Scrn1(_) => "scrn1",
            Model::Scrn2(_) => "scrn2",
            Model::CanonicalShl(_) => "canonical_shl",
        }
    }

    pub fn n_in(&self) -> usize {
        match self {
            Model::Scrn1(m) => m.n_in(),
            Model::Scrn2(m) => m.n_in(),
            Model::CanonicalShl(m) => m.n_in(),
        }
    }

    pub fn n_out(&self) -> usize {
        match self {
            Model::Scrn1(m) => m.n_out(),
            Model::Scrn2(m) => m.n_out(),
            Model::CanonicalShl(_) => 1,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Scrn1(m) => m.forward(x),
            Model::Scrn2(m) => m.forward(x),
            Model::CanonicalShl(m) => {
                check_input(m.n_in(), x)?;
                Ok(vec![m.eval(x)])
            }
        }
    }

    pub fn check_sign_constraints(&self) -> Vec<SignViolation> {
        match self {
            Model::Scrn1(m) => m.check_sign_constraints(),
            Model::Scrn2(m) => m.check_sign_constraints(),
            Model::CanonicalShl(_) => Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument::from_model(self)?;
        serde_json::to_string_pretty(&doc).map_err(|e| ScrnError::parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| ScrnError::Parse {
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        doc.into_model()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Dims {
    input: usize,
    hidden: Vec<usize>,
    output: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerDoc {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    sign_constraint: SignConstraint,
}

/// On-disk model document (JSON). Matrices are stored row-major as nested
/// arrays with `n_in` rows, alongside explicit dims and sign-constraint flags.
#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    schema: u32,
    kind: String,
    dims: Dims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b0: Option<f64>,
    layers: Vec<LayerDoc>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<Vec<f64>>,
    sign_constraints: BTreeMap<String, String>,
}

fn layer_doc(layer: &ReluLayer) -> LayerDoc {
    LayerDoc {
        w: layer.weights.to_rows(),
        b: layer.bias.clone(),
        sign_constraint: layer.sign,
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ScrnError::NonFinite { context: what.into() })
    }
}

impl ModelDocument {
    fn from_model(model: &Model) -> Result<Self> {
        let flag = |k: &str, v: &str| (k.to_string(), v.to_string());
        let doc = match model {
            Model::Scrn1(m) => ModelDocument {
                schema: SCHEMA_VERSION,
                kind: "scrn1".into(),
                dims: Dims {
                    input: m.n_in(),
                    hidden: vec![m.n_hidden()],
                    output: m.n_out(),
                },
                b0: None,
                layers: vec![layer_doc(&m.hidden)],
                a: Some(m.a.to_rows()),
                c: Some(m.c.clone()),
                sign_constraints: [flag("A", "nonpositive"), flag("W", "none")].into(),
            },
            Model::Scrn2(m) => ModelDocument {
                schema: SCHEMA_VERSION,
                kind: "scrn2".into(),
                dims: Dims {
                    input: m.n_in(),
                    hidden: vec![m.layer1.n_out(), m.layer2.n_out()],
                    output: m.n_out(),
                },
                b0: None,
                layers: vec![layer_doc(&m.layer1), layer_doc(&m.layer2)],
                a: Some(m.a.to_rows()),
                c: Some(m.c.clone()),
                sign_constraints: [flag("A", "nonpositive"), flag("W1", "none"), flag("W2", "nonpositive")].into(),
            },
            Model::CanonicalShl(m) => ModelDocument {
                schema: SCHEMA_VERSION,
                kind: "canonical_shl".into(),
                dims: Dims {
                    input: m.n_in(),
                    hidden: vec![m.n_hidden()],
                    output: 1,
                },
                b0: Some(m.b0),
                layers: vec![LayerDoc {
                    w: m.weights.to_rows(),
                    b: m.bias.clone(),
                    sign_constraint: SignConstraint::None,
                }],
                a: None,
                c: None,
                sign_constraints: [flag("A", "fixed_minus_one"), flag("W", "none")].into(),
            },
        };
        for l in &doc.layers {
            check_finite(&l.b, "model bias")?;
            for row in &l.w {
                check_finite(row, "model weights")?;
            }
        }
        if let Some(a) = &doc.a {
            for row in a {
                check_finite(row, "output weights")?;
            }
        }
        check_finite(doc.c.as_deref().unwrap_or(&[]), "output bias")?;
        check_finite(&doc.b0.map_or(vec![], |b| vec![b]), "b0")?;
        Ok(doc)
    }

    fn into_model(self) -> Result<Model> {
        if self.schema != SCHEMA_VERSION {
            return Err(ScrnError::parse(format!("unsupported schema version {}", self.schema)));
        }
        let matrix = |rows: &[Vec<f64>], r: usize, c: usize, what: &str| -> Result<Matrix> {
            let m = Matrix::from_rows(rows).ok_or_else(|| ScrnError::parse(format!("{what}: ragged matrix")))?;
            if rows.is_empty() && r * c == 0 {
                return Ok(Matrix::zeros(r, c));
            }
            if m.rows() != r || m.cols() != c {
                return Err(ScrnError::parse(format!(
                    "{what}: expected {r}x{c}, found {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            Ok(m)
        };
        let require_flag = |key: &str, value: &str| -> Result<()> {
            match self.sign_constraints.get(key) {
                Some(v) if v == value => Ok(()),
                Some(v) => Err(ScrnError::parse(format!(
                    "sign constraint `{key}` must be `{value}`, found `{v}`"
                ))),
                None => Err(ScrnError::parse(format!("missing sign constraint flag `{key}`"))),
            }
        };
        let missing = |field: &str| ScrnError::parse(format!("missing field `{field}`"));
        let d = &self.dims;
        let layer = |doc: &LayerDoc, n_in: usize, n_out: usize, name: &str| -> Result<ReluLayer> {
            let w = matrix(&doc.w, n_in, n_out, name)?;
            if doc.b.len() != n_out {
                return Err(ScrnError::parse(format!(
                    "{name}: bias length {} != {n_out}",
                    doc.b.len()
                )));
            }
            ReluLayer::new_unchecked(w, doc.b.clone(), doc.sign_constraint)
        };
        let expect_layers = |k: usize| -> Result<()> {
            if self.layers.len() != k || d.hidden.len() != k {
                return Err(ScrnError::parse(format!(
                    "kind `{}` needs {k} hidden layer(s)",
                    self.kind
                )));
            }
            Ok(())
        };
        let model = match self.kind.as_str() {
            "scrn1" => {
                expect_layers(1)?;
                require_flag("A", "nonpositive")?;
                let hidden = layer(&self.layers[0], d.input, d.hidden[0], "W")?;
                let a = matrix(self.a.as_ref().ok_or_else(|| missing("A"))?, d.hidden[0], d.output, "A")?;
                let c = self.c.clone().ok_or_else(|| missing("c"))?;
                if c.len() != d.output {
                    return Err(ScrnError::parse("c: wrong length"));
                }
                Model::Scrn1(Scrn1Model::new(hidden, a, c)?)
            }
            "scrn2" => {
                expect_layers(2)?;
                require_flag("A", "nonpositive")?;
                require_flag("W2", "nonpositive")?;
                let l1 = layer(&self.layers[0], d.input, d.hidden[0], "W1")?;
                let mut l2 = layer(&self.layers[1], d.hidden[0], d.hidden[1], "W2")?;
                l2.sign = SignConstraint::Nonpositive;
                let a = matrix(self.a.as_ref().ok_or_else(|| missing("A"))?, d.hidden[1], d.output, "A")?;
                let c = self.c.clone().ok_or_else(|| missing("c"))?;
                if c.len() != d.output {
                    return Err(ScrnError::parse("c: wrong length"));
                }
                Model::Scrn2(Scrn2Model::new(l1, l2, a, c)?)
            }
            "canonical_shl" => {
                expect_layers(1)?;
                let b0 = self.b0.ok_or_else(|| missing("b0"))?;
                let l = layer(&self.layers[0], d.input, d.hidden[0], "W")?;
                Model::CanonicalShl(CanonicalShl::new(b0, l.weights, l.bias)?)
            }
            other => return Err(ScrnError::parse(format!("unknown model kind `{other}`"))),
        };
        Ok(model)
    }
}
