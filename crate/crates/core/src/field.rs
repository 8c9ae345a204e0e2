//! Grid-sampled scalar and vector fields.
//!
//! Fields are plain node arrays. On the radial reduction of an annulus the
//! nodes lie on the positive x-axis, so a radial vector field `w(r) r_hat`
//! is stored as `[w, 0, 0]` and every Cartesian identity holds pointwise.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScalarField(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct VectorField(pub Vec<[f64; 3]>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn from_fn<F: FnMut(usize) -> f64>(n: usize, f: F) -> Self {
        Self((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![[0.0; 3]; n])
    }

    pub fn from_fn<F: FnMut(usize) -> [f64; 3]>(n: usize, f: F) -> Self {
        Self((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.0.iter().map(|v| v[c]).collect()
    }

    pub fn from_components(c: [&[f64]; 3]) -> Self {
        Self((0..c[0].len()).map(|i| [c[0][i], c[1][i], c[2][i]]).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .fold(0.0, |m, v| m.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| [v[0] * s, v[1] * s, v[2] * s]).collect())
    }

    pub fn scaled_by(&self, s: &ScalarField) -> Self {
        Self(
            self.0
                .iter()
                .zip(&s.0)
                .map(|(v, &a)| [v[0] * a, v[1] * a, v[2] * a])
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                .collect(),
        )
    }

    pub fn dot(&self, other: &Self) -> ScalarField {
        ScalarField(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
                .collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.iter().all(|c| c.is_finite()))
    }
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}
