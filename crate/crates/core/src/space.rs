//! Discrete field spaces attached to patches.
//!
//! A field space is the tensor product of two univariate rational spaces, so the 2D
//! basis is `N_i(u) · M_j(v)`. When the requested degree equals the geometry degree in a
//! direction, that direction reuses the geometry's knots and its separable weight
//! factor, so the field space contains the coordinate functions. Otherwise the
//! direction gets a plain B-spline space of the requested degree on the geometry's
//! breakpoints.

use alloc::format;
use alloc::vec::Vec;

use crate::geometry::Patch;
use crate::splines::{check_weights, eval_on_span, find_span, rationalize, BasisEvaluation, KnotVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Space1D {
    pub kv: KnotVector,
    pub weights: Vec<f64>,
    rational: bool,
}

impl Space1D {
    pub fn new(kv: KnotVector, weights: Vec<f64>) -> Result<Self> {
        check_weights(&kv, &weights)?;
        let rational = weights.iter().any(|&w| w != weights[0]);
        Ok(Space1D { kv, weights, rational })
    }

    pub fn bspline(kv: KnotVector) -> Self {
        let n = kv.num_basis();
        Space1D { kv, weights: alloc::vec![1.0; n], rational: false }
    }

    pub fn degree(&self) -> usize {
        self.kv.degree()
    }

    pub fn len(&self) -> usize {
        self.kv.num_basis()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, t: f64) -> Result<BasisEvaluation> {
        let span = find_span(&self.kv, t)?;
        Ok(self.eval_on_span(span, t))
    }

    pub fn eval_on_span(&self, span: usize, t: f64) -> BasisEvaluation {
        let b = eval_on_span(&self.kv, span, t);
        if self.rational {
            rationalize(b, &self.weights)
        } else {
            b
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpace {
    pub u: Space1D,
    pub v: Space1D,
}

impl FieldSpace {
    pub fn len(&self) -> usize {
        self.u.len() * self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.u.len() * j
    }

    /// Field space of degree `degree` in both directions on `patch`.
    pub fn for_patch(patch: &Patch, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Validation("field degree must be at least 1".into()));
        }
        let (wu, wv) = separable_weights(patch)?;
        let u = direction(&patch.kv_u, wu, degree)?;
        let v = direction(&patch.kv_v, wv, degree)?;
        Ok(FieldSpace { u, v })
    }
}

fn direction(kv: &KnotVector, weights: Vec<f64>, degree: usize) -> Result<Space1D> {
    if kv.degree() == degree {
        return Space1D::new(kv.clone(), weights);
    }
    let interior: Vec<(f64, usize)> =
        kv.interior_breakpoints().into_iter().map(|(t, m)| (t, m.min(degree))).collect();
    Ok(Space1D::bspline(KnotVector::from_breakpoints(degree, &interior)?))
}

// Splits ω_ij = a_i · b_j, normalised so that a_0 = 1.
fn separable_weights(patch: &Patch) -> Result<(Vec<f64>, Vec<f64>)> {
    let net = &patch.net;
    let w00 = net.weights[0];
    let a: Vec<f64> = (0..net.n_u).map(|i| net.weights[net.index(i, 0)] / w00).collect();
    let b: Vec<f64> = (0..net.n_v).map(|j| net.weights[net.index(0, j)]).collect();
    for j in 0..net.n_v {
        for i in 0..net.n_u {
            let w = net.weights[net.index(i, j)];
            if (w - a[i] * b[j]).abs() > 1e-12 * w {
                return Err(Error::Validation(format!(
                    "patch weights are not a tensor product (at control point {i}, {j})"
                )));
            }
        }
    }
    Ok((a, b))
}
