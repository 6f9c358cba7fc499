//! Univariate B-spline and NURBS bases on open knot vectors.
//!
//! Indices are zero based: a knot vector of degree `p` with `n` basis functions holds
//! `n + p + 1` knots, and on the non-empty span `[ξ_s, ξ_{s+1})` the functions
//! `s - p ..= s` are the only ones that do not vanish.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    /// Builds an open (clamped) knot vector on `[0, 1]`.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return Err(Error::Validation(format!(
                "degree {p} needs at least {} knots, got {}",
                2 * (p + 1),
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Validation("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("knots must be non-decreasing".into()));
        }
        let m = knots.len();
        if knots[..=p].iter().any(|&k| k != 0.0) || knots[m - p - 1..].iter().any(|&k| k != 1.0) {
            return Err(Error::Validation(format!(
                "open knot vector must start with {} zeros and end with {} ones",
                p + 1,
                p + 1
            )));
        }
        if knots[p + 1] == 0.0 || knots[m - p - 2] == 1.0 {
            return Err(Error::Validation("end knots repeated more than degree + 1 times".into()));
        }
        let kv = KnotVector { degree, knots };
        for (value, mult) in kv.interior_breakpoints() {
            if mult > p.max(1) {
                return Err(Error::Validation(format!(
                    "interior knot {value} has multiplicity {mult} > degree {p}"
                )));
            }
        }
        Ok(kv)
    }

    /// Open knot vector with `elements` equal spans.
    pub fn uniform(degree: usize, elements: usize) -> Self {
        let elements = elements.max(1);
        let mut knots = Vec::with_capacity(elements + 2 * degree + 1);
        knots.extend(core::iter::repeat(0.0).take(degree + 1));
        for e in 1..elements {
            knots.push(e as f64 / elements as f64);
        }
        knots.extend(core::iter::repeat(1.0).take(degree + 1));
        KnotVector { degree, knots }
    }

    /// Open knot vector of the given degree over the given interior breakpoints,
    /// each carrying its own multiplicity.
    pub fn from_breakpoints(degree: usize, interior: &[(f64, usize)]) -> Result<Self> {
        let mut knots = Vec::new();
        knots.extend(core::iter::repeat(0.0).take(degree + 1));
        for &(value, mult) in interior {
            knots.extend(core::iter::repeat(value).take(mult));
        }
        knots.extend(core::iter::repeat(1.0).take(degree + 1));
        KnotVector::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions `n`.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Distinct interior knot values with their multiplicities.
    pub fn interior_breakpoints(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &k in &self.knots {
            if k <= 0.0 || k >= 1.0 {
                continue;
            }
            match out.last_mut() {
                Some((v, m)) if *v == k => *m += 1,
                _ => out.push((k, 1)),
            }
        }
        out
    }

    /// Distinct knot values including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.knots.len());
        for &k in &self.knots {
            if out.last() != Some(&k) {
                out.push(k);
            }
        }
        out
    }

    /// Non-empty spans as `(span index, left, right)`.
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        let p = self.degree;
        let n = self.num_basis();
        (p..n)
            .filter(|&s| self.knots[s + 1] > self.knots[s])
            .map(|s| (s, self.knots[s], self.knots[s + 1]))
            .collect()
    }

    pub fn num_elements(&self) -> usize {
        self.spans().len()
    }

    /// Greville abscissa of basis function `i`.
    pub fn greville(&self, i: usize) -> f64 {
        let p = self.degree;
        if p == 0 {
            return 0.5 * (self.knots[i] + self.knots[i + 1]);
        }
        self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64
    }

    pub fn multiplicity(&self, u: f64) -> usize {
        self.knots.iter().filter(|&&k| k == u).count()
    }
}

/// Index `s` of the span with `ξ_s ≤ u < ξ_{s+1}`; `u = 1` maps to the last non-empty span.
pub fn find_span(kv: &KnotVector, u: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain { value: u });
    }
    let p = kv.degree;
    let n = kv.num_basis();
    let k = &kv.knots;
    if u >= k[n] {
        return Ok(n - 1);
    }
    let (mut lo, mut hi) = (p, n);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if u < k[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

/// Values and first derivatives of the `p + 1` functions that are non-zero at a parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEvaluation {
    pub first_index: usize,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
}

/// Same layout as [`BasisEvaluation`], for rational functions.
pub type WeightedBasisEvaluation = BasisEvaluation;

// Non-vanishing degree-`p` functions on `span` (triangular Cox-de Boor table).
fn basis_funs(knots: &[f64], span: usize, u: f64, p: usize) -> Vec<f64> {
    let mut n = alloc::vec![0.0; p + 1];
    let mut left = alloc::vec![0.0; p + 1];
    let mut right = alloc::vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

/// Evaluates the B-spline basis and its first derivative at `u`.
pub fn eval_bspline(kv: &KnotVector, u: f64) -> Result<BasisEvaluation> {
    let span = find_span(kv, u)?;
    Ok(eval_on_span(kv, span, u))
}

pub(crate) fn eval_on_span(kv: &KnotVector, span: usize, u: f64) -> BasisEvaluation {
    let p = kv.degree;
    let k = &kv.knots;
    let values = basis_funs(k, span, u, p);
    let mut derivatives = alloc::vec![0.0; p + 1];
    if p > 0 {
        let lower = basis_funs(k, span, u, p - 1);
        let pf = p as f64;
        for (j, d) in derivatives.iter_mut().enumerate() {
            let i = span - p + j;
            let mut acc = 0.0;
            if j >= 1 {
                let denom = k[i + p] - k[i];
                if denom > 0.0 {
                    acc += lower[j - 1] / denom;
                }
            }
            if j < p {
                let denom = k[i + p + 1] - k[i + 1];
                if denom > 0.0 {
                    acc -= lower[j] / denom;
                }
            }
            *d = pf * acc;
        }
    }
    BasisEvaluation { first_index: span - p, values, derivatives }
}

/// Rational basis `N_i = ω_i B_i / Σ_j ω_j B_j` with quotient-rule derivatives.
pub fn eval_nurbs(kv: &KnotVector, weights: &[f64], u: f64) -> Result<WeightedBasisEvaluation> {
    check_weights(kv, weights)?;
    let b = eval_bspline(kv, u)?;
    Ok(rationalize(b, weights))
}

pub(crate) fn check_weights(kv: &KnotVector, weights: &[f64]) -> Result<()> {
    if weights.len() != kv.num_basis() {
        return Err(Error::DimensionMismatch { expected: kv.num_basis(), found: weights.len() });
    }
    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::Validation("weights must be positive".into()));
    }
    Ok(())
}

pub(crate) fn rationalize(mut b: BasisEvaluation, weights: &[f64]) -> BasisEvaluation {
    let w = &weights[b.first_index..b.first_index + b.values.len()];
    let mut sum = 0.0;
    let mut dsum = 0.0;
    for ((v, d), wi) in b.values.iter().zip(&b.derivatives).zip(w) {
        sum += wi * v;
        dsum += wi * d;
    }
    for ((v, d), wi) in b.values.iter_mut().zip(b.derivatives.iter_mut()).zip(w) {
        let value = wi * *v / sum;
        *d = wi * (*d * sum - *v * dsum) / (sum * sum);
        *v = value;
    }
    b
}

/// A control point in homogeneous form is `(x·w, y·w, w)`; this is the Cartesian form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPoint {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

/// Inserts `u_new` once, returning the refined knot vector and control polygon.
///
/// Works in homogeneous coordinates, so the rational curve is unchanged as a point set
/// and as a parametrization.
pub fn insert_knot(
    kv: &KnotVector,
    points: &[WeightedPoint],
    u_new: f64,
) -> Result<(KnotVector, Vec<WeightedPoint>)> {
    if !(u_new > 0.0 && u_new < 1.0) {
        return Err(Error::Validation(format!("knot {u_new} must lie strictly inside (0, 1)")));
    }
    if points.len() != kv.num_basis() {
        return Err(Error::DimensionMismatch { expected: kv.num_basis(), found: points.len() });
    }
    let p = kv.degree;
    if kv.multiplicity(u_new) + 1 > p {
        return Err(Error::Validation(format!(
            "inserting {u_new} would exceed multiplicity {p}"
        )));
    }
    let k = find_span(kv, u_new)?;
    let homo: Vec<[f64; 3]> = points.iter().map(|q| [q.x * q.w, q.y * q.w, q.w]).collect();
    let mut out: Vec<[f64; 3]> = Vec::with_capacity(homo.len() + 1);
    out.extend_from_slice(&homo[..=k - p]);
    for i in k - p + 1..=k {
        let t = &kv.knots;
        let a = (u_new - t[i]) / (t[i + p] - t[i]);
        let q = &homo[i];
        let r = &homo[i - 1];
        out.push([a * q[0] + (1.0 - a) * r[0], a * q[1] + (1.0 - a) * r[1], a * q[2] + (1.0 - a) * r[2]]);
    }
    out.extend_from_slice(&homo[k..]);
    let mut knots = kv.knots.clone();
    knots.insert(k + 1, u_new);
    let refined = KnotVector { degree: p, knots };
    let pts = out.into_iter().map(|h| WeightedPoint { x: h[0] / h[2], y: h[1] / h[2], w: h[2] }).collect();
    Ok((refined, pts))
}

/// Evaluates the rational curve defined by a knot vector and weighted control points.
pub fn eval_curve(kv: &KnotVector, points: &[WeightedPoint], u: f64) -> Result<(f64, f64)> {
    let b = eval_bspline(kv, u)?;
    let (mut x, mut y, mut w) = (0.0, 0.0, 0.0);
    for (j, v) in b.values.iter().enumerate() {
        let q = &points[b.first_index + j];
        x += v * q.w * q.x;
        y += v * q.w * q.y;
        w += v * q.w;
    }
    Ok((x / w, y / w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Textbook recursive Cox-de Boor, with the last span closed at u = 1.
    fn cox_de_boor(knots: &[f64], i: usize, p: usize, u: f64) -> f64 {
        let n = knots.len() - p - 1;
        if p == 0 {
            let last = knots[knots.len() - 1];
            if knots[i] <= u && u < knots[i + 1] {
                return 1.0;
            }
            // closes the final non-empty interval
            if u == last && knots[i + 1] == last && knots[i] < last {
                let _ = n;
                return 1.0;
            }
            return 0.0;
        }
        let mut acc = 0.0;
        let d1 = knots[i + p] - knots[i];
        if d1 > 0.0 {
            acc += (u - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, u);
        }
        let d2 = knots[i + p + 1] - knots[i + 1];
        if d2 > 0.0 {
            acc += (knots[i + p + 1] - u) / d2 * cox_de_boor(knots, i + 1, p - 1, u);
        }
        acc
    }

    fn third_knots(p: usize) -> KnotVector {
        let mut k = vec![0.0; p + 1];
        k.extend([1.0 / 3.0, 2.0 / 3.0]);
        k.extend(vec![1.0; p + 1]);
        KnotVector::new(p, k).unwrap()
    }

    #[test]
    fn rejects_bad_knot_vectors() {
        assert!(KnotVector::new(2, vec![0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.7, 0.3, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(2, vec![0.0, 0.0, 0.5, 1.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0]).is_ok());
    }

    #[test]
    fn span_lookup() {
        let kv = third_knots(1);
        assert_eq!(find_span(&kv, 0.0).unwrap(), 1);
        assert_eq!(find_span(&kv, 0.5).unwrap(), 2);
        assert_eq!(find_span(&kv, 1.0).unwrap(), 3);
        assert_eq!(find_span(&kv, 1.0 / 3.0).unwrap(), 2);
        assert!(matches!(find_span(&kv, 1.5), Err(Error::Domain { .. })));
        assert!(matches!(find_span(&kv, -1e-300), Err(Error::Domain { .. })));
    }

    #[test]
    fn linear_hats_at_midpoint() {
        let kv = third_knots(1);
        let b = eval_bspline(&kv, 0.5).unwrap();
        assert_eq!(b.first_index, 1);
        assert!((b.values[0] - 0.5).abs() < 1e-15);
        assert!((b.values[1] - 0.5).abs() < 1e-15);
        assert!((b.derivatives[0] + 3.0).abs() < 1e-12);
        assert!((b.derivatives[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_matches_recursive_definition() {
        let kv = third_knots(2);
        for &u in &[0.0, 0.1, 1.0 / 3.0, 0.5, 0.77, 1.0] {
            let b = eval_bspline(&kv, u).unwrap();
            for i in 0..kv.num_basis() {
                let local = i.checked_sub(b.first_index).filter(|&j| j <= 2);
                let fast = local.map_or(0.0, |j| b.values[j]);
                let slow = cox_de_boor(kv.knots(), i, 2, u);
                assert!((fast - slow).abs() < 1e-14, "u={u} i={i}: {fast} vs {slow}");
            }
        }
        // hand-unrolled values at u = 1/2 on [0,0,0,1/3,2/3,1,1,1]: [1/8, 3/4, 1/8]
        let b = eval_bspline(&kv, 0.5).unwrap();
        assert_eq!(b.first_index, 1);
        for (v, e) in b.values.iter().zip([0.125, 0.75, 0.125]) {
            assert!((v - e).abs() < 1e-15);
        }
    }

    #[test]
    fn nurbs_with_unit_weights_is_bspline() {
        let kv = third_knots(2);
        let w = vec![1.0; kv.num_basis()];
        for &u in &[0.0, 0.2, 0.5, 0.9, 1.0] {
            let a = eval_bspline(&kv, u).unwrap();
            let b = eval_nurbs(&kv, &w, u).unwrap();
            assert_eq!(a.first_index, b.first_index);
            for j in 0..3 {
                assert!((a.values[j] - b.values[j]).abs() < 1e-15);
                assert!((a.derivatives[j] - b.derivatives[j]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn nurbs_quarter_circle_weights() {
        let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let w = [1.0, core::f64::consts::FRAC_PI_4.cos(), 1.0];
        let u = 0.5;
        // direct formula ω_i B_i / Σ ω_j B_j with Bernstein B = [1/4, 1/2, 1/4]
        let bern = [0.25, 0.5, 0.25];
        let denom: f64 = bern.iter().zip(&w).map(|(b, w)| b * w).sum();
        let n = eval_nurbs(&kv, &w, u).unwrap();
        for i in 0..3 {
            assert!((n.values[i] - w[i] * bern[i] / denom).abs() < 1e-15);
        }
        assert!(eval_nurbs(&kv, &[1.0, 0.0, 1.0], u).is_err());
        assert!(eval_nurbs(&kv, &[1.0, 1.0], u).is_err());
    }

    #[test]
    fn insert_into_line_segment() {
        let kv = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let pts = [WeightedPoint { x: 0.0, y: 0.0, w: 1.0 }, WeightedPoint { x: 4.0, y: 2.0, w: 1.0 }];
        let (kv2, pts2) = insert_knot(&kv, &pts, 0.25).unwrap();
        assert_eq!(kv2.knots(), &[0.0, 0.0, 0.25, 1.0, 1.0]);
        assert_eq!(pts2.len(), 3);
        assert!((pts2[1].x - 1.0).abs() < 1e-15 && (pts2[1].y - 0.5).abs() < 1e-15);
        assert!(insert_knot(&kv2, &pts2, 0.25).is_err());
    }

    #[test]
    fn repeated_insertion_keeps_curve() {
        let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let pts = vec![
            WeightedPoint { x: 1.0, y: 0.0, w: 1.0 },
            WeightedPoint { x: 1.0, y: 1.0, w: s },
            WeightedPoint { x: 0.0, y: 1.0, w: 1.0 },
        ];
        let (kv1, p1) = insert_knot(&kv, &pts, 0.3).unwrap();
        let (kv2, p2) = insert_knot(&kv1, &p1, 0.3).unwrap();
        assert!(insert_knot(&kv2, &p2, 0.3).is_err());
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let a = eval_curve(&kv, &pts, u).unwrap();
            let b = eval_curve(&kv2, &p2, u).unwrap();
            assert!((a.0 - b.0).abs() < 1e-14 && (a.1 - b.1).abs() < 1e-14);
        }
    }

    fn random_knots() -> impl Strategy<Value = KnotVector> {
        (1usize..=3, proptest::collection::vec(0.02f64..0.98, 0..6)).prop_map(|(p, mut inner)| {
            inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
            inner.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let mut k = vec![0.0; p + 1];
            k.extend(inner);
            k.extend(vec![1.0; p + 1]);
            KnotVector::new(p, k).unwrap()
        })
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_local_support(kv in random_knots(), u in 0.0f64..=1.0,
                                                 w in proptest::collection::vec(0.2f64..3.0, 10)) {
            let b = eval_bspline(&kv, u).unwrap();
            prop_assert_eq!(b.values.len(), kv.degree() + 1);
            prop_assert!(b.values.iter().all(|v| *v >= -1e-15));
            prop_assert!((b.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(b.derivatives.iter().sum::<f64>().abs() < 1e-9);
            let weights: Vec<f64> = (0..kv.num_basis()).map(|i| w[i % w.len()]).collect();
            let n = eval_nurbs(&kv, &weights, u).unwrap();
            prop_assert!((n.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(n.derivatives.iter().sum::<f64>().abs() < 1e-9);
        }

        #[test]
        fn derivative_matches_central_difference(kv in random_knots(), u in 0.01f64..0.99) {
            let h = 1e-6;
            let bp = kv.breakpoints();
            prop_assume!(bp.iter().all(|k| (u - k).abs() > 2.0 * h));
            let span = find_span(&kv, u).unwrap();
            let c = eval_on_span(&kv, span, u);
            let plus = eval_on_span(&kv, span, u + h);
            let minus = eval_on_span(&kv, span, u - h);
            for j in 0..c.values.len() {
                let fd = (plus.values[j] - minus.values[j]) / (2.0 * h);
                let scale = c.derivatives[j].abs().max(1.0);
                prop_assert!((fd - c.derivatives[j]).abs() < 1e-6 * scale);
            }
        }
    }
}
