//! Traces of subdomain fields on the air-gap circle.
//!
//! A trace space is parametrised by the physical angle `φ` over one pole pitch
//! `[φ0, φ0 + τ)` and extended anti-periodically, `f(φ + τ) = -f(φ)`. Its basis
//! functions are the restrictions of the interface functions of a [`Subdomain`],
//! ordered like [`DofMap::interface`](crate::dofmap::DofMap::interface).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::assembly::Subdomain;
use crate::geometry::{EdgeTag, Patch, Point2, Side};
use crate::linalg::DenseCholesky;
use crate::math;
use crate::quadrature::GaussRule;
use crate::space::Space1D;
use crate::splines::{eval_nurbs, KnotVector, WeightedPoint};
use crate::{Error, Result};

const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
struct Segment {
    kv: KnotVector,
    points: Vec<WeightedPoint>,
    space: Space1D,
    /// Trace index and sign of each function of `space`; `None` when it vanishes on the edge.
    fns: Vec<Option<(usize, f64)>>,
    phi_a: f64,
    phi_b: f64,
    /// `true` when the edge parameter increases with `φ`.
    forward: bool,
    /// Physical angles of the element boundaries, ascending.
    breaks: Vec<f64>,
}

/// Basis of the air-gap trace of one subdomain.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpace {
    pub phi0: f64,
    pub pitch: f64,
    pub radius: f64,
    /// Global function ids of the subdomain, one per trace basis function.
    pub ids: Vec<usize>,
    pub degree: usize,
    segments: Vec<Segment>,
}

fn wrap(mut a: f64) -> f64 {
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

fn curve_point(kv: &KnotVector, points: &[WeightedPoint], t: f64) -> Result<(Point2, Point2)> {
    let w: Vec<f64> = points.iter().map(|p| p.w).collect();
    let b = eval_nurbs(kv, &w, t)?;
    let (mut x, mut y, mut dx, mut dy) = (0.0, 0.0, 0.0, 0.0);
    for (j, (n, d)) in b.values.iter().zip(&b.derivatives).enumerate() {
        let p = &points[b.first_index + j];
        x += n * p.x;
        y += n * p.y;
        dx += d * p.x;
        dy += d * p.y;
    }
    Ok((Point2::new(x, y), Point2::new(dx, dy)))
}

impl Segment {
    // Edge parameter of the point at angle `phi` (Newton safeguarded by bisection).
    fn parameter(&self, phi: f64) -> Result<f64> {
        let span = self.phi_b - self.phi_a;
        let s = ((phi - self.phi_a) / span).clamp(0.0, 1.0);
        if s == 0.0 || s == 1.0 {
            return Ok(if (s == 1.0) == self.forward { 1.0 } else { 0.0 });
        }
        // g(t) = angle(t) - phi measured along the direction of increasing φ
        let g = |t: f64| -> Result<(f64, f64)> {
            let (p, d) = curve_point(&self.kv, &self.points, t)?;
            let r2 = p.x * p.x + p.y * p.y;
            let val = wrap(math::atan2(p.y, p.x) - phi);
            Ok((val, (p.x * d.y - p.y * d.x) / r2))
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut t = if self.forward { s } else { 1.0 - s };
        for _ in 0..100 {
            let (val, der) = g(t)?;
            if val.abs() <= 1e-15 {
                break;
            }
            // angle increases with t iff forward
            let below = (val < 0.0) == self.forward;
            if below {
                lo = t;
            } else {
                hi = t;
            }
            let mut next = t - val / der;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() < 1e-16 {
                t = next;
                break;
            }
            t = next;
        }
        Ok(t)
    }
}

impl TraceSpace {
    /// Trace space of the `Γag` edges of `sub`.
    pub fn of(sub: &Subdomain<'_>) -> Result<Self> {
        let model = sub.model;
        let ids = sub.dofs.interface().to_vec();
        if ids.is_empty() {
            return Err(Error::Structural("subdomain has no Γag edge".into()));
        }
        let index: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(k, &g)| (g, k)).collect();
        let mut segments = Vec::new();
        let mut radius: Option<f64> = None;
        let mut degree = 0;
        for (m, &k) in sub.patches().iter().enumerate() {
            for side in Side::ALL {
                if model.tag(k, side) != Some(EdgeTag::AirGap) {
                    continue;
                }
                let seg = segment(&model.patches[k], side, sub, m, &index)?;
                let r = seg.1;
                match radius {
                    None => radius = Some(r),
                    Some(r0) if (r - r0).abs() > 1e-9 * r0 => {
                        return Err(Error::Structural(format!("Γag edges at radii {r0} and {r}")));
                    }
                    _ => {}
                }
                degree = degree.max(seg.0.space.degree());
                segments.push(seg.0);
            }
        }
        let pitch = model.pole_pitch();
        // chain the segments in angular order starting from the one without predecessor
        let start = (0..segments.len())
            .find(|&a| !segments.iter().any(|s| wrap(s.phi_b - segments[a].phi_a).abs() < 1e-9))
            .unwrap_or(0);
        let mut ordered: Vec<Segment> = Vec::with_capacity(segments.len());
        let mut used = alloc::vec![false; segments.len()];
        let mut cur = start;
        let mut phi = segments[start].phi_a;
        let phi0 = phi;
        loop {
            used[cur] = true;
            let mut s = segments[cur].clone();
            let shift = phi - s.phi_a;
            s.phi_a += shift;
            s.phi_b += shift;
            s.breaks.iter_mut().for_each(|b| *b += shift);
            phi = s.phi_b;
            let end = s.phi_b;
            ordered.push(s);
            match (0..segments.len()).find(|&b| !used[b] && wrap(segments[b].phi_a - end).abs() < 1e-9) {
                Some(b) => cur = b,
                None => break,
            }
        }
        if ordered.len() != segments.len() || (phi - phi0 - pitch).abs() > 1e-9 {
            return Err(Error::Structural(format!(
                "Γag edges do not form one arc of a pole pitch (sweep {:.12} rad)",
                phi - phi0
            )));
        }
        Ok(TraceSpace { phi0, pitch, radius: radius.unwrap_or(0.0), ids, degree, segments: ordered })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Maps `phi` into `[φ0, φ0 + τ)` and returns the anti-periodic sign.
    pub fn reduce(&self, phi: f64) -> (f64, f64) {
        let k = math::floor((phi - self.phi0) / self.pitch);
        let mut r = phi - k * self.pitch;
        let mut sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        if r >= self.phi0 + self.pitch {
            r -= self.pitch;
            sign = -sign;
        }
        if r < self.phi0 {
            r = self.phi0;
        }
        (r, sign)
    }

    /// Non-zero basis functions at angle `phi` as `(trace index, value)`.
    pub fn eval_basis(&self, phi: f64) -> Result<Vec<(usize, f64)>> {
        let (r, sign) = self.reduce(phi);
        let seg = self
            .segments
            .iter()
            .find(|s| r <= s.phi_b + ANGLE_TOL)
            .unwrap_or_else(|| self.segments.last().expect("trace space has segments"));
        let t = seg.parameter(r)?;
        let b = seg.space.eval(t)?;
        let mut out = Vec::with_capacity(b.values.len());
        for (j, v) in b.values.iter().enumerate() {
            if let Some((k, s)) = seg.fns[b.first_index + j] {
                out.push((k, sign * s * v));
            }
        }
        Ok(out)
    }

    /// Element boundaries in `[φ0, φ0 + τ]`, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.segments.iter().flat_map(|s| s.breaks.iter().copied()).collect();
        dedup_sorted(&mut out);
        out
    }

    /// Mass matrix on this space's own mesh (row-major).
    pub fn mass(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let mut m = alloc::vec![0.0; n * n];
        let rule = GaussRule::new(self.degree + 2);
        let br = self.breakpoints();
        for w in br.windows(2) {
            for (phi, wq) in rule.on(w[0], w[1]) {
                let b = self.eval_basis(phi)?;
                for &(i, vi) in &b {
                    for &(j, vj) in &b {
                        m[i * n + j] += wq * self.radius * vi * vj;
                    }
                }
            }
        }
        Ok(m)
    }
}

fn dedup_sorted(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-11);
}

fn segment(
    patch: &Patch,
    side: Side,
    sub: &Subdomain<'_>,
    member: usize,
    index: &BTreeMap<usize, usize>,
) -> Result<(Segment, f64)> {
    let (kv, points) = patch.edge(side);
    let field = &sub.spaces[member];
    let space = if side.along_v() { field.v.clone() } else { field.u.clone() };
    let fns = (0..space.len())
        .map(|t| {
            let (i, j) = match side {
                Side::U0 => (0, t),
                Side::U1 => (field.u.len() - 1, t),
                Side::V0 => (t, 0),
                Side::V1 => (t, field.v.len() - 1),
            };
            let ld = sub.dofs.local[member][field.index(i, j)];
            index.get(&ld.global).map(|&k| (k, ld.sign))
        })
        .collect();
    let (p0, _) = curve_point(&kv, &points, 0.0)?;
    let (p1, _) = curve_point(&kv, &points, 1.0)?;
    let a0 = math::atan2(p0.y, p0.x);
    let sweep = wrap(math::atan2(p1.y, p1.x) - a0);
    let forward = sweep > 0.0;
    let radius = p0.norm();
    let mut breaks = Vec::new();
    for t in space.kv.breakpoints() {
        let (p, _) = curve_point(&kv, &points, t)?;
        breaks.push(a0 + wrap(math::atan2(p.y, p.x) - a0));
    }
    let (phi_a, phi_b) = if forward { (a0, a0 + sweep) } else { (a0 + sweep, a0) };
    dedup_sorted(&mut breaks);
    breaks[0] = phi_a;
    *breaks.last_mut().expect("at least two breakpoints") = phi_b;
    Ok((Segment { kv, points, space, fns, phi_a, phi_b, forward, breaks }, radius))
}

/// A function in a [`TraceSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFunction {
    pub space: Arc<TraceSpace>,
    pub coeffs: Vec<f64>,
}

impl TraceFunction {
    pub fn zero(space: Arc<TraceSpace>) -> Self {
        let n = space.len();
        TraceFunction { space, coeffs: alloc::vec![0.0; n] }
    }

    pub fn new(space: Arc<TraceSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), found: coeffs.len() });
        }
        Ok(TraceFunction { space, coeffs })
    }

    pub fn eval(&self, phi: f64) -> Result<f64> {
        Ok(self.space.eval_basis(phi)?.into_iter().map(|(k, v)| self.coeffs[k] * v).sum())
    }

    /// L2 projection of `f(φ)` onto `space` (on its own mesh).
    pub fn from_fn(space: Arc<TraceSpace>, f: &dyn Fn(f64) -> f64) -> Result<Self> {
        let n = space.len();
        let chol = DenseCholesky::factor(n, &space.mass()?)
            .map_err(|_| Error::Structural("singular trace mass matrix".into()))?;
        let mut r = alloc::vec![0.0; n];
        let rule = GaussRule::new(space.degree + 4);
        for w in space.breakpoints().windows(2) {
            for (phi, wq) in rule.on(w[0], w[1]) {
                let fv = f(phi);
                for (i, v) in space.eval_basis(phi)? {
                    r[i] += wq * space.radius * fv * v;
                }
            }
        }
        let coeffs = chol.solve(&r);
        Ok(TraceFunction { space, coeffs })
    }
}

/// Mass and cross-mass matrices of two trace spaces on the merged mesh of both.
///
/// `a` is read at `φ`, `b` at `φ - offset`.
#[derive(Debug, Clone)]
pub struct TraceTransfer {
    pub a: Arc<TraceSpace>,
    pub b: Arc<TraceSpace>,
    pub offset: f64,
    /// `∫ N^a_i N^a_j ds`, row-major.
    pub mass_a: Vec<f64>,
    /// `∫ N^b_i N^b_j ds`, row-major.
    pub mass_b: Vec<f64>,
    /// `∫ N^a_i N^b_j ds`, row-major `len(a) × len(b)`.
    pub cross: Vec<f64>,
    chol_a: DenseCholesky,
    chol_b: DenseCholesky,
    /// Merged-mesh quadrature: `(φ, weight·R)`.
    points: Vec<(f64, f64)>,
}

impl TraceTransfer {
    pub fn new(a: Arc<TraceSpace>, b: Arc<TraceSpace>, offset: f64) -> Result<Self> {
        if (a.radius - b.radius).abs() > 1e-9 * a.radius || (a.pitch - b.pitch).abs() > 1e-12 {
            return Err(Error::Structural("trace spaces live on different circles".into()));
        }
        let mut br = a.breakpoints();
        for phi in b.breakpoints() {
            br.push(a.reduce(phi + offset).0);
        }
        br.push(a.phi0);
        br.push(a.phi0 + a.pitch);
        dedup_sorted(&mut br);
        let rule = GaussRule::new(a.degree.max(b.degree) + 2);
        let mut points = Vec::new();
        for w in br.windows(2) {
            for (phi, wq) in rule.on(w[0], w[1]) {
                points.push((phi, wq * a.radius));
            }
        }
        let (na, nb) = (a.len(), b.len());
        let mut mass_a = alloc::vec![0.0; na * na];
        let mut mass_b = alloc::vec![0.0; nb * nb];
        let mut cross = alloc::vec![0.0; na * nb];
        for &(phi, w) in &points {
            let ea = a.eval_basis(phi)?;
            let eb = b.eval_basis(phi - offset)?;
            for &(i, vi) in &ea {
                for &(j, vj) in &ea {
                    mass_a[i * na + j] += w * vi * vj;
                }
                for &(j, vj) in &eb {
                    cross[i * nb + j] += w * vi * vj;
                }
            }
            for &(i, vi) in &eb {
                for &(j, vj) in &eb {
                    mass_b[i * nb + j] += w * vi * vj;
                }
            }
        }
        let singular = |_| Error::Structural("singular trace mass matrix".into());
        let chol_a = DenseCholesky::factor(na, &mass_a).map_err(singular)?;
        let chol_b = DenseCholesky::factor(nb, &mass_b).map_err(singular)?;
        Ok(TraceTransfer { a, b, offset, mass_a, mass_b, cross, chol_a, chol_b, points })
    }

    /// `C c_b`: loads `∫ f_b N^a_i ds` of a `b` function on the `a` basis.
    pub fn load_on_a(&self, c_b: &[f64]) -> Vec<f64> {
        let nb = self.b.len();
        (0..self.a.len()).map(|i| (0..nb).map(|j| self.cross[i * nb + j] * c_b[j]).sum()).collect()
    }

    /// `Cᵀ c_a`: loads `∫ f_a N^b_j ds` of an `a` function on the `b` basis.
    pub fn load_on_b(&self, c_a: &[f64]) -> Vec<f64> {
        let nb = self.b.len();
        let mut out = alloc::vec![0.0; nb];
        for (i, ci) in c_a.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.cross[i * nb + j] * ci;
            }
        }
        out
    }

    /// L2 projection of a `b` function onto `a`.
    pub fn to_a(&self, f: &TraceFunction) -> Result<TraceFunction> {
        self.check(f, &self.b)?;
        TraceFunction::new(self.a.clone(), self.chol_a.solve(&self.load_on_a(&f.coeffs)))
    }

    /// L2 projection of an `a` function onto `b`.
    pub fn to_b(&self, f: &TraceFunction) -> Result<TraceFunction> {
        self.check(f, &self.a)?;
        TraceFunction::new(self.b.clone(), self.chol_b.solve(&self.load_on_b(&f.coeffs)))
    }

    /// Solves `M_a x = r`.
    pub fn solve_a(&self, r: &[f64]) -> Vec<f64> {
        self.chol_a.solve(r)
    }

    /// `∫ (f_a - f_b)² ds` and `∫ f_b² ds` on the merged mesh.
    pub fn jump(&self, fa: &TraceFunction, fb: &TraceFunction) -> Result<(f64, f64)> {
        self.check(fa, &self.a)?;
        self.check(fb, &self.b)?;
        let (mut d2, mut b2) = (0.0, 0.0);
        for &(phi, w) in &self.points {
            let va = fa.eval(phi)?;
            let vb = fb.eval(phi - self.offset)?;
            d2 += w * (va - vb) * (va - vb);
            b2 += w * vb * vb;
        }
        Ok((d2, b2))
    }

    fn check(&self, f: &TraceFunction, space: &Arc<TraceSpace>) -> Result<()> {
        if Arc::ptr_eq(&f.space, space) || *f.space == **space {
            Ok(())
        } else {
            Err(Error::Validation("trace function lives in another space".into()))
        }
    }
}

/// L2 projection of `f(φ - rotation_offset)` onto `target`.
pub fn project_trace(f: &TraceFunction, target: &Arc<TraceSpace>, rotation_offset: f64) -> Result<TraceFunction> {
    TraceTransfer::new(target.clone(), f.space.clone(), rotation_offset)?.to_a(f)
}
