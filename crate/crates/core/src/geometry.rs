//! Tensor-product NURBS patches and multipatch machine models.
//!
//! Patch parameters are `(u, v) ∈ [0,1]²`. Control points are stored with `u` running
//! fastest: the point `(i, j)` lives at `i + n_u * j`. Annular patches put the radial
//! direction on `u` and the angular direction on `v`, which makes the Jacobian
//! determinant positive for counter-clockwise angles.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::math;
use crate::quadrature::GaussRule;
use crate::splines::{eval_bspline, eval_curve, insert_knot, BasisEvaluation, KnotVector, WeightedPoint};
use crate::{Error, Result};

/// Control-point coincidence tolerance in metres.
pub const COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    pub fn dist(self, other: Point2) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = (math::sin(angle), math::cos(angle));
        Point2 { x: c * self.x - s * self.y, y: s * self.x + c * self.y }
    }
}

/// `[[∂x/∂u, ∂x/∂v], [∂y/∂u, ∂y/∂v]]`
pub type Jacobian = [[f64; 2]; 2];

pub fn det(j: &Jacobian) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlNet {
    pub n_u: usize,
    pub n_v: usize,
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl ControlNet {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n_u * j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// `u = 0`
    U0,
    /// `u = 1`
    U1,
    /// `v = 0`
    V0,
    /// `v = 1`
    V1,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::U0, Side::U1, Side::V0, Side::V1];

    pub fn name(self) -> &'static str {
        match self {
            Side::U0 => "u0",
            Side::U1 => "u1",
            Side::V0 => "v0",
            Side::V1 => "v1",
        }
    }

    pub fn parse(s: &str) -> Option<Side> {
        Side::ALL.into_iter().find(|side| side.name() == s)
    }

    /// True when the edge runs along `v` (the `u` coordinate is fixed).
    pub fn along_v(self) -> bool {
        matches!(self, Side::U0 | Side::U1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeTag {
    /// Homogeneous Dirichlet boundary `Γd`.
    Dirichlet,
    /// Left pole boundary `Γl`.
    Left,
    /// Right pole boundary `Γr`.
    Right,
    /// Rotor/stator interface circle `Γag`.
    AirGap,
    /// Edge shared with another patch of the same subdomain.
    Interface,
}

impl EdgeTag {
    pub fn name(self) -> &'static str {
        match self {
            EdgeTag::Dirichlet => "gamma_d",
            EdgeTag::Left => "gamma_l",
            EdgeTag::Right => "gamma_r",
            EdgeTag::AirGap => "gamma_ag",
            EdgeTag::Interface => "interface",
        }
    }

    pub fn parse(s: &str) -> Option<EdgeTag> {
        [EdgeTag::Dirichlet, EdgeTag::Left, EdgeTag::Right, EdgeTag::AirGap, EdgeTag::Interface]
            .into_iter()
            .find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubdomainKind {
    Rotor,
    Stator,
}

impl SubdomainKind {
    pub fn name(self) -> &'static str {
        match self {
            SubdomainKind::Rotor => "rotor",
            SubdomainKind::Stator => "stator",
        }
    }

    pub fn parse(s: &str) -> Option<SubdomainKind> {
        match s {
            "rotor" => Some(SubdomainKind::Rotor),
            "stator" => Some(SubdomainKind::Stator),
            _ => None,
        }
    }
}

/// Piecewise-constant material data of one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Reluctivity in m/H.
    pub nu: f64,
    /// Magnetization `H_pm` in A/m, entering the load as `∫ H_pm · (-∂w/∂y, ∂w/∂x)`.
    pub h_pm: [f64; 2],
    /// Source current density `J_src,z` in A/m².
    pub j_src: f64,
}

impl Material {
    pub fn with_relative_permeability(mu_r: f64) -> Self {
        Material { nu: crate::NU0 / mu_r, h_pm: [0.0, 0.0], j_src: 0.0 }
    }

    pub fn air() -> Self {
        Material::with_relative_permeability(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub kv_u: KnotVector,
    pub kv_v: KnotVector,
    pub net: ControlNet,
    pub region: String,
}

impl Patch {
    pub fn new(kv_u: KnotVector, kv_v: KnotVector, net: ControlNet, region: impl Into<String>) -> Result<Self> {
        let patch = Patch { kv_u, kv_v, net, region: region.into() };
        patch.check()?;
        Ok(patch)
    }

    fn check(&self) -> Result<()> {
        let (nu, nv) = (self.kv_u.num_basis(), self.kv_v.num_basis());
        if self.net.n_u != nu || self.net.n_v != nv {
            return Err(Error::Validation(format!(
                "control net is {}x{} but knot vectors need {}x{}",
                self.net.n_u, self.net.n_v, nu, nv
            )));
        }
        if self.net.points.len() != nu * nv || self.net.weights.len() != nu * nv {
            return Err(Error::Validation("control net is incomplete".into()));
        }
        if self.net.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Validation("control weights must be positive".into()));
        }
        if self.net.points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Validation("non-finite control point".into()));
        }
        Ok(())
    }

    /// Knot vector and control polygon of one boundary edge. The edge parameter runs
    /// along `v` for `U0`/`U1` and along `u` for `V0`/`V1`.
    pub fn edge(&self, side: Side) -> (KnotVector, Vec<WeightedPoint>) {
        let net = &self.net;
        let wp = |k: usize| WeightedPoint { x: net.points[k].x, y: net.points[k].y, w: net.weights[k] };
        match side {
            Side::U0 => (self.kv_v.clone(), (0..net.n_v).map(|j| wp(net.index(0, j))).collect()),
            Side::U1 => (self.kv_v.clone(), (0..net.n_v).map(|j| wp(net.index(net.n_u - 1, j))).collect()),
            Side::V0 => (self.kv_u.clone(), (0..net.n_u).map(|i| wp(net.index(i, 0))).collect()),
            Side::V1 => (self.kv_u.clone(), (0..net.n_u).map(|i| wp(net.index(i, net.n_v - 1))).collect()),
        }
    }

    /// Parameter point of edge `side` at edge parameter `t`.
    pub fn edge_uv(side: Side, t: f64) -> (f64, f64) {
        match side {
            Side::U0 => (0.0, t),
            Side::U1 => (1.0, t),
            Side::V0 => (t, 0.0),
            Side::V1 => (t, 1.0),
        }
    }

    pub fn corners(&self, side: Side) -> (Point2, Point2) {
        let (_, pts) = self.edge(side);
        let a = pts[0];
        let b = pts[pts.len() - 1];
        (Point2::new(a.x, a.y), Point2::new(b.x, b.y))
    }

    /// Inserts `t` once in the `u` direction (`along_u = true`) or the `v` direction.
    pub fn insert_knot(&mut self, along_u: bool, t: f64) -> Result<()> {
        let (nu, nv) = (self.net.n_u, self.net.n_v);
        let net = &self.net;
        let wp = |k: usize| WeightedPoint { x: net.points[k].x, y: net.points[k].y, w: net.weights[k] };
        if along_u {
            let mut new_kv = None;
            let mut rows: Vec<Vec<WeightedPoint>> = Vec::with_capacity(nv);
            for j in 0..nv {
                let row: Vec<WeightedPoint> = (0..nu).map(|i| wp(net.index(i, j))).collect();
                let (kv, r) = insert_knot(&self.kv_u, &row, t)?;
                new_kv = Some(kv);
                rows.push(r);
            }
            let n_u = nu + 1;
            let mut points = Vec::with_capacity(n_u * nv);
            let mut weights = Vec::with_capacity(n_u * nv);
            for row in &rows {
                for q in row {
                    points.push(Point2::new(q.x, q.y));
                    weights.push(q.w);
                }
            }
            self.kv_u = new_kv.expect("net has at least one row");
            self.net = ControlNet { n_u, n_v: nv, points, weights };
        } else {
            let mut new_kv = None;
            let mut cols: Vec<Vec<WeightedPoint>> = Vec::with_capacity(nu);
            for i in 0..nu {
                let col: Vec<WeightedPoint> = (0..nv).map(|j| wp(net.index(i, j))).collect();
                let (kv, c) = insert_knot(&self.kv_v, &col, t)?;
                new_kv = Some(kv);
                cols.push(c);
            }
            let n_v = nv + 1;
            let mut points = alloc::vec![Point2::default(); nu * n_v];
            let mut weights = alloc::vec![0.0; nu * n_v];
            for (i, col) in cols.iter().enumerate() {
                for (j, q) in col.iter().enumerate() {
                    points[i + nu * j] = Point2::new(q.x, q.y);
                    weights[i + nu * j] = q.w;
                }
            }
            self.kv_v = new_kv.expect("net has at least one column");
            self.net = ControlNet { n_u: nu, n_v, points, weights };
        }
        Ok(())
    }

    /// One knot at the midpoint of every non-empty span, in both directions.
    pub fn refine_uniform(&mut self) -> Result<()> {
        for (_, a, b) in self.kv_u.spans() {
            self.insert_knot(true, 0.5 * (a + b))?;
        }
        for (_, a, b) in self.kv_v.spans() {
            self.insert_knot(false, 0.5 * (a + b))?;
        }
        Ok(())
    }

    /// Inserts the knots `k / n` (k = 1..n) that are not already present.
    pub fn subdivide(&mut self, n_u: usize, n_v: usize) -> Result<()> {
        for k in 1..n_u {
            let t = k as f64 / n_u as f64;
            if self.kv_u.multiplicity(t) == 0 {
                self.insert_knot(true, t)?;
            }
        }
        for k in 1..n_v {
            let t = k as f64 / n_v as f64;
            if self.kv_v.multiplicity(t) == 0 {
                self.insert_knot(false, t)?;
            }
        }
        Ok(())
    }
}

// Map value and Jacobian from precomputed univariate B-spline evaluations.
pub(crate) fn map_from_basis(net: &ControlNet, bu: &BasisEvaluation, bv: &BasisEvaluation) -> (Point2, Jacobian) {
    let (mut w, mut wu, mut wv) = (0.0, 0.0, 0.0);
    let (mut sx, mut sxu, mut sxv) = (0.0, 0.0, 0.0);
    let (mut sy, mut syu, mut syv) = (0.0, 0.0, 0.0);
    for (b, (&nv, &dv)) in bv.values.iter().zip(&bv.derivatives).enumerate() {
        let j = bv.first_index + b;
        for (a, (&nu, &du)) in bu.values.iter().zip(&bu.derivatives).enumerate() {
            let k = net.index(bu.first_index + a, j);
            let wt = net.weights[k];
            let p = net.points[k];
            let c = nu * nv * wt;
            let cu = du * nv * wt;
            let cv = nu * dv * wt;
            w += c;
            wu += cu;
            wv += cv;
            sx += c * p.x;
            sxu += cu * p.x;
            sxv += cv * p.x;
            sy += c * p.y;
            syu += cu * p.y;
            syv += cv * p.y;
        }
    }
    let x = sx / w;
    let y = sy / w;
    let jac = [[(sxu - x * wu) / w, (sxv - x * wv) / w], [(syu - y * wu) / w, (syv - y * wv) / w]];
    (Point2::new(x, y), jac)
}

/// Evaluates the patch map `F(u, v)` and its Jacobian.
pub fn eval_map(patch: &Patch, u: f64, v: f64) -> Result<(Point2, Jacobian)> {
    let bu = eval_bspline(&patch.kv_u, u)?;
    let bv = eval_bspline(&patch.kv_v, v)?;
    Ok(map_from_basis(&patch.net, &bu, &bv))
}

/// A rational curve: knot vector plus weighted control points.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub kv: KnotVector,
    pub points: Vec<WeightedPoint>,
}

impl Curve {
    pub fn eval(&self, t: f64) -> Result<Point2> {
        let (x, y) = eval_curve(&self.kv, &self.points, t)?;
        Ok(Point2::new(x, y))
    }
}

/// Exact circular arc from rational quadratic segments of at most 90° each.
///
/// Interior segment junctions are double knots; the middle control point of each
/// segment sits on the tangent intersection with weight `cos(Δ/2)`.
pub fn make_arc(center: Point2, radius: f64, theta0: f64, theta1: f64) -> Result<Curve> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Validation(format!("arc radius must be positive, got {radius}")));
    }
    let span = theta1 - theta0;
    if !(span > 0.0) || !span.is_finite() {
        return Err(Error::Validation(format!("arc must have positive sweep, got {span}")));
    }
    let segments = libm::ceil(span / FRAC_PI_2 - 1e-12).max(1.0) as usize;
    let delta = span / segments as f64;
    let w_mid = math::cos(0.5 * delta);
    let on = |a: f64| WeightedPoint {
        x: center.x + radius * math::cos(a),
        y: center.y + radius * math::sin(a),
        w: 1.0,
    };
    let mut points = Vec::with_capacity(2 * segments + 1);
    let mut knots = alloc::vec![0.0, 0.0, 0.0];
    points.push(on(theta0));
    for s in 0..segments {
        let a0 = theta0 + s as f64 * delta;
        let mid = a0 + 0.5 * delta;
        let r_mid = radius / w_mid;
        points.push(WeightedPoint {
            x: center.x + r_mid * math::cos(mid),
            y: center.y + r_mid * math::sin(mid),
            w: w_mid,
        });
        let end = if s + 1 == segments { theta1 } else { a0 + delta };
        points.push(on(end));
        if s + 1 < segments {
            let t = (s + 1) as f64 / segments as f64;
            knots.push(t);
            knots.push(t);
        }
    }
    knots.extend([1.0, 1.0, 1.0]);
    Ok(Curve { kv: KnotVector::new(2, knots)?, points })
}

/// Annular sector `r_in ≤ r ≤ r_out`, `θ0 ≤ θ ≤ θ1` about the origin: a radial line
/// (degree 1, along `u`) times an exact arc (degree 2, along `v`).
pub fn make_annular_patch(r_in: f64, r_out: f64, theta0: f64, theta1: f64, region: impl Into<String>) -> Result<Patch> {
    if !(r_in > 0.0 && r_out > r_in) {
        return Err(Error::Validation(format!("annulus needs 0 < r_in < r_out, got {r_in}, {r_out}")));
    }
    let unit = make_arc(Point2::default(), 1.0, theta0, theta1)?;
    let n_v = unit.points.len();
    let mut points = Vec::with_capacity(2 * n_v);
    let mut weights = Vec::with_capacity(2 * n_v);
    for q in &unit.points {
        for r in [r_in, r_out] {
            points.push(Point2::new(r * q.x, r * q.y));
            weights.push(q.w);
        }
    }
    let kv_u = KnotVector::new(1, alloc::vec![0.0, 0.0, 1.0, 1.0])?;
    Patch::new(kv_u, unit.kv, ControlNet { n_u: 2, n_v, points, weights }, region)
}

/// A multipatch machine cross-section split into rotor and stator.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPatchModel {
    pub patches: Vec<Patch>,
    /// Subdomain of each patch, parallel to `patches`.
    pub subdomains: Vec<SubdomainKind>,
    pub materials: BTreeMap<String, Material>,
    pub edge_tags: BTreeMap<(usize, Side), EdgeTag>,
    pub pole_count: usize,
    /// Accumulated rigid rotation of the rotor, radians.
    pub rotor_angle: f64,
}

impl MultiPatchModel {
    pub fn pole_pitch(&self) -> f64 {
        2.0 * PI / self.pole_count as f64
    }

    pub fn patches_of(&self, kind: SubdomainKind) -> Vec<usize> {
        (0..self.patches.len()).filter(|&k| self.subdomains[k] == kind).collect()
    }

    pub fn tag(&self, patch: usize, side: Side) -> Option<EdgeTag> {
        self.edge_tags.get(&(patch, side)).copied()
    }

    pub fn material(&self, region: &str) -> Result<&Material> {
        self.materials
            .get(region)
            .ok_or_else(|| Error::Validation(format!("no material for region '{region}'")))
    }

    /// Applies `levels` passes of uniform midpoint refinement to every patch.
    pub fn refined(&self, levels: usize) -> Result<MultiPatchModel> {
        let mut out = self.clone();
        for _ in 0..levels {
            for patch in &mut out.patches {
                patch.refine_uniform()?;
            }
        }
        Ok(out)
    }
}

/// Rigidly rotates every rotor patch (and the rotor magnetizations) about the origin.
pub fn rotate_subdomain(model: &MultiPatchModel, kind: SubdomainKind, delta: f64) -> MultiPatchModel {
    let mut out = model.clone();
    if delta == 0.0 {
        return out;
    }
    let mut regions: Vec<&str> = Vec::new();
    for (patch, sub) in out.patches.iter_mut().zip(&model.subdomains) {
        if *sub != kind {
            continue;
        }
        for p in &mut patch.net.points {
            *p = p.rotated(delta);
        }
    }
    for (patch, sub) in model.patches.iter().zip(&model.subdomains) {
        if *sub == kind && !regions.contains(&patch.region.as_str()) {
            regions.push(patch.region.as_str());
        }
    }
    for region in regions {
        if let Some(m) = out.materials.get_mut(region) {
            let h = Point2::new(m.h_pm[0], m.h_pm[1]).rotated(delta);
            m.h_pm = [h.x, h.y];
        }
    }
    if kind == SubdomainKind::Rotor {
        out.rotor_angle += delta;
    }
    out
}

/// One problem found by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Patch,
    Jacobian,
    Tags,
    Conformity,
    Periodicity,
    AirGap,
    Material,
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

fn points_match(a: &[WeightedPoint], b: &[WeightedPoint], reversed: bool) -> bool {
    a.len() == b.len()
        && a.iter().enumerate().all(|(k, p)| {
            let q = if reversed { b[b.len() - 1 - k] } else { b[k] };
            math::hypot(p.x - q.x, p.y - q.y) <= COINCIDENCE_TOL
        })
}

fn knots_match(a: &KnotVector, b: &KnotVector, reversed: bool) -> bool {
    if a.degree() != b.degree() || a.knots().len() != b.knots().len() {
        return false;
    }
    let (ka, kb) = (a.knots(), b.knots());
    (0..ka.len()).all(|k| {
        let other = if reversed { 1.0 - kb[kb.len() - 1 - k] } else { kb[k] };
        (ka[k] - other).abs() < 1e-12
    })
}

/// True when two edges coincide as conforming NURBS curves (either orientation).
pub(crate) fn edges_conform(a: &Patch, sa: Side, b: &Patch, sb: Side) -> Option<bool> {
    let (ka, pa) = a.edge(sa);
    let (kb, pb) = b.edge(sb);
    for reversed in [false, true] {
        if points_match(&pa, &pb, reversed) && knots_match(&ka, &kb, reversed) {
            return Some(reversed);
        }
    }
    None
}

fn ends_match(a: (Point2, Point2), b: (Point2, Point2)) -> bool {
    (a.0.dist(b.0) <= COINCIDENCE_TOL && a.1.dist(b.1) <= COINCIDENCE_TOL)
        || (a.0.dist(b.1) <= COINCIDENCE_TOL && a.1.dist(b.0) <= COINCIDENCE_TOL)
}

/// Checks the invariants a model must satisfy before discretisation.
pub fn validate_model(model: &MultiPatchModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, message: String| out.push(Violation { kind, message });

    if model.pole_count < 2 || model.pole_count % 2 != 0 {
        push(ViolationKind::Periodicity, format!("pole count {} must be even and ≥ 2", model.pole_count));
    }
    if model.subdomains.len() != model.patches.len() {
        push(ViolationKind::Patch, "subdomain list does not match patch list".into());
        return out;
    }
    let mut patch_ok = alloc::vec![true; model.patches.len()];
    for (k, patch) in model.patches.iter().enumerate() {
        if let Err(e) = patch.check() {
            push(ViolationKind::Patch, format!("patch {k}: {e}"));
            patch_ok[k] = false;
            continue;
        }
        match model.materials.get(&patch.region) {
            None => push(ViolationKind::Material, format!("patch {k}: region '{}' has no material", patch.region)),
            Some(m) if !(m.nu > 0.0) => {
                push(ViolationKind::Material, format!("region '{}': reluctivity must be positive", patch.region))
            }
            _ => {}
        }
        if let Some((u, v, d)) = worst_jacobian(patch) {
            if !(d > 0.0) {
                push(
                    ViolationKind::Jacobian,
                    format!("patch {k}: Jacobian determinant {d:e} ≤ 0 at (u, v) = ({u:.4}, {v:.4})"),
                );
            }
        }
    }

    for k in 0..model.patches.len() {
        for side in Side::ALL {
            if model.tag(k, side).is_none() {
                push(ViolationKind::Tags, format!("patch {k} edge {} has no tag", side.name()));
            }
        }
    }
    for &(k, _) in model.edge_tags.keys() {
        if k >= model.patches.len() {
            push(ViolationKind::Tags, format!("edge tag refers to missing patch {k}"));
        }
    }

    for kind in [SubdomainKind::Rotor, SubdomainKind::Stator] {
        let members = model.patches_of(kind);
        if members.is_empty() {
            continue;
        }
        let edges_with = |tag: EdgeTag| -> Vec<(usize, Side)> {
            members
                .iter()
                .flat_map(|&k| Side::ALL.into_iter().map(move |s| (k, s)))
                .filter(|&(k, s)| model.tag(k, s) == Some(tag))
                .filter(|&(k, _)| patch_ok[k])
                .collect()
        };
        if edges_with(EdgeTag::Dirichlet).is_empty() {
            push(ViolationKind::Tags, format!("{} has no Γd edge", kind.name()));
        }

        for (k, s) in edges_with(EdgeTag::Interface) {
            let partner = members.iter().flat_map(|&m| Side::ALL.into_iter().map(move |t| (m, t))).find(|&(m, t)| {
                (m, t) != (k, s)
                    && patch_ok[m]
                    && model.tag(m, t) == Some(EdgeTag::Interface)
                    && edges_conform(&model.patches[k], s, &model.patches[m], t).is_some()
            });
            if partner.is_none() {
                push(
                    ViolationKind::Conformity,
                    format!("patch {k} edge {} has no conforming partner in the {}", s.name(), kind.name()),
                );
            }
        }

        let left = edges_with(EdgeTag::Left);
        let right = edges_with(EdgeTag::Right);
        if left.len() != right.len() {
            push(
                ViolationKind::Periodicity,
                format!("{}: {} Γl edges but {} Γr edges", kind.name(), left.len(), right.len()),
            );
        }
        let pitch = model.pole_pitch();
        for &(k, s) in &left {
            let (a, b) = model.patches[k].corners(s);
            let image = (a.rotated(pitch), b.rotated(pitch));
            if !right.iter().any(|&(m, t)| ends_match(image, model.patches[m].corners(t))) {
                push(
                    ViolationKind::Periodicity,
                    format!("patch {k} edge {} (Γl) has no Γr image under the pole pitch", s.name()),
                );
            }
        }

        let ag = edges_with(EdgeTag::AirGap);
        if !ag.is_empty() {
            let mut sweep = 0.0;
            for &(k, s) in &ag {
                let (a, b) = model.patches[k].corners(s);
                let mut d = b.angle() - a.angle();
                while d > PI {
                    d -= 2.0 * PI;
                }
                while d < -PI {
                    d += 2.0 * PI;
                }
                sweep += d.abs();
            }
            if (sweep - pitch).abs() > 1e-9 {
                push(
                    ViolationKind::AirGap,
                    format!("{}: Γag edges sweep {sweep:.12} rad instead of one pole pitch", kind.name()),
                );
            }
        }
    }

    let mut radius: Option<f64> = None;
    for (&(k, s), &tag) in &model.edge_tags {
        if tag != EdgeTag::AirGap || k >= model.patches.len() || !patch_ok[k] {
            continue;
        }
        let patch = &model.patches[k];
        for i in 0..=16 {
            let (u, v) = Patch::edge_uv(s, i as f64 / 16.0);
            let Ok((p, _)) = eval_map(patch, u, v) else { continue };
            let r = p.norm();
            match radius {
                None => radius = Some(r),
                Some(r0) if (r - r0).abs() > 1e-9 * r0.max(1.0) => {
                    push(
                        ViolationKind::AirGap,
                        format!("patch {k} edge {} leaves the air-gap circle (r = {r}, expected {r0})", s.name()),
                    );
                    break;
                }
                _ => {}
            }
        }
    }

    let mut rotor_regions = Vec::new();
    let mut stator_regions = Vec::new();
    for (patch, sub) in model.patches.iter().zip(&model.subdomains) {
        match sub {
            SubdomainKind::Rotor => rotor_regions.push(patch.region.as_str()),
            SubdomainKind::Stator => stator_regions.push(patch.region.as_str()),
        }
    }
    for r in &rotor_regions {
        if stator_regions.contains(r) {
            if let Some(m) = model.materials.get(*r) {
                if m.h_pm != [0.0, 0.0] {
                    push(ViolationKind::Material, format!("magnetized region '{r}' is shared by rotor and stator"));
                }
            }
        }
    }
    out.dedup();
    out
}

// Smallest Jacobian determinant over the (p+1)² Gauss points of every element.
fn worst_jacobian(patch: &Patch) -> Option<(f64, f64, f64)> {
    let ru = GaussRule::new(patch.kv_u.degree() + 1);
    let rv = GaussRule::new(patch.kv_v.degree() + 1);
    let mut worst: Option<(f64, f64, f64)> = None;
    for (_, a, b) in patch.kv_u.spans() {
        for (_, c, d) in patch.kv_v.spans() {
            for (u, _) in ru.on(a, b) {
                for (v, _) in rv.on(c, d) {
                    let Ok((_, j)) = eval_map(patch, u, v) else { continue };
                    let dj = det(&j);
                    if worst.map_or(true, |w| dj < w.2 || dj.is_nan()) {
                        worst = Some((u, v, dj));
                    }
                }
            }
        }
    }
    worst
}
