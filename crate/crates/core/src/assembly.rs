//! Galerkin assembly of `K_ν u = j_src + j_pm` on a set of patches.
//!
//! Matrices and load vectors are first assembled over all global functions of a
//! [`DofMap`], fixed ones included. The free block, the Dirichlet lift and
//! interface residuals are then extracted from those full objects.

use alloc::format;
use alloc::vec::Vec;

use crate::dofmap::{build_dof_map, DofMap, InterfaceCondition, LocalDof};
use crate::geometry::{det, map_from_basis, MultiPatchModel, Patch, Point2, SubdomainKind};
use crate::linalg::{solve_spd_from, spmv, CsrMatrix, SpdSolution};
use crate::math;
use crate::quadrature::GaussRule;
use crate::space::FieldSpace;
use crate::splines::{eval_on_span, find_span};
use crate::{Error, Result};

/// Which patches of a model form a subproblem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubdomainSelector {
    Rotor,
    Stator,
    All,
    Patches(Vec<usize>),
}

impl SubdomainSelector {
    fn resolve(&self, model: &MultiPatchModel) -> Vec<usize> {
        match self {
            SubdomainSelector::Rotor => model.patches_of(SubdomainKind::Rotor),
            SubdomainSelector::Stator => model.patches_of(SubdomainKind::Stator),
            SubdomainSelector::All => (0..model.patches.len()).collect(),
            SubdomainSelector::Patches(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssemblyOptions {
    /// Gauss points per direction and element; `None` picks `max(p_field, p_geo) + 1`.
    pub quad_points: Option<usize>,
}

/// Discretised patches of one subproblem.
#[derive(Debug, Clone)]
pub struct Subdomain<'m> {
    pub model: &'m MultiPatchModel,
    pub spaces: Vec<FieldSpace>,
    pub dofs: DofMap,
    pub degree: usize,
}

/// Field value and physical gradient at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub point: Point2,
    pub a: f64,
    pub grad: [f64; 2],
}

pub(crate) struct QuadPoint {
    pub point: Point2,
    /// Gauss weight times `det J`.
    pub weight: f64,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

pub(crate) struct Element {
    pub member: usize,
    pub dofs: Vec<LocalDof>,
    pub points: Vec<QuadPoint>,
}

impl<'m> Subdomain<'m> {
    pub fn new(
        model: &'m MultiPatchModel,
        selector: SubdomainSelector,
        degree: usize,
        interface: InterfaceCondition,
    ) -> Result<Self> {
        let patches = selector.resolve(model);
        if patches.is_empty() {
            return Err(Error::Validation("subdomain has no patches".into()));
        }
        if let Some(&k) = patches.iter().find(|&&k| k >= model.patches.len()) {
            return Err(Error::Validation(format!("patch {k} does not exist")));
        }
        let spaces = patches
            .iter()
            .map(|&k| FieldSpace::for_patch(&model.patches[k], degree))
            .collect::<Result<Vec<_>>>()?;
        let dofs = build_dof_map(model, &patches, &spaces, interface)?;
        Ok(Subdomain { model, spaces, dofs, degree })
    }

    pub fn patches(&self) -> &[usize] {
        &self.dofs.patches
    }

    pub fn patch(&self, member: usize) -> &'m Patch {
        &self.model.patches[self.dofs.patches[member]]
    }

    fn quad_points(&self, options: &AssemblyOptions) -> usize {
        options.quad_points.unwrap_or_else(|| {
            let geo = self
                .patches()
                .iter()
                .map(|&k| self.model.patches[k].kv_u.degree().max(self.model.patches[k].kv_v.degree()))
                .max()
                .unwrap_or(1);
            self.degree.max(geo) + 1
        })
    }

    /// Evaluates the field with full coefficient vector `coeffs` at `(u, v)` of a member patch.
    pub fn eval(&self, coeffs: &[f64], member: usize, u: f64, v: f64) -> Result<FieldValue> {
        if coeffs.len() != self.dofs.num_global() {
            return Err(Error::DimensionMismatch { expected: self.dofs.num_global(), found: coeffs.len() });
        }
        if member >= self.spaces.len() {
            return Err(Error::Validation(format!("member patch {member} out of range")));
        }
        let patch = self.patch(member);
        let space = &self.spaces[member];
        let gu = eval_on_span(&patch.kv_u, find_span(&patch.kv_u, u)?, u);
        let gv = eval_on_span(&patch.kv_v, find_span(&patch.kv_v, v)?, v);
        let (point, jac) = map_from_basis(&patch.net, &gu, &gv);
        let d = det(&jac);
        let bu = space.u.eval(u)?;
        let bv = space.v.eval(v)?;
        let (mut a, mut au, mut av) = (0.0, 0.0, 0.0);
        for (jb, (&nv, &dv)) in bv.values.iter().zip(&bv.derivatives).enumerate() {
            for (ib, (&nu, &du)) in bu.values.iter().zip(&bu.derivatives).enumerate() {
                let ld = self.dofs.local[member][space.index(bu.first_index + ib, bv.first_index + jb)];
                let c = ld.sign * coeffs[ld.global];
                a += c * nu * nv;
                au += c * du * nv;
                av += c * nu * dv;
            }
        }
        let grad = physical_gradient(&jac, d, au, av);
        Ok(FieldValue { point, a, grad })
    }

    /// All elements with their quadrature data.
    pub(crate) fn elements(&self, options: &AssemblyOptions) -> Result<Vec<Element>> {
        let rule = GaussRule::new(self.quad_points(options));
        let mut out = Vec::new();
        for (m, space) in self.spaces.iter().enumerate() {
            let patch = self.patch(m);
            let local = &self.dofs.local[m];
            for (ej, (sv, v0, v1)) in space.v.kv.spans().into_iter().enumerate() {
                let gsv = find_span(&patch.kv_v, 0.5 * (v0 + v1))?;
                for (ei, (su, u0, u1)) in space.u.kv.spans().into_iter().enumerate() {
                    let gsu = find_span(&patch.kv_u, 0.5 * (u0 + u1))?;
                    let (pu, pv) = (space.u.degree(), space.v.degree());
                    let mut dofs = Vec::with_capacity((pu + 1) * (pv + 1));
                    for b in 0..=pv {
                        for a in 0..=pu {
                            dofs.push(local[space.index(su - pu + a, sv - pv + b)]);
                        }
                    }
                    let mut points = Vec::with_capacity(rule.len() * rule.len());
                    for (v, wv) in rule.on(v0, v1) {
                        let gv = eval_on_span(&patch.kv_v, gsv, v);
                        let bv = space.v.eval_on_span(sv, v);
                        for (u, wu) in rule.on(u0, u1) {
                            let gu = eval_on_span(&patch.kv_u, gsu, u);
                            let bu = space.u.eval_on_span(su, u);
                            let (point, jac) = map_from_basis(&patch.net, &gu, &gv);
                            let d = det(&jac);
                            if !(d > 0.0) {
                                return Err(Error::SingularJacobian { patch: self.patches()[m], element: (ei, ej), det: d });
                            }
                            let mut values = Vec::with_capacity(dofs.len());
                            let mut grads = Vec::with_capacity(dofs.len());
                            for (&nv, &dv) in bv.values.iter().zip(&bv.derivatives) {
                                for (&nu, &du) in bu.values.iter().zip(&bu.derivatives) {
                                    values.push(nu * nv);
                                    grads.push(physical_gradient(&jac, d, du * nv, nu * dv));
                                }
                            }
                            points.push(QuadPoint { point, weight: wu * wv * d, values, grads });
                        }
                    }
                    out.push(Element { member: m, dofs, points });
                }
            }
        }
        Ok(out)
    }

    /// Field values at every quadrature point, in element order.
    pub(crate) fn field_at_points(&self, coeffs: &[f64], elements: &[Element]) -> Vec<Vec<f64>> {
        elements
            .iter()
            .map(|e| {
                e.points
                    .iter()
                    .map(|q| e.dofs.iter().zip(&q.values).map(|(ld, n)| ld.sign * coeffs[ld.global] * n).sum())
                    .collect()
            })
            .collect()
    }
}

// (∂/∂x, ∂/∂y) = J^{-T} (∂/∂u, ∂/∂v).
fn physical_gradient(jac: &[[f64; 2]; 2], d: f64, du: f64, dv: f64) -> [f64; 2] {
    let [[xu, xv], [yu, yv]] = *jac;
    [(yv * du - yu * dv) / d, (xu * dv - xv * du) / d]
}

fn scatter_matrix(n: usize, elements: &[Element], mut entry: impl FnMut(&Element, &QuadPoint, usize, usize) -> f64) -> CsrMatrix {
    let mut triplets = Vec::new();
    for e in elements {
        let k = e.dofs.len();
        let mut local = alloc::vec![0.0; k * k];
        for q in &e.points {
            for a in 0..k {
                for b in 0..k {
                    local[a * k + b] += entry(e, q, a, b);
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                let (da, db) = (e.dofs[a], e.dofs[b]);
                triplets.push((da.global, db.global, da.sign * db.sign * local[a * k + b]));
            }
        }
    }
    CsrMatrix::from_triplets(n, triplets)
}

fn region_nu(sub: &Subdomain<'_>) -> Result<Vec<f64>> {
    (0..sub.spaces.len()).map(|m| sub.model.material(&sub.patch(m).region).map(|mat| mat.nu)).collect()
}

/// Stiffness `∫ ν ∇w_i · ∇w_j` over all global functions.
pub fn assemble_stiffness(sub: &Subdomain<'_>, options: &AssemblyOptions) -> Result<CsrMatrix> {
    let nu = region_nu(sub)?;
    let elements = sub.elements(options)?;
    Ok(stiffness_from(sub.dofs.num_global(), &elements, &nu))
}

fn stiffness_from(n: usize, elements: &[Element], nu: &[f64]) -> CsrMatrix {
    scatter_matrix(n, elements, |e, q, a, b| {
        let (ga, gb) = (q.grads[a], q.grads[b]);
        nu[e.member] * q.weight * (ga[0] * gb[0] + ga[1] * gb[1])
    })
}

/// Mass matrix `∫ w_i w_j` over all global functions.
pub fn assemble_mass(sub: &Subdomain<'_>, options: &AssemblyOptions) -> Result<CsrMatrix> {
    let elements = sub.elements(options)?;
    Ok(mass_from(sub.dofs.num_global(), &elements))
}

fn mass_from(n: usize, elements: &[Element]) -> CsrMatrix {
    scatter_matrix(n, elements, |_, q, a, b| q.weight * q.values[a] * q.values[b])
}

/// An extra volume source `f(x, y)` added to `J_src,z` (manufactured solutions).
pub type SourceFn<'a> = &'a dyn Fn(Point2) -> f64;

/// `(j_src, j_pm)` over all global functions, with
/// `j_src,i = ∫ J_z w_i` and `j_pm,i = ∫ H_pm · (-∂w_i/∂y, ∂w_i/∂x)`.
pub fn assemble_sources(
    sub: &Subdomain<'_>,
    options: &AssemblyOptions,
    extra: Option<SourceFn<'_>>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let elements = sub.elements(options)?;
    sources_from(sub, &elements, extra)
}

fn sources_from(sub: &Subdomain<'_>, elements: &[Element], extra: Option<SourceFn<'_>>) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = sub.dofs.num_global();
    let mats = (0..sub.spaces.len())
        .map(|m| sub.model.material(&sub.patch(m).region).copied())
        .collect::<Result<Vec<_>>>()?;
    let mut j_src = alloc::vec![0.0; n];
    let mut j_pm = alloc::vec![0.0; n];
    for e in elements {
        let mat = &mats[e.member];
        let k = e.dofs.len();
        let mut ls = alloc::vec![0.0; k];
        let mut lp = alloc::vec![0.0; k];
        for q in &e.points {
            let f = mat.j_src + extra.map_or(0.0, |g| g(q.point));
            for a in 0..k {
                ls[a] += q.weight * f * q.values[a];
                let g = q.grads[a];
                lp[a] += q.weight * (-mat.h_pm[0] * g[1] + mat.h_pm[1] * g[0]);
            }
        }
        for (a, d) in e.dofs.iter().enumerate() {
            j_src[d.global] += d.sign * ls[a];
            j_pm[d.global] += d.sign * lp[a];
        }
    }
    Ok((j_src, j_pm))
}

/// The assembled system of one subdomain.
///
/// Full objects are indexed by global function; `k`, `j_src`, `j_pm` and
/// `dirichlet_lift` are restricted to the free functions.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k_full: CsrMatrix,
    pub mass_full: CsrMatrix,
    pub j_src_full: Vec<f64>,
    pub j_pm_full: Vec<f64>,
    pub k: CsrMatrix,
    pub j_src: Vec<f64>,
    pub j_pm: Vec<f64>,
    pub dirichlet_lift: Vec<f64>,
}

impl AssembledSystem {
    pub fn new(sub: &Subdomain<'_>, options: &AssemblyOptions, extra: Option<SourceFn<'_>>) -> Result<Self> {
        let nu = region_nu(sub)?;
        let elements = sub.elements(options)?;
        let n = sub.dofs.num_global();
        let k_full = stiffness_from(n, &elements, &nu);
        let mass_full = mass_from(n, &elements);
        let (j_src_full, j_pm_full) = sources_from(sub, &elements, extra)?;
        let free = sub.dofs.free_to_global();
        let k = k_full.submatrix(free);
        let j_src = sub.dofs.restrict(&j_src_full);
        let j_pm = sub.dofs.restrict(&j_pm_full);
        let mut sys = AssembledSystem {
            k_full,
            mass_full,
            j_src_full,
            j_pm_full,
            k,
            j_src,
            j_pm,
            dirichlet_lift: alloc::vec![0.0; free.len()],
        };
        sys.update_lift(&sub.dofs)?;
        Ok(sys)
    }

    /// Recomputes `dirichlet_lift = -(K_full · g)[free]` from the prescribed values.
    pub fn update_lift(&mut self, dofs: &DofMap) -> Result<()> {
        let kg = spmv(&self.k_full, dofs.values())?;
        self.dirichlet_lift = dofs.free_to_global().iter().map(|&g| -kg[g]).collect();
        Ok(())
    }

    /// Right-hand side over the free functions.
    pub fn rhs(&self) -> Vec<f64> {
        self.j_src.iter().zip(&self.j_pm).zip(&self.dirichlet_lift).map(|((s, p), l)| s + p + l).collect()
    }

    /// Solves for the free coefficients and returns the full coefficient vector.
    ///
    /// `extra_rhs` (free-indexed) is added to [`rhs`](Self::rhs); `guess` is a full vector.
    pub fn solve(
        &self,
        dofs: &DofMap,
        extra_rhs: Option<&[f64]>,
        guess: Option<&[f64]>,
        rtol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, SpdSolution)> {
        let mut b = self.rhs();
        if let Some(extra) = extra_rhs {
            if extra.len() != b.len() {
                return Err(Error::DimensionMismatch { expected: b.len(), found: extra.len() });
            }
            b.iter_mut().zip(extra).for_each(|(b, e)| *b += e);
        }
        let x0 = guess.map(|g| dofs.restrict(g));
        let sol = solve_spd_from(&self.k, &b, x0.as_deref(), rtol, max_iter)?;
        Ok((dofs.expand(&sol.x), sol))
    }

    /// Residual `(K_full u - j_src - j_pm)` over all global functions.
    pub fn residual_full(&self, u: &[f64]) -> Result<Vec<f64>> {
        let ku = spmv(&self.k_full, u)?;
        Ok(ku.iter().zip(&self.j_src_full).zip(&self.j_pm_full).map(|((k, s), p)| k - s - p).collect())
    }

    /// `sqrt(uᵀ M u)`: the L2 norm of the reconstructed field.
    pub fn l2_norm(&self, u: &[f64]) -> Result<f64> {
        let mu = spmv(&self.mass_full, u)?;
        Ok(math::sqrt(crate::linalg::dot(u, &mu).max(0.0)))
    }
}

/// Prescribes the values of interface functions `ids` and refreshes the lift.
///
/// Locked (homogeneous Dirichlet) functions keep their zero value.
pub fn apply_dirichlet_trace(
    dofs: &mut DofMap,
    system: &mut AssembledSystem,
    ids: &[usize],
    values: &[f64],
) -> Result<()> {
    if ids.len() != values.len() {
        return Err(Error::Validation(format!(
            "trace has {} coefficients but the edge has {} functions",
            values.len(),
            ids.len()
        )));
    }
    for (&g, &v) in ids.iter().zip(values) {
        dofs.set_value(g, v)?;
    }
    system.update_lift(dofs)
}

/// `‖A_h - exact‖_{L2}` by patchwise quadrature.
pub fn l2_error(sub: &Subdomain<'_>, coeffs: &[f64], exact: &dyn Fn(Point2) -> f64, options: &AssemblyOptions) -> Result<f64> {
    if coeffs.len() != sub.dofs.num_global() {
        return Err(Error::DimensionMismatch { expected: sub.dofs.num_global(), found: coeffs.len() });
    }
    let elements = sub.elements(options)?;
    let vals = sub.field_at_points(coeffs, &elements);
    let mut s = 0.0;
    for (e, v) in elements.iter().zip(&vals) {
        for (q, a) in e.points.iter().zip(v) {
            let d = a - exact(q.point);
            s += q.weight * d * d;
        }
    }
    Ok(math::sqrt(s))
}

/// `‖A_a - A_b‖_{L2}` over the patches of `a`, on the quadrature mesh of `a`.
///
/// Every patch of `a` must also belong to `b`, with the same parametrisation
/// (`b` may be a knot-inserted refinement or coarsening of it).
pub fn l2_difference(
    a: &Subdomain<'_>,
    a_coeffs: &[f64],
    b: &Subdomain<'_>,
    b_coeffs: &[f64],
    options: &AssemblyOptions,
) -> Result<f64> {
    if a_coeffs.len() != a.dofs.num_global() {
        return Err(Error::DimensionMismatch { expected: a.dofs.num_global(), found: a_coeffs.len() });
    }
    let members = a
        .patches()
        .iter()
        .map(|k| {
            b.patches()
                .iter()
                .position(|j| j == k)
                .ok_or_else(|| Error::Validation(format!("patch {k} is missing from the other subdomain")))
        })
        .collect::<Result<Vec<_>>>()?;
    let rule = GaussRule::new(a.quad_points(options));
    let mut s = 0.0;
    for (m, space) in a.spaces.iter().enumerate() {
        for (_, v0, v1) in space.v.kv.spans() {
            for (_, u0, u1) in space.u.kv.spans() {
                for (v, wv) in rule.on(v0, v1) {
                    for (u, wu) in rule.on(u0, u1) {
                        let fa = a.eval(a_coeffs, m, u, v)?;
                        let fb = b.eval(b_coeffs, members[m], u, v)?;
                        let (_, jac) = crate::geometry::eval_map(a.patch(m), u, v)?;
                        let d = fa.a - fb.a;
                        s += wu * wv * det(&jac) * d * d;
                    }
                }
            }
        }
    }
    Ok(math::sqrt(s))
}
