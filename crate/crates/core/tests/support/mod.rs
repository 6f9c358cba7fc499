//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use iga_core::assembly::{apply_dirichlet_trace, l2_error, AssembledSystem, AssemblyOptions, Subdomain, SubdomainSelector};
use iga_core::coupling::interface_flux;
use iga_core::dofmap::InterfaceCondition;
use iga_core::geometry::{
    make_annular_patch, ControlNet, EdgeTag, Material, MultiPatchModel, Patch, Point2, Side, SubdomainKind,
};
use iga_core::linalg::solve_spd;
use iga_core::splines::KnotVector;
use iga_core::trace::{TraceFunction, TraceSpace, TraceTransfer};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Rings `[r_k, r_{k+1}]` split into `sectors` equal sectors over `sweep`.
pub struct Rings {
    pub radii: Vec<f64>,
    pub kinds: Vec<SubdomainKind>,
    pub regions: Vec<String>,
    pub sectors: usize,
    pub sweep: f64,
    pub subdivide: (usize, usize),
}

/// Builds a model of concentric rings; the caller supplies the tag of each
/// outer boundary edge through `inner`, `outer` and `sides`.
pub fn ring_model(
    rings: &Rings,
    materials: BTreeMap<String, Material>,
    pole_count: usize,
    inner: EdgeTag,
    outer: EdgeTag,
    sides: (EdgeTag, EdgeTag),
    between_layers: &dyn Fn(usize) -> (EdgeTag, EdgeTag),
) -> MultiPatchModel {
    let mut patches = Vec::new();
    let mut subdomains = Vec::new();
    let mut edge_tags = BTreeMap::new();
    let layers = rings.radii.len() - 1;
    for l in 0..layers {
        for s in 0..rings.sectors {
            let a = rings.sweep * s as f64 / rings.sectors as f64;
            let b = rings.sweep * (s + 1) as f64 / rings.sectors as f64;
            let mut p = make_annular_patch(rings.radii[l], rings.radii[l + 1], a, b, rings.regions[l].clone()).unwrap();
            p.subdivide(rings.subdivide.0, rings.subdivide.1).unwrap();
            let k = patches.len();
            patches.push(p);
            subdomains.push(rings.kinds[l]);
            let (below, above) = between_layers(l);
            edge_tags.insert((k, Side::U0), if l == 0 { inner } else { below });
            edge_tags.insert((k, Side::U1), if l + 1 == layers { outer } else { above });
            edge_tags.insert((k, Side::V0), if s == 0 { sides.0 } else { EdgeTag::Interface });
            edge_tags.insert((k, Side::V1), if s + 1 == rings.sectors { sides.1 } else { EdgeTag::Interface });
        }
    }
    MultiPatchModel { patches, subdomains, materials, edge_tags, pole_count, rotor_angle: 0.0 }
}

fn unit_materials(names: &[&str]) -> BTreeMap<String, Material> {
    names.iter().map(|n| (n.to_string(), Material { nu: 1.0, h_pm: [0.0, 0.0], j_src: 0.0 })).collect()
}

pub const MMS_INNER: f64 = 1.0;
pub const MMS_OUTER: f64 = 2.0;

/// `A = r sin φ (r - a)(b - r)` on the half annulus `a ≤ r ≤ b`, `0 ≤ φ ≤ π`.
pub fn mms_exact(p: Point2) -> f64 {
    let r = p.norm();
    p.y * (r - MMS_INNER) * (MMS_OUTER - r)
}

/// `-ΔA = sin φ (8r - 3(a + b)) = 8y - 3(a + b) y / r`.
pub fn mms_forcing(p: Point2) -> f64 {
    let r = p.norm();
    8.0 * p.y - 3.0 * (MMS_INNER + MMS_OUTER) * p.y / r
}

pub fn mms_model(level: usize) -> MultiPatchModel {
    let rings = Rings {
        radii: vec![MMS_INNER, MMS_OUTER],
        kinds: vec![SubdomainKind::Rotor],
        regions: vec!["air".into()],
        sectors: 2,
        sweep: PI,
        subdivide: (2, 2),
    };
    let d = EdgeTag::Dirichlet;
    ring_model(&rings, unit_materials(&["air"]), 2, d, d, (d, d), &|_| (d, d)).refined(level).unwrap()
}

/// `(N_dof, L2 error)` of the manufactured problem at levels `0..levels`.
pub fn mms_errors(degree: usize, levels: usize) -> Vec<(usize, f64)> {
    let err_opts = AssemblyOptions { quad_points: Some(degree + 4) };
    (0..levels)
        .map(|level| {
            let model = mms_model(level);
            let sub = Subdomain::new(&model, SubdomainSelector::All, degree, InterfaceCondition::Neumann).unwrap();
            let sys = AssembledSystem::new(&sub, &AssemblyOptions::default(), Some(&mms_forcing)).unwrap();
            let sol = solve_spd(&sys.k, &sys.rhs(), 1e-13, 20_000).unwrap();
            assert!(sol.converged);
            let u = sub.dofs.expand(&sol.x);
            (sub.dofs.num_free(), l2_error(&sub, &u, &mms_exact, &err_opts).unwrap())
        })
        .collect()
}

pub fn orders(errors: &[(usize, f64)]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0].1 / w[1].1).log2()).collect()
}

/// Conforming rotor ring `[1, 1.5]` and stator ring `[1.5, 2]` over a pole pitch of π/2,
/// with a magnetised rotor layer and a current-carrying stator layer.
pub fn conforming_pair(level: usize) -> MultiPatchModel {
    let rings = Rings {
        radii: vec![1.0, 1.25, 1.5, 1.75, 2.0],
        kinds: vec![SubdomainKind::Rotor, SubdomainKind::Rotor, SubdomainKind::Stator, SubdomainKind::Stator],
        regions: vec!["core".into(), "magnet".into(), "gap".into(), "coil".into()],
        sectors: 3,
        sweep: PI / 2.0,
        subdivide: (2, 2),
    };
    let mut materials = BTreeMap::new();
    materials.insert("core".to_string(), Material { nu: 0.2, h_pm: [0.0, 0.0], j_src: 0.0 });
    materials.insert("magnet".to_string(), Material { nu: 1.0, h_pm: [-0.8, -0.3], j_src: 0.0 });
    materials.insert("gap".to_string(), Material { nu: 1.0, h_pm: [0.0, 0.0], j_src: 0.0 });
    materials.insert("coil".to_string(), Material { nu: 0.5, h_pm: [0.0, 0.0], j_src: 1.5 });
    ring_model(
        &rings,
        materials,
        4,
        EdgeTag::Dirichlet,
        EdgeTag::Dirichlet,
        (EdgeTag::Left, EdgeTag::Right),
        &|l| {
            let below = if l == 2 { EdgeTag::AirGap } else { EdgeTag::Interface };
            let above = if l == 1 { EdgeTag::AirGap } else { EdgeTag::Interface };
            (below, above)
        },
    )
    .refined(level)
    .unwrap()
}

pub const FLUX_M: i32 = 3;
pub const FLUX_R1: f64 = 1.0;
pub const FLUX_R: f64 = 1.25;

/// `A = (r^m - r1^{2m} r^{-m}) cos(mφ)`: harmonic, zero at `r1`, anti-periodic over π/m.
pub fn flux_exact(p: Point2) -> f64 {
    let r = p.norm();
    let m = FLUX_M;
    (r.powi(m) - FLUX_R1.powi(2 * m) * r.powi(-m)) * (m as f64 * p.angle()).cos()
}

/// `∂A/∂r` at radius `r`, angle `phi`.
pub fn flux_exact_dr(r: f64, phi: f64) -> f64 {
    let m = FLUX_M;
    let mf = m as f64;
    mf * (r.powi(m - 1) + FLUX_R1.powi(2 * m) * r.powi(-m - 1)) * (mf * phi).cos()
}

/// Ring `[r1, R]` over one pitch π/m: `Γd` inside, `Γag` outside, anti-periodic sides.
pub fn flux_model(level: usize) -> MultiPatchModel {
    let rings = Rings {
        radii: vec![FLUX_R1, FLUX_R],
        kinds: vec![SubdomainKind::Rotor],
        regions: vec!["air".into()],
        sectors: 2,
        sweep: PI / FLUX_M as f64,
        subdivide: (2, 4),
    };
    ring_model(
        &rings,
        unit_materials(&["air"]),
        2 * FLUX_M as usize,
        EdgeTag::Dirichlet,
        EdgeTag::AirGap,
        (EdgeTag::Left, EdgeTag::Right),
        &|_| (EdgeTag::Interface, EdgeTag::Interface),
    )
    .refined(level)
    .unwrap()
}

// ---------------------------------------------------------------------------
// Brute-force assembly oracle: recursive Cox-de Boor, direct rational quotient,
// its own Gauss tables, and element-by-element dense accumulation.

fn cox_de_boor(knots: &[f64], i: usize, p: usize, u: f64, last: bool) -> f64 {
    if p == 0 {
        let (a, b) = (knots[i], knots[i + 1]);
        return if (a <= u && u < b) || (last && u == b && a < b && b == *knots.last().unwrap()) {
            1.0
        } else {
            0.0
        };
    }
    let mut v = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        v += (u - knots[i]) / d1 * cox_de_boor(knots, i, p - 1, u, last);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        v += (knots[i + p + 1] - u) / d2 * cox_de_boor(knots, i + 1, p - 1, u, last);
    }
    v
}

fn cox_de_boor_deriv(knots: &[f64], i: usize, p: usize, u: f64) -> f64 {
    if p == 0 {
        return 0.0;
    }
    let pf = p as f64;
    let mut d = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        d += pf / d1 * cox_de_boor(knots, i, p - 1, u, true);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        d -= pf / d2 * cox_de_boor(knots, i + 1, p - 1, u, true);
    }
    d
}

/// Values and derivatives of all rational functions `ω_i B_i / Σ ω_j B_j` at `u`.
pub fn oracle_basis(kv: &KnotVector, weights: &[f64], u: f64) -> (Vec<f64>, Vec<f64>) {
    let knots = kv.knots();
    let p = kv.degree();
    let n = kv.num_basis();
    let b: Vec<f64> = (0..n).map(|i| cox_de_boor(knots, i, p, u, true)).collect();
    let db: Vec<f64> = (0..n).map(|i| cox_de_boor_deriv(knots, i, p, u)).collect();
    let w: f64 = (0..n).map(|i| weights[i] * b[i]).sum();
    let dw: f64 = (0..n).map(|i| weights[i] * db[i]).sum();
    let vals = (0..n).map(|i| weights[i] * b[i] / w).collect();
    let ders = (0..n).map(|i| weights[i] * (db[i] * w - b[i] * dw) / (w * w)).collect();
    (vals, ders)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_table(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt() * 2.0;
            let a = ((3.0 - s) / 7.0).sqrt();
            let b = ((3.0 + s) / 7.0).sqrt();
            let wa = (18.0 + 30.0f64.sqrt()) / 36.0;
            let wb = (18.0 - 30.0f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let s = 2.0 * (10.0f64 / 7.0).sqrt();
            let a = (5.0 - s).sqrt() / 3.0;
            let b = (5.0 + s).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, 128.0 / 225.0, wa, wb])
        }
        _ => panic!("no table for {n} points"),
    }
}

/// Field-space directions as the production code defines them.
fn field_direction(kv: &KnotVector, weights: Vec<f64>, degree: usize) -> (KnotVector, Vec<f64>) {
    if kv.degree() == degree {
        return (kv.clone(), weights);
    }
    let interior: Vec<(f64, usize)> = kv.interior_breakpoints().into_iter().map(|(t, m)| (t, m.min(degree))).collect();
    let k = KnotVector::from_breakpoints(degree, &interior).unwrap();
    let n = k.num_basis();
    (k, vec![1.0; n])
}

pub struct OracleSystem {
    pub k: Vec<Vec<f64>>,
    pub j_src: Vec<f64>,
    pub j_pm: Vec<f64>,
}

/// Dense assembly of a single patch with `points` Gauss points per direction and element.
/// Indices follow the tensor order `i + n_u j`.
pub fn oracle_assemble(patch: &Patch, mat: &Material, degree: usize, points: usize) -> OracleSystem {
    let net = &patch.net;
    let wu: Vec<f64> = (0..net.n_u).map(|i| net.weights[net.index(i, 0)] / net.weights[0]).collect();
    let wv: Vec<f64> = (0..net.n_v).map(|j| net.weights[net.index(0, j)]).collect();
    let (fu, fwu) = field_direction(&patch.kv_u, wu, degree);
    let (fv, fwv) = field_direction(&patch.kv_v, wv, degree);
    let (nu, nv) = (fu.num_basis(), fv.num_basis());
    let n = nu * nv;
    let mut k = vec![vec![0.0; n]; n];
    let mut j_src = vec![0.0; n];
    let mut j_pm = vec![0.0; n];
    let (gx, gw) = gauss_table(points);
    let bu = fu.breakpoints();
    let bv = fv.breakpoints();
    let all_w: Vec<f64> = net.weights.clone();
    for ev in bv.windows(2) {
        for eu in bu.windows(2) {
            for (qv, wqv) in gx.iter().zip(&gw) {
                let v = 0.5 * (ev[0] + ev[1]) + 0.5 * (ev[1] - ev[0]) * qv;
                let wv_ = 0.5 * (ev[1] - ev[0]) * wqv;
                for (qu, wqu) in gx.iter().zip(&gw) {
                    let u = 0.5 * (eu[0] + eu[1]) + 0.5 * (eu[1] - eu[0]) * qu;
                    let wu_ = 0.5 * (eu[1] - eu[0]) * wqu;
                    // geometry from the full 2D rational formula
                    let ones_u = vec![1.0; net.n_u];
                    let ones_v = vec![1.0; net.n_v];
                    let (gbu, gdu) = oracle_basis(&patch.kv_u, &ones_u, u);
                    let (gbv, gdv) = oracle_basis(&patch.kv_v, &ones_v, v);
                    let (mut w, mut w_u, mut w_v) = (0.0, 0.0, 0.0);
                    let (mut sx, mut sy, mut sxu, mut syu, mut sxv, mut syv) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                    for j in 0..net.n_v {
                        for i in 0..net.n_u {
                            let idx = net.index(i, j);
                            let om = all_w[idx];
                            let p = net.points[idx];
                            let c = om * gbu[i] * gbv[j];
                            let cu = om * gdu[i] * gbv[j];
                            let cv = om * gbu[i] * gdv[j];
                            w += c;
                            w_u += cu;
                            w_v += cv;
                            sx += c * p.x;
                            sy += c * p.y;
                            sxu += cu * p.x;
                            syu += cu * p.y;
                            sxv += cv * p.x;
                            syv += cv * p.y;
                        }
                    }
                    let x = sx / w;
                    let y = sy / w;
                    let xu = (sxu - x * w_u) / w;
                    let yu = (syu - y * w_u) / w;
                    let xv = (sxv - x * w_v) / w;
                    let yv = (syv - y * w_v) / w;
                    let det = xu * yv - xv * yu;
                    let (fbu, fdu) = oracle_basis(&fu, &fwu, u);
                    let (fbv, fdv) = oracle_basis(&fv, &fwv, v);
                    let weight = wu_ * wv_ * det;
                    let mut vals = vec![0.0; n];
                    let mut grads = vec![[0.0; 2]; n];
                    for j in 0..nv {
                        for i in 0..nu {
                            let a = i + nu * j;
                            let du = fdu[i] * fbv[j];
                            let dv = fbu[i] * fdv[j];
                            vals[a] = fbu[i] * fbv[j];
                            grads[a] = [(yv * du - yu * dv) / det, (-xv * du + xu * dv) / det];
                        }
                    }
                    for a in 0..n {
                        if vals[a] == 0.0 && grads[a] == [0.0, 0.0] {
                            continue;
                        }
                        j_src[a] += weight * mat.j_src * vals[a];
                        j_pm[a] += weight * (-mat.h_pm[0] * grads[a][1] + mat.h_pm[1] * grads[a][0]);
                        for b in 0..n {
                            k[a][b] += weight * mat.nu * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                        }
                    }
                }
            }
        }
    }
    OracleSystem { k, j_src, j_pm }
}

/// One-patch model without boundary tags, so every local function is a global one.
pub fn single_patch_model(patch: Patch, mat: Material) -> MultiPatchModel {
    let mut materials = BTreeMap::new();
    materials.insert(patch.region.clone(), mat);
    MultiPatchModel {
        patches: vec![patch],
        subdomains: vec![SubdomainKind::Rotor],
        materials,
        edge_tags: BTreeMap::new(),
        pole_count: 2,
        rotor_angle: 0.0,
    }
}

/// Degree-2 patch whose map is a random affine image of the unit square, with
/// random interior knots.
pub fn random_affine_patch(rng: &mut StdRng) -> Patch {
    let knots_for = |rng: &mut StdRng| {
        let mut t: Vec<f64> = (0..2).map(|_| rng.gen_range(0.15..0.85)).collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if t[1] - t[0] < 0.05 {
            t[1] = t[0] + 0.1;
        }
        let mut k = vec![0.0, 0.0, 0.0];
        k.extend(t);
        k.extend([1.0, 1.0, 1.0]);
        KnotVector::new(2, k).unwrap()
    };
    let ku = knots_for(rng);
    let kv = knots_for(rng);
    let a = [[rng.gen_range(0.5..2.0), rng.gen_range(-0.4..0.4)], [rng.gen_range(-0.4..0.4), rng.gen_range(0.5..2.0)]];
    let b = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let (nu, nv) = (ku.num_basis(), kv.num_basis());
    let mut points = Vec::new();
    for j in 0..nv {
        for i in 0..nu {
            let (u, v) = (ku.greville(i), kv.greville(j));
            points.push(Point2::new(a[0][0] * u + a[0][1] * v + b[0], a[1][0] * u + a[1][1] * v + b[1]));
        }
    }
    Patch::new(ku, kv, ControlNet { n_u: nu, n_v: nv, points, weights: vec![1.0; nu * nv] }, "fixture").unwrap()
}

pub fn random_material(rng: &mut StdRng) -> Material {
    Material {
        nu: rng.gen_range(0.5..3.0),
        h_pm: [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
        j_src: rng.gen_range(-2.0..2.0),
    }
}

/// The three single-patch fixtures: `(model, field degree, production quadrature)`.
pub fn oracle_fixtures() -> Vec<(MultiPatchModel, usize, AssemblyOptions)> {
    let mut rng = StdRng::seed_from_u64(0x5eed_1a);
    let p1 = random_affine_patch(&mut rng);
    let m1 = random_material(&mut rng);
    let p2 = random_affine_patch(&mut rng);
    let m2 = random_material(&mut rng);
    let mut p3 = make_annular_patch(0.7, 1.6, 0.2, 1.5, "fixture").unwrap();
    p3.subdivide(2, 3).unwrap();
    let m3 = random_material(&mut rng);
    vec![
        (single_patch_model(p1, m1), 2, AssemblyOptions::default()),
        (single_patch_model(p2, m2), 1, AssemblyOptions::default()),
        // rational map: integrands are not polynomial, so both sides use 4 points
        (single_patch_model(p3, m3), 2, AssemblyOptions { quad_points: Some(4) }),
    ]
}

/// Oracle Gauss order `2p + 3` per direction for field degree `p`, i.e. `p + 2` points.
pub fn oracle_points(degree: usize) -> usize {
    (degree + 2).max(3)
}

/// Largest relative entry mismatch of `K`, `j_src`, `j_pm` between production and oracle.
pub fn oracle_mismatch(model: &MultiPatchModel, degree: usize, options: AssemblyOptions) -> f64 {
    let sub = Subdomain::new(model, SubdomainSelector::All, degree, InterfaceCondition::Neumann).unwrap();
    let sys = AssembledSystem::new(&sub, &options, None).unwrap();
    let mat = model.materials[&model.patches[0].region];
    let oracle = oracle_assemble(&model.patches[0], &mat, degree, oracle_points(degree));
    // single patch without gluing: global id = local tensor index
    for (k, ld) in sub.dofs.local[0].iter().enumerate() {
        assert_eq!((ld.global, ld.sign), (k, 1.0));
    }
    let kmax = oracle.k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for (i, row) in oracle.k.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((sys.k_full.get(i, j) - v).abs() / kmax);
        }
    }
    for (ours, theirs) in [(&sys.j_src_full, &oracle.j_src), (&sys.j_pm_full, &oracle.j_pm)] {
        let m = theirs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in ours.iter().zip(theirs.iter()) {
            worst = worst.max((a - b).abs() / m);
        }
    }
    worst
}

/// Relative L2 errors on `Γag` of the flux-fixture solution with exact Dirichlet data:
/// `(variational flux, pointwise ∂A/∂r from the field gradient)`.
pub fn flux_errors(degree: usize, level: usize) -> (f64, f64) {
    let model = flux_model(level);
    let mut sub = Subdomain::new(&model, SubdomainSelector::Rotor, degree, InterfaceCondition::Dirichlet).unwrap();
    let mut sys = AssembledSystem::new(&sub, &AssemblyOptions::default(), None).unwrap();
    let space = Arc::new(TraceSpace::of(&sub).unwrap());
    let exact = |phi: f64| flux_exact(Point2::new(FLUX_R * phi.cos(), FLUX_R * phi.sin()));
    let g = TraceFunction::from_fn(space.clone(), &exact).unwrap();
    apply_dirichlet_trace(&mut sub.dofs, &mut sys, &space.ids, &g.coeffs).unwrap();
    let (u, sol) = sys.solve(&sub.dofs, None, None, 1e-14, 50_000).unwrap();
    assert!(sol.converged);
    let transfer = TraceTransfer::new(space.clone(), space.clone(), 0.0).unwrap();
    let q = interface_flux(&sys, &u, &transfer).unwrap();

    let (mut e_var, mut e_pt, mut norm) = (0.0, 0.0, 0.0);
    let samples = 400;
    let last = sub.spaces.len() - 1;
    for k in 0..samples {
        let t = (k as f64 + 0.5) / samples as f64;
        // the outer layer's sectors are the last `sectors` members, in angular order
        let sectors = 2;
        let s = ((t * sectors as f64) as usize).min(sectors - 1);
        let member = last + 1 - sectors + s;
        let v = t * sectors as f64 - s as f64;
        let f = sub.eval(&u, member, 1.0, v).unwrap();
        let phi = f.point.angle();
        let r = f.point.norm();
        let dr = (f.grad[0] * f.point.x + f.grad[1] * f.point.y) / r;
        let ex = flux_exact_dr(FLUX_R, phi);
        e_var += (q.eval(phi).unwrap() - ex).powi(2);
        e_pt += (dr - ex).powi(2);
        norm += ex * ex;
    }
    ((e_var / norm).sqrt(), (e_pt / norm).sqrt())
}

/// Single-system solve over both subdomains with `Γag` glued.
pub fn monolithic(model: &MultiPatchModel, degree: usize) -> (Subdomain<'_>, Vec<f64>) {
    let sub = Subdomain::new(model, SubdomainSelector::All, degree, InterfaceCondition::Glued).unwrap();
    let sys = AssembledSystem::new(&sub, &AssemblyOptions::default(), None).unwrap();
    let sol = solve_spd(&sys.k, &sys.rhs(), 1e-14, 50_000).unwrap();
    assert!(sol.converged);
    let u = sub.dofs.expand(&sol.x);
    (sub, u)
}

/// Worst partition-of-unity error and worst relative derivative/central-difference gap
/// of random NURBS bases of `degree` at `points` random parameters.
pub fn basis_check(degree: usize, points: usize, seed: u64) -> (f64, f64) {
    use iga_core::splines::eval_nurbs;
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut pou, mut fd) = (0.0f64, 0.0f64);
    let h = 1e-6;
    for _ in 0..points {
        let mut inner: Vec<f64> = (0..rng.gen_range(0..5)).map(|_| rng.gen_range(0.05..0.95)).collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
        inner.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
        let mut k = vec![0.0; degree + 1];
        k.extend(&inner);
        k.extend(vec![1.0; degree + 1]);
        let kv = KnotVector::new(degree, k).unwrap();
        let w: Vec<f64> = (0..kv.num_basis()).map(|_| rng.gen_range(0.3..3.0)).collect();
        let u: f64 = rng.gen_range(0.0..=1.0);
        let b = eval_nurbs(&kv, &w, u).unwrap();
        pou = pou.max((b.values.iter().sum::<f64>() - 1.0).abs());
        if kv.breakpoints().iter().any(|t| (u - t).abs() < 4.0 * h) {
            continue;
        }
        let plus = eval_nurbs(&kv, &w, u + h).unwrap();
        let minus = eval_nurbs(&kv, &w, u - h).unwrap();
        assert_eq!(plus.first_index, b.first_index);
        for j in 0..b.values.len() {
            let d = (plus.values[j] - minus.values[j]) / (2.0 * h);
            fd = fd.max((d - b.derivatives[j]).abs() / b.derivatives[j].abs().max(1.0));
        }
    }
    (pou, fd)
}

/// Largest relative radius deviation over every circular edge (`U0`/`U1`) of `model`,
/// `samples` points per edge.
pub fn circle_deviation(model: &MultiPatchModel, samples: usize) -> f64 {
    use iga_core::splines::eval_curve;
    let mut worst = 0.0f64;
    for patch in &model.patches {
        for side in [Side::U0, Side::U1] {
            let (kv, pts) = patch.edge(side);
            let radius = patch.corners(side).0.norm();
            for k in 0..samples {
                let t = k as f64 / (samples - 1) as f64;
                let (x, y) = eval_curve(&kv, &pts, t).unwrap();
                worst = worst.max(((x * x + y * y).sqrt() - radius).abs() / radius);
            }
        }
    }
    worst
}
