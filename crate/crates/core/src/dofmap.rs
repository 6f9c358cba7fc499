//! Global numbering of the basis functions of a set of patches.
//!
//! Every local function (patch, tensor index) maps to one global function with a sign.
//! Coincident functions on shared edges are glued with sign `+1`; functions on `Γl`
//! are slaved to their `Γr` images with sign `-1`. Global functions are then either
//! free unknowns or fixed by Dirichlet data.

use alloc::format;
use alloc::vec::Vec;

use crate::geometry::{eval_map, EdgeTag, MultiPatchModel, Patch, Point2, Side, COINCIDENCE_TOL};
use crate::space::FieldSpace;
use crate::{Error, Result};

/// Role of the `Γag` edges in a subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceCondition {
    /// Values prescribed from an interface trace.
    Dirichlet,
    /// Natural condition; flux enters through the right-hand side.
    Neumann,
    /// `Γag` edges are glued like interior interfaces (monolithic problems).
    Glued,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDof {
    pub global: usize,
    pub sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofStatus {
    Free(usize),
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// Model indices of the member patches.
    pub patches: Vec<usize>,
    /// Per member patch, per local tensor index.
    pub local: Vec<Vec<LocalDof>>,
    status: Vec<DofStatus>,
    values: Vec<f64>,
    locked: Vec<bool>,
    free_to_global: Vec<usize>,
    interface: Vec<usize>,
}

impl DofMap {
    /// Number of global functions, free and fixed.
    pub fn num_global(&self) -> usize {
        self.status.len()
    }

    /// Number of free unknowns `N_dof`.
    pub fn num_free(&self) -> usize {
        self.free_to_global.len()
    }

    pub fn status(&self, global: usize) -> DofStatus {
        self.status[global]
    }

    pub fn free_to_global(&self) -> &[usize] {
        &self.free_to_global
    }

    /// Prescribed values (zero on free functions).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Homogeneous-Dirichlet functions, which interface data never overrides.
    pub fn is_locked(&self, global: usize) -> bool {
        self.locked[global]
    }

    /// Global functions that do not vanish on `Γag`, in first-seen order.
    pub fn interface(&self) -> &[usize] {
        &self.interface
    }

    /// Sets the value of a fixed, unlocked function.
    pub fn set_value(&mut self, global: usize, value: f64) -> Result<()> {
        match self.status[global] {
            DofStatus::Free(_) => Err(Error::Validation(format!("global function {global} is free"))),
            DofStatus::Fixed if self.locked[global] => Ok(()),
            DofStatus::Fixed => {
                self.values[global] = value;
                Ok(())
            }
        }
    }

    /// Scatters free coefficients into a full vector carrying the prescribed values.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut full = self.values.clone();
        for (k, &g) in self.free_to_global.iter().enumerate() {
            full[g] = free[k];
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_to_global.iter().map(|&g| full[g]).collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    sign: Vec<f64>,
    zero: Vec<bool>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), sign: alloc::vec![1.0; n], zero: alloc::vec![false; n] }
    }

    fn find(&mut self, x: usize) -> (usize, f64) {
        let mut path = Vec::new();
        let mut r = x;
        while self.parent[r] != r {
            path.push(r);
            r = self.parent[r];
        }
        // compress from the top so each node's sign becomes relative to the root
        for &n in path.iter().rev() {
            let p = self.parent[n];
            if p != r {
                self.sign[n] *= self.sign[p];
            }
            self.parent[n] = r;
        }
        (r, if x == r { 1.0 } else { self.sign[x] })
    }

    // Enforces value(a) = s · value(b).
    fn union(&mut self, a: usize, b: usize, s: f64) {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            if pa != s * pb {
                self.zero[ra] = true;
            }
            return;
        }
        self.parent[ra] = rb;
        self.sign[ra] = pa * s * pb;
        if self.zero[ra] {
            self.zero[rb] = true;
        }
    }
}

struct EdgeFns {
    nodes: Vec<usize>,
    anchors: Vec<Point2>,
}

fn edge_functions(patch: &Patch, space: &FieldSpace, side: Side, offset: usize) -> Result<EdgeFns> {
    let (nu, nv) = (space.u.len(), space.v.len());
    let mut nodes = Vec::new();
    let mut anchors = Vec::new();
    let along = if side.along_v() { nv } else { nu };
    for k in 0..along {
        let (i, j) = match side {
            Side::U0 => (0, k),
            Side::U1 => (nu - 1, k),
            Side::V0 => (k, 0),
            Side::V1 => (k, nv - 1),
        };
        let g = if side.along_v() { space.v.kv.greville(j) } else { space.u.kv.greville(i) };
        let (u, v) = Patch::edge_uv(side, g);
        let (p, _) = eval_map(patch, u, v)?;
        nodes.push(offset + space.index(i, j));
        anchors.push(p);
    }
    Ok(EdgeFns { nodes, anchors })
}

fn corners_match(a: &EdgeFns, b: &EdgeFns) -> bool {
    let (a0, a1) = (a.anchors[0], a.anchors[a.anchors.len() - 1]);
    let (b0, b1) = (b.anchors[0], b.anchors[b.anchors.len() - 1]);
    (a0.dist(b0) <= COINCIDENCE_TOL && a1.dist(b1) <= COINCIDENCE_TOL)
        || (a0.dist(b1) <= COINCIDENCE_TOL && a1.dist(b0) <= COINCIDENCE_TOL)
}

/// Numbers the functions of `patches` (model indices, with their field spaces).
pub fn build_dof_map(
    model: &MultiPatchModel,
    patches: &[usize],
    spaces: &[FieldSpace],
    interface: InterfaceCondition,
) -> Result<DofMap> {
    if patches.len() != spaces.len() {
        return Err(Error::DimensionMismatch { expected: patches.len(), found: spaces.len() });
    }
    let mut offsets = Vec::with_capacity(patches.len() + 1);
    let mut total = 0;
    for s in spaces {
        offsets.push(total);
        total += s.len();
    }
    offsets.push(total);
    let mut uf = UnionFind::new(total);

    let edges_by_tag = |want: &dyn Fn(EdgeTag) -> bool| -> Result<Vec<(usize, Side, EdgeFns)>> {
        let mut out = Vec::new();
        for (m, &k) in patches.iter().enumerate() {
            for side in Side::ALL {
                if model.tag(k, side).map_or(false, want) {
                    out.push((m, side, edge_functions(&model.patches[k], &spaces[m], side, offsets[m])?));
                }
            }
        }
        Ok(out)
    };

    let glue = edges_by_tag(&|t| t == EdgeTag::Interface || (t == EdgeTag::AirGap && interface == InterfaceCondition::Glued))?;
    let mut paired = alloc::vec![false; glue.len()];
    for a in 0..glue.len() {
        if paired[a] {
            continue;
        }
        let (ma, sa, ref ea) = glue[a];
        let partner = (0..glue.len()).find(|&b| b != a && !paired[b] && corners_match(ea, &glue[b].2));
        let Some(b) = partner else {
            return Err(Error::Structural(format!(
                "patch {} edge {} has no matching neighbour",
                patches[ma],
                sa.name()
            )));
        };
        let (mb, sb, ref eb) = glue[b];
        paired[a] = true;
        paired[b] = true;
        let n = ea.nodes.len();
        if eb.nodes.len() != n {
            return Err(Error::Structural(format!(
                "non-conforming interface between patch {} edge {} ({n} functions) and patch {} edge {} ({} functions)",
                patches[ma],
                sa.name(),
                patches[mb],
                sb.name(),
                eb.nodes.len()
            )));
        }
        let reversed = ea.anchors[0].dist(eb.anchors[0]) > COINCIDENCE_TOL;
        for k in 0..n {
            let kb = if reversed { n - 1 - k } else { k };
            if ea.anchors[k].dist(eb.anchors[kb]) > COINCIDENCE_TOL {
                return Err(Error::Structural(format!(
                    "non-conforming interface between patch {} edge {} and patch {} edge {}",
                    patches[ma],
                    sa.name(),
                    patches[mb],
                    sb.name()
                )));
            }
            uf.union(ea.nodes[k], eb.nodes[kb], 1.0);
        }
    }

    let left = edges_by_tag(&|t| t == EdgeTag::Left)?;
    let right = edges_by_tag(&|t| t == EdgeTag::Right)?;
    if !left.is_empty() || !right.is_empty() {
        let pitch = model.pole_pitch();
        let targets: Vec<(usize, Point2)> = right
            .iter()
            .flat_map(|(_, _, e)| e.nodes.iter().copied().zip(e.anchors.iter().copied()))
            .collect();
        let mut matched = 0;
        for (m, side, e) in &left {
            for (&node, &anchor) in e.nodes.iter().zip(&e.anchors) {
                let image = anchor.rotated(pitch);
                let Some(&(target, _)) = targets.iter().find(|(_, p)| p.dist(image) <= COINCIDENCE_TOL) else {
                    return Err(Error::Structural(format!(
                        "patch {} edge {} (Γl) has no Γr image under the pole pitch",
                        patches[*m],
                        side.name()
                    )));
                };
                uf.union(node, target, -1.0);
                matched += 1;
            }
        }
        if matched == 0 || targets.is_empty() {
            return Err(Error::Structural("Γl and Γr must both be present".into()));
        }
    }

    let dirichlet = edges_by_tag(&|t| t == EdgeTag::Dirichlet)?;
    let airgap = if interface == InterfaceCondition::Glued { Vec::new() } else { edges_by_tag(&|t| t == EdgeTag::AirGap)? };

    let mut root_gid = alloc::vec![usize::MAX; total];
    let mut local = Vec::with_capacity(patches.len());
    let mut n_global = 0;
    for m in 0..patches.len() {
        let mut fns = Vec::with_capacity(spaces[m].len());
        for node in offsets[m]..offsets[m + 1] {
            let (r, s) = uf.find(node);
            if root_gid[r] == usize::MAX {
                root_gid[r] = n_global;
                n_global += 1;
            }
            fns.push(LocalDof { global: root_gid[r], sign: s });
        }
        local.push(fns);
    }

    let gid_of = |uf: &mut UnionFind, node: usize| root_gid[uf.find(node).0];
    let mut fixed = alloc::vec![false; n_global];
    let mut locked = alloc::vec![false; n_global];
    for node in 0..total {
        let (r, _) = uf.find(node);
        if uf.zero[r] {
            fixed[root_gid[r]] = true;
            locked[root_gid[r]] = true;
        }
    }
    for (_, _, e) in &dirichlet {
        for &node in &e.nodes {
            let g = gid_of(&mut uf, node);
            fixed[g] = true;
            locked[g] = true;
        }
    }
    let mut interface_ids = Vec::new();
    for (_, _, e) in &airgap {
        for &node in &e.nodes {
            let g = gid_of(&mut uf, node);
            if !interface_ids.contains(&g) {
                interface_ids.push(g);
            }
            if interface == InterfaceCondition::Dirichlet {
                fixed[g] = true;
            }
        }
    }

    let mut status = Vec::with_capacity(n_global);
    let mut free_to_global = Vec::new();
    for (g, &f) in fixed.iter().enumerate() {
        if f {
            status.push(DofStatus::Fixed);
        } else {
            status.push(DofStatus::Free(free_to_global.len()));
            free_to_global.push(g);
        }
    }
    Ok(DofMap {
        patches: patches.to_vec(),
        local,
        status,
        values: alloc::vec![0.0; n_global],
        locked,
        free_to_global,
        interface: interface_ids,
    })
}
