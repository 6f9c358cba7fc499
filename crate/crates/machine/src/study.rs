//! Self-convergence study on the rotor-only magnet problem: homogeneous Dirichlet
//! data on `Γd ∪ Γag`, anti-periodic pole sides, magnets as the only source.

use iga_core::assembly::{l2_difference, AssembledSystem, AssemblyOptions, Subdomain, SubdomainSelector};
use iga_core::dofmap::InterfaceCondition;
use iga_core::geometry::MultiPatchModel;
use iga_core::linalg::{solve_spd, DEFAULT_RTOL};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyRow {
    pub degree: usize,
    pub level: usize,
    pub ndof: usize,
    /// L2 distance to the reference solution.
    pub l2_diff: f64,
    /// `l2_diff` over the reference norm.
    pub rel_diff: f64,
}

fn solve_rotor<'m>(model: &'m MultiPatchModel, degree: usize, opts: &AssemblyOptions) -> Result<(Subdomain<'m>, Vec<f64>)> {
    let sub = Subdomain::new(model, SubdomainSelector::Rotor, degree, InterfaceCondition::Dirichlet)?;
    let sys = AssembledSystem::new(&sub, opts, None)?;
    let sol = solve_spd(&sys.k, &sys.rhs(), DEFAULT_RTOL, 20 * sys.k.dim() + 1000)?;
    if !sol.converged {
        return Err(CliError::NotConverged(format!(
            "degree {degree}: linear solve stopped at residual {:e} after {} iterations",
            sol.residual, sol.iterations
        )));
    }
    let u = sub.dofs.expand(&sol.x);
    Ok((sub, u))
}

/// Rows for every degree and level `0..=max_level`. The reference is the finest level
/// of the highest degree.
pub fn self_convergence(
    model: &MultiPatchModel,
    degrees: &[usize],
    max_level: usize,
    opts: &AssemblyOptions,
) -> Result<Vec<StudyRow>> {
    let top = *degrees.iter().max().ok_or_else(|| CliError::Invalid("no degrees given".into()))?;
    let models = (0..=max_level).map(|l| model.refined(l)).collect::<iga_core::Result<Vec<_>>>()?;
    let (ref_sub, ref_u) = solve_rotor(&models[max_level], top, opts)?;
    let ref_sys_norm = {
        let sys = AssembledSystem::new(&ref_sub, opts, None)?;
        sys.l2_norm(&ref_u)?
    };
    let mut rows = Vec::new();
    for &degree in degrees {
        for (level, m) in models.iter().enumerate() {
            let (sub, u) = if degree == top && level == max_level {
                (ref_sub.clone(), ref_u.clone())
            } else {
                solve_rotor(m, degree, opts)?
            };
            let d = l2_difference(&ref_sub, &ref_u, &sub, &u, opts)?;
            rows.push(StudyRow {
                degree,
                level,
                ndof: sub.dofs.num_free(),
                l2_diff: d,
                rel_diff: if ref_sys_norm > 0.0 { d / ref_sys_norm } else { d },
            });
        }
    }
    Ok(rows)
}

/// Pairs `(level r, degree-2 error at r, degree-1 error at r + 2)` of a study table.
pub fn efficiency_pairs(rows: &[StudyRow]) -> Vec<(usize, f64, f64)> {
    let find = |d: usize, l: usize| rows.iter().find(|r| r.degree == d && r.level == l).map(|r| r.l2_diff);
    rows.iter()
        .filter(|r| r.degree == 2)
        .filter_map(|r| find(1, r.level + 2).map(|e1| (r.level, r.l2_diff, e1)))
        .collect()
}
