//! Dirichlet-to-Neumann iteration between rotor and stator.
//!
//! Each sweep solves the rotor with `A|Γag = λ^k`, recovers the rotor flux on `Γag`
//! from the rotor residual, imposes it weakly on the stator, and relaxes
//! `λ^{k+1} = α P(A_st|Γag) + (1 - α) λ^k`, where `P` is the L2 projection onto the
//! rotor trace space.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::assembly::{apply_dirichlet_trace, AssembledSystem, AssemblyOptions, Subdomain, SubdomainSelector};
use crate::dofmap::{DofStatus, InterfaceCondition};
use crate::geometry::MultiPatchModel;
use crate::linalg::DEFAULT_RTOL;
use crate::trace::{TraceFunction, TraceSpace, TraceTransfer};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConfig {
    pub degree: usize,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub inner_rtol: f64,
    pub inner_max_iter: usize,
    pub assembly: AssemblyOptions,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            degree: 2,
            alpha: 0.5,
            tol: 1e-7,
            max_iter: 200,
            inner_rtol: DEFAULT_RTOL,
            inner_max_iter: 50_000,
            assembly: AssemblyOptions::default(),
        }
    }
}

impl CouplingConfig {
    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Validation(alloc::format!("α = {} outside [0, 1]", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation(alloc::format!("tolerance {} must be positive", self.tol)));
        }
        if self.degree == 0 {
            return Err(Error::Validation("degree must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingState {
    /// Current interface datum, in the rotor trace space.
    pub lambda: TraceFunction,
    pub alpha: f64,
    /// Completed sweeps.
    pub k: usize,
    /// `(ε_rt, ε_st)` per sweep.
    pub history: Vec<(f64, f64)>,
    pub tol: f64,
    pub max_iter: usize,
}

impl CouplingState {
    /// Text table with columns `k eps_rt eps_st`.
    pub fn history_table(&self) -> String {
        let mut s = String::from("k eps_rt eps_st\n");
        for (k, (a, b)) in self.history.iter().enumerate() {
            let _ = writeln!(s, "{} {:.17e} {:.17e}", k + 1, a, b);
        }
        s
    }
}

/// `α·stator + (1 - α)·λ`, coefficient-wise.
pub fn relax_update(lambda: &TraceFunction, stator_trace: &TraceFunction, alpha: f64) -> Result<TraceFunction> {
    if lambda.space != stator_trace.space && *lambda.space != *stator_trace.space {
        return Err(Error::Validation("relaxation needs both traces in the same space".into()));
    }
    let coeffs = lambda.coeffs.iter().zip(&stator_trace.coeffs).map(|(l, s)| alpha * s + (1.0 - alpha) * l).collect();
    TraceFunction::new(lambda.space.clone(), coeffs)
}

/// Flux `ν ∂A/∂n` on `Γag` of a Dirichlet-side solution, as a function in the trace
/// space of that side (`transfer.a`). The normal points out of that subdomain.
///
/// The flux is the Riesz representative of the residual on the interface functions.
pub fn interface_flux(system: &AssembledSystem, coeffs: &[f64], transfer: &TraceTransfer) -> Result<TraceFunction> {
    let r = system.residual_full(coeffs)?;
    let local: Vec<f64> = transfer.a.ids.iter().map(|&g| r[g]).collect();
    TraceFunction::new(transfer.a.clone(), transfer.solve_a(&local))
}

/// `g_i = ∫ q N_i^b ds` on the `b` (Neumann side) trace basis, for a flux `q = ν ∇A·n_ag`
/// living in the `a` space. `normal_sign = -1` turns it into the flux along the
/// other orientation.
pub fn neumann_load(flux: &TraceFunction, transfer: &TraceTransfer, normal_sign: f64) -> Result<Vec<f64>> {
    if flux.space != transfer.a && *flux.space != *transfer.a {
        return Err(Error::Validation("flux is not in the Dirichlet-side trace space".into()));
    }
    Ok(transfer.load_on_b(&flux.coeffs).into_iter().map(|g| normal_sign * g).collect())
}

/// A solved subproblem.
#[derive(Debug, Clone)]
pub struct FieldSolution<'m> {
    pub sub: Subdomain<'m>,
    pub system: AssembledSystem,
    /// Full coefficient vector (free and prescribed).
    pub coeffs: Vec<f64>,
}

/// Reusable rotor/stator systems of one rotor position.
#[derive(Debug, Clone)]
pub struct DtnSolver<'m> {
    pub config: CouplingConfig,
    pub rotor: FieldSolution<'m>,
    pub stator: FieldSolution<'m>,
    /// `a` = rotor trace space, `b` = stator trace space.
    pub transfer: TraceTransfer,
}

#[derive(Debug, Clone)]
pub struct DtnResult<'m> {
    pub solver: DtnSolver<'m>,
    pub state: CouplingState,
    pub converged: bool,
}

impl<'m> DtnResult<'m> {
    pub fn rotor(&self) -> &FieldSolution<'m> {
        &self.solver.rotor
    }

    pub fn stator(&self) -> &FieldSolution<'m> {
        &self.solver.stator
    }
}

fn relative_change(system: &AssembledSystem, new: &[f64], old: &[f64]) -> Result<f64> {
    let diff: Vec<f64> = new.iter().zip(old).map(|(a, b)| a - b).collect();
    let d = system.l2_norm(&diff)?;
    let n = system.l2_norm(new)?;
    Ok(if d == 0.0 { 0.0 } else { d / n })
}

impl<'m> DtnSolver<'m> {
    pub fn new(model: &'m MultiPatchModel, config: CouplingConfig) -> Result<Self> {
        config.check()?;
        let rt = Subdomain::new(model, SubdomainSelector::Rotor, config.degree, InterfaceCondition::Dirichlet)?;
        let st = Subdomain::new(model, SubdomainSelector::Stator, config.degree, InterfaceCondition::Neumann)?;
        let sys_rt = AssembledSystem::new(&rt, &config.assembly, None)?;
        let sys_st = AssembledSystem::new(&st, &config.assembly, None)?;
        let space_rt = Arc::new(TraceSpace::of(&rt)?);
        let space_st = Arc::new(TraceSpace::of(&st)?);
        let transfer = TraceTransfer::new(space_rt, space_st, 0.0)?;
        let n_rt = rt.dofs.num_global();
        let n_st = st.dofs.num_global();
        Ok(DtnSolver {
            config,
            rotor: FieldSolution { sub: rt, system: sys_rt, coeffs: alloc::vec![0.0; n_rt] },
            stator: FieldSolution { sub: st, system: sys_st, coeffs: alloc::vec![0.0; n_st] },
            transfer,
        })
    }

    pub fn rotor_space(&self) -> &Arc<TraceSpace> {
        &self.transfer.a
    }

    pub fn stator_space(&self) -> &Arc<TraceSpace> {
        &self.transfer.b
    }

    /// One sweep from `lambda`: updates both fields and returns the stator trace
    /// projected onto the rotor trace space.
    pub fn sweep(&mut self, lambda: &TraceFunction) -> Result<TraceFunction> {
        let cfg = self.config;
        let rt = &mut self.rotor;
        apply_dirichlet_trace(&mut rt.sub.dofs, &mut rt.system, &self.transfer.a.ids, &lambda.coeffs)?;
        let (u_rt, sol) = rt.system.solve(&rt.sub.dofs, None, Some(&rt.coeffs), cfg.inner_rtol, cfg.inner_max_iter)?;
        if !sol.converged {
            return Err(Error::Precondition(alloc::format!(
                "rotor solve stopped at residual {:e} after {} iterations",
                sol.residual,
                sol.iterations
            )));
        }
        rt.coeffs = u_rt;

        let flux = interface_flux(&rt.system, &rt.coeffs, &self.transfer)?;
        // the stator's outward normal is -n_ag
        let load = neumann_load(&flux, &self.transfer, -1.0)?;
        let st = &mut self.stator;
        let mut extra = alloc::vec![0.0; st.sub.dofs.num_free()];
        for (&g, l) in self.transfer.b.ids.iter().zip(&load) {
            if let DofStatus::Free(f) = st.sub.dofs.status(g) {
                extra[f] += l;
            }
        }
        let (u_st, sol) =
            st.system.solve(&st.sub.dofs, Some(&extra), Some(&st.coeffs), cfg.inner_rtol, cfg.inner_max_iter)?;
        if !sol.converged {
            return Err(Error::Precondition(alloc::format!(
                "stator solve stopped at residual {:e} after {} iterations",
                sol.residual,
                sol.iterations
            )));
        }
        st.coeffs = u_st;
        let trace = self.stator_trace()?;
        self.transfer.to_a(&trace)
    }

    /// Current stator field restricted to `Γag`.
    pub fn stator_trace(&self) -> Result<TraceFunction> {
        let c = self.transfer.b.ids.iter().map(|&g| self.stator.coeffs[g]).collect();
        TraceFunction::new(self.transfer.b.clone(), c)
    }

    /// Current rotor field restricted to `Γag`.
    pub fn rotor_trace(&self) -> Result<TraceFunction> {
        let c = self.transfer.a.ids.iter().map(|&g| self.rotor.coeffs[g]).collect();
        TraceFunction::new(self.transfer.a.clone(), c)
    }

    /// Relative L2 changes `(ε_rt, ε_st)` against previous coefficient vectors.
    pub fn changes(&self, prev_rt: &[f64], prev_st: &[f64]) -> Result<(f64, f64)> {
        Ok((
            relative_change(&self.rotor.system, &self.rotor.coeffs, prev_rt)?,
            relative_change(&self.stator.system, &self.stator.coeffs, prev_st)?,
        ))
    }

    /// Runs sweeps from `λ^0 = 0` until both changes drop below `tol`.
    pub fn iterate(mut self) -> Result<DtnResult<'m>> {
        let cfg = self.config;
        let mut state = CouplingState {
            lambda: TraceFunction::zero(self.transfer.a.clone()),
            alpha: cfg.alpha,
            k: 0,
            history: Vec::new(),
            tol: cfg.tol,
            max_iter: cfg.max_iter,
        };
        let mut converged = false;
        while state.k < cfg.max_iter {
            let prev_rt = self.rotor.coeffs.clone();
            let prev_st = self.stator.coeffs.clone();
            let projected = self.sweep(&state.lambda)?;
            state.lambda = relax_update(&state.lambda, &projected, cfg.alpha)?;
            let eps = self.changes(&prev_rt, &prev_st)?;
            state.history.push(eps);
            state.k += 1;
            if eps.0 < cfg.tol && eps.1 < cfg.tol {
                converged = true;
                break;
            }
        }
        Ok(DtnResult { solver: self, state, converged })
    }
}

/// Runs the rotor/stator iteration on `model`.
pub fn dtn_iterate<'m>(model: &'m MultiPatchModel, config: &CouplingConfig) -> Result<DtnResult<'m>> {
    DtnSolver::new(model, *config)?.iterate()
}
