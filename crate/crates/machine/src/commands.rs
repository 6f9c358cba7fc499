//! The four commands. Each prints its report to stdout and ends with one
//! `key=value` summary line.

use std::fmt::Write as _;
use std::path::Path;

use iga_core::coupling::dtn_iterate;
use iga_core::geometry::{validate_model, MultiPatchModel};
use iga_core::machine::Machine;
use iga_core::postproc::{
    extend_anti_periodic, linkage_at_position, position_angle, spectrum_from_linkage, thd, EmfConfig, EmfSpectrum,
    Winding,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::export;
use crate::format::{read_machine, save_machine};
use crate::study::{efficiency_pairs, self_convergence};

/// `key=value` pairs joined by spaces.
pub fn summary_line(pairs: &[(&str, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

/// Text printed by a command; the last line is the summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub body: String,
    pub summary: String,
}

impl Report {
    pub fn print(&self) {
        print!("{}", self.body);
        println!("{}", self.summary);
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn load(cfg: &RunConfig) -> Result<Machine> {
    let mut m = read_machine(&cfg.machine)?;
    let v = validate_model(&m.model);
    if !v.is_empty() {
        return Err(CliError::Invalid(format!("{} violation(s), run validate for the list", v.len())));
    }
    m.model = m.model.refined(cfg.refine)?;
    Ok(m)
}

pub fn validate(path: &Path) -> Result<Report> {
    let m = read_machine(path)?;
    let violations = validate_model(&m.model);
    let mut body = String::new();
    for v in &violations {
        let _ = writeln!(body, "{v}");
    }
    let summary = summary_line(&[
        ("command", "validate".into()),
        ("patches", m.model.patches.len().to_string()),
        ("violations", violations.len().to_string()),
    ]);
    if violations.is_empty() {
        Ok(Report { body, summary })
    } else {
        print!("{body}");
        Err(CliError::Invalid(format!("{} violation(s) in {}", violations.len(), path.display())))
    }
}

pub fn solve(cfg: &RunConfig) -> Result<Report> {
    let m = load(cfg)?;
    create_dir(&cfg.out_dir)?;
    let res = dtn_iterate(&m.model, &cfg.coupling())?;
    export::write_history(&cfg.out_dir.join("history.csv"), &res.state.history)?;
    let (eps_rt, eps_st) = res.state.history.last().copied().unwrap_or((f64::NAN, f64::NAN));
    let n_rt = res.rotor().sub.dofs.num_free();
    let n_st = res.stator().sub.dofs.num_free();
    let summary = summary_line(&[
        ("command", "solve".into()),
        ("converged", res.converged.to_string()),
        ("iterations", res.state.k.to_string()),
        ("ndof_rotor", n_rt.to_string()),
        ("ndof_stator", n_st.to_string()),
        ("ndof", (n_rt + n_st).to_string()),
        ("eps_rt", format!("{eps_rt:.3e}")),
        ("eps_st", format!("{eps_st:.3e}")),
    ]);
    if !res.converged {
        Report { body: String::new(), summary }.print();
        return Err(CliError::NotConverged(format!("{} iterations without reaching tol {:e}", res.state.k, cfg.tol)));
    }
    let grid = cfg.out_dir.join("grid");
    create_dir(&grid)?;
    export::write_grid(&grid, &res.rotor().sub, &res.rotor().coeffs, cfg.grid_samples)?;
    export::write_grid(&grid, &res.stator().sub, &res.stator().coeffs, cfg.grid_samples)?;
    let mut body = String::new();
    let _ = writeln!(body, "rotor {n_rt} dof, stator {n_st} dof");
    let _ = writeln!(body, "converged after {} iterations", res.state.k);
    Ok(Report { body, summary })
}

/// Linkage at the first half period of positions, spread over `threads` workers.
pub fn half_period_linkage(model: &MultiPatchModel, winding: &Winding, cfg: &EmfConfig, threads: usize) -> Result<Vec<f64>> {
    let n = cfg.positions / 2;
    if threads <= 1 {
        return (0..n).map(|i| Ok(linkage_at_position(model, winding, cfg, i)?)).collect();
    }
    let mut out = vec![0.0; n];
    std::thread::scope(|s| -> Result<()> {
        let handles: Vec<_> = (0..threads.min(n))
            .map(|t| {
                s.spawn(move || -> iga_core::Result<Vec<(usize, f64)>> {
                    (t..n).step_by(threads).map(|i| Ok((i, linkage_at_position(model, winding, cfg, i)?))).collect()
                })
            })
            .collect();
        let mut first_err: Option<iga_core::Error> = None;
        for h in handles {
            match h.join().expect("worker panicked") {
                Ok(vals) => vals.into_iter().for_each(|(i, v)| out[i] = v),
                Err(e) => {
                    // report the lowest failing position
                    let pos = |e: &iga_core::Error| match e {
                        iga_core::Error::PositionNotConverged { position, .. } => *position,
                        _ => 0,
                    };
                    if first_err.as_ref().is_none_or(|f| pos(&e) < pos(f)) {
                        first_err = Some(e);
                    }
                }
            }
        }
        first_err.map_or(Ok(()), |e| Err(e.into()))
    })?;
    Ok(out)
}

/// Spectrum and linkage samples of the loading method.
pub fn emf_run(m: &Machine, cfg: &EmfConfig, threads: usize) -> Result<(EmfSpectrum, Vec<f64>)> {
    cfg.check()?;
    let half = half_period_linkage(&m.model, &m.winding, cfg, threads)?;
    let psi = extend_anti_periodic(&half);
    let s = spectrum_from_linkage(&psi, cfg.omega_el(m.model.pole_count), cfg.harmonics, m.winding.axial_length)?;
    Ok((s, psi))
}

pub fn emf(cfg: &RunConfig) -> Result<Report> {
    let m = load(cfg)?;
    create_dir(&cfg.out_dir)?;
    let ecfg = cfg.emf();
    let (spectrum, psi) = emf_run(&m, &ecfg, cfg.threads)?;
    export::write_spectrum(&cfg.out_dir.join("spectrum.csv"), &spectrum)?;
    let angles: Vec<f64> = (0..psi.len()).map(|i| position_angle(&m.model, i, ecfg.positions)).collect();
    export::write_linkage(&cfg.out_dir.join("linkage.csv"), &angles, &psi)?;
    let e1 = spectrum.fundamental();
    let thd_value = thd(&spectrum).ok();
    let mut body = String::new();
    let _ = writeln!(body, "E1 = {e1:.6e} V at {:.3} Hz", spectrum.frequency);
    match thd_value {
        Some(t) => {
            let _ = writeln!(body, "THD = {:.6e} %", 100.0 * t);
        }
        None => {
            let _ = writeln!(body, "THD undefined (E1 = 0)");
        }
    }
    let summary = summary_line(&[
        ("command", "emf".into()),
        ("positions", ecfg.positions.to_string()),
        ("harmonics", spectrum.harmonics().to_string()),
        ("e1_v", format!("{e1:.6e}")),
        ("thd_pct", thd_value.map_or("nan".into(), |t| format!("{:.6e}", 100.0 * t))),
    ]);
    Ok(Report { body, summary })
}

pub fn study(cfg: &RunConfig) -> Result<Report> {
    if cfg.levels < 1 {
        return Err(CliError::Invalid("a study needs at least one refinement level".into()));
    }
    let m = read_machine(&cfg.machine)?;
    create_dir(&cfg.out_dir)?;
    let opts = iga_core::assembly::AssemblyOptions { quad_points: cfg.quad_points };
    let rows = self_convergence(&m.model, &cfg.degrees, cfg.levels, &opts)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.degree.to_string(),
                r.level.to_string(),
                r.ndof.to_string(),
                format!("{:.16e}", r.l2_diff),
                format!("{:.16e}", r.rel_diff),
            ]
        })
        .collect();
    export::write_table(&cfg.out_dir.join("study.csv"), &["degree", "level", "ndof", "l2_diff", "rel_diff"], &table)?;
    let mut body = String::from("degree level ndof rel_diff\n");
    for r in &rows {
        let _ = writeln!(body, "{} {} {} {:.3e}", r.degree, r.level, r.ndof, r.rel_diff);
    }
    let pairs = efficiency_pairs(&rows);
    let holds = pairs.iter().all(|(_, e2, e1)| e2 < e1);
    let summary = summary_line(&[
        ("command", "study".into()),
        ("rows", rows.len().to_string()),
        ("max_level", cfg.levels.to_string()),
        ("p2_beats_p1_plus2", if pairs.is_empty() { "n/a".into() } else { holds.to_string() }),
    ]);
    Ok(Report { body, summary })
}

/// Writes the bundled machine to `path`.
pub fn bundled(path: &Path) -> Result<Report> {
    let m = Machine::spm6()?;
    save_machine(path, &m)?;
    Ok(Report {
        body: String::new(),
        summary: summary_line(&[("command", "bundled".into()), ("patches", m.model.patches.len().to_string())]),
    })
}
