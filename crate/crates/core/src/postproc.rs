//! Field sampling, flux linkage, EMF spectrum and total harmonic distortion.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::assembly::{AssemblyOptions, Subdomain};
use crate::coupling::{dtn_iterate, CouplingConfig};
use crate::geometry::{rotate_subdomain, MultiPatchModel, Point2, SubdomainKind};
use crate::math;
use crate::{Error, Result};

/// `A_z` and `B = (∂A_z/∂y, -∂A_z/∂x)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: Point2,
    pub a: f64,
    pub b: [f64; 2],
}

/// Samples a field at `(member patch, u, v)` points.
pub fn eval_field(sub: &Subdomain<'_>, coeffs: &[f64], points: &[(usize, f64, f64)]) -> Result<Vec<FieldSample>> {
    points
        .iter()
        .map(|&(m, u, v)| {
            let f = sub.eval(coeffs, m, u, v)?;
            Ok(FieldSample { point: f.point, a: f.a, b: [f.grad[1], -f.grad[0]] })
        })
        .collect()
}

/// One coil side: a region carrying `turns` conductors of one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Coil {
    pub region: String,
    pub phase: String,
    pub turns: f64,
    /// `+1` or `-1`.
    pub polarity: f64,
}

/// Coils of the modelled pole plus the scalars turning a 2D linkage into webers.
#[derive(Debug, Clone, PartialEq)]
pub struct Winding {
    pub coils: Vec<Coil>,
    /// Machine depth in metres.
    pub axial_length: f64,
    /// Number of pole-pitch images summed into each phase (usually the pole count).
    pub images: f64,
}

impl Winding {
    pub fn phases(&self) -> Vec<String> {
        let mut p: Vec<String> = self.coils.iter().map(|c| c.phase.clone()).collect();
        p.sort();
        p.dedup();
        p
    }
}

/// Phase linkages `Ψ = images · L · Σ N·polarity·mean(A_z over coil)`.
pub fn flux_linkage(
    sub: &Subdomain<'_>,
    coeffs: &[f64],
    winding: &Winding,
    options: &AssemblyOptions,
) -> Result<BTreeMap<String, f64>> {
    let elements = sub.elements(options)?;
    let values = sub.field_at_points(coeffs, &elements);
    let mut integral: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for coil in &winding.coils {
        let known = (0..sub.spaces.len()).any(|m| sub.patch(m).region == coil.region);
        if !known {
            return Err(Error::Validation(format!("coil region '{}' is not part of the model", coil.region)));
        }
        integral.insert(coil.region.as_str(), (0.0, 0.0));
    }
    for (e, vals) in elements.iter().zip(&values) {
        let region = sub.patch(e.member).region.as_str();
        if let Some((area, int)) = integral.get_mut(region) {
            for (q, a) in e.points.iter().zip(vals) {
                *area += q.weight;
                *int += q.weight * a;
            }
        }
    }
    let mut out = BTreeMap::new();
    for coil in &winding.coils {
        let (area, int) = integral[coil.region.as_str()];
        let psi = winding.images * winding.axial_length * coil.turns * coil.polarity * int / area;
        *out.entry(coil.phase.clone()).or_insert(0.0) += psi;
    }
    Ok(out)
}

/// EMF harmonic magnitudes `|E_h|` for `h = 1..=H`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmfSpectrum {
    /// `magnitudes[h - 1] = |E_h|` in volts.
    pub magnitudes: Vec<f64>,
    /// Electrical frequency in Hz.
    pub frequency: f64,
    pub axial_length: f64,
}

impl EmfSpectrum {
    pub fn fundamental(&self) -> f64 {
        self.magnitudes.first().copied().unwrap_or(0.0)
    }

    pub fn harmonics(&self) -> usize {
        self.magnitudes.len()
    }
}

/// `THD = sqrt(Σ_{h≥2} |E_h|²) / |E_1|`.
pub fn thd(spectrum: &EmfSpectrum) -> Result<f64> {
    let e1 = spectrum.fundamental();
    if !(e1 > 0.0) {
        return Err(Error::UndefinedThd);
    }
    let rest: f64 = spectrum.magnitudes.iter().skip(1).map(|e| e * e).sum();
    Ok(math::sqrt(rest) / e1)
}

/// Discrete Fourier transform `X_h = Σ_n x_n e^{-2πi h n / N}` as `(re, im)`.
pub fn dft(samples: &[f64]) -> Vec<(f64, f64)> {
    let n = samples.len();
    (0..n)
        .map(|h| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (k, x) in samples.iter().enumerate() {
                // reduce h·k mod N to keep the angle small
                let ang = 2.0 * PI * ((h * k) % n) as f64 / n as f64;
                re += x * math::cos(ang);
                im -= x * math::sin(ang);
            }
            (re, im)
        })
        .collect()
}

/// Time-domain and spectral energies `(Σ x², (1/N) Σ |X_h|²)`.
pub fn parseval_energies(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let t: f64 = samples.iter().map(|x| x * x).sum();
    let f: f64 = dft(samples).iter().map(|(r, i)| r * r + i * i).sum::<f64>() / n;
    (t, f)
}

/// Full electrical period from the first half using `Ψ(θ + τ) = -Ψ(θ)`.
pub fn extend_anti_periodic(half: &[f64]) -> Vec<f64> {
    half.iter().copied().chain(half.iter().map(|x| -x)).collect()
}

/// `E_h = h·ω_el·|Ψ̂_h|` with `|Ψ̂_h| = 2|X_h|/N`, from linkage samples spanning one
/// electrical period uniformly.
pub fn spectrum_from_linkage(psi: &[f64], omega_el: f64, harmonics: usize, axial_length: f64) -> Result<EmfSpectrum> {
    let n = psi.len();
    if n < 2 * harmonics + 2 {
        return Err(Error::Validation(format!(
            "{n} positions cannot resolve {harmonics} harmonics (need at least {})",
            2 * harmonics + 2
        )));
    }
    let x = dft(psi);
    let magnitudes = (1..=harmonics)
        .map(|h| {
            let (re, im) = x[h];
            h as f64 * omega_el * 2.0 * math::hypot(re, im) / n as f64
        })
        .collect();
    Ok(EmfSpectrum { magnitudes, frequency: omega_el / (2.0 * PI), axial_length })
}

/// Settings of a loading-method sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EmfConfig {
    pub coupling: CouplingConfig,
    /// Rotor positions per electrical period (even).
    pub positions: usize,
    /// Mechanical speed in rad/s.
    pub speed: f64,
    pub harmonics: usize,
    pub phase: String,
}

impl Default for EmfConfig {
    fn default() -> Self {
        EmfConfig {
            coupling: CouplingConfig::default(),
            positions: 64,
            speed: 1500.0 * 2.0 * PI / 60.0,
            harmonics: 31,
            phase: String::from("A"),
        }
    }
}

impl EmfConfig {
    pub fn check(&self) -> Result<()> {
        self.coupling.check()?;
        if self.positions % 2 != 0 || self.positions < 2 * self.harmonics + 2 {
            return Err(Error::Validation(format!(
                "need an even number of positions ≥ {} for {} harmonics, got {}",
                2 * self.harmonics + 2,
                self.harmonics,
                self.positions
            )));
        }
        Ok(())
    }

    /// `ω_el = (pole_count / 2)·ω_mech`.
    pub fn omega_el(&self, pole_count: usize) -> f64 {
        0.5 * pole_count as f64 * self.speed
    }
}

/// Mechanical rotor angle of position `i` when `positions` span one electrical period.
pub fn position_angle(model: &MultiPatchModel, i: usize, positions: usize) -> f64 {
    2.0 * model.pole_pitch() * i as f64 / positions as f64
}

/// Phase linkage at rotor position `i` (solves one coupled problem).
pub fn linkage_at_position(model: &MultiPatchModel, winding: &Winding, config: &EmfConfig, i: usize) -> Result<f64> {
    let rotated = rotate_subdomain(model, SubdomainKind::Rotor, position_angle(model, i, config.positions));
    let result = dtn_iterate(&rotated, &config.coupling)?;
    if !result.converged {
        return Err(Error::PositionNotConverged { position: i, iterations: result.state.k });
    }
    let st = result.stator();
    let psi = flux_linkage(&st.sub, &st.coeffs, winding, &config.coupling.assembly)?;
    psi.get(&config.phase)
        .copied()
        .ok_or_else(|| Error::Validation(format!("winding has no phase '{}'", config.phase)))
}

/// Loading-method EMF spectrum: solves the first half period and extends it anti-periodically.
pub fn emf_spectrum(model: &MultiPatchModel, winding: &Winding, config: &EmfConfig) -> Result<(EmfSpectrum, Vec<f64>)> {
    config.check()?;
    let half = (0..config.positions / 2)
        .map(|i| linkage_at_position(model, winding, config, i))
        .collect::<Result<Vec<f64>>>()?;
    let psi = extend_anti_periodic(&half);
    let spectrum = spectrum_from_linkage(&psi, config.omega_el(model.pole_count), config.harmonics, winding.axial_length)?;
    Ok((spectrum, psi))
}
