//! The bundled example machine: one pole of a six-pole surface-magnet PMSM.
//!
//! Dimensions (metres, degrees of the modelled pole `[0°, 60°]`):
//!
//! | layer          | radii           | angular sectors                           |
//! |----------------|-----------------|-------------------------------------------|
//! | shaft          | 0.010 – 0.018   | 0–10, 10–50, 50–60                        |
//! | rotor iron     | 0.018 – 0.040   | same                                      |
//! | magnet / air   | 0.040 – 0.043   | air 0–10, magnet 10–50, air 50–60         |
//! | rotor air gap  | 0.043 – 0.0435  | same                                      |
//! | stator air gap | 0.0435 – 0.045  | 13 sectors (below)                        |
//! | slots / teeth  | 0.045 – 0.065   | half tooth 2.5, then slot 5 / tooth 5 …   |
//! | stator yoke    | 0.065 – 0.080   | 13 sectors                                |
//!
//! The shaft is hollow with `A = 0` on its inner circle, and the stator outer circle
//! is also `A = 0`. Iron has `μr = 1000`. The magnet has `Br = 1.2 T`, `μr = 1.05`
//! and parallel magnetisation along the pole axis at 30°. With the load written as
//! `∫ H_pm · (-∂w/∂y, ∂w/∂x)`, the region's `H_pm` is `-Br/(μ0 μr)` along that axis.
//!
//! Six slots per pole (two per phase) hold 20-turn coil sides:
//! slots 1–2 are `A+`, 3–4 `C-`, 5–6 `B+`. Axial length is 0.1 m.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::{make_annular_patch, EdgeTag, Material, MultiPatchModel, Side, SubdomainKind};
use crate::math;
use crate::postproc::{Coil, Winding};
use crate::{Result, NU0};

pub const POLE_COUNT: usize = 6;
pub const AXIAL_LENGTH: f64 = 0.1;
pub const AIR_GAP_RADIUS: f64 = 0.0435;
pub const REMANENCE: f64 = 1.2;
pub const MAGNET_MU_R: f64 = 1.05;
pub const IRON_MU_R: f64 = 1000.0;
pub const TURNS: f64 = 20.0;

/// A model together with its winding table.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    pub model: MultiPatchModel,
    pub winding: Winding,
}

struct Layer {
    r_in: f64,
    r_out: f64,
    radial_elements: usize,
}

// One element per 2.5° of arc.
const UNIT_DEG: f64 = 2.5;

impl Machine {
    /// The coarse six-pole machine; refine with [`MultiPatchModel::refined`].
    pub fn spm6() -> Result<Machine> {
        let deg = core::f64::consts::PI / 180.0;
        let mut patches = Vec::new();
        let mut subdomains = Vec::new();
        let mut edge_tags = BTreeMap::new();

        let mut add_block = |kind: SubdomainKind,
                             layers: &[Layer],
                             sectors: &[(f64, f64)],
                             region: &dyn Fn(usize, usize) -> String,
                             inner: EdgeTag,
                             outer: EdgeTag|
         -> Result<()> {
            for (l, layer) in layers.iter().enumerate() {
                for (s, &(a, b)) in sectors.iter().enumerate() {
                    let mut p = make_annular_patch(layer.r_in, layer.r_out, a * deg, b * deg, region(l, s))?;
                    let n_v = libm::round((b - a) / UNIT_DEG) as usize;
                    p.subdivide(layer.radial_elements, n_v.max(1))?;
                    let k = patches.len();
                    patches.push(p);
                    subdomains.push(kind);
                    let u0 = if l == 0 { inner } else { EdgeTag::Interface };
                    let u1 = if l + 1 == layers.len() { outer } else { EdgeTag::Interface };
                    let v0 = if s == 0 { EdgeTag::Left } else { EdgeTag::Interface };
                    let v1 = if s + 1 == sectors.len() { EdgeTag::Right } else { EdgeTag::Interface };
                    edge_tags.insert((k, Side::U0), u0);
                    edge_tags.insert((k, Side::U1), u1);
                    edge_tags.insert((k, Side::V0), v0);
                    edge_tags.insert((k, Side::V1), v1);
                }
            }
            Ok(())
        };

        let rotor_layers = [
            Layer { r_in: 0.010, r_out: 0.018, radial_elements: 1 },
            Layer { r_in: 0.018, r_out: 0.040, radial_elements: 5 },
            Layer { r_in: 0.040, r_out: 0.043, radial_elements: 2 },
            Layer { r_in: 0.043, r_out: AIR_GAP_RADIUS, radial_elements: 1 },
        ];
        let rotor_sectors = [(0.0, 10.0), (10.0, 50.0), (50.0, 60.0)];
        let rotor_region = |l: usize, s: usize| -> String {
            String::from(match (l, s) {
                (0, _) => "shaft",
                (1, _) => "rotor_iron",
                (2, 1) => "magnet",
                _ => "rotor_air",
            })
        };
        add_block(SubdomainKind::Rotor, &rotor_layers, &rotor_sectors, &rotor_region, EdgeTag::Dirichlet, EdgeTag::AirGap)?;

        let stator_layers = [
            Layer { r_in: AIR_GAP_RADIUS, r_out: 0.045, radial_elements: 2 },
            Layer { r_in: 0.045, r_out: 0.065, radial_elements: 8 },
            Layer { r_in: 0.065, r_out: 0.080, radial_elements: 6 },
        ];
        let mut stator_sectors = alloc::vec![(0.0, 2.5)];
        for k in 0..11 {
            let a = 2.5 + 5.0 * k as f64;
            stator_sectors.push((a, a + 5.0));
        }
        stator_sectors.push((57.5, 60.0));
        let stator_region = |l: usize, s: usize| -> String {
            match (l, s) {
                (0, _) => String::from("stator_air"),
                (1, s) if s % 2 == 1 => format!("slot{}", s / 2 + 1),
                _ => String::from("stator_iron"),
            }
        };
        add_block(SubdomainKind::Stator, &stator_layers, &stator_sectors, &stator_region, EdgeTag::AirGap, EdgeTag::Dirichlet)?;

        let mut materials = BTreeMap::new();
        materials.insert(String::from("shaft"), Material::air());
        materials.insert(String::from("rotor_iron"), Material::with_relative_permeability(IRON_MU_R));
        materials.insert(String::from("rotor_air"), Material::air());
        let h = REMANENCE * NU0 / MAGNET_MU_R;
        let axis = 30.0 * deg;
        materials.insert(
            String::from("magnet"),
            Material { nu: NU0 / MAGNET_MU_R, h_pm: [-h * math::cos(axis), -h * math::sin(axis)], j_src: 0.0 },
        );
        materials.insert(String::from("stator_air"), Material::air());
        materials.insert(String::from("stator_iron"), Material::with_relative_permeability(IRON_MU_R));
        let phases = [("A", 1.0), ("A", 1.0), ("C", -1.0), ("C", -1.0), ("B", 1.0), ("B", 1.0)];
        let mut coils = Vec::new();
        for (k, (phase, polarity)) in phases.iter().enumerate() {
            let region = format!("slot{}", k + 1);
            materials.insert(region.clone(), Material::air());
            coils.push(Coil { region, phase: String::from(*phase), turns: TURNS, polarity: *polarity });
        }

        let model = MultiPatchModel { patches, subdomains, materials, edge_tags, pole_count: POLE_COUNT, rotor_angle: 0.0 };
        let winding = Winding { coils, axial_length: AXIAL_LENGTH, images: POLE_COUNT as f64 };
        Ok(Machine { model, winding })
    }

    /// Removes all magnetisation and source currents.
    pub fn without_sources(&self) -> Machine {
        let mut m = self.clone();
        for mat in m.model.materials.values_mut() {
            mat.h_pm = [0.0, 0.0];
            mat.j_src = 0.0;
        }
        m
    }
}
