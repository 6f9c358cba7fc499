//! Plain-text machine files.
//!
//! ```text
//! # comment
//! pole_count 6
//! rotor_angle 0
//! axial_length 0.1
//! images 6
//! material <region> nu <ν> hpm <Hx> <Hy> jsrc <J>
//! material <region> mu_r <μr> [hpm <Hx> <Hy>] [jsrc <J>]
//! coil <region> <phase> <turns> <polarity>
//! patch <rotor|stator> <region>
//! degree <p_u> <p_v>
//! knots_u <t0> <t1> ...
//! knots_v <t0> <t1> ...
//! size <n_u> <n_v>
//! tags <u0> <u1> <v0> <v1>
//! cp <x> <y> <w>          (n_u·n_v lines, u fastest)
//! end
//! ```
//!
//! Tags are `gamma_d`, `gamma_l`, `gamma_r`, `gamma_ag`, `interface` or `-` (untagged).
//! Numbers are written with 17 significant digits so files round-trip exactly.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use iga_core::geometry::{ControlNet, EdgeTag, Material, MultiPatchModel, Patch, Point2, Side, SubdomainKind};
use iga_core::machine::Machine;
use iga_core::postproc::{Coil, Winding};
use iga_core::splines::KnotVector;

use crate::error::{CliError, Result};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialises a machine.
pub fn write_machine(m: &Machine) -> String {
    let model = &m.model;
    let mut s = String::from("# iga-machine model\n");
    let _ = writeln!(s, "pole_count {}", model.pole_count);
    let _ = writeln!(s, "rotor_angle {}", num(model.rotor_angle));
    let _ = writeln!(s, "axial_length {}", num(m.winding.axial_length));
    let _ = writeln!(s, "images {}", num(m.winding.images));
    for (name, mat) in &model.materials {
        let _ = writeln!(
            s,
            "material {name} nu {} hpm {} {} jsrc {}",
            num(mat.nu),
            num(mat.h_pm[0]),
            num(mat.h_pm[1]),
            num(mat.j_src)
        );
    }
    for c in &m.winding.coils {
        let _ = writeln!(s, "coil {} {} {} {}", c.region, c.phase, num(c.turns), num(c.polarity));
    }
    for (k, (p, kind)) in model.patches.iter().zip(&model.subdomains).enumerate() {
        let _ = writeln!(s, "patch {} {}", kind.name(), p.region);
        let _ = writeln!(s, "degree {} {}", p.kv_u.degree(), p.kv_v.degree());
        for (label, kv) in [("knots_u", &p.kv_u), ("knots_v", &p.kv_v)] {
            let knots: Vec<String> = kv.knots().iter().map(|t| num(*t)).collect();
            let _ = writeln!(s, "{label} {}", knots.join(" "));
        }
        let _ = writeln!(s, "size {} {}", p.net.n_u, p.net.n_v);
        let tags: Vec<&str> = Side::ALL.iter().map(|&side| model.tag(k, side).map_or("-", EdgeTag::name)).collect();
        let _ = writeln!(s, "tags {}", tags.join(" "));
        for (pt, w) in p.net.points.iter().zip(&p.net.weights) {
            let _ = writeln!(s, "cp {} {} {}", num(pt.x), num(pt.y), num(*w));
        }
        s.push_str("end\n");
    }
    s
}

struct Lines<'a> {
    path: &'a str,
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a str, text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, Vec<&'a str>)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
                .filter(|(_, t)| !t.is_empty()),
        );
        Lines { path, inner: it.peekable(), last: text.lines().count() }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Parse { path: self.path.to_string(), line, message: message.into() }
    }

    fn next(&mut self, context: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            Some(l) => Ok(l),
            None => Err(self.err(self.last, format!("unexpected end of file {context}"))),
        }
    }

    fn expect(&mut self, keyword: &str, context: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, toks) = self.next(context)?;
        if toks[0] != keyword {
            return Err(self.err(line, format!("expected '{keyword}' {context}, found '{}'", toks[0])));
        }
        Ok((line, toks))
    }
}

fn parse_f64(lines: &Lines<'_>, line: usize, tok: Option<&&str>, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| lines.err(line, format!("missing {what}")))?;
    let v: f64 = tok.parse().map_err(|_| lines.err(line, format!("{what}: '{tok}' is not a number")))?;
    if !v.is_finite() {
        return Err(lines.err(line, format!("{what}: '{tok}' is not finite")));
    }
    Ok(v)
}

fn parse_usize(lines: &Lines<'_>, line: usize, tok: Option<&&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| lines.err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| lines.err(line, format!("{what}: '{tok}' is not a non-negative integer")))
}

fn exact_arity(lines: &Lines<'_>, line: usize, toks: &[&str], n: usize) -> Result<()> {
    if toks.len() != n {
        return Err(lines.err(line, format!("'{}' takes {} value(s), found {}", toks[0], n - 1, toks.len() - 1)));
    }
    Ok(())
}

fn parse_material(lines: &Lines<'_>, line: usize, toks: &[&str]) -> Result<(String, Material)> {
    let name = toks.get(1).ok_or_else(|| lines.err(line, "material needs a region name"))?;
    let mut mat = Material { nu: f64::NAN, h_pm: [0.0, 0.0], j_src: 0.0 };
    let mut k = 2;
    while k < toks.len() {
        match toks[k] {
            "nu" => {
                mat.nu = parse_f64(lines, line, toks.get(k + 1), "nu")?;
                k += 2;
            }
            "mu_r" => {
                let mu = parse_f64(lines, line, toks.get(k + 1), "mu_r")?;
                mat.nu = iga_core::NU0 / mu;
                k += 2;
            }
            "hpm" => {
                mat.h_pm = [
                    parse_f64(lines, line, toks.get(k + 1), "hpm x")?,
                    parse_f64(lines, line, toks.get(k + 2), "hpm y")?,
                ];
                k += 3;
            }
            "jsrc" => {
                mat.j_src = parse_f64(lines, line, toks.get(k + 1), "jsrc")?;
                k += 2;
            }
            other => return Err(lines.err(line, format!("unknown material key '{other}'"))),
        }
    }
    if !(mat.nu > 0.0) {
        return Err(lines.err(line, format!("material '{name}' needs a positive nu or mu_r")));
    }
    Ok((name.to_string(), mat))
}

fn parse_knots(lines: &Lines<'_>, line: usize, toks: &[&str], degree: usize) -> Result<KnotVector> {
    let knots = toks[1..]
        .iter()
        .map(|t| parse_f64(lines, line, Some(t), "knot"))
        .collect::<Result<Vec<f64>>>()?;
    KnotVector::new(degree, knots).map_err(|e| lines.err(line, e.to_string()))
}

/// Parses a machine file. `path` is only used in error messages.
pub fn parse_machine(path: &str, text: &str) -> Result<Machine> {
    let mut lines = Lines::new(path, text);
    let mut pole_count = None;
    let mut rotor_angle = 0.0;
    let mut axial_length = 1.0;
    let mut images = None;
    let mut materials = BTreeMap::new();
    let mut coils = Vec::new();
    let mut patches = Vec::new();
    let mut subdomains = Vec::new();
    let mut edge_tags = BTreeMap::new();

    while let Some((line, toks)) = lines.inner.next() {
        match toks[0] {
            "pole_count" => {
                exact_arity(&lines, line, &toks, 2)?;
                let n = parse_usize(&lines, line, toks.get(1), "pole_count")?;
                if n < 2 || n % 2 != 0 {
                    return Err(lines.err(line, format!("pole_count must be even and at least 2, got {n}")));
                }
                pole_count = Some(n);
            }
            "rotor_angle" => {
                exact_arity(&lines, line, &toks, 2)?;
                rotor_angle = parse_f64(&lines, line, toks.get(1), "rotor_angle")?;
            }
            "axial_length" => {
                exact_arity(&lines, line, &toks, 2)?;
                axial_length = parse_f64(&lines, line, toks.get(1), "axial_length")?;
            }
            "images" => {
                exact_arity(&lines, line, &toks, 2)?;
                images = Some(parse_f64(&lines, line, toks.get(1), "images")?);
            }
            "material" => {
                let (name, mat) = parse_material(&lines, line, &toks)?;
                if materials.insert(name.clone(), mat).is_some() {
                    return Err(lines.err(line, format!("material '{name}' defined twice")));
                }
            }
            "coil" => {
                exact_arity(&lines, line, &toks, 5)?;
                let polarity = parse_f64(&lines, line, toks.get(4), "polarity")?;
                if polarity.abs() != 1.0 {
                    return Err(lines.err(line, "coil polarity must be +1 or -1"));
                }
                coils.push(Coil {
                    region: toks[1].to_string(),
                    phase: toks[2].to_string(),
                    turns: parse_f64(&lines, line, toks.get(3), "turns")?,
                    polarity,
                });
            }
            "patch" => {
                exact_arity(&lines, line, &toks, 3)?;
                let kind = SubdomainKind::parse(toks[1])
                    .ok_or_else(|| lines.err(line, format!("subdomain must be rotor or stator, got '{}'", toks[1])))?;
                let region = toks[2].to_string();
                let ctx = format!("in patch started at line {line}");
                let (l, t) = lines.expect("degree", &ctx)?;
                exact_arity(&lines, l, &t, 3)?;
                let (pu, pv) = (parse_usize(&lines, l, t.get(1), "degree")?, parse_usize(&lines, l, t.get(2), "degree")?);
                let (l, t) = lines.expect("knots_u", &ctx)?;
                let kv_u = parse_knots(&lines, l, &t, pu)?;
                let (l, t) = lines.expect("knots_v", &ctx)?;
                let kv_v = parse_knots(&lines, l, &t, pv)?;
                let (size_line, t) = lines.expect("size", &ctx)?;
                exact_arity(&lines, size_line, &t, 3)?;
                let n_u = parse_usize(&lines, size_line, t.get(1), "n_u")?;
                let n_v = parse_usize(&lines, size_line, t.get(2), "n_v")?;
                let (l, t) = lines.expect("tags", &ctx)?;
                exact_arity(&lines, l, &t, 5)?;
                let k = patches.len();
                for (side, tok) in Side::ALL.iter().zip(&t[1..]) {
                    if *tok == "-" {
                        continue;
                    }
                    let tag = EdgeTag::parse(tok).ok_or_else(|| lines.err(l, format!("unknown edge tag '{tok}'")))?;
                    edge_tags.insert((k, *side), tag);
                }
                let mut points = Vec::with_capacity(n_u * n_v);
                let mut weights = Vec::with_capacity(n_u * n_v);
                for _ in 0..n_u * n_v {
                    let (l, t) = lines.expect("cp", &ctx)?;
                    exact_arity(&lines, l, &t, 4)?;
                    points.push(Point2::new(parse_f64(&lines, l, t.get(1), "x")?, parse_f64(&lines, l, t.get(2), "y")?));
                    weights.push(parse_f64(&lines, l, t.get(3), "weight")?);
                }
                let (l, t) = lines.expect("end", &ctx)?;
                exact_arity(&lines, l, &t, 1)?;
                let patch = Patch::new(kv_u, kv_v, ControlNet { n_u, n_v, points, weights }, region)
                    .map_err(|e| lines.err(size_line, e.to_string()))?;
                patches.push(patch);
                subdomains.push(kind);
            }
            other => return Err(lines.err(line, format!("unknown keyword '{other}'"))),
        }
    }
    let pole_count = pole_count.ok_or_else(|| lines.err(lines.last, "missing pole_count"))?;
    if patches.is_empty() {
        return Err(lines.err(lines.last, "no patches"));
    }
    for c in &coils {
        if !materials.contains_key(&c.region) {
            return Err(CliError::Invalid(format!("coil region '{}' has no material", c.region)));
        }
    }
    let model = MultiPatchModel { patches, subdomains, materials, edge_tags, pole_count, rotor_angle };
    let winding = Winding { coils, axial_length, images: images.unwrap_or(pole_count as f64) };
    Ok(Machine { model, winding })
}

pub fn read_machine(path: &Path) -> Result<Machine> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_machine(&path.display().to_string(), &text)
}

pub fn save_machine(path: &Path, m: &Machine) -> Result<()> {
    std::fs::write(path, write_machine(m)).map_err(|e| CliError::io(path, e))
}
