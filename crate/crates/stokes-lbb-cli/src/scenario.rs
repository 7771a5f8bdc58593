//! Named, seeded reproduction scenarios: meshes, solves, tables and checks.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use stokes_lbb::fespace::FECombo;
use stokes_lbb::infsup::{infsup_constant, local_nullspace, quad_counterexample, InfSupOptions, LocalOperator};
use stokes_lbb::macroelement::{build_macroelements, Tolerances};
use stokes_lbb::mesh::{
    gen_extruded_tet, gen_kuhn_cube, gen_perturbed, gen_quad_macro, gen_structured_tri, gen_zigzag, Mesh, Rect,
};
use stokes_lbb::stokes::{cavity_problem, convergence_study, solve_penalized, LidVariant, Solution, SolveOptions, TrigVortex};
use stokes_lbb::unstructure::{apply_algorithm1, unstructured_family, verify_uniform, Axis, UnstructureConfig};

use crate::analyze::analyze;
use crate::config::Thresholds;
use crate::fixtures::jitter;
use crate::io::{save_msh, save_vtk, Field};
use crate::report::{f, Check, Table};

pub const SCENARIOS: &[&str] =
    &["test1", "test2", "test3", "test4", "test5", "test6", "test7", "test8", "test9", "q2q1q1"];

#[derive(Debug, Clone, PartialEq)]
pub struct Overrides {
    pub seed: u64,
    pub levels: Option<usize>,
    pub eps: Option<f64>,
    pub r: Option<f64>,
    pub axis: Option<Axis>,
    pub out_dir: PathBuf,
}

impl Default for Overrides {
    fn default() -> Self {
        Overrides { seed: 42, levels: None, eps: None, r: None, axis: None, out_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub seed: u64,
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Ctx<'a> {
    name: &'static str,
    ov: &'a Overrides,
    th: &'a Thresholds,
    out: Outcome,
}

impl Ctx<'_> {
    fn check(&mut self, key: &str, value: f64) {
        self.out.checks.push(Check::new(self.th, self.name, key, value));
    }

    fn say(&mut self, line: String) {
        self.out.summary.push(line);
    }

    fn path(&self, file: &str) -> PathBuf {
        self.ov.out_dir.join(self.name).join(file)
    }

    fn table(&mut self, file: &str, t: Table) -> Result<()> {
        let p = self.path(file);
        t.meta("scenario", self.name).meta("seed", self.ov.seed).save(&p)?;
        self.out.artifacts.push(p);
        Ok(())
    }

    fn vtk(&mut self, file: &str, mesh: &Mesh, sol: Option<&Solution>) -> Result<()> {
        let p = self.path(file);
        let nv = mesh.num_vertices();
        match sol {
            Some(s) => {
                let fields = [
                    Field::point("u", &s.velocity[0][..nv]),
                    Field::point("v", &s.velocity[1][..nv]),
                    Field::point("pressure", &s.pressure[..nv]),
                ];
                save_vtk(mesh, &fields, &p)?;
            }
            None => save_vtk(mesh, &[], &p)?,
        }
        self.out.artifacts.push(p);
        Ok(())
    }

    fn solve_opts(&self) -> SolveOptions {
        SolveOptions { eps: self.ov.eps.unwrap_or(1e-10), ..SolveOptions::default() }
    }
}

fn combo(s: &str) -> FECombo {
    FECombo::from_str(s).expect("scenario combos are valid")
}

fn beta(mesh: &Mesh, c: &FECombo) -> Result<f64> {
    Ok(infsup_constant(mesh, c, InfSupOptions::default())?.beta)
}

fn cavity(mesh: &Mesh, c: &FECombo, v: LidVariant, opts: SolveOptions) -> Result<Solution> {
    Ok(solve_penalized(&cavity_problem(mesh, c, v)?, opts)?)
}

fn p_range(s: &Solution, nv: usize) -> (f64, f64) {
    let p = &s.pressure[..nv];
    (p.iter().copied().fold(f64::INFINITY, f64::min), p.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

pub fn run_scenario(name: &str, ov: &Overrides, th: &Thresholds) -> Result<Outcome> {
    let key = SCENARIOS
        .iter()
        .copied()
        .find(|s| *s == name)
        .ok_or_else(|| anyhow!("unknown scenario `{name}` (known: {})", SCENARIOS.join(", ")))?;
    let mut cx = Ctx {
        name: key,
        ov,
        th,
        out: Outcome { name: key.into(), seed: ov.seed, summary: vec![], checks: vec![], artifacts: vec![] },
    };
    match key {
        "test1" => test1(&mut cx)?,
        "test2" => cavity_comparison(&mut cx, "p1b-p1:p1", LidVariant::NeumannLid)?,
        "test3" => convergence(&mut cx, "p1b-p1:p1", &["order_l2_u", "order_h1_u", "order_l2_v", "order_h1_v", "order_l2_p"])?,
        "test4" => test4(&mut cx)?,
        "test5" => test5(&mut cx)?,
        "test6" => test6(&mut cx)?,
        "test7" => test7(&mut cx)?,
        "test8" => convergence(&mut cx, "p2-p1:p1", &["order_l2_u", "order_h1_u"])?,
        "test9" => cavity_comparison(&mut cx, "p2-p1:p1", LidVariant::DirichletLid)?,
        _ => q2q1q1(&mut cx)?,
    }
    Ok(cx.out)
}

/// Lid-driven cavity on the 15x15 zigzag mesh with three bubble placements.
fn test1(cx: &mut Ctx) -> Result<()> {
    let mesh = gen_zigzag(15, 15)?;
    let nv = mesh.num_vertices();
    let mut t = Table::new(&["combo", "pressure_integral", "p_min", "p_max", "beta", "method", "iterations"]);
    for cs in ["p1b-p1b:p1", "p1b-p1:p1", "p1-p1b:p1"] {
        let c = combo(cs);
        let sol = cavity(&mesh, &c, LidVariant::DirichletLid, cx.solve_opts())?;
        let b = beta(&mesh, &c)?;
        let (lo, hi) = p_range(&sol, nv);
        cx.say(format!("{cs}: int p = {:.3e}, p in [{lo:.3}, {hi:.3}], beta = {b:.4e}", sol.pressure_integral));
        t.push(vec![
            cs.into(),
            f(sol.pressure_integral),
            f(lo),
            f(hi),
            f(b),
            format!("{:?}", sol.method),
            sol.iterations.to_string(),
        ]);
        cx.vtk(&format!("cavity_{}.vtk", cs.replace(':', "_")), &mesh, Some(&sol))?;
        if cs == "p1b-p1:p1" {
            cx.check("pressure_integral", sol.pressure_integral);
        }
        if cs != "p1b-p1b:p1" {
            cx.check(&format!("beta_{}", cs.trim_end_matches(":p1")), b);
        }
    }
    cx.table("cavity.csv", t)
}

/// Same cavity on a structured mesh and on an unstructured one of equal size.
fn cavity_comparison(cx: &mut Ctx, cs: &str, lid: LidVariant) -> Result<()> {
    let n = 20;
    let c = combo(cs);
    let meshes = [("structured", gen_structured_tri(n, n, Rect::UNIT)?), ("unstructured", unstructured_family(n, cx.ov.seed)?)];
    let mut t = Table::new(&["mesh", "cells", "h", "beta", "pressure_integral", "p_min", "p_max"]);
    for (label, mesh) in &meshes {
        let sol = cavity(mesh, &c, lid, cx.solve_opts())?;
        let b = beta(mesh, &c)?;
        let (lo, hi) = p_range(&sol, mesh.num_vertices());
        cx.say(format!("{cs} {label}: beta = {b:.4e}, p in [{lo:.3}, {hi:.3}]"));
        t.push(vec![
            label.to_string(),
            mesh.num_cells().to_string(),
            f(mesh.metrics().h),
            f(b),
            f(sol.pressure_integral),
            f(lo),
            f(hi),
        ]);
        cx.vtk(&format!("cavity_{label}.vtk"), mesh, Some(&sol))?;
        cx.check(&format!("beta_{label}"), b);
    }
    cx.table("cavity.csv", t)
}

/// Errors against the trigonometric vortex on the unstructured family
/// `h = 2^-3, 2^-4, ...`; orders of the last interval are checked.
fn convergence(cx: &mut Ctx, cs: &str, checked: &[&str]) -> Result<()> {
    let levels = cx.ov.levels.unwrap_or(4);
    if levels < 2 {
        bail!("convergence needs at least two levels");
    }
    let meshes = (0..levels).map(|k| unstructured_family(8 << k, cx.ov.seed)).collect::<Result<Vec<_>, _>>()?;
    let rep = convergence_study(&combo(cs), &meshes, &TrigVortex, cx.solve_opts())?;
    let orders = rep.orders();
    let names = ["l2_u", "h1_u", "l2_v", "h1_v", "l2_p"];
    let mut cols = vec!["n", "h"];
    cols.extend(names);
    cols.extend(["order_l2_u", "order_h1_u", "order_l2_v", "order_h1_v", "order_l2_p"]);
    let mut t = Table::new(&cols).meta("combo", cs);
    for (i, row) in rep.rows.iter().enumerate() {
        let mut r = vec![(8usize << i).to_string(), f(row.h)];
        r.extend(row.values().iter().map(|&x| f(x)));
        match i.checked_sub(1).map(|j| orders[j]) {
            Some(o) => r.extend(o.iter().map(|&x| f(x))),
            None => r.extend(std::iter::repeat_n(String::new(), 5)),
        }
        t.push(r);
        cx.say(format!(
            "n = {:>3}: errors {}",
            8 << i,
            row.values().iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
        ));
    }
    let last = orders.last().expect("two levels give one order");
    cx.say(format!("last orders: {}", last.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")));
    for (k, n) in names.iter().enumerate() {
        let key = format!("order_{n}");
        if checked.contains(&key.as_str()) {
            cx.check(&key, last[k]);
        }
    }
    cx.table("convergence.csv", t)
}

/// Unstructuring repair of the 16x16 structured mesh.
fn test4(cx: &mut Ctx) -> Result<()> {
    let c = combo("p1b-p1:p1");
    let mesh = gen_structured_tri(16, 16, Rect::UNIT)?;
    let cfg = UnstructureConfig::new(cx.ov.r.unwrap_or(0.15), cx.ov.axis.unwrap_or(Axis::Y))?;
    let before = verify_uniform(&mesh, &cfg);
    let out = apply_algorithm1(&mesh, &cfg)?;
    let fixed = UnstructureConfig { h: Some(out.h), ..cfg };
    let after = verify_uniform(&out.mesh, &fixed);
    let (b0, b1) = (beta(&mesh, &c)?, beta(&out.mesh, &c)?);
    cx.say(format!(
        "r = {}, axis = {}: {} passes, {} vertices moved, {} warnings",
        cfg.r,
        cfg.axis,
        out.passes,
        out.moved,
        out.warnings.len()
    ));
    cx.say(format!("offending macros {} -> {}, beta {b0:.3e} -> {b1:.4e}", before.offending.len(), after.offending.len()));
    let mut t = Table::new(&["stage", "uniform", "offending", "min_margin", "beta", "shape_ratio"]);
    for (label, m, rep, b) in [("before", &mesh, &before, b0), ("after", &out.mesh, &after, b1)] {
        t.push(vec![
            label.into(),
            rep.pass.to_string(),
            rep.offending.len().to_string(),
            f(rep.min_margin),
            f(b),
            f(m.metrics().shape_ratio),
        ]);
        let sol = cavity(m, &c, LidVariant::DirichletLid, cx.solve_opts())?;
        cx.vtk(&format!("cavity_{label}.vtk"), m, Some(&sol))?;
    }
    let p = cx.path("unstructured.msh");
    save_msh(&out.mesh, &p)?;
    cx.out.artifacts.push(p);
    cx.check("uniform", if after.pass { 1.0 } else { 0.0 });
    cx.check("beta_before", b0);
    cx.check("beta_after", b1);
    cx.table("algorithm1.csv", t)
}

fn oracle_summary(cx: &mut Ctx, label: &str, mesh: &Mesh, combos: &[&str], t: &mut Table) -> Result<f64> {
    let cs: Vec<FECombo> = combos.iter().map(|s| combo(s)).collect();
    let a = analyze(mesh, &cs, true, Tolerances::default())?;
    for c in &cs {
        let rows: Vec<_> = a.rows.iter().filter(|r| &r.combo == c).collect();
        let singular = a.count_singular(c);
        let numeric = rows.iter().filter(|r| r.numeric_dim.is_some_and(|d| d > 0)).count();
        let agree = rows.iter().filter(|r| r.agrees() == Some(true)).count();
        cx.say(format!(
            "{label} {c}: {} macros, {singular} predicted singular, {numeric} numerically singular, {agree} agree",
            rows.len()
        ));
        t.push(vec![
            label.into(),
            c.to_string(),
            rows.len().to_string(),
            singular.to_string(),
            numeric.to_string(),
            agree.to_string(),
        ]);
    }
    Ok(a.agreement())
}

const ORACLE_COLUMNS: [&str; 6] = ["mesh", "combo", "macros", "predicted_singular", "numeric_singular", "agree"];

/// Kuhn cube and a jittered copy; local level only.
fn test5(cx: &mut Ctx) -> Result<()> {
    let cube = gen_kuhn_cube(4)?;
    let jittered = jitter(&cube, 0.03, cx.ov.seed, |p, d| {
        for k in 0..3 {
            if p[k] == 0.0 || p[k] == 1.0 {
                d[k] = 0.0;
            }
        }
    })?;
    let combos = ["p1-p1b-p1b:p1", "p1b-p1b-p1:p1", "p1b-p1-p1:p1", "p1-p1-p1b:p1"];
    let mut t = Table::new(&ORACLE_COLUMNS);
    let a = oracle_summary(cx, "kuhn", &cube, &combos, &mut t)?;
    let b = oracle_summary(cx, "jittered", &jittered, &combos, &mut t)?;
    cx.vtk("kuhn.vtk", &cube, None)?;
    cx.vtk("jittered.vtk", &jittered, None)?;
    cx.check("oracle_agreement", a.min(b));
    cx.table("macros.csv", t)
}

/// Unstructured triangulation extruded in z: structured only along z.
fn test6(cx: &mut Ctx) -> Result<()> {
    let base = unstructured_family(6, cx.ov.seed)?;
    let mesh = gen_extruded_tet(&base, 4, 1.0)?;
    let combos = ["p1b-p1b-p1:p1", "p1-p1b-p1b:p1", "p1-p1-p1b:p1", "p1b-p1-p1:p1"];
    let mut t = Table::new(&ORACLE_COLUMNS);
    let a = oracle_summary(cx, "extruded", &mesh, &combos, &mut t)?;
    cx.vtk("extruded.vtk", &mesh, None)?;
    cx.check("oracle_agreement", a);
    cx.table("macros.csv", t)
}

/// The five-level family whose x-jitter fades out, level 5 being the bare
/// zigzag. The zigzag is structured along x, so the P2 component is the
/// vertical one here.
pub fn test7_family(levels: usize, seed: u64) -> Result<Vec<(usize, f64, Mesh)>> {
    let spec = [(3usize, 0.4), (7, 0.2), (15, 0.1), (31, 0.05), (63, 0.0)];
    spec.iter()
        .take(levels)
        .map(|&(n, a)| {
            let amp = a / n as f64;
            Ok((n, amp, gen_perturbed(&gen_zigzag(n, n)?, amp, seed)?))
        })
        .collect()
}

fn test7(cx: &mut Ctx) -> Result<()> {
    let levels = cx.ov.levels.unwrap_or(5).min(5);
    if levels < 2 {
        bail!("test7 needs at least two levels");
    }
    let c = combo("p1-p2:p1");
    let mut t = Table::new(&["level", "n", "amplitude", "h", "beta"]).meta("combo", &c);
    let mut betas = Vec::new();
    for (i, (n, amp, mesh)) in test7_family(levels, cx.ov.seed)?.into_iter().enumerate() {
        let b = beta(&mesh, &c)?;
        cx.say(format!("level {}: n = {n}, amplitude = {amp:.4}, beta = {b:.5e}", i + 1));
        t.push(vec![(i + 1).to_string(), n.to_string(), f(amp), f(mesh.metrics().h), f(b)]);
        betas.push(b);
    }
    let decreasing = betas.windows(2).all(|w| w[1] < w[0]);
    cx.check("strictly_decreasing", if decreasing { 1.0 } else { 0.0 });
    cx.check("last_over_first", betas[betas.len() - 1] / betas[0]);
    cx.table("beta.csv", t)
}

/// The 2x2 Q2-Q1-Q1 macro-element.
fn q2q1q1(cx: &mut Ctx) -> Result<()> {
    let mesh = gen_quad_macro([0.5, 0.5], [0.5, 0.5])?;
    let m = build_macroelements(&mesh).macros.into_iter().next().ok_or_else(|| anyhow!("quad macro has no center"))?;
    let mut t = Table::new(&["combo", "nullspace_dim", "counterexample_residual", "singular_values"]);
    let mut dims = Vec::new();
    for cs in ["q2-q1:q1", "q1-q2:q1"] {
        let c = combo(cs);
        let ns = local_nullspace(&mesh, &m, &c)?;
        let op = LocalOperator::new(&mesh, &m, &c)?;
        // the profile depends on |y - y0| for q2-q1 and on |x - x0| for q1-q2
        let res = if cs == "q2-q1:q1" {
            op.relative_residual(&quad_counterexample(&mesh, &m, 0.0, 1.0))
        } else {
            let sw = mesh.swapped_xy();
            let ms = build_macroelements(&sw).macros.into_iter().next().expect("swapped macro");
            let ops = LocalOperator::new(&sw, &ms, &combo("q2-q1:q1"))?;
            ops.relative_residual(&quad_counterexample(&sw, &ms, 0.0, 1.0))
        };
        let sv: Vec<String> = ns.singular_values.iter().map(|x| format!("{x:.3e}")).collect();
        cx.say(format!("{cs}: local nullspace dim {}, counterexample residual {res:.2e}", ns.dim));
        t.push(vec![cs.into(), ns.dim.to_string(), f(res), sv.join(" ")]);
        dims.push((ns.dim, res));
    }
    cx.check("nullspace_dim", dims[0].0 as f64);
    cx.check("counterexample_residual", dims[0].1);
    cx.vtk("quad_macro.vtk", &mesh, None)?;
    cx.table("nullspace.csv", t)
}

pub fn print_outcome(o: &Outcome) {
    println!("== {} (seed {}) ==", o.name, o.seed);
    for l in &o.summary {
        println!("  {l}");
    }
    for c in &o.checks {
        println!("  {c}");
    }
}

pub fn artifacts_under(o: &Outcome, root: &Path) -> bool {
    o.artifacts.iter().all(|p| p.starts_with(root))
}
