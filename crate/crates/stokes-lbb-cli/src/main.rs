use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use stokes_lbb::fespace::FECombo;
use stokes_lbb::infsup::{infsup_constant, InfSupOptions};
use stokes_lbb::macroelement::Tolerances;
use stokes_lbb::mesh::{
    gen_extruded_tet, gen_kuhn_cube, gen_perturbed, gen_quad_macro, gen_structured_tri, gen_zigzag, Mesh, Rect,
};
use stokes_lbb::stokes::{cavity_problem, convergence_study, solve_penalized, LidVariant, SolveOptions, TrigVortex};
use stokes_lbb::unstructure::{apply_algorithm1, unstructured_family, verify_uniform, Axis, UnstructureConfig};
use stokes_lbb_cli::analyze::analyze;
use stokes_lbb_cli::config::Thresholds;
use stokes_lbb_cli::io::{load_msh, save_msh, save_vtk, Field};
use stokes_lbb_cli::report::f;
use stokes_lbb_cli::scenario::{print_outcome, run_scenario, Overrides, SCENARIOS};

#[derive(Parser)]
#[command(name = "stokes-lbb", version, about = "Macro-element inf-sup checks for partially enriched Stokes elements")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshKind {
    Structured,
    Zigzag,
    Perturbed,
    Kuhn,
    Extruded,
    Unstructured,
    QuadMacro,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a mesh and write it as MSH 2.2.
    Gen {
        kind: MeshKind,
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Relative x-jitter amplitude (perturbed: times 1/n).
        #[arg(long, default_value_t = 0.2)]
        amplitude: f64,
        #[arg(long, default_value_t = 4)]
        layers: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict macro-element regularity for every interior vertex.
    Analyze {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long = "combo", required = true)]
        combos: Vec<String>,
        /// Cross-check each verdict with the local nullspace.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the unstructuring post-processor.
    Unstructure {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 0.15)]
        r: f64,
        #[arg(long, default_value = "y")]
        axis: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verify_only: bool,
    },
    /// Lid-driven cavity solve, written as VTK.
    SolveCavity {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        combo: String,
        #[arg(long, default_value_t = 1e-10)]
        eps: f64,
        #[arg(long)]
        neumann: bool,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Errors and orders against the trigonometric vortex.
    Convergence {
        #[arg(long)]
        combo: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Discrete inf-sup constant.
    Infsup {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        combo: String,
    },
    /// Run a named scenario (or `all`).
    Run {
        scenario: String,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        axis: Option<String>,
        /// Exit nonzero when a check fails.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

fn parse_combo(s: &str) -> Result<FECombo> {
    FECombo::from_str(s).map_err(|e| anyhow::anyhow!("combo `{s}`: {e}"))
}

fn parse_axis(s: &str) -> Result<Axis> {
    Ok(Axis::from_str(s)?)
}

fn generate(kind: MeshKind, n: usize, amplitude: f64, layers: usize, seed: u64) -> Result<Mesh> {
    Ok(match kind {
        MeshKind::Structured => gen_structured_tri(n, n, Rect::UNIT)?,
        MeshKind::Zigzag => gen_zigzag(n, n)?,
        MeshKind::Perturbed => gen_perturbed(&gen_zigzag(n, n)?, amplitude / n as f64, seed)?,
        MeshKind::Kuhn => gen_kuhn_cube(n)?,
        MeshKind::Extruded => gen_extruded_tet(&unstructured_family(n, seed)?, layers, 1.0)?,
        MeshKind::Unstructured => unstructured_family(n, seed)?,
        MeshKind::QuadMacro => gen_quad_macro([0.5, 0.5], [0.5, 0.5])?,
    })
}

fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Gen { kind, n, amplitude, layers, seed, out } => {
            let mesh = generate(kind, n, amplitude, layers, seed)?;
            save_msh(&mesh, &out)?;
            println!(
                "# seed={seed}\nwrote {} ({} vertices, {} cells)",
                out.display(),
                mesh.num_vertices(),
                mesh.num_cells()
            );
        }
        Cmd::Analyze { mesh, combos, oracle, out } => {
            let m = load_msh(&mesh)?;
            let cs = combos.iter().map(|s| parse_combo(s)).collect::<Result<Vec<_>>>()?;
            let a = analyze(&m, &cs, oracle, Tolerances::default())?;
            for w in &a.warnings {
                eprintln!("warning: {w}");
            }
            for c in &cs {
                let total = a.rows.iter().filter(|r| &r.combo == c).count();
                println!("{c}: {} of {total} macro-elements predicted singular", a.count_singular(c));
            }
            if oracle {
                println!("oracle agreement: {:.4}", a.agreement());
            }
            let t = a.table(oracle);
            match out {
                Some(p) => t.save(&p)?,
                None => print!("{}", t.to_csv()?),
            }
        }
        Cmd::Unstructure { mesh, r, axis, out, verify_only } => {
            let m = load_msh(&mesh)?;
            let cfg = UnstructureConfig::new(r, parse_axis(&axis)?)?;
            let before = verify_uniform(&m, &cfg);
            println!(
                "before: uniform = {}, offending = {}, margin = {:.4}",
                before.pass,
                before.offending.len(),
                before.min_margin
            );
            if !verify_only {
                let res = apply_algorithm1(&m, &cfg)?;
                for w in &res.warnings {
                    eprintln!("warning: {w}");
                }
                let after = verify_uniform(&res.mesh, &UnstructureConfig { h: Some(res.h), ..cfg });
                println!(
                    "after {} passes ({} moves): uniform = {}, margin = {:.4}",
                    res.passes, res.moved, after.pass, after.min_margin
                );
                if let Some(p) = out {
                    save_msh(&res.mesh, &p)?;
                }
                return Ok(after.pass);
            }
            return Ok(before.pass);
        }
        Cmd::SolveCavity { mesh, combo, eps, neumann, out_dir } => {
            let m = load_msh(&mesh)?;
            let c = parse_combo(&combo)?;
            let lid = if neumann { LidVariant::NeumannLid } else { LidVariant::DirichletLid };
            let sol = solve_penalized(&cavity_problem(&m, &c, lid)?, SolveOptions { eps, ..SolveOptions::default() })?;
            println!(
                "{c}: {:?} in {} iterations, int p = {:.3e}, residuals {:.2e} / {:.2e}",
                sol.method, sol.iterations, sol.pressure_integral, sol.momentum_residual, sol.divergence_residual
            );
            let nv = m.num_vertices();
            let p = out_dir.join("cavity.vtk");
            save_vtk(
                &m,
                &[
                    Field::point("u", &sol.velocity[0][..nv]),
                    Field::point("v", &sol.velocity[1][..nv]),
                    Field::point("pressure", &sol.pressure[..nv]),
                ],
                &p,
            )?;
            println!("wrote {}", p.display());
        }
        Cmd::Convergence { combo, levels, seed } => {
            if levels < 2 {
                bail!("need at least two levels");
            }
            let c = parse_combo(&combo)?;
            let meshes = (0..levels).map(|k| unstructured_family(8 << k, seed)).collect::<Result<Vec<_>, _>>()?;
            let rep = convergence_study(&c, &meshes, &TrigVortex, SolveOptions::default())?;
            println!("# seed={seed} combo={c}\nh,l2_u,h1_u,l2_v,h1_v,l2_p");
            for row in &rep.rows {
                let v: Vec<String> = row.values().iter().map(|&x| f(x)).collect();
                println!("{},{}", f(row.h), v.join(","));
            }
            for o in rep.orders() {
                println!("orders: {}", o.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" "));
            }
        }
        Cmd::Infsup { mesh, combo } => {
            let m = load_msh(&mesh)?;
            let c = parse_combo(&combo)?;
            let r = infsup_constant(&m, &c, InfSupOptions::default())?;
            println!("{c}: beta = {:.6e}", r.beta);
        }
        Cmd::Run { scenario, levels, seed, eps, r, axis, check, config, out_dir } => {
            let th = match config {
                Some(p) => Thresholds::load(&p).with_context(|| format!("loading {}", p.display()))?,
                None => Thresholds::builtin(),
            };
            let axis = axis.as_deref().map(parse_axis).transpose()?;
            let ov = Overrides { seed, levels, eps, r, axis, out_dir };
            let names: Vec<&str> = if scenario == "all" { SCENARIOS.to_vec() } else { vec![scenario.as_str()] };
            let mut ok = true;
            for name in names {
                let o = run_scenario(name, &ov, &th)?;
                print_outcome(&o);
                ok &= o.passed();
            }
            return Ok(ok || !check);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
