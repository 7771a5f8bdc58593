//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always show.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stokes_lbb::fespace::FECombo;
use stokes_lbb::infsup::{
    analytic_singular_pressure, global_counterexample, infsup_constant, local_nullspace, quad_counterexample,
    InfSupOptions, LocalOperator,
};
use stokes_lbb::linalg::{norm, spectral_norm};
use stokes_lbb::macroelement::{
    build_macroelements, classify_2d, predict_regularity, predict_regularity_3d, s_condition_scaled, MacroElement,
    Tolerances, ALIGNMENT_TOL,
};
use stokes_lbb::mesh::{gen_kuhn_cube, gen_quad_macro, gen_structured_tri, gen_zigzag, CellKind, Mesh, Point, Rect};
use stokes_lbb::stokes::{assemble, cavity_problem, convergence_study, solve_penalized, LidVariant, SolveOptions, TrigVortex};
use stokes_lbb::unstructure::{apply_algorithm1, unstructured_family, verify_uniform, Axis, UnstructureConfig};
use stokes_lbb_cli::fixtures::jitter;
use stokes_lbb_cli::scenario::test7_family;

const SEED: u64 = 42;

fn combo(s: &str) -> FECombo {
    FECombo::from_str(s).unwrap()
}

fn star(polar: &[(f64, f64)]) -> Mesh {
    let mut verts = vec![[0.0, 0.0, 0.0]];
    verts.extend(polar.iter().map(|&(r, t)| [r * t.cos(), r * t.sin(), 0.0]));
    let n = polar.len();
    let cells = (0..n).map(|i| vec![0, 1 + i, 1 + (i + 1) % n]).collect();
    Mesh::new(CellKind::Triangle, verts, cells, vec![]).unwrap()
}

fn only_macro(mesh: &Mesh) -> MacroElement {
    build_macroelements(mesh).macros.into_iter().next().unwrap()
}

/// Random convex-celled star with `n` ring vertices; `snap` ring vertices
/// are put on the horizontal line through the center.
fn random_star(rng: &mut ChaCha8Rng, n: usize, snap: usize) -> Vec<(f64, f64)> {
    loop {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..3.0)).collect();
        let total: f64 = w.iter().sum();
        let mut t = rng.random_range(0.0..2.0 * PI);
        let mut angles: Vec<f64> = w
            .iter()
            .map(|wi| {
                let a = t.rem_euclid(2.0 * PI);
                t += 2.0 * PI * wi / total;
                a
            })
            .collect();
        angles.sort_by(f64::total_cmp);
        for (k, target) in [0.0, PI].into_iter().enumerate().take(snap) {
            let dist = |a: f64| (a - target).abs().min(2.0 * PI - (a - target).abs());
            let i = (0..n).min_by(|&a, &b| dist(angles[a]).total_cmp(&dist(angles[b]))).unwrap();
            // the second snap must not steal the first
            if k == 1 && angles[i] == 0.0 {
                continue;
            }
            angles[i] = target;
        }
        angles.sort_by(f64::total_cmp);
        let ok = (0..n).all(|i| {
            let gap = if i + 1 < n { angles[i + 1] - angles[i] } else { angles[0] + 2.0 * PI - angles[i] };
            gap > 0.15 && gap < 0.9 * PI
        });
        if ok {
            return angles.into_iter().map(|a| (rng.random_range(0.5..1.5), a)).collect();
        }
    }
}

/// Moves one radius of an even, unaligned star until the alternating sum
/// vanishes; `None` when no sign change is bracketed.
fn s_zero_star(rng: &mut ChaCha8Rng) -> Option<Vec<(f64, f64)>> {
    let n = [4, 6, 8][rng.random_range(0..3)];
    let mut p = random_star(rng, n, 0);
    let k = rng.random_range(0..n);
    let s_at = |p: &mut Vec<(f64, f64)>, r: f64| {
        p[k].0 = r;
        let mesh = star(p);
        s_condition_scaled(&mesh, &only_macro(&mesh), false).unwrap().0
    };
    let grid: Vec<f64> = (0..=40).map(|i| 0.2 * 15f64.powf(i as f64 / 40.0)).collect();
    let vals: Vec<f64> = grid.iter().map(|&r| s_at(&mut p, r)).collect();
    let i = (0..40).find(|&i| vals[i].signum() != vals[i + 1].signum())?;
    let (mut a, mut b, fa) = (grid[i], grid[i + 1], vals[i]);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if s_at(&mut p, m).signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    s_at(&mut p, 0.5 * (a + b));
    let mesh = star(&p);
    (classify_2d(&mesh, &only_macro(&mesh), ALIGNMENT_TOL).aligned_count_y == 0).then_some(p)
}

struct Line {
    id: usize,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Option<Duration>,
}

fn timed(id: usize, budget: Option<u64>, f: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (pass, detail) = f();
    let elapsed = t.elapsed();
    let budget = budget.map(Duration::from_secs);
    Line { id, pass: pass && budget.is_none_or(|b| elapsed < b), detail, elapsed, budget }
}

fn criterion_1() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut stars = Vec::new();
    for i in 0..200 {
        let n = rng.random_range(4..=8);
        stars.push(random_star(&mut rng, n, [0, 0, 0, 1, 2][i % 5]));
    }
    let mut zeros = 0;
    while zeros < 20 {
        if let Some(p) = s_zero_star(&mut rng) {
            stars.push(p);
            zeros += 1;
        }
    }
    let mut parts = Vec::new();
    let mut ok = true;
    // every star also enters mirrored in x = y, so both orientations see alignments
    for cs in ["p1b-p1:p1", "p1-p1b:p1", "p2-p1:p1"] {
        let c = combo(cs);
        let (mut agree, mut singular) = (0, 0);
        for mesh in stars.iter().flat_map(|p| {
            let a = star(p);
            let b = a.swapped_xy();
            [a, b]
        }) {
            let m = only_macro(&mesh);
            let v = predict_regularity(&mesh, &m, &c, Tolerances::default()).unwrap();
            let dim = local_nullspace(&mesh, &m, &c).unwrap().dim;
            agree += usize::from(v.is_regular() == (dim == 0));
            singular += usize::from(dim > 0);
        }
        ok &= agree == 2 * stars.len();
        parts.push(format!("{cs} {agree}/{} ({singular} singular)", 2 * stars.len()));
    }
    (ok, parts.join(", "))
}

fn criterion_2() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for _ in 0..40 {
        let n = rng.random_range(4..=8);
        let mesh = star(&random_star(&mut rng, n, 2));
        let sw = mesh.swapped_xy();
        for (mesh, cs) in [(&mesh, "p1b-p1:p1"), (&mesh, "p2-p1:p1"), (&sw, "p1-p1b:p1"), (&sw, "p1-p2:p1")] {
            let m = only_macro(mesh);
            let c = combo(cs);
            let Some(p) = analytic_singular_pressure(mesh, &m, &c, Tolerances::default()).unwrap() else {
                return (false, format!("{cs}: structured star predicted regular"));
            };
            worst = worst.max(LocalOperator::new(mesh, &m, &c).unwrap().relative_residual(&p));
            count += 1;
        }
    }
    // equal-area hexagon: radius sqrt(2) on the vertical axis
    let r = |t: f64| if t == 90.0 || t == 270.0 { 2f64.sqrt() } else { 1.0 };
    let hex = star(&[45.0, 90.0, 135.0, 225.0, 270.0, 315.0].map(|a: f64| (r(a), a.to_radians())));
    let m = only_macro(&hex);
    let (s, scale) = s_condition_scaled(&hex, &m, false).unwrap();
    let dim = local_nullspace(&hex, &m, &combo("p2-p1:p1")).unwrap().dim;
    let ok = worst <= 1e-11 && (s / scale).abs() <= 1e-12 && dim >= 1;
    (ok, format!("{count} witnesses, worst residual {worst:.2e}; hexagon |S|/scale = {:.1e}, dim {dim}", (s / scale).abs()))
}

fn criterion_3() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut max_beta: f64 = 0.0;
    let sizes = [(2, 2), (3, 5), (7, 4), (10, 10), (16, 9), (20, 32), (32, 32)];
    for (k, l) in sizes {
        let mesh = gen_structured_tri(k, l, Rect::UNIT).unwrap();
        for cs in ["p1b-p1:p1", "p1-p1b:p1"] {
            let c = combo(cs);
            let p = global_counterexample(&mesh, &c).unwrap();
            let b = assemble(&mesh, &c).unwrap().b_interior();
            worst = worst.max(norm(&b.tr_mul_vec(&p)) / (spectral_norm(&b, 300) * norm(&p)));
            if k * l <= 256 {
                max_beta = max_beta.max(infsup_constant(&mesh, &c, InfSupOptions::default()).unwrap().beta);
            }
        }
    }
    (worst <= 1e-11 && max_beta <= 1e-7, format!("worst relative |B^T p| = {worst:.2e}, max beta = {max_beta:.2e}"))
}

fn orders(cs: &str) -> [f64; 5] {
    let meshes: Vec<Mesh> = (0..4).map(|k| unstructured_family(8 << k, SEED).unwrap()).collect();
    let rep = convergence_study(&combo(cs), &meshes, &TrigVortex, SolveOptions::default()).unwrap();
    *rep.orders().last().unwrap()
}

fn criterion_4() -> (bool, String) {
    let o = orders("p1b-p1:p1");
    let inr = |x: f64, lo: f64, hi: f64| (lo..=hi).contains(&x);
    let ok = inr(o[0], 1.7, 2.3)
        && inr(o[2], 1.7, 2.3)
        && inr(o[1], 0.85, 1.25)
        && inr(o[3], 0.85, 1.25)
        && inr(o[4], 0.6, 1.6);
    (ok, format!("u L2 {:.3}, u H1 {:.3}, v L2 {:.3}, v H1 {:.3}, p L2 {:.3}", o[0], o[1], o[2], o[3], o[4]))
}

fn criterion_5() -> (bool, String) {
    let o = orders("p2-p1:p1");
    ((0.85..=1.4).contains(&o[1]) && o[0] <= 2.4, format!("u H1 {:.3}, u L2 {:.3}", o[1], o[0]))
}

fn criterion_6() -> (bool, String) {
    let c = combo("p1-p2:p1");
    let betas: Vec<f64> = test7_family(5, SEED)
        .unwrap()
        .iter()
        .map(|(_, _, m)| infsup_constant(m, &c, InfSupOptions::default()).unwrap().beta)
        .collect();
    let decreasing = betas.windows(2).all(|w| w[1] < w[0]);
    let ok = decreasing && betas[4] <= 0.1 * betas[0];
    (ok, format!("beta = {}", betas.iter().map(|b| format!("{b:.4e}")).collect::<Vec<_>>().join(", ")))
}

fn criterion_7() -> (bool, String) {
    let c = combo("p1b-p1:p1");
    let mesh = gen_structured_tri(16, 16, Rect::UNIT).unwrap();
    let cfg = UnstructureConfig::new(0.15, Axis::Y).unwrap();
    let out = apply_algorithm1(&mesh, &cfg).unwrap();
    let uniform = verify_uniform(&out.mesh, &UnstructureConfig { h: Some(out.h), ..cfg }).pass;
    let before = infsup_constant(&mesh, &c, InfSupOptions::default()).unwrap().beta;
    let after = infsup_constant(&out.mesh, &c, InfSupOptions::default()).unwrap().beta;
    let ok = uniform && before <= 1e-7 && after >= 0.01;
    (ok, format!("uniform = {uniform}, beta {before:.2e} -> {after:.4e}, {} moves", out.moved))
}

fn criterion_8() -> (bool, String) {
    let mesh = gen_quad_macro([0.5, 0.5], [0.5, 0.5]).unwrap();
    let m = only_macro(&mesh);
    let c = combo("q2-q1:q1");
    let dim = local_nullspace(&mesh, &m, &c).unwrap().dim;
    let res = LocalOperator::new(&mesh, &m, &c).unwrap().relative_residual(&quad_counterexample(&mesh, &m, 0.0, 1.0));
    (dim >= 1 && res <= 1e-12, format!("nullspace dim {dim}, counterexample residual {res:.2e}"))
}

/// Kuhn-cube star around (1/2, 1/2, 1/2) with every other vertex jittered,
/// except for the listed structure kept in place.
fn fixture_3d(kind: usize, seed: u64) -> Mesh {
    let eq = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let base = gen_kuhn_cube(2).unwrap();
    jitter(&base, 0.08, seed, |p: Point, j: &mut [f64; 3]| {
        let (on_x, on_y) = (eq(p[0], 0.5), eq(p[1], 0.5));
        if on_x && on_y && eq(p[2], 0.5) {
            *j = [0.0; 3];
            return;
        }
        match kind {
            // x = 1/2 plane
            1 if on_x => j[0] = 0.0,
            // y = 1/2 plane
            2 if on_y => j[1] = 0.0,
            // z = 1/2 plane
            6 if eq(p[2], 0.5) => j[2] = 0.0,
            // two vertical half-planes, optionally a third through the diagonal
            3 | 4 => {
                if on_y && p[0] >= 0.5 {
                    j[1] = 0.0;
                }
                if on_x && p[1] >= 0.5 {
                    j[0] = 0.0;
                }
                if kind == 4 && eq(p[0], p[1]) && p[0] <= 0.5 {
                    j[1] = j[0];
                }
            }
            // the vertical axis only
            5 if on_x && on_y => {
                j[0] = 0.0;
                j[1] = 0.0;
            }
            _ => {}
        }
    })
    .unwrap()
}

fn criterion_9() -> (bool, String) {
    let combos = ["p1-p1b-p1b:p1", "p1b-p1-p1b:p1", "p1b-p1b-p1:p1", "p1-p1-p1b:p1", "p1b-p1-p1:p1", "p1-p1b-p1:p1"];
    let (mut total, mut agree, mut singular, mut fixtures) = (0, 0, 0, 0);
    for kind in 0..7 {
        for rep in 0..8 {
            let mesh = fixture_3d(kind, 1000 * kind as u64 + rep);
            let m = only_macro(&mesh);
            fixtures += 1;
            for cs in combos {
                let c = combo(cs);
                let v = predict_regularity_3d(&mesh, &m, &c, ALIGNMENT_TOL).unwrap();
                let dim = local_nullspace(&mesh, &m, &c).unwrap().dim;
                total += 1;
                agree += usize::from(v.is_regular() == (dim == 0));
                singular += usize::from(dim > 0);
            }
        }
    }
    (agree == total, format!("{fixtures} fixtures, {agree}/{total} verdicts agree ({singular} singular)"))
}

fn criterion_10() -> (bool, String) {
    let mesh = gen_zigzag(15, 15).unwrap();
    let sys = cavity_problem(&mesh, &combo("p1b-p1:p1"), LidVariant::DirichletLid).unwrap();
    let sol = solve_penalized(&sys, SolveOptions { eps: 1e-10, ..SolveOptions::default() }).unwrap();
    (sol.pressure_integral.abs() <= 1e-6, format!("|int p| = {:.3e}", sol.pressure_integral.abs()))
}

fn main() -> ExitCode {
    // libtest flags such as --list must not run the suite
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    println!("acceptance suite (seed {SEED})");
    type Criterion = fn() -> (bool, String);
    let runs: [(usize, Option<u64>, Criterion); 10] = [
        (1, Some(30), criterion_1),
        (2, None, criterion_2),
        (3, Some(10), criterion_3),
        (4, Some(180), criterion_4),
        (5, None, criterion_5),
        (6, None, criterion_6),
        (7, Some(20), criterion_7),
        (8, None, criterion_8),
        (9, None, criterion_9),
        (10, None, criterion_10),
    ];
    let mut failed = 0;
    for (id, budget, f) in runs {
        let l = timed(id, budget, f);
        let budget = l.budget.map(|b| format!(" (limit {} s)", b.as_secs())).unwrap_or_default();
        println!(
            "{} criterion {:>2}: {} [{:.2} s{budget}]",
            if l.pass { "PASS" } else { "FAIL" },
            l.id,
            l.detail,
            l.elapsed.as_secs_f64()
        );
        failed += usize::from(!l.pass);
    }
    println!("{} of 10 criteria pass", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
