//! Randomly jittered meshes with optional coordinate constraints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stokes_lbb::mesh::{Mesh, Point};
use stokes_lbb::MeshError;

/// Moves every vertex by a uniform draw in `[-amplitude, amplitude]` per
/// coordinate; `constrain` receives the original point and the proposed
/// offset and may zero or tie components. Moves that flip a cell are
/// halved, then dropped.
pub fn jitter(
    mesh: &Mesh,
    amplitude: f64,
    seed: u64,
    constrain: impl Fn(Point, &mut [f64; 3]),
) -> Result<Mesh, MeshError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = mesh.dim();
    let vc = mesh.vertex_cells();
    let mut current = mesh.clone();
    for v in 0..mesh.num_vertices() {
        let p = mesh.vertex(v);
        let mut d = [0.0; 3];
        for x in d.iter_mut().take(dim) {
            *x = rng.random_range(-amplitude..=amplitude);
        }
        constrain(p, &mut d);
        for _ in 0..20 {
            let mut pts = current.vertices().to_vec();
            for k in 0..dim {
                pts[v][k] = p[k] + d[k];
            }
            let trial = current.with_coordinates(pts);
            if let Ok(m) = trial {
                if vc[v].iter().all(|&c| m.signed_cell_measure(c) > 0.0) {
                    current = m;
                    break;
                }
            }
            d.iter_mut().for_each(|x| *x *= 0.5);
        }
    }
    Ok(current)
}
