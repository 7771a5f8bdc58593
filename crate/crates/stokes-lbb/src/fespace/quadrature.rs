use alloc::vec;
use alloc::vec::Vec;

use crate::error::FeError;
use crate::mesh::CellKind;

/// Points are barycentric coordinates on simplices and `(xi, eta)` reference
/// coordinates in `[0,1]^2` on quadrilaterals (unused slots are zero).
/// Weights are fractions of the cell measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadratureRule {
    /// Reference coordinates of point `q` (drops the first barycentric slot).
    pub fn reference_point(&self, kind: CellKind, q: usize) -> [f64; 3] {
        let p = self.points[q];
        match kind {
            CellKind::Triangle => [p[1], p[2], 0.0],
            CellKind::Tetrahedron => [p[1], p[2], p[3]],
            CellKind::Quadrilateral => [p[0], p[1], 0.0],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Vertex rule (degree 1), edge-midpoint rule (degree 2, triangles), the
/// 7-point symmetric rule (degree 5, triangles), collapsed Gauss products
/// for anything higher, trapezoidal and Gauss tensor rules on quads.
pub fn quadrature(kind: CellKind, exact_degree: usize) -> Result<QuadratureRule, FeError> {
    match (kind, exact_degree) {
        (_, 0) => Err(FeError::UnsupportedDegree(0, kind)),
        (CellKind::Triangle, 1) => Ok(vertex_rule(3)),
        (CellKind::Tetrahedron, 1) => Ok(vertex_rule(4)),
        (CellKind::Triangle, 2) => {
            let points = vec![[0.5, 0.5, 0.0, 0.0], [0.0, 0.5, 0.5, 0.0], [0.5, 0.0, 0.5, 0.0]];
            Ok(QuadratureRule { points, weights: vec![1.0 / 3.0; 3], exact_degree: 2 })
        }
        (CellKind::Triangle, 3..=5) => Ok(triangle_degree5()),
        (CellKind::Triangle, d) => Ok(collapsed_triangle(d)),
        (CellKind::Tetrahedron, d) => Ok(collapsed_tet(d)),
        (CellKind::Quadrilateral, 1) => {
            let points = vec![
                [0.0, 0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
                [1.0, 1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
            ];
            Ok(QuadratureRule { points, weights: vec![0.25; 4], exact_degree: 1 })
        }
        (CellKind::Quadrilateral, d) => {
            let (x, w) = gauss_legendre_unit((d + 1).div_ceil(2));
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for j in 0..x.len() {
                for i in 0..x.len() {
                    points.push([x[i], x[j], 0.0, 0.0]);
                    weights.push(w[i] * w[j]);
                }
            }
            Ok(QuadratureRule { points, weights, exact_degree: d })
        }
    }
}

fn vertex_rule(n: usize) -> QuadratureRule {
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = [0.0; 4];
        p[i] = 1.0;
        points.push(p);
    }
    QuadratureRule { points, weights: vec![1.0 / n as f64; n], exact_degree: 1 }
}

fn triangle_degree5() -> QuadratureRule {
    let s15 = libm::sqrt(15.0);
    let a1 = (6.0 - s15) / 21.0;
    let w1 = (155.0 - s15) / 1200.0;
    let a2 = (6.0 + s15) / 21.0;
    let w2 = (155.0 + s15) / 1200.0;
    let mut points = vec![[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]];
    let mut weights = vec![9.0 / 40.0];
    for (a, w) in [(a1, w1), (a2, w2)] {
        let b = 1.0 - 2.0 * a;
        points.push([b, a, a, 0.0]);
        points.push([a, b, a, 0.0]);
        points.push([a, a, b, 0.0]);
        weights.extend_from_slice(&[w, w, w]);
    }
    QuadratureRule { points, weights, exact_degree: 5 }
}

fn collapsed_triangle(d: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre_unit((d + 2).div_ceil(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..x.len() {
        for j in 0..x.len() {
            let u = x[i];
            let v = x[j] * (1.0 - u);
            points.push([1.0 - u - v, u, v, 0.0]);
            weights.push(2.0 * w[i] * w[j] * (1.0 - u));
        }
    }
    QuadratureRule { points, weights, exact_degree: d }
}

fn collapsed_tet(d: usize) -> QuadratureRule {
    let (x, w) = gauss_legendre_unit((d + 3).div_ceil(2));
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..x.len() {
        for j in 0..x.len() {
            for k in 0..x.len() {
                let u = x[i];
                let v = x[j] * (1.0 - u);
                let t = x[k] * (1.0 - u) * (1.0 - x[j]);
                points.push([1.0 - u - v - t, u, v, t]);
                weights.push(6.0 * w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - x[j]));
            }
        }
    }
    QuadratureRule { points, weights, exact_degree: d }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let step = p / d;
            t -= step;
            if libm::fabs(step) < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        if d != 0.0 {
            dp = d;
        }
        x[i] = 0.5 * (1.0 - t);
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}
