use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;
use crate::error::SolveError;

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (deg[i], i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (deg[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (level, last)
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>]) -> usize {
    let mut v = seed;
    let (mut lv, mut far) = bfs_levels(v, adj);
    for _ in 0..8 {
        let ecc = lv[far];
        let (l2, f2) = bfs_levels(far, adj);
        if l2[f2] <= ecc {
            break;
        }
        v = far;
        lv = l2;
        far = f2;
    }
    v
}

/// Envelope (skyline) Cholesky factor `P A P^T = L L^T` under an RCM ordering.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    perm: Vec<usize>,
    iperm: Vec<usize>,
    first: Vec<usize>,
    rowptr: Vec<usize>,
    vals: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Cholesky, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::Dimension("Cholesky needs a square matrix"));
        }
        let n = a.nrows();
        let perm = rcm_ordering(a);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.triplets() {
            let (pi, pj) = (iperm[i], iperm[j]);
            let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
            first[r] = first[r].min(c);
        }
        let mut rowptr = vec![0; n + 1];
        for i in 0..n {
            rowptr[i + 1] = rowptr[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0; rowptr[n]];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (iperm[i], iperm[j]);
            if pi >= pj {
                vals[rowptr[pi] + pj - first[pi]] = v;
            }
        }
        for i in 0..n {
            let fi = first[i];
            let ri = rowptr[i];
            for j in fi..i {
                let fj = first[j];
                let rj = rowptr[j];
                let k0 = fi.max(fj);
                let mut s = vals[ri + j - fi];
                let li = &vals[ri + k0 - fi..ri + j - fi];
                let lj = &vals[rj + k0 - fj..rj + j - fj];
                s -= li.iter().zip(lj).map(|(x, y)| x * y).sum::<f64>();
                vals[ri + j - fi] = s / vals[rj + j - fj];
            }
            let row = &vals[ri..ri + i - fi];
            let d = vals[ri + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(SolveError::NotPositiveDefinite { index: perm[i], pivot: d });
            }
            vals[ri + i - fi] = libm::sqrt(d);
        }
        Ok(Cholesky { n, perm, iperm, first, rowptr, vals })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&o| x[o]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let ri = self.rowptr[i];
            let row = &self.vals[ri..ri + i - fi];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / self.vals[ri + i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let ri = self.rowptr[i];
            y[i] /= self.vals[ri + i - fi];
            let yi = y[i];
            for (k, l) in self.vals[ri..ri + i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        for (o, v) in x.iter_mut().enumerate() {
            *v = y[self.iperm[o]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn laplacian_2d(n: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| i * n + j;
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                t.push((idx(i, j), idx(i, j), 4.0));
                if i > 0 {
                    t.push((idx(i, j), idx(i - 1, j), -1.0));
                }
                if i + 1 < n {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                }
                if j > 0 {
                    t.push((idx(i, j), idx(i, j - 1), -1.0));
                }
                if j + 1 < n {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(n * n, n * n, t)
    }

    #[test]
    fn solves_laplacian_against_dense_lu() {
        let a = laplacian_2d(7);
        let b: Vec<f64> = (0..49).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = Cholesky::factor(&a).unwrap().solve(&b);
        let dense = a.to_dense().lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for i in 0..49 {
            assert!((x[i] - dense[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rcm_is_a_permutation_and_narrows_band() {
        let a = laplacian_2d(6);
        let mut p = rcm_ordering(&a);
        p.sort_unstable();
        assert_eq!(p, (0..36).collect::<Vec<_>>());
        let f = Cholesky::factor(&a).unwrap();
        assert!(f.envelope_size() <= 36 * 8);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(Cholesky::factor(&a), Err(SolveError::NotPositiveDefinite { .. })));
    }
}
