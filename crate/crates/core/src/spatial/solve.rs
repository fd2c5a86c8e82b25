use super::{apply_laplacian, Grid, Result, SpatialError};

/// Diagonal of `-laplacian` for the Neumann stencil (boundary faces drop out).
fn neg_laplacian_diag(grid: &Grid) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let ihx2 = 1.0 / (grid.hx() * grid.hx());
    let ihy2 = 1.0 / (grid.hy() * grid.hy());
    (0..grid.len())
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let xf = [i > 0, i + 1 < nx].iter().filter(|&&b| b).count() as f64;
            let mut d = xf * ihx2;
            if grid.dim() == 2 {
                let yf = [j > 0, j + 1 < ny].iter().filter(|&&b| b).count() as f64;
                d += yf * ihy2;
            }
            d
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn apply(grid: &Grid, diag: &[f64], tau: f64, x: &[f64], lap: &mut [f64], out: &mut [f64]) {
    apply_laplacian(grid, x, lap);
    for k in 0..x.len() {
        out[k] = diag[k] * x[k] - tau * lap[k];
    }
}

/// Solves `(diag(d) - tau * laplacian) x = rhs` by Jacobi-preconditioned
/// conjugate gradients, started from zero.
///
/// Convergence is declared when the true residual satisfies
/// `|r|_2 <= tol * |rhs|_2` (or `rhs` is zero). `d` must be positive.
pub fn spd_solve(
    grid: &Grid,
    diag: &[f64],
    tau: f64,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = grid.len();
    if diag.len() != n || rhs.len() != n {
        return Err(SpatialError::FieldLength {
            expected: n,
            got: if diag.len() != n {
                diag.len()
            } else {
                rhs.len()
            },
        });
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(SpatialError::InvalidSystem(format!(
            "tau must be non-negative, got {tau}"
        )));
    }
    if let Some(k) = diag.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(SpatialError::InvalidSystem(format!(
            "diagonal entry {k} is {} (must be positive)",
            diag[k]
        )));
    }
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = tol * rhs_norm;
    let precond: Vec<f64> = neg_laplacian_diag(grid)
        .iter()
        .zip(diag)
        .map(|(l, d)| 1.0 / (d + tau * l))
        .collect();

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut lap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut last = rhs_norm;

    for it in 0..max_iter {
        apply(grid, diag, tau, &p, &mut lap, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= target || (it + 1) % 50 == 0 {
            // guard against drift of the recursive residual
            apply(grid, diag, tau, &x, &mut lap, &mut ap);
            for k in 0..n {
                r[k] = rhs[k] - ap[k];
            }
            last = dot(&r, &r).sqrt();
            if last <= target {
                return Ok(x);
            }
        } else {
            last = rnorm;
        }
        for k in 0..n {
            z[k] = r[k] * precond[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(SpatialError::NotConverged {
        iterations: max_iter,
        residual: last / rhs_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{neumann_eigen, ModeIndex};

    #[test]
    fn inverts_eigenmodes_exactly() {
        let g = Grid::rect(9, 7, 1.0, 0.5).unwrap();
        let e = neumann_eigen(&g, ModeIndex::new(2, 3)).unwrap();
        let (c, tau) = (1.7, 0.01);
        let x = spd_solve(&g, &vec![c; g.len()], tau, e.mode.values(), 1e-13, 500).unwrap();
        for (xi, ei) in x.iter().zip(e.mode.values()) {
            assert!((xi - ei / (c + tau * e.mu)).abs() <= 1e-11);
        }
    }

    #[test]
    fn variable_diagonal_residual() {
        let g = Grid::line(64, 1.0).unwrap();
        let d: Vec<f64> = (0..64).map(|i| 1e-6 + (i % 5) as f64).collect();
        let b: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let tau = 0.3;
        let x = spd_solve(&g, &d, tau, &b, 1e-12, 1000).unwrap();
        let mut lap = vec![0.0; 64];
        let mut ax = vec![0.0; 64];
        apply(&g, &d, tau, &x, &mut lap, &mut ax);
        let res: f64 = ax
            .iter()
            .zip(&b)
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-11 * dot(&b, &b).sqrt());
    }

    #[test]
    fn rejects_non_positive_diagonal_and_reports_non_convergence() {
        let g = Grid::line(16, 1.0).unwrap();
        let b = vec![1.0; 16];
        assert!(spd_solve(&g, &[0.0; 16], 1.0, &b, 1e-10, 10).is_err());
        let d: Vec<f64> = (0..16).map(|i| 1e-8 + i as f64).collect();
        let b: Vec<f64> = (0..16).map(|i| (i as f64).sin()).collect();
        assert!(matches!(
            spd_solve(&g, &d, 10.0, &b, 1e-15, 1),
            Err(SpatialError::NotConverged { .. })
        ));
    }
}
