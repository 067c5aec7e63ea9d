//! Small dense solves for moment corrections and least-squares fits.

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col] == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let m = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Ordinary least squares via the normal equations. Returns the
/// coefficients and R².
pub fn least_squares<const P: usize>(rows: &[[f64; P]], y: &[f64]) -> Option<([f64; P], f64)> {
    let mut ata = [[0.0; P]; P];
    let mut aty = [0.0; P];
    for (r, &yi) in rows.iter().zip(y) {
        for i in 0..P {
            aty[i] += r[i] * yi;
            for j in 0..P {
                ata[i][j] += r[i] * r[j];
            }
        }
    }
    let c = solve_dense(ata, aty)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &yi)| (yi - (0..P).map(|i| c[i] * r[i]).sum::<f64>()).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((c, r2))
}
