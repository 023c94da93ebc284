use nalgebra::DMatrix;

use crate::error::{CoreError, Result};

fn kernel(r2: f64) -> f64 {
    if r2 == 0.0 {
        0.0
    } else {
        0.5 * r2 * r2.ln()
    }
}

/// Thin-plate spline with an affine term, `φ(r) = r² ln r`, interpolating
/// exactly at the knots. The fit is linear in the knot values, so the
/// result is returned as a `targets × knots` weight matrix: the value at
/// target `t` is `Σ_i w[t][i] u_i`.
pub fn thin_plate_weights(knots: &[(f64, f64)], targets: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
    let n = knots.len();
    let m = n + 3;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            let (dx, dy) = (knots[i].0 - knots[j].0, knots[i].1 - knots[j].1);
            a[(i, j)] = kernel(dx * dx + dy * dy);
        }
        let affine = [1.0, knots[i].0, knots[i].1];
        for (k, &v) in affine.iter().enumerate() {
            a[(i, n + k)] = v;
            a[(n + k, i)] = v;
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(m, targets.len());
    for (t, &(x, y)) in targets.iter().enumerate() {
        for (i, &(kx, ky)) in knots.iter().enumerate() {
            let (dx, dy) = (x - kx, y - ky);
            rhs[(i, t)] = kernel(dx * dx + dy * dy);
        }
        rhs[(n, t)] = 1.0;
        rhs[(n + 1, t)] = x;
        rhs[(n + 2, t)] = y;
    }
    // The system matrix is symmetric, so the weights of target t are the
    // first n entries of A⁻¹ b(t).
    let solved = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CoreError::InvalidConfig("spline knots are collinear".into()))?;
    Ok((0..targets.len())
        .map(|t| (0..n).map(|i| solved[(i, t)]).collect())
        .collect())
}
