use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Coordinates on the top two principal components of the mean-centered
/// rows. Each component is signed so its largest-magnitude loading is
/// positive. Missing components (rank < 2) give zero coordinates.
pub fn project_2d(rows: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    if rows.len() < 2 {
        return Err(Error::Invalid(format!("projection needs at least 2 rows, got {}", rows.len())));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("projection rows must share a positive dimension".into()));
    }
    let n = rows.len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let scale = sv.iter().copied().fold(0.0, f64::max);
    let tol = scale * (n.max(d) as f64) * f64::EPSILON;

    let mut out = vec![[0.0; 2]; n];
    for (c, &k) in order.iter().take(2).enumerate() {
        if !(sv[k] > tol) {
            continue;
        }
        let mut v: Vec<f64> = v_t.row(k).iter().copied().collect();
        let lead = v
            .iter()
            .enumerate()
            .fold(0, |best, (j, x)| if x.abs() > v[best].abs() { j } else { best });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (i, o) in out.iter_mut().enumerate() {
            o[c] = (0..d).map(|j| x[(i, j)] * v[j]).sum();
        }
    }
    Ok(out)
}
