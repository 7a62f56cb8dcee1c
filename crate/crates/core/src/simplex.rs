use crate::error::{Error, Result};

/// Euclidean projection onto the probability simplex `{x >= 0, sum x = 1}`.
///
/// Sort-based: find the largest `k` such that the `k` biggest entries stay
/// positive after a common shift, then clamp.
pub fn project_simplex(w: &[f64]) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::InvalidArgument("cannot project an empty vector".into()));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite entry in projection input".into()));
    }
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    Ok(w.iter().map(|&x| (x - tau).max(0.0)).collect())
}
