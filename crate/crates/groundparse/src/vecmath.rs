//! Small dense-vector helpers shared by the model, parser, and trainer.

/// Dot product; panics in debug builds on length mismatch.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm. For one-dimensional vectors this is computed as `|x|`
/// directly, so normalizing a nonzero scalar yields exactly `1.0` or `-1.0`.
pub(crate) fn l2_norm(x: &[f64]) -> f64 {
    if x.len() == 1 {
        x[0].abs()
    } else {
        dot(x, x).sqrt()
    }
}

/// `a += s * b`.
pub(crate) fn scaled_add(a: &mut [f64], s: f64, b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += s * y;
    }
}

/// Cosine similarity; 0.0 when either vector is numerically zero.
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na < 1e-12 || nb < 1e-12 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}
