use crate::model::Stagger;

/// Splits `roots` into `n` contiguous sublists whose sizes differ by at most
/// one; the first `len % n` sublists get the extra item. `n` is clamped to 1.
pub fn partition_roots<T: Clone>(roots: &[T], n: usize) -> Vec<Vec<T>> {
    let n = n.max(1);
    let (base, extra) = (roots.len() / n, roots.len() % n);
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = base + usize::from(i < extra);
        out.push(roots[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Start delays in seconds: zeros when synchronized, `i * dwell / n` for
/// worker `i` when evenly offset.
pub fn stagger_offsets(n: usize, dwell_s: f64, mode: Stagger) -> Vec<f64> {
    let n = n.max(1);
    match mode {
        Stagger::Synchronized => vec![0.0; n],
        Stagger::EvenOffset => (0..n).map(|i| i as f64 * dwell_s.max(0.0) / n as f64).collect(),
    }
}
