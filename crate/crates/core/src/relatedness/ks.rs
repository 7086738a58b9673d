/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|` over
/// two ascending extents. Extents with fewer than two values carry too
/// little information and score 1.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 || b.len() < 2 {
        return 1.0;
    }
    debug_assert!(a.is_sorted_by(|x, y| x <= y) && b.is_sorted_by(|x, y| x <= y));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Step both CDFs past the smallest remaining value, ties together.
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / n - j as f64 / m).abs());
    }
    sup.clamp(0.0, 1.0)
}
