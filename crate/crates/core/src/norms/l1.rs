//! ℓ₁ primitives: exact sort-based ball projection, soft thresholding, and the
//! one-sided directional derivative.

/// Euclidean projection onto `{x : ‖x‖₁ ≤ radius}`.
pub fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    if radius <= 0.0 {
        return vec![0.0; v.len()];
    }
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let tau = l1_threshold(v, radius);
    soft_threshold(v, tau)
}

/// Soft-threshold level `t ≥ 0` with `Σ max(|vᵢ| − t, 0) = radius`, assuming
/// `‖v‖₁ > radius > 0`.
pub(crate) fn l1_threshold(v: &[f64], radius: f64) -> f64 {
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (j + 1) as f64;
        if m > candidate {
            tau = candidate;
        } else {
            break;
        }
    }
    tau.max(0.0)
}

pub fn soft_threshold(v: &[f64], lambda: f64) -> Vec<f64> {
    v.iter()
        .map(|&x| x.signum() * (x.abs() - lambda).max(0.0))
        .collect()
}

/// `‖·‖₁′(anchor; d) = Σ_{supp} sign(anchorᵢ)dᵢ + Σ_{off supp} |dᵢ|`.
pub fn l1_directional_derivative(anchor: &[f64], d: &[f64]) -> f64 {
    anchor
        .iter()
        .zip(d)
        .map(|(&a, &di)| if a != 0.0 { a.signum() * di } else { di.abs() })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on the threshold level; independent of the sort-based path.
    fn bisection_projection(v: &[f64], radius: f64) -> Vec<f64> {
        let excess = |t: f64| v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>() - radius;
        let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        soft_threshold(v, 0.5 * (lo + hi))
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1_ball(&[3.0, 0.0], 1.0), vec![1.0, 0.0]);
        let p = project_l1_ball(&[2.0, 1.0], 1.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        assert_eq!(project_l1_ball(&[5.0, -3.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn projection_matches_bisection_oracle() {
        let v = [0.9, -2.5, 0.1, 1.7, -0.4, 3.3];
        for radius in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let a = project_l1_ball(&v, radius);
            let b = bisection_projection(&v, radius);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "radius {radius}: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[3.0, -3.0], 1.0), vec![2.0, -2.0]);
        assert_eq!(soft_threshold(&[0.5, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn directional_derivative_examples() {
        assert_eq!(l1_directional_derivative(&[1.0, 0.0], &[-1.0, 0.0]), -1.0);
        assert_eq!(l1_directional_derivative(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(l1_directional_derivative(&[1.0, 1.0], &[1.0, -1.0]), 0.0);
    }
}
