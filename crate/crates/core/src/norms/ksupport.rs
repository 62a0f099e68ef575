//! k-support norm: evaluation, dual, and ball projection.
//!
//! The ball projection solves the Lagrangian form, i.e. the proximal map of
//! `(1/2β)‖·‖²` for the k-support norm (sorted closed form), and bisects on
//! `β` until the result sits on the sphere of the requested radius. Every
//! projection is certified by the Frank–Wolfe duality gap over the atom set
//! `{radius·u : ‖u‖₀ ≤ k, ‖u‖₂ = 1}`; if the certificate fails, fully
//! corrective Frank–Wolfe polishes the point.

use crate::linalg::{dot, norm2};
use crate::norms::l1::project_l1_ball;

/// Target Frank–Wolfe duality gap for a projection of `w`.
pub fn gap_tolerance(w: &[f64]) -> f64 {
    1e-8 * (1.0 + dot(w, w))
}

fn sorted_magnitudes(v: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    let z = order.iter().map(|&i| v[i].abs()).collect();
    (order, z)
}

pub fn ksupport_norm(v: &[f64], k: usize) -> f64 {
    let (_, z) = sorted_magnitudes(v);
    norm_of_sorted(&z, k)
}

/// Norm of a nonnegative, nonincreasing vector.
fn norm_of_sorted(z: &[f64], k: usize) -> f64 {
    let d = z.len();
    let k = k.min(d);
    if d == 0 {
        return 0.0;
    }
    let mut tail = vec![0.0; d + 1];
    for i in (0..d).rev() {
        tail[i] = tail[i + 1] + z[i];
    }
    let mut head_sq = vec![0.0; d + 1];
    for i in 0..d {
        head_sq[i + 1] = head_sq[i] + z[i] * z[i];
    }
    let value = |start: usize, r: usize| {
        let t = tail[start];
        (head_sq[start] + t * t / (r + 1) as f64).sqrt()
    };

    let mut best = (f64::INFINITY, 0usize, 0usize);
    for r in 0..k {
        let start = k - r - 1;
        let avg = tail[start] / (r + 1) as f64;
        let upper = if start == 0 { f64::INFINITY } else { z[start - 1] };
        if upper > avg && avg >= z[start] {
            return value(start, r);
        }
        let violation = (avg - upper).max(0.0) + (z[start] - avg).max(0.0);
        if violation < best.0 {
            best = (violation, start, r);
        }
    }
    // only reachable through rounding at ties
    value(best.1, best.2)
}

/// Dual norm: ℓ₂ norm of the k largest magnitudes.
pub fn ksupport_dual_norm(v: &[f64], k: usize) -> f64 {
    let (_, z) = sorted_magnitudes(v);
    z.iter().take(k).map(|x| x * x).sum::<f64>().sqrt()
}

/// Proximal map of `(1/2β)‖·‖²` (squared k-support norm) for a nonnegative,
/// nonincreasing input.
fn prox_squared_sorted(z: &[f64], k: usize, beta: f64) -> Vec<f64> {
    let d = z.len();
    let mut prefix = vec![0.0; d + 1];
    for i in 0..d {
        prefix[i + 1] = prefix[i] + z[i];
    }
    // 1-based access with z_0 = +∞ and z_{d+1} = −∞
    let at = |i: usize| -> f64 {
        if i == 0 {
            f64::INFINITY
        } else if i > d {
            f64::NEG_INFINITY
        } else {
            z[i - 1]
        }
    };
    let shrink = beta / (beta + 1.0);

    let mut best = (f64::INFINITY, 0usize, k, 0.0f64);
    'search: for r in 0..k {
        for l in k..=d {
            let denom = (l - k) as f64 + (beta + 1.0) * r as f64 + beta + 1.0;
            let c = (prefix[l] - prefix[k - r - 1]) / denom;
            let hi1 = at(k - r - 1) / (beta + 1.0);
            let lo1 = at(k - r) / (beta + 1.0);
            let violation = (c - hi1).max(0.0)
                + (lo1 - c).max(0.0)
                + (c - at(l)).max(0.0)
                + (at(l + 1) - c).max(0.0);
            if violation < best.0 {
                best = (violation, r, l, c);
                if violation == 0.0 {
                    break 'search;
                }
            }
        }
    }
    let (_, r, l, c) = best;
    (0..d)
        .map(|i| {
            let one_based = i + 1;
            if one_based + r < k {
                shrink * z[i]
            } else if one_based <= l {
                (z[i] - c).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

fn norm_of_unsorted_nonneg(q: &[f64], k: usize) -> f64 {
    let mut z = q.to_vec();
    z.sort_unstable_by(|a, b| b.total_cmp(a));
    norm_of_sorted(&z, k)
}

/// A projected point with its Frank–Wolfe certificate.
#[derive(Debug, Clone)]
pub struct KSupportProjection {
    pub point: Vec<f64>,
    pub gap: f64,
}

/// Euclidean projection of `w` onto `{x : ‖x‖_k^sp ≤ radius}`.
pub fn project_ksupport_ball(w: &[f64], k: usize, radius: f64) -> KSupportProjection {
    let d = w.len();
    if radius <= 0.0 {
        return KSupportProjection {
            point: vec![0.0; d],
            gap: 0.0,
        };
    }
    let (order, z) = sorted_magnitudes(w);
    if norm_of_sorted(&z, k) <= radius {
        return KSupportProjection {
            point: w.to_vec(),
            gap: 0.0,
        };
    }

    let size = |beta: f64| norm_of_unsorted_nonneg(&prox_squared_sorted(&z, k, beta), k);
    let (mut lo, mut hi) = if size(1.0) >= radius {
        let mut hi = 1.0;
        let mut probe = 0.5;
        while probe > 1e-300 && size(probe) >= radius {
            hi = probe;
            probe *= 0.5;
        }
        (if probe > 1e-300 { probe } else { 0.0 }, hi)
    } else {
        let (mut lo, mut hi) = (1.0, 2.0);
        while hi < 1e300 && size(hi) < radius {
            lo = hi;
            hi *= 2.0;
        }
        (lo, hi)
    };
    for _ in 0..200 {
        if hi - lo <= 1e-16 * hi {
            break;
        }
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if mid <= lo || mid >= hi {
            break;
        }
        if size(mid) < radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut q = prox_squared_sorted(&z, k, lo);
    let nq = norm_of_unsorted_nonneg(&q, k);
    if nq > radius {
        let f = radius / nq;
        q.iter_mut().for_each(|x| *x *= f);
    }
    let mut point = vec![0.0; d];
    for (pos, &i) in order.iter().enumerate() {
        point[i] = w[i].signum() * q[pos];
    }

    let gap = frank_wolfe_gap(w, &point, k, radius);
    let tol = gap_tolerance(w);
    if gap <= tol {
        return KSupportProjection { point, gap };
    }
    let polished = frank_wolfe_project(w, k, radius, tol, 10_000);
    if polished.gap < gap {
        KSupportProjection {
            point: polished.point,
            gap: polished.gap,
        }
    } else {
        KSupportProjection { point, gap }
    }
}

/// Frank–Wolfe duality gap of a feasible `x` for `min ½‖x − w‖²` over the
/// k-support ball: `⟨x − w, x⟩ + radius·‖x − w‖_(k)`.
pub fn frank_wolfe_gap(w: &[f64], x: &[f64], k: usize, radius: f64) -> f64 {
    let g: Vec<f64> = x.iter().zip(w).map(|(a, b)| a - b).collect();
    (dot(&g, x) + radius * ksupport_dual_norm(&g, k)).max(0.0)
}

/// Support of the atom minimizing `⟨g, s⟩`: the `k` largest `|gᵢ|`, sorted.
fn lmo_support(g: &[f64], k: usize) -> Vec<usize> {
    let (order, _) = sorted_magnitudes(g);
    let mut support: Vec<usize> = order.into_iter().take(k).collect();
    support.sort_unstable();
    support
}

#[derive(Debug, Clone)]
pub struct FrankWolfeOutcome {
    pub point: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
}

/// Fully corrective Frank–Wolfe for the k-support ball projection.
///
/// The ball is the convex hull of radius-`radius` Euclidean balls on
/// `k`-subsets, so the iterate is kept as latent blocks `v_S`, one per
/// support returned by the oracle, with `Σ‖v_S‖ ≤ radius`. Each outer step
/// adds a support and re-solves the restricted latent problem. Stops at
/// duality gap `tol` or after `max_iter` outer steps.
pub fn frank_wolfe_project(
    w: &[f64],
    k: usize,
    radius: f64,
    tol: f64,
    max_iter: usize,
) -> FrankWolfeOutcome {
    let d = w.len();
    let mut supports: Vec<Vec<usize>> = Vec::new();
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    let mut x = vec![0.0; d];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let g: Vec<f64> = x.iter().zip(w).map(|(a, b)| a - b).collect();
        gap = frank_wolfe_gap(w, &x, k, radius);
        if gap <= tol || radius <= 0.0 {
            break;
        }
        iterations += 1;
        let support = lmo_support(&g, k);
        if !supports.contains(&support) {
            supports.push(support);
            blocks.push(vec![0.0; k]);
        }
        correct_blocks(&supports, &mut blocks, w, radius);
        x = assemble(&supports, &blocks, d);
    }
    FrankWolfeOutcome {
        point: x,
        gap,
        iterations,
    }
}

fn assemble(supports: &[Vec<usize>], blocks: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut x = vec![0.0; d];
    for (s, b) in supports.iter().zip(blocks) {
        for (&i, &v) in s.iter().zip(b) {
            x[i] += v;
        }
    }
    x
}

/// Accelerated projected gradient on `½‖Σ E_S v_S − w‖²` subject to
/// `Σ‖v_S‖ ≤ radius`, warm-started from `blocks`, with gradient restarts.
fn correct_blocks(supports: &[Vec<usize>], blocks: &mut [Vec<f64>], w: &[f64], radius: f64) {
    let d = w.len();
    let mut multiplicity = vec![0usize; d];
    for s in supports {
        for &i in s {
            multiplicity[i] += 1;
        }
    }
    let lipschitz = *multiplicity.iter().max().unwrap_or(&1) as f64;

    let mut current = blocks.to_vec();
    let mut y = current.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let resid: Vec<f64> = assemble(supports, &y, d)
            .iter()
            .zip(w)
            .map(|(a, b)| a - b)
            .collect();
        let stepped: Vec<Vec<f64>> = supports
            .iter()
            .zip(&y)
            .map(|(s, b)| s.iter().zip(b).map(|(&i, &v)| v - resid[i] / lipschitz).collect())
            .collect();
        let next = project_group_l1(stepped, radius);
        let mut moved = 0.0f64;
        let mut restart = 0.0;
        for ((n, c), yb) in next.iter().zip(&current).zip(&y) {
            for ((a, b), yy) in n.iter().zip(c).zip(yb) {
                moved = moved.max((a - b).abs());
                restart += (yy - a) * (a - b);
            }
        }
        let t_next = if restart > 0.0 {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        let coef = if restart > 0.0 { 0.0 } else { (t - 1.0) / t_next };
        y = next
            .iter()
            .zip(&current)
            .map(|(n, c)| n.iter().zip(c).map(|(a, b)| a + coef * (a - b)).collect())
            .collect();
        current = next;
        t = t_next;
        if moved <= 1e-16 {
            break;
        }
    }
    blocks.clone_from_slice(&current);
}

/// Projects blocks so that the sum of their Euclidean norms is at most `radius`.
fn project_group_l1(mut blocks: Vec<Vec<f64>>, radius: f64) -> Vec<Vec<f64>> {
    let norms: Vec<f64> = blocks.iter().map(|b| norm2(b)).collect();
    let shrunk = project_l1_ball(&norms, radius);
    for ((b, &n), &m) in blocks.iter_mut().zip(&norms).zip(&shrunk) {
        if n > 0.0 {
            let f = m / n;
            b.iter_mut().for_each(|x| *x *= f);
        }
    }
    blocks
}
