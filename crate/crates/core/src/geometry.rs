//! Sampled estimates of the error-cone geometry: cone directions, the
//! pairwise angle constant δ, structural coherence ρ, the restricted
//! eigenvalue κ, Gaussian widths, and incoherence quantities of rotations.
//!
//! ρ̂ and κ̂ are minima over sampled tuples and so overestimate the true
//! infima; δ̂ is a maximum over sampled pairs and underestimates the supremum.

use rand::seq::index::sample;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2, svd, DenseMatrix};
use crate::norms::ComponentSpec;
use crate::random::{flat_dirichlet, gaussian_vec, seeded_rng, substream};

/// Draw budget per requested sample in the constructive sampler.
const DRAWS_PER_SAMPLE: usize = 50;
const MIN_STEP: f64 = 1e-12;
const ANCHOR_SLACK: f64 = 1e-8;
const GOLDEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSample {
    pub direction: Vec<f64>,
    pub component_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryReport {
    /// Upper estimate of ρ.
    pub rho_hat: f64,
    /// Lower estimate of δ; absent for a single cone.
    pub delta_hat: Option<f64>,
    /// Upper estimate of κ; absent without a design.
    pub kappa_hat: Option<f64>,
    pub num_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WidthMethod {
    SubspaceExact,
    ConeSampledSup,
    L1NormalConeDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WidthEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: WidthMethod,
    pub draws: usize,
}

/// A cone given by its norm ball and the anchor `θ*` it is attached to.
pub type Cone = (ComponentSpec, Vec<f64>);

fn check_anchor(spec: &ComponentSpec, anchor: &[f64]) -> Result<()> {
    check_len("anchor length", spec.dim(), anchor.len())?;
    let value = spec.eval(anchor)?;
    if value > spec.radius() * (1.0 + ANCHOR_SLACK) + 1e-300 {
        return Err(Error::InvalidArgument(format!(
            "anchor norm {value} exceeds radius {}",
            spec.radius()
        )));
    }
    Ok(())
}

/// Unit directions of the error cone at `anchor`, obtained as normalized
/// differences `Π(anchor + spread·g) − anchor` with `g` standard Gaussian.
pub fn sample_cone_directions(
    spec: &ComponentSpec,
    anchor: &[f64],
    count: usize,
    spread: f64,
    seed: u64,
) -> Result<Vec<ConeSample>> {
    check_anchor(spec, anchor)?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidArgument(format!("spread must be positive, got {spread}")));
    }
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    let budget = DRAWS_PER_SAMPLE * count;
    for _ in 0..budget {
        let g = gaussian_vec(&mut rng, anchor.len());
        let moved: Vec<f64> = anchor.iter().zip(&g).map(|(a, x)| a + spread * x).collect();
        if let Some(direction) = constructive_direction(spec, anchor, &moved)? {
            out.push(ConeSample {
                direction,
                component_index: 0,
            });
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(Error::InsufficientSamples {
        accepted: out.len(),
        requested: count,
        draws: budget,
    })
}

fn constructive_direction(
    spec: &ComponentSpec,
    anchor: &[f64],
    moved: &[f64],
) -> Result<Option<Vec<f64>>> {
    let u = spec.project(moved)?;
    let mut delta: Vec<f64> = u.iter().zip(anchor).map(|(a, b)| a - b).collect();
    let len = norm2(&delta);
    if len < MIN_STEP {
        return Ok(None);
    }
    delta.iter_mut().for_each(|x| *x /= len);
    Ok(Some(delta))
}

fn default_spread(spec: &ComponentSpec) -> f64 {
    let s = 0.5 * spec.radius();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn sample_all(cones: &[Cone], count: usize, seed: u64) -> Result<Vec<Vec<Vec<f64>>>> {
    cones
        .iter()
        .enumerate()
        .map(|(i, (spec, anchor))| {
            let samples =
                sample_cone_directions(spec, anchor, count, default_spread(spec), substream(seed, i as u64))?;
            Ok(samples.into_iter().map(|s| s.direction).collect())
        })
        .collect()
}

/// δ̂ from explicit unit directions per cone. For each cone `i` pairs every
/// `u` with a normalized positive combination `v` of one direction from
/// each other cone and returns `max −⟨u, v⟩`.
pub fn delta_from_directions(per_cone: &[Vec<Vec<f64>>], seed: u64) -> Result<f64> {
    if per_cone.len() < 2 {
        return Err(Error::InvalidArgument("δ needs at least two cones".into()));
    }
    if per_cone.iter().any(|c| c.is_empty()) {
        return Err(Error::DegenerateCone("a cone has no directions".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut best = f64::NEG_INFINITY;
    for (i, own) in per_cone.iter().enumerate() {
        let others: Vec<&Vec<Vec<f64>>> =
            per_cone.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c).collect();
        let vs: Vec<Vec<f64>> = if others.len() == 1 {
            others[0].clone()
        } else {
            let count = others.iter().map(|c| c.len()).max().unwrap_or(0);
            (0..count)
                .filter_map(|t| {
                    let w = flat_dirichlet(&mut rng, others.len());
                    let mut v = vec![0.0; own[0].len()];
                    for (c, wi) in others.iter().zip(&w) {
                        for (x, y) in v.iter_mut().zip(&c[t % c.len()]) {
                            *x += wi * y;
                        }
                    }
                    let len = norm2(&v);
                    (len >= MIN_STEP).then(|| v.into_iter().map(|x| x / len).collect())
                })
                .collect()
        };
        for u in own {
            for v in &vs {
                best = best.max(-dot(u, v));
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::DegenerateCone("no usable direction pairs".into()));
    }
    Ok(best.clamp(-1.0, 1.0))
}

pub fn estimate_delta(cones: &[Cone], samples_per_cone: usize, seed: u64) -> Result<f64> {
    if cones.len() < 2 {
        return Err(Error::InvalidArgument("δ needs at least two cones".into()));
    }
    let per_cone = sample_all(cones, samples_per_cone, seed)?;
    delta_from_directions(&per_cone, substream(seed, u64::MAX))
}

/// `Σ wᵢΔᵢ` for each tuple, with `Δᵢ` the `t`-th direction of cone `i` and
/// `w` flat Dirichlet, so that `Σ‖wᵢΔᵢ‖₂ = 1`.
pub fn tuple_sums(per_cone: &[Vec<Vec<f64>>], tuples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if per_cone.iter().any(|c| c.is_empty()) {
        return Err(Error::DegenerateCone("a cone has no directions".into()));
    }
    let k = per_cone.len();
    let dim = per_cone[0][0].len();
    let mut rng = seeded_rng(seed);
    Ok((0..tuples)
        .map(|t| {
            let w = flat_dirichlet(&mut rng, k);
            let mut v = vec![0.0; dim];
            for (c, wi) in per_cone.iter().zip(&w) {
                for (x, y) in v.iter_mut().zip(&c[t % c.len()]) {
                    *x += wi * y;
                }
            }
            v
        })
        .collect())
}

/// ρ̂ from explicit directions: the smallest `‖Σ wᵢΔᵢ‖₂` over the tuples.
pub fn rho_from_directions(per_cone: &[Vec<Vec<f64>>], tuples: usize, seed: u64) -> Result<f64> {
    if per_cone.len() == 1 {
        return Ok(1.0);
    }
    let sums = tuple_sums(per_cone, tuples, seed)?;
    Ok(sums.iter().map(|v| norm2(v)).fold(f64::INFINITY, f64::min))
}

pub fn estimate_rho(cones: &[Cone], tuples: usize, seed: u64) -> Result<f64> {
    validate_tuples(cones, tuples)?;
    if cones.len() == 1 {
        return Ok(1.0);
    }
    let per_cone = sample_all(cones, tuples, seed)?;
    rho_from_directions(&per_cone, tuples, substream(seed, u64::MAX - 1))
}

/// κ̂ = min `(1/√n)‖X·Σ wᵢΔᵢ‖₂` over the same tuples as [`estimate_rho`].
pub fn estimate_kappa(design: &DenseMatrix, cones: &[Cone], tuples: usize, seed: u64) -> Result<f64> {
    validate_tuples(cones, tuples)?;
    for (spec, _) in cones {
        check_len("design columns vs cone dimension", design.cols(), spec.dim())?;
    }
    let per_cone = sample_all(cones, tuples, seed)?;
    let sums = tuple_sums(&per_cone, tuples, substream(seed, u64::MAX - 1))?;
    let scale = (design.rows() as f64).sqrt();
    let mut best = f64::INFINITY;
    for v in &sums {
        best = best.min(norm2(&design.matvec(v)?) / scale);
    }
    Ok(best)
}

fn validate_tuples(cones: &[Cone], tuples: usize) -> Result<()> {
    if cones.is_empty() {
        return Err(Error::InvalidArgument("at least one cone is required".into()));
    }
    if tuples == 0 {
        return Err(Error::InvalidArgument("tuples must be at least 1".into()));
    }
    Ok(())
}

/// All three estimates from one call; δ̂ only when there are two or more
/// cones and κ̂ only when a design is given.
pub fn geometry_report(
    cones: &[Cone],
    design: Option<&DenseMatrix>,
    samples: usize,
    seed: u64,
) -> Result<GeometryReport> {
    let rho_hat = estimate_rho(cones, samples, seed)?;
    let delta_hat = if cones.len() >= 2 {
        Some(estimate_delta(cones, samples, seed)?)
    } else {
        None
    };
    let kappa_hat = design
        .map(|x| estimate_kappa(x, cones, samples, seed))
        .transpose()?;
    Ok(GeometryReport {
        rho_hat,
        delta_hat,
        kappa_hat,
        num_samples: samples,
        seed,
    })
}

/// `(1/k)·√((1 − δ)/2)`.
pub fn rho_from_delta(delta: f64, k: usize) -> Result<f64> {
    if !(delta.abs() <= 1.0) || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "need |δ| ≤ 1 and k ≥ 1, got δ = {delta}, k = {k}"
        )));
    }
    Ok(((1.0 - delta) / 2.0).sqrt() / k as f64)
}

/// Two-cone constant `√((1 − δ)/2)`.
pub fn pairwise_bound(delta: f64) -> Result<f64> {
    if !(-1.0..1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("need −1 ≤ δ < 1, got {delta}")));
    }
    Ok(((1.0 - delta) / 2.0).sqrt())
}

/// `E‖g‖₂` for `g ~ N(0, I_dim)`.
pub fn gaussian_width_subspace(dim: usize, ambient: usize) -> Result<WidthEstimate> {
    if dim == 0 || dim > ambient {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ dim ≤ ambient, got dim = {dim}, ambient = {ambient}"
        )));
    }
    let d = dim as f64;
    let value = 2f64.sqrt() * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp();
    Ok(WidthEstimate {
        value,
        std_error: 0.0,
        method: WidthMethod::SubspaceExact,
        draws: 0,
    })
}

/// Monte-Carlo width of the cone cap, lower biased.
///
/// Each Gaussian draw `g` is scored against a fixed pool of sampled cone
/// directions plus the constructive directions obtained from `g` itself at
/// spreads `s, s/10, s/100, s/1000`; the score is `max(0, max ⟨g, u⟩)`.
pub fn gaussian_width_cone_mc(
    spec: &ComponentSpec,
    anchor: &[f64],
    gaussian_draws: usize,
    directions_per_draw: usize,
    seed: u64,
) -> Result<WidthEstimate> {
    if gaussian_draws == 0 || directions_per_draw == 0 {
        return Err(Error::InvalidArgument("draw counts must be at least 1".into()));
    }
    let spread = default_spread(spec);
    let pool = sample_cone_directions(spec, anchor, directions_per_draw, spread, substream(seed, 0))?;
    let mut rng = seeded_rng(substream(seed, 1));
    let mut scores = Vec::with_capacity(gaussian_draws);
    for _ in 0..gaussian_draws {
        let g = gaussian_vec(&mut rng, anchor.len());
        let mut best = 0.0f64;
        for s in &pool {
            best = best.max(dot(&g, &s.direction));
        }
        let mut t = spread;
        for _ in 0..4 {
            let moved: Vec<f64> = anchor.iter().zip(&g).map(|(a, x)| a + t * x).collect();
            if let Some(u) = constructive_direction(spec, anchor, &moved)? {
                best = best.max(dot(&g, &u));
            }
            t /= 10.0;
        }
        scores.push(best);
    }
    let (mean, se) = mean_and_std_error(&scores);
    Ok(WidthEstimate {
        value: mean,
        std_error: se,
        method: WidthMethod::ConeSampledSup,
        draws: gaussian_draws,
    })
}

fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `√(E dist²(g, cone(∂‖·‖₁(anchor))))`, an upper bound on the width of the
/// ℓ₁ error cone at an `s`-sparse anchor.
pub fn width_upper_bound_l1_cone(
    sparsity: usize,
    p: usize,
    anchor: &[f64],
    gaussian_draws: usize,
    seed: u64,
) -> Result<WidthEstimate> {
    check_len("anchor length", p, anchor.len())?;
    if sparsity == 0 || sparsity > p {
        return Err(Error::InvalidArgument(format!("need 1 ≤ s ≤ p, got s = {sparsity}")));
    }
    let nnz = anchor.iter().filter(|x| **x != 0.0).count();
    if nnz != sparsity {
        return Err(Error::InvalidArgument(format!(
            "anchor has {nnz} nonzeros, expected {sparsity}"
        )));
    }
    if gaussian_draws == 0 {
        return Err(Error::InvalidArgument("gaussian_draws must be at least 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut dists = Vec::with_capacity(gaussian_draws);
    for _ in 0..gaussian_draws {
        let g = gaussian_vec(&mut rng, p);
        let h = |t: f64| -> f64 {
            anchor
                .iter()
                .zip(&g)
                .map(|(&a, &gi)| {
                    if a != 0.0 {
                        (gi - t * a.signum()).powi(2)
                    } else {
                        (gi.abs() - t).max(0.0).powi(2)
                    }
                })
                .sum()
        };
        let upper = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        dists.push(golden_section_min(h, 0.0, upper, GOLDEN_TOL));
    }
    let (mean, se) = mean_and_std_error(&dists);
    let value = mean.sqrt();
    let std_error = if value > 0.0 { se / (2.0 * value) } else { 0.0 };
    Ok(WidthEstimate {
        value,
        std_error,
        method: WidthMethod::L1NormalConeDistance,
        draws: gaussian_draws,
    })
}

/// Minimum value of a convex function on `[lo, hi]`, endpoints included.
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (f_lo, f_hi) = (f(lo), f(hi));
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2).min(f(0.5 * (lo + hi))).min(f_lo).min(f_hi)
}

/// `M = max |Q_ij|`.
pub fn mca_incoherence_m(q: &DenseMatrix) -> f64 {
    q.max_abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaEstimate {
    pub value: f64,
    /// False when subsets were sampled; the value is then a lower bound.
    pub exhaustive: bool,
}

/// Largest spectral norm over `s1 × s2` submatrices of `q`.
pub fn ksupport_sigma(q: &DenseMatrix, s1: usize, s2: usize, budget: usize, seed: u64) -> Result<SigmaEstimate> {
    let (rows, cols) = (q.rows(), q.cols());
    if s1 == 0 || s2 == 0 || s1 > rows || s2 > cols {
        return Err(Error::InvalidArgument(format!(
            "submatrix size {s1}×{s2} does not fit in {rows}×{cols}"
        )));
    }
    let count = binomial(rows, s1).saturating_mul(binomial(cols, s2));
    let spectral = |r: &[usize], c: &[usize]| -> Result<f64> {
        Ok(svd(&q.select(r, c))?.singular_values[0])
    };
    let mut best = 0.0f64;
    if count <= budget as u128 {
        let row_sets = combinations(rows, s1);
        let col_sets = combinations(cols, s2);
        for r in &row_sets {
            for c in &col_sets {
                best = best.max(spectral(r, c)?);
            }
        }
        return Ok(SigmaEstimate {
            value: best,
            exhaustive: true,
        });
    }
    let mut rng = seeded_rng(seed);
    for _ in 0..budget.max(1) {
        let mut r = sample(&mut rng, rows, s1).into_vec();
        let mut c = sample(&mut rng, cols, s2).into_vec();
        r.sort_unstable();
        c.sort_unstable();
        best = best.max(spectral(&r, &c)?);
    }
    Ok(SigmaEstimate {
        value: best,
        exhaustive: false,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
