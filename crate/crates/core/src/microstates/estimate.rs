use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::matcore::{conjugated_diag, gue, haar_unitary, hs_ball_point, Mat, MatrixTuple, SelfAdjointMatrix};
use crate::rng::{mix, stream, Stream};
use crate::spectra::SpectralMeasure;

use super::member::{norms_within, MicrostateParams, WordChecker};
use super::spec::{Generator, TracialSpec};

/// Samples per parallel chunk; chunk `c` reads stream `c`.
pub const CHUNK: usize = 4096;
/// Smallest accepted sample count.
pub const MIN_SAMPLES: usize = 100;
/// Default number of `y`-candidates for relative estimates.
pub const DEFAULT_POOL: usize = 32;
/// Candidate draws allowed per requested pool slot.
pub const POOL_ATTEMPTS: usize = 20;

const POOL_TAG: u64 = 0x706f_6f6c;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    /// Uniform points of the λ-ball of radius `R√k` (which contains the
    /// operator-norm ball), counted when they land in the set.
    BallRejection,
    /// GUE proposals weighted by their inverse density.
    GaussianImportance,
    /// Ball rejection for `k < 3`, Gaussian importance otherwise.
    Auto,
}

impl Sampler {
    pub fn resolve(self, k: usize) -> Self {
        match self {
            Sampler::Auto if k < 3 => Sampler::BallRejection,
            Sampler::Auto => Sampler::GaussianImportance,
            s => s,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Sampler::BallRejection => "ball",
            Sampler::GaussianImportance => "gaussian",
            Sampler::Auto => "auto",
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball" => Ok(Sampler::BallRejection),
            "gaussian" => Ok(Sampler::GaussianImportance),
            "auto" => Ok(Sampler::Auto),
            _ => Err(Error::InvalidParameter(format!(
                "unknown sampler {s:?} (ball, gaussian, auto)"
            ))),
        }
    }
}

/// Monte Carlo estimate of `log λ(Γ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeEstimate {
    /// `-inf` when nothing was accepted.
    pub log_volume: f64,
    /// Delta-method standard error of `log_volume` (0 when `-inf`).
    pub stderr_log: f64,
    pub samples: usize,
    pub accepted: usize,
    pub method: Sampler,
    /// `log(vol(region)/N)`: with no acceptance the true value is below this
    /// at the usual confidence.
    pub upper_bound: Option<f64>,
    pub note: Option<String>,
}

impl VolumeEstimate {
    fn empty(samples: usize, method: Sampler, upper_bound: Option<f64>, note: Option<String>) -> Self {
        Self {
            log_volume: f64::NEG_INFINITY,
            stderr_log: 0.0,
            samples,
            accepted: 0,
            method,
            upper_bound,
            note,
        }
    }
}

/// GUE proposal variances `max(τ(X_i²), ε)`, or `(R/2)²` when the spec has
/// no second moments.
fn proposal_variances(spec: &TracialSpec, p: &MicrostateParams) -> Result<Vec<f64>> {
    match spec.second_moments() {
        Ok(v) => Ok(v.into_iter().map(|v| v.max(p.eps)).collect()),
        Err(Error::MissingTarget(_)) => Ok(vec![p.radius * p.radius / 4.0; spec.n()]),
        Err(e) => Err(e),
    }
}

/// Solves `a·x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for j in c..n {
                a[r][j] -= f * a[c][j];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let tail: f64 = (c + 1..n).map(|j| a[c][j] * x[j]).sum();
        x[c] = (b[c] - tail) / a[c][c];
    }
    Some(x)
}

/// Centers and variances of the Gaussian proposal.
///
/// Each `x_i` is drawn as `c_i + GUE(v_i)` with `c_i = α + Σ β_j y_j` the
/// best affine predictor of `X_i` from the `Y`s in `L²(τ)` and `v_i` the
/// residual variance (at least `ε`). Without `y` this is `τ(X_i) + GUE`.
/// Specs lacking second-order targets fall back to centered proposals.
fn gaussian_proposal(
    spec: &TracialSpec,
    p: &MicrostateParams,
    y: &[&Mat<f64>],
) -> Result<Vec<(Option<SelfAdjointMatrix<f64>>, f64)>> {
    let (n, m, k) = (spec.n(), y.len(), p.k);
    let fallback = || -> Result<Vec<(Option<SelfAdjointMatrix<f64>>, f64)>> {
        Ok(proposal_variances(spec, p)?.into_iter().map(|v| (None, v)).collect())
    };
    if p.l < 2 {
        return fallback();
    }
    let mut words: Vec<Vec<usize>> = Vec::new();
    for a in 0..n + m {
        words.push(vec![a]);
        for b in 0..n + m {
            words.push(vec![a, b]);
        }
    }
    let t = match spec.targets_for(&words) {
        Ok(t) => t,
        Err(Error::MissingTarget(_)) => return fallback(),
        Err(e) => return Err(e),
    };
    let w = n + m + 1;
    let mean = |a: usize| t[a * w];
    let cov = |a: usize, b: usize| t[a * w + 1 + b] - mean(a) * mean(b);
    let gram: Vec<Vec<f64>> = (0..m).map(|j| (0..m).map(|l| cov(n + j, n + l)).collect()).collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let rhs: Vec<f64> = (0..m).map(|j| cov(i, n + j)).collect();
        let beta = if m == 0 {
            vec![]
        } else {
            solve(gram.clone(), rhs.clone()).unwrap_or(vec![0.0; m])
        };
        let explained: f64 = beta.iter().zip(&rhs).map(|(b, r)| b * r).sum();
        let v = (cov(i, i) - explained).max(p.eps);
        let alpha = mean(i) - (0..m).map(|j| beta[j] * mean(n + j)).sum::<f64>();
        let mut c = Mat::scalar(k, Complex::new(alpha, 0.0));
        for (j, b) in beta.iter().enumerate() {
            c.add_scaled(y[j], Complex::new(*b, 0.0));
        }
        out.push((Some(SelfAdjointMatrix::hermitian_part(&c)), v));
    }
    Ok(out)
}

/// λ-ball radii of the rejection region. `‖x‖_op ≤ R` gives `‖x‖_HS ≤ R√k`;
/// with `l ≥ 2` the word `x_i²` also gives `‖x_i‖_HS < √(k(τ(X_i²) + ε))`.
fn sampling_radii(spec: &TracialSpec, p: &MicrostateParams) -> Result<Vec<f64>> {
    let kf = p.k as f64;
    let outer = p.radius * kf.sqrt();
    if p.l < 2 {
        return Ok(vec![outer; spec.n()]);
    }
    Ok(spec
        .second_moments()?
        .into_iter()
        .map(|t| outer.min((kf * (t + p.eps)).max(0.0).sqrt()))
        .collect())
}

/// `log` of the volume of the Euclidean ball of radius `r` in `d` dimensions.
pub fn log_ball_volume(d: usize, r: f64) -> f64 {
    let h = d as f64 / 2.0;
    h * PI.ln() + d as f64 * r.ln() - ln_gamma(h + 1.0)
}

enum Chunk {
    Count(usize),
    Weights(Vec<f64>),
}

fn check_y(spec: &TracialSpec, p: &MicrostateParams, y: &MatrixTuple<f64>) -> Result<()> {
    if y.arity() != spec.m() {
        return Err(Error::DimensionMismatch {
            expected: spec.m(),
            found: y.arity(),
        });
    }
    if y.arity() > 0 && y.dim() != p.k {
        return Err(Error::DimensionMismatch {
            expected: p.k,
            found: y.dim(),
        });
    }
    Ok(())
}

/// Whether `y` alone satisfies the `Y`-words and norm bounds of `spec`.
fn y_admissible(spec: &TracialSpec, p: &MicrostateParams, y: &[&Mat<f64>]) -> Result<bool> {
    let n = spec.n();
    let y_only = WordChecker::with_filter(spec, p, |w| w.iter().all(|&a| a >= n))?;
    let zero = Mat::zeros(p.k);
    let mut all: Vec<&Mat<f64>> = vec![&zero; n];
    all.extend(y);
    Ok(y_only.words_ok(&all) && norms_within(y, p.radius)?)
}

type Proposal = Vec<(Option<SelfAdjointMatrix<f64>>, f64)>;

/// Shared sampler: `x` counts when `(x, y)` is a joint microstate for some
/// `y` in `ys` (or `x` alone is one when `ys` is empty).
#[allow(clippy::too_many_arguments)]
fn volume_core(
    spec: &TracialSpec,
    p: &MicrostateParams,
    method: Sampler,
    ys: &[Vec<&Mat<f64>>],
    proposal: &Proposal,
    samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    let (n, k) = (spec.n(), p.k);
    let d = k * k;
    let radii = sampling_radii(spec, p)?;
    let log_region: f64 = radii.iter().map(|&r| log_ball_volume(d, r)).sum();
    let bound = Some(log_region - (samples as f64).ln());
    if n == 0 {
        return Ok(VolumeEstimate {
            log_volume: 0.0,
            stderr_log: 0.0,
            samples,
            accepted: samples,
            method,
            upper_bound: None,
            note: None,
        });
    }
    let checker = WordChecker::with_filter(spec, p, |w| w.iter().any(|&a| a < n))?;
    let kf = k as f64;
    let log_norm: f64 = proposal
        .iter()
        .map(|(_, v)| 0.5 * d as f64 * (2.0 * PI * v / kf).ln())
        .sum();

    let chunks = samples.div_ceil(CHUNK);
    let results: Vec<Chunk> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Chunk> {
            let mut rng = stream(seed, c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0;
            let mut weights = Vec::new();
            for _ in 0..count {
                let mut quad = 0.0;
                let xs: Vec<SelfAdjointMatrix<f64>> = match method {
                    Sampler::GaussianImportance => proposal
                        .iter()
                        .map(|(c, v)| {
                            let g = gue(k, *v, &mut rng);
                            quad += kf * g.hs_norm_sqr() / (2.0 * v);
                            match c {
                                Some(c) => c.add(&g),
                                None => g,
                            }
                        })
                        .collect(),
                    _ => radii.iter().map(|&r| hs_ball_point(k, r, &mut rng)).collect(),
                };
                let x_mats: Vec<&Mat<f64>> = xs.iter().map(|x| x.as_mat()).collect();
                let inside = if ys.is_empty() {
                    checker.contains(&x_mats)?
                } else {
                    let mut hit = false;
                    for y in ys {
                        let mut mats = x_mats.clone();
                        mats.extend(y);
                        if checker.words_ok(&mats) {
                            hit = true;
                            break;
                        }
                    }
                    hit && norms_within(&x_mats, p.radius)?
                };
                if inside {
                    hits += 1;
                    if method == Sampler::GaussianImportance {
                        weights.push(log_norm + quad);
                    }
                }
            }
            Ok(match method {
                Sampler::GaussianImportance => Chunk::Weights(weights),
                _ => Chunk::Count(hits),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let nf = samples as f64;
    match method {
        Sampler::GaussianImportance => {
            let lw: Vec<f64> = results
                .into_iter()
                .flat_map(|c| match c {
                    Chunk::Weights(w) => w,
                    Chunk::Count(_) => vec![],
                })
                .collect();
            if lw.is_empty() {
                return Ok(VolumeEstimate::empty(samples, method, bound, None));
            }
            let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (mut s1, mut s2) = (0.0, 0.0);
            for w in &lw {
                let e = (w - top).exp();
                s1 += e;
                s2 += e * e;
            }
            let mean = s1 / nf;
            let var = (s2 / nf - mean * mean).max(0.0);
            Ok(VolumeEstimate {
                log_volume: top + mean.ln(),
                stderr_log: (var / nf).sqrt() / mean,
                samples,
                accepted: lw.len(),
                method,
                upper_bound: None,
                note: None,
            })
        }
        _ => {
            let hits: usize = results
                .iter()
                .map(|c| match c {
                    Chunk::Count(h) => *h,
                    Chunk::Weights(_) => 0,
                })
                .sum();
            if hits == 0 {
                return Ok(VolumeEstimate::empty(samples, method, bound, None));
            }
            let rate = hits as f64 / nf;
            Ok(VolumeEstimate {
                log_volume: log_region + rate.ln(),
                stderr_log: ((1.0 - rate) / hits as f64).sqrt(),
                samples,
                accepted: hits,
                method,
                upper_bound: None,
                note: None,
            })
        }
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// Estimates `log λ(Γ_R(X; k, l, ε))`, or with `y` the relative set
/// `Γ_R(X | y; k, l, ε)`. Without `y` only the `X`-marginal of `spec` is used.
pub fn estimate_volume(
    spec: &TracialSpec,
    p: &MicrostateParams,
    sampler: Sampler,
    y: Option<&MatrixTuple<f64>>,
    samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    check_samples(samples)?;
    p.check_spec(spec)?;
    let method = sampler.resolve(p.k);
    let Some(y) = y else {
        let x = spec.x_marginal()?;
        let proposal = match method {
            Sampler::GaussianImportance => gaussian_proposal(&x, p, &[])?,
            _ => vec![],
        };
        return volume_core(&x, p, method, &[], &proposal, samples, seed);
    };
    check_y(spec, p, y)?;
    let y_mats: Vec<&Mat<f64>> = y.mats().iter().map(|m| m.as_mat()).collect();
    if !y_admissible(spec, p, &y_mats)? {
        return Ok(VolumeEstimate::empty(
            samples,
            method,
            None,
            Some("y is not a microstate of Y, so the relative set is empty".into()),
        ));
    }
    let proposal = match method {
        Sampler::GaussianImportance => gaussian_proposal(spec, p, &y_mats)?,
        _ => vec![],
    };
    let ys = if y_mats.is_empty() { vec![] } else { vec![y_mats] };
    volume_core(spec, p, method, &ys, &proposal, samples, seed)
}

/// Estimates `log λ` of `∪_y Γ_R(X | y; k, l, ε)` over the admissible `y`
/// in `ys`: the part of the projection of `Γ_R(X, Y; k, l, ε)` onto the
/// `x`-coordinates that the pool reaches. The Gaussian proposal is the
/// unconditional one.
pub fn estimate_volume_union(
    spec: &TracialSpec,
    p: &MicrostateParams,
    sampler: Sampler,
    ys: &[MatrixTuple<f64>],
    samples: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    check_samples(samples)?;
    p.check_spec(spec)?;
    let method = sampler.resolve(p.k);
    let mut pool = Vec::new();
    for y in ys {
        check_y(spec, p, y)?;
        let mats: Vec<&Mat<f64>> = y.mats().iter().map(|m| m.as_mat()).collect();
        if y_admissible(spec, p, &mats)? {
            pool.push(mats);
        }
    }
    if pool.is_empty() {
        return Ok(VolumeEstimate::empty(
            samples,
            method,
            None,
            Some("no admissible y in the pool".into()),
        ));
    }
    let proposal = match method {
        Sampler::GaussianImportance => gaussian_proposal(&spec.x_marginal()?, p, &[])?,
        _ => vec![],
    };
    volume_core(spec, p, method, &pool, &proposal, samples, seed)
}

/// One matrix size of a χ estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiRow {
    pub k: usize,
    pub l: usize,
    pub eps: f64,
    pub radius: f64,
    pub samples: usize,
    pub log_volume: f64,
    pub stderr_log: f64,
    /// `(1/k²)·log λΓ + (n/2)·log k`.
    pub normalized: f64,
    /// `stderr_log / k²`.
    pub stderr: f64,
    pub n_over_2_log_k: f64,
    pub method: Sampler,
    pub upper_bound: Option<f64>,
    pub y_id: Option<String>,
}

/// Finite-`k` table standing in for the `lim sup` over `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiEstimate {
    pub n: usize,
    pub per_k: Vec<ChiRow>,
    /// `max_k (normalized - stderr)`, `-inf` when every row is.
    pub extrapolated: f64,
    /// Best `y`-candidate at the largest `k` with a finite value.
    pub y_used: Option<String>,
    pub diagnostic: Option<String>,
}

impl ChiEstimate {
    fn from_rows(n: usize, per_k: Vec<ChiRow>, diagnostic: Option<String>) -> Self {
        let extrapolated = per_k
            .iter()
            .filter(|r| r.normalized.is_finite())
            .map(|r| r.normalized - r.stderr)
            .fold(f64::NEG_INFINITY, f64::max);
        let y_used = per_k
            .iter()
            .rev()
            .find(|r| r.normalized.is_finite())
            .and_then(|r| r.y_id.clone());
        Self {
            n,
            per_k,
            extrapolated,
            y_used,
            diagnostic,
        }
    }

    /// Standard error attached to `extrapolated` (that of the maximizing row).
    pub fn extrapolated_stderr(&self) -> f64 {
        self.per_k
            .iter()
            .filter(|r| r.normalized.is_finite())
            .max_by(|a, b| (a.normalized - a.stderr).total_cmp(&(b.normalized - b.stderr)))
            .map_or(0.0, |r| r.stderr)
    }

    /// Largest one-sided upper bound over rows that are `-inf`, normalized.
    pub fn upper_bound(&self) -> Option<f64> {
        self.per_k
            .iter()
            .filter_map(|r| r.upper_bound.map(|u| u / (r.k * r.k) as f64 + r.n_over_2_log_k))
            .reduce(f64::max)
    }

    pub fn row(&self, k: usize) -> Option<&ChiRow> {
        self.per_k.iter().find(|r| r.k == k)
    }
}

fn check_k_list(k_list: &[usize]) -> Result<()> {
    if k_list.is_empty() || k_list.contains(&0) || k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "k list must be nonempty, positive and ascending: {k_list:?}"
        )));
    }
    Ok(())
}

/// Seed used at matrix size `k`; shared across `(l, ε, R)` so that sweeps
/// use common random numbers.
pub fn seed_for_k(seed: u64, k: usize) -> u64 {
    mix(seed, k as u64)
}

fn row(n: usize, p: &MicrostateParams, v: &VolumeEstimate, y_id: Option<String>) -> ChiRow {
    let k2 = (p.k * p.k) as f64;
    let half = 0.5 * n as f64 * (p.k as f64).ln();
    ChiRow {
        k: p.k,
        l: p.l,
        eps: p.eps,
        radius: p.radius,
        samples: v.samples,
        log_volume: v.log_volume,
        stderr_log: v.stderr_log,
        normalized: v.log_volume / k2 + half,
        stderr: v.stderr_log / k2,
        n_over_2_log_k: half,
        method: v.method,
        upper_bound: if v.log_volume.is_finite() { None } else { v.upper_bound },
        y_id,
    }
}

/// `χ_R(X; l, ε)` table over `k_list` for the `X`-letters of `spec`.
pub fn estimate_chi(
    spec: &TracialSpec,
    template: &MicrostateParams,
    k_list: &[usize],
    sampler: Sampler,
    samples: usize,
    seed: u64,
) -> Result<ChiEstimate> {
    check_k_list(k_list)?;
    let x = spec.x_marginal()?;
    let rows = k_list
        .iter()
        .map(|&k| {
            let p = template.with_k(k);
            let v = estimate_volume(&x, &p, sampler, None, samples, seed_for_k(seed, k))?;
            Ok(row(x.n(), &p, &v, None))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChiEstimate::from_rows(x.n(), rows, None))
}

/// `Σ c_j B^j` for a Hermitian `B`.
fn matrix_poly(b: &SelfAdjointMatrix<f64>, coeffs: &[f64]) -> SelfAdjointMatrix<f64> {
    let k = b.dim();
    let mut acc = Mat::zeros(k);
    let mut pow = Mat::identity(k);
    for (j, &c) in coeffs.iter().enumerate() {
        if j > 0 {
            pow = pow.matmul(b.as_mat());
        }
        if c != 0.0 {
            acc.add_scaled(&pow, Complex::new(c, 0.0));
        }
    }
    SelfAdjointMatrix::hermitian_part(&acc)
}

/// A `k×k` matrix whose spectral law approximates `law`: GUE for
/// semicircles, otherwise the `k` quantiles conjugated by a Haar unitary.
fn model_matrix(law: &SpectralMeasure, k: usize, rng: &mut Stream) -> Result<SelfAdjointMatrix<f64>> {
    Ok(match law {
        SpectralMeasure::Semicircle { variance } => gue(k, *variance, rng),
        _ => {
            let mut q = law.quantiles(k)?;
            q.shuffle(rng);
            conjugated_diag(&haar_unitary(k, rng), &q)
        }
    })
}

/// Draws up to `POOL_ATTEMPTS·pool` candidate `y`-tuples and keeps the first
/// `pool` that are microstates of the `Y`-marginal.
pub fn y_candidates(
    spec: &TracialSpec,
    p: &MicrostateParams,
    pool: usize,
    seed: u64,
) -> Result<Vec<(String, MatrixTuple<f64>)>> {
    let (n, m, k) = (spec.n(), spec.m(), p.k);
    let y_spec = spec.y_marginal()?;
    let checker = WordChecker::new(&y_spec, p)?;
    let mut rng = stream(seed, 0);
    let mut out = Vec::new();
    let accept = |t: MatrixTuple<f64>| -> Result<bool> {
        let mats: Vec<&Mat<f64>> = t.mats().iter().map(|x| x.as_mat()).collect();
        Ok(checker.contains(&mats)?)
    };
    match spec.generator() {
        Some(Generator::Matrix(mm)) => {
            let d = mm.mats[n].dim();
            if k % d == 0 {
                let mats = mm.mats[n..]
                    .iter()
                    .map(|x| SelfAdjointMatrix::new(x.as_mat().kron_identity(k / d)))
                    .collect::<Result<Vec<_>>>()?;
                let t = MatrixTuple::new(k, mats)?;
                if accept(t.clone())? {
                    out.push((format!("model(x)I_{}", k / d), t));
                }
            }
        }
        Some(Generator::Free(f)) => {
            let comps: Vec<usize> = {
                let mut c: Vec<usize> = f.letters[n..].iter().map(|l| l.component).collect();
                c.sort_unstable();
                c.dedup();
                c
            };
            for attempt in 0..POOL_ATTEMPTS * pool {
                if out.len() >= pool {
                    break;
                }
                let mut bases = std::collections::HashMap::new();
                for &c in &comps {
                    bases.insert(c, model_matrix(&f.components[c], k, &mut rng)?);
                }
                let mats = f.letters[n..]
                    .iter()
                    .map(|l| matrix_poly(&bases[&l.component], &l.poly))
                    .collect();
                let t = MatrixTuple::new(k, mats)?;
                if accept(t.clone())? {
                    out.push((format!("model#{attempt}"), t));
                }
            }
        }
        None => {
            let vars = proposal_variances(&y_spec, p)?;
            for attempt in 0..POOL_ATTEMPTS * pool {
                if out.len() >= pool {
                    break;
                }
                let mats = vars.iter().map(|&v| gue(k, v, &mut rng)).collect();
                let t = MatrixTuple::new(k, mats)?;
                if accept(t.clone())? {
                    out.push((format!("gue#{attempt}"), t));
                }
            }
        }
    }
    debug_assert!(out.iter().all(|(_, t)| t.arity() == m));
    Ok(out)
}

/// A `y`-candidate with a short description.
pub type Candidate = (String, MatrixTuple<f64>);

/// `χ_R(X | Y; l, ε)` table: at each `k` the largest relative volume over a
/// pool of `y`-microstates. With `m = 0` this is [`estimate_chi`].
#[allow(clippy::too_many_arguments)]
pub fn estimate_chi_relative(
    spec: &TracialSpec,
    template: &MicrostateParams,
    k_list: &[usize],
    sampler: Sampler,
    pool: usize,
    samples: usize,
    seed: u64,
) -> Result<ChiEstimate> {
    if spec.m() == 0 {
        return estimate_chi(spec, template, k_list, sampler, samples, seed);
    }
    if pool == 0 {
        return Err(Error::InvalidParameter("y pool size must be positive".into()));
    }
    estimate_chi_relative_with(spec, template, k_list, sampler, samples, seed, |p| {
        y_candidates(spec, p, pool, pool_seed(seed, p.k))
    })
}

/// Seed of the `y`-candidate draws at size `k`.
pub fn pool_seed(seed: u64, k: usize) -> u64 {
    mix(seed_for_k(seed, k), POOL_TAG)
}

/// [`estimate_chi_relative`] with caller-supplied candidates per `k`. All
/// candidates at one `k` share the `x`-samples.
pub fn estimate_chi_relative_with(
    spec: &TracialSpec,
    template: &MicrostateParams,
    k_list: &[usize],
    sampler: Sampler,
    samples: usize,
    seed: u64,
    mut pool: impl FnMut(&MicrostateParams) -> Result<Vec<Candidate>>,
) -> Result<ChiEstimate> {
    check_k_list(k_list)?;
    let n = spec.n();
    let mut rows = Vec::new();
    let mut empty_at = Vec::new();
    for &k in k_list {
        let p = template.with_k(k);
        let sk = seed_for_k(seed, k);
        let cands = pool(&p)?;
        let mut best: Option<(VolumeEstimate, String)> = None;
        for (id, y) in &cands {
            let v = estimate_volume(spec, &p, sampler, Some(y), samples, sk)?;
            if v.note.is_some() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((b, _)) => v.log_volume > b.log_volume,
            };
            if better {
                best = Some((v, id.clone()));
            }
        }
        match best {
            Some((v, id)) => rows.push(row(n, &p, &v, Some(id))),
            None => {
                empty_at.push(k);
                let v = VolumeEstimate::empty(samples, sampler.resolve(k), None, None);
                rows.push(row(n, &p, &v, None));
            }
        }
    }
    let diagnostic = (!empty_at.is_empty()).then(|| {
        format!(
            "no y-candidate is a microstate of Y at k = {empty_at:?}; the relative microstate set needs y in Γ_R(Y; k, l, ε), so the sup over y is empty there (-inf)"
        )
    });
    Ok(ChiEstimate::from_rows(n, rows, diagnostic))
}

/// `χ(X : Y)` table through [`estimate_volume_union`] over the candidates.
pub fn estimate_chi_presence_with(
    spec: &TracialSpec,
    template: &MicrostateParams,
    k_list: &[usize],
    sampler: Sampler,
    samples: usize,
    seed: u64,
    mut pool: impl FnMut(&MicrostateParams) -> Result<Vec<Candidate>>,
) -> Result<ChiEstimate> {
    check_k_list(k_list)?;
    let n = spec.n();
    let rows = k_list
        .iter()
        .map(|&k| {
            let p = template.with_k(k);
            let ys: Vec<MatrixTuple<f64>> = pool(&p)?.into_iter().map(|c| c.1).collect();
            let v = estimate_volume_union(spec, &p, sampler, &ys, samples, seed_for_k(seed, k))?;
            Ok(row(n, &p, &v, Some(format!("union of {} candidates", ys.len()))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChiEstimate::from_rows(n, rows, None))
}

/// `χ'(X | Y) ≈ χ(X, Y) − χ(Y)`, the `Y`-marginal run standing in for
/// `χ(Y : X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiPrime {
    pub value: f64,
    pub joint: ChiEstimate,
    pub y_marginal: Option<ChiEstimate>,
    /// `joint.normalized - y.normalized` per `k`.
    pub per_k: Vec<(usize, f64)>,
}

pub fn chi_prime(
    spec: &TracialSpec,
    template: &MicrostateParams,
    k_list: &[usize],
    sampler: Sampler,
    samples: usize,
    seed: u64,
) -> Result<ChiPrime> {
    let joint = estimate_chi(&spec.as_joint()?, template, k_list, sampler, samples, seed)?;
    if spec.m() == 0 {
        return Ok(ChiPrime {
            value: joint.extrapolated,
            per_k: joint.per_k.iter().map(|r| (r.k, r.normalized)).collect(),
            joint,
            y_marginal: None,
        });
    }
    let y = estimate_chi(&spec.y_marginal()?, template, k_list, sampler, samples, mix(seed, 1))?;
    // An empty joint window stays -inf even when the marginal is empty too.
    let diff = |a: f64, b: f64| if a == f64::NEG_INFINITY { a } else { a - b };
    let per_k = joint
        .per_k
        .iter()
        .zip(&y.per_k)
        .map(|(a, b)| (a.k, diff(a.normalized, b.normalized)))
        .collect();
    Ok(ChiPrime {
        value: diff(joint.extrapolated, y.extrapolated),
        joint,
        y_marginal: Some(y),
        per_k,
    })
}
