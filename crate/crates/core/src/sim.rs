//! Desk-scale Monte-Carlo simulation of the Rayleigh fading multiple access
//! channel: Y = sum_i kappa_i H_i X_i + W over finite restrictions of a
//! constructed code, with exhaustive joint maximum-likelihood decoding and
//! the bounded-distance failure event ||W|| >= d_min / 2.
//!
//! Per-trial random streams are derived from (seed, snr index, trial index),
//! so results are bit-identical regardless of how trials are scheduled.

use crate::code::MacCode;
use crate::error::{Error, Result};
use crate::par;
use crate::rng::Rng;
use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

type Cx = Complex<f64>;

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Per-user coordinate bound N_i.
    pub bounds: Vec<i64>,
    /// Receive antennas.
    pub nr: u32,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Cap on the product codebook size.
    pub codebook_cap: u128,
    pub jobs: usize,
}

impl SimConfig {
    pub fn new(bounds: Vec<i64>, nr: u32, snr_db: Vec<f64>, trials: u64, seed: u64) -> Self {
        SimConfig {
            bounds,
            nr,
            snr_db,
            trials,
            seed,
            codebook_cap: 1_000_000,
            jobs: par::default_jobs(),
        }
    }
}

/// One SNR point of a simulation run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub ml_errors: u64,
    pub ml_cer: f64,
    pub bd_failures: u64,
    pub bd_fail_rate: f64,
    /// 95% binomial half-width for the ML codeword error rate.
    pub ci_halfwidth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimResult {
    pub points: Vec<SimPoint>,
    /// Per-SNR d_min statistics over a subsample of fresh channel draws.
    pub dmin: Vec<DminSummary>,
}

/// Quantiles of the channel-dependent minimum distance at one SNR.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DminSummary {
    pub snr_db: f64,
    pub draws: u64,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// (probability, quantile) pairs.
    pub quantiles: Vec<(f64, f64)>,
}

/// Codebooks and difference books pushed through no channel yet.
struct Prepared {
    users: usize,
    nt: usize,
    k: usize,
    /// [user][word][nt * k] transmit matrices.
    blocks: Vec<Vec<Vec<Cx>>>,
    /// [user][diff][nt * k] difference matrices over L(2N), zero excluded.
    diffs: Vec<Vec<Vec<Cx>>>,
    /// Mean squared Frobenius norm per user codebook.
    energies: Vec<f64>,
}

fn enumerate_box(code: &MacCode, user: u32, bound: i64, skip_zero: bool) -> Vec<Vec<Cx>> {
    let dim = code.word_dim();
    let radix = (2 * bound + 1) as u128;
    let mut total: u128 = 1;
    for _ in 0..dim {
        total *= radix;
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut coords = vec![0i64; dim];
    for raw in 0..total {
        let mut rem = raw;
        for c in coords.iter_mut() {
            *c = (rem % radix) as i64 - bound;
            rem /= radix;
        }
        if skip_zero && coords.iter().all(|&c| c == 0) {
            continue;
        }
        let block = code.numeric_block(user, &coords);
        out.push(block.data().to_vec());
    }
    out
}

fn prepare(code: &MacCode, cfg: &SimConfig) -> Result<Prepared> {
    let users = code.users() as usize;
    if cfg.bounds.len() != users {
        return Err(Error::InvalidParameter("one bound per user".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let dim = code.word_dim();
    let mut product: u128 = 1;
    for &b in &cfg.bounds {
        let radix = (2 * b + 1) as u128;
        for _ in 0..dim {
            product = product.saturating_mul(radix);
        }
    }
    if product > cfg.codebook_cap {
        return Err(Error::CodebookTooLarge {
            size: product,
            cap: cfg.codebook_cap,
        });
    }
    let mut blocks = Vec::with_capacity(users);
    let mut diffs = Vec::with_capacity(users);
    let mut energies = Vec::with_capacity(users);
    for u in 1..=users as u32 {
        let b = enumerate_box(code, u, cfg.bounds[(u - 1) as usize], false);
        let energy = b
            .iter()
            .map(|m| m.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / b.len() as f64;
        let d = enumerate_box(code, u, 2 * cfg.bounds[(u - 1) as usize], true);
        blocks.push(b);
        diffs.push(d);
        energies.push(energy);
    }
    Ok(Prepared {
        users,
        nt: code.nt() as usize,
        k: code.block_len() as usize,
        blocks,
        diffs,
        energies,
    })
}

/// kappa H X for a block stored row-major (nt x k), H of shape nr x nt.
fn apply_channel(h: &[Cx], nr: usize, nt: usize, k: usize, kappa: f64, x: &[Cx], out: &mut [Cx]) {
    for r in 0..nr {
        for c in 0..k {
            let mut acc = Cx::zero();
            for t in 0..nt {
                acc += h[r * nt + t] * x[t * k + c];
            }
            out[r * k + c] = acc * kappa;
        }
    }
}

fn norm_sq(v: &[Cx]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Exact minimum distance min || sum_i kappa_i H_i Delta_i || over nonzero
/// difference tuples, given the per-user channel images of the differences.
fn d_min_from_images(images: &[Vec<(f64, Vec<Cx>)>]) -> f64 {
    match images.len() {
        1 => images[0]
            .iter()
            .map(|(n, _)| *n)
            .fold(f64::INFINITY, f64::min),
        2 => {
            // singles first
            let mut cur = f64::INFINITY;
            for side in images {
                for (n, _) in side {
                    cur = cur.min(*n);
                }
            }
            // sorted norms of the second user for the window scan
            let mut order: Vec<usize> = (0..images[1].len()).collect();
            order.sort_by(|&a, &b| images[1][a].0.partial_cmp(&images[1][b].0).unwrap());
            let norms: Vec<f64> = order.iter().map(|&i| images[1][i].0).collect();
            for (n1, v1) in &images[0] {
                // only v2 with | ||v1|| - ||v2|| | <= cur can matter
                let lo = norms.partition_point(|&x| x < n1 - cur);
                for idx in lo..norms.len() {
                    if norms[idx] > n1 + cur {
                        break;
                    }
                    let v2 = &images[1][order[idx]].1;
                    let mut s = 0.0f64;
                    for (a, b) in v1.iter().zip(v2) {
                        let re = a.re + b.re;
                        let im = a.im + b.im;
                        s += re * re + im * im;
                    }
                    let d = s.sqrt();
                    if d < cur {
                        cur = d;
                    }
                }
            }
            cur
        }
        _ => {
            // small products only: plain recursion over users
            fn rec(
                images: &[Vec<(f64, Vec<Cx>)>],
                depth: usize,
                partial: &[Cx],
                any: bool,
                cur: &mut f64,
            ) {
                if depth == images.len() {
                    if any {
                        let d = norm_sq(partial).sqrt();
                        if d < *cur {
                            *cur = d;
                        }
                    }
                    return;
                }
                // zero difference for this user
                rec(images, depth + 1, partial, any, cur);
                for (_, v) in &images[depth] {
                    let sum: Vec<Cx> = partial.iter().zip(v).map(|(a, b)| a + b).collect();
                    rec(images, depth + 1, &sum, true, cur);
                }
            }
            let len = images[0][0].1.len();
            let mut cur = f64::INFINITY;
            rec(images, 0, &vec![Cx::zero(); len], false, &mut cur);
            cur
        }
    }
}

/// Decides d_min <= threshold without computing the full minimum.
fn d_min_below(images: &[Vec<(f64, Vec<Cx>)>], threshold: f64) -> bool {
    for side in images {
        for (n, _) in side {
            if *n <= threshold {
                return true;
            }
        }
    }
    if images.len() == 2 {
        let mut order: Vec<usize> = (0..images[1].len()).collect();
        order.sort_by(|&a, &b| images[1][a].0.partial_cmp(&images[1][b].0).unwrap());
        let norms: Vec<f64> = order.iter().map(|&i| images[1][i].0).collect();
        for (n1, v1) in &images[0] {
            let lo = norms.partition_point(|&x| x < n1 - threshold);
            for idx in lo..norms.len() {
                if norms[idx] > n1 + threshold {
                    break;
                }
                let v2 = &images[1][order[idx]].1;
                let mut s = 0.0f64;
                for (a, b) in v1.iter().zip(v2) {
                    let re = a.re + b.re;
                    let im = a.im + b.im;
                    s += re * re + im * im;
                }
                if s.sqrt() <= threshold {
                    return true;
                }
            }
        }
        false
    } else {
        d_min_from_images(images) <= threshold
    }
}

fn draw_channels(rng: &mut Rng, users: usize, nr: usize, nt: usize) -> Vec<Vec<Cx>> {
    (0..users)
        .map(|_| {
            (0..nr * nt)
                .map(|_| {
                    let (a, b) = rng.complex_gaussian::<f64>();
                    Cx::new(a, b)
                })
                .collect()
        })
        .collect()
}

fn diff_images(
    prep: &Prepared,
    channels: &[Vec<Cx>],
    kappas: &[f64],
    nr: usize,
) -> Vec<Vec<(f64, Vec<Cx>)>> {
    let mut images = Vec::with_capacity(prep.users);
    for u in 0..prep.users {
        let mut per = Vec::with_capacity(prep.diffs[u].len());
        let mut buf = vec![Cx::zero(); nr * prep.k];
        for d in &prep.diffs[u] {
            apply_channel(&channels[u], nr, prep.nt, prep.k, kappas[u], d, &mut buf);
            per.push((norm_sq(&buf).sqrt(), buf.clone()));
        }
        images.push(per);
    }
    images
}

/// Runs the Monte-Carlo experiment: exhaustive joint ML decoding and the
/// bounded-distance failure event, per SNR point.
pub fn simulate(code: &MacCode, cfg: &SimConfig) -> Result<SimResult> {
    let prep = prepare(code, cfg)?;
    let nr = cfg.nr as usize;
    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let snr = 10f64.powf(snr_db / 10.0);
        let kappas: Vec<f64> = prep.energies.iter().map(|e| (snr / e).sqrt()).collect();
        let n_chunks = 64usize;
        let (ml_errors, bd_failures) = par::map_reduce(
            n_chunks,
            cfg.jobs,
            |chunk| {
                let lo = cfg.trials * chunk as u64 / n_chunks as u64;
                let hi = cfg.trials * (chunk as u64 + 1) / n_chunks as u64;
                let mut ml = 0u64;
                let mut bd = 0u64;
                for trial in lo..hi {
                    let (e, f) = run_trial(&prep, cfg, &kappas, nr, snr_idx as u64, trial);
                    ml += e as u64;
                    bd += f as u64;
                }
                (ml, bd)
            },
            |(a1, b1), (a2, b2)| (a1 + a2, b1 + b2),
            (0u64, 0u64),
        );
        let n = cfg.trials as f64;
        let p = ml_errors as f64 / n;
        points.push(SimPoint {
            snr_db,
            trials: cfg.trials,
            ml_errors,
            ml_cer: p,
            bd_failures,
            bd_fail_rate: bd_failures as f64 / n,
            ci_halfwidth: 1.96 * (p * (1.0 - p) / n).sqrt(),
        });
    }
    let dmin = dmin_summaries(&prep, cfg, cfg.trials.min(200))?;
    Ok(SimResult { points, dmin })
}

fn run_trial(
    prep: &Prepared,
    cfg: &SimConfig,
    kappas: &[f64],
    nr: usize,
    snr_idx: u64,
    trial: u64,
) -> (bool, bool) {
    let mut rng = Rng::stream(cfg.seed, &[snr_idx, trial]);
    // transmitted words
    let tx: Vec<usize> = prep
        .blocks
        .iter()
        .map(|b| (rng.next_u64() % b.len() as u64) as usize)
        .collect();
    let channels = draw_channels(&mut rng, prep.users, nr, prep.nt);
    let noise: Vec<Cx> = (0..nr * prep.k)
        .map(|_| {
            let (a, b) = rng.complex_gaussian::<f64>();
            Cx::new(a, b)
        })
        .collect();

    // per-user received candidates kappa_u H_u X
    let mut cands: Vec<Vec<Vec<Cx>>> = Vec::with_capacity(prep.users);
    let mut buf = vec![Cx::zero(); nr * prep.k];
    for u in 0..prep.users {
        let mut per = Vec::with_capacity(prep.blocks[u].len());
        for x in &prep.blocks[u] {
            apply_channel(&channels[u], nr, prep.nt, prep.k, kappas[u], x, &mut buf);
            per.push(buf.clone());
        }
        cands.push(per);
    }
    // received point
    let mut y = noise.clone();
    for (u, &t) in tx.iter().enumerate() {
        for (yi, ci) in y.iter_mut().zip(&cands[u][t]) {
            *yi += ci;
        }
    }
    // exhaustive joint ML over the product codebook
    let mut best_metric = f64::INFINITY;
    let mut best_tuple = vec![0usize; prep.users];
    let mut idx = vec![0usize; prep.users];
    let mut partials: Vec<Vec<Cx>> = vec![vec![Cx::zero(); nr * prep.k]; prep.users + 1];
    fn ml_rec(
        cands: &[Vec<Vec<Cx>>],
        y: &[Cx],
        depth: usize,
        idx: &mut [usize],
        partials: &mut [Vec<Cx>],
        best_metric: &mut f64,
        best_tuple: &mut [usize],
    ) {
        if depth == cands.len() {
            let m: f64 = partials[depth]
                .iter()
                .zip(y)
                .map(|(s, yy)| {
                    let re = yy.re - s.re;
                    let im = yy.im - s.im;
                    re * re + im * im
                })
                .sum();
            if m < *best_metric {
                *best_metric = m;
                best_tuple.copy_from_slice(idx);
            }
            return;
        }
        for i in 0..cands[depth].len() {
            idx[depth] = i;
            let (head, tail) = partials.split_at_mut(depth + 1);
            for ((t, h), c) in tail[0].iter_mut().zip(&head[depth]).zip(&cands[depth][i]) {
                *t = h + c;
            }
            ml_rec(cands, y, depth + 1, idx, partials, best_metric, best_tuple);
        }
    }
    ml_rec(
        &cands,
        &y,
        0,
        &mut idx,
        &mut partials,
        &mut best_metric,
        &mut best_tuple,
    );
    let ml_error = best_tuple != tx;

    // bounded-distance failure: ||W|| >= d_min / 2
    let w_norm = norm_sq(&noise).sqrt();
    let images = diff_images(prep, &channels, kappas, nr);
    let bd_fail = d_min_below(&images, 2.0 * w_norm);
    debug_assert!(
        !ml_error || bd_fail,
        "an ML error implies a bounded-distance failure"
    );
    (ml_error, bd_fail)
}

/// Empirical distribution of d_min over fresh channel draws, one summary per
/// SNR point.
pub fn empirical_dmin(code: &MacCode, cfg: &SimConfig, draws: u64) -> Result<Vec<DminSummary>> {
    let prep = prepare(code, cfg)?;
    dmin_summaries(&prep, cfg, draws)
}

fn dmin_summaries(prep: &Prepared, cfg: &SimConfig, draws: u64) -> Result<Vec<DminSummary>> {
    let nr = cfg.nr as usize;
    let mut out = Vec::with_capacity(cfg.snr_db.len());
    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let snr = 10f64.powf(snr_db / 10.0);
        let kappas: Vec<f64> = prep.energies.iter().map(|e| (snr / e).sqrt()).collect();
        let n_chunks = 64usize;
        let mut values = par::map_reduce(
            n_chunks,
            cfg.jobs,
            |chunk| {
                let lo = draws * chunk as u64 / n_chunks as u64;
                let hi = draws * (chunk as u64 + 1) / n_chunks as u64;
                let mut vals = Vec::with_capacity((hi - lo) as usize);
                for d in lo..hi {
                    let mut rng = Rng::stream(cfg.seed, &[0x646d_696e, snr_idx as u64, d]);
                    let channels = draw_channels(&mut rng, prep.users, nr, prep.nt);
                    let images = diff_images(prep, &channels, &kappas, nr);
                    vals.push(d_min_from_images(&images));
                }
                vals
            },
            |mut a, b| {
                a.extend(b);
                a
            },
            Vec::new(),
        );
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = values.len();
        let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95]
            .iter()
            .map(|&q| (q, values[((q * n as f64) as usize).min(n - 1)]))
            .collect();
        out.push(DminSummary {
            snr_db,
            draws,
            min: values[0],
            mean: values.iter().sum::<f64>() / n as f64,
            max: values[n - 1],
            quantiles,
        });
    }
    Ok(out)
}

/// d_min for explicit channel matrices (row-major nr x nt per user) at the
/// given per-user amplification factors.
pub fn d_min_for_channels(
    code: &MacCode,
    cfg: &SimConfig,
    channels: &[Vec<Cx>],
    kappas: &[f64],
) -> Result<f64> {
    let prep = prepare(code, cfg)?;
    let images = diff_images(&prep, channels, kappas, cfg.nr as usize);
    Ok(d_min_from_images(&images))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{build_tower, KKind, TowerParams};

    fn code21() -> MacCode {
        let spec = build_tower(&TowerParams::from_catalog(2, 1, KKind::Gaussian)).unwrap();
        MacCode::build(spec).unwrap()
    }

    fn code11() -> MacCode {
        let spec = build_tower(&TowerParams::from_catalog(1, 1, KKind::Gaussian)).unwrap();
        MacCode::build(spec).unwrap()
    }

    #[test]
    fn deterministic_under_seed_and_jobs() {
        let code = code21();
        let mut cfg = SimConfig::new(vec![1, 1], 2, vec![10.0], 400, 7);
        cfg.jobs = 1;
        let a = simulate(&code, &cfg).unwrap();
        cfg.jobs = 4;
        let b = simulate(&code, &cfg).unwrap();
        assert_eq!(a, b);
        let json_a = serde_json::to_vec(&a).unwrap();
        let json_b = serde_json::to_vec(&b).unwrap();
        assert_eq!(json_a, json_b);
        // different seed changes the outcome
        let cfg2 = SimConfig::new(vec![1, 1], 2, vec![10.0], 400, 8);
        let c = simulate(&code, &cfg2).unwrap();
        assert_ne!(a.points[0].ml_errors, c.points[0].ml_errors);
    }

    #[test]
    fn noiseless_limit_has_no_errors() {
        let code = code21();
        let cfg = SimConfig::new(vec![1, 1], 2, vec![60.0], 300, 11);
        let res = simulate(&code, &cfg).unwrap();
        assert_eq!(res.points[0].ml_errors, 0, "CER {}", res.points[0].ml_cer);
    }

    #[test]
    fn bd_failure_rate_dominates_ml() {
        let code = code21();
        let cfg = SimConfig::new(vec![1, 1], 2, vec![5.0, 15.0], 500, 3);
        let res = simulate(&code, &cfg).unwrap();
        for p in &res.points {
            assert!(p.bd_fail_rate >= p.ml_cer, "{p:?}");
        }
    }

    #[test]
    fn codebook_cap_is_enforced() {
        let code = code21();
        let mut cfg = SimConfig::new(vec![3, 3], 2, vec![10.0], 10, 1);
        cfg.codebook_cap = 1000;
        assert!(matches!(
            simulate(&code, &cfg),
            Err(Error::CodebookTooLarge { .. })
        ));
    }

    #[test]
    fn zero_channel_gives_zero_dmin() {
        let code = code21();
        let cfg = SimConfig::new(vec![1, 1], 2, vec![10.0], 1, 1);
        let zeros = vec![vec![Cx::zero(); 2]; 2];
        let d = d_min_for_channels(&code, &cfg, &zeros, &[1.0, 1.0]).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn identity_channel_dmin_matches_enumeration() {
        // single user, single antenna, H = 1
        let code = code11();
        let cfg = SimConfig::new(vec![1], 1, vec![0.0], 1, 1);
        let h = vec![vec![Cx::new(1.0, 0.0)]];
        let kappa = 1.7;
        let d = d_min_for_channels(&code, &cfg, &h, &[kappa]).unwrap();
        // oracle: direct enumeration over the difference box
        let dim = code.word_dim();
        let mut best = f64::INFINITY;
        let radix = 5i64; // 2 * (2N) + 1 with N = 1
        let total = radix.pow(dim as u32);
        for raw in 0..total {
            let mut rem = raw;
            let mut coords = vec![0i64; dim];
            for c in coords.iter_mut() {
                *c = rem % radix - 2;
                rem /= radix;
            }
            if coords.iter().all(|&c| c == 0) {
                continue;
            }
            let block = code.numeric_block(1, &coords);
            let n = block
                .data()
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            best = best.min(kappa * n);
        }
        assert!((d - best).abs() < 1e-12 * (1.0 + best));
    }

    #[test]
    fn dmin_quantiles_scale_with_snr() {
        let code = code21();
        let cfg = SimConfig::new(vec![1, 1], 2, vec![5.0, 20.0], 1, 9);
        let sums = empirical_dmin(&code, &cfg, 100).unwrap();
        // kappa scaling multiplies every distance by the same factor
        for (q5, q20) in sums[0].quantiles.iter().zip(&sums[1].quantiles) {
            assert!(q20.1 > q5.1);
        }
    }

    #[test]
    fn windowed_pair_scan_matches_plain_recursion() {
        let code = code21();
        let cfg = SimConfig::new(vec![1, 1], 2, vec![10.0], 1, 5);
        let prep = prepare(&code, &cfg).unwrap();
        for t in 0..20u64 {
            let mut rng = Rng::stream(31, &[t]);
            let channels = draw_channels(&mut rng, 2, 2, 1);
            let images = diff_images(&prep, &channels, &[1.3, 0.8], 2);
            let fast = d_min_from_images(&images);
            // plain reference: recursion over both users
            let slow = {
                let len = images[0][0].1.len();
                let mut cur = f64::INFINITY;
                for with0 in 0..=1 {
                    for (n1, v1) in images[0].iter().map(|p| (&p.0, &p.1)) {
                        let _ = n1;
                        if with0 == 0 {
                            cur = cur.min(norm_sq(v1).sqrt());
                        } else {
                            for (_, v2) in &images[1] {
                                let s: Vec<Cx> = v1.iter().zip(v2).map(|(a, b)| a + b).collect();
                                cur = cur.min(norm_sq(&s).sqrt());
                            }
                        }
                    }
                }
                for (_, v2) in &images[1] {
                    cur = cur.min(norm_sq(v2).sqrt());
                }
                let _ = len;
                cur
            };
            assert!(
                (fast - slow).abs() < 1e-12 * (1.0 + slow),
                "{fast} vs {slow}"
            );
        }
    }
}
