//! Decay of minimum determinants: exhaustive (pruned) measurement, bound
//! formulas, constructive small-determinant witnesses, and the determinant
//! inequality helpers used by the verification suites.
//!
//! The search minimizes sqrt(det(M M^dagger)) over tuples of nonzero words.
//! Rows enter an exterior product incrementally; for single-antenna codes the
//! user with the largest box is solved by a depth-first scan over its integer
//! coordinates where the objective is the norm of a complex-linear form, so
//! branches are cut by the triangle inequality against the incumbent. Work is
//! split over fixed chunks of the outer word space; pruning is strict and the
//! merge is ordered, so the minimum and its witness do not depend on the
//! worker count (node counts can, since workers share the incumbent value).

use crate::code::MacCode;
use crate::cyclotomic::Rational;
use crate::error::{Error, Result};
use crate::numeric::{orthonormal_basis, project_out, rdot, rnorm, CMat, WedgeTables};
use crate::par;
use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashMap;
use std::time::Instant;

type Cx = Complex<f64>;

/// Default cap on the enumerated outer word space.
pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

/// What to minimize over: a subset of users and one box bound per user.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayQuery {
    /// 1-based user indices, strictly increasing.
    pub subset: Vec<u32>,
    /// Coordinate bound per subset user, >= 1.
    pub bounds: Vec<i64>,
}

impl DecayQuery {
    pub fn new(subset: Vec<u32>, bounds: Vec<i64>) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        if subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "subset must strictly increase".into(),
            ));
        }
        if bounds.len() != subset.len() || bounds.iter().any(|&b| b < 1) {
            return Err(Error::InvalidParameter(
                "one bound >= 1 per subset user".into(),
            ));
        }
        Ok(DecayQuery { subset, bounds })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SearchStats {
    pub nodes: u64,
    pub pruned: u64,
    pub seconds: f64,
}

/// One measured decay point with its argmin witness.
#[derive(Clone, Debug)]
pub struct DecayRecord {
    pub query: DecayQuery,
    /// min over nonzero word tuples of sqrt(det(M M^dagger)).
    pub value: f64,
    /// Flattened witness coordinates per subset user, sign-canonicalized.
    pub witness: Vec<Vec<i64>>,
    pub stats: SearchStats,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub budget: u128,
    pub jobs: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: DEFAULT_BUDGET,
            jobs: par::default_jobs(),
        }
    }
}

#[derive(Clone, Debug)]
struct Candidate {
    value: f64,
    witness: Vec<i64>,
}

fn canonicalize(mut flat: Vec<i64>) -> Vec<i64> {
    if let Some(first) = flat.iter().find(|&&c| c != 0) {
        if *first < 0 {
            for c in &mut flat {
                *c = -*c;
            }
        }
    }
    flat
}

fn better(cand: &Candidate, best: &Candidate) -> bool {
    cand.value < best.value || (cand.value == best.value && cand.witness < best.witness)
}

/// Exact minimum of sqrt(det(M M^dagger)) over all tuples of nonzero words
/// with per-user coordinate bounds.
///
/// The minimum and its witness are deterministic regardless of `opts.jobs`:
/// workers share only a monotone incumbent value, branches are pruned with a
/// strict inequality, and ties are resolved lexicographically on the
/// canonical witness during an ordered merge. Node counts in the stats can
/// vary between parallel runs.
pub fn decay_exhaustive(
    code: &MacCode,
    query: &DecayQuery,
    opts: &SearchOptions,
) -> Result<DecayRecord> {
    let start = Instant::now();
    let searcher = Searcher::new(code, query, opts)?;
    let seed = searcher.seed_candidate();

    let n_chunks = 64usize;
    let shared = SharedMin::new(seed.value);
    let (best, mut stats) = par::map_reduce(
        n_chunks,
        opts.jobs,
        |chunk| {
            let lo = searcher.outer_raw * chunk as u128 / n_chunks as u128;
            let hi = searcher.outer_raw * (chunk as u128 + 1) / n_chunks as u128;
            let mut best = seed.clone();
            let mut stats = SearchStats::default();
            let mut scratch = searcher.scratch();
            for raw in lo..hi {
                searcher.search_outer(raw, &shared, &mut best, &mut stats, &mut scratch);
            }
            (best, stats)
        },
        |(best_a, stats_a), (best_b, stats_b)| {
            let best = if better(&best_b, &best_a) {
                best_b
            } else {
                best_a
            };
            (
                best,
                SearchStats {
                    nodes: stats_a.nodes + stats_b.nodes,
                    pruned: stats_a.pruned + stats_b.pruned,
                    seconds: 0.0,
                },
            )
        },
        (seed.clone(), SearchStats::default()),
    );

    stats.seconds = start.elapsed().as_secs_f64();
    let dim = code.word_dim();
    let witness: Vec<Vec<i64>> = best.witness.chunks(dim).map(|c| c.to_vec()).collect();
    Ok(DecayRecord {
        query: query.clone(),
        value: best.value,
        witness,
        stats,
    })
}

/// Monotone-decreasing shared incumbent value (f64 bits in an atomic).
struct SharedMin(std::sync::atomic::AtomicU64);

impl SharedMin {
    fn new(v: f64) -> Self {
        SharedMin(std::sync::atomic::AtomicU64::new(v.to_bits()))
    }

    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(std::sync::atomic::Ordering::Relaxed))
    }

    fn update(&self, v: f64) {
        let mut cur = self.0.load(std::sync::atomic::Ordering::Relaxed);
        while v < f64::from_bits(cur) {
            match self.0.compare_exchange_weak(
                cur,
                v.to_bits(),
                std::sync::atomic::Ordering::Relaxed,
                std::sync::atomic::Ordering::Relaxed,
            ) {
                Ok(_) => break,
                Err(c) => cur = c,
            }
        }
    }
}

struct Searcher<'c> {
    query: &'c DecayQuery,
    dim: usize,
    k: usize,
    nt: usize,
    u_cnt: usize,
    pivot_pos: Option<usize>,
    outer_positions: Vec<usize>,
    outer_raw: u128,
    /// flattened generator rows per subset user: [user][generator][row * k + col]
    gen_rows: Vec<Vec<Vec<Cx>>>,
    tables: WedgeTables,
    /// wedge coordinate length at the pivot level
    wdim: usize,
}

struct Scratch {
    /// per-user outer coordinates
    outer_coords: Vec<Vec<i64>>,
    outer_flat: Vec<i64>,
    /// ping-pong wedge buffers for the outer accumulation
    wedge_a: Vec<Cx>,
    wedge_b: Vec<Cx>,
    row: Vec<Cx>,
    /// pivot weights and data, reused across outer assignments
    weights: Vec<Vec<Cx>>,
    norms: Vec<f64>,
    order: Vec<usize>,
    suffix: Vec<f64>,
    /// partial sums per DFS depth
    dfs_bufs: Vec<Vec<Cx>>,
    coords: Vec<i64>,
}

impl<'c> Searcher<'c> {
    fn new(code: &'c MacCode, query: &'c DecayQuery, opts: &SearchOptions) -> Result<Self> {
        for &u in &query.subset {
            if u == 0 || u > code.users() {
                return Err(Error::InvalidParameter(format!("user {u} out of range")));
            }
        }
        let dim = code.word_dim();
        let k = code.block_len() as usize;
        let nt = code.nt() as usize;
        let u_cnt = query.subset.len();

        // pivot: the subset position with the largest box (ties: the last);
        // only single-antenna rows are linear in the word coordinates
        let pivot_pos = if nt == 1 {
            let mut best = 0usize;
            for i in 1..u_cnt {
                if query.bounds[i] >= query.bounds[best] {
                    best = i;
                }
            }
            Some(best)
        } else {
            None
        };

        let outer_positions: Vec<usize> = (0..u_cnt).filter(|&i| Some(i) != pivot_pos).collect();
        let mut outer_raw: u128 = 1;
        for &i in &outer_positions {
            let radix = (2 * query.bounds[i] + 1) as u128;
            for _ in 0..dim {
                outer_raw = outer_raw.saturating_mul(radix);
            }
        }
        if outer_raw > opts.budget {
            return Err(Error::BudgetExceeded {
                required: outer_raw,
                budget: opts.budget,
            });
        }

        let gen_rows: Vec<Vec<Vec<Cx>>> = query
            .subset
            .iter()
            .map(|&u| {
                code.numeric_generators(u)
                    .iter()
                    .map(|g| (0..nt).flat_map(|r| g.row(r).to_vec()).collect())
                    .collect()
            })
            .collect();

        let top_grade = (u_cnt * nt).min(k);
        let tables = WedgeTables::new(k, top_grade);
        let wdim = tables.dim(top_grade);
        Ok(Searcher {
            query,
            dim,
            k,
            nt,
            u_cnt,
            pivot_pos,
            outer_positions,
            outer_raw,
            gen_rows,
            tables,
            wdim,
        })
    }

    fn scratch(&self) -> Scratch {
        let max_dim = (0..=self.u_cnt * self.nt)
            .map(|r| self.tables.dim(r))
            .max()
            .unwrap();
        Scratch {
            outer_coords: self
                .outer_positions
                .iter()
                .map(|_| vec![0i64; self.dim])
                .collect(),
            outer_flat: vec![0i64; self.outer_positions.len() * self.dim],
            wedge_a: vec![Cx::zero(); max_dim],
            wedge_b: vec![Cx::zero(); max_dim],
            row: vec![Cx::zero(); self.k],
            weights: (0..self.dim).map(|_| vec![Cx::zero(); self.wdim]).collect(),
            norms: vec![0.0; self.dim],
            order: (0..self.dim).collect(),
            suffix: vec![0.0; self.dim + 1],
            dfs_bufs: (0..=self.dim)
                .map(|_| vec![Cx::zero(); self.wdim])
                .collect(),
            coords: vec![0; self.dim],
        }
    }

    /// Strong deterministic seed: all-unit-word tuple, improved by one full
    /// pivot search over the all-units outer assignment when available.
    fn seed_candidate(&self) -> Candidate {
        let mut scratch = self.scratch();
        // value of the tuple where every user sends the unit word
        let mut flat = vec![0i64; self.u_cnt * self.dim];
        for pos in 0..self.u_cnt {
            flat[pos * self.dim] = 1;
        }
        let mut grade = 0usize;
        let mut cur = vec![Cx::one()];
        for pos in 0..self.u_cnt {
            for r in 0..self.nt {
                self.word_row_into(
                    pos,
                    &flat[pos * self.dim..(pos + 1) * self.dim],
                    r,
                    &mut scratch.row,
                );
                let mut next = vec![Cx::zero(); self.tables.dim(grade + 1)];
                crate::numeric::extend_into(&self.tables, grade, &cur, &scratch.row, &mut next);
                cur = next;
                grade += 1;
            }
        }
        let units_value = cur.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut best = Candidate {
            value: units_value,
            witness: canonicalize(flat),
        };

        if self.pivot_pos.is_some() && !self.outer_positions.is_empty() {
            // outer raw index of the all-units assignment: coordinate e_0 = 1
            // per user, i.e. digit (1 + n) at place 0 of each user's block
            let mut raw: u128 = 0;
            let mut place: u128 = 1;
            for &pos in &self.outer_positions {
                let n = self.query.bounds[pos];
                let radix = (2 * n + 1) as u128;
                raw += place * (1 + n) as u128;
                for _ in 0..self.dim {
                    place *= radix;
                }
            }
            let shared = SharedMin::new(best.value);
            let mut stats = SearchStats::default();
            self.search_outer(raw, &shared, &mut best, &mut stats, &mut scratch);
        }
        best
    }

    fn word_row_into(&self, pos: usize, coords: &[i64], row: usize, out: &mut [Cx]) {
        let k = self.k;
        out.iter_mut().for_each(|z| *z = Cx::zero());
        for (c, g) in coords.iter().zip(&self.gen_rows[pos]) {
            if *c != 0 {
                let f = *c as f64;
                for (o, v) in out.iter_mut().zip(&g[row * k..(row + 1) * k]) {
                    *o += v * f;
                }
            }
        }
    }

    fn search_outer(
        &self,
        raw: u128,
        shared: &SharedMin,
        best: &mut Candidate,
        stats: &mut SearchStats,
        scratch: &mut Scratch,
    ) {
        // decode the mixed-radix index into per-user coordinates
        let mut rem = raw;
        for (slot, &pos) in self.outer_positions.iter().enumerate() {
            let n = self.query.bounds[pos];
            let radix = (2 * n + 1) as u128;
            let mut any = false;
            for c in scratch.outer_coords[slot].iter_mut() {
                *c = (rem % radix) as i64 - n;
                any |= *c != 0;
                rem /= radix;
            }
            if !any {
                return; // subset users must be nonzero
            }
        }
        // global sign symmetry: the first outer user's first nonzero
        // coordinate must be positive (the orbit representative)
        if let Some(first) = scratch.outer_coords.first() {
            if *first.iter().find(|&&c| c != 0).unwrap() < 0 {
                return;
            }
        }
        stats.nodes += 1;

        // wedge of the outer rows in subset order (ping-pong buffers)
        let mut grade = 0usize;
        scratch.wedge_a[0] = Cx::one();
        let mut in_a = true;
        for slot in 0..self.outer_positions.len() {
            let pos = self.outer_positions[slot];
            for r in 0..self.nt {
                let (src, dst) = if in_a {
                    (&scratch.wedge_a, &mut scratch.wedge_b)
                } else {
                    (&scratch.wedge_b, &mut scratch.wedge_a)
                };
                self.word_row_into(pos, &scratch.outer_coords[slot], r, &mut scratch.row);
                crate::numeric::extend_into(
                    &self.tables,
                    grade,
                    &src[..self.tables.dim(grade)],
                    &scratch.row,
                    &mut dst[..self.tables.dim(grade + 1)],
                );
                grade += 1;
                in_a = !in_a;
            }
        }
        let outer_wedge: &[Cx] = if in_a {
            &scratch.wedge_a[..self.tables.dim(grade)]
        } else {
            &scratch.wedge_b[..self.tables.dim(grade)]
        };

        match self.pivot_pos {
            None => {
                let value = outer_wedge.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                scratch.outer_flat.clear();
                for oc in &scratch.outer_coords {
                    scratch.outer_flat.extend(oc);
                }
                let cand = Candidate {
                    value,
                    witness: canonicalize(scratch.outer_flat.clone()),
                };
                if better(&cand, best) {
                    shared.update(cand.value);
                    *best = cand;
                }
            }
            Some(pivot) => {
                let n = self.query.bounds[pivot];
                for (g, w) in self.gen_rows[pivot].iter().zip(scratch.weights.iter_mut()) {
                    crate::numeric::extend_into(
                        &self.tables,
                        grade,
                        outer_wedge,
                        &g[0..self.k],
                        &mut w[..self.wdim],
                    );
                }
                for (i, w) in scratch.weights.iter().enumerate() {
                    scratch.norms[i] = w[..self.wdim]
                        .iter()
                        .map(|z| z.norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                }
                let norms = &scratch.norms;
                scratch
                    .order
                    .sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());
                for d in (0..self.dim).rev() {
                    scratch.suffix[d] =
                        scratch.suffix[d + 1] + n as f64 * scratch.norms[scratch.order[d]];
                }
                scratch.outer_flat.clear();
                for slot in 0..scratch.outer_coords.len() {
                    let (coords, flat) = (&scratch.outer_coords[slot], &mut scratch.outer_flat);
                    flat.extend(coords);
                }
                scratch.dfs_bufs[0][..self.wdim]
                    .iter_mut()
                    .for_each(|z| *z = Cx::zero());
                if self.wdim == 1 {
                    self.dfs_pivot_scalar(0, false, n, pivot, shared, best, stats, scratch);
                } else {
                    self.dfs_pivot(0, false, n, pivot, shared, best, stats, scratch);
                }
                // restore ascending order indices for the next assignment
                scratch.order.sort_unstable();
            }
        }
    }

    /// Specialized search for the square case: the wedge space is one complex
    /// dimension, so partial sums are scalars.
    #[allow(clippy::too_many_arguments)]
    fn dfs_pivot_scalar(
        &self,
        depth: usize,
        nonzero: bool,
        n: i64,
        pivot: usize,
        shared: &SharedMin,
        best: &mut Candidate,
        stats: &mut SearchStats,
        scratch: &mut Scratch,
    ) {
        let widx = scratch.order[depth];
        let w = scratch.weights[widx][0];
        let wn = scratch.norms[widx];
        let degenerate = wn <= 1e-14;
        let p = scratch.dfs_bufs[depth][0];
        let a_star = if degenerate {
            0
        } else {
            let dot = p.re * w.re + p.im * w.im;
            (-dot / (wn * wn)).round().clamp(-(n as f64), n as f64) as i64
        };
        let incumbent = best.value.min(shared.get());
        let mut up = a_star;
        let mut down = a_star - 1;
        let mut up_open = true;
        let mut down_open = true;
        loop {
            let (a, going_up) = if up_open && up <= n {
                (up, true)
            } else if down_open && down >= -n {
                (down, false)
            } else {
                break;
            };
            stats.nodes += 1;
            let new = if a == 0 {
                p
            } else {
                Cx::new(p.re + w.re * a as f64, p.im + w.im * a as f64)
            };
            let norm = (new.re * new.re + new.im * new.im).sqrt();
            let cutoff = best.value.min(incumbent);
            let prunable = norm - scratch.suffix[depth + 1] > cutoff;
            if prunable {
                stats.pruned += 1;
                if !degenerate {
                    if going_up {
                        up_open = false;
                    } else {
                        down_open = false;
                    }
                }
            } else if depth + 1 == self.dim {
                if nonzero || a != 0 {
                    scratch.coords[widx] = a;
                    let mut flat = Vec::with_capacity(scratch.outer_flat.len() + self.dim);
                    let insert_at = (pivot * self.dim).min(scratch.outer_flat.len());
                    flat.extend(&scratch.outer_flat[..insert_at]);
                    flat.extend(&scratch.coords);
                    flat.extend(&scratch.outer_flat[insert_at..]);
                    let cand = Candidate {
                        value: norm,
                        witness: canonicalize(flat),
                    };
                    if better(&cand, best) {
                        shared.update(cand.value);
                        *best = cand;
                    }
                }
            } else {
                scratch.coords[widx] = a;
                scratch.dfs_bufs[depth + 1][0] = new;
                self.dfs_pivot_scalar(
                    depth + 1,
                    nonzero || a != 0,
                    n,
                    pivot,
                    shared,
                    best,
                    stats,
                    scratch,
                );
            }
            if going_up {
                up += 1;
            } else {
                down -= 1;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs_pivot(
        &self,
        depth: usize,
        nonzero: bool,
        n: i64,
        pivot: usize,
        shared: &SharedMin,
        best: &mut Candidate,
        stats: &mut SearchStats,
        scratch: &mut Scratch,
    ) {
        let wdim = self.wdim;
        let widx = scratch.order[depth];
        let wn = scratch.norms[widx];
        let degenerate = wn <= 1e-14;
        // unconstrained real minimizer of ||partial + a w||
        let a_star = if degenerate {
            0
        } else {
            let w = &scratch.weights[widx];
            let mut dot = 0.0f64;
            for (p, wi) in scratch.dfs_bufs[depth][..wdim].iter().zip(&w[..wdim]) {
                dot += p.re * wi.re + p.im * wi.im;
            }
            (-dot / (wn * wn)).round().clamp(-(n as f64), n as f64) as i64
        };

        let incumbent = best.value.min(shared.get());
        let mut up = a_star;
        let mut down = a_star - 1;
        let mut up_open = true;
        let mut down_open = true;
        loop {
            let (a, going_up) = if up_open && up <= n {
                (up, true)
            } else if down_open && down >= -n {
                (down, false)
            } else {
                break;
            };
            stats.nodes += 1;
            {
                let w = &scratch.weights[widx];
                let (head, tail) = scratch.dfs_bufs.split_at_mut(depth + 1);
                let src = &head[depth][..wdim];
                let dst = &mut tail[0][..wdim];
                if a == 0 {
                    dst.copy_from_slice(src);
                } else {
                    let f = a as f64;
                    for ((d, s), wi) in dst.iter_mut().zip(src).zip(&w[..wdim]) {
                        *d = s + wi * f;
                    }
                }
            }
            let norm = scratch.dfs_bufs[depth + 1][..wdim]
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            // no completion of this branch can go below norm - suffix
            let cutoff = best.value.min(incumbent);
            let prunable = norm - scratch.suffix[depth + 1] > cutoff;
            if prunable {
                stats.pruned += 1;
                // away from the minimizer the norm only grows, so the rest of
                // this direction is prunable too (unless the weight is zero)
                if !degenerate {
                    if going_up {
                        up_open = false;
                    } else {
                        down_open = false;
                    }
                }
            } else if depth + 1 == self.dim {
                if nonzero || a != 0 {
                    scratch.coords[widx] = a;
                    let mut flat = Vec::with_capacity(scratch.outer_flat.len() + self.dim);
                    let insert_at = (pivot * self.dim).min(scratch.outer_flat.len());
                    flat.extend(&scratch.outer_flat[..insert_at]);
                    flat.extend(&scratch.coords);
                    flat.extend(&scratch.outer_flat[insert_at..]);
                    let cand = Candidate {
                        value: norm,
                        witness: canonicalize(flat),
                    };
                    if better(&cand, best) {
                        shared.update(cand.value);
                        *best = cand;
                    }
                }
            } else {
                scratch.coords[widx] = a;
                self.dfs_pivot(
                    depth + 1,
                    nonzero || a != 0,
                    n,
                    pivot,
                    shared,
                    best,
                    stats,
                    scratch,
                );
            }
            if going_up {
                up += 1;
            } else {
                down -= 1;
            }
        }
    }
}

/// Per-user exponents and the equal-N exponent alpha of the pigeonhole upper
/// bound: D <= K prod N_l^(-nt^2 (u - l) / (k - nt (u - l))).
#[derive(Clone, Debug, PartialEq)]
pub struct UpperBoundExponents {
    /// Exponent of N_{i_l} for l = 1..u (the last entry is zero).
    pub per_user: Vec<Rational>,
    /// Equal-N decay exponent: the sum of the per-user exponents.
    pub alpha: Rational,
}

pub fn upper_bound_exponents(users: u32, nt: u32, k: u32, u: u32) -> Result<UpperBoundExponents> {
    if u == 0 || u > users {
        return Err(Error::InvalidParameter(
            "subset size must be in 1..=users".into(),
        ));
    }
    if k < users * nt {
        return Err(Error::InvalidParameter(format!(
            "upper bound requires k >= users * nt ({k} < {})",
            users * nt
        )));
    }
    let mut per_user = Vec::with_capacity(u as usize);
    let mut alpha = Rational::zero();
    for l in 1..=u {
        if l == u {
            per_user.push(Rational::zero());
            continue;
        }
        let num = BigInt::from((nt as i64) * (nt as i64) * ((u - l) as i64));
        let den = BigInt::from(k as i64 - (nt as i64) * ((u - l) as i64));
        let e = Rational::new(num, den);
        alpha += &e;
        per_user.push(e);
    }
    Ok(UpperBoundExponents { per_user, alpha })
}

/// Exponents of the constructed codes' decay lower bound
/// D >= K / (N_1 ... N_u)^((U-1) nt); constant for u = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LowerBoundExponents {
    pub per_user: i64,
    pub equal_n: i64,
}

pub fn lower_bound_exponents(users: u32, nt: u32, u: u32) -> Result<LowerBoundExponents> {
    if u == 0 || u > users {
        return Err(Error::InvalidParameter(
            "subset size must be in 1..=users".into(),
        ));
    }
    if u == 1 {
        return Ok(LowerBoundExponents {
            per_user: 0,
            equal_n: 0,
        });
    }
    let per_user = (users as i64 - 1) * nt as i64;
    Ok(LowerBoundExponents {
        per_user,
        equal_n: u as i64 * per_user,
    })
}

/// Least-squares slope of log D against log N.
pub fn fit_decay_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples);
    }
    for w in points.windows(2) {
        if w[0].0 >= w[1].0 {
            return Err(Error::InvalidParameter(
                "N values must strictly increase".into(),
            ));
        }
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, d)| d.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok((slope, (rss / n).sqrt()))
}

/// Result of the pigeonhole search: a nonzero lattice point whose projection
/// onto the orthogonal complement of the subspace is provably small.
#[derive(Clone, Debug)]
pub struct PigeonholeWitness {
    pub coords: Vec<i64>,
    pub projection_norm: f64,
    /// 2^(l/h + 2) h K M^((h - l)/h) with K the largest generator norm.
    pub bound: f64,
    pub complement_dim: usize,
}

/// Finds a nonzero z in the lattice box L(M) with a small orthogonal
/// projection onto the complement of the spanned subspace, by hashing the
/// projections of L(floor(M/2)) into cubes of side 4KM / s^(1/h): the first
/// two points in one cube differ by a valid witness.
pub fn pigeonhole_witness(
    generators: &[CMat<f64>],
    subspace: &[CMat<f64>],
    m_box: i64,
) -> Result<PigeonholeWitness> {
    if m_box < 4 {
        return Err(Error::InvalidParameter(
            "box bound must be at least 4".into(),
        ));
    }
    let l = generators.len();
    let ambient = 2 * generators[0].rows() * generators[0].cols();
    let gen_vecs: Vec<Vec<f64>> = generators.iter().map(|g| g.flatten_real()).collect();
    let span_vecs: Vec<Vec<f64>> = subspace.iter().map(|s| s.flatten_real()).collect();
    let onb = if span_vecs.is_empty() {
        Vec::new()
    } else {
        orthonormal_basis(&span_vecs, 1e-10)?
    };
    let h = ambient - onb.len();
    if h == 0 {
        return Err(Error::Pigeonhole("subspace complement is trivial".into()));
    }
    // orthonormal basis of the complement: complete with standard vectors
    let mut full = onb.clone();
    for i in 0..ambient {
        if full.len() == ambient {
            break;
        }
        let mut e = vec![0.0f64; ambient];
        e[i] = 1.0;
        let resid = project_out(&full, &e);
        let nrm = rnorm(&resid);
        if nrm > 1e-8 {
            full.push(resid.iter().map(|x| x / nrm).collect());
        }
    }
    if full.len() != ambient {
        return Err(Error::Pigeonhole(
            "could not complete the complement basis".into(),
        ));
    }
    let comp = &full[onb.len()..];

    let k_norm = gen_vecs.iter().map(|g| rnorm(g)).fold(0.0f64, f64::max);
    let half = m_box / 2;
    let s_count = {
        let mut s: f64 = 1.0;
        for _ in 0..l {
            s *= (2 * half + 1) as f64;
        }
        s
    };
    let side = 4.0 * k_norm * m_box as f64 / s_count.powf(1.0 / h as f64);
    let bound = 2f64.powf(l as f64 / h as f64 + 2.0)
        * h as f64
        * k_norm
        * (m_box as f64).powf((h as f64 - l as f64) / h as f64);

    // lazily enumerate L(half), hashing cube indices of the projections
    let mut seen: HashMap<Vec<i64>, Vec<i64>> = HashMap::new();
    let radix = (2 * half + 1) as u128;
    let mut total: u128 = 1;
    for _ in 0..l {
        total = total.saturating_mul(radix);
        if total > 500_000_000 {
            return Err(Error::BudgetExceeded {
                required: total,
                budget: 500_000_000,
            });
        }
    }
    let mut coords = vec![0i64; l];
    for raw in 0..total {
        let mut rem = raw;
        for c in coords.iter_mut() {
            *c = (rem % radix) as i64 - half;
            rem /= radix;
        }
        // projection coordinates in the complement basis
        let mut x = vec![0.0f64; ambient];
        for (c, g) in coords.iter().zip(&gen_vecs) {
            if *c != 0 {
                for (xi, gi) in x.iter_mut().zip(g) {
                    *xi += *c as f64 * gi;
                }
            }
        }
        let proj: Vec<f64> = comp.iter().map(|e| rdot(&x, e)).collect();
        let key: Vec<i64> = proj.iter().map(|c| (c / side).floor() as i64).collect();
        if let Some(prev) = seen.get(&key) {
            let z: Vec<i64> = coords.iter().zip(prev).map(|(a, b)| a - b).collect();
            debug_assert!(z.iter().any(|&c| c != 0));
            // recompute the projection norm of z
            let mut zx = vec![0.0f64; ambient];
            for (c, g) in z.iter().zip(&gen_vecs) {
                if *c != 0 {
                    for (xi, gi) in zx.iter_mut().zip(g) {
                        *xi += *c as f64 * gi;
                    }
                }
            }
            let pn = comp
                .iter()
                .map(|e| rdot(&zx, e).powi(2))
                .sum::<f64>()
                .sqrt();
            if pn <= bound {
                return Ok(PigeonholeWitness {
                    coords: z,
                    projection_norm: pn,
                    bound,
                    complement_dim: h,
                });
            }
            // keep scanning: a same-cube pair always satisfies side*sqrt(h),
            // which is within the bound, so this is unreachable in practice
        }
        seen.insert(key, coords.clone());
    }
    Err(Error::Pigeonhole(
        "no collision found in the half box".into(),
    ))
}

/// Minimum-projection nonzero point by direct scan (used below the M >= 4
/// threshold of the pigeonhole lemma).
fn min_projection_scan(
    gen_vecs: &[Vec<f64>],
    comp: &[Vec<f64>],
    m_box: i64,
) -> Result<(Vec<i64>, f64)> {
    let l = gen_vecs.len();
    let ambient = gen_vecs[0].len();
    let radix = (2 * m_box + 1) as u128;
    let mut total: u128 = 1;
    for _ in 0..l {
        total = total.saturating_mul(radix);
    }
    if total > 500_000_000 {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: 500_000_000,
        });
    }
    let mut best: Option<(Vec<i64>, f64)> = None;
    let mut coords = vec![0i64; l];
    for raw in 0..total {
        let mut rem = raw;
        for c in coords.iter_mut() {
            *c = (rem % radix) as i64 - m_box;
            rem /= radix;
        }
        if coords.iter().all(|&c| c == 0) {
            continue;
        }
        let mut x = vec![0.0f64; ambient];
        for (c, g) in coords.iter().zip(gen_vecs) {
            if *c != 0 {
                for (xi, gi) in x.iter_mut().zip(g) {
                    *xi += *c as f64 * gi;
                }
            }
        }
        let pn = comp.iter().map(|e| rdot(&x, e).powi(2)).sum::<f64>().sqrt();
        if best.as_ref().map(|(_, b)| pn < *b).unwrap_or(true) {
            best = Some((coords.clone(), pn));
        }
    }
    Ok(best.expect("nonempty box"))
}

/// Report for one projection level of the witness pipeline.
#[derive(Clone, Debug)]
pub struct PipelineLevel {
    pub user: u32,
    pub box_bound: i64,
    pub complement_dim: usize,
    pub achieved: f64,
    /// The pigeonhole formula value at this level's box bound.
    pub formula: f64,
}

/// A constructive small-determinant tuple with its certified bound.
#[derive(Clone, Debug)]
pub struct PipelineResult {
    /// Witness coordinates per subset user (subset order).
    pub words: Vec<Vec<i64>>,
    /// sqrt(det(M M^dagger)) of the stacked tuple.
    pub value: f64,
    /// Hadamard-style certificate from the achieved projection norms.
    pub achieved_bound: f64,
    /// Same product with each level's pigeonhole formula value instead;
    /// scales exactly like the decay bound exponents in the box bounds.
    pub formula_bound: f64,
    pub levels: Vec<PipelineLevel>,
}

/// Builds a tuple with provably small determinant by the sequential subspace
/// projection procedure: fix a unit word for the last user, then repeatedly
/// pick the next user's word with a small projection orthogonal to the span
/// of the rows already chosen.
pub fn small_det_witness_pipeline(
    code: &MacCode,
    subset: &[u32],
    bounds: &[i64],
) -> Result<PipelineResult> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if bounds.len() != subset.len() {
        return Err(Error::InvalidParameter("one bound per subset user".into()));
    }
    let nt = code.nt() as usize;
    let k = code.block_len() as usize;
    let dim = code.word_dim();
    let ambient = 2 * nt * k;

    let mut words: Vec<Option<Vec<i64>>> = vec![None; subset.len()];
    // the last user sends the unit word
    let mut unit = vec![0i64; dim];
    unit[0] = 1;
    words[subset.len() - 1] = Some(unit.clone());

    // accumulated row span (complex span realized as a real span with i*row)
    let mut span_rows: Vec<Vec<Cx>> = Vec::new();
    let push_block_rows = |span_rows: &mut Vec<Vec<Cx>>, block: &CMat<f64>| {
        for r in 0..nt {
            let row = block.row(r).to_vec();
            let irow: Vec<Cx> = row.iter().map(|z| z * Cx::new(0.0, 1.0)).collect();
            span_rows.push(row);
            span_rows.push(irow);
        }
    };
    let last_block = code.numeric_block(subset[subset.len() - 1], &unit);
    push_block_rows(&mut span_rows, &last_block);

    let mut levels = Vec::new();
    // remaining users in reverse subset order
    for pos in (0..subset.len() - 1).rev() {
        let user = subset[pos];
        let m_box = bounds[pos];
        // subspace: matrices whose rows lie in the span of the accumulated rows
        let mut subspace_mats: Vec<CMat<f64>> = Vec::new();
        for row_slot in 0..nt {
            for v in &span_rows {
                let mut m = CMat::<f64>::zeros(nt, k);
                for (c, z) in v.iter().enumerate() {
                    m.set(row_slot, c, *z);
                }
                subspace_mats.push(m);
            }
        }
        let gens: Vec<CMat<f64>> = code.numeric_generators(user).to_vec();
        let l = gens.len();

        let (coords, achieved, comp_dim) = if m_box >= 4 {
            let w = pigeonhole_witness(&gens, &subspace_mats, m_box)?;
            (w.coords, w.projection_norm, w.complement_dim)
        } else {
            // direct scan below the lemma threshold
            let gen_vecs: Vec<Vec<f64>> = gens.iter().map(|g| g.flatten_real()).collect();
            let span_vecs: Vec<Vec<f64>> = subspace_mats.iter().map(|s| s.flatten_real()).collect();
            let onb = orthonormal_basis(&span_vecs, 1e-10)?;
            let mut full = onb.clone();
            for i in 0..ambient {
                if full.len() == ambient {
                    break;
                }
                let mut e = vec![0.0f64; ambient];
                e[i] = 1.0;
                let resid = project_out(&full, &e);
                let nrm = rnorm(&resid);
                if nrm > 1e-8 {
                    full.push(resid.iter().map(|x| x / nrm).collect());
                }
            }
            let comp = full[onb.len()..].to_vec();
            let (c, pn) = min_projection_scan(&gen_vecs, &comp, m_box)?;
            (c, pn, comp.len())
        };
        let gen_vecs: Vec<Vec<f64>> = gens.iter().map(|g| g.flatten_real()).collect();
        let k_norm = gen_vecs.iter().map(|g| rnorm(g)).fold(0.0f64, f64::max);
        let formula = 2f64.powf(l as f64 / comp_dim as f64 + 2.0)
            * comp_dim as f64
            * k_norm
            * (m_box as f64).powf((comp_dim as f64 - l as f64) / comp_dim as f64);
        levels.push(PipelineLevel {
            user,
            box_bound: m_box,
            complement_dim: comp_dim,
            achieved,
            formula,
        });
        let block = code.numeric_block(user, &coords);
        push_block_rows(&mut span_rows, &block);
        words[pos] = Some(coords);
    }

    let words: Vec<Vec<i64>> = words.into_iter().map(|w| w.unwrap()).collect();
    // stack and measure
    let blocks: Vec<CMat<f64>> = subset
        .iter()
        .zip(&words)
        .map(|(&u, w)| code.numeric_block(u, w))
        .collect();
    let mut all_rows: Vec<Vec<Cx>> = Vec::new();
    for b in &blocks {
        for r in 0..nt {
            all_rows.push(b.row(r).to_vec());
        }
    }
    let stacked = CMat::from_rows(all_rows);
    let value = stacked.det_gram().max(0.0).sqrt();

    // Hadamard certificate: each projected block contributes at most
    // ||pi(B)||_F^nt / nt^(nt/2); the fixed last block enters unprojected
    let nt_f = nt as f64;
    let last_norm = last_block.frobenius_sq().sqrt();
    let mut achieved_bound = last_norm.powf(nt_f) / nt_f.powf(nt_f / 2.0);
    let mut formula_bound = achieved_bound;
    for lvl in &levels {
        achieved_bound *= lvl.achieved.powf(nt_f) / nt_f.powf(nt_f / 2.0);
        formula_bound *= lvl.formula.powf(nt_f) / nt_f.powf(nt_f / 2.0);
    }
    Ok(PipelineResult {
        words,
        value,
        achieved_bound,
        formula_bound,
        levels,
    })
}

/// The three quantities of the generalized Hadamard split
/// det(XX^H) <= prod det(X_i X_i^H) <= prod ||X_i||_F^(2 j_i) / j_i^(j_i).
#[derive(Clone, Copy, Debug)]
pub struct HadamardSplit {
    pub det: f64,
    pub block_product: f64,
    pub frobenius_product: f64,
}

impl HadamardSplit {
    pub fn holds(&self, slack: f64) -> bool {
        let s = 1.0 + slack;
        self.det <= self.block_product * s + slack
            && self.block_product <= self.frobenius_product * s + slack
    }
}

pub fn hadamard_split_bound(x: &CMat<f64>, partition: &[Vec<usize>]) -> Result<HadamardSplit> {
    let mut seen = vec![false; x.rows()];
    for part in partition {
        for &r in part {
            if r >= x.rows() || seen[r] {
                return Err(Error::InvalidParameter(
                    "partition must cover each row once".into(),
                ));
            }
            seen[r] = true;
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::InvalidParameter(
            "partition must cover all rows".into(),
        ));
    }
    let det = x.det_gram();
    let mut block_product = 1.0f64;
    let mut frobenius_product = 1.0f64;
    for part in partition {
        let rows: Vec<Vec<Cx>> = part.iter().map(|&r| x.row(r).to_vec()).collect();
        let sub = CMat::from_rows(rows);
        block_product *= sub.det_gram();
        let j = part.len() as f64;
        frobenius_product *= sub.frobenius_sq().powf(j) / j.powf(j);
    }
    Ok(HadamardSplit {
        det,
        block_product,
        frobenius_product,
    })
}

/// det(A A^H) vs det(B B^H) where B replaces each row c_i by e_i with
/// c_i - e_i in the real span of the later rows; the two agree.
pub fn row_replacement_invariance(c_rows: &[Vec<Cx>], e_rows: &[Vec<Cx>]) -> Result<(f64, f64)> {
    if e_rows.len() + 1 != c_rows.len() {
        return Err(Error::InvalidParameter(
            "need one replacement for every row except the last".into(),
        ));
    }
    let a = CMat::from_rows(c_rows.to_vec());
    let mut b_rows = e_rows.to_vec();
    b_rows.push(c_rows.last().unwrap().clone());
    let b = CMat::from_rows(b_rows);
    Ok((a.det_gram(), b.det_gram()))
}

/// Exact Liouville-type lower bound: for algebraic alpha of degree kappa and
/// height <= h, and a nonzero value of an integer polynomial P with
/// deg P = l, H(P) <= big_h: |P(alpha)| >= c^l / big_h^(kappa - 1) with
/// c = 1 / (3^(kappa-1) h^kappa).
pub fn liouville_bound(kappa: u32, h_alpha: u64, l: u32, big_h: u64) -> Result<Rational> {
    if kappa == 0 || h_alpha == 0 || l == 0 || big_h == 0 {
        return Err(Error::InvalidParameter(
            "all Liouville parameters must be positive".into(),
        ));
    }
    let three = BigInt::from(3u32).pow(kappa - 1);
    let hk = BigInt::from(h_alpha).pow(kappa);
    let c = Rational::new(BigInt::one(), three * hk);
    let cl = num_traits::pow::pow(c, l as usize);
    let denom = BigInt::from(big_h).pow(kappa - 1);
    Ok(cl / Rational::from_integer(denom))
}

/// Checks det(A + B)^(1/n) >= det(A)^(1/n) + det(B)^(1/n) for Hermitian
/// positive definite A, B.
pub fn minkowski_det_inequality(a: &CMat<f64>, b: &CMat<f64>) -> Result<bool> {
    if a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows() {
        return Err(Error::InvalidParameter(
            "need square matrices of equal size".into(),
        ));
    }
    let n = a.rows() as f64;
    let da = crate::numeric::pd_det(a, 1e-12)?;
    let db = crate::numeric::pd_det(b, 1e-12)?;
    let dsum = crate::numeric::pd_det(&a.add(b), 1e-12)?;
    let lhs = dsum.powf(1.0 / n);
    let rhs = da.powf(1.0 / n) + db.powf(1.0 / n);
    Ok(lhs >= rhs - 1e-9 * (1.0 + rhs.abs()))
}

pub fn embed_rational(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
