//! Command line front end: code catalog and builders, decay measurements,
//! bound formulas, exact DMT curves, channel simulation, and the lemma
//! verification suites. Tabular results go to CSV, structured objects to
//! JSON; every experiment output embeds its resolved configuration.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use macdecay_core::code::{MacCode, UserWord};
use macdecay_core::cyclotomic::{rat_int, CyclotomicElement};
use macdecay_core::decay::{
    decay_exhaustive, embed_rational, lower_bound_exponents, upper_bound_exponents, DecayQuery,
    SearchOptions, DEFAULT_BUDGET,
};
use macdecay_core::dmt::{mac_lower_bound, mac_optimal, optimality_threshold, DmtScenario};
use macdecay_core::sim::{simulate, SimConfig};
use macdecay_core::tower::{build_tower, catalog, KKind, TowerParams, TowerSpec};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "macdecay",
    version,
    about = "Algebraic multi-user space-time lattice codes: rank certificates, determinant decay, DMT curves"
)]
struct Cli {
    /// Worker threads (0 = all available).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the catalog of suitable fields and inert primes (degrees 3-7).
    Catalog,
    /// Build a code and emit its JSON descriptor.
    BuildCode(BuildArgs),
    /// Measure decay values D(N_1, ..., N_u) by exhaustive pruned search.
    Decay(DecayArgs),
    /// Print the exact decay bound exponents for a scenario.
    Bounds(BoundsArgs),
    /// Exact DMT curves and optimality thresholds.
    Dmt(DmtArgs),
    /// Monte-Carlo channel simulation of a finite code.
    Simulate(SimArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct CodeSelect {
    /// Number of users.
    #[arg(long, default_value_t = 2)]
    users: u32,
    /// Transmit antennas per user.
    #[arg(long, default_value_t = 1)]
    nt: u32,
    /// Base field: gaussian (Q(i)) or eisenstein (Q(sqrt(-3))).
    #[arg(long, default_value = "gaussian")]
    field: String,
    /// Diagonal exponent m (defaults to the smallest legal value).
    #[arg(long)]
    m: Option<u32>,
    /// Exponent realizing sigma on the catalog root of unity.
    #[arg(long)]
    sigma_exp: Option<u32>,
    /// Load the tower from a build-code JSON descriptor instead.
    #[arg(long)]
    code: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    select: CodeSelect,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecayArgs {
    #[command(flatten)]
    select: CodeSelect,
    /// Users in error, comma separated (1-based), e.g. 1,2.
    #[arg(long, value_delimiter = ',')]
    subset: Vec<u32>,
    /// Box bound per subset user, e.g. 8,1.
    #[arg(long, value_delimiter = ',')]
    bounds: Vec<i64>,
    /// Vary the first subset user over this list of bounds.
    #[arg(long, value_delimiter = ',')]
    vary: Vec<i64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 2)]
    users: u32,
    #[arg(long, default_value_t = 1)]
    nt: u32,
    /// Block length k (defaults to users * nt).
    #[arg(long)]
    k: Option<u32>,
    /// Error-set size u (defaults to users).
    #[arg(long)]
    subset_size: Option<u32>,
}

#[derive(Args)]
struct DmtArgs {
    #[arg(long)]
    nt: u32,
    #[arg(long)]
    nr: u32,
    #[arg(long)]
    users: u32,
    /// Print the exact optimality threshold.
    #[arg(long)]
    threshold: bool,
    /// Also sample both curves on a grid with this many steps.
    #[arg(long)]
    sym_sweep: Option<u32>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    select: CodeSelect,
    /// Per-user coordinate bound(s): one value for all users or one per user.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    n: Vec<i64>,
    /// Receive antennas.
    #[arg(long, default_value_t = 2)]
    nr: u32,
    /// SNR points in dB.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    snr: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite: lemmas | rank | all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// JSON descriptor of a built code: the tower plus per-user lattice
/// generators in exact and numeric form.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodeDescriptor {
    tower: TowerSpec,
    users: u32,
    nt: u32,
    word_dim: usize,
    generators: Vec<UserGenerators>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UserGenerators {
    user: u32,
    /// `exact[g][row][col]`
    exact: Vec<Vec<Vec<CyclotomicElement>>>,
    /// `numeric[g][row * cols + col]` = (re, im)
    numeric: Vec<Vec<[f64; 2]>>,
}

fn parse_field(s: &str) -> Result<KKind> {
    match s.to_ascii_lowercase().as_str() {
        "gaussian" | "q(i)" | "i" => Ok(KKind::Gaussian),
        "eisenstein" | "q(sqrt-3)" | "w" => Ok(KKind::Eisenstein),
        other => bail!("unknown field {other:?}: expected gaussian or eisenstein"),
    }
}

fn load_code(select: &CodeSelect) -> Result<MacCode> {
    let spec = if let Some(path) = &select.code {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let descr: CodeDescriptor = serde_json::from_str(&text).context("parsing descriptor")?;
        descr.tower
    } else {
        let params = TowerParams {
            users: select.users,
            nt: select.nt,
            k_kind: parse_field(&select.field)?,
            row: None,
            m: select.m,
            sigma_exp: select.sigma_exp,
        };
        build_tower(&params)?
    };
    Ok(MacCode::build(spec)?)
}

fn describe(code: &MacCode) -> Result<CodeDescriptor> {
    let dim = code.word_dim();
    let mut generators = Vec::new();
    for user in 1..=code.users() {
        let mut exact = Vec::with_capacity(dim);
        let mut numeric = Vec::with_capacity(dim);
        for g in 0..dim {
            let mut coords = vec![0i64; dim];
            coords[g] = 1;
            let word = code.word(user, coords)?;
            let block = code.block(&word)?;
            let mut rows = Vec::with_capacity(block.rows());
            for r in 0..block.rows() {
                rows.push((0..block.cols()).map(|c| block.get(r, c).clone()).collect());
            }
            exact.push(rows);
            let emb = block.embed::<f64>();
            numeric.push(emb.data().iter().map(|z| [z.re, z.im]).collect());
        }
        generators.push(UserGenerators {
            user,
            exact,
            numeric,
        });
    }
    Ok(CodeDescriptor {
        tower: code.spec.clone(),
        users: code.users(),
        nt: code.nt(),
        word_dim: dim,
        generators,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_catalog() -> Result<()> {
    println!(
        "{:>6}  {:<52} {:>8} {:>14}",
        "[L:K]", "L", "p (Q(i))", "p (Q(v-3))"
    );
    for row in catalog() {
        if row.degree < 3 {
            continue;
        }
        let theta = row
            .theta_exps
            .iter()
            .map(|e| format!("z^{e}"))
            .collect::<Vec<_>>()
            .join(" + ");
        let p_g = format_gauss(row.p_gaussian);
        let p_e = format_eis(row.p_eisenstein);
        println!(
            "{:>6}  K({theta}), z = zeta_{:<4} {:>8} {:>14}",
            row.degree, row.h, p_g, p_e
        );
    }
    Ok(())
}

fn format_gauss((a, b): (i64, i64)) -> String {
    match (a, b) {
        (0, 1) => "i".into(),
        (a, 0) => format!("{a}"),
        (0, b) => format!("{b}i"),
        (a, 1) => format!("{a}+i"),
        (a, b) => format!("{a}+{b}i"),
    }
}

fn format_eis((a, b): (i64, i64)) -> String {
    match (a, b) {
        (0, 1) => "sqrt(-3)".into(),
        (a, 0) => format!("{a}"),
        (a, 1) => format!("{a}+sqrt(-3)"),
        (a, b) => format!("{a}+{b}sqrt(-3)"),
    }
}

fn cmd_build(args: &BuildArgs) -> Result<()> {
    let code = load_code(&args.select)?;
    let descr = describe(&code)?;
    let json = serde_json::to_string_pretty(&descr)?;
    emit(&args.out, &(json + "\n"))?;
    eprintln!(
        "built code: {} users x {} antennas, ambient conductor {}, m = {}",
        code.users(),
        code.nt(),
        code.spec.n,
        code.spec.m
    );
    Ok(())
}

fn budget_from_env() -> u128 {
    std::env::var("MACDECAY_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

fn cmd_decay(args: &DecayArgs, jobs: usize) -> Result<()> {
    let code = load_code(&args.select)?;
    if args.subset.is_empty() {
        bail!("--subset is required");
    }
    let jobs = if jobs == 0 {
        macdecay_core::par::default_jobs()
    } else {
        jobs
    };
    let opts = SearchOptions {
        budget: budget_from_env(),
        jobs,
    };
    let mut runs: Vec<Vec<i64>> = Vec::new();
    if args.vary.is_empty() {
        if args.bounds.len() != args.subset.len() {
            bail!("--bounds needs one value per subset user");
        }
        runs.push(args.bounds.clone());
    } else {
        let mut rest = args.bounds.clone();
        if rest.len() == args.subset.len() {
            rest.remove(0);
        } else if rest.len() != args.subset.len() - 1 {
            bail!("--bounds must list the fixed bounds of the non-varying users");
        }
        for &n in &args.vary {
            let mut b = vec![n];
            b.extend(&rest);
            runs.push(b);
        }
    }

    let mut csv = String::new();
    writeln!(
        csv,
        "# macdecay decay subset={:?} users={} nt={} budget={} jobs={}",
        args.subset,
        code.users(),
        code.nt(),
        opts.budget,
        opts.jobs
    )?;
    write!(csv, "subset")?;
    for u in 1..=code.users() {
        write!(csv, ",n_{u}")?;
    }
    writeln!(csv, ",min_det,witness,nodes,seconds")?;
    for bounds in runs {
        let query = DecayQuery::new(args.subset.clone(), bounds.clone())?;
        let rec = decay_exhaustive(&code, &query, &opts)?;
        let subset_str = args
            .subset
            .iter()
            .map(|u| u.to_string())
            .collect::<Vec<_>>()
            .join("+");
        write!(csv, "{subset_str}")?;
        for u in 1..=code.users() {
            let b = args
                .subset
                .iter()
                .position(|&s| s == u)
                .map(|i| bounds[i])
                .unwrap_or(0);
            write!(csv, ",{b}")?;
        }
        let witness = rec
            .witness
            .iter()
            .flat_map(|w| w.iter().map(|c| c.to_string()))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            csv,
            ",{:.12e},{witness},{},{:.3}",
            rec.value, rec.stats.nodes, rec.stats.seconds
        )?;
        eprintln!(
            "D({}) = {:.6e}  [{} nodes, {:.3}s]",
            bounds
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(","),
            rec.value,
            rec.stats.nodes,
            rec.stats.seconds
        );
    }
    emit(&args.out, &csv)
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let k = args.k.unwrap_or(args.users * args.nt);
    let u = args.subset_size.unwrap_or(args.users);
    let upper = upper_bound_exponents(args.users, args.nt, k, u)?;
    let lower = lower_bound_exponents(args.users, args.nt, u)?;
    println!(
        "scenario: users={} nt={} k={k} error-set size u={u}",
        args.users, args.nt
    );
    let per: Vec<String> = upper.per_user.iter().map(|e| format!("{e}")).collect();
    println!("upper bound per-user exponents: {}", per.join(", "));
    println!("upper bound equal-N exponent alpha = {}", upper.alpha);
    println!("lower bound per-user exponent: {}", lower.per_user);
    println!("lower bound equal-N exponent: {}", lower.equal_n);
    Ok(())
}

fn cmd_dmt(args: &DmtArgs) -> Result<()> {
    let sc = DmtScenario::new(args.users, args.nt, args.nr)?;
    let lower = mac_lower_bound(&sc);
    let optimal = mac_optimal(&sc);
    if args.threshold {
        let t = optimality_threshold(&sc);
        println!("{t}");
        eprintln!("optimality threshold: {t} = {:.6}", embed_rational(&t));
    }
    let mut csv = String::new();
    writeln!(
        csv,
        "# macdecay dmt users={} nt={} nr={} theta={}",
        args.users,
        args.nt,
        args.nr,
        sc.theta()
    )?;
    writeln!(csv, "curve,r_num,r_den,d_num,d_den,r,d")?;
    for (name, curve) in [("lower_bound", &lower), ("optimal", &optimal)] {
        for (r, d) in curve.breakpoints() {
            writeln!(
                csv,
                "{name},{},{},{},{},{:.9},{:.9}",
                r.numer(),
                r.denom(),
                d.numer(),
                d.denom(),
                embed_rational(r),
                embed_rational(d)
            )?;
        }
    }
    if let Some(steps) = args.sym_sweep {
        let rmax = sc.max_multiplexing();
        for k in 0..=steps {
            let r = &rmax * macdecay_core::cyclotomic::rat(k as i64, steps.max(1) as i64);
            for (name, curve) in [("lower_bound_sweep", &lower), ("optimal_sweep", &optimal)] {
                let d = curve.eval_ext(&r);
                writeln!(
                    csv,
                    "{name},{},{},{},{},{:.9},{:.9}",
                    r.numer(),
                    r.denom(),
                    d.numer(),
                    d.denom(),
                    embed_rational(&r),
                    embed_rational(&d)
                )?;
            }
        }
    }
    emit(&args.out, &csv)
}

fn cmd_simulate(args: &SimArgs, jobs: usize) -> Result<()> {
    let code = load_code(&args.select)?;
    let bounds = if args.n.len() == 1 {
        vec![args.n[0]; code.users() as usize]
    } else {
        args.n.clone()
    };
    let mut cfg = SimConfig::new(
        bounds.clone(),
        args.nr,
        args.snr.clone(),
        args.trials,
        args.seed,
    );
    if jobs > 0 {
        cfg.jobs = jobs;
    }
    let res = simulate(&code, &cfg)?;
    let mut csv = String::new();
    writeln!(
        csv,
        "# macdecay simulate users={} nt={} nr={} n={:?} trials={} seed={}",
        code.users(),
        code.nt(),
        args.nr,
        bounds,
        args.trials,
        args.seed
    )?;
    writeln!(csv, "snr_db,trials,ml_cer,bd_fail,ci_halfwidth")?;
    for p in &res.points {
        writeln!(
            csv,
            "{},{},{:.6e},{:.6e},{:.6e}",
            p.snr_db, p.trials, p.ml_cer, p.bd_fail_rate, p.ci_halfwidth
        )?;
        eprintln!(
            "snr {:>5} dB: CER {:.4e} (+-{:.1e}), bounded-distance failure {:.4e}",
            p.snr_db, p.ml_cer, p.ci_halfwidth, p.bd_fail_rate
        );
    }
    emit(&args.out, &csv)
}

fn cmd_verify(args: &VerifyArgs, jobs: usize) -> Result<()> {
    use macdecay_core::numeric::CMat;
    use macdecay_core::rng::Rng;
    use num_complex::Complex;
    type Cx = Complex<f64>;
    let seed = args.seed;
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let lemmas = matches!(args.suite.as_str(), "lemmas" | "all");
    let rank = matches!(args.suite.as_str(), "rank" | "all");
    if !lemmas && !rank {
        bail!(
            "unknown suite {:?}: expected lemmas, rank or all",
            args.suite
        );
    }

    if lemmas {
        let mut rng = Rng::new(seed);
        let rand_row = |rng: &mut Rng, n: usize| -> Vec<Cx> {
            (0..n)
                .map(|_| {
                    let (a, b) = rng.normal_pair::<f64>();
                    Cx::new(a, b)
                })
                .collect()
        };
        let ok = (0..1000).all(|_| {
            let c: Vec<Vec<Cx>> = (0..3).map(|_| rand_row(&mut rng, 6)).collect();
            let mut e = Vec::new();
            for i in 0..2 {
                let mut row = c[i].clone();
                for later in &c[i + 1..] {
                    let t = rng.normal_pair::<f64>().0;
                    for (r, l) in row.iter_mut().zip(later) {
                        *r -= l * Cx::new(t, 0.0);
                    }
                }
                e.push(row);
            }
            let (da, db) = macdecay_core::decay::row_replacement_invariance(&c, &e).unwrap();
            (da - db).abs() <= 1e-9 * da.abs().max(1.0)
        });
        check("row replacement invariance (1000 instances)", ok);

        let ok = (0..1000).all(|_| {
            let mut m = CMat::<f64>::zeros(4, 6);
            for r in 0..4 {
                for c in 0..6 {
                    let (a, b) = rng.normal_pair::<f64>();
                    m.set(r, c, Cx::new(a, b));
                }
            }
            macdecay_core::decay::hadamard_split_bound(&m, &[vec![0, 1], vec![2, 3]])
                .unwrap()
                .holds(1e-9)
        });
        check("generalized Hadamard split (1000 instances)", ok);

        let ok = (0..1000).all(|_| {
            let mut g = CMat::<f64>::zeros(4, 4);
            let mut h = CMat::<f64>::zeros(4, 4);
            for r in 0..4 {
                for c in 0..4 {
                    let (a, b) = rng.normal_pair::<f64>();
                    g.set(r, c, Cx::new(a, b));
                    let (a, b) = rng.normal_pair::<f64>();
                    h.set(r, c, Cx::new(a, b));
                }
            }
            let a = g.gram().add(&CMat::identity(4).scale(Cx::new(1e-6, 0.0)));
            let b = h.gram().add(&CMat::identity(4).scale(Cx::new(1e-6, 0.0)));
            macdecay_core::decay::minkowski_det_inequality(&a, &b).unwrap()
        });
        check("Minkowski determinant inequality (1000 PD pairs)", ok);

        let mut liouville_ok = true;
        for (h_cond, kappa, height) in [(7u32, 3u32, 2u64), (11, 5, 4)] {
            let delta = CyclotomicElement::root_of_unity(h_cond, 1)
                .checked_add(&CyclotomicElement::root_of_unity(h_cond, -1))
                .unwrap();
            for _ in 0..1000 {
                let l = rng.int_range(1, 4) as u32;
                let coeffs: Vec<i64> = (0..=l).map(|_| rng.int_range(-100, 100)).collect();
                let big_h = coeffs
                    .iter()
                    .map(|c| c.unsigned_abs())
                    .max()
                    .unwrap()
                    .max(1);
                let mut val = CyclotomicElement::zero(h_cond);
                let mut pw = CyclotomicElement::one(h_cond);
                for c in &coeffs {
                    val = val.checked_add(&pw.scaled(&rat_int(*c))).unwrap();
                    pw = pw.checked_mul(&delta).unwrap();
                }
                if val.is_zero() {
                    continue;
                }
                let bound = macdecay_core::decay::liouville_bound(kappa, height, l, big_h).unwrap();
                if val.embed::<f64>().re.abs() < embed_rational(&bound) {
                    liouville_ok = false;
                }
            }
        }
        check(
            "Liouville lower bound (1000 polynomials x 2 fields)",
            liouville_ok,
        );

        let code = MacCode::build(build_tower(&TowerParams::from_catalog(
            2,
            1,
            KKind::Gaussian,
        ))?)?;
        let spec = &code.spec;
        let basis = spec.order_basis();
        let ok = (0..100u64).all(|t| {
            let mut rng2 = Rng::stream(seed, &[t]);
            let w = loop {
                let mut acc = CyclotomicElement::zero(spec.n);
                for b in &basis {
                    acc = acc
                        .checked_add(&b.scaled(&rat_int(rng2.int_range(-3, 3))))
                        .unwrap();
                }
                if !acc.is_zero() {
                    break acc;
                }
            };
            let u = w.checked_div(&spec.sigma_apply(&w, 1).unwrap()).unwrap();
            let z = macdecay_core::code::hilbert90_witness(spec, &u).unwrap();
            spec.sigma_apply(&z, 1).unwrap() == u.checked_mul(&z).unwrap()
        });
        check("Hilbert 90 witnesses exact (100 unit-norm inputs)", ok);

        let ok = (0..100u64).all(|s| {
            let mut rng2 = Rng::stream(seed ^ 0x70, &[s]);
            let gens: Vec<CMat<f64>> = (0..4)
                .map(|_| {
                    let mut m = CMat::zeros(1, 3);
                    for c in 0..3 {
                        let (a, b) = rng2.normal_pair::<f64>();
                        m.set(0, c, Cx::new(a, b));
                    }
                    m
                })
                .collect();
            let mut v = CMat::zeros(1, 3);
            for c in 0..3 {
                let (a, b) = rng2.normal_pair::<f64>();
                v.set(0, c, Cx::new(a, b));
            }
            let iv = v.scale(Cx::new(0.0, 1.0));
            let m_box = 4 + (s % 9) as i64;
            match macdecay_core::decay::pigeonhole_witness(&gens, &[v, iv], m_box) {
                Ok(w) => w.projection_norm <= w.bound,
                Err(_) => false,
            }
        });
        check("pigeonhole witness bound (100 seeded instances)", ok);
    }

    if rank {
        let code = MacCode::build(build_tower(&TowerParams::from_catalog(
            3,
            1,
            KKind::Gaussian,
        ))?)?;
        let jobs = if jobs == 0 {
            macdecay_core::par::default_jobs()
        } else {
            jobs
        };
        let ok = macdecay_core::par::map_reduce(
            16,
            jobs,
            |chunk| {
                (0..25u64).all(|i| {
                    let mut rng = Rng::stream(seed ^ 0x72616e6b, &[chunk as u64, i]);
                    let words: Vec<UserWord> = (1..=3)
                        .map(|u| loop {
                            let coords: Vec<i64> =
                                (0..code.word_dim()).map(|_| rng.int_range(-2, 2)).collect();
                            if coords.iter().any(|&c| c != 0) {
                                break code.word(u, coords).unwrap();
                            }
                        })
                        .collect();
                    let jm = code.joint_matrix(&words).unwrap();
                    !code.exact_gram_determinant(&jm).unwrap().is_zero()
                })
            },
            |a, b| a && b,
            true,
        );
        check("generalized rank criterion spot check (400 tuples)", ok);

        let t1 = optimality_threshold(&DmtScenario::new(3, 2, 4)?);
        check(
            "DMT threshold (2,4,3) = 6/25",
            t1 == macdecay_core::cyclotomic::rat(6, 25),
        );
    }

    if failures > 0 {
        bail!("{failures} verification checks failed");
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let jobs = cli.jobs;
    let result = match &cli.command {
        Command::Catalog => cmd_catalog(),
        Command::BuildCode(args) => cmd_build(args),
        Command::Decay(args) => cmd_decay(args, jobs),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Dmt(args) => cmd_dmt(args),
        Command::Simulate(args) => cmd_simulate(args, jobs),
        Command::Verify(args) => cmd_verify(args, jobs),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
