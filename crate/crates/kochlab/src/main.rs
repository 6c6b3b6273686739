//! Command-line front end: continued fractions, Birkhoff-sum bound checks,
//! flow simulation, orbit coding, f-bar distances, and experiment drivers.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kochlab::coding::{
    atom_index, build_partition, code_orbit, read_word_binary, read_word_text, write_word_binary,
    write_word_text, SymbolicWord,
};
use kochlab::error::{Error, Result};
use kochlab::experiments::{
    parse_alpha, parse_config, run_standardness_probe, run_verification_sweeps, ExperimentConfig,
};
use kochlab::fbar::{fbar_banded, fbar_distance};
use kochlab::flow::{flow, FlowPoint, ProductPoint};
use kochlab::roof::{dk_bounds_check, DerivOrder, RoofFunction};
use kochlab::rotation::{in_class_d, CirclePos};

#[derive(Parser)]
#[command(name = "kochlab", version, about = "special flows over rotations: arithmetic, coding, f-bar")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continued-fraction expansion and convergents of a rotation number
    Cf(CfArgs),
    /// Two-sided Birkhoff-sum bounds at denominator scales
    DkCheck(DkArgs),
    /// Trajectory of the product special flow
    Simulate(SimArgs),
    /// Symbolic coding of product orbits into word files
    Code(CodeArgs),
    /// f-bar distance between two word files
    Fbar(FbarArgs),
    /// Experiment drivers with config files
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct CfArgs {
    /// "golden", "sqrt2m1", "cf:a1,a2,...", or a decimal in (0,1)
    #[arg(long)]
    alpha: String,
    #[arg(long, default_value_t = 30)]
    depth: usize,
    /// also check the slow-growth condition q_{n+1} < C q_n ln(q_n) ln(n)^2
    #[arg(long = "check-D", default_value_t = false)]
    check_d: bool,
    #[arg(long, default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long)]
    n_max: Option<usize>,
    /// emit CSV instead of an aligned table
    #[arg(long, default_value_t = false)]
    csv: bool,
}

#[derive(Args)]
struct DkArgs {
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, default_value = "golden")]
    alpha: String,
    #[arg(long, default_value_t = 40)]
    depth: usize,
    /// base point in [0,1)
    #[arg(long)]
    z: Option<f64>,
    /// Birkhoff sum length (nonzero)
    #[arg(long, allow_hyphen_values = true)]
    m: Option<i64>,
    /// randomized sweep instead of a single (z, M)
    #[arg(long, default_value_t = false)]
    sweep: bool,
    #[arg(long, default_value_t = 100)]
    cases: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    slack: f64,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = -0.7, allow_negative_numbers = true)]
    gamma1: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    gamma2: f64,
    #[arg(long, default_value = "golden")]
    alpha1: String,
    #[arg(long, default_value = "sqrt2m1")]
    alpha2: String,
    #[arg(long, default_value_t = 40)]
    depth: usize,
    /// first-factor base coordinate
    #[arg(long)]
    x: f64,
    /// second-factor base coordinate
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 0.0)]
    xv: f64,
    #[arg(long, default_value_t = 0.0)]
    yv: f64,
    /// single flow time
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// number of time-one iterations (trajectory mode)
    #[arg(long)]
    steps: Option<u64>,
}

#[derive(Args)]
struct CodeArgs {
    #[arg(long, default_value_t = -0.7, allow_negative_numbers = true)]
    gamma1: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    gamma2: f64,
    #[arg(long, default_value = "golden")]
    alpha1: String,
    #[arg(long, default_value = "sqrt2m1")]
    alpha2: String,
    #[arg(long, default_value_t = 40)]
    depth: usize,
    /// partition parameter of P_m
    #[arg(long, default_value_t = 3)]
    m: u32,
    /// word length is N + 1
    #[arg(long = "N", default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// number of sampled start points / word files
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// write text words (one decimal symbol per line) instead of binary
    #[arg(long, default_value_t = false)]
    text: bool,
}

#[derive(Args)]
struct FbarArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// exact dynamic programming (default)
    #[arg(long, default_value_t = false, conflicts_with = "banded")]
    exact: bool,
    /// approximate banded mode (exploratory; value is an upper bound)
    #[arg(long, default_value_t = false)]
    banded: bool,
    #[arg(long, default_value_t = 64)]
    band_width: usize,
    /// write the optimal matching as text lines "i_s j_s"
    #[arg(long)]
    emit_witness: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// "standardness-probe" or "verify"
    mode: String,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_word(path: &PathBuf) -> Result<SymbolicWord> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"KWRD") {
        read_word_binary(&bytes[..])
    } else {
        read_word_text(&bytes[..])
    }
}

fn cmd_cf(args: &CfArgs) -> Result<()> {
    let rot = parse_alpha(&args.alpha, args.depth)?;
    let terms = rot.cf_terms();
    let conv = rot.convergents();
    let out = std::io::stdout();
    let mut out = out.lock();
    let d_report = if args.check_d {
        let hi = args.n_max.unwrap_or(rot.depth().saturating_sub(1)).max(2);
        Some(in_class_d(&rot, args.c, (args.n_min.max(2), hi))?)
    } else {
        None
    };
    let d_for = |n: usize| -> String {
        d_report
            .as_ref()
            .and_then(|rep| rep.rows.iter().find(|r| r.n == n))
            .map_or(String::new(), |r| r.pass.to_string())
    };
    if args.csv {
        writeln!(out, "n,a_n,p_n,q_n,D_check")?;
        for (k, &(p, q)) in conv.iter().enumerate() {
            writeln!(out, "{},{},{},{},{}", k + 1, terms[k], p, q, d_for(k + 1))?;
        }
    } else {
        writeln!(out, "alpha = {:.18}", rot.alpha().to_f64())?;
        writeln!(out, "{:>4} {:>12} {:>24} {:>24} {:>8}", "n", "a_n", "p_n", "q_n", "D")?;
        for (k, &(p, q)) in conv.iter().enumerate() {
            writeln!(
                out,
                "{:>4} {:>12} {:>24} {:>24} {:>8}",
                k + 1,
                terms[k],
                p,
                q,
                d_for(k + 1)
            )?;
        }
        if let Some(rep) = &d_report {
            writeln!(
                out,
                "slow-growth check with C = {}: {} (minimal C over range: {:.3})",
                rep.c,
                if rep.all_pass { "pass" } else { "FAIL" },
                rep.minimal_c
            )?;
        }
    }
    Ok(())
}

fn cmd_dk(args: &DkArgs) -> Result<bool> {
    let f = RoofFunction::new(args.gamma, true)?;
    let rot = parse_alpha(&args.alpha, args.depth)?;
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "z,M,s,side,lhs,rhs,pass,margin")?;
    let mut all_pass = true;
    let mut emit = |z: CirclePos, m: i64| -> Result<()> {
        let rep = dk_bounds_check(&f, &rot, z, m, args.slack)?;
        for row in &rep.rows {
            all_pass &= row.pass;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                z.to_f64(),
                m,
                rep.s,
                row.inequality,
                row.lhs,
                row.rhs,
                row.pass,
                row.margin
            )?;
        }
        Ok(())
    };
    if args.sweep {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        for _ in 0..args.cases {
            let s_max = 12.min(rot.depth() - 1);
            let s = rng.gen_range(3..=s_max);
            let q_s = rot.denominator(s)? as i64;
            let q_s1 = rot.denominator(s + 1)? as i64;
            let m = rng.gen_range(q_s..=q_s1);
            let m = if rng.gen_bool(0.5) { m } else { -m };
            emit(CirclePos::from_bits(rng.gen::<u128>()), m)?;
        }
    } else {
        let z = args
            .z
            .ok_or_else(|| Error::Config("--z required without --sweep".into()))?;
        let m = args
            .m
            .ok_or_else(|| Error::Config("--m required without --sweep".into()))?;
        emit(CirclePos::from_f64(z), m)?;
    }
    Ok(all_pass)
}

fn cmd_simulate(args: &SimArgs) -> Result<()> {
    let f1 = RoofFunction::new(args.gamma1, true)?;
    let f2 = RoofFunction::new(args.gamma2, true)?;
    let rot1 = parse_alpha(&args.alpha1, args.depth)?;
    let rot2 = parse_alpha(&args.alpha2, args.depth)?;
    let p = ProductPoint {
        first: FlowPoint::new(&f1, CirclePos::from_f64(args.x), args.xv)?,
        second: FlowPoint::new(&f2, CirclePos::from_f64(args.y), args.yv)?,
    };
    let out = std::io::stdout();
    let mut out = out.lock();
    writeln!(out, "t,x_h,x_v,N,y_h,y_v,M")?;
    let mut emit = |t: f64, a: &kochlab::flow::FlowStep, b: &kochlab::flow::FlowStep| {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t,
            a.point.x_h.to_f64(),
            a.point.x_v,
            a.n,
            b.point.x_h.to_f64(),
            b.point.x_v,
            b.n
        )
    };
    match (args.t, args.steps) {
        (Some(t), None) => {
            let a = flow(&f1, &rot1, &p.first, t)?;
            let b = flow(&f2, &rot2, &p.second, t)?;
            emit(t, &a, &b)?;
        }
        (None, Some(steps)) => {
            let mut cur = p;
            let (mut total_n, mut total_m) = (0i64, 0i64);
            for k in 1..=steps {
                let a = flow(&f1, &rot1, &cur.first, 1.0)?;
                let b = flow(&f2, &rot2, &cur.second, 1.0)?;
                total_n += a.n;
                total_m += b.n;
                let mut a_acc = a;
                let mut b_acc = b;
                a_acc.n = total_n;
                b_acc.n = total_m;
                emit(k as f64, &a_acc, &b_acc)?;
                cur = ProductPoint {
                    first: a.point,
                    second: b.point,
                };
            }
        }
        _ => {
            return Err(Error::Config(
                "exactly one of --t and --steps is required".into(),
            ))
        }
    }
    Ok(())
}

fn cmd_code(args: &CodeArgs) -> Result<()> {
    let f1 = RoofFunction::new(args.gamma1, true)?;
    let f2 = RoofFunction::new(args.gamma2, true)?;
    let rot1 = parse_alpha(&args.alpha1, args.depth)?;
    let rot2 = parse_alpha(&args.alpha2, args.depth)?;
    let part1 = build_partition(&f1, args.m)?;
    let part2 = build_partition(&f2, args.m)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for idx in 0..args.count {
        let mut factor = |f: &RoofFunction| -> Result<FlowPoint> {
            let x_h = CirclePos::from_bits(rng.gen::<u128>());
            let roof = f.eval(x_h, DerivOrder::Value)?;
            Ok(FlowPoint::new_unchecked(x_h, rng.gen::<f64>() * roof))
        };
        let pp = ProductPoint {
            first: factor(&f1)?,
            second: factor(&f2)?,
        };
        let word = code_orbit(&f1, &f2, &rot1, &rot2, &part1, &part2, &pp, args.n)?;
        let ext = if args.text { "txt" } else { "kwrd" };
        let path = args.out_dir.join(format!("word_{idx:04}.{ext}"));
        let file = std::fs::File::create(&path)?;
        if args.text {
            write_word_text(file, &word)?;
        } else {
            write_word_binary(file, &word)?;
        }
        println!(
            "{} length {} alphabet {} start_atoms ({},{})",
            path.display(),
            word.len(),
            word.alphabet_size,
            atom_index(&part1, &pp.first),
            atom_index(&part2, &pp.second)
        );
    }
    Ok(())
}

fn cmd_fbar(args: &FbarArgs) -> Result<()> {
    let a = load_word(&args.a)?;
    let b = load_word(&args.b)?;
    if args.banded {
        if args.emit_witness.is_some() {
            return Err(Error::Config(
                "--emit-witness requires the exact mode".into(),
            ));
        }
        let value = fbar_banded(&a, &b, args.band_width)?;
        println!("fbar_banded = {value} (approximate upper bound, band {})", args.band_width);
    } else {
        let (value, witness) = fbar_distance(&a, &b)?;
        println!("fbar = {value} (witness cardinality {})", witness.cardinality());
        if let Some(path) = &args.emit_witness {
            let mut file = std::fs::File::create(path)?;
            for &(i, j) in witness.pairs() {
                writeln!(file, "{i} {j}")?;
            }
        }
    }
    Ok(())
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<bool> {
    let cfg = match &args.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    match args.mode.as_str() {
        "standardness-probe" => {
            let out = run_standardness_probe(&cfg)?;
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
        "verify" => {
            let summary = run_verification_sweeps(&cfg)?;
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            for (name, stat) in &summary.sweeps {
                println!(
                    "{name}: {}/{} pass, worst margin {:?}",
                    stat.passes, stat.cases, stat.worst_margin
                );
            }
            Ok(!summary.hard_violation)
        }
        other => Err(Error::Config(format!(
            "unknown experiment mode '{other}' (use standardness-probe or verify)"
        ))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<bool> = match &cli.command {
        Command::Cf(args) => cmd_cf(args).map(|_| true),
        Command::DkCheck(args) => cmd_dk(args),
        Command::Simulate(args) => cmd_simulate(args).map(|_| true),
        Command::Code(args) => cmd_code(args).map(|_| true),
        Command::Fbar(args) => cmd_fbar(args).map(|_| true),
        Command::Experiment(args) => cmd_experiment(args),
    };
    match outcome {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        // a downstream reader (head, less) closing stdout is not a failure
        Err(Error::Io(msg)) if msg.contains("Broken pipe") => ExitCode::from(0),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
