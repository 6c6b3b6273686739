//! Experiment orchestration: epsilon-parameter derivation, plain-text
//! configuration, the standardness probe contrasting single flows with the
//! product flow, and the verification sweeps, all with deterministic seeded
//! sampling and CSV/JSON reporting.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coding::{build_partition, code_orbit, code_orbit_single};
use crate::error::{Error, Result};
use crate::fbar::{dichotomy_check, fbar_distance, is_good_matching, shadow_set_measure};
use crate::flow::{FlowPoint, ProductPoint};
use crate::roof::{
    derivative_sandwich_check, dk_bounds_check, n_lower_bound_check, DerivOrder, RoofFunction,
};
use crate::rotation::{cf_expand, CirclePos, Rotation};

/// Exponent pair of the two-scale window construction, with the least
/// grid-tested radius at which the defining inequality held.
#[derive(Clone, Copy, Debug)]
pub struct EpsilonPair {
    pub eps0: f64,
    pub eps2: f64,
    pub r0_estimate: u64,
}

/// The window-separation inequality at radius R: with g1 = |gamma1|,
/// g2 = |gamma2|,
///
///   [R^{(1/(1+g2) + eps0/2)(1+g2-eps2) - 1} - 1/2] / R^{(1/(1+g2)+eps0)(1+g1+eps2)}
///     > [R^{(1-eps0)(1+g2+eps2) - 1} + 1/2] / R^{(1-2eps0)(1+g1-eps2)}
pub fn window_separation_holds(g1: f64, g2: f64, eps0: f64, eps2: f64, r: f64) -> bool {
    let lhs_num = r.powf((1.0 / (1.0 + g2) + 0.5 * eps0) * (1.0 + g2 - eps2) - 1.0) - 0.5;
    let lhs_den = r.powf((1.0 / (1.0 + g2) + eps0) * (1.0 + g1 + eps2));
    let rhs_num = r.powf((1.0 - eps0) * (1.0 + g2 + eps2) - 1.0) + 0.5;
    let rhs_den = r.powf((1.0 - 2.0 * eps0) * (1.0 + g1 - eps2));
    lhs_num / lhs_den > rhs_num / rhs_den
}

/// Derives eps0 = 2 eps2 / (g2 (1 + g2)), verifies the strict side
/// condition (1 - 2 eps0)(1 + g1 - eps2) > 1 + g2 + eps2, and scans
/// R in {2^10 .. 2^30} for the least radius from which the window
/// separation holds through the end of the grid.
pub fn epsilon_params(gamma1: f64, gamma2: f64, eps2: f64) -> Result<EpsilonPair> {
    let g1 = gamma1.abs();
    let g2 = gamma2.abs();
    if !(gamma1 > -1.0 && gamma1 < 0.0 && gamma2 > -1.0 && gamma2 < 0.0) {
        return Err(Error::GammaOutOfRange {
            value: if (-1.0..0.0).contains(&gamma1) {
                gamma2
            } else {
                gamma1
            },
        });
    }
    if g1 <= g2 {
        return Err(Error::Precondition(format!(
            "|gamma1| = {g1} must exceed |gamma2| = {g2}"
        )));
    }
    if eps2 < 0.0 {
        return Err(Error::Precondition("eps2 must be nonnegative".into()));
    }
    let eps0 = 2.0 * eps2 / (g2 * (1.0 + g2));
    if (1.0 - 2.0 * eps0) * (1.0 + g1 - eps2) <= 1.0 + g2 + eps2 {
        return Err(Error::Precondition(format!(
            "side condition fails for eps2 = {eps2}; choose a smaller eps2"
        )));
    }
    let mut r0 = None;
    for k in (10..=30).rev() {
        let r = (1u64 << k) as f64;
        if window_separation_holds(g1, g2, eps0, eps2, r) {
            r0 = Some(1u64 << k);
        } else {
            break;
        }
    }
    let r0_estimate = r0.ok_or_else(|| {
        Error::Precondition(format!(
            "window separation fails across the whole tested grid for eps2 = {eps2}"
        ))
    })?;
    Ok(EpsilonPair {
        eps0,
        eps2,
        r0_estimate,
    })
}

/// Full experiment configuration; every field has a default and can be set
/// from a plain-text `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    /// rotation specs: "golden", "sqrt2m1", "cf:a1,a2,...", or a decimal
    pub alpha1: String,
    pub alpha2: String,
    /// continued-fraction depth for the rotations
    pub depth: usize,
    /// partition parameter of P_m
    pub m: u32,
    pub n_list: Vec<usize>,
    pub pair_count: u32,
    pub seed: u64,
    /// exponent slack of the epsilon-parameter derivation
    pub eps2: f64,
    /// exponent slack of the derivative-sum sandwich sweep; empirical at
    /// finite horizon (log-deviations of the derivative sums are O(1) for
    /// t <= 1e4, so this must be far larger than eps2, whose side
    /// condition caps it near 1e-3)
    pub sandwich_eps2: f64,
    /// flow-time horizon of the sandwich sweep
    pub t_horizon: f64,
    pub sweep_cases: u32,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gamma1: -0.7,
            gamma2: -0.5,
            alpha1: "golden".into(),
            alpha2: "sqrt2m1".into(),
            depth: 40,
            m: 3,
            n_list: vec![128, 256],
            pair_count: 5,
            seed: 1,
            eps2: 0.001,
            sandwich_eps2: 1.2,
            t_horizon: 1e4,
            sweep_cases: 50,
            out_dir: PathBuf::from("."),
        }
    }
}

/// Parses `key = value` lines; '#' starts a comment; unknown keys error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::Config(format!("line {}: bad {what}: {value}", lineno + 1));
        match key {
            "gamma1" => cfg.gamma1 = value.parse().map_err(|_| bad("gamma1"))?,
            "gamma2" => cfg.gamma2 = value.parse().map_err(|_| bad("gamma2"))?,
            "alpha1" => cfg.alpha1 = value.to_string(),
            "alpha2" => cfg.alpha2 = value.to_string(),
            "depth" => cfg.depth = value.parse().map_err(|_| bad("depth"))?,
            "m" => cfg.m = value.parse().map_err(|_| bad("m"))?,
            "n_list" => {
                cfg.n_list = value
                    .split(',')
                    .map(|tok| tok.trim().parse().map_err(|_| bad("n_list")))
                    .collect::<Result<Vec<_>>>()?;
            }
            "pair_count" => cfg.pair_count = value.parse().map_err(|_| bad("pair_count"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
            "eps2" => cfg.eps2 = value.parse().map_err(|_| bad("eps2"))?,
            "sandwich_eps2" => {
                cfg.sandwich_eps2 = value.parse().map_err(|_| bad("sandwich_eps2"))?
            }
            "t_horizon" => cfg.t_horizon = value.parse().map_err(|_| bad("t_horizon"))?,
            "sweep_cases" => cfg.sweep_cases = value.parse().map_err(|_| bad("sweep_cases"))?,
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            other => {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    Ok(cfg)
}

/// Builds a rotation from a spec token: "golden", "sqrt2m1",
/// "cf:a1,a2,...", or a decimal in (0,1).
pub fn parse_alpha(spec: &str, depth: usize) -> Result<Rotation> {
    match spec {
        "golden" => Rotation::golden(depth),
        "sqrt2m1" => Rotation::sqrt2m1(depth),
        _ => {
            if let Some(terms) = spec.strip_prefix("cf:") {
                let terms = terms
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| Error::Config(format!("bad cf term: {t}")))
                    })
                    .collect::<Result<Vec<u64>>>()?;
                Rotation::from_cf_terms(&terms)
            } else {
                let v: f64 = spec
                    .parse()
                    .map_err(|_| Error::Config(format!("bad alpha spec: {spec}")))?;
                if !(0.0 < v && v < 1.0) {
                    return Err(Error::AlphaOutOfRange { value: v });
                }
                cf_expand(CirclePos::from_f64(v), depth)
            }
        }
    }
}

fn config_header(cfg: &ExperimentConfig) -> String {
    let n_list = cfg
        .n_list
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "# version = {}\n# gamma1 = {}\n# gamma2 = {}\n# alpha1 = {}\n# alpha2 = {}\n\
         # depth = {}\n# m = {}\n# n_list = {}\n# pair_count = {}\n# seed = {}\n\
         # eps2 = {}\n# sandwich_eps2 = {}\n# t_horizon = {}\n# sweep_cases = {}\n\
         # fbar normalizer = word length (indices 0..N give length N+1)\n",
        env!("CARGO_PKG_VERSION"),
        cfg.gamma1,
        cfg.gamma2,
        cfg.alpha1,
        cfg.alpha2,
        cfg.depth,
        cfg.m,
        n_list,
        cfg.pair_count,
        cfg.seed,
        cfg.eps2,
        cfg.sandwich_eps2,
        cfg.t_horizon,
        cfg.sweep_cases,
    )
}

fn open_report(path: &Path, cfg: &ExperimentConfig) -> Result<csv::Writer<File>> {
    let mut file = File::create(path)?;
    file.write_all(config_header(cfg).as_bytes())?;
    Ok(csv::Writer::from_writer(file))
}

fn sample_product_point(
    rng: &mut ChaCha8Rng,
    f1: &RoofFunction,
    f2: &RoofFunction,
) -> Result<ProductPoint> {
    let mut factor = |f: &RoofFunction| -> Result<FlowPoint> {
        let x_h = CirclePos::from_bits(rng.gen::<u128>());
        let roof = f.eval(x_h, DerivOrder::Value)?;
        Ok(FlowPoint::new_unchecked(x_h, rng.gen::<f64>() * roof))
    };
    let first = factor(f1)?;
    let second = factor(f2)?;
    Ok(ProductPoint { first, second })
}

/// Output of the standardness probe: the three table paths.
#[derive(Clone, Debug)]
pub struct ProbeOutcome {
    pub files: Vec<PathBuf>,
}

/// Samples seeded pairs of product points, codes each pair at every word
/// length in `n_list`, and writes three tables (single flow 1, single
/// flow 2, product) of f-bar values with witness cardinalities and
/// good-matching flags at eps = 1/100.
pub fn run_standardness_probe(cfg: &ExperimentConfig) -> Result<ProbeOutcome> {
    if cfg.gamma1 == cfg.gamma2 {
        return Err(Error::Config(
            "gamma1 and gamma2 must differ for the product probe".into(),
        ));
    }
    let f1 = RoofFunction::new(cfg.gamma1, true)?;
    let f2 = RoofFunction::new(cfg.gamma2, true)?;
    let rot1 = parse_alpha(&cfg.alpha1, cfg.depth)?;
    let rot2 = parse_alpha(&cfg.alpha2, cfg.depth)?;
    let part1 = build_partition(&f1, cfg.m)?;
    let part2 = build_partition(&f2, cfg.m)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let paths = [
        cfg.out_dir.join("single_flow_1.csv"),
        cfg.out_dir.join("single_flow_2.csv"),
        cfg.out_dir.join("product.csv"),
    ];
    let mut writers = paths
        .iter()
        .map(|p| open_report(p, cfg))
        .collect::<Result<Vec<_>>>()?;
    for w in &mut writers {
        w.write_record(["N", "pair", "fbar", "witness_cardinality", "good_matching"])
            .map_err(|e| Error::Io(e.to_string()))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs: Vec<(ProductPoint, ProductPoint)> = (0..cfg.pair_count)
        .map(|_| {
            Ok((
                sample_product_point(&mut rng, &f1, &f2)?,
                sample_product_point(&mut rng, &f1, &f2)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    for &n in &cfg.n_list {
        for (pair_id, (pa, pb)) in pairs.iter().enumerate() {
            let words = [
                (
                    code_orbit_single(&f1, &rot1, &part1, &pa.first, n)?,
                    code_orbit_single(&f1, &rot1, &part1, &pb.first, n)?,
                ),
                (
                    code_orbit_single(&f2, &rot2, &part2, &pa.second, n)?,
                    code_orbit_single(&f2, &rot2, &part2, &pb.second, n)?,
                ),
                (
                    code_orbit(&f1, &f2, &rot1, &rot2, &part1, &part2, pa, n)?,
                    code_orbit(&f1, &f2, &rot1, &rot2, &part1, &part2, pb, n)?,
                ),
            ];
            for (table, (wa, wb)) in words.iter().enumerate() {
                let (value, witness) = fbar_distance(wa, wb)?;
                let good = is_good_matching(&witness, wa.len(), 0.01);
                writers[table]
                    .write_record([
                        n.to_string(),
                        pair_id.to_string(),
                        format!("{value}"),
                        witness.cardinality().to_string(),
                        good.to_string(),
                    ])
                    .map_err(|e| Error::Io(e.to_string()))?;
            }
        }
    }
    for mut w in writers {
        w.flush()?;
    }
    Ok(ProbeOutcome {
        files: paths.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepStat {
    pub cases: u64,
    pub passes: u64,
    pub worst_margin: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct VerifySummary {
    pub sweeps: BTreeMap<String, SweepStat>,
    /// true iff a sweep with a hard guarantee (two-sided Birkhoff bounds,
    /// isometry dichotomy) recorded any violation
    pub hard_violation: bool,
    pub files: Vec<PathBuf>,
}

struct MarginTracker {
    cases: u64,
    passes: u64,
    worst: Option<f64>,
}

impl MarginTracker {
    fn new() -> Self {
        MarginTracker {
            cases: 0,
            passes: 0,
            worst: None,
        }
    }

    fn record(&mut self, pass: bool, margin: Option<f64>) {
        self.cases += 1;
        if pass {
            self.passes += 1;
        }
        if let Some(m) = margin {
            self.worst = Some(match self.worst {
                Some(w) => w.min(m),
                None => m,
            });
        }
    }

    fn stat(&self) -> SweepStat {
        SweepStat {
            cases: self.cases,
            passes: self.passes,
            worst_margin: self.worst,
        }
    }
}

/// Runs all five verification sweeps and writes one CSV per sweep plus a
/// summary JSON with per-sweep case counts, pass counts, and worst margins.
pub fn run_verification_sweeps(cfg: &ExperimentConfig) -> Result<VerifySummary> {
    let f1 = RoofFunction::new(cfg.gamma1, true)?;
    let f2 = RoofFunction::new(cfg.gamma2, true)?;
    let rot1 = parse_alpha(&cfg.alpha1, cfg.depth)?;
    let rot2 = parse_alpha(&cfg.alpha2, cfg.depth)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut files = Vec::new();
    let mut sweeps = BTreeMap::new();
    let mut hard_violation = false;

    // two-sided Birkhoff-sum bounds at denominator scales, slack 1
    {
        let path = cfg.out_dir.join("dk.csv");
        let mut w = open_report(&path, cfg)?;
        w.write_record(["z", "M", "s", "side", "lhs", "rhs", "pass", "margin"])
            .map_err(|e| Error::Io(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xd1);
        let mut tracker = MarginTracker::new();
        for case in 0..cfg.sweep_cases {
            let (f, rot) = if case % 2 == 0 {
                (&f1, &rot1)
            } else {
                (&f2, &rot2)
            };
            let s_max = 12.min(rot.depth() - 1);
            let s = rng.gen_range(3..=s_max);
            let q_s = rot.denominator(s)? as i64;
            let q_s1 = rot.denominator(s + 1)? as i64;
            let m = rng.gen_range(q_s..=q_s1);
            let z = CirclePos::from_bits(rng.gen::<u128>());
            let rep = dk_bounds_check(f, rot, z, m, 1.0)?;
            let mut case_pass = true;
            let mut case_margin = f64::INFINITY;
            for row in &rep.rows {
                case_pass &= row.pass;
                case_margin = case_margin.min(row.margin);
                w.write_record([
                    format!("{}", z.to_f64()),
                    m.to_string(),
                    rep.s.to_string(),
                    row.inequality.to_string(),
                    format!("{}", row.lhs),
                    format!("{}", row.rhs),
                    row.pass.to_string(),
                    format!("{}", row.margin),
                ])
                .map_err(|e| Error::Io(e.to_string()))?;
            }
            tracker.record(case_pass, Some(case_margin));
            if !case_pass {
                hard_violation = true;
            }
        }
        w.flush()?;
        files.push(path);
        sweeps.insert("dk".to_string(), tracker.stat());
    }

    // isometry dichotomy for nearby base points
    {
        let path = cfg.out_dir.join("dichotomy.csv");
        let mut w = open_report(&path, cfg)?;
        w.write_record([
            "case",
            "W",
            "d0",
            "t_max",
            "rows",
            "violations",
            "pass",
            "margin",
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xd2);
        let mut tracker = MarginTracker::new();
        for case in 0..cfg.sweep_cases {
            let big_w = 10f64.powf(rng.gen_range(3.0..5.0));
            let x = rng.gen::<f64>();
            let z = FlowPoint::new_unchecked(CirclePos::from_f64(x), 0.0);
            let z2 = FlowPoint::new_unchecked(CirclePos::from_f64(x + 1.0 / big_w), 0.0);
            let t_max = big_w / big_w.ln().powi(4);
            let rep = dichotomy_check(&f1, &rot1, &z, &z2, t_max)?;
            let margin = rep
                .rows
                .iter()
                .filter(|r| !r.isometric)
                .map(|r| r.d_h / (100.0 * rep.d0) - 1.0)
                .fold(f64::INFINITY, f64::min);
            let margin = if margin.is_finite() { Some(margin) } else { None };
            tracker.record(rep.all_pass, margin);
            if !rep.all_pass {
                hard_violation = true;
            }
            w.write_record([
                case.to_string(),
                format!("{big_w}"),
                format!("{}", rep.d0),
                format!("{t_max}"),
                rep.rows.len().to_string(),
                rep.violations.to_string(),
                rep.all_pass.to_string(),
                margin.map_or("".to_string(), |m| format!("{m}")),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        files.push(path);
        sweeps.insert("dichotomy".to_string(), tracker.stat());
    }

    // derivative-sum sandwich across a time grid up to the horizon
    {
        let path = cfg.out_dir.join("sandwich.csv");
        let mut w = open_report(&path, cfg)?;
        w.write_record(["t", "N", "M", "value1", "value2", "pass", "margin"])
            .map_err(|e| Error::Io(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xd3);
        let x = FlowPoint::new_unchecked(CirclePos::from_bits(rng.gen::<u128>()), 0.0);
        let y = FlowPoint::new_unchecked(CirclePos::from_bits(rng.gen::<u128>()), 0.0);
        let mut tracker = MarginTracker::new();
        let t_hor = cfg.t_horizon;
        let cases = cfg.sweep_cases.max(2);
        for k in 0..cases {
            let t = 1.0 + (t_hor - 1.0) * k as f64 / (cases - 1) as f64;
            let rep =
                derivative_sandwich_check(&f1, &f2, &rot1, &rot2, &x, &y, t, cfg.sandwich_eps2, 0.0, t_hor)?;
            let margin = if rep.out_of_range {
                None
            } else {
                let (g1, g2) = (f1.abs_gamma(), f2.abs_gamma());
                let lo1 = t.powf(1.0 + g1 - cfg.sandwich_eps2);
                let hi1 = t.powf(1.0 + g1 + cfg.sandwich_eps2);
                let lo2 = t.powf(1.0 + g2 - cfg.sandwich_eps2);
                let hi2 = t.powf(1.0 + g2 + cfg.sandwich_eps2);
                Some(
                    (rep.value1.ln() - lo1.ln())
                        .min(hi1.ln() - rep.value1.ln())
                        .min(rep.value2.ln() - lo2.ln())
                        .min(hi2.ln() - rep.value2.ln()),
                )
            };
            tracker.record(rep.pass(), margin);
            w.write_record([
                format!("{t}"),
                rep.n.to_string(),
                rep.m.to_string(),
                format!("{}", rep.value1),
                format!("{}", rep.value2),
                rep.pass().to_string(),
                margin.map_or("".to_string(), |m| format!("{m}")),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        files.push(path);
        sweeps.insert("sandwich".to_string(), tracker.stat());
    }

    // crossing-count lower bound N(z,t) >= t / ln^5 t
    {
        let path = cfg.out_dir.join("crossing_bound.csv");
        let mut w = open_report(&path, cfg)?;
        w.write_record(["t", "N", "bound", "precondition", "pass", "margin"])
            .map_err(|e| Error::Io(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xd4);
        let mut tracker = MarginTracker::new();
        for _ in 0..cfg.sweep_cases {
            let t = 10f64.powf(rng.gen_range(2.0..6.0));
            let x_h = CirclePos::from_bits(rng.gen::<u128>());
            let roof = f1.eval(x_h, DerivOrder::Value)?;
            let p = FlowPoint::new_unchecked(x_h, rng.gen::<f64>() * roof);
            let rep = n_lower_bound_check(&f1, &rot1, &p, t)?;
            let counted = rep.precondition_met;
            if counted {
                tracker.record(rep.pass, Some(rep.margin));
            }
            w.write_record([
                format!("{t}"),
                rep.n.to_string(),
                format!("{}", rep.bound),
                rep.precondition_met.to_string(),
                rep.pass.to_string(),
                format!("{}", rep.margin),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        files.push(path);
        sweeps.insert("crossing_bound".to_string(), tracker.stat());
    }

    // shadow-set measure against the interval-count bound
    {
        let path = cfg.out_dir.join("shadow.csv");
        let mut w = open_report(&path, cfg)?;
        w.write_record(["R", "eps0", "measure", "bound", "pass", "margin"])
            .map_err(|e| Error::Io(e.to_string()))?;
        let eps = epsilon_params(cfg.gamma1, cfg.gamma2, cfg.eps2)?;
        let c1 = 1.0 / f1.min_value();
        let mut tracker = MarginTracker::new();
        for k in 10..=20u32 {
            let r = 1u64 << k;
            let measure = shadow_set_measure(&rot1, r, eps.eps0, c1)?;
            let bound = (4.0 * c1 * r as f64 + 2.0) * (r as f64).powf(-1.0 / (1.0 - eps.eps0));
            let pass = measure <= bound + 1e-12;
            tracker.record(pass, Some(bound - measure));
            w.write_record([
                r.to_string(),
                format!("{}", eps.eps0),
                format!("{measure}"),
                format!("{bound}"),
                pass.to_string(),
                format!("{}", bound - measure),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        files.push(path);
        sweeps.insert("shadow".to_string(), tracker.stat());
    }

    let summary_path = cfg.out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&sweeps).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&summary_path, json + "\n")?;
    files.push(summary_path);

    Ok(VerifySummary {
        sweeps,
        hard_violation,
        files,
    })
}
