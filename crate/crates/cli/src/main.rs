use std::fmt::Display;
use std::io::Read;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use glauber_core::config::{parse_config_dump, ConfigFile, format_config_dump};
use glauber_core::contours::{extract_with, Splitting};
use glauber_core::dynamics::{discrepancy_profile_with, replica_seed, run, ChainSpec, CoupledEnsemble};
use glauber_core::exact::{dominates, tv, ExactModel};
use glauber_core::experiments::{
    autocorrelation, autocorrelation_exact, box_center, exact_curve, exact_summary, kbox_locality,
    scaling_sweep, simulate, simulate_final, statement_experiment, surface_tension_estimate, AutocorrParams,
    BcFamily, Statement,
};
use glauber_core::gibbs::{parse_bc, parse_bc_dist, sample_bc, BcDistribution, SpinConfig};
use glauber_core::lattice::{make_rect, Rect, RectKind, RectSpec, Region, Site};
use glauber_core::schedules::{
    exact_fixtures, schedule_minus_square, schedule_q_from_r, schedule_r_from_q, schedule_stacked,
};
use glauber_core::verify::run_suite;
use glauber_core::{Error, VERSION};

#[derive(Parser, Debug)]
#[command(name = "glauber", version, about = "Heat-bath Glauber dynamics for the 2D Ising model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral gap, mixing time and TV decay from the exact engine.
    Exact(ExactArgs),
    /// Magnetization of independent chains started from all plus.
    Simulate(SimulateArgs),
    /// Coupling times, discrepancy profiles and the statement bounds.
    Couple(CoupleArgs),
    /// Censored against uncensored dynamics.
    Censor(CensorArgs),
    /// Contour statistics of a configuration dump.
    Contour(ContourArgs),
    /// Surface tension from mixed-b.c. partition functions.
    SurfaceTension(SurfaceArgs),
    /// Coupling-time quantiles over box sizes and b.c. families.
    Scaling(ScalingArgs),
    /// Time autocorrelation of the centre spin in an all-plus box.
    Autocorr(AutocorrArgs),
    /// Locality of the minus-start dynamics in boxes around a site.
    Kbox(KboxArgs),
    /// Oracle-backed invariant checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Side length.
    #[arg(long = "L")]
    l: Option<u32>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Boundary condition, e.g. `+`, `free` or `N:- E:- S:+ W:-`.
    #[arg(long)]
    bc: Option<String>,
    /// Boundary-condition law, e.g. `N:plus-phase:8,20 E:- S:+ W:-`.
    #[arg(long = "bc-dist")]
    bc_dist: Option<String>,
    /// Seed; falls back to the config file, then GLAUBER_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long = "t-cap")]
    t_cap: Option<f64>,
    /// Comma-separated observation times.
    #[arg(long = "t-taps")]
    t_taps: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Config file with `key = value` lines and `[subcommand]` sections.
    #[arg(long)]
    config: Option<String>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    common: Common,
    /// Rectangle width (defaults to L).
    #[arg(long)]
    width: Option<u32>,
    /// Rectangle height (defaults to L).
    #[arg(long)]
    height: Option<u32>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// `square`, `r` or `q`.
    #[arg(long)]
    shape: Option<String>,
    /// Write the final configuration of the first replica here.
    #[arg(long)]
    dump: Option<String>,
}

#[derive(Args, Debug)]
struct CoupleArgs {
    #[command(flatten)]
    common: Common,
    /// `times`, `profile`, `a` or `b`.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args, Debug)]
struct CensorArgs {
    #[command(flatten)]
    common: Common,
    /// `q-from-r`, `r-from-q`, `stacked` or `minus-square`.
    #[arg(long)]
    schedule: Option<String>,
    /// Start from all plus (`+`) or all minus (`-`).
    #[arg(long)]
    start: Option<String>,
    /// Evaluate the small fixtures with the exact engine instead.
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Debug)]
struct ContourArgs {
    #[command(flatten)]
    common: Common,
    /// Configuration dump; `-` reads stdin.
    #[arg(long)]
    input: Option<String>,
    /// `north-west` or `north-east`.
    #[arg(long)]
    splitting: Option<String>,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated angles of the normal, in radians.
    #[arg(long)]
    phi: Option<String>,
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated side lengths.
    #[arg(long)]
    sizes: Option<String>,
    /// Comma-separated b.c. families.
    #[arg(long)]
    families: Option<String>,
}

#[derive(Args, Debug)]
struct AutocorrArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "burn-in")]
    burn_in: Option<f64>,
    #[arg(long)]
    window: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Add the exact stationary value (boxes up to 3x3).
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Debug)]
struct KboxArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated half-widths of the boxes.
    #[arg(long)]
    ells: Option<String>,
    /// Observed site as `x,y` (defaults to the centre).
    #[arg(long)]
    site: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
}

/// Flag values with config-file fallbacks: the command line wins, then the
/// subcommand section, then the global section.
struct Settings {
    common: Common,
    file: ConfigFile,
    section: &'static str,
}

impl Settings {
    fn new(common: &Common, section: &'static str) -> Result<Settings> {
        let file = match &common.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {p}"))?;
                ConfigFile::parse(&text)?
            }
            None => ConfigFile::default(),
        };
        Ok(Settings { common: common.clone(), file, section })
    }

    fn value<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.file.get(self.section, key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!(Error::Parameter(format!("config key `{key}`: {e}")))),
            None => Ok(None),
        }
    }

    fn or<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.value(cli, key)?.unwrap_or(default))
    }

    fn flag(&self, cli: bool, key: &str) -> Result<bool> {
        Ok(cli || self.value::<bool>(None, key)?.unwrap_or(false))
    }

    fn l(&self, default: u32) -> Result<u32> {
        self.or(self.common.l, "L", default)
    }

    fn eps(&self) -> Result<f64> {
        self.or(self.common.eps, "eps", 0.25)
    }

    fn beta(&self, default: f64) -> Result<f64> {
        self.or(self.common.beta, "beta", default)
    }

    fn seed(&self) -> Result<u64> {
        if let Some(s) = self.value(self.common.seed, "seed")? {
            return Ok(s);
        }
        match std::env::var("GLAUBER_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|e| anyhow!(Error::Parameter(format!("GLAUBER_SEED: {e}")))),
            Err(_) => Ok(0),
        }
    }

    fn replicas(&self, default: usize) -> Result<usize> {
        self.or(self.common.replicas, "replicas", default)
    }

    fn t(&self, default: f64) -> Result<f64> {
        self.or(self.common.t, "t", default)
    }

    fn t_cap(&self, default: f64) -> Result<f64> {
        self.or(self.common.t_cap, "t-cap", default)
    }

    fn text(&self, cli: Option<String>, key: &str) -> Result<Option<String>> {
        self.value(cli, key)
    }

    /// Tap times; an evenly spaced grid of `n` points up to `t` by default.
    fn taps(&self, t: f64, n: usize) -> Result<Vec<f64>> {
        match self.text(self.common.t_taps.clone(), "t-taps")? {
            Some(s) => list(&s),
            None => Ok((1..=n).map(|k| t * k as f64 / n as f64).collect()),
        }
    }

    fn bc_dist(&self, region: &Region, default: &str) -> Result<BcDistribution> {
        if let Some(d) = self.text(self.common.bc_dist.clone(), "bc-dist")? {
            return Ok(parse_bc_dist(&d, region)?);
        }
        let bc = self.text(self.common.bc.clone(), "bc")?.unwrap_or_else(|| default.to_string());
        Ok(BcDistribution::Deterministic(parse_bc(&bc, region)?))
    }

    fn apply_jobs(&self) -> Result<()> {
        if let Some(n) = self.value(self.common.jobs, "jobs")? {
            if n == 0 {
                bail!(Error::Parameter("jobs must be >= 1".into()));
            }
            // only the first call can configure the global pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(())
    }

    fn out(&self) -> Result<Option<String>> {
        self.text(self.common.out.clone(), "out")
    }
}

fn list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|e| anyhow!(Error::Parameter(format!("bad list entry `{x}`: {e}")))))
        .collect()
}

/// Shortest decimal that survives rounding to 12 significant digits.
fn num(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{r:?}")
}

struct Csv {
    meta: Vec<(String, String)>,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn new(command: &str, header: Vec<&'static str>) -> Csv {
        Csv {
            meta: vec![("command".into(), command.into()), ("version".into(), VERSION.into())],
            header,
            rows: Vec::new(),
        }
    }

    fn meta(&mut self, k: &str, v: impl Display) -> &mut Self {
        self.meta.push((k.into(), v.to_string()));
        self
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

fn emit(settings: &Settings, text: &str) -> Result<()> {
    match settings.out()? {
        Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {p}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn square(l: u32) -> Result<Region> {
    Ok(Region::from_rect(Rect::with_size(l, l)?))
}

fn cmd_exact(a: ExactArgs) -> Result<()> {
    let s = Settings::new(&a.common, "exact")?;
    let l = s.l(2)?;
    let w = s.or(a.width, "width", l)?;
    let h = s.or(a.height, "height", l)?;
    let beta = s.beta(0.4)?;
    let region = Region::from_rect(Rect::with_size(w, h)?);
    let bc = match s.bc_dist(&region, "+")? {
        BcDistribution::Deterministic(bc) => bc,
        d if d.is_exact() => sample_bc(&d, &region, beta, 0)?,
        _ => bail!(Error::Parameter("the exact engine needs a deterministic b.c.".into())),
    };
    let model = ExactModel::build(&region, &bc, beta)?;
    let sum = exact_summary(&model)?;
    let mut out = String::new();
    out.push_str(&format!("# command=exact\n# version={VERSION}\n# width={w}\n# height={h}\n# beta={}\n", num(beta)));
    out.push_str(&format!("gap={}\n", num(sum.gap)));
    out.push_str(&format!("relax_time={}\n", num(sum.relax_time)));
    out.push_str(&format!("mix_time={}\n", num(sum.mix_time)));
    out.push_str(&format!("pi_star={}\n", num(sum.pi_star)));
    if s.text(a.common.t_taps.clone(), "t-taps")?.is_some() {
        let taps = s.taps(1.0, 1)?;
        out.push_str("t,tv_plus,tv_minus,gamma,sup_tv\n");
        for r in exact_curve(&model, &taps)? {
            out.push_str(&format!("{},{},{},{},{}\n", num(r.t), num(r.tv_plus), num(r.tv_minus), num(r.gamma), num(r.sup_tv)));
        }
    }
    emit(&s, &out)
}

fn shape_region(shape: &str, l: u32, eps: f64) -> Result<Region> {
    let kind = match shape {
        "square" => RectKind::Square,
        "r" | "R" => RectKind::R,
        "q" | "Q" => RectKind::Q,
        _ => bail!(Error::Parameter(format!("unknown shape `{shape}`"))),
    };
    Ok(make_rect(RectSpec::new(kind, l, eps))?)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let s = Settings::new(&a.common, "simulate")?;
    s.apply_jobs()?;
    let (l, eps, beta, seed) = (s.l(8)?, s.eps()?, s.beta(0.6)?, s.seed()?);
    let shape = s.text(a.shape, "shape")?.unwrap_or_else(|| "square".into());
    let region = shape_region(&shape, l, eps)?;
    let dist = s.bc_dist(&region, "+")?;
    let t = s.t(10.0)?;
    let taps = s.taps(t, 10)?;
    let replicas = s.replicas(1)?;
    let rows = simulate(&region, &dist, beta, &taps, replicas, seed)?;
    let mut csv = Csv::new("simulate", vec!["t", "magnetization", "magnetization_se", "plus_fraction"]);
    csv.meta("seed", seed).meta("beta", num(beta)).meta("L", l).meta("eps", num(eps)).meta("shape", &shape);
    csv.meta("replicas", replicas).meta("bc_exact", dist.is_exact());
    for r in rows {
        csv.row(vec![num(r.t), num(r.magnetization), num(r.magnetization_se), num(r.plus_fraction)]);
    }
    if let Some(p) = s.text(a.dump, "dump")? {
        let last = taps.last().copied().unwrap_or(t);
        let c = simulate_final(&region, &dist, beta, last, seed, 0)?;
        std::fs::write(&p, format_config_dump(&c)).with_context(|| format!("writing {p}"))?;
    }
    emit(&s, &csv.render())
}

fn cmd_couple(a: CoupleArgs) -> Result<()> {
    let s = Settings::new(&a.common, "couple")?;
    s.apply_jobs()?;
    let (l, eps, beta, seed) = (s.l(8)?, s.eps()?, s.beta(0.6)?, s.seed()?);
    let replicas = s.replicas(100)?;
    let mode = s.text(a.mode, "mode")?.unwrap_or_else(|| "times".into());
    match mode.as_str() {
        "times" => {
            let region = square(l)?;
            let dist = s.bc_dist(&region, "+")?;
            let t_cap = s.t_cap(1e4)?;
            let mut csv = Csv::new("couple", vec!["replica", "coupling_time"]);
            csv.meta("seed", seed).meta("beta", num(beta)).meta("L", l).meta("replicas", replicas).meta("t_cap", num(t_cap));
            let times: Vec<f64> = {
                use rayon::prelude::*;
                (0..replicas as u64)
                    .into_par_iter()
                    .map(|r| {
                        let rs = replica_seed(seed, r);
                        let bc = sample_bc(&dist, &region, beta, rs)?;
                        Ok(glauber_core::dynamics::coupling_time(&region, &bc, beta, rs, t_cap)?.as_f64())
                    })
                    .collect::<glauber_core::Result<_>>()?
            };
            for (r, t) in times.iter().enumerate() {
                csv.row(vec![r.to_string(), num(*t)]);
            }
            emit(&s, &csv.render())
        }
        "profile" => {
            let region = square(l)?;
            let dist = s.bc_dist(&region, "+")?;
            let t = s.t(10.0)?;
            let taps = s.taps(t, 10)?;
            let prof = discrepancy_profile_with(&region, beta, &taps, replicas, seed, |rs| {
                sample_bc(&dist, &region, beta, rs)
            })?;
            let mut csv = Csv::new("couple", vec!["t", "discrepancy_sum", "discrepancy_se"]);
            csv.meta("seed", seed).meta("beta", num(beta)).meta("L", l).meta("replicas", replicas);
            for (k, t) in prof.times.iter().enumerate() {
                csv.row(vec![num(*t), num(prof.sum[k]), num(prof.sum_se[k])]);
            }
            emit(&s, &csv.render())
        }
        "a" | "b" | "A" | "B" => {
            let kind = if mode.eq_ignore_ascii_case("a") { Statement::A } else { Statement::B };
            let rk = if kind == Statement::A { RectKind::R } else { RectKind::Q };
            let region = make_rect(RectSpec::new(rk, l, eps))?;
            let dist = s.bc_dist(&region, "N:- E:- S:+ W:-")?;
            let t = s.t(10.0)?;
            let e = statement_experiment(kind, l, eps, t, beta, &dist, replicas, seed)?;
            let mut csv = Csv::new("couple", vec!["t", "bound", "bound_se", "exact_tv_plus", "exact_tv_minus"]);
            csv.meta("seed", seed).meta("beta", num(beta)).meta("L", l).meta("eps", num(eps));
            csv.meta("replicas", replicas).meta("statement", &mode).meta("sites", e.region.len());
            csv.meta("approximate_bc", e.approximate);
            let (p, m) = e.exact.map_or(("".into(), "".into()), |(p, m)| (num(p), num(m)));
            csv.row(vec![num(t), num(e.bound), num(e.bound_se), p, m]);
            emit(&s, &csv.render())
        }
        _ => bail!(Error::Parameter(format!("unknown couple mode `{mode}`"))),
    }
}

fn cmd_censor(a: CensorArgs) -> Result<()> {
    let s = Settings::new(&a.common, "censor")?;
    s.apply_jobs()?;
    let (eps, beta, seed) = (s.eps()?, s.beta(0.6)?, s.seed()?);
    let t = s.t(1.0)?;
    let start: i8 = match s.text(a.start, "start")?.as_deref().unwrap_or("+") {
        "+" | "+1" | "plus" => 1,
        "-" | "-1" | "minus" => -1,
        x => bail!(Error::Parameter(format!("unknown start `{x}`"))),
    };
    if s.flag(a.exact, "exact")? {
        let mut csv = Csv::new(
            "censor",
            vec!["fixture", "start", "tv_uncensored", "tv_censored", "dominated", "mlr_uncensored", "mlr_censored"],
        );
        csv.meta("beta", num(beta)).meta("t", num(t));
        for fx in exact_fixtures(t)? {
            let dist = s.bc_dist(&fx.region, "N:- E:- S:+ W:-")?;
            let bc = sample_bc(&dist, &fx.region, beta, 0)?;
            let m = ExactModel::build(&fx.region, &bc, beta)?;
            let (init, sched) = if start > 0 { (m.all_plus(), &fx.plus) } else { (m.all_minus(), &fx.minus) };
            let full = m.evolve_full(&m.delta(init), sched.total_time())?;
            let cens = m.evolve_schedule(&m.delta(init), sched)?;
            let (dom, mlr_f, mlr_c) = if start > 0 {
                (dominates(&cens, &full, m.num_sites())?, m.mlr_increasing(&full), m.mlr_increasing(&cens))
            } else {
                (dominates(&full, &cens, m.num_sites())?, m.mlr_decreasing(&full), m.mlr_decreasing(&cens))
            };
            csv.row(vec![
                fx.name.into(),
                start.to_string(),
                num(tv(&full, m.pi())),
                num(tv(&cens, m.pi())),
                dom.to_string(),
                mlr_f.to_string(),
                mlr_c.to_string(),
            ]);
        }
        return emit(&s, &csv.render());
    }
    let l = s.l(8)?;
    let name = s.text(a.schedule, "schedule")?.unwrap_or_else(|| "q-from-r".into());
    let (region, schedule) = match name.as_str() {
        "q-from-r" => {
            let q = schedule_q_from_r(l, eps, t, start)?;
            (q.region, q.schedule)
        }
        "r-from-q" => {
            let r = schedule_r_from_q(l, eps, t, start)?;
            (r.region, r.schedule)
        }
        "stacked" => (square(l)?, schedule_stacked(l, eps, t)?),
        "minus-square" => (square(l)?, schedule_minus_square(l, eps, t)?),
        _ => bail!(Error::Parameter(format!("unknown schedule `{name}`"))),
    };
    let dist = s.bc_dist(&region, "N:- E:- S:+ W:-")?;
    let total = schedule.total_time();
    let taps = s.taps(total, 10)?;
    let replicas = s.replicas(100)?;
    let per_rep: Vec<Vec<(f64, f64)>> = {
        use rayon::prelude::*;
        (0..replicas as u64)
            .into_par_iter()
            .map(|r| {
                let rs = replica_seed(seed, r);
                let bc = sample_bc(&dist, &region, beta, rs)?;
                let init = SpinConfig::uniform(&region, start);
                let ens = CoupledEnsemble {
                    seed: rs,
                    region: region.clone(),
                    beta,
                    chains: vec![
                        ChainSpec { init: init.clone(), bc: bc.clone(), schedule: None },
                        ChainSpec { init, bc, schedule: Some(schedule.clone()) },
                    ],
                };
                let out = run(&ens, total, &taps)?;
                let n = region.len() as f64;
                Ok(out
                    .taps
                    .iter()
                    .map(|c| (c[0].magnetization() as f64 / n, c[1].magnetization() as f64 / n))
                    .collect())
            })
            .collect::<glauber_core::Result<_>>()?
    };
    let mut csv = Csv::new("censor", vec!["t", "magnetization_uncensored", "magnetization_censored"]);
    csv.meta("seed", seed).meta("beta", num(beta)).meta("L", l).meta("eps", num(eps));
    csv.meta("schedule", &name).meta("start", start).meta("replicas", replicas);
    for (k, t) in taps.iter().enumerate() {
        let u = per_rep.iter().map(|v| v[k].0).sum::<f64>() / replicas as f64;
        let c = per_rep.iter().map(|v| v[k].1).sum::<f64>() / replicas as f64;
        csv.row(vec![num(*t), num(u), num(c)]);
    }
    emit(&s, &csv.render())
}

fn cmd_contour(a: ContourArgs) -> Result<()> {
    let s = Settings::new(&a.common, "contour")?;
    let input = s.text(a.input, "input")?.unwrap_or_else(|| "-".into());
    let text = if input == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        std::fs::read_to_string(&input).with_context(|| format!("reading {input}"))?
    };
    let config = parse_config_dump(&text)?;
    let bc_text = s.text(a.common.bc.clone(), "bc")?.unwrap_or_else(|| "+".into());
    let bc = parse_bc(&bc_text, config.region())?;
    let split = match s.text(a.splitting, "splitting")?.as_deref().unwrap_or("north-west") {
        "north-west" => Splitting::NorthWest,
        "north-east" => Splitting::NorthEast,
        x => bail!(Error::Parameter(format!("unknown splitting `{x}`"))),
    };
    let set = extract_with(&config, &bc, split)?;
    let lengths: Vec<String> = set.all().map(|c| c.len().to_string()).collect();
    let mut csv = Csv::new("contour", vec!["count_closed", "count_open", "lengths", "max_height"]);
    csv.meta("sites", config.len());
    csv.row(vec![
        set.closed.len().to_string(),
        set.open.len().to_string(),
        lengths.join(";"),
        set.max_height().map_or_else(String::new, num),
    ]);
    emit(&s, &csv.render())
}

fn cmd_surface(a: SurfaceArgs) -> Result<()> {
    let s = Settings::new(&a.common, "surface-tension")?;
    let (l, beta) = (s.l(6)?, s.beta(1.0)?);
    let phis: Vec<f64> = list(&s.text(a.phi, "phi")?.unwrap_or_else(|| "0".into()))?;
    let mut csv = Csv::new("surface-tension", vec!["L", "beta", "phi", "estimate", "log_z_mixed", "log_z_plus"]);
    csv.meta("L", l).meta("beta", num(beta));
    for phi in phis {
        let e = surface_tension_estimate(l, beta, phi)?;
        csv.row(vec![l.to_string(), num(beta), num(phi), num(e.estimate), num(e.log_z_mixed), num(e.log_z_plus)]);
    }
    emit(&s, &csv.render())
}

fn cmd_scaling(a: ScalingArgs) -> Result<()> {
    let s = Settings::new(&a.common, "scaling")?;
    s.apply_jobs()?;
    let (eps, beta, seed) = (s.eps()?, s.beta(0.6)?, s.seed()?);
    let sizes: Vec<u32> = match s.text(a.sizes, "sizes")? {
        Some(x) => list(&x)?,
        None => vec![s.l(8)?],
    };
    let families: Vec<BcFamily> = match s.text(a.families, "families")? {
        Some(x) => x
            .split(',')
            .map(|f| BcFamily::from_name(f.trim()).ok_or_else(|| anyhow!(Error::Parameter(format!("unknown family `{f}`")))))
            .collect::<Result<_>>()?,
        None => BcFamily::ALL.to_vec(),
    };
    let replicas = s.replicas(100)?;
    let t_cap = s.t_cap(1e4)?;
    let rows = scaling_sweep(&families, &sizes, eps, beta, replicas, seed, t_cap)?;
    let mut csv = Csv::new(
        "scaling",
        vec!["family", "L", "replicas", "median", "median_ci_lo", "median_ci_hi", "q90", "timeout_fraction"],
    );
    csv.meta("seed", seed).meta("beta", num(beta)).meta("eps", num(eps)).meta("replicas", replicas).meta("t_cap", num(t_cap));
    for r in rows {
        csv.row(vec![
            r.family.name().into(),
            r.l.to_string(),
            r.replicas.to_string(),
            num(r.median),
            num(r.median_ci.0),
            num(r.median_ci.1),
            num(r.q90),
            num(r.timeout_fraction),
        ]);
    }
    emit(&s, &csv.render())
}

fn cmd_autocorr(a: AutocorrArgs) -> Result<()> {
    let s = Settings::new(&a.common, "autocorr")?;
    s.apply_jobs()?;
    let p = AutocorrParams {
        l_box: s.l(3)?,
        beta: s.beta(0.5)?,
        burn_in: s.or(a.burn_in, "burn-in", 20.0)?,
        window: s.or(a.window, "window", 200.0)?,
        dt: s.or(a.dt, "dt", 0.05)?,
        replicas: s.replicas(100)?,
        seed: s.seed()?,
    };
    let ts = s.taps(2.0, 4)?;
    let rows = autocorrelation(&p, &ts)?;
    let exact = if s.flag(a.exact, "exact")? { Some(autocorrelation_exact(p.l_box, p.beta, &ts)?) } else { None };
    let mut csv = Csv::new("autocorr", vec!["t", "rho", "rho_se", "rho_exact"]);
    csv.meta("seed", p.seed).meta("beta", num(p.beta)).meta("L", p.l_box).meta("replicas", p.replicas);
    csv.meta("burn_in", num(p.burn_in)).meta("window", num(p.window)).meta("dt", num(p.dt));
    csv.meta("start", "all-plus box, approximating the plus phase");
    for (k, r) in rows.iter().enumerate() {
        let ex = exact.as_ref().map_or_else(String::new, |e| num(e[k]));
        csv.row(vec![num(r.t), num(r.rho), num(r.se), ex]);
    }
    emit(&s, &csv.render())
}

fn cmd_kbox(a: KboxArgs) -> Result<()> {
    let s = Settings::new(&a.common, "kbox")?;
    s.apply_jobs()?;
    let (l, beta, seed) = (s.l(12)?, s.beta(0.6)?, s.seed()?);
    let region = square(l)?;
    let dist = s.bc_dist(&region, "N:- E:- S:+ W:-")?;
    let bc = sample_bc(&dist, &region, beta, seed)?;
    let ells: Vec<u32> = list(&s.text(a.ells, "ells")?.unwrap_or_else(|| "1,2,3,4".into()))?;
    let x = match s.text(a.site, "site")? {
        Some(t) => {
            let v: Vec<i32> = list(&t)?;
            match v[..] {
                [x, y] => Site::new(x, y),
                _ => bail!(Error::Parameter(format!("site must be `x,y`, got `{t}`"))),
            }
        }
        None => box_center(l),
    };
    let t = s.t(10.0)?;
    let replicas = s.replicas(200)?;
    let rows = kbox_locality(l, beta, &bc, x, &ells, t, replicas, seed)?;
    let mut csv = Csv::new("kbox", vec!["ell", "box_sites", "discrepancy", "discrepancy_se"]);
    csv.meta("seed", seed).meta("beta", num(beta)).meta("L", l).meta("t", num(t)).meta("replicas", replicas);
    csv.meta("site", format!("{};{}", x.x, x.y));
    for r in rows {
        csv.row(vec![r.ell.to_string(), r.box_sites.to_string(), num(r.discrepancy), num(r.se)]);
    }
    emit(&s, &csv.render())
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let s = Settings::new(&a.common, "verify")?;
    let (beta, seed) = (s.beta(0.4)?, s.seed()?);
    let results = run_suite(beta, seed);
    let mut out = format!("# command=verify\n# version={VERSION}\n# beta={}\n# seed={seed}\n", num(beta));
    let mut all = true;
    for r in &results {
        all &= r.passed;
        out.push_str(&format!("{} {}: {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail));
    }
    emit(&s, &out)?;
    Ok(all)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Exact(a) => cmd_exact(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Couple(a) => cmd_couple(a)?,
        Command::Censor(a) => cmd_censor(a)?,
        Command::Contour(a) => cmd_contour(a)?,
        Command::SurfaceTension(a) => cmd_surface(a)?,
        Command::Scaling(a) => cmd_scaling(a)?,
        Command::Autocorr(a) => cmd_autocorr(a)?,
        Command::Kbox(a) => cmd_kbox(a)?,
        Command::Verify(a) => return cmd_verify(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let capacity = e.downcast_ref::<Error>().is_some_and(Error::is_capacity);
            ExitCode::from(if capacity { 2 } else { 1 })
        }
    }
}
