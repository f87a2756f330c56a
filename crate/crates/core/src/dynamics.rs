//! Continuous-time heat-bath simulation driven by one shared Poisson stream.
//!
//! Every chain of an ensemble reads the same sequence of `(time, site, u)`
//! rings and applies the threshold rule `u < p_+`, which is what makes the
//! coupling monotone. Censored chains skip the rings that fall outside their
//! active region.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gibbs::{heatbath_plus_prob, BoundaryCondition, SpinConfig};
use crate::lattice::{Region, Site};

/// One ring of the global clock.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub site: Site,
    pub u: f64,
}

/// The Poisson process of rate `|region|` with uniform site marks and
/// uniform coins. A deterministic function of the seed.
#[derive(Clone, Debug)]
pub struct EventStream {
    rng: ChaCha8Rng,
    sites: Vec<Site>,
    time: f64,
    pending: Option<Event>,
}

impl EventStream {
    pub fn new(seed: u64, region: &Region) -> EventStream {
        EventStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            sites: region.site_vec(),
            time: 0.0,
            pending: None,
        }
    }

    fn draw(&mut self) -> Event {
        let n = self.sites.len() as f64;
        // 1 - u lies in (0, 1], so the log is finite
        let gap = -(1.0 - self.rng.gen::<f64>()).ln() / n;
        // keep times strictly increasing even for a denormal gap
        let next = self.time + gap;
        self.time = if next > self.time { next } else { f64::from_bits(self.time.to_bits() + 1) };
        let site = self.sites[self.rng.gen_range(0..self.sites.len())];
        let u = self.rng.gen::<f64>();
        Event { time: self.time, site, u }
    }

    pub fn peek(&mut self) -> Event {
        match self.pending {
            Some(e) => e,
            None => {
                let e = self.draw();
                self.pending = Some(e);
                e
            }
        }
    }

    pub fn next_event(&mut self) -> Event {
        match self.pending.take() {
            Some(e) => e,
            None => self.draw(),
        }
    }

    /// Pops the next event if it rings no later than `t`.
    pub fn next_until(&mut self, t: f64) -> Option<Event> {
        if self.peek().time <= t {
            self.pending.take()
        } else {
            None
        }
    }
}

impl Iterator for EventStream {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        Some(self.next_event())
    }
}

/// Seed for replica `r` of a run seeded with `seed`.
pub fn replica_seed(seed: u64, r: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng.gen()
}

/// Applies a single heat-bath update to `config` at `site`.
pub fn step(config: &mut SpinConfig, bc: &BoundaryCondition, site: Site, u: f64, beta: f64) -> Result<()> {
    let region = config.region().clone();
    let i = region
        .rank(site)
        .ok_or_else(|| Error::Domain(format!("{site} is not in the region")))?;
    let s: i32 = site
        .neighbors()
        .iter()
        .map(|&n| match region.rank(n) {
            Some(j) => i32::from(config.get(j)),
            None => i32::from(bc.get(n).unwrap_or(0)),
        })
        .sum();
    config.set(i, if u < heatbath_plus_prob(s, beta) { 1 } else { -1 });
    Ok(())
}

const OUTSIDE: u32 = u32::MAX;

/// A single chain with precomputed neighbour tables, the workhorse of every
/// simulation.
#[derive(Clone, Debug)]
pub struct Chain {
    region: Region,
    spins: Vec<i8>,
    nbr: Vec<[u32; 4]>,
    field: Vec<i32>,
    probs: [f64; 9],
}

impl Chain {
    pub fn new(init: SpinConfig, bc: &BoundaryCondition, beta: f64) -> Result<Chain> {
        let region = init.region().clone();
        bc.check_domain(&region)?;
        let nbr = region
            .sites()
            .map(|s| {
                let ns = s.neighbors();
                let mut out = [OUTSIDE; 4];
                for (k, n) in ns.iter().enumerate() {
                    if let Some(j) = region.rank(*n) {
                        out[k] = j as u32;
                    }
                }
                out
            })
            .collect();
        let mut probs = [0.0; 9];
        for (k, p) in probs.iter_mut().enumerate() {
            *p = heatbath_plus_prob(k as i32 - 4, beta);
        }
        Ok(Chain {
            field: bc.field(&region),
            spins: init.spins(),
            region,
            nbr,
            probs,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn config(&self) -> SpinConfig {
        SpinConfig::from_spins(&self.region, &self.spins).expect("spins are always +-1")
    }

    /// Replaces the boundary condition, keeping the current spins.
    pub fn set_bc(&mut self, bc: &BoundaryCondition) -> Result<()> {
        bc.check_domain(&self.region)?;
        self.field = bc.field(&self.region);
        Ok(())
    }

    #[inline]
    pub fn update_rank(&mut self, i: usize, u: f64) -> bool {
        let mut s = self.field[i];
        for &j in &self.nbr[i] {
            if j != OUTSIDE {
                s += i32::from(self.spins[j as usize]);
            }
        }
        let v = if u < self.probs[(s + 4) as usize] { 1 } else { -1 };
        let changed = self.spins[i] != v;
        self.spins[i] = v;
        changed
    }

    /// Applies the event if its site belongs to this chain; returns the rank
    /// that was updated.
    #[inline]
    pub fn apply(&mut self, e: &Event) -> Option<usize> {
        let i = self.region.rank(e.site)?;
        self.update_rank(i, e.u);
        Some(i)
    }

    /// Applies every event ringing no later than `t`.
    pub fn run_until(&mut self, stream: &mut EventStream, t: f64) {
        while let Some(e) = stream.next_until(t) {
            self.apply(&e);
        }
    }

    pub fn reset(&mut self, sites: &Region, value: i8) {
        for s in sites.sites() {
            if let Some(i) = self.region.rank(s) {
                self.spins[i] = value;
            }
        }
    }

    pub fn spin_at(&self, s: Site) -> Option<i8> {
        self.region.rank(s).map(|i| self.spins[i])
    }
}

/// One phase of a censoring schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    pub t_start: f64,
    pub t_end: f64,
    pub active: Region,
    /// Sites set to a value at `t_start`, before any ring of the phase.
    pub reset: Option<(Region, i8)>,
}

/// Consecutive phases partitioning `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CensorSchedule {
    phases: Vec<Phase>,
}

impl CensorSchedule {
    pub fn new(phases: Vec<Phase>) -> Result<CensorSchedule> {
        if phases.is_empty() {
            return Err(Error::Contract("a schedule needs at least one phase".into()));
        }
        let mut t = 0.0;
        for (k, p) in phases.iter().enumerate() {
            if p.t_start != t {
                return Err(Error::Contract(format!(
                    "phase {k} starts at {} but the previous one ends at {t}",
                    p.t_start
                )));
            }
            if !(p.t_end > p.t_start) || !p.t_end.is_finite() {
                return Err(Error::Contract(format!("phase {k} has an empty or invalid time interval")));
            }
            if let Some((_, v)) = &p.reset {
                if *v != 1 && *v != -1 {
                    return Err(Error::Contract(format!("phase {k} resets to {v}, not +-1")));
                }
            }
            t = p.t_end;
        }
        Ok(CensorSchedule { phases })
    }

    /// The uncensored schedule: everything active on `[0, t]`.
    pub fn trivial(region: &Region, t: f64) -> Result<CensorSchedule> {
        CensorSchedule::new(vec![Phase {
            t_start: 0.0,
            t_end: t,
            active: region.clone(),
            reset: None,
        }])
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn total_time(&self) -> f64 {
        self.phases.last().map(|p| p.t_end).unwrap_or(0.0)
    }

    /// Index of the phase in force at time `t` (phases are half-open except
    /// the last).
    pub fn phase_at(&self, t: f64) -> Option<usize> {
        if t < 0.0 || t > self.total_time() {
            return None;
        }
        Some(self.phases.iter().position(|p| t < p.t_end).unwrap_or(self.phases.len() - 1))
    }

    /// Errors unless every active set and reset set lies inside `region`.
    pub fn check_region(&self, region: &Region) -> Result<()> {
        for (k, p) in self.phases.iter().enumerate() {
            if !p.active.is_subset_of(region) {
                return Err(Error::Domain(format!("phase {k}: active set leaves the region")));
            }
            if let Some((r, _)) = &p.reset {
                if !r.is_subset_of(region) {
                    return Err(Error::Domain(format!("phase {k}: reset set leaves the region")));
                }
            }
        }
        Ok(())
    }

    /// Union of all active sets.
    pub fn covered(&self) -> Region {
        let mut u = self.phases[0].active.clone();
        for p in &self.phases[1..] {
            u = u.union(&p.active).expect("union of non-empty regions");
        }
        u
    }
}

/// A chain of an ensemble: where it starts, its b.c. and its schedule
/// (`None` means uncensored).
#[derive(Clone, Debug)]
pub struct ChainSpec {
    pub init: SpinConfig,
    pub bc: BoundaryCondition,
    pub schedule: Option<CensorSchedule>,
}

/// Chains driven by one shared stream.
#[derive(Clone, Debug)]
pub struct CoupledEnsemble {
    pub seed: u64,
    /// Region the stream draws sites from; every chain region lies inside.
    pub region: Region,
    pub beta: f64,
    pub chains: Vec<ChainSpec>,
}

/// Result of [`run`]: final configurations and, for every tap time, one
/// configuration per chain.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub finals: Vec<SpinConfig>,
    pub taps: Vec<Vec<SpinConfig>>,
}

struct Live<'a> {
    chain: Chain,
    schedule: Option<&'a CensorSchedule>,
    phase: usize,
}

impl Live<'_> {
    /// Enters every phase starting no later than `t`, applying its reset.
    fn advance_to(&mut self, t: f64) {
        if let Some(s) = self.schedule {
            while self.phase + 1 < s.phases.len() && s.phases[self.phase + 1].t_start <= t {
                self.phase += 1;
                if let Some((r, v)) = &s.phases[self.phase].reset {
                    self.chain.reset(r, *v);
                }
            }
        }
    }

    fn active(&self, site: Site) -> bool {
        match self.schedule {
            Some(s) => s.phases[self.phase].active.contains(site),
            None => true,
        }
    }
}

/// Advances all chains through the shared stream up to time `t`. Tap times
/// record the configuration just after the last ring at or before the tap.
pub fn run(ens: &CoupledEnsemble, t: f64, taps: &[f64]) -> Result<RunOutput> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Parameter(format!("run time must be finite and >= 0, got {t}")));
    }
    if taps.iter().any(|&s| !(0.0..=t).contains(&s)) || taps.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parameter("tap times must be sorted and lie in [0, T]".into()));
    }
    let mut live = Vec::with_capacity(ens.chains.len());
    for c in &ens.chains {
        if !c.init.region().is_subset_of(&ens.region) {
            return Err(Error::Domain("chain region must lie inside the ensemble region".into()));
        }
        if let Some(s) = &c.schedule {
            if s.total_time() < t {
                return Err(Error::Contract(format!(
                    "schedule covers [0, {}] but the run lasts {t}",
                    s.total_time()
                )));
            }
            s.check_region(c.init.region())?;
        }
        let mut l = Live {
            chain: Chain::new(c.init.clone(), &c.bc, ens.beta)?,
            schedule: c.schedule.as_ref(),
            phase: 0,
        };
        if let Some((r, v)) = c.schedule.as_ref().and_then(|s| s.phases[0].reset.as_ref()) {
            l.chain.reset(r, *v);
        }
        live.push(l);
    }
    let mut stream = EventStream::new(ens.seed, &ens.region);
    let mut out_taps = Vec::with_capacity(taps.len());
    let mut next_tap = 0;
    loop {
        let e = stream.peek();
        let horizon = e.time.min(t);
        while next_tap < taps.len() && (taps[next_tap] < e.time || e.time > t) {
            let at = taps[next_tap];
            for l in live.iter_mut() {
                l.advance_to(at);
            }
            out_taps.push(live.iter().map(|l| l.chain.config()).collect());
            next_tap += 1;
        }
        if e.time > t {
            for l in live.iter_mut() {
                l.advance_to(horizon);
            }
            break;
        }
        stream.next_event();
        for l in live.iter_mut() {
            l.advance_to(e.time);
            if l.active(e.site) {
                l.chain.apply(&e);
            }
        }
    }
    Ok(RunOutput {
        finals: live.iter().map(|l| l.chain.config()).collect(),
        taps: out_taps,
    })
}

/// Outcome of a coupling-time measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CouplingTime {
    Coupled(f64),
    Timeout,
}

impl CouplingTime {
    /// The time, with a timeout read as `+inf`.
    pub fn as_f64(self) -> f64 {
        match self {
            CouplingTime::Coupled(t) => t,
            CouplingTime::Timeout => f64::INFINITY,
        }
    }
}

/// First ring after which the all-plus and all-minus chains with b.c. `bc`
/// agree, or `Timeout` if that has not happened by `t_cap`.
pub fn coupling_time(region: &Region, bc: &BoundaryCondition, beta: f64, seed: u64, t_cap: f64) -> Result<CouplingTime> {
    let top = SpinConfig::all_plus(region);
    let bottom = SpinConfig::all_minus(region);
    coupling_time_from(&top, &bottom, bc, beta, seed, t_cap)
}

/// Coupling time of two chains sharing stream and b.c.
pub fn coupling_time_from(
    a: &SpinConfig,
    b: &SpinConfig,
    bc: &BoundaryCondition,
    beta: f64,
    seed: u64,
    t_cap: f64,
) -> Result<CouplingTime> {
    if a.region() != b.region() {
        return Err(Error::Domain("both chains must live on the same region".into()));
    }
    let mut x = Chain::new(a.clone(), bc, beta)?;
    let mut y = Chain::new(b.clone(), bc, beta)?;
    let mut diff = a.count_disagreements(b);
    if diff == 0 {
        return Ok(CouplingTime::Coupled(0.0));
    }
    let mut stream = EventStream::new(seed, a.region());
    while let Some(e) = stream.next_until(t_cap) {
        let i = x.region.rank(e.site).expect("stream draws from the chain region");
        let before = x.spins[i] != y.spins[i];
        x.update_rank(i, e.u);
        y.update_rank(i, e.u);
        let after = x.spins[i] != y.spins[i];
        match (before, after) {
            (true, false) => diff -= 1,
            (false, true) => diff += 1,
            _ => {}
        }
        if diff == 0 {
            return Ok(CouplingTime::Coupled(e.time));
        }
    }
    Ok(CouplingTime::Timeout)
}

/// Replica-averaged per-site gaps `P(plus chain = +) - P(minus chain = +)` at
/// each time, with their sum.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscrepancyProfile {
    pub times: Vec<f64>,
    /// `per_site[k][i]`: gap at time `times[k]`, site of rank `i`.
    pub per_site: Vec<Vec<f64>>,
    pub sum: Vec<f64>,
    /// Standard error of `sum` across replicas.
    pub sum_se: Vec<f64>,
    pub replicas: usize,
}

/// The per-replica disagreement counts of an all-plus / all-minus pair at
/// each of `times` (sorted), for one b.c. and one seed.
pub fn disagreement_trace(
    region: &Region,
    bc: &BoundaryCondition,
    beta: f64,
    seed: u64,
    times: &[f64],
) -> Result<Vec<Vec<bool>>> {
    if times.windows(2).any(|w| w[0] > w[1]) || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Parameter("times must be sorted and >= 0".into()));
    }
    let mut x = Chain::new(SpinConfig::all_plus(region), bc, beta)?;
    let mut y = Chain::new(SpinConfig::all_minus(region), bc, beta)?;
    let mut stream = EventStream::new(seed, region);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while let Some(e) = stream.next_until(t) {
            let i = x.region.rank(e.site).expect("stream draws from the chain region");
            x.update_rank(i, e.u);
            y.update_rank(i, e.u);
        }
        out.push(x.spins.iter().zip(&y.spins).map(|(a, b)| a != b).collect());
    }
    Ok(out)
}

/// Estimates the per-site discrepancy profile from `replicas` independent
/// streams, each with its own b.c. drawn by `bc_for(replica_seed)`.
pub fn discrepancy_profile_with(
    region: &Region,
    beta: f64,
    times: &[f64],
    replicas: usize,
    seed: u64,
    bc_for: impl Fn(u64) -> Result<BoundaryCondition> + Sync,
) -> Result<DiscrepancyProfile> {
    use rayon::prelude::*;
    if replicas == 0 {
        return Err(Error::Parameter("replicas must be >= 1".into()));
    }
    let traces: Vec<Vec<Vec<bool>>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let rs = replica_seed(seed, r);
            let bc = bc_for(rs)?;
            disagreement_trace(region, &bc, beta, rs ^ 0x5eed, times)
        })
        .collect::<Result<_>>()?;
    let n = region.len();
    let rf = replicas as f64;
    let mut per_site = vec![vec![0.0; n]; times.len()];
    let mut sum = vec![0.0; times.len()];
    let mut sum_se = vec![0.0; times.len()];
    for k in 0..times.len() {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for tr in &traces {
            let d = tr[k].iter().filter(|&&b| b).count() as f64;
            s1 += d;
            s2 += d * d;
            for (i, &b) in tr[k].iter().enumerate() {
                if b {
                    per_site[k][i] += 1.0;
                }
            }
        }
        for v in per_site[k].iter_mut() {
            *v /= rf;
        }
        sum[k] = s1 / rf;
        let var = if replicas > 1 { (s2 - s1 * s1 / rf) / (rf - 1.0) } else { 0.0 };
        sum_se[k] = (var.max(0.0) / rf).sqrt();
    }
    Ok(DiscrepancyProfile {
        times: times.to_vec(),
        per_site,
        sum,
        sum_se,
        replicas,
    })
}

/// Discrepancy profile for a fixed b.c.
pub fn discrepancy_profile(
    region: &Region,
    bc: &BoundaryCondition,
    beta: f64,
    times: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<DiscrepancyProfile> {
    bc.check_domain(region)?;
    discrepancy_profile_with(region, beta, times, replicas, seed, |_| Ok(bc.clone()))
}
