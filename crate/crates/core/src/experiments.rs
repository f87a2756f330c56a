//! Experiment drivers: statement bounds, coupling-time scaling, surface
//! tension, the free-b.c. bottleneck, K-box locality and autocorrelations.

use rayon::prelude::*;

use crate::dynamics::{coupling_time, replica_seed, Chain, EventStream};
use crate::error::{Error, Result};
use crate::exact::{tv, ExactModel, MIX_EPS};
use crate::gibbs::{sample_bc, BcDistribution, BoundaryCondition, PhaseSpec, SpinConfig};
use crate::lattice::{boundary, delta_segment, make_rect, Rect, RectKind, RectSpec, Region, Site};
use crate::stats::{binomial_se, jackknife, mean_se, quantile, quantile_ci};

// ---------------------------------------------------------------------------
// Exact curves
// ---------------------------------------------------------------------------

/// One row of the exact TV-decay table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactRow {
    pub t: f64,
    pub tv_plus: f64,
    pub tv_minus: f64,
    pub gamma: f64,
    pub sup_tv: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSummary {
    pub gap: f64,
    pub relax_time: f64,
    pub mix_time: f64,
    pub pi_star: f64,
}

/// TV decay from the extremal starts and from the worst start.
pub fn exact_curve(model: &ExactModel, times: &[f64]) -> Result<Vec<ExactRow>> {
    times
        .iter()
        .map(|&t| {
            let p = model.evolve_full(&model.delta(model.all_plus()), t)?;
            let m = model.evolve_full(&model.delta(model.all_minus()), t)?;
            let tv_plus = tv(&p, model.pi());
            let tv_minus = tv(&m, model.pi());
            Ok(ExactRow {
                t,
                tv_plus,
                tv_minus,
                gamma: tv_plus.max(tv_minus),
                sup_tv: model.sup_tv(t)?,
            })
        })
        .collect()
}

pub fn exact_summary(model: &ExactModel) -> Result<ExactSummary> {
    Ok(ExactSummary {
        gap: model.spectral_gap()?,
        relax_time: model.relax_time()?,
        mix_time: model.mixing_time(MIX_EPS)?,
        pi_star: model.pi_star(),
    })
}

// ---------------------------------------------------------------------------
// Statements A and B
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statement {
    /// On `R_L`.
    A,
    /// On `Q_L`.
    B,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatementEstimate {
    pub region: Region,
    /// Replica mean of the summed per-site discrepancy at time `t`, an upper
    /// bound on `E tv(mu_t^{+-}, pi)`.
    pub bound: f64,
    pub bound_se: f64,
    /// Set when the b.c. law uses finite-time phase samples.
    pub approximate: bool,
    /// `(E tv(mu_t^+, pi), E tv(mu_t^-, pi))`, when the region is small
    /// enough and the b.c. law is deterministic.
    pub exact: Option<(f64, f64)>,
}

fn deterministic_bc(dist: &BcDistribution, region: &Region, beta: f64) -> Result<Option<BoundaryCondition>> {
    fn fixed(d: &BcDistribution) -> bool {
        match d {
            BcDistribution::Deterministic(_) => true,
            BcDistribution::PerSide(s) => s.iter().all(|p| matches!(p, PhaseSpec::AllPlus | PhaseSpec::AllMinus)),
            BcDistribution::PinnedDelta { base, .. } => fixed(base),
        }
    }
    if fixed(dist) {
        Ok(Some(sample_bc(dist, region, beta, 0)?))
    } else {
        Ok(None)
    }
}

pub fn statement_experiment(
    kind: Statement,
    l: u32,
    eps: f64,
    t: f64,
    beta: f64,
    dist: &BcDistribution,
    replicas: usize,
    seed: u64,
) -> Result<StatementEstimate> {
    let rk = match kind {
        Statement::A => RectKind::R,
        Statement::B => RectKind::Q,
    };
    let region = make_rect(RectSpec::new(rk, l, eps))?;
    let prof = crate::dynamics::discrepancy_profile_with(&region, beta, &[t], replicas, seed, |rs| {
        sample_bc(dist, &region, beta, rs)
    })?;
    let exact = match deterministic_bc(dist, &region, beta)? {
        Some(bc) if region.len() <= crate::exact::MAX_SITES => {
            let m = ExactModel::build(&region, &bc, beta)?;
            let p = m.evolve_full(&m.delta(m.all_plus()), t)?;
            let q = m.evolve_full(&m.delta(m.all_minus()), t)?;
            Some((tv(&p, m.pi()), tv(&q, m.pi())))
        }
        _ => None,
    };
    Ok(StatementEstimate {
        region,
        bound: prof.sum[0],
        bound_se: prof.sum_se[0],
        approximate: !dist.is_exact(),
        exact,
    })
}

// ---------------------------------------------------------------------------
// Scaling of coupling times
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BcFamily {
    AllPlus,
    AllMinus,
    Free,
    /// Plus on East, South and West, minus on North.
    ThreePlusOneMinus,
    MinusMinusPlusMinus,
    /// `(-,-,+,-)` with the middle of the South side pinned to minus.
    PinnedDelta,
}

impl BcFamily {
    pub const ALL: [BcFamily; 6] = [
        BcFamily::AllPlus,
        BcFamily::AllMinus,
        BcFamily::Free,
        BcFamily::ThreePlusOneMinus,
        BcFamily::MinusMinusPlusMinus,
        BcFamily::PinnedDelta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BcFamily::AllPlus => "all-plus",
            BcFamily::AllMinus => "all-minus",
            BcFamily::Free => "free",
            BcFamily::ThreePlusOneMinus => "three-plus-one-minus",
            BcFamily::MinusMinusPlusMinus => "mmpm",
            BcFamily::PinnedDelta => "pinned-delta",
        }
    }

    pub fn from_name(s: &str) -> Option<BcFamily> {
        BcFamily::ALL.into_iter().find(|f| f.name() == s)
    }

    /// The b.c. on the `L x L` square at (1,1).
    pub fn bc(self, l: u32, eps: f64) -> Result<BoundaryCondition> {
        let region = Region::from_rect(Rect::with_size(l, l)?);
        match self {
            BcFamily::AllPlus => Ok(BoundaryCondition::uniform(&region, 1)),
            BcFamily::AllMinus => Ok(BoundaryCondition::uniform(&region, -1)),
            BcFamily::Free => Ok(BoundaryCondition::free(&region)),
            BcFamily::ThreePlusOneMinus => BoundaryCondition::per_side(&region, [-1, 1, 1, 1]),
            BcFamily::MinusMinusPlusMinus => BoundaryCondition::per_side(&region, [-1, -1, 1, -1]),
            BcFamily::PinnedDelta => {
                let mut bc = BoundaryCondition::per_side(&region, [-1, -1, 1, -1])?;
                for s in delta_segment((l / 2).max(1), eps)? {
                    if s.x >= 1 && s.x <= l as i32 {
                        bc.set(s, -1)?;
                    }
                }
                Ok(bc)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub family: BcFamily,
    pub l: u32,
    pub replicas: usize,
    pub median: f64,
    pub median_ci: (f64, f64),
    pub q90: f64,
    pub timeout_fraction: f64,
}

/// Coupling times of the all-plus / all-minus pair on the `L x L` square,
/// one replica per derived seed. Timeouts are reported as `+inf`.
pub fn coupling_times(family: BcFamily, l: u32, eps: f64, beta: f64, replicas: usize, seed: u64, t_cap: f64) -> Result<Vec<f64>> {
    let region = Region::from_rect(Rect::with_size(l, l)?);
    let bc = family.bc(l, eps)?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| Ok(coupling_time(&region, &bc, beta, replica_seed(seed, r), t_cap)?.as_f64()))
        .collect()
}

pub fn scaling_sweep(
    families: &[BcFamily],
    ls: &[u32],
    eps: f64,
    beta: f64,
    replicas: usize,
    seed: u64,
    t_cap: f64,
) -> Result<Vec<ScalingRow>> {
    if replicas == 0 {
        return Err(Error::Parameter("replicas must be >= 1".into()));
    }
    let mut rows = Vec::new();
    for &family in families {
        for &l in ls {
            // the same seeds for every family make comparisons paired
            let times = coupling_times(family, l, eps, beta, replicas, seed ^ u64::from(l), t_cap)?;
            let timeouts = times.iter().filter(|t| t.is_infinite()).count();
            rows.push(ScalingRow {
                family,
                l,
                replicas,
                median: quantile(&times, 0.5),
                median_ci: quantile_ci(&times, 0.5),
                q90: quantile(&times, 0.9),
                timeout_fraction: timeouts as f64 / replicas as f64,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Surface tension
// ---------------------------------------------------------------------------

/// Largest box side for the transfer matrix.
pub const MAX_SURFACE_L: u32 = 10;

/// The `L x L` box at (1,1) and the mixed b.c. `tau_y = +1` iff `n . y >= 0`
/// with `n = (cos phi, sin phi)`, positions measured from the box centre.
pub fn mixed_bc(l: u32, phi: f64) -> Result<(Region, BoundaryCondition)> {
    let region = Region::from_rect(Rect::with_size(l, l)?);
    let c = (f64::from(l) + 1.0) / 2.0;
    let (nx, ny) = (phi.cos(), phi.sin());
    let bc = BoundaryCondition::from_fn(&region, |s| {
        let d = nx * (f64::from(s.x) - c) + ny * (f64::from(s.y) - c);
        // exact zeros stay zero under reflection; treat rounding noise as zero
        if d >= -1e-12 {
            1
        } else {
            -1
        }
    });
    Ok((region, bc))
}

/// `log Z` for the `L x L` box with b.c. `bc`, by a column transfer matrix.
pub fn log_partition_transfer(l: u32, bc: &BoundaryCondition, beta: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::Parameter("L must be at least 1".into()));
    }
    if l > MAX_SURFACE_L {
        return Err(Error::Capacity { what: "transfer matrix side", got: l as usize, limit: MAX_SURFACE_L as usize });
    }
    let region = Region::from_rect(Rect::with_size(l, l)?);
    bc.check_domain(&region)?;
    let n = l as usize;
    let states = 1usize << n;
    let spin = |s: usize, i: usize| if s >> i & 1 == 1 { 1.0 } else { -1.0 };
    let tau = |x: i32, y: i32| f64::from(bc.get(Site::new(x, y)).unwrap_or(0));
    // column x, bit i <-> row i+1
    let column_energy = |x: i32, s: usize| -> f64 {
        let mut e = 0.0;
        for i in 0..n - 1 {
            e += spin(s, i) * spin(s, i + 1);
        }
        e += spin(s, 0) * tau(x, 0);
        e += spin(s, n - 1) * tau(x, l as i32 + 1);
        e
    };
    let side_energy = |x: i32, s: usize| -> f64 { (0..n).map(|i| spin(s, i) * tau(x, i as i32 + 1)).sum() };
    let coupling = |a: usize, b: usize| -> f64 { f64::from(n as u32) - 2.0 * f64::from(((a ^ b) as u32).count_ones()) };

    // v(s) = weight of the columns so far with the last one in state s
    let mut v: Vec<f64> = (0..states)
        .map(|s| beta * (column_energy(1, s) + side_energy(0, s)))
        .collect();
    let mut log_scale = 0.0;
    let normalize = |v: &mut Vec<f64>, log_scale: &mut f64| {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for x in v.iter_mut() {
            *x = (*x - m).exp();
        }
        *log_scale += m;
    };
    normalize(&mut v, &mut log_scale);
    for x in 2..=l as i32 {
        let own: Vec<f64> = (0..states).map(|s| beta * column_energy(x, s)).collect();
        let mut next = vec![f64::NEG_INFINITY; states];
        for (t, nx) in next.iter_mut().enumerate() {
            // log-sum-exp over the previous column
            let terms: Vec<f64> = (0..states)
                .filter(|&s| v[s] > 0.0)
                .map(|s| v[s].ln() + beta * coupling(s, t))
                .collect();
            let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = terms.iter().map(|a| (a - m).exp()).sum();
            *nx = m + sum.ln() + own[t];
        }
        v = next;
        normalize(&mut v, &mut log_scale);
    }
    let total: f64 = (0..states)
        .map(|s| v[s] * (beta * side_energy(l as i32 + 1, s)).exp())
        .sum();
    Ok(log_scale + total.ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceTension {
    pub estimate: f64,
    pub log_z_mixed: f64,
    pub log_z_plus: f64,
}

/// `-cos(phi) / (beta L) log(Z^{+-}(n) / Z^+)`.
pub fn surface_tension_estimate(l: u32, beta: f64, phi: f64) -> Result<SurfaceTension> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Parameter(format!("beta must be finite and > 0, got {beta}")));
    }
    let (region, mixed) = mixed_bc(l, phi)?;
    let plus = BoundaryCondition::uniform(&region, 1);
    let log_z_mixed = log_partition_transfer(l, &mixed, beta)?;
    let log_z_plus = log_partition_transfer(l, &plus, beta)?;
    Ok(SurfaceTension {
        estimate: -phi.cos() / (beta * f64::from(l)) * (log_z_mixed - log_z_plus),
        log_z_mixed,
        log_z_plus,
    })
}

// ---------------------------------------------------------------------------
// Free-b.c. bottleneck
// ---------------------------------------------------------------------------

/// `(bound, T_relax)` on the `L x L` square with free b.c.
pub fn bottleneck(l: u32, beta: f64) -> Result<(f64, f64)> {
    let region = Region::from_rect(Rect::with_size(l, l)?);
    ExactModel::build(&region, &BoundaryCondition::free(&region), beta)?.bottleneck_check()
}

// ---------------------------------------------------------------------------
// K-box locality
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct KboxRow {
    pub ell: u32,
    pub box_sites: usize,
    /// `P(restricted chain has - at x) - P(full chain has - at x)`.
    pub discrepancy: f64,
    pub se: f64,
}

/// The restricted box `K_l(x) = Lambda ∩ (x + [-l, l]^2)` and its b.c.: the
/// outer b.c. where `K` touches the outer boundary, minus elsewhere.
pub fn kbox(region: &Region, bc: &BoundaryCondition, x: Site, ell: u32) -> Result<(Region, BoundaryCondition)> {
    let r = region
        .as_rect()
        .ok_or_else(|| Error::UnsupportedShape("the K-box needs a rectangular domain".into()))?;
    let e = ell as i32;
    let k = Rect::new(
        (x.x - e).max(r.x0),
        (x.y - e).max(r.y0),
        (x.x + e).min(r.x1),
        (x.y + e).min(r.y1),
    )?;
    let kr = Region::from_rect(k);
    let kbc = BoundaryCondition::from_fn(&kr, |s| if region.contains(s) { -1 } else { bc.get(s).unwrap_or(-1) });
    Ok((kr, kbc))
}

/// Minus-start chains on the full square and on each `K_l(x)`, driven by the
/// same stream. The restricted chain is pathwise below the full one, so each
/// replica contributes 0 or 1.
pub fn kbox_locality(
    l: u32,
    beta: f64,
    bc: &BoundaryCondition,
    x: Site,
    ells: &[u32],
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<KboxRow>> {
    let region = Region::from_rect(Rect::with_size(l, l)?);
    bc.check_domain(&region)?;
    if !region.contains(x) {
        return Err(Error::Domain(format!("{x} is not inside the box")));
    }
    if replicas == 0 {
        return Err(Error::Parameter("replicas must be >= 1".into()));
    }
    let boxes: Vec<(Region, BoundaryCondition)> =
        ells.iter().map(|&e| kbox(&region, bc, x, e)).collect::<Result<_>>()?;
    let per_rep: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut full = Chain::new(SpinConfig::all_minus(&region), bc, beta)?;
            let mut restricted: Vec<Chain> = boxes
                .iter()
                .map(|(k, kb)| Chain::new(SpinConfig::all_minus(k), kb, beta))
                .collect::<Result<_>>()?;
            let mut stream = EventStream::new(replica_seed(seed, r), &region);
            while let Some(e) = stream.next_until(t) {
                full.apply(&e);
                for c in restricted.iter_mut() {
                    c.apply(&e);
                }
            }
            let f = full.spin_at(x).unwrap();
            Ok(restricted
                .iter()
                .map(|c| {
                    let a = f64::from(u8::from(c.spin_at(x).unwrap() == -1));
                    let b = f64::from(u8::from(f == -1));
                    a - b
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(ells
        .iter()
        .enumerate()
        .map(|(k, &ell)| {
            let xs: Vec<f64> = per_rep.iter().map(|v| v[k]).collect();
            let (m, se) = mean_se(&xs);
            KboxRow { ell, box_sites: boxes[k].0.len(), discrepancy: m, se }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Autocorrelation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct AutocorrParams {
    pub l_box: u32,
    pub beta: f64,
    pub burn_in: f64,
    /// Length of the observation window after burn-in.
    pub window: f64,
    /// Sampling step; lags are rounded to multiples of it.
    pub dt: f64,
    pub replicas: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AutocorrRow {
    pub t: f64,
    pub rho: f64,
    pub se: f64,
}

/// Centre site of the `L x L` box at (1,1).
pub fn box_center(l: u32) -> Site {
    let c = (l as i32 + 1) / 2;
    Site::new(c, c)
}

struct Window {
    m: f64,
    c: Vec<f64>,
}

/// `rho(t) = <s0(s) s0(s+t)> - <s0>^2` for the centre spin of an all-plus
/// box, over stationary windows after burn-in; jackknife errors over
/// replicas.
pub fn autocorrelation(p: &AutocorrParams, ts: &[f64]) -> Result<Vec<AutocorrRow>> {
    if !(p.dt > 0.0) || !(p.window > 0.0) || !(p.burn_in >= 0.0) {
        return Err(Error::Parameter("dt and window must be > 0, burn-in >= 0".into()));
    }
    if p.replicas < 2 {
        return Err(Error::Parameter("autocorrelation needs at least 2 replicas".into()));
    }
    let lags: Vec<usize> = ts
        .iter()
        .map(|&t| {
            if !(t >= 0.0) || t > p.window {
                Err(Error::Parameter(format!("lag {t} must lie in [0, window]")))
            } else {
                Ok((t / p.dt).round() as usize)
            }
        })
        .collect::<Result<_>>()?;
    let region = Region::from_rect(Rect::with_size(p.l_box, p.l_box)?);
    let bc = BoundaryCondition::uniform(&region, 1);
    let x = box_center(p.l_box);
    let samples = (p.window / p.dt).round() as usize;
    let windows: Vec<Window> = (0..p.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut chain = Chain::new(SpinConfig::all_plus(&region), &bc, p.beta)?;
            let mut stream = EventStream::new(replica_seed(p.seed, r), &region);
            let mut trace = Vec::with_capacity(samples + 1);
            for k in 0..=samples {
                chain.run_until(&mut stream, p.burn_in + k as f64 * p.dt);
                trace.push(f64::from(chain.spin_at(x).unwrap()));
            }
            let m = trace.iter().sum::<f64>() / trace.len() as f64;
            let c = lags
                .iter()
                .map(|&lag| {
                    let n = trace.len().saturating_sub(lag);
                    (0..n).map(|i| trace[i] * trace[i + lag]).sum::<f64>() / n.max(1) as f64
                })
                .collect();
            Ok(Window { m, c })
        })
        .collect::<Result<_>>()?;
    Ok(ts
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let (rho, se) = jackknife(&windows, |g| {
                let n = g.len() as f64;
                let m = g.iter().map(|w| w.m).sum::<f64>() / n;
                let c = g.iter().map(|w| w.c[k]).sum::<f64>() / n;
                c - m * m
            });
            AutocorrRow { t, rho, se }
        })
        .collect())
}

/// Exact stationary autocovariance of the centre spin of an all-plus box.
pub fn autocorrelation_exact(l_box: u32, beta: f64, ts: &[f64]) -> Result<Vec<f64>> {
    let region = Region::from_rect(Rect::with_size(l_box, l_box)?);
    let m = ExactModel::build(&region, &BoundaryCondition::uniform(&region, 1), beta)?;
    let i = region.rank(box_center(l_box)).unwrap();
    ts.iter()
        .map(|&t| m.autocovariance(|k| if k >> i & 1 == 1 { 1.0 } else { -1.0 }, t))
        .collect()
}

// ---------------------------------------------------------------------------
// Simulation summaries
// ---------------------------------------------------------------------------

/// Replica-averaged magnetization and per-site plus frequency at each tap.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulateRow {
    pub t: f64,
    pub magnetization: f64,
    pub magnetization_se: f64,
    pub plus_fraction: f64,
}

/// Independent chains from all plus with b.c. drawn from `dist`, sampled at
/// the tap times.
pub fn simulate(
    region: &Region,
    dist: &BcDistribution,
    beta: f64,
    taps: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<SimulateRow>> {
    if replicas == 0 {
        return Err(Error::Parameter("replicas must be >= 1".into()));
    }
    if taps.windows(2).any(|w| w[0] > w[1]) || taps.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Parameter("tap times must be sorted and >= 0".into()));
    }
    let per_rep: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let rs = replica_seed(seed, r);
            let bc = sample_bc(dist, region, beta, rs)?;
            let mut chain = Chain::new(SpinConfig::all_plus(region), &bc, beta)?;
            let mut stream = EventStream::new(rs ^ 0x5eed, region);
            Ok(taps
                .iter()
                .map(|&t| {
                    chain.run_until(&mut stream, t);
                    chain.spins().iter().map(|&s| f64::from(s)).sum::<f64>() / region.len() as f64
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(taps
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let xs: Vec<f64> = per_rep.iter().map(|v| v[k]).collect();
            let (m, se) = mean_se(&xs);
            SimulateRow { t, magnetization: m, magnetization_se: if replicas > 1 { se } else { 0.0 }, plus_fraction: (1.0 + m) / 2.0 }
        })
        .collect())
}

/// Final configuration of replica `r` of [`simulate`].
pub fn simulate_final(region: &Region, dist: &BcDistribution, beta: f64, t: f64, seed: u64, r: u64) -> Result<SpinConfig> {
    let rs = replica_seed(seed, r);
    let bc = sample_bc(dist, region, beta, rs)?;
    let mut chain = Chain::new(SpinConfig::all_plus(region), &bc, beta)?;
    let mut stream = EventStream::new(rs ^ 0x5eed, region);
    chain.run_until(&mut stream, t);
    Ok(chain.config())
}

/// Empirical law of the state of a small region after time `t` from all
/// plus, as a distribution vector indexed like the exact engine.
pub fn empirical_distribution(region: &Region, bc: &BoundaryCondition, beta: f64, t: f64, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    if region.len() > crate::exact::MAX_SITES {
        return Err(Error::Capacity { what: "empirical distribution", got: region.len(), limit: crate::exact::MAX_SITES });
    }
    let idx: Vec<usize> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut chain = Chain::new(SpinConfig::all_plus(region), bc, beta)?;
            let mut stream = EventStream::new(replica_seed(seed, r), region);
            chain.run_until(&mut stream, t);
            Ok(chain.config().index() as usize)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0.0; 1 << region.len()];
    for k in idx {
        counts[k] += 1.0;
    }
    for c in counts.iter_mut() {
        *c /= replicas as f64;
    }
    Ok(counts)
}

/// Estimated probability of an event under the law at time `t` from all
/// plus, with its standard error.
pub fn event_probability(
    region: &Region,
    bc: &BoundaryCondition,
    beta: f64,
    t: f64,
    replicas: usize,
    seed: u64,
    event: impl Fn(&SpinConfig) -> bool + Sync,
) -> Result<(f64, f64)> {
    let hits: Vec<bool> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut chain = Chain::new(SpinConfig::all_plus(region), bc, beta)?;
            let mut stream = EventStream::new(replica_seed(seed, r), region);
            chain.run_until(&mut stream, t);
            Ok(event(&chain.config()))
        })
        .collect::<Result<_>>()?;
    let p = hits.iter().filter(|&&h| h).count() as f64 / replicas as f64;
    Ok((p, binomial_se(p, replicas)))
}

/// Sites of the outer boundary lying on the South side of an `L`-wide box.
pub fn south_boundary(l: u32) -> Result<Vec<Site>> {
    let region = Region::from_rect(Rect::with_size(l, l)?);
    Ok(boundary(&region).into_iter().filter(|s| s.y == 0).collect())
}
