//! Exact computations on systems small enough to enumerate.
//!
//! State `k` is the configuration whose rank-`i` spin is `+1` iff bit `i` of
//! `k` is set. Distributions are plain vectors indexed by state; the
//! evolution routines accept signed vectors as well.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dynamics::CensorSchedule;
use crate::error::{Error, Result};
use crate::gibbs::{heatbath_plus_prob, BoundaryCondition, SpinConfig};
use crate::lattice::Region;

/// Largest region [`ExactModel::build`] accepts.
pub const MAX_SITES: usize = 16;
/// Largest region for dense eigen-decomposition (gap, mixing time).
pub const MAX_SPECTRAL_SITES: usize = 12;
/// Largest region for the Strassen check.
pub const MAX_DOMINATION_SITES: usize = 10;
/// Poisson tail mass left out by uniformization.
pub const POISSON_TAIL: f64 = 1e-12;
/// Default threshold of the mixing time, `1/(2e)`.
pub const MIX_EPS: f64 = 0.183_939_720_585_721_16;

pub type DistVector = Vec<f64>;

#[derive(Debug)]
struct Spectrum {
    /// Descending; the first is 0.
    eigenvalues: Vec<f64>,
    /// Column `k` is the `k`-th eigenfunction, orthonormal in `L^2(pi)`.
    phi: DMatrix<f64>,
}

/// The Gibbs measure of a tiny system together with its heat-bath generator.
#[derive(Debug)]
pub struct ExactModel {
    region: Region,
    bc: BoundaryCondition,
    beta: f64,
    n: usize,
    /// Rank-indexed neighbour ranks inside the region.
    nbr: Vec<Vec<usize>>,
    field: Vec<i32>,
    probs: [f64; 9],
    pi: Vec<f64>,
    spectrum: OnceLock<Spectrum>,
}

fn capacity(what: &'static str, got: usize, limit: usize) -> Result<()> {
    if got > limit {
        Err(Error::Capacity { what, got, limit })
    } else {
        Ok(())
    }
}

impl ExactModel {
    pub fn build(region: &Region, bc: &BoundaryCondition, beta: f64) -> Result<ExactModel> {
        capacity("exact model", region.len(), MAX_SITES)?;
        bc.check_domain(region)?;
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        let n = region.len();
        let sites = region.site_vec();
        let nbr: Vec<Vec<usize>> = sites
            .iter()
            .map(|s| s.neighbors().iter().filter_map(|&t| region.rank(t)).collect())
            .collect();
        let field = bc.field(region);
        let mut probs = [0.0; 9];
        for (k, p) in probs.iter_mut().enumerate() {
            *p = heatbath_plus_prob(k as i32 - 4, beta);
        }
        let spin = |k: usize, i: usize| if k >> i & 1 == 1 { 1i64 } else { -1 };
        let logw: Vec<f64> = (0..1usize << n)
            .map(|k| {
                let mut h = 0i64;
                for i in 0..n {
                    let si = spin(k, i);
                    for &j in &nbr[i] {
                        if j > i {
                            h -= si * spin(k, j);
                        }
                    }
                    h -= si * i64::from(field[i]);
                }
                -beta * h as f64
            })
            .collect();
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut pi: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = pi.iter().sum();
        for p in pi.iter_mut() {
            *p /= z;
        }
        Ok(ExactModel {
            region: region.clone(),
            bc: bc.clone(),
            beta,
            n,
            nbr,
            field,
            probs,
            pi,
            spectrum: OnceLock::new(),
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        1 << self.n
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn pi_star(&self) -> f64 {
        self.pi.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn config(&self, k: usize) -> SpinConfig {
        SpinConfig::from_index(&self.region, k as u64)
    }

    pub fn index(&self, c: &SpinConfig) -> Result<usize> {
        if c.region() != &self.region {
            return Err(Error::Domain("configuration lives on another region".into()));
        }
        Ok(c.index() as usize)
    }

    pub fn all_plus(&self) -> usize {
        (1 << self.n) - 1
    }

    pub fn all_minus(&self) -> usize {
        0
    }

    pub fn delta(&self, k: usize) -> DistVector {
        let mut v = vec![0.0; self.num_states()];
        v[k] = 1.0;
        v
    }

    /// Probability that the heat-bath update at rank `i` in state `k` sets +1.
    pub fn plus_prob(&self, k: usize, i: usize) -> f64 {
        let mut s = self.field[i];
        for &j in &self.nbr[i] {
            s += if k >> j & 1 == 1 { 1 } else { -1 };
        }
        self.probs[(s + 4) as usize]
    }

    /// Transition rate from `a` to `b` (off-diagonal; zero unless they differ
    /// at exactly one site).
    pub fn rate(&self, a: usize, b: usize) -> f64 {
        let d = a ^ b;
        if d.count_ones() != 1 {
            return 0.0;
        }
        let i = d.trailing_zeros() as usize;
        let p = self.plus_prob(a, i);
        if b >> i & 1 == 1 {
            p
        } else {
            1.0 - p
        }
    }

    fn active_ranks(&self, active: &Region) -> Result<Vec<usize>> {
        if !active.is_subset_of(&self.region) {
            return Err(Error::Domain("active set leaves the region".into()));
        }
        Ok(active.sites().map(|s| self.region.rank(s).unwrap()).collect())
    }

    /// One step of the uniformized kernel: pick a uniform active site and
    /// resample it.
    fn kernel_apply(&self, v: &[f64], ranks: &[usize], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let w = 1.0 / ranks.len() as f64;
        for &i in ranks {
            let bit = 1usize << i;
            for k in 0..v.len() {
                if k & bit != 0 {
                    continue;
                }
                let m = v[k] + v[k | bit];
                if m == 0.0 {
                    continue;
                }
                let p = self.plus_prob(k, i);
                out[k] += w * m * (1.0 - p);
                out[k | bit] += w * m * p;
            }
        }
    }

    /// `mu0 e^{t L_active}` by uniformization with total rate `|active|`.
    pub fn evolve(&self, mu0: &[f64], t: f64, active: &Region) -> Result<DistVector> {
        if mu0.len() != self.num_states() {
            return Err(Error::Domain("vector length does not match the model".into()));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Parameter(format!("time must be finite and >= 0, got {t}")));
        }
        let ranks = self.active_ranks(active)?;
        if t == 0.0 {
            return Ok(mu0.to_vec());
        }
        let lambda = ranks.len() as f64 * t;
        let cap = (lambda + 40.0 * lambda.sqrt() + 100.0) as usize;
        let mut acc = vec![0.0; mu0.len()];
        let mut cur = mu0.to_vec();
        let mut next = vec![0.0; mu0.len()];
        let mut logw = -lambda;
        let mut cum = 0.0;
        let mut k = 0usize;
        loop {
            let w = logw.exp();
            if w > 0.0 {
                for (a, c) in acc.iter_mut().zip(&cur) {
                    *a += w * c;
                }
            }
            cum += w;
            if (k as f64 >= lambda && cum >= 1.0 - POISSON_TAIL) || k >= cap {
                break;
            }
            self.kernel_apply(&cur, &ranks, &mut next);
            std::mem::swap(&mut cur, &mut next);
            k += 1;
            logw += lambda.ln() - (k as f64).ln();
        }
        // the truncated tail is spread proportionally so mass stays 1
        for a in acc.iter_mut() {
            *a /= cum;
        }
        Ok(acc)
    }

    /// Uncensored evolution.
    pub fn evolve_full(&self, mu0: &[f64], t: f64) -> Result<DistVector> {
        self.evolve(mu0, t, &self.region.clone())
    }

    /// Runs a schedule: each phase applies its reset, then evolves on its
    /// active set for the phase duration.
    pub fn evolve_schedule(&self, mu0: &[f64], schedule: &CensorSchedule) -> Result<DistVector> {
        schedule.check_region(&self.region)?;
        let mut mu = mu0.to_vec();
        for p in schedule.phases() {
            if let Some((r, v)) = &p.reset {
                mu = self.apply_reset(&mu, r, *v)?;
            }
            mu = self.evolve(&mu, p.t_end - p.t_start, &p.active)?;
        }
        Ok(mu)
    }

    /// Pushforward under "set every spin of `sites` to `value`".
    pub fn apply_reset(&self, mu: &[f64], sites: &Region, value: i8) -> Result<DistVector> {
        if value != 1 && value != -1 {
            return Err(Error::Parameter(format!("reset value must be +-1, got {value}")));
        }
        let mask: usize = self.active_ranks(sites)?.iter().map(|&i| 1usize << i).sum();
        let mut out = vec![0.0; mu.len()];
        for (k, &m) in mu.iter().enumerate() {
            let j = if value > 0 { k | mask } else { k & !mask };
            out[j] += m;
        }
        Ok(out)
    }

    pub fn tv(&self, mu: &[f64], nu: &[f64]) -> f64 {
        tv(mu, nu)
    }

    /// Total variation between the marginals on `sites`.
    pub fn tv_marginal(&self, mu: &[f64], nu: &[f64], sites: &Region) -> Result<f64> {
        let mask: usize = self.active_ranks(sites)?.iter().map(|&i| 1usize << i).sum();
        let mut d = vec![0.0; mu.len()];
        for k in 0..mu.len() {
            d[k & mask] += mu[k] - nu[k];
        }
        Ok(0.5 * d.iter().map(|x| x.abs()).sum::<f64>())
    }

    pub fn expectation(&self, mu: &[f64], f: impl Fn(usize) -> f64) -> f64 {
        mu.iter().enumerate().map(|(k, m)| m * f(k)).sum()
    }

    fn spectrum(&self) -> Result<&Spectrum> {
        capacity("spectral computation", self.n, MAX_SPECTRAL_SITES)?;
        Ok(self.spectrum.get_or_init(|| {
            let size = self.num_states();
            let sq: Vec<f64> = self.pi.iter().map(|p| p.sqrt()).collect();
            let mut s = DMatrix::<f64>::zeros(size, size);
            for a in 0..size {
                let mut out = 0.0;
                for i in 0..self.n {
                    let b = a ^ (1 << i);
                    let r = self.rate(a, b);
                    out += r;
                    if b > a {
                        // symmetric by reversibility: sqrt(pi_a pi_b) times the
                        // edge conductance over pi_a pi_b
                        let v = r * sq[a] / sq[b];
                        s[(a, b)] = v;
                        s[(b, a)] = v;
                    }
                }
                s[(a, a)] = -out;
            }
            let eig = SymmetricEigen::new(s);
            let mut order: Vec<usize> = (0..size).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
            let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
            let mut phi = DMatrix::<f64>::zeros(size, size);
            for (c, &k) in order.iter().enumerate() {
                for a in 0..size {
                    phi[(a, c)] = eig.eigenvectors[(a, k)] / sq[a];
                }
            }
            Spectrum { eigenvalues, phi }
        }))
    }

    /// Smallest nonzero eigenvalue of `-L`.
    pub fn spectral_gap(&self) -> Result<f64> {
        let s = self.spectrum()?;
        Ok(if s.eigenvalues.len() < 2 { f64::INFINITY } else { -s.eigenvalues[1] })
    }

    pub fn relax_time(&self) -> Result<f64> {
        Ok(1.0 / self.spectral_gap()?)
    }

    /// Eigenvalues of `L`, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.spectrum()?.eigenvalues.clone())
    }

    /// `H_t(a, b) = P_t(a, b) / pi(b)`, by spectral decomposition.
    fn density_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        let s = self.spectrum()?;
        let mut scaled = s.phi.clone();
        for (c, &l) in s.eigenvalues.iter().enumerate() {
            let e = (t * l).exp();
            scaled.column_mut(c).scale_mut(e);
        }
        Ok(scaled * s.phi.transpose())
    }

    /// `tv(mu_t^sigma, pi)` for every start `sigma`.
    pub fn tv_from_all_starts(&self, t: f64) -> Result<Vec<f64>> {
        let h = self.density_matrix(t)?;
        Ok((0..self.num_states())
            .map(|a| {
                0.5 * (0..self.num_states())
                    .map(|b| self.pi[b] * (h[(a, b)] - 1.0).abs())
                    .sum::<f64>()
            })
            .collect())
    }

    /// `sup_sigma tv(mu_t^sigma, pi)`, over every start.
    pub fn sup_tv(&self, t: f64) -> Result<f64> {
        Ok(self.tv_from_all_starts(t)?.into_iter().fold(0.0, f64::max))
    }

    /// `gamma(t) = max(tv(mu_t^+, pi), tv(mu_t^-, pi))`.
    pub fn gamma(&self, t: f64) -> Result<f64> {
        let p = self.evolve_full(&self.delta(self.all_plus()), t)?;
        let m = self.evolve_full(&self.delta(self.all_minus()), t)?;
        Ok(tv(&p, &self.pi).max(tv(&m, &self.pi)))
    }

    /// Worst-start mixing time at threshold `eps`, by bisection on the
    /// exact worst-start distance. Returns the upper end of the final
    /// bracket, so the distance there is at most `eps`.
    pub fn mixing_time(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Parameter(format!("eps must lie in (0, 1), got {eps}")));
        }
        if self.sup_tv(0.0)? <= eps {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = self.relax_time()?.min(1e6);
        while self.sup_tv(hi)? > eps {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Parameter("mixing time bracket diverged".into()));
            }
        }
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            if self.sup_tv(mid)? > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // distance from a fixed start never increases, so only the starts
        // still above eps at `lo` can decide the crossing
        let starts: Vec<usize> = self
            .tv_from_all_starts(lo)?
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > eps)
            .map(|(a, _)| a)
            .collect();
        for _ in 0..200 {
            if hi - lo <= 1e-14 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let worst = starts.iter().map(|&a| self.tv_from_start(a, mid)).fold(0.0, f64::max);
            if worst > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    fn tv_from_start(&self, a: usize, t: f64) -> f64 {
        let s = self.spectrum().expect("spectrum computed by the caller");
        let w: Vec<f64> = s.eigenvalues.iter().enumerate().map(|(c, &l)| s.phi[(a, c)] * (t * l).exp()).collect();
        0.5 * (0..self.num_states())
            .map(|b| {
                let h: f64 = w.iter().enumerate().map(|(c, x)| x * s.phi[(b, c)]).sum();
                self.pi[b] * (h - 1.0).abs()
            })
            .sum::<f64>()
    }

    /// Stationary autocovariance `Cov_pi(f(X_0), f(X_t))`.
    pub fn autocovariance(&self, f: impl Fn(usize) -> f64, t: f64) -> Result<f64> {
        let s = self.spectrum()?;
        let fv: Vec<f64> = (0..self.num_states()).map(&f).collect();
        let mut acc = 0.0;
        for (c, &l) in s.eigenvalues.iter().enumerate().skip(1) {
            let coef: f64 = (0..self.num_states()).map(|a| self.pi[a] * fv[a] * s.phi[(a, c)]).sum();
            acc += coef * coef * (t * l).exp();
        }
        Ok(acc)
    }

    /// Checks `mu / pi` is nondecreasing along every covering pair, up to a
    /// relative tolerance.
    pub fn mlr_increasing(&self, mu: &[f64]) -> bool {
        self.mlr_check(mu, 1.0)
    }

    /// Checks `mu / pi` is nonincreasing along every covering pair.
    pub fn mlr_decreasing(&self, mu: &[f64]) -> bool {
        self.mlr_check(mu, -1.0)
    }

    fn mlr_check(&self, mu: &[f64], dir: f64) -> bool {
        const TOL: f64 = 1e-9;
        for k in 0..mu.len() {
            for i in 0..self.n {
                let bit = 1usize << i;
                if k & bit != 0 {
                    continue;
                }
                // mu(up)/pi(up) >= mu(k)/pi(k)  <=>  mu(up) pi(k) >= mu(k) pi(up)
                let a = mu[k | bit] * self.pi[k];
                let b = mu[k] * self.pi[k | bit];
                if dir * (a - b) < -TOL * a.abs().max(b.abs()) {
                    return false;
                }
            }
        }
        true
    }

    /// Both sides of the free-b.c. bottleneck inequality
    /// `L^{-2} / pi(floor(m/2) = 0) <= T_relax` on a square.
    pub fn bottleneck_check(&self) -> Result<(f64, f64)> {
        if self.bc.iter().any(|(_, v)| v != 0) {
            return Err(Error::Contract("the bottleneck bound needs free b.c.".into()));
        }
        let r = self
            .region
            .as_rect()
            .filter(|r| r.width() == r.height())
            .ok_or_else(|| Error::Contract("the bottleneck bound needs a square".into()))?;
        let l = f64::from(r.width());
        let n = self.n as i64;
        let mass: f64 = (0..self.num_states())
            .filter(|&k| {
                let m = 2 * i64::from((k as u64).count_ones()) - n;
                m.div_euclid(2) == 0
            })
            .map(|k| self.pi[k])
            .sum();
        Ok((1.0 / (l * l * mass), self.relax_time()?))
    }
}

pub fn tv(mu: &[f64], nu: &[f64]) -> f64 {
    0.5 * mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `max(||pi_a / pi_b||_inf, ||pi_b / pi_a||_inf)` for two models on the
/// same region.
pub fn perturbation_constant(a: &ExactModel, b: &ExactModel) -> Result<f64> {
    if a.region != b.region {
        return Err(Error::Domain("models live on different regions".into()));
    }
    Ok(a.pi
        .iter()
        .zip(&b.pi)
        .map(|(x, y)| (x / y).max(y / x))
        .fold(0.0, f64::max))
}

/// Tests `nu <= mu` in the stochastic order: a flow of full mass must move
/// `nu` upward onto `mu` along covering pairs.
pub fn dominates(mu: &[f64], nu: &[f64], n_sites: usize) -> Result<bool> {
    capacity("domination check", n_sites, MAX_DOMINATION_SITES)?;
    let size = 1usize << n_sites;
    if mu.len() != size || nu.len() != size {
        return Err(Error::Domain("vector length does not match the site count".into()));
    }
    let total_mu: f64 = mu.iter().sum();
    let total_nu: f64 = nu.iter().sum();
    if (total_mu - total_nu).abs() > 1e-12 || mu.iter().chain(nu).any(|&x| x < -1e-15) {
        return Ok(false);
    }
    let source = size;
    let sink = size + 1;
    let mut g = FlowGraph::new(size + 2);
    for k in 0..size {
        if nu[k] > 0.0 {
            g.add_edge(source, k, nu[k]);
        }
        if mu[k] > 0.0 {
            g.add_edge(k, sink, mu[k]);
        }
        for i in 0..n_sites {
            if k >> i & 1 == 0 {
                g.add_edge(k, k | 1 << i, f64::INFINITY);
            }
        }
    }
    let flow = g.max_flow(source, sink);
    Ok(flow >= total_nu - 1e-12)
}

/// Dinic's algorithm on real capacities.
struct FlowGraph {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowGraph {
    const EPS: f64 = 1e-18;

    fn new(n: usize) -> Self {
        FlowGraph { head: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn add_edge(&mut self, a: usize, b: usize, c: f64) {
        self.head[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(c);
        self.head[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(0.0);
    }

    fn levels(&self, s: usize) -> Vec<i32> {
        let mut level = vec![-1; self.head.len()];
        let mut queue = std::collections::VecDeque::new();
        level[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &e in &self.head[v] {
                let w = self.to[e];
                if self.cap[e] > Self::EPS && level[w] < 0 {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        level
    }

    fn push(&mut self, v: usize, t: usize, f: f64, level: &[i32], it: &mut [usize]) -> f64 {
        if v == t {
            return f;
        }
        while it[v] < self.head[v].len() {
            let e = self.head[v][it[v]];
            let w = self.to[e];
            if self.cap[e] > Self::EPS && level[w] == level[v] + 1 {
                let d = self.push(w, t, f.min(self.cap[e]), level, it);
                if d > 0.0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            it[v] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] < 0 {
                return flow;
            }
            let mut it = vec![0; self.head.len()];
            loop {
                let f = self.push(s, t, f64::INFINITY, &level, &mut it);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
    }
}
