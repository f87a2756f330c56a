//! The equilibrium model: configurations, boundary conditions, the
//! Hamiltonian and the heat-bath conditional law.

use std::collections::HashMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{Chain, EventStream};
use crate::error::{Error, Result};
use crate::lattice::{
    boundary, boundary_sides, enlarge, parse_region_token, side_of, Rect, Region, Side, Site,
};

/// Inverse temperature and nothing else; there is no external field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
}

impl ModelParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || beta.is_infinite() {
            return Err(Error::Parameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(ModelParams { beta })
    }
}

/// A +-1 assignment on the sites of a region, one bit per site in rank
/// order (bit set means +1).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    region: Region,
    bits: Vec<u64>,
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len()).map(|i| if self.get(i) > 0 { '+' } else { '-' }).collect();
        write!(f, "SpinConfig({s})")
    }
}

impl SpinConfig {
    pub fn uniform(region: &Region, value: i8) -> SpinConfig {
        let n = region.len();
        let mut bits = vec![0u64; n.div_ceil(64)];
        if value > 0 {
            for (w, word) in bits.iter_mut().enumerate() {
                let hi = (n - 64 * w).min(64);
                *word = if hi == 64 { u64::MAX } else { (1u64 << hi) - 1 };
            }
        }
        SpinConfig { region: region.clone(), bits }
    }

    pub fn all_plus(region: &Region) -> SpinConfig {
        SpinConfig::uniform(region, 1)
    }

    pub fn all_minus(region: &Region) -> SpinConfig {
        SpinConfig::uniform(region, -1)
    }

    /// The configuration whose rank-i spin is bit i of `index`.
    pub fn from_index(region: &Region, index: u64) -> SpinConfig {
        let mut c = SpinConfig::all_minus(region);
        for i in 0..region.len().min(64) {
            if index >> i & 1 == 1 {
                c.set(i, 1);
            }
        }
        c
    }

    pub fn from_spins(region: &Region, spins: &[i8]) -> Result<SpinConfig> {
        if spins.len() != region.len() {
            return Err(Error::Domain(format!(
                "{} spins for a region of {} sites",
                spins.len(),
                region.len()
            )));
        }
        let mut c = SpinConfig::all_minus(region);
        for (i, &v) in spins.iter().enumerate() {
            if v != 1 && v != -1 {
                return Err(Error::Domain(format!("spin value {v} is not +-1")));
            }
            c.set(i, v);
        }
        Ok(c)
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    /// Spin at rank `i`.
    pub fn get(&self, i: usize) -> i8 {
        if self.bits[i / 64] >> (i % 64) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn set(&mut self, i: usize, v: i8) {
        if v > 0 {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn spin_at(&self, s: Site) -> Option<i8> {
        self.region.rank(s).map(|i| self.get(i))
    }

    pub fn spins(&self) -> Vec<i8> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Packed index of the configuration; only meaningful for <= 64 sites.
    pub fn index(&self) -> u64 {
        self.bits.first().copied().unwrap_or(0)
    }

    pub fn magnetization(&self) -> i64 {
        let plus: u32 = self.bits.iter().map(|w| w.count_ones()).sum();
        2 * i64::from(plus) - self.len() as i64
    }

    pub fn count_disagreements(&self, other: &SpinConfig) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }
}

/// Coordinatewise partial order. Configurations on different regions are
/// incomparable.
pub fn leq(a: &SpinConfig, b: &SpinConfig) -> bool {
    a.region == b.region && a.bits.iter().zip(&b.bits).all(|(x, y)| x & !y == 0)
}

/// Spin values on the boundary of a region; 0 means free.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoundaryCondition {
    // sorted by site
    values: Vec<(Site, i8)>,
}

impl fmt::Debug for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .values
            .iter()
            .map(|&(_, v)| match v {
                1 => '+',
                -1 => '-',
                _ => '0',
            })
            .collect();
        write!(f, "BoundaryCondition({s})")
    }
}

impl BoundaryCondition {
    pub fn from_fn(region: &Region, mut f: impl FnMut(Site) -> i8) -> BoundaryCondition {
        BoundaryCondition {
            values: boundary(region).into_iter().map(|s| (s, f(s))).collect(),
        }
    }

    pub fn uniform(region: &Region, value: i8) -> BoundaryCondition {
        BoundaryCondition::from_fn(region, |_| value)
    }

    pub fn free(region: &Region) -> BoundaryCondition {
        BoundaryCondition::uniform(region, 0)
    }

    /// Constant value per side of a rectangle, ordered North, East, South, West.
    pub fn per_side(region: &Region, values: [i8; 4]) -> Result<BoundaryCondition> {
        let r = region
            .as_rect()
            .ok_or_else(|| Error::UnsupportedShape("per-side b.c. need a rectangle".into()))?;
        Ok(BoundaryCondition::from_fn(region, |s| {
            match side_of(r, s).expect("boundary site lies on a side") {
                Side::North => values[0],
                Side::East => values[1],
                Side::South => values[2],
                Side::West => values[3],
            }
        }))
    }

    /// Explicit values; the sites must be exactly the boundary of `region`.
    pub fn from_pairs(region: &Region, pairs: &[(Site, i8)]) -> Result<BoundaryCondition> {
        let map: HashMap<Site, i8> = pairs.iter().copied().collect();
        let bd = boundary(region);
        if map.len() != pairs.len() || map.len() != bd.len() || bd.iter().any(|s| !map.contains_key(s)) {
            return Err(Error::Domain("b.c. sites must be exactly the region boundary".into()));
        }
        if map.values().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::Domain("b.c. values must be -1, 0 or +1".into()));
        }
        Ok(BoundaryCondition {
            values: bd.into_iter().map(|s| (s, map[&s])).collect(),
        })
    }

    pub fn get(&self, s: Site) -> Option<i8> {
        self.values
            .binary_search_by(|(t, _)| t.cmp(&s))
            .ok()
            .map(|i| self.values[i].1)
    }

    pub fn set(&mut self, s: Site, v: i8) -> Result<()> {
        match self.values.binary_search_by(|(t, _)| t.cmp(&s)) {
            Ok(i) => {
                self.values[i].1 = v;
                Ok(())
            }
            Err(_) => Err(Error::Domain(format!("{s} is not a boundary site"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Site, i8)> + '_ {
        self.values.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_free(&self) -> bool {
        self.values.iter().any(|&(_, v)| v == 0)
    }

    /// Errors unless the b.c. is defined exactly on the boundary of `region`.
    pub fn check_domain(&self, region: &Region) -> Result<()> {
        let bd = boundary(region);
        if bd.len() != self.values.len() || bd.iter().zip(&self.values).any(|(a, (b, _))| a != b) {
            return Err(Error::Domain("b.c. is not defined on the region boundary".into()));
        }
        Ok(())
    }

    /// Sum of the boundary spins adjacent to each site of `region`, by rank.
    pub fn field(&self, region: &Region) -> Vec<i32> {
        region
            .sites()
            .map(|s| {
                s.neighbors()
                    .iter()
                    .filter(|n| !region.contains(**n))
                    .map(|&n| i32::from(self.get(n).unwrap_or(0)))
                    .sum()
            })
            .collect()
    }

    /// Pointwise order: `self <= other` at every boundary site.
    pub fn leq(&self, other: &BoundaryCondition) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|((s, a), (t, b))| s == t && a <= b)
    }
}

/// `H(sigma) = -sum_{<x,y> inside} s_x s_y - sum_{x inside, y outside} s_x tau_y`,
/// each unordered internal pair counted once.
pub fn energy(config: &SpinConfig, bc: &BoundaryCondition) -> Result<f64> {
    let region = config.region();
    bc.check_domain(region)?;
    let mut h = 0i64;
    for (i, s) in region.sites().enumerate() {
        let si = i64::from(config.get(i));
        // East and North neighbours only, so each internal pair is seen once
        for n in [Site::new(s.x + 1, s.y), Site::new(s.x, s.y + 1)] {
            if let Some(j) = region.rank(n) {
                h -= si * i64::from(config.get(j));
            }
        }
        for n in s.neighbors() {
            if !region.contains(n) {
                h -= si * i64::from(bc.get(n).unwrap_or(0));
            }
        }
    }
    Ok(h as f64)
}

/// Local field at rank `i`: neighbouring spins inside plus boundary spins.
pub fn local_field(config: &SpinConfig, bc: &BoundaryCondition, i: usize) -> i32 {
    let region = config.region();
    let s = region.site_vec()[i];
    s.neighbors()
        .iter()
        .map(|&n| match region.rank(n) {
            Some(j) => i32::from(config.get(j)),
            None => i32::from(bc.get(n).unwrap_or(0)),
        })
        .sum()
}

/// Probability that the heat-bath update sets the spin to +1 given the sum
/// `s` of its four neighbours: `e^{beta s} / (e^{beta s} + e^{-beta s})`.
pub fn heatbath_plus_prob(neighbor_sum: i32, beta: f64) -> f64 {
    let x = 2.0 * beta * f64::from(neighbor_sum);
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `exp(-beta H)`, unnormalized.
pub fn unnormalized_weight(config: &SpinConfig, bc: &BoundaryCondition, beta: f64) -> Result<f64> {
    Ok((-beta * energy(config, bc)?).exp())
}

/// Largest region [`is_increasing_event`] will enumerate.
pub const MAX_EVENT_SITES: usize = 20;

/// Exhaustively checks that `f` is monotone over all configurations of a
/// small region, using single-site covering pairs.
pub fn is_increasing_fn(region: &Region, f: impl Fn(&SpinConfig) -> f64) -> Result<bool> {
    let n = region.len();
    if n > MAX_EVENT_SITES {
        return Err(Error::Capacity {
            what: "event region",
            got: n,
            limit: MAX_EVENT_SITES,
        });
    }
    let values: Vec<f64> = (0..1u64 << n)
        .map(|idx| f(&SpinConfig::from_index(region, idx)))
        .collect();
    for idx in 0..1u64 << n {
        for i in 0..n {
            if idx >> i & 1 == 0 && values[idx as usize] > values[(idx | 1 << i) as usize] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn is_increasing_event(region: &Region, event: impl Fn(&SpinConfig) -> bool) -> Result<bool> {
    is_increasing_fn(region, |c| if event(c) { 1.0 } else { 0.0 })
}

// ---------------------------------------------------------------------------
// Boundary-condition distributions
// ---------------------------------------------------------------------------

/// How one side of a rectangle is filled.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseSpec {
    AllPlus,
    AllMinus,
    /// Restriction of an equilibrated all-plus box, enlarged by `buffer` on
    /// every side, run for `sweeps` units of time.
    PlusPhaseSample { buffer: u32, sweeps: u32 },
    MinusPhaseSample { buffer: u32, sweeps: u32 },
}

impl PhaseSpec {
    fn is_sampled(&self) -> bool {
        matches!(self, PhaseSpec::PlusPhaseSample { .. } | PhaseSpec::MinusPhaseSample { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BcDistribution {
    Deterministic(BoundaryCondition),
    /// North, East, South, West.
    PerSide([PhaseSpec; 4]),
    /// Sample `base`, then overwrite the sites in `delta` with `value`.
    PinnedDelta {
        base: Box<BcDistribution>,
        delta: Vec<Site>,
        value: i8,
    },
}

impl BcDistribution {
    /// The `(-,-,+,-)` law: plus on the South side, minus elsewhere.
    pub fn minus_minus_plus_minus() -> BcDistribution {
        BcDistribution::PerSide([
            PhaseSpec::AllMinus,
            PhaseSpec::AllMinus,
            PhaseSpec::AllPlus,
            PhaseSpec::AllMinus,
        ])
    }

    /// False when some side is filled by a finite-time phase sample, whose
    /// membership in the domination class is only approximate.
    pub fn is_exact(&self) -> bool {
        match self {
            BcDistribution::Deterministic(_) => true,
            BcDistribution::PerSide(specs) => specs.iter().all(|s| !s.is_sampled()),
            BcDistribution::PinnedDelta { base, .. } => base.is_exact(),
        }
    }
}

/// Draws a boundary condition for `region`. Deterministic in `seed`.
pub fn sample_bc(dist: &BcDistribution, region: &Region, beta: f64, seed: u64) -> Result<BoundaryCondition> {
    match dist {
        BcDistribution::Deterministic(bc) => {
            bc.check_domain(region)?;
            Ok(bc.clone())
        }
        BcDistribution::PerSide(specs) => {
            let sides = boundary_sides(region)?;
            let mut plus_box: Option<SpinConfig> = None;
            let mut minus_box: Option<SpinConfig> = None;
            let mut bc = BoundaryCondition::free(region);
            for (k, (spec, side)) in specs.iter().zip(sides.iter()).enumerate() {
                let value_at: Box<dyn Fn(Site) -> i8> = match spec {
                    PhaseSpec::AllPlus => Box::new(|_| 1),
                    PhaseSpec::AllMinus => Box::new(|_| -1),
                    PhaseSpec::PlusPhaseSample { buffer, sweeps } => {
                        if plus_box.is_none() {
                            plus_box = Some(phase_box(region, 1, *buffer, *sweeps, beta, seed, 2 * k as u64)?);
                        }
                        let b = plus_box.clone().unwrap();
                        Box::new(move |s| b.spin_at(s).unwrap())
                    }
                    PhaseSpec::MinusPhaseSample { buffer, sweeps } => {
                        if minus_box.is_none() {
                            minus_box = Some(phase_box(region, -1, *buffer, *sweeps, beta, seed, 2 * k as u64 + 1)?);
                        }
                        let b = minus_box.clone().unwrap();
                        Box::new(move |s| b.spin_at(s).unwrap())
                    }
                };
                for &s in &side.sites {
                    bc.set(s, value_at(s))?;
                }
            }
            Ok(bc)
        }
        BcDistribution::PinnedDelta { base, delta, value } => {
            let mut bc = sample_bc(base, region, beta, seed)?;
            for &s in delta {
                bc.set(s, *value)?;
            }
            Ok(bc)
        }
    }
}

/// Equilibrates the box around `region` (enlarged by `buffer` on all four
/// sides) with homogeneous `sign` outer b.c., starting from `sign`.
fn phase_box(
    region: &Region,
    sign: i8,
    buffer: u32,
    sweeps: u32,
    beta: f64,
    seed: u64,
    stream: u64,
) -> Result<SpinConfig> {
    if buffer < 1 {
        return Err(Error::Parameter("phase samplers need buffer >= 1".into()));
    }
    let bb = region.bbox();
    let b = i32::try_from(buffer).map_err(|_| Error::Parameter("buffer too large".into()))?;
    // enlarge() keeps the South side fixed, so extend downwards by hand
    let grown = enlarge(&Region::from_rect(bb), buffer)?;
    let gb = grown.bbox();
    let boxed = Region::from_rect(Rect::new(gb.x0, gb.y0 - b, gb.x1, gb.y1)?);
    let outer = BoundaryCondition::uniform(&boxed, sign);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream + 1);
    let stream_seed: u64 = rand::Rng::gen(&mut rng);
    let mut chain = Chain::new(SpinConfig::uniform(&boxed, sign), &outer, beta)?;
    let mut events = EventStream::new(stream_seed, &boxed);
    chain.run_until(&mut events, f64::from(sweeps));
    Ok(chain.config())
}

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

fn spin_char(c: char) -> Option<i8> {
    match c {
        '+' => Some(1),
        '-' => Some(-1),
        '0' | 'f' => Some(0),
        _ => None,
    }
}

fn parse_spin_value(tok: &str) -> Option<i8> {
    match tok {
        "+" | "+1" | "1" => Some(1),
        "-" | "-1" => Some(-1),
        "0" | "f" | "free" => Some(0),
        _ => None,
    }
}

/// Parses a b.c. for `region`. Accepted forms:
///
/// * `+`, `-`, `free`: homogeneous;
/// * `N:- E:- S:+ W:-`: per side, each pattern either one character or one
///   character per site in clockwise order;
/// * `sites x,y:+ x,y:- ...`: explicit values on the whole boundary.
pub fn parse_bc(text: &str, region: &Region) -> Result<BoundaryCondition> {
    let text = text.trim();
    if let Some(v) = parse_spin_value(text) {
        return Ok(BoundaryCondition::uniform(region, v));
    }
    let mut toks = text.split_whitespace().peekable();
    if toks.peek() == Some(&"sites") {
        toks.next();
        let mut pairs = Vec::new();
        for t in toks {
            let (site, val) = t
                .rsplit_once(':')
                .ok_or_else(|| Error::parse(1, format!("expected x,y:v, got `{t}`")))?;
            let (x, y) = site
                .split_once(',')
                .ok_or_else(|| Error::parse(1, format!("bad site `{site}`")))?;
            let x = x.parse::<i32>().map_err(|e| Error::parse(1, e.to_string()))?;
            let y = y.parse::<i32>().map_err(|e| Error::parse(1, e.to_string()))?;
            let v = parse_spin_value(val).ok_or_else(|| Error::parse(1, format!("bad spin `{val}`")))?;
            pairs.push((Site::new(x, y), v));
        }
        return BoundaryCondition::from_pairs(region, &pairs).map_err(|e| Error::parse(1, e.to_string()));
    }
    let sides = boundary_sides(region).map_err(|e| Error::parse(1, e.to_string()))?;
    let mut seen = [false; 4];
    let mut bc = BoundaryCondition::free(region);
    for t in toks {
        let (letter, pat) = t
            .split_once(':')
            .ok_or_else(|| Error::parse(1, format!("expected side:pattern, got `{t}`")))?;
        let mut chars = letter.chars();
        let side = match (chars.next(), chars.next()) {
            (Some(c), None) => Side::from_letter(c),
            _ => None,
        }
        .ok_or_else(|| Error::parse(1, format!("unknown side `{letter}`")))?;
        let k = side as usize;
        if seen[k] {
            return Err(Error::parse(1, format!("side {letter} given twice")));
        }
        seen[k] = true;
        let vals: Vec<i8> = pat
            .chars()
            .map(|c| spin_char(c).ok_or_else(|| Error::parse(1, format!("bad spin `{c}`"))))
            .collect::<Result<_>>()?;
        let sites = &sides[k].sites;
        if vals.len() == 1 {
            for &s in sites {
                bc.set(s, vals[0])?;
            }
        } else if vals.len() == sites.len() {
            for (&s, &v) in sites.iter().zip(&vals) {
                bc.set(s, v)?;
            }
        } else {
            return Err(Error::parse(
                1,
                format!("side {letter} has {} sites, pattern has {}", sites.len(), vals.len()),
            ));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::parse(1, "all four sides N E S W must be given"));
    }
    Ok(bc)
}

/// Writes a b.c. in the most compact form [`parse_bc`] accepts.
pub fn format_bc(bc: &BoundaryCondition, region: &Region) -> String {
    let ch = |v: i8| match v {
        1 => '+',
        -1 => '-',
        _ => '0',
    };
    let first = bc.values.first().map(|&(_, v)| v).unwrap_or(0);
    if bc.values.iter().all(|&(_, v)| v == first) {
        return match first {
            1 => "+".into(),
            -1 => "-".into(),
            _ => "free".into(),
        };
    }
    match boundary_sides(region) {
        Ok(sides) => sides
            .iter()
            .map(|bs| {
                let vals: Vec<i8> = bs.sites.iter().map(|&s| bc.get(s).unwrap_or(0)).collect();
                let pat: String = if vals.iter().all(|&v| v == vals[0]) {
                    ch(vals[0]).to_string()
                } else {
                    vals.iter().map(|&v| ch(v)).collect()
                };
                format!("{}:{}", bs.side.letter(), pat)
            })
            .collect::<Vec<_>>()
            .join(" "),
        Err(_) => {
            let toks: Vec<String> = bc
                .values
                .iter()
                .map(|&(s, v)| format!("{},{}:{}", s.x, s.y, ch(v)))
                .collect();
            format!("sites {}", toks.join(" "))
        }
    }
}

fn parse_phase_spec(pat: &str) -> Result<PhaseSpec> {
    let nums = |rest: &str| -> Result<(u32, u32)> {
        let (b, s) = rest
            .split_once(',')
            .ok_or_else(|| Error::parse(1, format!("expected buffer,sweeps in `{pat}`")))?;
        Ok((
            b.parse().map_err(|_| Error::parse(1, format!("bad buffer `{b}`")))?,
            s.parse().map_err(|_| Error::parse(1, format!("bad sweeps `{s}`")))?,
        ))
    };
    match pat {
        "+" => Ok(PhaseSpec::AllPlus),
        "-" => Ok(PhaseSpec::AllMinus),
        _ => {
            if let Some(rest) = pat.strip_prefix("plus-phase:") {
                let (buffer, sweeps) = nums(rest)?;
                Ok(PhaseSpec::PlusPhaseSample { buffer, sweeps })
            } else if let Some(rest) = pat.strip_prefix("minus-phase:") {
                let (buffer, sweeps) = nums(rest)?;
                Ok(PhaseSpec::MinusPhaseSample { buffer, sweeps })
            } else {
                Err(Error::parse(1, format!("unknown phase spec `{pat}`")))
            }
        }
    }
}

/// Parses a b.c. distribution. Per-side laws are written
/// `N:<p> E:<p> S:<p> W:<p>` with `<p>` one of `+`, `-`,
/// `plus-phase:<buffer>,<sweeps>`, `minus-phase:<buffer>,<sweeps>`; an
/// optional trailing `pin=<region-token>:<+1|-1>` pins a set of sites.
/// Anything else is read as a deterministic b.c. via [`parse_bc`].
pub fn parse_bc_dist(text: &str, region: &Region) -> Result<BcDistribution> {
    let mut pin: Option<(Vec<Site>, i8)> = None;
    let mut rest = Vec::new();
    for t in text.split_whitespace() {
        if let Some(body) = t.strip_prefix("pin=") {
            let (reg, val) = body
                .rsplit_once(':')
                .ok_or_else(|| Error::parse(1, "pin needs <region>:<value>"))?;
            let v = match parse_spin_value(val) {
                Some(v @ (1 | -1)) => v,
                _ => return Err(Error::parse(1, format!("pin value `{val}` must be +1 or -1"))),
            };
            pin = Some((parse_region_token(reg)?.site_vec(), v));
        } else {
            rest.push(t);
        }
    }
    let body = rest.join(" ");
    let sampled = rest.iter().any(|t| t.contains("-phase:"));
    let base = if sampled {
        let mut specs: [Option<PhaseSpec>; 4] = Default::default();
        for t in &rest {
            let (letter, pat) = t
                .split_once(':')
                .ok_or_else(|| Error::parse(1, format!("expected side:pattern, got `{t}`")))?;
            let mut cs = letter.chars();
            let side = match (cs.next(), cs.next()) {
                (Some(c), None) => Side::from_letter(c),
                _ => None,
            }
            .ok_or_else(|| Error::parse(1, format!("unknown side `{letter}`")))?;
            if specs[side as usize].replace(parse_phase_spec(pat)?).is_some() {
                return Err(Error::parse(1, format!("side {letter} given twice")));
            }
        }
        let [n, e, s, w] = specs;
        match (n, e, s, w) {
            (Some(n), Some(e), Some(s), Some(w)) => BcDistribution::PerSide([n, e, s, w]),
            _ => return Err(Error::parse(1, "all four sides N E S W must be given")),
        }
    } else {
        BcDistribution::Deterministic(parse_bc(&body, region)?)
    };
    Ok(match pin {
        Some((delta, value)) => BcDistribution::PinnedDelta {
            base: Box::new(base),
            delta,
            value,
        },
        None => base,
    })
}
