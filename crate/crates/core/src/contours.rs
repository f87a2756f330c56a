//! Peierls contours on the dual lattice.
//!
//! The configuration is extended by the b.c. on the outer boundary and by
//! `+` beyond it; the bonds separating unequal spins with at least one side
//! inside the rectangle are then cut into contours. Where four such bonds
//! meet, they are split into two linked pairs along a fixed diagonal.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::gibbs::{BoundaryCondition, SpinConfig};
use crate::lattice::{boundary_sides, DualBond, DualVertex, Rect, Region, Site};

/// Which pairs of orthogonal bonds at a dual vertex count as linked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Splitting {
    /// `{N, E}` and `{S, W}`: the two sides of the slope -1 diagonal.
    NorthEast,
    /// `{N, W}` and `{S, E}`: the two sides of the slope +1 diagonal. This
    /// is the one matching the diagonal steps of [`star_crossing`].
    #[default]
    NorthWest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Dir {
    N,
    E,
    S,
    W,
}

const DIRS: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

fn bond_at(v: DualVertex, d: Dir) -> DualBond {
    let w = match d {
        Dir::N => DualVertex::new(v.x, v.y + 1),
        Dir::E => DualVertex::new(v.x + 1, v.y),
        Dir::S => DualVertex::new(v.x, v.y - 1),
        Dir::W => DualVertex::new(v.x - 1, v.y),
    };
    DualBond::new(v, w).expect("unit step")
}

fn linked(a: Dir, b: Dir, split: Splitting) -> bool {
    let pair = if a < b { (a, b) } else { (b, a) };
    match split {
        Splitting::NorthEast => matches!(pair, (Dir::N, Dir::E) | (Dir::S, Dir::W)),
        Splitting::NorthWest => matches!(pair, (Dir::N, Dir::W) | (Dir::E, Dir::S)),
    }
}

/// The four sites around a dual vertex.
fn sites_around(v: DualVertex) -> [Site; 4] {
    [
        Site::new(v.x, v.y),
        Site::new(v.x + 1, v.y),
        Site::new(v.x, v.y + 1),
        Site::new(v.x + 1, v.y + 1),
    ]
}

/// A sequence of dual bonds, consecutive ones sharing a vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contour {
    bonds: Vec<DualBond>,
    /// `bonds.len() + 1` vertices; for a closed contour the first and last
    /// coincide.
    vertices: Vec<DualVertex>,
    closed: bool,
}

impl Contour {
    pub fn bonds(&self) -> &[DualBond] {
        &self.bonds
    }

    pub fn vertices(&self) -> &[DualVertex] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Number of bonds.
    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    pub fn endpoints(&self) -> Option<(DualVertex, DualVertex)> {
        if self.closed {
            None
        } else {
            Some((self.vertices[0], *self.vertices.last().unwrap()))
        }
    }

    /// Highest second coordinate reached by the contour.
    pub fn height(&self) -> f64 {
        self.vertices.iter().map(|v| v.coords().1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sites at distance 1/2 from a bond, together with the four sites
    /// around every vertex where the contour turns through a non-linked pair.
    pub fn neighborhood(&self, split: Splitting) -> BTreeSet<Site> {
        let mut out = BTreeSet::new();
        for b in &self.bonds {
            let (s, t) = b.separated_sites();
            out.insert(s);
            out.insert(t);
        }
        let n = self.bonds.len();
        let turns = if self.closed { n } else { n.saturating_sub(1) };
        for k in 0..turns {
            let e = self.bonds[k];
            let f = self.bonds[(k + 1) % n];
            let v = self.vertices[k + 1];
            let dir = |b: DualBond| DIRS.into_iter().find(|&d| bond_at(v, d) == b).unwrap();
            let (a, c) = (dir(e), dir(f));
            let orthogonal = !matches!((a, c), (Dir::N, Dir::S) | (Dir::S, Dir::N) | (Dir::E, Dir::W) | (Dir::W, Dir::E));
            if orthogonal && !linked(a, c, split) {
                out.extend(sites_around(v));
            }
        }
        out
    }
}

/// All contours of a configuration in a rectangle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourSet {
    pub region: Region,
    pub bc: BoundaryCondition,
    pub split: Splitting,
    pub closed: Vec<Contour>,
    pub open: Vec<Contour>,
}

impl ContourSet {
    pub fn all(&self) -> impl Iterator<Item = &Contour> {
        self.open.iter().chain(&self.closed)
    }

    pub fn bond_set(&self) -> BTreeSet<DualBond> {
        self.all().flat_map(|c| c.bonds.iter().copied()).collect()
    }

    pub fn total_length(&self) -> usize {
        self.all().map(|c| c.len()).sum()
    }

    pub fn max_height(&self) -> Option<f64> {
        self.all().map(|c| c.height()).reduce(f64::max)
    }
}

fn rect_of(region: &Region) -> Result<Rect> {
    region
        .as_rect()
        .ok_or_else(|| Error::UnsupportedShape("contours are defined on rectangles".into()))
}

fn check_bc(bc: &BoundaryCondition, region: &Region) -> Result<()> {
    bc.check_domain(region)?;
    if bc.has_free() {
        return Err(Error::UnsupportedShape("contours are undefined with free boundary spins".into()));
    }
    Ok(())
}

/// Spin of the extended configuration at any site.
fn extended(config: &SpinConfig, bc: &BoundaryCondition, s: Site) -> i8 {
    config.spin_at(s).or_else(|| bc.get(s)).unwrap_or(1)
}

/// Number of sign changes of the b.c. met walking once around the boundary.
pub fn sign_changes(bc: &BoundaryCondition, region: &Region) -> Result<usize> {
    let sides = boundary_sides(region)?;
    let walk: Vec<i8> = sides
        .iter()
        .flat_map(|s| s.sites.iter().map(|&x| bc.get(x).unwrap_or(0)))
        .collect();
    Ok((0..walk.len()).filter(|&i| walk[i] != walk[(i + 1) % walk.len()]).count())
}

/// Splits the separating bonds of `config` extended by `bc` into contours.
pub fn extract(config: &SpinConfig, bc: &BoundaryCondition) -> Result<ContourSet> {
    extract_with(config, bc, Splitting::default())
}

pub fn extract_with(config: &SpinConfig, bc: &BoundaryCondition, split: Splitting) -> Result<ContourSet> {
    let region = config.region().clone();
    let r = rect_of(&region)?;
    check_bc(bc, &region)?;
    let value = |s: Site| extended(config, bc, s);

    // separating bonds with at least one side inside
    let mut bonds = BTreeSet::new();
    for s in region.sites() {
        for n in s.neighbors() {
            if value(s) != value(n) {
                bonds.insert(DualBond::between(s, n)?);
            }
        }
    }

    // pairing at every vertex touched by a bond
    let dual_box = (r.x0 - 1, r.y0 - 1, r.x1, r.y1);
    let on_perimeter = |v: DualVertex| v.x == dual_box.0 || v.x == dual_box.2 || v.y == dual_box.1 || v.y == dual_box.3;
    let is_corner = |v: DualVertex| (v.x == dual_box.0 || v.x == dual_box.2) && (v.y == dual_box.1 || v.y == dual_box.3);
    let separating = |b: DualBond| {
        let (s, t) = b.separated_sites();
        value(s) != value(t)
    };
    let vertices: BTreeSet<DualVertex> = bonds
        .iter()
        .flat_map(|b| {
            let (p, q) = b.endpoints();
            [p, q]
        })
        .collect();
    // partner[(bond, vertex)] = the bond continuing through vertex, or None at an end
    let mut partner: BTreeMap<(DualBond, DualVertex), Option<DualBond>> = BTreeMap::new();
    for &v in &vertices {
        let mut present: Vec<(Dir, bool)> = Vec::new();
        for d in DIRS {
            let b = bond_at(v, d);
            if bonds.contains(&b) {
                present.push((d, true));
            } else if on_perimeter(v) && !is_corner(v) && separating(b) {
                // bond between two boundary sites, outside the rectangle
                let (s, t) = b.separated_sites();
                if !region.contains(s) && !region.contains(t) {
                    present.push((d, false));
                }
            }
        }
        let pairs: Vec<((Dir, bool), Option<(Dir, bool)>)> = match present.len() {
            1 => vec![(present[0], None)],
            2 => vec![(present[0], Some(present[1]))],
            4 => {
                let first = present[0];
                let mate = present[1..]
                    .iter()
                    .copied()
                    .find(|&(d, _)| linked(first.0, d, split))
                    .expect("some bond is linked to the first");
                let rest: Vec<(Dir, bool)> = present[1..].iter().copied().filter(|&p| p != mate).collect();
                vec![(first, Some(mate)), (rest[0], Some(rest[1]))]
            }
            k => {
                return Err(Error::Contract(format!(
                    "dual vertex {v:?} has {k} separating bonds; this cannot happen on a rectangle"
                )))
            }
        };
        for (a, b) in pairs {
            let real = |p: (Dir, bool)| if p.1 { Some(bond_at(v, p.0)) } else { None };
            match (real(a), b.and_then(real)) {
                (Some(x), Some(y)) => {
                    partner.insert((x, v), Some(y));
                    partner.insert((y, v), Some(x));
                }
                (Some(x), None) => {
                    partner.insert((x, v), None);
                }
                (None, Some(y)) => {
                    partner.insert((y, v), None);
                }
                (None, None) => {}
            }
        }
    }

    let mut used: BTreeSet<DualBond> = BTreeSet::new();
    let trace = |start: DualBond, from: DualVertex, used: &mut BTreeSet<DualBond>| -> Contour {
        let mut bs = vec![start];
        let mut vs = vec![from];
        used.insert(start);
        let mut cur = start;
        let mut at = start.other(from);
        loop {
            vs.push(at);
            match partner[&(cur, at)] {
                None => return Contour { bonds: bs, vertices: vs, closed: false },
                Some(next) if next == start => return Contour { bonds: bs, vertices: vs, closed: true },
                Some(next) => {
                    used.insert(next);
                    bs.push(next);
                    at = next.other(at);
                    cur = next;
                }
            }
        }
    };

    let mut open = Vec::new();
    for (&(b, v), p) in &partner {
        if p.is_none() && !used.contains(&b) {
            open.push(trace(b, v, &mut used));
        }
    }
    let mut closed = Vec::new();
    for &b in &bonds {
        if !used.contains(&b) {
            let (p, _) = b.endpoints();
            closed.push(trace(b, p, &mut used));
        }
    }
    Ok(ContourSet { region, bc: bc.clone(), split, closed, open })
}

/// Rebuilds the configuration whose contours are `set`, and checks that it
/// reproduces them.
pub fn reconstruct(set: &ContourSet, bc: &BoundaryCondition) -> Result<SpinConfig> {
    let region = &set.region;
    rect_of(region)?;
    check_bc(bc, region)?;
    let cut = set.bond_set();
    let n = region.len();
    let mut spin: Vec<Option<i8>> = vec![None; n];
    let mut queue = VecDeque::new();
    let flip = |s: Site, t: Site| -> Result<i8> {
        Ok(if cut.contains(&DualBond::between(s, t)?) { -1 } else { 1 })
    };
    let assign = |i: usize, v: i8, spin: &mut Vec<Option<i8>>, queue: &mut VecDeque<usize>| -> Result<()> {
        match spin[i] {
            None => {
                spin[i] = Some(v);
                queue.push_back(i);
                Ok(())
            }
            Some(w) if w == v => Ok(()),
            Some(_) => Err(Error::Reconstruction("contours are inconsistent with the b.c.".into())),
        }
    };
    let sites = region.site_vec();
    for (i, &s) in sites.iter().enumerate() {
        for t in s.neighbors() {
            if let Some(tv) = bc.get(t) {
                assign(i, tv * flip(s, t)?, &mut spin, &mut queue)?;
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let s = sites[i];
        let v = spin[i].unwrap();
        for t in s.neighbors() {
            if let Some(j) = region.rank(t) {
                assign(j, v * flip(s, t)?, &mut spin, &mut queue)?;
            }
        }
    }
    let spins: Vec<i8> = spin
        .into_iter()
        .map(|v| v.ok_or_else(|| Error::Reconstruction("site not reached from the boundary".into())))
        .collect::<Result<_>>()?;
    let config = SpinConfig::from_spins(region, &spins)?;
    let again = extract_with(&config, bc, set.split)?;
    if again.bond_set() != cut || again.open.len() != set.open.len() || again.closed.len() != set.closed.len() {
        return Err(Error::Reconstruction("the contours do not come from any configuration".into()));
    }
    Ok(config)
}

/// Whether a chain of sites with spin `value`, inside `within`, joins `from`
/// to `to`. Consecutive sites are nearest neighbours or diagonal neighbours
/// along the North-East / South-West direction.
pub fn star_crossing(config: &SpinConfig, value: i8, from: &Region, to: &Region, within: &Region) -> Result<bool> {
    if !from.is_subset_of(within) || !to.is_subset_of(within) {
        return Err(Error::Domain("from and to must lie inside within".into()));
    }
    if !within.is_subset_of(config.region()) {
        return Err(Error::Domain("within must lie inside the configuration".into()));
    }
    let good = |s: Site| within.contains(s) && config.spin_at(s) == Some(value);
    let mut seen = vec![false; within.len()];
    let mut queue = VecDeque::new();
    for s in from.sites().filter(|&s| good(s)) {
        seen[within.rank(s).unwrap()] = true;
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        if to.contains(s) {
            return Ok(true);
        }
        let steps = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];
        for (dx, dy) in steps {
            let t = Site::new(s.x + dx, s.y + dy);
            if good(t) {
                let k = within.rank(t).unwrap();
                if !seen[k] {
                    seen[k] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: u32, h: u32) -> Region {
        Region::from_rect(Rect::with_size(w, h).unwrap())
    }

    #[test]
    fn trivial_cases() {
        let r = rect(3, 3);
        let plus = BoundaryCondition::uniform(&r, 1);
        let set = extract(&SpinConfig::all_plus(&r), &plus).unwrap();
        assert!(set.closed.is_empty() && set.open.is_empty());
        assert_eq!(reconstruct(&set, &plus).unwrap(), SpinConfig::all_plus(&r));

        let mut c = SpinConfig::all_plus(&r);
        c.set(4, -1);
        let set = extract(&c, &plus).unwrap();
        assert_eq!(set.closed.len(), 1);
        assert!(set.open.is_empty());
        let g = &set.closed[0];
        assert_eq!(g.len(), 4);
        assert!(g.is_closed());
        assert_eq!(g.height(), 2.5);
    }

    #[test]
    fn free_bc_rejected() {
        let r = rect(2, 2);
        let err = extract(&SpinConfig::all_plus(&r), &BoundaryCondition::free(&r)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedShape(_)));
    }

    #[test]
    fn mixed_bc_has_one_open_contour() {
        let r = rect(4, 3);
        let bc = BoundaryCondition::per_side(&r, [-1, -1, 1, -1]).unwrap();
        assert_eq!(sign_changes(&bc, &r).unwrap(), 2);
        for idx in [0u64, 0xfff, 0x0f0, 0x555, 0xa5a] {
            let set = extract(&SpinConfig::from_index(&r, idx), &bc).unwrap();
            assert_eq!(set.open.len(), 1, "{idx:#x}");
        }
        // all minus inside: the contour runs along the South side
        let set = extract(&SpinConfig::all_minus(&r), &bc).unwrap();
        assert_eq!(set.open[0].height(), 0.5);
        assert_eq!(set.open[0].len(), 4);
    }

    #[test]
    fn height_is_translation_invariant() {
        let a = Region::from_rect(Rect::new(1, 1, 4, 4).unwrap());
        let b = a.translate(7, 0);
        let plus_a = BoundaryCondition::uniform(&a, 1);
        let plus_b = BoundaryCondition::uniform(&b, 1);
        for idx in [0x0001u64, 0x0f00, 0x8421] {
            let ca = SpinConfig::from_index(&a, idx);
            let cb = SpinConfig::from_index(&b, idx);
            let ha = extract(&ca, &plus_a).unwrap().max_height();
            let hb = extract(&cb, &plus_b).unwrap().max_height();
            assert_eq!(ha, hb);
        }
    }

    #[test]
    fn crossing_examples() {
        let r = rect(4, 3);
        let west = Region::from_rect(Rect::new(1, 1, 1, 3).unwrap());
        let east = Region::from_rect(Rect::new(4, 1, 4, 3).unwrap());
        assert!(star_crossing(&SpinConfig::all_minus(&r), -1, &west, &east, &r).unwrap());
        assert!(!star_crossing(&SpinConfig::all_plus(&r), -1, &west, &east, &r).unwrap());
        let mut row = SpinConfig::all_plus(&r);
        for i in 4..8 {
            row.set(i, -1);
        }
        assert!(star_crossing(&row, -1, &west, &east, &r).unwrap());
        // a staircase going up to the right is *-connected, down to the right is not
        let sq = rect(3, 3);
        let w = Region::from_rect(Rect::new(1, 1, 1, 3).unwrap());
        let e = Region::from_rect(Rect::new(3, 1, 3, 3).unwrap());
        let mut up = SpinConfig::all_plus(&sq);
        for s in [Site::new(1, 1), Site::new(2, 2), Site::new(3, 3)] {
            up.set(sq.rank(s).unwrap(), -1);
        }
        assert!(star_crossing(&up, -1, &w, &e, &sq).unwrap());
        let mut down = SpinConfig::all_plus(&sq);
        for s in [Site::new(1, 3), Site::new(2, 2), Site::new(3, 1)] {
            down.set(sq.rank(s).unwrap(), -1);
        }
        assert!(!star_crossing(&down, -1, &w, &e, &sq).unwrap());
    }
}
