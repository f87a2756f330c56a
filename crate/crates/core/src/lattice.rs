//! Integer-lattice geometry.
//!
//! Sites live on `Z^2`. Every rectangle produced by [`make_rect`] has its
//! lower-left site at `(1, 1)`, so its South boundary is the row `y = 0`.
//! Regions are bitmasks over an axis-aligned bounding box.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Largest bounding box (in sites) a [`Region`] may allocate.
pub const MAX_BBOX_AREA: u64 = 1 << 24;

/// A site of the square lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    /// The four nearest neighbours, in the order North, East, South, West.
    pub fn neighbors(self) -> [Site; 4] {
        [
            Site::new(self.x, self.y + 1),
            Site::new(self.x + 1, self.y),
            Site::new(self.x, self.y - 1),
            Site::new(self.x - 1, self.y),
        ]
    }

    pub fn l1_distance(self, other: Site) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

// Row-major: South to North, then West to East.
impl Ord for Site {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Inclusive axis-aligned integer rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl Rect {
    pub fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Result<Self> {
        if x0 > x1 || y0 > y1 {
            return Err(Error::Parameter(format!(
                "empty rectangle {x0} {y0} {x1} {y1}"
            )));
        }
        let r = Rect { x0, y0, x1, y1 };
        if r.area() > MAX_BBOX_AREA {
            return Err(Error::Capacity {
                what: "rectangle area",
                got: usize::try_from(r.area()).unwrap_or(usize::MAX),
                limit: MAX_BBOX_AREA as usize,
            });
        }
        Ok(r)
    }

    /// Rectangle of the given size with lower-left site at `(1, 1)`.
    pub fn with_size(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter("rectangle sides must be positive".into()));
        }
        let w = i32::try_from(width).map_err(|_| Error::Parameter("width too large".into()))?;
        let h = i32::try_from(height).map_err(|_| Error::Parameter("height too large".into()))?;
        Rect::new(1, 1, w, h)
    }

    pub fn width(&self) -> u32 {
        (i64::from(self.x1) - i64::from(self.x0) + 1) as u32
    }

    pub fn height(&self) -> u32 {
        (i64::from(self.y1) - i64::from(self.y0) + 1) as u32
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    pub fn contains(&self, s: Site) -> bool {
        s.x >= self.x0 && s.x <= self.x1 && s.y >= self.y0 && s.y <= self.y1
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Rect {
        Rect {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            x1: self.x1 + dx,
            y1: self.y1 + dy,
        }
    }

    /// Sites in row-major order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Site::new(x, y)))
    }

    fn offset(&self, s: Site) -> usize {
        let dx = (s.x - self.x0) as usize;
        let dy = (s.y - self.y0) as usize;
        dy * self.width() as usize + dx
    }
}

/// A non-empty finite set of sites, stored as a bitmask over its bounding box.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Region {
    bbox: Rect,
    words: Vec<u64>,
    // popcount of all words before index i; makes `rank` O(1)
    prefix: Vec<u32>,
    count: usize,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_rect() {
            Some(r) => write!(f, "Region(rect {} {} {} {})", r.x0, r.y0, r.x1, r.y1),
            None => write!(f, "Region({} sites in {:?})", self.count, self.bbox),
        }
    }
}

impl Region {
    pub fn from_rect(rect: Rect) -> Region {
        let n = rect.area() as usize;
        let mut words = vec![u64::MAX; n.div_ceil(64)];
        if n % 64 != 0 {
            *words.last_mut().unwrap() = (1u64 << (n % 64)) - 1;
        }
        Region::from_words(rect, words)
    }

    /// Builds a region from arbitrary sites; duplicates are ignored.
    pub fn from_sites<I: IntoIterator<Item = Site>>(sites: I) -> Result<Region> {
        let sites: Vec<Site> = sites.into_iter().collect();
        if sites.is_empty() {
            return Err(Error::Parameter("region must contain at least one site".into()));
        }
        let x0 = sites.iter().map(|s| s.x).min().unwrap();
        let x1 = sites.iter().map(|s| s.x).max().unwrap();
        let y0 = sites.iter().map(|s| s.y).min().unwrap();
        let y1 = sites.iter().map(|s| s.y).max().unwrap();
        let bbox = Rect::new(x0, y0, x1, y1)?;
        let mut words = vec![0u64; (bbox.area() as usize).div_ceil(64)];
        for s in sites {
            let o = bbox.offset(s);
            words[o / 64] |= 1 << (o % 64);
        }
        Ok(Region::from_words(bbox, words))
    }

    fn from_words(bbox: Rect, words: Vec<u64>) -> Region {
        let mut prefix = Vec::with_capacity(words.len());
        let mut acc = 0u32;
        for w in &words {
            prefix.push(acc);
            acc += w.count_ones();
        }
        Region {
            bbox,
            words,
            prefix,
            count: acc as usize,
        }
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn len(&self) -> usize {
        self.count
    }

    /// Always false for a constructed region; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, s: Site) -> bool {
        if !self.bbox.contains(s) {
            return false;
        }
        let o = self.bbox.offset(s);
        self.words[o / 64] >> (o % 64) & 1 == 1
    }

    /// Position of `s` among the member sites in row-major order.
    pub fn rank(&self, s: Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        let o = self.bbox.offset(s);
        let below = self.words[o / 64] & ((1u64 << (o % 64)) - 1);
        Some(self.prefix[o / 64] as usize + below.count_ones() as usize)
    }

    /// Member sites in row-major order; the i-th item has rank i.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.bbox.sites().filter(move |&s| self.contains(s))
    }

    pub fn site_vec(&self) -> Vec<Site> {
        self.sites().collect()
    }

    /// The rectangle this region fills exactly, if any.
    pub fn as_rect(&self) -> Option<Rect> {
        (self.count as u64 == self.bbox.area()).then_some(self.bbox)
    }

    pub fn is_rectangle(&self) -> bool {
        self.as_rect().is_some()
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.sites().all(|s| other.contains(s))
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Region {
        Region {
            bbox: self.bbox.translate(dx, dy),
            words: self.words.clone(),
            prefix: self.prefix.clone(),
            count: self.count,
        }
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        Region::from_sites(self.sites().chain(other.sites()))
    }

    /// `None` when the intersection is empty.
    pub fn intersection(&self, other: &Region) -> Option<Region> {
        Region::from_sites(self.sites().filter(|&s| other.contains(s))).ok()
    }

    /// `None` when the difference is empty.
    pub fn difference(&self, other: &Region) -> Option<Region> {
        Region::from_sites(self.sites().filter(|&s| !other.contains(s))).ok()
    }
}

/// The special rectangles used by the multi-scale construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RectKind {
    /// `L x ceil(L^(1/2+eps))`.
    R,
    /// `L x ceil((2L+1)^(1/2+eps))`.
    Q,
    /// `L x L`.
    Square,
    /// The i-th rectangle of the stacked sequence inside the `L x L` square.
    Stacked(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RectSpec {
    pub kind: RectKind,
    pub l: u32,
    pub eps: f64,
}

impl RectSpec {
    pub fn new(kind: RectKind, l: u32, eps: f64) -> Self {
        RectSpec { kind, l, eps }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::Parameter("L must be at least 1".into()));
        }
        if self.kind != RectKind::Square {
            check_eps(self.eps)?;
        }
        Ok(())
    }

    pub fn height(&self) -> Result<u32> {
        self.validate()?;
        match self.kind {
            RectKind::R => Ok(r_height(self.l, self.eps)),
            RectKind::Q => Ok(q_height(self.l, self.eps)),
            RectKind::Square => Ok(self.l),
            RectKind::Stacked(i) => {
                let hs = stacked_heights(self.l, self.eps)?;
                hs.get(i as usize).copied().ok_or_else(|| {
                    Error::Parameter(format!(
                        "stacked index {i} out of range (only {} rectangles)",
                        hs.len()
                    ))
                })
            }
        }
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    Ok(())
}

/// `ceil(v)` that ignores float noise just above an integer, e.g. `16^0.75`.
pub(crate) fn ceil_robust(v: f64) -> u32 {
    (v - 1e-9).ceil().max(0.0) as u32
}

pub(crate) fn r_height(l: u32, eps: f64) -> u32 {
    ceil_robust(f64::from(l).powf(0.5 + eps))
}

pub(crate) fn q_height(l: u32, eps: f64) -> u32 {
    ceil_robust((2.0 * f64::from(l) + 1.0).powf(0.5 + eps))
}

/// Heights `h_0 < h_1 < ... < h_{k-1}` of the stacked rectangles inside the
/// `L x L` square. `h_i = h_0 + i (q - h_0)` with the last one clamped to `L`,
/// where `h_0` is the R-height and `q` the Q-height.
pub fn stacked_heights(l: u32, eps: f64) -> Result<Vec<u32>> {
    RectSpec::new(RectKind::Square, l, eps).validate()?;
    check_eps(eps)?;
    let h0 = r_height(l, eps);
    let step = q_height(l, eps) - h0;
    let mut hs = vec![h0.min(l)];
    while *hs.last().unwrap() < l {
        if step == 0 {
            // only possible for degenerate tiny L; jump straight to the top
            hs.push(l);
            break;
        }
        let next = h0 + step * hs.len() as u32;
        hs.push(next.min(l));
    }
    Ok(hs)
}

pub fn make_rect(spec: RectSpec) -> Result<Region> {
    let h = spec.height()?;
    Ok(Region::from_rect(Rect::with_size(spec.l, h)?))
}

/// Widens a rectangle by `l` on East and West and raises its North side by
/// `l`; the South side stays where it is.
pub fn enlarge(region: &Region, l: u32) -> Result<Region> {
    let r = region
        .as_rect()
        .ok_or_else(|| Error::UnsupportedShape("enlarge needs a rectangle".into()))?;
    let l = i32::try_from(l).map_err(|_| Error::Parameter("enlargement too large".into()))?;
    Ok(Region::from_rect(Rect::new(r.x0 - l, r.y0, r.x1 + l, r.y1 + l)?))
}

/// Sites outside `region` at lattice distance one from it, row-major.
pub fn boundary(region: &Region) -> Vec<Site> {
    let mut out: Vec<Site> = region
        .sites()
        .flat_map(|s| s.neighbors())
        .filter(|&n| !region.contains(n))
        .collect();
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    North,
    East,
    South,
    West,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::North, Side::East, Side::South, Side::West];

    pub fn letter(self) -> char {
        match self {
            Side::North => 'N',
            Side::East => 'E',
            Side::South => 'S',
            Side::West => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Side> {
        match c.to_ascii_uppercase() {
            'N' => Some(Side::North),
            'E' => Some(Side::East),
            'S' => Some(Side::South),
            'W' => Some(Side::West),
            _ => None,
        }
    }
}

/// One side of a rectangle's boundary. Sites are listed in clockwise order
/// (North West-to-East, East North-to-South, and so on), so concatenating the
/// four sides walks the boundary once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundarySide {
    pub side: Side,
    pub sites: Vec<Site>,
}

/// Splits the boundary of a rectangle into its four sides, North first.
pub fn boundary_sides(region: &Region) -> Result<[BoundarySide; 4]> {
    let r = region
        .as_rect()
        .ok_or_else(|| Error::UnsupportedShape("boundary sides need a rectangle".into()))?;
    let north = (r.x0..=r.x1).map(|x| Site::new(x, r.y1 + 1)).collect();
    let east = (r.y0..=r.y1).rev().map(|y| Site::new(r.x1 + 1, y)).collect();
    let south = (r.x0..=r.x1).rev().map(|x| Site::new(x, r.y0 - 1)).collect();
    let west = (r.y0..=r.y1).map(|y| Site::new(r.x0 - 1, y)).collect();
    Ok([
        BoundarySide { side: Side::North, sites: north },
        BoundarySide { side: Side::East, sites: east },
        BoundarySide { side: Side::South, sites: south },
        BoundarySide { side: Side::West, sites: west },
    ])
}

/// Which side of the rectangle `r` a boundary site sits on.
pub fn side_of(r: Rect, s: Site) -> Option<Side> {
    if s.y == r.y1 + 1 && s.x >= r.x0 && s.x <= r.x1 {
        Some(Side::North)
    } else if s.x == r.x1 + 1 && s.y >= r.y0 && s.y <= r.y1 {
        Some(Side::East)
    } else if s.y == r.y0 - 1 && s.x >= r.x0 && s.x <= r.x1 {
        Some(Side::South)
    } else if s.x == r.x0 - 1 && s.y >= r.y0 && s.y <= r.y1 {
        Some(Side::West)
    } else {
        None
    }
}

/// The South-boundary segment `{(i, 0) : |i - L| <= L^(3 eps)}` of
/// `R_{2L+1}`, clipped to the columns `1..=2L+1`.
pub fn delta_segment(l: u32, eps: f64) -> Result<Vec<Site>> {
    if l == 0 {
        return Err(Error::Parameter("L must be at least 1".into()));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    let radius = f64::from(l).powf(3.0 * eps);
    let l = l as i32;
    Ok((1..=2 * l + 1)
        .filter(|&i| f64::from((i - l).abs()) <= radius + 1e-12)
        .map(|i| Site::new(i, 0))
        .collect())
}

/// A vertex of the dual lattice; `(x, y)` stands for the point
/// `(x + 1/2, y + 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DualVertex {
    pub x: i32,
    pub y: i32,
}

impl DualVertex {
    pub const fn new(x: i32, y: i32) -> Self {
        DualVertex { x, y }
    }

    pub fn coords(self) -> (f64, f64) {
        (f64::from(self.x) + 0.5, f64::from(self.y) + 0.5)
    }
}

impl Ord for DualVertex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for DualVertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A unit segment of the dual lattice, stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualBond {
    a: DualVertex,
    b: DualVertex,
}

impl DualBond {
    pub fn new(p: DualVertex, q: DualVertex) -> Result<Self> {
        let horizontal = p.y == q.y && p.x.abs_diff(q.x) == 1;
        let vertical = p.x == q.x && p.y.abs_diff(q.y) == 1;
        if !(horizontal || vertical) {
            return Err(Error::Parameter(format!(
                "dual vertices {p:?} and {q:?} are not adjacent"
            )));
        }
        Ok(if p < q { DualBond { a: p, b: q } } else { DualBond { a: q, b: p } })
    }

    /// The bond separating two nearest-neighbour sites.
    pub fn between(s: Site, t: Site) -> Result<Self> {
        if s.l1_distance(t) != 1 {
            return Err(Error::Parameter(format!("{s} and {t} are not neighbours")));
        }
        let (lo, hi) = if s < t { (s, t) } else { (t, s) };
        if lo.y == hi.y {
            // vertical bond at x = lo.x + 1/2
            DualBond::new(DualVertex::new(lo.x, lo.y - 1), DualVertex::new(lo.x, lo.y))
        } else {
            // horizontal bond at y = lo.y + 1/2
            DualBond::new(DualVertex::new(lo.x - 1, lo.y), DualVertex::new(lo.x, lo.y))
        }
    }

    pub fn endpoints(&self) -> (DualVertex, DualVertex) {
        (self.a, self.b)
    }

    pub fn is_horizontal(&self) -> bool {
        self.a.y == self.b.y
    }

    /// The two primal sites at distance 1/2 from the bond.
    pub fn separated_sites(&self) -> (Site, Site) {
        if self.is_horizontal() {
            (Site::new(self.b.x, self.a.y), Site::new(self.b.x, self.a.y + 1))
        } else {
            (Site::new(self.a.x, self.b.y), Site::new(self.a.x + 1, self.b.y))
        }
    }

    pub fn other(&self, v: DualVertex) -> DualVertex {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

/// Parses the line-oriented region format. Each non-empty line is either
/// `rect x0 y0 x1 y1` or `sites x,y x,y ...`; the region is the union of all
/// lines. `#` starts a comment.
pub fn parse_region(text: &str) -> Result<Region> {
    let mut sites: Vec<Site> = Vec::new();
    let mut rects: Vec<Rect> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("rect") => {
                let nums: Vec<&str> = parts.collect();
                if nums.len() != 4 {
                    return Err(Error::parse(i + 1, "rect needs four integers"));
                }
                let v = nums
                    .iter()
                    .map(|t| t.parse::<i32>().map_err(|e| Error::parse(i + 1, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                rects.push(Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| Error::parse(i + 1, e.to_string()))?);
            }
            Some("sites") => {
                for tok in parts {
                    sites.push(parse_site(tok).map_err(|m| Error::parse(i + 1, m))?);
                }
            }
            Some(other) => return Err(Error::parse(i + 1, format!("unknown region keyword `{other}`"))),
            None => unreachable!(),
        }
    }
    assemble(rects, sites, 1)
}

fn assemble(rects: Vec<Rect>, sites: Vec<Site>, line: usize) -> Result<Region> {
    if rects.len() == 1 && sites.is_empty() {
        return Ok(Region::from_rect(rects[0]));
    }
    let mut total: u64 = sites.len() as u64;
    for r in &rects {
        total += r.area();
        if total > MAX_BBOX_AREA {
            return Err(Error::Capacity {
                what: "region size",
                got: total as usize,
                limit: MAX_BBOX_AREA as usize,
            });
        }
    }
    let all = rects.iter().flat_map(|r| r.sites().collect::<Vec<_>>()).chain(sites);
    Region::from_sites(all).map_err(|e| Error::parse(line, e.to_string()))
}

fn parse_site(tok: &str) -> std::result::Result<Site, String> {
    let (x, y) = tok
        .split_once(',')
        .ok_or_else(|| format!("site `{tok}` must look like x,y"))?;
    let x = x.trim().parse::<i32>().map_err(|e| e.to_string())?;
    let y = y.trim().parse::<i32>().map_err(|e| e.to_string())?;
    Ok(Site::new(x, y))
}

/// Writes the region in the format read by [`parse_region`].
pub fn format_region(region: &Region) -> String {
    match region.as_rect() {
        Some(r) => format!("rect {} {} {} {}", r.x0, r.y0, r.x1, r.y1),
        None => {
            let toks: Vec<String> = region.sites().map(|s| format!("{},{}", s.x, s.y)).collect();
            format!("sites {}", toks.join(" "))
        }
    }
}

/// Parses the whitespace-free region token used inside schedule lines:
/// `rect:x0,y0,x1,y1` or `sites:x,y;x,y`, pieces joined with `|`.
pub fn parse_region_token(tok: &str) -> Result<Region> {
    let mut rects = Vec::new();
    let mut sites = Vec::new();
    for piece in tok.split('|') {
        if let Some(body) = piece.strip_prefix("rect:") {
            let v = body
                .split(',')
                .map(|t| t.trim().parse::<i32>().map_err(|e| Error::parse(1, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != 4 {
                return Err(Error::parse(1, "rect token needs four integers"));
            }
            rects.push(Rect::new(v[0], v[1], v[2], v[3]).map_err(|e| Error::parse(1, e.to_string()))?);
        } else if let Some(body) = piece.strip_prefix("sites:") {
            for s in body.split(';').filter(|s| !s.is_empty()) {
                sites.push(parse_site(s).map_err(|m| Error::parse(1, m))?);
            }
        } else {
            return Err(Error::parse(1, format!("bad region token `{piece}`")));
        }
    }
    assemble(rects, sites, 1)
}

/// Inverse of [`parse_region_token`]. Non-rectangular regions are written
/// as unions of maximal horizontal runs.
pub fn format_region_token(region: &Region) -> String {
    let bb = region.bbox();
    let mut pieces = Vec::new();
    if let Some(r) = region.as_rect() {
        return format!("rect:{},{},{},{}", r.x0, r.y0, r.x1, r.y1);
    }
    for y in bb.y0..=bb.y1 {
        let mut x = bb.x0;
        while x <= bb.x1 {
            if region.contains(Site::new(x, y)) {
                let start = x;
                while x < bb.x1 && region.contains(Site::new(x + 1, y)) {
                    x += 1;
                }
                pieces.push(format!("rect:{start},{y},{x},{y}"));
            }
            x += 1;
        }
    }
    pieces.join("|")
}
