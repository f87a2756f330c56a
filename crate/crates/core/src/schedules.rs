//! The censoring schedules of the multi-scale argument, as data that both
//! the simulator and the exact engine can run.

use crate::dynamics::{CensorSchedule, Phase};
use crate::error::{Error, Result};
use crate::lattice::{
    check_eps, delta_segment, format_region_token, parse_region_token, q_height, r_height, stacked_heights, Rect,
    Region, Site,
};

fn rows(width: u32, y0: u32, y1: u32) -> Result<Region> {
    Ok(Region::from_rect(Rect::new(1, y0 as i32, width as i32, y1 as i32)?))
}

fn cols(x0: u32, x1: u32, height: u32) -> Result<Region> {
    Ok(Region::from_rect(Rect::new(x0 as i32, 1, x1 as i32, height as i32)?))
}

fn check_sign(start: i8) -> Result<()> {
    if start != 1 && start != -1 {
        return Err(Error::Parameter(format!("start must be +1 or -1, got {start}")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Parameter(format!("schedule time must be finite and > 0, got {t}")));
    }
    Ok(())
}

/// Two phases of length `t`: `first` active, then `reset` applied and
/// `second` active.
fn two_phase(t: f64, first: Region, second: Region, reset: Option<(Region, i8)>) -> Result<CensorSchedule> {
    CensorSchedule::new(vec![
        Phase { t_start: 0.0, t_end: t, active: first, reset: None },
        Phase { t_start: t, t_end: 2.0 * t, active: second, reset },
    ])
}

/// Pieces of the Q-from-R schedule on `Q_L`.
#[derive(Clone, Debug, PartialEq)]
pub struct QFromR {
    pub region: Region,
    /// The top copy of `R_L`.
    pub a: Region,
    /// The bottom copy of `R_L`.
    pub b: Region,
    pub schedule: CensorSchedule,
}

/// On `Q_L`: started from plus, run the top copy `A` of `R_L`, raise the
/// bottom copy `B` to plus and run `B`. From minus, the mirror: run `B`,
/// lower `A` to minus, run `A`. Total length `2t`.
pub fn schedule_q_from_r(l: u32, eps: f64, t: f64, start: i8) -> Result<QFromR> {
    check_sign(start)?;
    check_time(t)?;
    check_eps(eps)?;
    if l == 0 {
        return Err(Error::Parameter("L must be at least 1".into()));
    }
    let hr = r_height(l, eps);
    let hq = q_height(l, eps);
    let region = rows(l, 1, hq)?;
    let a = rows(l, hq - hr + 1, hq)?;
    let b = rows(l, 1, hr)?;
    let schedule = if start > 0 {
        two_phase(t, a.clone(), b.clone(), Some((b.clone(), 1)))?
    } else {
        two_phase(t, b.clone(), a.clone(), Some((a.clone(), -1)))?
    };
    Ok(QFromR { region, a, b, schedule })
}

/// Pieces of the R-from-Q schedule on `R_{2L+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RFromQ {
    pub region: Region,
    /// `Q_L` shifted East by `floor(L/2)`.
    pub a: Region,
    /// Two copies of `Q_L`, at the West and East ends.
    pub b: Region,
    /// The middle column.
    pub c: Region,
    /// South-boundary segment for the pinned variant.
    pub delta: Vec<Site>,
    pub schedule: CensorSchedule,
}

/// On `R_{2L+1}`: run `A`, then reset `B` to the starting sign and run `B`.
pub fn schedule_r_from_q(l: u32, eps: f64, t: f64, start: i8) -> Result<RFromQ> {
    check_sign(start)?;
    check_time(t)?;
    check_eps(eps)?;
    if l == 0 {
        return Err(Error::Parameter("L must be at least 1".into()));
    }
    let width = 2 * l + 1;
    let h = r_height(width, eps);
    let region = cols(1, width, h)?;
    let shift = l / 2;
    let a = cols(1 + shift, l + shift, h)?;
    let b = cols(1, l, h)?.union(&cols(l + 2, width, h)?)?;
    let c = cols(l + 1, l + 1, h)?;
    let delta = delta_segment(l, eps)?;
    let schedule = two_phase(t, a.clone(), b.clone(), Some((b.clone(), start)))?;
    Ok(RFromQ { region, a, b, c, delta, schedule })
}

/// The unrolled inductive schedule on the `L x L` square. With heights
/// `h_0 < ... < h_{k-1} = L`, phase `j` works at level `i = k-1-j`: it first
/// raises to plus the overlap of the previous active strip with the level-`i`
/// rectangle, then runs the top `h_0` rows of that rectangle. The last phase
/// is the bottom strip `R_L`. Each phase lasts `t_total / k`.
pub fn schedule_stacked(l: u32, eps: f64, t_total: f64) -> Result<CensorSchedule> {
    check_time(t_total)?;
    let hs = stacked_heights(l, eps)?;
    let h0 = hs[0];
    let k = hs.len();
    let dt = t_total / k as f64;
    let mut phases = Vec::with_capacity(k);
    for j in 0..k {
        let i = k - 1 - j;
        let top = hs[i];
        let bottom = top.saturating_sub(h0) + 1;
        let active = rows(l, bottom, top)?;
        let reset = if j == 0 {
            None
        } else {
            // rows of the level-i rectangle that the previous phase already ran
            let prev_bottom = hs[i + 1].saturating_sub(h0) + 1;
            if prev_bottom > hs[i] + 1 {
                return Err(Error::UnsupportedShape(format!(
                    "stacked strips leave rows {}..{} uncovered",
                    hs[i] + 1,
                    prev_bottom - 1
                )));
            }
            if prev_bottom <= hs[i] {
                Some((rows(l, prev_bottom, hs[i])?, 1))
            } else {
                None
            }
        };
        let t_start = dt * j as f64;
        let t_end = if j + 1 == k { t_total } else { dt * (j + 1) as f64 };
        phases.push(Phase { t_start, t_end, active, reset });
    }
    CensorSchedule::new(phases)
}

/// Minus start on the `L x L` square: run the bottom strip
/// `B = rows 1..ceil(L^(1/2+eps))`, lower
/// `A = rows > ceil(L^(1/2+eps) / 2)` to minus, run `A`. Phases of length
/// `t_total / 2`.
pub fn schedule_minus_square(l: u32, eps: f64, t_total: f64) -> Result<CensorSchedule> {
    check_time(t_total)?;
    check_eps(eps)?;
    let hb = r_height(l, eps).min(l);
    let half = crate::lattice::ceil_robust(0.5 * f64::from(l).powf(0.5 + eps));
    if half >= l {
        return Err(Error::Parameter(format!("L = {l} is too small for the minus-square schedule")));
    }
    let b = rows(l, 1, hb)?;
    let a = rows(l, half + 1, l)?;
    CensorSchedule::new(vec![
        Phase { t_start: 0.0, t_end: 0.5 * t_total, active: b, reset: None },
        Phase { t_start: 0.5 * t_total, t_end: t_total, active: a.clone(), reset: Some((a, -1)) },
    ])
}

/// A small schedule that fits the exact engine while keeping the overlap
/// pattern of one of the full-size constructions.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub region: Region,
    /// For a start from all plus; resets (if any) go to plus.
    pub plus: CensorSchedule,
    /// For a start from all minus; resets (if any) go to minus.
    pub minus: CensorSchedule,
}

/// The down-scaled fixtures, each phase lasting `t`:
///
/// * `q-from-r`: 2x3, `B` = rows 1-2, `A` = rows 2-3;
/// * `r-from-q`: 3x3, `A` = columns 1-2, `B` = columns 1 and 3, `C` = column 2;
/// * `stacked`: 3x3, strips rows 2-3 then rows 1-2, overlap row 2 reset;
/// * `minus-square`: 3x3, `B` = rows 1-2, `A` = rows 2-3;
/// * `alternating`: 2x3, columns 1 and 2 in turn, no resets.
pub fn exact_fixtures(t: f64) -> Result<Vec<Fixture>> {
    check_time(t)?;
    let r23 = rows(2, 1, 3)?;
    let sq = rows(3, 1, 3)?;
    let q_b = rows(2, 1, 2)?;
    let q_a = rows(2, 2, 3)?;
    let r_a = cols(1, 2, 3)?;
    let r_b = cols(1, 1, 3)?.union(&cols(3, 3, 3)?)?;
    let top = rows(3, 2, 3)?;
    let bottom = rows(3, 1, 2)?;
    let mid = rows(3, 2, 2)?;
    let c1 = cols(1, 1, 3)?;
    let c2 = cols(2, 2, 3)?;
    let alternating = CensorSchedule::new(
        (0..4)
            .map(|k| Phase {
                t_start: t * k as f64,
                t_end: t * (k + 1) as f64,
                active: if k % 2 == 0 { c1.clone() } else { c2.clone() },
                reset: None,
            })
            .collect(),
    )?;
    Ok(vec![
        Fixture {
            name: "q-from-r",
            region: r23.clone(),
            plus: two_phase(t, q_a.clone(), q_b.clone(), Some((q_b.clone(), 1)))?,
            minus: two_phase(t, q_b, q_a.clone(), Some((q_a, -1)))?,
        },
        Fixture {
            name: "r-from-q",
            region: sq.clone(),
            plus: two_phase(t, r_a.clone(), r_b.clone(), Some((r_b.clone(), 1)))?,
            minus: two_phase(t, r_a, r_b.clone(), Some((r_b, -1)))?,
        },
        Fixture {
            name: "stacked",
            region: sq.clone(),
            plus: two_phase(t, top.clone(), bottom.clone(), Some((mid.clone(), 1)))?,
            minus: two_phase(t, top.clone(), bottom.clone(), Some((mid, -1)))?,
        },
        Fixture {
            name: "minus-square",
            region: sq,
            plus: two_phase(t, bottom.clone(), top.clone(), Some((top.clone(), 1)))?,
            minus: two_phase(t, bottom, top.clone(), Some((top, -1)))?,
        },
        Fixture {
            name: "alternating",
            region: r23,
            plus: alternating.clone(),
            minus: alternating,
        },
    ])
}

/// Reads a schedule, one phase per line:
/// `t0 t1 active=<region> reset=<region>:<+1|-1>` or `reset=none`. Blank
/// lines and lines starting with `#` are skipped.
pub fn parse_schedule(text: &str) -> Result<CensorSchedule> {
    let mut phases = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::parse(line_no, "expected `t0 t1 active=<region> reset=<...>`"));
        }
        let time = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::parse(line_no, format!("bad time `{s}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(line_no, format!("time `{s}` is not finite")));
            }
            Ok(v)
        };
        let t_start = time(toks[0])?;
        let t_end = time(toks[1])?;
        let active = toks[2]
            .strip_prefix("active=")
            .ok_or_else(|| Error::parse(line_no, "third field must be active=<region>"))?;
        let active = parse_region_token(active).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let reset = toks[3]
            .strip_prefix("reset=")
            .ok_or_else(|| Error::parse(line_no, "fourth field must be reset=<region>:<value> or reset=none"))?;
        let reset = if reset == "none" {
            None
        } else {
            let (reg, val) = reset
                .rsplit_once(':')
                .ok_or_else(|| Error::parse(line_no, "reset needs <region>:<value>"))?;
            let v = match val {
                "+1" | "+" | "1" => 1,
                "-1" | "-" => -1,
                _ => return Err(Error::parse(line_no, format!("reset value `{val}` must be +1 or -1"))),
            };
            Some((parse_region_token(reg).map_err(|e| Error::parse(line_no, e.to_string()))?, v))
        };
        phases.push(Phase { t_start, t_end, active, reset });
    }
    CensorSchedule::new(phases)
}

pub fn format_schedule(s: &CensorSchedule) -> String {
    let mut out = String::new();
    for p in s.phases() {
        let reset = match &p.reset {
            None => "none".to_string(),
            Some((r, v)) => format!("{}:{}", format_region_token(r), if *v > 0 { "+1" } else { "-1" }),
        };
        out.push_str(&format!(
            "{:?} {:?} active={} reset={}\n",
            p.t_start,
            p.t_end,
            format_region_token(&p.active),
            reset
        ));
    }
    out
}
