//! The flat `key = value` config format and the configuration dump format.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gibbs::SpinConfig;
use crate::lattice::{format_region_token, parse_region_token, Region, Site};

/// Keys grouped by section; keys before any `[section]` header are global.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(n + 1, "unterminated section header"))?
                    .trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(Error::parse(n + 1, format!("bad section name `{name}`")));
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n + 1, "expected `key = value`"))?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::parse(n + 1, format!("bad key `{k}`")));
            }
            let v = v.trim();
            let v = v
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .unwrap_or(v);
            sections.entry(current.clone()).or_default().insert(k.to_string(), v.to_string());
        }
        Ok(ConfigFile { sections })
    }

    /// Value for `key`, looked up in `section` first and then globally.
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .or_else(|| self.sections.get("").and_then(|s| s.get(key)))
            .map(String::as_str)
    }

    /// Every key visible from `section`, section values winning.
    pub fn merged(&self, section: &str) -> BTreeMap<String, String> {
        let mut out = self.sections.get("").cloned().unwrap_or_default();
        if let Some(s) = self.sections.get(section) {
            out.extend(s.clone());
        }
        out
    }

    pub fn sections(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }
}

/// Writes a configuration as a `region <token>` header followed by the rows
/// of its bounding box, top row first; sites outside the region print as `0`.
pub fn format_config_dump(config: &SpinConfig) -> String {
    let region = config.region();
    let b = region.bbox();
    let mut out = format!("region {}\n", format_region_token(region));
    for y in (b.y0..=b.y1).rev() {
        let row: Vec<&str> = (b.x0..=b.x1)
            .map(|x| match config.spin_at(Site::new(x, y)) {
                Some(1) => "+1",
                Some(_) => "-1",
                None => "0",
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Reads the format written by [`format_config_dump`]. Rows may also be
/// written as runs of `+`/`-` characters without separators.
pub fn parse_config_dump(text: &str) -> Result<SpinConfig> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hn, header) = lines.next().ok_or_else(|| Error::parse(1, "empty configuration dump"))?;
    let token = header
        .strip_prefix("region")
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| Error::parse(hn, "first line must be `region <region>`"))?;
    let region: Region = parse_region_token(token).map_err(|e| Error::parse(hn, e.to_string()))?;
    let b = region.bbox();
    let width = b.width() as usize;
    let mut config = SpinConfig::all_plus(&region);
    let mut y = b.y1;
    let mut rows = 0u32;
    for (n, line) in lines {
        if rows == b.height() {
            return Err(Error::parse(n, "more rows than the region height"));
        }
        let cells: Vec<i8> = if line.contains(char::is_whitespace) || line.contains('1') || line.contains('0') {
            line.split_whitespace()
                .map(|t| match t {
                    "+1" | "1" | "+" => Ok(1),
                    "-1" | "-" => Ok(-1),
                    "0" | "." => Ok(0),
                    _ => Err(Error::parse(n, format!("bad cell `{t}`"))),
                })
                .collect::<Result<_>>()?
        } else {
            line.chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    '.' => Ok(0),
                    _ => Err(Error::parse(n, format!("bad cell `{c}`"))),
                })
                .collect::<Result<_>>()?
        };
        if cells.len() != width {
            return Err(Error::parse(n, format!("row has {} cells, expected {width}", cells.len())));
        }
        for (k, &v) in cells.iter().enumerate() {
            let s = Site::new(b.x0 + k as i32, y);
            match (region.rank(s), v) {
                (Some(i), 1 | -1) => config.set(i, v),
                (None, 0) => {}
                (Some(_), _) => return Err(Error::parse(n, format!("site {s} needs a spin"))),
                (None, _) => return Err(Error::parse(n, format!("site {s} is outside the region"))),
            }
        }
        y -= 1;
        rows += 1;
    }
    if rows != b.height() {
        return Err(Error::parse(hn, format!("expected {} rows, found {rows}", b.height())));
    }
    Ok(config)
}
