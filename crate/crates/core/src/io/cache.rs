//! Versioned on-disk caches of balls and calibration constants.
//!
//! A cache file is one header line of JSON followed by a JSON body. The
//! header records the format version, the kind of payload, the rank and the
//! truncation bounds the payload was computed under. Loading checks all of
//! them against what the caller expects and refuses a mismatch, so a ball
//! built under other bounds is never silently reused. Spheres are stored as
//! raw splitting data and re-canonicalized on load; the stored keys must
//! come back unchanged.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::growth::CalibrationConstants;
use crate::splittings::{Ball, BallBounds, GraphKind, Sphere, SphereKey, SplittingData};
use crate::{Error, Result};

pub const MAGIC: &str = "freesplit-cache";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheKind {
    Ball,
    Constants,
}

/// First line of every cache file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheHeader {
    pub magic: String,
    pub version: u32,
    pub kind: CacheKind,
    pub rank: usize,
    pub bounds: BallBounds,
}

impl CacheHeader {
    pub fn new(kind: CacheKind, rank: usize, bounds: &BallBounds) -> Self {
        CacheHeader { magic: MAGIC.to_string(), version: FORMAT_VERSION, kind, rank, bounds: *bounds }
    }

    fn expect(&self, want: &CacheHeader) -> Result<()> {
        let mismatch = |what: &str, found: String, expected: String| {
            Err(Error::HeaderMismatch(format!("{}: file has {}, expected {}", what, found, expected)))
        };
        if self.magic != want.magic {
            return mismatch("magic", self.magic.clone(), want.magic.clone());
        }
        if self.version != want.version {
            return mismatch("format version", self.version.to_string(), want.version.to_string());
        }
        if self.kind != want.kind {
            return mismatch("payload kind", format!("{:?}", self.kind), format!("{:?}", want.kind));
        }
        if self.rank != want.rank {
            return mismatch("rank", self.rank.to_string(), want.rank.to_string());
        }
        if self.bounds != want.bounds {
            return mismatch("oracle bounds", format!("{:?}", self.bounds), format!("{:?}", want.bounds));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct BallBody {
    kind: GraphKind,
    radius: usize,
    spheres: Vec<SplittingData>,
    keys: Vec<SphereKey>,
    dist: Vec<usize>,
    adj: Vec<Vec<usize>>,
    universe_ids: Vec<usize>,
}

/// Raw splitting data of a sphere, read off its chart.
pub fn splitting_data(s: &Sphere) -> SplittingData {
    match s {
        Sphere::NonSep(t) => {
            let (h, stable) = t.splitting_data();
            SplittingData::NonSeparating { rank: t.rank(), factor: h.generators(), stable }
        }
        Sphere::Sep(t) => SplittingData::Separating { rank: t.rank(), p: t.p().generators(), q: t.q().generators() },
    }
}

/// Byte offset of a 1-based line and column inside `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

fn parse_error(what: &'static str, text: &str, base: usize, e: serde_json::Error) -> Error {
    Error::Parse { what, detail: e.to_string(), offset: Some(base + byte_offset(text, e.line(), e.column())) }
}

fn write_cache<T: Serialize>(path: &Path, header: &CacheHeader, body: &T) -> Result<()> {
    let mut text = serde_json::to_string(header)?;
    text.push('\n');
    text.push_str(&serde_json::to_string(body)?);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Read a cache file, check its header and return the body text with its
/// byte offset in the file.
fn read_cache(path: &Path, want: &CacheHeader) -> Result<(String, usize)> {
    let text = fs::read_to_string(path)?;
    let (head, body) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    let header: CacheHeader = serde_json::from_str(head).map_err(|e| parse_error("cache header", head, 0, e))?;
    header.expect(want)?;
    Ok((body.to_string(), head.len() + 1))
}

pub fn save_ball(path: &Path, ball: &Ball, bounds: &BallBounds) -> Result<()> {
    let rank = ball.spheres.first().map(Sphere::rank).ok_or_else(|| Error::Precondition("empty ball".into()))?;
    let body = BallBody {
        kind: ball.kind,
        radius: ball.radius,
        spheres: ball.spheres.iter().map(splitting_data).collect(),
        keys: ball.spheres.iter().map(Sphere::key).collect(),
        dist: ball.dist.clone(),
        adj: ball.adj.clone(),
        universe_ids: ball.universe_ids.clone(),
    };
    write_cache(path, &CacheHeader::new(CacheKind::Ball, rank, bounds), &body)
}

/// Load a ball cached under exactly `rank` and `bounds`.
pub fn load_ball(path: &Path, rank: usize, bounds: &BallBounds) -> Result<Ball> {
    let (text, base) = read_cache(path, &CacheHeader::new(CacheKind::Ball, rank, bounds))?;
    let body: BallBody = serde_json::from_str(&text).map_err(|e| parse_error("cached ball", &text, base, e))?;
    let n = body.spheres.len();
    let corrupt = |detail: String| Error::Parse { what: "cached ball", detail, offset: None };
    if body.keys.len() != n || body.dist.len() != n || body.adj.len() != n {
        return Err(corrupt("vertex arrays have different lengths".into()));
    }
    if let Some(v) = body.adj.iter().flatten().find(|&&v| v >= n) {
        return Err(corrupt(format!("neighbour {} out of range", v)));
    }
    let mut spheres = Vec::with_capacity(n);
    let mut index = HashMap::with_capacity(n);
    for (i, (data, key)) in body.spheres.iter().zip(&body.keys).enumerate() {
        let s = data.to_sphere()?;
        if s.key() != *key {
            return Err(corrupt(format!("vertex {} re-canonicalizes to a different key", i)));
        }
        index.insert(s.key(), i);
        spheres.push(s);
    }
    Ok(Ball {
        kind: body.kind,
        radius: body.radius,
        spheres,
        universe_ids: body.universe_ids,
        dist: body.dist,
        adj: body.adj,
        index,
    })
}

pub fn save_constants(path: &Path, constants: &CalibrationConstants, rank: usize, bounds: &BallBounds) -> Result<()> {
    constants.validate()?;
    write_cache(path, &CacheHeader::new(CacheKind::Constants, rank, bounds), constants)
}

pub fn load_constants(path: &Path, rank: usize, bounds: &BallBounds) -> Result<CalibrationConstants> {
    let (text, base) = read_cache(path, &CacheHeader::new(CacheKind::Constants, rank, bounds))?;
    let c: CalibrationConstants =
        serde_json::from_str(&text).map_err(|e| parse_error("cached constants", &text, base, e))?;
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::Calibrated;
    use crate::splittings::{build_local_ball, LinkTemplate, NonSepSphere};
    use std::path::PathBuf;

    fn tmp(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("freesplit-cache-{}-{}", std::process::id(), name))
    }

    fn small_ball(bounds: BallBounds) -> Ball {
        let tpl = LinkTemplate::new(3, GraphKind::Sg, bounds, None).unwrap();
        build_local_ball(&Sphere::NonSep(NonSepSphere::standard(3, 1)), 1, &tpl, 500).unwrap()
    }

    #[test]
    fn ball_round_trip_keeps_keys_and_adjacency() {
        let bounds = BallBounds::new(3).with_separating(4);
        let ball = small_ball(bounds);
        assert!(ball.spheres.iter().any(Sphere::is_separating));
        let p = tmp("ball");
        save_ball(&p, &ball, &bounds).unwrap();
        let back = load_ball(&p, 3, &bounds).unwrap();
        fs::remove_file(&p).unwrap();
        assert_eq!(back.len(), ball.len());
        for i in 0..ball.len() {
            assert_eq!(back.spheres[i].key(), ball.spheres[i].key());
            assert_eq!(back.adj[i], ball.adj[i]);
        }
        assert_eq!(back.dist, ball.dist);
        assert_eq!(back.find(&ball.spheres[5]), Some(5));
    }

    #[test]
    fn other_bounds_or_rank_are_refused() {
        let bounds = BallBounds::new(3).with_separating(4);
        let ball = small_ball(bounds);
        let p = tmp("bounds");
        save_ball(&p, &ball, &bounds).unwrap();
        assert!(matches!(load_ball(&p, 3, &BallBounds::new(3)), Err(Error::HeaderMismatch(_))));
        assert!(matches!(load_ball(&p, 2, &bounds), Err(Error::HeaderMismatch(_))));
        assert!(matches!(load_constants(&p, 3, &bounds), Err(Error::HeaderMismatch(_))));
        fs::remove_file(&p).unwrap();
    }

    #[test]
    fn corrupted_files_report_an_offset() {
        let bounds = BallBounds::new(3);
        let ball = small_ball(bounds);
        let p = tmp("corrupt");
        save_ball(&p, &ball, &bounds).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let header_len = text.find('\n').unwrap() + 1;
        let cut = header_len;
        fs::write(&p, format!("{}#{}", &text[..cut], &text[cut + 1..])).unwrap();
        match load_ball(&p, 3, &bounds) {
            Err(Error::Parse { offset: Some(o), .. }) => assert_eq!(o, cut),
            other => panic!("expected a parse error, got {:?}", other.map(|b| b.len())),
        }
        fs::write(&p, "{not json\n{}").unwrap();
        assert!(matches!(load_ball(&p, 3, &bounds), Err(Error::Parse { offset: Some(1), .. })));
        fs::remove_file(&p).unwrap();
    }

    #[test]
    fn constants_round_trip() {
        let bounds = BallBounds::new(3);
        let mut c = CalibrationConstants::default();
        c.q = Some(Calibrated { value: 4.0, experiment: "bgi".into() });
        let p = tmp("constants");
        save_constants(&p, &c, 3, &bounds).unwrap();
        assert_eq!(load_constants(&p, 3, &bounds).unwrap(), c);
        assert!(load_constants(&p, 3, &BallBounds::new(4)).is_err());
        fs::remove_file(&p).unwrap();
    }
}
