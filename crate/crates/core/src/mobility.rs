//! Terminal mobility plans and the BonnMotion waypoint trace format.

use alloc::vec::Vec;
use core::fmt;

use crate::geom::Position;

/// How a terminal moves over the simulation plane.
#[derive(Debug, Clone, PartialEq)]
pub enum MobilityPlan {
    /// Stays where it was placed.
    Static,
    /// Moves at constant speed in a straight line toward `dest`, starting
    /// at `start_time`, then stops there.
    LinearTo {
        dest: Position,
        /// Meters per second, positive.
        speed: f64,
        /// Seconds.
        start_time: f64,
    },
    /// Follows a list of `(t, position)` waypoints with linear
    /// interpolation in between; holds the first position before the first
    /// waypoint and the last one afterwards.
    WaypointTrace(Vec<(f64, Position)>),
}

impl MobilityPlan {
    /// Position at simulation time `t`, given the placement position
    /// `origin` (ignored by waypoint traces, which carry their own).
    pub fn position_at(&self, origin: Position, t: f64) -> Position {
        match self {
            MobilityPlan::Static => origin,
            MobilityPlan::LinearTo {
                dest,
                speed,
                start_time,
            } => {
                if t <= *start_time {
                    return origin;
                }
                let total = origin.distance(dest);
                if total == 0.0 {
                    return *dest;
                }
                let travelled = speed * (t - start_time);
                if travelled >= total {
                    return *dest;
                }
                let frac = travelled / total;
                Position {
                    x: origin.x + (dest.x - origin.x) * frac,
                    y: origin.y + (dest.y - origin.y) * frac,
                }
            }
            MobilityPlan::WaypointTrace(points) => {
                if points.is_empty() {
                    return origin;
                }
                if t <= points[0].0 {
                    return points[0].1;
                }
                let last = points[points.len() - 1];
                if t >= last.0 {
                    return last.1;
                }
                // Find the surrounding pair and interpolate.
                let idx = points.partition_point(|(wt, _)| *wt <= t);
                let (t0, p0) = points[idx - 1];
                let (t1, p1) = points[idx];
                let frac = (t - t0) / (t1 - t0);
                Position {
                    x: p0.x + (p1.x - p0.x) * frac,
                    y: p0.y + (p1.y - p0.y) * frac,
                }
            }
        }
    }
}

/// A BonnMotion parse failure, located by line and column (both 1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    /// The line does not hold whole `t x y` triples.
    BadTokenCount(usize),
    /// A token failed to parse as a number.
    NonNumeric,
    /// Waypoint timestamps must strictly increase along a line.
    NonMonotonicTime,
    /// A coordinate or timestamp was NaN or infinite.
    NonFinite,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ParseErrorKind::BadTokenCount(n) => {
                return write!(
                    f,
                    "line {}: expected whole `t x y` triples, found {} tokens",
                    self.line, n
                );
            }
            ParseErrorKind::NonNumeric => "not a number",
            ParseErrorKind::NonMonotonicTime => "timestamps must strictly increase",
            ParseErrorKind::NonFinite => "value must be finite",
        };
        write!(f, "line {}, column {}: {}", self.line, self.column, what)
    }
}

#[cfg(test)]
impl std::error::Error for ParseError {}

/// Parse BonnMotion movements text: one node per line, whitespace-separated
/// `t x y` triples with strictly increasing `t`. Line `i` becomes the
/// waypoint trace of node `i`. Empty lines are skipped.
pub fn parse_bonnmotion(text: &str) -> Result<Vec<MobilityPlan>, ParseError> {
    let mut plans = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = line_idx + 1;
        let tokens: Vec<(usize, &str)> = tokenize(line).collect();
        if tokens.len() % 3 != 0 {
            return Err(ParseError {
                line: line_no,
                column: tokens.last().map_or(1, |(col, tok)| col + tok.len()),
                kind: ParseErrorKind::BadTokenCount(tokens.len()),
            });
        }
        let mut numbers = Vec::with_capacity(tokens.len());
        for (col, tok) in &tokens {
            let value: f64 = tok.parse().map_err(|_| ParseError {
                line: line_no,
                column: col + 1,
                kind: ParseErrorKind::NonNumeric,
            })?;
            if !value.is_finite() {
                return Err(ParseError {
                    line: line_no,
                    column: col + 1,
                    kind: ParseErrorKind::NonFinite,
                });
            }
            numbers.push((col + 1, value));
        }
        let mut waypoints = Vec::with_capacity(numbers.len() / 3);
        let mut prev_t = f64::NEG_INFINITY;
        for triple in numbers.chunks_exact(3) {
            let (t_col, t) = triple[0];
            let (_, x) = triple[1];
            let (_, y) = triple[2];
            if t <= prev_t {
                return Err(ParseError {
                    line: line_no,
                    column: t_col,
                    kind: ParseErrorKind::NonMonotonicTime,
                });
            }
            prev_t = t;
            waypoints.push((t, Position::new(x, y)));
        }
        plans.push(MobilityPlan::WaypointTrace(waypoints));
    }
    Ok(plans)
}

/// Whitespace tokenizer yielding `(byte_offset, token)` pairs.
fn tokenize(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace().map(move |tok| {
        // Safety of the offset arithmetic: the token is a slice of `line`.
        let col = tok.as_ptr() as usize - line.as_ptr() as usize;
        (col, tok)
    })
}
