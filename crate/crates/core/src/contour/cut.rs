use super::{Contour, DualVertex};
use crate::error::{Error, Result};
use crate::lattice::Segment;

/// Cyclic range of edges: `len` edges starting at vertex `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArcRange {
    pub start: usize,
    pub len: usize,
}

/// Cut points of a contour around a horizontal segment.
///
/// Heights are doubled dual ordinates relative to the segment row, so the
/// half-integer height `h` is stored as `2h`. `L` and `R` are the dual lines
/// just left of the first and just right of the last segment site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutPoints {
    pub u1: i32,
    pub u2: i32,
    pub v1: i32,
    pub v2: i32,
    /// `u1 -> v1` inside the strip, above the segment.
    pub gamma1: ArcRange,
    /// `v1 -> v2`, around the right end.
    pub gamma_v: ArcRange,
    /// `v2 -> u2` inside the strip, below the segment.
    pub gamma2: ArcRange,
    /// `u2 -> u1`, around the left end.
    pub gamma_u: ArcRange,
}

impl CutPoints {
    pub fn height(doubled: i32) -> f64 {
        doubled as f64 / 2.0
    }

    /// `⌈v1⌉` as an integer bucket.
    pub fn v1_bucket(&self) -> i32 {
        (self.v1 + 1).div_euclid(2)
    }
}

#[derive(Debug, Clone, Copy)]
struct Crossing {
    from: usize,
    to: usize,
    left_to_right: bool,
    above: bool,
    start_height: i32,
    end_height: i32,
}

/// Locates `u1, v1, v2, u2` on a clockwise contour around `segment`.
///
/// A crossing is a piece of the contour running from one of the lines `L`,
/// `R` to the other without touching either in between; it lies strictly
/// inside the strip and entirely above or below the segment row. `γ1` is the
/// lowest crossing above the segment and `γ2` the highest one below; for a
/// contour enclosing the segment these run `L -> R` and `R -> L`.
pub fn cut_points(contour: &Contour, segment: &Segment) -> Result<CutPoints> {
    let lx = 2 * segment.x_start - 1;
    let rx = 2 * segment.x_end + 1;
    let y0 = 2 * segment.y;
    let vs: &[DualVertex] = contour.vertices();
    let n = vs.len();
    let touches: Vec<usize> = (0..n).filter(|&k| vs[k].x2 == lx || vs[k].x2 == rx).collect();
    if !touches.iter().any(|&k| vs[k].x2 == lx) || !touches.iter().any(|&k| vs[k].x2 == rx) {
        return Err(Error::Contour("contour does not reach both cut lines".into()));
    }
    let mut crossings = Vec::new();
    for (t, &a) in touches.iter().enumerate() {
        let b = touches[(t + 1) % touches.len()];
        if vs[a].x2 == vs[b].x2 {
            continue;
        }
        crossings.push(Crossing {
            from: a,
            to: b,
            left_to_right: vs[a].x2 == lx,
            above: vs[a].y2 > y0,
            start_height: vs[a].y2 - y0,
            end_height: vs[b].y2 - y0,
        });
    }
    let key = |c: &Crossing| {
        if c.left_to_right {
            (c.start_height, c.end_height)
        } else {
            (c.end_height, c.start_height)
        }
    };
    let top = crossings
        .iter()
        .filter(|c| c.above)
        .min_by_key(|c| key(c))
        .ok_or_else(|| Error::Contour("no crossing above the segment".into()))?;
    let bottom = crossings
        .iter()
        .filter(|c| !c.above)
        .max_by_key(|c| key(c))
        .ok_or_else(|| Error::Contour("no crossing below the segment".into()))?;
    if !top.left_to_right || bottom.left_to_right {
        return Err(Error::Contour("contour does not enclose the segment clockwise".into()));
    }
    let span = |a: usize, b: usize| ArcRange { start: a, len: (b + n - a) % n };
    Ok(CutPoints {
        u1: top.start_height,
        v1: top.end_height,
        v2: bottom.start_height,
        u2: bottom.end_height,
        gamma1: span(top.from, top.to),
        gamma_v: span(top.to, bottom.from),
        gamma2: span(bottom.from, bottom.to),
        gamma_u: span(bottom.to, top.from),
    })
}
