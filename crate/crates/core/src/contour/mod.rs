//! Peierls contours on the dual lattice.
//!
//! Coordinates are doubled: site `(x, y)` sits at `(2x, 2y)` and dual vertices
//! at odd `(x2, y2)`. Every bond with `σ_i σ_j = -1` contributes the unit dual
//! edge crossing it. Where four such edges meet, the South-West rule pairs the
//! south edge with the west edge and the north edge with the east edge.

mod cut;

pub use cut::{cut_points, ArcRange, CutPoints};

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::lattice::{Segment, Site, SpinConfiguration, PLUS};

/// A dual-lattice vertex in doubled coordinates (both odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualVertex {
    pub x2: i32,
    pub y2: i32,
}

impl DualVertex {
    pub const fn new(x2: i32, y2: i32) -> Self {
        DualVertex { x2, y2 }
    }
}

/// A closed loop of dual edges, stored as its cyclic vertex sequence in
/// clockwise order. Edge `k` joins vertex `k` to vertex `k + 1 (mod len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    vertices: Vec<DualVertex>,
}

impl Contour {
    /// Builds a contour from a closed vertex cycle, reorienting it clockwise.
    pub fn from_cycle(mut vertices: Vec<DualVertex>) -> Result<Self> {
        if vertices.len() < 4 {
            return Err(Error::Contour(format!("a loop needs at least 4 edges, got {}", vertices.len())));
        }
        let n = vertices.len();
        for k in 0..n {
            let (a, b) = (vertices[k], vertices[(k + 1) % n]);
            let (dx, dy) = ((b.x2 - a.x2).abs(), (b.y2 - a.y2).abs());
            if a.x2 % 2 == 0 || a.y2 % 2 == 0 || dx + dy != 2 || dx * dy != 0 {
                return Err(Error::Contour(format!("vertices {k} and {} are not joined by a dual edge", (k + 1) % n)));
            }
        }
        let c = Contour { vertices: vertices.clone() };
        if c.doubled_area() > 0 {
            vertices[1..].reverse();
        }
        Ok(Contour { vertices })
    }

    pub fn vertices(&self) -> &[DualVertex] {
        &self.vertices
    }

    /// Number of dual edges.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (DualVertex, DualVertex)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Shoelace sum in doubled coordinates: 8 times the signed area,
    /// negative for clockwise loops.
    fn doubled_area(&self) -> i64 {
        self.edges().map(|(a, b)| a.x2 as i64 * b.y2 as i64 - b.x2 as i64 * a.y2 as i64).sum()
    }

    /// Enclosed area in lattice units.
    pub fn area(&self) -> f64 {
        self.doubled_area().unsigned_abs() as f64 / 8.0
    }

    pub fn contains(&self, site: Site) -> bool {
        interior_contains(self, site)
    }
}

const N: u8 = 1;
const E: u8 = 2;
const S: u8 = 4;
const W: u8 = 8;
const DIRS: [u8; 4] = [N, E, S, W];

fn opposite(d: u8) -> u8 {
    match d {
        N => S,
        S => N,
        E => W,
        _ => E,
    }
}

/// South-West pairing at a vertex with four edges.
fn sw_partner(d: u8) -> u8 {
    match d {
        S => W,
        W => S,
        N => E,
        _ => N,
    }
}

fn step(d: u8) -> (isize, isize) {
    match d {
        N => (0, 1),
        S => (0, -1),
        E => (1, 0),
        _ => (-1, 0),
    }
}

/// Splits the disagreement edges of `config` into loops.
pub fn extract_contours(config: &SpinConfiguration) -> Vec<Contour> {
    let g = *config.lattice().geometry();
    let (w, h) = (g.width(), g.height());
    let s = config.spins();
    // Dual vertex (i, j) sits at doubled (2(x_min + i) - 1, 2(y_min + j) - 1).
    let dw = w + 1;
    let mut bits = vec![0u8; dw * (h + 1)];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if c + 1 < w && s[i] != s[i + 1] {
                bits[r * dw + c + 1] |= N;
                bits[(r + 1) * dw + c + 1] |= S;
            }
            if r + 1 < h && s[i] != s[i + w] {
                bits[(r + 1) * dw + c] |= E;
                bits[(r + 1) * dw + c + 1] |= W;
            }
        }
    }
    let vertex = |v: usize| DualVertex::new(2 * (g.x_min + (v % dw) as i32) - 1, 2 * (g.y_min + (v / dw) as i32) - 1);
    let next_out = |v: usize, arrived: u8| -> u8 {
        let b = bits[v];
        if b.count_ones() == 4 {
            sw_partner(arrived)
        } else {
            b & !arrived
        }
    };
    let mut used = vec![0u8; bits.len()];
    let mut out = Vec::new();
    for v0 in 0..bits.len() {
        for &d0 in &DIRS {
            if bits[v0] & d0 == 0 || used[v0] & d0 != 0 {
                continue;
            }
            let mut cycle = Vec::new();
            let (mut v, mut d) = (v0, d0);
            loop {
                cycle.push(vertex(v));
                let (dx, dy) = step(d);
                let v2 = (v as isize + dx + dy * dw as isize) as usize;
                used[v] |= d;
                used[v2] |= opposite(d);
                let d2 = next_out(v2, opposite(d));
                if v2 == v0 && d2 == d0 {
                    break;
                }
                v = v2;
                d = d2;
            }
            out.push(Contour::from_cycle(cycle).expect("traced loops are closed dual cycles"));
        }
    }
    out
}

/// Even-odd test: casts a ray from the site towards `+x` and counts the
/// vertical dual edges it crosses.
pub fn interior_contains(contour: &Contour, site: Site) -> bool {
    let (sx, sy) = (2 * site.x, 2 * site.y);
    let mut inside = false;
    for (a, b) in contour.edges() {
        if a.x2 == b.x2 && a.x2 > sx && a.y2.min(b.y2) < sy && sy < a.y2.max(b.y2) {
            inside = !inside;
        }
    }
    inside
}

/// Contours not enclosed by any other contour of the list.
pub fn exterior_contours(contours: &[Contour]) -> Vec<&Contour> {
    contours
        .iter()
        .enumerate()
        .filter(|&(i, c)| {
            !contours.iter().enumerate().any(|(j, o)| j != i && o.area() > c.area() && encloses(o, c))
        })
        .map(|(_, c)| c)
        .collect()
}

/// Whether `outer` encloses `inner`: the sites just inside one of `inner`'s
/// edges lie inside `outer`.
fn encloses(outer: &Contour, inner: &Contour) -> bool {
    let (a, b) = inner.edges().next().expect("non-empty");
    // Clockwise loops have their interior on the right of each edge.
    let (mx, my) = (a.x2 + b.x2, a.y2 + b.y2);
    let (dx, dy) = ((b.x2 - a.x2) / 2, (b.y2 - a.y2) / 2);
    let (rx, ry) = (mx / 2 + dy, my / 2 - dx);
    interior_contains(outer, Site::new(rx / 2, ry / 2))
}

/// The outermost contour whose interior holds every site of `segment`.
///
/// Fails unless the segment is frozen to `+1`. Returns `None` only when no
/// contour surrounds the segment, which a minus ring rules out.
pub fn exterior_contour_of<'a>(contours: &'a [Contour], segment: &Segment) -> Result<Option<&'a Contour>> {
    if segment.value != PLUS {
        return Err(Error::Contour("segment is not frozen to +1".into()));
    }
    Ok(contours
        .iter()
        .filter(|c| segment.sites().all(|s| interior_contains(c, s)))
        .max_by(|a, b| a.area().total_cmp(&b.area())))
}

pub const CSV_HEADER: &str = "sample_id,contour_id,vertex_index,x2,y2";

/// Writes one row per contour vertex (no header).
pub fn write_csv<Wr: Write>(out: &mut Wr, sample_id: u64, contours: &[Contour]) -> io::Result<()> {
    for (c, contour) in contours.iter().enumerate() {
        for (k, v) in contour.vertices().iter().enumerate() {
            writeln!(out, "{sample_id},{c},{k},{},{}", v.x2, v.y2)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, FrozenSpec, Lattice, MINUS};
    use std::sync::Arc;

    fn config(m: i32, spec: FrozenSpec, plus: &[(i32, i32)]) -> SpinConfiguration {
        let l = Arc::new(build_lattice(m, spec).unwrap());
        let mut c = SpinConfiguration::ground(l);
        for &(x, y) in plus {
            c.set(Site::new(x, y), PLUS).unwrap();
        }
        c
    }

    #[test]
    fn all_minus_has_no_contours() {
        assert!(extract_contours(&config(3, FrozenSpec::minus(), &[])).is_empty());
    }

    #[test]
    fn single_plus_square() {
        let cs = extract_contours(&config(3, FrozenSpec::minus(), &[(1, -1)]));
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].len(), 4);
        assert_eq!(cs[0].area(), 1.0);
        assert!(cs[0].doubled_area() < 0);
        assert!(cs[0].contains(Site::new(1, -1)));
        assert!(!cs[0].contains(Site::new(0, -1)));
        assert!(!cs[0].contains(Site::new(5, 5)));
    }

    #[test]
    fn diagonal_pairs_follow_the_south_west_rule() {
        // Pluses at SW and NE corners of a plaquette: cut apart.
        let cs = extract_contours(&config(3, FrozenSpec::minus(), &[(0, 0), (1, 1)]));
        assert_eq!(cs.iter().map(Contour::len).collect::<Vec<_>>(), vec![4, 4]);
        // Pluses at NW and SE corners: joined through the shared vertex.
        let cs = extract_contours(&config(3, FrozenSpec::minus(), &[(0, 1), (1, 0)]));
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].len(), 8);
        assert_eq!(cs[0].area(), 2.0);
    }

    #[test]
    fn segment_rectangle() {
        let seg = Segment::left_of_origin(2);
        let c = config(4, FrozenSpec::minus().with_segment(seg), &[]);
        let cs = extract_contours(&c);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].len(), 8);
        let ext = exterior_contour_of(&cs, &seg).unwrap().unwrap();
        assert_eq!(ext, &cs[0]);
        assert!(exterior_contour_of(&cs, &Segment::new(0, 0, 0, MINUS)).is_err());
    }

    #[test]
    fn nested_contours_pick_the_outermost() {
        let seg = Segment::new(0, 0, 0, PLUS);
        // A plus segment inside a minus ring inside a plus ring.
        let mut plus = Vec::new();
        for x in -2i32..=2 {
            for y in -2i32..=2 {
                if x.abs() == 2 || y.abs() == 2 {
                    plus.push((x, y));
                }
            }
        }
        let c = config(4, FrozenSpec::minus().with_segment(seg), &plus);
        let cs = extract_contours(&c);
        assert_eq!(cs.len(), 3);
        let ext = exterior_contour_of(&cs, &seg).unwrap().unwrap();
        assert_eq!(ext.len(), 20);
        assert_eq!(exterior_contours(&cs), vec![ext]);
    }

    #[test]
    fn from_cycle_validates_and_orients() {
        let ccw = vec![
            DualVertex::new(-1, -1),
            DualVertex::new(1, -1),
            DualVertex::new(1, 1),
            DualVertex::new(-1, 1),
        ];
        let c = Contour::from_cycle(ccw.clone()).unwrap();
        assert_eq!(c.vertices()[0], ccw[0]);
        assert_eq!(c.vertices()[1], ccw[3]);
        assert!(Contour::from_cycle(vec![DualVertex::new(1, 1); 4]).is_err());
        assert!(Contour::from_cycle(ccw[..3].to_vec()).is_err());
    }

    #[test]
    fn csv_rows() {
        let cs = extract_contours(&config(2, FrozenSpec::minus(), &[(0, 0)]));
        let mut buf = Vec::new();
        write_csv(&mut buf, 3, &cs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("3,0,0,"));
    }

    #[test]
    fn frozen_bonds_count() {
        let l = Arc::new(Lattice::new(
            crate::lattice::BoxGeometry::square(2).unwrap(),
            FrozenSpec::minus().with_segment(Segment::new(-1, 1, 1, PLUS)),
        )
        .unwrap());
        let cs = extract_contours(&SpinConfiguration::ground(l));
        assert_eq!(cs.iter().map(Contour::len).sum::<usize>(), 8);
    }
}
