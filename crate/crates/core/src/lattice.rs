//! Box geometry, frozen boundary specifications and the Ising energy.
//!
//! Sites are stored row-major: `index = (y - y_min) * width + (x - x_min)`, so
//! every iteration over the box (and over its free sites) has a fixed order.
//! The outermost ring of the box is always frozen to the ring value; interior
//! horizontal segments may additionally be frozen to either spin.

use std::sync::Arc;

use crate::error::{Error, Result};

/// A spin value, always `-1` or `+1`.
pub type Spin = i8;

pub const PLUS: Spin = 1;
pub const MINUS: Spin = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }
}

/// Closed rectangle of sites `[x_min, x_max] × [y_min, y_max]`. The boundary
/// rows and columns form the frozen ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxGeometry {
    pub x_min: i32,
    pub x_max: i32,
    pub y_min: i32,
    pub y_max: i32,
}

impl BoxGeometry {
    /// The square box `max(|x|, |y|) ≤ m` of side `2m`.
    pub fn square(m: i32) -> Result<Self> {
        if m < 1 {
            return Err(Error::Geometry(format!("half-side must be >= 1, got {m}")));
        }
        Ok(BoxGeometry { x_min: -m, x_max: m, y_min: -m, y_max: m })
    }

    pub fn rect(x_min: i32, x_max: i32, y_min: i32, y_max: i32) -> Result<Self> {
        if x_max - x_min < 2 || y_max - y_min < 2 {
            return Err(Error::Geometry(format!(
                "rectangle [{x_min},{x_max}]x[{y_min},{y_max}] has no interior"
            )));
        }
        Ok(BoxGeometry { x_min, x_max, y_min, y_max })
    }

    /// A strip whose interior has `rows` rows and `cols` columns, placed so the
    /// origin is an interior site (rows `-rows/2 ..`, columns `-cols/2 ..`).
    pub fn strip(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Geometry("strip needs at least one interior row and column".into()));
        }
        let (rows, cols) = (rows as i32, cols as i32);
        let y0 = -(rows / 2);
        let x0 = -(cols / 2);
        Self::rect(x0 - 1, x0 + cols, y0 - 1, y0 + rows)
    }

    pub fn width(&self) -> usize {
        (self.x_max - self.x_min + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.y_max - self.y_min + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, s: Site) -> bool {
        (self.x_min..=self.x_max).contains(&s.x) && (self.y_min..=self.y_max).contains(&s.y)
    }

    pub fn is_interior(&self, s: Site) -> bool {
        s.x > self.x_min && s.x < self.x_max && s.y > self.y_min && s.y < self.y_max
    }

    pub fn is_ring(&self, s: Site) -> bool {
        self.contains(s) && !self.is_interior(s)
    }

    /// Half-side when the box is a centred square.
    pub fn half_side(&self) -> Option<i32> {
        let m = self.x_max;
        (self.x_min == -m && self.y_min == -m && self.y_max == m).then_some(m)
    }

    pub fn index(&self, s: Site) -> Option<usize> {
        self.contains(s).then(|| {
            (s.y - self.y_min) as usize * self.width() + (s.x - self.x_min) as usize
        })
    }

    pub fn site(&self, index: usize) -> Site {
        let w = self.width();
        Site::new(self.x_min + (index % w) as i32, self.y_min + (index / w) as i32)
    }

    /// Number of nearest-neighbour bonds inside the box.
    pub fn bond_count(&self) -> usize {
        let (w, h) = (self.width(), self.height());
        (w - 1) * h + w * (h - 1)
    }
}

/// A horizontal run of sites `[(x_start, y), (x_end, y)]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub y: i32,
    pub x_start: i32,
    pub x_end: i32,
    pub value: Spin,
}

impl Segment {
    pub fn new(x_start: i32, x_end: i32, y: i32, value: Spin) -> Self {
        Segment { y, x_start, x_end, value }
    }

    /// The segment `[(-n, 0), (0, 0)]` frozen to `+1`.
    pub fn left_of_origin(n: i32) -> Self {
        Segment::new(-n, 0, 0, PLUS)
    }

    pub fn len(&self) -> usize {
        (self.x_end - self.x_start + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (self.x_start..=self.x_end).map(move |x| Site::new(x, self.y))
    }

    pub fn contains(&self, s: Site) -> bool {
        s.y == self.y && (self.x_start..=self.x_end).contains(&s.x)
    }
}

/// Boundary condition: a frozen ring plus frozen interior segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenSpec {
    pub ring_value: Spin,
    pub segments: Vec<Segment>,
}

impl FrozenSpec {
    pub fn minus() -> Self {
        FrozenSpec { ring_value: MINUS, segments: Vec::new() }
    }

    pub fn with_segment(mut self, seg: Segment) -> Self {
        self.segments.push(seg);
        self
    }

    /// Globally flipped specification.
    pub fn flipped(&self) -> Self {
        FrozenSpec {
            ring_value: -self.ring_value,
            segments: self.segments.iter().map(|s| Segment { value: -s.value, ..*s }).collect(),
        }
    }

    fn validate(&self, geom: &BoxGeometry) -> Result<()> {
        if self.ring_value != PLUS && self.ring_value != MINUS {
            return Err(Error::FrozenSpec(format!("ring value {} is not a spin", self.ring_value)));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.value != PLUS && seg.value != MINUS {
                return Err(Error::FrozenSpec(format!("segment {i} value {} is not a spin", seg.value)));
            }
            if seg.x_end < seg.x_start {
                return Err(Error::FrozenSpec(format!("segment {i} is empty")));
            }
            for s in [Site::new(seg.x_start, seg.y), Site::new(seg.x_end, seg.y)] {
                if !geom.is_interior(s) {
                    return Err(Error::FrozenSpec(format!(
                        "segment {i} endpoint ({}, {}) is not strictly inside the box",
                        s.x, s.y
                    )));
                }
            }
            for (j, other) in self.segments.iter().enumerate().take(i) {
                if other.y == seg.y && other.x_start <= seg.x_end && seg.x_start <= other.x_end {
                    return Err(Error::FrozenSpec(format!("segments {j} and {i} overlap")));
                }
            }
        }
        Ok(())
    }
}

/// Geometry plus the frozen map and the enumerated free sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    geometry: BoxGeometry,
    spec: FrozenSpec,
    /// Frozen value per site, `0` for free sites.
    frozen: Vec<Spin>,
    /// Row-major indices of free sites.
    free: Vec<usize>,
    /// Left, right, down, up neighbour indices of each free site.
    neighbors: Vec<[usize; 4]>,
    /// Position of a site in `free`, `usize::MAX` for frozen sites.
    free_pos: Vec<usize>,
}

/// Square box of half-side `m` with the given boundary condition.
pub fn build_lattice(m: i32, spec: FrozenSpec) -> Result<Lattice> {
    Lattice::new(BoxGeometry::square(m)?, spec)
}

impl Lattice {
    pub fn new(geometry: BoxGeometry, spec: FrozenSpec) -> Result<Self> {
        spec.validate(&geometry)?;
        let n = geometry.len();
        let mut frozen = vec![0 as Spin; n];
        for (i, f) in frozen.iter_mut().enumerate() {
            if geometry.is_ring(geometry.site(i)) {
                *f = spec.ring_value;
            }
        }
        for seg in &spec.segments {
            for s in seg.sites() {
                frozen[geometry.index(s).expect("validated")] = seg.value;
            }
        }
        let w = geometry.width();
        let free: Vec<usize> = (0..n).filter(|&i| frozen[i] == 0).collect();
        let neighbors = free.iter().map(|&i| [i - 1, i + 1, i - w, i + w]).collect();
        let mut free_pos = vec![usize::MAX; n];
        for (k, &i) in free.iter().enumerate() {
            free_pos[i] = k;
        }
        Ok(Lattice { geometry, spec, frozen, free, neighbors, free_pos })
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn spec(&self) -> &FrozenSpec {
        &self.spec
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn free_sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.free.iter().map(|&i| self.geometry.site(i))
    }

    pub(crate) fn free_neighbors(&self) -> &[[usize; 4]] {
        &self.neighbors
    }

    /// Position of `site` in the free-site list.
    pub fn free_position(&self, site: Site) -> Result<usize> {
        let i = self.geometry.index(site).ok_or(Error::OutsideBox(site))?;
        match self.free_pos[i] {
            usize::MAX => Err(Error::FrozenSite(site)),
            k => Ok(k),
        }
    }

    /// Frozen value of a site, `None` for free sites.
    pub fn frozen_value(&self, site: Site) -> Option<Spin> {
        let i = self.geometry.index(site)?;
        (self.frozen[i] != 0).then_some(self.frozen[i])
    }

    pub(crate) fn frozen_raw(&self) -> &[Spin] {
        &self.frozen
    }

    /// Energy of the bonds joining two frozen sites; a constant of the lattice.
    pub fn frozen_energy(&self) -> i64 {
        let g = &self.geometry;
        let (w, h) = (g.width(), g.height());
        let f = &self.frozen;
        let mut e = 0i64;
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if f[i] == 0 {
                    continue;
                }
                if c + 1 < w && f[i + 1] != 0 {
                    e -= (f[i] * f[i + 1]) as i64;
                }
                if r + 1 < h && f[i + w] != 0 {
                    e -= (f[i] * f[i + w]) as i64;
                }
            }
        }
        e
    }

    /// The same geometry with every frozen value flipped.
    pub fn flipped(&self) -> Lattice {
        Lattice::new(self.geometry, self.spec.flipped()).expect("flipping preserves validity")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub beta: f64,
}

impl ModelParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(ModelParams { beta })
    }
}

/// Spin values on every site of a lattice's box.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfiguration {
    lattice: Arc<Lattice>,
    spins: Vec<Spin>,
}

impl SpinConfiguration {
    /// Every free spin set to the ring value, frozen sites at their values.
    pub fn ground(lattice: Arc<Lattice>) -> Self {
        let ring = lattice.spec.ring_value;
        let spins = lattice.frozen.iter().map(|&f| if f == 0 { ring } else { f }).collect();
        SpinConfiguration { lattice, spins }
    }

    /// Configuration with free spins given in free-site order.
    pub fn from_free(lattice: Arc<Lattice>, free_spins: &[Spin]) -> Result<Self> {
        if free_spins.len() != lattice.free_count() {
            return Err(Error::Parameter(format!(
                "expected {} free spins, got {}",
                lattice.free_count(),
                free_spins.len()
            )));
        }
        let mut cfg = Self::ground(lattice);
        for (k, &s) in free_spins.iter().enumerate() {
            if s != PLUS && s != MINUS {
                return Err(Error::Parameter(format!("{s} is not a spin")));
            }
            let i = cfg.lattice.free[k];
            cfg.spins[i] = s;
        }
        Ok(cfg)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn get(&self, site: Site) -> Option<Spin> {
        self.lattice.geometry.index(site).map(|i| self.spins[i])
    }

    pub fn set(&mut self, site: Site, value: Spin) -> Result<()> {
        let k = self.lattice.free_position(site)?;
        if value != PLUS && value != MINUS {
            return Err(Error::Parameter(format!("{value} is not a spin")));
        }
        let i = self.lattice.free[k];
        self.spins[i] = value;
        Ok(())
    }

    /// Raw row-major spins.
    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub(crate) fn spins_mut(&mut self) -> &mut [Spin] {
        &mut self.spins
    }

    pub fn free_spins(&self) -> impl Iterator<Item = Spin> + '_ {
        self.lattice.free.iter().map(|&i| self.spins[i])
    }

    /// The globally flipped configuration on the flipped lattice.
    pub fn flipped(&self) -> SpinConfiguration {
        SpinConfiguration {
            lattice: Arc::new(self.lattice.flipped()),
            spins: self.spins.iter().map(|&s| -s).collect(),
        }
    }

    /// Whether every frozen site carries its frozen value.
    pub fn respects_frozen(&self) -> bool {
        self.lattice.frozen.iter().zip(&self.spins).all(|(&f, &s)| f == 0 || f == s)
    }

    /// Mean spin over free sites.
    pub fn free_magnetization(&self) -> f64 {
        let n = self.lattice.free_count();
        if n == 0 {
            return 0.0;
        }
        self.free_spins().map(|s| s as i64).sum::<i64>() as f64 / n as f64
    }
}

/// `H = -Σ σ_i σ_j` over all nearest-neighbour bonds inside the box,
/// frozen-frozen bonds included.
pub fn hamiltonian(config: &SpinConfiguration) -> i64 {
    raw_energy(&config.lattice.geometry, &config.spins)
}

pub(crate) fn raw_energy(g: &BoxGeometry, s: &[Spin]) -> i64 {
    let (w, h) = (g.width(), g.height());
    let mut e = 0i64;
    for r in 0..h {
        let row = r * w;
        for c in 0..w {
            let i = row + c;
            let si = s[i] as i64;
            if c + 1 < w {
                e -= si * s[i + 1] as i64;
            }
            if r + 1 < h {
                e -= si * s[i + w] as i64;
            }
        }
    }
    e
}

/// Energy change from flipping the free site `site`.
pub fn flip_delta(config: &SpinConfiguration, site: Site) -> Result<i64> {
    let k = config.lattice.free_position(site)?;
    Ok(local_delta(&config.spins, config.lattice.free[k], &config.lattice.neighbors[k]))
}

#[inline]
pub(crate) fn local_field(spins: &[Spin], nb: &[usize; 4]) -> i32 {
    spins[nb[0]] as i32 + spins[nb[1]] as i32 + spins[nb[2]] as i32 + spins[nb[3]] as i32
}

#[inline]
pub(crate) fn local_delta(spins: &[Spin], i: usize, nb: &[usize; 4]) -> i64 {
    2 * spins[i] as i64 * local_field(spins, nb) as i64
}
