use super::{ExactResult, Method, PartialAssignment};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, ModelParams, Spin, PLUS};

/// Largest number of interior rows the column transfer accepts.
pub const MAX_TRANSFER_ROWS: usize = 14;

/// Exact `P(event)` for an event supported on a single column, by contracting
/// column state vectors from left to right.
///
/// The state is the spin pattern of one full column (ring rows included). Sites
/// are added one at a time, replacing the bit of their row, so each update
/// touches `2^rows` entries. Frozen sites, and the event's sites, only admit
/// their fixed value. Vectors are rescaled after each column and the scale
/// logarithms accumulated.
pub fn transfer_probability(
    lattice: &Lattice,
    params: ModelParams,
    event: &PartialAssignment,
) -> Result<ExactResult> {
    event.validate(lattice)?;
    let g = lattice.geometry();
    let rows = g.height() - 2;
    if rows > MAX_TRANSFER_ROWS {
        return Err(Error::StripTooWide { rows, max: MAX_TRANSFER_ROWS });
    }
    if let Some(&(first, _)) = event.fixed.first() {
        if event.sites().any(|s| s.x != first.x) {
            return Err(Error::EventNotColumnar);
        }
    }
    let mut constrained: Vec<Spin> = lattice.frozen_raw().to_vec();
    for &(s, v) in &event.fixed {
        constrained[g.index(s).expect("validated")] = v;
    }
    let log_z = log_partition(lattice, params.beta, lattice.frozen_raw());
    let log_ze = log_partition(lattice, params.beta, &constrained);
    Ok(ExactResult {
        probability: (log_ze - log_z).exp(),
        log_partition: log_z,
        method: Method::Transfer,
    })
}

/// `ln Σ exp(-βH)` over configurations agreeing with `fixed` (0 = free).
fn log_partition(lattice: &Lattice, beta: f64, fixed: &[Spin]) -> f64 {
    let g = lattice.geometry();
    let (w, h) = (g.width(), g.height());
    let states = 1usize << h;
    // Bond weight exp(β σσ'), indexed by σσ' + 1 ∈ {0, 2}.
    let bond = [(-beta).exp(), 1.0, beta.exp()];
    let spin_of = |bits: usize, r: usize| -> i32 { if bits >> r & 1 == 1 { 1 } else { -1 } };

    let mut cur = vec![0.0f64; states];
    let mut next = vec![0.0f64; states];
    cur[0] = 1.0;
    let mut log_scale = 0.0f64;
    for c in 0..w {
        for r in 0..h {
            let f = fixed[r * w + c];
            let allowed: &[i32] = match f {
                0 => &[-1, 1],
                v if v == PLUS => &[1],
                _ => &[-1],
            };
            next.iter_mut().for_each(|x| *x = 0.0);
            for (s, &val) in cur.iter().enumerate() {
                if val == 0.0 {
                    continue;
                }
                for &a in allowed {
                    let mut wgt = val;
                    if c > 0 {
                        wgt *= bond[(a * spin_of(s, r) + 1) as usize];
                    }
                    if r > 0 {
                        wgt *= bond[(a * spin_of(s, r - 1) + 1) as usize];
                    }
                    let t = if a == 1 { s | 1 << r } else { s & !(1 << r) };
                    next[t] += wgt;
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let max = cur.iter().cloned().fold(0.0f64, f64::max);
        if max > 0.0 {
            cur.iter_mut().for_each(|x| *x /= max);
            log_scale += max.ln();
        }
    }
    let total: f64 = cur.iter().sum();
    total.ln() + log_scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_probability;
    use crate::lattice::{build_lattice, BoxGeometry, FrozenSpec, Segment, Site, MINUS};

    #[test]
    fn matches_brute_on_small_boxes() {
        for spec in [
            FrozenSpec::minus(),
            FrozenSpec::minus().with_segment(Segment::new(-1, 0, 0, PLUS)),
            FrozenSpec::minus().with_segment(Segment::new(0, 1, 1, MINUS)),
        ] {
            let l = build_lattice(2, spec).unwrap();
            for beta in [0.0, 0.3, 1.0, 2.5] {
                let p = ModelParams::new(beta).unwrap();
                for s in l.free_sites() {
                    let ev = PartialAssignment::single(s, PLUS);
                    let a = brute_probability(&l, p, &ev).unwrap();
                    let b = transfer_probability(&l, p, &ev).unwrap();
                    assert!((a.probability - b.probability).abs() < 1e-12);
                    assert!((a.log_partition - b.log_partition).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn rejects_wide_strips_and_multi_column_events() {
        let l = Lattice::new(BoxGeometry::strip(15, 2).unwrap(), FrozenSpec::minus()).unwrap();
        let ev = PartialAssignment::single(Site::new(0, 0), PLUS);
        assert_eq!(
            transfer_probability(&l, ModelParams::new(1.0).unwrap(), &ev).unwrap_err(),
            Error::StripTooWide { rows: 15, max: 14 }
        );
        let l = build_lattice(2, FrozenSpec::minus()).unwrap();
        let ev = PartialAssignment::new(vec![(Site::new(0, 0), PLUS), (Site::new(1, 0), PLUS)]);
        assert_eq!(
            transfer_probability(&l, ModelParams::new(1.0).unwrap(), &ev).unwrap_err(),
            Error::EventNotColumnar
        );
    }

    #[test]
    fn strip_center_is_mostly_minus() {
        let l = Lattice::new(BoxGeometry::strip(3, 8).unwrap(), FrozenSpec::minus()).unwrap();
        let p = ModelParams::new(1.0).unwrap();
        let ev = PartialAssignment::single(Site::new(0, 0), PLUS);
        let r = transfer_probability(&l, p, &ev).unwrap();
        assert!(r.probability < 0.05, "{}", r.probability);
        assert!((r.probability - STRIP_3X8_CENTER_B1).abs() < 1e-12, "{:.17e}", r.probability);
        let b = brute_probability(&l, p, &ev).unwrap();
        assert!((r.probability - b.probability).abs() < 1e-12);
    }

    #[test]
    fn infinite_temperature_strip() {
        let l = Lattice::new(BoxGeometry::strip(4, 6).unwrap(), FrozenSpec::minus()).unwrap();
        for s in l.free_sites() {
            let r = transfer_probability(&l, ModelParams::new(0.0).unwrap(), &PartialAssignment::single(s, PLUS)).unwrap();
            assert!((r.probability - 0.5).abs() < 1e-14);
        }
    }

    /// Regression value for the centre of the 3x8 strip at beta = 1.
    const STRIP_3X8_CENTER_B1: f64 = 3.618_115_013_626_644_6e-4;
}
