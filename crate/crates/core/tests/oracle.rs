use proptest::prelude::*;
use schn_core::exact::{
    brute_probability, fkg_audit, plus_probability, transfer_probability, EnergyHistogram,
    PartialAssignment,
};
use schn_core::{build_lattice, BoxGeometry, FrozenSpec, Lattice, ModelParams, Segment, Site, MINUS, PLUS};

/// Every one-segment spec strictly inside a box, both segment values.
fn one_segment_specs(g: &BoxGeometry) -> Vec<FrozenSpec> {
    let mut out = vec![FrozenSpec::minus()];
    for y in g.y_min + 1..g.y_max {
        for a in g.x_min + 1..g.x_max {
            for b in a..g.x_max {
                for v in [PLUS, MINUS] {
                    out.push(FrozenSpec::minus().with_segment(Segment::new(a, b, y, v)));
                }
            }
        }
    }
    out
}

#[test]
fn brute_and_transfer_agree_on_m2() {
    let g = BoxGeometry::square(2).unwrap();
    let specs = one_segment_specs(&g);
    assert_eq!(specs.len(), 1 + 3 * 6 * 2);
    let mut worst = 0.0f64;
    for spec in specs {
        let l = Lattice::new(g, spec).unwrap();
        for beta in [0.0, 0.5, 1.0, 2.0] {
            let p = ModelParams::new(beta).unwrap();
            for s in l.free_sites() {
                for v in [PLUS, MINUS] {
                    let ev = PartialAssignment::single(s, v);
                    let a = brute_probability(&l, p, &ev).unwrap().probability;
                    let b = transfer_probability(&l, p, &ev).unwrap().probability;
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-12, "max discrepancy {worst:e}");
}

#[test]
fn brute_and_transfer_agree_on_column_events() {
    let l = Lattice::new(
        BoxGeometry::strip(3, 6).unwrap(),
        FrozenSpec::minus().with_segment(Segment::new(-3, -1, 0, PLUS)),
    )
    .unwrap();
    let column: Vec<Site> = (-1..=1).map(|y| Site::new(0, y)).collect();
    let h = EnergyHistogram::build(&l, &column).unwrap();
    for beta in [0.0, 0.5, 1.0, 2.0] {
        let p = ModelParams::new(beta).unwrap();
        for pattern in 0..8 {
            let ev = PartialAssignment::new(
                column.iter().enumerate().map(|(k, &s)| (s, if pattern >> k & 1 == 1 { PLUS } else { MINUS })).collect(),
            );
            let a = h.probability(p, &ev).unwrap().probability;
            let b = transfer_probability(&l, p, &ev).unwrap().probability;
            assert!((a - b).abs() <= 1e-12, "beta {beta} pattern {pattern}: {a} vs {b}");
        }
    }
}

#[test]
fn m2_segment_value_against_enumeration() {
    // P(σ_(1,0) = +1) on M=2 with [(-1,0),(0,0)] = +1 at β = 0.8, from the
    // histogram and from a direct weighted sum over the 2^7 states.
    let l = build_lattice(2, FrozenSpec::minus().with_segment(Segment::new(-1, 0, 0, PLUS))).unwrap();
    let beta = 0.8;
    let target = Site::new(1, 0);
    let k = l.free_position(target).unwrap();
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for bits in 0u32..1 << 7 {
        let free: Vec<i8> = (0..7).map(|i| if bits >> i & 1 == 1 { PLUS } else { MINUS }).collect();
        let c = schn_core::SpinConfiguration::from_free(std::sync::Arc::new(l.clone()), &free).unwrap();
        let w = (-beta * schn_core::hamiltonian(&c) as f64).exp();
        den += w;
        if free[k] == PLUS {
            num += w;
        }
    }
    let p = brute_probability(&l, ModelParams::new(beta).unwrap(), &PartialAssignment::single(target, PLUS)).unwrap();
    assert!((p.probability - num / den).abs() < 1e-14);
    assert!((p.log_partition - den.ln()).abs() < 1e-12);
}

#[test]
fn longer_one_sided_segment_dominates_on_m3() {
    let g = BoxGeometry::square(3).unwrap();
    let one = FrozenSpec::minus().with_segment(Segment::left_of_origin(1));
    let two = FrozenSpec::minus().with_segment(Segment::left_of_origin(2));
    for beta in [0.4, 0.8, 1.2] {
        let a = fkg_audit(g, ModelParams::new(beta).unwrap(), &one, &two, Site::new(1, 0)).unwrap();
        assert!(a.p_low <= a.p_high);
    }
}

#[test]
fn two_sided_dominates_one_sided_on_strips() {
    let g = BoxGeometry::strip(5, 17).unwrap();
    for beta in [0.5, 1.0, 2.0] {
        for n in 1..=2 {
            for len in n..=6 {
                let left = Segment::new(-len, -n, 0, PLUS);
                let right = Segment::new(n, len, 0, PLUS);
                let one = FrozenSpec::minus().with_segment(left);
                let two = one.clone().with_segment(right);
                fkg_audit(g, ModelParams::new(beta).unwrap(), &one, &two, Site::new(0, 0)).unwrap();
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spin_flip_symmetry(y in -1i32..=1, a in -1i32..=1, len in 0i32..=2, v in prop::bool::ANY,
                          beta in 0.0f64..2.5, sx in -1i32..=1, sy in -1i32..=1) {
        let b = (a + len).min(1);
        let spec = FrozenSpec::minus().with_segment(Segment::new(a, b, y, if v { PLUS } else { MINUS }));
        let l = build_lattice(2, spec).unwrap();
        let site = Site::new(sx, sy);
        prop_assume!(l.frozen_value(site).is_none());
        let p = ModelParams::new(beta).unwrap();
        let up = brute_probability(&l, p, &PartialAssignment::single(site, PLUS)).unwrap().probability;
        let down = brute_probability(&l.flipped(), p, &PartialAssignment::single(site, MINUS)).unwrap().probability;
        prop_assert!((up - down).abs() < 1e-12);
        let other = brute_probability(&l, p, &PartialAssignment::single(site, MINUS)).unwrap().probability;
        prop_assert!((up + other - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&up));
    }

    #[test]
    fn plus_probability_at_frozen_sites(beta in 0.0f64..3.0) {
        let l = build_lattice(2, FrozenSpec::minus().with_segment(Segment::new(0, 1, 0, PLUS))).unwrap();
        let p = ModelParams::new(beta).unwrap();
        prop_assert_eq!(plus_probability(&l, p, Site::new(1, 0)).unwrap(), 1.0);
        prop_assert_eq!(plus_probability(&l, p, Site::new(2, 2)).unwrap(), 0.0);
    }
}
