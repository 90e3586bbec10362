use std::path::Path;

use proptest::prelude::*;
use schn_core::mc::Dynamics;
use schn_lab::config::{ExperimentConfig, ExperimentKind, LawSpec};
use schn_lab::report::config_digest;

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let expected = [
        ("one_sided_decay.conf", ExperimentKind::OneSidedDecay),
        ("two_sided_wetting.conf", ExperimentKind::TwoSidedWetting),
        ("cut_height.conf", ExperimentKind::CutHeight),
        ("walk_suite.conf", ExperimentKind::WalkSuite),
    ];
    for (file, kind) in expected {
        let c = ExperimentConfig::load(&dir.join(file)).unwrap();
        assert_eq!(c.experiment, kind, "{file}");
        assert_eq!(ExperimentConfig::parse(&c.serialize()).unwrap(), c, "{file}");
    }
}

#[test]
fn digest_ignores_the_output_directory() {
    let mut a = ExperimentConfig::defaults(ExperimentKind::CutHeight);
    let d = config_digest(&a);
    a.out_dir = "elsewhere".into();
    assert_eq!(config_digest(&a), d);
    a.seed += 1;
    assert_ne!(config_digest(&a), d);
}

fn law() -> impl Strategy<Value = LawSpec> {
    prop_oneof![
        Just(LawSpec::Simple),
        Just(LawSpec::Degenerate),
        (0.01f64..5.0, 0.01f64..0.99).prop_map(|(c, q)| LawSpec::Parametric { c, q }),
        (0.1f64..4.0).prop_map(|beta| LawSpec::Animal { beta }),
    ]
}

fn config() -> impl Strategy<Value = ExperimentConfig> {
    (
        prop_oneof![
            Just(ExperimentKind::OneSidedDecay),
            Just(ExperimentKind::CutHeight),
            Just(ExperimentKind::WalkSuite),
        ],
        any::<u64>(),
        (20i32..60, prop::collection::vec(1i32..8, 1..4), prop::collection::vec(1i32..8, 1..5), 1i32..4),
        prop::collection::vec(0.0f64..4.0, 1..4),
        (any::<bool>(), 0u64..5000, 1u64..1_000_000, 1u64..10, 1u64..4),
        prop::collection::vec(law(), 1..4),
    )
        .prop_map(|(kind, seed, (m, lengths, probes, gap), betas, (metro, burn, sweeps, thin, replicas), laws)| {
            let mut c = ExperimentConfig::defaults(kind);
            c.seed = seed;
            c.geometry.m = m;
            c.geometry.m_compare = if metro { 0 } else { m + 8 };
            c.geometry.segment_lengths = lengths;
            c.geometry.probes = probes;
            c.geometry.gap = gap;
            c.betas = betas;
            c.sampler.dynamics = if metro { Dynamics::Metropolis } else { Dynamics::HeatBath };
            c.sampler.burn_in = burn;
            c.sampler.sweeps = sweeps;
            c.sampler.thin = thin;
            c.sampler.replicas = replicas;
            c.walk.laws = laws;
            c
        })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(c in config()) {
        let text = c.serialize();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.serialize(), text);
    }

    #[test]
    fn law_labels_round_trip(l in law()) {
        prop_assert_eq!(l.label().parse::<LawSpec>().unwrap(), l);
    }
}
