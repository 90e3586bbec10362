//! Experiment configuration files.
//!
//! A file is a list of `[section]` headers followed by `key = value` lines.
//! `#` starts a comment. Values are strings, integers, reals, or
//! comma-separated lists of those. Unknown sections and keys are rejected;
//! missing keys take their defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use schn_core::mc::Dynamics;

use crate::error::{Error, Result};

/// Raw `section -> key -> value` content, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub sections: Vec<(String, Vec<(String, String)>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Syntax { line: line_no, msg: "unterminated section header".into() })?
                    .trim();
                if name.is_empty() {
                    return Err(Error::Syntax { line: line_no, msg: "empty section name".into() });
                }
                if raw.sections.iter().any(|(s, _)| s == name) {
                    return Err(Error::Syntax { line: line_no, msg: format!("duplicate section [{name}]") });
                }
                raw.sections.push((name.to_string(), Vec::new()));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Syntax { line: line_no, msg: "expected `key = value`".into() })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Syntax { line: line_no, msg: "empty key".into() });
            }
            let Some((_, entries)) = raw.sections.last_mut() else {
                return Err(Error::Syntax { line: line_no, msg: "key outside of any section".into() });
            };
            if entries.iter().any(|(k, _)| k == key) {
                return Err(Error::Syntax { line: line_no, msg: format!("duplicate key `{key}`") });
            }
            entries.push((key.to_string(), value.to_string()));
        }
        Ok(raw)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|(s, _)| s == section)
            .and_then(|(_, e)| e.iter().find(|(k, _)| k == key))
            .map(|(_, v)| v.as_str())
    }

    fn check_known(&self, known: &[(&str, &[&str])]) -> Result<()> {
        for (section, entries) in &self.sections {
            let Some((_, keys)) = known.iter().find(|(s, _)| s == section) else {
                return Err(Error::Invalid(format!("unknown section [{section}]")));
            };
            for (k, _) in entries {
                if !keys.contains(&k.as_str()) {
                    return Err(Error::Value { section: section.clone(), key: k.clone(), msg: "unknown key".into() });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    OneSidedDecay,
    TwoSidedWetting,
    CutHeight,
    WalkSuite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::OneSidedDecay => "one_sided_decay",
            ExperimentKind::TwoSidedWetting => "two_sided_wetting",
            ExperimentKind::CutHeight => "cut_height",
            ExperimentKind::WalkSuite => "walk_suite",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "one_sided_decay" => ExperimentKind::OneSidedDecay,
            "two_sided_wetting" => ExperimentKind::TwoSidedWetting,
            "cut_height" => ExperimentKind::CutHeight,
            "walk_suite" => ExperimentKind::WalkSuite,
            _ => return Err(format!("unknown experiment `{s}`")),
        })
    }
}

/// A step law for the effective walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawSpec {
    /// `±1` with probability one half each.
    Simple,
    /// `ζ ≡ 0`.
    Degenerate,
    /// `parametric:c:q`.
    Parametric { c: f64, q: f64 },
    /// `animal:beta`, built from animals up to the configured cutoff.
    Animal { beta: f64 },
}

impl LawSpec {
    pub fn label(&self) -> String {
        match self {
            LawSpec::Simple => "simple".into(),
            LawSpec::Degenerate => "degenerate".into(),
            LawSpec::Parametric { c, q } => format!("parametric:{c}:{q}"),
            LawSpec::Animal { beta } => format!("animal:{beta}"),
        }
    }
}

impl FromStr for LawSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let real = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number `{t}` in law `{s}`"));
        Ok(match parts.as_slice() {
            ["simple"] => LawSpec::Simple,
            ["degenerate"] => LawSpec::Degenerate,
            ["parametric", c, q] => LawSpec::Parametric { c: real(c)?, q: real(q)? },
            ["animal", b] => LawSpec::Animal { beta: real(b)? },
            _ => return Err(format!("unknown step law `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// Box half-side of the main runs.
    pub m: i32,
    /// Larger box for the uniformity-in-`M` comparison; 0 disables it.
    pub m_compare: i32,
    /// Segment lengths `N`.
    pub segment_lengths: Vec<i32>,
    /// Probe distances `n` to the right of the segment end.
    pub probes: Vec<i32>,
    /// Half gap `n` of the two-sided geometry.
    pub gap: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub dynamics: Dynamics,
    pub burn_in: u64,
    pub sweeps: u64,
    pub thin: u64,
    pub replicas: u64,
    /// Sweeps of the larger-box comparison runs.
    pub compare_sweeps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub laws: Vec<LawSpec>,
    pub animal_cutoff: usize,
    /// Sizes of the exponent and middle-regime fits.
    pub sizes: Vec<usize>,
    /// Sizes of the endpoint-uniformity check.
    pub uniformity_sizes: Vec<usize>,
    pub u: i64,
    pub v: i64,
    /// Walks of the Monte Carlo cross-check; 0 disables it.
    pub mc_walks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub geometry: Geometry,
    pub betas: Vec<f64>,
    pub sampler: SamplerConfig,
    pub walk: WalkConfig,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("experiment", &["name", "seed", "out_dir"]),
    ("geometry", &["m", "m_compare", "segment_lengths", "probes", "gap"]),
    ("model", &["betas"]),
    ("sampler", &["dynamics", "burn_in", "sweeps", "thin", "replicas", "compare_sweeps"]),
    ("walk", &["laws", "animal_cutoff", "sizes", "uniformity_sizes", "u", "v", "mc_walks"]),
];

fn dynamics_name(d: Dynamics) -> &'static str {
    match d {
        Dynamics::HeatBath => "heat_bath",
        Dynamics::Metropolis => "metropolis",
    }
}

fn parse_dynamics(s: &str) -> Result<Dynamics, String> {
    match s {
        "heat_bath" => Ok(Dynamics::HeatBath),
        "metropolis" => Ok(Dynamics::Metropolis),
        _ => Err(format!("unknown dynamics `{s}`")),
    }
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

struct Reader<'a>(&'a RawConfig);

impl Reader<'_> {
    fn value<T>(&self, section: &str, key: &str, default: T, parse: impl Fn(&str) -> Result<T, String>) -> Result<T> {
        match self.0.get(section, key) {
            None => Ok(default),
            Some(v) => parse(v).map_err(|msg| Error::Value { section: section.into(), key: key.into(), msg }),
        }
    }

    fn scalar<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        self.value(section, key, default, |v| v.parse().map_err(|_| format!("cannot parse `{v}`")))
    }

    fn list<T: FromStr>(&self, section: &str, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: ToString,
    {
        self.value(section, key, default, |v| {
            v.split(',')
                .map(|t| t.trim().parse().map_err(|e: T::Err| format!("`{}`: {}", t.trim(), e.to_string())))
                .collect()
        })
    }
}

impl ExperimentConfig {
    /// Defaults for `kind`: the desk-scale versions of each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment: kind,
            seed: 1,
            out_dir: PathBuf::from("out").join(kind.name()),
            geometry: Geometry { m: 32, m_compare: 0, segment_lengths: vec![8, 16], probes: (1..=6).collect(), gap: 2 },
            betas: vec![1.0],
            sampler: SamplerConfig {
                dynamics: Dynamics::HeatBath,
                burn_in: 1000,
                sweeps: 100_000,
                thin: 1,
                replicas: 1,
                compare_sweeps: 100_000,
            },
            walk: WalkConfig {
                laws: vec![LawSpec::Simple, LawSpec::Animal { beta: 2.0 }],
                animal_cutoff: 10,
                sizes: vec![64, 128, 256, 512],
                uniformity_sizes: vec![16, 32, 64, 128, 256],
                u: 1,
                v: 1,
                mc_walks: 20_000,
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw = RawConfig::parse(text)?;
        raw.check_known(KNOWN)?;
        let r = Reader(&raw);
        let name_error = |msg: String| Error::Value { section: "experiment".into(), key: "name".into(), msg };
        let kind: ExperimentKind = raw
            .get("experiment", "name")
            .ok_or_else(|| name_error("missing".into()))?
            .parse()
            .map_err(name_error)?;
        let d = Self::defaults(kind);
        let cfg = ExperimentConfig {
            experiment: kind,
            seed: r.scalar("experiment", "seed", d.seed)?,
            out_dir: r.value("experiment", "out_dir", d.out_dir, |v| Ok(PathBuf::from(v)))?,
            geometry: Geometry {
                m: r.scalar("geometry", "m", d.geometry.m)?,
                m_compare: r.scalar("geometry", "m_compare", d.geometry.m_compare)?,
                segment_lengths: r.list("geometry", "segment_lengths", d.geometry.segment_lengths)?,
                probes: r.list("geometry", "probes", d.geometry.probes)?,
                gap: r.scalar("geometry", "gap", d.geometry.gap)?,
            },
            betas: r.list("model", "betas", d.betas)?,
            sampler: SamplerConfig {
                dynamics: r.value("sampler", "dynamics", d.sampler.dynamics, parse_dynamics)?,
                burn_in: r.scalar("sampler", "burn_in", d.sampler.burn_in)?,
                sweeps: r.scalar("sampler", "sweeps", d.sampler.sweeps)?,
                thin: r.scalar("sampler", "thin", d.sampler.thin)?,
                replicas: r.scalar("sampler", "replicas", d.sampler.replicas)?,
                compare_sweeps: r.scalar("sampler", "compare_sweeps", d.sampler.compare_sweeps)?,
            },
            walk: WalkConfig {
                laws: r.list("walk", "laws", d.walk.laws)?,
                animal_cutoff: r.scalar("walk", "animal_cutoff", d.walk.animal_cutoff)?,
                sizes: r.list("walk", "sizes", d.walk.sizes)?,
                uniformity_sizes: r.list("walk", "uniformity_sizes", d.walk.uniformity_sizes)?,
                u: r.scalar("walk", "u", d.walk.u)?,
                v: r.scalar("walk", "v", d.walk.v)?,
                mc_walks: r.scalar("walk", "mc_walks", d.walk.mc_walks)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text form; every field is written, so parsing it back gives
    /// the same config.
    pub fn serialize(&self) -> String {
        let g = &self.geometry;
        let s = &self.sampler;
        let w = &self.walk;
        let mut out = String::new();
        let _ = writeln!(out, "[experiment]");
        let _ = writeln!(out, "name = {}", self.experiment.name());
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(out, "\n[geometry]");
        let _ = writeln!(out, "m = {}", g.m);
        let _ = writeln!(out, "m_compare = {}", g.m_compare);
        let _ = writeln!(out, "segment_lengths = {}", join(&g.segment_lengths, |x| x.to_string()));
        let _ = writeln!(out, "probes = {}", join(&g.probes, |x| x.to_string()));
        let _ = writeln!(out, "gap = {}", g.gap);
        let _ = writeln!(out, "\n[model]");
        let _ = writeln!(out, "betas = {}", join(&self.betas, |x| format!("{x:?}")));
        let _ = writeln!(out, "\n[sampler]");
        let _ = writeln!(out, "dynamics = {}", dynamics_name(s.dynamics));
        let _ = writeln!(out, "burn_in = {}", s.burn_in);
        let _ = writeln!(out, "sweeps = {}", s.sweeps);
        let _ = writeln!(out, "thin = {}", s.thin);
        let _ = writeln!(out, "replicas = {}", s.replicas);
        let _ = writeln!(out, "compare_sweeps = {}", s.compare_sweeps);
        let _ = writeln!(out, "\n[walk]");
        let _ = writeln!(out, "laws = {}", join(&w.laws, LawSpec::label));
        let _ = writeln!(out, "animal_cutoff = {}", w.animal_cutoff);
        let _ = writeln!(out, "sizes = {}", join(&w.sizes, |x| x.to_string()));
        let _ = writeln!(out, "uniformity_sizes = {}", join(&w.uniformity_sizes, |x| x.to_string()));
        let _ = writeln!(out, "u = {}", w.u);
        let _ = writeln!(out, "v = {}", w.v);
        let _ = writeln!(out, "mc_walks = {}", w.mc_walks);
        out
    }

    /// Geometry and counts: probes and segments inside the box
    /// (`n + N < M`), every count at least one.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        let bad = |msg: String| Err(Error::Invalid(msg));
        if g.m < 1 || g.segment_lengths.is_empty() || g.probes.is_empty() {
            return bad("need M >= 1 and non-empty segment and probe lists".into());
        }
        if g.segment_lengths.iter().chain(&g.probes).any(|&x| x < 1) || g.gap < 1 {
            return bad("segment lengths, probes and gap must be >= 1".into());
        }
        let n_max = *g.segment_lengths.iter().max().unwrap();
        let reach = *g.probes.iter().max().unwrap().max(&g.gap);
        if reach + n_max >= g.m {
            return bad(format!("n + N = {} must be below M = {}", reach + n_max, g.m));
        }
        if g.m_compare != 0 && g.m_compare <= g.m {
            return bad(format!("m_compare = {} must exceed m = {} (or be 0)", g.m_compare, g.m));
        }
        if self.experiment == ExperimentKind::TwoSidedWetting && g.segment_lengths.iter().any(|&n| n < g.gap) {
            return bad(format!("two-sided segments need N >= gap = {}", g.gap));
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad("betas must be a non-empty list of finite values >= 0".into());
        }
        let s = &self.sampler;
        if s.sweeps < 1 || s.thin < 1 || s.replicas < 1 || s.compare_sweeps < 1 {
            return bad("sweeps, thin, replicas and compare_sweeps must be >= 1".into());
        }
        let w = &self.walk;
        if w.laws.is_empty() || w.sizes.is_empty() || w.uniformity_sizes.is_empty() {
            return bad("walk laws and size lists must be non-empty".into());
        }
        if w.u < 1 || w.v < 1 || w.animal_cutoff < 1 || w.sizes.iter().chain(&w.uniformity_sizes).any(|&n| n < 1) {
            return bad("walk endpoints, cutoff and sizes must be >= 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_blank_lines_and_defaults() {
        let text = "# decay run\n[experiment]\nname = one_sided_decay  # trailing\nseed = 7\n\n[model]\nbetas = 1.0, 1.5\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.betas, vec![1.0, 1.5]);
        assert_eq!(c.geometry, ExperimentConfig::defaults(ExperimentKind::OneSidedDecay).geometry);
    }

    #[test]
    fn syntax_errors_carry_the_line() {
        let e = RawConfig::parse("[experiment]\nname one_sided_decay\n").unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 2, .. }), "{e}");
        assert!(RawConfig::parse("seed = 1\n").is_err());
        assert!(RawConfig::parse("[a]\nx = 1\nx = 2\n").is_err());
    }

    #[test]
    fn unknown_keys_and_bad_geometry_are_rejected() {
        assert!(ExperimentConfig::parse("[experiment]\nname = cut_height\ncolour = red\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nname = nope\n").is_err());
        assert!(ExperimentConfig::parse("[geometry]\nm = 8\n").is_err());
        let e = ExperimentConfig::parse("[experiment]\nname = cut_height\n[geometry]\nm = 10\nsegment_lengths = 8\nprobes = 2\n");
        assert!(matches!(e, Err(Error::Invalid(_))));
        let e = ExperimentConfig::parse("[experiment]\nname = cut_height\n[sampler]\nsweeps = 0\n");
        assert!(matches!(e, Err(Error::Invalid(_))));
    }

    #[test]
    fn laws_parse_and_print() {
        for s in ["simple", "degenerate", "parametric:0.5:0.25", "animal:2"] {
            let l: LawSpec = s.parse().unwrap();
            assert_eq!(l.label().parse::<LawSpec>().unwrap(), l);
        }
        assert!("animal".parse::<LawSpec>().is_err());
    }
}
