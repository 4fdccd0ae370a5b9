//! Flat sectioned config files for batch runs. One `[suite]` section per
//! suite instance (sections repeat freely), `key = value` pairs inside,
//! full-line `#` comments, and global keys before the first section.
//! Unknown suite names and unknown keys are errors; the parsed config
//! re-renders canonically (defaults materialized) so every report carries
//! the exact resolved inputs.

use crate::forms::{BoundaryForm, FForm};
use abplab_core::operators::PolyOperator;
use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Clone)]
pub struct Config {
    pub seed: u64,
    pub report_path: PathBuf,
    pub summary_path: PathBuf,
    pub suites: Vec<Suite>,
}

#[derive(Debug, Clone)]
pub enum Suite {
    Ops { operators: Vec<PolyOperator> },
    Hyperbolic { operators: Vec<PolyOperator>, samples: usize },
    Central { operators: Vec<PolyOperator>, tol: f64, expect: Option<f64> },
    Dirichlet { operators: Vec<PolyOperator>, samples: usize },
    Ellipticity { operators: Vec<PolyOperator>, samples: usize },
    Tame { operators: Vec<PolyOperator>, samples: usize, eta: f64 },
    Majorize { operators: Vec<PolyOperator>, samples: usize, hunt: bool },
    Maclaurin { n: usize, samples: usize },
    CoeffCond { operators: Vec<PolyOperator>, taus: usize, tol: Option<f64> },
    Alexandrov { hs: Vec<f64>, bumps: usize },
    Pipeline { operator: PolyOperator, f: FForm, lipschitz: f64, eta: f64, shape: usize },
    Oscillation { shape: usize, disk_shape: usize },
    Solve {
        operator: PolyOperator,
        f: FForm,
        boundary: BoundaryForm,
        shape: usize,
        boxed: [f64; 4],
        tol: f64,
        max_iter: usize,
        out: Option<PathBuf>,
        experimental: bool,
    },
}

pub const SUITE_NAMES: &[&str] = &[
    "ops",
    "hyperbolic",
    "central",
    "dirichlet",
    "ellipticity",
    "tame",
    "majorize",
    "maclaurin",
    "coeffcond",
    "alexandrov",
    "pipeline",
    "oscillation",
    "solve",
];

struct RawSection {
    name: String,
    line: usize,
    entries: Vec<(String, String)>,
}

fn split_sections(text: &str) -> Result<(Vec<(String, String)>, Vec<RawSection>)> {
    let mut globals = Vec::new();
    let mut sections: Vec<RawSection> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("line {}: unterminated section header", lineno + 1))?
                .trim()
                .to_string();
            if !SUITE_NAMES.contains(&name.as_str()) {
                bail!(
                    "line {}: unknown suite {name:?} (known: {})",
                    lineno + 1,
                    SUITE_NAMES.join(", ")
                );
            }
            sections.push(RawSection { name, line: lineno + 1, entries: Vec::new() });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value, got {line:?}", lineno + 1))?;
        let pair = (key.trim().to_string(), value.trim().to_string());
        match sections.last_mut() {
            Some(s) => s.entries.push(pair),
            None => globals.push(pair),
        }
    }
    Ok((globals, sections))
}

/// Key-value accessor that tracks which keys were consumed, so leftovers
/// are rejected by name.
struct Keys<'a> {
    section: &'a RawSection,
    used: BTreeSet<usize>,
}

impl<'a> Keys<'a> {
    fn new(section: &'a RawSection) -> Self {
        Keys { section, used: BTreeSet::new() }
    }

    fn all(&mut self, key: &str) -> Vec<&'a str> {
        let mut out = Vec::new();
        for (i, (k, v)) in self.section.entries.iter().enumerate() {
            if k == key {
                self.used.insert(i);
                out.push(v.as_str());
            }
        }
        out
    }

    fn single(&mut self, key: &str) -> Result<Option<&'a str>> {
        let hits = self.all(key);
        match hits.len() {
            0 => Ok(None),
            1 => Ok(Some(hits[0])),
            n => bail!(
                "[{}] (line {}): key {key:?} given {n} times",
                self.section.name,
                self.section.line
            ),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.single(key)? {
            None => Ok(default),
            Some(v) => v.parse::<T>().map_err(|e| {
                anyhow!("[{}]: bad value {v:?} for {key:?}: {e}", self.section.name)
            }),
        }
    }

    fn operators(&mut self, default: &[&str]) -> Result<Vec<PolyOperator>> {
        let specs = self.all("operator");
        let specs: Vec<&str> =
            if specs.is_empty() { default.to_vec() } else { specs };
        if specs.is_empty() {
            bail!("[{}]: needs at least one operator", self.section.name);
        }
        specs
            .iter()
            .map(|s| {
                PolyOperator::parse(s)
                    .map_err(|e| anyhow!("[{}]: {e}", self.section.name))
            })
            .collect()
    }

    fn finish(self) -> Result<()> {
        for (i, (k, _)) in self.section.entries.iter().enumerate() {
            if !self.used.contains(&i) {
                bail!(
                    "[{}] (line {}): unknown key {k:?}",
                    self.section.name,
                    self.section.line
                );
            }
        }
        Ok(())
    }
}

fn parse_box(text: &str) -> Result<[f64; 4]> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>().context("box needs four reals"))
        .collect::<Result<_>>()?;
    let [x0, y0, x1, y1] = vals[..] else { bail!("box needs lo0,lo1,hi0,hi1") };
    Ok([x0, y0, x1, y1])
}

fn parse_suite(section: &RawSection) -> Result<Suite> {
    let mut keys = Keys::new(section);
    let suite = match section.name.as_str() {
        "ops" => Suite::Ops {
            operators: keys.operators(&[
                "det:n=2",
                "det:n=3",
                "sigma:k=2,n=3",
                "pfold:p=2,n=3",
                "trace:n=3",
                "normsqdet:n=2",
            ])?,
        },
        "hyperbolic" => Suite::Hyperbolic {
            operators: keys.operators(&["det:n=3", "sigma:k=2,n=4", "pfold:p=2,n=3"])?,
            samples: keys.parsed("samples", 200usize)?,
        },
        "central" => Suite::Central {
            operators: keys.operators(&["det:n=3"])?,
            tol: keys.parsed("tol", 1e-6f64)?,
            expect: keys.single("expect")?.map(str::parse).transpose()?,
        },
        "dirichlet" => Suite::Dirichlet {
            operators: keys.operators(&["det:n=3", "sigma:k=2,n=3"])?,
            samples: keys.parsed("samples", 200usize)?,
        },
        "ellipticity" => Suite::Ellipticity {
            operators: keys.operators(&["det:n=3", "sigma:k=2,n=3"])?,
            samples: keys.parsed("samples", 200usize)?,
        },
        "tame" => Suite::Tame {
            operators: keys.operators(&["det:n=2", "sigma:k=2,n=3"])?,
            samples: keys.parsed("samples", 200usize)?,
            eta: keys.parsed("eta", 0.5f64)?,
        },
        "majorize" => Suite::Majorize {
            operators: keys.operators(&["det:n=3", "sigma:k=2,n=3"])?,
            samples: keys.parsed("samples", 2000usize)?,
            hunt: keys.parsed("hunt", false)?,
        },
        "maclaurin" => Suite::Maclaurin {
            n: keys.parsed("n", 4usize)?,
            samples: keys.parsed("samples", 2000usize)?,
        },
        "coeffcond" => Suite::CoeffCond {
            operators: keys.operators(&["normsqdet:n=2"])?,
            taus: keys.parsed("taus", 25usize)?,
            tol: keys.single("tol")?.map(str::parse).transpose()?,
        },
        "alexandrov" => {
            let hs = match keys.single("hs")? {
                None => vec![1.0 / 32.0],
                Some(text) => text
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().context("hs must be reals"))
                    .collect::<Result<_>>()?,
            };
            for &h in &hs {
                if !(h > 0.0 && h <= 0.5) {
                    bail!("[alexandrov]: grid step h = {h} out of (0, 0.5]");
                }
            }
            Suite::Alexandrov { hs, bumps: keys.parsed("bumps", 6usize)? }
        }
        "pipeline" => {
            let op = match keys.single("operator")? {
                None => PolyOperator::det(2).map_err(|e| anyhow!("{e}"))?,
                Some(s) => PolyOperator::parse(s).map_err(|e| anyhow!("{e}"))?,
            };
            if op.dim() != 2 {
                bail!("[pipeline]: verification grids are 2-D; operator must act on 2x2");
            }
            let f = FForm::parse(keys.single("f")?.unwrap_or("const:1"), &[0.0, 0.0])?;
            let lipschitz = match keys.single("lipschitz")? {
                Some(v) => v.parse::<f64>().context("[pipeline]: bad lipschitz")?,
                None => f
                    .lipschitz_bound()
                    .unwrap_or(1.0),
            };
            Suite::Pipeline {
                operator: op,
                f,
                lipschitz,
                eta: keys.parsed("eta", 0.25f64)?,
                shape: keys.parsed("shape", 33usize)?,
            }
        }
        "oscillation" => Suite::Oscillation {
            shape: keys.parsed("shape", 33usize)?,
            disk_shape: keys.parsed("disk_shape", 65usize)?,
        },
        "solve" => {
            let op = match keys.single("operator")? {
                None => PolyOperator::det(2).map_err(|e| anyhow!("{e}"))?,
                Some(s) => PolyOperator::parse(s).map_err(|e| anyhow!("{e}"))?,
            };
            if op.dim() != 2 {
                bail!("[solve]: the relaxation solvers are 2-D; operator must act on 2x2");
            }
            let boxed = match keys.single("box")? {
                None => [0.0, 0.0, 1.0, 1.0],
                Some(text) => parse_box(text)?,
            };
            let center = [(boxed[0] + boxed[2]) / 2.0, (boxed[1] + boxed[3]) / 2.0];
            Suite::Solve {
                operator: op,
                f: FForm::parse(keys.single("f")?.unwrap_or("const:1"), &center)?,
                boundary: BoundaryForm::parse(keys.single("boundary")?.unwrap_or("halfnormsq"))?,
                shape: keys.parsed("shape", 65usize)?,
                boxed,
                tol: keys.parsed("tol", 1e-8f64)?,
                max_iter: keys.parsed("max_iter", 40_000usize)?,
                out: keys.single("out")?.map(PathBuf::from),
                experimental: keys.parsed("experimental", false)?,
            }
        }
        other => bail!("unknown suite {other:?}"),
    };
    keys.finish()?;
    Ok(suite)
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let (globals, sections) = split_sections(text)?;
        let mut seed = 42u64;
        let mut report_path = PathBuf::from("report.json");
        let mut summary_path = PathBuf::from("summary.csv");
        for (k, v) in &globals {
            match k.as_str() {
                "seed" => seed = v.parse().with_context(|| format!("bad seed {v:?}"))?,
                "report" => report_path = PathBuf::from(v),
                "summary" => summary_path = PathBuf::from(v),
                other => bail!("unknown global key {other:?} (expected seed, report, summary)"),
            }
        }
        if sections.is_empty() {
            bail!("config selects no suites; add at least one [suite] section");
        }
        let suites = sections.iter().map(parse_suite).collect::<Result<Vec<_>>>()?;
        Ok(Config { seed, report_path, summary_path, suites })
    }

    /// Canonical rendering with every default materialized; recorded
    /// verbatim in the report envelope.
    pub fn resolved_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "report = {}", self.report_path.display());
        let _ = writeln!(s, "summary = {}", self.summary_path.display());
        for suite in &self.suites {
            let _ = writeln!(s);
            render_suite(&mut s, suite);
        }
        s
    }
}

fn render_ops(s: &mut String, operators: &[PolyOperator]) {
    for op in operators {
        let _ = writeln!(s, "operator = {}", op.spec_str());
    }
}

fn render_suite(s: &mut String, suite: &Suite) {
    match suite {
        Suite::Ops { operators } => {
            let _ = writeln!(s, "[ops]");
            render_ops(s, operators);
        }
        Suite::Hyperbolic { operators, samples } => {
            let _ = writeln!(s, "[hyperbolic]");
            render_ops(s, operators);
            let _ = writeln!(s, "samples = {samples}");
        }
        Suite::Central { operators, tol, expect } => {
            let _ = writeln!(s, "[central]");
            render_ops(s, operators);
            let _ = writeln!(s, "tol = {tol}");
            if let Some(e) = expect {
                let _ = writeln!(s, "expect = {e}");
            }
        }
        Suite::Dirichlet { operators, samples } => {
            let _ = writeln!(s, "[dirichlet]");
            render_ops(s, operators);
            let _ = writeln!(s, "samples = {samples}");
        }
        Suite::Ellipticity { operators, samples } => {
            let _ = writeln!(s, "[ellipticity]");
            render_ops(s, operators);
            let _ = writeln!(s, "samples = {samples}");
        }
        Suite::Tame { operators, samples, eta } => {
            let _ = writeln!(s, "[tame]");
            render_ops(s, operators);
            let _ = writeln!(s, "samples = {samples}");
            let _ = writeln!(s, "eta = {eta}");
        }
        Suite::Majorize { operators, samples, hunt } => {
            let _ = writeln!(s, "[majorize]");
            render_ops(s, operators);
            let _ = writeln!(s, "samples = {samples}");
            let _ = writeln!(s, "hunt = {hunt}");
        }
        Suite::Maclaurin { n, samples } => {
            let _ = writeln!(s, "[maclaurin]");
            let _ = writeln!(s, "n = {n}");
            let _ = writeln!(s, "samples = {samples}");
        }
        Suite::CoeffCond { operators, taus, tol } => {
            let _ = writeln!(s, "[coeffcond]");
            render_ops(s, operators);
            let _ = writeln!(s, "taus = {taus}");
            if let Some(t) = tol {
                let _ = writeln!(s, "tol = {t}");
            }
        }
        Suite::Alexandrov { hs, bumps } => {
            let _ = writeln!(s, "[alexandrov]");
            let list: Vec<String> = hs.iter().map(|h| h.to_string()).collect();
            let _ = writeln!(s, "hs = {}", list.join(","));
            let _ = writeln!(s, "bumps = {bumps}");
        }
        Suite::Pipeline { operator, f, lipschitz, eta, shape } => {
            let _ = writeln!(s, "[pipeline]");
            let _ = writeln!(s, "operator = {}", operator.spec_str());
            let _ = writeln!(s, "f = {f}");
            let _ = writeln!(s, "lipschitz = {lipschitz}");
            let _ = writeln!(s, "eta = {eta}");
            let _ = writeln!(s, "shape = {shape}");
        }
        Suite::Oscillation { shape, disk_shape } => {
            let _ = writeln!(s, "[oscillation]");
            let _ = writeln!(s, "shape = {shape}");
            let _ = writeln!(s, "disk_shape = {disk_shape}");
        }
        Suite::Solve { operator, f, boundary, shape, boxed, tol, max_iter, out, experimental } => {
            let _ = writeln!(s, "[solve]");
            let _ = writeln!(s, "operator = {}", operator.spec_str());
            let _ = writeln!(s, "f = {f}");
            let _ = writeln!(s, "boundary = {boundary}");
            let _ = writeln!(s, "shape = {shape}");
            let _ = writeln!(
                s,
                "box = {},{},{},{}",
                boxed[0], boxed[1], boxed[2], boxed[3]
            );
            let _ = writeln!(s, "tol = {tol}");
            let _ = writeln!(s, "max_iter = {max_iter}");
            if let Some(p) = out {
                let _ = writeln!(s, "out = {}", p.display());
            }
            let _ = writeln!(s, "experimental = {experimental}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_globals_sections_and_defaults() {
        let cfg = Config::parse(
            "# run everything small\nseed = 7\n\n[majorize]\noperator = det:n=2\nsamples = 50\n\n[solve]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.suites.len(), 2);
        match &cfg.suites[0] {
            Suite::Majorize { operators, samples, hunt } => {
                assert_eq!(operators[0].spec_str(), "det:n=2");
                assert_eq!(*samples, 50);
                assert!(!hunt);
            }
            other => panic!("wrong suite {other:?}"),
        }
        match &cfg.suites[1] {
            Suite::Solve { shape, tol, .. } => {
                assert_eq!(*shape, 65);
                assert_eq!(*tol, 1e-8);
            }
            other => panic!("wrong suite {other:?}"),
        }
    }

    #[test]
    fn rejects_unknowns_and_empty() {
        assert!(Config::parse("[warp]\n").is_err(), "unknown suite");
        assert!(Config::parse("[majorize]\nwarp = 1\n").is_err(), "unknown key");
        assert!(Config::parse("turbo = 1\n[majorize]\n").is_err(), "unknown global");
        assert!(Config::parse("seed = 3\n").is_err(), "no suites selected");
        assert!(Config::parse("[solve]\noperator = det:n=3\n").is_err(), "3-D solve");
        assert!(Config::parse("[majorize]\nsamples = 1\nsamples = 2\n").is_err());
    }

    #[test]
    fn resolved_text_round_trips() {
        let cfg = Config::parse("[pipeline]\neta = 0.3\n\n[oscillation]\n").unwrap();
        let text = cfg.resolved_text();
        assert!(text.contains("lipschitz = 1"), "defaults materialized:\n{text}");
        let again = Config::parse(&text).unwrap();
        assert_eq!(again.resolved_text(), text, "rendering is a fixed point");
    }
}
