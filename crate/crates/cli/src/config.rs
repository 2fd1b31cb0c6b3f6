//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! [geometry]
//! r1 = 1
//! r2 = 2.0e0
//! [sweep]
//! deltas = 1e-1, 1e-2, 1e-3
//! ```
//!
//! Sections are `[geometry]`, `[medium]`, `[source]`, `[sweep]`, `[mesh]`
//! and `[output]`. Lists are comma separated; ring modes are written
//! `n:cos:sin`.

use std::collections::BTreeMap;
use std::fmt;

use alr_core::discretization::SourceSpec;
use alr_core::experiments::{geometric_deltas, MeshSchedule, ScenarioConfig};
use alr_core::geometry::{GeometryConfig, Point2};
use alr_core::media::{slab_geometry, ObjectSpec, ScenarioKind, Sym2};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, message: message.into() })
}

const KEYS: &[(&str, &[&str])] = &[
    ("geometry", &["r0", "r1", "r2", "r3", "source_outer", "r_out", "slab_half_width"]),
    ("medium", &["scenario", "contrast", "object_a", "object_sigma", "k"]),
    ("source", &["kind", "radius", "modes", "centers", "width", "amplitude", "inner"]),
    ("sweep", &["deltas", "delta_max", "delta_min", "per_decade", "observation_radius", "two_mesh", "signature", "accept_experimental"]),
    ("mesh", &["h", "grading", "refine", "dtn_modes"]),
    ("output", &["dir", "prefix", "vtk"]),
];

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Syntactically valid key/value document, keyed by `section.key`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return err(Some(line), "unterminated section header");
                };
                let name = name.trim();
                match KEYS.iter().find(|(s, _)| *s == name) {
                    Some((s, _)) => section = Some(s),
                    None => return err(Some(line), format!("unknown section [{name}]")),
                }
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return err(Some(line), "expected `key = value`");
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(sec) = section else {
                return err(Some(line), format!("key {key} outside any section"));
            };
            let known = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            if !known.contains(&key) {
                return err(Some(line), format!("unknown key {key} in [{sec}]"));
            }
            if value.is_empty() {
                return err(Some(line), format!("empty value for {key}"));
            }
            let full = format!("{sec}.{key}");
            if let Some(prev) = doc.entries.get(&full) {
                return err(Some(line), format!("duplicate key {key} (first set on line {})", prev.line));
            }
            doc.entries.insert(full, Entry { value: value.to_string(), line });
        }
        Ok(doc)
    }

    /// Replace or add `section.key = value`, as from a command-line flag.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((path, value)) = assignment.split_once('=') else {
            return err(None, format!("override {assignment:?} is not `section.key=value`"));
        };
        let Some((sec, key)) = path.trim().split_once('.') else {
            return err(None, format!("override {path:?} is not `section.key`"));
        };
        if !KEYS.iter().any(|(s, k)| *s == sec && k.contains(&key)) {
            return err(None, format!("unknown key {key} in [{sec}]"));
        }
        self.entries.insert(format!("{sec}.{key}"), Entry { value: value.trim().to_string(), line: 0 });
        Ok(())
    }

    /// Sorted `section.key = value` lines; the hash input of a run.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, e)| format!("{k} = {}\n", e.value)).collect()
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line).filter(|&l| l > 0)
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => parse_number(&e.value).map(Some).ok_or(ConfigError { line: self.line(key), message: format!("{key}: {:?} is not a number", e.value) }),
        }
    }

    fn required(&self, key: &str) -> Result<f64, ConfigError> {
        let name = key.rsplit('.').next().unwrap_or(key);
        self.number(key)?.map_or_else(|| err(None, format!("missing required key {name}")), Ok)
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| parse_number(s).ok_or(ConfigError { line: self.line(key), message: format!("{key}: {s:?} is not a number") }))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    fn integer(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).or(err(self.line(key), format!("{key}: {:?} is not a non-negative integer", e.value))),
        }
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.raw(key).map(|e| e.value.as_str()) {
            None => Ok(None),
            Some("true" | "yes" | "1") => Ok(Some(true)),
            Some("false" | "no" | "0") => Ok(Some(false)),
            Some(v) => err(self.line(key), format!("{key}: {v:?} is not a boolean")),
        }
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.raw(key).map(|e| e.value.as_str())
    }

    fn rule(&self, key: &str, ok: bool, rule: &str) -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            err(self.line(key), format!("invariant {rule} violated"))
        }
    }

    /// Build and validate the scenario; `kind` overrides `medium.scenario`.
    pub fn resolve(&self, kind: Option<ScenarioKind>) -> Result<RunConfig, ConfigError> {
        let kind = match (kind, self.text("medium.scenario")) {
            (Some(k), _) => k,
            (None, Some(name)) => ScenarioKind::from_name(name).map_or_else(|| err(self.line("medium.scenario"), format!("unknown scenario {name}")), Ok)?,
            (None, None) => ScenarioKind::QuasistaticCloak,
        };
        let r1 = self.required("geometry.r1")?;
        let r2 = self.required("geometry.r2")?;
        self.rule("geometry.r2", r1 > 0.0 && r2 > r1, "0 < r1 < r2")?;
        let r0 = self.number("geometry.r0")?.unwrap_or(0.02 * r1);
        self.rule("geometry.r0", r0 > 0.0 && r0 < r1, "0 < r0 < r1")?;
        let slab = kind == ScenarioKind::SlabDc;
        let r3 = if slab {
            let r3 = self.required("geometry.r3")?;
            self.rule("geometry.r3", r3 > r2, "r3 > r2")?;
            r3
        } else {
            let r3 = r2 * r2 / r1;
            if let Some(given) = self.number("geometry.r3")? {
                self.rule("geometry.r3", (given - r3).abs() <= 1e-12 * r3, "r3 = r2^2/r1")?;
            }
            r3
        };
        let source_outer = self.number("geometry.source_outer")?.unwrap_or(1.25 * r3);
        self.rule("geometry.source_outer", source_outer > r3, "r3 < source_outer")?;
        let r_out = self.number("geometry.r_out")?.unwrap_or(source_outer + 0.5 * r3);
        self.rule("geometry.r_out", r_out > source_outer, "source_outer < r_out")?;
        let geometry = if slab {
            let s = self.number("geometry.slab_half_width")?.unwrap_or(0.1 * r1);
            slab_geometry(r1, s, r2, r3, source_outer, r_out).or_else(|e| err(None, e.to_string()))?
        } else {
            if self.raw("geometry.slab_half_width").is_some() {
                return err(self.line("geometry.slab_half_width"), "slab_half_width is only valid for the slab scenario");
            }
            GeometryConfig::circular(r1, r2, source_outer, r_out)
        };

        let mut sc = ScenarioConfig::default_for(kind);
        let default_mesh = sc.mesh;
        sc.geometry = geometry;
        sc.r0 = r0;
        sc.k = self.number("medium.k")?.unwrap_or(if sc.k > 0.0 { 1.0 / r2 } else { 0.0 });
        let contrast = self.number("medium.contrast")?;
        sc.object = match (self.numbers("medium.object_a")?, contrast) {
            (Some(a), _) => {
                if a.len() != 3 {
                    return err(self.line("medium.object_a"), "object_a takes a11, a12, a22");
                }
                let sigma = self.number("medium.object_sigma")?.unwrap_or(1.0);
                ObjectSpec { a: Sym2::new(a[0], a[1], a[2]), sigma }
            }
            (None, Some(c)) => ObjectSpec::contrast(c),
            (None, None) => sc.object,
        };

        let g = &sc.geometry;
        sc.source = match self.text("source.kind").unwrap_or("ring") {
            "ring" => {
                let radius = self.number("source.radius")?.unwrap_or(0.5 * (g.r3 + g.source_outer));
                let modes = match self.text("source.modes") {
                    Some(m) => parse_modes(m).ok_or(ConfigError { line: self.line("source.modes"), message: "modes are written n:cos:sin, comma separated".into() })?,
                    None => vec![(1, 1.0, 0.5), (2, 0.5, 1.0), (3, 0.3, -0.2)],
                };
                SourceSpec::ring(radius, &modes)
            }
            "bump" => {
                let c = self.numbers("source.centers")?.unwrap_or_default();
                if c.len() != 4 {
                    return err(self.line("source.centers"), "centers takes x0, y0, x1, y1");
                }
                SourceSpec::BumpPair {
                    centers: [Point2::new(c[0], c[1]), Point2::new(c[2], c[3])],
                    width: self.number("source.width")?.unwrap_or(0.15),
                    amplitude: self.number("source.amplitude")?.unwrap_or(1.0),
                }
            }
            "none" => SourceSpec::None,
            other => return err(self.line("source.kind"), format!("unknown source kind {other}")),
        };
        sc.source_inner = self.number("source.inner")?;

        sc.deltas = match self.numbers("sweep.deltas")? {
            Some(d) => d,
            None => {
                let hi = self.number("sweep.delta_max")?.unwrap_or(1e-1);
                let lo = self.number("sweep.delta_min")?.unwrap_or(1e-4);
                self.rule("sweep.delta_min", hi > 0.0 && lo > 0.0 && lo < hi, "0 < delta_min < delta_max")?;
                let per = self.integer("sweep.per_decade")?.unwrap_or(2);
                self.rule("sweep.per_decade", per > 0, "per_decade > 0")?;
                geometric_deltas(-hi.log10(), -lo.log10(), per)
            }
        };
        sc.observation_radius = self.number("sweep.observation_radius")?.unwrap_or(1.5 * sc.geometry.r3);
        sc.two_mesh = self.flag("sweep.two_mesh")?.unwrap_or(sc.two_mesh);
        sc.signature = self.flag("sweep.signature")?.unwrap_or(sc.signature);
        sc.accept_experimental = self.flag("sweep.accept_experimental")?.unwrap_or(false);

        let h = self.number("mesh.h")?.unwrap_or(default_mesh.h * r1);
        sc.mesh = MeshSchedule {
            h,
            grading: self.number("mesh.grading")?.unwrap_or(default_mesh.grading),
            refine: self.integer("mesh.refine")?.unwrap_or(default_mesh.refine),
        };
        sc.dtn_modes = self.integer("mesh.dtn_modes")?.unwrap_or(sc.dtn_modes);

        sc.validate().or_else(|e| err(None, e.to_string()))?;
        let output = OutputSpec {
            dir: self.text("output.dir").unwrap_or(".").to_string(),
            prefix: self.text("output.prefix").map_or_else(|| kind.slug(), str::to_string),
            vtk: self.flag("output.vtk")?.unwrap_or(false),
        };
        Ok(RunConfig { scenario: sc, output, hash: self.hash() })
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let ok = !s.is_empty() && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'));
    ok.then(|| s.parse::<f64>().ok()).flatten().filter(|v| v.is_finite())
}

fn parse_modes(s: &str) -> Option<Vec<(usize, f64, f64)>> {
    s.split(',')
        .map(|m| {
            let parts: Vec<&str> = m.trim().split(':').collect();
            match parts.as_slice() {
                [n, c, si] => Some((n.trim().parse().ok()?, parse_number(c)?, parse_number(si)?)),
                _ => None,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub dir: String,
    pub prefix: String,
    pub vtk: bool,
}

/// Validated scenario plus output settings and the configuration hash.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub output: OutputSpec,
    pub hash: String,
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    Ok(Document::parse(text)?.resolve(None)?.scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let sc = parse_config("[geometry]\nr1 = 1\nr2 = 2\n").unwrap();
        assert_eq!(sc.geometry.r3, 4.0);
        assert_eq!(sc.kind, ScenarioKind::QuasistaticCloak);
        assert_eq!(sc.deltas.len(), 7);
    }

    #[test]
    fn empty_document_is_rejected() {
        let e = parse_config("").unwrap_err();
        assert_eq!(e.message, "missing required key r1");
    }

    #[test]
    fn object_radius_rule() {
        let e = parse_config("[geometry]\nr1 = 0.4\nr2 = 2\nr0 = 0.5\n").unwrap_err();
        assert!(e.to_string().contains("0 < r0 < r1"), "{e}");
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn unknown_key_has_a_line_number() {
        let e = Document::parse("[geometry]\nr1 = 1\n\nradius = 3\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("unknown key radius"));
        assert!(Document::parse("r1 = 1").is_err());
        assert!(Document::parse("[nonsense]").is_err());
    }

    #[test]
    fn scientific_numbers_and_lists() {
        let sc = parse_config("[geometry]\nr1 = 1.0e0\nr2 = 2E0\n[sweep]\ndeltas = 1e-1, 1e-2,1e-3\n[source]\nmodes = 2:1:0\n").unwrap();
        assert_eq!(sc.deltas, vec![1e-1, 1e-2, 1e-3]);
        assert_eq!(sc.source, SourceSpec::ring(4.5, &[(2, 1.0, 0.0)]));
        assert!(parse_config("[geometry]\nr1 = 0x1\nr2 = 2\n").is_err());
    }

    #[test]
    fn inconsistent_outer_radius() {
        let e = parse_config("[geometry]\nr1 = 1\nr2 = 2\nr3 = 5\n").unwrap_err();
        assert!(e.message.contains("r3 = r2^2/r1"));
    }

    #[test]
    fn hash_ignores_layout() {
        let a = Document::parse("[geometry]\nr1 = 1\nr2 = 2\n").unwrap();
        let b = Document::parse("# c\n[geometry]\n  r2 = 2 # x\nr1=1\n").unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}
