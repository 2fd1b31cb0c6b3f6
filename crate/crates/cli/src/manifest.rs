//! Record of one run and the files it wrote.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Scenario, input hashes, tool version, timestamps and outputs of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub scenario: String,
    pub subcommand: String,
    pub config_hash: String,
    pub mesh_hash: Option<String>,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub outputs: Vec<String>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn start(scenario: &str, subcommand: &str, config_hash: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            subcommand: subcommand.to_string(),
            config_hash: config_hash.to_string(),
            mesh_hash: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: now(),
            finished_unix: None,
            outputs: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let q = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));
        let mut s = String::from("{\n");
        let _ = writeln!(s, "  \"scenario\": {},", q(&self.scenario));
        let _ = writeln!(s, "  \"subcommand\": {},", q(&self.subcommand));
        let _ = writeln!(s, "  \"config_hash\": {},", q(&self.config_hash));
        let _ = writeln!(s, "  \"mesh_hash\": {},", self.mesh_hash.as_deref().map_or("null".into(), q));
        let _ = writeln!(s, "  \"tool_version\": {},", q(&self.tool_version));
        let _ = writeln!(s, "  \"started_unix\": {},", self.started_unix);
        let _ = writeln!(s, "  \"finished_unix\": {},", self.finished_unix.map_or("null".into(), |t| t.to_string()));
        let files: Vec<String> = self.outputs.iter().map(|f| q(f)).collect();
        let _ = writeln!(s, "  \"outputs\": [{}]", files.join(", "));
        s.push_str("}\n");
        s
    }
}

/// Output directory that records every file it writes in a manifest.
pub struct OutputSet {
    dir: PathBuf,
    prefix: String,
    pub manifest: RunManifest,
}

impl OutputSet {
    pub fn new(dir: &Path, prefix: &str, manifest: RunManifest) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), prefix: prefix.to_string(), manifest })
    }

    /// Write `<prefix>_<name>` and list it.
    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<PathBuf> {
        let file = format!("{}_{name}", self.prefix);
        let path = self.dir.join(&file);
        fs::write(&path, contents)?;
        if !self.manifest.outputs.contains(&file) {
            self.manifest.outputs.push(file);
        }
        Ok(path)
    }

    /// Write `<prefix>_<subcommand>_manifest.txt`; it lists the other
    /// outputs only.
    pub fn finish(mut self) -> io::Result<PathBuf> {
        self.manifest.finished_unix = Some(now());
        let path = self.dir.join(format!("{}_{}_manifest.txt", self.prefix, self.manifest.subcommand));
        fs::write(&path, self.manifest.render())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outputs_are_listed_once() {
        let dir = std::env::temp_dir().join(format!("alr-manifest-{}", std::process::id()));
        let mut out = OutputSet::new(&dir, "t", RunManifest::start("QUASISTATIC_CLOAK", "mesh", "abc")).unwrap();
        out.write("a.csv", "x\n").unwrap();
        out.write("a.csv", "y\n").unwrap();
        out.write("b.vtk", "z\n").unwrap();
        let m = out.finish().unwrap();
        assert!(m.ends_with("t_mesh_manifest.txt"));
        let text = fs::read_to_string(m).unwrap();
        assert!(text.contains("\"outputs\": [\"t_a.csv\", \"t_b.vtk\"]"), "{text}");
        assert_eq!(fs::read_to_string(dir.join("t_a.csv")).unwrap(), "y\n");
        fs::remove_dir_all(dir).unwrap();
    }
}
