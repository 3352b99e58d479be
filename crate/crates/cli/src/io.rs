//! Reading inputs and writing artifacts with provenance sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use modasm_core::graph::GraphDocument;
use modasm_core::{AngleVector, AssemblyGraph, LatticeConfig, ModuleParams, SelectionOutcome};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "modasm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

/// Every non-blank line parsed as one record.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: format!("line {}: {e}", i + 1) })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("artifact types serialize"));
        out.push('\n');
    }
    out
}

pub fn read_configs(path: &Path) -> CliResult<Vec<LatticeConfig>> {
    read_jsonl(path)
}

/// All `*.jsonl` files of a directory, grouped by module count.
pub fn read_config_dir(dir: &Path) -> CliResult<Vec<Vec<LatticeConfig>>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files: Vec<PathBuf> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "jsonl")).collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Invalid(format!("no .jsonl configuration files in {}", dir.display())));
    }
    let mut by_n: BTreeMap<usize, Vec<LatticeConfig>> = BTreeMap::new();
    for f in &files {
        for c in read_configs(f)? {
            by_n.entry(c.n()).or_default().push(c);
        }
    }
    Ok(by_n.into_values().collect())
}

pub fn load_params(path: Option<&Path>) -> CliResult<ModuleParams> {
    let p = match path {
        Some(path) => read_json(path)?,
        None => ModuleParams::default(),
    };
    p.validate()?;
    Ok(p)
}

/// Graph and optimized angles from either a selection outcome or a graph document.
pub fn load_assembly(path: &Path) -> CliResult<(AssemblyGraph, AngleVector)> {
    let text = read_text(path)?;
    if let Ok(outcome) = serde_json::from_str::<SelectionOutcome>(&text) {
        let graph = outcome.graph.ok_or_else(|| CliError::Invalid(format!("{} records no feasible selection", path.display())))?;
        let alpha = outcome.best.expect("a selected graph has a result").alpha;
        return Ok((graph, alpha));
    }
    let doc: GraphDocument =
        serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    let graph = doc.graph()?;
    let alpha = doc.angles().ok_or_else(|| CliError::Invalid(format!("{} has no angles; optimize it first", path.display())))?;
    alpha.check(&graph)?;
    Ok((graph, alpha))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| CliError::io(path, e))?))
}

/// What produced an artifact. Written next to it as `<file>.prov.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub stage: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Input label to SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub settings: serde_json::Value,
    #[serde(default)]
    pub output_sha256: String,
}

impl Provenance {
    pub fn new(stage: &str, seed: Option<u64>, settings: serde_json::Value) -> Self {
        Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            stage: stage.into(),
            seed,
            inputs: BTreeMap::new(),
            settings,
            output_sha256: String::new(),
        }
    }

    /// Records the hash of an input file under `label`.
    pub fn input(mut self, label: &str, path: &Path) -> CliResult<Self> {
        self.inputs.insert(label.into(), sha256_file(path)?);
        Ok(self)
    }

    pub fn input_bytes(mut self, label: &str, bytes: &[u8]) -> Self {
        self.inputs.insert(label.into(), sha256_hex(bytes));
        self
    }
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".prov.json");
    artifact.with_file_name(name)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Writes the artifact and its provenance sidecar.
pub fn write_artifact(path: &Path, contents: &[u8], mut prov: Provenance) -> CliResult<Provenance> {
    prov.output_sha256 = sha256_hex(contents);
    write_file(path, contents)?;
    write_file(&sidecar_path(path), to_json_string(&prov).as_bytes())?;
    Ok(prov)
}

/// Whether `path` was produced from exactly the inputs and settings in
/// `expected` and has not been modified since.
pub fn is_current(path: &Path, expected: &Provenance) -> bool {
    let Ok(recorded) = read_json::<Provenance>(&sidecar_path(path)) else {
        return false;
    };
    let Ok(actual) = sha256_file(path) else {
        return false;
    };
    let same_recipe = Provenance { output_sha256: String::new(), ..recorded.clone() } == *expected;
    same_recipe && recorded.output_sha256 == actual
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn sidecar_sits_next_to_artifact() {
        assert_eq!(sidecar_path(Path::new("out/log.csv")), PathBuf::from("out/log.csv.prov.json"));
    }

    #[test]
    fn is_current_tracks_recipe_and_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/a.txt");
        let prov = || Provenance::new("demo", Some(1), json!({ "k": 2 })).input_bytes("x", b"abc");
        assert!(!is_current(&path, &prov()));
        write_artifact(&path, b"hello\n", prov()).unwrap();
        assert!(is_current(&path, &prov()));
        assert!(!is_current(&path, &Provenance::new("demo", Some(2), json!({ "k": 2 })).input_bytes("x", b"abc")));
        assert!(!is_current(&path, &prov().input_bytes("x", b"abd")));
        std::fs::write(&path, b"changed\n").unwrap();
        assert!(!is_current(&path, &prov()));
    }

    #[test]
    fn jsonl_skips_blank_lines_and_reports_bad_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.jsonl");
        std::fs::write(&path, "1\n\n2\n").unwrap();
        assert_eq!(read_jsonl::<u32>(&path).unwrap(), vec![1, 2]);
        std::fs::write(&path, "1\nnope\n").unwrap();
        assert_eq!(read_jsonl::<u32>(&path).unwrap_err().kind(), "Parse");
    }

    #[test]
    fn missing_input_is_missing_file() {
        let err = Provenance::new("demo", None, json!({})).input("x", Path::new("/no/such/file")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
