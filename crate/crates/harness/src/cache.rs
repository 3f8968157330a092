//! On-disk cache of run artifacts keyed by config hash.
//!
//! Layout: `<root>/<hash>/entry.json` plus `<root>/<hash>/files/<name>`.
//! Writers take an exclusive lock on `<root>/.lock`, readers a shared one.

use crate::config::RunConfig;
use crate::experiments::{cell_config, run_experiment, sweep_cells, Artifacts};
use crate::{sha256_hex, HarnessError};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryInfo {
    pub hash: String,
    pub kind: String,
    /// Nanoseconds since the Unix epoch.
    pub created: u128,
    pub config: String,
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub hash: Option<String>,
    /// Recomputed row of a sweep, or `None` when the whole run was recomputed.
    pub cell: Option<usize>,
    pub matched: bool,
}

pub struct Cache {
    root: PathBuf,
}

fn io(e: std::io::Error, what: &Path) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", what.display()))
}

impl Cache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, HarnessError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io(e, &root))?;
        Ok(Cache { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn lock(&self, exclusive: bool) -> Result<File, HarnessError> {
        let p = self.root.join(".lock");
        let f = File::options()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&p)
            .map_err(|e| io(e, &p))?;
        if exclusive { f.lock() } else { f.lock_shared() }.map_err(|e| io(e, &p))?;
        Ok(f)
    }

    fn read_entry(&self, hash: &str) -> Result<Option<EntryInfo>, HarnessError> {
        let p = self.root.join(hash).join("entry.json");
        match fs::read(&p) {
            Ok(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| HarnessError::Cache(format!("entry {hash}: unreadable index: {e}"))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io(e, &p)),
        }
    }

    fn read_files(&self, entry: &EntryInfo) -> Result<Artifacts, HarnessError> {
        let dir = self.root.join(&entry.hash).join("files");
        let mut files = BTreeMap::new();
        for (name, digest) in &entry.files {
            let p = dir.join(name);
            let bytes = fs::read(&p).map_err(|e| HarnessError::Cache(format!("entry {}: {name}: {e}", entry.hash)))?;
            if &sha256_hex(&bytes) != digest {
                return Err(HarnessError::Cache(format!("entry {}: digest mismatch in {name}", entry.hash)));
            }
            files.insert(name.clone(), bytes);
        }
        Ok(Artifacts { files })
    }

    /// Cached artifacts for `cfg`, checked against their digests.
    pub fn load(&self, cfg: &RunConfig) -> Result<Option<Artifacts>, HarnessError> {
        let _guard = self.lock(false)?;
        let hash = cfg.hash();
        let Some(entry) = self.read_entry(&hash)? else {
            return Ok(None);
        };
        if entry.config != cfg.canonical_json() {
            return Err(HarnessError::Cache(format!("entry {hash}: stored config differs")));
        }
        self.read_files(&entry).map(Some)
    }

    pub fn store(&self, cfg: &RunConfig, art: &Artifacts) -> Result<(), HarnessError> {
        let _guard = self.lock(true)?;
        let hash = cfg.hash();
        let tmp = self.root.join(format!(".tmp-{hash}"));
        let _ = fs::remove_dir_all(&tmp);
        let files_dir = tmp.join("files");
        fs::create_dir_all(&files_dir).map_err(|e| io(e, &files_dir))?;
        let mut digests = BTreeMap::new();
        for (name, bytes) in &art.files {
            let p = files_dir.join(name);
            fs::write(&p, bytes).map_err(|e| io(e, &p))?;
            digests.insert(name.clone(), sha256_hex(bytes));
        }
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0);
        let entry = EntryInfo {
            hash: hash.clone(),
            kind: cfg.kind().to_string(),
            created,
            config: cfg.canonical_json(),
            files: digests,
        };
        let p = tmp.join("entry.json");
        fs::write(&p, serde_json::to_vec_pretty(&entry).expect("entries serialize")).map_err(|e| io(e, &p))?;
        let dest = self.root.join(&hash);
        let _ = fs::remove_dir_all(&dest);
        fs::rename(&tmp, &dest).map_err(|e| io(e, &dest))?;
        Ok(())
    }

    /// Entries sorted by creation time.
    pub fn list(&self) -> Result<Vec<EntryInfo>, HarnessError> {
        let _guard = self.lock(false)?;
        let mut out = Vec::new();
        for d in fs::read_dir(&self.root).map_err(|e| io(e, &self.root))? {
            let d = d.map_err(|e| io(e, &self.root))?;
            let name = d.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') || !d.path().is_dir() {
                continue;
            }
            if let Some(e) = self.read_entry(&name)? {
                out.push(e);
            }
        }
        out.sort_by(|a, b| a.created.cmp(&b.created).then_with(|| a.hash.cmp(&b.hash)));
        Ok(out)
    }

    /// Removes every entry; returns how many there were.
    pub fn clear(&self) -> Result<usize, HarnessError> {
        let n = self.list()?.len();
        let _guard = self.lock(true)?;
        for d in fs::read_dir(&self.root).map_err(|e| io(e, &self.root))? {
            let p = d.map_err(|e| io(e, &self.root))?.path();
            if p.is_dir() {
                fs::remove_dir_all(&p).map_err(|e| io(e, &p))?;
            }
        }
        Ok(n)
    }

    /// Picks a random entry, checks its digests and recomputes one random
    /// row of it (the whole run for kinds without β rows).
    pub fn verify(&self, rng: &mut impl Rng) -> Result<VerifyReport, HarnessError> {
        let entries = self.list()?;
        if entries.is_empty() {
            return Ok(VerifyReport {
                hash: None,
                cell: None,
                matched: true,
            });
        }
        let entry = &entries[rng.gen_range(0..entries.len())];
        let cached = {
            let _guard = self.lock(false)?;
            self.read_files(entry)?
        };
        let cfg = RunConfig::from_json(&entry.config)
            .map_err(|e| HarnessError::Cache(format!("entry {}: {e}", entry.hash)))?;
        let mismatch = |what: String| HarnessError::Cache(format!("entry {}: recomputed {what} differs", entry.hash));
        if let Some((file, spec)) = sweep_cells(&cfg) {
            let n = spec.values()?.len();
            let i = rng.gen_range(0..n);
            let one = cell_config(&cfg, i)?.expect("sweep kinds have cells");
            let fresh = run_experiment(&one)?;
            let row = |a: &Artifacts, k: usize| -> Option<String> {
                let text = String::from_utf8_lossy(a.files.get(file)?).into_owned();
                text.lines().nth(k + 1).map(str::to_owned)
            };
            if row(&cached, i).is_none() || row(&cached, i) != row(&fresh, 0) {
                return Err(mismatch(format!("row {i} of {file}")));
            }
            return Ok(VerifyReport {
                hash: Some(entry.hash.clone()),
                cell: Some(i),
                matched: true,
            });
        }
        let fresh = run_experiment(&cfg)?;
        for (name, bytes) in &fresh.files {
            if name.ends_with(".csv") && cached.files.get(name) != Some(bytes) {
                return Err(mismatch(name.clone()));
            }
        }
        Ok(VerifyReport {
            hash: Some(entry.hash.clone()),
            cell: None,
            matched: true,
        })
    }
}
