//! Versioned on-disk library.
//!
//! Layout under the root directory:
//!
//! ```text
//! manifest.json                      catalog, the single source of truth
//! <kind>/<name>/<version>.payload    payload bytes
//! .lock                              advisory writer lock
//! ```
//!
//! A store writes and syncs the payload first and replaces the manifest
//! last (write to a temporary file, sync, rename). A writer that dies in
//! between leaves an unreferenced payload file and the previous manifest;
//! the next store of that name reuses the version number.
//!
//! ```
//! use mfgsim_library::{Kind, Library};
//!
//! let dir = tempfile::tempdir().unwrap();
//! let lib = Library::open(dir.path()).unwrap();
//! let a = lib.store(Kind::Model, "pilot", b"model pilot in mfg {}\n").unwrap();
//! let b = lib.store(Kind::Model, "pilot", b"model pilot in mfg {}\n").unwrap();
//! assert_eq!((a.version, b.version), (1, 1));
//! let c = lib.store(Kind::Model, "pilot", b"model pilot in mfg2 {}\n").unwrap();
//! assert_eq!(c.version, 2);
//! assert_eq!(lib.load(Kind::Model, "pilot", Some(1)).unwrap().payload, b"model pilot in mfg {}\n");
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable naming a crash point, for crash-ordering tests.
/// `after-payload` aborts once the payload is durable but before the
/// manifest is touched; `before-manifest-rename` aborts with the new
/// manifest written to its temporary file only.
pub const FAILPOINT_ENV: &str = "MFGSIM_LIB_FAILPOINT";

const MANIFEST: &str = "manifest.json";
const MANIFEST_TMP: &str = "manifest.json.tmp";
const LOCK: &str = ".lock";
const SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("no {kind} `{name}`{}", version.map(|v| format!(" version {v}")).unwrap_or_default())]
    NotFound {
        kind: Kind,
        name: String,
        version: Option<u32>,
    },
    #[error("{kind} `{name}` version {version}: payload hash {found} does not match manifest hash {expected}")]
    HashMismatch {
        kind: Kind,
        name: String,
        version: u32,
        expected: String,
        found: String,
    },
    #[error("invalid item name `{0}`")]
    InvalidName(String),
    #[error("unknown item kind `{0}`")]
    UnknownKind(String),
}

type Result<T> = std::result::Result<T, LibraryError>;

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> LibraryError + '_ {
    move |source| LibraryError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    PrimitiveSet,
    Conceptualization,
    Model,
    Result,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::PrimitiveSet, Kind::Conceptualization, Kind::Model, Kind::Result];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::PrimitiveSet => "primitive-set",
            Kind::Conceptualization => "conceptualization",
            Kind::Model => "model",
            Kind::Result => "result",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = LibraryError;

    fn from_str(s: &str) -> Result<Kind> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| LibraryError::UnknownKind(s.to_string()))
    }
}

/// A manifest entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub kind: Kind,
    pub name: String,
    pub version: u32,
    /// Hex SHA-256 of the payload bytes.
    pub content_hash: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

impl ItemMeta {
    fn key(&self) -> (Kind, &str, u32) {
        (self.kind, &self.name, self.version)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibraryItem {
    pub meta: ItemMeta,
    pub payload: Vec<u8>,
}

impl std::ops::Deref for LibraryItem {
    type Target = ItemMeta;

    fn deref(&self) -> &ItemMeta {
        &self.meta
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    schema: u32,
    items: Vec<ItemMeta>,
}

impl Manifest {
    fn check(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(LibraryError::CorruptManifest(format!(
                "unsupported schema {}",
                self.schema
            )));
        }
        let mut seen: BTreeMap<(Kind, &str), u32> = BTreeMap::new();
        for it in &self.items {
            let last = seen.entry((it.kind, &it.name)).or_insert(0);
            if it.version != *last + 1 {
                return Err(LibraryError::CorruptManifest(format!(
                    "{} `{}` jumps from version {} to {}",
                    it.kind, it.name, last, it.version
                )));
            }
            *last = it.version;
        }
        Ok(())
    }

    fn latest(&self, kind: Kind, name: &str) -> Option<&ItemMeta> {
        self.items
            .iter()
            .filter(|i| i.kind == kind && i.name == name)
            .max_by_key(|i| i.version)
    }
}

pub fn content_hash(payload: &[u8]) -> String {
    hex::encode(Sha256::digest(payload))
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn failpoint(name: &str) {
    if !name.is_empty() && std::env::var(FAILPOINT_ENV).as_deref() == Ok(name) {
        std::process::abort();
    }
}

/// Writes `bytes` to `path` through a synced temporary file and a rename.
fn write_durable(path: &Path, tmp: &Path, bytes: &[u8], before_rename: &str) -> Result<()> {
    let mut f = File::create(tmp).map_err(io(tmp))?;
    f.write_all(bytes).map_err(io(tmp))?;
    f.sync_all().map_err(io(tmp))?;
    drop(f);
    failpoint(before_rename);
    fs::rename(tmp, path).map_err(io(path))?;
    let dir = path.parent().expect("library paths have a parent");
    File::open(dir).and_then(|d| d.sync_all()).map_err(io(dir))
}

#[derive(Debug, Clone)]
pub struct Library {
    root: PathBuf,
}

impl Library {
    /// Opens (creating if needed) a library rooted at `root`.
    pub fn open(root: impl AsRef<Path>) -> Result<Library> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(io(&root))?;
        Ok(Library { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn payload_path(&self, kind: Kind, name: &str, version: u32) -> PathBuf {
        self.root
            .join(kind.as_str())
            .join(name)
            .join(format!("{version}.payload"))
    }

    fn read_manifest(&self) -> Result<Manifest> {
        let path = self.root.join(MANIFEST);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Ok(Manifest {
                    schema: SCHEMA,
                    items: Vec::new(),
                })
            }
            Err(e) => return Err(io(&path)(e)),
        };
        let m: Manifest = serde_json::from_str(&text).map_err(|e| LibraryError::CorruptManifest(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    /// Stores a new version of `name`, or returns the latest version when
    /// its payload is byte-identical.
    pub fn store(&self, kind: Kind, name: &str, payload: &[u8]) -> Result<LibraryItem> {
        if !valid_name(name) {
            return Err(LibraryError::InvalidName(name.to_string()));
        }
        let lock_path = self.root.join(LOCK);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io(&lock_path))?;
        // Released when `lock` is dropped or the process dies.
        lock.lock().map_err(io(&lock_path))?;

        let mut manifest = self.read_manifest()?;
        let hash = content_hash(payload);
        let latest = manifest.latest(kind, name);
        if let Some(meta) = latest.filter(|m| m.content_hash == hash) {
            return Ok(LibraryItem {
                meta: meta.clone(),
                payload: payload.to_vec(),
            });
        }
        let version = latest.map_or(1, |m| m.version + 1);
        let path = self.payload_path(kind, name, version);
        let dir = path.parent().expect("payload path has a parent");
        fs::create_dir_all(dir).map_err(io(dir))?;
        write_durable(&path, &dir.join(format!("{version}.payload.tmp")), payload, "")?;
        failpoint("after-payload");

        let meta = ItemMeta {
            kind,
            name: name.to_string(),
            version,
            content_hash: hash,
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        manifest.items.push(meta.clone());
        manifest.items.sort_by(|a, b| a.key().cmp(&b.key()));
        let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        write_durable(
            &self.root.join(MANIFEST),
            &self.root.join(MANIFEST_TMP),
            &bytes,
            "before-manifest-rename",
        )?;
        Ok(LibraryItem {
            meta,
            payload: payload.to_vec(),
        })
    }

    /// Loads a version (the latest when `None`), re-checking the payload hash.
    pub fn load(&self, kind: Kind, name: &str, version: Option<u32>) -> Result<LibraryItem> {
        let manifest = self.read_manifest()?;
        let meta = match version {
            Some(v) => manifest
                .items
                .iter()
                .find(|i| i.kind == kind && i.name == name && i.version == v),
            None => manifest.latest(kind, name),
        }
        .ok_or_else(|| LibraryError::NotFound {
            kind,
            name: name.to_string(),
            version,
        })?
        .clone();
        let path = self.payload_path(kind, name, meta.version);
        let payload = fs::read(&path).map_err(io(&path))?;
        let found = content_hash(&payload);
        if found != meta.content_hash {
            return Err(LibraryError::HashMismatch {
                kind,
                name: name.to_string(),
                version: meta.version,
                expected: meta.content_hash,
                found,
            });
        }
        Ok(LibraryItem { meta, payload })
    }

    /// Catalog entries ordered by (kind, name, version).
    pub fn list(&self, kind: Option<Kind>) -> Result<Vec<ItemMeta>> {
        let mut items: Vec<ItemMeta> = self
            .read_manifest()?
            .items
            .into_iter()
            .filter(|i| kind.is_none_or(|k| i.kind == k))
            .collect();
        items.sort_by(|a, b| a.key().cmp(&b.key()));
        Ok(items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lib() -> (tempfile::TempDir, Library) {
        let dir = tempfile::tempdir().unwrap();
        let lib = Library::open(dir.path()).unwrap();
        (dir, lib)
    }

    #[test]
    fn empty_root_lists_nothing() {
        let (_d, lib) = lib();
        assert!(lib.list(None).unwrap().is_empty());
        assert!(matches!(
            lib.load(Kind::Model, "pilot", None),
            Err(LibraryError::NotFound { version: None, .. })
        ));
    }

    #[test]
    fn latest_after_three_stores() {
        let (_d, lib) = lib();
        for i in 0..3 {
            lib.store(Kind::Model, "pilot", format!("v{i}").as_bytes()).unwrap();
        }
        assert_eq!(lib.load(Kind::Model, "pilot", None).unwrap().version, 3);
        assert_eq!(lib.load(Kind::Model, "pilot", Some(2)).unwrap().payload, b"v1");
        assert!(matches!(
            lib.load(Kind::Model, "pilot", Some(4)),
            Err(LibraryError::NotFound { version: Some(4), .. })
        ));
    }

    #[test]
    fn dedup_compares_with_latest_only() {
        let (_d, lib) = lib();
        lib.store(Kind::Model, "m", b"a").unwrap();
        lib.store(Kind::Model, "m", b"b").unwrap();
        assert_eq!(lib.store(Kind::Model, "m", b"a").unwrap().version, 3);
        assert_eq!(lib.store(Kind::Model, "m", b"a").unwrap().version, 3);
    }

    #[test]
    fn list_filters_and_orders() {
        let (_d, lib) = lib();
        lib.store(Kind::Result, "pilot-seed42", b"r").unwrap();
        lib.store(Kind::Model, "zeta", b"z").unwrap();
        lib.store(Kind::Model, "alpha", b"a").unwrap();
        let names: Vec<_> = lib.list(None).unwrap().into_iter().map(|i| (i.kind, i.name)).collect();
        assert_eq!(
            names,
            vec![
                (Kind::Model, "alpha".to_string()),
                (Kind::Model, "zeta".to_string()),
                (Kind::Result, "pilot-seed42".to_string())
            ]
        );
        assert_eq!(lib.list(Some(Kind::Result)).unwrap().len(), 1);
        assert!(lib.list(Some(Kind::PrimitiveSet)).unwrap().is_empty());
    }

    #[test]
    fn tampered_payload_is_detected() {
        let (dir, lib) = lib();
        lib.store(Kind::Model, "pilot", b"original").unwrap();
        fs::write(dir.path().join("model/pilot/1.payload"), b"tampered").unwrap();
        assert!(matches!(
            lib.load(Kind::Model, "pilot", None),
            Err(LibraryError::HashMismatch { version: 1, .. })
        ));
    }

    #[test]
    fn corrupt_manifest_is_reported() {
        let (dir, lib) = lib();
        fs::write(dir.path().join(MANIFEST), "{not json").unwrap();
        assert!(matches!(lib.list(None), Err(LibraryError::CorruptManifest(_))));
        let gap =
            r#"{"schema":1,"items":[{"kind":"model","name":"m","version":2,"content_hash":"00","created_at":0}]}"#;
        fs::write(dir.path().join(MANIFEST), gap).unwrap();
        assert!(matches!(lib.list(None), Err(LibraryError::CorruptManifest(_))));
    }

    #[test]
    fn names_cannot_escape_the_root() {
        let (_d, lib) = lib();
        for bad in ["", "../x", "a/b", ".hidden"] {
            assert!(matches!(
                lib.store(Kind::Model, bad, b"x"),
                Err(LibraryError::InvalidName(_))
            ));
        }
    }

    #[test]
    fn kinds_parse_and_print() {
        for k in Kind::ALL {
            assert_eq!(k.as_str().parse::<Kind>().unwrap(), k);
        }
        assert!("widget".parse::<Kind>().is_err());
    }
}
