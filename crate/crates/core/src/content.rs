//! Content-addressed blob storage.
//!
//! Every snippet payload is stored under the SHA-256 digest of its raw bytes.
//! On disk, blobs live at `<root>/<hh>/<hh>/<64 hex digits>`, written to a
//! temporary file first and renamed into place.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const PREFIX: &str = "sha256:";

/// SHA-256 digest of a blob; text form `sha256:<64 lowercase hex>`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint([u8; 32]);

impl Fingerprint {
    pub fn of(bytes: &[u8]) -> Self {
        Fingerprint(Sha256::digest(bytes).into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{PREFIX}{}", self.hex())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}

impl FromStr for Fingerprint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidFingerprint(s.to_owned());
        let digits = s.strip_prefix(PREFIX).ok_or_else(bad)?;
        if digits.len() != 64 || digits.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(bad());
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(digits, &mut out).map_err(|_| bad())?;
        Ok(Fingerprint(out))
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True iff `bytes` hash to `fp`.
pub fn verify(fp: &Fingerprint, bytes: &[u8]) -> bool {
    Fingerprint::of(bytes) == *fp
}

enum Backend {
    Memory(RwLock<HashMap<Fingerprint, Arc<[u8]>>>),
    Disk { root: PathBuf, tmp: PathBuf },
}

pub struct ContentStore {
    backend: Backend,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ContentStore {
    pub fn in_memory() -> Self {
        ContentStore {
            backend: Backend::Memory(RwLock::new(HashMap::new())),
        }
    }

    /// Opens (creating if needed) a blob directory.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let tmp = root.join("tmp");
        fs::create_dir_all(&tmp)?;
        Ok(ContentStore {
            backend: Backend::Disk { root, tmp },
        })
    }

    /// Path a blob with this fingerprint occupies, for disk-backed stores.
    pub fn blob_path(&self, fp: &Fingerprint) -> Option<PathBuf> {
        match &self.backend {
            Backend::Memory(_) => None,
            Backend::Disk { root, .. } => Some(disk_path(root, fp)),
        }
    }

    pub fn put(&self, bytes: &[u8]) -> Result<Fingerprint> {
        let fp = Fingerprint::of(bytes);
        match &self.backend {
            Backend::Memory(map) => {
                map.write().entry(fp).or_insert_with(|| Arc::from(bytes));
            }
            Backend::Disk { root, tmp } => {
                let dest = disk_path(root, &fp);
                if dest.is_file() {
                    return Ok(fp);
                }
                fs::create_dir_all(dest.parent().expect("blob path has parent"))?;
                let tmp_path = tmp.join(format!(
                    "{}-{}-{}",
                    fp.hex(),
                    std::process::id(),
                    TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
                ));
                let mut f = fs::File::create(&tmp_path)?;
                f.write_all(bytes)?;
                f.sync_all()?;
                drop(f);
                fs::rename(&tmp_path, &dest)?;
            }
        }
        Ok(fp)
    }

    /// Returns the stored bytes verbatim.
    pub fn get(&self, fp: &Fingerprint) -> Result<Vec<u8>> {
        match &self.backend {
            Backend::Memory(map) => map
                .read()
                .get(fp)
                .map(|b| b.to_vec())
                .ok_or(Error::NotFound(*fp)),
            Backend::Disk { root, .. } => match fs::read(disk_path(root, fp)) {
                Ok(bytes) => Ok(bytes),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Err(Error::NotFound(*fp)),
                Err(e) => Err(e.into()),
            },
        }
    }

    pub fn contains(&self, fp: &Fingerprint) -> bool {
        match &self.backend {
            Backend::Memory(map) => map.read().contains_key(fp),
            Backend::Disk { root, .. } => disk_path(root, fp).is_file(),
        }
    }

    /// Number of distinct blobs held.
    pub fn len(&self) -> Result<usize> {
        match &self.backend {
            Backend::Memory(map) => Ok(map.read().len()),
            Backend::Disk { root, .. } => {
                let mut n = 0;
                for a in fs::read_dir(root)? {
                    let a = a?;
                    if a.file_name() == "tmp" || !a.file_type()?.is_dir() {
                        continue;
                    }
                    for b in fs::read_dir(a.path())? {
                        n += fs::read_dir(b?.path())?.count();
                    }
                }
                Ok(n)
            }
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        self.len().map(|n| n == 0)
    }
}

fn disk_path(root: &Path, fp: &Fingerprint) -> PathBuf {
    let hex = fp.hex();
    root.join(&hex[0..2]).join(&hex[2..4]).join(hex)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Digests computed with `sha256sum` and frozen here.
    const EMPTY: &str = "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
    const HELLO: &str = "sha256:2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824";

    #[test]
    fn known_digests() {
        assert_eq!(Fingerprint::of(b"").to_string(), EMPTY);
        assert_eq!(Fingerprint::of(b"hello").to_string(), HELLO);
    }

    #[test]
    fn fingerprint_text_form_round_trips() {
        let fp: Fingerprint = HELLO.parse().unwrap();
        assert_eq!(fp, Fingerprint::of(b"hello"));
        assert!(HELLO.to_uppercase().parse::<Fingerprint>().is_err());
        assert!("sha256:abc".parse::<Fingerprint>().is_err());
        assert!(HELLO.trim_start_matches("sha256:").parse::<Fingerprint>().is_err());
    }

    fn both_backends() -> Vec<(ContentStore, Option<tempfile::TempDir>)> {
        let dir = tempfile::tempdir().unwrap();
        vec![
            (ContentStore::in_memory(), None),
            (ContentStore::open(dir.path()).unwrap(), Some(dir)),
        ]
    }

    #[test]
    fn put_is_idempotent_and_get_round_trips() {
        for (store, _dir) in both_backends() {
            let fp = store.put(b"").unwrap();
            assert_eq!(fp.to_string(), EMPTY);
            assert_eq!(store.get(&fp).unwrap(), b"");

            let a = store.put(b"snippet").unwrap();
            let b = store.put(b"snippet").unwrap();
            assert_eq!(a, b);
            assert_eq!(store.len().unwrap(), 2);
            assert!(store.contains(&a));
        }
    }

    #[test]
    fn missing_blob_is_not_found() {
        for (store, _dir) in both_backends() {
            let fp = Fingerprint::of(b"never stored");
            assert!(matches!(store.get(&fp), Err(Error::NotFound(f)) if f == fp));
        }
    }

    #[test]
    fn disk_layout_fans_out_by_digest() {
        let dir = tempfile::tempdir().unwrap();
        let store = ContentStore::open(dir.path()).unwrap();
        let fp = store.put(b"hello").unwrap();
        let expected = dir
            .path()
            .join("2c")
            .join("f2")
            .join("2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824");
        assert_eq!(store.blob_path(&fp).unwrap(), expected);
        assert_eq!(fs::read(expected).unwrap(), b"hello");
    }

    #[test]
    fn concurrent_puts_of_same_content() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(ContentStore::open(dir.path()).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let store = store.clone();
                std::thread::spawn(move || store.put(&[42u8; 4096]).unwrap())
            })
            .collect();
        let fps: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(fps.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(store.len().unwrap(), 1);
        assert_eq!(store.get(&fps[0]).unwrap(), vec![42u8; 4096]);
    }

    proptest! {
        #[test]
        fn distinct_bytes_distinct_fingerprints(a in proptest::collection::vec(any::<u8>(), 0..256),
                                                 b in proptest::collection::vec(any::<u8>(), 0..256)) {
            prop_assume!(a != b);
            prop_assert_ne!(Fingerprint::of(&a), Fingerprint::of(&b));
        }

        #[test]
        fn single_bit_flip_fails_verification(bytes in proptest::collection::vec(any::<u8>(), 1..512),
                                              pos in any::<proptest::sample::Index>(),
                                              bit in 0u8..8) {
            let store = ContentStore::in_memory();
            let fp = store.put(&bytes).unwrap();
            prop_assert!(verify(&fp, &bytes));
            let mut tampered = bytes.clone();
            tampered[pos.index(bytes.len())] ^= 1 << bit;
            prop_assert!(!verify(&fp, &tampered));
        }
    }
}
