//! Content-addressed artifact cache. Each entry is one file: a line with the
//! sha256 of the body, then the body.

use crate::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct Cache {
    dir: PathBuf,
}

#[derive(Debug, PartialEq)]
pub enum Lookup {
    Hit(Vec<u8>),
    Miss,
    Corrupt(Error),
}

/// Hash of the canonical JSON of `key`. `serde_json` maps are sorted so the
/// encoding does not depend on insertion order.
pub fn cache_key<T: Serialize>(key: &T) -> String {
    let v = serde_json::to_value(key).expect("cache key serializes");
    hex::encode(Sha256::digest(serde_json::to_vec(&v).unwrap()))
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.art"))
    }

    pub fn get(&self, key: &str) -> Lookup {
        let raw = match std::fs::read(self.path(key)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return Lookup::Corrupt(Error::CacheCorrupt(e.to_string())),
        };
        match split(&raw) {
            Some((sum, body)) if hex::encode(Sha256::digest(body)) == sum => Lookup::Hit(body.to_vec()),
            _ => Lookup::Corrupt(Error::CacheCorrupt(format!("checksum mismatch in {}", self.path(key).display()))),
        }
    }

    /// Write to a temporary file in the same directory, then rename.
    pub fn put(&self, key: &str, body: &[u8]) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let tmp = self.dir.join(format!(".{key}.{}.tmp", std::process::id()));
        {
            let mut f = std::fs::File::create(&tmp)?;
            writeln!(f, "{}", hex::encode(Sha256::digest(body)))?;
            f.write_all(body)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, self.path(key))?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

fn split(raw: &[u8]) -> Option<(&str, &[u8])> {
    let nl = raw.iter().position(|&b| b == b'\n')?;
    Some((std::str::from_utf8(&raw[..nl]).ok()?, &raw[nl + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::new(d.path());
        let k = cache_key(&serde_json::json!({"b": 1, "a": [1, 2]}));
        assert_eq!(c.get(&k), Lookup::Miss);
        c.put(&k, b"hello\nworld").unwrap();
        assert_eq!(c.get(&k), Lookup::Hit(b"hello\nworld".to_vec()));
        let raw = std::fs::read(c.path(&k)).unwrap();
        std::fs::write(c.path(&k), &raw[..raw.len() - 3]).unwrap();
        assert!(matches!(c.get(&k), Lookup::Corrupt(Error::CacheCorrupt(_))));
        c.put(&k, b"again").unwrap();
        assert_eq!(c.get(&k), Lookup::Hit(b"again".to_vec()));
    }

    #[test]
    fn key_ignores_field_order() {
        let a = cache_key(&serde_json::json!({"x": 1, "y": 2}));
        let b = cache_key(&serde_json::from_str::<serde_json::Value>(r#"{"y": 2, "x": 1}"#).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, cache_key(&serde_json::json!({"x": 1, "y": 3})));
    }
}
