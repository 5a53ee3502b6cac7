//! Append-only JSON-lines tables, one per record kind.
//!
//! Every line carries a store-wide revision number; replay merges all tables
//! in revision order. A torn final line (no trailing newline) is truncated away.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::access::{RightsSpec, User};
use crate::error::{Error, Result};
use crate::id::EntityId;
use crate::model::Entity;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Table {
    Resources,
    Selectors,
    Links,
    Users,
    Rights,
}

impl Table {
    const ALL: [Table; 5] = [
        Table::Resources,
        Table::Selectors,
        Table::Links,
        Table::Users,
        Table::Rights,
    ];

    fn file_name(self) -> &'static str {
        match self {
            Table::Resources => "resources.jsonl",
            Table::Selectors => "selectors.jsonl",
            Table::Links => "links.jsonl",
            Table::Users => "users.jsonl",
            Table::Rights => "rights.jsonl",
        }
    }

    pub fn for_entity(entity: &Entity) -> Table {
        match entity {
            Entity::Resource(_) => Table::Resources,
            Entity::Selector(_) => Table::Selectors,
            Entity::Link(_) => Table::Links,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Event {
    PutEntity { entity: Entity },
    DeleteEntity { id: EntityId },
    PutUser { user: User },
    PutRights { spec: RightsSpec },
}

#[derive(Serialize, Deserialize)]
pub struct JournalRecord {
    pub rev: u64,
    #[serde(flatten)]
    pub event: Event,
}

pub struct Journal {
    dir: PathBuf,
    files: Vec<(Table, File)>,
}

impl Journal {
    /// Opens the tables under `dir`, returning them with their records in
    /// revision order.
    pub fn open(dir: impl AsRef<Path>) -> Result<(Self, Vec<JournalRecord>)> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut records = Vec::new();
        let mut files = Vec::new();
        for table in Table::ALL {
            let path = dir.join(table.file_name());
            if path.exists() {
                let valid = read_table(&path, &mut records)?;
                let file = OpenOptions::new().write(true).open(&path)?;
                if file.metadata()?.len() > valid {
                    file.set_len(valid)?;
                }
            }
            let file = OpenOptions::new().create(true).append(true).open(&path)?;
            files.push((table, file));
        }
        records.sort_by_key(|r| r.rev);
        Ok((Journal { dir, files }, records))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&mut self, table: Table, rev: u64, event: &Event) -> Result<()> {
        let mut line = serde_json::to_vec(&JournalRecord {
            rev,
            event: event.clone(),
        })
        .map_err(|e| Error::StoreCorrupt(e.to_string()))?;
        line.push(b'\n');
        let file = &mut self
            .files
            .iter_mut()
            .find(|(t, _)| *t == table)
            .expect("all tables open")
            .1;
        file.write_all(&line)?;
        file.flush()?;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<()> {
        for (_, f) in &mut self.files {
            f.sync_all()?;
        }
        Ok(())
    }
}

/// Reads complete records, returning the byte length they occupy.
fn read_table(path: &Path, out: &mut Vec<JournalRecord>) -> Result<u64> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = String::new();
    let mut lineno = 0;
    let mut valid = 0u64;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            return Ok(valid);
        }
        lineno += 1;
        // Records are written whole, newline included.
        if !line.ends_with('\n') {
            log::warn!("{}: dropping torn record at line {lineno}", path.display());
            return Ok(valid);
        }
        valid += n as u64;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<JournalRecord>(line.trim_end()) {
            Ok(r) => out.push(r),
            Err(e) => {
                return Err(Error::StoreCorrupt(format!(
                    "{}:{lineno}: {e}",
                    path.display()
                )))
            }
        }
    }
}
