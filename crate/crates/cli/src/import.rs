use std::path::Path;

use fluid_core::{DocumentChild, EntityId, MediaType};
use serde_json::json;

use crate::backend::{Backend, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportReport {
    pub document: EntityId,
    pub paragraph_count: usize,
    pub resource_ids: Vec<EntityId>,
}

impl ImportReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "document": self.document,
            "paragraph_count": self.paragraph_count,
            "resource_ids": self.resource_ids,
        })
    }
}

/// Splits on runs of blank (empty or whitespace-only) lines. Trailing
/// whitespace of each line is dropped.
pub fn paragraphs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(current.join("\n"));
                current.clear();
            }
        } else {
            current.push(line.trim_end());
        }
    }
    if !current.is_empty() {
        out.push(current.join("\n"));
    }
    out
}

pub fn import_text(backend: &dyn Backend, path: &Path, name: &str) -> CliResult<ImportReport> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::new("file_not_found", format!("{}: {e}", path.display())),
        _ => CliError::new("storage_failure", format!("{}: {e}", path.display())),
    })?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::new("invalid_utf8", format!("{} is not valid UTF-8", path.display())))?;
    let mut resource_ids = Vec::new();
    for (i, p) in paragraphs(&text).iter().enumerate() {
        let fp = backend.put_content(p.as_bytes())?;
        let id = backend.create_resource(MediaType::Text, Some(fp), &format!("{name} {}", i + 1))?;
        resource_ids.push(id);
    }
    let children: Vec<DocumentChild> = resource_ids
        .iter()
        .enumerate()
        .map(|(i, id)| DocumentChild {
            child: (*id).into(),
            order: i as i64 + 1,
        })
        .collect();
    let document = backend.create_document(name, &children)?;
    Ok(ImportReport {
        document,
        paragraph_count: resource_ids.len(),
        resource_ids,
    })
}
