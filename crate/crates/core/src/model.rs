//! Resources, selectors and links: the three kinds of entity.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::content::Fingerprint;
use crate::error::{Error, Result};
use crate::id::{EntityId, EntityRef};

/// Property key that orders structural children.
pub const ORDER_KEY: &str = "order";
/// Prefix of properties interpreted by context adaptation.
pub const CTX_PREFIX: &str = "ctx:";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaType {
    Text,
    Image,
    Composite,
}

impl MediaType {
    pub fn as_str(self) -> &'static str {
        match self {
            MediaType::Text => "text",
            MediaType::Image => "image",
            MediaType::Composite => "composite",
        }
    }
}

impl FromStr for MediaType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(MediaType::Text),
            "image" => Ok(MediaType::Image),
            "composite" => Ok(MediaType::Composite),
            other => Err(Error::InvalidProperty(format!("unknown media type {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Navigational,
    Structural,
    Transclusion,
}

impl LinkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Navigational => "navigational",
            LinkKind::Structural => "structural",
            LinkKind::Transclusion => "transclusion",
        }
    }
}

impl FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "navigational" => Ok(LinkKind::Navigational),
            "structural" => Ok(LinkKind::Structural),
            "transclusion" => Ok(LinkKind::Transclusion),
            other => Err(Error::InvalidProperty(format!("unknown link kind {other:?}"))),
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Incoming,
    Outgoing,
    #[default]
    Any,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incoming" => Ok(Direction::Incoming),
            "outgoing" => Ok(Direction::Outgoing),
            "any" => Ok(Direction::Any),
            other => Err(Error::InvalidProperty(format!("unknown direction {other:?}"))),
        }
    }
}

/// Text-keyed, text-valued properties. Keys are non-empty.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, String>", into = "BTreeMap<String, String>")]
pub struct PropertyMap(BTreeMap<String, String>);

impl PropertyMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<()> {
        let key = key.into();
        if key.is_empty() {
            return Err(Error::InvalidProperty("empty property key".into()));
        }
        self.0.insert(key, value.into());
        Ok(())
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Result<Self> {
        self.insert(key, value)?;
        Ok(self)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Context requirements: `ctx:`-prefixed entries with the prefix removed.
    pub fn requirements(&self) -> impl Iterator<Item = (&str, &str)> {
        self.iter()
            .filter_map(|(k, v)| k.strip_prefix(CTX_PREFIX).map(|k| (k, v)))
    }

    /// The structural `order` value; absent means 0.
    pub fn order(&self) -> Result<i64> {
        match self.get(ORDER_KEY) {
            None => Ok(0),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidProperty(format!("order must be an integer, got {v:?}"))),
        }
    }
}

impl TryFrom<BTreeMap<String, String>> for PropertyMap {
    type Error = Error;

    fn try_from(map: BTreeMap<String, String>) -> Result<Self> {
        if map.keys().any(String::is_empty) {
            return Err(Error::InvalidProperty("empty property key".into()));
        }
        Ok(PropertyMap(map))
    }
}

impl From<PropertyMap> for BTreeMap<String, String> {
    fn from(p: PropertyMap) -> Self {
        p.0
    }
}

/// Half-open range of Unicode scalar offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharRange {
    pub start: usize,
    pub end: usize,
}

impl CharRange {
    pub fn new(start: usize, end: usize) -> Self {
        CharRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self, text_len: usize) -> Result<()> {
        if self.start <= self.end && self.end <= text_len {
            Ok(())
        } else {
            Err(Error::RangeOutOfBounds {
                start: self.start,
                end: self.end,
                len: text_len,
            })
        }
    }
}

/// Length of `text` in Unicode scalar values.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Substring by scalar offsets; caller guarantees `start <= end <= char_len(text)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let byte_at = |n: usize| {
        text.char_indices()
            .nth(n)
            .map(|(i, _)| i)
            .unwrap_or(text.len())
    };
    let b0 = byte_at(start);
    let b1 = b0 + text[b0..]
        .char_indices()
        .nth(end - start)
        .map(|(i, _)| i)
        .unwrap_or(text.len() - b0);
    &text[b0..b1]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub id: EntityId,
    pub media_type: MediaType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<Fingerprint>,
    pub name: String,
    #[serde(default)]
    pub properties: PropertyMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selector {
    pub id: EntityId,
    pub resource: EntityId,
    pub bound_fingerprint: Fingerprint,
    #[serde(flatten)]
    pub range: CharRange,
    #[serde(default)]
    pub properties: PropertyMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: EntityId,
    pub link_kind: LinkKind,
    pub sources: Vec<EntityRef>,
    pub targets: Vec<EntityRef>,
    #[serde(default)]
    pub properties: PropertyMap,
}

impl Link {
    pub fn endpoints(&self) -> impl Iterator<Item = &EntityRef> {
        self.sources.iter().chain(self.targets.iter())
    }
}

/// Any entity, tagged by kind on the wire.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Entity {
    Resource(Resource),
    Selector(Selector),
    Link(Link),
}

impl Entity {
    pub fn id(&self) -> EntityId {
        match self {
            Entity::Resource(r) => r.id,
            Entity::Selector(s) => s.id,
            Entity::Link(l) => l.id,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Entity::Resource(_) => "resource",
            Entity::Selector(_) => "selector",
            Entity::Link(_) => "link",
        }
    }

    pub fn properties(&self) -> &PropertyMap {
        match self {
            Entity::Resource(r) => &r.properties,
            Entity::Selector(s) => &s.properties,
            Entity::Link(l) => &l.properties,
        }
    }

    pub fn as_resource(&self) -> Option<&Resource> {
        match self {
            Entity::Resource(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_selector(&self) -> Option<&Selector> {
        match self {
            Entity::Selector(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_link(&self) -> Option<&Link> {
        match self {
            Entity::Link(l) => Some(l),
            _ => None,
        }
    }
}
