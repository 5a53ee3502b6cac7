//! Identifiers: local entity ids, store base URIs and references that may
//! point at entities hosted by another store.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use uuid::Uuid;

use crate::error::Error;

/// 128-bit random identifier, rendered as lowercase hyphenated hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(Uuid);

impl EntityId {
    pub fn random() -> Self {
        EntityId(Uuid::new_v4())
    }

    pub fn from_u128(v: u128) -> Self {
        EntityId(Uuid::from_u128(v))
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.hyphenated())
    }
}

impl fmt::Debug for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EntityId({})", self.0.hyphenated())
    }
}

impl FromStr for EntityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Uuid::parse_str(s)
            .map(EntityId)
            .map_err(|_| Error::InvalidId(s.to_owned()))
    }
}

/// Identifies a registered user.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(Uuid);

impl UserId {
    pub fn random() -> Self {
        UserId(Uuid::new_v4())
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.hyphenated())
    }
}

impl fmt::Debug for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UserId({})", self.0.hyphenated())
    }
}

impl FromStr for UserId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Uuid::parse_str(s)
            .map(UserId)
            .map_err(|_| Error::InvalidId(s.to_owned()))
    }
}

/// Absolute http(s) base URI of a store instance, without trailing slash.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StoreUri(String);

impl StoreUri {
    pub fn parse(s: &str) -> Result<Self, Error> {
        let trimmed = s.trim_end_matches('/');
        let parsed = url::Url::parse(trimmed).map_err(|_| Error::InvalidStoreUri(s.to_owned()))?;
        if !matches!(parsed.scheme(), "http" | "https")
            || parsed.host_str().is_none()
            || parsed.query().is_some()
            || parsed.fragment().is_some()
        {
            return Err(Error::InvalidStoreUri(s.to_owned()));
        }
        Ok(StoreUri(trimmed.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Joins an absolute path (starting with `/`) onto the base.
    pub fn join(&self, path: &str) -> String {
        format!("{}{}", self.0, path)
    }
}

impl fmt::Display for StoreUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for StoreUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StoreUri({})", self.0)
    }
}

impl FromStr for StoreUri {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        StoreUri::parse(s)
    }
}

impl Serialize for StoreUri {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for StoreUri {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        StoreUri::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// An entity hosted by a (possibly remote) store.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalRef {
    pub store: StoreUri,
    #[serde(rename = "id")]
    pub entity: EntityId,
}

impl fmt::Display for GlobalRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.store, self.entity)
    }
}

impl fmt::Debug for GlobalRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GlobalRef({self})")
    }
}

/// Endpoint of a link or child of a composition: either an entity in this
/// store or one hosted elsewhere.
///
/// On the wire this is `{"id": ".."}` or `{"store": "..", "id": ".."}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum EntityRef {
    Local(EntityId),
    Remote(GlobalRef),
}

impl EntityRef {
    pub fn local(&self) -> Option<EntityId> {
        match self {
            EntityRef::Local(id) => Some(*id),
            EntityRef::Remote(_) => None,
        }
    }

    pub fn id(&self) -> EntityId {
        match self {
            EntityRef::Local(id) => *id,
            EntityRef::Remote(g) => g.entity,
        }
    }

    fn store(&self) -> Option<&StoreUri> {
        match self {
            EntityRef::Local(_) => None,
            EntityRef::Remote(g) => Some(&g.store),
        }
    }

    /// Rewrites a remote ref that points back at `own` into a local one.
    pub fn normalized(self, own: Option<&StoreUri>) -> Self {
        match self {
            EntityRef::Remote(g) if Some(&g.store) == own => EntityRef::Local(g.entity),
            other => other,
        }
    }

    /// Re-anchors a ref read from `origin`'s records so it is meaningful here:
    /// refs local to `origin` become remote refs into `origin`.
    pub fn rebase(self, origin: &StoreUri, own: Option<&StoreUri>) -> Self {
        match self {
            EntityRef::Local(id) => EntityRef::Remote(GlobalRef {
                store: origin.clone(),
                entity: id,
            }),
            remote => remote,
        }
        .normalized(own)
    }
}

impl From<EntityId> for EntityRef {
    fn from(id: EntityId) -> Self {
        EntityRef::Local(id)
    }
}

impl From<GlobalRef> for EntityRef {
    fn from(g: GlobalRef) -> Self {
        EntityRef::Remote(g)
    }
}

// Entity id first, then store (local before remote).
impl Ord for EntityRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id()
            .cmp(&other.id())
            .then_with(|| self.store().cmp(&other.store()))
    }
}

impl PartialOrd for EntityRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityRef::Local(id) => write!(f, "{id}"),
            EntityRef::Remote(g) => write!(f, "{g}"),
        }
    }
}

impl fmt::Debug for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityRef::Local(id) => write!(f, "Local({id})"),
            EntityRef::Remote(g) => write!(f, "Remote({g})"),
        }
    }
}

/// Parses `ID` or `STORE_URI#ID`.
impl FromStr for EntityRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.rsplit_once('#') {
            Some((store, id)) => Ok(EntityRef::Remote(GlobalRef {
                store: store.parse()?,
                entity: id.parse()?,
            })),
            None => Ok(EntityRef::Local(s.parse()?)),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    store: Option<StoreUri>,
    id: EntityId,
}

impl Serialize for EntityRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire = match self {
            EntityRef::Local(id) => WireRef { store: None, id: *id },
            EntityRef::Remote(g) => WireRef {
                store: Some(g.store.clone()),
                id: g.entity,
            },
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for EntityRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = WireRef::deserialize(d)?;
        Ok(match wire.store {
            None => EntityRef::Local(wire.id),
            Some(store) => EntityRef::Remote(GlobalRef { store, entity: wire.id }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_id_text_form_is_lowercase_hyphenated() {
        let id = EntityId::from_u128(0xABCD_EF01_2345_6789_ABCD_EF01_2345_6789);
        assert_eq!(id.to_string(), "abcdef01-2345-6789-abcd-ef0123456789");
        assert_eq!(id.to_string().parse::<EntityId>().unwrap(), id);
        assert!("not-an-id".parse::<EntityId>().is_err());
    }

    #[test]
    fn store_uri_validation() {
        assert_eq!(
            StoreUri::parse("http://localhost:8080/").unwrap().as_str(),
            "http://localhost:8080"
        );
        assert!(StoreUri::parse("https://docs.example.org/store").is_ok());
        assert!(StoreUri::parse("ftp://x").is_err());
        assert!(StoreUri::parse("localhost:8080").is_err());
        assert!(StoreUri::parse("http://x/?q=1").is_err());
    }

    #[test]
    fn refs_on_the_wire() {
        let id = EntityId::from_u128(7);
        let local = EntityRef::Local(id);
        assert_eq!(
            serde_json::to_string(&local).unwrap(),
            format!(r#"{{"id":"{id}"}}"#)
        );
        let remote = EntityRef::Remote(GlobalRef {
            store: StoreUri::parse("http://b:1").unwrap(),
            entity: id,
        });
        let json = serde_json::to_string(&remote).unwrap();
        assert_eq!(json, format!(r#"{{"store":"http://b:1","id":"{id}"}}"#));
        assert_eq!(serde_json::from_str::<EntityRef>(&json).unwrap(), remote);
    }

    #[test]
    fn own_store_refs_normalize_to_local() {
        let own = StoreUri::parse("http://a:1").unwrap();
        let id = EntityId::random();
        let r = EntityRef::Remote(GlobalRef { store: own.clone(), entity: id });
        assert_eq!(r.normalized(Some(&own)), EntityRef::Local(id));

        let b = StoreUri::parse("http://b:1").unwrap();
        let rebased = EntityRef::Local(id).rebase(&b, Some(&own));
        assert_eq!(rebased, EntityRef::Remote(GlobalRef { store: b, entity: id }));
    }

    #[test]
    fn ref_text_form() {
        let id = EntityId::random();
        assert_eq!(id.to_string().parse::<EntityRef>().unwrap(), EntityRef::Local(id));
        let r: EntityRef = format!("http://b:9#{id}").parse().unwrap();
        assert_eq!(r.to_string(), format!("http://b:9#{id}"));
    }
}
