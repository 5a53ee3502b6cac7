//! Request and response bodies.

use fluid_core::{DocumentChild, EntityId, EntityRef, Fingerprint, LinkKind, MediaType, PropertyMap, UserId};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerprintBody {
    pub fingerprint: Fingerprint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdBody {
    pub id: EntityId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewResource {
    pub media_type: MediaType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<Fingerprint>,
    pub name: String,
    #[serde(default, skip_serializing_if = "PropertyMap::is_empty")]
    pub properties: PropertyMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewSelector {
    pub resource: EntityId,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "PropertyMap::is_empty")]
    pub properties: PropertyMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewLink {
    pub kind: LinkKind,
    #[serde(default)]
    pub sources: Vec<EntityRef>,
    #[serde(default)]
    pub targets: Vec<EntityRef>,
    #[serde(default, skip_serializing_if = "PropertyMap::is_empty")]
    pub properties: PropertyMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinksBody {
    pub links: Vec<EntityId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildBody {
    #[serde(rename = "ref")]
    pub child: EntityRef,
    #[serde(default)]
    pub order: i64,
}

impl From<ChildBody> for DocumentChild {
    fn from(c: ChildBody) -> Self {
        DocumentChild {
            child: c.child,
            order: c.order,
        }
    }
}

impl From<&DocumentChild> for ChildBody {
    fn from(c: &DocumentChild) -> Self {
        ChildBody {
            child: c.child.clone(),
            order: c.order,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewDocument {
    pub name: String,
    #[serde(default)]
    pub children: Vec<ChildBody>,
    #[serde(default, skip_serializing_if = "PropertyMap::is_empty")]
    pub properties: PropertyMap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewUser {
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedUser {
    pub id: UserId,
    pub token: String,
}
