//! Users, per-entity rights and redaction.
//!
//! An entity without its own rights spec inherits from its nearest
//! ancestors: structural parents, and for selectors also the resource they
//! address. When no ancestor carries a spec, everyone may read and write.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::id::{EntityId, EntityRef, UserId};
use crate::model::{Entity, PropertyMap};
use crate::render::{NodeKind, RenderNode, RenderTree, VARIANT_GROUP};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub name: String,
    pub token: String,
    #[serde(default)]
    pub preferences: PropertyMap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reader {
    Public,
    User(UserId),
}

const PUBLIC: &str = "PUBLIC";

impl fmt::Display for Reader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reader::Public => f.write_str(PUBLIC),
            Reader::User(u) => write!(f, "{u}"),
        }
    }
}

impl FromStr for Reader {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == PUBLIC {
            Ok(Reader::Public)
        } else {
            s.parse().map(Reader::User)
        }
    }
}

impl Serialize for Reader {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Reader {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RightsSpec {
    pub entity: EntityId,
    pub owner: UserId,
    pub readers: BTreeSet<Reader>,
    pub editors: BTreeSet<UserId>,
}

impl RightsSpec {
    pub fn allows_read(&self, user: Option<UserId>) -> bool {
        self.readers.contains(&Reader::Public)
            || user.is_some_and(|u| u == self.owner || self.readers.contains(&Reader::User(u)))
    }

    pub fn allows_write(&self, user: Option<UserId>) -> bool {
        user.is_some_and(|u| u == self.owner || self.editors.contains(&u))
    }
}

/// A rights change as requested; `owner` absent keeps (or, on first write,
/// assigns to the acting user) ownership.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RightsRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<UserId>,
    #[serde(default)]
    pub readers: BTreeSet<Reader>,
    #[serde(default)]
    pub editors: BTreeSet<UserId>,
}

#[derive(Clone, Debug, Default)]
pub struct AccessRegistry {
    users: HashMap<UserId, User>,
    by_name: HashMap<String, UserId>,
    by_token: HashMap<String, UserId>,
    rights: HashMap<EntityId, RightsSpec>,
}

impl AccessRegistry {
    pub fn user(&self, id: UserId) -> Option<&User> {
        self.users.get(&id)
    }

    pub fn user_by_name(&self, name: &str) -> Option<&User> {
        self.by_name.get(name).and_then(|id| self.users.get(id))
    }

    pub fn authenticate(&self, token: &str) -> Option<&User> {
        self.by_token.get(token).and_then(|id| self.users.get(id))
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn rights(&self, entity: EntityId) -> Option<&RightsSpec> {
        self.rights.get(&entity)
    }

    pub fn plan_user(&self, name: &str) -> Result<User> {
        if name.is_empty() {
            return Err(Error::InvalidProperty("user name must not be empty".into()));
        }
        if self.by_name.contains_key(name) {
            return Err(Error::NameTaken(name.to_owned()));
        }
        let mut id = UserId::random();
        while self.users.contains_key(&id) {
            id = UserId::random();
        }
        let token = loop {
            let t = format!(
                "{}{}",
                uuid::Uuid::new_v4().simple(),
                uuid::Uuid::new_v4().simple()
            );
            if !self.by_token.contains_key(&t) {
                break t;
            }
        };
        Ok(User {
            id,
            name: name.to_owned(),
            token,
            preferences: PropertyMap::new(),
        })
    }

    pub fn apply_user(&mut self, user: User) {
        if let Some(old) = self.users.get(&user.id) {
            self.by_name.remove(&old.name);
            self.by_token.remove(&old.token);
        }
        self.by_name.insert(user.name.clone(), user.id);
        self.by_token.insert(user.token.clone(), user.id);
        self.users.insert(user.id, user);
    }

    pub fn plan_rights(
        &self,
        graph: &Graph,
        entity: EntityId,
        request: RightsRequest,
        acting: Option<UserId>,
    ) -> Result<RightsSpec> {
        graph.entity(entity)?;
        let acting = acting.ok_or(Error::Unauthenticated)?;
        let owner = match self.rights.get(&entity) {
            Some(existing) if existing.owner != acting => return Err(Error::NotOwner(entity)),
            Some(existing) => request.owner.unwrap_or(existing.owner),
            None => request.owner.unwrap_or(acting),
        };
        for u in request
            .readers
            .iter()
            .filter_map(|r| match r {
                Reader::User(u) => Some(u),
                Reader::Public => None,
            })
            .chain(&request.editors)
            .chain([&owner])
        {
            if !self.users.contains_key(u) {
                return Err(Error::UnknownUser);
            }
        }
        Ok(RightsSpec {
            entity,
            owner,
            readers: request.readers,
            editors: request.editors,
        })
    }

    pub fn apply_rights(&mut self, spec: RightsSpec) {
        self.rights.insert(spec.entity, spec);
    }

    pub fn remove_rights(&mut self, entity: EntityId) {
        self.rights.remove(&entity);
    }

    pub fn can_read(&self, graph: &Graph, user: Option<UserId>, entity: EntityId) -> Result<bool> {
        self.decide(graph, entity, |s| s.allows_read(user))
    }

    pub fn can_write(&self, graph: &Graph, user: Option<UserId>, entity: EntityId) -> Result<bool> {
        self.decide(graph, entity, |s| s.allows_write(user))
    }

    /// Nearest-spec-wins, searching ancestors breadth-first. Specs at the
    /// same distance must agree or the decision is ambiguous.
    fn decide(
        &self,
        graph: &Graph,
        entity: EntityId,
        rule: impl Fn(&RightsSpec) -> bool,
    ) -> Result<bool> {
        graph.entity(entity)?;
        let mut frontier = vec![entity];
        let mut seen: HashSet<EntityId> = frontier.iter().copied().collect();
        while !frontier.is_empty() {
            let decisions: BTreeSet<bool> = frontier
                .iter()
                .filter_map(|e| self.rights.get(e))
                .map(&rule)
                .collect();
            match decisions.len() {
                0 => {}
                1 => return Ok(decisions.into_iter().next().unwrap_or(true)),
                _ => return Err(Error::AmbiguousParent(entity)),
            }
            let mut next = Vec::new();
            for e in &frontier {
                for p in parents(graph, *e) {
                    if seen.insert(p) {
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        Ok(true)
    }

    /// Marks every node's accessibility for `user` and redacts what they may
    /// not read. Transclusions are judged by their origin. Remote nodes keep
    /// the decision their home store made.
    pub fn filter_render(&self, tree: &RenderTree, user: Option<UserId>, graph: &Graph) -> RenderTree {
        let mut memo = HashMap::new();
        RenderTree {
            root: self.filter_node(&tree.root, user, graph, &mut memo),
        }
    }

    fn filter_node(
        &self,
        node: &RenderNode,
        user: Option<UserId>,
        graph: &Graph,
        memo: &mut HashMap<EntityId, bool>,
    ) -> RenderNode {
        if node.kind == NodeKind::Redacted {
            return node.clone();
        }
        let subject = match node.kind {
            NodeKind::Transclusion => node.origin.as_ref().unwrap_or(&node.entity),
            _ => &node.entity,
        };
        let readable = match subject {
            EntityRef::Local(id) => *memo.entry(*id).or_insert_with(|| {
                self.can_read(graph, user, *id).unwrap_or_else(|e| {
                    log::debug!("treating {id} as unreadable: {e}");
                    false
                })
            }),
            EntityRef::Remote(_) => node.accessible,
        };
        if !readable {
            let mut redacted = RenderNode::redacted(node.entity.clone());
            if let Some(g) = node.annotations.get(VARIANT_GROUP) {
                let _ = redacted.annotations.insert(VARIANT_GROUP, g);
            }
            return redacted;
        }
        RenderNode {
            accessible: true,
            children: node
                .children
                .iter()
                .map(|c| self.filter_node(c, user, graph, memo))
                .collect(),
            ..node.clone()
        }
    }
}

fn parents(graph: &Graph, entity: EntityId) -> Vec<EntityId> {
    let mut out = graph.structural_parents(entity);
    if let Some(Entity::Selector(s)) = graph.get(entity) {
        out.push(s.resource);
    }
    out
}
