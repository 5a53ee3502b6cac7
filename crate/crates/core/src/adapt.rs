//! Context-based selection among link targets.
//!
//! A target declares requirements through `ctx:`-prefixed properties. It is
//! eligible when the request context holds every required key with the same
//! value; the most specific eligible targets win.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::id::{EntityId, EntityRef};
use crate::model::{LinkKind, PropertyMap};
use crate::render::{RenderNode, RenderTree};

/// Request context, e.g. `lang=de`, `device=mobile`, `user.pref.detail=short`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, String>", into = "BTreeMap<String, String>")]
pub struct Context(BTreeMap<String, String>);

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<()> {
        let key = key.into();
        if key.is_empty() {
            return Err(Error::InvalidProperty("empty context key".into()));
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

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Overlays `other` on top of `self`.
    pub fn merged(mut self, other: &Context) -> Self {
        for (k, v) in other.iter() {
            self.0.insert(k.to_owned(), v.to_owned());
        }
        self
    }
}

impl TryFrom<BTreeMap<String, String>> for Context {
    type Error = Error;

    fn try_from(map: BTreeMap<String, String>) -> Result<Self> {
        if map.keys().any(String::is_empty) {
            return Err(Error::InvalidProperty("empty context key".into()));
        }
        Ok(Context(map))
    }
}

impl From<Context> for BTreeMap<String, String> {
    fn from(c: Context) -> Self {
        c.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariantScore {
    pub target: EntityRef,
    pub matched: usize,
    pub required: usize,
}

impl VariantScore {
    pub fn score(target: EntityRef, properties: &PropertyMap, context: &Context) -> Self {
        let mut matched = 0;
        let mut required = 0;
        for (key, value) in properties.requirements() {
            required += 1;
            if context.get(key) == Some(value) {
                matched += 1;
            }
        }
        VariantScore { target, matched, required }
    }

    pub fn eligible(&self) -> bool {
        self.matched == self.required
    }
}

/// Most specific eligible targets, ordered by entity id.
pub fn choose(scores: Vec<VariantScore>) -> Vec<EntityRef> {
    let eligible: Vec<_> = scores.into_iter().filter(VariantScore::eligible).collect();
    let Some(best) = eligible.iter().map(|s| s.required).max() else {
        return Vec::new();
    };
    let mut out: Vec<EntityRef> = eligible
        .into_iter()
        .filter(|s| s.required == best)
        .map(|s| s.target)
        .collect();
    out.sort();
    out
}

/// Remote targets carry no locally known requirements and score as defaults.
pub fn select_targets(graph: &Graph, link: EntityId, context: &Context) -> Result<Vec<EntityRef>> {
    let l = graph.entity(link)?.as_link().ok_or(Error::WrongLinkKind(link))?;
    if l.link_kind == LinkKind::Transclusion {
        return Err(Error::WrongLinkKind(link));
    }
    let empty = PropertyMap::new();
    let scores = l
        .targets
        .iter()
        .map(|t| {
            let props = t
                .local()
                .and_then(|id| graph.get(id))
                .map(|e| e.properties())
                .unwrap_or(&empty);
            VariantScore::score(t.clone(), props, context)
        })
        .collect();
    Ok(choose(scores))
}

/// Drops non-selected alternatives from every variant group in the tree.
pub fn adapt_render(tree: &RenderTree, context: &Context, graph: &Graph) -> RenderTree {
    RenderTree {
        root: adapt_node(&tree.root, context, graph),
    }
}

fn adapt_node(node: &RenderNode, context: &Context, graph: &Graph) -> RenderNode {
    let mut children: Vec<RenderNode> = Vec::with_capacity(node.children.len());
    let mut i = 0;
    while i < node.children.len() {
        let Some(group) = node.children[i].variant_group() else {
            children.push(adapt_node(&node.children[i], context, graph));
            i += 1;
            continue;
        };
        let mut j = i;
        while j < node.children.len() && node.children[j].variant_group() == Some(group) {
            j += 1;
        }
        let members = &node.children[i..j];
        match select_targets(graph, group, context) {
            Ok(survivors) => {
                for s in &survivors {
                    if let Some(m) = members.iter().find(|m| &m.entity == s) {
                        children.push(adapt_node(m, context, graph));
                    }
                }
            }
            Err(e) => {
                log::warn!("variant group {group} kept unadapted: {e}");
                children.extend(members.iter().map(|m| adapt_node(m, context, graph)));
            }
        }
        i = j;
    }
    RenderNode {
        children,
        ..node.clone()
    }
}
