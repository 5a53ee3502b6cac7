//! Selector resolution and document rendering.
//!
//! Rendering walks structural composition depth-first, splices transcluded
//! content in at anchor offsets, and turns every interior failure (cycles,
//! depth overruns, unreachable peers, stale live selectors) into a marker
//! leaf. Only the root lookup and fingerprint mismatches on fetched content
//! abort a render.

use serde::{Deserialize, Serialize};

use crate::content::{ContentStore, Fingerprint};
use crate::error::{Error, Result};
use crate::graph::{text_of, Graph};
use crate::id::{EntityId, EntityRef, GlobalRef, StoreUri, UserId};
use crate::model::{char_len, char_slice, CharRange, Entity, Link, LinkKind, MediaType, PropertyMap};
use crate::adapt::Context;

pub const DEFAULT_MAX_DEPTH: usize = 16;
/// Annotation naming the structural link whose alternatives a child belongs to.
pub const VARIANT_GROUP: &str = "variant_group";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Snapshot,
    Live,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snapshot" => Ok(Mode::Snapshot),
            "live" => Ok(Mode::Live),
            other => Err(Error::InvalidProperty(format!("unknown render mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderOptions {
    pub mode: Mode,
    pub max_depth: usize,
    pub context: Context,
    pub user: Option<UserId>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            mode: Mode::Snapshot,
            max_depth: DEFAULT_MAX_DEPTH,
            context: Context::default(),
            user: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    TextSpan,
    Composite,
    Transclusion,
    Redacted,
    Stale,
    UnresolvedRemote,
    DepthLimit,
    Cycle,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderNode {
    pub kind: NodeKind,
    pub entity: EntityRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub accessible: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub stale: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<EntityRef>,
    #[serde(default)]
    pub children: Vec<RenderNode>,
    #[serde(default, skip_serializing_if = "PropertyMap::is_empty")]
    pub annotations: PropertyMap,
}

impl RenderNode {
    pub fn leaf(kind: NodeKind, entity: EntityRef) -> Self {
        RenderNode {
            kind,
            entity,
            text: None,
            accessible: true,
            stale: false,
            origin: None,
            children: Vec::new(),
            annotations: PropertyMap::new(),
        }
    }

    pub fn text_span(entity: EntityRef, text: impl Into<String>) -> Self {
        RenderNode {
            text: Some(text.into()),
            ..Self::leaf(NodeKind::TextSpan, entity)
        }
    }

    pub fn composite(entity: EntityRef, children: Vec<RenderNode>) -> Self {
        RenderNode {
            children,
            ..Self::leaf(NodeKind::Composite, entity)
        }
    }

    /// A redaction marker for `entity`: no text, no children, no origin.
    pub fn redacted(entity: EntityRef) -> Self {
        RenderNode {
            accessible: false,
            ..Self::leaf(NodeKind::Redacted, entity)
        }
    }

    fn annotated(mut self, key: &str, value: impl Into<String>) -> Self {
        let _ = self.annotations.insert(key, value);
        self
    }

    pub fn variant_group(&self) -> Option<EntityId> {
        self.annotations.get(VARIANT_GROUP).and_then(|v| v.parse().ok())
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a RenderNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderTree {
    pub root: RenderNode,
}

/// Text a selector addresses plus whether its resource has moved on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedText {
    pub text: String,
    pub stale: bool,
}

/// Source of entities and verified content hosted by peer stores.
pub trait RemoteResolver: Sync {
    fn entity(&self, r: &GlobalRef) -> Result<Entity>;
    /// Returns bytes already checked against `fp`.
    fn content(&self, store: &StoreUri, fp: &Fingerprint) -> Result<Vec<u8>>;
    /// Outgoing structural link records of a remote composite, in creation order.
    fn structural_links(&self, r: &GlobalRef) -> Result<Vec<Link>>;
}

pub struct Renderer<'a> {
    graph: &'a Graph,
    content: &'a ContentStore,
    remote: Option<&'a dyn RemoteResolver>,
    mode: Mode,
    max_depth: usize,
    parallel: bool,
}

impl<'a> Renderer<'a> {
    pub fn new(graph: &'a Graph, content: &'a ContentStore) -> Self {
        Renderer {
            graph,
            content,
            remote: None,
            mode: Mode::Snapshot,
            max_depth: DEFAULT_MAX_DEPTH,
            parallel: cfg!(feature = "parallel"),
        }
    }

    pub fn with_remote(mut self, remote: &'a dyn RemoteResolver) -> Self {
        self.remote = Some(remote);
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth.max(1);
        self
    }

    /// Expand sibling subtrees on the rayon pool. Ignored without the
    /// `parallel` feature.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel && cfg!(feature = "parallel");
        self
    }

    pub fn resolve_selector(&self, selector: EntityId, mode: Mode) -> Result<ResolvedText> {
        let sel = self
            .graph
            .entity(selector)?
            .as_selector()
            .ok_or(Error::InvalidEndpoint(format!("{selector} is not a selector")))?;
        let current = self.graph.resource(sel.resource)?.content;
        let stale = current != Some(sel.bound_fingerprint);
        let fp = match mode {
            Mode::Snapshot => sel.bound_fingerprint,
            Mode::Live => current.ok_or(Error::NotATextResource(sel.resource))?,
        };
        let text = text_of(self.content, &fp)?;
        sel.range.check(char_len(&text))?;
        Ok(ResolvedText {
            text: char_slice(&text, sel.range.start, sel.range.end).to_owned(),
            stale,
        })
    }

    /// Unfiltered, unadapted expansion of `root`.
    pub fn render(&self, root: &EntityRef) -> Result<RenderTree> {
        let normalized = root.clone().normalized(self.graph.local_uri());
        match &normalized {
            EntityRef::Local(id) => {
                self.graph.entity(*id)?;
            }
            EntityRef::Remote(g) => {
                let remote = self.remote.ok_or_else(|| {
                    Error::StoreUnreachable(g.store.clone(), "federation disabled".into())
                })?;
                remote.entity(g)?;
            }
        }
        Ok(RenderTree {
            root: self.expand(&normalized, &[], 1)?,
        })
    }

    fn expand(&self, r: &EntityRef, path: &[EntityRef], depth: usize) -> Result<RenderNode> {
        if depth > self.max_depth {
            return Ok(RenderNode::leaf(NodeKind::DepthLimit, r.clone()));
        }
        match r {
            EntityRef::Local(id) => self.expand_local(*id, r, path, depth),
            EntityRef::Remote(g) => self.expand_remote(g, r, path, depth),
        }
    }

    fn expand_local(
        &self,
        id: EntityId,
        r: &EntityRef,
        path: &[EntityRef],
        depth: usize,
    ) -> Result<RenderNode> {
        let Some(entity) = self.graph.get(id) else {
            return Ok(RenderNode::leaf(NodeKind::UnresolvedRemote, r.clone()));
        };
        // Selectors count as entering their resource.
        let key = match entity {
            Entity::Selector(s) => EntityRef::Local(s.resource),
            _ => r.clone(),
        };
        if path.contains(&key) {
            return Ok(RenderNode::leaf(NodeKind::Cycle, r.clone()));
        }
        let path: Vec<EntityRef> = path.iter().cloned().chain([key]).collect();

        match entity {
            Entity::Resource(res) => match (res.media_type, res.content) {
                (MediaType::Composite, _) => {
                    let mut items = Vec::new();
                    for group in self.graph.structural_groups(id)? {
                        let variant = group.is_variant_group().then_some(group.link);
                        items.extend(group.targets.into_iter().map(|t| (t, variant)));
                    }
                    let children = self.expand_children(items, &path, depth)?;
                    Ok(RenderNode::composite(r.clone(), children))
                }
                (MediaType::Text, Some(fp)) => {
                    let Ok(text) = text_of(self.content, &fp) else {
                        return Ok(missing_content(r, &fp));
                    };
                    self.splice(id, &text, &fp, None, r, false, &path, depth)
                }
                (_, fp) => Ok(image_leaf(r, fp)),
            },
            Entity::Selector(sel) => {
                let current = self.graph.resource(sel.resource)?.content;
                let stale = current != Some(sel.bound_fingerprint);
                let fp = match self.mode {
                    Mode::Snapshot => sel.bound_fingerprint,
                    Mode::Live => match current {
                        Some(fp) => fp,
                        None => return Ok(RenderNode::leaf(NodeKind::Stale, r.clone())),
                    },
                };
                let Ok(text) = text_of(self.content, &fp) else {
                    return Ok(missing_content(r, &fp));
                };
                if sel.range.check(char_len(&text)).is_err() {
                    return Ok(RenderNode {
                        stale: true,
                        ..RenderNode::leaf(NodeKind::Stale, r.clone())
                    });
                }
                self.splice(sel.resource, &text, &fp, Some(sel.range), r, stale, &path, depth)
            }
            Entity::Link(_) => Ok(RenderNode::composite(r.clone(), Vec::new())),
        }
    }

    /// Renders `text` (a version of `resource`'s content) over `range`,
    /// splitting it wherever a transclusion anchor falls inside the range.
    #[allow(clippy::too_many_arguments)]
    fn splice(
        &self,
        resource: EntityId,
        text: &str,
        fp: &Fingerprint,
        range: Option<CharRange>,
        r: &EntityRef,
        stale: bool,
        path: &[EntityRef],
        depth: usize,
    ) -> Result<RenderNode> {
        let len = char_len(text);
        let CharRange { start, end } = range.unwrap_or(CharRange::new(0, len));

        struct Anchor<'l> {
            at: usize,
            until: usize,
            stale: bool,
            link: &'l Link,
        }
        let mut anchors: Vec<Anchor> = self
            .graph
            .anchors_in(resource)
            .into_iter()
            .map(|(sel, link)| {
                let stale = sel.bound_fingerprint != *fp;
                Anchor {
                    at: sel.range.start.min(len),
                    until: sel.range.end.min(len),
                    stale,
                    link,
                }
            })
            .filter(|a| start <= a.at && a.at <= end)
            .collect();
        if anchors.is_empty() {
            return Ok(RenderNode {
                stale,
                ..RenderNode::text_span(r.clone(), char_slice(text, start, end))
            });
        }
        anchors.sort_by_key(|a| a.at);

        let origins: Vec<(EntityRef, Option<EntityId>)> = anchors
            .iter()
            .map(|a| (a.link.sources[0].clone(), None))
            .collect();
        let mut expanded = self.expand_children(origins, path, depth)?.into_iter();

        let mut children = Vec::new();
        let mut cursor = start;
        for a in &anchors {
            if a.at > cursor {
                children.push(RenderNode::text_span(r.clone(), char_slice(text, cursor, a.at)));
                cursor = a.at;
            }
            children.push(RenderNode {
                origin: Some(a.link.sources[0].clone()),
                stale: a.stale,
                children: vec![expanded.next().expect("one expansion per anchor")],
                ..RenderNode::leaf(NodeKind::Transclusion, EntityRef::Local(a.link.id))
            });
            cursor = cursor.max(a.until.min(end));
        }
        if cursor < end {
            children.push(RenderNode::text_span(r.clone(), char_slice(text, cursor, end)));
        }
        Ok(RenderNode {
            stale,
            ..RenderNode::composite(r.clone(), children)
        })
    }

    fn expand_children(
        &self,
        items: Vec<(EntityRef, Option<EntityId>)>,
        path: &[EntityRef],
        depth: usize,
    ) -> Result<Vec<RenderNode>> {
        let one = |(child, group): &(EntityRef, Option<EntityId>)| -> Result<RenderNode> {
            let node = self.expand(child, path, depth + 1)?;
            Ok(match group {
                Some(link) => node.annotated(VARIANT_GROUP, link.to_string()),
                None => node,
            })
        };
        #[cfg(feature = "parallel")]
        if self.parallel && items.len() > 1 {
            use rayon::prelude::*;
            return items.par_iter().map(one).collect();
        }
        items.iter().map(one).collect()
    }

    fn expand_remote(
        &self,
        g: &GlobalRef,
        r: &EntityRef,
        path: &[EntityRef],
        depth: usize,
    ) -> Result<RenderNode> {
        let Some(remote) = self.remote else {
            return Ok(RenderNode::leaf(NodeKind::UnresolvedRemote, r.clone()));
        };
        let entity = match degrade(remote.entity(g), r)? {
            Ok(e) => e,
            Err(leaf) => return Ok(leaf),
        };
        let own = self.graph.local_uri();
        let key = match &entity {
            Entity::Selector(s) => EntityRef::Local(s.resource).rebase(&g.store, own),
            _ => r.clone(),
        };
        if path.contains(&key) {
            return Ok(RenderNode::leaf(NodeKind::Cycle, r.clone()));
        }
        let path: Vec<EntityRef> = path.iter().cloned().chain([key]).collect();

        match entity {
            Entity::Resource(res) => match (res.media_type, res.content) {
                (MediaType::Composite, _) => {
                    let links = match degrade(remote.structural_links(g), r)? {
                        Ok(l) => l,
                        Err(leaf) => return Ok(leaf),
                    };
                    let mut groups: Vec<(i64, usize, Link)> = links
                        .into_iter()
                        .filter(|l| l.link_kind == LinkKind::Structural)
                        .enumerate()
                        .map(|(i, l)| (l.properties.order().unwrap_or(0), i, l))
                        .collect();
                    groups.sort_by_key(|(order, i, _)| (*order, *i));
                    let mut items = Vec::new();
                    for (_, _, link) in groups {
                        let variant = (link.targets.len() > 1).then_some(link.id);
                        items.extend(
                            link.targets
                                .into_iter()
                                .map(|t| (t.rebase(&g.store, own), variant)),
                        );
                    }
                    let children = self.expand_children(items, &path, depth)?;
                    Ok(RenderNode::composite(r.clone(), children))
                }
                (MediaType::Text, Some(fp)) => {
                    let bytes = match degrade(remote.content(&g.store, &fp), r)? {
                        Ok(b) => b,
                        Err(leaf) => return Ok(leaf),
                    };
                    let text = String::from_utf8(bytes).map_err(|_| Error::InvalidUtf8)?;
                    Ok(RenderNode::text_span(r.clone(), text))
                }
                (_, fp) => Ok(image_leaf(r, fp)),
            },
            Entity::Selector(sel) => {
                let resource = GlobalRef {
                    store: g.store.clone(),
                    entity: sel.resource,
                };
                let current = match degrade(remote.entity(&resource), r)? {
                    Ok(Entity::Resource(res)) => res.content,
                    Ok(_) => None,
                    Err(leaf) => return Ok(leaf),
                };
                let stale = current != Some(sel.bound_fingerprint);
                let fp = match (self.mode, current) {
                    (Mode::Snapshot, _) => sel.bound_fingerprint,
                    (Mode::Live, Some(fp)) => fp,
                    (Mode::Live, None) => return Ok(RenderNode::leaf(NodeKind::Stale, r.clone())),
                };
                let bytes = match degrade(remote.content(&g.store, &fp), r)? {
                    Ok(b) => b,
                    Err(leaf) => return Ok(leaf),
                };
                let text = String::from_utf8(bytes).map_err(|_| Error::InvalidUtf8)?;
                if sel.range.check(char_len(&text)).is_err() {
                    return Ok(RenderNode {
                        stale: true,
                        ..RenderNode::leaf(NodeKind::Stale, r.clone())
                    });
                }
                Ok(RenderNode {
                    stale,
                    ..RenderNode::text_span(
                        r.clone(),
                        char_slice(&text, sel.range.start, sel.range.end),
                    )
                })
            }
            Entity::Link(_) => Ok(RenderNode::composite(r.clone(), Vec::new())),
        }
    }
}

/// Splits a remote fetch result into a value, a degraded marker leaf, or a
/// fatal error.
fn degrade<T>(res: Result<T>, r: &EntityRef) -> Result<Result<T, RenderNode>> {
    match res {
        Ok(v) => Ok(Ok(v)),
        Err(Error::RemoteForbidden(_)) => Ok(Err(RenderNode::redacted(r.clone()))),
        Err(e) if e.is_remote_degradation() => {
            log::debug!("degrading {r}: {e}");
            Ok(Err(RenderNode::leaf(NodeKind::UnresolvedRemote, r.clone())
                .annotated("reason", e.code())))
        }
        Err(e) => Err(e),
    }
}

fn missing_content(r: &EntityRef, fp: &Fingerprint) -> RenderNode {
    RenderNode::leaf(NodeKind::UnresolvedRemote, r.clone())
        .annotated("reason", "not_found")
        .annotated("content", fp.to_string())
}

fn image_leaf(r: &EntityRef, fp: Option<Fingerprint>) -> RenderNode {
    let node = RenderNode::text_span(r.clone(), "").annotated("media_type", "image");
    match fp {
        Some(fp) => node.annotated("content", fp.to_string()),
        None => node,
    }
}

/// In-order text of a tree, with markers for content that is not shown.
pub fn flatten(tree: &RenderTree) -> String {
    let mut out = String::new();
    flatten_into(&tree.root, &mut out);
    out
}

fn flatten_into(node: &RenderNode, out: &mut String) {
    match node.kind {
        NodeKind::TextSpan => out.push_str(node.text.as_deref().unwrap_or("")),
        NodeKind::Composite | NodeKind::Transclusion => {
            for c in &node.children {
                flatten_into(c, out);
            }
        }
        NodeKind::Redacted => out.push_str("[redacted]"),
        NodeKind::Cycle => out.push_str("[cycle]"),
        NodeKind::DepthLimit => out.push_str("[depth]"),
        NodeKind::UnresolvedRemote => out.push_str("[unresolved]"),
        NodeKind::Stale => out.push_str("[stale]"),
    }
}

/// Plain-text export: each top-level child of a composite root flattened and
/// separated by one blank line, with a trailing newline when non-empty.
pub fn export_text(tree: &RenderTree) -> String {
    let blocks: Vec<String> = match tree.root.kind {
        NodeKind::Composite if tree.root.entity_is_document() => tree
            .root
            .children
            .iter()
            .map(|c| {
                let mut s = String::new();
                flatten_into(c, &mut s);
                s
            })
            .collect(),
        _ => vec![flatten(tree)],
    };
    if blocks.is_empty() {
        return String::new();
    }
    let mut out = blocks.join("\n\n");
    out.push('\n');
    out
}

impl RenderNode {
    // A composite root built from structural children, as opposed to a text
    // resource split by transclusions (whose spans share the root's entity).
    fn entity_is_document(&self) -> bool {
        !self.children.iter().any(|c| c.kind == NodeKind::TextSpan && c.entity == self.entity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PropertyMap;

    struct Fx {
        content: ContentStore,
        graph: Graph,
    }

    impl Fx {
        fn new() -> Self {
            Fx {
                content: ContentStore::in_memory(),
                graph: Graph::new(None),
            }
        }
        fn text(&mut self, s: &str) -> EntityId {
            let fp = self.content.put(s.as_bytes()).unwrap();
            self.graph.create_resource(&self.content, MediaType::Text, Some(fp), s).unwrap()
        }
        fn doc(&mut self, children: &[EntityId]) -> EntityId {
            let d = self
                .graph
                .create_resource(&self.content, MediaType::Composite, None, "doc")
                .unwrap();
            for (i, c) in children.iter().enumerate() {
                self.graph
                    .create_link(
                        LinkKind::Structural,
                        vec![d.into()],
                        vec![(*c).into()],
                        PropertyMap::new().with("order", (i + 1).to_string()).unwrap(),
                    )
                    .unwrap();
            }
            d
        }
        fn sel(&mut self, r: EntityId, s: usize, e: usize) -> EntityId {
            self.graph.create_selector(&self.content, r, CharRange::new(s, e)).unwrap()
        }
        fn transclude(&mut self, origin: EntityId, host: EntityId, at: usize) -> EntityId {
            let anchor = self.sel(host, at, at);
            self.graph
                .create_link(
                    LinkKind::Transclusion,
                    vec![origin.into()],
                    vec![anchor.into()],
                    PropertyMap::new(),
                )
                .unwrap()
        }
        fn renderer(&self) -> Renderer<'_> {
            Renderer::new(&self.graph, &self.content)
        }
        fn flat(&self, root: EntityId) -> String {
            flatten(&self.renderer().render(&root.into()).unwrap())
        }
    }

    #[test]
    fn resolve_selector_snapshot_and_live() {
        let mut f = Fx::new();
        let r = f.text("hello world");
        let s = f.sel(r, 6, 11);
        let resolved = f.renderer().resolve_selector(s, Mode::Snapshot).unwrap();
        assert_eq!(resolved, ResolvedText { text: "world".into(), stale: false });

        let hi = f.content.put(b"hi").unwrap();
        f.graph.update_resource_content(&f.content, r, hi).unwrap();
        let resolved = f.renderer().resolve_selector(s, Mode::Snapshot).unwrap();
        assert_eq!(resolved, ResolvedText { text: "world".into(), stale: true });
        assert!(matches!(
            f.renderer().resolve_selector(s, Mode::Live),
            Err(Error::RangeOutOfBounds { .. })
        ));

        let empty = f.sel(r, 0, 0);
        assert_eq!(
            f.renderer().resolve_selector(empty, Mode::Snapshot).unwrap(),
            ResolvedText { text: String::new(), stale: false }
        );
    }

    #[test]
    fn flatten_contracts() {
        let mut f = Fx::new();
        let abc = f.text("abc");
        assert_eq!(f.flat(abc), "abc");
        let (ab, cd) = (f.text("ab"), f.text("cd"));
        let d = f.doc(&[ab, cd]);
        assert_eq!(f.flat(d), "abcd");

        let x = RenderNode::text_span(EntityRef::Local(ab), "x");
        let y = RenderNode::text_span(EntityRef::Local(cd), "y");
        let tree = RenderTree {
            root: RenderNode::composite(
                EntityRef::Local(d),
                vec![x, RenderNode::redacted(EntityRef::Local(abc)), y],
            ),
        };
        assert_eq!(flatten(&tree), "x[redacted]y");
    }

    #[test]
    fn transclusion_splits_host_span() {
        let mut f = Fx::new();
        let origin = f.text("brave new");
        let host = f.text("hello world");
        let o = f.sel(origin, 0, 5);
        let link = f.transclude(o, host, 6);
        let tree = f.renderer().render(&host.into()).unwrap();
        assert_eq!(flatten(&tree), "hello braveworld");
        let root = &tree.root;
        assert_eq!(root.kind, NodeKind::Composite);
        assert_eq!(root.children.len(), 3);
        let t = &root.children[1];
        assert_eq!(t.kind, NodeKind::Transclusion);
        assert_eq!(t.entity, EntityRef::Local(link));
        assert_eq!(t.origin, Some(EntityRef::Local(o)));
    }

    #[test]
    fn anchor_range_is_a_placeholder() {
        let mut f = Fx::new();
        let origin = f.text("NEW");
        let host = f.text("keep OLD keep");
        let anchor = f.sel(host, 5, 8);
        f.graph
            .create_link(
                LinkKind::Transclusion,
                vec![origin.into()],
                vec![anchor.into()],
                PropertyMap::new(),
            )
            .unwrap();
        assert_eq!(f.flat(host), "keep NEW keep");
    }

    #[test]
    fn self_transclusion_terminates_with_cycle() {
        let mut f = Fx::new();
        let r = f.text("abcdef");
        let s = f.sel(r, 0, 3);
        f.transclude(s, r, 6);
        let tree = f.renderer().render(&r.into()).unwrap();
        assert_eq!(flatten(&tree), "abcdef[cycle]");
    }

    #[test]
    fn reuse_in_sibling_branches_is_not_a_cycle() {
        let mut f = Fx::new();
        let p = f.text("shared");
        let d = f.doc(&[p, p]);
        assert_eq!(f.flat(d), "sharedshared");
    }

    #[test]
    fn max_depth_cuts_expansion() {
        let mut f = Fx::new();
        let a = f.text("A");
        let inner = f.doc(&[a]);
        let outer = f.doc(&[inner]);
        let tree = f.renderer().with_max_depth(1).render(&outer.into()).unwrap();
        assert_eq!(flatten(&tree), "[depth]");
        let tree = f.renderer().with_max_depth(2).render(&outer.into()).unwrap();
        assert_eq!(flatten(&tree), "[depth]");
        let tree = f.renderer().with_max_depth(3).render(&outer.into()).unwrap();
        assert_eq!(flatten(&tree), "A");
    }

    #[test]
    fn live_mode_stale_selector_becomes_marker() {
        let mut f = Fx::new();
        let origin = f.text("hello world");
        let host = f.text("x");
        let o = f.sel(origin, 6, 11);
        f.transclude(o, host, 1);
        let hi = f.content.put(b"hi").unwrap();
        f.graph.update_resource_content(&f.content, origin, hi).unwrap();

        let snap = f.renderer().render(&host.into()).unwrap();
        assert_eq!(flatten(&snap), "xworld");
        let mut stale = Vec::new();
        snap.root.walk(&mut |n| {
            if n.stale {
                stale.push(n.entity.clone())
            }
        });
        assert_eq!(stale, vec![EntityRef::Local(o)]);

        let live = f.renderer().with_mode(Mode::Live).render(&host.into()).unwrap();
        assert_eq!(flatten(&live), "x[stale]");
    }

    #[test]
    fn unknown_root_is_an_error() {
        let f = Fx::new();
        assert!(matches!(
            f.renderer().render(&EntityId::random().into()),
            Err(Error::UnknownEntity(_))
        ));
    }

    #[test]
    fn remote_refs_without_federation_are_unresolved() {
        let mut f = Fx::new();
        let p = f.text("local");
        let d = f.doc(&[p]);
        let remote = EntityRef::Remote(GlobalRef {
            store: StoreUri::parse("http://peer:1").unwrap(),
            entity: EntityId::random(),
        });
        f.graph
            .create_link(
                LinkKind::Structural,
                vec![d.into()],
                vec![remote],
                PropertyMap::new().with("order", "9").unwrap(),
            )
            .unwrap();
        assert_eq!(f.flat(d), "local[unresolved]");
    }

    #[test]
    fn export_separates_top_level_blocks() {
        let mut f = Fx::new();
        let (a, b) = (f.text("one"), f.text("two"));
        let d = f.doc(&[a, b]);
        let tree = f.renderer().render(&d.into()).unwrap();
        assert_eq!(export_text(&tree), "one\n\ntwo\n");
        let empty = f.doc(&[]);
        assert_eq!(export_text(&f.renderer().render(&empty.into()).unwrap()), "");
    }

    #[test]
    fn wire_shape_of_nodes() {
        let id = EntityId::from_u128(5);
        let node = RenderNode::text_span(EntityRef::Local(id), "hi");
        let v = serde_json::to_value(&node).unwrap();
        assert_eq!(v["kind"], "text_span");
        assert_eq!(v["entity"]["id"], id.to_string());
        assert_eq!(v["text"], "hi");
        assert_eq!(v["accessible"], true);
        assert!(v.get("stale").is_none());
        assert!(v.get("origin").is_none());
        assert_eq!(v["children"], serde_json::json!([]));
        let redacted = serde_json::to_value(RenderNode::redacted(EntityRef::Local(id))).unwrap();
        assert_eq!(redacted["kind"], "redacted");
        assert!(redacted.get("text").is_none());
    }
}
