//! The entity graph: resources, selectors and links with their integrity rules.
//!
//! Mutations are split into a validating `plan_*` step that produces the
//! entity to write and an `apply_*` step that installs it, so a persistent
//! store can journal the planned change before it becomes visible.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::content::{ContentStore, Fingerprint};
use crate::error::{Error, Result};
use crate::id::{EntityId, EntityRef, StoreUri};
use crate::model::{
    char_len, CharRange, Direction, Entity, Link, LinkKind, MediaType, PropertyMap, Resource,
    Selector,
};

#[derive(Clone, Debug)]
struct Stored {
    entity: Entity,
    seq: u64,
}

/// A group of children contributed by one structural link. More than one
/// target makes the group a set of alternatives chosen by context.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChildGroup {
    pub link: EntityId,
    pub order: i64,
    pub targets: Vec<EntityRef>,
}

impl ChildGroup {
    pub fn is_variant_group(&self) -> bool {
        self.targets.len() > 1
    }
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    entities: HashMap<EntityId, Stored>,
    // endpoint -> (link creation seq -> link)
    outgoing: HashMap<EntityId, BTreeMap<u64, EntityId>>,
    incoming: HashMap<EntityId, BTreeMap<u64, EntityId>>,
    selectors_by_resource: HashMap<EntityId, BTreeSet<EntityId>>,
    retired: HashSet<EntityId>,
    next_seq: u64,
    local_uri: Option<StoreUri>,
}

impl Graph {
    pub fn new(local_uri: Option<StoreUri>) -> Self {
        Graph {
            local_uri,
            ..Default::default()
        }
    }

    pub fn local_uri(&self) -> Option<&StoreUri> {
        self.local_uri.as_ref()
    }

    pub fn set_local_uri(&mut self, uri: Option<StoreUri>) {
        self.local_uri = uri;
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(&id).map(|s| &s.entity)
    }

    pub fn contains(&self, id: EntityId) -> bool {
        self.entities.contains_key(&id)
    }

    pub fn entity(&self, id: EntityId) -> Result<&Entity> {
        self.get(id).ok_or(Error::UnknownEntity(id))
    }

    pub fn seq_of(&self, id: EntityId) -> Option<u64> {
        self.entities.get(&id).map(|s| s.seq)
    }

    pub fn resource(&self, id: EntityId) -> Result<&Resource> {
        self.entity(id)?
            .as_resource()
            .ok_or(Error::InvalidEndpoint(format!("{id} is not a resource")))
    }

    pub fn selector(&self, id: EntityId) -> Result<&Selector> {
        self.entity(id)?
            .as_selector()
            .ok_or(Error::InvalidEndpoint(format!("{id} is not a selector")))
    }

    pub fn link(&self, id: EntityId) -> Result<&Link> {
        self.entity(id)?
            .as_link()
            .ok_or(Error::InvalidEndpoint(format!("{id} is not a link")))
    }

    /// All entities in creation order.
    pub fn entities(&self) -> Vec<&Entity> {
        let mut all: Vec<_> = self.entities.values().collect();
        all.sort_by_key(|s| s.seq);
        all.into_iter().map(|s| &s.entity).collect()
    }

    pub fn is_retired(&self, id: EntityId) -> bool {
        self.retired.contains(&id)
    }

    fn fresh_id(&self) -> EntityId {
        loop {
            let id = EntityId::random();
            if !self.entities.contains_key(&id) && !self.retired.contains(&id) {
                return id;
            }
        }
    }

    // ---- planning -------------------------------------------------------

    pub fn plan_resource(
        &self,
        content_store: &ContentStore,
        media_type: MediaType,
        content: Option<Fingerprint>,
        name: &str,
        properties: PropertyMap,
    ) -> Result<Resource> {
        match (media_type, content) {
            (MediaType::Composite, Some(_)) => return Err(Error::FingerprintForbiddenForComposite),
            (MediaType::Composite, None) => {}
            (m, None) => return Err(Error::MissingContent(m.as_str())),
            (m, Some(fp)) => {
                if !content_store.contains(&fp) {
                    return Err(Error::UnknownFingerprint(fp));
                }
                if m == MediaType::Text {
                    let bytes = content_store.get(&fp)?;
                    std::str::from_utf8(&bytes).map_err(|_| Error::InvalidUtf8)?;
                }
            }
        }
        Ok(Resource {
            id: self.fresh_id(),
            media_type,
            content,
            name: name.to_owned(),
            properties,
        })
    }

    pub fn plan_selector(
        &self,
        content_store: &ContentStore,
        resource: EntityId,
        range: CharRange,
        properties: PropertyMap,
    ) -> Result<Selector> {
        let res = self.entity(resource)?.as_resource().ok_or(Error::NotATextResource(resource))?;
        let fp = match (res.media_type, res.content) {
            (MediaType::Text, Some(fp)) => fp,
            _ => return Err(Error::NotATextResource(resource)),
        };
        let text = text_of(content_store, &fp)?;
        range.check(char_len(&text))?;
        Ok(Selector {
            id: self.fresh_id(),
            resource,
            bound_fingerprint: fp,
            range,
            properties,
        })
    }

    pub fn plan_link(
        &self,
        kind: LinkKind,
        sources: Vec<EntityRef>,
        targets: Vec<EntityRef>,
        properties: PropertyMap,
    ) -> Result<Link> {
        if sources.is_empty() || targets.is_empty() {
            return Err(Error::EmptyEndpoint);
        }
        let own = self.local_uri.as_ref();
        let sources: Vec<_> = sources.into_iter().map(|r| r.normalized(own)).collect();
        let targets: Vec<_> = targets.into_iter().map(|r| r.normalized(own)).collect();
        for id in sources.iter().chain(&targets).filter_map(EntityRef::local) {
            self.entity(id)?;
        }

        match kind {
            LinkKind::Navigational => {}
            LinkKind::Structural => {
                if sources.len() != 1 {
                    return Err(Error::BadCardinality("structural links have exactly one parent"));
                }
                properties.order()?;
                let parent = match &sources[0] {
                    EntityRef::Local(id) => *id,
                    EntityRef::Remote(_) => {
                        return Err(Error::InvalidEndpoint("structural parent must be local".into()))
                    }
                };
                match self.entity(parent)? {
                    Entity::Resource(r) if r.media_type == MediaType::Composite => {}
                    _ => {
                        return Err(Error::InvalidEndpoint(format!(
                            "structural parent {parent} is not a composite resource"
                        )))
                    }
                }
                for child in targets.iter().filter_map(EntityRef::local) {
                    if matches!(self.entity(child)?, Entity::Link(_)) {
                        return Err(Error::InvalidEndpoint(format!(
                            "link {child} cannot be a structural child"
                        )));
                    }
                    if child == parent || self.structurally_reaches(child, parent) {
                        return Err(Error::StructuralCycle { parent, child });
                    }
                }
            }
            LinkKind::Transclusion => {
                if sources.len() != 1 || targets.len() != 1 {
                    return Err(Error::BadCardinality(
                        "transclusion links have exactly one origin and one anchor",
                    ));
                }
                if let Some(origin) = sources[0].local() {
                    if matches!(self.entity(origin)?, Entity::Link(_)) {
                        return Err(Error::InvalidEndpoint(
                            "transclusion origin must be a selector or resource".into(),
                        ));
                    }
                }
                match targets[0].local().map(|id| self.entity(id)) {
                    Some(Ok(Entity::Selector(_))) => {}
                    _ => {
                        return Err(Error::InvalidEndpoint(
                            "transclusion anchor must be a local selector".into(),
                        ))
                    }
                }
            }
        }

        Ok(Link {
            id: self.fresh_id(),
            link_kind: kind,
            sources,
            targets,
            properties,
        })
    }

    /// Returns the updated resource, or `None` when the content is unchanged.
    pub fn plan_update_content(
        &self,
        content_store: &ContentStore,
        resource: EntityId,
        content: Fingerprint,
    ) -> Result<Option<Resource>> {
        let res = self.entity(resource)?.as_resource().ok_or(Error::NotATextResource(resource))?;
        if res.media_type != MediaType::Text {
            return Err(Error::NotATextResource(resource));
        }
        if !content_store.contains(&content) {
            return Err(Error::UnknownFingerprint(content));
        }
        if res.content == Some(content) {
            return Ok(None);
        }
        text_of(content_store, &content)?;
        Ok(Some(Resource {
            content: Some(content),
            ..res.clone()
        }))
    }

    /// Entities whose records refer to `id`.
    pub fn referrers(&self, id: EntityId) -> Vec<EntityId> {
        let mut out: BTreeSet<EntityId> = BTreeSet::new();
        if let Some(sels) = self.selectors_by_resource.get(&id) {
            out.extend(sels.iter().copied());
        }
        for index in [&self.outgoing, &self.incoming] {
            if let Some(links) = index.get(&id) {
                out.extend(links.values().copied());
            }
        }
        out.remove(&id);
        out.into_iter().collect()
    }

    pub fn check_delete(&self, id: EntityId) -> Result<()> {
        self.entity(id)?;
        let referrers = self.referrers(id);
        if referrers.is_empty() {
            Ok(())
        } else {
            Err(Error::ReferencedEntity { id, referrers })
        }
    }

    // ---- applying -------------------------------------------------------

    /// Next creation sequence number.
    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// Inserts or replaces an entity. Replacements keep their creation seq.
    pub fn apply_put(&mut self, entity: Entity, seq: u64) {
        let id = entity.id();
        let seq = match self.entities.get(&id) {
            Some(existing) => existing.seq,
            None => seq,
        };
        self.unindex(id);
        self.index(&entity, seq);
        self.entities.insert(id, Stored { entity, seq });
        self.next_seq = self.next_seq.max(seq + 1);
    }

    pub fn apply_delete(&mut self, id: EntityId) {
        self.unindex(id);
        self.entities.remove(&id);
        self.retired.insert(id);
    }

    fn index(&mut self, entity: &Entity, seq: u64) {
        match entity {
            Entity::Resource(_) => {}
            Entity::Selector(s) => {
                self.selectors_by_resource.entry(s.resource).or_default().insert(s.id);
            }
            Entity::Link(l) => {
                for src in l.sources.iter().filter_map(EntityRef::local) {
                    self.outgoing.entry(src).or_default().insert(seq, l.id);
                }
                for dst in l.targets.iter().filter_map(EntityRef::local) {
                    self.incoming.entry(dst).or_default().insert(seq, l.id);
                }
            }
        }
    }

    fn unindex(&mut self, id: EntityId) {
        let Some(stored) = self.entities.get(&id) else { return };
        match &stored.entity {
            Entity::Resource(_) => {}
            Entity::Selector(s) => {
                if let Some(set) = self.selectors_by_resource.get_mut(&s.resource) {
                    set.remove(&id);
                }
            }
            Entity::Link(l) => {
                let seq = stored.seq;
                for src in l.sources.iter().filter_map(EntityRef::local) {
                    if let Some(m) = self.outgoing.get_mut(&src) {
                        m.remove(&seq);
                    }
                }
                for dst in l.targets.iter().filter_map(EntityRef::local) {
                    if let Some(m) = self.incoming.get_mut(&dst) {
                        m.remove(&seq);
                    }
                }
            }
        }
    }

    // ---- convenience for purely in-memory use ---------------------------

    pub fn create_resource(
        &mut self,
        content_store: &ContentStore,
        media_type: MediaType,
        content: Option<Fingerprint>,
        name: &str,
    ) -> Result<EntityId> {
        let r = self.plan_resource(content_store, media_type, content, name, PropertyMap::new())?;
        let id = r.id;
        self.apply_put(Entity::Resource(r), self.next_seq);
        Ok(id)
    }

    pub fn create_selector(
        &mut self,
        content_store: &ContentStore,
        resource: EntityId,
        range: CharRange,
    ) -> Result<EntityId> {
        let s = self.plan_selector(content_store, resource, range, PropertyMap::new())?;
        let id = s.id;
        self.apply_put(Entity::Selector(s), self.next_seq);
        Ok(id)
    }

    pub fn create_link(
        &mut self,
        kind: LinkKind,
        sources: Vec<EntityRef>,
        targets: Vec<EntityRef>,
        properties: PropertyMap,
    ) -> Result<EntityId> {
        let l = self.plan_link(kind, sources, targets, properties)?;
        let id = l.id;
        self.apply_put(Entity::Link(l), self.next_seq);
        Ok(id)
    }

    pub fn update_resource_content(
        &mut self,
        content_store: &ContentStore,
        resource: EntityId,
        content: Fingerprint,
    ) -> Result<()> {
        if let Some(r) = self.plan_update_content(content_store, resource, content)? {
            self.apply_put(Entity::Resource(r), self.next_seq);
        }
        Ok(())
    }

    pub fn delete_entity(&mut self, id: EntityId) -> Result<()> {
        self.check_delete(id)?;
        self.apply_delete(id);
        Ok(())
    }

    // ---- queries --------------------------------------------------------

    /// Links touching `entity`, in link creation order.
    pub fn links_of(
        &self,
        entity: EntityId,
        direction: Direction,
        kind: Option<LinkKind>,
    ) -> Result<Vec<EntityId>> {
        self.entity(entity)?;
        let empty = BTreeMap::new();
        let out = self.outgoing.get(&entity).unwrap_or(&empty);
        let inc = self.incoming.get(&entity).unwrap_or(&empty);
        let merged: BTreeMap<u64, EntityId> = match direction {
            Direction::Outgoing => out.clone(),
            Direction::Incoming => inc.clone(),
            Direction::Any => out.iter().chain(inc.iter()).map(|(k, v)| (*k, *v)).collect(),
        };
        Ok(merged
            .into_values()
            .filter(|l| match kind {
                None => true,
                Some(k) => self.get(*l).and_then(Entity::as_link).map(|l| l.link_kind) == Some(k),
            })
            .collect())
    }

    /// Structural child groups of `parent`, ascending by order then creation.
    pub fn structural_groups(&self, parent: EntityId) -> Result<Vec<ChildGroup>> {
        let mut groups = Vec::new();
        for link_id in self.links_of(parent, Direction::Outgoing, Some(LinkKind::Structural))? {
            let link = self.link(link_id)?;
            groups.push((
                self.seq_of(link_id).unwrap_or(0),
                ChildGroup {
                    link: link_id,
                    order: link.properties.order().unwrap_or(0),
                    targets: link.targets.clone(),
                },
            ));
        }
        groups.sort_by_key(|(seq, g)| (g.order, *seq));
        Ok(groups.into_iter().map(|(_, g)| g).collect())
    }

    pub fn structural_children(&self, parent: EntityId) -> Result<Vec<EntityRef>> {
        Ok(self
            .structural_groups(parent)?
            .into_iter()
            .flat_map(|g| g.targets)
            .collect())
    }

    /// Local structural parents of `child`.
    pub fn structural_parents(&self, child: EntityId) -> Vec<EntityId> {
        let mut parents: Vec<EntityId> = self
            .incoming
            .get(&child)
            .into_iter()
            .flat_map(|m| m.values())
            .filter_map(|l| self.get(*l).and_then(Entity::as_link))
            .filter(|l| l.link_kind == LinkKind::Structural)
            .filter_map(|l| l.sources[0].local())
            .collect();
        parents.sort();
        parents.dedup();
        parents
    }

    pub fn selectors_of(&self, resource: EntityId) -> impl Iterator<Item = &Selector> {
        self.selectors_by_resource
            .get(&resource)
            .into_iter()
            .flatten()
            .filter_map(|id| self.get(*id).and_then(Entity::as_selector))
    }

    /// Transclusion anchors inside `resource`: (anchor selector, transclusion link).
    pub fn anchors_in(&self, resource: EntityId) -> Vec<(&Selector, &Link)> {
        let mut out = Vec::new();
        for sel in self.selectors_of(resource) {
            if let Some(links) = self.incoming.get(&sel.id) {
                for link_id in links.values() {
                    if let Some(link) = self.get(*link_id).and_then(Entity::as_link) {
                        if link.link_kind == LinkKind::Transclusion {
                            out.push((sel, link));
                        }
                    }
                }
            }
        }
        out.sort_by_key(|(_, l)| self.seq_of(l.id));
        out
    }

    fn structurally_reaches(&self, from: EntityId, to: EntityId) -> bool {
        let mut stack = vec![from];
        let mut seen = HashSet::new();
        while let Some(node) = stack.pop() {
            if node == to {
                return true;
            }
            if !seen.insert(node) {
                continue;
            }
            if let Some(links) = self.outgoing.get(&node) {
                for l in links.values().filter_map(|id| self.get(*id).and_then(Entity::as_link)) {
                    if l.link_kind == LinkKind::Structural {
                        stack.extend(l.targets.iter().filter_map(EntityRef::local));
                    }
                }
            }
        }
        false
    }
}

/// Loads a blob and decodes it as UTF-8 text.
pub fn text_of(content_store: &ContentStore, fp: &Fingerprint) -> Result<String> {
    String::from_utf8(content_store.get(fp)?).map_err(|_| Error::InvalidUtf8)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixture {
        content: ContentStore,
        graph: Graph,
    }

    impl Fixture {
        fn new() -> Self {
            Fixture {
                content: ContentStore::in_memory(),
                graph: Graph::new(None),
            }
        }

        fn text(&mut self, s: &str) -> EntityId {
            let fp = self.content.put(s.as_bytes()).unwrap();
            self.graph
                .create_resource(&self.content, MediaType::Text, Some(fp), s)
                .unwrap()
        }

        fn composite(&mut self, name: &str) -> EntityId {
            self.graph
                .create_resource(&self.content, MediaType::Composite, None, name)
                .unwrap()
        }

        fn structural(&mut self, parent: EntityId, child: EntityId, order: i64) -> Result<EntityId> {
            self.graph.create_link(
                LinkKind::Structural,
                vec![parent.into()],
                vec![child.into()],
                PropertyMap::new().with("order", order.to_string()).unwrap(),
            )
        }

        fn nav(&mut self, s: &[EntityId], t: &[EntityId]) -> Result<EntityId> {
            self.graph.create_link(
                LinkKind::Navigational,
                s.iter().map(|&i| i.into()).collect(),
                t.iter().map(|&i| i.into()).collect(),
                PropertyMap::new(),
            )
        }
    }

    #[test]
    fn create_resource_contracts() {
        let mut f = Fixture::new();
        let book = f.composite("Book");
        assert_eq!(f.graph.resource(book).unwrap().media_type, MediaType::Composite);

        let p1 = f.text("hello");
        assert_eq!(
            f.graph.resource(p1).unwrap().content.unwrap().to_string(),
            "sha256:2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );

        let unknown = Fingerprint::of(b"nope");
        assert!(matches!(
            f.graph.create_resource(&f.content, MediaType::Text, Some(unknown), "x"),
            Err(Error::UnknownFingerprint(_))
        ));
        let fp = f.content.put(b"c").unwrap();
        assert!(matches!(
            f.graph.create_resource(&f.content, MediaType::Composite, Some(fp), "x"),
            Err(Error::FingerprintForbiddenForComposite)
        ));
        let bad = f.content.put(&[0xff, 0xfe]).unwrap();
        assert!(matches!(
            f.graph.create_resource(&f.content, MediaType::Text, Some(bad), "x"),
            Err(Error::InvalidUtf8)
        ));
        assert!(f
            .graph
            .create_resource(&f.content, MediaType::Image, Some(bad), "img")
            .is_ok());
    }

    #[test]
    fn create_selector_contracts() {
        let mut f = Fixture::new();
        let r = f.text("hello");
        let s = f.graph.create_selector(&f.content, r, CharRange::new(1, 4)).unwrap();
        let sel = f.graph.selector(s).unwrap();
        assert_eq!(sel.bound_fingerprint, Fingerprint::of(b"hello"));
        assert!(f.graph.create_selector(&f.content, r, CharRange::new(0, 5)).is_ok());
        assert!(matches!(
            f.graph.create_selector(&f.content, r, CharRange::new(2, 9)),
            Err(Error::RangeOutOfBounds { .. })
        ));
        let c = f.composite("c");
        assert!(matches!(
            f.graph.create_selector(&f.content, c, CharRange::new(0, 0)),
            Err(Error::NotATextResource(_))
        ));
        assert!(matches!(
            f.graph.create_selector(&f.content, EntityId::random(), CharRange::new(0, 0)),
            Err(Error::UnknownEntity(_))
        ));
    }

    #[test]
    fn create_link_contracts() {
        let mut f = Fixture::new();
        let a = f.composite("A");
        let b = f.composite("B");
        assert!(matches!(f.nav(&[a], &[]), Err(Error::EmptyEndpoint)));
        f.structural(a, b, 1).unwrap();
        assert!(matches!(
            f.structural(b, a, 1),
            Err(Error::StructuralCycle { .. })
        ));
        assert!(matches!(f.structural(a, a, 1), Err(Error::StructuralCycle { .. })));

        let (c, d, e) = (f.text("c"), f.text("d"), f.text("e"));
        let l = f.nav(&[a, b], &[c, d, e]).unwrap();
        assert_eq!(f.graph.links_of(c, Direction::Incoming, None).unwrap(), vec![l]);
        // links may target links
        let meta = f.nav(&[l], &[a]).unwrap();
        assert_eq!(f.graph.links_of(l, Direction::Outgoing, None).unwrap(), vec![meta]);
        assert!(matches!(
            f.structural(a, l, 2),
            Err(Error::InvalidEndpoint(_))
        ));
        assert!(matches!(
            f.graph.create_link(
                LinkKind::Structural,
                vec![a.into(), b.into()],
                vec![c.into()],
                PropertyMap::new()
            ),
            Err(Error::BadCardinality(_))
        ));
    }

    #[test]
    fn transclusion_link_shape() {
        let mut f = Fixture::new();
        let host = f.text("host");
        let origin = f.text("origin");
        let anchor = f.graph.create_selector(&f.content, host, CharRange::new(2, 2)).unwrap();
        let osel = f.graph.create_selector(&f.content, origin, CharRange::new(0, 3)).unwrap();
        let t = f
            .graph
            .create_link(
                LinkKind::Transclusion,
                vec![osel.into()],
                vec![anchor.into()],
                PropertyMap::new(),
            )
            .unwrap();
        let anchors = f.graph.anchors_in(host);
        assert_eq!(anchors.len(), 1);
        assert_eq!(anchors[0].1.id, t);
        // anchor must be a selector
        assert!(matches!(
            f.graph.create_link(
                LinkKind::Transclusion,
                vec![osel.into()],
                vec![host.into()],
                PropertyMap::new()
            ),
            Err(Error::InvalidEndpoint(_))
        ));
        assert!(matches!(
            f.graph.create_link(
                LinkKind::Transclusion,
                vec![osel.into(), origin.into()],
                vec![anchor.into()],
                PropertyMap::new()
            ),
            Err(Error::BadCardinality(_))
        ));
    }

    #[test]
    fn links_of_basics() {
        let mut f = Fixture::new();
        let a = f.text("a");
        let b = f.text("b");
        assert!(f.graph.links_of(a, Direction::Any, None).unwrap().is_empty());
        let l = f.nav(&[a], &[b]).unwrap();
        assert_eq!(f.graph.links_of(b, Direction::Incoming, None).unwrap(), vec![l]);
        assert_eq!(f.graph.links_of(a, Direction::Outgoing, None).unwrap(), vec![l]);
        assert!(f.graph.links_of(a, Direction::Incoming, None).unwrap().is_empty());
        assert!(f
            .graph
            .links_of(a, Direction::Any, Some(LinkKind::Structural))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn structural_children_order() {
        let mut f = Fixture::new();
        let doc = f.composite("doc");
        let b = f.text("B");
        let c = f.text("C");
        f.structural(doc, c, 2).unwrap();
        f.structural(doc, b, 1).unwrap();
        assert_eq!(f.graph.structural_children(doc).unwrap(), vec![b.into(), c.into()]);
        assert!(f.graph.structural_children(b).unwrap().is_empty());

        let tie = f.composite("tie");
        let x = f.text("x");
        let y = f.text("y");
        f.structural(tie, x, 1).unwrap();
        f.structural(tie, y, 1).unwrap();
        assert_eq!(f.graph.structural_children(tie).unwrap(), vec![x.into(), y.into()]);
        assert_eq!(f.graph.structural_parents(x), vec![tie]);
    }

    #[test]
    fn update_content_is_snapshot_preserving() {
        let mut f = Fixture::new();
        let r = f.text("hello");
        let s = f.graph.create_selector(&f.content, r, CharRange::new(0, 5)).unwrap();
        let world = f.content.put(b"world").unwrap();
        f.graph.update_resource_content(&f.content, r, world).unwrap();
        assert_eq!(f.graph.resource(r).unwrap().content, Some(world));
        assert_eq!(f.graph.selector(s).unwrap().bound_fingerprint, Fingerprint::of(b"hello"));
        assert!(matches!(
            f.graph.plan_update_content(&f.content, r, world),
            Ok(None)
        ));
        assert!(matches!(
            f.graph.update_resource_content(&f.content, EntityId::random(), world),
            Err(Error::UnknownEntity(_))
        ));
    }

    #[test]
    fn deletion_refused_while_referenced() {
        let mut f = Fixture::new();
        let r = f.text("hello");
        let s = f.graph.create_selector(&f.content, r, CharRange::new(0, 1)).unwrap();
        match f.graph.delete_entity(r) {
            Err(Error::ReferencedEntity { referrers, .. }) => assert_eq!(referrers, vec![s]),
            other => panic!("unexpected {other:?}"),
        }
        let lone = f.text("lone");
        f.graph.delete_entity(lone).unwrap();
        assert!(matches!(f.graph.entity(lone), Err(Error::UnknownEntity(_))));
        assert!(f.graph.is_retired(lone));

        let a = f.text("a");
        let l = f.nav(&[a], &[s]).unwrap();
        f.graph.delete_entity(l).unwrap();
        assert!(f.graph.links_of(a, Direction::Any, None).unwrap().is_empty());
        f.graph.delete_entity(s).unwrap();
        f.graph.delete_entity(r).unwrap();
    }
}
