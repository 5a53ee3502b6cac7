//! A store instance: entity graph, users and rights, content, journal and
//! federation behind one single-writer facade.
//!
//! Readers take an immutable [`StoreState`] snapshot and never block the
//! writer for longer than an `Arc` clone; the writer copies the state only
//! when a snapshot is still alive.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};

use crate::access::{AccessRegistry, RightsRequest, RightsSpec, User};
use crate::adapt::{adapt_render, Context};
use crate::content::{ContentStore, Fingerprint};
use crate::error::{Error, Result};
use crate::federation::FederationClient;
use crate::graph::Graph;
use crate::id::{EntityId, EntityRef, StoreUri, UserId};
use crate::journal::{Event, Journal, Table};
use crate::model::{CharRange, Direction, Entity, LinkKind, MediaType, PropertyMap, ORDER_KEY};
use crate::render::{RenderOptions, RenderTree, Renderer};

/// Minimum worker count for renders that touch peers; fetches spend their
/// time waiting on the network, not the CPU.
#[cfg(feature = "parallel")]
const FETCH_THREADS: usize = 8;

#[cfg(feature = "parallel")]
fn fetch_pool() -> &'static rayon::ThreadPool {
    static POOL: std::sync::OnceLock<rayon::ThreadPool> = std::sync::OnceLock::new();
    POOL.get_or_init(|| {
        let n = std::thread::available_parallelism().map_or(1, |n| n.get()).max(FETCH_THREADS);
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .thread_name(|i| format!("fluid-render-{i}"))
            .build()
            .expect("render pool")
    })
}

#[derive(Clone, Debug, Default)]
pub struct StoreState {
    pub graph: Graph,
    pub access: AccessRegistry,
    rev: u64,
}

impl StoreState {
    fn apply(&mut self, rev: u64, event: Event) {
        match event {
            Event::PutEntity { entity } => self.graph.apply_put(entity, rev),
            Event::DeleteEntity { id } => {
                self.graph.apply_delete(id);
                self.access.remove_rights(id);
            }
            Event::PutUser { user } => self.access.apply_user(user),
            Event::PutRights { spec } => self.access.apply_rights(spec),
        }
        self.rev = self.rev.max(rev);
    }

    pub fn can_read(&self, user: Option<UserId>, entity: EntityId) -> Result<bool> {
        self.access.can_read(&self.graph, user, entity)
    }

    pub fn revision(&self) -> u64 {
        self.rev
    }
}

/// One open write: events are journaled, then applied, one at a time.
struct Tx<'a> {
    state: &'a mut StoreState,
    journal: Option<&'a mut Journal>,
}

impl Tx<'_> {
    fn commit(&mut self, table: Table, event: Event) -> Result<()> {
        let rev = self.state.rev + 1;
        if let Some(j) = self.journal.as_deref_mut() {
            j.append(table, rev, &event)?;
        }
        self.state.apply(rev, event);
        Ok(())
    }

    fn put(&mut self, entity: Entity) -> Result<()> {
        self.commit(Table::for_entity(&entity), Event::PutEntity { entity })
    }
}

/// A child of a document: the entity and its structural order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentChild {
    pub child: EntityRef,
    pub order: i64,
}

pub struct Store {
    state: RwLock<Arc<StoreState>>,
    content: ContentStore,
    journal: Option<Mutex<Journal>>,
    federation: Option<FederationClient>,
    root: Option<PathBuf>,
}

impl Store {
    pub fn in_memory(local_uri: Option<StoreUri>) -> Self {
        Store {
            state: RwLock::new(Arc::new(StoreState {
                graph: Graph::new(local_uri),
                ..Default::default()
            })),
            content: ContentStore::in_memory(),
            journal: None,
            federation: None,
            root: None,
        }
    }

    /// Opens or initializes a store directory (`blobs/` and `tables/`).
    pub fn open(dir: impl AsRef<Path>, local_uri: Option<StoreUri>) -> Result<Self> {
        let dir = dir.as_ref();
        let content = ContentStore::open(dir.join("blobs"))?;
        let (journal, records) = Journal::open(dir.join("tables"))?;
        let mut state = StoreState {
            graph: Graph::new(local_uri),
            ..Default::default()
        };
        for rec in records {
            state.apply(rec.rev, rec.event);
        }
        Ok(Store {
            state: RwLock::new(Arc::new(state)),
            content,
            journal: Some(Mutex::new(journal)),
            federation: None,
            root: Some(dir.to_path_buf()),
        })
    }

    pub fn with_federation(mut self, client: FederationClient) -> Self {
        self.federation = Some(client);
        self
    }

    pub fn federation(&self) -> Option<&FederationClient> {
        self.federation.as_ref()
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn local_uri(&self) -> Option<StoreUri> {
        self.snapshot().graph.local_uri().cloned()
    }

    pub fn content(&self) -> &ContentStore {
        &self.content
    }

    /// A consistent, immutable view of the graph, users and rights.
    pub fn snapshot(&self) -> Arc<StoreState> {
        self.state.read().clone()
    }

    fn write<T>(&self, f: impl FnOnce(&mut Tx<'_>) -> Result<T>) -> Result<T> {
        let mut guard = self.state.write();
        let mut journal = self.journal.as_ref().map(|j| j.lock());
        let mut tx = Tx {
            state: Arc::make_mut(&mut guard),
            journal: journal.as_deref_mut(),
        };
        f(&mut tx)
    }

    /// Flushes journal tables to disk.
    pub fn flush(&self) -> Result<()> {
        if let Some(j) = &self.journal {
            j.lock().sync()?;
        }
        Ok(())
    }

    // ---- content ----------------------------------------------------------

    pub fn put_content(&self, bytes: &[u8]) -> Result<Fingerprint> {
        self.content.put(bytes)
    }

    /// Blob bytes, provided `user` may read at least one entity that cites
    /// them (or none does).
    pub fn content_for(&self, fp: &Fingerprint, user: Option<UserId>) -> Result<(Vec<u8>, Option<MediaType>)> {
        let snap = self.snapshot();
        let mut citing = Vec::new();
        let mut media = None;
        for e in snap.graph.entities() {
            match e {
                Entity::Resource(r) if r.content == Some(*fp) => {
                    media.get_or_insert(r.media_type);
                    citing.push(r.id);
                }
                Entity::Selector(s) if s.bound_fingerprint == *fp => {
                    media.get_or_insert(MediaType::Text);
                    citing.push(s.id);
                }
                _ => {}
            }
        }
        if !citing.is_empty()
            && !citing
                .iter()
                .any(|id| snap.can_read(user, *id).unwrap_or(false))
        {
            return Err(Error::Forbidden(citing[0]));
        }
        Ok((self.content.get(fp)?, media))
    }

    // ---- entities ---------------------------------------------------------

    pub fn create_resource(
        &self,
        media_type: MediaType,
        content: Option<Fingerprint>,
        name: &str,
        properties: PropertyMap,
    ) -> Result<EntityId> {
        self.write(|tx| {
            let r = tx
                .state
                .graph
                .plan_resource(&self.content, media_type, content, name, properties)?;
            let id = r.id;
            tx.put(Entity::Resource(r))?;
            Ok(id)
        })
    }

    pub fn create_selector(
        &self,
        resource: EntityId,
        range: CharRange,
        properties: PropertyMap,
    ) -> Result<EntityId> {
        self.write(|tx| {
            let s = tx
                .state
                .graph
                .plan_selector(&self.content, resource, range, properties)?;
            let id = s.id;
            tx.put(Entity::Selector(s))?;
            Ok(id)
        })
    }

    pub fn create_link(
        &self,
        kind: LinkKind,
        sources: Vec<EntityRef>,
        targets: Vec<EntityRef>,
        properties: PropertyMap,
    ) -> Result<EntityId> {
        self.write(|tx| {
            let l = tx.state.graph.plan_link(kind, sources, targets, properties)?;
            let id = l.id;
            tx.put(Entity::Link(l))?;
            Ok(id)
        })
    }

    /// Creates a composite resource and one structural link per child.
    pub fn create_document(
        &self,
        name: &str,
        children: &[DocumentChild],
        properties: PropertyMap,
    ) -> Result<EntityId> {
        self.write(|tx| {
            let own = tx.state.graph.local_uri().cloned();
            for c in children {
                if let Some(id) = c.child.clone().normalized(own.as_ref()).local() {
                    if let Entity::Link(_) = tx.state.graph.entity(id)? {
                        return Err(Error::InvalidEndpoint(format!(
                            "link {id} cannot be a structural child"
                        )));
                    }
                }
            }
            let doc = tx.state.graph.plan_resource(
                &self.content,
                MediaType::Composite,
                None,
                name,
                properties,
            )?;
            let doc_id = doc.id;
            tx.put(Entity::Resource(doc))?;
            for c in children {
                let link = tx.state.graph.plan_link(
                    LinkKind::Structural,
                    vec![doc_id.into()],
                    vec![c.child.clone()],
                    PropertyMap::new().with(ORDER_KEY, c.order.to_string())?,
                )?;
                tx.put(Entity::Link(link))?;
            }
            Ok(doc_id)
        })
    }

    pub fn update_resource_content(
        &self,
        resource: EntityId,
        content: Fingerprint,
        actor: Option<UserId>,
    ) -> Result<()> {
        self.write(|tx| {
            check_write(tx.state, actor, resource)?;
            if let Some(r) = tx
                .state
                .graph
                .plan_update_content(&self.content, resource, content)?
            {
                tx.put(Entity::Resource(r))?;
            }
            Ok(())
        })
    }

    pub fn delete_entity(&self, id: EntityId, actor: Option<UserId>) -> Result<()> {
        self.write(|tx| {
            tx.state.graph.check_delete(id)?;
            check_write(tx.state, actor, id)?;
            let table = Table::for_entity(tx.state.graph.entity(id)?);
            tx.commit(table, Event::DeleteEntity { id })
        })
    }

    pub fn entity(&self, id: EntityId) -> Result<Entity> {
        self.snapshot().graph.entity(id).cloned()
    }

    /// The entity record if `user` may read it.
    pub fn entity_for(&self, id: EntityId, user: Option<UserId>) -> Result<Entity> {
        let snap = self.snapshot();
        let e = snap.graph.entity(id)?.clone();
        if !snap.can_read(user, id)? {
            return Err(Error::Forbidden(id));
        }
        Ok(e)
    }

    pub fn links_of(
        &self,
        id: EntityId,
        direction: Direction,
        kind: Option<LinkKind>,
    ) -> Result<Vec<EntityId>> {
        self.snapshot().graph.links_of(id, direction, kind)
    }

    pub fn structural_children(&self, id: EntityId) -> Result<Vec<EntityRef>> {
        self.snapshot().graph.structural_children(id)
    }

    // ---- users and rights ---------------------------------------------------

    pub fn create_user(&self, name: &str) -> Result<User> {
        self.write(|tx| {
            let user = tx.state.access.plan_user(name)?;
            tx.commit(Table::Users, Event::PutUser { user: user.clone() })?;
            Ok(user)
        })
    }

    pub fn user_count(&self) -> usize {
        self.snapshot().access.user_count()
    }

    pub fn authenticate(&self, token: &str) -> Option<User> {
        self.snapshot().access.authenticate(token).cloned()
    }

    pub fn user_by_name(&self, name: &str) -> Option<User> {
        self.snapshot().access.user_by_name(name).cloned()
    }

    pub fn set_preferences(&self, user: UserId, preferences: PropertyMap) -> Result<()> {
        self.write(|tx| {
            let mut u = tx.state.access.user(user).cloned().ok_or(Error::UnknownUser)?;
            u.preferences = preferences;
            tx.commit(Table::Users, Event::PutUser { user: u })
        })
    }

    pub fn set_rights(
        &self,
        entity: EntityId,
        request: RightsRequest,
        actor: Option<UserId>,
    ) -> Result<RightsSpec> {
        self.write(|tx| {
            let spec = tx
                .state
                .access
                .plan_rights(&tx.state.graph, entity, request, actor)?;
            tx.commit(Table::Rights, Event::PutRights { spec: spec.clone() })?;
            Ok(spec)
        })
    }

    pub fn can_read(&self, user: Option<UserId>, entity: EntityId) -> Result<bool> {
        self.snapshot().can_read(user, entity)
    }

    // ---- rendering ----------------------------------------------------------

    /// Stored preferences of `user` as `user.pref.*` context keys, overlaid
    /// by the request context.
    pub fn effective_context(&self, user: Option<UserId>, request: &Context) -> Context {
        let snap = self.snapshot();
        let mut ctx = Context::new();
        if let Some(u) = user.and_then(|u| snap.access.user(u)) {
            for (k, v) in u.preferences.iter() {
                let _ = ctx.insert(format!("user.pref.{k}"), v);
            }
        }
        ctx.merged(request)
    }

    /// Expand, adapt to context, then filter for the requesting user.
    pub fn render(&self, document: &EntityRef, options: &RenderOptions) -> Result<RenderTree> {
        let snap = self.snapshot();
        let mut renderer = Renderer::new(&snap.graph, &self.content)
            .with_mode(options.mode)
            .with_max_depth(options.max_depth);
        if let Some(f) = &self.federation {
            renderer = renderer.with_remote(f);
        }
        #[cfg(feature = "parallel")]
        let raw = if self.federation.is_some() {
            fetch_pool().install(|| renderer.render(document))?
        } else {
            renderer.render(document)?
        };
        #[cfg(not(feature = "parallel"))]
        let raw = renderer.render(document)?;
        let context = self.effective_context(options.user, &options.context);
        let adapted = adapt_render(&raw, &context, &snap.graph);
        Ok(snap.access.filter_render(&adapted, options.user, &snap.graph))
    }
}

fn check_write(state: &StoreState, actor: Option<UserId>, entity: EntityId) -> Result<()> {
    if state.access.can_write(&state.graph, actor, entity)? {
        Ok(())
    } else if actor.is_none() {
        Err(Error::Unauthenticated)
    } else {
        Err(Error::Forbidden(entity))
    }
}
