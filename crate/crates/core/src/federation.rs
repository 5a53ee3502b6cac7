//! Pull-only resolution of entities and content hosted by peer stores.
//!
//! Entity records are cached for a TTL; blobs are cached forever once their
//! digest has been checked. Concurrent requests for the same key share one
//! network fetch.

use std::collections::HashMap;
use std::hash::Hash;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use serde::Deserialize;

use crate::content::{verify, Fingerprint};
use crate::error::{Error, Result};
use crate::id::{EntityId, GlobalRef, StoreUri};
use crate::model::{Entity, Link};
use crate::render::RemoteResolver;

pub const DEFAULT_TTL: Duration = Duration::from_secs(30);
/// Header naming the requesting store.
pub const STORE_HEADER: &str = "X-Fluid-Store";

/// Raw GET against a peer. Implementations report transport failures as
/// [`Error::StoreUnreachable`] and otherwise return status and body.
pub trait Transport: Send + Sync {
    fn get(&self, store: &StoreUri, path: &str) -> Result<(u16, Vec<u8>)>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
    own: Option<StoreUri>,
}

impl HttpTransport {
    pub fn new(own: Option<StoreUri>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_connect(Some(Duration::from_secs(2)))
            .timeout_global(Some(Duration::from_secs(10)))
            .build()
            .into();
        HttpTransport { agent, own }
    }
}

impl Transport for HttpTransport {
    fn get(&self, store: &StoreUri, path: &str) -> Result<(u16, Vec<u8>)> {
        let mut req = self.agent.get(store.join(path));
        if let Some(own) = &self.own {
            req = req.header(STORE_HEADER, own.as_str());
        }
        let mut resp = req
            .call()
            .map_err(|e| Error::StoreUnreachable(store.clone(), e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| Error::StoreUnreachable(store.clone(), e.to_string()))?;
        Ok((status, body))
    }
}

type Slot<V> = Arc<Mutex<Option<(Instant, V)>>>;

struct Cache<K, V> {
    slots: Mutex<HashMap<K, Slot<V>>>,
}

impl<K: Eq + Hash + Clone, V: Clone> Cache<K, V> {
    fn new() -> Self {
        Cache {
            slots: Mutex::new(HashMap::new()),
        }
    }

    fn get_or_fetch(
        &self,
        key: &K,
        ttl: Option<Duration>,
        fetch: impl FnOnce() -> Result<V>,
    ) -> Result<V> {
        let slot = self.slots.lock().entry(key.clone()).or_default().clone();
        let mut guard = slot.lock();
        if let Some((at, v)) = guard.as_ref() {
            if ttl.is_none_or(|ttl| at.elapsed() < ttl) {
                return Ok(v.clone());
            }
        }
        let v = fetch()?;
        *guard = Some((Instant::now(), v.clone()));
        Ok(v)
    }
}

#[derive(Deserialize)]
struct LinksBody {
    links: Vec<EntityId>,
}

pub struct FederationClient {
    transport: Box<dyn Transport>,
    ttl: Duration,
    requests: AtomicU64,
    entities: Cache<GlobalRef, Entity>,
    structural: Cache<GlobalRef, Vec<Link>>,
    blobs: Cache<(StoreUri, Fingerprint), Arc<[u8]>>,
}

impl FederationClient {
    pub fn new(transport: impl Transport + 'static, ttl: Duration) -> Self {
        FederationClient {
            transport: Box::new(transport),
            ttl,
            requests: AtomicU64::new(0),
            entities: Cache::new(),
            structural: Cache::new(),
            blobs: Cache::new(),
        }
    }

    pub fn http(own: Option<StoreUri>, ttl: Duration) -> Self {
        Self::new(HttpTransport::new(own), ttl)
    }

    /// Network requests issued so far.
    pub fn network_calls(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    fn get(&self, store: &StoreUri, path: &str) -> Result<(u16, Vec<u8>)> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        self.transport.get(store, path)
    }

    fn get_json<T: for<'de> Deserialize<'de>>(
        &self,
        store: &StoreUri,
        path: &str,
        not_found: impl FnOnce() -> Error,
    ) -> Result<T> {
        let (status, body) = self.get(store, path)?;
        check_status(store, status, not_found)?;
        serde_json::from_slice(&body)
            .map_err(|e| Error::ProtocolError(format!("{}{path}: {e}", store)))
    }

    pub fn fetch_entity(&self, r: &GlobalRef) -> Result<Entity> {
        self.entities.get_or_fetch(r, Some(self.ttl), || {
            let entity: Entity = self.get_json(&r.store, &format!("/entities/{}", r.entity), || {
                Error::RemoteNotFound(r.clone())
            })?;
            if entity.id() != r.entity {
                return Err(Error::ProtocolError(format!(
                    "asked for {} but received {}",
                    r.entity,
                    entity.id()
                )));
            }
            Ok(entity)
        })
    }

    pub fn fetch_content(&self, store: &StoreUri, fp: &Fingerprint) -> Result<Vec<u8>> {
        let key = (store.clone(), *fp);
        self.blobs
            .get_or_fetch(&key, None, || {
                let (status, body) = self.get(store, &format!("/content/{fp}"))?;
                check_status(store, status, || Error::RemoteContentNotFound(store.clone(), *fp))?;
                if !verify(fp, &body) {
                    return Err(Error::IntegrityMismatch {
                        store: store.clone(),
                        fingerprint: *fp,
                    });
                }
                Ok(Arc::from(body))
            })
            .map(|b| b.to_vec())
    }

    pub fn fetch_structural_links(&self, r: &GlobalRef) -> Result<Vec<Link>> {
        self.structural.get_or_fetch(r, Some(self.ttl), || {
            let body: LinksBody = self.get_json(
                &r.store,
                &format!("/entities/{}/links?direction=outgoing&kind=structural", r.entity),
                || Error::RemoteNotFound(r.clone()),
            )?;
            body.links
                .into_iter()
                .map(|id| {
                    let link_ref = GlobalRef {
                        store: r.store.clone(),
                        entity: id,
                    };
                    match self.fetch_entity(&link_ref)? {
                        Entity::Link(l) => Ok(l),
                        other => Err(Error::ProtocolError(format!(
                            "{id} listed as a link but is a {}",
                            other.kind_name()
                        ))),
                    }
                })
                .collect()
        })
    }
}

fn check_status(store: &StoreUri, status: u16, not_found: impl FnOnce() -> Error) -> Result<()> {
    match status {
        200..=299 => Ok(()),
        404 => Err(not_found()),
        401 | 403 => Err(Error::RemoteForbidden(store.clone())),
        502 => Err(Error::ProtocolError(format!("{store} reported a bad gateway"))),
        s => Err(Error::ProtocolError(format!("{store} answered with status {s}"))),
    }
}

impl RemoteResolver for FederationClient {
    fn entity(&self, r: &GlobalRef) -> Result<Entity> {
        self.fetch_entity(r)
    }

    fn content(&self, store: &StoreUri, fp: &Fingerprint) -> Result<Vec<u8>> {
        self.fetch_content(store, fp)
    }

    fn structural_links(&self, r: &GlobalRef) -> Result<Vec<Link>> {
        self.fetch_structural_links(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MediaType, PropertyMap, Resource};

    /// Serves canned responses keyed by path.
    struct Canned {
        responses: Mutex<HashMap<String, (u16, Vec<u8>)>>,
        up: std::sync::atomic::AtomicBool,
    }

    impl Canned {
        fn new() -> Arc<Self> {
            Arc::new(Canned {
                responses: Mutex::new(HashMap::new()),
                up: true.into(),
            })
        }
        fn serve(&self, path: impl Into<String>, status: u16, body: impl Into<Vec<u8>>) {
            self.responses.lock().insert(path.into(), (status, body.into()));
        }
    }

    impl Transport for Arc<Canned> {
        fn get(&self, store: &StoreUri, path: &str) -> Result<(u16, Vec<u8>)> {
            if !self.up.load(Ordering::SeqCst) {
                return Err(Error::StoreUnreachable(store.clone(), "down".into()));
            }
            Ok(self
                .responses
                .lock()
                .get(path)
                .cloned()
                .unwrap_or((404, b"{}".to_vec())))
        }
    }

    fn peer() -> StoreUri {
        StoreUri::parse("http://peer:7").unwrap()
    }

    #[test]
    fn content_is_verified_and_cached_forever() {
        let canned = Canned::new();
        let fp = Fingerprint::of(b"snippet");
        canned.serve(format!("/content/{fp}"), 200, "snippet");
        let client = FederationClient::new(canned.clone(), Duration::ZERO);
        assert_eq!(client.fetch_content(&peer(), &fp).unwrap(), b"snippet");
        assert_eq!(client.network_calls(), 1);
        canned.up.store(false, Ordering::SeqCst);
        assert_eq!(client.fetch_content(&peer(), &fp).unwrap(), b"snippet");
        assert_eq!(client.network_calls(), 1);
    }

    #[test]
    fn tampered_content_is_rejected_and_not_cached() {
        let canned = Canned::new();
        let fp = Fingerprint::of(b"snippet");
        canned.serve(format!("/content/{fp}"), 200, "snippeT");
        let client = FederationClient::new(canned.clone(), DEFAULT_TTL);
        assert!(matches!(
            client.fetch_content(&peer(), &fp),
            Err(Error::IntegrityMismatch { .. })
        ));
        canned.serve(format!("/content/{fp}"), 200, "snippet");
        assert_eq!(client.fetch_content(&peer(), &fp).unwrap(), b"snippet");
    }

    #[test]
    fn entity_fetch_respects_ttl_and_maps_errors() {
        let canned = Canned::new();
        let id = EntityId::random();
        let record = Entity::Resource(Resource {
            id,
            media_type: MediaType::Composite,
            content: None,
            name: "remote".into(),
            properties: PropertyMap::new(),
        });
        canned.serve(format!("/entities/{id}"), 200, serde_json::to_vec(&record).unwrap());
        let r = GlobalRef { store: peer(), entity: id };

        let cached = FederationClient::new(canned.clone(), DEFAULT_TTL);
        assert_eq!(cached.fetch_entity(&r).unwrap(), record);
        cached.fetch_entity(&r).unwrap();
        assert_eq!(cached.network_calls(), 1);

        let uncached = FederationClient::new(canned.clone(), Duration::ZERO);
        uncached.fetch_entity(&r).unwrap();
        uncached.fetch_entity(&r).unwrap();
        assert_eq!(uncached.network_calls(), 2);

        let missing = GlobalRef { store: peer(), entity: EntityId::random() };
        assert!(matches!(uncached.fetch_entity(&missing), Err(Error::RemoteNotFound(_))));

        canned.serve(format!("/entities/{}", missing.entity), 200, "not json");
        assert!(matches!(uncached.fetch_entity(&missing), Err(Error::ProtocolError(_))));

        canned.serve(format!("/entities/{}", missing.entity), 403, "{}");
        assert!(matches!(uncached.fetch_entity(&missing), Err(Error::RemoteForbidden(_))));

        canned.up.store(false, Ordering::SeqCst);
        assert!(matches!(uncached.fetch_entity(&r), Err(Error::StoreUnreachable(..))));
    }

    #[test]
    fn concurrent_fetches_coalesce() {
        struct Slow(AtomicU64);
        impl Transport for Arc<Slow> {
            fn get(&self, _: &StoreUri, _: &str) -> Result<(u16, Vec<u8>)> {
                self.0.fetch_add(1, Ordering::SeqCst);
                std::thread::sleep(Duration::from_millis(50));
                Ok((200, b"x".to_vec()))
            }
        }
        let slow = Arc::new(Slow(AtomicU64::new(0)));
        let client = Arc::new(FederationClient::new(slow.clone(), DEFAULT_TTL));
        let fp = Fingerprint::of(b"x");
        let handles: Vec<_> = (0..6)
            .map(|_| {
                let c = client.clone();
                std::thread::spawn(move || c.fetch_content(&peer(), &fp).unwrap())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), b"x");
        }
        assert_eq!(slow.0.load(Ordering::SeqCst), 1);
    }
}
