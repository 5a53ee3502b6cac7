//! The two ways the CLI reaches a store: opening the directory itself, or
//! talking to a running service.

use std::fmt;
use std::time::Duration;

use fluid_core::{
    Direction, DocumentChild, Entity, EntityId, EntityRef, FederationClient, Fingerprint, LinkKind, MediaType,
    PropertyMap, RenderOptions, RenderTree, RightsRequest, Store, UserId,
};
use fluid_service::wire::NewResource;
use fluid_service::{Client, ClientError, ServiceConfig};

#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        CliError {
            code: code.to_owned(),
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl From<fluid_core::Error> for CliError {
    fn from(e: fluid_core::Error) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait Backend {
    fn put_content(&self, bytes: &[u8]) -> CliResult<Fingerprint>;
    fn create_resource(&self, media_type: MediaType, content: Option<Fingerprint>, name: &str) -> CliResult<EntityId>;
    fn create_selector(&self, resource: EntityId, start: usize, end: usize) -> CliResult<EntityId>;
    fn create_link(
        &self,
        kind: LinkKind,
        sources: Vec<EntityRef>,
        targets: Vec<EntityRef>,
        properties: PropertyMap,
    ) -> CliResult<EntityId>;
    fn create_document(&self, name: &str, children: &[DocumentChild]) -> CliResult<EntityId>;
    fn entity(&self, id: EntityId) -> CliResult<Entity>;
    fn links_of(&self, id: EntityId, direction: Direction, kind: Option<LinkKind>) -> CliResult<Vec<EntityId>>;
    fn render(&self, document: EntityId, options: &RenderOptions) -> CliResult<RenderTree>;
    fn create_user(&self, name: &str) -> CliResult<(UserId, String)>;
    fn set_rights(&self, entity: EntityId, request: RightsRequest) -> CliResult<()>;
}

/// A store directory opened in-process. The token, if any, is resolved
/// against the store's users just as the service would.
pub struct Embedded {
    store: Store,
    token: Option<String>,
}

impl Embedded {
    pub fn open(config: &ServiceConfig, token: Option<String>) -> CliResult<Self> {
        let uri = config.advertised_uri.clone();
        let mut store = Store::open(&config.store_path, uri.clone())?;
        if uri.is_some() {
            store = store.with_federation(FederationClient::http(
                uri,
                Duration::from_secs(config.federation_ttl_seconds),
            ));
        }
        Ok(Embedded { store, token })
    }

    fn actor(&self) -> CliResult<Option<UserId>> {
        match &self.token {
            None => Ok(None),
            Some(t) => self
                .store
                .authenticate(t)
                .map(|u| Some(u.id))
                .ok_or_else(|| fluid_core::Error::Unauthenticated.into()),
        }
    }
}

impl Drop for Embedded {
    fn drop(&mut self) {
        let _ = self.store.flush();
    }
}

impl Backend for Embedded {
    fn put_content(&self, bytes: &[u8]) -> CliResult<Fingerprint> {
        Ok(self.store.put_content(bytes)?)
    }

    fn create_resource(&self, media_type: MediaType, content: Option<Fingerprint>, name: &str) -> CliResult<EntityId> {
        Ok(self
            .store
            .create_resource(media_type, content, name, PropertyMap::new())?)
    }

    fn create_selector(&self, resource: EntityId, start: usize, end: usize) -> CliResult<EntityId> {
        Ok(self.store.create_selector(
            resource,
            fluid_core::CharRange::new(start, end),
            PropertyMap::new(),
        )?)
    }

    fn create_link(
        &self,
        kind: LinkKind,
        sources: Vec<EntityRef>,
        targets: Vec<EntityRef>,
        properties: PropertyMap,
    ) -> CliResult<EntityId> {
        Ok(self.store.create_link(kind, sources, targets, properties)?)
    }

    fn create_document(&self, name: &str, children: &[DocumentChild]) -> CliResult<EntityId> {
        Ok(self.store.create_document(name, children, PropertyMap::new())?)
    }

    fn entity(&self, id: EntityId) -> CliResult<Entity> {
        Ok(self.store.entity_for(id, self.actor()?)?)
    }

    fn links_of(&self, id: EntityId, direction: Direction, kind: Option<LinkKind>) -> CliResult<Vec<EntityId>> {
        let user = self.actor()?;
        let snap = self.store.snapshot();
        if !snap.can_read(user, id)? {
            return Err(fluid_core::Error::Forbidden(id).into());
        }
        Ok(snap
            .graph
            .links_of(id, direction, kind)?
            .into_iter()
            .filter(|l| snap.can_read(user, *l).unwrap_or(false))
            .collect())
    }

    fn render(&self, document: EntityId, options: &RenderOptions) -> CliResult<RenderTree> {
        let options = RenderOptions {
            user: self.actor()?,
            ..options.clone()
        };
        Ok(self.store.render(&document.into(), &options)?)
    }

    fn create_user(&self, name: &str) -> CliResult<(UserId, String)> {
        if self.actor()?.is_none() && self.store.user_count() > 0 {
            return Err(fluid_core::Error::Unauthenticated.into());
        }
        let u = self.store.create_user(name)?;
        Ok((u.id, u.token))
    }

    fn set_rights(&self, entity: EntityId, request: RightsRequest) -> CliResult<()> {
        self.store.set_rights(entity, request, self.actor()?)?;
        Ok(())
    }
}

pub struct Remote {
    client: Client,
}

impl Remote {
    pub fn new(url: &str, token: Option<String>) -> Self {
        Remote {
            client: Client::new(url, token),
        }
    }
}

impl Backend for Remote {
    fn put_content(&self, bytes: &[u8]) -> CliResult<Fingerprint> {
        Ok(self.client.put_content(bytes)?)
    }

    fn create_resource(&self, media_type: MediaType, content: Option<Fingerprint>, name: &str) -> CliResult<EntityId> {
        Ok(self.client.create_resource(&NewResource {
            media_type,
            content,
            name: name.to_owned(),
            properties: PropertyMap::new(),
        })?)
    }

    fn create_selector(&self, resource: EntityId, start: usize, end: usize) -> CliResult<EntityId> {
        Ok(self.client.create_selector(resource, start, end)?)
    }

    fn create_link(
        &self,
        kind: LinkKind,
        sources: Vec<EntityRef>,
        targets: Vec<EntityRef>,
        properties: PropertyMap,
    ) -> CliResult<EntityId> {
        Ok(self.client.create_link(kind, sources, targets, properties)?)
    }

    fn create_document(&self, name: &str, children: &[DocumentChild]) -> CliResult<EntityId> {
        Ok(self.client.create_document(name, children, PropertyMap::new())?)
    }

    fn entity(&self, id: EntityId) -> CliResult<Entity> {
        Ok(self.client.entity(id)?)
    }

    fn links_of(&self, id: EntityId, direction: Direction, kind: Option<LinkKind>) -> CliResult<Vec<EntityId>> {
        Ok(self.client.links_of(id, direction, kind)?)
    }

    fn render(&self, document: EntityId, options: &RenderOptions) -> CliResult<RenderTree> {
        Ok(self.client.render(document, options)?)
    }

    fn create_user(&self, name: &str) -> CliResult<(UserId, String)> {
        let u = self.client.create_user(name)?;
        Ok((u.id, u.token))
    }

    fn set_rights(&self, entity: EntityId, request: RightsRequest) -> CliResult<()> {
        Ok(self.client.set_rights(entity, &request)?)
    }
}
