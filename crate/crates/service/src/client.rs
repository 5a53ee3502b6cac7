//! Blocking client for the REST interface.

use std::time::Duration;

use fluid_core::{
    Direction, DocumentChild, Entity, EntityId, EntityRef, Fingerprint, LinkKind, Mode, PropertyMap, RenderOptions,
    RenderTree, RightsRequest, UserId,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::ErrorBody;
use crate::wire::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("{message}")]
    Api { status: u16, code: String, message: String },
    #[error("{0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    /// Stable error code, matching the core error codes for API errors.
    pub fn code(&self) -> &str {
        match self {
            ClientError::Api { code, .. } => code,
            ClientError::Transport(_) => "store_unreachable",
            ClientError::Decode(_) => "protocol_error",
        }
    }

    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

pub type ClientResult<T> = Result<T, ClientError>;

pub struct Client {
    base: String,
    token: Option<String>,
    agent: ureq::Agent,
}

/// Query parameters for a render request; the user comes from the token.
pub fn render_query(options: &RenderOptions) -> Vec<(String, String)> {
    let mut q = vec![
        (
            "mode".to_owned(),
            match options.mode {
                Mode::Snapshot => "snapshot",
                Mode::Live => "live",
            }
            .to_owned(),
        ),
        ("max_depth".to_owned(), options.max_depth.to_string()),
    ];
    for (k, v) in options.context.iter() {
        q.push((format!("{}{k}", crate::api::CTX_PARAM_PREFIX), v.to_owned()));
    }
    q
}

impl Client {
    pub fn new(base: &str, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_connect(Some(Duration::from_secs(5)))
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Client {
            base: base.trim_end_matches('/').to_owned(),
            token,
            agent,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn auth<B>(&self, req: ureq::RequestBuilder<B>) -> ureq::RequestBuilder<B> {
        match &self.token {
            Some(t) => req.header("Authorization", format!("Bearer {t}")),
            None => req,
        }
    }

    fn finish(
        result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> ClientResult<(u16, Vec<u8>)> {
        let mut resp = result.map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(crate::api::MAX_BODY as u64)
            .read_to_vec()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        if (200..300).contains(&status) {
            return Ok((status, body));
        }
        match serde_json::from_slice::<ErrorBody>(&body) {
            Ok(e) => Err(ClientError::Api {
                status,
                code: e.code,
                message: e.message,
            }),
            Err(_) => Err(ClientError::Decode(format!(
                "status {status}: {}",
                String::from_utf8_lossy(&body)
            ))),
        }
    }

    fn decode<T: DeserializeOwned>(body: &[u8]) -> ClientResult<T> {
        serde_json::from_slice(body).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn get_json<T: DeserializeOwned>(&self, path: &str, query: &[(String, String)]) -> ClientResult<T> {
        let mut req = self.auth(self.agent.get(self.url(path)));
        for (k, v) in query {
            req = req.query(k, v);
        }
        let (_, body) = Self::finish(req.call())?;
        Self::decode(&body)
    }

    fn post_json<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> ClientResult<T> {
        let req = self.auth(self.agent.post(self.url(path)));
        let (_, body) = Self::finish(req.send_json(body))?;
        Self::decode(&body)
    }

    fn put_json<B: Serialize>(&self, path: &str, body: &B) -> ClientResult<()> {
        let req = self.auth(self.agent.put(self.url(path)));
        Self::finish(req.send_json(body)).map(drop)
    }

    pub fn put_content(&self, bytes: &[u8]) -> ClientResult<Fingerprint> {
        let req = self.auth(self.agent.post(self.url("/content")));
        let (_, body) = Self::finish(req.send(bytes))?;
        Ok(Self::decode::<FingerprintBody>(&body)?.fingerprint)
    }

    pub fn content(&self, fp: &Fingerprint) -> ClientResult<Vec<u8>> {
        let req = self.auth(self.agent.get(self.url(&format!("/content/{fp}"))));
        Ok(Self::finish(req.call())?.1)
    }

    pub fn create_resource(&self, req: &NewResource) -> ClientResult<EntityId> {
        Ok(self.post_json::<_, IdBody>("/resources", req)?.id)
    }

    pub fn entity(&self, id: EntityId) -> ClientResult<Entity> {
        self.get_json(&format!("/entities/{id}"), &[])
    }

    pub fn create_selector(&self, resource: EntityId, start: usize, end: usize) -> ClientResult<EntityId> {
        let req = NewSelector {
            resource,
            start,
            end,
            properties: PropertyMap::new(),
        };
        Ok(self.post_json::<_, IdBody>("/selectors", &req)?.id)
    }

    pub fn create_link(
        &self,
        kind: LinkKind,
        sources: Vec<EntityRef>,
        targets: Vec<EntityRef>,
        properties: PropertyMap,
    ) -> ClientResult<EntityId> {
        let req = NewLink {
            kind,
            sources,
            targets,
            properties,
        };
        Ok(self.post_json::<_, IdBody>("/links", &req)?.id)
    }

    pub fn links_of(&self, id: EntityId, direction: Direction, kind: Option<LinkKind>) -> ClientResult<Vec<EntityId>> {
        let dir = match direction {
            Direction::Any => "any",
            Direction::Incoming => "incoming",
            Direction::Outgoing => "outgoing",
        };
        let mut q = vec![("direction".to_owned(), dir.to_owned())];
        if let Some(k) = kind {
            q.push(("kind".to_owned(), k.as_str().to_owned()));
        }
        Ok(self.get_json::<LinksBody>(&format!("/entities/{id}/links"), &q)?.links)
    }

    pub fn create_document(
        &self,
        name: &str,
        children: &[DocumentChild],
        properties: PropertyMap,
    ) -> ClientResult<EntityId> {
        let req = NewDocument {
            name: name.to_owned(),
            children: children.iter().map(ChildBody::from).collect(),
            properties,
        };
        Ok(self.post_json::<_, IdBody>("/documents", &req)?.id)
    }

    /// Renders with the options' mode, depth and context; `options.user` is
    /// ignored in favour of the client's token.
    pub fn render(&self, document: EntityId, options: &RenderOptions) -> ClientResult<RenderTree> {
        self.get_json(&format!("/documents/{document}/render"), &render_query(options))
    }

    pub fn set_rights(&self, entity: EntityId, req: &RightsRequest) -> ClientResult<()> {
        self.put_json(&format!("/entities/{entity}/rights"), req)
    }

    pub fn update_content(&self, resource: EntityId, fingerprint: Fingerprint) -> ClientResult<()> {
        self.put_json(
            &format!("/resources/{resource}/content"),
            &FingerprintBody { fingerprint },
        )
    }

    pub fn create_user(&self, name: &str) -> ClientResult<CreatedUser> {
        self.post_json("/users", &NewUser { name: name.to_owned() })
    }

    pub fn set_preferences(&self, user: UserId, preferences: &PropertyMap) -> ClientResult<()> {
        self.put_json(&format!("/users/{user}/preferences"), preferences)
    }

    pub fn delete(&self, id: EntityId) -> ClientResult<()> {
        let req = self.auth(self.agent.delete(self.url(&format!("/entities/{id}"))));
        Self::finish(req.call()).map(drop)
    }
}
