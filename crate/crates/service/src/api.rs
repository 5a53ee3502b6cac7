use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use fluid_core::{
    CharRange, Context, Direction, DocumentChild, EntityId, EntityRef, Fingerprint, LinkKind, MediaType,
    Mode, PropertyMap, RenderOptions, RightsRequest, Store, UserId,
};
use serde::de::DeserializeOwned;

use crate::error::ApiError;
use crate::wire::*;

pub const MAX_BODY: usize = 64 * 1024 * 1024;
pub const CTX_PARAM_PREFIX: &str = "ctx.";

#[derive(Clone)]
struct AppState {
    store: Arc<Store>,
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/content", post(post_content))
        .route("/content/{fingerprint}", get(get_content))
        .route("/resources", post(post_resource))
        .route("/resources/{id}/content", put(put_resource_content))
        .route("/entities/{id}", get(get_entity).delete(delete_entity))
        .route("/entities/{id}/links", get(get_links))
        .route("/entities/{id}/rights", put(put_rights))
        .route("/selectors", post(post_selector))
        .route("/links", post(post_link))
        .route("/documents", post(post_document))
        .route("/documents/{id}/render", get(get_render))
        .route("/users", post(post_user))
        .route("/users/{id}/preferences", put(put_preferences))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(AppState { store })
}

fn json_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn parse<T: FromStr<Err = fluid_core::Error>>(s: &str) -> ApiResult<T> {
    s.parse().map_err(|e: fluid_core::Error| ApiError::bad_request(e.to_string()))
}

/// Bearer token to user. No header means anonymous; an unknown token is 401.
fn actor(store: &Store, headers: &HeaderMap) -> ApiResult<Option<UserId>> {
    let Some(value) = headers.get(header::AUTHORIZATION) else {
        return Ok(None);
    };
    let token = value
        .to_str()
        .ok()
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .ok_or_else(|| ApiError::from(fluid_core::Error::Unauthenticated))?;
    store
        .authenticate(token)
        .map(|u| Some(u.id))
        .ok_or_else(|| fluid_core::Error::Unauthenticated.into())
}

fn created<T: serde::Serialize>(location: String, body: T) -> Response {
    let mut resp = (StatusCode::CREATED, Json(body)).into_response();
    if let Ok(v) = HeaderValue::from_str(&location) {
        resp.headers_mut().insert(header::LOCATION, v);
    }
    resp
}

async fn post_content(State(s): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let fp = s.store.put_content(&body)?;
    Ok(created(format!("/content/{fp}"), FingerprintBody { fingerprint: fp }))
}

async fn get_content(
    State(s): State<AppState>,
    Path(fp): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let fp: Fingerprint = parse(&fp)?;
    let user = actor(&s.store, &headers)?;
    let (bytes, media) = s.store.content_for(&fp, user)?;
    let content_type = match media {
        Some(MediaType::Text) => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], bytes).into_response())
}

async fn post_resource(State(s): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: NewResource = json_body(&body)?;
    let id = s
        .store
        .create_resource(req.media_type, req.content, &req.name, req.properties)?;
    Ok(created(format!("/entities/{id}"), IdBody { id }))
}

async fn put_resource_content(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<StatusCode> {
    let id: EntityId = parse(&id)?;
    let user = actor(&s.store, &headers)?;
    let req: FingerprintBody = json_body(&body)?;
    s.store.update_resource_content(id, req.fingerprint, user)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_entity(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let id: EntityId = parse(&id)?;
    let user = actor(&s.store, &headers)?;
    Ok(Json(s.store.entity_for(id, user)?).into_response())
}

async fn delete_entity(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<StatusCode> {
    let id: EntityId = parse(&id)?;
    let user = actor(&s.store, &headers)?;
    s.store.delete_entity(id, user)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_links(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<Vec<(String, String)>>,
    headers: HeaderMap,
) -> ApiResult<Json<LinksBody>> {
    let id: EntityId = parse(&id)?;
    let user = actor(&s.store, &headers)?;
    let mut direction = Direction::Any;
    let mut kind = None;
    for (k, v) in &params {
        match k.as_str() {
            "direction" => direction = parse(v)?,
            "kind" if !v.is_empty() => kind = Some(parse::<LinkKind>(v)?),
            _ => {}
        }
    }
    let snap = s.store.snapshot();
    if !snap.can_read(user, id)? {
        return Err(fluid_core::Error::Forbidden(id).into());
    }
    let links = snap
        .graph
        .links_of(id, direction, kind)?
        .into_iter()
        .filter(|l| snap.can_read(user, *l).unwrap_or(false))
        .collect();
    Ok(Json(LinksBody { links }))
}

async fn put_rights(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<StatusCode> {
    let id: EntityId = parse(&id)?;
    let user = actor(&s.store, &headers)?;
    let req: RightsRequest = json_body(&body)?;
    s.store.set_rights(id, req, user)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn post_selector(State(s): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: NewSelector = json_body(&body)?;
    let id = s
        .store
        .create_selector(req.resource, CharRange::new(req.start, req.end), req.properties)?;
    Ok(created(format!("/entities/{id}"), IdBody { id }))
}

async fn post_link(State(s): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: NewLink = json_body(&body)?;
    let id = s
        .store
        .create_link(req.kind, req.sources, req.targets, req.properties)?;
    Ok(created(format!("/entities/{id}"), IdBody { id }))
}

async fn post_document(State(s): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: NewDocument = json_body(&body)?;
    let children: Vec<DocumentChild> = req.children.into_iter().map(Into::into).collect();
    let id = s.store.create_document(&req.name, &children, req.properties)?;
    Ok(created(format!("/entities/{id}"), IdBody { id }))
}

/// Render options from `mode`, `max_depth` and `ctx.<key>` query parameters.
pub fn render_options(params: &[(String, String)], user: Option<UserId>) -> ApiResult<RenderOptions> {
    let mut opts = RenderOptions {
        user,
        ..Default::default()
    };
    let mut context = Context::new();
    for (k, v) in params {
        match k.as_str() {
            "mode" => opts.mode = parse::<Mode>(v)?,
            "max_depth" => {
                opts.max_depth = v
                    .parse()
                    .map_err(|_| ApiError::bad_request(format!("invalid max_depth {v:?}")))?
            }
            _ => {
                if let Some(key) = k.strip_prefix(CTX_PARAM_PREFIX) {
                    context
                        .insert(key, v.as_str())
                        .map_err(|e| ApiError::bad_request(e.to_string()))?;
                }
            }
        }
    }
    opts.context = context;
    Ok(opts)
}

async fn get_render(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(params): Query<Vec<(String, String)>>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let id: EntityId = parse(&id)?;
    let user = actor(&s.store, &headers)?;
    let opts = render_options(&params, user)?;
    let store = s.store.clone();
    let tree = tokio::task::spawn_blocking(move || store.render(&EntityRef::Local(id), &opts))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(tree).into_response())
}

async fn post_user(
    State(s): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let user = actor(&s.store, &headers)?;
    if user.is_none() && s.store.user_count() > 0 {
        return Err(fluid_core::Error::Unauthenticated.into());
    }
    let req: NewUser = json_body(&body)?;
    let created_user = s.store.create_user(&req.name)?;
    Ok(created(
        format!("/users/{}", created_user.id),
        CreatedUser {
            id: created_user.id,
            token: created_user.token,
        },
    ))
}

async fn put_preferences(
    State(s): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<StatusCode> {
    let id: UserId = parse(&id)?;
    let Some(user) = actor(&s.store, &headers)? else {
        return Err(fluid_core::Error::Unauthenticated.into());
    };
    if user != id {
        return Err(ApiError {
            status: StatusCode::FORBIDDEN,
            code: "forbidden".into(),
            message: "preferences can only be set by their user".into(),
        });
    }
    let prefs: PropertyMap = json_body(&body)?;
    s.store.set_preferences(id, prefs)?;
    Ok(StatusCode::NO_CONTENT)
}
