use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use fluid_core::Error;
use serde::{Deserialize, Serialize};

/// Error body sent to clients: `{"code": "...", "message": "..."}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request".into(),
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal".into(),
            message: message.into(),
        }
    }
}

/// HTTP status for each core error. Total over [`Error`].
pub fn status_of(err: &Error) -> StatusCode {
    use Error::*;
    match err {
        UnknownEntity(_) | RemoteNotFound(_) | RemoteContentNotFound(..) | NotFound(_)
        | UnknownUser => StatusCode::NOT_FOUND,
        EmptyEndpoint
        | BadCardinality(_)
        | RangeOutOfBounds { .. }
        | UnknownFingerprint(_)
        | FingerprintForbiddenForComposite
        | MissingContent(_)
        | NotATextResource(_)
        | InvalidEndpoint(_)
        | InvalidProperty(_)
        | InvalidUtf8
        | WrongLinkKind(_) => StatusCode::UNPROCESSABLE_ENTITY,
        StructuralCycle { .. } | ReferencedEntity { .. } | NameTaken(_) | AmbiguousParent(_) => {
            StatusCode::CONFLICT
        }
        NotOwner(_) | Forbidden(_) | RemoteForbidden(_) => StatusCode::FORBIDDEN,
        Unauthenticated => StatusCode::UNAUTHORIZED,
        IntegrityMismatch { .. } | ProtocolError(_) => StatusCode::BAD_GATEWAY,
        StoreUnreachable(..) => StatusCode::GATEWAY_TIMEOUT,
        StorageFailure(_) | StoreCorrupt(_) => StatusCode::INTERNAL_SERVER_ERROR,
        InvalidId(_) | InvalidStoreUri(_) | InvalidFingerprint(_) => StatusCode::BAD_REQUEST,
    }
}

pub fn map_error(err: &Error) -> ApiError {
    ApiError {
        status: status_of(err),
        code: err.code().to_owned(),
        message: err.to_string(),
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        map_error(&err)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            log::warn!("{} {}: {}", self.status, self.code, self.message);
        }
        (
            self.status,
            Json(ErrorBody {
                code: self.code,
                message: self.message,
            }),
        )
            .into_response()
    }
}
