use std::io;

use crate::content::Fingerprint;
use crate::id::{EntityId, GlobalRef, StoreUri};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the store, resolver, access and federation layers can report.
///
/// [`Error::code`] yields the stable machine-readable code used on the wire
/// and by the command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("unknown fingerprint {0}")]
    UnknownFingerprint(Fingerprint),
    #[error("composite resources cannot carry content")]
    FingerprintForbiddenForComposite,
    #[error("{0} media requires a content fingerprint")]
    MissingContent(&'static str),
    #[error("entity {0} is not a text resource")]
    NotATextResource(EntityId),
    #[error("range {start}..{end} out of bounds for text of length {len}")]
    RangeOutOfBounds { start: usize, end: usize, len: usize },
    #[error("link must have at least one source and one target")]
    EmptyEndpoint,
    #[error("bad cardinality: {0}")]
    BadCardinality(&'static str),
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("structural link {parent} -> {child} would close a cycle")]
    StructuralCycle { parent: EntityId, child: EntityId },
    #[error("entity {id} is still referenced by {referrers:?}")]
    ReferencedEntity { id: EntityId, referrers: Vec<EntityId> },
    #[error("invalid property: {0}")]
    InvalidProperty(String),
    #[error("content is not valid UTF-8")]
    InvalidUtf8,
    #[error("link {0} is not navigational or structural")]
    WrongLinkKind(EntityId),

    #[error("blob {0} not found")]
    NotFound(Fingerprint),
    #[error("storage failure: {0}")]
    StorageFailure(#[from] io::Error),
    #[error("store is corrupt: {0}")]
    StoreCorrupt(String),

    #[error("user name {0:?} is already taken")]
    NameTaken(String),
    #[error("unknown user")]
    UnknownUser,
    #[error("only the owner may change rights on {0}")]
    NotOwner(EntityId),
    #[error("access to {0} denied")]
    Forbidden(EntityId),
    #[error("authentication required")]
    Unauthenticated,
    #[error("entity {0} inherits conflicting rights from parents at equal depth")]
    AmbiguousParent(EntityId),

    #[error("store {0} unreachable: {1}")]
    StoreUnreachable(StoreUri, String),
    #[error("remote entity {0} not found")]
    RemoteNotFound(GlobalRef),
    #[error("remote content {1} not found on {0}")]
    RemoteContentNotFound(StoreUri, Fingerprint),
    #[error("remote store {0} refused access")]
    RemoteForbidden(StoreUri),
    #[error("content from {store} does not match fingerprint {fingerprint}")]
    IntegrityMismatch { store: StoreUri, fingerprint: Fingerprint },
    #[error("protocol error: {0}")]
    ProtocolError(String),

    #[error("invalid identifier: {0}")]
    InvalidId(String),
    #[error("invalid store uri: {0}")]
    InvalidStoreUri(String),
    #[error("invalid fingerprint: {0}")]
    InvalidFingerprint(String),
}

impl Error {
    /// Stable snake_case code for this error.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            UnknownEntity(_) => "unknown_entity",
            UnknownFingerprint(_) => "unknown_fingerprint",
            FingerprintForbiddenForComposite => "fingerprint_forbidden_for_composite",
            MissingContent(_) => "missing_content",
            NotATextResource(_) => "not_a_text_resource",
            RangeOutOfBounds { .. } => "range_out_of_bounds",
            EmptyEndpoint => "empty_endpoint",
            BadCardinality(_) => "bad_cardinality",
            InvalidEndpoint(_) => "invalid_endpoint",
            StructuralCycle { .. } => "structural_cycle",
            ReferencedEntity { .. } => "referenced_entity",
            InvalidProperty(_) => "invalid_property",
            InvalidUtf8 => "invalid_utf8",
            WrongLinkKind(_) => "wrong_link_kind",
            NotFound(_) => "not_found",
            StorageFailure(_) => "storage_failure",
            StoreCorrupt(_) => "store_corrupt",
            NameTaken(_) => "name_taken",
            UnknownUser => "unknown_user",
            NotOwner(_) => "not_owner",
            Forbidden(_) => "forbidden",
            Unauthenticated => "unauthenticated",
            AmbiguousParent(_) => "ambiguous_parent",
            StoreUnreachable(..) => "store_unreachable",
            RemoteNotFound(_) | RemoteContentNotFound(..) => "remote_not_found",
            RemoteForbidden(_) => "remote_forbidden",
            IntegrityMismatch { .. } => "integrity_mismatch",
            ProtocolError(_) => "protocol_error",
            InvalidId(_) | InvalidStoreUri(_) | InvalidFingerprint(_) => "bad_request",
        }
    }

    /// Whether this is a federation failure that degrades a render subtree
    /// instead of aborting it.
    pub fn is_remote_degradation(&self) -> bool {
        matches!(
            self,
            Error::StoreUnreachable(..)
                | Error::RemoteNotFound(_)
                | Error::RemoteContentNotFound(..)
                | Error::ProtocolError(_)
        )
    }
}
