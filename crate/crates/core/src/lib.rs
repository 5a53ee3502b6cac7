//! Fluid documents: documents composed from content-addressed snippets through
//! structural links, enriched with bidirectional links, transclusion,
//! per-part rights and context adaptation, and federated across stores.
//!
//! The pieces, bottom-up:
//!
//! - [`content`]: SHA-256 addressed blob store.
//! - [`graph`]: resources, selectors and links with integrity rules.
//! - [`render`]: selector resolution and document expansion into a
//!   [`render::RenderTree`].
//! - [`access`]: users, rights inheritance and redaction.
//! - [`adapt`]: context-driven choice among link targets.
//! - [`federation`]: verified fetches from peer stores.
//! - [`store`]: the persistent single-writer facade used by the service and CLI.

pub mod access;
pub mod adapt;
pub mod content;
pub mod error;
pub mod federation;
pub mod graph;
pub mod id;
pub mod journal;
pub mod model;
pub mod render;
pub mod store;

pub use access::{AccessRegistry, Reader, RightsRequest, RightsSpec, User};
pub use adapt::{adapt_render, select_targets, Context, VariantScore};
pub use content::{ContentStore, Fingerprint};
pub use error::{Error, Result};
pub use federation::FederationClient;
pub use graph::Graph;
pub use id::{EntityId, EntityRef, GlobalRef, StoreUri, UserId};
pub use model::{CharRange, Direction, Entity, Link, LinkKind, MediaType, PropertyMap, Resource, Selector};
pub use render::{flatten, export_text, Mode, NodeKind, RenderNode, RenderOptions, RenderTree, Renderer};
pub use store::{DocumentChild, Store, StoreState};
