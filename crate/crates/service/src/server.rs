use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use fluid_core::{FederationClient, Store, StoreUri};
use tokio::sync::oneshot;

use crate::api::router;
use crate::config::ServiceConfig;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {0}: {1}")]
    BindFailure(String, std::io::Error),
    #[error(transparent)]
    Store(#[from] fluid_core::Error),
    #[error("runtime: {0}")]
    Runtime(std::io::Error),
}

/// Opens (or initializes) the store directory named by `config`, with a
/// federation client identifying itself as `uri`.
pub fn open_store(config: &ServiceConfig, uri: StoreUri) -> Result<Store, fluid_core::Error> {
    let ttl = Duration::from_secs(config.federation_ttl_seconds);
    Ok(Store::open(&config.store_path, Some(uri.clone()))?
        .with_federation(FederationClient::http(Some(uri), ttl)))
}

fn bind(addr: &str) -> Result<std::net::TcpListener, ServeError> {
    let listener = std::net::TcpListener::bind(addr).map_err(|e| ServeError::BindFailure(addr.into(), e))?;
    listener
        .set_nonblocking(true)
        .map_err(|e| ServeError::BindFailure(addr.into(), e))?;
    Ok(listener)
}

fn runtime() -> Result<tokio::runtime::Runtime, ServeError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(ServeError::Runtime)
}

/// Serves until Ctrl-C, then flushes the store.
pub fn serve(config: &ServiceConfig) -> Result<(), ServeError> {
    let listener = bind(&config.bind_address)?;
    let addr = listener.local_addr().map_err(ServeError::Runtime)?;
    let uri = config.effective_uri(addr);
    let store = Arc::new(open_store(config, uri.clone())?);
    log::info!("serving {} on {addr}", uri);
    let rt = runtime()?;
    let app = router(store.clone());
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener).map_err(ServeError::Runtime)?;
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
                log::info!("shutting down");
            })
            .await
            .map_err(ServeError::Runtime)
    })?;
    store.flush()?;
    Ok(())
}

/// A server running on a background thread. Dropping it shuts it down.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub uri: StoreUri,
    pub store: Arc<Store>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn base_url(&self) -> &str {
        self.uri.as_str()
    }

    /// Stops accepting requests and waits for the server thread to finish.
    pub fn stop(mut self) {
        self.shutdown_now();
    }

    fn shutdown_now(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        if let Err(e) = self.store.flush() {
            log::warn!("flush on shutdown failed: {e}");
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown_now();
    }
}

/// Binds `addr` (port 0 picks a free port), builds the store with the bound
/// URI and serves it on a background thread.
pub fn spawn(
    addr: &str,
    make_store: impl FnOnce(StoreUri) -> Result<Store, fluid_core::Error>,
) -> Result<ServerHandle, ServeError> {
    let listener = bind(addr)?;
    let bound = listener.local_addr().map_err(ServeError::Runtime)?;
    let uri = StoreUri::parse(&format!("http://{bound}"))?;
    let store = Arc::new(make_store(uri.clone())?);
    let rt = runtime()?;
    let app = router(store.clone());
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name(format!("fluid-server-{}", bound.port()))
        .spawn(move || {
            rt.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        log::error!("listener: {e}");
                        return;
                    }
                };
                let served = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
                if let Err(e) = served {
                    log::error!("server: {e}");
                }
            });
            rt.shutdown_timeout(Duration::from_secs(1));
        })
        .map_err(ServeError::Runtime)?;
    Ok(ServerHandle {
        addr: bound,
        uri,
        store,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
