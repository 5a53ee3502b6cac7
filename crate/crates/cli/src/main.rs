use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use fluid_core::{
    export_text, Context, Direction, EntityId, EntityRef, LinkKind, Mode, PropertyMap, Reader, RenderOptions,
    RightsRequest, UserId,
};
use fluid_service::ServiceConfig;
use serde_json::json;

mod backend;
mod import;

use backend::{Backend, CliError, CliResult, Embedded, Remote};

#[derive(Parser)]
#[command(name = "fluid", version, about = "Administer and query a fluid document store")]
#[command(group(ArgGroup::new("target").args(["config", "store", "url"])))]
struct Cli {
    /// JSON service configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store directory (embedded mode)
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Base URL of a running service
    #[arg(long, global = true)]
    url: Option<String>,
    /// Bearer token of the acting user
    #[arg(long, global = true, env = "FLUID_TOKEN", hide_env_values = true)]
    token: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the REST service
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Import a plain-text file as a document, one resource per paragraph
    Import {
        path: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Render a document to plain text
    Export {
        document: EntityId,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Render a document and print the render tree as JSON
    Render {
        document: EntityId,
        #[command(flatten)]
        render: RenderArgs,
    },
    #[command(subcommand)]
    User(UserCommand),
    #[command(subcommand)]
    Rights(RightsCommand),
    #[command(subcommand)]
    Link(LinkCommand),
    #[command(subcommand)]
    Selector(SelectorCommand),
    /// Transclude a selection into a document at a character offset
    Transclude {
        #[arg(long)]
        origin_selector: EntityRef,
        #[arg(long)]
        into: EntityId,
        /// RESOURCE:OFFSET
        #[arg(long)]
        at: String,
    },
    #[command(subcommand)]
    Entity(EntityCommand),
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, default_value = "snapshot")]
    mode: Mode,
    #[arg(long, default_value_t = fluid_core::render::DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    /// Context entry KEY=VALUE (repeatable)
    #[arg(long = "ctx", value_name = "KEY=VALUE")]
    ctx: Vec<String>,
}

#[derive(Subcommand)]
enum UserCommand {
    /// Create a user and print its id and token
    Add { name: String },
}

#[derive(Subcommand)]
enum RightsCommand {
    /// Attach a rights specification to an entity
    Set {
        entity: EntityId,
        #[arg(long)]
        owner: Option<UserId>,
        /// PUBLIC or user ids, comma separated
        #[arg(long, value_delimiter = ',')]
        readers: Vec<Reader>,
        #[arg(long, value_delimiter = ',')]
        editors: Vec<UserId>,
    },
}

#[derive(Subcommand)]
enum LinkCommand {
    /// Create a link; endpoints are ID or STORE_URI#ID
    Create {
        #[arg(long)]
        kind: LinkKind,
        #[arg(long = "source", num_args = 1..)]
        sources: Vec<EntityRef>,
        #[arg(long = "target", num_args = 1..)]
        targets: Vec<EntityRef>,
        /// Link property KEY=VALUE (repeatable)
        #[arg(long = "property", value_name = "KEY=VALUE")]
        properties: Vec<String>,
    },
}

#[derive(Subcommand)]
enum SelectorCommand {
    /// Select the characters [start, end) of a text resource
    Create {
        resource: EntityId,
        start: usize,
        end: usize,
    },
}

#[derive(Subcommand)]
enum EntityCommand {
    /// Print an entity record as JSON
    Show { id: EntityId },
    /// List links touching an entity
    Links {
        id: EntityId,
        #[arg(long, default_value = "any")]
        direction: Direction,
        #[arg(long)]
        kind: Option<LinkKind>,
    },
}

fn key_value(s: &str) -> CliResult<(&str, &str)> {
    s.split_once('=')
        .ok_or_else(|| CliError::new("bad_request", format!("expected KEY=VALUE, got {s:?}")))
}

impl RenderArgs {
    fn options(&self) -> CliResult<RenderOptions> {
        let mut context = Context::new();
        for kv in &self.ctx {
            let (k, v) = key_value(kv)?;
            context.insert(k, v)?;
        }
        Ok(RenderOptions {
            mode: self.mode,
            max_depth: self.max_depth,
            context,
            user: None,
        })
    }
}

fn config(cli: &Cli) -> CliResult<ServiceConfig> {
    let base = match &cli.config {
        Some(p) => ServiceConfig::from_file(p).map_err(|e| CliError::new("bad_config", e.to_string()))?,
        None => ServiceConfig::default(),
    };
    let mut cfg = base
        .with_env(|k| std::env::var(k).ok())
        .map_err(|e| CliError::new("bad_config", e.to_string()))?;
    if let Some(s) = &cli.store {
        cfg.store_path = s.clone();
    }
    Ok(cfg)
}

fn backend(cli: &Cli) -> CliResult<Box<dyn Backend>> {
    match &cli.url {
        Some(url) => Ok(Box::new(Remote::new(url, cli.token.clone()))),
        None => Ok(Box::new(Embedded::open(&config(cli)?, cli.token.clone())?)),
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn transclude(b: &dyn Backend, origin: EntityRef, into: EntityId, at: &str) -> CliResult<serde_json::Value> {
    let (res, offset) = at
        .rsplit_once(':')
        .ok_or_else(|| CliError::new("bad_request", format!("expected RESOURCE:OFFSET, got {at:?}")))?;
    let resource: EntityId = res.parse()?;
    let offset: usize = offset
        .parse()
        .map_err(|_| CliError::new("bad_request", format!("invalid offset {offset:?}")))?;
    let in_document = b
        .links_of(into, Direction::Outgoing, Some(LinkKind::Structural))?
        .into_iter()
        .map(|l| b.entity(l))
        .collect::<CliResult<Vec<_>>>()?
        .iter()
        .filter_map(|e| e.as_link())
        .any(|l| l.targets.contains(&EntityRef::Local(resource)));
    if !in_document {
        return Err(fluid_core::Error::InvalidEndpoint(format!("{resource} is not a part of document {into}")).into());
    }
    let anchor = b.create_selector(resource, offset, offset)?;
    let link = b.create_link(LinkKind::Transclusion, vec![origin], vec![anchor.into()], PropertyMap::new())?;
    Ok(json!({ "anchor": anchor, "link": link }))
}

fn run(cli: Cli) -> CliResult<String> {
    if let Command::Serve { bind } = &cli.command {
        if cli.url.is_some() {
            return Err(CliError::new("bad_request", "serve needs a local store, not --url"));
        }
        let mut cfg = config(&cli)?;
        if let Some(b) = bind {
            cfg.bind_address = b.clone();
        }
        fluid_service::serve(&cfg).map_err(|e| match e {
            fluid_service::ServeError::Store(e) => e.into(),
            other => CliError::new("bind_failure", other.to_string()),
        })?;
        return Ok(String::new());
    }
    let b = backend(&cli)?;
    let b = b.as_ref();
    let out = match cli.command {
        Command::Serve { .. } => unreachable!(),
        Command::Import { path, name } => {
            let name = name.unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "document".into())
            });
            format!("{}\n", pretty(&import::import_text(b, &path, &name)?.to_json()))
        }
        Command::Export { document, render } => export_text(&b.render(document, &render.options()?)?),
        Command::Render { document, render } => format!("{}\n", pretty(&b.render(document, &render.options()?)?)),
        Command::User(UserCommand::Add { name }) => {
            let (id, token) = b.create_user(&name)?;
            format!("{}\n", pretty(&json!({ "id": id, "token": token })))
        }
        Command::Rights(RightsCommand::Set {
            entity,
            owner,
            readers,
            editors,
        }) => {
            b.set_rights(
                entity,
                RightsRequest {
                    owner,
                    readers: readers.into_iter().collect(),
                    editors: editors.into_iter().collect(),
                },
            )?;
            String::new()
        }
        Command::Link(LinkCommand::Create {
            kind,
            sources,
            targets,
            properties,
        }) => {
            let mut props = PropertyMap::new();
            for kv in &properties {
                let (k, v) = key_value(kv)?;
                props.insert(k, v)?;
            }
            format!("{}\n", b.create_link(kind, sources, targets, props)?)
        }
        Command::Selector(SelectorCommand::Create { resource, start, end }) => {
            format!("{}\n", b.create_selector(resource, start, end)?)
        }
        Command::Transclude {
            origin_selector,
            into,
            at,
        } => format!("{}\n", pretty(&transclude(b, origin_selector, into, &at)?)),
        Command::Entity(EntityCommand::Show { id }) => format!("{}\n", pretty(&b.entity(id)?)),
        Command::Entity(EntityCommand::Links { id, direction, kind }) => b
            .links_of(id, direction, kind)?
            .iter()
            .map(|l| format!("{l}\n"))
            .collect(),
    };
    Ok(out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
