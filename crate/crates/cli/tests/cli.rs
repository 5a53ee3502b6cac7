use std::path::Path;
use std::process::Command;

use fluid_core::{DocumentChild, LinkKind, MediaType, PropertyMap, Store};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn fluid(store: &Path, args: &[&str]) -> Out {
    fluid_env(store, args, None)
}

fn fluid_env(store: &Path, args: &[&str], token: Option<&str>) -> Out {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fluid"));
    cmd.arg("--store").arg(store).args(args).env_remove("FLUID_TOKEN");
    if let Some(t) = token {
        cmd.env("FLUID_TOKEN", t);
    }
    let o = cmd.output().unwrap();
    Out {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

fn import(store: &Path, dir: &Path, text: &str) -> serde_json::Value {
    let f = dir.join("in.txt");
    std::fs::write(&f, text).unwrap();
    let o = fluid(store, &["import", f.to_str().unwrap(), "--name", "doc"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    json(&o.stdout)
}

#[test]
fn import_reports_paragraphs_and_exports_them() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let rep = import(&store, dir.path(), "one\n\ntwo\nlines\n\n\n\nthree\n");
    assert_eq!(rep["paragraph_count"], 3);
    assert_eq!(rep["resource_ids"].as_array().unwrap().len(), 3);
    let doc = rep["document"].as_str().unwrap();
    let o = fluid(&store, &["export", doc]);
    assert_eq!(o.stdout, "one\n\ntwo\nlines\n\nthree\n");
}

#[test]
fn empty_file_gives_empty_document() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let rep = import(&store, dir.path(), "");
    assert_eq!(rep["paragraph_count"], 0);
    let o = fluid(&store, &["export", rep["document"].as_str().unwrap()]);
    assert_eq!((o.code, o.stdout.as_str()), (0, ""));
}

#[test]
fn identical_paragraphs_share_content() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let rep = import(&store, dir.path(), "x\n\nx");
    let ids: Vec<&str> = rep["resource_ids"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_ne!(ids[0], ids[1]);
    let a = json(&fluid(&store, &["entity", "show", ids[0]]).stdout);
    let b = json(&fluid(&store, &["entity", "show", ids[1]]).stdout);
    assert_eq!(a["content"], b["content"]);
}

#[test]
fn missing_file_and_bad_utf8_fail() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let o = fluid(&store, &["import", dir.path().join("nope").to_str().unwrap()]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("file_not_found"));
    let f = dir.path().join("bin");
    std::fs::write(&f, [0xff, 0xfe]).unwrap();
    let o = fluid(&store, &["import", f.to_str().unwrap()]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("invalid_utf8"));
}

#[test]
fn link_without_targets_is_empty_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let rep = import(&store, dir.path(), "a");
    let r = rep["resource_ids"][0].as_str().unwrap();
    let o = fluid(&store, &["link", "create", "--kind", "navigational", "--source", r]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("empty_endpoint"));
    assert!(o.stdout.is_empty());
}

#[test]
fn user_add_twice_is_name_taken() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let first = fluid(&store, &["user", "add", "ann"]);
    assert_eq!(first.code, 0);
    let token = json(&first.stdout)["token"].as_str().unwrap().to_owned();
    let again = fluid_env(&store, &["user", "add", "ann"], Some(&token));
    assert_eq!(again.code, 2);
    assert!(again.stderr.contains("name_taken"));
}

#[test]
fn transclude_then_export_shows_origin_inline() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let src = import(&store, dir.path(), "The quick brown fox");
    let src_res = src["resource_ids"][0].as_str().unwrap();
    let sel = fluid(&store, &["selector", "create", src_res, "4", "9"]).stdout;
    let doc = import(&store, dir.path(), "Start end.\n\nSecond.");
    let into = doc["document"].as_str().unwrap();
    let host = doc["resource_ids"][0].as_str().unwrap();
    let o = fluid(
        &store,
        &["transclude", "--origin-selector", sel.trim(), "--into", into, "--at", &format!("{host}:6")],
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    let o = fluid(&store, &["export", into]);
    assert_eq!(o.stdout, "Start quickend.\n\nSecond.\n");

    let outside = src_res;
    let o = fluid(
        &store,
        &["transclude", "--origin-selector", sel.trim(), "--into", into, "--at", &format!("{outside}:0")],
    );
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("invalid_endpoint"));
}

#[test]
fn anonymous_export_redacts_protected_paragraph() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("s");
    let owner = json(&fluid(&store, &["user", "add", "owner"]).stdout);
    let token = owner["token"].as_str().unwrap();
    let rep = import(&store, dir.path(), "public\n\nprivate\n\nmore");
    let doc = rep["document"].as_str().unwrap();
    let p2 = rep["resource_ids"][1].as_str().unwrap();
    let o = fluid_env(
        &store,
        &["rights", "set", p2, "--readers", owner["id"].as_str().unwrap()],
        Some(token),
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(fluid(&store, &["export", doc]).stdout, "public\n\n[redacted]\n\nmore\n");
    assert_eq!(
        fluid_env(&store, &["export", doc], Some(token)).stdout,
        "public\n\nprivate\n\nmore\n"
    );
}

#[test]
fn export_follows_context() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s");
    let doc = {
        let store = Store::open(&path, None).unwrap();
        let res = |text: &str, lang: Option<&str>| {
            let fp = store.put_content(text.as_bytes()).unwrap();
            let props = match lang {
                Some(l) => PropertyMap::new().with("ctx:lang", l).unwrap(),
                None => PropertyMap::new(),
            };
            store.create_resource(MediaType::Text, Some(fp), text, props).unwrap()
        };
        let intro = res("Intro", None);
        let en = res("Hello", Some("en"));
        let de = res("Hallo", Some("de"));
        let fallback = res("Hi", None);
        let doc = store
            .create_document("d", &[DocumentChild { child: intro.into(), order: 1 }], PropertyMap::new())
            .unwrap();
        store
            .create_link(
                LinkKind::Structural,
                vec![doc.into()],
                vec![en.into(), de.into(), fallback.into()],
                PropertyMap::new().with("order", "2").unwrap(),
            )
            .unwrap();
        store.flush().unwrap();
        doc.to_string()
    };
    assert_eq!(fluid(&path, &["export", &doc, "--ctx", "lang=de"]).stdout, "Intro\n\nHallo\n");
    assert_eq!(fluid(&path, &["export", &doc, "--ctx", "lang=en"]).stdout, "Intro\n\nHello\n");
    assert_eq!(fluid(&path, &["export", &doc]).stdout, "Intro\n\nHi\n");
}

#[test]
fn store_selectors_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fluid"))
        .args(["--store", "a", "--url", "http://x", "entity", "show", "x"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
