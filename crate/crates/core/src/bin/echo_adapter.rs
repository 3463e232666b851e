//! Minimal adapter used by the protocol tests. It predicts the majority class
//! of the last training file for every test record. Flags inject faults.

use std::io::{BufRead, Write};
use std::path::Path;

use clap::Parser;
use serde_json::{json, Value};

use tripclass::corpus::ingest_csv;
use tripclass::labeling::{binarize, BinaryLabel};

#[derive(Parser)]
struct Flags {
    #[arg(long, default_value = "echo")]
    name: String,
    /// Protocol version announced in the hello reply.
    #[arg(long, default_value_t = 1)]
    version: u64,
    /// Exit before answering anything.
    #[arg(long)]
    exit_immediately: bool,
    /// Reject every train request with this message.
    #[arg(long)]
    fail_train: Option<String>,
    /// Omit the prediction for the last test record.
    #[arg(long)]
    drop_last: bool,
    /// Send the first prediction twice.
    #[arg(long)]
    duplicate_first: bool,
    /// Add a prediction for an id that is not in the test file.
    #[arg(long)]
    unknown_id: bool,
    /// Never answer predict requests.
    #[arg(long)]
    hang: bool,
}

fn reply(out: &mut impl Write, v: &Value) {
    writeln!(out, "{v}").expect("stdout closed");
    out.flush().expect("stdout closed");
}

fn majority(path: &Path) -> Result<BinaryLabel, String> {
    let set = ingest_csv(path, true).map_err(|e| e.to_string())?;
    let (_, stats) = binarize(&set);
    Ok(if stats.n_work > stats.n_leisure {
        BinaryLabel::Work
    } else {
        BinaryLabel::Leisure
    })
}

fn main() {
    let flags = Flags::parse();
    if flags.exit_immediately {
        std::process::exit(3);
    }
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    let mut trained: Option<BinaryLabel> = None;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let Ok(req) = serde_json::from_str::<Value>(&line) else {
            reply(&mut out, &json!({"ok": false, "error": "unparseable request"}));
            continue;
        };
        let path = |key: &str| req.get(key).and_then(Value::as_str).unwrap_or("").to_string();
        match req.get("op").and_then(Value::as_str) {
            Some("hello") => reply(&mut out, &json!({"ok": true, "name": flags.name, "version": flags.version})),
            Some("train") => {
                if let Some(msg) = &flags.fail_train {
                    reply(&mut out, &json!({"ok": false, "error": msg}));
                    continue;
                }
                match majority(Path::new(&path("train_file"))) {
                    Ok(label) => {
                        trained = Some(label);
                        reply(&mut out, &json!({"ok": true}));
                    }
                    Err(e) => reply(&mut out, &json!({"ok": false, "error": e})),
                }
            }
            Some("predict") => {
                if flags.hang {
                    std::thread::sleep(std::time::Duration::from_secs(3600));
                }
                let Some(label) = trained else {
                    reply(&mut out, &json!({"ok": false, "error": "not trained"}));
                    continue;
                };
                let set = match ingest_csv(Path::new(&path("test_file")), true) {
                    Ok(set) => set,
                    Err(e) => {
                        reply(&mut out, &json!({"ok": false, "error": e.to_string()}));
                        continue;
                    }
                };
                                let mut ids: Vec<String> = set.iter().map(|r| r.id.clone()).collect();
                if flags.drop_last {
                    ids.pop();
                }
                if flags.duplicate_first && !ids.is_empty() {
                    ids.insert(0, ids[0].clone());
                }
                if flags.unknown_id {
                    ids.push("no-such-id".into());
                }
                for id in ids {
                    reply(&mut out, &json!({"id": id, "label": label, "score": 1.0}));
                }
                reply(&mut out, &json!({"ok": true}));
            }
            Some("shutdown") => {
                reply(&mut out, &json!({"ok": true}));
                return;
            }
            _ => reply(&mut out, &json!({"ok": false, "error": "unknown op"})),
        }
    }
}
