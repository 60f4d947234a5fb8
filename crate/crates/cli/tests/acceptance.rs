//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command as Proc, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use dbstudio_core::db::ItemKind;
use dbstudio_core::layout::decode_layout;
use dbstudio_core::{
    build_graph, group_view, parse_db, parse_dbd, serialize_db, Code, Command, FieldKind, GroupPath, Session,
    TypeRegistry,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn db_path(name: &str) -> PathBuf {
    fixtures().join("db").join(name)
}

fn dbd_path() -> PathBuf {
    fixtures().join("dbd/fixture.dbd")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn registry() -> Arc<TypeRegistry> {
    Arc::new(parse_dbd(&read(&dbd_path())).0)
}

fn example() -> Vec<u8> {
    read(&db_path("example.db"))
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_dbstudio"))
}

fn strip_layout(bytes: &[u8]) -> Vec<u8> {
    bytes
        .split_inclusive(|b| *b == b'\n')
        .filter(|l| !l.starts_with(b"#!"))
        .flatten()
        .copied()
        .collect()
}

fn example_fidelity() -> Outcome {
    let bytes = example();
    let (session, diags) = Session::open("example.db", &bytes, registry(), ':');
    ensure!(!diags.iter().any(|d| d.is_error()), "error diagnostics: {diags:?}");
    let doc = session.document();
    ensure!(doc.record_count() == 2, "{} records", doc.record_count());
    let (graph, _) = build_graph(doc, session.registry(), ':');
    ensure!(graph.edges.len() == 1, "{} edges", graph.edges.len());
    let e = &graph.edges[0];
    ensure!(
        e.source_field == "ai001.INP" && e.target_id() == "ao001.VAL" && e.source_kind == FieldKind::Input,
        "edge {} -> {} ({:?})",
        e.source_field,
        e.target_id(),
        e.source_kind
    );
    let layout = session.layout();
    ensure!(layout.connectors.len() == 1, "{} connectors", layout.connectors.len());
    let c = &layout.connectors[0];
    ensure!((c.x, c.y) == (2505, 2495), "connector at ({},{})", c.x, c.y);
    ensure!(layout.field_nodes["ai001.INP"].color == 16711731, "field node color");
    Ok("2 records, edge ai001.INP -> ao001.VAL (INPUT), connector (2505,2495), 0 errors".into())
}

fn round_trip() -> Outcome {
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixtures().join("db"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    ensure!(files.len() >= 20, "only {} fixtures", files.len());
    let contents: Vec<(PathBuf, Vec<u8>)> = files.into_iter().map(|p| (p.clone(), read(&p))).collect();
    let start = Instant::now();
    let (mut malformed, mut comment_heavy, mut crlf, mut layout_free) = (false, false, false, false);
    for (path, bytes) in &contents {
        let (doc, diags) = parse_db(bytes);
        ensure!(serialize_db(&doc) == *bytes, "{} does not round-trip", path.display());
        malformed |= diags.iter().any(|d| d.code == Code::SyntaxError);
        let comments = doc.items().iter().filter(|i| i.kind() == ItemKind::CommentLine).count();
        comment_heavy |= comments >= 5;
        crlf |= bytes.windows(2).any(|w| w == b"\r\n");
        layout_free |= doc.record_count() > 0 && doc.layout_lines().next().is_none();
    }
    let elapsed = start.elapsed();
    ensure!(malformed && comment_heavy && crlf && layout_free, "corpus lacks a required kind of file");
    ensure!(elapsed < Duration::from_secs(1), "corpus took {elapsed:?}");
    Ok(format!("{} files byte-exact in {:.1} ms", contents.len(), elapsed.as_secs_f64() * 1e3))
}

fn diagnostics() -> Outcome {
    let reg = registry();
    for (file, code) in [
        ("diag_syntax_error.db", Code::SyntaxError),
        ("diag_duplicate_name.db", Code::DuplicateRecordName),
        ("diag_unknown_type.db", Code::UnknownRecordType),
        ("diag_broken_link.db", Code::BrokenLink),
    ] {
        let (_, diags) = Session::open(file, &read(&db_path(file)), reg.clone(), ':');
        let codes: Vec<Code> = diags.iter().map(|d| d.code).collect();
        ensure!(codes == [code], "{file}: got {codes:?}");
        let out = bin()
            .args(["lint"])
            .arg(db_path(file))
            .arg("--dbd")
            .arg(dbd_path())
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(out.status.code() == Some(1), "{file}: lint exit {:?}", out.status.code());
        let stdout = String::from_utf8_lossy(&out.stdout);
        ensure!(
            stdout.lines().count() == 1 && stdout.starts_with(&format!("ERROR {code} ")),
            "{file}: lint printed {stdout:?}"
        );
    }
    Ok("4 fixtures, one expected code each, lint exit 1".into())
}

fn rename_fixup() -> Outcome {
    let original = example();
    let (mut s, _) = Session::open("example.db", &original, registry(), ':');
    s.apply(Command::RenameRecord { old: "ao001".into(), new: "ao002".into() }).map_err(|e| e.to_string())?;
    let inp = s.document().get_record("ai001").and_then(|r| r.field("INP")).unwrap_or_default().to_string();
    ensure!(inp == "ao002", "ai001.INP = {inp:?}");
    let terminal = s.layout().connectors["ai001/INP"].next.clone();
    ensure!(terminal == "ao002.VAL", "connector terminal {terminal}");
    s.apply(Command::RenameRecord { old: "ao002".into(), new: "ao001".into() }).map_err(|e| e.to_string())?;
    ensure!(s.save() == original, "renamed back but bytes differ");
    Ok("INP -> \"ao002\", terminal -> ao002.VAL, rename back is byte-exact".into())
}

fn run_layout(input: &[u8], dir: &Path, name: &str) -> Result<Vec<u8>, String> {
    let path = dir.join(name);
    std::fs::write(&path, input).map_err(|e| e.to_string())?;
    let out = bin()
        .arg("layout")
        .arg(&path)
        .arg("--dbd")
        .arg(dbd_path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "layout exit {:?}", out.status.code());
    Ok(out.stdout)
}

fn auto_layout() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let once = run_layout(&strip_layout(&example()), dir.path(), "stripped.db")?;
    let (table, _) = decode_layout(&parse_db(&once).0);
    let pos = |n: &str| table.records.get(n).map(|r| (r.x, r.y));
    ensure!(pos("ai001") == Some((100, 100)), "ai001 at {:?}", pos("ai001"));
    ensure!(pos("ao001") == Some((260, 100)), "ao001 at {:?}", pos("ao001"));
    let twice = run_layout(&once, dir.path(), "once.db")?;
    ensure!(twice == once, "second layout run changed the file");

    let nine = run_layout(&read(&db_path("nine_records.db")), dir.path(), "nine.db")?;
    let text = String::from_utf8_lossy(&nine);
    let directives = text.lines().filter(|l| l.starts_with("#! Record(")).count();
    ensure!(directives == 9, "{directives} Record directives");
    let (table, _) = decode_layout(&parse_db(&nine).0);
    for i in 1..=9i64 {
        let expect = (100 + ((i - 1) % 8) * 160, 100 + ((i - 1) / 8) * 100);
        let got = table.records.get(&format!("r{i}")).map(|r| (r.x, r.y));
        ensure!(got == Some(expect), "r{i} at {got:?}, expected {expect:?}");
    }
    Ok("(100,100) and (260,100); idempotent; r9 wraps to (100,200)".into())
}

const LINK_FIELDS: [(&str, &[&str]); 3] = [("ai", &["INP", "FLNK"]), ("ao", &["OUT", "DOL", "FLNK"]), ("calc", &["INPA", "INPB", "FLNK"])];

fn random_command(s: &Session, rng: &mut StdRng, counter: &mut usize) -> Command {
    let names: Vec<String> = s.document().records().map(|r| r.name().to_string()).collect();
    let pick_name = |rng: &mut StdRng| names[rng.random_range(0..names.len())].clone();
    let pick_source = |rng: &mut StdRng| {
        let name = pick_name(rng);
        let rtype = s.document().get_record(&name).unwrap().record_type().to_string();
        let fields = LINK_FIELDS.iter().find(|(t, _)| *t == rtype).map_or(&["INP"][..], |(_, f)| f);
        format!("{name}.{}", fields[rng.random_range(0..fields.len())])
    };
    *counter += 1;
    let delta = |rng: &mut StdRng| rng.random_range(-200..=200i64);
    if names.is_empty() {
        return Command::CreateRecord { record_type: "ai".into(), name: format!("new{counter}"), x: None, y: None };
    }
    match rng.random_range(0..12) {
        0 => Command::CreateRecord {
            record_type: ["ai", "ao", "calc"][rng.random_range(0..3)].into(),
            name: format!("grp{}:new{counter}", rng.random_range(0..3)),
            x: Some(delta(rng)),
            y: Some(delta(rng)),
        },
        1 => Command::DeleteRecord { name: pick_name(rng) },
        2 => Command::RenameRecord { old: pick_name(rng), new: format!("ren{counter}") },
        3 => Command::SetField { record: pick_name(rng), field: "DESC".into(), value: format!("value {counter}") },
        4 => Command::RemoveField { record: pick_name(rng), field: "DESC".into() },
        5 => Command::MoveRecord { name: pick_name(rng), dx: delta(rng), dy: delta(rng) },
        6 => Command::SetLink { source: pick_source(rng), target: format!("{} NPP", pick_name(rng)) },
        7 => Command::ClearLink { source: pick_source(rng) },
        8 => Command::AddConnector { source: pick_source(rng), x: delta(rng), y: delta(rng) },
        9 | 10 => match s.layout().connectors.keys().nth(rng.random_range(0..s.layout().connectors.len().max(1))) {
            Some(id) if rng.random_bool(0.5) => Command::MoveConnector { id: id.clone(), dx: delta(rng), dy: delta(rng) },
            Some(id) => Command::RemoveConnector { id: id.clone() },
            None => Command::MoveRecord { name: pick_name(rng), dx: 1, dy: 1 },
        },
        _ => Command::Paste { dx: delta(rng), dy: delta(rng) },
    }
}

fn undo_soundness() -> Outcome {
    let reg = registry();
    let original = read(&db_path("calc_chain.db"));
    let mut total = 0;
    for seed in 0..200u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let (mut s, _) = Session::open("calc_chain.db", &original, reg.clone(), ':');
        let start = s.semantic_state();
        let n = rng.random_range(1..=100usize);
        let mut applied = 0;
        let mut counter = 0;
        let mut attempts = 0;
        while applied < n && attempts < n * 20 {
            attempts += 1;
            if rng.random_range(0..10) == 0 {
                let names: Vec<String> = s.document().records().map(|r| r.name().to_string()).collect();
                let k = rng.random_range(0..=names.len().min(3));
                let _ = s.copy(&names[..k]);
            }
            let cmd = random_command(&s, &mut rng, &mut counter);
            if s.apply(cmd).is_ok() {
                applied += 1;
            }
        }
        ensure!(applied == n, "seed {seed}: only {applied} of {n} commands were valid");
        for _ in 0..n {
            s.undo().map_err(|e| format!("seed {seed}: {e}"))?;
        }
        ensure!(s.semantic_state() == start, "seed {seed}: state differs after {n} undos");
        ensure!(s.render() == original, "seed {seed}: bytes differ after {n} undos");
        total += n;
    }
    Ok(format!("200 seeds, {total} commands undone"))
}

fn grouping() -> Outcome {
    let (doc, _) = parse_db(&read(&db_path("grouping.db")));
    let view = |path: &str, sep: char| group_view(&doc, &GroupPath::parse(path, sep), sep);
    let root = view("", ':');
    ensure!(root.records.len() == 1 && root.subgroups.len() == 1, "root {root:?}");
    let g1 = view("grp1", ':');
    ensure!(g1.records.len() == 1 && g1.subgroups.len() == 1, "grp1 {g1:?}");
    let g2 = view("grp1:grp2", ':');
    ensure!(g2.records.len() == 1 && g2.subgroups.is_empty(), "grp1:grp2 {g2:?}");
    let dotted = view("", '.');
    let counted = dotted.records.len() + dotted.subgroups.iter().map(|s| s.member_count).sum::<usize>();
    ensure!(counted == doc.record_count(), "separator '.' sees {counted} records");
    ensure!(dotted.records.len() == 3, "separator '.' root {dotted:?}");
    Ok("root 1+1, grp1 1+1, grp1:grp2 1; '.' keeps all 3 records".into())
}

fn synthetic(records: usize) -> (Vec<u8>, usize) {
    let mut text = String::from("# generated\n");
    let mut links = 0;
    for i in 0..records {
        text.push_str(&format!("record(ai,\"sec{}:dev{i}\") {{\n", i % 50));
        text.push_str(&format!("  field(DESC,\"synthetic {i}\")\n"));
        let prev = (i + records - 1) % records;
        text.push_str(&format!("  field(INP,\"sec{}:dev{prev} CP MS\")\n", prev % 50));
        links += 1;
        if i % 2 == 0 {
            text.push_str(&format!("  field(FLNK,\"sec{}:dev{}\")\n", (i + 1) % 50, (i + 1) % records));
            links += 1;
        }
        text.push_str("}\n");
    }
    for i in 0..records {
        text.push_str(&format!("#! Record(sec{}:dev{i},{},{},0,1,\"dev{i}\")\n", i % 50, (i % 100) * 160, (i / 100) * 100));
    }
    (text.into_bytes(), links)
}

fn performance() -> Outcome {
    let (bytes, links) = synthetic(10_000);
    ensure!(links >= 15_000, "generator produced {links} links");
    let reg = registry();
    let start = Instant::now();
    let (doc, diags) = parse_db(&bytes);
    let (graph, _) = build_graph(&doc, &reg, ':');
    let out = serialize_db(&doc);
    let elapsed = start.elapsed();
    ensure!(diags.is_empty(), "{} parse diagnostics", diags.len());
    ensure!(doc.record_count() == 10_000, "{} records", doc.record_count());
    ensure!(graph.edges.len() == links, "{} edges, expected {links}", graph.edges.len());
    ensure!(graph.broken_count() == 0, "{} broken links", graph.broken_count());
    ensure!(out == bytes, "synthetic file does not round-trip");
    ensure!(elapsed < Duration::from_secs(2), "took {elapsed:?}");
    Ok(format!("10000 records, {links} links in {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

struct Server {
    child: Child,
    addr: String,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn start_server() -> Result<Server, String> {
    let mut child = bin()
        .args(["serve", "--port", "0", "--dbd"])
        .arg(dbd_path())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).map_err(|e| e.to_string())?;
    let addr = line.trim().strip_prefix("listening on http://").ok_or(format!("unexpected banner {line:?}"))?;
    Ok(Server { addr: addr.to_string(), child })
}

/// Minimal HTTP/1.1 exchange over a fresh connection.
fn http(addr: &str, method: &str, path: &str, body: &[u8]) -> Result<(u16, Vec<u8>), String> {
    let mut stream = TcpStream::connect(addr).map_err(|e| e.to_string())?;
    stream.set_read_timeout(Some(Duration::from_secs(10))).map_err(|e| e.to_string())?;
    let head = format!(
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(head.as_bytes()).and_then(|_| stream.write_all(body)).map_err(|e| e.to_string())?;
    let mut resp = Vec::new();
    stream.read_to_end(&mut resp).map_err(|e| e.to_string())?;
    let split = resp.windows(4).position(|w| w == b"\r\n\r\n").ok_or("no header terminator")?;
    let head = String::from_utf8_lossy(&resp[..split]).to_string();
    let status: u16 = head.split(' ').nth(1).and_then(|s| s.parse().ok()).ok_or(format!("bad status line {head:?}"))?;
    let mut body = resp[split + 4..].to_vec();
    if head.to_ascii_lowercase().contains("transfer-encoding: chunked") {
        body = dechunk(&body);
    }
    Ok((status, body))
}

fn dechunk(mut raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    while let Some(eol) = raw.windows(2).position(|w| w == b"\r\n") {
        let size = usize::from_str_radix(String::from_utf8_lossy(&raw[..eol]).trim(), 16).unwrap_or(0);
        if size == 0 {
            break;
        }
        out.extend_from_slice(&raw[eol + 2..eol + 2 + size]);
        raw = &raw[eol + 2 + size + 2..];
    }
    out
}

fn http_json(addr: &str, method: &str, path: &str, body: Option<Value>) -> Result<(u16, Value), String> {
    let bytes = body.map(|b| b.to_string().into_bytes()).unwrap_or_default();
    let (status, resp) = http(addr, method, path, &bytes)?;
    Ok((status, serde_json::from_slice(&resp).unwrap_or(Value::Null)))
}

fn service_contract() -> Outcome {
    let mut server = start_server()?;
    let addr = server.addr.clone();
    let original = example();
    let open = json!({"db": String::from_utf8_lossy(&original), "dbd": String::from_utf8_lossy(&read(&dbd_path()))});
    let (status, body) = http_json(&addr, "POST", "/api/documents", Some(open))?;
    ensure!(status == 201, "open returned {status}");
    ensure!(body["diagnostics"] == json!([]), "open diagnostics {}", body["diagnostics"]);
    let id = body["id"].as_str().ok_or("no id")?.to_string();
    let view_path = format!("/api/documents/{id}/view?group=");

    // Example fidelity, seen through the view model.
    let (_, view) = http_json(&addr, "GET", &view_path, None)?;
    ensure!(view["records"].as_array().map(Vec::len) == Some(2), "view records {}", view["records"]);
    let link = &view["links"][0];
    ensure!(
        view["links"].as_array().map(Vec::len) == Some(1) && link["source"] == "ai001.INP" && link["targetLabel"] == "ao001.VAL",
        "view links {}",
        view["links"]
    );
    ensure!(link["waypoints"] == json!([{"id": "ai001/INP", "x": 2505, "y": 2495}]), "waypoints {}", link["waypoints"]);
    let inp = view["records"][0]["fieldNodes"].as_array().and_then(|n| n.iter().find(|f| f["field"] == "INP")).cloned();
    ensure!(
        inp == Some(json!({"field": "INP", "kind": "INPUT", "color": 16711731})),
        "INP field node {inp:?}"
    );

    // Move then undo restores the view.
    let cmd_path = format!("/api/documents/{id}/commands");
    let (status, body) = http_json(&addr, "POST", &cmd_path, Some(json!({"kind": "MoveRecord", "name": "ai001", "dx": 10, "dy": 0})))?;
    ensure!(status == 200 && body["revision"] == 1, "move returned {status} {body}");
    let (status, _) = http_json(&addr, "POST", &format!("/api/documents/{id}/undo"), None)?;
    ensure!(status == 200, "undo returned {status}");
    let (_, after_undo) = http_json(&addr, "GET", &view_path, None)?;
    ensure!(after_undo["records"] == view["records"], "undo did not restore the view");

    // Rename fixup, seen through the view model and source.
    let (status, _) = http_json(&addr, "POST", &cmd_path, Some(json!({"kind": "RenameRecord", "old": "ao001", "new": "ao002"})))?;
    ensure!(status == 200, "rename returned {status}");
    let (_, renamed) = http_json(&addr, "GET", &view_path, None)?;
    ensure!(renamed["links"][0]["targetLabel"] == "ao002.VAL", "targetLabel {}", renamed["links"][0]["targetLabel"]);
    let (_, src) = http(&addr, "GET", &format!("/api/documents/{id}/source"), b"")?;
    let src = String::from_utf8_lossy(&src).to_string();
    ensure!(src.contains("field(INP,\"ao002\")") && src.contains("\"ao002.VAL\""), "source after rename:\n{src}");
    http_json(&addr, "POST", &cmd_path, Some(json!({"kind": "RenameRecord", "old": "ao002", "new": "ao001"})))?;
    let (status, src) = http(&addr, "GET", &format!("/api/documents/{id}/source"), b"")?;
    ensure!(status == 200 && src == original, "source after renaming back differs");

    // Malformed requests: always 4xx, never a fault.
    let bad: Vec<(&str, String, Vec<u8>)> = vec![
        ("POST", "/api/documents".into(), b"{".to_vec()),
        ("POST", "/api/documents".into(), b"{\"db\": []}".to_vec()),
        ("POST", "/api/documents".into(), b"{\"db\": \"\", \"dbd\": \"\"}".to_vec()),
        ("POST", "/api/documents".into(), vec![0xff, 0x00, 0x13]),
        ("POST", cmd_path.clone(), b"{\"kind\": 7}".to_vec()),
        ("POST", cmd_path.clone(), b"{\"kind\": \"DeleteRecord\"}".to_vec()),
        ("POST", cmd_path.clone(), b"{\"kind\": \"DeleteRecord\", \"name\": \"missing\"}".to_vec()),
        ("POST", cmd_path.clone(), b"{\"kind\": \"MoveRecord\", \"name\": \"ai001\", \"dx\": 99999999999999999999, \"dy\": 0}".to_vec()),
        ("POST", "/api/documents/unknown/commands".into(), b"{\"kind\": \"Paste\"}".to_vec()),
        ("GET", "/api/documents/unknown/view".into(), Vec::new()),
        ("POST", cmd_path.clone(), b"{\"kind\": \"Explode\", \"name\": \"ai001\"}".to_vec()),
        ("POST", format!("/api/documents/{id}/redo"), Vec::new()),
        ("GET", "/api/../../etc/passwd".into(), Vec::new()),
    ];
    for (method, path, body) in &bad {
        let (status, _) = http(&addr, method, path, body)?;
        ensure!((400..500).contains(&status), "{method} {path} returned {status}");
    }
    let (status, _) = http_json(&addr, "GET", "/api/health", None)?;
    ensure!(status == 200, "health after bad requests: {status}");
    ensure!(server.child.try_wait().map_err(|e| e.to_string())?.is_none(), "server exited");
    Ok(format!("open/view/command/undo/source over HTTP; {} malformed requests all 4xx", bad.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("example fidelity", example_fidelity),
        ("byte-exact round trip", round_trip),
        ("diagnostics fixtures", diagnostics),
        ("rename fixup", rename_fixup),
        ("auto-layout", auto_layout),
        ("undo soundness", undo_soundness),
        ("grouping", grouping),
        ("performance", performance),
        ("service contract", service_contract),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
