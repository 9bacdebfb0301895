//! Protocol fixture server. Speaks v1 over stdio by default, or HTTP with
//! `--http`. Most modes misbehave on purpose to exercise the client.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use pertext::dataset::read_dataset_file;
use pertext::remote::protocol::{Hello, Reply, Request};
use pertext_core::{Label, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Negative label for every token (UNK, or "0").
    Echo,
    /// One label too few.
    Short,
    /// Echo after `--delay-ms`.
    Slow,
    /// First line is not a hello.
    BadHello,
    /// Hello announces protocol 2.
    Version2,
    /// Replies carry the wrong id.
    BadId,
    /// Replies carry a label outside every label set.
    UnknownLabel,
    /// Every request gets an error reply.
    Error,
    /// Gold labels looked up in `--dataset` files.
    Replay,
    /// Exit before the hello.
    Exit,
}

#[derive(Debug, Parser)]
struct Args {
    #[arg(long, value_enum, default_value_t = Mode::Echo)]
    mode: Mode,
    #[arg(long, default_value = "stub-tagger")]
    name: String,
    #[arg(long, value_delimiter = ',', default_values_t = ["punct".to_string(), "zwnj".to_string(), "ezafe".to_string()])]
    tasks: Vec<String>,
    #[arg(long, default_value_t = 2000)]
    delay_ms: u64,
    /// Delay only the first N requests in slow mode.
    #[arg(long)]
    slow_count: Option<usize>,
    #[arg(long)]
    dataset: Vec<PathBuf>,
    /// Serve HTTP on this address; the bound URL is printed first.
    #[arg(long)]
    http: Option<String>,
}

fn key(task: Task, tokens: &[String]) -> String {
    let mut k = task.as_str().to_string();
    for t in tokens {
        k.push('\u{1f}');
        k.push_str(t);
    }
    k
}

struct Stub {
    args: Args,
    gold: HashMap<String, Vec<String>>,
    served: AtomicUsize,
}

impl Stub {
    fn hello(&self) -> String {
        if self.args.mode == Mode::BadHello {
            return "this is not a hello".into();
        }
        let hello = Hello {
            proto: if self.args.mode == Mode::Version2 { 2 } else { 1 },
            name: self.args.name.clone(),
            tasks: self.args.tasks.clone(),
        };
        serde_json::to_string(&hello).expect("hello serializes")
    }

    fn answer(&self, line: &str) -> Reply {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return Reply::error(0, format!("malformed request: {e}")),
        };
        let Ok(task) = req.task.parse::<Task>() else {
            return Reply::error(req.id, format!("unknown task `{}`", req.task));
        };
        if !self.args.tasks.contains(&req.task) {
            return Reply::error(req.id, format!("task `{}` not served", req.task));
        }
        if req.tokens.is_empty() {
            return Reply::error(req.id, "empty token list");
        }
        if req.tokens.len() != req.seps.len() {
            return Reply::error(req.id, "tokens and seps differ in length");
        }
        let n = req.tokens.len();
        let negative = || vec![Label::negative(task).name().to_string(); n];
        match self.args.mode {
            Mode::Echo | Mode::BadHello | Mode::Version2 | Mode::Exit => Reply::labels(req.id, negative()),
            Mode::Slow => {
                let seen = self.served.fetch_add(1, Ordering::SeqCst);
                if self.args.slow_count.is_none_or(|k| seen < k) {
                    thread::sleep(Duration::from_millis(self.args.delay_ms));
                }
                Reply::labels(req.id, negative())
            }
            Mode::Short => Reply::labels(req.id, negative()[1..].to_vec()),
            Mode::BadId => Reply::labels(req.id + 1000, negative()),
            Mode::UnknownLabel => Reply::labels(req.id, vec!["BOGUS".into(); n]),
            Mode::Error => Reply::error(req.id, "stub failure"),
            Mode::Replay => match self.gold.get(&key(task, &req.tokens)) {
                Some(labels) => Reply::labels(req.id, labels.clone()),
                None => Reply::error(req.id, "no gold labels for this sequence"),
            },
        }
    }
}

fn serve_stdio(stub: &Stub) -> io::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{}", stub.hello())?;
    out.flush()?;
    for line in io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = stub.answer(&line);
        writeln!(out, "{}", serde_json::to_string(&reply).expect("reply serializes"))?;
        out.flush()?;
    }
    Ok(())
}

fn serve_http(stub: &Stub, addr: &str) -> io::Result<()> {
    let server = tiny_http::Server::http(addr).map_err(io::Error::other)?;
    let url = match server.server_addr() {
        tiny_http::ListenAddr::IP(a) => format!("http://{a}"),
        #[allow(unreachable_patterns)]
        other => format!("{other:?}"),
    };
    println!("{url}");
    io::stdout().flush()?;
    let json = tiny_http::Header::from_bytes("Content-Type", "application/json").expect("valid header");
    for mut request in server.incoming_requests() {
        let (status, body) = match (request.method(), request.url()) {
            (tiny_http::Method::Get, "/v1/health") => (200, stub.hello()),
            (tiny_http::Method::Post, "/v1/tag") => {
                let mut body = String::new();
                match request.as_reader().read_to_string(&mut body) {
                    Ok(_) => (200, serde_json::to_string(&stub.answer(&body)).expect("reply serializes")),
                    Err(e) => (400, serde_json::to_string(&Reply::error(0, e.to_string())).expect("reply serializes")),
                }
            }
            _ => (404, "{\"id\":0,\"error\":\"not found\"}".to_string()),
        };
        let response = tiny_http::Response::from_string(body).with_status_code(status).with_header(json.clone());
        let _ = request.respond(response);
    }
    Ok(())
}

fn main() {
    let args = Args::parse();
    if args.mode == Mode::Exit {
        std::process::exit(3);
    }
    let mut gold = HashMap::new();
    for path in &args.dataset {
        let data = read_dataset_file(path, None).unwrap_or_else(|e| {
            eprintln!("stub-tagger: {}: {e}", path.display());
            std::process::exit(2);
        });
        for seq in data {
            let surfaces: Vec<String> = seq.tokens().iter().map(|t| t.surface.clone()).collect();
            let labels = seq.labels().iter().map(|l| l.name().to_string()).collect();
            gold.insert(key(seq.task(), &surfaces), labels);
        }
    }
    let http = args.http.clone();
    let stub = Stub {
        args,
        gold,
        served: AtomicUsize::new(0),
    };
    let result = match http {
        Some(addr) => serve_http(&stub, &addr),
        None => serve_stdio(&stub),
    };
    if let Err(e) = result {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("stub-tagger: {e}");
            std::process::exit(2);
        }
    }
}
