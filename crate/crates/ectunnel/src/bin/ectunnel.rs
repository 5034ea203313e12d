//! Command-line front end: key ceremony, server, one-shot client, proxy.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use clap::{Args, Parser, Subcommand};
use rand::rngs::OsRng;
use serde_json::json;
use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use ectunnel::client::{Client, ClientError, HttpTransport, SessionHandle};
use ectunnel::crypto::{
    compute_verifier, sign_server_param, standard_group, EphemeralKeypair, SigningKeypair,
    SignedServerParam,
};
use ectunnel::httpd;
use ectunnel::packet::InnerMessage;
use ectunnel::proxy::{MitmConfig, Proxy};
use ectunnel::server::{
    demo::DemoApi, OuterRequest, ServerConfig, TunnelServer, UserRecord,
};
use ectunnel::session::SessionConfig;
use ectunnel::unix_now;
use num_bigint::BigUint;

#[derive(Parser)]
#[command(name = "ectunnel", about = "Encrypted application-layer tunnel over HTTP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the offline signing key and the signed server parameter.
    Keygen(KeygenArgs),
    /// Run the tunnel server with the built-in demo API.
    Serve(ServeArgs),
    /// Open a tunnel and send a single request.
    Request(RequestArgs),
    /// Run the tunnel-terminating test proxy.
    Proxy(ProxyArgs),
}

#[derive(Args)]
struct KeygenArgs {
    /// Output path for the key bundle (written with mode 0600).
    #[arg(long)]
    out: PathBuf,
    /// Overwrite an existing bundle.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct ServeArgs {
    /// Key bundle produced by `keygen`.
    #[arg(long)]
    keys: PathBuf,
    /// Listen address.
    #[arg(long, default_value = "127.0.0.1:8443")]
    listen: String,
    /// Optional JSON config with users and session settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Accept plaintext requests on non-tunnel routes (migration mode).
    #[arg(long)]
    allow_plaintext: bool,
}

#[derive(Args)]
struct RequestArgs {
    /// Server base URL.
    #[arg(long)]
    url: String,
    /// Pinned signer fingerprint, hex.
    #[arg(long)]
    pin: String,
    /// Persisted session state; created when absent.
    #[arg(long)]
    session_file: Option<PathBuf>,
    /// Perform an SRP login first, as `identity:password`.
    #[arg(long)]
    login: Option<String>,
    /// Request header, `Name: value`; repeatable.
    #[arg(long = "header", short = 'H')]
    headers: Vec<String>,
    /// Inline request body.
    #[arg(long, short = 'd')]
    data: Option<String>,
    /// HTTP method for the inner request.
    method: String,
    /// Inner request path, e.g. `/echo`.
    path: String,
}

#[derive(Args)]
struct ProxyArgs {
    /// Listen address for plaintext clients.
    #[arg(long, default_value = "127.0.0.1:8444")]
    listen: String,
    /// Upstream tunnel server base URL.
    #[arg(long)]
    upstream: String,
    /// Pinned signer fingerprint of the upstream server, hex.
    #[arg(long)]
    pin: String,
    /// Enable the active SRP interception, as `identity:password`.
    #[arg(long)]
    mitm: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen(args) => keygen(args),
        Command::Serve(args) => serve(args),
        Command::Request(args) => request(args),
        Command::Proxy(args) => proxy(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn write_private(path: &Path, contents: &[u8], force: bool) -> Result<(), String> {
    if path.exists() && !force {
        return Err(format!("{} already exists; pass --force to overwrite", path.display()));
    }
    use std::os::unix::fs::OpenOptionsExt;
    let mut file = std::fs::OpenOptions::new()
        .write(true)
        .create(true)
        .truncate(true)
        .mode(0o600)
        .open(path)
        .map_err(|err| format!("cannot write {}: {err}", path.display()))?;
    file.write_all(contents).map_err(|err| err.to_string())
}

fn keygen(args: KeygenArgs) -> Result<ExitCode, String> {
    let mut signing_entropy = [0u8; 32];
    rand::RngCore::fill_bytes(&mut OsRng, &mut signing_entropy);
    let signing = SigningKeypair::generate(signing_entropy);
    let mut ephemeral_entropy = [0u8; 32];
    rand::RngCore::fill_bytes(&mut OsRng, &mut ephemeral_entropy);
    let ephemeral = EphemeralKeypair::generate(ephemeral_entropy);
    let param = sign_server_param(&signing, *ephemeral.public_point());

    let bundle = json!({
        "signing_secret": BASE64.encode(signing.secret_bytes()),
        "signing_public": BASE64.encode(signing.public_bytes()),
        "fingerprint": hex::encode(param.signer_fingerprint),
        "ephemeral_secret": BASE64.encode(ephemeral_entropy),
        "q": BASE64.encode(param.q_point),
        "signature": BASE64.encode(&param.signature),
    });
    let text = serde_json::to_string_pretty(&bundle).expect("serializable");
    write_private(&args.out, text.as_bytes(), args.force)?;
    println!("{}", hex::encode(param.signer_fingerprint));
    Ok(ExitCode::SUCCESS)
}

fn load_bundle(path: &Path) -> Result<(SignedServerParam, EphemeralKeypair), String> {
    let text = std::fs::read(path)
        .map_err(|err| format!("cannot read {}: {err}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_slice(&text).map_err(|_| "key bundle is not JSON".to_string())?;
    let field = |name: &str| -> Result<Vec<u8>, String> {
        value
            .get(name)
            .and_then(|v| v.as_str())
            .and_then(|s| BASE64.decode(s).ok())
            .ok_or_else(|| format!("key bundle is missing `{name}`"))
    };
    let q: [u8; 32] =
        field("q")?.try_into().map_err(|_| "`q` has wrong length".to_string())?;
    let signing_public = field("signing_public")?;
    let signature = field("signature")?;
    let entropy: [u8; 32] = field("ephemeral_secret")?
        .try_into()
        .map_err(|_| "`ephemeral_secret` has wrong length".to_string())?;
    let ephemeral = EphemeralKeypair::generate(entropy);
    let param = SignedServerParam {
        q_point: q,
        signature,
        signer_fingerprint: ectunnel::crypto::fingerprint(&signing_public),
        signing_public_key: signing_public,
    };
    Ok((param, ephemeral))
}

fn load_users(config: &serde_json::Value) -> Result<HashMap<String, UserRecord>, String> {
    let mut users = HashMap::new();
    let Some(list) = config.get("users").and_then(|u| u.as_array()) else {
        return Ok(users);
    };
    let group = standard_group();
    for entry in list {
        let identity = entry
            .get("identity")
            .and_then(|v| v.as_str())
            .ok_or("user entry is missing `identity`")?
            .to_string();
        let record = if let Some(password) = entry.get("password").and_then(|v| v.as_str()) {
            let mut salt = [0u8; 16];
            rand::RngCore::fill_bytes(&mut OsRng, &mut salt);
            let verifier = compute_verifier(group, &salt, &identity, password);
            UserRecord { salt: salt.to_vec(), verifier }
        } else {
            let salt = entry
                .get("salt")
                .and_then(|v| v.as_str())
                .and_then(|s| BASE64.decode(s).ok())
                .ok_or("user entry needs `password` or `salt`+`verifier`")?;
            let verifier = entry
                .get("verifier")
                .and_then(|v| v.as_str())
                .and_then(|s| BASE64.decode(s).ok())
                .map(|b| BigUint::from_bytes_be(&b))
                .ok_or("user entry needs `password` or `salt`+`verifier`")?;
            UserRecord { salt, verifier }
        };
        users.insert(identity, record);
    }
    Ok(users)
}

fn serve(args: ServeArgs) -> Result<ExitCode, String> {
    let (param, ephemeral) = load_bundle(&args.keys)?;
    let mut session = SessionConfig::default();
    let mut users = HashMap::new();
    if let Some(path) = &args.config {
        let text = std::fs::read(path)
            .map_err(|err| format!("cannot read {}: {err}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_slice(&text).map_err(|_| "config is not JSON".to_string())?;
        if let Some(ttl) = value.get("ttl").and_then(|v| v.as_u64()) {
            session.ttl = ttl;
        }
        if let Some(grace) = value.get("grace").and_then(|v| v.as_u64()) {
            session.grace = grace;
        }
        users = load_users(&value)?;
    }
    let fingerprint = hex::encode(param.signer_fingerprint);
    let config = ServerConfig {
        signed_param: param,
        server_ephemeral: ephemeral,
        session,
        users,
        enforce_encryption: !args.allow_plaintext,
    };
    let server = Arc::new(
        TunnelServer::new(config, Box::new(DemoApi), unix_now())
            .map_err(|err| err.to_string())?,
    );
    let handle = httpd::spawn(
        &args.listen,
        Arc::new(move |request: &OuterRequest| server.handle(request, unix_now())),
    )
    .map_err(|err| err.to_string())?;
    println!("listening on {} (fingerprint {fingerprint})", handle.url());
    loop {
        std::thread::park();
    }
}

fn parse_pin(pin: &str) -> Result<[u8; 32], String> {
    hex::decode(pin)
        .ok()
        .and_then(|b| <[u8; 32]>::try_from(b.as_slice()).ok())
        .ok_or_else(|| "pin must be 64 hex characters".to_string())
}

fn split_credentials(spec: &str) -> Result<(String, String), String> {
    spec.split_once(':')
        .map(|(i, p)| (i.to_string(), p.to_string()))
        .ok_or_else(|| "expected identity:password".to_string())
}

fn request(args: RequestArgs) -> Result<ExitCode, String> {
    let pin = parse_pin(&args.pin)?;
    let transport = HttpTransport::new(&args.url);
    let client = match &args.session_file {
        Some(path) if path.exists() => {
            let text = std::fs::read(path).map_err(|err| err.to_string())?;
            let handle: SessionHandle =
                serde_json::from_slice(&text).map_err(|_| "unreadable session file".to_string())?;
            Client::resume(transport, pin, &handle)
        }
        _ => match Client::handshake(transport, pin) {
            Ok(client) => client,
            Err(err) => {
                eprintln!("handshake failed: {err}");
                return Ok(ExitCode::from(2));
            }
        },
    };

    if let Some(spec) = &args.login {
        let (identity, password) = split_credentials(spec)?;
        if let Err(err) = client.login(&identity, &password) {
            eprintln!("login failed: {err}");
            return Ok(ExitCode::from(4));
        }
        eprintln!("login ok");
    }

    let mut inner = InnerMessage::request(&args.method.to_uppercase(), &args.path);
    for header in &args.headers {
        let (name, value) = header
            .split_once(':')
            .ok_or_else(|| format!("bad header `{header}`; expected `Name: value`"))?;
        inner = inner.with_header(name.trim(), value.trim());
    }
    if let Some(data) = &args.data {
        inner = inner.with_body(data.as_bytes().to_vec());
    }

    let exit = match client.send(&inner) {
        Ok(response) => {
            eprintln!("{}", response.start_line);
            for (name, value) in &response.headers {
                eprintln!("{name}: {value}");
            }
            std::io::stdout().write_all(&response.body).map_err(|err| err.to_string())?;
            ExitCode::SUCCESS
        }
        Err(ClientError::Server(err)) => {
            eprintln!("server error {}: {}", err.code, err.message);
            ExitCode::from(3)
        }
        Err(err) => {
            eprintln!("request failed: {err}");
            ExitCode::from(2)
        }
    };

    if let Some(path) = &args.session_file {
        let handle = client.export_session();
        let text = serde_json::to_string(&handle).expect("serializable");
        write_private(path, text.as_bytes(), true)?;
    }
    Ok(exit)
}

fn proxy(args: ProxyArgs) -> Result<ExitCode, String> {
    let pin = parse_pin(&args.pin)?;
    let mitm = match &args.mitm {
        Some(spec) => {
            let (identity, password) = split_credentials(spec)?;
            Some(MitmConfig { identity, password })
        }
        None => None,
    };
    let transport = HttpTransport::new(&args.upstream);
    let client = Client::handshake(transport, pin).map_err(|err| err.to_string())?;
    let proxy = Arc::new(Proxy::new(client, mitm));
    let handle = httpd::spawn(
        &args.listen,
        Arc::new(move |request: &OuterRequest| proxy.handle_plain(request)),
    )
    .map_err(|err| err.to_string())?;
    println!("proxy listening on {} -> {}", handle.url(), args.upstream);
    loop {
        std::thread::park();
    }
}
