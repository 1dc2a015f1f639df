//! Command-line driver over the library.
//!
//! A data directory holds the genesis document, the append-only transaction
//! log, the sealed block log, and a keystore of named signing keys. Every
//! mutating subcommand signs and applies exactly one transaction and appends
//! it to the log before reporting success. State is always rebuilt by
//! replaying the log from genesis; there is no hidden state.
//!
//! Exit codes: 0 success, 1 domain error (the rejection reason code is
//! printed on its own line), 2 usage error.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::amm::{self, SwapDirection};
use crate::canonical::{self, field, Value};
use crate::crypto::{Address, Hash, Keypair, Scheme};
use crate::ledger::{
    replay, seal_block, verify_chain, Block, Payload, Receipt, SignedTransaction, TxStatus,
};
use crate::quorum;
use crate::registry::Role;
use crate::state::WorldState;
use crate::storage::{
    self, append_block, append_tx, load_genesis, read_blocks, read_log, write_genesis,
    GenesisConfig, GenesisFunding, GenesisVerifier,
};
use crate::token;

const GENESIS_FILE: &str = "chain.genesis";
const TXLOG_FILE: &str = "chain.txlog";
const BLOCKS_FILE: &str = "chain.blocks";
const KEYS_DIR: &str = "keys";

#[derive(Parser)]
#[command(
    name = "carbon-ledger",
    version,
    about = "Deterministic carbon-credit ledger: registry, quorum minting, retirement, AMM"
)]
struct Cli {
    /// Data directory holding genesis, logs, and the keystore.
    #[arg(long, global = true, default_value = "./carbon-data")]
    data_dir: PathBuf,

    /// Keystore identity that signs the transaction.
    #[arg(long = "as", global = true, value_name = "KEY")]
    identity: Option<String>,

    /// Block timestamp in seconds (seal); defaults to the wall clock.
    #[arg(long, global = true)]
    timestamp: Option<u64>,

    /// Emit machine-readable canonical output only.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a data directory: genesis document, empty logs.
    Init(InitArgs),
    /// Generate a named signing key in the keystore.
    Keygen(KeygenArgs),
    /// Register the signing identity under a role.
    Register(RegisterArgs),
    /// Grant or revoke verifier accreditation (admin only).
    Accredit(AccreditArgs),
    /// Submit a carbon-credit claim for verifier approval.
    SubmitCredit(SubmitCreditArgs),
    /// Approve a proposal as an eligible verifier.
    Approve { proposal_id: u64 },
    /// Transfer carbon tokens to a registered account.
    Transfer(TransferArgs),
    /// Retire carbon tokens into the burn sink.
    Burn(BurnArgs),
    /// List retirement certificates.
    Certificates,
    /// Pool operations: create, add, remove, swap, price.
    Pool {
        #[command(subcommand)]
        command: PoolCommand,
    },
    /// Show carbon and stable balances and supply totals.
    Balances,
    /// Seal pending accepted transactions into a block.
    Seal,
    /// Chain inspection.
    Chain {
        #[command(subcommand)]
        command: ChainCommand,
    },
    /// Replay the transaction log from genesis and print the state root.
    Replay,
    /// Snapshot operations.
    Snapshot {
        #[command(subcommand)]
        command: SnapshotCommand,
    },
}

#[derive(Args)]
struct InitArgs {
    #[arg(long, default_value = "carbon-devnet")]
    chain_id: String,
    /// Keystore name of the admin key (must already exist).
    #[arg(long, default_value = "admin")]
    admin: String,
    /// Keystore name to install as an accredited verifier (repeatable).
    #[arg(long = "verifier", value_name = "KEY")]
    verifiers: Vec<String>,
    /// Account to register and fund with the stable asset at genesis:
    /// KEY:ROLE:AMOUNT, amount in base units (repeatable).
    #[arg(long = "fund", value_name = "KEY:ROLE:AMOUNT")]
    fundings: Vec<FundSpec>,
}

#[derive(Clone)]
struct FundSpec {
    key_name: String,
    role: Role,
    quantity: u64,
}

impl std::str::FromStr for FundSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<FundSpec, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, role, amount] = parts.as_slice() else {
            return Err("expected KEY:ROLE:AMOUNT".into());
        };
        validate_key_name(name)?;
        let role = match *role {
            "verifier" => Role::Verifier,
            "credit-holder" | "credit_holder" => Role::CreditHolder,
            "customer" => Role::Customer,
            other => return Err(format!("unknown role {other:?}")),
        };
        let quantity: u64 = amount.parse().map_err(|_| "amount must be an unsigned integer")?;
        Ok(FundSpec { key_name: name.to_string(), role, quantity })
    }
}

#[derive(Args)]
struct KeygenArgs {
    /// Keystore name for the new key.
    #[arg(value_parser = parse_key_name)]
    name: String,
    #[arg(long, value_enum, default_value_t = SchemeArg::Ed25519)]
    scheme: SchemeArg,
    /// 64-hex-char seed for deterministic key derivation.
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ed25519,
    Mock,
}

#[derive(Args)]
struct RegisterArgs {
    #[arg(long, value_enum)]
    role: RoleArg,
    /// Display name recorded on the ledger (at most 128 bytes).
    #[arg(long)]
    name: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Verifier,
    CreditHolder,
    Customer,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Role {
        match r {
            RoleArg::Verifier => Role::Verifier,
            RoleArg::CreditHolder => Role::CreditHolder,
            RoleArg::Customer => Role::Customer,
        }
    }
}

#[derive(Args)]
struct AccreditArgs {
    /// Target verifier: keystore name or 64-hex address.
    #[arg(long)]
    target: String,
    /// Revoke instead of grant.
    #[arg(long)]
    revoke: bool,
}

#[derive(Args)]
struct SubmitCreditArgs {
    /// Project tag, e.g. reforestation or sequestration.
    #[arg(long)]
    project_kind: String,
    /// 64-hex-char hash of the off-chain evidence bundle.
    #[arg(long)]
    evidence: String,
    /// Claimed tonnage in base units (1 token = 1 tCO2e = 1000000 units).
    #[arg(long)]
    tonnage: u64,
}

#[derive(Args)]
struct TransferArgs {
    /// Recipient: keystore name or 64-hex address.
    #[arg(long)]
    to: String,
    /// Amount in base units.
    #[arg(long)]
    amount: u64,
}

#[derive(Args)]
struct BurnArgs {
    /// Amount in base units.
    #[arg(long)]
    amount: u64,
}

#[derive(Subcommand)]
enum PoolCommand {
    /// Create the canonical pool from the signer's balances.
    Create {
        #[arg(long)]
        carbon: u64,
        #[arg(long)]
        stable: u64,
    },
    /// Add liquidity; both amounts deposit in full.
    Add {
        #[arg(long)]
        carbon: u64,
        #[arg(long)]
        stable: u64,
    },
    /// Redeem liquidity shares.
    Remove {
        #[arg(long)]
        shares: u64,
    },
    /// Swap exact input for at least --min-out of the other asset.
    Swap {
        #[arg(long = "in", value_enum)]
        direction: DirectionArg,
        #[arg(long)]
        amount: u64,
        #[arg(long, default_value_t = 0)]
        min_out: u64,
    },
    /// Print the spot price (stable per carbon).
    Price,
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Stable,
    Carbon,
}

impl From<DirectionArg> for SwapDirection {
    fn from(d: DirectionArg) -> SwapDirection {
        match d {
            DirectionArg::Stable => SwapDirection::StableIn,
            DirectionArg::Carbon => SwapDirection::CarbonIn,
        }
    }
}

#[derive(Subcommand)]
enum ChainCommand {
    /// Re-verify every block and transaction from genesis.
    Verify,
}

#[derive(Subcommand)]
enum SnapshotCommand {
    /// Write the current state to a snapshot file.
    Write {
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a snapshot, verifying its embedded root.
    Read {
        #[arg(long)]
        file: PathBuf,
    },
}

/// A CLI-level failure: exit 1 with the message on its own output line
/// (a bare rejection code when the failure is a rejected transaction).
struct CliError {
    code_line: String,
}

impl CliError {
    fn new(msg: impl Into<String>) -> CliError {
        CliError { code_line: msg.into() }
    }
}

impl From<storage::StorageError> for CliError {
    fn from(e: storage::StorageError) -> CliError {
        CliError::new(e.to_string())
    }
}

/// Runs the CLI against explicit writers and returns the process exit code.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(out, "{}", e.code_line);
            1
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = cli.data_dir.as_path();
    match &cli.command {
        Command::Init(args) => cmd_init(cli, args, out),
        Command::Keygen(args) => cmd_keygen(cli, args, out),
        Command::Register(args) => {
            let payload = Payload::Register {
                role: args.role.into(),
                public_key: required_identity(cli)?.public_key().to_vec(),
                display_name: args.name.clone(),
            };
            mutate(cli, payload, out, |_, out, json| {
                if !json {
                    let kp = required_identity(cli)?;
                    writeln_or_die(out, format!("address {}", kp.address()));
                }
                Ok(())
            })
        }
        Command::Accredit(args) => {
            let target = resolve_address(dir, &args.target)?;
            let payload = Payload::SetAccreditation { target, accredited: !args.revoke };
            mutate(cli, payload, out, |_, _, _| Ok(()))
        }
        Command::SubmitCredit(args) => {
            let evidence_hash = Hash::from_hex(&args.evidence)
                .map_err(|e| CliError::new(format!("bad --evidence: {e}")))?;
            let payload = Payload::SubmitCredit {
                project_kind: args.project_kind.clone(),
                evidence_hash,
                tonnage: args.tonnage,
            };
            mutate(cli, payload, out, |receipt, out, json| {
                if !json {
                    if let [submission_id, proposal_id] = receipt.emitted_ids[..] {
                        writeln_or_die(out, format!("submission_id {submission_id}"));
                        writeln_or_die(out, format!("proposal_id {proposal_id}"));
                    }
                }
                Ok(())
            })
        }
        Command::Approve { proposal_id } => {
            let pid = *proposal_id;
            let payload = Payload::Approve { proposal_id: pid };
            mutate(cli, payload, out, move |receipt, out, json| {
                let session = Session::open(dir)?;
                let tally = quorum::tally(&session.state, pid)
                    .map_err(|r| CliError::new(r.code()))?;
                if json {
                    let doc = Value::record([
                        ("approvals", Value::uint(tally.approvals)),
                        ("needed", Value::uint(tally.needed)),
                        ("proposal_id", Value::uint(pid)),
                        ("status", Value::text(tally.status.name())),
                    ]);
                    writeln_or_die(out, doc.to_string());
                } else {
                    writeln_or_die(out, format!("approvals {}", tally.approvals));
                    writeln_or_die(out, format!("needed {}", tally.needed));
                    writeln_or_die(out, format!("proposal_status {}", tally.status.name()));
                    if let [certificate_id] = receipt.emitted_ids[..] {
                        writeln_or_die(out, format!("certificate_id {certificate_id}"));
                    }
                }
                Ok(())
            })
        }
        Command::Transfer(args) => {
            let to = resolve_address(dir, &args.to)?;
            mutate(cli, Payload::Transfer { to, amount: args.amount }, out, |_, _, _| Ok(()))
        }
        Command::Burn(args) => {
            mutate(cli, Payload::RequestBurn { amount: args.amount }, out, |receipt, out, json| {
                if !json {
                    if let [burn_id, proposal_id] = receipt.emitted_ids[..] {
                        writeln_or_die(out, format!("burn_id {burn_id}"));
                        writeln_or_die(out, format!("proposal_id {proposal_id}"));
                    }
                }
                Ok(())
            })
        }
        Command::Certificates => cmd_certificates(cli, out),
        Command::Pool { command } => cmd_pool(cli, command, out),
        Command::Balances => cmd_balances(cli, out),
        Command::Seal => cmd_seal(cli, out),
        Command::Chain { command: ChainCommand::Verify } => cmd_verify(cli, out),
        Command::Replay => cmd_replay(cli, out),
        Command::Snapshot { command } => cmd_snapshot(cli, command, out),
    }
}

// ---------------------------------------------------------------------------
// Keystore
// ---------------------------------------------------------------------------

fn validate_key_name(name: &str) -> Result<(), String> {
    let ok = !name.is_empty()
        && name.len() <= 64
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err("key names are 1-64 chars of [A-Za-z0-9_-]".into())
    }
}

fn parse_key_name(s: &str) -> Result<String, String> {
    validate_key_name(s)?;
    Ok(s.to_string())
}

fn key_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(KEYS_DIR).join(format!("{name}.key"))
}

fn save_key(dir: &Path, name: &str, kp: &Keypair) -> Result<(), CliError> {
    let path = key_path(dir, name);
    if path.exists() {
        return Err(CliError::new(format!("key {name:?} already exists")));
    }
    std::fs::create_dir_all(path.parent().expect("key path has a parent"))
        .map_err(|e| CliError::new(format!("cannot create keystore: {e}")))?;
    let doc = Value::record([
        ("public_key", Value::bytes(kp.public_key())),
        ("scheme", Value::text(kp.scheme().name())),
        ("secret_key", Value::bytes(&kp.secret_seed())),
    ]);
    std::fs::write(&path, canonical::to_bytes(&doc))
        .map_err(|e| CliError::new(format!("cannot write key file: {e}")))?;
    Ok(())
}

fn load_key(dir: &Path, name: &str) -> Result<Keypair, CliError> {
    validate_key_name(name).map_err(CliError::new)?;
    let path = key_path(dir, name);
    let bytes = std::fs::read(&path)
        .map_err(|_| CliError::new(format!("no key named {name:?} in the keystore")))?;
    let parse = || -> Result<Keypair, String> {
        let value = canonical::parse(&bytes).map_err(|e| e.to_string())?;
        let m = value.as_map().map_err(|e| e.to_string())?;
        let scheme =
            Scheme::from_name(field(m, "scheme").map_err(|e| e.to_string())?.as_text().map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let secret =
            field(m, "secret_key").map_err(|e| e.to_string())?.as_hex_bytes().map_err(|e| e.to_string())?;
        let seed: [u8; 32] =
            secret.as_slice().try_into().map_err(|_| "secret key must be 32 bytes".to_string())?;
        let kp = Keypair::from_seed(scheme, seed).map_err(|e| e.to_string())?;
        let stored_public =
            field(m, "public_key").map_err(|e| e.to_string())?.as_hex_bytes().map_err(|e| e.to_string())?;
        if kp.public_key() != stored_public {
            return Err("key file public key does not match its secret".into());
        }
        Ok(kp)
    };
    parse().map_err(|e| CliError::new(format!("bad key file for {name:?}: {e}")))
}

fn required_identity(cli: &Cli) -> Result<Keypair, CliError> {
    let name = cli
        .identity
        .as_deref()
        .ok_or_else(|| CliError::new("this command needs a signer; pass --as <key>"))?;
    load_key(&cli.data_dir, name)
}

/// Keystore name or 64-hex address.
fn resolve_address(dir: &Path, target: &str) -> Result<Address, CliError> {
    if target.len() == 64 && target.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Address::from_hex(target).map_err(|e| CliError::new(format!("bad address: {e}")));
    }
    Ok(load_key(dir, target)?.address())
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

struct Session {
    genesis: WorldState,
    state: WorldState,
    log: Vec<SignedTransaction>,
    blocks: Vec<Block>,
}

impl Session {
    fn open(dir: &Path) -> Result<Session, CliError> {
        let genesis_path = dir.join(GENESIS_FILE);
        if !genesis_path.exists() {
            return Err(CliError::new(format!(
                "no chain at {}; run init first",
                dir.display()
            )));
        }
        let genesis = load_genesis(&genesis_path)?;
        let log_path = dir.join(TXLOG_FILE);
        let log = if log_path.exists() { read_log(&log_path)? } else { Vec::new() };
        let blocks_path = dir.join(BLOCKS_FILE);
        let blocks = if blocks_path.exists() { read_blocks(&blocks_path)? } else { Vec::new() };
        let covered: usize = blocks.iter().map(|b| b.transactions.len()).sum();
        if covered > log.len() {
            return Err(CliError::new("block log covers more transactions than the txlog"));
        }
        let state = replay(&genesis, &log);
        Ok(Session { genesis, state, log, blocks })
    }

    fn covered(&self) -> usize {
        self.blocks.iter().map(|b| b.transactions.len()).sum()
    }

    fn pending(&self) -> &[SignedTransaction] {
        &self.log[self.covered()..]
    }

    fn tip(&self) -> Block {
        self.blocks.last().cloned().unwrap_or_else(|| Block::genesis(&self.genesis))
    }
}

/// Signs, applies, and logs one transaction, then prints the receipt (plus
/// any command-specific lines via `extra`). A rejection exits 1 with the
/// reason code on its own line.
fn mutate(
    cli: &Cli,
    payload: Payload,
    out: &mut dyn Write,
    extra: impl FnOnce(&Receipt, &mut dyn Write, bool) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let kp = required_identity(cli)?;
    let mut session = Session::open(&cli.data_dir)?;
    let nonce = session.state.nonce(kp.address());
    let tx = SignedTransaction::sign(&kp, nonce, payload);
    let (next, receipt) = crate::ledger::apply_transaction(&session.state, &tx);
    match receipt.status {
        TxStatus::Accepted => {
            // Durable before reported: the log append precedes any output.
            append_tx(&cli.data_dir.join(TXLOG_FILE), &tx)?;
            session.state = next;
            if cli.json {
                writeln_or_die(out, receipt.to_value().to_string());
            } else {
                writeln_or_die(out, "status accepted".to_string());
                writeln_or_die(out, format!("tx_hash {}", receipt.tx_hash));
                if !receipt.emitted_ids.is_empty() {
                    let ids: Vec<String> =
                        receipt.emitted_ids.iter().map(|id| id.to_string()).collect();
                    writeln_or_die(out, format!("emitted_ids {}", ids.join(",")));
                }
            }
            extra(&receipt, out, cli.json)?;
            Ok(())
        }
        TxStatus::Rejected(reason) => {
            if cli.json {
                writeln_or_die(out, receipt.to_value().to_string());
                Err(CliError::new(reason.code()))
            } else {
                writeln_or_die(out, "status rejected".to_string());
                Err(CliError::new(reason.code()))
            }
        }
    }
}

fn writeln_or_die(out: &mut dyn Write, line: String) {
    writeln!(out, "{line}").expect("stdout write failed");
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_init(cli: &Cli, args: &InitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = cli.data_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| CliError::new(format!("cannot create data dir: {e}")))?;
    let genesis_path = dir.join(GENESIS_FILE);
    if genesis_path.exists() {
        return Err(CliError::new(format!("chain already initialized at {}", dir.display())));
    }
    let admin = load_key(dir, &args.admin)?;
    let initial_verifiers = args
        .verifiers
        .iter()
        .map(|name| {
            Ok(GenesisVerifier {
                public_key: load_key(dir, name)?.public_key().to_vec(),
                display_name: name.clone(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let initial_stable_balances = args
        .fundings
        .iter()
        .map(|f| {
            Ok(GenesisFunding {
                public_key: load_key(dir, &f.key_name)?.public_key().to_vec(),
                role: f.role,
                display_name: f.key_name.clone(),
                quantity: f.quantity,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let config = GenesisConfig {
        chain_id: args.chain_id.clone(),
        admin_public_key: admin.public_key().to_vec(),
        initial_verifiers,
        initial_stable_balances,
    };
    let state = config.build_state()?;
    write_genesis(&genesis_path, &config)?;
    std::fs::write(dir.join(TXLOG_FILE), b"").map_err(storage::StorageError::from)?;
    std::fs::write(dir.join(BLOCKS_FILE), b"").map_err(storage::StorageError::from)?;

    if cli.json {
        let doc = Value::record([
            ("admin", state.admin.to_value()),
            ("chain_id", Value::text(&state.chain_id)),
            ("genesis_root", state.state_root().to_value()),
        ]);
        writeln_or_die(out, doc.to_string());
    } else {
        writeln_or_die(out, format!("chain_id {}", state.chain_id));
        writeln_or_die(out, format!("admin {}", state.admin));
        writeln_or_die(out, format!("genesis_root {}", state.state_root()));
    }
    Ok(())
}

fn cmd_keygen(cli: &Cli, args: &KeygenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scheme = match args.scheme {
        SchemeArg::Ed25519 => Scheme::Ed25519,
        SchemeArg::Mock => Scheme::Mock,
    };
    let kp = match &args.seed {
        Some(seed_hex) => {
            let bytes = hex::decode(seed_hex)
                .map_err(|e| CliError::new(format!("bad --seed hex: {e}")))?;
            let seed: [u8; 32] = bytes
                .as_slice()
                .try_into()
                .map_err(|_| CliError::new("--seed must be 64 hex chars (32 bytes)"))?;
            Keypair::from_seed(scheme, seed).map_err(|e| CliError::new(e.to_string()))?
        }
        None => Keypair::generate(scheme),
    };
    save_key(&cli.data_dir, &args.name, &kp)?;
    if cli.json {
        let doc = Value::record([
            ("address", kp.address().to_value()),
            ("name", Value::text(&args.name)),
            ("public_key", Value::bytes(kp.public_key())),
        ]);
        writeln_or_die(out, doc.to_string());
    } else {
        writeln_or_die(out, format!("name {}", args.name));
        writeln_or_die(out, format!("address {}", kp.address()));
        writeln_or_die(out, format!("public_key {}", hex::encode(kp.public_key())));
    }
    Ok(())
}

fn cmd_certificates(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let session = Session::open(&cli.data_dir)?;
    let view = token::query_balances(&session.state);
    if cli.json {
        let list = Value::List(view.certificates.iter().map(|c| c.to_value()).collect());
        writeln_or_die(out, list.to_string());
    } else {
        for c in &view.certificates {
            writeln_or_die(
                out,
                format!(
                    "certificate {} owner {} tonnage {} burn_id {} issued_at {}",
                    c.id, c.owner, c.tonnage, c.burn_id, c.issued_at
                ),
            );
        }
        writeln_or_die(out, format!("count {}", view.certificates.len()));
    }
    Ok(())
}

fn display_name_of(state: &WorldState, addr: &Address) -> String {
    if *addr == Address::BURN_SINK {
        return "(burn-sink)".into();
    }
    if *addr == amm::pool_address() {
        return "(pool)".into();
    }
    if *addr == state.admin {
        return "(admin)".into();
    }
    state
        .accounts
        .get(addr)
        .map(|r| r.display_name.clone())
        .unwrap_or_else(|| "(unregistered)".into())
}

fn cmd_balances(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let session = Session::open(&cli.data_dir)?;
    let view = token::query_balances(&session.state);
    if cli.json {
        let carbon: BTreeMap<String, Value> =
            view.balances.iter().map(|(a, q)| (a.to_hex(), Value::uint(*q))).collect();
        let stable: BTreeMap<String, Value> =
            view.stable_balances.iter().map(|(a, q)| (a.to_hex(), Value::uint(*q))).collect();
        let doc = Value::record([
            ("burned", Value::uint(view.burned)),
            ("carbon_balances", Value::Map(carbon)),
            ("stable_balances", Value::Map(stable)),
            ("stable_total", Value::uint(view.stable_total)),
            ("total_minted", Value::uint(view.total_minted)),
        ]);
        writeln_or_die(out, doc.to_string());
    } else {
        writeln_or_die(out, format!("total_minted {}", view.total_minted));
        writeln_or_die(out, format!("burned {}", view.burned));
        writeln_or_die(out, format!("stable_total {}", view.stable_total));
        for (addr, amount) in &view.balances {
            let name = display_name_of(&session.state, addr);
            writeln_or_die(out, format!("carbon {addr} {name} {amount}"));
        }
        for (addr, amount) in &view.stable_balances {
            let name = display_name_of(&session.state, addr);
            writeln_or_die(out, format!("stable {addr} {name} {amount}"));
        }
    }
    Ok(())
}

fn cmd_pool(cli: &Cli, command: &PoolCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        PoolCommand::Create { carbon, stable } => {
            let payload = Payload::CreatePool { carbon_amount: *carbon, stable_amount: *stable };
            mutate(cli, payload, out, |_, out, json| {
                let session = Session::open(&cli.data_dir)?;
                if !json {
                    writeln_or_die(out, format!("shares {}", session.state.lp_shares.total_shares));
                }
                Ok(())
            })
        }
        PoolCommand::Add { carbon, stable } => {
            let kp = required_identity(cli)?;
            let before = Session::open(&cli.data_dir)?.state.lp_shares.balance(kp.address());
            let payload = Payload::AddLiquidity { carbon_in: *carbon, stable_in: *stable };
            mutate(cli, payload, out, move |_, out, json| {
                let session = Session::open(&cli.data_dir)?;
                if !json {
                    let after = session.state.lp_shares.balance(kp.address());
                    writeln_or_die(out, format!("shares {}", after - before));
                }
                Ok(())
            })
        }
        PoolCommand::Remove { shares } => {
            let kp = required_identity(cli)?;
            let before = Session::open(&cli.data_dir)?.state;
            let carbon_before = before.token.balance(token::Asset::Carbon, kp.address());
            let stable_before = before.token.balance(token::Asset::Stable, kp.address());
            let payload = Payload::RemoveLiquidity { shares: *shares };
            mutate(cli, payload, out, move |_, out, json| {
                let session = Session::open(&cli.data_dir)?;
                if !json {
                    let carbon_out =
                        session.state.token.balance(token::Asset::Carbon, kp.address()) - carbon_before;
                    let stable_out =
                        session.state.token.balance(token::Asset::Stable, kp.address()) - stable_before;
                    writeln_or_die(out, format!("carbon_out {carbon_out}"));
                    writeln_or_die(out, format!("stable_out {stable_out}"));
                }
                Ok(())
            })
        }
        PoolCommand::Swap { direction, amount, min_out } => {
            let dir: SwapDirection = (*direction).into();
            // Quote against the pre-state so the printed figures are the
            // exact executed ones (the tx re-derives the same quote).
            let session = Session::open(&cli.data_dir)?;
            let pool = session.state.pool;
            let payload = Payload::Swap { direction: dir, amount_in: *amount, min_out: *min_out };
            mutate(cli, payload, out, move |_, out, json| {
                let pool = pool.ok_or_else(|| CliError::new("NoPool"))?;
                let quote = amm::quote_swap(&pool, dir, *amount)
                    .map_err(|r| CliError::new(r.code()))?;
                if json {
                    let doc = Value::record([
                        ("amount_in", Value::uint(quote.amount_in)),
                        ("amount_out", Value::uint(quote.amount_out)),
                        ("direction", Value::text(dir.name())),
                        ("new_carbon_reserve", Value::uint(quote.new_carbon_reserve)),
                        ("new_stable_reserve", Value::uint(quote.new_stable_reserve)),
                    ]);
                    writeln_or_die(out, doc.to_string());
                } else {
                    writeln_or_die(out, format!("amount_out {}", quote.amount_out));
                    writeln_or_die(
                        out,
                        format!(
                            "new_reserves carbon {} stable {}",
                            quote.new_carbon_reserve, quote.new_stable_reserve
                        ),
                    );
                }
                Ok(())
            })
        }
        PoolCommand::Price => {
            let session = Session::open(&cli.data_dir)?;
            let pool = session.state.pool.ok_or_else(|| CliError::new("NoPool"))?;
            let price = amm::spot_price(&pool);
            if cli.json {
                let doc = Value::record([
                    ("denominator", Value::uint(price.denominator)),
                    ("numerator", Value::uint(price.numerator)),
                ]);
                writeln_or_die(out, doc.to_string());
            } else {
                writeln_or_die(out, format!("price {}/{}", price.numerator, price.denominator));
                writeln_or_die(out, format!("price_decimal {}", price.to_decimal_string()));
            }
            Ok(())
        }
    }
}

fn cmd_seal(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let session = Session::open(&cli.data_dir)?;
    let timestamp = cli.timestamp.unwrap_or_else(now_seconds);
    let pending = session.pending().to_vec();
    let block = seal_block(&session.tip(), pending, timestamp, &session.state)
        .map_err(|e| CliError::new(e.to_string()))?;
    append_block(&cli.data_dir.join(BLOCKS_FILE), &block)?;
    if cli.json {
        let doc = Value::record([
            ("block_hash", block.header_hash().to_value()),
            ("height", Value::uint(block.height)),
            ("state_root", block.state_root.to_value()),
            ("transactions", Value::uint(block.transactions.len() as u64)),
        ]);
        writeln_or_die(out, doc.to_string());
    } else {
        writeln_or_die(out, format!("height {}", block.height));
        writeln_or_die(out, format!("block_hash {}", block.header_hash()));
        writeln_or_die(out, format!("state_root {}", block.state_root));
        writeln_or_die(out, format!("transactions {}", block.transactions.len()));
    }
    Ok(())
}

fn cmd_verify(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let session = Session::open(&cli.data_dir)?;
    match verify_chain(&session.genesis, &session.blocks, None) {
        Ok(()) => {
            if cli.json {
                writeln_or_die(out, Value::record([("ok", Value::Bool(true))]).to_string());
            } else {
                writeln_or_die(out, "ok".to_string());
            }
            Ok(())
        }
        Err(v) => {
            if cli.json {
                let doc = Value::record([
                    ("height", Value::uint(v.height)),
                    ("kind", Value::text(v.kind.name())),
                    ("ok", Value::Bool(false)),
                ]);
                writeln_or_die(out, doc.to_string());
            }
            Err(CliError::new(format!("violation height {} kind {}", v.height, v.kind.name())))
        }
    }
}

fn cmd_replay(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let session = Session::open(&cli.data_dir)?;
    // Session state is itself a replay; do it again explicitly so this
    // command is a genuine second, independent pass over the log.
    let replayed = replay(&session.genesis, &session.log);
    if replayed.state_root() != session.state.state_root() {
        return Err(CliError::new("replay diverged between two passes over the same log"));
    }
    if cli.json {
        let doc = Value::record([
            ("state_root", replayed.state_root().to_value()),
            ("transactions", Value::uint(session.log.len() as u64)),
        ]);
        writeln_or_die(out, doc.to_string());
    } else {
        writeln_or_die(out, format!("transactions {}", session.log.len()));
        writeln_or_die(out, format!("state_root {}", replayed.state_root()));
    }
    Ok(())
}

fn cmd_snapshot(cli: &Cli, command: &SnapshotCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        SnapshotCommand::Write { out: path } => {
            let session = Session::open(&cli.data_dir)?;
            let height = session.blocks.last().map(|b| b.height).unwrap_or(0);
            storage::write_snapshot(path, &session.state, height)?;
            if cli.json {
                let doc = Value::record([
                    ("height", Value::uint(height)),
                    ("state_root", session.state.state_root().to_value()),
                ]);
                writeln_or_die(out, doc.to_string());
            } else {
                writeln_or_die(out, format!("snapshot {}", path.display()));
                writeln_or_die(out, format!("height {height}"));
                writeln_or_die(out, format!("state_root {}", session.state.state_root()));
            }
            Ok(())
        }
        SnapshotCommand::Read { file } => {
            let (state, height) = storage::read_snapshot(file)?;
            if cli.json {
                let doc = Value::record([
                    ("chain_id", Value::text(&state.chain_id)),
                    ("height", Value::uint(height)),
                    ("state_root", state.state_root().to_value()),
                ]);
                writeln_or_die(out, doc.to_string());
            } else {
                writeln_or_die(out, format!("chain_id {}", state.chain_id));
                writeln_or_die(out, format!("height {height}"));
                writeln_or_die(out, format!("state_root {}", state.state_root()));
            }
            Ok(())
        }
    }
}

fn now_seconds() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
