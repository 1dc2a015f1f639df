//! Durable artifacts: genesis configuration, the append-only transaction
//! log, the block file, and state snapshots.
//!
//! Everything on disk is the canonical encoding, one document per file
//! (`.genesis`, `.snap`) or per line (`.txlog`, block file). Log and block
//! lines carry their own hash, so a flipped byte anywhere in a line is
//! detected at read time. The log is the source of truth; snapshots are an
//! optimization and verify their embedded root before loading.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::canonical::{self, expect_fields, field, DecodeError, Value};
use crate::crypto::{Address, Hash};
use crate::ledger::{Block, SignedTransaction};
use crate::registry::{AccountRecord, Role};
use crate::state::WorldState;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
    #[error("corrupt line {0}")]
    CorruptLine(usize),
    #[error("root mismatch: header says {expected}, state hashes to {actual}")]
    RootMismatch { expected: Hash, actual: Hash },
    #[error("duplicate account {0}")]
    DuplicateAccount(Address),
    #[error("invalid quantity")]
    InvalidQuantity,
}

impl From<canonical::CanonicalError> for StorageError {
    fn from(e: canonical::CanonicalError) -> Self {
        StorageError::Parse(e.to_string())
    }
}

impl From<DecodeError> for StorageError {
    fn from(e: DecodeError) -> Self {
        StorageError::Parse(e.to_string())
    }
}

/// A verifier accredited at height 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenesisVerifier {
    pub public_key: Vec<u8>,
    pub display_name: String,
}

/// An account registered and funded with the mock stable asset at height 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenesisFunding {
    pub public_key: Vec<u8>,
    pub role: Role,
    pub display_name: String,
    pub quantity: u64,
}

/// The trust-root bootstrap: admin key, initial verifier set, and stable
/// funding. Building the state is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenesisConfig {
    pub chain_id: String,
    pub admin_public_key: Vec<u8>,
    pub initial_verifiers: Vec<GenesisVerifier>,
    pub initial_stable_balances: Vec<GenesisFunding>,
}

impl GenesisConfig {
    pub fn to_value(&self) -> Value {
        let verifiers = self
            .initial_verifiers
            .iter()
            .map(|v| {
                Value::record([
                    ("display_name", Value::text(&v.display_name)),
                    ("public_key", Value::bytes(&v.public_key)),
                ])
            })
            .collect();
        let fundings = self
            .initial_stable_balances
            .iter()
            .map(|f| {
                Value::record([
                    ("display_name", Value::text(&f.display_name)),
                    ("public_key", Value::bytes(&f.public_key)),
                    ("quantity", Value::uint(f.quantity)),
                    ("role", Value::text(f.role.name())),
                ])
            })
            .collect();
        Value::record([
            ("admin_public_key", Value::bytes(&self.admin_public_key)),
            ("chain_id", Value::text(&self.chain_id)),
            ("initial_stable_balances", Value::List(fundings)),
            ("initial_verifiers", Value::List(verifiers)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<GenesisConfig, DecodeError> {
        let m = v.as_map()?;
        expect_fields(
            m,
            &["admin_public_key", "chain_id", "initial_stable_balances", "initial_verifiers"],
        )?;
        let mut initial_verifiers = Vec::new();
        for item in field(m, "initial_verifiers")?.as_list()? {
            let vm = item.as_map()?;
            expect_fields(vm, &["display_name", "public_key"])?;
            initial_verifiers.push(GenesisVerifier {
                public_key: field(vm, "public_key")?.as_hex_bytes()?,
                display_name: field(vm, "display_name")?.as_text()?.to_string(),
            });
        }
        let mut initial_stable_balances = Vec::new();
        for item in field(m, "initial_stable_balances")?.as_list()? {
            let fm = item.as_map()?;
            expect_fields(fm, &["display_name", "public_key", "quantity", "role"])?;
            initial_stable_balances.push(GenesisFunding {
                public_key: field(fm, "public_key")?.as_hex_bytes()?,
                role: Role::from_name(field(fm, "role")?.as_text()?)?,
                display_name: field(fm, "display_name")?.as_text()?.to_string(),
                quantity: field(fm, "quantity")?.as_u64()?,
            });
        }
        Ok(GenesisConfig {
            chain_id: field(m, "chain_id")?.as_text()?.to_string(),
            admin_public_key: field(m, "admin_public_key")?.as_hex_bytes()?,
            initial_verifiers,
            initial_stable_balances,
        })
    }

    /// Builds the height-0 state: admin installed, verifiers accredited,
    /// stable balances funded.
    pub fn build_state(&self) -> Result<WorldState, StorageError> {
        let mut state = WorldState::new(self.chain_id.clone(), self.admin_public_key.clone());
        if state.admin == Address::BURN_SINK {
            return Err(StorageError::DuplicateAccount(Address::BURN_SINK));
        }
        let mut install = |public_key: &[u8],
                           role: Role,
                           display_name: &str,
                           accredited: bool|
         -> Result<Address, StorageError> {
            let id = Address::from_public_key(public_key);
            if id == Address::BURN_SINK || id == state.admin || state.accounts.contains_key(&id) {
                return Err(StorageError::DuplicateAccount(id));
            }
            state.accounts.insert(
                id,
                AccountRecord {
                    id,
                    role,
                    public_key: public_key.to_vec(),
                    display_name: display_name.to_string(),
                    accredited,
                    registered_at: 0,
                },
            );
            Ok(id)
        };
        for v in &self.initial_verifiers {
            install(&v.public_key, Role::Verifier, &v.display_name, true)?;
        }
        let mut funded = Vec::new();
        for f in &self.initial_stable_balances {
            if f.quantity == 0 {
                return Err(StorageError::InvalidQuantity);
            }
            let id = install(&f.public_key, f.role, &f.display_name, false)?;
            funded.push((id, f.quantity));
        }
        for (id, quantity) in funded {
            state.token.credit(crate::token::Asset::Stable, id, quantity)
                .map_err(|_| StorageError::InvalidQuantity)?;
            state.token.stable_total = state
                .token
                .stable_total
                .checked_add(quantity)
                .ok_or(StorageError::InvalidQuantity)?;
        }
        Ok(state)
    }
}

pub fn write_genesis(path: &Path, config: &GenesisConfig) -> Result<(), StorageError> {
    write_atomic(path, &canonical::to_bytes(&config.to_value()))
}

pub fn read_genesis_config(path: &Path) -> Result<GenesisConfig, StorageError> {
    let bytes = std::fs::read(path)?;
    Ok(GenesisConfig::from_value(&canonical::parse(&bytes)?)?)
}

/// Loads a genesis file into the height-0 state.
pub fn load_genesis(path: &Path) -> Result<WorldState, StorageError> {
    read_genesis_config(path)?.build_state()
}

fn hashed_line(key: &'static str, hash: Hash, value: Value) -> Vec<u8> {
    let line = Value::record([(key, value), ("hash", hash.to_value())]);
    let mut bytes = canonical::to_bytes(&line);
    bytes.push(b'\n');
    bytes
}

/// Appends one accepted transaction to the log. Append only after the
/// engine accepted it; rejected transactions never enter the log.
pub fn append_tx(path: &Path, tx: &SignedTransaction) -> Result<(), StorageError> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(&hashed_line("tx", tx.hash(), tx.to_value()))?;
    file.sync_data()?;
    Ok(())
}

fn parse_hashed_line(
    line: &[u8],
    key: &'static str,
    lineno: usize,
) -> Result<Value, StorageError> {
    let corrupt = || StorageError::CorruptLine(lineno);
    let value = canonical::parse(line).map_err(|_| corrupt())?;
    let m = value.as_map().map_err(|_| corrupt())?;
    if m.len() != 2 {
        return Err(corrupt());
    }
    let stored_hash = Hash::from_value(field(m, "hash").map_err(|_| corrupt())?)
        .map_err(|_| corrupt())?;
    let inner = field(m, key).map_err(|_| corrupt())?;
    if crate::crypto::value_digest(inner) != stored_hash {
        return Err(corrupt());
    }
    Ok(inner.clone())
}

/// Complete newline-terminated lines of a file's contents. A missing final
/// newline marks the last segment as incomplete (a torn write).
fn complete_lines(contents: &[u8]) -> (Vec<&[u8]>, bool) {
    let mut lines: Vec<&[u8]> = contents.split(|b| *b == b'\n').collect();
    // split always yields a final segment; it is empty iff the file ended
    // with '\n'.
    let tail = lines.pop().unwrap_or(b"");
    (lines, !tail.is_empty())
}

fn read_tx_line(line: &[u8], lineno: usize) -> Result<SignedTransaction, StorageError> {
    let inner = parse_hashed_line(line, "tx", lineno)?;
    SignedTransaction::from_value(&inner).map_err(|_| StorageError::CorruptLine(lineno))
}

/// Reads the whole log. Any line that fails to parse, or whose content does
/// not match its recorded hash, is reported as `CorruptLine` (1-based); so
/// is a torn final line.
pub fn read_log(path: &Path) -> Result<Vec<SignedTransaction>, StorageError> {
    let contents = std::fs::read(path)?;
    let (lines, torn_tail) = complete_lines(&contents);
    let mut txs = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        txs.push(read_tx_line(line, i + 1)?);
    }
    if torn_tail {
        return Err(StorageError::CorruptLine(lines.len() + 1));
    }
    Ok(txs)
}

/// Recovers from a torn final write by truncating the log to its last
/// complete, self-consistent line, returning the count of kept entries.
/// Corruption anywhere before the final line is not recoverable and is
/// reported as `CorruptLine`.
pub fn repair_log(path: &Path) -> Result<usize, StorageError> {
    let contents = std::fs::read(path)?;
    let (lines, torn_tail) = complete_lines(&contents);
    let mut keep_bytes = 0usize;
    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 1;
        if read_tx_line(line, lineno).is_ok() {
            keep_bytes += line.len() + 1;
            continue;
        }
        // A bad complete line is recoverable only in final position.
        if i + 1 != lines.len() || torn_tail {
            return Err(StorageError::CorruptLine(lineno));
        }
        return truncate_to(path, keep_bytes, i);
    }
    if torn_tail {
        return truncate_to(path, keep_bytes, lines.len());
    }
    Ok(lines.len())
}

fn truncate_to(path: &Path, keep_bytes: usize, kept: usize) -> Result<usize, StorageError> {
    let file = OpenOptions::new().write(true).open(path)?;
    file.set_len(keep_bytes as u64)?;
    file.sync_data()?;
    Ok(kept)
}

pub fn append_block(path: &Path, block: &Block) -> Result<(), StorageError> {
    let value = block.to_value();
    let digest = crate::crypto::value_digest(&value);
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    file.write_all(&hashed_line("block", digest, value))?;
    file.sync_data()?;
    Ok(())
}

/// Reads the sealed blocks (heights 1..). Line hashes cover the whole block
/// including transactions, so any byte flip in a stored block is caught
/// here even before `verify_chain` runs.
pub fn read_blocks(path: &Path) -> Result<Vec<Block>, StorageError> {
    let contents = std::fs::read(path)?;
    let (lines, torn_tail) = complete_lines(&contents);
    let mut blocks = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 1;
        let inner = parse_hashed_line(line, "block", lineno)?;
        blocks.push(Block::from_value(&inner).map_err(|_| StorageError::CorruptLine(lineno))?);
    }
    if torn_tail {
        return Err(StorageError::CorruptLine(lines.len() + 1));
    }
    Ok(blocks)
}

/// Writes a snapshot document to a temporary name, then renames it into
/// place so concurrent readers never observe a torn file.
pub fn write_snapshot(path: &Path, state: &WorldState, height: u64) -> Result<(), StorageError> {
    let doc = Value::record([
        ("chain_id", Value::text(&state.chain_id)),
        ("height", Value::uint(height)),
        ("state", state.to_value()),
        ("state_root", state.state_root().to_value()),
    ]);
    write_atomic(path, &canonical::to_bytes(&doc))
}

/// Reads a snapshot and verifies the embedded root against a recomputation
/// before returning the state.
pub fn read_snapshot(path: &Path) -> Result<(WorldState, u64), StorageError> {
    let bytes = std::fs::read(path)?;
    let doc = canonical::parse(&bytes)?;
    let m = doc.as_map()?;
    expect_fields(m, &["chain_id", "height", "state", "state_root"])?;
    let expected = Hash::from_value(field(m, "state_root")?)?;
    let state = WorldState::from_value(field(m, "state")?)?;
    let actual = state.state_root();
    if actual != expected {
        return Err(StorageError::RootMismatch { expected, actual });
    }
    if field(m, "chain_id")?.as_text()? != state.chain_id {
        return Err(StorageError::Parse("snapshot header chain_id disagrees with state".into()));
    }
    let height = field(m, "height")?.as_u64()?;
    Ok((state, height))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StorageError> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_data()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
