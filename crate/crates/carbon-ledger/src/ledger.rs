//! The deterministic state machine: signed-transaction application, block
//! sealing with parent-hash linkage, chain verification, and replay.
//!
//! Application is atomic: a rejected transaction leaves the state
//! byte-identical and consumes no nonce. Blocks contain only accepted
//! transactions, so replaying a sealed chain re-accepts every one of them.

use thiserror::Error;

use crate::amm::{self, SwapDirection};
use crate::canonical::{decode_err, expect_fields, field, DecodeError, Value};
use crate::crypto::{self, value_digest, Address, Hash};
use crate::errors::Rejection;
use crate::quorum;
use crate::registry::{self, Role};
use crate::state::WorldState;
use crate::token;

/// One command, addressed to a module, carried by a signed transaction.
/// The signer (`sender`) is the acting party of every variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Register { role: Role, public_key: Vec<u8>, display_name: String },
    SetAccreditation { target: Address, accredited: bool },
    SubmitCredit { project_kind: String, evidence_hash: Hash, tonnage: u64 },
    Approve { proposal_id: u64 },
    Transfer { to: Address, amount: u64 },
    RequestBurn { amount: u64 },
    CreatePool { carbon_amount: u64, stable_amount: u64 },
    AddLiquidity { carbon_in: u64, stable_in: u64 },
    RemoveLiquidity { shares: u64 },
    Swap { direction: SwapDirection, amount_in: u64, min_out: u64 },
}

impl Payload {
    pub fn to_value(&self) -> Value {
        match self {
            Payload::Register { role, public_key, display_name } => Value::record([
                ("display_name", Value::text(display_name)),
                ("public_key", Value::bytes(public_key)),
                ("role", Value::text(role.name())),
                ("type", Value::text("register")),
            ]),
            Payload::SetAccreditation { target, accredited } => Value::record([
                ("accredited", Value::Bool(*accredited)),
                ("target", target.to_value()),
                ("type", Value::text("set_accreditation")),
            ]),
            Payload::SubmitCredit { project_kind, evidence_hash, tonnage } => Value::record([
                ("evidence_hash", evidence_hash.to_value()),
                ("project_kind", Value::text(project_kind)),
                ("tonnage", Value::uint(*tonnage)),
                ("type", Value::text("submit_credit")),
            ]),
            Payload::Approve { proposal_id } => Value::record([
                ("proposal_id", Value::uint(*proposal_id)),
                ("type", Value::text("approve")),
            ]),
            Payload::Transfer { to, amount } => Value::record([
                ("amount", Value::uint(*amount)),
                ("to", to.to_value()),
                ("type", Value::text("transfer")),
            ]),
            Payload::RequestBurn { amount } => Value::record([
                ("amount", Value::uint(*amount)),
                ("type", Value::text("request_burn")),
            ]),
            Payload::CreatePool { carbon_amount, stable_amount } => Value::record([
                ("carbon_amount", Value::uint(*carbon_amount)),
                ("stable_amount", Value::uint(*stable_amount)),
                ("type", Value::text("create_pool")),
            ]),
            Payload::AddLiquidity { carbon_in, stable_in } => Value::record([
                ("carbon_in", Value::uint(*carbon_in)),
                ("stable_in", Value::uint(*stable_in)),
                ("type", Value::text("add_liquidity")),
            ]),
            Payload::RemoveLiquidity { shares } => Value::record([
                ("shares", Value::uint(*shares)),
                ("type", Value::text("remove_liquidity")),
            ]),
            Payload::Swap { direction, amount_in, min_out } => Value::record([
                ("amount_in", Value::uint(*amount_in)),
                ("direction", Value::text(direction.name())),
                ("min_out", Value::uint(*min_out)),
                ("type", Value::text("swap")),
            ]),
        }
    }

    pub fn from_value(v: &Value) -> Result<Payload, DecodeError> {
        let m = v.as_map()?;
        let tag = field(m, "type")?.as_text()?;
        match tag {
            "register" => {
                expect_fields(m, &["display_name", "public_key", "role", "type"])?;
                Ok(Payload::Register {
                    role: Role::from_name(field(m, "role")?.as_text()?)?,
                    public_key: field(m, "public_key")?.as_hex_bytes()?,
                    display_name: field(m, "display_name")?.as_text()?.to_string(),
                })
            }
            "set_accreditation" => {
                expect_fields(m, &["accredited", "target", "type"])?;
                Ok(Payload::SetAccreditation {
                    target: Address::from_value(field(m, "target")?)?,
                    accredited: field(m, "accredited")?.as_bool()?,
                })
            }
            "submit_credit" => {
                expect_fields(m, &["evidence_hash", "project_kind", "tonnage", "type"])?;
                Ok(Payload::SubmitCredit {
                    project_kind: field(m, "project_kind")?.as_text()?.to_string(),
                    evidence_hash: Hash::from_value(field(m, "evidence_hash")?)?,
                    tonnage: field(m, "tonnage")?.as_u64()?,
                })
            }
            "approve" => {
                expect_fields(m, &["proposal_id", "type"])?;
                Ok(Payload::Approve { proposal_id: field(m, "proposal_id")?.as_u64()? })
            }
            "transfer" => {
                expect_fields(m, &["amount", "to", "type"])?;
                Ok(Payload::Transfer {
                    to: Address::from_value(field(m, "to")?)?,
                    amount: field(m, "amount")?.as_u64()?,
                })
            }
            "request_burn" => {
                expect_fields(m, &["amount", "type"])?;
                Ok(Payload::RequestBurn { amount: field(m, "amount")?.as_u64()? })
            }
            "create_pool" => {
                expect_fields(m, &["carbon_amount", "stable_amount", "type"])?;
                Ok(Payload::CreatePool {
                    carbon_amount: field(m, "carbon_amount")?.as_u64()?,
                    stable_amount: field(m, "stable_amount")?.as_u64()?,
                })
            }
            "add_liquidity" => {
                expect_fields(m, &["carbon_in", "stable_in", "type"])?;
                Ok(Payload::AddLiquidity {
                    carbon_in: field(m, "carbon_in")?.as_u64()?,
                    stable_in: field(m, "stable_in")?.as_u64()?,
                })
            }
            "remove_liquidity" => {
                expect_fields(m, &["shares", "type"])?;
                Ok(Payload::RemoveLiquidity { shares: field(m, "shares")?.as_u64()? })
            }
            "swap" => {
                expect_fields(m, &["amount_in", "direction", "min_out", "type"])?;
                Ok(Payload::Swap {
                    direction: SwapDirection::from_name(field(m, "direction")?.as_text()?)?,
                    amount_in: field(m, "amount_in")?.as_u64()?,
                    min_out: field(m, "min_out")?.as_u64()?,
                })
            }
            other => Err(decode_err(format!("unknown payload type {other:?}"))),
        }
    }
}

/// A nonce-ordered command signed over the SHA-256 digest of the canonical
/// serialization of (sender, nonce, payload).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedTransaction {
    pub sender: Address,
    pub nonce: u64,
    pub payload: Payload,
    pub signature: Vec<u8>,
}

impl SignedTransaction {
    /// The digest the sender signs.
    pub fn signing_digest(sender: Address, nonce: u64, payload: &Payload) -> Hash {
        let preimage = Value::record([
            ("nonce", Value::uint(nonce)),
            ("payload", payload.to_value()),
            ("sender", sender.to_value()),
        ]);
        value_digest(&preimage)
    }

    /// Builds and signs a transaction with the given keypair.
    pub fn sign(keypair: &crypto::Keypair, nonce: u64, payload: Payload) -> SignedTransaction {
        let sender = keypair.address();
        let digest = Self::signing_digest(sender, nonce, &payload);
        let signature = keypair.sign(&digest);
        SignedTransaction { sender, nonce, payload, signature }
    }

    /// Hash of the full transaction including the signature.
    pub fn hash(&self) -> Hash {
        value_digest(&self.to_value())
    }

    pub fn to_value(&self) -> Value {
        Value::record([
            ("nonce", Value::uint(self.nonce)),
            ("payload", self.payload.to_value()),
            ("sender", self.sender.to_value()),
            ("signature", Value::bytes(&self.signature)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<SignedTransaction, DecodeError> {
        let m = v.as_map()?;
        expect_fields(m, &["nonce", "payload", "sender", "signature"])?;
        Ok(SignedTransaction {
            sender: Address::from_value(field(m, "sender")?)?,
            nonce: field(m, "nonce")?.as_u64()?,
            payload: Payload::from_value(field(m, "payload")?)?,
            signature: field(m, "signature")?.as_hex_bytes()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxStatus {
    Accepted,
    Rejected(Rejection),
}

/// Application outcome. A rejected receipt implies the state did not change
/// at all; the nonce is not consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub tx_hash: Hash,
    pub status: TxStatus,
    /// Ids minted by this transaction (submissions, burns, proposals,
    /// certificates), in creation order.
    pub emitted_ids: Vec<u64>,
}

impl Receipt {
    pub fn is_accepted(&self) -> bool {
        matches!(self.status, TxStatus::Accepted)
    }

    pub fn to_value(&self) -> Value {
        let ids = Value::List(self.emitted_ids.iter().map(|id| Value::uint(*id)).collect());
        match self.status {
            TxStatus::Accepted => Value::record([
                ("emitted_ids", ids),
                ("status", Value::text("accepted")),
                ("tx_hash", self.tx_hash.to_value()),
            ]),
            TxStatus::Rejected(reason) => Value::record([
                ("emitted_ids", ids),
                ("reason", Value::text(reason.code())),
                ("status", Value::text("rejected")),
                ("tx_hash", self.tx_hash.to_value()),
            ]),
        }
    }
}

/// Applies one signed transaction. Returns the post-state and a receipt;
/// on rejection the returned state equals the input state.
pub fn apply_transaction(state: &WorldState, tx: &SignedTransaction) -> (WorldState, Receipt) {
    let tx_hash = tx.hash();
    match try_apply(state, tx) {
        Ok((next, emitted_ids)) => {
            (next, Receipt { tx_hash, status: TxStatus::Accepted, emitted_ids })
        }
        Err(reason) => (
            state.clone(),
            Receipt { tx_hash, status: TxStatus::Rejected(reason), emitted_ids: Vec::new() },
        ),
    }
}

fn try_apply(
    state: &WorldState,
    tx: &SignedTransaction,
) -> Result<(WorldState, Vec<u64>), Rejection> {
    // Resolve the key the signature must verify against. Registration is
    // self-signed by the key being registered; everything else needs an
    // on-ledger key (or the genesis admin key).
    let public_key: &[u8] = match &tx.payload {
        Payload::Register { public_key, .. } => {
            if Address::from_public_key(public_key) != tx.sender {
                return Err(Rejection::BadSignature);
            }
            public_key
        }
        _ if tx.sender == state.admin => &state.admin_public_key,
        _ => match state.accounts.get(&tx.sender) {
            Some(record) => &record.public_key,
            None => return Err(Rejection::UnknownSender),
        },
    };
    let digest = SignedTransaction::signing_digest(tx.sender, tx.nonce, &tx.payload);
    if !crypto::verify(public_key, &digest, &tx.signature) {
        return Err(Rejection::BadSignature);
    }
    if tx.nonce != state.nonce(tx.sender) {
        return Err(Rejection::BadNonce);
    }

    let mut next = state.clone();
    next.counters.seq += 1;
    next.nonces.insert(tx.sender, tx.nonce + 1);

    let emitted = match tx.payload.clone() {
        Payload::Register { role, public_key, display_name } => {
            registry::register_account(&mut next, role, public_key, display_name)?;
            Vec::new()
        }
        Payload::SetAccreditation { target, accredited } => {
            registry::set_verifier_accreditation(&mut next, tx.sender, target, accredited)?;
            Vec::new()
        }
        Payload::SubmitCredit { project_kind, evidence_hash, tonnage } => {
            let sub =
                token::submit_credit(&mut next, tx.sender, project_kind, evidence_hash, tonnage)?;
            vec![sub.id, sub.proposal_id]
        }
        Payload::Approve { proposal_id } => {
            let outcome = quorum::cast_approval(&mut next, tx.sender, proposal_id)?;
            outcome.certificate_id.into_iter().collect()
        }
        Payload::Transfer { to, amount } => {
            token::transfer(&mut next, tx.sender, to, amount)?;
            Vec::new()
        }
        Payload::RequestBurn { amount } => {
            let burn = token::request_burn(&mut next, tx.sender, amount)?;
            vec![burn.id, burn.proposal_id]
        }
        Payload::CreatePool { carbon_amount, stable_amount } => {
            amm::create_pool(&mut next, tx.sender, carbon_amount, stable_amount)?;
            Vec::new()
        }
        Payload::AddLiquidity { carbon_in, stable_in } => {
            amm::add_liquidity(&mut next, tx.sender, carbon_in, stable_in)?;
            Vec::new()
        }
        Payload::RemoveLiquidity { shares } => {
            amm::remove_liquidity(&mut next, tx.sender, shares)?;
            Vec::new()
        }
        Payload::Swap { direction, amount_in, min_out } => {
            amm::swap_exact_in(&mut next, tx.sender, direction, amount_in, min_out)?;
            Vec::new()
        }
    };
    Ok((next, emitted))
}

/// Folds `apply_transaction` over a log. Rejected transactions contribute
/// nothing; the result depends only on the genesis state and log contents.
pub fn replay<'a>(
    genesis: &WorldState,
    log: impl IntoIterator<Item = &'a SignedTransaction>,
) -> WorldState {
    let mut state = genesis.clone();
    for tx in log {
        let (next, _) = apply_transaction(&state, tx);
        state = next;
    }
    state
}

/// A sealed batch of accepted transactions. The block hash covers only the
/// header fields; transaction bodies are bound through `tx_list_hash`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    pub parent_hash: Hash,
    pub timestamp: u64,
    pub tx_list_hash: Hash,
    pub state_root: Hash,
    pub transactions: Vec<SignedTransaction>,
}

impl Block {
    /// The height-0 block derived from a genesis state.
    pub fn genesis(state: &WorldState) -> Block {
        Block {
            height: 0,
            parent_hash: Hash::ZERO,
            timestamp: 0,
            tx_list_hash: Self::hash_tx_list(&[]),
            state_root: state.state_root(),
            transactions: Vec::new(),
        }
    }

    pub fn hash_tx_list(txs: &[SignedTransaction]) -> Hash {
        value_digest(&Value::List(txs.iter().map(|tx| tx.to_value()).collect()))
    }

    fn header_value(&self) -> Value {
        Value::record([
            ("height", Value::uint(self.height)),
            ("parent_hash", self.parent_hash.to_value()),
            ("state_root", self.state_root.to_value()),
            ("timestamp", Value::uint(self.timestamp)),
            ("tx_list_hash", self.tx_list_hash.to_value()),
        ])
    }

    /// SHA-256 of the canonical header serialization.
    pub fn header_hash(&self) -> Hash {
        value_digest(&self.header_value())
    }

    pub fn to_value(&self) -> Value {
        let Value::Map(mut m) = self.header_value() else { unreachable!() };
        m.insert(
            "transactions".to_string(),
            Value::List(self.transactions.iter().map(|tx| tx.to_value()).collect()),
        );
        Value::Map(m)
    }

    pub fn from_value(v: &Value) -> Result<Block, DecodeError> {
        let m = v.as_map()?;
        expect_fields(
            m,
            &["height", "parent_hash", "state_root", "timestamp", "transactions", "tx_list_hash"],
        )?;
        let transactions = field(m, "transactions")?
            .as_list()?
            .iter()
            .map(SignedTransaction::from_value)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Block {
            height: field(m, "height")?.as_u64()?,
            parent_hash: Hash::from_value(field(m, "parent_hash")?)?,
            timestamp: field(m, "timestamp")?.as_u64()?,
            tx_list_hash: Hash::from_value(field(m, "tx_list_hash")?)?,
            state_root: Hash::from_value(field(m, "state_root")?)?,
            transactions,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SealError {
    #[error("TimestampRegression: block time {given} precedes parent time {parent}")]
    TimestampRegression { parent: u64, given: u64 },
}

/// Seals the accepted transactions since `parent` into the next block.
/// `post_state` is the state after applying exactly those transactions.
pub fn seal_block(
    parent: &Block,
    transactions: Vec<SignedTransaction>,
    timestamp: u64,
    post_state: &WorldState,
) -> Result<Block, SealError> {
    if timestamp < parent.timestamp {
        return Err(SealError::TimestampRegression { parent: parent.timestamp, given: timestamp });
    }
    Ok(Block {
        height: parent.height + 1,
        parent_hash: parent.header_hash(),
        timestamp,
        tx_list_hash: Block::hash_tx_list(&transactions),
        state_root: post_state.state_root(),
        transactions,
    })
}

/// Why a chain failed verification, and at which height.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Height,
    ParentHash,
    Timestamp,
    TxListHash,
    RejectedTx,
    StateRoot,
    TipHash,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::Height => "height",
            ViolationKind::ParentHash => "parent_hash",
            ViolationKind::Timestamp => "timestamp",
            ViolationKind::TxListHash => "tx_list_hash",
            ViolationKind::RejectedTx => "rejected_tx",
            ViolationKind::StateRoot => "state_root",
            ViolationKind::TipHash => "tip_hash",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("chain violation at height {height}: {}", kind.name())]
pub struct Violation {
    pub height: u64,
    pub kind: ViolationKind,
}

/// Replays every transaction from genesis and reports the first violation.
/// `expected_tip` anchors the head header for verifiers that know it (for
/// example from a checkpoint); without it, tampering confined to the tip's
/// own timestamp is structurally undetectable.
pub fn verify_chain(
    genesis: &WorldState,
    blocks: &[Block],
    expected_tip: Option<Hash>,
) -> Result<(), Violation> {
    let mut prev = Block::genesis(genesis);
    let mut state = genesis.clone();
    for block in blocks {
        let height = prev.height + 1;
        let fail = |kind| Err(Violation { height, kind });
        if block.height != height {
            return fail(ViolationKind::Height);
        }
        if block.parent_hash != prev.header_hash() {
            return fail(ViolationKind::ParentHash);
        }
        if block.timestamp < prev.timestamp {
            return fail(ViolationKind::Timestamp);
        }
        if Block::hash_tx_list(&block.transactions) != block.tx_list_hash {
            return fail(ViolationKind::TxListHash);
        }
        for tx in &block.transactions {
            let (next, receipt) = apply_transaction(&state, tx);
            if !receipt.is_accepted() {
                return fail(ViolationKind::RejectedTx);
            }
            state = next;
        }
        if state.state_root() != block.state_root {
            return fail(ViolationKind::StateRoot);
        }
        prev = block.clone();
    }
    if let Some(tip) = expected_tip {
        if prev.header_hash() != tip {
            return Err(Violation { height: prev.height, kind: ViolationKind::TipHash });
        }
    }
    Ok(())
}

/// Single-writer chain driver: applies transactions in order, collects the
/// accepted log, and seals blocks on demand. Committed states are immutable
/// values; readers may clone and hash snapshots freely.
#[derive(Debug, Clone)]
pub struct Engine {
    state: WorldState,
    blocks: Vec<Block>,
    log: Vec<SignedTransaction>,
    sealed_txs: usize,
}

impl Engine {
    pub fn new(genesis: WorldState) -> Engine {
        let genesis_block = Block::genesis(&genesis);
        Engine { state: genesis, blocks: vec![genesis_block], log: Vec::new(), sealed_txs: 0 }
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    /// All blocks including genesis at index 0.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Sealed blocks after genesis, as `verify_chain` expects them.
    pub fn sealed_blocks(&self) -> &[Block] {
        &self.blocks[1..]
    }

    /// Every accepted transaction, in acceptance order.
    pub fn log(&self) -> &[SignedTransaction] {
        &self.log
    }

    /// Accepted transactions not yet sealed into a block.
    pub fn pending(&self) -> &[SignedTransaction] {
        &self.log[self.sealed_txs..]
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("genesis block always present")
    }

    pub fn submit(&mut self, tx: SignedTransaction) -> Receipt {
        let (next, receipt) = apply_transaction(&self.state, &tx);
        if receipt.is_accepted() {
            self.state = next;
            self.log.push(tx);
        }
        receipt
    }

    pub fn seal(&mut self, timestamp: u64) -> Result<&Block, SealError> {
        let pending = self.pending().to_vec();
        let block = seal_block(self.tip(), pending, timestamp, &self.state)?;
        self.sealed_txs = self.log.len();
        self.blocks.push(block);
        Ok(self.tip())
    }
}
