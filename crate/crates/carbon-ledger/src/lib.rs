//! A deterministic, hash-chained ledger for carbon-credit markets.
//!
//! The ledger is a single-writer state machine over canonically serialized
//! state: accounts and verifier accreditation live in a registry, carbon
//! tokens are minted only through ≥70% verifier approval, retirement burns
//! tokens into an unspendable sink address and mints a certificate badge,
//! and a constant-product market maker prices carbon against a mock stable
//! asset with a 0.3% fee paid to liquidity providers. Every state transition
//! is a signed, nonce-ordered transaction; blocks link by parent hash and
//! replaying the transaction log reproduces state roots byte for byte.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run -p carbon-ledger --example offset_lifecycle    # submit → approve → mint → transfer → burn → certificate
//! cargo run -p carbon-ledger --example amm_trading         # pool funding, swaps, fees, price discovery
//! cargo run -p carbon-ledger --example quorum_governance   # thresholds, snapshots, vote edge cases
//! cargo run -p carbon-ledger --example chain_verification  # sealing, linkage, tamper detection
//! cargo run -p carbon-ledger --example replay_persistence  # genesis/log/snapshot files and replay equality
//! ```
//!
//! The same flows are scriptable through the thin `carbon-ledger` binary;
//! see the repository README.
//!
//! ## Module map
//!
//! - [`canonical`] — the bit-exact value encoding under every hash and file
//! - [`crypto`] — SHA-256, addresses, Ed25519 (and a test-only mock scheme)
//! - [`registry`] — roles and admin-gated verifier accreditation
//! - [`token`] — submissions, quorum-gated minting, transfer, burn,
//!   retirement certificates
//! - [`quorum`] — proposals that auto-execute at ceil(0.7 · n) approvals
//! - [`amm`] — the constant-product pool and liquidity shares
//! - [`ledger`] — transactions, receipts, blocks, verification, replay
//! - [`storage`] — .genesis/.txlog/.snap files and the block log
//! - [`cli`] — the command-line driver used by the binary

pub mod amm;
pub mod canonical;
pub mod cli;
pub mod crypto;
pub mod errors;
pub mod ledger;
pub mod quorum;
pub mod registry;
pub mod state;
pub mod storage;
pub mod token;

pub use crypto::{Address, Hash, Keypair, Scheme};
pub use errors::Rejection;
pub use ledger::{
    apply_transaction, replay, seal_block, verify_chain, Block, Engine, Payload, Receipt,
    SignedTransaction, TxStatus,
};
pub use registry::Role;
pub use state::WorldState;
