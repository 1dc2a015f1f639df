//! Shared test machinery: an arbitrary-precision oracle for pool math,
//! deterministic keys, and a randomized valid-transaction driver.

#![allow(dead_code)]

use std::collections::BTreeMap;

use carbon_ledger::crypto::sha256;
use carbon_ledger::quorum::ProposalStatus;
use carbon_ledger::storage::{GenesisConfig, GenesisFunding, GenesisVerifier};
use carbon_ledger::token::Asset;
use carbon_ledger::{
    Address, Engine, Keypair, Payload, Role, Scheme, SignedTransaction, WorldState,
};
use num_bigint::BigUint;
use rand::prelude::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mock_key(tag: &[u8]) -> Keypair {
    Keypair::from_seed(Scheme::Mock, sha256(tag).0).unwrap()
}

pub fn ed25519_key(tag: &[u8]) -> Keypair {
    Keypair::from_seed(Scheme::Ed25519, sha256(tag).0).unwrap()
}

// ---------------------------------------------------------------------------
// Arbitrary-precision oracle for the constant-product pool
// ---------------------------------------------------------------------------

/// floor((reserve_out * amount_in * 997) / (reserve_in * 1000 + amount_in * 997)),
/// computed without any fixed-width arithmetic.
pub fn oracle_swap_out(reserve_in: u64, reserve_out: u64, amount_in: u64) -> u64 {
    let fee_in = BigUint::from(amount_in) * 997u32;
    let numerator = BigUint::from(reserve_out) * &fee_in;
    let denominator = BigUint::from(reserve_in) * 1000u32 + fee_in;
    let out = numerator / denominator;
    u64::try_from(&out).expect("swap output bounded by reserve_out")
}

/// Initial share grant: floor(sqrt(carbon * stable)).
pub fn oracle_initial_shares(carbon: u64, stable: u64) -> u64 {
    let product = BigUint::from(carbon) * BigUint::from(stable);
    u64::try_from(&product.sqrt()).expect("sqrt of u64 product fits u64")
}

/// Min-rule share mint for a double-sided deposit.
pub fn oracle_added_shares(
    carbon_reserve: u64,
    stable_reserve: u64,
    total_shares: u64,
    carbon_in: u64,
    stable_in: u64,
) -> Option<u64> {
    let by_carbon = BigUint::from(carbon_in) * total_shares / carbon_reserve;
    let by_stable = BigUint::from(stable_in) * total_shares / stable_reserve;
    let minted = by_carbon.min(by_stable);
    u64::try_from(&minted).ok()
}

/// Pro-rata redemption amounts for a share burn.
pub fn oracle_removed(
    carbon_reserve: u64,
    stable_reserve: u64,
    total_shares: u64,
    shares: u64,
) -> (u64, u64) {
    let carbon = BigUint::from(shares) * carbon_reserve / total_shares;
    let stable = BigUint::from(shares) * stable_reserve / total_shares;
    (
        u64::try_from(&carbon).expect("bounded by reserve"),
        u64::try_from(&stable).expect("bounded by reserve"),
    )
}

// ---------------------------------------------------------------------------
// Genesis and engine setup
// ---------------------------------------------------------------------------

pub struct Actor {
    pub name: String,
    pub key: Keypair,
    pub role: Role,
}

pub struct Fixture {
    pub admin: Keypair,
    pub actors: Vec<Actor>,
    pub genesis: WorldState,
}

/// Genesis with `n_verifiers` accredited verifiers plus funded
/// credit-holders and customers (1e9 stable base units each).
pub fn fixture(tag: &str, n_verifiers: usize, n_holders: usize, n_customers: usize) -> Fixture {
    let admin = mock_key(format!("{tag}/admin").as_bytes());
    let mut actors = Vec::new();
    let mut initial_verifiers = Vec::new();
    let mut initial_stable_balances = Vec::new();
    for i in 0..n_verifiers {
        let name = format!("v{i}");
        let key = mock_key(format!("{tag}/verifier/{i}").as_bytes());
        initial_verifiers.push(GenesisVerifier {
            public_key: key.public_key().to_vec(),
            display_name: name.clone(),
        });
        actors.push(Actor { name, key, role: Role::Verifier });
    }
    for i in 0..n_holders {
        let name = format!("h{i}");
        let key = mock_key(format!("{tag}/holder/{i}").as_bytes());
        initial_stable_balances.push(GenesisFunding {
            public_key: key.public_key().to_vec(),
            role: Role::CreditHolder,
            display_name: name.clone(),
            quantity: 1_000_000_000,
        });
        actors.push(Actor { name, key, role: Role::CreditHolder });
    }
    for i in 0..n_customers {
        let name = format!("c{i}");
        let key = mock_key(format!("{tag}/customer/{i}").as_bytes());
        initial_stable_balances.push(GenesisFunding {
            public_key: key.public_key().to_vec(),
            role: Role::Customer,
            display_name: name.clone(),
            quantity: 1_000_000_000,
        });
        actors.push(Actor { name, key, role: Role::Customer });
    }
    let config = GenesisConfig {
        chain_id: format!("fuzz-{tag}"),
        admin_public_key: admin.public_key().to_vec(),
        initial_verifiers,
        initial_stable_balances,
    };
    let genesis = config.build_state().expect("fixture genesis is valid");
    Fixture { admin, actors, genesis }
}

// ---------------------------------------------------------------------------
// Randomized valid-transaction driver
// ---------------------------------------------------------------------------

pub struct Fuzzer {
    pub engine: Engine,
    pub admin: Keypair,
    pub keys: BTreeMap<Address, Keypair>,
}

impl Fuzzer {
    pub fn new(fixture: Fixture) -> Fuzzer {
        let mut keys = BTreeMap::new();
        keys.insert(fixture.admin.address(), fixture.admin.clone());
        for actor in &fixture.actors {
            keys.insert(actor.key.address(), actor.key.clone());
        }
        Fuzzer { engine: Engine::new(fixture.genesis), admin: fixture.admin, keys }
    }

    pub fn state(&self) -> &WorldState {
        self.engine.state()
    }

    fn sign_as(&self, addr: Address, payload: Payload) -> SignedTransaction {
        let kp = &self.keys[&addr];
        SignedTransaction::sign(kp, self.state().nonce(addr), payload)
    }

    fn addresses_with_role(&self, role: Role) -> Vec<Address> {
        self.state()
            .accounts
            .values()
            .filter(|r| r.role == role)
            .map(|r| r.id)
            .filter(|a| self.keys.contains_key(a))
            .collect()
    }

    fn carbon_holders(&self) -> Vec<(Address, u64)> {
        self.state()
            .token
            .balances
            .iter()
            .filter(|(a, _)| self.keys.contains_key(a))
            .map(|(a, q)| (*a, *q))
            .collect()
    }

    fn stable_holders(&self) -> Vec<(Address, u64)> {
        self.state()
            .token
            .stable_balances
            .iter()
            .filter(|(a, _)| self.keys.contains_key(a))
            .map(|(a, q)| (*a, *q))
            .collect()
    }

    /// Open proposals with at least one eligible verifier who has not voted.
    fn votable(&self) -> Vec<(u64, Vec<Address>)> {
        self.state()
            .proposals
            .values()
            .filter(|p| p.status == ProposalStatus::Open)
            .map(|p| {
                let voters: Vec<Address> = p
                    .eligible_verifiers
                    .difference(&p.approvals)
                    .copied()
                    .filter(|a| self.keys.contains_key(a))
                    .collect();
                (p.id, voters)
            })
            .filter(|(_, voters)| !voters.is_empty())
            .collect()
    }

    /// Builds one mostly-valid random transaction against the current state.
    /// Returns None when the sampled operation has no valid instantiation.
    pub fn random_tx(&mut self, rng: &mut ChaCha8Rng) -> Option<SignedTransaction> {
        let choice = rng.random_range(0..100u32);
        match choice {
            // Deliberately invalid traffic to exercise rejection paths.
            0..=2 => {
                let senders: Vec<Address> = self.keys.keys().copied().collect();
                let sender = *senders.choose(rng)?;
                let kp = &self.keys[&sender];
                let mut tx = SignedTransaction::sign(
                    kp,
                    self.state().nonce(sender),
                    Payload::RequestBurn { amount: rng.random_range(1..50u64) },
                );
                if choice == 0 {
                    tx.nonce = tx.nonce.wrapping_add(rng.random_range(1..5u64));
                } else {
                    let i = rng.random_range(0..tx.signature.len());
                    tx.signature[i] ^= 1;
                }
                Some(tx)
            }
            3..=10 => {
                // New registration.
                let n = self.keys.len() as u64;
                let key = mock_key(format!("fuzz/new/{n}/{}", rng.random::<u64>()).as_bytes());
                let role = *[Role::Verifier, Role::CreditHolder, Role::Customer]
                    .choose(rng)
                    .expect("non-empty");
                let tx = SignedTransaction::sign(
                    &key,
                    0,
                    Payload::Register {
                        role,
                        public_key: key.public_key().to_vec(),
                        display_name: format!("actor-{n}"),
                    },
                );
                self.keys.insert(key.address(), key);
                Some(tx)
            }
            11..=15 => {
                // Accreditation flip.
                let verifiers = self.addresses_with_role(Role::Verifier);
                let target = *verifiers.choose(rng)?;
                let accredited = rng.random_bool(0.8);
                Some(self.sign_as(
                    self.admin.address(),
                    Payload::SetAccreditation { target, accredited },
                ))
            }
            16..=30 => {
                // Credit submission.
                let holders = self.addresses_with_role(Role::CreditHolder);
                let holder = *holders.choose(rng)?;
                if self.state().accredited_verifiers().is_empty() {
                    return None;
                }
                let tonnage = rng.random_range(1..=10_000_000u64);
                Some(self.sign_as(
                    holder,
                    Payload::SubmitCredit {
                        project_kind: ["reforestation", "sequestration", "wind"]
                            .choose(rng)
                            .expect("non-empty")
                            .to_string(),
                        evidence_hash: sha256(&rng.random::<[u8; 16]>()),
                        tonnage,
                    },
                ))
            }
            31..=55 => {
                // Approval.
                let votable = self.votable();
                let (proposal_id, voters) = votable.choose(rng)?.clone();
                let voter = *voters.choose(rng)?;
                Some(self.sign_as(voter, Payload::Approve { proposal_id }))
            }
            56..=70 => {
                // Transfer between registered accounts.
                let holders = self.carbon_holders();
                let (from, balance) = *holders.choose(rng)?;
                let recipients: Vec<Address> = self
                    .state()
                    .accounts
                    .keys()
                    .copied()
                    .filter(|a| self.keys.contains_key(a))
                    .collect();
                let to = *recipients.choose(rng)?;
                let amount = rng.random_range(1..=balance);
                Some(self.sign_as(from, Payload::Transfer { to, amount }))
            }
            71..=78 => {
                // Burn.
                let holders = self.carbon_holders();
                let (owner, balance) = *holders.choose(rng)?;
                if self.state().accredited_verifiers().is_empty() {
                    return None;
                }
                let amount = rng.random_range(1..=balance);
                Some(self.sign_as(owner, Payload::RequestBurn { amount }))
            }
            79..=82 => {
                // Pool creation (when absent).
                if self.state().pool.is_some() {
                    return None;
                }
                let carbon_rich: Vec<(Address, u64)> = self
                    .carbon_holders()
                    .into_iter()
                    .filter(|(a, q)| {
                        *q >= 1000 && self.state().token.balance(Asset::Stable, *a) >= 1000
                    })
                    .collect();
                let (creator, carbon_balance) = *carbon_rich.choose(rng)?;
                let stable_balance = self.state().token.balance(Asset::Stable, creator);
                let carbon_amount = rng.random_range(1000..=carbon_balance);
                let stable_amount = rng.random_range(1000..=stable_balance.min(10_000_000));
                Some(self.sign_as(creator, Payload::CreatePool { carbon_amount, stable_amount }))
            }
            83..=88 => {
                // Add liquidity.
                self.state().pool?;
                let providers: Vec<(Address, u64)> = self
                    .carbon_holders()
                    .into_iter()
                    .filter(|(a, q)| {
                        *q >= 10 && self.state().token.balance(Asset::Stable, *a) >= 10
                    })
                    .collect();
                let (provider, carbon_balance) = *providers.choose(rng)?;
                let stable_balance = self.state().token.balance(Asset::Stable, provider);
                let carbon_in = rng.random_range(1..=carbon_balance);
                let stable_in = rng.random_range(1..=stable_balance);
                Some(self.sign_as(provider, Payload::AddLiquidity { carbon_in, stable_in }))
            }
            89..=92 => {
                // Remove liquidity.
                let holders: Vec<(Address, u64)> = self
                    .state()
                    .lp_shares
                    .shares
                    .iter()
                    .filter(|(a, _)| self.keys.contains_key(a))
                    .map(|(a, q)| (*a, *q))
                    .collect();
                let (provider, owned) = *holders.choose(rng)?;
                let shares = rng.random_range(1..=owned);
                Some(self.sign_as(provider, Payload::RemoveLiquidity { shares }))
            }
            _ => {
                // Swap.
                use carbon_ledger::amm::SwapDirection;
                self.state().pool?;
                let direction = if rng.random_bool(0.5) {
                    SwapDirection::StableIn
                } else {
                    SwapDirection::CarbonIn
                };
                let holders = match direction {
                    SwapDirection::StableIn => self.stable_holders(),
                    SwapDirection::CarbonIn => self.carbon_holders(),
                };
                let eligible: Vec<(Address, u64)> =
                    holders.into_iter().filter(|(_, q)| *q >= 10).collect();
                let (trader, balance) = *eligible.choose(rng)?;
                let amount_in = rng.random_range(10..=balance.min(100_000_000));
                Some(self.sign_as(trader, Payload::Swap { direction, amount_in, min_out: 0 }))
            }
        }
    }

    /// Drives randomized transactions until `target_accepted` have been
    /// accepted, invoking `check` after every submission with the
    /// transaction, its receipt, and the pre-submission state.
    pub fn drive(
        &mut self,
        rng: &mut ChaCha8Rng,
        target_accepted: usize,
        mut check: impl FnMut(&Fuzzer, &SignedTransaction, &carbon_ledger::Receipt, &WorldState),
    ) {
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        while accepted < target_accepted {
            attempts += 1;
            assert!(
                attempts < target_accepted * 50 + 1000,
                "fuzzer stalled: {accepted}/{target_accepted} accepted after {attempts} attempts"
            );
            let Some(tx) = self.random_tx(rng) else { continue };
            let before = self.engine.state().clone();
            let receipt = self.engine.submit(tx.clone());
            if receipt.is_accepted() {
                accepted += 1;
            }
            check(self, &tx, &receipt, &before);
        }
    }
}

/// Sum of all carbon balances: accounts, pool reserve account, burn sink.
pub fn carbon_sum(state: &WorldState) -> u64 {
    state.token.balances.values().sum()
}

pub fn stable_sum(state: &WorldState) -> u64 {
    state.token.stable_balances.values().sum()
}
