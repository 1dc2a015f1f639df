//! Carbon token lifecycle: credit submission, quorum-gated minting,
//! transfer, irreversible burn into the sink address, and retirement
//! certificates.
//!
//! Quantities are unsigned integers in base units; 1 token = 1 tCO2e
//! = 1,000,000 base units. A mock stable asset shares the ledger and is
//! funded only at genesis.

use std::collections::BTreeMap;

use crate::canonical::{decode_err, expect_fields, field, DecodeError, Value};
use crate::crypto::{Address, Hash};
use crate::errors::Rejection;
use crate::quorum::{self, ProposalKind};
use crate::registry::Role;
use crate::state::WorldState;

/// Base units per whole carbon token (one tonne of CO2e).
pub const TOKEN_UNIT: u64 = 1_000_000;

/// Which of the two ledgered assets an operation touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Asset {
    Carbon,
    Stable,
}

/// Balances for the carbon token and the mock stable asset. Zero balances
/// are pruned so equal states always serialize identically.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenLedger {
    pub balances: BTreeMap<Address, u64>,
    pub total_minted: u64,
    pub stable_balances: BTreeMap<Address, u64>,
    pub stable_total: u64,
}

impl TokenLedger {
    pub fn balance(&self, asset: Asset, addr: Address) -> u64 {
        let map = match asset {
            Asset::Carbon => &self.balances,
            Asset::Stable => &self.stable_balances,
        };
        map.get(&addr).copied().unwrap_or(0)
    }

    pub fn credit(&mut self, asset: Asset, addr: Address, amount: u64) -> Result<(), Rejection> {
        if amount == 0 {
            return Ok(());
        }
        let map = match asset {
            Asset::Carbon => &mut self.balances,
            Asset::Stable => &mut self.stable_balances,
        };
        let entry = map.entry(addr).or_insert(0);
        *entry = entry.checked_add(amount).ok_or(Rejection::Overflow)?;
        Ok(())
    }

    pub fn debit(&mut self, asset: Asset, addr: Address, amount: u64) -> Result<(), Rejection> {
        if amount == 0 {
            return Ok(());
        }
        let map = match asset {
            Asset::Carbon => &mut self.balances,
            Asset::Stable => &mut self.stable_balances,
        };
        let current = map.get(&addr).copied().unwrap_or(0);
        let rest = current.checked_sub(amount).ok_or(Rejection::InsufficientBalance)?;
        if rest == 0 {
            map.remove(&addr);
        } else {
            map.insert(addr, rest);
        }
        Ok(())
    }

    fn balances_value(map: &BTreeMap<Address, u64>) -> Value {
        let entries = map.iter().map(|(a, q)| (a.to_hex(), Value::uint(*q))).collect();
        Value::Map(entries)
    }

    fn balances_from_value(v: &Value) -> Result<BTreeMap<Address, u64>, DecodeError> {
        let mut out = BTreeMap::new();
        for (k, q) in v.as_map()? {
            let amount = q.as_u64()?;
            if amount == 0 {
                return Err(decode_err("zero balance entry must be pruned"));
            }
            out.insert(Address::from_hex(k)?, amount);
        }
        Ok(out)
    }

    pub fn to_value(&self) -> Value {
        Value::record([
            ("balances", Self::balances_value(&self.balances)),
            ("stable_balances", Self::balances_value(&self.stable_balances)),
            ("stable_total", Value::uint(self.stable_total)),
            ("total_minted", Value::uint(self.total_minted)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<TokenLedger, DecodeError> {
        let m = v.as_map()?;
        expect_fields(m, &["balances", "stable_balances", "stable_total", "total_minted"])?;
        Ok(TokenLedger {
            balances: Self::balances_from_value(field(m, "balances")?)?,
            total_minted: field(m, "total_minted")?.as_u64()?,
            stable_balances: Self::balances_from_value(field(m, "stable_balances")?)?,
            stable_total: field(m, "stable_total")?.as_u64()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmissionStatus {
    Pending,
    Minted,
    Rejected,
}

impl SubmissionStatus {
    fn name(self) -> &'static str {
        match self {
            SubmissionStatus::Pending => "pending",
            SubmissionStatus::Minted => "minted",
            SubmissionStatus::Rejected => "rejected",
        }
    }

    fn from_name(s: &str) -> Result<Self, DecodeError> {
        match s {
            "pending" => Ok(SubmissionStatus::Pending),
            "minted" => Ok(SubmissionStatus::Minted),
            "rejected" => Ok(SubmissionStatus::Rejected),
            other => Err(decode_err(format!("unknown submission status {other:?}"))),
        }
    }
}

/// A carbon-credit claim awaiting (or past) quorum-approved minting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreditSubmission {
    pub id: u64,
    pub holder: Address,
    pub project_kind: String,
    pub evidence_hash: Hash,
    pub tonnage: u64,
    pub status: SubmissionStatus,
    pub proposal_id: u64,
}

impl CreditSubmission {
    pub fn to_value(&self) -> Value {
        Value::record([
            ("evidence_hash", self.evidence_hash.to_value()),
            ("holder", self.holder.to_value()),
            ("id", Value::uint(self.id)),
            ("project_kind", Value::text(&self.project_kind)),
            ("proposal_id", Value::uint(self.proposal_id)),
            ("status", Value::text(self.status.name())),
            ("tonnage", Value::uint(self.tonnage)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<CreditSubmission, DecodeError> {
        let m = v.as_map()?;
        expect_fields(
            m,
            &["evidence_hash", "holder", "id", "project_kind", "proposal_id", "status", "tonnage"],
        )?;
        Ok(CreditSubmission {
            id: field(m, "id")?.as_u64()?,
            holder: Address::from_value(field(m, "holder")?)?,
            project_kind: field(m, "project_kind")?.as_text()?.to_string(),
            evidence_hash: Hash::from_value(field(m, "evidence_hash")?)?,
            tonnage: field(m, "tonnage")?.as_u64()?,
            status: SubmissionStatus::from_name(field(m, "status")?.as_text()?)?,
            proposal_id: field(m, "proposal_id")?.as_u64()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurnStatus {
    AwaitingVerification,
    Certified,
}

impl BurnStatus {
    fn name(self) -> &'static str {
        match self {
            BurnStatus::AwaitingVerification => "awaiting_verification",
            BurnStatus::Certified => "certified",
        }
    }

    fn from_name(s: &str) -> Result<Self, DecodeError> {
        match s {
            "awaiting_verification" => Ok(BurnStatus::AwaitingVerification),
            "certified" => Ok(BurnStatus::Certified),
            other => Err(decode_err(format!("unknown burn status {other:?}"))),
        }
    }
}

/// Record of tokens already moved to the burn sink, awaiting certification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BurnRecord {
    pub id: u64,
    pub owner: Address,
    pub tonnage: u64,
    pub status: BurnStatus,
    pub proposal_id: u64,
}

impl BurnRecord {
    pub fn to_value(&self) -> Value {
        Value::record([
            ("id", Value::uint(self.id)),
            ("owner", self.owner.to_value()),
            ("proposal_id", Value::uint(self.proposal_id)),
            ("status", Value::text(self.status.name())),
            ("tonnage", Value::uint(self.tonnage)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<BurnRecord, DecodeError> {
        let m = v.as_map()?;
        expect_fields(m, &["id", "owner", "proposal_id", "status", "tonnage"])?;
        Ok(BurnRecord {
            id: field(m, "id")?.as_u64()?,
            owner: Address::from_value(field(m, "owner")?)?,
            tonnage: field(m, "tonnage")?.as_u64()?,
            status: BurnStatus::from_name(field(m, "status")?.as_text()?)?,
            proposal_id: field(m, "proposal_id")?.as_u64()?,
        })
    }
}

/// Non-transferable badge proving a quantity of credits was retired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetirementCertificate {
    pub id: u64,
    pub owner: Address,
    pub tonnage: u64,
    pub burn_id: u64,
    pub issued_at: u64,
}

impl RetirementCertificate {
    pub fn to_value(&self) -> Value {
        Value::record([
            ("burn_id", Value::uint(self.burn_id)),
            ("id", Value::uint(self.id)),
            ("issued_at", Value::uint(self.issued_at)),
            ("owner", self.owner.to_value()),
            ("tonnage", Value::uint(self.tonnage)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<RetirementCertificate, DecodeError> {
        let m = v.as_map()?;
        expect_fields(m, &["burn_id", "id", "issued_at", "owner", "tonnage"])?;
        Ok(RetirementCertificate {
            id: field(m, "id")?.as_u64()?,
            owner: Address::from_value(field(m, "owner")?)?,
            tonnage: field(m, "tonnage")?.as_u64()?,
            burn_id: field(m, "burn_id")?.as_u64()?,
            issued_at: field(m, "issued_at")?.as_u64()?,
        })
    }
}

/// Files a credit claim and opens the Mint proposal that gates it.
pub fn submit_credit(
    state: &mut WorldState,
    holder: Address,
    project_kind: String,
    evidence_hash: Hash,
    tonnage: u64,
) -> Result<CreditSubmission, Rejection> {
    let record = state.accounts.get(&holder).ok_or(Rejection::UnknownAccount)?;
    if record.role != Role::CreditHolder {
        return Err(Rejection::RoleMismatch);
    }
    if tonnage == 0 {
        return Err(Rejection::ZeroAmount);
    }
    if state.accredited_verifiers().is_empty() {
        return Err(Rejection::NoVerifiers);
    }
    let id = state.counters.next_submission();
    let proposal_id = quorum::open_proposal(state, ProposalKind::Mint, id)?;
    let submission = CreditSubmission {
        id,
        holder,
        project_kind,
        evidence_hash,
        tonnage,
        status: SubmissionStatus::Pending,
        proposal_id,
    };
    state.submissions.insert(id, submission.clone());
    Ok(submission)
}

/// Mints a finalized submission. Reached only through quorum execution;
/// calling it on an unfinalized proposal is an error, not a shortcut.
pub fn execute_mint(state: &mut WorldState, submission_id: u64) -> Result<(), Rejection> {
    let submission = state.submissions.get(&submission_id).ok_or(Rejection::UnknownSubmission)?;
    let proposal = state.proposals.get(&submission.proposal_id).ok_or(Rejection::UnknownProposal)?;
    if !proposal.is_executed() {
        return Err(Rejection::NotFinalized);
    }
    if submission.status != SubmissionStatus::Pending {
        return Err(Rejection::AlreadyExecuted);
    }
    let (holder, tonnage) = (submission.holder, submission.tonnage);
    let new_total = state.token.total_minted.checked_add(tonnage).ok_or(Rejection::Overflow)?;
    state.token.credit(Asset::Carbon, holder, tonnage)?;
    state.token.total_minted = new_total;
    state.submissions.get_mut(&submission_id).expect("present above").status =
        SubmissionStatus::Minted;
    Ok(())
}

/// Moves tokens between registered accounts. The burn sink is unreachable
/// here; retirement goes through `request_burn`.
pub fn transfer(
    state: &mut WorldState,
    from: Address,
    to: Address,
    amount: u64,
) -> Result<(), Rejection> {
    if amount == 0 {
        return Err(Rejection::ZeroAmount);
    }
    if to == Address::BURN_SINK {
        return Err(Rejection::BurnSinkNotTransferable);
    }
    if !state.accounts.contains_key(&to) {
        return Err(Rejection::UnknownAccount);
    }
    if state.token.balance(Asset::Carbon, from) < amount {
        return Err(Rejection::InsufficientBalance);
    }
    state.token.debit(Asset::Carbon, from, amount)?;
    state.token.credit(Asset::Carbon, to, amount)?;
    Ok(())
}

/// Irreversibly moves tokens to the burn sink and opens the CertifyBurn
/// proposal for the retirement certificate.
pub fn request_burn(
    state: &mut WorldState,
    owner: Address,
    amount: u64,
) -> Result<BurnRecord, Rejection> {
    if amount == 0 {
        return Err(Rejection::ZeroAmount);
    }
    if state.token.balance(Asset::Carbon, owner) < amount {
        return Err(Rejection::InsufficientBalance);
    }
    if state.accredited_verifiers().is_empty() {
        return Err(Rejection::NoVerifiers);
    }
    let id = state.counters.next_burn();
    let proposal_id = quorum::open_proposal(state, ProposalKind::CertifyBurn, id)?;
    state.token.debit(Asset::Carbon, owner, amount)?;
    state.token.credit(Asset::Carbon, Address::BURN_SINK, amount)?;
    let record = BurnRecord {
        id,
        owner,
        tonnage: amount,
        status: BurnStatus::AwaitingVerification,
        proposal_id,
    };
    state.burns.insert(id, record.clone());
    Ok(record)
}

/// Issues the retirement certificate for a quorum-certified burn.
pub fn issue_certificate(
    state: &mut WorldState,
    burn_id: u64,
) -> Result<RetirementCertificate, Rejection> {
    let burn = state.burns.get(&burn_id).ok_or(Rejection::UnknownBurn)?;
    let proposal = state.proposals.get(&burn.proposal_id).ok_or(Rejection::UnknownProposal)?;
    if !proposal.is_executed() {
        return Err(Rejection::NotFinalized);
    }
    if burn.status != BurnStatus::AwaitingVerification {
        return Err(Rejection::AlreadyExecuted);
    }
    let (owner, tonnage) = (burn.owner, burn.tonnage);
    let id = state.counters.next_certificate();
    let certificate = RetirementCertificate {
        id,
        owner,
        tonnage,
        burn_id,
        issued_at: state.counters.seq,
    };
    state.certificates.insert(id, certificate.clone());
    state.burns.get_mut(&burn_id).expect("present above").status = BurnStatus::Certified;
    Ok(certificate)
}

/// Read-only accounting snapshot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancesView {
    pub balances: BTreeMap<Address, u64>,
    pub total_minted: u64,
    pub burned: u64,
    pub stable_balances: BTreeMap<Address, u64>,
    pub stable_total: u64,
    pub certificates: Vec<RetirementCertificate>,
}

pub fn query_balances(state: &WorldState) -> BalancesView {
    BalancesView {
        balances: state.token.balances.clone(),
        total_minted: state.token.total_minted,
        burned: state.token.balance(Asset::Carbon, Address::BURN_SINK),
        stable_balances: state.token.stable_balances.clone(),
        stable_total: state.token.stable_total,
        certificates: state.certificates.values().cloned().collect(),
    }
}
