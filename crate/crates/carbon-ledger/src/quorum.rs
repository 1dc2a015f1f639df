//! Multi-signature approval: proposals execute automatically once at least
//! 70% of the verifiers accredited at opening time have approved.

use std::collections::BTreeSet;

use crate::canonical::{decode_err, expect_fields, field, DecodeError, Value};
use crate::crypto::Address;
use crate::errors::Rejection;
use crate::state::WorldState;
use crate::token;

/// Approval threshold, fixed at genesis: 7/10 of the eligible snapshot.
pub const THRESHOLD_NUMERATOR: u64 = 7;
pub const THRESHOLD_DENOMINATOR: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    Mint,
    CertifyBurn,
}

impl ProposalKind {
    fn name(self) -> &'static str {
        match self {
            ProposalKind::Mint => "mint",
            ProposalKind::CertifyBurn => "certify_burn",
        }
    }

    fn from_name(s: &str) -> Result<Self, DecodeError> {
        match s {
            "mint" => Ok(ProposalKind::Mint),
            "certify_burn" => Ok(ProposalKind::CertifyBurn),
            other => Err(decode_err(format!("unknown proposal kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalStatus {
    Open,
    Executed,
}

impl ProposalStatus {
    pub fn name(self) -> &'static str {
        match self {
            ProposalStatus::Open => "open",
            ProposalStatus::Executed => "executed",
        }
    }

    fn from_name(s: &str) -> Result<Self, DecodeError> {
        match s {
            "open" => Ok(ProposalStatus::Open),
            "executed" => Ok(ProposalStatus::Executed),
            other => Err(decode_err(format!("unknown proposal status {other:?}"))),
        }
    }
}

/// A pending effect gated on verifier approvals. The eligible set is frozen
/// at opening; verifiers accredited later cannot vote here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proposal {
    pub id: u64,
    pub kind: ProposalKind,
    pub subject_id: u64,
    pub eligible_verifiers: BTreeSet<Address>,
    pub approvals: BTreeSet<Address>,
    pub status: ProposalStatus,
}

impl Proposal {
    pub fn is_executed(&self) -> bool {
        self.status == ProposalStatus::Executed
    }

    pub fn needed(&self) -> u64 {
        required_approvals(self.eligible_verifiers.len() as u64)
            .expect("proposals are never opened with an empty snapshot")
    }

    fn address_set_value(set: &BTreeSet<Address>) -> Value {
        Value::List(set.iter().map(|a| a.to_value()).collect())
    }

    fn address_set_from_value(v: &Value) -> Result<BTreeSet<Address>, DecodeError> {
        let mut out = BTreeSet::new();
        for item in v.as_list()? {
            if !out.insert(Address::from_value(item)?) {
                return Err(decode_err("duplicate address in set"));
            }
        }
        Ok(out)
    }

    pub fn to_value(&self) -> Value {
        Value::record([
            ("approvals", Self::address_set_value(&self.approvals)),
            ("eligible_verifiers", Self::address_set_value(&self.eligible_verifiers)),
            ("id", Value::uint(self.id)),
            ("kind", Value::text(self.kind.name())),
            ("status", Value::text(self.status.name())),
            ("subject_id", Value::uint(self.subject_id)),
        ])
    }

    pub fn from_value(v: &Value) -> Result<Proposal, DecodeError> {
        let m = v.as_map()?;
        expect_fields(m, &["approvals", "eligible_verifiers", "id", "kind", "status", "subject_id"])?;
        let proposal = Proposal {
            id: field(m, "id")?.as_u64()?,
            kind: ProposalKind::from_name(field(m, "kind")?.as_text()?)?,
            subject_id: field(m, "subject_id")?.as_u64()?,
            eligible_verifiers: Self::address_set_from_value(field(m, "eligible_verifiers")?)?,
            approvals: Self::address_set_from_value(field(m, "approvals")?)?,
            status: ProposalStatus::from_name(field(m, "status")?.as_text()?)?,
        };
        if !proposal.approvals.is_subset(&proposal.eligible_verifiers) {
            return Err(decode_err("approvals outside the eligible snapshot"));
        }
        Ok(proposal)
    }
}

/// Vote state of a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApprovalTally {
    pub approvals: u64,
    pub needed: u64,
    pub status: ProposalStatus,
}

/// Outcome of casting one approval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteOutcome {
    pub tally: ApprovalTally,
    /// Set when the tipping vote certified a burn.
    pub certificate_id: Option<u64>,
}

/// Smallest approval count `k` with `k/n >= 7/10`, i.e. ceil(7n/10).
pub fn required_approvals(n_verifiers: u64) -> Result<u64, Rejection> {
    if n_verifiers == 0 {
        return Err(Rejection::NoVerifiers);
    }
    let n = u128::from(n_verifiers);
    let needed =
        (u128::from(THRESHOLD_NUMERATOR) * n + u128::from(THRESHOLD_DENOMINATOR) - 1)
            / u128::from(THRESHOLD_DENOMINATOR);
    Ok(needed as u64)
}

/// Opens a proposal against the current accredited-verifier snapshot.
pub fn open_proposal(
    state: &mut WorldState,
    kind: ProposalKind,
    subject_id: u64,
) -> Result<u64, Rejection> {
    let eligible = state.accredited_verifiers();
    if eligible.is_empty() {
        return Err(Rejection::NoVerifiers);
    }
    let id = state.counters.next_proposal();
    let proposal = Proposal {
        id,
        kind,
        subject_id,
        eligible_verifiers: eligible,
        approvals: BTreeSet::new(),
        status: ProposalStatus::Open,
    };
    state.proposals.insert(id, proposal);
    Ok(id)
}

/// Records one approval; when the count reaches the threshold the proposal's
/// effect (mint or certificate) executes in the same transaction.
pub fn cast_approval(
    state: &mut WorldState,
    verifier: Address,
    proposal_id: u64,
) -> Result<VoteOutcome, Rejection> {
    let proposal = state.proposals.get_mut(&proposal_id).ok_or(Rejection::UnknownProposal)?;
    if proposal.is_executed() {
        return Err(Rejection::AlreadyExecuted);
    }
    if !proposal.eligible_verifiers.contains(&verifier) {
        return Err(Rejection::NotEligible);
    }
    if !proposal.approvals.insert(verifier) {
        return Err(Rejection::DuplicateVote);
    }
    let approvals = proposal.approvals.len() as u64;
    let needed = proposal.needed();
    let (kind, subject_id) = (proposal.kind, proposal.subject_id);

    let mut certificate_id = None;
    let status = if approvals >= needed {
        proposal.status = ProposalStatus::Executed;
        match kind {
            ProposalKind::Mint => token::execute_mint(state, subject_id)?,
            ProposalKind::CertifyBurn => {
                certificate_id = Some(token::issue_certificate(state, subject_id)?.id);
            }
        }
        ProposalStatus::Executed
    } else {
        ProposalStatus::Open
    };

    Ok(VoteOutcome { tally: ApprovalTally { approvals, needed, status }, certificate_id })
}

/// Pure read of a proposal's vote state.
pub fn tally(state: &WorldState, proposal_id: u64) -> Result<ApprovalTally, Rejection> {
    let proposal = state.proposals.get(&proposal_id).ok_or(Rejection::UnknownProposal)?;
    Ok(ApprovalTally {
        approvals: proposal.approvals.len() as u64,
        needed: proposal.needed(),
        status: proposal.status,
    })
}
