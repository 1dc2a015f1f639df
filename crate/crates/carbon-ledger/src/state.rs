//! The complete committed state and its canonical encoding.
//!
//! A state root is the SHA-256 of the state's canonical serialization, so
//! equality of roots is equality of state. Nothing here reads a clock or an
//! iteration-order-dependent structure; two replays of the same log produce
//! byte-identical roots.

use std::collections::{BTreeMap, BTreeSet};

use crate::amm::{LiquidityPool, LpShareLedger};
use crate::canonical::{expect_fields, field, DecodeError, Value};
use crate::crypto::{value_digest, Address, Hash};
use crate::quorum::Proposal;
use crate::registry::{AccountRecord, Role};
use crate::token::{BurnRecord, CreditSubmission, RetirementCertificate, TokenLedger};

/// Monotone id sources. Ids start at 1 and are never reused; `seq` counts
/// accepted transactions and stamps records created by them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Counters {
    pub submissions: u64,
    pub burns: u64,
    pub proposals: u64,
    pub certificates: u64,
    pub seq: u64,
}

impl Counters {
    pub fn next_submission(&mut self) -> u64 {
        self.submissions += 1;
        self.submissions
    }

    pub fn next_burn(&mut self) -> u64 {
        self.burns += 1;
        self.burns
    }

    pub fn next_proposal(&mut self) -> u64 {
        self.proposals += 1;
        self.proposals
    }

    pub fn next_certificate(&mut self) -> u64 {
        self.certificates += 1;
        self.certificates
    }

    fn to_value(&self) -> Value {
        Value::record([
            ("burns", Value::uint(self.burns)),
            ("certificates", Value::uint(self.certificates)),
            ("proposals", Value::uint(self.proposals)),
            ("seq", Value::uint(self.seq)),
            ("submissions", Value::uint(self.submissions)),
        ])
    }

    fn from_value(v: &Value) -> Result<Counters, DecodeError> {
        let m = v.as_map()?;
        expect_fields(m, &["burns", "certificates", "proposals", "seq", "submissions"])?;
        Ok(Counters {
            submissions: field(m, "submissions")?.as_u64()?,
            burns: field(m, "burns")?.as_u64()?,
            proposals: field(m, "proposals")?.as_u64()?,
            certificates: field(m, "certificates")?.as_u64()?,
            seq: field(m, "seq")?.as_u64()?,
        })
    }
}

/// Everything a transaction can read or write.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldState {
    pub chain_id: String,
    pub admin_public_key: Vec<u8>,
    /// Derived from `admin_public_key`; not serialized separately.
    pub admin: Address,
    pub accounts: BTreeMap<Address, AccountRecord>,
    pub nonces: BTreeMap<Address, u64>,
    pub token: TokenLedger,
    pub submissions: BTreeMap<u64, CreditSubmission>,
    pub burns: BTreeMap<u64, BurnRecord>,
    pub certificates: BTreeMap<u64, RetirementCertificate>,
    pub proposals: BTreeMap<u64, Proposal>,
    pub pool: Option<LiquidityPool>,
    pub lp_shares: LpShareLedger,
    pub counters: Counters,
}

impl WorldState {
    pub fn new(chain_id: String, admin_public_key: Vec<u8>) -> WorldState {
        let admin = Address::from_public_key(&admin_public_key);
        WorldState {
            chain_id,
            admin_public_key,
            admin,
            accounts: BTreeMap::new(),
            nonces: BTreeMap::new(),
            token: TokenLedger::default(),
            submissions: BTreeMap::new(),
            burns: BTreeMap::new(),
            certificates: BTreeMap::new(),
            proposals: BTreeMap::new(),
            pool: None,
            lp_shares: LpShareLedger::default(),
            counters: Counters::default(),
        }
    }

    /// Accredited verifiers right now. Quorum snapshots this set when a
    /// proposal opens.
    pub fn accredited_verifiers(&self) -> BTreeSet<Address> {
        self.accounts
            .values()
            .filter(|r| r.role == Role::Verifier && r.accredited)
            .map(|r| r.id)
            .collect()
    }

    pub fn nonce(&self, addr: Address) -> u64 {
        self.nonces.get(&addr).copied().unwrap_or(0)
    }

    /// SHA-256 of the canonical serialization of the whole state.
    pub fn state_root(&self) -> Hash {
        value_digest(&self.to_value())
    }

    pub fn to_value(&self) -> Value {
        let registry =
            self.accounts.iter().map(|(a, r)| (a.to_hex(), r.to_value())).collect::<BTreeMap<_, _>>();
        let nonces =
            self.nonces.iter().map(|(a, n)| (a.to_hex(), Value::uint(*n))).collect::<BTreeMap<_, _>>();

        let mut fields = vec![
            ("admin_public_key", Value::bytes(&self.admin_public_key)),
            ("burns", id_list(&self.burns, BurnRecord::to_value)),
            ("certificates", id_list(&self.certificates, RetirementCertificate::to_value)),
            ("chain_id", Value::text(&self.chain_id)),
            ("counters", self.counters.to_value()),
            ("lp_shares", self.lp_shares.to_value()),
            ("nonces", Value::Map(nonces)),
            ("proposals", id_list(&self.proposals, Proposal::to_value)),
            ("registry", Value::Map(registry)),
            ("submissions", id_list(&self.submissions, CreditSubmission::to_value)),
            ("token", self.token.to_value()),
        ];
        // No nulls in the canonical domain: an absent pool is an absent key.
        if let Some(pool) = &self.pool {
            fields.push(("pool", pool.to_value()));
        }
        let map = fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Value::Map(map)
    }

    pub fn from_value(v: &Value) -> Result<WorldState, DecodeError> {
        let m = v.as_map()?;
        expect_fields(
            m,
            &[
                "admin_public_key",
                "burns",
                "certificates",
                "chain_id",
                "counters",
                "lp_shares",
                "nonces",
                "pool",
                "proposals",
                "registry",
                "submissions",
                "token",
            ],
        )?;
        let admin_public_key = field(m, "admin_public_key")?.as_hex_bytes()?;
        let admin = Address::from_public_key(&admin_public_key);

        let mut accounts = BTreeMap::new();
        for (k, rv) in field(m, "registry")?.as_map()? {
            let record = AccountRecord::from_value(rv)?;
            let key_addr = Address::from_hex(k)?;
            if key_addr != record.id {
                return Err(DecodeError("registry key does not match record id".into()));
            }
            accounts.insert(key_addr, record);
        }

        let mut nonces = BTreeMap::new();
        for (k, nv) in field(m, "nonces")?.as_map()? {
            let n = nv.as_u64()?;
            if n == 0 {
                return Err(DecodeError("zero nonce entry must be pruned".into()));
            }
            nonces.insert(Address::from_hex(k)?, n);
        }

        let pool = match m.get("pool") {
            Some(pv) => Some(LiquidityPool::from_value(pv)?),
            None => None,
        };

        Ok(WorldState {
            chain_id: field(m, "chain_id")?.as_text()?.to_string(),
            admin_public_key,
            admin,
            accounts,
            nonces,
            token: TokenLedger::from_value(field(m, "token")?)?,
            submissions: id_map(field(m, "submissions")?, CreditSubmission::from_value, |s| s.id)?,
            burns: id_map(field(m, "burns")?, BurnRecord::from_value, |b| b.id)?,
            certificates: id_map(field(m, "certificates")?, RetirementCertificate::from_value, |c| {
                c.id
            })?,
            proposals: id_map(field(m, "proposals")?, Proposal::from_value, |p| p.id)?,
            pool,
            lp_shares: LpShareLedger::from_value(field(m, "lp_shares")?)?,
            counters: Counters::from_value(field(m, "counters")?)?,
        })
    }
}

/// Id-keyed collections serialize as lists in ascending id order.
fn id_list<T>(map: &BTreeMap<u64, T>, encode: impl Fn(&T) -> Value) -> Value {
    Value::List(map.values().map(encode).collect())
}

fn id_map<T>(
    v: &Value,
    decode: impl Fn(&Value) -> Result<T, DecodeError>,
    id_of: impl Fn(&T) -> u64,
) -> Result<BTreeMap<u64, T>, DecodeError> {
    let mut out = BTreeMap::new();
    let mut last = 0u64;
    for item in v.as_list()? {
        let record = decode(item)?;
        let id = id_of(&record);
        if id <= last {
            return Err(DecodeError("record ids not strictly increasing".into()));
        }
        last = id;
        out.insert(id, record);
    }
    Ok(out)
}
