//! On-ledger account registry: verifiers, credit-holders, and customers,
//! with admin-controlled verifier accreditation.

use crate::canonical::{decode_err, expect_fields, field, DecodeError, Value};
use crate::crypto::Address;
use crate::errors::Rejection;
use crate::state::WorldState;

pub const MAX_DISPLAY_NAME_BYTES: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Verifier,
    CreditHolder,
    Customer,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Verifier => "verifier",
            Role::CreditHolder => "credit_holder",
            Role::Customer => "customer",
        }
    }

    pub fn from_name(s: &str) -> Result<Role, DecodeError> {
        match s {
            "verifier" => Ok(Role::Verifier),
            "credit_holder" => Ok(Role::CreditHolder),
            "customer" => Ok(Role::Customer),
            other => Err(decode_err(format!("unknown role {other:?}"))),
        }
    }
}

/// A registered account. The role never changes after registration and the
/// accredited flag is meaningful only for verifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountRecord {
    pub id: Address,
    pub role: Role,
    pub public_key: Vec<u8>,
    pub display_name: String,
    pub accredited: bool,
    pub registered_at: u64,
}

impl AccountRecord {
    pub fn to_value(&self) -> Value {
        Value::record([
            ("accredited", Value::Bool(self.accredited)),
            ("display_name", Value::text(&self.display_name)),
            ("id", self.id.to_value()),
            ("public_key", Value::bytes(&self.public_key)),
            ("registered_at", Value::uint(self.registered_at)),
            ("role", Value::text(self.role.name())),
        ])
    }

    pub fn from_value(v: &Value) -> Result<AccountRecord, DecodeError> {
        let m = v.as_map()?;
        expect_fields(m, &["accredited", "display_name", "id", "public_key", "registered_at", "role"])?;
        let record = AccountRecord {
            id: Address::from_value(field(m, "id")?)?,
            role: Role::from_name(field(m, "role")?.as_text()?)?,
            public_key: field(m, "public_key")?.as_hex_bytes()?,
            display_name: field(m, "display_name")?.as_text()?.to_string(),
            accredited: field(m, "accredited")?.as_bool()?,
            registered_at: field(m, "registered_at")?.as_u64()?,
        };
        if record.accredited && record.role != Role::Verifier {
            return Err(decode_err("accredited flag on a non-verifier record"));
        }
        Ok(record)
    }
}

/// Registers a new account under the address derived from its public key.
/// Accreditation always starts false.
pub fn register_account(
    state: &mut WorldState,
    role: Role,
    public_key: Vec<u8>,
    display_name: String,
) -> Result<AccountRecord, Rejection> {
    if display_name.len() > MAX_DISPLAY_NAME_BYTES {
        return Err(Rejection::NameTooLong);
    }
    let id = Address::from_public_key(&public_key);
    if id == Address::BURN_SINK || id == state.admin || state.accounts.contains_key(&id) {
        return Err(Rejection::DuplicateAccount);
    }
    let record = AccountRecord {
        id,
        role,
        public_key,
        display_name,
        accredited: false,
        registered_at: state.counters.seq,
    };
    state.accounts.insert(id, record.clone());
    Ok(record)
}

/// Flips a verifier's accreditation. Only the genesis admin may call this;
/// the change affects quorum denominators for proposals opened afterward.
pub fn set_verifier_accreditation(
    state: &mut WorldState,
    caller: Address,
    target: Address,
    accredited: bool,
) -> Result<AccountRecord, Rejection> {
    if caller != state.admin {
        return Err(Rejection::Unauthorized);
    }
    let record = state.accounts.get_mut(&target).ok_or(Rejection::UnknownAccount)?;
    if record.role != Role::Verifier {
        return Err(Rejection::RoleMismatch);
    }
    record.accredited = accredited;
    Ok(record.clone())
}

pub fn lookup(state: &WorldState, id: Address) -> Result<&AccountRecord, Rejection> {
    state.accounts.get(&id).ok_or(Rejection::UnknownAccount)
}
