//! Hashing, addresses, and the pluggable signature boundary.
//!
//! SHA-256 is the only hash in the system. Addresses are the SHA-256 of a
//! public key, so identity is key-format independent. Signature verification
//! goes through [`verify`], which dispatches on a one-byte scheme tag at the
//! front of the public key:
//!
//! - `0x01` Ed25519 (the production scheme)
//! - `0x00` keyed-hash mock: signature = SHA-256(key material || digest),
//!   with the "public" key doubling as the MAC key. No public-key security;
//!   it exists so deterministic fuzz suites can sign cheaply.

use std::fmt;

use ring::signature::{Ed25519KeyPair, KeyPair, UnparsedPublicKey, ED25519};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canonical::{decode_err, DecodeError, Value};

pub const SCHEME_TAG_MOCK: u8 = 0x00;
pub const SCHEME_TAG_ED25519: u8 = 0x01;

/// A 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hash(pub [u8; 32]);

impl Hash {
    pub const ZERO: Hash = Hash([0u8; 32]);

    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Hash, DecodeError> {
        Ok(Hash(parse_hex32(s)?))
    }

    pub fn to_value(self) -> Value {
        Value::bytes(&self.0)
    }

    pub fn from_value(v: &Value) -> Result<Hash, DecodeError> {
        Hash::from_hex(v.as_text()?)
    }
}

impl fmt::Display for Hash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Hash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash({})", self.to_hex())
    }
}

pub fn sha256(bytes: &[u8]) -> Hash {
    Hash(Sha256::digest(bytes).into())
}

/// SHA-256 of a value's canonical encoding.
pub fn value_digest(value: &Value) -> Hash {
    sha256(&crate::canonical::to_bytes(value))
}

fn parse_hex32(s: &str) -> Result<[u8; 32], DecodeError> {
    if s.len() != 64 {
        return Err(decode_err(format!("expected 64 hex chars, got {}", s.len())));
    }
    if s.bytes().any(|b| b.is_ascii_uppercase()) {
        return Err(decode_err("hex must be lowercase"));
    }
    let bytes = hex::decode(s).map_err(|e| decode_err(format!("bad hex: {e}")))?;
    let mut out = [0u8; 32];
    out.copy_from_slice(&bytes);
    Ok(out)
}

/// A ledger account identity: SHA-256 of the account's public key.
/// The all-zero address is the burn sink and never has a known key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 32]);

impl Address {
    pub const BURN_SINK: Address = Address([0u8; 32]);

    pub fn from_public_key(public_key: &[u8]) -> Address {
        Address(sha256(public_key).0)
    }

    pub fn to_hex(self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Address, DecodeError> {
        Ok(Address(parse_hex32(s)?))
    }

    pub fn to_value(self) -> Value {
        Value::bytes(&self.0)
    }

    pub fn from_value(v: &Value) -> Result<Address, DecodeError> {
        Address::from_hex(v.as_text()?)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.to_hex())
    }
}

/// Signature scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Ed25519,
    Mock,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ed25519 => "ed25519",
            Scheme::Mock => "mock",
        }
    }

    pub fn from_name(s: &str) -> Result<Scheme, DecodeError> {
        match s {
            "ed25519" => Ok(Scheme::Ed25519),
            "mock" => Ok(Scheme::Mock),
            other => Err(decode_err(format!("unknown signature scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("invalid seed: {0}")]
    InvalidSeed(&'static str),
}

/// A signing keypair. `public` carries the scheme tag byte followed by 32
/// bytes of key material and is what the registry stores on-ledger.
#[derive(Clone)]
pub struct Keypair {
    scheme: Scheme,
    secret: [u8; 32],
    public: Vec<u8>,
}

impl Keypair {
    pub fn from_seed(scheme: Scheme, seed: [u8; 32]) -> Result<Keypair, KeyError> {
        let public = match scheme {
            Scheme::Ed25519 => {
                let kp = Ed25519KeyPair::from_seed_unchecked(&seed)
                    .map_err(|_| KeyError::InvalidSeed("ed25519 rejected seed"))?;
                let mut pk = vec![SCHEME_TAG_ED25519];
                pk.extend_from_slice(kp.public_key().as_ref());
                pk
            }
            Scheme::Mock => {
                let mut pk = vec![SCHEME_TAG_MOCK];
                pk.extend_from_slice(&seed);
                pk
            }
        };
        Ok(Keypair { scheme, secret: seed, public })
    }

    /// Fresh keypair from OS randomness.
    pub fn generate(scheme: Scheme) -> Keypair {
        use rand::RngCore;
        let mut seed = [0u8; 32];
        rand::rng().fill_bytes(&mut seed);
        Keypair::from_seed(scheme, seed).expect("random seed is valid")
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn public_key(&self) -> &[u8] {
        &self.public
    }

    pub fn secret_seed(&self) -> [u8; 32] {
        self.secret
    }

    pub fn address(&self) -> Address {
        Address::from_public_key(&self.public)
    }

    /// Deterministic signature over a 32-byte digest.
    pub fn sign(&self, digest: &Hash) -> Vec<u8> {
        match self.scheme {
            Scheme::Ed25519 => {
                let kp = Ed25519KeyPair::from_seed_unchecked(&self.secret)
                    .expect("seed validated at construction");
                kp.sign(&digest.0).as_ref().to_vec()
            }
            Scheme::Mock => {
                let mut preimage = Vec::with_capacity(64);
                preimage.extend_from_slice(&self.secret);
                preimage.extend_from_slice(&digest.0);
                sha256(&preimage).0.to_vec()
            }
        }
    }
}

impl fmt::Debug for Keypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Keypair({}, {})", self.scheme.name(), self.address())
    }
}

/// Verifies a detached signature over a digest against a tagged public key.
pub fn verify(public_key: &[u8], digest: &Hash, signature: &[u8]) -> bool {
    match public_key.split_first() {
        Some((&SCHEME_TAG_ED25519, material)) if material.len() == 32 => {
            UnparsedPublicKey::new(&ED25519, material).verify(&digest.0, signature).is_ok()
        }
        Some((&SCHEME_TAG_MOCK, material)) if material.len() == 32 => {
            let mut preimage = Vec::with_capacity(64);
            preimage.extend_from_slice(material);
            preimage.extend_from_slice(&digest.0);
            signature == sha256(&preimage).0
        }
        _ => false,
    }
}
