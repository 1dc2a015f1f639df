//! Rejection reason codes.
//!
//! Every way a transaction can fail maps to exactly one code. The `Display`
//! form is the stable wire/CLI spelling; receipts and the command line print
//! it verbatim.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Rejection {
    // Transaction envelope
    #[error("BadSignature")]
    BadSignature,
    #[error("BadNonce")]
    BadNonce,
    #[error("UnknownSender")]
    UnknownSender,

    // Registry
    #[error("DuplicateAccount")]
    DuplicateAccount,
    #[error("NameTooLong")]
    NameTooLong,
    #[error("Unauthorized")]
    Unauthorized,
    #[error("UnknownAccount")]
    UnknownAccount,
    #[error("RoleMismatch")]
    RoleMismatch,

    // Carbon token
    #[error("ZeroAmount")]
    ZeroAmount,
    #[error("InsufficientBalance")]
    InsufficientBalance,
    #[error("BurnSinkNotTransferable")]
    BurnSinkNotTransferable,
    #[error("UnknownSubmission")]
    UnknownSubmission,
    #[error("UnknownBurn")]
    UnknownBurn,
    #[error("NotFinalized")]
    NotFinalized,
    #[error("AlreadyExecuted")]
    AlreadyExecuted,

    // Verifier quorum
    #[error("NoVerifiers")]
    NoVerifiers,
    #[error("UnknownProposal")]
    UnknownProposal,
    #[error("NotEligible")]
    NotEligible,
    #[error("DuplicateVote")]
    DuplicateVote,

    // Market maker
    #[error("PoolExists")]
    PoolExists,
    #[error("NoPool")]
    NoPool,
    #[error("ZeroShares")]
    ZeroShares,
    #[error("InsufficientShares")]
    InsufficientShares,
    #[error("SlippageExceeded")]
    SlippageExceeded,
    #[error("DustOutput")]
    DustOutput,

    // Arithmetic guard: quantities never wrap.
    #[error("Overflow")]
    Overflow,
}

impl Rejection {
    pub fn code(self) -> String {
        self.to_string()
    }
}
