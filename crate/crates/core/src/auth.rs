//! Deletion tokens: the producer keeps a random x_C and publishes y_C = H(x_C)
//! inside the content. Revealing x_C in an erase proves ownership.

use std::collections::HashMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::messages::{Digest, Lambda, MessageError, Name};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DeletionToken(Vec<u8>);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TokenDigest(Vec<u8>);

impl DeletionToken {
    pub fn from_bytes(bytes: Vec<u8>, lambda: Lambda) -> Result<Self, MessageError> {
        check_len(&bytes, lambda)?;
        Ok(DeletionToken(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

// Tokens are secrets; keep them out of logs.
impl std::fmt::Debug for DeletionToken {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DeletionToken({} bytes)", self.0.len())
    }
}

impl TokenDigest {
    pub fn from_bytes(bytes: Vec<u8>, lambda: Lambda) -> Result<Self, MessageError> {
        check_len(&bytes, lambda)?;
        Ok(TokenDigest(bytes))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

fn check_len(bytes: &[u8], lambda: Lambda) -> Result<(), MessageError> {
    if bytes.len() != lambda.bytes() {
        return Err(MessageError::WrongLength { expected: lambda.bytes(), actual: bytes.len() });
    }
    Ok(())
}

/// Seedable per-producer token source.
pub struct TokenGenerator {
    rng: ChaCha20Rng,
    lambda: Lambda,
}

impl TokenGenerator {
    pub fn new(seed: u64, lambda: Lambda) -> Self {
        TokenGenerator { rng: ChaCha20Rng::seed_from_u64(seed), lambda }
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    /// Returns (x_C, y_C = H(x_C)).
    pub fn generate(&mut self) -> (DeletionToken, TokenDigest) {
        let mut x = vec![0u8; self.lambda.bytes()];
        self.rng.fill_bytes(&mut x);
        let y = self.lambda.hash(&x);
        (DeletionToken(x), TokenDigest(y))
    }
}

/// True iff H(token) equals `digest` bytewise.
pub fn verify_token(token: &[u8], digest: &[u8]) -> bool {
    let Ok(lambda) = Lambda::new(digest.len() * 8) else {
        return false;
    };
    if token.len() != digest.len() {
        return false;
    }
    let h = lambda.hash(token);
    // constant-time compare
    h.iter().zip(digest).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
}

/// Producer-side store of tokens, keyed by (name, content digest).
#[derive(Default)]
pub struct TokenStore {
    tokens: HashMap<(Name, Digest), DeletionToken>,
}

impl TokenStore {
    pub fn insert(&mut self, name: Name, digest: Digest, token: DeletionToken) {
        self.tokens.insert((name, digest), token);
    }

    pub fn get(&self, name: &Name, digest: &Digest) -> Option<&DeletionToken> {
        self.tokens.get(&(name.clone(), digest.clone()))
    }

    pub fn remove(&mut self, name: &Name, digest: &Digest) -> Option<DeletionToken> {
        self.tokens.remove(&(name.clone(), digest.clone()))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
