//! Server-side session registry.
//!
//! Stores the derived encryption key and expiry per UID, handles key refresh
//! with an old-key grace period, SRP re-keying, and the replay nonce cache.
//! All operations are atomic per UID; the store is safe for concurrent
//! request handling.

use rand::{CryptoRng, RngCore};
use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::sync::Mutex;
use thiserror::Error;

use crate::crypto::{derive_srp_session_key, SessionKey, KEY_LEN};
use crate::packet::{DEFAULT_FUTURE_SKEW_SECS, NONCE_LEN, REPLAY_WINDOW_SECS, UID_LEN};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("unknown session uid")]
    Unknown,
    #[error("refresh grace window elapsed")]
    GraceExpired,
    #[error("duplicate nonce")]
    ReplayDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    /// Session lifetime in seconds.
    pub ttl: u64,
    /// Seconds after rotation/expiry during which the old key may still
    /// authorize a refresh.
    pub grace: u64,
    /// Tolerated future clock skew in seconds.
    pub skew: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { ttl: 900, grace: 30, skew: DEFAULT_FUTURE_SKEW_SECS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionStatus {
    Live,
    Expired,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub uid: [u8; UID_LEN],
    pub key: SessionKey,
    pub created_at: u64,
    pub expires_at: u64,
    /// Permanent for the session's lifetime; never flips back to false.
    pub encrypted: bool,
    pub access_token: Option<String>,
    pub refresh_token: Option<String>,
    /// Old key retained during an in-flight refresh; authorizes the refresh
    /// route only, until the stored deadline.
    pub previous_key: Option<(SessionKey, u64)>,
}

type NonceCache = HashMap<([u8; UID_LEN], [u8; NONCE_LEN]), u64>;

pub struct SessionStore {
    config: SessionConfig,
    sessions: Mutex<HashMap<[u8; UID_LEN], Session>>,
    nonces: Mutex<NonceCache>,
}

impl SessionStore {
    pub fn new(config: SessionConfig) -> Self {
        SessionStore {
            config,
            sessions: Mutex::new(HashMap::new()),
            nonces: Mutex::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Create an encrypted session with a fresh random UID.
    pub fn create_session<R: RngCore + CryptoRng>(
        &self,
        key: SessionKey,
        now: u64,
        rng: &mut R,
    ) -> [u8; UID_LEN] {
        let mut sessions = self.sessions.lock().unwrap();
        loop {
            let mut uid = [0u8; UID_LEN];
            rng.fill_bytes(&mut uid);
            if sessions.contains_key(&uid) {
                continue;
            }
            sessions.insert(
                uid,
                Session {
                    uid,
                    key,
                    created_at: now,
                    expires_at: now + self.config.ttl,
                    encrypted: true,
                    access_token: None,
                    refresh_token: None,
                    previous_key: None,
                },
            );
            return uid;
        }
    }

    /// Fetch a session. `now == expires_at` is still live; expired sessions
    /// are returned so the refresh route can still act on them.
    pub fn lookup(
        &self,
        uid: &[u8; UID_LEN],
        now: u64,
    ) -> Result<(Session, SessionStatus), SessionError> {
        let sessions = self.sessions.lock().unwrap();
        let session = sessions.get(uid).ok_or(SessionError::Unknown)?.clone();
        let status =
            if now > session.expires_at { SessionStatus::Expired } else { SessionStatus::Live };
        Ok((session, status))
    }

    /// Rotate to a new key, keeping the old key for the refresh route during
    /// the grace period. Never shortens the expiry.
    pub fn refresh_session(
        &self,
        uid: &[u8; UID_LEN],
        new_key: SessionKey,
        now: u64,
    ) -> Result<(), SessionError> {
        let mut sessions = self.sessions.lock().unwrap();
        let session = sessions.get_mut(uid).ok_or(SessionError::Unknown)?;
        if now > session.expires_at + self.config.grace {
            return Err(SessionError::GraceExpired);
        }
        let old = session.key;
        session.previous_key = Some((old, now + self.config.grace));
        session.key = new_key;
        session.expires_at = session.expires_at.max(now + self.config.ttl);
        Ok(())
    }

    /// Replace the session key with the SRP-derived one. The old key is
    /// invalidated immediately; login is an explicit rotation point.
    pub fn rekey_from_srp(
        &self,
        uid: &[u8; UID_LEN],
        k: &[u8; 32],
        now: u64,
    ) -> Result<(), SessionError> {
        let mut sessions = self.sessions.lock().unwrap();
        let session = sessions.get_mut(uid).ok_or(SessionError::Unknown)?;
        session.key = derive_srp_session_key(k);
        session.previous_key = None;
        session.expires_at = session.expires_at.max(now + self.config.ttl);
        Ok(())
    }

    /// Bind the opaque OAuth token pair to this session.
    pub fn set_tokens(
        &self,
        uid: &[u8; UID_LEN],
        access_token: &str,
        refresh_token: &str,
    ) -> Result<(), SessionError> {
        let mut sessions = self.sessions.lock().unwrap();
        let session = sessions.get_mut(uid).ok_or(SessionError::Unknown)?;
        session.access_token = Some(access_token.to_string());
        session.refresh_token = Some(refresh_token.to_string());
        Ok(())
    }

    /// Administrative: force an expiry time (used by operators and tests to
    /// exercise the refresh path).
    pub fn set_expiry(&self, uid: &[u8; UID_LEN], expires_at: u64) -> Result<(), SessionError> {
        let mut sessions = self.sessions.lock().unwrap();
        let session = sessions.get_mut(uid).ok_or(SessionError::Unknown)?;
        session.expires_at = expires_at;
        Ok(())
    }

    /// Non-recording membership probe for the packet-open predicate.
    pub fn nonce_seen(&self, uid: &[u8; UID_LEN], nonce: &[u8; NONCE_LEN]) -> bool {
        self.nonces.lock().unwrap().contains_key(&(*uid, *nonce))
    }

    /// Atomic check-and-insert. First occurrence within the window is
    /// recorded; duplicates are rejected.
    pub fn check_and_record_nonce(
        &self,
        uid: &[u8; UID_LEN],
        nonce: &[u8; NONCE_LEN],
        now: u64,
    ) -> Result<(), SessionError> {
        let retention = REPLAY_WINDOW_SECS + self.config.skew;
        let mut nonces = self.nonces.lock().unwrap();
        nonces.retain(|_, inserted| now.saturating_sub(*inserted) <= retention);
        match nonces.entry((*uid, *nonce)) {
            std::collections::hash_map::Entry::Occupied(_) => Err(SessionError::ReplayDetected),
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(now);
                Ok(())
            }
        }
    }

    /// Snapshot persistence: length-prefixed binary records
    /// `(uid, key, created, expires, flags, tokens)`. Nonces are deliberately
    /// not persisted.
    pub fn save_snapshot<W: Write>(&self, mut writer: W) -> io::Result<()> {
        let sessions = self.sessions.lock().unwrap();
        for session in sessions.values() {
            let mut record = Vec::new();
            record.extend_from_slice(&session.uid);
            record.extend_from_slice(session.key.as_bytes());
            record.extend_from_slice(&session.created_at.to_be_bytes());
            record.extend_from_slice(&session.expires_at.to_be_bytes());
            record.push(u8::from(session.encrypted));
            for token in [&session.access_token, &session.refresh_token] {
                let bytes = token.as_deref().unwrap_or("").as_bytes();
                record.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
                record.extend_from_slice(bytes);
            }
            writer.write_all(&(record.len() as u32).to_be_bytes())?;
            writer.write_all(&record)?;
        }
        Ok(())
    }

    pub fn load_snapshot<R: Read>(&self, mut reader: R) -> io::Result<()> {
        let mut sessions = self.sessions.lock().unwrap();
        loop {
            let mut len_buf = [0u8; 4];
            match reader.read_exact(&mut len_buf) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(()),
                Err(e) => return Err(e),
            }
            let mut record = vec![0u8; u32::from_be_bytes(len_buf) as usize];
            reader.read_exact(&mut record)?;
            let session = parse_record(&record)
                .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "bad record"))?;
            sessions.insert(session.uid, session);
        }
    }

    #[cfg(test)]
    fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }
}

fn parse_record(record: &[u8]) -> Option<Session> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Option<&[u8]> {
        let out = record.get(*pos..*pos + n)?;
        *pos += n;
        Some(out)
    };
    let uid: [u8; UID_LEN] = take(&mut pos, UID_LEN)?.try_into().ok()?;
    let key: [u8; KEY_LEN] = take(&mut pos, KEY_LEN)?.try_into().ok()?;
    let created_at = u64::from_be_bytes(take(&mut pos, 8)?.try_into().ok()?);
    let expires_at = u64::from_be_bytes(take(&mut pos, 8)?.try_into().ok()?);
    let encrypted = take(&mut pos, 1)?[0] != 0;
    let mut tokens = [None, None];
    for slot in tokens.iter_mut() {
        let len = u32::from_be_bytes(take(&mut pos, 4)?.try_into().ok()?) as usize;
        let raw = take(&mut pos, len)?;
        let text = std::str::from_utf8(raw).ok()?;
        if !text.is_empty() {
            *slot = Some(text.to_string());
        }
    }
    let [access_token, refresh_token] = tokens;
    Some(Session {
        uid,
        key: SessionKey::from_bytes(key),
        created_at,
        expires_at,
        encrypted,
        access_token,
        refresh_token,
        previous_key: None,
    })
}
