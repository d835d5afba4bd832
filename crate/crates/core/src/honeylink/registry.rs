use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize};
use url::Url;

use super::LinkError;
use crate::sheetstore::SheetId;

pub const DEFAULT_TOKEN_LEN: usize = 6;
const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
const MAX_TOKEN_LEN: usize = 16;

/// Short link code over `[a-zA-Z0-9]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    pub fn new(s: impl Into<String>) -> Result<Self, LinkError> {
        let s = s.into();
        if !s.is_empty() && s.len() <= MAX_TOKEN_LEN && s.bytes().all(|b| b.is_ascii_alphanumeric()) {
            Ok(Token(s))
        } else {
            Err(LinkError::BadToken(s))
        }
    }

    fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Token((0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char).collect())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Token {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Token::new(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetClass {
    /// Points at infrastructure we run; clicks reach the logging server.
    Controlled,
    /// Points at a non-existent page on a bank's host.
    DecoyBank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoneyLink {
    pub token: Token,
    pub target_class: TargetClass,
    pub destination: String,
    pub sheet_id: SheetId,
    /// The URL planted in the sheet.
    pub short_url: String,
}

/// Token → link mapping plus the tracker's public settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawRegistry")]
pub struct LinkRegistry {
    controlled_domain: String,
    link_base: String,
    redirect_target: String,
    token_len: usize,
    links: Vec<HoneyLink>,
    #[serde(skip)]
    index: HashMap<Token, usize>,
}

#[derive(Deserialize)]
struct RawRegistry {
    controlled_domain: String,
    link_base: String,
    redirect_target: String,
    #[serde(default = "default_token_len")]
    token_len: usize,
    #[serde(default)]
    links: Vec<HoneyLink>,
}

fn default_token_len() -> usize {
    DEFAULT_TOKEN_LEN
}

impl TryFrom<RawRegistry> for LinkRegistry {
    type Error = LinkError;

    fn try_from(raw: RawRegistry) -> Result<Self, LinkError> {
        let mut registry =
            LinkRegistry::new(raw.controlled_domain, raw.link_base, raw.redirect_target)?.with_token_len(raw.token_len)?;
        for link in raw.links {
            if registry.index.contains_key(&link.token) {
                return Err(LinkError::DuplicateToken(link.token.0));
            }
            registry.index.insert(link.token.clone(), registry.links.len());
            registry.links.push(link);
        }
        Ok(registry)
    }
}

fn absolute_url(raw: &str) -> Result<Url, LinkError> {
    let bad = |reason: &str| LinkError::BadDestination { url: raw.to_string(), reason: reason.to_string() };
    let url = Url::parse(raw).map_err(|e| bad(&e.to_string()))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(bad("scheme must be http or https"));
    }
    if url.host_str().is_none_or(str::is_empty) {
        return Err(bad("missing host"));
    }
    Ok(url)
}

impl LinkRegistry {
    pub fn new(
        controlled_domain: impl Into<String>,
        link_base: impl Into<String>,
        redirect_target: impl Into<String>,
    ) -> Result<Self, LinkError> {
        let link_base = link_base.into();
        let redirect_target = redirect_target.into();
        absolute_url(&link_base)?;
        absolute_url(&redirect_target)?;
        Ok(LinkRegistry {
            controlled_domain: controlled_domain.into().to_ascii_lowercase(),
            link_base: link_base.trim_end_matches('/').to_string(),
            redirect_target,
            token_len: DEFAULT_TOKEN_LEN,
            links: Vec::new(),
            index: HashMap::new(),
        })
    }

    /// Overrides the token length (1..=16). Only meaningful before minting.
    pub fn with_token_len(mut self, len: usize) -> Result<Self, LinkError> {
        if len == 0 || len > MAX_TOKEN_LEN {
            return Err(LinkError::BadToken(format!("<length {len}>")));
        }
        self.token_len = len;
        Ok(self)
    }

    /// Replaces where every honey link redirects to.
    pub fn set_redirect_target(&mut self, target: impl Into<String>) -> Result<(), LinkError> {
        let target = target.into();
        absolute_url(&target)?;
        self.redirect_target = target;
        Ok(())
    }

    pub fn controlled_domain(&self) -> &str {
        &self.controlled_domain
    }

    pub fn redirect_target(&self) -> &str {
        &self.redirect_target
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Links in mint order.
    pub fn links(&self) -> &[HoneyLink] {
        &self.links
    }

    pub fn links_for_sheet<'a>(&'a self, sheet_id: &'a SheetId) -> impl Iterator<Item = &'a HoneyLink> + 'a {
        self.links.iter().filter(move |l| &l.sheet_id == sheet_id)
    }

    pub fn resolve(&self, token: &str) -> Option<&HoneyLink> {
        // Token::new rejects garbage before hashing.
        let token = Token::new(token).ok()?;
        self.index.get(&token).map(|&i| &self.links[i])
    }

    fn keyspace(&self) -> usize {
        (ALPHABET.len() as u128).pow(self.token_len as u32).min(usize::MAX as u128) as usize
    }

    /// Mints a fresh token for `destination` and stores the link.
    pub fn mint_token<R: Rng + ?Sized>(
        &mut self,
        target_class: TargetClass,
        destination: &str,
        sheet_id: &SheetId,
        rng: &mut R,
    ) -> Result<HoneyLink, LinkError> {
        let url = absolute_url(destination)?;
        let on_controlled = url.host_str().map(str::to_ascii_lowercase).as_deref() == Some(&self.controlled_domain);
        match (target_class, on_controlled) {
            (TargetClass::Controlled, false) => {
                return Err(LinkError::BadDestination {
                    url: destination.to_string(),
                    reason: format!("controlled links must point at {}", self.controlled_domain),
                })
            }
            (TargetClass::DecoyBank, true) => {
                return Err(LinkError::BadDestination {
                    url: destination.to_string(),
                    reason: "decoy links must not point at the controlled domain".into(),
                })
            }
            _ => {}
        }
        if self.links.len() >= self.keyspace() {
            return Err(LinkError::KeyspaceExhausted(self.links.len()));
        }
        let token = loop {
            let candidate = Token::random(self.token_len, rng);
            if !self.index.contains_key(&candidate) {
                break candidate;
            }
        };
        let link = HoneyLink {
            short_url: format!("{}/t/{}", self.link_base, token),
            token: token.clone(),
            target_class,
            destination: destination.to_string(),
            sheet_id: sheet_id.clone(),
        };
        self.index.insert(token, self.links.len());
        self.links.push(link.clone());
        Ok(link)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("registry serializes");
        s.push('\n');
        s
    }
}
