use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SiteHistory;
use crate::diff::VersionId;
use crate::html::{self, Item};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Location {
    Hyperlink,
    EmbeddedImage,
    ScriptText,
    OtherAttribute,
}

impl Location {
    pub fn as_str(self) -> &'static str {
        match self {
            Location::Hyperlink => "hyperlink",
            Location::EmbeddedImage => "embedded-image",
            Location::ScriptText => "script-text",
            Location::OtherAttribute => "other-attribute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Bech32,
    Base58,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Bech32 => "bech32",
            Scheme::Base58 => "base58",
        }
    }
}

/// An address-shaped string found in one page.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AddressMatch {
    pub location: Location,
    pub address: String,
    pub scheme: Scheme,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitcoinFinding {
    pub site_id: String,
    pub version: VersionId,
    pub fetched_at: DateTime<Utc>,
    #[serde(flatten)]
    pub hit: AddressMatch,
}

/// Longest run that is still reported as a rejected base58 candidate.
const MAX_BASE58_SHAPE: usize = 64;

/// Scans attribute values and script bodies for Bitcoin addresses. Each
/// distinct `(location, address)` is reported once, in document order.
pub fn scan_hidden_bitcoin(page: &str) -> Vec<AddressMatch> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |m: AddressMatch, out: &mut Vec<AddressMatch>| {
        if seen.insert((m.location, m.address.clone())) {
            out.push(m);
        }
    };
    for item in html::lex(page) {
        match item {
            Item::Tag(t) if !t.closing => {
                for attr in &t.attrs {
                    let location = if !t.terminated {
                        Location::OtherAttribute
                    } else if matches!(t.name.as_str(), "a" | "area") && attr.name == "href" {
                        Location::Hyperlink
                    } else if matches!(t.name.as_str(), "img" | "image") {
                        Location::EmbeddedImage
                    } else {
                        Location::OtherAttribute
                    };
                    for m in scan_text(attr.value, location) {
                        push(m, &mut out);
                    }
                }
            }
            Item::RawText { tag: "script", text } => {
                for m in scan_text(text, Location::ScriptText) {
                    push(m, &mut out);
                }
            }
            _ => {}
        }
    }
    out
}

/// All findings over every version of a site.
pub fn scan_site(history: &SiteHistory) -> Vec<BitcoinFinding> {
    history
        .versions
        .iter()
        .enumerate()
        .flat_map(|(i, v)| {
            scan_hidden_bitcoin(&v.html).into_iter().map(move |hit| BitcoinFinding {
                site_id: v.site_id.clone(),
                version: VersionId(i as u32),
                fetched_at: v.fetched_at,
                hit,
            })
        })
        .collect()
}

fn scan_text(text: &str, location: Location) -> Vec<AddressMatch> {
    let mut out = Vec::new();
    for run in text.split(|c: char| !c.is_ascii_alphanumeric()).filter(|r| r.len() >= 25) {
        let found = scan_run(run, location, &mut out);
        if !found {
            if let Some(scheme) = address_shape(run) {
                out.push(AddressMatch {
                    location,
                    address: run.to_owned(),
                    scheme,
                    valid: false,
                });
            }
        }
    }
    out
}

/// Valid addresses embedded anywhere in an alphanumeric run, left to right.
fn scan_run(run: &str, location: Location, out: &mut Vec<AddressMatch>) -> bool {
    let b = run.as_bytes();
    let mut found = false;
    let mut i = 0;
    'outer: while i < b.len() {
        if b.len() - i >= 42 && b[i..i + 3].eq_ignore_ascii_case(b"bc1") {
            for len in (42..=62.min(b.len() - i)).rev() {
                let cand = &run[i..i + len];
                if validate_bech32(cand) {
                    out.push(hit(cand, Scheme::Bech32, location));
                    found = true;
                    i += len;
                    continue 'outer;
                }
            }
        }
        if matches!(b[i], b'1' | b'3') {
            let span = b[i..].iter().take(34).take_while(|c| is_base58(**c)).count();
            for len in (25..=span).rev() {
                let cand = &run[i..i + len];
                if validate_base58check(cand) {
                    out.push(hit(cand, Scheme::Base58, location));
                    found = true;
                    i += len;
                    continue 'outer;
                }
            }
        }
        i += 1;
    }
    found
}

fn hit(address: &str, scheme: Scheme, location: Location) -> AddressMatch {
    AddressMatch {
        location,
        address: address.to_owned(),
        scheme,
        valid: true,
    }
}

/// Whole runs that look like an address but failed validation.
fn address_shape(run: &str) -> Option<Scheme> {
    let b = run.as_bytes();
    if b.len() >= 42 && b.len() <= 62 && b[..3].eq_ignore_ascii_case(b"bc1") && b[3..].iter().all(|c| bech32_value(*c).is_some()) {
        return Some(Scheme::Bech32);
    }
    if matches!(b[0], b'1' | b'3') && b.len() <= MAX_BASE58_SHAPE && b.iter().all(|c| is_base58(*c)) {
        return Some(Scheme::Base58);
    }
    None
}

const BECH32_CHARSET: &[u8; 32] = b"qpzry9x8gf2tvdw0s3jn54khce6mua7l";
const BECH32_CONST: u32 = 1;
const BECH32M_CONST: u32 = 0x2bc8_30a3;

fn bech32_value(c: u8) -> Option<u8> {
    BECH32_CHARSET.iter().position(|x| *x == c.to_ascii_lowercase()).map(|p| p as u8)
}

fn polymod(values: impl Iterator<Item = u8>) -> u32 {
    const GEN: [u32; 5] = [0x3b6a_57b2, 0x2650_8e6d, 0x1ea1_19fa, 0x3d42_33dd, 0x2a14_62b3];
    let mut chk: u32 = 1;
    for v in values {
        let top = chk >> 25;
        chk = ((chk & 0x01ff_ffff) << 5) ^ u32::from(v);
        for (i, g) in GEN.iter().enumerate() {
            if (top >> i) & 1 == 1 {
                chk ^= g;
            }
        }
    }
    chk
}

/// Regroups 5-bit words into bytes; padding must be short and zero.
fn five_to_eight(data: &[u8]) -> Option<Vec<u8>> {
    let mut acc: u32 = 0;
    let mut bits = 0;
    let mut out = Vec::with_capacity(data.len() * 5 / 8);
    for &d in data {
        acc = (acc << 5) | u32::from(d);
        bits += 5;
        if bits >= 8 {
            bits -= 8;
            out.push((acc >> bits) as u8);
            acc &= (1 << bits) - 1;
        }
    }
    (bits < 5 && acc == 0).then_some(out)
}

/// Mainnet segwit address: hrp `bc`, bech32 checksum for version 0 and
/// bech32m for versions 1 to 16, program length per version.
pub fn validate_bech32(candidate: &str) -> bool {
    let s = candidate.as_bytes();
    if s.len() < 14 || s.len() > 90 {
        return false;
    }
    let has_lower = s.iter().any(u8::is_ascii_lowercase);
    let has_upper = s.iter().any(u8::is_ascii_uppercase);
    if has_lower && has_upper {
        return false;
    }
    let Some(sep) = s.iter().rposition(|c| *c == b'1') else {
        return false;
    };
    if !s[..sep].eq_ignore_ascii_case(b"bc") || s.len() - sep - 1 < 7 {
        return false;
    }
    let Some(data) = s[sep + 1..].iter().map(|c| bech32_value(*c)).collect::<Option<Vec<u8>>>() else {
        return false;
    };
    let hrp = b"bc";
    let expanded = hrp.iter().map(|c| c >> 5).chain([0]).chain(hrp.iter().map(|c| c & 31));
    let residue = polymod(expanded.chain(data.iter().copied()));
    let version = data[0];
    let expected = match version {
        0 => BECH32_CONST,
        1..=16 => BECH32M_CONST,
        _ => return false,
    };
    if residue != expected {
        return false;
    }
    let Some(program) = five_to_eight(&data[1..data.len() - 6]) else {
        return false;
    };
    match version {
        0 => program.len() == 20 || program.len() == 32,
        _ => (2..=40).contains(&program.len()),
    }
}

const BASE58_ALPHABET: &[u8; 58] = b"123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

fn is_base58(c: u8) -> bool {
    c.is_ascii_alphanumeric() && !matches!(c, b'0' | b'O' | b'I' | b'l')
}

fn base58_decode(s: &[u8]) -> Option<Vec<u8>> {
    let mut out: Vec<u8> = Vec::with_capacity(s.len());
    for &c in s {
        let mut carry = BASE58_ALPHABET.iter().position(|x| *x == c)? as u32;
        for byte in out.iter_mut().rev() {
            carry += u32::from(*byte) * 58;
            *byte = (carry & 0xff) as u8;
            carry >>= 8;
        }
        while carry > 0 {
            out.insert(0, (carry & 0xff) as u8);
            carry >>= 8;
        }
    }
    let zeros = s.iter().take_while(|c| **c == b'1').count();
    let mut bytes = vec![0u8; zeros];
    bytes.extend(out);
    Some(bytes)
}

/// Base58 alphabet, 25 to 34 characters, double-SHA-256 checksum.
pub fn validate_base58check(candidate: &str) -> bool {
    let s = candidate.as_bytes();
    if !(25..=34).contains(&s.len()) {
        return false;
    }
    let Some(bytes) = base58_decode(s) else {
        return false;
    };
    if bytes.len() < 5 {
        return false;
    }
    let (payload, check) = bytes.split_at(bytes.len() - 4);
    let digest = Sha256::digest(Sha256::digest(payload));
    digest[..4] == *check
}
