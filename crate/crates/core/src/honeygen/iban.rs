use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GenError;
use crate::Exec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-country layout. `bban_classes` describes the whole BBAN as runs of
/// character classes; its first `bank_len` characters are the bank code.
struct CountryLayout {
    code: &'static str,
    length: usize,
    bank_len: usize,
    bban_classes: &'static [(CharClass, usize)],
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Digit,
    Upper,
    Alnum,
}

impl CharClass {
    fn accepts(self, b: u8) -> bool {
        match self {
            CharClass::Digit => b.is_ascii_digit(),
            CharClass::Upper => b.is_ascii_uppercase(),
            CharClass::Alnum => b.is_ascii_digit() || b.is_ascii_uppercase(),
        }
    }
}

use CharClass::*;

const COUNTRIES: &[CountryLayout] = &[
    // bank (4 letters) + sort code (6) + account (8)
    CountryLayout { code: "GB", length: 22, bank_len: 4, bban_classes: &[(Upper, 4), (Digit, 14)] },
    // Bankleitzahl (8) + account (10)
    CountryLayout { code: "DE", length: 22, bank_len: 8, bban_classes: &[(Digit, 18)] },
    // bank (5) + branch (5) + account (11) + RIB key (2)
    CountryLayout { code: "FR", length: 27, bank_len: 5, bban_classes: &[(Digit, 10), (Alnum, 11), (Digit, 2)] },
];

fn layout_for(code: &str) -> Option<&'static CountryLayout> {
    COUNTRIES.iter().find(|c| c.code == code)
}

pub fn supported_countries() -> impl Iterator<Item = &'static str> {
    COUNTRIES.iter().map(|c| c.code)
}

/// Remainder of the rearranged numeric form modulo 97, computed digit by
/// digit. Letters expand to two digits (A=10 .. Z=35). `None` on any other
/// character.
pub(crate) fn mod97(rearranged: &str) -> Option<u32> {
    let mut rem = 0u32;
    for b in rearranged.bytes() {
        let v = match b {
            b'0'..=b'9' => u32::from(b - b'0'),
            b'A'..=b'Z' => u32::from(b - b'A') + 10,
            _ => return None,
        };
        rem = if v >= 10 { (rem * 100 + v) % 97 } else { (rem * 10 + v) % 97 };
    }
    Some(rem)
}

fn check_digits_for(country: &str, bban: &str) -> u8 {
    let rem = mod97(&format!("{bban}{country}00")).expect("bban is alphanumeric");
    (98 - rem) as u8
}

/// A structurally valid IBAN with correct ISO 13616 check digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Iban {
    country_code: String,
    check_digits: u8,
    bban: String,
}

impl Iban {
    pub fn country_code(&self) -> &str {
        &self.country_code
    }

    pub fn check_digits(&self) -> u8 {
        self.check_digits
    }

    pub fn bban(&self) -> &str {
        &self.bban
    }

    /// Compact electronic form, e.g. `GB82WEST12345698765432`.
    pub fn compact(&self) -> String {
        format!("{}{:02}{}", self.country_code, self.check_digits, self.bban)
    }

    /// Print form in groups of four.
    pub fn grouped(&self) -> String {
        let compact = self.compact();
        compact.as_bytes().chunks(4).map(|c| std::str::from_utf8(c).unwrap()).collect::<Vec<_>>().join(" ")
    }

    /// UK sort code embedded in a GB BBAN.
    pub fn sort_code(&self) -> Option<SortCode> {
        (self.country_code == "GB").then(|| SortCode::from_digits(&self.bban[4..10]).expect("GB bban layout"))
    }
}

impl fmt::Display for Iban {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.compact())
    }
}

/// Six-digit UK branch identifier, shown as `NN-NN-NN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SortCode([u8; 6]);

impl SortCode {
    pub fn from_digits(s: &str) -> Option<Self> {
        let bytes: [u8; 6] = s.as_bytes().try_into().ok()?;
        bytes.iter().all(u8::is_ascii_digit).then_some(SortCode(bytes))
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut d = [0u8; 6];
        d.iter_mut().for_each(|b| *b = b'0' + rng.random_range(0..10u8));
        SortCode(d)
    }
}

impl fmt::Display for SortCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = std::str::from_utf8(&self.0).unwrap();
        write!(f, "{}-{}-{}", &s[0..2], &s[2..4], &s[4..6])
    }
}

/// Which bank identifiers the generator uses and which BBAN prefixes it must
/// never produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IbanPolicy {
    pub bank_codes: BTreeMap<String, String>,
    pub deny_prefixes: Vec<String>,
}

impl Default for IbanPolicy {
    fn default() -> Self {
        // Fictitious identifiers; none is assigned to a real institution.
        let bank_codes = [("GB", "HNYB"), ("DE", "09990042"), ("FR", "99990")]
            .into_iter()
            .map(|(c, b)| (c.to_string(), b.to_string()))
            .collect();
        // Real bank identifiers that must never appear.
        let deny_prefixes = [
            "WEST", "NWBK", "BARC", "HBUK", "LOYD", "MIDL", "BUKB", "ABBY", "37040044", "50010517",
            "10020890", "20041", "30002", "30003", "30004", "30006",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        IbanPolicy { bank_codes, deny_prefixes }
    }
}

const MAX_DRAWS: usize = 1000;

impl IbanPolicy {
    fn denied(&self, bban: &str) -> bool {
        self.deny_prefixes.iter().any(|p| !p.is_empty() && bban.starts_with(p.as_str()))
    }

    pub fn generate<R: Rng + ?Sized>(&self, country_code: &str, rng: &mut R) -> Result<Iban, GenError> {
        let layout = layout_for(country_code).ok_or_else(|| GenError::UnsupportedCountry(country_code.to_string()))?;
        let bank = self
            .bank_codes
            .get(country_code)
            .ok_or_else(|| GenError::UnsupportedCountry(country_code.to_string()))?;
        let classes: Vec<CharClass> =
            layout.bban_classes.iter().flat_map(|&(class, n)| std::iter::repeat_n(class, n)).collect();
        let bank_ok = bank.len() == layout.bank_len && bank.bytes().zip(&classes).all(|(b, c)| c.accepts(b));
        if !bank_ok {
            return Err(GenError::BadBankCode { country: country_code.to_string(), code: bank.clone() });
        }
        if self.denied(bank) {
            return Err(GenError::DeniedBankCode(bank.clone()));
        }
        for _ in 0..MAX_DRAWS {
            let mut bban = bank.clone();
            let tail_len = classes.len() - layout.bank_len;
            let tail_classes = &classes[layout.bank_len..];
            if country_code == "FR" {
                // Keep the account digit-only so the RIB key can be computed.
                let digits: String = (0..tail_len - 2).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect();
                bban.push_str(&digits);
                bban.push_str(&format!("{:02}", rib_key(&bban)));
            } else {
                for class in tail_classes {
                    let c = match class {
                        Digit => b'0' + rng.random_range(0..10u8),
                        Upper => b'A' + rng.random_range(0..26u8),
                        Alnum => *b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ".get(rng.random_range(0..36usize)).unwrap(),
                    };
                    bban.push(char::from(c));
                }
            }
            if self.denied(&bban) {
                continue;
            }
            debug_assert_eq!(bban.len() + 4, layout.length);
            let check_digits = check_digits_for(country_code, &bban);
            return Ok(Iban { country_code: country_code.to_string(), check_digits, bban });
        }
        Err(GenError::DeniedBankCode(bank.clone()))
    }
}

/// French RIB key over a digit-only bank/branch/account prefix.
fn rib_key(prefix: &str) -> u64 {
    let bank: u64 = prefix[0..5].parse().unwrap();
    let branch: u64 = prefix[5..10].parse().unwrap();
    let account: u64 = prefix[10..21].parse().unwrap();
    97 - (89 * bank + 15 * branch + 3 * account) % 97
}

/// Generates an IBAN with the default fictitious bank codes.
pub fn generate_iban<R: Rng + ?Sized>(country_code: &str, rng: &mut R) -> Result<Iban, GenError> {
    IbanPolicy::default().generate(country_code, rng)
}

/// One IBAN per seed, each from its own `ChaCha8Rng`.
pub fn generate_ibans(
    policy: &IbanPolicy,
    country_code: &str,
    seeds: &[u64],
    exec: Exec,
) -> Vec<Result<Iban, GenError>> {
    exec.map(seeds, |&seed| policy.generate(country_code, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Structure and checksum check. Spaces are ignored; everything else must
/// be uppercase and match the country's layout exactly.
pub fn validate_iban(candidate: &str) -> bool {
    let compact: String = candidate.chars().filter(|c| *c != ' ').collect();
    if compact.len() < 4 || !compact.is_ascii() {
        return false;
    }
    let Some(layout) = layout_for(&compact[0..2]) else {
        return false;
    };
    if compact.len() != layout.length || !compact.as_bytes()[2..4].iter().all(u8::is_ascii_digit) {
        return false;
    }
    let bban = &compact.as_bytes()[4..];
    let mut classes = layout.bban_classes.iter().flat_map(|&(class, n)| std::iter::repeat_n(class, n));
    if !bban.iter().all(|&b| classes.next().is_some_and(|c| c.accepts(b))) {
        return false;
    }
    let rearranged = format!("{}{}", &compact[4..], &compact[0..4]);
    mod97(&rearranged) == Some(1)
}
