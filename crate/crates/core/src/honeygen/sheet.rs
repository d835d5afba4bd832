use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::iban::IbanPolicy;
use super::names::{FAMILY_NAMES, GIVEN_NAMES, ROLES};
use super::{GenError, SortCode};
use crate::honeylink::{HoneyLink, LinkRegistry, TargetClass};
use crate::sheetstore::{Cell, CellFormat, HoneySheet, Rgb, SheetId};

pub const HEADER: [&str; 5] = ["Name", "Role", "IBAN", "Sort code", "Monthly pay"];

/// Hosts used for decoy transfer links. Paths minted under them carry a
/// random nonce and do not exist.
pub const DEFAULT_BANK_HOSTS: &[&str] = &[
    "www.barclays.co.uk",
    "www.hsbc.co.uk",
    "www.lloydsbank.com",
    "www.natwest.com",
    "www.santander.co.uk",
    "www.rbs.co.uk",
];

const PAY_RANGE: std::ops::RangeInclusive<u64> = 1500..=9500;
const WIDTHS: [u32; 5] = [160, 150, 230, 90, 110];
const LINK_WIDTH: u32 = 100;

// Independent ChaCha streams drawn from one seed.
const STREAM_CONTENT: u64 = 0;
const STREAM_ID: u64 = 1;
const STREAM_LINKS: u64 = 2;

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonRecord {
    pub full_name: String,
    pub role: String,
    /// Minor currency units.
    pub monthly_pay: u64,
}

pub fn generate_person<R: Rng + ?Sized>(rng: &mut R) -> PersonRecord {
    let given = GIVEN_NAMES[rng.random_range(0..GIVEN_NAMES.len())];
    let family = FAMILY_NAMES[rng.random_range(0..FAMILY_NAMES.len())];
    PersonRecord {
        full_name: format!("{given} {family}"),
        role: ROLES[rng.random_range(0..ROLES.len())].to_string(),
        monthly_pay: rng.random_range(PAY_RANGE) * 100,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SheetConfig {
    pub rows: usize,
    pub link_slots: usize,
    pub controlled_slots: usize,
    pub rng_seed: u64,
    /// Country for the IBAN column.
    pub country: String,
    pub iban_policy: IbanPolicy,
    /// Prefix of the share-by-link URL.
    pub share_base: String,
}

impl Default for SheetConfig {
    fn default() -> Self {
        SheetConfig {
            rows: 20,
            link_slots: 9,
            controlled_slots: 3,
            rng_seed: 0,
            country: "GB".into(),
            iban_policy: IbanPolicy::default(),
            share_base: "https://docs.example.com/spreadsheets".into(),
        }
    }
}

impl SheetConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.rows == 0 {
            return Err(GenError::ConfigMismatch("rows must be at least 1".into()));
        }
        if self.controlled_slots > self.link_slots {
            return Err(GenError::ConfigMismatch(format!(
                "controlled_slots {} exceeds link_slots {}",
                self.controlled_slots, self.link_slots
            )));
        }
        Ok(())
    }

    /// Deterministic id derived from the seed.
    pub fn sheet_id(&self) -> SheetId {
        let n = seeded(self.rng_seed, STREAM_ID).next_u64();
        SheetId::new(format!("hs-{:012x}", n >> 16)).expect("hex id")
    }

    pub fn share_link(&self) -> String {
        format!("{}/d/{}/edit", self.share_base.trim_end_matches('/'), self.sheet_id())
    }
}

/// Mints `link_slots` links for the configured sheet: `controlled_slots`
/// of them on the registry's controlled domain, the rest on bank hosts.
pub fn mint_links(
    registry: &mut LinkRegistry,
    config: &SheetConfig,
    bank_hosts: &[&str],
) -> Result<Vec<HoneyLink>, GenError> {
    config.validate()?;
    if bank_hosts.is_empty() && config.link_slots > config.controlled_slots {
        return Err(GenError::ConfigMismatch("no bank hosts for decoy links".into()));
    }
    let mut rng = seeded(config.rng_seed, STREAM_LINKS);
    let sheet_id = config.sheet_id();
    let mut links = Vec::with_capacity(config.link_slots);
    for i in 0..config.link_slots {
        let nonce: u64 = rng.random();
        let (class, destination) = if i < config.controlled_slots {
            (TargetClass::Controlled, format!("https://{}/transfer/{:016x}", registry.controlled_domain(), nonce))
        } else {
            let host = bank_hosts[rng.random_range(0..bank_hosts.len())];
            (TargetClass::DecoyBank, format!("https://{host}/secure/payments/transfer-{nonce:016x}"))
        };
        links.push(registry.mint_token(class, &destination, &sheet_id, &mut rng)?);
    }
    Ok(links)
}

fn money(minor: u64, symbol: &str) -> String {
    let whole = (minor / 100).to_string();
    let mut grouped = String::new();
    for (i, ch) in whole.chars().enumerate() {
        if i > 0 && (whole.len() - i).is_multiple_of(3) {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    format!("{symbol}{grouped}.{:02}", minor % 100)
}

/// Assembles a payroll-style decoy sheet: a header row, `rows` personnel
/// rows, and the given links spread over trailing "Transfer link" columns.
///
/// Pure in `(config, links)`.
pub fn build_honey_sheet(config: &SheetConfig, links: &[HoneyLink]) -> Result<HoneySheet, GenError> {
    config.validate()?;
    if links.len() != config.link_slots {
        return Err(GenError::ConfigMismatch(format!(
            "expected {} links, got {}",
            config.link_slots,
            links.len()
        )));
    }
    let controlled = links.iter().filter(|l| l.target_class == TargetClass::Controlled).count();
    if controlled != config.controlled_slots {
        return Err(GenError::ConfigMismatch(format!(
            "expected {} controlled links, got {controlled}",
            config.controlled_slots
        )));
    }
    let sheet_id = config.sheet_id();
    if let Some(stray) = links.iter().find(|l| l.sheet_id != sheet_id) {
        return Err(GenError::ConfigMismatch(format!("link {} belongs to sheet {}", stray.token, stray.sheet_id)));
    }

    let mut rng = seeded(config.rng_seed, STREAM_CONTENT);
    let symbol = if config.country == "GB" { "£" } else { "€" };
    let link_cols = config.link_slots.div_ceil(config.rows);

    let header_format = CellFormat::new(11, Rgb::BLACK, Rgb(0xd9, 0xd9, 0xd9)).unwrap();
    let mut header: Vec<Cell> = HEADER.iter().map(|h| Cell::styled(*h, header_format)).collect();
    for i in 0..link_cols {
        let title = if link_cols == 1 { "Transfer link".to_string() } else { format!("Transfer link {}", i + 1) };
        header.push(Cell::styled(title, header_format));
    }

    let mut placed: Vec<&HoneyLink> = links.iter().collect();
    placed.shuffle(&mut rng);

    let mut grid = vec![header];
    for r in 0..config.rows {
        let person = generate_person(&mut rng);
        let iban = config.iban_policy.generate(&config.country, &mut rng)?;
        let sort_code = iban.sort_code().unwrap_or_else(|| SortCode::random(&mut rng));
        let mut row = vec![
            Cell::text(person.full_name),
            Cell::text(person.role),
            Cell::text(iban.compact()),
            Cell::text(sort_code.to_string()),
            Cell::text(money(person.monthly_pay, symbol)),
        ];
        for c in 0..link_cols {
            let value = placed.get(c * config.rows + r).map(|l| l.short_url.clone()).unwrap_or_default();
            row.push(Cell::text(value));
        }
        grid.push(row);
    }

    let mut widths = WIDTHS.to_vec();
    widths.extend(std::iter::repeat_n(LINK_WIDTH, link_cols));
    Ok(HoneySheet::new(sheet_id, grid, widths, config.share_link()).expect("rectangular by construction"))
}
