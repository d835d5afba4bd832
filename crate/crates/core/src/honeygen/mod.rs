//! Fake payroll content and honey spreadsheet assembly.

mod iban;
mod names;
mod sheet;

pub use iban::{generate_iban, generate_ibans, supported_countries, validate_iban, Iban, IbanPolicy, SortCode};
pub use sheet::{
    build_honey_sheet, generate_person, mint_links, PersonRecord, SheetConfig, DEFAULT_BANK_HOSTS,
    HEADER,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("unsupported IBAN country {0:?}")]
    UnsupportedCountry(String),
    #[error("bank code {code:?} does not fit the {country} layout")]
    BadBankCode { country: String, code: String },
    #[error("bank code {0:?} matches the deny list")]
    DeniedBankCode(String),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Link(#[from] crate::honeylink::LinkError),
}
