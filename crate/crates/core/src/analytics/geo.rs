use std::collections::HashMap;
use std::io::Read;
use std::net::IpAddr;

use ipnet::IpNet;

use super::AnalyticsError;
use crate::Exec;

pub const UNKNOWN_COUNTRY: &str = "unknown";

/// Offline CIDR → country table with longest-prefix-match lookup.
///
/// Prefixes are bucketed by length and probed from the longest length down,
/// one hash lookup per populated length. When the same prefix is listed
/// twice, the later row wins.
#[derive(Debug, Clone, Default)]
pub struct GeoTable {
    entries: Vec<(IpNet, String)>,
    v4: Vec<(u8, HashMap<u32, usize>)>,
    v6: Vec<(u8, HashMap<u128, usize>)>,
}

fn mask_v4(addr: u32, len: u8) -> u32 {
    if len == 0 { 0 } else { addr & (u32::MAX << (32 - len)) }
}

fn mask_v6(addr: u128, len: u8) -> u128 {
    if len == 0 { 0 } else { addr & (u128::MAX << (128 - len)) }
}

fn valid_country(code: &str) -> bool {
    code.len() == 2 && code.bytes().all(|b| b.is_ascii_uppercase())
}

impl GeoTable {
    pub fn new(entries: Vec<(IpNet, String)>) -> Result<Self, AnalyticsError> {
        let mut v4: HashMap<u8, HashMap<u32, usize>> = HashMap::new();
        let mut v6: HashMap<u8, HashMap<u128, usize>> = HashMap::new();
        let mut normalized = Vec::with_capacity(entries.len());
        for (i, (net, country)) in entries.into_iter().enumerate() {
            if !valid_country(&country) {
                return Err(AnalyticsError::BadGeoRow { line: i + 1, reason: format!("country {country:?}") });
            }
            let net = net.trunc();
            match net {
                IpNet::V4(n) => {
                    v4.entry(n.prefix_len()).or_default().insert(u32::from(n.network()), i);
                }
                IpNet::V6(n) => {
                    v6.entry(n.prefix_len()).or_default().insert(u128::from(n.network()), i);
                }
            }
            normalized.push((net, country));
        }
        let mut v4: Vec<_> = v4.into_iter().collect();
        let mut v6: Vec<_> = v6.into_iter().collect();
        v4.sort_by_key(|e| std::cmp::Reverse(e.0));
        v6.sort_by_key(|e| std::cmp::Reverse(e.0));
        Ok(GeoTable { entries: normalized, v4, v6 })
    }

    /// Reads `cidr,country` rows; a header row is expected.
    pub fn from_csv(reader: impl Read) -> Result<Self, AnalyticsError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let (Some(cidr), Some(country)) = (row.get(0), row.get(1)) else {
                return Err(AnalyticsError::BadGeoRow { line, reason: "expected cidr,country".into() });
            };
            let net: IpNet = cidr
                .parse()
                .map_err(|e| AnalyticsError::BadGeoRow { line, reason: format!("{cidr:?}: {e}") })?;
            entries.push((net, country.to_ascii_uppercase()));
        }
        GeoTable::new(entries)
    }

    pub fn entries(&self) -> &[(IpNet, String)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, ip: IpAddr) -> Option<&str> {
        let idx = match ip.to_canonical() {
            IpAddr::V4(a) => {
                let a = u32::from(a);
                self.v4.iter().find_map(|(len, m)| m.get(&mask_v4(a, *len)))
            }
            IpAddr::V6(a) => {
                let a = u128::from(a);
                self.v6.iter().find_map(|(len, m)| m.get(&mask_v6(a, *len)))
            }
        }?;
        Some(&self.entries[*idx].1)
    }
}

/// Country of the longest matching prefix, or `"unknown"`.
pub fn geolocate(ip: IpAddr, table: &GeoTable) -> String {
    table.lookup(ip).unwrap_or(UNKNOWN_COUNTRY).to_string()
}

pub fn geolocate_batch(ips: &[IpAddr], table: &GeoTable, exec: Exec) -> Vec<String> {
    exec.map(ips, |ip| geolocate(*ip, table))
}
