use std::net::IpAddr;

use serde::{Deserialize, Serialize};

use super::{EditBehavior, SimError};

const MIX_TOLERANCE: f64 = 1e-9;

/// Probabilities over what one visit does. Must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ActionMix {
    pub open_only: f64,
    pub expand_columns: f64,
    pub delete_content: f64,
    pub deface: f64,
    pub click_links: f64,
}

impl ActionMix {
    fn parts(&self) -> [f64; 5] {
        [self.open_only, self.expand_columns, self.delete_content, self.deface, self.click_links]
    }

    /// Probability that a visit edits the sheet.
    pub fn edit_mass(&self) -> f64 {
        self.expand_columns + self.delete_content + self.deface
    }

    pub(crate) fn edit_weights(&self) -> [(EditBehavior, f64); 3] {
        [
            (EditBehavior::ExpandColumns, self.expand_columns),
            (EditBehavior::DeleteContent, self.delete_content),
            (EditBehavior::Deface, self.deface),
        ]
    }
}

/// Inclusive uniform range for the number of clicks in a clicking visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClicksPerVisit {
    pub min: u32,
    pub max: u32,
}

impl Default for ClicksPerVisit {
    fn default() -> Self {
        ClicksPerVisit { min: 1, max: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitorProfile {
    pub name: String,
    pub action_mix: ActionMix,
    #[serde(default)]
    pub clicks_per_visit: ClicksPerVisit,
    /// Empty means addresses are drawn from the geolocation table.
    #[serde(default)]
    pub source_ip_pool: Vec<IpAddr>,
    /// Empty means [`DEFAULT_USER_AGENTS`].
    #[serde(default)]
    pub user_agent_pool: Vec<String>,
}

impl VisitorProfile {
    pub fn new(name: impl Into<String>, action_mix: ActionMix) -> Self {
        VisitorProfile {
            name: name.into(),
            action_mix,
            clicks_per_visit: ClicksPerVisit::default(),
            source_ip_pool: Vec::new(),
            user_agent_pool: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |reason: String| SimError::BadProfile { name: self.name.clone(), reason };
        if self.name.is_empty() {
            return Err(bad("empty name".into()));
        }
        let parts = self.action_mix.parts();
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(bad("probabilities must be finite and non-negative".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > MIX_TOLERANCE {
            return Err(bad(format!("action mix sums to {sum}")));
        }
        let c = self.clicks_per_visit;
        if c.min == 0 || c.min > c.max {
            return Err(bad(format!("clicks per visit {}..={} is empty or zero", c.min, c.max)));
        }
        if self.user_agent_pool.iter().any(|ua| ua.contains(['\r', '\n'])) {
            return Err(bad("user agents may not contain line breaks".into()));
        }
        Ok(())
    }
}

pub const DEFAULT_USER_AGENTS: &[&str] = &[
    "Mozilla/5.0 (Windows NT 6.1; WOW64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/48.0.2564.103 Safari/537.36",
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64; rv:44.0) Gecko/20100101 Firefox/44.0",
    "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/48.0.2564.97 Safari/537.36",
    "Mozilla/5.0 (X11; Ubuntu; Linux x86_64; rv:43.0) Gecko/20100101 Firefox/43.0",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 10_11_3) AppleWebKit/601.4.4 (KHTML, like Gecko) Version/9.0.3 Safari/601.4.4",
    "Mozilla/5.0 (Linux; Android 5.0.2; SAMSUNG SM-G920F Build/LRX22G) AppleWebKit/537.36 (KHTML, like Gecko) SamsungBrowser/3.2 Chrome/38.0.2125.102 Mobile Safari/537.36",
    "Mozilla/5.0 (Linux; Android 6.0; Nexus 5 Build/MRA58N) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/48.0.2564.95 Mobile Safari/537.36",
    "curl/7.47.0",
];

/// The bundled typologies: `curious`, `lurker`, `deleter`, `vandal`, `prober`.
pub fn default_profiles() -> Vec<VisitorProfile> {
    let mix = |open_only, expand_columns, delete_content, deface, click_links| ActionMix {
        open_only,
        expand_columns,
        delete_content,
        deface,
        click_links,
    };
    let mut prober = VisitorProfile::new("prober", mix(0.0, 0.0, 0.0, 0.0, 1.0));
    prober.clicks_per_visit = ClicksPerVisit { min: 1, max: 4 };
    vec![
        VisitorProfile::new("curious", mix(0.85, 0.0, 0.0, 0.0, 0.15)),
        VisitorProfile::new("lurker", mix(0.0, 1.0, 0.0, 0.0, 0.0)),
        VisitorProfile::new("deleter", mix(0.0, 0.0, 1.0, 0.0, 0.0)),
        VisitorProfile::new("vandal", mix(0.0, 0.0, 0.0, 1.0, 0.0)),
        prober,
    ]
}
