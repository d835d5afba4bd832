use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Browser {
    Chrome,
    Firefox,
    Safari,
    Samsung,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Os {
    Windows,
    Linux,
    Macintosh,
    Android,
    Other,
}

impl fmt::Display for Browser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Os {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

// Checked in order; the first marker found wins. Chrome-family UAs also
// carry "Safari", and Samsung Internet carries both.
const BROWSER_MARKERS: [(&str, Browser); 4] = [
    ("SamsungBrowser", Browser::Samsung),
    ("Chrome", Browser::Chrome),
    ("Safari", Browser::Safari),
    ("Firefox", Browser::Firefox),
];

// Android UAs also say "Linux".
const OS_MARKERS: [(&str, Os); 4] = [
    ("Android", Os::Android),
    ("Windows", Os::Windows),
    ("Macintosh", Os::Macintosh),
    ("Linux", Os::Linux),
];

/// Classifies a `User-Agent` value into coarse browser and OS families by
/// case-sensitive substring markers.
pub fn parse_user_agent(header_value: &str) -> (Browser, Os) {
    let browser = BROWSER_MARKERS
        .iter()
        .find(|(m, _)| header_value.contains(m))
        .map_or(Browser::Other, |&(_, b)| b);
    let os = OS_MARKERS
        .iter()
        .find(|(m, _)| header_value.contains(m))
        .map_or(Os::Other, |&(_, o)| o);
    (browser, os)
}
