//! Timestamps are kept at millisecond precision everywhere they are
//! persisted, so that parse-then-serialize is byte-identical.

use chrono::{DateTime, SecondsFormat, SubsecRound, Utc};

pub type Timestamp = DateTime<Utc>;

/// Truncates to whole milliseconds.
pub fn millis(t: Timestamp) -> Timestamp {
    t.trunc_subsecs(3)
}

pub fn now() -> Timestamp {
    millis(Utc::now())
}

/// `2016-01-23T09:00:00.000Z`
pub fn format(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn parse(s: &str) -> Result<Timestamp, chrono::ParseError> {
    DateTime::parse_from_rfc3339(s).map(|t| millis(t.with_timezone(&Utc)))
}

/// Serde adapter for the canonical millisecond form.
pub mod serde_millis {
    use super::Timestamp;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse(&raw).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::Timestamp;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(t: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
            match t {
                Some(t) => s.serialize_some(&super::super::format(t)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Timestamp>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|raw| super::super::parse(&raw).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_is_stable() {
        let t = parse("2016-01-23T09:00:00.123456Z").unwrap();
        assert_eq!(format(&t), "2016-01-23T09:00:00.123Z");
        assert_eq!(parse(&format(&t)).unwrap(), t);
        let t = parse("2016-01-23T10:00:00+01:00").unwrap();
        assert_eq!(format(&t), "2016-01-23T09:00:00.000Z");
    }
}
