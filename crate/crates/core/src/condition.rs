//! Weather / time-of-day condition grid.
//!
//! Every scene belongs to exactly one of eight cells: four weather types
//! crossed with day and night. Tags serialize as `"<weather>/<tod>"`,
//! e.g. `"fog/night"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weather {
    Clear,
    Fog,
    Rain,
    Snow,
}

impl Weather {
    pub const ALL: [Weather; 4] = [Weather::Clear, Weather::Fog, Weather::Rain, Weather::Snow];

    pub fn as_str(self) -> &'static str {
        match self {
            Weather::Clear => "clear",
            Weather::Fog => "fog",
            Weather::Rain => "rain",
            Weather::Snow => "snow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeOfDay {
    Day,
    Night,
}

impl TimeOfDay {
    pub const ALL: [TimeOfDay; 2] = [TimeOfDay::Day, TimeOfDay::Night];

    pub fn as_str(self) -> &'static str {
        match self {
            TimeOfDay::Day => "day",
            TimeOfDay::Night => "night",
        }
    }
}

/// One cell of the 4 × 2 condition grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConditionTag {
    pub weather: Weather,
    pub tod: TimeOfDay,
}

impl ConditionTag {
    pub const fn new(weather: Weather, tod: TimeOfDay) -> Self {
        Self { weather, tod }
    }

    /// All eight conditions, day before night within each weather.
    pub fn all() -> [ConditionTag; 8] {
        let mut out = [ConditionTag::new(Weather::Clear, TimeOfDay::Day); 8];
        let mut i = 0;
        for w in Weather::ALL {
            for t in TimeOfDay::ALL {
                out[i] = ConditionTag::new(w, t);
                i += 1;
            }
        }
        out
    }

    /// Dense index in `0..8`, matching the order of [`ConditionTag::all`].
    pub fn index(self) -> usize {
        (self.weather as usize) * 2 + self.tod as usize
    }
}

impl fmt::Display for ConditionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.weather.as_str(), self.tod.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown condition `{0}` (expected `<clear|fog|rain|snow>/<day|night>`)")]
pub struct ParseConditionError(pub String);

impl FromStr for ConditionTag {
    type Err = ParseConditionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseConditionError(s.to_string());
        let (w, t) = s.trim().split_once('/').ok_or_else(err)?;
        let weather = match w.trim().to_ascii_lowercase().as_str() {
            "clear" => Weather::Clear,
            "fog" => Weather::Fog,
            "rain" => Weather::Rain,
            "snow" => Weather::Snow,
            _ => return Err(err()),
        };
        let tod = match t.trim().to_ascii_lowercase().as_str() {
            "day" => TimeOfDay::Day,
            "night" => TimeOfDay::Night,
            _ => return Err(err()),
        };
        Ok(ConditionTag { weather, tod })
    }
}

impl Serialize for ConditionTag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConditionTag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fog_night() {
        let tag: ConditionTag = "fog/night".parse().unwrap();
        assert_eq!(tag, ConditionTag::new(Weather::Fog, TimeOfDay::Night));
        assert_eq!(tag.to_string(), "fog/night");
    }

    #[test]
    fn rejects_unknown() {
        assert!("hail/day".parse::<ConditionTag>().is_err());
        assert!("fog".parse::<ConditionTag>().is_err());
        assert!("fog/dusk".parse::<ConditionTag>().is_err());
    }

    #[test]
    fn index_matches_all_order() {
        for (i, c) in ConditionTag::all().iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }
}
