use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Keying, PsychometricsError};
use crate::persona::OceanFactor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpiItem {
    pub id: String,
    pub statement: String,
    pub factor: OceanFactor,
    pub keying: Keying,
}

/// Ordered inventory. Every factor is present with the same item count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpiItemBank {
    items: Vec<MpiItem>,
}

const BUILTIN: &str = include_str!("../../data/item_bank.jsonl");
const FIXTURE: &str = include_str!("../../data/item_bank_fixture.jsonl");

impl MpiItemBank {
    pub fn new(items: Vec<MpiItem>) -> Result<Self, PsychometricsError> {
        let bank = Self { items };
        bank.validate()?;
        Ok(bank)
    }

    /// 120 items, 24 per factor.
    pub fn builtin() -> Self {
        Self::from_jsonl_str(BUILTIN).expect("bundled item bank is valid")
    }

    /// Ten items: one positively and one negatively keyed per factor.
    pub fn fixture() -> Self {
        Self::from_jsonl_str(FIXTURE).expect("bundled fixture bank is valid")
    }

    pub fn from_jsonl_str(s: &str) -> Result<Self, PsychometricsError> {
        let mut items = Vec::new();
        for (i, line) in s.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let item: MpiItem = serde_json::from_str(line)
                .map_err(|e| PsychometricsError::InvalidBank(format!("line {}: {e}", i + 1)))?;
            items.push(item);
        }
        Self::new(items)
    }

    pub fn load_jsonl(path: &Path) -> Result<Self, PsychometricsError> {
        Self::from_jsonl_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&serde_json::to_string(item).expect("item serialises"));
            out.push('\n');
        }
        out
    }

    pub fn validate(&self) -> Result<(), PsychometricsError> {
        let bad = |m: String| Err(PsychometricsError::InvalidBank(m));
        let mut ids = HashSet::new();
        let mut counts = [0usize; 5];
        for item in &self.items {
            if item.id.trim().is_empty() {
                return bad("empty item id".into());
            }
            if item.statement.trim().is_empty() {
                return bad(format!("item `{}` has an empty statement", item.id));
            }
            if !ids.insert(item.id.as_str()) {
                return bad(format!("duplicate item id `{}`", item.id));
            }
            counts[item.factor.index()] += 1;
        }
        for f in OceanFactor::ALL {
            if counts[f.index()] == 0 {
                return bad(format!("no items for factor {f}"));
            }
        }
        if counts.iter().any(|&c| c != counts[0]) {
            return bad(format!("uneven items per factor: {counts:?}"));
        }
        Ok(())
    }

    pub fn items(&self) -> &[MpiItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&MpiItem> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn per_factor(&self) -> usize {
        self.items.len() / 5
    }

    pub fn shuffled<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut items = self.items.clone();
        items.shuffle(rng);
        Self { items }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_shape() {
        let bank = MpiItemBank::builtin();
        assert_eq!(bank.len(), 120);
        assert_eq!(bank.per_factor(), 24);
        let help = bank.items().iter().find(|i| i.statement == "Love to help others").unwrap();
        assert_eq!(help.factor, OceanFactor::Agreeableness);
        assert_eq!(MpiItemBank::fixture().len(), 10);
    }

    #[test]
    fn jsonl_round_trip() {
        let bank = MpiItemBank::builtin();
        assert_eq!(MpiItemBank::from_jsonl_str(&bank.to_jsonl()).unwrap(), bank);
    }

    #[test]
    fn rejects_bad_banks() {
        let fx = MpiItemBank::fixture();
        let mut dup = fx.items().to_vec();
        dup[1].id = dup[0].id.clone();
        assert!(MpiItemBank::new(dup).is_err());
        let uneven = fx.items()[..9].to_vec();
        assert!(MpiItemBank::new(uneven).is_err());
        let missing: Vec<_> = fx.items().iter().filter(|i| i.factor != OceanFactor::Neuroticism).cloned().collect();
        assert!(MpiItemBank::new(missing).is_err());
        let mut empty = fx.items().to_vec();
        empty[0].statement = " ".into();
        assert!(MpiItemBank::new(empty).is_err());
        assert!(MpiItemBank::from_jsonl_str("{not json}").is_err());
    }
}
