//! Vowel-group sample construction: per-subject vowel categories, group
//! formation by zip or random draw, and balancing across severity bands.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::model::{severity_band, FdaTarget, SeverityBand, SyllableObservation, VowelClass, VowelGroup};
use crate::rng::{derive_seed, label_of, seeded};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupMode {
    /// One group per position after shuffling each category, truncated to
    /// the shortest category.
    #[default]
    Zip,
    /// `n` groups, each member drawn uniformly with replacement.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub mode: GroupMode,
    /// Groups per subject in random mode.
    pub n_per_subject: usize,
    /// Shuffle categories before zipping.
    pub shuffle: bool,
    pub balance: bool,
    pub balance_factor: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            mode: GroupMode::Zip,
            n_per_subject: 64,
            shuffle: true,
            balance: false,
            balance_factor: 1.0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == GroupMode::Random && self.n_per_subject == 0 {
            return Err(Error::Config("augment.n_per_subject must be positive in random mode".into()));
        }
        if !(self.balance_factor > 0.0 && self.balance_factor.is_finite()) {
            return Err(Error::Config("augment.balance_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Observations of one subject sorted into the six vowel categories. An
/// observation sits in every category whose vowel its syllable contains.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VowelCategories {
    pub subject_id: String,
    pub categories: [Vec<SyllableObservation>; VowelClass::COUNT],
    /// Observations without any cardinal vowel.
    pub skipped: usize,
}

impl VowelCategories {
    pub fn get(&self, v: VowelClass) -> &[SyllableObservation] {
        &self.categories[v.index()]
    }

    pub fn sizes(&self) -> [usize; VowelClass::COUNT] {
        core::array::from_fn(|k| self.categories[k].len())
    }

    pub fn missing(&self) -> Vec<VowelClass> {
        VowelClass::ALL
            .into_iter()
            .filter(|v| self.categories[v.index()].is_empty())
            .collect()
    }
}

/// Categorizes one subject's observations. Each category is ordered by
/// observation id, so the result does not depend on input order.
pub fn categorize(observations: &[SyllableObservation]) -> VowelCategories {
    let mut c = VowelCategories {
        subject_id: observations.first().map(|o| o.subject_id.clone()).unwrap_or_default(),
        ..VowelCategories::default()
    };
    for o in observations {
        if o.vowel_classes.is_empty() {
            c.skipped += 1;
            continue;
        }
        for v in o.vowel_classes.iter() {
            c.categories[v.index()].push(o.clone());
        }
    }
    for cat in c.categories.iter_mut() {
        cat.sort_by(|a, b| a.obs_id.cmp(&b.obs_id));
    }
    c
}

/// Groups observations by subject and categorizes each subject.
pub fn categorize_by_subject(observations: &[SyllableObservation]) -> BTreeMap<String, VowelCategories> {
    let mut by: BTreeMap<String, Vec<SyllableObservation>> = BTreeMap::new();
    for o in observations {
        by.entry(o.subject_id.clone()).or_default().push(o.clone());
    }
    by.into_iter().map(|(s, obs)| (s, categorize(&obs))).collect()
}

/// Builds vowel groups from one subject's categories. `n` is used only in
/// random mode.
pub fn build_groups(
    c: &VowelCategories,
    target: FdaTarget,
    mode: GroupMode,
    n: usize,
    shuffle: bool,
    seed: u64,
) -> Result<Vec<VowelGroup>> {
    let missing = c.missing();
    if !missing.is_empty() {
        let names: Vec<String> = missing.iter().map(|v| format!("{v}")).collect();
        return Err(Error::EmptyCategory(format!(
            "subject {}: {}",
            c.subject_id,
            names.join(", ")
        )));
    }
    let mut rng = seeded(derive_seed(seed, label_of(&c.subject_id)));
    let make = |idx: [usize; VowelClass::COUNT], cats: &[Vec<&SyllableObservation>; VowelClass::COUNT]| {
        let members = core::array::from_fn(|k| cats[k][idx[k]].clone());
        VowelGroup::new(c.subject_id.clone(), members, target)
    };
    let mut cats: [Vec<&SyllableObservation>; VowelClass::COUNT] =
        core::array::from_fn(|k| c.categories[k].iter().collect());
    match mode {
        GroupMode::Zip => {
            if shuffle {
                for cat in cats.iter_mut() {
                    cat.shuffle(&mut rng);
                }
            }
            let m = cats.iter().map(Vec::len).min().unwrap_or(0);
            (0..m).map(|i| make([i; VowelClass::COUNT], &cats)).collect()
        }
        GroupMode::Random => (0..n)
            .map(|_| {
                let idx = core::array::from_fn(|k| rng.random_range(0..cats[k].len()));
                make(idx, &cats)
            })
            .collect(),
    }
}

/// Indices selecting `round(min_count · factor)` items from every band:
/// without replacement when the band has enough, otherwise all of them
/// plus draws with replacement. Output is ordered by band. Every band in
/// `SeverityBand::ALL` must be present.
pub fn balance_indices(bands: &[SeverityBand], factor: f64, seed: u64) -> Result<Vec<usize>> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Config("balance factor must be positive".into()));
    }
    let mut by: BTreeMap<SeverityBand, Vec<usize>> = BTreeMap::new();
    for (i, b) in bands.iter().enumerate() {
        by.entry(*b).or_default().push(i);
    }
    for b in SeverityBand::ALL {
        if !by.contains_key(&b) {
            return Err(Error::EmptyBand(b.name().into()));
        }
    }
    let min = by.values().map(Vec::len).min().unwrap_or(0);
    let want = libm::round(min as f64 * factor).max(1.0) as usize;
    let mut rng = seeded(derive_seed(seed, label_of("balance")));
    let mut out = Vec::with_capacity(want * by.len());
    for members in by.values_mut() {
        members.shuffle(&mut rng);
        if members.len() >= want {
            out.extend_from_slice(&members[..want]);
        } else {
            out.extend_from_slice(members);
            for _ in members.len()..want {
                out.push(members[rng.random_range(0..members.len())]);
            }
        }
    }
    Ok(out)
}

/// Equalizes group counts across the four severity bands of the subjects'
/// total scores (see [`balance_indices`]).
pub fn balance_by_severity(
    groups: &[VowelGroup],
    total_scores: &BTreeMap<String, f64>,
    factor: f64,
    seed: u64,
) -> Result<Vec<VowelGroup>> {
    let bands = groups
        .iter()
        .map(|g| {
            let total = total_scores
                .get(g.subject_id())
                .ok_or_else(|| Error::Data(format!("subject {} has no total score", g.subject_id())))?;
            severity_band(*total)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(balance_indices(&bands, factor, seed)?
        .into_iter()
        .map(|i| groups[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TargetKind;
    use proptest::prelude::*;

    fn obs(id: &str, subject: &str, text: &str) -> SyllableObservation {
        SyllableObservation::new(id, subject, "R", 0.0, 1.0, text).unwrap()
    }

    fn target(v: f64) -> FdaTarget {
        FdaTarget::new(TargetKind::Total, v).unwrap()
    }

    fn subject_with_sizes(subject: &str, sizes: [usize; 6]) -> Vec<SyllableObservation> {
        let texts = ["ba", "bo", "de", "bi", "bu", "lv"];
        let mut out = Vec::new();
        for (k, &n) in sizes.iter().enumerate() {
            for j in 0..n {
                out.push(obs(&format!("{subject}-{k}-{j}"), subject, texts[k]));
            }
        }
        out
    }

    #[test]
    fn categorize_examples() {
        let c = categorize(&[obs("1", "S", "ma"), obs("2", "S", "miao"), obs("3", "S", "ju"), obs("4", "S", "m")]);
        assert_eq!(c.sizes(), [2, 1, 0, 1, 0, 1]);
        assert_eq!(c.skipped, 1);
        assert!(c.get(VowelClass::U).is_empty());
        assert_eq!(c.get(VowelClass::V)[0].obs_id, "3");
    }

    #[test]
    fn zip_truncates_to_shortest() {
        let c = categorize(&subject_with_sizes("S", [3, 5, 4, 6, 3, 2]));
        let g = build_groups(&c, target(90.0), GroupMode::Zip, 0, true, 7).unwrap();
        assert_eq!(g.len(), 2);
        for k in 0..6 {
            let ids: Vec<_> = g.iter().map(|x| x.members()[k].obs_id.clone()).collect();
            assert_ne!(ids[0], ids[1], "zip must not reuse an observation in one slot");
        }
    }

    #[test]
    fn random_mode_deterministic() {
        let c = categorize(&subject_with_sizes("S", [3, 5, 4, 6, 3, 2]));
        let a = build_groups(&c, target(90.0), GroupMode::Random, 100, true, 11).unwrap();
        let b = build_groups(&c, target(90.0), GroupMode::Random, 100, true, 11).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        for g in &a {
            assert!(g.members().iter().all(|m| m.subject_id == "S"));
        }
    }

    #[test]
    fn empty_category_named() {
        let c = categorize(&subject_with_sizes("S", [1, 1, 0, 1, 1, 0]));
        match build_groups(&c, target(90.0), GroupMode::Zip, 0, true, 1) {
            Err(Error::EmptyCategory(m)) => assert!(m.contains('e') && m.contains('ü')),
            other => panic!("{other:?}"),
        }
    }

    fn groups_for(subject: &str, n: usize, total: f64) -> Vec<VowelGroup> {
        let c = categorize(&subject_with_sizes(subject, [1; 6]));
        build_groups(&c, target(total), GroupMode::Random, n, false, 3).unwrap()
    }

    #[test]
    fn balance_to_minimum() {
        let mut groups = Vec::new();
        let mut scores = BTreeMap::new();
        for (s, n, t) in [("N", 100, 116.0), ("M", 80, 100.0), ("D", 60, 70.0), ("X", 40, 40.0)] {
            groups.extend(groups_for(s, n, t));
            scores.insert(String::from(s), t);
        }
        let out = balance_by_severity(&groups, &scores, 1.0, 5).unwrap();
        let mut counts = BTreeMap::new();
        for g in &out {
            *counts.entry(g.subject_id().to_owned()).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c == 40));
        assert_eq!(out, balance_by_severity(&groups, &scores, 1.0, 5).unwrap());
        let doubled = balance_by_severity(&groups, &scores, 2.0, 5).unwrap();
        assert_eq!(doubled.len(), 320);

        scores.insert("X".into(), 100.0);
        assert!(matches!(balance_by_severity(&groups, &scores, 1.0, 5), Err(Error::EmptyBand(b)) if b == "Severe"));
    }

    #[test]
    fn balanced_input_is_permutation() {
        let mut groups = Vec::new();
        let mut scores = BTreeMap::new();
        for (s, t) in [("N", 116.0), ("M", 100.0), ("D", 70.0), ("X", 40.0)] {
            groups.extend(groups_for(s, 10, t));
            scores.insert(String::from(s), t);
        }
        let out = balance_by_severity(&groups, &scores, 1.0, 9).unwrap();
        assert_eq!(out.len(), groups.len());
        for g in &groups {
            let count = |xs: &[VowelGroup]| xs.iter().filter(|x| *x == g).count();
            assert_eq!(count(&out), count(&groups));
        }
    }

    proptest! {
        #[test]
        fn categorize_order_independent(perm_seed in any::<u64>()) {
            let mut xs = alloc::vec![
                obs("1", "S", "ma"), obs("2", "S", "miao"), obs("3", "S", "ju"),
                obs("4", "S", "lüe"), obs("5", "S", "gou"), obs("6", "S", "xie"),
            ];
            let base = categorize(&xs);
            xs.shuffle(&mut seeded(perm_seed));
            prop_assert_eq!(categorize(&xs), base.clone());
            // idempotent: re-categorizing every category's members changes nothing
            let all: Vec<_> = base.categories.iter().flatten().cloned().collect();
            let mut dedup = all.clone();
            dedup.sort_by(|a, b| a.obs_id.cmp(&b.obs_id));
            dedup.dedup();
            prop_assert_eq!(categorize(&dedup).categories, base.categories);
        }
    }
}
