//! Pairwise compatibility of reconstruction conditions: per-(feature, case)
//! t-tests, compatibility ratios, the full condition map and its marginals.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureGroup, FeatureSample, FEATURE_COUNT, FEATURE_NAMES};
use crate::model::{sort_canonical, Kernel, ReconCondition};
use crate::volumetry::{t_statistic, thickness_label, LabeledMatrix, StatisticsConfig};

/// Outcome of one (feature, case) comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairOutcome {
    Compatible,
    Incompatible,
    Excluded(String),
}

/// Two-sample test of feature `f` between two samples of the same case.
pub fn pair_compatibility(
    a: &FeatureSample,
    b: &FeatureSample,
    f: usize,
    stats: &StatisticsConfig,
) -> Result<PairOutcome> {
    if a.case_id != b.case_id {
        return Err(Error::invalid(
            "sample pair",
            format!("cases differ: {} vs {}", a.case_id, b.case_id),
        ));
    }
    if f >= FEATURE_COUNT {
        return Err(Error::Domain(format!("feature index {f} out of range")));
    }
    for s in [a, b] {
        if !s.usable || s.n() < 2 {
            let why = s.reason.clone().unwrap_or_else(|| "fewer than 2 slices".into());
            return Ok(PairOutcome::Excluded(format!("{} {}: {why}", s.case_id, s.condition.label())));
        }
    }
    let t = t_statistic(a.mean[f], a.sd[f], a.n(), b.mean[f], b.sd[f], b.n())?;
    Ok(if stats.is_compatible(t) {
        PairOutcome::Compatible
    } else {
        PairOutcome::Incompatible
    })
}

/// Sufficient statistics of a usable sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: [f64; FEATURE_COUNT],
    pub sd: [f64; FEATURE_COUNT],
    pub n: usize,
}

impl SampleStats {
    pub fn of(s: &FeatureSample) -> Option<Self> {
        (s.usable && s.n() >= 2).then(|| SampleStats {
            mean: s.mean.0,
            sd: s.sd.0,
            n: s.n(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct ConditionKey(u64, u8, u64);

impl From<&ReconCondition> for ConditionKey {
    fn from(c: &ReconCondition) -> Self {
        ConditionKey(c.thickness_mm.to_bits(), c.kernel.index() as u8, c.dose_fraction.to_bits())
    }
}

/// Per-(condition, case) sample statistics in canonical condition order.
#[derive(Debug, Clone)]
pub struct SampleTable {
    conditions: Vec<ReconCondition>,
    case_ids: Vec<String>,
    /// `[condition][case]`; `None` marks a missing or unusable sample.
    stats: Vec<Vec<Option<SampleStats>>>,
    index: HashMap<ConditionKey, usize>,
}

impl SampleTable {
    /// Every (case, condition) combination must be present exactly once.
    pub fn from_samples<'a>(
        conditions: &[ReconCondition],
        case_ids: &[String],
        samples: impl IntoIterator<Item = &'a FeatureSample>,
    ) -> Result<Self> {
        if case_ids.is_empty() {
            return Err(Error::Domain("cohort is empty".into()));
        }
        let mut conditions = conditions.to_vec();
        sort_canonical(&mut conditions);
        let index: HashMap<ConditionKey, usize> = conditions
            .iter()
            .enumerate()
            .map(|(i, c)| (ConditionKey::from(c), i))
            .collect();
        if index.len() != conditions.len() {
            return Err(Error::invalid("conditions", "duplicate condition"));
        }
        let case_pos: HashMap<&str, usize> = case_ids
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut seen = vec![vec![false; case_ids.len()]; conditions.len()];
        let mut stats = vec![vec![None; case_ids.len()]; conditions.len()];
        for s in samples {
            let ci = *index.get(&ConditionKey::from(&s.condition)).ok_or_else(|| {
                Error::invalid("sample", format!("condition {} not in grid", s.condition.label()))
            })?;
            let pi = *case_pos
                .get(s.case_id.as_str())
                .ok_or_else(|| Error::invalid("sample", format!("unknown case {}", s.case_id)))?;
            if seen[ci][pi] {
                return Err(Error::invalid(
                    "sample",
                    format!("duplicate sample {} {}", s.case_id, s.condition.label()),
                ));
            }
            seen[ci][pi] = true;
            stats[ci][pi] = SampleStats::of(s);
        }
        let missing: Vec<String> = seen
            .iter()
            .enumerate()
            .flat_map(|(ci, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &s)| !s)
                    .map(move |(pi, _)| (ci, pi))
            })
            .map(|(ci, pi)| format!("{} {}", case_ids[pi], conditions[ci].label()))
            .collect();
        if !missing.is_empty() {
            return Err(Error::invalid(
                "sample set",
                format!("{} missing samples, e.g. {}", missing.len(), missing[0]),
            ));
        }
        Ok(SampleTable {
            conditions,
            case_ids: case_ids.to_vec(),
            stats,
            index,
        })
    }

    pub fn conditions(&self) -> &[ReconCondition] {
        &self.conditions
    }

    pub fn case_ids(&self) -> &[String] {
        &self.case_ids
    }

    pub fn position(&self, c: &ReconCondition) -> Option<usize> {
        self.index.get(&ConditionKey::from(c)).copied()
    }

    fn compare(&self, a: usize, b: usize, case: usize, f: usize, stats: &StatisticsConfig) -> Option<bool> {
        let (sa, sb) = (self.stats[a][case].as_ref()?, self.stats[b][case].as_ref()?);
        let t = t_statistic(sa.mean[f], sa.sd[f], sa.n, sb.mean[f], sb.sd[f], sb.n)
            .expect("usable samples have n >= 2 and sd >= 0");
        Some(stats.is_compatible(t))
    }
}

/// Counts behind one compatibility ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellCounts {
    pub compatible: u32,
    pub total: u32,
    pub excluded: u32,
}

impl CellCounts {
    /// Percentage of usable comparisons that were compatible.
    pub fn ratio_percent(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.compatible as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompatibilityCell {
    pub condition_a: ReconCondition,
    pub condition_b: ReconCondition,
    pub ratio_percent: Option<f64>,
    pub counts: CellCounts,
}

/// Compatibility ratio of two conditions over every (feature, case).
pub fn compatibility_ratio(
    a: &ReconCondition,
    b: &ReconCondition,
    table: &SampleTable,
    stats: &StatisticsConfig,
) -> Result<CompatibilityCell> {
    let ia = table
        .position(a)
        .ok_or_else(|| Error::invalid("condition", format!("{} not in table", a.label())))?;
    let ib = table
        .position(b)
        .ok_or_else(|| Error::invalid("condition", format!("{} not in table", b.label())))?;
    let counts = cell_counts(table, ia, ib, stats);
    Ok(CompatibilityCell {
        condition_a: *a,
        condition_b: *b,
        ratio_percent: counts.ratio_percent(),
        counts,
    })
}

fn cell_counts(table: &SampleTable, a: usize, b: usize, stats: &StatisticsConfig) -> CellCounts {
    let mut c = CellCounts::default();
    for case in 0..table.case_ids.len() {
        for f in 0..FEATURE_COUNT {
            match table.compare(a, b, case, f, stats) {
                Some(true) => {
                    c.compatible += 1;
                    c.total += 1;
                }
                Some(false) => c.total += 1,
                None => c.excluded += 1,
            }
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Ordering {
    #[default]
    Canonical,
    ByTotalCompatibility,
}

/// Symmetric matrix of cell counts over ordered conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompatibilityMap {
    pub ordered_conditions: Vec<ReconCondition>,
    pub ordering: Ordering,
    /// Row-major `n x n`.
    pub cells: Vec<CellCounts>,
}

impl CompatibilityMap {
    pub fn len(&self) -> usize {
        self.ordered_conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_conditions.is_empty()
    }

    pub fn cell(&self, i: usize, j: usize) -> CellCounts {
        self.cells[i * self.len() + j]
    }

    pub fn ratio(&self, i: usize, j: usize) -> Option<f64> {
        self.cell(i, j).ratio_percent()
    }

    pub fn labels(&self) -> Vec<String> {
        self.ordered_conditions.iter().map(|c| c.label()).collect()
    }

    /// Comparisons performed over all ordered condition pairs, usable or not.
    pub fn comparison_count(&self) -> u64 {
        self.cells
            .iter()
            .map(|c| c.total as u64 + c.excluded as u64)
            .sum()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| self.cell(i, j) == self.cell(j, i)))
    }

    pub fn position(&self, c: &ReconCondition) -> Option<usize> {
        let key = ConditionKey::from(c);
        self.ordered_conditions
            .iter()
            .position(|o| ConditionKey::from(o) == key)
    }

    /// Same cells under a different ordering.
    pub fn reordered(&self, ordering: Ordering) -> CompatibilityMap {
        let n = self.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|&a, &b| self.ordered_conditions[a].canonical_cmp(&self.ordered_conditions[b]));
        if ordering == Ordering::ByTotalCompatibility {
            let sums: Vec<f64> = (0..n)
                .map(|i| (0..n).filter_map(|j| self.ratio(i, j)).sum())
                .collect();
            // stable sort keeps canonical order among ties
            perm.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]));
        }
        let mut cells = Vec::with_capacity(n * n);
        for &i in &perm {
            for &j in &perm {
                cells.push(self.cell(i, j));
            }
        }
        CompatibilityMap {
            ordered_conditions: perm.iter().map(|&i| self.ordered_conditions[i]).collect(),
            ordering,
            cells,
        }
    }

    pub fn ratio_matrix(&self) -> LabeledMatrix {
        let n = self.len();
        LabeledMatrix {
            labels: self.labels(),
            values: (0..n).map(|i| (0..n).map(|j| self.ratio(i, j)).collect()).collect(),
        }
    }
}

/// Compute every cell; the upper triangle runs in parallel.
pub fn build_map(table: &SampleTable, stats: &StatisticsConfig, ordering: Ordering) -> CompatibilityMap {
    let n = table.conditions.len();
    let rows: Vec<Vec<CellCounts>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| cell_counts(table, i, j, stats)).collect())
        .collect();
    let mut cells = vec![CellCounts::default(); n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (k, c) in row.into_iter().enumerate() {
            let j = i + k;
            cells[i * n + j] = c;
            cells[j * n + i] = c;
        }
    }
    let map = CompatibilityMap {
        ordered_conditions: table.conditions.clone(),
        ordering: Ordering::Canonical,
        cells,
    };
    match ordering {
        Ordering::Canonical => map,
        other => map.reordered(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Kernel,
    Thickness,
    Dose,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Dose, Axis::Kernel, Axis::Thickness];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Kernel => "kernel",
            Axis::Thickness => "thickness",
            Axis::Dose => "dose",
        }
    }

    /// Position of `c` along this axis and the key of the other two axes.
    fn split(self, c: &ReconCondition) -> (u64, (u64, u64)) {
        let t = c.thickness_mm.to_bits();
        let k = c.kernel.index() as u64;
        let d = c.dose_fraction.to_bits();
        match self {
            Axis::Kernel => (k, (t, d)),
            Axis::Thickness => (t, (k, d)),
            Axis::Dose => (d, (t, k)),
        }
    }

    /// Distinct axis values present in `conditions`, in canonical order, with labels.
    pub fn values(self, conditions: &[ReconCondition]) -> Vec<(u64, String)> {
        let mut out: Vec<(ReconCondition, u64, String)> = Vec::new();
        for c in conditions {
            let (v, _) = self.split(c);
            if out.iter().any(|(_, w, _)| *w == v) {
                continue;
            }
            let label = match self {
                Axis::Kernel => c.kernel.name().to_string(),
                Axis::Thickness => thickness_label(c.thickness_mm),
                Axis::Dose => format!("{}", c.dose_percent()),
            };
            out.push((*c, v, label));
        }
        out.sort_by(|a, b| match self {
            Axis::Kernel => a.0.kernel.cmp(&b.0.kernel),
            Axis::Thickness => b.0.thickness_mm.total_cmp(&a.0.thickness_mm),
            Axis::Dose => b.0.dose_fraction.total_cmp(&a.0.dose_fraction),
        });
        out.into_iter().map(|(_, v, l)| (v, l)).collect()
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel" => Ok(Axis::Kernel),
            "thickness" => Ok(Axis::Thickness),
            "dose" => Ok(Axis::Dose),
            other => Err(Error::Config(format!("unknown axis {other:?}"))),
        }
    }
}

/// Pairs of condition indices that differ only along `axis`, grouped by the
/// ordered pair of axis positions `(a, b)`.
fn fixed_context_pairs(axis: Axis, conditions: &[ReconCondition]) -> (Vec<(u64, String)>, BTreeMap<(usize, usize), Vec<(usize, usize)>>) {
    let values = axis.values(conditions);
    let pos: HashMap<u64, usize> = values.iter().enumerate().map(|(i, (v, _))| (*v, i)).collect();
    let mut groups: BTreeMap<(u64, u64), Vec<(usize, usize)>> = BTreeMap::new();
    for (ci, c) in conditions.iter().enumerate() {
        let (v, ctx) = axis.split(c);
        groups.entry(ctx).or_default().push((pos[&v], ci));
    }
    let mut pairs: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for members in groups.values() {
        for &(a, ca) in members {
            for &(b, cb) in members {
                pairs.entry((a, b)).or_default().push((ca, cb));
            }
        }
    }
    (values, pairs)
}

/// Mean ratio over condition pairs that differ only along `axis`.
pub fn marginal_matrix(axis: Axis, map: &CompatibilityMap) -> Result<LabeledMatrix> {
    if map.is_empty() {
        return Err(Error::Domain("empty compatibility map".into()));
    }
    let (values, pairs) = fixed_context_pairs(axis, &map.ordered_conditions);
    let k = values.len();
    let mut out = vec![vec![None; k]; k];
    for a in 0..k {
        for b in 0..k {
            let Some(list) = pairs.get(&(a, b)) else {
                continue;
            };
            let ratios: Vec<f64> = list.iter().filter_map(|&(i, j)| map.ratio(i, j)).collect();
            if !ratios.is_empty() {
                out[a][b] = Some(ratios.iter().sum::<f64>() / ratios.len() as f64);
            }
        }
    }
    Ok(LabeledMatrix {
        labels: values.into_iter().map(|(_, l)| l).collect(),
        values: out,
    })
}

/// Number of fixed-context condition pairs behind each off-diagonal entry.
pub fn marginal_pair_counts(axis: Axis, conditions: &[ReconCondition]) -> Vec<Vec<usize>> {
    let (values, pairs) = fixed_context_pairs(axis, conditions);
    let k = values.len();
    (0..k)
        .map(|a| (0..k).map(|b| pairs.get(&(a, b)).map_or(0, |v| v.len())).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureRobustness {
    pub feature: usize,
    pub name: String,
    pub group: FeatureGroup,
    pub percent: Option<f64>,
    pub compatible: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AxisRobustness {
    pub axis: Axis,
    /// Sorted by descending percentage.
    pub features: Vec<FeatureRobustness>,
    pub group_averages: Vec<(FeatureGroup, Option<f64>)>,
}

/// Per-feature share of compatible comparisons among condition pairs that
/// differ only along each axis.
pub fn feature_robustness_report(table: &SampleTable, stats: &StatisticsConfig) -> Vec<AxisRobustness> {
    Axis::ALL
        .iter()
        .map(|&axis| {
            let (_, pairs) = fixed_context_pairs(axis, &table.conditions);
            let mut list: Vec<(usize, usize)> = pairs
                .iter()
                .filter(|((a, b), _)| a < b)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            list.sort_unstable();
            let counts: Vec<(u64, u64)> = (0..FEATURE_COUNT)
                .into_par_iter()
                .map(|f| {
                    let mut ok = 0u64;
                    let mut total = 0u64;
                    for &(i, j) in &list {
                        for case in 0..table.case_ids.len() {
                            if let Some(c) = table.compare(i, j, case, f, stats) {
                                total += 1;
                                ok += c as u64;
                            }
                        }
                    }
                    (ok, total)
                })
                .collect();
            let mut features: Vec<FeatureRobustness> = counts
                .iter()
                .enumerate()
                .map(|(f, &(ok, total))| FeatureRobustness {
                    feature: f,
                    name: FEATURE_NAMES[f].to_string(),
                    group: FeatureGroup::of(f),
                    percent: (total > 0).then(|| 100.0 * ok as f64 / total as f64),
                    compatible: ok,
                    total,
                })
                .collect();
            let group_averages = FeatureGroup::ALL
                .iter()
                .map(|&g| {
                    let members: Vec<f64> = features
                        .iter()
                        .filter(|r| r.group == g)
                        .filter_map(|r| r.percent)
                        .collect();
                    let avg = (!members.is_empty())
                        .then(|| members.iter().sum::<f64>() / members.len() as f64);
                    (g, avg)
                })
                .collect();
            features.sort_by(|a, b| {
                b.percent
                    .unwrap_or(-1.0)
                    .total_cmp(&a.percent.unwrap_or(-1.0))
                    .then(a.feature.cmp(&b.feature))
            });
            AxisRobustness {
                axis,
                features,
                group_averages,
            }
        })
        .collect()
}

/// Kernel lookup helper for reports.
pub fn kernel_label(k: Kernel) -> &'static str {
    k.name()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn sample(case: &str, c: ReconCondition, mean: f64, sd: f64, n: usize) -> FeatureSample {
        FeatureSample {
            case_id: case.into(),
            condition: c,
            slice_indices: (0..n).collect(),
            per_slice: vec![FeatureVector([mean; FEATURE_COUNT]); n],
            mean: FeatureVector([mean; FEATURE_COUNT]),
            sd: FeatureVector([sd; FEATURE_COUNT]),
            usable: n >= 2,
            reason: (n < 2).then(|| "too few slices".into()),
        }
    }

    fn c(f: f64, k: usize, t: f64) -> ReconCondition {
        ReconCondition::new(f, Kernel::new(k).unwrap(), t)
    }

    #[test]
    fn pair_examples() {
        let stats = StatisticsConfig::default();
        let a = sample("p", c(1.0, 0, 1.0), 10.0, 0.5, 8);
        assert_eq!(pair_compatibility(&a, &a, 3, &stats).unwrap(), PairOutcome::Compatible);
        let b = sample("p", c(0.5, 0, 1.0), 11.0, 0.5, 8);
        // t = 1 / sqrt(0.0625) = 4
        assert_eq!(pair_compatibility(&a, &b, 0, &stats).unwrap(), PairOutcome::Incompatible);
        let z1 = sample("p", c(1.0, 0, 1.0), 3.0, 0.0, 4);
        let z2 = sample("p", c(0.5, 0, 1.0), 3.0, 0.0, 4);
        assert_eq!(pair_compatibility(&z1, &z2, 0, &stats).unwrap(), PairOutcome::Compatible);
        let bad = sample("p", c(0.5, 0, 1.0), 3.0, 0.0, 1);
        assert!(matches!(pair_compatibility(&z1, &bad, 0, &stats).unwrap(), PairOutcome::Excluded(_)));
        let other = sample("q", c(0.5, 0, 1.0), 3.0, 0.0, 4);
        assert!(pair_compatibility(&z1, &other, 0, &stats).is_err());
    }

    #[test]
    fn ratio_half_and_denominator() {
        let stats = StatisticsConfig::default();
        let ca = c(1.0, 0, 1.0);
        let cb = c(0.5, 0, 1.0);
        let conds = vec![ca, cb];
        let cases: Vec<String> = vec!["p0".into(), "p1".into()];
        // case p0 identical across conditions, p1 far apart
        let samples = vec![
            sample("p0", ca, 1.0, 1.0, 5),
            sample("p0", cb, 1.0, 1.0, 5),
            sample("p1", ca, 1.0, 0.1, 5),
            sample("p1", cb, 9.0, 0.1, 5),
        ];
        let table = SampleTable::from_samples(&conds, &cases, &samples).unwrap();
        let cell = compatibility_ratio(&ca, &cb, &table, &stats).unwrap();
        assert_eq!(cell.counts.total, 56);
        assert_eq!(cell.ratio_percent, Some(50.0));
        let diag = compatibility_ratio(&ca, &ca, &table, &stats).unwrap();
        assert_eq!(diag.ratio_percent, Some(100.0));
    }

    #[test]
    fn excluded_pairs_leave_denominator() {
        let stats = StatisticsConfig::default();
        let ca = c(1.0, 0, 5.0);
        let cb = c(1.0, 0, 4.0);
        let cases: Vec<String> = vec!["p0".into(), "p1".into()];
        let samples = vec![
            sample("p0", ca, 1.0, 1.0, 1),
            sample("p0", cb, 1.0, 1.0, 5),
            sample("p1", ca, 1.0, 1.0, 5),
            sample("p1", cb, 1.0, 1.0, 5),
        ];
        let table = SampleTable::from_samples(&[ca, cb], &cases, &samples).unwrap();
        let cell = compatibility_ratio(&ca, &cb, &table, &stats).unwrap();
        assert_eq!(cell.counts, CellCounts { compatible: 28, total: 28, excluded: 28 });
        // no usable comparison at all -> undefined
        let only_bad = vec![
            sample("p0", ca, 1.0, 1.0, 1),
            sample("p0", cb, 1.0, 1.0, 1),
        ];
        let t2 = SampleTable::from_samples(&[ca, cb], &cases[..1], &only_bad).unwrap();
        assert_eq!(compatibility_ratio(&ca, &cb, &t2, &stats).unwrap().ratio_percent, None);
    }

    #[test]
    fn missing_sample_is_rejected() {
        let ca = c(1.0, 0, 5.0);
        let cases: Vec<String> = vec!["p0".into(), "p1".into()];
        let samples = vec![sample("p0", ca, 1.0, 1.0, 3)];
        assert!(SampleTable::from_samples(&[ca], &cases, &samples).is_err());
    }

    #[test]
    fn ordering_by_total_is_permutation() {
        let stats = StatisticsConfig::default();
        let conds = vec![c(1.0, 0, 1.0), c(0.5, 0, 1.0), c(0.25, 0, 1.0)];
        let cases: Vec<String> = vec!["p".into()];
        let samples = vec![
            sample("p", conds[0], 0.0, 0.1, 4),
            sample("p", conds[1], 5.0, 0.1, 4),
            sample("p", conds[2], 5.0, 0.1, 4),
        ];
        let table = SampleTable::from_samples(&conds, &cases, &samples).unwrap();
        let map = build_map(&table, &stats, Ordering::Canonical);
        assert!(map.is_symmetric());
        let by_total = map.reordered(Ordering::ByTotalCompatibility);
        assert_eq!(by_total.ordered_conditions, vec![conds[1], conds[2], conds[0]]);
        assert!(by_total.is_symmetric());
    }

    #[test]
    fn marginal_pair_counts_default_grid() {
        let conds = crate::model::enumerate_conditions(&Default::default()).unwrap();
        let counts = marginal_pair_counts(Axis::Kernel, &conds);
        assert_eq!(counts.len(), 10);
        assert_eq!(counts[0][1], 32);
        assert_eq!(marginal_pair_counts(Axis::Dose, &conds)[0][3], 80);
        assert_eq!(marginal_pair_counts(Axis::Thickness, &conds)[2][5], 40);
    }
}
