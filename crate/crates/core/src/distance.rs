//! Mixed continuous/categorical distance and brute-force nearest neighbors.
//!
//! Continuous gaps are squared and summed; every categorical feature adds its
//! raw value-difference (VDM) term; the total is then square-rooted.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureSchema};
use crate::error::{ensure, Result};

/// Class profile used for a category that never occurs in the training data.
const UNSEEN_PROFILE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureVdm {
    /// `[positive, negative]` counts per category.
    counts: Vec<[usize; 2]>,
    /// P(+1 | value) per category, after optional smoothing.
    p_pos: Vec<f64>,
    /// Row-major `v x v` distance matrix.
    table: Vec<f64>,
}

impl FeatureVdm {
    fn build(counts: Vec<[usize; 2]>, smoothing: bool) -> Self {
        let p_pos: Vec<f64> = counts
            .iter()
            .map(|&[pos, neg]| {
                let total = pos + neg;
                if smoothing {
                    (pos as f64 + 1.0) / (total as f64 + 2.0)
                } else if total == 0 {
                    UNSEEN_PROFILE
                } else {
                    pos as f64 / total as f64
                }
            })
            .collect();
        let v = p_pos.len();
        let mut table = vec![0.0; v * v];
        for a in 0..v {
            for b in 0..v {
                table[a * v + b] = profile_gap(p_pos[a], p_pos[b]);
            }
        }
        FeatureVdm { counts, p_pos, table }
    }

    fn value_profile(&self, value: usize) -> f64 {
        self.p_pos.get(value).copied().unwrap_or(UNSEEN_PROFILE)
    }

    fn lookup(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a as usize, b as usize);
        let v = self.p_pos.len();
        if a < v && b < v {
            self.table[a * v + b]
        } else {
            profile_gap(self.value_profile(a), self.value_profile(b))
        }
    }
}

/// Sum over both classes of the squared gap in class-conditional probability.
/// With two classes the negative-class gap equals the positive-class gap.
fn profile_gap(p: f64, q: f64) -> f64 {
    let d = p - q;
    2.0 * d * d
}

/// Value-difference distances for every categorical feature of a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdmTable {
    features: Vec<Option<FeatureVdm>>,
    smoothing: bool,
}

impl VdmTable {
    /// Builds the table from class-conditional value counts with Laplace
    /// smoothing (`N_uc + 1` over `N_u + 2`).
    pub fn build(data: &Dataset) -> Result<Self> {
        Self::build_with(data, true)
    }

    pub fn build_with(data: &Dataset, smoothing: bool) -> Result<Self> {
        let n_pos = data.count_positive();
        ensure!(
            n_pos > 0 && n_pos < data.n_rows(),
            Data,
            "the value-difference table needs both classes in its training data"
        );
        let schema = data.schema();
        let mut features = Vec::with_capacity(schema.n_features());
        for (j, spec) in schema.features.iter().enumerate() {
            let Some(vocab) = spec.vocabulary() else {
                features.push(None);
                continue;
            };
            ensure!(
                !vocab.is_empty(),
                Data,
                "categorical feature `{}` has an empty vocabulary",
                spec.name
            );
            let mut counts = vec![[0usize; 2]; vocab.len()];
            for (i, row) in data.rows().enumerate() {
                let class = usize::from(!data.label(i).is_positive());
                counts[row[j] as usize][class] += 1;
            }
            features.push(Some(FeatureVdm::build(counts, smoothing)));
        }
        Ok(VdmTable { features, smoothing })
    }

    /// Table for a schema without categorical features.
    pub fn continuous_only(schema: &FeatureSchema) -> Result<Self> {
        ensure!(
            !schema.has_categorical(),
            InvalidArgument,
            "schema has categorical features; build the table from data"
        );
        Ok(VdmTable {
            features: vec![None; schema.n_features()],
            smoothing: true,
        })
    }

    pub fn smoothing(&self) -> bool {
        self.smoothing
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// VDM between category indices `u` and `v` of `feature`.
    pub fn distance(&self, feature: usize, u: usize, v: usize) -> f64 {
        match &self.features[feature] {
            Some(f) => f.lookup(u as f64, v as f64),
            None => panic!("feature {feature} is not categorical"),
        }
    }

    /// `[positive, negative]` training counts of category `value`.
    pub fn class_counts(&self, feature: usize, value: usize) -> Option<[usize; 2]> {
        self.features[feature].as_ref()?.counts.get(value).copied()
    }

    fn covers(&self, schema: &FeatureSchema) -> bool {
        self.features.len() == schema.n_features()
            && schema
                .features
                .iter()
                .zip(&self.features)
                .all(|(s, f)| s.is_categorical() == f.is_some())
    }
}

/// Distance function bound to one schema and VDM table.
#[derive(Debug, Clone, Copy)]
pub struct MixedMetric<'a> {
    vdm: &'a VdmTable,
    has_categorical: bool,
}

impl<'a> MixedMetric<'a> {
    pub fn new(schema: &FeatureSchema, vdm: &'a VdmTable) -> Result<Self> {
        ensure!(
            vdm.covers(schema),
            InvalidArgument,
            "value-difference table does not match the dataset schema"
        );
        Ok(MixedMetric {
            vdm,
            has_categorical: schema.has_categorical(),
        })
    }

    /// Squared distance; orders neighbors exactly like [`Self::distance`].
    #[inline]
    pub fn squared(&self, a: &[f64], b: &[f64]) -> f64 {
        if !self.has_categorical {
            return a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        }
        let mut s = 0.0;
        for ((x, y), f) in a.iter().zip(b).zip(&self.vdm.features) {
            s += match f {
                None => (x - y) * (x - y),
                Some(f) => f.lookup(*x, *y),
            };
        }
        s
    }

    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.squared(a, b).sqrt()
    }
}

pub fn mixed_distance(a: &[f64], b: &[f64], schema: &FeatureSchema, vdm: &VdmTable) -> Result<f64> {
    ensure!(
        a.len() == schema.n_features() && b.len() == schema.n_features(),
        InvalidArgument,
        "records do not match the schema width"
    );
    Ok(MixedMetric::new(schema, vdm)?.distance(a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub anchor: usize,
    /// `(row, distance)` pairs sorted by distance, then row.
    pub neighbors: Vec<(usize, f64)>,
}

impl NeighborList {
    pub fn indices(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.neighbors.iter().map(|&(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

fn by_distance_then_index(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// The `k` rows of `pool` closest to `query`, skipping `exclude`.
/// Returned distances are squared.
pub(crate) fn nearest_squared(
    pool: &Dataset,
    query: &[f64],
    k: usize,
    metric: &MixedMetric<'_>,
    exclude: Option<usize>,
) -> Vec<(usize, f64)> {
    let mut cand: Vec<(usize, f64)> = pool
        .rows()
        .enumerate()
        .filter(|&(i, _)| Some(i) != exclude)
        .map(|(i, r)| (i, metric.squared(query, r)))
        .collect();
    let k = k.min(cand.len());
    if k == 0 {
        return Vec::new();
    }
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_distance_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_distance_then_index);
    cand
}

/// Brute-force k nearest neighbors of row `anchor` within `pool`.
pub fn k_nearest_neighbors(pool: &Dataset, anchor: usize, k: usize, vdm: &VdmTable) -> Result<NeighborList> {
    ensure!(pool.n_rows() >= 2, InvalidArgument, "neighbor search needs at least 2 rows");
    ensure!(k >= 1, InvalidArgument, "k must be at least 1");
    ensure!(anchor < pool.n_rows(), InvalidArgument, "anchor {anchor} out of range");
    let metric = MixedMetric::new(pool.schema(), vdm)?;
    Ok(neighbors_of(pool, anchor, k, &metric))
}

fn neighbors_of(pool: &Dataset, anchor: usize, k: usize, metric: &MixedMetric<'_>) -> NeighborList {
    let neighbors = nearest_squared(pool, pool.row(anchor), k, metric, Some(anchor))
        .into_iter()
        .map(|(i, d2)| (i, d2.sqrt()))
        .collect();
    NeighborList { anchor, neighbors }
}

/// Neighbor lists for every row of a pool, computed once and reused.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    lists: Vec<NeighborList>,
}

impl NeighborGraph {
    pub fn build(pool: &Dataset, k: usize, vdm: &VdmTable) -> Result<Self> {
        ensure!(pool.n_rows() >= 2, InvalidArgument, "neighbor search needs at least 2 rows");
        ensure!(k >= 1, InvalidArgument, "k must be at least 1");
        let metric = MixedMetric::new(pool.schema(), vdm)?;
        let lists = (0..pool.n_rows())
            .map(|i| neighbors_of(pool, i, k, &metric))
            .collect();
        Ok(NeighborGraph { k, lists })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.lists.len()
    }

    pub fn neighbors(&self, anchor: usize) -> &NeighborList {
        &self.lists[anchor]
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::fixtures::{continuous, label};
    use crate::data::{FeatureSpec, Label};
    use proptest::prelude::*;

    fn one_categorical(values: &[usize], labels: &[i8], vocab: usize) -> Dataset {
        let names: Vec<String> = (0..vocab).map(|v| format!("v{v}")).collect();
        let schema = Arc::new(FeatureSchema::new(vec![FeatureSpec::categorical("c", names)], "y").unwrap());
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v as f64]).collect();
        Dataset::from_rows(schema, &rows, labels.iter().map(|&l| label(l)).collect()).unwrap()
    }

    #[test]
    fn vdm_hand_count() {
        // u: 2 pos / 2 neg, v: 4 pos / 0 neg
        let d = one_categorical(&[0, 0, 0, 0, 1, 1, 1, 1], &[1, 1, -1, -1, 1, 1, 1, 1], 2);
        let raw = VdmTable::build_with(&d, false).unwrap();
        assert!((raw.distance(0, 0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(raw.distance(0, 1, 1), 0.0);
        assert_eq!(raw.distance(0, 1, 0), raw.distance(0, 0, 1));

        let metric = MixedMetric::new(d.schema(), &raw).unwrap();
        assert!((metric.distance(&[0.0], &[1.0]) - 0.5f64.sqrt()).abs() < 1e-15);

        // smoothed: 3/6 vs 5/6
        let smooth = VdmTable::build(&d).unwrap();
        let gap: f64 = 0.5 - 5.0 / 6.0;
        assert!((smooth.distance(0, 0, 1) - 2.0 * gap * gap).abs() < 1e-15);
    }

    #[test]
    fn identical_profiles_are_at_zero_distance() {
        let d = one_categorical(&[0, 0, 1, 1, 2], &[1, -1, 1, -1, 1], 3);
        let t = VdmTable::build_with(&d, false).unwrap();
        assert_eq!(t.distance(0, 0, 1), 0.0);
        assert!(t.distance(0, 0, 2) > 0.0);
    }

    #[test]
    fn unseen_value_has_uniform_profile() {
        let d = one_categorical(&[0, 0, 1], &[1, 1, -1], 3);
        let t = VdmTable::build_with(&d, false).unwrap();
        // value 2 never occurs: profile 0.5 vs value 0's 1.0
        assert!((t.distance(0, 0, 2) - 0.5).abs() < 1e-15);
        assert_eq!(t.class_counts(0, 2), Some([0, 0]));
    }

    #[test]
    fn single_class_is_rejected() {
        let d = one_categorical(&[0, 1], &[1, 1], 2);
        assert!(VdmTable::build(&d).is_err());
    }

    #[test]
    fn three_four_five() {
        let schema = FeatureSchema::all_continuous(2);
        let vdm = VdmTable::continuous_only(&schema).unwrap();
        assert_eq!(mixed_distance(&[0.0, 0.0], &[3.0, 4.0], &schema, &vdm).unwrap(), 5.0);
        assert_eq!(mixed_distance(&[1.5, 2.0], &[1.5, 2.0], &schema, &vdm).unwrap(), 0.0);
    }

    #[test]
    fn neighbor_examples() {
        let d = continuous(&[&[0.0], &[1.0], &[10.0]], &[1, 1, -1]);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let nl = k_nearest_neighbors(&d, 0, 1, &vdm).unwrap();
        assert_eq!(nl.neighbors, vec![(1, 1.0)]);
        assert_eq!(k_nearest_neighbors(&d, 0, 5, &vdm).unwrap().len(), 2);

        let tie = continuous(&[&[0.0], &[1.0], &[-1.0]], &[1, 1, -1]);
        let nl = k_nearest_neighbors(&tie, 0, 1, &vdm).unwrap();
        assert_eq!(nl.neighbors[0].0, 1);

        let single = continuous(&[&[0.0]], &[1]);
        assert!(k_nearest_neighbors(&single, 0, 1, &vdm).is_err());
    }

    fn mixed_pool() -> impl Strategy<Value = Dataset> {
        (2usize..120).prop_flat_map(|n| {
            (
                proptest::collection::vec((-5i32..5, -5i32..5, 0usize..3), n),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_map(|(cells, labels)| {
                    let schema = Arc::new(
                        FeatureSchema::new(
                            vec![
                                FeatureSpec::continuous("a"),
                                FeatureSpec::continuous("b"),
                                FeatureSpec::categorical("c", ["p", "q", "r"]),
                            ],
                            "y",
                        )
                        .unwrap(),
                    );
                    let mut labels: Vec<Label> =
                        labels.into_iter().map(|b| if b { Label::Positive } else { Label::Negative }).collect();
                    labels[0] = Label::Positive;
                    labels[1] = Label::Negative;
                    let rows: Vec<Vec<f64>> = cells
                        .into_iter()
                        .map(|(a, b, c)| vec![f64::from(a) * 0.5, f64::from(b) * 0.5, c as f64])
                        .collect();
                    Dataset::from_rows(schema, &rows, labels).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn knn_matches_full_sort(d in mixed_pool(), k in 1usize..8, anchor_seed in any::<usize>()) {
            let vdm = VdmTable::build(&d).unwrap();
            let metric = MixedMetric::new(d.schema(), &vdm).unwrap();
            let anchor = anchor_seed % d.n_rows();
            let mut all: Vec<(usize, f64)> = (0..d.n_rows())
                .filter(|&i| i != anchor)
                .map(|i| (i, metric.distance(d.row(anchor), d.row(i))))
                .collect();
            all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
            all.truncate(k);
            let got = k_nearest_neighbors(&d, anchor, k, &vdm).unwrap();
            prop_assert_eq!(got.len(), k.min(d.n_rows() - 1));
            prop_assert_eq!(got.neighbors, all);
        }

        #[test]
        fn distance_is_symmetric_with_zero_diagonal(d in mixed_pool()) {
            let vdm = VdmTable::build(&d).unwrap();
            let metric = MixedMetric::new(d.schema(), &vdm).unwrap();
            for i in 0..d.n_rows().min(20) {
                prop_assert_eq!(metric.distance(d.row(i), d.row(i)), 0.0);
                for j in 0..d.n_rows().min(20) {
                    prop_assert_eq!(metric.distance(d.row(i), d.row(j)), metric.distance(d.row(j), d.row(i)));
                }
            }
        }

        #[test]
        fn vdm_is_bounded_and_permutation_invariant(d in mixed_pool(), shift in 1usize..50) {
            let vdm = VdmTable::build(&d).unwrap();
            for u in 0..3 {
                for v in 0..3 {
                    let x = vdm.distance(2, u, v);
                    prop_assert!((0.0..=2.0).contains(&x));
                    prop_assert_eq!(x, vdm.distance(2, v, u));
                }
            }
            let n = d.n_rows();
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            prop_assert_eq!(VdmTable::build(&d.subset(&perm)).unwrap(), vdm);
        }
    }
}
