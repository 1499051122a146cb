//! Weighted and unweighted over/under-samplers.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{partition_by_class, Dataset, Label, WeightVector};
use crate::distance::{NeighborGraph, VdmTable};
use crate::error::{ensure, Result};
use crate::rng::{derive_seed, seeded};

/// Default size of the low-weight elimination pool relative to the number of
/// rows removed, as `1 + c`.
pub const DEFAULT_POOL_CONSTANT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteOptions {
    pub k: usize,
    /// Place synthetic points at `x + r(x - e)`, on the far side of the anchor,
    /// instead of interpolating towards the neighbor.
    pub literal_formula: bool,
}

impl Default for SmoteOptions {
    fn default() -> Self {
        SmoteOptions {
            k: 5,
            literal_formula: false,
        }
    }
}

impl SmoteOptions {
    pub fn with_k(k: usize) -> Self {
        SmoteOptions {
            k,
            ..SmoteOptions::default()
        }
    }
}

/// Number of synthetic rows to create from each minority row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisPlan {
    pub counts: Vec<usize>,
}

impl SynthesisPlan {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Splits `n_syn` over rows in proportion to `weights`.
///
/// Each count starts as `round(n_syn * w_i)`. A shortfall is added one by one
/// to the heaviest rows; an excess is removed one by one from the lightest
/// nonzero rows. Equal weights are ordered by row index, lower first.
pub fn allocate_synthesis_counts(weights: &WeightVector, n_syn: usize) -> SynthesisPlan {
    let w = weights.as_slice();
    let mut counts: Vec<usize> = w.iter().map(|&wi| (n_syn as f64 * wi).round() as usize).collect();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));

    let mut total: usize = counts.iter().sum();
    while total < n_syn {
        for &i in &order {
            if total == n_syn {
                break;
            }
            counts[i] += 1;
            total += 1;
        }
    }
    while total > n_syn {
        for &i in order.iter().rev() {
            if total == n_syn {
                break;
            }
            if counts[i] > 0 {
                counts[i] -= 1;
                total -= 1;
            }
        }
    }
    SynthesisPlan { counts }
}

/// Output of an oversampling call with per-row provenance.
#[derive(Debug, Clone)]
pub struct Synthesis {
    /// Original rows followed by synthetic rows.
    pub data: Dataset,
    pub plan: SynthesisPlan,
    /// `(anchor, neighbor)` minority rows behind each synthetic row, in order.
    pub origins: Vec<(usize, usize)>,
}

impl Synthesis {
    pub fn n_original(&self) -> usize {
        self.data.n_rows() - self.origins.len()
    }
}

/// Weighted SMOTE: grows `minority` to `n_target` rows, giving each row a
/// share of the synthetic rows proportional to its weight.
pub fn wsmote(
    minority: &Dataset,
    weights: &WeightVector,
    n_target: usize,
    opts: &SmoteOptions,
    vdm: &VdmTable,
    seed: u64,
) -> Result<Dataset> {
    check_oversample_args(minority, weights, n_target, opts)?;
    if n_target == minority.n_rows() {
        return Ok(minority.clone());
    }
    let graph = NeighborGraph::build(minority, opts.k, vdm)?;
    Ok(wsmote_with_graph(minority, weights, n_target, &graph, opts, seed)?.data)
}

fn check_oversample_args(
    minority: &Dataset,
    weights: &WeightVector,
    n_target: usize,
    opts: &SmoteOptions,
) -> Result<()> {
    let n = minority.n_rows();
    ensure!(n >= 2, InvalidArgument, "oversampling needs at least 2 minority rows, got {n}");
    ensure!(
        weights.len() == n,
        InvalidArgument,
        "{} weights for {n} minority rows",
        weights.len()
    );
    ensure!(
        n_target >= n,
        InvalidArgument,
        "target size {n_target} is below the {n} existing minority rows"
    );
    ensure!(opts.k >= 1, InvalidArgument, "k must be at least 1");
    Ok(())
}

/// [`wsmote`] with neighbor lists computed ahead of time.
pub fn wsmote_with_graph(
    minority: &Dataset,
    weights: &WeightVector,
    n_target: usize,
    graph: &NeighborGraph,
    opts: &SmoteOptions,
    seed: u64,
) -> Result<Synthesis> {
    check_oversample_args(minority, weights, n_target, opts)?;
    ensure!(
        graph.n_rows() == minority.n_rows() && graph.k() == opts.k,
        InvalidArgument,
        "neighbor graph was built for a different pool or k"
    );
    let plan = allocate_synthesis_counts(weights, n_target - minority.n_rows());
    let mut rng = seeded(seed);
    let schema = minority.schema();
    let m = minority.n_features();
    let categorical = schema.categorical_mask();

    let mut values = Vec::with_capacity(plan.total() * m);
    let mut origins = Vec::with_capacity(plan.total());
    let mut drawn = Vec::new();
    for (anchor, &count) in plan.counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let ne: Vec<usize> = graph.neighbors(anchor).indices().collect();
        drawn.clear();
        if count > ne.len() {
            drawn.extend((0..count).map(|_| ne[rng.random_range(0..ne.len())]));
        } else {
            drawn.extend(index::sample(&mut rng, ne.len(), count).into_iter().map(|i| ne[i]));
        }
        let x = minority.row(anchor);
        let voted: Vec<Option<f64>> = (0..m)
            .map(|j| categorical[j].then(|| vote(x[j], drawn.iter().map(|&e| minority.row(e)[j]))))
            .collect();
        for &e in &drawn {
            let nb = minority.row(e);
            let r: f64 = rng.random();
            for j in 0..m {
                values.push(match voted[j] {
                    Some(v) => v,
                    None if opts.literal_formula => x[j] + r * (x[j] - nb[j]),
                    None => x[j] + r * (nb[j] - x[j]),
                });
            }
            origins.push((anchor, e));
        }
    }
    let mut data = minority.clone();
    data.extend_unchecked(&values, &vec![Label::Positive; origins.len()]);
    Ok(Synthesis { data, plan, origins })
}

/// Most frequent category among `votes`; the anchor's own value wins ties,
/// otherwise the lowest category index does.
fn vote(anchor: f64, votes: impl Iterator<Item = f64>) -> f64 {
    let mut counts: Vec<usize> = Vec::new();
    for v in votes {
        let v = v as usize;
        if counts.len() <= v {
            counts.resize(v + 1, 0);
        }
        counts[v] += 1;
    }
    let a = anchor as usize;
    let best = counts.iter().copied().max().unwrap_or(0);
    if counts.get(a).copied().unwrap_or(0) == best {
        return anchor;
    }
    counts.iter().position(|&c| c == best).unwrap_or(a) as f64
}

/// Plain SMOTE: [`wsmote`] with uniform weights.
pub fn smote_baseline(
    minority: &Dataset,
    n_target: usize,
    opts: &SmoteOptions,
    vdm: &VdmTable,
    seed: u64,
) -> Result<Dataset> {
    ensure!(!minority.is_empty(), InvalidArgument, "minority set is empty");
    wsmote(minority, &WeightVector::uniform(minority.n_rows()), n_target, opts, vdm, seed)
}

fn check_undersample_args(n: usize, n_keep: usize) -> Result<()> {
    ensure!(n_keep > 0, InvalidArgument, "cannot keep 0 rows");
    ensure!(
        n_keep <= n,
        InvalidArgument,
        "cannot keep {n_keep} of {n} majority rows"
    );
    Ok(())
}

/// Weighted under-sampling: removes `|majority| - n_keep` rows drawn
/// uniformly from the `round((1 + c) * n_elim)` lowest-weight rows.
/// Returns the surviving row indices in ascending order.
pub fn wusample_indices(weights: &WeightVector, n_keep: usize, c: f64, seed: u64) -> Result<Vec<usize>> {
    let n = weights.len();
    check_undersample_args(n, n_keep)?;
    ensure!((0.0..=1.0).contains(&c), InvalidArgument, "pool constant {c} is outside [0, 1]");
    let n_elim = n - n_keep;
    let w = weights.as_slice();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    let pool = (((1.0 + c) * n_elim as f64).round() as usize).min(n);
    let mut rng = seeded(seed);
    let mut removed = vec![false; n];
    for p in index::sample(&mut rng, pool, n_elim) {
        removed[order[p]] = true;
    }
    Ok((0..n).filter(|&i| !removed[i]).collect())
}

pub fn wusample(majority: &Dataset, weights: &WeightVector, n_keep: usize, c: f64, seed: u64) -> Result<Dataset> {
    ensure!(
        weights.len() == majority.n_rows(),
        InvalidArgument,
        "{} weights for {} majority rows",
        weights.len(),
        majority.n_rows()
    );
    Ok(majority.subset(&wusample_indices(weights, n_keep, c, seed)?))
}

/// Indices of `n_keep` of `n` rows retained uniformly at random, ascending.
pub fn random_undersample_indices(n: usize, n_keep: usize, seed: u64) -> Result<Vec<usize>> {
    check_undersample_args(n, n_keep)?;
    let mut rng = seeded(seed);
    let mut keep = index::sample(&mut rng, n, n_keep).into_vec();
    keep.sort_unstable();
    Ok(keep)
}

pub fn random_undersample(majority: &Dataset, n_keep: usize, seed: u64) -> Result<Dataset> {
    Ok(majority.subset(&random_undersample_indices(majority.n_rows(), n_keep, seed)?))
}

/// SMOTE on the positive class and random under-sampling on the negative
/// class, both to `n_per_class` rows. Positives come first in the output.
pub fn hybrid_sample_baseline(
    data: &Dataset,
    n_per_class: usize,
    opts: &SmoteOptions,
    vdm: &VdmTable,
    seed: u64,
) -> Result<Dataset> {
    let parts = partition_by_class(data)?;
    let (n_min, n_maj) = (parts.minority.n_rows(), parts.majority.n_rows());
    ensure!(
        n_min <= n_per_class && n_per_class <= n_maj,
        InvalidArgument,
        "per-class size {n_per_class} is outside [{n_min}, {n_maj}]"
    );
    let pos = smote_baseline(&parts.minority, n_per_class, opts, vdm, derive_seed(seed, &[0]))?;
    let neg = random_undersample(&parts.majority, n_per_class, derive_seed(seed, &[1]))?;
    pos.concat(&neg)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::fixtures::continuous;
    use crate::data::{FeatureSchema, FeatureSpec};
    use proptest::prelude::*;

    fn plan(w: &[f64], n_syn: usize) -> Vec<usize> {
        allocate_synthesis_counts(&WeightVector::new(w.to_vec()).unwrap(), n_syn).counts
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(plan(&[0.5, 0.3, 0.2], 10), vec![5, 3, 2]);
        assert_eq!(plan(&[0.34, 0.33, 0.33], 10), vec![4, 3, 3]);
        assert_eq!(plan(&[0.5, 0.5], 1), vec![1, 0]);
        assert_eq!(plan(&[0.25; 4], 6), vec![2, 2, 1, 1]);
        assert_eq!(plan(&[0.25; 4], 8), vec![2, 2, 2, 2]);
        assert_eq!(plan(&[0.25; 4], 0), vec![0, 0, 0, 0]);
    }

    fn line(points: &[f64]) -> Dataset {
        let rows: Vec<&[f64]> = points.iter().map(std::slice::from_ref).collect();
        continuous(&rows, &vec![1; points.len()])
    }

    #[test]
    fn wsmote_identity_and_interpolation() {
        let d = line(&[0.0, 10.0]);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let w = WeightVector::uniform(2);
        let same = wsmote(&d, &w, 2, &SmoteOptions::with_k(1), &vdm, 1).unwrap();
        assert_eq!(same, d);

        let out = wsmote(&d, &w, 3, &SmoteOptions::with_k(1), &vdm, 1).unwrap();
        assert_eq!(out.n_rows(), 3);
        let s = out.row(2)[0];
        assert!(s > 0.0 && s < 10.0, "{s}");
        assert_eq!(out.count_positive(), 3);
    }

    #[test]
    fn literal_formula_extrapolates() {
        let d = line(&[0.0, 10.0]);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let opts = SmoteOptions {
            k: 1,
            literal_formula: true,
        };
        let w = WeightVector::new(vec![1.0, 0.0]).unwrap();
        let out = wsmote(&d, &w, 12, &opts, &vdm, 5).unwrap();
        for i in 2..12 {
            let s = out.row(i)[0];
            assert!((-10.0..=0.0).contains(&s), "{s}");
        }
    }

    #[test]
    fn wsmote_rejects_bad_sizes() {
        let vdm = VdmTable::continuous_only(&FeatureSchema::all_continuous(1)).unwrap();
        let one = line(&[0.0]);
        assert!(wsmote(&one, &WeightVector::uniform(1), 3, &SmoteOptions::default(), &vdm, 0).is_err());
        let two = line(&[0.0, 1.0]);
        assert!(wsmote(&two, &WeightVector::uniform(2), 1, &SmoteOptions::default(), &vdm, 0).is_err());
    }

    #[test]
    fn categorical_vote() {
        assert_eq!(vote(1.0, [0.0, 0.0, 1.0].into_iter()), 0.0);
        assert_eq!(vote(1.0, [0.0, 1.0].into_iter()), 1.0);
        assert_eq!(vote(2.0, [1.0, 0.0].into_iter()), 0.0);
    }

    #[test]
    fn categorical_features_copy_the_vote() {
        let schema = Arc::new(
            FeatureSchema::new(
                vec![FeatureSpec::continuous("x"), FeatureSpec::categorical("c", ["a", "b"])],
                "y",
            )
            .unwrap(),
        );
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 1.0]];
        let d = Dataset::from_rows(schema, &rows, vec![Label::Positive; 3]).unwrap();
        let mut both = d.clone();
        both.extend_unchecked(&[5.0, 0.0], &[Label::Negative]);
        let vdm = VdmTable::build(&both).unwrap();
        let w = WeightVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let out = wsmote(&d, &w, 5, &SmoteOptions::with_k(2), &vdm, 9).unwrap();
        // anchor 0 draws both neighbors, which agree on category 1
        assert_eq!(out.row(3)[1], 1.0);
        assert_eq!(out.row(4)[1], 1.0);
    }

    #[test]
    fn wusample_examples() {
        let w = WeightVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(wusample_indices(&w, 2, 0.0, 17).unwrap(), vec![2, 3]);
        assert_eq!(wusample_indices(&w, 4, 0.5, 17).unwrap(), vec![0, 1, 2, 3]);
        assert!(wusample_indices(&w, 0, 0.5, 17).is_err());
        assert!(wusample_indices(&w, 5, 0.5, 17).is_err());
        assert!(wusample_indices(&w, 2, 1.5, 17).is_err());
    }

    #[test]
    fn random_undersample_is_deterministic() {
        let a = random_undersample_indices(3, 1, 4).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, random_undersample_indices(3, 1, 4).unwrap());
        assert_eq!(random_undersample_indices(3, 3, 4).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn random_undersample_frequencies_are_uniform() {
        let (n, keep, draws) = (10usize, 4usize, 10_000usize);
        let mut removed = vec![0usize; n];
        for s in 0..draws as u64 {
            let kept = random_undersample_indices(n, keep, s).unwrap();
            for (i, r) in removed.iter_mut().enumerate() {
                if !kept.contains(&i) {
                    *r += 1;
                }
            }
        }
        let p = (n - keep) as f64 / n as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for &r in &removed {
            assert!((r as f64 - draws as f64 * p).abs() <= 3.0 * sd, "{removed:?}");
        }
    }

    #[test]
    fn hybrid_sampling_sizes() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let labels: Vec<i8> = (0..100).map(|i| if i < 10 { 1 } else { -1 }).collect();
        let d = continuous(&refs, &labels);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        let opts = SmoteOptions::default();
        let h = hybrid_sample_baseline(&d, 50, &opts, &vdm, 3).unwrap();
        assert_eq!((h.count_positive(), h.count_negative()), (50, 50));
        let under = hybrid_sample_baseline(&d, 10, &opts, &vdm, 3).unwrap();
        assert_eq!(under.subset(&(0..10).collect::<Vec<_>>()), d.subset(&(0..10).collect::<Vec<_>>()));
        let over = hybrid_sample_baseline(&d, 90, &opts, &vdm, 3).unwrap();
        assert_eq!(over.n_rows(), 180);
        assert!(hybrid_sample_baseline(&d, 9, &opts, &vdm, 3).is_err());
        assert!(hybrid_sample_baseline(&d, 91, &opts, &vdm, 3).is_err());
    }

    fn weights(max_len: usize) -> impl Strategy<Value = WeightVector> {
        proptest::collection::vec(0.0f64..1.0, 1..max_len).prop_filter_map("positive mass", |raw| {
            WeightVector::normalized(raw).ok()
        })
    }

    proptest! {
        #[test]
        fn allocation_total_is_exact(w in weights(40), n_syn in 0usize..500) {
            let p = allocate_synthesis_counts(&w, n_syn);
            prop_assert_eq!(p.total(), n_syn);
        }

        #[test]
        fn uniform_allocation_is_even(n in 1usize..30, n_syn in 0usize..300) {
            let p = allocate_synthesis_counts(&WeightVector::uniform(n), n_syn);
            let lo = n_syn / n;
            prop_assert!(p.counts.iter().all(|&c| c == lo || c == lo + 1));
        }

        #[test]
        fn synthetic_points_stay_between_anchor_and_neighbor(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 2..25),
            extra in 0usize..60,
            k in 1usize..6,
            seed in any::<u64>(),
        ) {
            let rows: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let d = continuous(&refs, &vec![1; rows.len()]);
            let vdm = VdmTable::continuous_only(d.schema()).unwrap();
            let opts = SmoteOptions::with_k(k);
            let graph = NeighborGraph::build(&d, k, &vdm).unwrap();
            let n = d.n_rows();
            let w = WeightVector::uniform(n);
            let s = wsmote_with_graph(&d, &w, n + extra, &graph, &opts, seed).unwrap();
            prop_assert_eq!(s.data.n_rows(), n + extra);
            prop_assert_eq!(s.data.count_positive(), n + extra);
            prop_assert_eq!(s.data.subset(&(0..n).collect::<Vec<_>>()), d.clone());
            for (t, &(a, e)) in s.origins.iter().enumerate() {
                prop_assert!(graph.neighbors(a).indices().any(|i| i == e));
                let syn = s.data.row(n + t);
                for (j, &v) in syn.iter().enumerate() {
                    let (lo, hi) = (d.row(a)[j].min(d.row(e)[j]), d.row(a)[j].max(d.row(e)[j]));
                    prop_assert!(lo <= v && v <= hi);
                }
            }
            let again = wsmote_with_graph(&d, &w, n + extra, &graph, &opts, seed).unwrap();
            prop_assert_eq!(again.data, s.data);
        }

        #[test]
        fn wusample_keeps_rows_outside_the_pool(
            w in weights(60),
            keep_frac in 0.01f64..1.0,
            c in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let n = w.len();
            let n_keep = ((keep_frac * n as f64).ceil() as usize).clamp(1, n);
            let kept = wusample_indices(&w, n_keep, c, seed).unwrap();
            prop_assert_eq!(kept.len(), n_keep);
            prop_assert!(kept.windows(2).all(|p| p[0] < p[1]));
            let n_elim = n - n_keep;
            let pool = (((1.0 + c) * n_elim as f64).round() as usize).min(n);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
            for &i in &order[pool..] {
                prop_assert!(kept.contains(&i));
            }
        }
    }
}
