use crate::rng::{derived, stream, SeededRng};
use crate::task::TaskType;
use crate::trainer::{Dataset, Standardization};
use rand::seq::SliceRandom;

use super::DataError;

/// Share of the training split used for fitting; the rest is validation.
pub const FIT_RATIO: f64 = 0.9;

/// Per-class train counts whose total is `round(n * ratio)`, assigned by
/// largest remainder (ties to the lower class).
fn allocate(class_sizes: &[usize], ratio: f64) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let total = (n as f64 * ratio).round() as usize;
    let quotas: Vec<f64> = class_sizes.iter().map(|&c| c as f64 * ratio).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = total.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        if counts[c] < class_sizes[c] {
            counts[c] += 1;
            missing -= 1;
        }
    }
    counts
}

/// Splits row indices into `(first, second)` with `ratio` of the rows in
/// `first`, stratified by class when every class has at least two rows.
/// Both sides are non-empty when the dataset has two or more rows.
pub fn partition(data: &Dataset, ratio: f64, rng: &mut SeededRng) -> (Vec<usize>, Vec<usize>, bool) {
    let n = data.len();
    let clamp = |k: usize| if n >= 2 { k.clamp(1, n - 1) } else { k.min(n) };
    let by_class: Option<Vec<Vec<usize>>> = match data.task {
        TaskType::Classification { classes } => {
            let mut groups = vec![Vec::new(); classes];
            for i in 0..n {
                groups[data.class_of(i)].push(i);
            }
            let present: Vec<_> = groups.into_iter().filter(|g| !g.is_empty()).collect();
            if present.iter().any(|g| g.len() < 2) {
                log::warn!("a class has fewer than two samples; falling back to an unstratified split");
                None
            } else {
                Some(present)
            }
        }
        TaskType::Regression => None,
    };

    match by_class {
        Some(mut groups) => {
            let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
            let counts = allocate(&sizes, ratio);
            let (mut first, mut second) = (Vec::new(), Vec::new());
            for (group, &k) in groups.iter_mut().zip(&counts) {
                group.shuffle(rng);
                first.extend_from_slice(&group[..k]);
                second.extend_from_slice(&group[k..]);
            }
            // Keep both sides non-empty for degenerate ratios.
            if second.is_empty() && first.len() >= 2 {
                second.push(first.pop().expect("non-empty"));
            } else if first.is_empty() && second.len() >= 2 {
                first.push(second.pop().expect("non-empty"));
            }
            first.shuffle(rng);
            second.shuffle(rng);
            (first, second, true)
        }
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            let k = clamp((n as f64 * ratio).round() as usize);
            let second = idx.split_off(k);
            (idx, second, false)
        }
    }
}

/// Shuffled (stratified for classification) train/test split with z-score
/// parameters fitted on train and applied to both sides.
pub fn split_and_standardize(
    data: &Dataset,
    ratio: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::Invalid(format!("split ratio {ratio} must lie in (0, 1)")));
    }
    if data.len() < 2 {
        return Err(DataError::Invalid("need at least two rows to split".into()));
    }
    let mut rng = derived(seed, &[stream::SPLIT]);
    let (train_idx, test_idx, _) = partition(data, ratio, &mut rng);
    let mut train = data.select(&train_idx);
    let mut test = data.select(&test_idx);
    let z = Standardization::fit(&train.features);
    z.apply(&mut train.features);
    z.apply(&mut test.features);
    train.standardization = Some(z.clone());
    test.standardization = Some(z);
    train.check()?;
    test.check()?;
    Ok((train, test))
}

/// The splits every method of an experiment shares.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    /// Full training split (fit plus validation).
    pub train: Dataset,
    pub fit: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    /// Fingerprint of the unsplit dataset.
    pub dataset_hash: String,
}

impl Splits {
    pub fn prepare(data: &Dataset, ratio: f64, seed: u64) -> Result<Self, DataError> {
        let (train, test) = split_and_standardize(data, ratio, seed)?;
        if train.len() < 2 {
            return Err(DataError::Invalid("training split is too small to hold out validation rows".into()));
        }
        let mut rng = derived(seed, &[stream::SPLIT, 1]);
        let (fit_idx, val_idx, _) = partition(&train, FIT_RATIO, &mut rng);
        Ok(Self {
            fit: train.select(&fit_idx),
            val: train.select(&val_idx),
            train,
            test,
            dataset_hash: data.fingerprint(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn classes(sizes: &[usize]) -> Dataset {
        let targets: Vec<f64> = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(c as f64, k))
            .collect();
        let n = targets.len();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * (j + 1)) as f64);
        Dataset::new(x, targets, TaskType::Classification { classes: sizes.len() }).unwrap()
    }

    #[test]
    fn largest_remainder_hits_the_total() {
        assert_eq!(allocate(&[50, 50, 50], 0.8), vec![40, 40, 40]);
        let c = allocate(&[3, 3, 4], 0.5);
        assert_eq!(c.iter().sum::<usize>(), 5);
    }

    #[test]
    fn iris_sized_split_is_120_30_and_stratified() {
        let d = classes(&[50, 50, 50]);
        let (train, test) = split_and_standardize(&d, 0.8, 7).unwrap();
        assert_eq!((train.len(), test.len()), (120, 30));
        for c in 0..3 {
            assert_eq!(test.targets.iter().filter(|&&t| t == c as f64).count(), 10);
        }
    }

    #[test]
    fn singleton_class_falls_back() {
        let d = classes(&[10, 1]);
        let (a, b, stratified) = partition(&d, 0.8, &mut crate::rng::seeded(1));
        assert!(!stratified);
        assert_eq!(a.len() + b.len(), 11);
    }

    #[test]
    fn same_seed_same_partition() {
        let d = classes(&[20, 30]);
        let a = Splits::prepare(&d, 0.8, 5).unwrap();
        let b = Splits::prepare(&d, 0.8, 5).unwrap();
        assert_eq!(a, b);
        assert!(!a.val.is_empty() && !a.fit.is_empty());
        assert_eq!(a.fit.len() + a.val.len(), a.train.len());
    }
}
