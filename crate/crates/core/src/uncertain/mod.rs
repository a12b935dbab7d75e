//! Uncertain design samples: truncated-Gaussian marginals, tuple probability
//! bookkeeping, dataset ingestion and threshold labeling.

mod dataset;
mod labeling;
mod marginal;
mod tuple;

pub use dataset::{
    dataset_mass, label_distribution, label_probability, load_dataset, load_designs,
    read_dataset, Dataset, LABEL_COLUMN,
};
pub use labeling::{
    apply_labels, Comparison, LabelCriteria, Threshold, GOOD, INTERMEDIATE, POOR,
};
pub use marginal::{make_marginal, ActiveRange, TruncatedGaussianMarginal, SIGMA_SPAN};
pub(crate) use tuple::split_fraction;
pub use tuple::{partition_tuple, UncertainTuple};
