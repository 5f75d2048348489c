//! Fourier-transform option pricing under exponential Lévy-type models.
//!
//! The crate covers the Carr-Madan and smooth-offset one-by-one pricers, an
//! FFT pricer for strike ladders, a Monte Carlo benchmark engine, the `(B, N)`
//! grid-search tuner, the training-data generator for surrogate pricers and
//! the timing/regression statistics used to compare them.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod fft;
pub mod mc;
pub mod models;
pub mod offsets;
pub mod quad;
pub mod tuner;

pub use error::{PricingError, Result};
pub use models::{cf_wedge, ComplexValue, MarketSpec, ModelKind, ModelSpec};
pub use offsets::{eta, normal_cdf, offset_value, Eta, OffsetKind, OptionKind, OptionSpec};
pub use quad::{closed_form_bs, price_single, simpson_weights, PriceResult, QuadratureConfig};
pub use mc::{mc_cf_probe, mc_price, McConfig, McResult};
pub use tuner::{tune, TunerCase, TunerGrid, TunerReport};
pub use fft::{build_grid, fft_price_ladder, FftGrid, FftResult, StrikeLadder};
pub use dataset::{encode, generate, rescale_price, DatasetRecord, FeatureVector, GeneratorConfig, Labeler, SamplingBounds};
