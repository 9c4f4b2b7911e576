//! Multiscale curvelet features and classifiers for image recognition.
//!
//! The crate decomposes grayscale images with a wrapping-based discrete
//! curvelet transform, turns per-scale coefficient magnitudes into feature
//! vectors reduced by PCA, and classifies them with k-NN or one-against-all
//! linear SVMs. A per-scale majority-vote ensemble ties the pieces together.
//!
//! Everything here is pure computation on in-memory arrays; file formats,
//! dataset handling and the CLI live in the companion `curveface` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ensemble;
pub mod error;
pub mod fdct;
pub mod fft;
pub mod image;
pub mod knn;
pub mod pca;
pub mod svm;

pub use error::{Error, Result};
