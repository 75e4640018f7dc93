//! A feed-forward network engine whose backward pass is the two-step adjoint
//! recursion `Y^h_* = X^h_* ⊙ σ′(Y^h)`, `X^{h-1}_* = (W^h)ᵀ Y^h_*`, with weight
//! gradients `δ_{W^h} = Y^h_* (X^{h-1})ᵀ`.
//!
//! Two independent gradient oracles are provided for checking it: the
//! classical generalized delta rule ([`deltarule`]) and central finite
//! differences ([`gradcheck`]).

pub mod activation;
pub mod deltarule;
pub mod error;
pub mod fadjoint;
pub mod fprop;
pub mod fsym;
pub mod gradcheck;
pub mod linalg;
pub mod network;
pub mod trainer;
pub mod worked;

pub use activation::ActivationKind;
pub use error::{Error, Result};
pub use fadjoint::{fadjoint_pass, gradient, weight_gradients, FAdjoint, LossKind};
pub use fprop::{forward, FPropagation};
pub use linalg::{Matrix, Vector};
pub use network::{sharp, Architecture, BiasMode, GradientSet, InitScheme, Network};
pub use trainer::{Dataset, TrainConfig};
