//! Memory-efficient gradients of the batch-coupled losses.
//!
//! Pass one evaluates the whole batch once and caches the loss gradient with
//! respect to every representation vector ([`AlphaCache`]). Pass two
//! backpropagates those cached vectors through the network one sample at a
//! time ([`two_pass_gradient`]).

mod alpha;
mod closed_form;
mod two_pass;

pub use alpha::{AlphaCache, CacheKind};
pub use closed_form::{
    contrastive_grad_u, contrastive_grad_v, contrastive_grads, cosine_grad, entropy_grad, entropy_grads,
};
pub use two_pass::{trainable_for, two_pass_gradient};
