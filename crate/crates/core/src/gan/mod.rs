//! Conditional GAN with mismatched-condition discriminator training.

pub mod checkpoint;
pub mod data;
pub mod feature;
pub mod loss;
pub mod net;
pub mod optim;
pub mod train;
