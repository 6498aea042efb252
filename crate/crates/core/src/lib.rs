//! Computational core of a drone archery game: a virtual bow that launches an
//! "arrow" drone on a ballistic path, a swarm environment in which target
//! drones learn to dodge it, an A2C trainer, a potential-field baseline and
//! the forearm haptic encoding of bow tension.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod a2c;
pub mod apf;
pub mod ballistics;
pub mod env;
pub mod error;
pub mod haptics;
pub mod nn;
pub mod policy;
pub mod vec3;

pub use error::{Error, Result};
pub use vec3::{Aabb, Vec3};
