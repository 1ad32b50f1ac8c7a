#![allow(dead_code, clippy::needless_range_loop)]

pub mod lp_gen;
pub mod network;
pub mod random_instance;
pub mod tableau;
