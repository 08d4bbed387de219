pub mod builder;
pub mod entropy;
pub mod exact;
pub mod flipflop;
pub mod models;
pub mod scale;
pub mod selftest;
pub mod symbolic;
pub mod tail;
