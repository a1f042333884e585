//! Command-line front end for `pdboost` and the rate experiments behind
//! `pdboost rates`.

pub mod commands;
pub mod rates;
