#![allow(dead_code)]

pub mod golden;
pub mod matcher_ref;
pub mod micro;
pub mod rulegen;
pub mod scenes;
pub mod spatial_ref;
