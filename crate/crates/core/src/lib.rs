//! Mobility simulation for beamformed mmWave networks with a statistics-driven fast-fading model.

pub mod fading;
pub mod channel_stats;
pub mod beamforming;
pub mod mobility;
pub mod campaign;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fading.md")]
    mod fading {}
    #[doc = include_str!("../../../book/src/channel-stats.md")]
    mod channel_stats {}
    #[doc = include_str!("../../../book/src/beamforming.md")]
    mod beamforming {}
    #[doc = include_str!("../../../book/src/mobility.md")]
    mod mobility {}
    #[doc = include_str!("../../../book/src/campaigns.md")]
    mod campaigns {}
}
