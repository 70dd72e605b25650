//! Large-scale path loss and Shannon rate over orthogonal sub-channels.

use serde::{Deserialize, Serialize};

use super::{NodeKind, NodeSpec, Point, Scenario};

/// Log-distance path loss, `g = min(1, g0 * d^-n)` over the 3-D UE-node distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelModel {
    /// Gain at 1 m.
    pub reference_gain: f64,
    /// Exponent for UAV air-to-ground links.
    pub air_exponent: f64,
    /// Exponent for links to ground stations and ground vehicles.
    pub ground_exponent: f64,
    /// Multiply the large-scale gain by an exponential (Rayleigh power) factor drawn per epoch.
    pub rayleigh: bool,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self { reference_gain: 1e-3, air_exponent: 2.0, ground_exponent: 3.0, rayleigh: false }
    }
}

impl ChannelModel {
    pub fn exponent(&self, kind: NodeKind) -> f64 {
        match kind {
            NodeKind::Uav => self.air_exponent,
            NodeKind::Gs | NodeKind::Gv => self.ground_exponent,
        }
    }

    /// Large-scale gain between a UE on the ground and `node`.
    pub fn gain(&self, ue: Point, node: &NodeSpec) -> f64 {
        self.gain_at_distance(node.distance_3d(ue), node.kind)
    }

    pub fn gain_at_distance(&self, distance: f64, kind: NodeKind) -> f64 {
        if distance <= 0.0 {
            return 1.0;
        }
        (self.reference_gain * distance.powf(-self.exponent(kind))).min(1.0)
    }
}

/// Shannon rate in bits/s for a link with the given gain.
///
/// Gains outside `(0, 1]` are clamped, so a zero gain yields a zero rate.
pub fn link_rate(gain: f64, scenario: &Scenario) -> f64 {
    let g = gain.clamp(0.0, 1.0);
    scenario.bandwidth_hz * (1.0 + scenario.tx_power_watts * g / scenario.noise_watts).log2()
}
