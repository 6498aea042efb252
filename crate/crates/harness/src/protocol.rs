//! JSON messages exchanged with the browser client over a WebSocket.
//!
//! One message per text frame, discriminated by a `type` field. Every float
//! is written in exponent form with 17 significant digits so that parsing it
//! back as `f64` recovers the exact server value.

use std::io;

use archery_core::ballistics::{Gate, HandPose};
use archery_core::haptics::ContactCommand;
use archery_core::policy::PolicyKind;
use archery_core::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Aim { p_bow: Vec3, p_arrow: Vec3 },
    Release {},
    Reset {},
    SetPolicy { policy: PolicyKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Aiming,
    InFlight,
    Scored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaunchInfo {
    pub energy: f64,
    pub speed: f64,
    pub velocity: Vec3,
    pub theta: f64,
    pub gamma_azimuth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub session: u64,
    pub seq: u64,
    pub phase: Phase,
    pub policy: PolicyKind,
    /// Time since release, s. Zero while aiming.
    pub t: f64,
    pub hands: Option<HandPose>,
    pub stretch: f64,
    /// Stretch over the bow's saturation stretch, in `[0, 1]`.
    pub tension_bar: f64,
    /// Bowstring force, N.
    pub tension: f64,
    pub contact: ContactCommand,
    pub launch: Option<LaunchInfo>,
    /// `[t, x, y, z]` rows: the preview while aiming, the shot afterwards.
    pub trajectory: Vec<[f64; 4]>,
    pub arrow: Option<Vec3>,
    /// Positions after the latest 10 Hz environment step.
    pub drones: Vec<Vec3>,
    /// Linear blend between the last two steps for smooth drawing only.
    pub drones_interp: Vec<Vec3>,
    pub env_step: usize,
    pub done_reason: Option<String>,
    pub score: u32,
    pub shots_taken: u32,
    pub shots_total: u32,
    /// Gate the next (or current) shot must pass to score.
    pub target_gate: Option<usize>,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub session: u64,
    /// 1-based shot number.
    pub shot: u32,
    pub target_gate: usize,
    /// Gate actually crossed, if any.
    pub gate: Option<usize>,
    pub gate_name: Option<String>,
    pub crossing: Option<Vec3>,
    /// Points awarded: the gate weight when `gate == target_gate`, else 0.
    pub points: u32,
    pub total: u32,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    pub session: u64,
    pub phase: Phase,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Telemetry(Box<Telemetry>),
    Scored(Scored),
    Error(ErrorReply),
}

impl ServerMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            ServerMessage::Telemetry(_) => "telemetry",
            ServerMessage::Scored(_) => "scored",
            ServerMessage::Error(_) => "error",
        }
    }
}

/// Writes floats as `{:.16e}`.
#[derive(Clone, Copy, Default)]
pub struct PreciseFloats;

impl serde_json::ser::Formatter for PreciseFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value:.8e}")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::with_capacity(256);
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFloats);
    value.serialize(&mut ser).expect("messages always serialize");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn encode(msg: &ServerMessage) -> String {
    to_json(msg)
}

pub fn decode_client(text: &str) -> Result<ClientMessage, String> {
    serde_json::from_str(text).map_err(|e| format!("malformed message: {e}"))
}

pub fn decode_server(text: &str) -> Result<ServerMessage, String> {
    serde_json::from_str(text).map_err(|e| format!("malformed message: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_significant_digits() {
        assert_eq!(to_json(&0.5f64), "5.0000000000000000e-1");
        assert_eq!(
            to_json(&vec![1.0f64, -2.25]),
            "[1.0000000000000000e0,-2.2500000000000000e0]"
        );
        let x = 0.1f64 + 0.2;
        let back: f64 = serde_json::from_str(&to_json(&x)).unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
        assert_eq!(to_json(&f64::NAN), "null");
    }

    #[test]
    fn client_messages_parse() {
        assert_eq!(
            decode_client(r#"{"type":"aim","p_bow":[0,1,1.5],"p_arrow":[0,0.5,1.4]}"#).unwrap(),
            ClientMessage::Aim {
                p_bow: Vec3::new(0.0, 1.0, 1.5),
                p_arrow: Vec3::new(0.0, 0.5, 1.4)
            }
        );
        assert_eq!(
            decode_client(r#"{"type":"release"}"#).unwrap(),
            ClientMessage::Release {}
        );
        assert_eq!(
            decode_client(r#"{"type":"set_policy","policy":"apf"}"#).unwrap(),
            ClientMessage::SetPolicy {
                policy: PolicyKind::Apf
            }
        );
        for bad in [
            "",
            "{}",
            "[1,2]",
            r#"{"type":"fire"}"#,
            r#"{"type":"aim","p_bow":[0,1]}"#,
            r#"{"type":"release","extra":1}"#,
            r#"{"type":"set_policy","policy":"dqn"}"#,
        ] {
            assert!(
                decode_client(bad).unwrap_err().starts_with("malformed message"),
                "{bad}"
            );
        }
    }

    #[test]
    fn server_messages_round_trip() {
        let m = ServerMessage::Error(ErrorReply {
            session: 3,
            phase: Phase::InFlight,
            message: "x".into(),
        });
        let text = encode(&m);
        assert!(text.starts_with(r#"{"type":"error""#));
        assert_eq!(decode_server(&text).unwrap(), m);
        assert_eq!(m.kind(), "error");
    }
}
