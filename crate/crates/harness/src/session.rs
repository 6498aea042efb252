//! One player's game: aim, release, watch the swarm dodge, collect points.
//!
//! Sessions are driven by two calls only: [`Session::handle`] for incoming
//! client messages and [`Session::tick`] for the passage of time.

use std::sync::Arc;

use archery_core::a2c::AgentNets;
use archery_core::ballistics::{
    launch, sample_trajectory, score_shot, trajectory_point, Gate, HandPose, LaunchState, SampledTrajectory,
    ShotOutcome, TrajectoryParams, DRONE_MASS,
};
use archery_core::env::{self, DoneReason, EnvState};
use archery_core::haptics::{gameplay_contact, ContactCommand};
use archery_core::policy::{ApfPolicy, DrlPolicy, PolicyKind, SwarmPolicy};
use archery_core::Vec3;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::protocol::{decode_client, ClientMessage, ErrorReply, LaunchInfo, Phase, Scored, ServerMessage, Telemetry};

/// Sample spacing used to find gate crossings, s.
pub const SCORE_DT: f64 = 1e-3;

/// Read-only configuration shared by every session of a server.
#[derive(Debug, Clone)]
pub struct GameSetup {
    pub config: RunConfig,
    pub nets: Option<AgentNets>,
}

impl GameSetup {
    pub fn new(config: RunConfig, nets: Option<AgentNets>) -> Result<Self, CliError> {
        config.validate()?;
        if let Some(n) = &nets {
            n.check_compatible(&config.env)?;
        }
        if config.serve.policy == PolicyKind::Drl && nets.is_none() {
            return Err(CliError::config("serve.policy: `drl` needs a weights file"));
        }
        Ok(Self { config, nets })
    }
}

#[derive(Debug, Clone)]
struct Aim {
    launch: LaunchState,
    params: TrajectoryParams,
    preview: SampledTrajectory,
}

#[derive(Debug, Clone)]
struct Flight {
    aim: Aim,
    t: f64,
    landing: f64,
    outcome: ShotOutcome,
}

pub struct Session {
    id: u64,
    setup: Arc<GameSetup>,
    gates: Vec<Gate>,
    phase: Phase,
    hands: Option<HandPose>,
    aim: Option<Aim>,
    flight: Option<Flight>,
    env_prev: EnvState,
    env_state: EnvState,
    env_reason: Option<DoneReason>,
    policy_kind: PolicyKind,
    drl: Option<DrlPolicy>,
    apf: ApfPolicy,
    score: u32,
    shots: u32,
    seq: u64,
}

fn flat(traj: &SampledTrajectory) -> Vec<[f64; 4]> {
    traj.points.iter().map(|p| [p.t, p.pos.x, p.pos.y, p.pos.z]).collect()
}

impl Session {
    pub fn new(id: u64, setup: Arc<GameSetup>) -> Self {
        let gates = setup.config.gates.gates();
        let drl = setup.nets.clone().map(|n| DrlPolicy::new(n, setup.config.seed));
        let apf = ApfPolicy(setup.config.apf);
        let policy_kind = setup.config.serve.policy;
        let idle = Self::idle_env(&setup);
        Self {
            id,
            gates,
            phase: Phase::Aiming,
            hands: None,
            aim: None,
            flight: None,
            env_prev: idle.clone(),
            env_state: idle,
            env_reason: None,
            policy_kind,
            drl,
            apf,
            score: 0,
            shots: 0,
            seq: 0,
            setup,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn score(&self) -> u32 {
        self.score
    }

    pub fn policy(&self) -> PolicyKind {
        self.policy_kind
    }

    pub fn env_state(&self) -> &EnvState {
        &self.env_state
    }

    pub fn shots_total(&self) -> u32 {
        self.gates.len() as u32 * self.setup.config.gates.shots_per_gate
    }

    /// Gate the next shot has to pass, `None` once all shots are taken.
    pub fn target_gate(&self) -> Option<usize> {
        let shot = match self.phase {
            Phase::InFlight => self.shots - 1,
            _ => self.shots,
        };
        (shot < self.shots_total()).then(|| (shot / self.setup.config.gates.shots_per_gate) as usize)
    }

    /// Drones hovering on their slots with no arrow in the air.
    fn idle_env(setup: &GameSetup) -> EnvState {
        let cfg = &setup.config.env;
        let parked = TrajectoryParams::from_velocity(cfg.arena.min, Vec3::ZERO, cfg.g);
        let mut s = env::reset_with_arrow(cfg, parked);
        s.arrow_active = false;
        s
    }

    pub fn error_reply(&self, message: impl Into<String>) -> ServerMessage {
        ServerMessage::Error(ErrorReply {
            session: self.id,
            phase: self.phase,
            message: message.into(),
        })
    }

    /// Parses and applies one text frame. Malformed input yields an error
    /// reply and leaves the session untouched.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match decode_client(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![self.error_reply(e)],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        let reply = match msg {
            ClientMessage::Aim { p_bow, p_arrow } => self.on_aim(HandPose::new(p_bow, p_arrow)),
            ClientMessage::Release {} => self.on_release(),
            ClientMessage::Reset {} => {
                self.on_reset();
                Ok(())
            }
            ClientMessage::SetPolicy { policy } => self.on_set_policy(policy),
        };
        match reply {
            Ok(()) => vec![self.telemetry()],
            Err(e) => vec![self.error_reply(e)],
        }
    }

    fn on_aim(&mut self, hands: HandPose) -> Result<(), String> {
        if self.phase == Phase::InFlight {
            return Err("aim ignored: shot in flight".into());
        }
        if !hands.is_finite() {
            return Err("aim rejected: hand positions must be finite".into());
        }
        let cfg = &self.setup.config;
        let aimed = launch(&cfg.bow, &hands, DRONE_MASS, cfg.env.g).and_then(|(launch, params)| {
            let preview = sample_trajectory(&params, cfg.serve.preview_dt, cfg.env.arena.min.z)?;
            Ok(Aim {
                launch,
                params,
                preview,
            })
        });
        let aim = aimed.map_err(|e| e.to_string())?;
        if self.phase == Phase::Scored {
            self.back_to_aiming();
        }
        self.hands = Some(hands);
        self.aim = Some(aim);
        Ok(())
    }

    fn back_to_aiming(&mut self) {
        self.phase = Phase::Aiming;
        self.flight = None;
        self.env_state = Self::idle_env(&self.setup);
        self.env_prev = self.env_state.clone();
        self.env_reason = None;
    }

    fn on_release(&mut self) -> Result<(), String> {
        if self.phase != Phase::Aiming {
            return Err("release ignored: not aiming".into());
        }
        if self.shots >= self.shots_total() {
            return Err(format!(
                "release ignored: all {} shots taken, send reset",
                self.shots_total()
            ));
        }
        let aim = self.aim.clone().ok_or("release ignored: no valid aim")?;
        let cfg = &self.setup.config;
        let fine = sample_trajectory(&aim.params, SCORE_DT, cfg.env.arena.min.z).map_err(|e| e.to_string())?;
        let outcome = score_shot(&fine.points, &self.gates);
        let landing = aim.preview.last().map_or(0.0, |p| p.t);
        self.env_state = env::reset_with_arrow(&cfg.env, aim.params);
        self.env_prev = self.env_state.clone();
        self.env_reason = None;
        let seed = cfg.seed ^ (u64::from(self.shots) << 32) ^ self.id;
        self.apf.reseed(seed);
        if let Some(d) = &mut self.drl {
            d.reseed(seed);
        }
        self.shots += 1;
        self.phase = Phase::InFlight;
        self.flight = Some(Flight {
            aim,
            t: 0.0,
            landing,
            outcome,
        });
        Ok(())
    }

    fn on_reset(&mut self) {
        self.back_to_aiming();
        self.hands = None;
        self.aim = None;
        self.score = 0;
        self.shots = 0;
    }

    fn on_set_policy(&mut self, policy: PolicyKind) -> Result<(), String> {
        match policy {
            PolicyKind::Drl if self.drl.is_none() => Err("policy drl unavailable: server has no weights".into()),
            PolicyKind::Drl | PolicyKind::Apf => {
                self.policy_kind = policy;
                Ok(())
            }
            other => Err(format!("policy {} not selectable, use drl or apf", other.as_str())),
        }
    }

    fn step_env(&mut self) -> Result<(), String> {
        let cfg = &self.setup.config.env;
        let policy: &mut dyn SwarmPolicy = match self.policy_kind {
            PolicyKind::Drl => self.drl.as_mut().ok_or("no weights loaded")?,
            _ => &mut self.apf,
        };
        let actions = policy.act(&self.env_state, cfg).map_err(|e| e.to_string())?;
        let r = env::step(&self.env_state, &actions, cfg).map_err(|e| e.to_string())?;
        self.env_prev = std::mem::replace(&mut self.env_state, r.state);
        if r.done {
            self.env_reason = r.reason;
        }
        Ok(())
    }

    /// Advances simulated time by `dt` seconds and returns what the client
    /// should receive: a `scored` message when a shot lands, then telemetry.
    pub fn tick(&mut self, dt: f64) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        if self.phase == Phase::InFlight {
            let env_dt = self.setup.config.env.dt;
            let flight = self.flight.as_mut().expect("in flight");
            flight.t = (flight.t + dt).min(flight.landing);
            let t = flight.t;
            let landed = t >= flight.landing;
            while !self.env_state.done && t + 1e-9 >= (self.env_state.t_step + 1) as f64 * env_dt {
                if let Err(e) = self.step_env() {
                    out.push(self.error_reply(e));
                    break;
                }
            }
            if landed {
                out.push(self.finish_shot());
            }
        }
        out.push(self.telemetry());
        out
    }

    fn finish_shot(&mut self) -> ServerMessage {
        let flight = self.flight.as_ref().expect("in flight");
        let target = ((self.shots - 1) / self.setup.config.gates.shots_per_gate) as usize;
        let hit = flight.outcome.gate;
        let points = if hit == Some(target) { flight.outcome.points } else { 0 };
        self.score += points;
        self.phase = Phase::Scored;
        ServerMessage::Scored(Scored {
            session: self.id,
            shot: self.shots,
            target_gate: target,
            gate: hit,
            gate_name: hit.map(|g| self.gates[g].name.clone()),
            crossing: flight.outcome.crossing,
            points,
            total: self.score,
            complete: self.shots >= self.shots_total(),
        })
    }

    pub fn telemetry(&mut self) -> ServerMessage {
        self.seq += 1;
        let cfg = &self.setup.config;
        let stretch = self.hands.map_or(0.0, |h| h.stretch());
        let (trajectory, launch_src, t, arrow) = match (&self.flight, &self.aim) {
            (Some(f), _) => (
                flat(&f.aim.preview),
                Some(&f.aim),
                f.t,
                Some(trajectory_point(&f.aim.params, f.t)),
            ),
            (None, Some(a)) => (flat(&a.preview), Some(a), 0.0, None),
            (None, None) => (Vec::new(), None, 0.0, None),
        };
        let launch = launch_src.map(|a| LaunchInfo {
            energy: a.launch.energy,
            speed: a.launch.speed,
            velocity: a.launch.velocity,
            theta: a.params.theta,
            gamma_azimuth: a.params.gamma_azimuth,
        });
        let contact = if self.phase == Phase::Aiming {
            gameplay_contact(stretch)
        } else {
            ContactCommand::rest()
        };
        let env_dt = cfg.env.dt;
        let alpha = if self.env_state.t_step == 0 {
            1.0
        } else {
            ((t - (self.env_state.t_step - 1) as f64 * env_dt) / env_dt).clamp(0.0, 1.0)
        };
        let drones_interp = self
            .env_prev
            .agent_pos
            .iter()
            .zip(&self.env_state.agent_pos)
            .map(|(a, b)| a.lerp(*b, alpha))
            .collect();
        ServerMessage::Telemetry(Box::new(Telemetry {
            session: self.id,
            seq: self.seq,
            phase: self.phase,
            policy: self.policy_kind,
            t,
            hands: self.hands,
            stretch,
            tension_bar: (stretch / cfg.bow.max_stretch).min(1.0),
            tension: cfg.bow.tension(stretch),
            contact,
            launch,
            trajectory,
            arrow,
            drones: self.env_state.agent_pos.clone(),
            drones_interp,
            env_step: self.env_state.t_step,
            done_reason: self.env_reason.map(|r| r.as_str().to_string()),
            score: self.score,
            shots_taken: self.shots,
            shots_total: self.shots_total(),
            target_gate: self.target_gate(),
            gates: self.gates.clone(),
        }))
    }
}
