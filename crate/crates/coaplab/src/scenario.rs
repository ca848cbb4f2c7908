//! Deterministic regeneration of the four-host CoAP DoS scenario: one
//! server, one benign client, and two coordinated attackers exchanging
//! traffic on a discrete-event virtual clock.
//!
//! The virtual clock makes a multi-hour capture reproducible in seconds:
//! identical configuration (including the seed) yields a byte-identical
//! packet stream and attack log.

use std::collections::HashSet;
use std::net::Ipv4Addr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::capture::{frame_packet, CaptureError, PacketRecord};
use crate::coap::{make_request, make_response, Method};
use crate::seed::derive_seed;

/// Gap between consecutive packets inside a DoS burst. A 300-packet
/// burst then spans 0.3 s, comfortably inside one 10-second window.
pub const BURST_SPACING_US: u64 = 1_000;

/// Fixed virtual server turnaround between a request and its response.
pub const RESPONSE_LATENCY_US: u64 = 2_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario requires exactly one server endpoint, found {0}")]
    ServerCount(usize),
    #[error("duplicate endpoint address {0}")]
    DuplicateIp(Ipv4Addr),
    #[error("benign payload range {0}..{1} is inverted")]
    BadPayloadRange(usize, usize),
    #[error("benign sleep range {0}..{1} is inverted")]
    BadSleepRange(f64, f64),
    #[error("attack burst count must be positive")]
    ZeroBurst(),
    #[error("attack interval must be positive")]
    ZeroInterval(),
    #[error("attack probability {0} outside [0, 1]")]
    BadAttackProbability(f64),
    #[error("step sampling requires mixed attacker mode")]
    NotMixedMode,
    #[error("capture: {0}")]
    Capture(#[from] CaptureError),
}

/// Part an endpoint plays in the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Server,
    Benign,
    Attacker,
}

/// One machine on the emulated network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub role: Role,
    pub ip: Ipv4Addr,
    pub port: u16,
    /// Locally administered MAC, a deterministic function of the
    /// endpoint index in the default layout.
    pub mac: [u8; 6],
}

fn default_mac(index: u8) -> [u8; 6] {
    [0x02, 0x00, 0x00, 0x00, 0x00, index + 1]
}

/// How the attacker endpoints behave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackerMode {
    /// Both attackers burst on the shared schedule.
    Coordinated,
    /// Attackers mimic a benign client and burst at random steps.
    Mixed,
}

/// Full scenario configuration. Serialized form mirrors the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Virtual capture length in seconds.
    pub duration: u64,
    /// Seconds between coordinated burst starts.
    pub attack_interval: u64,
    /// PUT requests per burst.
    pub attack_burst_count: u32,
    /// Payload bytes per attack PUT.
    pub attack_payload_len: usize,
    pub benign_payload_min: usize,
    pub benign_payload_max: usize,
    /// Benign think-time bounds in seconds.
    pub benign_sleep_min: f64,
    pub benign_sleep_max: f64,
    pub attacker_mode: AttackerMode,
    /// Per-step burst probability in mixed mode.
    pub p_attack: f64,
    pub rng_seed: u64,
    pub endpoints: Vec<EndpointConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration: 3600,
            attack_interval: 600,
            attack_burst_count: 300,
            attack_payload_len: 9203,
            benign_payload_min: 100,
            benign_payload_max: 300,
            benign_sleep_min: 2.0,
            benign_sleep_max: 7.0,
            attacker_mode: AttackerMode::Coordinated,
            p_attack: 0.02,
            rng_seed: 42,
            endpoints: default_endpoints(),
        }
    }
}

/// The reference network layout: CoAP server on .9:8080, benign client
/// on .2, attackers on .12 and .5.
pub fn default_endpoints() -> Vec<EndpointConfig> {
    vec![
        EndpointConfig {
            role: Role::Server,
            ip: Ipv4Addr::new(192, 168, 1, 9),
            port: 8080,
            mac: default_mac(0),
        },
        EndpointConfig {
            role: Role::Benign,
            ip: Ipv4Addr::new(192, 168, 1, 2),
            port: 49152,
            mac: default_mac(1),
        },
        EndpointConfig {
            role: Role::Attacker,
            ip: Ipv4Addr::new(192, 168, 1, 12),
            port: 49153,
            mac: default_mac(2),
        },
        EndpointConfig {
            role: Role::Attacker,
            ip: Ipv4Addr::new(192, 168, 1, 5),
            port: 49154,
            mac: default_mac(3),
        },
    ]
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.benign_payload_min > self.benign_payload_max {
            return Err(ScenarioError::BadPayloadRange(
                self.benign_payload_min,
                self.benign_payload_max,
            ));
        }
        if self.benign_sleep_min > self.benign_sleep_max
            || self.benign_sleep_min < 0.0
            || !self.benign_sleep_min.is_finite()
            || !self.benign_sleep_max.is_finite()
        {
            return Err(ScenarioError::BadSleepRange(
                self.benign_sleep_min,
                self.benign_sleep_max,
            ));
        }
        if self.attack_burst_count == 0 {
            return Err(ScenarioError::ZeroBurst());
        }
        if self.attack_interval == 0 {
            return Err(ScenarioError::ZeroInterval());
        }
        if !(0.0..=1.0).contains(&self.p_attack) {
            return Err(ScenarioError::BadAttackProbability(self.p_attack));
        }
        let servers = self.endpoints.iter().filter(|e| e.role == Role::Server).count();
        if servers != 1 {
            return Err(ScenarioError::ServerCount(servers));
        }
        let mut seen = HashSet::new();
        for e in &self.endpoints {
            if !seen.insert(e.ip) {
                return Err(ScenarioError::DuplicateIp(e.ip));
            }
        }
        Ok(())
    }

    pub fn server(&self) -> &EndpointConfig {
        self.endpoints
            .iter()
            .find(|e| e.role == Role::Server)
            .expect("validated config has one server")
    }

    pub fn attacker_ips(&self) -> HashSet<Ipv4Addr> {
        self.endpoints
            .iter()
            .filter(|e| e.role == Role::Attacker)
            .map(|e| e.ip)
            .collect()
    }
}

/// One completed DoS burst, as recorded in the attack log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackEvent {
    pub attacker_ip: Ipv4Addr,
    /// Timestamp of the first burst packet, microseconds.
    pub start_us: u64,
    /// Timestamp of the last burst packet, microseconds.
    pub end_us: u64,
    pub packets_sent: u32,
}

/// Monotone virtual clock driving the discrete-event run.
#[derive(Debug, Clone, Copy, Default)]
pub struct VirtualClock {
    now_us: u64,
}

impl VirtualClock {
    pub fn now_us(&self) -> u64 {
        self.now_us
    }

    /// Advance to an absolute time; the clock never moves backwards.
    pub fn advance_to(&mut self, ts_us: u64) {
        self.now_us = self.now_us.max(ts_us);
    }

    pub fn advance_by(&mut self, delta_us: u64) {
        self.now_us += delta_us;
    }
}

/// What the benign client does next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenignAction {
    pub method: Method,
    /// Drawn payload length; GET still sends an empty payload on the wire.
    pub payload_len: usize,
    /// Think time in seconds before the following request.
    pub sleep_s: f64,
}

/// Draw the benign client's next request: method uniform over
/// GET/PUT/POST, payload length and think time uniform in their
/// configured ranges. Draw order is method, length, sleep.
pub fn benign_next_action(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig) -> BenignAction {
    let method = match rng.random_range(0..3u8) {
        0 => Method::Get,
        1 => Method::Put,
        _ => Method::Post,
    };
    let payload_len = rng.random_range(cfg.benign_payload_min..=cfg.benign_payload_max);
    let sleep_s = rng.random_range(cfg.benign_sleep_min..=cfg.benign_sleep_max);
    BenignAction { method, payload_len, sleep_s }
}

/// Build one DoS burst: `attack_burst_count` PUT requests of
/// `attack_payload_len` bytes with consecutive message ids.
pub fn attacker_burst(
    cfg: &ScenarioConfig,
    first_message_id: u16,
) -> Vec<crate::coap::CoapMessage> {
    (0..cfg.attack_burst_count)
        .map(|i| {
            let mid = first_message_id.wrapping_add(i as u16);
            make_request(Method::Put, filler_payload(cfg.attack_payload_len), mid)
                .expect("PUT accepts any payload")
        })
        .collect()
}

/// Deterministic payload filler: a cycling lowercase alphabet.
fn filler_payload(len: usize) -> Vec<u8> {
    (0..len).map(|i| b'a' + (i % 26) as u8).collect()
}

/// Burst start times for the coordinated schedule: one entry per
/// attacker at t = 0, interval, 2*interval, ... up to and including the
/// scenario duration. A zero duration schedules nothing.
pub fn attack_schedule(cfg: &ScenarioConfig) -> Vec<(Ipv4Addr, u64)> {
    let mut schedule = Vec::new();
    if cfg.duration == 0 || cfg.attack_interval == 0 {
        return schedule;
    }
    for endpoint in cfg.endpoints.iter().filter(|e| e.role == Role::Attacker) {
        let mut t = 0u64;
        while t <= cfg.duration {
            schedule.push((endpoint.ip, t * 1_000_000));
            t += cfg.attack_interval;
        }
    }
    schedule
}

/// One step of a mixed-mode attacker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixedStep {
    Benign(BenignAction),
    DosBurst,
}

/// Draw the next mixed-mode step: a burst with probability `p_attack`,
/// otherwise a benign action from the same distribution as
/// [`benign_next_action`]. The burst draw is consumed first.
pub fn mixed_attacker_step(
    rng: &mut ChaCha8Rng,
    cfg: &ScenarioConfig,
) -> Result<MixedStep, ScenarioError> {
    if cfg.attacker_mode != AttackerMode::Mixed {
        return Err(ScenarioError::NotMixedMode);
    }
    if rng.random::<f64>() < cfg.p_attack {
        Ok(MixedStep::DosBurst)
    } else {
        Ok(MixedStep::Benign(benign_next_action(rng, cfg)))
    }
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    /// All frames, time-ordered.
    pub packets: Vec<PacketRecord>,
    /// One event per executed burst, sorted by start time.
    pub attack_log: Vec<AttackEvent>,
}

struct Lane {
    packets: Vec<PacketRecord>,
    events: Vec<AttackEvent>,
}

/// Run the scenario end to end. Pure function of the configuration:
/// the same config (including seed) reproduces the output byte for byte.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput, ScenarioError> {
    cfg.validate()?;
    if cfg.duration == 0 {
        return Ok(ScenarioOutput { packets: Vec::new(), attack_log: Vec::new() });
    }
    let server = cfg.server().clone();
    let duration_us = cfg.duration * 1_000_000;

    let mut lanes: Vec<Lane> = Vec::new();
    let mut benign_index = 0usize;
    let mut attacker_index = 0usize;
    for endpoint in &cfg.endpoints {
        match endpoint.role {
            Role::Server => {}
            Role::Benign => {
                let seed = derive_seed(cfg.rng_seed, &format!("benign/{benign_index}"));
                lanes.push(run_benign_lane(cfg, endpoint, &server, duration_us, seed)?);
                benign_index += 1;
            }
            Role::Attacker => {
                let seed = derive_seed(cfg.rng_seed, &format!("attacker/{attacker_index}"));
                lanes.push(match cfg.attacker_mode {
                    AttackerMode::Coordinated => {
                        run_coordinated_lane(cfg, endpoint, &server)?
                    }
                    AttackerMode::Mixed => {
                        run_mixed_lane(cfg, endpoint, &server, duration_us, seed)?
                    }
                });
                attacker_index += 1;
            }
        }
    }

    let mut packets = Vec::new();
    let mut attack_log = Vec::new();
    for lane in lanes {
        packets.extend(lane.packets);
        attack_log.extend(lane.events);
    }
    // Stable sorts keep the per-lane emission order as the tie-break,
    // so the merge is deterministic.
    packets.sort_by_key(|p| p.ts_us);
    attack_log.sort_by_key(|e| e.start_us);
    Ok(ScenarioOutput { packets, attack_log })
}

fn run_benign_lane(
    cfg: &ScenarioConfig,
    client: &EndpointConfig,
    server: &EndpointConfig,
    duration_us: u64,
    seed: u64,
) -> Result<Lane, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clock = VirtualClock::default();
    let mut packets = Vec::new();
    let mut message_id: u16 = 0;
    while clock.now_us() < duration_us {
        let action = benign_next_action(&mut rng, cfg);
        let payload = match action.method {
            Method::Get => Vec::new(),
            _ => filler_payload(action.payload_len),
        };
        let request = make_request(action.method, payload, message_id)
            .expect("benign payloads respect method rules");
        let response_payload = match action.method {
            Method::Get => b"ok".to_vec(),
            _ => Vec::new(),
        };
        let response = make_response(&request, response_payload)
            .expect("requests always have a response code");
        packets.push(frame_packet(&request, client, server, clock.now_us())?);
        packets.push(frame_packet(
            &response,
            server,
            client,
            clock.now_us() + RESPONSE_LATENCY_US,
        )?);
        message_id = message_id.wrapping_add(1);
        clock.advance_by(RESPONSE_LATENCY_US + (action.sleep_s * 1_000_000.0) as u64);
    }
    Ok(Lane { packets, events: Vec::new() })
}

/// Emit one burst starting at `start_us`; returns the logged event.
fn emit_burst(
    cfg: &ScenarioConfig,
    attacker: &EndpointConfig,
    server: &EndpointConfig,
    start_us: u64,
    message_id: &mut u16,
    packets: &mut Vec<PacketRecord>,
) -> Result<AttackEvent, ScenarioError> {
    let burst = attacker_burst(cfg, *message_id);
    *message_id = message_id.wrapping_add(cfg.attack_burst_count as u16);
    let mut last_ts = start_us;
    for (i, request) in burst.iter().enumerate() {
        let ts = start_us + i as u64 * BURST_SPACING_US;
        packets.push(frame_packet(request, attacker, server, ts)?);
        let response = make_response(request, Vec::new()).expect("PUT has a response code");
        packets.push(frame_packet(&response, server, attacker, ts + RESPONSE_LATENCY_US)?);
        last_ts = ts;
    }
    Ok(AttackEvent {
        attacker_ip: attacker.ip,
        start_us,
        end_us: last_ts,
        packets_sent: cfg.attack_burst_count,
    })
}

fn run_coordinated_lane(
    cfg: &ScenarioConfig,
    attacker: &EndpointConfig,
    server: &EndpointConfig,
) -> Result<Lane, ScenarioError> {
    let mut packets = Vec::new();
    let mut events = Vec::new();
    let mut message_id: u16 = 0;
    for (ip, start_us) in attack_schedule(cfg) {
        if ip != attacker.ip {
            continue;
        }
        events.push(emit_burst(cfg, attacker, server, start_us, &mut message_id, &mut packets)?);
    }
    Ok(Lane { packets, events })
}

fn run_mixed_lane(
    cfg: &ScenarioConfig,
    attacker: &EndpointConfig,
    server: &EndpointConfig,
    duration_us: u64,
    seed: u64,
) -> Result<Lane, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clock = VirtualClock::default();
    let mut packets = Vec::new();
    let mut events = Vec::new();
    let mut message_id: u16 = 0;
    while clock.now_us() < duration_us {
        match mixed_attacker_step(&mut rng, cfg)? {
            MixedStep::DosBurst => {
                let event =
                    emit_burst(cfg, attacker, server, clock.now_us(), &mut message_id, &mut packets)?;
                let burst_span = event.end_us - event.start_us;
                events.push(event);
                clock.advance_by(burst_span + RESPONSE_LATENCY_US);
            }
            MixedStep::Benign(action) => {
                let payload = match action.method {
                    Method::Get => Vec::new(),
                    _ => filler_payload(action.payload_len),
                };
                let request = make_request(action.method, payload, message_id)
                    .expect("benign payloads respect method rules");
                let response_payload = match action.method {
                    Method::Get => b"ok".to_vec(),
                    _ => Vec::new(),
                };
                let response = make_response(&request, response_payload)
                    .expect("requests always have a response code");
                packets.push(frame_packet(&request, attacker, server, clock.now_us())?);
                packets.push(frame_packet(
                    &response,
                    server,
                    attacker,
                    clock.now_us() + RESPONSE_LATENCY_US,
                )?);
                message_id = message_id.wrapping_add(1);
                clock.advance_by(RESPONSE_LATENCY_US + (action.sleep_s * 1_000_000.0) as u64);
            }
        }
    }
    Ok(Lane { packets, events })
}
