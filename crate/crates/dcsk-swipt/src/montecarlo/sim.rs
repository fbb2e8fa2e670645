//! Slot-level simulation of the buffer-aided relay and the baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::engine::{bit_errors, BitEngine, Hop};
use super::params::{ParamError, SystemParams};
use crate::channel::{draw_realization, ChannelProfile};
use crate::linksel::{
    apply_decision, decide_protocol1, decide_protocol2, decide_snr_baseline, Action, BufferState, LinkDecision,
    PacketRecord, SnrVariant, TraceRow,
};
use crate::swipt::{harvest, EnergyLedgerEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Harvested-energy comparison, forced transmission at the buffer boundaries.
    P1,
    /// Harvested-energy comparison, silent at the buffer boundaries.
    P2,
    /// Protocol 1 tables driven by an SNR comparison.
    Snr1,
    /// Protocol 2 tables driven by an SNR comparison.
    Snr2,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::P1 => "p1",
            Protocol::P2 => "p2",
            Protocol::Snr1 => "snr1",
            Protocol::Snr2 => "snr2",
        }
    }

    /// Whether boundary slots follow the silent-boundary rules.
    pub fn silent_boundaries(self) -> bool {
        matches!(self, Protocol::P2 | Protocol::Snr2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Direct S→D link over the summed distance.
    ConvSd,
    /// Two-slot SWIPT relay without a buffer; shortage is an outage.
    ConvNoBufferSwipt,
    /// Two-slot relay powered at P_S, no harvesting.
    ConvDcskRelay,
}

impl Baseline {
    pub fn as_str(self) -> &'static str {
        match self {
            Baseline::ConvSd => "conv_sd",
            Baseline::ConvNoBufferSwipt => "conv_no_buffer_swipt",
            Baseline::ConvDcskRelay => "conv_dcsk_relay",
        }
    }
}

/// Raw counters of a run; merging two tallies is exact.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub slots: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub sr_bit_errors: u64,
    pub rd_bit_errors: u64,
    pub packets: u64,
    /// Σ over delivered packets of (packet BER)², for the standard error.
    pub packet_ber_sq: f64,
    /// Σ (departure − arrival) over delivered packets.
    pub wait_slots: u64,
    pub occupancy_hist: Vec<u64>,
    pub shortage_slots: u64,
    pub sr_slots: u64,
    pub rd_slots: u64,
    pub silent_slots: u64,
    pub interior_slots: u64,
    pub interior_sr_wins: u64,
    pub empty_shortage_slots: u64,
    pub empty_arrivals: u64,
}

impl Tally {
    fn new(capacity: usize) -> Self {
        Self { occupancy_hist: vec![0; capacity + 1], ..Self::default() }
    }

    pub fn merge(&mut self, o: &Tally) {
        self.slots += o.slots;
        self.bits += o.bits;
        self.bit_errors += o.bit_errors;
        self.sr_bit_errors += o.sr_bit_errors;
        self.rd_bit_errors += o.rd_bit_errors;
        self.packets += o.packets;
        self.packet_ber_sq += o.packet_ber_sq;
        self.wait_slots += o.wait_slots;
        if self.occupancy_hist.len() < o.occupancy_hist.len() {
            self.occupancy_hist.resize(o.occupancy_hist.len(), 0);
        }
        for (a, b) in self.occupancy_hist.iter_mut().zip(&o.occupancy_hist) {
            *a += b;
        }
        self.shortage_slots += o.shortage_slots;
        self.sr_slots += o.sr_slots;
        self.rd_slots += o.rd_slots;
        self.silent_slots += o.silent_slots;
        self.interior_slots += o.interior_slots;
        self.interior_sr_wins += o.interior_sr_wins;
        self.empty_shortage_slots += o.empty_shortage_slots;
        self.empty_arrivals += o.empty_arrivals;
    }

    fn record_packet(&mut self, errors: u64, bits: u64) {
        self.packets += 1;
        self.bits += bits;
        self.bit_errors += errors;
        let r = errors as f64 / bits as f64;
        self.packet_ber_sq += r * r;
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Geometric-mean silent run length p/(1−p) from slot counts.
fn silent_run(hits: u64, misses: u64) -> f64 {
    if misses == 0 {
        if hits == 0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        hits as f64 / misses as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub end_to_end_ber: f64,
    /// Standard error of the BER over delivered packets.
    pub confidence: f64,
    pub avg_delay_slots: f64,
    /// Mean departure − arrival over delivered packets.
    pub queue_delay: f64,
    /// Empty-buffer shortage slots per admitted packet.
    pub t_st: f64,
    /// Empty-buffer contention slots per admitted packet (silent-boundary protocols).
    pub t_cs: f64,
    pub occupancy_hist: Vec<u64>,
    pub shortage_rate: f64,
    pub p_sr_selected: f64,
    pub p_rd_selected: f64,
    /// S→R comparison wins among slots with 0 < φ < J.
    pub interior_sr_frequency: f64,
    pub sr_ber: f64,
    pub rd_ber: f64,
    /// Set when the run delivered nothing and the metrics are undefined.
    pub flag: Option<String>,
    pub tally: Tally,
}

impl RunResult {
    pub fn from_tally(tally: Tally, silent_boundaries: bool, delay_terms: bool) -> Self {
        let t = &tally;
        let flag = (t.packets == 0).then(|| "no packets delivered".to_string());
        let ber = ratio(t.bit_errors, t.bits);
        let confidence = if t.packets > 1 {
            let n = t.packets as f64;
            let var = (t.packet_ber_sq / n - ber * ber).max(0.0) * n / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let queue_delay = if t.packets > 0 { t.wait_slots as f64 / t.packets as f64 } else { f64::NAN };
        let observed: u64 = t.occupancy_hist.iter().sum();
        let empty = t.occupancy_hist.first().copied().unwrap_or(0);
        let (t_st, t_cs) = match (delay_terms, silent_boundaries) {
            (false, _) => (0.0, 0.0),
            (true, false) => (silent_run(t.empty_shortage_slots, t.empty_arrivals), 0.0),
            (true, true) => {
                (silent_run(t.shortage_slots, t.slots - t.shortage_slots), silent_run(empty, observed - empty))
            }
        };
        let avg_delay_slots = if t.packets > 0 { queue_delay + t_st + t_cs } else { f64::NAN };
        Self {
            end_to_end_ber: ber,
            confidence,
            avg_delay_slots,
            queue_delay,
            t_st,
            t_cs,
            occupancy_hist: t.occupancy_hist.clone(),
            shortage_rate: ratio(t.shortage_slots, t.slots),
            p_sr_selected: ratio(t.sr_slots, t.slots),
            p_rd_selected: ratio(t.rd_slots, t.slots),
            interior_sr_frequency: ratio(t.interior_sr_wins, t.interior_slots),
            sr_ber: ratio(t.sr_bit_errors, t.bits),
            rd_ber: ratio(t.rd_bit_errors, t.bits),
            flag,
            tally,
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

struct Setup {
    profile_sr: ChannelProfile<f64>,
    profile_rd: ChannelProfile<f64>,
    engine: BitEngine,
    n0_si: f64,
}

fn setup(params: &SystemParams) -> Result<Setup, ParamError> {
    params.validate()?;
    Ok(Setup {
        profile_sr: params.profile_sr()?,
        profile_rd: params.profile_rd()?,
        engine: BitEngine::new(params.engine, params.beta, params.normalization),
        n0_si: params.n0_si_effective()?,
    })
}

/// Runs one protocol for `params.slots` observed slots after warm-up.
pub fn run_protocol_sim(params: &SystemParams, protocol: Protocol) -> Result<RunResult, ParamError> {
    Ok(simulate(params, protocol, 0, None)?.0)
}

/// As [`run_protocol_sim`], also returning up to `trace_limit` decision rows.
pub fn run_protocol_traced(
    params: &SystemParams,
    protocol: Protocol,
    trace_limit: usize,
) -> Result<(RunResult, Vec<TraceRow>), ParamError> {
    simulate(params, protocol, 0, Some(trace_limit))
}

/// Raw counters of one independent trial (RNG stream `trial`).
pub fn protocol_trial(params: &SystemParams, protocol: Protocol, trial: u64) -> Result<Tally, ParamError> {
    Ok(simulate(params, protocol, trial, None)?.0.tally)
}

fn simulate(
    params: &SystemParams,
    protocol: Protocol,
    stream: u64,
    trace_limit: Option<usize>,
) -> Result<(RunResult, Vec<TraceRow>), ParamError> {
    let s = setup(params)?;
    let swipt = params.swipt();
    let mut rng = rng_for(params.seed, stream);
    let mut buffer = BufferState::new(params.buffer_size);
    let mut tally = Tally::new(params.buffer_size);
    let mut trace = Vec::new();
    let warmup = params.warmup_slots();
    let sr_gain = (1.0 - params.theta).sqrt();
    let mut next_id = 0u64;
    let j = params.buffer_size;
    let w1 = params.w1();
    let w2 = params.w2();

    for slot in 0..warmup + params.slots {
        let observed = slot >= warmup;
        let real_sr = draw_realization(&s.profile_sr, slot, &mut rng);
        let real_rd = draw_realization(&s.profile_rd, slot, &mut rng);
        let report = harvest(&real_sr, &real_rd, &swipt);
        let phi = buffer.occupancy();
        let sr_wins = report.p_sr_eh >= params.delta * report.p_dr_eh;

        let decision: LinkDecision = match protocol {
            Protocol::P1 => decide_protocol1(&buffer, &report, params.delta),
            Protocol::P2 => decide_protocol2(&buffer, &report, params.delta),
            Protocol::Snr1 | Protocol::Snr2 => {
                let gamma_sr = w1 * report.p_sr_eh;
                let gamma_rd = buffer.head().map_or(0.0, |p| w2 * p.ledger.residual_power * report.p_dr_eh);
                let variant = if protocol == Protocol::Snr1 { SnrVariant::Table1 } else { SnrVariant::Table2 };
                decide_snr_baseline(&buffer, &report, gamma_sr, gamma_rd, params.delta, variant)
            }
        };

        if observed {
            tally.slots += 1;
            tally.occupancy_hist[phi] += 1;
            tally.shortage_slots += u64::from(report.shortage);
            if phi > 0 && phi < j {
                tally.interior_slots += 1;
                tally.interior_sr_wins += u64::from(sr_wins);
            }
            if phi == 0 {
                tally.empty_shortage_slots += u64::from(!report.decodable());
                tally.empty_arrivals += u64::from(decision.action == Action::SrReceive);
            }
            match decision.action {
                Action::SrReceive => tally.sr_slots += 1,
                Action::RdTransmit => tally.rd_slots += 1,
                Action::Silent => tally.silent_slots += 1,
            }
        }
        if let Some(limit) = trace_limit {
            if trace.len() < limit {
                trace.push(TraceRow { slot, occupancy: phi, action: decision.action, cause: decision.cause });
            }
        }

        let packet_in = if decision.action == Action::SrReceive {
            let source_bits = random_bits(params.packet_bits, &mut rng);
            let hop = Hop { tx_power: params.p_s, gain: sr_gain, n0_front: params.n0_sr, n0_back: s.n0_si };
            let decoded_bits = s.engine.transmit(&source_bits, &real_sr, hop, &mut rng);
            let ledger = EnergyLedgerEntry::new(next_id, report.p_sr_eh - params.p_i)
                .expect("decodable reports leave a positive residual");
            next_id += 1;
            Some(PacketRecord { id: ledger.packet_id, source_bits, decoded_bits, arrival_slot: slot, ledger })
        } else {
            None
        };

        let sent = apply_decision(&mut buffer, decision, packet_in).expect("tables respect the buffer bounds");
        if let Some(p) = sent {
            let hop = Hop { tx_power: p.ledger.residual_power, gain: 1.0, n0_front: params.n0_rd, n0_back: 0.0 };
            let received = s.engine.transmit(&p.decoded_bits, &real_rd, hop, &mut rng);
            if observed {
                let n = p.source_bits.len() as u64;
                tally.sr_bit_errors += bit_errors(&p.source_bits, &p.decoded_bits);
                tally.rd_bit_errors += bit_errors(&p.decoded_bits, &received);
                tally.record_packet(bit_errors(&p.source_bits, &received), n);
                tally.wait_slots += slot - p.arrival_slot;
            }
        }
    }

    if tally.packets == 0 {
        log::warn!("{}: no packets delivered in {} slots", protocol.as_str(), params.slots);
    } else if (tally.bit_errors as f64) < 10.0 && params.n0_sr > 0.0 {
        log::warn!("{}: only {} bit errors observed; BER estimate is coarse", protocol.as_str(), tally.bit_errors);
    }
    Ok((RunResult::from_tally(tally, protocol.silent_boundaries(), true), trace))
}

/// Runs a baseline for `params.slots` packets.
pub fn run_baseline_sim(params: &SystemParams, baseline: Baseline) -> Result<RunResult, ParamError> {
    Ok(RunResult::from_tally(baseline_trial(params, baseline, 0)?, false, false))
}

/// Raw counters of one baseline trial; one packet per slot pair.
pub fn baseline_trial(params: &SystemParams, baseline: Baseline, stream: u64) -> Result<Tally, ParamError> {
    let s = setup(params)?;
    let swipt = params.swipt();
    let mut rng = rng_for(params.seed ^ 0x5bd1_e995, stream);
    let mut tally = Tally::new(0);
    let direct = ChannelProfile::new(
        params.taps_sr.powers.clone(),
        params.taps_sr.delays.clone(),
        params.d_sr + params.d_rd,
        params.alpha,
    )?;
    let sr_gain = (1.0 - params.theta).sqrt();

    for slot in 0..params.slots {
        tally.slots += 1;
        let bits = random_bits(params.packet_bits, &mut rng);
        let n = bits.len() as u64;
        let received = match baseline {
            Baseline::ConvSd => {
                let real = draw_realization(&direct, slot, &mut rng);
                let hop = Hop { tx_power: params.p_s, gain: 1.0, n0_front: params.n0_sr, n0_back: 0.0 };
                s.engine.transmit(&bits, &real, hop, &mut rng)
            }
            Baseline::ConvNoBufferSwipt => {
                let real_sr = draw_realization(&s.profile_sr, slot, &mut rng);
                let real_rd = draw_realization(&s.profile_rd, slot, &mut rng);
                let report = harvest(&real_sr, &real_rd, &swipt);
                if report.decodable() {
                    let hop = Hop { tx_power: params.p_s, gain: sr_gain, n0_front: params.n0_sr, n0_back: s.n0_si };
                    let decoded = s.engine.transmit(&bits, &real_sr, hop, &mut rng);
                    tally.sr_bit_errors += bit_errors(&bits, &decoded);
                    // fresh R→D fading for the forwarding slot
                    let real_fw = draw_realization(&s.profile_rd, slot, &mut rng);
                    let p_r = report.p_sr_eh - params.p_i;
                    let hop = Hop { tx_power: p_r, gain: 1.0, n0_front: params.n0_rd, n0_back: 0.0 };
                    let out = s.engine.transmit(&decoded, &real_fw, hop, &mut rng);
                    tally.rd_bit_errors += bit_errors(&decoded, &out);
                    out
                } else {
                    tally.shortage_slots += 1;
                    random_bits(bits.len(), &mut rng)
                }
            }
            Baseline::ConvDcskRelay => {
                let real_sr = draw_realization(&s.profile_sr, slot, &mut rng);
                let real_rd = draw_realization(&s.profile_rd, slot, &mut rng);
                let hop = Hop { tx_power: params.p_s, gain: 1.0, n0_front: params.n0_sr, n0_back: 0.0 };
                let decoded = s.engine.transmit(&bits, &real_sr, hop, &mut rng);
                tally.sr_bit_errors += bit_errors(&bits, &decoded);
                let hop = Hop { tx_power: params.p_s, gain: 1.0, n0_front: params.n0_rd, n0_back: 0.0 };
                let out = s.engine.transmit(&decoded, &real_rd, hop, &mut rng);
                tally.rd_bit_errors += bit_errors(&decoded, &out);
                out
            }
        };
        tally.record_packet(bit_errors(&bits, &received), n);
        if baseline != Baseline::ConvSd {
            tally.wait_slots += 1;
        }
    }
    Ok(tally)
}
